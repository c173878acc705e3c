mod args;
mod config;

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Map, Value};

use sandpile_core::distributions::{pmf_table, CorankPmf, PmfKind, DEFAULT_TOLERANCE};
use sandpile_core::graph::{laplacian, BipartiteDigraph, Digraph};
use sandpile_core::montecarlo::{self, ExperimentConfig, Model, Statistic};
use sandpile_core::snf::{invariant_factors, sandpile_invariants, InvariantFactors};
use sandpile_core::structure::{self, LaplacianRowLaw};
use sandpile_core::{textfmt, Error, IntMatrix, ModelParams};

use args::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files; exit 2.
    Input(String),
    /// A violated internal invariant or an output failure; exit 1.
    Internal(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Pmf(a) => cmd_pmf(a),
        Command::Snf(a) => cmd_snf(a),
        Command::RankEvolution(a) => cmd_rank_evolution(a),
        Command::PhaseSweep(a) => cmd_phase_sweep(a),
        Command::Structure(a) => cmd_structure(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn threads(common: &Common) -> CliResult<usize> {
    match common.threads.as_deref() {
        None | Some("auto") => Ok(0),
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::Input(format!("--threads must be a positive count or \"auto\", got {s:?}"))),
        },
    }
}

fn emit(common: &Common, text: &str) -> CliResult<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn json_only(common: &Common, command: &str) -> CliResult<()> {
    if common.format == Some(Format::Csv) {
        return Err(CliError::Input(format!("{command} only writes JSON")));
    }
    Ok(())
}

fn model_params(flags: &ModelFlags) -> ModelParams {
    ModelParams {
        n: flags.n.unwrap_or(64),
        alpha: flags.alpha.unwrap_or(1.0),
        q: flags.q.unwrap_or(0.5),
        p: flags.p.unwrap_or(2),
        seed: flags.seed.unwrap_or(0),
    }
}

fn model(arg: Option<ModelArg>, u: Option<usize>) -> Model {
    match arg.unwrap_or(ModelArg::Bipartite) {
        ModelArg::Bipartite => Model::Bipartite,
        ModelArg::Er => Model::Er,
        ModelArg::Iid => Model::IidRect { u: u.unwrap_or(1) },
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn cmd_simulate(cli: &SimulateArgs) -> CliResult<()> {
    let a = config::resolve(cli, cli.common.config.as_deref())?;
    let params = model_params(&a.model_flags);
    let statistic = match a.statistic.unwrap_or(StatisticArg::Corank) {
        StatisticArg::Corank => Statistic::Corank,
        StatisticArg::SnfSample => Statistic::SnfSample,
        StatisticArg::FullRankAt => Statistic::FullRankAt {
            row_count: a.row_count.unwrap_or(params.n),
        },
    };
    let cfg = ExperimentConfig::new(model(a.model, a.u), params, a.model_flags.trials.unwrap_or(1000), statistic);
    let start = Instant::now();
    let mut report = montecarlo::run_experiment(&cfg, threads(&a.common)?)?;
    if a.common.timing {
        report.wall_time_ms = Some(elapsed_ms(start));
    }
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => emit(&a.common, &report.to_json()),
        Format::Csv => emit(&a.common, &report.to_csv()),
    }
}

fn cmd_pmf(cli: &PmfArgs) -> CliResult<()> {
    let a = config::resolve(cli, cli.common.config.as_deref())?;
    let kmax = a.kmax.unwrap_or(20);
    let kmax = u32::try_from(kmax).map_err(|_| CliError::Input(format!("--kmax must be non-negative, got {kmax}")))?;
    let kind = match a.kind.unwrap_or(KindArg::Theorem) {
        KindArg::Theorem => PmfKind::Theorem,
        KindArg::Iid => PmfKind::Iid { u: a.u.unwrap_or(1) },
    };
    let table = pmf_table(a.p.unwrap_or(2), kind, kmax, a.tol.unwrap_or(DEFAULT_TOLERANCE))?;
    match a.common.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(&a.common, &pmf_csv(&table)),
        Format::Json => emit(&a.common, &serde_json::to_string_pretty(&table).expect("pmf serializes")),
    }
}

fn pmf_csv(table: &CorankPmf) -> String {
    let mut out = String::from("corank,probability\n");
    for (corank, mass) in &table.mass {
        let _ = writeln!(out, "{corank},{mass}");
    }
    let _ = writeln!(out, "# truncation_error,{}", table.truncation_error);
    out
}

fn int_value(d: &BigInt) -> Value {
    match d.to_u64() {
        Some(v) => json!(v),
        None => json!(d.to_string()),
    }
}

fn factors_json(f: &InvariantFactors, flagged: bool, primes: &[u32]) -> Map<String, Value> {
    let p_rank: Map<String, Value> = primes.iter().map(|&p| (p.to_string(), json!(f.p_rank(p)))).collect();
    let mut out = Map::new();
    out.insert("invariants".into(), Value::Array(f.diag.iter().map(int_value).collect()));
    out.insert("torsion".into(), Value::Array(f.torsion().iter().map(int_value).collect()));
    out.insert("free_rank".into(), json!(f.free_rank));
    out.insert("flagged".into(), json!(flagged));
    out.insert("p_rank".into(), Value::Object(p_rank));
    out
}

fn sandpile_json(lap: &IntMatrix, primes: &[u32]) -> CliResult<Map<String, Value>> {
    let g = sandpile_invariants(lap)?;
    let mut out = factors_json(&g.factors, g.flagged, primes);
    out.insert("order".into(), g.order().as_ref().map(int_value).unwrap_or(Value::Null));
    Ok(out)
}

fn parse_graph(text: &str) -> CliResult<IntMatrix> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CliError::Input(format!("graph JSON does not parse: {e}")))?;
    let lap = if value.get("edges_12").is_some() {
        let g: BipartiteDigraph =
            serde_json::from_value(value).map_err(|e| CliError::Input(format!("invalid bipartite graph: {e}")))?;
        laplacian(&g)
    } else {
        let g: Digraph = serde_json::from_value(value).map_err(|e| CliError::Input(format!("invalid digraph: {e}")))?;
        laplacian(&g)
    };
    Ok(lap)
}

fn cmd_snf(cli: &SnfArgs) -> CliResult<()> {
    let a = config::resolve(cli, cli.common.config.as_deref())?;
    json_only(&a.common, "snf")?;
    let path = a.input.as_deref().ok_or_else(|| CliError::Input("snf needs an input file".into()))?;
    let text = read_input(path)?;
    let primes = a.primes.clone().unwrap_or_else(|| vec![2, 3, 5, 7]);
    for &p in &primes {
        if !sandpile_core::gfp::is_prime(p) {
            return Err(CliError::Input(format!("--primes entry {p} is not prime")));
        }
    }

    let mut out = Map::new();
    if text.trim_start().starts_with('{') {
        let lap = parse_graph(&text)?;
        out.insert("source".into(), json!("graph"));
        out.insert("group".into(), json!("sandpile"));
        out.insert("vertices".into(), json!(lap.rows()));
        out.extend(sandpile_json(&lap, &primes)?);
    } else {
        let (_, m) = textfmt::parse_int(&text)?;
        let f = invariant_factors(&m);
        out.insert("source".into(), json!("matrix"));
        out.insert("group".into(), json!("cokernel"));
        out.insert("rows".into(), json!(m.rows()));
        out.insert("cols".into(), json!(m.cols()));
        let flagged = f.free_rank > 1;
        out.extend(factors_json(&f, flagged, &primes));
        let is_laplacian = m.rows() == m.cols() && m.row_sums().iter().all(|s| s == &BigInt::ZERO);
        if is_laplacian && m.rows() > 0 {
            out.insert("sandpile".into(), Value::Object(sandpile_json(&m, &primes)?));
        }
    }
    emit(&a.common, &serde_json::to_string_pretty(&Value::Object(out)).expect("json"))
}

fn cmd_rank_evolution(cli: &RankEvolutionArgs) -> CliResult<()> {
    let a = config::resolve(cli, cli.common.config.as_deref())?;
    let cfg = ExperimentConfig::new(
        model(a.model, a.u),
        model_params(&a.model_flags),
        a.model_flags.trials.unwrap_or(1000),
        Statistic::RankEvolution {
            delta: a.delta.unwrap_or(0.5),
        },
    );
    let start = Instant::now();
    let mut report = montecarlo::run_rank_evolution(&cfg, threads(&a.common)?)?;
    if a.common.timing {
        report.wall_time_ms = Some(elapsed_ms(start));
    }
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => emit(&a.common, &report.to_json()),
        Format::Csv => emit(&a.common, &report.to_csv()),
    }
}

fn cmd_phase_sweep(cli: &PhaseSweepArgs) -> CliResult<()> {
    let a = config::resolve(cli, cli.common.config.as_deref())?;
    let alphas = a.alphas.clone().unwrap_or_else(|| vec![0.25, 0.5, 1.0]);
    let ns = a.ns.clone().unwrap_or_else(|| vec![40, 80]);
    let base = ModelParams {
        n: 1,
        alpha: 1.0,
        q: a.q.unwrap_or(0.5),
        p: a.p.unwrap_or(2),
        seed: a.seed.unwrap_or(0),
    };
    let start = Instant::now();
    let mut table = montecarlo::run_phase_sweep(&alphas, &ns, &base, a.trials.unwrap_or(200), threads(&a.common)?)?;
    if a.common.timing {
        table.wall_time_ms = Some(elapsed_ms(start));
    }
    match a.common.format.unwrap_or(Format::Json) {
        Format::Json => emit(&a.common, &table.to_json()),
        Format::Csv => emit(&a.common, &table.to_csv()),
    }
}

fn read_vector(path: &Path, p: Option<u32>) -> CliResult<sandpile_core::GfVector> {
    let m = textfmt::parse_gf(&read_input(path)?)?;
    if m.rows() != 1 {
        return Err(CliError::Input(format!(
            "{} must hold a single row, found {} rows",
            path.display(),
            m.rows()
        )));
    }
    if let Some(p) = p {
        if p != m.p() {
            return Err(CliError::Input(format!("--p {p} disagrees with the file modulus {}", m.p())));
        }
    }
    Ok(m.row_vector(0))
}

fn cmd_structure(cli: &StructureArgs) -> CliResult<()> {
    let a = config::resolve(cli, cli.common.config.as_deref())?;
    json_only(&a.common, "structure")?;
    let q = a.q.unwrap_or(0.5);
    let mut out = Map::new();

    if let Some(path) = &a.rho_l {
        let w = read_vector(path, a.p)?;
        let n = a.n.unwrap_or(w.len() / 2);
        let j = a.neg_sum_index.unwrap_or(n);
        let law = LaplacianRowLaw::new(n, w.len(), j, q, w.p())?;
        let m = structure::min_nonconstant_support(&w, n);
        out.insert(
            "rho_l".into(),
            json!({
                "value": structure::rho_l(&w, &law)?,
                "min_nonconstant_support": m,
                "bound": structure::concentration_bound(m, w.p()),
                "bound_applies": (w.p() as f64) < (m as f64).sqrt(),
                "n": n,
                "neg_sum_index": j,
                "q": q,
                "p": w.p(),
            }),
        );
    }
    if let Some(path) = &a.support {
        let w = read_vector(path, a.p)?;
        let n = a.n.unwrap_or(w.len());
        if n > w.len() {
            return Err(CliError::Input(format!("--n {n} exceeds the vector length {}", w.len())));
        }
        out.insert(
            "min_nonconstant_support".into(),
            json!({ "value": structure::min_nonconstant_support(&w, n), "n": n }),
        );
    }
    if a.zero_sum {
        let n = a.n.ok_or_else(|| CliError::Input("--zero-sum needs --n".into()))?;
        let p = a.p.unwrap_or(2);
        sandpile_core::gfp::Modulus::new(p)?;
        if !(q > 0.0 && q < 1.0) {
            return Err(CliError::Input(format!("q must satisfy 0 < q < 1, got {q}")));
        }
        out.insert(
            "zero_sum".into(),
            json!({
                "value": structure::zero_sum_prob(n, q, p),
                "deviation": structure::zero_sum_deviation(n, q, p),
                "bound": structure::concentration_bound(n, p),
                "n": n,
                "q": q,
                "p": p,
            }),
        );
    }
    if out.is_empty() {
        return Err(CliError::Input("structure needs --rho-l, --support or --zero-sum".into()));
    }
    emit(&a.common, &serde_json::to_string_pretty(&Value::Object(out)).expect("json"))
}
