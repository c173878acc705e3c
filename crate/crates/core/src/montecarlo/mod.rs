//! Reproducible Monte Carlo experiments.
//!
//! Trial `t` of a run with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` on stream `t`, so results depend only on
//! the configuration and never on the worker count. Per-trial outcomes are
//! collected in trial order before any aggregation.

mod report;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use report::{
    ConfigEcho, EvolutionBucket, ExperimentReport, OutcomeRow, PhaseCell, PhaseSweepTable, RankEvolutionReport,
};
pub use crate::stats::tv_distance;

use crate::distributions::{pmf_table, CorankPmf, PmfKind, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::gfp::{BitMatrix, GfMatrix, RankTracker};
use crate::graph::{self, ModelParams};
use crate::snf;
use crate::stats::{mean_and_stderr, wilson_interval, Z95};

pub const SEED_RULE: &str = "trial t uses ChaCha8Rng::seed_from_u64(seed) with set_stream(t)";
pub const SWEEP_SEED_RULE: &str =
    "cell c, trial t uses ChaCha8Rng::seed_from_u64(seed) with set_stream(c * 2^32 + t)";

/// Largest table index used for theoretical comparisons.
const COMPARISON_KMAX: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Model {
    /// Directed bipartite graph on `n + floor(alpha n)` vertices.
    Bipartite,
    /// Directed Erdős–Rényi graph on `n` vertices.
    Er,
    /// `n x (n + u)` matrix with iid Bernoulli(q) entries.
    IidRect { u: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Statistic {
    Corank,
    /// Span hits of the final `floor(delta n)` exposed rows.
    RankEvolution { delta: f64 },
    /// Rank deficiency of the first `row_count` rows.
    FullRankAt { row_count: usize },
    /// Corank recovered from the integer Smith normal form.
    SnfSample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub params: ModelParams,
    pub trials: u64,
    pub statistic: Statistic,
    /// Theory to compare against; defaults to the model's limit law.
    #[serde(default)]
    pub comparison: Option<PmfKind>,
}

impl ExperimentConfig {
    pub fn new(model: Model, params: ModelParams, trials: u64, statistic: Statistic) -> Self {
        Self {
            model,
            params,
            trials,
            statistic,
            comparison: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        match self.statistic {
            Statistic::RankEvolution { delta } if !(delta > 0.0 && delta <= 1.0) => Err(Error::InvalidParameter(
                format!("delta must satisfy 0 < delta <= 1, got {delta}"),
            )),
            Statistic::FullRankAt { row_count } if row_count == 0 || row_count > self.rows() => {
                Err(Error::InvalidParameter(format!(
                    "row_count must lie in 1..={}, got {row_count}",
                    self.rows()
                )))
            }
            Statistic::SnfSample if !self.is_laplacian() => {
                Err(Error::InvalidParameter("snf_sample needs a graph model".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn rows(&self) -> usize {
        match self.model {
            Model::Bipartite => self.params.vertices(),
            Model::Er | Model::IidRect { .. } => self.params.n,
        }
    }

    pub fn cols(&self) -> usize {
        match self.model {
            Model::Bipartite => self.params.vertices(),
            Model::Er => self.params.n,
            Model::IidRect { u } => self.params.n + u,
        }
    }

    fn is_laplacian(&self) -> bool {
        !matches!(self.model, Model::IidRect { .. })
    }

    /// The comparison law actually used.
    pub fn comparison_kind(&self) -> PmfKind {
        self.comparison.unwrap_or(match self.model {
            Model::Bipartite | Model::Er => PmfKind::Theorem,
            Model::IidRect { u } => PmfKind::Iid { u: u as u32 },
        })
    }
}

pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `f` on `0..trials` and returns outputs in trial order. `threads == 0`
/// lets the pool pick.
#[cfg(feature = "parallel")]
fn map_trials<T, F>(trials: u64, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..trials).into_par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn map_trials<T, F>(trials: u64, _threads: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> T,
{
    Ok((0..trials).map(f).collect())
}

enum Sampled {
    Packed(BitMatrix),
    Dense(GfMatrix),
}

impl Sampled {
    fn rank(&self) -> usize {
        match self {
            Sampled::Packed(b) => b.rank(),
            Sampled::Dense(m) => m.rank(),
        }
    }

    fn rows(&self) -> usize {
        match self {
            Sampled::Packed(b) => b.rows(),
            Sampled::Dense(m) => m.rows(),
        }
    }

    fn cols(&self) -> usize {
        match self {
            Sampled::Packed(b) => b.cols(),
            Sampled::Dense(m) => m.cols(),
        }
    }

    /// Feeds rows `0..count` to `tracker`, reporting each exposure.
    fn expose(&self, tracker: &mut RankTracker, count: usize, mut each: impl FnMut(usize, usize, bool)) {
        for r in 0..count {
            let codim = tracker.codim();
            let exposure = match self {
                Sampled::Packed(b) => tracker.add_words(b.row_words(r)),
                Sampled::Dense(m) => tracker.add_residues(m.row(r)),
            }
            .expect("row width matches tracker");
            each(r, codim, exposure.in_span);
        }
    }
}

fn sample(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Sampled> {
    let ModelParams { n, q, p, .. } = cfg.params;
    Ok(match (cfg.model, p == 2) {
        (Model::Bipartite, true) => Sampled::Packed(graph::sample_bipartite_laplacian_gf2(&cfg.params, rng)),
        (Model::Bipartite, false) => Sampled::Dense(graph::sample_bipartite_laplacian_mod_p(&cfg.params, rng)?),
        (Model::Er, true) => Sampled::Packed(graph::sample_er_laplacian_gf2(n, q, rng)),
        (Model::Er, false) => Sampled::Dense(graph::sample_er_laplacian_mod_p(n, q, p, rng)?),
        (Model::IidRect { u }, true) => Sampled::Packed(graph::sample_iid_matrix_gf2(n, n + u, q, rng)),
        (Model::IidRect { u }, false) => Sampled::Dense(graph::sample_iid_matrix(n, n + u, q, p, rng)?),
    })
}

fn comparison_table(cfg: &ExperimentConfig) -> Result<CorankPmf> {
    pmf_table(cfg.params.p, cfg.comparison_kind(), COMPARISON_KMAX, DEFAULT_TOLERANCE)
}

fn tally(values: impl IntoIterator<Item = usize>) -> BTreeMap<usize, u64> {
    let mut counts = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts
}

fn expect_statistic(cfg: &ExperimentConfig, ok: bool, name: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} called with statistic {:?}",
            cfg.statistic
        )))
    }
}

/// Dispatches on `cfg.statistic` for the statistics that yield an outcome
/// histogram.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    match cfg.statistic {
        Statistic::Corank => run_corank_experiment(cfg, threads),
        Statistic::FullRankAt { .. } => run_full_rank_frequency(cfg, threads),
        Statistic::SnfSample => run_snf_experiment(cfg, threads),
        Statistic::RankEvolution { .. } => Err(Error::InvalidParameter(
            "rank evolution produces a RankEvolutionReport; use run_rank_evolution".into(),
        )),
    }
}

/// Corank histogram of the sampled matrices, compared with the limit law.
///
/// Fails with [`Error::InvariantViolation`] if a Laplacian ever has corank
/// zero.
pub fn run_corank_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    expect_statistic(cfg, cfg.statistic == Statistic::Corank, "run_corank_experiment")?;
    cfg.validate()?;
    let seed = cfg.params.seed;
    let coranks = map_trials(cfg.trials, threads, |t| {
        let m = sample(cfg, &mut trial_rng(seed, t))?;
        Ok::<_, Error>(m.cols() - m.rank())
    })?;
    let mut values = Vec::with_capacity(coranks.len());
    for (t, c) in coranks.into_iter().enumerate() {
        let c = c?;
        if cfg.is_laplacian() && c == 0 {
            return Err(Error::InvariantViolation(format!("trial {t}: Laplacian with corank 0")));
        }
        values.push(c);
    }
    let theory = comparison_table(cfg)?;
    Ok(ExperimentReport::build(
        ConfigEcho::new(cfg),
        "corank",
        tally(values),
        Some(&theory),
        SEED_RULE,
    ))
}

/// Histogram of `row_count - rank` over the first `row_count` rows. The
/// full-rank frequency is the mass at zero.
pub fn run_full_rank_frequency(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    let Statistic::FullRankAt { row_count } = cfg.statistic else {
        return expect_statistic(cfg, false, "run_full_rank_frequency").map(|_| unreachable!());
    };
    cfg.validate()?;
    let seed = cfg.params.seed;
    let deficits = map_trials(cfg.trials, threads, |t| {
        let m = sample(cfg, &mut trial_rng(seed, t))?;
        let mut tracker = RankTracker::new(cfg.params.p, m.cols())?;
        m.expose(&mut tracker, row_count, |_, _, _| {});
        Ok::<_, Error>(row_count - tracker.rank())
    })?;
    let values = deficits.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::build(
        ConfigEcho::new(cfg),
        "rank_deficiency",
        tally(values),
        None,
        SEED_RULE,
    ))
}

/// Corank read off the integer Smith normal form of each sampled Laplacian
/// (free rank plus the number of factors divisible by `p`). Each trial is
/// cross-checked against the corank over `Z/pZ`.
pub fn run_snf_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    expect_statistic(cfg, cfg.statistic == Statistic::SnfSample, "run_snf_experiment")?;
    cfg.validate()?;
    let (seed, p) = (cfg.params.seed, cfg.params.p);
    let outcomes = map_trials(cfg.trials, threads, |t| {
        let mut rng = trial_rng(seed, t);
        let lap = match cfg.model {
            Model::Bipartite => graph::laplacian(&graph::sample_bipartite_digraph(&cfg.params, &mut rng)),
            Model::Er => graph::laplacian(&graph::sample_er_digraph(cfg.params.n, cfg.params.q, &mut rng)),
            Model::IidRect { .. } => unreachable!("rejected by validate"),
        };
        let group = snf::sandpile_invariants(&lap)?;
        let via_snf = group.factors.free_rank + 1 + group.p_rank(p);
        let direct = lap.to_gf(p)?.corank();
        if via_snf != direct {
            return Err(Error::InvariantViolation(format!(
                "trial {t}: corank from SNF {via_snf} differs from corank mod {p} {direct}"
            )));
        }
        Ok(via_snf)
    })?;
    let values = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let theory = comparison_table(cfg)?;
    Ok(ExperimentReport::build(
        ConfigEcho::new(cfg),
        "corank",
        tally(values),
        Some(&theory),
        SEED_RULE,
    ))
}

/// Exposes all rows in order and records, for each of the final
/// `floor(delta n)`, the codimension before exposure and whether the row
/// already lay in the span.
pub fn run_rank_evolution(cfg: &ExperimentConfig, threads: usize) -> Result<RankEvolutionReport> {
    let Statistic::RankEvolution { delta } = cfg.statistic else {
        return expect_statistic(cfg, false, "run_rank_evolution").map(|_| unreachable!());
    };
    cfg.validate()?;
    let rows = cfg.rows();
    let recorded = ((delta * cfg.params.n as f64 + 1e-9).floor() as usize).min(rows);
    let first_recorded = rows - recorded;
    let (seed, p) = (cfg.params.seed, cfg.params.p);
    let per_trial = map_trials(cfg.trials, threads, |t| {
        let m = sample(cfg, &mut trial_rng(seed, t))?;
        let mut tracker = RankTracker::new(p, m.cols())?;
        let mut events = Vec::with_capacity(recorded);
        m.expose(&mut tracker, m.rows(), |r, codim, hit| {
            if r >= first_recorded {
                events.push((codim, hit));
            }
        });
        Ok::<_, Error>(events)
    })?;

    let mut tallies: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    for events in per_trial {
        for (codim, hit) in events? {
            let e = tallies.entry(codim).or_insert((0, 0));
            e.0 += 1;
            e.1 += hit as u64;
        }
    }
    let buckets = tallies
        .into_iter()
        .map(|(codim, (exposures, hits))| {
            let (lo, hi) = wilson_interval(hits, exposures, Z95);
            EvolutionBucket {
                codim,
                exposures,
                hits_in_span: hits,
                frequency: hits as f64 / exposures as f64,
                expected: span_hit_prediction(p, codim),
                wilson_lo: lo,
                wilson_hi: hi,
            }
        })
        .collect();
    Ok(RankEvolutionReport {
        config: ConfigEcho::new(cfg),
        delta,
        recorded_rows: recorded,
        buckets,
        wall_time_ms: None,
        seed_rule: SEED_RULE.to_string(),
    })
}

/// Predicted probability that a Laplacian row lands in a span of
/// codimension `codim`: `p^-(codim - 1)`, or 1 when the span is the whole
/// zero-sum hyperplane.
pub fn span_hit_prediction(p: u32, codim: usize) -> f64 {
    if codim <= 1 {
        1.0
    } else {
        (p as f64).powi(-(codim as i32 - 1))
    }
}

/// Mean Laplacian corank over a grid of `(alpha, n)` cells, using the
/// bipartite model with `base`'s `q`, `p` and seed.
pub fn run_phase_sweep(
    alphas: &[f64],
    ns: &[usize],
    base: &ModelParams,
    trials: u64,
    threads: usize,
) -> Result<PhaseSweepTable> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut cells = Vec::with_capacity(alphas.len() * ns.len());
    let mut index = 0u64;
    for &alpha in alphas {
        for &n in ns {
            let params = ModelParams { n, alpha, ..base.clone() };
            params.validate()?;
            let cfg = ExperimentConfig::new(Model::Bipartite, params.clone(), trials, Statistic::Corank);
            let coranks = map_trials(trials, threads, |t| {
                let m = sample(&cfg, &mut trial_rng(base.seed, (index << 32) | t))?;
                Ok::<_, Error>((m.cols() - m.rank()) as f64)
            })?
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let (mean, stderr) = mean_and_stderr(&coranks);
            cells.push(PhaseCell {
                alpha,
                n,
                m: params.m(),
                trials,
                mean_corank: mean,
                stderr,
            });
            index += 1;
        }
    }
    Ok(PhaseSweepTable {
        p: base.p,
        q: base.q,
        seed: base.seed,
        cells,
        wall_time_ms: None,
        seed_rule: SWEEP_SEED_RULE.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, p: u32) -> ModelParams {
        ModelParams {
            n,
            alpha: 1.0,
            q: 0.5,
            p,
            seed: 7,
        }
    }

    #[test]
    fn streams_differ_and_repeat() {
        use rand::RngCore;
        let a = trial_rng(1, 0).next_u64();
        assert_eq!(a, trial_rng(1, 0).next_u64());
        assert_ne!(a, trial_rng(1, 1).next_u64());
        assert_ne!(a, trial_rng(2, 0).next_u64());
    }

    #[test]
    fn corank_report_is_consistent() {
        let cfg = ExperimentConfig::new(Model::Bipartite, params(12, 3), 200, Statistic::Corank);
        let r = run_corank_experiment(&cfg, 1).unwrap();
        assert_eq!(r.trials(), 200);
        assert!(r.counts.keys().all(|&k| k >= 1));
        assert_eq!(r.config.m, 12);
        let total: f64 = r.pmf.iter().map(|row| row.frequency).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(r.tv_distance.is_some());
        assert!(!r.to_json().contains("wall_time_ms"));
        assert!(r.to_csv().starts_with("corank,count"));
    }

    #[test]
    fn packed_and_dense_paths_agree() {
        // p = 2 takes the packed path; the dense reference is rebuilt from the
        // same stream
        let cfg = ExperimentConfig::new(Model::Bipartite, params(20, 2), 50, Statistic::Corank);
        let r = run_corank_experiment(&cfg, 1).unwrap();
        let mut counts = BTreeMap::new();
        for t in 0..50 {
            let m = graph::sample_bipartite_laplacian_mod_p(&cfg.params, &mut trial_rng(7, t)).unwrap();
            *counts.entry(m.corank()).or_insert(0u64) += 1;
        }
        assert_eq!(r.counts, counts);
    }

    #[test]
    fn snf_and_mod_p_coranks_match() {
        let mut p = params(6, 2);
        p.q = 0.3;
        let snf_cfg = ExperimentConfig::new(Model::Bipartite, p.clone(), 40, Statistic::SnfSample);
        let direct = ExperimentConfig::new(Model::Bipartite, p, 40, Statistic::Corank);
        assert_eq!(
            run_snf_experiment(&snf_cfg, 1).unwrap().counts,
            run_corank_experiment(&direct, 1).unwrap().counts
        );
    }

    #[test]
    fn wrong_statistic_is_rejected() {
        let cfg = ExperimentConfig::new(Model::Bipartite, params(4, 2), 1, Statistic::Corank);
        assert!(run_rank_evolution(&cfg, 1).is_err());
        assert!(run_full_rank_frequency(&cfg, 1).is_err());
        let mut bad = cfg.clone();
        bad.statistic = Statistic::FullRankAt { row_count: 100 };
        assert!(matches!(run_full_rank_frequency(&bad, 1), Err(Error::InvalidParameter(_))));
        let iid = ExperimentConfig::new(Model::IidRect { u: 1 }, params(4, 2), 1, Statistic::SnfSample);
        assert!(iid.validate().is_err());
    }

    #[test]
    fn rank_evolution_records_final_rows() {
        let cfg = ExperimentConfig::new(
            Model::Bipartite,
            params(10, 2),
            30,
            Statistic::RankEvolution { delta: 0.5 },
        );
        let r = run_rank_evolution(&cfg, 1).unwrap();
        assert_eq!(r.recorded_rows, 5);
        let exposures: u64 = r.buckets.iter().map(|b| b.exposures).sum();
        assert_eq!(exposures, 150);
        assert!(r.buckets.iter().all(|b| b.codim >= 1));
    }

    #[test]
    fn phase_sweep_grid() {
        let t = run_phase_sweep(&[0.5, 1.0], &[8, 16], &params(1, 2), 5, 1).unwrap();
        assert_eq!(t.cells.len(), 4);
        assert_eq!(t.cell(0.5, 16).unwrap().m, 8);
        assert!(t.cells.iter().all(|c| c.mean_corank >= 1.0 && c.stderr.is_some()));
        let single = run_phase_sweep(&[1.0], &[4], &params(1, 2), 1, 1).unwrap();
        assert_eq!(single.cells[0].stderr, None);
    }
}
