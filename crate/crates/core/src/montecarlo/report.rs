use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, Model, Statistic};
use crate::distributions::CorankPmf;
use crate::stats::{wilson_interval, ChiSquare, Z95};

/// Echo of the configuration, with `m = floor(alpha n)` resolved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model: Model,
    pub statistic: Statistic,
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    pub q: f64,
    pub p: u32,
    pub trials: u64,
    pub seed: u64,
}

impl ConfigEcho {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            model: cfg.model,
            statistic: cfg.statistic,
            n: cfg.params.n,
            m: match cfg.model {
                Model::Bipartite => cfg.params.m(),
                Model::Er => 0,
                Model::IidRect { u } => cfg.params.n + u,
            },
            alpha: cfg.params.alpha,
            q: cfg.params.q,
            p: cfg.params.p,
            trials: cfg.trials,
            seed: cfg.params.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub outcome: usize,
    pub count: u64,
    pub frequency: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ConfigEcho,
    /// What each outcome value counts: `"corank"` or `"rank_deficiency"`.
    pub outcome: String,
    pub counts: BTreeMap<usize, u64>,
    pub pmf: Vec<OutcomeRow>,
    pub tv_distance: Option<f64>,
    pub chi_square: Option<ChiSquare>,
    /// Filled in by callers that time the run; absent from deterministic
    /// output.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<u64>,
    pub seed_rule: String,
}

impl ExperimentReport {
    pub(crate) fn build(
        config: ConfigEcho,
        outcome: &str,
        counts: BTreeMap<usize, u64>,
        comparison: Option<&CorankPmf>,
        seed_rule: &str,
    ) -> Self {
        let trials: u64 = counts.values().sum();
        let pmf = counts
            .iter()
            .map(|(&k, &c)| {
                let (lo, hi) = wilson_interval(c, trials, Z95);
                OutcomeRow {
                    outcome: k,
                    count: c,
                    frequency: c as f64 / trials as f64,
                    wilson_lo: lo,
                    wilson_hi: hi,
                    theory: comparison.map(|t| t.get(k)),
                }
            })
            .collect();
        let (tv_distance, chi_square) = match comparison {
            Some(theory) => {
                let empirical = CorankPmf::from_counts(theory.p, &counts);
                let pairs: Vec<(usize, u64)> = counts.iter().map(|(&k, &c)| (k, c)).collect();
                (
                    Some(crate::stats::tv_distance(&empirical, theory)),
                    Some(crate::stats::chi_square(&pairs, theory)),
                )
            }
            None => (None, None),
        };
        Self {
            config,
            outcome: outcome.to_string(),
            counts,
            pmf,
            tv_distance,
            chi_square,
            wall_time_ms: None,
            seed_rule: seed_rule.to_string(),
        }
    }

    pub fn trials(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn frequency(&self, outcome: usize) -> f64 {
        self.counts.get(&outcome).copied().unwrap_or(0) as f64 / self.trials() as f64
    }

    pub fn empirical_pmf(&self) -> CorankPmf {
        CorankPmf::from_counts(self.config.p, &self.counts)
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|(&k, &c)| k as f64 * c as f64).sum::<f64>() / self.trials() as f64
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},count,frequency,wilson_lo,wilson_hi,theory\n", self.outcome);
        for row in &self.pmf {
            let theory = row.theory.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.outcome, row.count, row.frequency, row.wilson_lo, row.wilson_hi, theory
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionBucket {
    /// Codimension of the row space when the row was exposed.
    pub codim: usize,
    pub exposures: u64,
    pub hits_in_span: u64,
    pub frequency: f64,
    /// `1 / p^(codim - 1)`
    pub expected: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl EvolutionBucket {
    pub fn half_width(&self) -> f64 {
        (self.wilson_hi - self.wilson_lo) / 2.0
    }

    /// Deviation from the prediction in Wilson half-widths.
    pub fn deviation(&self) -> f64 {
        (self.frequency - self.expected).abs() / self.half_width()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEvolutionReport {
    pub config: ConfigEcho,
    pub delta: f64,
    /// Number of final rows whose exposure was recorded.
    pub recorded_rows: usize,
    pub buckets: Vec<EvolutionBucket>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<u64>,
    pub seed_rule: String,
}

impl RankEvolutionReport {
    pub fn bucket(&self, codim: usize) -> Option<&EvolutionBucket> {
        self.buckets.iter().find(|b| b.codim == codim)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("codim,exposures,hits_in_span,frequency,expected,wilson_lo,wilson_hi\n");
        for b in &self.buckets {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                b.codim, b.exposures, b.hits_in_span, b.frequency, b.expected, b.wilson_lo, b.wilson_hi
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub alpha: f64,
    pub n: usize,
    pub m: usize,
    pub trials: u64,
    pub mean_corank: f64,
    /// `None` for a single trial.
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSweepTable {
    pub p: u32,
    pub q: f64,
    pub seed: u64,
    pub cells: Vec<PhaseCell>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<u64>,
    pub seed_rule: String,
}

impl PhaseSweepTable {
    pub fn cell(&self, alpha: f64, n: usize) -> Option<&PhaseCell> {
        self.cells.iter().find(|c| c.alpha == alpha && c.n == n)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,n,m,trials,mean_corank,stderr\n");
        for c in &self.cells {
            let stderr = c.stderr.map(|s| s.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{},{}", c.alpha, c.n, c.m, c.trials, c.mean_corank, stderr);
        }
        out
    }
}
