//! Small statistics helpers shared by the experiment harness.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::distributions::CorankPmf;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `(1/2) sum_k |a(k) - b(k)|` over the union of supports.
pub fn tv_distance(a: &CorankPmf, b: &CorankPmf) -> f64 {
    let support: BTreeSet<usize> = a.mass.keys().chain(b.mass.keys()).copied().collect();
    0.5 * support.iter().map(|&k| (a.get(k) - b.get(k)).abs()).sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
}

/// Pearson statistic of observed counts against `expected` probabilities.
///
/// Outcomes are walked in increasing order and pooled until each bin's
/// expected count reaches 5; the final bin absorbs the remaining upper tail
/// (including expected mass outside the table).
pub fn chi_square(counts: &[(usize, u64)], expected: &CorankPmf) -> ChiSquare {
    let trials: u64 = counts.iter().map(|c| c.1).sum();
    if trials == 0 {
        return ChiSquare {
            statistic: 0.0,
            dof: 0,
        };
    }
    let t = trials as f64;
    let observed = |k: usize| -> u64 {
        counts.iter().filter(|c| c.0 == k).map(|c| c.1).sum()
    };
    let max_key = counts
        .iter()
        .map(|c| c.0)
        .chain(expected.mass.keys().copied())
        .max()
        .unwrap_or(0);

    let mut bins: Vec<(f64, u64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0u64);
    for k in 0..=max_key {
        e_acc += expected.get(k) * t;
        o_acc += observed(k);
        if e_acc >= 5.0 {
            bins.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0;
        }
    }
    // leftover tail, plus whatever expected mass the table does not cover
    let uncovered = (1.0 - expected.total()).max(0.0) * t;
    e_acc += uncovered;
    if let Some(last) = bins.last_mut() {
        if e_acc < 5.0 {
            last.0 += e_acc;
            last.1 += o_acc;
        } else {
            bins.push((e_acc, o_acc));
        }
    } else {
        bins.push((e_acc, o_acc));
    }
    let statistic = bins
        .iter()
        .filter(|(e, _)| *e > 0.0)
        .map(|&(e, o)| (o as f64 - e).powi(2) / e)
        .sum();
    ChiSquare {
        statistic,
        dof: bins.len().saturating_sub(1),
    }
}

/// Mean and standard error of a sample; the error is `None` below two
/// observations.
pub fn mean_and_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, Some((var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::PmfKind;
    use std::collections::BTreeMap;

    fn pmf(entries: &[(usize, f64)]) -> CorankPmf {
        CorankPmf {
            p: 2,
            kind: PmfKind::Empirical,
            mass: entries.iter().copied().collect::<BTreeMap<_, _>>(),
            truncation_error: 0.0,
        }
    }

    #[test]
    fn tv_examples() {
        let a = pmf(&[(1, 0.5), (2, 0.5)]);
        assert_eq!(tv_distance(&a, &a), 0.0);
        assert_eq!(tv_distance(&pmf(&[(1, 1.0)]), &pmf(&[(3, 1.0)])), 1.0);
        assert_eq!(tv_distance(&a, &pmf(&[(1, 1.0)])), 0.5);
    }

    #[test]
    fn wilson_properties() {
        let (lo, hi) = wilson_interval(50, 100, Z95);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert!(lo < 1e-15);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, Z95);
        assert!(lo > 0.95 && hi == 1.0);
    }

    #[test]
    fn chi_square_pools_small_bins() {
        let expected = pmf(&[(1, 0.5), (2, 0.4), (3, 0.1)]);
        let c = chi_square(&[(1, 50), (2, 40), (3, 10)], &expected);
        assert!(c.statistic.abs() < 1e-12);
        assert_eq!(c.dof, 2);
        // with 20 trials the corank-3 bin (expected 2) is pooled into corank 2
        let c = chi_square(&[(1, 10), (2, 8), (3, 2)], &expected);
        assert_eq!(c.dof, 1);
    }

    #[test]
    fn stderr_needs_two_values() {
        assert_eq!(mean_and_stderr(&[3.0]), (3.0, None));
        let (m, s) = mean_and_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s.unwrap() - 1.0).abs() < 1e-12);
    }
}
