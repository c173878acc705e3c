//! Limiting corank distributions as truncated `q`-Pochhammer products.
//!
//! All tables are keyed by corank. For the Laplacian limit the mass of
//! `k` sits under corank `1 + k`; for the `n x (n + u)` iid model under
//! `u + k` (right nullity of a matrix with `u` surplus columns).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfp::is_prime;

/// Truncation tolerance used by the CLI and the harness.
pub const DEFAULT_TOLERANCE: f64 = 1e-15;

/// `prod_{i=from}^{I} (1 - p^-i)`, where `I` is the first index with
/// `sum_{i>I} p^-i = p^-I / (p - 1) < tol`.
pub fn q_product(p: u32, from: u32, tol: f64) -> f64 {
    assert!(p >= 2, "q_product needs p >= 2");
    assert!(from >= 1, "q_product starts at i >= 1");
    assert!(tol > 0.0 && tol < 1.0, "tolerance must lie in (0, 1)");
    let inv_p = 1.0 / p as f64;
    let mut term = inv_p.powi(from as i32);
    let mut product = 1.0;
    // the tail after the current index is term / (p - 1)
    loop {
        product *= 1.0 - term;
        if term / (p as f64 - 1.0) < tol || term == 0.0 {
            return product;
        }
        term *= inv_p;
    }
}

/// `prod_{i=1}^{k} (1 - p^-i)`, exact up to rounding.
fn finite_product(p: u32, k: u32) -> f64 {
    let inv_p = 1.0 / p as f64;
    let mut term = 1.0;
    let mut product = 1.0;
    for _ in 0..k {
        term *= inv_p;
        product *= 1.0 - term;
    }
    product
}

/// `p^{-e}` for possibly huge `e`; underflows cleanly to zero.
fn inv_power(p: u32, e: u64) -> f64 {
    if e > i32::MAX as u64 {
        return 0.0;
    }
    (p as f64).powi(-(e as i32))
}

/// Limit of `P(corank(M / p) = 1 + k)` for the directed bipartite Laplacian.
pub fn theorem_pmf(p: u32, k: u32, tol: f64) -> f64 {
    let k64 = k as u64;
    inv_power(p, k64 * k64 + k64) * q_product(p, k + 2, tol) / finite_product(p, k)
}

/// Limit of `P(n - rank = k)` for an `n x (n + u)` matrix with iid entries.
pub fn iid_pmf(p: u32, u: u32, k: u32, tol: f64) -> f64 {
    let (k64, u64_) = (k as u64, u as u64);
    inv_power(p, k64 * (u64_ + k64)) * q_product(p, k + 1, tol) / finite_product(p, k + u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PmfKind {
    Theorem,
    Iid { u: u32 },
    Empirical,
}

impl PmfKind {
    /// Corank at which the mass of `k` is stored.
    pub fn offset(self) -> usize {
        match self {
            PmfKind::Theorem => 1,
            PmfKind::Iid { u } => u as usize,
            PmfKind::Empirical => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorankPmf {
    pub p: u32,
    pub kind: PmfKind,
    /// corank -> probability
    pub mass: BTreeMap<usize, f64>,
    /// `1 - sum(mass)` for theoretical tables; zero for empirical ones.
    pub truncation_error: f64,
}

impl CorankPmf {
    pub fn get(&self, corank: usize) -> f64 {
        self.mass.get(&corank).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Empirical pmf from corank counts.
    pub fn from_counts(p: u32, counts: &BTreeMap<usize, u64>) -> Self {
        let trials: u64 = counts.values().sum();
        let mass = counts
            .iter()
            .map(|(&c, &n)| (c, if trials == 0 { 0.0 } else { n as f64 / trials as f64 }))
            .collect();
        Self {
            p,
            kind: PmfKind::Empirical,
            mass,
            truncation_error: 0.0,
        }
    }
}

/// Tabulates `k = 0..=k_max` of a theoretical distribution.
pub fn pmf_table(p: u32, kind: PmfKind, k_max: u32, tol: f64) -> Result<CorankPmf> {
    if !is_prime(p) {
        return Err(Error::InvalidModulus(p));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let eval: Box<dyn Fn(u32) -> f64> = match kind {
        PmfKind::Theorem => Box::new(|k| theorem_pmf(p, k, tol)),
        PmfKind::Iid { u } => Box::new(move |k| iid_pmf(p, u, k, tol)),
        PmfKind::Empirical => {
            return Err(Error::InvalidParameter("empirical pmfs are not tabulated".into()))
        }
    };
    let offset = kind.offset();
    let mass: BTreeMap<usize, f64> = (0..=k_max).map(|k| (offset + k as usize, eval(k))).collect();
    let truncation_error = 1.0 - mass.values().sum::<f64>();
    Ok(CorankPmf {
        p,
        kind,
        mass,
        truncation_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from a 30-digit evaluation of the infinite products
    const PROD_2_FROM_1: f64 = 0.288_788_095_086_602_42;
    const PROD_2_FROM_2: f64 = 0.577_576_190_173_204_84;
    const THEOREM_2_1: f64 = 0.385_050_793_448_803_23;
    const PROD_3_FROM_1: f64 = 0.560_126_077_927_948_94;

    #[test]
    fn q_product_reference_values() {
        assert!((q_product(2, 1, 1e-12) - PROD_2_FROM_1).abs() < 1e-12);
        assert!((q_product(2, 2, 1e-12) - PROD_2_FROM_2).abs() < 1e-12);
        assert!((q_product(3, 1, 1e-12) - PROD_3_FROM_1).abs() < 1e-12);
    }

    #[test]
    fn q_product_tail_only() {
        for p in [2u32, 3, 5, 7] {
            let tol = 1e-6;
            // from chosen so that p^-from < tol
            let from = (1..).find(|&f| (p as f64).powi(-f) < tol).unwrap() as u32;
            let v = q_product(p, from, tol);
            assert!(v <= 1.0 && v > 1.0 - tol * p as f64 / (p as f64 - 1.0));
        }
    }

    #[test]
    fn q_product_monotone_in_start() {
        for p in [2u32, 3, 5] {
            let vals: Vec<f64> = (1..30).map(|f| q_product(p, f, 1e-15)).collect();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            assert!(vals.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn theorem_examples() {
        assert!((theorem_pmf(2, 0, 1e-12) - PROD_2_FROM_2).abs() < 1e-12);
        assert!((theorem_pmf(2, 1, 1e-12) - THEOREM_2_1).abs() < 1e-12);
    }

    #[test]
    fn iid_examples() {
        assert!((iid_pmf(2, 0, 0, 1e-12) - PROD_2_FROM_1).abs() < 1e-12);
        assert!((iid_pmf(3, 0, 0, 1e-12) - PROD_3_FROM_1).abs() < 1e-12);
        assert!((iid_pmf(2, 60, 0, 1e-17) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn theorem_is_iid_with_one_surplus_column() {
        for p in [2u32, 3, 5, 7] {
            for k in 0..=20 {
                let a = theorem_pmf(p, k, DEFAULT_TOLERANCE);
                let b = iid_pmf(p, 1, k, DEFAULT_TOLERANCE);
                assert!((a - b).abs() <= 1e-12, "p={p} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn successive_ratio_decay() {
        // exact ratio: p^{-2(k+1)} / ((1 - p^{-(k+1)}) (1 - p^{-(k+2)}))
        for p in [2u32, 3, 5, 7] {
            for k in 0..12 {
                let (a, b) = (theorem_pmf(p, k, 1e-15), theorem_pmf(p, k + 1, 1e-15));
                if a < 1e-250 {
                    break;
                }
                let pf = p as f64;
                let bound = pf.powi(-2 * (k as i32 + 1));
                let exact = bound / ((1.0 - pf.powi(-(k as i32 + 1))) * (1.0 - pf.powi(-(k as i32 + 2))));
                assert!((b / a - exact).abs() <= 1e-9 * exact);
                // the coarse factor-2 bound fails only at p = 2, k = 0 (ratio 2/3)
                if (p, k) != (2, 0) {
                    assert!(b / a < 2.0 * bound, "p={p} k={k}");
                }
            }
        }
        assert!((theorem_pmf(2, 1, 1e-15) / theorem_pmf(2, 0, 1e-15) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tables() {
        for (p, k_max) in [(2u32, 40u32), (3, 40), (5, 10)] {
            let t = pmf_table(p, PmfKind::Theorem, k_max, DEFAULT_TOLERANCE).unwrap();
            assert!((t.total() - 1.0).abs() <= 1e-9);
            assert!(t.truncation_error.abs() <= 1e-9);
            assert_eq!(*t.mass.keys().next().unwrap(), 1);
        }
        let t = pmf_table(3, PmfKind::Theorem, 0, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(t.mass.len(), 1);
        assert_eq!(t.get(1), theorem_pmf(3, 0, DEFAULT_TOLERANCE));

        let a = pmf_table(2, PmfKind::Theorem, 5, DEFAULT_TOLERANCE).unwrap();
        let b = pmf_table(2, PmfKind::Iid { u: 1 }, 5, DEFAULT_TOLERANCE).unwrap();
        for (x, y) in a.mass.iter().zip(&b.mass) {
            assert_eq!(x.0, y.0);
            assert!((x.1 - y.1).abs() < 1e-12);
        }
        assert!(pmf_table(4, PmfKind::Theorem, 3, 1e-12).is_err());
        assert!(pmf_table(2, PmfKind::Empirical, 3, 1e-12).is_err());
    }
}
