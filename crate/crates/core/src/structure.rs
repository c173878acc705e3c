//! Exact structural diagnostics for Laplacian row laws.
//!
//! A Laplacian row law is the distribution of
//! `X = (x_1, ..., x_n, 0, ..., -sum x_i, 0, ..., 0)` with iid
//! Bernoulli(q) coordinates `x_i` and the compensating entry at a fixed
//! position outside the first `n`. These routines evaluate, exactly, how
//! far `X . w` is from uniform, how often sums vanish mod `p`, and how often
//! `X` lands in a given subspace.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfp::{GfMatrix, GfVector, Modulus, RankTracker};
use crate::stats::{wilson_interval, Z95};

/// Enumeration cap for brute-force routines (`2^n` supports).
pub const MAX_ENUMERATION_BITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacianRowLaw {
    /// Number of iid coordinates (positions `0..n`).
    pub n: usize,
    pub total_dim: usize,
    /// 0-based position of the `-sum x_i` entry; `n <= neg_sum_index < total_dim`.
    pub neg_sum_index: usize,
    pub q: f64,
    pub p: u32,
}

impl LaplacianRowLaw {
    pub fn new(n: usize, total_dim: usize, neg_sum_index: usize, q: f64, p: u32) -> Result<Self> {
        Modulus::new(p)?;
        if n >= total_dim {
            return Err(Error::InvalidParameter(format!(
                "iid block size {n} must be below the dimension {total_dim}"
            )));
        }
        if neg_sum_index < n || neg_sum_index >= total_dim {
            return Err(Error::InvalidParameter(format!(
                "the -sum entry must sit in {n}..{total_dim}, got {neg_sum_index}"
            )));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("q must satisfy 0 < q < 1, got {q}")));
        }
        Ok(Self {
            n,
            total_dim,
            neg_sum_index,
            q,
            p,
        })
    }

    /// The row law of a `V2` vertex `j` in the bipartite Laplacian on
    /// `n + m` vertices: iid out-edges to `V1`, diagonal at `n + j`.
    pub fn bipartite_v2_row(n: usize, m: usize, j: usize, q: f64, p: u32) -> Result<Self> {
        Self::new(n, n + m, n + j, q, p)
    }

    fn check(&self, w: &GfVector) -> Result<()> {
        if w.len() != self.total_dim {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim,
                got: w.len(),
            });
        }
        if w.p() != self.p {
            return Err(Error::InvalidParameter(format!(
                "vector modulus {} differs from law modulus {}",
                w.p(),
                self.p
            )));
        }
        Ok(())
    }

    /// Realisation of `X` for the support encoded in the low `n` bits.
    fn realise(&self, support: u64) -> Vec<u32> {
        let mut x = vec![0u32; self.total_dim];
        let mut ones = 0u64;
        for (i, xi) in x.iter_mut().enumerate().take(self.n) {
            if support >> i & 1 == 1 {
                *xi = 1;
                ones += 1;
            }
        }
        let p = self.p as u64;
        x[self.neg_sum_index] = ((p - ones % p) % p) as u32;
        x
    }

    fn support_weight(&self, support: u64) -> f64 {
        let k = support.count_ones() as i32;
        self.q.powi(k) * (1.0 - self.q).powi(self.n as i32 - k)
    }
}

/// Exact distribution of `X . w` over `Z/pZ`.
///
/// Since `X . 1 = 0`, `X . w = X . (w - w_j 1)` with `j` the `-sum` position;
/// after that shift only the iid block matters and a `p`-state recursion over
/// the partial dot product suffices.
pub fn dot_distribution(w: &GfVector, law: &LaplacianRowLaw) -> Result<Vec<f64>> {
    law.check(w)?;
    let p = law.p as usize;
    let shifted = w.shifted(w.entries()[law.neg_sum_index]);
    let mut dist = vec![0.0; p];
    dist[0] = 1.0;
    let mut next = vec![0.0; p];
    for &c in &shifted.entries()[..law.n] {
        let c = c as usize;
        if c == 0 {
            continue;
        }
        for (s, &mass) in dist.iter().enumerate() {
            next[s] += (1.0 - law.q) * mass;
            next[(s + c) % p] += law.q * mass;
        }
        std::mem::swap(&mut dist, &mut next);
        next.iter_mut().for_each(|e| *e = 0.0);
    }
    Ok(dist)
}

/// `sup_a |P(X . w = a) - 1/p|`, exactly.
pub fn rho_l(w: &GfVector, law: &LaplacianRowLaw) -> Result<f64> {
    let uniform = 1.0 / law.p as f64;
    Ok(dot_distribution(w, law)?
        .into_iter()
        .map(|m| (m - uniform).abs())
        .fold(0.0, f64::max))
}

/// `min_a |{i < n : w_i != a}|`.
pub fn min_nonconstant_support(w: &GfVector, n: usize) -> usize {
    let window = &w.entries()[..n.min(w.len())];
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &e in window {
        *counts.entry(e).or_default() += 1;
    }
    window.len() - counts.values().copied().max().unwrap_or(0)
}

/// `exp(-m / 2p^2)`, the concentration bound for vectors whose every shift
/// has at least `m` nonzero iid coordinates (meaningful for `p < sqrt(m)`).
pub fn concentration_bound(m: usize, p: u32) -> f64 {
    (-(m as f64) / (2.0 * (p as f64).powi(2))).exp()
}

/// Exact `P(x_1 + ... + x_n = 0 mod p)` for iid Bernoulli(q) `x_i`.
pub fn zero_sum_prob(n: usize, q: f64, p: u32) -> f64 {
    let p = p as usize;
    let mut dist = vec![0.0; p];
    dist[0] = 1.0;
    let mut next = vec![0.0; p];
    for _ in 0..n {
        for (s, &mass) in dist.iter().enumerate() {
            next[s] += (1.0 - q) * mass;
            next[(s + 1) % p] += q * mass;
        }
        std::mem::swap(&mut dist, &mut next);
        next.iter_mut().for_each(|e| *e = 0.0);
    }
    dist[0]
}

/// `P(x_1 + ... + x_n = 0 mod p) - 1/p`, evaluated as the character sum
/// `(1/p) sum_{t != 0} Re((1 - q + q e(t/p))^n)`.
///
/// Keeps full relative precision where the deviation is far below the
/// rounding error of [`zero_sum_prob`].
pub fn zero_sum_deviation(n: usize, q: f64, p: u32) -> f64 {
    let pf = p as f64;
    let total: f64 = (1..p)
        .map(|t| {
            let theta = 2.0 * std::f64::consts::PI * t as f64 / pf;
            let (re, im) = if 2 * t == p {
                // e(1/2) = -1 exactly; avoids a spurious sin(pi) residue
                (1.0 - 2.0 * q, 0.0)
            } else {
                (1.0 - q + q * theta.cos(), q * theta.sin())
            };
            re.hypot(im).powi(n as i32) * (n as f64 * im.atan2(re)).cos()
        })
        .sum();
    total / pf
}

/// `(1 - beta)^codim`.
pub fn odlyzko_bound(beta: f64, codim: usize) -> f64 {
    (1.0 - beta).powi(codim as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdlyzkoCheck {
    pub codim: usize,
    pub hits: u64,
    pub trials: u64,
    pub frequency: f64,
    pub bound: f64,
    /// Binomial standard deviation of the frequency at the bound.
    pub sigma: f64,
    /// `frequency <= bound + 4 sigma`
    pub passes: bool,
}

/// Samples vectors and counts how many satisfy every constraint row of
/// `normals` (i.e. land in `V = {x : normals x = 0}`), then compares with
/// `(1 - beta)^codim V`.
pub fn odlyzko_empirical<R, F>(normals: &GfMatrix, beta: f64, trials: u64, rng: &mut R, mut sample: F) -> Result<OdlyzkoCheck>
where
    R: RngCore + ?Sized,
    F: FnMut(&mut R) -> GfVector,
{
    let codim = normals.rank();
    let mut hits = 0u64;
    for _ in 0..trials {
        let x = sample(rng);
        if normals.mul_vec(&x)?.is_zero() {
            hits += 1;
        }
    }
    let bound = odlyzko_bound(beta, codim);
    let frequency = hits as f64 / trials.max(1) as f64;
    let sigma = (bound * (1.0 - bound) / trials.max(1) as f64).sqrt();
    Ok(OdlyzkoCheck {
        codim,
        hits,
        trials,
        frequency,
        bound,
        sigma,
        passes: frequency <= bound + 4.0 * sigma,
    })
}

fn check_enumerable(law: &LaplacianRowLaw) -> Result<()> {
    if law.n > MAX_ENUMERATION_BITS {
        return Err(Error::TooLarge(format!(
            "{} iid coordinates exceeds the cap of {MAX_ENUMERATION_BITS}",
            law.n
        )));
    }
    Ok(())
}

/// Exact `P(X in H)` by enumerating all `2^n` supports of the iid block.
pub fn subspace_hit_prob_bruteforce(h_basis: &[GfVector], law: &LaplacianRowLaw) -> Result<f64> {
    check_enumerable(law)?;
    let mut tracker = RankTracker::new(law.p, law.total_dim)?;
    for b in h_basis {
        tracker.add_row(b)?;
    }
    let mut prob = 0.0;
    for support in 0..1u64 << law.n {
        let x = GfVector::new(law.p, law.realise(support))?;
        if tracker.contains(&x)? {
            prob += law.support_weight(support);
        }
    }
    Ok(prob)
}

/// `rho_l` by enumerating all `2^n` supports; the reference the recursion
/// in [`rho_l`] is checked against.
pub fn rho_l_bruteforce(w: &GfVector, law: &LaplacianRowLaw) -> Result<f64> {
    law.check(w)?;
    check_enumerable(law)?;
    let p = law.p as u64;
    let mut dist = vec![0.0; law.p as usize];
    for support in 0..1u64 << law.n {
        let x = law.realise(support);
        let dot = x
            .iter()
            .zip(w.entries())
            .fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % p);
        dist[dot as usize] += law.support_weight(support);
    }
    let uniform = 1.0 / law.p as f64;
    Ok(dist.into_iter().map(|m| (m - uniform).abs()).fold(0.0, f64::max))
}

/// Every vector of `span(basis)`, in lexicographic order of coefficients.
/// Capped at `2^MAX_ENUMERATION_BITS` vectors.
pub fn enumerate_span(basis: &[GfVector], p: u32, dim: usize) -> Result<Vec<GfVector>> {
    let count = (p as f64).powi(basis.len() as i32);
    if count > (1u64 << MAX_ENUMERATION_BITS) as f64 {
        return Err(Error::TooLarge(format!(
            "span of {} vectors over F_{p} has {count} elements",
            basis.len()
        )));
    }
    let modulus = Modulus::new(p)?;
    let mut out = Vec::with_capacity(count as usize);
    let mut coeffs = vec![0u32; basis.len()];
    loop {
        let mut v = vec![0u32; dim];
        for (c, b) in coeffs.iter().zip(basis) {
            if *c != 0 {
                modulus.axpy(&mut v, b.entries(), *c);
            }
        }
        out.push(GfVector::new(p, v)?);
        // odometer increment
        let mut i = 0;
        loop {
            if i == coeffs.len() {
                return Ok(out);
            }
            coeffs[i] += 1;
            if coeffs[i] < p {
                break;
            }
            coeffs[i] = 0;
            i += 1;
        }
    }
}

/// Largest `rho_l` over the nonconstant vectors of `span(basis)`; zero when
/// every vector of the span is constant.
pub fn max_rho_nonconstant(basis: &[GfVector], law: &LaplacianRowLaw) -> Result<f64> {
    let mut best = 0.0f64;
    for w in enumerate_span(basis, law.p, law.total_dim)? {
        if is_constant(&w) {
            continue;
        }
        best = best.max(rho_l(&w, law)?);
    }
    Ok(best)
}

fn is_constant(w: &GfVector) -> bool {
    w.entries().windows(2).all(|pair| pair[0] == pair[1])
}

/// Smallest [`min_nonconstant_support`] over the nonconstant right-null
/// vectors of `m` (the normals of its row space), by enumerating the
/// nullspace. `None` when the only null vectors are constant.
pub fn min_normal_support(m: &GfMatrix, n: usize) -> Result<Option<usize>> {
    let basis = m.nullspace_basis();
    let span = enumerate_span(&basis, m.p(), m.cols())?;
    Ok(span
        .iter()
        .filter(|w| !is_constant(w))
        .map(|w| min_nonconstant_support(w, n))
        .min())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinEntropyEstimate {
    /// `1 - max_context max_value P(value | context)`, plug-in.
    pub beta_hat: f64,
    /// Same with each conditional probability replaced by its Wilson 95%
    /// upper bound.
    pub beta_lower: f64,
    pub contexts: usize,
    pub trials: u64,
}

/// Empirical min-entropy of one coordinate conditioned on the others.
///
/// `sample` returns `(context, value)`, where `context` encodes the
/// conditioning entries (or any sufficient statistic of them) and `value`
/// the residue of the coordinate under study.
pub fn min_entropy_estimate<R, F>(mut sample: F, trials: u64, rng: &mut R) -> MinEntropyEstimate
where
    R: RngCore + ?Sized,
    F: FnMut(&mut R) -> (u64, u32),
{
    let mut table: BTreeMap<u64, BTreeMap<u32, u64>> = BTreeMap::new();
    for _ in 0..trials {
        let (ctx, value) = sample(rng);
        *table.entry(ctx).or_default().entry(value).or_default() += 1;
    }
    let mut worst_hat = 0.0f64;
    let mut worst_upper = 0.0f64;
    for values in table.values() {
        let total: u64 = values.values().sum();
        let top = values.values().copied().max().unwrap_or(0);
        worst_hat = worst_hat.max(top as f64 / total as f64);
        worst_upper = worst_upper.max(wilson_interval(top, total, Z95).1);
    }
    MinEntropyEstimate {
        beta_hat: 1.0 - worst_hat,
        beta_lower: 1.0 - worst_upper,
        contexts: table.len(),
        trials,
    }
}
