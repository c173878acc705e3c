//! Smith normal form over the integers and sandpile-group invariants.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gfp::{GfMatrix, Modulus};

/// Dense row-major integer matrix with arbitrary-precision entries.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix({}x{})", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|e| e.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::EntryCount {
                rows,
                cols,
                got: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&e| BigInt::from(e)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.entries[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn diagonal(rows: usize, cols: usize, diag: &[BigInt]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, d) in diag.iter().enumerate().take(rows.min(cols)) {
            m.entries[i * cols + i] = d.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: BigInt) {
        self.entries[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_sums(&self) -> Vec<BigInt> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn transpose(&self) -> IntMatrix {
        let mut t = IntMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.entries[c * self.rows + r] = self.get(r, c).clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Entrywise reduction into `[0, p)`.
    pub fn to_gf(&self, p: u32) -> Result<GfMatrix> {
        Modulus::new(p)?;
        let modulus = BigInt::from(p);
        let entries = self
            .entries
            .iter()
            .map(|e| e.mod_floor(&modulus).to_u32().expect("residue below p"))
            .collect();
        GfMatrix::new(p, self.rows, self.cols, entries)
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<BigInt> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut a: Vec<Vec<BigInt>> = (0..n).map(|r| self.row(r).to_vec()).collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k][k].is_zero() {
                let Some(swap) = (k + 1..n).find(|&i| !a[i][k].is_zero()) else {
                    return Ok(BigInt::zero());
                };
                a.swap(k, swap);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                    a[i][j] = num / &prev;
                }
            }
            prev = a[k][k].clone();
        }
        Ok(sign * &a[n - 1][n - 1])
    }
}

/// Nonzero invariant factors `d_1 | d_2 | ... | d_r` (units included) plus
/// the free rank of the cokernel `Z^rows / M Z^cols`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantFactors {
    pub diag: Vec<BigInt>,
    pub free_rank: usize,
}

impl InvariantFactors {
    /// The factors greater than one, i.e. the cyclic factors of the torsion
    /// subgroup.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diag.iter().filter(|d| !d.is_one()).cloned().collect()
    }

    pub fn rank(&self) -> usize {
        self.diag.len()
    }

    /// Number of listed factors divisible by `p`.
    pub fn p_rank(&self, p: u32) -> usize {
        let p = BigInt::from(p);
        self.diag.iter().filter(|d| d.is_multiple_of(&p)).count()
    }
}

pub fn p_rank(factors: &InvariantFactors, p: u32) -> usize {
    factors.p_rank(p)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub factors: InvariantFactors,
    /// Unimodular row transform.
    pub u: IntMatrix,
    /// Unimodular column transform; `u * m * v` is diagonal.
    pub v: IntMatrix,
}

impl SmithForm {
    pub fn diagonal(&self) -> IntMatrix {
        IntMatrix::diagonal(self.u.rows(), self.v.cols(), &self.factors.diag)
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let mut work = Work::new(m, true);
    work.run();
    let factors = work.factors();
    let (u, v) = work.transforms();
    SmithForm { factors, u, v }
}

/// Invariant factors only; skips building the transforms.
pub fn invariant_factors(m: &IntMatrix) -> InvariantFactors {
    let mut work = Work::new(m, false);
    work.run();
    work.factors()
}

/// Invariants of `Z^N / L Z^N` with one free summand removed, for a
/// Laplacian `L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandpileGroup {
    /// Nonzero invariant factors; `free_rank` counts free summands left
    /// after removing one.
    pub factors: InvariantFactors,
    /// Set when the cokernel had free rank above one (e.g. disconnected
    /// graphs); the remaining free summands are reported in `factors`.
    pub flagged: bool,
}

impl SandpileGroup {
    pub fn torsion(&self) -> Vec<BigInt> {
        self.factors.torsion()
    }

    pub fn p_rank(&self, p: u32) -> usize {
        self.factors.p_rank(p)
    }

    /// `#Γ` when the group is finite.
    pub fn order(&self) -> Option<BigInt> {
        (self.factors.free_rank == 0).then(|| self.factors.diag.iter().product())
    }
}

pub fn sandpile_invariants(laplacian: &IntMatrix) -> Result<SandpileGroup> {
    if laplacian.rows() != laplacian.cols() {
        return Err(Error::DimensionMismatch {
            expected: laplacian.rows(),
            got: laplacian.cols(),
        });
    }
    for (row, sum) in laplacian.row_sums().into_iter().enumerate() {
        if !sum.is_zero() {
            return Err(Error::NotLaplacian {
                row,
                sum: sum.to_string(),
            });
        }
    }
    let mut factors = invariant_factors(laplacian);
    if factors.free_rank == 0 {
        // only reachable for the 0x0 matrix
        return Ok(SandpileGroup {
            factors,
            flagged: true,
        });
    }
    let flagged = factors.free_rank > 1;
    factors.free_rank -= 1;
    Ok(SandpileGroup { factors, flagged })
}

struct Work {
    rows: usize,
    cols: usize,
    a: Vec<Vec<BigInt>>,
    u: Option<Vec<Vec<BigInt>>>,
    // stored transposed so column operations on v are row operations here
    vt: Option<Vec<Vec<BigInt>>>,
    rank: usize,
}

fn identity_rows(n: usize) -> Vec<Vec<BigInt>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                .collect()
        })
        .collect()
}

/// `dst -= q * src`
fn sub_mul(dst: &mut [BigInt], src: &[BigInt], q: &BigInt) {
    for (d, s) in dst.iter_mut().zip(src) {
        if !s.is_zero() {
            *d -= q * s;
        }
    }
}

impl Work {
    fn new(m: &IntMatrix, track: bool) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            a: (0..m.rows).map(|r| m.row(r).to_vec()).collect(),
            u: track.then(|| identity_rows(m.rows)),
            vt: track.then(|| identity_rows(m.cols)),
            rank: 0,
        }
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        self.a.swap(i, j);
        if let Some(u) = &mut self.u {
            u.swap(i, j);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        for row in &mut self.a {
            row.swap(i, j);
        }
        if let Some(vt) = &mut self.vt {
            vt.swap(i, j);
        }
    }

    /// row_i -= q * row_t
    fn row_sub(&mut self, i: usize, t: usize, q: &BigInt) {
        let (src, dst) = pair_mut(&mut self.a, t, i);
        sub_mul(dst, src, q);
        if let Some(u) = &mut self.u {
            let (src, dst) = pair_mut(u, t, i);
            sub_mul(dst, src, q);
        }
    }

    /// col_j -= q * col_t
    fn col_sub(&mut self, j: usize, t: usize, q: &BigInt) {
        for row in &mut self.a {
            if !row[t].is_zero() {
                let delta = q * &row[t];
                row[j] -= delta;
            }
        }
        if let Some(vt) = &mut self.vt {
            let (src, dst) = pair_mut(vt, t, j);
            sub_mul(dst, src, q);
        }
    }

    fn negate_row(&mut self, t: usize) {
        for e in &mut self.a[t] {
            *e = -&*e;
        }
        if let Some(u) = &mut self.u {
            for e in &mut u[t] {
                *e = -&*e;
            }
        }
    }

    fn min_abs_in_block(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.rows {
            for j in t..self.cols {
                let e = &self.a[i][j];
                if e.is_zero() {
                    continue;
                }
                match best {
                    Some((bi, bj)) if self.a[bi][bj].abs() <= e.abs() => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        best
    }

    fn run(&mut self) {
        let limit = self.rows.min(self.cols);
        for t in 0..limit {
            let Some((i, j)) = self.min_abs_in_block(t) else {
                break;
            };
            self.swap_rows(t, i);
            self.swap_cols(t, j);
            loop {
                if self.clear_cross(t) {
                    continue;
                }
                if let Some(i) = self.non_divisible_row(t) {
                    // row_t += row_i brings the offending entries into row t
                    self.row_sub(t, i, &BigInt::from(-1));
                    continue;
                }
                break;
            }
            if self.a[t][t].is_negative() {
                self.negate_row(t);
            }
            self.rank = t + 1;
        }
    }

    /// Reduces column `t` below and row `t` right of the pivot by Euclidean
    /// division. Returns true when a nonzero remainder forced a new pivot.
    fn clear_cross(&mut self, t: usize) -> bool {
        let pivot = self.a[t][t].clone();
        for i in t + 1..self.rows {
            if !self.a[i][t].is_zero() {
                let q = self.a[i][t].div_floor(&pivot);
                self.row_sub(i, t, &q);
            }
        }
        for j in t + 1..self.cols {
            if !self.a[t][j].is_zero() {
                let q = self.a[t][j].div_floor(&pivot);
                self.col_sub(j, t, &q);
            }
        }
        // smallest leftover in the cross becomes the new pivot
        let mut best: Option<(bool, usize, BigInt)> = None;
        for i in t + 1..self.rows {
            let e = self.a[i][t].abs();
            if !e.is_zero() && best.as_ref().is_none_or(|b| e < b.2) {
                best = Some((true, i, e));
            }
        }
        for j in t + 1..self.cols {
            let e = self.a[t][j].abs();
            if !e.is_zero() && best.as_ref().is_none_or(|b| e < b.2) {
                best = Some((false, j, e));
            }
        }
        match best {
            None => false,
            Some((true, i, _)) => {
                self.swap_rows(t, i);
                true
            }
            Some((false, j, _)) => {
                self.swap_cols(t, j);
                true
            }
        }
    }

    fn non_divisible_row(&self, t: usize) -> Option<usize> {
        let pivot = &self.a[t][t];
        if pivot.abs().is_one() {
            return None;
        }
        (t + 1..self.rows).find(|&i| {
            self.a[i][t + 1..]
                .iter()
                .any(|e| !e.is_multiple_of(pivot))
        })
    }

    fn factors(&self) -> InvariantFactors {
        InvariantFactors {
            diag: (0..self.rank).map(|t| self.a[t][t].clone()).collect(),
            free_rank: self.rows - self.rank,
        }
    }

    fn transforms(self) -> (IntMatrix, IntMatrix) {
        let u = self.u.expect("transforms tracked");
        let vt = self.vt.expect("transforms tracked");
        let u = IntMatrix {
            rows: self.rows,
            cols: self.rows,
            entries: u.into_iter().flatten().collect(),
        };
        let vt = IntMatrix {
            rows: self.cols,
            cols: self.cols,
            entries: vt.into_iter().flatten().collect(),
        };
        (u, vt.transpose())
    }
}

fn pair_mut<T>(v: &mut [T], src: usize, dst: usize) -> (&T, &mut T) {
    assert_ne!(src, dst);
    if src < dst {
        let (head, tail) = v.split_at_mut(dst);
        (&head[src], &mut tail[0])
    } else {
        let (head, tail) = v.split_at_mut(src);
        (&tail[0], &mut head[dst])
    }
}
