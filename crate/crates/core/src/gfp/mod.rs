//! Dense linear algebra over `Z/pZ` for small primes.
//!
//! Entries are stored one residue per `u32` cell. For `p = 2` the rank
//! computations switch to the bit-packed kernel in [`bits`], which is what
//! the Monte Carlo hot loop runs on.

pub mod bits;
mod tracker;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bits::BitMatrix;
pub use tracker::{RankTracker, RowExposure};

/// Largest admissible modulus (exclusive). Products of two residues plus a
/// residue stay below `2^32`.
pub const MAX_MODULUS: u32 = 1 << 16;

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u32;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A prime modulus with a precomputed constant for division-free reduction
/// of 32-bit values (Lemire's fastmod).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modulus {
    p: u32,
    magic: u64,
}

impl Modulus {
    pub fn new(p: u32) -> Result<Self> {
        if p >= MAX_MODULUS || !is_prime(p) {
            return Err(Error::InvalidModulus(p));
        }
        Ok(Self {
            p,
            magic: (u64::MAX / p as u64).wrapping_add(1),
        })
    }

    #[inline]
    pub fn value(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(self, x: u32) -> u32 {
        let low = self.magic.wrapping_mul(x as u64);
        ((low as u128 * self.p as u128) >> 64) as u32
    }

    /// Reduces an arbitrary signed integer into `[0, p)`.
    #[inline]
    pub fn reduce_i64(self, x: i64) -> u32 {
        x.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        self.reduce(a * b)
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    pub fn inv(self, a: u32) -> u32 {
        debug_assert!(a != 0 && a < self.p);
        // Fermat: a^(p-2).
        let mut result = 1u32;
        let mut base = a;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }

    /// `dst[k] += f * src[k]` for every `k`.
    #[inline]
    pub(crate) fn axpy(self, dst: &mut [u32], src: &[u32], f: u32) {
        for (d, &s) in dst.iter_mut().zip(src) {
            *d = self.reduce(*d + f * s);
        }
    }
}

/// A vector over `Z/pZ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GfVector {
    p: u32,
    entries: Vec<u32>,
}

impl GfVector {
    pub fn new(p: u32, entries: Vec<u32>) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        let entries = entries.into_iter().map(|e| modulus.reduce(e)).collect();
        Ok(Self { p, entries })
    }

    pub fn from_i64(p: u32, entries: &[i64]) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        Ok(Self {
            p,
            entries: entries.iter().map(|&e| modulus.reduce_i64(e)).collect(),
        })
    }

    pub fn zeros(p: u32, len: usize) -> Result<Self> {
        Modulus::new(p)?;
        Ok(Self {
            p,
            entries: vec![0; len],
        })
    }

    pub fn ones(p: u32, len: usize) -> Result<Self> {
        Modulus::new(p)?;
        Ok(Self {
            p,
            entries: vec![1; len],
        })
    }

    pub fn unit(p: u32, len: usize, index: usize) -> Result<Self> {
        let mut v = Self::zeros(p, len)?;
        if index >= len {
            return Err(Error::IndexOutOfBounds { index, len });
        }
        v.entries[index] = 1;
        Ok(v)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<u32> {
        self.entries
    }

    pub fn dot(&self, other: &GfVector) -> Result<u32> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let p = self.p as u64;
        Ok((self
            .entries
            .iter()
            .zip(&other.entries)
            .fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % p)) as u32)
    }

    /// `self - a * 1`.
    pub fn shifted(&self, a: u32) -> GfVector {
        let p = self.p;
        let a = a % p;
        GfVector {
            p,
            entries: self.entries.iter().map(|&e| (e + p - a) % p).collect(),
        }
    }
}

/// Dense row-major matrix over `Z/pZ`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GfMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl fmt::Debug for GfMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GfMatrix(p={}, {}x{})", self.p, self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl GfMatrix {
    /// Builds a matrix from row-major residues. Entries are reduced mod `p`.
    pub fn new(p: u32, rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        if entries.len() != rows * cols {
            return Err(Error::EntryCount {
                rows,
                cols,
                got: entries.len(),
            });
        }
        let entries = entries.into_iter().map(|e| modulus.reduce(e)).collect();
        Ok(Self {
            p,
            rows,
            cols,
            entries,
        })
    }

    pub fn from_i64(p: u32, rows: usize, cols: usize, entries: &[i64]) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        if entries.len() != rows * cols {
            return Err(Error::EntryCount {
                rows,
                cols,
                got: entries.len(),
            });
        }
        Ok(Self {
            p,
            rows,
            cols,
            entries: entries.iter().map(|&e| modulus.reduce_i64(e)).collect(),
        })
    }

    pub fn from_rows(p: u32, cols: usize, rows: &[GfVector]) -> Result<Self> {
        Modulus::new(p)?;
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for v in rows {
            if v.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: v.len(),
                });
            }
            if v.p() != p {
                return Err(Error::InvalidParameter(format!(
                    "vector modulus {} differs from matrix modulus {p}",
                    v.p()
                )));
            }
            entries.extend_from_slice(v.entries());
        }
        Ok(Self {
            p,
            rows: rows.len(),
            cols,
            entries,
        })
    }

    pub fn zeros(p: u32, rows: usize, cols: usize) -> Result<Self> {
        Modulus::new(p)?;
        Ok(Self {
            p,
            rows,
            cols,
            entries: vec![0; rows * cols],
        })
    }

    pub fn identity(p: u32, n: usize) -> Result<Self> {
        let mut m = Self::zeros(p, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn modulus(&self) -> Modulus {
        Modulus::new(self.p).expect("validated at construction")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: u32) {
        self.entries[r * self.cols + c] = value % self.p;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_vector(&self, r: usize) -> GfVector {
        GfVector {
            p: self.p,
            entries: self.row(r).to_vec(),
        }
    }

    pub fn row_vectors(&self) -> Vec<GfVector> {
        (0..self.rows).map(|r| self.row_vector(r)).collect()
    }

    pub fn transpose(&self) -> GfMatrix {
        let mut entries = vec![0; self.entries.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                entries[c * self.rows + r] = self.get(r, c);
            }
        }
        GfMatrix {
            p: self.p,
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn mul_vec(&self, v: &GfVector) -> Result<GfVector> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        let p = self.p as u64;
        let entries = (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v.entries())
                    .fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % p)
                    as u32
            })
            .collect();
        Ok(GfVector { p: self.p, entries })
    }

    /// Submatrix on the given rows and columns (both strictly increasing).
    pub fn restrict(&self, row_set: &[usize], col_set: &[usize]) -> Result<GfMatrix> {
        check_index_set(row_set, self.rows)?;
        check_index_set(col_set, self.cols)?;
        let mut entries = Vec::with_capacity(row_set.len() * col_set.len());
        for &r in row_set {
            let row = self.row(r);
            entries.extend(col_set.iter().map(|&c| row[c]));
        }
        Ok(GfMatrix {
            p: self.p,
            rows: row_set.len(),
            cols: col_set.len(),
            entries,
        })
    }

    /// Bit-packed copy. Only meaningful for `p = 2`.
    pub fn to_bits(&self) -> BitMatrix {
        let mut bits = BitMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, &e) in self.row(r).iter().enumerate() {
                if e & 1 == 1 {
                    bits.set(r, c, true);
                }
            }
        }
        bits
    }

    /// Rank and right-nullity (`cols - rank`).
    pub fn rank_and_corank(&self) -> (usize, usize) {
        let rank = if self.p == 2 {
            self.to_bits().rank()
        } else {
            self.clone().echelonize_in_place(false).len()
        };
        (rank, self.cols - rank)
    }

    pub fn rank(&self) -> usize {
        self.rank_and_corank().0
    }

    pub fn corank(&self) -> usize {
        self.rank_and_corank().1
    }

    /// Gaussian elimination on `self`, destroying its contents. Returns the
    /// pivot columns. With `reduced`, the result is the reduced row echelon
    /// form with unit pivots; otherwise rows below each pivot are cleared and
    /// pivot rows are left unnormalized.
    ///
    /// Pivots are the first nonzero entry scanning columns left to right and
    /// rows top-down.
    pub fn echelonize_in_place(&mut self, reduced: bool) -> Vec<usize> {
        let modulus = self.modulus();
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..cols {
            if pivot_row == self.rows {
                break;
            }
            let Some(found) = (pivot_row..self.rows).find(|&r| self.get(r, col) != 0) else {
                continue;
            };
            self.swap_rows(found, pivot_row);
            if reduced {
                let inv = modulus.inv(self.get(pivot_row, col));
                let row = &mut self.entries[pivot_row * cols..(pivot_row + 1) * cols];
                for e in &mut row[col..] {
                    *e = modulus.mul(*e, inv);
                }
            }
            let pivot_inv = modulus.inv(self.get(pivot_row, col));
            let first_target = if reduced { 0 } else { pivot_row + 1 };
            for r in first_target..self.rows {
                let lead = self.get(r, col);
                if r == pivot_row || lead == 0 {
                    continue;
                }
                let f = modulus.neg(modulus.mul(lead, pivot_inv));
                let (src, dst) = self.two_rows_mut(pivot_row, r);
                modulus.axpy(&mut dst[col..], &src[col..], f);
            }
            pivots.push(col);
            pivot_row += 1;
        }
        pivots
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (GfMatrix, Vec<usize>) {
        let mut m = self.clone();
        let pivots = m.echelonize_in_place(true);
        (m, pivots)
    }

    /// Basis of the right nullspace `{v : m v = 0}`, returned in reduced
    /// echelon form.
    pub fn nullspace_basis(&self) -> Vec<GfVector> {
        let modulus = self.modulus();
        let (rref, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::with_capacity(self.cols - pivots.len());
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0u32; self.cols];
            v[free] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = modulus.neg(rref.get(r, free));
            }
            basis.push(v);
        }
        if basis.is_empty() {
            return Vec::new();
        }
        let k = basis.len();
        let flat = basis.into_iter().flatten().collect();
        let (canon, _) = GfMatrix {
            p: self.p,
            rows: k,
            cols: self.cols,
            entries: flat,
        }
        .rref();
        canon.row_vectors()
    }

    /// True iff `v` is an `F_p`-combination of the rows of `self`.
    pub fn in_row_span(&self, v: &GfVector) -> Result<bool> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        if v.p() != self.p {
            return Err(Error::InvalidParameter(format!(
                "vector modulus {} differs from matrix modulus {}",
                v.p(),
                self.p
            )));
        }
        let tracker = RankTracker::from_matrix(self);
        tracker.contains(v)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (head, tail) = self.entries.split_at_mut(hi * cols);
        head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
    }

    pub fn scale_row(&mut self, r: usize, factor: u32) {
        let modulus = self.modulus();
        let factor = factor % self.p;
        let cols = self.cols;
        for e in &mut self.entries[r * cols..(r + 1) * cols] {
            *e = modulus.mul(*e, factor);
        }
    }

    fn two_rows_mut(&mut self, src: usize, dst: usize) -> (&[u32], &mut [u32]) {
        let cols = self.cols;
        if src < dst {
            let (head, tail) = self.entries.split_at_mut(dst * cols);
            (&head[src * cols..(src + 1) * cols], &mut tail[..cols])
        } else {
            let (head, tail) = self.entries.split_at_mut(src * cols);
            (&tail[..cols], &mut head[dst * cols..(dst + 1) * cols])
        }
    }
}

pub(crate) fn check_index_set(set: &[usize], len: usize) -> Result<()> {
    if set.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnorderedIndexSet);
    }
    if let Some(&last) = set.last() {
        if last >= len {
            return Err(Error::IndexOutOfBounds { index: last, len });
        }
    }
    Ok(())
}
