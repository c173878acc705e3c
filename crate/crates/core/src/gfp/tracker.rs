use super::bits::words_for;
use super::{GfMatrix, GfVector, Modulus};
use crate::error::{Error, Result};

/// Outcome of exposing one more row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RowExposure {
    /// The row already lay in the span of the previously added rows.
    pub in_span: bool,
    /// Codimension of the row space after the addition (`cols - rank`).
    pub codim: usize,
}

#[derive(Clone, Debug)]
enum Basis {
    Dense {
        modulus: Modulus,
        // each row has a unit at its pivot and zeros at the pivots of all
        // rows inserted before it
        rows: Vec<Vec<u32>>,
    },
    Packed {
        rows: Vec<Vec<u64>>,
    },
}

/// Incrementally maintained echelon basis of a growing row space.
///
/// Each `add_*` call costs one reduction pass of the new row against the
/// current basis.
#[derive(Clone, Debug)]
pub struct RankTracker {
    p: u32,
    cols: usize,
    pivots: Vec<usize>,
    basis: Basis,
}

impl RankTracker {
    pub fn new(p: u32, cols: usize) -> Result<Self> {
        let modulus = Modulus::new(p)?;
        let basis = if p == 2 {
            Basis::Packed { rows: Vec::new() }
        } else {
            Basis::Dense {
                modulus,
                rows: Vec::new(),
            }
        };
        Ok(Self {
            p,
            cols,
            pivots: Vec::new(),
            basis,
        })
    }

    pub fn from_matrix(m: &GfMatrix) -> Self {
        let mut t = Self::new(m.p(), m.cols()).expect("matrix modulus already validated");
        for r in 0..m.rows() {
            t.push_residues(m.row(r));
        }
        t
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn codim(&self) -> usize {
        self.cols - self.rank()
    }

    pub fn add_row(&mut self, v: &GfVector) -> Result<RowExposure> {
        self.check_vector(v)?;
        Ok(self.push_residues(v.entries()))
    }

    /// Adds a row given as residues; entries are reduced mod `p`.
    pub fn add_residues(&mut self, row: &[u32]) -> Result<RowExposure> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: row.len(),
            });
        }
        let p = self.p;
        let reduced: Vec<u32> = row.iter().map(|&e| e % p).collect();
        Ok(self.push_residues(&reduced))
    }

    /// Adds a bit-packed row. Only valid for `p = 2`.
    pub fn add_words(&mut self, row: &[u64]) -> Result<RowExposure> {
        let Basis::Packed { rows } = &mut self.basis else {
            return Err(Error::InvalidParameter(
                "packed rows require p = 2".to_string(),
            ));
        };
        let wpr = words_for(self.cols);
        if row.len() != wpr {
            return Err(Error::DimensionMismatch {
                expected: wpr,
                got: row.len(),
            });
        }
        let mut v = row.to_vec();
        if self.cols % 64 != 0 {
            v[wpr - 1] &= (1u64 << (self.cols % 64)) - 1;
        }
        let pivot = reduce_packed(rows, &self.pivots, &mut v);
        Ok(self.finish_packed(pivot, v))
    }

    /// Membership test without modifying the basis.
    pub fn contains(&self, v: &GfVector) -> Result<bool> {
        self.check_vector(v)?;
        Ok(match &self.basis {
            Basis::Dense { modulus, rows } => {
                let mut w = v.entries().to_vec();
                reduce_dense(*modulus, rows, &self.pivots, &mut w).is_none()
            }
            Basis::Packed { rows } => {
                let mut w = pack(v.entries(), self.cols);
                reduce_packed(rows, &self.pivots, &mut w).is_none()
            }
        })
    }

    fn check_vector(&self, v: &GfVector) -> Result<()> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        if v.p() != self.p {
            return Err(Error::InvalidParameter(format!(
                "vector modulus {} differs from tracker modulus {}",
                v.p(),
                self.p
            )));
        }
        Ok(())
    }

    // `row` must already be reduced into [0, p).
    fn push_residues(&mut self, row: &[u32]) -> RowExposure {
        match &mut self.basis {
            Basis::Dense { modulus, rows } => {
                let modulus = *modulus;
                let mut v = row.to_vec();
                match reduce_dense(modulus, rows, &self.pivots, &mut v) {
                    None => RowExposure {
                        in_span: true,
                        codim: self.cols - self.pivots.len(),
                    },
                    Some(pc) => {
                        let inv = modulus.inv(v[pc]);
                        for e in &mut v[pc..] {
                            *e = modulus.mul(*e, inv);
                        }
                        rows.push(v);
                        self.pivots.push(pc);
                        RowExposure {
                            in_span: false,
                            codim: self.cols - self.pivots.len(),
                        }
                    }
                }
            }
            Basis::Packed { rows } => {
                let mut v = pack(row, self.cols);
                let pivot = reduce_packed(rows, &self.pivots, &mut v);
                self.finish_packed(pivot, v)
            }
        }
    }

    fn finish_packed(&mut self, pivot: Option<usize>, v: Vec<u64>) -> RowExposure {
        let Basis::Packed { rows } = &mut self.basis else {
            unreachable!("finish_packed on a dense basis")
        };
        if let Some(pc) = pivot {
            rows.push(v);
            self.pivots.push(pc);
        }
        RowExposure {
            in_span: pivot.is_none(),
            codim: self.cols - self.pivots.len(),
        }
    }
}

fn pack(row: &[u32], cols: usize) -> Vec<u64> {
    let mut v = vec![0u64; words_for(cols)];
    for (c, &e) in row.iter().enumerate() {
        if e & 1 == 1 {
            v[c / 64] |= 1 << (c % 64);
        }
    }
    v
}

/// Reduces `v` against the basis; returns the pivot of the remainder, or
/// `None` when it vanishes.
fn reduce_dense(modulus: Modulus, rows: &[Vec<u32>], pivots: &[usize], v: &mut [u32]) -> Option<usize> {
    for (b, &pc) in rows.iter().zip(pivots) {
        let f = v[pc];
        if f != 0 {
            modulus.axpy(&mut v[pc..], &b[pc..], modulus.neg(f));
        }
    }
    v.iter().position(|&e| e != 0)
}

fn reduce_packed(rows: &[Vec<u64>], pivots: &[usize], v: &mut [u64]) -> Option<usize> {
    for (b, &pc) in rows.iter().zip(pivots) {
        if v[pc / 64] >> (pc % 64) & 1 == 1 {
            for (d, s) in v[pc / 64..].iter_mut().zip(&b[pc / 64..]) {
                *d ^= s;
            }
        }
    }
    v.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + w.trailing_zeros() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(p: u32, e: &[u32]) -> GfVector {
        GfVector::new(p, e.to_vec()).unwrap()
    }

    #[test]
    fn exposure_examples() {
        let mut t = RankTracker::new(2, 3).unwrap();
        let first = t.add_row(&v(2, &[1, 0, 0])).unwrap();
        assert_eq!(first, RowExposure { in_span: false, codim: 2 });
        assert!(t.add_row(&v(2, &[1, 0, 0])).unwrap().in_span);
        t.add_row(&v(2, &[0, 1, 0])).unwrap();
        t.add_row(&v(2, &[1, 1, 1])).unwrap();
        assert_eq!(t.rank(), 3);
        for bits in 0..8u32 {
            let row = [bits & 1, bits >> 1 & 1, bits >> 2 & 1];
            assert!(t.add_row(&v(2, &row)).unwrap().in_span);
        }
    }

    #[test]
    fn dense_tracker_p5() {
        let mut t = RankTracker::new(5, 3).unwrap();
        assert!(!t.add_row(&v(5, &[1, 2, 3])).unwrap().in_span);
        assert!(t.add_row(&v(5, &[2, 4, 1])).unwrap().in_span);
        assert!(!t.add_row(&v(5, &[0, 1, 1])).unwrap().in_span);
        assert!(t.contains(&v(5, &[1, 3, 4])).unwrap());
        assert_eq!(t.codim(), 1);
    }

    #[test]
    fn packed_words_match_residues() {
        let mut a = RankTracker::new(2, 70).unwrap();
        let mut b = RankTracker::new(2, 70).unwrap();
        let mut row = vec![0u32; 70];
        row[69] = 1;
        row[3] = 1;
        let words = pack(&row, 70);
        assert_eq!(a.add_residues(&row).unwrap(), b.add_words(&words).unwrap());
        assert!(b.add_words(&words).unwrap().in_span);
    }

    #[test]
    fn dimension_errors() {
        let mut t = RankTracker::new(3, 2).unwrap();
        assert!(t.add_row(&v(3, &[1, 0, 0])).is_err());
        assert!(t.add_words(&[1]).is_err());
    }
}
