//! Bit-packed matrices over `F_2`, one `u64` word per 64 columns.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({}x{})", self.rows, self.cols)?;
        for r in 0..self.rows {
            let line: String = (0..self.cols)
                .map(|c| if self.get(r, c) { '1' } else { '0' })
                .collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn words_for(cols: usize) -> usize {
    cols.div_ceil(64)
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        Self {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r * self.words_per_row + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        let w = &mut self.data[r * self.words_per_row + c / 64];
        if value {
            *w |= 1 << (c % 64);
        } else {
            *w &= !(1 << (c % 64));
        }
    }

    #[inline]
    pub fn toggle(&mut self, r: usize, c: usize) {
        self.data[r * self.words_per_row + c / 64] ^= 1 << (c % 64);
    }

    pub fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Residues `0/1` of row `r`.
    pub fn row_residues(&self, r: usize) -> Vec<u32> {
        (0..self.cols).map(|c| self.get(r, c) as u32).collect()
    }

    pub fn rank(&self) -> usize {
        self.clone().eliminate_in_place()
    }

    /// Forward XOR elimination, destroying `self`. Returns the rank.
    pub fn eliminate_in_place(&mut self) -> usize {
        let wpr = self.words_per_row;
        let mut pivot_row = 0;
        for col in 0..self.cols {
            if pivot_row == self.rows {
                break;
            }
            let word = col / 64;
            let mask = 1u64 << (col % 64);
            let Some(found) =
                (pivot_row..self.rows).find(|&r| self.data[r * wpr + word] & mask != 0)
            else {
                continue;
            };
            if found != pivot_row {
                for w in 0..wpr {
                    self.data.swap(found * wpr + w, pivot_row * wpr + w);
                }
            }
            let (head, tail) = self.data.split_at_mut((pivot_row + 1) * wpr);
            let pivot = &head[pivot_row * wpr + word..];
            for row in tail.chunks_exact_mut(wpr) {
                if row[word] & mask != 0 {
                    for (d, s) in row[word..].iter_mut().zip(pivot) {
                        *d ^= s;
                    }
                }
            }
            pivot_row += 1;
        }
        pivot_row
    }
}
