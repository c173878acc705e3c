//! Plain-text matrix format.
//!
//! ```text
//! p rows cols
//! e11 e12 ...
//! ...
//! ```
//!
//! Entries are whitespace-separated integers in row-major order; line
//! breaks carry no meaning. Loading as a [`GfMatrix`] reduces entries
//! mod `p`. Integer matrices use the same layout with `p = 0` in the header
//! (any header `p` is accepted when loading as an [`IntMatrix`]).

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::gfp::{GfMatrix, Modulus};
use crate::snf::IntMatrix;

struct Tokens<'a> {
    iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let iter = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i, t)));
        Self {
            iter: Box::new(iter),
            last_line: 1,
        }
    }

    fn next_token(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.iter.next() {
            Some((line, tok)) => {
                self.last_line = line;
                Ok((line, tok))
            }
            None => Err(Error::Parse {
                line: self.last_line,
                msg: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let (line, tok) = self.next_token(what)?;
        tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected {what}, found {tok:?}"),
        })
    }

    fn finish(mut self) -> Result<()> {
        match self.iter.next() {
            None => Ok(()),
            Some((line, tok)) => Err(Error::Parse {
                line,
                msg: format!("trailing token {tok:?} after the last entry"),
            }),
        }
    }
}

fn header(tokens: &mut Tokens<'_>) -> Result<(u32, usize, usize)> {
    let p = tokens.next_usize("modulus p")?;
    let p = u32::try_from(p).map_err(|_| Error::Parse {
        line: 1,
        msg: format!("modulus {p} out of range"),
    })?;
    let rows = tokens.next_usize("row count")?;
    let cols = tokens.next_usize("column count")?;
    Ok((p, rows, cols))
}

pub fn parse_gf(text: &str) -> Result<GfMatrix> {
    let mut tokens = Tokens::new(text);
    let (p, rows, cols) = header(&mut tokens)?;
    Modulus::new(p).map_err(|_| Error::Parse {
        line: 1,
        msg: format!("modulus {p} is not a prime below 2^16"),
    })?;
    let big_p = BigInt::from(p);
    let mut entries = Vec::with_capacity(rows * cols);
    for idx in 0..rows * cols {
        let (line, tok) = tokens.next_token(&format!("entry {idx}"))?;
        let value: BigInt = tok.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("expected an integer entry, found {tok:?}"),
        })?;
        let residue = value.mod_floor(&big_p).to_u32().expect("residue below p");
        entries.push(residue);
    }
    tokens.finish()?;
    GfMatrix::new(p, rows, cols, entries)
}

/// Parses the integer form; returns the header modulus alongside.
pub fn parse_int(text: &str) -> Result<(u32, IntMatrix)> {
    let mut tokens = Tokens::new(text);
    let (p, rows, cols) = header(&mut tokens)?;
    let mut entries = Vec::with_capacity(rows * cols);
    for idx in 0..rows * cols {
        let (line, tok) = tokens.next_token(&format!("entry {idx}"))?;
        entries.push(tok.parse::<BigInt>().map_err(|_| Error::Parse {
            line,
            msg: format!("expected an integer entry, found {tok:?}"),
        })?);
    }
    tokens.finish()?;
    Ok((p, IntMatrix::new(rows, cols, entries)?))
}

pub fn write_gf(m: &GfMatrix) -> String {
    let mut out = format!("{} {} {}\n", m.p(), m.rows(), m.cols());
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(u32::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write_int(m: &IntMatrix) -> String {
    let mut out = format!("0 {} {}\n", m.rows(), m.cols());
    for r in 0..m.rows() {
        let line: Vec<String> = m.row(r).iter().map(BigInt::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}
