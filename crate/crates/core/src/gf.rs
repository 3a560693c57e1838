//! Dense matrices over a prime field GF(q).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct FiniteFieldMatrix {
    q: u32,
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

/// Wire form: one string of base-36 digits per row.
#[derive(Serialize, Deserialize)]
struct RawMatrix {
    q: u32,
    cols: usize,
    rows: Vec<String>,
}

impl From<FiniteFieldMatrix> for RawMatrix {
    fn from(m: FiniteFieldMatrix) -> Self {
        RawMatrix {
            q: m.q,
            cols: m.cols,
            rows: (0..m.rows)
                .map(|i| {
                    m.row(i)
                        .iter()
                        .map(|&d| char::from_digit(d, 36).expect("q <= 36"))
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<RawMatrix> for FiniteFieldMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        let mut entries = Vec::with_capacity(raw.rows.len() * raw.cols);
        for row in &raw.rows {
            if row.chars().count() != raw.cols {
                return Err(Error::InvalidParameter(format!(
                    "row {row:?} does not have {} digits",
                    raw.cols
                )));
            }
            for ch in row.chars() {
                entries.push(
                    ch.to_digit(36)
                        .ok_or_else(|| Error::InvalidParameter(format!("bad digit {ch:?}")))?,
                );
            }
        }
        FiniteFieldMatrix::new(raw.q, raw.rows.len(), raw.cols, entries)
    }
}

fn is_prime(q: u32) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

fn inv_mod(a: u32, q: u32) -> u32 {
    // Fermat: a^{q-2} mod q.
    let (mut base, mut exp, mut acc) = (a as u64 % q as u64, q as u64 - 2, 1u64);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % q as u64;
        }
        base = base * base % q as u64;
        exp >>= 1;
    }
    acc as u32
}

impl FiniteFieldMatrix {
    /// Zero-row matrices are allowed: they describe the hash onto the empty
    /// string, which the encoder needs when no secret bits fit.
    pub fn new(q: u32, rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        if !is_prime(q) || q > 36 {
            return Err(Error::InvalidParameter(format!("field size {q} is not a prime ≤ 36")));
        }
        if cols == 0 {
            return Err(Error::InvalidParameter("matrix needs at least one column".into()));
        }
        if entries.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if let Some(e) = entries.iter().find(|&&e| e >= q) {
            return Err(Error::InvalidParameter(format!("entry {e} is not in GF({q})")));
        }
        Ok(Self { q, rows, cols, entries })
    }

    pub fn zeros(q: u32, rows: usize, cols: usize) -> Result<Self> {
        Self::new(q, rows, cols, vec![0; rows * cols])
    }

    pub fn identity(q: u32, n: usize) -> Result<Self> {
        let mut m = Self::zeros(q, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    pub fn random<R: Rng + ?Sized>(q: u32, rows: usize, cols: usize, rng: &mut R) -> Result<Self> {
        let entries = (0..rows * cols).map(|_| rng.gen_range(0..q)).collect();
        Self::new(q, rows, cols, entries)
    }

    /// Binary matrix from row bitmasks; bit `cols - 1 - j` of a mask is column `j`.
    pub fn from_bit_rows(rows: &[u64], cols: usize) -> Result<Self> {
        let entries = rows
            .iter()
            .flat_map(|&mask| (0..cols).map(move |j| ((mask >> (cols - 1 - j)) & 1) as u32))
            .collect();
        Self::new(2, rows.len(), cols, entries)
    }

    /// Inverse of [`from_bit_rows`](Self::from_bit_rows); binary matrices only.
    pub fn bit_rows(&self) -> Vec<u64> {
        assert_eq!(self.q, 2, "bit rows need GF(2)");
        assert!(self.cols <= 64, "at most 64 columns pack into u64");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .fold(0u64, |acc, &b| (acc << 1) | b as u64)
            })
            .collect()
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[u32]) -> Result<Vec<u32>> {
        if x.len() != self.cols {
            return Err(Error::Domain(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        let q = self.q as u64;
        Ok((0..self.rows)
            .map(|i| {
                (self
                    .row(i)
                    .iter()
                    .zip(x)
                    .map(|(&a, &b)| a as u64 * b as u64)
                    .sum::<u64>()
                    % q) as u32
            })
            .collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows || self.q != other.q {
            return Err(Error::Domain("incompatible matrix product".into()));
        }
        let q = self.q as u64;
        let mut entries = vec![0u32; self.rows * other.cols];
        for i in 0..self.rows {
            for j in 0..other.cols {
                let s: u64 = (0..self.cols)
                    .map(|k| self.get(i, k) as u64 * other.get(k, j) as u64)
                    .sum();
                entries[i * other.cols + j] = (s % q) as u32;
            }
        }
        Self::new(self.q, self.rows, other.cols, entries)
    }

    /// Stacks `self` above `below`.
    pub fn vstack(&self, below: &Self) -> Result<Self> {
        if self.cols != below.cols || self.q != below.q {
            return Err(Error::Domain("cannot stack matrices of different shape".into()));
        }
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&below.entries);
        Self::new(self.q, self.rows + below.rows, self.cols, entries)
    }

    /// Row-reduces a copy and returns `(rank, reduced)`.
    fn echelon(&self) -> (usize, Vec<u32>) {
        let q = self.q as u64;
        let mut a = self.entries.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
                continue;
            };
            for j in 0..cols {
                a.swap(pivot * cols + j, rank * cols + j);
            }
            let inv = inv_mod(a[rank * cols + col], self.q) as u64;
            for j in 0..cols {
                a[rank * cols + j] = (a[rank * cols + j] as u64 * inv % q) as u32;
            }
            for r in 0..rows {
                let factor = a[r * cols + col] as u64;
                if r != rank && factor != 0 {
                    for j in 0..cols {
                        let sub = factor * a[rank * cols + j] as u64 % q;
                        a[r * cols + j] = ((a[r * cols + j] as u64 + q - sub) % q) as u32;
                    }
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        (rank, a)
    }

    pub fn rank(&self) -> usize {
        self.echelon().0
    }

    pub fn is_full_row_rank(&self) -> bool {
        self.rank() == self.rows
    }

    /// Gauss–Jordan inverse of a square matrix.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(Error::Domain("only square matrices are invertible".into()));
        }
        let n = self.rows;
        let mut augmented = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            augmented.extend_from_slice(self.row(i));
            augmented.extend((0..n).map(|j| u32::from(i == j)));
        }
        let wide = Self::new(self.q, n, 2 * n, augmented)?;
        let (_, reduced) = wide.echelon();
        // Invertible iff the left block reduced to the identity.
        for i in 0..n {
            for j in 0..n {
                if reduced[i * 2 * n + j] != u32::from(i == j) {
                    return Err(Error::Domain("matrix is singular".into()));
                }
            }
        }
        let entries = (0..n)
            .flat_map(|i| reduced[i * 2 * n + n..(i + 1) * 2 * n].to_vec())
            .collect();
        Self::new(self.q, n, n, entries)
    }
}
