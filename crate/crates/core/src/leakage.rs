//! Exact leakage `I(W; t₁⊕t₂, T)` of the hashed secret about the real
//! per-layer sums seen by the eavesdropper, hash selection, and the
//! leakage-vs-blocklength sweep.
//!
//! The pair `(t₁⊕t₂, T)` is a bijective relabelling of the real sum
//! `u₁ + u₂` (representation theorem), so every routine here keys the view
//! on that sum directly. Per layer it is finer than what reaches the
//! eavesdropper after superposition, so by data processing the value upper
//! bounds `I(W; Y₂ⁿ)`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::entropy;
use crate::error::{check_cap, Error, Result};
use crate::gf::FiniteFieldMatrix;
use crate::hash::{apply_bit_rows, build_encoder, sample_linear_hash, secret_rate_select, EncoderKit};
use crate::lattice::{LayeredCodebook, Sign};
use crate::seed;

/// One coordinate of the product codebook.
#[derive(Debug, Clone, Copy)]
struct Coordinate {
    m: u32,
    lo: i64,
    /// Label column of the most significant digit bit (aligned case only).
    bit_offset: usize,
    bits: usize,
}

fn coordinates(book: &LayeredCodebook) -> Vec<Coordinate> {
    let mut offset = 0;
    let mut out = Vec::with_capacity(book.total_dim());
    for layer in book.layers() {
        for _ in 0..layer.dim() {
            let m = layer.nesting();
            let bits = m.trailing_zeros() as usize;
            out.push(Coordinate {
                m,
                lo: layer.lowest_index(),
                bit_offset: offset,
                bits,
            });
            offset += bits;
        }
    }
    out
}

/// Every radix a power of two, so the label is the concatenation of the
/// digit bits and `K` is the whole codebook.
pub fn is_bit_aligned(book: &LayeredCodebook) -> bool {
    book.layers().iter().all(|l| l.nesting().is_power_of_two() && l.nesting() <= 64)
}

fn sum_key(c: &Coordinate, a: u32, b: u32, sign: Sign) -> i64 {
    let (x1, x2) = (c.lo + a as i64, c.lo + b as i64);
    match sign {
        Sign::Plus => x1 + x2,
        Sign::Minus => x1 - x2,
    }
}

fn xor_translate(mask: u64, u: u32, m: u32) -> u64 {
    (0..m)
        .filter(|&a| mask >> a & 1 == 1)
        .fold(0u64, |acc, a| acc | 1 << (a ^ u))
}

/// Posterior supports of the per-coordinate sum channel with their
/// probabilities. Supports equal up to an XOR shift of the digit are merged,
/// since shifting the label by a fixed vector shifts `W` by a fixed vector
/// and leaves its entropy unchanged.
fn sum_channel_classes(c: &Coordinate, sign: Sign) -> Vec<(f64, u64)> {
    let mut supports: BTreeMap<i64, u64> = BTreeMap::new();
    for a in 0..c.m {
        for b in 0..c.m {
            *supports.entry(sum_key(c, a, b, sign)).or_default() |= 1 << a;
        }
    }
    let mut classes: BTreeMap<u64, f64> = BTreeMap::new();
    let total = (c.m as f64).powi(2);
    for mask in supports.into_values() {
        let canonical = (0..c.m).map(|u| xor_translate(mask, u, c.m)).min().unwrap_or(mask);
        *classes.entry(canonical).or_default() += mask.count_ones() as f64 / total;
    }
    classes.into_iter().map(|(mask, w)| (w, mask)).collect()
}

fn parity(x: u64) -> bool {
    x.count_ones() & 1 == 1
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (x, y) = (v[j], v[j + h]);
                v[j] = x + y;
                v[j + h] = x - y;
            }
        }
        h *= 2;
    }
}

fn check_hash(book: &LayeredCodebook, g: &FiniteFieldMatrix) -> Result<()> {
    if g.q() != 2 || g.cols() != book.label_bits() {
        return Err(Error::Domain(format!(
            "hash must be binary with {} columns",
            book.label_bits()
        )));
    }
    if book.label_bits() > 63 || g.rows() > 24 {
        return Err(Error::InvalidParameter("label or message too wide".into()));
    }
    Ok(())
}

struct WalshSearch {
    /// Per coordinate: `(probability, character values indexed by c)`.
    tables: Vec<Vec<(f64, Vec<f64>)>>,
    width: usize,
    bits: f64,
    conditional: f64,
}

impl WalshSearch {
    fn descend(&mut self, level: usize, phi: &[f64], weight: f64, scratch: &mut Vec<Vec<f64>>) {
        if phi[1..].iter().all(|v| v.abs() < 1e-15) {
            // W is uniform under every completion of this prefix.
            self.conditional += weight * self.bits;
            return;
        }
        if level == self.tables.len() {
            let mut p = phi.to_vec();
            walsh_hadamard(&mut p);
            let scale = 1.0 / self.width as f64;
            p.iter_mut().for_each(|v| *v = (*v * scale).max(0.0));
            self.conditional += weight * entropy::shannon_of(&p);
            return;
        }
        let mut next = std::mem::take(&mut scratch[level]);
        for k in 0..self.tables[level].len() {
            let (w, ref f) = self.tables[level][k];
            next.clear();
            next.extend(phi.iter().zip(f).map(|(a, b)| a * b));
            self.descend(level + 1, &next, weight * w, scratch);
        }
        scratch[level] = next;
    }
}

/// Exact leakage on a bit-aligned codebook.
///
/// Given the view `y`, the label is uniform on a product of per-coordinate
/// supports, so the characteristic function of `W = g·label` factorises.
/// The search walks the product of support classes with running products
/// of those characters and recovers each posterior of `W` by one
/// Walsh–Hadamard transform.
pub fn leakage_walsh(book: &LayeredCodebook, g: &FiniteFieldMatrix, sign: Sign, cap: u128) -> Result<f64> {
    check_hash(book, g)?;
    if !is_bit_aligned(book) {
        return Err(Error::Domain("codebook radices are not powers of two".into()));
    }
    let (n0, r) = (g.cols(), g.rows());
    let width = 1usize << r;
    let rows = g.bit_rows();
    let transposed: Vec<u64> = (0..width as u64)
        .map(|c| {
            rows.iter()
                .enumerate()
                .filter(|(k, _)| c >> (r - 1 - k) & 1 == 1)
                .fold(0u64, |acc, (_, &row)| acc ^ row)
        })
        .collect();
    let coords = coordinates(book);
    let mut leaves = 1u128;
    let mut tables = Vec::with_capacity(coords.len());
    for c in &coords {
        let classes = sum_channel_classes(c, sign);
        leaves = leaves.saturating_mul(classes.len() as u128);
        let shift = n0 - c.bit_offset - c.bits;
        let blocks: Vec<u64> = transposed.iter().map(|t| (t >> shift) & (c.m as u64 - 1)).collect();
        tables.push(
            classes
                .into_iter()
                .map(|(w, mask)| {
                    let size = mask.count_ones() as f64;
                    let chars = blocks
                        .iter()
                        .map(|&beta| {
                            (0..c.m as u64)
                                .filter(|&a| mask >> a & 1 == 1)
                                .map(|a| if parity(beta & a) { -1.0 } else { 1.0 })
                                .sum::<f64>()
                                / size
                        })
                        .collect();
                    (w, chars)
                })
                .collect(),
        );
    }
    check_cap(leaves, cap)?;
    let mut search = WalshSearch {
        tables,
        width,
        bits: r as f64,
        conditional: 0.0,
    };
    let mut scratch = vec![Vec::with_capacity(width); coords.len()];
    let root = vec![1.0; width];
    search.descend(0, &root, 1.0, &mut scratch);
    Ok((g.rank() as f64 - search.conditional).max(0.0))
}

/// Exact leakage by enumerating every label and every jammer point.
/// Handles codebooks whose size is not a power of two, where `K` is the
/// lexicographic prefix of length `2^{N̄₀}`.
pub fn leakage_brute_force(book: &LayeredCodebook, g: &FiniteFieldMatrix, sign: Sign, cap: u128) -> Result<f64> {
    check_hash(book, g)?;
    let n0 = book.label_bits();
    let labels = 1u64 << n0;
    check_cap((labels as u128).saturating_mul(book.size()), cap)?;
    let rows = g.bit_rows();
    let coords = coordinates(book);
    let width = 1usize << g.rows();
    let jammer: Vec<Vec<u32>> = (0..book.size() as u64).map(|t| book.digits_of_rank(t)).collect();
    let mut counts: BTreeMap<Vec<i64>, Vec<u64>> = BTreeMap::new();
    for label in 0..labels {
        let w = apply_bit_rows(&rows, label) as usize;
        let d1 = book.digits_of_rank(label);
        for d2 in &jammer {
            let key: Vec<i64> = coords
                .iter()
                .zip(d1.iter().zip(d2))
                .map(|(c, (&a, &b))| sum_key(c, a, b, sign))
                .collect();
            counts.entry(key).or_insert_with(|| vec![0; width])[w] += 1;
        }
    }
    let total = (labels as u128 * book.size()) as f64;
    let mut joint = Vec::new();
    let mut view = Vec::with_capacity(counts.len());
    let mut message = vec![0.0; width];
    for row in counts.values() {
        view.push(row.iter().sum::<u64>() as f64 / total);
        for (w, &n) in row.iter().enumerate() {
            let p = n as f64 / total;
            message[w] += p;
            joint.push(p);
        }
    }
    let info = entropy::shannon_of(&message) + entropy::shannon_of(&view) - entropy::shannon_of(&joint);
    Ok(info.max(0.0))
}

/// Exact `I(W; t₁⊕t₂, T)` for `W = g·v(t₁)`, `t₁` uniform on `K` and the
/// jammer point uniform on the whole codebook. Uses the factorised search
/// when the codebook is bit-aligned.
pub fn exact_leakage(book: &LayeredCodebook, g: &FiniteFieldMatrix, sign: Sign, cap: u128) -> Result<f64> {
    if is_bit_aligned(book) {
        leakage_walsh(book, g, sign, cap)
    } else {
        leakage_brute_force(book, g, sign, cap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyLeakage {
    pub mean: f64,
    pub size: u64,
    pub exhaustive: bool,
}

/// Leakage averaged over all `r×N̄₀` binary matrices when there are at most
/// `family_cap` of them, otherwise over `samples` seeded draws.
pub fn family_average_leakage(
    book: &LayeredCodebook,
    rows: usize,
    sign: Sign,
    family_cap: u128,
    samples: usize,
    seed: u64,
    cap: u128,
) -> Result<FamilyLeakage> {
    let n0 = book.label_bits();
    let bits = rows * n0;
    if bits < 64 && (1u128 << bits) <= family_cap {
        let size = 1u64 << bits;
        let mask = (1u64 << n0) - 1;
        let mut sum = 0.0;
        for index in 0..size {
            let masks: Vec<u64> = (0..rows).map(|k| (index >> (k * n0)) & mask).collect();
            sum += exact_leakage(book, &FiniteFieldMatrix::from_bit_rows(&masks, n0)?, sign, cap)?;
        }
        return Ok(FamilyLeakage {
            mean: sum / size as f64,
            size,
            exhaustive: true,
        });
    }
    if samples == 0 {
        return Err(Error::CapExceeded {
            required: if bits < 128 { 1u128 << bits } else { u128::MAX },
            cap: family_cap,
        });
    }
    let mut sum = 0.0;
    for i in 0..samples {
        let g = sample_linear_hash(rows, n0, 2, seed::derive_u64(seed, &["family", &i.to_string()]))?;
        sum += exact_leakage(book, &g, sign, cap)?;
    }
    Ok(FamilyLeakage {
        mean: sum / samples as f64,
        size: samples as u64,
        exhaustive: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOptions {
    /// Largest hash family averaged exhaustively.
    pub family_cap: u128,
    /// Draws used for the average when the family is too large.
    pub family_samples: usize,
    pub max_trials: usize,
    /// Guard on each exact leakage evaluation.
    pub cap: u128,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            family_cap: 1 << 16,
            family_samples: 256,
            max_trials: 4096,
            cap: crate::error::DEFAULT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub kit: EncoderKit,
    pub leakage: f64,
    pub family: FamilyLeakage,
    /// Candidates drawn before acceptance.
    pub trials: usize,
}

/// Rejection search for the hash behind the encoder: draw candidates until
/// one has full row rank and leakage at most twice the family average.
/// Markov's inequality makes acceptance likely for every draw.
pub fn select_encoder(
    book: &LayeredCodebook,
    rows: usize,
    sign: Sign,
    seed: u64,
    options: &SelectionOptions,
) -> Result<Selection> {
    let n0 = book.label_bits();
    if rows > n0 {
        return Err(Error::InvalidParameter(format!("r̄₀ = {rows} exceeds N̄₀ = {n0}")));
    }
    let family = family_average_leakage(
        book,
        rows,
        sign,
        options.family_cap,
        options.family_samples,
        seed::derive_u64(seed, &["family-average"]),
        options.cap,
    )?;
    let threshold = 2.0 * family.mean + 1e-12;
    for trial in 0..options.max_trials {
        let g = sample_linear_hash(rows, n0, 2, seed::derive_u64(seed, &["candidate", &trial.to_string()]))?;
        if !g.is_full_row_rank() {
            continue;
        }
        let leakage = exact_leakage(book, &g, sign, options.cap)?;
        if leakage <= threshold {
            return Ok(Selection {
                kit: build_encoder(&g)?,
                leakage,
                family,
                trials: trial + 1,
            });
        }
    }
    Err(Error::Domain(format!(
        "no full-rank hash within twice the family average after {} draws",
        options.max_trials
    )))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendSpec {
    pub layers: usize,
    pub m: u32,
    pub n_bars: Vec<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub sign: Sign,
    pub seed: u64,
    pub options: SelectionOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendRow {
    pub n_bar: usize,
    pub r0: usize,
    pub leakage_bits: f64,
    pub family_average: f64,
    pub exhaustive_family: bool,
    pub seed: u64,
}

/// One row per `N̄`: `r̄₀` from [`secret_rate_select`], then the selected
/// hash and its exact leakage. Each row draws from its own seed stream.
pub fn leakage_trend(spec: &TrendSpec) -> Result<Vec<TrendRow>> {
    if spec.layers == 0 {
        return Err(Error::InvalidParameter("need at least one layer".into()));
    }
    let mut rows = Vec::with_capacity(spec.n_bars.len());
    for &n_bar in &spec.n_bars {
        if n_bar == 0 || n_bar % spec.layers != 0 {
            return Err(Error::InvalidParameter(format!(
                "N̄ = {n_bar} is not a positive multiple of {} layers",
                spec.layers
            )));
        }
        let book = LayeredCodebook::stacked(spec.layers, n_bar / spec.layers, spec.m, 1.0)?;
        let r0 = secret_rate_select(n_bar, book.average_rate(), spec.epsilon, spec.delta).min(book.label_bits());
        let row_seed = seed::derive_u64(spec.seed, &["leakage-trend", &n_bar.to_string()]);
        let selection = select_encoder(&book, r0, spec.sign, row_seed, &spec.options)?;
        rows.push(TrendRow {
            n_bar,
            r0,
            leakage_bits: selection.leakage,
            family_average: selection.family.mean,
            exhaustive_family: selection.family.exhaustive,
            seed: row_seed,
        });
    }
    Ok(rows)
}

/// Least-squares slope of `log₂(leakage)` against `N̄` over rows with
/// positive leakage; `None` with fewer than two such rows.
pub fn log_slope(rows: &[TrendRow]) -> Option<f64> {
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.leakage_bits > 0.0)
        .map(|r| (r.n_bar as f64, r.leakage_bits.log2()))
        .collect();
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}
