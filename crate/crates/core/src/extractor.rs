//! Seeded extractor (a linear hash chosen by a short public seed) and the
//! two-party key generation protocol built on the layered lattice link.

use serde::{Deserialize, Serialize};

use crate::channel::{ml_decode, transmit, DecodeMode, Link};
use crate::entropy::{self, DiscreteDistribution};
use crate::error::{check_cap, Error, Result};
use crate::gf::FiniteFieldMatrix;
use crate::hash::apply_bit_rows;
use crate::lattice::{CubicLattice, LatticeVector, LayeredCodebook, Sign};
use crate::leakage::exact_leakage;
use crate::seed;
use rand::Rng as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ExtractorSpec {
    /// `N̄₀`
    pub input_bits: usize,
    /// `d`
    pub seed_bits: usize,
    /// `r`
    pub output_bits: usize,
    /// `Δ₁`: the seed may use at most `Δ₁·N̄₀` bits.
    pub seed_rate: f64,
}

#[derive(Deserialize)]
struct RawSpec {
    input_bits: usize,
    seed_bits: usize,
    output_bits: usize,
    seed_rate: f64,
}

impl TryFrom<RawSpec> for ExtractorSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        ExtractorSpec::new(r.input_bits, r.seed_bits, r.output_bits, r.seed_rate)
    }
}

impl ExtractorSpec {
    pub fn new(input_bits: usize, seed_bits: usize, output_bits: usize, seed_rate: f64) -> Result<Self> {
        if input_bits == 0 || input_bits > 63 {
            return Err(Error::InvalidParameter(format!("input length {input_bits} not in 1..=63")));
        }
        if output_bits > input_bits {
            return Err(Error::InvalidParameter("output longer than input".into()));
        }
        if seed_bits == 0 || seed_bits > 64 || seed_bits as f64 > seed_rate * input_bits as f64 {
            return Err(Error::InvalidParameter(format!(
                "seed of {seed_bits} bits exceeds Δ₁·N̄₀ = {}",
                seed_rate * input_bits as f64
            )));
        }
        Ok(Self {
            input_bits,
            seed_bits,
            output_bits,
            seed_rate,
        })
    }

    /// `ε_sec = 2^{-(c - r)/2}` for an input with `c` bits of min-entropy.
    pub fn security_slack(&self, min_entropy: f64) -> f64 {
        2f64.powf(-(min_entropy - self.output_bits as f64) / 2.0)
    }

    /// Leftover-hash constraint `r ≤ c − 2 log₂(1/ε)`.
    pub fn within_budget(&self, min_entropy: f64, epsilon: f64) -> bool {
        self.output_bits as f64 <= min_entropy - 2.0 * (1.0 / epsilon).log2() + 1e-12
    }

    /// The hash selected by seed value `v`: a ChaCha8 stream keyed by `v`
    /// fills `r×N̄₀` bits row by row, redrawing until the matrix has full row
    /// rank so that uniform inputs give uniform outputs.
    pub fn matrix(&self, v: u64) -> Result<FiniteFieldMatrix> {
        if self.seed_bits < 64 && v >> self.seed_bits != 0 {
            return Err(Error::Domain(format!("seed wider than {} bits", self.seed_bits)));
        }
        let mut rng = seed::rng_for(v, &["extractor"]);
        loop {
            let m = FiniteFieldMatrix::random(2, self.output_bits, self.input_bits, &mut rng)?;
            if m.is_full_row_rank() {
                return Ok(m);
            }
        }
    }

    pub fn seed_count(&self) -> u128 {
        1u128 << self.seed_bits
    }
}

fn pack(bits: &[u32]) -> u64 {
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

fn unpack(value: u64, len: usize) -> Vec<u32> {
    (0..len).map(|k| ((value >> (len - 1 - k)) & 1) as u32).collect()
}

/// Bit string as hex, most significant bit first, left-padded to whole digits.
pub fn bits_to_hex(bits: &[u32]) -> String {
    let width = bits.len().div_ceil(4).max(1);
    format!("{:0width$x}", pack(bits), width = width)
}

fn check_bits(bits: &[u32], len: usize, what: &str) -> Result<()> {
    if bits.len() != len || bits.iter().any(|&b| b > 1) {
        Err(Error::Domain(format!("{what} must be {len} bits")))
    } else {
        Ok(())
    }
}

/// `E(A, V)`.
pub fn extract(spec: &ExtractorSpec, input: &[u32], seed_bits: &[u32]) -> Result<Vec<u32>> {
    check_bits(input, spec.input_bits, "extractor input")?;
    check_bits(seed_bits, spec.seed_bits, "extractor seed")?;
    spec.matrix(pack(seed_bits))?.mul_vec(input)
}

/// `H(E(A, V) | V)` with `V` uniform, exhaustively over every seed.
/// Source symbols are bitmasks with the first input bit most significant.
pub fn extracted_entropy(spec: &ExtractorSpec, source: &DiscreteDistribution<u64>, cap: u128) -> Result<f64> {
    check_cap(spec.seed_count(), cap)?;
    let mut histogram = vec![0.0; 1 << spec.output_bits];
    let mut total = 0.0;
    for v in 0..spec.seed_count() as u64 {
        let rows = spec.matrix(v)?.bit_rows();
        histogram.iter_mut().for_each(|h| *h = 0.0);
        for (&a, &p) in source.support().iter().zip(source.probs()) {
            histogram[apply_bit_rows(&rows, a) as usize] += p;
        }
        total += entropy::shannon_of(&histogram);
    }
    Ok(total / spec.seed_count() as f64)
}

/// `H(K₁ | V, t₁⊕t₂, d, T)` for `t₁` uniform on the labelled codebook and
/// an independent uniform jammer, exhaustively over every seed. For each
/// seed this is `r − I(K₁; t₁⊕t₂, T)`; the dithers are independent of the
/// rest and drop out.
pub fn key_entropy_given_view(book: &LayeredCodebook, spec: &ExtractorSpec, sign: Sign, cap: u128) -> Result<f64> {
    if book.label_bits() != spec.input_bits {
        return Err(Error::InvalidParameter(format!(
            "codebook labels have {} bits, extractor expects {}",
            book.label_bits(),
            spec.input_bits
        )));
    }
    check_cap(spec.seed_count(), cap)?;
    let mut total = 0.0;
    for v in 0..spec.seed_count() as u64 {
        let m = spec.matrix(v)?;
        total += m.rank() as f64 - exact_leakage(book, &m, sign, cap)?;
    }
    Ok(total / spec.seed_count() as f64)
}

/// What the eavesdropper holds after one run. The coarse shift `λ` of each
/// coordinate is the lattice point indexed by `T`; given the residue the
/// two determine each other.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EavesdropperView {
    pub seed: String,
    pub dither1: LatticeVector,
    pub dither2: LatticeVector,
    /// `t₁ ⊕ t₂`, per layer.
    pub residue: LatticeVector,
    /// `λ / c` per coordinate.
    pub shift: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyTranscript {
    pub t1_rank: u64,
    /// Channel uses of the block.
    pub uses: usize,
    pub key: String,
    pub key_estimate: String,
    pub agreement: bool,
    pub view: EavesdropperView,
}

/// Splits `u₁ ± u₂` per layer into the residue modulo the coarse lattice
/// and the coarse shift.
pub fn view_of(book: &LayeredCodebook, t1: &LatticeVector, t2: &LatticeVector, sign: Sign) -> (LatticeVector, Vec<i64>) {
    let n = book.layer_dim();
    let mut residue = Vec::with_capacity(book.total_dim());
    let mut shift = Vec::with_capacity(book.total_dim());
    for (i, layer) in book.layers().iter().enumerate() {
        let coarse = CubicLattice::new(n, layer.coarse_scale()).expect("validated layer");
        for j in i * n..(i + 1) * n {
            let sum = t1.0[j] + sign.factor() * t2.0[j];
            let w = coarse.reduce_coord(sum);
            residue.push(w);
            shift.push(((sum - w) / layer.coarse_scale()).round() as i64);
        }
    }
    (LatticeVector(residue), shift)
}

/// One protocol run. Node 1 draws the public seed `V`, which reaches node
/// D₁ over an error-free side channel, then sends a uniform `t₁` while the
/// jammer sends a uniform `t₂`. D₁ decodes `t₁` by maximum likelihood and
/// both sides extract `E(v(t₁), V)`. `link.kit` must be the identity
/// encoder so that the message is the whole label.
pub fn run_key_protocol(link: &Link, spec: &ExtractorSpec, mode: DecodeMode, seed: u64, cap: u128) -> Result<KeyTranscript> {
    let bits = link.labeling.bits();
    if link.kit.secret_bits() != bits || bits != spec.input_bits {
        return Err(Error::InvalidParameter("key protocol needs the identity encoder over the full label".into()));
    }
    let mut rng = seed::rng_for(seed, &["key", "public-seed"]);
    let v: Vec<u32> = (0..spec.seed_bits).map(|_| rng.gen_range(0..2)).collect();
    let mut label_rng = seed::rng_for(seed, &["key", "label"]);
    let label = unpack(label_rng.gen_range(0..link.labeling.subset_size()), bits);
    let mut tr = transmit(link, &label, seed::derive_u64(seed, &["key", "block"]))?;
    let estimate = ml_decode(link, &tr, mode, cap)?;
    let key = extract(spec, &label, &v)?;
    let key_estimate = extract(spec, &estimate, &v)?;
    tr.decoded = Some(estimate);
    let (residue, shift) = view_of(link.book, &tr.t1, &tr.t2, link.cfg.sign);
    Ok(KeyTranscript {
        t1_rank: link.book.rank_of_point(&tr.t1)?,
        uses: tr.uses(),
        agreement: key == key_estimate,
        key: bits_to_hex(&key),
        key_estimate: bits_to_hex(&key_estimate),
        view: EavesdropperView {
            seed: bits_to_hex(&v),
            dither1: tr.dither1,
            dither2: tr.dither2,
            residue,
            shift,
        },
    })
}

/// `H(K₁)/n`, with `n` the channel uses of one block.
pub fn key_rate(transcripts: &[KeyTranscript], key_entropy: f64) -> Result<f64> {
    let Some(first) = transcripts.first() else {
        return Err(Error::InvalidParameter("no transcripts".into()));
    };
    Ok(key_entropy / first.uses as f64)
}
