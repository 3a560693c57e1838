//! Self-similar nested lattice pairs `Λ_c = c·Zᴺ ⊂ Λ = (c/m)·Zᴺ`, the
//! modulo-`Λ_c` group on the codebook `Λ ∩ V(Λ_c)`, dithered encoding and the
//! representation of a real sum of fundamental-region points by its residue
//! plus a bounded integer index.
//!
//! The fundamental region is the half-open box `[-c/2, c/2)ᴺ`; quantizer
//! ties at `+c/2` round up to the next coarse point, so the residue of
//! `c/2` is `-c/2`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::entropy::{self, CountJoint, HalfBits, Measure};
use crate::error::{check_cap, Error, Result};

/// Tolerance for recognising a real vector as a lattice point.
pub const POINT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(pub Vec<f64>);

impl LatticeVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|a| -a).collect())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for LatticeVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Combining sign for `X₁ ± X₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl std::str::FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Sign::Plus),
            "-" | "minus" => Ok(Sign::Minus),
            other => Err(Error::InvalidParameter(format!("unknown sign {other:?}"))),
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// The scaled integer lattice `scale·Zᴺ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicLattice {
    pub dim: usize,
    pub scale: f64,
}

impl CubicLattice {
    pub fn new(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 || !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lattice needs dim > 0 and finite scale > 0 (dim={dim}, scale={scale})"
            )));
        }
        Ok(Self { dim, scale })
    }

    /// Index `j` of the lattice point `scale·j` whose region contains `x`.
    pub fn quantize_coord(&self, x: f64) -> i64 {
        (x / self.scale + 0.5).floor() as i64
    }

    pub fn reduce_coord(&self, x: f64) -> f64 {
        x - self.scale * self.quantize_coord(x) as f64
    }

    pub fn reduce(&self, x: &LatticeVector) -> LatticeVector {
        LatticeVector(x.0.iter().map(|&v| self.reduce_coord(v)).collect())
    }

    pub fn in_region(&self, x: &LatticeVector) -> bool {
        let half = self.scale / 2.0;
        x.dim() == self.dim && x.0.iter().all(|&v| v >= -half && v < half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct NestedLatticePair {
    #[serde(rename = "N")]
    dim: usize,
    #[serde(rename = "c")]
    coarse_scale: f64,
    #[serde(rename = "m")]
    nesting: u32,
}

#[derive(Deserialize)]
struct RawPair {
    #[serde(rename = "N")]
    dim: usize,
    c: f64,
    m: u32,
}

impl TryFrom<RawPair> for NestedLatticePair {
    type Error = Error;

    fn try_from(raw: RawPair) -> Result<Self> {
        NestedLatticePair::new(raw.dim, raw.c, raw.m)
    }
}

impl NestedLatticePair {
    pub fn new(dim: usize, coarse_scale: f64, nesting: u32) -> Result<Self> {
        CubicLattice::new(dim, coarse_scale)?;
        if nesting < 2 {
            return Err(Error::InvalidParameter(format!(
                "nesting ratio must be at least 2, got {nesting}"
            )));
        }
        Ok(Self {
            dim,
            coarse_scale,
            nesting,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coarse_scale(&self) -> f64 {
        self.coarse_scale
    }

    pub fn nesting(&self) -> u32 {
        self.nesting
    }

    pub fn coarse(&self) -> CubicLattice {
        CubicLattice {
            dim: self.dim,
            scale: self.coarse_scale,
        }
    }

    pub fn fine(&self) -> CubicLattice {
        CubicLattice {
            dim: self.dim,
            scale: self.step(),
        }
    }

    /// Fine-lattice spacing `c/m`.
    pub fn step(&self) -> f64 {
        self.coarse_scale / self.nesting as f64
    }

    /// `mᴺ`.
    pub fn codebook_size(&self) -> u128 {
        (self.nesting as u128).saturating_pow(self.dim as u32)
    }

    /// Smallest fine index `k` with `k·c/m ∈ [-c/2, c/2)`.
    pub fn lowest_index(&self) -> i64 {
        -((self.nesting / 2) as i64)
    }

    /// Codebook point with per-coordinate digits in `0..m`.
    pub fn point_from_digits(&self, digits: &[u32]) -> LatticeVector {
        let lo = self.lowest_index();
        LatticeVector(
            digits
                .iter()
                .map(|&d| (lo + d as i64) as f64 * self.step())
                .collect(),
        )
    }

    /// Digits of a codebook member, or a domain error for anything else.
    pub fn digits_of(&self, x: &LatticeVector) -> Result<Vec<u32>> {
        if x.dim() != self.dim {
            return Err(Error::Domain(format!(
                "expected a {}-dimensional vector, got {}",
                self.dim,
                x.dim()
            )));
        }
        let lo = self.lowest_index();
        x.0.iter()
            .map(|&v| {
                let k = (v / self.step()).round();
                let on_lattice = (v - k * self.step()).abs() <= POINT_TOLERANCE * self.coarse_scale.max(1.0);
                let digit = k as i64 - lo;
                if on_lattice && (0..self.nesting as i64).contains(&digit) {
                    Ok(digit as u32)
                } else {
                    Err(Error::Domain(format!("{v} is not a codebook coordinate")))
                }
            })
            .collect()
    }

    /// Lexicographic rank of a digit vector (first coordinate most significant).
    pub fn rank_of_digits(&self, digits: &[u32]) -> u64 {
        digits
            .iter()
            .fold(0u64, |acc, &d| acc * self.nesting as u64 + d as u64)
    }

    pub fn digits_of_rank(&self, mut rank: u64) -> Vec<u32> {
        let m = self.nesting as u64;
        let mut digits = vec![0u32; self.dim];
        for slot in digits.iter_mut().rev() {
            *slot = (rank % m) as u32;
            rank /= m;
        }
        digits
    }
}

pub fn mod_coarse(x: &LatticeVector, pair: &NestedLatticePair) -> LatticeVector {
    pair.coarse().reduce(x)
}

/// All `mᴺ` codebook points in lexicographic order.
pub fn enumerate_codebook(pair: &NestedLatticePair, cap: u128) -> Result<Vec<LatticeVector>> {
    let size = pair.codebook_size();
    check_cap(size, cap)?;
    Ok((0..size as u64)
        .map(|r| pair.point_from_digits(&pair.digits_of_rank(r)))
        .collect())
}

pub fn codebook_csv(pair: &NestedLatticePair, cap: u128) -> Result<String> {
    let mut out = (0..pair.dim())
        .map(|i| format!("x{i}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for point in enumerate_codebook(pair, cap)? {
        let row: Vec<String> = point.0.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

/// `(x + y) mod Λ_c` on codebook members, computed on integer digits.
pub fn group_add(x: &LatticeVector, y: &LatticeVector, pair: &NestedLatticePair) -> Result<LatticeVector> {
    let dx = pair.digits_of(x)?;
    let dy = pair.digits_of(y)?;
    let m = pair.nesting() as i64;
    let lo = pair.lowest_index();
    let sum: Vec<u32> = dx
        .iter()
        .zip(&dy)
        .map(|(&a, &b)| (a as i64 + b as i64 + lo).rem_euclid(m) as u32)
        .collect();
    Ok(pair.point_from_digits(&sum))
}

pub fn group_neg(x: &LatticeVector, pair: &NestedLatticePair) -> Result<LatticeVector> {
    let dx = pair.digits_of(x)?;
    let m = pair.nesting() as i64;
    let lo = pair.lowest_index();
    let neg: Vec<u32> = dx
        .iter()
        .map(|&a| (-(a as i64) - 2 * lo).rem_euclid(m) as u32)
        .collect();
    Ok(pair.point_from_digits(&neg))
}

/// `Xᴺ = (u + d) mod Λ_c`.
pub fn dither_encode(u: &LatticeVector, d: &LatticeVector, pair: &NestedLatticePair) -> Result<LatticeVector> {
    pair.digits_of(u)?;
    if d.dim() != pair.dim() {
        return Err(Error::Domain("dither dimension mismatch".into()));
    }
    Ok(mod_coarse(&u.add(d), pair))
}

/// `R = (1/N) log₂ mᴺ = log₂ m`.
pub fn codebook_rate(pair: &NestedLatticePair) -> f64 {
    (pair.codebook_size() as f64).log2() / pair.dim() as f64
}

// ---------------------------------------------------------------------------
// Representation theorem
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepresentationIndex {
    /// `1 ≤ t ≤ Kᴺ`.
    pub t: u64,
    pub summands: usize,
    pub dim: usize,
}

impl RepresentationIndex {
    pub fn max_index(summands: usize, dim: usize) -> u128 {
        (summands as u128).saturating_pow(dim as u32)
    }
}

/// Smallest coarse shift index `j` with `w + j·scale ≥ -K·scale/2`.
///
/// `w` is a residue, so `-K/2 - w/scale` is an exact integer only when the
/// sum sits on the lower boundary; snapping avoids dropping that candidate.
fn lowest_shift(w: f64, summands: usize, lattice: &CubicLattice) -> i64 {
    let y = -(summands as f64) / 2.0 - w / lattice.scale;
    let nearest = y.round();
    if (y - nearest).abs() < POINT_TOLERANCE {
        nearest as i64
    } else {
        y.ceil() as i64
    }
}

/// Splits `Σ points` into its residue `Σ mod Λ` and the index `T` of the
/// coarse shift `λ = Σ - (Σ mod Λ)`.
///
/// Given the residue `w`, the sum of `K` points of `V(Λ)` lies in
/// `[-K·c/2, K·c/2)ᴺ`, so `λ` is one of exactly `Kᴺ` lattice points of that
/// box shifted by `-w`. `T` is the 1-based position of `λ` among them in
/// lexicographic order.
pub fn representation_index(
    points: &[LatticeVector],
    lattice: &CubicLattice,
) -> Result<(RepresentationIndex, LatticeVector)> {
    let k = points.len();
    if k == 0 {
        return Err(Error::Domain("need at least one point".into()));
    }
    if let Some(p) = points.iter().find(|p| !lattice.in_region(p)) {
        return Err(Error::Domain(format!(
            "point {:?} lies outside the fundamental region",
            p.0
        )));
    }
    let mut sum = LatticeVector::zeros(lattice.dim);
    for p in points {
        sum = sum.add(p);
    }
    let residue = lattice.reduce(&sum);
    let mut t: u64 = 0;
    for (i, (&s, &w)) in sum.0.iter().zip(&residue.0).enumerate() {
        let shift = ((s - w) / lattice.scale).round() as i64;
        let offset = shift - lowest_shift(w, k, lattice);
        if !(0..k as i64).contains(&offset) {
            return Err(Error::Domain(format!(
                "coordinate {i}: shift {shift} outside the candidate window"
            )));
        }
        t = t * k as u64 + offset as u64;
    }
    Ok((
        RepresentationIndex {
            t: t + 1,
            summands: k,
            dim: lattice.dim,
        },
        residue,
    ))
}

pub fn reconstruct_sum(idx: &RepresentationIndex, residue: &LatticeVector, lattice: &CubicLattice) -> Result<LatticeVector> {
    let k = idx.summands;
    if k == 0 || idx.dim != lattice.dim || residue.dim() != lattice.dim {
        return Err(Error::Domain("index shape does not match the lattice".into()));
    }
    if idx.t == 0 || idx.t as u128 > RepresentationIndex::max_index(k, idx.dim) {
        return Err(Error::Domain(format!(
            "T = {} outside [1, {}]",
            idx.t,
            RepresentationIndex::max_index(k, idx.dim)
        )));
    }
    let mut rest = idx.t - 1;
    let mut offsets = vec![0i64; lattice.dim];
    for slot in offsets.iter_mut().rev() {
        *slot = (rest % k as u64) as i64;
        rest /= k as u64;
    }
    Ok(LatticeVector(
        residue
            .0
            .iter()
            .zip(&offsets)
            .map(|(&w, &off)| w + (lowest_shift(w, k, lattice) + off) as f64 * lattice.scale)
            .collect(),
    ))
}

// ---------------------------------------------------------------------------
// Side information carried by the real sum of two codewords
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub dim: usize,
    pub nesting: u32,
    pub sign: Sign,
    pub measure: Measure,
    pub s: f64,
    /// `H(u₁ | u₁ ± u₂ mod Λ_c, d) − H(u₁ | X₁ ± X₂, d)`.
    pub shannon_gap: f64,
    /// `H(u₁ | u₁ ± u₂ mod Λ_c, d)`; equals `N log₂ m` by the crypto lemma.
    pub residue_equivocation: f64,
    /// Largest number of coarse shifts seen for a single residue.
    pub t_cardinality: usize,
    /// Worst violation mass over residues (collision / min entropy only).
    pub violation_mass: Option<f64>,
    pub mass_bound: Option<f64>,
    pub passed: bool,
}

/// Exact joint of `(u₁, X₁ ± X₂)` with `u₁, u₂` independent and uniform over
/// the codebook and fixed dithers, checked against the side-information
/// bounds with the coarse shift of the sum playing the role of `T`.
pub fn verify_corollary1(
    pair: &NestedLatticePair,
    d1: &LatticeVector,
    d2: &LatticeVector,
    sign: Sign,
    s: f64,
    measure: Measure,
    cap: u128,
) -> Result<CorollaryReport> {
    let n = pair.dim();
    if d1.dim() != n || d2.dim() != n {
        return Err(Error::Domain("dither dimension mismatch".into()));
    }
    if measure != Measure::Shannon && !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    let size = pair.codebook_size();
    check_cap(size * size, cap)?;
    let size = size as usize;
    let coarse = pair.coarse();
    let step = pair.step();
    let m = pair.nesting() as i64;
    let sgn = sign.factor();
    let offset: Vec<f64> = d1.0.iter().zip(&d2.0).map(|(a, b)| a + sgn * b).collect();

    let xs1: Vec<LatticeVector> = (0..size as u64)
        .map(|r| dither_encode(&pair.point_from_digits(&pair.digits_of_rank(r)), d1, pair))
        .collect::<Result<_>>()?;
    let xs2: Vec<LatticeVector> = (0..size as u64)
        .map(|r| dither_encode(&pair.point_from_digits(&pair.digits_of_rank(r)), d2, pair))
        .collect::<Result<_>>()?;

    // Y = offset + n·(c/m) with integer n. The coarse shift j and the residue
    // key n − m·j are derived from n alone so equal sums always get equal keys.
    let mut residue_slices: BTreeMap<Vec<i64>, BTreeMap<Vec<i64>, Vec<u64>>> = BTreeMap::new();
    let mut by_sum: BTreeMap<Vec<i64>, Vec<u64>> = BTreeMap::new();
    let mut by_codeword_residue: BTreeMap<Vec<i64>, Vec<u64>> = BTreeMap::new();
    for (r1, x1) in xs1.iter().enumerate() {
        let u1 = pair.point_from_digits(&pair.digits_of_rank(r1 as u64));
        for (r2, x2) in xs2.iter().enumerate() {
            let mut sum_key = Vec::with_capacity(n);
            let mut shift_key = Vec::with_capacity(n);
            let mut residue_key = Vec::with_capacity(n);
            for i in 0..n {
                let y = x1.0[i] + sgn * x2.0[i];
                let steps = ((y - offset[i]) / step).round() as i64;
                let exact_y = offset[i] + steps as f64 * step;
                let shift = coarse.quantize_coord(exact_y);
                sum_key.push(steps);
                shift_key.push(shift);
                residue_key.push(steps - m * shift);
            }
            let u2 = pair.point_from_digits(&pair.digits_of_rank(r2 as u64));
            let combined = mod_coarse(&u1.add(&u2.0.iter().map(|v| sgn * v).collect::<Vec<_>>().into()), pair);
            let combined_key = pair.digits_of(&combined)?.into_iter().map(i64::from).collect();

            by_sum.entry(sum_key).or_insert_with(|| vec![0; size])[r1] += 1;
            by_codeword_residue.entry(combined_key).or_insert_with(|| vec![0; size])[r1] += 1;
            residue_slices
                .entry(residue_key)
                .or_default()
                .entry(shift_key)
                .or_insert_with(|| vec![0; size])[r1] += 1;
        }
    }

    let equivocation = |table: &BTreeMap<Vec<i64>, Vec<u64>>| -> Result<f64> {
        let cols: Vec<&Vec<u64>> = table.values().collect();
        let counts = (0..size)
            .flat_map(|x| cols.iter().map(move |c| c[x]))
            .collect();
        Ok(entropy::conditional_shannon(&CountJoint::new(size, cols.len(), counts)?.to_joint()))
    };
    let residue_equivocation = equivocation(&by_codeword_residue)?;
    let shannon_gap = residue_equivocation - equivocation(&by_sum)?;

    let t_cardinality = residue_slices.values().map(BTreeMap::len).max().unwrap_or(1);
    let mut passed = shannon_gap <= (t_cardinality as f64).log2() + 1e-9 && shannon_gap <= n as f64 + 1e-9;

    let (violation_mass, mass_bound) = match measure {
        Measure::Shannon => (None, None),
        _ => {
            let bound = entropy::side_info_bound(measure, s)?;
            let exact_s = HalfBits::from_f64(s).ok();
            let mut worst = 0.0f64;
            for slice in residue_slices.values() {
                let cols: Vec<&Vec<u64>> = slice.values().collect();
                let counts = (0..size)
                    .flat_map(|x| cols.iter().map(move |c| c[x]))
                    .collect();
                let joint = CountJoint::new(size, cols.len(), counts)?;
                let (mass, ok) = match exact_s {
                    Some(h) => {
                        let exact = joint.violation_mass(measure, h)?;
                        (exact.as_f64(), entropy::exact_within_bound(exact, measure, h)?)
                    }
                    None => {
                        let mass = entropy::side_info_violation_mass(&joint.to_joint(), measure, s)?;
                        (mass, mass <= bound + 1e-12)
                    }
                };
                worst = worst.max(mass);
                passed &= ok;
            }
            (Some(worst), Some(bound))
        }
    };

    Ok(CorollaryReport {
        dim: n,
        nesting: pair.nesting(),
        sign,
        measure,
        s,
        shannon_gap,
        residue_equivocation,
        t_cardinality,
        violation_mass,
        mass_bound,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Layered (product) codebooks
// ---------------------------------------------------------------------------

/// `M` nested pairs sharing the dimension `N`; the Cartesian product of
/// their codebooks is itself a nested lattice codebook of dimension
/// `N̄ = M·N`. Points are laid out layer-major: coordinates `i·N .. (i+1)·N`
/// belong to layer `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayered")]
pub struct LayeredCodebook {
    layers: Vec<NestedLatticePair>,
}

#[derive(Deserialize)]
struct RawLayered {
    layers: Vec<NestedLatticePair>,
}

impl TryFrom<RawLayered> for LayeredCodebook {
    type Error = Error;

    fn try_from(raw: RawLayered) -> Result<Self> {
        LayeredCodebook::new(raw.layers)
    }
}

impl LayeredCodebook {
    pub fn new(layers: Vec<NestedLatticePair>) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidParameter("need at least one layer".into()));
        };
        if layers.iter().any(|l| l.dim() != first.dim()) {
            return Err(Error::InvalidParameter("all layers must share one dimension".into()));
        }
        let book = Self { layers };
        if book.size() > u64::MAX as u128 {
            return Err(Error::InvalidParameter("product codebook too large to index".into()));
        }
        Ok(book)
    }

    pub fn single(pair: NestedLatticePair) -> Self {
        Self { layers: vec![pair] }
    }

    /// `count` layers of nesting `m`, layer `i` with coarse scale
    /// `base_scale · m^i`. Each layer's fine spacing equals the coarse scale
    /// of the layer below, so the superposition stays uniquely decodable.
    pub fn stacked(count: usize, dim: usize, m: u32, base_scale: f64) -> Result<Self> {
        let layers = (0..count)
            .map(|i| NestedLatticePair::new(dim, base_scale * (m as f64).powi(i as i32), m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[NestedLatticePair] {
        &self.layers
    }

    pub fn layer_dim(&self) -> usize {
        self.layers[0].dim()
    }

    /// `N̄ = M·N`.
    pub fn total_dim(&self) -> usize {
        self.layers.len() * self.layer_dim()
    }

    pub fn size(&self) -> u128 {
        self.layers
            .iter()
            .fold(1u128, |acc, l| acc.saturating_mul(l.codebook_size()))
    }

    pub fn layer_rates(&self) -> Vec<f64> {
        self.layers.iter().map(codebook_rate).collect()
    }

    /// `R₀`, the mean per-layer rate.
    pub fn average_rate(&self) -> f64 {
        self.layer_rates().iter().sum::<f64>() / self.layers.len() as f64
    }

    /// `N̄₀ = ⌊log₂ |codebook|⌋`.
    pub fn label_bits(&self) -> usize {
        (127 - self.size().leading_zeros()) as usize
    }

    /// Per-coordinate radix `m` in layer-major order.
    pub fn radices(&self) -> Vec<u32> {
        self.layers
            .iter()
            .flat_map(|l| std::iter::repeat(l.nesting()).take(l.dim()))
            .collect()
    }

    pub fn digits_of_rank(&self, mut rank: u64) -> Vec<u32> {
        let radices = self.radices();
        let mut digits = vec![0u32; radices.len()];
        for (slot, &m) in digits.iter_mut().zip(&radices).rev() {
            *slot = (rank % m as u64) as u32;
            rank /= m as u64;
        }
        digits
    }

    pub fn rank_of_digits(&self, digits: &[u32]) -> u64 {
        digits
            .iter()
            .zip(self.radices())
            .fold(0u64, |acc, (&d, m)| acc * m as u64 + d as u64)
    }

    pub fn point_of_rank(&self, rank: u64) -> LatticeVector {
        let digits = self.digits_of_rank(rank);
        let n = self.layer_dim();
        LatticeVector(
            self.layers
                .iter()
                .enumerate()
                .flat_map(|(i, l)| l.point_from_digits(&digits[i * n..(i + 1) * n]).0)
                .collect(),
        )
    }

    pub fn rank_of_point(&self, point: &LatticeVector) -> Result<u64> {
        if point.dim() != self.total_dim() {
            return Err(Error::Domain(format!(
                "expected {} coordinates, got {}",
                self.total_dim(),
                point.dim()
            )));
        }
        let mut digits = Vec::with_capacity(point.dim());
        for (i, l) in self.layers.iter().enumerate() {
            digits.extend(l.digits_of(&self.layer_slice(point, i))?);
        }
        Ok(self.rank_of_digits(&digits))
    }

    pub fn layer_slice(&self, point: &LatticeVector, layer: usize) -> LatticeVector {
        let n = self.layer_dim();
        LatticeVector(point.0[layer * n..(layer + 1) * n].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(n: usize, c: f64, m: u32) -> NestedLatticePair {
        NestedLatticePair::new(n, c, m).unwrap()
    }

    fn v(x: &[f64]) -> LatticeVector {
        LatticeVector(x.to_vec())
    }

    /// Nearest point of c·Z by scanning a window, ties resolved toward +∞
    /// so the residue lands in [-c/2, c/2).
    fn scan_mod(x: f64, c: f64) -> f64 {
        let mut best = f64::NAN;
        for j in -50..=50 {
            let r = x - j as f64 * c;
            if r >= -c / 2.0 && r < c / 2.0 {
                best = r;
            }
        }
        best
    }

    #[test]
    fn mod_coarse_examples() {
        let p = pair(1, 4.0, 2);
        assert_eq!(mod_coarse(&v(&[0.0]), &p), v(&[0.0]));
        assert_eq!(mod_coarse(&v(&[5.0]), &p), v(&[scan_mod(5.0, 4.0)]));
        assert_eq!(mod_coarse(&v(&[5.0]), &p), v(&[1.0]));
        assert_eq!(mod_coarse(&v(&[2.0]), &p), v(&[-2.0]));
        assert_eq!(mod_coarse(&v(&[1.5]), &p), v(&[1.5]));
        assert_eq!(mod_coarse(&v(&[-2.0]), &p), v(&[-2.0]));
        for x in [-9.3, -6.0, -2.0001, 3.99, 7.25, 123.4] {
            assert_abs_diff_eq!(mod_coarse(&v(&[x]), &p).0[0], scan_mod(x, 4.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn codebook_examples() {
        assert_eq!(enumerate_codebook(&pair(1, 2.0, 2), 1 << 20).unwrap(), vec![v(&[-1.0]), v(&[0.0])]);
        assert_eq!(
            enumerate_codebook(&pair(1, 3.0, 3), 1 << 20).unwrap(),
            vec![v(&[-1.0]), v(&[0.0]), v(&[1.0])]
        );
        let two_d = enumerate_codebook(&pair(2, 2.0, 2), 1 << 20).unwrap();
        assert_eq!(two_d.len(), 4);
        assert_eq!(two_d[0], v(&[-1.0, -1.0]));
        assert_eq!(two_d[1], v(&[-1.0, 0.0]));
        assert!(matches!(
            enumerate_codebook(&pair(10, 1.0, 8), 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn codebook_csv_dump() {
        let csv = codebook_csv(&pair(2, 2.0, 2), 100).unwrap();
        assert_eq!(csv, "x0,x1\n-1,-1\n-1,0\n0,-1\n0,0\n");
    }

    #[test]
    fn group_add_examples() {
        let p = pair(1, 4.0, 4);
        assert_eq!(group_add(&v(&[1.0]), &v(&[1.0]), &p).unwrap(), v(&[-2.0]));
        for x in enumerate_codebook(&p, 100).unwrap() {
            assert_eq!(group_add(&x, &v(&[0.0]), &p).unwrap(), x);
            let inv = group_neg(&x, &p).unwrap();
            assert_eq!(group_add(&x, &inv, &p).unwrap(), v(&[0.0]));
        }
        assert!(matches!(group_add(&v(&[0.5]), &v(&[0.0]), &p), Err(Error::Domain(_))));
        assert!(group_add(&v(&[2.0]), &v(&[0.0]), &p).is_err());
    }

    #[test]
    fn dither_encode_examples() {
        let p = pair(2, 4.0, 4);
        let u = v(&[1.0, -2.0]);
        assert_eq!(dither_encode(&u, &v(&[0.0, 0.0]), &p).unwrap(), u);
        let d = v(&[3.3, -0.7]);
        assert_eq!(dither_encode(&v(&[0.0, 0.0]), &d, &p).unwrap(), mod_coarse(&d, &p));
        assert!(dither_encode(&v(&[0.3, 0.0]), &d, &p).is_err());
    }

    #[test]
    fn dither_pushforward_is_uniform_over_shifted_codebook() {
        let p = pair(1, 4.0, 4);
        let d = v(&[0.37]);
        let mut outputs: Vec<f64> = enumerate_codebook(&p, 100)
            .unwrap()
            .iter()
            .map(|u| dither_encode(u, &d, &p).unwrap().0[0])
            .collect();
        outputs.sort_by(f64::total_cmp);
        // Each output is hit by exactly one codeword: -1.63, -0.63, 0.37, 1.37.
        let expected = [-1.63, -0.63, 0.37, 1.37];
        for (o, e) in outputs.iter().zip(expected) {
            assert_abs_diff_eq!(*o, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn codebook_rate_examples() {
        assert_abs_diff_eq!(codebook_rate(&pair(1, 1.0, 2)), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(codebook_rate(&pair(3, 1.0, 8)), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(codebook_rate(&pair(2, 1.0, 3)), 9f64.log2() / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn representation_examples() {
        let lat = CubicLattice::new(1, 2.0).unwrap();
        let (idx, res) = representation_index(&[v(&[0.9])], &lat).unwrap();
        assert_eq!(idx.t, 1);
        assert_eq!(res, v(&[0.9]));

        let (idx, res) = representation_index(&[v(&[0.9]), v(&[0.9])], &lat).unwrap();
        assert_abs_diff_eq!(res.0[0], -0.2, epsilon = 1e-12);
        // Candidate shifts for w = -0.2 are {0, 2}; the sum 1.8 uses 2.
        assert_eq!(idx.t, 2);
        let back = reconstruct_sum(&idx, &res, &lat).unwrap();
        assert_abs_diff_eq!(back.0[0], 1.8, epsilon = 1e-12);

        assert!(representation_index(&[v(&[1.0])], &lat).is_err());
        assert!(representation_index(&[], &lat).is_err());
        let bad = RepresentationIndex { t: 3, summands: 2, dim: 1 };
        assert!(reconstruct_sum(&bad, &v(&[0.0]), &lat).is_err());
        let zero = RepresentationIndex { t: 0, summands: 2, dim: 1 };
        assert!(reconstruct_sum(&zero, &v(&[0.0]), &lat).is_err());
    }

    #[test]
    fn representation_boundary_sums() {
        let lat = CubicLattice::new(2, 2.0).unwrap();
        let low = v(&[-1.0, -1.0]);
        let (idx, res) = representation_index(&[low.clone(), low.clone(), low.clone()], &lat).unwrap();
        assert!(idx.t >= 1 && idx.t <= 9);
        let back = reconstruct_sum(&idx, &res, &lat).unwrap();
        assert!(back.max_abs_diff(&v(&[-3.0, -3.0])) < 1e-12);
    }

    #[test]
    fn corollary_shannon_small() {
        let p = pair(1, 2.0, 2);
        let zero = v(&[0.0]);
        let r = verify_corollary1(&p, &zero, &zero, Sign::Plus, 1.0, Measure::Shannon, 1 << 20).unwrap();
        assert!(r.passed);
        assert!(r.shannon_gap <= 1.0 + 1e-12);
        assert_abs_diff_eq!(r.residue_equivocation, 1.0, epsilon = 1e-12);
        // Brute force: u1,u2 ∈ {-1,0}; sums -2,-1,-1,0 → H(u1|Y) = 0.5, gap 0.5.
        assert_abs_diff_eq!(r.shannon_gap, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn corollary_probabilistic_bounds() {
        let p = pair(1, 4.0, 4);
        let d1 = v(&[0.61]);
        let d2 = v(&[-1.37]);
        let r = verify_corollary1(&p, &d1, &d2, Sign::Minus, 2.0, Measure::Renyi2, 1 << 20).unwrap();
        assert!(r.passed);
        assert!(r.violation_mass.unwrap() <= 1.0);
        let r = verify_corollary1(&p, &d1, &d2, Sign::Minus, 2.0, Measure::Min, 1 << 20).unwrap();
        assert!(r.passed);
        assert!(r.violation_mass.unwrap() <= 0.25);
        assert!(r.t_cardinality <= 2);
    }

    #[test]
    fn lattice_pair_json() {
        let p = pair(2, 4.0, 3);
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"N":2,"c":4.0,"m":3}"#);
        assert_eq!(serde_json::from_str::<NestedLatticePair>(&text).unwrap(), p);
        assert!(serde_json::from_str::<NestedLatticePair>(r#"{"N":2,"c":4.0,"m":1}"#).is_err());
    }

    #[test]
    fn layered_codebook_indexing() {
        let book = LayeredCodebook::stacked(2, 2, 3, 1.0).unwrap();
        assert_eq!(book.total_dim(), 4);
        assert_eq!(book.size(), 81);
        assert_eq!(book.label_bits(), 6);
        assert_abs_diff_eq!(book.average_rate(), 3f64.log2(), epsilon = 1e-12);
        for rank in 0..81 {
            let p = book.point_of_rank(rank);
            assert_eq!(book.rank_of_point(&p).unwrap(), rank);
        }
        assert_eq!(book.layers()[1].coarse_scale(), 3.0);
        let four = LayeredCodebook::single(pair(3, 4.0, 4));
        assert_eq!(four.label_bits(), 6);
        assert!(LayeredCodebook::new(vec![pair(1, 1.0, 2), pair(2, 1.0, 2)]).is_err());
        assert!(LayeredCodebook::new(vec![]).is_err());
    }
}
