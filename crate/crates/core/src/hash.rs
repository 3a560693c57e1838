//! Universal hashing by uniformly drawn linear maps over GF(q), privacy
//! amplification bounds, and the invertible secret-message encoder built
//! from a full-rank binary hash.

use serde::{Deserialize, Serialize};

use crate::entropy::{self, DiscreteDistribution};
use crate::error::{check_cap, Error, Result};
use crate::gf::FiniteFieldMatrix;
use crate::lattice::{LatticeVector, LayeredCodebook};
use crate::seed;

/// Uniform draw from all `q^{rN}` matrices, reproducible per seed.
pub fn sample_linear_hash(rows: usize, cols: usize, q: u32, seed: u64) -> Result<FiniteFieldMatrix> {
    let mut rng = seed::rng_for(seed, &["linear-hash"]);
    FiniteFieldMatrix::random(q, rows, cols, &mut rng)
}

/// `Pr_G[G·x₁ = G·x₂]` for `G` uniform over `r×N` matrices.
///
/// `G·(x₁ − x₂)` is uniform over `GF(q)^r` whenever `x₁ ≠ x₂`, so the
/// probability is exactly `q^{-r}`.
pub fn collision_probability(rows: usize, cols: usize, q: u32, x1: &[u32], x2: &[u32]) -> Result<f64> {
    FiniteFieldMatrix::zeros(q, rows, cols)?;
    if x1.len() != cols || x2.len() != cols {
        return Err(Error::Domain(format!("inputs must have length {cols}")));
    }
    if x1.iter().chain(x2).any(|&v| v >= q) {
        return Err(Error::Domain(format!("inputs must lie in GF({q})")));
    }
    if x1 == x2 {
        return Err(Error::Domain("identical inputs always collide".into()));
    }
    Ok((q as f64).powi(-(rows as i32)))
}

pub fn full_rank_check(m: &FiniteFieldMatrix) -> bool {
    m.is_full_row_rank()
}

/// `1 − q^{r−N}`.
pub fn full_rank_lower_bound(rows: usize, cols: usize, q: u32) -> f64 {
    1.0 - (q as f64).powi(rows as i32 - cols as i32)
}

/// Exact probability that a uniform `r×N` matrix has full row rank:
/// `∏_{i<r} (1 − q^{i−N})`.
pub fn full_rank_probability(rows: usize, cols: usize, q: u32) -> f64 {
    if rows > cols {
        return 0.0;
    }
    (0..rows)
        .map(|i| 1.0 - (q as f64).powi(i as i32 - cols as i32))
        .product()
}

/// Counts full-row-rank matrices among all `q^{rN}`; returns `(full, total)`.
pub fn full_rank_count_exhaustive(rows: usize, cols: usize, q: u32, cap: u128) -> Result<(u64, u64)> {
    let total = (q as u128).checked_pow((rows * cols) as u32).unwrap_or(u128::MAX);
    check_cap(total, cap)?;
    let mut entries = vec![0u32; rows * cols];
    let mut full = 0u64;
    for index in 0..total as u64 {
        let mut rest = index;
        for e in entries.iter_mut() {
            *e = (rest % q as u64) as u32;
            rest /= q as u64;
        }
        if FiniteFieldMatrix::new(q, rows, cols, entries.clone())?.is_full_row_rank() {
            full += 1;
        }
    }
    Ok((full, total as u64))
}

/// Monte-Carlo full-rank fraction over `draws` uniform matrices.
pub fn full_rank_fraction_sampled(rows: usize, cols: usize, q: u32, draws: usize, seed: u64) -> Result<f64> {
    let mut rng = seed::rng_for(seed, &["full-rank-mc"]);
    let mut full = 0usize;
    for _ in 0..draws {
        if FiniteFieldMatrix::random(q, rows, cols, &mut rng)?.is_full_row_rank() {
            full += 1;
        }
    }
    Ok(full as f64 / draws as f64)
}

/// Lower bound `r log₂ q − 2^{r log₂ q − c} / ln 2` on `H(G(A) | G)` when
/// the collision entropy of `A` is at least `c`.
pub fn privacy_amp_bound(rows: usize, q: u32, c: f64) -> f64 {
    let out_bits = rows as f64 * (q as f64).log2();
    out_bits - 2f64.powf(out_bits - c) / std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq)]
pub enum HashFamily {
    /// Every binary `r×N` matrix.
    Exhaustive,
    /// One uniformly drawn matrix per seed.
    Seeds(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HashedEntropy {
    /// `H(G(A) | G)` averaged over the family.
    pub average: f64,
    pub family_size: u64,
    pub exhaustive: bool,
    /// `privacy_amp_bound(r, 2, H₂(A))`.
    pub bound: f64,
}

impl HashedEntropy {
    /// Only meaningful for the exhaustive family, where the bound is a theorem.
    pub fn bound_holds(&self) -> bool {
        self.average >= self.bound - 1e-12
    }
}

fn parity(x: u64) -> u64 {
    (x.count_ones() & 1) as u64
}

/// Applies a binary hash given as row masks; row 0 lands in the top output bit.
pub fn apply_bit_rows(rows: &[u64], x: u64) -> u64 {
    rows.iter().fold(0u64, |acc, &row| (acc << 1) | parity(row & x))
}

/// `H(G(A) | G)` for a source over `GF(2)^N` whose symbols are bitmasks
/// (bit `N−1−j` is coordinate `j`).
pub fn exact_hashed_entropy(
    source: &DiscreteDistribution<u64>,
    input_bits: usize,
    out_bits: usize,
    family: &HashFamily,
    cap: u128,
) -> Result<HashedEntropy> {
    if input_bits == 0 || input_bits > 63 || out_bits > 20 {
        return Err(Error::InvalidParameter(format!(
            "unsupported sizes N={input_bits}, r={out_bits}"
        )));
    }
    if source.support().iter().any(|&s| s >> input_bits != 0) {
        return Err(Error::Domain(format!("source symbol wider than {input_bits} bits")));
    }
    let mask = (1u64 << input_bits) - 1;
    let mut histogram = vec![0.0; 1 << out_bits];
    let mut entropy_of_rows = |rows: &[u64]| {
        histogram.iter_mut().for_each(|h| *h = 0.0);
        for (&a, &p) in source.support().iter().zip(source.probs()) {
            histogram[apply_bit_rows(rows, a) as usize] += p;
        }
        entropy::shannon_of(&histogram)
    };
    let (total, count, exhaustive) = match family {
        HashFamily::Exhaustive => {
            let bits = (out_bits * input_bits) as u32;
            let size = 1u128.checked_shl(bits).filter(|_| bits < 128).unwrap_or(u128::MAX);
            check_cap(size, cap)?;
            let mut total = 0.0;
            let mut rows = vec![0u64; out_bits];
            for index in 0..size as u64 {
                for (k, row) in rows.iter_mut().enumerate() {
                    *row = (index >> (k * input_bits)) & mask;
                }
                total += entropy_of_rows(&rows);
            }
            (total, size as u64, true)
        }
        HashFamily::Seeds(seeds) => {
            if seeds.is_empty() {
                return Err(Error::InvalidParameter("empty seed set".into()));
            }
            let mut total = 0.0;
            for &s in seeds {
                let g = sample_linear_hash(out_bits, input_bits, 2, s)?;
                total += entropy_of_rows(&g.bit_rows());
            }
            (total, seeds.len() as u64, false)
        }
    };
    Ok(HashedEntropy {
        average: total / count as f64,
        family_size: count,
        exhaustive,
        bound: privacy_amp_bound(out_bits, 2, source.entropy(entropy::Measure::Renyi2)),
    })
}

// ---------------------------------------------------------------------------
// Secret-message encoder
// ---------------------------------------------------------------------------

/// `g` (secret part), its completion `g′`, and `A = [g′; g]⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderKit {
    pub q: u32,
    pub g: FiniteFieldMatrix,
    pub g_prime: FiniteFieldMatrix,
    #[serde(rename = "A")]
    pub a: FiniteFieldMatrix,
}

impl EncoderKit {
    /// Number of secret bits `r̄₀`.
    pub fn secret_bits(&self) -> usize {
        self.g.rows()
    }

    /// Number of label bits `N̄₀`.
    pub fn label_bits(&self) -> usize {
        self.g.cols()
    }

    /// Number of randomization bits `N̄₀ − r̄₀`.
    pub fn randomness_bits(&self) -> usize {
        self.g_prime.rows()
    }

    pub fn stacked(&self) -> Result<FiniteFieldMatrix> {
        self.g_prime.vstack(&self.g)
    }

    /// The unhashed encoder: the message is the whole label.
    pub fn identity(label_bits: usize) -> Result<Self> {
        build_encoder(&FiniteFieldMatrix::identity(2, label_bits)?)
    }
}

/// Completes a full-row-rank `g` with standard basis rows, taken greedily in
/// order whenever they raise the rank, and inverts `[g′; g]`.
pub fn build_encoder(g: &FiniteFieldMatrix) -> Result<EncoderKit> {
    if !g.is_full_row_rank() {
        return Err(Error::Domain("hash matrix is not full row rank".into()));
    }
    let (q, n, r) = (g.q(), g.cols(), g.rows());
    let mut chosen: Vec<u32> = Vec::with_capacity((n - r) * n);
    let mut rank = r;
    for i in 0..n {
        if rank == n {
            break;
        }
        let mut candidate = chosen.clone();
        candidate.extend((0..n).map(|j| u32::from(i == j)));
        let rows = candidate.len() / n;
        let trial = FiniteFieldMatrix::new(q, rows, n, candidate.clone())?.vstack(g)?;
        if trial.rank() > rank {
            chosen = candidate;
            rank += 1;
        }
    }
    let g_prime = FiniteFieldMatrix::new(q, n - r, n, chosen)?;
    let a = g_prime.vstack(g)?.inverse()?;
    Ok(EncoderKit {
        q,
        g: g.clone(),
        g_prime,
        a,
    })
}

/// The bijection `v` between the first `2^{N̄₀}` codebook points in
/// lexicographic order and `GF(2)^{N̄₀}`, by binary counting (first label
/// bit most significant). When the codebook size is a power of two this is
/// the whole codebook.
#[derive(Debug, Clone, PartialEq)]
pub struct BitLabeling {
    book: LayeredCodebook,
    bits: usize,
}

impl BitLabeling {
    pub fn new(book: LayeredCodebook) -> Self {
        let bits = book.label_bits();
        Self { book, bits }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn codebook(&self) -> &LayeredCodebook {
        &self.book
    }

    /// `|K| = 2^{N̄₀}`.
    pub fn subset_size(&self) -> u64 {
        1u64 << self.bits
    }

    pub fn label_of_rank(&self, rank: u64) -> Result<Vec<u32>> {
        if rank >= self.subset_size() {
            return Err(Error::Domain(format!("rank {rank} is outside the labelled subset")));
        }
        Ok((0..self.bits)
            .map(|k| ((rank >> (self.bits - 1 - k)) & 1) as u32)
            .collect())
    }

    pub fn rank_of_label(&self, label: &[u32]) -> Result<u64> {
        if label.len() != self.bits || label.iter().any(|&b| b > 1) {
            return Err(Error::Domain(format!("label must be {} bits", self.bits)));
        }
        Ok(label.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
    }

    pub fn point_of_label(&self, label: &[u32]) -> Result<LatticeVector> {
        Ok(self.book.point_of_rank(self.rank_of_label(label)?))
    }

    pub fn label_of_point(&self, point: &LatticeVector) -> Result<Vec<u32>> {
        self.label_of_rank(self.book.rank_of_point(point)?)
    }
}

fn check_bits(bits: &[u32], len: usize, what: &str) -> Result<()> {
    if bits.len() != len || bits.iter().any(|&b| b > 1) {
        Err(Error::Domain(format!("{what} must be {len} bits")))
    } else {
        Ok(())
    }
}

/// `t = v⁻¹(A · [S′; S])`.
pub fn encode_secret(kit: &EncoderKit, secret: &[u32], randomness: &[u32], v: &BitLabeling) -> Result<LatticeVector> {
    check_bits(secret, kit.secret_bits(), "secret")?;
    check_bits(randomness, kit.randomness_bits(), "randomness")?;
    if kit.label_bits() != v.bits() {
        return Err(Error::Domain("encoder and labeling disagree on N̄₀".into()));
    }
    let stacked: Vec<u32> = randomness.iter().chain(secret).copied().collect();
    v.point_of_label(&kit.a.mul_vec(&stacked)?)
}

/// Inverse of [`encode_secret`]: `[S′; S] = [g′; g] · v(t)`; returns `(S′, S)`.
pub fn decode_secret(kit: &EncoderKit, t: &LatticeVector, v: &BitLabeling) -> Result<(Vec<u32>, Vec<u32>)> {
    let label = v.label_of_point(t)?;
    let randomness = kit.g_prime.mul_vec(&label)?;
    let secret = kit.g.mul_vec(&label)?;
    Ok((randomness, secret))
}

/// Largest integer `r̄₀ < N̄(R₀ − 1) − εN̄ − δN̄`, clamped at zero; zero when
/// `ε ∉ (0, R₀ − 1)` or `δ ≤ 0`.
pub fn secret_rate_select(n_bar: usize, r0: f64, epsilon: f64, delta: f64) -> usize {
    if !(epsilon > 0.0 && epsilon < r0 - 1.0 && delta > 0.0) {
        return 0;
    }
    let n = n_bar as f64;
    let limit = n * (r0 - 1.0) - epsilon * n - delta * n;
    let nearest = limit.round();
    let below = if (limit - nearest).abs() < 1e-9 {
        nearest - 1.0
    } else {
        limit.floor()
    };
    below.max(0.0) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NestedLatticePair;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_linear_hash(4, 4, 2, 99).unwrap();
        assert_eq!(a, sample_linear_hash(4, 4, 2, 99).unwrap());
        assert_ne!(a, sample_linear_hash(4, 4, 2, 100).unwrap());
    }

    #[test]
    fn one_by_one_hash_is_a_fair_coin() {
        let ones = (0..2000u64)
            .filter(|&s| sample_linear_hash(1, 1, 2, s).unwrap().get(0, 0) == 1)
            .count();
        assert!((ones as f64 / 2000.0 - 0.5).abs() < 0.05, "{ones}");
    }

    #[test]
    fn collision_probability_values() {
        assert_abs_diff_eq!(collision_probability(3, 3, 2, &[1, 0, 0], &[0, 1, 1]).unwrap(), 0.125);
        assert_abs_diff_eq!(collision_probability(1, 2, 2, &[1, 0], &[0, 0]).unwrap(), 0.5);
        assert!(collision_probability(1, 2, 2, &[1, 0], &[1, 0]).is_err());
        assert!(collision_probability(1, 2, 2, &[1, 0], &[1]).is_err());
    }

    #[test]
    fn full_rank_examples() {
        assert!(full_rank_check(&FiniteFieldMatrix::identity(2, 3).unwrap()));
        assert!(!full_rank_check(&FiniteFieldMatrix::zeros(2, 2, 4).unwrap()));
        let (full, total) = full_rank_count_exhaustive(2, 4, 2, 1 << 20).unwrap();
        assert_eq!(total, 256);
        // 15 nonzero first rows × 14 rows outside their span.
        assert_eq!(full, 15 * 14);
        assert!(full as f64 / total as f64 >= full_rank_lower_bound(2, 4, 2));
        assert_abs_diff_eq!(full_rank_lower_bound(2, 4, 2), 0.75);
    }

    #[test]
    fn privacy_amp_bound_values() {
        assert_abs_diff_eq!(privacy_amp_bound(2, 2, 2.0), 2.0 - 1.0 / std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(privacy_amp_bound(2, 2, 4.0), 2.0 - 0.25 / std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(privacy_amp_bound(2, 2, 4.0), 1.639_32, epsilon = 1e-5);
        assert_abs_diff_eq!(privacy_amp_bound(3, 2, 1e6), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn hashed_entropy_examples() {
        let uniform = DiscreteDistribution::uniform((0..8u64).collect()).unwrap();
        for r in 1..=2 {
            let h = exact_hashed_entropy(&uniform, 3, r, &HashFamily::Exhaustive, 1 << 20).unwrap();
            assert!(h.exhaustive && h.bound_holds(), "{h:?}");
            assert_abs_diff_eq!(h.bound, privacy_amp_bound(r, 2, 3.0), epsilon = 1e-12);
        }
        let point = DiscreteDistribution::point_mass(5u64);
        let h = exact_hashed_entropy(&point, 3, 2, &HashFamily::Exhaustive, 1 << 20).unwrap();
        assert_eq!(h.average, 0.0);

        // Two-point source {0b001, 0b110}, r = 1: the hash separates the two
        // points iff row·(0b111) = 1, which holds for 4 of the 8 rows.
        let pair = DiscreteDistribution::uniform(vec![0b001u64, 0b110]).unwrap();
        let h = exact_hashed_entropy(&pair, 3, 1, &HashFamily::Exhaustive, 1 << 20).unwrap();
        assert_abs_diff_eq!(h.average, 0.5, epsilon = 1e-12);

        let sampled = exact_hashed_entropy(&uniform, 3, 2, &HashFamily::Seeds(vec![1, 2, 3]), 1 << 20).unwrap();
        assert!(!sampled.exhaustive);
        assert_eq!(sampled.family_size, 3);
        assert!(exact_hashed_entropy(&uniform, 2, 1, &HashFamily::Exhaustive, 1 << 20).is_err());
    }

    #[test]
    fn identity_completion() {
        // g = last r rows of I → g′ = first N − r rows, A = I.
        let g = FiniteFieldMatrix::new(2, 2, 4, vec![0, 0, 1, 0, 0, 0, 0, 1]).unwrap();
        let kit = build_encoder(&g).unwrap();
        assert_eq!(kit.g_prime, FiniteFieldMatrix::new(2, 2, 4, vec![1, 0, 0, 0, 0, 1, 0, 0]).unwrap());
        assert_eq!(kit.a, FiniteFieldMatrix::identity(2, 4).unwrap());
    }

    #[test]
    fn completion_of_all_ones_row() {
        let g = FiniteFieldMatrix::new(2, 1, 3, vec![1, 1, 1]).unwrap();
        let kit = build_encoder(&g).unwrap();
        assert_eq!(kit.g_prime.rows(), 2);
        let stacked = kit.stacked().unwrap();
        assert_eq!(kit.a.mul(&stacked).unwrap(), FiniteFieldMatrix::identity(2, 3).unwrap());
        assert!(build_encoder(&FiniteFieldMatrix::zeros(2, 1, 3).unwrap()).is_err());
    }

    #[test]
    fn encode_decode_small() {
        let book = LayeredCodebook::single(NestedLatticePair::new(2, 4.0, 4).unwrap());
        let v = BitLabeling::new(book);
        assert_eq!(v.bits(), 4);
        let g = sample_linear_hash(2, 4, 2, 7).unwrap();
        let g = if g.is_full_row_rank() {
            g
        } else {
            FiniteFieldMatrix::new(2, 2, 4, vec![1, 1, 0, 1, 0, 1, 1, 1]).unwrap()
        };
        let kit = build_encoder(&g).unwrap();
        let t0 = encode_secret(&kit, &[0, 0], &[0, 0], &v).unwrap();
        assert_eq!(t0, v.point_of_label(&[0, 0, 0, 0]).unwrap());
        let t = encode_secret(&kit, &[1, 0], &[0, 1], &v).unwrap();
        assert_eq!(decode_secret(&kit, &t, &v).unwrap(), (vec![0, 1], vec![1, 0]));
        assert!(encode_secret(&kit, &[1], &[0, 1], &v).is_err());
        assert!(encode_secret(&kit, &[1, 2], &[0, 1], &v).is_err());
    }

    #[test]
    fn non_power_of_two_codebook_uses_prefix_subset() {
        let book = LayeredCodebook::single(NestedLatticePair::new(2, 3.0, 3).unwrap());
        let v = BitLabeling::new(book);
        assert_eq!(v.bits(), 3);
        assert_eq!(v.subset_size(), 8);
        assert!(v.label_of_rank(8).is_err());
        assert_eq!(v.label_of_rank(5).unwrap(), vec![1, 0, 1]);
    }

    #[test]
    fn secret_rate_select_examples() {
        assert_eq!(secret_rate_select(20, 1.0, 0.1, 0.1), 0);
        assert_eq!(secret_rate_select(20, 2.0, 0.1, 0.1), 15);
        assert_eq!(secret_rate_select(20, 2.0, 1.5, 0.1), 0);
        assert_eq!(secret_rate_select(7, 2.0, 0.3, 0.1), 4);
        for n in 1..40 {
            let r = secret_rate_select(n, 2.0, 0.3, 0.05);
            // r̄₀ ≤ N̄[R₀ − 1 − ε′]⁺ with ε′ = ε + δ
            assert!(r as f64 <= n as f64 * (2.0 - 1.0 - 0.35) + 1e-12);
        }
    }

    #[test]
    fn kit_json_bundle() {
        let kit = EncoderKit::identity(3).unwrap();
        let text = serde_json::to_string(&kit).unwrap();
        assert!(text.starts_with(r#"{"q":2,"g":{"q":2,"cols":3,"rows":["100","010","001"]}"#), "{text}");
        assert!(text.contains(r#""A":"#));
        assert_eq!(serde_json::from_str::<EncoderKit>(&text).unwrap(), kit);
    }
}
