//! Gaussian interference channel with a cooperative jammer: layered dithered
//! transmission, exhaustive maximum-likelihood decoding at the legitimate
//! receiver, and Monte-Carlo summaries.
//!
//! Scaled model, per channel use:
//! `Y₁ = X₁ + √(ab)·X₂ + √b·σ₁·Z₁` and `Y₂ = X₁ ± X₂ + σ₂·Z₂`.

use serde::{Deserialize, Serialize};

use crate::error::{check_cap, Error, Result};
use crate::hash::{decode_secret, encode_secret, BitLabeling, EncoderKit};
use crate::lattice::{CubicLattice, LatticeVector, LayeredCodebook, Sign};
use crate::seed::{self, Rng};
use rand::Rng as _;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawChannel")]
pub struct ChannelConfig {
    pub a: f64,
    pub b: f64,
    pub sign: Sign,
    pub noise_var1: f64,
    pub noise_var2: f64,
    /// Average per-symbol power budgets `P̄₁`, `P̄₂`.
    pub power1: f64,
    pub power2: f64,
}

#[derive(Deserialize)]
struct RawChannel {
    a: f64,
    b: f64,
    sign: Sign,
    #[serde(default = "unit")]
    noise_var1: f64,
    #[serde(default = "unit")]
    noise_var2: f64,
    power1: f64,
    power2: f64,
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<RawChannel> for ChannelConfig {
    type Error = Error;

    fn try_from(r: RawChannel) -> Result<Self> {
        ChannelConfig::new(r.a, r.b, r.sign, r.noise_var1, r.noise_var2, r.power1, r.power2)
    }
}

impl ChannelConfig {
    pub fn new(a: f64, b: f64, sign: Sign, noise_var1: f64, noise_var2: f64, power1: f64, power2: f64) -> Result<Self> {
        let named = [
            ("a", a),
            ("b", b),
            ("noise_var1", noise_var1),
            ("noise_var2", noise_var2),
            ("power1", power1),
            ("power2", power2),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self {
            a,
            b,
            sign,
            noise_var1,
            noise_var2,
            power1,
            power2,
        })
    }

    /// Unit gains and noise variances with the given powers.
    pub fn unit(sign: Sign, power: f64) -> Result<Self> {
        Self::new(1.0, 1.0, sign, 1.0, 1.0, power, power)
    }
}

/// Coefficients of the scaled model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledChannel {
    /// `(1, √(ab))`
    pub gains1: (f64, f64),
    /// `√b·σ₁`
    pub noise1: f64,
    /// `(1, ±1)`
    pub gains2: (f64, f64),
    /// `σ₂`
    pub noise2: f64,
}

pub fn scale_channel(cfg: &ChannelConfig) -> ScaledChannel {
    ScaledChannel {
        gains1: (1.0, (cfg.a * cfg.b).sqrt()),
        noise1: cfg.b.sqrt() * cfg.noise_var1.sqrt(),
        gains2: (1.0, cfg.sign.factor()),
        noise2: cfg.noise_var2.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DitherMode {
    /// Fresh dither per node, layer and block, uniform over the coarse cell.
    #[default]
    Uniform,
    /// All dithers zero, so `X` is the codeword itself.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Transcript {
    pub message: Vec<u32>,
    /// Encoder randomness `S′`.
    pub randomness: Vec<u32>,
    pub t1: LatticeVector,
    pub t2: LatticeVector,
    pub dither1: LatticeVector,
    pub dither2: LatticeVector,
    pub x1: LatticeVector,
    pub x2: LatticeVector,
    pub y1: LatticeVector,
    pub y2: LatticeVector,
    /// Receiver 1's estimate, filled in by [`ml_decode`].
    pub decoded: Option<Vec<u32>>,
}

impl Transcript {
    pub fn uses(&self) -> usize {
        self.x1.dim()
    }

    pub fn correct(&self) -> bool {
        self.decoded.as_ref() == Some(&self.message)
    }
}

fn uniform_dither(book: &LayeredCodebook, rng: &mut Rng) -> LatticeVector {
    let n = book.layer_dim();
    LatticeVector(
        book.layers()
            .iter()
            .flat_map(|l| {
                let c = l.coarse_scale();
                (0..n).map(|_| rng.gen_range(-c / 2.0..c / 2.0)).collect::<Vec<_>>()
            })
            .collect(),
    )
}

fn draw_dither(book: &LayeredCodebook, mode: DitherMode, rng: &mut Rng) -> LatticeVector {
    match mode {
        DitherMode::Uniform => uniform_dither(book, rng),
        DitherMode::Zero => LatticeVector::zeros(book.total_dim()),
    }
}

/// `Σᵢ (uᵢ + dᵢ) mod Λ_{c,i}`, one `N`-dimensional signal from a layer-major
/// codeword and dither.
pub fn superpose(book: &LayeredCodebook, u: &LatticeVector, d: &LatticeVector) -> LatticeVector {
    let n = book.layer_dim();
    let mut x = vec![0.0; n];
    for (i, layer) in book.layers().iter().enumerate() {
        let coarse = CubicLattice::new(n, layer.coarse_scale()).expect("validated layer");
        for j in 0..n {
            x[j] += coarse.reduce_coord(u.0[i * n + j] + d.0[i * n + j]);
        }
    }
    LatticeVector(x)
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Exact expected per-symbol power `E‖X‖²/N` of a node whose codeword is
/// uniform over the first `points` ranks. With uniform dithers each layer
/// is uniform over its cell and contributes `c²/12`; with zero dithers the
/// codewords are averaged directly, cross-layer terms included.
pub fn expected_power(book: &LayeredCodebook, points: u64, mode: DitherMode, cap: u128) -> Result<f64> {
    match mode {
        DitherMode::Uniform => Ok(book.layers().iter().map(|l| l.coarse_scale().powi(2) / 12.0).sum()),
        DitherMode::Zero => {
            check_cap(points as u128, cap)?;
            let zero = LatticeVector::zeros(book.total_dim());
            let total: f64 = (0..points)
                .map(|r| sq_norm(&superpose(book, &book.point_of_rank(r), &zero).0))
                .sum();
            Ok(total / (points as f64 * book.layer_dim() as f64))
        }
    }
}

/// Everything a run needs besides the message and seed.
#[derive(Debug, Clone)]
pub struct Link<'a> {
    pub cfg: &'a ChannelConfig,
    pub book: &'a LayeredCodebook,
    pub labeling: &'a BitLabeling,
    pub kit: &'a EncoderKit,
    pub dither: DitherMode,
}

impl Link<'_> {
    /// Rejects configurations whose expected power exceeds either budget.
    pub fn check_power(&self, cap: u128) -> Result<(f64, f64)> {
        let p1 = expected_power(self.book, self.labeling.subset_size(), self.dither, cap)?;
        let p2 = expected_power(self.book, self.book.size() as u64, self.dither, cap)?;
        if p1 > self.cfg.power1 * (1.0 + 1e-12) || p2 > self.cfg.power2 * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "expected powers ({p1:.4}, {p2:.4}) exceed budgets ({}, {})",
                self.cfg.power1, self.cfg.power2
            )));
        }
        Ok((p1, p2))
    }
}

/// One block: encode `message` with fresh randomness, draw the jammer point
/// and both dithers, and pass the signals through the channel. Every random
/// quantity has its own seed stream so the two transmitters share nothing.
pub fn transmit(link: &Link, message: &[u32], seed: u64) -> Result<Transcript> {
    let book = link.book;
    let mut enc_rng = seed::rng_for(seed, &["node-1", "randomness"]);
    let randomness: Vec<u32> = (0..link.kit.randomness_bits()).map(|_| enc_rng.gen_range(0..2)).collect();
    let t1 = encode_secret(link.kit, message, &randomness, link.labeling)?;
    let mut jam_rng = seed::rng_for(seed, &["node-2", "codeword"]);
    let t2 = book.point_of_rank(jam_rng.gen_range(0..book.size() as u64));
    let dither1 = draw_dither(book, link.dither, &mut seed::rng_for(seed, &["node-1", "dither"]));
    let dither2 = draw_dither(book, link.dither, &mut seed::rng_for(seed, &["node-2", "dither"]));
    let x1 = superpose(book, &t1, &dither1);
    let x2 = superpose(book, &t2, &dither2);
    let sc = scale_channel(link.cfg);
    let mut z1 = seed::rng_for(seed, &["noise", "1"]);
    let mut z2 = seed::rng_for(seed, &["noise", "2"]);
    let y1 = LatticeVector(
        x1.0.iter()
            .zip(&x2.0)
            .map(|(a, b)| sc.gains1.0 * a + sc.gains1.1 * b + sc.noise1 * seed::standard_normal(&mut z1))
            .collect(),
    );
    let y2 = LatticeVector(
        x1.0.iter()
            .zip(&x2.0)
            .map(|(a, b)| sc.gains2.0 * a + sc.gains2.1 * b + sc.noise2 * seed::standard_normal(&mut z2))
            .collect(),
    );
    Ok(Transcript {
        message: message.to_vec(),
        randomness,
        t1,
        t2,
        dither1,
        dither2,
        x1,
        x2,
        y1,
        y2,
        decoded: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecodeMode {
    /// Average the likelihood over the unknown jammer codeword.
    #[default]
    Marginal,
    /// The jammer codeword is revealed to the decoder.
    Genie,
}

/// Maximum-likelihood estimate of the message at receiver 1 by exhaustive
/// search over `K` (and over the jammer codebook in marginal mode).
pub fn ml_decode(link: &Link, tr: &Transcript, mode: DecodeMode, cap: u128) -> Result<Vec<u32>> {
    let book = link.book;
    let sc = scale_channel(link.cfg);
    let candidates = link.labeling.subset_size();
    let jammers: Vec<LatticeVector> = match mode {
        DecodeMode::Genie => vec![superpose(book, &tr.t2, &tr.dither2)],
        DecodeMode::Marginal => {
            check_cap((candidates as u128).saturating_mul(book.size()), cap)?;
            (0..book.size() as u64)
                .map(|r| superpose(book, &book.point_of_rank(r), &tr.dither2))
                .collect()
        }
    };
    check_cap(candidates as u128 * jammers.len() as u128, cap)?;
    let scale = 1.0 / (2.0 * sc.noise1 * sc.noise1);
    let mut best: Option<(f64, u64)> = None;
    let mut residual = vec![0.0; book.layer_dim()];
    let mut exponents = vec![0.0; jammers.len()];
    for rank in 0..candidates {
        let x1 = superpose(book, &book.point_of_rank(rank), &tr.dither1);
        for (e, x2) in exponents.iter_mut().zip(&jammers) {
            for (k, r) in residual.iter_mut().enumerate() {
                *r = tr.y1.0[k] - sc.gains1.0 * x1.0[k] - sc.gains1.1 * x2.0[k];
            }
            *e = -sq_norm(&residual) * scale;
        }
        let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let score = top + exponents.iter().map(|e| (e - top).exp()).sum::<f64>().ln();
        if best.map_or(true, |(s, _)| score > s) {
            best = Some((score, rank));
        }
    }
    let (_, rank) = best.expect("K is never empty");
    let (_, secret) = decode_secret(link.kit, &book.point_of_rank(rank), link.labeling)?;
    Ok(secret)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
    /// Empirical mean of `‖X₁‖²/N` and `‖X₂‖²/N`.
    pub power1: f64,
    pub power2: f64,
}

/// Uniform message for trial `index`.
pub fn trial_message(bits: usize, seed: u64, index: usize) -> Vec<u32> {
    let mut rng = seed::rng_for(seed, &["trial", &index.to_string(), "message"]);
    (0..bits).map(|_| rng.gen_range(0..2)).collect()
}

/// Runs `trials` independent blocks, decoding each one.
pub fn simulate(link: &Link, trials: usize, mode: DecodeMode, seed: u64, cap: u128) -> Result<(SimulationSummary, Vec<Transcript>)> {
    link.check_power(cap)?;
    let mut transcripts = Vec::with_capacity(trials);
    let (mut p1, mut p2, mut errors) = (0.0, 0.0, 0);
    for i in 0..trials {
        let message = trial_message(link.kit.secret_bits(), seed, i);
        let mut tr = transmit(link, &message, seed::derive_u64(seed, &["trial", &i.to_string()]))?;
        tr.decoded = Some(ml_decode(link, &tr, mode, cap)?);
        if !tr.correct() {
            errors += 1;
        }
        p1 += sq_norm(&tr.x1.0) / tr.uses() as f64;
        p2 += sq_norm(&tr.x2.0) / tr.uses() as f64;
        transcripts.push(tr);
    }
    let n = trials.max(1) as f64;
    Ok((
        SimulationSummary {
            trials,
            errors,
            error_rate: errors as f64 / n,
            power1: p1 / n,
            power2: p2 / n,
        },
        transcripts,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecrecyReport {
    /// `H(W)/n`.
    pub rate: f64,
    pub error_rate: f64,
    pub leakage: f64,
    pub uses: usize,
}

/// Secrecy rate, decoding error and leakage side by side. `message_entropy`
/// is `H(W)` of the message source (`r̄₀` for uniform messages).
pub fn secrecy_rate_report(transcripts: &[Transcript], message_entropy: f64, leakage: f64) -> Result<SecrecyReport> {
    let Some(first) = transcripts.first() else {
        return Err(Error::InvalidParameter("no transcripts".into()));
    };
    let uses = first.uses();
    let errors = transcripts.iter().filter(|t| !t.correct()).count();
    Ok(SecrecyReport {
        rate: message_entropy / uses as f64,
        error_rate: errors as f64 / transcripts.len() as f64,
        leakage,
        uses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NestedLatticePair;
    use approx::assert_abs_diff_eq;

    #[test]
    fn scaling_examples() {
        let s = scale_channel(&ChannelConfig::unit(Sign::Plus, 1.0).unwrap());
        assert_eq!((s.gains1, s.noise1, s.gains2, s.noise2), ((1.0, 1.0), 1.0, (1.0, 1.0), 1.0));
        let s = scale_channel(&ChannelConfig::new(4.0, 1.0, Sign::Minus, 1.0, 1.0, 1.0, 1.0).unwrap());
        assert_eq!(s.gains1.1, 2.0);
        assert_eq!(s.gains2.1, -1.0);
        let s = scale_channel(&ChannelConfig::new(1.0, 4.0, Sign::Plus, 1.0, 1.0, 1.0, 1.0).unwrap());
        assert_eq!(s.noise1, 2.0);
        assert!(ChannelConfig::new(0.0, 1.0, Sign::Plus, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn config_json_defaults_noise() {
        let cfg: ChannelConfig =
            serde_json::from_str(r#"{"a":1.21,"b":1.0,"sign":"-","power1":2.0,"power2":2.0}"#).unwrap();
        assert_eq!(cfg.noise_var1, 1.0);
        assert_eq!(cfg.sign, Sign::Minus);
        assert!(serde_json::from_str::<ChannelConfig>(r#"{"a":-1,"b":1,"sign":"+","power1":1,"power2":1}"#).is_err());
    }

    fn fixture(m: u32, dim: usize) -> (LayeredCodebook, BitLabeling, EncoderKit) {
        let book = LayeredCodebook::single(NestedLatticePair::new(dim, 4.0, m).unwrap());
        let labeling = BitLabeling::new(book.clone());
        let kit = EncoderKit::identity(labeling.bits()).unwrap();
        (book, labeling, kit)
    }

    #[test]
    fn noiseless_zero_dither_transcript() {
        let (book, labeling, kit) = fixture(2, 1);
        let cfg = ChannelConfig::new(1.0, 1.0, Sign::Minus, 1e-30, 1e-30, 10.0, 10.0).unwrap();
        let link = Link {
            cfg: &cfg,
            book: &book,
            labeling: &labeling,
            kit: &kit,
            dither: DitherMode::Zero,
        };
        let tr = transmit(&link, &[1], 3).unwrap();
        assert_eq!(tr.x1, tr.t1);
        assert_eq!(tr.x2, tr.t2);
        assert_abs_diff_eq!(tr.y2.0[0], tr.x1.0[0] - tr.x2.0[0], epsilon = 1e-12);
    }

    #[test]
    fn power_budget_is_enforced() {
        let (book, labeling, kit) = fixture(4, 1);
        let cfg = ChannelConfig::unit(Sign::Plus, 1.0).unwrap();
        let link = Link {
            cfg: &cfg,
            book: &book,
            labeling: &labeling,
            kit: &kit,
            dither: DitherMode::Uniform,
        };
        // c²/12 = 16/12 > 1
        assert!(matches!(link.check_power(1 << 20), Err(Error::Config(_))));
        assert_abs_diff_eq!(expected_power(&book, 4, DitherMode::Uniform, 1).unwrap(), 4.0 / 3.0);
        // Codewords {-2,-1,0,1}: mean square 6/4.
        assert_abs_diff_eq!(expected_power(&book, 4, DitherMode::Zero, 1 << 10).unwrap(), 1.5);
    }

    #[test]
    fn near_noiseless_decoding_is_exact() {
        let (book, labeling, kit) = fixture(4, 2);
        let cfg = ChannelConfig::new(1.21, 1.0, Sign::Plus, 1e-12, 1.0, 10.0, 10.0).unwrap();
        let link = Link {
            cfg: &cfg,
            book: &book,
            labeling: &labeling,
            kit: &kit,
            dither: DitherMode::Uniform,
        };
        for mode in [DecodeMode::Genie, DecodeMode::Marginal] {
            let (summary, _) = simulate(&link, 50, mode, 9, 1 << 20).unwrap();
            assert_eq!(summary.errors, 0, "{mode:?}");
        }
    }

    #[test]
    fn very_noisy_decoding_guesses() {
        let (book, labeling, kit) = fixture(4, 1);
        let cfg = ChannelConfig::new(1.21, 1.0, Sign::Plus, 1e6, 1.0, 10.0, 10.0).unwrap();
        let link = Link {
            cfg: &cfg,
            book: &book,
            labeling: &labeling,
            kit: &kit,
            dither: DitherMode::Uniform,
        };
        let (summary, transcripts) = simulate(&link, 2000, DecodeMode::Genie, 1, 1 << 20).unwrap();
        assert!((summary.error_rate - 0.75).abs() < 0.05, "{}", summary.error_rate);
        let report = secrecy_rate_report(&transcripts, 2.0, 0.5).unwrap();
        assert_eq!(report.rate, 2.0);
        assert_eq!(report.error_rate, summary.error_rate);
    }

    #[test]
    fn single_message_codebook_always_decodes() {
        let book = LayeredCodebook::single(NestedLatticePair::new(1, 4.0, 2).unwrap());
        let labeling = BitLabeling::new(book.clone());
        // r̄₀ = 0: the message space has a single element.
        let kit0 = crate::hash::build_encoder(&crate::gf::FiniteFieldMatrix::zeros(2, 0, 1).unwrap()).unwrap();
        let cfg = ChannelConfig::new(1.0, 1.0, Sign::Plus, 100.0, 1.0, 10.0, 10.0).unwrap();
        let link = Link {
            cfg: &cfg,
            book: &book,
            labeling: &labeling,
            kit: &kit0,
            dither: DitherMode::Uniform,
        };
        let (summary, _) = simulate(&link, 100, DecodeMode::Marginal, 4, 1 << 20).unwrap();
        assert_eq!(summary.errors, 0);
    }
}
