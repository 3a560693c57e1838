//! Shannon, collision (Rényi order 2) and min entropy on finite
//! distributions, plus the side-information bounds they obey.
//!
//! All quantities are in bits and use the convention `0 · log₂ 0 = 0`.
//! `‖T‖` always means the number of side-information symbols with strictly
//! positive marginal mass.
//!
//! Floating-point distributions carry a mass tolerance of `1e-12`. For the
//! probability bounds on the collision and min-entropy gaps, where landing a
//! hair over a bound must not be a rounding artifact, [`CountJoint`] gives an
//! exact integer mode.

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MASS_TOLERANCE: f64 = 1e-12;

/// Slack used when comparing floating-point entropy gaps to a threshold.
const GAP_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Shannon,
    Renyi2,
    Min,
}

impl std::str::FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shannon" => Ok(Measure::Shannon),
            "renyi2" | "renyi" => Ok(Measure::Renyi2),
            "min" => Ok(Measure::Min),
            other => Err(Error::InvalidParameter(format!("unknown measure {other:?}"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Raw probability vectors
// ---------------------------------------------------------------------------

pub fn shannon_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

pub fn renyi2_of(probs: &[f64]) -> f64 {
    let collision: f64 = probs.iter().map(|p| p * p).sum();
    (-collision.log2()).max(0.0)
}

pub fn min_of(probs: &[f64]) -> f64 {
    let max = probs.iter().copied().fold(0.0_f64, f64::max);
    (-max.log2()).max(0.0)
}

pub fn entropy_of(probs: &[f64], measure: Measure) -> f64 {
    match measure {
        Measure::Shannon => shannon_of(probs),
        Measure::Renyi2 => renyi2_of(probs),
        Measure::Min => min_of(probs),
    }
}

fn validate_masses(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty support".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!("bad probability {p}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

fn validate_distinct<S: Eq + Hash>(support: &[S], axis: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(support.len());
    if support.iter().all(|s| seen.insert(s)) {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{axis} support symbols are not distinct"
        )))
    }
}

// ---------------------------------------------------------------------------
// DiscreteDistribution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution<S>", bound(deserialize = "S: Deserialize<'de> + Eq + Hash"))]
pub struct DiscreteDistribution<S> {
    support: Vec<S>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDistribution<S> {
    support: Vec<S>,
    probs: Vec<f64>,
}

impl<S: Eq + Hash> TryFrom<RawDistribution<S>> for DiscreteDistribution<S> {
    type Error = Error;

    fn try_from(raw: RawDistribution<S>) -> Result<Self> {
        DiscreteDistribution::new(raw.support, raw.probs)
    }
}

impl<S: Eq + Hash> DiscreteDistribution<S> {
    pub fn new(support: Vec<S>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} symbols but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        validate_masses(&probs)?;
        validate_distinct(&support, "distribution")?;
        Ok(Self { support, probs })
    }

    pub fn uniform(support: Vec<S>) -> Result<Self> {
        let n = support.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Self::new(support, vec![1.0 / n as f64; n])
    }

    pub fn point_mass(symbol: S) -> Self {
        Self {
            support: vec![symbol],
            probs: vec![1.0],
        }
    }
}

impl<S> DiscreteDistribution<S> {
    pub fn support(&self) -> &[S] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn entropy(&self, measure: Measure) -> f64 {
        entropy_of(&self.probs, measure)
    }
}

pub fn shannon_entropy<S>(d: &DiscreteDistribution<S>) -> f64 {
    shannon_of(&d.probs)
}

pub fn renyi2_entropy<S>(d: &DiscreteDistribution<S>) -> f64 {
    renyi2_of(&d.probs)
}

pub fn min_entropy<S>(d: &DiscreteDistribution<S>) -> f64 {
    min_of(&d.probs)
}

// ---------------------------------------------------------------------------
// JointDistribution
// ---------------------------------------------------------------------------

/// Joint law of `(X, T)`, stored row-major with one row per `x` symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawJoint<X, T>",
    into = "RawJoint<X, T>",
    bound(
        serialize = "X: Serialize + Clone, T: Serialize + Clone",
        deserialize = "X: Deserialize<'de> + Eq + Hash, T: Deserialize<'de> + Eq + Hash"
    )
)]
pub struct JointDistribution<X, T> {
    x_support: Vec<X>,
    t_support: Vec<T>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawJoint<X, T> {
    x_support: Vec<X>,
    t_support: Vec<T>,
    probs: Vec<Vec<f64>>,
}

impl<X: Eq + Hash, T: Eq + Hash> TryFrom<RawJoint<X, T>> for JointDistribution<X, T> {
    type Error = Error;

    fn try_from(raw: RawJoint<X, T>) -> Result<Self> {
        JointDistribution::from_rows(raw.x_support, raw.t_support, raw.probs)
    }
}

impl<X: Clone, T: Clone> From<JointDistribution<X, T>> for RawJoint<X, T> {
    fn from(j: JointDistribution<X, T>) -> Self {
        let cols = j.t_support.len();
        RawJoint {
            probs: j.probs.chunks(cols).map(<[f64]>::to_vec).collect(),
            x_support: j.x_support,
            t_support: j.t_support,
        }
    }
}

impl<X: Eq + Hash, T: Eq + Hash> JointDistribution<X, T> {
    /// Builds from a flat row-major table `probs[x * |T| + t]`.
    pub fn new(x_support: Vec<X>, t_support: Vec<T>, probs: Vec<f64>) -> Result<Self> {
        if x_support.len() * t_support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{}x{} table needs {} entries, got {}",
                x_support.len(),
                t_support.len(),
                x_support.len() * t_support.len(),
                probs.len()
            )));
        }
        validate_masses(&probs)?;
        validate_distinct(&x_support, "x")?;
        validate_distinct(&t_support, "t")?;
        Ok(Self {
            x_support,
            t_support,
            probs,
        })
    }

    pub fn from_rows(x_support: Vec<X>, t_support: Vec<T>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.iter().any(|r| r.len() != t_support.len()) {
            return Err(Error::InvalidDistribution("ragged probability matrix".into()));
        }
        Self::new(x_support, t_support, rows.into_iter().flatten().collect())
    }

    /// The product law `p(x) p(t)`.
    pub fn product(px: &DiscreteDistribution<X>, pt: &DiscreteDistribution<T>) -> Self
    where
        X: Clone,
        T: Clone,
    {
        let probs = px
            .probs
            .iter()
            .flat_map(|a| pt.probs.iter().map(move |b| a * b))
            .collect();
        Self {
            x_support: px.support.clone(),
            t_support: pt.support.clone(),
            probs,
        }
    }

    pub fn conditional_x_given(&self, t: &T) -> Result<DiscreteDistribution<X>>
    where
        X: Clone,
    {
        let col = self.t_index(t)?;
        let column = self.column(col);
        let mass: f64 = column.iter().sum();
        if mass <= 0.0 {
            return Err(Error::ZeroMassSlice(format!("column {col}")));
        }
        Ok(DiscreteDistribution {
            support: self.x_support.clone(),
            probs: column.iter().map(|p| p / mass).collect(),
        })
    }

    fn t_index(&self, t: &T) -> Result<usize> {
        self.t_support
            .iter()
            .position(|s| s == t)
            .ok_or_else(|| Error::Domain("symbol not in t support".into()))
    }
}

impl<X, T> JointDistribution<X, T> {
    pub fn x_support(&self) -> &[X] {
        &self.x_support
    }

    pub fn t_support(&self) -> &[T] {
        &self.t_support
    }

    /// Flat row-major probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x_support.len(), self.t_support.len())
    }

    fn column(&self, col: usize) -> Vec<f64> {
        let cols = self.t_support.len();
        (0..self.x_support.len())
            .map(|x| self.probs[x * cols + col])
            .collect()
    }

    pub fn marginal_x_probs(&self) -> Vec<f64> {
        self.probs
            .chunks(self.t_support.len())
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn marginal_t_probs(&self) -> Vec<f64> {
        let cols = self.t_support.len();
        let mut out = vec![0.0; cols];
        for row in self.probs.chunks(cols) {
            for (acc, p) in out.iter_mut().zip(row) {
                *acc += p;
            }
        }
        out
    }

    pub fn marginal_x(&self) -> DiscreteDistribution<X>
    where
        X: Clone,
    {
        DiscreteDistribution {
            support: self.x_support.clone(),
            probs: self.marginal_x_probs(),
        }
    }

    pub fn marginal_t(&self) -> DiscreteDistribution<T>
    where
        T: Clone,
    {
        DiscreteDistribution {
            support: self.t_support.clone(),
            probs: self.marginal_t_probs(),
        }
    }

    /// `‖T‖`: number of `t` with positive marginal mass.
    pub fn t_cardinality(&self) -> usize {
        self.marginal_t_probs().iter().filter(|&&p| p > 0.0).count()
    }

    /// Iterates `(Pr(T = t), p(X | T = t))` over positive-mass columns.
    fn slices(&self) -> impl Iterator<Item = (usize, f64, Vec<f64>)> + '_ {
        (0..self.t_support.len()).filter_map(move |col| {
            let column = self.column(col);
            let mass: f64 = column.iter().sum();
            (mass > 0.0).then(|| (col, mass, column.iter().map(|p| p / mass).collect()))
        })
    }
}

/// `H(X | T) = Σ_t p(t) H(X | T = t)`.
pub fn conditional_shannon<X, T>(j: &JointDistribution<X, T>) -> f64 {
    j.slices().map(|(_, mass, cond)| mass * shannon_of(&cond)).sum()
}

pub fn conditional_slice<X, T>(j: &JointDistribution<X, T>, t: &T, measure: Measure) -> Result<f64>
where
    X: Eq + Hash + Clone,
    T: Eq + Hash,
{
    Ok(j.conditional_x_given(t)?.entropy(measure))
}

/// Upper bound on the violation mass: `2^{-(s/2-1)}` for the collision
/// entropy and `2^{-s}` for min entropy.
pub fn side_info_bound(measure: Measure, s: f64) -> Result<f64> {
    match measure {
        Measure::Renyi2 => Ok(2f64.powf(-(s / 2.0 - 1.0))),
        Measure::Min => Ok(2f64.powf(-s)),
        Measure::Shannon => Err(Error::InvalidParameter(
            "the probabilistic side-information bound applies to renyi2 and min only".into(),
        )),
    }
}

/// Total mass of the `t` for which `H(X) - H(X | T = t)` exceeds
/// `log₂‖T‖ + s` under the chosen measure.
pub fn side_info_violation_mass<X, T>(j: &JointDistribution<X, T>, measure: Measure, s: f64) -> Result<f64> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
    }
    side_info_bound(measure, s)?;
    let unconditional = entropy_of(&j.marginal_x_probs(), measure);
    let threshold = (j.t_cardinality() as f64).log2() + s;
    Ok(j.slices()
        .filter(|(_, _, cond)| unconditional - entropy_of(cond, measure) > threshold + GAP_TOLERANCE)
        .map(|(_, mass, _)| mass)
        .sum())
}

/// `I(X; T)` computed as `H(X) - H(X | T)`.
pub fn mutual_information<X, T>(j: &JointDistribution<X, T>) -> f64 {
    (shannon_of(&j.marginal_x_probs()) - conditional_shannon(j)).max(0.0)
}

/// Both sides of `E_T[max_x p(x|t)] ≤ ‖T‖ · max_x p(x)`.
pub fn posterior_guessing_bound<X, T>(j: &JointDistribution<X, T>) -> (f64, f64) {
    let lhs = j
        .slices()
        .map(|(_, mass, cond)| mass * cond.iter().copied().fold(0.0, f64::max))
        .sum();
    let max_prior = j.marginal_x_probs().into_iter().fold(0.0, f64::max);
    (lhs, j.t_cardinality() as f64 * max_prior)
}

// ---------------------------------------------------------------------------
// Exact integer mode
// ---------------------------------------------------------------------------

/// A joint law with rational entries `counts[x][t] / total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountJoint {
    x_len: usize,
    t_len: usize,
    counts: Vec<u64>,
    total: u64,
}

/// Violating mass as the exact fraction `violating / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactMass {
    pub violating: u64,
    pub total: u64,
}

impl ExactMass {
    pub fn as_f64(&self) -> f64 {
        self.violating as f64 / self.total as f64
    }
}

/// `s` restricted to half-integers so that `2^s` comparisons stay in
/// integer arithmetic after squaring. `HalfBits(3)` is `s = 1.5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HalfBits(pub u32);

impl HalfBits {
    pub fn from_f64(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if s > 0.0 && twice.fract() == 0.0 && twice <= 120.0 {
            Ok(HalfBits(twice as u32))
        } else {
            Err(Error::InvalidParameter(format!(
                "exact mode needs s to be a positive half-integer, got {s}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

fn mul(a: u128, b: u128) -> Result<u128> {
    a.checked_mul(b)
        .ok_or_else(|| Error::InvalidParameter("exact comparison overflowed u128".into()))
}

fn pow2(exp: u32) -> Result<u128> {
    1u128
        .checked_shl(exp)
        .ok_or_else(|| Error::InvalidParameter("exact comparison overflowed u128".into()))
}

impl CountJoint {
    pub fn new(x_len: usize, t_len: usize, counts: Vec<u64>) -> Result<Self> {
        if x_len == 0 || t_len == 0 || counts.len() != x_len * t_len {
            return Err(Error::InvalidDistribution("bad count table shape".into()));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("all counts are zero".into()));
        }
        Ok(Self {
            x_len,
            t_len,
            counts,
            total,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x_len, self.t_len)
    }

    fn count(&self, x: usize, t: usize) -> u64 {
        self.counts[x * self.t_len + t]
    }

    fn t_counts(&self) -> Vec<u64> {
        (0..self.t_len)
            .map(|t| (0..self.x_len).map(|x| self.count(x, t)).sum())
            .collect()
    }

    fn x_counts(&self) -> Vec<u64> {
        self.counts
            .chunks(self.t_len)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn t_cardinality(&self) -> usize {
        self.t_counts().iter().filter(|&&c| c > 0).count()
    }

    pub fn to_joint(&self) -> JointDistribution<usize, usize> {
        JointDistribution {
            x_support: (0..self.x_len).collect(),
            t_support: (0..self.t_len).collect(),
            probs: self
                .counts
                .iter()
                .map(|&c| c as f64 / self.total as f64)
                .collect(),
        }
    }

    /// Exact counterpart of [`side_info_violation_mass`].
    ///
    /// With `D = total`, `c_t = Σ_x c(x,t)` and `c_x = Σ_t c(x,t)`, the
    /// collision-entropy gap exceeds `log₂‖T‖ + s` iff
    /// `Σ_x c(x,t)² · D² > 2^s ‖T‖ · c_t² · Σ_x c_x²`, and the min-entropy
    /// gap iff `max_x c(x,t) · D > 2^s ‖T‖ · c_t · max_x c_x`. Both sides are
    /// squared so that `2^{2s}` is an integer power of two.
    pub fn violation_mass(&self, measure: Measure, s: HalfBits) -> Result<ExactMass> {
        side_info_bound(measure, s.value())?;
        let t_counts = self.t_counts();
        let x_counts = self.x_counts();
        let card = t_counts.iter().filter(|&&c| c > 0).count() as u128;
        let d = self.total as u128;
        let scale = mul(pow2(s.0)?, card * card)?;
        let mut violating = 0u64;
        for (t, &ct) in t_counts.iter().enumerate() {
            if ct == 0 {
                continue;
            }
            let ct = ct as u128;
            let (lhs, rhs) = match measure {
                Measure::Renyi2 => {
                    let col_sq: u128 = (0..self.x_len)
                        .map(|x| (self.count(x, t) as u128).pow(2))
                        .sum();
                    let prior_sq: u128 = x_counts.iter().map(|&c| (c as u128).pow(2)).sum();
                    (mul(col_sq, d * d)?, mul(ct * ct, prior_sq)?)
                }
                Measure::Min => {
                    let col_max = (0..self.x_len).map(|x| self.count(x, t)).max().unwrap_or(0) as u128;
                    let prior_max = x_counts.iter().copied().max().unwrap_or(0) as u128;
                    (mul(col_max, d)?, mul(ct, prior_max)?)
                }
                Measure::Shannon => unreachable!("rejected by side_info_bound"),
            };
            if mul(lhs, lhs)? > mul(scale, mul(rhs, rhs)?)? {
                violating += ct as u64;
            }
        }
        Ok(ExactMass {
            violating,
            total: self.total,
        })
    }
}

/// Exact test of `mass ≤ 2^{-(s/2-1)}` (collision) or `mass ≤ 2^{-s}` (min).
pub fn exact_within_bound(mass: ExactMass, measure: Measure, s: HalfBits) -> Result<bool> {
    let m = mass.violating as u128;
    let d = mass.total as u128;
    match measure {
        // (M/D)^4 ≤ 2^{4 - 2s}  ⇔  M^4 · 2^{2s} ≤ 16 D^4
        Measure::Renyi2 => {
            let lhs = mul(mul(m * m, m * m)?, pow2(s.0)?)?;
            let rhs = mul(16, mul(d * d, d * d)?)?;
            Ok(lhs <= rhs)
        }
        // (M/D)^2 ≤ 2^{-2s}  ⇔  M^2 · 2^{2s} ≤ D^2
        Measure::Min => Ok(mul(m * m, pow2(s.0)?)? <= d * d),
        Measure::Shannon => Err(Error::InvalidParameter(
            "no probabilistic bound for shannon".into(),
        )),
    }
}

/// Calls `f` on every way of writing `total` as an ordered sum of `parts`
/// non-negative counts, i.e. every point of the simplex grid with mass step
/// `1/total`. Useful with [`CountJoint`] for exhaustive sweeps.
pub fn for_each_composition(total: u64, parts: usize, mut f: impl FnMut(&[u64])) {
    fn fill(slot: usize, left: u64, buf: &mut [u64], f: &mut dyn FnMut(&[u64])) {
        if slot + 1 == buf.len() {
            buf[slot] = left;
            f(buf);
            return;
        }
        for c in 0..=left {
            buf[slot] = c;
            fill(slot + 1, left - c, buf, f);
        }
    }
    if parts == 0 {
        return;
    }
    let mut buf = vec![0u64; parts];
    fill(0, total, &mut buf, &mut f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn composition_count() {
        // C(8 + 3, 3) compositions of 8 into 4 parts
        let mut n = 0;
        for_each_composition(8, 4, |c| {
            assert_eq!(c.iter().sum::<u64>(), 8);
            n += 1;
        });
        assert_eq!(n, 165);
    }

    fn copy_joint(m: usize) -> JointDistribution<usize, usize> {
        let mut probs = vec![0.0; m * m];
        for i in 0..m {
            probs[i * m + i] = 1.0 / m as f64;
        }
        JointDistribution::new((0..m).collect(), (0..m).collect(), probs).unwrap()
    }

    #[test]
    fn shannon_examples() {
        let uniform = DiscreteDistribution::uniform(vec!['a', 'b', 'c', 'd']).unwrap();
        assert_abs_diff_eq!(shannon_entropy(&uniform), 2.0, epsilon = 1e-12);
        assert_eq!(shannon_entropy(&DiscreteDistribution::point_mass(0)), 0.0);
        let d = DiscreteDistribution::new(vec![0, 1, 2], vec![0.5, 0.25, 0.25]).unwrap();
        // direct summation: 0.5·1 + 2·0.25·2
        assert_abs_diff_eq!(shannon_entropy(&d), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn renyi_and_min_examples() {
        let d = DiscreteDistribution::new(vec![0, 1], vec![0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(renyi2_entropy(&d), -(10.0f64 / 16.0).log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(renyi2_entropy(&d), 0.678_071_905_112_638, epsilon = 1e-12);
        assert_abs_diff_eq!(min_entropy(&d), (4.0f64 / 3.0).log2(), epsilon = 1e-12);
        let u = DiscreteDistribution::uniform((0..8).collect()).unwrap();
        assert_abs_diff_eq!(renyi2_entropy(&u), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(min_entropy(&u), 3.0, epsilon = 1e-12);
        assert_eq!(renyi2_entropy(&DiscreteDistribution::point_mass(1)), 0.0);
        assert_eq!(min_entropy(&DiscreteDistribution::point_mass(1)), 0.0);
    }

    #[test]
    fn validation_rejects_bad_input() {
        assert!(matches!(
            DiscreteDistribution::new(vec![0, 1], vec![0.7, 0.4]),
            Err(Error::InvalidDistribution(_))
        ));
        assert!(DiscreteDistribution::new(vec![0, 1], vec![1.1, -0.1]).is_err());
        assert!(DiscreteDistribution::new(vec![0, 0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0], vec![0.5, 0.5]).is_err());
        assert!(JointDistribution::new(vec![0], vec![0, 1], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn conditional_examples() {
        let px = DiscreteDistribution::new(vec![0, 1, 2], vec![0.5, 0.25, 0.25]).unwrap();
        let pt = DiscreteDistribution::new(vec!['x', 'y'], vec![0.3, 0.7]).unwrap();
        let indep = JointDistribution::product(&px, &pt);
        assert_abs_diff_eq!(conditional_shannon(&indep), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_information(&indep), 0.0, epsilon = 1e-12);
        for t in ['x', 'y'] {
            for m in [Measure::Shannon, Measure::Renyi2, Measure::Min] {
                assert_abs_diff_eq!(
                    conditional_slice(&indep, &t, m).unwrap(),
                    px.entropy(m),
                    epsilon = 1e-12
                );
            }
        }
        let copy = copy_joint(4);
        assert_abs_diff_eq!(conditional_shannon(&copy), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mutual_information(&copy), 2.0, epsilon = 1e-12);
        assert_eq!(conditional_slice(&copy, &2, Measure::Min).unwrap(), 0.0);
    }

    #[test]
    fn conditional_slice_hand_normalized() {
        // Column t=0 holds (0.1, 0.1, 0.2, 0.0); normalized: (1/4, 1/4, 1/2, 0).
        let rows = vec![
            vec![0.1, 0.2],
            vec![0.1, 0.2],
            vec![0.2, 0.1],
            vec![0.0, 0.1],
        ];
        let j = JointDistribution::from_rows((0..4).collect(), vec![0, 1], rows).unwrap();
        assert_abs_diff_eq!(conditional_slice(&j, &0, Measure::Shannon).unwrap(), 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            conditional_slice(&j, &0, Measure::Renyi2).unwrap(),
            -(0.0625f64 + 0.0625 + 0.25).log2(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(conditional_slice(&j, &0, Measure::Min).unwrap(), 1.0, epsilon = 1e-12);
        // Column t=1: (1/3, 1/3, 1/6, 1/6).
        let expected = -(2.0 * (1.0f64 / 3.0) * (1.0f64 / 3.0).log2()
            + 2.0 * (1.0 / 6.0) * (1.0f64 / 6.0).log2());
        assert_abs_diff_eq!(conditional_slice(&j, &1, Measure::Shannon).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn zero_mass_slice_is_an_error() {
        let j = JointDistribution::from_rows(vec![0, 1], vec![0, 1], vec![vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap();
        assert!(matches!(
            conditional_slice(&j, &1, Measure::Shannon),
            Err(Error::ZeroMassSlice(_))
        ));
        assert_eq!(j.t_cardinality(), 1);
    }

    #[test]
    fn violation_mass_examples() {
        let px = DiscreteDistribution::new(vec![0, 1, 2], vec![0.6, 0.3, 0.1]).unwrap();
        let pt = DiscreteDistribution::uniform(vec![0, 1]).unwrap();
        let indep = JointDistribution::product(&px, &pt);
        for s in [0.5, 1.0, 2.0, 4.0] {
            assert_eq!(side_info_violation_mass(&indep, Measure::Renyi2, s).unwrap(), 0.0);
            assert_eq!(side_info_violation_mass(&indep, Measure::Min, s).unwrap(), 0.0);
        }
        for m in [2usize, 3, 4, 8] {
            let copy = copy_joint(m);
            let s = (m as f64).log2();
            assert_eq!(side_info_violation_mass(&copy, Measure::Renyi2, s).unwrap(), 0.0);
            assert_eq!(side_info_violation_mass(&copy, Measure::Min, s).unwrap(), 0.0);
        }
        assert!(side_info_violation_mass(&indep, Measure::Min, 0.0).is_err());
        assert!(side_info_violation_mass(&indep, Measure::Min, -1.0).is_err());
        assert!(side_info_violation_mass(&indep, Measure::Shannon, 1.0).is_err());
    }

    #[test]
    fn exact_mode_agrees_with_float_mode() {
        // Skewed joint: x=0 dominates column 0, column 1 is spread out.
        let counts = vec![6, 0, 0, 1, 0, 1, 0, 0];
        let cj = CountJoint::new(4, 2, counts).unwrap();
        let j = cj.to_joint();
        for h in [1u32, 2, 4, 8] {
            for m in [Measure::Renyi2, Measure::Min] {
                let exact = cj.violation_mass(m, HalfBits(h)).unwrap();
                let float = side_info_violation_mass(&j, m, h as f64 / 2.0).unwrap();
                assert_abs_diff_eq!(exact.as_f64(), float, epsilon = 1e-12);
                assert!(exact_within_bound(exact, m, HalfBits(h)).unwrap());
            }
        }
    }

    #[test]
    fn exact_bound_comparison_is_sharp() {
        // 2^{-s} with s = 1 is exactly 1/2.
        let half = ExactMass { violating: 4, total: 8 };
        assert!(exact_within_bound(half, Measure::Min, HalfBits(2)).unwrap());
        let over = ExactMass { violating: 5, total: 8 };
        assert!(!exact_within_bound(over, Measure::Min, HalfBits(2)).unwrap());
        // Collision bound at s = 4 is 2^{-1}.
        assert!(exact_within_bound(half, Measure::Renyi2, HalfBits(8)).unwrap());
        assert!(!exact_within_bound(over, Measure::Renyi2, HalfBits(8)).unwrap());
        assert!(HalfBits::from_f64(0.3).is_err());
        assert_eq!(HalfBits::from_f64(0.5).unwrap(), HalfBits(1));
    }

    #[test]
    fn json_round_trip() {
        let d = DiscreteDistribution::new(vec!["a".to_string(), "b".into()], vec![0.25, 0.75]).unwrap();
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, r#"{"support":["a","b"],"probs":[0.25,0.75]}"#);
        let back: DiscreteDistribution<String> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"support":["a","b"],"probs":[0.5,0.6]}"#;
        assert!(serde_json::from_str::<DiscreteDistribution<String>>(bad).is_err());

        let j = JointDistribution::from_rows(vec![0, 1], vec!['u', 'v'], vec![vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(text, r#"{"x_support":[0,1],"t_support":["u","v"],"probs":[[0.1,0.2],[0.3,0.4]]}"#);
        let back: JointDistribution<i32, char> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, j);
    }
}
