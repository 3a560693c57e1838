//! Rational gain decomposition and the closed-form secure degrees of
//! freedom achievable with nested lattice codes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `√(ab) = p/q + γ/q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainDecomposition {
    pub p: u64,
    pub q: u64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofPoint {
    pub alpha: f64,
    pub beta: f64,
    pub sdof: f64,
}

/// Below this `|γ|` counts as zero.
const GAMMA_ZERO: f64 = 1e-12;

/// `|γ|` values closer than this are a tie; `q·√(ab)` carries rounding
/// noise, so 1.1 must not prefer `q = 9` over `q = 1`.
const GAMMA_TIE: f64 = 1e-9;

/// Minimises `|γ|` over `q ≤ q_max` with `p = round(q·√(ab)) ≥ 1`, keeping
/// only `0 < |γ| < 0.5`. Ties go to the smallest `q`.
pub fn decompose_gain(sqrt_ab: f64, q_max: u64) -> Result<GainDecomposition> {
    if !(sqrt_ab.is_finite() && sqrt_ab > 0.0) {
        return Err(Error::Domain(format!("gain must be positive, got {sqrt_ab}")));
    }
    if q_max == 0 {
        return Err(Error::InvalidParameter("q_max must be at least 1".into()));
    }
    let mut best: Option<GainDecomposition> = None;
    for q in 1..=q_max {
        let scaled = q as f64 * sqrt_ab;
        let p = scaled.round();
        let gamma = scaled - p;
        if p < 1.0 || gamma.abs() <= GAMMA_ZERO || gamma.abs() >= 0.5 {
            continue;
        }
        if best.map_or(true, |b| gamma.abs() < b.gamma.abs() - GAMMA_TIE) {
            best = Some(GainDecomposition { p: p as u64, q, gamma });
        }
    }
    best.ok_or_else(|| {
        Error::Domain(format!(
            "no decomposition of {sqrt_ab} with 0 < |γ| < 0.5 and q ≤ {q_max}"
        ))
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.abs() <= GAMMA_ZERO || gamma.abs() >= 0.5 || !gamma.is_finite() {
        Err(Error::Domain(format!("need 0 < |γ| < 0.5, got {gamma}")))
    } else {
        Ok(())
    }
}

/// `α = (1 − 2γ² + √(1 − 4γ²)) / (2γ⁴)`.
pub fn alpha_of(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let g2 = gamma * gamma;
    Ok((1.0 - 2.0 * g2 + (1.0 - 4.0 * g2).sqrt()) / (2.0 * g2 * g2))
}

/// `β = q² + (p + γ)²`.
pub fn beta_of(p: u64, q: u64, gamma: f64) -> f64 {
    (q as f64).powi(2) + (p as f64 + gamma).powi(2)
}

/// `[(¼ log₂ α − 1) / (½ log₂(αβ + 1))]⁺`.
pub fn sdof_of(alpha: f64, beta: f64) -> f64 {
    let numerator = 0.25 * alpha.log2() - 1.0;
    if numerator <= 0.0 {
        return 0.0;
    }
    numerator / (0.5 * (alpha * beta + 1.0).log2())
}

pub fn dof_point(d: &GainDecomposition) -> Result<DofPoint> {
    let alpha = alpha_of(d.gamma)?;
    let beta = beta_of(d.p, d.q, d.gamma);
    Ok(DofPoint {
        alpha,
        beta,
        sdof: sdof_of(alpha, beta),
    })
}

/// One landscape row; the optional fields are empty where no admissible
/// decomposition exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeRow {
    pub sqrt_ab: f64,
    pub p: Option<u64>,
    pub q: Option<u64>,
    pub gamma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sdof: Option<f64>,
}

pub fn sdof_landscape(grid: &[f64], q_max: u64) -> Result<Vec<LandscapeRow>> {
    grid.iter()
        .map(|&s| {
            let empty = LandscapeRow {
                sqrt_ab: s,
                p: None,
                q: None,
                gamma: None,
                alpha: None,
                beta: None,
                sdof: None,
            };
            match decompose_gain(s, q_max) {
                Ok(d) => {
                    let point = dof_point(&d)?;
                    Ok(LandscapeRow {
                        p: Some(d.p),
                        q: Some(d.q),
                        gamma: Some(d.gamma),
                        alpha: Some(point.alpha),
                        beta: Some(point.beta),
                        sdof: Some(point.sdof),
                        ..empty
                    })
                }
                Err(Error::Domain(_)) => Ok(empty),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// `start, start + step, …` up to `end` inclusive (within half a step).
/// Points are computed as `start + k·step` so no error accumulates.
pub fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && start.is_finite() && end.is_finite() && end >= start) {
        return Err(Error::InvalidParameter(format!("bad grid {start}:{end}:{step}")));
    }
    let count = ((end - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}
