//! Parameter calculators with the explicit constants of the convex and
//! strongly convex complexity bounds.

use serde::{Deserialize, Serialize};

use super::schedule::ClipPolicy;
use crate::error::{Result, ZoError};

/// `σ = √d·M₂/2^{1/4}`, the moment scale of a single two-point estimate.
pub fn estimator_sigma(m2: f64, d: usize) -> f64 {
    (d as f64).sqrt() * m2 / 2f64.powf(0.25)
}

/// Theoretical parameters for the convex case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexParams {
    pub a: f64,
    pub tau: f64,
    /// `L = √d·M₂/τ`.
    pub smoothness: f64,
    pub sigma: f64,
    /// `ln(4K/β)`.
    pub log_term: f64,
    pub radius: f64,
    pub iterations: u64,
    pub batch: u64,
}

impl ConvexParams {
    /// `α_{k+1} = (k+2)/(2aL)`.
    pub fn alpha(&self, k: u64) -> f64 {
        (k as f64 + 2.0) / (2.0 * self.a * self.smoothness)
    }

    /// `λ_k = R/(30·α_{k+1}·ln(4K/β))`.
    pub fn lambda(&self, k: u64) -> f64 {
        self.radius / (30.0 * self.alpha(k) * self.log_term)
    }

    pub fn lambda_schedule(&self) -> Vec<f64> {
        (0..self.iterations).map(|k| self.lambda(k)).collect()
    }

    /// The same levels without materializing them.
    pub fn clip_policy(&self) -> ClipPolicy {
        ClipPolicy::InverseStep { numerator: self.radius / (30.0 * self.log_term) }
    }
}

fn check_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(ZoError::invalid(format!("{name} must be positive and finite, got {v}")));
        }
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(ZoError::invalid(format!("moment index must lie in (1, 2], got {alpha}")));
    }
    Ok(())
}

/// The step parameter `a = max{48600·ℓ², 1800·σ(K+1)K^{1/α}·ℓ^{(α−1)/α}/(B^{(α−1)/α}·L·R)}`
/// with `ℓ` the supplied log term.
pub(crate) fn step_parameter(log_term: f64, sigma: f64, k: f64, alpha: f64, batch: f64, smoothness: f64, radius: f64) -> f64 {
    let q = (alpha - 1.0) / alpha;
    let first = 48600.0 * log_term * log_term;
    let second = 1800.0 * sigma * (k + 1.0) * k.powf(1.0 / alpha) * log_term.powf(q)
        / (batch.powf(q) * smoothness * radius);
    first.max(second)
}

/// Theoretical `a`, `τ`, `L` and clipping levels for `K` iterations with batch
/// `B` in the convex case.
///
/// Requires `ln(4K/β) ≥ 1`.
#[allow(clippy::too_many_arguments)]
pub fn theoretical_params_convex(
    eps: f64,
    beta: f64,
    radius: f64,
    m2: f64,
    d: usize,
    alpha: f64,
    batch: u64,
    iterations: u64,
) -> Result<ConvexParams> {
    check_positive(&[("eps", eps), ("beta", beta), ("R", radius), ("M2", m2)])?;
    check_alpha(alpha)?;
    if d == 0 || batch == 0 || iterations == 0 {
        return Err(ZoError::invalid("d, B and K must be at least 1"));
    }
    let k = iterations as f64;
    let log_term = (4.0 * k / beta).ln();
    if log_term < 1.0 {
        return Err(ZoError::invalid(format!("need ln(4K/beta) >= 1, got {log_term}")));
    }
    let sigma = estimator_sigma(m2, d);
    let tau = eps / (4.0 * m2);
    let smoothness = m2 * (d as f64).sqrt() / tau;
    let a = step_parameter(log_term, sigma, k, alpha, batch as f64, smoothness, radius);
    Ok(ConvexParams { a, tau, smoothness, sigma, log_term, radius, iterations, batch })
}

/// Largest useful batch, `⌊(√d·M₂·R/ε)^{1/(α−1)}⌋`, at least 1.
pub fn batch_cap(m2: f64, d: usize, radius: f64, eps: f64, alpha: f64) -> Result<u64> {
    check_positive(&[("M2", m2), ("R", radius), ("eps", eps)])?;
    check_alpha(alpha)?;
    if d == 0 {
        return Err(ZoError::invalid("d must be at least 1"));
    }
    let base = (d as f64).sqrt() * m2 * radius / eps;
    if base <= 1.0 {
        return Ok(1);
    }
    let cap = base.powf(1.0 / (alpha - 1.0));
    // Guard against an exact integer landing a hair below itself.
    let rounded = cap.round();
    let cap = if (cap - rounded).abs() <= 1e-9 * rounded { rounded } else { cap.floor() };
    Ok(if cap >= u64::MAX as f64 { u64::MAX } else { (cap as u64).max(1) })
}
