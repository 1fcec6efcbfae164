use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};

/// Problem class for the admissible adversarial noise level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseSetting {
    NonsmoothConvex,
    NonsmoothStronglyConvex,
    SmoothConvex,
    SmoothStronglyConvex,
}

impl std::str::FromStr for NoiseSetting {
    type Err = ZoError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "nonsmooth-convex" => NoiseSetting::NonsmoothConvex,
            "nonsmooth-strongly-convex" => NoiseSetting::NonsmoothStronglyConvex,
            "smooth-convex" => NoiseSetting::SmoothConvex,
            "smooth-strongly-convex" => NoiseSetting::SmoothStronglyConvex,
            other => return Err(ZoError::invalid(format!("unknown noise setting {other:?}"))),
        })
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ZoError::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// Largest adversarial level `Δ` that keeps the clean convergence rate, with
/// proportionality constant 1:
///
/// | setting                   | level                       |
/// |---------------------------|-----------------------------|
/// | non-smooth convex         | `ε² / (R M₂ √d)`            |
/// | non-smooth strongly convex| `√μ ε^{3/2} / (√d M₂)`      |
/// | smooth convex             | `ε^{3/2} / (R √(d L))`      |
/// | smooth strongly convex    | `√μ ε / √(d L)`             |
///
/// `lipschitz` is `M₂` in the non-smooth settings and the gradient Lipschitz
/// constant `L` in the smooth ones. Only the inputs a setting uses are
/// validated: `radius` is ignored by the strongly convex settings and `mu` by
/// the convex ones.
pub fn admissible_noise_level(
    setting: NoiseSetting,
    eps: f64,
    radius: f64,
    lipschitz: f64,
    d: usize,
    mu: f64,
) -> Result<f64> {
    let eps = positive("eps", eps)?;
    let lip = positive("M2/L", lipschitz)?;
    if d == 0 {
        return Err(ZoError::invalid("d must be positive"));
    }
    let sqrt_d = (d as f64).sqrt();
    Ok(match setting {
        NoiseSetting::NonsmoothConvex => eps * eps / (positive("R", radius)? * lip * sqrt_d),
        NoiseSetting::NonsmoothStronglyConvex => {
            positive("mu", mu)?.sqrt() * eps.powf(1.5) / (sqrt_d * lip)
        }
        NoiseSetting::SmoothConvex => eps.powf(1.5) / (positive("R", radius)? * (d as f64 * lip).sqrt()),
        NoiseSetting::SmoothStronglyConvex => positive("mu", mu)?.sqrt() * eps / (d as f64 * lip).sqrt(),
    })
}

/// Level at which the perturbation's bias in the gradient estimate stays below
/// the target accuracy: `τ ε / (R √d)`.
pub fn bias_noise_level(tau: f64, eps: f64, radius: f64, d: usize) -> Result<f64> {
    if d == 0 {
        return Err(ZoError::invalid("d must be positive"));
    }
    Ok(positive("tau", tau)? * positive("eps", eps)? / (positive("R", radius)? * (d as f64).sqrt()))
}
