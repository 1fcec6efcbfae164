use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};

/// Step sizes `α_{k+1} = (k+2)/(2aL)` and their running sum `A_k`.
///
/// Kept in `f64` whatever the vector scalar type, so `A_k` stays accurate
/// over millions of iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SstmSchedule {
    a: f64,
    smoothness: f64,
    k: u64,
    alpha_next: f64,
    a_curr: f64,
}

/// One step of the schedule: `α_{k+1}`, `A_k` and `A_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub k: u64,
    pub alpha: f64,
    pub a_prev: f64,
    pub a_next: f64,
}

impl SstmSchedule {
    pub fn new(a: f64, smoothness: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(smoothness > 0.0 && smoothness.is_finite()) {
            return Err(ZoError::invalid(format!(
                "schedule needs positive finite a and L, got a = {a}, L = {smoothness}"
            )));
        }
        Ok(Self {
            a,
            smoothness,
            k: 0,
            alpha_next: 1.0 / (a * smoothness),
            a_curr: 0.0,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `α_{k+1}` for the current `k`.
    pub fn alpha_next(&self) -> f64 {
        self.alpha_next
    }

    /// `A_k`.
    pub fn a_curr(&self) -> f64 {
        self.a_curr
    }

    /// `α_{k+1}` for arbitrary `k`.
    pub fn alpha_at(&self, k: u64) -> f64 {
        (k as f64 + 2.0) / (2.0 * self.a * self.smoothness)
    }

    /// `A_{k+1} = (k+1)(k+4)/(4aL)`.
    pub fn closed_form(&self, k: u64) -> f64 {
        let k = k as f64;
        (k + 1.0) * (k + 4.0) / (4.0 * self.a * self.smoothness)
    }

    pub fn advance(&mut self) -> Step {
        let alpha = self.alpha_next;
        let a_prev = self.a_curr;
        let a_next = a_prev + alpha;
        let step = Step { k: self.k, alpha, a_prev, a_next };
        self.k += 1;
        self.a_curr = a_next;
        self.alpha_next = self.alpha_at(self.k);
        step
    }
}

/// Clipping level `λ_k` used at iteration `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipPolicy {
    /// No clipping (`λ = ∞`).
    Unclipped,
    Constant(f64),
    /// One level per iteration; must cover every iteration run.
    PerIteration(Vec<f64>),
    /// `λ_k = numerator / α_{k+1}`, the shape of the theoretical levels.
    InverseStep { numerator: f64 },
}

impl ClipPolicy {
    pub fn validate(&self, iterations: u64) -> Result<()> {
        let positive = |v: f64| v > 0.0;
        match self {
            ClipPolicy::Unclipped => Ok(()),
            ClipPolicy::Constant(l) if positive(*l) => Ok(()),
            ClipPolicy::InverseStep { numerator } if positive(*numerator) => Ok(()),
            ClipPolicy::PerIteration(v) => {
                if (v.len() as u64) < iterations {
                    return Err(ZoError::invalid(format!(
                        "{} clipping levels for {iterations} iterations",
                        v.len()
                    )));
                }
                if let Some(bad) = v.iter().find(|l| !positive(**l)) {
                    return Err(ZoError::invalid(format!("clipping level must be positive, got {bad}")));
                }
                Ok(())
            }
            other => Err(ZoError::invalid(format!("clipping level must be positive: {other:?}"))),
        }
    }

    /// `λ_k`, or `None` when unclipped.
    pub fn level(&self, k: u64, alpha_next: f64) -> Option<f64> {
        match self {
            ClipPolicy::Unclipped => None,
            ClipPolicy::Constant(l) => Some(*l),
            ClipPolicy::PerIteration(v) => Some(v[k as usize]),
            ClipPolicy::InverseStep { numerator } => Some(numerator / alpha_next),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_at_zero() {
        let s = SstmSchedule::new(2.0, 3.0).unwrap();
        assert_eq!(s.a_curr(), 0.0);
        assert_eq!(s.alpha_next(), 2.0 / 12.0);
    }

    #[test]
    fn accumulation_matches_closed_form() {
        let mut s = SstmSchedule::new(0.7, 13.0).unwrap();
        for k in 0..10_000u64 {
            let step = s.advance();
            assert_eq!(step.k, k);
            assert_eq!(step.a_next, step.a_prev + step.alpha);
            let want = s.closed_form(k);
            assert!((step.a_next - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SstmSchedule::new(0.0, 1.0).is_err());
        assert!(SstmSchedule::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn inverse_step_levels_halve_when_step_doubles() {
        let p = ClipPolicy::InverseStep { numerator: 3.0 };
        assert_eq!(p.level(0, 1.0).unwrap(), 2.0 * p.level(0, 2.0).unwrap());
    }

    #[test]
    fn policy_validation() {
        assert!(ClipPolicy::Constant(0.0).validate(1).is_err());
        assert!(ClipPolicy::PerIteration(vec![1.0]).validate(2).is_err());
        assert!(ClipPolicy::PerIteration(vec![1.0, -1.0]).validate(2).is_err());
        assert!(ClipPolicy::Constant(f64::INFINITY).validate(5).is_ok());
        assert!(ClipPolicy::Unclipped.validate(5).is_ok());
    }
}
