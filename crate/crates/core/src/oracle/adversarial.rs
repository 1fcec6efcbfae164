use ndarray::{Array1, ArrayView1};

use super::{OracleMeta, StochasticOracle};
use crate::error::{Result, ZoError};
use crate::randkit::RngState;
use crate::scalar::Scalar;

/// Oracle returning `f(x, ξ) + δ(x)` for a deterministic perturbation `δ`
/// with `|δ(x)| ≤ Δ` checked at every query.
pub struct AdversarialWrapper<O, F> {
    inner: O,
    delta_fn: F,
    bound: f64,
}

pub fn wrap_adversarial<T, O, F>(inner: O, delta_fn: F, bound: f64) -> Result<AdversarialWrapper<O, F>>
where
    T: Scalar,
    O: StochasticOracle<T>,
    F: Fn(ArrayView1<T>) -> T + Send + Sync,
{
    if !(bound >= 0.0) {
        return Err(ZoError::invalid(format!("noise bound must be >= 0, got {bound}")));
    }
    Ok(AdversarialWrapper {
        inner,
        delta_fn,
        bound,
    })
}

impl<O, F> AdversarialWrapper<O, F> {
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

fn checked_delta<T: Scalar, F: Fn(ArrayView1<T>) -> T>(delta_fn: &F, bound: f64, x: ArrayView1<T>) -> Result<T> {
    let d = delta_fn(x);
    let v = d.as_f64();
    if !(v.abs() <= bound) {
        return Err(ZoError::ContractViolation {
            point: x.iter().map(|c| c.as_f64()).collect(),
            value: v.abs(),
            bound,
        });
    }
    Ok(d)
}

impl<T, O, F> StochasticOracle<T> for AdversarialWrapper<O, F>
where
    T: Scalar,
    O: StochasticOracle<T>,
    F: Fn(ArrayView1<T>) -> T + Send + Sync,
{
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn meta(&self) -> &OracleMeta<T> {
        self.inner.meta()
    }

    fn eval_pair(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        noise: &mut RngState,
    ) -> Result<(T, T)> {
        let dx = checked_delta(&self.delta_fn, self.bound, x)?;
        let dy = checked_delta(&self.delta_fn, self.bound, y)?;
        let (fx, fy) = self.inner.eval_pair(x, y, noise)?;
        Ok((fx + dx, fy + dy))
    }

    // Gap reporting uses the unperturbed objective.
    fn expected_value(&self, x: ArrayView1<T>) -> Option<T> {
        self.inner.expected_value(x)
    }

    fn smoothed_gradient(&self, _x: ArrayView1<T>, _tau: T) -> Option<Array1<T>> {
        None
    }
}
