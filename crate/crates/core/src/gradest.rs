//! Randomized smoothing and two-point gradient estimation.
//!
//! For `u` uniform on the unit ball and `e` uniform on the unit sphere,
//! `f̂_τ(x) = E f(x + τu, ξ)` and
//! `g(x, ξ, e) = d/(2τ) · (f(x + τe, ξ) − f(x − τe, ξ)) · e` with `E g = ∇f̂_τ(x)`.
//!
//! Randomness layout: sample `i` of an estimate drawn with state `rng` uses
//! `rng.child(i)`; inside it the direction comes from
//! `substream(Stream::Direction)` and the oracle noise from
//! `substream(Stream::Noise)`. A single estimate is sample 0, so a batch of one
//! reproduces [`estimate_gradient`] bit for bit, and the directions of slot `i`
//! do not depend on the batch size.

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;

use crate::error::{Result, ZoError};
use crate::oracle::StochasticOracle;
use crate::randkit::{sample_unit_ball, sample_unit_sphere, RngState, Stream};
use crate::scalar::Scalar;

/// Batches at least this large are evaluated on the rayon pool.
const PARALLEL_BATCH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingParams<T> {
    tau: T,
    dim: usize,
}

impl<T: Scalar> SmoothingParams<T> {
    pub fn new(tau: T, dim: usize) -> Result<Self> {
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(ZoError::invalid(format!("smoothing radius must be positive, got {tau}")));
        }
        if dim == 0 {
            return Err(ZoError::invalid("dimension must be at least 1"));
        }
        Ok(Self { tau, dim })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Gradient Lipschitz constant `√d · M₂ / τ` of the smoothed function.
    pub fn smoothness(&self, m2: T) -> T {
        T::of(self.dim as f64).sqrt() * m2 / self.tau
    }

    fn check<O: StochasticOracle<T> + ?Sized>(&self, oracle: &O, x: &ArrayView1<T>) -> Result<()> {
        if oracle.dim() != self.dim || x.len() != self.dim {
            return Err(ZoError::invalid(format!(
                "dimension mismatch: params {}, oracle {}, point {}",
                self.dim,
                oracle.dim(),
                x.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradEstimate<T> {
    pub vector: Array1<T>,
    /// Function evaluations spent: two per sample.
    pub oracle_calls: u64,
    pub batch_size: usize,
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloMean<T> {
    pub mean: T,
    pub std_error: T,
    pub samples: usize,
}

/// Unbiased Monte-Carlo estimate of `f̂_τ(x)` from `n` independent `(u, ξ)`.
pub fn smoothed_value_mc<T, O>(
    oracle: &O,
    x: ArrayView1<T>,
    params: &SmoothingParams<T>,
    n: usize,
    rng: &RngState,
) -> Result<MonteCarloMean<T>>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    params.check(oracle, &x)?;
    if n == 0 {
        return Err(ZoError::invalid("need at least one Monte-Carlo sample"));
    }
    // Welford in f64 regardless of T.
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for i in 0..n {
        let slot = rng.child(i as u64);
        let u = sample_unit_ball::<T>(params.dim, &mut slot.substream(Stream::Ball))?;
        let point = &x + &(u * params.tau);
        let v = oracle.eval(point.view(), &mut slot.substream(Stream::Noise))?.as_f64();
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if n > 1 { m2 / (n - 1) as f64 } else { 0.0 };
    Ok(MonteCarloMean {
        mean: T::of(mean),
        std_error: T::of((var / n as f64).sqrt()),
        samples: n,
    })
}

fn two_point_sample<T, O>(
    oracle: &O,
    x: &ArrayView1<T>,
    params: &SmoothingParams<T>,
    slot: &RngState,
) -> Result<Array1<T>>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    let e = sample_unit_sphere::<T>(params.dim, &mut slot.substream(Stream::Direction))?;
    let step = &e * params.tau;
    let plus = x + &step;
    let minus = x - &step;
    let (fp, fm) = oracle.eval_pair(plus.view(), minus.view(), &mut slot.substream(Stream::Noise))?;
    let coef = T::of(params.dim as f64) / (T::of(2.0) * params.tau) * (fp - fm);
    Ok(e * coef)
}

/// Single two-point estimate: one shared-noise pair at `x ± τe`.
pub fn estimate_gradient<T, O>(
    oracle: &O,
    x: ArrayView1<T>,
    params: &SmoothingParams<T>,
    rng: &RngState,
) -> Result<GradEstimate<T>>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    params.check(oracle, &x)?;
    Ok(GradEstimate {
        vector: two_point_sample(oracle, &x, params, &rng.child(0))?,
        oracle_calls: 2,
        batch_size: 1,
    })
}

/// Mean of `batch` independent two-point estimates.
///
/// Large batches are evaluated in parallel; the samples are always summed
/// sequentially in slot order, so the result does not depend on the number of
/// worker threads.
pub fn estimate_gradient_batched<T, O>(
    oracle: &O,
    x: ArrayView1<T>,
    params: &SmoothingParams<T>,
    batch: usize,
    rng: &RngState,
) -> Result<GradEstimate<T>>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    params.check(oracle, &x)?;
    if batch == 0 {
        return Err(ZoError::invalid("batch size must be at least 1"));
    }
    let sample = |i: usize| two_point_sample(oracle, &x, params, &rng.child(i as u64));
    let samples: Vec<Array1<T>> = if batch >= PARALLEL_BATCH {
        (0..batch).into_par_iter().map(sample).collect::<Result<_>>()?
    } else {
        (0..batch).map(sample).collect::<Result<_>>()?
    };
    let mut sum = Array1::<T>::zeros(params.dim);
    for s in &samples {
        sum += s;
    }
    Ok(GradEstimate {
        vector: sum / T::of(batch as f64),
        oracle_calls: 2 * batch as u64,
        batch_size: batch,
    })
}

/// `g · min(1, λ/‖g‖₂)`, and `0` for `g = 0`. `λ = +∞` is allowed and leaves
/// `g` untouched.
pub fn clip<T: Scalar>(g: &Array1<T>, lambda: T) -> Result<Array1<T>> {
    if !(lambda > T::zero()) {
        return Err(ZoError::invalid(format!("clipping level must be positive, got {lambda}")));
    }
    let norm = g.dot(g).sqrt();
    if norm == T::zero() {
        return Ok(Array1::zeros(g.len()));
    }
    let factor = (lambda / norm).min(T::one());
    if factor == T::one() {
        Ok(g.clone())
    } else {
        Ok(g * factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{Constant, EuclideanNorm, Linear, NoiseSpec, Quadratic};
    use approx::assert_relative_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn clip_examples() {
        assert_eq!(clip(&array![3.0, 4.0], 2.5).unwrap(), array![1.5, 2.0]);
        assert_eq!(clip(&array![0.0, 0.0], 1.0).unwrap(), array![0.0, 0.0]);
        let g = array![0.3, -0.4];
        assert_eq!(clip(&g, 0.5).unwrap(), g);
        assert_eq!(clip(&g, 10.0).unwrap(), g);
        assert_eq!(clip(&g, f64::INFINITY).unwrap(), g);
        assert!(clip(&g, 0.0).is_err());
        assert!(clip(&g, -1.0).is_err());
        assert!(clip(&g, f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn clip_bounds_norm_and_keeps_direction(
            v in prop::collection::vec(-1e3f64..1e3, 1..12),
            lambda in 1e-3f64..1e3,
            c in 1e-2f64..1e2,
        ) {
            let g = Array1::from(v);
            let out = clip(&g, lambda).unwrap();
            let n_out = out.dot(&out).sqrt();
            prop_assert!(n_out <= lambda * (1.0 + 1e-12));
            // Nonnegative multiple of g.
            let gn = g.dot(&g).sqrt();
            if gn > 0.0 {
                let cos = out.dot(&g) / (n_out.max(1e-300) * gn);
                prop_assert!(n_out == 0.0 || (cos - 1.0).abs() < 1e-9);
            }
            // Positive homogeneity in (g, λ).
            let scaled = clip(&(&g * c), c * lambda).unwrap();
            let want = &out * c;
            for (a, b) in scaled.iter().zip(want.iter()) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn constant_function_gives_zero_gradient() {
        let oracle = Constant::<f64>::new(5, 3.0).unwrap();
        let p = SmoothingParams::new(0.1, 5).unwrap();
        let x = Array1::from_elem(5, 1.0);
        let g = estimate_gradient(&oracle, x.view(), &p, &RngState::from_seed(1)).unwrap();
        assert_eq!(g.vector, Array1::<f64>::zeros(5));
        assert_eq!(g.oracle_calls, 2);
    }

    #[test]
    fn linear_single_estimate_is_d_s_e_e() {
        let s = array![1.0, -2.0, 0.5];
        let oracle = Linear::new(s.clone(), NoiseSpec::None).unwrap();
        let p = SmoothingParams::new(0.3, 3).unwrap();
        let rng = RngState::from_seed(4);
        let g = estimate_gradient(&oracle, array![0.2, 0.1, 0.0].view(), &p, &rng).unwrap();
        let e = sample_unit_sphere::<f64>(3, &mut rng.child(0).substream(Stream::Direction)).unwrap();
        let want = &e * (3.0 * s.dot(&e));
        for (a, b) in g.vector.iter().zip(want.iter()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn linear_mean_recovers_slope() {
        let s: Array1<f64> = array![1.0, -2.0, 0.5, 0.0];
        let oracle = Linear::new(s.clone(), NoiseSpec::None).unwrap();
        let p = SmoothingParams::new(0.1, 4).unwrap();
        let n = 100_000;
        let g = estimate_gradient_batched(&oracle, array![0.0, 0.0, 0.0, 0.0].view(), &p, n, &RngState::from_seed(2))
            .unwrap();
        // Per-coordinate sd of d⟨s,e⟩e is at most d‖s‖/√d.
        let se = 4.0 * s.dot(&s).sqrt() / (n as f64).sqrt();
        for (a, b) in g.vector.iter().zip(s.iter()) {
            assert!((a - b).abs() < 4.0 * se, "{a} vs {b}");
        }
        assert_eq!(g.oracle_calls, 2 * n as u64);
    }

    #[test]
    fn quadratic_mean_matches_exact_gradient() {
        // f = ‖x‖²: the smoothed gradient is exactly 2x.
        let q = Quadratic::<f64>::with_hessian(Array2::eye(3) * 2.0, array![0.0, 0.0, 0.0], NoiseSpec::None)
            .unwrap();
        let x = array![1.0, -0.5, 0.25];
        let p = SmoothingParams::new(0.2, 3).unwrap();
        let n = 100_000;
        let g = estimate_gradient_batched(&q, x.view(), &p, n, &RngState::from_seed(8)).unwrap();
        let want = &x * 2.0;
        // ‖g‖ ≤ d‖∇f‖ here, so a 4σ band of d‖2x‖/√n is conservative.
        let tol = 4.0 * 3.0 * want.dot(&want).sqrt() / (n as f64).sqrt();
        for (a, b) in g.vector.iter().zip(want.iter()) {
            assert!((a - b).abs() < tol, "{a} vs {b}");
        }
    }

    #[test]
    fn batch_of_one_equals_single_estimate() {
        let oracle = EuclideanNorm::<f64>::centered(6).unwrap();
        let p = SmoothingParams::new(0.05, 6).unwrap();
        let x = Array1::from_elem(6, 0.3);
        let rng = RngState::from_seed(77);
        let a = estimate_gradient(&oracle, x.view(), &p, &rng).unwrap();
        let b = estimate_gradient_batched(&oracle, x.view(), &p, 1, &rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn batch_is_sample_mean_of_slots() {
        let oracle = Linear::new(array![0.5, 1.5], NoiseSpec::SymStable { alpha: 1.5, scale: 1.0 }).unwrap();
        let p = SmoothingParams::new(0.1, 2).unwrap();
        let x = array![0.4, -0.2];
        let rng = RngState::from_seed(5);
        let batch = estimate_gradient_batched(&oracle, x.view(), &p, 10, &rng).unwrap();
        let mut sum = Array1::<f64>::zeros(2);
        for i in 0..10 {
            sum += &estimate_gradient(&oracle, x.view(), &p, &rng.child(i)).unwrap().vector;
        }
        // Slot i of the batch is the single estimate with state rng.child(i),
        // which itself uses child(0) of that state; compare via the slots.
        let mut direct = Array1::<f64>::zeros(2);
        for i in 0..10 {
            direct += &two_point_sample(&oracle, &x.view(), &p, &rng.child(i)).unwrap();
        }
        assert_eq!(batch.vector, direct / 10.0);
        assert_eq!(batch.oracle_calls, 20);
        assert!(sum.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn parallel_batches_are_reproducible() {
        let oracle = Linear::new(Array1::from_elem(8, 1.0), NoiseSpec::SymStable { alpha: 1.5, scale: 1.0 })
            .unwrap();
        let p = SmoothingParams::new(0.01, 8).unwrap();
        let x = Array1::from_elem(8, 0.1);
        let rng = RngState::from_seed(12);
        let a = estimate_gradient_batched(&oracle, x.view(), &p, 500, &rng).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| estimate_gradient_batched(&oracle, x.view(), &p, 500, &rng).unwrap());
        assert_eq!(a.vector, b.vector);
    }

    #[test]
    fn finite_differences_match_analytic_gradient_for_small_tau() {
        // Smooth non-quadratic f(x) = ‖x − c‖ near a point away from c.
        let c = array![2.0, -1.0, 0.5];
        let oracle = EuclideanNorm::<f64>::new(c.clone()).unwrap();
        let x = array![0.0, 0.0, 0.0];
        let diff = &x - &c;
        let grad = &diff / diff.dot(&diff).sqrt();
        let p = SmoothingParams::new(1e-3, 3).unwrap();
        let n = 100_000;
        let g = estimate_gradient_batched(&oracle, x.view(), &p, n, &RngState::from_seed(3)).unwrap();
        let tol = 4.0 * 3.0 / (n as f64).sqrt() + 1e-3;
        for (a, b) in g.vector.iter().zip(grad.iter()) {
            assert!((a - b).abs() < tol, "{a} vs {b}");
        }
    }

    #[test]
    fn smoothing_fixes_linear_functions() {
        let s: Array1<f64> = array![1.0, 2.0];
        let oracle = Linear::new(s.clone(), NoiseSpec::None).unwrap();
        let p = SmoothingParams::new(0.5, 2).unwrap();
        let x = array![0.3, -0.7];
        let est = smoothed_value_mc(&oracle, x.view(), &p, 50_000, &RngState::from_seed(1)).unwrap();
        assert!((est.mean - s.dot(&x)).abs() < 4.0 * est.std_error);
    }

    #[test]
    fn smoothed_norm_at_origin_is_mean_radius() {
        // E‖u‖ for u uniform on the unit disk is d/(d+1) = 2/3.
        let oracle = EuclideanNorm::<f64>::centered(2).unwrap();
        let p = SmoothingParams::new(1.0, 2).unwrap();
        let est = smoothed_value_mc(&oracle, array![0.0, 0.0].view(), &p, 100_000, &RngState::from_seed(9))
            .unwrap();
        assert!((est.mean - 2.0 / 3.0).abs() < 4.0 * est.std_error, "{est:?}");
        // Cross-check the closed form by midpoint quadrature of ∫ r · 2r dr.
        let n = 10_000;
        let quad: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) / n as f64;
                r * 2.0 * r / n as f64
            })
            .sum();
        assert!((quad - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn smoothing_gap_within_tau_m2() {
        let oracle = EuclideanNorm::<f64>::centered(4).unwrap();
        let tau = 0.3;
        let p = SmoothingParams::new(tau, 4).unwrap();
        for (i, x) in [array![0.0, 0.0, 0.0, 0.0], array![1.0, 0.0, 0.0, 0.0], array![0.1, 0.2, -0.1, 0.0]]
            .iter()
            .enumerate()
        {
            let est = smoothed_value_mc(&oracle, x.view(), &p, 20_000, &RngState::from_seed(i as u64)).unwrap();
            let f = x.dot(x).sqrt();
            assert!((est.mean - f).abs() <= tau + 3.0 * est.std_error);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(SmoothingParams::<f64>::new(0.0, 3).is_err());
        assert!(SmoothingParams::<f64>::new(0.1, 0).is_err());
        let oracle = Constant::<f64>::new(3, 0.0).unwrap();
        let p = SmoothingParams::new(0.1, 2).unwrap();
        assert!(estimate_gradient(&oracle, array![0.0, 0.0].view(), &p, &RngState::from_seed(0)).is_err());
        let p3 = SmoothingParams::new(0.1, 3).unwrap();
        assert!(estimate_gradient_batched(&oracle, array![0.0, 0.0, 0.0].view(), &p3, 0, &RngState::from_seed(0))
            .is_err());
    }

    #[test]
    fn smoothness_constant() {
        let p = SmoothingParams::new(0.5, 16).unwrap();
        assert_relative_eq!(p.smoothness(2.0), 4.0 * 2.0 / 0.5);
    }
}
