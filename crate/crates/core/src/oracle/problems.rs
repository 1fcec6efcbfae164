use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::linalg::{cholesky, cholesky_solve, orthonormalize, spectral_norm};
use super::{check_point, NoiseSpec, OracleMeta, StochasticOracle};
use crate::error::{Result, ZoError};
use crate::randkit::{RngState, Stream};
use crate::scalar::Scalar;

#[inline]
fn linear_noise<T: Scalar>(xi: &Option<Array1<T>>, x: &ArrayView1<T>) -> T {
    xi.as_ref().map_or(T::zero(), |xi| xi.dot(x))
}

/// How `A` and `b` of the least-squares instance are drawn. Entries are
/// standard Gaussian in both cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LsqGeneration {
    /// `b = A w + e` with `w, e` standard Gaussian: a planted regression whose
    /// minimizer sits at distance about `√d` from the origin.
    #[default]
    Regression,
    /// `b` drawn independently of `A`.
    Independent,
}

/// `f(x, ξ) = ‖Ax − b‖₂ + ⟨ξ, x⟩` with i.i.d. symmetric stable `ξ`.
#[derive(Debug, Clone)]
pub struct HeavyTailLsq<T> {
    a: Array2<T>,
    b: Array1<T>,
    noise: NoiseSpec,
    generation: LsqGeneration,
    spectral_norm: f64,
    meta: OracleMeta<T>,
}

/// Heavy-tailed least-squares instance with unit-scale stable noise of index
/// `alpha` and the default [`LsqGeneration`].
pub fn make_heavytail_lsq<T: Scalar>(
    d: usize,
    m: usize,
    alpha: f64,
    matrix_seed: &RngState,
) -> Result<HeavyTailLsq<T>> {
    HeavyTailLsq::new(
        d,
        m,
        NoiseSpec::SymStable { alpha, scale: 1.0 },
        LsqGeneration::default(),
        matrix_seed,
    )
}

impl<T: Scalar> HeavyTailLsq<T> {
    pub fn new(
        d: usize,
        m: usize,
        noise: NoiseSpec,
        generation: LsqGeneration,
        matrix_seed: &RngState,
    ) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(ZoError::invalid(format!("need d, m >= 1, got d={d}, m={m}")));
        }
        noise.validate()?;
        let mut rng = matrix_seed.substream(Stream::Instance);
        let a = Array2::from_shape_fn((m, d), |_| rng.standard_normal());
        let b = match generation {
            LsqGeneration::Regression => {
                let w: Array1<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                let e: Array1<f64> = (0..m).map(|_| rng.standard_normal()).collect();
                a.dot(&w) + e
            }
            LsqGeneration::Independent => (0..m).map(|_| rng.standard_normal()).collect(),
        };
        Self::from_parts(a, b, noise, generation)
    }

    /// Instance with explicit `A` (m×d) and `b`.
    pub fn from_matrices(a: Array2<f64>, b: Array1<f64>, noise: NoiseSpec) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 || a.nrows() != b.len() {
            return Err(ZoError::invalid("A must be m×d with m = len(b) >= 1, d >= 1"));
        }
        noise.validate()?;
        Self::from_parts(a, b, noise, LsqGeneration::Independent)
    }

    fn from_parts(
        a: Array2<f64>,
        b: Array1<f64>,
        noise: NoiseSpec,
        generation: LsqGeneration,
    ) -> Result<Self> {
        let x_star = least_squares(&a, &b)?;
        let r = a.dot(&x_star) - &b;
        let f_star = r.dot(&r).sqrt();
        let spectral = spectral_norm(&a);
        let meta = OracleMeta {
            // With stable noise the α-th moment of ‖ξ‖ at the index itself is
            // infinite, so only the noiseless problem has a usable M₂.
            m2: noise.is_none().then(|| T::of(spectral)),
            alpha: T::of(noise.moment_index()),
            mu: T::zero(),
            f_star: Some(T::of(f_star)),
            x_star: Some(x_star.mapv(T::of)),
        };
        Ok(Self {
            a: a.mapv(T::of),
            b: b.mapv(T::of),
            noise,
            generation,
            spectral_norm: spectral,
            meta,
        })
    }

    pub fn matrix(&self) -> &Array2<T> {
        &self.a
    }

    pub fn rhs(&self) -> &Array1<T> {
        &self.b
    }

    pub fn noise(&self) -> NoiseSpec {
        self.noise
    }

    pub fn generation(&self) -> LsqGeneration {
        self.generation
    }

    /// `‖A‖₂`, the Lipschitz constant of the noiseless objective.
    pub fn lipschitz_noiseless(&self) -> f64 {
        self.spectral_norm
    }

    /// Same instance with a different noise model.
    pub fn with_noise(mut self, noise: NoiseSpec) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        self.meta.alpha = T::of(noise.moment_index());
        self.meta.m2 = noise.is_none().then(|| T::of(self.spectral_norm));
        Ok(self)
    }

    fn residual_norm(&self, x: &ArrayView1<T>) -> T {
        let r = self.a.dot(x) - &self.b;
        r.dot(&r).sqrt()
    }
}

/// Least-squares minimizer; minimum-norm solution when `m < d`.
fn least_squares(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let (m, d) = a.dim();
    if m >= d {
        let ata = a.t().dot(a);
        let l = cholesky(&ata).ok_or_else(|| ZoError::invalid("A has deficient column rank"))?;
        Ok(cholesky_solve(&l, &a.t().dot(b)))
    } else {
        let aat = a.dot(&a.t());
        let l = cholesky(&aat).ok_or_else(|| ZoError::invalid("A has deficient row rank"))?;
        Ok(a.t().dot(&cholesky_solve(&l, b)))
    }
}

impl<T: Scalar> StochasticOracle<T> for HeavyTailLsq<T> {
    fn dim(&self) -> usize {
        self.a.ncols()
    }

    fn meta(&self) -> &OracleMeta<T> {
        &self.meta
    }

    fn eval_pair(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        noise: &mut RngState,
    ) -> Result<(T, T)> {
        check_point(self.dim(), &x)?;
        check_point(self.dim(), &y)?;
        let xi = self.noise.draw::<T>(self.dim(), noise);
        Ok((
            self.residual_norm(&x) + linear_noise(&xi, &x),
            self.residual_norm(&y) + linear_noise(&xi, &y),
        ))
    }

    fn expected_value(&self, x: ArrayView1<T>) -> Option<T> {
        Some(self.residual_norm(&x))
    }
}

/// `f(x, ξ) = ½ (x − x*)ᵀ H (x − x*) + ⟨ξ, x⟩` with spectrum of `H` in
/// `[mu, l_quad]`.
#[derive(Debug, Clone)]
pub struct Quadratic<T> {
    h: Array2<T>,
    eigenvalues: Vec<f64>,
    noise: NoiseSpec,
    meta: OracleMeta<T>,
}

/// Quadratic with eigenvalues `l_quad` and `mu` at the ends of the spectrum and
/// the rest uniform in between. `basis_seed = None` keeps `H` diagonal;
/// otherwise the eigenbasis is a random rotation.
pub fn make_quadratic<T: Scalar>(
    d: usize,
    mu: f64,
    l_quad: f64,
    x_star: Array1<T>,
    noise: NoiseSpec,
    basis_seed: Option<&RngState>,
) -> Result<Quadratic<T>> {
    if d == 0 || x_star.len() != d {
        return Err(ZoError::invalid("x_star must have length d >= 1"));
    }
    if !(mu >= 0.0) || !(mu <= l_quad) || !l_quad.is_finite() {
        return Err(ZoError::invalid(format!(
            "need 0 <= mu <= L, got mu={mu}, L={l_quad}"
        )));
    }
    noise.validate()?;
    let mut eig = vec![l_quad; d];
    let mut rng = basis_seed.map(|s| s.substream(Stream::Instance));
    if d >= 2 {
        eig[d - 1] = mu;
        for e in eig.iter_mut().take(d - 1).skip(1) {
            let u = rng.as_mut().map_or(0.5, |r| r.uniform());
            *e = mu + (l_quad - mu) * u;
        }
    }
    let h = match rng.as_mut() {
        None => Array2::from_diag(&Array1::from(eig.clone())),
        Some(r) => {
            let q = orthonormalize(Array2::from_shape_fn((d, d), |_| r.standard_normal()));
            let lam = Array2::from_diag(&Array1::from(eig.clone()));
            q.dot(&lam).dot(&q.t())
        }
    };
    Quadratic::from_hessian(h, eig, x_star, noise)
}

impl<T: Scalar> Quadratic<T> {
    fn from_hessian(
        h: Array2<f64>,
        eigenvalues: Vec<f64>,
        x_star: Array1<T>,
        noise: NoiseSpec,
    ) -> Result<Self> {
        let mu = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let meta = OracleMeta {
            m2: None,
            alpha: T::of(noise.moment_index()),
            mu: T::of(mu),
            f_star: Some(T::zero()),
            x_star: Some(x_star),
        };
        Ok(Self {
            h: h.mapv(T::of),
            eigenvalues,
            noise,
            meta,
        })
    }

    /// Quadratic with an explicit symmetric positive semidefinite Hessian.
    pub fn with_hessian(h: Array2<f64>, x_star: Array1<T>, noise: NoiseSpec) -> Result<Self> {
        let d = h.nrows();
        if d == 0 || h.ncols() != d || x_star.len() != d {
            return Err(ZoError::invalid("H must be d×d and x_star of length d"));
        }
        noise.validate()?;
        // Eigenvalue range from Gershgorin discs is enough for the metadata
        // lower bound when H is diagonal, which is the only case used here.
        let diag_only = (0..d).all(|i| (0..d).all(|j| i == j || h[[i, j]] == 0.0));
        if !diag_only {
            return Err(ZoError::invalid("with_hessian accepts diagonal H; use make_quadratic"));
        }
        let eig: Vec<f64> = (0..d).map(|i| h[[i, i]]).collect();
        if eig.iter().any(|&e| e < 0.0) {
            return Err(ZoError::invalid("H must be positive semidefinite"));
        }
        Self::from_hessian(h, eig, x_star, noise)
    }

    pub fn hessian(&self) -> &Array2<T> {
        &self.h
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn smoothness(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(0.0, f64::max)
    }

    pub fn gradient(&self, x: ArrayView1<T>) -> Array1<T> {
        let xs = self.meta.x_star.as_ref().expect("quadratic always has x_star");
        self.h.dot(&(&x - xs))
    }

    fn deterministic(&self, x: &ArrayView1<T>) -> T {
        let xs = self.meta.x_star.as_ref().expect("quadratic always has x_star");
        let diff = x - xs;
        T::of(0.5) * diff.dot(&self.h.dot(&diff))
    }
}

impl<T: Scalar> StochasticOracle<T> for Quadratic<T> {
    fn dim(&self) -> usize {
        self.h.nrows()
    }

    fn meta(&self) -> &OracleMeta<T> {
        &self.meta
    }

    fn eval_pair(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        noise: &mut RngState,
    ) -> Result<(T, T)> {
        check_point(self.dim(), &x)?;
        check_point(self.dim(), &y)?;
        let xi = self.noise.draw::<T>(self.dim(), noise);
        Ok((
            self.deterministic(&x) + linear_noise(&xi, &x),
            self.deterministic(&y) + linear_noise(&xi, &y),
        ))
    }

    fn expected_value(&self, x: ArrayView1<T>) -> Option<T> {
        Some(self.deterministic(&x))
    }

    fn smoothed_gradient(&self, x: ArrayView1<T>, _tau: T) -> Option<Array1<T>> {
        // Ball smoothing adds the constant τ²·tr(H)/(2(d+2)); the gradient is
        // unchanged.
        Some(self.gradient(x))
    }
}

/// `f(x, ξ) = ⟨s, x⟩ + c + ⟨ξ, x⟩`. Unbounded below, so no `f*`.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    s: Array1<T>,
    offset: T,
    noise: NoiseSpec,
    meta: OracleMeta<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(s: Array1<T>, noise: NoiseSpec) -> Result<Self> {
        if s.is_empty() {
            return Err(ZoError::invalid("slope must have length >= 1"));
        }
        noise.validate()?;
        let norm = s.dot(&s).sqrt();
        let meta = OracleMeta {
            m2: noise.is_none().then_some(norm),
            alpha: T::of(noise.moment_index()),
            mu: T::zero(),
            f_star: None,
            x_star: None,
        };
        Ok(Self {
            s,
            offset: T::zero(),
            noise,
            meta,
        })
    }

    pub fn with_offset(mut self, offset: T) -> Self {
        self.offset = offset;
        self
    }

    pub fn slope(&self) -> &Array1<T> {
        &self.s
    }
}

impl<T: Scalar> StochasticOracle<T> for Linear<T> {
    fn dim(&self) -> usize {
        self.s.len()
    }

    fn meta(&self) -> &OracleMeta<T> {
        &self.meta
    }

    fn eval_pair(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        noise: &mut RngState,
    ) -> Result<(T, T)> {
        check_point(self.dim(), &x)?;
        check_point(self.dim(), &y)?;
        let xi = self.noise.draw::<T>(self.dim(), noise);
        Ok((
            self.s.dot(&x) + self.offset + linear_noise(&xi, &x),
            self.s.dot(&y) + self.offset + linear_noise(&xi, &y),
        ))
    }

    fn expected_value(&self, x: ArrayView1<T>) -> Option<T> {
        Some(self.s.dot(&x) + self.offset)
    }

    fn smoothed_gradient(&self, _x: ArrayView1<T>, _tau: T) -> Option<Array1<T>> {
        Some(self.s.clone())
    }
}

/// `f(x) = ‖x − c‖₂`, deterministic and 1-Lipschitz.
#[derive(Debug, Clone)]
pub struct EuclideanNorm<T> {
    center: Array1<T>,
    meta: OracleMeta<T>,
}

impl<T: Scalar> EuclideanNorm<T> {
    pub fn new(center: Array1<T>) -> Result<Self> {
        if center.is_empty() {
            return Err(ZoError::invalid("center must have length >= 1"));
        }
        let meta = OracleMeta {
            m2: Some(T::one()),
            alpha: T::of(2.0),
            mu: T::zero(),
            f_star: Some(T::zero()),
            x_star: Some(center.clone()),
        };
        Ok(Self { center, meta })
    }

    pub fn centered(d: usize) -> Result<Self> {
        Self::new(Array1::zeros(d))
    }
}

impl<T: Scalar> StochasticOracle<T> for EuclideanNorm<T> {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn meta(&self) -> &OracleMeta<T> {
        &self.meta
    }

    fn eval_pair(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        _noise: &mut RngState,
    ) -> Result<(T, T)> {
        check_point(self.dim(), &x)?;
        check_point(self.dim(), &y)?;
        Ok((self.expected_value(x).unwrap(), self.expected_value(y).unwrap()))
    }

    fn expected_value(&self, x: ArrayView1<T>) -> Option<T> {
        let diff = &x - &self.center;
        Some(diff.dot(&diff).sqrt())
    }
}

/// `f ≡ c`.
#[derive(Debug, Clone)]
pub struct Constant<T> {
    dim: usize,
    value: T,
    meta: OracleMeta<T>,
}

impl<T: Scalar> Constant<T> {
    pub fn new(dim: usize, value: T) -> Result<Self> {
        if dim == 0 {
            return Err(ZoError::invalid("dimension must be at least 1"));
        }
        let meta = OracleMeta {
            m2: Some(T::zero()),
            alpha: T::of(2.0),
            mu: T::zero(),
            f_star: Some(value),
            x_star: None,
        };
        Ok(Self { dim, value, meta })
    }
}

impl<T: Scalar> StochasticOracle<T> for Constant<T> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn meta(&self) -> &OracleMeta<T> {
        &self.meta
    }

    fn eval_pair(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        _noise: &mut RngState,
    ) -> Result<(T, T)> {
        check_point(self.dim, &x)?;
        check_point(self.dim, &y)?;
        Ok((self.value, self.value))
    }

    fn expected_value(&self, _x: ArrayView1<T>) -> Option<T> {
        Some(self.value)
    }

    fn smoothed_gradient(&self, _x: ArrayView1<T>, _tau: T) -> Option<Array1<T>> {
        Some(Array1::zeros(self.dim))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    fn stable(alpha: f64) -> NoiseSpec {
        NoiseSpec::SymStable { alpha, scale: 1.0 }
    }

    #[test]
    fn lsq_rejects_bad_dims() {
        let seed = RngState::from_seed(0);
        assert!(make_heavytail_lsq::<f64>(0, 5, 1.5, &seed).is_err());
        assert!(make_heavytail_lsq::<f64>(3, 0, 1.5, &seed).is_err());
        assert!(make_heavytail_lsq::<f64>(3, 5, 1.0, &seed).is_err());
    }

    #[test]
    fn lsq_value_at_optimum_is_f_star_without_noise() {
        let p = make_heavytail_lsq::<f64>(16, 500, 1.5, &RngState::from_seed(3))
            .unwrap()
            .with_noise(NoiseSpec::None)
            .unwrap();
        let xs = p.meta().x_star.clone().unwrap();
        let mut rng = RngState::from_seed(1);
        let (f, _) = p.eval_pair(xs.view(), xs.view(), &mut rng).unwrap();
        assert_relative_eq!(f, p.meta().f_star.unwrap(), max_relative = 1e-12);
        assert_eq!(p.gap(xs.view()).unwrap(), 0.0);
    }

    #[test]
    fn lsq_instance_is_seed_deterministic() {
        let a = make_heavytail_lsq::<f64>(4, 9, 1.5, &RngState::from_seed(8)).unwrap();
        let b = make_heavytail_lsq::<f64>(4, 9, 1.5, &RngState::from_seed(8)).unwrap();
        let c = make_heavytail_lsq::<f64>(4, 9, 1.5, &RngState::from_seed(9)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.rhs(), b.rhs());
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn lsq_optimum_matches_grid_search() {
        let a = array![[1.0, 0.5], [-0.3, 2.0], [0.7, -1.1]];
        let b = array![1.0, 0.2, -0.6];
        let p = HeavyTailLsq::<f64>::from_matrices(a.clone(), b.clone(), NoiseSpec::None).unwrap();
        let xs = p.meta().x_star.clone().unwrap();
        let f_star = p.meta().f_star.unwrap();
        // Dense grid over a box around the least-squares solution.
        let n = 801;
        let half = 1.0;
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let x = array![
                    xs[0] - half + 2.0 * half * i as f64 / (n - 1) as f64,
                    xs[1] - half + 2.0 * half * j as f64 / (n - 1) as f64
                ];
                let r = a.dot(&x) - &b;
                best = best.min(r.dot(&r).sqrt());
            }
        }
        assert!((best - f_star).abs() < 1e-3, "{best} vs {f_star}");
        assert!(best >= f_star - 1e-12);
    }

    #[test]
    fn lsq_underdetermined_has_zero_optimum() {
        let p = HeavyTailLsq::<f64>::from_matrices(
            array![[1.0, 2.0, 3.0]],
            array![4.0],
            NoiseSpec::None,
        )
        .unwrap();
        assert!(p.meta().f_star.unwrap().abs() < 1e-12);
    }

    #[test]
    fn lsq_pair_shares_noise() {
        let p = make_heavytail_lsq::<f64>(16, 50, 1.5, &RngState::from_seed(2)).unwrap();
        let x = Array1::from_elem(16, 0.3);
        let mut rng = RngState::from_seed(10);
        for _ in 0..50 {
            let (a, b) = p.eval_pair(x.view(), x.view(), &mut rng).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn lsq_noise_averages_out() {
        // Gaussian noise keeps the Monte-Carlo error small; the stable case is
        // covered in the integration tests with a median check.
        let p = make_heavytail_lsq::<f64>(4, 20, 1.5, &RngState::from_seed(4))
            .unwrap()
            .with_noise(NoiseSpec::Gaussian { std: 1.0 })
            .unwrap();
        let x = array![0.2, -0.1, 0.4, 0.0];
        let mut rng = RngState::from_seed(5);
        let n = 40_000;
        let mean = (0..n).map(|_| p.eval(x.view(), &mut rng).unwrap()).sum::<f64>() / n as f64;
        let sd = x.dot(&x).sqrt();
        assert!((mean - p.expected_value(x.view()).unwrap()).abs() < 4.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn lsq_metadata() {
        let p = make_heavytail_lsq::<f64>(16, 500, 1.5, &RngState::from_seed(0)).unwrap();
        assert_eq!(p.meta().mu, 0.0);
        assert_eq!(p.meta().alpha, 1.5);
        assert!(p.meta().m2.is_none());
        let q = p.with_noise(NoiseSpec::None).unwrap();
        assert_relative_eq!(q.meta().m2.unwrap(), q.lipschitz_noiseless());
    }

    #[test]
    fn quadratic_identity_hessian() {
        let xs = array![1.0, -2.0, 0.5];
        let q = make_quadratic::<f64>(3, 1.0, 1.0, xs.clone(), NoiseSpec::None, None).unwrap();
        let x = array![0.0, 0.0, 0.0];
        let want = 0.5 * xs.dot(&xs);
        assert_relative_eq!(q.expected_value(x.view()).unwrap(), want);
        assert_eq!(q.gradient(x.view()), &x - &xs);
    }

    #[test]
    fn quadratic_one_dimensional_value() {
        let q = make_quadratic::<f64>(1, 2.0, 2.0, array![3.0], NoiseSpec::None, None).unwrap();
        let mut rng = RngState::from_seed(0);
        assert_eq!(q.eval(array![5.0].view(), &mut rng).unwrap(), 4.0);
    }

    #[test]
    fn quadratic_rejects_mu_above_l() {
        assert!(make_quadratic::<f64>(2, 3.0, 1.0, array![0.0, 0.0], NoiseSpec::None, None).is_err());
    }

    #[test]
    fn quadratic_random_spectrum_in_range() {
        let xs = array![0.1, 0.2, 0.3, 0.4];
        let q = make_quadratic::<f64>(4, 0.5, 2.0, xs.clone(), stable(1.5), Some(&RngState::from_seed(4)))
            .unwrap();
        assert!(q.eigenvalues().iter().all(|&e| (0.5..=2.0).contains(&e)));
        assert_eq!(q.meta().mu, 0.5);
        assert_eq!(q.gap(xs.view()).unwrap(), 0.0);
        // H is symmetric and reproduces the gap formula.
        let h = q.hessian();
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(h[[i, j]], h[[j, i]], epsilon = 1e-12);
            }
        }
        let x = array![1.0, 0.0, -1.0, 2.0];
        let diff = &x - &xs;
        assert_relative_eq!(
            q.gap(x.view()).unwrap(),
            0.5 * diff.dot(&h.dot(&diff)),
            max_relative = 1e-14
        );
    }

    #[test]
    fn norm_and_constant_problems() {
        let n = EuclideanNorm::<f64>::centered(2).unwrap();
        let mut rng = RngState::from_seed(0);
        assert_eq!(n.eval(array![3.0, 4.0].view(), &mut rng).unwrap(), 5.0);
        let c = Constant::<f64>::new(3, 7.0).unwrap();
        assert_eq!(c.eval(array![1.0, 2.0, 3.0].view(), &mut rng).unwrap(), 7.0);
        assert!(c.eval(array![1.0].view(), &mut rng).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let p = make_heavytail_lsq::<f32>(4, 10, 1.5, &RngState::from_seed(1)).unwrap();
        let x = Array1::<f32>::zeros(4);
        let mut rng = RngState::from_seed(2);
        let (a, b) = p.eval_pair(x.view(), x.view(), &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(p.gap(x.view()).unwrap() >= 0.0);
    }
}
