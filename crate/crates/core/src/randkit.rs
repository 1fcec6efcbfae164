//! Seeded sampling primitives.
//!
//! [`RngState`] wraps a ChaCha8 generator addressed by `(seed, stream)`. The
//! stream id of a derived state is a fixed hash of its parent's stream id and a
//! tag, so the draw sequence of any consumer depends only on the master seed and
//! its derivation path:
//!
//! | derivation                | tag                                    |
//! |---------------------------|----------------------------------------|
//! | [`RngState::substream`]   | `SUBSTREAM_DOMAIN` then the [`Stream`] discriminant |
//! | [`RngState::child`]       | `CHILD_DOMAIN` then the child index    |
//!
//! Adding a new consumer therefore never shifts the draws seen by an existing
//! one. The optimizers use `rng.child(k)` per iteration, then
//! `.child(i)` per batch sample, and inside a sample
//! `.substream(Stream::Direction)` / `.substream(Stream::Noise)`.

use std::f64::consts::FRAC_PI_2;

use ndarray::Array1;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Result, ZoError};
use crate::scalar::Scalar;

const SUBSTREAM_DOMAIN: u64 = 0x7375_6273_7472_6561; // "substrea"
const CHILD_DOMAIN: u64 = 0x6368_696c_6400_0000; // "child"

/// Purpose-specific sub-streams derived from a master state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    /// Sphere directions of the two-point estimator.
    Direction = 1,
    /// Oracle noise ξ.
    Noise = 2,
    /// Ball points for smoothed-value estimates.
    Ball = 3,
    /// Problem instance generation (matrices, spectra).
    Instance = 4,
    /// Monte-Carlo trials in the verification suite.
    Trial = 5,
    /// Starting points and other per-run randomness.
    Run = 6,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn mix(parent: u64, domain: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(parent ^ domain).wrapping_add(tag))
}

/// Deterministic random state addressed by `(seed, stream)`.
///
/// Single-owner: parallel workers each derive their own state with
/// [`RngState::child`].
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        Self::at(seed, 0)
    }

    fn at(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Fresh state for a named purpose. Does not depend on how many values were
    /// already drawn from `self`.
    pub fn substream(&self, purpose: Stream) -> Self {
        Self::at(self.seed, mix(self.stream, SUBSTREAM_DOMAIN, purpose as u64))
    }

    /// Fresh state for the `index`-th independent job (iteration, batch slot,
    /// trial, seed replicate).
    pub fn child(&self, index: u64) -> Self {
        Self::at(self.seed, mix(self.stream, CHILD_DOMAIN, index))
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn exponential(&mut self) -> f64 {
        Exp1.sample(&mut self.rng)
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(ZoError::invalid("dimension must be at least 1"));
    }
    Ok(())
}

/// Uniform draw from the unit Euclidean sphere in `dim` dimensions
/// (normalized standard Gaussian vector).
pub fn sample_unit_sphere<T: Scalar>(dim: usize, rng: &mut RngState) -> Result<Array1<T>> {
    check_dim(dim)?;
    loop {
        let g: Array1<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let norm = g.dot(&g).sqrt();
        if norm > 0.0 && norm.is_finite() {
            let mut e: Array1<T> = g.mapv(T::of);
            // Normalize in the target precision so the unit-norm invariant holds
            // to that precision's rounding.
            let n = e.dot(&e).sqrt();
            e.mapv_inplace(|v| v / n);
            return Ok(e);
        }
    }
}

/// Uniform draw from the unit Euclidean ball: a sphere point scaled by
/// `U^{1/dim}`.
pub fn sample_unit_ball<T: Scalar>(dim: usize, rng: &mut RngState) -> Result<Array1<T>> {
    let e = sample_unit_sphere::<T>(dim, rng)?;
    let radius = rng.uniform().powf(1.0 / dim as f64);
    Ok(e.mapv(|v| v * T::of(radius)))
}

/// Checks stability index and scale for the symmetric stable sampler.
pub fn check_stable_params(alpha: f64, scale: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(ZoError::invalid(format!(
            "stability index must lie in (1, 2], got {alpha}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(ZoError::invalid(format!("scale must be positive, got {scale}")));
    }
    Ok(())
}

/// One draw of the symmetric α-stable law `S(alpha, scale)` by the
/// Chambers–Mallows–Stuck transform. For `alpha = 2` this is
/// `Normal(0, 2·scale²)`.
pub fn sample_sym_alpha_stable(alpha: f64, scale: f64, rng: &mut RngState) -> Result<f64> {
    check_stable_params(alpha, scale)?;
    Ok(scale * cms_unchecked(alpha, rng))
}

#[inline]
pub(crate) fn cms_unchecked(alpha: f64, rng: &mut RngState) -> f64 {
    // V ~ U(-π/2, π/2) on the open interval, W ~ Exp(1) strictly positive.
    let v = loop {
        let v = (rng.uniform() * 2.0 - 1.0) * FRAC_PI_2;
        if v.abs() < FRAC_PI_2 {
            break v;
        }
    };
    let w = loop {
        let w = rng.exponential();
        if w > 0.0 {
            break w;
        }
    };
    let av = alpha * v;
    (av.sin() / v.cos().powf(1.0 / alpha)) * ((v - av).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Symmetric Pareto-tailed draw: random sign times `U^{-1/index}`.
/// `P(|X| > t) = t^{-index}` for `t ≥ 1`; moments are finite below `index`.
pub fn sample_sym_pareto(index: f64, rng: &mut RngState) -> Result<f64> {
    if !(index > 0.0) {
        return Err(ZoError::invalid(format!("tail index must be positive, got {index}")));
    }
    let u = loop {
        let u = rng.uniform();
        if u > 0.0 {
            break u;
        }
    };
    let sign = if rng.next_u32() & 1 == 0 { 1.0 } else { -1.0 };
    Ok(sign * u.powf(-1.0 / index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn zero_dim_is_rejected() {
        let mut rng = RngState::from_seed(1);
        assert!(sample_unit_sphere::<f64>(0, &mut rng).is_err());
        assert!(sample_unit_ball::<f64>(0, &mut rng).is_err());
    }

    #[test]
    fn sphere_in_one_dimension_is_plus_minus_one() {
        let mut rng = RngState::from_seed(7);
        let n = 20_000;
        let mut plus = 0usize;
        for _ in 0..n {
            let e = sample_unit_sphere::<f64>(1, &mut rng).unwrap();
            assert!(e[0] == 1.0 || e[0] == -1.0);
            if e[0] > 0.0 {
                plus += 1;
            }
        }
        let frac = plus as f64 / n as f64;
        assert!((frac - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt());
    }

    #[test]
    fn sphere_points_have_unit_norm() {
        let mut rng = RngState::from_seed(3);
        for _ in 0..1000 {
            let e = sample_unit_sphere::<f64>(16, &mut rng).unwrap();
            assert!((e.dot(&e).sqrt() - 1.0).abs() <= 1e-12);
        }
        for _ in 0..1000 {
            let e = sample_unit_sphere::<f32>(16, &mut rng).unwrap();
            assert!((e.dot(&e).sqrt() - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn sphere_coordinates_are_centered() {
        let mut rng = RngState::from_seed(11);
        let n = 100_000;
        let mut sums = [0.0f64; 3];
        for _ in 0..n {
            let e = sample_unit_sphere::<f64>(3, &mut rng).unwrap();
            for j in 0..3 {
                sums[j] += e[j];
            }
        }
        for s in sums {
            assert!((s / n as f64).abs() < 4.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn sphere_marginal_has_variance_one_over_d() {
        let mut rng = RngState::from_seed(12);
        let d = 8;
        let n = 50_000;
        let v = {
            let mut v = Array1::<f64>::zeros(d);
            v[0] = 0.6;
            v[3] = 0.8;
            v
        };
        let proj: Vec<f64> = (0..n)
            .map(|_| sample_unit_sphere::<f64>(d, &mut rng).unwrap().dot(&v))
            .collect();
        let m = mean(&proj);
        let var = proj.iter().map(|p| p * p).sum::<f64>() / n as f64;
        assert!(m.abs() < 4.0 * (1.0 / (d * n) as f64).sqrt());
        // Var of the squared projection is bounded by 3/d², so the standard
        // error of the second moment is under 2/(d√n).
        assert!((var - 1.0 / d as f64).abs() < 4.0 * 2.0 / (d as f64 * (n as f64).sqrt()));
    }

    #[test]
    fn ball_points_are_inside_and_uniform_in_area() {
        let mut rng = RngState::from_seed(5);
        let n = 100_000;
        let mut inner = 0usize;
        for _ in 0..n {
            let u = sample_unit_ball::<f64>(2, &mut rng).unwrap();
            let r = u.dot(&u).sqrt();
            assert!(r <= 1.0);
            if r <= 0.5 {
                inner += 1;
            }
        }
        let frac = inner as f64 / n as f64;
        assert!((frac - 0.25).abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn ball_second_moment_matches_d_over_d_plus_two() {
        let mut rng = RngState::from_seed(6);
        for d in [1usize, 3, 10] {
            let n = 40_000;
            let m2 = (0..n)
                .map(|_| {
                    let u = sample_unit_ball::<f64>(d, &mut rng).unwrap();
                    u.dot(&u)
                })
                .sum::<f64>()
                / n as f64;
            let want = d as f64 / (d as f64 + 2.0);
            assert!((m2 - want).abs() < 4.0 * 0.5 / (n as f64).sqrt(), "d={d}: {m2} vs {want}");
        }
    }

    #[test]
    fn ball_in_one_dimension_is_uniform_interval() {
        let mut rng = RngState::from_seed(9);
        let n = 40_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_unit_ball::<f64>(1, &mut rng).unwrap()[0])
            .collect();
        assert!(xs.iter().all(|x| x.abs() <= 1.0));
        // Uniform on [-1, 1]: mean 0, E x² = 1/3.
        assert!(mean(&xs).abs() < 4.0 * (1.0 / 3.0 / n as f64).sqrt());
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((m2 - 1.0 / 3.0).abs() < 4.0 * (4.0 / 45.0 / n as f64).sqrt());
    }

    #[test]
    fn stable_parameters_are_validated() {
        let mut rng = RngState::from_seed(1);
        assert!(sample_sym_alpha_stable(1.0, 1.0, &mut rng).is_err());
        assert!(sample_sym_alpha_stable(2.1, 1.0, &mut rng).is_err());
        assert!(sample_sym_alpha_stable(1.5, 0.0, &mut rng).is_err());
        assert!(sample_sym_alpha_stable(1.5, -1.0, &mut rng).is_err());
        assert!(sample_sym_alpha_stable(2.0, 1.0, &mut rng).is_ok());
    }

    #[test]
    fn stable_at_two_is_gaussian_with_variance_two_scale_squared() {
        let mut rng = RngState::from_seed(21);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_sym_alpha_stable(2.0, 1.0, &mut rng).unwrap())
            .collect();
        let m = mean(&xs);
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 2.0).abs() < 0.05 * 2.0, "variance {var}");
    }

    #[test]
    fn stable_median_is_zero() {
        let mut rng = RngState::from_seed(22);
        let mut xs: Vec<f64> = (0..100_000)
            .map(|_| sample_sym_alpha_stable(1.5, 1.0, &mut rng).unwrap())
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = 0.5 * (xs[49_999] + xs[50_000]);
        assert!(med.abs() < 0.05, "median {med}");
    }

    #[test]
    fn stable_moments_finite_below_index_only() {
        // Running p-th absolute moment over growing prefixes. Below the index
        // the estimate settles; above it the running maximum keeps pushing it up.
        let mut rng = RngState::from_seed(23);
        let n = 1 << 20;
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_sym_alpha_stable(1.5, 1.0, &mut rng).unwrap().abs())
            .collect();
        let running = |p: f64, len: usize| xs[..len].iter().map(|x| x.powf(p)).sum::<f64>() / len as f64;

        let lo_small = running(1.4, n / 64);
        let lo_big = running(1.4, n);
        assert!(lo_small.is_finite() && lo_big.is_finite());
        assert!((lo_big / lo_small - 1.0).abs() < 0.5, "{lo_small} -> {lo_big}");

        // Across 64 times more samples the p = 1.6 estimate should grow by
        // roughly 64^{(1.6-1.5)/1.5}; it must at least not settle like p = 1.4.
        let hi: Vec<f64> = [n / 1024, n / 64, n].iter().map(|&l| running(1.6, l)).collect();
        assert!(hi[2] > hi[0], "{hi:?}");
        let hi_growth = hi[2] / hi[0];
        let lo_growth = lo_big / running(1.4, n / 1024);
        assert!(hi_growth > lo_growth, "{hi_growth} vs {lo_growth}");
    }

    #[test]
    fn identical_seeds_give_identical_streams() {
        let mut a = RngState::from_seed(99).substream(Stream::Noise).child(4);
        let mut b = RngState::from_seed(99).substream(Stream::Noise).child(4);
        for _ in 0..100 {
            assert_eq!(
                sample_sym_alpha_stable(1.5, 2.0, &mut a).unwrap().to_bits(),
                sample_sym_alpha_stable(1.5, 2.0, &mut b).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn substreams_do_not_depend_on_parent_consumption() {
        let fresh = RngState::from_seed(5);
        let mut used = RngState::from_seed(5);
        for _ in 0..17 {
            used.uniform();
        }
        let mut a = fresh.substream(Stream::Direction);
        let mut b = used.substream(Stream::Direction);
        assert_eq!(a.next_u64(), b.next_u64());
        let mut c = fresh.substream(Stream::Noise);
        let mut d = fresh.substream(Stream::Direction);
        assert_ne!(c.next_u64(), d.next_u64());
        assert_ne!(fresh.child(1).stream_id(), fresh.substream(Stream::Direction).stream_id());
    }

    #[test]
    fn pareto_tail_matches_index() {
        let mut rng = RngState::from_seed(31);
        let n = 100_000;
        let over = (0..n)
            .filter(|_| sample_sym_pareto(1.5, &mut rng).unwrap().abs() > 4.0)
            .count();
        let frac = over as f64 / n as f64;
        let want = 4.0f64.powf(-1.5);
        assert!((frac - want).abs() < 4.0 * (want / n as f64).sqrt());
    }
}
