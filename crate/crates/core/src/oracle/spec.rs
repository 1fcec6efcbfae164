use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::{
    make_quadratic, EuclideanNorm, HeavyTailLsq, Linear, LsqGeneration, NoiseSpec,
    StochasticOracle,
};
use crate::error::{Result, ZoError};
use crate::randkit::RngState;
use crate::scalar::Scalar;

fn one() -> f64 {
    1.0
}

/// Serializable description of a problem instance; [`ProblemSpec::build`]
/// reconstructs the identical oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `‖Ax − b‖₂ + ⟨ξ, x⟩` with `ξ` i.i.d. symmetric `alpha`-stable.
    HeavyTailLsq {
        d: usize,
        m: usize,
        alpha: f64,
        #[serde(default = "one")]
        noise_scale: f64,
        matrix_seed: u64,
        #[serde(default)]
        generation: LsqGeneration,
    },
    Quadratic {
        d: usize,
        mu: f64,
        l_quad: f64,
        /// Defaults to the origin.
        #[serde(default)]
        x_star: Option<Vec<f64>>,
        #[serde(default)]
        noise: NoiseSpec,
        /// Random eigenbasis when set, diagonal Hessian otherwise.
        #[serde(default)]
        basis_seed: Option<u64>,
    },
    Linear {
        slope: Vec<f64>,
        #[serde(default)]
        noise: NoiseSpec,
    },
    /// `‖x‖₂`.
    Norm { d: usize },
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match self {
            ProblemSpec::HeavyTailLsq { d, .. }
            | ProblemSpec::Quadratic { d, .. }
            | ProblemSpec::Norm { d } => *d,
            ProblemSpec::Linear { slope, .. } => slope.len(),
        }
    }

    pub fn build<T: Scalar>(&self) -> Result<Box<dyn StochasticOracle<T>>> {
        Ok(match self {
            ProblemSpec::HeavyTailLsq {
                d,
                m,
                alpha,
                noise_scale,
                matrix_seed,
                generation,
            } => Box::new(HeavyTailLsq::<T>::new(
                *d,
                *m,
                NoiseSpec::SymStable {
                    alpha: *alpha,
                    scale: *noise_scale,
                },
                *generation,
                &RngState::from_seed(*matrix_seed),
            )?),
            ProblemSpec::Quadratic {
                d,
                mu,
                l_quad,
                x_star,
                noise,
                basis_seed,
            } => {
                let xs = match x_star {
                    Some(v) if v.len() != *d => {
                        return Err(ZoError::invalid("x_star length must equal d"))
                    }
                    Some(v) => v.iter().map(|&c| T::of(c)).collect(),
                    None => Array1::zeros(*d),
                };
                let seed = basis_seed.map(RngState::from_seed);
                Box::new(make_quadratic(*d, *mu, *l_quad, xs, *noise, seed.as_ref())?)
            }
            ProblemSpec::Linear { slope, noise } => Box::new(Linear::new(
                slope.iter().map(|&c| T::of(c)).collect(),
                *noise,
            )?),
            ProblemSpec::Norm { d } => Box::new(EuclideanNorm::<T>::centered(*d)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lsq_spec_round_trips_and_rebuilds_identically() {
        let spec = ProblemSpec::HeavyTailLsq {
            d: 16,
            m: 500,
            alpha: 1.5,
            noise_scale: 1.0,
            matrix_seed: 0,
            generation: LsqGeneration::Regression,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: ProblemSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let a = spec.build::<f64>().unwrap();
        let b = back.build::<f64>().unwrap();
        assert_eq!(a.meta().x_star, b.meta().x_star);
        assert_eq!(a.meta().f_star, b.meta().f_star);
    }

    #[test]
    fn defaults_and_unknown_keys() {
        let spec: ProblemSpec =
            serde_json::from_str(r#"{"kind":"heavy_tail_lsq","d":4,"m":8,"alpha":1.5,"matrix_seed":3}"#)
                .unwrap();
        assert_eq!(spec.dim(), 4);
        assert!(serde_json::from_str::<ProblemSpec>(
            r#"{"kind":"heavy_tail_lsq","d":4,"m":8,"alpha":1.5,"matrix_seed":3,"bogus":1}"#
        )
        .is_err());
        let q: ProblemSpec = serde_json::from_str(r#"{"kind":"quadratic","d":2,"mu":1,"l_quad":2}"#).unwrap();
        let oracle = q.build::<f64>().unwrap();
        assert_eq!(oracle.meta().mu, 1.0);
    }
}
