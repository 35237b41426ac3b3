//! Synthetic perturbed Fourier frame with the decay structure of complex
//! geometrical optics solutions: `psi_l = e_{k_l} (1 + rho_l)` where `rho_l`
//! is a random trigonometric polynomial whose coefficients have total mass
//! `1 / (2 lambda (|k_l|^b + 1) c0)`.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{build_ordering, unit_grid, FrequencyOrdering, NormTag};
use crate::error::{Error, Result};
use crate::linops::{CMatrix, DenseOperator, C64};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgoParams {
    /// Perturbation parameter; `f64::INFINITY` gives the unperturbed DFT.
    pub lambda: f64,
    pub decay_b: f64,
    pub seed: u64,
    /// Number of nonzero frequencies in each `rho_l`.
    #[serde(default = "default_terms")]
    pub terms: usize,
}

fn default_terms() -> usize {
    6
}

impl CgoParams {
    pub fn new(lambda: f64, decay_b: f64, seed: u64) -> Self {
        CgoParams {
            lambda,
            decay_b,
            seed,
            terms: default_terms(),
        }
    }
}

/// The grid-normalized difference row `U_l - F_l` has Euclidean norm at most
/// `sup |rho_l| <= sum_h |c_h|`, so summing squares over `l` gives
/// `||U - F||_F <= 1 / (2 lambda)`.
pub fn build_cgo_like(
    ordering: &FrequencyOrdering,
    grid_n: usize,
    params: &CgoParams,
) -> Result<DenseOperator> {
    let lambda = params.lambda;
    if lambda.is_nan() || lambda < 2.0 {
        return Err(Error::BadLambda(lambda));
    }
    let dft = super::build_dft(ordering, grid_n)?;
    if lambda.is_infinite() || params.terms == 0 {
        return Ok(dft);
    }
    let d = ordering.dim();
    let b = params.decay_b;
    let weight = |l: usize| ordering.euclidean_norm(l).powf(b) + 1.0;
    let c0 = (0..ordering.len())
        .map(|l| weight(l).powi(-2))
        .sum::<f64>()
        .sqrt();

    // Perturbation frequencies: the lowest nonzero modes.
    let modes = build_ordering(d, params.terms + 1, NormTag::Euclidean)?;
    let modes = &modes.freqs()[1..];
    let grid = unit_grid(grid_n, d);
    let basis: Vec<Vec<C64>> = modes
        .iter()
        .map(|h| {
            grid.iter()
                .map(|x| {
                    let phase: f64 = h.iter().zip(x).map(|(&k, &t)| k as f64 * t).sum();
                    C64::from_polar(1.0, 2.0 * PI * phase)
                })
                .collect()
        })
        .collect();

    let mut rng = rng::seeded(params.seed);
    let mut mat: CMatrix = dft.into_matrix();
    for l in 0..ordering.len() {
        let mut coeffs: Vec<C64> = (0..modes.len())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect();
        let mass: f64 = coeffs.iter().map(|c| c.norm()).sum();
        // Spread the allowed mass by a random factor in (0.5, 1].
        let target = (0.5 + 0.5 * rng.random::<f64>()) / (2.0 * lambda * weight(l) * c0);
        for c in &mut coeffs {
            *c *= target / mass;
        }
        for j in 0..grid.len() {
            let rho: C64 = coeffs.iter().zip(&basis).map(|(c, e)| c * e[j]).sum();
            // Rows hold conj(psi_l) = conj(e_k) * conj(1 + rho).
            let f = mat[(l, j)];
            mat[(l, j)] = f * (C64::new(1.0, 0.0) + rho).conj();
        }
    }
    DenseOperator::new(mat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{make_bundle, spectral_norm};
    use crate::transforms::build_dft;

    #[test]
    fn infinite_lambda_is_the_dft() {
        let ord = build_ordering(1, 16, NormTag::Euclidean).unwrap();
        let u = build_cgo_like(&ord, 16, &CgoParams::new(f64::INFINITY, 1.0, 3)).unwrap();
        let f = build_dft(&ord, 16).unwrap();
        assert_eq!(u, f);
    }

    #[test]
    fn rejects_small_lambda() {
        let ord = build_ordering(1, 4, NormTag::Euclidean).unwrap();
        assert!(matches!(
            build_cgo_like(&ord, 4, &CgoParams::new(1.5, 1.0, 0)),
            Err(Error::BadLambda(_))
        ));
    }

    #[test]
    fn lambda_two_bounds() {
        for (d, n) in [(1usize, 32usize), (2, 8)] {
            let ord = super::super::build_grid_ordering(d, n, NormTag::Euclidean).unwrap();
            for seed in 0..4 {
                let u = build_cgo_like(&ord, n, &CgoParams::new(2.0, 1.0, seed)).unwrap();
                let f = build_dft(&ord, n).unwrap();
                let diff = u.matrix() - f.matrix();
                assert!(spectral_norm(&diff) <= 0.5);
                let bundle = make_bundle(u).unwrap();
                assert!(bundle.upper_bound().sqrt() <= 1.5);
                assert!(1.0 / bundle.lower_bound().sqrt() <= 2.0);
            }
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let ord = build_ordering(1, 16, NormTag::Euclidean).unwrap();
        let a = build_cgo_like(&ord, 16, &CgoParams::new(4.0, 2.0, 9)).unwrap();
        let b = build_cgo_like(&ord, 16, &CgoParams::new(4.0, 2.0, 9)).unwrap();
        let c = build_cgo_like(&ord, 16, &CgoParams::new(4.0, 2.0, 10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
