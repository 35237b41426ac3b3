//! Nonuniform Fourier frames on an axis-aligned symmetric box
//! `E = [-a_1, a_1] x ... x [-a_d, a_d]`, with density and separation
//! diagnostics for the frequency set.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{CMatrix, DenseOperator, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub half_widths: Vec<f64>,
}

impl BoxDomain {
    pub fn new(half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.is_empty() || half_widths.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::range("box half-widths must be positive and finite"));
        }
        Ok(BoxDomain { half_widths })
    }

    pub fn unit(dim: usize) -> Self {
        BoxDomain {
            half_widths: vec![0.5; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.half_widths.len()
    }

    /// `|y|_{E polar} = sup_{x in E} x . y`, which for a box is `sum a_i |y_i|`.
    pub fn polar_norm(&self, y: &[f64]) -> f64 {
        self.half_widths.iter().zip(y).map(|(a, v)| a * v.abs()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonuniformSamplingSet {
    points: Vec<Vec<f64>>,
    domain: BoxDomain,
    density: f64,
    separation: f64,
}

impl NonuniformSamplingSet {
    /// Density is evaluated over the bounding box of the points with
    /// `probes_per_axis` probes along each axis. A single point has infinite
    /// separation (the infimum over an empty set of pairs).
    pub fn new(points: Vec<Vec<f64>>, domain: BoxDomain, probes_per_axis: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints { needed: 1, found: 0 });
        }
        let dim = domain.dim();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                context: "sampling point dimension",
                expected: dim,
                found: p.len(),
            });
        }
        let window = bounding_box(&points);
        let density = density(&points, &domain, &window, probes_per_axis)?;
        let separation = if points.len() >= 2 {
            separation(&points)?
        } else {
            f64::INFINITY
        };
        Ok(NonuniformSamplingSet {
            points,
            domain,
            density,
            separation,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }
}

fn bounding_box(points: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let dim = points[0].len();
    (0..dim)
        .map(|a| {
            points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p[a]), hi.max(p[a]))
            })
        })
        .collect()
}

/// `sup_y inf_k |k - y|_{E polar}` over a probe grid covering `window`.
pub fn density(
    points: &[Vec<f64>],
    domain: &BoxDomain,
    window: &[(f64, f64)],
    probes_per_axis: usize,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }
    let dim = domain.dim();
    if window.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "probe window dimension",
            expected: dim,
            found: window.len(),
        });
    }
    let per_axis = probes_per_axis.max(1);
    let total = per_axis.pow(dim as u32);
    let mut worst: f64 = 0.0;
    let mut probe = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    for mut idx in 0..total {
        for a in (0..dim).rev() {
            let i = idx % per_axis;
            idx /= per_axis;
            let (lo, hi) = window[a];
            probe[a] = if per_axis == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (per_axis - 1) as f64
            };
        }
        let nearest = points
            .iter()
            .map(|k| {
                for a in 0..dim {
                    diff[a] = k[a] - probe[a];
                }
                domain.polar_norm(&diff)
            })
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    Ok(worst)
}

/// Minimum pairwise Euclidean distance.
pub fn separation(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: points.len(),
        });
    }
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
    }
    Ok(best)
}

/// `(density, separation)` with the probe window set to the points'
/// bounding box.
pub fn density_and_separation(
    points: &[Vec<f64>],
    domain: &BoxDomain,
    probes_per_axis: usize,
) -> Result<(f64, f64)> {
    let sep = separation(points)?;
    let dens = density(points, domain, &bounding_box(points), probes_per_axis)?;
    Ok((dens, sep))
}

/// Row `i` samples `x -> exp(-2 pi i k_i . x)` at the cell midpoints of a
/// `grid_n^d` partition of `E`, scaled by the square root of the cell volume
/// (midpoint quadrature), so that `(U g)_i` approximates `<g, e_{k_i}>_{L^2(E)}`.
pub fn build_nonuniform_fourier(set: &NonuniformSamplingSet, grid_n: usize) -> Result<DenseOperator> {
    if grid_n == 0 {
        return Err(Error::range("grid_n must be positive"));
    }
    let dom = set.domain();
    let dim = dom.dim();
    let total = grid_n.pow(dim as u32);
    let cell: f64 = dom
        .half_widths
        .iter()
        .map(|a| 2.0 * a / grid_n as f64)
        .product();
    let weight = cell.sqrt();
    let grid: Vec<Vec<f64>> = (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; dim];
            for a in (0..dim).rev() {
                let i = idx % grid_n;
                idx /= grid_n;
                let h = 2.0 * dom.half_widths[a] / grid_n as f64;
                x[a] = -dom.half_widths[a] + (i as f64 + 0.5) * h;
            }
            x
        })
        .collect();
    let pts = set.points();
    let mat = CMatrix::from_fn(pts.len(), total, |r, j| {
        let phase: f64 = pts[r].iter().zip(&grid[j]).map(|(k, x)| k * x).sum();
        C64::from_polar(weight, -2.0 * PI * phase)
    });
    DenseOperator::new(mat)
}
