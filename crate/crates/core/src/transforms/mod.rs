//! Concrete measurement and sparsifying systems materialized as dense
//! analysis operators on a uniform grid of `[0,1]^d`.
//!
//! Grid points are flattened row-major (axis 0 slowest) everywhere, so the
//! Fourier and wavelet constructors act on the same coordinates.

mod cgo;
mod nonuniform;
mod wavelets;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{CMatrix, DenseOperator, C64};

pub use cgo::{build_cgo_like, CgoParams};
pub use nonuniform::{
    build_nonuniform_fourier, density, density_and_separation, separation, BoxDomain,
    NonuniformSamplingSet,
};
pub use wavelets::{build_db, build_haar, build_wavelet, daubechies_filter, Wavelet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormTag {
    #[default]
    Euclidean,
    Manhattan,
    Max,
}

impl NormTag {
    /// An integer key that orders lattice points exactly like the norm does.
    fn key(self, k: &[i64]) -> u64 {
        match self {
            NormTag::Euclidean => k.iter().map(|&x| (x * x) as u64).sum(),
            NormTag::Manhattan => k.iter().map(|x| x.unsigned_abs()).sum(),
            NormTag::Max => k.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0),
        }
    }

    pub fn norm(self, k: &[i64]) -> f64 {
        match self {
            NormTag::Euclidean => (self.key(k) as f64).sqrt(),
            _ => self.key(k) as f64,
        }
    }
}

/// The first `count` points of `Z^d` in nondecreasing norm order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyOrdering {
    dim: usize,
    freqs: Vec<Vec<i64>>,
    norm: NormTag,
}

impl FrequencyOrdering {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn freqs(&self) -> &[Vec<i64>] {
        &self.freqs
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn euclidean_norm(&self, l: usize) -> f64 {
        NormTag::Euclidean.norm(&self.freqs[l])
    }
}

/// Ties are broken lexicographically on `(|k|, k_1, ..., k_d)`.
pub fn build_ordering(dim: usize, count: usize, norm: NormTag) -> Result<FrequencyOrdering> {
    if dim == 0 || count == 0 {
        return Err(Error::range("build_ordering needs dim >= 1 and count >= 1"));
    }
    let mut radius: i64 = 1;
    loop {
        // Every point with norm <= radius lies in the box [-radius, radius]^d
        // for all supported norms.
        let mut pts = box_points(dim, radius);
        let limit = norm.key(&[radius]);
        pts.retain(|k| norm.key(k) <= limit);
        if pts.len() >= count {
            pts.sort_by(|a, b| norm.key(a).cmp(&norm.key(b)).then_with(|| a.cmp(b)));
            pts.truncate(count);
            return Ok(FrequencyOrdering {
                dim,
                freqs: pts,
                norm,
            });
        }
        radius *= 2;
    }
}

/// All `grid_n^d` residues of `Z^d / grid_n Z^d`, represented in the
/// Nyquist box `-grid_n/2 <= k_i < grid_n/2` and ordered like
/// [`build_ordering`]. Its DFT is square and unitary in every dimension.
pub fn build_grid_ordering(dim: usize, grid_n: usize, norm: NormTag) -> Result<FrequencyOrdering> {
    if dim == 0 || grid_n == 0 {
        return Err(Error::range("build_grid_ordering needs dim >= 1 and grid_n >= 1"));
    }
    let lo = -((grid_n / 2) as i64);
    let total = grid_n.pow(dim as u32);
    let mut pts: Vec<Vec<i64>> = (0..total)
        .map(|mut idx| {
            let mut k = vec![0i64; dim];
            for a in (0..dim).rev() {
                k[a] = lo + (idx % grid_n) as i64;
                idx /= grid_n;
            }
            k
        })
        .collect();
    pts.sort_by(|a, b| norm.key(a).cmp(&norm.key(b)).then_with(|| a.cmp(b)));
    Ok(FrequencyOrdering {
        dim,
        freqs: pts,
        norm,
    })
}

fn box_points(dim: usize, radius: i64) -> Vec<Vec<i64>> {
    let side = (2 * radius + 1) as usize;
    let total = side.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut k = vec![0i64; dim];
            for a in (0..dim).rev() {
                k[a] = (idx % side) as i64 - radius;
                idx /= side;
            }
            k
        })
        .collect()
}

/// Uniform grid points of `[0,1]^d`, flattened row-major.
pub(crate) fn unit_grid(grid_n: usize, dim: usize) -> Vec<Vec<f64>> {
    let total = grid_n.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; dim];
            for a in (0..dim).rev() {
                x[a] = (idx % grid_n) as f64 / grid_n as f64;
                idx /= grid_n;
            }
            x
        })
        .collect()
}

fn check_nyquist(ordering: &FrequencyOrdering, grid_n: usize) -> Result<()> {
    let half = (grid_n / 2) as i64;
    for k in &ordering.freqs {
        for &c in k {
            // Representatives of Z / grid_n Z: -n/2 <= k < n/2 (even n).
            let ok = if grid_n.is_multiple_of(2) {
                c >= -half && c < half
            } else {
                c.abs() <= half
            };
            if !ok {
                return Err(Error::Aliasing { freq: c, grid_n });
            }
        }
    }
    Ok(())
}

/// Rows are the grid samples of `x -> exp(-2 pi i k_l . x)` scaled by
/// `grid_n^{-d/2}`, so the operator is an isometry when all residues are
/// present.
pub fn build_dft(ordering: &FrequencyOrdering, grid_n: usize) -> Result<DenseOperator> {
    if grid_n == 0 {
        return Err(Error::range("grid_n must be positive"));
    }
    check_nyquist(ordering, grid_n)?;
    let d = ordering.dim;
    let grid = unit_grid(grid_n, d);
    let scale = (grid_n as f64).powf(-(d as f64) / 2.0);
    let mat = CMatrix::from_fn(ordering.len(), grid.len(), |l, j| {
        let phase: f64 = ordering.freqs[l]
            .iter()
            .zip(&grid[j])
            .map(|(&k, &x)| k as f64 * x)
            .sum();
        C64::from_polar(scale, -2.0 * PI * phase)
    });
    DenseOperator::new(mat)
}

/// Full one-dimensional DFT with `n` rows in Euclidean frequency order.
pub fn dft_matrix_1d(n: usize) -> DenseOperator {
    let ord = build_ordering(1, n, NormTag::Euclidean).expect("n >= 1");
    build_dft(&ord, n).expect("full ordering never aliases")
}
