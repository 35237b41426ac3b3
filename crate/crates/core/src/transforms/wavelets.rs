//! Periodized orthonormal wavelet bases (Haar and Daubechies 2-4), in any
//! dimension via the isotropic separable construction.
//!
//! Coefficients are ordered coarsest scale first: the final scaling block,
//! then the detail subbands of each level from coarse to fine. Within a
//! level the subbands follow their low/high bitmask and positions are
//! lexicographic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{CMatrix, DenseOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wavelet {
    Haar,
    Db2,
    Db3,
    Db4,
}

impl Wavelet {
    pub fn filter(self) -> Vec<f64> {
        match self {
            Wavelet::Haar => daubechies_filter(1).unwrap(),
            Wavelet::Db2 => daubechies_filter(2).unwrap(),
            Wavelet::Db3 => daubechies_filter(3).unwrap(),
            Wavelet::Db4 => daubechies_filter(4).unwrap(),
        }
    }
}

/// Orthonormal Daubechies low-pass filter with `2p` taps (`p = 1` is Haar).
pub fn daubechies_filter(p: usize) -> Option<Vec<f64>> {
    let s2 = std::f64::consts::SQRT_2;
    Some(match p {
        1 => vec![1.0 / s2, 1.0 / s2],
        2 => {
            let s3 = 3f64.sqrt();
            let c = 4.0 * s2;
            vec![(1.0 + s3) / c, (3.0 + s3) / c, (3.0 - s3) / c, (1.0 - s3) / c]
        }
        3 => vec![
            0.332_670_552_950_082_6,
            0.806_891_509_311_092_6,
            0.459_877_502_118_491_6,
            -0.135_011_020_010_254_6,
            -0.085_441_273_882_026_66,
            0.035_226_291_885_709_54,
        ],
        4 => vec![
            0.230_377_813_308_896_5,
            0.714_846_570_552_915_6,
            0.630_880_767_929_858_9,
            -0.027_983_769_416_859_85,
            -0.187_034_811_719_093_1,
            0.030_841_381_835_560_76,
            0.032_883_011_666_885_2,
            -0.010_597_401_785_069_03,
        ],
        _ => return None,
    })
}

fn highpass(h: &[f64]) -> Vec<f64> {
    let f = h.len();
    (0..f)
        .map(|n| if n % 2 == 0 { h[f - 1 - n] } else { -h[f - 1 - n] })
        .collect()
}

/// One periodized analysis step on a line: `[low half | high half]`.
fn analyze_line(x: &[f64], h: &[f64], g: &[f64], out: &mut [f64]) {
    let len = x.len();
    let half = len / 2;
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (n, (&hn, &gn)) in h.iter().zip(g).enumerate() {
            let v = x[(2 * k + n) % len];
            a += hn * v;
            d += gn * v;
        }
        out[k] = a;
        out[half + k] = d;
    }
}

/// Apply one level along every axis of a `side^dim` block.
fn analyze_block(block: &mut [f64], side: usize, dim: usize, h: &[f64], g: &[f64]) {
    let mut line = vec![0.0; side];
    let mut out = vec![0.0; side];
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let total = block.len();
        for start in 0..total {
            // `start` must have a zero coordinate along `axis`.
            if !(start / stride).is_multiple_of(side) {
                continue;
            }
            for (i, v) in line.iter_mut().enumerate() {
                *v = block[start + i * stride];
            }
            analyze_line(&line, h, g, &mut out);
            for (i, v) in out.iter().enumerate() {
                block[start + i * stride] = *v;
            }
        }
    }
}

/// Extract subband `mask` (bit `axis` set = high-pass along that axis,
/// axis 0 is the most significant bit) from a transformed block.
fn subband(block: &[f64], side: usize, dim: usize, mask: usize) -> Vec<f64> {
    let half = side / 2;
    let count = half.pow(dim as u32);
    (0..count)
        .map(|mut idx| {
            let mut flat = 0;
            let mut coords = vec![0; dim];
            for a in (0..dim).rev() {
                coords[a] = idx % half;
                idx /= half;
            }
            for (a, &c) in coords.iter().enumerate() {
                let bit = (mask >> (dim - 1 - a)) & 1;
                flat = flat * side + c + bit * half;
            }
            block[flat]
        })
        .collect()
}

fn transform(signal: &[f64], grid_n: usize, dim: usize, levels: usize, h: &[f64]) -> Vec<f64> {
    let g = highpass(h);
    let mut approx = signal.to_vec();
    let mut side = grid_n;
    let mut details_by_level: Vec<Vec<f64>> = Vec::with_capacity(levels);
    for _ in 0..levels {
        analyze_block(&mut approx, side, dim, h, &g);
        let mut details = Vec::new();
        for mask in 1..(1usize << dim) {
            details.extend(subband(&approx, side, dim, mask));
        }
        details_by_level.push(details);
        approx = subband(&approx, side, dim, 0);
        side /= 2;
    }
    let mut out = approx;
    for details in details_by_level.into_iter().rev() {
        out.extend(details);
    }
    out
}

fn check_grid(grid_n: usize, levels: usize) -> Result<()> {
    if grid_n < 2 || !grid_n.is_power_of_two() {
        return Err(Error::BadGridSize(grid_n));
    }
    if levels == 0 || levels > grid_n.trailing_zeros() as usize {
        return Err(Error::range(format!(
            "levels must lie in 1..={} for grid {grid_n}",
            grid_n.trailing_zeros()
        )));
    }
    Ok(())
}

/// Orthonormal separable wavelet analysis operator on the `grid_n^dim` grid.
pub fn build_wavelet(wavelet: Wavelet, grid_n: usize, levels: usize, dim: usize) -> Result<DenseOperator> {
    check_grid(grid_n, levels)?;
    if dim == 0 {
        return Err(Error::range("dimension must be positive"));
    }
    let h = wavelet.filter();
    let n = grid_n.pow(dim as u32);
    let mut mat = CMatrix::zeros(n, n);
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let col = transform(&unit, grid_n, dim, levels, &h);
        unit[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            mat[(i, j)] = C64::new(v, 0.0);
        }
    }
    DenseOperator::new(mat)
}

pub fn build_haar(grid_n: usize, levels: usize, dim: usize) -> Result<DenseOperator> {
    build_wavelet(Wavelet::Haar, grid_n, levels, dim)
}

/// One-dimensional periodized Daubechies-`order` operator, `order` in 2..=4.
pub fn build_db(order: usize, grid_n: usize, levels: usize) -> Result<DenseOperator> {
    let wavelet = match order {
        2 => Wavelet::Db2,
        3 => Wavelet::Db3,
        4 => Wavelet::Db4,
        _ => return Err(Error::range(format!("Daubechies order {order} not in 2..=4"))),
    };
    build_wavelet(wavelet, grid_n, levels, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{frame_bounds, CVector};
    use crate::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn two_point_haar() {
        let op = build_haar(2, 1, 1).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let expect = [[s, s], [s, -s]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((op.matrix()[(r, c)].re - expect[r][c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn filters_are_normalized() {
        for p in 1..=4 {
            let h = daubechies_filter(p).unwrap();
            let sq: f64 = h.iter().map(|x| x * x).sum();
            let sum: f64 = h.iter().sum();
            assert!((sq - 1.0).abs() < 1e-12, "p={p}");
            assert!((sum - 2f64.sqrt()).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn orthonormal_constructors() {
        let cases = vec![
            build_haar(16, 4, 1).unwrap(),
            build_haar(8, 2, 2).unwrap(),
            build_haar(4, 2, 3).unwrap(),
            build_db(2, 32, 5).unwrap(),
            build_db(3, 32, 3).unwrap(),
            build_db(4, 64, 6).unwrap(),
        ];
        for op in cases {
            let (a, b) = frame_bounds(&op).unwrap();
            assert!((a - 1.0).abs() < 1e-8 && (b - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn round_trip_random_signals() {
        let mut rng = seeded(5);
        for op in [build_haar(32, 5, 1).unwrap(), build_db(4, 32, 3).unwrap(), build_db(2, 16, 4).unwrap()] {
            for _ in 0..100 {
                let g = CVector::from_fn(op.n_cols(), |_, _| {
                    C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
                });
                let back = op.adjoint_apply(&op.apply(&g).unwrap()).unwrap();
                assert!((back - &g).norm() <= 1e-8 * g.norm());
            }
        }
    }

    #[test]
    fn coarsest_row_is_constant() {
        let op = build_haar(8, 3, 1).unwrap();
        let c = 1.0 / 8f64.sqrt();
        for j in 0..8 {
            assert!((op.matrix()[(0, j)].re - c).abs() < 1e-14);
        }
        let op = build_db(2, 16, 4).unwrap();
        for j in 0..16 {
            assert!((op.matrix()[(0, j)].re - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_grid() {
        assert!(matches!(build_haar(6, 1, 1), Err(Error::BadGridSize(6))));
        assert!(build_haar(8, 4, 1).is_err());
        assert!(build_db(5, 8, 1).is_err());
    }
}
