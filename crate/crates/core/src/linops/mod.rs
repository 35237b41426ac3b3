//! Dense finite frames: analysis operators, canonical duals, frame bounds.
//!
//! Row `l` of an analysis operator holds the conjugated frame vector
//! `psi_l`, so that `(U g)_l = <g, psi_l>`. The synthesis operator is the
//! adjoint and `psi_l = U^* e_l`.

pub mod io;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// `sigma_min / sigma_max` below this is treated as rank deficiency.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    mat: CMatrix,
}

/// JSON shape of an operator: dimensions plus row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct OperatorRecord {
    n_rows: usize,
    n_cols: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for DenseOperator {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut entries = Vec::with_capacity(self.mat.len());
        for r in 0..self.mat.nrows() {
            for z in self.mat.row(r).iter() {
                entries.push([z.re, z.im]);
            }
        }
        OperatorRecord {
            n_rows: self.mat.nrows(),
            n_cols: self.mat.ncols(),
            entries,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for DenseOperator {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rec = OperatorRecord::deserialize(de)?;
        let entries: Vec<C64> = rec.entries.iter().map(|e| C64::new(e[0], e[1])).collect();
        DenseOperator::from_row_major(rec.n_rows, rec.n_cols, &entries)
            .map_err(serde::de::Error::custom)
    }
}

impl DenseOperator {
    pub fn new(mat: CMatrix) -> Result<Self> {
        for c in 0..mat.ncols() {
            for r in 0..mat.nrows() {
                let z = mat[(r, c)];
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        if mat.nrows() == 0 || mat.ncols() == 0 {
            return Err(Error::range("operator must have at least one row and one column"));
        }
        Ok(DenseOperator { mat })
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                context: "row-major entries",
                expected: n_rows * n_cols,
                found: entries.len(),
            });
        }
        Self::new(CMatrix::from_row_slice(n_rows, n_cols, entries))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    context: "ragged rows",
                    expected: n_cols,
                    found: row.len(),
                });
            }
            entries.extend(row.iter().map(|&x| C64::new(x, 0.0)));
        }
        Self::from_row_major(n_rows, n_cols, &entries)
    }

    pub fn identity(n: usize) -> Self {
        DenseOperator {
            mat: CMatrix::identity(n, n),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.mat.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn apply(&self, g: &CVector) -> Result<CVector> {
        check_len("apply", self.n_cols(), g.len())?;
        Ok(&self.mat * g)
    }

    pub fn adjoint_apply(&self, y: &CVector) -> Result<CVector> {
        check_len("adjoint_apply", self.n_rows(), y.len())?;
        Ok(self.mat.ad_mul(y))
    }

    /// The frame vector `psi_l = U^* e_l`.
    pub fn frame_vector(&self, l: usize) -> CVector {
        self.mat.row(l).adjoint()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DenseOperator {
            mat: self.mat.map(|z| z * factor),
        }
    }

    /// Rows listed in `indices`, in order, repetitions allowed.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n_rows()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.n_rows(),
            });
        }
        Ok(DenseOperator {
            mat: self.mat.select_rows(indices.iter()),
        })
    }

    pub fn adjoint(&self) -> CMatrix {
        self.mat.adjoint()
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        });
    }
    Ok(())
}

/// Singular values in decreasing order.
pub fn singular_values(mat: &CMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = mat.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Largest singular value (the operator norm `l2 -> l2`).
pub fn spectral_norm(mat: &CMatrix) -> f64 {
    if mat.nrows() == 0 || mat.ncols() == 0 {
        return 0.0;
    }
    singular_values(mat).first().copied().unwrap_or(0.0)
}

struct Decomposition {
    lower: f64,
    upper: f64,
    dual: CMatrix,
}

fn decompose(op: &DenseOperator) -> Result<Decomposition> {
    let (m, n) = (op.n_rows(), op.n_cols());
    if m < n {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let svd = op.mat.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smax == 0.0 || smin / smax < RANK_TOLERANCE {
        let ratio = if smax == 0.0 { 0.0 } else { smin / smax };
        return Err(Error::RankDeficient { ratio });
    }
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    // U = W S V^*  =>  U (U^*U)^{-1} = W S^{-1} V^*
    let mut w = u;
    for (k, s) in sv.iter().enumerate() {
        let inv = 1.0 / s;
        w.column_mut(k).scale_mut(inv);
    }
    Ok(Decomposition {
        lower: smin * smin,
        upper: smax * smax,
        dual: w * v_t,
    })
}

/// Optimal frame bounds `(A, B)`: extreme eigenvalues of `U^*U`.
pub fn frame_bounds(op: &DenseOperator) -> Result<(f64, f64)> {
    if op.n_rows() < op.n_cols() {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let sv = singular_values(&op.mat);
    let smax = sv[0];
    let smin = *sv.last().unwrap();
    if smax == 0.0 || smin / smax < RANK_TOLERANCE {
        let ratio = if smax == 0.0 { 0.0 } else { smin / smax };
        return Err(Error::RankDeficient { ratio });
    }
    Ok((smin * smin, smax * smax))
}

/// Analysis operator of the canonical dual frame `{(U^*U)^{-1} psi_l}`.
pub fn dual_frame(op: &DenseOperator) -> Result<DenseOperator> {
    decompose(op).map(|d| DenseOperator { mat: d.dual })
}

/// Moore-Penrose pseudo-inverse applied to `y`: `(U^*U)^{-1} U^* y`.
pub fn pseudo_inverse_apply(op: &DenseOperator, y: &CVector) -> Result<CVector> {
    check_len("pseudo_inverse_apply", op.n_rows(), y.len())?;
    let dual = dual_frame(op)?;
    Ok(dual.mat.ad_mul(y))
}

/// A frame together with its canonical dual and optimal bounds.
#[derive(Clone, Debug)]
pub struct FrameBundle {
    op: DenseOperator,
    dual_op: DenseOperator,
    lower: f64,
    upper: f64,
    kappa: f64,
}

pub fn make_bundle(op: DenseOperator) -> Result<FrameBundle> {
    let d = decompose(&op)?;
    Ok(FrameBundle::from_parts(
        op,
        DenseOperator { mat: d.dual },
        d.lower,
        d.upper,
    ))
}

impl FrameBundle {
    /// Assemble a bundle from already-known pieces. The caller vouches that
    /// `dual_op` is the canonical dual of `op` and that the bounds are exact.
    pub fn from_parts(op: DenseOperator, dual_op: DenseOperator, lower: f64, upper: f64) -> Self {
        let kappa = upper.max(1.0 / lower);
        FrameBundle {
            op,
            dual_op,
            lower,
            upper,
            kappa,
        }
    }

    pub fn op(&self) -> &DenseOperator {
        &self.op
    }

    pub fn dual_op(&self) -> &DenseOperator {
        &self.dual_op
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n_rows(&self) -> usize {
        self.op.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.op.n_cols()
    }

    /// `U^{-1} y` using the cached dual.
    pub fn pinv_apply(&self, y: &CVector) -> Result<CVector> {
        self.dual_op.adjoint_apply(y)
    }

    /// `U^{-1}` materialized (`n_cols x n_rows`).
    pub fn pinv(&self) -> CMatrix {
        self.dual_op.adjoint()
    }

    /// True when the bundle is (numerically) unitary: square and Parseval.
    pub fn is_unitary(&self, tol: f64) -> bool {
        self.n_rows() == self.n_cols()
            && (self.lower - 1.0).abs() <= tol
            && (self.upper - 1.0).abs() <= tol
    }
}
