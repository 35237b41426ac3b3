//! l1-analysis recovery: `min ||D g||_1` subject to `||P_Omega U g - zeta|| <= eps`
//! (plain or weighted), solved by a primal-dual splitting with two dual
//! blocks. Also hosts the simplex oracle and the dual-certificate tools.

mod certificate;
mod simplex;

use std::io::Write;
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{CMatrix, CVector, DenseOperator, C64};
use crate::rng;
use crate::sampling::{measurement_scales, SamplingPattern};

pub use certificate::{
    certificate_check, golfing_certificate, random_signs, CertificateReport, ConditionValues,
    GolfingOutcome, GolfingSchedule,
};
pub use simplex::{lp_oracle, solve_standard_form, MAX_LP_VARIABLES};

/// Data of one recovery instance. `u` holds all rows of the measurement
/// operator; `pattern` selects (and may repeat) rows.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoveryProblem {
    pub u: DenseOperator,
    pub d: DenseOperator,
    pub pattern: SamplingPattern,
    pub zeta: Vec<C64>,
    pub epsilon: f64,
    /// Weights for the weighted data norm; `None` means Euclidean.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl RecoveryProblem {
    pub fn new(
        u: DenseOperator,
        d: DenseOperator,
        pattern: SamplingPattern,
        zeta: Vec<C64>,
        epsilon: f64,
    ) -> Result<Self> {
        let p = RecoveryProblem {
            u,
            d,
            pattern,
            zeta,
            epsilon,
            weights: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_weights(mut self, w: Vec<f64>) -> Result<Self> {
        self.weights = Some(w);
        self.validate()?;
        Ok(self)
    }

    /// Noise-free data `P_Omega U g0` for a known signal.
    pub fn from_signal(
        u: DenseOperator,
        d: DenseOperator,
        pattern: SamplingPattern,
        g0: &CVector,
    ) -> Result<Self> {
        let zeta = u.select_rows(&pattern.indices)?.apply(g0)?;
        Self::new(u, d, pattern, zeta.iter().copied().collect(), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.zeta.len() != self.pattern.len() {
            return Err(Error::DimensionMismatch {
                context: "zeta length vs pattern length",
                expected: self.pattern.len(),
                found: self.zeta.len(),
            });
        }
        if self.u.n_cols() != self.d.n_cols() {
            return Err(Error::DimensionMismatch {
                context: "ambient dimension of U and D",
                expected: self.u.n_cols(),
                found: self.d.n_cols(),
            });
        }
        if self.pattern.n > self.u.n_rows() {
            return Err(Error::DimensionMismatch {
                context: "pattern pool vs rows of U",
                expected: self.u.n_rows(),
                found: self.pattern.n,
            });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::range("epsilon must be finite and nonnegative"));
        }
        if let Some(&bad) = self.pattern.indices.iter().find(|&&i| i >= self.u.n_rows()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: self.u.n_rows(),
            });
        }
        if let Some(w) = &self.weights {
            measurement_scales(&self.pattern, w)?;
        }
        Ok(())
    }

    /// `P_Omega U` with rows in pattern order.
    pub fn measurement_matrix(&self) -> Result<CMatrix> {
        Ok(self.u.select_rows(&self.pattern.indices)?.into_matrix())
    }

    fn zeta_vector(&self) -> CVector {
        CVector::from_column_slice(&self.zeta)
    }

    /// Data-fidelity residual of `g` in the problem's own norm.
    pub fn constraint_residual(&self, g: &CVector) -> Result<f64> {
        let a = self.measurement_matrix()?;
        let r = &a * g - self.zeta_vector();
        match &self.weights {
            None => Ok(r.norm()),
            Some(w) => {
                let s = measurement_scales(&self.pattern, w)?;
                Ok(r.iter()
                    .zip(&s)
                    .map(|(z, f)| (z.norm() * f).powi(2))
                    .sum::<f64>()
                    .sqrt())
            }
        }
    }

    pub fn objective(&self, g: &CVector) -> f64 {
        (self.d.matrix() * g).iter().map(|z| z.norm()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_primal: f64,
    pub tol_dual: f64,
    /// Initial ratio `tau / sigma` of the primal and dual step sizes.
    pub step_ratio: f64,
    pub norm_power_iters: usize,
    /// Rebalance the step sizes from the residual ratio while iterating.
    pub adaptive: bool,
    /// Record a per-iteration trace.
    pub trace: bool,
    /// Allowed constraint violation at convergence, relative to `max(1, ||zeta||)`.
    pub tol_feasibility: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 50_000,
            tol_primal: 1e-9,
            tol_dual: 1e-9,
            step_ratio: 1.0,
            norm_power_iters: 100,
            adaptive: true,
            trace: false,
            tol_feasibility: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::range("max_iters must be at least 1"));
        }
        for (name, v) in [
            ("tol_primal", self.tol_primal),
            ("tol_dual", self.tol_dual),
            ("step_ratio", self.step_ratio),
            ("tol_feasibility", self.tol_feasibility),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::range(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub constraint_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub g: Vec<C64>,
    pub objective: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceRow>,
}

impl RecoveryResult {
    pub fn signal(&self) -> CVector {
        CVector::from_column_slice(&self.g)
    }

    /// The result if converged, otherwise `NotConverged`.
    pub fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
            })
        }
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "iteration,objective,primal_residual,dual_residual,constraint_residual")?;
        for r in &self.trace {
            writeln!(
                f,
                "{},{:e},{:e},{:e},{:e}",
                r.iteration, r.objective, r.primal_residual, r.dual_residual, r.constraint_residual
            )?;
        }
        Ok(())
    }
}

/// Largest singular value of `[D; A]` by power iteration on `D^*D + A^*A`.
/// Either block may be absent.
fn stacked_norm(d: Option<&Analysis>, a: Option<&CMatrix>, n: usize, iters: usize) -> f64 {
    let mut rng = rng::seeded(0x5eed);
    let mut v = CVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let nv = v.norm();
        if nv == 0.0 {
            return 0.0;
        }
        v /= C64::from(nv);
        let mut w = CVector::zeros(n);
        if let Some(d) = d {
            w += d.adjoint(&d.apply(&v));
        }
        if let Some(a) = a {
            w += a.ad_mul(&(a * &v));
        }
        est = w.norm();
        v = w;
    }
    est.sqrt()
}

fn project_unit_linf(y: &mut CVector) {
    for z in y.iter_mut() {
        let r = z.norm();
        if r > 1.0 {
            *z /= r;
        }
    }
}

/// `D` as the iteration sees it; the identity skips two dense products.
enum Analysis<'a> {
    Identity,
    Dense(&'a CMatrix),
}

impl Analysis<'_> {
    fn new(d: &CMatrix) -> Analysis<'_> {
        let square_identity = d.is_square()
            && d.iter().enumerate().all(|(k, z)| {
                let (i, j) = (k % d.nrows(), k / d.nrows());
                *z == if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
            });
        if square_identity {
            Analysis::Identity
        } else {
            Analysis::Dense(d)
        }
    }

    fn apply(&self, g: &CVector) -> CVector {
        match self {
            Analysis::Identity => g.clone(),
            Analysis::Dense(d) => *d * g,
        }
    }

    fn adjoint(&self, y: &CVector) -> CVector {
        match self {
            Analysis::Identity => y.clone(),
            Analysis::Dense(d) => d.ad_mul(y),
        }
    }
}

/// A square `D` with `D D^* = I` to within `1e-12` entrywise.
fn is_unitary(d: &CMatrix) -> bool {
    if !d.is_square() {
        return false;
    }
    let g = d * d.adjoint();
    g.iter().enumerate().all(|(k, z)| {
        let diag = k % g.nrows() == k / g.nrows();
        (z - if diag { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm() <= 1e-12
    })
}

/// For unitary `D` substitute `x = D g`: the problem becomes
/// `min ||x||_1 s.t. ||A D^* x - b|| <= eps` and the iteration never touches `D`.
fn solve_core(d: &CMatrix, a: &CMatrix, b: &CVector, eps: f64, cfg: &SolverConfig) -> RecoveryResult {
    if matches!(Analysis::new(d), Analysis::Identity) || !is_unitary(d) {
        return primal_dual(d, a, b, eps, cfg);
    }
    let n = d.ncols();
    let ad = a * d.adjoint();
    let mut res = primal_dual(&CMatrix::identity(n, n), &ad, b, eps, cfg);
    let g = d.ad_mul(&CVector::from_column_slice(&res.g));
    res.objective = (d * &g).iter().map(|z| z.norm()).sum();
    res.constraint_residual = ((a * &g) - b).norm();
    res.g = g.iter().copied().collect();
    res
}

/// Primal-dual iteration for `min ||D g||_1 s.t. ||A g - b|| <= eps`.
/// The data rows are rescaled internally so both blocks have comparable norm.
fn primal_dual(d: &CMatrix, a: &CMatrix, b: &CVector, eps: f64, cfg: &SolverConfig) -> RecoveryResult {
    let n = d.ncols();
    let dop = Analysis::new(d);
    let identity = matches!(dop, Analysis::Identity);
    let norm_d = if identity {
        1.0
    } else {
        stacked_norm(Some(&dop), None, n, cfg.norm_power_iters)
    };
    let norm_a = stacked_norm(None, Some(a), n, cfg.norm_power_iters);
    let gamma = if norm_a > 0.0 { norm_d.max(1e-300) / norm_a } else { 1.0 };
    let a_s = a * C64::from(gamma);
    let b_s = b * C64::from(gamma);
    let eps_s = eps * gamma;
    // 2% safety margin on the power-method estimate.
    let l = if identity {
        // ||[I; A]||^2 = 1 + ||A||^2 exactly.
        (1.0 + (gamma * norm_a).powi(2)).sqrt() * 1.02
    } else {
        stacked_norm(Some(&dop), Some(&a_s), n, cfg.norm_power_iters) * 1.02
    };
    let l = if l > 0.0 { l } else { 1.0 };
    let ratio = cfg.step_ratio.sqrt();
    let mut tau = 0.99 * ratio / l;
    let mut sigma = 0.99 / (ratio * l);

    let mut g = CVector::zeros(n);
    let mut dg = CVector::zeros(d.nrows());
    let mut ag = CVector::zeros(a.nrows());
    let mut y1 = CVector::zeros(d.nrows());
    let mut y2 = CVector::zeros(a.nrows());
    let mut dty = CVector::zeros(n);
    let mut aty = CVector::zeros(n);
    let mut trace = Vec::new();
    let mut alpha = 0.5;
    let feas_tol = cfg.tol_feasibility * b_s.norm().max(gamma);
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iters {
        iterations = it;
        // Primal step (no smooth term: prox of zero).
        let g_new = &g - (&dty + &aty) * C64::from(tau);
        let dg_new = dop.apply(&g_new);
        let ag_new = &a_s * &g_new;
        // Dual step on the l1 block: prox of the conjugate is the projection
        // onto the unit l_inf ball (Moreau form of soft-thresholding).
        let mut y1_new = &y1 + (&dg_new * C64::from(2.0) - &dg) * C64::from(sigma);
        project_unit_linf(&mut y1_new);
        // Dual step on the data block via Moreau:
        // v - sigma * proj_ball(v / sigma), ball centered at b_s with radius eps_s.
        let v = &y2 + (&ag_new * C64::from(2.0) - &ag) * C64::from(sigma);
        let mut c = &v / C64::from(sigma) - &b_s;
        let cn = c.norm();
        if cn > eps_s {
            c *= C64::from(if cn > 0.0 { eps_s / cn } else { 0.0 });
        }
        let y2_new = &v - (c + &b_s) * C64::from(sigma);
        let dty_new = dop.adjoint(&y1_new);
        let aty_new = a_s.ad_mul(&y2_new);

        // Residuals of the optimality conditions, each relative to the size
        // of the terms it balances.
        let p = &dty_new + &aty_new;
        let p_norm = p.norm();
        let p_scale = dty_new.norm().max(aty_new.norm()).max(1e-300);
        let r1 = (&y1 - &y1_new) / C64::from(sigma) - (&dg - &dg_new);
        let r2 = (&y2 - &y2_new) / C64::from(sigma) - (&ag - &ag_new);
        let d_norm = (r1.norm_squared() + r2.norm_squared()).sqrt();
        let d_scale = (dg_new.norm_squared() + ag_new.norm_squared())
            .sqrt()
            .max(b_s.norm())
            .max(1e-300);

        g = g_new;
        dg = dg_new;
        ag = ag_new;
        y1 = y1_new;
        y2 = y2_new;
        dty = dty_new;
        aty = aty_new;

        let feas = (&ag - &b_s).norm();
        let (pr, dr) = (p_norm / p_scale, d_norm / d_scale);
        if cfg.trace {
            trace.push(TraceRow {
                iteration: it,
                objective: dg.iter().map(|z| z.norm()).sum(),
                primal_residual: pr,
                dual_residual: dr,
                constraint_residual: feas / gamma,
            });
        }
        if pr <= cfg.tol_primal && dr <= cfg.tol_dual && feas <= eps_s + feas_tol {
            converged = true;
            break;
        }
        if cfg.adaptive {
            // Keep tau * sigma fixed and shift weight toward the larger residual.
            if pr > 2.0 * dr {
                tau /= 1.0 - alpha;
                sigma *= 1.0 - alpha;
                alpha *= 0.95;
            } else if dr > 2.0 * pr {
                tau *= 1.0 - alpha;
                sigma /= 1.0 - alpha;
                alpha *= 0.95;
            }
        }
    }
    let objective = dg.iter().map(|z| z.norm()).sum();
    let constraint_residual = ((a * &g) - b).norm();
    RecoveryResult {
        g: g.iter().copied().collect(),
        objective,
        constraint_residual,
        iterations,
        converged,
        trace,
    }
}

/// Solve with the Euclidean data-fidelity ball. Non-convergence is reported
/// through `converged = false`; use [`RecoveryResult::into_converged`] to turn
/// it into an error.
pub fn solve_analysis_l1(problem: &RecoveryProblem, config: &SolverConfig) -> Result<RecoveryResult> {
    problem.validate()?;
    config.validate()?;
    let a = problem.measurement_matrix()?;
    Ok(solve_core(
        problem.d.matrix(),
        &a,
        &problem.zeta_vector(),
        problem.epsilon,
        config,
    ))
}

/// Solve with the weighted data norm: rows and data are scaled by
/// `1 / sqrt(ceil(N w_{l_i}^2))`, which turns the weighted ball Euclidean.
pub fn solve_weighted_l1(problem: &RecoveryProblem, config: &SolverConfig) -> Result<RecoveryResult> {
    problem.validate()?;
    config.validate()?;
    let w = problem
        .weights
        .as_ref()
        .ok_or_else(|| Error::range("solve_weighted_l1 needs a weight vector"))?;
    let scales = measurement_scales(&problem.pattern, w)?;
    let mut a = problem.measurement_matrix()?;
    let mut b = problem.zeta_vector();
    for (i, s) in scales.iter().enumerate() {
        a.row_mut(i).scale_mut(*s);
        b[i] *= *s;
    }
    let mut res = solve_core(problem.d.matrix(), &a, &b, problem.epsilon, config);
    res.constraint_residual = problem.constraint_residual(&res.signal())?;
    Ok(res)
}

/// Inputs of the error bound
/// `20 k1 sqrt(k2) sigma + C'' k2 ||w|| sqrt(k1^3 omega s N / m) eps`
/// (`||w|| = 1` for uniform sampling). `c_second` defaults to 1 as a
/// placeholder for the unspecified universal constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBoundInputs {
    pub sigma: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub omega: f64,
    pub s: usize,
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    #[serde(default = "unit")]
    pub weight_norm: f64,
    #[serde(default = "unit")]
    pub c_second: f64,
}

fn unit() -> f64 {
    1.0
}

pub fn recovery_error_bound(p: &ErrorBoundInputs) -> f64 {
    let first = 20.0 * p.kappa1 * p.kappa2.sqrt() * p.sigma;
    let second = p.c_second
        * p.kappa2
        * p.weight_norm
        * (p.kappa1.powi(3) * p.omega * p.s as f64 * p.n as f64 / p.m as f64).sqrt()
        * p.epsilon;
    first + second
}

/// `||g - g0|| / ||g0||`, or `||g||` when `g0 = 0`.
pub fn relative_error(g: &CVector, g0: &CVector) -> f64 {
    let d = (g - g0).norm();
    let n = g0.norm();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}
