//! Dual certificates: the golfing construction and an independent checker of
//! the six sufficient conditions.
//!
//! Conventions: `U^{-1} = Ut^*` and `U^{-*} = Ut` where `Ut` is the canonical
//! dual operator, likewise for `D`. `E_Omega = U^* P_Omega U^{-*}`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{make_delta_subspace, DeltaSubspace};
use crate::error::{Error, Result};
use crate::linops::{singular_values, spectral_norm, CMatrix, CVector, FrameBundle, C64};
use crate::rng;

/// Step parameters `(alpha_i, beta_i, q_i)` for `i = 1..=l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GolfingSchedule {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub q: Vec<f64>,
}

impl GolfingSchedule {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let s = GolfingSchedule { alpha, beta, q };
        s.validate()?;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.q.is_empty() {
            return Err(Error::BadSchedule("schedule needs at least one step".into()));
        }
        if self.alpha.len() != self.q.len() || self.beta.len() != self.q.len() {
            return Err(Error::BadSchedule(format!(
                "lengths differ: alpha {}, beta {}, q {}",
                self.alpha.len(),
                self.beta.len(),
                self.q.len()
            )));
        }
        if self.q.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return Err(Error::BadSchedule("every q_i must lie in (0, 1]".into()));
        }
        if self.alpha.iter().chain(&self.beta).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::BadSchedule("alpha_i and beta_i must be positive".into()));
        }
        Ok(())
    }

    /// The default schedule for `s = |Delta|`:
    /// `l = ceil(log2(k1 sqrt(s k2)) + 2)`,
    /// `alpha_{1,2} = 1 / (4 sqrt(sqrt(k2) log(s k1^2 k2)))`, `beta_{1,2} = 1 / (7 sqrt(s k2))`,
    /// `alpha_i = 1/2`, `beta_i = 4 log(s k1^2 k2) / (7 sqrt(s))` afterwards,
    /// `q_{1,2} = theta / 9` and the later `q_i` equal, chosen so that
    /// `prod (1 - q_i) = 1 - theta`.
    pub fn standard(kappa1: f64, kappa2: f64, s: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::BadTheta(theta));
        }
        let sf = s as f64;
        let log = (sf * kappa1 * kappa1 * kappa2).ln();
        if !(log > 0.0) {
            return Err(Error::BadSchedule(format!(
                "log(|Delta| k1^2 k2) = {log} is not positive"
            )));
        }
        let l = ((kappa1 * (sf * kappa2).sqrt()).log2() + 2.0).ceil().max(1.0) as usize;
        let a12 = 1.0 / (4.0 * (kappa2.sqrt() * log).sqrt());
        let b12 = 1.0 / (7.0 * (sf * kappa2).sqrt());
        let a_rest = 0.5;
        let b_rest = 4.0 * log / (7.0 * sf.sqrt());
        let q12 = theta / 9.0;
        let head = l.min(2);
        let q_rest = if l > 2 {
            let remaining = (1.0 - theta) / (1.0 - q12).powi(head as i32);
            1.0 - remaining.powf(1.0 / (l - 2) as f64)
        } else {
            0.0
        };
        let mut alpha = vec![a12; head];
        let mut beta = vec![b12; head];
        let mut q = vec![q12; head];
        alpha.resize(l, a_rest);
        beta.resize(l, b_rest);
        q.resize(l, q_rest);
        Self::new(alpha, beta, q)
    }

    /// `Q = sqrt(2) sum_i q_i^{-1/2} prod_{j<i} alpha_j`, the scale of the
    /// bound on `||rho'||`.
    pub fn q_constant(&self) -> f64 {
        let mut prod = 1.0;
        let mut total = 0.0;
        for (a, q) in self.alpha.iter().zip(&self.q) {
            total += prod / q.sqrt();
            prod *= a;
        }
        2f64.sqrt() * total
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionValues {
    pub values: [f64; 6],
    pub thresholds: [f64; 6],
    pub passed: [bool; 6],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Length `n_rows(U)`, zero outside `omega`.
    pub rho_prime: Vec<C64>,
    pub omega: Vec<usize>,
    pub theta: f64,
    pub q_constant: f64,
    pub conditions: ConditionValues,
    pub all_satisfied: bool,
    /// Number of sampled sets per step (accepted one included).
    pub golfing_iterations: Vec<usize>,
}

impl CertificateReport {
    pub fn condition_values(&self) -> [f64; 6] {
        self.conditions.values
    }
}

/// Unimodular random phases on `delta`, zero elsewhere: a stand-in for
/// `sgn(P_Delta D g0)`.
pub fn random_signs(delta: &[usize], len: usize, seed: u64) -> Result<Vec<C64>> {
    let mut rng = rng::seeded(seed);
    let mut s = vec![C64::new(0.0, 0.0); len];
    for &j in delta {
        if j >= len {
            return Err(Error::IndexOutOfRange { index: j, len });
        }
        s[j] = C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
    }
    Ok(s)
}

fn rows_of(m: &CMatrix, idx: &[usize]) -> CMatrix {
    m.select_rows(idx)
}

/// `D^* sgn` restricted to `Delta` (entries outside are ignored; sgn(0) = 0).
fn signed_column(d: &FrameBundle, delta: &[usize], signs: &[C64]) -> CVector {
    let dm = d.op().matrix();
    let mut v = CVector::zeros(dm.ncols());
    for &j in delta {
        let z = signs[j];
        if z != C64::new(0.0, 0.0) {
            let unit = z / z.norm();
            for i in 0..dm.ncols() {
                v[i] += dm[(j, i)].conj() * unit;
            }
        }
    }
    v
}

fn complement_indices(len: usize, delta: &[usize]) -> Vec<usize> {
    (0..len).filter(|j| delta.binary_search(j).is_err()).collect()
}

fn check_dims(u: &FrameBundle, d: &FrameBundle, signs: &[C64]) -> Result<()> {
    if u.n_cols() != d.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "ambient dimension of U and D",
            expected: u.n_cols(),
            found: d.n_cols(),
        });
    }
    if signs.len() != d.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "sign vector length vs rows of D",
            expected: d.n_rows(),
            found: signs.len(),
        });
    }
    Ok(())
}

/// Evaluates conditions (i)-(vi) for `rho = U^* P_Omega rho'` exactly. The
/// returned `golfing_iterations` is empty.
#[allow(clippy::too_many_arguments)]
pub fn certificate_check(
    u: &FrameBundle,
    d: &FrameBundle,
    delta: &[usize],
    omega: &[usize],
    rho_prime: &[C64],
    theta: f64,
    q_constant: f64,
    signs: &[C64],
) -> Result<CertificateReport> {
    check_dims(u, d, signs)?;
    if rho_prime.len() != u.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "rho' length vs rows of U",
            expected: u.n_rows(),
            found: rho_prime.len(),
        });
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::BadTheta(theta));
    }
    if let Some(&bad) = omega.iter().find(|&&i| i >= u.n_rows()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: u.n_rows(),
        });
    }
    let w = make_delta_subspace(d, delta)?;
    let mut omega_sorted = omega.to_vec();
    omega_sorted.sort_unstable();
    omega_sorted.dedup();
    evaluate(u, d, &w, &omega_sorted, rho_prime, theta, q_constant, signs)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    u: &FrameBundle,
    d: &FrameBundle,
    w: &DeltaSubspace,
    omega: &[usize],
    rho_prime: &[C64],
    theta: f64,
    q_constant: f64,
    signs: &[C64],
) -> Result<CertificateReport> {
    let delta = w.delta();
    let k1 = u.kappa();
    let k2 = d.kappa();
    let q = w.basis();
    let u_om = rows_of(u.op().matrix(), omega);
    let ut_om = rows_of(u.dual_op().matrix(), omega);
    let inv_theta = 1.0 / theta;

    // (i) inverse of theta^{-1} P_W U^{-1} P_Omega U P_W on W.
    let m1 = (ut_om.clone() * q).ad_mul(&(&u_om * q)) * C64::from(inv_theta);
    let smin = singular_values(&m1).into_iter().fold(f64::INFINITY, f64::min);
    let v1 = if smin > 0.0 { 1.0 / smin } else { f64::INFINITY };

    // (ii) theta^{-1} P_W U^{-1} P_Omega U^{-*} P_W.
    let utq = &ut_om * q;
    let v2 = spectral_norm(&(utq.ad_mul(&utq) * C64::from(inv_theta)));

    // (iii) max_{j not in Delta} theta^{-1} ||P_Omega U P_W^perp D^{-1} e_j||^2.
    let off = complement_indices(d.n_rows(), delta);
    let dt = d.dual_op().matrix();
    let pwc = w.complement_projector();
    let cols = CMatrix::from_fn(d.n_cols(), off.len(), |i, c| dt[(off[c], i)].conj());
    let img = &u_om * (&pwc * cols);
    let v3 = img
        .column_iter()
        .map(|c| c.norm_squared() * inv_theta)
        .fold(0.0, f64::max);

    // rho = U^* P_Omega rho'.
    let rp_om = CVector::from_iterator(omega.len(), omega.iter().map(|&i| rho_prime[i]));
    let rho = u_om.ad_mul(&rp_om);

    // (iv) ||P_W rho - D^* sgn||.
    let v4 = (w.project(&rho) - signed_column(d, delta, signs)).norm();

    // (v) ||P_Delta^perp D^{-*} P_W^perp rho||_inf.
    let t = dt * (&pwc * &rho);
    let v5 = off.iter().map(|&j| t[j].norm()).fold(0.0, f64::max);

    // (vi) ||rho'|| (entries outside Omega are ignored).
    let v6 = rp_om.norm();

    let thresholds = [
        2.0,
        2.0 * k1,
        2.0 * k1 * k2,
        1.0 / (16.0 * k1 * k2.sqrt()),
        0.25,
        q_constant * (k1 * k2 * delta.len() as f64).sqrt(),
    ];
    let values = [v1, v2, v3, v4, v5, v6];
    let mut passed = [false; 6];
    for i in 0..6 {
        passed[i] = values[i] <= thresholds[i];
    }
    let mut rho_full = vec![C64::new(0.0, 0.0); u.n_rows()];
    for &i in omega {
        rho_full[i] = rho_prime[i];
    }
    Ok(CertificateReport {
        rho_prime: rho_full,
        omega: omega.to_vec(),
        theta,
        q_constant,
        conditions: ConditionValues {
            values,
            thresholds,
            passed,
        },
        all_satisfied: passed.iter().all(|&p| p),
        golfing_iterations: Vec::new(),
    })
}

/// Result of one golfing run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GolfingOutcome {
    pub report: CertificateReport,
    /// `||Z_i||` after each accepted step, starting with `||Z_0||`.
    pub z_norms: Vec<f64>,
}

/// Builds `rho' ` by the golfing iteration: at step `i` draw Bernoulli(`q_i`)
/// row sets until
/// `||Z - q^{-1} P_W E Z|| <= alpha_i ||Z||`,
/// `||q^{-1} P_Delta^perp D^{-*} P_W^perp E Z||_inf <= beta_i ||Z||` and
/// `||q^{-1} P_W U^{-1} P_Omega U^{-*} Z|| <= 2 k1 ||Z||`,
/// then update `Y`, `rho'` and `Z`. `Omega` is the union of every drawn set.
/// The report's conditions come from [`certificate_check`] with `theta` and
/// the schedule's `Q`.
#[allow(clippy::too_many_arguments)]
pub fn golfing_certificate(
    u: &FrameBundle,
    d: &FrameBundle,
    delta: &[usize],
    theta: f64,
    schedule: &GolfingSchedule,
    signs: &[C64],
    seed: u64,
    max_total_resamples: Option<usize>,
) -> Result<GolfingOutcome> {
    check_dims(u, d, signs)?;
    schedule.validate()?;
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::BadTheta(theta));
    }
    let w = make_delta_subspace(d, delta)?;
    let cap = max_total_resamples.unwrap_or(64 * schedule.len());
    let k1 = u.kappa();
    let um = u.op().matrix();
    let utm = u.dual_op().matrix();
    let dt = d.dual_op().matrix();
    let off = complement_indices(d.n_rows(), w.delta());
    let n_rows = u.n_rows();

    let mut rng = rng::seeded(seed);
    let mut z = w.project(&signed_column(d, w.delta(), signs));
    let mut rho_prime = vec![C64::new(0.0, 0.0); n_rows];
    let mut in_omega = vec![false; n_rows];
    let mut counts = Vec::with_capacity(schedule.len());
    let mut z_norms = vec![z.norm()];
    let mut draws = 0usize;

    for i in 0..schedule.len() {
        let qi = schedule.q[i];
        let mut tries = 0;
        loop {
            if draws >= cap {
                return Err(Error::TooManyResamples { cap });
            }
            draws += 1;
            tries += 1;
            let set: Vec<usize> = (0..n_rows).filter(|_| rng.random_bool(qi)).collect();
            for &r in &set {
                in_omega[r] = true;
            }
            let zn = z.norm();
            let ut_s = utm.select_rows(&set);
            let coeff = &ut_s * &z / C64::from(qi);
            let ez = um.select_rows(&set).ad_mul(&coeff);
            let pw_ez = w.project(&ez);
            let c1 = (&z - &pw_ez).norm() <= schedule.alpha[i] * zn;
            if !c1 {
                continue;
            }
            let t = dt * (&ez - &pw_ez);
            let c2 = off.iter().map(|&j| t[j].norm()).fold(0.0, f64::max) <= schedule.beta[i] * zn;
            let c3 = w.project(&ut_s.ad_mul(&coeff)).norm() <= 2.0 * k1 * zn;
            if c2 && c3 {
                for (pos, &r) in set.iter().enumerate() {
                    rho_prime[r] += coeff[pos];
                }
                z -= pw_ez;
                z_norms.push(z.norm());
                break;
            }
        }
        counts.push(tries);
    }
    let omega: Vec<usize> = (0..n_rows).filter(|&r| in_omega[r]).collect();
    let mut report = evaluate(
        u,
        d,
        &w,
        &omega,
        &rho_prime,
        theta,
        schedule.q_constant(),
        signs,
    )?;
    report.golfing_iterations = counts;
    Ok(GolfingOutcome { report, z_norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{make_bundle, DenseOperator};
    use crate::transforms::dft_matrix_1d;

    fn dft_dirac(n: usize) -> (FrameBundle, FrameBundle) {
        (
            make_bundle(dft_matrix_1d(n)).unwrap(),
            make_bundle(DenseOperator::identity(n)).unwrap(),
        )
    }

    #[test]
    fn standard_schedule_shape() {
        let s = GolfingSchedule::standard(1.0, 1.0, 4, 0.5).unwrap();
        assert_eq!(s.len(), 3);
        let log4 = 4f64.ln();
        assert!((s.alpha[0] - 1.0 / (4.0 * log4.sqrt())).abs() < 1e-15);
        assert!((s.beta[0] - 1.0 / 14.0).abs() < 1e-15);
        assert_eq!(s.alpha[2], 0.5);
        let prod: f64 = s.q.iter().map(|q| 1.0 - q).product();
        assert!((prod - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_log_is_bad_schedule() {
        assert!(matches!(
            GolfingSchedule::standard(1.0, 1.0, 1, 0.5),
            Err(Error::BadSchedule(_))
        ));
        assert!(matches!(
            GolfingSchedule::new(vec![0.5], vec![0.5, 0.5], vec![0.5]),
            Err(Error::BadSchedule(_))
        ));
    }

    #[test]
    fn full_sampling_collapses() {
        let (u, d) = dft_dirac(16);
        let delta = [1, 5, 9];
        let signs = random_signs(&delta, 16, 3).unwrap();
        let sched = GolfingSchedule::new(vec![0.5], vec![0.5], vec![1.0]).unwrap();
        let out = golfing_certificate(&u, &d, &delta, 1.0, &sched, &signs, 0, None).unwrap();
        assert!(out.z_norms[1] < 1e-12);
        assert_eq!(out.report.golfing_iterations, vec![1]);
        let c = &out.report.conditions;
        assert!((c.values[0] - 1.0).abs() < 1e-12);
        assert!(out.report.all_satisfied, "{:?}", c);
    }

    #[test]
    fn zeroed_rho_fails_condition_iv() {
        let (u, d) = dft_dirac(16);
        let delta = [0, 3, 7, 8];
        let signs = random_signs(&delta, 16, 1).unwrap();
        let omega: Vec<usize> = (0..16).collect();
        let r = certificate_check(&u, &d, &delta, &omega, &[C64::new(0.0, 0.0); 16], 1.0, 1.0, &signs)
            .unwrap();
        assert!(!r.conditions.passed[3]);
        assert!((r.conditions.values[3] - 2.0).abs() < 1e-12);
        assert!(r.conditions.passed[0] && r.conditions.passed[4]);
    }

    #[test]
    fn tiny_theta_exhausts_cap() {
        let (u, d) = dft_dirac(32);
        let delta = [2, 11, 17, 30];
        let signs = random_signs(&delta, 32, 2).unwrap();
        let theta = 1.0 / 32.0;
        let sched = GolfingSchedule::standard(1.0, 1.0, 4, theta).unwrap();
        let r = golfing_certificate(&u, &d, &delta, theta, &sched, &signs, 9, None);
        assert!(matches!(r, Err(Error::TooManyResamples { cap: 192 })));
    }

    #[test]
    fn checker_is_pure() {
        let (u, d) = dft_dirac(16);
        let delta = [1, 2];
        let signs = random_signs(&delta, 16, 5).unwrap();
        let omega = vec![0, 3, 4, 9];
        let rp: Vec<C64> = (0..16).map(|i| C64::new(i as f64 * 0.1, -0.2)).collect();
        let a = certificate_check(&u, &d, &delta, &omega, &rp, 0.3, 2.0, &signs).unwrap();
        let b = certificate_check(&u, &d, &delta, &omega, &rp, 0.3, 2.0, &signs).unwrap();
        for i in 0..6 {
            assert_eq!(a.conditions.values[i].to_bits(), b.conditions.values[i].to_bits());
        }
    }
}
