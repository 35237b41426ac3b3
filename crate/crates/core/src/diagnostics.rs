//! Quantities appearing in the recovery hypotheses: mutual coherence and
//! coherence weights, localization and B-factors, best s-term error,
//! balancing residuals and the truncation index `M~(alpha)`.
//!
//! Index sets are 0-based in the API (`delta = [0, 1, 2]` is the first three
//! sparsity coefficients); counts such as `N`, `M`, `s` are sizes.

use std::ops::RangeInclusive;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::{spectral_norm, CMatrix, CVector, FrameBundle, C64, RANK_TOLERANCE};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub mu: f64,
    /// `w_l`: the maximum over `j` and the four families, for every row `l`.
    pub per_pair_max: Vec<f64>,
    /// Suprema of `|<phi_j, psi_l>|`, `|<phi~_j, psi_l>|`, `|<phi_j, psi~_l>|`,
    /// `|<phi~_j, psi~_l>|` in that order.
    pub family_breakdown: [f64; 4],
}

fn check_ambient(u: &FrameBundle, d: &FrameBundle) -> Result<()> {
    if u.n_cols() != d.n_cols() {
        return Err(Error::DimensionMismatch {
            context: "ambient dimension of U and D",
            expected: u.n_cols(),
            found: d.n_cols(),
        });
    }
    Ok(())
}

/// The four Gram matrices `X Y^*` with `X in {U, U~}`, `Y in {D, D~}`, whose
/// `(l, j)` entries are the inner products between frame vectors.
fn family_grams(u: &FrameBundle, d: &FrameBundle) -> [CMatrix; 4] {
    let (um, ut) = (u.op().matrix(), u.dual_op().matrix());
    let (dm, dt) = (d.op().matrix(), d.dual_op().matrix());
    [
        um * dm.adjoint(),
        um * dt.adjoint(),
        ut * dm.adjoint(),
        ut * dt.adjoint(),
    ]
}

pub fn mutual_coherence(u: &FrameBundle, d: &FrameBundle) -> Result<CoherenceReport> {
    check_ambient(u, d)?;
    let grams = family_grams(u, d);
    let mut per_row = vec![0.0_f64; u.n_rows()];
    let mut breakdown = [0.0_f64; 4];
    for (f, g) in grams.iter().enumerate() {
        for l in 0..g.nrows() {
            let row_max = g.row(l).iter().map(|z| z.norm()).fold(0.0, f64::max);
            per_row[l] = per_row[l].max(row_max);
            breakdown[f] = breakdown[f].max(row_max);
        }
    }
    let mu = per_row.iter().copied().fold(0.0, f64::max);
    Ok(CoherenceReport {
        mu,
        per_pair_max: per_row,
        family_breakdown: breakdown,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceWeights {
    pub weights: Vec<f64>,
    pub norm: f64,
    /// `max(||w||, 1)`; the weighted results assume `||w|| >= 1`.
    pub normalization: f64,
}

/// Tightest admissible weights `w_l` for the first `n` rows of `U`.
pub fn coherence_weights(u: &FrameBundle, d: &FrameBundle, n: usize) -> Result<CoherenceWeights> {
    if n == 0 || n > u.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "coherence_weights N",
            expected: u.n_rows(),
            found: n,
        });
    }
    let report = mutual_coherence(u, d)?;
    let weights = report.per_pair_max[..n].to_vec();
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    Ok(CoherenceWeights {
        weights,
        norm,
        normalization: norm.max(1.0),
    })
}

/// Least-squares fit of `log w_l = log c + slope * log l` (1-based `l`),
/// together with the envelope constant `max_l sqrt(l) w_l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub envelope_c1: f64,
}

pub fn fit_decay(w: &[f64]) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = w
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| (((i + 1) as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let envelope_c1 = w
        .iter()
        .enumerate()
        .map(|(i, v)| ((i + 1) as f64).sqrt() * v)
        .fold(0.0, f64::max);
    Ok(DecayFit {
        slope,
        intercept,
        rms_residual: rms,
        envelope_c1,
    })
}

/// `sigma_{s,M}(x)`: l1 mass left after keeping the `s` largest entries among
/// the first `m` (ties keep the lower index).
pub fn best_s_term_error(x: &[C64], s: usize, m: usize) -> Result<f64> {
    if s == 0 || s > m || m > x.len() {
        return Err(Error::range(format!(
            "best_s_term_error needs 1 <= s <= M <= len, got s={s}, M={m}, len={}",
            x.len()
        )));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| x[b].norm().total_cmp(&x[a].norm()).then(a.cmp(&b)));
    let mut keep = vec![false; x.len()];
    for &i in &order[..s] {
        keep[i] = true;
    }
    Ok(x.iter()
        .zip(&keep)
        .filter(|(_, &k)| !k)
        .map(|(v, _)| v.norm())
        .sum())
}

/// `W = R(D^* P_Delta) + R(D^{-1} P_Delta)` with an orthonormal basis.
#[derive(Clone, Debug)]
pub struct DeltaSubspace {
    delta: Vec<usize>,
    basis: CMatrix,
}

impl DeltaSubspace {
    pub fn delta(&self) -> &[usize] {
        &self.delta
    }

    /// Orthonormal columns spanning `W` (`n_cols x dim`).
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `P_W` materialized.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    /// `P_W^perp` materialized.
    pub fn complement_projector(&self) -> CMatrix {
        let n = self.basis.nrows();
        CMatrix::identity(n, n) - self.projector()
    }

    pub fn project(&self, v: &CVector) -> CVector {
        &self.basis * self.basis.ad_mul(v)
    }
}

/// Orthonormal basis of the column span via a rank-revealing SVD. Returns an
/// `n x 0` matrix when the columns span `{0}`.
pub fn orthonormal_basis(cols: &CMatrix) -> CMatrix {
    let n = cols.nrows();
    if cols.ncols() == 0 {
        return CMatrix::zeros(n, 0);
    }
    let svd = cols.clone().svd(true, false);
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    // A fully zero generator set has smax == 0; anything below machine
    // precision relative to 1 is treated the same way.
    if smax <= 1e-14 {
        return CMatrix::zeros(n, 0);
    }
    let u = svd.u.expect("left singular vectors requested");
    let keep: Vec<usize> = (0..sv.len())
        .filter(|&k| sv[k] > RANK_TOLERANCE * smax)
        .collect();
    CMatrix::from_fn(n, keep.len(), |i, c| u[(i, keep[c])])
}

/// Columns `D^* e_j = conj(row_j)` for `j` in `idx`.
fn conj_rows(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(m.ncols(), idx.len(), |i, c| m[(idx[c], i)].conj())
}

fn check_indices(idx: &[usize], len: usize) -> Result<()> {
    if let Some(&bad) = idx.iter().find(|&&i| i >= len) {
        return Err(Error::IndexOutOfRange { index: bad, len });
    }
    Ok(())
}

fn span_of(d: &FrameBundle, idx: &[usize]) -> CMatrix {
    let a = conj_rows(d.op().matrix(), idx);
    let b = conj_rows(d.dual_op().matrix(), idx);
    let mut gen = CMatrix::zeros(d.n_cols(), 2 * idx.len());
    gen.columns_mut(0, idx.len()).copy_from(&a);
    gen.columns_mut(idx.len(), idx.len()).copy_from(&b);
    orthonormal_basis(&gen)
}

pub fn make_delta_subspace(d: &FrameBundle, delta: &[usize]) -> Result<DeltaSubspace> {
    if delta.is_empty() {
        return Err(Error::range("delta must be nonempty"));
    }
    check_indices(delta, d.n_rows())?;
    let mut sorted = delta.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let basis = span_of(d, &sorted);
    if basis.ncols() == 0 {
        return Err(Error::ZeroSubspace);
    }
    Ok(DeltaSubspace {
        delta: sorted,
        basis,
    })
}

/// How maxima over index sets `Delta` are searched.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSearch {
    /// Enumerate exhaustively when the number of candidate sets is at most this.
    pub cap: usize,
    /// Random sets drawn before greedy ascent when above the cap.
    pub samples: usize,
    pub seed: u64,
}

impl Default for DeltaSearch {
    fn default() -> Self {
        DeltaSearch {
            cap: 5000,
            samples: 256,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub value: f64,
    pub argmax: Vec<usize>,
    pub exhaustive: bool,
    pub evaluated: usize,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for t in i..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

/// Maximize `f` over subsets of `{0..m}` whose size lies in `sizes`.
/// Ties keep the first set in enumeration order.
pub fn search_deltas<F>(
    m: usize,
    sizes: RangeInclusive<usize>,
    policy: &DeltaSearch,
    f: F,
) -> Result<SearchOutcome>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    let (lo, hi) = (*sizes.start(), (*sizes.end()).min(m));
    if lo == 0 || lo > hi {
        return Err(Error::range(format!(
            "no admissible subset sizes in {lo}..={} for M={m}",
            sizes.end()
        )));
    }
    let total: u128 = (lo..=hi).map(|k| binomial(m, k)).sum();
    if total <= policy.cap as u128 {
        let sets: Vec<Vec<usize>> = (lo..=hi).flat_map(|k| combinations(m, k)).collect();
        let values: Vec<f64> = sets
            .par_iter()
            .map(|s| f(s))
            .collect::<Result<Vec<_>>>()?;
        let (best, value) = argmax(&values);
        return Ok(SearchOutcome {
            value,
            argmax: sets[best].clone(),
            exhaustive: true,
            evaluated: sets.len(),
        });
    }

    let mut rng = rng::seeded(policy.seed);
    let sets: Vec<Vec<usize>> = (0..policy.samples.max(1))
        .map(|_| {
            let k = rng.random_range(lo..=hi);
            let mut s = sample(&mut rng, m, k).into_vec();
            s.sort_unstable();
            s
        })
        .collect();
    let values: Vec<f64> = sets
        .par_iter()
        .map(|s| f(s))
        .collect::<Result<Vec<_>>>()?;
    let (best, mut value) = argmax(&values);
    let mut current = sets[best].clone();
    let mut evaluated = sets.len();

    // Greedy ascent: best single swap or insertion, until no improvement.
    for _ in 0..64 {
        let mut moves: Vec<Vec<usize>> = Vec::new();
        for pos in 0..current.len() {
            for c in (0..m).filter(|c| !current.contains(c)) {
                let mut s = current.clone();
                s[pos] = c;
                s.sort_unstable();
                moves.push(s);
            }
        }
        if current.len() < hi {
            for c in (0..m).filter(|c| !current.contains(c)) {
                let mut s = current.clone();
                s.push(c);
                s.sort_unstable();
                moves.push(s);
            }
        }
        if moves.is_empty() {
            break;
        }
        let vals: Vec<f64> = moves
            .par_iter()
            .map(|s| f(s))
            .collect::<Result<Vec<_>>>()?;
        evaluated += moves.len();
        let (i, v) = argmax(&vals);
        if v <= value {
            break;
        }
        value = v;
        current = moves[i].clone();
    }
    Ok(SearchOutcome {
        value,
        argmax: current,
        exhaustive: false,
        evaluated,
    })
}

fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

/// A maximum over index sets, flagged when it is only a lower bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedEstimate {
    pub value: f64,
    pub argmax: Vec<usize>,
    pub is_lower_bound: bool,
}

fn check_s_m(s: usize, m: usize, d: &FrameBundle, min_s: usize) -> Result<()> {
    if s < min_s || s > m || m > d.n_rows() {
        return Err(Error::range(format!(
            "need {min_s} <= s <= M <= {}, got s={s}, M={m}",
            d.n_rows()
        )));
    }
    Ok(())
}

/// Maximum absolute row sum, i.e. the `l_inf -> l_inf` operator norm.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `B_Delta = max(||D^{-*} P_W^perp D^*||_{inf -> inf}, 1)`.
pub fn b_delta(d: &FrameBundle, delta: &[usize]) -> Result<f64> {
    check_indices(delta, d.n_rows())?;
    let q = span_of(d, delta);
    let dt = d.dual_op().matrix();
    let dm_adj = d.op().matrix().adjoint();
    // P_W^perp D^* = D^* - Q (Q^* D^*)
    let proj = &dm_adj - &q * (q.adjoint() * &dm_adj);
    Ok(inf_norm(&(dt * proj)).max(1.0))
}

pub fn b_factor(d: &FrameBundle, s: usize, m: usize, policy: &DeltaSearch) -> Result<BoundedEstimate> {
    check_s_m(s, m, d, 3)?;
    let out = search_deltas(m, 3..=s, policy, |delta| b_delta(d, delta))?;
    Ok(BoundedEstimate {
        value: out.value.max(1.0),
        argmax: out.argmax,
        is_lower_bound: !out.exhaustive,
    })
}

/// Multi-start ascent for `sup ||T z||_1` over unit `z` in the column span of
/// `Q`. Each step jumps to the normalized subgradient; since the objective is
/// convex and 1-homogeneous this never decreases it.
fn l1_sphere_max(t: &CMatrix, q: &CMatrix, starts: usize, rng: &mut rng::Rng) -> f64 {
    let r = q.ncols();
    if r == 0 {
        return 0.0;
    }
    let tq = t * q;
    let eval = |c: &CVector| (&tq * c).iter().map(|z| z.norm()).sum::<f64>();
    let mut best = 0.0_f64;
    for _ in 0..starts.max(1) {
        let mut c = CVector::from_fn(r, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        c /= C64::from(c.norm());
        let mut val = eval(&c);
        for _ in 0..200 {
            let y = &tq * &c;
            let sg = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(0.0, 0.0) });
            let g = tq.ad_mul(&sg);
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            let next = g / C64::from(gn);
            let nv = eval(&next);
            let improved = nv > val * (1.0 + 1e-13);
            c = next;
            val = val.max(nv);
            if !improved {
                break;
            }
        }
        best = best.max(val);
    }
    best
}

/// `eta_Delta` estimated with `starts` random starts per sub-problem.
pub fn eta_delta(d: &FrameBundle, delta: &[usize], starts: usize, seed: u64) -> Result<f64> {
    check_indices(delta, d.n_rows())?;
    let mut rng = rng::seeded(seed);
    let scale = (delta.len() as f64).sqrt();
    let mut best = 1.0_f64;
    for di in [d.op().matrix(), d.dual_op().matrix()] {
        let q = orthonormal_basis(&conj_rows(di, delta));
        best = best.max(l1_sphere_max(di, &q, starts, &mut rng) / scale);
    }
    Ok(best)
}

/// `eta_{s,M}`. Orthonormal `D` gives exactly 1; otherwise the result is a
/// lower bound (the inner problem is nonconvex).
pub fn localization_factor(
    d: &FrameBundle,
    s: usize,
    m: usize,
    effort: usize,
    policy: &DeltaSearch,
) -> Result<BoundedEstimate> {
    check_s_m(s, m, d, 3)?;
    if d.is_unitary(1e-10) {
        return Ok(BoundedEstimate {
            value: 1.0,
            argmax: (0..3).collect(),
            is_lower_bound: false,
        });
    }
    let out = search_deltas(m, 3..=s, policy, |delta| {
        let seed = rng::derive_seed(policy.seed, &delta.iter().map(|&i| i as u64).collect::<Vec<_>>());
        eta_delta(d, delta, effort, seed)
    })?;
    Ok(BoundedEstimate {
        value: out.value.max(1.0),
        argmax: out.argmax,
        is_lower_bound: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancingResiduals {
    pub r1: f64,
    pub r2: f64,
    pub t1: f64,
    pub t2: f64,
    pub satisfied: bool,
    pub is_lower_bound: bool,
}

/// `(U_{a..b})^* U~_{a..b}` for a row range.
fn partial_frame_operator(u: &FrameBundle, rows: std::ops::Range<usize>) -> CMatrix {
    let n = u.n_cols();
    if rows.is_empty() {
        return CMatrix::zeros(n, n);
    }
    let a = u.op().matrix().rows(rows.start, rows.len());
    let b = u.dual_op().matrix().rows(rows.start, rows.len());
    a.ad_mul(&b)
}

pub fn balancing_residuals(
    u: &FrameBundle,
    d: &FrameBundle,
    n: usize,
    m: usize,
    s: usize,
    policy: &DeltaSearch,
) -> Result<BalancingResiduals> {
    check_ambient(u, d)?;
    check_s_m(s, m, d, 1)?;
    if n == 0 || n > u.n_rows() {
        return Err(Error::range(format!("N must lie in 1..={}", u.n_rows())));
    }
    let head = partial_frame_operator(u, 0..n);
    let tail = partial_frame_operator(u, n..u.n_rows());
    let dt = d.dual_op().matrix();

    let residuals = |delta: &[usize]| -> (f64, f64) {
        let q = span_of(d, delta);
        if q.ncols() == 0 {
            return (0.0, 0.0);
        }
        let r1 = spectral_norm(&(q.adjoint() * &tail * &q));
        // P_Delta^perp D^{-*} P_W^perp (U^* P_N U^{-*}) Q
        let hq = &head * &q;
        let perp = &hq - &q * (q.adjoint() * &hq);
        let full = dt * perp;
        let mut r2 = 0.0_f64;
        for j in (0..full.nrows()).filter(|j| !delta.contains(j)) {
            r2 = r2.max(full.row(j).norm());
        }
        (r1, r2)
    };
    let o1 = search_deltas(m, s..=s, policy, |delta| Ok(residuals(delta).0))?;
    let o2 = search_deltas(m, s..=s, policy, |delta| Ok(residuals(delta).1))?;

    let (k1, k2) = (u.kappa(), d.kappa());
    let sf = s as f64;
    let t1 = 1.0 / (8.0 * (k2.sqrt() * (sf * k1 * k1 * k2).ln()).sqrt());
    let t2 = 1.0 / (14.0 * (sf * k2).sqrt());
    Ok(BalancingResiduals {
        r1: o1.value,
        r2: o2.value,
        t1,
        t2,
        satisfied: o1.value <= t1 && o2.value <= t2,
        is_lower_bound: !(o1.exhaustive && o2.exhaustive),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TildeM {
    /// `M~(alpha)` as a count (1-based index).
    pub value: usize,
    /// False when the condition fails at the truncation boundary `J_max`.
    pub settled: bool,
}

/// Smallest `M~ >= M` such that
/// `sqrt(k1) ||P_N U D^{-1} e_j|| + k1 ||P_W~ D^{-1} e_j|| < alpha` for all
/// `M~ < j <= J_max` (1-based `j`), with `W~` built from the first `M` indices.
pub fn tilde_m(
    u: &FrameBundle,
    d: &FrameBundle,
    alpha: f64,
    n: usize,
    m: usize,
    j_max: usize,
) -> Result<TildeM> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadAlpha(alpha));
    }
    check_ambient(u, d)?;
    if m == 0 || j_max < m || j_max > d.n_rows() || n == 0 || n > u.n_rows() {
        return Err(Error::range(format!(
            "need 1 <= M <= J_max <= {} and 1 <= N <= {}",
            d.n_rows(),
            u.n_rows()
        )));
    }
    let k1 = u.kappa();
    let first_m: Vec<usize> = (0..m).collect();
    let q = span_of(d, &first_m);
    let un = u.op().matrix().rows(0, n);
    let dual_cols = conj_rows(d.dual_op().matrix(), &(m..j_max).collect::<Vec<_>>());
    let meas = un * &dual_cols;
    let proj = q.adjoint() * &dual_cols;
    let mut value = m;
    for c in (0..dual_cols.ncols()).rev() {
        let lhs = k1.sqrt() * meas.column(c).norm() + k1 * proj.column(c).norm();
        if lhs >= alpha {
            value = m + c + 1;
            break;
        }
    }
    Ok(TildeM {
        value,
        settled: value < j_max || j_max == m,
    })
}

/// Inputs of the measurement-count bound. Universal constants are not fixed
/// by the theory; `c` defaults to 1 as a placeholder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    pub kappa1: f64,
    pub kappa2: f64,
    pub b: f64,
    pub eta: f64,
    pub omega: f64,
    pub n: usize,
    pub s: usize,
    pub m_tilde: usize,
    #[serde(default = "one")]
    pub c: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form", content = "value")]
pub enum Incoherence {
    /// Uniform sampling with mutual coherence `mu`.
    Mu(f64),
    /// Variable-density sampling with weight norm `||w||`.
    WeightNorm(f64),
}

/// `C k1 k2 B^2 eta^2 omega^2 X s log(k1 k2 M~)` where `X = mu^2 N` for the
/// uniform form and `X = ||w||^2` for the weighted form.
pub fn measurement_budget(inputs: &BudgetInputs, incoherence: Incoherence) -> f64 {
    let x = match incoherence {
        Incoherence::Mu(mu) => mu * mu * inputs.n as f64,
        Incoherence::WeightNorm(w) => w * w,
    };
    inputs.c
        * inputs.kappa1
        * inputs.kappa2
        * inputs.b.powi(2)
        * inputs.eta.powi(2)
        * inputs.omega.powi(2)
        * x
        * inputs.s as f64
        * (inputs.kappa1 * inputs.kappa2 * inputs.m_tilde as f64).ln()
}
