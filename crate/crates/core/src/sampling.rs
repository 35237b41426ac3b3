//! Sampling schemes: uniform subsets, Bernoulli masks, variable-density
//! draws from coherence weights, virtual frames, the log sampling scheme,
//! the weighted measurement norm, and the with/without replacement ratio.
//!
//! Indices are 0-based throughout.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::Rng as _;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linops::{CMatrix, CVector, DenseOperator, FrameBundle, C64};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Uniform,
    Bernoulli,
    VariableDensity,
    LogScheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPattern {
    /// Size of the index pool `{0, .., n-1}`.
    pub n: usize,
    /// Sampled rows in draw order (sorted for set-valued schemes).
    pub indices: Vec<usize>,
    pub scheme: Scheme,
    /// Per-pool-index integers `ceil(N w_l^2)` for variable density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition_counts: Option<Vec<usize>>,
    /// Per-pool-index probabilities for variable density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SamplingPattern {
    /// A deterministic pattern over explicit indices.
    pub fn from_indices(n: usize, indices: Vec<usize>, scheme: Scheme) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        Ok(SamplingPattern {
            n,
            indices,
            scheme,
            repetition_counts: None,
            probabilities: None,
            seed: None,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Distinct sampled indices in increasing order.
    pub fn distinct(&self) -> Vec<usize> {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// `m` distinct indices chosen uniformly by a partial Fisher-Yates shuffle.
pub fn uniform_subset(n: usize, m: usize, seed: u64) -> Result<SamplingPattern> {
    if m == 0 || m > n {
        return Err(Error::range(format!("uniform_subset needs 1 <= m <= N, got m={m}, N={n}")));
    }
    let mut rng = rng::seeded(seed);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut indices = pool[..m].to_vec();
    indices.sort_unstable();
    Ok(SamplingPattern {
        n,
        indices,
        scheme: Scheme::Uniform,
        repetition_counts: None,
        probabilities: None,
        seed: Some(seed),
    })
}

pub fn bernoulli_mask(n: usize, theta: f64, seed: u64) -> Result<SamplingPattern> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::BadTheta(theta));
    }
    let mut rng = rng::seeded(seed);
    let indices = (0..n).filter(|_| rng.random_bool(theta)).collect();
    Ok(SamplingPattern {
        n,
        indices,
        scheme: Scheme::Bernoulli,
        repetition_counts: None,
        probabilities: None,
        seed: Some(seed),
    })
}

/// `ceil(N w^2)`. Products that land within a relative `1e-12` above an
/// integer are treated as that integer, so that e.g. `w = 1/sqrt(N)` gives 1
/// despite rounding in `w`.
pub fn weight_count(n: usize, w: f64) -> usize {
    let x = n as f64 * w * w;
    if x <= 0.0 {
        return 0;
    }
    (x * (1.0 - 1e-12)).ceil() as usize
}

fn weight_counts(w: &[f64]) -> Result<Vec<usize>> {
    if w.is_empty() || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::ZeroWeights);
    }
    let counts: Vec<usize> = w.iter().map(|&v| weight_count(w.len(), v)).collect();
    if counts.iter().all(|&c| c == 0) {
        return Err(Error::ZeroWeights);
    }
    Ok(counts)
}

/// `m` i.i.d. draws with `nu_l = ceil(N w_l^2) / sum_l ceil(N w_l^2)`,
/// `N = w.len()`, by exact integer inverse-CDF sampling. Repetitions are kept
/// in draw order.
pub fn variable_density(w: &[f64], m: usize, seed: u64) -> Result<SamplingPattern> {
    if m == 0 {
        return Err(Error::range("variable_density needs m >= 1"));
    }
    let counts = weight_counts(w)?;
    let mut cum = Vec::with_capacity(counts.len());
    let mut total: u64 = 0;
    for &c in &counts {
        total += c as u64;
        cum.push(total);
    }
    let mut rng = rng::seeded(seed);
    let indices = (0..m)
        .map(|_| {
            let u = rng.random_range(0..total);
            cum.partition_point(|&c| c <= u)
        })
        .collect();
    let probabilities = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok(SamplingPattern {
        n: w.len(),
        indices,
        scheme: Scheme::VariableDensity,
        repetition_counts: Some(counts),
        probabilities: Some(probabilities),
        seed: Some(seed),
    })
}

/// `sqrt(sum_i |eta_i|^2 / ceil(N w_{l_i}^2))` with `N = w.len()`.
pub fn weighted_norm(residual: &[C64], pattern: &SamplingPattern, w: &[f64]) -> Result<f64> {
    if residual.len() != pattern.len() {
        return Err(Error::DimensionMismatch {
            context: "weighted_norm residual",
            expected: pattern.len(),
            found: residual.len(),
        });
    }
    let scales = measurement_scales(pattern, w)?;
    Ok(residual
        .iter()
        .zip(&scales)
        .map(|(r, s)| (r.norm() * s).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// Per-measurement factors `1 / sqrt(ceil(N w_{l_i}^2))` that turn the
/// weighted norm into a Euclidean one.
pub fn measurement_scales(pattern: &SamplingPattern, w: &[f64]) -> Result<Vec<f64>> {
    pattern
        .indices
        .iter()
        .map(|&l| {
            let c = w
                .get(l)
                .map(|&v| weight_count(w.len(), v))
                .ok_or(Error::IndexOutOfRange { index: l, len: w.len() })?;
            if c == 0 {
                return Err(Error::ZeroDivisor { index: l });
            }
            Ok(1.0 / (c as f64).sqrt())
        })
        .collect()
}

/// A frame whose rows repeat `psi_l / sqrt(r_l)` exactly `r_l` times, and the
/// map from virtual rows back to original rows.
#[derive(Clone, Debug)]
pub struct VirtualFrame {
    pub bundle: FrameBundle,
    pub index_map: Vec<usize>,
    pub repetitions: Vec<usize>,
}

/// `r_l = upsilon * ceil(n w_l^2)` for every row `l` of `U` (`w` must cover
/// all rows; `n` is the truncation parameter `N`). Rows with `r_l = 0` are
/// dropped. The dual is the virtual frame of the dual, and the frame bounds
/// are unchanged.
pub fn virtual_frame(u: &FrameBundle, w: &[f64], n: usize, upsilon: usize) -> Result<VirtualFrame> {
    if w.len() != u.n_rows() {
        return Err(Error::DimensionMismatch {
            context: "virtual_frame weights",
            expected: u.n_rows(),
            found: w.len(),
        });
    }
    if upsilon == 0 {
        return Err(Error::range("upsilon must be at least 1"));
    }
    if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::ZeroWeights);
    }
    let reps: Vec<usize> = w.iter().map(|&v| upsilon * weight_count(n, v)).collect();
    if reps.iter().all(|&r| r == 0) {
        return Err(Error::ZeroWeights);
    }
    let index_map: Vec<usize> = reps
        .iter()
        .enumerate()
        .flat_map(|(l, &r)| std::iter::repeat_n(l, r))
        .collect();
    let expand = |m: &CMatrix| {
        CMatrix::from_fn(index_map.len(), m.ncols(), |i, j| {
            let l = index_map[i];
            m[(l, j)] / (reps[l] as f64).sqrt()
        })
    };
    let op = DenseOperator::new(expand(u.op().matrix()))?;
    let dual = DenseOperator::new(expand(u.dual_op().matrix()))?;
    let bundle = if reps.iter().all(|&r| r > 0) {
        FrameBundle::from_parts(op, dual, u.lower_bound(), u.upper_bound())
    } else {
        // Dropping rows changes the frame: recompute everything.
        crate::linops::make_bundle(op)?
    };
    Ok(VirtualFrame {
        bundle,
        index_map,
        repetitions: reps,
    })
}

/// Log sampling scheme `k_l = ceil(exp(l / (C1^2 N)))`, `l = 1..count`, with
/// duplicates collapsed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogScheme {
    pub freqs: Vec<i64>,
    pub multiplicities: Vec<usize>,
}

/// The raw sequence `ceil(exp(l / (C1^2 N)))` for `l = 1..=count`.
pub fn log_scheme_values(n: usize, c1: f64, count: usize) -> Result<Vec<i64>> {
    if !(c1 > 0.0) || n == 0 {
        return Err(Error::range("log_scheme needs C1 > 0 and N >= 1"));
    }
    let scale = c1 * c1 * n as f64;
    Ok((1..=count)
        .map(|l| (l as f64 / scale).exp().ceil() as i64)
        .collect())
}

pub fn log_scheme(n: usize, c1: f64, count: usize, mirror: bool) -> Result<LogScheme> {
    let raw = log_scheme_values(n, c1, count)?;
    let mut freqs: Vec<i64> = Vec::new();
    let mut mult: Vec<usize> = Vec::new();
    for k in raw {
        if freqs.last() == Some(&k) {
            *mult.last_mut().unwrap() += 1;
        } else {
            freqs.push(k);
            mult.push(1);
        }
    }
    if mirror {
        let neg: Vec<(i64, usize)> = freqs.iter().zip(&mult).rev().map(|(&k, &c)| (-k, c)).collect();
        let (nf, nm): (Vec<i64>, Vec<usize>) = neg.into_iter().unzip();
        freqs = nf.into_iter().chain(freqs).collect();
        mult = nm.into_iter().chain(mult).collect();
    }
    Ok(LogScheme {
        freqs,
        multiplicities: mult,
    })
}

/// Frequencies of the virtual frame in which frequency `k >= 1` is repeated
/// `ceil(C1^2 N / k)` times: entry `i` (0-based) is the frequency of virtual
/// row `i + 1`. Only the first `count` rows are produced.
pub fn virtual_frame_frequencies(n: usize, c1: f64, count: usize) -> Vec<i64> {
    let scale = c1 * c1 * n as f64;
    let mut out = Vec::with_capacity(count);
    let mut k: i64 = 1;
    while out.len() < count {
        let reps = (scale / k as f64).ceil().max(1.0) as usize;
        for _ in 0..reps.min(count - out.len()) {
            out.push(k);
        }
        k += 1;
    }
    out
}

fn check_composition(s: &[u64], m: u64, upsilon: u64, k: &[u64]) -> Result<()> {
    if s.is_empty() || s.len() != k.len() {
        return Err(Error::BadComposition("s and k must have the same nonzero length".into()));
    }
    if upsilon == 0 || s.iter().all(|&v| v == 0) {
        return Err(Error::BadComposition("population must be nonempty".into()));
    }
    if k.iter().sum::<u64>() != m {
        return Err(Error::BadComposition(format!("composition does not sum to m = {m}")));
    }
    if let Some(l) = (0..s.len()).find(|&l| k[l] > upsilon * s[l]) {
        return Err(Error::BadComposition(format!(
            "k[{l}] = {} exceeds upsilon * s[{l}] = {}",
            k[l],
            upsilon * s[l]
        )));
    }
    Ok(())
}

/// Exact ratio of the multivariate hypergeometric pmf (drawing `m` items
/// without replacement from `upsilon * s_l` copies of each `l`) to the
/// multinomial pmf with `p_l = s_l / s`, as a rational number. The factorials
/// cancel into
/// `prod_l prod_{t<k_l} (1 - t/(upsilon s_l)) / prod_{t<m} (1 - t/(upsilon s))`.
pub fn replacement_ratio_exact(s: &[u64], m: u64, upsilon: u64, k: &[u64]) -> Result<BigRational> {
    check_composition(s, m, upsilon, k)?;
    let total: u64 = s.iter().sum::<u64>() * upsilon;
    let term = |t: u64, pop: u64| {
        BigRational::new(BigInt::from(pop - t), BigInt::from(pop))
    };
    let mut num = BigRational::one();
    for (l, &kl) in k.iter().enumerate() {
        for t in 1..kl {
            num *= term(t, upsilon * s[l]);
        }
    }
    let mut den = BigRational::one();
    for t in 1..m {
        den *= term(t, total);
    }
    Ok(num / den)
}

fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// The same ratio evaluated from the two pmfs directly: exact integer
/// arithmetic while all factorial arguments are at most 170, log-gamma above.
pub fn replacement_ratio(s: &[u64], m: u64, upsilon: u64, k: &[u64]) -> Result<f64> {
    check_composition(s, m, upsilon, k)?;
    let ssum: u64 = s.iter().sum();
    let total = ssum * upsilon;
    if total <= 170 {
        let fact = |n: u64| -> BigInt { (1..=n).map(BigInt::from).product() };
        let binom = |n: u64, r: u64| fact(n) / (fact(r) * fact(n - r));
        let hyper_num: BigInt = (0..s.len()).map(|l| binom(upsilon * s[l], k[l])).product();
        let hyper = BigRational::new(hyper_num, binom(total, m));
        let mut multi = BigRational::from_integer(fact(m));
        for l in 0..s.len() {
            multi *= BigRational::new(BigInt::from(s[l]).pow(k[l] as u32), fact(k[l]));
        }
        multi /= BigRational::from_integer(BigInt::from(ssum).pow(m as u32));
        return (hyper / multi)
            .to_f64()
            .ok_or_else(|| Error::BadComposition("ratio not representable".into()));
    }
    let mut ln_hyper = -ln_binomial(total, m);
    let mut ln_multi = ln_factorial(m) - m as f64 * (ssum as f64).ln();
    for l in 0..s.len() {
        ln_hyper += ln_binomial(upsilon * s[l], k[l]);
        ln_multi += k[l] as f64 * (s[l] as f64).ln() - ln_factorial(k[l]);
    }
    Ok((ln_hyper - ln_multi).exp())
}

/// Result of an exhaustive sweep over all `(N, s, m, k)` in a small box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplacementSweep {
    pub cases: usize,
    pub min_ratio: f64,
    /// `(s, m, upsilon, k)` attaining the minimum.
    pub argmin: (Vec<u64>, u64, u64, Vec<u64>),
    /// Every case satisfied `ratio >= 1/2` in exact arithmetic.
    pub all_at_least_half: bool,
}

fn compositions(m: u64, parts: usize) -> Vec<Vec<u64>> {
    if parts == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in 0..=m {
        for mut rest in compositions(m - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn tuples(len: usize, lo: u64, hi: u64) -> Vec<Vec<u64>> {
    if len == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for head in lo..=hi {
        for mut t in tuples(len - 1, lo, hi) {
            t.insert(0, head);
            out.push(t);
        }
    }
    out
}

/// Exhaustive check with `upsilon = 2 m^2` over `m <= max_m`, `N <= max_n`,
/// `1 <= s_l <= max_s`.
pub fn replacement_sweep(max_m: u64, max_n: usize, max_s: u64) -> Result<ReplacementSweep> {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let mut best: Option<(BigRational, (Vec<u64>, u64, u64, Vec<u64>))> = None;
    let mut cases = 0;
    let mut all_ok = true;
    for m in 1..=max_m {
        let upsilon = 2 * m * m;
        for n in 1..=max_n {
            let comps = compositions(m, n);
            for s in tuples(n, 1, max_s) {
                for k in &comps {
                    let r = replacement_ratio_exact(&s, m, upsilon, k)?;
                    cases += 1;
                    if r < half {
                        all_ok = false;
                    }
                    if best.as_ref().is_none_or(|(b, _)| r < *b) {
                        best = Some((r, (s.clone(), m, upsilon, k.clone())));
                    }
                }
            }
        }
    }
    let (min, argmin) = best.ok_or_else(|| Error::range("empty sweep"))?;
    Ok(ReplacementSweep {
        cases,
        min_ratio: min.to_f64().unwrap_or(f64::NAN),
        argmin,
        all_at_least_half: all_ok,
    })
}

/// Apply `P_Omega U` for a pattern (rows in pattern order).
pub fn sampled_measurements(u: &DenseOperator, pattern: &SamplingPattern, g: &CVector) -> Result<CVector> {
    u.select_rows(&pattern.indices)?.apply(g)
}
