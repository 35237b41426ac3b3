//! Cross-module frame properties: linops identities, coherence invariances,
//! diagnostics monotonicity and operator serialization.

use anisocs_core::diagnostics::{
    b_factor, best_s_term_error, coherence_weights, localization_factor, mutual_coherence, DeltaSearch,
};
use anisocs_core::linops::io::{read_binary, read_csv, write_binary, write_csv};
use anisocs_core::linops::{dual_frame, frame_bounds, make_bundle, spectral_norm, CMatrix, CVector};
use anisocs_core::rng::seeded;
use anisocs_core::{DenseOperator, C64};
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = seeded(seed);
    CMatrix::from_fn(rows, cols, |_, _| {
        C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    })
}

fn random_unitary(n: usize, seed: u64) -> CMatrix {
    random_matrix(n, n, seed).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dual_reconstructs_and_bounds_invert(n in 1usize..8, extra in 0usize..8, seed in any::<u64>()) {
        let op = DenseOperator::new(random_matrix(n + extra + 1, n, seed)).unwrap();
        let bundle = make_bundle(op.clone()).unwrap();
        let g = CVector::from_fn(n, |i, _| C64::new(i as f64 + 1.0, -0.5));
        let back = bundle.dual_op().adjoint_apply(&op.apply(&g).unwrap()).unwrap();
        prop_assert!((back - &g).norm() <= 1e-9 * g.norm());
        let (a, b) = frame_bounds(&op).unwrap();
        let (da, db) = frame_bounds(&dual_frame(&op).unwrap()).unwrap();
        prop_assert!((da * b - 1.0).abs() < 1e-9);
        prop_assert!((db * a - 1.0).abs() < 1e-9);
        // ||U|| = sqrt(B) and ||U~|| = 1/sqrt(A).
        prop_assert!((spectral_norm(op.matrix()) - b.sqrt()).abs() < 1e-9 * b.sqrt());
        prop_assert!((spectral_norm(bundle.dual_op().matrix()) - 1.0 / a.sqrt()).abs() < 1e-9 / a.sqrt());
    }

    #[test]
    fn coherence_invariant_under_common_unitary(n in 2usize..6, seed in any::<u64>()) {
        let u = random_matrix(n + 2, n, seed);
        let d = random_matrix(n + 1, n, seed ^ 1);
        let q = random_unitary(n, seed ^ 2);
        let before = mutual_coherence(
            &make_bundle(DenseOperator::new(u.clone()).unwrap()).unwrap(),
            &make_bundle(DenseOperator::new(d.clone()).unwrap()).unwrap(),
        ).unwrap();
        let after = mutual_coherence(
            &make_bundle(DenseOperator::new(&u * &q).unwrap()).unwrap(),
            &make_bundle(DenseOperator::new(&d * &q).unwrap()).unwrap(),
        ).unwrap();
        prop_assert!((before.mu - after.mu).abs() < 1e-10 * before.mu.max(1.0));
    }

    #[test]
    fn weights_dominate_rows(n in 2usize..6, cut in 1usize..6, seed in any::<u64>()) {
        let u = make_bundle(DenseOperator::new(random_matrix(n + 3, n, seed)).unwrap()).unwrap();
        let d = make_bundle(DenseOperator::new(random_matrix(n, n, seed ^ 3)).unwrap()).unwrap();
        let cut = cut.min(u.n_rows());
        let cw = coherence_weights(&u, &d, cut).unwrap();
        let report = mutual_coherence(&u, &d).unwrap();
        let max_w = cw.weights.iter().copied().fold(0.0, f64::max);
        let expect = report.per_pair_max[..cut].iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(max_w, expect);
        prop_assert!(max_w <= report.mu);
    }

    #[test]
    fn best_s_term_is_monotone(vals in prop::collection::vec(-5.0f64..5.0, 4..20)) {
        let x: Vec<C64> = vals.iter().map(|&v| C64::new(v, 0.5 * v)).collect();
        let len = x.len();
        for m in 2..=len {
            for s in 1..m {
                let a = best_s_term_error(&x, s, m).unwrap();
                prop_assert!(best_s_term_error(&x, s + 1, m).unwrap() <= a + 1e-12);
                if m < len {
                    prop_assert!(best_s_term_error(&x, s, m + 1).unwrap() <= a + 1e-12);
                }
            }
        }
    }
}

#[test]
fn parseval_families_coincide() {
    let n = 8;
    let q = random_unitary(n, 11);
    let u = make_bundle(DenseOperator::new(q.clone()).unwrap()).unwrap();
    let d = make_bundle(DenseOperator::new(random_unitary(n, 12)).unwrap()).unwrap();
    let f = mutual_coherence(&u, &d).unwrap().family_breakdown;
    for v in &f[1..] {
        assert!((v - f[0]).abs() < 1e-12);
    }
}

#[test]
fn redundancy_factors_are_at_least_one() {
    let policy = DeltaSearch::default();
    for seed in 0..4 {
        let d = make_bundle(DenseOperator::new(random_matrix(10, 6, seed)).unwrap()).unwrap();
        assert!(b_factor(&d, 4, 8, &policy).unwrap().value >= 1.0);
        let eta = localization_factor(&d, 3, 6, 8, &policy).unwrap();
        assert!(eta.value >= 1.0);
        assert!(eta.is_lower_bound);
    }
}

#[test]
fn operator_io_round_trips() {
    let op = DenseOperator::new(random_matrix(5, 3, 9)).unwrap();
    let mut buf = Vec::new();
    write_csv(&op, &mut buf).unwrap();
    assert_eq!(read_csv(buf.as_slice()).unwrap(), op);
    let mut bin = Vec::new();
    write_binary(&op, &mut bin).unwrap();
    assert_eq!(read_binary(bin.as_slice()).unwrap(), op);
}
