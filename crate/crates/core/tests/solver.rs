use anisocs_core::linops::{make_bundle, CVector};
use anisocs_core::sampling::{uniform_subset, SamplingPattern, Scheme};
use anisocs_core::solver::{
    certificate_check, golfing_certificate, lp_oracle, random_signs, solve_analysis_l1,
    solve_weighted_l1, GolfingSchedule, RecoveryProblem, SolverConfig,
};
use anisocs_core::transforms::{build_haar, dft_matrix_1d};
use anisocs_core::{DenseOperator, C64};
use nalgebra::{DMatrix, DVector};

fn sparse_signal(n: usize, support: &[(usize, f64)]) -> CVector {
    let mut g = CVector::zeros(n);
    for &(i, v) in support {
        g[i] = C64::new(v, -0.3 * v);
    }
    g
}

#[test]
fn oracle_agreement_on_small_real_instances() {
    for k in 0..10u64 {
        let n = 4 + (k as usize % 5);
        let j = n + 2;
        let m = n / 2;
        let entry = |r: usize, c: usize, salt: u64| {
            let h = anisocs_core::rng::mix64(k * 1000 + salt * 100 + (r * 17 + c) as u64);
            (h % 2001) as f64 / 1000.0 - 1.0
        };
        let dm = DMatrix::<f64>::from_fn(j, n, |r, c| entry(r, c, 1));
        let am = DMatrix::<f64>::from_fn(m, n, |r, c| entry(r, c, 2));
        let z = DVector::<f64>::from_fn(m, |r, _| entry(r, 0, 3));
        let lp = lp_oracle(&dm, &am, &z).unwrap();
        let to_c = |x: &DMatrix<f64>| x.map(|v| C64::new(v, 0.0));
        let p = RecoveryProblem::new(
            DenseOperator::new(to_c(&am)).unwrap(),
            DenseOperator::new(to_c(&dm)).unwrap(),
            SamplingPattern::from_indices(m, (0..m).collect(), Scheme::Uniform).unwrap(),
            z.iter().map(|&v| C64::new(v, 0.0)).collect(),
            0.0,
        )
        .unwrap();
        let r = solve_analysis_l1(&p, &SolverConfig::default()).unwrap();
        assert!((r.objective - lp).abs() < 1e-6, "instance {k}: {} vs {lp}", r.objective);
    }
}

#[test]
fn objective_decreases_as_epsilon_grows() {
    let n = 32;
    let g0 = sparse_signal(n, &[(3, 1.0), (11, -2.0), (20, 0.7)]);
    let p0 = RecoveryProblem::from_signal(
        dft_matrix_1d(n),
        DenseOperator::identity(n),
        uniform_subset(n, 14, 3).unwrap(),
        &g0,
    )
    .unwrap();
    let mut last = f64::INFINITY;
    for eps in [0.0, 0.01, 0.1, 0.5] {
        let mut p = p0.clone();
        p.epsilon = eps;
        let r = solve_analysis_l1(&p, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.constraint_residual <= eps + 1e-6, "eps {eps}: {}", r.constraint_residual);
        assert!(r.objective <= last + 1e-7);
        last = r.objective;
    }
}

#[test]
fn weighted_equals_plain_without_noise() {
    let n = 32;
    let u = dft_matrix_1d(n);
    let d = build_haar(n, 5, 1).unwrap();
    let x = sparse_signal(n, &[(0, 1.0), (2, 0.5), (5, -1.0)]);
    let g0 = d.adjoint_apply(&x).unwrap();
    let w: Vec<f64> = (1..=n).map(|l| 1.0 / (l as f64).sqrt()).collect();
    let pattern = anisocs_core::sampling::variable_density(&w, 16, 1).unwrap();
    let p = RecoveryProblem::from_signal(u, d, pattern, &g0).unwrap();
    let plain = solve_analysis_l1(&p, &SolverConfig::default()).unwrap();
    let weighted = solve_weighted_l1(&p.clone().with_weights(w).unwrap(), &SolverConfig::default()).unwrap();
    assert!((plain.objective - weighted.objective).abs() < 1e-6);
}

#[test]
fn haar_solution_is_feasible_and_beats_the_truth() {
    let n = 64;
    let d = build_haar(n, 6, 1).unwrap();
    let x = sparse_signal(n, &[(0, 2.0), (1, -1.0), (3, 0.5), (6, 1.5)]);
    let g0 = d.adjoint_apply(&x).unwrap();
    let p = RecoveryProblem::from_signal(dft_matrix_1d(n), d, uniform_subset(n, 40, 2).unwrap(), &g0).unwrap();
    let r = solve_analysis_l1(&p, &SolverConfig::default()).unwrap().into_converged().unwrap();
    assert!(r.constraint_residual <= 1e-8);
    // g0 is feasible, so the minimum cannot exceed its analysis norm.
    let truth: f64 = x.iter().map(|z| z.norm()).sum();
    assert!(r.objective <= truth + 1e-8);
    assert!((p.objective(&r.signal()) - r.objective).abs() < 1e-9 * truth);
}

#[test]
fn certificate_from_full_sampling_passes_checker() {
    let n = 16;
    let u = make_bundle(dft_matrix_1d(n)).unwrap();
    let d = make_bundle(DenseOperator::identity(n)).unwrap();
    let delta = vec![1, 5];
    let signs = random_signs(&delta, n, 3).unwrap();
    let schedule = GolfingSchedule::new(vec![0.5], vec![0.5], vec![1.0]).unwrap();
    let out = golfing_certificate(&u, &d, &delta, 1.0, &schedule, &signs, 4, None).unwrap();
    let again = certificate_check(
        &u,
        &d,
        &delta,
        &out.report.omega,
        &out.report.rho_prime,
        out.report.theta,
        out.report.q_constant,
        &signs,
    )
    .unwrap();
    assert_eq!(again.conditions, out.report.conditions);
    assert!(again.all_satisfied);
}
