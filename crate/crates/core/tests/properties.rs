use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use emeter_core::interferometer::{default_phase_grid, fit_fringe, run_exact, InterferencePattern};
use emeter_core::oracle;
use emeter_core::protocols::mutual_predictability::{mutual_predictability_protocol, Pairing};
use emeter_core::protocols::negativity::{
    forward_trace, joint_expectation, joint_negativity_unitary, lucas, lucas_recursive,
    marginal_expectations, negativity_protocol_pure, negativity_protocol_pure_at,
    negativity_unitary, x_operator,
};
use emeter_core::protocols::witness::{witness_small_theta_protocol, witness_swap_protocol};
use emeter_core::protocols::{angle_diff, linear_entropy_protocol, mub_set, RunSettings};
use emeter_core::qmat::{
    eigh, expm_hermitian, partial_trace, partial_transpose, trace_norm, BipartiteShape,
    DensityMatrix, MatC, Subsystem,
};
use emeter_core::states::{
    make_cna, make_isotropic, make_pure_schmidt, make_werner, random_ensemble, random_hermitian,
    random_pure, random_schmidt, random_unitary, swap_operator,
};

fn mixed(d: usize, seed: u64) -> DensityMatrix {
    let ens = random_ensemble(d, 3, seed).unwrap();
    let parts: Vec<(f64, &DensityMatrix)> = ens.iter().map(|(p, r)| (*p, r)).collect();
    DensityMatrix::mixture(&parts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(seed in any::<u64>(), n in 1usize..4) {
        let a = random_hermitian(n, seed);
        let b = random_hermitian(2, seed ^ 1);
        let c = random_hermitian(n + 1, seed ^ 2);
        prop_assert!(a.kron(&b).kron(&c).max_abs_diff(&a.kron(&b.kron(&c))) <= 1e-12);
    }

    #[test]
    fn partial_trace_recovers_factors(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let shape = BipartiteShape::new(da, db).unwrap();
        let ra = partial_trace(&mixed(da, seed), BipartiteShape::square(da).unwrap(), Subsystem::A).unwrap();
        let rb = partial_trace(&mixed(db, seed ^ 9), BipartiteShape::square(db).unwrap(), Subsystem::B).unwrap();
        let joint = ra.tensor(&rb);
        prop_assert!(partial_trace(&joint, shape, Subsystem::A).unwrap().matrix().max_abs_diff(ra.matrix()) <= 1e-12);
        prop_assert!(partial_trace(&joint, shape, Subsystem::B).unwrap().matrix().max_abs_diff(rb.matrix()) <= 1e-12);
    }

    #[test]
    fn partial_transpose_is_hermitian_with_unit_trace(seed in any::<u64>(), d in 2usize..4) {
        let rho = mixed(d, seed);
        let shape = BipartiteShape::square(d).unwrap();
        for side in [Subsystem::A, Subsystem::B] {
            let pt = partial_transpose(&rho, shape, side).unwrap();
            prop_assert!(pt.is_hermitian(1e-12));
            prop_assert!((pt.trace().re - 1.0).abs() <= 1e-12);
            prop_assert!(trace_norm(&pt).unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn eigh_reconstructs(seed in any::<u64>(), n in 1usize..=36) {
        let h = random_hermitian(n, seed);
        let e = eigh(&h).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&h) <= 1e-9);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(trace_norm(&h).unwrap() + 1e-12 >= h.trace().norm());
    }

    #[test]
    fn exponential_is_a_one_parameter_group(seed in any::<u64>(), t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let h = random_hermitian(4, seed);
        let lhs = expm_hermitian(&h, t1).unwrap().compose(&expm_hermitian(&h, t2).unwrap()).unwrap();
        prop_assert!(lhs.matrix().max_abs_diff(expm_hermitian(&h, t1 + t2).unwrap().matrix()) <= 1e-9);
    }

    #[test]
    fn factory_states_are_valid(d in 2usize..5, x in 0.0f64..=1.0) {
        let f = swap_operator(d);
        for rho in [make_werner(d, x).unwrap(), make_isotropic(d, x).unwrap(), make_cna(d, x).unwrap()] {
            prop_assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        }
        let w = make_werner(d, x).unwrap();
        let fwf = f.matrix().matmul(w.matrix()).unwrap().matmul(f.matrix()).unwrap();
        prop_assert!(fwf.max_abs_diff(w.matrix()) <= 1e-12);
        assert_abs_diff_eq!(oracle::witness_expectation(&w, f.matrix()).unwrap(), 2.0 * x - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn isotropic_is_u_ustar_invariant(seed in any::<u64>(), d in 2usize..5, x in 0.0f64..=1.0) {
        let iso = make_isotropic(d, x).unwrap();
        let u = random_unitary(d, seed);
        let uu = u.kron(&u.conj());
        let rot = uu.matrix().matmul(iso.matrix()).unwrap().matmul(&uu.matrix().dagger()).unwrap();
        prop_assert!(rot.max_abs_diff(iso.matrix()) <= 1e-9);
    }

    #[test]
    fn fringe_law_holds(seed in any::<u64>(), gamma in -PI..PI) {
        let rho = mixed(2, seed);
        let u = random_unitary(4, seed ^ 3);
        let tr = u.matrix().trace_product(rho.matrix()).unwrap();
        let grid = default_phase_grid(16);
        let pattern = run_exact(&rho, &u, &grid).unwrap();
        for (phi, p) in grid.iter().zip(pattern.intensities()) {
            prop_assert!((p - 0.5 * (1.0 + tr.norm() * (phi - tr.arg()).cos())).abs() <= 1e-12);
        }
        let fit = fit_fringe(&pattern).unwrap();
        prop_assert!((fit.visibility - tr.norm()).abs() <= 1e-10);
        prop_assert!(fit.residual <= 1e-12);
        let scaled = fit_fringe(&pattern.rescaled(0.25)).unwrap();
        prop_assert!((scaled.visibility - fit.visibility).abs() <= 1e-12);
        let shifted = fit_fringe(&run_exact(&rho, &u.with_global_phase(gamma), &grid).unwrap()).unwrap();
        prop_assert!((shifted.visibility - fit.visibility).abs() <= 1e-10);
        if fit.visibility > 1e-6 {
            prop_assert!(angle_diff(shifted.phase, fit.phase + gamma).abs() <= 1e-10);
        }
    }

    #[test]
    fn pattern_csv_round_trips(seed in any::<u64>()) {
        let rho = mixed(2, seed);
        let u = random_unitary(4, seed);
        let p = run_exact(&rho, &u, &default_phase_grid(16)).unwrap();
        let back = InterferencePattern::from_csv(&p.to_csv()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn lucas_forms_agree(d in 2usize..=8, n in 1u32..=10) {
        let a = lucas(d, n);
        let b = lucas_recursive(d, n);
        prop_assert!((a.f_n - b.f_n).abs() <= 1e-9 * a.f_n.abs().max(1.0));
        prop_assert!((a.g_n - b.g_n).abs() <= 1e-9 * a.g_n.abs().max(1.0));
    }

    #[test]
    fn x_squared_identity(d in 2usize..=8) {
        let x = x_operator(d).unwrap();
        let lhs = x.matrix().matmul(x.matrix()).unwrap();
        let rhs = MatC::identity(d).scale_real(d as f64 - 1.0).add(&x.matrix().scale_real(d as f64 - 2.0)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn closed_form_exponential(d in 2usize..=6, theta in -PI..PI) {
        let closed = negativity_unitary(d, theta).unwrap();
        let direct = expm_hermitian(x_operator(d).unwrap().matrix(), theta).unwrap();
        prop_assert!(closed.matrix().max_abs_diff(direct.matrix()) <= 1e-10);
    }

    #[test]
    fn schmidt_states_have_vanishing_marginals(seed in any::<u64>(), d in 2usize..=5) {
        let spec = random_schmidt(d, seed).unwrap();
        let (psi, shape) = make_pure_schmidt(&spec);
        let (xa, xb) = marginal_expectations(&psi, d).unwrap();
        prop_assert!(xa.abs() <= 1e-10 && xb.abs() <= 1e-10);
        let n = oracle::negativity_ppt(&psi, shape).unwrap();
        prop_assert!((joint_expectation(&psi, d).unwrap() - 2.0 * n).abs() <= 1e-9);
        prop_assert!((n - oracle::schmidt_negativity(&spec)).abs() <= 1e-9);
        let purity = oracle::purity(&partial_trace(&psi, shape, Subsystem::A).unwrap());
        let sum_sq: f64 = spec.lambdas().iter().map(|l| l * l).sum();
        prop_assert!((purity - sum_sq).abs() <= 1e-12);
    }

    #[test]
    fn forward_trace_matches_direct(seed in any::<u64>(), d in 2usize..=5, theta in -PI..PI) {
        let (psi, _) = make_pure_schmidt(&random_schmidt(d, seed).unwrap());
        let u = joint_negativity_unitary(d, theta).unwrap();
        let direct = u.matrix().trace_product(psi.matrix()).unwrap();
        let t = joint_expectation(&psi, d).unwrap();
        prop_assert!((forward_trace(t, d, theta) - direct).norm() <= 1e-10);
    }

    #[test]
    fn negativity_protocol_matches_oracle(seed in any::<u64>(), d in 2usize..=5) {
        let (psi, shape) = make_pure_schmidt(&random_schmidt(d, seed).unwrap());
        let r = negativity_protocol_pure(&psi, shape, &RunSettings::exact()).unwrap();
        prop_assert!(r.discrepancy.unwrap() <= 1e-9);
    }

    #[test]
    fn negativity_at_generic_angle(seed in any::<u64>(), d in 2usize..=4, theta in 0.1f64..0.5) {
        // theta * d stays away from multiples of 2 pi
        let (psi, shape) = make_pure_schmidt(&random_schmidt(d, seed).unwrap());
        let r = negativity_protocol_pure_at(&psi, shape, theta, &RunSettings::exact()).unwrap();
        prop_assert!(r.discrepancy.unwrap() <= 1e-8, "{:?}", r);
    }

    #[test]
    fn linear_entropy_matches_oracle(seed in any::<u64>(), d in 2usize..=5) {
        let psi = random_pure(d, seed).unwrap();
        let shape = BipartiteShape::square(d).unwrap();
        let r = linear_entropy_protocol(&psi, shape, &RunSettings::exact()).unwrap();
        prop_assert!(r.discrepancy.unwrap() <= 1e-9);
    }

    #[test]
    fn convex_roof_chain(seed in any::<u64>(), d in 2usize..=4, k in 1usize..=5) {
        let shape = BipartiteShape::square(d).unwrap();
        let ens = random_ensemble(d, k, seed).unwrap();
        let parts: Vec<(f64, &DensityMatrix)> = ens.iter().map(|(p, r)| (*p, r)).collect();
        let mix = DensityMatrix::mixture(&parts).unwrap();
        let lhs = oracle::purity(&partial_trace(&mix, shape, Subsystem::A).unwrap());
        let rhs: f64 = ens
            .iter()
            .map(|(p, r)| p * oracle::purity(&partial_trace(r, shape, Subsystem::A).unwrap()))
            .sum();
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn mp_sign_resolution_matches_direct(seed in any::<u64>(), conj in any::<bool>(), d in prop::sample::select(vec![2usize, 3, 5])) {
        let rho = mixed(d, seed);
        let pairing = if conj { Pairing::Conjugate } else { Pairing::Same };
        let out = mutual_predictability_protocol(&rho, d, d + 1, pairing, &RunSettings::exact()).unwrap();
        let mubs = mub_set(d, d + 1).unwrap();
        for (basis, c) in mubs.bases().iter().zip(&out.correlations) {
            let direct = oracle::mutual_predictability_direct(&rho, basis, &pairing.partner(basis)).unwrap();
            prop_assert!((c - direct).abs() <= 1e-9);
        }
        prop_assert_eq!(out.visibility_bound.violated, out.sum_violated);
    }

    #[test]
    fn mp_oracle_is_local_unitary_invariant(seed in any::<u64>()) {
        let rho = mixed(3, seed);
        let ua = random_unitary(3, seed ^ 5);
        let ub = random_unitary(3, seed ^ 6);
        let local = ua.kron(&ub);
        let rotated = DensityMatrix::new(
            local.matrix().matmul(rho.matrix()).unwrap().matmul(&local.matrix().dagger()).unwrap(),
        )
        .unwrap();
        for basis in mub_set(3, 4).unwrap().bases() {
            let before = oracle::mutual_predictability_direct(&rho, basis, basis).unwrap();
            let after = oracle::mutual_predictability_direct(
                &rotated,
                &ua.compose(basis).unwrap(),
                &ub.compose(basis).unwrap(),
            )
            .unwrap();
            prop_assert!((before - after).abs() <= 1e-9);
        }
    }

    #[test]
    fn witness_sign_matches_trace(seed in any::<u64>(), d in 2usize..=3) {
        let rho = mixed(d, seed);
        let f = swap_operator(d);
        let want = oracle::witness_expectation(&rho, f.matrix()).unwrap();
        let swap = witness_swap_protocol(&rho, d, &RunSettings::exact()).unwrap();
        prop_assert!((swap.estimate - want).abs() <= 1e-9);
        let small = witness_small_theta_protocol(&rho, f.matrix(), 1e-3, &RunSettings::exact()).unwrap();
        // tolerance = 2 theta ||F||^2 / 2 = 1e-3
        if want.abs() > 10.0 * 1e-3 {
            prop_assert_eq!(small.estimate.signum(), want.signum());
        }
    }

    #[test]
    fn sampled_runs_are_reproducible(seed in any::<u64>()) {
        let (psi, shape) = make_pure_schmidt(&random_schmidt(2, seed).unwrap());
        let settings = RunSettings::sampled(1000, seed);
        let a = linear_entropy_protocol(&psi, shape, &settings).unwrap();
        let b = linear_entropy_protocol(&psi, shape, &settings).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
