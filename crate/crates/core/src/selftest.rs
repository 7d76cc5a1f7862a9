//! Named end-to-end checks of every protocol against its oracle.
//!
//! `run_all` is what the `selftest` command prints; each check is also
//! callable on its own.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::interferometer::{default_phase_grid, fit_fringe, fit_standard_errors, run_exact};
use crate::oracle;
use crate::protocols::linear_entropy::{
    convex_roof_bound_protocol, linear_entropy_protocol, oracle_unitary,
};
use crate::protocols::mub::mub_set;
use crate::protocols::mutual_predictability::{
    mp_unitary, mutual_predictability_protocol, Pairing,
};
use crate::protocols::negativity::{
    forward_trace, joint_expectation, joint_negativity_unitary, lucas, marginal_expectations,
    negativity_protocol_cna, negativity_protocol_pure, negativity_unitary, x_operator,
    LucasCoefficients,
};
use crate::protocols::witness::{
    witness_small_theta_protocol, witness_swap_protocol, DEFAULT_SMALL_THETA,
};
use crate::protocols::{angle_diff, Measured, RunSettings, Verdict, VERDICT_TOL};
use crate::qmat::{
    eigh, expm_hermitian, partial_trace, trace_norm, BipartiteShape, DensityMatrix, MatC, Subsystem,
};
use crate::rng;
use crate::states::{
    make_cna, make_isotropic, make_max_entangled, make_pure_schmidt, make_werner, random_ensemble,
    random_hermitian, random_pure, random_schmidt, random_unitary, swap_operator,
};

/// Master seed for every randomized check.
pub const SELFTEST_SEED: u64 = 20_240_601;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn elapsed(&self) -> Duration {
        self.checks.iter().map(|c| c.elapsed).sum()
    }
}

type Outcome = std::result::Result<String, String>;

fn timed(id: &'static str, name: &'static str, f: impl FnOnce() -> Outcome) -> CheckResult {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let (passed, detail) = match out {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CheckResult {
        id,
        name,
        passed,
        detail,
        elapsed,
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: crate::Error) -> String {
    e.to_string()
}

fn one(m: &Measured) -> f64 {
    match m {
        Measured::One(x) => *x,
        Measured::Many(xs) => xs[0],
    }
}

/// d in {2,3,4,5}, 25 seeds each.
fn schmidt_cases() -> impl Iterator<Item = (usize, u64)> {
    (0..100u64).map(|i| (2 + (i % 4) as usize, rng::derive_seed(SELFTEST_SEED, i)))
}

pub fn check_linear_entropy_exactness() -> CheckResult {
    timed("1", "linear entropy exactness", || {
        let mut worst: f64 = 0.0;
        for (d, seed) in schmidt_cases() {
            let (psi, shape) = make_pure_schmidt(&random_schmidt(d, seed).map_err(e2s)?);
            let r = linear_entropy_protocol(&psi, shape, &RunSettings::exact()).map_err(e2s)?;
            let want = oracle::linear_entropy(&psi, shape).map_err(e2s)?;
            let err = (r.estimate - want).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || {
                format!("d={d} seed={seed}: E={} oracle={want}", r.estimate)
            })?;
        }
        Ok(format!("100 states, max error {worst:.2e}"))
    })
}

pub fn check_two_qubit_visibility() -> CheckResult {
    timed("2", "two-qubit visibility equals entanglement", || {
        let shape = BipartiteShape::square(2).map_err(e2s)?;
        let mut worst: f64 = 0.0;
        for i in 0..100u64 {
            let psi = random_pure(2, rng::derive_seed(SELFTEST_SEED ^ 0x2, i)).map_err(e2s)?;
            let r = linear_entropy_protocol(&psi, shape, &RunSettings::exact()).map_err(e2s)?;
            let v = one(&r.visibility);
            let e = oracle::linear_entropy(&psi, shape).map_err(e2s)?;
            worst = worst.max((v - e).abs());
            ensure((v - e).abs() <= 1e-9, || format!("state {i}: V={v} E={e}"))?;
        }
        Ok(format!("100 states, max |V - E| {worst:.2e}"))
    })
}

pub fn check_negativity_pure() -> CheckResult {
    timed("3", "negativity pure protocol", || {
        let mut worst: f64 = 0.0;
        let mut worst_phase: f64 = 0.0;
        for (d, seed) in schmidt_cases() {
            let (psi, shape) = make_pure_schmidt(&random_schmidt(d, seed).map_err(e2s)?);
            let r = negativity_protocol_pure(&psi, shape, &RunSettings::exact()).map_err(e2s)?;
            let want = oracle::negativity_ppt(&psi, shape).map_err(e2s)?;
            let err = (r.estimate - want).abs();
            let dphi = angle_diff(one(&r.phase), -2.0 * PI / d as f64).abs();
            worst = worst.max(err);
            worst_phase = worst_phase.max(dphi);
            ensure(err <= 1e-9, || {
                format!("d={d} seed={seed}: N={} oracle={want}", r.estimate)
            })?;
            ensure(dphi <= 1e-8, || {
                format!("d={d} seed={seed}: phase off by {dphi:.3e}")
            })?;
        }
        Ok(format!(
            "100 states, max error {worst:.2e}, max phase error {worst_phase:.2e}"
        ))
    })
}

/// Checks `X^n = f_n X + g_n I` using coefficients from `coefficients`, plus
/// the closed-form exponential against the eigendecomposition.
pub fn check_lucas_with(coefficients: impl Fn(usize, u32) -> LucasCoefficients) -> CheckResult {
    timed("4", "Lucas identities and closed-form exponential", || {
        for d in 2..=6 {
            let x = x_operator(d).map_err(e2s)?;
            let mut power = x.matrix().clone();
            for n in 1..=8u32 {
                let c = coefficients(d, n);
                let rhs = x
                    .matrix()
                    .scale_real(c.f_n)
                    .add(&MatC::identity(d).scale_real(c.g_n))
                    .map_err(e2s)?;
                let err = power.max_abs_diff(&rhs);
                ensure(err <= 1e-9, || {
                    format!(
                        "X^{n} != f_n X + g_n I at d={d} (f_n={}, g_n={}, error {err:.3e})",
                        c.f_n, c.g_n
                    )
                })?;
                power = power.matmul(x.matrix()).map_err(e2s)?;
            }
        }
        let mut r = rng::stream(SELFTEST_SEED, 4);
        let mut worst: f64 = 0.0;
        for _ in 0..50 {
            let d = r.random_range(2..=6usize);
            let theta = r.random_range(-PI..PI);
            let closed = negativity_unitary(d, theta).map_err(e2s)?;
            let direct =
                expm_hermitian(x_operator(d).map_err(e2s)?.matrix(), theta).map_err(e2s)?;
            let err = closed.matrix().max_abs_diff(direct.matrix());
            worst = worst.max(err);
            ensure(err <= 1e-10, || {
                format!("closed form off by {err:.3e} at d={d} theta={theta}")
            })?;
        }
        Ok(format!(
            "d 2..6 x n 1..8 exact; 50 exponentials, max error {worst:.2e}"
        ))
    })
}

pub fn check_lucas() -> CheckResult {
    check_lucas_with(lucas)
}

pub fn check_cna_family() -> CheckResult {
    timed("5", "cna negativity family", || {
        let mut worst: f64 = 0.0;
        for d in 2..=4 {
            for x in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let rho = make_cna(d, x).map_err(e2s)?;
                let r = negativity_protocol_cna(&rho, d, &RunSettings::exact()).map_err(e2s)?;
                let want = x * (d as f64 - 1.0) / 2.0;
                let err = (r.estimate - want).abs();
                worst = worst.max(err);
                ensure(err <= 1e-9, || {
                    format!("d={d} x={x}: N={} expected {want}", r.estimate)
                })?;
            }
        }
        Ok(format!("15 states, max error {worst:.2e}"))
    })
}

fn isotropic_grid() -> impl Iterator<Item = f64> {
    (1..=9).map(|k| k as f64 / 10.0)
}

pub fn check_isotropic_mutual_predictability() -> CheckResult {
    timed("6", "mutual predictability on isotropic states", || {
        for x in isotropic_grid() {
            let rho = make_isotropic(3, x).map_err(e2s)?;
            let out = mutual_predictability_protocol(
                &rho,
                3,
                4,
                Pairing::Conjugate,
                &RunSettings::exact(),
            )
            .map_err(e2s)?;
            let want = x + (1.0 - x) / 3.0;
            for (i, c) in out.correlations.iter().enumerate() {
                ensure((c - want).abs() <= 1e-9, || {
                    format!("x={x} basis {i}: C={c} expected {want}")
                })?;
            }
            let expect_entangled = x > 0.25 + VERDICT_TOL;
            let got = out.report.verdict == Verdict::Entangled;
            ensure(got == expect_entangled, || {
                format!("x={x}: verdict {:?}", out.report.verdict)
            })?;
        }
        Ok("x = 0.1..0.9, entangled exactly for x > 1/4".into())
    })
}

pub fn check_visibility_bound_consistency() -> CheckResult {
    timed("7", "visibility-form bound agrees with sum bound", || {
        for x in isotropic_grid() {
            let rho = make_isotropic(3, x).map_err(e2s)?;
            let out = mutual_predictability_protocol(
                &rho,
                3,
                4,
                Pairing::Conjugate,
                &RunSettings::exact(),
            )
            .map_err(e2s)?;
            ensure(out.visibility_bound.violated == out.sum_violated, || {
                format!(
                    "x={x}: visibility form {} vs sum form {}",
                    out.visibility_bound.violated, out.sum_violated
                )
            })?;
        }
        Ok("9 runs, identical verdicts".into())
    })
}

pub fn check_witness_phase() -> CheckResult {
    timed("8", "SWAP witness phase on Werner states", || {
        for d in [2, 3] {
            for k in 0..=10 {
                let x = k as f64 / 10.0;
                let rho = make_werner(d, x).map_err(e2s)?;
                let r = witness_swap_protocol(&rho, d, &RunSettings::exact()).map_err(e2s)?;
                let alpha = one(&r.phase);
                if x < 0.5 {
                    ensure(angle_diff(alpha, PI).abs() <= 1e-8, || {
                        format!("d={d} x={x}: alpha={alpha}, want pi")
                    })?;
                } else if x > 0.5 {
                    ensure(alpha.abs() <= 1e-8, || {
                        format!("d={d} x={x}: alpha={alpha}, want 0")
                    })?;
                }
                let want = 2.0 * x - 1.0;
                ensure((r.estimate - want).abs() <= 1e-9, || {
                    format!("d={d} x={x}: V cos(alpha)={} expected {want}", r.estimate)
                })?;
            }
        }
        Ok("d in {2,3}, x = 0..1 step 0.1".into())
    })
}

pub fn check_small_theta_witness() -> CheckResult {
    timed("9", "small-angle witness phase", || {
        let f = swap_operator(2);
        let cases = [
            (make_werner(2, 0.0).map_err(e2s)?, -1.0),
            (make_max_entangled(2).map_err(e2s)?, 1.0),
        ];
        let mut detail = Vec::new();
        for (rho, want) in &cases {
            let r = witness_small_theta_protocol(
                rho,
                f.matrix(),
                DEFAULT_SMALL_THETA,
                &RunSettings::exact(),
            )
            .map_err(e2s)?;
            ensure((r.estimate - want).abs() <= 1e-3, || {
                format!("alpha/theta={} expected {want}", r.estimate)
            })?;
            detail.push(format!("{:.6}", r.estimate));
        }
        Ok(format!("alpha/theta = {}", detail.join(", ")))
    })
}

/// Bell state, 10^5 shots, 16 phases, 200 seeds.
pub fn check_shot_noise_contract() -> CheckResult {
    timed("10", "shot-noise statistical contract", || {
        let psi = make_max_entangled(2).map_err(e2s)?;
        let shape = BipartiteShape::square(2).map_err(e2s)?;
        let shots = 100_000;
        let grid = default_phase_grid(16);
        let rho_a = partial_trace(&psi, shape, Subsystem::A).map_err(e2s)?;
        let input = rho_a.tensor(&DensityMatrix::maximally_mixed(2));
        let u = oracle_unitary(&psi).map_err(e2s)?;
        let probs = run_exact(&input, &u, &grid).map_err(e2s)?;
        let se = fit_standard_errors(&grid, probs.intensities(), shots).map_err(e2s)?;
        // E = 1 - (d/2)(1 - V) with d = 2
        let sigma = se.visibility;
        let mut inside = 0;
        for s in 0..200u64 {
            let settings = RunSettings::sampled(shots, rng::derive_seed(SELFTEST_SEED ^ 0x10, s));
            let r = linear_entropy_protocol(&psi, shape, &settings).map_err(e2s)?;
            if (r.estimate - 0.5).abs() <= 4.0 * sigma {
                inside += 1;
            }
        }
        ensure(inside >= 198, || {
            format!("only {inside}/200 within 4 sigma (sigma {sigma:.3e})")
        })?;
        Ok(format!("{inside}/200 within 4 sigma = {:.3e}", 4.0 * sigma))
    })
}

pub fn check_convex_roof_chain() -> CheckResult {
    timed("11", "convex-roof purity chain", || {
        for i in 0..50u64 {
            let seed = rng::derive_seed(SELFTEST_SEED ^ 0x11, i);
            let d = 2 + (i % 3) as usize;
            let k = 2 + (i % 4) as usize;
            let shape = BipartiteShape::square(d).map_err(e2s)?;
            let ens = random_ensemble(d, k, seed).map_err(e2s)?;
            let parts: Vec<(f64, &DensityMatrix)> = ens.iter().map(|(p, r)| (*p, r)).collect();
            let mix = DensityMatrix::mixture(&parts).map_err(e2s)?;
            let lhs = oracle::purity(&partial_trace(&mix, shape, Subsystem::A).map_err(e2s)?);
            let mut rhs = 0.0;
            for (p, r) in &ens {
                rhs += p * oracle::purity(&partial_trace(r, shape, Subsystem::A).map_err(e2s)?);
            }
            ensure(lhs <= rhs + 1e-10, || {
                format!("ensemble {i}: tr(rho_A^2)={lhs} > average {rhs}")
            })?;
        }
        for (d, seed) in schmidt_cases().take(40) {
            let (psi, shape) = make_pure_schmidt(&random_schmidt(d, seed).map_err(e2s)?);
            let bound =
                convex_roof_bound_protocol(&psi, shape, &RunSettings::exact()).map_err(e2s)?;
            let e = oracle::linear_entropy(&psi, shape).map_err(e2s)?;
            ensure((bound.estimate - e).abs() <= 1e-9, || {
                format!("d={d} seed={seed}: bound {} != E {e}", bound.estimate)
            })?;
        }
        Ok("50 ensembles; bound equals E on 40 pure states".into())
    })
}

pub fn check_schmidt_marginals_and_joint() -> CheckResult {
    timed(
        "inv",
        "Schmidt states: vanishing marginals, joint expectation 2N",
        || {
            for d in 2..=4 {
                for i in 0..100u64 {
                    let spec =
                        random_schmidt(d, rng::derive_seed(SELFTEST_SEED ^ 0x20 ^ d as u64, i))
                            .map_err(e2s)?;
                    let (psi, shape) = make_pure_schmidt(&spec);
                    let (xa, xb) = marginal_expectations(&psi, d).map_err(e2s)?;
                    ensure(xa.abs() <= 1e-10 && xb.abs() <= 1e-10, || {
                        format!("d={d}: marginals {xa}, {xb}")
                    })?;
                    let t = joint_expectation(&psi, d).map_err(e2s)?;
                    let n = oracle::negativity_ppt(&psi, shape).map_err(e2s)?;
                    ensure((t - 2.0 * n).abs() <= 1e-9, || {
                        format!("d={d}: t={t} 2N={}", 2.0 * n)
                    })?;
                }
            }
            Ok("300 states".into())
        },
    )
}

pub fn check_forward_trace() -> CheckResult {
    timed("inv", "closed-form tr(U rho) at arbitrary angle", || {
        let mut r = rng::stream(SELFTEST_SEED, 0x21);
        for i in 0..20u64 {
            let d = r.random_range(2..=5usize);
            let theta = r.random_range(-PI..PI);
            let (psi, _) = make_pure_schmidt(
                &random_schmidt(d, rng::derive_seed(SELFTEST_SEED, 0x2100 + i)).map_err(e2s)?,
            );
            let u = joint_negativity_unitary(d, theta).map_err(e2s)?;
            let direct = u.matrix().trace_product(psi.matrix()).map_err(e2s)?;
            let t = joint_expectation(&psi, d).map_err(e2s)?;
            let err = (forward_trace(t, d, theta) - direct).norm();
            ensure(err <= 1e-10, || {
                format!("d={d} theta={theta}: error {err:.3e}")
            })?;
        }
        Ok("20 triples".into())
    })
}

pub fn check_mp_sign_resolution() -> CheckResult {
    timed("inv", "mutual predictability sign resolution", || {
        let mut states = vec![
            (2, make_max_entangled(2).map_err(e2s)?),
            (3, make_isotropic(3, 0.3).map_err(e2s)?),
        ];
        states.push((3, make_werner(3, 0.2).map_err(e2s)?));
        states.push((3, random_pure(3, SELFTEST_SEED).map_err(e2s)?));
        states.push((5, make_cna(5, 0.6).map_err(e2s)?));
        for (d, rho) in &states {
            for pairing in [Pairing::Same, Pairing::Conjugate] {
                let m = d + 1;
                let out =
                    mutual_predictability_protocol(rho, *d, m, pairing, &RunSettings::exact())
                        .map_err(e2s)?;
                let mubs = mub_set(*d, m).map_err(e2s)?;
                for (i, basis) in mubs.bases().iter().enumerate() {
                    let partner = pairing.partner(basis);
                    let direct =
                        oracle::mutual_predictability_direct(rho, basis, &partner).map_err(e2s)?;
                    let c = out.correlations[i];
                    ensure((c - direct).abs() <= 1e-9, || {
                        format!("d={d} basis {i}: C={c} direct={direct}")
                    })?;
                    let u = mp_unitary(basis, &partner).map_err(e2s)?;
                    let sq = u.compose(&u).map_err(e2s)?;
                    ensure(
                        sq.matrix().max_abs_diff(&MatC::identity(d * d)) <= 1e-10,
                        || "U^2 != I".into(),
                    )?;
                }
            }
        }
        Ok("5 states x 2 pairings, all basis pairs".into())
    })
}

pub fn check_witness_sign() -> CheckResult {
    timed("inv", "witness estimate sign matches tr(W rho)", || {
        let f = swap_operator(3);
        for i in 0..20u64 {
            let rho = random_pure(3, rng::derive_seed(SELFTEST_SEED ^ 0x30, i)).map_err(e2s)?;
            let want = oracle::witness_expectation(&rho, f.matrix()).map_err(e2s)?;
            let swap = witness_swap_protocol(&rho, 3, &RunSettings::exact()).map_err(e2s)?;
            let small = witness_small_theta_protocol(
                &rho,
                f.matrix(),
                DEFAULT_SMALL_THETA,
                &RunSettings::exact(),
            )
            .map_err(e2s)?;
            if want.abs() > 10.0 * DEFAULT_SMALL_THETA {
                ensure(
                    swap.estimate.signum() == want.signum()
                        && small.estimate.signum() == want.signum(),
                    || {
                        format!(
                            "state {i}: tr(F rho)={want}, estimates {} and {}",
                            swap.estimate, small.estimate
                        )
                    },
                )?;
            }
        }
        Ok("20 random states".into())
    })
}

fn random_mixed(n_local: usize, seed: u64) -> std::result::Result<DensityMatrix, String> {
    let ens = random_ensemble(n_local, 3, seed).map_err(e2s)?;
    let parts: Vec<(f64, &DensityMatrix)> = ens.iter().map(|(p, r)| (*p, r)).collect();
    DensityMatrix::mixture(&parts).map_err(e2s)
}

pub fn check_qmat_invariants() -> CheckResult {
    timed(
        "inv",
        "qmat: kron, partial trace, eigh, exponential, trace norm",
        || {
            for i in 0..10u64 {
                let seed = rng::derive_seed(SELFTEST_SEED ^ 0x40, i);
                let (a, b, c) = (
                    random_hermitian(2, seed),
                    random_hermitian(3, seed + 1),
                    random_hermitian(2, seed + 2),
                );
                let err = a.kron(&b).kron(&c).max_abs_diff(&a.kron(&b.kron(&c)));
                ensure(err <= 1e-12, || {
                    format!("kron associativity off by {err:.3e}")
                })?;

                let ra = random_mixed(2, seed).map_err(|e| e + " (A)")?;
                let ra = partial_trace(&ra, BipartiteShape::square(2).map_err(e2s)?, Subsystem::A)
                    .map_err(e2s)?;
                let rb = DensityMatrix::maximally_mixed(3);
                let shape = BipartiteShape::new(2, 3).map_err(e2s)?;
                let joint = ra.tensor(&rb);
                let back_a = partial_trace(&joint, shape, Subsystem::A).map_err(e2s)?;
                let back_b = partial_trace(&joint, shape, Subsystem::B).map_err(e2s)?;
                ensure(back_a.matrix().max_abs_diff(ra.matrix()) <= 1e-12, || {
                    "partial trace keep A".into()
                })?;
                ensure(back_b.matrix().max_abs_diff(rb.matrix()) <= 1e-12, || {
                    "partial trace keep B".into()
                })?;

                for n in [4, 9, 16, 36] {
                    let h = random_hermitian(n, seed ^ n as u64);
                    let e = eigh(&h).map_err(e2s)?;
                    let res = e.reconstruct().max_abs_diff(&h);
                    ensure(res <= 1e-9, || format!("eigh residual {res:.3e} at n={n}"))?;
                    ensure(e.values.windows(2).all(|w| w[0] <= w[1]), || {
                        "eigenvalues not ascending".into()
                    })?;
                    let tn = trace_norm(&h).map_err(e2s)?;
                    ensure(tn + 1e-12 >= h.trace().norm(), || {
                        "trace norm below |trace|".into()
                    })?;
                }
                let h = random_hermitian(4, seed);
                let (t1, t2) = (0.3 + i as f64 * 0.1, -0.7);
                let lhs = expm_hermitian(&h, t1)
                    .map_err(e2s)?
                    .compose(&expm_hermitian(&h, t2).map_err(e2s)?)
                    .map_err(e2s)?;
                let rhs = expm_hermitian(&h, t1 + t2).map_err(e2s)?;
                ensure(lhs.matrix().max_abs_diff(rhs.matrix()) <= 1e-9, || {
                    "exp(t1) exp(t2) != exp(t1+t2)".into()
                })?;
            }
            Ok("10 seeds".into())
        },
    )
}

pub fn check_state_invariants() -> CheckResult {
    timed("inv", "states: factory validity and symmetries", || {
        for d in 2..=4 {
            let f = swap_operator(d);
            for k in 0..=4 {
                let x = k as f64 / 4.0;
                for rho in [make_werner(d, x), make_isotropic(d, x), make_cna(d, x)] {
                    let rho = rho.map_err(e2s)?;
                    DensityMatrix::new(rho.matrix().clone()).map_err(e2s)?;
                }
                let w = make_werner(d, x).map_err(e2s)?;
                let fwf = f
                    .matrix()
                    .matmul(w.matrix())
                    .and_then(|m| m.matmul(f.matrix()))
                    .map_err(e2s)?;
                ensure(fwf.max_abs_diff(w.matrix()) <= 1e-12, || {
                    format!("Werner d={d} x={x} not swap invariant")
                })?;
            }
            let iso = make_isotropic(d, 0.4).map_err(e2s)?;
            for i in 0..20u64 {
                let u = random_unitary(d, rng::derive_seed(SELFTEST_SEED ^ 0x50, i));
                let uu = u.kron(&u.conj());
                let rot = uu
                    .matrix()
                    .matmul(iso.matrix())
                    .and_then(|m| m.matmul(&uu.matrix().dagger()))
                    .map_err(e2s)?;
                let err = rot.max_abs_diff(iso.matrix());
                ensure(err <= 1e-9, || {
                    format!("isotropic d={d} not U (x) U* invariant ({err:.3e})")
                })?;
            }
        }
        let shape = BipartiteShape::square(2).map_err(e2s)?;
        for x in [0.0, 0.3, 1.0] {
            let cna = make_cna(2, x).map_err(e2s)?;
            for side in [Subsystem::A, Subsystem::B] {
                let m = partial_trace(&cna, shape, side).map_err(e2s)?;
                ensure(
                    m.matrix().max_abs_diff(&MatC::identity(2).scale_real(0.5)) <= 1e-12,
                    || format!("cna d=2 x={x} marginal not I/2"),
                )?;
            }
        }
        Ok("Werner, isotropic, cna factories".into())
    })
}

pub fn check_interferometer_invariants() -> CheckResult {
    timed(
        "inv",
        "interferometer: fringe law, rescaling, global phase",
        || {
            let grid = default_phase_grid(16);
            for i in 0..10u64 {
                let seed = rng::derive_seed(SELFTEST_SEED ^ 0x60, i);
                let rho = random_mixed(2, seed)?;
                let u = random_unitary(4, seed);
                let tr = u.matrix().trace_product(rho.matrix()).map_err(e2s)?;
                let pattern = run_exact(&rho, &u, &grid).map_err(e2s)?;
                let fit = fit_fringe(&pattern).map_err(e2s)?;
                ensure((fit.visibility - tr.norm()).abs() <= 1e-10, || {
                    format!("V={} |tr|={}", fit.visibility, tr.norm())
                })?;
                if tr.norm() > 1e-6 {
                    ensure(angle_diff(fit.phase, tr.arg()).abs() <= 1e-10, || {
                        "phase != arg tr(U rho)".into()
                    })?;
                }
                ensure(fit.residual <= 1e-12, || {
                    format!("residual {:.3e}", fit.residual)
                })?;
                let scaled = fit_fringe(&pattern.rescaled(0.37)).map_err(e2s)?;
                ensure((scaled.visibility - fit.visibility).abs() <= 1e-12, || {
                    "rescaling changed V".into()
                })?;
                let gamma = 0.2 + 0.5 * i as f64;
                let shifted =
                    fit_fringe(&run_exact(&rho, &u.with_global_phase(gamma), &grid).map_err(e2s)?)
                        .map_err(e2s)?;
                ensure((shifted.visibility - fit.visibility).abs() <= 1e-10, || {
                    "global phase changed V".into()
                })?;
                if fit.visibility > 1e-6 {
                    ensure(
                        angle_diff(shifted.phase, fit.phase + gamma).abs() <= 1e-10,
                        || "global phase shift".into(),
                    )?;
                }
            }
            Ok("10 random (rho, U)".into())
        },
    )
}

pub fn check_oracle_invariants() -> CheckResult {
    timed(
        "inv",
        "oracle: Schmidt negativity, purity, local-unitary invariance",
        || {
            for (d, seed) in schmidt_cases() {
                let spec = random_schmidt(d, seed).map_err(e2s)?;
                let (psi, shape) = make_pure_schmidt(&spec);
                let n = oracle::negativity_ppt(&psi, shape).map_err(e2s)?;
                ensure(
                    (n - oracle::schmidt_negativity(&spec)).abs() <= 1e-9,
                    || format!("d={d}: PPT vs Schmidt"),
                )?;
                let p = oracle::purity(&partial_trace(&psi, shape, Subsystem::A).map_err(e2s)?);
                let sum_sq: f64 = spec.lambdas().iter().map(|l| l * l).sum();
                ensure((p - sum_sq).abs() <= 1e-12, || {
                    format!("d={d}: purity {p} vs sum lambda^2 {sum_sq}")
                })?;
            }
            let mubs = mub_set(3, 4).map_err(e2s)?;
            ensure(mubs.unbiasedness_defect() <= 1e-9, || {
                "MUBs not unbiased".into()
            })?;
            let rho = random_mixed(3, SELFTEST_SEED)?;
            for i in 0..5u64 {
                let ua = random_unitary(3, rng::derive_seed(SELFTEST_SEED ^ 0x70, i));
                let ub = random_unitary(3, rng::derive_seed(SELFTEST_SEED ^ 0x71, i));
                let local = ua.kron(&ub);
                let rotated = local
                    .matrix()
                    .matmul(rho.matrix())
                    .and_then(|m| m.matmul(&local.matrix().dagger()))
                    .map_err(e2s)?;
                let rotated = DensityMatrix::new(rotated).map_err(e2s)?;
                for basis in mubs.bases() {
                    let before =
                        oracle::mutual_predictability_direct(&rho, basis, basis).map_err(e2s)?;
                    let a = ua.compose(basis).map_err(e2s)?;
                    let b = ub.compose(basis).map_err(e2s)?;
                    let after =
                        oracle::mutual_predictability_direct(&rotated, &a, &b).map_err(e2s)?;
                    ensure((before - after).abs() <= 1e-9, || {
                        format!("C changed {before} -> {after}")
                    })?;
                }
            }
            Ok("100 Schmidt states, 5 local unitaries".into())
        },
    )
}

pub fn run_all() -> SelftestReport {
    SelftestReport {
        checks: vec![
            check_linear_entropy_exactness(),
            check_two_qubit_visibility(),
            check_negativity_pure(),
            check_lucas(),
            check_cna_family(),
            check_isotropic_mutual_predictability(),
            check_visibility_bound_consistency(),
            check_witness_phase(),
            check_small_theta_witness(),
            check_shot_noise_contract(),
            check_convex_roof_chain(),
            check_schmidt_marginals_and_joint(),
            check_forward_trace(),
            check_mp_sign_resolution(),
            check_witness_sign(),
            check_qmat_invariants(),
            check_state_invariants(),
            check_interferometer_invariants(),
            check_oracle_invariants(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_lucas_coefficient_is_named() {
        let r = check_lucas_with(|d, n| {
            let mut c = lucas(d, n);
            if d == 4 && n == 5 {
                c.f_n += 1.0;
            }
            c
        });
        assert!(!r.passed);
        assert!(
            r.detail.contains("X^5") && r.detail.contains("d=4"),
            "{}",
            r.detail
        );
    }

    #[test]
    fn lucas_check_passes() {
        let r = check_lucas();
        assert!(r.passed, "{}", r.detail);
    }
}
