//! Acceptance suite: one test per numbered criterion, each printing a
//! PASS line with the measured values (run with `--nocapture` to see them).
//!
//! The two ensemble criteria are desk-scaled stand-ins for the
//! full-resolution million-path statistics: 10^4 paired Allen-Cahn paths and 10^3 paired
//! jump paths, with every tolerance pinned below.

use std::sync::OnceLock;

use opm::bifurcation::{
    allen_cahn_steady_states, continue_branch, lower_branch_to_fold, multi_start_solutions,
    FoldProblem, Termination, DEFAULT_D_LAMBDA, EPS_STAR,
};
use opm::defect::{DefectCurve, TauGrid};
use opm::ensemble::{
    acf, profile_mean_std, run_jump_ensemble, run_sace_ensemble, wilson_interval, Histogram,
    JumpEnsembleOptions, SaceEnsemble, SaceEnsembleOptions, TransitionClass,
};
use opm::forcing::{
    gaussian_memory_quadrature, init_gaussian_memory, init_jump_memory, jump_memory_quadrature,
    BrownianPaths, JumpSignal,
};
use opm::parameterization::{
    check_nonresonance, integrate_bf_numeric, NoiseRealization, ParameterizationSpec,
};
use opm::pipeline::{JumpStudy, SaceStudy};
use opm::reduced::{JumpApproximation, JumpClosure, SaceClosure};
use opm::rng::{CounterRng, Stream};
use opm::solver::{JumpConfig, SaceConfig};
use opm::spectral::{gl_energy, SpectralField};

const SACE_TRAIN_SEED: u64 = 8;
const JUMP_TRAIN_SEED: u64 = 8;
const ENSEMBLE_SEED: u64 = 2_024;

fn sace_fixture() -> &'static (SaceStudy, ParameterizationSpec, Vec<DefectCurve>) {
    static FIXTURE: OnceLock<(SaceStudy, ParameterizationSpec, Vec<DefectCurve>)> =
        OnceLock::new();
    FIXTURE.get_or_init(|| {
        let study = SaceStudy::build(SaceConfig::default()).expect("sACE study");
        let (spec, curves) = study
            .train(SACE_TRAIN_SEED, (10.0, 40.0), &TauGrid::default())
            .expect("sACE training");
        (study, spec, curves)
    })
}

fn jump_fixture() -> &'static (JumpStudy, ParameterizationSpec, Vec<DefectCurve>) {
    static FIXTURE: OnceLock<(JumpStudy, ParameterizationSpec, Vec<DefectCurve>)> =
        OnceLock::new();
    FIXTURE.get_or_init(|| {
        let study = JumpStudy::build(JumpConfig::default(), 11).expect("jump study");
        let grid = TauGrid {
            start: 0.0,
            step: 0.01,
            end: 2.0,
        };
        let (spec, curves) = study
            .train(JUMP_TRAIN_SEED, (0.0, 400.0), &grid)
            .expect("jump training");
        (study, spec, curves)
    })
}

fn sace_ensemble() -> &'static opm::ensemble::SaceEnsemble {
    static ENSEMBLE: OnceLock<opm::ensemble::SaceEnsemble> = OnceLock::new();
    ENSEMBLE.get_or_init(|| {
        let (study, spec, _) = sace_fixture();
        let options = SaceEnsembleOptions {
            n_paths: 10_000,
            base_seed: ENSEMBLE_SEED,
            t_end: 40.0,
            ..Default::default()
        };
        run_sace_ensemble(study, spec, options).expect("sACE ensemble")
    })
}

#[test]
fn criterion_01_linearized_spectrum() {
    let (study, _, _) = jump_fixture();
    let reference_spectrum: [f64; 5] = [0.1815, -7.4966, -19.9665, -37.2840, -59.5108];
    let mut detail = String::new();
    for (i, (beta, &reference)) in study.basis().eigenvalues.iter().zip(&reference_spectrum).enumerate() {
        // +-1e-3 scaled by the eigenvalue magnitude (absolute for the O(0.1)
        // unstable eigenvalue, relative for the large stable ones).
        let tol = 1e-3 * reference.abs().max(1.0);
        assert!(
            (beta - reference).abs() <= tol,
            "criterion 1 FAIL: beta_{} = {beta:.5} vs {reference} (tol {tol:.1e})",
            i + 1
        );
        detail.push_str(&format!("b{}={beta:.4} ", i + 1));
    }
    let unstable = study
        .basis()
        .eigenvalues
        .iter()
        .filter(|b| **b > 0.0)
        .count();
    assert_eq!(unstable, 1, "criterion 1 FAIL: {unstable} unstable modes");
    println!("criterion 1 PASS: linearized spectrum {detail}(single unstable mode)");
}

#[test]
fn criterion_02_bifurcation_diagram() {
    let problem = FoldProblem::new(2.0, 6, 257, EPS_STAR / 2.0).unwrap();
    let (_, lambda_star) = lower_branch_to_fold(&problem).unwrap();
    assert!(
        (lambda_star - 1.3309).abs() <= 0.005,
        "criterion 2 FAIL: lambda* = {lambda_star:.5}"
    );
    let states = multi_start_solutions(&problem, 1.32, 200, 11);
    assert_eq!(
        states.len(),
        3,
        "criterion 2 FAIL: multiplicity {} at lambda = 1.32",
        states.len()
    );
    let steep = FoldProblem::new(2.0, 6, 257, 0.35).unwrap();
    let branch = continue_branch(&steep, &vec![0.0; 6], 1.0, DEFAULT_D_LAMBDA, 1.45, 1e-7).unwrap();
    assert_eq!(
        branch.termination,
        Termination::ReachedEnd,
        "criterion 2 FAIL: fold found for eps = 0.35"
    );
    println!(
        "criterion 2 PASS: lambda* = {lambda_star:.4}, multiplicity 3 at 1.32, no fold at eps 0.35"
    );
}

#[test]
fn criterion_03_steady_state_energy_fractions() {
    let states = allen_cahn_steady_states(3.9 * std::f64::consts::PI, 16, 201).unwrap();
    // Tabulated (state class, mode index, percent), +-0.5 points.
    let expectations: [(&str, usize, f64); 7] = [
        ("phi1", 0, 94.69),
        ("phi1", 2, 4.79),
        ("phi1", 4, 0.46),
        ("phi1", 6, 0.05),
        ("phi2", 1, 99.16),
        ("phi2", 5, 0.83),
        ("phi3", 2, 99.93),
    ];
    let class_of = |s: &opm::bifurcation::SteadyState| -> &'static str {
        if s.energy_fractions[0] > 90.0 {
            "phi1"
        } else if s.energy_fractions[1] > 90.0 {
            "phi2"
        } else {
            "phi3"
        }
    };
    for (class, mode, expected) in expectations {
        let matching: Vec<&opm::bifurcation::SteadyState> =
            states.iter().filter(|s| class_of(s) == class).collect();
        assert_eq!(matching.len(), 2, "criterion 3 FAIL: {class} multiplicity");
        for s in matching {
            let got = s.energy_fractions[mode];
            assert!(
                (got - expected).abs() <= 0.5,
                "criterion 3 FAIL: {class} mode {} fraction {got:.2}% vs {expected}%",
                mode + 1
            );
        }
    }
    println!("criterion 3 PASS: all tabulated energy fractions within 0.5 points");
}

#[test]
fn criterion_04_memory_rde_oracle() {
    let rng = CounterRng::new(515, Stream::Test, 0, 0);
    let dt = 1e-3;
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let kappa = -0.2 - 2.8 * rng.uniform(3 * trial);
        let tau = (0.2 + 1.8 * rng.uniform(3 * trial + 1) / dt).round() * dt;
        let seed = (rng.uniform(3 * trial + 2) * 1e9) as u64;
        let paths = BrownianPaths::sample(seed, 0, &[5], &[1.0], dt, -3.0, 5.0).unwrap();
        let mut mem = init_gaussian_memory(&paths, 5, kappa, tau, 0.0).unwrap();
        for _ in 0..(5.0 / dt).round() as usize {
            mem.step_gaussian(&paths, dt);
        }
        let oracle = gaussian_memory_quadrature(&paths, 5, kappa, tau, 5.0).unwrap();
        let rel = (mem.value - oracle).abs() / (1.0 + oracle.abs());
        assert!(
            rel <= 1e-3,
            "criterion 4 FAIL (Z): kappa {kappa:.3} tau {tau:.3} rel {rel:.2e}"
        );
        worst = worst.max(rel);

        let beta = -0.5 - 5.0 * rng.uniform(3 * trial + 60);
        let signal = JumpSignal::sample(seed, 1, 0.35, 0.5, dt, -3.0, 5.0, false).unwrap();
        let (sigma, lambda) = (1.0, 1.32);
        let mut jm = init_jump_memory(&signal, 2, beta, tau, 0.0, sigma, lambda).unwrap();
        for _ in 0..(5.0 / dt).round() as usize {
            jm.step_jump(&signal, sigma, lambda, dt);
        }
        let joracle = jump_memory_quadrature(&signal, beta, tau, 5.0, sigma, lambda).unwrap();
        let jrel = (jm.value - joracle).abs() / (1.0 + joracle.abs());
        assert!(
            jrel <= 1e-3,
            "criterion 4 FAIL (J): beta {beta:.3} tau {tau:.3} rel {jrel:.2e}"
        );
        worst = worst.max(jrel);
    }
    println!("criterion 4 PASS: memory equations match quadrature, worst rel {worst:.2e}");
}

fn gaussian_bf_gap(study: &SaceStudy, dt: f64) -> f64 {
    let (tau, t) = (1.2, 1.5);
    let x = [0.5, -0.3, 0.2, 0.1];
    let mut total = 0.0;
    let mut count = 0;
    for seed in 0..6u64 {
        let paths =
            BrownianPaths::sample(900 + seed, 0, &[4, 5, 6, 7], &[0.2; 4], dt, -3.0, 2.0).unwrap();
        for mode in 4..8 {
            let numeric = integrate_bf_numeric(
                &study.template,
                mode,
                &x,
                0.0,
                tau,
                t,
                dt,
                &NoiseRealization::Brownian(&paths),
            )
            .unwrap();
            let par = study.template.instantiate(mode, tau, false);
            let mem = init_gaussian_memory(&paths, mode, par.rate, tau, t).unwrap();
            total += (numeric - par.eval_gaussian(&x, t, &mem, &paths)).abs();
            count += 1;
        }
    }
    total / count as f64
}

fn jump_bf_gap(study: &JumpStudy, dt: f64) -> f64 {
    let (tau, t) = (0.5, 1.0);
    let x = [0.8];
    let mut total = 0.0;
    let mut count = 0;
    for seed in 0..4u64 {
        let signal = JumpSignal::sample(
            1300 + seed,
            0,
            study.cfg.firing_rate,
            study.cfg.block_length,
            dt,
            -2.0,
            2.0,
            false,
        )
        .unwrap();
        for mode in [2usize, 4] {
            let numeric = integrate_bf_numeric(
                &study.template,
                mode,
                &x,
                0.0,
                tau,
                t,
                dt,
                &NoiseRealization::Jump(&signal),
            )
            .unwrap();
            let par = study.template.instantiate(mode, tau, false);
            let mem = init_jump_memory(
                &signal,
                mode,
                par.rate,
                tau,
                t,
                study.cfg.sigma,
                study.cfg.lambda,
            )
            .unwrap();
            total += (numeric - par.eval_jump(x[0], t, &mem)).abs() / (1.0 + study.cfg.sigma);
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn criterion_05_parameterization_oracle() {
    let (sace, _, _) = sace_fixture();
    let g2 = gaussian_bf_gap(sace, 1e-2);
    let g3 = gaussian_bf_gap(sace, 1e-3);
    let g4 = gaussian_bf_gap(sace, 1e-4);
    let root10 = 10f64.sqrt();
    assert!(
        g3 <= g2 / root10 * 2.0 && g4 <= g3 / root10 * 2.0,
        "criterion 5 FAIL (Gaussian): gaps {g2:.2e} {g3:.2e} {g4:.2e}"
    );
    let (jump, _, _) = jump_fixture();
    let j2 = jump_bf_gap(jump, 1e-2);
    let j3 = jump_bf_gap(jump, 1e-3);
    let j4 = jump_bf_gap(jump, 1e-4);
    assert!(
        j3 <= j2 / 10.0 * 3.0 && j4 <= j3 / 10.0 * 3.0,
        "criterion 5 FAIL (jump): gaps {j2:.2e} {j3:.2e} {j4:.2e}"
    );
    println!(
        "criterion 5 PASS: closed form vs BF decays (Gaussian {g2:.1e}->{g3:.1e}->{g4:.1e}, jump {j2:.1e}->{j3:.1e}->{j4:.1e})"
    );
}

#[test]
fn criterion_06_defect_structure() {
    let (_, _, curves) = sace_fixture();
    let improvement = |c: &DefectCurve| -> f64 {
        let q_min = c.normalized.iter().cloned().fold(f64::INFINITY, f64::min);
        let q_end = *c.normalized.last().unwrap();
        100.0 * (q_end - q_min) / q_end
    };
    let mut detail = String::new();
    for c in curves {
        let imp = improvement(c);
        detail.push_str(&format!("Q{}:{imp:.1}% ", c.mode + 1));
        match c.mode {
            4 | 5 => assert!(
                imp >= 5.0,
                "criterion 6 FAIL: mode {} improves only {imp:.2}%",
                c.mode + 1
            ),
            6 | 7 => assert!(
                imp < 5.0,
                "criterion 6 FAIL: mode {} improves {imp:.2}%",
                c.mode + 1
            ),
            _ => {}
        }
    }
    println!("criterion 6 PASS: interior minima on modes 5,6 only ({detail})");
}

/// Trimodality of a metric sample set: dominant central mass, populated
/// side modes, and a sparse gap between them.
fn assert_trimodal(metrics: &[f64], label: &str) -> (f64, f64, f64) {
    let n = metrics.len() as f64;
    let center = metrics.iter().filter(|m| m.abs() <= 0.25).count() as f64 / n;
    let side_plus = metrics.iter().filter(|m| **m >= 0.75).count() as f64 / n;
    let side_minus = metrics.iter().filter(|m| **m <= -0.75).count() as f64 / n;
    let gap = metrics
        .iter()
        .filter(|m| m.abs() > 0.25 && m.abs() < 0.75)
        .count() as f64
        / n;
    assert!(
        center > 0.5 && side_plus > 0.0 && side_minus > 0.0 && gap < 0.5 * center,
        "criterion 7 FAIL: {label} not trimodal (center {center:.3}, sides {side_plus:.4}/{side_minus:.4}, gap {gap:.3})"
    );
    (center, side_plus, side_minus)
}

#[test]
fn criterion_07_transition_statistics() {
    let ensemble = sace_ensemble();
    assert!(
        ensemble.failures.is_empty(),
        "criterion 7 FAIL: {} aborted paths",
        ensemble.failures.len()
    );
    let full = ensemble.full_metrics();
    let reduced = ensemble.reduced_metrics();
    assert_trimodal(&full, "full model");
    assert_trimodal(&reduced, "reduced model");

    let thr = ensemble.options.rare_threshold;
    let rare_full = SaceEnsemble::rare_fraction(&full, thr);
    let rare_reduced = SaceEnsemble::rare_fraction(&reduced, thr);
    let n = full.len() as u64;
    let (_, upper99) = wilson_interval((rare_full * n as f64).round() as u64, n, 2.576);
    assert!(
        rare_reduced > 0.0,
        "criterion 7 FAIL: no rare events in the reduced ensemble"
    );
    assert!(
        rare_reduced <= 2.0 * upper99,
        "criterion 7 FAIL: reduced rare fraction {rare_reduced:.4} above 2x Wilson bound {upper99:.4}"
    );

    // Bin width 0.1 resolves the three modes (central peak, side bumps at
    // +-1, sparse gap) while keeping the multinomial noise of the distance
    // near 0.02 at 10^4 paths. The distance is averaged over bin-origin
    // offsets: a single origin aliases the sharp central peak and moves
    // the value by about 0.01 either way.
    let hist_full = Histogram::from_samples(&full, 33, Some((-1.65, 1.65))).unwrap();
    assert!(hist_full.n_samples as f64 >= 0.999 * n as f64);
    let l1 = opm::ensemble::dealiased_l1_distance(&full, &reduced, 0.1, -1.7, 1.7, 16).unwrap();
    assert!(l1 <= 0.2, "criterion 7 FAIL: L1 distance {l1:.3}");
    println!(
        "criterion 7 PASS: trimodal both sides; rare full {rare_full:.4} vs reduced {rare_reduced:.4} (2x Wilson99 {:.4}); L1 {l1:.3}",
        2.0 * upper99
    );
}

#[test]
fn criterion_08_conditional_profiles() {
    let ensemble = sace_ensemble();
    let mut detail = String::new();
    for (class, name) in [
        (TransitionClass::Typical, "typical"),
        (TransitionClass::RarePlus, "rare+"),
        (TransitionClass::RareMinus, "rare-"),
    ] {
        let full = ensemble.class_profiles(class, false);
        let reduced = ensemble.class_profiles(class, true);
        assert!(
            full.len() >= 5 && reduced.len() >= 5,
            "criterion 8 FAIL: class {name} underpopulated ({} / {})",
            full.len(),
            reduced.len()
        );
        let (mean_full, std_full) = profile_mean_std(&full).unwrap();
        let (mean_reduced, _) = profile_mean_std(&reduced).unwrap();
        // Profile amplitude: the larger of the mean's and the spread's sup.
        let amplitude = mean_full
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max)
            .max(std_full.iter().cloned().fold(0.0, f64::max));
        let discrepancy = mean_full
            .iter()
            .zip(&mean_reduced)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let ratio = discrepancy / amplitude;
        assert!(
            ratio <= 0.15,
            "criterion 8 FAIL: {name} profiles differ by {ratio:.3} of amplitude"
        );
        detail.push_str(&format!("{name}:{ratio:.3} "));
    }
    println!("criterion 8 PASS: conditional mean profiles agree ({detail})");
}

#[test]
fn criterion_09_jump_bimodality() {
    let (study, spec, _) = jump_fixture();
    let options = JumpEnsembleOptions {
        n_paths: 1_000,
        base_seed: 7_071,
        t_end: 2_000.0,
        pool_stride: 50,
        approximation: JumpApproximation::ConvolutionOnly,
    };
    let ensemble = run_jump_ensemble(study, spec, options).unwrap();
    assert!(
        ensemble.failures.is_empty(),
        "criterion 9 FAIL: {} aborted paths",
        ensemble.failures.len()
    );
    assert_eq!(ensemble.outcomes.len(), 1_000, "criterion 9 FAIL: path count");
    // The reduced runs start at the largest trained backward time.
    assert_eq!(ensemble.t0, spec.max_tau(), "criterion 9 FAIL: t0 contract");
    let full = ensemble.pooled_full();
    let reduced = ensemble.pooled_reduced();
    let lo = full
        .iter()
        .chain(&reduced)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = full
        .iter()
        .chain(&reduced)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    // Fine bins: with 4e6 pooled samples per side the peak abscissas need
    // sub-2% bin widths, far below the 5% agreement tolerance.
    let hist_full = Histogram::from_samples(&full, 159, Some((lo, hi))).unwrap();
    let hist_reduced = Histogram::from_samples(&reduced, 159, Some((lo, hi))).unwrap();

    let (w_low, w_high) = study.well_centers;
    let mut detail = String::new();
    for (hist, label) in [(&hist_full, "full"), (&hist_reduced, "reduced")] {
        let (p_low, d_low) = hist.refined_peak_in(w_low - 0.6, 0.5 * w_low).unwrap();
        let (p_high, d_high) = hist.refined_peak_in(0.5 * w_high, w_high + 0.8).unwrap();
        // Bimodality: a genuine valley between the two peaks.
        let valley = hist
            .centers()
            .iter()
            .zip(&hist.density)
            .filter(|(c, _)| **c > p_low + 0.2 && **c < p_high - 0.2)
            .map(|(_, d)| *d)
            .fold(f64::INFINITY, f64::min);
        assert!(
            valley < 0.6 * d_low.min(d_high),
            "criterion 9 FAIL: {label} PDF not bimodal (valley {valley:.3} vs peaks {d_low:.3}/{d_high:.3})"
        );
        detail.push_str(&format!("{label}: peaks {p_low:.3}/{p_high:.3} "));
    }

    let (pf_low, _) = hist_full.refined_peak_in(w_low - 0.6, 0.5 * w_low).unwrap();
    let (pf_high, _) = hist_full.refined_peak_in(0.5 * w_high, w_high + 0.8).unwrap();
    let (pr_low, _) = hist_reduced.refined_peak_in(w_low - 0.6, 0.5 * w_low).unwrap();
    let (pr_high, _) = hist_reduced
        .refined_peak_in(0.5 * w_high, w_high + 0.8)
        .unwrap();
    assert!(
        (pr_low - pf_low).abs() <= 0.05 * pf_low.abs(),
        "criterion 9 FAIL: lower peaks {pf_low:.3} vs {pr_low:.3}"
    );
    assert!(
        (pr_high - pf_high).abs() <= 0.05 * pf_high.abs(),
        "criterion 9 FAIL: upper peaks {pf_high:.3} vs {pr_high:.3}"
    );

    // Outer-excursion mass beyond the stable wells (quarter-separation
    // margin); the reduced model overestimates these excursions slightly.
    let margin = 0.25 * (w_high - w_low);
    let outer = |samples: &[f64]| -> f64 {
        samples
            .iter()
            .filter(|v| **v < w_low - margin || **v > w_high + margin)
            .count() as f64
            / samples.len() as f64
    };
    let outer_full = outer(&full);
    let outer_reduced = outer(&reduced);
    assert!(
        outer_reduced >= outer_full,
        "criterion 9 FAIL: outer mass reduced {outer_reduced:.4} < full {outer_full:.4}"
    );
    println!(
        "criterion 9 PASS: {detail}; outer mass full {outer_full:.4} <= reduced {outer_reduced:.4}"
    );
}

#[test]
fn criterion_10_structural_identities() {
    let (study, spec, _) = sace_fixture();

    // Galerkin degeneration and the two closure routes.
    let closure = SaceClosure::new(
        spec.clone(),
        study.template.clone(),
        study.basis().clone(),
        study.cfg.dt,
    )
    .unwrap();
    let rng = CounterRng::new(31, Stream::Test, 0, 0);
    let mut scratch = opm::reduced::ClosureScratch::new(&closure);
    let mut worst_route: f64 = 0.0;
    let mut worst_galerkin: f64 = 0.0;
    for trial in 0..10u64 {
        let y: Vec<f64> = (0..4).map(|i| rng.uniform_symmetric(trial * 8 + i)).collect();
        let phi: Vec<f64> = (4..8)
            .map(|i| 0.3 * rng.uniform_symmetric(trial * 8 + i))
            .collect();
        closure.nonlinear_rhs(&y, &phi, &mut scratch);
        let tensor = closure.nonlinear_rhs_tensor(&y, &phi);
        for i in 0..4 {
            worst_route = worst_route.max((scratch.rhs()[i] - tensor[i]).abs());
        }
        let galerkin = closure.nonlinear_rhs_tensor(&y, &[0.0; 4]);
        for i in 0..4 {
            let mut direct = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        direct += study.template.tensors.cubic(i, a, b, c) * y[a] * y[b] * y[c];
                    }
                }
            }
            worst_galerkin = worst_galerkin.max((galerkin[i] - direct).abs());
        }
    }
    assert!(
        worst_route < 1e-12,
        "criterion 10 FAIL: closure routes differ by {worst_route:.2e}"
    );
    assert!(
        worst_galerkin < 1e-12,
        "criterion 10 FAIL: Galerkin degeneration off by {worst_galerkin:.2e}"
    );

    // Jump closure coefficients against direct quadrature.
    let (jump, jspec, _) = jump_fixture();
    let jclosure = JumpClosure::new(
        jspec.clone(),
        jump.template.clone(),
        jump.cfg.dt,
        JumpApproximation::ConvolutionOnly,
    )
    .unwrap();
    let basis = jump.basis();
    let weight: Vec<f64> = jump
        .u_star_grid
        .iter()
        .map(|us| jump.cfg.lambda * (1.0 - 3.0 * jump.cfg.eps * us))
        .collect();
    let dirs = [0usize, 2, 4];
    let mut worst_coeff: f64 = 0.0;
    for (ai, &a) in dirs.iter().enumerate() {
        for (bi, &b) in dirs.iter().enumerate() {
            let prod: Vec<f64> = (0..basis.grid.points)
                .map(|p| weight[p] * basis.modes[a][p] * basis.modes[b][p])
                .collect();
            let expected = basis.grid.inner(&prod, &basis.modes[0]);
            worst_coeff = worst_coeff.max((jclosure.quad_coefficient(ai, bi) - expected).abs());
        }
    }
    assert!(
        worst_coeff <= 1e-8,
        "criterion 10 FAIL: expansion coefficients off by {worst_coeff:.2e}"
    );

    // Ito identity at sqrt(dt) rate.
    let dt_fine = 1e-4;
    let paths = BrownianPaths::sample(7, 0, &[5], &[1.0], dt_fine, -2.0, 3.0).unwrap();
    let kappa = -1.1;
    let tau = 1.0;
    let t = 2.0;
    let mut errs = Vec::new();
    for stride in [100usize, 10, 1] {
        let dt = dt_fine * stride as f64;
        let steps = (tau / dt).round() as usize;
        let mut x = 0.0;
        for k in 0..steps {
            let s = t - tau + k as f64 * dt;
            x += dt * kappa * x + (paths.value(5, s + dt) - paths.value(5, s));
        }
        let values: Vec<f64> = (0..=steps)
            .map(|k| {
                let s = t - tau + k as f64 * dt;
                (kappa * (t - s)).exp() * paths.value(5, s)
            })
            .collect();
        let quad = opm::grid::trapezoid_series(&values, dt);
        let identity = paths.value(5, t) - (kappa * tau).exp() * paths.value(5, t - tau)
            + kappa * quad;
        errs.push((identity - x).abs());
    }
    let root10 = 10f64.sqrt();
    assert!(
        errs[1] <= errs[0] / root10 * 3.0 && errs[2] <= errs[1] / root10 * 3.0,
        "criterion 10 FAIL: Ito identity errors {errs:?}"
    );

    // Non-resonance clearance of the working regime.
    let report = check_nonresonance(
        &study.template.eigenvalues,
        &study.template.mode_sigma,
        4,
        8,
        3,
        &|n, tup| study.template.tensors.cubic(n, tup[0], tup[1], tup[2]),
    );
    assert!(
        report.all_clear(),
        "criterion 10 FAIL: {} resonance violations",
        report.violations.len()
    );

    // Energy monotonicity for the deterministic flow.
    let silent = BrownianPaths::sample(0, 0, &[], &[], 1e-2, 0.0, 2.0).unwrap();
    let basis8 = std::sync::Arc::new(
        opm::spectral::build_sine_basis(study.cfg.domain_length, 8, 201).unwrap(),
    );
    for trial in 0..25u64 {
        let mut u0 = vec![0.0; study.cfg.n_modes];
        for (m, c) in u0.iter_mut().take(8).enumerate() {
            *c = rng.uniform_symmetric(1000 + trial * 8 + m as u64);
        }
        let traj = study.solver.integrate(&u0, &silent, 2.0, 1).unwrap();
        let mut prev = f64::INFINITY;
        for snap in &traj.snapshots {
            let e = gl_energy(&SpectralField::new(snap[..8].to_vec(), 4, basis8.clone()));
            assert!(
                e <= prev + 1e-10,
                "criterion 10 FAIL: energy increased {prev} -> {e}"
            );
            prev = e;
        }
    }

    // Bit-exact reproducibility of a small paired ensemble.
    let options = SaceEnsembleOptions {
        n_paths: 3,
        base_seed: 77,
        t_end: 5.0,
        ..Default::default()
    };
    let a = run_sace_ensemble(study, &spec, options.clone()).unwrap();
    let b = run_sace_ensemble(study, &spec, options).unwrap();
    for (oa, ob) in a.outcomes.iter().zip(&b.outcomes) {
        assert_eq!(oa.full_terminal, ob.full_terminal, "criterion 10 FAIL: reproducibility");
        assert_eq!(
            oa.reduced_terminal, ob.reduced_terminal,
            "criterion 10 FAIL: reproducibility"
        );
    }

    println!(
        "criterion 10 PASS: closure routes {worst_route:.1e}, coefficients {worst_coeff:.1e}, Ito {errs:?}, non-resonance clear, energy monotone, runs bit-identical"
    );
}

#[test]
fn resolved_energy_stays_small_through_the_transient() {
    // Companion check to the ensemble criteria: over (0, 10) the resolved
    // modes hold below 1% of the total energy on a typical path.
    let (study, _, _) = sace_fixture();
    let paths = study.sample_noise(SACE_TRAIN_SEED, 0, 10.0, 1.0).unwrap();
    let traj = study
        .solver
        .integrate(&vec![0.0; study.cfg.n_modes], &paths, 10.0, 1)
        .unwrap();
    let mut resolved = 0.0;
    let mut total = 0.0;
    for snap in &traj.snapshots {
        for (n, c) in snap.iter().take(8).enumerate() {
            let e = c * c;
            total += e;
            if n < 4 {
                resolved += e;
            }
        }
    }
    let fraction = resolved / total;
    assert!(fraction < 0.01, "resolved fraction {fraction:.4}");
    println!("transient energy split: resolved fraction {:.3}%", 100.0 * fraction);
}

#[test]
fn acf_of_mode_six_decays_like_the_resolved_modes() {
    // Integrated-ACF ordering: mode 6 sits closer to mode 4 than modes 7, 8
    // do, reflecting the weak time-scale separation at the cutoff.
    let (study, _, _) = sace_fixture();
    let max_lag = 60;
    let stride = 5;
    let mut sums = [0.0f64; 5]; // modes 4..8
    let n_paths = 200u64;
    for p in 0..n_paths {
        let seed = opm::rng::derive_path_seed(909, p);
        let paths = study.sample_noise(seed, 0, 40.0, 1.0).unwrap();
        let traj = study
            .solver
            .integrate(&vec![0.0; study.cfg.n_modes], &paths, 40.0, stride)
            .unwrap();
        for (slot, mode) in (3..8).enumerate() {
            let series = traj.mode_series(mode);
            let a = acf(&series, max_lag).unwrap();
            sums[slot] += a.iter().sum::<f64>();
        }
    }
    let integrated: Vec<f64> = sums.iter().map(|s| s / n_paths as f64).collect();
    let d6 = (integrated[2] - integrated[0]).abs();
    let d7 = (integrated[3] - integrated[0]).abs();
    let d8 = (integrated[4] - integrated[0]).abs();
    assert!(
        d6 < d7 && d6 < d8,
        "integrated-ACF ordering violated: |I6-I4| = {d6:.2} vs |I7-I4| = {d7:.2}, |I8-I4| = {d8:.2}"
    );
    println!("integrated ACFs (modes 4..8): {integrated:?}");
}
