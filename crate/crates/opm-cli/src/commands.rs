//! Subcommand implementations: experiment orchestration and file output.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use opm::bifurcation::{
    continue_branch, lower_branch_to_fold, three_states_at, FoldProblem, DEFAULT_D_LAMBDA,
};
use opm::ensemble::{
    pdf_and_distance, profile_mean_std, run_jump_ensemble, run_sace_ensemble, wilson_interval,
    JumpEnsembleOptions, SaceEnsemble, SaceEnsembleOptions, TransitionClass,
};
use opm::parameterization::{NoiseRealization, ParameterizationSpec};
use opm::pipeline::{JumpStudy, SaceStudy};
use opm::reduced::{
    run_reduced_jump, run_reduced_sace, JumpApproximation, JumpClosure, SaceClosure,
};

use crate::config::{ExperimentConfig, ModelChoice};
use crate::manifest::{emit, RunManifest};

fn ensure_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))
}

pub fn cmd_simulate(cfg: &ExperimentConfig, out: &Path, seed: u64) -> Result<()> {
    ensure_dir(out)?;
    let mut manifest = RunManifest::new("simulate", cfg);
    match cfg.model {
        ModelChoice::Sace => {
            let section = &cfg.sace;
            let study = SaceStudy::build(section.solver_config())?;
            let t_end = section.train_t_end_time;
            let paths = study.sample_noise(seed, 0, t_end, section.tau_end_time)?;
            let traj = study
                .solver
                .integrate(&vec![0.0; section.solver_modes_count], &paths, t_end, 1)?;
            emit(out, &mut manifest, "trajectory_modes.csv", &traj.to_csv())?;
            let coarse = study.solver.integrate(
                &vec![0.0; section.solver_modes_count],
                &paths,
                t_end,
                100,
            )?;
            emit(
                out,
                &mut manifest,
                "trajectory_grid.csv",
                &coarse.to_grid_csv(study.basis()),
            )?;
            emit(out, &mut manifest, "noise.csv", &paths.to_csv())?;
            emit(out, &mut manifest, "basis.csv", &study.basis().to_csv())?;
            emit(out, &mut manifest, "tensors.csv", &study.tensors.to_csv())?;
        }
        ModelChoice::Jump => {
            let section = &cfg.jump;
            let study = JumpStudy::build(section.solver_config(), section.continuation_seed)?;
            let t_end = section.train_t_end_time;
            let signal = study.sample_noise(seed, 0, t_end, section.tau_end_time)?;
            let traj = study
                .solver
                .integrate(&study.default_initial(), &signal, t_end, 1)?;
            emit(out, &mut manifest, "trajectory_modes.csv", &traj.to_csv())?;
            emit(out, &mut manifest, "noise.csv", &signal.to_csv())?;
            emit(out, &mut manifest, "basis.csv", &study.basis().to_csv())?;
            emit(out, &mut manifest, "tensors.csv", &study.tensors.to_csv())?;
        }
    }
    manifest.write(out)?;
    println!("simulate: wrote {}", out.display());
    Ok(())
}

pub fn cmd_train(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<()> {
    ensure_dir(out)?;
    let mut manifest = RunManifest::new("train", cfg);
    let (spec, curves) = match cfg.model {
        ModelChoice::Sace => {
            let section = &cfg.sace;
            let study = SaceStudy::build(section.solver_config())?;
            study.train(
                seed.unwrap_or(section.train_seed),
                (section.train_t_start_time, section.train_t_end_time),
                &section.tau_grid(),
            )?
        }
        ModelChoice::Jump => {
            let section = &cfg.jump;
            let study = JumpStudy::build(section.solver_config(), section.continuation_seed)?;
            study.train(
                seed.unwrap_or(section.train_seed),
                (0.0, section.train_t_end_time),
                &section.tau_grid(),
            )?
        }
    };
    for curve in &curves {
        emit(
            out,
            &mut manifest,
            &format!("defect_mode{}.csv", curve.mode + 1),
            &curve.to_csv(),
        )?;
    }
    emit(out, &mut manifest, "spec.json", &spec.to_json()?)?;
    manifest.write(out)?;
    for m in &spec.modes {
        println!(
            "train: mode {} tau* = {:.3}{}",
            m.mode + 1,
            m.tau,
            if m.asymptotic { " (asymptotic)" } else { "" }
        );
    }
    println!("train: wrote {}", out.display());
    Ok(())
}

fn load_spec(path: &Path) -> Result<ParameterizationSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read spec {}", path.display()))?;
    Ok(ParameterizationSpec::from_json(&text)?)
}

pub fn cmd_reduce(cfg: &ExperimentConfig, spec_path: &Path, out: &Path, seed: u64) -> Result<()> {
    ensure_dir(out)?;
    let spec = load_spec(spec_path)?;
    let mut manifest = RunManifest::new("reduce", cfg);
    match cfg.model {
        ModelChoice::Sace => {
            let section = &cfg.sace;
            let study = SaceStudy::build(section.solver_config())?;
            let t_end = section.ensemble_t_end_time;
            let paths = study.sample_noise(seed, 0, t_end, spec.max_tau())?;
            let closure = SaceClosure::new(
                spec.clone(),
                study.template.clone(),
                study.basis().clone(),
                section.dt_time,
            )?;
            let noise = NoiseRealization::Brownian(&paths);
            let (traj, _) = run_reduced_sace(
                &closure,
                &noise,
                &vec![0.0; section.resolved_count],
                0.0,
                t_end,
                1,
                section.zeroed_memory_start,
            )?;
            emit(out, &mut manifest, "reduced_trajectory.csv", &traj.to_csv())?;
        }
        ModelChoice::Jump => {
            let section = &cfg.jump;
            let study = JumpStudy::build(section.solver_config(), section.continuation_seed)?;
            let t_end = section.ensemble_t_end_time;
            let t0 = spec.max_tau();
            let signal = study.sample_noise(seed, 0, t_end, spec.max_tau())?;
            // The closure starts from the full solution's first-mode
            // amplitude at t0.
            let head = study
                .solver
                .integrate(&study.default_initial(), &signal, t0, 1)?;
            let y0 = head.snapshots.last().unwrap()[0];
            let approximation = if section.full_parameterization {
                JumpApproximation::Full
            } else {
                JumpApproximation::ConvolutionOnly
            };
            let closure =
                JumpClosure::new(spec.clone(), study.template.clone(), section.dt_time, approximation)?;
            let noise = NoiseRealization::Jump(&signal);
            let (traj, _) = run_reduced_jump(&closure, &noise, y0, t0, t_end, 1)?;
            emit(out, &mut manifest, "reduced_trajectory.csv", &traj.to_csv())?;
        }
    }
    manifest.write(out)?;
    println!("reduce: wrote {}", out.display());
    Ok(())
}

fn profiles_csv(
    xs: &[f64],
    full: (&[f64], &[f64]),
    reduced: (&[f64], &[f64]),
) -> String {
    let mut s = String::from("x,mean_full,std_full,mean_reduced,std_reduced\n");
    for i in 0..xs.len() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            xs[i], full.0[i], full.1[i], reduced.0[i], reduced.1[i]
        );
    }
    s
}

pub fn cmd_ensemble(
    cfg: &ExperimentConfig,
    spec_path: &Path,
    out: &Path,
    paths_override: Option<u64>,
    seed: u64,
    approx: Option<&str>,
) -> Result<()> {
    ensure_dir(out)?;
    let spec = load_spec(spec_path)?;
    let mut manifest = RunManifest::new("ensemble", cfg);
    match cfg.model {
        ModelChoice::Sace => {
            let section = &cfg.sace;
            let study = SaceStudy::build(section.solver_config())?;
            let options = SaceEnsembleOptions {
                n_paths: paths_override.unwrap_or(section.ensemble_paths_count),
                base_seed: seed,
                t_end: section.ensemble_t_end_time,
                rare_threshold: section.rare_threshold_amp,
                zeroed_memory: section.zeroed_memory_start,
                ..Default::default()
            };
            let ensemble = run_sace_ensemble(&study, &spec, options)?;
            let fm = ensemble.full_metrics();
            let rm = ensemble.reduced_metrics();
            let bins = opm::ensemble::freedman_diaconis_bins(&fm).clamp(10, 200);
            let (hist_full, hist_reduced, l1) = pdf_and_distance(&fm, &rm, bins)?;
            emit(out, &mut manifest, "histogram_full.csv", &hist_full.to_csv())?;
            emit(
                out,
                &mut manifest,
                "histogram_reduced.csv",
                &hist_reduced.to_csv(),
            )?;

            let mut metrics = String::from("path,seed,metric_full,metric_reduced\n");
            for o in &ensemble.outcomes {
                let _ = writeln!(
                    metrics,
                    "{},{},{},{}",
                    o.path_index, o.seed, o.full_metric, o.reduced_metric
                );
            }
            emit(out, &mut manifest, "metrics.csv", &metrics)?;

            let xs: Vec<f64> = study.basis().grid.xs().collect();
            for (class, name) in [
                (TransitionClass::Typical, "typical"),
                (TransitionClass::RarePlus, "rare_plus"),
                (TransitionClass::RareMinus, "rare_minus"),
            ] {
                let pf = ensemble.class_profiles(class, false);
                let pr = ensemble.class_profiles(class, true);
                if pf.is_empty() || pr.is_empty() {
                    continue;
                }
                let (mf, sf) = profile_mean_std(&pf)?;
                let (mr, sr) = profile_mean_std(&pr)?;
                emit(
                    out,
                    &mut manifest,
                    &format!("profiles_{name}.csv"),
                    &profiles_csv(&xs, (&mf, &sf), (&mr, &sr)),
                )?;
            }

            for (mode, set) in ensemble.acf_sets()? {
                let mut s = String::from("lag_time,mean,std\n");
                let lag_dt = section.dt_time * ensemble.options.acf_stride as f64;
                for (lag, (m, sd)) in set.mean.iter().zip(&set.std).enumerate() {
                    let _ = writeln!(s, "{},{},{}", lag as f64 * lag_dt, m, sd);
                }
                emit(out, &mut manifest, &format!("acf_mode{}.csv", mode + 1), &s)?;
            }

            let thr = section.rare_threshold_amp;
            let rare_full = SaceEnsemble::rare_fraction(&fm, thr);
            let rare_reduced = SaceEnsemble::rare_fraction(&rm, thr);
            let n = fm.len() as u64;
            let wf = wilson_interval((rare_full * n as f64).round() as u64, n, 2.576);
            let wr = wilson_interval((rare_reduced * n as f64).round() as u64, n, 2.576);
            let summary = serde_json::json!({
                "paths": n,
                "failures": ensemble.failures,
                "rare_threshold": thr,
                "rare_fraction_full": rare_full,
                "rare_fraction_full_wilson99": wf,
                "rare_fraction_reduced": rare_reduced,
                "rare_fraction_reduced_wilson99": wr,
                "l1_distance": l1,
            });
            emit(
                out,
                &mut manifest,
                "summary.json",
                &serde_json::to_string_pretty(&summary)?,
            )?;
            println!(
                "ensemble: {} paths in {:.1}s, rare full {:.4} / reduced {:.4}, L1 {:.3}",
                n, ensemble.elapsed_seconds, rare_full, rare_reduced, l1
            );
        }
        ModelChoice::Jump => {
            let section = &cfg.jump;
            let study = JumpStudy::build(section.solver_config(), section.continuation_seed)?;
            let approximation = match approx.unwrap_or(if section.full_parameterization {
                "full"
            } else {
                "ou"
            }) {
                "full" => JumpApproximation::Full,
                "ou" => JumpApproximation::ConvolutionOnly,
                other => bail!("unknown approximation {other:?} (expected full|ou)"),
            };
            let options = JumpEnsembleOptions {
                n_paths: paths_override.unwrap_or(section.ensemble_paths_count),
                base_seed: seed,
                t_end: section.ensemble_t_end_time,
                approximation,
                ..Default::default()
            };
            let ensemble = run_jump_ensemble(&study, &spec, options)?;
            let full = ensemble.pooled_full();
            let reduced = ensemble.pooled_reduced();
            let (hist_full, hist_reduced, l1) = pdf_and_distance(&full, &reduced, 159)?;
            emit(out, &mut manifest, "pdf_full.csv", &hist_full.to_csv())?;
            emit(out, &mut manifest, "pdf_reduced.csv", &hist_reduced.to_csv())?;
            let (w_min, w_max) = study.well_centers;
            let summary = serde_json::json!({
                "paths": ensemble.outcomes.len(),
                "failures": ensemble.failures,
                "t0": ensemble.t0,
                "well_centers": [w_min, w_max],
                "l1_distance": l1,
            });
            emit(
                out,
                &mut manifest,
                "summary.json",
                &serde_json::to_string_pretty(&summary)?,
            )?;
            println!(
                "ensemble: {} paths in {:.1}s, pooled {} samples/side, L1 {:.3}",
                ensemble.outcomes.len(),
                ensemble.elapsed_seconds,
                full.len(),
                l1
            );
        }
    }
    manifest.write(out)?;
    println!("ensemble: wrote {}", out.display());
    Ok(())
}

pub fn cmd_bifurcation(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let section = &cfg.jump;
    let mut manifest = RunManifest::new("bifurcation", cfg);
    let eps = section.eps_star / 2.0;
    let problem = FoldProblem::new(
        section.domain_length_space,
        JumpStudy::GALERKIN_MODES,
        section.grid_points_count,
        eps,
    )?;
    let (lower, lambda_star) = lower_branch_to_fold(&problem)?;
    emit(out, &mut manifest, "branch_lower.csv", &lower.to_csv())?;

    // Seed the other branches a few increments below the fold and continue
    // them across the S-interval.
    let lambda_seed = lambda_star - 5.0 * DEFAULT_D_LAMBDA;
    let [_, mid, high] = three_states_at(&problem, lambda_seed, section.continuation_seed)?;
    let middle = continue_branch(&problem, &mid.coeffs, lambda_seed, -DEFAULT_D_LAMBDA, 1.25, 1e-7)?;
    emit(out, &mut manifest, "branch_middle.csv", &middle.to_csv())?;
    let upper_down =
        continue_branch(&problem, &high.coeffs, lambda_seed, -DEFAULT_D_LAMBDA, 1.25, 1e-7)?;
    let upper_up =
        continue_branch(&problem, &high.coeffs, lambda_seed, DEFAULT_D_LAMBDA, 1.40, 1e-7)?;
    let mut upper = upper_down;
    upper.points.reverse();
    upper.points.extend(upper_up.points.into_iter().skip(1));
    emit(out, &mut manifest, "branch_upper.csv", &upper.to_csv())?;

    let states = three_states_at(&problem, section.lambda_bif, section.continuation_seed)?;
    let mut s = String::from("state,a1,stable\n");
    for (name, st) in ["minimal", "unstable", "maximal"].iter().zip(&states) {
        let _ = writeln!(s, "{},{},{}", name, st.coeffs[0], u8::from(st.stable));
    }
    emit(out, &mut manifest, "states_at_lambda.csv", &s)?;

    let summary = serde_json::json!({
        "lambda_star": lambda_star,
        "eps": eps,
        "states_at_lambda": section.lambda_bif,
        "multiplicity": states.len(),
    });
    emit(
        out,
        &mut manifest,
        "summary.json",
        &serde_json::to_string_pretty(&summary)?,
    )?;
    manifest.write(out)?;
    println!("bifurcation: lambda* = {lambda_star:.4}; wrote {}", out.display());
    Ok(())
}

/// Fast oracle suite: structural identities checked in seconds, one
/// pass/fail line each. Returns an error if any check fails.
pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<()> {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // Sine basis orthonormality and projection round trip.
    {
        let study = SaceStudy::build(cfg.sace.solver_config())?;
        let defect = study.basis().orthonormality_defect();
        check(
            "sine-orthonormality",
            defect < 1e-8,
            format!("defect {defect:.2e}"),
        );
        let coeffs: Vec<f64> = (0..8).map(|i| 0.1 * (i as f64 + 1.0)).collect();
        let values = study.basis().reconstruct(&coeffs);
        let back = study.basis().project(&values, 8);
        let worst = coeffs
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check(
            "projection-round-trip",
            worst < 1e-10,
            format!("sup error {worst:.2e}"),
        );

        // Cubic tensor against the analytic value C^1_111 = -3/(2L).
        let c = study.template.tensors.cubic(0, 0, 0, 0);
        let exact = -3.0 / (2.0 * cfg.sace.domain_length_space);
        check(
            "cubic-tensor-analytic",
            (c - exact).abs() < 1e-10,
            format!("C1_111 {c:.6} vs {exact:.6}"),
        );

        // Non-resonance clearance of the working regime.
        let report = opm::parameterization::check_nonresonance(
            &study.template.eigenvalues,
            &study.template.mode_sigma,
            cfg.sace.resolved_count,
            cfg.sace.forced_max_count,
            3,
            &|n, t| study.template.tensors.cubic(n, t[0], t[1], t[2]),
        );
        check(
            "non-resonance",
            report.all_clear(),
            format!("{} violations over {} checks", report.violations.len(), report.checked),
        );

        // Memory equation against the quadrature oracle.
        let dt = 1e-3;
        let paths =
            opm::forcing::BrownianPaths::sample(cfg.base_seed, 0, &[4], &[1.0], dt, -2.0, 3.0)?;
        let mut mem = opm::forcing::init_gaussian_memory(&paths, 4, -0.9, 1.5, 0.0)?;
        for _ in 0..(3.0 / dt) as usize {
            mem.step_gaussian(&paths, dt);
        }
        let oracle = opm::forcing::gaussian_memory_quadrature(&paths, 4, -0.9, 1.5, 3.0)?;
        let rel = (mem.value - oracle).abs() / (1.0 + oracle.abs());
        check(
            "memory-rde-oracle",
            rel <= 1e-3,
            format!("relative error {rel:.2e}"),
        );

        // Closed-form parameterization against the backward-forward oracle.
        let paths4 = opm::forcing::BrownianPaths::sample(
            cfg.base_seed,
            1,
            &[4, 5, 6, 7],
            &[cfg.sace.sigma_amp; 4],
            dt,
            -3.0,
            2.0,
        )?;
        let x = [0.5, -0.3, 0.2, 0.1];
        let mut worst_rel: f64 = 0.0;
        for mode in 4..8 {
            let numeric = opm::parameterization::integrate_bf_numeric(
                &study.template,
                mode,
                &x,
                0.0,
                1.2,
                1.5,
                dt,
                &NoiseRealization::Brownian(&paths4),
            )?;
            let par = study.template.instantiate(mode, 1.2, false);
            let mem = opm::forcing::init_gaussian_memory(&paths4, mode, par.rate, 1.2, 1.5)?;
            let closed = par.eval_gaussian(&x, 1.5, &mem, &paths4);
            worst_rel = worst_rel.max((numeric - closed).abs() / (1.0 + closed.abs()));
        }
        check(
            "bf-oracle",
            worst_rel <= 1e-3,
            format!("worst relative error {worst_rel:.2e}"),
        );

        // Galerkin degeneration of the closure.
        let spec = opm::parameterization::ParameterizationSpec {
            version: opm::parameterization::SPEC_FORMAT_VERSION,
            model: opm::parameterization::ModelKind::Sace,
            resolved: cfg.sace.resolved_count,
            n_total: cfg.sace.forced_max_count,
            modes: (cfg.sace.resolved_count..cfg.sace.forced_max_count)
                .map(|n| study.template.instantiate(n, 1.0, false))
                .collect(),
            training_seed: 0,
            training_window: (0.0, 1.0),
            tau_grid: (0.0, 0.05, 10.0),
        };
        let closure = SaceClosure::new(
            spec,
            study.template.clone(),
            study.basis().clone(),
            cfg.sace.dt_time,
        )?;
        let y = [0.3, -0.2, 0.15, 0.05];
        let tensor = closure.nonlinear_rhs_tensor(&y, &[0.0; 4]);
        let mut direct = [0.0; 4];
        for i in 0..4 {
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        direct[i] +=
                            study.template.tensors.cubic(i, a, b, c) * y[a] * y[b] * y[c];
                    }
                }
            }
        }
        let worst = tensor
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check(
            "galerkin-degeneration",
            worst < 1e-12,
            format!("sup gap {worst:.2e}"),
        );
    }

    // Jump-side structural identities.
    {
        let study = JumpStudy::build(cfg.jump.solver_config(), cfg.jump.continuation_seed)?;
        let reference_spectrum = [0.1815, -7.4966, -19.9665, -37.2840, -59.5108];
        let worst_rel = study.basis().eigenvalues[..5]
            .iter()
            .zip(&reference_spectrum)
            .map(|(b, p)| (b - p).abs() / p.abs().max(1.0))
            .fold(0.0, f64::max);
        check(
            "linearized-spectrum",
            worst_rel <= 1e-3,
            format!("worst deviation {worst_rel:.2e} (scaled)"),
        );
        let unstable = study
            .basis()
            .eigenvalues
            .iter()
            .filter(|b| **b > 0.0)
            .count();
        check(
            "single-unstable-mode",
            unstable == 1,
            format!("{unstable} positive eigenvalues"),
        );

        // Closure coefficients against direct quadrature.
        let spec = opm::parameterization::ParameterizationSpec {
            version: opm::parameterization::SPEC_FORMAT_VERSION,
            model: opm::parameterization::ModelKind::Jump,
            resolved: 1,
            n_total: JumpStudy::TENSOR_MODES,
            modes: vec![
                study.template.instantiate(2, 0.05, false),
                study.template.instantiate(4, 0.03, false),
            ],
            training_seed: 0,
            training_window: (0.0, 1.0),
            tau_grid: (0.0, 0.01, 2.0),
        };
        let closure = JumpClosure::new(
            spec,
            study.template.clone(),
            cfg.jump.dt_time,
            JumpApproximation::ConvolutionOnly,
        )?;
        let basis = study.basis();
        let g = &basis.grid;
        let weight: Vec<f64> = study
            .u_star_grid
            .iter()
            .map(|us| cfg.jump.lambda_bif * (1.0 - 3.0 * (cfg.jump.eps_star / 2.0) * us))
            .collect();
        let mut worst: f64 = 0.0;
        let dirs = [0usize, 2, 4];
        for (ai, &a) in dirs.iter().enumerate() {
            for (bi, &b) in dirs.iter().enumerate() {
                let prod: Vec<f64> = (0..g.points)
                    .map(|p| weight[p] * basis.modes[a][p] * basis.modes[b][p])
                    .collect();
                let quad = g.inner(&prod, &basis.modes[0]);
                worst = worst.max((closure.quad_coefficient(ai, bi) - quad).abs());
            }
        }
        check(
            "jump-closure-coefficients",
            worst < 1e-8,
            format!("sup gap {worst:.2e}"),
        );
    }

    if failures > 0 {
        Err(anyhow!("{failures} verification checks failed"))
    } else {
        println!("verify: all checks passed");
        Ok(())
    }
}
