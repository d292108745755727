//! Experiment orchestration: validate, approximate, recover, sweep.
//!
//! Module errors do not abort the process. They land in `report.json` as a
//! machine-readable `{kind, message}` object and flip the run to `fail`, so
//! a caller can always inspect what happened from the artifacts alone.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use branchline_core::degeneracy::DEFAULT_BAND_TOL;
use branchline_core::spectral::forward_transform;
use branchline_core::{
    approximation_error, choose_centers, degenerate_approximation, extrapolate_from_segment,
    interval_to_index_set, sample_reconstruct, sampling_indices, sweep_deltas,
    validate_structure_set, verify_coincidence, verify_degeneracy, BranchingProcess,
    CenterPolicy, DegeneracyPlan, Error, ExtrapolationOptions, RecoveryReport, Result, Signal,
    SolverChoice, SolverOptions, Spectrum, Verdict, Violation,
};
use num_complex::Complex64;

use crate::config::{ExperimentConfig, PlanPolicy, RecoveryMode, RecoverySpec, SolverKind};
use crate::generate::generate_fixture;
use crate::plot::emit_plot_data;
use crate::report::{
    atomic_write, sci, ApproximationSection, BranchApproxRow, BranchErrorRow, DegeneracySection,
    RecoverySection, Report, SweepRow, SweepSection, ValidationSection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verb {
    Validate,
    Approximate,
    Recover,
    Sweep,
}

/// Number of halvings in a delta sweep: delta/2, delta/4, ... down to
/// delta/64.
const SWEEP_STEPS: u32 = 6;

/// Slack for the monotonicity check on measured sweep errors. The band
/// energies are exactly nested, so only rounding noise can go the wrong way.
const SWEEP_SLACK: f64 = 1e-9;

pub struct RunOutcome {
    pub report: Report,
    pub report_path: PathBuf,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.report.status == "pass"
    }
}

fn violation_text(v: &Violation) -> String {
    match v {
        Violation::SelfPair { triple } => format!("triple {triple}: d == k"),
        Violation::BranchOutOfRange { triple, branch } => {
            format!("triple {triple}: branch {branch} out of range")
        }
        Violation::BadInterval { triple, reason } => format!("triple {triple}: {reason}"),
        Violation::EmptyOnGrid { triple } => {
            format!("triple {triple}: interval covers no grid point")
        }
    }
}

fn build_plan(cfg: &ExperimentConfig, m: usize) -> Result<DegeneracyPlan> {
    let grid = cfg.grid.build()?;
    let policy = match cfg.plan.policy {
        PlanPolicy::Uniform => CenterPolicy::Uniform,
        PlanPolicy::Explicit => CenterPolicy::Explicit(cfg.plan.centers.clone().unwrap_or_default()),
    };
    let skeleton = choose_centers(m, &grid, &policy)?;
    skeleton.plan(cfg.plan.delta)
}

fn signal_csv(signal: &Signal) -> String {
    let grid = signal.grid();
    let mut out = String::from("index,t,re,im\n");
    for (i, z) in signal.samples().iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{}", i, sci(grid.time(i)), sci(z.re), sci(z.im));
    }
    out
}

fn spectrum_csv(spectrum: &Spectrum) -> String {
    let grid = spectrum.grid();
    let mut out = String::from("j,omega,re,im\n");
    for j in grid.bins() {
        let z = spectrum.coeff(j);
        let _ = writeln!(out, "{},{},{},{}", j, sci(grid.omega(j)), sci(z.re), sci(z.im));
    }
    out
}

fn write_process_csvs(dir: &Path, tag: &str, process: &BranchingProcess) -> Result<()> {
    for d in 1..=process.branch_count() {
        let signal = process.branch(d);
        atomic_write(
            &dir.join(format!("signal_{tag}_b{d}.csv")),
            signal_csv(signal).as_bytes(),
        )?;
        atomic_write(
            &dir.join(format!("spectrum_{tag}_b{d}.csv")),
            spectrum_csv(&forward_transform(signal)).as_bytes(),
        )?;
    }
    Ok(())
}

fn validation_stage(report: &mut Report, fixture: &BranchingProcess) -> Result<bool> {
    let grid = fixture.grid();
    let structure_report = validate_structure_set(fixture.structure(), &grid);
    let coincidence = verify_coincidence(fixture)?;
    let structure_valid = structure_report.is_valid();
    report.validation = Some(ValidationSection {
        structure_valid,
        violations: structure_report.violations.iter().map(violation_text).collect(),
        coincidence_max_deviation: coincidence.max_deviation(),
        coincidence_scale: coincidence.scale,
        coincidence_tolerance: coincidence.tolerance,
        coincidence_pass: coincidence.pass,
    });
    report.set_check("structure", structure_valid);
    report.set_check("coincidence", coincidence.pass);
    Ok(structure_valid && coincidence.pass)
}

fn approximate_stage(
    report: &mut Report,
    out_dir: &Path,
    fixture: &BranchingProcess,
    plan: &DegeneracyPlan,
) -> Result<BranchingProcess> {
    let approx = degenerate_approximation(fixture, plan)?;
    let verdict = verify_degeneracy(&approx, plan, DEFAULT_BAND_TOL)?;
    report.degeneracy = Some(DegeneracySection {
        centers: plan.centers().to_vec(),
        delta: plan.delta(),
        band_max: verdict.band_max.clone(),
        scale: verdict.scale,
        band_tol: verdict.band_tol,
        band_pass: verdict.band_pass,
        coincidence_pass: verdict.coincidence.pass,
    });
    report.set_check("degeneracy", verdict.pass());

    let err = approximation_error(fixture, &approx, Some(plan))?;
    let predicted = err.predicted_l2.unwrap_or(0.0);
    let max_l2 = err.max_l2();
    report.approximation = Some(ApproximationSection {
        per_branch: err
            .per_branch
            .iter()
            .enumerate()
            .map(|(i, s)| BranchApproxRow {
                branch: i + 1,
                l2_error: s.l2_error,
                sup_error: s.sup_error,
            })
            .collect(),
        max_l2_error: max_l2,
        predicted_l2: predicted,
    });
    // Squared errors agree with the band-energy prediction up to rounding.
    let worst = err
        .per_branch
        .iter()
        .map(|s| (s.l2_error * s.l2_error - predicted * predicted).abs())
        .fold(0.0f64, f64::max);
    let allowed = 1e-9 * predicted * predicted + 1e-24 * verdict.scale * verdict.scale;
    report.set_check("prediction", worst <= allowed);

    write_process_csvs(out_dir, "in", fixture)?;
    write_process_csvs(out_dir, "out", &approx)?;
    Ok(approx)
}

fn solver_options(spec: &RecoverySpec) -> SolverOptions {
    let defaults = SolverOptions::default();
    SolverOptions {
        lambda: spec.lambda,
        max_iterations: spec.max_iter.unwrap_or(defaults.max_iterations),
        residual_tol: spec.tol.unwrap_or(defaults.residual_tol),
    }
}

fn recovery_stage(
    report: &mut Report,
    out_dir: &Path,
    truth: &BranchingProcess,
    plan: &DegeneracyPlan,
    spec: &RecoverySpec,
) -> Result<()> {
    let grid = truth.grid();
    let opts = ExtrapolationOptions {
        solver: match spec.solver {
            SolverKind::Direct => SolverChoice::Direct,
            SolverKind::Projection => SolverChoice::Projection,
        },
        full_recovery: true,
        solver_options: solver_options(spec),
    };
    let outcome: RecoveryReport = match spec.mode {
        RecoveryMode::Segment => {
            let interval = spec
                .interval
                .as_ref()
                .expect("validated: segment mode carries an interval")
                .build()?;
            let indices = interval_to_index_set(&interval, &grid)?;
            let data: Vec<Complex64> = indices
                .iter()
                .map(|&p| truth.branch(spec.branch).samples()[p])
                .collect();
            extrapolate_from_segment(truth, plan, spec.branch, &interval, &data, &opts)?
        }
        RecoveryMode::Sampling => {
            let tau = spec.stride.expect("validated: sampling mode carries stride");
            let s_index = spec.s_index.expect("validated: sampling mode carries s_index");
            let omega = spec.omega.expect("validated: sampling mode carries omega");
            let indices = sampling_indices(&grid, tau, s_index)?;
            let data: Vec<Complex64> = indices
                .iter()
                .map(|&p| truth.branch(1).samples()[p])
                .collect();
            sample_reconstruct(truth, plan, &data, tau, s_index, omega, &opts)?
        }
    };

    let branch_errors: Vec<BranchErrorRow> = outcome
        .branch_errors
        .as_deref()
        .unwrap_or(&[])
        .iter()
        .map(|e| BranchErrorRow {
            branch: e.branch,
            depth: e.depth,
            relative_l2: e.relative_l2,
        })
        .collect();
    let max_relative = outcome.branch_errors.as_deref().map(|errs| {
        errs.iter()
            .filter(|e| e.depth.is_some())
            .map(|e| e.relative_l2)
            .fold(0.0f64, f64::max)
    });
    let solver_ok = match spec.solver {
        SolverKind::Direct => true,
        SolverKind::Projection => outcome.converged,
    };
    report.set_check(
        "recovery",
        outcome.verdict == Verdict::Determined && !outcome.non_unique && solver_ok,
    );
    report.recovery = Some(RecoverySection {
        mode: match spec.mode {
            RecoveryMode::Segment => "segment",
            RecoveryMode::Sampling => "sampling",
        }
        .to_string(),
        branch: spec.branch,
        solver: match spec.solver {
            SolverKind::Direct => "direct",
            SolverKind::Projection => "projection",
        }
        .to_string(),
        verdict: match outcome.verdict {
            Verdict::Determined => "determined",
            Verdict::Underdetermined => "underdetermined",
        }
        .to_string(),
        non_unique: outcome.non_unique,
        residual_norm: outcome.residual_norm,
        conditioning: outcome.conditioning.filter(|c| c.is_finite()),
        iterations: outcome.iterations,
        converged: outcome.converged,
        branch_errors,
        max_relative_l2: max_relative,
    });
    write_process_csvs(out_dir, "rec", &outcome.solution)?;
    Ok(())
}

fn sweep_stage(
    report: &mut Report,
    out_dir: &Path,
    fixture: &BranchingProcess,
    plan: &DegeneracyPlan,
) -> Result<()> {
    let deltas: Vec<f64> = (1..=SWEEP_STEPS)
        .map(|i| plan.delta() / f64::powi(2.0, i as i32))
        .collect();
    let points = sweep_deltas(fixture, plan.centers(), &deltas, plan.mirror())?;
    let rows: Vec<SweepRow> = points
        .iter()
        .map(|p| SweepRow {
            delta: p.delta,
            l2_error: p.max_l2_error,
            predicted_l2: p.predicted_l2,
            min_mask_bins: p.min_mask_bins,
        })
        .collect();
    let monotone = rows.windows(2).all(|w| {
        w[1].l2_error <= w[0].l2_error * (1.0 + SWEEP_SLACK) + f64::MIN_POSITIVE
    });
    let mut csv = String::from("delta,l2_error,predicted_l2,min_mask_bins\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            sci(r.delta),
            sci(r.l2_error),
            sci(r.predicted_l2),
            r.min_mask_bins
        );
    }
    atomic_write(&out_dir.join("sweep.csv"), csv.as_bytes())?;
    report.set_check("sweep_monotone", monotone);
    report.sweep = Some(SweepSection { rows, monotone });
    Ok(())
}

fn execute(
    cfg: &ExperimentConfig,
    verb: Verb,
    out_dir: &Path,
    report: &mut Report,
) -> Result<()> {
    let fixture = generate_fixture(cfg)?;
    let healthy = validation_stage(report, &fixture)?;
    if verb == Verb::Validate {
        return Ok(());
    }
    let plan = build_plan(cfg, fixture.branch_count())?;
    if verb == Verb::Sweep {
        return sweep_stage(report, out_dir, &fixture, &plan);
    }
    if !healthy {
        // The construction would reject the fixture anyway; stop at the
        // recorded check failures instead of burying them under an error.
        return Ok(());
    }
    let approx = approximate_stage(report, out_dir, &fixture, &plan)?;
    if verb == Verb::Recover {
        let spec = cfg.recovery.as_ref().ok_or_else(|| {
            Error::InvalidArgument("recovery: section required for the recover verb".into())
        })?;
        recovery_stage(report, out_dir, &approx, &plan, spec)?;
    }
    Ok(())
}

/// Run one experiment and leave its artifacts in the output directory.
///
/// The returned outcome says whether every configured check passed. Module
/// errors are captured in the report rather than returned; only failures to
/// write the artifacts themselves surface as `Err`.
pub fn run_pipeline(cfg: &ExperimentConfig, name: &str, verb: Verb) -> Result<RunOutcome> {
    let out_dir = cfg.outputs.clone();
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let mut report = Report::new(name, cfg.seed, cfg.grid.clone());
    if let Err(e) = execute(cfg, verb, &out_dir, &mut report) {
        report.error = Some((&e).into());
    }
    report.finalize();
    let report_path = out_dir.join("report.json");
    crate::report::write_json(&report_path, &report)?;
    emit_plot_data(std::slice::from_ref(&report), &out_dir.join("plot_data.csv"))?;
    Ok(RunOutcome {
        report,
        report_path,
    })
}
