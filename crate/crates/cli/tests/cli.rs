//! End-to-end tests for the harness: config parsing, fixture generation,
//! pipeline artifacts, and the installed binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use branchline_cli::config::{load_config, BranchSource, GeneratorSpec};
use branchline_cli::generate::{evaluate, generate_fixture, read_signal_csv};
use branchline_cli::pipeline::{run_pipeline, Verb};
use branchline_cli::plot::{emit_plot_data, PLOT_HEADER};
use branchline_core::spectral::forward_transform;
use branchline_core::{is_connected, verify_coincidence, Grid};

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("branchline-cli-{tag}-{}", std::process::id()));
    if dir.exists() {
        let _ = fs::remove_dir_all(&dir);
    }
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// Two-branch scenario fixture with a short divergent tail; recovery reads
/// every sample of branch 1.
fn pair_config(outputs: &Path, delta: f64, solver: &str) -> String {
    format!(
        r#"{{
  "grid": {{"t0": -16.0, "dt": 1.0, "n": 32}},
  "branches": [
    {{"kind": "gaussian", "a": 1.0, "t_c": 0.0, "sigma": 3.0}},
    {{"kind": "scenario",
      "base": {{"kind": "gaussian", "a": 1.0, "t_c": 0.0, "sigma": 3.0}},
      "divergence": {{"kind": "gaussian", "a": 0.5, "t_c": 13.0, "sigma": 1.0}},
      "split_time": 12.0}}
  ],
  "structure_set": [
    {{"d": 1, "k": 2, "interval": {{"kind": "left_ray", "a": 12.0}}}}
  ],
  "plan": {{"policy": "explicit",
            "centers": [-1.5707963267948966, 1.5707963267948966],
            "delta": {delta}}},
  "recovery": {{"mode": "segment", "branch": 1,
                "interval": {{"kind": "left_ray", "a": 16.0}},
                "solver": "{solver}", "lambda": 0.0}},
  "seed": 7,
  "outputs": "{outputs}"
}}"#,
        outputs = outputs.display(),
        delta = delta,
        solver = solver,
    )
}

fn tree_config(outputs: &Path) -> String {
    format!(
        r#"{{
  "grid": {{"t0": -58.0, "dt": 1.0, "n": 64}},
  "branches": [
    {{"kind": "band_noise", "omega": 1.1, "seed": 424242}},
    {{"kind": "scenario",
      "base": {{"kind": "band_noise", "omega": 1.1, "seed": 424242}},
      "divergence": {{"kind": "gaussian", "a": 0.8, "t_c": 5.0, "sigma": 2.0}},
      "split_time": 5.0}},
    {{"kind": "scenario",
      "base": {{"kind": "band_noise", "omega": 1.1, "seed": 424242}},
      "divergence": {{"kind": "modulated_gaussian", "a": 0.4, "t_c": 2.0, "sigma": 3.0, "omega0": 0.5}},
      "split_time": 0.0}}
  ],
  "structure_set": [
    {{"d": 1, "k": 2, "interval": {{"kind": "left_ray", "a": 5.0}}}},
    {{"d": 1, "k": 3, "interval": {{"kind": "left_ray", "a": 0.0}}}},
    {{"d": 2, "k": 3, "interval": {{"kind": "left_ray", "a": 0.0}}}}
  ],
  "plan": {{"policy": "explicit",
            "centers": [-0.7853981633974483, 0.0, 0.7853981633974483],
            "delta": 0.3436116964863836}},
  "recovery": {{"mode": "sampling", "branch": 1,
                "stride": 2.0, "s_index": -1, "omega": 1.2566370614359172,
                "solver": "direct", "lambda": 0.0}},
  "seed": 11,
  "outputs": "{outputs}"
}}"#,
        outputs = outputs.display(),
    )
}

#[test]
fn config_parses_with_exact_field_names() {
    let dir = scratch("parse");
    let path = write_config(&dir, "pair.json", &pair_config(&dir.join("out"), 1.4, "direct"));
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.grid.n, 32);
    assert_eq!(cfg.branches.len(), 2);
    assert_eq!(cfg.structure_set[0].d, 1);
    assert_eq!(cfg.structure_set[0].k, 2);
    assert_eq!(cfg.seed, 7);
    let rec = cfg.recovery.as_ref().unwrap();
    assert_eq!(rec.branch, 1);
    assert_eq!(rec.lambda, Some(0.0));
    match &cfg.branches[1] {
        BranchSource::Generator(GeneratorSpec::Scenario(s)) => {
            assert_eq!(s.split_time, 12.0);
        }
        other => panic!("expected scenario generator, got {other:?}"),
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = scratch("unknown");
    let base = pair_config(&dir.join("out"), 1.4, "direct");
    let cases = [
        base.replace("\"seed\": 7", "\"seed\": 7, \"seeed\": 8"),
        base.replace("\"n\": 32", "\"n\": 32, \"m\": 2"),
        base.replace("\"sigma\": 3.0}", "\"sigma\": 3.0, \"mean\": 0.0}"),
        base.replace("\"delta\": 1.4", "\"width\": 1.4"),
        base.replace("\"solver\": \"direct\"", "\"solver\": \"direct\", \"retries\": 3"),
    ];
    for (i, body) in cases.iter().enumerate() {
        let path = write_config(&dir, &format!("bad{i}.json"), body);
        let err = load_config(&path).unwrap_err();
        let text = err.to_string();
        assert!(
            text.contains("unknown field") || text.contains("missing field"),
            "case {i}: unexpected error {text}"
        );
    }
}

#[test]
fn cross_field_rules_are_enforced() {
    let dir = scratch("crossfield");
    let base = pair_config(&dir.join("out"), 1.4, "direct");
    let cases = [
        // explicit policy without centers
        (
            base.replace(
                "\"policy\": \"explicit\",\n            \"centers\": [-1.5707963267948966, 1.5707963267948966],",
                "\"policy\": \"explicit\",",
            ),
            "plan.centers",
        ),
        // uniform policy with centers
        (base.replace("\"explicit\"", "\"uniform\""), "plan.centers"),
        // segment mode with sampling fields
        (
            base.replace("\"solver\": \"direct\"", "\"stride\": 2.0, \"solver\": \"direct\""),
            "recovery.stride",
        ),
        // negative ridge weight
        (base.replace("\"lambda\": 0.0", "\"lambda\": -1.0"), "recovery.lambda"),
        // out-of-range observed branch
        (base.replace("\"mode\": \"segment\", \"branch\": 1", "\"mode\": \"segment\", \"branch\": 5"), "recovery.branch"),
    ];
    for (i, (body, needle)) in cases.iter().enumerate() {
        let path = write_config(&dir, &format!("bad{i}.json"), body);
        let err = load_config(&path).unwrap_err();
        assert!(
            err.to_string().contains(needle),
            "case {i}: expected {needle} in {err}"
        );
    }
}

#[test]
fn sampling_mode_requires_all_three_fields() {
    let dir = scratch("samplingfields");
    let body = tree_config(&dir.join("out")).replace("\"stride\": 2.0, ", "");
    let path = write_config(&dir, "tree.json", &body);
    let err = load_config(&path).unwrap_err();
    assert!(err.to_string().contains("recovery.stride"), "{err}");
}

#[test]
fn scenario_branches_coincide_exactly() {
    let dir = scratch("scenario");
    let path = write_config(&dir, "pair.json", &pair_config(&dir.join("out"), 1.4, "direct"));
    let cfg = load_config(&path).unwrap();
    let fixture = generate_fixture(&cfg).unwrap();
    let report = verify_coincidence(&fixture).unwrap();
    assert_eq!(report.max_deviation(), 0.0);
    for (a, b) in fixture.branch(1).samples()[..28]
        .iter()
        .zip(&fixture.branch(2).samples()[..28])
    {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
}

#[test]
fn band_noise_is_deterministic_and_band_limited() {
    let grid = Grid::centered(0.5, 128).unwrap();
    let spec: GeneratorSpec =
        serde_json::from_str(r#"{"kind": "band_noise", "omega": 5.0, "seed": 42}"#).unwrap();
    let first = evaluate(&spec, &grid, 9).unwrap();
    let second = evaluate(&spec, &grid, 9).unwrap();
    for (a, b) in first.samples().iter().zip(second.samples()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
    // A different master seed must give a different draw.
    let third = evaluate(&spec, &grid, 10).unwrap();
    assert!(first.samples() != third.samples());

    let spectrum = forward_transform(&first);
    let scale = spectrum.max_magnitude();
    for j in grid.bins() {
        if grid.omega(j).abs() >= 5.0 {
            assert!(
                spectrum.coeff(j).norm() <= 1e-12 * scale,
                "leak at bin {j}"
            );
        }
    }
}

#[test]
fn tree_fixture_is_connected_with_zero_deviation() {
    let dir = scratch("tree");
    let path = write_config(&dir, "tree.json", &tree_config(&dir.join("out")));
    let cfg = load_config(&path).unwrap();
    let fixture = generate_fixture(&cfg).unwrap();
    assert!(is_connected(fixture.structure()).unwrap());
    let report = verify_coincidence(&fixture).unwrap();
    assert_eq!(report.max_deviation(), 0.0);
}

#[test]
fn file_branches_round_trip_through_csv() {
    let dir = scratch("csv");
    let grid = Grid::centered(0.25, 64).unwrap();
    let spec: GeneratorSpec =
        serde_json::from_str(r#"{"kind": "band_noise", "omega": 4.0, "seed": 3}"#).unwrap();
    let signal = evaluate(&spec, &grid, 1).unwrap();
    let mut csv = String::from("index,t,re,im\n");
    for (i, z) in signal.samples().iter().enumerate() {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e}\n",
            i,
            grid.time(i),
            z.re,
            z.im
        ));
    }
    let path = dir.join("branch.csv");
    fs::write(&path, csv).unwrap();
    let back = read_signal_csv(&path, &grid).unwrap();
    for (a, b) in signal.samples().iter().zip(back.samples()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }

    let missing = read_signal_csv(&dir.join("nope.csv"), &grid).unwrap_err();
    assert_eq!(missing.kind(), "io");
    assert!(missing.to_string().contains("nope.csv"));
}

#[test]
fn pipeline_recover_passes_and_writes_artifacts() {
    let dir = scratch("recover");
    let out = dir.join("out");
    let path = write_config(&dir, "pair.json", &pair_config(&out, 1.4726215563702154, "direct"));
    let cfg = load_config(&path).unwrap();
    let outcome = run_pipeline(&cfg, "pair", Verb::Recover).unwrap();
    assert!(outcome.pass(), "checks: {:?}", outcome.report.checks);
    let rec = outcome.report.recovery.as_ref().unwrap();
    assert_eq!(rec.verdict, "determined");
    assert!(rec.max_relative_l2.unwrap() <= 1e-9);

    for name in [
        "report.json",
        "plot_data.csv",
        "signal_in_b1.csv",
        "signal_out_b2.csv",
        "signal_rec_b2.csv",
        "spectrum_out_b1.csv",
    ] {
        assert!(out.join(name).exists(), "missing artifact {name}");
    }
    // Staging files must be renamed away.
    for entry in fs::read_dir(&out).unwrap() {
        let name = entry.unwrap().file_name();
        assert!(
            !name.to_string_lossy().ends_with(".tmp"),
            "leftover staging file {name:?}"
        );
    }
}

#[test]
fn pipeline_projection_solver_agrees() {
    let dir = scratch("pocs");
    let out = dir.join("out");
    let path = write_config(&dir, "pair.json", &pair_config(&out, 1.4726215563702154, "projection"));
    let cfg = load_config(&path).unwrap();
    let outcome = run_pipeline(&cfg, "pair", Verb::Recover).unwrap();
    assert!(outcome.pass(), "checks: {:?}", outcome.report.checks);
    let rec = outcome.report.recovery.as_ref().unwrap();
    assert!(rec.converged);
    assert!(rec.iterations.unwrap() > 0);
    assert!(rec.max_relative_l2.unwrap() <= 1e-3);
}

#[test]
fn pipeline_sweep_is_monotone() {
    let dir = scratch("sweep");
    let out = dir.join("out");
    let path = write_config(&dir, "pair.json", &pair_config(&out, 1.4726215563702154, "direct"));
    let cfg = load_config(&path).unwrap();
    let outcome = run_pipeline(&cfg, "pair", Verb::Sweep).unwrap();
    assert!(outcome.pass());
    let sweep = outcome.report.sweep.as_ref().unwrap();
    assert_eq!(sweep.rows.len(), 6);
    for w in sweep.rows.windows(2) {
        assert!(w[1].delta < w[0].delta);
        assert!(w[1].l2_error <= w[0].l2_error * (1.0 + 1e-9));
    }
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("delta,l2_error,predicted_l2,min_mask_bins\n"));
    assert_eq!(csv.lines().count(), 7);
}

#[test]
fn pipeline_rejects_overlapping_plan() {
    let dir = scratch("overlap");
    let out = dir.join("out");
    let path = write_config(&dir, "pair.json", &pair_config(&out, 2.0, "direct"));
    let cfg = load_config(&path).unwrap();
    let outcome = run_pipeline(&cfg, "pair", Verb::Approximate).unwrap();
    assert!(!outcome.pass());
    let err = outcome.report.error.as_ref().unwrap();
    assert_eq!(err.kind, "plan-invalid");
    let text = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(text.contains("\"kind\": \"plan-invalid\""));
}

#[test]
fn pipeline_reports_bad_generator_params_by_field() {
    let dir = scratch("badparam");
    let out = dir.join("out");
    let body = pair_config(&out, 1.4, "direct").replace("\"sigma\": 1.0", "\"sigma\": -1.0");
    let path = write_config(&dir, "pair.json", &body);
    let cfg = load_config(&path).unwrap();
    let outcome = run_pipeline(&cfg, "pair", Verb::Validate).unwrap();
    assert!(!outcome.pass());
    let err = outcome.report.error.as_ref().unwrap();
    assert_eq!(err.kind, "invalid-argument");
    assert!(err.message.contains("sigma"), "{}", err.message);
}

#[test]
fn plot_data_for_empty_report_set_is_header_only() {
    let dir = scratch("plotempty");
    let path = dir.join("plot_data.csv");
    emit_plot_data(&[], &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text, format!("{PLOT_HEADER}\n"));
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_branchline"))
}

#[test]
fn binary_runs_every_verb() {
    let dir = scratch("binary");
    let out = dir.join("out");
    let path = write_config(&dir, "pair.json", &pair_config(&out, 1.4726215563702154, "direct"));

    for verb in ["validate", "approximate", "recover", "sweep"] {
        let status = binary()
            .args([verb, "--config"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success(), "{verb} failed");
    }
    let status = binary().args(["report", "--out"]).arg(&out).status().unwrap();
    assert!(status.success(), "report verb failed");
    assert!(out.join("plot_data.csv").exists());
}

#[test]
fn binary_seed_flag_overrides_config() {
    let dir = scratch("seedflag");
    let out = dir.join("out");
    let path = write_config(&dir, "pair.json", &pair_config(&out, 1.4726215563702154, "direct"));
    let status = binary()
        .args(["validate", "--config"])
        .arg(&path)
        .args(["--seed", "99"])
        .status()
        .unwrap();
    assert!(status.success());
    let report = branchline_cli::read_report(&out.join("report.json")).unwrap();
    assert_eq!(report.seed, 99);
}

#[test]
fn binary_exit_codes_reflect_failures() {
    let dir = scratch("exitcodes");
    let out = dir.join("out");
    // Overlapping bands: checks cannot pass, exit 1.
    let path = write_config(&dir, "overlap.json", &pair_config(&out, 2.0, "direct"));
    let status = binary()
        .args(["approximate", "--config"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // Unparseable config: exit 2.
    let bad = write_config(&dir, "bad.json", "{\"grid\": {}}");
    let status = binary()
        .args(["validate", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
