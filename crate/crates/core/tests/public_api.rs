//! End-to-end pass through the re-exported surface: build a process, plan
//! bands, degenerate, check, recover from a segment. Everything here goes
//! through `branchline_core::*` so a broken re-export fails to compile.

use branchline_core::{
    approximation_error, choose_centers, degenerate_approximation, extrapolate_from_segment,
    interval_to_index_set, is_connected, related, verify_coincidence, verify_degeneracy,
    BranchingProcess, CenterPolicy, ExtrapolationOptions, Grid, IntervalSpec, Signal, SolverChoice,
    SolverOptions, StructureSet, StructureTriple, Verdict,
};
use num_complex::Complex64;

fn two_branch_process(grid: Grid) -> BranchingProcess {
    let x1 = Signal::from_fn(grid, |t| {
        Complex64::new((-t * t / 18.0).exp(), 0.3 * (-t * t / 32.0).exp())
    })
    .unwrap();
    let mut x2 = x1.clone();
    for (p, z) in x2.samples_mut().iter_mut().enumerate() {
        let t = grid.time(p);
        if t >= 13.0 {
            *z += Complex64::new(0.4 * ((t - 12.0) * 0.5).tanh(), 0.1);
        }
    }
    let structure = StructureSet::new(
        2,
        vec![StructureTriple::new(1, 2, IntervalSpec::left_ray(13.0))],
    );
    BranchingProcess::new(vec![x1, x2], structure).unwrap()
}

#[test]
fn plan_degenerate_verify_and_recover() {
    let grid = Grid::centered(1.0, 32).unwrap();
    let process = two_branch_process(grid);
    assert!(is_connected(process.structure()).unwrap());
    assert!(related(process.structure(), 2, 1).unwrap());

    let skeleton = choose_centers(2, &grid, &CenterPolicy::Uniform).unwrap();
    let plan = skeleton.plan(0.9 * skeleton.delta_max).unwrap();
    let truth = degenerate_approximation(&process, &plan).unwrap();

    let coincidence = verify_coincidence(&truth).unwrap();
    assert!(coincidence.pass);
    let degeneracy = verify_degeneracy(&truth, &plan, 1e-12).unwrap();
    assert!(degeneracy.band_pass);

    let err = approximation_error(&process, &truth, Some(&plan)).unwrap();
    assert!(err.predicted_l2.is_some());

    // Observe branch 1 on all but the last sample, ask for both branches back.
    let interval = IntervalSpec::left_ray(grid.time(30) + 0.5);
    let data: Vec<Complex64> = interval_to_index_set(&interval, &grid)
        .unwrap()
        .into_iter()
        .map(|p| truth.branch(1).samples()[p])
        .collect();
    let opts = ExtrapolationOptions {
        solver: SolverChoice::Direct,
        solver_options: SolverOptions {
            lambda: Some(0.0),
            ..SolverOptions::default()
        },
        ..ExtrapolationOptions::default()
    };
    let report = extrapolate_from_segment(&truth, &plan, 1, &interval, &data, &opts).unwrap();
    assert_eq!(report.verdict, Verdict::Determined);
    for e in report.branch_errors.as_deref().unwrap() {
        assert!(e.relative_l2 < 1e-8, "branch {}: {}", e.branch, e.relative_l2);
    }
}
