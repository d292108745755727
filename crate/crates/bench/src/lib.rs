//! Fixture builders shared by the benchmark targets. Sizes are chosen so a
//! full `cargo bench` run finishes in a couple of minutes.

use branchline_core::{
    degenerate_approximation, interval_to_index_set, BranchingProcess, DegeneracyPlan, Grid,
    IntervalSpec, Signal, StructureSet, StructureTriple,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense complex signal with iid standard-normal-ish samples.
pub fn random_signal(n: usize, seed: u64) -> Signal {
    let grid = Grid::centered(1.0, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Signal::new(grid, samples).unwrap()
}

/// Three branches splitting off a smooth parent, with a band plan sized for
/// the grid. The shape matches what the recovery experiments run on.
pub fn three_branch_fixture(n: usize) -> (BranchingProcess, DegeneracyPlan) {
    let grid = Grid::centered(1.0, n).unwrap();
    let t_max = grid.time(n - 1);
    let x1 = Signal::from_fn(grid, |t| {
        Complex64::new(
            (-t * t / (0.08 * (n * n) as f64)).exp(),
            0.4 * (0.05 * t).sin(),
        )
    })
    .unwrap();
    let mut branches = vec![x1];
    let mut triples = Vec::new();
    for d in 2..=3usize {
        let split = t_max - 2.0 - d as f64;
        let mut next = branches[0].clone();
        for (p, z) in next.samples_mut().iter_mut().enumerate() {
            let t = grid.time(p);
            if t >= split {
                *z += Complex64::new(0.5 * ((t - split + 1.0) * 0.6).tanh(), -0.2);
            }
        }
        branches.push(next);
        triples.push(StructureTriple::new(1, d, IntervalSpec::left_ray(split)));
    }
    let structure = StructureSet::new(3, triples);
    let process = BranchingProcess::new(branches, structure).unwrap();
    let plan = DegeneracyPlan::new(vec![-1.9, 0.0, 1.9], 0.82).unwrap();
    (process, plan)
}

/// Determined segment-recovery instance: degenerate truth, branch 1 observed
/// everywhere except the divergent tails.
pub fn determined_instance(
    n: usize,
) -> (BranchingProcess, DegeneracyPlan, IntervalSpec, Vec<Complex64>) {
    let (raw, plan) = three_branch_fixture(n);
    let truth = degenerate_approximation(&raw, &plan).unwrap();
    let grid = truth.grid();
    let interval = IntervalSpec::left_ray(grid.time(n - 1) - 0.5);
    let data = interval_to_index_set(&interval, &grid)
        .unwrap()
        .into_iter()
        .map(|p| truth.branch(1).samples()[p])
        .collect();
    (truth, plan, interval, data)
}
