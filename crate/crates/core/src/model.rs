//! Sample grids, branch signals, and the coincidence structure that ties
//! branches together.
//!
//! A branching line is modeled as `m` complex signals sharing one uniform
//! grid. The structure set declares, per branch pair, a time region on which
//! the two branches carry the same values; every region is a ray
//! `(-inf, a)` or `(a, inf)` optionally extended by finite closed intervals.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default relative tolerance for coincidence checks.
pub const DEFAULT_COINCIDENCE_TOL: f64 = 1e-9;

/// Uniform time grid with `n` samples at `t_p = t0 + p * dt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    t0: f64,
    dt: f64,
    n: usize,
}

impl Grid {
    pub fn new(t0: f64, dt: f64, n: usize) -> Result<Self> {
        if !t0.is_finite() || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "grid origin and step must be finite, got t0={t0}, dt={dt}"
            )));
        }
        if dt <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "grid step must be positive, got dt={dt}"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 8 samples, got n={n}"
            )));
        }
        Ok(Grid { t0, dt, n })
    }

    /// Grid of `n` samples centered on t = 0.
    pub fn centered(dt: f64, n: usize) -> Result<Self> {
        let t0 = -0.5 * (n as f64) * dt;
        Grid::new(t0, dt, n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, p: usize) -> f64 {
        self.t0 + (p as f64) * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |p| self.time(p))
    }

    /// Frequency resolution `2*pi / (n * dt)`.
    pub fn domega(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.n as f64 * self.dt)
    }

    /// Largest representable angular frequency `pi / dt`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dt
    }

    /// Smallest frequency bin index; bins run over `[j_min, j_min + n)`.
    pub fn bin_min(&self) -> i64 {
        -((self.n / 2) as i64)
    }

    /// Bin indices in ascending order.
    pub fn bins(&self) -> impl Iterator<Item = i64> + '_ {
        let lo = self.bin_min();
        (0..self.n as i64).map(move |q| lo + q)
    }

    /// Angular frequency of bin `j`.
    pub fn omega(&self, j: i64) -> f64 {
        (j as f64) * self.domega()
    }

    /// Storage offset of bin `j` in ascending-bin order.
    pub fn bin_offset(&self, j: i64) -> usize {
        (j - self.bin_min()) as usize
    }
}

/// Build a grid, rejecting non-positive steps and undersized sample counts.
pub fn make_grid(t0: f64, dt: f64, n: usize) -> Result<Grid> {
    Grid::new(t0, dt, n)
}

/// Complex samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    grid: Grid,
    samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "signal has {} samples but the grid holds {}",
                samples.len(),
                grid.len()
            )));
        }
        if let Some(p) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite sample at index {p}: {:?}",
                samples[p]
            )));
        }
        Ok(Signal { grid, samples })
    }

    pub fn zeros(grid: Grid) -> Self {
        Signal {
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    /// Sample the scalar function `f` on the grid.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64) -> Complex64) -> Result<Self> {
        let samples = grid.times().map(&mut f).collect();
        Signal::new(grid, samples)
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn max_magnitude(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Which half-line an interval's ray covers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayKind {
    /// `(-inf, a)`
    Left,
    /// `(a, inf)`
    Right,
}

/// A time region made of one open ray plus optional finite closed intervals.
///
/// The ray boundary is exclusive: `left_ray(a)` covers `t < a` strictly.
/// Extras are closed `[u, v]` and must be pairwise disjoint and disjoint
/// from the ray.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSpec {
    kind: RayKind,
    a: f64,
    extras: Vec<(f64, f64)>,
}

impl IntervalSpec {
    pub fn left_ray(a: f64) -> Self {
        IntervalSpec {
            kind: RayKind::Left,
            a,
            extras: Vec::new(),
        }
    }

    pub fn right_ray(a: f64) -> Self {
        IntervalSpec {
            kind: RayKind::Right,
            a,
            extras: Vec::new(),
        }
    }

    pub fn with_extras(mut self, extras: Vec<(f64, f64)>) -> Result<Self> {
        self.extras = extras;
        self.validate()?;
        Ok(self)
    }

    pub fn kind(&self) -> RayKind {
        self.kind
    }

    pub fn ray_bound(&self) -> f64 {
        self.a
    }

    pub fn extras(&self) -> &[(f64, f64)] {
        &self.extras
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ray boundary must be finite, got {}",
                self.a
            )));
        }
        for &(u, v) in &self.extras {
            if !u.is_finite() || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "extra interval bounds must be finite, got [{u}, {v}]"
                )));
            }
            if u > v {
                return Err(Error::InvalidArgument(format!(
                    "extra interval is reversed: [{u}, {v}]"
                )));
            }
            let clear_of_ray = match self.kind {
                RayKind::Left => u >= self.a,
                RayKind::Right => v <= self.a,
            };
            if !clear_of_ray {
                return Err(Error::InvalidArgument(format!(
                    "extra interval [{u}, {v}] overlaps the ray at {}",
                    self.a
                )));
            }
        }
        let mut sorted = self.extras.clone();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in sorted.windows(2) {
            if w[1].0 <= w[0].1 {
                return Err(Error::InvalidArgument(format!(
                    "extra intervals [{}, {}] and [{}, {}] overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, t: f64) -> bool {
        let in_ray = match self.kind {
            RayKind::Left => t < self.a,
            RayKind::Right => t > self.a,
        };
        in_ray || self.extras.iter().any(|&(u, v)| u <= t && t <= v)
    }
}

/// Grid indices whose sample times fall inside the interval, ascending.
///
/// An interval that misses the grid entirely is rejected rather than
/// silently mapped to no constraints.
pub fn interval_to_index_set(interval: &IntervalSpec, grid: &Grid) -> Result<Vec<usize>> {
    interval.validate()?;
    let indices: Vec<usize> = (0..grid.len())
        .filter(|&p| interval.contains(grid.time(p)))
        .collect();
    if indices.is_empty() {
        return Err(Error::DegenerateInterval(format!(
            "interval induces no grid indices on [{}, {}]",
            grid.time(0),
            grid.time(grid.len() - 1)
        )));
    }
    Ok(indices)
}

/// Declaration that branches `d` and `k` coincide on `interval`.
/// Branch indices are 1-based. Each triple is stored once; the symmetric
/// counterpart is implied.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureTriple {
    pub d: usize,
    pub k: usize,
    pub interval: IntervalSpec,
}

impl StructureTriple {
    pub fn new(d: usize, k: usize, interval: IntervalSpec) -> Self {
        StructureTriple { d, k, interval }
    }
}

/// The full coincidence declaration for an `m`-branch process.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureSet {
    m: usize,
    triples: Vec<StructureTriple>,
}

impl StructureSet {
    pub fn new(m: usize, triples: Vec<StructureTriple>) -> Self {
        StructureSet { m, triples }
    }

    pub fn branch_count(&self) -> usize {
        self.m
    }

    pub fn triples(&self) -> &[StructureTriple] {
        &self.triples
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// `d == k`; a branch cannot be declared coincident with itself.
    SelfPair { triple: usize },
    BranchOutOfRange { triple: usize, branch: usize },
    BadInterval { triple: usize, reason: String },
    /// Interval is well formed but covers no grid point.
    EmptyOnGrid { triple: usize },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check a structure set against a grid, reporting every violation rather
/// than stopping at the first.
pub fn validate_structure_set(structure: &StructureSet, grid: &Grid) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (i, t) in structure.triples.iter().enumerate() {
        if t.d == t.k {
            report.violations.push(Violation::SelfPair { triple: i });
        }
        for branch in [t.d, t.k] {
            if branch == 0 || branch > structure.m {
                report
                    .violations
                    .push(Violation::BranchOutOfRange { triple: i, branch });
            }
        }
        match t.interval.validate() {
            Err(e) => report.violations.push(Violation::BadInterval {
                triple: i,
                reason: e.to_string(),
            }),
            Ok(()) => {
                if interval_to_index_set(&t.interval, grid).is_err() {
                    report.violations.push(Violation::EmptyOnGrid { triple: i });
                }
            }
        }
    }
    report
}

/// `m` branch signals on a shared grid plus their coincidence structure.
#[derive(Clone, Debug)]
pub struct BranchingProcess {
    grid: Grid,
    branches: Vec<Signal>,
    structure: StructureSet,
    coincidence_tol: f64,
}

impl BranchingProcess {
    pub fn new(branches: Vec<Signal>, structure: StructureSet) -> Result<Self> {
        Self::with_tolerance(branches, structure, DEFAULT_COINCIDENCE_TOL)
    }

    pub fn with_tolerance(
        branches: Vec<Signal>,
        structure: StructureSet,
        coincidence_tol: f64,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidArgument(
                "a process needs at least one branch".into(),
            ));
        }
        if branches.len() != structure.branch_count() {
            return Err(Error::InvalidArgument(format!(
                "structure declares {} branches but {} signals were given",
                structure.branch_count(),
                branches.len()
            )));
        }
        if !(coincidence_tol.is_finite() && coincidence_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "coincidence tolerance must be positive, got {coincidence_tol}"
            )));
        }
        let grid = branches[0].grid();
        for (i, b) in branches.iter().enumerate() {
            if b.grid() != grid {
                return Err(Error::GridMismatch(format!(
                    "branch {} uses a different grid than branch 1",
                    i + 1
                )));
            }
        }
        Ok(BranchingProcess {
            grid,
            branches,
            structure,
            coincidence_tol,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// 1-based branch accessor matching the structure set's indexing.
    pub fn branch(&self, d: usize) -> &Signal {
        &self.branches[d - 1]
    }

    pub fn branches(&self) -> &[Signal] {
        &self.branches
    }

    pub fn branches_mut(&mut self) -> &mut [Signal] {
        &mut self.branches
    }

    pub fn structure(&self) -> &StructureSet {
        &self.structure
    }

    pub fn coincidence_tol(&self) -> f64 {
        self.coincidence_tol
    }

    pub fn max_sample_magnitude(&self) -> f64 {
        self.branches
            .iter()
            .map(Signal::max_magnitude)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct TripleDeviation {
    /// Index into the structure set's triple list.
    pub triple: usize,
    pub max_deviation: f64,
    /// Grid index where the largest deviation occurs.
    pub worst_index: usize,
}

#[derive(Clone, Debug)]
pub struct CoincidenceReport {
    pub deviations: Vec<TripleDeviation>,
    /// Normalization used for the pass decision: `max(1, largest |sample|)`.
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CoincidenceReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations
            .iter()
            .map(|d| d.max_deviation)
            .fold(0.0, f64::max)
    }
}

/// Measure how well the samples honor the declared coincidence structure.
///
/// The check passes when every triple's worst sample deviation is at most
/// `coincidence_tol * max(1, largest sample magnitude)`.
pub fn verify_coincidence(process: &BranchingProcess) -> Result<CoincidenceReport> {
    let grid = process.grid();
    let validation = validate_structure_set(process.structure(), &grid);
    if !validation.is_valid() {
        return Err(Error::InvalidInput(format!(
            "structure set is invalid: {:?}",
            validation.violations
        )));
    }
    let scale = f64::max(1.0, process.max_sample_magnitude());
    let mut deviations = Vec::with_capacity(process.structure().triples().len());
    for (i, triple) in process.structure().triples().iter().enumerate() {
        let indices = interval_to_index_set(&triple.interval, &grid)?;
        let xd = process.branch(triple.d).samples();
        let xk = process.branch(triple.k).samples();
        let mut max_deviation = 0.0;
        let mut worst_index = indices[0];
        for &p in &indices {
            let dev = (xd[p] - xk[p]).norm();
            if dev > max_deviation {
                max_deviation = dev;
                worst_index = p;
            }
        }
        deviations.push(TripleDeviation {
            triple: i,
            max_deviation,
            worst_index,
        });
    }
    let tolerance = process.coincidence_tol();
    let pass = deviations
        .iter()
        .all(|d| d.max_deviation <= tolerance * scale);
    Ok(CoincidenceReport {
        deviations,
        scale,
        tolerance,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_grid() -> Grid {
        make_grid(-12.8, 0.1, 256).unwrap()
    }

    #[test]
    fn grid_derived_quantities() {
        let g = reference_grid();
        assert!((g.domega() - 0.245_436_926_061_702_6).abs() < 1e-12);
        assert!((g.nyquist() - 31.415_926_535_897_93).abs() < 1e-10);
        assert_eq!(g.len(), 256);
        assert_eq!(g.time(0), -12.8);
        assert!((g.time(255) - 12.7).abs() < 1e-12);
        assert_eq!(g.bin_min(), -128);
        assert_eq!(g.bins().last(), Some(127));
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(matches!(
            make_grid(0.0, 0.0, 64),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_grid(0.0, -0.1, 64),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_grid(0.0, 0.1, 7),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn odd_grid_bin_range() {
        let g = make_grid(0.0, 1.0, 9).unwrap();
        assert_eq!(g.bin_min(), -4);
        assert_eq!(g.bins().collect::<Vec<_>>(), (-4..=4).collect::<Vec<_>>());
    }

    #[test]
    fn signal_rejects_nonfinite_and_mismatch() {
        let g = reference_grid();
        let mut samples = vec![Complex64::new(0.0, 0.0); 256];
        samples[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            Signal::new(g, samples),
            Err(Error::InvalidData(_))
        ));
        assert!(matches!(
            Signal::new(g, vec![Complex64::new(0.0, 0.0); 255]),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn left_ray_is_strict_at_the_boundary() {
        let g = reference_grid();
        let idx = interval_to_index_set(&IntervalSpec::left_ray(0.0), &g).unwrap();
        // t_128 = 0 exactly on this grid and must be excluded.
        assert_eq!(idx, (0..=127).collect::<Vec<_>>());
    }

    #[test]
    fn right_ray_below_grid_covers_everything() {
        let g = reference_grid();
        let idx = interval_to_index_set(&IntervalSpec::right_ray(g.t0() - 1.0), &g).unwrap();
        assert_eq!(idx.len(), 256);
    }

    #[test]
    fn empty_interval_is_an_error() {
        let g = reference_grid();
        assert!(matches!(
            interval_to_index_set(&IntervalSpec::left_ray(g.t0() - 1.0), &g),
            Err(Error::DegenerateInterval(_))
        ));
    }

    #[test]
    fn extras_extend_the_ray() {
        let g = reference_grid();
        let iv = IntervalSpec::left_ray(0.0)
            .with_extras(vec![(1.0, 2.0), (5.0, 5.0)])
            .unwrap();
        let idx = interval_to_index_set(&iv, &g).unwrap();
        assert!(idx.contains(&138)); // t = 1.0
        assert!(idx.contains(&148)); // t = 2.0
        assert!(idx.contains(&178)); // t = 5.0
        assert!(!idx.contains(&149)); // t = 2.1
        assert_eq!(idx.len(), 128 + 11 + 1);
    }

    #[test]
    fn overlapping_extras_rejected() {
        assert!(IntervalSpec::left_ray(0.0)
            .with_extras(vec![(1.0, 3.0), (2.0, 4.0)])
            .is_err());
        assert!(IntervalSpec::left_ray(0.0)
            .with_extras(vec![(-1.0, 1.0)])
            .is_err());
        assert!(IntervalSpec::right_ray(0.0)
            .with_extras(vec![(-1.0, 1.0)])
            .is_err());
        assert!(IntervalSpec::left_ray(0.0)
            .with_extras(vec![(3.0, 2.0)])
            .is_err());
    }

    #[test]
    fn larger_left_ray_contains_smaller() {
        let g = reference_grid();
        let mut prev: Vec<usize> = Vec::new();
        for a in [-10.0, -5.0, 0.0, 3.0, 8.0] {
            let idx = interval_to_index_set(&IntervalSpec::left_ray(a), &g).unwrap();
            assert!(prev.iter().all(|p| idx.contains(p)));
            prev = idx;
        }
    }

    #[test]
    fn structure_validation_flags_everything() {
        let g = reference_grid();
        let triples = vec![
            StructureTriple::new(1, 2, IntervalSpec::left_ray(0.0)),
            StructureTriple::new(2, 2, IntervalSpec::left_ray(0.0)),
            StructureTriple::new(1, 5, IntervalSpec::left_ray(0.0)),
            StructureTriple::new(1, 2, IntervalSpec::left_ray(g.t0() - 1.0)),
        ];
        let report = validate_structure_set(&StructureSet::new(2, triples), &g);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .contains(&Violation::SelfPair { triple: 1 }));
        assert!(report
            .violations
            .contains(&Violation::BranchOutOfRange { triple: 2, branch: 5 }));
        assert!(report
            .violations
            .contains(&Violation::EmptyOnGrid { triple: 3 }));
    }

    #[test]
    fn valid_chain_passes_validation() {
        let g = reference_grid();
        let triples = vec![
            StructureTriple::new(1, 2, IntervalSpec::left_ray(0.0)),
            StructureTriple::new(2, 3, IntervalSpec::right_ray(3.0)),
        ];
        assert!(validate_structure_set(&StructureSet::new(3, triples), &g).is_valid());
    }

    fn gaussian(g: Grid, center: f64) -> Signal {
        Signal::from_fn(g, |t| {
            Complex64::new((-(t - center) * (t - center) / 2.0).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn identical_branches_coincide_exactly() {
        let g = reference_grid();
        let x = gaussian(g, 0.0);
        let s = StructureSet::new(
            2,
            vec![StructureTriple::new(1, 2, IntervalSpec::left_ray(0.0))],
        );
        let p = BranchingProcess::new(vec![x.clone(), x], s).unwrap();
        let report = verify_coincidence(&p).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_deviation(), 0.0);
    }

    #[test]
    fn constant_offset_fails_with_unit_deviation() {
        let g = reference_grid();
        let x = gaussian(g, 0.0);
        let mut y = x.clone();
        for z in y.samples_mut() {
            *z += Complex64::new(1.0, 0.0);
        }
        let s = StructureSet::new(
            2,
            vec![StructureTriple::new(1, 2, IntervalSpec::left_ray(0.0))],
        );
        let p = BranchingProcess::new(vec![x, y], s).unwrap();
        let report = verify_coincidence(&p).unwrap();
        assert!(!report.pass);
        assert!((report.max_deviation() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hard_switch_divergence_coincides_exactly() {
        let g = reference_grid();
        let x = gaussian(g, 0.0);
        let mut y = x.clone();
        for (p, z) in y.samples_mut().iter_mut().enumerate() {
            let t = g.time(p);
            if t >= 0.0 {
                *z += Complex64::new(0.5 * (-(t - 3.0) * (t - 3.0)).exp(), 0.0);
            }
        }
        let s = StructureSet::new(
            2,
            vec![StructureTriple::new(1, 2, IntervalSpec::left_ray(0.0))],
        );
        let p = BranchingProcess::new(vec![x, y], s).unwrap();
        let report = verify_coincidence(&p).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_deviation(), 0.0);
    }

    #[test]
    fn coincidence_is_symmetric_in_the_pair() {
        let g = reference_grid();
        let x = gaussian(g, 0.0);
        let mut y = x.clone();
        for (p, z) in y.samples_mut().iter_mut().enumerate() {
            if g.time(p) >= -2.0 {
                *z += Complex64::new(0.25, 0.25);
            }
        }
        let forward = StructureSet::new(
            2,
            vec![StructureTriple::new(1, 2, IntervalSpec::left_ray(0.0))],
        );
        let mirrored = StructureSet::new(
            2,
            vec![StructureTriple::new(2, 1, IntervalSpec::left_ray(0.0))],
        );
        let pf = BranchingProcess::new(vec![x.clone(), y.clone()], forward).unwrap();
        let pm = BranchingProcess::new(vec![x, y], mirrored).unwrap();
        let rf = verify_coincidence(&pf).unwrap();
        let rm = verify_coincidence(&pm).unwrap();
        assert_eq!(rf.max_deviation(), rm.max_deviation());
    }

    #[test]
    fn verify_rejects_invalid_structure() {
        let g = reference_grid();
        let x = gaussian(g, 0.0);
        let s = StructureSet::new(
            2,
            vec![StructureTriple::new(1, 1, IntervalSpec::left_ray(0.0))],
        );
        let p = BranchingProcess::new(vec![x.clone(), x], s).unwrap();
        assert!(matches!(
            verify_coincidence(&p),
            Err(Error::InvalidInput(_))
        ));
    }
}
