//! Construction of band-degenerate approximations.
//!
//! Given an `m`-branch process and one open frequency band per branch with
//! pairwise disjoint bin masks, the approximation rewrites every branch so
//! that branch `d`'s spectrum vanishes on its own band while all declared
//! coincidences survive. The surgery happens entirely in the spectral
//! domain:
//!
//! ```text
//! H_1[j] = 0                    for j in mask_1
//! H_1[j] = -(X_d[j] - X_1[j])   for j in mask_d, d >= 2
//! H_1[j] = X_1[j]               elsewhere
//! H_d    = H_1 + (X_d - X_1)    for d >= 2
//! ```
//!
//! Branch differences are untouched (`H_d - H_k = X_d - X_k` bin for bin),
//! which is what preserves coincidence, and on its own mask branch `d`
//! cancels as `-a + a`, which IEEE arithmetic evaluates to exact zero. The
//! error spectrum is the same for every branch: the original coefficients
//! collected over all masks, negated. Its energy is the predicted squared
//! L2 error.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{verify_coincidence, BranchingProcess, Grid, Signal};
use crate::spectral::{
    difference_spectrum, forward_transform, inverse_transform, mask_energy, FrequencyBand,
    Spectrum,
};

/// Band tolerance used by verification when callers have no reason to pick
/// another one: re-transformed output coefficients on their own mask stay
/// below `1e-12 * scale`.
pub const DEFAULT_BAND_TOL: f64 = 1e-12;

/// How band centers are assigned to branches.
#[derive(Clone, Debug, PartialEq)]
pub enum CenterPolicy {
    /// `m` centers equally spaced in the half-Nyquist range `(-W, W)`,
    /// `W = nyquist / 2`: center `d` sits at `-W + d * 2W / (m + 1)`.
    Uniform,
    /// Caller-provided centers, one per branch.
    Explicit(Vec<f64>),
}

/// Centers plus the largest admissible half-width for them on a grid.
#[derive(Clone, Debug)]
pub struct PlanSkeleton {
    pub centers: Vec<f64>,
    /// Largest half-width keeping bands separated from each other and from
    /// the placement boundary, with one bin of slack.
    pub delta_max: f64,
}

impl PlanSkeleton {
    /// Half-width used by experiments that do not sweep: wide enough to be
    /// visible (`4 * domega`) but far from the admissibility limit.
    pub fn default_delta(&self, grid: &Grid) -> f64 {
        f64::max(4.0 * grid.domega(), self.delta_max / 8.0)
    }

    pub fn plan(&self, delta: f64) -> Result<DegeneracyPlan> {
        DegeneracyPlan::new(self.centers.clone(), delta)
    }
}

/// Pick one band center per branch and report how wide the bands may get.
pub fn choose_centers(m: usize, grid: &Grid, policy: &CenterPolicy) -> Result<PlanSkeleton> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "need at least one branch to place centers".into(),
        ));
    }
    let (centers, boundary) = match policy {
        CenterPolicy::Uniform => {
            let w = grid.nyquist() / 2.0;
            let step = 2.0 * w / (m as f64 + 1.0);
            let centers: Vec<f64> = (1..=m).map(|d| -w + d as f64 * step).collect();
            (centers, w)
        }
        CenterPolicy::Explicit(cs) => {
            if cs.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "{} centers given for {m} branches",
                    cs.len()
                )));
            }
            for (i, c) in cs.iter().enumerate() {
                if !c.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "center {} is not finite",
                        i + 1
                    )));
                }
                if c.abs() >= grid.nyquist() {
                    return Err(Error::RangeError(format!(
                        "center {c} lies outside the grid's frequency range (+-{})",
                        grid.nyquist()
                    )));
                }
            }
            for i in 0..cs.len() {
                for j in i + 1..cs.len() {
                    if cs[i] == cs[j] {
                        return Err(Error::InvalidArgument(format!(
                            "duplicate center {} for branches {} and {}",
                            cs[i],
                            i + 1,
                            j + 1
                        )));
                    }
                }
            }
            (cs.clone(), grid.nyquist())
        }
    };

    let mut limit = f64::INFINITY;
    for (i, &c) in centers.iter().enumerate() {
        limit = limit.min(boundary - c.abs());
        for &other in &centers[i + 1..] {
            limit = limit.min((c - other).abs() / 2.0);
        }
    }
    let delta_max = limit - grid.domega();
    if delta_max <= 0.0 {
        return Err(Error::PlanInvalid(format!(
            "grid resolution {} leaves no admissible band width for these centers",
            grid.domega()
        )));
    }
    Ok(PlanSkeleton { centers, delta_max })
}

/// One open band per branch, all sharing the same half-width.
///
/// With `mirror` set, every band is paired with its reflection about zero
/// frequency and both halves are treated as the branch's mask; that keeps
/// real-valued inputs real after the surgery.
#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyPlan {
    centers: Vec<f64>,
    delta: f64,
    mirror: bool,
}

impl DegeneracyPlan {
    pub fn new(centers: Vec<f64>, delta: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidArgument("plan needs at least one band".into()));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("band centers must be finite".into()));
        }
        for i in 0..centers.len() {
            for j in i + 1..centers.len() {
                if centers[i] == centers[j] {
                    return Err(Error::InvalidArgument(format!(
                        "duplicate band center {}",
                        centers[i]
                    )));
                }
            }
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "band half-width must be positive, got {delta}"
            )));
        }
        Ok(DegeneracyPlan {
            centers,
            delta,
            mirror: false,
        })
    }

    pub fn with_mirror(mut self) -> Self {
        self.mirror = true;
        self
    }

    pub fn branch_count(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mirror(&self) -> bool {
        self.mirror
    }

    /// The open band assigned to branch `d` (1-based).
    pub fn band(&self, d: usize) -> FrequencyBand {
        FrequencyBand {
            center: self.centers[d - 1],
            half_width: self.delta,
        }
    }

    /// Bin mask of branch `d`'s band, mirror-extended when the plan is
    /// mirrored. Sorted, no duplicates.
    pub fn branch_mask(&self, d: usize, grid: &Grid) -> Vec<i64> {
        let band = self.band(d);
        let mut mask = band.mask(grid);
        if self.mirror {
            mask.extend(band.mirrored().mask(grid));
            mask.sort_unstable();
            mask.dedup();
        }
        mask
    }
}

/// Validate a plan against a grid: every branch mask must be nonempty and
/// the masks pairwise disjoint. Returns the masks for reuse.
pub fn check_disjoint(plan: &DegeneracyPlan, grid: &Grid) -> Result<Vec<Vec<i64>>> {
    let masks: Vec<Vec<i64>> = (1..=plan.branch_count())
        .map(|d| plan.branch_mask(d, grid))
        .collect();
    for (i, mask) in masks.iter().enumerate() {
        if mask.is_empty() {
            return Err(Error::PlanInvalid(format!(
                "band of branch {} (center {}, half-width {}) contains no grid bin",
                i + 1,
                plan.centers[i],
                plan.delta
            )));
        }
    }
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            if let Some(bin) = masks[i].iter().find(|b| masks[j].binary_search(b).is_ok()) {
                return Err(Error::PlanInvalid(format!(
                    "bands of branches {} and {} overlap at bin {bin}",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(masks)
}

/// Spectra of the degenerate approximation, before returning to the time
/// domain. Exposed so the exact-zero structure of the masks can be observed
/// directly.
pub fn degenerate_spectra(
    process: &BranchingProcess,
    plan: &DegeneracyPlan,
) -> Result<Vec<Spectrum>> {
    let m = process.branch_count();
    if plan.branch_count() != m {
        return Err(Error::InvalidArgument(format!(
            "plan covers {} branches but the process has {m}",
            plan.branch_count()
        )));
    }
    let grid = process.grid();
    let masks = check_disjoint(plan, &grid)?;
    let coincidence = verify_coincidence(process)?;
    if !coincidence.pass {
        return Err(Error::InvalidInput(format!(
            "input violates its coincidence structure: worst deviation {:.3e} exceeds {:.3e}",
            coincidence.max_deviation(),
            coincidence.tolerance * coincidence.scale
        )));
    }

    let spectra: Vec<Spectrum> = process.branches().iter().map(forward_transform).collect();
    // Branch differences relative to branch 1.
    let diffs: Vec<Spectrum> = (1..m)
        .map(|d| difference_spectrum(&spectra[d], &spectra[0]).expect("same grid"))
        .collect();

    let mut first = spectra[0].clone();
    for &j in &masks[0] {
        first.set_coeff(j, Complex64::new(0.0, 0.0));
    }
    for d in 2..=m {
        for &j in &masks[d - 1] {
            first.set_coeff(j, -diffs[d - 2].coeff(j));
        }
    }

    let mut out = Vec::with_capacity(m);
    for d in 2..=m {
        let coeffs = first
            .coeffs()
            .iter()
            .zip(diffs[d - 2].coeffs())
            .map(|(h, y)| h + y)
            .collect();
        out.push(Spectrum::new(grid, coeffs).expect("same grid"));
    }
    out.insert(0, first);
    Ok(out)
}

/// Replace every branch by its band-degenerate approximation.
///
/// Fails on plans whose masks are empty or overlap and on inputs that do
/// not satisfy their own coincidence structure.
pub fn degenerate_approximation(
    process: &BranchingProcess,
    plan: &DegeneracyPlan,
) -> Result<BranchingProcess> {
    let spectra = degenerate_spectra(process, plan)?;
    let branches: Vec<Signal> = spectra.iter().map(inverse_transform).collect();
    BranchingProcess::with_tolerance(
        branches,
        process.structure().clone(),
        process.coincidence_tol(),
    )
}

/// Outcome of re-checking a process against a plan.
#[derive(Clone, Debug)]
pub struct DegeneracyReport {
    /// Largest re-transformed coefficient magnitude on each branch's mask.
    pub band_max: Vec<f64>,
    /// Largest coefficient magnitude over all branches; tolerances are
    /// relative to it.
    pub scale: f64,
    pub band_tol: f64,
    pub band_pass: bool,
    pub coincidence: crate::model::CoincidenceReport,
}

impl DegeneracyReport {
    pub fn pass(&self) -> bool {
        self.band_pass && self.coincidence.pass
    }
}

/// Transform the process and measure how well each branch vanishes on its
/// own mask, alongside a coincidence re-check.
pub fn verify_degeneracy(
    process: &BranchingProcess,
    plan: &DegeneracyPlan,
    band_tol: f64,
) -> Result<DegeneracyReport> {
    let m = process.branch_count();
    if plan.branch_count() != m {
        return Err(Error::InvalidArgument(format!(
            "plan covers {} branches but the process has {m}",
            plan.branch_count()
        )));
    }
    let grid = process.grid();
    let spectra: Vec<Spectrum> = process.branches().iter().map(forward_transform).collect();
    let scale = spectra
        .iter()
        .map(Spectrum::max_magnitude)
        .fold(0.0, f64::max);
    let mut band_max = Vec::with_capacity(m);
    for d in 1..=m {
        let mask = plan.branch_mask(d, &grid);
        if mask.is_empty() {
            return Err(Error::PlanInvalid(format!(
                "band of branch {d} contains no grid bin"
            )));
        }
        let worst = mask
            .iter()
            .map(|&j| spectra[d - 1].coeff(j).norm())
            .fold(0.0, f64::max);
        band_max.push(worst);
    }
    let band_pass = band_max.iter().all(|&v| v <= band_tol * scale);
    let coincidence = verify_coincidence(process)?;
    Ok(DegeneracyReport {
        band_max,
        scale,
        band_tol,
        band_pass,
        coincidence,
    })
}

/// Per-branch deviation between a process and its approximation.
#[derive(Clone, Copy, Debug)]
pub struct BranchErrorStats {
    /// `sqrt(dt * sum |x_hat - x|^2)`
    pub l2_error: f64,
    /// `max |x_hat - x|`
    pub sup_error: f64,
}

#[derive(Clone, Debug)]
pub struct ApproximationError {
    pub per_branch: Vec<BranchErrorStats>,
    /// `sqrt(sum_d mask-energy of X_d over branch d's mask)`, available when
    /// the plan that produced the approximation is supplied. The same value
    /// predicts every branch's L2 error.
    pub predicted_l2: Option<f64>,
}

impl ApproximationError {
    pub fn max_l2(&self) -> f64 {
        self.per_branch
            .iter()
            .map(|b| b.l2_error)
            .fold(0.0, f64::max)
    }
}

/// Measure per-branch time-domain errors, with the spectral prediction when
/// `plan` is given.
pub fn approximation_error(
    original: &BranchingProcess,
    approx: &BranchingProcess,
    plan: Option<&DegeneracyPlan>,
) -> Result<ApproximationError> {
    if original.branch_count() != approx.branch_count() {
        return Err(Error::InvalidArgument(format!(
            "branch counts differ: {} vs {}",
            original.branch_count(),
            approx.branch_count()
        )));
    }
    if original.grid() != approx.grid() {
        return Err(Error::GridMismatch(
            "approximation lives on a different grid".into(),
        ));
    }
    let grid = original.grid();
    let dt = grid.dt();
    let per_branch = original
        .branches()
        .iter()
        .zip(approx.branches())
        .map(|(x, y)| {
            let mut sq = 0.0;
            let mut sup: f64 = 0.0;
            for (a, b) in x.samples().iter().zip(y.samples()) {
                let dev = (b - a).norm();
                sup = sup.max(dev);
                sq += dev * dev;
            }
            BranchErrorStats {
                l2_error: (dt * sq).sqrt(),
                sup_error: sup,
            }
        })
        .collect();
    let predicted_l2 = match plan {
        None => None,
        Some(plan) => {
            if plan.branch_count() != original.branch_count() {
                return Err(Error::InvalidArgument(
                    "plan branch count does not match the process".into(),
                ));
            }
            let mut total = 0.0;
            for d in 1..=original.branch_count() {
                let spectrum = forward_transform(original.branch(d));
                let mask = plan.branch_mask(d, &grid);
                total += mask_energy(&spectrum, &mask);
            }
            Some(total.sqrt())
        }
    };
    Ok(ApproximationError {
        per_branch,
        predicted_l2,
    })
}

/// One row of a half-width sweep at fixed grid resolution.
#[derive(Clone, Copy, Debug)]
pub struct DeltaSweepPoint {
    pub delta: f64,
    pub max_l2_error: f64,
    pub predicted_l2: f64,
    pub min_mask_bins: usize,
}

/// Evaluate the approximation error for several half-widths over the same
/// centers. The grid is fixed, so shrinking `delta` shrinks every mask
/// monotonically and the measured error is nonincreasing.
pub fn sweep_deltas(
    process: &BranchingProcess,
    centers: &[f64],
    deltas: &[f64],
    mirror: bool,
) -> Result<Vec<DeltaSweepPoint>> {
    let grid = process.grid();
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let mut plan = DegeneracyPlan::new(centers.to_vec(), delta)?;
        if mirror {
            plan = plan.with_mirror();
        }
        let masks = check_disjoint(&plan, &grid)?;
        let approx = degenerate_approximation(process, &plan)?;
        let err = approximation_error(process, &approx, Some(&plan))?;
        points.push(DeltaSweepPoint {
            delta,
            max_l2_error: err.max_l2(),
            predicted_l2: err.predicted_l2.expect("plan given"),
            min_mask_bins: masks.iter().map(Vec::len).min().unwrap_or(0),
        });
    }
    Ok(points)
}

#[derive(Clone, Copy, Debug)]
pub struct DeltaSearchOptions {
    /// Target for the worst branch's measured L2 error.
    pub epsilon: f64,
    /// Every branch mask keeps at least this many bins.
    pub min_mask_bins: usize,
    /// How many times the grid may double before giving up.
    pub max_refinements: usize,
    pub max_bisection_steps: usize,
}

impl DeltaSearchOptions {
    pub fn new(epsilon: f64) -> Self {
        DeltaSearchOptions {
            epsilon,
            min_mask_bins: 4,
            max_refinements: 14,
            max_bisection_steps: 80,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DeltaSearchResult {
    pub delta: f64,
    pub l2_error: f64,
    /// Grid the search settled on; doubled from the base grid `refinements`
    /// times, re-centered on t = 0.
    pub grid: Grid,
    pub refinements: usize,
}

/// Find a half-width whose approximation error is at most `epsilon` by
/// bisection, doubling the (centered) grid whenever the admissible widths
/// run out of bins.
///
/// `make_process` rebuilds the fixture on each candidate grid, so the base
/// grid must describe signals that can be re-sampled (generators, not data
/// files). `delta_hi` is the caller's admissibility limit, typically the
/// skeleton's `delta_max`.
pub fn bisect_delta(
    make_process: &dyn Fn(&Grid) -> Result<BranchingProcess>,
    base_grid: Grid,
    centers: &[f64],
    delta_hi: f64,
    mirror: bool,
    opts: &DeltaSearchOptions,
) -> Result<DeltaSearchResult> {
    if !(opts.epsilon.is_finite() && opts.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target error must be positive, got {}",
            opts.epsilon
        )));
    }
    if !(delta_hi.is_finite() && delta_hi > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "upper half-width must be positive, got {delta_hi}"
        )));
    }

    let eval = |process: &BranchingProcess, delta: f64| -> Result<f64> {
        let mut plan = DegeneracyPlan::new(centers.to_vec(), delta)?;
        if mirror {
            plan = plan.with_mirror();
        }
        let approx = degenerate_approximation(process, &plan)?;
        Ok(approximation_error(process, &approx, None)?.max_l2())
    };
    let floor_delta = |g: &Grid| 0.5 * (opts.min_mask_bins as f64 + 2.0) * g.domega();

    let mut grid = base_grid;
    let mut process = make_process(&grid)?;
    let mut refinements = 0;

    let err_hi = eval(&process, delta_hi)?;
    if err_hi <= opts.epsilon {
        return Ok(DeltaSearchResult {
            delta: delta_hi,
            l2_error: err_hi,
            grid,
            refinements,
        });
    }

    // Push the lower bracket down, refining the grid until the narrowest
    // admissible band already meets the target.
    let (mut lo, mut err_lo) = loop {
        let lo = floor_delta(&grid);
        if lo < delta_hi {
            let err = eval(&process, lo)?;
            if err <= opts.epsilon {
                break (lo, err);
            }
        }
        if refinements == opts.max_refinements {
            return Err(Error::RangeError(format!(
                "error target {} not attainable within {} grid doublings",
                opts.epsilon, opts.max_refinements
            )));
        }
        refinements += 1;
        grid = Grid::centered(grid.dt(), grid.len() * 2)?;
        process = make_process(&grid)?;
    };

    let mut hi = delta_hi;
    for _ in 0..opts.max_bisection_steps {
        if hi - lo <= 0.25 * grid.domega() {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let err = eval(&process, mid)?;
        if err <= opts.epsilon {
            lo = mid;
            err_lo = err;
        } else {
            hi = mid;
        }
    }

    Ok(DeltaSearchResult {
        delta: lo,
        l2_error: err_lo,
        grid,
        refinements,
    })
}
