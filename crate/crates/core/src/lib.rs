//! Signals on branching lines.
//!
//! A branching line is a family of real lines glued along shared segments.
//! This crate models a function on such a structure as `m` complex signals
//! on one uniform grid plus a structure set of coincidence triples
//! `(d, k, I)`, each declaring that branches `d` and `k` agree on the
//! ray-containing set `I`. On top of that representation it provides
//!
//! * a continuous-scaled Fourier transform pair with band masks and energy
//!   accounting ([`spectral`]),
//! * the reachability structure induced by the triples ([`topology`]),
//! * the spectral surgery that forces each branch's spectrum to vanish on
//!   its own frequency band while every coincidence survives, together with
//!   exact error prediction, half-width sweeps and bisection
//!   ([`degeneracy`]),
//! * reconstruction of all branches from one observed segment or from a
//!   one-sided oversampled sample sequence, with uniqueness decided by
//!   explicit rank computation ([`recovery`]).
//!
//! All numerics are deterministic: no global RNG, no time-dependent state,
//! FFT plans cached per thread.

pub mod degeneracy;
pub mod error;
pub mod linalg;
pub mod model;
pub mod recovery;
pub mod spectral;
pub mod topology;

pub use degeneracy::{
    approximation_error, bisect_delta, check_disjoint, choose_centers, degenerate_approximation,
    sweep_deltas, verify_degeneracy, ApproximationError, CenterPolicy, DegeneracyPlan,
    DegeneracyReport, DeltaSearchOptions, DeltaSearchResult, DeltaSweepPoint, PlanSkeleton,
};
pub use error::{Error, Result};
pub use model::{
    interval_to_index_set, make_grid, validate_structure_set, verify_coincidence,
    BranchingProcess, CoincidenceReport, Grid, IntervalSpec, RayKind, Signal, StructureSet,
    StructureTriple, TripleDeviation, ValidationReport, Violation, DEFAULT_COINCIDENCE_TOL,
};
pub use recovery::{
    assemble_system, band_limit_mask, extrapolate_from_segment, rank_check, sample_reconstruct,
    sampling_indices, solve_direct, solve_projection, solve_projection_from, AssembledSystem,
    BranchError, DataBlock, ExtrapolationOptions, RankVerdict, RecoveryProblem, RecoveryReport,
    SolverChoice, SolverOptions, Verdict,
};
pub use spectral::{
    band_energy, difference_spectrum, forward_transform, inverse_transform, mask_energy,
    signal_energy, spectrum_energy, BandEnergy, FrequencyBand, Spectrum,
};
pub use topology::{
    is_connected, propagation_order, related, relation_depth, AdjacencyView, PropagationOrder,
    PropagationStep,
};
