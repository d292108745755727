//! Fixture generation from configuration.
//!
//! Generator evaluation is a pure function of (spec, grid, master seed), so
//! two branches built from identical sub-specs get bitwise-identical samples.
//! That is what makes scenario fixtures coincide exactly on their shared
//! history: the shared term is not merely close, it is the same computation.

use std::fs;
use std::path::Path;

use branchline_core::spectral::{inverse_transform, Spectrum};
use branchline_core::{BranchingProcess, Error, Grid, Result, Signal};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::{BranchSource, ExperimentConfig, GeneratorSpec};

const SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

fn noise_rng(master_seed: u64, generator_seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(master_seed.wrapping_mul(SEED_MIX).wrapping_add(generator_seed))
}

/// Evaluate one generator on the grid.
pub fn evaluate(spec: &GeneratorSpec, grid: &Grid, master_seed: u64) -> Result<Signal> {
    match spec {
        GeneratorSpec::Gaussian(p) => {
            if !(p.sigma.is_finite() && p.sigma > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "gaussian.sigma: must be positive, got {}",
                    p.sigma
                )));
            }
            Signal::from_fn(*grid, |t| {
                let u = (t - p.t_c) / p.sigma;
                Complex64::new(p.a * (-u * u / 2.0).exp(), 0.0)
            })
        }
        GeneratorSpec::ModulatedGaussian(p) => {
            if !(p.sigma.is_finite() && p.sigma > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "modulated_gaussian.sigma: must be positive, got {}",
                    p.sigma
                )));
            }
            Signal::from_fn(*grid, |t| {
                let u = (t - p.t_c) / p.sigma;
                Complex64::from_polar(p.a * (-u * u / 2.0).exp(), p.omega0 * t)
            })
        }
        GeneratorSpec::BandNoise(p) => {
            if !(p.omega.is_finite() && p.omega > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "band_noise.omega: must be positive, got {}",
                    p.omega
                )));
            }
            let mut rng = noise_rng(master_seed, p.seed);
            let mut spectrum = Spectrum::zeros(*grid);
            // Bins drawn in ascending order; the draw sequence is part of
            // the determinism contract.
            for j in grid.bins() {
                if grid.omega(j).abs() < p.omega {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    spectrum.set_coeff(j, Complex64::new(re, im));
                }
            }
            Ok(inverse_transform(&spectrum))
        }
        GeneratorSpec::Scenario(p) => {
            if !p.split_time.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "scenario.split_time: must be finite, got {}",
                    p.split_time
                )));
            }
            let base = evaluate(&p.base, grid, master_seed)?;
            let divergence = evaluate(&p.divergence, grid, master_seed)?;
            let mut samples = base.samples().to_vec();
            for (i, z) in samples.iter_mut().enumerate() {
                if grid.time(i) >= p.split_time {
                    *z += divergence.samples()[i];
                }
            }
            Signal::new(*grid, samples)
        }
    }
}

/// Read a branch from a `index,t,re,im` CSV file.
pub fn read_signal_csv(path: &Path, grid: &Grid) -> Result<Signal> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::with_capacity(grid.len());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if lineno == 0 && line.chars().any(|c| c.is_ascii_alphabetic()) {
            continue; // header row
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidData(format!(
                "{}:{}: expected 4 fields (index,t,re,im), got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| {
                Error::InvalidData(format!(
                    "{}:{}: bad {what} value {s:?}",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let re = parse(fields[2], "re")?;
        let im = parse(fields[3], "im")?;
        samples.push(Complex64::new(re, im));
    }
    if samples.len() != grid.len() {
        return Err(Error::InvalidData(format!(
            "{}: {} samples, grid expects {}",
            path.display(),
            samples.len(),
            grid.len()
        )));
    }
    Signal::new(*grid, samples)
}

/// Build the configured branching process. Deterministic for a fixed seed.
pub fn generate_fixture(cfg: &ExperimentConfig) -> Result<BranchingProcess> {
    let grid = cfg.grid.build()?;
    let mut branches = Vec::with_capacity(cfg.branches.len());
    for source in &cfg.branches {
        let signal = match source {
            BranchSource::Generator(spec) => evaluate(spec, &grid, cfg.seed)?,
            BranchSource::File(path) => read_signal_csv(path, &grid)?,
        };
        branches.push(signal);
    }
    let structure = cfg.structure()?;
    BranchingProcess::new(branches, structure)
}
