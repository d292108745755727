//! Discrete frequency-domain representation of grid signals.
//!
//! The forward transform approximates the continuous integral
//! `X(i w) = integral of x(t) e^{-i w t} dt` by its Riemann sum on the grid:
//!
//! ```text
//! coeffs[j] = dt * sum_p x[p] * exp(-i w_j (t0 + p dt)),   w_j = j * domega
//! ```
//!
//! with bins `j` running over `[-n/2, n/2)`. Because
//! `w_j (t0 + p dt) = w_j t0 + 2 pi j p / n`, the sum is an FFT up to one
//! unit-magnitude phase per bin, so the pair below inverts exactly up to
//! rounding. Energies use the matching convention
//! `(1/2pi) * sum |X[j]|^2 * domega = dt * sum |x[p]|^2`.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{Grid, Signal};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn run_fft(buf: &mut [Complex64], forward: bool) {
    PLANNER.with(|cell| {
        let mut planner = cell.borrow_mut();
        let fft = if forward {
            planner.plan_fft_forward(buf.len())
        } else {
            planner.plan_fft_inverse(buf.len())
        };
        fft.process(buf);
    });
}

/// `exp(-i w_j t0)`, computed the same way in both transform directions so
/// that the factors cancel exactly on a round trip.
fn phase_factor(grid: &Grid, j: i64) -> Complex64 {
    let theta = -grid.omega(j) * grid.t0();
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

fn fft_slot(n: usize, j: i64) -> usize {
    if j >= 0 {
        j as usize
    } else {
        (j + n as i64) as usize
    }
}

/// Frequency coefficients of a signal, stored in ascending-bin order.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "spectrum has {} coefficients but the grid holds {} bins",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Spectrum {
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Coefficients in ascending-bin order, `j = bin_min .. bin_min + n`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, j: i64) -> Complex64 {
        self.coeffs[self.grid.bin_offset(j)]
    }

    pub fn set_coeff(&mut self, j: i64, value: Complex64) {
        let q = self.grid.bin_offset(j);
        self.coeffs[q] = value;
    }

    pub fn max_magnitude(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Riemann-sum Fourier transform of `x` on its grid.
pub fn forward_transform(x: &Signal) -> Spectrum {
    let grid = x.grid();
    let n = grid.len();
    let mut buf: Vec<Complex64> = x.samples().to_vec();
    run_fft(&mut buf, true);
    let dt = grid.dt();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for j in grid.bins() {
        let value = buf[fft_slot(n, j)] * phase_factor(&grid, j) * dt;
        coeffs[grid.bin_offset(j)] = value;
    }
    Spectrum { grid, coeffs }
}

/// Exact inverse of [`forward_transform`] up to floating-point rounding.
pub fn inverse_transform(spectrum: &Spectrum) -> Signal {
    let grid = spectrum.grid;
    let n = grid.len();
    let dt = grid.dt();
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for j in grid.bins() {
        let value = spectrum.coeffs[grid.bin_offset(j)] * phase_factor(&grid, j).conj() / dt;
        buf[fft_slot(n, j)] = value;
    }
    run_fft(&mut buf, false);
    let scale = 1.0 / n as f64;
    for z in &mut buf {
        *z *= scale;
    }
    Signal::new(grid, buf).expect("inverse of finite spectrum is finite")
}

/// Pointwise difference of two spectra on the same grid.
pub fn difference_spectrum(a: &Spectrum, b: &Spectrum) -> Result<Spectrum> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(
            "difference of spectra on different grids".into(),
        ));
    }
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x - y)
        .collect();
    Ok(Spectrum {
        grid: a.grid,
        coeffs,
    })
}

/// Open frequency interval `(center - half_width, center + half_width)`.
///
/// Membership is strict: a bin landing exactly on an edge is excluded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyBand {
    pub center: f64,
    pub half_width: f64,
}

impl FrequencyBand {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !center.is_finite() || !half_width.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "band parameters must be finite, got center={center}, half_width={half_width}"
            )));
        }
        if half_width <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "band half-width must be positive, got {half_width}"
            )));
        }
        Ok(FrequencyBand { center, half_width })
    }

    pub fn mirrored(&self) -> FrequencyBand {
        FrequencyBand {
            center: -self.center,
            half_width: self.half_width,
        }
    }

    /// Bins strictly inside the band, ascending. May be empty when the band
    /// is narrower than the bin spacing or lies outside the grid's range.
    pub fn mask(&self, grid: &Grid) -> Vec<i64> {
        grid.bins()
            .filter(|&j| (grid.omega(j) - self.center).abs() < self.half_width)
            .collect()
    }
}

/// Band energy plus a flag for masks that degenerated to nothing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandEnergy {
    pub value: f64,
    pub empty_mask: bool,
}

/// `(1/2pi) * sum_{j in mask} |X[j]|^2 * domega`. An empty mask yields zero
/// with `empty_mask` set instead of an error.
pub fn band_energy(spectrum: &Spectrum, band: &FrequencyBand) -> BandEnergy {
    let mask = band.mask(&spectrum.grid);
    BandEnergy {
        value: mask_energy(spectrum, &mask),
        empty_mask: mask.is_empty(),
    }
}

/// Energy carried by an explicit bin mask.
pub fn mask_energy(spectrum: &Spectrum, mask: &[i64]) -> f64 {
    let grid = spectrum.grid;
    let sum: f64 = mask
        .iter()
        .map(|&j| spectrum.coeffs[grid.bin_offset(j)].norm_sqr())
        .sum();
    sum * grid.domega() / (2.0 * PI)
}

/// `dt * sum_p |x[p]|^2`, the grid analog of the squared L2 norm.
pub fn signal_energy(x: &Signal) -> f64 {
    x.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() * x.grid().dt()
}

/// `(1/2pi) * sum_j |X[j]|^2 * domega`; equals [`signal_energy`] of the
/// inverse transform up to rounding.
pub fn spectrum_energy(s: &Spectrum) -> f64 {
    let sum: f64 = s.coeffs.iter().map(|z| z.norm_sqr()).sum();
    sum * s.grid.domega() / (2.0 * PI)
}
