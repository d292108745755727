//! Dense complex matrices with just enough factorization machinery for the
//! recovery solvers: full-pivot elimination for rank decisions, Householder
//! least squares, and singular-value estimates for conditioning.

// Indexed loops follow the factorization formulas; iterator rewrites hide
// the submatrix ranges.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .map(|(a, v)| a * v)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// `A^H y`.
    pub fn adjoint_mul_vec(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let yi = y[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * yi;
            }
        }
        out
    }

    pub fn max_row_norm_sq(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug)]
pub struct RankResult {
    pub rank: usize,
    /// Magnitude of the first (globally largest) pivot.
    pub largest_pivot: f64,
    /// Pivots at or below this count as zero.
    pub threshold: f64,
}

/// Numerical rank by Gaussian elimination with full pivoting. Elimination
/// stops once the largest remaining entry drops to `rel_tol` times the
/// first pivot.
pub fn rank(a: &CMatrix, rel_tol: f64) -> RankResult {
    let mut work = a.clone();
    let (m, n) = (work.rows, work.cols);
    let steps = m.min(n);
    let mut largest_pivot = 0.0;
    let mut threshold = 0.0;
    let mut r = 0;

    for step in 0..steps {
        let mut best = (step, step);
        let mut best_mag = 0.0;
        for i in step..m {
            for j in step..n {
                let mag = work.at(i, j).norm();
                if mag > best_mag {
                    best_mag = mag;
                    best = (i, j);
                }
            }
        }
        if step == 0 {
            largest_pivot = best_mag;
            threshold = rel_tol * best_mag;
        }
        if best_mag <= threshold {
            break;
        }
        r += 1;

        let (pi, pj) = best;
        if pi != step {
            for j in 0..n {
                let tmp = work.at(step, j);
                work.set(step, j, work.at(pi, j));
                work.set(pi, j, tmp);
            }
        }
        if pj != step {
            for i in 0..m {
                let tmp = work.at(i, step);
                work.set(i, step, work.at(i, pj));
                work.set(i, pj, tmp);
            }
        }
        let pivot = work.at(step, step);
        for i in step + 1..m {
            let factor = work.at(i, step) / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for j in step..n {
                let v = work.at(i, j) - factor * work.at(step, j);
                work.set(i, j, v);
            }
        }
    }

    RankResult {
        rank: r,
        largest_pivot,
        threshold,
    }
}

/// Householder QR in place: on return the upper triangle of `a` holds `R`
/// and `b` (when given) holds `Q^H b`. Requires `rows >= cols`.
fn householder_qr(a: &mut CMatrix, mut b: Option<&mut [Complex64]>) {
    let (m, n) = (a.rows, a.cols);
    debug_assert!(m >= n);
    let mut v = vec![Complex64::new(0.0, 0.0); m];

    for k in 0..n {
        let mut norm_sq = 0.0;
        for i in k..m {
            norm_sq += a.at(i, k).norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a.at(k, k);
        let alpha = if x0.norm() == 0.0 {
            Complex64::new(-norm, 0.0)
        } else {
            -(x0 / x0.norm()) * norm
        };
        for i in k..m {
            v[i] = a.at(i, k);
        }
        v[k] -= alpha;
        let v_norm_sq: f64 = v[k..m].iter().map(|z| z.norm_sqr()).sum();
        if v_norm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / v_norm_sq;

        for j in k..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k..m {
                dot += v[i].conj() * a.at(i, j);
            }
            let scaled = beta * dot;
            for i in k..m {
                let t = a.at(i, j) - v[i] * scaled;
                a.set(i, j, t);
            }
        }
        if let Some(rhs) = b.as_deref_mut() {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in k..m {
                dot += v[i].conj() * rhs[i];
            }
            let scaled = beta * dot;
            for i in k..m {
                rhs[i] -= v[i] * scaled;
            }
        }
    }
}

/// Minimize `|A x - b|` (plus `ridge * |x|^2` when `ridge > 0`) by QR on
/// the possibly stacked system. Fails if the effective matrix is rank
/// deficient, which a positive ridge rules out.
pub fn solve_least_squares(a: &CMatrix, b: &[Complex64], ridge: f64) -> Result<Vec<Complex64>> {
    if b.len() != a.rows {
        return Err(Error::InvalidArgument(format!(
            "right-hand side has {} entries for {} rows",
            b.len(),
            a.rows
        )));
    }
    if !(ridge.is_finite() && ridge >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ridge weight must be nonnegative, got {ridge}"
        )));
    }
    let n = a.cols;
    let extra = if ridge > 0.0 { n } else { 0 };
    if a.rows + extra < n {
        return Err(Error::InvalidProblem(format!(
            "{} rows cannot determine {n} unknowns",
            a.rows
        )));
    }

    let mut work = CMatrix::zeros(a.rows + extra, n);
    for i in 0..a.rows {
        work.row_mut(i).copy_from_slice(a.row(i));
    }
    if ridge > 0.0 {
        let s = ridge.sqrt();
        for k in 0..n {
            work.set(a.rows + k, k, Complex64::new(s, 0.0));
        }
    }
    let mut rhs = vec![Complex64::new(0.0, 0.0); a.rows + extra];
    rhs[..a.rows].copy_from_slice(b);

    householder_qr(&mut work, Some(&mut rhs));

    let diag_max = (0..n).map(|k| work.at(k, k).norm()).fold(0.0, f64::max);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let d = work.at(k, k);
        if d.norm() <= 1e-14 * diag_max {
            return Err(Error::InvalidProblem(
                "system is numerically rank deficient".into(),
            ));
        }
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= work.at(k, j) * x[j];
        }
        x[k] = s / d;
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug)]
pub struct ConditionEstimate {
    pub sigma_max: f64,
    pub sigma_min: f64,
}

impl ConditionEstimate {
    pub fn cond(&self) -> f64 {
        if self.sigma_min == 0.0 {
            f64::INFINITY
        } else {
            self.sigma_max / self.sigma_min
        }
    }
}

fn start_vector(n: usize) -> Vec<Complex64> {
    // Fixed spread of phases; deterministic and unlikely to be orthogonal
    // to the extreme singular vectors.
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|k| Complex64::from_polar(scale, 0.37 * (k as f64 + 1.0)))
        .collect()
}

/// Estimate the extreme singular values of `a` (`rows >= cols`) through its
/// QR factor: power iteration on `R^H R` for the largest, inverse iteration
/// through the triangular solves for the smallest.
pub fn estimate_condition(a: &CMatrix, iters: usize) -> Result<ConditionEstimate> {
    let n = a.cols;
    if a.rows < n {
        return Err(Error::InvalidProblem(format!(
            "condition estimate needs at least as many rows as columns ({} < {n})",
            a.rows
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("matrix has no columns".into()));
    }
    let mut r = a.clone();
    householder_qr(&mut r, None);

    let mul_r = |x: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|i| (i..n).map(|j| r.at(i, j) * x[j]).sum())
            .collect()
    };
    let mul_rh = |x: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|j| (0..=j).map(|i| r.at(i, j).conj() * x[i]).sum())
            .collect()
    };

    let mut v = start_vector(n);
    let mut sigma_max = 0.0;
    for _ in 0..iters {
        let w = mul_r(&v);
        sigma_max = vec_norm(&w);
        let u = mul_rh(&w);
        let norm = vec_norm(&u);
        if norm == 0.0 {
            sigma_max = 0.0;
            break;
        }
        for (vi, ui) in v.iter_mut().zip(&u) {
            *vi = ui / norm;
        }
    }

    let diag_min = (0..n).map(|k| r.at(k, k).norm()).fold(f64::INFINITY, f64::min);
    if diag_min == 0.0 {
        return Ok(ConditionEstimate {
            sigma_max,
            sigma_min: 0.0,
        });
    }
    let solve_rh = |b: &[Complex64]| -> Vec<Complex64> {
        // R^H is lower triangular.
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= r.at(j, i).conj() * y[j];
            }
            y[i] = s / r.at(i, i).conj();
        }
        y
    };
    let solve_r = |b: &[Complex64]| -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= r.at(i, j) * y[j];
            }
            y[i] = s / r.at(i, i);
        }
        y
    };

    let mut v = start_vector(n);
    let mut growth = 0.0;
    for _ in 0..iters {
        let w = solve_rh(&v);
        let z = solve_r(&w);
        growth = vec_norm(&z);
        if !growth.is_finite() || growth == 0.0 {
            break;
        }
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / growth;
        }
    }
    let sigma_min = if growth.is_finite() && growth > 0.0 {
        1.0 / growth.sqrt()
    } else {
        0.0
    };
    Ok(ConditionEstimate {
        sigma_max,
        sigma_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CMatrix {
        let mut a = CMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                a.set(i, j, c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            }
        }
        a
    }

    #[test]
    fn rank_of_simple_matrices() {
        let mut eye = CMatrix::zeros(3, 3);
        for k in 0..3 {
            eye.set(k, k, c(1.0, 0.0));
        }
        assert_eq!(rank(&eye, 1e-10).rank, 3);
        assert_eq!(rank(&CMatrix::zeros(4, 3), 1e-10).rank, 0);

        // Third row is the sum of the first two.
        let mut a = CMatrix::zeros(3, 3);
        a.row_mut(0).copy_from_slice(&[c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)]);
        a.row_mut(1).copy_from_slice(&[c(0.5, 0.0), c(-1.0, 0.0), c(3.0, 0.5)]);
        for j in 0..3 {
            let v = a.at(0, j) + a.at(1, j);
            a.set(2, j, v);
        }
        assert_eq!(rank(&a, 1e-10).rank, 2);
    }

    #[test]
    fn rank_matches_planted_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(m, n, r) in &[(6, 6, 3), (8, 5, 5), (5, 8, 2), (7, 7, 1)] {
            let b = random_matrix(&mut rng, m, r);
            let cmat = random_matrix(&mut rng, r, n);
            let mut a = CMatrix::zeros(m, n);
            for i in 0..m {
                for j in 0..n {
                    let mut s = c(0.0, 0.0);
                    for k in 0..r {
                        s += b.at(i, k) * cmat.at(k, j);
                    }
                    a.set(i, j, s);
                }
            }
            assert_eq!(rank(&a, 1e-10).rank, r, "planted rank {r} in {m}x{n}");
        }
    }

    #[test]
    fn square_system_solves_exactly() {
        let mut a = CMatrix::zeros(2, 2);
        a.row_mut(0).copy_from_slice(&[c(2.0, 0.0), c(1.0, -1.0)]);
        a.row_mut(1).copy_from_slice(&[c(0.0, 1.0), c(3.0, 0.0)]);
        let x_true = vec![c(1.0, 2.0), c(-0.5, 0.25)];
        let b = a.mul_vec(&x_true);
        let x = solve_least_squares(&a, &b, 0.0).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn consistent_tall_system_recovers_the_generator() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(&mut rng, 9, 4);
        let x_true: Vec<Complex64> = (0..4)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let b = a.mul_vec(&x_true);
        let x = solve_least_squares(&a, &b, 0.0).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).norm() < 1e-10);
        }
    }

    #[test]
    fn residual_is_orthogonal_to_the_column_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_matrix(&mut rng, 10, 3);
        let b: Vec<Complex64> = (0..10)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let x = solve_least_squares(&a, &b, 0.0).unwrap();
        let ax = a.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let grad = a.adjoint_mul_vec(&r);
        assert!(vec_norm(&grad) <= 1e-12 * vec_norm(&b).max(1.0));
    }

    #[test]
    fn ridge_solution_satisfies_the_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let a = random_matrix(&mut rng, 6, 4);
        let b: Vec<Complex64> = (0..6)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let lambda = 0.03;
        let x = solve_least_squares(&a, &b, lambda).unwrap();
        let ax = a.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        // A^H (b - A x) = lambda x
        let grad = a.adjoint_mul_vec(&r);
        for (g, xi) in grad.iter().zip(&x) {
            assert!((g - lambda * xi).norm() <= 1e-12);
        }
    }

    #[test]
    fn ridge_makes_flat_systems_solvable() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = random_matrix(&mut rng, 2, 5);
        let b: Vec<Complex64> = (0..2)
            .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        assert!(solve_least_squares(&a, &b, 0.0).is_err());
        let x = solve_least_squares(&a, &b, 1e-8).unwrap();
        let ax = a.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        assert!(vec_norm(&r) <= 1e-3 * vec_norm(&b));
    }

    #[test]
    fn rank_deficient_least_squares_is_refused() {
        let mut a = CMatrix::zeros(3, 2);
        for i in 0..3 {
            a.set(i, 0, c(1.0, 0.0));
            a.set(i, 1, c(2.0, 0.0));
        }
        let b = vec![c(1.0, 0.0); 3];
        assert!(matches!(
            solve_least_squares(&a, &b, 0.0),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn condition_of_a_diagonal_matrix() {
        let mut a = CMatrix::zeros(4, 2);
        a.set(0, 0, c(3.0, 0.0));
        a.set(1, 1, c(0.01, 0.0));
        let est = estimate_condition(&a, 60).unwrap();
        assert!((est.sigma_max - 3.0).abs() < 0.01 * 3.0);
        assert!((est.sigma_min - 0.01).abs() < 0.01 * 0.01);
        assert!((est.cond() - 300.0).abs() < 5.0);
    }

    #[test]
    fn condition_of_a_unitary_block_is_one() {
        // Rows of the 4-point DFT matrix, scaled to unit columns.
        let n = 4;
        let mut a = CMatrix::zeros(n, n);
        let s = 1.0 / (n as f64).sqrt();
        for p in 0..n {
            for q in 0..n {
                let phase = -2.0 * std::f64::consts::PI * (p * q) as f64 / n as f64;
                a.set(p, q, Complex64::from_polar(s, phase));
            }
        }
        let est = estimate_condition(&a, 60).unwrap();
        assert!((est.cond() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn singular_matrix_reports_infinite_condition() {
        let mut a = CMatrix::zeros(3, 2);
        a.set(0, 0, c(1.0, 0.0));
        a.set(1, 0, c(2.0, 0.0));
        let est = estimate_condition(&a, 30).unwrap();
        assert_eq!(est.sigma_min, 0.0);
        assert!(est.cond().is_infinite());
    }

    #[test]
    fn singular_values_match_elimination_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = random_matrix(&mut rng, 8, 8);
        let est = estimate_condition(&a, 80).unwrap();
        // Frobenius norm bounds: sigma_max <= |A|_F <= sqrt(n) sigma_max.
        let fro: f64 = (0..8)
            .map(|i| a.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            .sqrt();
        assert!(est.sigma_max <= fro * (1.0 + 1e-9));
        assert!(fro <= est.sigma_max * (8.0f64).sqrt() * (1.0 + 1e-9));
    }
}
