//! Dense linear-algebra primitives: orthogonal projections, least squares and
//! Gram-matrix eigenvalue extremes.
//!
//! Projections are formed from a thin Householder QR of the design and never
//! through an explicit `(MᵀM)⁻¹`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative singular-value cutoff below which a design is treated as rank deficient.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Orthogonal projector onto the column space of a full-column-rank design.
#[derive(Debug, Clone)]
pub struct Projector {
    q: Matrix,
    r: Matrix,
}

impl Projector {
    pub fn new(design: &Matrix) -> Result<Self> {
        Self::with_tol(design, DEFAULT_RANK_TOL)
    }

    pub fn with_tol(design: &Matrix, rank_tol: f64) -> Result<Self> {
        let (n, p) = design.shape();
        if p == 0 {
            return Ok(Projector {
                q: Matrix::zeros(n, 0),
                r: Matrix::zeros(0, 0),
            });
        }
        if p > n {
            return Err(Error::RankDeficient {
                columns: p,
                ratio: 0.0,
                tol: rank_tol,
            });
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "design contains non-finite entries".into(),
            ));
        }
        let qr = design.clone().qr();
        let r = qr.r();
        let sv = r.singular_values();
        let max = sv.max();
        let min = sv.min();
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        if !(ratio > rank_tol) {
            return Err(Error::RankDeficient {
                columns: p,
                ratio,
                tol: rank_tol,
            });
        }
        Ok(Projector { q: qr.q(), r })
    }

    pub fn nrows(&self) -> usize {
        self.q.nrows()
    }

    pub fn rank(&self) -> usize {
        self.q.ncols()
    }

    /// Orthonormal basis of the column space.
    pub fn basis(&self) -> &Matrix {
        &self.q
    }

    pub fn project(&self, target: &Matrix) -> Matrix {
        &self.q * self.q.tr_mul(target)
    }

    pub fn project_vec(&self, target: &Vector) -> Vector {
        &self.q * self.q.tr_mul(target)
    }

    pub fn residual(&self, target: &Matrix) -> Matrix {
        target - self.project(target)
    }

    pub fn residual_vec(&self, target: &Vector) -> Vector {
        target - self.project_vec(target)
    }

    /// Least-squares coefficients of `target` on the design.
    pub fn coefficients(&self, target: &Vector) -> Vector {
        if self.rank() == 0 {
            return Vector::zeros(0);
        }
        let qty = self.q.tr_mul(target);
        self.r
            .solve_upper_triangular(&qty)
            .expect("R has a nonzero diagonal after the rank check")
    }
}

/// Result of an ordinary least-squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vector,
    pub residuals: Vector,
    /// `‖residuals‖² / (n − p)`, or 0 when the fit is saturated.
    pub residual_variance: f64,
}

impl OlsFit {
    pub fn fitted(&self, response: &Vector) -> Vector {
        response - &self.residuals
    }
}

fn check_rows(design: &Matrix, rows: usize) -> Result<()> {
    if design.nrows() != rows {
        return Err(Error::Dimension(format!(
            "design has {} rows, target has {}",
            design.nrows(),
            rows
        )));
    }
    Ok(())
}

/// `P_design · target`.
pub fn project(design: &Matrix, target: &Matrix) -> Result<Matrix> {
    check_rows(design, target.nrows())?;
    Ok(Projector::new(design)?.project(target))
}

/// `(I − P_design) · target`.
pub fn residual_project(design: &Matrix, target: &Matrix) -> Result<Matrix> {
    check_rows(design, target.nrows())?;
    Ok(Projector::new(design)?.residual(target))
}

pub fn ols(design: &Matrix, response: &Vector) -> Result<OlsFit> {
    check_rows(design, response.len())?;
    let proj = Projector::new(design)?;
    Ok(ols_with(&proj, response))
}

pub(crate) fn ols_with(proj: &Projector, response: &Vector) -> OlsFit {
    let coefficients = proj.coefficients(response);
    let residuals = proj.residual_vec(response);
    let dof = proj.nrows().saturating_sub(proj.rank());
    let residual_variance = if dof > 0 {
        residuals.norm_squared() / dof as f64
    } else {
        0.0
    };
    OlsFit {
        coefficients,
        residuals,
        residual_variance,
    }
}

/// Columns `indices` of `m`, in the given order.
pub fn select_columns(m: &Matrix, indices: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), indices.len(), |i, j| m[(i, indices[j])])
}

/// Horizontal concatenation of blocks with equal row counts.
pub fn hstack(blocks: &[&Matrix]) -> Matrix {
    let n = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let p: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(n, p);
    let mut col = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), n);
        out.columns_mut(col, b.ncols()).copy_from(*b);
        col += b.ncols();
    }
    out
}

pub fn column_matrix(v: &Vector) -> Matrix {
    Matrix::from_column_slice(v.len(), 1, v.as_slice())
}

/// Smallest and largest eigenvalue of the Gram matrix of the selected columns.
pub fn gram_support_extremes(design: &Matrix, support: &[usize]) -> Result<(f64, f64)> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if let Some(&bad) = support.iter().find(|&&j| j >= design.ncols()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: design.ncols(),
        });
    }
    let sub = select_columns(design, support);
    Ok(symmetric_extremes(sub.tr_mul(&sub)))
}

pub(crate) fn symmetric_extremes(gram: Matrix) -> (f64, f64) {
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let lo = eig.min().max(0.0);
    let hi = eig.max().max(0.0);
    (lo, hi)
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Median; even lengths average the two central order statistics.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    assert!(n > 0, "median of empty slice");
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Matrix {
        Matrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn projects_onto_first_axis() {
        let design = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let target = Matrix::from_column_slice(2, 1, &[3.0, 4.0]);
        let p = project(&design, &target).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p[(1, 0)], 0.0, epsilon = 1e-14);
        let r = residual_project(&design, &target).unwrap();
        assert_abs_diff_eq!(r[(0, 0)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r[(1, 0)], 4.0, epsilon = 1e-14);
    }

    #[test]
    fn identity_design_reproduces_target() {
        let design = Matrix::identity(2, 2);
        let target = Matrix::from_row_slice(2, 2, &[1.5, -2.0, 0.25, 7.0]);
        let p = project(&design, &target).unwrap();
        assert!((p - &target).abs().max() < 1e-14);
    }

    #[test]
    fn orthogonal_target_is_unchanged_by_residual_projection() {
        let design = Matrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]);
        let target = Matrix::from_column_slice(3, 1, &[1.0, -1.0, 5.0]);
        let r = residual_project(&design, &target).unwrap();
        assert!((r - &target).abs().max() < 1e-14);
    }

    #[test]
    fn projection_is_idempotent_symmetric_and_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let design = random_matrix(&mut rng, 5, 2);
            let v = random_matrix(&mut rng, 5, 3);
            let u = random_matrix(&mut rng, 5, 1);
            let pv = project(&design, &v).unwrap();
            let ppv = project(&design, &pv).unwrap();
            assert!((&ppv - &pv).abs().max() < 1e-10);
            let rv = residual_project(&design, &v).unwrap();
            assert!((&pv + &rv - &v).abs().max() < 1e-10);
            // <P u, v> = <u, P v>
            let pu = project(&design, &u).unwrap();
            let v0 = v.column(0).into_owned();
            let pv0 = pv.column(0).into_owned();
            assert!((pu.column(0).dot(&v0) - u.column(0).dot(&pv0)).abs() < 1e-10);
            // Pythagorean identity per column
            for j in 0..3 {
                let total = v.column(j).norm_squared();
                let split = pv.column(j).norm_squared() + rv.column(j).norm_squared();
                assert!((total - split).abs() <= 1e-8 * total.max(1e-300));
            }
        }
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let design = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let target = Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(matches!(
            project(&design, &target),
            Err(Error::RankDeficient { .. })
        ));
        assert!(matches!(
            ols(&design, &Vector::from_vec(vec![1.0, 2.0, 3.0])),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn ols_exact_fit() {
        let design = Matrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let fit = ols(&design, &Vector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_abs_diff_eq!(fit.coefficients[0], 2.0, epsilon = 1e-12);
        assert!(fit.residuals.abs().max() < 1e-12);
    }

    #[test]
    fn ols_identity_columns_recover_response() {
        let design = Matrix::identity(3, 3);
        let y = Vector::from_vec(vec![0.3, -1.0, 8.0]);
        let fit = ols(&design, &y).unwrap();
        assert!((fit.coefficients - &y).abs().max() < 1e-12);
        assert_eq!(fit.residual_variance, 0.0);
    }

    #[test]
    fn ols_normal_equations_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let design = random_matrix(&mut rng, 50, 3);
        let y = Vector::from_fn(50, |_, _| rng.gen_range(-2.0..2.0));
        let fit = ols(&design, &y).unwrap();
        let xtr = design.tr_mul(&fit.residuals);
        for j in 0..3 {
            let scale = design.column(j).norm();
            assert!(xtr[j].abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn ols_column_rescaling_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let design = random_matrix(&mut rng, 30, 3);
        let y = Vector::from_fn(30, |_, _| rng.gen_range(-2.0..2.0));
        let base = ols(&design, &y).unwrap();
        let c = -3.7;
        let mut scaled = design.clone();
        scaled.column_mut(1).scale_mut(c);
        let fit = ols(&scaled, &y).unwrap();
        assert!((fit.coefficients[1] - base.coefficients[1] / c).abs() < 1e-8);
        assert!((fit.fitted(&y) - base.fitted(&y)).abs().max() < 1e-8);
    }

    #[test]
    fn gram_extremes_trivial_cases() {
        let q = Matrix::identity(4, 3);
        let (lo, hi) = gram_support_extremes(&q, &[0, 2]).unwrap();
        assert_abs_diff_eq!(lo, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-12);
        let single = Matrix::from_column_slice(3, 1, &[1.0, 2.0, 2.0]);
        let (lo, hi) = gram_support_extremes(&single, &[0]).unwrap();
        assert_abs_diff_eq!(lo, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 9.0, epsilon = 1e-12);
        assert!(matches!(
            gram_support_extremes(&single, &[]),
            Err(Error::EmptySupport)
        ));
        assert!(matches!(
            gram_support_extremes(&single, &[1]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    /// Quadratic-form extremes over the unit circle, sampled at 10⁴ angles.
    fn angular_sweep(design: &Matrix, a: usize, b: usize) -> (f64, f64) {
        let ca = design.column(a);
        let cb = design.column(b);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..10_000 {
            let t = std::f64::consts::PI * k as f64 / 10_000.0;
            let v = ca * t.cos() + cb * t.sin();
            let q = v.norm_squared();
            lo = lo.min(q);
            hi = hi.max(q);
        }
        (lo, hi)
    }

    #[test]
    fn gram_extremes_match_angular_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let design = random_matrix(&mut rng, 6, 4);
            let (lo, hi) = gram_support_extremes(&design, &[1, 3]).unwrap();
            let (slo, shi) = angular_sweep(&design, 1, 3);
            assert!((lo - slo).abs() < 1e-6, "{lo} vs {slo}");
            assert!((hi - shi).abs() < 1e-6, "{hi} vs {shi}");
        }
    }

    #[test]
    fn median_and_quantiles() {
        assert_eq!(median(&[1.0, 1.0, 1.0, 5.0, 9.0]), 1.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.0);
        assert_eq!(quantile_sorted(&s, 0.125), 0.5);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
    }
}
