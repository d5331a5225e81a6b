//! Dense least-squares kernel: OLS with t/F tests, VIF, condition number of the
//! column-normalized design matrix and Pearson correlation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("insufficient data: {samples} samples for {params} parameters")]
    InsufficientData { samples: usize, params: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("column {0} is constant")]
    ConstantColumn(usize),
    #[error("column {0} is all zeros")]
    ZeroColumn(usize),
    #[error("correlation undefined for constant input")]
    UndefinedCorrelation,
    #[error("need at least {needed} columns, got {got}")]
    TooFewColumns { needed: usize, got: usize },
    #[error("non-finite input value")]
    NonFinite,
}

/// Sidedness of the coefficient t-tests. The F-test is always upper-tailed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    #[default]
    TwoSided,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsOptions {
    pub with_intercept: bool,
    pub sided: Sidedness,
}

impl Default for OlsOptions {
    fn default() -> Self {
        Self {
            with_intercept: true,
            sided: Sidedness::TwoSided,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    pub coefficients: Vec<f64>,
    /// Zero when fitted without intercept.
    pub intercept: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sse: f64,
    pub r_squared: f64,
    pub t_pvalues: Vec<f64>,
    pub f_pvalue: f64,
    /// Mean of `|fitted - y| / |y|` over samples with `y != 0`; infinite when
    /// every target is zero.
    pub mean_relative_error: f64,
    /// Samples skipped by the relative-error metric because `y == 0`.
    pub zero_targets: usize,
    pub residual_dof: usize,
}

const RANK_TOL: f64 = 1e-10;

/// Column-normalized thin SVD of `a`; returns the scale factors as well.
fn normalized_svd(
    a: &DMatrix<f64>,
) -> Result<(nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>, Vec<f64>), StatsError> {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = norms.iter().position(|n| *n == 0.0) {
        return Err(StatsError::ZeroColumn(j));
    }
    let mut scaled = a.clone();
    for (j, n) in norms.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / n);
    }
    Ok((scaled.svd(true, true), norms))
}

fn check_finite(x: &DMatrix<f64>, y: &[f64]) -> Result<(), StatsError> {
    if x.iter().chain(y).all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn t_pvalue(t: f64, dof: usize, sided: Sidedness) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("dof > 0");
    let tail = dist.sf(t.abs());
    match sided {
        Sidedness::TwoSided => (2.0 * tail).min(1.0),
        Sidedness::OneSided => tail,
    }
}

fn f_pvalue(f: f64, d1: usize, d2: usize) -> f64 {
    if f.is_nan() {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    FisherSnedecor::new(d1 as f64, d2 as f64)
        .expect("positive dof")
        .sf(f.max(0.0))
}

/// Ordinary least squares of `y` on the columns of `x`.
///
/// Requires `n >= k + 2` samples for `k` regressors. t p-values use the
/// residual degrees of freedom (`n - k - 1` with intercept, `n - k` without);
/// the F-test compares against the intercept-only (or zero) model.
pub fn ols_fit(x: &DMatrix<f64>, y: &[f64], opts: OlsOptions) -> Result<OlsResult, StatsError> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(StatsError::LengthMismatch(n, y.len()));
    }
    check_finite(x, y)?;
    if n < k + 2 {
        return Err(StatsError::InsufficientData {
            samples: n,
            params: k + usize::from(opts.with_intercept),
        });
    }
    let p = k + usize::from(opts.with_intercept);
    if p == 0 {
        return Err(StatsError::TooFewColumns { needed: 1, got: 0 });
    }
    let design = if opts.with_intercept {
        let mut d = DMatrix::from_element(n, p, 1.0);
        d.columns_mut(1, k).copy_from(x);
        d
    } else {
        x.clone()
    };
    let (svd, norms) = normalized_svd(&design).map_err(|e| match e {
        StatsError::ZeroColumn(_) => StatsError::SingularDesign,
        other => other,
    })?;
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    if !(smin > RANK_TOL * smax) {
        return Err(StatsError::SingularDesign);
    }
    let u = svd.u.as_ref().expect("u computed");
    let v_t = svd.v_t.as_ref().expect("v_t computed");
    let yv = DVector::from_column_slice(y);
    let uty = u.transpose() * &yv;
    let scaled_beta = v_t.transpose() * DVector::from_iterator(p, uty.iter().zip(sv.iter()).map(|(a, s)| a / s));
    let beta: Vec<f64> = scaled_beta.iter().zip(&norms).map(|(b, d)| b / d).collect();

    let fitted_v = &design * DVector::from_column_slice(&beta);
    let fitted: Vec<f64> = fitted_v.iter().copied().collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, f)| a - f).collect();
    let sse: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = n - p;

    let sst = if opts.with_intercept {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let r_squared = if sst > 0.0 {
        (1.0 - sse / sst).clamp(0.0, 1.0)
    } else if sse <= f64::EPSILON {
        1.0
    } else {
        0.0
    };

    let sigma2 = sse / dof as f64;
    // diag of (A^T A)^{-1} = D^{-1} V S^{-2} V^T D^{-1}
    let inv_diag: Vec<f64> = (0..p)
        .map(|j| {
            let s: f64 = (0..p).map(|r| (v_t[(r, j)] / sv[r]).powi(2)).sum();
            s / (norms[j] * norms[j])
        })
        .collect();
    let offset = usize::from(opts.with_intercept);
    let t_pvalues: Vec<f64> = (offset..p)
        .map(|j| {
            let se = (sigma2 * inv_diag[j]).sqrt();
            let t = if se > 0.0 {
                beta[j] / se
            } else if beta[j] != 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            };
            t_pvalue(t, dof, opts.sided)
        })
        .collect();

    let ssr = (sst - sse).max(0.0);
    let f = if k == 0 {
        f64::NAN
    } else if sse > 0.0 {
        (ssr / k as f64) / (sse / dof as f64)
    } else if ssr > 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    };
    let f_p = if k == 0 { 1.0 } else { f_pvalue(f, k, dof) };

    let mut zero_targets = 0;
    let mut rel_sum = 0.0;
    for (yt, ft) in y.iter().zip(&fitted) {
        if *yt == 0.0 {
            zero_targets += 1;
        } else {
            rel_sum += (ft - yt).abs() / yt.abs();
        }
    }
    let counted = n - zero_targets;
    let mean_relative_error = if counted > 0 {
        rel_sum / counted as f64
    } else {
        f64::INFINITY
    };

    let (intercept, coefficients) = if opts.with_intercept {
        (beta[0], beta[1..].to_vec())
    } else {
        (0.0, beta)
    };
    Ok(OlsResult {
        coefficients,
        intercept,
        fitted,
        residuals,
        sse,
        r_squared,
        t_pvalues,
        f_pvalue: f_p,
        mean_relative_error,
        zero_targets,
        residual_dof: dof,
    })
}

/// R² of `target` regressed (with intercept) on `others`, tolerant of
/// collinear regressors.
fn auxiliary_r_squared(target: DVector<f64>, others: &DMatrix<f64>) -> f64 {
    let n = target.len();
    let mean = target.mean();
    let sst: f64 = target.iter().map(|v| (v - mean).powi(2)).sum();
    let mut design = DMatrix::from_element(n, others.ncols() + 1, 1.0);
    design.columns_mut(1, others.ncols()).copy_from(others);
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    for (j, d) in norms.iter().enumerate() {
        if *d > 0.0 {
            design.column_mut(j).scale_mut(1.0 / d);
        }
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let beta = svd.solve(&target, RANK_TOL * smax).expect("u and v_t computed");
    let resid = target - design * beta;
    let sse = resid.norm_squared();
    (1.0 - sse / sst).clamp(0.0, 1.0)
}

/// Variance inflation factor of every column; `+inf` marks exact collinearity.
pub fn vif(x: &DMatrix<f64>) -> Result<Vec<f64>, StatsError> {
    let (n, k) = x.shape();
    if k < 2 {
        return Err(StatsError::TooFewColumns { needed: 2, got: k });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    for (j, col) in x.column_iter().enumerate() {
        let first = col[0];
        if col.iter().all(|v| *v == first) {
            return Err(StatsError::ConstantColumn(j));
        }
    }
    Ok((0..k)
        .map(|j| {
            let target = x.column(j).into_owned();
            let others = x.clone().remove_column(j);
            debug_assert_eq!(others.nrows(), n);
            let r2 = auxiliary_r_squared(target, &others);
            let tol = 1.0 - r2;
            if tol <= 1e-12 {
                f64::INFINITY
            } else {
                1.0 / tol
            }
        })
        .collect())
}

/// Ratio of extreme singular values after scaling every column to unit norm.
pub fn condition_number(x: &DMatrix<f64>) -> Result<f64, StatsError> {
    if x.ncols() == 0 {
        return Err(StatsError::TooFewColumns { needed: 1, got: 0 });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (svd, _) = normalized_svd(x)?;
    let sv = &svd.singular_values;
    let smin = sv.min();
    if smin <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((sv.max() / smin).max(1.0))
}

/// Collinearity diagnostics on a regressor matrix (no intercept column).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDiagnostics {
    /// Empty for a single regressor.
    pub vif: Vec<f64>,
    pub condition_number: f64,
}

impl DesignDiagnostics {
    pub fn compute(x: &DMatrix<f64>) -> Result<Self, StatsError> {
        let vif = if x.ncols() >= 2 { vif(x)? } else { Vec::new() };
        Ok(Self {
            vif,
            condition_number: condition_number(x)?,
        })
    }

    pub fn max_vif(&self) -> f64 {
        self.vif.iter().copied().fold(1.0, f64::max)
    }
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::InsufficientData {
            samples: x.len(),
            params: 2,
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::UndefinedCorrelation);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn columns_to_matrix(columns: &[&[f64]]) -> DMatrix<f64> {
    let n = columns.first().map_or(0, |c| c.len());
    DMatrix::from_fn(n, columns.len(), |i, j| columns[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let r = ols_fit(&col(&x), &y, OlsOptions::default()).unwrap();
        assert_relative_eq!(r.coefficients[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.intercept, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r.r_squared, 1.0, epsilon = 1e-12);
        assert!(r.mean_relative_error < 1e-14);
        assert!(r.t_pvalues[0] < 1e-10);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let m = columns_to_matrix(&[&x, &x]);
        assert_eq!(ols_fit(&m, &y, OlsOptions::default()), Err(StatsError::SingularDesign));
    }

    #[test]
    fn too_few_samples() {
        let x = [1.0, 2.0];
        assert!(matches!(
            ols_fit(&col(&x), &[1.0, 3.0], OlsOptions::default()),
            Err(StatsError::InsufficientData { .. })
        ));
    }

    #[test]
    fn large_scale_columns_are_not_singular() {
        // USD-scale regressors next to a unit intercept column
        let x: Vec<f64> = (0..9).map(|i| 1e11 + 3e9 * f64::from(i * i % 7)).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v + 2e9).collect();
        let r = ols_fit(&col(&x), &y, OlsOptions::default()).unwrap();
        assert_relative_eq!(r.coefficients[0], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn zero_targets_are_skipped_by_error_metric() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.0, 2.1, 2.9, 4.2, 4.8];
        let r = ols_fit(&col(&x), &y, OlsOptions::default()).unwrap();
        assert_eq!(r.zero_targets, 1);
        assert!(r.mean_relative_error.is_finite());
    }

    #[test]
    fn student_t_reference_quantile() {
        // t_{0.975, 8} = 2.306004135
        assert_relative_eq!(t_pvalue(2.306_004_135, 8, Sidedness::TwoSided), 0.05, epsilon = 1e-8);
        assert_relative_eq!(t_pvalue(2.306_004_135, 8, Sidedness::OneSided), 0.025, epsilon = 1e-8);
    }

    #[test]
    fn f_test_matches_squared_t_for_one_regressor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..12).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v + 0.5 * rng.random::<f64>()).collect();
        let r = ols_fit(&col(&x), &y, OlsOptions::default()).unwrap();
        assert_relative_eq!(r.f_pvalue, r.t_pvalues[0], epsilon = 1e-10);
    }

    #[test]
    fn residuals_are_orthogonal_to_design() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let cols: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..15).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect();
            let y: Vec<f64> = (0..15).map(|_| rng.random_range(-5.0..5.0)).collect();
            let m = columns_to_matrix(&[&cols[0], &cols[1], &cols[2]]);
            let r = ols_fit(&m, &y, OlsOptions::default()).unwrap();
            let scale: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let s: f64 = r.residuals.iter().sum();
            assert!(s.abs() < 1e-8 * scale);
            for c in &cols {
                let dot: f64 = c.iter().zip(&r.residuals).map(|(a, b)| a * b).sum();
                let cn: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(dot.abs() < 1e-8 * scale * cn);
            }
        }
    }

    #[test]
    fn r_squared_is_squared_correlation_of_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
            let y: Vec<f64> = x.iter().map(|v| 3.0 * v + rng.random::<f64>()).collect();
            let r = ols_fit(&col(&x), &y, OlsOptions::default()).unwrap();
            let p = pearson(&r.fitted, &y).unwrap();
            assert_relative_eq!(r.r_squared, p * p, epsilon = 1e-10);
        }
    }

    #[test]
    fn noise_regressions_mostly_insignificant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let trials = 1000;
        let mut not_significant = 0;
        for _ in 0..trials {
            let x: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
            let y: Vec<f64> = (0..9).map(|_| rng.sample(StandardNormal)).collect();
            let r = ols_fit(&col(&x), &y, OlsOptions::default()).unwrap();
            if r.t_pvalues[0] > 0.025 {
                not_significant += 1;
            }
        }
        let rate = f64::from(not_significant) / f64::from(trials);
        assert!((rate - 0.975).abs() <= 0.02, "rate {rate}");
    }

    #[test]
    fn vif_orthogonal_columns() {
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let v = vif(&columns_to_matrix(&[&a, &b])).unwrap();
        for x in v {
            assert_relative_eq!(x, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn vif_exact_collinearity_is_infinite() {
        let a = [1.0, 2.0, 3.0, 5.0, 8.0];
        let b = [2.0, 1.0, 4.0, 3.0, 1.0];
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let v = vif(&columns_to_matrix(&[&a, &b, &c])).unwrap();
        assert!(v.iter().all(|x| x.is_infinite()));
    }

    #[test]
    fn vif_of_pair_matches_correlation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 0.3 * rng.random::<f64>()).collect();
        let v = vif(&columns_to_matrix(&[&a, &b])).unwrap();
        // oracle: R^2 from the simple regression of one column on the other
        let r2 = ols_fit(&col(&a), &b, OlsOptions::default()).unwrap().r_squared;
        let r = pearson(&a, &b).unwrap();
        assert_relative_eq!(v[0], 1.0 / (1.0 - r2), max_relative = 1e-8);
        assert_relative_eq!(v[1], 1.0 / (1.0 - r * r), max_relative = 1e-8);
    }

    #[test]
    fn vif_rejects_bad_input() {
        let a = [1.0, 2.0, 3.0];
        assert!(matches!(vif(&col(&a)), Err(StatsError::TooFewColumns { .. })));
        let c = [4.0, 4.0, 4.0];
        assert_eq!(vif(&columns_to_matrix(&[&a, &c])), Err(StatsError::ConstantColumn(1)));
    }

    #[test]
    fn condition_number_orthonormal_is_one() {
        let a = [0.5, 0.5, 0.5, 0.5];
        let b = [0.5, -0.5, 0.5, -0.5];
        let c = [0.5, 0.5, -0.5, -0.5];
        let k = condition_number(&columns_to_matrix(&[&a, &b, &c])).unwrap();
        assert_relative_eq!(k, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn condition_number_nearly_duplicate_columns_is_large() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [1.0, 2.0, 3.0, 4.0, 5.001];
        let k = condition_number(&columns_to_matrix(&[&a, &b])).unwrap();
        assert!(k >= 10.0);
        assert_eq!(
            condition_number(&columns_to_matrix(&[&a, &[0.0; 5]])),
            Err(StatsError::ZeroColumn(1))
        );
    }

    #[test]
    fn condition_number_matches_gram_eigen_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..25 {
            let m = DMatrix::<f64>::from_fn(9, 3, |_, _| rng.random_range(-1.0..1.0));
            let mut z = m.clone();
            for mut c in z.column_iter_mut() {
                let n = c.norm();
                c /= n;
            }
            let eig = (z.transpose() * &z).symmetric_eigen();
            let oracle: f64 = (eig.eigenvalues.max() / eig.eigenvalues.min()).sqrt();
            let got = condition_number(&m).unwrap();
            assert_relative_eq!(got, oracle, max_relative = 1e-10);
        }
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 7.0).collect();
        assert_relative_eq!(pearson(&x, &y).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_relative_eq!(pearson(&x, &neg).unwrap(), -1.0, epsilon = 1e-15);
        // hand computation: deviations (-1.5,-.5,.5,1.5) and (-.5,-1.5,1.5,.5)
        // sxy = .75+.75+.75+.75 = 3, sxx = syy = 5 -> 0.6
        assert_relative_eq!(pearson(&x, &[2.0, 1.0, 4.0, 3.0]).unwrap(), 0.6, epsilon = 1e-15);
        assert_eq!(
            pearson(&x, &[1.0, 1.0, 1.0, 1.0]),
            Err(StatsError::UndefinedCorrelation)
        );
    }

    proptest::proptest! {
        #[test]
        fn pearson_symmetric_and_affine_invariant(
            xs in proptest::collection::vec(-100.0f64..100.0, 5..20),
            seed in 0u64..500, a in 0.1f64..10.0, b in -50.0f64..50.0
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = xs.iter().map(|v| v + rng.random_range(-30.0..30.0)).collect();
            if let (Ok(r1), Ok(r2)) = (pearson(&xs, &ys), pearson(&ys, &xs)) {
                proptest::prop_assert!((r1 - r2).abs() < 1e-12);
                let xt: Vec<f64> = xs.iter().map(|v| a * v + b).collect();
                let r3 = pearson(&xt, &ys).unwrap();
                proptest::prop_assert!((r1 - r3).abs() < 1e-9);
            }
        }

        #[test]
        fn diagnostics_invariant_under_column_rescaling(seed in 0u64..500, s in 0.01f64..1000.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = DMatrix::from_fn(10, 3, |_, _| rng.random_range(0.5..2.0));
            let mut scaled = m.clone();
            scaled.column_mut(1).scale_mut(s);
            let k1 = condition_number(&m).unwrap();
            let k2 = condition_number(&scaled).unwrap();
            proptest::prop_assert!((k1 - k2).abs() <= 1e-8 * k1);
            let v1 = vif(&m).unwrap();
            let v2 = vif(&scaled).unwrap();
            for (a, b) in v1.iter().zip(&v2) {
                proptest::prop_assert!((a - b).abs() <= 1e-8 * a);
            }
        }
    }
}
