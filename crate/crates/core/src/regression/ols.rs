use std::f64::consts::PI;

use nalgebra::DVector;

use super::{check_design, checked_qr, column_scales, evaluate_predictions, FitKind, RegressionFit};
use crate::error::Result;
use crate::features::FeatureMatrix;
use crate::stats::mean;

/// Least squares through a thin QR of the column-scaled design.
///
/// The log-likelihood is the Gaussian one at the ML variance SSE/n; AIC and
/// BIC count the mean coefficients only.
pub fn fit_ols(m: &FeatureMatrix) -> Result<RegressionFit> {
    check_design(m)?;
    let (n, p) = (m.n_rows(), m.n_cols());
    let scales = column_scales(&m.x, &m.names)?;
    let mut xs = m.x.clone();
    for (j, s) in scales.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }
    let (q, r) = checked_qr(&xs, &m.names)?;
    let beta_s = r
        .solve_upper_triangular(&(q.transpose() * &m.y))
        .expect("checked_qr guarantees a non-singular R");
    let fitted = &xs * &beta_s;
    let resid: DVector<f64> = &m.y - &fitted;
    let sse = resid.norm_squared();
    let sigma2 = sse / (n - p) as f64;

    // (R'R)^-1 = R^-1 R^-T
    let r_inv = r
        .solve_upper_triangular(&nalgebra::DMatrix::identity(p, p))
        .expect("non-singular R");
    let cov_diag: Vec<f64> = (0..p).map(|j| r_inv.row(j).norm_squared() * sigma2).collect();

    let ybar = mean(m.y.as_slice());
    let sst: f64 = m.y.iter().map(|v| (v - ybar).powi(2)).sum();
    let nf = n as f64;
    let log_likelihood = if sse > 0.0 {
        -0.5 * nf * ((2.0 * PI * sse / nf).ln() + 1.0)
    } else {
        f64::INFINITY
    };
    let in_sample = evaluate_predictions(fitted.as_slice(), m.y.as_slice())?;
    Ok(RegressionFit {
        kind: FitKind::Ols,
        names: m.names.clone(),
        coefficients: (0..p).map(|j| beta_s[j] / scales[j]).collect(),
        std_errors: (0..p).map(|j| cov_diag[j].sqrt() / scales[j]).collect(),
        precision: None,
        residual_variance: Some(sigma2),
        log_likelihood,
        n_obs: n,
        n_params: p,
        iterations: 0,
        gradient_norm: 0.0,
        r_squared: if sst > 0.0 { 1.0 - sse / sst } else { 0.0 },
        in_sample,
        ll_trace: vec![log_likelihood],
    })
}
