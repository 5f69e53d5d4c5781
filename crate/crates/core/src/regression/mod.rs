//! Beta regression with a probit mean link, the OLS baseline, likelihood
//! ratio tests and out-of-sample metrics.

mod beta;
mod ols;
mod report;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::stats::{pearson, probit, two_sided_p};

pub use beta::{fit_beta, BetaLikelihood, BetaOptions};
pub use ols::fit_ols;
pub use report::{render_regression_table, write_fit_key_values, TableModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    Beta,
    Ols,
}

impl FitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FitKind::Beta => "beta",
            FitKind::Ols => "ols",
        }
    }
}

/// Prediction accuracy against observed responses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    /// Pearson correlation; 0 when undefined.
    pub corr: f64,
    /// False when either side had zero variance.
    pub corr_defined: bool,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub kind: FitKind,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Beta precision φ and its delta-method SE.
    pub precision: Option<(f64, f64)>,
    /// OLS residual variance SSE/(n - p).
    pub residual_variance: Option<f64>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    /// Parameters counted by AIC/BIC (includes φ for beta fits).
    pub n_params: usize,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Squared corr(fitted, y) for beta fits, 1 - SSE/SST for OLS.
    pub r_squared: f64,
    pub in_sample: Metrics,
    /// Log-likelihood after every accepted optimizer step, starting point first.
    pub ll_trace: Vec<f64>,
}

impl RegressionFit {
    pub fn aic(&self) -> f64 {
        2.0 * self.n_params as f64 - 2.0 * self.log_likelihood
    }

    pub fn bic(&self) -> f64 {
        self.n_params as f64 * (self.n_obs as f64).ln() - 2.0 * self.log_likelihood
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.coefficients[j])
    }

    /// z statistics (t for OLS).
    pub fn statistics(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(&self.std_errors)
            .map(|(b, s)| b / s)
            .collect()
    }

    /// Two-sided p-values: normal reference for beta fits, Student t with
    /// n - p degrees of freedom for OLS.
    pub fn p_values(&self) -> Vec<f64> {
        let stats = self.statistics();
        match self.kind {
            FitKind::Beta => stats.iter().map(|&z| two_sided_p(z)).collect(),
            FitKind::Ols => {
                let df = (self.n_obs - self.coefficients.len()) as f64;
                let t = StudentsT::new(0.0, 1.0, df).expect("df > 0 after a successful fit");
                stats.iter().map(|&s| 2.0 * t.sf(s.abs())).collect()
            }
        }
    }

    /// Fitted mean `Φ(Xγ)` for beta fits, `Xβ` for OLS.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.coefficients.len() {
            return Err(Error::Mismatch(format!(
                "design has {} columns, fit has {}",
                x.ncols(),
                self.coefficients.len()
            )));
        }
        let eta = x * DVector::from_column_slice(&self.coefficients);
        Ok(match self.kind {
            FitKind::Beta => eta.map(probit),
            FitKind::Ols => eta,
        })
    }
}

/// Beta density with shapes `μφ` and `(1 - μ)φ`.
pub fn beta_density(y: f64, mu: f64, phi: f64) -> Result<f64> {
    Ok(ln_beta_density(y, mu, phi)?.exp())
}

pub fn ln_beta_density(y: f64, mu: f64, phi: f64) -> Result<f64> {
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !open(y) || !open(mu) || !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta density needs y, mu in (0,1) and phi > 0; got y={y}, mu={mu}, phi={phi}"
        )));
    }
    let (a, b) = (mu * phi, (1.0 - mu) * phi);
    Ok(ln_gamma(phi) - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * y.ln() + (b - 1.0) * (-y).ln_1p())
}

/// Conditional variance `μ(1 - μ)/(1 + φ)`.
pub fn beta_variance(mu: f64, phi: f64) -> f64 {
    mu * (1.0 - mu) / (1.0 + phi)
}

pub fn evaluate_predictions(pred: &[f64], y: &[f64]) -> Result<Metrics> {
    if pred.len() != y.len() {
        return Err(Error::Mismatch(format!(
            "{} predictions for {} responses",
            pred.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::Empty("no observations to evaluate".into()));
    }
    let n = y.len() as f64;
    let mse = pred.iter().zip(y).map(|(p, v)| (p - v).powi(2)).sum::<f64>() / n;
    let mae = pred.iter().zip(y).map(|(p, v)| (p - v).abs()).sum::<f64>() / n;
    let corr = pearson(pred, y);
    Ok(Metrics {
        mse,
        mae,
        corr: corr.unwrap_or(0.0),
        corr_defined: corr.is_some(),
        n: y.len(),
    })
}

/// Scores a fitted model on held-out rows with the same columns.
pub fn evaluate(fit: &RegressionFit, test: &FeatureMatrix) -> Result<Metrics> {
    if test.names != fit.names {
        return Err(Error::Mismatch(format!(
            "test columns [{}] differ from fitted [{}]",
            test.names.join(", "),
            fit.names.join(", ")
        )));
    }
    let pred = fit.predict(&test.x)?;
    evaluate_predictions(pred.as_slice(), test.y.as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrtResult {
    pub ll_reduced: f64,
    pub ll_full: f64,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Upper-tail chi-square probability.
pub fn chi_square_sf(statistic: f64, df: usize) -> f64 {
    if df == 0 {
        return if statistic <= 0.0 { 1.0 } else { 0.0 };
    }
    statrs::distribution::ChiSquared::new(df as f64)
        .expect("df >= 1")
        .sf(statistic.max(0.0))
}

/// Test statistic `2(ll_full - ll_reduced)` and its chi-square p-value.
pub fn lrt_from_log_likelihoods(ll_reduced: f64, ll_full: f64, df: usize) -> Result<LrtResult> {
    let raw = 2.0 * (ll_full - ll_reduced);
    // optimizer noise can leave a nested fit a hair below the reduced one
    let slack = 1e-6 * (1.0 + ll_full.abs().max(ll_reduced.abs()));
    if raw < -slack {
        return Err(Error::Mismatch(format!(
            "reduced model log-likelihood {ll_reduced} exceeds full {ll_full}"
        )));
    }
    let statistic = raw.max(0.0);
    Ok(LrtResult {
        ll_reduced,
        ll_full,
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    })
}

pub fn likelihood_ratio_test(reduced: &RegressionFit, full: &RegressionFit) -> Result<LrtResult> {
    if reduced.kind != full.kind {
        return Err(Error::Mismatch("cannot compare beta and OLS fits".into()));
    }
    if reduced.n_obs != full.n_obs {
        return Err(Error::Mismatch(format!(
            "observation counts differ: {} vs {}",
            reduced.n_obs, full.n_obs
        )));
    }
    if let Some(extra) = reduced.names.iter().find(|n| !full.names.contains(n)) {
        return Err(Error::Mismatch(format!(
            "models are not nested: {extra} is missing from the full model"
        )));
    }
    lrt_from_log_likelihoods(
        reduced.log_likelihood,
        full.log_likelihood,
        full.n_params - reduced.n_params,
    )
}

/// Scales every column to unit max-abs; a zero column is rank deficient.
fn column_scales(x: &DMatrix<f64>, names: &[String]) -> Result<Vec<f64>> {
    (0..x.ncols())
        .map(|j| {
            let s = x.column(j).amax();
            if s > 0.0 {
                Ok(s)
            } else {
                Err(Error::RankDeficient {
                    column: names[j].clone(),
                })
            }
        })
        .collect()
}

/// Thin QR of the scaled design; fails on a numerically dependent column.
fn checked_qr(
    xs: &DMatrix<f64>,
    names: &[String],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let qr = xs.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.ncols()).map(|j| r[(j, j)].abs()).collect();
    let top = diag.iter().copied().fold(0.0, f64::max);
    if let Some(j) = diag.iter().position(|&d| d <= 1e-10 * top) {
        return Err(Error::RankDeficient {
            column: names[j].clone(),
        });
    }
    Ok((qr.q(), r))
}

fn check_design(m: &FeatureMatrix) -> Result<()> {
    if m.n_cols() == 0 {
        return Err(Error::InvalidParameter("design has no columns".into()));
    }
    if m.n_rows() <= m.n_cols() {
        return Err(Error::InvalidParameter(format!(
            "{} observations are too few for {} columns",
            m.n_rows(),
            m.n_cols()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn density_examples() {
        for y in [0.01, 0.3, 0.5, 0.99] {
            assert_abs_diff_eq!(beta_density(y, 0.5, 2.0).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(beta_density(0.5, 0.5, 4.0).unwrap(), 1.5, epsilon = 1e-12);
        for (y, mu, phi) in [(0.2, 0.3, 5.0), (0.9, 0.6, 0.7), (0.5, 0.1, 30.0)] {
            assert_abs_diff_eq!(
                beta_density(y, mu, phi).unwrap(),
                beta_density(1.0 - y, 1.0 - mu, phi).unwrap(),
                epsilon = 1e-10
            );
        }
        assert!(beta_density(0.0, 0.5, 1.0).is_err());
        assert!(beta_density(0.5, 1.0, 1.0).is_err());
        assert!(beta_density(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        // midpoint rule on a smooth case
        let n = 20_000;
        let total: f64 = (0..n)
            .map(|i| beta_density((i as f64 + 0.5) / n as f64, 0.35, 6.0).unwrap() / n as f64)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn variance_example() {
        assert_eq!(beta_variance(0.5, 1.0), 0.125);
    }

    #[test]
    fn lrt_examples() {
        let r = lrt_from_log_likelihoods(597.908, 613.436, 1).unwrap();
        assert_abs_diff_eq!(r.statistic, 31.056, epsilon = 1e-9);
        let r = lrt_from_log_likelihoods(443.617, 613.436, 1).unwrap();
        assert_abs_diff_eq!(r.statistic, 339.637, epsilon = 0.01);
        let r = lrt_from_log_likelihoods(10.0, 10.0, 0).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert!(lrt_from_log_likelihoods(20.0, 10.0, 1).is_err());
    }

    #[test]
    fn chi_square_oracle() {
        assert_abs_diff_eq!(chi_square_sf(3.841, 1), 0.05, epsilon = 1e-3);
        // df 2 has the closed form exp(-x/2)
        assert_abs_diff_eq!(chi_square_sf(4.0, 2), (-2.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn evaluate_cases() {
        let y = [0.1, 0.4, 0.8];
        let m = evaluate_predictions(&y, &y).unwrap();
        assert_eq!((m.mse, m.mae, m.corr, m.corr_defined), (0.0, 0.0, 1.0, true));
        let m = evaluate_predictions(&[0.5; 3], &y).unwrap();
        assert_eq!((m.corr, m.corr_defined), (0.0, false));
        assert!(evaluate_predictions(&[], &[]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let t: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let m = evaluate_predictions(&p, &t).unwrap();
        let mut se = 0.0;
        let mut ae = 0.0;
        for i in 0..10 {
            se += (p[i] - t[i]) * (p[i] - t[i]);
            ae += (p[i] - t[i]).abs();
        }
        assert_abs_diff_eq!(m.mse, se / 10.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.mae, ae / 10.0, epsilon = 1e-15);
    }
}
