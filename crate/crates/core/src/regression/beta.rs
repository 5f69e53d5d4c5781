use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::{digamma, ln_gamma};

use super::{check_design, checked_qr, column_scales, evaluate_predictions, FitKind, RegressionFit};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::stats::{normal_pdf, probit, probit_inverse, trigamma};

/// Keeps shape parameters away from an exact zero when |η| is huge.
const MIN_MEAN: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaOptions {
    /// Convergence threshold on the max-norm of the score.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BetaOptions {
    fn default() -> Self {
        BetaOptions {
            tol: 1e-8,
            max_iter: 500,
        }
    }
}

/// Log-likelihood of a probit-link beta regression as a function of
/// `(γ_1, ..., γ_p, ln φ)`.
pub struct BetaLikelihood<'a> {
    x: &'a DMatrix<f64>,
    log_y: Vec<f64>,
    log_1my: Vec<f64>,
}

struct Eval {
    ll: f64,
    grad: DVector<f64>,
    hess: Option<DMatrix<f64>>,
}

impl<'a> BetaLikelihood<'a> {
    pub fn new(x: &'a DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Mismatch(format!(
                "{} design rows for {} responses",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|&v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "response {} at row {i} is outside (0, 1); squeeze it first",
                y[i]
            )));
        }
        Ok(BetaLikelihood {
            x,
            log_y: y.iter().map(|v| v.ln()).collect(),
            log_1my: y.iter().map(|v| (-v).ln_1p()).collect(),
        })
    }

    pub fn n_params(&self) -> usize {
        self.x.ncols() + 1
    }

    pub fn log_likelihood(&self, params: &DVector<f64>) -> f64 {
        self.eval(params, false).ll
    }

    pub fn gradient(&self, params: &DVector<f64>) -> DVector<f64> {
        self.eval(params, false).grad
    }

    pub fn hessian(&self, params: &DVector<f64>) -> DMatrix<f64> {
        self.eval(params, true).hess.expect("requested")
    }

    fn eval(&self, params: &DVector<f64>, with_hessian: bool) -> Eval {
        let p = self.x.ncols();
        assert_eq!(params.len(), p + 1, "parameter vector is (gamma, ln phi)");
        let gamma = params.rows(0, p);
        let phi = params[p].exp();
        let (lg_phi, dg_phi, tg_phi) = (ln_gamma(phi), digamma(phi), trigamma(phi));

        let mut ll = 0.0;
        let mut grad = DVector::zeros(p + 1);
        let mut hess = with_hessian.then(|| DMatrix::zeros(p + 1, p + 1));
        for i in 0..self.x.nrows() {
            let row = self.x.row(i);
            let eta = row.dot(&gamma.transpose());
            let mu = probit(eta).max(MIN_MEAN);
            let omu = probit(-eta).max(MIN_MEAN);
            let pdf = normal_pdf(eta);
            let (a, b) = (mu * phi, omu * phi);
            let (ly, l1y) = (self.log_y[i], self.log_1my[i]);

            ll += lg_phi - ln_gamma(a) - ln_gamma(b) + (a - 1.0) * ly + (b - 1.0) * l1y;

            let (dga, dgb) = (digamma(a), digamma(b));
            let resid = (ly - l1y) - (dga - dgb);
            let d_eta = phi * resid * pdf;
            let d_phi = dg_phi - mu * dga - omu * dgb + mu * ly + omu * l1y;
            for j in 0..p {
                grad[j] += d_eta * row[j];
            }
            grad[p] += phi * d_phi;

            if let Some(h) = hess.as_mut() {
                let (tga, tgb) = (trigamma(a), trigamma(b));
                let w_ee = -phi * phi * (tga + tgb) * pdf * pdf - phi * resid * eta * pdf;
                let w_et = phi * (resid - phi * (mu * tga - omu * tgb)) * pdf;
                for j in 0..p {
                    for k in 0..=j {
                        h[(j, k)] += w_ee * row[j] * row[k];
                    }
                    h[(p, j)] += w_et * row[j];
                }
                h[(p, p)] += phi * d_phi + phi * phi * (tg_phi - mu * mu * tga - omu * omu * tgb);
            }
        }
        if let Some(h) = hess.as_mut() {
            h.fill_upper_triangle_with_lower_triangle();
        }
        Eval { ll, grad, hess }
    }
}

/// Inverse of the observed information `-H`, when it is positive definite.
fn inverse_information(hess: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    (-hess).cholesky().map(|c| c.inverse())
}

fn initial_point(xs: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    let (n, p) = (xs.nrows(), xs.ncols());
    let (q, r) = checked_qr(xs, names)?;
    let z = y.map(probit_inverse);
    let gamma = r
        .solve_upper_triangular(&(q.transpose() * &z))
        .expect("checked_qr guarantees a non-singular R");
    let eta = xs * &gamma;
    let s2 = (&z - &eta).norm_squared() / (n - p) as f64;
    let phi0 = eta
        .iter()
        .map(|&e| {
            let mu = probit(e);
            let d = normal_pdf(e);
            mu * (1.0 - mu) / (s2 * d * d)
        })
        .sum::<f64>()
        / n as f64
        - 1.0;
    let phi0 = if phi0.is_finite() && phi0 > 0.0 {
        phi0.clamp(1e-3, 1e6)
    } else {
        1.0
    };
    let mut start = DVector::zeros(p + 1);
    start.rows_mut(0, p).copy_from(&gamma);
    start[p] = phi0.ln();
    Ok(start)
}

struct Optimum {
    params: DVector<f64>,
    iterations: usize,
    gradient_norm: f64,
    trace: Vec<f64>,
}

/// Quasi-Newton ascent: BFGS with backtracking, the inverse Hessian seeded
/// from the observed information. Once the predicted gain drops to rounding
/// level, or a line search fails, full Newton steps take over; they are
/// accepted only if they shrink the score without lowering the likelihood
/// beyond rounding noise.
fn maximise(lik: &BetaLikelihood, start: DVector<f64>, opts: &BetaOptions) -> Result<Optimum> {
    let dim = start.len();
    let mut params = start;
    let mut cur = lik.eval(&params, true);
    if !cur.ll.is_finite() {
        return Err(Error::InvalidParameter("log-likelihood is not finite at the start".into()));
    }
    let mut hinv = inverse_information(cur.hess.as_ref().expect("requested"))
        .unwrap_or_else(|| DMatrix::identity(dim, dim) / (1.0 + cur.grad.amax()));
    let mut trace = vec![cur.ll];

    for iter in 0..opts.max_iter {
        let gnorm = cur.grad.amax();
        if gnorm <= opts.tol {
            return Ok(Optimum {
                params,
                iterations: iter,
                gradient_norm: gnorm,
                trace,
            });
        }
        let mut dir = &hinv * &cur.grad;
        let mut slope = cur.grad.dot(&dir);
        if !(slope > 0.0) {
            hinv = DMatrix::identity(dim, dim) / (1.0 + gnorm);
            dir = &hinv * &cur.grad;
            slope = cur.grad.dot(&dir);
        }

        // below this predicted gain the likelihood cannot rank trial points
        let noise = 1e-10 * (1.0 + cur.ll.abs());
        let mut accepted = None;
        let mut step = 1.0;
        for _ in 0..if slope > noise { 60 } else { 0 } {
            let trial = &params + &dir * step;
            let ll = lik.log_likelihood(&trial);
            if ll.is_finite() && ll >= cur.ll + 1e-4 * step * slope && ll >= cur.ll {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }

        match accepted {
            Some(trial) => {
                let next = lik.eval(&trial, false);
                let s = &trial - &params;
                // score difference of the minimised objective -ll
                let yv = &cur.grad - &next.grad;
                let sy = s.dot(&yv);
                if sy > 1e-12 * s.norm() * yv.norm() {
                    let hy = &hinv * &yv;
                    let yhy = yv.dot(&hy);
                    hinv += (&s * s.transpose()) * ((sy + yhy) / (sy * sy))
                        - (&hy * s.transpose() + &s * hy.transpose()) / sy;
                }
                params = trial;
                cur = Eval {
                    ll: next.ll,
                    grad: next.grad,
                    hess: None,
                };
            }
            None => {
                let hess = lik.hessian(&params);
                let info_inv = inverse_information(&hess).ok_or(Error::FitNotConverged {
                    iterations: iter,
                    gradient_norm: gnorm,
                })?;
                let trial = &params + &info_inv * &cur.grad;
                let next = lik.eval(&trial, true);
                if !(next.ll.is_finite() && next.ll >= cur.ll - noise && next.grad.amax() < gnorm) {
                    return Err(Error::FitNotConverged {
                        iterations: iter,
                        gradient_norm: gnorm,
                    });
                }
                hinv = inverse_information(next.hess.as_ref().expect("requested")).unwrap_or(info_inv);
                params = trial;
                cur = next;
            }
        }
        trace.push(cur.ll);
    }
    let gnorm = cur.grad.amax();
    if gnorm <= opts.tol {
        return Ok(Optimum {
            params,
            iterations: opts.max_iter,
            gradient_norm: gnorm,
            trace,
        });
    }
    Err(Error::FitNotConverged {
        iterations: opts.max_iter,
        gradient_norm: gnorm,
    })
}

/// Maximum-likelihood beta regression of `m.y` on `m.x` with a probit link.
///
/// Columns are internally rescaled to unit max-abs; the convergence test
/// applies to the score in those coordinates.
pub fn fit_beta(m: &FeatureMatrix, opts: &BetaOptions) -> Result<RegressionFit> {
    check_design(m)?;
    let (n, p) = (m.n_rows(), m.n_cols());
    if n <= p + 1 {
        return Err(Error::InvalidParameter(format!(
            "{n} observations are too few for {} parameters",
            p + 1
        )));
    }
    let scales = column_scales(&m.x, &m.names)?;
    let mut xs = m.x.clone();
    for (j, s) in scales.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }
    let lik = BetaLikelihood::new(&xs, &m.y)?;
    let start = initial_point(&xs, &m.y, &m.names)?;
    let opt = maximise(&lik, start, opts)?;

    let hess = lik.hessian(&opt.params);
    let cov = inverse_information(&hess).ok_or_else(|| {
        Error::InvalidParameter("observed information is not positive definite at the optimum".into())
    })?;
    let coefficients: Vec<f64> = (0..p).map(|j| opt.params[j] / scales[j]).collect();
    let std_errors: Vec<f64> = (0..p).map(|j| cov[(j, j)].sqrt() / scales[j]).collect();
    let phi = opt.params[p].exp();
    let phi_se = phi * cov[(p, p)].sqrt();

    let fitted: Vec<f64> = (xs * opt.params.rows(0, p)).iter().map(|&e| probit(e)).collect();
    let in_sample = evaluate_predictions(&fitted, m.y.as_slice())?;
    Ok(RegressionFit {
        kind: FitKind::Beta,
        names: m.names.clone(),
        coefficients,
        std_errors,
        precision: Some((phi, phi_se)),
        residual_variance: None,
        log_likelihood: *opt.trace.last().expect("trace starts non-empty"),
        n_obs: n,
        n_params: p + 1,
        iterations: opt.iterations,
        gradient_norm: opt.gradient_norm,
        r_squared: in_sample.corr * in_sample.corr,
        in_sample,
        ll_trace: opt.trace,
    })
}
