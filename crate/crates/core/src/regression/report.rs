use std::fmt::Write as _;
use std::io::Write;

use super::RegressionFit;
use crate::error::{Error, Result};

/// One column of a side-by-side regression table.
pub struct TableModel<'a> {
    pub title: String,
    pub fit: &'a RegressionFit,
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Plain-text table: one coefficient row plus a parenthesised SE row per
/// term, the precision row for beta fits, then fit statistics.
pub fn render_regression_table(models: &[TableModel]) -> String {
    let mut terms: Vec<&str> = Vec::new();
    for m in models {
        for n in &m.fit.names {
            if !terms.contains(&n.as_str()) {
                terms.push(n);
            }
        }
    }
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec![String::new()];
    header.extend(models.iter().map(|m| m.title.clone()));
    rows.push(header);

    let cells = |f: &dyn Fn(&RegressionFit) -> Option<(f64, f64, f64)>| -> (Vec<String>, Vec<String>) {
        let mut est = Vec::new();
        let mut se = Vec::new();
        for m in models {
            match f(m.fit) {
                Some((b, s, p)) => {
                    est.push(format!("{b:.4}{}", stars(p)));
                    se.push(format!("({s:.4})"));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        (est, se)
    };
    for term in &terms {
        let (est, se) = cells(&|fit: &RegressionFit| {
            let j = fit.names.iter().position(|n| n == term)?;
            Some((fit.coefficients[j], fit.std_errors[j], fit.p_values()[j]))
        });
        rows.push(std::iter::once(term.to_string()).chain(est).collect());
        rows.push(std::iter::once(String::new()).chain(se).collect());
    }
    if models.iter().any(|m| m.fit.precision.is_some()) {
        let (est, se) = cells(&|fit: &RegressionFit| {
            fit.precision
                .map(|(phi, s)| (phi, s, crate::stats::two_sided_p(phi / s)))
        });
        rows.push(std::iter::once("Precision".to_string()).chain(est).collect());
        rows.push(std::iter::once(String::new()).chain(se).collect());
    }
    let rule_at = rows.len();
    let stat = |label: &str, f: &dyn Fn(&RegressionFit) -> String| -> Vec<String> {
        std::iter::once(label.to_string())
            .chain(models.iter().map(|m| f(m.fit)))
            .collect()
    };
    rows.push(stat("Log-Likelihood", &|f| format!("{:.1}", f.log_likelihood)));
    rows.push(stat("AIC", &|f| format!("{:.1}", f.aic())));
    rows.push(stat("BIC", &|f| format!("{:.1}", f.bic())));
    rows.push(stat("R-squared", &|f| format!("{:.4}", f.r_squared)));
    rows.push(stat("MSE", &|f| format!("{:.5}", f.in_sample.mse)));
    rows.push(stat("Observations", &|f| f.n_obs.to_string()));

    let ncols = models.len() + 1;
    let widths: Vec<usize> = (0..ncols)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let total: usize = widths.iter().sum::<usize>() + 2 * (ncols - 1);
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        if i == 1 || i == rule_at {
            writeln!(out, "{}", "-".repeat(total)).unwrap();
        }
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for c in 1..ncols {
            write!(line, "  {:>w$}", row[c], w = widths[c]).unwrap();
        }
        writeln!(out, "{}", line.trim_end()).unwrap();
    }
    writeln!(out, "{}", "-".repeat(total)).unwrap();
    writeln!(out, "***, **, * : p < 0.001, 0.01, 0.05").unwrap();
    out
}

/// `key=value` lines, one per statistic, floats in shortest round-trip form.
pub fn write_fit_key_values<W: Write>(fit: &RegressionFit, mut out: W) -> Result<()> {
    let mut s = String::new();
    let stats = fit.statistics();
    let pvals = fit.p_values();
    writeln!(s, "kind={}", fit.kind.as_str()).unwrap();
    writeln!(s, "n_obs={}", fit.n_obs).unwrap();
    writeln!(s, "n_params={}", fit.n_params).unwrap();
    for (j, name) in fit.names.iter().enumerate() {
        writeln!(s, "coef.{name}={}", fit.coefficients[j]).unwrap();
        writeln!(s, "se.{name}={}", fit.std_errors[j]).unwrap();
        writeln!(s, "stat.{name}={}", stats[j]).unwrap();
        writeln!(s, "p.{name}={}", pvals[j]).unwrap();
    }
    if let Some((phi, se)) = fit.precision {
        writeln!(s, "precision={phi}").unwrap();
        writeln!(s, "precision_se={se}").unwrap();
    }
    if let Some(v) = fit.residual_variance {
        writeln!(s, "residual_variance={v}").unwrap();
    }
    writeln!(s, "log_likelihood={}", fit.log_likelihood).unwrap();
    writeln!(s, "aic={}", fit.aic()).unwrap();
    writeln!(s, "bic={}", fit.bic()).unwrap();
    writeln!(s, "r_squared={}", fit.r_squared).unwrap();
    writeln!(s, "mse={}", fit.in_sample.mse).unwrap();
    writeln!(s, "mae={}", fit.in_sample.mae).unwrap();
    writeln!(s, "corr={}", fit.in_sample.corr).unwrap();
    writeln!(s, "iterations={}", fit.iterations).unwrap();
    writeln!(s, "gradient_norm={}", fit.gradient_norm).unwrap();
    out.write_all(s.as_bytes())
        .map_err(|e| Error::io("<fit report>", e))
}
