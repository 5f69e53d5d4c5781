//! Held-out evaluation of the linear baseline with and without centrality
//! columns.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::regression::{evaluate, fit_ols, Metrics};

pub const MIN_RECORDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub k_folds: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.1,
            seed: 0,
            k_folds: 5,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.k_folds < 2 {
            return Err(Error::InvalidParameter("k_folds must be at least 2".into()));
        }
        Ok(())
    }

    /// `floor(n * fraction)`, at least 1.
    pub fn test_size(&self, n: usize) -> usize {
        ((n as f64 * self.test_fraction).floor() as usize).max(1)
    }
}

/// Seeded shuffle of `0..n`; the first `test_size` positions form the test
/// set. Both index lists come back sorted.
pub fn split(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    spec.validate()?;
    if n < MIN_RECORDS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_RECORDS} records to split, got {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let (test, train) = order.split_at(spec.test_size(n));
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits paper ids rather than row positions.
pub fn split_ids(ids: &[String], spec: &SplitSpec) -> Result<(Vec<String>, Vec<String>)> {
    let (train, test) = split(ids.len(), spec)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| ids[i].clone()).collect();
    Ok((pick(&train), pick(&test)))
}

/// `k` near-equal folds of `rows` after a seeded shuffle.
pub fn kfold(rows: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || rows.len() < k {
        return Err(Error::InvalidParameter(format!(
            "cannot make {k} folds from {} rows",
            rows.len()
        )));
    }
    let mut order = rows.to_vec();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, r) in order.into_iter().enumerate() {
        folds[i % k].push(r);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// Mean validation MSE of the linear model over `k` folds of `rows`.
pub fn cross_validated_mse(m: &FeatureMatrix, rows: &[usize], k: usize, seed: u64) -> Result<f64> {
    let folds = kfold(rows, k, seed)?;
    let mut total = 0.0;
    for (f, held) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, rows)| rows.iter().copied())
            .collect();
        let fit = fit_ols(&m.select_rows(&train))?;
        total += evaluate(&fit, &m.select_rows(held))?.mse;
    }
    Ok(total / k as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub spec: SplitSpec,
    pub n_train: usize,
    pub n_test: usize,
    pub with: Metrics,
    pub without: Metrics,
    pub cv_mse_with: f64,
    pub cv_mse_without: f64,
}

impl Comparison {
    /// (ΔMSE, ΔMAE, ΔCorr), with minus without.
    pub fn deltas(&self) -> (f64, f64, f64) {
        (
            self.with.mse - self.without.mse,
            self.with.mae - self.without.mae,
            self.with.corr - self.without.corr,
        )
    }

    /// One `LR` row: with-centrality MSE/MAE/Corr, without-centrality
    /// MSE/MAE/Corr, deltas, then the split settings.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let (dm, da, dc) = self.deltas();
        let io = |e| Error::io("<predictive report>", e);
        writeln!(
            out,
            "model,mse_with,mae_with,corr_with,mse_without,mae_without,corr_without,\
             delta_mse,delta_mae,delta_corr,cv_mse_with,cv_mse_without,seed,test_fraction,n_train,n_test"
        )
        .map_err(io)?;
        writeln!(
            out,
            "LR,{},{},{},{},{},{},{dm},{da},{dc},{},{},{},{},{},{}",
            self.with.mse,
            self.with.mae,
            self.with.corr,
            self.without.mse,
            self.without.mae,
            self.without.corr,
            self.cv_mse_with,
            self.cv_mse_without,
            self.spec.seed,
            self.spec.test_fraction,
            self.n_train,
            self.n_test
        )
        .map_err(io)
    }
}

/// Fits the linear baseline on the training rows of each design and scores
/// both on the same held-out rows.
pub fn compare_feature_sets(
    with: &FeatureMatrix,
    without: &FeatureMatrix,
    spec: &SplitSpec,
) -> Result<Comparison> {
    if with.paper_ids != without.paper_ids || with.y != without.y {
        return Err(Error::Mismatch(
            "feature sets must cover the same papers with the same response".into(),
        ));
    }
    let (train, test) = split(with.n_rows(), spec)?;
    let score = |m: &FeatureMatrix| -> Result<(Metrics, f64)> {
        let fit = fit_ols(&m.select_rows(&train))?;
        let metrics = evaluate(&fit, &m.select_rows(&test))?;
        let cv = cross_validated_mse(m, &train, spec.k_folds, spec.seed)?;
        Ok((metrics, cv))
    };
    let (with_m, cv_with) = score(with)?;
    let (without_m, cv_without) = score(without)?;
    Ok(Comparison {
        spec: *spec,
        n_train: train.len(),
        n_test: test.len(),
        with: with_m,
        without: without_m,
        cv_mse_with: cv_with,
        cv_mse_without: cv_without,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;

    #[test]
    fn split_sizes_and_determinism() {
        let spec = SplitSpec { seed: 9, ..Default::default() };
        let (train, test) = split(100, &spec).unwrap();
        assert_eq!((train.len(), test.len()), (90, 10));
        assert!(test.iter().all(|t| !train.contains(t)));
        assert_eq!(split(100, &spec).unwrap(), (train, test));
        assert_eq!(split(17, &spec).unwrap().1.len(), 1);
        assert!(split(9, &spec).is_err());
        let other = split(100, &SplitSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(other, split(100, &spec).unwrap());
        let bad = SplitSpec { test_fraction: 1.0, ..spec };
        assert!(split(100, &bad).is_err());
    }

    #[test]
    fn folds_partition_rows() {
        let rows: Vec<usize> = (0..23).map(|i| i * 2).collect();
        let folds = kfold(&rows, 5, 1).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, rows);
        assert!(folds.iter().all(|f| f.len() == 4 || f.len() == 5));
    }

    fn planted(n: usize, seed: u64) -> (FeatureMatrix, FeatureMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, 3, |_, j| if j == 0 { 1.0 } else { rng.random::<f64>() });
        let y = DVector::from_fn(n, |i, _| 0.2 + 0.3 * x[(i, 1)] + 0.4 * x[(i, 2)] + 0.05 * rng.random::<f64>());
        let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        let with = FeatureMatrix::new(ids, vec!["Const".into(), "Model".into(), "HCTCD.W.Sum".into()], x, "pcite", y).unwrap();
        let without = with.select_columns(&["Const", "Model"]).unwrap();
        (with, without)
    }

    #[test]
    fn planted_signal_helps() {
        let (with, without) = planted(400, 3);
        let c = compare_feature_sets(&with, &without, &SplitSpec::default()).unwrap();
        assert!(c.with.mse < c.without.mse);
        assert!(c.cv_mse_with < c.cv_mse_without);
        assert_eq!(c.n_test, 40);
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("LR,"));
    }

    #[test]
    fn identical_sets_have_zero_deltas() {
        let (with, _) = planted(100, 4);
        let c = compare_feature_sets(&with, &with, &SplitSpec::default()).unwrap();
        assert_eq!(c.deltas(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn coverage_mismatch() {
        let (with, without) = planted(100, 5);
        let fewer = without.select_rows(&(0..99).collect::<Vec<_>>());
        assert!(matches!(
            compare_feature_sets(&with, &fewer, &SplitSpec::default()),
            Err(Error::Mismatch(_))
        ));
    }
}
