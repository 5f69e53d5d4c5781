//! Seeded synthetic corpus: preferential-attachment co-authorship and
//! citation counts driven by a probit-link beta model.
//!
//! Used as the bundled test fixture since real bibliographic dumps cannot be
//! shipped with the code.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use crate::data_model::{Corpus, PaperRecord, Year};
use crate::error::{Error, Result};
use crate::stats::probit;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_papers: usize,
    pub first_year: Year,
    pub n_years: usize,
    pub venues: Vec<String>,
    /// Chance that an author slot goes to a newcomer.
    pub p_new_author: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_papers: 300,
            first_year: 2010,
            n_years: 12,
            venues: vec!["NeurIPS".into(), "ICLR".into(), "ICML".into()],
            p_new_author: 0.3,
            seed: 42,
        }
    }
}

/// Team sizes 1..=6.
const TEAM_WEIGHTS: [f64; 6] = [0.12, 0.25, 0.25, 0.18, 0.12, 0.08];
const PRECISION: f64 = 4.0;

pub fn generate(cfg: &SynthConfig) -> Result<Corpus> {
    if cfg.n_papers == 0 || cfg.n_years == 0 || cfg.venues.is_empty() {
        return Err(Error::InvalidParameter(
            "synthetic corpus needs papers, years and venues".into(),
        ));
    }
    if !(0.0..=1.0).contains(&cfg.p_new_author) {
        return Err(Error::InvalidParameter("p_new_author must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let team_dist = WeightedIndex::new(TEAM_WEIGHTS).expect("static weights");
    // papers written so far, per author id; drives attachment
    let mut output: BTreeMap<String, u32> = BTreeMap::new();
    let mut pool: Vec<String> = Vec::new();
    let mut records = Vec::with_capacity(cfg.n_papers);

    for k in 0..cfg.n_papers {
        let year = cfg.first_year + (k * cfg.n_years / cfg.n_papers) as Year;
        let team = team_dist.sample(&mut rng) + 1;
        let mut authors: Vec<String> = Vec::with_capacity(team);
        while authors.len() < team {
            let fresh = pool.is_empty() || rng.random::<f64>() < cfg.p_new_author;
            let id = if fresh {
                let id = format!("A{:04}", pool.len() + 1);
                pool.push(id.clone());
                id
            } else {
                let weights = pool.iter().map(|a| 1.0 + f64::from(output.get(a).copied().unwrap_or(0)));
                let pick = WeightedIndex::new(weights).expect("positive weights");
                pool[pick.sample(&mut rng)].clone()
            };
            if !authors.contains(&id) {
                authors.push(id);
            }
        }

        let content: f64 = rng.random();
        let lead_output = f64::from(output.get(&authors[0]).copied().unwrap_or(0));
        let team_output: f64 = authors
            .iter()
            .map(|a| f64::from(output.get(a).copied().unwrap_or(0)))
            .sum();
        let eta = -0.9 + 1.1 * content + 0.15 * (1.0 + lead_output).ln() + 0.1 * (1.0 + team_output).ln()
            + 0.05 * team as f64;
        let mu = probit(eta);
        let dist = Beta::new(mu * PRECISION, (1.0 - mu) * PRECISION).expect("positive shapes");
        let y: f64 = dist.sample(&mut rng);
        let citations = (400.0 * y * y).floor() as u64;

        for a in &authors {
            *output.entry(a.clone()).or_insert(0) += 1;
        }
        records.push(PaperRecord {
            paper_id: format!("S{:04}", k + 1),
            year,
            venue: cfg.venues[rng.random_range(0..cfg.venues.len())].clone(),
            authors,
            citations,
            title_len: rng.random_range(30..=120),
            abs_len: rng.random_range(600..=1600),
            content_score: Some((content * 1e6).round() / 1e6),
        });
    }
    Corpus::from_records(records)
}
