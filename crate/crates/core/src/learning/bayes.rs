use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};

/// Naive-Bayes category: instance count, accumulated counts and the cached
/// Laplace-smoothed conditionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesCategory {
    pub label: String,
    pub n_k: u64,
    pub accumulator: Vec<u64>,
    pub prior: f64,
    pub conditionals: Vec<f64>,
}

impl BayesCategory {
    fn refresh(&mut self, total: u64) {
        self.prior = self.n_k as f64 / total as f64;
        let denom: f64 = self.accumulator.iter().map(|&a| a as f64 + 1.0).sum();
        self.conditionals = self.accumulator.iter().map(|&a| (a as f64 + 1.0) / denom).collect();
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BayesMemory {
    pub categories: BTreeMap<String, BayesCategory>,
    /// Total number of taught instances.
    pub total: u64,
}

impl BayesMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> Option<usize> {
        self.categories.values().next().map(|c| c.accumulator.len())
    }

    pub fn len(&self) -> usize {
        self.categories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    fn check_dim(&self, x: &[u64]) -> Result<()> {
        match self.dim() {
            Some(d) if d != x.len() => Err(Error::DimensionMismatch {
                expected: d,
                found: x.len(),
            }),
            _ if x.is_empty() => Err(Error::InvalidInput("empty count vector".into())),
            _ => Ok(()),
        }
    }
}

/// Adds one labeled count vector and refreshes every category's probabilities.
pub fn bayes_teach(memory: &mut BayesMemory, label: &str, x: &[u64]) -> Result<()> {
    memory.check_dim(x)?;
    memory.total += 1;
    let entry = memory
        .categories
        .entry(label.to_string())
        .or_insert_with(|| BayesCategory {
            label: label.to_string(),
            n_k: 0,
            accumulator: vec![0; x.len()],
            prior: 0.0,
            conditionals: Vec::new(),
        });
    entry.n_k += 1;
    for (a, &v) in entry.accumulator.iter_mut().zip(x) {
        *a += v;
    }
    let total = memory.total;
    for c in memory.categories.values_mut() {
        c.refresh(total);
    }
    Ok(())
}

/// Log-likelihood score `ln P(C_k) + sum y_i ln P(x_i | C_k)` for every category.
pub fn bayes_scores(memory: &BayesMemory, y: &[u64]) -> Result<Vec<(String, f64)>> {
    if memory.is_empty() {
        return Err(Error::InvalidInput("classification needs a nonempty memory".into()));
    }
    memory.check_dim(y)?;
    Ok(memory
        .categories
        .values()
        .map(|c| {
            let ll: f64 = y
                .iter()
                .zip(&c.conditionals)
                .filter(|(&v, _)| v > 0)
                .map(|(&v, p)| v as f64 * p.ln())
                .sum();
            (c.label.clone(), c.prior.ln() + ll)
        })
        .collect())
}

/// Highest log-likelihood wins; ties go to the lexicographically lowest label.
pub fn bayes_classify(memory: &BayesMemory, y: &[u64]) -> Result<Prediction> {
    let scores = bayes_scores(memory, y)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.1 > scores[best].1 {
            best = i;
        }
    }
    Ok(Prediction {
        label: Some(scores[best].0.clone()),
        score: scores[best].1,
        scores,
    })
}
