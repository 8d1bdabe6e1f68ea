use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 0.1;
pub const DEFAULT_TOPICS: usize = 30;
pub const DEFAULT_GIBBS_ITERS: usize = 30;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopicScope {
    Shared,
    Category(String),
}

/// Word-topic counters of an incrementally trained LDA model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub scope: TopicScope,
    pub vocabulary: usize,
    pub topics: usize,
    /// Row-major `vocabulary x topics`.
    pub n_wk: Vec<u64>,
    pub n_k: Vec<u64>,
    pub alpha: f64,
    pub beta: f64,
    pub rng_seed: u64,
    /// Number of documents folded in so far; mixes into the sampler seed.
    pub updates: u64,
}

/// Per-document topic proportions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicHistogram {
    pub theta: Vec<f64>,
}

fn mix_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl TopicModel {
    pub fn new(scope: TopicScope, vocabulary: usize, topics: usize, alpha: f64, beta: f64, rng_seed: u64) -> Result<Self> {
        if vocabulary == 0 || topics == 0 {
            return Err(Error::InvalidParameter(format!(
                "vocabulary ({vocabulary}) and topic count ({topics}) must be >= 1"
            )));
        }
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha ({alpha}) and beta ({beta}) must be > 0"
            )));
        }
        Ok(TopicModel {
            scope,
            vocabulary,
            topics,
            n_wk: vec![0; vocabulary * topics],
            n_k: vec![0; topics],
            alpha,
            beta,
            rng_seed,
            updates: 0,
        })
    }

    pub fn count(&self, w: usize, k: usize) -> u64 {
        self.n_wk[w * self.topics + k]
    }

    /// n_k equals the column sums of n_wk.
    pub fn is_consistent(&self) -> bool {
        (0..self.topics).all(|k| (0..self.vocabulary).map(|w| self.count(w, k)).sum::<u64>() == self.n_k[k])
    }

    fn check_doc(&self, doc: &[usize]) -> Result<()> {
        match doc.iter().find(|&&w| w >= self.vocabulary) {
            Some(w) => Err(Error::InvalidInput(format!(
                "word index {w} out of range for vocabulary of {}",
                self.vocabulary
            ))),
            None => Ok(()),
        }
    }
}

/// Collapsed Gibbs sampling of one document against counters `n_wk`/`n_k`
/// (which include the document's own words while sampling). Returns the
/// document's per-topic counts; the counters end up holding the final
/// assignments.
#[allow(clippy::too_many_arguments)]
fn gibbs_fold_in(
    n_wk: &mut [u64],
    n_k: &mut [u64],
    v: usize,
    k: usize,
    alpha: f64,
    beta: f64,
    doc: &[usize],
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<u64> {
    let mut n_ok = vec![0u64; k];
    let mut z: Vec<usize> = Vec::with_capacity(doc.len());
    for &w in doc {
        let t = rng.random_range(0..k);
        z.push(t);
        n_ok[t] += 1;
        n_wk[w * k + t] += 1;
        n_k[t] += 1;
    }
    let vbeta = v as f64 * beta;
    let mut p = vec![0.0; k];
    for _ in 0..iters {
        for (i, &w) in doc.iter().enumerate() {
            let old = z[i];
            n_ok[old] -= 1;
            n_wk[w * k + old] -= 1;
            n_k[old] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (n_ok[t] as f64 + alpha) * (n_wk[w * k + t] as f64 + beta) / (n_k[t] as f64 + vbeta);
                p[t] = total;
            }
            let u = rng.random_range(0.0..total);
            let new = p.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = new;
            n_ok[new] += 1;
            n_wk[w * k + new] += 1;
            n_k[new] += 1;
        }
    }
    n_ok
}

/// Folds a document permanently into the model: random initial topics, then
/// `iters` collapsed Gibbs sweeps.
pub fn lda_update(model: &mut TopicModel, doc: &[usize], iters: usize) -> Result<()> {
    model.check_doc(doc)?;
    if iters == 0 {
        return Err(Error::InvalidParameter("Gibbs iterations must be >= 1".into()));
    }
    if doc.is_empty() {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(model.rng_seed, model.updates));
    let (v, k, alpha, beta) = (model.vocabulary, model.topics, model.alpha, model.beta);
    gibbs_fold_in(&mut model.n_wk, &mut model.n_k, v, k, alpha, beta, doc, iters, &mut rng);
    model.updates += 1;
    Ok(())
}

/// Topic counts of `doc` sampled against a temporary copy of the counters.
pub fn lda_infer_counts(model: &TopicModel, doc: &[usize], iters: usize, seed: u64) -> Result<Vec<u64>> {
    model.check_doc(doc)?;
    if iters == 0 {
        return Err(Error::InvalidParameter("Gibbs iterations must be >= 1".into()));
    }
    if doc.is_empty() {
        return Ok(vec![0; model.topics]);
    }
    let mut n_wk = model.n_wk.clone();
    let mut n_k = model.n_k.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(gibbs_fold_in(
        &mut n_wk,
        &mut n_k,
        model.vocabulary,
        model.topics,
        model.alpha,
        model.beta,
        doc,
        iters,
        &mut rng,
    ))
}

/// Smoothed topic proportions theta_k = (n_ok + alpha) / (n_o + K alpha).
pub fn lda_infer(model: &TopicModel, doc: &[usize], iters: usize, seed: u64) -> Result<TopicHistogram> {
    let n_ok = lda_infer_counts(model, doc, iters, seed)?;
    let denom = doc.len() as f64 + model.topics as f64 * model.alpha;
    Ok(TopicHistogram {
        theta: n_ok.iter().map(|&c| (c as f64 + model.alpha) / denom).collect(),
    })
}

/// Word distribution per topic, `phi[w][k] = (n_wk + beta) / (n_k + V beta)`.
pub fn phi(model: &TopicModel) -> Vec<Vec<f64>> {
    let vbeta = model.vocabulary as f64 * model.beta;
    (0..model.vocabulary)
        .map(|w| {
            (0..model.topics)
                .map(|k| (model.count(w, k) as f64 + model.beta) / (model.n_k[k] as f64 + vbeta))
                .collect()
        })
        .collect()
}

/// Hyper-parameters shared by every per-category model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub vocabulary: usize,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iters: usize,
    pub seed: u64,
}

impl LdaParams {
    pub fn new(vocabulary: usize) -> Self {
        LdaParams {
            vocabulary,
            topics: DEFAULT_TOPICS,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            iters: DEFAULT_GIBBS_ITERS,
            seed: 0,
        }
    }

    pub fn model(&self, scope: TopicScope) -> Result<TopicModel> {
        let salt = match &scope {
            TopicScope::Shared => 0,
            TopicScope::Category(c) => c.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
                (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
            }),
        };
        TopicModel::new(scope, self.vocabulary, self.topics, self.alpha, self.beta, mix_seed(self.seed, salt))
    }
}

/// Folds `doc` into the model of `category`, creating it on first use.
pub fn local_lda_update(
    models: &mut BTreeMap<String, TopicModel>,
    params: &LdaParams,
    category: &str,
    doc: &[usize],
) -> Result<()> {
    if !models.contains_key(category) {
        let model = params.model(TopicScope::Category(category.to_string()))?;
        model.check_doc(doc)?;
        models.insert(category.to_string(), model);
    }
    let model = models.get_mut(category).expect("inserted above");
    lda_update(model, doc, params.iters)
}
