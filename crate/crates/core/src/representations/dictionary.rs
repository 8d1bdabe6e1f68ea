use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::FeatureSet;
use crate::error::{Error, Result};

/// Visual words: k-means centers in flattened spin-image space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dictionary {
    pub words: Vec<Vec<f64>>,
}

impl Dictionary {
    pub fn new(words: Vec<Vec<f64>>) -> Result<Self> {
        if words.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a dictionary needs at least 2 words, got {}",
                words.len()
            )));
        }
        let dim = words[0].len();
        for w in &words {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: w.len(),
                });
            }
            if !w.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput("dictionary word with non-finite entry".into()));
            }
        }
        Ok(Dictionary { words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.words[0].len()
    }

    /// Index of the nearest word (Euclidean; ties to the lowest index).
    pub fn nearest(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(nearest_center(&self.words, x).0)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_center(centers: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing or `max_iter` is reached. Returns the dictionary and the
/// objective (sum of squared distances) after every Lloyd step.
pub fn build_dictionary_traced(
    pool: &[Vec<f64>],
    v: usize,
    seed: u64,
    max_iter: usize,
) -> Result<(Dictionary, Vec<f64>)> {
    if v < 2 {
        return Err(Error::InvalidParameter(format!("dictionary size must be >= 2, got {v}")));
    }
    if pool.len() < v {
        return Err(Error::InvalidInput(format!(
            "pool of {} features is smaller than the dictionary size {v}",
            pool.len()
        )));
    }
    let dim = pool[0].len();
    if let Some(bad) = pool.iter().find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![pool[rng.random_range(0..pool.len())].clone()];
    let mut d2: Vec<f64> = pool.par_iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < v {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random_range(0.0..total);
            let mut acc = 0.0;
            let mut chosen = pool.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            while d2[chosen] == 0.0 && chosen > 0 {
                chosen -= 1;
            }
            chosen
        } else {
            rng.random_range(0..pool.len())
        };
        let c = pool[pick].clone();
        d2.par_iter_mut()
            .zip(pool.par_iter())
            .for_each(|(d, x)| *d = d.min(sq_dist(x, &c)));
        centers.push(c);
    }

    let mut assignment: Vec<usize> = vec![usize::MAX; pool.len()];
    let mut trace = Vec::new();
    for _ in 0..max_iter.max(1) {
        let next: Vec<(usize, f64)> = pool.par_iter().map(|x| nearest_center(&centers, x)).collect();
        let changed = next.iter().zip(&assignment).any(|(a, &b)| a.0 != b);
        assignment = next.iter().map(|a| a.0).collect();
        let mut sums = vec![vec![0.0; dim]; v];
        let mut counts = vec![0usize; v];
        for (x, &a) in pool.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, xi) in sums[a].iter_mut().zip(x) {
                *s += xi;
            }
        }
        for k in 0..v {
            if counts[k] > 0 {
                centers[k] = sums[k].iter().map(|s| s / counts[k] as f64).collect();
            }
        }
        let objective: f64 = pool
            .par_iter()
            .zip(assignment.par_iter())
            .map(|(x, &a)| sq_dist(x, &centers[a]))
            .sum();
        trace.push(objective);
        if !changed {
            break;
        }
    }
    Ok((Dictionary { words: centers }, trace))
}

pub fn build_dictionary(pool: &[Vec<f64>], v: usize, seed: u64, max_iter: usize) -> Result<Dictionary> {
    Ok(build_dictionary_traced(pool, v, seed, max_iter)?.0)
}

/// Histogram of visual-word occurrences.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowHistogram {
    pub counts: Vec<u64>,
}

impl BowHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// The document as a sequence of word indices, in increasing word order.
    pub fn words(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(w, &c)| std::iter::repeat_n(w, c as usize))
            .collect()
    }
}

/// Word index of every feature vector, in input order.
pub fn assign_words(features: &[Vec<f64>], dict: &Dictionary) -> Result<Vec<usize>> {
    features.iter().map(|f| dict.nearest(f)).collect()
}

pub fn bow_encode_vectors(features: &[Vec<f64>], dict: &Dictionary) -> Result<BowHistogram> {
    if features.is_empty() {
        return Err(Error::InvalidInput("cannot encode an empty feature set".into()));
    }
    let mut counts = vec![0u64; dict.len()];
    for w in assign_words(features, dict)? {
        counts[w] += 1;
    }
    Ok(BowHistogram { counts })
}

pub fn bow_encode(features: &FeatureSet, dict: &Dictionary) -> Result<BowHistogram> {
    bow_encode_vectors(&features.vectors(), dict)
}
