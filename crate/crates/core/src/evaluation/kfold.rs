use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::ConfusionMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

/// One labeled view borrowed from the dataset.
pub type Labeled<'a, V> = (&'a str, &'a V);

/// Stratified fold index of every view: each category's views are shuffled
/// and dealt round-robin from a counter shared across categories, so folds
/// stay balanced even when a category has fewer than `k` views.
pub fn fold_assignment<V>(dataset: &[(String, Vec<V>)], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("k-fold needs k >= 2, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counter = 0usize;
    Ok(dataset
        .iter()
        .map(|(_, views)| {
            let mut order: Vec<usize> = (0..views.len()).collect();
            order.shuffle(&mut rng);
            let mut folds = vec![0; views.len()];
            for i in order {
                folds[i] = counter % k;
                counter += 1;
            }
            folds
        })
        .collect())
}

/// Stratified k-fold cross-validation.
///
/// For each fold `run` receives the training views (labeled) and the test
/// views and returns one prediction per test view. Folds run in parallel
/// and the aggregated matrix is deterministic per seed.
pub fn kfold<V, F>(dataset: &[(String, Vec<V>)], k: usize, seed: u64, run: F) -> Result<ConfusionMatrix>
where
    V: Sync,
    F: Fn(&[Labeled<'_, V>], &[&V]) -> Result<Vec<Option<String>>> + Sync,
{
    let folds = fold_assignment(dataset, k, seed)?;
    let per_fold: Vec<Result<ConfusionMatrix>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let mut train = Vec::new();
            let mut test = Vec::new();
            let mut truth = Vec::new();
            for ((label, views), assign) in dataset.iter().zip(&folds) {
                for (v, &a) in views.iter().zip(assign) {
                    if a == f {
                        test.push(v);
                        truth.push(label.as_str());
                    } else {
                        train.push((label.as_str(), v));
                    }
                }
            }
            let mut cm = ConfusionMatrix::new(dataset.iter().map(|(l, _)| l.clone()));
            if test.is_empty() {
                return Ok(cm);
            }
            let preds = run(&train, &test)?;
            if preds.len() != test.len() {
                return Err(Error::DimensionMismatch {
                    expected: test.len(),
                    found: preds.len(),
                });
            }
            for (t, p) in truth.iter().zip(&preds) {
                cm.record(t, p.as_deref());
            }
            Ok(cm)
        })
        .collect();
    let mut total = ConfusionMatrix::new(dataset.iter().map(|(l, _)| l.clone()));
    for cm in per_fold {
        total.merge(&cm?);
    }
    Ok(total)
}
