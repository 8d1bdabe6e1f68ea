//! Open-ended classifiers: distance functions, the instance-based learner
//! with ICD-normalized distances, and the incremental naive-Bayes learner.

mod bayes;
mod distance;
mod instance;

use serde::{Deserialize, Serialize};

pub use bayes::{bayes_classify, bayes_scores, bayes_teach, BayesCategory, BayesMemory};
pub use distance::{chi2, js, kl, l2, set_distance};
pub use instance::{
    classify_instances, icd, mean_icd, nocd_approach1, nocd_approach2, InstanceCategory, InstanceMode, Metric,
    Representation,
};

/// Outcome of a classification. `label` is `None` for an unknown object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Option<String>,
    /// Distance (instance learners, lower is better) or log-likelihood
    /// (naive Bayes, higher is better) of the chosen category.
    pub score: f64,
    pub scores: Vec<(String, f64)>,
}
