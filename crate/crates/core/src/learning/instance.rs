use serde::{Deserialize, Serialize};

use super::distance::{chi2_unchecked, l2_unchecked, set_distance_unchecked};
use super::Prediction;
use crate::error::{Error, Result};

/// An object view as stored by an instance-based learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Representation {
    /// Variable-size set of local feature vectors.
    FeatureSet(Vec<Vec<f64>>),
    /// Fixed-size vector (GOOD, BoW or topic histogram).
    Vector(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InstanceMode {
    /// Minimum object-to-category distance normalized by the category ICD.
    A1,
    /// Mean object-to-category distance normalized by ICD and the mean ICD.
    A2,
    /// 1-NN over stored fixed-size vectors.
    NnFixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    L2,
    Chi2,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: b.len(),
            });
        }
        Ok(match self {
            Metric::L2 => l2_unchecked(a, b),
            Metric::Chi2 => chi2_unchecked(a, b),
        })
    }
}

fn check_set(set: &[Vec<f64>]) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidInput("empty feature set".into()));
    }
    let dim = set[0].len();
    match set.iter().find(|x| x.len() != dim) {
        Some(bad) => Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        }),
        None => Ok(()),
    }
}

fn set_dims_match(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<()> {
    if a[0].len() != b[0].len() {
        return Err(Error::DimensionMismatch {
            expected: b[0].len(),
            found: a[0].len(),
        });
    }
    Ok(())
}

/// A category's stored instances. For feature-set instances the sum of
/// directed set distances over ordered pairs is maintained incrementally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceCategory {
    pub label: String,
    pub instances: Vec<Representation>,
    pair_sum: f64,
}

impl InstanceCategory {
    pub fn new(label: impl Into<String>) -> Self {
        InstanceCategory {
            label: label.into(),
            instances: Vec::new(),
            pair_sum: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn add(&mut self, rep: Representation) -> Result<()> {
        match (&rep, self.instances.first()) {
            (Representation::FeatureSet(s), first) => {
                check_set(s)?;
                if let Some(Representation::FeatureSet(f)) = first {
                    set_dims_match(s, f)?;
                } else if first.is_some() {
                    return Err(Error::InvalidInput("cannot mix feature sets and vectors in a category".into()));
                }
                for other in &self.instances {
                    if let Representation::FeatureSet(o) = other {
                        self.pair_sum += set_distance_unchecked(s, o) + set_distance_unchecked(o, s);
                    }
                }
            }
            (Representation::Vector(v), Some(Representation::Vector(f))) if v.len() != f.len() => {
                return Err(Error::DimensionMismatch {
                    expected: f.len(),
                    found: v.len(),
                });
            }
            (Representation::Vector(_), Some(Representation::FeatureSet(_))) => {
                return Err(Error::InvalidInput("cannot mix feature sets and vectors in a category".into()));
            }
            _ => {}
        }
        self.instances.push(rep);
        Ok(())
    }

    /// ICD computed from fewer than three instances is provisional.
    pub fn icd_is_provisional(&self) -> bool {
        self.instances.len() < 3
    }

    fn feature_sets(&self) -> Result<Vec<&Vec<Vec<f64>>>> {
        self.instances
            .iter()
            .map(|r| match r {
                Representation::FeatureSet(s) => Ok(s),
                Representation::Vector(_) => {
                    Err(Error::InvalidInput(format!("category '{}' stores fixed-size vectors", self.label)))
                }
            })
            .collect()
    }
}

/// Intra-category distance: mean directed set distance over ordered pairs.
pub fn icd(category: &InstanceCategory) -> Result<f64> {
    let n = category.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "ICD of '{}' needs at least 2 instances, has {n}",
            category.label
        )));
    }
    category.feature_sets()?;
    Ok(category.pair_sum / (n * (n - 1)) as f64)
}

fn ocd_distances(t: &[Vec<f64>], category: &InstanceCategory) -> Result<Vec<f64>> {
    check_set(t)?;
    let sets = category.feature_sets()?;
    if let Some(first) = sets.first() {
        set_dims_match(t, first)?;
    }
    Ok(sets.iter().map(|o| set_distance_unchecked(t, o)).collect())
}

/// Approach I: nearest-instance distance divided by the category ICD.
pub fn nocd_approach1(t: &[Vec<f64>], category: &InstanceCategory) -> Result<f64> {
    let spread = icd(category)?;
    if spread <= 0.0 {
        return Err(Error::DegenerateCategory(category.label.clone()));
    }
    let ocd = ocd_distances(t, category)?.into_iter().fold(f64::INFINITY, f64::min);
    Ok(ocd / spread)
}

/// Approach II: `2 OCD / (ICD(C) + icd_bar)` with OCD the mean instance distance.
pub fn nocd_approach2(t: &[Vec<f64>], category: &InstanceCategory, icd_bar: f64) -> Result<f64> {
    if !(icd_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("mean ICD must be > 0, got {icd_bar}")));
    }
    let spread = icd(category)?;
    let d = ocd_distances(t, category)?;
    let ocd = d.iter().sum::<f64>() / d.len() as f64;
    Ok(2.0 * ocd / (spread + icd_bar))
}

/// Mean ICD over categories holding at least two instances.
pub fn mean_icd(memory: &[InstanceCategory]) -> Result<f64> {
    let icds: Vec<f64> = memory.iter().filter(|c| c.len() >= 2).map(icd).collect::<Result<_>>()?;
    if icds.is_empty() {
        return Err(Error::InvalidInput("no category has enough instances for an ICD".into()));
    }
    Ok(icds.iter().sum::<f64>() / icds.len() as f64)
}

/// Scores every category (lower is better), picks the best with ties to the
/// lowest category index, and applies the optional unknown threshold `ct`.
pub fn classify_instances(
    t: &Representation,
    memory: &[InstanceCategory],
    mode: InstanceMode,
    metric: Metric,
    ct: Option<f64>,
) -> Result<Prediction> {
    if memory.is_empty() || memory.iter().any(|c| c.is_empty()) {
        return Err(Error::InvalidInput("classification needs a nonempty memory".into()));
    }
    let scores: Vec<f64> = match (mode, t) {
        (InstanceMode::A1, Representation::FeatureSet(s)) => {
            memory.iter().map(|c| nocd_approach1(s, c)).collect::<Result<_>>()?
        }
        (InstanceMode::A2, Representation::FeatureSet(s)) => {
            let bar = mean_icd(memory)?;
            memory.iter().map(|c| nocd_approach2(s, c, bar)).collect::<Result<_>>()?
        }
        (InstanceMode::NnFixed, Representation::Vector(v)) => {
            let mut out = Vec::with_capacity(memory.len());
            for c in memory {
                let mut best = f64::INFINITY;
                for inst in &c.instances {
                    match inst {
                        Representation::Vector(o) => best = best.min(metric.distance(v, o)?),
                        Representation::FeatureSet(_) => {
                            return Err(Error::InvalidInput(format!(
                                "category '{}' stores feature sets, not vectors",
                                c.label
                            )))
                        }
                    }
                }
                out.push(best);
            }
            out
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "representation kind does not match classification mode {mode:?}"
            )))
        }
    };
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    let score = scores[best];
    let label = match ct {
        Some(th) if score > th => None,
        _ => Some(memory[best].label.clone()),
    };
    Ok(Prediction {
        label,
        score,
        scores: memory.iter().map(|c| c.label.clone()).zip(scores).collect(),
    })
}
