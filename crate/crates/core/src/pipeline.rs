//! A perceptual agent: one object representation wired to one open-ended
//! learner, usable by both k-fold evaluation and the teaching protocols.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::{compute_feature_set, compute_good, SpinParams, DEFAULT_GOOD_BINS};
use crate::error::{Error, Result};
use crate::evaluation::{Labeled, Learner};
use crate::learning::{
    bayes_classify, bayes_scores, bayes_teach, classify_instances, BayesMemory, InstanceCategory, InstanceMode, Metric,
    Representation,
};
use crate::pointcloud::PointCloud;
use crate::representations::{
    assign_words, build_dictionary, lda_infer, lda_infer_counts, lda_update, local_lda_update, Dictionary, LdaParams,
    TopicModel, TopicScope, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_DICTIONARY_SIZE, DEFAULT_GIBBS_ITERS, DEFAULT_TOPICS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationKind {
    Good,
    Spinset,
    Bow,
    Lda,
    LocalLda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Instance,
    Bayes,
}

impl RepresentationKind {
    pub fn name(self) -> &'static str {
        match self {
            RepresentationKind::Good => "good",
            RepresentationKind::Spinset => "spinset",
            RepresentationKind::Bow => "bow",
            RepresentationKind::Lda => "lda",
            RepresentationKind::LocalLda => "local_lda",
        }
    }

    /// Whether views are visual-word documents over a dictionary.
    pub fn needs_dictionary(self) -> bool {
        matches!(self, RepresentationKind::Bow | RepresentationKind::Lda | RepresentationKind::LocalLda)
    }
}

impl fmt::Display for RepresentationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RepresentationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "good" => RepresentationKind::Good,
            "spinset" => RepresentationKind::Spinset,
            "bow" => RepresentationKind::Bow,
            "lda" => RepresentationKind::Lda,
            "local_lda" => RepresentationKind::LocalLda,
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown representation '{s}' (good, spinset, bow, lda, local_lda)"
                )))
            }
        })
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LearnerKind::Instance => "instance",
            LearnerKind::Bayes => "bayes",
        })
    }
}

impl FromStr for LearnerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "instance" => Ok(LearnerKind::Instance),
            "bayes" => Ok(LearnerKind::Bayes),
            _ => Err(Error::InvalidParameter(format!("unknown learner '{s}' (instance, bayes)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub representation: RepresentationKind,
    pub learner: LearnerKind,
    pub good_bins: usize,
    pub spin: SpinParams,
    pub dictionary_size: usize,
    pub dictionary_iters: usize,
    /// Feature vectors sampled for dictionary construction.
    pub dictionary_pool: usize,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gibbs_iters: usize,
    /// Normalization used by spin-image sets (A1 or A2).
    pub instance_mode: InstanceMode,
    /// Unknown threshold on the winning distance (instance learner only).
    pub ct: Option<f64>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            representation: RepresentationKind::Good,
            learner: LearnerKind::Instance,
            good_bins: DEFAULT_GOOD_BINS,
            spin: SpinParams::default(),
            dictionary_size: DEFAULT_DICTIONARY_SIZE,
            dictionary_iters: 100,
            dictionary_pool: 20_000,
            topics: DEFAULT_TOPICS,
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
            gibbs_iters: DEFAULT_GIBBS_ITERS,
            instance_mode: InstanceMode::A1,
            ct: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.representation == RepresentationKind::Spinset && self.learner == LearnerKind::Bayes {
            return Err(Error::InvalidParameter(
                "naive Bayes needs fixed-size counts; use bow, lda or local_lda with spin images".into(),
            ));
        }
        if self.good_bins == 0 {
            return Err(Error::InvalidParameter("GOOD bins must be >= 1".into()));
        }
        self.spin.validate()?;
        if self.representation.needs_dictionary()
            && (self.dictionary_size < 2 || self.dictionary_iters == 0 || self.dictionary_pool < self.dictionary_size) {
                return Err(Error::InvalidParameter(format!(
                    "dictionary needs size >= 2, iterations >= 1 and a pool of at least size vectors (size {}, pool {})",
                    self.dictionary_size, self.dictionary_pool
                )));
            }
        if matches!(self.representation, RepresentationKind::Lda | RepresentationKind::LocalLda) {
            self.lda_params(2)?.model(TopicScope::Shared)?;
            if self.gibbs_iters == 0 {
                return Err(Error::InvalidParameter("Gibbs iterations must be >= 1".into()));
            }
        }
        if self.representation == RepresentationKind::Spinset && self.instance_mode == InstanceMode::NnFixed {
            return Err(Error::InvalidParameter("spin-image sets use instance mode A1 or A2".into()));
        }
        if let Some(ct) = self.ct {
            if !(ct >= 0.0) {
                return Err(Error::InvalidParameter(format!("CT must be >= 0, got {ct}")));
            }
        }
        Ok(())
    }

    fn lda_params(&self, vocabulary: usize) -> Result<LdaParams> {
        Ok(LdaParams {
            vocabulary,
            topics: self.topics,
            alpha: self.alpha,
            beta: self.beta,
            iters: self.gibbs_iters,
            seed: self.seed,
        })
    }
}

/// A view after descriptor extraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ObjectView {
    Good { bins: Vec<f64>, counts: Vec<u64> },
    Features(Vec<Vec<f64>>),
    /// Visual-word document over a dictionary of `vocabulary` words.
    Words { words: Vec<usize>, vocabulary: usize },
}

/// Descriptor stage of the pipeline. Dictionary representations stop at
/// spin-image features; see [`encode_words`].
pub fn extract_view(cloud: &PointCloud, cfg: &PipelineConfig) -> Result<ObjectView> {
    match cfg.representation {
        RepresentationKind::Good => {
            let d = compute_good(cloud, cfg.good_bins)?;
            Ok(ObjectView::Good {
                bins: d.bins,
                counts: d.counts,
            })
        }
        _ => Ok(ObjectView::Features(compute_feature_set(cloud, &cfg.spin)?.vectors())),
    }
}

/// Replaces spin-image features by their visual words.
pub fn encode_words(view: ObjectView, dict: &Dictionary) -> Result<ObjectView> {
    match view {
        ObjectView::Features(f) => Ok(ObjectView::Words {
            words: assign_words(&f, dict)?,
            vocabulary: dict.len(),
        }),
        other => Ok(other),
    }
}

/// Uniform sample of at most `max` feature vectors pooled over `views`.
pub fn exploration_pool(views: &[&ObjectView], max: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut pool: Vec<&Vec<f64>> = views
        .iter()
        .flat_map(|v| match v {
            ObjectView::Features(f) => f.iter().collect::<Vec<_>>(),
            _ => Vec::new(),
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.shuffle(&mut rng);
    pool.truncate(max);
    pool.into_iter().cloned().collect()
}

/// Extracts every view (in parallel) and, for dictionary representations,
/// builds the dictionary from an exploration pool of all extracted features
/// and encodes the views. Labels are not used.
pub fn prepare_dataset(
    clouds: &[(String, Vec<PointCloud>)],
    cfg: &PipelineConfig,
) -> Result<(Vec<(String, Vec<ObjectView>)>, Option<Dictionary>)> {
    cfg.validate()?;
    let mut out: Vec<(String, Vec<ObjectView>)> = clouds
        .iter()
        .map(|(l, views)| {
            let v = views.par_iter().map(|c| extract_view(c, cfg)).collect::<Result<Vec<_>>>()?;
            Ok((l.clone(), v))
        })
        .collect::<Result<_>>()?;
    if !cfg.representation.needs_dictionary() {
        return Ok((out, None));
    }
    let all: Vec<&ObjectView> = out.iter().flat_map(|(_, v)| v.iter()).collect();
    let pool = exploration_pool(&all, cfg.dictionary_pool, cfg.seed);
    let dict = build_dictionary(&pool, cfg.dictionary_size, cfg.seed, cfg.dictionary_iters)?;
    for (_, views) in &mut out {
        let taken = std::mem::take(views);
        *views = taken.into_par_iter().map(|v| encode_words(v, &dict)).collect::<Result<_>>()?;
    }
    Ok((out, Some(dict)))
}

enum Memory {
    Instance(Vec<InstanceCategory>),
    Bayes(BayesMemory),
}

enum Topics {
    None,
    Shared(Box<TopicModel>),
    Local(BTreeMap<String, TopicModel>),
}

/// Agent holding the learner state for one experiment.
pub struct Agent {
    cfg: PipelineConfig,
    memory: Memory,
    topics: Topics,
    lda: Option<LdaParams>,
}

fn normalized(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect()
}

fn histogram(words: &[usize], vocabulary: usize) -> Vec<u64> {
    let mut h = vec![0; vocabulary];
    for &w in words {
        h[w] += 1;
    }
    h
}

impl Agent {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let memory = match cfg.learner {
            LearnerKind::Instance => Memory::Instance(Vec::new()),
            LearnerKind::Bayes => Memory::Bayes(BayesMemory::new()),
        };
        let topics = match cfg.representation {
            RepresentationKind::LocalLda => Topics::Local(BTreeMap::new()),
            _ => Topics::None,
        };
        Ok(Agent {
            cfg,
            memory,
            topics,
            lda: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Number of known categories.
    pub fn categories(&self) -> usize {
        match &self.memory {
            Memory::Instance(m) => m.len(),
            Memory::Bayes(m) => m.len(),
        }
    }

    fn words<'a>(&self, view: &'a ObjectView) -> Result<(&'a [usize], usize)> {
        match view {
            ObjectView::Words { words, vocabulary } => Ok((words, *vocabulary)),
            _ => Err(Error::InvalidInput(format!(
                "{} expects visual-word views",
                self.cfg.representation
            ))),
        }
    }

    fn lda_params(&mut self, vocabulary: usize) -> Result<LdaParams> {
        match self.lda {
            Some(p) if p.vocabulary != vocabulary => Err(Error::DimensionMismatch {
                expected: p.vocabulary,
                found: vocabulary,
            }),
            Some(p) => Ok(p),
            None => {
                let p = self.cfg.lda_params(vocabulary)?;
                if let (Topics::None, RepresentationKind::Lda) = (&self.topics, self.cfg.representation) {
                    self.topics = Topics::Shared(Box::new(p.model(TopicScope::Shared)?));
                }
                self.lda = Some(p);
                Ok(p)
            }
        }
    }

    /// Representation of `view` under a topic model, as the learner stores it.
    fn topic_rep(&self, model: &TopicModel, doc: &[usize]) -> Result<Rep> {
        Ok(match self.cfg.learner {
            LearnerKind::Instance => Rep::Vector(lda_infer(model, doc, self.cfg.gibbs_iters, self.cfg.seed)?.theta),
            LearnerKind::Bayes => Rep::Counts(lda_infer_counts(model, doc, self.cfg.gibbs_iters, self.cfg.seed)?),
        })
    }

    /// Representation of `view` outside any topic model.
    fn plain_rep(&self, view: &ObjectView) -> Result<Rep> {
        let bayes = self.cfg.learner == LearnerKind::Bayes;
        Ok(match (self.cfg.representation, view) {
            (RepresentationKind::Good, ObjectView::Good { bins, counts }) => {
                if bayes {
                    Rep::Counts(counts.clone())
                } else {
                    Rep::Vector(bins.clone())
                }
            }
            (RepresentationKind::Spinset, ObjectView::Features(f)) => Rep::Set(f.clone()),
            (RepresentationKind::Bow, ObjectView::Words { words, vocabulary }) => {
                let h = histogram(words, *vocabulary);
                if bayes {
                    Rep::Counts(h)
                } else {
                    Rep::Vector(normalized(&h))
                }
            }
            (kind, _) => {
                return Err(Error::InvalidInput(format!("view does not match representation {kind}")));
            }
        })
    }

    fn store(&mut self, label: &str, rep: Rep) -> Result<()> {
        match (&mut self.memory, rep) {
            (Memory::Bayes(m), Rep::Counts(c)) => bayes_teach(m, label, &c),
            (Memory::Instance(m), rep) => {
                let rep = match rep {
                    Rep::Vector(v) => Representation::Vector(v),
                    Rep::Set(s) => Representation::FeatureSet(s),
                    Rep::Counts(c) => Representation::Vector(c.iter().map(|&x| x as f64).collect()),
                };
                match m.iter_mut().find(|c| c.label == label) {
                    Some(c) => c.add(rep),
                    None => {
                        let mut c = InstanceCategory::new(label);
                        c.add(rep)?;
                        m.push(c);
                        Ok(())
                    }
                }
            }
            (Memory::Bayes(_), _) => Err(Error::InvalidInput("naive Bayes stores count vectors".into())),
        }
    }

    fn metric(&self) -> Metric {
        match self.cfg.representation {
            RepresentationKind::Good => Metric::L2,
            _ => Metric::Chi2,
        }
    }

    fn mode(&self) -> InstanceMode {
        match self.cfg.representation {
            RepresentationKind::Spinset => self.cfg.instance_mode,
            _ => InstanceMode::NnFixed,
        }
    }

    fn predict_local(&self, models: &BTreeMap<String, TopicModel>, doc: &[usize]) -> Result<Option<String>> {
        // each category scores the view in its own topic space
        let mut best: Option<(f64, String)> = None;
        match &self.memory {
            Memory::Instance(m) => {
                for c in m {
                    let Rep::Vector(theta) = self.topic_rep(&models[&c.label], doc)? else {
                        unreachable!("instance learner stores vectors")
                    };
                    let p = classify_instances(
                        &Representation::Vector(theta),
                        std::slice::from_ref(c),
                        InstanceMode::NnFixed,
                        Metric::Chi2,
                        None,
                    )?;
                    if best.as_ref().is_none_or(|(s, _)| p.score < *s) {
                        best = Some((p.score, c.label.clone()));
                    }
                }
                Ok(best.and_then(|(s, l)| match self.cfg.ct {
                    Some(ct) if s > ct => None,
                    _ => Some(l),
                }))
            }
            Memory::Bayes(m) => {
                for label in m.categories.keys() {
                    let Rep::Counts(y) = self.topic_rep(&models[label], doc)? else {
                        unreachable!("bayes learner stores counts")
                    };
                    let score = bayes_scores(m, &y)?
                        .into_iter()
                        .find(|(l, _)| l == label)
                        .map(|(_, s)| s)
                        .expect("category present");
                    if best.as_ref().is_none_or(|(s, _)| score > *s) {
                        best = Some((score, label.clone()));
                    }
                }
                Ok(best.map(|(_, l)| l))
            }
        }
    }
}

enum Rep {
    Vector(Vec<f64>),
    Set(Vec<Vec<f64>>),
    Counts(Vec<u64>),
}

impl Learner<ObjectView> for Agent {
    fn teach(&mut self, label: &str, view: &ObjectView) -> Result<()> {
        let rep = match self.cfg.representation {
            RepresentationKind::Lda => {
                let (doc, v) = self.words(view)?;
                self.lda_params(v)?;
                let Topics::Shared(model) = &mut self.topics else {
                    unreachable!("shared model created with the parameters")
                };
                lda_update(model, doc, self.cfg.gibbs_iters)?;
                let model = match &self.topics {
                    Topics::Shared(m) => m,
                    _ => unreachable!(),
                };
                self.topic_rep(model, doc)?
            }
            RepresentationKind::LocalLda => {
                let (doc, v) = self.words(view)?;
                let params = self.lda_params(v)?;
                let Topics::Local(models) = &mut self.topics else {
                    unreachable!("local models map created with the agent")
                };
                local_lda_update(models, &params, label, doc)?;
                let Topics::Local(models) = &self.topics else { unreachable!() };
                self.topic_rep(&models[label], doc)?
            }
            _ => self.plain_rep(view)?,
        };
        self.store(label, rep)
    }

    fn predict(&mut self, view: &ObjectView) -> Result<Option<String>> {
        if self.categories() == 0 {
            return Ok(None);
        }
        let rep = match (&self.topics, self.cfg.representation) {
            (Topics::Local(models), _) => {
                let (doc, _) = self.words(view)?;
                return self.predict_local(models, doc);
            }
            (Topics::Shared(model), _) => {
                let (doc, _) = self.words(view)?;
                self.topic_rep(model, doc)?
            }
            _ => self.plain_rep(view)?,
        };
        match (&self.memory, rep) {
            (Memory::Bayes(m), Rep::Counts(c)) => Ok(bayes_classify(m, &c)?.label),
            (Memory::Instance(m), rep) => {
                let rep = match rep {
                    Rep::Vector(v) => Representation::Vector(v),
                    Rep::Set(s) => Representation::FeatureSet(s),
                    Rep::Counts(c) => Representation::Vector(c.iter().map(|&x| x as f64).collect()),
                };
                Ok(classify_instances(&rep, m, self.mode(), self.metric(), self.cfg.ct)?.label)
            }
            (Memory::Bayes(_), _) => Err(Error::InvalidInput("naive Bayes needs count vectors".into())),
        }
    }

    fn stored_instances(&self) -> Option<usize> {
        Some(match &self.memory {
            Memory::Instance(m) => m.iter().map(InstanceCategory::len).sum(),
            Memory::Bayes(m) => m.total as usize,
        })
    }
}

/// Train-then-predict closure for [`crate::evaluation::kfold`]: a fresh
/// agent is taught every training view, then asked about every test view.
pub fn fold_runner(
    cfg: PipelineConfig,
) -> impl Fn(&[Labeled<'_, ObjectView>], &[&ObjectView]) -> Result<Vec<Option<String>>> + Sync {
    move |train, test| {
        let mut agent = Agent::new(cfg.clone())?;
        for (label, view) in train {
            agent.teach(label, view)?;
        }
        test.iter().map(|v| agent.predict(v)).collect()
    }
}
