use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An agent that can be taught and questioned by the simulated teacher.
pub trait Learner<V> {
    fn teach(&mut self, label: &str, view: &V) -> Result<()>;
    /// `None` means the agent does not recognize the view.
    fn predict(&mut self, view: &V) -> Result<Option<String>>;
    /// Number of stored instances, for learners that keep them.
    fn stored_instances(&self) -> Option<usize> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Context {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub tau: f64,
    pub window_mult: usize,
    pub breakpoint_limit: usize,
    pub views_per_teach: usize,
    pub seed: u64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            tau: 0.67,
            window_mult: 3,
            breakpoint_limit: 100,
            views_per_teach: 3,
            seed: 0,
        }
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidParameter(format!("tau must be in (0, 1), got {}", self.tau)));
        }
        if self.window_mult == 0 || self.breakpoint_limit == 0 || self.views_per_teach == 0 {
            return Err(Error::InvalidParameter(
                "window_mult, breakpoint_limit and views_per_teach must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Teach,
    Ask,
    Correct,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Breakpoint,
    LackOfData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEvent {
    /// Question/correction iterations completed when the event happened.
    pub iteration: usize,
    pub action: Action,
    pub category: String,
    /// Index of the view within its category.
    pub view: usize,
    /// Number of categories introduced so far.
    pub known: usize,
    pub predicted: Option<String>,
    pub correct: Option<bool>,
    /// Sliding-window accuracy after this ask.
    pub accuracy: Option<f64>,
    pub context: Option<Context>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Introduction {
    pub category: String,
    pub iteration: usize,
    pub context: Option<Context>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolLog {
    pub params: ProtocolParams,
    pub rho: Option<usize>,
    pub events: Vec<ProtocolEvent>,
    pub introductions: Vec<Introduction>,
    /// Categories whose accuracy threshold was crossed, in order.
    pub learned: Vec<String>,
    pub termination: Termination,
}

impl ProtocolLog {
    /// One JSON object per event.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn events_from_jsonl(text: &str) -> Result<Vec<ProtocolEvent>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect()
    }

    fn context_of(&self, category: &str) -> Option<Context> {
        self.introductions
            .iter()
            .find(|i| i.category == category)
            .and_then(|i| i.context)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary {
    pub qci: usize,
    pub nlc: usize,
    pub aic: Option<f64>,
    pub gca: f64,
    pub apa: f64,
    pub termination: Termination,
    pub alc1: Option<usize>,
    pub alc2: Option<usize>,
    pub adaptability: Option<f64>,
}

impl ProtocolSummary {
    pub const CSV_HEADER: [&'static str; 9] =
        ["qci", "nlc", "aic", "gca", "apa", "termination", "alc1", "alc2", "adaptability"];

    pub fn csv_row(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        vec![
            self.qci.to_string(),
            self.nlc.to_string(),
            opt(&self.aic),
            self.gca.to_string(),
            self.apa.to_string(),
            match self.termination {
                Termination::Breakpoint => "breakpoint".into(),
                Termination::LackOfData => "lack_of_data".into(),
            },
            opt(&self.alc1),
            opt(&self.alc2),
            opt(&self.adaptability),
        ]
    }

    /// Header plus one row per summary, RFC-4180.
    pub fn to_csv(rows: &[ProtocolSummary]) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER)?;
        for r in rows {
            w.write_record(r.csv_row())?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Sliding-window accuracy of every ask, recomputed from the raw events.
/// The window restarts at each introduction and spans the last
/// `min(k, window_mult * n)` asks.
pub fn replay_accuracy(events: &[ProtocolEvent], window_mult: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let mut since: Vec<bool> = Vec::new();
    for e in events {
        match e.action {
            Action::Teach => since.clear(),
            Action::Ask => {
                since.push(e.correct == Some(true));
                let w = since.len().min(window_mult * e.known);
                let tail = &since[since.len() - w..];
                out.push(tail.iter().filter(|&&c| c).count() as f64 / w as f64);
            }
            Action::Correct => {}
        }
    }
    out
}

/// Summary measures computed from the log alone (plus the learner's stored
/// instance count for AIC).
pub fn summarize(log: &ProtocolLog, stored_instances: Option<usize>) -> ProtocolSummary {
    let asks: Vec<&ProtocolEvent> = log.events.iter().filter(|e| e.action == Action::Ask).collect();
    let qci = asks.len();
    let correct = asks.iter().filter(|e| e.correct == Some(true)).count();
    let s = replay_accuracy(&log.events, log.params.window_mult);
    let nlc = log.learned.len();
    let (gca, apa) = if qci == 0 {
        (0.0, 0.0)
    } else {
        (correct as f64 / qci as f64, s.iter().sum::<f64>() / s.len() as f64)
    };
    let (alc1, alc2, adaptability) = if log.rho.is_some() {
        let a = log.learned.iter().filter(|c| log.context_of(c) == Some(Context::A)).count();
        let b = log.learned.iter().filter(|c| log.context_of(c) == Some(Context::B)).count();
        let adapt = (log.termination == Termination::Breakpoint && a > 0).then(|| b as f64 / a as f64);
        (Some(a), Some(b), adapt)
    } else {
        (None, None, None)
    };
    ProtocolSummary {
        qci,
        nlc,
        aic: stored_instances.filter(|_| nlc > 0).map(|s| s as f64 / nlc as f64),
        gca,
        apa,
        termination: log.termination,
        alc1,
        alc2,
        adaptability,
    }
}

struct Teacher<'a, V, L> {
    data: &'a [(String, Vec<V>)],
    learner: &'a mut L,
    params: ProtocolParams,
    view_order: Vec<Vec<usize>>,
    cursor: Vec<usize>,
    events: Vec<ProtocolEvent>,
    introductions: Vec<Introduction>,
    qci: usize,
}

impl<V, L: Learner<V>> Teacher<'_, V, L> {
    fn remaining(&self, cat: usize) -> usize {
        self.view_order[cat].len() - self.cursor[cat]
    }

    fn take_view(&mut self, cat: usize) -> Option<usize> {
        let v = *self.view_order[cat].get(self.cursor[cat])?;
        self.cursor[cat] += 1;
        Some(v)
    }

    fn event(&self, action: Action, cat: usize, view: usize, known: usize, context: Option<Context>) -> ProtocolEvent {
        ProtocolEvent {
            iteration: self.qci,
            action,
            category: self.data[cat].0.clone(),
            view,
            known,
            predicted: None,
            correct: None,
            accuracy: None,
            context,
        }
    }

    /// Teaches `views_per_teach` unseen views; false if the category lacks them.
    fn introduce(&mut self, cat: usize, known: usize, context: Option<Context>) -> Result<bool> {
        if self.remaining(cat) < self.params.views_per_teach {
            return Ok(false);
        }
        self.introductions.push(Introduction {
            category: self.data[cat].0.clone(),
            iteration: self.qci,
            context,
        });
        for _ in 0..self.params.views_per_teach {
            let v = self.take_view(cat).expect("checked above");
            self.learner.teach(&self.data[cat].0, &self.data[cat].1[v])?;
            self.events.push(self.event(Action::Teach, cat, v, known, context));
        }
        Ok(true)
    }

    /// One question/correction iteration; `None` when the category has no unseen view.
    fn ask(&mut self, cat: usize, known: usize, context: Option<Context>) -> Result<Option<bool>> {
        let Some(v) = self.take_view(cat) else {
            return Ok(None);
        };
        let label = &self.data[cat].0;
        let view = &self.data[cat].1[v];
        let predicted = self.learner.predict(view)?;
        let ok = predicted.as_deref() == Some(label.as_str());
        self.qci += 1;
        let mut e = self.event(Action::Ask, cat, v, known, context);
        e.predicted = predicted;
        e.correct = Some(ok);
        self.events.push(e);
        if !ok {
            self.learner.teach(label, view)?;
            self.events.push(self.event(Action::Correct, cat, v, known, context));
        }
        Ok(Some(ok))
    }
}

fn check_dataset<V>(data: &[(String, Vec<V>)]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidInput("protocol needs at least one category".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for (l, _) in data {
        if !seen.insert(l) {
            return Err(Error::InvalidInput(format!("duplicate category '{l}'")));
        }
    }
    Ok(())
}

fn run<V, L: Learner<V>>(
    data: &[(String, Vec<V>)],
    learner: &mut L,
    params: ProtocolParams,
    contexts: Option<(&BTreeMap<String, Context>, usize)>,
) -> Result<ProtocolLog> {
    params.validate()?;
    check_dataset(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order_a: Vec<usize> = Vec::new();
    let mut order_b: Vec<usize> = Vec::new();
    let ctx_of: Vec<Option<Context>> = match contexts {
        None => {
            order_a = (0..data.len()).collect();
            vec![None; data.len()]
        }
        Some((map, _)) => {
            let mut out = Vec::with_capacity(data.len());
            for (i, (label, _)) in data.iter().enumerate() {
                let c = *map
                    .get(label)
                    .ok_or_else(|| Error::InvalidInput(format!("category '{label}' has no context")))?;
                match c {
                    Context::A => order_a.push(i),
                    Context::B => order_b.push(i),
                }
                out.push(Some(c));
            }
            if order_a.is_empty() || order_b.is_empty() {
                return Err(Error::InvalidInput("both contexts need at least one category".into()));
            }
            out
        }
    };
    order_a.shuffle(&mut rng);
    order_b.shuffle(&mut rng);
    let view_order: Vec<Vec<usize>> = data
        .iter()
        .map(|(_, views)| {
            let mut o: Vec<usize> = (0..views.len()).collect();
            o.shuffle(&mut rng);
            o
        })
        .collect();

    let mut t = Teacher {
        data,
        learner,
        params,
        cursor: vec![0; data.len()],
        view_order,
        events: Vec::new(),
        introductions: Vec::new(),
        qci: 0,
    };
    let mut context = contexts.map(|_| Context::A);
    let mut queue_a = order_a.into_iter();
    let mut queue_b = order_b.into_iter();

    let first = queue_a.next().expect("nonempty");
    if !t.introduce(first, 1, context)? {
        return Err(Error::InvalidInput(format!(
            "first category '{}' has fewer than {} views",
            data[first].0, params.views_per_teach
        )));
    }
    let mut known = vec![first];
    let mut learned = vec![data[first].0.clone()];

    let termination = 'outer: loop {
        if let (Some(Context::A), Some((_, rho))) = (context, contexts) {
            if known.len() > rho {
                context = Some(Context::B);
            }
        }
        let next = match context {
            Some(Context::B) => queue_b.next(),
            _ => queue_a.next(),
        };
        let Some(next) = next else {
            break Termination::LackOfData;
        };
        if !t.introduce(next, known.len() + 1, context)? {
            break Termination::LackOfData;
        }
        known.push(next);
        let n = known.len();
        let mut window: Vec<bool> = Vec::new();
        let mut c = 0;
        loop {
            let cat = known[c];
            c = if c + 1 < n { c + 1 } else { 0 };
            if context.is_some() && ctx_of[cat] != context {
                continue;
            }
            let Some(ok) = t.ask(cat, n, context)? else {
                break 'outer Termination::LackOfData;
            };
            window.push(ok);
            let k = window.len();
            let w = k.min(params.window_mult * n);
            let s = window[k - w..].iter().filter(|&&x| x).count() as f64 / w as f64;
            if let Some(e) = t.events.iter_mut().rev().find(|e| e.action == Action::Ask) {
                e.accuracy = Some(s);
            }
            if k >= n {
                if s > params.tau {
                    learned.push(data[next].0.clone());
                    break;
                }
                if k >= params.breakpoint_limit {
                    break 'outer Termination::Breakpoint;
                }
            }
        }
    };

    Ok(ProtocolLog {
        params,
        rho: contexts.map(|(_, r)| r),
        events: t.events,
        introductions: t.introductions,
        learned,
        termination,
    })
}

/// Single-context teaching protocol with a simulated teacher.
pub fn run_protocol<V, L: Learner<V>>(
    data: &[(String, Vec<V>)],
    learner: &mut L,
    params: ProtocolParams,
) -> Result<(ProtocolLog, ProtocolSummary)> {
    let log = run(data, learner, params, None)?;
    let summary = summarize(&log, learner.stored_instances());
    Ok((log, summary))
}

/// Teaching protocol that switches from context A to B once more than `rho`
/// categories have been introduced.
pub fn run_context_protocol<V, L: Learner<V>>(
    data: &[(String, Vec<V>)],
    contexts: &BTreeMap<String, Context>,
    learner: &mut L,
    rho: usize,
    params: ProtocolParams,
) -> Result<(ProtocolLog, ProtocolSummary)> {
    let log = run(data, learner, params, Some((contexts, rho)))?;
    let summary = summarize(&log, learner.stored_instances());
    Ok((log, summary))
}

/// Uniform integer in `[ceil(0.65 alc), floor(0.85 alc)]`.
pub fn pick_rho(alc: f64, seed: u64) -> Result<usize> {
    let lo = (0.65 * alc - 1e-9).ceil();
    let hi = (0.85 * alc + 1e-9).floor();
    if !(alc.is_finite() && lo >= 0.0 && lo <= hi) {
        return Err(Error::InvalidParameter(format!(
            "no integer in [0.65 ALC, 0.85 ALC] for ALC = {alc}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rng.random_range(lo as usize..=hi as usize))
}
