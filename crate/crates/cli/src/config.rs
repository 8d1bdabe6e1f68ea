//! Flat `key = value` experiment configuration.
//!
//! Files are parsed as TOML but must stay flat: tables and arrays are
//! rejected, as are keys this module does not know.

use std::path::Path;

use anyhow::{anyhow, bail, Context as _, Result};
use oel3d::descriptors::SpinParams;
use oel3d::evaluation::{ProtocolParams, DEFAULT_FOLDS};
use oel3d::learning::InstanceMode;
use oel3d::nbv::{RenderParams, DEFAULT_RESOLUTION};
use oel3d::pipeline::{LearnerKind, PipelineConfig, RepresentationKind};
use oel3d::segmentation::DetectionParams;
use serde::Serialize;
use toml::Value;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub representation: RepresentationKind,
    pub learner: LearnerKind,
    /// GOOD bins per side.
    pub n: usize,
    /// Spin-image keypoint voxel VS (meters).
    pub vs: f64,
    /// Spin-image width IW.
    pub iw: usize,
    /// Spin-image support length SL (meters).
    pub sl: f64,
    /// Spin-image support angle A (degrees).
    pub a: f64,
    /// Dictionary size DS.
    pub ds: usize,
    pub dictionary_iters: usize,
    pub dictionary_pool: usize,
    /// Topics K.
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gibbs_iters: usize,
    pub instance_mode: InstanceMode,
    /// Unknown threshold; negative means disabled.
    pub ct: f64,
    pub folds: usize,
    pub tau: f64,
    pub window_mult: usize,
    pub breakpoint_limit: usize,
    pub views_per_teach: usize,
    pub replications: usize,
    /// Fixed ρ for the context-change protocol; negative means sampled.
    pub rho: i64,
    pub sigma_nbv: f64,
    pub nbv_resolution: usize,
    /// Index of the current camera pose among the candidates.
    pub current_view: usize,
    pub plane_tau: f64,
    pub plane_iterations: usize,
    pub views: usize,
    pub points: usize,
    pub noise: f64,
    pub jitter: f64,
    /// Assign the first half of the generated families to context A and
    /// the rest to B.
    pub context_split: bool,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        let q = ProtocolParams::default();
        let d = DetectionParams::default();
        ExperimentConfig {
            representation: p.representation,
            learner: p.learner,
            n: p.good_bins,
            vs: p.spin.voxel,
            iw: p.spin.image_width,
            sl: p.spin.support_length,
            a: p.spin.support_angle,
            ds: p.dictionary_size,
            dictionary_iters: p.dictionary_iters,
            dictionary_pool: p.dictionary_pool,
            k: p.topics,
            alpha: p.alpha,
            beta: p.beta,
            gibbs_iters: p.gibbs_iters,
            instance_mode: p.instance_mode,
            ct: -1.0,
            folds: DEFAULT_FOLDS,
            tau: q.tau,
            window_mult: q.window_mult,
            breakpoint_limit: q.breakpoint_limit,
            views_per_teach: q.views_per_teach,
            replications: 1,
            rho: -1,
            sigma_nbv: 0.5,
            nbv_resolution: DEFAULT_RESOLUTION,
            current_view: 0,
            plane_tau: d.plane_tau,
            plane_iterations: d.plane_iterations,
            views: 40,
            points: 500,
            noise: 0.002,
            jitter: oel3d::synthgen::DEFAULT_JITTER,
            context_split: false,
            seed: 0,
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => bail!("'{key}' expects a number, got {v}"),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => bail!("'{key}' expects a non-negative integer, got {v}"),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| anyhow!("'{key}' expects a string, got {v}"))
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "representation" => self.representation = as_str(key, v)?.parse()?,
            "learner" => self.learner = as_str(key, v)?.parse()?,
            "n" => self.n = as_usize(key, v)?,
            "vs" => self.vs = as_f64(key, v)?,
            "iw" => self.iw = as_usize(key, v)?,
            "sl" => self.sl = as_f64(key, v)?,
            "a" => self.a = as_f64(key, v)?,
            "ds" => self.ds = as_usize(key, v)?,
            "dictionary_iters" => self.dictionary_iters = as_usize(key, v)?,
            "dictionary_pool" => self.dictionary_pool = as_usize(key, v)?,
            "k" => self.k = as_usize(key, v)?,
            "alpha" => self.alpha = as_f64(key, v)?,
            "beta" => self.beta = as_f64(key, v)?,
            "gibbs_iters" => self.gibbs_iters = as_usize(key, v)?,
            "instance_mode" => {
                self.instance_mode = match as_str(key, v)? {
                    "a1" | "A1" => InstanceMode::A1,
                    "a2" | "A2" => InstanceMode::A2,
                    "nn" => InstanceMode::NnFixed,
                    other => bail!("unknown instance_mode '{other}' (a1, a2, nn)"),
                }
            }
            "ct" => self.ct = as_f64(key, v)?,
            "folds" => self.folds = as_usize(key, v)?,
            "tau" => self.tau = as_f64(key, v)?,
            "window_mult" => self.window_mult = as_usize(key, v)?,
            "breakpoint_limit" => self.breakpoint_limit = as_usize(key, v)?,
            "views_per_teach" => self.views_per_teach = as_usize(key, v)?,
            "replications" => self.replications = as_usize(key, v)?,
            "rho" => {
                self.rho = v.as_integer().ok_or_else(|| anyhow!("'rho' expects an integer, got {v}"))?;
            }
            "sigma_nbv" => self.sigma_nbv = as_f64(key, v)?,
            "nbv_resolution" => self.nbv_resolution = as_usize(key, v)?,
            "current_view" => self.current_view = as_usize(key, v)?,
            "plane_tau" => self.plane_tau = as_f64(key, v)?,
            "plane_iterations" => self.plane_iterations = as_usize(key, v)?,
            "views" => self.views = as_usize(key, v)?,
            "points" => self.points = as_usize(key, v)?,
            "noise" => self.noise = as_f64(key, v)?,
            "jitter" => self.jitter = as_f64(key, v)?,
            "context_split" => {
                self.context_split = v.as_bool().ok_or_else(|| anyhow!("'context_split' expects true or false"))?;
            }
            "seed" => self.seed = as_usize(key, v)? as u64,
            _ => bail!("unknown configuration key '{key}'"),
        }
        Ok(())
    }

    /// Applies every entry of a flat TOML document.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        let table: toml::Table = text.parse()?;
        for (key, v) in &table {
            if matches!(v, Value::Table(_) | Value::Array(_)) {
                bail!("'{key}': nested tables and arrays are not allowed");
            }
            self.set(key, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        self.apply_str(&text).with_context(|| format!("in {}", path.display()))
    }

    /// `key=value` override; bare words are taken as strings.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("override '{spec}' is not key=value"))?;
        let (key, raw) = (key.trim(), raw.trim());
        let v = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => Value::String(raw.to_string()),
        };
        self.set(key, &v).with_context(|| format!("override '{spec}'"))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            representation: self.representation,
            learner: self.learner,
            good_bins: self.n,
            spin: SpinParams {
                voxel: self.vs,
                image_width: self.iw,
                support_length: self.sl,
                support_angle: self.a,
            },
            dictionary_size: self.ds,
            dictionary_iters: self.dictionary_iters,
            dictionary_pool: self.dictionary_pool,
            topics: self.k,
            alpha: self.alpha,
            beta: self.beta,
            gibbs_iters: self.gibbs_iters,
            instance_mode: self.instance_mode,
            ct: (self.ct >= 0.0).then_some(self.ct),
            seed: self.seed,
        }
    }

    pub fn protocol(&self) -> ProtocolParams {
        ProtocolParams {
            tau: self.tau,
            window_mult: self.window_mult,
            breakpoint_limit: self.breakpoint_limit,
            views_per_teach: self.views_per_teach,
            seed: self.seed,
        }
    }

    pub fn detection(&self) -> DetectionParams {
        DetectionParams {
            plane_tau: self.plane_tau,
            plane_iterations: self.plane_iterations,
            seed: self.seed,
            ..DetectionParams::default()
        }
    }

    pub fn render(&self) -> RenderParams {
        RenderParams {
            resolution: self.nbv_resolution,
            ..RenderParams::default()
        }
    }

    /// Checks every parameter before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.pipeline().validate()?;
        self.protocol().validate()?;
        if self.folds < 2 {
            bail!("folds must be >= 2, got {}", self.folds);
        }
        if self.replications == 0 {
            bail!("replications must be >= 1");
        }
        if !(self.sigma_nbv > 0.0) {
            bail!("sigma_nbv must be > 0, got {}", self.sigma_nbv);
        }
        if self.nbv_resolution < 2 {
            bail!("nbv_resolution must be >= 2, got {}", self.nbv_resolution);
        }
        if !(self.plane_tau > 0.0) || self.plane_iterations == 0 {
            bail!("plane_tau must be > 0 and plane_iterations >= 1");
        }
        if self.views == 0 || self.points < oel3d::synthgen::MIN_POINTS {
            bail!("views must be >= 1 and points >= {}", oel3d::synthgen::MIN_POINTS);
        }
        if !(self.noise >= 0.0) || !(0.0..1.0).contains(&self.jitter) {
            bail!("noise must be >= 0 and jitter in [0, 1)");
        }
        Ok(())
    }
}
