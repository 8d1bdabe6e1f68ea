//! Subcommand bodies. Each takes an already validated configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use oel3d::descriptors::{compute_feature_set, compute_good, DescriptorRecord};
use oel3d::evaluation::{
    kfold, metrics, pick_rho, run_context_protocol, run_protocol, Context, ProtocolLog, ProtocolSummary,
};
use oel3d::nbv::{load_poses, rank_views, select_next_view};
use oel3d::pipeline::{fold_runner, prepare_dataset, Agent, ObjectView, RepresentationKind};
use oel3d::pointcloud::load_pcd;
use oel3d::representations::{assign_words, bow_encode, Dictionary};
use oel3d::segmentation::detect_candidates;
use oel3d::synthgen::{default_families, generate_dataset, read_dataset_dir, write_dataset};
use oel3d::PointCloud;

use crate::config::ExperimentConfig;

/// Pretty JSON with object keys in sorted order.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v: Value = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_sorted_json(value)?).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn cmd_gen(cfg: &ExperimentConfig, out_dir: &Path) -> Result<()> {
    let mut families = default_families();
    let half = families.len().div_ceil(2);
    for (i, f) in families.iter_mut().enumerate() {
        f.points = cfg.points;
        f.noise_sigma = cfg.noise;
        f.jitter = cfg.jitter;
        if cfg.context_split {
            f.context = Some(if i < half { Context::A } else { Context::B });
        }
    }
    let data = generate_dataset(&families, cfg.views, cfg.seed)?;
    ensure_dir(out_dir)?;
    write_dataset(out_dir, &data)?;
    eprintln!(
        "wrote {} categories x {} views to {}",
        data.categories.len(),
        cfg.views,
        out_dir.display()
    );
    Ok(())
}

fn load_dictionary(path: Option<&Path>) -> Result<Dictionary> {
    let path = path.ok_or_else(|| anyhow!("this representation needs --dictionary (written by `cv`)"))?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Descriptor record of one object view.
pub fn cmd_describe(cfg: &ExperimentConfig, input: &Path, dictionary: Option<&Path>) -> Result<String> {
    let cloud = load_pcd(input).with_context(|| format!("loading {}", input.display()))?;
    if cloud.is_empty() {
        bail!("{} holds no points", input.display());
    }
    let p = cfg.pipeline();
    let record = match cfg.representation {
        RepresentationKind::Good => DescriptorRecord::good(&compute_good(&cloud, cfg.n)?),
        RepresentationKind::Spinset => DescriptorRecord::spinset(&compute_feature_set(&cloud, &p.spin)?, &p.spin),
        RepresentationKind::Bow => {
            let dict = load_dictionary(dictionary)?;
            let h = bow_encode(&compute_feature_set(&cloud, &p.spin)?, &dict)?;
            DescriptorRecord {
                kind: "bow".into(),
                params: BTreeMap::from([("ds".to_string(), dict.len().into())]),
                values: h.counts.into(),
            }
        }
        RepresentationKind::Lda | RepresentationKind::LocalLda => {
            // topic proportions need a trained model; emit the word document
            let dict = load_dictionary(dictionary)?;
            let words = assign_words(&compute_feature_set(&cloud, &p.spin)?.vectors(), &dict)?;
            DescriptorRecord {
                kind: "words".into(),
                params: BTreeMap::from([("ds".to_string(), dict.len().into())]),
                values: words.into(),
            }
        }
    };
    to_sorted_json(&record)
}

/// Loads every view of a dataset directory, in parallel.
pub fn load_dataset(root: &Path) -> Result<(Vec<(String, Vec<PointCloud>)>, Option<BTreeMap<String, Context>>)> {
    let dir = read_dataset_dir(root).with_context(|| format!("reading dataset {}", root.display()))?;
    let categories = dir
        .categories
        .iter()
        .map(|(label, paths)| {
            let views = paths
                .par_iter()
                .map(|p: &PathBuf| load_pcd(p).with_context(|| format!("loading {}", p.display())))
                .collect::<Result<Vec<_>>>()?;
            Ok((label.clone(), views))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((categories, dir.contexts))
}

pub fn cmd_cv(cfg: &ExperimentConfig, dataset: &Path, out_dir: &Path) -> Result<Value> {
    let (clouds, _) = load_dataset(dataset)?;
    let p = cfg.pipeline();
    let (views, dict) = prepare_dataset(&clouds, &p)?;
    let cm = kfold(&views, cfg.folds, cfg.seed, fold_runner(p))?;
    let m = metrics(&cm)?;
    ensure_dir(out_dir)?;
    let mut out = serde_json::to_value(&m)?;
    out["folds"] = cfg.folds.into();
    out["representation"] = cfg.representation.name().into();
    out["learner"] = cfg.learner.to_string().into();
    out["seed"] = cfg.seed.into();
    write_json(&out_dir.join("metrics.json"), &out)?;
    write_text(&out_dir.join("confusion.csv"), &cm.to_csv()?)?;
    if let Some(d) = dict {
        write_json(&out_dir.join("dictionary.json"), &d)?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReplicationSummary {
    replication: usize,
    seed: u64,
    rho: Option<usize>,
    #[serde(flatten)]
    summary: ProtocolSummary,
}

fn one_replication(
    cfg: &ExperimentConfig,
    views: &[(String, Vec<ObjectView>)],
    contexts: Option<&BTreeMap<String, Context>>,
    seed: u64,
) -> Result<(ProtocolLog, ProtocolSummary)> {
    let mut p = cfg.pipeline();
    p.seed = seed;
    let mut params = cfg.protocol();
    params.seed = seed;
    let Some(contexts) = contexts else {
        return Ok(run_protocol(views, &mut Agent::new(p)?, params)?);
    };
    let rho = if cfg.rho >= 0 {
        cfg.rho as usize
    } else {
        // ALC of a plain run restricted to context A
        let a: Vec<(String, Vec<ObjectView>)> =
            views.iter().filter(|(l, _)| contexts.get(l) == Some(&Context::A)).cloned().collect();
        if a.is_empty() {
            bail!("no category is assigned to context A");
        }
        let (_, prior) = run_protocol(&a, &mut Agent::new(p.clone())?, params)?;
        pick_rho(prior.nlc as f64, seed)?
    };
    Ok(run_context_protocol(views, contexts, &mut Agent::new(p)?, rho, params)?)
}

pub fn cmd_protocol(cfg: &ExperimentConfig, dataset: &Path, context_change: bool, out_dir: &Path) -> Result<Value> {
    let (clouds, contexts) = load_dataset(dataset)?;
    if context_change && contexts.is_none() {
        bail!("--context-change needs a dataset whose manifest assigns contexts (gen with context_split = true)");
    }
    let contexts = if context_change { contexts } else { None };
    let (views, _) = prepare_dataset(&clouds, &cfg.pipeline())?;
    let runs: Vec<(ProtocolLog, ProtocolSummary)> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| one_replication(cfg, &views, contexts.as_ref(), cfg.seed + r as u64))
        .collect::<Result<_>>()?;
    ensure_dir(out_dir)?;
    let mut rows = Vec::new();
    for (r, (log, summary)) in runs.iter().enumerate() {
        let mut lines = String::new();
        for e in &log.events {
            lines.push_str(&serde_json::to_string(&serde_json::to_value(e)?)?);
            lines.push('\n');
        }
        write_text(&out_dir.join(format!("protocol_{r:03}.jsonl")), &lines)?;
        write_json(&out_dir.join(format!("protocol_{r:03}.json")), log)?;
        rows.push(ReplicationSummary {
            replication: r,
            seed: cfg.seed + r as u64,
            rho: log.rho,
            summary: summary.clone(),
        });
    }
    let summaries: Vec<ProtocolSummary> = runs.into_iter().map(|(_, s)| s).collect();
    write_text(&out_dir.join("summary.csv"), &ProtocolSummary::to_csv(&summaries)?)?;
    let out = serde_json::to_value(&rows)?;
    write_json(&out_dir.join("summary.json"), &out)?;
    Ok(out)
}

pub fn cmd_nbv(cfg: &ExperimentConfig, world_path: &Path, poses_path: &Path, out_dir: &Path) -> Result<Value> {
    let world = load_pcd(world_path).with_context(|| format!("loading {}", world_path.display()))?;
    let poses = load_poses(poses_path).with_context(|| format!("loading {}", poses_path.display()))?;
    let current = *poses
        .get(cfg.current_view)
        .ok_or_else(|| anyhow!("current_view {} but only {} poses", cfg.current_view, poses.len()))?;
    let (_, candidates) = detect_candidates(&world, &cfg.detection()).context("segmenting the world cloud")?;
    let mut labels = vec![None; world.len()];
    for (k, c) in candidates.iter().enumerate() {
        for &i in &c.scene_indices {
            labels[i] = Some(k);
        }
    }
    let ranked = rank_views(&world, &labels, &poses, &current, cfg.sigma_nbv, &cfg.render())?;
    let weighted: Vec<_> = ranked.iter().map(|r| (r.pose, r.weighted_entropy)).collect();
    let chosen = select_next_view(&weighted, cfg.seed)?;
    let selected = ranked.iter().find(|r| r.pose == chosen).map(|r| r.index);
    let out = json!({
        "current": cfg.current_view,
        "objects": candidates.len(),
        "ranked": ranked,
        "selected": selected,
        "seed": cfg.seed,
        "sigma": cfg.sigma_nbv,
    });
    ensure_dir(out_dir)?;
    write_json(&out_dir.join("nbv.json"), &out)?;
    Ok(out)
}
