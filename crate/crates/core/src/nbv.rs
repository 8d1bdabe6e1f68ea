//! Viewpoint entropy, virtual rendering from candidate poses and
//! probabilistic next-best-view selection.

use std::path::Path;

use nalgebra::Matrix3;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud, Vector3};

pub const DEFAULT_RESOLUTION: usize = 128;
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Camera-to-world rigid transform. The camera looks along its local +z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    rotation: Matrix3<f64>,
    translation: Vector3,
}

#[derive(Serialize, Deserialize)]
struct PoseJson {
    rotation: [f64; 9],
    translation: [f64; 3],
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if !(err <= 1e-9 && (det - 1.0).abs() <= 1e-9) || !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "camera rotation must be orthonormal with det +1 (orthonormality error {err:e}, det {det})"
            )));
        }
        Ok(CameraPose { rotation, translation })
    }

    /// Camera at `eye` looking at `target`; `up` fixes the roll.
    pub fn look_at(eye: Point3, target: Point3, up: Vector3) -> Result<Self> {
        let z = target - eye;
        let x = up.cross(&z);
        if z.norm() < 1e-12 || x.norm() < 1e-12 * z.norm() {
            return Err(Error::InvalidParameter("look_at: eye equals target or up is parallel to the view".into()));
        }
        let z = z.normalize();
        let x = x.normalize();
        let y = z.cross(&x);
        CameraPose::new(Matrix3::from_columns(&[x, y, z]), eye.coords)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3 {
        &self.translation
    }

    pub fn world_to_camera(&self, p: &Point3) -> Point3 {
        Point3::from(self.rotation.transpose() * (p.coords - self.translation))
    }
}

impl Serialize for CameraPose {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let r = &self.rotation;
        PoseJson {
            rotation: [
                r[(0, 0)], r[(0, 1)], r[(0, 2)],
                r[(1, 0)], r[(1, 1)], r[(1, 2)],
                r[(2, 0)], r[(2, 1)], r[(2, 2)],
            ],
            translation: [self.translation.x, self.translation.y, self.translation.z],
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CameraPose {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = PoseJson::deserialize(d)?;
        let r = Matrix3::from_row_slice(&j.rotation);
        CameraPose::new(r, Vector3::from(j.translation)).map_err(serde::de::Error::custom)
    }
}

/// Parses a JSON list of `{rotation: [9, row-major], translation: [3]}`.
pub fn poses_from_json(text: &str) -> Result<Vec<CameraPose>> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_poses(path: impl AsRef<Path>) -> Result<Vec<CameraPose>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    poses_from_json(&text)
}

/// Segmented view: one cloud per object cluster and the total visible area.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedScene {
    clusters: Vec<PointCloud>,
    total_area: f64,
}

impl SegmentedScene {
    pub fn new(clusters: Vec<PointCloud>, total_area: f64) -> Result<Self> {
        let sum: usize = clusters.iter().map(PointCloud::len).sum();
        if !(total_area > 0.0 && total_area >= sum as f64) {
            return Err(Error::InvalidParameter(format!(
                "total area {total_area} must be positive and at least the cluster sum {sum}"
            )));
        }
        Ok(SegmentedScene { clusters, total_area })
    }

    /// Total area equal to the sum of cluster areas.
    pub fn from_clusters(clusters: Vec<PointCloud>) -> Result<Self> {
        let sum: usize = clusters.iter().map(PointCloud::len).sum();
        Self::new(clusters, sum as f64)
    }

    pub fn clusters(&self) -> &[PointCloud] {
        &self.clusters
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Cluster area is its visible point count.
    pub fn areas(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.len() as f64).collect()
    }
}

/// `H = -sum (A_i/S) ln(A_i/S)`.
pub fn viewpoint_entropy(scene: &SegmentedScene) -> Result<f64> {
    entropy_of_areas(&scene.areas(), scene.total_area)
}

fn entropy_of_areas(areas: &[f64], total: f64) -> Result<f64> {
    if areas.is_empty() {
        return Err(Error::InvalidInput("viewpoint entropy needs at least one cluster".into()));
    }
    if let Some(a) = areas.iter().find(|&&a| !(a > 0.0)) {
        return Err(Error::InvalidInput(format!("cluster area must be positive, got {a}")));
    }
    Ok(-areas
        .iter()
        .map(|&a| {
            let p = a / total;
            p * p.ln()
        })
        .sum::<f64>())
}

/// Orthographic image window in camera coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderParams {
    pub resolution: usize,
    /// Fixed window; `None` fits the visible points plus `margin` per side.
    pub extent: Option<Extent>,
    pub margin: f64,
}

impl Default for RenderParams {
    fn default() -> Self {
        RenderParams {
            resolution: DEFAULT_RESOLUTION,
            extent: None,
            margin: DEFAULT_MARGIN,
        }
    }
}

/// Indices (ascending) of world points that win the depth test from `pose`.
pub fn render_indices(world: &PointCloud, pose: &CameraPose, params: &RenderParams) -> Result<Vec<usize>> {
    if params.resolution == 0 {
        return Err(Error::InvalidParameter("render resolution must be >= 1".into()));
    }
    let cam: Vec<(usize, Point3)> = world
        .points()
        .iter()
        .enumerate()
        .map(|(i, p)| (i, pose.world_to_camera(p)))
        .filter(|(_, p)| p.z > 0.0)
        .collect();
    if cam.is_empty() {
        return Ok(Vec::new());
    }
    let ext = match params.extent {
        Some(e) => e,
        None => {
            let p0 = cam[0].1;
            let mut e = Extent { min_x: p0.x, max_x: p0.x, min_y: p0.y, max_y: p0.y };
            for (_, p) in &cam {
                e.min_x = e.min_x.min(p.x);
                e.max_x = e.max_x.max(p.x);
                e.min_y = e.min_y.min(p.y);
                e.max_y = e.max_y.max(p.y);
            }
            let mx = ((e.max_x - e.min_x) * params.margin).max(1e-9);
            let my = ((e.max_y - e.min_y) * params.margin).max(1e-9);
            Extent {
                min_x: e.min_x - mx,
                max_x: e.max_x + mx,
                min_y: e.min_y - my,
                max_y: e.max_y + my,
            }
        }
    };
    let res = params.resolution;
    let pixel = |v: f64, lo: f64, hi: f64| -> Option<usize> {
        let t = (v - lo) / (hi - lo);
        if !(0.0..=1.0).contains(&t) {
            return None;
        }
        Some(((t * res as f64) as usize).min(res - 1))
    };
    // (depth, index) of the nearest point per pixel; ties keep the lower index
    let mut zbuf: Vec<Option<(f64, usize)>> = vec![None; res * res];
    for (i, p) in &cam {
        let (Some(u), Some(v)) = (pixel(p.x, ext.min_x, ext.max_x), pixel(p.y, ext.min_y, ext.max_y)) else {
            continue;
        };
        let cell = &mut zbuf[v * res + u];
        if cell.is_none_or(|(d, _)| p.z < d) {
            *cell = Some((p.z, *i));
        }
    }
    let mut out: Vec<usize> = zbuf.into_iter().flatten().map(|(_, i)| i).collect();
    out.sort_unstable();
    Ok(out)
}

/// Visible subset of `world` (in world coordinates, input order).
pub fn render_virtual(world: &PointCloud, pose: &CameraPose, params: &RenderParams) -> Result<PointCloud> {
    Ok(world.select(&render_indices(world, pose, params)?))
}

/// Entropy of the view from `pose`: clusters are the visible points grouped
/// by label, `None` labels (table, clutter) count toward the total area only.
/// A view with no visible cluster has entropy 0.
pub fn view_entropy(
    world: &PointCloud,
    labels: &[Option<usize>],
    pose: &CameraPose,
    params: &RenderParams,
) -> Result<f64> {
    if labels.len() != world.len() {
        return Err(Error::DimensionMismatch {
            expected: world.len(),
            found: labels.len(),
        });
    }
    let visible = render_indices(world, pose, params)?;
    let mut counts = std::collections::BTreeMap::<usize, f64>::new();
    for &i in &visible {
        if let Some(l) = labels[i] {
            *counts.entry(l).or_default() += 1.0;
        }
    }
    if counts.is_empty() {
        return Ok(0.0);
    }
    entropy_of_areas(&counts.into_values().collect::<Vec<_>>(), visible.len() as f64)
}

/// `(1 / (sigma sqrt(2 pi))) exp(-d^2 / (2 sigma^2))`.
pub fn gaussian_weight(distance: f64, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    Ok((-distance * distance / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt()))
}

/// Entropy of candidate `v` weighted by its translation distance to the current view `vc`.
pub fn weighted_entropy(h: f64, v: &CameraPose, vc: &CameraPose, sigma: f64) -> Result<f64> {
    Ok(h * gaussian_weight((v.translation - vc.translation).norm(), sigma)?)
}

/// Normalized selection probabilities.
pub fn selection_probabilities(weights: &[f64]) -> Result<Vec<f64>> {
    if let Some(w) = weights.iter().find(|&&w| !(w >= 0.0 && w.is_finite())) {
        return Err(Error::InvalidInput(format!("selection weights must be finite and >= 0, got {w}")));
    }
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::InvalidInput("selection needs a positive total weight".into()));
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}

/// Samples a candidate index with probability proportional to its weight.
pub fn sample_view_index<R: Rng>(weights: &[f64], rng: &mut R) -> Result<usize> {
    selection_probabilities(weights)?;
    let dist = WeightedIndex::new(weights).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Draws the next view among `(pose, weighted entropy)` candidates.
pub fn select_next_view(candidates: &[(CameraPose, f64)], seed: u64) -> Result<CameraPose> {
    let weights: Vec<f64> = candidates.iter().map(|(_, w)| *w).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(candidates[sample_view_index(&weights, &mut rng)?].0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedView {
    /// Position of the pose in the candidate list.
    pub index: usize,
    pub pose: CameraPose,
    pub entropy: f64,
    pub weighted_entropy: f64,
    pub probability: f64,
}

/// Scores every candidate (in parallel) and sorts by probability, highest
/// first; ties keep candidate order.
pub fn rank_views(
    world: &PointCloud,
    labels: &[Option<usize>],
    candidates: &[CameraPose],
    current: &CameraPose,
    sigma: f64,
    params: &RenderParams,
) -> Result<Vec<RankedView>> {
    if world.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let scored: Vec<(f64, f64)> = candidates
        .par_iter()
        .map(|pose| {
            let h = view_entropy(world, labels, pose, params)?;
            Ok((h, weighted_entropy(h, pose, current, sigma)?))
        })
        .collect::<Result<_>>()?;
    let probs = selection_probabilities(&scored.iter().map(|s| s.1).collect::<Vec<_>>())?;
    let mut ranked: Vec<RankedView> = candidates
        .iter()
        .zip(scored)
        .zip(probs)
        .enumerate()
        .map(|(index, ((pose, (entropy, weighted_entropy)), probability))| RankedView {
            index,
            pose: *pose,
            entropy,
            weighted_entropy,
            probability,
        })
        .collect();
    ranked.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    Ok(ranked)
}
