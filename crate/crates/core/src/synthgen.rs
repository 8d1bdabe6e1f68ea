//! Deterministic synthetic objects, labeled datasets and table-top scenes.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::Context;
use crate::pointcloud::{save_pcd, Point3, PointCloud, Vector3};

pub const MIN_POINTS: usize = 50;
pub const DEFAULT_JITTER: f64 = 0.15;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Box,
    Cylinder,
    Sphere,
    Cone,
    Plate,
}

impl ShapeKind {
    /// Number of meaningful entries in `ShapeSpec::dimensions`.
    pub fn dimension_count(self) -> usize {
        match self {
            ShapeKind::Box | ShapeKind::Plate => 3,
            ShapeKind::Cylinder | ShapeKind::Cone => 2,
            ShapeKind::Sphere => 1,
        }
    }
}

/// One primitive view.
///
/// Dimensions (meters): box and plate `[x, y, z]` full edge lengths;
/// cylinder and cone `[radius, height]`; sphere `[radius]`. Unused
/// entries are ignored. Shapes are centered on the origin of their pose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub dimensions: [f64; 3],
    pub points: usize,
    pub noise_sigma: f64,
    pub pose: Isometry3<f64>,
    /// Keep only surface points facing this sensor position (world frame).
    pub visible_from: Option<[f64; 3]>,
    pub seed: u64,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, dimensions: [f64; 3], points: usize) -> Self {
        ShapeSpec {
            kind,
            dimensions,
            points,
            noise_sigma: 0.0,
            pose: Isometry3::identity(),
            visible_from: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let used = &self.dimensions[..self.kind.dimension_count()];
        if used.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "{:?} dimensions must be positive, got {:?}",
                self.kind, used
            )));
        }
        if self.points < MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "a view needs at least {MIN_POINTS} points, got {}",
                self.points
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise sigma must be >= 0, got {}", self.noise_sigma)));
        }
        Ok(())
    }
}

/// Area-uniform surface sample with its outward normal, in the shape frame.
fn sample_surface<R: Rng>(kind: ShapeKind, d: &[f64; 3], rng: &mut R) -> (Vector3, Vector3) {
    match kind {
        ShapeKind::Box | ShapeKind::Plate => {
            let h = [d[0] / 2.0, d[1] / 2.0, d[2] / 2.0];
            let areas = [d[1] * d[2], d[0] * d[2], d[0] * d[1]];
            let total = 2.0 * areas.iter().sum::<f64>();
            let mut u = rng.random_range(0.0..total);
            let mut face = 0;
            while face < 2 && u >= 2.0 * areas[face] {
                u -= 2.0 * areas[face];
                face += 1;
            }
            let sign = if u < areas[face] { 1.0 } else { -1.0 };
            let mut p = Vector3::zeros();
            let mut n = Vector3::zeros();
            for axis in 0..3 {
                if axis == face {
                    p[axis] = sign * h[axis];
                    n[axis] = sign;
                } else {
                    p[axis] = rng.random_range(-h[axis]..=h[axis]);
                }
            }
            (p, n)
        }
        ShapeKind::Sphere => {
            let v = Vector3::from_fn(|_, _| StandardNormal.sample(rng)).normalize();
            (v * d[0], v)
        }
        ShapeKind::Cylinder => {
            let (r, h) = (d[0], d[1]);
            let side = 2.0 * PI * r * h;
            let cap = PI * r * r;
            let u = rng.random_range(0.0..side + 2.0 * cap);
            let t = rng.random_range(0.0..2.0 * PI);
            if u < side {
                let z = rng.random_range(-h / 2.0..=h / 2.0);
                (Vector3::new(r * t.cos(), r * t.sin(), z), Vector3::new(t.cos(), t.sin(), 0.0))
            } else {
                let s = if u < side + cap { 1.0 } else { -1.0 };
                let rr = r * rng.random_range(0.0..1.0f64).sqrt();
                (Vector3::new(rr * t.cos(), rr * t.sin(), s * h / 2.0), Vector3::new(0.0, 0.0, s))
            }
        }
        ShapeKind::Cone => {
            // apex at +h/2, base disk at -h/2
            let (r, h) = (d[0], d[1]);
            let slant = (r * r + h * h).sqrt();
            let side = PI * r * slant;
            let base = PI * r * r;
            let t = rng.random_range(0.0..2.0 * PI);
            if rng.random_range(0.0..side + base) < side {
                let s = rng.random_range(0.0..1.0f64).sqrt();
                let p = Vector3::new(s * r * t.cos(), s * r * t.sin(), h / 2.0 - s * h);
                let n = Vector3::new(h * t.cos(), h * t.sin(), r) / slant;
                (p, n)
            } else {
                let rr = r * rng.random_range(0.0..1.0f64).sqrt();
                (Vector3::new(rr * t.cos(), rr * t.sin(), -h / 2.0), Vector3::new(0.0, 0.0, -1.0))
            }
        }
    }
}

/// Surface-sampled, posed and noised view; identical for identical specs.
///
/// With `visible_from`, back-facing samples are rejected until `points`
/// remain (at most `100 * points` draws).
pub fn generate_view(spec: &ShapeSpec) -> Result<PointCloud> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let eye = spec.visible_from.map(|e| Point3::new(e[0], e[1], e[2]));
    let mut pts = Vec::with_capacity(spec.points);
    let mut draws = 0usize;
    while pts.len() < spec.points {
        draws += 1;
        if draws > 100 * spec.points {
            return Err(Error::InvalidParameter("sensor sees too little of the shape".into()));
        }
        let (p, n) = sample_surface(spec.kind, &spec.dimensions, &mut rng);
        let p = spec.pose * Point3::from(p);
        if let Some(eye) = eye {
            if (spec.pose.rotation * n).dot(&(eye - p)) <= 0.0 {
                continue;
            }
        }
        pts.push(p);
    }
    if spec.noise_sigma > 0.0 {
        for p in &mut pts {
            for k in 0..3 {
                p[k] += noise.sample(&mut rng);
            }
        }
    }
    Ok(PointCloud::new(pts))
}

/// A category of views drawn from one primitive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeFamily {
    pub name: String,
    pub kind: ShapeKind,
    pub dimensions: [f64; 3],
    pub points: usize,
    pub noise_sigma: f64,
    /// Relative dimension jitter, each dimension scaled by `U(1 - j, 1 + j)`.
    pub jitter: f64,
    pub visible_from: Option<[f64; 3]>,
    pub context: Option<Context>,
}

impl ShapeFamily {
    pub fn new(name: &str, kind: ShapeKind, dimensions: [f64; 3]) -> Self {
        ShapeFamily {
            name: name.to_string(),
            kind,
            dimensions,
            points: 500,
            noise_sigma: 0.002,
            jitter: DEFAULT_JITTER,
            visible_from: None,
            context: None,
        }
    }
}

/// Five desk-scale primitives, one per kind.
pub fn default_families() -> Vec<ShapeFamily> {
    vec![
        ShapeFamily::new("box", ShapeKind::Box, [0.12, 0.08, 0.05]),
        ShapeFamily::new("cylinder", ShapeKind::Cylinder, [0.035, 0.12, 0.0]),
        ShapeFamily::new("sphere", ShapeKind::Sphere, [0.04, 0.0, 0.0]),
        ShapeFamily::new("cone", ShapeKind::Cone, [0.045, 0.10, 0.0]),
        ShapeFamily::new("plate", ShapeKind::Plate, [0.16, 0.10, 0.01]),
    ]
}

/// Uniformly random rotation.
pub fn random_rotation<R: Rng>(rng: &mut R) -> UnitQuaternion<f64> {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub views_per_category: usize,
    pub families: Vec<ShapeFamily>,
    /// Specs of every generated view, per category.
    pub specs: BTreeMap<String, Vec<ShapeSpec>>,
    pub contexts: Option<BTreeMap<String, Context>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedDataset {
    /// Views per category, in family order.
    pub categories: Vec<(String, Vec<PointCloud>)>,
    pub manifest: Manifest,
}

/// Views per family with random pose near (0, 0, 1) and jittered dimensions.
pub fn generate_dataset(families: &[ShapeFamily], views_per_category: usize, seed: u64) -> Result<GeneratedDataset> {
    if families.is_empty() || views_per_category == 0 {
        return Err(Error::InvalidParameter("need at least one family and one view".into()));
    }
    let mut names = std::collections::HashSet::new();
    for f in families {
        if f.name.is_empty() || f.name.contains(['/', '\\']) || !names.insert(&f.name) {
            return Err(Error::InvalidParameter(format!("invalid or duplicate category name '{}'", f.name)));
        }
        if !(0.0..1.0).contains(&f.jitter) {
            return Err(Error::InvalidParameter(format!("jitter must be in [0, 1), got {}", f.jitter)));
        }
    }
    let has_ctx = families.iter().filter(|f| f.context.is_some()).count();
    if has_ctx != 0 && has_ctx != families.len() {
        return Err(Error::InvalidParameter("either every family has a context or none has".into()));
    }

    let mut specs = BTreeMap::new();
    let mut categories = Vec::with_capacity(families.len());
    for (ci, f) in families.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ci as u64);
        let view_specs: Vec<ShapeSpec> = (0..views_per_category)
            .map(|_| {
                let mut dims = f.dimensions;
                for d in dims.iter_mut().take(f.kind.dimension_count()) {
                    *d *= 1.0 + rng.random_range(-f.jitter..=f.jitter);
                }
                let t = Vector3::new(
                    rng.random_range(-0.05..=0.05),
                    rng.random_range(-0.05..=0.05),
                    1.0 + rng.random_range(-0.05..=0.05),
                );
                ShapeSpec {
                    kind: f.kind,
                    dimensions: dims,
                    points: f.points,
                    noise_sigma: f.noise_sigma,
                    pose: Isometry3::from_parts(Translation3::from(t), random_rotation(&mut rng)),
                    visible_from: f.visible_from,
                    seed: rng.random(),
                }
            })
            .collect();
        let views = view_specs.par_iter().map(generate_view).collect::<Result<Vec<_>>>()?;
        categories.push((f.name.clone(), views));
        specs.insert(f.name.clone(), view_specs);
    }
    let contexts = (has_ctx > 0).then(|| {
        families
            .iter()
            .map(|f| (f.name.clone(), f.context.expect("checked")))
            .collect()
    });
    Ok(GeneratedDataset {
        categories,
        manifest: Manifest {
            seed,
            views_per_category,
            families: families.to_vec(),
            specs,
            contexts,
        },
    })
}

pub fn view_file_name(i: usize) -> String {
    format!("view_{i:04}.pcd")
}

/// Writes `<root>/<category>/view_####.pcd` and `<root>/manifest.json`.
pub fn write_dataset(root: impl AsRef<Path>, data: &GeneratedDataset) -> Result<()> {
    let root = root.as_ref();
    for (name, views) in &data.categories {
        let dir = root.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for (i, v) in views.iter().enumerate() {
            save_pcd(dir.join(view_file_name(i)), v)?;
        }
    }
    let path = root.join(MANIFEST_FILE);
    // Value maps are ordered, so keys come out sorted
    let json = serde_json::to_string_pretty(&serde_json::to_value(&data.manifest)?)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

/// Dataset directory: category subdirectories of `.pcd` files.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetDir {
    /// Categories and view paths, both sorted by name.
    pub categories: Vec<(String, Vec<PathBuf>)>,
    pub contexts: Option<BTreeMap<String, Context>>,
}

/// Scans a dataset directory; contexts come from the manifest when present.
pub fn read_dataset_dir(root: impl AsRef<Path>) -> Result<DatasetDir> {
    let root = root.as_ref();
    let read = |p: &Path| -> Result<Vec<std::fs::DirEntry>> {
        let mut v = std::fs::read_dir(p)
            .map_err(|e| Error::io(p, e))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(p, e))?;
        v.sort_by_key(|e| e.file_name());
        Ok(v)
    };
    let mut categories = Vec::new();
    for entry in read(root)? {
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let views: Vec<PathBuf> = read(&path)?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "pcd"))
            .collect();
        if !views.is_empty() {
            categories.push((entry.file_name().to_string_lossy().into_owned(), views));
        }
    }
    if categories.is_empty() {
        return Err(Error::InvalidInput(format!("no category directories with .pcd files in {}", root.display())));
    }
    let manifest_path = root.join(MANIFEST_FILE);
    let contexts = if manifest_path.exists() {
        let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let m: serde_json::Value = serde_json::from_str(&text)?;
        match m.get("contexts") {
            Some(c) if !c.is_null() => Some(serde_json::from_value(c.clone())?),
            _ => None,
        }
    } else {
        None
    };
    Ok(DatasetDir { categories, contexts })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSpec {
    /// Full extents along x and y, centered on the origin.
    pub size: [f64; 2],
    pub height: f64,
    pub spacing: f64,
    pub noise_sigma: f64,
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec {
            size: [1.2, 0.8],
            height: 0.7,
            spacing: 0.01,
            noise_sigma: 0.002,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneLabel {
    Table,
    /// Index into the object list.
    Object(usize),
    Outlier,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub cloud: PointCloud,
    /// Provenance of every point.
    pub labels: Vec<SceneLabel>,
}

/// Table plane, objects and uniformly scattered outliers.
///
/// Each object keeps its pose in x, y and orientation; it is lifted so its
/// lowest point sits `lift` above the table top. Outliers fill the box
/// spanning the table and 0.5 m above it.
pub fn generate_scene(objects: &[ShapeSpec], table: &TableSpec, outliers: usize, lift: f64, seed: u64) -> Result<Scene> {
    if !(table.size[0] > 0.0 && table.size[1] > 0.0 && table.spacing > 0.0 && table.noise_sigma >= 0.0) {
        return Err(Error::InvalidParameter("table size and spacing must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, table.noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut pts = Vec::new();
    let mut labels = Vec::new();
    let nx = (table.size[0] / table.spacing).round() as usize;
    let ny = (table.size[1] / table.spacing).round() as usize;
    for i in 0..=nx {
        for j in 0..=ny {
            pts.push(Point3::new(
                i as f64 * table.spacing - table.size[0] / 2.0,
                j as f64 * table.spacing - table.size[1] / 2.0,
                table.height + noise.sample(&mut rng),
            ));
            labels.push(SceneLabel::Table);
        }
    }
    for (k, spec) in objects.iter().enumerate() {
        let view = generate_view(spec)?;
        let min_z = view.points().iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        let dz = table.height + lift - min_z;
        pts.extend(view.points().iter().map(|p| p + Vector3::new(0.0, 0.0, dz)));
        labels.extend(std::iter::repeat_n(SceneLabel::Object(k), view.len()));
    }
    for _ in 0..outliers {
        pts.push(Point3::new(
            rng.random_range(-table.size[0] / 2.0..=table.size[0] / 2.0),
            rng.random_range(-table.size[1] / 2.0..=table.size[1] / 2.0),
            table.height + rng.random_range(0.0..=0.5),
        ));
        labels.push(SceneLabel::Outlier);
    }
    Ok(Scene {
        cloud: PointCloud::new(pts),
        labels,
    })
}
