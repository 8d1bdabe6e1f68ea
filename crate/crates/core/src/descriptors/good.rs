use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::{
    aabb_in_frame, compute_reference_frame, Point3, PointCloud, ReferenceFrame, DEFAULT_SIGN_THRESHOLD,
};

/// Bins per side used when nothing else is configured.
pub const DEFAULT_GOOD_BINS: usize = 15;

/// Small widening of the projection square so that points on the upper
/// bound fall into the last bin.
pub const GOOD_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ProjectionPlane {
    XoZ,
    XoY,
    YoZ,
}

impl ProjectionPlane {
    /// Fixed precedence used to break entropy/variance ties.
    pub const ALL: [ProjectionPlane; 3] = [ProjectionPlane::XoZ, ProjectionPlane::XoY, ProjectionPlane::YoZ];

    /// In-plane coordinates (alpha, beta) of a point given in the object frame.
    pub fn coords(self, p: &Point3) -> (f64, f64) {
        match self {
            ProjectionPlane::XoZ => (p.x, p.z),
            ProjectionPlane::XoY => (p.x, p.y),
            ProjectionPlane::YoZ => (p.y, p.z),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProjectionPlane::XoZ => "XoZ",
            ProjectionPlane::XoY => "XoY",
            ProjectionPlane::YoZ => "YoZ",
        }
    }
}

fn bin_index(v: f64, l: f64, n: usize, eps: f64) -> Result<usize> {
    let half = l / 2.0;
    if !v.is_finite() || v.abs() > half * (1.0 + 1e-9) + 1e-12 {
        return Err(Error::NotEnclosing { value: v, half_side: half });
    }
    let idx = (n as f64 * (v + half) / (l + eps)).floor();
    Ok((idx.max(0.0) as usize).min(n - 1))
}

/// Raw point counts of the orthographic projection, row-major `n x n`
/// (row from alpha, column from beta).
pub fn project_counts(cloud_in_frame: &PointCloud, plane: ProjectionPlane, l: f64, n: usize) -> Result<Vec<u64>> {
    project_counts_with_epsilon(cloud_in_frame, plane, l, n, GOOD_EPSILON)
}

/// [`project_counts`] with an explicit widening `eps` (meters).
pub fn project_counts_with_epsilon(
    cloud_in_frame: &PointCloud,
    plane: ProjectionPlane,
    l: f64,
    n: usize,
    eps: f64,
) -> Result<Vec<u64>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be finite and >= 0, got {eps}")));
    }
    if cloud_in_frame.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if !(l > 0.0) {
        return Err(Error::InvalidParameter(format!("projection side must be > 0, got {l}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins per side, got {n}")));
    }
    let mut counts = vec![0u64; n * n];
    for p in cloud_in_frame.points() {
        let (a, b) = plane.coords(p);
        let r = bin_index(a, l, n, eps)?;
        let c = bin_index(b, l, n, eps)?;
        counts[r * n + c] += 1;
    }
    Ok(counts)
}

/// Normalized projection distribution (total mass 1), row-major `n x n`.
pub fn project_distribution(cloud_in_frame: &PointCloud, plane: ProjectionPlane, l: f64, n: usize) -> Result<Vec<f64>> {
    let counts = project_counts(cloud_in_frame, plane, l, n)?;
    let total = cloud_in_frame.len() as f64;
    Ok(counts.iter().map(|&c| c as f64 / total).collect())
}

fn check_pmf(m: &[f64]) -> Result<()> {
    if m.is_empty() {
        return Err(Error::InvalidInput("empty distribution".into()));
    }
    if let Some(v) = m.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidInput(format!("distribution entry {v} is negative or NaN")));
    }
    Ok(())
}

/// Shannon entropy in bits over every entry, with 0 log 0 = 0.
pub fn projection_entropy(m: &[f64]) -> Result<f64> {
    check_pmf(m)?;
    Ok(-m.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>())
}

/// Variance of the bin index (1-based) under the distribution.
pub fn projection_variance(m: &[f64]) -> Result<f64> {
    check_pmf(m)?;
    let mean: f64 = m.iter().enumerate().map(|(i, &v)| (i + 1) as f64 * v).sum();
    Ok(m
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let d = (i + 1) as f64 - mean;
            d * d * v
        })
        .sum())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoodDescriptor {
    /// Three concatenated, individually normalized `n x n` blocks.
    pub bins: Vec<f64>,
    /// Raw point counts in the same layout as `bins`.
    pub counts: Vec<u64>,
    pub n: usize,
    pub frame: ReferenceFrame,
    pub order: [ProjectionPlane; 3],
}

impl GoodDescriptor {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let b = self.n * self.n;
        &self.bins[i * b..(i + 1) * b]
    }
}

pub fn compute_good(cloud: &PointCloud, n: usize) -> Result<GoodDescriptor> {
    compute_good_with_threshold(cloud, n, DEFAULT_SIGN_THRESHOLD)
}

/// GOOD with an explicit sign-disambiguation threshold `t` (meters).
pub fn compute_good_with_threshold(cloud: &PointCloud, n: usize, t: f64) -> Result<GoodDescriptor> {
    compute_good_with(cloud, n, t, GOOD_EPSILON)
}

/// GOOD with both length constants explicit: the sign dead band `t` and the
/// bin widening `eps`. Scaling the cloud and both constants by the same
/// factor leaves the descriptor unchanged.
pub fn compute_good_with(cloud: &PointCloud, n: usize, t: f64, eps: f64) -> Result<GoodDescriptor> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 bins per side, got {n}")));
    }
    let frame = compute_reference_frame(cloud, t)?;
    let bbox = aabb_in_frame(cloud, &frame)?;
    let l = bbox.largest_edge();
    let mid = bbox.center();
    let local: PointCloud = cloud
        .points()
        .iter()
        .map(|p| frame.to_local(p) - mid.coords)
        .collect();

    let mut blocks = Vec::with_capacity(3);
    for plane in ProjectionPlane::ALL {
        let counts = project_counts_with_epsilon(&local, plane, l, n, eps)?;
        let total = local.len() as f64;
        let pmf: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
        let entropy = projection_entropy(&pmf)?;
        let variance = projection_variance(&pmf)?;
        blocks.push((plane, counts, pmf, entropy, variance));
    }

    let first = (0..3)
        .reduce(|best, i| if blocks[i].3 > blocks[best].3 + 1e-9 { i } else { best })
        .unwrap_or(0);
    let mut rest: Vec<usize> = (0..3).filter(|&i| i != first).collect();
    if blocks[rest[1]].4 < blocks[rest[0]].4 - 1e-9 {
        rest.swap(0, 1);
    }
    let order_idx = [first, rest[0], rest[1]];

    let mut bins = Vec::with_capacity(3 * n * n);
    let mut counts = Vec::with_capacity(3 * n * n);
    for &i in &order_idx {
        bins.extend_from_slice(&blocks[i].2);
        counts.extend_from_slice(&blocks[i].1);
    }
    Ok(GoodDescriptor {
        bins,
        counts,
        n,
        frame,
        order: order_idx.map(|i| blocks[i].0),
    })
}
