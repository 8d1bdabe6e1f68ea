use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::{sorted_eigen, voxel_buckets, BoundingBox, GridIndex, Point3, PointCloud, Vector3};

/// Neighbors used for per-point normal estimation.
pub const NORMAL_NEIGHBORS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinParams {
    /// Keypoint voxel size (meters).
    pub voxel: f64,
    /// Image width IW; histograms have IW+1 rows and 2*IW+1 columns.
    pub image_width: usize,
    /// Support length SL (meters).
    pub support_length: f64,
    /// Support angle A (degrees).
    pub support_angle: f64,
}

impl Default for SpinParams {
    fn default() -> Self {
        SpinParams {
            voxel: 0.01,
            image_width: 4,
            support_length: 0.05,
            support_angle: 90.0,
        }
    }
}

impl SpinParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel > 0.0) {
            return Err(Error::InvalidParameter(format!("voxel must be > 0, got {}", self.voxel)));
        }
        if self.image_width == 0 {
            return Err(Error::InvalidParameter("image width must be >= 1".into()));
        }
        if !(self.support_length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "support length must be > 0, got {}",
                self.support_length
            )));
        }
        if !(0.0..=180.0).contains(&self.support_angle) {
            return Err(Error::InvalidParameter(format!(
                "support angle must be in [0, 180] degrees, got {}",
                self.support_angle
            )));
        }
        Ok(())
    }

    /// Length of a flattened histogram.
    pub fn histogram_len(&self) -> usize {
        (self.image_width + 1) * (2 * self.image_width + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinImage {
    /// Row-major raw counts, `rows x cols`.
    pub histogram: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub keypoint: Point3,
    pub normal: Vector3,
}

impl SpinImage {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.histogram[row * self.cols + col]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub spin_images: Vec<SpinImage>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.spin_images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spin_images.is_empty()
    }

    /// Flattened histograms, one per feature.
    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.spin_images.iter().map(|s| s.histogram.clone()).collect()
    }
}

/// Radial and elevation coordinates of `x` about the oriented point (p, n).
pub fn spin_coordinates(p: &Point3, n: &Vector3, x: &Point3) -> (f64, f64) {
    let d = x - p;
    let beta = n.dot(&d);
    let alpha = (d.norm_squared() - beta * beta).max(0.0).sqrt();
    (alpha, beta)
}

fn grid_cell(points: &[Point3]) -> f64 {
    let edge = BoundingBox::from_points(points).map(|b| b.largest_edge()).unwrap_or(0.0);
    let cell = edge / (points.len() as f64).cbrt().max(1.0);
    if cell > 0.0 {
        cell
    } else {
        1.0
    }
}

/// Per-point normals from PCA over the `k` nearest neighbors (the point
/// included), oriented toward `viewpoint`.
pub fn estimate_normals_from(cloud: &PointCloud, k: usize, viewpoint: &Point3) -> Vec<Vector3> {
    let pts = cloud.points();
    let grid = GridIndex::new(pts, grid_cell(pts));
    pts.iter()
        .map(|p| {
            let nb = grid.nearest(p, k.max(3));
            let mut n = if nb.len() >= 3 {
                let sel: Vec<Point3> = nb.iter().map(|&i| pts[i]).collect();
                let c = Point3::from(sel.iter().fold(Vector3::zeros(), |a, q| a + q.coords) / sel.len() as f64);
                let cov = crate::pointcloud::covariance(&sel, &c);
                sorted_eigen(&cov)[2].1.normalize()
            } else {
                Vector3::zeros()
            };
            if !n.iter().all(|v| v.is_finite()) || n.norm() < 0.5 {
                n = (viewpoint - p).try_normalize(1e-12).unwrap_or_else(Vector3::z);
            }
            if n.dot(&(viewpoint - p)) < 0.0 {
                n = -n;
            }
            n
        })
        .collect()
}

/// Normals oriented toward the sensor at the origin.
pub fn estimate_normals(cloud: &PointCloud) -> Vec<Vector3> {
    estimate_normals_from(cloud, NORMAL_NEIGHBORS, &Point3::origin())
}

/// Indices of keypoints: for each occupied voxel, the point nearest the voxel
/// center (ties to the lowest index). Voxels are listed in first-occurrence order.
pub fn keypoint_indices(cloud: &PointCloud, voxel: f64) -> Result<Vec<usize>> {
    if !(voxel > 0.0) {
        return Err(Error::InvalidParameter(format!("voxel size must be > 0, got {voxel}")));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (anchor, buckets) = voxel_buckets(cloud, voxel);
    Ok(buckets
        .iter()
        .map(|(key, members)| {
            let center = Point3::new(
                anchor.x + (key.0 as f64 + 0.5) * voxel,
                anchor.y + (key.1 as f64 + 0.5) * voxel,
                anchor.z + (key.2 as f64 + 0.5) * voxel,
            );
            let mut best = members[0];
            let mut best_d = (cloud.points()[best] - center).norm_squared();
            for &i in &members[1..] {
                let d = (cloud.points()[i] - center).norm_squared();
                if d < best_d {
                    best = i;
                    best_d = d;
                }
            }
            best
        })
        .collect())
}

pub fn extract_keypoints(cloud: &PointCloud, voxel: f64) -> Result<Vec<Point3>> {
    Ok(keypoint_indices(cloud, voxel)?
        .into_iter()
        .map(|i| cloud.points()[i])
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn accumulate(
    hist: &mut [f64],
    iw: usize,
    sl: f64,
    cos_a: f64,
    p: &Point3,
    n: &Vector3,
    x: &Point3,
    nx: &Vector3,
) {
    if nx.dot(n) < cos_a - 1e-12 {
        return;
    }
    let (alpha, beta) = spin_coordinates(p, n, x);
    if alpha > sl || beta.abs() > sl {
        return;
    }
    let row = ((alpha * iw as f64 / sl).floor().max(0.0) as usize).min(iw);
    let col = (((beta + sl) * iw as f64 / sl).floor().max(0.0) as usize).min(2 * iw);
    hist[row * (2 * iw + 1) + col] += 1.0;
}

/// Spin image at `keypoint` with surface normal `normal`.
///
/// `normals[i]` is the surface normal of `cloud.points()[i]`; neighbors whose
/// normal deviates from `normal` by more than `support_angle` are ignored.
pub fn compute_spin_image(
    cloud: &PointCloud,
    normals: &[Vector3],
    keypoint: &Point3,
    normal: &Vector3,
    params: &SpinParams,
) -> Result<SpinImage> {
    params.validate()?;
    if normals.len() != cloud.len() {
        return Err(Error::DimensionMismatch {
            expected: cloud.len(),
            found: normals.len(),
        });
    }
    let iw = params.image_width;
    let sl = params.support_length;
    let cos_a = params.support_angle.to_radians().cos();
    let mut histogram = vec![0.0; params.histogram_len()];
    for (x, nx) in cloud.points().iter().zip(normals) {
        accumulate(&mut histogram, iw, sl, cos_a, keypoint, normal, x, nx);
    }
    Ok(SpinImage {
        histogram,
        rows: iw + 1,
        cols: 2 * iw + 1,
        keypoint: *keypoint,
        normal: *normal,
    })
}

/// One spin image per voxel keypoint.
pub fn compute_feature_set(cloud: &PointCloud, params: &SpinParams) -> Result<FeatureSet> {
    params.validate()?;
    let keys = keypoint_indices(cloud, params.voxel)?;
    let normals = estimate_normals(cloud);
    let pts = cloud.points();
    let iw = params.image_width;
    let sl = params.support_length;
    let cos_a = params.support_angle.to_radians().cos();
    let grid = GridIndex::new(pts, sl);
    let mut nb = Vec::new();
    let mut spin_images = Vec::with_capacity(keys.len());
    for &k in &keys {
        let (p, n) = (&pts[k], &normals[k]);
        let mut histogram = vec![0.0; params.histogram_len()];
        // the support cylinder lies inside the sphere of radius sqrt(2)*SL
        grid.within(p, sl * std::f64::consts::SQRT_2 * (1.0 + 1e-9), &mut nb);
        for &i in &nb {
            accumulate(&mut histogram, iw, sl, cos_a, p, n, &pts[i], &normals[i]);
        }
        spin_images.push(SpinImage {
            histogram,
            rows: iw + 1,
            cols: 2 * iw + 1,
            keypoint: *p,
            normal: *n,
        });
    }
    Ok(FeatureSet { spin_images })
}
