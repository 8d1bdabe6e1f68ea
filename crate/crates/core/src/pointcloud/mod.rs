//! Core geometric types, pre-processing filters and the object reference frame.

mod pcd;
mod spatial;

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};

pub use pcd::{load_pcd, read_pcd, save_pcd, write_pcd};
pub use spatial::GridIndex;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Default sign-disambiguation threshold (meters).
pub const DEFAULT_SIGN_THRESHOLD: f64 = 0.015;

/// Ordered list of 3D points with optional per-point RGB.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            colors: None,
        }
    }

    pub fn with_colors(points: Vec<Point3>, colors: Vec<[u8; 3]>) -> Result<Self> {
        if points.len() != colors.len() {
            return Err(Error::InvalidInput(format!(
                "{} colors for {} points",
                colors.len(),
                points.len()
            )));
        }
        Ok(PointCloud {
            points,
            colors: Some(colors),
        })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn colors(&self) -> Option<&[[u8; 3]]> {
        self.colors.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Sub-cloud made of the given indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
        }
    }

    /// Applies `p -> rotation * p + translation` to every point.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3) -> PointCloud {
        PointCloud {
            points: self
                .points
                .iter()
                .map(|p| Point3::from(rotation * p.coords + translation))
                .collect(),
            colors: self.colors.clone(),
        }
    }

    pub fn translated(&self, offset: &Vector3) -> PointCloud {
        self.transformed(&Matrix3::identity(), offset)
    }

    /// Concatenates `other` onto `self`. Colors survive only if both clouds have them.
    pub fn extend(&mut self, other: &PointCloud) {
        self.colors = match (self.colors.take(), other.colors.as_ref()) {
            (Some(mut a), Some(b)) => {
                a.extend_from_slice(b);
                Some(a)
            }
            _ => None,
        };
        self.points.extend_from_slice(&other.points);
    }
}

impl FromIterator<Point3> for PointCloud {
    fn from_iter<T: IntoIterator<Item = Point3>>(iter: T) -> Self {
        PointCloud::new(iter.into_iter().collect())
    }
}

fn is_finite(p: &Point3) -> bool {
    p.x.is_finite() && p.y.is_finite() && p.z.is_finite()
}

/// Object-centered coordinate system; `axes` holds X, Y, Z as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceFrame {
    pub origin: Point3,
    pub axes: Matrix3<f64>,
}

impl ReferenceFrame {
    pub fn identity() -> Self {
        ReferenceFrame {
            origin: Point3::origin(),
            axes: Matrix3::identity(),
        }
    }

    pub fn x_axis(&self) -> Vector3 {
        self.axes.column(0).into_owned()
    }

    pub fn y_axis(&self) -> Vector3 {
        self.axes.column(1).into_owned()
    }

    pub fn z_axis(&self) -> Vector3 {
        self.axes.column(2).into_owned()
    }

    /// Coordinates of a world point expressed in this frame.
    pub fn to_local(&self, p: &Point3) -> Point3 {
        Point3::from(self.axes.transpose() * (p - self.origin))
    }

    pub fn to_world(&self, p: &Point3) -> Point3 {
        self.origin + self.axes * p.coords
    }
}

/// Axis-aligned box in whatever frame its points were expressed in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point3,
    pub max: Point3,
}

impl BoundingBox {
    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let mut bb = BoundingBox {
            min: first,
            max: first,
        };
        for p in it {
            bb.min = bb.min.inf(p);
            bb.max = bb.max.sup(p);
        }
        Some(bb)
    }

    pub fn extents(&self) -> Vector3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn largest_edge(&self) -> f64 {
        self.extents().max()
    }
}

/// Keeps the points inside the axis-aligned cube of side `side` around `center`.
pub fn crop_cube(cloud: &PointCloud, center: &Point3, side: f64) -> Result<PointCloud> {
    if !(side > 0.0) {
        return Err(Error::InvalidParameter(format!("cube side must be > 0, got {side}")));
    }
    let half = side / 2.0;
    let keep: Vec<usize> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            (p.x - center.x).abs() <= half
                && (p.y - center.y).abs() <= half
                && (p.z - center.z).abs() <= half
        })
        .map(|(i, _)| i)
        .collect();
    Ok(cloud.select(&keep))
}

/// Integer voxel coordinates of `p` on a grid anchored at `anchor`.
pub(crate) fn voxel_key(p: &Point3, anchor: &Point3, voxel: f64) -> (i64, i64, i64) {
    (
        ((p.x - anchor.x) / voxel).floor() as i64,
        ((p.y - anchor.y) / voxel).floor() as i64,
        ((p.z - anchor.z) / voxel).floor() as i64,
    )
}

/// Groups finite points by voxel cell (grid anchored at the cloud minimum).
/// Buckets are returned in order of first occurrence.
pub(crate) fn voxel_buckets(cloud: &PointCloud, voxel: f64) -> (Point3, Vec<((i64, i64, i64), Vec<usize>)>) {
    let anchor = BoundingBox::from_points(cloud.points.iter().filter(|p| is_finite(p)))
        .map(|b| b.min)
        .unwrap_or_else(Point3::origin);
    let mut slot: HashMap<(i64, i64, i64), usize> = HashMap::new();
    let mut buckets: Vec<((i64, i64, i64), Vec<usize>)> = Vec::new();
    for (i, p) in cloud.points.iter().enumerate() {
        if !is_finite(p) {
            continue;
        }
        let key = voxel_key(p, &anchor, voxel);
        let idx = *slot.entry(key).or_insert_with(|| {
            buckets.push((key, Vec::new()));
            buckets.len() - 1
        });
        buckets[idx].1.push(i);
    }
    (anchor, buckets)
}

/// Replaces the points of every occupied voxel by their centroid.
///
/// The grid is anchored at the cloud's minimum corner, so the output depends on
/// translation only through the grid phase.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> Result<PointCloud> {
    if !(voxel > 0.0) {
        return Err(Error::InvalidParameter(format!("voxel size must be > 0, got {voxel}")));
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (_, buckets) = voxel_buckets(cloud, voxel);
    let mut points = Vec::with_capacity(buckets.len());
    let mut colors = cloud.colors.as_ref().map(|_| Vec::with_capacity(buckets.len()));
    for (_, members) in &buckets {
        let sum = members
            .iter()
            .fold(Vector3::zeros(), |acc, &i| acc + cloud.points[i].coords);
        points.push(Point3::from(sum / members.len() as f64));
        if let (Some(out), Some(src)) = (colors.as_mut(), cloud.colors.as_ref()) {
            let mut acc = [0u32; 3];
            for &i in members {
                for (a, c) in acc.iter_mut().zip(src[i]) {
                    *a += c as u32;
                }
            }
            let n = members.len() as u32;
            out.push([
                ((acc[0] + n / 2) / n) as u8,
                ((acc[1] + n / 2) / n) as u8,
                ((acc[2] + n / 2) / n) as u8,
            ]);
        }
    }
    Ok(PointCloud { points, colors })
}

/// Componentwise mean of the points.
pub fn centroid(cloud: &PointCloud) -> Result<Point3> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let sum = cloud
        .points
        .iter()
        .fold(Vector3::zeros(), |acc, p| acc + p.coords);
    Ok(Point3::from(sum / cloud.len() as f64))
}

/// Normalized (1/m) covariance of the points about `center`.
pub fn covariance(points: &[Point3], center: &Point3) -> Matrix3<f64> {
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - center;
        cov += d * d.transpose();
    }
    cov / points.len() as f64
}

/// Eigenpairs of a symmetric 3x3 matrix sorted by decreasing eigenvalue.
///
/// Eigenvalues closer than 1e-12 are ordered by lexicographic comparison of
/// their eigenvectors so that the order never depends on solver internals.
pub fn sorted_eigen(m: &Matrix3<f64>) -> [(f64, Vector3); 3] {
    let eig = SymmetricEigen::new(*m);
    let mut pairs: Vec<(f64, Vector3)> = (0..3)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned()))
        .collect();
    pairs.sort_by(|a, b| {
        if (a.0 - b.0).abs() < 1e-12 {
            lexicographic(&a.1, &b.1)
        } else {
            b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal)
        }
    });
    [pairs[0], pairs[1], pairs[2]]
}

fn lexicographic(a: &Vector3, b: &Vector3) -> Ordering {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

/// +1 when at least as many points lie beyond `+t` as beyond `-t`, else -1.
pub fn axis_sign(coords: impl Iterator<Item = f64>, t: f64) -> f64 {
    let (mut pos, mut neg) = (0usize, 0usize);
    for v in coords {
        if v > t {
            pos += 1;
        } else if v < -t {
            neg += 1;
        }
    }
    if pos >= neg {
        1.0
    } else {
        -1.0
    }
}

/// Unique, repeatable object frame from the covariance eigenvectors.
///
/// X and Y start as the two principal directions and Z as their cross
/// product; each of X and Y is then pointed toward the side holding more
/// points (beyond the dead band `t`), and Z is rebuilt as X x Y.
pub fn compute_reference_frame(cloud: &PointCloud, t: f64) -> Result<ReferenceFrame> {
    if cloud.len() < 3 {
        return Err(Error::DegenerateCloud(format!(
            "need at least 3 points, got {}",
            cloud.len()
        )));
    }
    let origin = centroid(cloud)?;
    let cov = covariance(&cloud.points, &origin);
    let [(l1, v1), (l2, v2), (l3, _)] = sorted_eigen(&cov);
    if !(l1 > 0.0) || l2 <= 1e-12 * l1 {
        return Err(Error::DegenerateCloud("rank-deficient covariance".into()));
    }
    if l1 - l3 <= 1e-9 * l1 {
        return Err(Error::DegenerateCloud("isotropic covariance".into()));
    }
    let v1 = v1.normalize();
    let v2 = (v2 - v1 * v1.dot(&v2)).normalize();
    let sx = axis_sign(cloud.points.iter().map(|p| v1.dot(&(p - origin))), t);
    let sy = axis_sign(cloud.points.iter().map(|p| v2.dot(&(p - origin))), t);
    let x = v1 * sx;
    let y = v2 * sy;
    let z = x.cross(&y);
    Ok(ReferenceFrame {
        origin,
        axes: Matrix3::from_columns(&[x, y, z]),
    })
}

/// Bounding box of the cloud expressed in `frame` coordinates.
pub fn aabb_in_frame(cloud: &PointCloud, frame: &ReferenceFrame) -> Result<BoundingBox> {
    let local: Vec<Point3> = cloud.points.iter().map(|p| frame.to_local(p)).collect();
    BoundingBox::from_points(&local).ok_or(Error::EmptyCloud)
}
