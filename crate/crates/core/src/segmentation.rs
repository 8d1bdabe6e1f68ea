//! Table-top scene decomposition: dominant plane, polygonal prism above it,
//! and Euclidean clustering into object candidates.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::{centroid, covariance, sorted_eigen, BoundingBox, GridIndex, Point3, PointCloud, Vector3};

/// `{p : normal . p + d = 0}` together with the scene indices supporting it.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub normal: Vector3,
    pub d: f64,
    pub inlier_indices: Vec<usize>,
}

impl Plane {
    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) + self.d
    }

    /// Flips the plane orientation so that `viewpoint` lies on the positive side.
    pub fn orient_toward(&mut self, viewpoint: &Point3) {
        if self.signed_distance(viewpoint) < 0.0 {
            self.normal = -self.normal;
            self.d = -self.d;
        }
    }

    /// Orthonormal in-plane basis (u, v) with u x v = normal.
    fn basis(&self) -> (Vector3, Vector3) {
        let n = self.normal;
        let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
            Vector3::x()
        } else if n.y.abs() <= n.z.abs() {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let u = helper.cross(&n).normalize();
        let v = n.cross(&u);
        (u, v)
    }
}

/// RANSAC search for the plane with the most points closer than `tau`.
///
/// Each iteration fits a plane through three distinct random points; collinear
/// triples are skipped. Ties keep the earliest hypothesis. Deterministic per seed.
pub fn ransac_plane(scene: &PointCloud, tau: f64, iterations: usize, seed: u64) -> Result<Plane> {
    let pts = scene.points();
    if pts.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "plane fitting needs at least 3 points, got {}",
            pts.len()
        )));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(usize, Vector3, f64)> = None;
    for _ in 0..iterations {
        let i = rng.random_range(0..pts.len());
        let mut j = rng.random_range(0..pts.len() - 1);
        if j >= i {
            j += 1;
        }
        let mut k = rng.random_range(0..pts.len() - 2);
        for taken in [i.min(j), i.max(j)] {
            if k >= taken {
                k += 1;
            }
        }
        let e1 = pts[j] - pts[i];
        let e2 = pts[k] - pts[i];
        let cross = e1.cross(&e2);
        let scale = e1.norm() * e2.norm();
        if !(scale > 0.0) || cross.norm() <= 1e-12 * scale {
            continue;
        }
        let normal = cross.normalize();
        let d = -normal.dot(&pts[i].coords);
        let count = pts
            .iter()
            .filter(|p| (normal.dot(&p.coords) + d).abs() < tau)
            .count();
        if best.as_ref().is_none_or(|b| count > b.0) {
            best = Some((count, normal, d));
        }
    }
    let (_, normal, d) = best.ok_or(Error::NoPlaneFound)?;
    let inlier_indices = pts
        .iter()
        .enumerate()
        .filter(|(_, p)| (normal.dot(&p.coords) + d).abs() < tau)
        .map(|(i, _)| i)
        .collect();
    Ok(Plane {
        normal,
        d,
        inlier_indices,
    })
}

/// Least-squares refit of `plane` to its inliers, followed by a fresh inlier
/// scan at `tau`. Keeps the orientation of the input normal.
pub fn refine_plane(scene: &PointCloud, plane: &Plane, tau: f64) -> Result<Plane> {
    if plane.inlier_indices.len() < 3 {
        return Err(Error::InvalidInput("plane refinement needs at least 3 inliers".into()));
    }
    let support: Vec<Point3> = plane.inlier_indices.iter().map(|&i| scene.points()[i]).collect();
    let c = Point3::from(support.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / support.len() as f64);
    let mut normal = sorted_eigen(&covariance(&support, &c))[2].1.normalize();
    if normal.dot(&plane.normal) < 0.0 {
        normal = -normal;
    }
    let d = -normal.dot(&c.coords);
    let inlier_indices = scene
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| (normal.dot(&p.coords) + d).abs() < tau)
        .map(|(i, _)| i)
        .collect();
    Ok(Plane {
        normal,
        d,
        inlier_indices,
    })
}

/// Convex polygon (counter-clockwise) in plane coordinates.
#[derive(Clone, Debug)]
pub struct PlaneHull {
    origin: Point3,
    u: Vector3,
    v: Vector3,
    vertices: Vec<Vector2<f64>>,
}

impl PlaneHull {
    /// Hull of the plane inliers projected into the plane.
    pub fn from_plane(scene: &PointCloud, plane: &Plane) -> Result<Self> {
        let (u, v) = plane.basis();
        let origin = Point3::from(-plane.normal * plane.d);
        let projected: Vec<Vector2<f64>> = plane
            .inlier_indices
            .iter()
            .map(|&i| {
                let d = scene.points()[i] - origin;
                Vector2::new(u.dot(&d), v.dot(&d))
            })
            .collect();
        let vertices = convex_hull(projected);
        if vertices.len() < 3 {
            return Err(Error::InvalidInput(
                "plane inliers do not span a polygon (fewer than 3 hull vertices)".into(),
            ));
        }
        Ok(PlaneHull {
            origin,
            u,
            v,
            vertices,
        })
    }

    pub fn project(&self, p: &Point3) -> Vector2<f64> {
        let d = p - self.origin;
        Vector2::new(self.u.dot(&d), self.v.dot(&d))
    }

    pub fn vertices(&self) -> &[Vector2<f64>] {
        &self.vertices
    }

    pub fn contains(&self, q: &Vector2<f64>) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            cross2(&(b - a), &(q - a)) > -1e-9
        })
    }

    /// Euclidean distance from `q` to the polygon boundary.
    pub fn boundary_distance(&self, q: &Vector2<f64>) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| segment_distance(q, &self.vertices[i], &self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

fn segment_distance(q: &Vector2<f64>, a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((q - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (q - (a + ab * t)).norm()
}

/// Andrew's monotone chain; returns the hull counter-clockwise without repeats.
pub fn convex_hull(mut pts: Vec<Vector2<f64>>) -> Vec<Vector2<f64>> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vector2<f64>> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vector2<f64>>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross2(&(b - a), &(p - a)) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}

/// Indices of scene points above the plane (signed height in `(min_h, max_h)`)
/// whose projection falls inside the hull of the plane inliers.
pub fn prism_indices(scene: &PointCloud, plane: &Plane, min_h: f64, max_h: f64) -> Result<Vec<usize>> {
    if !(min_h < max_h) {
        return Err(Error::InvalidParameter(format!(
            "prism heights must satisfy min < max, got ({min_h}, {max_h})"
        )));
    }
    let hull = PlaneHull::from_plane(scene, plane)?;
    Ok(scene
        .points()
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            let h = plane.signed_distance(p);
            h > min_h && h < max_h && hull.contains(&hull.project(p))
        })
        .map(|(i, _)| i)
        .collect())
}

pub fn extract_prism(scene: &PointCloud, plane: &Plane, min_h: f64, max_h: f64) -> Result<PointCloud> {
    Ok(scene.select(&prism_indices(scene, plane, min_h, max_h)?))
}

/// Connected components of the graph linking points closer than `link_dist`.
/// Every point belongs to exactly one component; components are ordered by
/// their lowest index and list members in ascending order.
pub fn connected_components(points: &[Point3], link_dist: f64) -> Vec<Vec<usize>> {
    let grid = GridIndex::new(points, link_dist);
    let mut visited = vec![false; points.len()];
    let mut components = Vec::new();
    let mut neighbors = Vec::new();
    for seed in 0..points.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut members = vec![seed];
        let mut head = 0;
        while head < members.len() {
            let cur = members[head];
            head += 1;
            grid.within(&points[cur], link_dist, &mut neighbors);
            for &nb in &neighbors {
                if !visited[nb] && (points[nb] - points[cur]).norm() < link_dist {
                    visited[nb] = true;
                    members.push(nb);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Euclidean cluster extraction; components with fewer than `min_pts` or
/// more than `max_pts` points are discarded.
pub fn euclidean_cluster(
    cloud: &PointCloud,
    link_dist: f64,
    min_pts: usize,
    max_pts: usize,
) -> Result<Vec<PointCloud>> {
    Ok(cluster_indices(cloud, link_dist, min_pts, max_pts)?
        .iter()
        .map(|c| cloud.select(c))
        .collect())
}

pub fn cluster_indices(
    cloud: &PointCloud,
    link_dist: f64,
    min_pts: usize,
    max_pts: usize,
) -> Result<Vec<Vec<usize>>> {
    if !(link_dist > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "link distance must be > 0, got {link_dist}"
        )));
    }
    Ok(connected_components(cloud.points(), link_dist)
        .into_iter()
        .filter(|c| c.len() >= min_pts && c.len() <= max_pts)
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionParams {
    pub plane_tau: f64,
    pub plane_iterations: usize,
    pub seed: u64,
    pub prism_min_h: f64,
    pub prism_max_h: f64,
    pub link_dist: f64,
    pub min_pts: usize,
    pub max_pts: usize,
    /// Bounds on the largest AABB extent of a manipulable object (meters).
    pub size_min: f64,
    pub size_max: f64,
    pub edge_margin: f64,
    /// Sensor position; the table normal is oriented toward it.
    pub viewpoint: Point3,
    pub first_track_id: u64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        DetectionParams {
            plane_tau: 0.02,
            plane_iterations: 200,
            seed: 0,
            prism_min_h: 0.005,
            prism_max_h: 0.5,
            link_dist: 0.03,
            min_pts: 30,
            max_pts: 50_000,
            size_min: 0.01,
            size_max: 0.5,
            edge_margin: 0.05,
            viewpoint: Point3::new(0.0, 0.0, 1.5),
            first_track_id: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateFlags {
    pub on_table: bool,
    pub tracked: bool,
    pub size_ok: bool,
    pub near_edge: bool,
    pub is_key_view: bool,
}

#[derive(Clone, Debug)]
pub struct ObjectCandidate {
    pub cloud: PointCloud,
    /// Indices of the candidate's points in the scene cloud.
    pub scene_indices: Vec<usize>,
    pub track_id: u64,
    pub flags: CandidateFlags,
}

impl ObjectCandidate {
    /// Detection expression with the tracker/instructor/robot terms held true.
    pub fn passes_detection(&self) -> bool {
        self.flags.on_table && self.flags.size_ok && !self.flags.near_edge
    }
}

/// Runs plane -> prism -> clustering and flags every cluster. The RANSAC
/// plane is refit by least squares before the prism is cut; oversized
/// clusters get a second clustering pass at half the link distance.
pub fn detect_candidates(scene: &PointCloud, params: &DetectionParams) -> Result<(Plane, Vec<ObjectCandidate>)> {
    let coarse = ransac_plane(scene, params.plane_tau, params.plane_iterations, params.seed)?;
    let mut plane = refine_plane(scene, &coarse, params.plane_tau)?;
    plane.orient_toward(&params.viewpoint);
    let hull = PlaneHull::from_plane(scene, &plane)?;
    let prism = prism_indices(scene, &plane, params.prism_min_h, params.prism_max_h)?;
    let prism_cloud = scene.select(&prism);

    let mut groups: Vec<Vec<usize>> = Vec::new();
    for comp in connected_components(prism_cloud.points(), params.link_dist) {
        if largest_extent(&prism_cloud, &comp) > params.size_max && comp.len() > 1 {
            let sub_cloud = prism_cloud.select(&comp);
            for sub in connected_components(sub_cloud.points(), params.link_dist / 2.0) {
                groups.push(sub.into_iter().map(|i| comp[i]).collect());
            }
        } else {
            groups.push(comp);
        }
    }
    groups.retain(|g| g.len() >= params.min_pts && g.len() <= params.max_pts);
    groups.sort_by_key(|g| g[0]);

    let mut candidates = Vec::with_capacity(groups.len());
    for (i, group) in groups.into_iter().enumerate() {
        let scene_indices: Vec<usize> = group.iter().map(|&j| prism[j]).collect();
        let cloud = scene.select(&scene_indices);
        let extent = largest_extent(&prism_cloud, &group);
        let c = hull.project(&centroid(&cloud)?);
        let near_edge = !hull.contains(&c) || hull.boundary_distance(&c) < params.edge_margin;
        candidates.push(ObjectCandidate {
            cloud,
            scene_indices,
            track_id: params.first_track_id + i as u64,
            flags: CandidateFlags {
                on_table: true,
                tracked: false,
                size_ok: extent >= params.size_min && extent <= params.size_max,
                near_edge,
                is_key_view: false,
            },
        });
    }
    Ok((plane, candidates))
}

/// Object candidates satisfying the detection expression.
pub fn detect_objects(scene: &PointCloud, params: &DetectionParams) -> Result<Vec<ObjectCandidate>> {
    let (_, candidates) = detect_candidates(scene, params)?;
    Ok(candidates.into_iter().filter(|c| c.passes_detection()).collect())
}

fn largest_extent(cloud: &PointCloud, members: &[usize]) -> f64 {
    BoundingBox::from_points(members.iter().map(|&i| &cloud.points()[i]))
        .map(|b| b.largest_edge())
        .unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plane_with_outliers(seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts: Vec<Point3> = (0..500)
            .map(|_| Point3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), 0.7))
            .collect();
        pts.extend((0..50).map(|_| {
            Point3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(0.8..1.5),
            )
        }));
        PointCloud::new(pts)
    }

    fn blob(rng: &mut ChaCha8Rng, center: Point3, n: usize) -> Vec<Point3> {
        (0..n)
            .map(|_| {
                center
                    + Vector3::new(
                        rng.random_range(-0.03..0.03),
                        rng.random_range(-0.03..0.03),
                        rng.random_range(-0.03..0.03),
                    )
            })
            .collect()
    }

    #[test]
    fn ransac_recovers_table_plane() {
        let scene = plane_with_outliers(1);
        let plane = ransac_plane(&scene, 0.02, 200, 7).unwrap();
        let angle = plane.normal.dot(&Vector3::z()).abs().min(1.0).acos().to_degrees();
        assert!(angle < 2.0, "angle {angle}");
        assert!(plane.inlier_indices.len() >= 500);
        assert!((plane.normal.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ransac_three_points_and_determinism() {
        let tri = PointCloud::new(vec![
            Point3::new(0.0, 0.0, 1.0),
            Point3::new(1.0, 0.0, 1.0),
            Point3::new(0.0, 1.0, 2.0),
        ]);
        let plane = ransac_plane(&tri, 0.01, 10, 0).unwrap();
        assert_eq!(plane.inlier_indices, vec![0, 1, 2]);
        for p in tri.points() {
            assert!(plane.signed_distance(p).abs() < 1e-12);
        }
        let scene = plane_with_outliers(2);
        assert_eq!(
            ransac_plane(&scene, 0.02, 200, 11).unwrap(),
            ransac_plane(&scene, 0.02, 200, 11).unwrap()
        );
    }

    #[test]
    fn ransac_collinear_fails() {
        let line: PointCloud = (0..20).map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        assert!(matches!(ransac_plane(&line, 0.02, 50, 0), Err(Error::NoPlaneFound)));
    }

    #[test]
    fn ransac_inliers_monotone_in_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point3> = (0..300)
            .map(|_| {
                Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.05..0.05),
                )
            })
            .collect();
        let cloud = PointCloud::new(pts);
        let mut last = 0;
        for tau in [0.005, 0.01, 0.02, 0.04, 0.08] {
            let n = ransac_plane(&cloud, tau, 100, 3).unwrap().inlier_indices.len();
            assert!(n >= last);
            last = n;
        }
    }

    fn table_plane() -> (PointCloud, Plane) {
        let mut pts = Vec::new();
        for i in 0..21 {
            for j in 0..21 {
                pts.push(Point3::new(i as f64 * 0.05 - 0.5, j as f64 * 0.05 - 0.5, 0.0));
            }
        }
        let scene = PointCloud::new(pts);
        let plane = Plane {
            normal: Vector3::z(),
            d: 0.0,
            inlier_indices: (0..scene.len()).collect(),
        };
        (scene, plane)
    }

    #[test]
    fn prism_keeps_points_above_hull_only() {
        let (mut scene, plane) = table_plane();
        let above_in = Point3::new(0.1, 0.1, 0.05);
        let above_out = Point3::new(0.9, 0.1, 0.05);
        let below = Point3::new(0.1, 0.1, -0.05);
        scene.extend(&PointCloud::new(vec![above_in, above_out, below]));
        let out = extract_prism(&scene, &plane, 0.01, 0.5).unwrap();
        assert_eq!(out.points(), &[above_in]);
        let degenerate = Plane {
            inlier_indices: vec![0, 1],
            ..plane.clone()
        };
        assert!(extract_prism(&scene, &degenerate, 0.01, 0.5).is_err());
        assert!(extract_prism(&scene, &plane, 0.5, 0.01).is_err());
    }

    #[test]
    fn clusters_two_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = blob(&mut rng, Point3::origin(), 100);
        pts.extend(blob(&mut rng, Point3::new(0.5, 0.0, 0.0), 100));
        let clusters = euclidean_cluster(&PointCloud::new(pts), 0.05, 1, 1000).unwrap();
        assert_eq!(clusters.len(), 2);
        assert!(clusters.iter().all(|c| c.len() == 100));
    }

    #[test]
    fn singleton_cluster() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)]);
        let clusters = euclidean_cluster(&cloud, 0.05, 1, 10).unwrap();
        assert_eq!(clusters.len(), 1);
        assert!(euclidean_cluster(&cloud, 0.0, 1, 10).is_err());
    }

    #[test]
    fn clustering_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pts = Vec::new();
        for c in 0..4 {
            pts.extend(blob(&mut rng, Point3::new(c as f64 * 0.2, 0.0, 0.0), 40));
        }
        let base = connected_components(&pts, 0.02);
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<Point3> = perm.iter().map(|&i| pts[i]).collect();
        let comps = connected_components(&shuffled, 0.02);
        let mut a: Vec<Vec<usize>> = base;
        let mut b: Vec<Vec<usize>> = comps
            .iter()
            .map(|c| {
                let mut m: Vec<usize> = c.iter().map(|&i| perm[i]).collect();
                m.sort_unstable();
                m
            })
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    fn box_points(center: Point3, size: Vector3, step: f64) -> Vec<Point3> {
        let mut pts = Vec::new();
        let n = |s: f64| (s / step).round() as usize;
        for i in 0..=n(size.x) {
            for j in 0..=n(size.y) {
                for k in 0..=n(size.z) {
                    pts.push(center + Vector3::new(
                        i as f64 * step - size.x / 2.0,
                        j as f64 * step - size.y / 2.0,
                        k as f64 * step,
                    ));
                }
            }
        }
        pts
    }

    fn table_scene(objects: &[(Point3, Vector3)]) -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..61 {
            for j in 0..41 {
                pts.push(Point3::new(i as f64 * 0.02 - 0.6, j as f64 * 0.02 - 0.4, 0.7));
            }
        }
        for (c, s) in objects {
            pts.extend(box_points(*c, *s, 0.01));
        }
        PointCloud::new(pts)
    }

    #[test]
    fn oversized_candidate_is_excluded() {
        let scene = table_scene(&[
            (Point3::new(0.0, 0.0, 0.71), Vector3::new(0.06, 0.06, 0.08)),
            (Point3::new(0.0, -0.25, 0.71), Vector3::new(0.9, 0.03, 0.03)),
        ]);
        let params = DetectionParams {
            size_max: 0.5,
            ..Default::default()
        };
        let (_, all) = detect_candidates(&scene, &params).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all.iter().filter(|c| !c.flags.size_ok).count(), 1);
        let kept = detect_objects(&scene, &params).unwrap();
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn near_edge_candidate_is_excluded() {
        // box centered 1 cm inside the table's +x edge (table spans x in [-0.6, 0.6])
        let scene = table_scene(&[
            (Point3::new(0.0, 0.0, 0.71), Vector3::new(0.06, 0.06, 0.08)),
            (Point3::new(0.59, 0.0, 0.71), Vector3::new(0.04, 0.04, 0.08)),
        ]);
        let (_, all) = detect_candidates(&scene, &DetectionParams::default()).unwrap();
        assert_eq!(all.len(), 2);
        let edge = all.iter().find(|c| c.flags.near_edge).expect("edge candidate");
        assert!(edge.cloud.points().iter().all(|p| p.x > 0.5));
        assert_eq!(detect_objects(&scene, &DetectionParams::default()).unwrap().len(), 1);
    }

    #[test]
    fn track_ids_are_unique() {
        let scene = table_scene(&[
            (Point3::new(-0.3, 0.0, 0.71), Vector3::new(0.06, 0.06, 0.08)),
            (Point3::new(0.0, 0.0, 0.71), Vector3::new(0.06, 0.06, 0.08)),
            (Point3::new(0.3, 0.0, 0.71), Vector3::new(0.06, 0.06, 0.08)),
        ]);
        let params = DetectionParams {
            first_track_id: 40,
            ..Default::default()
        };
        let found = detect_objects(&scene, &params).unwrap();
        let ids: Vec<u64> = found.iter().map(|c| c.track_id).collect();
        assert_eq!(ids, vec![40, 41, 42]);
    }
}
