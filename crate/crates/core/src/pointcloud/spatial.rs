use std::collections::HashMap;

use super::{voxel_key, BoundingBox, Point3};

/// Uniform hash grid over a point slice for radius and k-nearest queries.
pub struct GridIndex<'a> {
    points: &'a [Point3],
    cell: f64,
    anchor: Point3,
    cells: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl<'a> GridIndex<'a> {
    /// `cell` should be on the order of the typical query radius.
    pub fn new(points: &'a [Point3], cell: f64) -> Self {
        assert!(cell > 0.0, "grid cell must be positive");
        let anchor = BoundingBox::from_points(points)
            .map(|b| b.min)
            .unwrap_or_else(Point3::origin);
        let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(voxel_key(p, &anchor, cell)).or_default().push(i);
        }
        GridIndex {
            points,
            cell,
            anchor,
            cells,
        }
    }

    pub fn points(&self) -> &'a [Point3] {
        self.points
    }

    /// Indices of points with distance `<= radius` to `q`, in ascending index order.
    pub fn within(&self, q: &Point3, radius: f64, out: &mut Vec<usize>) {
        out.clear();
        let r2 = radius * radius;
        let reach = (radius / self.cell).ceil() as i64;
        let c = voxel_key(q, &self.anchor, self.cell);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    if let Some(members) = self.cells.get(&(c.0 + dx, c.1 + dy, c.2 + dz)) {
                        out.extend(
                            members
                                .iter()
                                .copied()
                                .filter(|&i| (self.points[i] - q).norm_squared() <= r2),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
    }

    /// The `k` nearest points to `q` (ties broken by index), nearest first.
    pub fn nearest(&self, q: &Point3, k: usize) -> Vec<usize> {
        let k = k.min(self.points.len());
        if k == 0 {
            return Vec::new();
        }
        let c = voxel_key(q, &self.anchor, self.cell);
        let mut found: Vec<(f64, usize)> = Vec::new();
        let mut ring = 0i64;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        if let Some(members) = self.cells.get(&(c.0 + dx, c.1 + dy, c.2 + dz)) {
                            found.extend(
                                members
                                    .iter()
                                    .map(|&i| ((self.points[i] - q).norm_squared(), i)),
                            );
                        }
                    }
                }
            }
            if found.len() >= k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                // anything outside the visited rings is farther than ring * cell
                let bound = ring as f64 * self.cell;
                if found[k - 1].0 <= bound * bound || found.len() == self.points.len() {
                    return found[..k].iter().map(|&(_, i)| i).collect();
                }
            }
            ring += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(seed: u64, m: usize) -> Vec<Point3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..m)
            .map(|_| {
                Point3::new(
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..0.5),
                    rng.random_range(0.0..0.2),
                )
            })
            .collect()
    }

    #[test]
    fn radius_matches_bruteforce() {
        let pts = cloud(1, 800);
        let grid = GridIndex::new(&pts, 0.05);
        let mut out = Vec::new();
        for q in pts.iter().step_by(37) {
            for r in [0.01, 0.05, 0.13] {
                grid.within(q, r, &mut out);
                let expected: Vec<usize> = (0..pts.len())
                    .filter(|&i| (pts[i] - q).norm() <= r)
                    .collect();
                assert_eq!(out, expected);
            }
        }
    }

    #[test]
    fn knn_matches_bruteforce() {
        let pts = cloud(2, 600);
        let grid = GridIndex::new(&pts, 0.03);
        for q in pts.iter().step_by(41) {
            let got = grid.nearest(q, 10);
            let mut all: Vec<(f64, usize)> =
                pts.iter().enumerate().map(|(i, p)| ((p - q).norm_squared(), i)).collect();
            all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let expected: Vec<usize> = all[..10].iter().map(|&(_, i)| i).collect();
            assert_eq!(got, expected);
        }
        // query far outside the cloud still terminates
        assert_eq!(grid.nearest(&Point3::new(1.2, 0.7, 0.3), 3).len(), 3);
        assert_eq!(grid.nearest(&Point3::origin(), 10_000).len(), pts.len());
    }
}
