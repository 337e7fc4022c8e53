//! Grouping of detected exhaust points into clouds.
//!
//! Clusters are the connected components of the graph that links any two
//! points within `eps` of each other (single linkage, 3D Euclidean).
//! Components smaller than `min_pts` are dropped as noise. Each kept
//! cluster is summarized as a 2D Gaussian footprint — mean and covariance
//! over (x, y) — which is what the temporal stage stores and rasterizes.
//!
//! The implementation buckets points into a voxel grid with edge
//! `eps / sqrt(3)`: points sharing a voxel are at most `eps` apart and can
//! be united without a distance test, and only voxels within two cells of
//! each other can hold connectable pairs, so the result is exactly the
//! brute-force single linkage at a fraction of the cost.

use crate::mat2;

/// Disjoint-set forest with union by size and path halving.
struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Single-linkage clusters of `points`; each cluster lists ascending
/// indices into `points`, and clusters are ordered by their first member.
pub fn cluster(points: &[[f64; 3]], eps: f64, min_pts: usize) -> Vec<Vec<usize>> {
    assert!(eps > 0.0, "cluster distance must be positive");
    if points.is_empty() {
        return Vec::new();
    }

    // Voxel edge such that the voxel diagonal equals eps.
    let cell = eps / 3f64.sqrt();
    let key = |p: &[f64; 3]| {
        (
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        )
    };

    let mut voxels: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, p) in points.iter().enumerate() {
        voxels.entry(key(p)).or_default().push(i);
    }

    let mut uf = UnionFind::new(points.len());
    // All points in one voxel are within eps of each other by construction.
    for members in voxels.values() {
        for &m in &members[1..] {
            uf.union(members[0], m);
        }
    }

    // Cross-voxel links: only voxels within two cells on every axis can
    // contain a pair at distance <= eps. Visit each unordered voxel pair
    // once by requiring a lexicographically positive offset.
    let eps2 = eps * eps;
    let mut offsets = Vec::new();
    for di in -2i64..=2 {
        for dj in -2i64..=2 {
            for dk in -2i64..=2 {
                if (di, dj, dk) > (0, 0, 0) {
                    offsets.push((di, dj, dk));
                }
            }
        }
    }
    for (&(i, j, k), members) in &voxels {
        for &(di, dj, dk) in &offsets {
            let Some(neighbors) = voxels.get(&(i + di, j + dj, k + dk)) else {
                continue;
            };
            if uf.find(members[0]) == uf.find(neighbors[0]) {
                continue;
            }
            'pairs: for &a in members {
                for &b in neighbors {
                    let d0 = points[a][0] - points[b][0];
                    let d1 = points[a][1] - points[b][1];
                    let d2 = points[a][2] - points[b][2];
                    if d0 * d0 + d1 * d1 + d2 * d2 <= eps2 {
                        uf.union(a, b);
                        // One link joins the two components; further pairs
                        // between these voxels cannot change the partition.
                        break 'pairs;
                    }
                }
            }
        }
    }

    let mut groups: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for i in 0..points.len() {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = groups
        .into_values()
        .filter(|g| g.len() >= min_pts.max(1))
        .collect();
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Gaussian footprint of one exhaust cloud.
#[derive(Debug, Clone)]
pub struct GasCluster {
    /// Indices of the member points (into whatever slice was clustered).
    pub members: Vec<usize>,
    /// Mean of the member (x, y) positions.
    pub mean: [f64; 2],
    /// Regularized sample covariance of the member (x, y) positions.
    pub cov: [[f64; 2]; 2],
}

/// Summarize a cluster as a 2D Gaussian.
///
/// The covariance is the sample covariance (divisor `n - 1`); directions
/// with variance below `sigma_min^2` are lifted to exactly that floor so
/// the matrix stays invertible for thin or single-point clouds.
pub fn summarize(points: &[[f64; 3]], members: &[usize], sigma_min: f64) -> GasCluster {
    assert!(!members.is_empty(), "cannot summarize an empty cluster");
    let floor = sigma_min * sigma_min;
    let n = members.len() as f64;
    let mut mean = [0.0, 0.0];
    for &i in members {
        mean[0] += points[i][0];
        mean[1] += points[i][1];
    }
    mean[0] /= n;
    mean[1] /= n;

    let cov = if members.len() == 1 {
        [[floor, 0.0], [0.0, floor]]
    } else {
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for &i in members {
            let dx = points[i][0] - mean[0];
            let dy = points[i][1] - mean[1];
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let denom = n - 1.0;
        mat2::clamp_eigenvalues(
            [[sxx / denom, sxy / denom], [sxy / denom, syy / denom]],
            floor,
        )
    };

    GasCluster {
        members: members.to_vec(),
        mean,
        cov,
    }
}
