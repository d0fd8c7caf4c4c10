//! Density-based clustering of lane pixels.

use super::grid::{dist2, Grid};

/// Clusters (as indices into the input, ascending) plus noise indices.
/// Clusters are ordered by their lexicographically smallest point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Clustering {
    pub clusters: Vec<Vec<usize>>,
    pub noise: Vec<usize>,
}

/// DBSCAN under Euclidean distance. A point is core when at least
/// `min_pts` points (itself included) lie within `eps`. Core points that
/// are density-connected share a cluster; each border point joins the
/// cluster of its nearest core neighbour (ties broken by the smaller core
/// point), so the partition does not depend on input order.
pub fn cluster_lane_pixels(points: &[[f64; 2]], eps: f64, min_pts: usize) -> Clustering {
    assert!(eps > 0.0 && min_pts >= 1, "eps must be positive and min_pts at least 1");
    if points.is_empty() {
        return Clustering::default();
    }
    let grid = Grid::new(points, eps);
    let neighbours: Vec<Vec<usize>> = points.iter().map(|p| grid.within(p, eps)).collect();
    let core: Vec<bool> = neighbours.iter().map(|n| n.len() >= min_pts).collect();

    const UNSET: usize = usize::MAX;
    let mut label = vec![UNSET; points.len()];
    let mut n_clusters = 0;
    for start in 0..points.len() {
        if !core[start] || label[start] != UNSET {
            continue;
        }
        label[start] = n_clusters;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in &neighbours[i] {
                if core[j] && label[j] == UNSET {
                    label[j] = n_clusters;
                    stack.push(j);
                }
            }
        }
        n_clusters += 1;
    }

    let lex_less = |a: usize, b: usize| (points[a][0], points[a][1]) < (points[b][0], points[b][1]);
    for i in 0..points.len() {
        if core[i] {
            continue;
        }
        let mut best: Option<usize> = None;
        for &j in &neighbours[i] {
            if !core[j] {
                continue;
            }
            best = match best {
                None => Some(j),
                Some(b) => {
                    let (dj, db) = (dist2(&points[i], &points[j]), dist2(&points[i], &points[b]));
                    if dj < db || (dj == db && lex_less(j, b)) {
                        Some(j)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        if let Some(b) = best {
            label[i] = label[b];
        }
    }

    let mut clusters = vec![Vec::new(); n_clusters];
    let mut noise = Vec::new();
    for (i, &l) in label.iter().enumerate() {
        if l == UNSET {
            noise.push(i);
        } else {
            clusters[l].push(i);
        }
    }
    let key = |c: &Vec<usize>| {
        c.iter()
            .map(|&i| (points[i][0], points[i][1]))
            .min_by(|a, b| a.partial_cmp(b).unwrap())
            .unwrap()
    };
    clusters.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
    Clustering { clusters, noise }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn blob(cx: f64, cy: f64) -> Vec<[f64; 2]> {
        // 50 points on a 10x5 lattice with 1 px spacing
        (0..50).map(|k| [cx + (k % 10) as f64, cy + (k / 10) as f64]).collect()
    }

    #[test]
    fn two_separated_blobs() {
        let mut pts = blob(0.0, 0.0);
        pts.extend(blob(100.0, 0.0));
        let c = cluster_lane_pixels(&pts, 10.0, 20);
        assert_eq!(c.clusters.len(), 2);
        assert!(c.noise.is_empty());
        assert_eq!(c.clusters[0], (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn chain_is_one_cluster() {
        let pts: Vec<[f64; 2]> = (0..30).map(|k| [k as f64 * 3.0, 0.0]).collect();
        let c = cluster_lane_pixels(&pts, 3.5, 3);
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.clusters[0].len(), 30);
    }

    #[test]
    fn sparse_points_are_noise() {
        let pts: Vec<[f64; 2]> = (0..4).map(|k| [k as f64 * 100.0, 0.0]).collect();
        let c = cluster_lane_pixels(&pts, 10.0, 5);
        assert!(c.clusters.is_empty());
        assert_eq!(c.noise, vec![0, 1, 2, 3]);
        assert_eq!(cluster_lane_pixels(&[], 1.0, 1), Clustering::default());
    }

    fn as_sets(points: &[[f64; 2]], c: &Clustering) -> Vec<Vec<(u64, u64)>> {
        let mut sets: Vec<Vec<(u64, u64)>> = c
            .clusters
            .iter()
            .map(|cl| {
                let mut s: Vec<_> = cl.iter().map(|&i| (points[i][0].to_bits(), points[i][1].to_bits())).collect();
                s.sort_unstable();
                s
            })
            .collect();
        sets.sort();
        sets
    }

    proptest! {
        #[test]
        fn order_independent(
            raw in proptest::collection::vec((0u32..60, 0u32..60), 1..120),
            seed in any::<u64>(),
        ) {
            let pts: Vec<[f64; 2]> = raw.iter().map(|&(x, y)| [x as f64, y as f64]).collect();
            let mut shuffled = pts.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut s = seed | 1;
            for i in (1..shuffled.len()).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                shuffled.swap(i, (s % (i as u64 + 1)) as usize);
            }
            let a = cluster_lane_pixels(&pts, 4.0, 3);
            let b = cluster_lane_pixels(&shuffled, 4.0, 3);
            prop_assert_eq!(as_sets(&pts, &a), as_sets(&shuffled, &b));
            prop_assert_eq!(a.noise.len(), b.noise.len());
        }
    }
}
