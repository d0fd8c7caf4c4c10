use std::collections::HashMap;

/// Uniform bucket grid over 2D points for radius and nearest queries.
pub(crate) struct Grid<'a> {
    points: &'a [[f64; 2]],
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    min_key: (i64, i64),
    max_key: (i64, i64),
}

impl<'a> Grid<'a> {
    pub fn new(points: &'a [[f64; 2]], cell: f64) -> Self {
        assert!(cell > 0.0);
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        let mut min_key = (i64::MAX, i64::MAX);
        let mut max_key = (i64::MIN, i64::MIN);
        for (i, p) in points.iter().enumerate() {
            let k = Self::key_of(p, cell);
            min_key = (min_key.0.min(k.0), min_key.1.min(k.1));
            max_key = (max_key.0.max(k.0), max_key.1.max(k.1));
            buckets.entry(k).or_default().push(i);
        }
        Grid { points, cell, buckets, min_key, max_key }
    }

    fn key_of(p: &[f64; 2], cell: f64) -> (i64, i64) {
        ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64)
    }

    /// Indices within `radius` (inclusive) of `q`, in ascending index order.
    pub fn within(&self, q: &[f64; 2], radius: f64) -> Vec<usize> {
        let reach = (radius / self.cell).ceil() as i64;
        let (kx, ky) = Self::key_of(q, self.cell);
        let r2 = radius * radius;
        let mut out = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                if let Some(bucket) = self.buckets.get(&(kx + dx, ky + dy)) {
                    out.extend(bucket.iter().copied().filter(|&i| dist2(&self.points[i], q) <= r2));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Distance from `q` to the nearest indexed point. The grid must be
    /// non-empty.
    pub fn nearest_distance(&self, q: &[f64; 2]) -> f64 {
        let (kx, ky) = Self::key_of(q, self.cell);
        let mut best = f64::INFINITY;
        let span = (self.max_key.0 - self.min_key.0).max(self.max_key.1 - self.min_key.1)
            + (kx - self.min_key.0).abs().max((kx - self.max_key.0).abs())
            + (ky - self.min_key.1).abs().max((ky - self.max_key.1).abs())
            + 1;
        let scan = |best: &mut f64, key: (i64, i64)| {
            if let Some(bucket) = self.buckets.get(&key) {
                for &i in bucket {
                    *best = best.min(dist2(&self.points[i], q).sqrt());
                }
            }
        };
        for ring in 0..=span {
            // every point in ring r is at least (r - 1) * cell away
            if ring > 0 && ((ring - 1) as f64 * self.cell) > best {
                break;
            }
            // past this size a linear scan is cheaper than more rings
            if (8 * ring) as usize > self.points.len() {
                return self.points.iter().map(|p| dist2(p, q)).fold(f64::INFINITY, f64::min).sqrt();
            }
            if ring == 0 {
                scan(&mut best, (kx, ky));
                continue;
            }
            for d in -ring..=ring {
                scan(&mut best, (kx + d, ky - ring));
                scan(&mut best, (kx + d, ky + ring));
            }
            for d in 1 - ring..ring {
                scan(&mut best, (kx - ring, ky + d));
                scan(&mut best, (kx + ring, ky + d));
            }
        }
        best
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}
