//! Minimum-cost one-to-one assignment (Hungarian method with potentials).

/// Row/column pairs of an optimal assignment and the sum of their costs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment {
    /// Sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Solves the rectangular assignment problem over `cost` (row-major rows of
/// equal length). Covers `min(rows, cols)` pairs. Rectangular inputs are
/// padded to square with a constant cost larger than any real entry; pad
/// pairs are dropped from the result.
///
/// Panics if rows have unequal length or an entry is not finite.
pub fn solve_assignment(cost: &[Vec<f64>]) -> Assignment {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Assignment::default();
    }
    assert!(cost.iter().all(|r| r.len() == cols), "cost matrix rows must have equal length");
    assert!(cost.iter().flatten().all(|c| c.is_finite()), "cost matrix entries must be finite");

    let n = rows.max(cols);
    let max_abs = cost.iter().flatten().fold(0.0f64, |m, c| m.max(c.abs()));
    let pad = 10.0 * max_abs + 1.0;
    let at = |i: usize, j: usize| if i < rows && j < cols { cost[i][j] } else { pad };

    // 1-based potentials; column 0 is a virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = at(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = (1..=n)
        .filter(|&j| owner[j] != 0)
        .map(|j| (owner[j] - 1, j - 1))
        .filter(|&(i, j)| i < rows && j < cols)
        .collect();
    pairs.sort_unstable();
    let total_cost = pairs.iter().map(|&(i, j)| cost[i][j]).sum();
    Assignment { pairs, total_cost }
}
