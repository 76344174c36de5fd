//! Maximum-profit matching of references to estimates.
//!
//! Shortest augmenting path Hungarian algorithm on the negated profits,
//! followed by a pass over the equality subgraph that picks the
//! lexicographically smallest optimal mapping so ties resolve the same way
//! on every run.

use crate::error::{Error, Result};

/// `rows × cols` profits (references × estimates), larger is better.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl ProfitMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyInput);
        }
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                channel: pos / cols,
                index: pos % cols,
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                actual: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn transpose(&self) -> Self {
        let values = (0..self.cols)
            .flat_map(|c| (0..self.rows).map(move |r| (r, c)))
            .map(|(r, c)| self.get(r, c))
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `mapping[k]` is the estimate matched to reference `k`, if any.
    pub mapping: Vec<Option<usize>>,
    /// Sum of the selected profits, in reference order.
    pub total: f64,
}

pub fn solve_assignment(profits: &ProfitMatrix) -> Assignment {
    let n = profits.rows.max(profits.cols);
    let min = profits.values.iter().copied().fold(f64::INFINITY, f64::min);
    let pad = min - 1.0;
    let cost: Vec<f64> = (0..n * n)
        .map(|i| {
            let (r, c) = (i / n, i % n);
            if r < profits.rows && c < profits.cols {
                -profits.get(r, c)
            } else {
                -pad
            }
        })
        .collect();

    let (mut row_to_col, u, v) = hungarian(&cost, n);
    lexicographic_tiebreak(&cost, n, &u, &v, &mut row_to_col);

    let mapping: Vec<Option<usize>> = (0..profits.rows)
        .map(|r| Some(row_to_col[r]).filter(|&c| c < profits.cols))
        .collect();
    let total = mapping
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| profits.get(r, c)))
        .sum();
    Assignment { mapping, total }
}

/// Minimum-cost perfect matching of a square matrix. Returns the row→column
/// map and the dual potentials (row, column).
fn hungarian(cost: &[f64], n: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Rewrites an optimal matching into the lexicographically smallest one
/// among the perfect matchings of the equality subgraph.
fn lexicographic_tiebreak(cost: &[f64], n: usize, u: &[f64], v: &[f64], row_to_col: &mut [usize]) {
    let scale = cost.iter().fold(1.0f64, |m, c| m.max(c.abs()));
    let tol = 1e-12 * scale * n as f64;
    let tight = |r: usize, c: usize| cost[r * n + c] - u[r] - v[c] <= tol;

    let mut col_to_row = vec![0; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut locked = vec![false; n];
    for i in 0..n {
        let current = row_to_col[i];
        for j in 0..current {
            if locked[j] || !tight(i, j) {
                continue;
            }
            // Row i takes j; the displaced owner must reach `current`
            // through tight edges among unlocked rows and columns.
            let mut visited = vec![false; n];
            visited[j] = true;
            let owner = col_to_row[j];
            let mut path = Vec::new();
            if augment(owner, current, &tight, &locked, &mut visited, &col_to_row, &mut path, n) {
                // `path` holds (row, new column) pairs from the deepest step up.
                for &(r, c) in &path {
                    row_to_col[r] = c;
                    col_to_row[c] = r;
                }
                row_to_col[i] = j;
                col_to_row[j] = i;
                break;
            }
        }
        locked[row_to_col[i]] = true;
    }
}

#[allow(clippy::too_many_arguments)]
fn augment(
    row: usize,
    target: usize,
    tight: &impl Fn(usize, usize) -> bool,
    locked: &[bool],
    visited: &mut [bool],
    col_to_row: &[usize],
    path: &mut Vec<(usize, usize)>,
    n: usize,
) -> bool {
    for c in 0..n {
        if locked[c] || visited[c] || !tight(row, c) {
            continue;
        }
        visited[c] = true;
        if c == target || augment(col_to_row[c], target, tight, locked, visited, col_to_row, path, n) {
            path.push((row, c));
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive search over injective maps; first maximum in lexicographic order.
    fn brute_force(p: &ProfitMatrix) -> (Vec<Option<usize>>, f64) {
        fn rec(
            p: &ProfitMatrix,
            row: usize,
            used: &mut Vec<bool>,
            cur: &mut Vec<Option<usize>>,
            best: &mut Option<(Vec<Option<usize>>, f64)>,
        ) {
            if row == p.rows() {
                if cur.iter().filter(|c| c.is_some()).count() != p.rows().min(p.cols()) {
                    return;
                }
                let total: f64 = cur
                    .iter()
                    .enumerate()
                    .filter_map(|(r, c)| c.map(|c| p.get(r, c)))
                    .sum();
                if best.as_ref().is_none_or(|(_, b)| total > *b) {
                    *best = Some((cur.clone(), total));
                }
                return;
            }
            for c in 0..p.cols() {
                if !used[c] {
                    used[c] = true;
                    cur.push(Some(c));
                    rec(p, row + 1, used, cur, best);
                    cur.pop();
                    used[c] = false;
                }
            }
            if p.rows() > p.cols() {
                cur.push(None);
                rec(p, row + 1, used, cur, best);
                cur.pop();
            }
        }
        let mut best = None;
        rec(p, 0, &mut vec![false; p.cols()], &mut Vec::new(), &mut best);
        best.unwrap()
    }

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ProfitMatrix {
        ProfitMatrix::new(r, c, (0..r * c).map(|_| rng.gen_range(-30.0..30.0)).collect()).unwrap()
    }

    #[test]
    fn identity_dominant() {
        let mut vals = vec![0.0; 9];
        for i in 0..3 {
            vals[i * 3 + i] = 10.0;
        }
        let a = solve_assignment(&ProfitMatrix::new(3, 3, vals).unwrap());
        assert_eq!(a.mapping, vec![Some(0), Some(1), Some(2)]);
        assert_eq!(a.total, 30.0);
    }

    #[test]
    fn swap() {
        let a = solve_assignment(&ProfitMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
        assert_eq!(a.mapping, vec![Some(1), Some(0)]);
        assert_eq!(a.total, 2.0);
    }

    #[test]
    fn five_by_five_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random(&mut rng, 5, 5);
        let a = solve_assignment(&p);
        let (map, total) = brute_force(&p);
        assert_eq!(a.mapping, map);
        assert_eq!(a.total, total);
    }

    #[test]
    fn rectangular_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (r, c) in [(2, 4), (4, 2), (1, 3), (3, 1), (3, 5)] {
            for _ in 0..20 {
                let p = random(&mut rng, r, c);
                let a = solve_assignment(&p);
                let (map, total) = brute_force(&p);
                assert_eq!(a.mapping, map, "{r}x{c}");
                assert_eq!(a.total, total);
            }
        }
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let a = solve_assignment(&ProfitMatrix::new(3, 3, vec![1.0; 9]).unwrap());
        assert_eq!(a.mapping, vec![Some(0), Some(1), Some(2)]);
        let p = ProfitMatrix::from_rows(&[
            vec![5.0, 5.0, 0.0],
            vec![5.0, 5.0, 0.0],
            vec![0.0, 0.0, 7.0],
        ])
        .unwrap();
        assert_eq!(solve_assignment(&p).mapping, vec![Some(0), Some(1), Some(2)]);
        let p = ProfitMatrix::from_rows(&[vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(solve_assignment(&p).mapping, vec![Some(0), Some(1)]);
    }

    #[test]
    fn constant_shift_keeps_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = random(&mut rng, 4, 4);
            let shifted = ProfitMatrix::new(4, 4, p.values.iter().map(|v| v + 17.5).collect()).unwrap();
            assert_eq!(solve_assignment(&p).mapping, solve_assignment(&shifted).mapping);
        }
    }

    #[test]
    fn transpose_inverts_mapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let p = random(&mut rng, 4, 4);
            let a = solve_assignment(&p);
            let b = solve_assignment(&p.transpose());
            for (r, c) in a.mapping.iter().enumerate() {
                assert_eq!(b.mapping[c.unwrap()], Some(r));
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ProfitMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
    }
}
