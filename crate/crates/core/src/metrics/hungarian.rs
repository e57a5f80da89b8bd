use crate::error::{Error, Result};

/// Dense integer cost matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} costs for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|&c| c < 0) {
            return Err(Error::input("assignment costs must be non-negative"));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::shape("ragged cost matrix"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }
}

/// Minimum-cost assignment of columns to distinct rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    /// Row given to each column; `None` only when there are more columns than
    /// rows.
    pub col_to_row: Vec<Option<usize>>,
    pub total: i64,
}

/// Solves the assignment problem in `O(n³)` with the shortest augmenting
/// path form of the Hungarian method. Rectangular inputs are padded with
/// zero-cost dummy rows or columns, which are dropped from the result.
pub fn hungarian(cost: &CostMatrix) -> Result<Assignment> {
    if cost.rows == 0 || cost.cols == 0 {
        return Err(Error::input("assignment over an empty cost matrix"));
    }
    let n = cost.rows.max(cost.cols);
    let at = |r: usize, c: usize| -> i64 {
        if r < cost.rows && c < cost.cols {
            cost.at(r, c)
        } else {
            0
        }
    };

    // 1-based potentials; way[j] is the previous column on the augmenting path
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for r in 1..=n {
        row_of[0] = r;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let col_to_row: Vec<Option<usize>> = (1..=cost.cols)
        .map(|c| Some(row_of[c] - 1).filter(|&r| r < cost.rows))
        .collect();
    let total = col_to_row
        .iter()
        .enumerate()
        .filter_map(|(c, r)| r.map(|r| cost.at(r, c)))
        .sum();
    Ok(Assignment { col_to_row, total })
}
