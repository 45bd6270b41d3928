//! From instruction/part similarities to an assembly order.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Error, Result};

/// Row-major feature tensor: `rows × patches × dim`. Plain matrices have no
/// patch axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    patches: Option<usize>,
    dim: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::build(rows, None, dim, values)
    }

    pub fn with_patches(rows: usize, patches: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        Self::build(rows, Some(patches), dim, values)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return invalid_arg("ragged feature rows");
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    fn build(rows: usize, patches: Option<usize>, dim: usize, values: Vec<f64>) -> Result<Self> {
        let k = patches.unwrap_or(1);
        if values.len() != rows * k * dim {
            return invalid_arg(format!(
                "feature tensor expects {} values, got {}",
                rows * k * dim,
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid_arg("non-finite feature value");
        }
        Ok(Self {
            rows,
            patches,
            dim,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn patches(&self) -> Option<usize> {
        self.patches
    }

    /// Feature vector of `row`; only for matrices without a patch axis.
    pub fn row(&self, row: usize) -> &[f64] {
        assert!(self.patches.is_none(), "row() on a patched tensor");
        &self.values[row * self.dim..(row + 1) * self.dim]
    }

    pub fn patch(&self, row: usize, patch: usize) -> &[f64] {
        let k = self.patches.unwrap_or(1);
        let start = (row * k + patch) * self.dim;
        &self.values[start..start + self.dim]
    }
}

/// Element-wise maximum over the patch axis.
pub fn maxpool_patches(instr: &FeatureMatrix) -> Result<FeatureMatrix> {
    let k = match instr.patches {
        None => return Ok(instr.clone()),
        Some(0) => return invalid_arg("patch axis is empty"),
        Some(k) => k,
    };
    let mut out = Vec::with_capacity(instr.rows * instr.dim);
    for r in 0..instr.rows {
        let mut acc = instr.patch(r, 0).to_vec();
        for p in 1..k {
            for (a, v) in acc.iter_mut().zip(instr.patch(r, p)) {
                *a = a.max(*v);
            }
        }
        out.extend(acc);
    }
    FeatureMatrix::new(instr.rows, instr.dim, out)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return invalid_arg("feature dimensions differ");
    }
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return invalid_arg("cosine similarity of a zero vector");
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// `n_steps × n_parts` similarity scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return invalid_arg("similarity matrix size mismatch");
        }
        if values.iter().any(|v| v.is_nan()) {
            return invalid_arg("similarity matrix contains NaN");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid_arg("similarity matrix contains a non-finite value");
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid_arg("ragged similarity rows");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Cosine similarities between (patch-pooled) instruction features and
    /// part features.
    pub fn from_features(instr: &FeatureMatrix, parts: &FeatureMatrix) -> Result<Self> {
        let instr = maxpool_patches(instr)?;
        let parts = maxpool_patches(parts)?;
        let mut values = Vec::with_capacity(instr.rows() * parts.rows());
        for i in 0..instr.rows() {
            for j in 0..parts.rows() {
                values.push(cosine_similarity(instr.row(i), parts.row(j))?);
            }
        }
        Self::new(instr.rows(), parts.rows(), values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, step: usize, part: usize) -> f64 {
        self.values[step * self.cols + part]
    }

    /// Parses whitespace-separated decimals, one row per non-blank line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    location: format!("line {}", i + 1),
                    message: e.to_string(),
                })?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| format!("{}", self.get(r, c))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderResult {
    /// `order[step]` is the part placed at that step.
    pub order: Vec<usize>,
    pub permutation_matrix: Vec<Vec<u8>>,
}

/// Minimum-cost assignment (shortest augmenting paths with potentials),
/// `O(n³)`. Returns the column assigned to each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
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
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if col_owner[j] > 0 {
            assignment[col_owner[j] - 1] = j - 1;
        }
    }
    assignment
}

fn best_total(sim: &SimilarityMatrix, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| cols.iter().map(|&c| -sim.get(r, c)).collect())
        .collect();
    let assign = min_cost_assignment(&cost);
    rows.iter()
        .zip(&assign)
        .map(|(&r, &a)| sim.get(r, cols[a]))
        .sum()
}

/// Total similarity `Σ sim[step, order[step]]`, summed in step order.
pub fn assignment_score(sim: &SimilarityMatrix, order: &[usize]) -> f64 {
    order.iter().enumerate().map(|(s, &p)| sim.get(s, p)).sum()
}

/// Maximum-similarity one-to-one matching of steps to parts. Among optimal
/// matchings the lexicographically smallest order is returned.
pub fn hungarian_match(sim: &SimilarityMatrix) -> Result<OrderResult> {
    if sim.rows != sim.cols {
        return invalid_arg(format!(
            "similarity matrix must be square, got {}×{}",
            sim.rows, sim.cols
        ));
    }
    let n = sim.rows;
    if n == 0 {
        return invalid_arg("empty similarity matrix");
    }
    let scale = 1.0 + sim.values.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
    let tol = 1e-12 * scale;

    let mut free_cols: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    for step in 0..n {
        let rest_rows: Vec<usize> = (step + 1..n).collect();
        let target = best_total(sim, &(step..n).collect::<Vec<_>>(), &free_cols);
        let mut chosen = None;
        for (k, &c) in free_cols.iter().enumerate() {
            let mut others = free_cols.clone();
            others.remove(k);
            let value = sim.get(step, c) + best_total(sim, &rest_rows, &others);
            if value >= target - tol {
                chosen = Some(k);
                break;
            }
        }
        // the optimum is always attained by some column
        let k = chosen.expect("optimal column exists");
        order.push(free_cols.remove(k));
    }
    let permutation_matrix = order_to_matrix(&order)?;
    Ok(OrderResult {
        order,
        permutation_matrix,
    })
}

/// `M[step][order[step]] = 1`.
pub fn order_to_matrix(order: &[usize]) -> Result<Vec<Vec<u8>>> {
    let n = order.len();
    let mut seen = vec![false; n];
    for &p in order {
        if p >= n || seen[p] {
            return invalid_arg("order is not a permutation");
        }
        seen[p] = true;
    }
    Ok(order
        .iter()
        .map(|&p| (0..n).map(|c| u8::from(c == p)).collect())
        .collect())
}

pub fn matrix_to_order(m: &[Vec<u8>]) -> Result<Vec<usize>> {
    let n = m.len();
    let mut order = Vec::with_capacity(n);
    for row in m {
        if row.len() != n {
            return invalid_arg("permutation matrix must be square");
        }
        let ones: Vec<usize> = row
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0)
            .map(|(i, _)| i)
            .collect();
        if ones.len() != 1 || row.iter().any(|v| *v > 1) {
            return invalid_arg("permutation matrix row must hold exactly one 1");
        }
        order.push(ones[0]);
    }
    order_to_matrix(&order)?;
    Ok(order)
}
