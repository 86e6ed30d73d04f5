//! Correlation structure: Pearson matrix, three-way partial correlations,
//! and the directed influence matrix that feeds the PCPG filter.
//!
//! The influence of node `j` on node `i` is the average drop in `i`'s
//! correlations when `j` is partialled out:
//! `D(i,j) = mean_k [ C(i,k) - PC(i,k|j) ]`. The mean runs over `k` distinct
//! from both `i` and `j` (N-2 terms); conventions that write the prefactor
//! as `1/(N-1)` count the degenerate `k = i` term, which involves the unit
//! diagonal and is excluded here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// Symmetric sample correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix<S: Scalar> {
    labels: Vec<String>,
    values: Matrix<S>,
}

impl<S: Scalar> CorrelationMatrix<S> {
    /// Wrap a precomputed correlation matrix, validating symmetry, the unit
    /// diagonal, and the [-1, 1] range.
    pub fn new(labels: Vec<String>, values: Matrix<S>) -> Result<Self> {
        if values.rows() != labels.len() || !values.is_square() {
            return Err(Error::Schema(format!(
                "correlation matrix {}x{} does not match {} labels",
                values.rows(),
                values.cols(),
                labels.len()
            )));
        }
        let tol = S::from_f64_lossy(1e-12);
        for i in 0..values.rows() {
            if (values[(i, i)] - S::one()).abs() > tol {
                return Err(Error::Domain(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..values.cols() {
                let v = values[(i, j)];
                if !v.is_finite() || v.abs() > S::one() + tol {
                    return Err(Error::Domain(format!(
                        "correlation ({i},{j}) = {v} outside [-1, 1]"
                    )));
                }
                if (v - values[(j, i)]).abs() > tol {
                    return Err(Error::Domain(format!("asymmetry at ({i},{j})")));
                }
            }
        }
        Ok(CorrelationMatrix { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &Matrix<S> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[(i, j)]
    }
}

/// Directed influence matrix; `D(i,j)` is the average influence of node `j`
/// on node `i`. The diagonal is undefined and stored as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceMatrix<S: Scalar> {
    labels: Vec<String>,
    values: Matrix<S>,
}

impl<S: Scalar> InfluenceMatrix<S> {
    pub fn new(labels: Vec<String>, values: Matrix<S>) -> Result<Self> {
        if values.rows() != labels.len() || !values.is_square() {
            return Err(Error::Schema(format!(
                "influence matrix {}x{} does not match {} labels",
                values.rows(),
                values.cols(),
                labels.len()
            )));
        }
        if !values.all_finite() {
            return Err(Error::Domain(
                "influence matrix has non-finite entries".into(),
            ));
        }
        Ok(InfluenceMatrix { labels, values })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &Matrix<S> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[(i, j)]
    }
}

/// Sample Pearson correlation matrix of a panel (one pass over each pair,
/// mirrored exactly so symmetry holds bit-for-bit).
pub fn pearson_matrix<S: Scalar>(panel: &TimeSeriesPanel<S>) -> Result<CorrelationMatrix<S>> {
    let n = panel.n_nodes();
    let t = panel.n_obs();
    let tf = S::from_usize_lossy(t);

    let mut centered: Vec<Vec<S>> = Vec::with_capacity(n);
    let mut sds: Vec<S> = Vec::with_capacity(n);
    for i in 0..n {
        let row = panel.series(i);
        let mean = row.iter().copied().sum::<S>() / tf;
        let c: Vec<S> = row.iter().map(|&x| x - mean).collect();
        let var = c.iter().map(|&x| x * x).sum::<S>() / tf;
        if var <= S::zero() {
            return Err(Error::Domain(format!(
                "node '{}' has zero sample variance",
                panel.labels()[i]
            )));
        }
        sds.push(var.sqrt());
        centered.push(c);
    }

    let mut values = Matrix::<S>::zeros(n, n);
    for i in 0..n {
        values[(i, i)] = S::one();
        for j in 0..i {
            let cov = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(&a, &b)| a * b)
                .sum::<S>()
                / tf;
            let r = (cov / (sds[i] * sds[j])).max(-S::one()).min(S::one());
            values[(i, j)] = r;
            values[(j, i)] = r;
        }
    }
    CorrelationMatrix::new(panel.labels().to_vec(), values)
}

/// Partial correlation of `i` and `j` given `k`:
/// `(C_ij - C_ik C_jk) / (sqrt(1 - C_ik^2) sqrt(1 - C_jk^2))`.
pub fn partial_correlation<S: Scalar>(
    c: &CorrelationMatrix<S>,
    i: usize,
    j: usize,
    k: usize,
) -> Result<S> {
    assert!(i != j && j != k && i != k, "indices must be distinct");
    let cik = c.get(i, k);
    let cjk = c.get(j, k);
    let near_one = S::one() - S::from_f64_lossy(1e-12);
    if cik.abs() >= near_one || cjk.abs() >= near_one {
        return Err(Error::Singularity(format!(
            "conditioning node {k} is perfectly correlated with node {} \
             (C[{i},{k}] = {cik}, C[{j},{k}] = {cjk})",
            if cik.abs() >= near_one { i } else { j }
        )));
    }
    let denom = ((S::one() - cik * cik) * (S::one() - cjk * cjk)).sqrt();
    Ok((c.get(i, j) - cik * cjk) / denom)
}

/// Influence matrix of a panel: `D(i,j) = mean_{k != i,j} [C_ik - PC_ik|j]`.
///
/// Singularities in any underlying partial correlation are propagated with
/// the offending `(i, k, j)` triple.
pub fn influence_matrix<S: Scalar>(panel: &TimeSeriesPanel<S>) -> Result<InfluenceMatrix<S>> {
    let n = panel.n_nodes();
    if n < 3 {
        return Err(Error::Domain(format!(
            "influence matrix needs at least 3 nodes, got {n}"
        )));
    }
    let c = pearson_matrix(panel)?;
    let mut values = Matrix::<S>::zeros(n, n);
    let denom = S::from_usize_lossy(n - 2);
    for j in 0..n {
        for i in 0..n {
            if i == j {
                continue;
            }
            let mut acc = S::zero();
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let pc = partial_correlation(&c, i, k, j).map_err(|e| {
                    Error::Singularity(format!("influence d({i},{k}|{j}) undefined: {e}"))
                })?;
                acc += c.get(i, k) - pc;
            }
            values[(i, j)] = acc / denom;
        }
    }
    InfluenceMatrix::new(panel.labels().to_vec(), values)
}

/// Labeled CSV rendering of a square matrix (shared by correlation and
/// influence exports).
pub fn matrix_to_labeled_csv<S: Scalar>(labels: &[String], values: &Matrix<S>) -> String {
    let mut out = String::new();
    out.push_str("node");
    for l in labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        out.push_str(l);
        for j in 0..values.cols() {
            out.push(',');
            out.push_str(&format!("{}", values[(i, j)]));
        }
        out.push('\n');
    }
    out
}
