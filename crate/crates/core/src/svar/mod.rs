//! B-type structural VAR: restriction masks from filtered graphs, multistart
//! maximum likelihood for the structural matrix, and impulse responses.
//!
//! The filtered graph pins the sparsity of B: diagonals are always free, a
//! directed edge `j -> i` frees `B[i][j]`, an undirected edge frees both
//! orientations, and everything else is restricted to zero. The likelihood
//! is non-convex, so estimation fans out over random starting points and
//! chains warm restarts within each run; the best final value wins.
//!
//! The likelihood is invariant to flipping the sign of any column of B, so
//! estimates are normalized to a nonnegative diagonal before they are
//! returned; comparisons against a known truth must apply the same
//! normalization.

mod loglik;

pub use loglik::{svar_loglik, svar_loglik_gradient};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::optim::{multistart_minimize, Method, OptimOptions, RunRecord};
use crate::planar::{identification_check, FilteredGraph, GraphKind};
use crate::scalar::Scalar;
use crate::var::{check_stability, wold_coefficients, VarModel};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which entries of B are estimable. Row i / column j follows the
/// convention `u_i = sum_j B[i][j] eps_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictionMask {
    n: usize,
    free: Vec<bool>,
    n_free: usize,
}

impl RestrictionMask {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn is_free(&self, i: usize, j: usize) -> bool {
        self.free[i * self.n + j]
    }

    /// Collect the free entries of `b` in row-major order.
    pub fn pack<S: Scalar>(&self, b: &Matrix<S>) -> Vec<S> {
        let mut theta = Vec::with_capacity(self.n_free);
        for i in 0..self.n {
            for j in 0..self.n {
                if self.is_free(i, j) {
                    theta.push(b[(i, j)]);
                }
            }
        }
        theta
    }

    /// Materialize B from packed free parameters; masked entries are zero.
    pub fn unpack<S: Scalar>(&self, theta: &[S]) -> Matrix<S> {
        assert_eq!(theta.len(), self.n_free);
        let mut b = Matrix::<S>::zeros(self.n, self.n);
        let mut k = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if self.is_free(i, j) {
                    b[(i, j)] = theta[k];
                    k += 1;
                }
            }
        }
        b
    }
}

/// Build the restriction mask implied by a filtered graph, refusing graphs
/// whose restriction count cannot identify the model.
pub fn restriction_mask<S: Scalar>(graph: &FilteredGraph<S>) -> Result<RestrictionMask> {
    let n = graph.n();
    let report = identification_check(graph.kind(), n);
    if !report.identified {
        return Err(Error::Identification { report });
    }
    let mut free = vec![false; n * n];
    for i in 0..n {
        free[i * n + i] = true;
    }
    for e in graph.edges() {
        // edge source -> target frees B[target][source]
        free[e.target * n + e.source] = true;
        if !graph.directed() {
            free[e.source * n + e.target] = true;
        }
    }
    let n_free = free.iter().filter(|&&f| f).count();
    debug_assert_eq!(
        n_free,
        match graph.kind() {
            GraphKind::Pcpg => 3 * (n - 2) + n,
            GraphKind::Pmfg => 2 * 3 * (n - 2) + n,
            GraphKind::Mst => 2 * (n - 1) + n,
        }
    );
    Ok(RestrictionMask { n, free, n_free })
}

/// Multistart protocol settings. Starting points depend only on the base
/// seed and the run index, so enlarging `n_starts` never changes the runs
/// already taken (best-of is monotone in the number of starts).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvarOptions {
    pub n_starts: usize,
    pub n_restarts: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl SvarOptions {
    pub fn new(seed: u64) -> Self {
        SvarOptions {
            n_starts: 25,
            n_restarts: 30,
            methods: vec![Method::NelderMead, Method::Bfgs],
            seed,
            max_iter: 150,
            tol: 1e-9,
        }
    }
}

/// Estimated structural model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvarModel<S: Scalar> {
    pub var: VarModel<S>,
    pub mask: RestrictionMask,
    /// Structural matrix, masked entries exactly zero, diagonal >= 0.
    pub b: Matrix<S>,
    pub loglik: S,
    pub diagnostics: Vec<RunRecord<S>>,
}

impl<S: Scalar> SvarModel<S> {
    pub fn to_json(&self) -> Result<String>
    where
        S: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        S: for<'de> Deserialize<'de>,
    {
        Ok(serde_json::from_str(text)?)
    }
}

/// Maximize the structural likelihood for a fitted VAR under a mask.
pub fn estimate_svar_multistart<S: Scalar>(
    var: &VarModel<S>,
    mask: &RestrictionMask,
    options: &SvarOptions,
) -> Result<SvarModel<S>> {
    if mask.n() != var.n() {
        return Err(Error::Schema(format!(
            "mask is {}x{} but the VAR has {} nodes",
            mask.n(),
            mask.n(),
            var.n()
        )));
    }
    let (stable, radius) = check_stability(var);
    if !stable {
        return Err(Error::Estimation(format!(
            "VAR is unstable (companion spectral radius {radius}); refusing structural step"
        )));
    }
    let sigma_ml = var.sigma_u_ml();
    let (b, loglik, diagnostics) = estimate_b_multistart(&sigma_ml, var.t_eff(), mask, options)?;
    Ok(SvarModel {
        var: var.clone(),
        mask: mask.clone(),
        b,
        loglik,
        diagnostics,
    })
}

/// Lower-level entry: maximize the likelihood for a given ML covariance and
/// sample size. Returns the sign-normalized B, its log-likelihood, and the
/// per-run diagnostics.
pub fn estimate_b_multistart<S: Scalar>(
    sigma_ml: &Matrix<S>,
    t: usize,
    mask: &RestrictionMask,
    options: &SvarOptions,
) -> Result<(Matrix<S>, S, Vec<RunRecord<S>>)> {
    let n = mask.n();
    assert_eq!(sigma_ml.rows(), n);
    if options.n_starts == 0 || options.n_restarts == 0 || options.methods.is_empty() {
        return Err(Error::Config(
            "multistart needs at least one start, restart, and method".into(),
        ));
    }

    let penalty = S::from_f64_lossy(1e12);
    let objective = move |theta: &[S]| -> S {
        let b = mask.unpack(theta);
        match svar_loglik(&b, sigma_ml, t) {
            Ok(ll) if ll.is_finite() => -ll,
            _ => penalty,
        }
    };
    let gradient = move |theta: &[S]| -> Vec<S> {
        let b = mask.unpack(theta);
        match svar_loglik_gradient(&b, sigma_ml, t) {
            Ok(g) => mask.pack(&g.scale(-S::one())),
            Err(_) => vec![S::zero(); mask.n_free()],
        }
    };

    let starts: Vec<(u64, Vec<S>)> = (0..options.n_starts)
        .map(|run| {
            let run_seed = options
                .seed
                .wrapping_add((run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
            let mut theta = Vec::with_capacity(mask.n_free());
            for i in 0..n {
                for j in 0..n {
                    if mask.is_free(i, j) {
                        if i == j {
                            theta.push(sigma_ml[(i, i)].max(S::from_f64_lossy(1e-8)).sqrt());
                        } else {
                            theta.push(S::from_f64_lossy(rng.random_range(-0.5..0.5)));
                        }
                    }
                }
            }
            (run_seed, theta)
        })
        .collect();

    let opts = OptimOptions {
        max_iter: options.max_iter,
        tol: S::from_f64_lossy(options.tol),
    };
    let (best_theta, best_f, records) = multistart_minimize(
        &objective,
        Some(&gradient),
        &starts,
        &options.methods,
        options.n_restarts,
        opts,
    )?;
    if best_f >= penalty {
        return Err(Error::Estimation(
            "every multistart run ended in the singular-penalty region".into(),
        ));
    }

    let mut b = mask.unpack(&best_theta);
    normalize_column_signs(&mut b, mask);
    let loglik = svar_loglik(&b, sigma_ml, t)?;
    Ok((b, loglik, records))
}

/// Flip the sign of free entries in any column whose diagonal is negative.
/// The likelihood is invariant; masked zeros are left untouched so they
/// stay exactly zero.
fn normalize_column_signs<S: Scalar>(b: &mut Matrix<S>, mask: &RestrictionMask) {
    let n = mask.n();
    for j in 0..n {
        if b[(j, j)] < S::zero() {
            for i in 0..n {
                if mask.is_free(i, j) {
                    b[(i, j)] = -b[(i, j)];
                }
            }
        }
    }
}

/// Lower-triangular factor P with `P P' = Sigma` for orthogonalized
/// (recursive) impulse responses. The result depends on the node ordering.
pub fn cholesky_orthogonalize<S: Scalar>(sigma: &Matrix<S>) -> Result<Matrix<S>> {
    if !sigma.is_square() {
        return Err(Error::Domain("covariance must be square".into()));
    }
    let scale = sigma.max_abs().max(S::one());
    if !sigma.is_symmetric(scale * S::from_f64_lossy(1e-10)) {
        return Err(Error::Domain("covariance must be symmetric".into()));
    }
    sigma.cholesky()
}

/// How the impact matrix was identified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShockKind {
    StructuralB,
    CholeskyP,
}

/// Horizon-indexed responses: `theta[s][(i, j)]` is the response of node i,
/// s periods after a one-unit structural shock at node j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfResult<S: Scalar> {
    pub labels: Vec<String>,
    pub horizon: usize,
    pub theta: Vec<Matrix<S>>,
    pub shock_kind: ShockKind,
}

impl<S: Scalar> IrfResult<S> {
    pub fn to_json(&self) -> Result<String>
    where
        S: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self>
    where
        S: for<'de> Deserialize<'de>,
    {
        Ok(serde_json::from_str(text)?)
    }

    /// Long-format CSV: `node,epicenter,horizon,value`, ordered by
    /// (epicenter, horizon, node).
    pub fn to_csv(&self) -> String {
        let n = self.labels.len();
        let mut out = String::from("node,epicenter,horizon,value\n");
        for epi in 0..n {
            for (h, theta) in self.theta.iter().enumerate() {
                for node in 0..n {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        self.labels[node],
                        self.labels[epi],
                        h,
                        theta[(node, epi)]
                    ));
                }
            }
        }
        out
    }
}

/// Impulse responses `theta[s] = Phi_s * impact` for `s = 0..=horizon`.
/// The impact matrix is the structural B (unit structural shocks) or the
/// Cholesky factor P (recursive orthogonalization).
pub fn structural_irf<S: Scalar>(
    var: &VarModel<S>,
    impact: &Matrix<S>,
    horizon: usize,
    shock_kind: ShockKind,
) -> IrfResult<S> {
    let phi = wold_coefficients(var, horizon);
    let theta = phi.iter().map(|p| p.matmul(impact)).collect();
    IrfResult {
        labels: var.labels().to_vec(),
        horizon,
        theta,
        shock_kind,
    }
}

/// One row of a shock-propagation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow<S> {
    pub node: String,
    pub horizon: usize,
    pub response: S,
}

/// Responses of every node to a unit shock at `epicenter`, at the requested
/// horizons, sorted by horizon and then by descending magnitude.
pub fn shock_trace<S: Scalar>(
    irf: &IrfResult<S>,
    epicenter: &str,
    horizons: &[usize],
) -> Result<Vec<TraceRow<S>>> {
    let j = irf
        .labels
        .iter()
        .position(|l| l == epicenter)
        .ok_or_else(|| Error::Lookup(format!("unknown epicenter label '{epicenter}'")))?;
    let mut rows = Vec::with_capacity(horizons.len() * irf.labels.len());
    for &h in horizons {
        if h > irf.horizon {
            return Err(Error::Domain(format!(
                "horizon {h} exceeds computed horizon {}",
                irf.horizon
            )));
        }
        let mut at_h: Vec<(usize, S)> = (0..irf.labels.len())
            .map(|i| (i, irf.theta[h][(i, j)]))
            .collect();
        at_h.sort_by(|a, b| {
            b.1.abs()
                .partial_cmp(&a.1.abs())
                .expect("responses are finite")
                .then(a.0.cmp(&b.0))
        });
        for (i, response) in at_h {
            rows.push(TraceRow {
                node: irf.labels[i].clone(),
                horizon: h,
                response,
            });
        }
    }
    Ok(rows)
}
