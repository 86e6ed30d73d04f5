//! Reduced-form VAR estimation: per-equation least squares, BIC lag
//! selection, moving-average (Wold) coefficients, and companion-matrix
//! stability.
//!
//! An intercept is included by default so panels need not be demeaned; the
//! coefficient recursion and everything downstream work on deviations, so
//! the intercept never enters impulse responses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, Matrix};
use crate::panel::TimeSeriesPanel;
use crate::scalar::Scalar;

/// Estimated VAR(p) with residual second moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel<S: Scalar> {
    labels: Vec<String>,
    p: usize,
    intercept: Vec<S>,
    /// Coefficient matrices A_1 .. A_p; row i is the equation for node i.
    coefficients: Vec<Matrix<S>>,
    /// Degrees-of-freedom-adjusted residual covariance.
    sigma_u: Matrix<S>,
    t_eff: usize,
    /// N x T_eff residuals.
    residuals: Matrix<S>,
}

impl<S: Scalar> VarModel<S> {
    /// Assemble a model from known parts (simulation studies, imports).
    pub fn from_parts(
        labels: Vec<String>,
        intercept: Vec<S>,
        coefficients: Vec<Matrix<S>>,
        sigma_u: Matrix<S>,
        t_eff: usize,
        residuals: Matrix<S>,
    ) -> Result<Self> {
        let n = labels.len();
        if coefficients.is_empty() {
            return Err(Error::Schema("need at least one coefficient matrix".into()));
        }
        for a in &coefficients {
            if a.rows() != n || a.cols() != n {
                return Err(Error::Schema(format!(
                    "coefficient matrix is {}x{}, expected {n}x{n}",
                    a.rows(),
                    a.cols()
                )));
            }
        }
        if intercept.len() != n || sigma_u.rows() != n || !sigma_u.is_square() {
            return Err(Error::Schema("intercept/covariance shape mismatch".into()));
        }
        let p = coefficients.len();
        Ok(VarModel {
            labels,
            p,
            intercept,
            coefficients,
            sigma_u,
            t_eff,
            residuals,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn lag_order(&self) -> usize {
        self.p
    }

    pub fn intercept(&self) -> &[S] {
        &self.intercept
    }

    pub fn coefficients(&self) -> &[Matrix<S>] {
        &self.coefficients
    }

    pub fn sigma_u(&self) -> &Matrix<S> {
        &self.sigma_u
    }

    pub fn t_eff(&self) -> usize {
        self.t_eff
    }

    pub fn residuals(&self) -> &Matrix<S> {
        &self.residuals
    }

    /// Maximum-likelihood residual covariance (divisor T_eff), the
    /// convention the structural likelihood expects.
    pub fn sigma_u_ml(&self) -> Matrix<S> {
        let n = self.n();
        let t = S::from_usize_lossy(self.t_eff);
        let mut out = Matrix::<S>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = self
                    .residuals
                    .row(i)
                    .iter()
                    .zip(self.residuals.row(j))
                    .map(|(&a, &b)| a * b)
                    .sum::<S>()
                    / t;
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }

    /// Response of the homogeneous system to an initial impulse vector:
    /// column t is x_t with x_0 = shock and no further innovations. This is
    /// a direct simulation, independent of the Wold recursion, and serves as
    /// its oracle.
    pub fn impulse_simulation(&self, shock: &[S], horizon: usize) -> Matrix<S> {
        let n = self.n();
        assert_eq!(shock.len(), n);
        let mut path = Matrix::<S>::zeros(n, horizon + 1);
        for (i, &s) in shock.iter().enumerate() {
            path[(i, 0)] = s;
        }
        for t in 1..=horizon {
            for (lag, a) in self.coefficients.iter().enumerate() {
                let src = t as isize - 1 - lag as isize;
                if src < 0 {
                    break;
                }
                let src = src as usize;
                for i in 0..n {
                    let mut acc = path[(i, t)];
                    for j in 0..n {
                        acc += a[(i, j)] * path[(j, src)];
                    }
                    path[(i, t)] = acc;
                }
            }
        }
        path
    }

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

/// Fit a VAR(p) by least squares with an intercept.
pub fn fit_var<S: Scalar>(panel: &TimeSeriesPanel<S>, p: usize) -> Result<VarModel<S>> {
    fit_var_with(panel, p, true)
}

/// Least-squares VAR fit with the intercept optional.
pub fn fit_var_with<S: Scalar>(
    panel: &TimeSeriesPanel<S>,
    p: usize,
    intercept: bool,
) -> Result<VarModel<S>> {
    if p == 0 {
        return Err(Error::Estimation("lag order must be at least 1".into()));
    }
    let n = panel.n_nodes();
    let t = panel.n_obs();
    if t <= n * p + p + 1 {
        return Err(Error::Estimation(format!(
            "panel too short for VAR({p}) on {n} nodes: T = {t} needs T > {}",
            n * p + p + 1
        )));
    }
    let (coefficients, icept, residuals, t_eff, k) = ols_window(panel, p, p, intercept)?;
    let dof = t_eff - k;
    let div = S::from_usize_lossy(dof);
    let mut sigma_u = Matrix::<S>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s = residuals
                .row(i)
                .iter()
                .zip(residuals.row(j))
                .map(|(&a, &b)| a * b)
                .sum::<S>()
                / div;
            sigma_u[(i, j)] = s;
            sigma_u[(j, i)] = s;
        }
    }
    Ok(VarModel {
        labels: panel.labels().to_vec(),
        p,
        intercept: icept,
        coefficients,
        sigma_u,
        t_eff,
        residuals,
    })
}

/// Shared OLS core: regress x_t on lags 1..p for targets t in
/// `t_start..T`. Returns (A_1..A_p, intercept, residuals, T_eff, regressor
/// count).
#[allow(clippy::type_complexity)]
fn ols_window<S: Scalar>(
    panel: &TimeSeriesPanel<S>,
    p: usize,
    t_start: usize,
    intercept: bool,
) -> Result<(Vec<Matrix<S>>, Vec<S>, Matrix<S>, usize, usize)> {
    let n = panel.n_nodes();
    let t = panel.n_obs();
    let t_eff = t - t_start;
    let k = n * p + usize::from(intercept);
    if t_eff <= k {
        return Err(Error::Estimation(format!(
            "effective sample {t_eff} too small for {k} regressors"
        )));
    }
    let data = panel.data();

    // regressor row for target time point tt
    let z_row = |tt: usize| -> Vec<S> {
        let mut z = Vec::with_capacity(k);
        if intercept {
            z.push(S::one());
        }
        for lag in 1..=p {
            for j in 0..n {
                z.push(data[(j, tt - lag)]);
            }
        }
        z
    };

    // normal equations G b = h, shared across equations
    let mut g = Matrix::<S>::zeros(k, k);
    let mut h = Matrix::<S>::zeros(k, n);
    for tt in t_start..t {
        let z = z_row(tt);
        for a in 0..k {
            for b in 0..=a {
                let inc = z[a] * z[b];
                g[(a, b)] += inc;
            }
            for i in 0..n {
                h[(a, i)] += z[a] * data[(i, tt)];
            }
        }
    }
    for a in 0..k {
        for b in (a + 1)..k {
            g[(a, b)] = g[(b, a)];
        }
    }

    let beta = g.solve_spd(&h).map_err(|e| {
        let msg = e.to_string();
        let which = msg
            .split("pivot ")
            .nth(1)
            .and_then(|s| s.split(|c: char| !c.is_ascii_digit()).next())
            .and_then(|s| s.parse::<usize>().ok())
            .map(|idx| regressor_name(panel.labels(), idx, intercept))
            .unwrap_or_else(|| "unknown regressor".to_string());
        Error::Estimation(format!(
            "rank-deficient regressor matrix; collinearity at {which}"
        ))
    })?;

    let mut icept = vec![S::zero(); n];
    if intercept {
        for i in 0..n {
            icept[i] = beta[(0, i)];
        }
    }
    let off = usize::from(intercept);
    let coefficients: Vec<Matrix<S>> = (0..p)
        .map(|lag| Matrix::from_fn(n, n, |i, j| beta[(off + lag * n + j, i)]))
        .collect();

    let mut residuals = Matrix::<S>::zeros(n, t_eff);
    for (col, tt) in (t_start..t).enumerate() {
        let z = z_row(tt);
        for i in 0..n {
            let mut fitted = S::zero();
            for (a, &za) in z.iter().enumerate() {
                fitted += beta[(a, i)] * za;
            }
            residuals[(i, col)] = data[(i, tt)] - fitted;
        }
    }
    Ok((coefficients, icept, residuals, t_eff, k))
}

fn regressor_name(labels: &[String], idx: usize, intercept: bool) -> String {
    if intercept && idx == 0 {
        return "the intercept".to_string();
    }
    let idx = idx - usize::from(intercept);
    let n = labels.len();
    let lag = idx / n + 1;
    let node = idx % n;
    format!("lag {lag} of node '{}'", labels[node])
}

/// BIC lag selection over `1..=p_max`, every candidate scored on the common
/// sample of the last `T - p_max` observations:
/// `BIC(p) = ln det Sigma_ml(p) + (ln T* / T*) * p * N^2`. Ties go to the
/// smaller order.
pub fn select_lag_bic<S: Scalar>(panel: &TimeSeriesPanel<S>, p_max: usize) -> Result<usize> {
    if p_max == 0 {
        return Err(Error::Estimation("p_max must be at least 1".into()));
    }
    let n = panel.n_nodes();
    let t = panel.n_obs();
    let t_star = t.saturating_sub(p_max);
    if t_star <= n * p_max + 1 {
        return Err(Error::Estimation(format!(
            "panel too short to compare lags up to {p_max}"
        )));
    }
    let t_star_f = S::from_usize_lossy(t_star);
    let penalty_unit = t_star_f.ln() / t_star_f;

    let mut best: Option<(S, usize)> = None;
    for p in 1..=p_max {
        let (_, _, residuals, t_eff, _) = ols_window(panel, p, p_max, true)?;
        debug_assert_eq!(t_eff, t_star);
        let mut sigma = Matrix::<S>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = residuals
                    .row(i)
                    .iter()
                    .zip(residuals.row(j))
                    .map(|(&a, &b)| a * b)
                    .sum::<S>()
                    / t_star_f;
                sigma[(i, j)] = s;
                sigma[(j, i)] = s;
            }
        }
        let lu = sigma.lu();
        if lu.is_singular() {
            return Err(Error::Estimation(format!(
                "residual covariance singular at lag {p}"
            )));
        }
        let bic = lu.ln_abs_det() + penalty_unit * S::from_usize_lossy(p * n * n);
        match best {
            Some((b, _)) if bic >= b => {}
            _ => best = Some((bic, p)),
        }
    }
    Ok(best.expect("p_max >= 1").1)
}

/// Moving-average coefficients: `Phi_0 = I`,
/// `Phi_s = sum_{j=1..min(s,p)} Phi_{s-j} A_j`.
pub fn wold_coefficients<S: Scalar>(model: &VarModel<S>, horizon: usize) -> Vec<Matrix<S>> {
    let n = model.n();
    let p = model.lag_order();
    let mut phi: Vec<Matrix<S>> = Vec::with_capacity(horizon + 1);
    phi.push(Matrix::identity(n));
    for s in 1..=horizon {
        let mut m = Matrix::<S>::zeros(n, n);
        for j in 1..=s.min(p) {
            m = m.add(&phi[s - j].matmul(&model.coefficients()[j - 1]));
        }
        phi.push(m);
    }
    phi
}

/// Companion-matrix stability: stable iff the spectral radius is below one.
pub fn check_stability<S: Scalar>(model: &VarModel<S>) -> (bool, S) {
    let radius = companion_spectral_radius(model.coefficients());
    (radius < S::one(), radius)
}

/// Spectral radius of the companion matrix stacked from A_1 .. A_p.
pub fn companion_spectral_radius<S: Scalar>(coefficients: &[Matrix<S>]) -> S {
    let p = coefficients.len();
    assert!(p >= 1);
    let n = coefficients[0].rows();
    let np = n * p;
    let mut companion = Matrix::<S>::zeros(np, np);
    for (lag, a) in coefficients.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                companion[(i, lag * n + j)] = a[(i, j)];
            }
        }
    }
    for i in n..np {
        companion[(i, i - n)] = S::one();
    }
    spectral_radius(&companion)
}
