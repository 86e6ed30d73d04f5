//! Derivative-free and quasi-Newton minimizers.
//!
//! Two local methods are provided: the Nelder-Mead downhill simplex and BFGS
//! with a strong-Wolfe line search. Non-convex likelihoods are handled by
//! [`multistart_minimize`], which fans independent starts out over threads,
//! chains warm restarts within each run, and merges deterministically
//! (best final value, ties broken by method then start index).

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Objective callable shared across the minimizers.
pub type Objective<'a, S> = dyn Fn(&[S]) -> S + Sync + 'a;
/// Gradient callable; omit to fall back to finite differences.
pub type Gradient<'a, S> = dyn Fn(&[S]) -> Vec<S> + Sync + 'a;

/// Local optimization method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Method {
    NelderMead,
    Bfgs,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::NelderMead => write!(f, "nelder-mead"),
            Method::Bfgs => write!(f, "bfgs"),
        }
    }
}

/// Options shared by both minimizers. `tol` is the simplex f-spread for
/// Nelder-Mead and the gradient 2-norm for BFGS.
#[derive(Debug, Clone, Copy)]
pub struct OptimOptions<S> {
    pub max_iter: usize,
    pub tol: S,
}

impl<S: Scalar> Default for OptimOptions<S> {
    fn default() -> Self {
        OptimOptions {
            max_iter: 1000,
            tol: S::from_f64_lossy(1e-10),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OptimWarning {
    /// The line search could not satisfy the Wolfe conditions; the best
    /// point seen so far was returned.
    LineSearchFailed,
}

/// Outcome of one minimizer invocation.
#[derive(Debug, Clone)]
pub struct OptimResult<S> {
    pub x: Vec<S>,
    pub f: S,
    pub iterations: usize,
    pub f_evals: usize,
    /// Best objective value after each iteration.
    pub trace: Vec<S>,
    pub converged: bool,
    pub warning: Option<OptimWarning>,
}

/// Nelder-Mead simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5).
pub fn nelder_mead_minimize<S: Scalar>(
    f: &Objective<'_, S>,
    x0: &[S],
    opts: OptimOptions<S>,
) -> Result<OptimResult<S>> {
    let n = x0.len();
    assert!(n > 0, "empty parameter vector");
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(Error::Domain(
            "objective is not finite at the starting point".into(),
        ));
    }
    let mut evals = 1usize;

    // initial simplex: perturb each coordinate (relative step, absolute for zeros)
    let rel = S::from_f64_lossy(0.05);
    let abs = S::from_f64_lossy(0.00025);
    let mut simplex: Vec<(Vec<S>, S)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] = if x[i] == S::zero() {
            abs
        } else {
            x[i] + rel * x[i].abs()
        };
        let fx = f(&x);
        evals += 1;
        simplex.push((x, fx));
    }

    let sort_simplex = |s: &mut Vec<(Vec<S>, S)>| {
        s.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    };
    sort_simplex(&mut simplex);

    let alpha = S::one(); // reflection
    let gamma = S::from_f64_lossy(2.0); // expansion
    let rho = S::from_f64_lossy(0.5); // contraction
    let sigma = S::from_f64_lossy(0.5); // shrink

    let mut trace = Vec::with_capacity(opts.max_iter.min(4096));
    let mut converged = false;
    let mut iterations = 0usize;

    for _ in 0..opts.max_iter {
        iterations += 1;
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() < opts.tol {
            converged = true;
            trace.push(simplex[0].1);
            break;
        }

        // centroid of all but worst
        let mut centroid = vec![S::zero(); n];
        for (x, _) in simplex.iter().take(n) {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        let inv_n = S::one() / S::from_usize_lossy(n);
        for c in centroid.iter_mut() {
            *c *= inv_n;
        }

        let point_along = |t: S| -> Vec<S> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let reflected = point_along(alpha);
        let f_r = f(&reflected);
        evals += 1;

        if f_r < simplex[0].1 {
            let expanded = point_along(gamma);
            let f_e = f(&expanded);
            evals += 1;
            simplex[n] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
        } else if f_r < simplex[n - 1].1 {
            simplex[n] = (reflected, f_r);
        } else {
            // contraction: outside if the reflection improved on the worst
            let (contracted, f_c) = if f_r < simplex[n].1 {
                let c = point_along(rho);
                let fc = f(&c);
                (c, fc)
            } else {
                let c = point_along(-rho);
                let fc = f(&c);
                (c, fc)
            };
            evals += 1;
            if f_c < simplex[n].1.min(f_r) {
                simplex[n] = (contracted, f_c);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for (x, fx) in simplex.iter_mut().skip(1) {
                    for (xi, &bi) in x.iter_mut().zip(&best) {
                        *xi = bi + sigma * (*xi - bi);
                    }
                    *fx = f(x);
                    evals += 1;
                }
            }
        }
        sort_simplex(&mut simplex);
        trace.push(simplex[0].1);
    }

    let (x, fx) = simplex.swap_remove(0);
    Ok(OptimResult {
        x,
        f: fx,
        iterations,
        f_evals: evals,
        trace,
        converged,
        warning: None,
    })
}

/// Central finite-difference gradient with per-coordinate step
/// `1e-6 * max(1, |x_i|)`.
pub fn fd_gradient<S: Scalar>(f: &Objective<'_, S>, x: &[S]) -> Vec<S> {
    let base = S::from_f64_lossy(1e-6);
    let mut g = vec![S::zero(); x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = base * S::one().max(x[i].abs());
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (h + h);
    }
    g
}

/// BFGS with inverse-Hessian updates and a strong-Wolfe line search.
/// Falls back to central finite differences when no gradient is supplied,
/// and returns the best point seen with a warning when the line search fails.
pub fn bfgs_minimize<S: Scalar>(
    f: &Objective<'_, S>,
    grad: Option<&Gradient<'_, S>>,
    x0: &[S],
    opts: OptimOptions<S>,
) -> Result<OptimResult<S>> {
    let n = x0.len();
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(Error::Domain(
            "objective is not finite at the starting point".into(),
        ));
    }
    let eval_grad = |x: &[S]| -> Vec<S> {
        match grad {
            Some(g) => g(x),
            None => fd_gradient(f, x),
        }
    };

    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut g = eval_grad(&x);
    let mut evals = 1usize;

    let mut h_inv = crate::linalg::Matrix::<S>::identity(n);
    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut warning = None;
    let mut iterations = 0usize;

    let c1 = S::from_f64_lossy(1e-4);
    let c2 = S::from_f64_lossy(0.9);

    for _ in 0..opts.max_iter {
        let gnorm = g.iter().map(|&v| v * v).sum::<S>().sqrt();
        if gnorm < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut dir = h_inv.matvec(&g);
        for d in dir.iter_mut() {
            *d = -*d;
        }
        let mut dphi0 = dir.iter().zip(&g).map(|(&d, &gi)| d * gi).sum::<S>();
        if dphi0 >= S::zero() {
            // not a descent direction: reset to steepest descent
            h_inv = crate::linalg::Matrix::identity(n);
            dir = g.iter().map(|&gi| -gi).collect();
            dphi0 = -g.iter().map(|&v| v * v).sum::<S>();
        }

        let phi = |t: S| -> (S, Vec<S>, S) {
            let xt: Vec<S> = x.iter().zip(&dir).map(|(&xi, &di)| xi + t * di).collect();
            let ft = f(&xt);
            let gt = eval_grad(&xt);
            let slope = gt.iter().zip(&dir).map(|(&a, &b)| a * b).sum::<S>();
            (ft, gt, slope)
        };

        match wolfe_line_search(&phi, fx, dphi0, c1, c2) {
            Some((t, ft, gt, ls_evals)) => {
                evals += ls_evals;
                let x_new: Vec<S> = x.iter().zip(&dir).map(|(&xi, &di)| xi + t * di).collect();
                let s: Vec<S> = x_new.iter().zip(&x).map(|(&a, &b)| a - b).collect();
                let y: Vec<S> = gt.iter().zip(&g).map(|(&a, &b)| a - b).collect();
                let sy = s.iter().zip(&y).map(|(&a, &b)| a * b).sum::<S>();
                let s_norm = s.iter().map(|&v| v * v).sum::<S>().sqrt();
                let y_norm = y.iter().map(|&v| v * v).sum::<S>().sqrt();
                if sy > S::from_f64_lossy(1e-10) * s_norm * y_norm {
                    // H <- (I - r s y') H (I - r y s') + r s s'
                    let r = S::one() / sy;
                    let hy = h_inv.matvec(&y);
                    let yhy = y.iter().zip(&hy).map(|(&a, &b)| a * b).sum::<S>();
                    for i in 0..n {
                        for j in 0..n {
                            let upd = (S::one() + r * yhy) * r * s[i] * s[j]
                                - r * (s[i] * hy[j] + hy[i] * s[j]);
                            h_inv[(i, j)] += upd;
                        }
                    }
                }
                x = x_new;
                fx = ft;
                g = gt;
                if fx < best_f {
                    best_f = fx;
                    best_x = x.clone();
                }
            }
            None => {
                warning = Some(OptimWarning::LineSearchFailed);
                break;
            }
        }
        trace.push(fx);
    }

    if fx < best_f {
        best_f = fx;
        best_x = x;
    }
    Ok(OptimResult {
        x: best_x,
        f: best_f,
        iterations,
        f_evals: evals,
        trace,
        converged,
        warning,
    })
}

/// Strong-Wolfe line search (bracket then zoom by bisection). Returns the
/// accepted step, its objective value and gradient, and the number of
/// function evaluations spent.
#[allow(clippy::type_complexity)]
fn wolfe_line_search<S: Scalar>(
    phi: &dyn Fn(S) -> (S, Vec<S>, S),
    phi0: S,
    dphi0: S,
    c1: S,
    c2: S,
) -> Option<(S, S, Vec<S>, usize)> {
    let mut evals = 0usize;
    let mut t_prev = S::zero();
    let mut phi_prev = phi0;
    let mut t = S::one();
    let t_max = S::from_f64_lossy(1e3);

    type Accepted<S> = Option<(S, S, Vec<S>)>;
    let zoom = |mut lo: S, mut hi: S, mut phi_lo: S, evals: &mut usize| -> Accepted<S> {
        for _ in 0..60 {
            let mid = (lo + hi) * S::from_f64_lossy(0.5);
            let (fm, gm, dm) = phi(mid);
            *evals += 1;
            if !fm.is_finite() || fm > phi0 + c1 * mid * dphi0 || fm >= phi_lo {
                hi = mid;
            } else {
                if dm.abs() <= -c2 * dphi0 {
                    return Some((mid, fm, gm));
                }
                if dm * (hi - lo) >= S::zero() {
                    hi = lo;
                }
                lo = mid;
                phi_lo = fm;
            }
            if (hi - lo).abs() < S::from_f64_lossy(1e-14) {
                break;
            }
        }
        None
    };

    for iter in 0..30 {
        let (ft, gt, dt) = phi(t);
        evals += 1;
        if !ft.is_finite() || ft > phi0 + c1 * t * dphi0 || (iter > 0 && ft >= phi_prev) {
            let z = zoom(t_prev, t, phi_prev, &mut evals);
            return z.map(|(tz, fz, gz)| (tz, fz, gz, evals));
        }
        if dt.abs() <= -c2 * dphi0 {
            return Some((t, ft, gt, evals));
        }
        if dt >= S::zero() {
            let z = zoom(t, t_prev, ft, &mut evals);
            return z.map(|(tz, fz, gz)| (tz, fz, gz, evals));
        }
        t_prev = t;
        phi_prev = ft;
        t = (t + t).min(t_max);
    }
    None
}

/// One multistart run: final values of each warm-restarted invocation.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunRecord<S> {
    pub method: Method,
    pub start_index: usize,
    pub seed: u64,
    /// Final objective value after each chained invocation.
    pub restart_values: Vec<S>,
    pub iterations: usize,
    pub final_value: S,
    pub final_x: Vec<S>,
    pub converged: bool,
}

/// A finished run: its record plus the final parameter vector.
type JobOutcome<S> = Result<(RunRecord<S>, Vec<S>)>;

/// Multistart minimization: every `(method, start)` pair runs `n_restarts`
/// chained invocations, warm-starting each from the previous solution.
/// Runs execute on worker threads; the merge is deterministic.
#[allow(clippy::too_many_arguments)]
pub fn multistart_minimize<S: Scalar>(
    f: &Objective<'_, S>,
    grad: Option<&Gradient<'_, S>>,
    starts: &[(u64, Vec<S>)],
    methods: &[Method],
    n_restarts: usize,
    opts: OptimOptions<S>,
) -> Result<(Vec<S>, S, Vec<RunRecord<S>>)> {
    assert!(!starts.is_empty() && !methods.is_empty() && n_restarts > 0);
    let jobs: Vec<(usize, Method, usize)> = methods
        .iter()
        .enumerate()
        .flat_map(|(mi, &m)| (0..starts.len()).map(move |si| (mi, m, si)))
        .collect();

    let run_job = |m: Method, si: usize| -> JobOutcome<S> {
        let (seed, ref x0) = starts[si];
        let mut x = x0.clone();
        let mut restart_values = Vec::with_capacity(n_restarts);
        let mut iterations = 0usize;
        let mut converged = false;
        for _ in 0..n_restarts {
            let res = match m {
                Method::NelderMead => nelder_mead_minimize(f, &x, opts)?,
                Method::Bfgs => bfgs_minimize(f, grad, &x, opts)?,
            };
            iterations += res.iterations;
            converged = res.converged;
            restart_values.push(res.f);
            x = res.x;
        }
        let final_value = *restart_values.last().expect("n_restarts > 0");
        Ok((
            RunRecord {
                method: m,
                start_index: si,
                seed,
                restart_values,
                iterations,
                final_value,
                final_x: x.clone(),
                converged,
            },
            x,
        ))
    };

    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(jobs.len());

    let mut outcomes: Vec<Option<JobOutcome<S>>> = (0..jobs.len()).map(|_| None).collect();

    if workers <= 1 {
        for (slot, &(_, m, si)) in jobs.iter().enumerate() {
            outcomes[slot] = Some(run_job(m, si));
        }
    } else {
        let results = std::sync::Mutex::new(Vec::<(usize, JobOutcome<S>)>::new());
        std::thread::scope(|scope| {
            for w in 0..workers {
                let jobs = &jobs;
                let results = &results;
                let run_job = &run_job;
                scope.spawn(move || {
                    let mut local = Vec::new();
                    for (slot, &(_, m, si)) in jobs.iter().enumerate() {
                        if slot % workers == w {
                            local.push((slot, run_job(m, si)));
                        }
                    }
                    results.lock().expect("worker panicked").extend(local);
                });
            }
        });
        for (slot, res) in results.into_inner().expect("worker panicked") {
            outcomes[slot] = Some(res);
        }
    }

    let mut records = Vec::with_capacity(jobs.len());
    let mut best: Option<(S, usize, Vec<S>)> = None;
    let mut first_err: Option<Error> = None;
    for (slot, outcome) in outcomes.into_iter().enumerate() {
        match outcome.expect("every job ran") {
            Ok((record, x)) => {
                let fv = record.final_value;
                let better = match &best {
                    None => true,
                    Some((bf, bslot, _)) => fv < *bf || (fv == *bf && slot < *bslot),
                };
                if fv.is_finite() && better {
                    best = Some((fv, slot, x));
                }
                records.push(record);
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }

    match best {
        Some((fv, _, x)) => Ok((x, fv, records)),
        None => Err(first_err.unwrap_or_else(|| {
            Error::Estimation("all multistart runs failed to produce a finite value".into())
        })),
    }
}
