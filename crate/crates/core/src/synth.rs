//! Synthetic panels with known structural truth, for validating the whole
//! estimation chain end to end.
//!
//! Generation is fully deterministic in the seed: a random association
//! matrix is filtered into a graph of the requested kind, a structural
//! matrix B0 is drawn on that graph's mask (diagonals in [0.5, 1.5],
//! off-diagonals in [-0.3, 0.3]), a lag matrix A1 is drawn on the same
//! pattern and rescaled to the target spectral radius, and the system
//! `x_t = A1 x_{t-1} + B0 eps_t` is simulated past a 200-step burn-in.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::assoc::{CorrelationMatrix, InfluenceMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::panel::{Frequency, TimeSeriesPanel};
use crate::planar::{mst, pcpg, pmfg, FilteredGraph, GraphKind};
use crate::scalar::Scalar;
use crate::svar::{restriction_mask, RestrictionMask};
use crate::var::companion_spectral_radius;

const BURN_IN: usize = 200;

/// What to generate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub t: usize,
    pub graph: GraphKind,
    /// Target companion spectral radius of the lag matrix; must be < 1.
    pub radius: f64,
    pub seed: u64,
}

/// Ground truth behind a synthetic panel.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: Scalar + Serialize",
    deserialize = "S: Scalar + serde::de::DeserializeOwned"
))]
pub struct SyntheticTruth<S: Scalar> {
    pub a1: Matrix<S>,
    pub b0: Matrix<S>,
    pub graph: FilteredGraph<S>,
    pub mask: RestrictionMask,
}

fn node_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("n{i:02}")).collect()
}

/// Generate a panel plus its generating truth.
pub fn generate_synthetic<S: Scalar>(
    spec: &SyntheticSpec,
) -> Result<(TimeSeriesPanel<S>, SyntheticTruth<S>)> {
    if spec.radius <= 0.0 || spec.radius >= 1.0 || spec.radius.is_nan() {
        return Err(Error::Config(format!(
            "radius target must be in (0, 1), got {}",
            spec.radius
        )));
    }
    if spec.t < 10 {
        return Err(Error::Config("synthetic panel needs t >= 10".into()));
    }
    let n = spec.n;
    let labels = node_labels(n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // random filtered graph of the requested kind
    let graph: FilteredGraph<S> = match spec.graph {
        GraphKind::Pmfg | GraphKind::Mst => {
            let mut m = Matrix::<S>::identity(n);
            for i in 0..n {
                for j in 0..i {
                    let v = S::from_f64_lossy(rng.random_range(-0.95..0.95));
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            let c = CorrelationMatrix::new(labels.clone(), m)?;
            match spec.graph {
                GraphKind::Pmfg => pmfg(&c)?,
                _ => mst(&c)?,
            }
        }
        GraphKind::Pcpg => {
            let mut m = Matrix::<S>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        m[(i, j)] = S::from_f64_lossy(rng.random_range(-1.0..1.0));
                    }
                }
            }
            let d = InfluenceMatrix::new(labels.clone(), m)?;
            pcpg(&d)?
        }
    };
    let mask = restriction_mask(&graph)?;

    // structural matrix on the mask
    let b0 = Matrix::<S>::from_fn(n, n, |i, j| {
        if !mask.is_free(i, j) {
            S::zero()
        } else if i == j {
            S::from_f64_lossy(rng.random_range(0.5..1.5))
        } else {
            S::from_f64_lossy(rng.random_range(-0.3..0.3))
        }
    });

    // lag matrix on the same pattern, rescaled to the radius target
    let raw_a1 = Matrix::<S>::from_fn(n, n, |i, j| {
        if mask.is_free(i, j) {
            S::from_f64_lossy(rng.random_range(-0.3..0.3))
        } else {
            S::zero()
        }
    });
    let rho = companion_spectral_radius(std::slice::from_ref(&raw_a1));
    let a1 = if rho > S::from_f64_lossy(1e-9) {
        raw_a1.scale(S::from_f64_lossy(spec.radius) / rho)
    } else {
        Matrix::diagonal(&vec![S::from_f64_lossy(spec.radius); n])
    };

    // simulate past the burn-in
    let mut data = Matrix::<S>::zeros(n, spec.t);
    let mut prev = vec![S::zero(); n];
    for step in 0..BURN_IN + spec.t {
        let eps: Vec<S> = (0..n)
            .map(|_| S::from_f64_lossy(StandardNormal.sample(&mut rng)))
            .collect();
        let mut x = b0.matvec(&eps);
        let lagged = a1.matvec(&prev);
        for i in 0..n {
            x[i] += lagged[i];
        }
        if step >= BURN_IN {
            for i in 0..n {
                data[(i, step - BURN_IN)] = x[i];
            }
        }
        prev = x;
    }

    let panel = TimeSeriesPanel::new(labels, data, Frequency::Other)?;
    Ok((
        panel,
        SyntheticTruth {
            a1,
            b0,
            graph,
            mask,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(graph: GraphKind, n: usize, t: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n,
            t,
            graph,
            radius: 0.6,
            seed,
        }
    }

    #[test]
    fn radius_target_is_hit() {
        let (_, truth) = generate_synthetic::<f64>(&spec(GraphKind::Pcpg, 6, 100, 1)).unwrap();
        let rho = companion_spectral_radius(std::slice::from_ref(&truth.a1));
        assert!((0.59..=0.61).contains(&rho), "radius {rho}");
    }

    #[test]
    fn residual_covariance_matches_b0_b0t() {
        let (panel, truth) =
            generate_synthetic::<f64>(&spec(GraphKind::Pcpg, 6, 10_000, 2)).unwrap();
        let n = 6;
        let t = panel.n_obs();
        // residuals from the true lag matrix
        let data = panel.data();
        let mut cov = Matrix::<f64>::zeros(n, n);
        for tt in 1..t {
            let mut u = vec![0.0; n];
            for i in 0..n {
                u[i] = data[(i, tt)];
                for j in 0..n {
                    u[i] -= truth.a1[(i, j)] * data[(j, tt - 1)];
                }
            }
            for i in 0..n {
                for j in 0..n {
                    cov[(i, j)] += u[i] * u[j];
                }
            }
        }
        let cov = cov.scale(1.0 / (t - 1) as f64);
        let target = truth.b0.matmul(&truth.b0.transpose());
        let rel = cov.sub(&target).frobenius_norm() / target.frobenius_norm();
        assert!(rel < 0.05, "relative Frobenius error {rel}");
    }

    #[test]
    fn same_seed_same_panel() {
        let s = spec(GraphKind::Pcpg, 6, 500, 3);
        let (p1, t1) = generate_synthetic::<f64>(&s).unwrap();
        let (p2, t2) = generate_synthetic::<f64>(&s).unwrap();
        assert_eq!(p1.data(), p2.data());
        assert_eq!(t1.b0, t2.b0);
        let (p3, _) = generate_synthetic::<f64>(&spec(GraphKind::Pcpg, 6, 500, 4)).unwrap();
        assert_ne!(p1.data(), p3.data());
    }

    #[test]
    fn graph_kind_is_respected() {
        let (_, truth) = generate_synthetic::<f64>(&spec(GraphKind::Pcpg, 6, 100, 5)).unwrap();
        assert!(truth.graph.directed());
        assert_eq!(truth.graph.edges().len(), 12);

        let (_, truth) = generate_synthetic::<f64>(&spec(GraphKind::Mst, 6, 100, 6)).unwrap();
        assert!(!truth.graph.directed());
        assert_eq!(truth.graph.edges().len(), 5);

        let (_, truth) = generate_synthetic::<f64>(&spec(GraphKind::Pmfg, 12, 100, 7)).unwrap();
        assert_eq!(truth.graph.edges().len(), 30);
    }

    #[test]
    fn pmfg_below_eleven_nodes_fails_identification() {
        let err = generate_synthetic::<f64>(&spec(GraphKind::Pmfg, 8, 100, 8)).unwrap_err();
        assert!(matches!(err, Error::Identification { .. }), "{err}");
    }

    #[test]
    fn b0_respects_mask_and_ranges() {
        let (_, truth) = generate_synthetic::<f64>(&spec(GraphKind::Pcpg, 8, 100, 9)).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let v = truth.b0[(i, j)];
                if !truth.mask.is_free(i, j) {
                    assert_eq!(v, 0.0);
                } else if i == j {
                    assert!((0.5..=1.5).contains(&v));
                } else {
                    assert!(v.abs() <= 0.3);
                }
            }
        }
    }
}
