//! The numeric core is generic over the scalar type; exercise the main
//! chain at f32 to keep that property honest. Tolerances are loose —
//! single precision is for memory-bound panels, not tight inference.

use shocknet_core::assoc::pearson_matrix;
use shocknet_core::linalg::Matrix;
use shocknet_core::panel::{hp_filter, Frequency, TimeSeriesPanel};
use shocknet_core::planar::{pmfg, GraphKind};
use shocknet_core::svar::{cholesky_orthogonalize, structural_irf, svar_loglik, ShockKind};
use shocknet_core::synth::{generate_synthetic, SyntheticSpec};
use shocknet_core::var::{check_stability, fit_var, wold_coefficients};
use shocknet_core::{Matrix32, Scalar};

fn panel_f32(seed: u64, n: usize, t: usize) -> TimeSeriesPanel<f32> {
    // splitmix-style generator keeps this test free of RNG trait plumbing
    let mut state = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f32 / (1u64 << 53) as f32 - 0.5
    };
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| (0..t).map(|_| next() * 2.0).collect())
        .collect();
    TimeSeriesPanel::new(
        (0..n).map(|i| format!("n{i}")).collect(),
        Matrix::from_rows(rows).unwrap(),
        Frequency::Other,
    )
    .unwrap()
}

#[test]
fn core_chain_runs_at_f32() {
    let panel = panel_f32(5, 6, 400);
    let c = pearson_matrix(&panel).unwrap();
    let g = pmfg(&c).unwrap();
    assert_eq!(g.edges().len(), 12);

    let var = fit_var(&panel, 1).unwrap();
    let (stable, _) = check_stability(&var);
    assert!(stable, "white-noise panel fits a stable VAR");
    let phi = wold_coefficients(&var, 5);
    assert_eq!(phi[0], Matrix32::identity(6));

    let sigma = var.sigma_u_ml();
    let p = cholesky_orthogonalize(&sigma).unwrap();
    let rec: Matrix32 = p.matmul(&p.transpose());
    assert!(rec.sub(&sigma).max_abs() < 1e-4);

    let irf = structural_irf(&var, &p, 5, ShockKind::CholeskyP);
    assert_eq!(irf.theta[0], p);

    let ll = svar_loglik(&Matrix32::identity(3), &Matrix32::identity(3), 100).unwrap();
    let expected = -(300.0f32 / 2.0) * (2.0 * std::f32::consts::PI).ln() - 150.0;
    assert!((ll - expected).abs() < 1e-2);

    let (trend, cycle) = hp_filter::<f32>(&panel.series(0).to_vec(), 1600.0).unwrap();
    assert_eq!(trend.len(), 400);
    let scale = panel.series(0).iter().fold(1.0f32, |m, v| m.max(v.abs()));
    let mean = cycle.iter().sum::<f32>() / 400.0;
    assert!(mean.abs() <= 1e-3 * scale);
}

#[test]
fn synthetic_generation_runs_at_f32() {
    let (panel, truth) = generate_synthetic::<f32>(&SyntheticSpec {
        n: 6,
        t: 200,
        graph: GraphKind::Pcpg,
        radius: 0.5,
        seed: 3,
    })
    .unwrap();
    assert_eq!(panel.n_nodes(), 6);
    assert_eq!(truth.graph.edges().len(), 12);
    assert_eq!(truth.b0.rows(), 6);
    // scalar helper conversions stay exact for small integers
    assert_eq!(f32::from_usize_lossy(7), 7.0f32);
}
