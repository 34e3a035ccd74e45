use igac_core::geometry::{curvature_tensors_with, CurvatureOptions};
use igac_core::{build_manifold, curvature_tensors, parse_params, Manifold};
use proptest::prelude::*;

fn manifold(name: &str, params: &str) -> Manifold {
    build_manifold(name, &parse_params(params).unwrap()).unwrap()
}

fn log_scale() -> impl Strategy<Value = f64> {
    (-2.0f64..2.0).prop_map(f64::exp)
}

/// A random in-domain point for each built-in manifold.
fn point() -> impl Strategy<Value = (Manifold, Vec<f64>)> {
    prop_oneof![
        (1usize..=3, prop::collection::vec(-3.0f64..3.0, 3), prop::collection::vec(log_scale(), 3)).prop_map(|(l, mu, s)| {
            let mut th = mu[..l].to_vec();
            th.extend(&s[..l]);
            (manifold("gaussian", &format!("l={l}")), th)
        }),
        (log_scale(), log_scale()).prop_map(|(a, b)| (manifold("integrable", ""), vec![a, b])),
        (log_scale(), -3.0f64..3.0, log_scale()).prop_map(|(a, m, s)| (manifold("chaotic", ""), vec![a, m, s])),
        prop::collection::vec(-2.0f64..2.0, 2).prop_map(|th| (manifold("iho", "omega=0.7;1.3"), th)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn metric_symmetric_positive_definite((m, th) in point()) {
        let g = m.metric_at(&th).unwrap();
        prop_assert_eq!(g.max_asymmetry(), 0.0);
        prop_assert!(g.cholesky().is_ok());
        prop_assert!(m.volume_element(&th).unwrap() > 0.0);
    }

    #[test]
    fn analytic_derivative_matches_central_difference((m, th) in point()) {
        let Some(d) = m.field().metric_derivative(&th) else { return Ok(()) };
        let n = th.len();
        for r in 0..n {
            let h = 1e-6 * th[r].abs().max(1e-3);
            let mut up = th.clone();
            up[r] += h;
            let mut dn = th.clone();
            dn[r] -= h;
            let (gu, gd) = (m.field().metric(&up), m.field().metric(&dn));
            for i in 0..n {
                for j in 0..n {
                    let fd = (gu.row(i)[j] - gd.row(i)[j]) / (2.0 * h);
                    let exact = d[r].row(i)[j];
                    prop_assert!((fd - exact).abs() <= 1e-7 * exact.abs().max(1.0), "d{r} g{i}{j}: {fd} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn riemann_symmetries_and_bianchi((m, th) in point()) {
        let b = curvature_tensors(&m, &th).unwrap();
        let r = b.lowered();
        let n = th.len();
        let scale = r.max_abs().max(1.0) * 1e-6;
        for a in 0..n { for c in 0..n { for d in 0..n { for e in 0..n {
            let v = r.get(a, c, d, e);
            prop_assert!((v + r.get(c, a, d, e)).abs() <= scale);
            prop_assert!((v + r.get(a, c, e, d)).abs() <= scale);
            prop_assert!((v - r.get(d, e, a, c)).abs() <= scale);
            let bianchi = v + r.get(a, d, e, c) + r.get(a, e, c, d);
            prop_assert!(bianchi.abs() <= scale);
        }}}}
    }

    #[test]
    fn scalar_is_twice_sectional_sum((m, th) in point()) {
        let b = curvature_tensors(&m, &th).unwrap();
        let sum: f64 = b.sectional_by_plane().unwrap().iter().map(|(_, k)| k).sum();
        prop_assert!((b.scalar - 2.0 * sum).abs() <= 1e-6 * b.scalar.abs().max(1.0));
    }

    #[test]
    fn gaussian_scalar_curvature_is_minus_l((m, th) in point()) {
        if m.name == "gaussian" {
            let l = th.len() / 2;
            let r = curvature_tensors(&m, &th).unwrap().scalar;
            prop_assert!((r + l as f64).abs() <= 1e-5, "R = {r}");
        }
    }
}

#[test]
fn iho_two_dimensional_curvature_oracle() {
    // conformally flat g = Φ δ in 2D: R = −Δ ln Φ / Φ
    let m = manifold("iho", "omega=0.7;1.3");
    let w = [0.7f64, 1.3];
    let th = [0.4f64, -0.9];
    let phi = |x: &[f64]| 1.0 + 0.5 * (w[0] * w[0] * x[0] * x[0] + w[1] * w[1] * x[1] * x[1]);
    let h = 1e-4;
    let mut lap = 0.0;
    for i in 0..2 {
        let mut up = th;
        up[i] += h;
        let mut dn = th;
        dn[i] -= h;
        lap += (phi(&up).ln() - 2.0 * phi(&th).ln() + phi(&dn).ln()) / (h * h);
    }
    let expected = -lap / phi(&th);
    let r = curvature_tensors(&m, &th).unwrap().scalar;
    assert!((r - expected).abs() < 1e-6 * expected.abs().max(1.0), "{r} vs {expected}");
}

#[test]
fn finite_difference_error_shrinks_with_step() {
    // coarse steps, where truncation error dominates; exact value R = −1
    let m = manifold("gaussian", "l=1");
    let th = [0.3, 0.8];
    let err = |h: f64| {
        let o = CurvatureOptions { metric_step: h, christoffel_step: h };
        (curvature_tensors_with(&m, &th, &o).unwrap().scalar + 1.0).abs()
    };
    let (coarse, fine) = (err(0.2), err(0.1));
    assert!(coarse > 1e-9, "coarse error {coarse} too small to measure");
    assert!(coarse / fine >= 3.0, "{coarse} -> {fine}");
}

#[test]
fn flat_and_product_manifolds() {
    let b = curvature_tensors(&manifold("integrable", ""), &[0.5, 3.0]).unwrap();
    assert!(b.scalar.abs() <= 1e-6);
    let b = curvature_tensors(&manifold("chaotic", ""), &[0.5, -1.0, 3.0]).unwrap();
    assert!((b.scalar + 1.0).abs() <= 1e-5);
    let planes = b.sectional_by_plane().unwrap();
    let mut ks: Vec<f64> = planes.iter().map(|(_, k)| *k).collect();
    ks.sort_by(f64::total_cmp);
    assert!((ks[0] + 0.5).abs() < 1e-6 && ks[1].abs() < 1e-6 && ks[2].abs() < 1e-6);
}
