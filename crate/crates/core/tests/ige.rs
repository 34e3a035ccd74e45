use igac_core::ige::{classify_points, region_weight};
use igac_core::{
    build_manifold, classify_growth, ensemble_ige, ige_series, integrate_geodesic, parse_params, statistical_weight, uniform_grid,
    ExploredRegion, FrequencySpectrum, GeodesicPath, GeodesicState, GrowthClass, IntegrationScheme, Manifold, StepControl,
};
use proptest::prelude::*;

fn manifold(name: &str, params: &str) -> Manifold {
    build_manifold(name, &parse_params(params).unwrap()).unwrap()
}

fn tight() -> StepControl {
    StepControl::with_tolerances(1e-11, 1e-14)
}

fn path(m: &Manifold, theta: Vec<f64>, v: Vec<f64>, tau: f64) -> GeodesicPath {
    let s0 = GeodesicState::new(0.0, theta, v).unwrap();
    integrate_geodesic(m, &s0, tau, &tight(), &[]).unwrap()
}

// ∫∫ √2/σ² dμ dσ over a box
fn gaussian_box_weight(r: &ExploredRegion) -> f64 {
    2f64.sqrt() * (r.upper[0] - r.lower[0]) * (1.0 / r.lower[1] - 1.0 / r.upper[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quadrature_and_monte_carlo_weights_agree(
        mu in -2.0f64..2.0, dmu in 0.1f64..3.0, s in (-1.0f64..1.0).prop_map(f64::exp), ds in (0.1f64..2.0).prop_map(f64::exp),
    ) {
        let m = manifold("gaussian", "l=1");
        let r = ExploredRegion { lower: vec![mu, s], upper: vec![mu + dmu, s * ds] };
        let exact = gaussian_box_weight(&r);
        let q = region_weight(&m, &r, &IntegrationScheme::quadrature(200_000, 1e-10)).unwrap();
        prop_assert!((q.value - exact).abs() <= 1e-8 * exact, "{} vs {exact}", q.value);
        let mc = region_weight(&m, &r, &IntegrationScheme::monte_carlo(1 << 14, 3)).unwrap();
        // the 1/σ² proposal matches this integrand, so the spread can be zero
        prop_assert!((mc.value - exact).abs() <= 6.0 * mc.error + 1e-12 * exact, "{} ± {} vs {exact}", mc.value, mc.error);
    }

    #[test]
    fn weight_grows_with_explored_region(a in 0.0f64..6.2832, t1 in 0.5f64..3.0, dt in 0.1f64..3.0) {
        let m = manifold("gaussian", "l=1");
        let th = vec![0.0, 1.0];
        let n = m.metric_at(&th).unwrap().bilinear(&[a.cos(), a.sin()], &[a.cos(), a.sin()]).sqrt();
        let p = path(&m, th, vec![a.cos() / n, a.sin() / n], 7.0);
        let (r1, r2) = (ExploredRegion::from_path(&p, t1).unwrap(), ExploredRegion::from_path(&p, t1 + dt).unwrap());
        prop_assert!(r2.contains(&r1));
        let s = IntegrationScheme::default();
        let w1 = statistical_weight(&m, &p, t1, &s);
        let w2 = statistical_weight(&m, &p, t1 + dt, &s);
        if let (Ok(w1), Ok(w2)) = (w1, w2) {
            prop_assert!(w2.value >= w1.value * (1.0 - 1e-9));
            prop_assert!((w1.value - gaussian_box_weight(&r1)).abs() <= 1e-6 * w1.value);
        }
    }
}

#[test]
fn integrable_entropy_closed_form() {
    // μ = e^{τ/√2} on both axes gives w = τ²/2, V = τ²/6
    let m = manifold("integrable", "");
    let r = 0.5f64.sqrt();
    let p = path(&m, vec![1.0, 1.0], vec![r, r], 50.0);
    let grid = uniform_grid(5.0, 50.0, 46);
    let s = ige_series(&m, &p, &grid, &IntegrationScheme::default()).unwrap();
    for (t, e) in s.tau.iter().zip(&s.entropy) {
        let exact = 2.0 * t.ln() - 6f64.ln();
        assert!((e - exact).abs() <= 1e-6, "tau {t}: {e} vs {exact}");
    }
    let c = classify_growth(&s, (5.0, 50.0)).unwrap();
    assert_eq!(c.class, GrowthClass::Logarithmic);
    assert!((c.rate - 2.0).abs() < 1e-6);
}

#[test]
fn gaussian_entropy_grows_linearly() {
    let m = manifold("gaussian", "l=1");
    let v = 1.0 / 3f64.sqrt();
    let p = path(&m, vec![0.0, 1.0], vec![v, -v], 12.0);
    let grid = uniform_grid(1.0, 12.0, 45);
    let s = ige_series(&m, &p, &grid, &IntegrationScheme::default()).unwrap();
    let c = classify_growth(&s, (1.0, 12.0)).unwrap();
    assert_eq!(c.class, GrowthClass::Linear, "{c:?}");
    assert!(c.rate > 0.0);
}

#[test]
fn classifier_on_synthetic_curves() {
    let tau = uniform_grid(1.0, 30.0, 59);
    let lin: Vec<f64> = tau.iter().map(|t| 0.7 * t + 2.0).collect();
    let log: Vec<f64> = tau.iter().map(|t| 1.5 * t.ln() - 1.0).collect();
    let c = classify_points(&tau, &lin, (1.0, 30.0)).unwrap();
    assert_eq!(c.class, GrowthClass::Linear);
    assert!((c.rate - 0.7).abs() < 1e-12);
    let c = classify_points(&tau, &log, (1.0, 30.0)).unwrap();
    assert_eq!(c.class, GrowthClass::Logarithmic);
    assert!((c.rate - 1.5).abs() < 1e-12);
    assert!(classify_points(&tau[..5], &lin[..5], (1.0, 30.0)).is_err());
}

#[test]
fn ensemble_without_spread_matches_single_draw() {
    let spectrum = FrequencySpectrum { l: 2, mean: 1.0, std: 0.0, seed: 9 };
    let grid = uniform_grid(1.0, 12.0, 23);
    let scheme = IntegrationScheme::quadrature(2_000_000, 1e-8);
    let one = ensemble_ige(&spectrum, &[(0.1, 0.0)], &grid, 1, &scheme, &tight(), (1.0, 12.0)).unwrap();
    let many = ensemble_ige(&spectrum, &[(0.1, 0.0)], &grid, 32, &scheme, &tight(), (1.0, 12.0)).unwrap();
    assert_eq!(one.series, many.series);
    assert_eq!(many.frequencies.len(), 32);
    assert!(many.frequencies.iter().all(|w| w == &vec![1.0, 1.0]));
}

#[test]
fn ensemble_is_seed_deterministic() {
    let spectrum = FrequencySpectrum { l: 2, mean: 1.0, std: 0.2, seed: 4 };
    let grid = uniform_grid(1.0, 8.0, 15);
    let scheme = IntegrationScheme::quadrature(2_000_000, 1e-8);
    let run = |s: &FrequencySpectrum| ensemble_ige(s, &[(0.1, 0.0)], &grid, 4, &scheme, &tight(), (1.0, 8.0)).unwrap();
    let (a, b) = (run(&spectrum), run(&spectrum));
    assert_eq!(a.series, b.series);
    let c = run(&FrequencySpectrum { seed: 5, ..spectrum });
    assert_ne!(a.frequencies, c.frequencies);
}
