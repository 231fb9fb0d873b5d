use eulerprod_wasm::{approximation_heatmap, product_modulus_field, torus_orbit};

#[test]
fn heatmap_layout() {
    let h = approximation_heatmap(0.1, 0.0, 0.02, 0.1, 20_000);
    assert!(h.len() > 4 && (h.len() - 4) % 3 == 0);
    assert!(h[0] <= 0.1);
    let max = h[4..].chunks(3).map(|c| c[2]).fold(0.0, f64::max);
    assert_eq!(max, h[0]);
    assert!(approximation_heatmap(0.1, 0.0, 0.5, 0.1, 100).is_empty());
}

#[test]
fn modulus_field_matches_euler_product() {
    let f = product_modulus_field(1000, 2.0, 3.0, 0.0, 1.0, 3, 2);
    assert_eq!(f.len(), 6);
    assert!((f[0] - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-3);
    assert!(f[0] > f[2]);
}

#[test]
fn orbit_is_equidistributed() {
    let o = torus_orbit(1e4, 20_000, 20);
    assert_eq!(o.len(), 2 + 2 * 20_000);
    assert!(o[0] < 0.02);
    assert!(o[2..].iter().all(|x| (0.0..1.0).contains(x)));
}
