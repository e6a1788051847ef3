use rigidity_lab_demo::{curvature_grid, fourier_exponent, schottky_census};

#[test]
fn constant_profile_has_unit_exponent() {
    let v = fourier_exponent(-1.0, 0.0, 0.0, 1.0).unwrap();
    assert!((v.chi_plus - 1.0).abs() < 1e-9);
    assert!(v.gap.abs() < 1e-9);
    assert!(v.times.len() <= 240 && v.times.len() == v.u.len() && v.u.len() == v.k.len());
}

#[test]
fn sinusoid_matches_pinned_exponent() {
    let v = fourier_exponent(-1.0, 0.0, -0.5, 1.0).unwrap();
    assert!((v.chi_plus - 0.998_561_164_983_69).abs() < 1e-8);
    assert!((v.chi_plus - v.oracle_chi).abs() < 1e-4);
    assert!(v.gap > 0.0);
}

#[test]
fn sign_changing_curvature_is_rejected() {
    assert!(fourier_exponent(-0.2, 0.5, 0.0, 1.0).is_err());
}

#[test]
fn census_counts_classes() {
    let c = schottky_census(4).unwrap();
    assert_eq!(c.rows.len(), 25);
    assert!(c.rows.windows(2).all(|w| w[0].length <= w[1].length));
    assert!(schottky_census(0).is_err());
    assert!(schottky_census(7).is_err());
}

#[test]
fn unperturbed_grid_is_uniformly_minus_one() {
    let g = curvature_grid(0.0, 24).unwrap();
    assert_eq!(g.k.len(), 24 * 24);
    assert!(g.k.iter().flatten().all(|&k| (k + 1.0).abs() < 1e-12));
    assert!(g.k.iter().any(|k| k.is_none()));
}

#[test]
fn bump_lowers_minimum_curvature() {
    let g = curvature_grid(0.04, 40).unwrap();
    assert!(g.k_min < -1.0 || g.k_max > -1.0);
    assert!(g.k_max < 0.0);
    assert!(curvature_grid(0.0, 1).is_err());
}

#[test]
fn views_serialize_without_nan() {
    let s = serde_json::to_string(&curvature_grid(0.02, 16).unwrap()).unwrap();
    assert!(!s.contains("NaN"));
}
