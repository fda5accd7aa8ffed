use dwlab::aps::*;
use dwlab::gauge::*;
use dwlab::lattice::*;
use dwlab::linalg;
use dwlab::operators::*;
use dwlab::profile::*;
use dwlab::Error;
use std::f64::consts::PI;

fn diag(d: &[f64]) -> GradedOperator {
    GradedOperator::new(linalg::from_real_diag(d), None, GeometryTag::new("test", "diagonal")).unwrap()
}

/// Heat-regularized symmetric partial sum `Σ_{|k| ≤ K} sign(k+a) e^{−t|k+a|}`.
fn heat_oracle(a: f64, k_max: i64, t: f64) -> f64 {
    (-k_max..=k_max).map(|k| {
        let l = k as f64 + a;
        l.signum() * (-t * l.abs()).exp()
    }).sum()
}

#[test]
fn projection_of_small_diagonals() {
    let p = positive_spectral_projection(&diag(&[1.0, -1.0]), None).unwrap();
    assert_eq!(p.rank, 1);
    assert!((p.projector[(0, 0)].re - 1.0).abs() < 1e-14 && p.projector[(1, 1)].norm() < 1e-14);

    let p = positive_spectral_projection(&diag(&[0.5, 1.5, -0.5, -1.5]), None).unwrap();
    assert_eq!(p.rank, 2);
    assert!((p.lambda_a - 0.5).abs() < 1e-14);
    for i in 0..4 {
        let want = if i < 2 { 1.0 } else { 0.0 };
        assert!((p.projector[(i, i)].re - want).abs() < 1e-14);
    }
    assert!(p.idempotency_residual <= 1e-12 && p.commutation_residual <= 1e-12);

    assert!(matches!(positive_spectral_projection(&diag(&[1.0, 0.0]), None), Err(Error::ZeroModeOnBoundary(_))));
}

#[test]
fn projection_of_circle_operator() {
    let a = build_circle_operator_a(64, 0.3, 2.0 * PI).unwrap();
    let p = positive_spectral_projection(&a, None).unwrap();
    assert_eq!(p.rank, 32);
    assert!((p.lambda_a - 0.3).abs() < 1e-10);
}

#[test]
fn circle_eta_against_heat_regularized_sums() {
    for a in [0.25, 0.5, 0.75, 0.1, 0.9] {
        let exact = eta_circle_exact(a).unwrap();
        let oracle = heat_oracle(a, 1_000_000, 1e-4);
        assert!((exact - oracle).abs() < 1e-3, "a = {a}: {exact} vs {oracle}");
    }
    assert_eq!(eta_circle_exact(0.5).unwrap(), 0.0);
    assert_eq!(eta_circle_exact(0.25).unwrap(), 0.5);
    assert_eq!(eta_circle_exact(0.75).unwrap(), -0.5);
    assert!(matches!(eta_circle_exact(1.0), Err(Error::IntegerHolonomy(_))));
}

#[test]
fn windowed_eta_converges_under_heat_damping() {
    let rows = circle_eta_convergence(0.25, &[64, 256, 1024, 4096]);
    for r in &rows {
        assert_eq!(r.sign_sum, 0);
    }
    let err: Vec<f64> = rows.iter().map(|r| (r.heat_damped - 0.5).abs()).collect();
    assert!(err.windows(2).all(|w| w[1] < w[0]), "{err:?}");
    assert!(err[3] < 0.01);
}

#[test]
fn plateau_finder() {
    let m = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
    let v = [Some(0.0), Some(1.0), Some(1.0), None, Some(1.0), Some(1.0), Some(1.0)];
    let p = find_plateau(&m, &v).unwrap();
    assert_eq!((p.first, p.last, p.value), (4, 6, 1.0));
    assert!(find_plateau(&m[..3], &[Some(1.0), Some(1.0), Some(0.0)]).is_none());
    // Ties go to the first run.
    let v = [Some(2.0), Some(2.0), Some(2.0), Some(0.0), Some(0.0), Some(0.0)];
    assert_eq!(find_plateau(&m[..6], &v).unwrap().value, 2.0);
}

#[test]
fn unwrapped_holonomy_tracks_strip_flux() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 1, &FluxPlacement::Localized { x_lo: 6, x_hi: 9 }, 0.3).unwrap();
    let h = unwrapped_holonomies(&lat, &g);
    assert_eq!(h.len(), lat.x_plus.len());
    assert!((h[0] - 0.3).abs() < 1e-12);
    assert!((h[h.len() - 1] - h[0] + 1.0).abs() < 1e-10, "net change {}", h[h.len() - 1] - h[0]);
}

fn aps_of(n: usize, q: i64, window: (usize, usize), conjugate: bool, cyl: usize) -> ApsIndexReport {
    let lat = TorusLattice2D::half_split(n).unwrap();
    let mut g = make_gauge_flux(&lat, q, &FluxPlacement::Localized { x_lo: window.0, x_hi: window.1 }, 0.3).unwrap();
    if conjugate {
        g = g.conjugate();
    }
    aps_index(&build_half_torus_problem(&lat, &g, cyl).unwrap(), None).unwrap()
}

#[test]
fn aps_index_of_flat_and_charged_halves() {
    assert_eq!(aps_of(16, 0, (6, 9), false, 8).index.index, 0);
    let one = aps_of(16, 1, (6, 9), false, 8);
    assert_eq!(one.index.index, 1);
    assert!(one.kernel_weight_in_x_plus > 0.5);
    assert!(one.collar_residual <= 1e-10);
}

#[test]
fn conjugate_field_flips_aps_index() {
    assert_eq!(aps_of(16, 1, (6, 9), true, 8).index.index, -1);
}

#[test]
fn aps_index_does_not_depend_on_cylinder_length() {
    for cyl in [4usize, 12] {
        assert_eq!(aps_of(16, 1, (6, 9), false, cyl).index.index, 1, "cylinder {cyl}");
    }
}

#[test]
fn integer_holonomy_has_no_boundary_gap() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 0, &FluxPlacement::Uniform, 0.0).unwrap();
    assert!(matches!(build_half_torus_problem(&lat, &g, 8), Err(Error::ZeroModeOnBoundary(_))));
}

#[test]
fn main_theorem_on_flat_half_is_zero_everywhere() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 0, &FluxPlacement::Localized { x_lo: 6, x_hi: 9 }, 0.3).unwrap();
    let setup = MainTheoremSetup {
        m_values: vec![0.1, 0.3, 0.6, 1.0, 1.6],
        widths: vec![2.0, 1.0],
        kappa_plus: 1.0,
        kappa_minus: -1.0,
        scheme: TorusScheme::Wilson { r: 1.0 },
        cylinder_len: 8,
    };
    let r = main_theorem_check(&lat, &g, &setup).unwrap();
    assert!(r.agrees);
    assert!(r.rhs_by_mass.iter().all(|v| *v == Some(0.0)));
}

#[test]
fn asymmetric_wall_keeps_the_plateau_value() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 1, &FluxPlacement::Localized { x_lo: 6, x_hi: 9 }, 0.3).unwrap();
    let setup = MainTheoremSetup {
        m_values: vec![0.5, 0.7, 1.0, 1.3],
        widths: vec![2.0, 1.0],
        kappa_plus: 1.0,
        kappa_minus: -10.0,
        scheme: TorusScheme::Wilson { r: 1.0 },
        cylinder_len: 8,
    };
    let r = main_theorem_check(&lat, &g, &setup).unwrap();
    assert_eq!((r.aps_index, r.rhs), (1, 1.0));
    assert!(r.agrees);
}

#[test]
fn main_theorem_rejects_same_sign_levels() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 0, &FluxPlacement::Uniform, 0.3).unwrap();
    let setup = MainTheoremSetup {
        m_values: vec![1.0],
        widths: vec![1.0],
        kappa_plus: 1.0,
        kappa_minus: 2.0,
        scheme: TorusScheme::Wilson { r: 1.0 },
        cylinder_len: 8,
    };
    assert!(matches!(main_theorem_check(&lat, &g, &setup), Err(Error::InvalidArgument(_))));
}

#[test]
fn gap_scan_finds_threshold() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 1, &FluxPlacement::Localized { x_lo: 6, x_hi: 9 }, 0.3).unwrap();
    let d = build_torus_dirac(&lat, &g, TorusScheme::Wilson { r: 1.0 }).unwrap();
    let k = WallProfile::step_torus(&lat, 1.0, -1.0);
    let la = 0.3 * 2.0 * PI / 16.0;
    let r = gap_scan(&d, &k, &[0.01, 0.05, 0.2, 0.5, 1.0], la / 2.0).unwrap();
    assert!(!r.points[0].gap_holds);
    assert_eq!(r.m_star, Some(0.2));
    assert!(gap_scan(&d, &k, &[1.0, 0.5], la / 2.0).is_err());
}
