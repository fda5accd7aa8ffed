use dwlab::gauge::*;
use dwlab::lattice::*;
use dwlab::linalg;
use dwlab::operators::*;
use dwlab::profile::*;
use dwlab::spectral::*;
use dwlab::Error;
use faer::Mat;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn diag_op(d: &[f64], grading: Option<Vec<f64>>) -> GradedOperator {
    GradedOperator::new(linalg::from_real_diag(d), grading.map(Grading::Diagonal), GeometryTag::new("test", "diagonal")).unwrap()
}

#[test]
fn sign_sum_of_symmetric_spectrum_is_zero() {
    let spec = eigen(&diag_op(&[-2.0, -1.0, 1.0, 2.0], None), false, None).unwrap();
    let eta = eta_sign_sum(&spec, false).unwrap();
    assert_eq!((eta.value, eta.n_positive, eta.n_negative, eta.n_zero), (0, 2, 2, 0));
}

#[test]
fn zero_eigenvalue_needs_permission() {
    let spec = eigen(&diag_op(&[-1.0, 0.0, 3.0], None), false, None).unwrap();
    assert!(matches!(eta_sign_sum(&spec, false), Err(Error::ZeroModePresent { n_zero: 1, .. })));
    let eta = eta_sign_sum(&spec, true).unwrap();
    assert_eq!((eta.value, eta.n_zero), (0, 1));
}

#[test]
fn zero_operator_index_counts_chiralities() {
    let d = diag_op(&[0.0, 0.0, 0.0], Some(vec![1.0, 1.0, -1.0]));
    assert!(d.chiral_flag);
    let r = chiral_index(&d, None).unwrap();
    assert_eq!((r.index, r.dim_ker_plus, r.dim_ker_minus), (1, 2, 1));
    assert_eq!(r.path, IndexPath::Kernel);
}

#[test]
fn index_needs_a_grading() {
    assert_eq!(chiral_index(&diag_op(&[1.0, -1.0], None), None).unwrap_err(), Error::MissingGrading);
}

/// Per-sector kernel dimensions read off the singular values of the
/// off-diagonal block, without touching the full operator.
fn sector_oracle(d: &GradedOperator) -> i64 {
    let g = d.grading_matrix().unwrap();
    let plus: Vec<usize> = (0..d.dim()).filter(|&i| g[(i, i)].re > 0.0).collect();
    let minus: Vec<usize> = (0..d.dim()).filter(|&i| g[(i, i)].re < 0.0).collect();
    let b = Mat::from_fn(minus.len(), plus.len(), |i, j| d.matrix[(minus[i], plus[j])]);
    let sv = b.singular_values().unwrap();
    let rank = sv.iter().filter(|&&s| s > 1e-8).count();
    (plus.len() - rank) as i64 - (minus.len() - rank) as i64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]
    #[test]
    fn index_matches_sector_counting(seed in any::<u64>(), np in 1usize..20, nm in 1usize..20, frac in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = (frac * np.min(nm) as f64).floor() as usize;
        let d = random_chiral(&mut rng, np, nm, rank, 0.3).unwrap();
        let r = chiral_index(&d, None).unwrap();
        prop_assert_eq!(r.index, sector_oracle(&d));
        prop_assert_eq!(r.index, np as i64 - nm as i64);
        prop_assert!(r.residual <= 0.01);
    }

    #[test]
    fn as_eta_identity_for_any_mass(seed in any::<u64>(), np in 1usize..16, nm in 1usize..16, m in 0.01f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = np.min(nm) / 2;
        let d = random_chiral(&mut rng, np, nm, rank, 0.3).unwrap();
        let r = as_eta_identity_check(&d, m).unwrap();
        prop_assert!(r.equal);
        prop_assert_eq!(r.eta_plus.value, r.lhs);
        prop_assert_eq!(r.eta_minus.value, -r.lhs);
        // Parity of the sign-sum matches the dimension.
        prop_assert_eq!((r.eta_plus.value - d.dim() as i64).rem_euclid(2), 0);
    }
}

#[test]
fn empty_kernel_gives_zero_on_both_sides() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = random_chiral(&mut rng, 5, 5, 5, 0.5).unwrap();
    let r = as_eta_identity_check(&d, 1.0).unwrap();
    assert_eq!((r.lhs, r.rhs), (0, 0.0));
}

#[test]
fn as_eta_on_flat_spectral_torus() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 0, &FluxPlacement::Uniform, 0.3).unwrap();
    let d = build_torus_dirac(&lat, &g, TorusScheme::SpectralChiral).unwrap();
    let r = as_eta_identity_check(&d, 0.5).unwrap();
    assert!(r.equal);
    assert_eq!((r.lhs, r.eta_plus.value, r.eta_minus.value), (0, 0, 0));
}

#[test]
fn as_eta_requires_an_odd_operator() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 1, &FluxPlacement::Uniform, 0.3).unwrap();
    let d = build_torus_dirac(&lat, &g, TorusScheme::Wilson { r: 1.0 }).unwrap();
    assert_eq!(as_eta_identity_check(&d, 1.0).unwrap_err(), Error::NotChiral);
}

#[test]
fn overlap_path_is_reported_for_wilson_torus() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, -1, &FluxPlacement::Uniform, 0.3).unwrap();
    let d = build_torus_dirac(&lat, &g, TorusScheme::Wilson { r: 1.0 }).unwrap();
    let r = chiral_index(&d, None).unwrap();
    assert_eq!(r.index, -1);
    assert!(matches!(r.path, IndexPath::Overlap { .. }));
}

#[test]
fn gap_check_whitelists_only_zero() {
    let lat = Lattice1D::new(512, 40.0, Boundary::Dirichlet).unwrap();
    let p = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
    let spec = eigen(&build_jackiw_rebbi_line(&lat, 1.0, &p).unwrap(), false, None).unwrap();
    assert!(spectral_gap_check(&spec, -0.9, 0.9, true).unwrap().gap_holds);
    let strict = spectral_gap_check(&spec, -0.9, 0.9, false).unwrap();
    assert!(!strict.gap_holds);
    assert_eq!(strict.eigenvalues_inside.len(), 1);
    assert!(spectral_gap_check(&spec, 0.5, 0.5, true).is_err());
}

#[test]
fn constant_mass_shift_opens_a_gap() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let d = random_chiral(&mut rng, 6, 4, 3, 0.5).unwrap();
    let m = 0.8;
    let k = WallProfile::constant(&d.geometry_tag.key, d.dim(), 1.0);
    let spec = eigen(&apply_domain_wall(&d, m, &k).unwrap(), false, None).unwrap();
    let r = spectral_gap_check(&spec, -m + 1e-6, m - 1e-6, false).unwrap();
    assert!(r.gap_holds);
    assert!((r.nearest_outside.unwrap().abs() - m).abs() < 1e-9);
}

#[test]
fn jackiw_rebbi_decay_rates() {
    for (n, m, tol) in [(512usize, 1.0, 0.02), (1024, 2.0, 0.04)] {
        let lat = Lattice1D::new(n, 40.0, Boundary::Dirichlet).unwrap();
        let p = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
        let op = build_jackiw_rebbi_line(&lat, m, &p).unwrap();
        let spec = eigen(&op, true, None).unwrap();
        let i0 = (0..spec.eigenvalues.len()).find(|&i| spec.eigenvalues[i].abs() < 1e-6).unwrap();
        let loc = mode_localization(&spec, i0, SiteGeometry::Line(&lat)).unwrap();
        assert!((loc.fitted_decay_rate - m).abs() <= tol, "m = {m}: decay {}", loc.fitted_decay_rate);
        assert!(loc.fit_r2 > 0.9);
        assert!(loc.peak_coord.abs() < 0.5);
    }
}

#[test]
fn constant_mass_mode_is_not_localized() {
    let lat = Lattice1D::new(256, 40.0, Boundary::Periodic).unwrap();
    let op = build_jackiw_rebbi_line(&lat, 1.0, &WallProfile::constant_line(&lat, 1.0)).unwrap();
    let spec = eigen(&op, true, None).unwrap();
    let low = (0..spec.eigenvalues.len()).min_by(|&a, &b| spec.eigenvalues[a].abs().total_cmp(&spec.eigenvalues[b].abs())).unwrap();
    match mode_localization(&spec, low, SiteGeometry::Line(&lat)) {
        Ok(p) => assert!(p.near_uniform, "profile not flagged: {p:?}"),
        Err(e) => assert!(matches!(e, Error::FitUnstable(_))),
    }
}

#[test]
fn wilson_wall_mode_sits_at_the_cuts() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 0, &FluxPlacement::Uniform, 0.0).unwrap();
    let d = build_torus_dirac(&lat, &g, TorusScheme::Wilson { r: 1.0 }).unwrap();
    let op = apply_domain_wall(&d, 1.0, &WallProfile::step_torus(&lat, 1.0, -1.0)).unwrap();
    let spec = eigen(&op, true, None).unwrap();
    let i0 = (0..spec.eigenvalues.len()).min_by(|&a, &b| spec.eigenvalues[a].abs().total_cmp(&spec.eigenvalues[b].abs())).unwrap();
    let amp = site_amplitude(&spec, i0).unwrap();
    let total: f64 = amp.iter().sum();
    // Weight sits in the columns next to a cut.
    let near: f64 = (0..16)
        .filter(|&ix| lat.signed_wall_distance(ix).abs() < 2.0)
        .flat_map(|ix| (0..16).map(move |iy| ix * 16 + iy))
        .map(|s| amp[s])
        .sum();
    assert!(near / total > 0.9, "weight near the cuts {}", near / total);
}
