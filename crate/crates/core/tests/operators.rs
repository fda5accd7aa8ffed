use dwlab::clifford::CliffordTriple;
use dwlab::gauge::*;
use dwlab::lattice::*;
use dwlab::linalg::{self, C64};
use dwlab::operators::*;
use dwlab::profile::*;
use dwlab::spectral::*;
use dwlab::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn sorted_abs(v: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = v.iter().map(|l| l.abs()).collect();
    a.sort_by(f64::total_cmp);
    a
}

#[test]
fn clifford_relations_hold_exactly() {
    assert_eq!(CliffordTriple::standard().relation_residual(), 0.0);
}

#[test]
fn wall_on_dirichlet_line_binds_one_mode() {
    let lat = Lattice1D::new(512, 40.0, Boundary::Dirichlet).unwrap();
    let p = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
    let op = build_jackiw_rebbi_line(&lat, 1.0, &p).unwrap();
    assert!(op.chiral_flag);
    let spec = eigen(&op, false, None).unwrap();
    let inside: Vec<f64> = spec.eigenvalues.iter().copied().filter(|l| l.abs() < 0.9).collect();
    assert_eq!(inside.len(), 1);
    assert!(inside[0].abs() < 1e-6);
}

#[test]
fn constant_mass_line_is_gapped_at_m() {
    let lat = Lattice1D::new(256, 40.0, Boundary::Periodic).unwrap();
    let m = 1.0;
    let op = build_jackiw_rebbi_line(&lat, m, &WallProfile::constant_line(&lat, 1.0)).unwrap();
    let spec = eigen(&op, false, None).unwrap();
    let low = sorted_abs(&spec.eigenvalues)[0];
    assert!(low >= m * (1.0 - 1e-2) && low <= m * (1.0 + 1e-2), "lowest |λ| = {low}");
}

#[test]
fn wall_pair_on_circle_hybridizes() {
    // Oracle: the same construction at a quarter of the resolution must show
    // the same two low modes.
    for n in [128usize, 512] {
        let lat = Lattice1D::new(n, 40.0, Boundary::Periodic).unwrap();
        let p = WallProfile::step_line(&lat, &[-10.0, 10.0], 1.0, -1.0).unwrap();
        let op = build_jackiw_rebbi_line(&lat, 1.0, &p).unwrap();
        let spec = eigen(&op, true, None).unwrap();
        let low: Vec<usize> = (0..spec.eigenvalues.len()).filter(|&i| spec.eigenvalues[i].abs() < 0.9).collect();
        assert_eq!(low.len(), 2, "n = {n}");
        let v = spec.eigenvectors.as_ref().unwrap();
        let g = op.grading.as_ref().unwrap();
        for &i in &low {
            assert!(spec.eigenvalues[i].abs() < 1e-6);
        }
        // Hybridized pair: rotate to the chirality eigenbasis within the pair.
        let a = linalg::column(v.as_ref(), low[0]);
        let b = linalg::column(v.as_ref(), low[1]);
        let off = linalg::dot(&a, &g.apply(&b));
        let (gaa, gbb) = (g.expectation(&a), g.expectation(&b));
        let tr = gaa + gbb;
        let det = gaa * gbb - off.norm_sqr();
        // Eigenvalues ±1 of the compressed grading: trace 0, determinant −1.
        assert!(tr.abs() < 1e-8 && (det + 1.0).abs() < 1e-8, "trace {tr}, det {det}");
    }
}

#[test]
fn odd_wall_count_on_circle_is_rejected() {
    let lat = Lattice1D::new(64, 10.0, Boundary::Periodic).unwrap();
    assert_eq!(WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap_err(), Error::OddWallCountOnCircle(1));
}

#[test]
fn circle_operator_spectrum_is_shifted_integers() {
    let a = build_circle_operator_a(64, 0.3, 2.0 * PI).unwrap();
    let spec = eigen(&a, false, None).unwrap();
    for (j, l) in spec.eigenvalues.iter().enumerate() {
        assert!((l - ((j as f64 - 32.0) + 0.3)).abs() < 1e-10);
    }
    assert!((sorted_abs(&spec.eigenvalues)[0] - 0.3).abs() < 1e-10);

    let half = eigen(&build_circle_operator_a(64, 0.5, 2.0 * PI).unwrap(), false, None).unwrap();
    assert_eq!(eta_sign_sum(&half, false).unwrap().value, 0);
    for (x, y) in half.eigenvalues.iter().zip(half.eigenvalues.iter().rev()) {
        assert!((x + y).abs() < 1e-10);
    }
    assert!(matches!(build_circle_operator_a(64, 1.0, 2.0 * PI), Err(Error::ZeroModeOnBoundary(_))));
    assert_eq!(build_circle_operator_a(4, 0.3, 1.0).unwrap_err(), Error::DegenerateLattice(4));
}

#[test]
fn uniform_flux_spreads_evenly() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 1, &FluxPlacement::Uniform, 0.0).unwrap();
    for p in g.plaquettes() {
        assert!((p - 2.0 * PI / 256.0).abs() < 1e-12);
    }
    assert!((g.total_charge() - 1.0).abs() < 1e-12);
}

#[test]
fn flat_field_carries_only_holonomy() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 0, &FluxPlacement::Uniform, 0.3).unwrap();
    assert!(g.max_plaquette() < 1e-12);
    let expect = C64::from_polar(1.0, 2.0 * PI * 0.3 / 16.0);
    for ix in 0..16 {
        for iy in 0..16 {
            assert!((g.link_y(ix, iy) - expect).norm() < 1e-12);
        }
        assert!((g.column_holonomy(ix) - 0.3).abs() < 1e-12);
    }
}

#[test]
fn localized_flux_stays_in_its_window() {
    let lat = TorusLattice2D::new(16, 16, 16.0, 16.0, 4..8, 2).unwrap();
    let g = make_gauge_flux(&lat, 2, &FluxPlacement::Localized { x_lo: 10, x_hi: 14 }, 0.3).unwrap();
    let mut total = 0.0;
    for ix in 0..16 {
        for iy in 0..16 {
            let p = g.plaquette(ix, iy);
            if !(10..14).contains(&ix) {
                assert!(p.abs() < 1e-12, "plaquette ({ix},{iy}) = {p}");
            }
            total += p;
        }
    }
    assert!((total - 4.0 * PI).abs() < 1e-10);

    let err = make_gauge_flux(&lat, 1, &FluxPlacement::Localized { x_lo: 5, x_hi: 7 }, 0.3).unwrap_err();
    assert!(matches!(err, Error::FluxInCollar { .. }));
}

/// Index of the overlap operator from the sign of the Hermitian Wilson
/// operator, `−½ tr sign(D − mΓ)`, independent of any kernel computation.
fn overlap_sign_oracle(d: &GradedOperator) -> i64 {
    let g = d.grading_matrix().unwrap();
    let m = d.index_mass.unwrap();
    let h = linalg::sub(d.matrix.as_ref(), (&g * faer::Scale(C64::new(m, 0.0))).as_ref());
    let ev = h.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    let s: f64 = ev.iter().map(|l| l.signum()).sum();
    -(s / 2.0).round() as i64
}

#[test]
fn wilson_torus_index_matches_sign_oracle() {
    let small = TorusLattice2D::new(8, 8, 8.0, 8.0, 2..6, 2).unwrap();
    let big = TorusLattice2D::half_split(16).unwrap();
    for lat in [&small, &big] {
        for q in [-2i64, 1] {
            let g = make_gauge_flux(lat, q, &FluxPlacement::Uniform, 0.3).unwrap();
            let d = build_torus_dirac(lat, &g, TorusScheme::Wilson { r: 1.0 }).unwrap();
            assert!(!d.chiral_flag);
            let idx = chiral_index(&d, None).unwrap();
            assert_eq!(idx.index, overlap_sign_oracle(&d), "{}x{} Q={q}", lat.n_x, lat.n_y);
            assert_eq!(idx.index, q);
        }
    }
}

#[test]
fn gauge_conjugation_flips_the_index() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 2, &FluxPlacement::Uniform, 0.3).unwrap();
    let d = build_torus_dirac(&lat, &g.conjugate(), TorusScheme::Wilson { r: 1.0 }).unwrap();
    assert_eq!(chiral_index(&d, None).unwrap().index, -2);
}

#[test]
fn spectral_chiral_torus_is_symmetric() {
    let lat = TorusLattice2D::half_split(16).unwrap();
    let g = make_gauge_flux(&lat, 0, &FluxPlacement::Uniform, 0.3).unwrap();
    let d = build_torus_dirac(&lat, &g, TorusScheme::SpectralChiral).unwrap();
    assert!(d.chiral_flag);
    assert!(d.anticommutator_residual() < 1e-10);
    let spec = eigen(&d, false, None).unwrap();
    let n = spec.eigenvalues.len();
    for i in 0..n {
        assert!((spec.eigenvalues[i] + spec.eigenvalues[n - 1 - i]).abs() < 1e-9);
    }
    assert_eq!(chiral_index(&d, None).unwrap().index, 0);

    let charged = make_gauge_flux(&lat, 1, &FluxPlacement::Uniform, 0.3).unwrap();
    assert!(matches!(build_torus_dirac(&lat, &charged, TorusScheme::SpectralChiral), Err(Error::ChiralSchemeWithFlux(_))));
}

#[test]
fn constant_wall_mass_lifts_spectrum_by_chirality() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = random_chiral(&mut rng, 7, 4, 3, 0.5).unwrap();
    let m = 0.7;
    let dspec = eigen(&d, false, None).unwrap();
    let mut expected: Vec<f64> = Vec::new();
    for &l in &dspec.eigenvalues {
        if l.abs() > dspec.zero_threshold {
            expected.push(l.signum() * (l * l + m * m).sqrt());
        }
    }
    // Kernel: 4 vectors of chirality + and 1 of chirality −.
    expected.extend([m, m, m, m, -m]);
    expected.sort_by(f64::total_cmp);
    let k = WallProfile::constant(&d.geometry_tag.key, d.dim(), 1.0);
    let got = eigen(&apply_domain_wall(&d, m, &k).unwrap(), false, None).unwrap().eigenvalues;
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn domain_wall_rejects_foreign_profiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = random_chiral(&mut rng, 3, 3, 2, 0.5).unwrap();
    let k = WallProfile::constant("elsewhere", d.dim(), 1.0);
    assert!(matches!(apply_domain_wall(&d, 1.0, &k), Err(Error::GeometryMismatch { .. })));
}

#[test]
fn cylinder_over_zero_operator_is_two_jackiw_rebbi_lines() {
    // Oracle: D = 0 on ℂ² with Γ = diag(1, −1) splits into two lines with
    // mass profiles +mκ and −mκ.
    let lat = Lattice1D::new(128, 20.0, Boundary::Dirichlet).unwrap();
    let p = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
    let flipped = WallProfile::step_line(&lat, &[0.0], -1.0, 1.0).unwrap();
    let d = chiral_from_block(&faer::Mat::zeros(1, 1)).unwrap();
    let c = build_cylinder_extension(&d, 1.0, &p, &lat).unwrap();
    let got = eigen(&c, false, None).unwrap().eigenvalues;
    let mut expected = eigen(&build_jackiw_rebbi_line(&lat, 1.0, &p).unwrap(), false, None).unwrap().eigenvalues;
    expected.extend(eigen(&build_jackiw_rebbi_line(&lat, 1.0, &flipped).unwrap(), false, None).unwrap().eigenvalues);
    expected.sort_by(f64::total_cmp);
    assert_eq!(got.len(), expected.len());
    for (a, b) in got.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn cylinder_index_is_minus_the_index() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let lat = Lattice1D::new(64, 8.0, Boundary::Dirichlet).unwrap();
    let p = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
    for (np, nm) in [(5usize, 3usize), (3, 4)] {
        let d = random_chiral(&mut rng, np, nm, 3, 0.5).unwrap();
        let k = chiral_index(&d, None).unwrap().index;
        let c = build_cylinder_extension(&d, 2.0, &p, &lat).unwrap();
        assert_eq!(chiral_index(&c, None).unwrap().index, -k);
    }
}

#[test]
fn cylinder_without_wall_has_no_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = random_chiral(&mut rng, 4, 3, 2, 0.5).unwrap();
    let lat = Lattice1D::new(64, 8.0, Boundary::Dirichlet).unwrap();
    let m = 1.0;
    let c = build_cylinder_extension(&d, m, &WallProfile::constant_line(&lat, 1.0), &lat).unwrap();
    let spec = eigen(&c, false, None).unwrap();
    let low = sorted_abs(&spec.eigenvalues)[0];
    let dspec = eigen(&d, false, None).unwrap();
    let gap_d = dspec.eigenvalues.iter().map(|l| l.abs()).filter(|&l| l > dspec.zero_threshold).fold(f64::INFINITY, f64::min);
    assert!(low > 0.8 * gap_d.min(m), "lowest {low}, expected about {}", gap_d.min(m));
}

#[test]
fn cylinder_profile_must_settle_at_the_ends() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let d = random_chiral(&mut rng, 2, 2, 1, 0.5).unwrap();
    let lat = Lattice1D::new(64, 8.0, Boundary::Dirichlet).unwrap();
    let p = WallProfile::step_line(&lat, &[-3.6], 1.0, -1.0).unwrap();
    assert_eq!(build_cylinder_extension(&d, 1.0, &p, &lat).unwrap_err(), Error::ProfileNotAsymptoticallyConstant);
}

#[test]
fn narrow_smoothing_reproduces_the_step() {
    let lat = Lattice1D::new(512, 40.0, Boundary::Dirichlet).unwrap();
    let step = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
    let a = lat.spacing();
    let s = smooth_wall_profile(&step, 0.06 * a, a).unwrap();
    for (x, y) in s.profile.samples.iter().zip(&step.samples) {
        assert!((x - y).abs() < 1e-6);
    }
    assert!(s.l2_distance <= a.sqrt());
    assert!(matches!(smooth_wall_profile(&step, 0.01 * a, a), Err(Error::WidthBelowResolution { .. })));
}

#[test]
fn smoothing_distance_matches_closed_form() {
    // ∫(tanh(t/w) − sgn t)² dt = 2w(2 ln 2 − 1).
    let lat = Lattice1D::new(512, 40.0, Boundary::Dirichlet).unwrap();
    let step = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
    let w = 0.5;
    let s = smooth_wall_profile(&step, w, lat.spacing()).unwrap();
    let exact = (2.0 * w * (2.0 * 2f64.ln() - 1.0)).sqrt();
    assert!((s.l2_distance - exact).abs() < 0.05 * exact, "{} vs {exact}", s.l2_distance);
}

#[test]
fn asymmetric_smoothing_stays_between_levels() {
    let lat = Lattice1D::new(512, 40.0, Boundary::Dirichlet).unwrap();
    let step = WallProfile::step_line(&lat, &[0.0], 1.0, -10.0).unwrap();
    let w = 0.5;
    let s = smooth_wall_profile(&step, w, lat.spacing()).unwrap();
    for (v, d) in s.profile.samples.iter().zip(&step.signed_distance) {
        assert!((-10.0..=1.0).contains(v));
        if d.abs() >= 10.0 * w {
            let target = if *d > 0.0 { 1.0 } else { -10.0 };
            assert!((v - target).abs() < 1e-6);
        }
    }
}

#[test]
fn lanczos_matches_dense() {
    let lat = Lattice1D::new(200, 20.0, Boundary::Dirichlet).unwrap();
    let p = WallProfile::step_line(&lat, &[0.0], 1.0, -1.0).unwrap();
    let op = build_jackiw_rebbi_line(&lat, 1.0, &p).unwrap();
    let full = sorted_abs(&eigen(&op, false, None).unwrap().eigenvalues);
    let part = eigen(&op, true, Some(5)).unwrap();
    assert_eq!(part.eigenvalues.len(), 5);
    assert!(!part.complete);
    let got = sorted_abs(&part.eigenvalues);
    for (a, b) in got.iter().zip(&full) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

#[test]
fn small_eigen_examples() {
    let diag = GradedOperator::new(linalg::from_real_diag(&[1.0, -1.0, 0.0]), None, GeometryTag::new("x", "x")).unwrap();
    assert_eq!(eigen(&diag, false, None).unwrap().eigenvalues, vec![-1.0, 0.0, 1.0]);

    let sx = GradedOperator::new(
        faer::Mat::from_fn(2, 2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }),
        None,
        GeometryTag::new("x", "x"),
    )
    .unwrap();
    let s = eigen(&sx, true, None).unwrap();
    assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14 && (s.eigenvalues[1] - 1.0).abs() < 1e-14);
    let v = s.eigenvectors.unwrap();
    let r = 1.0 / 2f64.sqrt();
    // Up to a global phase: (1, −1)/√2 and (1, 1)/√2.
    assert!(((v[(0, 0)] * v[(1, 0)].conj()).re + 0.5).abs() < 1e-14);
    assert!(((v[(0, 1)] * v[(1, 1)].conj()).re - 0.5).abs() < 1e-14);
    assert!((v[(0, 0)].norm() - r).abs() < 1e-14);
}

#[test]
fn non_hermitian_input_is_rejected() {
    let m = faer::Mat::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 0.0));
    assert!(GradedOperator::new(m, None, GeometryTag::new("x", "x")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn triplet_round_trip(seed in any::<u64>(), np in 1usize..6, nm in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = np.min(nm) / 2;
        let d = random_chiral(&mut rng, np, nm, rank, 0.5).unwrap();
        let mut buf = Vec::new();
        write_triplets(&d, &mut buf).unwrap();
        let back = read_triplets(std::io::Cursor::new(buf)).unwrap();
        prop_assert_eq!(back.dim(), d.dim());
        prop_assert_eq!(&back.geometry_tag, &d.geometry_tag);
        prop_assert_eq!(back.chiral_flag, d.chiral_flag);
        for i in 0..d.dim() {
            for j in 0..d.dim() {
                prop_assert_eq!(back.matrix[(i, j)], d.matrix[(i, j)]);
            }
        }
        let (g0, g1) = (d.grading_matrix().unwrap(), back.grading_matrix().unwrap());
        for i in 0..d.dim() {
            prop_assert_eq!(g0[(i, i)], g1[(i, i)]);
        }
    }
}

#[test]
fn malformed_triplets_are_rejected() {
    let text = "#{\"dim\":2}\n0 0 1.0\n";
    assert!(matches!(read_triplets(std::io::Cursor::new(text)), Err(Error::Parse(_))));
}
