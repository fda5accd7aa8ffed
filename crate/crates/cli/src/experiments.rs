//! One driver per experiment kind. Each returns integers, a JSON report, an
//! invariant ledger and data tables; persistence lives in `output`.

use std::collections::BTreeMap;

use dwlab::aps::*;
use dwlab::gauge::*;
use dwlab::lattice::*;
use dwlab::linalg;
use dwlab::localization::*;
use dwlab::operators::*;
use dwlab::profile::*;
use dwlab::spectral::*;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ExperimentKind, FluxKind, SchemeKind};

/// Eigenvalues below this are counted as zero modes of a line operator.
pub const ZERO_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct LedgerEntry {
    pub name: String,
    pub passed: bool,
    pub residual: Option<f64>,
    pub detail: String,
}

impl LedgerEntry {
    pub fn new(name: impl Into<String>, passed: bool, residual: Option<f64>, detail: impl Into<String>) -> Self {
        LedgerEntry { name: name.into(), passed, residual, detail: detail.into() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    pub fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
        }
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}
impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// A CSV file, written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: impl Into<String>, headers: &[&'static str]) -> Self {
        Table { name: name.into(), headers: headers.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub integers: BTreeMap<String, i64>,
    pub report: Value,
    pub ledger: Vec<LedgerEntry>,
    pub tables: Vec<Table>,
}

impl Outcome {
    fn check(&mut self, name: impl Into<String>, passed: bool, residual: Option<f64>, detail: impl Into<String>) {
        self.ledger.push(LedgerEntry::new(name, passed, residual, detail));
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    match cfg.kind {
        ExperimentKind::Jr => jr(cfg),
        ExperimentKind::GapScan => gap_scan_experiment(cfg),
        ExperimentKind::AsEta => as_eta(cfg),
        ExperimentKind::Product => product(cfg),
        ExperimentKind::ApsIndex => aps_index_experiment(cfg),
        ExperimentKind::MainTheorem => main_theorem(cfg),
        ExperimentKind::Excision => excision(cfg),
        ExperimentKind::Smoothing => smoothing(cfg),
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

fn spectrum_table(name: String, eigenvalues: &[f64]) -> Table {
    let mut t = Table::new(name, &["index", "eigenvalue"]);
    for (i, &l) in eigenvalues.iter().enumerate() {
        t.push(vec![i.into(), l.into()]);
    }
    t
}

/// Eigenvalue histogram with 40 equal bins over the spectral range.
fn histogram_table(name: String, eigenvalues: &[f64]) -> Table {
    const BINS: usize = 40;
    let mut t = Table::new(name, &["bin_lo", "bin_hi", "count"]);
    let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(lo < hi) {
        return t;
    }
    let w = (hi - lo) / BINS as f64;
    let mut counts = [0usize; BINS];
    for &l in eigenvalues {
        counts[(((l - lo) / w) as usize).min(BINS - 1)] += 1;
    }
    for (b, &c) in counts.iter().enumerate() {
        t.push(vec![(lo + b as f64 * w).into(), (lo + (b + 1) as f64 * w).into(), c.into()]);
    }
    t
}

fn torus_gauge(cfg: &ExperimentConfig, lat: &TorusLattice2D) -> dwlab::Result<GaugeLinkField> {
    let g = &cfg.geometry;
    let placement = match g.flux {
        FluxKind::Uniform => FluxPlacement::Uniform,
        FluxKind::Localized => {
            // The window is given for `torus` columns and scaled to this size.
            let scale = |c: usize| ((c * lat.n_x) as f64 / g.torus as f64).round() as usize;
            FluxPlacement::Localized { x_lo: scale(g.flux_window[0]), x_hi: scale(g.flux_window[1]) }
        }
    };
    let field = make_gauge_flux(lat, g.flux_charge, &placement, g.holonomy)?;
    Ok(if g.conjugate { field.conjugate() } else { field })
}

fn torus_scheme(cfg: &ExperimentConfig) -> TorusScheme {
    match cfg.operator.scheme {
        SchemeKind::SpectralChiral => TorusScheme::SpectralChiral,
        _ => TorusScheme::Wilson { r: cfg.operator.wilson_r },
    }
}

fn jr(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let g = &cfg.geometry;
    let o = &cfg.operator;
    let lat = Lattice1D::new(g.sites, g.extent, g.boundary.into())?;
    let profile = WallProfile::step_line(&lat, &g.walls, o.kappa_plus, o.kappa_minus)?;
    let region = RegionSpec { center: RegionCenter::Walls { points: g.walls.clone() }, overlap_lo: g.overlap[0], overlap_hi: g.overlap[1] };
    let part = build_cutoffs(Sites::Line(&lat), &region)?;
    let partition_checks = part.validate();
    let level = o.kappa_plus.abs().min(o.kappa_minus.abs());
    let expected_decay = 0.5 * (o.kappa_plus.abs() + o.kappa_minus.abs());

    struct PerMass {
        eigenvalues: Vec<f64>,
        zero_modes: Vec<usize>,
        chirality: Vec<f64>,
        inside_gap: usize,
        localization: Option<LocalizationProfile>,
        bounds: Option<BoundReport>,
        constants: SymbolConstants,
    }
    let per_mass: Vec<PerMass> = o
        .masses
        .par_iter()
        .map(|&m| {
            let op = build_jackiw_rebbi_line(&lat, m, &profile)?;
            let spec = eigen(&op, true, None)?;
            let v = spec.eigenvectors.as_ref().expect("vectors requested");
            let zero_modes: Vec<usize> = (0..spec.eigenvalues.len()).filter(|&i| spec.eigenvalues[i].abs() < ZERO_TOL).collect();
            let grading = op.grading.as_ref().ok_or(dwlab::Error::MissingGrading)?;
            let chirality = zero_modes
                .iter()
                .map(|&i| {
                    let col = linalg::column(v.as_ref(), i);
                    linalg::dot(&col, &grading.apply(&col)).re / linalg::dot(&col, &col).re
                })
                .collect();
            let inside_gap = spec.eigenvalues.iter().filter(|l| l.abs() >= ZERO_TOL && l.abs() < 0.9 * m * level).count();
            let localization = match zero_modes.as_slice() {
                [i] => Some(mode_localization(&spec, *i, SiteGeometry::Line(&lat))?),
                _ => None,
            };
            let constants = symbol_constants(&op, &part)?;
            let bounds = if zero_modes.is_empty() {
                None
            } else {
                let cols = Mat::from_fn(v.nrows(), zero_modes.len(), |i, j| v[(i, zero_modes[j])]);
                Some(check_localization_bounds(&op, &part, &constants, m, 0.1 * m, &cols)?)
            };
            Ok(PerMass { eigenvalues: spec.eigenvalues, zero_modes, chirality, inside_gap, localization, bounds, constants })
        })
        .collect::<dwlab::Result<_>>()?;

    let mut out = Outcome::default();
    let pc = &partition_checks;
    let worst = [pc.beta_unity_residual, pc.gamma_unity_residual, pc.gamma_on_dbeta_residual, pc.beta_off_residual, pc.gamma_on_residual]
        .into_iter()
        .fold(0.0, f64::max);
    out.check("partition_invariants", pc.passed, Some(worst), "");
    let mut reports = Vec::new();
    let mut kappa = Table::new("kappa_profile", &["coord", "kappa"]);
    for (x, k) in lat.site_coords.iter().zip(&profile.samples) {
        kappa.push(vec![(*x).into(), (*k).into()]);
    }
    out.tables.push(kappa);
    for (j, (&m, r)) in o.masses.iter().zip(&per_mass).enumerate() {
        let n_zero = r.zero_modes.len();
        out.integers.insert(format!("zero_modes_m{j}"), n_zero as i64);
        out.check(format!("zero_mode_count_m{j}"), n_zero == g.walls.len(), None, format!("m = {m}: {n_zero} zero mode(s) for {} wall(s)", g.walls.len()));
        out.check(format!("gap_m{j}"), r.inside_gap == 0, None, format!("{} nonzero eigenvalue(s) with |lambda| < {}", r.inside_gap, 0.9 * m * level));
        let worst = r.chirality.iter().map(|c| (c.abs() - 1.0).abs()).fold(0.0, f64::max);
        out.check(format!("zero_mode_chirality_m{j}"), worst <= 1e-6, Some(worst), format!("chirality {:?}", r.chirality));
        if let [c] = r.chirality.as_slice() {
            out.integers.insert(format!("zero_mode_chirality_m{j}"), c.round() as i64);
        }
        if let Some(loc) = &r.localization {
            let want = m * expected_decay;
            let rel = (loc.fitted_decay_rate - want).abs() / want;
            out.check(format!("decay_rate_m{j}"), rel <= 0.02, Some(rel), format!("fitted {} against {want}", loc.fitted_decay_rate));
            let mut t = Table::new(format!("mode_profile_m{j}"), &["coord", "amplitude"]);
            for (x, a) in loc.coords.iter().zip(&loc.amplitude) {
                t.push(vec![(*x).into(), (*a).into()]);
            }
            out.tables.push(t);
        }
        if let Some(b) = &r.bounds {
            out.check(format!("localization_bounds_m{j}"), b.all_hold, None, format!("{} zero mode(s) at Lambda = {}", b.modes.len(), 0.1 * m));
        }
        out.tables.push(spectrum_table(format!("spectrum_m{j}"), &r.eigenvalues));
        out.tables.push(histogram_table(format!("eigenvalue_histogram_m{j}"), &r.eigenvalues));
        reports.push(json!({
            "m": m,
            "zero_mode_eigenvalues": r.zero_modes.iter().map(|&i| r.eigenvalues[i]).collect::<Vec<_>>(),
            "chirality": r.chirality,
            "nonzero_inside_gap": r.inside_gap,
            "localization": r.localization,
            "symbol_constants": r.constants,
            "bounds": r.bounds,
        }));
    }
    out.report = json!({ "lattice": { "sites": lat.n_sites, "extent": lat.extent, "spacing": lat.spacing() }, "masses": reports });
    Ok(out)
}

fn gap_scan_experiment(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let lat = TorusLattice2D::half_split(cfg.geometry.torus)?;
    let field = torus_gauge(cfg, &lat)?;
    let d = build_torus_dirac(&lat, &field, torus_scheme(cfg))?;
    let kappa = WallProfile::step_torus(&lat, cfg.operator.kappa_plus, cfg.operator.kappa_minus);
    let lambda_a = cfg.geometry.holonomy * 2.0 * std::f64::consts::PI / lat.extent_y;
    let r = gap_scan(&d, &kappa, &cfg.scan.m_values, lambda_a / 2.0)?;

    let mut out = Outcome::default();
    let mut t = Table::new("gap_scan", &["m", "smallest_abs", "eigenvalues_inside", "gap_holds"]);
    for p in &r.points {
        t.push(vec![p.m.into(), p.smallest_abs.into(), p.eigenvalues_inside.len().into(), p.gap_holds.into()]);
    }
    out.tables.push(t);
    out.integers.insert("points_with_gap".into(), r.points.iter().filter(|p| p.gap_holds).count() as i64);
    out.check("m_star_found", r.m_star.is_some(), None, format!("m* = {:?}, half width {}", r.m_star, r.half_width));
    if let Some(ms) = r.m_star {
        let persists = r.points.iter().filter(|p| p.m >= ms).all(|p| p.gap_holds);
        out.check("gap_persists_above_m_star", persists, None, "");
    }
    out.report = json!({ "lambda_a": lambda_a, "scan": r });
    Ok(out)
}

struct RandomCase {
    n_plus: usize,
    n_minus: usize,
    rank: usize,
    d: GradedOperator,
}

fn random_cases(cfg: &ExperimentConfig) -> dwlab::Result<Vec<RandomCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.scan.instances)
        .map(|_| {
            let n_plus = rng.gen_range(1..=cfg.operator.max_block);
            let n_minus = rng.gen_range(1..=cfg.operator.max_block);
            let rank = rng.gen_range(0..=n_plus.min(n_minus));
            let d = random_chiral(&mut rng, n_plus, n_minus, rank, cfg.operator.s_min)?;
            Ok(RandomCase { n_plus, n_minus, rank, d })
        })
        .collect()
}

fn as_eta(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let masses = &cfg.operator.masses;
    let mut out = Outcome::default();
    let mut t = Table::new("as_eta", &["instance", "n_plus", "n_minus", "rank", "m", "index", "eta_plus", "eta_minus", "rhs", "equal"]);
    let mut reports = Vec::new();
    let mut mismatches = 0usize;
    let mut planted_misses = 0usize;

    // Random instances are drawn sequentially so the draw order never depends on the pool.
    let cases: Vec<(Option<(usize, usize, usize)>, GradedOperator)> = if cfg.operator.scheme == SchemeKind::Random {
        random_cases(cfg)?.into_iter().map(|c| (Some((c.n_plus, c.n_minus, c.rank)), c.d)).collect()
    } else {
        let lat = TorusLattice2D::half_split(cfg.geometry.torus)?;
        let field = torus_gauge(cfg, &lat)?;
        vec![(None, build_torus_dirac(&lat, &field, torus_scheme(cfg))?)]
    };
    let jobs: Vec<(usize, f64)> = (0..cases.len()).flat_map(|i| masses.iter().map(move |&m| (i, m))).collect();
    let results: Vec<AsEtaReport> = jobs.par_iter().map(|&(i, m)| as_eta_identity_check(&cases[i].1, m)).collect::<dwlab::Result<_>>()?;

    for (&(i, m), r) in jobs.iter().zip(&results) {
        let (np, nm, rank) = cases[i].0.unwrap_or((0, 0, 0));
        if !r.equal {
            mismatches += 1;
        }
        if cases[i].0.is_some() && r.lhs != (np - rank) as i64 - (nm - rank) as i64 {
            planted_misses += 1;
        }
        t.push(vec![i.into(), np.into(), nm.into(), rank.into(), m.into(), r.lhs.into(), r.eta_plus.value.into(), r.eta_minus.value.into(), r.rhs.into(), r.equal.into()]);
        reports.push(json!({ "instance": i, "m": m, "report": r }));
    }
    out.tables.push(t);
    out.integers.insert("comparisons".into(), results.len() as i64);
    out.integers.insert("mismatches".into(), mismatches as i64);
    if let [r] = results.as_slice() {
        out.integers.insert("index".into(), r.lhs);
    }
    out.check("as_eta_identity", mismatches == 0, None, format!("{mismatches} of {} comparisons differ", results.len()));
    if cfg.operator.scheme == SchemeKind::Random {
        out.check("planted_index", planted_misses == 0, None, format!("{planted_misses} index(es) differ from the planted kernel"));
    }
    out.report = json!({ "scheme": cfg.operator.scheme, "comparisons": reports });
    Ok(out)
}

fn product(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let g = &cfg.geometry;
    let lat = Lattice1D::new(g.sites, g.extent, g.boundary.into())?;
    let profile = WallProfile::step_line(&lat, &g.walls, cfg.operator.kappa_plus, cfg.operator.kappa_minus)?;
    let base = cfg.operator.max_block;
    let rank = base.saturating_sub(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ks: Vec<i64> = (0..cfg.scan.instances).map(|i| [-2i64, -1, 0, 1, 2][i % 5]).collect();
    let ds: Vec<GradedOperator> = ks
        .iter()
        .map(|&k| random_chiral(&mut rng, base + k.max(0) as usize, base + (-k).max(0) as usize, rank, cfg.operator.s_min))
        .collect::<dwlab::Result<_>>()?;

    struct Row {
        lambda_hat: f64,
        m: f64,
        index: i64,
        stray: usize,
    }
    let rows: Vec<Row> = ds
        .par_iter()
        .map(|d| {
            let d_spec = eigen(d, false, None)?;
            let lambda_hat = d_spec.eigenvalues.iter().map(|l| l.abs()).filter(|&l| l > d_spec.zero_threshold).fold(f64::INFINITY, f64::min);
            let m = 2.0 * lambda_hat.max(1.0);
            let c = build_cylinder_extension(d, m, &profile, &lat)?;
            let index = chiral_index(&c, None)?.index;
            let c_spec = eigen(&c, false, None)?;
            let delta = 0.1 * lambda_hat;
            let stray = c_spec.eigenvalues.iter().filter(|l| l.abs() > c_spec.zero_threshold && l.abs() < lambda_hat - delta).count();
            Ok(Row { lambda_hat, m, index, stray })
        })
        .collect::<dwlab::Result<_>>()?;

    let mut out = Outcome::default();
    let mut t = Table::new("product", &["instance", "k", "lambda_hat", "m", "cylinder_index", "stray_eigenvalues"]);
    let mut signs = Vec::new();
    for (i, (k, r)) in ks.iter().zip(&rows).enumerate() {
        t.push(vec![i.into(), (*k).into(), r.lambda_hat.into(), r.m.into(), r.index.into(), r.stray.into()]);
        if *k != 0 && r.index != 0 {
            signs.push(r.index.signum() * k.signum());
        }
    }
    out.tables.push(t);
    let magnitudes = ks.iter().zip(&rows).all(|(k, r)| r.index.abs() == k.abs());
    let consistent = signs.windows(2).all(|w| w[0] == w[1]);
    let stray: usize = rows.iter().map(|r| r.stray).sum();
    out.check("index_magnitude", magnitudes, None, "");
    out.check("consistent_sign", consistent, None, format!("sign {:?}", signs.first()));
    out.check("gap_around_zero", stray == 0, None, format!("{stray} eigenvalue(s) in (-0.9 lambda_hat, 0.9 lambda_hat) besides zero"));
    if let Some(&s) = signs.first() {
        out.integers.insert("sign".into(), s);
    }
    out.report = json!({
        "instances": ks.iter().zip(&rows).map(|(k, r)| json!({ "k": k, "lambda_hat": r.lambda_hat, "m": r.m, "cylinder_index": r.index, "stray": r.stray })).collect::<Vec<_>>(),
    });
    Ok(out)
}

fn aps_index_experiment(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let lat = TorusLattice2D::half_split(cfg.geometry.torus)?;
    let field = torus_gauge(cfg, &lat)?;
    let problem = build_half_torus_problem(&lat, &field, cfg.geometry.cylinder_len)?;
    let r = aps_index(&problem, None)?;
    let holonomies = unwrapped_holonomies(&lat, &field);

    let mut out = Outcome::default();
    out.integers.insert("aps_index".into(), r.index.index);
    out.check("boundary_product_form", r.collar_residual <= 1e-10, Some(r.collar_residual), "");
    out.check("boundary_gap", r.lambda_a_left > 0.0 && r.lambda_a_right > 0.0, None, format!("lambda_A {} / {}", r.lambda_a_left, r.lambda_a_right));
    let trace_dev = (r.index.chirality_trace - r.index.index as f64).abs();
    out.check("integral_chirality_trace", trace_dev <= 0.01, Some(trace_dev), "");
    out.check(
        "spectral_projections",
        problem.left.idempotency_residual <= 1e-10 && problem.right.idempotency_residual <= 1e-10,
        Some(problem.left.idempotency_residual.max(problem.right.idempotency_residual)),
        "",
    );
    let mut t = Table::new("holonomy", &["column", "unwrapped_holonomy"]);
    for (ix, h) in lat.x_plus.clone().zip(&holonomies) {
        t.push(vec![ix.into(), (*h).into()]);
    }
    out.tables.push(t);
    let eta_left = eta_circle_exact(problem.holonomy_left).ok();
    let eta_right = eta_circle_exact(problem.holonomy_right).ok();
    out.report = json!({ "aps": r, "boundary_eta": { "left": eta_left, "right": eta_right } });
    Ok(out)
}

fn setup_for(cfg: &ExperimentConfig) -> MainTheoremSetup {
    MainTheoremSetup {
        m_values: cfg.scan.m_values.clone(),
        widths: cfg.scan.widths.clone(),
        kappa_plus: cfg.operator.kappa_plus,
        kappa_minus: cfg.operator.kappa_minus,
        scheme: torus_scheme(cfg),
        cylinder_len: cfg.geometry.cylinder_len,
    }
}

fn rhs_table(name: String, r: &MainTheoremReport) -> Table {
    let mut t = Table::new(name, &["m", "width", "eta_dw", "eta_const", "rhs"]);
    for p in &r.points {
        t.push(vec![p.m.into(), p.width.into(), p.eta_dw.into(), p.eta_const.into(), p.rhs.into()]);
    }
    t
}

fn kappa_tables(lat: &TorusLattice2D, cfg: &ExperimentConfig, out: &mut Outcome, suffix: &str) -> dwlab::Result<()> {
    let step = WallProfile::step_torus(lat, cfg.operator.kappa_plus, cfg.operator.kappa_minus);
    for (j, &w) in cfg.scan.widths.iter().enumerate() {
        let s = smooth_wall_profile(&step, w, lat.spacing_x())?;
        let mut t = Table::new(format!("kappa_profile{suffix}_w{j}"), &["x", "kappa"]);
        for ix in 0..lat.n_x {
            t.push(vec![lat.x_coord(ix).into(), s.profile.samples[lat.site(ix, 0)].into()]);
        }
        out.tables.push(t);
    }
    Ok(())
}

fn main_theorem(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let mut out = Outcome::default();
    let mut reports = Vec::new();
    let mut integers = Vec::new();
    for &n in &cfg.scan.sizes {
        let lat = TorusLattice2D::half_split(n)?;
        let field = torus_gauge(cfg, &lat)?;
        let r = main_theorem_check(&lat, &field, &setup_for(cfg))?;
        out.integers.insert(format!("aps_index_n{n}"), r.aps_index);
        if let Some(p) = &r.plateau {
            out.integers.insert(format!("plateau_rhs_n{n}"), p.value as i64);
        }
        out.check(format!("plateau_found_n{n}"), r.plateau_found, None, format!("{:?}", r.plateau));
        out.check(format!("aps_equals_plateau_n{n}"), r.agrees, None, format!("APS index {}, plateau {:?}", r.aps_index, r.plateau.as_ref().map(|p| p.value)));
        out.tables.push(rhs_table(format!("rhs_vs_m_n{n}"), &r));
        kappa_tables(&lat, cfg, &mut out, &format!("_n{n}"))?;
        integers.push(r.aps_index);
        reports.push(json!({ "size": n, "report": r }));
    }
    if integers.len() > 1 {
        out.check("identical_across_sizes", integers.windows(2).all(|w| w[0] == w[1]), None, format!("{integers:?}"));
    }
    out.report = json!({ "sizes": reports });
    Ok(out)
}

fn excision(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let g = &cfg.geometry;
    let o = &cfg.operator;
    let m = o.masses[0];
    let region = RegionSpec { center: RegionCenter::Walls { points: vec![0.0] }, overlap_lo: g.overlap[0], overlap_hi: g.overlap[1] };
    let z = Lattice1D::new(g.sites, g.extent, g.boundary.into())?;
    let side = jackiw_rebbi_side(&z, m, &WallProfile::step_line(&z, &g.walls, o.kappa_plus, o.kappa_minus)?, &region)?;
    let p = &g.partner;
    let zp = Lattice1D::new(p.sites, p.extent, p.boundary.into())?;
    let side_p = jackiw_rebbi_side(&zp, m, &WallProfile::step_line(&zp, &p.walls, o.kappa_plus, o.kappa_minus)?, &region)?;
    let shared_map = side.partition.region_u0.iter().map(|&i| (i, i + p.shift)).collect();
    let lambdas = (o.lambdas.len() == 3).then(|| [o.lambdas[0], o.lambdas[1], o.lambdas[2]]);
    let r = excision_count_compare(&ExcisionInstance { side, side_p, shared_map, m, lambdas })?;

    let mut out = Outcome::default();
    out.integers.insert("count_l".into(), r.count_l_in_lambda0 as i64);
    out.integers.insert("count_l_prime".into(), r.count_lp_in_lambda1 as i64);
    out.check("counts_equal", r.equal, None, format!("{} vs {}", r.count_l_in_lambda0, r.count_lp_in_lambda1));
    out.check("gap_certified", r.gap_certified, None, "");
    out.check("mass_certified", r.mass_certified, Some(r.mass_bound), format!("m^2 = {} against bound {}", m * m, r.mass_bound));
    out.check("hypotheses_met", r.hypotheses_met, None, format!("{:?}", r.checks.violations));
    out.report = to_json(&r);
    Ok(out)
}

fn smoothing(cfg: &ExperimentConfig) -> dwlab::Result<Outcome> {
    let lat = TorusLattice2D::half_split(cfg.geometry.torus)?;
    let field = torus_gauge(cfg, &lat)?;
    let r = main_theorem_check(&lat, &field, &setup_for(cfg))?;
    let nw = cfg.scan.widths.len();

    let mut out = Outcome::default();
    out.tables.push(rhs_table("rhs_vs_m".into(), &r));
    kappa_tables(&lat, cfg, &mut out, "")?;
    out.check("plateau_found", r.plateau_found, None, format!("{:?}", r.plateau));
    let mut compared = Vec::new();
    if let Some(p) = &r.plateau {
        let mut picks = vec![p.first, (p.first + p.last) / 2, p.last];
        picks.dedup();
        for &i in &picks {
            let etas: Vec<i64> = (0..nw).map(|j| r.points[i * nw + j].eta_dw).collect();
            compared.push(json!({ "m": r.m_values[i], "eta_dw": etas }));
            out.check(format!("eta_equal_across_widths_m{i}"), etas.windows(2).all(|w| w[0] == w[1]), None, format!("m = {}: {etas:?}", r.m_values[i]));
        }
        out.integers.insert("plateau_rhs".into(), p.value as i64);
        out.check("three_plateau_masses", picks.len() == 3, None, format!("{} distinct masses compared", picks.len()));
    }
    out.integers.insert("aps_index".into(), r.aps_index);
    out.report = json!({ "compared": compared, "report": r });
    Ok(out)
}
