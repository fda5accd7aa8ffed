//! Experiment configuration.
//!
//! A config file is a TOML table. Only `kind` is required; every other key
//! falls back to the default for that kind, so the resolved config is always
//! complete and serializes back to a file that parses to the same value.

use std::fmt;
use std::path::PathBuf;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Jr,
    GapScan,
    AsEta,
    Product,
    ApsIndex,
    MainTheorem,
    Excision,
    Smoothing,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::Jr,
        ExperimentKind::GapScan,
        ExperimentKind::AsEta,
        ExperimentKind::Product,
        ExperimentKind::ApsIndex,
        ExperimentKind::MainTheorem,
        ExperimentKind::Excision,
        ExperimentKind::Smoothing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Jr => "jr",
            ExperimentKind::GapScan => "gap-scan",
            ExperimentKind::AsEta => "as-eta",
            ExperimentKind::Product => "product",
            ExperimentKind::ApsIndex => "aps-index",
            ExperimentKind::MainTheorem => "main-theorem",
            ExperimentKind::Excision => "excision",
            ExperimentKind::Smoothing => "smoothing",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Dirichlet,
    Periodic,
}

impl From<BoundaryKind> for dwlab::lattice::Boundary {
    fn from(b: BoundaryKind) -> Self {
        match b {
            BoundaryKind::Dirichlet => dwlab::lattice::Boundary::Dirichlet,
            BoundaryKind::Periodic => dwlab::lattice::Boundary::Periodic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "lowercase")]
pub enum FluxKind {
    Uniform,
    Localized,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Wilson-regularized torus operator, parameter `operator.wilson_r`.
    Wilson,
    /// Exactly chiral Fourier operator on a flat torus.
    SpectralChiral,
    /// Random chiral block matrices with planted kernels (as-eta only).
    Random,
}

/// The second lattice of an excision instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct PartnerBlock {
    pub sites: usize,
    pub extent: f64,
    pub boundary: BoundaryKind,
    pub walls: Vec<f64>,
    /// Site offset identifying the first line's `U₀` inside the partner.
    pub shift: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    /// Sites of the 1D lattice (line experiments, cylinder s-direction).
    pub sites: usize,
    pub extent: f64,
    pub boundary: BoundaryKind,
    /// Wall positions on the 1D lattice.
    pub walls: Vec<f64>,
    /// Side of the square torus split into two halves.
    pub torus: usize,
    pub flux: FluxKind,
    /// Total topological charge of the torus gauge field.
    pub flux_charge: i64,
    /// Columns `[lo, hi)` carrying a localized flux, for the size `torus`.
    pub flux_window: [usize; 2],
    /// Holonomy offset `a` of the gauge field around y.
    pub holonomy: f64,
    pub conjugate: bool,
    /// Cylinder columns attached at each boundary of the half torus.
    pub cylinder_len: usize,
    /// Distances from the wall where the partition cutoffs ramp.
    pub overlap: [f64; 2],
    pub partner: PartnerBlock,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct OperatorBlock {
    pub scheme: SchemeKind,
    pub wilson_r: f64,
    pub masses: Vec<f64>,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    /// Largest chirality block of a random chiral matrix.
    pub max_block: usize,
    /// Smallest nonzero singular value of a random chiral matrix.
    pub s_min: f64,
    /// Spectral windows `Λ₀ ≤ Λ₁ ≤ Λ₂` for excision; empty uses the measured gap.
    pub lambdas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub m_values: Vec<f64>,
    pub widths: Vec<f64>,
    /// Torus sizes for main-theorem repeats.
    pub sizes: Vec<usize>,
    /// Random instances for as-eta and product.
    pub instances: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub geometry: GeometryBlock,
    pub operator: OperatorBlock,
    pub scan: ScanBlock,
}

/// Field-level diagnostics of a config that does not parse or validate.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigInvalid(pub Vec<String>);

impl fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid config:")?;
        for d in &self.0 {
            writeln!(f, "  {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigInvalid {}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            kind,
            seed: 0,
            output_dir: PathBuf::from("runs"),
            geometry: GeometryBlock {
                sites: 512,
                extent: 40.0,
                boundary: BoundaryKind::Dirichlet,
                walls: vec![0.0],
                torus: 16,
                flux: FluxKind::Localized,
                flux_charge: 1,
                flux_window: [6, 9],
                holonomy: 0.3,
                conjugate: false,
                cylinder_len: 8,
                overlap: [3.0, 9.0],
                partner: PartnerBlock {
                    sites: 800,
                    extent: 80.1,
                    boundary: BoundaryKind::Dirichlet,
                    walls: vec![0.0],
                    shift: 200,
                },
            },
            operator: OperatorBlock {
                scheme: SchemeKind::Wilson,
                wilson_r: 1.0,
                masses: vec![1.0],
                kappa_plus: 1.0,
                kappa_minus: -1.0,
                max_block: 32,
                s_min: 0.5,
                lambdas: Vec::new(),
            },
            scan: ScanBlock {
                m_values: log_spaced(0.1, 1.9, 9),
                widths: vec![2.0, 1.0],
                sizes: vec![16],
                instances: 10,
            },
        };
        match kind {
            ExperimentKind::Jr | ExperimentKind::ApsIndex | ExperimentKind::MainTheorem => {}
            ExperimentKind::GapScan => {
                c.scan.m_values = vec![0.001, 0.003, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.3, 1.6, 1.9];
            }
            ExperimentKind::AsEta => {
                c.operator.scheme = SchemeKind::Random;
                c.operator.masses = vec![0.1, 1.0, 10.0];
                c.scan.instances = 50;
                c.geometry.flux = FluxKind::Uniform;
                c.geometry.flux_charge = 0;
            }
            ExperimentKind::Product => {
                c.seed = 11;
                c.geometry.sites = 64;
                c.geometry.extent = 8.0;
                c.operator.max_block = 4;
            }
            ExperimentKind::Excision => {
                c.geometry.sites = 400;
                c.geometry.extent = 40.1;
                c.geometry.overlap = [2.0, 14.0];
                c.operator.masses = vec![4.0];
                c.operator.lambdas = vec![0.0, 1.0 / 2f64.sqrt(), 1.0];
            }
            ExperimentKind::Smoothing => {
                c.scan.widths = vec![1.0, 0.5];
            }
        }
        c
    }

    /// Parses a TOML config, filling absent keys from the kind's defaults.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigInvalid> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigInvalid(vec![e.message().to_string()]))?;
        let kind_value = user.get("kind").ok_or_else(|| ConfigInvalid(vec!["kind: missing".into()]))?;
        let kind: ExperimentKind = kind_value
            .clone()
            .try_into()
            .map_err(|_| ConfigInvalid(vec![format!("kind: unknown experiment kind {kind_value}")]))?;
        let mut merged = toml::Table::try_from(Self::defaults(kind)).expect("defaults serialize");
        merge(&mut merged, user);
        let cfg: ExperimentConfig = toml::Value::Table(merged).try_into().map_err(|e: toml::de::Error| ConfigInvalid(vec![e.message().to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 over the canonical JSON of everything except `output_dir`,
    /// so relocating the output does not change a run's identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let canonical = serde_json::to_string(&c).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical.as_bytes()))
    }

    pub fn validate(&self) -> Result<(), ConfigInvalid> {
        let mut d = Vec::new();
        let g = &self.geometry;
        let o = &self.operator;
        let s = &self.scan;
        let positive = |d: &mut Vec<String>, field: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                d.push(format!("{field}: must be positive and finite (got {v})"));
            }
        };
        let positive_list = |d: &mut Vec<String>, field: &str, v: &[f64]| {
            if v.is_empty() {
                d.push(format!("{field}: must not be empty"));
            }
            for (i, &x) in v.iter().enumerate() {
                if !(x > 0.0 && x.is_finite()) {
                    d.push(format!("{field}[{i}]: must be positive and finite (got {x})"));
                }
            }
        };

        if g.sites < 8 {
            d.push(format!("geometry.sites: at least 8 required (got {})", g.sites));
        }
        positive(&mut d, "geometry.extent", g.extent);
        if g.torus < 8 || g.torus % 2 != 0 {
            d.push(format!("geometry.torus: must be even and at least 8 (got {})", g.torus));
        }
        if g.flux_window[0] >= g.flux_window[1] || g.flux_window[1] > g.torus {
            d.push(format!("geometry.flux_window: need lo < hi <= torus (got {:?})", g.flux_window));
        }
        if !g.holonomy.is_finite() {
            d.push("geometry.holonomy: must be finite".into());
        }
        if g.cylinder_len < 2 {
            d.push(format!("geometry.cylinder_len: at least 2 required (got {})", g.cylinder_len));
        }
        if !(0.0 <= g.overlap[0] && g.overlap[0] < g.overlap[1] && g.overlap[1].is_finite()) {
            d.push(format!("geometry.overlap: need 0 <= lo < hi (got {:?})", g.overlap));
        }
        if g.partner.sites < 8 {
            d.push(format!("geometry.partner.sites: at least 8 required (got {})", g.partner.sites));
        }
        positive(&mut d, "geometry.partner.extent", g.partner.extent);

        positive_list(&mut d, "operator.masses", &o.masses);
        if !(o.wilson_r >= 0.0 && o.wilson_r.is_finite()) {
            d.push(format!("operator.wilson_r: must be non-negative (got {})", o.wilson_r));
        }
        if !(o.kappa_plus > 0.0 && o.kappa_plus.is_finite()) {
            d.push(format!("operator.kappa_plus: must be positive (got {})", o.kappa_plus));
        }
        if !(o.kappa_minus < 0.0 && o.kappa_minus.is_finite()) {
            d.push(format!("operator.kappa_minus: must be negative (got {})", o.kappa_minus));
        }
        if o.max_block == 0 {
            d.push("operator.max_block: must be positive".into());
        }
        positive(&mut d, "operator.s_min", o.s_min);
        if !o.lambdas.is_empty() {
            let ok = o.lambdas.len() == 3 && o.lambdas[0] >= 0.0 && o.lambdas[0] <= o.lambdas[1] && o.lambdas[1] <= o.lambdas[2];
            if !ok {
                d.push(format!("operator.lambdas: need three values 0 <= l0 <= l1 <= l2 or none (got {:?})", o.lambdas));
            }
        }

        positive_list(&mut d, "scan.m_values", &s.m_values);
        if s.m_values.windows(2).any(|w| w[1] <= w[0]) {
            d.push("scan.m_values: must be strictly increasing".into());
        }
        positive_list(&mut d, "scan.widths", &s.widths);
        if s.sizes.is_empty() {
            d.push("scan.sizes: must not be empty".into());
        }
        for (i, &n) in s.sizes.iter().enumerate() {
            if n < 8 || n % 2 != 0 {
                d.push(format!("scan.sizes[{i}]: must be even and at least 8 (got {n})"));
            }
        }
        if s.instances == 0 {
            d.push("scan.instances: must be positive".into());
        }

        match self.kind {
            ExperimentKind::Smoothing if s.widths.len() < 2 => d.push("scan.widths: smoothing compares at least two widths".into()),
            ExperimentKind::MainTheorem | ExperimentKind::Smoothing | ExperimentKind::GapScan | ExperimentKind::ApsIndex
                if o.scheme == SchemeKind::Random =>
            {
                d.push(format!("operator.scheme: `random` is not a torus scheme ({})", self.kind));
            }
            _ => {}
        }

        if d.is_empty() {
            Ok(())
        } else {
            Err(ConfigInvalid(d))
        }
    }
}

/// Deep merge of `over` into `base`: tables merge key by key, anything else replaces.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
