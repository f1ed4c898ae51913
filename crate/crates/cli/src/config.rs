//! Run configuration: JSON schema, flag overrides and resolution of defaults.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::ValueEnum;
use pinfield_core::audit::{
    FIELD_MONOTONICITY, GAUSSIAN_IBP, OVERLAP_BOUND, PINNING_BOUND, PINNING_MONOTONICITY,
};
use pinfield_core::disorder::FieldFile;
use pinfield_core::lattice::Site;
use pinfield_core::sampler::{InnerEngine, SamplerConfig};
use pinfield_core::{DisorderLaw, FieldConfig, Potential, Volume};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::args::Cli;

pub const OUT_ENV: &str = "PINFIELD_OUT";
const DEFAULT_OUT: &str = "pinfield-out";

pub const KNOWN_INEQUALITIES: [&str; 5] = [
    OVERLAP_BOUND,
    PINNING_BOUND,
    GAUSSIAN_IBP,
    FIELD_MONOTONICITY,
    PINNING_MONOTONICITY,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Exact,
    Sample,
    Audit,
    Scan,
    Green,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelBlock,
    #[serde(default)]
    pub disorder: DisorderBlock,
    #[serde(default)]
    pub sampler: SamplerBlock,
    #[serde(default)]
    pub audit: AuditBlock,
    #[serde(default)]
    pub scan: ScanBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub d: usize,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sites: Option<Vec<Site>>,
    #[serde(default = "unit_gaussian")]
    pub potential: Potential,
    #[serde(default)]
    pub epsilon: f64,
}

fn unit_gaussian() -> Potential {
    Potential::Gaussian { curvature: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderBlock {
    /// `zero`, `const:h`, `gauss:sigma` or `rademacher:h`.
    #[serde(default = "zero_law")]
    pub law: String,
    #[serde(default = "one")]
    pub replicas: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Explicit fields in the `{"d", "L" | "sites", "eta"}` file form; replaces the law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_file: Option<PathBuf>,
}

fn zero_law() -> String {
    "zero".into()
}

fn one() -> usize {
    1
}

impl Default for DisorderBlock {
    fn default() -> Self {
        Self {
            law: zero_law(),
            replicas: 1,
            master_seed: 0,
            eta_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBlock {
    /// Total sweeps, burn-in included.
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "one")]
    pub thinning: usize,
}

fn default_sweeps() -> usize {
    100_000
}

fn default_burn_in() -> usize {
    1_000
}

fn default_batches() -> usize {
    100
}

impl Default for SamplerBlock {
    fn default() -> Self {
        Self {
            sweeps: default_sweeps(),
            burn_in: default_burn_in(),
            batches: default_batches(),
            thinning: 1,
        }
    }
}

impl SamplerBlock {
    pub fn sampler_config(&self, seed: u64) -> pinfield_core::Result<SamplerConfig> {
        let mut cfg = SamplerConfig::new(self.sweeps, self.burn_in, self.batches, seed)?;
        cfg.thinning = self.thinning;
        cfg.validated()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditBlock {
    #[serde(default = "default_inequalities")]
    pub inequalities: Vec<String>,
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    /// Largest box half-width of the constant sweep.
    #[serde(rename = "L_max", default = "default_sweep_max")]
    pub sweep_max: u32,
    #[serde(default = "auto")]
    pub engine: InnerEngine,
    /// Field strengths `h` for the field-monotonicity check.
    #[serde(default)]
    pub field_grid: Vec<f64>,
    /// Pinning strengths for the pinning-monotonicity check.
    #[serde(default)]
    pub pinning_grid: Vec<f64>,
}

fn default_inequalities() -> Vec<String> {
    vec![OVERLAP_BOUND.to_string()]
}

fn default_epsilon0() -> f64 {
    1.0
}

fn default_sweep_max() -> u32 {
    4
}

fn auto() -> InnerEngine {
    InnerEngine::Auto
}

impl Default for AuditBlock {
    fn default() -> Self {
        Self {
            inequalities: default_inequalities(),
            epsilon0: default_epsilon0(),
            sweep_max: default_sweep_max(),
            engine: InnerEngine::Auto,
            field_grid: vec![],
            pinning_grid: vec![],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    /// Disorder-averaged overlap growth.
    #[default]
    Overlap,
    /// Response to a constant field.
    ConstantField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    #[serde(default)]
    pub kind: ScanKind,
    /// Box half-widths for `scan` and `green`.
    #[serde(default)]
    pub sizes: Vec<u32>,
    /// Field strength of the constant-field scan.
    #[serde(default = "unit")]
    pub h: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for ScanBlock {
    fn default() -> Self {
        Self {
            kind: ScanKind::Overlap,
            sizes: vec![],
            h: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// A validated configuration with its volume, potential and law built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub volume: Option<Volume>,
    pub potential: Potential,
    pub law: DisorderLaw,
    /// Fields read from `disorder.eta_file`.
    pub fixed_eta: Option<FieldConfig>,
    pub out_dir: PathBuf,
}

fn set(root: &mut Value, path: &[&str], value: Value) {
    let mut node = root;
    for key in &path[..path.len() - 1] {
        let obj = node.as_object_mut().expect("objects along the path");
        node = obj.entry(key.to_string()).or_insert_with(|| json!({}));
        if !node.is_object() {
            *node = json!({});
        }
    }
    node.as_object_mut()
        .expect("objects along the path")
        .insert(path[path.len() - 1].to_string(), value);
}

/// Reads a config file; a manifest is accepted and its embedded config used.
fn load(path: &Path) -> anyhow::Result<Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let is_manifest = value.get("code_version").is_some() && value.get("config").is_some();
    let value = if is_manifest { value["config"].clone() } else { value };
    if !value.is_object() {
        bail!("{} must hold a JSON object", path.display());
    }
    Ok(value)
}

/// The config file (or `{}`) with every given flag written over it.
pub fn merged(cli: &Cli) -> anyhow::Result<Value> {
    let mut v = match &cli.config {
        Some(p) => load(p)?,
        None => Value::Object(Map::new()),
    };
    if let Some(c) = cli.command {
        set(&mut v, &["command"], json!(c));
    }
    if let Some(d) = cli.d {
        set(&mut v, &["model", "d"], json!(d));
    }
    if let Some(l) = cli.half_width {
        set(&mut v, &["model", "L"], json!(l));
        if let Some(m) = v["model"].as_object_mut() {
            m.remove("sites");
        }
    }
    if let Some(e) = cli.eps {
        set(&mut v, &["model", "epsilon"], json!(e));
    }
    if let Some(k) = cli.kappa {
        set(&mut v, &["model", "potential"], json!({"kind": "anharmonic", "kappa": k}));
    }
    if let Some(law) = &cli.disorder {
        set(&mut v, &["disorder", "law"], json!(law));
    }
    if let Some(path) = &cli.eta_file {
        set(&mut v, &["disorder", "eta_file"], json!(path));
    }
    if let Some(r) = cli.replicas {
        set(&mut v, &["disorder", "replicas"], json!(r));
    }
    if let Some(s) = cli.seed {
        set(&mut v, &["disorder", "master_seed"], json!(s));
    }
    if let Some(s) = cli.sweeps {
        set(&mut v, &["sampler", "sweeps"], json!(s));
    }
    if let Some(b) = cli.burnin {
        set(&mut v, &["sampler", "burn_in"], json!(b));
    }
    if let Some(b) = cli.batches {
        set(&mut v, &["sampler", "batches"], json!(b));
    }
    if let Some(e) = cli.eps0 {
        set(&mut v, &["audit", "epsilon0"], json!(e));
    }
    if !cli.inequalities.is_empty() {
        set(&mut v, &["audit", "inequalities"], json!(cli.inequalities));
    }
    if let Some(e) = &cli.engine {
        set(&mut v, &["audit", "engine"], json!(e));
    }
    if let Some(k) = &cli.scan_kind {
        set(&mut v, &["scan", "kind"], json!(k));
    }
    if !cli.sizes.is_empty() {
        set(&mut v, &["scan", "sizes"], json!(cli.sizes));
    }
    if let Some(h) = cli.h {
        set(&mut v, &["scan", "h"], json!(h));
    }
    if let Some(o) = &cli.out {
        set(&mut v, &["output", "dir"], json!(o));
    }
    Ok(v)
}

fn default_sizes(command: Command, kind: ScanKind, d: usize) -> Vec<u32> {
    let spectral = command == Command::Green || kind == ScanKind::ConstantField;
    match (spectral, d) {
        (true, 2) => vec![16, 32, 64, 128],
        (true, _) => vec![4, 8, 12, 16, 20],
        (false, 2) => vec![8, 16, 24],
        (false, _) => vec![1, 2, 3],
    }
}

fn grid(step: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|k| step * k as f64).collect()
}

/// Validates a merged config and fills every default, so the manifest can
/// echo the complete run description.
pub fn resolve(value: Value) -> anyhow::Result<Resolved> {
    let mut cfg: RunConfig = serde_json::from_value(value).context("invalid configuration")?;
    let d = cfg.model.d;
    if d == 0 {
        bail!("model.d must be positive");
    }
    let potential = cfg.model.potential.validated()?;
    let eps = cfg.model.epsilon;
    if !(eps >= 0.0 && eps.is_finite()) {
        bail!("model.epsilon must be finite and nonnegative, got {eps}");
    }
    let law: DisorderLaw = cfg.disorder.law.parse()?;
    cfg.disorder.law = law.to_string();
    if cfg.disorder.replicas == 0 {
        bail!("disorder.replicas must be positive");
    }
    cfg.sampler.sampler_config(0).context("sampler block")?;

    let needs_volume = matches!(cfg.command, Command::Exact | Command::Sample | Command::Audit);
    let volume = if needs_volume {
        let v = match (cfg.model.half_width, cfg.model.sites.clone()) {
            (Some(l), None) => Volume::centered_box(d, l)?,
            (None, Some(sites)) => Volume::from_sites(d, sites)?,
            (None, None) => bail!("model needs \"L\" or \"sites\""),
            (Some(_), Some(_)) => bail!("model takes only one of \"L\" and \"sites\""),
        };
        Some(v)
    } else {
        None
    };

    let fixed_eta = match (&cfg.disorder.eta_file, &volume) {
        (Some(path), Some(vol)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let file: FieldFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let (file_vol, eta) = file.into_parts()?;
            if &file_vol != vol {
                bail!("fields in {} live on a different volume", path.display());
            }
            if cfg.disorder.replicas != 1 {
                bail!("explicit fields need disorder.replicas = 1");
            }
            Some(eta)
        }
        (Some(_), None) => bail!("disorder.eta_file only applies to exact, sample and audit"),
        _ => None,
    };

    match cfg.command {
        Command::Exact if !potential.is_gaussian() => {
            bail!("the exact engine needs a gaussian potential")
        }
        Command::Audit => {
            let audit = &mut cfg.audit;
            if audit.inequalities.is_empty() {
                bail!("audit.inequalities is empty");
            }
            for id in &audit.inequalities {
                if !KNOWN_INEQUALITIES.contains(&id.as_str()) {
                    bail!(
                        "unknown inequality {id:?}; expected one of {}",
                        KNOWN_INEQUALITIES.join(", ")
                    );
                }
            }
            let has = |id: &str| audit.inequalities.iter().any(|s| s == id);
            if has(PINNING_BOUND) && !(audit.epsilon0 > 0.0 && eps > audit.epsilon0) {
                bail!(
                    "the pinned-fraction bound needs epsilon > epsilon0 > 0 (epsilon={eps}, epsilon0={})",
                    audit.epsilon0
                );
            }
            if audit.sweep_max < 1 {
                bail!("audit.L_max must be at least 1");
            }
            if has(GAUSSIAN_IBP) {
                if !matches!(law, DisorderLaw::Gaussian { .. }) {
                    bail!("{GAUSSIAN_IBP} needs gauss:sigma disorder");
                }
                if cfg.disorder.replicas < 2 || fixed_eta.is_some() {
                    bail!("{GAUSSIAN_IBP} averages over at least two disorder replicas");
                }
            }
            let exact_only = [GAUSSIAN_IBP, FIELD_MONOTONICITY, PINNING_MONOTONICITY];
            if exact_only.iter().any(|id| has(id)) && !potential.is_gaussian() {
                bail!("{} need a gaussian potential", exact_only.join(", "));
            }
            if audit.field_grid.is_empty() {
                audit.field_grid = grid(0.1, 20);
            }
            if audit.pinning_grid.is_empty() {
                audit.pinning_grid = grid(0.1, 100);
            }
            for (name, g) in [("field_grid", &audit.field_grid), ("pinning_grid", &audit.pinning_grid)] {
                if g.len() < 2 || g.windows(2).any(|w| !(w[0] < w[1])) {
                    bail!("audit.{name} must be strictly increasing with at least two points");
                }
            }
        }
        Command::Scan => {
            if cfg.scan.kind == ScanKind::Overlap {
                if d < 2 {
                    bail!("the overlap scan needs d >= 2");
                }
                if cfg.disorder.replicas < 2 {
                    bail!("the overlap scan averages over at least two disorder replicas");
                }
            }
            if !potential.is_gaussian() {
                bail!("scans use the gaussian potential");
            }
        }
        _ => {}
    }
    if matches!(cfg.command, Command::Scan | Command::Green) {
        if cfg.scan.sizes.is_empty() {
            cfg.scan.sizes = default_sizes(cfg.command, cfg.scan.kind, d);
        }
        if cfg.scan.sizes.windows(2).any(|w| w[0] >= w[1]) || cfg.scan.sizes[0] == 0 {
            bail!("scan.sizes must be strictly increasing and positive");
        }
    }

    let out_dir = match &cfg.output.dir {
        Some(dir) => dir.clone(),
        None => std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    };
    cfg.output.dir = Some(out_dir.clone());
    Ok(Resolved {
        config: cfg,
        volume,
        potential,
        law,
        fixed_eta,
        out_dir,
    })
}

impl Resolved {
    pub fn volume(&self) -> anyhow::Result<&Volume> {
        self.volume.as_ref().ok_or_else(|| anyhow!("command has no model volume"))
    }
}
