//! Run configuration.
//!
//! A single TOML file carries every physical parameter explicitly — the
//! sampling function, the frequency, and the scheme constants have no
//! defaults. Only grid sizes and tolerances may be omitted; their defaults
//! are the `DEFAULT_*` constants below and are documented in `--help`.

use std::fs;
use std::path::{Path, PathBuf};

use quasidiag_core::model::potential::TableInterp;
use quasidiag_core::{Frequency, LatticeBox, PotentialSpec, SchemeParams};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_PHASE_GRID: usize = 64;
pub const DEFAULT_BOX_LADDER: [usize; 2] = [400, 800];
pub const DEFAULT_T_COUNT: usize = 100;
pub const DEFAULT_GAP_MIN_WIDTH: f64 = 1e-4;
pub const DEFAULT_GAP_DRIFT_TOL: f64 = 1e-3;
pub const DEFAULT_SCAN_N_MAX: i64 = 50;
pub const DEFAULT_SCAN_S_MAX: u32 = 8;
pub const DEFAULT_SCAN_K2_MAX: u32 = 30;
pub const DEFAULT_HOLDER_GRID: usize = 256;
pub const DEFAULT_BRANCH_INSTANCES: usize = 12;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    potential: PotentialSection,
    frequency: FrequencySection,
    scheme: SchemeSection,
    domain: DomainSection,
    #[serde(default)]
    tolerances: ToleranceSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PotentialSection {
    /// `f(x) = {x}`.
    Sawtooth,
    /// `f(x) = {x}^power`, `power >= 1`.
    SawtoothPower { power: f64 },
    /// `f(x) = tan(pi (x - 1/2))`, unbounded below at `x = 0`.
    Maryland,
    /// Monotone table, either inline or loaded from a CSV file with rows
    /// `x,f(x)`, strictly increasing `x` in `[0, 1)` starting at `0.0`.
    Table {
        #[serde(default)]
        csv: Option<PathBuf>,
        #[serde(default)]
        breakpoints: Option<Vec<f64>>,
        #[serde(default)]
        values: Option<Vec<f64>>,
        interp: TableInterp,
        alpha: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrequencySection {
    omega: Vec<f64>,
    rho: f64,
    mu: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeSection {
    eps: f64,
    delta: f64,
    beta: f64,
    m: f64,
    s_max: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    ambient_radius: i64,
    x0: f64,
    phase_grid: Option<usize>,
    box_ladder: Option<Vec<usize>>,
    t_count: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceSection {
    dominance_margin: Option<f64>,
    residual_target: Option<f64>,
    interval_grid: Option<usize>,
    strict: Option<bool>,
    gap_min_width: Option<f64>,
    gap_drift_tol: Option<f64>,
    scan_n_max: Option<i64>,
    scan_s_max: Option<u32>,
    scan_k2_max: Option<u32>,
    holder_grid: Option<usize>,
    branch_instances: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
}

/// Fully validated run configuration: the library objects plus the grids,
/// tolerances, and plumbing settings every command shares.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub potential: PotentialSpec,
    pub potential_kind: String,
    pub freq: Frequency,
    pub params: SchemeParams,
    pub ambient: LatticeBox,
    pub ambient_radius: i64,
    pub x0: f64,
    pub phase_grid: usize,
    pub box_ladder: Vec<usize>,
    pub t_count: usize,
    pub gap_min_width: f64,
    pub gap_drift_tol: f64,
    pub scan_n_max: i64,
    pub scan_s_max: u32,
    pub scan_k2_max: u32,
    pub holder_grid: usize,
    pub branch_instances: usize,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub seed: u64,
    /// SHA-256 of the raw configuration file, hex-encoded.
    pub config_hash: String,
    /// Human-readable provenance and advisory notes, copied into the
    /// manifest.
    pub notes: Vec<String>,
}

impl RunConfig {
    /// Midpoint phase grid `(k + 1/2) / P` in `[0, 1)`: strictly increasing
    /// and clear of the period endpoint where a sawtooth-type function
    /// jumps.
    pub fn phase_grid_points(&self) -> Vec<f64> {
        let p = self.phase_grid;
        (0..p).map(|k| (k as f64 + 0.5) / p as f64).collect()
    }

    /// One-line instance description for manifests and logs.
    pub fn describe(&self) -> String {
        format!(
            "{} potential, dim {}, eps = {}, ambient radius {}, ladder center x0 = {}",
            self.potential_kind,
            self.freq.dim(),
            self.params.eps,
            self.ambient_radius,
            self.x0
        )
    }
}

fn cfg_err<E: std::fmt::Display>(what: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Config(format!("{what}: {e}"))
}

/// Load a table potential from CSV rows `x,f(x)`. A single header line is
/// tolerated; everything else must be two comma-separated numbers.
fn table_from_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let (a, b) = (fields.next(), fields.next());
        if fields.next().is_some() {
            return Err(CliError::Config(format!(
                "{}:{}: expected two columns (x, f(x))",
                path.display(),
                lineno + 1
            )));
        }
        match (a.and_then(|s| s.parse::<f64>().ok()), b.and_then(|s| s.parse::<f64>().ok())) {
            (Some(x), Some(v)) => {
                xs.push(x);
                vs.push(v);
            }
            _ if lineno == 0 => {} // header line
            _ => {
                return Err(CliError::Config(format!(
                    "{}:{}: expected two numbers, got {line:?}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
    }
    if xs.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok((xs, vs))
}

fn build_potential(
    section: PotentialSection,
    config_dir: &Path,
) -> Result<(PotentialSpec, String), CliError> {
    match section {
        PotentialSection::Sawtooth => Ok((PotentialSpec::sawtooth(), "sawtooth".into())),
        PotentialSection::SawtoothPower { power } => Ok((
            PotentialSpec::sawtooth_power(power).map_err(cfg_err("potential"))?,
            format!("sawtooth_power({power})"),
        )),
        PotentialSection::Maryland => Ok((PotentialSpec::maryland(), "maryland".into())),
        PotentialSection::Table {
            csv,
            breakpoints,
            values,
            interp,
            alpha,
        } => {
            let (breaks, vals, desc) = match (csv, breakpoints, values) {
                (Some(rel), None, None) => {
                    let path = if rel.is_absolute() {
                        rel
                    } else {
                        config_dir.join(rel)
                    };
                    let (b, v) = table_from_csv(&path)?;
                    (b, v, format!("table({})", path.display()))
                }
                (None, Some(b), Some(v)) => (b, v, "table(inline)".into()),
                _ => {
                    return Err(CliError::Config(
                        "table potential needs either `csv` or both `breakpoints` and `values`"
                            .into(),
                    ));
                }
            };
            let spec = PotentialSpec::table(breaks, vals, interp, alpha)
                .map_err(cfg_err("table potential"))?;
            Ok((spec, desc))
        }
    }
}

/// Parse, validate, and resolve a configuration file together with the
/// command-line overrides. Every failure is a configuration error (exit 2).
pub fn load(
    config_path: &Path,
    out_override: Option<&Path>,
    workers: usize,
    seed: u64,
) -> Result<RunConfig, CliError> {
    let raw = fs::read(config_path).map_err(|e| CliError::io(config_path, e))?;
    let config_hash = format!("{:x}", Sha256::digest(&raw));
    let text = String::from_utf8(raw)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;

    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let (potential, potential_kind) = build_potential(file.potential, config_dir)?;

    let freq = Frequency::new(
        file.frequency.omega,
        file.frequency.rho,
        file.frequency.mu,
    )
    .map_err(cfg_err("frequency"))?;

    let mut params = SchemeParams::new(
        file.scheme.eps,
        file.scheme.delta,
        file.scheme.beta,
        file.scheme.m,
        potential.alpha(),
        file.frequency.rho,
        file.frequency.mu,
        file.scheme.s_max,
    )
    .map_err(cfg_err("scheme parameters"))?;
    let t = &file.tolerances;
    if let Some(v) = t.dominance_margin {
        params.dominance_margin = v;
    }
    if let Some(v) = t.residual_target {
        params.residual_target = v;
    }
    if let Some(v) = t.interval_grid {
        params.interval_grid = v;
    }
    if let Some(v) = t.strict {
        params.strict_tolerances = v;
    }
    params.validate().map_err(cfg_err("scheme tolerances"))?;

    let radius = file.domain.ambient_radius;
    let needed = i64::from(3 * params.s_max + 2);
    if radius < needed {
        return Err(CliError::Config(format!(
            "ambient_radius {radius} too small for s_max {}: need at least {needed}",
            params.s_max
        )));
    }
    let ambient = if freq.dim() == 1 {
        LatticeBox::interval(-radius, radius).map_err(cfg_err("ambient box"))?
    } else {
        LatticeBox::rect(&vec![(-radius, radius); freq.dim()]).map_err(cfg_err("ambient box"))?
    };

    let x0 = file.domain.x0;
    if !(0.0..1.0).contains(&x0) {
        return Err(CliError::Config(format!("x0 must lie in [0, 1), got {x0}")));
    }

    let phase_grid = file.domain.phase_grid.unwrap_or(DEFAULT_PHASE_GRID);
    if phase_grid < 2 {
        return Err(CliError::Config(format!(
            "phase_grid must be >= 2, got {phase_grid}"
        )));
    }
    let box_ladder = file
        .domain
        .box_ladder
        .unwrap_or_else(|| DEFAULT_BOX_LADDER.to_vec());
    if box_ladder.is_empty() || box_ladder.iter().any(|&l| l < 2) {
        return Err(CliError::Config(
            "box_ladder needs at least one box of >= 2 sites".into(),
        ));
    }
    if box_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(
            "box_ladder must be strictly increasing".into(),
        ));
    }
    let t_count = file.domain.t_count.unwrap_or(DEFAULT_T_COUNT);
    if t_count < 2 {
        return Err(CliError::Config(format!(
            "t_count must be >= 2, got {t_count}"
        )));
    }

    let positive = |name: &str, v: f64| -> Result<f64, CliError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{name} must be positive, got {v}")))
        }
    };
    let gap_min_width = positive(
        "gap_min_width",
        t.gap_min_width.unwrap_or(DEFAULT_GAP_MIN_WIDTH),
    )?;
    let gap_drift_tol = positive(
        "gap_drift_tol",
        t.gap_drift_tol.unwrap_or(DEFAULT_GAP_DRIFT_TOL),
    )?;
    let scan_n_max = t.scan_n_max.unwrap_or(DEFAULT_SCAN_N_MAX).max(1);
    let scan_s_max = t.scan_s_max.unwrap_or(DEFAULT_SCAN_S_MAX).max(1);
    let scan_k2_max = t.scan_k2_max.unwrap_or(DEFAULT_SCAN_K2_MAX).max(1);
    let holder_grid = t.holder_grid.unwrap_or(DEFAULT_HOLDER_GRID).max(8);
    let branch_instances = t.branch_instances.unwrap_or(DEFAULT_BRANCH_INSTANCES).max(1);

    let out_dir = out_override
        .map(Path::to_path_buf)
        .or(file.output.dir.map(|d| {
            if d.is_absolute() {
                d
            } else {
                config_dir.join(d)
            }
        }))
        .unwrap_or_else(|| PathBuf::from("out"));

    // The constants are meaningful only in a specific order: the ladder base
    // beta first, then the magnitude base chosen large against 1/beta, then
    // the hopping strength below everything else. Record that provenance and
    // warn when the configured base is too small to price even one inverse
    // ladder scale.
    let mut notes = vec![format!(
        "parameter order: beta = {} chosen first, magnitude base m = {} second, eps = {} last",
        params.beta, params.m, params.eps
    )];
    if params.m < 1.0 / params.beta {
        let msg = format!(
            "magnitude base m = {} is not large relative to 1/beta = {}; \
             order bookkeeping may be vacuous",
            params.m,
            1.0 / params.beta
        );
        log::warn!("{msg}");
        notes.push(msg);
    }

    let mut cfg = RunConfig {
        potential,
        potential_kind,
        freq,
        params,
        ambient,
        ambient_radius: radius,
        x0,
        phase_grid,
        box_ladder,
        t_count,
        gap_min_width,
        gap_drift_tol,
        scan_n_max,
        scan_s_max,
        scan_k2_max,
        holder_grid,
        branch_instances,
        out_dir,
        workers: workers.max(1),
        seed,
        config_hash,
        notes,
    };
    cfg.notes.insert(0, cfg.describe());
    Ok(cfg)
}
