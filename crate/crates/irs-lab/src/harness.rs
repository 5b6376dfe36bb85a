//! Seeded Monte-Carlo sweep execution, CSV/SVG emission, and the CLI.
//!
//! A sweep walks one configuration variable over a grid, runs a fixed number
//! of independent trials per grid point, and reports the mean sum-rate (with
//! its standard error) for every requested method, both with the surface
//! active and with it switched off and the design re-optimized. Trials are
//! seeded by hashing `(master_seed, value index, trial index)`, so results
//! are byte-identical across runs and worker counts.

use crate::beamformers::{self, MethodTag};
use crate::channels::{mix_seed, realize_channels, SystemConfig};
use crate::dof;
use crate::metrics;
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Shorthand for harness results.
pub type Result<T> = std::result::Result<T, HarnessError>;

/// Failures while loading, running, or emitting a sweep.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// The sweep specification is malformed.
    #[error("invalid sweep spec: {0}")]
    Spec(String),
    /// An emitted artifact could not be parsed back.
    #[error("parse error: {0}")]
    Parse(String),
    /// Filesystem failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
    /// JSON (de)serialization failure.
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    /// Propagated configuration/channel failure.
    #[error(transparent)]
    Channel(#[from] crate::channels::ChannelError),
    /// Propagated beamformer failure outside per-cell handling.
    #[error(transparent)]
    Beamformer(#[from] beamformers::BeamformerError),
    /// Propagated rate-evaluation failure outside per-cell handling.
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    /// Propagated DoF-analysis failure.
    #[error(transparent)]
    Dof(#[from] dof::DofError),
    /// Worker-pool construction failure.
    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    /// CLI exit code: 1 for configuration errors, 2 for runtime errors.
    fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Spec(_)
            | HarnessError::Json(_)
            | HarnessError::Parse(_)
            | HarnessError::Channel(_)
            | HarnessError::Dof(_) => 1,
            _ => 2,
        }
    }
}

/// The configuration quantity a sweep walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVariable {
    /// BS transmit power budget, dBm.
    #[serde(rename = "P_T_dBm")]
    PTDbm,
    /// Surface reflect power budget, dBm.
    #[serde(rename = "P_I_dBm")]
    PIDbm,
    /// Number of surface elements.
    #[serde(rename = "N")]
    N,
    /// Surface noise power, dBm.
    #[serde(rename = "sigma2_irs_dBm")]
    Sigma2IrsDbm,
    /// Surface x-coordinate, metres.
    #[serde(rename = "irs_x_position_m")]
    IrsXPositionM,
}

impl SweepVariable {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVariable::PTDbm => "P_T_dBm",
            SweepVariable::PIDbm => "P_I_dBm",
            SweepVariable::N => "N",
            SweepVariable::Sigma2IrsDbm => "sigma2_irs_dBm",
            SweepVariable::IrsXPositionM => "irs_x_position_m",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "P_T_dBm" => Ok(SweepVariable::PTDbm),
            "P_I_dBm" => Ok(SweepVariable::PIDbm),
            "N" => Ok(SweepVariable::N),
            "sigma2_irs_dBm" => Ok(SweepVariable::Sigma2IrsDbm),
            "irs_x_position_m" => Ok(SweepVariable::IrsXPositionM),
            other => Err(HarnessError::Parse(format!("unknown sweep variable {other:?}"))),
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A declarative sweep: one variable, a grid of values, the methods to
/// compare, and the Monte-Carlo budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub methods: Vec<MethodTag>,
    pub trials: usize,
    pub master_seed: u64,
    pub base_config: SystemConfig,
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: SweepSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(HarnessError::Spec("values must be nonempty".into()));
        }
        let increasing = self.values.windows(2).all(|w| w[0] < w[1]);
        let decreasing = self.values.windows(2).all(|w| w[0] > w[1]);
        if self.values.len() > 1 && !increasing && !decreasing {
            return Err(HarnessError::Spec("values must be strictly monotone".into()));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(HarnessError::Spec("values must be finite".into()));
        }
        if self.trials < 1 {
            return Err(HarnessError::Spec("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Spec("methods must be nonempty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(HarnessError::Spec(format!("duplicate method {m}")));
            }
        }
        if self.variable == SweepVariable::N {
            for &v in &self.values {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(HarnessError::Spec(format!(
                        "N values must be positive integers, got {v}"
                    )));
                }
                if self.methods.contains(&MethodTag::TllMmse)
                    && (v as usize) % self.base_config.k != 0
                {
                    return Err(HarnessError::Spec(format!(
                        "N = {v} is not divisible by K = {} as TLL-MMSE requires",
                        self.base_config.k
                    )));
                }
            }
        }
        self.base_config.validate()?;
        // Every grid point must itself be a valid configuration.
        for &v in &self.values {
            self.apply(v)?;
        }
        Ok(())
    }

    /// The base configuration with the swept variable set to `value`.
    pub fn apply(&self, value: f64) -> Result<SystemConfig> {
        let mut cfg = self.base_config.clone();
        match self.variable {
            SweepVariable::PTDbm => cfg.p_t_dbm = value,
            SweepVariable::PIDbm => cfg.p_i_dbm = value,
            SweepVariable::N => cfg.n = value as usize,
            SweepVariable::Sigma2IrsDbm => cfg.sigma2_irs_dbm = value,
            SweepVariable::IrsXPositionM => cfg.positions.irs[0] = value,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One aggregated sweep cell. Metric fields are `None` when the method was
/// infeasible at this grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub variable: SweepVariable,
    pub value: f64,
    pub method: MethodTag,
    pub irs: bool,
    pub mean_sum_rate: Option<f64>,
    pub stderr: Option<f64>,
    pub mean_snr_db: Option<f64>,
}

/// All cells of a sweep, one row per (value, method, irs) triple in grid
/// order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Format with six significant digits (plain decimal where readable,
/// scientific otherwise).
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{:.5e}", x)
    }
}

/// The nearest f64 to the six-significant-digit decimal rendering of `x`;
/// aggregates are rounded through this so emitted CSVs parse back to the
/// exact in-memory result.
pub fn round_sig6(x: f64) -> f64 {
    sig6(x).parse().unwrap_or(x)
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("IRS_LAB_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                HarnessError::Spec(format!(
                    "IRS_LAB_THREADS must be a positive integer, got {raw:?}"
                ))
            })?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Per-trial metrics for one cell: (sum-rate, mean per-user SNR in dB).
type CellSample = Option<(f64, f64)>;

fn run_trial(cfg: &SystemConfig, seed: u64, cells: &[(MethodTag, bool)]) -> Vec<CellSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = match realize_channels(cfg, &mut rng) {
        Ok(s) => s,
        Err(_) => return vec![None; cells.len()],
    };
    cells
        .iter()
        .map(|&(method, irs)| {
            let solution = beamformers::solve(method, &set, cfg, irs).ok()?;
            let report = metrics::evaluate(&solution, &set, cfg, seed).ok()?;
            let snr = report.per_user_snr_db.iter().sum::<f64>()
                / report.per_user_snr_db.len().max(1) as f64;
            Some((report.sum_rate, snr))
        })
        .collect()
}

/// Run the sweep: for every grid value, `trials` seeded trials per method
/// and per with/without-IRS arm. The without-IRS arm re-optimizes each
/// method with the surface removed rather than just zeroing coefficients. A
/// method that is infeasible at a grid point yields a row with empty
/// metrics; the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let pool = worker_pool()?;
    let cells: Vec<(MethodTag, bool)> = spec
        .methods
        .iter()
        .flat_map(|&m| [(m, true), (m, false)])
        .collect();

    let mut rows = Vec::with_capacity(spec.values.len() * cells.len());
    for (vi, &value) in spec.values.iter().enumerate() {
        let cfg = spec.apply(value)?;
        let value_seed = mix_seed(spec.master_seed, vi as u64);
        let trial_samples: Vec<Vec<CellSample>> = pool.install(|| {
            (0..spec.trials)
                .into_par_iter()
                .map(|t| run_trial(&cfg, mix_seed(value_seed, t as u64), &cells))
                .collect()
        });

        for (ci, &(method, irs)) in cells.iter().enumerate() {
            let samples: Option<Vec<(f64, f64)>> =
                trial_samples.iter().map(|trial| trial[ci]).collect();
            let (mean_sum_rate, stderr, mean_snr_db) = match samples {
                Some(s) => {
                    let n = s.len() as f64;
                    let mean = s.iter().map(|&(r, _)| r).sum::<f64>() / n;
                    let var = if s.len() > 1 {
                        s.iter().map(|&(r, _)| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
                    } else {
                        0.0
                    };
                    let snr = s.iter().map(|&(_, q)| q).sum::<f64>() / n;
                    (
                        Some(round_sig6(mean)),
                        Some(round_sig6((var / n).sqrt())),
                        Some(round_sig6(snr)),
                    )
                }
                None => (None, None, None),
            };
            rows.push(SweepRow {
                variable: spec.variable,
                value: round_sig6(value),
                method,
                irs,
                mean_sum_rate,
                stderr,
                mean_snr_db,
            });
        }
    }
    Ok(SweepResult { rows })
}

pub const CSV_HEADER: &str = "variable,value,method,irs,mean_sum_rate,stderr,mean_snr_db";

/// Render the sweep as CSV text (UTF-8, LF line endings).
pub fn render_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.variable,
            sig6(row.value),
            row.method,
            if row.irs { "with" } else { "without" },
            opt(row.mean_sum_rate),
            opt(row.stderr),
            opt(row.mean_snr_db),
        ));
    }
    out
}

/// Write the sweep as a CSV file.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_csv(result))?;
    Ok(())
}

/// Parse CSV text produced by [`render_csv`] back into a [`SweepResult`].
pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| HarnessError::Parse("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(HarnessError::Parse(format!("unexpected header {header:?}")));
    }
    let field = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| HarnessError::Parse(format!("bad number {s:?}")))
    };
    let opt_field = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            field(s).map(Some)
        }
    };
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 7 {
            return Err(HarnessError::Parse(format!("expected 7 fields in {line:?}")));
        }
        rows.push(SweepRow {
            variable: SweepVariable::parse(parts[0])?,
            value: field(parts[1])?,
            method: MethodTag::parse(parts[2])
                .ok_or_else(|| HarnessError::Parse(format!("unknown method {:?}", parts[2])))?,
            irs: match parts[3] {
                "with" => true,
                "without" => false,
                other => {
                    return Err(HarnessError::Parse(format!("bad irs flag {other:?}")));
                }
            },
            mean_sum_rate: opt_field(parts[4])?,
            stderr: opt_field(parts[5])?,
            mean_snr_db: opt_field(parts[6])?,
        });
    }
    Ok(SweepResult { rows })
}

const SVG_WIDTH: f64 = 860.0;
const SVG_HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 220.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Render the sweep as an SVG 1.1 line chart, one polyline per
/// (method, irs) series. Infeasible cells are skipped; an entirely empty
/// result is an error.
pub fn render_svg(result: &SweepResult) -> Result<String> {
    let mut series: Vec<((MethodTag, bool), Vec<(f64, f64)>)> = Vec::new();
    for row in &result.rows {
        if let Some(rate) = row.mean_sum_rate {
            let key = (row.method, row.irs);
            match series.iter_mut().find(|(k, _)| *k == key) {
                Some((_, pts)) => pts.push((row.value, rate)),
                None => series.push((key, vec![(row.value, rate)])),
            }
        }
    }
    if series.is_empty() {
        return Err(HarnessError::Spec(
            "cannot plot an empty sweep result".into(),
        ));
    }
    let variable = result.rows[0].variable;

    let points: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let (x_min, x_max) = span(points.iter().map(|p| p.0));
    let (y_min, y_max) = span(points.iter().map(|p| p.1));
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    svg.push('\n');
    svg.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>"#
    ));
    svg.push('\n');
    // Axes.
    let x0 = MARGIN_LEFT;
    let y0 = MARGIN_TOP + plot_h;
    svg.push_str(&format!(
        r#"<line x1="{x0}" y1="{y0}" x2="{:.2}" y2="{y0}" stroke="black"/>"#,
        MARGIN_LEFT + plot_w
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<line x1="{x0}" y1="{MARGIN_TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 15.0,
        variable
    ));
    svg.push('\n');
    svg.push_str(&format!(
        r#"<text x="20" y="{:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {:.2})">mean sum-rate (bit/s/Hz)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));
    svg.push('\n');
    // Extremal tick labels.
    for (value, x) in [(x_min, sx(x_min)), (x_max, sx(x_max))] {
        svg.push_str(&format!(
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            y0 + 20.0,
            sig6(value)
        ));
        svg.push('\n');
    }
    for (value, y) in [(y_min, sy(y_min)), (y_max, sy(y_max))] {
        svg.push_str(&format!(
            r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-size="12">{}</text>"#,
            x0 - 8.0,
            sig6(value)
        ));
        svg.push('\n');
    }
    // Series and legend.
    for (si, ((method, irs), pts)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            coords.join(" ")
        ));
        svg.push('\n');
        let ly = MARGIN_TOP + 16.0 + 22.0 * si as f64;
        let lx = SVG_WIDTH - MARGIN_RIGHT + 14.0;
        svg.push_str(&format!(
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        ));
        svg.push('\n');
        svg.push_str(&format!(
            r#"<text x="{:.2}" y="{:.2}" font-size="13">{method} ({})</text>"#,
            lx + 32.0,
            ly + 4.0,
            if *irs { "with IRS" } else { "no IRS" }
        ));
        svg.push('\n');
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !(hi > lo) {
        // Degenerate single-point span: widen symmetrically so the scale is
        // well defined.
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Write the sweep as an SVG file.
pub fn emit_svg_plot(result: &SweepResult, path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(result)?)?;
    Ok(())
}

#[derive(Parser)]
#[command(
    name = "irs-lab",
    about = "Active-IRS multi-user MIMO simulator: DoF analysis, closed-form beamformers, Monte-Carlo sweeps",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Run a Monte-Carlo sweep from a JSON spec and emit CSV + SVG.
    Sweep {
        /// Path to a SweepSpec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Also dump the first feasible solution per cell of the first grid
        /// point to solutions.json.
        #[arg(long)]
        dump_solution: bool,
        /// Also dump per-user average receive power diagnostics for the
        /// first grid point to power.json.
        #[arg(long)]
        dump_power: bool,
    },
    /// Print a DoF report for a system configuration as JSON.
    DofCheck {
        /// Path to a SystemConfig JSON file.
        #[arg(long)]
        config: PathBuf,
        /// Monte-Carlo trials for the rank statistics.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Master seed for the trial channel draws.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the orthogonality-condition transmit angle in degrees.
    OcAngle {
        /// Reference departure angle toward the user, degrees.
        #[arg(long)]
        theta: f64,
        /// Orthogonality index (nonzero integer).
        #[arg(long)]
        i: i64,
        /// Transmit array size.
        #[arg(long)]
        m: usize,
        /// Element spacing in wavelengths.
        #[arg(long)]
        d_over_lambda: f64,
    },
}

fn dump_diagnostics(
    spec: &SweepSpec,
    out: &Path,
    solutions: bool,
    power: bool,
) -> Result<()> {
    let cfg = spec.apply(spec.values[0])?;
    let seed = mix_seed(mix_seed(spec.master_seed, 0), 0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = realize_channels(&cfg, &mut rng)?;
    let mut solution_entries = Vec::new();
    let mut power_entries = Vec::new();
    for &method in &spec.methods {
        for irs in [true, false] {
            let solution = match beamformers::solve(method, &set, &cfg, irs) {
                Ok(s) => s,
                Err(_) => continue,
            };
            if power {
                let per_user: Vec<f64> = (0..cfg.k)
                    .map(|k| metrics::average_receive_power(&solution, &set, &cfg, k))
                    .collect::<std::result::Result<_, _>>()?;
                power_entries.push(serde_json::json!({
                    "method": method.as_str(),
                    "irs": irs,
                    "value": spec.values[0],
                    "trial_seed": seed,
                    "average_receive_power_mw": per_user,
                }));
            }
            if solutions {
                solution_entries.push(serde_json::json!({
                    "method": method.as_str(),
                    "irs": irs,
                    "value": spec.values[0],
                    "trial_seed": seed,
                    "solution": serde_json::to_value(&solution)?,
                }));
            }
        }
    }
    if solutions {
        std::fs::write(
            out.join("solutions.json"),
            serde_json::to_string_pretty(&solution_entries)?,
        )?;
    }
    if power {
        std::fs::write(
            out.join("power.json"),
            serde_json::to_string_pretty(&power_entries)?,
        )?;
    }
    Ok(())
}

fn run_command(command: CliCommand) -> Result<()> {
    match command {
        CliCommand::Sweep {
            spec,
            out,
            dump_solution,
            dump_power,
        } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| HarnessError::Spec(format!("cannot read {}: {e}", spec.display())))?;
            let spec = SweepSpec::from_json_str(&text)?;
            let result = run_sweep(&spec)?;
            std::fs::create_dir_all(&out)?;
            emit_csv(&result, &out.join("sweep.csv"))?;
            emit_svg_plot(&result, &out.join("sweep.svg"))?;
            if dump_solution || dump_power {
                dump_diagnostics(&spec, &out, dump_solution, dump_power)?;
            }
            println!("wrote {}", out.join("sweep.csv").display());
            Ok(())
        }
        CliCommand::DofCheck {
            config,
            trials,
            seed,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                HarnessError::Spec(format!("cannot read {}: {e}", config.display()))
            })?;
            let cfg = SystemConfig::from_json_str(&text)?;
            let report = dof::dof_report(&cfg, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        CliCommand::OcAngle {
            theta,
            i,
            m,
            d_over_lambda,
        } => {
            let angle = dof::oc_angle(theta, i, m, d_over_lambda)?;
            println!("{angle:.4}");
            Ok(())
        }
    }
}

/// CLI entry point. Returns the process exit code: 0 on success, 1 on
/// configuration errors (including usage errors), 2 on runtime errors.
pub fn cli_run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version as "errors"; keep their exit 0.
            if e.use_stderr() {
                let _ = e.print();
                return 1;
            }
            let _ = e.print();
            return 0;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
