//! `run`, `fig4` and `sweep` subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ranger_core::correlation::{analyze, estimate_range, post_hit_plateau, CorrelationSeries, HitReport};
use ranger_core::engine::{run_with_threads, CountsTable, RunSummary};
use ranger_core::quantum::BiasModel;
use ranger_core::scheme::SamplingMode;

use crate::config::{fig4_preset, ExperimentConfig};
use crate::error::CliError;
use crate::output::{self, Panel, ReportJson};

pub const SEED_ENV: &str = "RANGER_SEED";

/// Flags shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Context {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Worker threads; 0 picks the default. Never changes results.
    pub threads: usize,
    /// Value of `RANGER_SEED`, if set.
    pub env_seed: Option<String>,
}

impl Context {
    pub fn from_env(out: Option<PathBuf>, seed: Option<u64>, threads: usize) -> Self {
        Self {
            out,
            seed,
            threads,
            env_seed: std::env::var(SEED_ENV).ok(),
        }
    }

    fn out_dir(&self, cfg: Option<&ExperimentConfig>, fallback: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| cfg.and_then(|c| c.out.clone()))
            .unwrap_or_else(|| PathBuf::from(fallback))
    }
}

/// Everything one simulated experiment produced.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub counts: CountsTable,
    pub series: CorrelationSeries,
    pub hit: HitReport,
    pub summary: RunSummary,
    pub report: ReportJson,
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    ExperimentConfig::parse(&text)
}

/// Simulates, analyzes and writes the selected artifacts into `dir`.
pub fn execute(cfg: &ExperimentConfig, dir: &Path, threads: usize) -> Result<RunArtifacts, CliError> {
    cfg.validate()?;
    output::ensure_dir(dir)?;
    let out = run_with_threads(&cfg.run, threads)?;
    let (series, hit) = analyze(&out.counts, &cfg.run.scheme, cfg.k, cfg.min_baseline)?;
    let range = estimate_range(&hit, &cfg.run.scheme, out.summary.efficiency())?;
    let report = ReportJson::new(&range, &hit, &out.summary, cfg.min_baseline, cfg.hash(), cfg.to_text());

    let g_csv = output::g_series_csv(&series);
    let g_path = dir.join("g_series.csv");
    if cfg.formats.csv {
        output::write(&dir.join("counts.csv"), &output::counts_csv(&out.counts))?;
        output::write(&g_path, &g_csv)?;
    }
    if cfg.formats.json {
        output::write(&dir.join("report.json"), &report.to_json())?;
    }
    if let Some(log) = &out.events {
        let path = dir.join("events.log");
        let file = fs::File::create(&path).map_err(|e| CliError::io(path.display(), e))?;
        log.write_to(std::io::BufWriter::new(file))
            .map_err(|e| CliError::io(path.display(), e))?;
    }
    if cfg.formats.svg {
        // Plot from the CSV that was written, never from live numbers.
        let text = if cfg.formats.csv {
            fs::read_to_string(&g_path).map_err(|e| CliError::io(g_path.display(), e))?
        } else {
            g_csv
        };
        let points = output::parse_g_series_csv(&text)?;
        let panel = Panel {
            title: panel_title(cfg, &hit),
            points: &points,
            marker: cfg.run.hit_index,
        };
        output::write(&dir.join("g_series.svg"), &output::render_svg(&[panel]))?;
    }

    Ok(RunArtifacts {
        counts: out.counts,
        series,
        hit,
        summary: out.summary,
        report,
    })
}

fn panel_title(cfg: &ExperimentConfig, hit: &HitReport) -> String {
    let found = hit
        .estimated_hit_location
        .map_or("no hit".to_string(), |i| format!("hit at {i}"));
    format!(
        "G(x(i)), a={} b={}, N={}, {} ({found})",
        cfg.run.bias.a(),
        cfg.run.bias.b(),
        cfg.run.pairs,
        cfg.run.sampling_mode.name()
    )
}

/// `ranger run`: exit 0 on a detected hit, [`CliError::NotDetected`] otherwise.
pub fn cmd_run(config: &Path, ctx: &Context) -> Result<RunArtifacts, CliError> {
    let mut cfg = load(config)?;
    cfg.resolve_seed(ctx.seed, ctx.env_seed.as_deref())?;
    let dir = ctx.out_dir(Some(&cfg), "ranger-out");
    let artifacts = execute(&cfg, &dir, ctx.threads)?;
    log::info!(
        "{} pairs, {} detected, hit {:?}",
        artifacts.summary.emitted,
        artifacts.summary.detected,
        artifacts.hit.estimated_hit_location
    );
    if artifacts.hit.detected() {
        Ok(artifacts)
    } else {
        Err(CliError::NotDetected)
    }
}

/// One row of `fig4_summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig4Row {
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub mode: SamplingMode,
    pub detected: bool,
    pub hit_index: Option<usize>,
    pub plateau: f64,
    pub g_hit: f64,
}

/// Bias settings beyond the fully collapsed `(1, 0)` case. Artifact
/// defaults, not values taken from any published figure.
pub const FIG4_EXTRA_BIASES: [(f64, f64); 3] = [(0.9, 0.1), (0.75, 0.25), (0.6, 0.4)];

/// `ranger fig4`: 10^6 pairs, 1000 locations, R = 0.001, hit at 600.
pub fn cmd_fig4(ctx: &Context) -> Result<Vec<Fig4Row>, CliError> {
    let mut base = fig4_preset(0);
    base.seed_in_config = false;
    base.resolve_seed(ctx.seed, ctx.env_seed.as_deref())?;
    let dir = ctx.out_dir(None, "fig4");
    output::ensure_dir(&dir)?;

    let mut settings = vec![
        (1.0, 0.0, SamplingMode::ChainDecay),
        (1.0, 0.0, SamplingMode::UniformLocation),
    ];
    settings.extend(FIG4_EXTRA_BIASES.iter().map(|&(a, b)| (a, b, SamplingMode::ChainDecay)));

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (a, b, mode) in settings {
        let mut cfg = base.clone();
        cfg.run.bias = BiasModel::new(a, b)?;
        cfg.run.sampling_mode = mode;
        let label = format!("a{a}_b{b}_{}", mode.name());
        let art = execute(&cfg, &dir.join(&label), ctx.threads)?;
        let plateau = post_hit_plateau(&art.series, &cfg.run)?;
        traces.push((label.clone(), art.series.iter().collect::<Vec<_>>()));
        rows.push(Fig4Row {
            label,
            a,
            b,
            mode,
            detected: art.hit.detected(),
            hit_index: art.hit.estimated_hit_location,
            plateau,
            g_hit: art.hit.g_hit,
        });
    }

    let mut csv = String::from("label,a,b,sampling_mode,detected,hit_index,plateau,g_hit\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            r.label,
            r.a,
            r.b,
            r.mode.name(),
            r.detected,
            r.hit_index.map_or(String::new(), |i| i.to_string()),
            r.plateau,
            r.g_hit
        );
    }
    output::write(&dir.join("fig4_summary.csv"), &csv)?;

    let panels: Vec<Panel<'_>> = traces
        .iter()
        .map(|(label, points)| Panel {
            title: label.clone(),
            points,
            marker: base.run.hit_index,
        })
        .collect();
    output::write(&dir.join("fig4.svg"), &output::render_svg(&panels))?;
    Ok(rows)
}

/// One row of `sweep_summary.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub point: usize,
    pub values: Vec<(String, String)>,
    pub detected: bool,
    pub hit_index: Option<usize>,
    pub range_m: Option<f64>,
    pub g_hit: f64,
    pub snr: Option<f64>,
    pub efficiency: f64,
}

/// `ranger sweep`: one sub-directory per point of the axis product plus
/// `sweep_summary.csv`.
pub fn cmd_sweep(config: &Path, ctx: &Context) -> Result<Vec<SweepRow>, CliError> {
    let mut cfg = load(config)?;
    if cfg.sweep.is_empty() {
        return Err(CliError::Validation("sweep needs at least one sweep.<axis> key".into()));
    }
    cfg.resolve_seed(ctx.seed, ctx.env_seed.as_deref())?;
    let dir = ctx.out_dir(Some(&cfg), "ranger-sweep");
    output::ensure_dir(&dir)?;

    let points = cfg.sweep_points();
    // Validate every point before spending time on any of them.
    let configs = points
        .iter()
        .map(|p| cfg.with_point(p))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for (n, (point, point_cfg)) in points.iter().zip(&configs).enumerate() {
        let art = execute(point_cfg, &dir.join(format!("point_{n:03}")), ctx.threads)?;
        rows.push(SweepRow {
            point: n,
            values: point.iter().map(|v| (v.key().to_string(), v.render())).collect(),
            detected: art.report.detected,
            hit_index: art.report.hit_index,
            range_m: art.report.estimated_range_m,
            g_hit: art.report.g_hit,
            snr: art.report.snr,
            efficiency: art.report.efficiency,
        });
    }

    let mut csv = String::from("point");
    for axis in &cfg.sweep {
        csv.push(',');
        csv.push_str(axis.key());
    }
    csv.push_str(",detected,hit_index,estimated_range_m,g_hit,snr,efficiency\n");
    let blank = |o: Option<String>| o.unwrap_or_default();
    for r in &rows {
        let _ = write!(csv, "{}", r.point);
        for (_, v) in &r.values {
            let _ = write!(csv, ",{v}");
        }
        let _ = writeln!(
            csv,
            ",{},{},{},{},{},{}",
            r.detected,
            blank(r.hit_index.map(|i| i.to_string())),
            blank(r.range_m.map(|x| x.to_string())),
            r.g_hit,
            blank(r.snr.map(|x| x.to_string())),
            r.efficiency
        );
    }
    output::write(&dir.join("sweep_summary.csv"), &csv)?;
    Ok(rows)
}
