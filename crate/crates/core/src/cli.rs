//! Command-line front end. The `tdlsm` binary only parses arguments and calls
//! [`run`].

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiment::{assemble, invert, simulate};
use crate::operators::OperatorKind;
use crate::render::{heatmap, write_pgm};
use crate::storage::{self, Layout};
use crate::validation::{run_suite, Baselines};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "tdlsm", version, about = "Passive time-domain linear sampling for sound-soft obstacles")]
pub struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of the random source positions.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output root directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate passive and active data and write a dataset directory.
    Simulate,
    /// Build an imaging operator from a dataset.
    Assemble {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        kind: Option<OperatorKind>,
    },
    /// Truncated-SVD inversion of a stored operator.
    Invert {
        #[arg(long)]
        operator: Option<PathBuf>,
        #[arg(long)]
        kind: Option<OperatorKind>,
    },
    /// Write a PGM heatmap of a stored indicator map.
    Render {
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        kind: Option<OperatorKind>,
        /// Draw the true obstacle boundaries.
        #[arg(long)]
        overlay: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the Helmholtz–Kirchhoff identities; prints JSON lines.
    Validate {
        /// Skip the time-domain check (needs a full simulation).
        #[arg(long)]
        no_time: bool,
    },
    /// Simulate, assemble, invert and render, reusing cached stages.
    Pipeline {
        /// Operator kinds to build; the configured kind when omitted.
        #[arg(long, value_delimiter = ',')]
        kind: Vec<OperatorKind>,
        /// Recompute every stage.
        #[arg(long)]
        force: bool,
    },
}

/// Configuration after applying command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sources.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(out) = &cli.output {
        cfg.output = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Exit status for an error: 2 for bad input, 1 for failures while running.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::UnknownShape(_) | Error::InvalidParameter(_) | Error::ObstacleIntersectsMeasurement { .. } => 2,
        Error::Stage { source, .. } => exit_code(source),
        _ => 1,
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn run(cli: &Cli) -> Result<ExitCode> {
    let cfg = resolve_config(cli)?;
    if let Some(n) = cfg.threads {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let layout = Layout::new(&cfg.output);
    let explicit = cli.config.is_some();
    match &cli.command {
        Command::Simulate => {
            cmd_simulate(&cfg, &layout.dataset())?;
        }
        Command::Assemble { dataset, kind } => {
            let dir = dataset.clone().unwrap_or_else(|| layout.dataset());
            let kind = kind.unwrap_or(cfg.inversion.operator);
            let target = layout.operator(kind);
            cmd_assemble(explicit.then_some(&cfg), &dir, kind, &target)?;
        }
        Command::Invert { operator, kind } => {
            let kind = kind.unwrap_or(cfg.inversion.operator);
            let dir = operator.clone().unwrap_or_else(|| layout.operator(kind));
            let summary = cmd_invert(explicit.then_some(&cfg), &dir, &layout.map(kind))?;
            println!("{summary}");
        }
        Command::Render { map, kind, overlay, out } => {
            let kind = kind.unwrap_or(cfg.inversion.operator);
            let dir = map.clone().unwrap_or_else(|| layout.map(kind));
            let out = out.clone().unwrap_or_else(|| dir.join("indicator.pgm"));
            cmd_render(&dir, *overlay, &out)?;
        }
        Command::Validate { no_time } => {
            let mut v = cfg.validation.clone();
            if *no_time {
                v.time_domain = false;
            }
            let mut c = cfg.clone();
            c.validation = v;
            return cmd_validate(&c, &layout.validation());
        }
        Command::Pipeline { kind, force } => {
            let kinds = if kind.is_empty() { vec![cfg.inversion.operator] } else { kind.clone() };
            for line in cmd_pipeline(&cfg, &kinds, *force)? {
                println!("{line}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn stage<T>(label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    log::info!("[{label}] start");
    let out = f()?;
    log::info!("[{label}] done in {:.1} s", start.elapsed().as_secs_f64());
    Ok(out)
}

pub fn cmd_simulate(cfg: &RunConfig, dir: &Path) -> Result<storage::DatasetManifest> {
    let data = stage("simulate", || simulate(cfg))?;
    storage::save_dataset(dir, cfg, &data)
}

/// When `overrides` is given, its post-simulation settings (noise, correlation,
/// inversion) replace the dataset's; its data settings must match the dataset.
pub fn cmd_assemble(
    overrides: Option<&RunConfig>,
    dataset: &Path,
    kind: OperatorKind,
    target: &Path,
) -> Result<storage::OperatorManifest> {
    let (manifest, data) = storage::load_dataset(dataset)?;
    let cfg = merge(manifest.config, overrides)?;
    let op = stage(&format!("assemble {kind}"), || assemble(&cfg, &data, kind))?;
    storage::save_operator(target, &cfg, &op)
}

fn merge(mut base: RunConfig, overrides: Option<&RunConfig>) -> Result<RunConfig> {
    if let Some(o) = overrides {
        if o.data_hash() != base.data_hash() {
            return Err(Error::Config(
                "configuration does not match the stored data; rerun simulate".into(),
            ));
        }
        base.noise = o.noise;
        base.correlation = o.correlation;
        base.inversion = o.inversion;
    }
    Ok(base)
}

pub fn cmd_invert(overrides: Option<&RunConfig>, operator: &Path, target: &Path) -> Result<String> {
    let (manifest, op) = storage::load_operator(operator)?;
    let cfg = merge(manifest.config.clone(), overrides)?;
    let scene = cfg.scene()?;
    let inv = stage(&format!("invert {}", op.kind), || invert(&cfg, &scene, &op))?;
    storage::save_map(target, &cfg, &manifest.config_hash, &scene, &inv)?;
    Ok(summary(&inv))
}

fn summary(inv: &crate::experiment::Inversion) -> String {
    let m = &inv.metrics;
    let [x, y] = m.argmax;
    format!(
        "operator {}: retained {} of {} singular values, argmax ({x:.3}, {y:.3}) {}, contrast {:.2}",
        inv.map.kind,
        inv.svd.retained(),
        inv.svd.spectrum.len(),
        if m.argmax_inside { "inside" } else { "outside" },
        m.contrast
    )
}

pub fn cmd_render(map_dir: &Path, overlay: bool, out: &Path) -> Result<()> {
    let (manifest, map) = storage::load_map(map_dir)?;
    let img = heatmap(&map, overlay.then_some(manifest.scene.obstacles.as_slice()));
    write_pgm(out, &img)?;
    log::info!("[render] wrote {}", out.display());
    Ok(())
}

/// Runs the suite and prints one JSON object per check. Exit status 1 if any
/// judged check fails.
pub fn cmd_validate(cfg: &RunConfig, report_path: &Path) -> Result<ExitCode> {
    let reports = stage("validate", || run_suite(cfg, &cfg.validation, &Baselines::bundled()))?;
    if let Some(parent) = report_path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut text = String::new();
    for r in &reports {
        text.push_str(&serde_json::to_string(r).expect("report serializes"));
        text.push('\n');
    }
    std::fs::write(report_path, &text).map_err(|e| Error::io(report_path, e))?;
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    let failed = reports.iter().filter(|r| r.pass == Some(false)).count();
    if failed > 0 {
        log::warn!("{failed} of {} checks failed", reports.len());
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

/// Runs every stage, skipping those whose stored manifest matches the current
/// configuration. Returns one summary line per operator.
pub fn cmd_pipeline(cfg: &RunConfig, kinds: &[OperatorKind], force: bool) -> Result<Vec<String>> {
    let layout = Layout::new(&cfg.output);
    let data_dir = layout.dataset();
    let cached = !force
        && storage::read_manifest::<storage::DatasetManifest>(&data_dir)
            .map(|m| m.data_hash == cfg.data_hash())
            .unwrap_or(false);
    if cached {
        log::info!("[simulate] cached at {}", data_dir.display());
    } else {
        cmd_simulate(cfg, &data_dir)?;
    }
    let mut lines = Vec::new();
    for &kind in kinds {
        let op_dir = layout.operator(kind);
        let cached = !force
            && storage::read_manifest::<storage::OperatorManifest>(&op_dir)
                .map(|m| m.config_hash == storage::operator_hash(cfg, kind))
                .unwrap_or(false);
        if cached {
            log::info!("[assemble {kind}] cached at {}", op_dir.display());
        } else {
            cmd_assemble(Some(cfg), &data_dir, kind, &op_dir)?;
        }
        let map_dir = layout.map(kind);
        lines.push(cmd_invert(Some(cfg), &op_dir, &map_dir)?);
        cmd_render(&map_dir, true, &map_dir.join("indicator.pgm"))?;
    }
    Ok(lines)
}
