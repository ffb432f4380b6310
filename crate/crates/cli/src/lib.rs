//! Library half of the `photolattice` command: config parsing, task
//! dispatch and output. `main.rs` only wires up logging and exit codes.

pub mod bundle;
pub mod config;
pub mod emit;
pub mod presets;
pub mod tasks;

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use toml::{Table, Value};

use bundle::{Meta, ResultBundle};
use config::{canonical_task, from_document, parse_document, set_key, ConfigErrors, Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_UNCONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "photolattice", version, about = "Interacting photons in coupled-resonator arrays")]
pub struct Args {
    /// diagonalize (alias spectrum), meanfield, lindblad, ness-sweep (alias ness),
    /// spectroscopy, butterfly, levelstats, circuit; or `presets` to list presets
    pub task: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Named preset; see `photolattice presets`.
    #[arg(long, conflicts_with = "config")]
    pub preset: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_parser = ["csv", "json", "gnuplot", "gnuplot-block"])]
    pub format: Option<String>,
    /// Number of b values (butterfly).
    #[arg(long)]
    pub b_steps: Option<usize>,
    /// Number of sites.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Swept parameter (ness-sweep); only omega_d is supported.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Override any config key, e.g. `--set model.delta=1.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// The config document after presets and command-line overrides.
pub fn resolve_document(args: &Args) -> Result<Table> {
    let task = canonical_task(&args.task).ok_or_else(|| anyhow!("unknown task {:?}", args.task))?;
    let text = match (&args.config, &args.preset) {
        (Some(path), _) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(name)) => presets::preset(name).ok_or_else(|| anyhow!("unknown preset {name:?}"))?.to_string(),
        (None, None) => presets::preset(presets::default_for_task(task)).unwrap().to_string(),
    };
    let mut doc = parse_document(&text)?;
    match doc.get("task").and_then(|t| t.get("kind")).and_then(Value::as_str) {
        Some(kind) if canonical_task(kind) != Some(task) => {
            bail!("config describes task {kind:?} but {:?} was requested", args.task)
        }
        Some(_) => {}
        None => set_key(&mut doc, "task.kind", Value::String(task.into())),
    }
    if let Some(n) = args.b_steps {
        set_key(&mut doc, "task.b_steps", Value::Integer(n as i64));
    }
    if let Some(l) = args.l {
        set_key(&mut doc, "model.l", Value::Integer(l as i64));
    }
    if let Some(p) = &args.sweep {
        if p != "omega_d" {
            bail!("--sweep supports omega_d only, got {p:?}");
        }
        if task != "ness-sweep" {
            bail!("--sweep applies to the ness-sweep task");
        }
    }
    if let Some(f) = &args.format {
        set_key(&mut doc, "output.format", Value::String(f.clone()));
    }
    if let Some(out) = &args.out {
        set_key(&mut doc, "output.dir", Value::String(out.to_string_lossy().into_owned()));
    }
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
        let parsed: Table = format!("v = {v}").parse().or_else(|_| format!("v = {v:?}").parse())?;
        set_key(&mut doc, k.trim(), parsed["v"].clone());
    }
    Ok(doc)
}

pub fn new_bundle(cfg: &RunConfig) -> ResultBundle {
    ResultBundle::new(Meta {
        config_hash: cfg.hash.clone(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        task: cfg.task.kind().to_string(),
        model: cfg.model.kind().to_string(),
    })
}

/// Runs a validated config. On failure the partial bundle comes back with
/// the error.
pub fn run(cfg: &RunConfig) -> std::result::Result<ResultBundle, (ResultBundle, anyhow::Error)> {
    let mut bundle = new_bundle(cfg);
    match tasks::run(cfg, &mut bundle) {
        Ok(()) => Ok(bundle),
        Err(e) => Err((bundle, e)),
    }
}

/// Runs and writes outputs; returns the process exit code.
pub fn run_and_emit(cfg: &RunConfig, dir: &Path, format: Format) -> i32 {
    match run(cfg) {
        Ok(bundle) => match emit::emit(&bundle, format, dir, None) {
            Ok(_) if bundle.diagnostics.converged => EXIT_OK,
            Ok(_) => EXIT_UNCONVERGED,
            Err(e) => {
                eprintln!("error: {e:#}");
                EXIT_RUNTIME
            }
        },
        Err((bundle, e)) => {
            eprintln!("error: {e:#}");
            if let Err(io) = emit::emit(&bundle, format, dir, Some(&format!("{e:#}"))) {
                eprintln!("error: could not write partial results: {io:#}");
            }
            EXIT_RUNTIME
        }
    }
}

pub fn main_with(args: Args) -> i32 {
    if args.task == "presets" {
        for (name, text) in presets::PRESETS {
            let first = text.lines().next().unwrap_or("").trim_start_matches("# ");
            println!("{name:22} {first}");
        }
        return EXIT_OK;
    }
    let doc = match resolve_document(&args) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    let cfg = match from_document(&doc) {
        Ok(c) => c,
        Err(ConfigErrors(errs)) => {
            eprint!("{}", ConfigErrors(errs));
            return EXIT_USAGE;
        }
    };
    if let Some(n) = args.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("worker pool already initialized: {e}");
        }
    }
    log::info!("running {} on {} (config {})", cfg.task.kind(), cfg.model.kind(), &cfg.hash[..12]);
    run_and_emit(&cfg, &cfg.output.dir.clone(), cfg.output.format)
}
