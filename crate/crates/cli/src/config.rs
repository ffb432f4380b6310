//! Run configuration: TOML in, validated `RunConfig` out.
//!
//! Parsing never stops at the first problem. Every missing, mistyped,
//! out-of-range or unknown key is collected so one run reports them all.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use photolattice::circuitq::SquidForm;
use photolattice::lindblad::NessMethod;
use photolattice::models::{Boundary, HarperParams};
use photolattice::spectroscopy::{default_irrational_b, SeriesMethod};
use photolattice::NumberSector;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

/// One validation problem, addressed by dotted key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Gnuplot,
}

impl Format {
    pub fn parse(s: &str) -> Option<Format> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "gnuplot" | "gnuplot-block" => Some(Format::Gnuplot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig {
    Bh {
        omega: Vec<f64>,
        j: f64,
        u: f64,
        mu: f64,
        boundary: Boundary,
        /// One photon per site at most; also fixes the truncation.
        hardcore: bool,
        n_max: usize,
        sector: NumberSector,
    },
    Jch {
        l: usize,
        omega_a: f64,
        omega_c: f64,
        g: f64,
        j: f64,
        mu: f64,
        boundary: Boundary,
        n_max: usize,
        sector: NumberSector,
    },
    Harper(HarperParams),
    Chiral {
        omega: f64,
        j0: f64,
        phases: [f64; 3],
        u: f64,
        n_photons: usize,
    },
    /// Energies are `E/h` in GHz in the file, rad/s once parsed.
    Transmon {
        e_j: f64,
        e_c: f64,
        squid: Option<(f64, f64, f64, SquidForm)>,
    },
    /// Capacitances in fF in the file, F once parsed; `e_j` as for `Transmon`.
    TransmonArray {
        l: usize,
        c: f64,
        c_j: f64,
        e_j: f64,
        boundary: Boundary,
        n_max: usize,
    },
}

impl ModelConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::Bh { .. } => "bh",
            ModelConfig::Jch { .. } => "jch",
            ModelConfig::Harper(_) => "harper",
            ModelConfig::Chiral { .. } => "chiral",
            ModelConfig::Transmon { .. } => "transmon",
            ModelConfig::TransmonArray { .. } => "transmon-array",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivePattern {
    Uniform,
    Alternating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NessChoice {
    Fixed(NessMethod),
    /// Null space when the space is small enough, otherwise long time.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    pub gamma: f64,
    pub amplitude: f64,
    pub pattern: DrivePattern,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskConfig {
    Diagonalize {
        count: Option<usize>,
    },
    MeanField {
        z: f64,
        /// BH: lobes to trace and the `U/zJ` grid.
        lobes: usize,
        u_max: f64,
        u_points: usize,
        /// JCH: `zJ/g` and `(mu - omega_c)/g` grids.
        zj: (f64, f64),
        zj_points: usize,
        mu: (f64, f64),
        mu_points: usize,
    },
    Lindblad {
        drive: DriveConfig,
        omega_d: f64,
        t_final: f64,
        steps: usize,
        initial: Vec<u8>,
    },
    NessSweep {
        drive: DriveConfig,
        omega_d: (f64, f64),
        points: usize,
        method: NessChoice,
    },
    Spectroscopy {
        /// Photon number probed; Harper models default to their own.
        order: Option<usize>,
        t_total: Option<f64>,
        method: SeriesMethod,
        min_weight: f64,
        noise: f64,
        seed: u64,
    },
    Butterfly {
        b_steps: usize,
        b_range: (f64, f64),
        t_total: Option<f64>,
        min_weight: f64,
    },
    LevelStats {
        deltas: Vec<f64>,
        b_values: Vec<f64>,
        bins: usize,
    },
    Circuit,
}

impl TaskConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            TaskConfig::Diagonalize { .. } => "diagonalize",
            TaskConfig::MeanField { .. } => "meanfield",
            TaskConfig::Lindblad { .. } => "lindblad",
            TaskConfig::NessSweep { .. } => "ness-sweep",
            TaskConfig::Spectroscopy { .. } => "spectroscopy",
            TaskConfig::Butterfly { .. } => "butterfly",
            TaskConfig::LevelStats { .. } => "levelstats",
            TaskConfig::Circuit => "circuit",
        }
    }
}

/// Canonical task name for a subcommand or config value.
pub fn canonical_task(name: &str) -> Option<&'static str> {
    Some(match name {
        "diagonalize" | "spectrum" => "diagonalize",
        "meanfield" => "meanfield",
        "lindblad" => "lindblad",
        "ness-sweep" | "ness" => "ness-sweep",
        "spectroscopy" => "spectroscopy",
        "butterfly" => "butterfly",
        "levelstats" => "levelstats",
        "circuit" => "circuit",
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericConfig {
    pub rtol: f64,
    pub n_max_start: usize,
    pub n_max_cap: usize,
    pub mf_tol: f64,
    pub psi_grid: usize,
    pub pop_tol: f64,
    pub ness_tol: f64,
    pub pad: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub task: TaskConfig,
    pub numeric: NumericConfig,
    pub output: OutputConfig,
    /// sha256 of the canonical JSON rendering of the (overridden) document.
    pub hash: String,
}

/// GHz (as `E/h` or `omega/2pi`) to rad/s.
pub fn ghz(x: f64) -> f64 {
    2.0 * std::f64::consts::PI * 1e9 * x
}

struct Ctx {
    errors: RefCell<Vec<ConfigError>>,
}

impl Ctx {
    fn push(&self, path: &str, message: impl Into<String>) {
        self.errors.borrow_mut().push(ConfigError { path: path.to_string(), message: message.into() });
    }
}

/// A table being read; remembers which keys were consumed.
struct Section<'a> {
    ctx: &'a Ctx,
    path: String,
    table: &'a Table,
    used: RefCell<BTreeSet<String>>,
}

impl<'a> Section<'a> {
    fn new(ctx: &'a Ctx, path: &str, table: &'a Table) -> Self {
        Section { ctx, path: path.to_string(), table, used: RefCell::new(BTreeSet::new()) }
    }

    fn key(&self, k: &str) -> String {
        if self.path.is_empty() {
            k.to_string()
        } else {
            format!("{}.{}", self.path, k)
        }
    }

    fn raw(&self, k: &str) -> Option<&'a Value> {
        self.used.borrow_mut().insert(k.to_string());
        self.table.get(k)
    }

    fn err(&self, k: &str, msg: impl Into<String>) {
        self.ctx.push(&self.key(k), msg);
    }

    fn opt_f64(&self, k: &str) -> Option<f64> {
        match self.raw(k)? {
            Value::Float(x) if x.is_finite() => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            Value::Float(_) => {
                self.err(k, "must be finite");
                None
            }
            other => {
                self.err(k, format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    /// Missing keys are reported; the returned NaN never reaches a computation
    /// because any error aborts before running.
    fn f64(&self, k: &str, default: Option<f64>) -> f64 {
        match (self.table.contains_key(k), default) {
            (false, Some(d)) => {
                self.used.borrow_mut().insert(k.to_string());
                d
            }
            (false, None) => {
                self.err(k, "missing required key");
                f64::NAN
            }
            _ => self.opt_f64(k).unwrap_or(f64::NAN),
        }
    }

    fn f64_where(&self, k: &str, default: Option<f64>, ok: impl Fn(f64) -> bool, rule: &str) -> f64 {
        let v = self.f64(k, default);
        if !v.is_nan() && !ok(v) {
            self.err(k, format!("{k} = {v}: {rule}"));
        }
        v
    }

    fn usize(&self, k: &str, default: Option<usize>, lo: usize, hi: usize) -> usize {
        let v = match (self.raw(k), default) {
            (None, Some(d)) => return d,
            (None, None) => {
                self.err(k, "missing required key");
                return lo;
            }
            (Some(Value::Integer(i)), _) if *i >= 0 => *i as usize,
            (Some(other), _) => {
                self.err(k, format!("expected a non-negative integer, found {}", other));
                return lo;
            }
        };
        if v < lo || v > hi {
            self.err(k, format!("{k} = {v} outside [{lo}, {hi}]"));
        }
        v
    }

    fn bool(&self, k: &str, default: bool) -> bool {
        match self.raw(k) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                self.err(k, format!("expected true or false, found {}", other.type_str()));
                default
            }
        }
    }

    fn opt_usize(&self, k: &str, lo: usize, hi: usize) -> Option<usize> {
        self.table.contains_key(k).then(|| self.usize(k, None, lo, hi))
    }

    fn string(&self, k: &str, default: Option<&str>) -> String {
        match (self.raw(k), default) {
            (None, Some(d)) => d.to_string(),
            (None, None) => {
                self.err(k, "missing required key");
                String::new()
            }
            (Some(Value::String(s)), _) => s.clone(),
            (Some(other), _) => {
                self.err(k, format!("expected a string, found {}", other.type_str()));
                String::new()
            }
        }
    }

    fn choice<T: Copy>(&self, k: &str, default: Option<&str>, options: &[(&str, T)]) -> Option<T> {
        let s = self.string(k, default);
        if s.is_empty() && default.is_none() && !self.table.contains_key(k) {
            return None;
        }
        match options.iter().find(|(name, _)| *name == s) {
            Some((_, v)) => Some(*v),
            None => {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.err(k, format!("unknown value {s:?}; expected one of {}", names.join(", ")));
                None
            }
        }
    }

    fn f64_list(&self, k: &str) -> Option<Vec<f64>> {
        match self.raw(k)? {
            Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for (i, it) in items.iter().enumerate() {
                    match it {
                        Value::Float(x) if x.is_finite() => out.push(*x),
                        Value::Integer(n) => out.push(*n as f64),
                        other => {
                            self.ctx.push(&format!("{}[{i}]", self.key(k)), format!("expected a number, found {other}"));
                        }
                    }
                }
                Some(out)
            }
            other => {
                self.err(k, format!("expected an array, found {}", other.type_str()));
                None
            }
        }
    }

    fn pair(&self, k: &str, default: (f64, f64)) -> (f64, f64) {
        match self.f64_list(k) {
            None => default,
            Some(v) if v.len() == 2 && v[0] <= v[1] => (v[0], v[1]),
            Some(v) => {
                self.err(k, format!("expected [lo, hi] with lo <= hi, found {v:?}"));
                default
            }
        }
    }

    fn sub(&self, k: &str) -> Option<Section<'a>> {
        match self.raw(k)? {
            Value::Table(t) => Some(Section::new(self.ctx, &self.key(k), t)),
            other => {
                self.err(k, format!("expected a table, found {}", other.type_str()));
                None
            }
        }
    }

    /// Reports keys present in the table but never read.
    fn finish(&self) {
        let used = self.used.borrow();
        for k in self.table.keys() {
            if !used.contains(k) {
                self.err(k, "unknown key");
            }
        }
    }
}

fn boundary(s: &Section, k: &str) -> Boundary {
    s.choice(k, Some("open"), &[("open", Boundary::Open), ("periodic", Boundary::Periodic)]).unwrap_or(Boundary::Open)
}

fn sector(s: &Section) -> NumberSector {
    let exact = s.opt_usize("n_total", 0, 200);
    let at_most = s.opt_usize("n_at_most", 0, 200);
    match (exact, at_most) {
        (Some(_), Some(_)) => {
            s.err("n_total", "n_total and n_at_most are mutually exclusive");
            NumberSector::Unrestricted
        }
        (Some(n), None) => NumberSector::Exactly(n),
        (None, Some(n)) => NumberSector::AtMost(n),
        (None, None) => NumberSector::Unrestricted,
    }
}

fn positive(x: f64) -> bool {
    x > 0.0
}

fn parse_model(s: &Section) -> Option<ModelConfig> {
    let kind = s.string("type", None);
    let m = match kind.as_str() {
        "bh" => {
            let l = s.usize("l", None, 1, 64);
            let omega = match s.raw("omega") {
                Some(Value::Array(_)) => {
                    let v = s.f64_list("omega").unwrap_or_default();
                    if v.len() != l {
                        s.err("omega", format!("has {} entries for l = {l} sites", v.len()));
                    }
                    v
                }
                _ => vec![s.f64("omega", None); l],
            };
            let hardcore = s.bool("hardcore", false);
            let n_max = s.usize("n_max", Some(if hardcore { 1 } else { 3 }), 1, 120);
            if hardcore && n_max != 1 {
                s.err("n_max", "a hardcore model has n_max = 1");
            }
            ModelConfig::Bh {
                omega,
                j: s.f64("j", None),
                u: s.f64("u", Some(0.0)),
                mu: s.f64("mu", Some(0.0)),
                boundary: boundary(s, "boundary"),
                hardcore,
                n_max,
                sector: sector(s),
            }
        }
        "jch" => ModelConfig::Jch {
            l: s.usize("l", None, 1, 64),
            omega_a: s.f64("omega_a", None),
            omega_c: s.f64("omega_c", None),
            g: s.f64("g", None),
            j: s.f64("j", Some(0.0)),
            mu: s.f64("mu", Some(0.0)),
            boundary: boundary(s, "boundary"),
            n_max: s.usize("n_max", Some(3), 1, 120),
            sector: sector(s),
        },
        "harper" => ModelConfig::Harper(HarperParams {
            l: s.usize("l", Some(9), 2, 64),
            delta: s.f64("delta", None),
            b: s.f64_where("b", Some(0.0), |b| (0.0..=1.0).contains(&b), "b outside [0,1]"),
            j: s.f64_where("j", Some(1.0), |j| j != 0.0, "J must be non-zero"),
            u: s.f64("u", Some(0.0)),
            n_photons: s.usize("n_photons", Some(1), 1, 2),
        }),
        "chiral" => {
            let phases = match s.f64_list("phases") {
                Some(v) if v.len() == 3 => [v[0], v[1], v[2]],
                Some(v) => {
                    s.err("phases", format!("expected 3 bond phases, found {}", v.len()));
                    [0.0; 3]
                }
                None => {
                    s.err("phases", "missing required key");
                    [0.0; 3]
                }
            };
            ModelConfig::Chiral {
                omega: s.f64("omega", Some(0.0)),
                j0: s.f64("j0", None),
                phases,
                u: s.f64("u", Some(0.0)),
                n_photons: s.usize("n_photons", Some(1), 1, 20),
            }
        }
        "transmon" => {
            let squid = s.sub("squid").map(|q| {
                let v = (
                    ghz(q.f64_where("e_j1_ghz", None, positive, "must be positive")),
                    ghz(q.f64_where("e_j2_ghz", None, positive, "must be positive")),
                    q.f64("phi_g", Some(0.0)),
                    q.choice("form", Some("tan"), &[("tan", SquidForm::Tan), ("tan-squared", SquidForm::TanSquared)])
                        .unwrap_or_default(),
                );
                q.finish();
                v
            });
            let e_j = if squid.is_some() { f64::NAN } else { ghz(s.f64_where("e_j_ghz", None, positive, "must be positive")) };
            ModelConfig::Transmon { e_j, e_c: ghz(s.f64_where("e_c_ghz", None, positive, "must be positive")), squid }
        }
        "transmon-array" => ModelConfig::TransmonArray {
            l: s.usize("l", Some(3), 1, 64),
            c: 1e-15 * s.f64_where("c_ff", None, positive, "must be positive"),
            c_j: 1e-15 * s.f64_where("c_j_ff", None, positive, "must be positive"),
            e_j: ghz(s.f64_where("e_j_ghz", None, positive, "must be positive")),
            boundary: boundary(s, "boundary"),
            n_max: s.usize("n_max", Some(2), 1, 40),
        },
        "" => return None,
        other => {
            s.err("type", format!("unknown model type {other:?}; expected bh, jch, harper, chiral, transmon or transmon-array"));
            return None;
        }
    };
    Some(m)
}

fn drive(s: &Section, default_amplitude: Option<f64>) -> DriveConfig {
    DriveConfig {
        gamma: s.f64_where("gamma", None, positive, "loss rate must be positive"),
        amplitude: s.f64("drive", default_amplitude),
        pattern: s
            .choice("pattern", Some("uniform"), &[("uniform", DrivePattern::Uniform), ("alternating", DrivePattern::Alternating)])
            .unwrap_or(DrivePattern::Uniform),
    }
}

fn parse_task(s: &Section) -> Option<TaskConfig> {
    let kind = s.string("kind", None);
    let t = match canonical_task(&kind) {
        Some("diagonalize") => TaskConfig::Diagonalize { count: s.opt_usize("count", 1, 1 << 20) },
        Some("meanfield") => TaskConfig::MeanField {
            z: s.f64_where("z", Some(2.0), positive, "coordination number must be positive"),
            lobes: s.usize("lobes", Some(3), 1, 50),
            u_max: s.f64_where("u_max", Some(40.0), positive, "must be positive"),
            u_points: s.usize("u_points", Some(400), 2, 1_000_000),
            zj: s.pair("zj", (0.0, 0.5)),
            zj_points: s.usize("zj_points", Some(40), 1, 10_000),
            mu: s.pair("mu", (-1.2, 0.2)),
            mu_points: s.usize("mu_points", Some(40), 1, 10_000),
        },
        Some("lindblad") => {
            let initial = match s.f64_list("initial") {
                Some(v) => v.iter().map(|&x| x.max(0.0) as u8).collect(),
                None => Vec::new(),
            };
            TaskConfig::Lindblad {
                drive: drive(s, Some(0.0)),
                omega_d: s.f64("omega_d", Some(0.0)),
                t_final: s.f64_where("t_final", None, positive, "must be positive"),
                steps: s.usize("steps", Some(100), 1, 1_000_000),
                initial,
            }
        }
        Some("ness-sweep") => TaskConfig::NessSweep {
            drive: drive(s, None),
            omega_d: {
                if !s.table.contains_key("omega_d") {
                    s.err("omega_d", "missing required key");
                }
                s.pair("omega_d", (f64::NAN, f64::NAN))
            },
            points: s.usize("points", Some(101), 1, 1_000_000),
            method: s
                .choice(
                    "method",
                    Some("auto"),
                    &[
                        ("auto", NessChoice::Auto),
                        ("null_space", NessChoice::Fixed(NessMethod::NullSpace)),
                        ("long_time", NessChoice::Fixed(NessMethod::LongTime)),
                    ],
                )
                .unwrap_or(NessChoice::Auto),
        },
        Some("spectroscopy") => TaskConfig::Spectroscopy {
            order: s.opt_usize("order", 1, 2),
            t_total: s.table.contains_key("t_total").then(|| s.f64_where("t_total", None, positive, "must be positive")),
            method: s
                .choice("series", Some("protocol"), &[("protocol", SeriesMethod::Protocol), ("eigen", SeriesMethod::EigenExpansion)])
                .unwrap_or_default(),
            min_weight: s.f64_where("min_weight", Some(0.25), |w| w >= 0.0, "must be non-negative"),
            noise: s.f64_where("noise", Some(0.0), |w| w >= 0.0, "must be non-negative"),
            seed: s.usize("seed", Some(0), 0, usize::MAX) as u64,
        },
        Some("butterfly") => TaskConfig::Butterfly {
            b_steps: s.usize("b_steps", Some(100), 1, 100_000),
            b_range: {
                let r = s.pair("b", (0.0, 1.0));
                if r.0 < 0.0 || r.1 > 1.0 {
                    s.err("b", "b outside [0,1]");
                }
                r
            },
            t_total: s.table.contains_key("t_total").then(|| s.f64_where("t_total", None, positive, "must be positive")),
            min_weight: s.f64_where("min_weight", Some(0.25), |w| w >= 0.0, "must be non-negative"),
        },
        Some("levelstats") => {
            let b_values = s.f64_list("b_values").unwrap_or_else(|| default_irrational_b().to_vec());
            if b_values.iter().any(|b| !(0.0..=1.0).contains(b)) {
                s.err("b_values", "b outside [0,1]");
            }
            TaskConfig::LevelStats {
                deltas: s.f64_list("deltas").unwrap_or_else(|| vec![1.0, 5.0]),
                b_values,
                bins: s.usize("bins", Some(20), 1, 10_000),
            }
        }
        Some("circuit") => TaskConfig::Circuit,
        _ => {
            if !kind.is_empty() {
                s.err("kind", format!("unknown task {kind:?}"));
            }
            return None;
        }
    };
    Some(t)
}

fn check_compatible(model: &ModelConfig, task: &TaskConfig, ctx: &Ctx) {
    let ok = match task {
        TaskConfig::Diagonalize { .. } => !matches!(model, ModelConfig::Transmon { .. }),
        TaskConfig::MeanField { .. } => matches!(model, ModelConfig::Bh { .. } | ModelConfig::Jch { .. }),
        TaskConfig::Lindblad { .. } | TaskConfig::NessSweep { .. } => matches!(
            model,
            ModelConfig::Bh { sector: NumberSector::Unrestricted, .. } | ModelConfig::Jch { sector: NumberSector::Unrestricted, .. }
        ),
        TaskConfig::Spectroscopy { .. } => matches!(model, ModelConfig::Harper(_) | ModelConfig::Bh { .. }),
        TaskConfig::Butterfly { .. } => matches!(model, ModelConfig::Harper(_)),
        TaskConfig::LevelStats { .. } => matches!(model, ModelConfig::Harper(_)),
        TaskConfig::Circuit => matches!(model, ModelConfig::Transmon { .. } | ModelConfig::TransmonArray { .. }),
    };
    if !ok {
        ctx.push("task.kind", format!("task {} does not apply to model type {}", task.kind(), model.kind()));
    }
    if let (TaskConfig::Spectroscopy { order: Some(o), .. }, ModelConfig::Harper(p)) = (task, model) {
        if *o != p.n_photons {
            ctx.push("task.order", format!("order {o} differs from model.n_photons = {}", p.n_photons));
        }
    }
    if let (TaskConfig::Lindblad { initial, .. }, ModelConfig::Bh { omega, n_max, .. }) = (task, model) {
        if !initial.is_empty() && (initial.len() != omega.len() || initial.iter().any(|&n| n as usize > *n_max)) {
            ctx.push("task.initial", "initial photon numbers must list one entry per site, each at most n_max");
        }
    }
}

/// Canonical JSON (sorted keys, no whitespace) used for hashing.
pub fn canonical_json(doc: &Table) -> String {
    fn conv(v: &Value) -> serde_json::Value {
        match v {
            Value::String(s) => serde_json::Value::String(s.clone()),
            Value::Integer(i) => serde_json::Value::from(*i),
            Value::Float(f) => serde_json::Number::from_f64(*f).map(serde_json::Value::Number).unwrap_or(serde_json::Value::Null),
            Value::Boolean(b) => serde_json::Value::Bool(*b),
            Value::Datetime(d) => serde_json::Value::String(d.to_string()),
            Value::Array(a) => serde_json::Value::Array(a.iter().map(conv).collect()),
            Value::Table(t) => {
                let sorted: std::collections::BTreeMap<_, _> = t.iter().map(|(k, v)| (k.clone(), conv(v))).collect();
                serde_json::Value::Object(sorted.into_iter().collect())
            }
        }
    }
    conv(&Value::Table(doc.clone())).to_string()
}

pub fn config_hash(doc: &Table) -> String {
    hex::encode(Sha256::digest(canonical_json(doc).as_bytes()))
}

/// Parses TOML text. Syntax errors come back as a single error.
pub fn parse_document(text: &str) -> Result<Table, ConfigErrors> {
    text.parse::<Table>().map_err(|e| ConfigErrors(vec![ConfigError { path: "<document>".into(), message: e.to_string() }]))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    from_document(&parse_document(text)?)
}

pub fn from_document(doc: &Table) -> Result<RunConfig, ConfigErrors> {
    let ctx = Ctx { errors: RefCell::new(Vec::new()) };
    let root = Section::new(&ctx, "", doc);

    let model = match root.sub("model") {
        Some(s) => {
            let m = parse_model(&s);
            s.finish();
            m
        }
        None => {
            ctx.push("model", "missing [model] section");
            None
        }
    };
    let task = match root.sub("task") {
        Some(s) => {
            let t = parse_task(&s);
            s.finish();
            t
        }
        None => {
            ctx.push("task", "missing [task] section");
            None
        }
    };
    let empty = Table::new();
    let num_sec = root.sub("numeric");
    let n = num_sec.unwrap_or_else(|| Section::new(&ctx, "numeric", &empty));
    let numeric = NumericConfig {
        rtol: n.f64_where("rtol", Some(1e-10), |x| x > 0.0 && x < 1.0, "must lie in (0, 1)"),
        n_max_start: n.usize("n_max_start", Some(3), 1, 120),
        n_max_cap: n.usize("n_max_cap", Some(12), 1, 120),
        mf_tol: n.f64_where("mf_tol", Some(1e-5), positive, "must be positive"),
        psi_grid: n.usize("psi_grid", Some(120), 4, 100_000),
        pop_tol: n.f64_where("pop_tol", Some(1e-6), positive, "must be positive"),
        ness_tol: n.f64_where("ness_tol", Some(1e-10), positive, "must be positive"),
        pad: n.usize("pad", Some(8), 1, 64),
    };
    if numeric.n_max_start > numeric.n_max_cap {
        ctx.push("numeric.n_max_start", "must not exceed numeric.n_max_cap");
    }
    n.finish();
    let out_sec = root.sub("output");
    let o = out_sec.unwrap_or_else(|| Section::new(&ctx, "output", &empty));
    let output = OutputConfig {
        dir: PathBuf::from(o.string("dir", Some("out"))),
        format: o
            .choice("format", Some("csv"), &[("csv", Format::Csv), ("json", Format::Json), ("gnuplot", Format::Gnuplot), ("gnuplot-block", Format::Gnuplot)])
            .unwrap_or(Format::Csv),
    };
    o.finish();
    root.finish();

    if let (Some(m), Some(t)) = (&model, &task) {
        check_compatible(m, t, &ctx);
    }
    let errors = ctx.errors.into_inner();
    match (model, task) {
        (Some(model), Some(task)) if errors.is_empty() => Ok(RunConfig { model, task, numeric, output, hash: config_hash(doc) }),
        _ => Err(ConfigErrors(errors)),
    }
}

/// Sets `dotted.key = value`, creating tables along the way.
pub fn set_key(doc: &mut Table, dotted: &str, value: Value) {
    let mut parts: Vec<&str> = dotted.split('.').collect();
    let last = parts.pop().unwrap();
    let mut t = doc;
    for p in parts {
        let entry = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        if !entry.is_table() {
            *entry = Value::Table(Table::new());
        }
        t = entry.as_table_mut().unwrap();
    }
    t.insert(last.to_string(), value);
}
