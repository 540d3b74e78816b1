//! `equicycle`: equilibria, limit cycles and parameter sweeps for
//! `z' = p z^5 zbar^4 + s z^6 zbar^5 - zbar^11`.
//!
//! Exit codes: 0 success, 2 bad input or inadmissible parameters,
//! 3 numerical failure, 4 I/O failure.

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use equicycle::dynamics::separatrix_curves;
use equicycle::ode::IntegratorConfig;
use equicycle::report::{
    analyze, emit_csv, emit_json, emit_svg_portrait, emit_sweep_grid, fmt_float, sweep_row, AnalysisReport, CurveRole,
    PortraitCurve, SweepRow,
};
use equicycle::{Error, Params};

#[derive(Parser)]
#[command(name = "equicycle", version, about = "Equilibria and limit cycles of z' = p z^5 zbar^4 + s z^6 zbar^5 - zbar^11")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Region, quadratic form, sign intervals, theorem conditions, origin and infinity.
    Classify(Common),
    /// Table of all equilibria with their eigenvalues and type.
    Equilibria(Common),
    /// Limit cycles surrounding the origin, with certificates.
    Cycles(Common),
    /// Region counts, conditions and cycle counts over a 1-D or 2-D grid.
    Sweep(SweepArgs),
    /// SVG phase portrait with equilibria, cycles, separatrices and the critical curve.
    Portrait(PortraitArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Real part of p.
    #[arg(long, allow_negative_numbers = true)]
    p1: Option<f64>,
    /// Imaginary part of p (nonzero).
    #[arg(long, allow_negative_numbers = true)]
    p2: Option<f64>,
    /// Real part of s.
    #[arg(long, allow_negative_numbers = true)]
    s1: Option<f64>,
    /// Imaginary part of s (|s2| > 1).
    #[arg(long, allow_negative_numbers = true)]
    s2: Option<f64>,
    /// key = value file with p1, p2, s1, s2, rel_tol, abs_tol, max_steps, initial_step;
    /// flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Relative tolerance [default: 1e-10].
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute tolerance [default: 1e-12].
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Step limit per integration [default: 1000000].
    #[arg(long)]
    max_steps: Option<usize>,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Output format (text where not given: classify and cycles; csv: equilibria and sweep).
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Parameter varied along the first axis.
    #[arg(long, value_enum, default_value_t = Axis::P1)]
    axis: Axis,
    #[arg(long, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, allow_negative_numbers = true)]
    to: f64,
    /// Number of grid nodes (at least 2, endpoints included).
    #[arg(long)]
    steps: usize,
    /// Optional second axis for a 2-D grid.
    #[arg(long, value_enum, requires_all = ["from2", "to2", "steps2"])]
    axis2: Option<Axis>,
    #[arg(long, allow_negative_numbers = true)]
    from2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to2: Option<f64>,
    #[arg(long)]
    steps2: Option<usize>,
    /// Skip the limit-cycle search at each node.
    #[arg(long)]
    skip_cycles: bool,
    /// Worker threads [default: number of logical processors].
    #[arg(long, env = "EQUICYCLE_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PortraitArgs {
    #[command(flatten)]
    common: Common,
    /// Rescaled time over which each separatrix is followed.
    #[arg(long, default_value_t = 5.0)]
    span: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
    Svg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    P1,
    P2,
    S1,
    S2,
}

enum CliError {
    Input(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(format!("numerical failure: {e}"))
        } else {
            CliError::Input(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Resolved {
    params: Params,
    cfg: IntegratorConfig,
}

impl Common {
    fn resolve(&self) -> CliResult<Resolved> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
                config::parse(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => Default::default(),
        };
        let pick = |flag: Option<f64>, key: &str| -> CliResult<f64> {
            flag.or_else(|| file.get(key).copied())
                .ok_or_else(|| CliError::Input(format!("missing parameter --{key}")))
        };
        let params = Params::new(
            pick(self.p1, "p1")?,
            pick(self.p2, "p2")?,
            pick(self.s1, "s1")?,
            pick(self.s2, "s2")?,
        )?;
        params.check_admissible()?;
        let defaults = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            rel_tol: self.rel_tol.or(file.get("rel_tol").copied()).unwrap_or(defaults.rel_tol),
            abs_tol: self.abs_tol.or(file.get("abs_tol").copied()).unwrap_or(defaults.abs_tol),
            max_steps: match (self.max_steps, file.get("max_steps")) {
                (Some(n), _) => n,
                (None, Some(&v)) if v >= 0.0 && v.fract() == 0.0 => v as usize,
                (None, Some(v)) => return Err(CliError::Input(format!("max_steps must be a whole number (got {v})"))),
                (None, None) => defaults.max_steps,
            },
            initial_step: file.get("initial_step").copied().unwrap_or(defaults.initial_step),
        };
        cfg.validate()?;
        Ok(Resolved { params, cfg })
    }

    fn format(&self, default: Format, allowed: &[Format], command: &str) -> CliResult<Format> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(CliError::Input(format!(
                "format {} is not available for {command}",
                f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
            )))
        }
    }

    fn emit(&self, text: &str) -> CliResult<()> {
        match &self.output {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn interval(s: Option<equicycle::abel::SignRegion>) -> String {
    match s {
        Some(s) => format!("({}, {})", fmt_float(s.sigma_minus), fmt_float(s.sigma_plus)),
        None => "n/a".to_string(),
    }
}

fn classify_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let opt = |v: Option<bool>| v.map_or("n/a".to_string(), |b| b.to_string());
    let _ = writeln!(s, "region: {:?}", r.region.count);
    let _ = writeln!(s, "equilibria: {}", r.region.count.value());
    let _ = writeln!(s, "Q: {}", fmt_float(r.region.q_value));
    let _ = writeln!(s, "sigma_A: {}", interval(r.sigma_a));
    let _ = writeln!(s, "sigma_B: {}", interval(r.sigma_b));
    let _ = writeln!(s, "cond_i: {}", opt(r.conditions.map(|c| c.cond_i)));
    let _ = writeln!(s, "cond_ii: {}", opt(r.conditions.map(|c| c.cond_ii)));
    let _ = writeln!(s, "origin: {:?}", r.region.origin_kind);
    let _ = writeln!(s, "infinity: {:?}", r.region.infinity);
    s
}

fn cycles_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "cycles: {}", r.cycles.len());
    for (i, c) in r.cycles.iter().enumerate() {
        let _ = writeln!(
            s,
            "cycle {}: x* = {}, multiplier = {}, residual = {:.1e}, {}, {}, enclosed = {} (index sum {})",
            i + 1,
            fmt_float(c.abel_fixed_point),
            fmt_float(c.multiplier),
            c.residual,
            if c.stable { "stable" } else { "unstable" },
            if c.hyperbolic { "hyperbolic" } else { "multiplicity suspect" },
            c.enclosed_count,
            c.enclosed_index_sum
        );
    }
    s
}

fn cmd_classify(c: &Common) -> CliResult<()> {
    let fmt = c.format(Format::Text, &[Format::Text, Format::Json], "classify")?;
    let Resolved { params, cfg } = c.resolve()?;
    let report = analyze(&params, &cfg, false)?;
    c.emit(&match fmt {
        Format::Json => report.to_json(),
        _ => classify_text(&report),
    })
}

fn cmd_equilibria(c: &Common) -> CliResult<()> {
    let fmt = c.format(Format::Csv, &[Format::Csv, Format::Json], "equilibria")?;
    let Resolved { params, cfg } = c.resolve()?;
    let report = analyze(&params, &cfg, false)?;
    c.emit(&match fmt {
        Format::Json => emit_json(&report.equilibria),
        _ => emit_csv(&report),
    })
}

fn cmd_cycles(c: &Common) -> CliResult<()> {
    let fmt = c.format(Format::Text, &[Format::Text, Format::Csv, Format::Json], "cycles")?;
    let Resolved { params, cfg } = c.resolve()?;
    let report = analyze(&params, &cfg, true)?;
    c.emit(&match fmt {
        Format::Json => report.to_json(),
        Format::Csv => emit_csv(&report),
        _ => cycles_text(&report),
    })
}

fn grid(from: f64, to: f64, steps: usize) -> CliResult<Vec<f64>> {
    if steps < 2 {
        return Err(CliError::Input("sweep needs at least 2 steps".into()));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(CliError::Input("sweep bounds must be finite".into()));
    }
    Ok((0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn with_axis(p: Params, axis: Axis, v: f64) -> Params {
    let mut p = p;
    match axis {
        Axis::P1 => p.p1 = v,
        Axis::P2 => p.p2 = v,
        Axis::S1 => p.s1 = v,
        Axis::S2 => p.s2 = v,
    }
    p
}

/// Base parameters for a sweep: the swept axes may be omitted.
fn sweep_base(a: &SweepArgs) -> CliResult<Resolved> {
    let mut common = a.common.clone();
    for axis in std::iter::once(a.axis).chain(a.axis2) {
        // any admissible placeholder; every node overwrites it
        let slot = match axis {
            Axis::P1 => &mut common.p1,
            Axis::P2 => &mut common.p2,
            Axis::S1 => &mut common.s1,
            Axis::S2 => &mut common.s2,
        };
        slot.get_or_insert(match axis {
            Axis::P2 => -1.0,
            Axis::S2 => 2.0,
            _ => 0.0,
        });
    }
    common.resolve()
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    let fmt = a.common.format(Format::Csv, &[Format::Csv, Format::Json], "sweep")?;
    let Resolved { params, cfg } = sweep_base(a)?;
    let first = grid(a.from, a.to, a.steps)?;
    let second = match (a.axis2, a.from2, a.to2, a.steps2) {
        (Some(axis), Some(f), Some(t), Some(n)) => {
            if axis == a.axis {
                return Err(CliError::Input("the two sweep axes must differ".into()));
            }
            Some((axis, grid(f, t, n)?))
        }
        _ => None,
    };
    let mut nodes = Vec::new();
    for &u in &first {
        let p = with_axis(params, a.axis, u);
        match &second {
            Some((axis, vs)) => nodes.extend(vs.iter().map(|&v| with_axis(p, *axis, v))),
            None => nodes.push(p),
        }
    }
    for p in &nodes {
        p.check_admissible()
            .map_err(|e| CliError::Input(format!("grid node ({}, {}, {}, {}): {e}", p.p1, p.p2, p.s1, p.s2)))?;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = a.jobs {
        if j == 0 {
            return Err(CliError::Input("--jobs must be positive".into()));
        }
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        nodes
            .par_iter()
            .map(|p| sweep_row(p, &cfg, !a.skip_cycles))
            .collect::<Result<_, _>>()
    })?;
    a.common.emit(&match fmt {
        Format::Json => emit_json(&rows),
        _ => emit_sweep_grid(&rows),
    })
}

fn cmd_portrait(a: &PortraitArgs) -> CliResult<()> {
    a.common.format(Format::Svg, &[Format::Svg], "portrait")?;
    if !(a.span.is_finite() && a.span > 0.0) {
        return Err(CliError::Input("--span must be positive".into()));
    }
    let Resolved { params, cfg } = a.common.resolve()?;
    let report = analyze(&params, &cfg, true)?;
    let curves: Vec<PortraitCurve> = separatrix_curves(&params, &report.equilibria, a.span, &cfg)?
        .into_iter()
        .map(|points| PortraitCurve { role: CurveRole::Separatrix, points })
        .collect();
    a.common.emit(&emit_svg_portrait(&report, &curves))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify(c) => cmd_classify(c),
        Command::Equilibria(c) => cmd_equilibria(c),
        Command::Cycles(c) => cmd_cycles(c),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Portrait(a) => cmd_portrait(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
