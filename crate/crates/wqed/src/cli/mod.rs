//! Command-line front end: `generate`, `manipulate`, `detect` and `check`.
//!
//! Exit codes: 0 success, 1 failed self-check or I/O error, 2 configuration
//! error, 3 convergence failure, 4 engine mismatch under `--check-oracle`.

pub mod check;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::WqedError;
use crate::model::{PhysicalParams, C64};
use crate::scenarios::{
    configure_threads, run_detection, run_generation, run_manipulation, time_unit, DetectionResult, Engine,
    GenerationResult, LabelledTrace, ManipulationResult, Scenario, ScenarioConfig, ENGINE_TOLERANCE,
};
use crate::two_ex::{default_t_end, ConcurrenceTrace, InitialStateN2, SectorEvolution, DEFAULT_GRID2_NODES};

use self::config::{format_complex, parse_complex, ConfigFile};
use self::output::{line_plot, num, trace_csv, Csv, OutDir, Series};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_CONVERGENCE: u8 = 3;
pub const EXIT_MISMATCH: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "wqed", version, about = "Two qubits on a waveguide driven by single photons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Concurrence created by one photon hitting qubits in the ground state.
    Generate(RunArgs),
    /// Concurrence under a second, counter-propagating photon delayed by Δ.
    Manipulate(RunArgs),
    /// Two-photon reflection statistics for qubits prepared in a superposition.
    Detect(RunArgs),
    /// Residual table of the internal consistency checks.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Analytic,
    Oracle,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Oracle => Engine::Oracle,
            EngineArg::Both => Engine::Both,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration; defaults are used for missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Nodes of the momentum grid.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Also run the oracle and exit with code 4 if the engines disagree.
    #[arg(long)]
    pub check_oracle: bool,
    /// Qubit superposition parameter (repeatable), e.g. 1, -0.5, 0.5+1i.
    #[arg(long = "xi", value_parser = parse_complex, allow_hyphen_values = true)]
    pub xi: Vec<C64>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Nodes of the momentum grid used by the t = 0 identity and drift checks.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Drop the bound-state term from the two-photon eigenstates (negative control).
    #[arg(long)]
    pub break_bound_term: bool,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

pub fn exit_code(e: &WqedError) -> u8 {
    match e {
        WqedError::InvalidParameter { .. }
        | WqedError::Precondition(_)
        | WqedError::Unsupported(_)
        | WqedError::InvalidDensityMatrix(_) => EXIT_CONFIG,
        WqedError::Coverage { .. }
        | WqedError::Convergence(_)
        | WqedError::Resolution { .. }
        | WqedError::StepFailure(_) => EXIT_CONVERGENCE,
    }
}

impl From<WqedError> for Failure {
    fn from(e: WqedError) -> Self {
        let code = exit_code(&e);
        let prefix = if code == EXIT_CONFIG { "config error" } else { "error" };
        Failure::new(code, format!("{prefix}: {e}"))
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(EXIT_FAILURE, format!("error: {}: {e}", path.display()))
}

/// Runs the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    configure_threads();
    let result = match &cli.command {
        Command::Generate(a) => run_scenario(Scenario::Generation, "generate", a),
        Command::Manipulate(a) => run_scenario(Scenario::Manipulation, "manipulate", a),
        Command::Detect(a) => run_scenario(Scenario::Detection, "detect", a),
        Command::Check(a) => run_check_command(a),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.message);
            f.code
        }
    }
}

fn load_file(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Failure::new(EXIT_CONFIG, format!("config error: cannot read {}: {e}", p.display())))?;
            Ok(ConfigFile::from_toml(&text)?)
        }
    }
}

/// Config file plus command-line overrides.
pub fn resolve_config(scenario: Scenario, args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut file = load_file(args.config.as_deref())?;
    if let Some(g) = args.grid {
        file.grid = Some(g);
    }
    if let Some(e) = args.engine {
        file.engine = Some(e.into());
    }
    if !args.xi.is_empty() {
        file.xi = Some(args.xi.iter().map(|z| format_complex(*z)).collect());
    }
    let mut c = file.resolve(scenario)?;
    if args.check_oracle && c.engine == Engine::Analytic {
        c.engine = Engine::Both;
    }
    if c.grid < 16 {
        return Err(Failure::new(EXIT_CONFIG, "config error: invalid parameter `grid`: need at least 16 nodes"));
    }
    Ok(c)
}

struct Report {
    outputs: OutDir,
    summary: serde_json::Value,
    deviation: Option<f64>,
}

fn run_scenario(scenario: Scenario, name: &str, args: &RunArgs) -> Result<(), Failure> {
    let started = Instant::now();
    let config = resolve_config(scenario, args)?;
    let mut outputs = OutDir::create(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let snapshot = ConfigFile::snapshot(&config);
    outputs
        .write("config.toml", &snapshot.to_toml())
        .map_err(|e| io_failure(&args.out, e))?;
    let report = match scenario {
        Scenario::Generation => {
            let r = run_generation(&config)?;
            write_generation(&config, &r, outputs)
        }
        Scenario::Manipulation => {
            let r = run_manipulation(&config)?;
            write_manipulation(&config, &r, outputs)
        }
        Scenario::Detection => {
            let r = run_detection(&config)?;
            write_detection(&config, &r, outputs)?
        }
    }
    .map_err(|e| io_failure(&args.out, e))?;
    let wall = started.elapsed().as_secs_f64();
    let unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let manifest = json!({
        "tool": "wqed",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "argv": std::env::args().collect::<Vec<_>>(),
        "config_file": "config.toml",
        "config": snapshot,
        "engines": {
            "analytic": format!("wqed {} causal sector evolution", env!("CARGO_PKG_VERSION")),
            "oracle": format!("wqed {} discretized modes, Chebyshev propagator", env!("CARGO_PKG_VERSION")),
            "used": config.engine,
        },
        "settings": {
            "grid_nodes": config.grid,
            "samples": config.samples,
            "threshold": config.threshold,
            "check_oracle": args.check_oracle,
            "engine_tolerance": ENGINE_TOLERANCE,
            "threads": rayon::current_num_threads(),
        },
        "started_unix": unix,
        "wall_clock_seconds": wall,
        "summary": report.summary,
        "files": report.outputs.files,
        "reproduce": format!("wqed {name} --config config.toml --out <dir>"),
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(report.outputs.dir.join("manifest.json"), text).map_err(|e| io_failure(&args.out, e))?;
    if args.check_oracle {
        if let Some(d) = report.deviation {
            if d > ENGINE_TOLERANCE {
                return Err(Failure::new(
                    EXIT_MISMATCH,
                    format!("error: analytic and oracle engines differ by {d:.3e} (> {ENGINE_TOLERANCE:.0e})"),
                ));
            }
        }
    }
    Ok(())
}

fn trace_file(k: usize) -> String {
    if k == 0 {
        "trace.csv".into()
    } else {
        format!("trace_{k}.csv")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn concurrence_series(label: String, t: &[f64], trace: &ConcurrenceTrace) -> Series {
    Series {
        label,
        points: t.iter().copied().zip(trace.concurrence.iter().copied()).collect(),
    }
}

fn argmax(trace: &ConcurrenceTrace) -> usize {
    trace
        .concurrence
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, c)| if *c > acc.1 { (i, *c) } else { acc })
        .0
}

/// Writes one trace file per series, numbered from `first`.
fn write_traces(
    out: &mut OutDir,
    unit: f64,
    traces: &[&LabelledTrace],
    first: usize,
) -> std::io::Result<(Vec<Vec<f64>>, Option<f64>)> {
    let mut axes = Vec::new();
    let mut deviation = None;
    for (k, t) in traces.iter().enumerate() {
        let tg = t.t_gamma(unit);
        out.write(&trace_file(first + k), &trace_csv(&tg, &t.trace).render())?;
        deviation = max_opt(deviation, t.deviation);
        axes.push(tg);
    }
    Ok((axes, deviation))
}

fn write_generation(c: &ScenarioConfig, r: &GenerationResult, mut out: OutDir) -> std::io::Result<Report> {
    let g = c.params.gamma;
    let mut summary = Csv::new(&[
        "series",
        "file",
        "mu",
        "mu_over_gamma",
        "peak_concurrence",
        "t_peak_gamma",
        "oracle_deviation",
        "oracle_norm_drift",
    ]);
    let mut series = Vec::new();
    let mut deviation = None;
    let mut peaks = Vec::new();
    for (k, (mu, t)) in r.traces.iter().enumerate() {
        let unit = time_unit(&c.params, *mu);
        let (axes, d) = write_traces(&mut out, unit, &[t], k)?;
        deviation = max_opt(deviation, d);
        let i = argmax(&t.trace);
        summary.push(vec![
            k.to_string(),
            trace_file(k),
            num(*mu),
            num(if g > 0.0 { mu / g } else { f64::NAN }),
            num(t.trace.peak()),
            num(axes[0].get(i).copied().unwrap_or(f64::NAN)),
            opt(t.deviation),
            opt(t.oracle.as_ref().map(|o| o.norm_drift)),
        ]);
        peaks.push(json!({"mu": mu, "peak_concurrence": t.trace.peak()}));
        series.push(concurrence_series(format!("μ/γ = {:.4}", mu / g.max(1e-300)), &axes[0], &t.trace));
    }
    out.write("summary.csv", &summary.render())?;
    out.write("plot.svg", &line_plot("Concurrence after one photon", "t γ", "C", &series))?;
    Ok(Report {
        outputs: out,
        summary: json!({"peaks": peaks, "oracle_deviation": deviation}),
        deviation,
    })
}

fn write_manipulation(c: &ScenarioConfig, r: &ManipulationResult, mut out: OutDir) -> std::io::Result<Report> {
    let unit = time_unit(&c.params, c.pulse.mu);
    let traces: Vec<&LabelledTrace> = r.rows.iter().map(|row| &row.trace).collect();
    let (axes, deviation) = write_traces(&mut out, unit, &traces, 0)?;
    let mut summary = Csv::new(&[
        "series",
        "file",
        "delta",
        "delta_gamma_over_vg",
        "peak_concurrence",
        "peak_count",
        "death_intervals",
        "first_death_t_gamma",
        "revival",
        "never_entangled",
        "oracle_deviation",
    ]);
    let mut rows_json = Vec::new();
    for (k, row) in r.rows.iter().enumerate() {
        let rep = &row.report;
        let first_death = rep.death_intervals.first().map(|d| (d.0 - row.trace.t_first) / unit);
        summary.push(vec![
            k.to_string(),
            trace_file(k),
            num(row.delta),
            num(row.delta * c.params.gamma / c.params.v_g),
            num(row.trace.trace.peak()),
            rep.peak_values.len().to_string(),
            rep.death_intervals.len().to_string(),
            opt(first_death),
            rep.revival.to_string(),
            rep.never_entangled.to_string(),
            opt(row.trace.deviation),
        ]);
        rows_json.push(json!({
            "delta": row.delta,
            "peak_values": rep.peak_values,
            "deaths": rep.death_intervals.len(),
            "revival": rep.revival,
        }));
    }
    // plot a handful of delays spread over the scan
    let n = r.rows.len();
    let pick: Vec<usize> = if n <= 6 { (0..n).collect() } else { (0..6).map(|i| i * (n - 1) / 5).collect() };
    let series: Vec<Series> = pick
        .iter()
        .map(|&k| {
            let row = &r.rows[k];
            concurrence_series(
                format!("Δγ/v = {:.3}", row.delta * c.params.gamma / c.params.v_g),
                &axes[k],
                &row.trace.trace,
            )
        })
        .collect();
    out.write("summary.csv", &summary.render())?;
    out.write("plot.svg", &line_plot("Concurrence with a delayed second photon", "t γ", "C", &series))?;
    Ok(Report {
        outputs: out,
        summary: json!({"rows": rows_json, "oracle_deviation": deviation}),
        deviation,
    })
}

fn write_detection(c: &ScenarioConfig, r: &DetectionResult, mut out: OutDir) -> Result<std::io::Result<Report>, Failure> {
    // qubit populations while the photon passes, for the first ξ of the grid
    let xi0 = c.xi_grid[0];
    let sectors = InitialStateN2::PhotonOnQubits { photon: c.pulse, xi: xi0 }.sectors(&c.params)?;
    let t_end = default_t_end(&c.params, &sectors);
    let ev = SectorEvolution::new(&c.params, &sectors, t_end);
    let times: Vec<f64> = (0..c.samples).map(|i| t_end * i as f64 / (c.samples - 1) as f64).collect();
    let pops = times.iter().map(|t| ev.populations(*t)).collect();
    let trace = ConcurrenceTrace::from_pops(times.clone(), pops);
    let unit = time_unit(&c.params, c.pulse.mu);
    let tg: Vec<f64> = times.iter().map(|t| t / unit).collect();
    Ok(write_detection_files(c, r, &mut out, &tg, &trace, xi0).map(|summary| Report {
        outputs: out,
        summary,
        deviation: r.deviation,
    }))
}

fn write_detection_files(
    c: &ScenarioConfig,
    r: &DetectionResult,
    out: &mut OutDir,
    tg: &[f64],
    trace: &ConcurrenceTrace,
    xi0: C64,
) -> std::io::Result<serde_json::Value> {
    out.write("trace.csv", &trace_csv(tg, trace).render())?;
    let mut summary = Csv::new(&["xi_re", "xi_im", "p_rr", "ratio", "bound", "residual", "concurrence"]);
    for row in &r.rows {
        summary.push(vec![
            num(row.xi.re),
            num(row.xi.im),
            num(row.p_rr),
            num(row.ratio),
            num(row.bound),
            num(row.residual()),
            num(row.concurrence),
        ]);
    }
    out.write("summary.csv", &summary.render())?;
    if !r.gamma_scan.is_empty() {
        let mut scan = Csv::new(&["gamma", "gamma_over_mu", "max_p_rr", "argmax_xi"]);
        for g in &r.gamma_scan {
            scan.push(vec![num(g.gamma), num(g.gamma / c.pulse.mu), num(g.max_p_rr), num(g.argmax_xi)]);
        }
        out.write("gamma_scan.csv", &scan.render())?;
    }
    if !r.oracle_rows.is_empty() {
        let mut o = Csv::new(&["xi_re", "xi_im", "p_rr_analytic", "p_rr_oracle", "abs_diff"]);
        for (xi, a, b) in &r.oracle_rows {
            o.push(vec![num(xi.re), num(xi.im), num(*a), num(*b), num((a - b).abs())]);
        }
        out.write("oracle.csv", &o.render())?;
    }
    let mut real: Vec<(f64, f64, f64)> = r
        .rows
        .iter()
        .filter(|x| x.xi.im == 0.0)
        .map(|x| (x.xi.re, x.ratio, 1.0 + x.bound))
        .collect();
    real.sort_by(|a, b| a.0.total_cmp(&b.0));
    let series = vec![
        Series {
            label: "P_RR(ξ)/P_RR(0)".into(),
            points: real.iter().map(|p| (p.0, p.1)).collect(),
        },
        Series {
            label: "1 + 2ξ/(1+ξ²)".into(),
            points: real.iter().map(|p| (p.0, p.2)).collect(),
        },
    ];
    out.write("plot.svg", &line_plot("Two-photon reflection ratio", "ξ", "ratio", &series))?;
    Ok(json!({
        "trace_xi": format_complex(xi0),
        "max_ratio_residual": r.rows.iter().map(|x| x.residual()).fold(0.0, f64::max),
        "best_gamma": r.best_gamma,
        "best_gamma_over_mu": r.best_gamma.map(|g| g / c.pulse.mu),
        "monotone_in_concurrence": r.monotone,
        "oracle_deviation": r.deviation,
    }))
}

fn run_check_command(args: &CheckArgs) -> Result<(), Failure> {
    let file = load_file(args.config.as_deref())?;
    let defaults = ScenarioConfig::generation_default().params;
    let params = PhysicalParams {
        omega_q: file.params.omega_q.unwrap_or(defaults.omega_q),
        gamma: file.params.gamma.unwrap_or(defaults.gamma),
        v_g: file.params.v_g.unwrap_or(defaults.v_g),
    };
    params.validate()?;
    if params.gamma == 0.0 {
        return Err(Failure::new(EXIT_CONFIG, "config error: invalid parameter `gamma`: check needs γ > 0"));
    }
    let grid = args.grid.or(file.grid).unwrap_or(DEFAULT_GRID2_NODES);
    if grid < 16 {
        return Err(Failure::new(EXIT_CONFIG, "config error: invalid parameter `grid`: need at least 16 nodes"));
    }
    let report = check::run_check(&params, grid, !args.break_bound_term)?;
    print!("{}", report.table());
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if report.passed() {
        println!("all checks passed");
        Ok(())
    } else if report.engine_mismatch_only() {
        Err(Failure::new(EXIT_MISMATCH, "error: engine comparison failed"))
    } else {
        let names: Vec<String> = report.failed().map(|r| r.name.clone()).collect();
        Err(Failure::new(EXIT_FAILURE, format!("error: failed checks: {}", names.join(", "))))
    }
}
