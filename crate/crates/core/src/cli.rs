//! Command-line front end.
//!
//! Four subcommands share one flag set: `bounds` evaluates the closed-form
//! bounds, `simulate` runs a Monte Carlo scenario, `oracle` evaluates the exact
//! binomial probabilities, `sweep` tabulates bounds over a grid of amplitudes.
//! Values come from flags, then from an optional `key = value` config file,
//! then from the ideal-case defaults for the chosen `α` and `L`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 internal failure. Nothing is
//! written to stdout unless the command succeeds.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::adversaries::{
    optimal_repudiation_marginal, ActiveResponsePolicy, PhysicalRepudiationStrategy,
    RepudiationMarginals,
};
use crate::bounds::{check_constraints, compute_bounds, default_params_unchecked, sweep_alpha, BoundsReport, SweepPoint};
use crate::error::{QdsError, Result};
use crate::montecarlo::{
    exact_forge_passive, exact_honest_abort, exact_honest_abort_either, exact_split_decision,
    run_experiment_with_workers, Estimate, ExperimentReport, Scenario, FORGE_ORACLE_MAX_LENGTH,
    HONEST_ORACLE_MAX_LENGTH,
};
use crate::optics::ComplexAmplitude;
use crate::protocol::{DerivedRates, ProtocolParams};

pub const DEFAULT_ALPHA: f64 = 0.2;
pub const DEFAULT_LENGTH: usize = 1_000_000;
pub const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Debug, Parser)]
#[command(name = "qds", version, about = "Coherent-state quantum digital signature simulator and bound calculator")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Closed-form correctness, repudiation and forging bounds.
    Bounds(Options),
    /// Monte Carlo estimate for one scenario.
    Simulate(Options),
    /// Exact binomial probabilities for small signature lengths.
    Oracle(Options),
    /// Bounds over an evenly spaced grid of amplitudes with default thresholds.
    Sweep(Options),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Bounds,
    Simulate,
    Oracle,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Honest,
    RepudiateAbstract,
    RepudiatePhysical,
    ForgePassive,
    ForgeActive,
}

#[derive(Debug, Clone, Default, Args)]
struct Options {
    /// Coherent amplitude α
    #[arg(long)]
    alpha: Option<f64>,
    /// Signature length L
    #[arg(long)]
    length: Option<usize>,
    /// Authentication threshold s_a
    #[arg(long = "s-a")]
    s_a: Option<f64>,
    /// Verification threshold s_v
    #[arg(long = "s-v")]
    s_v: Option<f64>,
    /// Unambiguous-count tolerance δ
    #[arg(long)]
    delta: Option<f64>,
    /// Null-port abort fraction r
    #[arg(long = "r")]
    r: Option<f64>,
    /// Active-forging slack ε
    #[arg(long)]
    epsilon: Option<f64>,
    /// Number of Monte Carlo trials
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    scenario: Option<ScenarioKind>,
    /// Response amplitude of an active forger, in units of α/√2
    #[arg(long)]
    scale: Option<f64>,
    /// Active forger steers the response toward his guess
    #[arg(long = "align-to-guess")]
    align_to_guess: bool,
    /// Per-element mismatch rate for abstract repudiation (default: optimal)
    #[arg(long = "p-mismatch")]
    p_mismatch: Option<f64>,
    /// Real amplitude sent into Bob's multiport input (physical repudiation)
    #[arg(long = "amp-bob", allow_negative_numbers = true)]
    amp_bob: Option<f64>,
    /// Real amplitude sent into Charlie's multiport input (physical repudiation)
    #[arg(long = "amp-charlie", allow_negative_numbers = true)]
    amp_charlie: Option<f64>,
    #[arg(long = "alpha-min")]
    alpha_min: Option<f64>,
    #[arg(long = "alpha-max")]
    alpha_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Worker threads for simulate; does not change results
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Flat `key = value` file using the flag names as keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run even if the security constraints are violated
    #[arg(long = "no-constraint-check")]
    no_constraint_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub steps: usize,
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ProtocolParams,
    pub scenario: Option<Scenario>,
    pub n_trials: u64,
    pub seed: u64,
    pub format: Format,
    pub workers: usize,
    pub enforce_constraints: bool,
    pub sweep: SweepRange,
}

const CONFIG_KEYS: &[&str] = &[
    "alpha", "length", "s-a", "s-v", "delta", "r", "epsilon", "trials", "seed", "scenario", "scale",
    "align-to-guess", "p-mismatch", "amp-bob", "amp-charlie", "alpha-min", "alpha-max", "steps",
    "workers", "format", "no-constraint-check",
];

/// Parses `key = value` lines; `#` starts a comment. Underscores in keys are
/// accepted in place of hyphens.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>> {
    let mut out = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            QdsError::param("config", format!("line {}: expected `key = value`, got `{raw}`", n + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(QdsError::param("config", format!("line {}: unknown key `{key}`", n + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

struct Resolver {
    file: HashMap<String, String>,
}

impl Resolver {
    fn load(path: Option<&Path>) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    QdsError::param("config", format!("cannot read {}: {e}", p.display()))
                })?;
                parse_config(&text)?
            }
            None => HashMap::new(),
        };
        Ok(Resolver { file })
    }

    fn parsed<T: FromStr>(&self, flag: Option<T>, key: &'static str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| QdsError::param(key, format!("cannot parse `{v}` from config"))),
        }
    }

    fn enumerated<T: ValueEnum>(&self, flag: Option<T>, key: &'static str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => T::from_str(v, true)
                .map(Some)
                .map_err(|_| QdsError::param(key, format!("unknown value `{v}` in config"))),
        }
    }

    fn switch(&self, flag: bool, key: &'static str) -> Result<bool> {
        Ok(flag || self.parsed::<bool>(None, key)?.unwrap_or(false))
    }
}

fn resolve(command: Command, opts: Options) -> Result<RunConfig> {
    let cfg = Resolver::load(opts.config.as_deref())?;
    let alpha = cfg.parsed(opts.alpha, "alpha")?.unwrap_or(DEFAULT_ALPHA);
    let length = cfg.parsed(opts.length, "length")?.unwrap_or(DEFAULT_LENGTH);
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(QdsError::param("alpha", format!("must be positive and finite, got {alpha}")));
    }
    let defaults = default_params_unchecked(alpha, length);
    let params = ProtocolParams {
        alpha,
        length,
        s_a: cfg.parsed(opts.s_a, "s-a")?.unwrap_or(defaults.s_a),
        s_v: cfg.parsed(opts.s_v, "s-v")?.unwrap_or(defaults.s_v),
        delta: cfg.parsed(opts.delta, "delta")?.unwrap_or(defaults.delta),
        r: cfg.parsed(opts.r, "r")?.unwrap_or(defaults.r),
        epsilon: cfg.parsed(opts.epsilon, "epsilon")?.unwrap_or(defaults.epsilon),
    };

    let kind = cfg.enumerated(opts.scenario, "scenario")?;
    let scenario = match (command, kind) {
        (Command::Simulate, None) => Some(Scenario::Honest),
        (_, None) => None,
        (_, Some(kind)) => Some(build_scenario(kind, &params, &opts, &cfg)?),
    };

    let sweep = SweepRange {
        alpha_min: cfg.parsed(opts.alpha_min, "alpha-min")?.unwrap_or(0.05),
        alpha_max: cfg.parsed(opts.alpha_max, "alpha-max")?.unwrap_or(1.0),
        steps: cfg.parsed(opts.steps, "steps")?.unwrap_or(20),
    };

    Ok(RunConfig {
        command,
        params,
        scenario,
        n_trials: cfg.parsed(opts.trials, "trials")?.unwrap_or(DEFAULT_TRIALS),
        seed: cfg.parsed(opts.seed, "seed")?.unwrap_or(0),
        format: cfg.enumerated(opts.format, "format")?.unwrap_or(Format::Json),
        workers: cfg.parsed(opts.workers, "workers")?.unwrap_or(0),
        enforce_constraints: !cfg.switch(opts.no_constraint_check, "no-constraint-check")?,
        sweep,
    })
}

fn build_scenario(kind: ScenarioKind, params: &ProtocolParams, opts: &Options, cfg: &Resolver) -> Result<Scenario> {
    Ok(match kind {
        ScenarioKind::Honest => Scenario::Honest,
        ScenarioKind::ForgePassive => Scenario::ForgePassive,
        ScenarioKind::RepudiateAbstract => {
            let p = cfg
                .parsed(opts.p_mismatch, "p-mismatch")?
                .unwrap_or_else(|| optimal_repudiation_marginal(params));
            Scenario::RepudiateAbstract(RepudiationMarginals::with_mismatch(params, p)?)
        }
        ScenarioKind::RepudiatePhysical => {
            let b = cfg.parsed(opts.amp_bob, "amp-bob")?.unwrap_or(params.alpha);
            let c = cfg.parsed(opts.amp_charlie, "amp-charlie")?.unwrap_or(params.alpha);
            Scenario::RepudiatePhysical(PhysicalRepudiationStrategy {
                amp_to_bob: ComplexAmplitude::new(b, 0.0)?,
                amp_to_charlie: ComplexAmplitude::new(c, 0.0)?,
            })
        }
        ScenarioKind::ForgeActive => {
            let scale = cfg.parsed(opts.scale, "scale")?.unwrap_or(1.0);
            let align = cfg.switch(opts.align_to_guess, "align-to-guess")?;
            Scenario::ForgeActive(ActiveResponsePolicy::new(scale, align)?)
        }
    })
}

fn check(config: &RunConfig) -> Result<()> {
    config.params.validate()?;
    if config.enforce_constraints {
        let report = check_constraints(&config.params);
        if !report.satisfied() {
            return Err(QdsError::ConstraintViolation(report.violations().join("; ")));
        }
    }
    Ok(())
}

/// Rounds to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn csv_num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        format!("{}", sig6(x))
    } else {
        format!("{x:.5e}")
    }
}

fn num(x: f64) -> Value {
    json!(sig6(x))
}

fn params_json(p: &ProtocolParams) -> Value {
    // emitted exactly so that results can be regenerated from the output
    json!({
        "alpha": p.alpha,
        "length": p.length,
        "s_a": p.s_a,
        "s_v": p.s_v,
        "delta": p.delta,
        "r": p.r,
        "epsilon": p.epsilon,
    })
}

fn rates_json(r: &DerivedRates) -> Value {
    json!({
        "p_usd": num(r.p_usd),
        "p_min": num(r.p_min),
        "p_min_prime": num(r.p_min_prime),
    })
}

fn bounds_json(b: &BoundsReport) -> Value {
    json!({
        "honest_abort": num(b.log10_honest_abort_ub),
        "repudiation": num(b.log10_repudiation_ub),
        "forge_passive": num(b.log10_forge_passive_ub),
        "forge_active": num(b.log10_forge_active_ub),
    })
}

fn constraints_json(b: &BoundsReport) -> Value {
    let c = &b.constraints;
    json!({
        "sv_gt_sa": c.sv_gt_sa,
        "forge_margin": num(c.forge_margin),
        "delta_valid": c.delta_valid,
        "satisfied": c.satisfied(),
    })
}

/// A probability as `{rate}` plus `log10` when it is below 10⁻⁶.
fn probability_json(p: f64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("rate".into(), num(p));
    if p > 0.0 && p < 1e-6 {
        m.insert("log10".into(), num(p.log10()));
    }
    m
}

fn estimate_json(e: &Estimate) -> Value {
    let mut m = Map::new();
    m.insert("successes".into(), json!(e.successes));
    m.insert("trials".into(), json!(e.trials));
    m.extend(probability_json(e.rate));
    m.insert("ci_low".into(), num(e.ci_low));
    m.insert("ci_high".into(), num(e.ci_high));
    Value::Object(m)
}

fn scenario_json(s: &Scenario) -> Value {
    let mut v = json!({ "name": s.name() });
    match s {
        Scenario::RepudiateAbstract(m) => {
            v["p_match"] = json!(m.p_match);
            v["p_mismatch"] = json!(m.p_mismatch);
            v["p_ambiguous"] = json!(m.p_ambiguous);
        }
        Scenario::RepudiatePhysical(st) => {
            v["amp_bob"] = json!([st.amp_to_bob.re(), st.amp_to_bob.im()]);
            v["amp_charlie"] = json!([st.amp_to_charlie.re(), st.amp_to_charlie.im()]);
        }
        Scenario::ForgeActive(p) => {
            v["scale"] = json!(p.scale);
            v["align_to_guess"] = json!(p.align_to_guess);
        }
        Scenario::Honest | Scenario::ForgePassive => {}
    }
    v
}

fn pretty(v: &Value) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| QdsError::Runtime(format!("cannot serialise output: {e}")))
}

const BOUNDS_CSV_HEADER: &str = "alpha,length,s_a,s_v,delta,r,epsilon,p_usd,p_min,p_min_prime,log10_rep,log10_forge_passive,log10_forge_active,log10_honest_abort,forge_margin,constraints_ok";
pub const SWEEP_CSV_HEADER: &str = "alpha,p_usd,p_min,p_min_prime,log10_rep,log10_forge_passive,log10_forge_active,log10_honest_abort,constraints_ok";

/// Output of one command, ready to be rendered.
pub enum Payload<'a> {
    Bounds {
        params: &'a ProtocolParams,
        report: &'a BoundsReport,
    },
    Simulation {
        params: &'a ProtocolParams,
        scenario: &'a Scenario,
        report: &'a BoundsReport,
        experiment: &'a ExperimentReport,
    },
    Oracle {
        params: &'a ProtocolParams,
        report: &'a BoundsReport,
        values: &'a [(&'static str, f64)],
    },
    Sweep {
        range: SweepRange,
        length: usize,
        points: &'a [SweepPoint],
    },
}

pub fn render_output(payload: &Payload<'_>, format: Format) -> Result<String> {
    match format {
        Format::Json => pretty(&render_json(payload)),
        Format::Csv => Ok(render_csv(payload)),
    }
}

fn render_json(payload: &Payload<'_>) -> Value {
    match payload {
        Payload::Bounds { params, report } => json!({
            "parameters": params_json(params),
            "derived_rates": rates_json(&report.rates),
            "bounds_log10": bounds_json(report),
            "constraints": constraints_json(report),
        }),
        Payload::Simulation {
            params,
            scenario,
            report,
            experiment,
        } => {
            let mut parameters = params_json(params);
            parameters["scenario"] = scenario_json(scenario);
            parameters["trials"] = json!(experiment.counts.trials);
            parameters["seed"] = json!(experiment.seed);
            let mut estimates = Map::new();
            for (name, e) in experiment.estimates() {
                estimates.insert(name.into(), estimate_json(e));
            }
            let f = &experiment.fractions;
            estimates.insert(
                "element_fractions".into(),
                json!({
                    "bob_unambiguous": num(f.bob_unambiguous),
                    "charlie_unambiguous": num(f.charlie_unambiguous),
                    "bob_mismatch": num(f.bob_mismatch),
                    "charlie_mismatch": num(f.charlie_mismatch),
                    "bob_null_click": num(f.bob_null_click),
                    "charlie_null_click": num(f.charlie_null_click),
                    "guess_error": num(f.guess_error),
                }),
            );
            estimates.insert("counts".into(), json!(experiment.counts));
            json!({
                "parameters": parameters,
                "derived_rates": rates_json(&report.rates),
                "bounds_log10": bounds_json(report),
                "constraints": constraints_json(report),
                "estimates": estimates,
            })
        }
        Payload::Oracle { params, report, values } => {
            let mut oracle = Map::new();
            for (name, p) in values.iter() {
                oracle.insert((*name).into(), Value::Object(probability_json(*p)));
            }
            json!({
                "parameters": params_json(params),
                "derived_rates": rates_json(&report.rates),
                "bounds_log10": bounds_json(report),
                "constraints": constraints_json(report),
                "oracle": oracle,
            })
        }
        Payload::Sweep { range, length, points } => {
            let rows: Vec<Value> = points
                .iter()
                .map(|pt| {
                    json!({
                        "alpha": pt.alpha,
                        "derived_rates": rates_json(&pt.report.rates),
                        "bounds_log10": bounds_json(&pt.report),
                        "constraints": constraints_json(&pt.report),
                        "constraints_ok": pt.constraints_ok(),
                    })
                })
                .collect();
            json!({
                "parameters": {
                    "length": length,
                    "alpha_min": range.alpha_min,
                    "alpha_max": range.alpha_max,
                    "steps": range.steps,
                },
                "sweep": rows,
            })
        }
    }
}

fn render_csv(payload: &Payload<'_>) -> String {
    let mut out = String::new();
    match payload {
        Payload::Bounds { params: p, report: b } => {
            out.push_str(BOUNDS_CSV_HEADER);
            out.push('\n');
            let cells = [
                csv_num(p.alpha),
                p.length.to_string(),
                csv_num(p.s_a),
                csv_num(p.s_v),
                csv_num(p.delta),
                csv_num(p.r),
                csv_num(p.epsilon),
                csv_num(b.rates.p_usd),
                csv_num(b.rates.p_min),
                csv_num(b.rates.p_min_prime),
                csv_num(b.log10_repudiation_ub),
                csv_num(b.log10_forge_passive_ub),
                csv_num(b.log10_forge_active_ub),
                csv_num(b.log10_honest_abort_ub),
                csv_num(b.constraints.forge_margin),
                b.constraints.satisfied().to_string(),
            ];
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Payload::Simulation { experiment, .. } => {
            out.push_str("event,successes,trials,rate,ci_low,ci_high,log10_rate\n");
            for (name, e) in experiment.estimates() {
                let log10 = if e.rate > 0.0 && e.rate < 1e-6 {
                    csv_num(e.rate.log10())
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "{name},{},{},{},{},{},{log10}",
                    e.successes,
                    e.trials,
                    csv_num(e.rate),
                    csv_num(e.ci_low),
                    csv_num(e.ci_high)
                );
            }
            let f = &experiment.fractions;
            for (name, v) in [
                ("bob_unambiguous_fraction", f.bob_unambiguous),
                ("charlie_unambiguous_fraction", f.charlie_unambiguous),
                ("bob_mismatch_fraction", f.bob_mismatch),
                ("charlie_mismatch_fraction", f.charlie_mismatch),
                ("bob_null_click_fraction", f.bob_null_click),
                ("charlie_null_click_fraction", f.charlie_null_click),
                ("guess_error_fraction", f.guess_error),
            ] {
                let _ = writeln!(out, "{name},,,{},,,", csv_num(v));
            }
        }
        Payload::Oracle { values, .. } => {
            out.push_str("quantity,rate,log10\n");
            for (name, p) in values.iter() {
                let log10 = if *p > 0.0 { csv_num(p.log10()) } else { String::new() };
                let _ = writeln!(out, "{name},{},{log10}", csv_num(*p));
            }
        }
        Payload::Sweep { points, .. } => {
            out.push_str(SWEEP_CSV_HEADER);
            out.push('\n');
            for pt in points.iter() {
                let b = &pt.report;
                let cells = [
                    csv_num(pt.alpha),
                    csv_num(b.rates.p_usd),
                    csv_num(b.rates.p_min),
                    csv_num(b.rates.p_min_prime),
                    csv_num(b.log10_repudiation_ub),
                    csv_num(b.log10_forge_passive_ub),
                    csv_num(b.log10_forge_active_ub),
                    csv_num(b.log10_honest_abort_ub),
                    pt.constraints_ok().to_string(),
                ];
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
    }
    out
}

fn oracle_values(params: &ProtocolParams) -> Result<Vec<(&'static str, f64)>> {
    if params.length > HONEST_ORACLE_MAX_LENGTH {
        return Err(QdsError::OracleTooLarge {
            length: params.length,
            limit: HONEST_ORACLE_MAX_LENGTH,
        });
    }
    let mut values = vec![
        ("honest_abort_single", exact_honest_abort(params)?),
        ("honest_abort_either", exact_honest_abort_either(params)?),
        (
            "split_decision_optimal",
            exact_split_decision(params, optimal_repudiation_marginal(params))?,
        ),
    ];
    if params.length <= FORGE_ORACLE_MAX_LENGTH {
        values.push(("forge_passive", exact_forge_passive(params)?));
    }
    Ok(values)
}

/// Executes a resolved configuration and returns the rendered output.
pub fn execute(config: &RunConfig) -> Result<String> {
    match config.command {
        Command::Sweep => {
            let r = config.sweep;
            let points = sweep_alpha(r.alpha_min, r.alpha_max, r.steps, config.params.length)?;
            render_output(
                &Payload::Sweep {
                    range: r,
                    length: config.params.length,
                    points: &points,
                },
                config.format,
            )
        }
        Command::Bounds => {
            check(config)?;
            let report = compute_bounds(&config.params)?;
            render_output(
                &Payload::Bounds {
                    params: &config.params,
                    report: &report,
                },
                config.format,
            )
        }
        Command::Oracle => {
            check(config)?;
            let report = compute_bounds(&config.params)?;
            let values = oracle_values(&config.params)?;
            render_output(
                &Payload::Oracle {
                    params: &config.params,
                    report: &report,
                    values: &values,
                },
                config.format,
            )
        }
        Command::Simulate => {
            check(config)?;
            let scenario = config.scenario.unwrap_or(Scenario::Honest);
            let report = compute_bounds(&config.params)?;
            let experiment = run_experiment_with_workers(
                &scenario,
                &config.params,
                config.n_trials,
                config.seed,
                config.workers,
            )?;
            render_output(
                &Payload::Simulation {
                    params: &config.params,
                    scenario: &scenario,
                    report: &report,
                    experiment: &experiment,
                },
                config.format,
            )
        }
    }
}

/// Parses `args` (program name first) into a [`RunConfig`].
pub fn parse_args<I, T>(args: I) -> std::result::Result<RunConfig, CliFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(CliFailure::Clap)?;
    let (command, opts) = match cli.command {
        CommandArgs::Bounds(o) => (Command::Bounds, o),
        CommandArgs::Simulate(o) => (Command::Simulate, o),
        CommandArgs::Oracle(o) => (Command::Oracle, o),
        CommandArgs::Sweep(o) => (Command::Sweep, o),
    };
    resolve(command, opts).map_err(CliFailure::Qds)
}

#[derive(Debug)]
pub enum CliFailure {
    Clap(clap::Error),
    Qds(QdsError),
}

/// Runs the CLI and returns the process exit code.
pub fn parse_and_dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(args).and_then(|cfg| execute(&cfg).map_err(CliFailure::Qds));
    match result {
        Ok(text) => match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                2
            }
        },
        Err(CliFailure::Clap(e)) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                0
            } else {
                let _ = write!(stderr, "{e}");
                1
            }
        }
        Err(CliFailure::Qds(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_user_error() {
                1
            } else {
                2
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["qds"];
        full.extend_from_slice(args);
        let code = parse_and_dispatch(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn config_parsing() {
        let cfg = parse_config("# comment\nalpha = 0.3\ns_v=0.1  # trailing\n\nscenario = forge-passive\n").unwrap();
        assert_eq!(cfg["alpha"], "0.3");
        assert_eq!(cfg["s-v"], "0.1");
        assert_eq!(cfg["scenario"], "forge-passive");
        assert!(parse_config("alpha 0.3").is_err());
        assert!(parse_config("colour = red").is_err());
    }

    #[test]
    fn defaults_follow_alpha_and_length() {
        let cfg = parse_args(["qds", "bounds", "--alpha", "0.5", "--length", "500"]).unwrap();
        let d = crate::bounds::default_params(0.5, 500).unwrap();
        assert_eq!(cfg.params, d);
        assert_eq!(cfg.format, Format::Json);
        assert_eq!(cfg.scenario, None);
    }

    #[test]
    fn sig6_rounding() {
        assert_eq!(sig6(0.076_883_653_613), 0.076_883_7);
        assert_eq!(sig6(-5.806_741_354), -5.806_74);
        assert_eq!(sig6(0.0), 0.0);
        assert_eq!(csv_num(1.560_481e-6), "1.56048e-6");
        assert_eq!(csv_num(0.5), "0.5");
    }

    #[test]
    fn bad_flags_exit_one_without_stdout() {
        let (code, out, err) = run(&["bounds", "--alpha", "zero"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(!err.is_empty());

        let (code, out, _) = run(&["frobnicate"]);
        assert_eq!((code, out.is_empty()), (1, true));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simulate"));
    }

    #[test]
    fn oracle_rejects_long_signatures() {
        let (code, out, err) = run(&["oracle", "--alpha", "0.2", "--length", "1000000"]);
        assert_eq!(code, 1);
        assert!(out.is_empty());
        assert!(err.contains("oracle limit"), "{err}");
    }
}
