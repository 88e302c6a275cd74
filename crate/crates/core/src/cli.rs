//! Command-line front end: `capacity`, `lp solve|export`, `simulate`,
//! `sweep` and `audit`.
//!
//! A JSON [`RunConfig`] (`--config`) supplies defaults; flags override it.
//! Exit codes: 0 ok, 1 config error, 2 infeasible or refused, 3 internal
//! invariant violation.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{audit_line, failure_probability, wilson_interval, AuditError, AuditVerdict, EvePlacement};
use crate::capacity::{
    csk_single_hop, csm_single_hop, efficiency_table, scheme_rates, ChannelParams, KeygenScheme, ParamError,
    Randomness,
};
use crate::lp::{
    build_all_eves, build_extension, build_one_eve, build_single_hop_sk, build_single_hop_sm, build_v_eves_outer,
    export, solve, ExportFormat, LineNetwork, LpError, LpExtension, LpModel, RateSolution, SolveStatus,
};
use crate::sim::{run_keygen, run_line, LineMode, SimConfig, SimError};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "LINESEC_SEED";

/// Largest sweep grid accepted.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Refused(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<LpError> for CliError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Verification { .. } => CliError::Invariant(e.to_string()),
            LpError::PlacementLimit { .. } => CliError::Refused(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Refused(_) | SimError::NoRandomness { .. } => CliError::Refused(e.to_string()),
            SimError::Invariant(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        match e {
            AuditError::Sim(s) => s.into(),
            AuditError::NotLinear(_) => CliError::Invariant(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SingleHopSk,
    SingleHopSm,
    #[default]
    OneEve,
    AllEves,
    VEves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SimTarget {
    #[default]
    Keygen,
    Line,
}

/// Everything a command needs; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub network: LineNetwork,
    pub mode: LineMode,
    pub model: ModelKind,
    pub scheme: KeygenScheme,
    pub target: SimTarget,
    pub n: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub eps_pa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension: Option<LpExtension>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hop = ChannelParams {
            delta: 0.5,
            delta_e: 0.5,
        };
        Self {
            network: LineNetwork {
                hops: vec![hop],
                node_randomness: vec![Randomness::Limited(0.6)],
                eve_cardinality: 1,
            },
            mode: LineMode::OneEve,
            model: ModelKind::default(),
            scheme: KeygenScheme::MdsExpArq,
            target: SimTarget::default(),
            n: 100_000,
            trials: 1,
            seed: None,
            eps_pa: 0.05,
            extension: None,
            output: None,
            log: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.network.validate()?;
        if !(0.0..1.0).contains(&self.eps_pa) {
            return Err(CliError::Config(format!("eps_pa = {} outside [0, 1)", self.eps_pa)));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        Ok(())
    }

    fn first_hop(&self) -> (ChannelParams, Randomness) {
        (self.network.hops[0], self.network.node_randomness[0])
    }

    fn sim_config(&self, seed: u64, track: bool) -> SimConfig {
        SimConfig {
            seed,
            eps_pa: self.eps_pa,
            track_linear_maps: track,
            ..SimConfig::default()
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "linesec", version, about = "Secret key and message rates over erasure line networks")]
pub struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags overriding configuration keys.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// Receiver erasure probability on every hop.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Eavesdropper erasure probability on every hop.
    #[arg(long, global = true)]
    pub delta_e: Option<f64>,
    /// Number of identical hops.
    #[arg(long, global = true)]
    pub hops: Option<usize>,
    /// Source randomness D_0 (number or `unlimited`).
    #[arg(long, global = true)]
    pub source_randomness: Option<Randomness>,
    /// Relay randomness D_1.. (number or `unlimited`).
    #[arg(long, global = true)]
    pub relay_randomness: Option<Randomness>,
    /// Number of eavesdropped hops.
    #[arg(long = "V", global = true)]
    pub v: Option<usize>,
    /// Relaying mode for line simulations
    #[arg(long, global = true)]
    pub mode: Option<LineMode>,
    /// Key-generation scheme
    #[arg(long, global = true)]
    pub scheme: Option<KeygenScheme>,
    /// Channel slots per run
    #[arg(long, short = 'n', global = true)]
    pub slots: Option<u64>,
    /// Seeded runs for `audit`
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Base seed (defaults to $LINESEC_SEED, then 0)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Privacy-amplification margin per extraction chunk
    #[arg(long, global = true)]
    pub eps_pa: Option<f64>,
    /// Write results here instead of stdout
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed forms next to LP optima, or the scheme tables.
    Capacity {
        #[arg(long, value_enum, default_value_t = CapacityTable::Compare)]
        table: CapacityTable,
    },
    /// Build, solve or export the rate LPs.
    Lp {
        #[command(subcommand)]
        action: LpAction,
    },
    /// Monte-Carlo run of a key-generation scheme or of the line protocol.
    Simulate {
        #[arg(long, value_enum)]
        target: Option<SimTarget>,
        /// Audit each trial and embed the verdicts.
        #[arg(long)]
        audit: bool,
        /// Write the first trial's slot log as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// CSV over a grid of one or two parameters.
    Sweep {
        /// `name=start:stop:step`, name in d, relay_d, delta, delta_e, v.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        /// Add simulated MDS_EXP and MDS_EXP_ARQ rates (n slots per point).
        #[arg(long)]
        empirical: bool,
    },
    /// Fraction of seeded runs whose audit is not perfect.
    Audit {
        #[arg(long, value_enum)]
        target: Option<SimTarget>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapacityTable {
    Compare,
    Eff,
    Summary,
}

#[derive(Debug, Subcommand)]
pub enum LpAction {
    Solve {
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
    },
    Export {
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
        #[arg(long, default_value = "lp")]
        format: ExportFormat,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("linesec: {e}");
            e.exit_code()
        }
    }
}

/// Loads the config file, applies flag overrides and the seed default.
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| {
                CliError::Config(format!("{} line {} column {}: {e}", path.display(), e.line(), e.column()))
            })?
        }
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if let Some(n) = o.hops {
        if n == 0 {
            return Err(CliError::Config("--hops must be at least 1".into()));
        }
        let hop = cfg.network.hops[0];
        let source = cfg.network.node_randomness[0];
        let relay = cfg.network.node_randomness.get(1).copied().unwrap_or(Randomness::none());
        cfg.network.hops = vec![hop; n];
        cfg.network.node_randomness = std::iter::once(source).chain(std::iter::repeat(relay)).take(n).collect();
        cfg.network.eve_cardinality = cfg.network.eve_cardinality.min(n);
    }
    for h in cfg.network.hops.iter_mut() {
        if let Some(d) = o.delta {
            h.delta = d;
        }
        if let Some(d) = o.delta_e {
            h.delta_e = d;
        }
    }
    if let (Some(r), Some(first)) = (o.source_randomness, cfg.network.node_randomness.first_mut()) {
        *first = r;
    }
    if let Some(r) = o.relay_randomness {
        cfg.network.node_randomness.iter_mut().skip(1).for_each(|x| *x = r);
    }
    if let Some(v) = o.v {
        cfg.network.eve_cardinality = v;
    }
    if let Some(m) = o.mode {
        cfg.mode = m;
    }
    if let Some(s) = o.scheme {
        cfg.scheme = s;
    }
    if let Some(n) = o.slots {
        cfg.n = n;
    }
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(e) = o.eps_pa {
        cfg.eps_pa = e;
    }
    if let Some(p) = &o.output {
        cfg.output = Some(p.clone());
    }
    match &cli.command {
        Command::Lp {
            action: LpAction::Solve { model: Some(m) } | LpAction::Export { model: Some(m), .. },
        } => cfg.model = *m,
        Command::Simulate { target: Some(t), .. } | Command::Audit { target: Some(t) } => cfg.target = *t,
        _ => {}
    }
    if let Command::Simulate { log: Some(p), .. } = &cli.command {
        cfg.log = Some(p.clone());
    }
    cfg.seed = match o.seed.or(cfg.seed) {
        Some(s) => Some(s),
        None => match std::env::var(SEED_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
            ),
            Err(_) => Some(0),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = effective_config(cli)?;
    let text = if cli.dump_config {
        to_json(&cfg)?
    } else {
        match &cli.command {
            Command::Capacity { table } => cmd_capacity(&cfg, *table)?,
            Command::Lp { action } => match action {
                LpAction::Solve { .. } => cmd_lp_solve(&cfg)?,
                LpAction::Export { format, .. } => export(&build_model(&cfg)?, *format),
            },
            Command::Simulate { audit, .. } => cmd_simulate(&cfg, *audit)?,
            Command::Sweep { axes, empirical } => cmd_sweep(&cfg, axes, *empirical)?,
            Command::Audit { .. } => cmd_audit(&cfg)?,
        }
    };
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Invariant(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// 17 significant digits.
pub fn csv_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn build_model(cfg: &RunConfig) -> Result<LpModel, CliError> {
    let (hop, d) = cfg.first_hop();
    if let Some(ext) = &cfg.extension {
        return Ok(build_extension(&cfg.network, ext)?);
    }
    Ok(match cfg.model {
        ModelKind::SingleHopSk => build_single_hop_sk(&hop, d)?,
        ModelKind::SingleHopSm => build_single_hop_sm(&hop, d)?,
        ModelKind::OneEve => build_one_eve(&cfg.network)?,
        ModelKind::AllEves => build_all_eves(&cfg.network)?,
        ModelKind::VEves => build_v_eves_outer(&cfg.network)?,
    })
}

fn solve_or_refuse(model: &LpModel) -> Result<RateSolution, CliError> {
    let s = solve(model)?;
    match s.status {
        SolveStatus::Optimal => Ok(s),
        other => Err(CliError::Refused(format!("LP `{}` is {other:?}", model.name))),
    }
}

fn cmd_capacity(cfg: &RunConfig, table: CapacityTable) -> Result<String, CliError> {
    let (hop, d) = cfg.first_hop();
    let mut s = String::new();
    match table {
        CapacityTable::Compare => {
            s.push_str("quantity,formula,lp,abs_diff\n");
            let mut row = |name: &str, formula: f64, lp: f64| {
                let diff = if formula == lp { 0.0 } else { (formula - lp).abs() };
                let _ = writeln!(s, "{name},{},{},{}", csv_number(formula), csv_number(lp), csv_number(diff));
            };
            let sk = solve_or_refuse(&build_single_hop_sk(&hop, d)?)?.objective_value;
            row("c_sk", csk_single_hop(&hop, d.rate()), sk);
            let sm = solve_or_refuse(&build_single_hop_sm(&hop, d)?)?.objective_value;
            row("c_sm", csm_single_hop(&hop, d.rate()), sm);
            if cfg.network.len() > 1 {
                let one = solve_or_refuse(&build_one_eve(&cfg.network)?)?.objective_value;
                let unlimited = cfg.network.node_randomness.iter().all(Randomness::is_unlimited);
                let cut = if unlimited {
                    cfg.network
                        .hops
                        .iter()
                        .map(|h| csm_single_hop(h, f64::INFINITY))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    f64::NAN
                };
                row("one_eve", cut, one);
                let all = solve_or_refuse(&build_all_eves(&cfg.network)?)?.objective_value;
                row("all_eves", f64::NAN, all);
            }
        }
        CapacityTable::Eff => {
            s.push_str("scheme,keys_per_transmission,consumed_per_transmission\n");
            for r in efficiency_table(&hop) {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    r.scheme,
                    csv_number(r.keys_per_transmission),
                    csv_number(r.consumed_per_transmission)
                );
            }
        }
        CapacityTable::Summary => {
            s.push_str("scheme,key_rate,forwarded_rate,randomness_consumed,advisory\n");
            for scheme in KeygenScheme::ALL {
                let r = scheme_rates(scheme, &hop, d.rate());
                let _ = writeln!(
                    s,
                    "{scheme},{},{},{},{}",
                    csv_number(r.key_rate),
                    csv_number(r.forwarded_rate),
                    csv_number(r.randomness_consumed),
                    r.advisory.unwrap_or_default().replace(',', ";")
                );
            }
        }
    }
    Ok(s)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    model: &'a str,
    status: SolveStatus,
    objective_value: f64,
    values: std::collections::BTreeMap<&'a str, f64>,
}

fn cmd_lp_solve(cfg: &RunConfig) -> Result<String, CliError> {
    let model = build_model(cfg)?;
    let s = solve(&model)?;
    if s.status == SolveStatus::Infeasible {
        return Err(CliError::Refused(format!("LP `{}` is infeasible", model.name)));
    }
    let values = if s.is_optimal() {
        s.names.iter().map(String::as_str).zip(s.values.iter().copied()).collect()
    } else {
        Default::default()
    };
    to_json(&SolveOutput {
        model: &model.name,
        status: s.status,
        objective_value: s.objective_value,
        values,
    })
}

fn line_rates(cfg: &RunConfig) -> Result<RateSolution, CliError> {
    let model = match cfg.mode {
        LineMode::OneEve => build_one_eve(&cfg.network)?,
        LineMode::AllEves => build_all_eves(&cfg.network)?,
    };
    solve_or_refuse(&model)
}

#[derive(Serialize)]
struct TrialOutput<R: Serialize> {
    report: R,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdicts: Option<Vec<AuditVerdict>>,
}

fn cmd_simulate(cfg: &RunConfig, audit: bool) -> Result<String, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let track = audit || cfg.log.is_some();
    let mut trials = Vec::new();
    match cfg.target {
        SimTarget::Keygen => {
            let (hop, d) = cfg.first_hop();
            for t in 0..cfg.trials {
                let sc = cfg.sim_config(seed.wrapping_add(t as u64), track);
                let out = run_keygen(cfg.scheme, &hop, d, cfg.n, &sc)?;
                if t == 0 {
                    write_log(cfg, |w| out.log.write_json_lines(w))?;
                }
                let verdicts = if audit {
                    let p = EvePlacement::new(vec![1], 1)?;
                    Some(vec![crate::audit::audit_key(&sc.field()?, &out.log, &out.key, &p)?])
                } else {
                    None
                };
                trials.push(serde_json::to_value(TrialOutput {
                    report: out.report,
                    verdicts,
                }));
            }
        }
        SimTarget::Line => {
            let rates = line_rates(cfg)?;
            for t in 0..cfg.trials {
                let sc = cfg.sim_config(seed.wrapping_add(t as u64), track);
                let out = run_line(&cfg.network, cfg.mode, &rates, cfg.n, &sc)?;
                if t == 0 {
                    write_log(cfg, |w| {
                        for h in &out.hops {
                            h.log.write_json_lines(&mut *w)?;
                        }
                        Ok(())
                    })?;
                }
                let verdicts = if audit {
                    let placements = EvePlacement::required(cfg.mode, cfg.network.len());
                    Some(audit_line(&sc.field()?, &out, &placements)?)
                } else {
                    None
                };
                trials.push(serde_json::to_value(TrialOutput {
                    report: out.report,
                    verdicts,
                }));
            }
        }
    }
    let trials: Vec<serde_json::Value> = trials
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Invariant(e.to_string()))?;
    if trials.len() == 1 {
        to_json(&trials[0])
    } else {
        to_json(&trials)
    }
}

fn write_log(
    cfg: &RunConfig,
    f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    if let Some(path) = &cfg.log {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        f(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

const AXIS_NAMES: [&str; 5] = ["d", "relay_d", "delta", "delta_e", "v"];

/// Parses `name=start:stop:step`; start > stop gives an empty axis.
pub fn parse_axis(arg: &str) -> Result<Axis, CliError> {
    let bad = || CliError::Config(format!("axis `{arg}`: expected name=start:stop:step"));
    let (name, range) = arg.split_once('=').ok_or_else(bad)?;
    let name = name.trim().to_ascii_lowercase();
    if !AXIS_NAMES.contains(&name.as_str()) {
        return Err(CliError::Config(format!("axis `{name}`: expected one of {}", AXIS_NAMES.join(", "))));
    }
    let parts: Vec<f64> = range
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = if stop < start {
        0.0
    } else {
        ((stop - start) / step + 1e-9).floor() + 1.0
    };
    if count > MAX_GRID_POINTS as f64 {
        return Err(CliError::Refused(format!("axis `{name}` has {count} points")));
    }
    // values from integer steps avoid drift
    let values = (0..count as usize).map(|i| start + i as f64 * step).collect();
    Ok(Axis { name, values })
}

fn apply_axis(cfg: &mut RunConfig, name: &str, v: f64) -> Result<(), CliError> {
    let net = &mut cfg.network;
    match name {
        "d" => net.node_randomness[0] = Randomness::Limited(v),
        "relay_d" => net.node_randomness.iter_mut().skip(1).for_each(|r| *r = Randomness::Limited(v)),
        "delta" => net.hops.iter_mut().for_each(|h| h.delta = v),
        "delta_e" => net.hops.iter_mut().for_each(|h| h.delta_e = v),
        "v" => {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(CliError::Config(format!("V = {v} is not a positive integer")));
            }
            net.eve_cardinality = v as usize;
        }
        _ => unreachable!("axis names are validated"),
    }
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, args: &[String], empirical: bool) -> Result<String, CliError> {
    if args.is_empty() || args.len() > 2 {
        return Err(CliError::Config("sweep takes one or two axes".into()));
    }
    let axes: Vec<Axis> = args.iter().map(|s| parse_axis(s)).collect::<Result<_, _>>()?;
    let points: usize = axes.iter().map(|a| a.values.len()).product();
    if points > MAX_GRID_POINTS {
        return Err(CliError::Refused(format!("grid of {points} points exceeds {MAX_GRID_POINTS}")));
    }
    let mut columns: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
    columns.extend(
        [
            "csk", "csm", "lp_sk", "lp_sm", "arq_key", "arq_fwd", "mds_exp_key", "mds_exp_fwd", "mds_exp_arq_key",
            "mds_exp_arq_fwd", "one_eve", "all_eves", "v_eves",
        ]
        .map(String::from),
    );
    if empirical {
        columns.extend(["sim_mds_exp_key", "sim_mds_exp_fwd", "sim_mds_exp_arq_key", "sim_mds_exp_arq_fwd"].map(String::from));
    }
    let mut s = columns.join(",");
    s.push('\n');
    let outer: Vec<f64> = axes.first().map(|a| a.values.clone()).unwrap_or_default();
    let inner: Vec<Option<f64>> = match axes.get(1) {
        Some(a) => a.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    for &x in &outer {
        for &y in &inner {
            let mut point = cfg.clone();
            apply_axis(&mut point, &axes[0].name, x)?;
            let mut coords = vec![x];
            if let Some(y) = y {
                apply_axis(&mut point, &axes[1].name, y)?;
                coords.push(y);
            }
            point.validate()?;
            let values = sweep_point(&point, empirical)?;
            let line: Vec<String> = coords.iter().chain(&values).map(|&v| csv_number(v)).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
    }
    Ok(s)
}

fn optimum(model: LpModel) -> Result<f64, CliError> {
    let sol = solve(&model)?;
    Ok(if sol.is_optimal() { sol.objective_value } else { f64::NAN })
}

fn sweep_point(cfg: &RunConfig, empirical: bool) -> Result<Vec<f64>, CliError> {
    let (hop, d) = cfg.first_hop();
    let mut v = vec![
        csk_single_hop(&hop, d.rate()),
        csm_single_hop(&hop, d.rate()),
        optimum(build_single_hop_sk(&hop, d)?)?,
        optimum(build_single_hop_sm(&hop, d)?)?,
    ];
    for scheme in [KeygenScheme::Arq, KeygenScheme::MdsExp, KeygenScheme::MdsExpArq] {
        let r = scheme_rates(scheme, &hop, d.rate());
        v.push(r.key_rate);
        v.push(r.forwarded_rate);
    }
    v.push(optimum(build_one_eve(&cfg.network)?)?);
    v.push(optimum(build_all_eves(&cfg.network)?)?);
    v.push(optimum(build_v_eves_outer(&cfg.network)?)?);
    if empirical {
        for scheme in [KeygenScheme::MdsExp, KeygenScheme::MdsExpArq] {
            let sc = SimConfig {
                payload_symbols: 1,
                ..cfg.sim_config(cfg.seed.unwrap_or(0), false)
            };
            match run_keygen(scheme, &hop, d, cfg.n, &sc) {
                Ok(out) => {
                    v.push(out.report.key_rate);
                    v.push(out.report.forwarded_rate);
                }
                Err(SimError::NoRandomness { .. }) => v.extend([0.0, 0.0]),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(v)
}

#[derive(Serialize)]
struct AuditOutput {
    target: SimTarget,
    eps_pa: f64,
    n: u64,
    seed: u64,
    trials: usize,
    failures: usize,
    estimate: f64,
    lower: f64,
    upper: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failing: Vec<(u64, Vec<AuditVerdict>)>,
}

fn cmd_audit(cfg: &RunConfig) -> Result<String, CliError> {
    let seed = cfg.seed.unwrap_or(0);
    let (hop, d) = cfg.first_hop();
    match cfg.target {
        SimTarget::Keygen => {
            let est = failure_probability(cfg.scheme, &hop, d, cfg.n, cfg.eps_pa, cfg.trials, seed)?;
            to_json(&AuditOutput {
                target: cfg.target,
                eps_pa: cfg.eps_pa,
                n: cfg.n,
                seed,
                trials: est.trials,
                failures: est.failures,
                estimate: est.estimate,
                lower: est.lower,
                upper: est.upper,
                failing: Vec::new(),
            })
        }
        SimTarget::Line => {
            let rates = line_rates(cfg)?;
            let placements = EvePlacement::required(cfg.mode, cfg.network.len());
            let mut failing = Vec::new();
            for t in 0..cfg.trials {
                let s = seed.wrapping_add(t as u64);
                let sc = cfg.sim_config(s, true);
                let out = run_line(&cfg.network, cfg.mode, &rates, cfg.n, &sc)?;
                let verdicts = audit_line(&sc.field()?, &out, &placements)?;
                if verdicts.iter().any(|v| !v.agreement_ok) {
                    return Err(CliError::Invariant(format!("seed {s}: sender and receiver disagree")));
                }
                if !verdicts.iter().all(AuditVerdict::is_perfect) {
                    failing.push((s, verdicts));
                }
            }
            let est = wilson_interval(failing.len(), cfg.trials);
            to_json(&AuditOutput {
                target: cfg.target,
                eps_pa: cfg.eps_pa,
                n: cfg.n,
                seed,
                trials: cfg.trials,
                failures: est.failures,
                estimate: est.estimate,
                lower: est.lower,
                upper: est.upper,
                failing,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Result<String, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("linesec").chain(args.iter().copied()))
            .map_err(|e| CliError::Config(e.to_string()))?;
        let mut buf = Vec::new();
        run(&cli, &mut buf)?;
        Ok(String::from_utf8(buf).unwrap())
    }

    #[test]
    fn capacity_compare_single_hop() {
        let out = run_args(&["capacity", "--delta", "0.5", "--delta-e", "0.5", "--source-randomness", "0.6"]).unwrap();
        let row = out.lines().find(|l| l.starts_with("c_sk,")).unwrap();
        let cols: Vec<f64> = row.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!((cols[0] - 0.2).abs() < 1e-12 && (cols[1] - 0.2).abs() < 1e-12 && cols[2] < 1e-9);
    }

    #[test]
    fn axis_parsing() {
        assert_eq!(parse_axis("d=0:1.2:0.1").unwrap().values.len(), 13);
        assert!(parse_axis("d=1:0:0.1").unwrap().values.is_empty());
        assert!(parse_axis("x=0:1:0.1").is_err());
        assert!(matches!(parse_axis("d=0:1:1e-9"), Err(CliError::Refused(_))));
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let out = run_args(&["sweep", "--axis", "d=1:0:0.1"]).unwrap();
        assert_eq!(out.lines().count(), 1);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run_args(&["capacity", "--delta", "2"]).unwrap_err().exit_code(), 1);
        let infeasible = run_args(&["simulate", "--target", "line", "--hops", "3", "-n", "2"]).unwrap_err();
        assert_eq!(infeasible.exit_code(), 2);
    }

    #[test]
    fn dump_config_round_trips() {
        let dumped = run_args(&["--dump-config", "--seed", "5", "--hops", "2", "capacity"]).unwrap();
        let cfg: RunConfig = serde_json::from_str(&dumped).unwrap();
        assert_eq!(cfg.seed, Some(5));
        assert_eq!(cfg.network.len(), 2);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
