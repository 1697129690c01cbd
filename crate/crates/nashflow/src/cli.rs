//! Command-line front end: validation, loading, thin flows, Nash flow
//! construction, verification and label export.
//!
//! Exit status is 0 on success, 1 when a check finds violations and 2 on
//! input or processing errors. A report is written in every case.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::labels::earliest_arrival;
use crate::loading::{check_feasibility, load_network, FlowFile, LoadOptions, QueueProfile};
use crate::nash::{
    check_derivatives_thinflow, construct_common_destination, construct_common_origin,
    construct_nash_single, verify_nash, NashFlowOverTime, NashOptions, DEFAULT_MAX_PHASES,
};
use crate::netmodel::{ArcId, Instance, Mode, NetError, NodeId};
use crate::rational::{approx, format, parse, serde_opt_q, serde_q, Q};
use crate::thinflow::{solve_thinflow_multisource, solve_thinflow_single, ThinFlow, ThinFlowSource};
use crate::timefn::{pwl_to_csv, pwl_to_json, step_to_csv, PwlFunction, StepFunction};

/// Environment variable capping per-arc breakpoint budgets.
pub const MAX_BREAKPOINTS_ENV: &str = "NASHFLOW_MAX_BREAKPOINTS";

const SCHEMA_HELP: &str = r#"Instance files are JSON:
  {"nodes": ["s", "t"],
   "arcs": [{"id": "e", "tail": "s", "head": "t", "transit": 1, "capacity": "3/2"}],
   "commodities": [{"id": "1", "origin": "s", "destination": "t", "rate": 2,
                    "inflow_start": 0, "inflow_end": 1}],
   "mode": "general" | "commonOrigin" | "commonDestination"}
Rationals are integers or "p/q" strings; "inflow_end" may be omitted for unbounded inflow.
Flow files: {"entries": [{"commodity": "1", "arc": "e",
   "inflow": {"initial": 0, "breakpoints": [0, 1], "values": [2, 0]},
   "outflow": {...}}]}
Thin-flow configs: {"active": ["e"], "resetting": [], "source": "s", "sink": "t", "rate": 2}
   or {"active": [...], "resetting": [...], "sources": [{"node": "s", "rate": 1}], "sink": "t"}"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check an instance for structural errors.
    Validate { instance: PathBuf },
    /// Load a network with given arc inflow rates.
    Load { instance: PathBuf, flowrates: PathBuf },
    /// Solve a thin flow for given active and resetting arcs.
    Thinflow { instance: PathBuf, config: PathBuf },
    /// Construct and verify a Nash flow over time.
    Nash { instance: PathBuf },
    /// Verify that a flow over time is a Nash flow.
    Verify { instance: PathBuf, flow: PathBuf },
    /// Earliest-arrival labels of one commodity under a flow.
    Labels {
        instance: PathBuf,
        flow: PathBuf,
        commodity: String,
    },
}

#[derive(Debug, Parser)]
#[command(name = "nashflow", version, about = "Exact Nash flows over time", after_help = SCHEMA_HELP)]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Horizon as an integer or p/q: particles for nash and verify, time for load.
    #[arg(long, global = true)]
    horizon: Option<String>,
    #[arg(long = "max-phases", global = true, default_value_t = DEFAULT_MAX_PHASES)]
    max_phases: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file for JSON, output directory for CSV; standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    pub horizon: Option<Q>,
    pub max_phases: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub quiet: bool,
}

enum Failure {
    Input { kind: String, message: String, details: Value },
    Violations(Vec<(String, String, Value)>),
}

impl Failure {
    fn input(kind: &str, message: impl ToString) -> Self {
        Failure::Input {
            kind: kind.to_string(),
            message: message.to_string(),
            details: Value::Null,
        }
    }
}

/// Tagged violation records as `(kind, message, record)`.
fn records<T: serde::Serialize + std::fmt::Display>(items: &[T]) -> Vec<(String, String, Value)> {
    items
        .iter()
        .map(|v| {
            let record = serde_json::to_value(v).unwrap_or(Value::Null);
            let kind = record["kind"].as_str().unwrap_or("Violation").to_string();
            (kind, v.to_string(), record)
        })
        .collect()
}

enum Output {
    Json(Value),
    Csv(Vec<(String, Vec<u8>)>),
}

struct Success {
    output: Output,
    summary: String,
}

fn io_failure(err: impl std::fmt::Display) -> Failure {
    Failure::input("Io", err)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input("Io", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input("Malformed", format!("{what} {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    Instance::load(path).map_err(|err| match err {
        NetError::Invalid(violations) => {
            let details: Vec<Value> = violations
                .iter()
                .map(|v| json!({"kind": v.kind(), "message": v.to_string()}))
                .collect();
            Failure::Input {
                kind: violations.first().map_or("Invalid", |v| v.kind()).to_string(),
                message: violations
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join("; "),
                details: json!(details),
            }
        }
        NetError::Json(e) => Failure::input("Malformed", format!("{}: {e}", path.display())),
        other => Failure::input("Io", other),
    })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn pwl_csv(f: &PwlFunction) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    pwl_to_csv(f, &mut buf).map_err(io_failure)?;
    Ok(buf)
}

/// `breakpoint,value` rows on `[0, end]`: the kinks inside plus both ends.
fn pwl_csv_until(f: &PwlFunction, end: &Q) -> Result<Vec<u8>, Failure> {
    let zero = crate::rational::zero();
    let mut xs: Vec<Q> = vec![zero.clone(), end.clone()];
    xs.extend(f.breakpoints().iter().filter(|x| **x > zero && *x < end).cloned());
    xs.sort();
    xs.dedup();
    let rows = xs.iter().map(|x| vec![format(x), format(&f.eval(x))]).collect();
    table_csv(&["breakpoint".into(), "value".into()], rows)
}

fn step_csv(f: &StepFunction) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    step_to_csv(f, &mut buf).map_err(io_failure)?;
    Ok(buf)
}

fn table_csv(header: &[String], rows: Vec<Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(io_failure)?;
    for row in rows {
        w.write_record(row).map_err(io_failure)?;
    }
    w.into_inner().map_err(io_failure)
}

fn breakpoint_budget() -> Result<usize, Failure> {
    match std::env::var(MAX_BREAKPOINTS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input("BadEnvironment", format!("{MAX_BREAKPOINTS_ENV} must be a positive integer"))),
        Err(_) => Ok(LoadOptions::default().max_breakpoints),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            if code == 2 {
                eprintln!("\n{SCHEMA_HELP}");
            }
            return code;
        }
    };
    let quiet = args.quiet;
    let (format, out) = (args.format, args.out.clone());
    let config = match config_from(args) {
        Ok(c) => c,
        Err(f) => return finish(Err(f), format, out.as_deref(), quiet),
    };
    let result = execute(&config);
    finish(result, config.format, config.out.as_deref(), config.quiet)
}

fn config_from(args: Args) -> Result<RunConfig, Failure> {
    let horizon = args
        .horizon
        .as_deref()
        .map(parse)
        .transpose()
        .map_err(|e| Failure::input("Usage", e))?;
    if horizon.as_ref().is_some_and(|h| *h <= crate::rational::zero()) {
        return Err(Failure::input("Usage", "--horizon must be positive"));
    }
    if args.max_phases == 0 {
        return Err(Failure::input("Usage", "--max-phases must be at least 1"));
    }
    Ok(RunConfig {
        command: args.command,
        horizon,
        max_phases: args.max_phases,
        format: args.format,
        out: args.out,
        quiet: args.quiet,
    })
}

fn write_output(output: &Output, out: Option<&Path>) -> std::io::Result<()> {
    match (output, out) {
        (Output::Json(v), Some(path)) => {
            let mut text = serde_json::to_string_pretty(v).expect("report serializes");
            text.push('\n');
            fs::write(path, text)
        }
        (Output::Json(v), None) => {
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, v)?;
            writeln!(stdout)
        }
        (Output::Csv(files), Some(dir)) => {
            fs::create_dir_all(dir)?;
            for (name, bytes) in files {
                fs::write(dir.join(format!("{name}.csv")), bytes)?;
            }
            Ok(())
        }
        (Output::Csv(files), None) => {
            let mut stdout = std::io::stdout().lock();
            for (name, bytes) in files {
                writeln!(stdout, "# {name}")?;
                stdout.write_all(bytes)?;
            }
            Ok(())
        }
    }
}

fn failure_output(failure: &Failure, format: Format) -> Output {
    match failure {
        Failure::Input { kind, message, details } => match format {
            Format::Json => Output::Json(json!({
                "status": "error",
                "kind": kind,
                "message": message,
                "details": details,
            })),
            Format::Csv => Output::Csv(vec![(
                "error".into(),
                table_csv(
                    &["kind".into(), "message".into()],
                    vec![vec![kind.clone(), message.clone()]],
                )
                .unwrap_or_default(),
            )]),
        },
        Failure::Violations(list) => match format {
            Format::Json => Output::Json(json!({
                "status": "violations",
                "violations": list.iter().map(|(_, _, r)| r.clone()).collect::<Vec<_>>(),
            })),
            Format::Csv => Output::Csv(vec![(
                "violations".into(),
                table_csv(
                    &["kind".into(), "message".into()],
                    list.iter().map(|(k, m, _)| vec![k.clone(), m.clone()]).collect(),
                )
                .unwrap_or_default(),
            )]),
        },
    }
}

fn finish(result: Result<Success, Failure>, format: Format, out: Option<&Path>, quiet: bool) -> i32 {
    let (output, code, lines) = match result {
        Ok(s) => (s.output, 0, vec![s.summary]),
        Err(f) => {
            let (code, lines) = match &f {
                Failure::Input { kind, message, .. } => {
                    let mut lines = vec![format!("error: {kind}: {message}")];
                    if kind == "Malformed" || kind == "Usage" {
                        lines.push(SCHEMA_HELP.to_string());
                    }
                    (2, lines)
                }
                Failure::Violations(list) => {
                    let mut lines = vec![format!("{} violation(s)", list.len())];
                    lines.extend(list.iter().map(|(k, m, _)| format!("  {k}: {m}")));
                    (1, lines)
                }
            };
            (failure_output(&f, format), code, lines)
        }
    };
    if let Err(e) = write_output(&output, out) {
        eprintln!("error: cannot write output: {e}");
        return 2;
    }
    if !quiet || code == 2 {
        for line in lines {
            eprintln!("{line}");
        }
    }
    code
}

fn execute(cfg: &RunConfig) -> Result<Success, Failure> {
    match &cfg.command {
        Command::Validate { instance } => validate(cfg, instance),
        Command::Load {
            instance,
            flowrates,
        } => load(cfg, instance, flowrates),
        Command::Thinflow { instance, config } => thinflow(cfg, instance, config),
        Command::Nash { instance } => nash(cfg, instance),
        Command::Verify { instance, flow } => verify(cfg, instance, flow),
        Command::Labels {
            instance,
            flow,
            commodity,
        } => labels(cfg, instance, flow, commodity),
    }
}

fn validate(cfg: &RunConfig, path: &Path) -> Result<Success, Failure> {
    let inst = load_instance(path)?;
    let facts = [
        ("nodes", json!(inst.node_count())),
        ("arcs", json!(inst.arc_count())),
        ("commodities", json!(inst.commodity_count())),
        ("mode", json!(inst.mode().to_string())),
    ];
    let output = match cfg.format {
        Format::Json => {
            let mut v = json!({"status": "valid"});
            for (k, x) in &facts {
                v[*k] = json!(x);
            }
            Output::Json(v)
        }
        Format::Csv => Output::Csv(vec![(
            "summary".into(),
            table_csv(
                &["key".into(), "value".into()],
                facts
                    .iter()
                    .map(|(k, v)| vec![k.to_string(), v.as_str().map_or_else(|| v.to_string(), String::from)])
                    .collect(),
            )?,
        )]),
    };
    Ok(Success {
        output,
        summary: format!(
            "valid: {} nodes, {} arcs, {} commodities ({})",
            inst.node_count(),
            inst.arc_count(),
            inst.commodity_count(),
            inst.mode()
        ),
    })
}

fn load(cfg: &RunConfig, instance: &Path, flowrates: &Path) -> Result<Success, Failure> {
    let inst = load_instance(instance)?;
    let file: FlowFile = read_json(flowrates, "flow file")?;
    let inflows = file
        .inflows(&inst)
        .map_err(|e| Failure::input("BadFlowFile", e))?;
    let horizon = match &cfg.horizon {
        Some(h) => h.clone(),
        None => inflows
            .iter()
            .flatten()
            .filter_map(|f| f.breakpoints().last().cloned())
            .max()
            .unwrap_or_else(|| crate::rational::one()),
    };
    let opts = LoadOptions {
        max_breakpoints: breakpoint_budget()?,
    };
    let (flow, profile) =
        load_network(&inst, &inflows, &horizon, &opts).map_err(|e| Failure::input("Load", e))?;
    let output = match cfg.format {
        Format::Json => {
            let queues: serde_json::Map<_, _> = inst
                .arc_ids()
                .map(|e| {
                    let q = profile.arc(e);
                    (
                        inst.arc(e).id.clone(),
                        json!({
                            "volume": pwl_to_json(&q.volume),
                            "waiting": pwl_to_json(&q.waiting),
                            "exit": pwl_to_json(&q.exit),
                        }),
                    )
                })
                .collect();
            Output::Json(json!({
                "horizon": format(&horizon),
                "flow": FlowFile::from_flow(&inst, &flow),
                "queues": queues,
            }))
        }
        Format::Csv => {
            let mut files = Vec::new();
            for e in inst.arc_ids() {
                let name = file_stem(&inst.arc(e).id);
                files.push((format!("queue_{name}"), pwl_csv(&profile.arc(e).volume)?));
                files.push((format!("waiting_{name}"), pwl_csv(&profile.arc(e).waiting)?));
                for j in inst.commodity_ids() {
                    let f = flow.outflow(j, e);
                    if !f.is_zero() {
                        let c = file_stem(&inst.commodity(j).id);
                        files.push((format!("outflow_{c}_{name}"), step_csv(f)?));
                    }
                }
            }
            Output::Csv(files)
        }
    };
    Ok(Success {
        output,
        summary: format!("loaded {} arcs up to time {}", inst.arc_count(), format(&horizon)),
    })
}

#[derive(Debug, Deserialize)]
struct SourceConfig {
    node: String,
    #[serde(with = "serde_q")]
    rate: Q,
}

#[derive(Debug, Deserialize)]
struct ThinFlowConfig {
    active: Vec<String>,
    #[serde(default)]
    resetting: Vec<String>,
    source: Option<String>,
    sink: Option<String>,
    #[serde(default, with = "serde_opt_q")]
    rate: Option<Q>,
    sources: Option<Vec<SourceConfig>>,
}

fn node_named(inst: &Instance, name: &str) -> Result<NodeId, Failure> {
    inst.node_by_name(name)
        .ok_or_else(|| Failure::input("UnknownNode", format!("unknown node {name}")))
}

fn arcs_named(inst: &Instance, names: &[String]) -> Result<Vec<ArcId>, Failure> {
    names
        .iter()
        .map(|n| {
            inst.arc_by_id(n)
                .ok_or_else(|| Failure::input("UnknownArc", format!("unknown arc {n}")))
        })
        .collect()
}

fn thinflow(cfg: &RunConfig, instance: &Path, config: &Path) -> Result<Success, Failure> {
    let inst = load_instance(instance)?;
    let tc: ThinFlowConfig = read_json(config, "thin-flow config")?;
    let active = arcs_named(&inst, &tc.active)?;
    let resetting = arcs_named(&inst, &tc.resetting)?;
    let first = inst.commodities().first();
    let sink = match (&tc.sink, first) {
        (Some(name), _) => node_named(&inst, name)?,
        (None, Some(c)) => c.destination,
        (None, None) => return Err(Failure::input("Usage", "the config needs a sink")),
    };
    let multi = tc.sources.is_some() || inst.mode() == Mode::CommonDestination;
    let tf: ThinFlow = if multi {
        let sources: Vec<ThinFlowSource> = match &tc.sources {
            Some(list) => list
                .iter()
                .map(|s| {
                    Ok(ThinFlowSource {
                        node: node_named(&inst, &s.node)?,
                        rate: s.rate.clone(),
                    })
                })
                .collect::<Result<_, Failure>>()?,
            None => inst
                .commodities()
                .iter()
                .map(|c| ThinFlowSource {
                    node: c.origin,
                    rate: c.rate.clone(),
                })
                .collect(),
        };
        solve_thinflow_multisource(&inst, &active, &resetting, &sources, sink)
    } else {
        let source = match (&tc.source, first) {
            (Some(name), _) => node_named(&inst, name)?,
            (None, Some(c)) => c.origin,
            (None, None) => return Err(Failure::input("Usage", "the config needs a source")),
        };
        let rate = match (&tc.rate, first) {
            (Some(r), _) => r.clone(),
            (None, Some(c)) => c.rate.clone(),
            (None, None) => return Err(Failure::input("Usage", "the config needs a rate")),
        };
        solve_thinflow_single(&inst, &active, &resetting, source, sink, &rate)
    }
    .map_err(|e| Failure::input("ThinFlow", e))?;

    let output = match cfg.format {
        Format::Json => Output::Json(tf.to_json(&inst)),
        Format::Csv => {
            let arcs = inst
                .arc_ids()
                .filter(|e| tf.is_active(*e))
                .map(|e| {
                    vec![
                        inst.arc(e).id.clone(),
                        tf.is_resetting(e).to_string(),
                        format(&tf.flow[e.0]),
                    ]
                })
                .collect();
            let nodes = inst
                .nodes()
                .filter_map(|v| tf.label(v).map(|l| vec![inst.node_name(v).to_string(), format(l)]))
                .collect();
            Output::Csv(vec![
                (
                    "arcs".into(),
                    table_csv(&["arc".into(), "resetting".into(), "flow".into()], arcs)?,
                ),
                ("nodes".into(), table_csv(&["node".into(), "label".into()], nodes)?),
            ])
        }
    };
    Ok(Success {
        output,
        summary: format!("thin flow on {} active arcs", active.len()),
    })
}

fn construct(cfg: &RunConfig, inst: &Instance) -> Result<NashFlowOverTime, Failure> {
    let opts = NashOptions {
        horizon: cfg.horizon.clone(),
        max_phases: cfg.max_phases,
    };
    let built = match inst.mode() {
        Mode::CommonOrigin => construct_common_origin(inst, &opts),
        Mode::CommonDestination => construct_common_destination(inst, &opts),
        Mode::General => construct_nash_single(inst, &opts),
    };
    built.map_err(|e| {
        let kind = format!("{e:?}");
        let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Nash").to_string();
        Failure::input(&kind, e)
    })
}

fn nash(cfg: &RunConfig, instance: &Path) -> Result<Success, Failure> {
    let inst = load_instance(instance)?;
    let nash = construct(cfg, &inst)?;

    let profile = QueueProfile::from_flow(&nash.instance, &nash.flow);
    if let Err(bad) = check_feasibility(&nash.instance, &nash.flow, &profile) {
        return Err(Failure::Violations(records(&bad)));
    }
    let cert = verify_nash(&nash.instance, &nash.flow, &nash.horizon)
        .map_err(|bad| Failure::Violations(records(&bad)))?;
    let tf_cert = check_derivatives_thinflow(&nash).map_err(|bad| Failure::Violations(records(&bad)))?;

    let output = match cfg.format {
        Format::Json => {
            let mut v = nash.to_json();
            v["certificate"] = json!({
                "pairs_checked": cert.pairs_checked,
                "thinflow_pieces_checked": tf_cert.pieces_checked,
            });
            Output::Json(v)
        }
        Format::Csv => Output::Csv(nash_csv(&nash)?),
    };
    Ok(Success {
        output,
        summary: format!(
            "nash ({}): {} phases up to particle {} (approx. {:.4}), verified",
            nash.construction.name(),
            nash.phases.len(),
            format(&nash.horizon),
            approx(&nash.horizon)
        ),
    })
}

fn nash_csv(nash: &NashFlowOverTime) -> Result<Vec<(String, Vec<u8>)>, Failure> {
    let g = &nash.network;
    let mut header: Vec<String> = ["start", "end", "active", "resetting"].map(String::from).to_vec();
    header.extend(g.nodes().map(|v| format!("dl_{}", g.node_name(v))));
    let names = |set: &[ArcId]| set.iter().map(|&e| g.arc(e).id.clone()).collect::<Vec<_>>().join(" ");
    let rows = nash
        .phases
        .iter()
        .map(|p| {
            let mut row = vec![
                format(&p.start),
                format(&p.end),
                names(&p.thinflow.active),
                names(&p.thinflow.resetting),
            ];
            row.extend(g.nodes().map(|v| p.thinflow.label(v).map(format).unwrap_or_default()));
            row
        })
        .collect();
    let mut files = vec![("phases".to_string(), table_csv(&header, rows)?)];
    for v in g.nodes() {
        if let Some(l) = &nash.node_labels[v.0] {
            files.push((format!("label_{}", file_stem(g.node_name(v))), pwl_csv_until(l, &nash.horizon)?));
        }
    }
    if let Some(dist) = &nash.inflow_distribution {
        for (c, f) in nash.instance.commodities().iter().zip(dist) {
            files.push((format!("distribution_{}", file_stem(&c.id)), step_csv(f)?));
        }
    }
    Ok(files)
}

fn read_flow(inst: &Instance, path: &Path) -> Result<crate::loading::FlowOverTime, Failure> {
    let file: FlowFile = read_json(path, "flow file")?;
    file.to_flow(inst).map_err(|e| Failure::input("BadFlowFile", e))
}

fn verify(cfg: &RunConfig, instance: &Path, flow: &Path) -> Result<Success, Failure> {
    let inst = load_instance(instance)?;
    let flow = read_flow(&inst, flow)?;
    let horizon = match &cfg.horizon {
        Some(h) => h.clone(),
        None => {
            let bounds: Option<Vec<Q>> = inst.commodities().iter().map(|c| c.particle_bound()).collect();
            bounds
                .and_then(|b| b.into_iter().max())
                .ok_or_else(|| Failure::input("HorizonRequired", "unbounded inflow needs --horizon"))?
        }
    };
    let cert = verify_nash(&inst, &flow, &horizon).map_err(|bad| Failure::Violations(records(&bad)))?;
    let output = match cfg.format {
        Format::Json => {
            let mut v = cert.to_json(&inst);
            v["status"] = json!("nash");
            Output::Json(v)
        }
        Format::Csv => {
            let mut files = Vec::new();
            for j in inst.commodity_ids() {
                for e in inst.arc_ids() {
                    let x = &cert.static_flows[j.0][e.0];
                    if x.values().iter().any(|y| !num::Zero::is_zero(y)) || !num::Zero::is_zero(x.slope_after()) {
                        let name = format!(
                            "static_{}_{}",
                            file_stem(&inst.commodity(j).id),
                            file_stem(&inst.arc(e).id)
                        );
                        files.push((name, pwl_csv(x)?));
                    }
                }
            }
            Output::Csv(files)
        }
    };
    Ok(Success {
        output,
        summary: format!("nash flow verified on {} commodity-arc pairs", cert.pairs_checked),
    })
}

fn labels(cfg: &RunConfig, instance: &Path, flow: &Path, commodity: &str) -> Result<Success, Failure> {
    let inst = load_instance(instance)?;
    let flow = read_flow(&inst, flow)?;
    let j = inst
        .commodity_by_id(commodity)
        .ok_or_else(|| Failure::input("UnknownCommodity", format!("unknown commodity {commodity}")))?;
    let profile = QueueProfile::from_flow(&inst, &flow);
    let bound = inst.commodity(j).particle_bound();
    let labels = earliest_arrival(&inst, &profile, j, bound.clone())
        .map_err(|e| Failure::input("Labels", e))?;
    let end = cfg.horizon.clone().or(bound);
    let output = match cfg.format {
        Format::Json => {
            let nodes: serde_json::Map<_, _> = inst
                .nodes()
                .filter_map(|v| labels.label(v).map(|l| (inst.node_name(v).to_string(), pwl_to_json(l))))
                .collect();
            Output::Json(json!({"commodity": commodity, "labels": nodes}))
        }
        Format::Csv => {
            let mut files = Vec::new();
            for v in inst.nodes() {
                if let Some(l) = labels.label(v) {
                    let table = match &end {
                        Some(end) => pwl_csv_until(l, end)?,
                        None => pwl_csv(l)?,
                    };
                    files.push((format!("label_{}", file_stem(inst.node_name(v))), table));
                }
            }
            Output::Csv(files)
        }
    };
    Ok(Success {
        output,
        summary: format!("labels of commodity {commodity}"),
    })
}
