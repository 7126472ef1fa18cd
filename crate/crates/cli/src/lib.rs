//! Command-line front end: parses instances, runs a solver, checks the
//! result with the definitional verifier and reports it as JSON.
//!
//! Exit codes: 0 success, 1 "no solution" (or a `check` that fails),
//! 2 input errors, 3 internal failures including a failed self-check.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fair_orient::ef1::{solve_ef1, ItemOrder, Policy};
use fair_orient::efx_exact::{brute_force_efx_orientation, AllocationCaps, ExactConfig};
use fair_orient::efxr::{multigraph_efxr, planar_faces_orientation, proper_violations, solve_decomposable, GroupRule};
use fair_orient::fpt::{decide_efx, parse_layout, search_layout};
use fair_orient::generators::{
    gadget_x, partition_to_multigraph, partition_to_vc_graph, random_instance, random_planar_table_instance,
    PartitionInput, RandomKind, RandomParams,
};
use fair_orient::instance::io::{allocation_to_json, parse_document, parse_instance, serialize_instance};
use fair_orient::rational::parse_rational;
use fair_orient::verify::{check, check_orientation, Property};
use fair_orient::{Allocation, Error, GraphInstance, Instance, PlanarInstance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NONE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fair-orient", version, about = "EF1, EFX and EFXr orientations of indivisible goods")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the parallel searches (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the solver trace (JSON array) to this file.
    #[arg(long, global = true)]
    trace_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a stored allocation against one fairness property.
    Check {
        file: PathBuf,
        #[arg(long, value_enum)]
        property: PropertyArg,
    },
    /// EF1 orientation by envy-cycle elimination.
    SolveEf1 {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = PolicyArg::Declaration)]
        policy: PolicyArg,
    },
    /// EFX orientation of a graph, or NONE.
    SolveEfx {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: EfxMethod,
        /// Tree layout file for `--method fpt`; searched for if absent.
        #[arg(long)]
        layout: Option<PathBuf>,
    },
    /// EFXr orientation for multigraph, decomposable or planar-face instances.
    SolveEfxr {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: EfxrMethod,
    },
    /// Print a generated instance.
    Gen {
        #[arg(long, value_enum)]
        kind: GenKind,
        /// Heavy edge weight of gadget X.
        #[arg(long, default_value = "3")]
        b: String,
        /// PARTITION values, comma separated.
        #[arg(long, value_delimiter = ',')]
        values: Vec<u64>,
        #[arg(long, default_value = "general")]
        random_kind: String,
        #[arg(long, default_value_t = 4)]
        agents: usize,
        #[arg(long, default_value_t = 6)]
        items: usize,
        #[arg(long, default_value_t = 5)]
        max_weight: u64,
        #[arg(long, default_value_t = 40)]
        zero_percent: u64,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Search a low-width tree layout of a graph.
    Layout {
        file: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PropertyArg {
    Ef,
    Ef1,
    Efx,
    Efxr,
}

impl From<PropertyArg> for Property {
    fn from(p: PropertyArg) -> Self {
        match p {
            PropertyArg::Ef => Property::Ef,
            PropertyArg::Ef1 => Property::Ef1,
            PropertyArg::Efx => Property::Efx,
            PropertyArg::Efxr => Property::Efxr,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Declaration,
    Laminar,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EfxMethod {
    Brute,
    Fpt,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EfxrMethod {
    Multigraph,
    Decomposable,
    PlanarFaces,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    GadgetX,
    PartitionVc,
    PartitionMultigraph,
    Random,
    /// Planar faces with per-vertex table valuations.
    RandomPlanar,
}

/// What `run` hands back to `main`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutput {
    pub code: i32,
    pub stdout: String,
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match e {
            Error::Internal(_) => (EXIT_INTERNAL, "internal"),
            Error::NoEfx(_) => (EXIT_NONE, "none"),
            _ => (EXIT_INPUT, "input"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        kind: "input",
        message: message.into(),
    }
}

/// Report under construction; `finish` adds the status and timing.
struct Report {
    command: &'static str,
    body: serde_json::Map<String, Value>,
    started: Instant,
    solve_ms: Option<f64>,
}

impl Report {
    fn new(command: &'static str) -> Self {
        Report {
            command,
            body: serde_json::Map::new(),
            started: Instant::now(),
            solve_ms: None,
        }
    }

    fn set(&mut self, key: &str, v: Value) {
        self.body.insert(key.to_string(), v);
    }

    fn solved(&mut self) {
        self.solve_ms = Some(ms(self.started));
    }

    fn finish(self, code: i32) -> RunOutput {
        let mut out = serde_json::Map::new();
        out.insert("command".into(), json!(self.command));
        out.extend(self.body);
        out.insert("exit_code".into(), json!(code));
        out.insert(
            "timing".into(),
            json!({"solve_ms": self.solve_ms, "total_ms": ms(self.started)}),
        );
        RunOutput {
            code,
            stdout: pretty(&Value::Object(out)),
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// SHA-256 of the canonical serialization, so formatting does not matter.
fn digest(inst: &Instance) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(serialize_instance(inst).as_bytes())))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Instance, Failure> {
    Ok(parse_instance(&read(path)?)?)
}

/// Runs the CLI on `argv` (program name first).
pub fn run<I, T>(argv: I) -> RunOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => RunOutput {
                    code: EXIT_OK,
                    stdout: e.to_string(),
                },
                _ => RunOutput {
                    code: EXIT_INPUT,
                    stdout: pretty(&json!({"error": {"kind": "usage", "message": e.to_string()}})),
                },
            };
        }
    };
    let command = command_name(&cli.command);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => return failure_output(command, Failure::from(Error::Internal(e.to_string()))),
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(out) => out,
        Err(f) => failure_output(command, f),
    }
}

fn failure_output(command: &'static str, f: Failure) -> RunOutput {
    RunOutput {
        code: f.code,
        stdout: pretty(&json!({
            "command": command,
            "error": {"kind": f.kind, "message": f.message},
            "exit_code": f.code,
        })),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Check { .. } => "check",
        Command::SolveEf1 { .. } => "solve-ef1",
        Command::SolveEfx { .. } => "solve-efx",
        Command::SolveEfxr { .. } => "solve-efxr",
        Command::Gen { .. } => "gen",
        Command::Layout { .. } => "layout",
    }
}

fn dispatch(cli: &Cli) -> Result<RunOutput, Failure> {
    match &cli.command {
        Command::Check { file, property } => run_check(file, (*property).into()),
        Command::SolveEf1 { file, policy } => run_ef1(cli, file, *policy),
        Command::SolveEfx { file, method, layout } => run_efx(cli, file, *method, layout.as_deref()),
        Command::SolveEfxr { file, method } => run_efxr(file, *method),
        Command::Gen {
            kind,
            b,
            values,
            random_kind,
            agents,
            items,
            max_weight,
            zero_percent,
            depth,
        } => {
            let params = RandomParams {
                agents: *agents,
                items: *items,
                max_weight: *max_weight,
                zero_percent: *zero_percent,
                depth: *depth,
            };
            let inst = generate(*kind, b, values, random_kind, &params, cli.seed)?;
            Ok(RunOutput {
                code: EXIT_OK,
                stdout: serialize_instance(&inst) + "\n",
            })
        }
        Command::Layout { file, budget } => {
            let mut r = Report::new("layout");
            let g = GraphInstance::new(load(file)?)?;
            r.set("instance_digest", json!(digest(g.instance())));
            let layout = search_layout(&g, *budget)?;
            r.solved();
            r.set("outcome", json!({"k": layout.k(), "layout": layout.to_json(&g)}));
            Ok(r.finish(EXIT_OK))
        }
    }
}

fn generate(
    kind: GenKind,
    b: &str,
    values: &[u64],
    random_kind: &str,
    params: &RandomParams,
    seed: u64,
) -> Result<Instance, Failure> {
    let partition = || -> Result<PartitionInput, Failure> {
        if values.is_empty() {
            return Err(input_error("--values is required for partition reductions"));
        }
        Ok(PartitionInput::new(values.to_vec())?)
    };
    Ok(match kind {
        GenKind::GadgetX => gadget_x(parse_rational(b)?)?.into_instance(),
        GenKind::PartitionVc => partition_to_vc_graph(&partition()?)?.into_instance(),
        GenKind::PartitionMultigraph => partition_to_multigraph(&partition()?)?.into_instance(),
        GenKind::Random => random_instance(RandomKind::parse(random_kind)?, params, seed)?,
        GenKind::RandomPlanar => random_planar_table_instance(params.agents, params.max_weight, seed)?
            .instance()
            .clone(),
    })
}

/// Verifier results for `alloc`; `needed` must all hold.
fn verify(inst: &Instance, alloc: &Allocation, needed: &[Property]) -> (Value, bool) {
    let orientation = check_orientation(inst, alloc);
    let mut ok = orientation.holds;
    let mut out = serde_json::Map::new();
    out.insert("orientation".into(), orientation.to_json(inst));
    for &p in needed {
        let rep = check(inst, alloc, p);
        ok &= rep.holds;
        out.insert(p.as_str().to_ascii_lowercase(), rep.to_json(inst));
    }
    (Value::Object(out), ok)
}

/// Records the allocation and its verification; a failed self-check is an
/// internal error.
fn finish_solved(mut r: Report, inst: &Instance, alloc: &Allocation, needed: &[Property], extra: Value) -> RunOutput {
    let (verification, ok) = verify(inst, alloc, needed);
    let mut outcome = json!({"status": "allocation", "allocation": allocation_to_json(inst, alloc)});
    if let (Value::Object(o), Value::Object(e)) = (&mut outcome, extra) {
        o.extend(e);
    }
    r.set("outcome", outcome);
    r.set("verification", verification);
    if ok {
        r.finish(EXIT_OK)
    } else {
        log::error!("self-check failed for {}", r.command);
        r.set("error", json!({"kind": "internal", "message": "self-check failed"}));
        r.finish(EXIT_INTERNAL)
    }
}

fn run_check(file: &Path, property: Property) -> Result<RunOutput, Failure> {
    let mut r = Report::new("check");
    let doc = parse_document(&read(file)?)?;
    let inst = &doc.instance;
    let alloc = doc.allocation.ok_or_else(|| input_error("the file has no `allocation`"))?;
    r.set("instance_digest", json!(digest(inst)));
    let rep = check(inst, &alloc, property);
    r.solved();
    r.set("outcome", json!({"property": property.as_str(), "holds": rep.holds}));
    r.set(
        "verification",
        json!({
            "orientation": check_orientation(inst, &alloc).to_json(inst),
            property.as_str().to_ascii_lowercase(): rep.to_json(inst),
        }),
    );
    Ok(r.finish(if rep.holds { EXIT_OK } else { EXIT_NONE }))
}

fn run_ef1(cli: &Cli, file: &Path, policy: PolicyArg) -> Result<RunOutput, Failure> {
    let mut r = Report::new("solve-ef1");
    let inst = load(file)?;
    r.set("instance_digest", json!(digest(&inst)));
    r.set("solver", json!("envy-cycle-elimination"));
    let policy = Policy {
        item_order: if policy == PolicyArg::Laminar {
            ItemOrder::Laminar
        } else {
            ItemOrder::Declaration
        },
        ..Policy::default()
    };
    let out = solve_ef1(&inst, &policy)?;
    r.solved();
    let trace = match &cli.trace_out {
        Some(path) => {
            let events: Vec<Value> = out.trace.iter().map(|e| e.to_json(&inst)).collect();
            fs::write(path, pretty(&Value::Array(events)))
                .map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))?;
            json!(path.display().to_string())
        }
        None => Value::Null,
    };
    r.set("trace", trace);
    let stats = json!({"stats": {
        "assignments": out.stats.assignments,
        "cycle_shifts": out.stats.cycle_shifts,
        "pool_returns": out.stats.pool_returns,
    }});
    Ok(finish_solved(r, &inst, &out.allocation, &[Property::Ef1], stats))
}

fn run_efx(cli: &Cli, file: &Path, method: EfxMethod, layout: Option<&Path>) -> Result<RunOutput, Failure> {
    let mut r = Report::new("solve-efx");
    let g = GraphInstance::new(load(file)?)?;
    let inst = g.instance().clone();
    r.set("instance_digest", json!(digest(&inst)));
    let (found, extra) = match method {
        EfxMethod::Brute => {
            r.set("solver", json!("efx-brute-force"));
            let cfg = ExactConfig {
                parallel: cli.threads.is_some_and(|t| t > 1),
                ..ExactConfig::default()
            };
            (brute_force_efx_orientation(&g, &cfg)?, json!({}))
        }
        EfxMethod::Fpt => {
            r.set("solver", json!("efx-tree-layout-dp"));
            let layout = match layout {
                Some(p) => parse_layout(&g, &read(p)?)?,
                None => search_layout(&g, 100_000)?,
            };
            let out = decide_efx(&g, &layout, true)?;
            if out.exists && out.witness.is_none() {
                return Err(Error::Internal("YES answer without a witness".into()).into());
            }
            (out.witness, json!({"k": out.k, "max_records": out.max_records}))
        }
    };
    r.solved();
    match found {
        Some(o) => {
            let alloc = g.orientation_allocation(&o)?;
            Ok(finish_solved(r, &inst, &alloc, &[Property::Efx], extra))
        }
        None => {
            let mut outcome = json!({"status": "NONE"});
            if let (Value::Object(o), Value::Object(e)) = (&mut outcome, extra) {
                o.extend(e);
            }
            r.set("outcome", outcome);
            Ok(r.finish(EXIT_NONE))
        }
    }
}

fn run_efxr(file: &Path, method: EfxrMethod) -> Result<RunOutput, Failure> {
    let mut r = Report::new("solve-efxr");
    let inst = load(file)?;
    r.set("instance_digest", json!(digest(&inst)));
    match method {
        EfxrMethod::Multigraph => {
            r.set("solver", json!("efxr-multigraph"));
            let g = GraphInstance::new(inst.clone())?;
            let out = multigraph_efxr(&g)?;
            r.solved();
            Ok(finish_solved(r, &inst, &out.allocation, &[Property::Efxr], json!({"bundles": out.bundles})))
        }
        EfxrMethod::Decomposable => {
            r.set("solver", json!("efxr-decomposable"));
            let out = match solve_decomposable(&inst, GroupRule::Efx, AllocationCaps::default()) {
                Ok(o) => o,
                Err(Error::NoEfx(what)) => {
                    r.solved();
                    r.set("outcome", json!({"status": "NONE", "reason": format!("no EFX allocation for {what}")}));
                    return Ok(r.finish(EXIT_NONE));
                }
                Err(e) => return Err(e.into()),
            };
            r.solved();
            Ok(finish_solved(r, &inst, &out.allocation, &[Property::Efxr], json!({"groups": out.groups.len()})))
        }
        EfxrMethod::PlanarFaces => {
            r.set("solver", json!("efxr-planar-faces"));
            let p = PlanarInstance::new(inst.clone())?;
            let out = planar_faces_orientation(&p)?;
            r.solved();
            let bad = proper_violations(&p, &out.allocation);
            if !bad.is_empty() {
                return Err(Error::Internal(format!("allocation is not proper: {}", bad.join("; "))).into());
            }
            let s = out.stats;
            let extra = json!({"proper": true, "steps": {
                "base": s.base, "shortcut": s.shortcut, "contraction": s.contraction, "fallback": s.fallback,
            }});
            Ok(finish_solved(r, &inst, &out.allocation, &[Property::Efxr], extra))
        }
    }
}
