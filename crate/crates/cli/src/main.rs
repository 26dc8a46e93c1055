//! `npir`: bounds, query plans, simulations, privacy checks and figure
//! data from the command line.

mod render;

use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use npir_core::bounds::{
    bsc_m3n2_capacity, bsc_m3n2_region, corner_capacity_m2, corner_capacity_m3, lower_bound, upper_bound, CornerPoint,
};
use npir_core::channels::{parse_point_channels, PointChannel, RngStream};
use npir_core::engine::{run_trials, sweep_csv, sweep_rate_vs_blocklength, SessionConfig, DEFAULT_MARGIN};
use npir_core::macpir::{
    additive_mac_trials, boolean_databases, boolean_retrieve, selection_capacity, selection_fixed_trials, BooleanMac,
    SelectionVariant,
};
use npir_core::privacy::{verify_protocol, Protocol, PROTOCOL_NAMES};
use npir_core::scheme::synthesize_logical_plan;
use npir_core::{CapacityVector, GroupSequence, MessageStore};

use render::{report_value, Output};

const DEFAULT_SEED: u64 = 20_240_601;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_DECODE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "npir", version, about = "Private information retrieval over noisy and multiple-access channels")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    out: Format,
    /// Print only the headline result.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Capacity bounds for independent noisy links.
    Bound {
        #[arg(value_enum)]
        kind: BoundKind,
        #[command(flatten)]
        links: Links,
        /// Number of messages (fixed to 2 or 3 by `m2` and `m3`).
        #[arg(long = "M")]
        messages: Option<usize>,
    },
    /// Print the query table of a corner point.
    Plan {
        #[arg(long = "M")]
        messages: usize,
        #[arg(long = "N")]
        databases: usize,
        /// Group sequence n0,n1,...
        #[arg(long, value_delimiter = ',', required = true)]
        seq: Vec<usize>,
        /// Desired message, 1-based.
        #[arg(long, default_value_t = 1)]
        desired: usize,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
    },
    /// Run retrieval sessions and print the report.
    Simulate {
        #[command(subcommand)]
        protocol: Simulation,
    },
    /// Data behind the region and capacity figures, or rate against
    /// block length.
    Sweep {
        #[command(subcommand)]
        what: Sweep,
    },
    /// Exact privacy verification.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundKind {
    Upper,
    Lower,
    M2,
    M3,
}

#[derive(Debug, Args)]
struct Links {
    /// Number of databases; a single channel is repeated N times.
    #[arg(long = "N")]
    databases: Option<usize>,
    /// Comma-separated channels, e.g. bsc:0.1,bec:0.2.
    #[arg(long, required = true)]
    channels: String,
}

impl Links {
    fn resolve(&self) -> Result<Vec<PointChannel>> {
        let mut channels = parse_point_channels(&self.channels)?;
        match self.databases {
            Some(n) if channels.len() == 1 && n > 1 => channels = vec![channels[0].clone(); n],
            Some(n) if n != channels.len() => bail!("--N {n} does not match {} channels", channels.len()),
            _ => {}
        }
        Ok(channels)
    }
}

fn capacities(channels: &[PointChannel]) -> Result<CapacityVector> {
    let raw: Vec<f64> = channels.iter().map(|c| c.capacity().clamp(0.0, 1.0)).collect();
    Ok(CapacityVector::new(&raw)?)
}

#[derive(Debug, Args)]
struct Common {
    /// Desired message, 1-based.
    #[arg(long, default_value_t = 1)]
    desired: usize,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Exit with status 3 when the failed-session fraction exceeds this.
    #[arg(long)]
    max_failure_rate: Option<f64>,
}

impl Common {
    fn desired(&self, messages: usize) -> Result<usize> {
        if self.desired == 0 || self.desired > messages {
            bail!("--desired must lie in 1..={messages}");
        }
        Ok(self.desired - 1)
    }
}

#[derive(Debug, Subcommand)]
enum Simulation {
    /// Independent noisy links.
    Npir {
        #[arg(long = "M")]
        messages: usize,
        #[command(flatten)]
        links: Links,
        /// Corner point; the best one for the channels when omitted.
        #[arg(long, value_delimiter = ',')]
        seq: Option<Vec<usize>>,
        /// Blocks per message (ν).
        #[arg(long, default_value_t = 1)]
        nu: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Additive (XOR) multiple-access channel with BSC(p) noise.
    MacAdd {
        #[arg(long = "M")]
        messages: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long = "L", default_value_t = 16)]
        length: usize,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[command(flatten)]
        common: Common,
    },
    /// AND multiple-access channel.
    MacAnd(BooleanArgs),
    /// OR multiple-access channel.
    MacOr(BooleanArgs),
    /// Selection channel fixed for the session.
    MacSel {
        #[arg(long = "M")]
        messages: usize,
        #[arg(long = "N")]
        databases: usize,
        #[arg(long = "L", default_value_t = 8)]
        length: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct BooleanArgs {
    #[arg(long = "M")]
    messages: usize,
    /// Defaults to 2^(M-1).
    #[arg(long = "N")]
    databases: Option<usize>,
    #[arg(long = "L", default_value_t = 8)]
    length: usize,
    /// Desired message, 1-based.
    #[arg(long, default_value_t = 1)]
    desired: usize,
}

#[derive(Debug, Subcommand)]
enum Sweep {
    /// Dominant expression over (p1, p2) for M = 3, N = 2.
    Region {
        #[arg(long, default_value_t = 0.01)]
        grid: f64,
    },
    /// Capacity over (p1, p2) for M = 3, N = 2.
    Capacity {
        #[arg(long, default_value_t = 0.01)]
        grid: f64,
    },
    /// Decode success and empirical rate against blocks per message.
    Blocklength {
        #[arg(long = "M")]
        messages: usize,
        #[command(flatten)]
        links: Links,
        #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
        nus: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// Compare each database's query distribution across desired indices.
    Privacy {
        /// One of: scheme, additive, conjunction, disjunction,
        /// selection-fixed, selection-per-use, broken-demo.
        #[arg(long)]
        protocol: String,
        #[arg(long = "M")]
        messages: usize,
        #[arg(long = "N")]
        databases: usize,
        /// Corner point for `scheme`; symmetric when omitted.
        #[arg(long, value_delimiter = ',')]
        seq: Option<Vec<usize>>,
    },
}

/// How a command ended when it did not fail outright.
enum Outcome {
    Ok,
    VerificationFailed,
    DecodeThreshold,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let out = Output::new(cli.out, cli.quiet);
    match run(&cli, &out) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(EXIT_VERIFY),
        Ok(Outcome::DecodeThreshold) => ExitCode::from(EXIT_DECODE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn run(cli: &Cli, out: &Output) -> Result<Outcome> {
    match &cli.command {
        Command::Bound { kind, links, messages } => bound(out, *kind, links, *messages),
        Command::Plan {
            messages,
            databases,
            seq,
            desired,
            repetitions,
        } => plan(out, *messages, *databases, seq, *desired, *repetitions),
        Command::Simulate { protocol } => simulate(out, cli.seed, protocol),
        Command::Sweep { what } => sweep(out, cli.seed, what),
        Command::Verify {
            what:
                Verify::Privacy {
                    protocol,
                    messages,
                    databases,
                    seq,
                },
        } => verify(out, protocol, *messages, *databases, seq.as_deref()),
    }
}

fn bound(out: &Output, kind: BoundKind, links: &Links, messages: Option<usize>) -> Result<Outcome> {
    let channels = links.resolve()?;
    let caps = capacities(&channels)?;
    let fixed = match kind {
        BoundKind::M2 => Some(2),
        BoundKind::M3 => Some(3),
        _ => None,
    };
    let m = match (fixed, messages) {
        (Some(f), Some(m)) if f != m => bail!("this bound is for M = {f}"),
        (Some(f), _) => f,
        (None, Some(m)) => m,
        (None, None) => bail!("--M is required"),
    };
    let (name, value, argmax) = match kind {
        BoundKind::Upper => {
            let ub = upper_bound(m, &caps)?;
            let mut traffic = vec![0.0; caps.len()];
            for (n, &t) in ub.traffic.values().iter().enumerate() {
                traffic[caps.physical_index(n)] = t;
            }
            ("upper", ub.value, json!(traffic))
        }
        BoundKind::Lower => {
            let lb = lower_bound(m, &caps)?;
            ("lower", lb.value, json!(lb.sequence.map(|s| s.to_string())))
        }
        BoundKind::M2 => ("m2", corner_capacity_m2(&caps), json!(null)),
        BoundKind::M3 => ("m3", corner_capacity_m3(&caps), json!(null)),
    };
    let argmax_label = match kind {
        BoundKind::Upper => "traffic",
        _ => "sequence",
    };
    let mut table = format!("{value}\n");
    if !argmax.is_null() {
        let text = match &argmax {
            serde_json::Value::Array(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        out.detail(&mut table, &format!("{argmax_label}: {text}\n"));
    }
    let csv_arg = match &argmax {
        serde_json::Value::Array(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
        serde_json::Value::String(s) => s.clone(),
        _ => String::new(),
    };
    out.emit(
        &table,
        &json!({ "bound": name, "M": m, "N": caps.len(), "value": value, argmax_label: argmax }),
        &format!("bound,M,N,value,{argmax_label}\n{name},{m},{},{value},{csv_arg}\n", caps.len()),
    );
    Ok(Outcome::Ok)
}

fn plan(out: &Output, messages: usize, databases: usize, seq: &[usize], desired: usize, reps: usize) -> Result<Outcome> {
    if seq.len() != messages {
        bail!("--seq needs {messages} entries, got {}", seq.len());
    }
    if desired == 0 || desired > messages {
        bail!("--desired must lie in 1..={messages}");
    }
    let sequence = GroupSequence::new(seq.to_vec(), databases)?;
    let plan = synthesize_logical_plan(&sequence, databases, desired - 1, reps)?;
    let corner = CornerPoint::new(&sequence);
    let mut table = String::new();
    out.detail(
        &mut table,
        &format!(
            "sequence {sequence}, L* = {}, downloads {:?}\n",
            corner.lstar, corner.downloads
        ),
    );
    table.push_str(&plan.format_table());
    let queries: Vec<Vec<String>> = plan
        .queries
        .iter()
        .map(|list| list.iter().map(|q| q.query.canonical()).collect())
        .collect();
    let mut csv = String::from("database,slot,query\n");
    for (n, list) in queries.iter().enumerate() {
        for (j, q) in list.iter().enumerate() {
            csv.push_str(&format!("{},{},{q}\n", n + 1, j + 1));
        }
    }
    out.emit(
        &table,
        &json!({
            "sequence": sequence.to_string(),
            "M": messages,
            "N": databases,
            "desired": desired,
            "repetitions": reps,
            "lstar": corner.lstar,
            "downloads": corner.downloads,
            "queries": queries,
        }),
        &csv,
    );
    Ok(Outcome::Ok)
}

fn threshold(report: &npir_core::SessionReport, limit: Option<f64>) -> Result<Outcome> {
    match limit {
        Some(l) if !(0.0..=1.0).contains(&l) => bail!("--max-failure-rate must lie in [0, 1]"),
        Some(l) if 1.0 - report.success_rate() > l => Ok(Outcome::DecodeThreshold),
        _ => Ok(Outcome::Ok),
    }
}

fn simulate(out: &Output, seed: u64, protocol: &Simulation) -> Result<Outcome> {
    match protocol {
        Simulation::Npir {
            messages,
            links,
            seq,
            nu,
            margin,
            common,
        } => {
            let channels = links.resolve()?;
            let mut cfg = SessionConfig::new(*messages, channels, *nu);
            cfg.margin = *margin;
            cfg.seed = seed;
            if let Some(values) = seq {
                cfg.sequence = Some(GroupSequence::new(values.clone(), cfg.databases())?);
            }
            let report = run_trials(&cfg, common.desired(*messages)?, common.trials)?;
            let mut value = report_value(&report);
            value["sequence"] = json!(cfg.resolve_sequence()?.to_string());
            out.emit_record(&value);
            threshold(&report, common.max_failure_rate)
        }
        Simulation::MacAdd {
            messages,
            p,
            length,
            margin,
            common,
        } => {
            let report = additive_mac_trials(
                *messages,
                *length,
                common.desired(*messages)?,
                *p,
                *margin,
                seed,
                common.trials,
            )?;
            out.emit_record(&report_value(&report));
            threshold(&report, common.max_failure_rate)
        }
        Simulation::MacAnd(args) => boolean(out, seed, BooleanMac::Conjunction, args),
        Simulation::MacOr(args) => boolean(out, seed, BooleanMac::Disjunction, args),
        Simulation::MacSel {
            messages,
            databases,
            length,
            common,
        } => {
            let (report, counts) = selection_fixed_trials(
                *messages,
                *length,
                common.desired(*messages)?,
                *databases,
                seed,
                common.trials,
            )?;
            let mut value = report_value(&report);
            value["selected_counts"] = json!(counts);
            value["capacity_fixed"] = json!(selection_capacity(*messages, *databases, SelectionVariant::Fixed));
            value["capacity_per_use"] = json!(selection_capacity(*messages, *databases, SelectionVariant::PerUse));
            out.emit_record(&value);
            threshold(&report, common.max_failure_rate)
        }
    }
}

fn boolean(out: &Output, seed: u64, kind: BooleanMac, args: &BooleanArgs) -> Result<Outcome> {
    if args.messages == 0 || args.messages > 16 {
        bail!("--M must lie in 1..=16");
    }
    if args.desired == 0 || args.desired > args.messages {
        bail!("--desired must lie in 1..={}", args.messages);
    }
    let databases = args.databases.unwrap_or_else(|| boolean_databases(args.messages));
    let rng = RngStream::new(seed);
    let store = MessageStore::random(args.messages, args.length, &mut rng.split(u64::MAX))?;
    let transcript = boolean_retrieve(kind, &store, args.desired - 1, databases, &mut rng.split(0))?;
    let report = transcript.report(&store, seed);
    let mut value = report_value(&report);
    value["negation"] = json!(render::bits(&transcript.negation));
    value["queries"] = json!(transcript.expressions);
    if out.format() == Format::Table {
        let mut table = String::new();
        for (n, e) in transcript.expressions.iter().enumerate() {
            out.detail(&mut table, &format!("DB{}: {e}\n", n + 1));
        }
        table.push_str(&render::record_table(&report_value(&report)));
        out.emit(&table, &value, "");
    } else {
        out.emit_record(&value);
    }
    Ok(if report.succeeded() { Outcome::Ok } else { Outcome::DecodeThreshold })
}

/// Grid points `k / steps` in `[0, 1/2]`, exact when `grid` divides 1.
fn grid_points(grid: f64) -> Result<Vec<f64>> {
    if !(grid > 0.0 && grid <= 0.5) {
        bail!("--grid must lie in (0, 0.5]");
    }
    let steps = (1.0 / grid).round();
    if (steps * grid - 1.0).abs() > 1e-9 {
        bail!("--grid must divide 1 (e.g. 0.01 or 0.005)");
    }
    let steps = steps as usize;
    Ok((0..=steps / 2).map(|k| k as f64 / steps as f64).collect())
}

fn sweep(out: &Output, seed: u64, what: &Sweep) -> Result<Outcome> {
    match what {
        Sweep::Region { grid } | Sweep::Capacity { grid } => {
            let region = matches!(what, Sweep::Region { .. });
            let column = if region { "region" } else { "capacity" };
            let points = grid_points(*grid)?;
            let mut csv = format!("p1,p2,{column}\n");
            let mut rows = Vec::new();
            for (a, &p1) in points.iter().enumerate() {
                for &p2 in &points[a..] {
                    let cell = if region {
                        json!(bsc_m3n2_region(p1, p2)?.to_string())
                    } else {
                        json!(bsc_m3n2_capacity(p1, p2)?)
                    };
                    let text = match &cell {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    csv.push_str(&format!("{p1},{p2},{text}\n"));
                    rows.push(json!({ "p1": p1, "p2": p2, column: cell }));
                }
            }
            // CSV is the natural table form of a sweep.
            out.emit(&csv, &json!(rows), &csv);
        }
        Sweep::Blocklength {
            messages,
            links,
            nus,
            margin,
            trials,
        } => {
            let mut cfg = SessionConfig::new(*messages, links.resolve()?, 1);
            cfg.margin = *margin;
            cfg.seed = seed;
            let rows = sweep_rate_vs_blocklength(&cfg, nus, 0, *trials)?;
            let csv = sweep_csv(&rows);
            out.emit(&csv, &json!(rows), &csv);
        }
    }
    Ok(Outcome::Ok)
}

fn verify(out: &Output, name: &str, messages: usize, databases: usize, seq: Option<&[usize]>) -> Result<Outcome> {
    let sequence = seq
        .map(|values| GroupSequence::new(values.to_vec(), databases))
        .transpose()?;
    let protocol = Protocol::parse(name, messages, databases, sequence)
        .map_err(|e| anyhow!("{e}; expected one of {}", PROTOCOL_NAMES.join(", ")))?;
    let report = verify_protocol(&protocol, messages, databases)?;
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    let mut table = format!("{verdict} {} M={messages} N={databases} max_tv={}\n", report.protocol, report.max_tv);
    for p in &report.pairs {
        out.detail(
            &mut table,
            &format!(
                "  DB{} i={} vs i={} {} {:?}: tv={}\n",
                p.database,
                p.first,
                p.second,
                if p.ordered { "ordered" } else { "sorted" },
                p.method,
                p.tv
            ),
        );
    }
    let mut csv = String::from("database,first,second,ordered,method,tv\n");
    for p in &report.pairs {
        csv.push_str(&format!(
            "{},{},{},{},{:?},{}\n",
            p.database, p.first, p.second, p.ordered, p.method, p.tv
        ));
    }
    out.emit(&table, &serde_json::to_value(&report)?, &csv);
    Ok(if report.passed { Outcome::Ok } else { Outcome::VerificationFailed })
}
