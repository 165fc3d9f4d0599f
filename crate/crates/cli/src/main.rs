//! `ara-lab`: batch front end for scenario runs and the lease calendar.

use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::{BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ara_lab::domain::{PlatformCatalog, Topology};
use ara_lab::orchestrator::{
    EmissionPhase, ExperimentSpec, LeaseRequest, Orchestrator, OrchestratorConfig, ResourceId, SpectrumDecl,
};
use ara_lab::scenario::{run_scenario, validate_scenario};

#[derive(Parser)]
#[command(name = "ara-lab", version, about = "Rural wireless testbed simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario config and write its results directory.
    Run {
        config: PathBuf,
        /// Results root; a directory named after the scenario is created in it.
        #[arg(long, env = "ARA_LAB_OUT", default_value = "results")]
        out: PathBuf,
    },
    /// Check a scenario config without running it.
    Validate { config: PathBuf },
    /// Lease calendar.
    Lease {
        #[command(flatten)]
        state: StateArgs,
        #[command(subcommand)]
        cmd: LeaseCmd,
    },
    /// Experiments on leases.
    Exp {
        #[command(flatten)]
        state: StateArgs,
        #[command(subcommand)]
        cmd: ExpCmd,
    },
    /// Spectrum guard.
    Guard {
        #[command(flatten)]
        state: StateArgs,
        #[command(subcommand)]
        cmd: GuardCmd,
    },
}

#[derive(Args)]
struct StateArgs {
    /// Directory holding calendar.jsonl.
    #[arg(long, env = "ARA_LAB_STATE", default_value = "ara-lab-state", global = true)]
    state_dir: PathBuf,
    /// Platform catalog TOML; the shipped one if absent.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Topology TOML; the shipped demo if absent.
    #[arg(long, global = true)]
    topology: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LeaseCmd {
    /// Request a lease; prints the granted lease or the conflict.
    Request {
        #[arg(long)]
        requester: String,
        /// `site:device`, repeatable.
        #[arg(long = "resource", required = true)]
        resources: Vec<String>,
        #[arg(long)]
        start: f64,
        #[arg(long)]
        end: f64,
        /// `low_hz:high_hz:max_power_dbm`, repeatable.
        #[arg(long = "spectrum")]
        spectrum: Vec<String>,
        /// Simulation time of the request; the calendar clock if absent.
        #[arg(long)]
        now: Option<f64>,
    },
    /// Print every lease as one JSON line.
    List,
}

#[derive(Subcommand)]
enum ExpCmd {
    /// Launch an experiment on an active lease.
    Launch {
        #[arg(long)]
        lease: u64,
        #[arg(long)]
        image_bytes: u64,
        #[arg(long, default_value = "")]
        workload: String,
        /// JSON array of emission phases.
        #[arg(long)]
        emissions: Option<PathBuf>,
        #[arg(long)]
        now: Option<f64>,
    },
    /// Print experiment state; all experiments if no id is given.
    Status {
        id: Option<u64>,
        /// Time at which to report state; the calendar clock if absent.
        #[arg(long)]
        at: Option<f64>,
    },
}

#[derive(Subcommand)]
enum GuardCmd {
    /// Run the guard over sensing slots up to `--until-slot`, print its
    /// events and check the safety invariant at every slot.
    Audit {
        #[arg(long)]
        until_slot: u64,
    },
}

struct Calendar {
    path: PathBuf,
    orch: Orchestrator,
}

impl Calendar {
    fn open(args: &StateArgs) -> Result<Self> {
        let catalog = match &args.catalog {
            Some(p) => PlatformCatalog::load(p)?,
            None => PlatformCatalog::default_catalog(),
        };
        let topology = match &args.topology {
            Some(p) => Topology::load(p, &catalog)?,
            None => Topology::demo(&catalog),
        };
        std::fs::create_dir_all(&args.state_dir)
            .with_context(|| format!("creating {}", args.state_dir.display()))?;
        let path = args.state_dir.join("calendar.jsonl");
        let records = if path.exists() {
            let f = std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            Orchestrator::read_log(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?
        } else {
            Vec::new()
        };
        let orch = Orchestrator::replay(topology, catalog, OrchestratorConfig::default(), &records);
        Ok(Self { path, orch })
    }

    fn save(&mut self) -> Result<()> {
        let f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .with_context(|| format!("opening {}", self.path.display()))?;
        self.orch.flush_log(f)?;
        Ok(())
    }
}

fn parse_resource(s: &str) -> Result<ResourceId> {
    match s.split_once(':') {
        Some((site, dev)) if !site.is_empty() && !dev.is_empty() => Ok(ResourceId::new(site, dev)),
        _ => bail!("resource '{s}' is not site:device"),
    }
}

fn parse_spectrum(s: &str) -> Result<SpectrumDecl> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("spectrum '{s}' is not low_hz:high_hz:max_power_dbm");
    }
    let num = |x: &str| x.parse::<f64>().with_context(|| format!("bad number '{x}' in '{s}'"));
    Ok(SpectrumDecl {
        freq_low_hz: num(parts[0])?,
        freq_high_hz: num(parts[1])?,
        max_power_dbm: num(parts[2])?,
    })
}

fn emit(line: &str) -> Result<()> {
    writeln!(std::io::stdout().lock(), "{line}")?;
    Ok(())
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    emit(&serde_json::to_string(v)?)
}

fn lease(state: &StateArgs, cmd: LeaseCmd) -> Result<()> {
    let mut cal = Calendar::open(state)?;
    match cmd {
        LeaseCmd::Request { requester, resources, start, end, spectrum, now } => {
            let req = LeaseRequest {
                requester,
                resources: resources.iter().map(|r| parse_resource(r)).collect::<Result<BTreeSet<_>>>()?,
                start_s: start,
                end_s: end,
                spectrum: spectrum.iter().map(|s| parse_spectrum(s)).collect::<Result<_>>()?,
            };
            let now = now.unwrap_or(cal.orch.now());
            let res = cal.orch.request_lease(req, now).map(|l| l.clone());
            cal.save()?;
            print_json(&res?)
        }
        LeaseCmd::List => {
            for l in cal.orch.leases() {
                print_json(l)?;
            }
            Ok(())
        }
    }
}

fn exp(state: &StateArgs, cmd: ExpCmd) -> Result<()> {
    let mut cal = Calendar::open(state)?;
    match cmd {
        ExpCmd::Launch { lease, image_bytes, workload, emissions, now } => {
            let emissions: Vec<EmissionPhase> = match emissions {
                Some(p) => serde_json::from_slice(&std::fs::read(&p).with_context(|| format!("reading {}", p.display()))?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => Vec::new(),
            };
            let spec = ExperimentSpec { lease_id: lease, image_bytes, workload, emissions };
            let now = now.unwrap_or(cal.orch.now());
            let res = cal.orch.launch_experiment(spec, now).map(|e| e.clone());
            cal.save()?;
            print_json(&res?)
        }
        ExpCmd::Status { id, at } => {
            let t = at.unwrap_or(cal.orch.now());
            let list: Vec<_> = match id {
                Some(id) => vec![cal.orch.experiment(id).with_context(|| format!("no experiment {id}"))?],
                None => cal.orch.experiments().iter().collect(),
            };
            for e in list {
                print_json(&serde_json::json!({
                    "id": e.id,
                    "lease": e.spec.lease_id,
                    "time_s": t,
                    "state": e.state_at(t),
                    "launch_time_s": e.launch_time_s(),
                }))?;
            }
            Ok(())
        }
    }
}

fn guard(state: &StateArgs, cmd: GuardCmd) -> Result<()> {
    let mut cal = Calendar::open(state)?;
    let GuardCmd::Audit { until_slot } = cmd;
    let dt = cal.orch.config().sensing_interval_s;
    let first = (cal.orch.now() / dt).ceil() as u64;
    let mut violations = Vec::new();
    for slot in first..=until_slot {
        for ev in cal.orch.guard_step(slot) {
            print_json(&ev)?;
        }
        if let Err(v) = cal.orch.check_safety(slot as f64 * dt) {
            violations.push(format!("slot {slot}: {v}"));
        }
    }
    cal.save()?;
    if !violations.is_empty() {
        bail!("safety invariant violated:\n{}", violations.join("\n"));
    }
    eprintln!("guard audit: slots {first}..={until_slot}, safety ok");
    Ok(())
}

fn run(config: &Path, out: &Path) -> Result<()> {
    let r = run_scenario(config, out).with_context(|| format!("running {}", config.display()))?;
    emit(&format!("{} ({}) -> {}", r.manifest.name, r.manifest.pipeline, r.dir.display()))?;
    for (name, hash) in &r.manifest.files {
        emit(&format!("  {name}  {}", &hash[..16]))?;
    }
    Ok(())
}

fn main() {
    if let Err(e) = dispatch(Cli::parse()) {
        if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == ErrorKind::BrokenPipe) {
            return;
        }
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config, out } => run(&config, &out),
        Cmd::Validate { config } => {
            let s = validate_scenario(&config).with_context(|| format!("validating {}", config.display()))?;
            emit(&format!("{}: ok ({}, seed {})", s.name, s.pipeline, s.seed))
        }
        Cmd::Lease { state, cmd } => lease(&state, cmd),
        Cmd::Exp { state, cmd } => exp(&state, cmd),
        Cmd::Guard { state, cmd } => guard(&state, cmd),
    }
}
