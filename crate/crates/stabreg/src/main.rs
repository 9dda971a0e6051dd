use std::ops::Range;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stabreg::scenario_file;
use stabreg::sweep::sweep;
use stabreg::trace_file;
use stabreg::Error;
use stabreg_core::check::{check_trace, CheckOptions, InversionOptions, Property, Verdict};
use stabreg_core::scenario::{Strategy, Transport};
use stabreg_core::workload::{mixed, MixedShape};
use stabreg_core::{run, search, Scenario};

/// Simulate stabilizing Byzantine-tolerant registers and check the traces.
///
/// Exit status: 0 when every checked property holds, 1 when one fails,
/// 2 for a bad configuration, 3 for an unreadable or malformed file.
#[derive(Parser)]
#[command(name = "stabreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and check its trace.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the trace here as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a saved trace.
    Check {
        #[arg(long)]
        trace: PathBuf,
        #[command(flatten)]
        props: PropArgs,
    },
    /// Run a scenario over a range of seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Half-open seed range, e.g. `0..500`.
        #[arg(long, value_parser = parse_range)]
        seeds: Range<u64>,
        /// Replace the workload with a random mixed workload drawn per seed.
        #[arg(long)]
        mixed: bool,
        /// Sweep every adversary strategy instead of the scenario's own.
        #[arg(long)]
        all_adversaries: bool,
    },
    /// Search the seeds of the scenario's scheduler for a new/old inversion.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// Ignore read pairs separated by more than this many writes.
        #[arg(long)]
        max_separation: Option<u64>,
        /// Keep going after the first hit.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Override the adversary strategy.
    #[arg(long, value_parser = parse_strategy)]
    adversary: Option<Strategy>,
    /// Override the transport: `oracle` or `datalink:CAP`.
    #[arg(long, value_parser = parse_transport)]
    transport: Option<Transport>,
    #[arg(long, env = "STABREG_MAX_EVENTS")]
    max_events: Option<u64>,
    #[command(flatten)]
    props: PropArgs,
}

#[derive(Args)]
struct PropArgs {
    /// Comma-separated properties; the register's defaults when absent.
    #[arg(long, value_delimiter = ',', value_parser = parse_property)]
    check: Vec<Property>,
    /// Succeed only if this property fails.
    #[arg(long, value_parser = parse_property)]
    expect_fail: Option<Property>,
}

impl PropArgs {
    fn resolve(&self, scenario_kind: stabreg_core::scenario::RegisterKind) -> Vec<Property> {
        let mut props = if self.check.is_empty() { Property::defaults(scenario_kind) } else { self.check.clone() };
        if let Some(p) = self.expect_fail {
            if !props.contains(&p) {
                props.push(p);
            }
        }
        props
    }

    fn status(&self, failed: &[Property]) -> ExitCode {
        let ok = match self.expect_fail {
            Some(p) => failed.contains(&p),
            None => failed.is_empty(),
        };
        if ok {
            ExitCode::SUCCESS
        } else {
            ExitCode::from(1)
        }
    }
}

impl Common {
    fn load(&self) -> Result<Scenario, Error> {
        let mut s = scenario_file::load(&self.scenario)?;
        if let Some(a) = self.adversary {
            s.adversary.strategy = a;
        }
        if let Some(t) = self.transport {
            s.transport = t;
        }
        if let Some(m) = self.max_events {
            s.max_events = m;
        }
        s.validate()?;
        Ok(s)
    }
}

fn parse_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u64 = a.parse().map_err(|e| format!("{a}: {e}"))?;
    let b: u64 = b.parse().map_err(|e| format!("{b}: {e}"))?;
    if a >= b {
        return Err(format!("empty range {s}"));
    }
    Ok(a..b)
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    Strategy::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Strategy::ALL.iter().map(|x| x.name()).collect();
        format!("unknown adversary {s}; expected one of {}", names.join(", "))
    })
}

fn parse_property(s: &str) -> Result<Property, String> {
    Property::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Property::ALL.iter().map(|x| x.name()).collect();
        format!("unknown property {s}; expected one of {}", names.join(", "))
    })
}

fn parse_transport(s: &str) -> Result<Transport, String> {
    match s.split_once(':') {
        None if s == "oracle" => Ok(Transport::Oracle),
        Some(("datalink", cap)) => {
            cap.parse().map(|cap| Transport::Datalink { cap }).map_err(|e| format!("{cap}: {e}"))
        }
        _ => Err(format!("unknown transport {s}; expected oracle or datalink:CAP")),
    }
}

fn report(verdicts: &[Verdict]) -> Vec<Property> {
    for v in verdicts {
        println!("{}", v.summary());
    }
    verdicts.iter().filter(|v| v.failed()).map(|v| v.property).collect()
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("stabreg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    let opts = CheckOptions::strict();
    match command {
        Command::Run { common, seed, out } => {
            let mut s = common.load()?;
            if let Some(seed) = seed {
                s.seed = seed;
            }
            let trace = run(&s)?;
            if let Some(path) = out {
                trace_file::save(&path, &trace, &scenario_file::hash(&s))?;
            }
            let props = common.props.resolve(s.register);
            let failed = report(&check_trace(&trace, &props, &opts));
            Ok(common.props.status(&failed))
        }
        Command::Check { trace, props } => {
            let (_, trace) = trace_file::load(&trace)?;
            let list = props.resolve(trace.header.register);
            let failed = report(&check_trace(&trace, &list, &opts));
            Ok(props.status(&failed))
        }
        Command::Sweep { common, seeds, mixed: remix, all_adversaries } => {
            let base = common.load()?;
            let strategies = if all_adversaries { Strategy::ALL.to_vec() } else { vec![base.adversary.strategy] };
            let props = common.props.resolve(base.register);
            let build = |seed: u64, strategy: Strategy| {
                let mut s = base.clone();
                s.seed = seed;
                s.adversary.strategy = strategy;
                if remix {
                    s.workload = mixed(&MixedShape::new(s.register, s.m), seed);
                }
                s
            };
            let rep = sweep(seeds, &strategies, &props, &opts, build)?;
            print!("{}", rep.summary());
            for (run, v) in rep.failures().take(20) {
                println!("seed {} {}: {}", run.seed, run.strategy.name(), v.summary());
            }
            let mut failed: Vec<Property> = rep.failures().map(|(_, v)| v.property).collect();
            failed.dedup();
            Ok(common.props.status(&failed))
        }
        Command::Search { common, budget, max_separation, all } => {
            let s = common.load()?;
            let rep = search::search(&s, budget, &InversionOptions { max_separation }, !all)?;
            println!("examined {} schedules, {} with an inversion", rep.examined, rep.hits.len());
            if let Some(i) = rep.first() {
                println!("first: schedule {i} (seed {})", search::schedule(&s, i).seed);
            }
            let failed = if rep.hits.is_empty() { vec![] } else { vec![Property::NoInversion] };
            Ok(common.props.status(&failed))
        }
    }
}
