//! Batches of independent runs, parallel across seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use stabreg_core::check::{check_trace, CheckOptions, Outcome, Property, Verdict};
use stabreg_core::scenario::Strategy;
use stabreg_core::{run, Scenario, ScenarioError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub seed: u64,
    pub strategy: Strategy,
    pub verdicts: Vec<Verdict>,
    pub max_events_hit: bool,
}

impl RunResult {
    pub fn failed(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| v.failed())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    /// Ordered by strategy (in request order), then seed.
    pub runs: Vec<RunResult>,
}

impl SweepReport {
    pub fn count(&self, property: Property, outcome: Outcome) -> usize {
        self.runs.iter().flat_map(|r| &r.verdicts).filter(|v| v.property == property && v.outcome == outcome).count()
    }

    /// Every failed verdict with the run it came from.
    pub fn failures(&self) -> impl Iterator<Item = (&RunResult, &Verdict)> {
        self.runs.iter().flat_map(|r| r.failed().map(move |v| (r, v)))
    }

    pub fn first_failure(&self, property: Property) -> Option<(&RunResult, &Verdict)> {
        self.failures().find(|(_, v)| v.property == property)
    }

    /// One line per property: pass / fail / n/a counts.
    pub fn summary(&self) -> String {
        let mut props: BTreeMap<&'static str, [usize; 3]> = BTreeMap::new();
        for v in self.runs.iter().flat_map(|r| &r.verdicts) {
            let slot = match v.outcome {
                Outcome::Pass => 0,
                Outcome::Fail => 1,
                Outcome::NotApplicable => 2,
            };
            props.entry(v.property.name()).or_default()[slot] += 1;
        }
        let mut out = format!("{} runs\n", self.runs.len());
        for (name, [pass, fail, na]) in props {
            let _ = writeln!(out, "{name:<18} pass {pass:>6}  fail {fail:>6}  n/a {na:>6}");
        }
        out
    }
}

/// Runs `build(seed, strategy)` for every pair and checks `props`.
pub fn sweep<F>(
    seeds: Range<u64>,
    strategies: &[Strategy],
    props: &[Property],
    opts: &CheckOptions,
    build: F,
) -> Result<SweepReport, ScenarioError>
where
    F: Fn(u64, Strategy) -> Scenario + Sync,
{
    let jobs: Vec<(Strategy, u64)> =
        strategies.iter().flat_map(|&st| seeds.clone().map(move |seed| (st, seed))).collect();
    let runs = jobs
        .into_par_iter()
        .map(|(strategy, seed)| {
            let trace = run(&build(seed, strategy))?;
            Ok(RunResult {
                seed,
                strategy,
                verdicts: check_trace(&trace, props, opts),
                max_events_hit: trace.max_events_hit(),
            })
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    Ok(SweepReport { runs })
}
