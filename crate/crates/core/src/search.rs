//! Adversarial schedule search for new/old inversions.
//!
//! A schedule is a seed for the template's delay scheduler. Schedule `i`
//! of a template is the template with seed `template.seed + i`, so the
//! search is reproducible from the template and the index alone.
//!
//! [`Scheduler::PerLink`] is the family that finds inversions: a fast
//! reader sees the servers one by one as a slow writer's messages land,
//! and a Byzantine server can tip an early read to the new value.

use alloc::vec::Vec;

use crate::check::{check_no_inversion, estimate_stab_point, InversionOptions};
#[cfg(doc)]
use crate::scenario::Scheduler;
use crate::scenario::{Scenario, ScenarioError};
use crate::sim::run;
use crate::trace::Trace;

/// Schedule `index` of `template`.
pub fn schedule(template: &Scenario, index: u64) -> Scenario {
    let mut s = template.clone();
    s.seed = template.seed.wrapping_add(index);
    s
}

/// Whether `trace` contains an inversion after its stabilization point.
pub fn has_inversion(trace: &Trace, opts: &InversionOptions) -> bool {
    let history = trace.history();
    match estimate_stab_point(trace, &history) {
        Some(stab) => check_no_inversion(&history, trace.header.register, stab, opts).failed(),
        None => false,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchReport {
    pub examined: u64,
    /// Indices of the schedules that exhibited an inversion.
    pub hits: Vec<u64>,
}

impl SearchReport {
    pub fn first(&self) -> Option<u64> {
        self.hits.first().copied()
    }
}

/// Runs schedules `0..budget` of `template`, stopping at the first hit when
/// `stop_at_first` is set.
pub fn search(
    template: &Scenario,
    budget: u64,
    opts: &InversionOptions,
    stop_at_first: bool,
) -> Result<SearchReport, ScenarioError> {
    template.validate()?;
    let mut report = SearchReport::default();
    for i in 0..budget {
        let trace = run(&schedule(template, i))?;
        report.examined += 1;
        if has_inversion(&trace, opts) {
            report.hits.push(i);
            if stop_at_first {
                break;
            }
        }
    }
    Ok(report)
}
