use std::path::Path;

use stabreg::{scenario_file, trace_file};
use stabreg_core::run;
use stabreg_core::scenario::{RegisterKind, Transport};
use stabreg_core::workload::{mixed, MixedShape};

fn scenario(name: &str) -> stabreg_core::Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    scenario_file::load(&path).unwrap()
}

#[test]
fn saved_traces_load_back_identically() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["regular-async.toml", "atomic-sync.toml", "swmr-datalink.toml", "mwmr.toml"] {
        let s = scenario(name);
        let trace = run(&s).unwrap();
        let path = dir.path().join("t.jsonl");
        trace_file::save(&path, &trace, &scenario_file::hash(&s)).unwrap();
        let (header, back) = trace_file::load(&path).unwrap();
        assert_eq!(header.scenario_sha256, scenario_file::hash(&s), "{name}");
        assert_eq!(back, trace, "{name}");
        assert_eq!(back.history(), trace.history(), "{name}");
    }
}

#[test]
fn corrupted_large_values_survive_the_file_format() {
    // corruption leaves full-width sequence numbers and junk values behind
    let mut s = scenario("swmr-datalink.toml");
    s.transport = Transport::Datalink { cap: 3 };
    for seed in 0..5 {
        s.seed = seed;
        s.workload = mixed(&MixedShape::new(RegisterKind::Swmr, s.m), seed);
        let trace = run(&s).unwrap();
        let mut buf = Vec::new();
        trace_file::write(&mut buf, &trace, "x").unwrap();
        let (_, back) = trace_file::read(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, trace);
    }
}

#[test]
fn saved_scenarios_reproduce_their_trace() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("regular-async.toml");
    let path = dir.path().join("s.toml");
    scenario_file::save(&path, &s).unwrap();
    let again = scenario_file::load(&path).unwrap();
    assert_eq!(run(&again).unwrap(), run(&s).unwrap());
}
