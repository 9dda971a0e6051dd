//! Trace files: one JSON object per line.
//!
//! The first line is the header: the scenario hash plus every field of
//! [`TraceHeader`] (seed and `tau_no_tr` among them). Each further line is
//! one event `{"time", "pid", "kind", "payload"}` in simulation order.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use stabreg_core::trace::TraceHeader;
use stabreg_core::{Trace, TraceEvent};

use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHeader {
    pub scenario_sha256: String,
    #[serde(flatten)]
    pub trace: TraceHeader,
}

pub fn write<W: Write>(mut out: W, trace: &Trace, scenario_sha256: &str) -> std::io::Result<()> {
    let header = FileHeader { scenario_sha256: scenario_sha256.to_owned(), trace: trace.header.clone() };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for ev in &trace.events {
        serde_json::to_writer(&mut out, ev)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Reads a trace; `name` only labels errors.
pub fn read<R: BufRead>(input: R, name: &Path) -> Result<(FileHeader, Trace), Error> {
    let malformed = |line: usize, msg: String| Error::Trace { path: name.to_owned(), line, msg };
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| malformed(1, "empty file".into()))?;
    let first = first.map_err(|source| Error::Io { path: name.to_owned(), source })?;
    let header: FileHeader = serde_json::from_str(&first).map_err(|e| malformed(1, e.to_string()))?;
    let mut events = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|source| Error::Io { path: name.to_owned(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: TraceEvent = serde_json::from_str(&line).map_err(|e| malformed(i + 1, e.to_string()))?;
        events.push(ev);
    }
    let trace = Trace { header: header.trace.clone(), events };
    Ok((header, trace))
}

pub fn save(path: &Path, trace: &Trace, scenario_sha256: &str) -> Result<(), Error> {
    let io = |source| Error::Io { path: path.to_owned(), source };
    let file = File::create(path).map_err(io)?;
    write(BufWriter::new(file), trace, scenario_sha256).map_err(io)
}

pub fn load(path: &Path) -> Result<(FileHeader, Trace), Error> {
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    read(BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stabreg_core::scenario::RegisterKind;
    use stabreg_core::workload::{mixed, MixedShape};

    fn scenario() -> stabreg_core::Scenario {
        let mut s = crate::scenario_file::parse(
            r#"
            n = 9
            t = 1
            register = "swsr_atomic"
            timing = { model = "async", d_max = 10 }
            tau_no_tr = 1
            faults = [{ time = 0, scope = "all" }]
            workload = []
            "#,
        )
        .unwrap();
        s.workload = mixed(&MixedShape::new(RegisterKind::SwsrAtomic, 1), 3);
        s
    }

    #[test]
    fn lines_carry_time_pid_kind_payload() {
        let trace = stabreg_core::run(&scenario()).unwrap();
        let mut buf = Vec::new();
        write(&mut buf, &trace, "abc").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let head: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
        assert_eq!(head["scenario_sha256"], "abc");
        assert_eq!(head["tau_no_tr"], 1);
        let ev: serde_json::Value = serde_json::from_str(lines.nth(1).unwrap()).unwrap();
        assert!(ev["time"].is_u64());
        assert!(ev["pid"].as_str().unwrap().contains(':'));
        assert!(ev["kind"].is_string());
    }

    #[test]
    fn garbage_is_reported_with_its_line() {
        let err = read("{\"nope\":1}\n".as_bytes(), Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Trace { line: 1, .. }));
    }
}
