//! Scenario files: TOML documents that mirror [`Scenario`] field for field.
//!
//! ```toml
//! name = "regular-async"
//! n = 9
//! t = 1
//! register = "swsr_regular"
//! timing = { model = "async", d_max = 10 }
//! tau_no_tr = 1
//! faults = [{ time = 0, scope = "all" }]
//! workload = [
//!     { time = 1, client = 1, kind = "write", value = 1001 },
//!     { time = 50, client = 1, kind = "read" },
//! ]
//! ```
//!
//! Unknown keys are rejected. The scenario hash recorded in trace files is
//! the SHA-256 of the scenario's canonical JSON encoding, so two files that
//! differ only in layout or comments hash the same.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use stabreg_core::Scenario;

use crate::Error;

pub fn parse(text: &str) -> Result<Scenario, Error> {
    let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load(path: &Path) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    parse(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn to_toml(scenario: &Scenario) -> Result<String, Error> {
    toml::to_string_pretty(scenario).map_err(|e| Error::Config(e.to_string()))
}

pub fn save(path: &Path, scenario: &Scenario) -> Result<(), Error> {
    let text = to_toml(scenario)?;
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_owned(), source })
}

/// Hex SHA-256 of the canonical JSON encoding.
pub fn hash(scenario: &Scenario) -> String {
    let bytes = serde_json::to_vec(scenario).expect("scenarios always encode");
    hex::encode(Sha256::digest(&bytes))
}
