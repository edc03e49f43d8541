//! Deterministic discrete-event simulator for whole deployments.

mod engine;
pub mod log;
pub mod report;
pub mod scenario;

use std::path::Path;

pub use engine::{derive_seed, run, SimError, SimOptions};
pub use log::{parse_log, write_log, Direction, LogRecord, Verdict};
pub use report::{AttackRow, SimReport};
pub use scenario::{load_scenario, parse_scenario, Action, AttackKind, AttackSpec, Scenario, ScenarioError};

/// Scenarios shipped with the crate, by name.
pub const BUNDLED: [(&str, &str); 6] = [
    ("demo", include_str!("../../scenarios/demo.toml")),
    ("replay", include_str!("../../scenarios/replay.toml")),
    ("modify", include_str!("../../scenarios/modify.toml")),
    ("fake_node", include_str!("../../scenarios/fake_node.toml")),
    ("impersonate", include_str!("../../scenarios/impersonate.toml")),
    ("trustid-200", include_str!("../../scenarios/trustid-200.toml")),
];

pub fn bundled(name: &str) -> Option<Result<Scenario, ScenarioError>> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| parse_scenario(text, None))
}

/// A bundled name, or else a path to a scenario file.
pub fn resolve_scenario(arg: &str) -> Result<Scenario, ScenarioError> {
    match bundled(arg) {
        Some(s) => s,
        None => load_scenario(Path::new(arg)),
    }
}

/// Runs a scenario and builds its report from the resulting log.
pub fn run_to_report(scenario: &Scenario, opts: &SimOptions) -> Result<(Vec<LogRecord>, SimReport), SimError> {
    let records = run(scenario, opts, None)?;
    let report = SimReport::from_log(&records).map_err(SimError::Config)?;
    Ok((records, report))
}
