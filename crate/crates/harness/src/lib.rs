//! Scenario runner for the LOCC dynamics engines: strict TOML configs,
//! named scenarios, CSV tables with a JSON metadata sidecar.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;

pub use config::{Config, RawConfig};
pub use error::{HarnessError, Result};
pub use output::{ResultRecord, StateRow, Table};
pub use scenarios::Scenario;

/// Parses `text`, resolves it for `scenario` and applies a seed override.
pub fn load_config(text: &str, scenario: Scenario, seed: Option<u64>) -> Result<Config> {
    let mut raw = RawConfig::parse(text)?;
    if seed.is_some() {
        raw.ensemble.seed = seed;
    }
    Config::resolve(&raw, scenario)
}
