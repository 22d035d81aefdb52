//! Flag / config-file resolution.
//!
//! Each subcommand has a clap struct of optional flags and a resolved
//! settings struct with defaults. The `--config` TOML table and the flags
//! given on the command line are merged (flags win) and deserialized into
//! the settings struct. Keys that do not survive a round trip through the
//! settings struct are unknown and rejected. The resolved settings
//! serialize back to TOML with the same key names, so an echoed config can
//! be passed to `--config` to rerun.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub fn resolve<A: Serialize, S: DeserializeOwned + Serialize>(flags: &A, config: Option<&Path>) -> Result<S, CliError> {
    let mut table = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            toml::from_str::<toml::Table>(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    let given = toml::Table::try_from(flags).map_err(|e| CliError::Usage(e.to_string()))?;
    table.extend(given);
    let settings: S = table
        .clone()
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("config: {}", e.message())))?;
    let known = toml::Table::try_from(&settings).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(key) = table.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::Usage(format!("config: unknown key `{key}`")));
    }
    Ok(settings)
}

pub fn echo<S: Serialize>(settings: &S) -> Result<String, CliError> {
    toml::to_string(settings).map_err(|e| CliError::Usage(e.to_string()))
}

/// `on`/`off` (also `true`/`false`, `1`/`0`).
pub fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        _ => Err(format!("expected on or off, got `{s}`")),
    }
}
