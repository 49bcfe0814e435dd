//! Command-line front end for `lorasg_core`: scenario files, the five
//! commands and their CSV output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{NodeRange, Report, SweepKind};
pub use config::{default_config, parse_scenario, parse_str, ConfigError, Format, ResolvedConfig};
pub use error::{exit, CliError};

/// Worker count requested through `LORASG_THREADS`, if any.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("LORASG_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "LORASG_THREADS must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(None),
    }
}
