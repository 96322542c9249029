//! Command-line error type with the documented exit-code mapping:
//! `2` configuration error, `3` regime failure (a dominance violation or a
//! region overlap — the iteration's preconditions are not met), `4` monitor
//! or computation failure.

use quasidiag_core::Error as CoreError;
use thiserror::Error;

/// Exit code for a configuration problem (parse error, invalid value,
/// unreadable file).
pub const EXIT_CONFIG: u8 = 2;
/// Exit code for a regime failure: the configured parameters leave the
/// perturbative regime (dominance violation or region overlap).
pub const EXIT_REGIME: u8 = 3;
/// Exit code for a failed monitor or a propagated computation error.
pub const EXIT_MONITOR: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Anything wrong with the configuration file or derived setup values.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem trouble while reading inputs or writing outputs.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The configured parameters left the perturbative regime.
    #[error("regime failure: {0}")]
    Regime(CoreError),

    /// A computation failed after the config was accepted.
    #[error("computation failed: {0}")]
    Run(CoreError),

    /// One or more monitors reported failure.
    #[error("monitor failure: {}", failing.join(", "))]
    Monitors { failing: Vec<String> },
}

impl CliError {
    /// Classify a library error raised after configuration was accepted.
    pub fn from_core(e: CoreError) -> Self {
        if is_regime(&e) {
            CliError::Regime(e)
        } else {
            CliError::Run(e)
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Regime(_) => EXIT_REGIME,
            CliError::Run(_) | CliError::Monitors { .. } => EXIT_MONITOR,
        }
    }
}

/// Whether a library error signals a regime failure rather than an ordinary
/// computation problem.
pub fn is_regime(e: &CoreError) -> bool {
    matches!(
        e,
        CoreError::DominanceViolation { .. } | CoreError::RegionOverlap { .. }
    )
}
