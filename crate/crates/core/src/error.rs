//! Error types shared across the library.
//!
//! Every fallible public entry point returns [`Error`]. The variants are
//! deliberately coarse so that callers (notably the CLI) can map them onto
//! process exit codes without inspecting message strings:
//!
//! * [`Error::Validation`] — bad input (config values, malformed weather
//!   rows, out-of-range temperatures). Carries *all* detected violations,
//!   not just the first.
//! * [`Error::Convergence`] — an iterative solver failed to settle within
//!   its iteration budget. Carries enough context to debug the failure.
//! * [`Error::Io`] — file-system or serialization problems.

use std::fmt;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Top-level error type for the simulation library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// One or more input-validation failures.
    ///
    /// Validation routines accumulate every violation they find before
    /// returning, so a user can fix a config file in one pass.
    #[error("{}", format_violations(.violations))]
    Validation {
        /// Human-readable description of each violation.
        violations: Vec<String>,
    },

    /// An iterative solver exhausted its iteration budget.
    #[error("{context}: no convergence after {iterations} iterations (last iterates: {history:?})")]
    Convergence {
        /// Which solver failed and under what conditions.
        context: String,
        /// Number of iterations performed.
        iterations: usize,
        /// Trailing iterate values, most recent last, for diagnosis.
        history: Vec<f64>,
    },

    /// File-system or serialization failure.
    #[error("{context}: {source}")]
    Io {
        /// What was being read or written.
        context: String,
        /// Underlying error.
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Builds a validation error from a single violation.
    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation {
            violations: vec![message.into()],
        }
    }

    /// Builds a validation error from a list of violations.
    ///
    /// The list must be non-empty; an empty list indicates a logic error in
    /// the caller (validation passed but an error was still constructed).
    pub fn validations(violations: Vec<String>) -> Self {
        debug_assert!(!violations.is_empty());
        Error::Validation { violations }
    }

    /// Wraps an I/O error with context about the operation that failed.
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}

fn format_violations(violations: &[String]) -> String {
    struct List<'a>(&'a [String]);
    impl fmt::Display for List<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match self.0.len() {
                0 => write!(f, "validation failed"),
                1 => write!(f, "{}", self.0[0]),
                n => {
                    write!(f, "{n} validation errors:")?;
                    for v in self.0 {
                        write!(f, "\n  - {v}")?;
                    }
                    Ok(())
                }
            }
        }
    }
    List(violations).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_violation_displays_bare_message() {
        let err = Error::validation("flow rate must be positive");
        assert_eq!(err.to_string(), "flow rate must be positive");
    }

    #[test]
    fn multiple_violations_are_all_listed() {
        let err = Error::validations(vec![
            "flow rate must be positive".into(),
            "tank height must be positive".into(),
        ]);
        let text = err.to_string();
        assert!(text.contains("2 validation errors"));
        assert!(text.contains("flow rate must be positive"));
        assert!(text.contains("tank height must be positive"));
    }

    #[test]
    fn convergence_error_reports_context_and_history() {
        let err = Error::Convergence {
            context: "charge loop".into(),
            iterations: 25,
            history: vec![51.0, 50.5, 50.2],
        };
        let text = err.to_string();
        assert!(text.contains("charge loop"));
        assert!(text.contains("25"));
        assert!(text.contains("50.2"));
    }
}
