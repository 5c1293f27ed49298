use serde::Serialize;
use serde_json::Value;

use dbl_core::Error;

pub const SCHEMA: &str = "1";

#[derive(Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: u128,
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub subcommand: String,
    pub inputs: Value,
    pub verdicts: Vec<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timing: Timing,
    pub exit_status: i32,
}

/// Failure modes of a subcommand before any verdict is reached.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or out-of-range input: exit 2.
    Input(String),
    /// A property check raised instead of returning a verdict: exit 1.
    Violation(String, Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if is_input_error(&e) {
            Failure::Input(e.to_string())
        } else {
            let detail = Value::String(format!("{e:?}"));
            Failure::Violation(e.to_string(), detail)
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

/// Errors caused by what the user asked for, as opposed to a law failing.
pub fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidInput(_)
            | Error::SizeExceeded(_)
            | Error::SizeMismatch { .. }
            | Error::UnsupportedRing(_)
            | Error::UnsupportedValue(_)
            | Error::UnsupportedHom { .. }
            | Error::ElementOutOfRange { .. }
            | Error::NotClopen(_)
            | Error::NotTotallyDisconnected
            | Error::RingMismatch { .. }
            | Error::ModeMismatch
            | Error::SpaceMismatch
            | Error::Overflow
    )
}

pub fn verdict(name: &str, pass: bool, detail: impl Serialize) -> Verdict {
    Verdict {
        name: name.to_string(),
        pass,
        detail: serde_json::to_value(detail)
            .unwrap_or_else(|e| Value::String(format!("unserializable: {e}"))),
    }
}
