use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the geometric and streaming pipeline stages.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate orientation: pitch {pitch:.6} rad is inside the gimbal guard{}", fmt_at(*.timestamp))]
    DegenerateOrientation { pitch: f64, timestamp: Option<f64> },

    #[error("stream order violated at t={timestamp}: {detail}")]
    StreamOrder { timestamp: f64, detail: String },

    #[error("unwrap ambiguity at t={timestamp}: {axis} jumped {jump:.6} rad between samples")]
    UnwrapAmbiguity {
        timestamp: f64,
        axis: &'static str,
        jump: f64,
    },

    #[error("sample gap of {gap:.6} s at t={timestamp} exceeds the {max_gap} s limit")]
    Gap {
        timestamp: f64,
        gap: f64,
        max_gap: f64,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid trajectory spec: {0}")]
    InvalidSpec(String),

    #[error("stream alignment failed: {0}")]
    Alignment(String),
}

fn fmt_at(timestamp: Option<f64>) -> String {
    match timestamp {
        Some(t) => format!(" at t={t}"),
        None => String::new(),
    }
}

impl Error {
    /// Attaches a sample timestamp to errors that do not carry one yet.
    pub fn at(self, t: f64) -> Self {
        match self {
            Error::DegenerateOrientation {
                pitch,
                timestamp: None,
            } => Error::DegenerateOrientation {
                pitch,
                timestamp: Some(t),
            },
            Error::InvalidInput(msg) if !msg.contains("t=") => {
                Error::InvalidInput(format!("{msg} (at t={t})"))
            }
            other => other,
        }
    }

    /// Timestamp of the offending sample, when the error names one.
    pub fn timestamp(&self) -> Option<f64> {
        match self {
            Error::DegenerateOrientation { timestamp, .. } => *timestamp,
            Error::StreamOrder { timestamp, .. }
            | Error::UnwrapAmbiguity { timestamp, .. }
            | Error::Gap { timestamp, .. } => Some(*timestamp),
            _ => None,
        }
    }
}
