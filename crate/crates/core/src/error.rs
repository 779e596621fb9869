use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates its documented range.
    #[error("invalid {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Background plus dark counts occupy the whole SiPM array.
    #[error("SiPM saturated{}: background {occupied:.3} of {n_pixels} pixels occupied", at_range(*range_m))]
    Saturation {
        occupied: f64,
        n_pixels: u32,
        range_m: Option<f64>,
    },

    #[error("SNR {snr:.4} is below the threshold {tnr} already at the minimum range {range_m} m")]
    NoDetection { snr: f64, tnr: f64, range_m: f64 },

    #[error("SNR {snr:.4} still exceeds the threshold {tnr} at the range cap {range_m} m")]
    UnboundedRange { snr: f64, tnr: f64, range_m: f64 },

    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),

    /// Log-space finite differences are undefined for a parameter that is zero.
    #[error("parameter {0:?} is zero; elasticity is undefined")]
    ZeroParameter(String),
}

fn at_range(range_m: Option<f64>) -> String {
    match range_m {
        Some(r) => format!(" at {r} m"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }

    /// Attach the range being evaluated to a saturation error.
    pub(crate) fn at_range(self, range: f64) -> Self {
        match self {
            Error::Saturation { occupied, n_pixels, .. } => Error::Saturation {
                occupied,
                n_pixels,
                range_m: Some(range),
            },
            other => other,
        }
    }
}
