use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value broke the named type or operation invariant.
    #[error("{invariant} violated: {detail}")]
    Domain {
        invariant: &'static str,
        detail: String,
    },

    /// Division by a quantity that vanished for the given inputs.
    #[error("degenerate input in {operation}: {detail}")]
    Degenerate {
        operation: &'static str,
        detail: String,
    },

    /// The key rate is not positive even at the most favourable point of a search.
    #[error("no positive key rate: {0}")]
    NoPositiveRate(String),

    /// Bisection needs a strictly decreasing rate across the scanned bracket.
    #[error("rate is not strictly decreasing across the scan bracket near x = {at}")]
    NotMonotonic { at: f64 },

    #[error("no measurement records at temperature {temperature_c} °C")]
    EmptySelection { temperature_c: f64 },

    #[error("{source_name} row {row}: {detail}")]
    Parse {
        source_name: String,
        row: usize,
        detail: String,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            invariant,
            detail: detail.into(),
        }
    }

    pub(crate) fn degenerate(operation: &'static str, detail: impl Into<String>) -> Self {
        Error::Degenerate {
            operation,
            detail: detail.into(),
        }
    }
}

/// Checks `0 <= value <= 1`, naming `invariant` on failure.
pub(crate) fn check_probability(invariant: &'static str, name: &str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::domain(
            invariant,
            format!("{name} must lie in [0, 1], got {value}"),
        ))
    }
}
