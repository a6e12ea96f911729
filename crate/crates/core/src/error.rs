use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid spacing {spacing} um exceeds l/8 = {limit} um; fringes would alias")]
    AliasedGrid { spacing: f64, limit: f64 },

    #[error("crossing angle is zero; the beams produce no fringes")]
    NoFringeConfiguration,

    #[error("fringe detection failed: {0}")]
    FringeDetection(String),

    #[error("visibility is undefined for an all-zero intensity profile")]
    UndefinedVisibility,

    #[error("wire [{lo}, {hi}] um lies outside the field window [{window_lo}, {window_hi}] um")]
    WireOutsideWindow {
        lo: f64,
        hi: f64,
        window_lo: f64,
        window_hi: f64,
    },

    #[error("wires overlap at {0} um")]
    OverlappingWires(f64),

    #[error("detector acceptance {detector} is resolved by {samples} angle samples; need at least {required}")]
    UnresolvedAcceptance {
        detector: u8,
        samples: usize,
        required: usize,
    },

    #[error("two-mode state is not normalized: |c1|^2 + |c2|^2 = {0}")]
    Unnormalized(f64),

    #[error("mismatched runs: {0}")]
    MismatchedRuns(String),

    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
