use thiserror::Error;

/// Errors raised by the geometry, graph, dynamics and metrics layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point lies outside the box on axis {axis} (coordinate {value}, box [{lo}, {hi}])")]
    OutsideBox {
        axis: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("window length {window} exceeds the available horizon {horizon}")]
    InsufficientHorizon { window: f64, horizon: f64 },

    #[error("state diverged (non-finite value) at t = {time}")]
    Divergence { time: f64 },

    #[error("linear oracle out of scope: {0}")]
    OracleScope(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
