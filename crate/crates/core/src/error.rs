//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Two grid-valued arguments live on grids of different size.
    #[error("grid size mismatch: expected {expected} nodes, got {got}")]
    GridMismatch { expected: usize, got: usize },

    /// Circle grid construction rejected the node count.
    #[error("invalid circle grid: n = {n} (need n >= 4 and n even)")]
    InvalidGrid { n: usize },

    /// Fourier cutoff too large for the grid resolution.
    #[error("basis cutoff K = {k} not resolvable on an {n}-node grid (need 2K < n/2)")]
    BasisUnresolvable { k: usize, n: usize },

    /// Negative concentration passed to a Bessel / von Mises evaluation.
    #[error("negative kernel concentration kappa = {kappa}")]
    NegativeKappa { kappa: f64 },

    /// A grid function was handed non-finite sample values.
    #[error("non-finite value in grid function")]
    NonFinite,

    /// The state blew up during time integration.
    #[error("state diverged during integration at time step {step}")]
    Divergence { step: usize },

    /// A probe solve blew up; carries the actuation channel being probed.
    #[error("probe along channel {channel} diverged at time step {step}")]
    ProbeDivergence { step: usize, channel: usize },

    /// Index outside the valid range.
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    /// A configuration value violates a documented contract.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
