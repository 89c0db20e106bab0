use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Inconsistent lengths or dimensions in the input.
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("map has eigenvalue 1")]
    EigenvalueOne,
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("system is not contracting: max product norm {factor} at depth {depth}")]
    NotContracting { factor: f64, depth: usize },
    #[error("enumeration of {needed} items exceeds the budget of {budget}")]
    Budget { needed: u128, budget: usize },
    #[error("value {value} outside the domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },
    #[error("no sign change of P on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("wedge undefined for identical streams")]
    WedgeUndefined,
    #[error("unreliable stable directions: {0}")]
    Unreliable(String),
    #[error("no invariant cone found at this margin: {0}")]
    NoInvariantCone(String),
    #[error("smooth case: {0}")]
    SmoothCase(String),
    #[error("no crossing in the t-grid, widen t-grid: {0}")]
    NoCrossing(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Failed(String),
}
