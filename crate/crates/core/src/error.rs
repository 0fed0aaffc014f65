use thiserror::Error;

/// Errors produced by the solvers in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root-finding problem has no solution on its bracket.
    #[error("infeasible: {what} (boundary value {boundary:.3e})")]
    Infeasible { what: String, boundary: f64 },

    /// Adaptive quadrature hit its depth limit without meeting tolerance.
    #[error("quadrature did not converge on [{a}, {b}]: achieved residual {residual:.3e}")]
    Quadrature { a: f64, b: f64, residual: f64 },

    /// A numerical routine failed (iteration limit, loss of feasibility, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Distribution or run configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// `g(mu) mu > G(mu)` fails, so the uninformative experiment is the unique best reply.
    #[error("informativeness assumption fails: g(mu) mu - G(mu) = {margin:.6e} <= 0")]
    Assumption { margin: f64 },

    /// The outside-option CDF fails the convex-concave shape check.
    #[error("outside option is not S-shaped: {0}")]
    NotSShaped(String),

    /// The double-censorship construction for a given top atom is infeasible.
    #[error("MIC construction infeasible at y = {y}: {condition}")]
    MicInfeasible { y: f64, condition: MicCondition },

    /// A price-function certificate could not be built.
    #[error("certificate construction failed: {0}")]
    Certificate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Feasibility condition of the MIC construction that was violated first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MicCondition {
    /// No `x` in `[0, r0]` with `(x, y)` on the tangency set, i.e. `x > 0` fails.
    XPositive,
    /// The intermediate pooling interval would need `s < 0`.
    SNonNegative,
    /// `x <= x*` (equivalently `s <= x* <= t`) fails.
    XBelowFullDelegation,
    /// The top atom is outside `[y*, 1)`.
    TopAtomRange,
}

impl std::fmt::Display for MicCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MicCondition::XPositive => "x > 0",
            MicCondition::SNonNegative => "s >= 0",
            MicCondition::XBelowFullDelegation => "x <= x*",
            MicCondition::TopAtomRange => "y* <= y < 1",
        };
        f.write_str(s)
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
