use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// `|m|` sits on `(k pi / T)^2`; the reflection kernel does not exist there.
    #[error("resonant parameter m = {m} (|m| = ({k} pi / T)^2 with T = {period_half})")]
    EigenvalueResonance { m: f64, period_half: f64, k: u64 },

    #[error("point ({t}, {s}) lies outside [-{period_half}, {period_half}]^2")]
    OutOfDomain { t: f64, s: f64, period_half: f64 },

    #[error("quadrature did not converge: estimate {estimate}, achieved error {achieved}")]
    Quadrature { estimate: f64, achieved: f64 },

    #[error("linear problem has no unique solution: {0}")]
    NonUniqueSolution(String),

    #[error("bracket [{lo}, {hi}] does not straddle a sign change")]
    Bracket { lo: f64, hi: f64 },

    #[error("no root found: {0}")]
    NotFound(String),

    #[error("parameters outside the constant-sign region: {0}")]
    InvalidRegion(String),

    #[error("iteration did not converge after {iterations} steps (last update {last_update:e})")]
    NonConvergence { iterations: usize, last_update: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
