use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical pipelines.
///
/// Verdicts that are data (validation failures, comparison outcomes) are
/// never reported through this type; they live in the diagnostic records.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An integrand or nonlinearity produced a non-finite value.
    Evaluation { abscissa: f64 },
    /// Argument outside the domain of an operation.
    Domain(String),
    /// The tail-exponent fit oscillates; a larger truncation point is needed.
    Indeterminate { t_max: f64, spread: f64 },
    /// `∫_w^∞ g^{-1/(p-1)}` diverges, so the implicit transform is undefined.
    TransformUndefined { label: String, p: f64, exponent: f64 },
    /// Target value outside the attainable range of a monotone transform.
    Range { z: f64, at_min: f64, at_max: f64 },
    /// Grid construction failed.
    Grid(String),
    /// The requested core margin leaves no nodes.
    MarginTooLarge { margin: f64, inradius: f64 },
    /// Energy evaluation requested without a potential.
    EnergyUnavailable,
    /// Energy or residual became non-finite.
    Divergence { iteration: usize },
    /// Too few samples for a least-squares fit.
    InsufficientData { found: usize, needed: usize },
    /// A documented precondition does not hold.
    Precondition(String),
    /// Escalation levels are not pointwise ordered.
    MonotonicityBroken { level: usize, node: usize, drop: f64 },
    /// Keller–Osserman fails, so no boundary barrier exists.
    BarrierUndefined { label: String },
    /// The radial upper-solution integral diverges.
    NoUpperSolution { exponent: f64 },
    /// Expression or nonlinearity-spec parse failure.
    Parse { position: usize, message: String },
    /// A nodewise operation failed at `node`.
    AtNode { node: usize, source: Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Evaluation { abscissa } => {
                write!(f, "non-finite value encountered at t = {abscissa}")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Indeterminate { t_max, spread } => write!(
                f,
                "tail exponent oscillates near T = {t_max:e} (spread {spread:.3e}); retry with a larger T_max"
            ),
            Error::TransformUndefined { label, p, exponent } => write!(
                f,
                "transform undefined for g = {label}, p = {p}: tail of g^(-1/(p-1)) decays with exponent {exponent:.4} <= 1.01"
            ),
            Error::Range { z, at_min, at_max } => write!(
                f,
                "value {z} outside attainable range ({at_max}, {at_min})"
            ),
            Error::Grid(msg) => write!(f, "grid construction: {msg}"),
            Error::MarginTooLarge { margin, inradius } => write!(
                f,
                "core margin {margin} leaves no nodes (inradius {inradius})"
            ),
            Error::EnergyUnavailable => {
                write!(f, "energy unavailable: system has no joint potential F")
            }
            Error::Divergence { iteration } => {
                write!(f, "non-finite energy or residual at iteration {iteration}")
            }
            Error::InsufficientData { found, needed } => {
                write!(f, "insufficient data: {found} samples, need {needed}")
            }
            Error::Precondition(msg) => write!(f, "precondition violated: {msg}"),
            Error::MonotonicityBroken { level, node, drop } => write!(
                f,
                "monotonicity broken at level {level}, node {node}: drop {drop:.3e}"
            ),
            Error::BarrierUndefined { label } => write!(
                f,
                "barrier undefined: {label} fails the Keller-Osserman condition"
            ),
            Error::NoUpperSolution { exponent } => write!(
                f,
                "no radial upper solution: outer integrand decays with exponent {exponent:.4} <= 1.01"
            ),
            Error::Parse { position, message } => {
                write!(f, "parse error at offset {position}: {message}")
            }
            Error::AtNode { node, source } => write!(f, "at node {node}: {source}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
