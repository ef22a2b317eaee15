//! Exact arithmetic: rationals, truncated ε-series, projective values and
//! univariate polynomials over `Q` and `F_p`.

pub mod linalg;
pub mod modp;
pub mod poly;
pub mod projective;
pub mod rational;
pub mod series;

pub use poly::Poly;
pub use projective::{limit_at_zero, Limit, ProjectiveValue};
pub use rational::{int, parse_fraction, q, to_fraction, Rational};
pub use series::{series_arith, EpsSeries, SeriesOp};

/// Default ε truncation order; callers double it once on [`ArithError::PrecisionExhausted`].
pub const DEFAULT_EPS_ORDER: i64 = 12;
/// Largest order reached by the retry protocol.
pub const MAX_EPS_ORDER: i64 = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("division by the exact zero series")]
    DivisionByZeroSeries,
    #[error("all tracked coefficients cancelled; raise the ε order")]
    PrecisionExhausted,
}
