use crate::arith::ArithError;
use crate::confinement::Certificate;
use crate::dynamics::ConfinementReport;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("{kind} takes {expected} coefficients, got {got}")]
    BadComponentArity {
        kind: String,
        expected: usize,
        got: usize,
    },
    #[error("parity violation: {0}")]
    ParityViolation(String),
    #[error("no admissible solution at period {period}: {}", certificate.reason)]
    InfeasibleSystem {
        period: usize,
        certificate: Box<Certificate>,
    },
    #[error("homographic solve degenerated to 0 = 0 at step {step}")]
    IndeterminateStep { step: i64 },
    #[error("z + zeta vanishes at n = {n}")]
    DegenerateDenominator { n: i64 },
    #[error("seed {seed} is singular at n = {n}")]
    SeedCollision { seed: String, n: i64 },
    #[error("no exit within {budget} half-steps")]
    NotConfinedWithinBudget {
        budget: usize,
        report: Box<ConfinementReport>,
    },
    #[error("infinity relation violated: {0}")]
    Unbalanced(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("bad reduction modulo every available prime")]
    PrimeCollision,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
}

pub type Result<T> = std::result::Result<T, Error>;
