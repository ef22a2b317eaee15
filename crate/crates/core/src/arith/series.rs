//! Truncated Laurent series in a formal infinitesimal ε.
//!
//! A series is `Σ coeffs[i]·ε^(lead+i) + O(ε^(trunc+1))`. Precision is tracked
//! absolutely through `trunc` and propagates relatively through products and
//! quotients, so cancellation in a difference shows up as lost relative precision.

use super::rational::{to_fraction, Rational};
use super::ArithError;
use num_traits::{One, Zero};
use std::fmt;

/// Truncation order marking the canonical exact zero.
const EXACT: i64 = i64::MAX / 4;
/// Relative precision kept when dividing two exactly known series.
const EXACT_QUOTIENT_TERMS: i64 = 4 * super::MAX_EPS_ORDER;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpsSeries {
    lead: i64,
    coeffs: Vec<Rational>,
    trunc: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl EpsSeries {
    /// Builds `Σ coeffs[i] ε^(lead+i)` known up to `ε^trunc`.
    pub fn new(lead: i64, coeffs: Vec<Rational>, trunc: i64) -> Self {
        let mut s = EpsSeries {
            lead,
            coeffs,
            trunc,
        };
        s.normalize();
        s
    }

    /// The canonical zero: exactly zero at every order.
    pub fn exact_zero() -> Self {
        EpsSeries {
            lead: EXACT,
            coeffs: Vec::new(),
            trunc: EXACT,
        }
    }

    /// Zero known only up to `ε^order`.
    pub fn zero(order: i64) -> Self {
        EpsSeries {
            lead: order + 1,
            coeffs: Vec::new(),
            trunc: order,
        }
    }

    /// A constant known to every order.
    pub fn exact(c: Rational) -> Self {
        Self::new(0, vec![c], EXACT)
    }

    pub fn constant(c: Rational, order: i64) -> Self {
        Self::new(0, vec![c], order)
    }

    /// `c·ε^k` known up to `ε^order`.
    pub fn monomial(c: Rational, k: i64, order: i64) -> Self {
        Self::new(k, vec![c], order)
    }

    /// `c + ε`, the standard perturbation of a singular value.
    pub fn perturbed(c: Rational, order: i64) -> Self {
        Self::new(0, vec![c, Rational::one()], order)
    }

    fn normalize(&mut self) {
        let keep = (self.trunc - self.lead + 1).max(0) as usize;
        self.coeffs.truncate(keep);
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
        let lz = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lz > 0 {
            self.coeffs.drain(..lz);
            self.lead += lz as i64;
        }
        if self.coeffs.is_empty() {
            self.lead = self.trunc.saturating_add(1);
        }
    }

    pub fn lead_exp(&self) -> i64 {
        self.lead
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn trunc_order(&self) -> i64 {
        self.trunc
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coeffs.is_empty() && self.trunc >= EXACT
    }

    /// True when every tracked coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Valuation of a nonzero series.
    pub fn valuation(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.lead)
    }

    /// Lower bound on the valuation; for a zero series this is `trunc + 1`.
    pub fn min_valuation(&self) -> i64 {
        self.lead
    }

    /// Number of tracked terms past the leading one; `None` for exact zero.
    pub fn relative_precision(&self) -> Option<i64> {
        if self.is_exact_zero() {
            None
        } else {
            Some(self.trunc - self.lead)
        }
    }

    /// Coefficient of `ε^k` (zero outside the stored range).
    pub fn coeff(&self, k: i64) -> Rational {
        let i = k - self.lead;
        if i < 0 || i as usize >= self.coeffs.len() {
            Rational::zero()
        } else {
            self.coeffs[i as usize].clone()
        }
    }

    pub fn leading_coeff(&self) -> Option<&Rational> {
        self.coeffs.first()
    }

    /// Multiplies by `ε^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_exact_zero() {
            return self.clone();
        }
        EpsSeries {
            lead: self.lead + k,
            coeffs: self.coeffs.clone(),
            trunc: self.trunc + k,
        }
    }

    pub fn neg(&self) -> Self {
        EpsSeries {
            lead: self.lead,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            trunc: self.trunc,
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return EpsSeries::exact_zero();
        }
        EpsSeries {
            lead: self.lead,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
            trunc: self.trunc,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_exact_zero() {
            return other.clone();
        }
        if other.is_exact_zero() {
            return self.clone();
        }
        let trunc = self.trunc.min(other.trunc);
        let lead = self.lead.min(other.lead);
        if lead > trunc {
            return EpsSeries::zero(trunc);
        }
        let extent = (self.lead + self.coeffs.len() as i64)
            .max(other.lead + other.coeffs.len() as i64)
            - lead;
        let len = (trunc - lead + 1).min(extent).max(0) as usize;
        let mut c = vec![Rational::zero(); len];
        for (src, off) in [(self, self.lead - lead), (other, other.lead - lead)] {
            for (i, v) in src.coeffs.iter().enumerate() {
                let j = off as usize + i;
                if j < len {
                    c[j] += v;
                }
            }
        }
        EpsSeries::new(lead, c, trunc)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_exact_zero() || other.is_exact_zero() {
            return EpsSeries::exact_zero();
        }
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return EpsSeries::zero(self.trunc + other.trunc + 1),
            (true, false) => return EpsSeries::zero(self.trunc + other.lead),
            (false, true) => return EpsSeries::zero(other.trunc + self.lead),
            _ => {}
        }
        let lead = self.lead + other.lead;
        let trunc = (self.trunc + other.lead).min(other.trunc + self.lead);
        let extent = (self.coeffs.len() + other.coeffs.len() - 1) as i64;
        let len = (trunc - lead + 1).min(extent).max(0) as usize;
        let mut c = vec![Rational::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                c[i + j] += a * b;
            }
        }
        EpsSeries::new(lead, c, trunc)
    }

    pub fn div(&self, other: &Self) -> Result<Self, ArithError> {
        if other.is_exact_zero() {
            return Err(ArithError::DivisionByZeroSeries);
        }
        if other.is_zero() {
            return Err(ArithError::PrecisionExhausted);
        }
        if self.is_exact_zero() {
            return Ok(EpsSeries::exact_zero());
        }
        if self.is_zero() {
            return Ok(EpsSeries::zero(self.trunc - other.lead));
        }
        let lead = self.lead - other.lead;
        // Quotients of exact series are infinite; keep a bounded tail.
        let rel = (self.trunc - self.lead)
            .min(other.trunc - other.lead)
            .min(EXACT_QUOTIENT_TERMS);
        let len = (rel + 1).max(0) as usize;
        let b0 = &other.coeffs[0];
        let mut c: Vec<Rational> = Vec::with_capacity(len);
        for k in 0..len {
            let mut acc = self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero);
            for j in 1..=k.min(other.coeffs.len().saturating_sub(1)) {
                acc -= &other.coeffs[j] * &c[k - j];
            }
            c.push(acc / b0);
        }
        Ok(EpsSeries::new(lead, c, lead + rel))
    }

    /// Re-truncates to absolute order `order` (only ever lowers precision).
    pub fn truncate(&self, order: i64) -> Self {
        if order >= self.trunc {
            return self.clone();
        }
        EpsSeries::new(self.lead, self.coeffs.clone(), order)
    }
}

/// One arithmetic operation on two series.
pub fn series_arith(a: &EpsSeries, b: &EpsSeries, op: SeriesOp) -> Result<EpsSeries, ArithError> {
    Ok(match op {
        SeriesOp::Add => a.add(b),
        SeriesOp::Sub => a.sub(b),
        SeriesOp::Mul => a.mul(b),
        SeriesOp::Div => a.div(b)?,
    })
}

impl fmt::Display for EpsSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let e = self.lead + i as i64;
            match e {
                0 => write!(f, "{}", to_fraction(c))?,
                1 => write!(f, "({})e", to_fraction(c))?,
                _ => write!(f, "({})e^{}", to_fraction(c), e)?,
            }
        }
        if !first {
            write!(f, " + ")?;
        }
        write!(f, "O(e^{})", self.trunc + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::{int, q};
    use proptest::prelude::*;

    fn s(lead: i64, c: &[i64], trunc: i64) -> EpsSeries {
        EpsSeries::new(lead, c.iter().map(|&v| int(v)).collect(), trunc)
    }

    #[test]
    fn difference_of_squares() {
        let a = s(0, &[1, 1], 8);
        let b = s(0, &[1, -1], 8);
        assert_eq!(a.mul(&b), s(0, &[1, 0, -1], 8));
    }

    #[test]
    fn monomial_inverse() {
        let e = EpsSeries::monomial(int(1), 1, 6);
        let inv = EpsSeries::constant(int(1), 6).div(&e).unwrap();
        assert_eq!(inv.lead_exp(), -1);
        assert_eq!(inv.coeffs(), &[int(1)]);
        assert_eq!(inv.trunc_order(), 4);
    }

    #[test]
    fn long_division_matches_hand_expansion() {
        // (1+e)/(1-e) = 1 + 2e + 2e^2 + 2e^3 + O(e^4)
        let r = s(0, &[1, 1], 3).div(&s(0, &[1, -1], 3)).unwrap();
        assert_eq!(r, s(0, &[1, 2, 2, 2], 3));
    }

    #[test]
    fn division_errors() {
        let a = s(0, &[1], 5);
        assert_eq!(
            a.div(&EpsSeries::exact_zero()),
            Err(ArithError::DivisionByZeroSeries)
        );
        let c = s(0, &[1, 1], 3).sub(&s(0, &[1, 1], 3));
        assert!(c.is_zero() && !c.is_exact_zero());
        assert_eq!(a.div(&c), Err(ArithError::PrecisionExhausted));
    }

    #[test]
    fn cancellation_lowers_relative_precision() {
        let a = s(0, &[2, 3, 5], 6);
        let b = s(0, &[2, 3, 7], 6);
        let d = a.sub(&b);
        assert_eq!(d.valuation(), Some(2));
        assert_eq!(d.relative_precision(), Some(4));
    }

    #[test]
    fn zero_times_series_keeps_order() {
        let z = EpsSeries::zero(5);
        let a = s(-2, &[1], 5);
        let p = z.mul(&a);
        assert!(p.is_zero());
        assert_eq!(p.trunc_order(), 3);
    }

    fn arb_series() -> impl Strategy<Value = EpsSeries> {
        (
            -2i64..3,
            prop::collection::vec((-9i64..10, 1i64..6), 1..6),
            4i64..9,
        )
            .prop_map(|(lead, cs, rel)| {
                let mut coeffs: Vec<Rational> = cs.into_iter().map(|(n, d)| q(n, d)).collect();
                if coeffs[0].is_zero() {
                    coeffs[0] = int(1);
                }
                EpsSeries::new(lead, coeffs, lead + rel)
            })
    }

    proptest! {
        #[test]
        fn quotient_times_divisor(a in arb_series(), b in arb_series()) {
            let r = a.div(&b).unwrap();
            let back = r.mul(&b);
            prop_assert!(back.sub(&a).is_zero());
            prop_assert!(back.trunc_order() <= a.trunc_order());
        }

        #[test]
        fn product_commutes_and_distributes(a in arb_series(), b in arb_series(), c in arb_series()) {
            prop_assert_eq!(a.mul(&b), b.mul(&a));
            let lhs = a.mul(&b.add(&c));
            let rhs = a.mul(&b).add(&a.mul(&c));
            prop_assert!(lhs.sub(&rhs).is_zero());
        }
    }
}
