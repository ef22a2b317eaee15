//! Points of the projective line with ε-series coordinates.

use super::rational::{to_fraction, Rational};
use super::series::EpsSeries;
use super::ArithError;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// `[num : den]`. Normalization is deferred to [`ProjectiveValue::normalized`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectiveValue {
    pub num: EpsSeries,
    pub den: EpsSeries,
}

/// The ε → 0 value of a projective point.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Limit {
    Finite(Rational),
    Infinity,
}

impl ProjectiveValue {
    pub fn new(num: EpsSeries, den: EpsSeries) -> Self {
        ProjectiveValue { num, den }
    }

    pub fn finite(num: EpsSeries, order: i64) -> Self {
        ProjectiveValue {
            num,
            den: EpsSeries::constant(Rational::one(), order),
        }
    }

    pub fn from_rational(r: Rational, order: i64) -> Self {
        Self::finite(EpsSeries::constant(r, order), order)
    }

    pub fn infinity(order: i64) -> Self {
        ProjectiveValue {
            num: EpsSeries::constant(Rational::one(), order),
            den: EpsSeries::exact_zero(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.num.is_zero() && self.den.is_zero()
    }

    /// Divides both coordinates by the common power of ε.
    pub fn normalized(&self) -> Self {
        let v = self.num.min_valuation().min(self.den.min_valuation());
        if v == 0 || v >= i64::MAX / 8 {
            return self.clone();
        }
        ProjectiveValue {
            num: self.num.shift(-v),
            den: self.den.shift(-v),
        }
    }

    /// [`normalized`](Self::normalized), then scaled so the coordinate of
    /// lowest valuation (the denominator on ties) starts with `1`.
    pub fn reduced(&self) -> Self {
        let p = self.normalized();
        let pick = match (p.num.valuation(), p.den.valuation()) {
            (_, Some(0)) => p.den.leading_coeff(),
            (Some(0), _) => p.num.leading_coeff(),
            _ => None,
        };
        match pick {
            Some(c) if !c.is_one() => {
                let inv = c.recip();
                ProjectiveValue {
                    num: p.num.scale(&inv),
                    den: p.den.scale(&inv),
                }
            }
            _ => p,
        }
    }

    /// Affine chart form: `[num/den : 1]` when the denominator is a unit,
    /// otherwise `[1 : den/num]`. Keeps coefficient heights at those of the
    /// value itself.
    pub fn affine(&self) -> Result<Self, ArithError> {
        let p = self.normalized();
        let one = || EpsSeries::exact(Rational::one());
        match (p.num.valuation(), p.den.valuation()) {
            (_, Some(0)) => Ok(ProjectiveValue {
                num: p.num.div(&p.den)?,
                den: one(),
            }),
            (Some(0), _) => Ok(ProjectiveValue {
                num: one(),
                den: p.den.div(&p.num)?,
            }),
            _ => Err(ArithError::PrecisionExhausted),
        }
    }

    /// Smallest relative precision of the two coordinates.
    pub fn precision(&self) -> i64 {
        [&self.num, &self.den]
            .iter()
            .filter_map(|s| s.relative_precision())
            .min()
            .unwrap_or(i64::MAX)
    }

    pub fn limit_at_zero(&self) -> Result<Limit, ArithError> {
        limit_at_zero(self)
    }

    /// Cross-multiplication equality up to tracked order.
    pub fn same_point(&self, other: &Self) -> bool {
        self.num
            .mul(&other.den)
            .sub(&other.num.mul(&self.den))
            .is_zero()
    }
}

/// The ε → 0 limit. Returns [`ArithError::PrecisionExhausted`] when both
/// coordinates vanish to every tracked order (the indeterminate case).
pub fn limit_at_zero(v: &ProjectiveValue) -> Result<Limit, ArithError> {
    let (n, d) = (&v.num, &v.den);
    match (n.valuation(), d.valuation()) {
        (Some(vn), Some(vd)) => Ok(if vd < vn {
            Limit::Finite(Rational::zero())
        } else if vd > vn {
            Limit::Infinity
        } else {
            Limit::Finite(n.leading_coeff().unwrap() / d.leading_coeff().unwrap())
        }),
        (None, Some(vd)) if n.trunc_order() >= vd => Ok(Limit::Finite(Rational::zero())),
        (Some(vn), None) if d.trunc_order() >= vn => Ok(Limit::Infinity),
        _ => Err(ArithError::PrecisionExhausted),
    }
}

impl Limit {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Limit::Finite(r) => Some(r),
            Limit::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Limit::Infinity)
    }
}

impl fmt::Display for Limit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Limit::Finite(r) => write!(f, "{}", to_fraction(r)),
            Limit::Infinity => write!(f, "inf"),
        }
    }
}

impl Serialize for Limit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Limit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s == "inf" {
            return Ok(Limit::Infinity);
        }
        super::rational::parse_fraction(&s)
            .map(Limit::Finite)
            .ok_or_else(|| serde::de::Error::custom(format!("bad limit `{s}`")))
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
    fn basic_limits() {
        let one = s(0, &[1], 6);
        let eps = s(1, &[1], 6);
        assert_eq!(
            ProjectiveValue::new(eps.clone(), one.clone()).limit_at_zero(),
            Ok(Limit::Finite(int(0)))
        );
        assert_eq!(
            ProjectiveValue::new(one.clone(), eps.clone()).limit_at_zero(),
            Ok(Limit::Infinity)
        );
        let e_e2 = s(1, &[1, 1], 6);
        assert_eq!(
            ProjectiveValue::new(e_e2, eps).limit_at_zero(),
            Ok(Limit::Finite(int(1)))
        );
    }

    #[test]
    fn indeterminate_is_precision_exhausted() {
        let z = EpsSeries::zero(4);
        let v = ProjectiveValue::new(z.clone(), z);
        assert_eq!(v.limit_at_zero(), Err(ArithError::PrecisionExhausted));
        // 0/ε^5 with the zero known only to ε^4 is undecidable.
        let v = ProjectiveValue::new(EpsSeries::zero(4), s(5, &[1], 9));
        assert_eq!(v.limit_at_zero(), Err(ArithError::PrecisionExhausted));
        let v = ProjectiveValue::new(EpsSeries::zero(6), s(5, &[1], 9));
        assert_eq!(v.limit_at_zero(), Ok(Limit::Finite(int(0))));
    }

    #[test]
    fn infinity_point() {
        assert_eq!(
            ProjectiveValue::infinity(8).limit_at_zero(),
            Ok(Limit::Infinity)
        );
        let v = ProjectiveValue::new(s(3, &[2], 9), s(3, &[4, 1], 9)).normalized();
        assert_eq!(v.num.lead_exp(), 0);
        assert_eq!(v.limit_at_zero(), Ok(Limit::Finite(q(1, 2))));
    }

    proptest! {
        #[test]
        fn limit_invariant_under_unit_factor(
            a in prop::collection::vec(-5i64..6, 1..4),
            b in prop::collection::vec(-5i64..6, 1..4),
            la in 0i64..3, lb in 0i64..3,
            u in prop::collection::vec(-5i64..6, 1..4),
        ) {
            let mk = |lead: i64, c: &[i64]| EpsSeries::new(lead, c.iter().map(|&v| int(v)).collect(), 10);
            let num = mk(la, &a);
            let den = mk(lb, &b);
            prop_assume!(!(num.is_zero() && den.is_zero()));
            let mut uc = u.clone();
            if uc[0] == 0 { uc[0] = 1; }
            let unit = mk(0, &uc);
            let v = ProjectiveValue::new(num.clone(), den.clone());
            let w = ProjectiveValue::new(num.mul(&unit), den.mul(&unit));
            prop_assert_eq!(v.limit_at_zero(), w.limit_at_zero());
        }
    }
}
