//! Quasi-periodic sequences `slope·n + table[n mod L]` and the periodic bases
//! φ_m, χ_2m, ψ6, ω9 and ω6.

use crate::arith::rational::{serde_fraction, Rational};
use crate::error::{Error, Result};
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSequence")]
pub struct QuasiPeriodicSequence {
    #[serde(with = "serde_fraction")]
    slope: Rational,
    period: usize,
    #[serde(with = "serde_fraction::vec")]
    table: Vec<Rational>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

#[derive(Deserialize)]
struct RawSequence {
    #[serde(with = "serde_fraction")]
    slope: Rational,
    period: usize,
    #[serde(with = "serde_fraction::vec")]
    table: Vec<Rational>,
    #[serde(default)]
    label: Option<String>,
}

impl TryFrom<RawSequence> for QuasiPeriodicSequence {
    type Error = String;
    fn try_from(r: RawSequence) -> std::result::Result<Self, String> {
        if r.period != r.table.len() || r.period == 0 {
            return Err(format!(
                "period {} does not match table length {}",
                r.period,
                r.table.len()
            ));
        }
        let mut s = QuasiPeriodicSequence::new(r.slope, r.table);
        s.label = r.label;
        Ok(s)
    }
}

/// Smallest `d | L` such that `table` is `d`-periodic.
fn minimal_period(table: &[Rational]) -> usize {
    let l = table.len();
    (1..=l)
        .filter(|d| l.is_multiple_of(*d))
        .find(|&d| (d..l).all(|i| table[i] == table[i - d]))
        .unwrap_or(l)
}

impl QuasiPeriodicSequence {
    /// Builds and canonicalizes to the minimal period. `table` must be nonempty.
    pub fn new(slope: Rational, mut table: Vec<Rational>) -> Self {
        assert!(!table.is_empty(), "empty residue table");
        let d = minimal_period(&table);
        table.truncate(d);
        QuasiPeriodicSequence {
            slope,
            period: d,
            table,
            label: None,
        }
    }

    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    pub fn constant(c: Rational) -> Self {
        Self::new(Rational::zero(), vec![c])
    }

    pub fn linear(slope: Rational, offset: Rational) -> Self {
        Self::new(slope, vec![offset])
    }

    /// Purely periodic sequence with the given residue table.
    pub fn periodic(table: Vec<Rational>) -> Self {
        Self::new(Rational::zero(), table)
    }

    /// Sequence given by its values at `n = 0..=L` for period `L`; the slope is
    /// read off the drift between `n = 0` and `n = L`.
    pub fn from_values(values: &[Rational]) -> Self {
        let l = values.len() - 1;
        let slope = (&values[l] - &values[0]) / Rational::from_integer(l.into());
        let table = (0..l)
            .map(|r| &values[r] - &slope * Rational::from_integer(r.into()))
            .collect();
        Self::new(slope, table)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn slope(&self) -> &Rational {
        &self.slope
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn table(&self) -> &[Rational] {
        &self.table
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn eval(&self, n: i64) -> Rational {
        let r = n.mod_floor(&(self.period as i64)) as usize;
        &self.slope * Rational::from_integer(n.into()) + &self.table[r]
    }

    /// `n ↦ self(n + k)`.
    pub fn shift(&self, k: i64) -> Self {
        let l = self.period as i64;
        let drift = &self.slope * Rational::from_integer(k.into());
        let table = (0..l)
            .map(|r| &drift + &self.table[(r + k).mod_floor(&l) as usize])
            .collect();
        Self::new(self.slope.clone(), table)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::new(&self.slope * c, self.table.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        let l = self.period.lcm(&o.period);
        let table = (0..l)
            .map(|r| &self.table[r % self.period] + &o.table[r % o.period])
            .collect();
        Self::new(&self.slope + &o.slope, table)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.slope.is_zero() && self.table.iter().all(Zero::is_zero)
    }

    /// Table rewritten over `l` residues (`l` must be a multiple of the period).
    pub fn table_over(&self, l: usize) -> Vec<Rational> {
        assert!(l.is_multiple_of(self.period));
        (0..l)
            .map(|r| self.table[r % self.period].clone())
            .collect()
    }
}

impl fmt::Display for QuasiPeriodicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::arith::to_fraction;
        let t: Vec<String> = self.table.iter().map(to_fraction).collect();
        write!(f, "{}·n + [{}]", to_fraction(&self.slope), t.join(", "))
    }
}

/// Builds `slope·n + offset + Σ components`.
pub fn qps_build(
    slope: Rational,
    offset: Rational,
    components: &[PeriodicComponent],
) -> Result<QuasiPeriodicSequence> {
    let mut s = QuasiPeriodicSequence::linear(slope, offset);
    for c in components {
        s = s.add(&c.sequence()?);
    }
    Ok(s)
}

pub fn qps_eval(s: &QuasiPeriodicSequence, n: i64) -> Rational {
    s.eval(n)
}

/// `Σ c·s(n + shift)`.
pub fn qps_linear_combine(
    terms: &[(Rational, &QuasiPeriodicSequence, i64)],
) -> QuasiPeriodicSequence {
    terms
        .iter()
        .fold(QuasiPeriodicSequence::zero(), |acc, (c, s, k)| {
            acc.add(&s.shift(*k).scale(c))
        })
}

pub fn qps_equal(a: &QuasiPeriodicSequence, b: &QuasiPeriodicSequence) -> bool {
    if a.slope != b.slope {
        return false;
    }
    let l = a.period.lcm(&b.period);
    (0..l).all(|r| a.table[r % a.period] == b.table[r % b.period])
}

/// The periodic function families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "period", rename_all = "lowercase")]
pub enum ComponentKind {
    /// Zero-mean, period `m`.
    Phi(usize),
    /// Antiperiodic with half-period `m`; the payload is the full period `2m`.
    Chi(usize),
    Psi6,
    Omega9,
    Omega6,
}

impl ComponentKind {
    pub fn period(self) -> usize {
        match self {
            ComponentKind::Phi(m) | ComponentKind::Chi(m) => m,
            ComponentKind::Psi6 => 6,
            ComponentKind::Omega9 => 9,
            ComponentKind::Omega6 => 12,
        }
    }

    /// Number of free coefficients.
    pub fn arity(self) -> usize {
        match self {
            ComponentKind::Phi(m) => m - 1,
            ComponentKind::Chi(m) => m / 2,
            ComponentKind::Psi6 => 2,
            ComponentKind::Omega9 => 6,
            ComponentKind::Omega6 => 4,
        }
    }

    pub fn is_valid(self) -> bool {
        match self {
            ComponentKind::Phi(m) => m >= 2,
            ComponentKind::Chi(m) => m >= 2 && m % 2 == 0,
            _ => true,
        }
    }

    /// Table over one period for the given coefficients.
    fn table(self, c: &[Rational]) -> Vec<Rational> {
        let l = self.period();
        match self {
            ComponentKind::Phi(m) => {
                let mean: Rational = c.iter().sum::<Rational>() / Rational::from_integer(m.into());
                (0..m)
                    .map(|r| c.get(r).cloned().unwrap_or_else(Rational::zero) - &mean)
                    .collect()
            }
            ComponentKind::Chi(p) => {
                let m = p / 2;
                (0..p)
                    .map(|r| {
                        if r < m {
                            c[r].clone()
                        } else {
                            -c[r - m].clone()
                        }
                    })
                    .collect()
            }
            ComponentKind::Psi6 => unroll(c, l, |w, i| &w[i - 1] - &w[i - 2]),
            ComponentKind::Omega9 => unroll(c, l, |w, i| -(&w[i - 3] + &w[i - 6])),
            ComponentKind::Omega6 => unroll(c, l, |w, i| &w[i - 2] - &w[i - 4]),
        }
    }

    /// Short name as used in catalog files: `phi3`, `chi8`, `psi6`, `omega9`, `omega6`.
    pub fn name(self) -> String {
        match self {
            ComponentKind::Phi(m) => format!("phi{m}"),
            ComponentKind::Chi(m) => format!("chi{m}"),
            ComponentKind::Psi6 => "psi6".into(),
            ComponentKind::Omega9 => "omega9".into(),
            ComponentKind::Omega6 => "omega6".into(),
        }
    }
}

fn unroll(
    init: &[Rational],
    len: usize,
    next: impl Fn(&[Rational], usize) -> Rational,
) -> Vec<Rational> {
    let mut w = init.to_vec();
    while w.len() < len {
        let v = next(&w, w.len());
        w.push(v);
    }
    w
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// One periodic family member: a kind plus its free coefficients.
///
/// Bases: φ_m uses `e_j − 1/m` for `j < m−1`; χ_2m uses `e_j − e_{j+m}`;
/// ψ6, ω9 and ω6 take their initial values (2, 6 and 4 of them) and unroll the
/// defining recurrence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicComponent {
    pub kind: ComponentKind,
    #[serde(with = "serde_fraction::vec")]
    pub coefficients: Vec<Rational>,
}

impl PeriodicComponent {
    pub fn new(kind: ComponentKind, coefficients: Vec<Rational>) -> Result<Self> {
        if !kind.is_valid() || coefficients.len() != kind.arity() {
            return Err(Error::BadComponentArity {
                kind: kind.name(),
                expected: if kind.is_valid() { kind.arity() } else { 0 },
                got: coefficients.len(),
            });
        }
        Ok(PeriodicComponent { kind, coefficients })
    }

    pub fn sequence(&self) -> Result<QuasiPeriodicSequence> {
        if !self.kind.is_valid() || self.coefficients.len() != self.kind.arity() {
            return Err(Error::BadComponentArity {
                kind: self.kind.name(),
                expected: self.kind.arity(),
                got: self.coefficients.len(),
            });
        }
        Ok(QuasiPeriodicSequence::periodic(
            self.kind.table(&self.coefficients),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::linalg;
    use crate::arith::rational::{int, q};
    use proptest::prelude::*;

    fn comp(kind: ComponentKind, c: &[i64]) -> PeriodicComponent {
        PeriodicComponent::new(kind, c.iter().map(|&v| int(v)).collect()).unwrap()
    }

    #[test]
    fn phi2_is_zero_mean_alternation() {
        let s = qps_build(int(0), int(0), &[comp(ComponentKind::Phi(2), &[3])]).unwrap();
        assert_eq!(s.table(), &[q(3, 2), q(-3, 2)]);
    }

    #[test]
    fn psi6_unrolls() {
        let s = comp(ComponentKind::Psi6, &[1, 0]).sequence().unwrap();
        let v: Vec<_> = (0..12).map(|n| s.eval(n)).collect();
        let want: Vec<_> = [1, 0, -1, -1, 0, 1, 1, 0, -1, -1, 0, 1]
            .iter()
            .map(|&x| int(x))
            .collect();
        assert_eq!(v, want);
    }

    #[test]
    fn zero_omega9_is_zero() {
        let s = qps_build(int(0), int(0), &[comp(ComponentKind::Omega9, &[0; 6])]).unwrap();
        assert!(s.is_zero());
        assert_eq!(s.period(), 1);
    }

    #[test]
    fn arity_mismatch() {
        let e = PeriodicComponent::new(ComponentKind::Omega6, vec![int(1)]);
        assert!(matches!(
            e,
            Err(Error::BadComponentArity {
                expected: 4,
                got: 1,
                ..
            })
        ));
        assert!(PeriodicComponent::new(ComponentKind::Chi(5), vec![]).is_err());
    }

    #[test]
    fn evaluation() {
        let s = QuasiPeriodicSequence::linear(int(1), int(0));
        assert_eq!(s.eval(-3), int(-3));
        let t = QuasiPeriodicSequence::periodic(vec![int(4), int(5), int(6)]);
        assert_eq!(t.eval(7), int(5));
        assert_eq!(t.eval(-1), int(6));
        // ζ_n = 4(αn+β) + α + φ3(n−1) with α=1, β=0, φ3=0.
        let zeta = QuasiPeriodicSequence::linear(int(4), int(1));
        assert_eq!(zeta.eval(5), int(21));
    }

    #[test]
    fn minimal_period_canonicalization() {
        let s = QuasiPeriodicSequence::new(int(2), vec![int(1), int(7), int(1), int(7)]);
        assert_eq!(s.period(), 2);
        let z = QuasiPeriodicSequence::new(int(0), vec![int(0); 12]);
        assert_eq!(z.period(), 1);
    }

    #[test]
    fn combine_examples() {
        let s = QuasiPeriodicSequence::new(q(3, 2), vec![int(1), int(-4), int(2)]);
        let zero = qps_linear_combine(&[(int(1), &s, 0), (int(-1), &s, 0)]);
        assert!(zero.is_zero());
        let d = qps_linear_combine(&[(int(1), &s, 1), (int(-1), &s, 0)]);
        assert_eq!(d.slope(), &int(0));
        let mean: Rational =
            d.table().iter().sum::<Rational>() / Rational::from_integer(d.period().into());
        assert_eq!(mean, q(3, 2));
    }

    #[test]
    fn phi2_matches_chi2() {
        // chi(2m) with m = 1 is also the zero-mean period-2 family.
        let phi = comp(ComponentKind::Phi(2), &[6]).sequence().unwrap();
        let chi = QuasiPeriodicSequence::periodic(vec![int(3), int(-3)]);
        assert!(qps_equal(&phi, &chi));
        let lin = QuasiPeriodicSequence::linear(int(1), int(0));
        let bumped = lin.add(&comp(ComponentKind::Phi(3), &[1, 0]).sequence().unwrap());
        assert!(!qps_equal(&lin, &bumped));
    }

    #[test]
    fn json_round_trip() {
        let s = QuasiPeriodicSequence::new(q(-3, 2), vec![int(1), q(1, 3)]).with_label("z");
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(
            j,
            r#"{"slope":"-3/2","period":2,"table":["1","1/3"],"label":"z"}"#
        );
        let back: QuasiPeriodicSequence = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    const KINDS: [ComponentKind; 12] = [
        ComponentKind::Phi(2),
        ComponentKind::Phi(3),
        ComponentKind::Phi(5),
        ComponentKind::Phi(7),
        ComponentKind::Phi(10),
        ComponentKind::Chi(4),
        ComponentKind::Chi(8),
        ComponentKind::Chi(12),
        ComponentKind::Psi6,
        ComponentKind::Omega9,
        ComponentKind::Omega6,
        ComponentKind::Chi(6),
    ];

    /// Defining relation `Σ c_j f(n + s_j) = 0` for each kind.
    fn recurrence(kind: ComponentKind) -> Vec<(i64, i64)> {
        match kind {
            ComponentKind::Phi(m) => (0..m as i64).map(|j| (1, j)).collect(),
            ComponentKind::Chi(p) => vec![(1, (p / 2) as i64), (1, 0)],
            ComponentKind::Psi6 => vec![(1, 1), (1, -1), (-1, 0)],
            ComponentKind::Omega9 => vec![(1, 3), (1, -3), (1, 0)],
            ComponentKind::Omega6 => vec![(1, 2), (1, -2), (-1, 0)],
        }
    }

    #[test]
    fn recurrence_solution_dimensions() {
        // Rank over one period of the circulant system defined by each recurrence.
        for kind in KINDS {
            let l = kind.period() as i64;
            let rows: linalg::Matrix = (0..l)
                .map(|n| {
                    let mut row = vec![int(0); l as usize];
                    for &(c, s) in &recurrence(kind) {
                        row[(n + s).rem_euclid(l) as usize] += int(c);
                    }
                    row
                })
                .collect();
            let dim = linalg::nullspace(&rows, l as usize).len();
            assert_eq!(dim, kind.arity(), "{kind}");
        }
    }

    proptest! {
        #[test]
        fn recurrences_hold(idx in 0usize..12, seed in prop::collection::vec(-20i64..21, 12)) {
            let kind = KINDS[idx];
            let c: Vec<Rational> = seed[..kind.arity()].iter().map(|&v| q(v, 3)).collect();
            let s = PeriodicComponent::new(kind, c).unwrap().sequence().unwrap();
            prop_assert_eq!(kind.period() % s.period(), 0);
            let l = kind.period() as i64;
            for n in 0..2 * l {
                let v: Rational = recurrence(kind).iter().map(|&(c, k)| int(c) * s.eval(n + k)).sum();
                prop_assert!(v.is_zero());
            }
        }

        #[test]
        fn combine_is_linear(lam in (-9i64..10, 1i64..5), a in prop::collection::vec(-9i64..10, 6), k in -7i64..8) {
            let lam = q(lam.0, lam.1);
            let s1 = QuasiPeriodicSequence::new(int(a[0]), vec![int(a[1]), int(a[2]), int(a[3])]);
            let s2 = QuasiPeriodicSequence::new(int(a[4]), vec![int(a[5]), int(1)]);
            let base = qps_linear_combine(&[(int(2), &s1, k), (q(-1, 3), &s2, 1)]);
            let scaled = qps_linear_combine(&[(&lam * int(2), &s1, k), (&lam * q(-1, 3), &s2, 1)]);
            prop_assert!(qps_equal(&scaled, &base.scale(&lam)));
        }

        #[test]
        fn shift_homomorphism(a in prop::collection::vec(-9i64..10, 5), k in -30i64..30, n in -40i64..40) {
            let s = QuasiPeriodicSequence::new(q(a[0], 7), a[1..].iter().map(|&v| int(v)).collect());
            prop_assert_eq!(s.shift(k).eval(n), s.eval(n + k));
        }
    }
}
