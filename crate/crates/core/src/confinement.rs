//! Confinement constraints and their exact solution in quasi-periodic sequences.
//!
//! A pattern yields one linear relation per entry point plus the two relations
//! that keep ∞ from being singular. Written with the shift operator `S`, the
//! system is a square polynomial matrix `M(S)` acting on the unknown sequences.
//! It is diagonalized by unimodular row and column operations,
//! `U·M·V = diag(d_t)`, so the solutions that are quasi-periodic of period `L`
//! are `X = V·Y` with `Y_t` annihilated by `gcd(d_t, (S−1)(S^L−1))`.

use crate::arith::linalg;
use crate::arith::rational::Rational;
use crate::arith::{to_fraction, Poly};
use crate::error::{Error, Result};
use crate::patterns::{Point, Side, SingularityPattern};
use crate::sequences::{qps_equal, qps_linear_combine, QuasiPeriodicSequence};
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Solving periods, each dividing the next; 2520 = lcm(1..10) also covers 12.
pub const PERIOD_LADDER: [usize; 8] = [1, 2, 6, 12, 60, 120, 840, 2520];
pub const DEFAULT_PERIOD_CEILING: usize = 2520;

/// An unknown sequence. `Xi(i)`/`Eta(i)` are the parameters of the generic
/// system with eight points per side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Z,
    Zeta,
    A,
    B,
    C,
    D,
    Xi(u8),
    Eta(u8),
}

impl Symbol {
    pub fn from_point(p: Point) -> Symbol {
        match p {
            Point::A => Symbol::A,
            Point::B => Symbol::B,
            Point::C => Symbol::C,
            Point::D => Symbol::D,
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            Symbol::A | Symbol::B | Symbol::Xi(_) => Some(Side::Xi),
            Symbol::C | Symbol::D | Symbol::Eta(_) => Some(Side::Eta),
            _ => None,
        }
    }

    pub fn at(self, shift: i64) -> SymbolShift {
        SymbolShift {
            symbol: self,
            shift,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Z => write!(f, "z"),
            Symbol::Zeta => write!(f, "zeta"),
            Symbol::Xi(i) => write!(f, "A{i}"),
            Symbol::Eta(i) => write!(f, "C{i}"),
            other => write!(f, "{other:?}"),
        }
    }
}

impl FromStr for Symbol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown symbol `{s}`"));
        Ok(match s {
            "z" => Symbol::Z,
            "zeta" | "ζ" => Symbol::Zeta,
            "A" => Symbol::A,
            "B" => Symbol::B,
            "C" => Symbol::C,
            "D" => Symbol::D,
            _ if s.len() > 1 && (s.starts_with('A') || s.starts_with('C')) => {
                let i: u8 = s[1..].parse().map_err(|_| bad())?;
                if s.starts_with('A') {
                    Symbol::Xi(i)
                } else {
                    Symbol::Eta(i)
                }
            }
            _ => return Err(bad()),
        })
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolShift {
    pub symbol: Symbol,
    pub shift: i64,
}

impl fmt::Display for SymbolShift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.symbol, self.shift)
    }
}

impl Serialize for SymbolShift {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// `entry[0] + exit[t] = Σ right`, one per entry point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfinementConstraint {
    pub entry: SymbolShift,
    pub exit: SymbolShift,
    pub right: Vec<SymbolShift>,
    pub length: u32,
}

impl ConfinementConstraint {
    /// Constraint for a singularity entered at `entry` and left through `exit`
    /// after `length` half-steps. Each half-step subtracts one z or ζ.
    pub fn new(entry: Symbol, exit: Symbol, length: u32) -> Result<Self> {
        let (es, fs) = (entry.side(), exit.side());
        let (Some(es), Some(fs)) = (es, fs) else {
            return Err(Error::ParityViolation(format!(
                "{entry}→{exit} is not between points"
            )));
        };
        let odd = length % 2 == 1;
        if length == 0 || odd == (es == fs) {
            return Err(Error::ParityViolation(format!(
                "{entry}→{exit} with step {length}"
            )));
        }
        let s = length as i64;
        let (shift, right): (i64, Vec<SymbolShift>) = match es {
            Side::Xi => (
                s / 2,
                (0..s)
                    .map(|i| {
                        if i % 2 == 0 {
                            Symbol::Z.at(i / 2)
                        } else {
                            Symbol::Zeta.at(i / 2)
                        }
                    })
                    .collect(),
            ),
            Side::Eta => (
                if odd { s / 2 + 1 } else { s / 2 },
                (0..s)
                    .map(|i| {
                        if i % 2 == 0 {
                            Symbol::Zeta.at(i / 2)
                        } else {
                            Symbol::Z.at((i + 1) / 2)
                        }
                    })
                    .collect(),
            ),
        };
        Ok(ConfinementConstraint {
            entry: entry.at(0),
            exit: exit.at(shift),
            right,
            length,
        })
    }

    pub fn relation(&self) -> LinearRelation {
        let mut terms = vec![(Rational::one(), self.entry), (Rational::one(), self.exit)];
        terms.extend(self.right.iter().map(|r| (-Rational::one(), *r)));
        LinearRelation::new(terms)
    }
}

impl fmt::Display for ConfinementConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r: Vec<String> = self.right.iter().map(ToString::to_string).collect();
        write!(f, "{} + {} = {}", self.entry, self.exit, r.join(" + "))
    }
}

/// `Σ points[0] = 2 z[0] + 2 zeta[-1]` (ξ side) or `2 z[0] + 2 zeta[0]` (η side).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InfinityRelation {
    pub side: Side,
    pub points: Vec<Symbol>,
}

impl InfinityRelation {
    pub fn zeta_shift(&self) -> i64 {
        match self.side {
            Side::Xi => -1,
            Side::Eta => 0,
        }
    }

    pub fn relation(&self) -> LinearRelation {
        let two = Rational::from_integer(2.into());
        let mut terms: Vec<_> = self
            .points
            .iter()
            .map(|p| (Rational::one(), p.at(0)))
            .collect();
        terms.push((-two.clone(), Symbol::Z.at(0)));
        terms.push((-two, Symbol::Zeta.at(self.zeta_shift())));
        LinearRelation::new(terms)
    }
}

impl fmt::Display for InfinityRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l: Vec<String> = self.points.iter().map(|p| p.at(0).to_string()).collect();
        write!(
            f,
            "{} = 2 z[0] + 2 {}",
            l.join(" + "),
            Symbol::Zeta.at(self.zeta_shift())
        )
    }
}

/// `Σ c · symbol(n + shift) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearRelation {
    pub terms: Vec<(Rational, SymbolShift)>,
}

impl LinearRelation {
    pub fn new(terms: Vec<(Rational, SymbolShift)>) -> Self {
        LinearRelation { terms }
    }

    pub fn min_shift(&self) -> i64 {
        self.terms.iter().map(|(_, s)| s.shift).min().unwrap_or(0)
    }

    /// Left side minus right side as a sequence. Panics on a missing symbol.
    pub fn residual(&self, x: &Assignment) -> QuasiPeriodicSequence {
        let terms: Vec<_> = self
            .terms
            .iter()
            .map(|(c, s)| (c.clone(), &x[&s.symbol], s.shift))
            .collect();
        qps_linear_combine(&terms)
    }

    pub fn residual_at(&self, x: &Assignment, n: i64) -> Rational {
        self.terms
            .iter()
            .map(|(c, s)| c * x[&s.symbol].eval(n + s.shift))
            .sum()
    }
}

impl fmt::Display for LinearRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(c, s)| {
                if c.is_one() {
                    format!("{s}")
                } else {
                    format!("({}) {s}", to_fraction(c))
                }
            })
            .collect();
        write!(f, "{} = 0", parts.join(" + "))
    }
}

/// A linear functional that must not vanish on an admissible parametrization.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Functional {
    pub name: String,
    /// Checked on the autonomous (period-1) part rather than on the whole space.
    pub autonomous: bool,
    #[serde(skip)]
    pub terms: Vec<(Rational, SymbolShift)>,
}

pub type Assignment = BTreeMap<Symbol, QuasiPeriodicSequence>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintSystem {
    pub name: String,
    pub symbols: Vec<Symbol>,
    pub constraints: Vec<ConfinementConstraint>,
    pub infinity: Vec<InfinityRelation>,
    /// Sequences that must not vanish identically (z+ζ, z+ζ₋₁, and the point splittings).
    pub nondegeneracy: Vec<Functional>,
}

fn functional(name: &str, autonomous: bool, terms: &[(i64, Symbol, i64)]) -> Functional {
    Functional {
        name: name.into(),
        autonomous,
        terms: terms
            .iter()
            .map(|&(c, s, k)| (Rational::from_integer(c.into()), s.at(k)))
            .collect(),
    }
}

impl ConstraintSystem {
    /// All relations: confinement constraints first, then the infinity relations.
    pub fn relations(&self) -> Vec<LinearRelation> {
        self.constraints
            .iter()
            .map(ConfinementConstraint::relation)
            .chain(self.infinity.iter().map(InfinityRelation::relation))
            .collect()
    }

    pub fn relation_texts(&self) -> Vec<String> {
        self.constraints
            .iter()
            .map(ToString::to_string)
            .chain(self.infinity.iter().map(ToString::to_string))
            .collect()
    }

    fn column(&self, s: Symbol) -> usize {
        self.symbols
            .iter()
            .position(|&t| t == s)
            .expect("symbol not in system")
    }

    /// First (relation index, residue) where `x` fails, checking `n = 0..2L`.
    pub fn first_violation(&self, x: &Assignment, l: usize) -> Option<(usize, i64)> {
        for (j, rel) in self.relations().iter().enumerate() {
            for n in 0..2 * l as i64 {
                if !rel.residual_at(x, n).is_zero() {
                    return Some((j, n));
                }
            }
        }
        None
    }

    /// True when every relation holds identically.
    pub fn is_satisfied(&self, x: &Assignment) -> bool {
        self.relations().iter().all(|r| r.residual(x).is_zero())
    }
}

/// One relation per entry point of the pattern plus the two infinity relations.
pub fn generate_constraints(p: &SingularityPattern) -> Result<ConstraintSystem> {
    let p = SingularityPattern::new(p.quartet, p.exits)?;
    let constraints = Point::ALL
        .iter()
        .map(|&e| {
            ConfinementConstraint::new(
                Symbol::from_point(e),
                Symbol::from_point(p.exit(e)),
                p.step(e),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    use Symbol::*;
    Ok(ConstraintSystem {
        name: p.id(),
        symbols: vec![Z, Zeta, A, B, C, D],
        constraints,
        infinity: vec![
            InfinityRelation {
                side: Side::Xi,
                points: vec![A, B],
            },
            InfinityRelation {
                side: Side::Eta,
                points: vec![C, D],
            },
        ],
        nondegeneracy: vec![
            functional("z + zeta", true, &[(1, Z, 0), (1, Zeta, 0)]),
            functional("z + zeta[-1]", true, &[(1, Z, 1), (1, Zeta, 0)]),
            functional("A - B", false, &[(1, A, 0), (-1, B, 0)]),
            functional("C - D", false, &[(1, C, 0), (-1, D, 0)]),
        ],
    })
}

/// The generic system with `k` points per side, every singularity confined in
/// one step: `A_i + C_i = z` and `C_i + A_i[1] = ζ`.
pub fn generic_one_step(k: u8) -> ConstraintSystem {
    use Symbol::*;
    let mut symbols = vec![Z, Zeta];
    symbols.extend((1..=k).map(Xi));
    symbols.extend((1..=k).map(Eta));
    let mut constraints = Vec::new();
    for i in 1..=k {
        constraints.push(ConfinementConstraint::new(Xi(i), Eta(i), 1).unwrap());
    }
    for i in 1..=k {
        constraints.push(ConfinementConstraint::new(Eta(i), Xi(i), 1).unwrap());
    }
    ConstraintSystem {
        name: "generic".into(),
        symbols,
        constraints,
        infinity: vec![
            InfinityRelation {
                side: Side::Xi,
                points: (1..=k).map(Xi).collect(),
            },
            InfinityRelation {
                side: Side::Eta,
                points: (1..=k).map(Eta).collect(),
            },
        ],
        nondegeneracy: vec![
            functional("z + zeta", true, &[(1, Z, 0), (1, Zeta, 0)]),
            functional("z + zeta[-1]", true, &[(1, Z, 1), (1, Zeta, 0)]),
        ],
    }
}

type PolyMatrix = Vec<Vec<Poly>>;

fn identity(n: usize) -> PolyMatrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Poly::one() } else { Poly::zero() })
                .collect()
        })
        .collect()
}

/// `U·M·V = diag(d)` with `U`, `V` unimodular over `Q[S]`.
#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub matrix: PolyMatrix,
    pub diag: Vec<Poly>,
    pub u: PolyMatrix,
    pub v: PolyMatrix,
}

/// Row `j` of `M(S)`: relation `j` multiplied by `S^(−min shift)`.
pub fn operator_matrix(cs: &ConstraintSystem) -> PolyMatrix {
    let k = cs.symbols.len();
    cs.relations()
        .iter()
        .map(|rel| {
            let base = rel.min_shift();
            let mut row = vec![Poly::zero(); k];
            for (c, s) in &rel.terms {
                let col = cs.column(s.symbol);
                row[col] = row[col].add(&Poly::monomial(c.clone(), (s.shift - base) as usize));
            }
            row
        })
        .collect()
}

pub fn diagonalize(cs: &ConstraintSystem) -> Diagonalization {
    let matrix = operator_matrix(cs);
    let rows = matrix.len();
    let cols = cs.symbols.len();
    let mut a = matrix.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut rank = 0;
    'outer: for t in 0..rows.min(cols) {
        loop {
            let pivot = (t..rows)
                .flat_map(|i| (t..cols).map(move |j| (i, j)))
                .filter(|&(i, j)| !a[i][j].is_zero())
                .min_by_key(|&(i, j)| (a[i][j].degree().unwrap(), i, j));
            let Some((pi, pj)) = pivot else { break 'outer };
            a.swap(t, pi);
            u.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let (qt, r) = a[i][t].divrem(&a[t][t]);
                clean &= r.is_zero();
                for j in t..cols {
                    let d = qt.mul(&a[t][j]);
                    a[i][j] = a[i][j].sub(&d);
                }
                for j in 0..rows {
                    let d = qt.mul(&u[t][j]);
                    u[i][j] = u[i][j].sub(&d);
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let (qt, r) = a[t][j].divrem(&a[t][t]);
                clean &= r.is_zero();
                for row in a.iter_mut().skip(t) {
                    let d = qt.mul(&row[t]);
                    row[j] = row[j].sub(&d);
                }
                for row in v.iter_mut() {
                    let d = qt.mul(&row[t]);
                    row[j] = row[j].sub(&d);
                }
            }
            if clean {
                break;
            }
        }
        rank = t + 1;
    }
    let diag = (0..cols)
        .map(|t| {
            if t < rank {
                a[t][t].clone()
            } else {
                Poly::zero()
            }
        })
        .collect();
    Diagonalization { matrix, diag, u, v }
}

/// `(S − 1)(S^L − 1)`, whose kernel is the quasi-periodic sequences of period `L`.
pub fn period_modulus(l: usize) -> Poly {
    let mut c = vec![Rational::zero(); l + 2];
    c[0] = Rational::one();
    c[1] = -Rational::one();
    c[l] -= Rational::one();
    c[l + 1] += Rational::one();
    Poly::new(c)
}

impl Diagonalization {
    /// `gcd(d_t, (S−1)(S^L−1))` for every column.
    pub fn kernel_factors(&self, l: usize) -> Vec<Poly> {
        self.diag
            .iter()
            .map(|d| {
                if d.is_zero() {
                    return period_modulus(l);
                }
                if d.degree() == Some(0) {
                    return Poly::one();
                }
                let sl = Poly::x_pow_mod(l as u64, d).sub(&Poly::one());
                let s1 = Poly::new(vec![-Rational::one(), Rational::one()]);
                let qm = s1.mul(&sl).rem(d);
                Poly::gcd(d, &qm)
            })
            .collect()
    }

    pub fn dimension(&self, l: usize) -> usize {
        self.kernel_factors(l)
            .iter()
            .map(|g| g.degree().unwrap_or(0))
            .sum()
    }

    fn v_degree(&self) -> usize {
        self.v
            .iter()
            .flatten()
            .filter_map(Poly::degree)
            .max()
            .unwrap_or(0)
    }

    /// Raw basis at period `L`: one vector per (column, initial value).
    fn raw_basis(&self, l: usize) -> Vec<Vec<QuasiPeriodicSequence>> {
        let factors = self.kernel_factors(l);
        let horizon = l + 1 + self.v_degree();
        let k = self.diag.len();
        let mut out = Vec::new();
        for (t, g) in factors.iter().enumerate() {
            let e = g.degree().unwrap_or(0);
            let g = g.monic();
            for init in 0..e {
                let mut y = vec![Rational::zero(); horizon.max(e)];
                y[init] = Rational::one();
                for n in e..horizon {
                    let mut acc = Rational::zero();
                    for j in 0..e {
                        let c = g.coeff(j);
                        if !c.is_zero() {
                            acc -= &c * &y[n - e + j];
                        }
                    }
                    y[n] = acc;
                }
                let vector = (0..k)
                    .map(|s| {
                        let vs = &self.v[s][t];
                        let values: Vec<Rational> = (0..=l)
                            .map(|n| {
                                vs.coeffs()
                                    .iter()
                                    .enumerate()
                                    .map(|(j, c)| c * &y[n + j])
                                    .sum()
                            })
                            .collect();
                        QuasiPeriodicSequence::from_values(&values)
                    })
                    .collect();
                out.push(vector);
            }
        }
        out
    }
}

/// Periods of the standard ladder up to `ceiling`, with `ceiling` itself appended if absent.
pub fn ladder_up_to(ceiling: usize) -> Vec<usize> {
    let mut v: Vec<usize> = PERIOD_LADDER
        .iter()
        .copied()
        .filter(|&l| l <= ceiling)
        .collect();
    if v.last() != Some(&ceiling) {
        v.push(ceiling);
    }
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LadderRung {
    pub period: usize,
    pub dimension: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisVector {
    /// `secular` (nonzero slope), `constant`, or `period p`.
    pub label: String,
    pub values: BTreeMap<Symbol, QuasiPeriodicSequence>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionSpace {
    pub period: usize,
    pub dimension: usize,
    pub symbols: Vec<Symbol>,
    /// The system is homogeneous, so this is the zero assignment.
    pub particular: Assignment,
    pub basis: Vec<BasisVector>,
    pub ladder: Vec<LadderRung>,
    /// Set when some larger ladder period has a strictly larger space.
    pub period_hint: Option<usize>,
    #[serde(serialize_with = "ser_polys")]
    pub invariant_factors: Vec<Poly>,
    #[serde(skip)]
    pub system: ConstraintSystem,
}

fn ser_polys<S: Serializer>(v: &[Poly], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(ToString::to_string))
}

/// One row of the coefficient matrix: per symbol, slope then table over `L`.
fn flatten(values: &[QuasiPeriodicSequence], l: usize) -> Vec<Rational> {
    let mut row = Vec::with_capacity(values.len() * (l + 1));
    for v in values {
        row.push(v.slope().clone());
        row.extend(v.table_over(l));
    }
    row
}

fn unflatten(row: &[Rational], symbols: &[Symbol], l: usize) -> Assignment {
    symbols
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let chunk = &row[i * (l + 1)..(i + 1) * (l + 1)];
            (
                s,
                QuasiPeriodicSequence::new(chunk[0].clone(), chunk[1..].to_vec()),
            )
        })
        .collect()
}

fn label(values: &Assignment) -> String {
    use num_integer::Integer;
    if values.values().any(|v| !v.slope().is_zero()) {
        return "secular".into();
    }
    let p = values.values().fold(1usize, |acc, v| acc.lcm(&v.period()));
    if p == 1 {
        "constant".into()
    } else {
        format!("period {p}")
    }
}

impl SolutionSpace {
    fn build(cs: &ConstraintSystem, diag: &Diagonalization, l: usize) -> SolutionSpace {
        let raw = diag.raw_basis(l);
        let mut rows: linalg::Matrix = raw.iter().map(|v| flatten(v, l)).collect();
        let rank = linalg::rref(&mut rows).len();
        rows.truncate(rank);
        debug_assert_eq!(rank, raw.len(), "column transform must be injective");
        let basis = rows
            .iter()
            .map(|r| {
                let values = unflatten(r, &cs.symbols, l);
                BasisVector {
                    label: label(&values),
                    values,
                }
            })
            .collect();
        SolutionSpace {
            period: l,
            dimension: rank,
            symbols: cs.symbols.clone(),
            particular: cs
                .symbols
                .iter()
                .map(|&s| (s, QuasiPeriodicSequence::zero()))
                .collect(),
            basis,
            ladder: Vec::new(),
            period_hint: None,
            invariant_factors: diag.diag.clone(),
            system: cs.clone(),
        }
    }

    /// `particular + Σ c_i · basis_i`.
    pub fn member(&self, coords: &[Rational]) -> Assignment {
        assert_eq!(coords.len(), self.dimension);
        self.symbols
            .iter()
            .map(|&s| {
                let terms: Vec<_> = self
                    .basis
                    .iter()
                    .zip(coords)
                    .map(|(b, c)| (c.clone(), &b.values[&s], 0))
                    .collect();
                (s, self.particular[&s].add(&qps_linear_combine(&terms)))
            })
            .collect()
    }

    pub fn random_member<R: Rng>(&self, rng: &mut R) -> Assignment {
        let coords: Vec<Rational> = (0..self.dimension)
            .map(|_| random_rational(rng, 100))
            .collect();
        self.member(&coords)
    }

    /// Coordinates of `x` in the basis, if `x` lies in the space.
    pub fn coordinates(&self, x: &Assignment) -> Option<Vec<Rational>> {
        let l = self.period;
        let mut values = Vec::with_capacity(self.symbols.len());
        for s in &self.symbols {
            let v = x.get(s)?.sub(&self.particular[s]);
            if !l.is_multiple_of(v.period()) {
                return None;
            }
            values.push(v);
        }
        let target = flatten(&values, l);
        let coords: Vec<Rational> = self
            .basis
            .iter()
            .map(|b| {
                let row = flatten(
                    &self
                        .symbols
                        .iter()
                        .map(|s| b.values[s].clone())
                        .collect::<Vec<_>>(),
                    l,
                );
                let pivot = row.iter().position(|c| !c.is_zero()).unwrap();
                target[pivot].clone() / &row[pivot]
            })
            .collect();
        let back = self.member(&coords);
        self.symbols
            .iter()
            .all(|s| qps_equal(&back[s], &x[s]))
            .then_some(coords)
    }

    /// Which nondegeneracy functionals vanish identically on the space.
    pub fn vanishing_functionals(&self) -> Vec<&Functional> {
        self.system
            .nondegeneracy
            .iter()
            .filter(|f| {
                self.basis.iter().all(|b| {
                    let terms: Vec<_> = f
                        .terms
                        .iter()
                        .map(|(c, s)| (c.clone(), &b.values[&s.symbol], s.shift))
                        .collect();
                    qps_linear_combine(&terms).is_zero()
                })
            })
            .collect()
    }
}

/// Random rational with numerator in `[−h, h]` and denominator in `[1, h]`.
pub fn random_rational<R: Rng>(rng: &mut R, h: i64) -> Rational {
    Rational::new(rng.gen_range(-h..=h).into(), rng.gen_range(1..=h).into())
}

/// Why a system admits no usable solution: a nondegeneracy functional `f` is
/// a combination of the constraint rows modulo `(S−1)(S^L−1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub reason: String,
    pub functional: String,
    pub period: usize,
    /// Multipliers `c_j(S)`, one per relation (in `relations()` order), with
    /// `Σ c_j(S)·row_j ≡ f (mod (S−1)(S^L−1))`.
    pub combination: Vec<CertificateTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateTerm {
    pub relation: String,
    #[serde(serialize_with = "ser_poly")]
    pub multiplier: Poly,
}

fn ser_poly<S: Serializer>(p: &Poly, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&p.to_string())
}

fn functional_row(cs: &ConstraintSystem, f: &Functional) -> Vec<Poly> {
    let base = f.terms.iter().map(|(_, s)| s.shift).min().unwrap_or(0);
    let mut row = vec![Poly::zero(); cs.symbols.len()];
    for (c, s) in &f.terms {
        let col = cs.column(s.symbol);
        row[col] = row[col].add(&Poly::monomial(c.clone(), (s.shift - base) as usize));
    }
    row
}

/// Builds `c` with `c·M ≡ f (mod q_L)` from `w = f·V`, `h_t = w_t / g_t` and
/// Bézout cofactors `a_t·d_t + b_t·q_L = g_t`.
fn certificate(
    cs: &ConstraintSystem,
    diag: &Diagonalization,
    f: &Functional,
    l: usize,
) -> Certificate {
    let row = functional_row(cs, f);
    let k = cs.symbols.len();
    let ql = period_modulus(l);
    let factors = diag.kernel_factors(l);
    let rels = cs.relation_texts();
    let mut c = vec![Poly::zero(); rels.len()];
    for t in 0..k {
        let d = &diag.diag[t];
        if d.is_zero() {
            continue;
        }
        let w = (0..k).fold(Poly::zero(), |acc, s| acc.add(&row[s].mul(&diag.v[s][t])));
        let (h, r) = w.divrem(&factors[t]);
        debug_assert!(r.is_zero());
        let (_, a, _) = Poly::ext_gcd(d, &ql);
        let m = h.mul(&a).rem(&ql);
        if m.is_zero() {
            continue;
        }
        for (j, cj) in c.iter_mut().enumerate() {
            *cj = cj.add(&m.mul(&diag.u[t][j])).rem(&ql);
        }
    }
    Certificate {
        reason: if l == 1 {
            format!(
                "{} vanishes on the autonomous part of every solution",
                f.name
            )
        } else {
            format!(
                "{} vanishes identically on every solution of period {l}",
                f.name
            )
        },
        functional: f.name.clone(),
        period: l,
        combination: rels
            .into_iter()
            .zip(c)
            .map(|(relation, multiplier)| CertificateTerm {
                relation,
                multiplier,
            })
            .collect(),
    }
}

/// Checks `Σ c_j·row_j − f ≡ 0 (mod q_L)` entrywise.
pub fn check_certificate(cs: &ConstraintSystem, cert: &Certificate) -> bool {
    let Some(f) = cs.nondegeneracy.iter().find(|f| f.name == cert.functional) else {
        return false;
    };
    let m = operator_matrix(cs);
    let frow = functional_row(cs, f);
    let ql = period_modulus(cert.period);
    (0..cs.symbols.len()).all(|col| {
        let lhs = cert
            .combination
            .iter()
            .enumerate()
            .fold(Poly::zero(), |acc, (j, t)| {
                acc.add(&t.multiplier.mul(&m[j][col]))
            });
        lhs.sub(&frow[col]).rem(&ql).is_zero()
    })
}

/// The full solution space at period `L`, with no admissibility check.
pub fn solve_linear(cs: &ConstraintSystem, l: usize) -> SolutionSpace {
    assert!(l >= 1);
    let diag = diagonalize(cs);
    let mut space = SolutionSpace::build(cs, &diag, l);
    space.ladder = ladder_dims(&diag, l);
    space.period_hint = hint(&space.ladder, space.dimension);
    space
}

fn ladder_dims(diag: &Diagonalization, l: usize) -> Vec<LadderRung> {
    let mut periods: Vec<usize> = PERIOD_LADDER
        .iter()
        .copied()
        .filter(|p| p % l == 0 || l.is_multiple_of(*p))
        .collect();
    if !periods.contains(&l) {
        periods.push(l);
        periods.sort_unstable();
    }
    periods
        .into_iter()
        .map(|p| LadderRung {
            period: p,
            dimension: diag.dimension(p),
        })
        .collect()
}

fn hint(ladder: &[LadderRung], dim: usize) -> Option<usize> {
    ladder.iter().find(|r| r.dimension > dim).map(|r| r.period)
}

/// A parametrization must be a deautonomisation with distinct points on each
/// side. So z+ζ and z+ζ₋₁ may not vanish on the autonomous part, and the point
/// splittings may not vanish identically. Projecting a solution onto
/// `ker (S−1)²` commutes with every functional and lands in the period-1
/// solutions, so the autonomous check (and its certificate) lives at `L = 1`.
fn admissible(space: SolutionSpace, diag: &Diagonalization) -> Result<SolutionSpace> {
    let autonomous = SolutionSpace::build(&space.system, diag, 1);
    let failing = autonomous
        .vanishing_functionals()
        .into_iter()
        .find(|f| f.autonomous)
        .map(|f| (f.clone(), 1))
        .or_else(|| {
            space
                .vanishing_functionals()
                .into_iter()
                .find(|f| !f.autonomous)
                .map(|f| (f.clone(), space.period))
        });
    if let Some((f, l)) = failing {
        let cert = certificate(&space.system, diag, &f, l);
        return Err(Error::InfeasibleSystem {
            period: space.period,
            certificate: Box::new(cert),
        });
    }
    Ok(space)
}

/// Solves at period `L`. Fails with a certificate when a nondegeneracy functional
/// vanishes (z+ζ and z+ζ₋₁ on the autonomous part, A−B and C−D identically).
pub fn solve_constraints(cs: &ConstraintSystem, l: usize) -> Result<SolutionSpace> {
    let diag = diagonalize(cs);
    let mut space = SolutionSpace::build(cs, &diag, l);
    space.ladder = ladder_dims(&diag, l);
    space.period_hint = hint(&space.ladder, space.dimension);
    admissible(space, &diag)
}

/// Walks the ladder up to `ceiling` and solves at the smallest period whose
/// dimension already equals the dimension at the ceiling.
pub fn solve_ladder(cs: &ConstraintSystem, ceiling: usize) -> Result<SolutionSpace> {
    let diag = diagonalize(cs);
    let ladder: Vec<LadderRung> = ladder_up_to(ceiling)
        .into_iter()
        .map(|p| LadderRung {
            period: p,
            dimension: diag.dimension(p),
        })
        .collect();
    let top = ladder.last().unwrap().dimension;
    let l = ladder
        .iter()
        .find(|r| r.dimension == top && ceiling.is_multiple_of(r.period))
        .map_or(ceiling, |r| r.period);
    let mut space = SolutionSpace::build(cs, &diag, l);
    space.ladder = ladder;
    space.period_hint = None;
    admissible(space, &diag)
}

/// True iff `candidate` satisfies every relation identically and is expressible in the basis.
pub fn verify_membership(space: &SolutionSpace, candidate: &Assignment) -> bool {
    space.symbols.iter().all(|s| candidate.contains_key(s))
        && space.system.is_satisfied(candidate)
        && space.coordinates(candidate).is_some()
}
