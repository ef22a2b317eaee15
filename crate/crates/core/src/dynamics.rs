//! Exact iteration of the asymmetric trihomographic map, its canonical
//! additive form, perturbative confinement checks and degree growth.
//!
//! Time runs on a half-step clock: `x_n` sits at `2n` and `y_n` at `2n + 1`.
//! Every half-step is homographic in the previous value of the same variable,
//! with coefficients depending on the other variable:
//!
//! ```text
//! new = [N0·old0 + N1·old1 : D0·old0 + D1·old1]
//! ```
//!
//! Two routes produce `N0, N1, D0, D1`. The trihomographic route uses the
//! two-point parameters `A, B, C, D` directly in `(x, y)`. The ancillary route
//! writes the map in `ξ, η` with `ξ² = x`, `η² = y` for any number of points
//! per side; numerator and denominator share a parity in the ancillary
//! variable, so after extracting that parity they are polynomials in `x` or
//! `y` and no square root is ever taken.
//!
//! The ancillary x-step uses `(X − (η−ζ)²)/(X − (η+ζ)²)` as its first factor.
//! Writing `ξ` in that denominator, as one printed variant of the system
//! does, breaks the η ↦ −η symmetry that makes the elimination possible.

use crate::arith::modp::{reduce, PolyFp, PRIMES};
use crate::arith::{
    limit_at_zero, to_fraction, ArithError, EpsSeries, Limit, Poly, ProjectiveValue, Rational,
};
use crate::arith::{DEFAULT_EPS_ORDER, MAX_EPS_ORDER};
use crate::confinement::{
    random_rational, solve_linear, Assignment, ConstraintSystem, SolutionSpace, Symbol,
};
use crate::patterns::Side;
use crate::sequences::{qps_linear_combine, QuasiPeriodicSequence};
use crate::{Error, Result};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

/// Instantiated parameters: `z`, `ζ` and the singular points of each side.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSystem {
    pub z: QuasiPeriodicSequence,
    pub zeta: QuasiPeriodicSequence,
    pub xi_points: Vec<(Symbol, QuasiPeriodicSequence)>,
    pub eta_points: Vec<(Symbol, QuasiPeriodicSequence)>,
}

impl ParamSystem {
    /// Checks the infinity relations `Σ ξ-points = 2(z + ζ[-1])` and
    /// `Σ η-points = 2(z + ζ)`.
    pub fn new(
        z: QuasiPeriodicSequence,
        zeta: QuasiPeriodicSequence,
        xi_points: Vec<(Symbol, QuasiPeriodicSequence)>,
        eta_points: Vec<(Symbol, QuasiPeriodicSequence)>,
    ) -> Result<Self> {
        let p = ParamSystem {
            z,
            zeta,
            xi_points,
            eta_points,
        };
        for (side, pts, shift) in [("xi", &p.xi_points, -1), ("eta", &p.eta_points, 0)] {
            let mut terms: Vec<(Rational, &QuasiPeriodicSequence, i64)> =
                pts.iter().map(|(_, s)| (Rational::one(), s, 0)).collect();
            terms.push((Rational::from_integer((-2).into()), &p.z, 0));
            terms.push((Rational::from_integer((-2).into()), &p.zeta, shift));
            if !qps_linear_combine(&terms).is_zero() {
                return Err(Error::Unbalanced(format!(
                    "{side}-side points do not sum to 2(z + zeta)"
                )));
            }
        }
        Ok(p)
    }

    pub fn trihomographic(
        z: QuasiPeriodicSequence,
        zeta: QuasiPeriodicSequence,
        [a, b, c, d]: [QuasiPeriodicSequence; 4],
    ) -> Result<Self> {
        Self::new(
            z,
            zeta,
            vec![(Symbol::A, a), (Symbol::B, b)],
            vec![(Symbol::C, c), (Symbol::D, d)],
        )
    }

    pub fn from_assignment(x: &Assignment) -> Result<Self> {
        let get = |s: Symbol| {
            x.get(&s)
                .cloned()
                .ok_or_else(|| Error::Parse(format!("assignment lacks {s}")))
        };
        let side = |want: Side| -> Vec<_> {
            x.iter()
                .filter(|(s, _)| s.side() == Some(want))
                .map(|(s, v)| (*s, v.clone()))
                .collect()
        };
        Self::new(
            get(Symbol::Z)?,
            get(Symbol::Zeta)?,
            side(Side::Xi),
            side(Side::Eta),
        )
    }

    pub fn is_trihomographic(&self) -> bool {
        self.xi_points.len() == 2 && self.eta_points.len() == 2
    }

    pub fn default_route(&self) -> Route {
        if self.is_trihomographic() {
            Route::Trihomographic
        } else {
            Route::Ancillary
        }
    }

    pub fn points(&self, side: Side) -> &[(Symbol, QuasiPeriodicSequence)] {
        match side {
            Side::Xi => &self.xi_points,
            Side::Eta => &self.eta_points,
        }
    }

    pub fn point(&self, s: Symbol) -> Option<&QuasiPeriodicSequence> {
        self.xi_points
            .iter()
            .chain(&self.eta_points)
            .find(|(t, _)| *t == s)
            .map(|(_, v)| v)
    }

    fn values(&self, side: Side, n: i64) -> Vec<Rational> {
        self.points(side).iter().map(|(_, v)| v.eval(n)).collect()
    }

    /// `κ_n = (A_n − B_n)/2`.
    pub fn kappa(&self, n: i64) -> Rational {
        let v = self.values(Side::Xi, n);
        (&v[0] - &v[1]) / Rational::from_integer(2.into())
    }

    /// `k_n = (C_n − D_n)/2`.
    pub fn k(&self, n: i64) -> Rational {
        let v = self.values(Side::Eta, n);
        (&v[0] - &v[1]) / Rational::from_integer(2.into())
    }

    /// Common period of all parameters.
    pub fn period(&self) -> usize {
        self.xi_points
            .iter()
            .chain(&self.eta_points)
            .map(|(_, v)| v.period())
            .fold(self.z.period().lcm(&self.zeta.period()), |a, b| a.lcm(&b))
    }

    /// The other point on the same side (cyclically for more than two).
    pub fn partner(&self, s: Symbol) -> Option<Symbol> {
        let pts = self.points(s.side()?);
        let i = pts.iter().position(|(t, _)| *t == s)?;
        Some(pts[(i + 1) % pts.len()].0)
    }

    /// Adds `δ` to `s` and `−δ` to its partner at residue `n` of their common
    /// period. The infinity relations survive; the confinement relation
    /// through `s` at that residue does not.
    pub fn perturbed(&self, s: Symbol, n: i64, delta: &Rational) -> Result<ParamSystem> {
        let partner = self
            .partner(s)
            .ok_or_else(|| Error::Parse(format!("{s} is not a point")))?;
        let l = self
            .point(s)
            .unwrap()
            .period()
            .lcm(&self.point(partner).unwrap().period());
        let r = n.mod_floor(&(l as i64)) as usize;
        let bump = |v: &QuasiPeriodicSequence, d: Rational| {
            let mut table = v.table_over(l);
            table[r] += d;
            let out = QuasiPeriodicSequence::new(v.slope().clone(), table);
            match v.label() {
                Some(l) => out.with_label(l),
                None => out,
            }
        };
        let mut out = self.clone();
        for (t, v) in out.xi_points.iter_mut().chain(out.eta_points.iter_mut()) {
            if *t == s {
                *v = bump(v, delta.clone());
            } else if *t == partner {
                *v = bump(v, -delta.clone());
            }
        }
        Ok(out)
    }

    /// Moves the parameters by `δ·v`, where `v` solves every relation of `cs`
    /// except the confinement relation entered at `entry`, at the period of
    /// `self`, and violates that one. Infinity relations are kept.
    pub fn break_relation(
        &self,
        cs: &ConstraintSystem,
        entry: Symbol,
        delta: &Rational,
    ) -> Result<ParamSystem> {
        let idx = cs
            .constraints
            .iter()
            .position(|c| c.entry.symbol == entry)
            .ok_or_else(|| {
                Error::Unsupported(format!("no confinement relation enters at {entry}"))
            })?;
        let target = cs.constraints[idx].relation();
        let mut sub = cs.clone();
        sub.constraints.remove(idx);
        let space = solve_linear(&sub, self.period());
        let v = space
            .basis
            .iter()
            .find(|b| !target.residual(&b.values).is_zero())
            .ok_or_else(|| {
                Error::Unsupported(format!(
                    "the relation entered at {entry} is implied by the others"
                ))
            })?;
        let mut x = self.assignment();
        for (s, val) in x.iter_mut() {
            if let Some(dv) = v.values.get(s) {
                *val = val.add(&dv.scale(delta));
            }
        }
        ParamSystem::from_assignment(&x)
    }

    /// Rejects parameter choices where the map degenerates: `z + ζ` or
    /// `z + ζ[-1]` vanishing, a point at zero, or two points on one side
    /// equal up to sign.
    pub fn is_nondegenerate(&self) -> bool {
        (0..self.period() as i64).all(|n| {
            let z = self.z.eval(n);
            if (&z + self.zeta.eval(n)).is_zero() || (&z + self.zeta.eval(n - 1)).is_zero() {
                return false;
            }
            [Side::Xi, Side::Eta].into_iter().all(|side| {
                let v = self.values(side, n);
                v.iter().all(|a| !a.is_zero())
                    && v.iter()
                        .enumerate()
                        .all(|(i, a)| v[i + 1..].iter().all(|b| a != b && *a != -b))
            })
        })
    }

    /// All parameters as an assignment.
    pub fn assignment(&self) -> Assignment {
        let mut x = Assignment::new();
        x.insert(Symbol::Z, self.z.clone());
        x.insert(Symbol::Zeta, self.zeta.clone());
        for (s, v) in self.xi_points.iter().chain(&self.eta_points) {
            x.insert(*s, v.clone());
        }
        x
    }
}

/// Draws random members of `space` until one is nondegenerate.
pub fn sample_params<R: Rng>(space: &SolutionSpace, rng: &mut R) -> Result<ParamSystem> {
    for _ in 0..1000 {
        let p = ParamSystem::from_assignment(&space.random_member(rng))?;
        if p.is_nondegenerate() {
            return Ok(p);
        }
    }
    Err(Error::Unsupported(
        "every sampled parameter set was degenerate".into(),
    ))
}

/// How half-step coefficients are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Trihomographic,
    Ancillary,
}

/// Coordinates the map can be evaluated over: ε-series for confinement
/// checks, polynomials over `F_p` for degree growth.
pub trait Coord: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// A rational constant in the same ring as `self`.
    fn lift(&self, r: &Rational) -> Result<Self>;
}

impl Coord for EpsSeries {
    fn add(&self, o: &Self) -> Self {
        EpsSeries::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        EpsSeries::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        EpsSeries::mul(self, o)
    }
    fn lift(&self, r: &Rational) -> Result<Self> {
        Ok(EpsSeries::exact(r.clone()))
    }
}

impl Coord for PolyFp {
    fn add(&self, o: &Self) -> Self {
        PolyFp::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        PolyFp::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        PolyFp::mul(self, o)
    }
    fn lift(&self, r: &Rational) -> Result<Self> {
        let p = self.modulus();
        reduce(r, p)
            .map(|v| PolyFp::constant(p, v))
            .ok_or(Error::PrimeCollision)
    }
}

/// `[n0·o0 + n1·o1 : d0·o0 + d1·o1]`.
struct Homography<T> {
    n0: T,
    n1: T,
    d0: T,
    d1: T,
}

impl<T: Coord> Homography<T> {
    fn apply(&self, (o0, o1): (&T, &T)) -> (T, T) {
        (
            self.n0.mul(o0).add(&self.n1.mul(o1)),
            self.d0.mul(o0).add(&self.d1.mul(o1)),
        )
    }
}

fn sq(r: &Rational) -> Rational {
    r * r
}

/// Coefficients of `y_n` as a homography in `y_{n-1}`, given `x_n`.
fn y_step<T: Coord>(
    p: &ParamSystem,
    route: Route,
    n: i64,
    (x0, x1): (&T, &T),
) -> Result<Homography<T>> {
    let z = p.z.eval(n);
    let zp = p.zeta.eval(n - 1);
    match route {
        Route::Trihomographic => {
            let v = p.values(Side::Xi, n);
            let kappa = p.kappa(n);
            let xb = x0.sub(&x1.mul(&x0.lift(&sq(&v[1]))?));
            let xa = x0.sub(&x1.mul(&x0.lift(&sq(&v[0]))?));
            trihomographic_coeffs(
                &xb,
                &xa,
                &sq(&(&zp + &kappa)),
                &sq(&(&zp - &kappa)),
                &sq(&(&z + &kappa)),
                &sq(&(&z - &kappa)),
            )
        }
        Route::Ancillary => AncillaryForm::new(&z, &zp, &p.values(Side::Xi, n)).at(x0, x1),
    }
}

/// Coefficients of `x_{n+1}` as a homography in `x_n`, given `y_n`.
fn x_step<T: Coord>(
    p: &ParamSystem,
    route: Route,
    n: i64,
    (y0, y1): (&T, &T),
) -> Result<Homography<T>> {
    let z = p.z.eval(n);
    let ze = p.zeta.eval(n);
    match route {
        Route::Trihomographic => {
            let v = p.values(Side::Eta, n);
            let k = p.k(n);
            let yd = y0.sub(&y1.mul(&y0.lift(&sq(&v[1]))?));
            let yc = y0.sub(&y1.mul(&y0.lift(&sq(&v[0]))?));
            trihomographic_coeffs(
                &yd,
                &yc,
                &sq(&(&z + &k)),
                &sq(&(&z - &k)),
                &sq(&(&ze + &k)),
                &sq(&(&ze - &k)),
            )
        }
        Route::Ancillary => AncillaryForm::new(&ze, &z, &p.values(Side::Eta, n)).at(y0, y1),
    }
}

/// Solves `(V − a)/(V − b) · (o − e)/(o − f) · g1/g2 = 1` for `V`, where
/// `g1`, `g2` are the factors in the other variable and `o` the previous value.
fn trihomographic_coeffs<T: Coord>(
    g1: &T,
    g2: &T,
    a: &Rational,
    b: &Rational,
    e: &Rational,
    f: &Rational,
) -> Result<Homography<T>> {
    let c = |r: &Rational| g1.lift(r);
    Ok(Homography {
        n0: c(a)?.mul(g1).sub(&c(b)?.mul(g2)),
        n1: c(&(b * f))?.mul(g2).sub(&c(&(a * e))?.mul(g1)),
        d0: g1.sub(g2),
        d1: c(f)?.mul(g2).sub(&c(e)?.mul(g1)),
    })
}

/// The ancillary half-step
/// `(V − (w−u)²)/(V − (w+u)²) · (o − (w−s)²)/(o − (w+s)²) = Π(w − P_i)/Π(w + P_i)`
/// with `w² = ` the other variable, reduced to polynomials in `w²`.
struct AncillaryForm {
    n0: Vec<Rational>,
    n1: Vec<Rational>,
    d0: Vec<Rational>,
    d1: Vec<Rational>,
    degree: usize,
}

impl AncillaryForm {
    fn new(u: &Rational, s: &Rational, points: &[Rational]) -> Self {
        let lin = |c: &Rational| Poly::new(vec![c.clone(), Rational::one()]);
        let square = |p: Poly| p.mul(&p);
        let a = square(lin(&-u));
        let b = square(lin(u));
        let e1 = square(lin(&-s));
        let e2 = square(lin(s));
        let r1 = points.iter().fold(Poly::one(), |acc, c| acc.mul(&lin(&-c)));
        let r2 = points.iter().fold(Poly::one(), |acc, c| acc.mul(&lin(c)));
        let p0 = a.mul(&r2).sub(&b.mul(&r1));
        let p1 = b.mul(&e2).mul(&r1).sub(&a.mul(&e1).mul(&r2));
        let q0 = r2.sub(&r1);
        let q1 = e2.mul(&r1).sub(&e1.mul(&r2));
        // Under w ↦ −w every piece picks up (−1)^(k+1).
        let odd = points.len().is_multiple_of(2);
        let fold = |p: &Poly| -> Vec<Rational> {
            let c = p.coeffs();
            debug_assert!(c
                .iter()
                .enumerate()
                .all(|(i, v)| (i % 2 == 1) == odd || v.is_zero()));
            c.iter()
                .skip(usize::from(odd))
                .step_by(2)
                .cloned()
                .collect()
        };
        let (n0, n1, d0, d1) = (fold(&p0), fold(&p1), fold(&q0), fold(&q1));
        let degree = [&n0, &n1, &d0, &d1]
            .iter()
            .map(|v| v.len())
            .max()
            .unwrap_or(1)
            .saturating_sub(1);
        AncillaryForm {
            n0,
            n1,
            d0,
            d1,
            degree,
        }
    }

    fn at<T: Coord>(&self, w0: &T, w1: &T) -> Result<Homography<T>> {
        let d = self.degree;
        let mut p0 = vec![w0.lift(&Rational::one())?];
        let mut p1 = vec![w0.lift(&Rational::one())?];
        for i in 0..d {
            p0.push(p0[i].mul(w0));
            p1.push(p1[i].mul(w1));
        }
        let hom = |c: &[Rational]| -> Result<T> {
            let mut acc = w0.lift(&Rational::zero())?;
            for (j, cj) in c.iter().enumerate() {
                if !cj.is_zero() {
                    acc = acc.add(&p0[j].mul(&p1[d - j]).mul(&w0.lift(cj)?));
                }
            }
            Ok(acc)
        };
        Ok(Homography {
            n0: hom(&self.n0)?,
            n1: hom(&self.n1)?,
            d0: hom(&self.d0)?,
            d1: hom(&self.d1)?,
        })
    }
}

/// State before computing `y_n`: the pair `(x_n, y_{n-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct MapState {
    pub n: i64,
    pub x: ProjectiveValue,
    pub y_prev: ProjectiveValue,
}

impl MapState {
    pub fn from_rationals(n: i64, x: Rational, y_prev: Rational, order: i64) -> Self {
        MapState {
            n,
            x: ProjectiveValue::from_rational(x, order),
            y_prev: ProjectiveValue::from_rational(y_prev, order),
        }
    }
}

fn pv_step(
    h: &Homography<EpsSeries>,
    old: &ProjectiveValue,
    half_step: i64,
) -> Result<ProjectiveValue> {
    let (num, den) = h.apply((&old.num, &old.den));
    let v = ProjectiveValue::new(num, den);
    if v.is_degenerate() {
        return Err(Error::IndeterminateStep { step: half_step });
    }
    Ok(v.affine()?)
}

fn half_y(p: &ParamSystem, route: Route, s: &MapState) -> Result<ProjectiveValue> {
    let h = y_step(p, route, s.n, (&s.x.num, &s.x.den))?;
    pv_step(&h, &s.y_prev, 2 * s.n + 1)
}

fn half_x(
    p: &ParamSystem,
    route: Route,
    n: i64,
    x: &ProjectiveValue,
    y: &ProjectiveValue,
) -> Result<ProjectiveValue> {
    let h = x_step(p, route, n, (&y.num, &y.den))?;
    pv_step(&h, x, 2 * n + 2)
}

/// One full step `(x_n, y_{n-1}) ↦ (x_{n+1}, y_n)` on the system's default route.
pub fn step_forward(s: &MapState, p: &ParamSystem) -> Result<MapState> {
    step_via(s, p, p.default_route())
}

pub fn step_via(s: &MapState, p: &ParamSystem, route: Route) -> Result<MapState> {
    if route == Route::Trihomographic && !p.is_trihomographic() {
        return Err(Error::Unsupported(
            "the trihomographic route needs two points per side".into(),
        ));
    }
    let y = half_y(p, route, s)?;
    let x = half_x(p, route, s.n, &s.x, &y)?;
    Ok(MapState {
        n: s.n + 1,
        x,
        y_prev: y,
    })
}

/// Right-hand sides of the canonical additive form at `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CanonicalRhs {
    pub n: i64,
    #[serde(with = "crate::arith::rational::serde_fraction")]
    pub z: Rational,
    #[serde(with = "crate::arith::rational::serde_fraction")]
    pub zeta: Rational,
    #[serde(with = "crate::arith::rational::serde_fraction")]
    pub zeta_prev: Rational,
    #[serde(with = "crate::arith::rational::serde_fraction")]
    pub k_sq: Rational,
    #[serde(with = "crate::arith::rational::serde_fraction")]
    pub kappa_sq: Rational,
}

impl CanonicalRhs {
    /// `(y − k²)/(z + ζ) + z + ζ`, the right side of the x-equation.
    pub fn x_side(&self, y: &Rational) -> Rational {
        let s = &self.z + &self.zeta;
        (y - &self.k_sq) / &s + s
    }

    /// `(x − κ²)/(z + ζ[-1]) + z + ζ[-1]`, the right side of the y-equation.
    pub fn y_side(&self, x: &Rational) -> Rational {
        let s = &self.z + &self.zeta_prev;
        (x - &self.kappa_sq) / &s + s
    }
}

pub fn canonical_rhs(p: &ParamSystem, n: i64) -> Result<CanonicalRhs> {
    if !p.is_trihomographic() {
        return Err(Error::Unsupported(
            "the canonical form needs two points per side".into(),
        ));
    }
    let rhs = CanonicalRhs {
        n,
        z: p.z.eval(n),
        zeta: p.zeta.eval(n),
        zeta_prev: p.zeta.eval(n - 1),
        k_sq: sq(&p.k(n)),
        kappa_sq: sq(&p.kappa(n)),
    };
    if (&rhs.z + &rhs.zeta).is_zero() || (&rhs.z + &rhs.zeta_prev).is_zero() {
        return Err(Error::DegenerateDenominator { n });
    }
    Ok(rhs)
}

/// Solves `((u)(v) + 4·o·a·b) / (a·u + b·v) = q` for `u`, where the left
/// side is the canonical form's, `u` holds the unknown.
fn canonical_solve(
    q: &Rational,
    a: &Rational,
    b: &Rational,
    v: &Rational,
    o: &Rational,
    step: i64,
) -> Result<Rational> {
    let den = v - q * a;
    if den.is_zero() {
        return Err(Error::IndeterminateStep { step });
    }
    Ok((q * b * v - Rational::from_integer(4.into()) * o * a * b) / den)
}

/// One step of the canonical additive form from finite data:
/// `(x_n, y_{n-1}) ↦ (y_n, x_{n+1})`.
pub fn canonical_step(
    p: &ParamSystem,
    n: i64,
    x: &Rational,
    y_prev: &Rational,
) -> Result<(Rational, Rational)> {
    let c = canonical_rhs(p, n)?;
    // y-equation: u = x − y + z², v = x − y_{n−1} + ζ[-1]².
    let v = x - y_prev + sq(&c.zeta_prev);
    let u = canonical_solve(&c.y_side(x), &c.zeta_prev, &c.z, &v, x, 2 * n + 1)?;
    let y = x + sq(&c.z) - u;
    // x-equation: u = y − x_{n+1} + ζ², v = y − x + z².
    let v = &y - x + sq(&c.z);
    let u = canonical_solve(&c.x_side(&y), &c.z, &c.zeta, &v, &y, 2 * n + 2)?;
    let x_next = &y + sq(&c.zeta) - u;
    Ok((y, x_next))
}

fn half_step_of(side: Side, n0: i64) -> i64 {
    match side {
        Side::Xi => 2 * n0,
        Side::Eta => 2 * n0 + 1,
    }
}

/// Positions the orbit on the singular value `entry` at `n0`.
///
/// For a ξ-side point `P`: `x_{n0} = (P_{n0} + ε)²` and `y_{n0−1} = seed`.
/// For an η-side point `P`: the pair `(x_{n0}, y_{n0}) = (seed, (P_{n0} + ε)²)`
/// is taken as initial data and the state returned is the one after the
/// x-half-step, with `y_prev = y_{n0}`. Solving the y-equation backwards
/// for `y_{n0−1}` instead fails whenever `P²` is the image of a contracted
/// ξ-line (a one-step exit into `P`): every preimage is then singular.
pub fn enter_singularity(
    p: &ParamSystem,
    entry: Symbol,
    n0: i64,
    seed: &Rational,
    order: i64,
) -> Result<MapState> {
    let side = entry
        .side()
        .ok_or_else(|| Error::Parse(format!("{entry} is not a singular point")))?;
    let value = p
        .point(entry)
        .ok_or_else(|| Error::Parse(format!("no point {entry} in this system")))?
        .eval(n0);
    let route = p.default_route();
    let collision = || Error::SeedCollision {
        seed: to_fraction(seed),
        n: n0,
    };
    let eps = EpsSeries::perturbed(value.clone(), order);
    let singular = ProjectiveValue::finite(eps.mul(&eps), order);
    let seed_pv = ProjectiveValue::from_rational(seed.clone(), order);
    let exact = |r: Rational| (EpsSeries::exact(r), EpsSeries::exact(Rational::one()));
    match side {
        Side::Xi => {
            // The seed must not itself be an η-side singular value, nor make
            // the y-equation at x = P² read 0 = 0.
            if p.values(Side::Eta, n0 - 1).iter().any(|c| sq(c) == *seed) {
                return Err(collision());
            }
            let (x0, x1) = exact(sq(&value));
            let (s0, s1) = exact(seed.clone());
            let (a, b) = y_step(p, route, n0, (&x0, &x1))?.apply((&s0, &s1));
            if a.is_zero() && b.is_zero() {
                return Err(collision());
            }
            Ok(MapState {
                n: n0,
                x: singular,
                y_prev: seed_pv,
            })
        }
        Side::Eta => {
            if p.values(Side::Xi, n0).iter().any(|c| sq(c) == *seed) {
                return Err(collision());
            }
            let (y0, y1) = exact(sq(&value));
            let (s0, s1) = exact(seed.clone());
            let (a, b) = x_step(p, route, n0, (&y0, &y1))?.apply((&s0, &s1));
            if a.is_zero() && b.is_zero() {
                return Err(collision());
            }
            let x = half_x(p, route, n0, &seed_pv, &singular)?;
            Ok(MapState {
                n: n0 + 1,
                x,
                y_prev: singular,
            })
        }
    }
}

/// The values at half-steps `entry, entry + 1, …`, `count` of them.
fn orbit(
    p: &ParamSystem,
    route: Route,
    start: MapState,
    side: Side,
    count: usize,
) -> Result<Vec<ProjectiveValue>> {
    let mut out = Vec::with_capacity(count);
    let mut s = start;
    if side == Side::Eta {
        out.push(s.y_prev.clone());
    }
    out.push(s.x.clone());
    while out.len() < count {
        let y = half_y(p, route, &s)?;
        out.push(y.clone());
        let x = half_x(p, route, s.n, &s.x, &y)?;
        out.push(x.clone());
        s = MapState {
            n: s.n + 1,
            x,
            y_prev: y,
        };
    }
    out.truncate(count);
    Ok(out)
}

/// Parameters of one dual-run confinement check.
#[derive(Clone, Debug)]
pub struct Probe {
    pub entry: Symbol,
    pub n0: i64,
    /// Expected length in half-steps, if any.
    pub declared: Option<u32>,
    /// Half-steps followed after entry.
    pub max_steps: usize,
    pub seeds: [Rational; 2],
    pub eps_order: i64,
}

impl Probe {
    pub fn new(entry: Symbol, n0: i64, declared: Option<u32>, seeds: [Rational; 2]) -> Self {
        let max_steps = declared.map_or(24, |d| d as usize + 6);
        Probe {
            entry,
            n0,
            declared,
            max_steps,
            seeds,
            eps_order: DEFAULT_EPS_ORDER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TracePoint {
    pub half_step: i64,
    pub variable: &'static str,
    pub n: i64,
    /// ε → 0 limits of the two runs.
    pub limits: [Limit; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfinementReport {
    pub entry_point: Symbol,
    pub entry_step: i64,
    pub declared_length: Option<u32>,
    pub exit_step: Option<i64>,
    pub exit_point: Option<Symbol>,
    /// Every point whose square matched at the exit step; more than one is a tie.
    pub exit_candidates: Vec<Symbol>,
    pub confined: bool,
    /// Both runs share their limits from entry to exit.
    pub memory_lost: bool,
    pub memory_recovered: bool,
    pub route: Route,
    pub eps_order: i64,
    pub seeds: [String; 2],
    pub trace: Vec<TracePoint>,
}

impl ConfinementReport {
    pub fn length(&self) -> Option<i64> {
        self.exit_step.map(|e| e - self.entry_step)
    }
}

/// Follows the singularity entered at `probe.entry` in two runs that differ
/// only in the seed. The exit is the last half-step before the runs' limits
/// separate, provided its limit is the square of a singular point (that is,
/// a denominator of the map vanishes there); separation must follow within
/// two half-steps. Retries with doubled ε-order when precision runs out.
pub fn check_confinement(p: &ParamSystem, probe: &Probe) -> Result<ConfinementReport> {
    let mut order = probe.eps_order.max(1);
    loop {
        match attempt(p, probe, order) {
            Err(Error::Arith(ArithError::PrecisionExhausted))
            | Err(Error::IndeterminateStep { .. })
                if order < MAX_EPS_ORDER =>
            {
                order = (2 * order).min(MAX_EPS_ORDER);
            }
            r => return r,
        }
    }
}

fn attempt(p: &ParamSystem, probe: &Probe, order: i64) -> Result<ConfinementReport> {
    let route = p.default_route();
    let side = probe
        .entry
        .side()
        .ok_or_else(|| Error::Parse(format!("{} is not a singular point", probe.entry)))?;
    let h0 = half_step_of(side, probe.n0);
    let count = probe.max_steps + 1;
    let mut runs = Vec::with_capacity(2);
    for seed in &probe.seeds {
        let start = enter_singularity(p, probe.entry, probe.n0, seed, order)?;
        runs.push(orbit(p, route, start, side, count)?);
    }
    let mut trace = Vec::with_capacity(count);
    for j in 0..count {
        let h = h0 + j as i64;
        let l0 = limit_at_zero(&runs[0][j])?;
        let l1 = limit_at_zero(&runs[1][j])?;
        let (variable, n) = if h % 2 == 0 {
            ("x", h / 2)
        } else {
            ("y", (h - 1) / 2)
        };
        trace.push(TracePoint {
            half_step: h,
            variable,
            n,
            limits: [l0, l1],
        });
    }
    let split = trace
        .iter()
        .skip(1)
        .position(|t| t.limits[0] != t.limits[1])
        .map(|i| i + 1);
    let matches = |t: &TracePoint| -> Vec<Symbol> {
        let side = if t.variable == "x" {
            Side::Xi
        } else {
            Side::Eta
        };
        p.points(side)
            .iter()
            .filter(|(_, v)| t.limits[0] == Limit::Finite(sq(&v.eval(t.n))))
            .map(|(s, _)| *s)
            .collect()
    };
    let mut report = ConfinementReport {
        entry_point: probe.entry,
        entry_step: h0,
        declared_length: probe.declared,
        exit_step: None,
        exit_point: None,
        exit_candidates: Vec::new(),
        confined: false,
        memory_lost: true,
        memory_recovered: split.is_some(),
        route,
        eps_order: order,
        seeds: [to_fraction(&probe.seeds[0]), to_fraction(&probe.seeds[1])],
        trace,
    };
    let Some(split) = split else {
        return Err(Error::NotConfinedWithinBudget {
            budget: probe.max_steps,
            report: Box::new(report),
        });
    };
    report.memory_lost = split > 1;
    for e in [split - 1, split.saturating_sub(2)] {
        if e == 0 {
            continue;
        }
        let m = matches(&report.trace[e]);
        if !m.is_empty() {
            report.exit_step = Some(h0 + e as i64);
            report.exit_point = (m.len() == 1).then(|| m[0]);
            report.exit_candidates = m;
            break;
        }
    }
    report.confined = report.exit_point.is_some()
        && report.memory_lost
        && probe
            .declared
            .is_none_or(|d| report.length() == Some(d as i64));
    Ok(report)
}

fn reduce_pair((a, b): (PolyFp, PolyFp)) -> (PolyFp, PolyFp) {
    let g = PolyFp::gcd(&a, &b);
    let (a, b) = if g.degree().unwrap_or(0) > 0 {
        (a.exact_div(&g), b.exact_div(&g))
    } else {
        (a, b)
    };
    let lead = if b.is_zero() { &a } else { &b };
    let c = lead.lc();
    if c <= 1 {
        return (a, b);
    }
    let inv = crate::arith::modp::inv_mod(c, a.modulus());
    (a.scale(inv), b.scale(inv))
}

fn degree_of((a, b): &(PolyFp, PolyFp)) -> usize {
    a.degree().unwrap_or(0).max(b.degree().unwrap_or(0))
}

/// Iterates `f` on `[t : 1]` over `F_prime` and records the degree of each
/// iterate after cancelling common factors.
pub fn track_degrees<F>(prime: u64, steps: usize, mut f: F) -> Result<Vec<usize>>
where
    F: FnMut(usize, &(PolyFp, PolyFp)) -> Result<(PolyFp, PolyFp)>,
{
    let mut v = (PolyFp::t(prime), PolyFp::constant(prime, 1));
    let mut out = vec![1];
    for i in 0..steps {
        let next = reduce_pair(f(i, &v)?);
        if next.0.is_zero() && next.1.is_zero() {
            return Err(Error::PrimeCollision);
        }
        out.push(degree_of(&next));
        v = next;
    }
    Ok(out)
}

fn degrees_mod(
    p: &ParamSystem,
    n0: i64,
    steps: usize,
    [a, b]: &[Rational; 2],
    prime: u64,
) -> Result<Vec<usize>> {
    let route = p.default_route();
    let a = reduce(a, prime).ok_or(Error::PrimeCollision)?;
    let b = reduce(b, prime).ok_or(Error::PrimeCollision)?;
    let line = PolyFp::t(prime).scale(a).add(&PolyFp::constant(prime, b));
    let mut y_prev = (line, PolyFp::constant(prime, 1));
    track_degrees(prime, steps, |i, x| {
        let n = n0 + i as i64;
        let y = reduce_pair(y_step(p, route, n, (&x.0, &x.1))?.apply((&y_prev.0, &y_prev.1)));
        if y.0.is_zero() && y.1.is_zero() {
            return Err(Error::PrimeCollision);
        }
        let next = x_step(p, route, n, (&y.0, &y.1))?.apply((&x.0, &x.1));
        y_prev = y;
        Ok(next)
    })
}

/// Degrees in `t` of `x_{n0}, …, x_{n0+steps}` for the orbit starting at
/// `x_{n0} = t`, `y_{n0−1} = y_seed`, computed over 31-bit prime fields.
/// Bad reduction can only lower a degree, so primes are compared and the
/// elementwise maximum kept.
pub fn degree_growth(
    p: &ParamSystem,
    n0: i64,
    steps: usize,
    y_seed: &Rational,
) -> Result<Vec<usize>> {
    degree_growth_on_line(p, n0, steps, &[Rational::zero(), y_seed.clone()])
}

/// As [`degree_growth`] with `y_{n0−1} = a·t + b`.
pub fn degree_growth_on_line(
    p: &ParamSystem,
    n0: i64,
    steps: usize,
    line: &[Rational; 2],
) -> Result<Vec<usize>> {
    let mut best: Option<Vec<usize>> = None;
    let mut agreeing = 0;
    for &prime in &PRIMES {
        let Ok(d) = degrees_mod(p, n0, steps, line, prime) else {
            continue;
        };
        match &mut best {
            None => {
                best = Some(d);
                agreeing = 1;
            }
            Some(b) if *b == d => agreeing += 1,
            Some(b) => {
                for (x, y) in b.iter_mut().zip(d) {
                    *x = (*x).max(y);
                }
                agreeing = 1;
            }
        }
        if agreeing >= 2 {
            break;
        }
    }
    best.ok_or(Error::PrimeCollision)
}

/// `d_{n+1}/d_n` for consecutive degrees.
pub fn degree_ratios(d: &[usize]) -> Vec<Rational> {
    d.windows(2)
        .map(|w| Rational::new((w[1] as i64).into(), (w[0].max(1) as i64).into()))
        .collect()
}

/// Over the last four ratios, degrees never drop and the ratios strictly
/// decrease, so they settle towards 1.
pub fn is_subexponential(d: &[usize]) -> bool {
    let r = degree_ratios(d);
    if r.len() < 4 {
        return false;
    }
    let tail = &r[r.len() - 4..];
    tail.iter().all(|x| *x >= Rational::one()) && tail.windows(2).all(|w| w[1] < w[0])
}

/// Degrees grow at least like `(3/2)^n` over the last four ratios.
pub fn is_exponential(d: &[usize]) -> bool {
    let r = degree_ratios(d);
    r.len() >= 4
        && r[r.len() - 4..]
            .iter()
            .all(|x| *x >= Rational::new(3.into(), 2.into()))
}

/// A seed drawn with the module's sampling bound.
pub fn random_seed<R: Rng>(rng: &mut R) -> Rational {
    random_rational(rng, 100)
}
