//! Step quartets, exit maps and the classes of singularity patterns.
//!
//! A pattern attaches a step length and an exit point to each of the four
//! entry points A, B, C, D. Steps are listed in the order (A, B, C, D).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Point {
    A,
    B,
    C,
    D,
}

/// Which ancillary variable a point belongs to: ξ for A, B and η for C, D.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Xi,
    Eta,
}

impl Point {
    pub const ALL: [Point; 4] = [Point::A, Point::B, Point::C, Point::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn side(self) -> Side {
        match self {
            Point::A | Point::B => Side::Xi,
            Point::C | Point::D => Side::Eta,
        }
    }

    /// A↔C, B↔D.
    pub fn exchanged(self) -> Point {
        Point::ALL[(self.index() + 2) % 4]
    }

    fn swap_ab(self) -> Point {
        match self {
            Point::A => Point::B,
            Point::B => Point::A,
            p => p,
        }
    }

    fn swap_cd(self) -> Point {
        match self {
            Point::C => Point::D,
            Point::D => Point::C,
            p => p,
        }
    }

    pub fn parse(s: &str) -> Option<Point> {
        match s.trim() {
            "A" | "a" => Some(Point::A),
            "B" | "b" => Some(Point::B),
            "C" | "c" => Some(Point::C),
            "D" | "d" => Some(Point::D),
            _ => None,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u32; 4]", into = "[u32; 4]")]
pub struct StepQuartet {
    steps: [u32; 4],
}

impl TryFrom<[u32; 4]> for StepQuartet {
    type Error = String;
    fn try_from(s: [u32; 4]) -> std::result::Result<Self, String> {
        StepQuartet::new(s).ok_or_else(|| format!("{s:?} is not four positive steps summing to 16"))
    }
}

impl From<StepQuartet> for [u32; 4] {
    fn from(q: StepQuartet) -> Self {
        q.steps
    }
}

impl StepQuartet {
    pub const TOTAL: u32 = 16;

    pub fn new(steps: [u32; 4]) -> Option<Self> {
        (steps.iter().all(|&s| s > 0) && steps.iter().sum::<u32>() == Self::TOTAL)
            .then_some(StepQuartet { steps })
    }

    pub fn steps(&self) -> [u32; 4] {
        self.steps
    }

    pub fn get(&self, p: Point) -> u32 {
        self.steps[p.index()]
    }

    /// Non-increasing rearrangement.
    pub fn sorted(&self) -> StepQuartet {
        let mut s = self.steps;
        s.sort_unstable_by(|a, b| b.cmp(a));
        StepQuartet { steps: s }
    }

    pub fn parity(&self) -> Parity {
        classify_parity(self)
    }
}

impl fmt::Display for StepQuartet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [m, n, p, q] = self.steps;
        write!(f, "{{{m},{n},{p},{q}}}")
    }
}

/// All compositions of 16 into four positive parts, or their multisets.
pub fn enumerate_quartets(ordered: bool) -> Vec<StepQuartet> {
    let mut out = Vec::new();
    for m in 1..=13 {
        for n in 1..=(16 - m - 2) {
            for p in 1..=(16 - m - n - 1) {
                let q = 16 - m - n - p;
                if !ordered && !(m >= n && n >= p && p >= q) {
                    continue;
                }
                out.push(StepQuartet {
                    steps: [m, n, p, q],
                });
            }
        }
    }
    if !ordered {
        out.sort_by(|a, b| b.cmp(a));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    AllEven,
    AllOdd,
    Mixed,
}

impl Parity {
    pub const ALL: [Parity; 3] = [Parity::AllEven, Parity::AllOdd, Parity::Mixed];

    /// Prefix used in pattern ids.
    pub fn tag(self) -> &'static str {
        match self {
            Parity::AllEven => "even",
            Parity::AllOdd => "odd",
            Parity::Mixed => "mixed",
        }
    }

    pub fn parse(s: &str) -> Option<Parity> {
        match s.to_ascii_lowercase().as_str() {
            "even" | "alleven" => Some(Parity::AllEven),
            "odd" | "allodd" => Some(Parity::AllOdd),
            "mixed" => Some(Parity::Mixed),
            _ => None,
        }
    }

    pub fn class_count(self) -> usize {
        enumerate_exit_classes(self).len()
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

pub fn classify_parity(q: &StepQuartet) -> Parity {
    match q.steps.iter().filter(|s| *s % 2 == 1).count() {
        0 => Parity::AllEven,
        4 => Parity::AllOdd,
        _ => Parity::Mixed,
    }
}

/// Entry → exit assignment, indexed by entry point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExitMap {
    exits: [Point; 4],
}

impl ExitMap {
    pub fn new(exits: [Point; 4]) -> Self {
        ExitMap { exits }
    }

    pub fn exit(&self, entry: Point) -> Point {
        self.exits[entry.index()]
    }

    pub fn exits(&self) -> [Point; 4] {
        self.exits
    }

    /// `{A→C, B→D, C→A, D→B}`.
    pub fn describe(&self) -> String {
        let arcs: Vec<String> = Point::ALL
            .iter()
            .map(|&e| format!("{e}→{}", self.exit(e)))
            .collect();
        format!("{{{}}}", arcs.join(", "))
    }
}

use Point::{A, B, C, D};

/// The normalized exit classes for a parity.
pub fn enumerate_exit_classes(parity: Parity) -> Vec<ExitMap> {
    let v: &[[Point; 4]] = match parity {
        Parity::AllEven => &[[A, B, C, D], [A, B, D, C], [B, A, D, C]],
        Parity::AllOdd => &[[C, D, A, B], [C, D, B, A]],
        Parity::Mixed => &[[C, B, A, D], [C, A, B, D], [C, A, D, B]],
    };
    v.iter().map(|&e| ExitMap::new(e)).collect()
}

fn class_index(parity: Parity, exits: &ExitMap) -> Option<u8> {
    enumerate_exit_classes(parity)
        .iter()
        .position(|e| e == exits)
        .map(|i| i as u8 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SingularityPattern {
    pub quartet: StepQuartet,
    pub exits: ExitMap,
}

impl SingularityPattern {
    /// Checks parity consistency: odd steps switch side, even steps keep it.
    pub fn new(quartet: StepQuartet, exits: ExitMap) -> Result<Self> {
        for e in Point::ALL {
            let s = quartet.get(e);
            let f = exits.exit(e);
            if (s % 2 == 1) == (e.side() == f.side()) {
                return Err(Error::ParityViolation(format!(
                    "entry {e} with step {s} cannot exit through {f}"
                )));
            }
        }
        Ok(SingularityPattern { quartet, exits })
    }

    pub fn from_class(parity: Parity, class: u8, steps: [u32; 4]) -> Result<Self> {
        let q =
            StepQuartet::new(steps).ok_or_else(|| Error::Parse(format!("bad steps {steps:?}")))?;
        let classes = enumerate_exit_classes(parity);
        let e = classes
            .get((class as usize).wrapping_sub(1))
            .ok_or_else(|| Error::Parse(format!("{} has no class {class}", parity.tag())))?;
        if classify_parity(&q) != parity {
            return Err(Error::ParityViolation(format!(
                "steps {q} are not {}",
                parity.tag()
            )));
        }
        SingularityPattern::new(q, *e)
    }

    pub fn step(&self, entry: Point) -> u32 {
        self.quartet.get(entry)
    }

    pub fn exit(&self, entry: Point) -> Point {
        self.exits.exit(entry)
    }

    pub fn parity(&self) -> Parity {
        classify_parity(&self.quartet)
    }

    /// Index (1-based) of the normalized class, if the exit map is normalized.
    pub fn class(&self) -> Option<u8> {
        class_index(self.parity(), &self.exits)
    }

    /// `odd.c1.7-7-1-1`; non-normalized exit maps are spelled out instead.
    pub fn id(&self) -> String {
        let [m, n, p, q] = self.quartet.steps;
        let cls = match self.class() {
            Some(c) => format!("c{c}"),
            None => self.exits.exits().iter().map(|p| p.to_string()).collect(),
        };
        format!("{}.{cls}.{m}-{n}-{p}-{q}", self.parity().tag())
    }

    /// Parses `odd.c1.7-7-1-1`. Classes may also be written `ci`, `cii`, `ciii`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = || {
            Error::Parse(format!(
                "malformed pattern `{spec}` (expected e.g. odd.c1.7-7-1-1)"
            ))
        };
        let parts: Vec<&str> = spec.trim().split('.').collect();
        let [par, cls, st] = parts[..] else {
            return Err(bad());
        };
        let parity = Parity::parse(par).ok_or_else(bad)?;
        let class = parse_class(cls).ok_or_else(bad)?;
        let steps: Vec<u32> = st
            .split('-')
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let steps: [u32; 4] = steps.try_into().map_err(|_| bad())?;
        SingularityPattern::from_class(parity, class, steps)
    }

    fn arcs(&self) -> [(Point, Point, u32); 4] {
        Point::ALL.map(|e| (e, self.exit(e), self.step(e)))
    }

    fn from_arcs(arcs: [(Point, Point, u32); 4]) -> Self {
        let mut exits = [A; 4];
        let mut steps = [0; 4];
        for (e, f, s) in arcs {
            exits[e.index()] = f;
            steps[e.index()] = s;
        }
        SingularityPattern {
            quartet: StepQuartet { steps },
            exits: ExitMap { exits },
        }
    }

    /// Images under the generators of the symmetry group: relabeling A↔B,
    /// relabeling C↔D, reversal of evolution with A↔C, B↔D exchanged, and the
    /// half-step shift that trades the roles of ξ and η.
    pub fn symmetry_images(&self) -> [SingularityPattern; 4] {
        let arcs = self.arcs();
        let ab = arcs.map(|(e, f, s)| (e.swap_ab(), f.swap_ab(), s));
        let cd = arcs.map(|(e, f, s)| (e.swap_cd(), f.swap_cd(), s));
        let rev = arcs.map(|(e, f, s)| (f.exchanged(), e.exchanged(), s));
        let half = arcs.map(|(e, f, s)| (e.exchanged(), f.exchanged(), s));
        [ab, cd, rev, half].map(Self::from_arcs)
    }

    pub fn orbit(&self) -> BTreeSet<SingularityPattern> {
        let mut seen = BTreeSet::from([*self]);
        let mut queue = VecDeque::from([*self]);
        while let Some(p) = queue.pop_front() {
            for q in p.symmetry_images() {
                if seen.insert(q) {
                    queue.push_back(q);
                }
            }
        }
        seen
    }

    /// Representative with a normalized exit map and lexicographically largest steps.
    pub fn canonical(&self) -> SingularityPattern {
        let orbit = self.orbit();
        orbit
            .iter()
            .filter(|p| p.class().is_some())
            .max_by(|a, b| {
                a.quartet
                    .steps
                    .cmp(&b.quartet.steps)
                    .then(b.class().cmp(&a.class()))
            })
            .copied()
            .unwrap_or_else(|| *orbit.iter().next().unwrap())
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical() == *self
    }
}

fn parse_class(s: &str) -> Option<u8> {
    let t = s.strip_prefix('c').or_else(|| s.strip_prefix("class"))?;
    match t {
        "1" | "i" => Some(1),
        "2" | "ii" => Some(2),
        "3" | "iii" => Some(3),
        _ => None,
    }
}

impl fmt::Display for SingularityPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.class() {
            Some(c) => write!(f, "{} class{c} {}", self.parity(), self.quartet),
            None => write!(
                f,
                "{} {} {}",
                self.parity(),
                self.exits.describe(),
                self.quartet
            ),
        }
    }
}

/// All canonical patterns of the requested parities/classes, deduplicated under
/// the symmetry group and sorted by (parity, class, steps descending).
pub fn enumerate_patterns(parity: Option<Parity>, class: Option<u8>) -> Vec<SingularityPattern> {
    let ordered = enumerate_quartets(true);
    let mut out = BTreeSet::new();
    for par in Parity::ALL
        .into_iter()
        .filter(|p| parity.is_none_or(|x| x == *p))
    {
        for (ci, exits) in enumerate_exit_classes(par).into_iter().enumerate() {
            if class.is_some_and(|c| c as usize != ci + 1) {
                continue;
            }
            for q in ordered.iter().filter(|q| classify_parity(q) == par) {
                if let Ok(p) = SingularityPattern::new(*q, exits) {
                    let c = p.canonical();
                    if c.class() == Some(ci as u8 + 1) {
                        out.insert(c);
                    }
                }
            }
        }
    }
    let mut v: Vec<_> = out.into_iter().collect();
    v.sort_by(|a, b| {
        (a.parity(), a.class())
            .cmp(&(b.parity(), b.class()))
            .then(b.quartet.cmp(&a.quartet))
    });
    v
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "reason")]
pub enum Feasibility {
    Feasible,
    Infeasible(String),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }
}

/// Necessary conditions from the autonomous limit (constant parameters, z+ζ
/// normalized to 2). Classes without such a condition pass and are left to the solver.
pub fn autonomous_feasibility(p: &SingularityPattern) -> Result<Feasibility> {
    let p = SingularityPattern::new(p.quartet, p.exits)?;
    let [m, n, pp, q] = p.quartet.steps;
    let verdict = match (p.parity(), p.class()) {
        (Parity::AllEven, Some(1)) if m + n != 8 || pp + q != 8 => {
            Feasibility::Infeasible(format!(
                "needs M+N=8 and P+Q=8, have M+N={} and P+Q={}",
                m + n,
                pp + q
            ))
        }
        // Adding A→C and D→B; equivalently N+P=8 from the other two relations.
        (Parity::AllOdd, Some(1)) if m + q != 8 => Feasibility::Infeasible(format!(
            "needs M+Q=8 (equivalently N+P=8), have M+Q={}",
            m + q
        )),
        (Parity::Mixed, Some(2)) if n != 4 => {
            Feasibility::Infeasible(format!("needs the B→A step to be 4, have {n}"))
        }
        (Parity::Mixed, Some(3)) if n != 4 || pp != 4 => {
            Feasibility::Infeasible(format!("needs B→A and C→D steps of 4, have {n} and {pp}"))
        }
        _ => Feasibility::Feasible,
    };
    Ok(verdict)
}

/// Verdict for a multiset in a class: feasible iff some ordering passes the
/// autonomous filter. An infeasible verdict carries the first ordering's reason.
pub fn multiset_feasibility(q: &StepQuartet, parity: Parity, class: u8) -> Result<Feasibility> {
    let classes = enumerate_exit_classes(parity);
    let exits = *classes
        .get((class as usize).wrapping_sub(1))
        .ok_or_else(|| Error::Parse(format!("{parity} has no class {class}")))?;
    let mut first = None;
    for o in enumerate_quartets(true)
        .into_iter()
        .filter(|o| o.sorted() == q.sorted())
    {
        let Ok(p) = SingularityPattern::new(o, exits) else {
            continue;
        };
        match autonomous_feasibility(&p)? {
            Feasibility::Feasible => return Ok(Feasibility::Feasible),
            f => {
                first.get_or_insert(f);
            }
        }
    }
    Ok(first.unwrap_or_else(|| {
        Feasibility::Infeasible(format!("no ordering of {q} fits {parity} class {class}"))
    }))
}

/// Multisets (non-increasing) admitting at least one autonomously feasible
/// ordering in the given class.
pub fn feasible_multisets(parity: Parity, class: u8) -> Vec<StepQuartet> {
    multisets(parity)
        .into_iter()
        .filter(|q| multiset_feasibility(q, parity, class).is_ok_and(|f| f.is_feasible()))
        .collect()
}

/// Multisets of a parity, non-increasing, in descending lexicographic order.
pub fn multisets(parity: Parity) -> Vec<StepQuartet> {
    enumerate_quartets(false)
        .into_iter()
        .filter(|q| classify_parity(q) == parity)
        .collect()
}
