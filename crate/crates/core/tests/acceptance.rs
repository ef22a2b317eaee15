//! Acceptance run: one PASS/FAIL line per criterion, checked at full strictness.
//!
//! Criteria that cannot be met with the published data are listed in
//! `KNOWN_FAILURES`; the run exits non-zero only when the set of failing
//! criteria differs from that list.

use num_traits::One;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};
use trihom_core::arith::{q, Limit, Rational};
use trihom_core::catalog::{
    catalog, catalog_entry, verify_all, CatalogEntry, EntryStatus, Formulas,
};
use trihom_core::confinement::{
    generate_constraints, generic_one_step, solve_ladder, verify_membership, Symbol,
};
use trihom_core::dynamics::{
    canonical_step, check_confinement, degree_growth, degree_ratios, is_exponential,
    is_subexponential, random_seed, step_via, MapState, ParamSystem, Probe, Route,
};
use trihom_core::patterns::{
    enumerate_quartets, feasible_multisets, multisets, Parity, Point, StepQuartet,
};
use trihom_core::sequences::{qps_linear_combine, QuasiPeriodicSequence};
use trihom_core::Error;

/// Criterion 3 asks for at most three corrected entries; the printed tables
/// need thirteen, and two entries admit no repair. Criterion 7 asks for
/// strictly monotone ratios, which the period-modulated degree increments of
/// several confined instances do not give.
const KNOWN_FAILURES: [u8; 2] = [3, 7];

/// Instances followed through the singular phase and the degree probe.
const DYNAMIC_INSTANCES: [&str; 8] = [
    "odd.c1.7-7-1-1",
    "odd.c2.7-1-7-1",
    "odd.c2.13-1-1-1",
    "odd.c2.7-3-3-3",
    "odd.c2.5-5-5-1",
    "mixed.c1.7-2-5-2",
    "mixed.c3.7-4-4-1",
    "mixed.c3.5-4-4-3",
];

const EVEN: [[u32; 4]; 5] = [
    [10, 2, 2, 2],
    [8, 4, 2, 2],
    [6, 6, 2, 2],
    [6, 4, 4, 2],
    [4, 4, 4, 4],
];
const ODD: [[u32; 4]; 9] = [
    [13, 1, 1, 1],
    [11, 3, 1, 1],
    [9, 5, 1, 1],
    [9, 3, 3, 1],
    [7, 7, 1, 1],
    [7, 5, 3, 1],
    [7, 3, 3, 3],
    [5, 5, 5, 1],
    [5, 5, 3, 3],
];
const MIXED: [[u32; 4]; 20] = [
    [12, 2, 1, 1],
    [11, 2, 2, 1],
    [10, 4, 1, 1],
    [10, 3, 2, 1],
    [9, 4, 2, 1],
    [9, 3, 2, 2],
    [8, 6, 1, 1],
    [8, 5, 2, 1],
    [8, 4, 3, 1],
    [8, 3, 3, 2],
    [7, 6, 2, 1],
    [7, 5, 2, 2],
    [7, 4, 4, 1],
    [7, 4, 3, 2],
    [6, 6, 3, 1],
    [6, 5, 4, 1],
    [6, 5, 3, 2],
    [6, 4, 3, 3],
    [5, 5, 4, 2],
    [5, 4, 4, 3],
];

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            pass: true,
            detail: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.pass = false;
            self.detail.push(format!("failed: {}", what.into()));
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.detail.push(what.into());
    }

    fn within(&mut self, t: Duration, limit: Duration) {
        self.note(format!("runtime {:.2?} (limit {:?})", t, limit));
        self.check(t < limit, "runtime");
    }
}

fn steps(v: Vec<StepQuartet>) -> Vec<[u32; 4]> {
    v.into_iter().map(|q| q.steps()).collect()
}

fn enumeration() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let ordered = enumerate_quartets(true).len();
    let unordered = enumerate_quartets(false).len();
    let lists = [
        (Parity::AllEven, &EVEN[..]),
        (Parity::AllOdd, &ODD[..]),
        (Parity::Mixed, &MIXED[..]),
    ];
    o.check(ordered == 455, format!("{ordered} ordered quartets"));
    o.check(unordered == 34, format!("{unordered} multisets"));
    for (p, want) in lists {
        let got = steps(multisets(p));
        o.check(got == want, format!("{p} list {got:?}"));
    }
    o.note(format!(
        "{ordered} ordered, {unordered} multisets, split 5/9/20"
    ));
    o.within(t.elapsed(), Duration::from_secs(1));
    o
}

fn even_filter() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let got = steps(feasible_multisets(Parity::AllEven, 1));
    o.check(
        got == [[6, 6, 2, 2], [6, 4, 4, 2], [4, 4, 4, 4]],
        format!("kept {got:?}"),
    );
    for r in [[10, 2, 2, 2], [8, 4, 2, 2]] {
        o.check(!got.contains(&r), format!("{r:?} kept"));
    }
    o.note(format!("kept {got:?}"));
    o.within(t.elapsed(), Duration::from_secs(1));
    o
}

fn catalog_verification() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let cat = catalog();
    let printed: Vec<CatalogEntry> = cat
        .entries
        .iter()
        .filter(|e| e.is_printed())
        .cloned()
        .collect();
    let reports = verify_all(&printed, cat.seed);
    let passed = reports.iter().filter(|r| r.passed()).count();
    o.note(format!(
        "{passed}/{} printed parametrizations satisfy their systems",
        printed.len()
    ));
    o.check(
        printed.len() == 47,
        format!("{} printed entries", printed.len()),
    );
    for r in reports.iter().filter(|r| !r.passed()) {
        o.check(false, format!("{} ({})", r.id, r.status));
    }
    let corrected: Vec<&CatalogEntry> = printed
        .iter()
        .filter(|e| matches!(e.status, EntryStatus::Corrected { .. }))
        .collect();
    let fixes: usize = corrected.iter().map(|e| e.status.fixes().len()).sum();
    o.note(format!(
        "{} corrected entries ({fixes} token fixes)",
        corrected.len()
    ));
    o.check(
        corrected.len() <= 3,
        format!("{} corrected entries, at most 3 allowed", corrected.len()),
    );
    for r in &reports {
        if let Some(l) = &r.literal {
            o.check(
                !l.is_pass(),
                format!("{} passes without its correction", r.id),
            );
        }
    }
    o.within(t.elapsed(), Duration::from_secs(60));
    o
}

fn uses(e: &CatalogEntry, function: &str) -> bool {
    let Formulas::Printed { compiled, .. } = &e.formulas else {
        return false;
    };
    compiled
        .values()
        .any(|f| f.functions().any(|g| g == function))
}

fn shifted(s: &QuasiPeriodicSequence, terms: &[(i64, i64)]) -> QuasiPeriodicSequence {
    let v: Vec<(Rational, &QuasiPeriodicSequence, i64)> = terms
        .iter()
        .map(|&(c, k)| (Rational::from_integer(c.into()), s, k))
        .collect();
    qps_linear_combine(&v)
}

fn membership() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let ids = [
        "odd.c2.13-1-1-1",
        "odd.c2.7-3-3-3",
        "odd.c2.5-5-5-1",
        "mixed.c1.7-2-5-2",
        "mixed.c3.7-4-4-1",
        "mixed.c3.5-4-4-3",
        "odd.c1.7-7-1-1",
        "odd.c2.9-3-3-1",
        "odd.c1.5-5-3-3",
        "mixed.c1.11-2-1-2",
        "mixed.c2.3-4-3-6",
        "mixed.c2.7-4-1-4",
    ];
    for (id, f) in [
        ("odd.c2.7-3-3-3", "psi6"),
        ("odd.c2.5-5-5-1", "omega9"),
        ("mixed.c1.7-2-5-2", "omega6"),
    ] {
        o.check(
            uses(&catalog_entry(id).unwrap(), f),
            format!("{id} lacks {f}"),
        );
    }
    let seed = catalog().seed;
    let mut members = 0;
    for id in ids {
        let e = catalog_entry(id).unwrap();
        let space = generate_constraints(&e.pattern).and_then(|cs| solve_ladder(&cs, 2520));
        let ok = space
            .as_ref()
            .map_err(|e| e.to_string())
            .and_then(|sp| {
                e.sample(seed)
                    .map(|x| verify_membership(sp, &x))
                    .map_err(|e| e.to_string())
            })
            .unwrap_or(false);
        o.check(ok, format!("{id} not in its solution space"));
        if let (Ok(sp), Some(k)) = (&space, e.family_parameters()) {
            o.note(format!(
                "{id}: period {}, dimension {}, printed family has {k} parameters",
                sp.period, sp.dimension
            ));
        }
        members += ok as usize;
    }
    o.note(format!(
        "{members}/{} printed families lie in the solved spaces",
        ids.len()
    ));

    let space = solve_ladder(&generic_one_step(8), 2520).unwrap();
    let half = q(1, 2);
    let generic_ok = space.basis.iter().all(|b| {
        let z = &b.values[&Symbol::Z];
        let zeta = &b.values[&Symbol::Zeta];
        let second = shifted(z, &[(1, 1), (-2, 0), (1, -1)]);
        let mean = qps_linear_combine(&[
            (Rational::one(), zeta, 0),
            (-half.clone(), z, 1),
            (-half.clone(), z, 0),
        ]);
        second.is_zero() && mean.is_zero()
    });
    o.check(
        generic_ok,
        "generic basis violates z'' = 0 or zeta = mean of z",
    );
    o.note(format!(
        "generic system: period {}, dimension {}",
        space.period, space.dimension
    ));
    o.within(t.elapsed(), Duration::from_secs(300));
    o
}

/// Runs a probe, redrawing seeds that collide with the singular values.
fn probe(
    p: &ParamSystem,
    entry: Symbol,
    declared: u32,
    rng: &mut ChaCha8Rng,
) -> Result<trihom_core::dynamics::ConfinementReport, Error> {
    loop {
        let mut pr = Probe::new(
            entry,
            0,
            Some(declared),
            [random_seed(rng), random_seed(rng)],
        );
        pr.eps_order = 4;
        match check_confinement(p, &pr) {
            Err(Error::SeedCollision { .. }) => continue,
            r => return r,
        }
    }
}

fn generic_params(rng: &mut ChaCha8Rng) -> ParamSystem {
    let space = solve_ladder(&generic_one_step(8), 1).unwrap();
    loop {
        let coords: Vec<Rational> = sample(rng, 4 * space.dimension, space.dimension)
            .into_iter()
            .map(|i| Rational::from_integer((i as i64 + 1).into()))
            .collect();
        let p = ParamSystem::from_assignment(&space.member(&coords)).unwrap();
        if p.is_nondegenerate() {
            return p;
        }
    }
}

fn confinement() -> Outcome {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let per_case = Duration::from_secs(120);

    let t = Instant::now();
    let g = generic_params(&mut rng);
    let entries: Vec<Symbol> = (1..=8)
        .map(Symbol::Xi)
        .chain((1..=8).map(Symbol::Eta))
        .collect();
    let mut one_step = 0;
    for &s in &entries {
        let ok = probe(&g, s, 1, &mut rng)
            .map(|r| r.confined && r.length() == Some(1) && r.memory_lost && r.memory_recovered)
            .unwrap_or(false);
        o.check(ok, format!("generic entry {s}"));
        one_step += ok as usize;
    }
    let tg = t.elapsed();
    o.check(tg < per_case, "generic runtime");
    o.note(format!(
        "generic: {one_step}/16 entry points confine in one step ({tg:.2?})"
    ));

    let cat = catalog();
    for id in DYNAMIC_INSTANCES {
        let t = Instant::now();
        let e = catalog_entry(id).unwrap();
        let p = e.param_system(cat.seed).unwrap();
        let mut lengths = Vec::new();
        for pt in Point::ALL {
            let declared = e.pattern.step(pt);
            let r = probe(&p, Symbol::from_point(pt), declared, &mut rng);
            let ok = r.as_ref().is_ok_and(|r| {
                r.confined
                    && r.length() == Some(declared as i64)
                    && r.exit_point == Some(Symbol::from_point(e.pattern.exit(pt)))
                    && r.memory_lost
                    && r.memory_recovered
            });
            o.check(ok, format!("{id} entry {pt:?}"));
            lengths.push(
                r.ok()
                    .and_then(|r| r.length())
                    .map_or("-".into(), |l| l.to_string()),
            );
        }
        let dt = t.elapsed();
        o.check(dt < per_case, format!("{id} runtime"));
        o.note(format!("{id}: lengths {} ({dt:.2?})", lengths.join(",")));
    }

    let e = catalog_entry("odd.c1.7-7-1-1").unwrap();
    let broken = e
        .param_system(cat.seed)
        .unwrap()
        .perturbed(Symbol::A, 0, &q(1, 3))
        .unwrap();
    let escaped = match probe(&broken, Symbol::A, 7, &mut rng) {
        Ok(r) => !r.confined,
        Err(Error::NotConfinedWithinBudget { .. }) => true,
        Err(_) => false,
    };
    o.check(escaped, "broken control confined");
    o.note(format!(
        "broken control (7-7-1-1, A shifted by 1/3): not confined = {escaped}"
    ));
    o
}

fn finite<E>(l: Result<Limit, E>) -> Option<Rational> {
    match l {
        Ok(Limit::Finite(r)) => Some(r),
        _ => None,
    }
}

fn form_equivalence() -> Outcome {
    let mut o = Outcome::new();
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut agree, mut draws) = (0, 0);
    while agree < 100 && draws < 10_000 {
        draws += 1;
        let mut pair =
            || QuasiPeriodicSequence::periodic(vec![random_seed(&mut rng), random_seed(&mut rng)]);
        let (z, zeta, kappa, k) = (pair(), pair(), pair(), pair());
        let s_xi = z.add(&zeta.shift(-1));
        let s_eta = z.add(&zeta);
        let Ok(p) = ParamSystem::trihomographic(
            z,
            zeta,
            [
                s_xi.add(&kappa),
                s_xi.sub(&kappa),
                s_eta.add(&k),
                s_eta.sub(&k),
            ],
        ) else {
            continue;
        };
        if !p.is_nondegenerate() {
            continue;
        }
        let n = (draws % 12) as i64 - 6;
        let (x, y) = (random_seed(&mut rng), random_seed(&mut rng));
        let Ok((yc, xc)) = canonical_step(&p, n, &x, &y) else {
            continue;
        };
        let s = step_via(
            &MapState::from_rationals(n, x, y, 4),
            &p,
            Route::Trihomographic,
        );
        let same = s.is_ok_and(|s| {
            finite(s.y_prev.limit_at_zero()) == Some(yc) && finite(s.x.limit_at_zero()) == Some(xc)
        });
        o.check(same, format!("step {draws} disagrees"));
        agree += 1;
    }
    o.check(agree == 100, format!("only {agree} comparable steps"));
    o.note(format!("{agree} steps compared, {} draws", draws));
    o.within(t.elapsed(), Duration::from_secs(10));
    o
}

fn show(d: &[usize]) -> String {
    let r: Vec<String> = degree_ratios(d)[d.len() - 5..]
        .iter()
        .map(|r| r.to_string())
        .collect();
    format!(
        "degrees {:?}, last ratios {}",
        &d[d.len() - 5..],
        r.join(" ")
    )
}

fn degree_dichotomy() -> Outcome {
    let mut o = Outcome::new();
    let limit = Duration::from_secs(300);
    let seed = catalog().seed;
    let y = q(2, 3);
    for id in DYNAMIC_INSTANCES {
        let t = Instant::now();
        let p = catalog_entry(id).unwrap().param_system(seed).unwrap();
        match degree_growth(&p, 0, 14, &y) {
            Ok(d) => {
                let sub = is_subexponential(&d);
                o.check(sub, format!("{id} ratios not monotone towards 1"));
                o.note(format!("{id}: {} monotone={sub}", show(&d)));
            }
            Err(e) => o.check(false, format!("{id}: {e}")),
        }
        o.check(t.elapsed() < limit, format!("{id} runtime"));
    }
    let t = Instant::now();
    let e = catalog_entry("odd.c2.13-1-1-1").unwrap();
    let cs = generate_constraints(&e.pattern).unwrap();
    let broken = e
        .param_system(seed)
        .unwrap()
        .break_relation(&cs, Symbol::C, &q(1, 3))
        .unwrap();
    match degree_growth(&broken, 0, 14, &y) {
        Ok(d) => {
            let exp = is_exponential(&d);
            o.check(exp, "control ratios below 3/2");
            o.note(format!(
                "control 13-1-1-1 with C broken: {} exponential={exp}",
                show(&d)
            ));
        }
        Err(e) => o.check(false, format!("control: {e}")),
    }
    o.check(t.elapsed() < limit, "control runtime");
    o
}

type Criterion = (u8, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        (1, "enumeration counts and lists", enumeration),
        (2, "even first-class filter", even_filter),
        (3, "catalog verification", catalog_verification),
        (4, "solver membership", membership),
        (5, "confinement simulation", confinement),
        (6, "form equivalence", form_equivalence),
        (7, "degree-growth dichotomy", degree_dichotomy),
    ];
    let mut failing = BTreeSet::new();
    for (k, name, run) in criteria {
        let o = run();
        println!(
            "{} criterion {k}: {name}",
            if o.pass { "PASS" } else { "FAIL" }
        );
        for d in &o.detail {
            println!("    {d}");
        }
        if !o.pass {
            failing.insert(k);
        }
    }
    let known: BTreeSet<u8> = KNOWN_FAILURES.into_iter().collect();
    if failing == known {
        println!("failing criteria {failing:?} match the documented known failures");
    } else {
        println!(
            "failing criteria {failing:?} differ from the documented known failures {known:?}"
        );
        std::process::exit(1);
    }
}
