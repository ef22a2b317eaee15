use crate::solve::system_for;
use crate::verify::instance_seed;
use crate::{CliError, Output, RunConfig};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt::Write;
use trihom_core::arith::{parse_fraction, to_fraction, Limit, Rational};
use trihom_core::catalog::catalog;
use trihom_core::confinement::{solve_ladder, Symbol};
use trihom_core::dynamics::{
    check_confinement, random_seed, sample_params, ConfinementReport, ParamSystem, Probe,
};
use trihom_core::patterns::{Point, SingularityPattern};
use trihom_core::Error;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// A catalog entry id, a pattern such as `odd.c1.7-7-1-1`, or `generic`.
    pub target: String,
    /// Singular point entered: A, B, C, D (or A1..A8, C1..C8 for `generic`).
    #[arg(long = "entry", value_name = "POINT")]
    pub entry: Option<String>,
    /// Index n at which the singularity is entered.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub n0: i64,
    /// Half-steps followed after entry (default: declared length + 6).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=200))]
    pub steps: Option<u64>,
    /// Sample the solver's space even when the target is a catalog entry.
    #[arg(long)]
    pub solver: bool,
    /// Negative control: shift the entry point at n0 by --delta (and its partner by −delta).
    #[arg(long)]
    pub broken: bool,
    #[arg(long, default_value = "1/3", value_parser = fraction)]
    pub delta: Rational,
}

fn fraction(s: &str) -> Result<Rational, String> {
    parse_fraction(s).ok_or_else(|| format!("`{s}` is not a fraction"))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Doc {
    target: String,
    source: &'static str,
    entry_point: String,
    n0: i64,
    broken: bool,
    seed: u64,
    report: ConfinementReport,
}

/// Distinct small-integer coordinates keep ε-series coefficients short for the eight-point system.
fn generic_params(cfg: &RunConfig) -> Result<ParamSystem, CliError> {
    let space = solve_ladder(&system_for("generic")?.2, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..256 {
        let coords: Vec<Rational> =
            rand::seq::index::sample(&mut rng, 4 * space.dimension, space.dimension)
                .into_iter()
                .map(|i| Rational::from_integer((i as i64 + 1).into()))
                .collect();
        let p = ParamSystem::from_assignment(&space.member(&coords))?;
        if p.is_nondegenerate() {
            return Ok(p);
        }
    }
    Err(CliError::Runtime(
        "no nondegenerate generic instance found".into(),
    ))
}

pub fn run(cfg: &RunConfig, a: &SimulateArgs) -> Result<Output, CliError> {
    let (params, source, pattern) = if a.target == "generic" {
        (generic_params(cfg)?, "generic", None)
    } else {
        let entry = catalog()
            .entries
            .iter()
            .find(|e| e.id == a.target)
            .filter(|_| !a.solver);
        match entry {
            Some(e) => (
                e.param_system(instance_seed(cfg))?,
                "catalog",
                Some(e.pattern),
            ),
            None => {
                let pat = SingularityPattern::parse(&a.target)?;
                let (_, _, cs, _) = system_for(&a.target)?;
                let space = solve_ladder(&cs, cfg.period_ceiling as usize)?;
                (
                    sample_params(&space, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?,
                    "solver",
                    Some(pat),
                )
            }
        }
    };
    let default_entry = if pattern.is_some() { "A" } else { "A1" };
    let entry: Symbol = a
        .entry
        .as_deref()
        .unwrap_or(default_entry)
        .parse()
        .map_err(|e: Error| CliError::Usage(e.to_string()))?;
    if params.point(entry).is_none() {
        return Err(CliError::Usage(format!(
            "{entry} is not a singular point of {}",
            a.target
        )));
    }
    let declared = match pattern {
        Some(p) => {
            let pt = Point::ALL
                .into_iter()
                .find(|pt| Symbol::from_point(*pt) == entry)
                .expect("checked above");
            p.step(pt)
        }
        None => 1,
    };
    let params = if a.broken {
        params.perturbed(entry, a.n0, &a.delta)?
    } else {
        params
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let report = loop {
        let mut probe = Probe::new(
            entry,
            a.n0,
            Some(declared),
            [random_seed(&mut rng), random_seed(&mut rng)],
        );
        probe.eps_order = cfg.eps_order;
        if let Some(s) = a.steps {
            probe.max_steps = s as usize;
        }
        match check_confinement(&params, &probe) {
            Ok(r) => break r,
            Err(Error::NotConfinedWithinBudget { report, .. }) => break *report,
            Err(Error::SeedCollision { .. }) => continue,
            Err(e) => return Err(CliError::Runtime(e.to_string())),
        }
    };

    let mut t = String::new();
    let what = if a.broken {
        format!(" (broken by {} at n={})", to_fraction(&a.delta), a.n0)
    } else {
        String::new()
    };
    writeln!(
        t,
        "{} [{source}]{what}: entry {entry} at n={}, declared length {declared}",
        a.target, a.n0
    )
    .unwrap();
    match (report.confined, report.length(), report.exit_point) {
        (true, Some(l), Some(x)) => writeln!(
            t,
            "confined: exit through {x} after {l} half-step{}",
            if l == 1 { "" } else { "s" }
        )
        .unwrap(),
        (false, Some(l), _) => writeln!(
            t,
            "not confined: runs separate after {l} half-steps, not at the declared exit"
        )
        .unwrap(),
        _ => writeln!(
            t,
            "not confined within {} half-steps",
            report.trace.len().saturating_sub(1)
        )
        .unwrap(),
    }
    if report.exit_candidates.len() > 1 {
        let c: Vec<String> = report
            .exit_candidates
            .iter()
            .map(ToString::to_string)
            .collect();
        writeln!(t, "tie between exit points {}", c.join(", ")).unwrap();
    }
    writeln!(
        t,
        "memory lost: {}, recovered: {}, eps order: {}",
        report.memory_lost, report.memory_recovered, report.eps_order
    )
    .unwrap();
    writeln!(t, "seeds {} and {}", report.seeds[0], report.seeds[1]).unwrap();
    for p in &report.trace {
        let show = |l: &Limit| l.to_string();
        writeln!(
            t,
            "  {:>3} {}_{:<3} {} | {}",
            p.half_step,
            p.variable,
            p.n,
            show(&p.limits[0]),
            show(&p.limits[1])
        )
        .unwrap();
    }
    let code = if report.confined { 0 } else { 1 };
    let doc = Doc {
        target: a.target.clone(),
        source,
        entry_point: entry.to_string(),
        n0: a.n0,
        broken: a.broken,
        seed: cfg.seed,
        report,
    };
    Ok(Output::new("simulate", &doc, t, code))
}
