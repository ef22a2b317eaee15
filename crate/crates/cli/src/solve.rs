use crate::{CliError, Output, RunConfig};
use clap::Args;
use serde::Serialize;
use std::fmt::Write;
use trihom_core::confinement::{
    check_certificate, generate_constraints, generic_one_step, solve_constraints, solve_ladder,
    Certificate, ConstraintSystem, SolutionSpace,
};
use trihom_core::patterns::{autonomous_feasibility, Feasibility, SingularityPattern};
use trihom_core::Error;

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Pattern such as `odd.c1.7-7-1-1`, or `generic` for the one-step system with eight points per side.
    pub pattern: String,
    /// Solve at this period instead of walking the ladder up to the ceiling.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=5040))]
    pub period: Option<u64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Doc<'a> {
    pattern: String,
    description: String,
    relations: Vec<String>,
    nondegeneracy: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    autonomous_filter: Option<Feasibility>,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    space: Option<&'a SolutionSpace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<&'a Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate_checked: Option<bool>,
}

/// Generic points per side: the smallest count with a nondegenerate solution.
pub const GENERIC_POINTS: u8 = 8;

pub fn system_for(
    spec: &str,
) -> Result<(String, String, ConstraintSystem, Option<Feasibility>), CliError> {
    if spec == "generic" {
        let d = format!("one-step confinement with {GENERIC_POINTS} points per side");
        return Ok(("generic".into(), d, generic_one_step(GENERIC_POINTS), None));
    }
    let p = SingularityPattern::parse(spec)?;
    let f = autonomous_feasibility(&p)?;
    Ok((p.id(), p.to_string(), generate_constraints(&p)?, Some(f)))
}

pub fn run(cfg: &RunConfig, a: &SolveArgs) -> Result<Output, CliError> {
    let (id, description, cs, filter) = system_for(&a.pattern)?;
    let result = match a.period {
        Some(l) => solve_constraints(&cs, l as usize),
        None => solve_ladder(&cs, cfg.period_ceiling as usize),
    };
    let (space, cert) = match &result {
        Ok(s) => (Some(s), None),
        Err(Error::InfeasibleSystem { certificate, .. }) => (None, Some(certificate.as_ref())),
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };
    let doc = Doc {
        pattern: id.clone(),
        description: description.clone(),
        relations: cs.relation_texts(),
        nondegeneracy: cs.nondegeneracy.iter().map(|f| f.name.clone()).collect(),
        autonomous_filter: filter.clone(),
        feasible: space.is_some(),
        space,
        certificate: cert,
        certificate_checked: cert.map(|c| check_certificate(&cs, c)),
    };

    let mut t = String::new();
    writeln!(t, "{id}  {description}").unwrap();
    writeln!(t, "relations").unwrap();
    for r in &doc.relations {
        writeln!(t, "  {r}").unwrap();
    }
    if let Some(Feasibility::Infeasible(r)) = &filter {
        writeln!(t, "autonomous filter: infeasible ({r})").unwrap();
    }
    if let Some(s) = space {
        writeln!(
            t,
            "feasible at period {}, dimension {}",
            s.period, s.dimension
        )
        .unwrap();
        let ladder: Vec<String> = s
            .ladder
            .iter()
            .map(|r| format!("{}:{}", r.period, r.dimension))
            .collect();
        writeln!(t, "ladder (period:dimension) {}", ladder.join(" ")).unwrap();
        if let Some(h) = s.period_hint {
            writeln!(t, "note: the space grows at period {h}").unwrap();
        }
        writeln!(t, "basis").unwrap();
        for (i, b) in s.basis.iter().enumerate() {
            writeln!(t, "  [{}] {}", i + 1, b.label).unwrap();
            for (sym, v) in &b.values {
                if !v.is_zero() {
                    writeln!(t, "      {sym} = {v}").unwrap();
                }
            }
        }
    }
    if let Some(c) = cert {
        writeln!(t, "infeasible at period {}: {}", c.period, c.reason).unwrap();
        writeln!(t, "certificate: {} = sum of", c.functional).unwrap();
        for term in c
            .combination
            .iter()
            .filter(|term| !term.multiplier.is_zero())
        {
            writeln!(t, "  ({}) * [{}]", term.multiplier, term.relation).unwrap();
        }
        writeln!(
            t,
            "certificate checked: {}",
            doc.certificate_checked.unwrap_or(false)
        )
        .unwrap();
    }
    let code = if doc.feasible { 0 } else { 1 };
    Ok(Output::new("solve", &doc, t, code))
}
