use crate::{CliError, Output, RunConfig};
use clap::{Args, ValueEnum};
use serde::Serialize;
use std::fmt::Write;
use trihom_core::patterns::{
    autonomous_feasibility, classify_parity, enumerate_patterns, enumerate_quartets,
    multiset_feasibility, multisets, Feasibility, Parity,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
    Mixed,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Parity {
        match p {
            ParityArg::Even => Parity::AllEven,
            ParityArg::Odd => Parity::AllOdd,
            ParityArg::Mixed => Parity::Mixed,
        }
    }
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
    /// Exit class (1-based); needs --parity.
    #[arg(long, requires = "parity", value_parser = clap::value_parser!(u8).range(1..=3))]
    pub class: Option<u8>,
    /// All ordered quartets instead of multisets.
    #[arg(long, conflicts_with_all = ["class", "patterns", "feasible"])]
    pub ordered: bool,
    /// Canonical singularity patterns (quartet plus exit class) instead of multisets.
    #[arg(long)]
    pub patterns: bool,
    /// Only rows with a feasible verdict.
    #[arg(long)]
    pub feasible: bool,
}

#[derive(Serialize)]
struct Verdict {
    class: u8,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
}

impl Verdict {
    fn new(class: u8, f: Feasibility) -> Verdict {
        match f {
            Feasibility::Feasible => Verdict {
                class,
                feasible: true,
                reason: None,
            },
            Feasibility::Infeasible(r) => Verdict {
                class,
                feasible: false,
                reason: Some(r),
            },
        }
    }

    fn word(&self) -> &'static str {
        if self.feasible {
            "feasible"
        } else {
            "infeasible"
        }
    }
}

#[derive(Serialize)]
struct Row {
    #[serde(skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    parity: Parity,
    steps: [u32; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    exits: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    verdicts: Vec<Verdict>,
}

#[derive(Serialize)]
struct Doc {
    mode: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    parity: Option<Parity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class: Option<u8>,
    count: usize,
    items: Vec<Row>,
}

pub fn run(_cfg: &RunConfig, a: &EnumerateArgs) -> Result<Output, CliError> {
    let parity: Option<Parity> = a.parity.map(Into::into);
    if let (Some(p), Some(c)) = (parity, a.class) {
        if c as usize > p.class_count() {
            return Err(CliError::Usage(format!(
                "{p} has {} classes, not {c}",
                p.class_count()
            )));
        }
    }
    let parities: Vec<Parity> = Parity::ALL
        .into_iter()
        .filter(|p| parity.is_none_or(|x| x == *p))
        .collect();
    let mut text = String::new();
    let (mode, items) = if a.ordered {
        let items: Vec<Row> = enumerate_quartets(true)
            .into_iter()
            .filter(|q| parity.is_none_or(|p| classify_parity(q) == p))
            .map(|q| Row {
                id: None,
                parity: classify_parity(&q),
                steps: q.steps(),
                exits: None,
                verdicts: vec![],
            })
            .collect();
        for r in &items {
            let [m, n, p, q] = r.steps;
            writeln!(text, "{{{m},{n},{p},{q}}} {}", r.parity).unwrap();
        }
        ("ordered", items)
    } else if a.patterns {
        let mut items = Vec::new();
        for p in enumerate_patterns(parity, a.class) {
            let v = Verdict::new(p.class().unwrap_or(0), autonomous_feasibility(&p)?);
            if a.feasible && !v.feasible {
                continue;
            }
            write!(text, "{p} {}", v.word()).unwrap();
            if let Some(r) = &v.reason {
                write!(text, " ({r})").unwrap();
            }
            text.push('\n');
            items.push(Row {
                id: Some(p.id()),
                parity: p.parity(),
                steps: p.quartet.steps(),
                exits: Some(p.exits.describe()),
                verdicts: vec![v],
            });
        }
        ("patterns", items)
    } else {
        let mut items = Vec::new();
        for par in parities {
            let classes: Vec<u8> = match a.class {
                Some(c) => vec![c],
                None => (1..=par.class_count() as u8).collect(),
            };
            for q in multisets(par) {
                let verdicts: Vec<Verdict> = classes
                    .iter()
                    .map(|&c| Ok(Verdict::new(c, multiset_feasibility(&q, par, c)?)))
                    .collect::<Result<_, trihom_core::Error>>()?;
                if a.feasible && !verdicts.iter().any(|v| v.feasible) {
                    continue;
                }
                if let [v] = &verdicts[..] {
                    write!(text, "{par} class{} {q} {}", v.class, v.word()).unwrap();
                    if let Some(r) = &v.reason {
                        write!(text, " ({r})").unwrap();
                    }
                } else {
                    write!(text, "{par} {q}").unwrap();
                    for v in &verdicts {
                        write!(text, " c{}:{}", v.class, v.word()).unwrap();
                    }
                }
                text.push('\n');
                items.push(Row {
                    id: None,
                    parity: par,
                    steps: q.steps(),
                    exits: None,
                    verdicts,
                });
            }
        }
        ("multisets", items)
    };
    let doc = Doc {
        mode,
        parity,
        class: a.class,
        count: items.len(),
        items,
    };
    Ok(Output::new("enumerate", &doc, text, 0))
}
