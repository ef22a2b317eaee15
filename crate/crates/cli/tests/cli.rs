use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn trihom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trihom"))
        .args(args)
        .env_remove("TRIHOM_SEED")
        .env_remove("TRIHOM_EPS_ORDER")
        .env_remove("TRIHOM_PERIOD_CEILING")
        .env_remove("TRIHOM_FORMAT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> (Value, i32) {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let o = trihom(&full);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    (v, o.status.code().unwrap())
}

fn lines(o: &Output) -> Vec<String> {
    stdout(o).lines().map(String::from).collect()
}

#[test]
fn even_first_class_keeps_three_multisets() {
    let o = trihom(&["enumerate", "--parity", "even", "--class", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let feasible: Vec<String> = lines(&o)
        .into_iter()
        .filter(|l| l.ends_with(" feasible"))
        .collect();
    assert_eq!(
        feasible,
        [
            "AllEven class1 {6,6,2,2} feasible",
            "AllEven class1 {6,4,4,2} feasible",
            "AllEven class1 {4,4,4,4} feasible"
        ]
    );
    let o = trihom(&[
        "enumerate",
        "--parity",
        "even",
        "--class",
        "1",
        "--feasible",
    ]);
    assert_eq!(lines(&o).len(), 3);
    let all = stdout(&trihom(&["enumerate", "--parity", "even", "--class", "1"]));
    assert!(all.contains("{10,2,2,2} infeasible") && all.contains("{8,4,2,2} infeasible"));
}

#[test]
fn enumeration_counts() {
    assert_eq!(lines(&trihom(&["enumerate", "--ordered"])).len(), 455);
    assert_eq!(
        lines(&trihom(&["enumerate", "--parity", "mixed"])).len(),
        20
    );
    assert_eq!(lines(&trihom(&["enumerate", "--parity", "odd"])).len(), 9);
    assert_eq!(lines(&trihom(&["enumerate", "--parity", "even"])).len(), 5);
    assert_eq!(lines(&trihom(&["enumerate"])).len(), 34);
    let (v, _) = json(&["enumerate", "--ordered"]);
    assert_eq!(v["count"], 455);
}

#[test]
fn odd_pattern_listing_uses_documented_format() {
    let out = stdout(&trihom(&[
        "enumerate",
        "--patterns",
        "--parity",
        "odd",
        "--class",
        "2",
    ]));
    assert!(
        out.lines().any(|l| l == "AllOdd class2 {9,1,5,1} feasible"),
        "{out}"
    );
}

#[test]
fn bad_flags_exit_two() {
    for args in [
        &["enumerate", "--bogus"][..],
        &["enumerate", "--class", "1"],
        &["enumerate", "--parity", "odd", "--class", "3"],
        &["enumerate", "--parity", "sideways"],
        &["enumerate", "--ordered", "--class", "1", "--parity", "odd"],
        &["solve", "odd.c1.7-7-1"],
        &["solve", "nonsense"],
        &["simulate", "odd.c1.7-7-1-1", "--entry", "Q"],
        &["--eps-order", "0", "enumerate"],
    ] {
        assert_eq!(trihom(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn solve_feasible_pattern() {
    let (v, code) = json(&["solve", "odd.c1.7-7-1-1"]);
    assert_eq!(code, 0);
    assert_eq!(v["feasible"], true);
    assert!(v["space"]["dimension"].as_u64().unwrap() >= 9);
    assert_eq!(v["relations"].as_array().unwrap().len(), 6);
}

#[test]
fn solve_infeasible_pattern_prints_certificate() {
    let o = trihom(&["solve", "even.c1.10-2-2-2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("certificate checked: true"));
    let (v, code) = json(&["solve", "even.c1.10-2-2-2"]);
    assert_eq!(code, 1);
    assert_eq!(v["feasible"], false);
    assert_eq!(v["certificateChecked"], true);
    assert_eq!(v["certificate"]["functional"], "z + zeta");
}

#[test]
fn solve_generic_system() {
    let (v, code) = json(&["solve", "generic"]);
    assert_eq!(code, 0);
    assert_eq!(v["space"]["period"], 1);
    assert_eq!(v["space"]["dimension"], 9);
}

#[test]
fn verify_single_entry() {
    let o = trihom(&["verify-catalog", "--entry", "odd.c2.13-1-1-1"]);
    assert_eq!(o.status.code(), Some(0));
    let l = lines(&o);
    assert_eq!(l.len(), 2);
    assert!(l[0].starts_with("PASS corrected") && l[0].contains("odd.c2.13-1-1-1"));
    assert_eq!(l[1], "1/1 entries pass");
}

#[test]
fn verify_empty_filter() {
    let (v, code) = json(&["verify-catalog", "--entry", "no-such-entry"]);
    assert_eq!(code, 0);
    assert_eq!(v["total"], 0);
    assert_eq!(v["entries"].as_array().unwrap().len(), 0);
}

#[test]
fn full_sweep_reports_the_unresolved_entries() {
    let (v, code) = json(&["verify-catalog"]);
    assert_eq!(v["total"], 50);
    assert_eq!(v["passed"], 48);
    assert_eq!(code, 1);
    let failing: Vec<&str> = v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["verdict"]["result"] != "pass")
        .map(|e| e["id"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["odd.c2.5-3-5-3", "mixed.c2.5-4-5-2"]);
}

#[test]
fn verify_prefix_filter() {
    let (v, code) = json(&["verify-catalog", "--entry", "mixed.c3"]);
    assert_eq!(code, 0);
    assert_eq!(v["total"], 2);
}

#[test]
fn simulate_catalog_entry_confines_at_declared_step() {
    let (v, code) = json(&[
        "simulate",
        "odd.c1.7-7-1-1",
        "--entry",
        "A",
        "--eps-order",
        "4",
    ]);
    assert_eq!(code, 0);
    let r = &v["report"];
    assert_eq!(r["confined"], true);
    assert_eq!(
        r["exitStep"].as_i64().unwrap() - r["entryStep"].as_i64().unwrap(),
        7
    );
    assert_eq!(r["exitPoint"], "C");
    assert_eq!(r["memoryLost"], true);
    assert_eq!(r["memoryRecovered"], true);
    assert_eq!(v["source"], "catalog");
}

#[test]
fn simulate_broken_control_fails() {
    let o = trihom(&[
        "simulate",
        "odd.c1.7-7-1-1",
        "--entry",
        "A",
        "--broken",
        "--eps-order",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not confined"));
}

#[test]
fn simulate_generic_confines_in_one_step() {
    let (v, code) = json(&["simulate", "generic", "--eps-order", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["report"]["declaredLength"], 1);
    assert_eq!(v["report"]["exitStep"], 1);
    assert_eq!(v["report"]["exitPoint"], "C1");
}

#[test]
fn simulate_solver_sample() {
    let (v, code) = json(&[
        "simulate",
        "even.c1.4-4-4-4",
        "--entry",
        "C",
        "--eps-order",
        "4",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["source"], "solver");
    assert_eq!(v["report"]["exitPoint"], "C");
}

#[test]
fn identical_command_lines_give_identical_bytes() {
    for args in [
        &["--format", "json", "solve", "odd.c2.7-1-7-1"][..],
        &["--format", "json", "verify-catalog", "--entry", "odd.c2"],
        &[
            "--format",
            "json",
            "simulate",
            "mixed.c3.7-4-4-1",
            "--entry",
            "B",
            "--eps-order",
            "4",
        ],
        &["enumerate", "--patterns"],
    ] {
        assert_eq!(trihom(args).stdout, trihom(args).stdout, "{args:?}");
    }
}

#[test]
fn environment_overrides_defaults() {
    let o = Command::new(env!("CARGO_BIN_EXE_trihom"))
        .args(["verify-catalog", "--entry", "odd.c2.7-7"])
        .env("TRIHOM_FORMAT", "json")
        .env("TRIHOM_SEED", "5")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 20240601 + 5);
    // A flag beats the environment.
    let o = Command::new(env!("CARGO_BIN_EXE_trihom"))
        .args(["--format", "text", "enumerate", "--parity", "odd"])
        .env("TRIHOM_FORMAT", "json")
        .output()
        .unwrap();
    assert!(stdout(&o).starts_with("AllOdd"));
}

#[test]
fn json_numbers_are_never_floats() {
    fn walk(v: &Value) {
        match v {
            Value::Number(n) => assert!(n.is_i64() || n.is_u64(), "{n}"),
            Value::Array(a) => a.iter().for_each(walk),
            Value::Object(m) => m.values().for_each(walk),
            _ => {}
        }
    }
    for args in [
        &["solve", "mixed.c3.7-4-4-1"][..],
        &["simulate", "generic", "--eps-order", "4"],
    ] {
        walk(&json(args).0);
    }
}

/// Validates documents against the shipped schemas with Python's `jsonschema`.
#[test]
fn documents_match_schemas() {
    let probe = Command::new("python3")
        .args(["-c", "import jsonschema"])
        .output();
    if !probe.is_ok_and(|o| o.status.success()) {
        eprintln!("python3 with jsonschema not available; schema validation skipped");
        return;
    }
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas");
    let cases: [(&str, &[&str]); 7] = [
        ("enumerate", &["enumerate", "--patterns"]),
        ("enumerate", &["enumerate", "--ordered", "--parity", "odd"]),
        ("solve", &["solve", "odd.c2.13-1-1-1"]),
        ("solve", &["solve", "even.c1.10-2-2-2"]),
        ("verify-catalog", &["verify-catalog", "--entry", "mixed.c2"]),
        (
            "simulate",
            &[
                "simulate",
                "odd.c2.13-1-1-1",
                "--entry",
                "C",
                "--eps-order",
                "4",
            ],
        ),
        (
            "simulate",
            &["simulate", "odd.c1.7-7-1-1", "--broken", "--eps-order", "4"],
        ),
    ];
    let tmp = std::env::temp_dir().join(format!("trihom-schema-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).unwrap();
    for (i, (name, args)) in cases.iter().enumerate() {
        let (v, _) = json(args);
        assert_eq!(v["schema"], format!("trihom/{name}/v1"));
        let doc = tmp.join(format!("{i}.json"));
        std::fs::write(&doc, serde_json::to_string(&v).unwrap()).unwrap();
        let schema = dir.join(format!("{name}.v1.schema.json"));
        let script = "import json,sys,jsonschema\n\
                      s=json.load(open(sys.argv[1]))\n\
                      jsonschema.Draft202012Validator.check_schema(s)\n\
                      jsonschema.Draft202012Validator(s).validate(json.load(open(sys.argv[2])))";
        let o = Command::new("python3")
            .args(["-c", script])
            .arg(&schema)
            .arg(&doc)
            .output()
            .unwrap();
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    std::fs::remove_dir_all(&tmp).ok();
}
