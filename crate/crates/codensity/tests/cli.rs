use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

fn run(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_codensity"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fixture_json(name: &str) -> Value {
    read_json(&fixture(name))
}

fn pairs(v: &Value) -> BTreeSet<(String, String)> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_str().unwrap().to_owned(), p[1].as_str().unwrap().to_owned()))
        .collect()
}

/// Naive Kripke bisimilarity on a JSON frame: split blocks until stable.
fn kripke_oracle(frame: &Value) -> BTreeSet<(String, String)> {
    let states: Vec<String> = frame["states"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().into()).collect();
    let succ: BTreeMap<String, Vec<String>> = states
        .iter()
        .map(|s| {
            let list = frame["succ"].get(s).and_then(Value::as_array).cloned().unwrap_or_default();
            (s.clone(), list.iter().map(|t| t.as_str().unwrap().to_owned()).collect())
        })
        .collect();
    let mut block: BTreeMap<String, usize> = states.iter().map(|s| (s.clone(), 0)).collect();
    loop {
        let signature = |s: &String, block: &BTreeMap<String, usize>| -> (usize, BTreeSet<usize>) {
            (block[s], succ[s].iter().map(|t| block[t]).collect())
        };
        let sigs: BTreeSet<_> = states.iter().map(|s| signature(s, &block)).collect();
        let index: BTreeMap<_, usize> = sigs.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let next: BTreeMap<String, usize> = states.iter().map(|s| (s.clone(), index[&signature(s, &block)])).collect();
        let stable = index.len() == block.values().collect::<BTreeSet<_>>().len();
        block = next;
        if stable {
            break;
        }
    }
    let mut out = BTreeSet::new();
    for x in &states {
        for y in &states {
            if block[x] == block[y] {
                out.insert((x.clone(), y.clone()));
            }
        }
    }
    out
}

#[test]
fn split_metric_distance() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let m = fixture("M_SPLIT");
    let o = run(
        &["solve", m.to_str().unwrap(), "--instance", "bisim-metric", "--eps", "1e-6", "--emit-json", report.to_str().unwrap()],
        "",
    );
    assert!(o.status.success(), "{o:?}");
    // All mass of x and y lands on the absorbing state z, so the distance
    // is the difference of the masses.
    let kernel = &fixture_json("M_SPLIT")["kernel"];
    let mass = |s: &str| codensity_core::rational::parse(kernel[s]["z"].as_str().unwrap()).unwrap();
    let expected = codensity_core::rational::render(&codensity_core::rational::abs_diff(&mass("x"), &mass("y")));
    let v = read_json(&report);
    assert_eq!(v["fixedPoint"]["distance"]["x"]["y"], Value::String(expected.clone()));
    assert_eq!(expected, "1/2");
    assert!(stdout(&o).contains("cross-check:"));
    assert_eq!(v["crossCheck"]["ok"], Value::Bool(true));
}

#[test]
fn dead_region_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("arena.dot");
    let report = dir.path().join("report.json");
    let k = fixture("K_DEAD");
    let o = run(
        &[
            "solve",
            k.to_str().unwrap(),
            "--instance",
            "kripke-bisim",
            "--emit-dot",
            dot.to_str().unwrap(),
            "--emit-json",
            report.to_str().unwrap(),
        ],
        "",
    );
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("winning region: {(p,p),(q,q)}"), "{}", stdout(&o));
    let v = read_json(&report);
    assert_eq!(pairs(&v["region"]), kripke_oracle(&fixture_json("K_DEAD")));
    let dot = std::fs::read_to_string(dot).unwrap();
    assert!(dot.starts_with("digraph arena {"));
    assert!(dot.contains("label=\"(p,p)\", shape=box, style=filled"));
    assert!(dot.contains("label=\"(q,q)\", shape=box, style=filled"));
    assert!(!dot.contains("label=\"(p,q)\", shape=box, style=filled"));
}

#[test]
fn line_topology() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let d = fixture("D_LINE");
    let o = run(
        &["solve", d.to_str().unwrap(), "--instance", "dfa-topology:sierpinski", "--emit-json", report.to_str().unwrap()],
        "",
    );
    assert!(o.status.success(), "{o:?}");
    // Oracle: the sets of states accepting each word a^k.
    let dfa = fixture_json("D_LINE");
    let states: Vec<&str> = dfa["states"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    let accept: BTreeSet<&str> = dfa["accept"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
    let step = |q: &str| dfa["delta"][q]["a"].as_str().unwrap().to_owned();
    let mut sets = Vec::new();
    let mut current: Vec<String> = states.iter().map(|s| s.to_string()).collect();
    for _ in 0..=states.len() {
        let s: BTreeSet<String> =
            states.iter().zip(&current).filter(|(_, q)| accept.contains(q.as_str())).map(|(s, _)| s.to_string()).collect();
        if !sets.contains(&s) {
            sets.push(s);
        }
        current = current.iter().map(|q| step(q)).collect();
    }
    let v = read_json(&report);
    let subbasis: Vec<BTreeSet<String>> = v["subbasis"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["set"].as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_owned()).collect())
        .collect();
    assert_eq!(subbasis, sets);
    assert!(stdout(&o).contains("subbasis: {{q1},{q0},{}}"), "{}", stdout(&o));
    let mut special = BTreeSet::new();
    for x in &states {
        for y in &states {
            if sets.iter().all(|s| !s.contains(*x) || s.contains(*y)) {
                special.insert((x.to_string(), y.to_string()));
            }
        }
    }
    assert_eq!(pairs(&v["specialization"]), special);
}

#[test]
fn decimal_format() {
    let o = run(&["solve", "M_SPLIT", "--instance", "bisim-metric", "--format", "decimal"], "");
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.500000"), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"type":"kripke","states":["p"],"succ":{"p":["r"]}}"#).unwrap();
    let o = run(&["solve", bad.to_str().unwrap(), "--instance", "kripke-bisim"], "");
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown state"));
    let o = run(&["solve", fixture("M_SPLIT").to_str().unwrap(), "--instance", "nonsense"], "");
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["solve", fixture("M_SPLIT").to_str().unwrap(), "--instance", "dfa-lang"], "");
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["solve", fixture("H_PAIR").to_str().unwrap(), "--instance", "kripke-bisim"], "");
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["translate", fixture("K_DEAD").to_str().unwrap(), "--from", "fkp", "--start", "(p,q)"], "");
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn twin_translations() {
    let dir = tempfile::tempdir().unwrap();
    for (from, to) in [("desharnais", "fkp"), ("fkp", "desharnais")] {
        let out = dir.path().join(format!("{from}.json"));
        let o = run(
            &[
                "translate",
                fixture("M_TWIN").to_str().unwrap(),
                "--from",
                from,
                "--start",
                "(s1,s2)",
                "--seed",
                "3",
                "--out",
                out.to_str().unwrap(),
            ],
            "",
        );
        assert!(o.status.success(), "{o:?}");
        assert!(stdout(&o).contains("Duplicator won 500 of 500"));
        let v = read_json(&out);
        assert_eq!(v["to"], Value::String(to.into()));
        assert_eq!(v["verification"]["won"], Value::from(500));
        if from == "fkp" {
            for row in v["closure"].as_array().unwrap() {
                let z: BTreeSet<&str> = row["z"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
                let zbar: BTreeSet<&str> = row["closure"].as_array().unwrap().iter().map(|s| s.as_str().unwrap()).collect();
                assert!(z.is_subset(&zbar));
                // Every state of the twin chain is bisimilar to every other.
                assert!(z.is_empty() || zbar.len() == 3);
            }
        }
    }
}

#[test]
fn split_translation_not_winning() {
    for from in ["desharnais", "fkp"] {
        let o = run(&["translate", fixture("M_SPLIT").to_str().unwrap(), "--from", from, "--start", "(x,y)"], "");
        assert_eq!(o.status.code(), Some(4), "{o:?}");
    }
}

#[test]
fn dead_play_engine_spoiler_wins() {
    let o = run(&["play", "K_DEAD", "--instance", "kripke-bisim", "--start", "(p,q)", "--side", "duplicator"], "");
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("engine: {p,q}"), "{text}");
    assert!(text.contains("result: Spoiler wins: Duplicator has no legal move"), "{text}");
}

#[test]
fn illegal_move_reprompts() {
    let o = run(
        &["play", "K_DEAD", "--instance", "kripke-bisim", "--start", "(p,q)", "--side", "spoiler"],
        "(q,q)\n{p,q}\n",
    );
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("illegal move: (q,q) is not a legal move from (p,q)"), "{text}");
    assert_eq!(text.matches("legal moves: {p} | {p,q}").count(), 2, "{text}");
    assert!(text.contains("result: Spoiler wins"), "{text}");
}

#[test]
fn split_play_within_region() {
    let o = run(&["play", "M_SPLIT", "--instance", "bisim-metric", "--start", "(x,y,3/4)", "--side", "spoiler"], "");
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("result: Duplicator wins"), "{}", stdout(&o));
}

#[test]
fn play_start_outside_spoiler_positions() {
    let o = run(&["play", "K_DEAD", "--instance", "kripke-bisim", "--start", "(p,r)"], "");
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["play", "M_SPLIT", "--instance", "bisim-metric", "--start", "(x,y,2)"], "");
    assert_eq!(o.status.code(), Some(2), "{o:?}");
}

#[test]
fn checks() {
    let o = run(&["check", "bisimulation", "K_ONE", "--instance", "kripke-bisim", "--relation", "(a,a),(a,b),(a,c),(b,a),(b,b),(b,c),(c,a),(c,b),(c,c)"], "");
    assert!(stdout(&o).contains("bisimulation: yes"), "{o:?}");
    let o = run(&["check", "bisimulation", "K_ONE", "--instance", "kripke-bisim", "--relation", "(a,a),(b,b),(c,c),(a,b),(b,a)"], "");
    assert!(stdout(&o).contains("bisimulation: no"), "{o:?}");
    let o = run(&["check", "bisimulation", "K_DEAD", "--instance", "kripke-bisim", "--relation", "(p,p),(q,q),(p,q),(q,p)"], "");
    assert!(stdout(&o).contains("bisimulation: no"), "{o:?}");
    let o = run(&["check", "invariant", "K_DEAD", "--instance", "kripke-bisim", "--relation", "(p,p),(q,q)"], "");
    assert!(stdout(&o).contains("invariant: yes"), "{o:?}");
    let o = run(&["check", "invariant", "K_DEAD", "--instance", "kripke-bisim", "--relation", "(p,q)"], "");
    assert!(stdout(&o).contains("invariant: no"), "{o:?}");
    let o = run(&["check", "hausdorff", "H_PAIR", "--s", "a", "--t", "b,c"], "");
    assert!(stdout(&o).contains("direct: 1\ncodensity: 1\ncross-check: ok"), "{o:?}");
    let o = run(&["check", "hausdorff", "H_PAIR", "--s", "a", "--t", "b"], "");
    assert!(stdout(&o).contains("codensity: 2/5"), "{o:?}");
    let o = run(&["check", "transfer", "K_ONE"], "");
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("equivalence relation: yes"), "{o:?}");
}

#[test]
fn byte_deterministic() {
    let a = run(&["solve", "D_LINE", "--instance", "dfa-topology:discrete"], "");
    let b = run(&["solve", "D_LINE", "--instance", "dfa-topology:discrete"], "");
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn serve_reports_port_conflict() {
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = run(&["serve", "--bind", &addr], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains(&format!("cannot bind {addr}")), "{o:?}");
}
