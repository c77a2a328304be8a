//! Solve reports shared by the command line and the HTTP service.

use std::collections::BTreeSet;
use std::fmt::Write;

use codensity_core::fiber::{self, FiberElement, FiberKind, Metric, Relation};
use codensity_core::fixpoint::{default_tolerance, gfp, gfp_capped, FixpointReport, Mode, DEFAULT_METRIC_CAP};
use codensity_core::game::Arena;
use codensity_core::instances::{
    bisim_topology, build_desharnais_game, build_dfa_game, build_kripke_game, build_nfa_game, build_prob_game,
    build_similarity_game, transfer_check, Instance, PairGame,
};
use codensity_core::lifting::transform;
use codensity_core::rational::{self, Q};
use codensity_core::system::FiniteSystem;
use codensity_core::Carrier;
use serde_json::{json, Map, Value};

use crate::error::{AppError, Result};
use crate::format::Document;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NumberFormat {
    #[default]
    Rational,
    Decimal,
}

impl NumberFormat {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "rational" => Ok(NumberFormat::Rational),
            "decimal" => Ok(NumberFormat::Decimal),
            other => Err(AppError::Parse(format!("unknown number format {other:?}"))),
        }
    }

    pub fn render(self, q: &Q) -> String {
        match self {
            NumberFormat::Rational => rational::render(q),
            NumberFormat::Decimal => rational::render_decimal(q, 6),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Tolerance of the metric iteration; defaults to `1/10^6`.
    pub eps: Option<Q>,
    /// Iteration cap of the metric iteration.
    pub cap: Option<usize>,
    pub format: NumberFormat,
}

/// A finished solve: JSON body, text rendering and, for arena-based
/// instances, the arena with its invariant.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub json: Value,
    pub text: String,
    pub arena: Option<(Arena, BTreeSet<usize>)>,
}

fn pair_names(c: &Carrier, r: &Relation) -> Vec<[String; 2]> {
    r.pairs().map(|(x, y)| [c.name(x).to_owned(), c.name(y).to_owned()]).collect()
}

fn render_pairs(c: &Carrier, r: &Relation) -> String {
    let items: Vec<String> = r.pairs().map(|(x, y)| format!("({},{})", c.name(x), c.name(y))).collect();
    format!("{{{}}}", items.join(","))
}

fn subset_names(c: &Carrier, mask: u64) -> Vec<String> {
    c.subset_names(mask).into_iter().map(str::to_owned).collect()
}

fn metric_json(c: &Carrier, m: &Metric, fmt: NumberFormat) -> Value {
    let mut rows = Map::new();
    for x in 0..c.len() {
        let mut row = Map::new();
        for y in 0..c.len() {
            row.insert(c.name(y).to_owned(), Value::String(fmt.render(m.get(x, y))));
        }
        rows.insert(c.name(x).to_owned(), Value::Object(row));
    }
    Value::Object(rows)
}

pub fn metric_table(c: &Carrier, m: &Metric, fmt: NumberFormat) -> String {
    let n = c.len();
    let cells: Vec<Vec<String>> = (0..n).map(|x| (0..n).map(|y| fmt.render(m.get(x, y))).collect()).collect();
    let width = cells
        .iter()
        .flatten()
        .map(String::len)
        .chain(c.names().iter().map(String::len))
        .max()
        .unwrap_or(1);
    let mut out = format!("{:>width$}", "");
    for y in 0..n {
        let _ = write!(out, "  {:>width$}", c.name(y));
    }
    out.push('\n');
    for (x, row) in cells.iter().enumerate() {
        let _ = write!(out, "{:>width$}", c.name(x));
        for cell in row {
            let _ = write!(out, "  {cell:>width$}");
        }
        out.push('\n');
    }
    out
}

fn fixed_point_json(p: &FiberElement, fmt: NumberFormat) -> Value {
    let c = p.carrier();
    match p.kind() {
        FiberKind::EquivRel => json!({
            "kind": "EquivRel",
            "blocks": p.blocks().unwrap_or_default().into_iter().map(|b| subset_names(c, b)).collect::<Vec<_>>(),
        }),
        FiberKind::Preorder | FiberKind::EndoRel => json!({
            "kind": p.kind().to_string(),
            "pairs": pair_names(c, p.relation().expect("relation fiber")),
        }),
        FiberKind::PseudoMetric => json!({
            "kind": "PseudoMetric",
            "distance": metric_json(c, p.metric().expect("metric fiber"), fmt),
        }),
        FiberKind::Topology => json!({
            "kind": "Topology",
            "opens": p.open_sets().expect("topology").opens().iter().map(|&u| subset_names(c, u)).collect::<Vec<_>>(),
        }),
    }
}

fn header(text: &mut String, instance: Instance, c: &Carrier, report: Option<&FixpointReport>) {
    let _ = writeln!(text, "instance: {instance}");
    let _ = writeln!(text, "states: {}", c.names().join(" "));
    if let Some(r) = report {
        let _ = writeln!(text, "iterations: {}", r.iterations);
    }
}

fn base_json(instance: Instance, c: &Carrier, report: Option<&FixpointReport>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("instance".into(), json!(instance.to_string()));
    m.insert("states".into(), json!(c.names()));
    if let Some(r) = report {
        m.insert("iterations".into(), json!(r.iterations));
        m.insert("converged".into(), json!(r.converged));
    }
    m
}

fn cross_check(m: &mut Map<String, Value>, text: &mut String, ok: bool, detail: &str) -> Result<()> {
    m.insert("crossCheck".into(), json!({ "ok": ok, "detail": detail }));
    let _ = writeln!(text, "cross-check: {}", if ok { detail.to_owned() } else { format!("FAILED: {detail}") });
    if ok {
        Ok(())
    } else {
        Err(AppError::CrossCheck(detail.to_owned()))
    }
}

pub(crate) fn pair_game(instance: Instance, system: &FiniteSystem) -> Result<PairGame> {
    Ok(match (instance, system) {
        (Instance::KripkeBisim | Instance::TransferCheck, FiniteSystem::Kripke(f)) => build_kripke_game(f)?,
        (Instance::KripkeSim(v), FiniteSystem::Kripke(f)) => build_similarity_game(f, v)?,
        (Instance::ProbBisim, FiniteSystem::Markov(m)) => build_prob_game(m)?,
        (Instance::DfaLang, FiniteSystem::Dfa(d)) => build_dfa_game(d)?,
        (Instance::NfaBisim, FiniteSystem::Nfa(n)) => build_nfa_game(n)?,
        _ => return Err(AppError::Incompatible(format!("instance {instance} has no pair game for this system"))),
    })
}

/// Instances that accept deterministic automata through their
/// nondeterministic reading get the converted system.
pub fn normalize(instance: Instance, system: FiniteSystem) -> FiniteSystem {
    match (instance, system) {
        (Instance::NfaBisim, FiniteSystem::Dfa(d)) => FiniteSystem::Nfa(d.to_nfa()),
        (_, s) => s,
    }
}

pub fn solve(doc: &Document, instance: Instance, options: &SolveOptions) -> Result<SolveReport> {
    let fmt = options.format;
    let system = match doc {
        Document::System(s) => {
            instance.check_system(s)?;
            normalize(instance, s.clone())
        }
        Document::Metric(..) => {
            return Err(AppError::Incompatible(format!(
                "instance {instance} needs a transition system; use `check hausdorff` for metric spaces"
            )))
        }
    };
    let c = system.carrier().clone();
    let mut text = String::new();
    match instance {
        Instance::BisimMetric => {
            let eps = options.eps.clone().unwrap_or_else(default_tolerance);
            let cap = options.cap.unwrap_or(DEFAULT_METRIC_CAP);
            let params = instance.params(&system)?;
            let report = gfp_capped(&system, &params, FiberKind::PseudoMetric, Mode::Tolerance(eps.clone()), cap)?;
            let d = report.result.metric().expect("metric fiber");
            header(&mut text, instance, &c, Some(&report));
            let _ = writeln!(text, "residual: {}", fmt.render(&report.residual));
            let _ = writeln!(text, "distance:");
            text.push_str(&metric_table(&c, d, fmt));
            let mut m = base_json(instance, &c, Some(&report));
            m.insert("residual".into(), json!(fmt.render(&report.residual)));
            m.insert("fixedPoint".into(), fixed_point_json(&report.result, fmt));
            let again = transform(&system, &params, &report.result)?;
            let gap = again.metric().expect("metric fiber").max_abs_diff(d);
            let ok = report.converged && gap <= eps;
            let detail = format!("one more transformer step moves distances by {}", fmt.render(&gap));
            cross_check(&mut m, &mut text, ok, &detail)?;
            Ok(SolveReport { json: Value::Object(m), text, arena: None })
        }
        Instance::DfaTopology(variant) => {
            let dfa = system.as_dfa()?;
            let b = bisim_topology(dfa, variant)?;
            let report = gfp(&system, &instance.params(&system)?, FiberKind::Topology, Mode::Exact)?;
            let special = fiber::specialization_preorder(&b.topology)?;
            let special_rel = special.relation().expect("preorder");
            let word = |w: &[usize]| -> String {
                if w.is_empty() {
                    "ε".into()
                } else {
                    w.iter().map(|&a| dfa.alphabet()[a].as_str()).collect::<Vec<_>>().join("")
                }
            };
            header(&mut text, instance, &c, Some(&report));
            let subbasis: Vec<String> = b.subbasis.iter().map(|(_, s)| c.render_subset(*s)).collect();
            let _ = writeln!(text, "subbasis: {{{}}}", subbasis.join(","));
            for (w, s) in &b.subbasis {
                let _ = writeln!(text, "  {} -> {}", word(w), c.render_subset(*s));
            }
            let _ = writeln!(text, "opens: {}", b.topology);
            let _ = writeln!(text, "specialization: {}", render_pairs(&c, special_rel));
            let mut m = base_json(instance, &c, Some(&report));
            m.insert(
                "subbasis".into(),
                b.subbasis
                    .iter()
                    .map(|(w, s)| json!({ "word": word(w), "set": subset_names(&c, *s) }))
                    .collect(),
            );
            m.insert("fixedPoint".into(), fixed_point_json(&b.topology, fmt));
            m.insert("specialization".into(), json!(pair_names(&c, special_rel)));
            let ok = report.result == b.topology;
            let detail = if ok {
                "word enumeration equals the fixed point"
            } else {
                "word enumeration differs from the fixed point"
            };
            cross_check(&mut m, &mut text, ok, detail)?;
            Ok(SolveReport { json: Value::Object(m), text, arena: None })
        }
        Instance::ProbBisimDesharnais => {
            let chain = system.as_markov()?;
            let kind = FiberKind::EquivRel;
            let report = gfp(&system, &Instance::ProbBisim.params(&system)?, kind, Mode::Exact)?;
            let game = build_desharnais_game(chain)?;
            let region = game.region();
            finish_relational(instance, &c, &report, region, game.solved.arena.clone(), game.solved.invariant(), fmt, text)
        }
        Instance::TransferCheck => {
            let frame = system.as_kripke()?;
            let t = transfer_check(frame)?;
            header(&mut text, instance, &c, None);
            let classes = |r: &Relation| -> Vec<Vec<String>> {
                r.classes().into_iter().map(|b| subset_names(&c, b)).collect()
            };
            let _ = writeln!(text, "egli-milner: {}", render_pairs(&c, &t.phi1));
            let _ = writeln!(text, "equivalence fiber: {}", render_pairs(&c, &t.phi2));
            let _ = writeln!(text, "endorelation fiber: {}", render_pairs(&c, &t.phi3));
            let _ = writeln!(text, "equivalence relation: {}", if t.is_equivalence { "yes" } else { "no" });
            let mut m = base_json(instance, &c, None);
            m.insert("egliMilner".into(), json!(pair_names(&c, &t.phi1)));
            m.insert("equivalenceFiber".into(), json!(pair_names(&c, &t.phi2)));
            m.insert("endorelationFiber".into(), json!(pair_names(&c, &t.phi3)));
            m.insert("isEquivalence".into(), json!(t.is_equivalence));
            if t.is_equivalence {
                m.insert("blocks".into(), json!(classes(&t.phi1)));
            }
            let ok = t.agree && t.is_equivalence;
            cross_check(&mut m, &mut text, ok, if ok { "all three fixed points agree" } else { "fixed points differ" })?;
            Ok(SolveReport { json: Value::Object(m), text, arena: None })
        }
        Instance::Hausdorff => Err(AppError::Incompatible(
            "hausdorff works on metric spaces; use `check hausdorff`".into(),
        )),
        _ => {
            let kind = instance.kind().expect("fixed-point instance");
            let report = gfp(&system, &instance.params(&system)?, kind, Mode::Exact)?;
            let game = pair_game(instance, &system)?;
            let region = game.region();
            finish_relational(instance, &c, &report, region, game.solved.arena.clone(), game.solved.invariant(), fmt, text)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_relational(
    instance: Instance,
    c: &Carrier,
    report: &FixpointReport,
    region: Relation,
    arena: Arena,
    invariant: BTreeSet<usize>,
    fmt: NumberFormat,
    mut text: String,
) -> Result<SolveReport> {
    header(&mut text, instance, c, Some(report));
    let _ = writeln!(text, "fixed point: {}", report.result);
    let _ = writeln!(text, "winning region: {}", render_pairs(c, &region));
    let _ = writeln!(text, "arena: {} positions, {} moves", arena.len(), arena.move_count());
    let mut m = base_json(instance, c, Some(report));
    m.insert("fixedPoint".into(), fixed_point_json(&report.result, fmt));
    m.insert("region".into(), json!(pair_names(c, &region)));
    m.insert("arena".into(), json!({ "positions": arena.len(), "moves": arena.move_count() }));
    let ok = report.result.relation() == Some(&region);
    let detail = if ok { "game region equals the fixed point" } else { "game region differs from the fixed point" };
    cross_check(&mut m, &mut text, ok, detail)?;
    Ok(SolveReport { json: Value::Object(m), text, arena: Some((arena, invariant)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use codensity_core::system::fixtures;

    fn doc(name: &str) -> Document {
        Document::System(fixtures::system(name).unwrap())
    }

    #[test]
    fn dead_region() {
        let r = solve(&doc("K_DEAD"), Instance::KripkeBisim, &SolveOptions::default()).unwrap();
        assert!(r.text.contains("winning region: {(p,p),(q,q)}"), "{}", r.text);
        assert_eq!(r.json["crossCheck"]["ok"], json!(true));
    }

    #[test]
    fn split_metric() {
        let r = solve(&doc("M_SPLIT"), Instance::BisimMetric, &SolveOptions::default()).unwrap();
        assert_eq!(r.json["fixedPoint"]["distance"]["x"]["y"], json!("1/2"));
    }

    #[test]
    fn line_topology() {
        let r = solve(&doc("D_LINE"), Instance::DfaTopology(codensity_core::instances::TopologyVariant::Sierpinski), &SolveOptions::default()).unwrap();
        assert!(r.text.contains("subbasis: {{q1},{q0},{}}"), "{}", r.text);
        assert!(r.text.contains("(q2,q0)") && r.text.contains("(q2,q1)"), "{}", r.text);
    }

    #[test]
    fn incompatible_instance() {
        let err = solve(&doc("K_DEAD"), Instance::ProbBisim, &SolveOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
