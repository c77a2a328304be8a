//! Arena export as Graphviz DOT and JSON.

use std::collections::BTreeSet;
use std::fmt::Write;

use codensity_core::game::{Arena, Player};
use serde_json::{json, Value};

/// `{"spositions", "dpositions", "moves", "invariant"}` with positions
/// named by their labels.
pub fn arena_json(arena: &Arena, invariant: &BTreeSet<usize>) -> Value {
    let labels = |player| arena.positions_of(player).map(|p| arena.label(p)).collect::<Vec<_>>();
    let moves: Vec<[&str; 2]> = (0..arena.len())
        .flat_map(|p| arena.moves(p).iter().map(move |&q| [arena.label(p), arena.label(q)]))
        .collect();
    json!({
        "spositions": labels(Player::Spoiler),
        "dpositions": labels(Player::Duplicator),
        "moves": moves,
        "invariant": invariant.iter().map(|&p| arena.label(p)).collect::<Vec<_>>(),
    })
}

fn quote(label: &str) -> String {
    format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Spoiler positions are boxes, Duplicator positions ellipses; invariant
/// members are filled.
pub fn arena_dot(arena: &Arena, invariant: &BTreeSet<usize>) -> String {
    let mut out = String::from("digraph arena {\n  rankdir=LR;\n");
    for p in 0..arena.len() {
        let shape = match arena.owner(p) {
            Player::Spoiler => "box",
            Player::Duplicator => "ellipse",
        };
        let fill = if invariant.contains(&p) { ", style=filled, fillcolor=palegreen" } else { "" };
        let _ = writeln!(out, "  n{p} [label={}, shape={shape}{fill}];", quote(arena.label(p)));
    }
    for p in 0..arena.len() {
        for q in arena.moves(p) {
            let _ = writeln!(out, "  n{p} -> n{q};");
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use codensity_core::instances::build_kripke_game;
    use codensity_core::system::fixtures;

    #[test]
    fn dead_fixture_export() {
        let game = build_kripke_game(&fixtures::k_dead()).unwrap();
        let inv = game.solved.invariant();
        let v = arena_json(game.arena(), &inv);
        assert_eq!(v["invariant"], json!(["(p,p)", "(q,q)"]));
        assert_eq!(v["spositions"].as_array().unwrap().len(), 4);
        let dot = arena_dot(game.arena(), &inv);
        assert!(dot.starts_with("digraph arena {"));
        assert_eq!(dot.matches("fillcolor").count(), 2);
    }
}
