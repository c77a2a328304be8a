//! JSON system files.

use std::collections::{BTreeMap, BTreeSet};

use codensity_core::fiber::{Metric, Subset};
use codensity_core::rational::{self, Q};
use codensity_core::system::{fixtures, Dfa, FiniteSystem, KripkeFrame, MarkovChain, Nfa};
use codensity_core::Carrier;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Core(#[from] codensity_core::Error),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Schema { path: path.into(), message: message.into() }
}

/// On-disk shape of a system file. Maps are keyed by state and symbol names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemDoc {
    Kripke {
        states: Vec<String>,
        #[serde(default)]
        succ: BTreeMap<String, Vec<String>>,
    },
    Markov {
        states: Vec<String>,
        #[serde(default)]
        kernel: BTreeMap<String, BTreeMap<String, String>>,
    },
    Dfa {
        states: Vec<String>,
        alphabet: Vec<String>,
        #[serde(default)]
        accept: Vec<String>,
        #[serde(default)]
        delta: BTreeMap<String, BTreeMap<String, String>>,
    },
    Nfa {
        states: Vec<String>,
        alphabet: Vec<String>,
        #[serde(default)]
        accept: Vec<String>,
        #[serde(default)]
        delta: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    },
    /// A finite pseudometric space; each unordered pair listed at least once.
    Metric {
        states: Vec<String>,
        distance: BTreeMap<String, BTreeMap<String, String>>,
    },
}

/// A parsed file: a coalgebra or a pseudometric space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    System(FiniteSystem),
    Metric(Carrier, Metric),
}

impl Document {
    pub fn carrier(&self) -> &Carrier {
        match self {
            Document::System(s) => s.carrier(),
            Document::Metric(c, _) => c,
        }
    }

    pub fn into_system(self) -> Result<FiniteSystem, FormatError> {
        match self {
            Document::System(s) => Ok(s),
            Document::Metric(..) => Err(schema("type", "expected a transition system, found a metric space")),
        }
    }
}

fn carrier(states: &[String]) -> Result<Carrier, FormatError> {
    Carrier::new(states.iter().cloned()).map_err(|e| schema("states", e.to_string()))
}

fn state(c: &Carrier, path: &str, name: &str) -> Result<usize, FormatError> {
    c.index_of(name).ok_or_else(|| schema(path, format!("unknown state {name:?}")))
}

fn state_set(c: &Carrier, path: &str, names: &[String]) -> Result<Subset, FormatError> {
    let mut mask = 0;
    for (i, name) in names.iter().enumerate() {
        mask |= 1u64 << state(c, &format!("{path}[{i}]"), name)?;
    }
    Ok(mask)
}

fn rational(path: &str, text: &str) -> Result<Q, FormatError> {
    rational::parse(text).map_err(|e| schema(path, e.to_string()))
}

fn symbol(alphabet: &[String], path: &str, name: &str) -> Result<usize, FormatError> {
    alphabet.iter().position(|a| a == name).ok_or_else(|| schema(path, format!("unknown symbol {name:?}")))
}

fn keys_known<V>(c: &Carrier, path: &str, map: &BTreeMap<String, V>) -> Result<(), FormatError> {
    for key in map.keys() {
        state(c, &format!("{path}.{key}"), key)?;
    }
    Ok(())
}

impl SystemDoc {
    pub fn load(&self) -> Result<Document, FormatError> {
        Ok(match self {
            SystemDoc::Kripke { states, succ } => {
                let c = carrier(states)?;
                keys_known(&c, "succ", succ)?;
                let rows = c
                    .names()
                    .iter()
                    .map(|x| match succ.get(x) {
                        Some(list) => state_set(&c, &format!("succ.{x}"), list),
                        None => Ok(0),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Document::System(KripkeFrame::new(c, rows)?.into())
            }
            SystemDoc::Markov { states, kernel } => {
                let c = carrier(states)?;
                keys_known(&c, "kernel", kernel)?;
                let mut rows = Vec::with_capacity(c.len());
                for x in c.names() {
                    let mut row = BTreeMap::new();
                    let mut total = Q::zero();
                    for (y, w) in kernel.get(x).into_iter().flatten() {
                        let path = format!("kernel.{x}.{y}");
                        let target = state(&c, &path, y)?;
                        let w = rational(&path, w)?;
                        if w < Q::zero() {
                            return Err(schema(path, "negative weight"));
                        }
                        total += &w;
                        if !w.is_zero() {
                            row.insert(target, w);
                        }
                    }
                    if total > Q::from_integer(1.into()) {
                        return Err(schema(format!("kernel.{x}"), "mass exceeds 1"));
                    }
                    rows.push(row);
                }
                Document::System(MarkovChain::new(c, rows)?.into())
            }
            SystemDoc::Dfa { states, alphabet, accept, delta } => {
                let c = carrier(states)?;
                keys_known(&c, "delta", delta)?;
                let accept = state_set(&c, "accept", accept)?;
                let mut table = Vec::with_capacity(c.len());
                for x in c.names() {
                    let row = delta.get(x).ok_or_else(|| schema(format!("delta.{x}"), "delta not total"))?;
                    for a in row.keys() {
                        symbol(alphabet, &format!("delta.{x}.{a}"), a)?;
                    }
                    let mut targets = Vec::with_capacity(alphabet.len());
                    for a in alphabet {
                        let path = format!("delta.{x}.{a}");
                        let y = row.get(a).ok_or_else(|| schema(&path, "delta not total"))?;
                        targets.push(state(&c, &path, y)?);
                    }
                    table.push(targets);
                }
                Document::System(Dfa::new(c, alphabet.clone(), accept, table)?.into())
            }
            SystemDoc::Nfa { states, alphabet, accept, delta } => {
                let c = carrier(states)?;
                keys_known(&c, "delta", delta)?;
                let accept = state_set(&c, "accept", accept)?;
                let mut table = Vec::with_capacity(c.len());
                for x in c.names() {
                    let row = delta.get(x);
                    for a in row.into_iter().flat_map(|r| r.keys()) {
                        symbol(alphabet, &format!("delta.{x}.{a}"), a)?;
                    }
                    let mut targets = Vec::with_capacity(alphabet.len());
                    for a in alphabet {
                        let path = format!("delta.{x}.{a}");
                        targets.push(match row.and_then(|r| r.get(a)) {
                            Some(list) => state_set(&c, &path, list)?,
                            None => 0,
                        });
                    }
                    table.push(targets);
                }
                Document::System(Nfa::new(c, alphabet.clone(), accept, table)?.into())
            }
            SystemDoc::Metric { states, distance } => {
                let c = carrier(states)?;
                keys_known(&c, "distance", distance)?;
                let n = c.len();
                let mut given: BTreeMap<(usize, usize), Q> = BTreeMap::new();
                for (x, row) in distance {
                    let i = state(&c, "distance", x)?;
                    for (y, v) in row {
                        let path = format!("distance.{x}.{y}");
                        let j = state(&c, &path, y)?;
                        let v = rational(&path, v)?;
                        let key = (i.min(j), i.max(j));
                        if let Some(old) = given.get(&key) {
                            if *old != v {
                                return Err(schema(path, "asymmetric distance"));
                            }
                        }
                        given.insert(key, v);
                    }
                }
                let mut m = Metric::zero(n);
                for i in 0..n {
                    if let Some(v) = given.get(&(i, i)) {
                        if !v.is_zero() {
                            return Err(schema(format!("distance.{}.{}", c.name(i), c.name(i)), "self-distance must be 0"));
                        }
                    }
                    for j in i + 1..n {
                        let v = given.get(&(i, j)).ok_or_else(|| {
                            schema(format!("distance.{}.{}", c.name(i), c.name(j)), "missing distance")
                        })?;
                        m.set_symmetric(i, j, v.clone());
                    }
                }
                m.validate().map_err(|e| schema("distance", e.to_string()))?;
                Document::Metric(c, m)
            }
        })
    }

    /// Canonical document for a system: every state and symbol listed,
    /// zero weights omitted.
    pub fn from_system(system: &FiniteSystem) -> SystemDoc {
        let c = system.carrier();
        let names = |mask: Subset| -> Vec<String> {
            (0..c.len()).filter(|&i| mask >> i & 1 == 1).map(|i| c.name(i).to_owned()).collect()
        };
        let states = c.names().to_vec();
        match system {
            FiniteSystem::Kripke(f) => SystemDoc::Kripke {
                states,
                succ: (0..c.len()).map(|x| (c.name(x).to_owned(), names(f.successors(x)))).collect(),
            },
            FiniteSystem::Markov(m) => SystemDoc::Markov {
                states,
                kernel: (0..c.len())
                    .map(|x| {
                        let row = m.row(x).iter().map(|(&y, w)| (c.name(y).to_owned(), rational::render(w))).collect();
                        (c.name(x).to_owned(), row)
                    })
                    .collect(),
            },
            FiniteSystem::Dfa(d) => SystemDoc::Dfa {
                states,
                alphabet: d.alphabet().to_vec(),
                accept: names(d.accept()),
                delta: (0..c.len())
                    .map(|x| {
                        let row = d
                            .alphabet()
                            .iter()
                            .enumerate()
                            .map(|(a, s)| (s.clone(), c.name(d.step(x, a)).to_owned()))
                            .collect();
                        (c.name(x).to_owned(), row)
                    })
                    .collect(),
            },
            FiniteSystem::Nfa(d) => SystemDoc::Nfa {
                states,
                alphabet: d.alphabet().to_vec(),
                accept: names(d.accept()),
                delta: (0..c.len())
                    .map(|x| {
                        let row =
                            d.alphabet().iter().enumerate().map(|(a, s)| (s.clone(), names(d.step(x, a)))).collect();
                        (c.name(x).to_owned(), row)
                    })
                    .collect(),
            },
        }
    }

    pub fn from_metric(c: &Carrier, m: &Metric) -> SystemDoc {
        let n = c.len();
        SystemDoc::Metric {
            states: c.names().to_vec(),
            distance: (0..n)
                .map(|x| {
                    let row = (x + 1..n).map(|y| (c.name(y).to_owned(), rational::render(m.get(x, y)))).collect();
                    (c.name(x).to_owned(), row)
                })
                .filter(|(_, row): &(String, BTreeMap<String, String>)| !row.is_empty())
                .collect(),
        }
    }

    pub fn from_document(doc: &Document) -> SystemDoc {
        match doc {
            Document::System(s) => SystemDoc::from_system(s),
            Document::Metric(c, m) => SystemDoc::from_metric(c, m),
        }
    }
}

/// A built-in example by name, including the metric space `H_PAIR`.
pub fn fixture_document(name: &str) -> Option<Document> {
    match fixtures::system(name) {
        Some(s) => Some(Document::System(s)),
        None if name == "H_PAIR" => {
            let (c, m) = fixtures::h_pair();
            Some(Document::Metric(c, m))
        }
        None => None,
    }
}

pub fn parse_document(text: &str) -> Result<Document, FormatError> {
    serde_json::from_str::<SystemDoc>(text)?.load()
}

pub fn document_from_value(value: Value) -> Result<Document, FormatError> {
    serde_json::from_value::<SystemDoc>(value)?.load()
}

pub fn to_json(doc: &Document) -> String {
    let mut out = serde_json::to_string_pretty(&SystemDoc::from_document(doc)).expect("documents serialize");
    out.push('\n');
    out
}

/// Parses a subset given as `a,b,c` or a JSON list of names.
pub fn parse_state_set(c: &Carrier, text: &str) -> Result<Subset, FormatError> {
    let names: Vec<String> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text)?
    } else {
        text.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect()
    };
    let unique: BTreeSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(schema("set", "repeated state"));
    }
    state_set(c, "set", &names)
}

/// Parses `(x,y)` or `x,y` into a pair of state indices.
pub fn parse_pair(c: &Carrier, text: &str) -> Result<(usize, usize), FormatError> {
    let inner = text.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => Ok((state(c, "start", x)?, state(c, "start", y)?)),
        _ => Err(schema("start", format!("expected a pair (x,y), found {text:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_round_trip() {
        for name in fixtures::NAMES {
            let doc = fixture_document(name).unwrap();
            assert_eq!(parse_document(&to_json(&doc)).unwrap(), doc, "{name}");
        }
    }

    #[test]
    fn validation_messages() {
        let err = parse_document(r#"{"type":"markov","states":["x","y","z"],"kernel":{"x":{"z":"3/2"}}}"#).unwrap_err();
        assert!(err.to_string().contains("mass exceeds 1"), "{err}");
        let err = parse_document(
            r#"{"type":"dfa","states":["q0","q1","q2"],"alphabet":["a"],"accept":["q1"],
                "delta":{"q0":{"a":"q1"},"q1":{"a":"q2"},"q2":{}}}"#,
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "delta.q2.a: delta not total");
        let err = parse_document(r#"{"type":"kripke","states":["p"],"succ":{"p":["r"]}}"#).unwrap_err();
        assert_eq!(err.to_string(), "succ.p[0]: unknown state \"r\"");
        let err = parse_document(r#"{"type":"kripke","states":["p"],"colour":"red"}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn order_insensitive() {
        let a = parse_document(r#"{"succ":{"b":["a"],"a":["b","a"]},"states":["a","b"],"type":"kripke"}"#).unwrap();
        let b = parse_document(r#"{"type":"kripke","states":["a","b"],"succ":{"a":["a","b"],"b":["a"]}}"#).unwrap();
        assert_eq!(a, b);
    }
}
