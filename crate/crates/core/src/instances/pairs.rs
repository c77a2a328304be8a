//! Trimmed games over pair generators, and the untrimmed game on small
//! carriers.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::fiber::{self, full_mask, Carrier, CarrierMap, FiberElement, FiberKind, Relation, Subset};
use crate::game::{Arena, ArenaBuilder, Player, SolvedArena};
use crate::lifting::{self, Modality, ObservationDomain, ObservationEntry, ObservationParams, Observable};
use crate::rational::Q;
use crate::system::{Dfa, FiniteSystem, KripkeFrame, MarkovChain, Nfa};

use super::{render_pair, Instance, SimVariant};

/// Largest carrier for which trimmed pair games are built.
pub const MAX_PAIR_GAME_STATES: usize = 10;

/// A trimmed game whose Spoiler positions are the ordered pairs `(x,y)`.
#[derive(Clone, Debug)]
pub struct PairGame {
    pub solved: SolvedArena,
    carrier: Carrier,
    pair_index: Vec<usize>,
    nodes: Vec<PairNode>,
}

/// What a position of a pair game stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairNode {
    Pair(usize, usize),
    /// Spoiler's observation: entry index and `k⁻¹(⊤)`; `None` for an
    /// accept entry.
    Observation(usize, Option<Subset>),
}

impl PairGame {
    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn arena(&self) -> &Arena {
        &self.solved.arena
    }

    pub fn position(&self, x: usize, y: usize) -> usize {
        self.pair_index[x * self.carrier.len() + y]
    }

    pub fn node(&self, p: usize) -> PairNode {
        self.nodes[p]
    }

    pub fn pair_of(&self, p: usize) -> Option<(usize, usize)> {
        match self.nodes[p] {
            PairNode::Pair(x, y) => Some((x, y)),
            PairNode::Observation(..) => None,
        }
    }

    pub fn is_winning(&self, x: usize, y: usize) -> bool {
        self.solved.solution.duplicator_wins[self.position(x, y)]
    }

    /// Pairs from which Duplicator wins.
    pub fn region(&self) -> Relation {
        Relation::from_fn(self.carrier.len(), |x, y| self.is_winning(x, y))
    }
}

pub fn pair_label(carrier: &Carrier, x: usize, y: usize) -> String {
    render_pair(carrier, x, y)
}

fn omega_relation(entry: &ObservationEntry) -> Result<&Relation> {
    match &entry.omega {
        ObservationDomain::Finite(o) => o
            .relation()
            .ok_or_else(|| Error::Unsupported("pair games need a relational observation domain".into())),
        ObservationDomain::UnitInterval => Err(Error::Unsupported("pair games need a finite observation domain".into())),
    }
}

fn point_table(system: &FiniteSystem, k: &CarrierMap, modality: &Modality) -> Result<Vec<usize>> {
    match lifting::composite(system, &Observable::Finite(k.clone()), modality)? {
        Observable::Finite(g) => Ok(g.table().to_vec()),
        Observable::Real(_) => Err(Error::Incompatible("expected a two-valued modality".into())),
    }
}

/// Pairs `(x,y)` at which `τ ∘ F χ_Z ∘ c` is not decent into `Ω`.
fn distinguished(system: &FiniteSystem, entry: &ObservationEntry, z: Subset) -> Result<Relation> {
    let rel = omega_relation(entry)?;
    let n = system.carrier().len();
    let k = CarrierMap::indicator(system.carrier(), z);
    match &entry.modality {
        Modality::ThresholdFamily => {
            let chain = system.as_markov()?;
            let masses: Vec<Q> = (0..n).map(|x| chain.mass(x, z)).collect();
            let mut thresholds: BTreeSet<Q> = masses.iter().cloned().collect();
            thresholds.insert(Q::zero());
            thresholds.insert(Q::one());
            Ok(Relation::from_fn(n, |x, y| {
                thresholds.iter().any(|r| {
                    let (u, v) = ((masses[x] >= *r) as usize, (masses[y] >= *r) as usize);
                    !rel.contains(u, v)
                })
            }))
        }
        m => {
            let g = point_table(system, &k, m)?;
            Ok(Relation::from_fn(n, |x, y| !rel.contains(g[x], g[y])))
        }
    }
}

/// Trimmed game for relation-valued parameters.
///
/// Spoiler at `(x,y)` picks `(A, k)` with `τ_A ∘ F k ∘ c` separating `x`
/// from `y`; Duplicator answers with a pair separated by `k`. An accept
/// entry separates pairs without reference to `k`, so its move leads to a
/// Duplicator dead end.
pub fn build_pair_game(system: &FiniteSystem, params: &ObservationParams, kind: FiberKind) -> Result<PairGame> {
    if !matches!(kind, FiberKind::EquivRel | FiberKind::Preorder | FiberKind::EndoRel) {
        return Err(Error::Unsupported(alloc::format!("no pair game for the {kind} fiber")));
    }
    params.check(system, kind)?;
    let carrier = system.carrier().clone();
    let n = carrier.len();
    if n > MAX_PAIR_GAME_STATES {
        return Err(Error::Unsupported(alloc::format!("pair games are limited to {MAX_PAIR_GAME_STATES} states")));
    }
    let mut b = ArenaBuilder::new();
    let mut pair_index = Vec::with_capacity(n * n);
    let mut nodes = Vec::new();
    for x in 0..n {
        for y in 0..n {
            pair_index.push(b.position(render_pair(&carrier, x, y), Player::Spoiler));
            nodes.push(PairNode::Pair(x, y));
        }
    }
    let multi = params.entries().len() > 1;
    for (a, entry) in params.entries().iter().enumerate() {
        let rel = omega_relation(entry)?;
        if entry.modality == Modality::Accept {
            let seps = distinguished(system, entry, 0)?;
            if seps.count() > 0 {
                let d = b.position(entry.label.clone(), Player::Duplicator);
                if d == nodes.len() {
                    nodes.push(PairNode::Observation(a, None));
                }
                for (x, y) in seps.pairs() {
                    b.add_move(pair_index[x * n + y], d);
                }
            }
            continue;
        }
        for z in 0..=full_mask(n) {
            let seps = distinguished(system, entry, z)?;
            if seps.count() == 0 {
                continue;
            }
            let label = if multi {
                alloc::format!("{}:{}", entry.label, carrier.render_subset(z))
            } else {
                carrier.render_subset(z)
            };
            let d = b.position(label, Player::Duplicator);
            if d == nodes.len() {
                nodes.push(PairNode::Observation(a, Some(z)));
            }
            for (x, y) in seps.pairs() {
                b.add_move(pair_index[x * n + y], d);
            }
            let bit = |v: usize| ((z >> v) & 1) as usize;
            for x in 0..n {
                for y in 0..n {
                    if !rel.contains(bit(x), bit(y)) {
                        b.add_move(d, pair_index[x * n + y]);
                    }
                }
            }
        }
    }
    Ok(PairGame { solved: SolvedArena::new(b.build()?), carrier, pair_index, nodes })
}

pub fn build_kripke_game(frame: &KripkeFrame) -> Result<PairGame> {
    let system = FiniteSystem::from(frame.clone());
    build_pair_game(&system, &Instance::KripkeBisim.params(&system)?, FiberKind::EquivRel)
}

/// Pairs read as "x below y".
pub fn build_similarity_game(frame: &KripkeFrame, variant: SimVariant) -> Result<PairGame> {
    let system = FiniteSystem::from(frame.clone());
    build_pair_game(&system, &Instance::KripkeSim(variant).params(&system)?, FiberKind::Preorder)
}

pub fn build_prob_game(chain: &MarkovChain) -> Result<PairGame> {
    let system = FiniteSystem::from(chain.clone());
    build_pair_game(&system, &Instance::ProbBisim.params(&system)?, FiberKind::EquivRel)
}

pub fn build_dfa_game(dfa: &Dfa) -> Result<PairGame> {
    let system = FiniteSystem::from(dfa.clone());
    build_pair_game(&system, &Instance::DfaLang.params(&system)?, FiberKind::EquivRel)
}

pub fn build_nfa_game(nfa: &Nfa) -> Result<PairGame> {
    let system = FiniteSystem::from(nfa.clone());
    build_pair_game(&system, &Instance::NfaBisim.params(&system)?, FiberKind::EquivRel)
}

/// Largest carrier for which the untrimmed arena is materialized.
pub const MAX_UNTRIMMED_STATES: usize = 4;

/// The untrimmed game with every fiber element as a Spoiler position.
#[derive(Clone, Debug)]
pub struct UntrimmedGame {
    pub solved: SolvedArena,
    /// Spoiler positions `0..elements.len()` in this order.
    pub elements: Vec<FiberElement>,
}

impl UntrimmedGame {
    pub fn position_of(&self, p: &FiberElement) -> Option<usize> {
        self.elements.iter().position(|e| e == p)
    }

    pub fn is_winning(&self, p: &FiberElement) -> Option<bool> {
        self.position_of(p).map(|i| self.solved.solution.duplicator_wins[i])
    }
}

/// Explicit untrimmed arena on equivalences or preorders: Spoiler at `P`
/// picks `(A, k)` whose observation composite is not decent from `P`;
/// Duplicator picks any `P'` from which `k` is not decent.
pub fn build_untrimmed_game(system: &FiniteSystem, params: &ObservationParams, kind: FiberKind) -> Result<UntrimmedGame> {
    if !matches!(kind, FiberKind::EquivRel | FiberKind::Preorder) {
        return Err(Error::Unsupported(alloc::format!("no explicit untrimmed arena for the {kind} fiber")));
    }
    params.check(system, kind)?;
    let carrier = system.carrier();
    let n = carrier.len();
    if n > MAX_UNTRIMMED_STATES {
        return Err(Error::Unsupported(alloc::format!(
            "untrimmed arenas are limited to {MAX_UNTRIMMED_STATES} states"
        )));
    }
    let elements = fiber::enumerate(kind, carrier)?;
    let mut b = ArenaBuilder::new();
    for e in &elements {
        b.position(alloc::format!("{e}"), Player::Spoiler);
    }
    for (a, entry) in params.entries().iter().enumerate() {
        let ObservationDomain::Finite(omega) = &entry.omega else {
            return Err(Error::Unsupported("untrimmed arenas need finite observation domains".into()));
        };
        for k in lifting::all_maps(carrier, omega.carrier()) {
            let composites: Vec<CarrierMap> = match &entry.modality {
                Modality::ThresholdFamily => {
                    let chain = system.as_markov()?;
                    let z = k.preimage(0b10);
                    let mut rs: BTreeSet<Q> = (0..n).map(|x| chain.mass(x, z)).collect();
                    rs.insert(Q::zero());
                    rs.insert(Q::one());
                    rs.into_iter()
                        .map(|r| {
                            let table = point_table(system, &k, &Modality::Threshold(r))?;
                            CarrierMap::new(carrier.clone(), Carrier::two(), table)
                        })
                        .collect::<Result<_>>()?
                }
                m => vec![CarrierMap::new(carrier.clone(), Carrier::two(), point_table(system, &k, m)?)?],
            };
            let label = alloc::format!("{a}:{}", carrier.render_subset(k.preimage(0b10)));
            let d = b.position(label, Player::Duplicator);
            for (i, p) in elements.iter().enumerate() {
                let mut attack = false;
                for g in &composites {
                    if !fiber::is_decent(g, p, omega)? {
                        attack = true;
                        break;
                    }
                }
                if attack {
                    b.add_move(i, d);
                }
                if !fiber::is_decent(&k, p, omega)? {
                    b.add_move(d, i);
                }
            }
        }
    }
    Ok(UntrimmedGame { solved: SolvedArena::new(b.build()?), elements })
}
