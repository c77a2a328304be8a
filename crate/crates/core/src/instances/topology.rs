//! Bisimulation topologies of deterministic automata and the untrimmed
//! topology game.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fiber::{self, full_mask, CarrierMap, FiberElement, FiberKind, Subset, MAX_TOPOLOGY_CARRIER};
use crate::fixpoint::{gfp, FixpointReport, Mode};
use crate::game::{GameRules, LegalMoves, Player, Policy};
use crate::lifting::{self, ObservationDomain, ObservationParams, Observable, Witness};
use crate::system::{Dfa, FiniteSystem};

use super::{Instance, TopologyVariant};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BisimTopology {
    pub topology: FiberElement,
    /// Distinct acceptance sets `Acc_w = {x | w accepted from x}` with a
    /// shortest word producing each, in breadth-first order.
    pub subbasis: Vec<(Vec<usize>, Subset)>,
}

/// Topology generated by the acceptance sets of all words (and their
/// complements for the discrete variant).
pub fn bisim_topology(dfa: &Dfa, variant: TopologyVariant) -> Result<BisimTopology> {
    let carrier = dfa.carrier();
    let n = carrier.len();
    if n > MAX_TOPOLOGY_CARRIER {
        return Err(Error::Unsupported(alloc::format!("topologies are limited to {MAX_TOPOLOGY_CARRIER} points")));
    }
    let acc = |t: &[usize]| (0..n).filter(|&x| dfa.accepts(t[x])).fold(0, |m, x| m | (1u64 << x));
    let mut seen_maps: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut seen_sets: BTreeSet<Subset> = BTreeSet::new();
    let mut subbasis = Vec::new();
    let mut queue = VecDeque::new();
    let identity: Vec<usize> = (0..n).collect();
    seen_maps.insert(identity.clone());
    queue.push_back((Vec::new(), identity));
    while let Some((word, t)) = queue.pop_front() {
        let set = acc(&t);
        if seen_sets.insert(set) {
            subbasis.push((word.clone(), set));
        }
        for a in 0..dfa.alphabet().len() {
            let next: Vec<usize> = t.iter().map(|&q| dfa.step(q, a)).collect();
            if seen_maps.insert(next.clone()) {
                let mut w = word.clone();
                w.push(a);
                queue.push_back((w, next));
            }
        }
    }
    let mut generators: Vec<Subset> = subbasis.iter().map(|(_, s)| *s).collect();
    if variant == TopologyVariant::Discrete {
        let full = full_mask(n);
        generators.extend(subbasis.iter().map(|(_, s)| full & !s));
    }
    let topology = FiberElement::topology_generated_by(carrier, &generators)?;
    Ok(BisimTopology { topology, subbasis })
}

/// The codensity fixed point on the topology fiber.
pub fn topology_gfp(dfa: &Dfa, variant: TopologyVariant) -> Result<FixpointReport> {
    let system = FiniteSystem::from(dfa.clone());
    gfp(&system, &Instance::DfaTopology(variant).params(&system)?, FiberKind::Topology, Mode::Exact)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologyCheck {
    pub winning: bool,
    /// For losing positions: `(A, k)` with `k` continuous from the last
    /// Kleene iterate above `t` and the observation composite not
    /// continuous from `t`.
    pub witness: Option<Witness>,
}

/// Duplicator wins from `t` iff `t` is below the bisimulation topology.
pub fn topology_position_check(dfa: &Dfa, variant: TopologyVariant, t: &FiberElement) -> Result<TopologyCheck> {
    if t.kind() != FiberKind::Topology || t.carrier() != dfa.carrier() {
        return Err(Error::CarrierMismatch("position must be a topology on the automaton's states".into()));
    }
    let nu = bisim_topology(dfa, variant)?.topology;
    if fiber::leq(t, &nu)? {
        return Ok(TopologyCheck { winning: true, witness: None });
    }
    let report = topology_gfp(dfa, variant)?;
    let witness = ranked_witness(dfa, variant, &report, t)?;
    Ok(TopologyCheck { winning: false, witness })
}

fn ranked_witness(
    dfa: &Dfa,
    variant: TopologyVariant,
    report: &FixpointReport,
    t: &FiberElement,
) -> Result<Option<Witness>> {
    let Some(n) = report.first_failure(|p| fiber::leq(t, p).unwrap_or(false)) else {
        return Ok(None);
    };
    let system = FiniteSystem::from(dfa.clone());
    let params = Instance::DfaTopology(variant).params(&system)?;
    lifting::spoiler_witness_relative(&system, &params, t, &report.history[n - 1])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TopologyPosition {
    Spoiler(FiberElement),
    Duplicator { entry: usize, k: Subset },
}

/// Untrimmed topology game on a deterministic automaton.
#[derive(Clone, Debug)]
pub struct TopologyGame {
    pub dfa: Dfa,
    pub variant: TopologyVariant,
    pub params: ObservationParams,
    pub report: FixpointReport,
    system: FiniteSystem,
}

impl TopologyGame {
    pub fn new(dfa: Dfa, variant: TopologyVariant) -> Result<Self> {
        let system = FiniteSystem::from(dfa.clone());
        let params = Instance::DfaTopology(variant).params(&system)?;
        let report = topology_gfp(&dfa, variant)?;
        Ok(TopologyGame { dfa, variant, params, report, system })
    }

    pub fn bisimilarity(&self) -> &FiberElement {
        &self.report.result
    }

    fn omega(&self, entry: usize) -> &FiberElement {
        match &self.params.entries()[entry].omega {
            ObservationDomain::Finite(o) => o,
            ObservationDomain::UnitInterval => unreachable!("topology parameters are finite"),
        }
    }

    fn indicator(&self, k: Subset) -> CarrierMap {
        CarrierMap::indicator(self.dfa.carrier(), k)
    }

    /// Whether `(entry, k)` is a Spoiler move at `t`.
    fn attacks(&self, t: &FiberElement, entry: usize, k: Subset) -> bool {
        let modality = &self.params.entries()[entry].modality;
        match lifting::composite(&self.system, &Observable::Finite(self.indicator(k)), modality) {
            Ok(Observable::Finite(g)) => !fiber::is_decent(&g, t, self.omega(entry)).unwrap_or(true),
            _ => false,
        }
    }

    fn continuous_from(&self, t: &FiberElement, entry: usize, k: Subset) -> bool {
        fiber::is_decent(&self.indicator(k), t, self.omega(entry)).unwrap_or(false)
    }

    fn spoiler_moves(&self, t: &FiberElement) -> Vec<TopologyPosition> {
        let full = full_mask(self.dfa.carrier().len());
        let mut out = Vec::new();
        for entry in 0..self.params.entries().len() {
            for k in 0..=full {
                if self.attacks(t, entry, k) {
                    out.push(TopologyPosition::Duplicator { entry, k });
                }
            }
        }
        out
    }

    fn indiscrete(&self) -> FiberElement {
        fiber::top(FiberKind::Topology, self.dfa.carrier())
    }

    fn duplicator_answer(&self, entry: usize, k: Subset) -> Option<FiberElement> {
        let nu = self.bisimilarity();
        if !self.continuous_from(nu, entry, k) {
            return Some(nu.clone());
        }
        let top = self.indiscrete();
        (!self.continuous_from(&top, entry, k)).then_some(top)
    }
}

impl GameRules for TopologyGame {
    type Position = TopologyPosition;

    fn owner(&self, p: &TopologyPosition) -> Player {
        match p {
            TopologyPosition::Spoiler(_) => Player::Spoiler,
            TopologyPosition::Duplicator { .. } => Player::Duplicator,
        }
    }

    fn is_legal(&self, from: &TopologyPosition, to: &TopologyPosition) -> bool {
        let entries = self.params.entries().len();
        let full = full_mask(self.dfa.carrier().len());
        match (from, to) {
            (TopologyPosition::Spoiler(t), TopologyPosition::Duplicator { entry, k }) => {
                *entry < entries && *k <= full && self.attacks(t, *entry, *k)
            }
            (TopologyPosition::Duplicator { entry, k }, TopologyPosition::Spoiler(t)) => {
                t.kind() == FiberKind::Topology && t.carrier() == self.dfa.carrier() && !self.continuous_from(t, *entry, *k)
            }
            _ => false,
        }
    }

    fn legal_moves(&self, p: &TopologyPosition) -> LegalMoves<TopologyPosition> {
        match p {
            TopologyPosition::Spoiler(t) => LegalMoves::Listed(self.spoiler_moves(t)),
            TopologyPosition::Duplicator { entry, k } => LegalMoves::Oracle {
                hint: "any topology from which k is not continuous".into(),
                sample: self.duplicator_answer(*entry, *k).map(TopologyPosition::Spoiler).into_iter().collect(),
            },
        }
    }

    fn has_moves(&self, p: &TopologyPosition) -> bool {
        match p {
            TopologyPosition::Spoiler(t) => !self.spoiler_moves(t).is_empty(),
            TopologyPosition::Duplicator { entry, k } => !self.continuous_from(&self.indiscrete(), *entry, *k),
        }
    }

    fn duplicator_wins(&self, p: &TopologyPosition) -> Option<bool> {
        match p {
            TopologyPosition::Spoiler(t) => fiber::leq(t, self.bisimilarity()).ok(),
            TopologyPosition::Duplicator { entry, k } => Some(!self.continuous_from(self.bisimilarity(), *entry, *k)),
        }
    }

    fn render(&self, p: &TopologyPosition) -> String {
        match p {
            TopologyPosition::Spoiler(t) => alloc::format!("{t}"),
            TopologyPosition::Duplicator { entry, k } => alloc::format!(
                "{}:{}",
                self.params.entries()[*entry].label,
                self.dfa.carrier().render_subset(*k)
            ),
        }
    }
}

/// Spoiler engine: ranked witnesses from losing positions, otherwise the
/// first legal move.
pub struct TopologySpoilerEngine;

impl Policy<TopologyGame> for TopologySpoilerEngine {
    fn choose(&mut self, game: &TopologyGame, history: &[TopologyPosition]) -> Option<TopologyPosition> {
        let TopologyPosition::Spoiler(t) = history.last()? else {
            return None;
        };
        if let Ok(Some(w)) = ranked_witness(&game.dfa, game.variant, &game.report, t) {
            if let Some(k) = w.observable.top_set() {
                return Some(TopologyPosition::Duplicator { entry: w.entry, k });
            }
        }
        game.spoiler_moves(t).into_iter().next()
    }
}

/// Duplicator engine: the bisimulation topology when it defeats `k`,
/// otherwise the indiscrete topology.
pub struct TopologyDuplicatorEngine;

impl Policy<TopologyGame> for TopologyDuplicatorEngine {
    fn choose(&mut self, game: &TopologyGame, history: &[TopologyPosition]) -> Option<TopologyPosition> {
        match history.last()? {
            TopologyPosition::Duplicator { entry, k } => game.duplicator_answer(*entry, *k).map(TopologyPosition::Spoiler),
            _ => None,
        }
    }
}
