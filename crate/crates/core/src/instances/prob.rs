//! The four-layer game for probabilistic bisimilarity and the strategy
//! translations between it and the pair game.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fiber::{full_mask, members, Carrier, Relation, Subset};
use crate::game::{simulate, Arena, ArenaBuilder, Outcome, Player, Policy, RandomPolicy, SolvedArena, Strategy, StrategyPolicy};
use crate::system::MarkovChain;

use super::pairs::{PairGame, PairNode};
use super::render_pair;

/// Position kinds of the four-layer game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesharnaisNode {
    /// Spoiler: `(x,y)`.
    Pair(usize, usize),
    /// Duplicator: Spoiler fixed `s`, `t` and `Z`.
    Choice { s: usize, t: usize, z: Subset },
    /// Spoiler: Duplicator answered `Z' ⊇ Z`.
    Sets { z: Subset, z2: Subset },
    /// Duplicator: Spoiler picked `y' ∈ Z' ∖ Z`.
    Probe { z: Subset, y: usize },
}

#[derive(Clone, Debug)]
pub struct DesharnaisGame {
    pub solved: SolvedArena,
    carrier: Carrier,
    nodes: Vec<DesharnaisNode>,
}

impl DesharnaisGame {
    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn arena(&self) -> &Arena {
        &self.solved.arena
    }

    pub fn node(&self, p: usize) -> DesharnaisNode {
        self.nodes[p]
    }

    pub fn position(&self, x: usize, y: usize) -> usize {
        x * self.carrier.len() + y
    }

    pub fn is_winning(&self, x: usize, y: usize) -> bool {
        self.solved.solution.duplicator_wins[self.position(x, y)]
    }

    pub fn region(&self) -> Relation {
        Relation::from_fn(self.carrier.len(), |x, y| self.is_winning(x, y))
    }

    fn find(&self, node: DesharnaisNode) -> Option<usize> {
        self.arena().position(&self.label(node))
    }

    fn label(&self, node: DesharnaisNode) -> String {
        label(&self.carrier, node)
    }
}

fn label(c: &Carrier, node: DesharnaisNode) -> String {
    match node {
        DesharnaisNode::Pair(x, y) => render_pair(c, x, y),
        DesharnaisNode::Choice { s, t, z } => {
            alloc::format!("[{},{}|{}]", c.name(s), c.name(t), c.render_subset(z))
        }
        DesharnaisNode::Sets { z, z2 } => alloc::format!("({},{})", c.render_subset(z), c.render_subset(z2)),
        DesharnaisNode::Probe { z, y } => alloc::format!("({};{})", c.render_subset(z), c.name(y)),
    }
}

/// Spoiler at `(x,y)` picks `s, t` with `{s,t} = {x,y}` and a set `Z`;
/// Duplicator answers `Z' ⊇ Z` with `c(s)(Z) ≤ c(t)(Z')`; Spoiler picks
/// `y' ∈ Z' ∖ Z`; Duplicator picks `x' ∈ Z` and play continues at `(x',y')`.
pub fn build_desharnais_game(chain: &MarkovChain) -> Result<DesharnaisGame> {
    let carrier = chain.carrier().clone();
    let n = carrier.len();
    if n > 6 {
        return Err(Error::Unsupported("the four-layer game is limited to 6 states".into()));
    }
    let full = full_mask(n);
    let mut b = ArenaBuilder::new();
    let mut nodes = Vec::new();
    let intern = |b: &mut ArenaBuilder, nodes: &mut Vec<DesharnaisNode>, node: DesharnaisNode, owner| {
        let p = b.position(label(&carrier, node), owner);
        if p == nodes.len() {
            nodes.push(node);
        }
        p
    };
    for x in 0..n {
        for y in 0..n {
            intern(&mut b, &mut nodes, DesharnaisNode::Pair(x, y), Player::Spoiler);
        }
    }
    let mut expanded_sets = BTreeSet::new();
    for s in 0..n {
        for t in 0..n {
            for z in 0..=full {
                let choice = intern(&mut b, &mut nodes, DesharnaisNode::Choice { s, t, z }, Player::Duplicator);
                b.add_move(s * n + t, choice);
                if s != t {
                    b.add_move(t * n + s, choice);
                }
                let need = chain.mass(s, z);
                let rest = full & !z;
                let mut extra = rest;
                loop {
                    let z2 = z | extra;
                    if need <= chain.mass(t, z2) {
                        let sets = intern(&mut b, &mut nodes, DesharnaisNode::Sets { z, z2 }, Player::Spoiler);
                        b.add_move(choice, sets);
                        if expanded_sets.insert((z, z2)) {
                            for y2 in members(z2 & !z) {
                                let probe =
                                    intern(&mut b, &mut nodes, DesharnaisNode::Probe { z, y: y2 }, Player::Duplicator);
                                b.add_move(sets, probe);
                                for x2 in members(z) {
                                    b.add_move(probe, x2 * n + y2);
                                }
                            }
                        }
                    }
                    if extra == 0 {
                        break;
                    }
                    extra = (extra - 1) & rest;
                }
            }
        }
    }
    Ok(DesharnaisGame { solved: SolvedArena::new(b.build()?), carrier, nodes })
}

/// History-dependent Duplicator strategy keyed by the previous Spoiler
/// position and the current Duplicator position.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemoryStrategy {
    pub table: BTreeMap<(usize, usize), usize>,
}

impl MemoryStrategy {
    pub fn get(&self, previous: usize, current: usize) -> Option<usize> {
        self.table.get(&(previous, current)).copied()
    }
}

impl Policy<SolvedArena> for &MemoryStrategy {
    fn choose(&mut self, _game: &SolvedArena, history: &[usize]) -> Option<usize> {
        let n = history.len();
        if n < 2 {
            return None;
        }
        self.get(history[n - 2], history[n - 1])
    }
}

/// How often each branch of the translation was taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TranslationCoverage {
    /// `c(x)(Z) > c(y)(Z)`: Spoiler is made to pick `s = x`.
    pub first_heavier: usize,
    /// `c(x)(Z) < c(y)(Z)`: Spoiler is made to pick `s = y`.
    pub second_heavier: usize,
}

#[derive(Clone, Debug)]
pub struct DesharnaisToFkp {
    pub strategy: MemoryStrategy,
    pub coverage: TranslationCoverage,
    /// Number of simulated plays, all won by Duplicator.
    pub verified_plays: usize,
}

/// Drives a four-layer Duplicator strategy to answer Spoiler's sets in the
/// pair game.
pub fn translate_strategy_desharnais_to_fkp(
    chain: &MarkovChain,
    fkp: &PairGame,
    desh: &DesharnaisGame,
    dup: &Strategy,
    start: (usize, usize),
    plays: usize,
    seed: u64,
) -> Result<DesharnaisToFkp> {
    let not_winning = |what: String| Error::NotWinning(what);
    let mut strategy = MemoryStrategy::default();
    let mut coverage = TranslationCoverage::default();
    let arena = fkp.arena();
    let mut seen = BTreeSet::new();
    let mut stack = alloc::vec![fkp.position(start.0, start.1)];
    while let Some(sp) = stack.pop() {
        if !seen.insert(sp) {
            continue;
        }
        let (x, y) = fkp.pair_of(sp).expect("Spoiler positions are pairs");
        for &d in arena.moves(sp) {
            let PairNode::Observation(_, Some(z)) = fkp.node(d) else {
                return Err(Error::Unsupported("pair game without set observations".into()));
            };
            let (mx, my) = (chain.mass(x, z), chain.mass(y, z));
            let (s, t) = if mx > my {
                coverage.first_heavier += 1;
                (x, y)
            } else {
                coverage.second_heavier += 1;
                (y, x)
            };
            let choice = desh
                .find(DesharnaisNode::Choice { s, t, z })
                .ok_or_else(|| not_winning(desh.label(DesharnaisNode::Choice { s, t, z })))?;
            let sets = dup.get(choice).ok_or_else(|| not_winning(alloc::format!("no answer at {}", desh.label(desh.node(choice)))))?;
            let DesharnaisNode::Sets { z2, .. } = desh.node(sets) else {
                return Err(Error::Invalid("strategy answers a choice with a non-set position".into()));
            };
            let y2 = members(z2 & !z)
                .next()
                .ok_or_else(|| not_winning(alloc::format!("Z' = Z at {}", desh.label(desh.node(sets)))))?;
            let probe = desh.find(DesharnaisNode::Probe { z, y: y2 }).expect("probe exists");
            let back = dup.get(probe).ok_or_else(|| not_winning(alloc::format!("no answer at {}", desh.label(desh.node(probe)))))?;
            let DesharnaisNode::Pair(x2, y2b) = desh.node(back) else {
                return Err(Error::Invalid("strategy answers a probe with a non-pair position".into()));
            };
            debug_assert_eq!(y2, y2b);
            let answer = fkp.position(x2, y2b);
            if !arena.is_move(d, answer) {
                return Err(not_winning(alloc::format!("translated answer {} is illegal", render_pair(fkp.carrier(), x2, y2b))));
            }
            strategy.table.insert((sp, d), answer);
            stack.push(answer);
        }
    }
    let start_pos = fkp.position(start.0, start.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..plays {
        let mut spoiler = RandomPolicy { rng: ChaCha8Rng::seed_from_u64(rand::Rng::gen(&mut rng)) };
        let mut dup_policy = &strategy;
        let play = simulate(&fkp.solved, start_pos, &mut dup_policy, &mut spoiler, fkp.solved.default_cap())?;
        if play.winner() != Some(Player::Duplicator) {
            return Err(not_winning(alloc::format!("translated strategy lost a play ({:?})", play.outcome)));
        }
    }
    Ok(DesharnaisToFkp { strategy, coverage, verified_plays: plays })
}

#[derive(Clone, Debug)]
pub struct FkpToDesharnais {
    pub strategy: Strategy,
    /// `Z ↦ Z̄` for every set Spoiler can name.
    pub closure_table: Vec<(Subset, Subset)>,
    /// How many times `Z ⊆ Z̄` was checked (it never fails).
    pub subset_checks: usize,
    pub verified_plays: usize,
}

/// `Z̄ = {w | ∃ v ∈ Z. (v,w) ∈ W}`.
pub fn closure_of(region: &Relation, z: Subset) -> Subset {
    members(z).fold(0, |acc, v| acc | region.row(v))
}

/// Builds a four-layer Duplicator strategy from the winning region of the
/// pair game: answer `Z̄` to a choice and the witnessing `v` to a probe.
pub fn translate_strategy_fkp_to_desharnais(
    desh: &DesharnaisGame,
    region: &Relation,
    start: (usize, usize),
    plays: usize,
    seed: u64,
) -> Result<FkpToDesharnais> {
    let c = desh.carrier();
    if !region.contains(start.0, start.1) {
        return Err(Error::NotWinning(alloc::format!(
            "Duplicator does not win the pair game from {}",
            render_pair(c, start.0, start.1)
        )));
    }
    let arena = desh.arena();
    let mut strategy = Strategy::new(Player::Duplicator);
    let mut table = BTreeMap::new();
    let mut subset_checks = 0;
    for p in 0..arena.len() {
        match desh.node(p) {
            DesharnaisNode::Choice { z, .. } => {
                let zbar = closure_of(region, z);
                subset_checks += 1;
                if z & !zbar != 0 {
                    return Err(Error::Invalid("the winning region is not reflexive".into()));
                }
                table.insert(z, zbar);
                if let Some(sets) = desh.find(DesharnaisNode::Sets { z, z2: zbar }) {
                    if arena.is_move(p, sets) {
                        strategy.choice.insert(p, sets);
                    }
                }
            }
            DesharnaisNode::Probe { z, y } => {
                if let Some(v) = members(z).find(|&v| region.contains(v, y)) {
                    strategy.choice.insert(p, desh.position(v, y));
                }
            }
            _ => {}
        }
    }
    let start_pos = desh.position(start.0, start.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..plays {
        let fallback = RandomPolicy { rng: ChaCha8Rng::seed_from_u64(rand::Rng::gen(&mut rng)) };
        let mut dup_policy = StrategyPolicy { strategy: &strategy, fallback };
        let mut spoiler = RandomPolicy { rng: ChaCha8Rng::seed_from_u64(rand::Rng::gen(&mut rng)) };
        let play = simulate(&desh.solved, start_pos, &mut dup_policy, &mut spoiler, desh.solved.default_cap())?;
        let followed = play.history.windows(2).all(|w| {
            arena.owner(w[0]) != Player::Duplicator || strategy.get(w[0]) == Some(w[1])
        });
        if !followed || play.winner() != Some(Player::Duplicator) || play.outcome == Outcome::UndeterminedAtCap {
            return Err(Error::NotWinning(alloc::format!(
                "translated strategy lost a play from {}",
                render_pair(c, start.0, start.1)
            )));
        }
    }
    Ok(FkpToDesharnais { strategy, closure_table: table.into_iter().collect(), subset_checks, verified_plays: plays })
}
