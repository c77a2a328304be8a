//! Safety games between Duplicator and Spoiler.
//!
//! A finite play is lost by the player who cannot move; infinite plays are
//! won by Duplicator. Plays start at Spoiler positions.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Duplicator,
    Spoiler,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::Duplicator => Player::Spoiler,
            Player::Spoiler => Player::Duplicator,
        }
    }

    pub fn parse(text: &str) -> Result<Player> {
        match text.to_ascii_lowercase().as_str() {
            "duplicator" | "d" => Ok(Player::Duplicator),
            "spoiler" | "s" => Ok(Player::Spoiler),
            other => Err(Error::Parse(alloc::format!("unknown player {other:?}"))),
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::Duplicator => "Duplicator",
            Player::Spoiler => "Spoiler",
        })
    }
}

/// Explicit bipartite arena with labelled positions.
#[derive(Clone, Debug)]
pub struct Arena {
    owner: Vec<Player>,
    moves: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Arena {
    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn owner(&self, p: usize) -> Player {
        self.owner[p]
    }

    pub fn moves(&self, p: usize) -> &[usize] {
        &self.moves[p]
    }

    pub fn predecessors(&self, p: usize) -> &[usize] {
        &self.preds[p]
    }

    pub fn label(&self, p: usize) -> &str {
        &self.labels[p]
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn is_move(&self, from: usize, to: usize) -> bool {
        self.moves[from].binary_search(&to).is_ok()
    }

    pub fn positions_of(&self, player: Player) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&p| self.owner[p] == player)
    }

    pub fn move_count(&self) -> usize {
        self.moves.iter().map(Vec::len).sum()
    }
}

#[derive(Default)]
pub struct ArenaBuilder {
    owner: Vec<Player>,
    moves: Vec<Vec<usize>>,
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
    clash: Option<String>,
}

impl ArenaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns a position by label.
    pub fn position(&mut self, label: impl Into<String>, owner: Player) -> usize {
        let label = label.into();
        if let Some(&p) = self.index.get(&label) {
            if self.owner[p] != owner && self.clash.is_none() {
                self.clash = Some(label);
            }
            return p;
        }
        let p = self.owner.len();
        self.owner.push(owner);
        self.moves.push(Vec::new());
        self.index.insert(label.clone(), p);
        self.labels.push(label);
        p
    }

    pub fn add_move(&mut self, from: usize, to: usize) {
        self.moves[from].push(to);
    }

    pub fn build(mut self) -> Result<Arena> {
        if let Some(label) = self.clash {
            return Err(invalid!("position {label:?} registered for both players"));
        }
        if self.owner.is_empty() {
            return Err(invalid!("an arena needs at least one position"));
        }
        let n = self.owner.len();
        let mut preds = vec![Vec::new(); n];
        for (p, list) in self.moves.iter_mut().enumerate() {
            list.sort_unstable();
            list.dedup();
            for &q in list.iter() {
                if q >= n {
                    return Err(invalid!("move from {p} to unknown position {q}"));
                }
                if self.owner[p] == self.owner[q] {
                    return Err(invalid!(
                        "move {:?} → {:?} stays with one player; arenas are bipartite",
                        self.labels[p],
                        self.labels[q]
                    ));
                }
                preds[q].push(p);
            }
        }
        Ok(Arena { owner: self.owner, moves: self.moves, preds, labels: self.labels, index: self.index })
    }
}

/// Winning regions with attractor ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub duplicator_wins: Vec<bool>,
    /// For Spoiler-won positions: how many moves Spoiler needs at most to
    /// leave Duplicator stuck.
    pub rank: Vec<Option<usize>>,
}

impl Solution {
    pub fn winner(&self, p: usize) -> Player {
        if self.duplicator_wins[p] {
            Player::Duplicator
        } else {
            Player::Spoiler
        }
    }
}

/// Complement of Spoiler's attractor to Duplicator dead-ends.
pub fn solve(arena: &Arena) -> Solution {
    let n = arena.len();
    let mut rank: Vec<Option<usize>> = vec![None; n];
    let mut pending: Vec<usize> = (0..n).map(|p| arena.moves(p).len()).collect();
    let mut queue = VecDeque::new();
    for p in arena.positions_of(Player::Duplicator) {
        if arena.moves(p).is_empty() {
            rank[p] = Some(0);
            queue.push_back(p);
        }
    }
    while let Some(q) = queue.pop_front() {
        let r = rank[q].expect("queued positions are ranked");
        for &p in arena.predecessors(q) {
            if rank[p].is_some() {
                continue;
            }
            match arena.owner(p) {
                Player::Spoiler => {
                    rank[p] = Some(r + 1);
                    queue.push_back(p);
                }
                Player::Duplicator => {
                    pending[p] -= 1;
                    if pending[p] == 0 {
                        rank[p] = Some(r + 1);
                        queue.push_back(p);
                    }
                }
            }
        }
    }
    Solution { duplicator_wins: rank.iter().map(Option::is_none).collect(), rank }
}

/// Largest Duplicator invariant: the Spoiler positions Duplicator wins.
pub fn largest_invariant(arena: &Arena) -> BTreeSet<usize> {
    let sol = solve(arena);
    arena.positions_of(Player::Spoiler).filter(|&p| sol.duplicator_wins[p]).collect()
}

/// Literal invariant check: every Spoiler move from the set can be
/// answered back into the set.
pub fn verify_invariant(arena: &Arena, candidate: &BTreeSet<usize>) -> bool {
    candidate.iter().all(|&q| {
        q < arena.len()
            && arena.owner(q) == Player::Spoiler
            && arena
                .moves(q)
                .iter()
                .all(|&d| arena.moves(d).iter().any(|q2| candidate.contains(q2)))
    })
}

/// Positional strategy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    pub owner: Player,
    pub choice: BTreeMap<usize, usize>,
}

impl Strategy {
    pub fn new(owner: Player) -> Self {
        Strategy { owner, choice: BTreeMap::new() }
    }

    pub fn get(&self, p: usize) -> Option<usize> {
        self.choice.get(&p).copied()
    }

    /// Every choice is a move of the owner.
    pub fn is_consistent(&self, arena: &Arena) -> bool {
        self.choice.iter().all(|(&p, &q)| p < arena.len() && arena.owner(p) == self.owner && arena.is_move(p, q))
    }
}

/// Duplicator keeps the play inside her region with the least-indexed
/// move; Spoiler descends attractor ranks with the least-indexed move.
pub fn extract_strategies(arena: &Arena, solution: &Solution) -> (Strategy, Strategy) {
    let mut dup = Strategy::new(Player::Duplicator);
    let mut sp = Strategy::new(Player::Spoiler);
    for p in 0..arena.len() {
        match arena.owner(p) {
            Player::Duplicator if solution.duplicator_wins[p] => {
                if let Some(&q) = arena.moves(p).iter().find(|&&q| solution.duplicator_wins[q]) {
                    dup.choice.insert(p, q);
                }
            }
            Player::Spoiler if !solution.duplicator_wins[p] => {
                let r = solution.rank[p].expect("Spoiler-won positions are ranked");
                if let Some(&q) = arena.moves(p).iter().find(|&&q| solution.rank[q].is_some_and(|rq| rq < r)) {
                    sp.choice.insert(p, q);
                }
            }
            _ => {}
        }
    }
    (dup, sp)
}

/// Moves available at a position, or guidance when they are not listable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LegalMoves<P> {
    Listed(Vec<P>),
    Oracle { hint: String, sample: Vec<P> },
}

impl<P> LegalMoves<P> {
    pub fn sample(&self) -> &[P] {
        match self {
            LegalMoves::Listed(v) => v,
            LegalMoves::Oracle { sample, .. } => sample,
        }
    }
}

/// Rules of a game, explicit or oracle-backed.
pub trait GameRules {
    type Position: Clone + PartialEq + fmt::Debug;

    fn owner(&self, p: &Self::Position) -> Player;
    fn is_legal(&self, from: &Self::Position, to: &Self::Position) -> bool;
    fn legal_moves(&self, p: &Self::Position) -> LegalMoves<Self::Position>;
    /// Whether the owner of `p` has at least one move.
    fn has_moves(&self, p: &Self::Position) -> bool;
    /// Whether Duplicator wins from `p`, when known.
    fn duplicator_wins(&self, p: &Self::Position) -> Option<bool>;
    fn render(&self, p: &Self::Position) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndReason {
    /// The given player had no legal move.
    Stuck(Player),
    /// The step cap was reached at a Duplicator-winning position.
    CapInWinningRegion,
}

impl fmt::Display for EndReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndReason::Stuck(p) => write!(f, "{p} has no legal move"),
            EndReason::CapInWinningRegion => f.write_str("step cap reached inside Duplicator's winning region"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ongoing,
    Won { winner: Player, reason: EndReason },
    /// Step cap reached outside the known winning region.
    UndeterminedAtCap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlayState<P> {
    pub history: Vec<P>,
    pub outcome: Outcome,
    pub cap: usize,
}

impl<P> PlayState<P> {
    pub fn current(&self) -> &P {
        self.history.last().expect("plays are nonempty")
    }

    pub fn steps(&self) -> usize {
        self.history.len() - 1
    }

    pub fn finished(&self) -> bool {
        self.outcome != Outcome::Ongoing
    }

    pub fn winner(&self) -> Option<Player> {
        match self.outcome {
            Outcome::Won { winner, .. } => Some(winner),
            _ => None,
        }
    }
}

fn settle<G: GameRules>(game: &G, state: &mut PlayState<G::Position>) {
    let p = state.current().clone();
    if !game.has_moves(&p) {
        let stuck = game.owner(&p);
        state.outcome = Outcome::Won { winner: stuck.opponent(), reason: EndReason::Stuck(stuck) };
    } else if state.steps() >= state.cap {
        state.outcome = match game.duplicator_wins(&p) {
            Some(true) => Outcome::Won { winner: Player::Duplicator, reason: EndReason::CapInWinningRegion },
            _ => Outcome::UndeterminedAtCap,
        };
    }
}

/// Starts a play at a Spoiler position.
pub fn start_play<G: GameRules>(game: &G, start: G::Position, cap: usize) -> Result<PlayState<G::Position>> {
    if game.owner(&start) != Player::Spoiler {
        return Err(invalid!("plays start at Spoiler positions; {} is Duplicator's", game.render(&start)));
    }
    let mut state = PlayState { history: vec![start], outcome: Outcome::Ongoing, cap };
    settle(game, &mut state);
    Ok(state)
}

/// Applies one move by the owner of the current position.
pub fn play_step<G: GameRules>(game: &G, state: &PlayState<G::Position>, mv: G::Position) -> Result<PlayState<G::Position>> {
    if state.finished() {
        return Err(Error::IllegalMove("the play is already finished".into()));
    }
    let current = state.current();
    if !game.is_legal(current, &mv) {
        let legal = game.legal_moves(current);
        let shown: Vec<String> = legal.sample().iter().take(32).map(|p| game.render(p)).collect();
        let extra = match &legal {
            LegalMoves::Oracle { hint, .. } => alloc::format!("; {hint}"),
            LegalMoves::Listed(v) if v.len() > shown.len() => alloc::format!(" and {} more", v.len() - shown.len()),
            LegalMoves::Listed(_) => String::new(),
        };
        return Err(Error::IllegalMove(alloc::format!(
            "{} is not a legal move from {}; legal: [{}]{extra}",
            game.render(&mv),
            game.render(current),
            shown.join(", ")
        )));
    }
    let mut next = state.clone();
    next.history.push(mv);
    settle(game, &mut next);
    Ok(next)
}

/// Chooses moves for one player given the play so far.
pub trait Policy<G: GameRules> {
    fn choose(&mut self, game: &G, history: &[G::Position]) -> Option<G::Position>;
}

/// Uniformly random legal moves (from the listed moves or the oracle sample).
pub struct RandomPolicy<R> {
    pub rng: R,
}

impl<G: GameRules, R: Rng> Policy<G> for RandomPolicy<R> {
    fn choose(&mut self, game: &G, history: &[G::Position]) -> Option<G::Position> {
        let moves = game.legal_moves(history.last()?);
        let sample = moves.sample();
        if sample.is_empty() {
            return None;
        }
        Some(sample[self.rng.gen_range(0..sample.len())].clone())
    }
}

/// Plays until the game finishes or the cap is hit.
pub fn simulate<G: GameRules>(
    game: &G,
    start: G::Position,
    duplicator: &mut dyn Policy<G>,
    spoiler: &mut dyn Policy<G>,
    cap: usize,
) -> Result<PlayState<G::Position>> {
    let mut state = start_play(game, start, cap)?;
    while !state.finished() {
        let mover = game.owner(state.current());
        let choice = match mover {
            Player::Duplicator => duplicator.choose(game, &state.history),
            Player::Spoiler => spoiler.choose(game, &state.history),
        };
        let mv = choice.ok_or_else(|| {
            Error::IllegalMove(alloc::format!("{mover} policy produced no move at {}", game.render(state.current())))
        })?;
        state = play_step(game, &state, mv)?;
    }
    Ok(state)
}

/// An explicit arena together with its solution.
#[derive(Clone, Debug)]
pub struct SolvedArena {
    pub arena: Arena,
    pub solution: Solution,
}

impl SolvedArena {
    pub fn new(arena: Arena) -> Self {
        let solution = solve(&arena);
        SolvedArena { arena, solution }
    }

    pub fn strategies(&self) -> (Strategy, Strategy) {
        extract_strategies(&self.arena, &self.solution)
    }

    pub fn invariant(&self) -> BTreeSet<usize> {
        self.arena.positions_of(Player::Spoiler).filter(|&p| self.solution.duplicator_wins[p]).collect()
    }

    /// Default step cap `10·|Q|`.
    pub fn default_cap(&self) -> usize {
        10 * self.arena.len()
    }
}

impl GameRules for SolvedArena {
    type Position = usize;

    fn owner(&self, p: &usize) -> Player {
        self.arena.owner(*p)
    }

    fn is_legal(&self, from: &usize, to: &usize) -> bool {
        *from < self.arena.len() && self.arena.is_move(*from, *to)
    }

    fn legal_moves(&self, p: &usize) -> LegalMoves<usize> {
        LegalMoves::Listed(self.arena.moves(*p).to_vec())
    }

    fn has_moves(&self, p: &usize) -> bool {
        !self.arena.moves(*p).is_empty()
    }

    fn duplicator_wins(&self, p: &usize) -> Option<bool> {
        Some(self.solution.duplicator_wins[*p])
    }

    fn render(&self, p: &usize) -> String {
        self.arena.labels.get(*p).cloned().unwrap_or_else(|| p.to_string())
    }
}

/// Follows a positional strategy; delegates elsewhere.
pub struct StrategyPolicy<'a, F> {
    pub strategy: &'a Strategy,
    pub fallback: F,
}

impl<F: Policy<SolvedArena>> Policy<SolvedArena> for StrategyPolicy<'_, F> {
    fn choose(&mut self, game: &SolvedArena, history: &[usize]) -> Option<usize> {
        match self.strategy.get(*history.last()?) {
            Some(q) => Some(q),
            None => self.fallback.choose(game, history),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_layer(spoiler_to_dead_end: bool) -> Arena {
        let mut b = ArenaBuilder::new();
        let s = b.position("s", Player::Spoiler);
        if spoiler_to_dead_end {
            let d = b.position("d", Player::Duplicator);
            b.add_move(s, d);
        }
        b.build().unwrap()
    }

    #[test]
    fn dead_end_rules() {
        let a = two_layer(false);
        assert_eq!(largest_invariant(&a), BTreeSet::from([0]));
        let a = two_layer(true);
        assert!(largest_invariant(&a).is_empty());
        assert!(verify_invariant(&a, &BTreeSet::new()));
        assert!(!verify_invariant(&a, &BTreeSet::from([0])));
    }

    #[test]
    fn builder_rejects_same_owner_move() {
        let mut b = ArenaBuilder::new();
        let s = b.position("s", Player::Spoiler);
        let t = b.position("t", Player::Spoiler);
        b.add_move(s, t);
        assert!(b.build().is_err());
        assert!(ArenaBuilder::new().build().is_err());
    }

    /// s0 → d0 → {s0, s1}; s1 → d1 (dead end).
    fn cycle_arena() -> Arena {
        let mut b = ArenaBuilder::new();
        let s0 = b.position("s0", Player::Spoiler);
        let s1 = b.position("s1", Player::Spoiler);
        let d0 = b.position("d0", Player::Duplicator);
        let d1 = b.position("d1", Player::Duplicator);
        b.add_move(s0, d0);
        b.add_move(d0, s0);
        b.add_move(d0, s1);
        b.add_move(s1, d1);
        b.build().unwrap()
    }

    #[test]
    fn strategies_and_play() {
        let solved = SolvedArena::new(cycle_arena());
        assert_eq!(solved.invariant(), BTreeSet::from([0]));
        let (dup, sp) = solved.strategies();
        assert_eq!(dup.get(2), Some(0));
        assert_eq!(sp.get(1), Some(3));
        assert!(dup.is_consistent(&solved.arena) && sp.is_consistent(&solved.arena));

        let mut d = StrategyPolicy { strategy: &dup, fallback: RandomPolicy { rng: ChaCha8Rng::seed_from_u64(1) } };
        let mut s = RandomPolicy { rng: ChaCha8Rng::seed_from_u64(2) };
        let play = simulate(&solved, 0, &mut d, &mut s, 20).unwrap();
        assert_eq!(play.outcome, Outcome::Won { winner: Player::Duplicator, reason: EndReason::CapInWinningRegion });

        let play = start_play(&solved, 1, 20).unwrap();
        let err = play_step(&solved, &play, 2).unwrap_err();
        assert!(matches!(err, Error::IllegalMove(ref m) if m.contains("d1")));
        let play = play_step(&solved, &play, 3).unwrap();
        assert_eq!(play.winner(), Some(Player::Spoiler));
    }

    #[test]
    fn stuck_start_is_duplicator_win() {
        let solved = SolvedArena::new(two_layer(false));
        let play = start_play(&solved, 0, 10).unwrap();
        assert_eq!(play.winner(), Some(Player::Duplicator));
        assert!(play_step(&solved, &play, 0).is_err());
    }

    #[test]
    fn plays_must_start_at_spoiler_positions() {
        let solved = SolvedArena::new(cycle_arena());
        assert!(start_play(&solved, 2, 10).is_err());
    }
}
