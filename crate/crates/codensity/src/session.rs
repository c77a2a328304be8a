//! Interactive plays against the engine, shared by `play` and the HTTP
//! service.

use std::time::{SystemTime, UNIX_EPOCH};

use codensity_core::fiber::{self, FiberElement, FiberKind};
use codensity_core::fixpoint::{default_tolerance, gfp, Mode};
use codensity_core::game::{
    play_step, start_play, GameRules, LegalMoves, Outcome, PlayState, Player, Policy, SolvedArena, Strategy,
};
use codensity_core::instances::{
    build_desharnais_game, Instance, MetricDuplicatorEngine, MetricGame, MetricPlayPosition, MetricPosition,
    MetricSpoilerEngine, TopologyDuplicatorEngine, TopologyGame, TopologyPosition, TopologySpoilerEngine,
};
use codensity_core::rational::{self, Q};
use codensity_core::Carrier;
use serde_json::{json, Value};

use crate::error::{AppError, Result};
use crate::format::{parse_pair, parse_state_set, Document};
use crate::report::{normalize, pair_game};

/// Why a submitted move was refused.
#[derive(Clone, Debug, PartialEq)]
pub enum MoveError {
    /// Not a legal move; carries the legal moves or oracle guidance.
    Illegal { message: String, legal: Vec<Value>, hint: Option<String> },
    /// The play is over or it is the engine's turn.
    OutOfTurn(String),
}

/// Move encoding for a game.
pub trait MoveCodec: GameRules {
    /// Reads a move that is not one of the listed moves' labels.
    fn decode(&self, at: &Self::Position, mv: &Value) -> std::result::Result<Self::Position, String>;

    fn encode(&self, p: &Self::Position) -> Value {
        Value::String(self.render(p))
    }
}

impl MoveCodec for SolvedArena {
    fn decode(&self, _at: &usize, mv: &Value) -> std::result::Result<usize, String> {
        match mv {
            Value::String(s) => self.arena.position(s).ok_or_else(|| format!("no position labelled {s}")),
            other => Err(format!("expected a position label, found {other}")),
        }
    }
}

fn rational_value(v: &Value) -> std::result::Result<Q, String> {
    match v {
        Value::String(s) => rational::parse(s).map_err(|e| e.to_string()),
        Value::Number(n) => rational::parse(&n.to_string()).map_err(|e| e.to_string()),
        other => Err(format!("expected a rational, found {other}")),
    }
}

fn state_index(c: &Carrier, name: &str) -> std::result::Result<usize, String> {
    c.index_of(name.trim()).ok_or_else(|| format!("unknown state {name:?}"))
}

/// `(x,y,ε)` or `{"x": .., "y": .., "eps": ..}`.
pub fn parse_metric_position(c: &Carrier, v: &Value) -> std::result::Result<MetricPosition, String> {
    let (x, y, eps) = match v {
        Value::String(s) => {
            let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
            let parts: Vec<&str> = inner.split(',').collect();
            let [x, y, e] = parts.as_slice() else {
                return Err(format!("expected (x,y,ε), found {s:?}"));
            };
            (state_index(c, x)?, state_index(c, y)?, rational::parse(e).map_err(|e| e.to_string())?)
        }
        Value::Object(m) => {
            let name = |k: &str| m.get(k).and_then(Value::as_str).ok_or_else(|| format!("missing field {k:?}"));
            let eps = m.get("eps").ok_or("missing field \"eps\"")?;
            (state_index(c, name("x")?)?, state_index(c, name("y")?)?, rational_value(eps)?)
        }
        other => return Err(format!("expected a metric position, found {other}")),
    };
    MetricPosition::new(x, y, eps).map_err(|e| e.to_string())
}

/// `{x:1,y:1/2}` or a JSON object mapping every state to a rational.
fn parse_function(c: &Carrier, v: &Value) -> std::result::Result<Vec<Q>, String> {
    let mut out: Vec<Option<Q>> = vec![None; c.len()];
    let mut set = |name: &str, q: Q| -> std::result::Result<(), String> {
        let i = state_index(c, name)?;
        out[i] = Some(q);
        Ok(())
    };
    match v {
        Value::Object(m) => {
            for (k, val) in m {
                set(k, rational_value(val)?)?;
            }
        }
        Value::String(s) => {
            let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
            for item in inner.split(',').filter(|i| !i.trim().is_empty()) {
                let (k, val) = item.split_once([':', '=']).ok_or_else(|| format!("expected state:value, found {item:?}"))?;
                set(k, rational::parse(val).map_err(|e| e.to_string())?)?;
            }
        }
        other => return Err(format!("expected a function on states, found {other}")),
    }
    out.into_iter()
        .enumerate()
        .map(|(i, q)| q.ok_or_else(|| format!("no value for state {}", c.name(i))))
        .collect()
}

impl MoveCodec for MetricGame {
    fn decode(&self, at: &MetricPlayPosition, mv: &Value) -> std::result::Result<MetricPlayPosition, String> {
        let c = self.carrier();
        match at {
            MetricPlayPosition::Spoiler(_) => parse_function(c, mv).map(MetricPlayPosition::Duplicator),
            MetricPlayPosition::Duplicator(_) => parse_metric_position(c, mv).map(MetricPlayPosition::Spoiler),
        }
    }
}

/// A topology from `"discrete"`, `"indiscrete"`, `{"opens": [[..]]}` or
/// `{"subbasis": [[..]]}`.
pub fn parse_topology(c: &Carrier, v: &Value) -> std::result::Result<FiberElement, String> {
    let sets = |list: &Value| -> std::result::Result<Vec<u64>, String> {
        list.as_array()
            .ok_or("expected a list of state lists")?
            .iter()
            .map(|s| parse_state_set(c, &s.to_string()).map_err(|e| e.to_string()))
            .collect()
    };
    match v {
        Value::String(s) if s == "discrete" => Ok(fiber::bottom(FiberKind::Topology, c)),
        Value::String(s) if s == "indiscrete" => Ok(fiber::top(FiberKind::Topology, c)),
        Value::Object(m) if m.contains_key("opens") => {
            FiberElement::topology(c, &sets(&m["opens"])?).map_err(|e| e.to_string())
        }
        Value::Object(m) if m.contains_key("subbasis") => {
            FiberElement::topology_generated_by(c, &sets(&m["subbasis"])?).map_err(|e| e.to_string())
        }
        other => Err(format!("expected a topology, found {other}")),
    }
}

impl MoveCodec for TopologyGame {
    fn decode(&self, at: &TopologyPosition, mv: &Value) -> std::result::Result<TopologyPosition, String> {
        let c = self.dfa.carrier();
        match at {
            TopologyPosition::Spoiler(_) => {
                let m = mv.as_object().ok_or("expected {\"entry\": label, \"k\": [states]}")?;
                let label = m.get("entry").and_then(Value::as_str).ok_or("missing field \"entry\"")?;
                let entry = self
                    .params
                    .entries()
                    .iter()
                    .position(|e| e.label == label)
                    .ok_or_else(|| format!("unknown observation {label:?}"))?;
                let k = parse_state_set(c, &m.get("k").ok_or("missing field \"k\"")?.to_string())
                    .map_err(|e| e.to_string())?;
                Ok(TopologyPosition::Duplicator { entry, k })
            }
            TopologyPosition::Duplicator { .. } => parse_topology(c, mv).map(TopologyPosition::Spoiler),
        }
    }

    fn encode(&self, p: &TopologyPosition) -> Value {
        let c = self.dfa.carrier();
        let names = |mask: u64| c.subset_names(mask);
        match p {
            TopologyPosition::Spoiler(t) => json!({
                "opens": t.open_sets().expect("topology").opens().iter().map(|&u| names(u)).collect::<Vec<_>>()
            }),
            TopologyPosition::Duplicator { entry, k } => {
                json!({ "entry": self.params.entries()[*entry].label, "k": names(*k) })
            }
        }
    }
}

/// Engine for explicit arenas: a winning strategy where one exists,
/// otherwise the least legal move.
pub struct ArenaEngine {
    strategy: Strategy,
}

impl Policy<SolvedArena> for ArenaEngine {
    fn choose(&mut self, game: &SolvedArena, history: &[usize]) -> Option<usize> {
        let p = *history.last()?;
        self.strategy.get(p).or_else(|| game.arena.moves(p).first().copied())
    }
}

/// A game, its play so far, and the engine answering for one side.
pub struct Match<G: MoveCodec> {
    game: G,
    state: PlayState<G::Position>,
    human: Player,
    engine: Box<dyn Policy<G> + Send>,
}

impl<G: MoveCodec> Match<G> {
    pub fn new(game: G, start: G::Position, human: Player, engine: Box<dyn Policy<G> + Send>, cap: usize) -> Result<Self> {
        let state = start_play(&game, start, cap)?;
        let mut m = Match { game, state, human, engine };
        m.run_engine()?;
        Ok(m)
    }

    fn run_engine(&mut self) -> Result<()> {
        while !self.state.finished() && self.game.owner(self.state.current()) != self.human {
            let mv = self.engine.choose(&self.game, &self.state.history).ok_or_else(|| {
                AppError::IllegalMove(format!("engine found no move at {}", self.game.render(self.state.current())))
            })?;
            self.state = play_step(&self.game, &self.state, mv)?;
        }
        Ok(())
    }

    fn legal(&self) -> LegalMoves<G::Position> {
        self.game.legal_moves(self.state.current())
    }
}

/// Object-safe view of a [`Match`].
pub trait Play: Send {
    fn snapshot(&self) -> Value;
    fn submit(&mut self, mv: &Value) -> std::result::Result<(), MoveError>;
    fn finished(&self) -> bool;
    fn to_move(&self) -> Player;
    fn winner(&self) -> Option<Player>;
    /// Rendered positions of the play so far.
    fn transcript(&self) -> Vec<String>;
}

impl<G: MoveCodec + Send> Play for Match<G>
where
    G::Position: Send,
{
    fn snapshot(&self) -> Value {
        let current = self.state.current();
        let mut v = json!({
            "position": self.game.encode(current),
            "positionLabel": self.game.render(current),
            "history": self.transcript(),
            "toMove": self.to_move().to_string(),
            "humanSide": self.human.to_string(),
            "finished": self.state.finished(),
            "winner": self.state.winner().map(|p| p.to_string()),
            "outcome": outcome_text(&self.state.outcome),
            "steps": self.state.steps(),
            "cap": self.state.cap,
        });
        if self.state.finished() {
            v["legalMoves"] = json!([]);
            v["legalMoveLabels"] = json!([]);
        } else {
            match self.legal() {
                LegalMoves::Listed(moves) => {
                    v["legalMoves"] = moves.iter().map(|p| self.game.encode(p)).collect();
                    v["legalMoveLabels"] = moves.iter().map(|p| Value::String(self.game.render(p))).collect();
                }
                LegalMoves::Oracle { hint, sample } => {
                    v["oracleHint"] = json!(hint);
                    v["sampleMoves"] = sample.iter().map(|p| self.game.encode(p)).collect();
                    v["sampleMoveLabels"] = sample.iter().map(|p| Value::String(self.game.render(p))).collect();
                }
            }
        }
        v
    }

    fn submit(&mut self, mv: &Value) -> std::result::Result<(), MoveError> {
        if self.state.finished() {
            return Err(MoveError::OutOfTurn("the play is finished".into()));
        }
        let current = self.state.current().clone();
        if self.game.owner(&current) != self.human {
            return Err(MoveError::OutOfTurn("it is the engine's turn".into()));
        }
        let legal = self.legal();
        let listed_match = match (&legal, mv) {
            (LegalMoves::Listed(moves), Value::String(s)) => moves.iter().find(|p| self.game.render(p) == *s).cloned(),
            _ => None,
        };
        let illegal = |message: String| {
            let (legal_list, hint) = match &legal {
                LegalMoves::Listed(moves) => (moves.iter().map(|p| self.game.encode(p)).collect(), None),
                LegalMoves::Oracle { hint, sample } => {
                    (sample.iter().map(|p| self.game.encode(p)).collect(), Some(hint.clone()))
                }
            };
            MoveError::Illegal { message, legal: legal_list, hint }
        };
        let next = match listed_match {
            Some(p) => p,
            None => self.game.decode(&current, mv).map_err(illegal)?,
        };
        if !self.game.is_legal(&current, &next) {
            return Err(illegal(format!(
                "{} is not a legal move from {}",
                self.game.render(&next),
                self.game.render(&current)
            )));
        }
        self.state = play_step(&self.game, &self.state, next).map_err(|e| illegal(e.to_string()))?;
        self.run_engine().map_err(|e| MoveError::OutOfTurn(e.to_string()))
    }

    fn finished(&self) -> bool {
        self.state.finished()
    }

    fn to_move(&self) -> Player {
        self.game.owner(self.state.current())
    }

    fn winner(&self) -> Option<Player> {
        self.state.winner()
    }

    fn transcript(&self) -> Vec<String> {
        self.state.history.iter().map(|p| self.game.render(p)).collect()
    }
}

pub fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::Ongoing => "ongoing".into(),
        Outcome::Won { winner, reason } => format!("{winner} wins: {reason}"),
        Outcome::UndeterminedAtCap => "step cap reached outside the known winning region".into(),
    }
}

fn pair_start(c: &Carrier, start: &Value) -> Result<(usize, usize)> {
    match start {
        Value::String(s) => Ok(parse_pair(c, s)?),
        Value::Array(items) if items.len() == 2 => {
            let name = |v: &Value| v.as_str().and_then(|s| c.index_of(s));
            match (name(&items[0]), name(&items[1])) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => Err(AppError::Parse(format!("start {start} does not name two states"))),
            }
        }
        other => Err(AppError::Parse(format!("expected a start pair, found {other}"))),
    }
}

fn arena_match(solved: SolvedArena, start: usize, human: Player, cap: Option<usize>) -> Result<Box<dyn Play>> {
    let (dup, spoiler) = solved.strategies();
    let strategy = match human {
        Player::Duplicator => spoiler,
        Player::Spoiler => dup,
    };
    let cap = cap.unwrap_or_else(|| solved.default_cap());
    Ok(Box::new(Match::new(solved, start, human, Box::new(ArenaEngine { strategy }), cap)?))
}

/// Builds the play for an instance on a document.
pub fn new_play(doc: &Document, instance: Instance, start: &Value, human: Player, cap: Option<usize>) -> Result<Box<dyn Play>> {
    let system = match doc {
        Document::System(s) => {
            instance.check_system(s)?;
            normalize(instance, s.clone())
        }
        Document::Metric(..) => return Err(AppError::Incompatible(format!("instance {instance} has no game on metric spaces"))),
    };
    let c = system.carrier().clone();
    let n = c.len();
    match instance {
        Instance::BisimMetric => {
            let chain = system.as_markov()?.clone();
            let params = instance.params(&system)?;
            let report = gfp(&system, &params, FiberKind::PseudoMetric, Mode::Tolerance(default_tolerance()))?;
            let game = MetricGame::new(chain, &report)?;
            let pos = parse_metric_position(&c, start).map_err(AppError::Parse)?;
            let engine: Box<dyn Policy<MetricGame> + Send> = match human {
                Player::Spoiler => Box::new(MetricDuplicatorEngine),
                Player::Duplicator => Box::new(MetricSpoilerEngine),
            };
            let cap = cap.unwrap_or(10 * n * n);
            Ok(Box::new(Match::new(game, MetricPlayPosition::Spoiler(pos), human, engine, cap)?))
        }
        Instance::DfaTopology(variant) => {
            let game = TopologyGame::new(system.as_dfa()?.clone(), variant)?;
            let t = parse_topology(&c, start).map_err(AppError::Parse)?;
            let engine: Box<dyn Policy<TopologyGame> + Send> = match human {
                Player::Spoiler => Box::new(TopologyDuplicatorEngine),
                Player::Duplicator => Box::new(TopologySpoilerEngine),
            };
            let cap = cap.unwrap_or(10 * n * n);
            Ok(Box::new(Match::new(game, TopologyPosition::Spoiler(t), human, engine, cap)?))
        }
        Instance::ProbBisimDesharnais => {
            let game = build_desharnais_game(system.as_markov()?)?;
            let (x, y) = pair_start(&c, start)?;
            let p = game.position(x, y);
            arena_match(game.solved, p, human, cap)
        }
        Instance::Hausdorff => Err(AppError::Incompatible("hausdorff has no game".into())),
        _ => {
            let game = pair_game(instance, &system)?;
            let (x, y) = pair_start(&c, start)?;
            let p = game.position(x, y);
            arena_match(game.solved, p, human, cap)
        }
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// A play hosted by the service.
pub struct SessionRecord {
    pub id: String,
    pub instance: Instance,
    pub system: Document,
    pub human: Player,
    pub play: Box<dyn Play>,
    pub created: u64,
    pub updated: u64,
}

impl SessionRecord {
    pub fn new(id: String, system: Document, instance: Instance, start: &Value, human: Player, cap: Option<usize>) -> Result<Self> {
        let play = new_play(&system, instance, start, human, cap)?;
        let t = now();
        Ok(SessionRecord { id, instance, system, human, play, created: t, updated: t })
    }

    pub fn snapshot(&self) -> Value {
        let mut v = self.play.snapshot();
        v["id"] = json!(self.id);
        v["instance"] = json!(self.instance.to_string());
        v["created"] = json!(self.created);
        v["updated"] = json!(self.updated);
        v
    }

    pub fn submit(&mut self, mv: &Value) -> std::result::Result<(), MoveError> {
        self.play.submit(mv)?;
        self.updated = now();
        Ok(())
    }
}
