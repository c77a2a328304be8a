//! The bisimulation metric game, played through oracles since `ε` and
//! Spoiler's functions range over the unit interval.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fiber::{Carrier, Metric};
use crate::fixpoint::FixpointReport;
use crate::game::{GameRules, LegalMoves, Player, Policy};
use crate::lifting;
use crate::rational::{self, Q};
use crate::system::MarkovChain;

/// Spoiler position `(x, y, ε)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MetricPosition {
    pub x: usize,
    pub y: usize,
    pub eps: Q,
}

impl MetricPosition {
    pub fn new(x: usize, y: usize, eps: Q) -> Result<Self> {
        if !rational::in_unit_interval(&eps) {
            return Err(Error::Invalid(alloc::format!("ε = {} lies outside [0,1]", rational::render(&eps))));
        }
        Ok(MetricPosition { x, y, eps })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetricVerdict {
    Duplicator,
    Spoiler,
    /// `ε` is within the iteration tolerance of `d(x,y)`.
    Uncertain,
}

/// Duplicator wins at `(x,y,ε)` iff `d(x,y) ≤ ε`; within `band` of the
/// boundary the verdict is uncertain.
pub fn classify_metric_position(pos: &MetricPosition, d: &Metric, band: &Q) -> MetricVerdict {
    let dist = d.get(pos.x, pos.y);
    if band.is_positive() && rational::abs_diff(dist, &pos.eps) <= *band {
        MetricVerdict::Uncertain
    } else if *dist <= pos.eps {
        MetricVerdict::Duplicator
    } else {
        MetricVerdict::Spoiler
    }
}

/// Uncertainty band of a fixed-point run: zero once the iteration became
/// stationary, the tolerance otherwise.
pub fn uncertainty_band(report: &FixpointReport) -> Q {
    let stationary = report.residual.is_zero() && report.converged;
    match (&report.mode, stationary) {
        (_, true) => Q::zero(),
        (crate::fixpoint::Mode::Tolerance(eps), false) => eps.clone(),
        (crate::fixpoint::Mode::Exact, false) => report.residual.clone(),
    }
}

/// Ranked Spoiler move: with `n` least such that the `n`-th Kleene iterate
/// separates `x` and `y` by more than `ε`, the Kantorovich optimizer for the
/// `(n-1)`-th iterate.
pub fn metric_spoiler_move(chain: &MarkovChain, pos: &MetricPosition, history: &[Metric]) -> Result<Vec<Q>> {
    let n = history
        .iter()
        .position(|d| *d.get(pos.x, pos.y) > pos.eps)
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::NotWinning(alloc::format!(
                "Spoiler has no winning move at ({},{},{})",
                chain.carrier().name(pos.x),
                chain.carrier().name(pos.y),
                rational::render(&pos.eps)
            ))
        })?;
    let (value, f) = lifting::kantorovich_optimizer(&history[n - 1], &chain.distribution(pos.x), &chain.distribution(pos.y))?;
    debug_assert!(value > pos.eps);
    Ok(f)
}

/// Duplicator's answer to `f`: the pair maximizing `|f(x')−f(y')| − d(x',y')`
/// (least pair on ties) with `ε'` the midpoint of `[d(x',y'), |f(x')−f(y')|]`.
/// When `f` is non-expansive the pair with the largest gap and `ε'` half
/// of it is returned; `None` when `f` is constant.
pub fn metric_duplicator_move(f: &[Q], d: &Metric) -> Option<MetricPosition> {
    let n = f.len();
    let mut best: Option<(Q, usize, usize)> = None;
    let mut widest: Option<(Q, usize, usize)> = None;
    for x in 0..n {
        for y in x + 1..n {
            let gap = rational::abs_diff(&f[x], &f[y]);
            let slack = &gap - d.get(x, y);
            if slack.is_positive() && best.as_ref().is_none_or(|(s, _, _)| slack > *s) {
                best = Some((slack, x, y));
            }
            if gap.is_positive() && widest.as_ref().is_none_or(|(g, _, _)| gap > *g) {
                widest = Some((gap, x, y));
            }
        }
    }
    let two = Q::from_integer(2.into());
    if let Some((_, x, y)) = best {
        let gap = rational::abs_diff(&f[x], &f[y]);
        return Some(MetricPosition { x, y, eps: (d.get(x, y) + gap) / two });
    }
    widest.map(|(gap, x, y)| MetricPosition { x, y, eps: gap / two })
}

/// Largest expectation gap over all `f: X → [0,1]`, attained by an
/// indicator; Spoiler can move at `(x,y,ε)` iff it exceeds `ε`.
pub fn max_gap(chain: &MarkovChain, x: usize, y: usize) -> (Q, Vec<Q>) {
    let mu = chain.distribution(x);
    let nu = chain.distribution(y);
    let mut up = Q::zero();
    let mut down = Q::zero();
    for (m, v) in mu.iter().zip(&nu) {
        if m > v {
            up += m - v;
        } else {
            down += v - m;
        }
    }
    let indicator = |pick: bool| mu.iter().zip(&nu).map(|(m, v)| if (m > v) == pick && m != v { Q::one() } else { Q::zero() }).collect();
    if up >= down {
        (up, indicator(true))
    } else {
        (down, indicator(false))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MetricPlayPosition {
    Spoiler(MetricPosition),
    Duplicator(Vec<Q>),
}

/// Oracle-backed metric game over a solved chain.
#[derive(Clone, Debug)]
pub struct MetricGame {
    pub chain: MarkovChain,
    pub distance: Metric,
    pub band: Q,
    /// Kleene iterates `d_0 = 0, d_1, …`.
    pub history: Vec<Metric>,
}

impl MetricGame {
    pub fn new(chain: MarkovChain, report: &FixpointReport) -> Result<Self> {
        let distance = report
            .result
            .metric()
            .ok_or_else(|| Error::Incompatible("the metric game needs a pseudometric fixed point".into()))?
            .clone();
        if distance.size() != chain.carrier().len() {
            return Err(Error::CarrierMismatch("fixed point and chain differ in size".into()));
        }
        let history = report.history.iter().filter_map(|p| p.metric().cloned()).collect();
        Ok(MetricGame { band: uncertainty_band(report), chain, distance, history })
    }

    pub fn carrier(&self) -> &Carrier {
        self.chain.carrier()
    }

    pub fn classify(&self, pos: &MetricPosition) -> MetricVerdict {
        classify_metric_position(pos, &self.distance, &self.band)
    }

    fn gap(&self, pos: &MetricPosition, f: &[Q]) -> Q {
        rational::abs_diff(&self.chain.expectation(pos.x, f), &self.chain.expectation(pos.y, f))
    }

    fn spoiler_sample(&self, pos: &MetricPosition) -> Vec<Q> {
        if let Ok(f) = metric_spoiler_move(&self.chain, pos, &self.history) {
            return f;
        }
        if let Ok((value, f)) = lifting::kantorovich_optimizer(
            &self.distance,
            &self.chain.distribution(pos.x),
            &self.chain.distribution(pos.y),
        ) {
            if value > pos.eps {
                return f;
            }
        }
        max_gap(&self.chain, pos.x, pos.y).1
    }

    pub fn render_function(&self, f: &[Q]) -> String {
        let parts: Vec<String> = f
            .iter()
            .enumerate()
            .map(|(i, v)| alloc::format!("{}:{}", self.carrier().name(i), rational::render(v)))
            .collect();
        alloc::format!("{{{}}}", parts.join(","))
    }
}

impl fmt::Display for MetricPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, rational::render(&self.eps))
    }
}

impl GameRules for MetricGame {
    type Position = MetricPlayPosition;

    fn owner(&self, p: &MetricPlayPosition) -> Player {
        match p {
            MetricPlayPosition::Spoiler(_) => Player::Spoiler,
            MetricPlayPosition::Duplicator(_) => Player::Duplicator,
        }
    }

    fn is_legal(&self, from: &MetricPlayPosition, to: &MetricPlayPosition) -> bool {
        let n = self.carrier().len();
        match (from, to) {
            (MetricPlayPosition::Spoiler(pos), MetricPlayPosition::Duplicator(f)) => {
                f.len() == n && f.iter().all(rational::in_unit_interval) && self.gap(pos, f) > pos.eps
            }
            (MetricPlayPosition::Duplicator(f), MetricPlayPosition::Spoiler(pos)) => {
                pos.x < n
                    && pos.y < n
                    && rational::in_unit_interval(&pos.eps)
                    && rational::abs_diff(&f[pos.x], &f[pos.y]) > pos.eps
            }
            _ => false,
        }
    }

    fn legal_moves(&self, p: &MetricPlayPosition) -> LegalMoves<MetricPlayPosition> {
        match p {
            MetricPlayPosition::Spoiler(pos) => {
                let mut sample = Vec::new();
                if self.has_moves(p) {
                    sample.push(MetricPlayPosition::Duplicator(self.spoiler_sample(pos)));
                }
                LegalMoves::Oracle {
                    hint: alloc::format!(
                        "any f: X → [0,1] with |E_c(x) f − E_c(y) f| > {}",
                        rational::render(&pos.eps)
                    ),
                    sample,
                }
            }
            MetricPlayPosition::Duplicator(f) => LegalMoves::Oracle {
                hint: "any (x', y', ε') with |f(x') − f(y')| > ε'".into(),
                sample: metric_duplicator_move(f, &self.distance).map(MetricPlayPosition::Spoiler).into_iter().collect(),
            },
        }
    }

    fn has_moves(&self, p: &MetricPlayPosition) -> bool {
        match p {
            MetricPlayPosition::Spoiler(pos) => max_gap(&self.chain, pos.x, pos.y).0 > pos.eps,
            MetricPlayPosition::Duplicator(f) => f.iter().any(|v| *v != f[0]),
        }
    }

    fn duplicator_wins(&self, p: &MetricPlayPosition) -> Option<bool> {
        match p {
            MetricPlayPosition::Spoiler(pos) => match self.classify(pos) {
                MetricVerdict::Duplicator => Some(true),
                MetricVerdict::Spoiler => Some(false),
                MetricVerdict::Uncertain => None,
            },
            MetricPlayPosition::Duplicator(f) => {
                let n = f.len();
                Some((0..n).any(|x| {
                    (0..n).any(|y| rational::abs_diff(&f[x], &f[y]) > *self.distance.get(x, y))
                }))
            }
        }
    }

    fn render(&self, p: &MetricPlayPosition) -> String {
        match p {
            MetricPlayPosition::Spoiler(pos) => alloc::format!(
                "({},{},{})",
                self.carrier().name(pos.x),
                self.carrier().name(pos.y),
                rational::render(&pos.eps)
            ),
            MetricPlayPosition::Duplicator(f) => self.render_function(f),
        }
    }
}

/// Spoiler engine: ranked moves where available, otherwise the largest
/// legal expectation gap.
pub struct MetricSpoilerEngine;

impl Policy<MetricGame> for MetricSpoilerEngine {
    fn choose(&mut self, game: &MetricGame, history: &[MetricPlayPosition]) -> Option<MetricPlayPosition> {
        match history.last()? {
            p @ MetricPlayPosition::Spoiler(pos) if game.has_moves(p) => {
                Some(MetricPlayPosition::Duplicator(game.spoiler_sample(pos)))
            }
            _ => None,
        }
    }
}

/// Duplicator engine: [`metric_duplicator_move`].
pub struct MetricDuplicatorEngine;

impl Policy<MetricGame> for MetricDuplicatorEngine {
    fn choose(&mut self, game: &MetricGame, history: &[MetricPlayPosition]) -> Option<MetricPlayPosition> {
        match history.last()? {
            MetricPlayPosition::Duplicator(f) => metric_duplicator_move(f, &game.distance).map(MetricPlayPosition::Spoiler),
            _ => None,
        }
    }
}
