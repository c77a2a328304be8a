//! Independent reference algorithms. None of these touch the codensity
//! transformer or the game solver.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use codensity_core::fiber::{members, Metric, Relation};
use codensity_core::system::{Dfa, KripkeFrame, MarkovChain, Nfa};
use codensity_core::Q;
use num_traits::{Signed, Zero};

/// Refines a partition until each state's signature is stable; returns
/// the induced equivalence.
fn refine<S: Ord>(n: usize, mut signature: impl FnMut(&[usize], usize) -> S) -> Relation {
    let mut block = vec![0usize; n];
    loop {
        let sigs: Vec<(usize, S)> = (0..n).map(|x| (block[x], signature(&block, x))).collect();
        let mut ids: BTreeMap<&(usize, S), usize> = BTreeMap::new();
        let next: Vec<usize> = sigs
            .iter()
            .map(|s| {
                let len = ids.len();
                *ids.entry(s).or_insert(len)
            })
            .collect();
        let before = block.iter().collect::<BTreeSet<_>>().len();
        let after = ids.len();
        block = next;
        if before == after {
            return Relation::from_fn(n, |x, y| block[x] == block[y]);
        }
    }
}

/// Kripke bisimilarity by partition refinement.
pub fn kripke_bisimilarity(frame: &KripkeFrame) -> Relation {
    let n = frame.carrier().len();
    refine(n, |block, x| members(frame.successors(x)).map(|y| block[y]).collect::<BTreeSet<_>>())
}

#[derive(Clone, Copy, Debug)]
pub enum SimDirection {
    Lower,
    Upper,
    Convex,
}

/// Greatest simulation by downward iteration from the total relation.
/// `Lower`: every move of `x` is matched by `y`. `Upper`: every move of
/// `y` is matched by `x`. `Convex`: both.
pub fn greatest_simulation(frame: &KripkeFrame, dir: SimDirection) -> Relation {
    let n = frame.carrier().len();
    let mut r = Relation::total(n);
    loop {
        let forth = |r: &Relation, x: usize, y: usize| {
            members(frame.successors(x)).all(|x2| members(frame.successors(y)).any(|y2| r.contains(x2, y2)))
        };
        let back = |r: &Relation, x: usize, y: usize| {
            members(frame.successors(y)).all(|y2| members(frame.successors(x)).any(|x2| r.contains(x2, y2)))
        };
        let next = Relation::from_fn(n, |x, y| {
            r.contains(x, y)
                && match dir {
                    SimDirection::Lower => forth(&r, x, y),
                    SimDirection::Upper => back(&r, x, y),
                    SimDirection::Convex => forth(&r, x, y) && back(&r, x, y),
                }
        });
        if next == r {
            return r;
        }
        r = next;
    }
}

/// Larsen–Skou probabilistic bisimilarity: blocks split by the mass each
/// state sends into every block.
pub fn larsen_skou(chain: &MarkovChain) -> Relation {
    let n = chain.carrier().len();
    refine(n, |block, x| {
        let mut mass: BTreeMap<usize, Q> = BTreeMap::new();
        for (&y, w) in chain.row(x) {
            *mass.entry(block[y]).or_insert_with(Q::zero) += w;
        }
        mass.into_iter().filter(|(_, w)| !w.is_zero()).collect::<Vec<_>>()
    })
}

/// Pairs reachable from `(x, y)` in the product automaton.
fn product_reach(dfa: &Dfa, x: usize, y: usize) -> BTreeSet<(usize, usize)> {
    let mut seen = BTreeSet::from([(x, y)]);
    let mut queue = VecDeque::from([(x, y)]);
    while let Some((a, b)) = queue.pop_front() {
        for l in 0..dfa.alphabet().len() {
            let next = (dfa.step(a, l), dfa.step(b, l));
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// Language equivalence of DFA states by product reachability.
pub fn dfa_equivalence(dfa: &Dfa) -> Relation {
    let n = dfa.carrier().len();
    Relation::from_fn(n, |x, y| product_reach(dfa, x, y).iter().all(|&(a, b)| dfa.accepts(a) == dfa.accepts(b)))
}

/// Language inclusion `L(x) ⊆ L(y)` by product reachability.
pub fn dfa_inclusion(dfa: &Dfa) -> Relation {
    let n = dfa.carrier().len();
    Relation::from_fn(n, |x, y| product_reach(dfa, x, y).iter().all(|&(a, b)| !dfa.accepts(a) || dfa.accepts(b)))
}

/// NFA bisimilarity by labelled partition refinement.
pub fn nfa_bisimilarity(nfa: &Nfa) -> Relation {
    let n = nfa.carrier().len();
    refine(n, |block, x| {
        let per_letter: Vec<BTreeSet<usize>> = (0..nfa.alphabet().len())
            .map(|l| members(nfa.step(x, l)).map(|y| block[y]).collect())
            .collect();
        (nfa.accepts(x), per_letter)
    })
}

/// `max_f Σ f(x)(μ(x) − ν(x))` over non-expansive `f` with values on the
/// grid `{0, 1/g, …, 1}`.
pub fn kantorovich_grid(d: &Metric, mu: &[Q], nu: &[Q], g: i64) -> Q {
    let n = d.size();
    let grid: Vec<Q> = (0..=g).map(|i| Q::new(i.into(), g.into())).collect();
    let mut best = Q::zero();
    let mut f = vec![0usize; n];
    loop {
        let ok = (0..n).all(|x| (0..x).all(|y| (&grid[f[x]] - &grid[f[y]]).abs() <= *d.get(x, y)));
        if ok {
            let v: Q = (0..n).map(|x| &grid[f[x]] * (&mu[x] - &nu[x])).sum();
            if v > best {
                best = v;
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            f[i] += 1;
            if f[i] <= g as usize {
                break;
            }
            f[i] = 0;
            i += 1;
        }
    }
}

/// Hausdorff distance with infimum and supremum unrolled by hand.
pub fn hausdorff_brute(d: &Metric, s: &[usize], t: &[usize]) -> Q {
    let mut best = Q::zero();
    for (a, b) in [(s, t), (t, s)] {
        for &x in a {
            let mut inf: Option<Q> = None;
            for &y in b {
                let v = d.get(x, y).clone();
                if inf.as_ref().is_none_or(|i| v < *i) {
                    inf = Some(v);
                }
            }
            if let Some(i) = inf {
                if i > best {
                    best = i;
                }
            }
        }
    }
    best
}
