//! Finite coalgebras and the shipped fixtures.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::fiber::{members, Carrier, Metric, Subset};
use crate::rational::{q, Q};

/// `c: X → P X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeFrame {
    carrier: Carrier,
    succ: Vec<Subset>,
}

impl KripkeFrame {
    pub fn new(carrier: Carrier, succ: Vec<Subset>) -> Result<Self> {
        if succ.len() != carrier.len() {
            return Err(invalid!("successor table has {} rows for {} states", succ.len(), carrier.len()));
        }
        let full = carrier.full();
        for (x, s) in succ.iter().enumerate() {
            if s & !full != 0 {
                return Err(invalid!("succ.{}: successor outside the state set", carrier.name(x)));
            }
        }
        Ok(KripkeFrame { carrier, succ })
    }

    pub fn from_lists(carrier: Carrier, succ: &[Vec<usize>]) -> Result<Self> {
        let n = carrier.len();
        let mut masks = Vec::with_capacity(succ.len());
        for row in succ {
            let mut mask = 0;
            for &y in row {
                if y >= n {
                    return Err(invalid!("successor index {y} outside the state set"));
                }
                mask |= 1u64 << y;
            }
            masks.push(mask);
        }
        KripkeFrame::new(carrier, masks)
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn successors(&self, x: usize) -> Subset {
        self.succ[x]
    }
}

/// `c: X → D≤1 X`, a subprobability kernel with exact weights.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkovChain {
    carrier: Carrier,
    kernel: Vec<BTreeMap<usize, Q>>,
}

impl MarkovChain {
    /// Zero weights are dropped; negative weights and rows of total mass
    /// above one are rejected.
    pub fn new(carrier: Carrier, kernel: Vec<BTreeMap<usize, Q>>) -> Result<Self> {
        if kernel.len() != carrier.len() {
            return Err(invalid!("kernel has {} rows for {} states", kernel.len(), carrier.len()));
        }
        let mut clean = Vec::with_capacity(kernel.len());
        for (x, row) in kernel.into_iter().enumerate() {
            let mut total = Q::zero();
            let mut kept = BTreeMap::new();
            for (y, w) in row {
                if y >= carrier.len() {
                    return Err(invalid!("kernel.{}: target index {y} outside the state set", carrier.name(x)));
                }
                if w.is_negative() {
                    return Err(invalid!("kernel.{}.{}: negative weight", carrier.name(x), carrier.name(y)));
                }
                total += &w;
                if !w.is_zero() {
                    kept.insert(y, w);
                }
            }
            if total > Q::one() {
                return Err(invalid!("kernel.{}: mass exceeds 1", carrier.name(x)));
            }
            clean.push(kept);
        }
        Ok(MarkovChain { carrier, kernel: clean })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn row(&self, x: usize) -> &BTreeMap<usize, Q> {
        &self.kernel[x]
    }

    pub fn weight(&self, x: usize, y: usize) -> Q {
        self.kernel[x].get(&y).cloned().unwrap_or_else(Q::zero)
    }

    /// `c(x)(Z)`.
    pub fn mass(&self, x: usize, set: Subset) -> Q {
        self.kernel[x]
            .iter()
            .filter(|(&y, _)| set & (1u64 << y) != 0)
            .fold(Q::zero(), |acc, (_, w)| acc + w)
    }

    pub fn total_mass(&self, x: usize) -> Q {
        self.kernel[x].values().fold(Q::zero(), |acc, w| acc + w)
    }

    /// Dense row `c(x)` as a vector indexed by state.
    pub fn distribution(&self, x: usize) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.carrier.len()];
        for (&y, w) in &self.kernel[x] {
            out[y] = w.clone();
        }
        out
    }

    /// `E_{c(x)} f`.
    pub fn expectation(&self, x: usize, f: &[Q]) -> Q {
        self.kernel[x].iter().fold(Q::zero(), |acc, (&y, w)| acc + w * &f[y])
    }
}

/// `c: X → 2 × X^Σ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dfa {
    carrier: Carrier,
    alphabet: Vec<String>,
    accept: Subset,
    delta: Vec<Vec<usize>>,
}

impl Dfa {
    pub fn new(carrier: Carrier, alphabet: Vec<String>, accept: Subset, delta: Vec<Vec<usize>>) -> Result<Self> {
        check_alphabet(&alphabet)?;
        check_accept(&carrier, accept)?;
        if delta.len() != carrier.len() {
            return Err(invalid!("delta not total: {} rows for {} states", delta.len(), carrier.len()));
        }
        for (x, row) in delta.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(invalid!("delta.{}: delta not total", carrier.name(x)));
            }
            if let Some(&bad) = row.iter().find(|&&y| y >= carrier.len()) {
                return Err(invalid!("delta.{}: target index {bad} outside the state set", carrier.name(x)));
            }
        }
        Ok(Dfa { carrier, alphabet, accept, delta })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn accept(&self) -> Subset {
        self.accept
    }

    pub fn accepts(&self, x: usize) -> bool {
        self.accept & (1u64 << x) != 0
    }

    pub fn step(&self, x: usize, letter: usize) -> usize {
        self.delta[x][letter]
    }

    pub fn run(&self, x: usize, word: &[usize]) -> usize {
        word.iter().fold(x, |s, &a| self.step(s, a))
    }

    /// The same automaton viewed as an NFA with singleton images.
    pub fn to_nfa(&self) -> Nfa {
        let delta = self
            .delta
            .iter()
            .map(|row| row.iter().map(|&y| 1u64 << y).collect())
            .collect();
        Nfa {
            carrier: self.carrier.clone(),
            alphabet: self.alphabet.clone(),
            accept: self.accept,
            delta,
        }
    }
}

/// `c: X → 2 × (P X)^Σ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nfa {
    carrier: Carrier,
    alphabet: Vec<String>,
    accept: Subset,
    delta: Vec<Vec<Subset>>,
}

impl Nfa {
    pub fn new(carrier: Carrier, alphabet: Vec<String>, accept: Subset, delta: Vec<Vec<Subset>>) -> Result<Self> {
        check_alphabet(&alphabet)?;
        check_accept(&carrier, accept)?;
        if delta.len() != carrier.len() {
            return Err(invalid!("delta has {} rows for {} states", delta.len(), carrier.len()));
        }
        let full = carrier.full();
        for (x, row) in delta.iter().enumerate() {
            if row.len() != alphabet.len() {
                return Err(invalid!("delta.{}: one entry per symbol required", carrier.name(x)));
            }
            if row.iter().any(|s| s & !full != 0) {
                return Err(invalid!("delta.{}: target outside the state set", carrier.name(x)));
            }
        }
        Ok(Nfa { carrier, alphabet, accept, delta })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn accept(&self) -> Subset {
        self.accept
    }

    pub fn accepts(&self, x: usize) -> bool {
        self.accept & (1u64 << x) != 0
    }

    pub fn step(&self, x: usize, letter: usize) -> Subset {
        self.delta[x][letter]
    }
}

fn check_alphabet(alphabet: &[String]) -> Result<()> {
    for (i, a) in alphabet.iter().enumerate() {
        if a.is_empty() {
            return Err(invalid!("alphabet symbols must be nonempty"));
        }
        if alphabet[..i].contains(a) {
            return Err(invalid!("duplicate alphabet symbol {a:?}"));
        }
    }
    Ok(())
}

fn check_accept(carrier: &Carrier, accept: Subset) -> Result<()> {
    if accept & !carrier.full() != 0 {
        return Err(invalid!("accepting state outside the state set"));
    }
    Ok(())
}

/// Shape of the coalgebra functor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Powerset,
    Subdistribution,
    Deterministic,
    Nondeterministic,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FiniteSystem {
    Kripke(KripkeFrame),
    Markov(MarkovChain),
    Dfa(Dfa),
    Nfa(Nfa),
}

impl FiniteSystem {
    pub fn carrier(&self) -> &Carrier {
        match self {
            FiniteSystem::Kripke(s) => s.carrier(),
            FiniteSystem::Markov(s) => s.carrier(),
            FiniteSystem::Dfa(s) => s.carrier(),
            FiniteSystem::Nfa(s) => s.carrier(),
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            FiniteSystem::Kripke(_) => Shape::Powerset,
            FiniteSystem::Markov(_) => Shape::Subdistribution,
            FiniteSystem::Dfa(_) => Shape::Deterministic,
            FiniteSystem::Nfa(_) => Shape::Nondeterministic,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            FiniteSystem::Kripke(_) => "kripke",
            FiniteSystem::Markov(_) => "markov",
            FiniteSystem::Dfa(_) => "dfa",
            FiniteSystem::Nfa(_) => "nfa",
        }
    }

    pub fn alphabet(&self) -> &[String] {
        match self {
            FiniteSystem::Dfa(d) => d.alphabet(),
            FiniteSystem::Nfa(n) => n.alphabet(),
            _ => &[],
        }
    }

    pub fn as_kripke(&self) -> Result<&KripkeFrame> {
        match self {
            FiniteSystem::Kripke(k) => Ok(k),
            other => Err(Error::Incompatible(alloc::format!("expected a kripke frame, got {}", other.type_name()))),
        }
    }

    pub fn as_markov(&self) -> Result<&MarkovChain> {
        match self {
            FiniteSystem::Markov(m) => Ok(m),
            other => Err(Error::Incompatible(alloc::format!("expected a markov chain, got {}", other.type_name()))),
        }
    }

    pub fn as_dfa(&self) -> Result<&Dfa> {
        match self {
            FiniteSystem::Dfa(d) => Ok(d),
            other => Err(Error::Incompatible(alloc::format!("expected a dfa, got {}", other.type_name()))),
        }
    }

    pub fn as_nfa(&self) -> Result<&Nfa> {
        match self {
            FiniteSystem::Nfa(n) => Ok(n),
            other => Err(Error::Incompatible(alloc::format!("expected an nfa, got {}", other.type_name()))),
        }
    }
}

impl From<KripkeFrame> for FiniteSystem {
    fn from(s: KripkeFrame) -> Self {
        FiniteSystem::Kripke(s)
    }
}

impl From<MarkovChain> for FiniteSystem {
    fn from(s: MarkovChain) -> Self {
        FiniteSystem::Markov(s)
    }
}

impl From<Dfa> for FiniteSystem {
    fn from(s: Dfa) -> Self {
        FiniteSystem::Dfa(s)
    }
}

impl From<Nfa> for FiniteSystem {
    fn from(s: Nfa) -> Self {
        FiniteSystem::Nfa(s)
    }
}

/// Named fixtures used by tests, the CLI and the HTTP service.
pub mod fixtures {
    use super::*;

    pub const NAMES: [&str; 6] = ["K_ONE", "K_DEAD", "M_SPLIT", "M_TWIN", "D_LINE", "H_PAIR"];

    fn carrier(names: &[&str]) -> Carrier {
        Carrier::new(names.iter().copied()).expect("fixture carrier")
    }

    /// `a → b → c ⟲`: every state can move forever, all bisimilar.
    pub fn k_one() -> KripkeFrame {
        KripkeFrame::from_lists(carrier(&["a", "b", "c"]), &[vec![1], vec![2], vec![2]]).unwrap()
    }

    /// `p ⟲`, `q` deadlocked.
    pub fn k_dead() -> KripkeFrame {
        KripkeFrame::from_lists(carrier(&["p", "q"]), &[vec![0], vec![]]).unwrap()
    }

    /// `x ↦ δ_z`, `y ↦ ½δ_z`, `z` stuck.
    pub fn m_split() -> MarkovChain {
        let row = |w: Q| BTreeMap::from([(2usize, w)]);
        MarkovChain::new(carrier(&["x", "y", "z"]), vec![row(Q::one()), row(q(1, 2)), BTreeMap::new()])
            .unwrap()
    }

    /// `s1, s2, t` all move to `t` with probability one.
    pub fn m_twin() -> MarkovChain {
        let row = || BTreeMap::from([(2usize, Q::one())]);
        MarkovChain::new(carrier(&["s1", "s2", "t"]), vec![row(), row(), row()]).unwrap()
    }

    /// `q0 -a→ q1 -a→ q2 ⟲`, accepting `{q1}`.
    pub fn d_line() -> Dfa {
        Dfa::new(
            carrier(&["q0", "q1", "q2"]),
            vec!["a".to_string()],
            0b010,
            vec![vec![1], vec![2], vec![2]],
        )
        .unwrap()
    }

    /// Three points with `d(a,b) = 2/5` and every other distance 1.
    pub fn h_pair() -> (Carrier, Metric) {
        let mut m = Metric::discrete(3);
        m.set_symmetric(0, 1, q(2, 5));
        (carrier(&["a", "b", "c"]), m)
    }

    pub fn system(name: &str) -> Option<FiniteSystem> {
        Some(match name {
            "K_ONE" => k_one().into(),
            "K_DEAD" => k_dead().into(),
            "M_SPLIT" => m_split().into(),
            "M_TWIN" => m_twin().into(),
            "D_LINE" => d_line().into(),
            _ => return None,
        })
    }
}

/// Seeded random systems for property tests and adversarial simulation.
pub mod random {
    use super::*;
    use crate::fiber::full_mask;

    fn states(n: usize) -> Carrier {
        Carrier::new((0..n).map(|i| alloc::format!("s{i}"))).unwrap()
    }

    pub fn kripke<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> KripkeFrame {
        let succ = (0..n)
            .map(|_| (0..n).filter(|_| rng.gen_bool(density)).fold(0, |acc, y| acc | (1u64 << y)))
            .collect();
        KripkeFrame::new(states(n), succ).unwrap()
    }

    /// Kernels with weights that are multiples of `1/den`; some rows are
    /// subdistributions.
    pub fn markov<R: Rng + ?Sized>(rng: &mut R, n: usize, den: i64) -> MarkovChain {
        let mut kernel = Vec::with_capacity(n);
        for _ in 0..n {
            let mut budget = if rng.gen_bool(0.7) { den } else { rng.gen_range(0..=den) };
            let mut row = BTreeMap::new();
            let support = rng.gen_range(0..=n.min(3));
            for k in 0..support {
                if budget == 0 {
                    break;
                }
                let y = rng.gen_range(0..n);
                let w = if k + 1 == support { budget } else { rng.gen_range(0..=budget) };
                budget -= w;
                let entry: &mut Q = row.entry(y).or_insert_with(Q::zero);
                *entry += q(w, den);
            }
            kernel.push(row);
        }
        MarkovChain::new(states(n), kernel).unwrap()
    }

    /// Chains built from a random partition so that nontrivial
    /// bisimilarities are common: states in one block share a row up to
    /// a permutation of targets inside blocks.
    pub fn markov_clustered<R: Rng + ?Sized>(rng: &mut R, n: usize, den: i64) -> MarkovChain {
        let blocks = rng.gen_range(1..=n);
        let label: Vec<usize> = (0..n).map(|i| if i < blocks { i } else { rng.gen_range(0..blocks) }).collect();
        let base = markov(rng, blocks, den);
        let members_of = |b: usize| (0..n).filter(|&i| label[i] == b).collect::<Vec<_>>();
        let mut kernel = Vec::with_capacity(n);
        for &lx in &label {
            let mut row = BTreeMap::new();
            for (&b, w) in base.row(lx) {
                let choices = members_of(b);
                let y = choices[rng.gen_range(0..choices.len())];
                let entry: &mut Q = row.entry(y).or_insert_with(Q::zero);
                *entry += w;
            }
            kernel.push(row);
        }
        MarkovChain::new(states(n), kernel).unwrap()
    }

    pub fn dfa<R: Rng + ?Sized>(rng: &mut R, n: usize, letters: usize) -> Dfa {
        let alphabet = (0..letters).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        let accept = rng.gen_range(0..=full_mask(n));
        let delta = (0..n).map(|_| (0..letters).map(|_| rng.gen_range(0..n)).collect()).collect();
        Dfa::new(states(n), alphabet, accept, delta).unwrap()
    }

    pub fn nfa<R: Rng + ?Sized>(rng: &mut R, n: usize, letters: usize, density: f64) -> Nfa {
        let alphabet = (0..letters).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        let accept = rng.gen_range(0..=full_mask(n));
        let delta = (0..n)
            .map(|_| {
                (0..letters)
                    .map(|_| (0..n).filter(|_| rng.gen_bool(density)).fold(0, |acc, y| acc | (1u64 << y)))
                    .collect()
            })
            .collect();
        Nfa::new(states(n), alphabet, accept, delta).unwrap()
    }

    /// A pseudometric with entries that are multiples of `1/den`, closed
    /// under shortest paths.
    pub fn metric<R: Rng + ?Sized>(rng: &mut R, n: usize, den: i64) -> Metric {
        let mut m = Metric::discrete(n);
        for x in 0..n {
            for y in x + 1..n {
                m.set_symmetric(x, y, q(rng.gen_range(0..=den), den));
            }
        }
        m.shortest_path_closure()
    }

    /// Subdistribution over `n` points with weights in multiples of `1/den`.
    pub fn subdistribution<R: Rng + ?Sized>(rng: &mut R, n: usize, den: i64) -> Vec<Q> {
        let mut budget = rng.gen_range(0..=den);
        let mut out = vec![Q::zero(); n];
        for (i, slot) in out.iter_mut().enumerate() {
            let w = if i + 1 == n { budget } else { rng.gen_range(0..=budget) };
            budget -= w;
            *slot = q(w, den);
        }
        out
    }

    pub fn subset<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Subset {
        rng.gen_range(0..=full_mask(n))
    }

    pub fn nonempty_subset<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Subset {
        rng.gen_range(1..=full_mask(n))
    }

    pub fn members_vec(mask: Subset) -> Vec<usize> {
        members(mask).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        for name in fixtures::NAMES {
            if name != "H_PAIR" {
                assert!(fixtures::system(name).is_some(), "{name}");
            }
        }
        let (c, m) = fixtures::h_pair();
        crate::fiber::FiberElement::pseudometric(&c, m).unwrap();
    }

    #[test]
    fn mass_above_one_rejected() {
        let c = Carrier::new(["x", "y", "z"]).unwrap();
        let err = MarkovChain::new(
            c,
            vec![BTreeMap::from([(2, q(3, 2))]), BTreeMap::new(), BTreeMap::new()],
        )
        .unwrap_err();
        assert!(err.to_string().contains("mass exceeds 1"), "{err}");
    }

    #[test]
    fn partial_delta_rejected() {
        let c = Carrier::new(["q0", "q1", "q2"]).unwrap();
        let err = Dfa::new(c, vec!["a".into()], 0, vec![vec![1], vec![2], vec![]]).unwrap_err();
        assert!(err.to_string().contains("delta not total"), "{err}");
    }

    #[test]
    fn masses_and_expectations() {
        let m = fixtures::m_split();
        assert_eq!(m.mass(1, 0b100), q(1, 2));
        assert_eq!(m.total_mass(2), Q::zero());
        assert_eq!(m.expectation(0, &[Q::zero(), Q::zero(), Q::one()]), Q::one());
    }

    #[test]
    fn random_systems_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            random::markov(&mut rng, n, 4);
            random::markov_clustered(&mut rng, n, 4);
            random::kripke(&mut rng, n, 0.4);
            random::dfa(&mut rng, n, 2);
            random::nfa(&mut rng, n, 2, 0.3);
            let m = random::metric(&mut rng, n, 5);
            m.validate().unwrap();
        }
    }
}
