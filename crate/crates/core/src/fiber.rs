//! Finite-carrier fibers of indistinguishability structures.
//!
//! Every fiber is a complete lattice ordered by *indistinguishability*:
//! `p ⊑ q` means `q` identifies at least as much as `p`. The top element is
//! the coarsest structure (total relation, zero metric, indiscrete
//! topology) and the bottom is the most discriminating one.
//!
//! Relations are stored as one `u64` bit-row per element, so carriers are
//! limited to 64 elements. Topologies keep the full family of open sets and
//! are limited to [`MAX_TOPOLOGY_CARRIER`] elements.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{invalid, Error, Result};
use crate::rational::{self, Q};

pub const MAX_CARRIER: usize = 64;
pub const MAX_TOPOLOGY_CARRIER: usize = 16;

/// Bit mask of a subset of a carrier.
pub type Subset = u64;

pub fn full_mask(n: usize) -> Subset {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn members(mask: Subset) -> impl Iterator<Item = usize> {
    (0..64).filter(move |i| mask & (1u64 << i) != 0)
}

/// An ordered finite set of named elements.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Carrier {
    names: Arc<[String]>,
}

impl Carrier {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(invalid!("carrier must have at least one element"));
        }
        if names.len() > MAX_CARRIER {
            return Err(invalid!(
                "carrier has {} elements, at most {MAX_CARRIER} supported",
                names.len()
            ));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(invalid!("element identifiers must be nonempty"));
            }
            if !seen.insert(name.as_str()) {
                return Err(invalid!("duplicate element identifier {name:?}"));
            }
        }
        Ok(Carrier { names: names.into() })
    }

    /// The two-point observation carrier `{bot, top}`; index 1 is `⊤`.
    pub fn two() -> Self {
        Carrier::new(["bot", "top"]).expect("static carrier")
    }

    /// Carrier `{0, 1, …, n-1}` with decimal names.
    pub fn numbered(n: usize) -> Result<Self> {
        Carrier::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn full(&self) -> Subset {
        full_mask(self.len())
    }

    pub fn subset_names(&self, mask: Subset) -> Vec<&str> {
        members(mask).filter(|&i| i < self.len()).map(|i| self.name(i)).collect()
    }

    pub fn render_subset(&self, mask: Subset) -> String {
        let mut out = String::from("{");
        for (i, name) in self.subset_names(mask).into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(name);
        }
        out.push('}');
        out
    }
}

impl fmt::Debug for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names.iter()).finish()
    }
}

/// A total function between two carriers, stored as an index table.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CarrierMap {
    source: Carrier,
    target: Carrier,
    table: Vec<usize>,
}

impl CarrierMap {
    pub fn new(source: Carrier, target: Carrier, table: Vec<usize>) -> Result<Self> {
        if table.len() != source.len() {
            return Err(invalid!(
                "map table has {} entries for a source of {} elements",
                table.len(),
                source.len()
            ));
        }
        if let Some(&bad) = table.iter().find(|&&t| t >= target.len()) {
            return Err(invalid!("map image {bad} outside target of size {}", target.len()));
        }
        Ok(CarrierMap { source, target, table })
    }

    pub fn identity(carrier: &Carrier) -> Self {
        CarrierMap {
            source: carrier.clone(),
            target: carrier.clone(),
            table: (0..carrier.len()).collect(),
        }
    }

    /// The characteristic map of `mask` into [`Carrier::two`].
    pub fn indicator(source: &Carrier, mask: Subset) -> Self {
        let table = (0..source.len()).map(|i| ((mask >> i) & 1) as usize).collect();
        CarrierMap { source: source.clone(), target: Carrier::two(), table }
    }

    pub fn source(&self) -> &Carrier {
        &self.source
    }

    pub fn target(&self) -> &Carrier {
        &self.target
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn apply(&self, x: usize) -> usize {
        self.table[x]
    }

    pub fn preimage(&self, mask: Subset) -> Subset {
        self.table
            .iter()
            .enumerate()
            .filter(|(_, &t)| mask & (1u64 << t) != 0)
            .fold(0, |acc, (i, _)| acc | (1u64 << i))
    }

    pub fn image(&self, mask: Subset) -> Subset {
        members(mask).fold(0, |acc, i| acc | (1u64 << self.table[i]))
    }
}

/// Binary relation on `{0..n}` stored as bit rows.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    rows: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation { rows: vec![0; n] }
    }

    pub fn identity(n: usize) -> Self {
        Relation { rows: (0..n).map(|i| 1u64 << i).collect() }
    }

    pub fn total(n: usize) -> Self {
        Relation { rows: vec![full_mask(n); n] }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rel = Relation::empty(n);
        for (x, y) in pairs {
            rel.insert(x, y);
        }
        rel
    }

    /// Builds the relation `{(x, y) | pred(x, y)}`.
    pub fn from_fn(n: usize, mut pred: impl FnMut(usize, usize) -> bool) -> Self {
        let rows = (0..n)
            .map(|x| (0..n).filter(|&y| pred(x, y)).fold(0, |acc, y| acc | (1u64 << y)))
            .collect();
        Relation { rows }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> Subset {
        self.rows[x]
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.rows[x] & (1u64 << y) != 0
    }

    pub fn insert(&mut self, x: usize, y: usize) {
        self.rows[x] |= 1u64 << y;
    }

    pub fn remove(&mut self, x: usize, y: usize) {
        self.rows[x] &= !(1u64 << y);
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.size()).flat_map(move |x| members(self.rows[x]).map(move |y| (x, y)))
    }

    pub fn count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a & !b == 0)
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        Relation { rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a & b).collect() }
    }

    pub fn union(&self, other: &Relation) -> Relation {
        Relation { rows: self.rows.iter().zip(&other.rows).map(|(a, b)| a | b).collect() }
    }

    pub fn converse(&self) -> Relation {
        Relation::from_fn(self.size(), |x, y| self.contains(y, x))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.size()).all(|x| self.contains(x, x))
    }

    pub fn is_symmetric(&self) -> bool {
        self.pairs().all(|(x, y)| self.contains(y, x))
    }

    pub fn is_transitive(&self) -> bool {
        (0..self.size()).all(|x| {
            let through = members(self.rows[x]).fold(0, |acc, y| acc | self.rows[y]);
            through & !self.rows[x] == 0
        })
    }

    pub fn is_equivalence(&self) -> bool {
        self.is_reflexive() && self.is_symmetric() && self.is_transitive()
    }

    pub fn is_preorder(&self) -> bool {
        self.is_reflexive() && self.is_transitive()
    }

    pub fn transitive_closure(&self) -> Relation {
        let mut rows = self.rows.clone();
        let n = rows.len();
        // Warshall over bit rows.
        for k in 0..n {
            let via = rows[k];
            for row in rows.iter_mut() {
                if *row & (1u64 << k) != 0 {
                    *row |= via;
                }
            }
        }
        Relation { rows }
    }

    pub fn reflexive_transitive_closure(&self) -> Relation {
        self.union(&Relation::identity(self.size())).transitive_closure()
    }

    pub fn equivalence_closure(&self) -> Relation {
        self.union(&self.converse()).reflexive_transitive_closure()
    }

    /// Blocks of an equivalence, ordered by least member.
    pub fn classes(&self) -> Vec<Subset> {
        let mut seen: Subset = 0;
        let mut out = Vec::new();
        for x in 0..self.size() {
            if seen & (1u64 << x) == 0 {
                let block = self.rows[x];
                seen |= block;
                out.push(block);
            }
        }
        out
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

/// Symmetric `n × n` matrix of exact distances.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Metric {
    n: usize,
    entries: Vec<Q>,
}

impl Metric {
    pub fn zero(n: usize) -> Self {
        Metric { n, entries: vec![Q::zero(); n * n] }
    }

    pub fn discrete(n: usize) -> Self {
        Metric::from_fn(n, |x, y| if x == y { Q::zero() } else { Q::one() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut entries = Vec::with_capacity(n * n);
        for x in 0..n {
            for y in 0..n {
                entries.push(f(x, y));
            }
        }
        Metric { n, entries }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: usize, y: usize) -> &Q {
        &self.entries[x * self.n + y]
    }

    pub fn set_symmetric(&mut self, x: usize, y: usize, value: Q) {
        self.entries[x * self.n + y] = value.clone();
        self.entries[y * self.n + x] = value;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        for x in 0..n {
            if !self.get(x, x).is_zero() {
                return Err(invalid!("pseudometric has nonzero diagonal at {x}"));
            }
            for y in 0..n {
                let d = self.get(x, y);
                if !rational::in_unit_interval(d) {
                    return Err(invalid!("pseudometric entry ({x},{y}) outside [0,1]"));
                }
                if d != self.get(y, x) {
                    return Err(invalid!("pseudometric not symmetric at ({x},{y})"));
                }
                for z in 0..n {
                    if *d > self.get(x, z) + self.get(z, y) {
                        return Err(invalid!("triangle inequality fails at ({x},{z},{y})"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest pseudometric pointwise below this (symmetric, zero-diagonal)
    /// matrix: all-pairs shortest paths.
    pub fn shortest_path_closure(&self) -> Metric {
        let n = self.n;
        let mut out = self.clone();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = out.get(i, k) + out.get(k, j);
                    if via < *out.get(i, j) {
                        out.entries[i * n + j] = via;
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Metric) -> Q {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Q::zero)
    }
}

/// Canonical family of open sets: sorted, deduplicated masks.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct OpenSets {
    opens: Vec<Subset>,
}

impl OpenSets {
    /// Topology generated by `subbasis` on an `n`-element carrier.
    pub fn generate(n: usize, subbasis: impl IntoIterator<Item = Subset>) -> Self {
        assert!(n <= MAX_TOPOLOGY_CARRIER);
        let full = full_mask(n);
        // Finite intersections of subbasis elements form a basis.
        let mut is_basic = vec![false; 1usize << n];
        let mut basis = vec![full];
        is_basic[full as usize] = true;
        for s in subbasis {
            let s = s & full;
            let snapshot = basis.len();
            for i in 0..snapshot {
                let meet = basis[i] & s;
                if !is_basic[meet as usize] {
                    is_basic[meet as usize] = true;
                    basis.push(meet);
                }
            }
            if !is_basic[s as usize] {
                is_basic[s as usize] = true;
                basis.push(s);
            }
        }
        let mut is_open = vec![false; 1usize << n];
        let mut opens = vec![0];
        is_open[0] = true;
        for &b in &basis {
            let snapshot = opens.len();
            for i in 0..snapshot {
                let joined = opens[i] | b;
                if !is_open[joined as usize] {
                    is_open[joined as usize] = true;
                    opens.push(joined);
                }
            }
        }
        opens.sort_unstable();
        OpenSets { opens }
    }

    fn from_sorted(opens: Vec<Subset>) -> Self {
        OpenSets { opens }
    }

    pub fn opens(&self) -> &[Subset] {
        &self.opens
    }

    pub fn contains(&self, mask: Subset) -> bool {
        self.opens.binary_search(&mask).is_ok()
    }

    pub fn is_superset(&self, other: &OpenSets) -> bool {
        other.opens.iter().all(|&u| self.contains(u))
    }

    pub fn is_closed_family(&self, n: usize) -> bool {
        let full = full_mask(n);
        self.contains(0)
            && self.contains(full)
            && self.opens.iter().all(|&a| {
                self.opens.iter().all(|&b| self.contains(a | b) && self.contains(a & b))
            })
    }

    /// Irredundant generating family: opens that are not unions of smaller
    /// opens, excluding the empty set.
    pub fn join_irreducibles(&self) -> Vec<Subset> {
        self.opens
            .iter()
            .copied()
            .filter(|&u| {
                u != 0 && {
                    let below = self
                        .opens
                        .iter()
                        .filter(|&&v| v != u && v & !u == 0)
                        .fold(0, |acc, &v| acc | v);
                    below != u
                }
            })
            .collect()
    }

    /// Smallest open set containing `x`.
    pub fn neighbourhood(&self, n: usize, x: usize) -> Subset {
        self.opens
            .iter()
            .filter(|&&u| u & (1u64 << x) != 0)
            .fold(full_mask(n), |acc, &u| acc & u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FiberKind {
    EquivRel,
    EndoRel,
    Preorder,
    PseudoMetric,
    Topology,
}

impl FiberKind {
    pub const ALL: [FiberKind; 5] = [
        FiberKind::EquivRel,
        FiberKind::EndoRel,
        FiberKind::Preorder,
        FiberKind::PseudoMetric,
        FiberKind::Topology,
    ];

    pub fn is_finite_lattice(self) -> bool {
        !matches!(self, FiberKind::PseudoMetric)
    }
}

impl fmt::Display for FiberKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FiberKind::EquivRel => "EquivRel",
            FiberKind::EndoRel => "EndoRel",
            FiberKind::Preorder => "Preorder",
            FiberKind::PseudoMetric => "PseudoMetric",
            FiberKind::Topology => "Topology",
        };
        f.write_str(name)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Structure {
    EquivRel(Relation),
    EndoRel(Relation),
    Preorder(Relation),
    PseudoMetric(Metric),
    Topology(OpenSets),
}

/// One indistinguishability structure over a finite carrier.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FiberElement {
    carrier: Carrier,
    structure: Structure,
}

impl FiberElement {
    pub fn new(carrier: Carrier, structure: Structure) -> Result<Self> {
        let n = carrier.len();
        match &structure {
            Structure::EquivRel(r) | Structure::EndoRel(r) | Structure::Preorder(r) => {
                if r.size() != n {
                    return Err(invalid!("relation size {} differs from carrier {n}", r.size()));
                }
            }
            Structure::PseudoMetric(m) => {
                if m.size() != n {
                    return Err(invalid!("metric size {} differs from carrier {n}", m.size()));
                }
                m.validate()?;
            }
            Structure::Topology(t) => {
                if n > MAX_TOPOLOGY_CARRIER {
                    return Err(invalid!(
                        "topologies are limited to {MAX_TOPOLOGY_CARRIER} points"
                    ));
                }
                if !t.is_closed_family(n) {
                    return Err(invalid!(
                        "open sets must contain ∅ and X and be closed under ∪ and ∩"
                    ));
                }
            }
        }
        match &structure {
            Structure::EquivRel(r) if !r.is_equivalence() => {
                Err(invalid!("relation is not an equivalence"))
            }
            Structure::Preorder(r) if !r.is_preorder() => {
                Err(invalid!("relation is not reflexive and transitive"))
            }
            _ => Ok(FiberElement { carrier, structure }),
        }
    }

    pub(crate) fn from_parts_unchecked(carrier: Carrier, structure: Structure) -> Self {
        FiberElement { carrier, structure }
    }

    /// Equivalence relation given by its blocks.
    pub fn partition(carrier: &Carrier, blocks: &[Vec<usize>]) -> Result<Self> {
        let n = carrier.len();
        let mut label = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &x in block {
                if x >= n {
                    return Err(invalid!("block element {x} outside carrier"));
                }
                if label[x] != usize::MAX {
                    return Err(invalid!("element {x} appears in two blocks"));
                }
                label[x] = b;
            }
        }
        if label.contains(&usize::MAX) {
            return Err(invalid!("blocks do not cover the carrier"));
        }
        let rel = Relation::from_fn(n, |x, y| label[x] == label[y]);
        Ok(FiberElement::from_parts_unchecked(carrier.clone(), Structure::EquivRel(rel)))
    }

    pub fn equivalence(carrier: &Carrier, rel: Relation) -> Result<Self> {
        FiberElement::new(carrier.clone(), Structure::EquivRel(rel))
    }

    pub fn endorelation(carrier: &Carrier, rel: Relation) -> Result<Self> {
        FiberElement::new(carrier.clone(), Structure::EndoRel(rel))
    }

    pub fn preorder(carrier: &Carrier, rel: Relation) -> Result<Self> {
        FiberElement::new(carrier.clone(), Structure::Preorder(rel))
    }

    pub fn pseudometric(carrier: &Carrier, metric: Metric) -> Result<Self> {
        FiberElement::new(carrier.clone(), Structure::PseudoMetric(metric))
    }

    pub fn topology(carrier: &Carrier, opens: &[Subset]) -> Result<Self> {
        let mut sorted: Vec<Subset> = opens.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        FiberElement::new(carrier.clone(), Structure::Topology(OpenSets::from_sorted(sorted)))
    }

    pub fn topology_generated_by(carrier: &Carrier, subbasis: &[Subset]) -> Result<Self> {
        if carrier.len() > MAX_TOPOLOGY_CARRIER {
            return Err(invalid!("topologies are limited to {MAX_TOPOLOGY_CARRIER} points"));
        }
        let opens = OpenSets::generate(carrier.len(), subbasis.iter().copied());
        Ok(FiberElement::from_parts_unchecked(carrier.clone(), Structure::Topology(opens)))
    }

    pub fn kind(&self) -> FiberKind {
        match self.structure {
            Structure::EquivRel(_) => FiberKind::EquivRel,
            Structure::EndoRel(_) => FiberKind::EndoRel,
            Structure::Preorder(_) => FiberKind::Preorder,
            Structure::PseudoMetric(_) => FiberKind::PseudoMetric,
            Structure::Topology(_) => FiberKind::Topology,
        }
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn relation(&self) -> Option<&Relation> {
        match &self.structure {
            Structure::EquivRel(r) | Structure::EndoRel(r) | Structure::Preorder(r) => Some(r),
            _ => None,
        }
    }

    pub fn metric(&self) -> Option<&Metric> {
        match &self.structure {
            Structure::PseudoMetric(m) => Some(m),
            _ => None,
        }
    }

    pub fn open_sets(&self) -> Option<&OpenSets> {
        match &self.structure {
            Structure::Topology(t) => Some(t),
            _ => None,
        }
    }

    /// Blocks of an equivalence relation.
    pub fn blocks(&self) -> Option<Vec<Subset>> {
        match &self.structure {
            Structure::EquivRel(r) => Some(r.classes()),
            _ => None,
        }
    }

    /// Re-checks every invariant of the structure.
    pub fn validate(&self) -> Result<()> {
        FiberElement::new(self.carrier.clone(), self.structure.clone()).map(|_| ())
    }

    fn with_relation(&self, rel: Relation) -> FiberElement {
        let structure = match self.structure {
            Structure::EquivRel(_) => Structure::EquivRel(rel),
            Structure::EndoRel(_) => Structure::EndoRel(rel),
            Structure::Preorder(_) => Structure::Preorder(rel),
            _ => unreachable!("relation kinds only"),
        };
        FiberElement::from_parts_unchecked(self.carrier.clone(), structure)
    }
}

fn same_kind_and_carrier(p: &FiberElement, q: &FiberElement) -> Result<()> {
    if p.kind() != q.kind() {
        return Err(Error::KindMismatch {
            expected: p.kind().to_string(),
            found: q.kind().to_string(),
        });
    }
    if p.carrier != q.carrier {
        return Err(Error::CarrierMismatch(alloc::format!(
            "{:?} vs {:?}",
            p.carrier,
            q.carrier
        )));
    }
    Ok(())
}

/// Indistinguishability order `p ⊑ q`.
pub fn leq(p: &FiberElement, q: &FiberElement) -> Result<bool> {
    same_kind_and_carrier(p, q)?;
    Ok(match (&p.structure, &q.structure) {
        (Structure::EquivRel(a), Structure::EquivRel(b))
        | (Structure::EndoRel(a), Structure::EndoRel(b))
        | (Structure::Preorder(a), Structure::Preorder(b)) => a.is_subset(b),
        (Structure::PseudoMetric(a), Structure::PseudoMetric(b)) => {
            a.entries.iter().zip(&b.entries).all(|(x, y)| x >= y)
        }
        (Structure::Topology(a), Structure::Topology(b)) => a.is_superset(b),
        _ => unreachable!("kinds checked"),
    })
}

pub fn top(kind: FiberKind, carrier: &Carrier) -> FiberElement {
    let n = carrier.len();
    let structure = match kind {
        FiberKind::EquivRel => Structure::EquivRel(Relation::total(n)),
        FiberKind::EndoRel => Structure::EndoRel(Relation::total(n)),
        FiberKind::Preorder => Structure::Preorder(Relation::total(n)),
        FiberKind::PseudoMetric => Structure::PseudoMetric(Metric::zero(n)),
        FiberKind::Topology => {
            Structure::Topology(OpenSets::from_sorted(dedup_sorted(vec![0, full_mask(n)])))
        }
    };
    FiberElement::from_parts_unchecked(carrier.clone(), structure)
}

/// Most discriminating element. For endorelations this is the empty
/// relation, the least element of that lattice.
pub fn bottom(kind: FiberKind, carrier: &Carrier) -> FiberElement {
    let n = carrier.len();
    let structure = match kind {
        FiberKind::EquivRel => Structure::EquivRel(Relation::identity(n)),
        FiberKind::EndoRel => Structure::EndoRel(Relation::empty(n)),
        FiberKind::Preorder => Structure::Preorder(Relation::identity(n)),
        FiberKind::PseudoMetric => Structure::PseudoMetric(Metric::discrete(n)),
        FiberKind::Topology => {
            assert!(n <= MAX_TOPOLOGY_CARRIER, "topology carrier too large");
            Structure::Topology(OpenSets::from_sorted((0..=full_mask(n)).collect()))
        }
    };
    FiberElement::from_parts_unchecked(carrier.clone(), structure)
}

fn dedup_sorted(mut v: Vec<Subset>) -> Vec<Subset> {
    v.sort_unstable();
    v.dedup();
    v
}

fn check_family(items: &[FiberElement]) -> Result<&FiberElement> {
    let first = items
        .first()
        .ok_or_else(|| invalid!("empty family: use top/bottom of the fiber instead"))?;
    for item in &items[1..] {
        same_kind_and_carrier(first, item)?;
    }
    Ok(first)
}

/// Greatest lower bound of a nonempty family.
pub fn meet(items: &[FiberElement]) -> Result<FiberElement> {
    let first = check_family(items)?;
    let n = first.carrier.len();
    Ok(match &first.structure {
        Structure::EquivRel(_) | Structure::EndoRel(_) | Structure::Preorder(_) => {
            let rel = items
                .iter()
                .skip(1)
                .fold(first.relation().unwrap().clone(), |acc, p| {
                    acc.intersection(p.relation().unwrap())
                });
            first.with_relation(rel)
        }
        Structure::PseudoMetric(_) => {
            let metric = Metric::from_fn(n, |x, y| {
                items.iter().map(|p| p.metric().unwrap().get(x, y).clone()).max().unwrap()
            });
            FiberElement::from_parts_unchecked(first.carrier.clone(), Structure::PseudoMetric(metric))
        }
        Structure::Topology(_) => {
            let all = items.iter().flat_map(|p| p.open_sets().unwrap().opens.iter().copied());
            FiberElement::from_parts_unchecked(
                first.carrier.clone(),
                Structure::Topology(OpenSets::generate(n, all)),
            )
        }
    })
}

/// Least upper bound of a nonempty family.
pub fn join(items: &[FiberElement]) -> Result<FiberElement> {
    let first = check_family(items)?;
    let n = first.carrier.len();
    Ok(match &first.structure {
        Structure::EquivRel(_) | Structure::EndoRel(_) | Structure::Preorder(_) => {
            let union = items
                .iter()
                .skip(1)
                .fold(first.relation().unwrap().clone(), |acc, p| acc.union(p.relation().unwrap()));
            let rel = match first.kind() {
                FiberKind::EquivRel => union.equivalence_closure(),
                FiberKind::Preorder => union.reflexive_transitive_closure(),
                _ => union,
            };
            first.with_relation(rel)
        }
        Structure::PseudoMetric(_) => {
            let pointwise = Metric::from_fn(n, |x, y| {
                items.iter().map(|p| p.metric().unwrap().get(x, y).clone()).min().unwrap()
            });
            FiberElement::from_parts_unchecked(
                first.carrier.clone(),
                Structure::PseudoMetric(pointwise.shortest_path_closure()),
            )
        }
        Structure::Topology(t) => {
            let opens = t
                .opens
                .iter()
                .copied()
                .filter(|&u| items.iter().all(|p| p.open_sets().unwrap().contains(u)))
                .collect();
            FiberElement::from_parts_unchecked(
                first.carrier.clone(),
                Structure::Topology(OpenSets::from_sorted(opens)),
            )
        }
    })
}

/// Inverse image of `q` along `f`.
pub fn pullback(f: &CarrierMap, q: &FiberElement) -> Result<FiberElement> {
    if f.target != q.carrier {
        return Err(Error::CarrierMismatch("pullback: map target differs from carrier".into()));
    }
    let n = f.source.len();
    let structure = match &q.structure {
        Structure::EquivRel(r) | Structure::EndoRel(r) | Structure::Preorder(r) => {
            let rel = Relation::from_fn(n, |x, y| r.contains(f.table[x], f.table[y]));
            match q.kind() {
                FiberKind::EquivRel => Structure::EquivRel(rel),
                FiberKind::EndoRel => Structure::EndoRel(rel),
                _ => Structure::Preorder(rel),
            }
        }
        Structure::PseudoMetric(m) => Structure::PseudoMetric(Metric::from_fn(n, |x, y| {
            m.get(f.table[x], f.table[y]).clone()
        })),
        Structure::Topology(t) => {
            if n > MAX_TOPOLOGY_CARRIER {
                return Err(invalid!("topologies are limited to {MAX_TOPOLOGY_CARRIER} points"));
            }
            let opens = dedup_sorted(t.opens.iter().map(|&u| f.preimage(u)).collect());
            Structure::Topology(OpenSets::from_sorted(opens))
        }
    };
    Ok(FiberElement::from_parts_unchecked(f.source.clone(), structure))
}

/// Least `q` over `f.target` with `p ⊑ f*(q)`.
pub fn pushforward(f: &CarrierMap, p: &FiberElement) -> Result<FiberElement> {
    if f.source != p.carrier {
        return Err(Error::CarrierMismatch("pushforward: map source differs from carrier".into()));
    }
    let m = f.target.len();
    let structure = match &p.structure {
        Structure::EquivRel(r) | Structure::EndoRel(r) | Structure::Preorder(r) => {
            let image = Relation::from_pairs(m, r.pairs().map(|(x, y)| (f.table[x], f.table[y])));
            match p.kind() {
                FiberKind::EquivRel => Structure::EquivRel(image.equivalence_closure()),
                FiberKind::EndoRel => Structure::EndoRel(image),
                _ => Structure::Preorder(image.reflexive_transitive_closure()),
            }
        }
        Structure::PseudoMetric(d) => {
            let mut bound = Metric::discrete(m);
            let n = f.source.len();
            for x in 0..n {
                for y in 0..n {
                    let (u, v) = (f.table[x], f.table[y]);
                    if u != v && d.get(x, y) < bound.get(u, v) {
                        bound.set_symmetric(u, v, d.get(x, y).clone());
                    }
                }
            }
            Structure::PseudoMetric(bound.shortest_path_closure())
        }
        Structure::Topology(t) => {
            if m > MAX_TOPOLOGY_CARRIER {
                return Err(invalid!("topologies are limited to {MAX_TOPOLOGY_CARRIER} points"));
            }
            let opens = (0..=full_mask(m)).filter(|&v| t.contains(f.preimage(v))).collect();
            Structure::Topology(OpenSets::from_sorted(opens))
        }
    };
    Ok(FiberElement::from_parts_unchecked(f.target.clone(), structure))
}

/// Whether `f: (X, p) → (Y, q)` respects indistinguishability.
pub fn is_decent(f: &CarrierMap, p: &FiberElement, q: &FiberElement) -> Result<bool> {
    if f.source != p.carrier {
        return Err(Error::CarrierMismatch("is_decent: map source differs from carrier".into()));
    }
    leq(p, &pullback(f, q)?)
}

/// Least equivalence relation containing an endorelation.
pub fn equivalence_closure(r: &FiberElement) -> Result<FiberElement> {
    match &r.structure {
        Structure::EndoRel(rel) => Ok(FiberElement::from_parts_unchecked(
            r.carrier.clone(),
            Structure::EquivRel(rel.equivalence_closure()),
        )),
        _ => Err(Error::KindMismatch { expected: "EndoRel".into(), found: r.kind().to_string() }),
    }
}

/// Re-tags a relation as an endorelation (the inclusion of a relational
/// fiber into `EndoRel`).
pub fn as_endorelation(p: &FiberElement) -> Result<FiberElement> {
    let rel = p
        .relation()
        .ok_or_else(|| Error::KindMismatch { expected: "relation".into(), found: p.kind().to_string() })?;
    Ok(FiberElement::from_parts_unchecked(p.carrier.clone(), Structure::EndoRel(rel.clone())))
}

/// All elements of a finite fiber, in a deterministic order.
///
/// Intended for small carriers: the fibers grow as Bell numbers
/// (equivalences), `2^(n²)` (endorelations) and faster (topologies).
pub fn enumerate(kind: FiberKind, carrier: &Carrier) -> Result<Vec<FiberElement>> {
    let n = carrier.len();
    let wrap = |s: Structure| FiberElement::from_parts_unchecked(carrier.clone(), s);
    match kind {
        FiberKind::EquivRel => {
            let mut out = Vec::new();
            let mut labels = vec![0usize; n];
            loop {
                out.push(wrap(Structure::EquivRel(Relation::from_fn(n, |x, y| {
                    labels[x] == labels[y]
                }))));
                // Next restricted growth string.
                let mut i = n;
                loop {
                    if i <= 1 {
                        return Ok(out);
                    }
                    i -= 1;
                    let max_prefix = labels[..i].iter().copied().max().unwrap_or(0);
                    if labels[i] <= max_prefix {
                        labels[i] += 1;
                        for l in labels.iter_mut().skip(i + 1) {
                            *l = 0;
                        }
                        break;
                    }
                }
            }
        }
        FiberKind::EndoRel | FiberKind::Preorder => {
            if n * n > 20 {
                return Err(Error::Unsupported(alloc::format!(
                    "enumerating {kind} on {n} points"
                )));
            }
            let mut out = Vec::new();
            for bits in 0u64..(1u64 << (n * n)) {
                let rel = Relation::from_fn(n, |x, y| bits & (1u64 << (x * n + y)) != 0);
                if kind == FiberKind::EndoRel {
                    out.push(wrap(Structure::EndoRel(rel)));
                } else if rel.is_preorder() {
                    out.push(wrap(Structure::Preorder(rel)));
                }
            }
            Ok(out)
        }
        FiberKind::Topology => {
            if n > 3 {
                return Err(Error::Unsupported(alloc::format!("enumerating topologies on {n} points")));
            }
            let subsets = 1usize << n;
            let mut out = BTreeSet::new();
            for family in 0u64..(1u64 << subsets) {
                let opens: Vec<Subset> =
                    (0..subsets as u64).filter(|s| family & (1u64 << s) != 0).collect();
                let t = OpenSets::from_sorted(opens);
                if t.is_closed_family(n) {
                    out.insert(t);
                }
            }
            Ok(out.into_iter().map(|t| wrap(Structure::Topology(t))).collect())
        }
        FiberKind::PseudoMetric => {
            Err(Error::Unsupported("the pseudometric fiber is infinite".into()))
        }
    }
}

/// Specialisation preorder of a topology: `x ⊑ y` iff every open set
/// containing `x` contains `y`.
pub fn specialization_preorder(t: &FiberElement) -> Result<FiberElement> {
    let opens = t.open_sets().ok_or_else(|| Error::KindMismatch {
        expected: "Topology".into(),
        found: t.kind().to_string(),
    })?;
    let n = t.carrier.len();
    let rel = Relation::from_fn(n, |x, y| {
        opens.opens.iter().all(|&u| u & (1u64 << x) == 0 || u & (1u64 << y) != 0)
    });
    Ok(FiberElement::from_parts_unchecked(t.carrier.clone(), Structure::Preorder(rel)))
}

impl fmt::Display for FiberElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.carrier;
        match &self.structure {
            Structure::EquivRel(r) => {
                let blocks: Vec<String> = r.classes().into_iter().map(|b| c.render_subset(b)).collect();
                write!(f, "{{{}}}", blocks.join(","))
            }
            Structure::EndoRel(r) | Structure::Preorder(r) => {
                let pairs: Vec<String> = r
                    .pairs()
                    .map(|(x, y)| alloc::format!("({},{})", c.name(x), c.name(y)))
                    .collect();
                write!(f, "{{{}}}", pairs.join(","))
            }
            Structure::PseudoMetric(m) => {
                let mut first = true;
                for x in 0..m.size() {
                    for y in x + 1..m.size() {
                        if !first {
                            f.write_str(", ")?;
                        }
                        first = false;
                        write!(f, "d({},{})={}", c.name(x), c.name(y), rational::render(m.get(x, y)))?;
                    }
                }
                Ok(())
            }
            Structure::Topology(t) => {
                let opens: Vec<String> = t.opens.iter().map(|&u| c.render_subset(u)).collect();
                write!(f, "{{{}}}", opens.join(","))
            }
        }
    }
}

/// Distance-`r` generator on the two-point carrier.
pub fn two_point_metric(r: Q) -> Result<FiberElement> {
    if !rational::in_unit_interval(&r) || r.is_negative() {
        return Err(invalid!("distance must lie in [0,1]"));
    }
    let mut m = Metric::discrete(2);
    m.set_symmetric(0, 1, r);
    FiberElement::pseudometric(&Carrier::two(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn abc() -> Carrier {
        Carrier::new(["a", "b", "c"]).unwrap()
    }

    fn metric2(r: Q) -> FiberElement {
        let c = Carrier::new(["a", "b"]).unwrap();
        let mut m = Metric::zero(2);
        m.set_symmetric(0, 1, r);
        FiberElement::pseudometric(&c, m).unwrap()
    }

    #[test]
    fn carrier_validation() {
        assert!(Carrier::new(Vec::<String>::new()).is_err());
        assert!(Carrier::new(["a", "a"]).is_err());
        assert!(Carrier::new(["a", ""]).is_err());
        assert_eq!(abc().index_of("c"), Some(2));
    }

    #[test]
    fn leq_examples() {
        let ab = Carrier::new(["a", "b"]).unwrap();
        assert!(leq(&bottom(FiberKind::EquivRel, &ab), &top(FiberKind::EquivRel, &ab)).unwrap());
        assert!(leq(&metric2(q(2, 5)), &metric2(q(1, 5))).unwrap());
        assert!(!leq(&metric2(q(1, 5)), &metric2(q(2, 5))).unwrap());
        let sierpinski_like = FiberElement::topology(&ab, &[0, 0b01, 0b11]).unwrap();
        assert!(leq(&bottom(FiberKind::Topology, &ab), &sierpinski_like).unwrap());
        assert!(!leq(&sierpinski_like, &bottom(FiberKind::Topology, &ab)).unwrap());
    }

    #[test]
    fn leq_rejects_mismatch() {
        let ab = Carrier::new(["a", "b"]).unwrap();
        let err = leq(&top(FiberKind::EquivRel, &ab), &top(FiberKind::Preorder, &ab));
        assert!(matches!(err, Err(Error::KindMismatch { .. })));
        let err = leq(&top(FiberKind::EquivRel, &ab), &top(FiberKind::EquivRel, &abc()));
        assert!(matches!(err, Err(Error::CarrierMismatch(_))));
    }

    #[test]
    fn meet_of_partitions_and_metrics() {
        let c = abc();
        let p1 = FiberElement::partition(&c, &[vec![0, 1], vec![2]]).unwrap();
        let p2 = FiberElement::partition(&c, &[vec![0], vec![1, 2]]).unwrap();
        assert_eq!(meet(&[p1.clone(), p2]).unwrap(), bottom(FiberKind::EquivRel, &c));
        assert_eq!(meet(core::slice::from_ref(&p1)).unwrap(), p1);
        let m = meet(&[metric2(q(3, 10)), metric2(q(7, 10))]).unwrap();
        assert_eq!(*m.metric().unwrap().get(0, 1), q(7, 10));
        assert!(meet(&[]).is_err());
    }

    #[test]
    fn join_examples() {
        let c = abc();
        let p1 = FiberElement::partition(&c, &[vec![0, 1], vec![2]]).unwrap();
        let p2 = FiberElement::partition(&c, &[vec![1, 2], vec![0]]).unwrap();
        assert_eq!(join(&[p1.clone(), p2]).unwrap(), top(FiberKind::EquivRel, &c));
        assert_eq!(join(&[p1.clone(), p1.clone()]).unwrap(), p1);

        // d_{a,b,0} ⊔ d_{b,c,0} collapses a and c.
        let gen = |x: usize, y: usize| {
            let mut m = Metric::discrete(3);
            m.set_symmetric(x, y, Q::zero());
            FiberElement::pseudometric(&c, m).unwrap()
        };
        let j = join(&[gen(0, 1), gen(1, 2)]).unwrap();
        assert!(j.metric().unwrap().get(0, 2).is_zero());
        j.validate().unwrap();
    }

    #[test]
    fn pullback_examples() {
        let c = Carrier::new(["a", "b"]).unwrap();
        let star = Carrier::new(["*"]).unwrap();
        let constant = CarrierMap::new(c.clone(), star.clone(), vec![0, 0]).unwrap();
        for kind in FiberKind::ALL {
            let q = bottom(kind, &star);
            let expected = if kind == FiberKind::EndoRel { bottom(kind, &c) } else { top(kind, &c) };
            assert_eq!(pullback(&constant, &q).unwrap(), expected, "{kind}");
        }
        let p = FiberElement::partition(&c, &[vec![0, 1]]).unwrap();
        assert_eq!(pullback(&CarrierMap::identity(&c), &p).unwrap(), p);
        let two = Carrier::new(["0", "1"]).unwrap();
        let f = CarrierMap::new(c.clone(), two.clone(), vec![0, 1]).unwrap();
        assert_eq!(
            pullback(&f, &bottom(FiberKind::EquivRel, &two)).unwrap(),
            bottom(FiberKind::EquivRel, &c)
        );
    }

    #[test]
    fn pushforward_builds_pair_preorder() {
        let c = abc();
        let two = Carrier::two();
        let below = FiberElement::preorder(&two, Relation::from_pairs(2, [(0, 0), (1, 1), (0, 1)]))
            .unwrap();
        let f = CarrierMap::new(two, c.clone(), vec![2, 0]).unwrap();
        let pushed = pushforward(&f, &below).unwrap();
        let expected = Relation::from_pairs(3, [(0, 0), (1, 1), (2, 2), (2, 0)]);
        assert_eq!(pushed.relation().unwrap(), &expected);
        let id = CarrierMap::identity(&c);
        let p = FiberElement::partition(&c, &[vec![0, 2], vec![1]]).unwrap();
        assert_eq!(pushforward(&id, &p).unwrap(), p);
    }

    #[test]
    fn decency_examples() {
        let c = Carrier::new(["a", "b"]).unwrap();
        // d(a,b) = 2/5 into a grid of [0,1] with |f(a) - f(b)| = 3/5.
        let grid = Carrier::new(["0", "1/5", "2/5", "3/5", "4/5", "1"]).unwrap();
        let grid_metric = Metric::from_fn(6, |i, j| q((i as i64 - j as i64).abs(), 5));
        let grid_el = FiberElement::pseudometric(&grid, grid_metric).unwrap();
        let f = CarrierMap::new(c.clone(), grid.clone(), vec![0, 3]).unwrap();
        assert!(!is_decent(&f, &metric2(q(2, 5)), &grid_el).unwrap());
        let g = CarrierMap::new(c.clone(), grid.clone(), vec![0, 2]).unwrap();
        assert!(is_decent(&g, &metric2(q(2, 5)), &grid_el).unwrap());
        let constant = CarrierMap::new(c.clone(), grid.clone(), vec![4, 4]).unwrap();
        assert!(is_decent(&constant, &metric2(Q::zero()), &grid_el).unwrap());
        for kind in [FiberKind::EquivRel, FiberKind::Preorder, FiberKind::Topology] {
            let two = Carrier::two();
            let swap = CarrierMap::new(c.clone(), two.clone(), vec![1, 0]).unwrap();
            assert!(is_decent(&swap, &bottom(kind, &c), &bottom(kind, &two)).unwrap());
        }
    }

    #[test]
    fn extrema() {
        let c = Carrier::new(["a", "b"]).unwrap();
        assert_eq!(top(FiberKind::EquivRel, &c).blocks().unwrap(), vec![0b11]);
        assert!(top(FiberKind::PseudoMetric, &c).metric().unwrap().get(0, 1).is_zero());
        assert_eq!(bottom(FiberKind::Topology, &c).open_sets().unwrap().opens().len(), 4);
        for kind in FiberKind::ALL {
            top(kind, &c).validate().unwrap();
            bottom(kind, &c).validate().unwrap();
        }
    }

    #[test]
    fn equivalence_closure_examples() {
        let c = abc();
        let r = FiberElement::endorelation(&c, Relation::from_pairs(3, [(0, 1)])).unwrap();
        let e = equivalence_closure(&r).unwrap();
        assert_eq!(e, FiberElement::partition(&c, &[vec![0, 1], vec![2]]).unwrap());
        let empty = FiberElement::endorelation(&c, Relation::empty(3)).unwrap();
        assert_eq!(equivalence_closure(&empty).unwrap(), bottom(FiberKind::EquivRel, &c));
        let eq = as_endorelation(&e).unwrap();
        assert_eq!(equivalence_closure(&eq).unwrap(), e);
        assert!(equivalence_closure(&e).is_err());
    }

    #[test]
    fn enumeration_sizes() {
        let c4 = Carrier::numbered(4).unwrap();
        assert_eq!(enumerate(FiberKind::EquivRel, &c4).unwrap().len(), 15);
        assert_eq!(enumerate(FiberKind::Preorder, &c4).unwrap().len(), 355);
        let c3 = Carrier::numbered(3).unwrap();
        assert_eq!(enumerate(FiberKind::Topology, &c3).unwrap().len(), 29);
        assert_eq!(enumerate(FiberKind::EndoRel, &c3).unwrap().len(), 512);
    }

    #[test]
    fn topology_generation_is_closed_and_idempotent() {
        let c = Carrier::numbered(4).unwrap();
        let t = FiberElement::topology_generated_by(&c, &[0b0011, 0b0110, 0b1000]).unwrap();
        t.validate().unwrap();
        let again = OpenSets::generate(4, t.open_sets().unwrap().opens().iter().copied());
        assert_eq!(&again, t.open_sets().unwrap());
    }

    #[test]
    fn specialization_of_extremes() {
        let c = abc();
        let discrete = specialization_preorder(&bottom(FiberKind::Topology, &c)).unwrap();
        assert_eq!(discrete.relation().unwrap(), &Relation::identity(3));
        let indiscrete = specialization_preorder(&top(FiberKind::Topology, &c)).unwrap();
        assert_eq!(indiscrete.relation().unwrap(), &Relation::total(3));
    }
}
