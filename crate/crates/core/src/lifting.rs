//! Codensity predicate transformers.
//!
//! For a parameter family `{(Ω_A, τ_A)}` the transformer is
//!
//! ```text
//! Φ(P) = ⊓_{A, k: (X,P) → Ω_A decent} (τ_A ∘ F k ∘ c)* Ω_A
//! ```
//!
//! Finite observation domains are handled by enumerating decent maps. The
//! unit interval with the expectation modality is handled by the exact
//! Kantorovich linear program instead.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::fiber::{self, members, Carrier, CarrierMap, FiberElement, FiberKind, Metric, Relation};
use crate::lp;
use crate::rational::{self, Q};
use crate::system::{FiniteSystem, Shape};

/// One-step evaluation rule `τ: F Ω → Ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Modality {
    /// `◇S = ⊤` iff `⊤ ∈ S`.
    Diamond,
    /// Expected value of a `[0,1]`-valued observation.
    Expectation,
    /// `τ_r(μ) = ⊤` iff `μ(⊤) ≥ r`.
    Threshold(Q),
    /// The whole family `(τ_r)_{r ∈ [0,1]}`.
    ThresholdFamily,
    /// `τ_ε(t, ρ) = t`.
    Accept,
    /// `τ_a(t, ρ) = ρ(a)`, by alphabet index.
    Letter(usize),
    /// Infimum over a set of `[0,1]` values.
    Inf,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Diamond => f.write_str("diamond"),
            Modality::Expectation => f.write_str("expectation"),
            Modality::Threshold(r) => write!(f, "threshold({})", rational::render(r)),
            Modality::ThresholdFamily => f.write_str("threshold-family"),
            Modality::Accept => f.write_str("accept"),
            Modality::Letter(a) => write!(f, "letter({a})"),
            Modality::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservationDomain {
    /// A structure over the two-point carrier `{bot, top}`.
    Finite(FiberElement),
    /// `([0,1], |·-·|)`, handled symbolically.
    UnitInterval,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationEntry {
    pub label: String,
    pub omega: ObservationDomain,
    pub modality: Modality,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObservationParams {
    entries: Vec<ObservationEntry>,
}

impl ObservationParams {
    pub fn new(entries: Vec<ObservationEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid!("observation parameters need at least one entry"));
        }
        for e in &entries {
            if let ObservationDomain::Finite(omega) = &e.omega {
                if omega.carrier() != &Carrier::two() {
                    return Err(invalid!("finite observation domains live on the two-point set"));
                }
            }
            let unit = matches!(e.omega, ObservationDomain::UnitInterval);
            let wants_unit = matches!(e.modality, Modality::Expectation | Modality::Inf);
            if unit != wants_unit {
                return Err(Error::Incompatible(alloc::format!(
                    "modality {} does not fit its observation domain",
                    e.modality
                )));
            }
            if let Modality::Threshold(r) = &e.modality {
                if !rational::in_unit_interval(r) {
                    return Err(invalid!("threshold must lie in [0,1]"));
                }
            }
        }
        Ok(ObservationParams { entries })
    }

    pub fn single(label: &str, omega: ObservationDomain, modality: Modality) -> Result<Self> {
        ObservationParams::new(vec![ObservationEntry { label: label.to_string(), omega, modality }])
    }

    pub fn entries(&self) -> &[ObservationEntry] {
        &self.entries
    }

    /// Rejects parameters that do not fit the functor of `system` or the
    /// fiber kind `kind`.
    pub fn check(&self, system: &FiniteSystem, kind: FiberKind) -> Result<()> {
        let shape = system.shape();
        for e in &self.entries {
            let fits = match e.modality {
                Modality::Diamond | Modality::Inf => shape == Shape::Powerset,
                Modality::Expectation | Modality::Threshold(_) | Modality::ThresholdFamily => {
                    shape == Shape::Subdistribution
                }
                Modality::Accept => matches!(shape, Shape::Deterministic | Shape::Nondeterministic),
                Modality::Letter(a) => {
                    matches!(shape, Shape::Deterministic | Shape::Nondeterministic) && a < system.alphabet().len()
                }
            };
            if !fits {
                return Err(Error::Incompatible(alloc::format!(
                    "modality {} does not apply to a {} system",
                    e.modality,
                    system.type_name()
                )));
            }
            match &e.omega {
                ObservationDomain::Finite(omega) if omega.kind() != kind => {
                    return Err(Error::Incompatible(alloc::format!(
                        "observation domain is a {} but the fiber is {kind}",
                        omega.kind()
                    )));
                }
                ObservationDomain::UnitInterval if kind != FiberKind::PseudoMetric => {
                    return Err(Error::Incompatible(alloc::format!(
                        "the unit interval observes pseudometrics, not {kind}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// A map `k: X → Ω`: into a finite carrier, or `[0,1]`-valued.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Observable {
    Finite(CarrierMap),
    Real(Vec<Q>),
}

impl Observable {
    /// The set `k⁻¹(⊤)` of a map into the two-point set.
    pub fn top_set(&self) -> Option<u64> {
        match self {
            Observable::Finite(k) if k.target().len() == 2 => Some(k.preimage(0b10)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservationValue {
    Point(usize),
    Real(Q),
}

fn bit(mask: u64, x: usize) -> bool {
    mask & (1u64 << x) != 0
}

fn real_values(k: &Observable) -> Result<Vec<Q>> {
    match k {
        Observable::Real(v) => Ok(v.clone()),
        Observable::Finite(m) if m.target().len() == 2 => Ok(m
            .table()
            .iter()
            .map(|&t| if t == 1 { Q::one() } else { Q::zero() })
            .collect()),
        Observable::Finite(_) => Err(Error::Incompatible("real modality needs a [0,1]-valued map".into())),
    }
}

fn top_set_of(k: &Observable) -> Result<u64> {
    match k {
        Observable::Finite(m) if m.target().len() == 2 => Ok(m.preimage(0b10)),
        _ => Err(Error::Incompatible("modality needs a map into the two-point set".into())),
    }
}

/// `(τ ∘ F k ∘ c)(state)`.
pub fn step_observation(
    system: &FiniteSystem,
    k: &Observable,
    modality: &Modality,
    state: usize,
) -> Result<ObservationValue> {
    let n = system.carrier().len();
    if state >= n {
        return Err(invalid!("state index {state} outside the system"));
    }
    let len = match k {
        Observable::Finite(m) => m.source().len(),
        Observable::Real(v) => v.len(),
    };
    if len != n {
        return Err(Error::CarrierMismatch("observation map does not cover the system".into()));
    }
    let point = |b: bool| Ok(ObservationValue::Point(b as usize));
    match (modality, system) {
        (Modality::Diamond, FiniteSystem::Kripke(f)) => point(f.successors(state) & top_set_of(k)? != 0),
        (Modality::Inf, FiniteSystem::Kripke(f)) => {
            let values = real_values(k)?;
            members(f.successors(state))
                .map(|y| values[y].clone())
                .min()
                .map(ObservationValue::Real)
                .ok_or_else(|| Error::Unsupported("infimum over an empty successor set".into()))
        }
        (Modality::Expectation, FiniteSystem::Markov(m)) => {
            Ok(ObservationValue::Real(m.expectation(state, &real_values(k)?)))
        }
        (Modality::Threshold(r), FiniteSystem::Markov(m)) => point(m.mass(state, top_set_of(k)?) >= *r),
        (Modality::ThresholdFamily, FiniteSystem::Markov(_)) => {
            Err(Error::Unsupported("the threshold family has no single value; pick a threshold".into()))
        }
        (Modality::Accept, FiniteSystem::Dfa(d)) => point(d.accepts(state)),
        (Modality::Accept, FiniteSystem::Nfa(d)) => point(d.accepts(state)),
        (Modality::Letter(a), FiniteSystem::Dfa(d)) if *a < d.alphabet().len() => {
            point(bit(top_set_of(k)?, d.step(state, *a)))
        }
        (Modality::Letter(a), FiniteSystem::Nfa(d)) if *a < d.alphabet().len() => {
            point(d.step(state, *a) & top_set_of(k)? != 0)
        }
        _ => Err(Error::Incompatible(alloc::format!(
            "modality {modality} does not apply to a {} system",
            system.type_name()
        ))),
    }
}

/// The composite `τ ∘ F k ∘ c` as a map on the whole state space.
pub fn composite(system: &FiniteSystem, k: &Observable, modality: &Modality) -> Result<Observable> {
    let carrier = system.carrier();
    let values: Result<Vec<ObservationValue>> =
        (0..carrier.len()).map(|x| step_observation(system, k, modality, x)).collect();
    let values = values?;
    if values.iter().all(|v| matches!(v, ObservationValue::Point(_))) {
        let table = values
            .into_iter()
            .map(|v| match v {
                ObservationValue::Point(p) => p,
                ObservationValue::Real(_) => unreachable!(),
            })
            .collect();
        Ok(Observable::Finite(CarrierMap::new(carrier.clone(), Carrier::two(), table)?))
    } else {
        Ok(Observable::Real(
            values
                .into_iter()
                .map(|v| match v {
                    ObservationValue::Real(r) => r,
                    ObservationValue::Point(p) => Q::from_integer((p as i64).into()),
                })
                .collect(),
        ))
    }
}

/// Every map `source → target`, lexicographic with the first element
/// varying slowest.
pub fn all_maps(source: &Carrier, target: &Carrier) -> impl Iterator<Item = CarrierMap> {
    let n = source.len();
    let m = target.len();
    let total = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let (source, target) = (source.clone(), target.clone());
    (0..total).map(move |mut i| {
        let mut table = vec![0; n];
        for slot in table.iter_mut().rev() {
            *slot = (i % m as u128) as usize;
            i /= m as u128;
        }
        CarrierMap::new(source.clone(), target.clone(), table).expect("in range")
    })
}

/// Maps `k: (X, p) → Ω` that are decent, in the order of [`all_maps`].
pub fn decent_maps(p: &FiberElement, omega: &ObservationDomain) -> Result<Vec<CarrierMap>> {
    let omega = match omega {
        ObservationDomain::Finite(o) => o,
        ObservationDomain::UnitInterval => {
            return Err(Error::Unsupported(
                "maps into [0,1] are not enumerable; use the Kantorovich program".into(),
            ))
        }
    };
    let mut out = Vec::new();
    for k in all_maps(p.carrier(), omega.carrier()) {
        if fiber::is_decent(&k, p, omega)? {
            out.push(k);
        }
    }
    Ok(out)
}

/// Thresholds at which `τ_r` can change its verdict for the masses of `set`.
fn relevant_thresholds(system: &FiniteSystem, set: u64) -> Result<Vec<Q>> {
    let chain = system.as_markov()?;
    let mut out: BTreeSet<Q> = BTreeSet::new();
    out.insert(Q::zero());
    out.insert(Q::one());
    for x in 0..chain.carrier().len() {
        out.insert(chain.mass(x, set));
    }
    Ok(out.into_iter().collect())
}

/// Observation composites contributed by one entry for the decent map `k`.
fn entry_composites(system: &FiniteSystem, entry: &ObservationEntry, k: &CarrierMap) -> Result<Vec<(Option<Q>, CarrierMap)>> {
    let obs = Observable::Finite(k.clone());
    match &entry.modality {
        Modality::ThresholdFamily => {
            let set = k.preimage(0b10);
            relevant_thresholds(system, set)?
                .into_iter()
                .map(|r| match composite(system, &obs, &Modality::Threshold(r.clone()))? {
                    Observable::Finite(g) => Ok((Some(r), g)),
                    Observable::Real(_) => unreachable!(),
                })
                .collect()
        }
        m => match composite(system, &obs, m)? {
            Observable::Finite(g) => Ok(vec![(None, g)]),
            Observable::Real(_) => Err(Error::Incompatible("finite domain with a real modality".into())),
        },
    }
}

/// `Φ(p)`.
pub fn transform(system: &FiniteSystem, params: &ObservationParams, p: &FiberElement) -> Result<FiberElement> {
    params.check(system, p.kind())?;
    if p.carrier() != system.carrier() {
        return Err(Error::CarrierMismatch("structure and system have different states".into()));
    }
    let mut parts = vec![fiber::top(p.kind(), p.carrier())];
    for entry in params.entries() {
        match &entry.omega {
            ObservationDomain::Finite(omega) => {
                for k in decent_maps(p, &entry.omega)? {
                    for (_, g) in entry_composites(system, entry, &k)? {
                        parts.push(fiber::pullback(&g, omega)?);
                    }
                }
                // Keep the working set small.
                let m = fiber::meet(&parts)?;
                parts.clear();
                parts.push(m);
            }
            ObservationDomain::UnitInterval => match entry.modality {
                Modality::Expectation => parts.push(kantorovich_transform(system, p)?),
                _ => {
                    return Err(Error::Unsupported(
                        "the infimum modality is only available through the Hausdorff check".into(),
                    ))
                }
            },
        }
    }
    fiber::meet(&parts)
}

fn kantorovich_transform(system: &FiniteSystem, p: &FiberElement) -> Result<FiberElement> {
    let chain = system.as_markov()?;
    let d = p.metric().ok_or_else(|| Error::Incompatible("expectation needs a pseudometric".into()))?;
    let n = chain.carrier().len();
    let rows: Vec<Vec<Q>> = (0..n).map(|x| chain.distribution(x)).collect();
    let mut out = Metric::zero(n);
    for x in 0..n {
        for y in x + 1..n {
            out.set_symmetric(x, y, kantorovich(d, &rows[x], &rows[y])?);
        }
    }
    FiberElement::pseudometric(p.carrier(), out)
}

/// Kantorovich distance `sup_f |E_μ f − E_ν f|` over `f: X → [0,1]`
/// non-expansive for `d`.
pub fn kantorovich(d: &Metric, mu: &[Q], nu: &[Q]) -> Result<Q> {
    kantorovich_optimizer(d, mu, nu).map(|(v, _)| v)
}

/// The Kantorovich value together with an optimal `f`, i.e. one with
/// `|E_μ f − E_ν f|` equal to the value.
pub fn kantorovich_optimizer(d: &Metric, mu: &[Q], nu: &[Q]) -> Result<(Q, Vec<Q>)> {
    let n = d.size();
    if mu.len() != n || nu.len() != n {
        return Err(Error::CarrierMismatch("distributions and metric disagree in size".into()));
    }
    let (a, b) = lipschitz_constraints(d, n, 0);
    let gap: Vec<Q> = mu.iter().zip(nu).map(|(m, v)| m - v).collect();
    let up = lp::maximize(&gap, &a, &b)?;
    let neg: Vec<Q> = gap.iter().map(|g| -g.clone()).collect();
    let down = lp::maximize(&neg, &a, &b)?;
    if down.value > up.value {
        return Ok((down.value, down.x));
    }
    Ok((up.value, up.x))
}

/// Constraints `f_x ≤ 1` and `f_x − f_y ≤ d(x,y)` over variables offset by
/// `offset` extra leading columns.
fn lipschitz_constraints(d: &Metric, n: usize, extra: usize) -> (Vec<Vec<Q>>, Vec<Q>) {
    let width = n + extra;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for x in 0..n {
        let mut row = vec![Q::zero(); width];
        row[x] = Q::one();
        a.push(row);
        b.push(Q::one());
    }
    for x in 0..n {
        for y in 0..n {
            if x != y && *d.get(x, y) < Q::one() {
                let mut row = vec![Q::zero(); width];
                row[x] = Q::one();
                row[y] = -Q::one();
                a.push(row);
                b.push(d.get(x, y).clone());
            }
        }
    }
    (a, b)
}

/// `sup_k (inf_T k − k_s)` over non-expansive `k: X → [0,1]`.
pub(crate) fn inf_gap_program(d: &Metric, s: usize, targets: &[usize]) -> Result<Q> {
    let n = d.size();
    // Variables: k_0 .. k_{n-1}, m (the infimum over `targets`).
    let (mut a, mut b) = lipschitz_constraints(d, n, 1);
    for &t in targets {
        let mut row = vec![Q::zero(); n + 1];
        row[n] = Q::one();
        row[t] = -Q::one();
        a.push(row);
        b.push(Q::zero());
    }
    let mut c = vec![Q::zero(); n + 1];
    c[n] = Q::one();
    c[s] -= Q::one();
    Ok(lp::maximize(&c, &a, &b)?.value)
}

/// A Spoiler move in the untrimmed game at `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub entry: usize,
    /// Threshold `r` for entries carrying the threshold family.
    pub threshold: Option<Q>,
    /// The observation `k` (a `[0,1]`-valued `f` for the metric instance).
    pub observable: Observable,
    /// A pair at which the observation composite fails to be decent.
    pub pair: (usize, usize),
}

/// Some `(A, k)` with `k` decent from `p` and `τ_A ∘ F k ∘ c` not decent
/// from `p`; `None` iff `p` is a codensity bisimulation.
pub fn spoiler_witness(system: &FiniteSystem, params: &ObservationParams, p: &FiberElement) -> Result<Option<Witness>> {
    spoiler_witness_relative(system, params, p, p)
}

/// Like [`spoiler_witness`] but with `k` required to be decent from
/// `reference` instead of `p`. With `reference` a Kleene iterate this gives
/// rank-decreasing Spoiler moves.
pub fn spoiler_witness_relative(
    system: &FiniteSystem,
    params: &ObservationParams,
    p: &FiberElement,
    reference: &FiberElement,
) -> Result<Option<Witness>> {
    params.check(system, p.kind())?;
    fiber::leq(p, reference).map(|_| ())?;
    for (index, entry) in params.entries().iter().enumerate() {
        match &entry.omega {
            ObservationDomain::Finite(omega) => {
                for k in decent_maps(reference, &entry.omega)? {
                    for (threshold, g) in entry_composites(system, entry, &k)? {
                        let pulled = fiber::pullback(&g, omega)?;
                        if !fiber::leq(p, &pulled)? {
                            let pair = violating_pair(p, &pulled).unwrap_or((0, 0));
                            return Ok(Some(Witness {
                                entry: index,
                                threshold,
                                observable: Observable::Finite(k),
                                pair,
                            }));
                        }
                    }
                }
            }
            ObservationDomain::UnitInterval => {
                if entry.modality != Modality::Expectation {
                    return Err(Error::Unsupported("only the expectation modality is supported here".into()));
                }
                let chain = system.as_markov()?;
                let d = p.metric().ok_or_else(|| Error::Incompatible("expectation needs a pseudometric".into()))?;
                let reference_metric = reference.metric().expect("same kind");
                let n = chain.carrier().len();
                for x in 0..n {
                    for y in x + 1..n {
                        let (value, f) =
                            kantorovich_optimizer(reference_metric, &chain.distribution(x), &chain.distribution(y))?;
                        if value > *d.get(x, y) {
                            return Ok(Some(Witness {
                                entry: index,
                                threshold: None,
                                observable: Observable::Real(f),
                                pair: (x, y),
                            }));
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Least pair (lexicographic) related by `p` but not by `q` (relations),
/// or with `p(x,y) < q(x,y)` (metrics). Topologies report `(0, 0)`.
fn violating_pair(p: &FiberElement, q: &FiberElement) -> Option<(usize, usize)> {
    let n = p.carrier().len();
    if let (Some(a), Some(b)) = (p.relation(), q.relation()) {
        return a.pairs().find(|&(x, y)| !b.contains(x, y));
    }
    if let (Some(a), Some(b)) = (p.metric(), q.metric()) {
        return (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).find(|&(x, y)| a.get(x, y) < b.get(x, y));
    }
    None
}

/// Relation-kind helper: `{(x, y) | pred(x, y)}` as an element of `kind`,
/// closed as the kind requires.
pub fn relation_element(kind: FiberKind, carrier: &Carrier, rel: Relation) -> Result<FiberElement> {
    let structure = match kind {
        FiberKind::EquivRel => fiber::Structure::EquivRel(rel.equivalence_closure()),
        FiberKind::Preorder => fiber::Structure::Preorder(rel.reflexive_transitive_closure()),
        FiberKind::EndoRel => fiber::Structure::EndoRel(rel),
        _ => return Err(Error::Unsupported(alloc::format!("{kind} is not a relation fiber"))),
    };
    FiberElement::new(carrier.clone(), structure)
}

/// Standard observation domains on the two-point set `{bot, top}`.
pub mod domains {
    use super::*;

    /// Equality on `2`.
    pub fn eq2() -> FiberElement {
        fiber::bottom(FiberKind::EquivRel, &Carrier::two())
    }

    /// Equality on `2` as an endorelation.
    pub fn eq2_endo() -> FiberElement {
        FiberElement::endorelation(&Carrier::two(), Relation::identity(2)).unwrap()
    }

    /// `(2, ≤)` with `bot ≤ top`.
    pub fn two_leq() -> FiberElement {
        FiberElement::preorder(&Carrier::two(), Relation::from_pairs(2, [(0, 0), (1, 1), (0, 1)])).unwrap()
    }

    /// `(2, ≥)`.
    pub fn two_geq() -> FiberElement {
        FiberElement::preorder(&Carrier::two(), Relation::from_pairs(2, [(0, 0), (1, 1), (1, 0)])).unwrap()
    }

    /// Sierpinski space: `{∅, {top}, 2}`.
    pub fn sierpinski() -> FiberElement {
        FiberElement::topology(&Carrier::two(), &[0, 0b10, 0b11]).unwrap()
    }

    /// Discrete topology on `2`.
    pub fn discrete2() -> FiberElement {
        fiber::bottom(FiberKind::Topology, &Carrier::two())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use num_traits::Signed;
    use crate::system::fixtures;

    fn kripke_params() -> ObservationParams {
        ObservationParams::single("diamond", ObservationDomain::Finite(domains::eq2()), Modality::Diamond).unwrap()
    }

    #[test]
    fn step_observation_examples() {
        let dead: FiniteSystem = fixtures::k_dead().into();
        let all_top = Observable::Finite(CarrierMap::new(dead.carrier().clone(), Carrier::two(), vec![1, 1]).unwrap());
        assert_eq!(step_observation(&dead, &all_top, &Modality::Diamond, 0).unwrap(), ObservationValue::Point(1));
        assert_eq!(step_observation(&dead, &all_top, &Modality::Diamond, 1).unwrap(), ObservationValue::Point(0));

        let split: FiniteSystem = fixtures::m_split().into();
        let chi_z = Observable::Real(vec![Q::zero(), Q::zero(), Q::one()]);
        let expect = |x| step_observation(&split, &chi_z, &Modality::Expectation, x).unwrap();
        assert_eq!(expect(0), ObservationValue::Real(Q::one()));
        assert_eq!(expect(1), ObservationValue::Real(q(1, 2)));
        assert_eq!(expect(2), ObservationValue::Real(Q::zero()));

        let line: FiniteSystem = fixtures::d_line().into();
        let any = Observable::Finite(CarrierMap::new(line.carrier().clone(), Carrier::two(), vec![0, 0, 0]).unwrap());
        let acc: Vec<_> = (0..3).map(|x| step_observation(&line, &any, &Modality::Accept, x).unwrap()).collect();
        assert_eq!(acc, vec![ObservationValue::Point(0), ObservationValue::Point(1), ObservationValue::Point(0)]);
    }

    #[test]
    fn incompatible_modality_rejected() {
        let dead: FiniteSystem = fixtures::k_dead().into();
        let k = Observable::Real(vec![Q::zero(), Q::one()]);
        assert!(matches!(
            step_observation(&dead, &k, &Modality::Expectation, 0),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn decent_maps_examples() {
        let c = Carrier::new(["a", "b", "c"]).unwrap();
        let p = FiberElement::partition(&c, &[vec![0, 1], vec![2]]).unwrap();
        let eq2 = ObservationDomain::Finite(domains::eq2());
        let sets: Vec<u64> = decent_maps(&p, &eq2).unwrap().iter().map(|k| k.preimage(0b10)).collect();
        assert_eq!(sets, vec![0b000, 0b100, 0b011, 0b111]);

        let id = fiber::bottom(FiberKind::EquivRel, &c);
        assert_eq!(decent_maps(&id, &eq2).unwrap().len(), 8);

        let ab = Carrier::new(["a", "b"]).unwrap();
        let a_below_b = FiberElement::preorder(&ab, Relation::from_pairs(2, [(0, 0), (1, 1), (0, 1)])).unwrap();
        let ups: Vec<u64> = decent_maps(&a_below_b, &ObservationDomain::Finite(domains::two_leq()))
            .unwrap()
            .iter()
            .map(|k| k.preimage(0b10))
            .collect();
        assert_eq!(ups, vec![0b00, 0b10, 0b11]);
        assert!(decent_maps(&a_below_b, &ObservationDomain::UnitInterval).is_err());
    }

    #[test]
    fn transform_examples() {
        let dead: FiniteSystem = fixtures::k_dead().into();
        let total = fiber::top(FiberKind::EquivRel, dead.carrier());
        let phi = transform(&dead, &kripke_params(), &total).unwrap();
        assert_eq!(phi, fiber::bottom(FiberKind::EquivRel, dead.carrier()));

        let twin: FiniteSystem = fixtures::m_twin().into();
        let params =
            ObservationParams::single("threshold", ObservationDomain::Finite(domains::eq2()), Modality::ThresholdFamily)
                .unwrap();
        let total = fiber::top(FiberKind::EquivRel, twin.carrier());
        assert_eq!(transform(&twin, &params, &total).unwrap(), total);
    }

    #[test]
    fn kantorovich_examples() {
        let one = Metric::zero(1);
        assert_eq!(kantorovich(&one, &[Q::one()], &[q(1, 2)]).unwrap(), q(1, 2));
        let mut two = Metric::discrete(2);
        two.set_symmetric(0, 1, q(3, 10));
        let (v, f) = kantorovich_optimizer(&two, &[Q::one(), Q::zero()], &[Q::zero(), Q::one()]).unwrap();
        assert_eq!(v, q(3, 10));
        assert_eq!(&f[0] - &f[1], q(3, 10));
        let mu = [q(1, 3), q(1, 3)];
        assert_eq!(kantorovich(&two, &mu, &mu).unwrap(), Q::zero());
    }

    #[test]
    fn optimizer_orientation() {
        let two = Metric::discrete(2);
        let (v, f) = kantorovich_optimizer(&two, &[Q::zero(), Q::zero()], &[Q::one(), Q::zero()]).unwrap();
        assert_eq!(v, Q::one());
        assert_eq!(f[0].abs(), v);
    }

    #[test]
    fn witness_examples() {
        let dead: FiniteSystem = fixtures::k_dead().into();
        let total = fiber::top(FiberKind::EquivRel, dead.carrier());
        let w = spoiler_witness(&dead, &kripke_params(), &total).unwrap().unwrap();
        assert_eq!(w.observable.top_set(), Some(0b11));

        let bottom = fiber::bottom(FiberKind::EquivRel, dead.carrier());
        assert!(spoiler_witness(&dead, &kripke_params(), &bottom).unwrap().is_none());

        let split: FiniteSystem = fixtures::m_split().into();
        let params = ObservationParams::single("expectation", ObservationDomain::UnitInterval, Modality::Expectation).unwrap();
        let zero = fiber::top(FiberKind::PseudoMetric, split.carrier());
        let w = spoiler_witness(&split, &params, &zero).unwrap().unwrap();
        assert_eq!(w.pair, (0, 1));
        let Observable::Real(f) = &w.observable else { panic!("real witness expected") };
        assert_eq!(f[2], Q::one());
        let chain = split.as_markov().unwrap();
        assert_eq!((chain.expectation(0, f) - chain.expectation(1, f)).abs(), q(1, 2));
    }
}
