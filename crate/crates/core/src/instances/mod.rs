//! Concrete instances: parameters, generating sets and the games built
//! from them.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::fiber::{self, Carrier, CarrierMap, FiberElement, FiberKind};
use crate::lifting::{domains, Modality, ObservationDomain, ObservationEntry, ObservationParams};
use crate::rational::Q;
use crate::system::{FiniteSystem, Shape};

mod hausdorff;
mod metric;
mod pairs;
mod prob;
mod topology;
mod transfer;

pub use hausdorff::{hausdorff_codensity, hausdorff_distance};
pub use metric::{
    classify_metric_position, metric_duplicator_move, metric_spoiler_move, MetricDuplicatorEngine, MetricGame,
    MetricPosition, MetricSpoilerEngine, MetricVerdict, MetricPlayPosition,
};
pub use pairs::{
    build_dfa_game, build_kripke_game, build_nfa_game, build_pair_game, build_prob_game, build_similarity_game,
    build_untrimmed_game, pair_label, PairGame, PairNode, UntrimmedGame,
};
pub use prob::{
    build_desharnais_game, translate_strategy_desharnais_to_fkp, translate_strategy_fkp_to_desharnais,
    DesharnaisGame, DesharnaisToFkp, FkpToDesharnais, MemoryStrategy, TranslationCoverage,
};
pub use topology::{
    bisim_topology, topology_gfp, topology_position_check, BisimTopology, TopologyCheck, TopologyDuplicatorEngine,
    TopologyGame, TopologyPosition, TopologySpoilerEngine,
};
pub use transfer::{egli_milner_gfp, transfer_check, TransferReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimVariant {
    Lower,
    Upper,
    Convex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TopologyVariant {
    Sierpinski,
    Discrete,
}

/// Instance selection, as written on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instance {
    KripkeBisim,
    KripkeSim(SimVariant),
    ProbBisim,
    ProbBisimDesharnais,
    BisimMetric,
    DfaLang,
    NfaBisim,
    DfaTopology(TopologyVariant),
    Hausdorff,
    TransferCheck,
}

impl Instance {
    pub const ALL: [Instance; 12] = [
        Instance::KripkeBisim,
        Instance::KripkeSim(SimVariant::Lower),
        Instance::KripkeSim(SimVariant::Upper),
        Instance::KripkeSim(SimVariant::Convex),
        Instance::ProbBisim,
        Instance::ProbBisimDesharnais,
        Instance::BisimMetric,
        Instance::DfaLang,
        Instance::NfaBisim,
        Instance::DfaTopology(TopologyVariant::Sierpinski),
        Instance::DfaTopology(TopologyVariant::Discrete),
        Instance::TransferCheck,
    ];

    /// Fiber the instance computes in, if it runs a fixed point.
    pub fn kind(self) -> Option<FiberKind> {
        Some(match self {
            Instance::KripkeBisim | Instance::ProbBisim | Instance::ProbBisimDesharnais => FiberKind::EquivRel,
            Instance::DfaLang | Instance::NfaBisim => FiberKind::EquivRel,
            Instance::KripkeSim(_) => FiberKind::Preorder,
            Instance::BisimMetric => FiberKind::PseudoMetric,
            Instance::DfaTopology(_) => FiberKind::Topology,
            Instance::TransferCheck => FiberKind::EquivRel,
            Instance::Hausdorff => return None,
        })
    }

    /// Whether the instance accepts systems of this shape.
    pub fn accepts(self, shape: Shape) -> bool {
        match self {
            Instance::KripkeBisim | Instance::KripkeSim(_) | Instance::TransferCheck => shape == Shape::Powerset,
            Instance::ProbBisim | Instance::ProbBisimDesharnais | Instance::BisimMetric => {
                shape == Shape::Subdistribution
            }
            Instance::DfaLang | Instance::DfaTopology(_) => shape == Shape::Deterministic,
            Instance::NfaBisim => matches!(shape, Shape::Deterministic | Shape::Nondeterministic),
            Instance::Hausdorff => false,
        }
    }

    pub fn check_system(self, system: &FiniteSystem) -> Result<()> {
        if self.accepts(system.shape()) {
            Ok(())
        } else {
            Err(Error::Incompatible(alloc::format!("instance {self} does not apply to a {} system", system.type_name())))
        }
    }

    /// Observation parameters of the instance for `system`.
    pub fn params(self, system: &FiniteSystem) -> Result<ObservationParams> {
        self.check_system(system)?;
        let finite = ObservationDomain::Finite;
        match self {
            Instance::KripkeBisim | Instance::TransferCheck => {
                ObservationParams::single("diamond", finite(domains::eq2()), Modality::Diamond)
            }
            Instance::KripkeSim(variant) => {
                let lower = entry("lower", finite(domains::two_leq()), Modality::Diamond);
                let upper = entry("upper", finite(domains::two_geq()), Modality::Diamond);
                ObservationParams::new(match variant {
                    SimVariant::Lower => vec![lower],
                    SimVariant::Upper => vec![upper],
                    SimVariant::Convex => vec![lower, upper],
                })
            }
            Instance::ProbBisim | Instance::ProbBisimDesharnais => {
                ObservationParams::single("threshold", finite(domains::eq2()), Modality::ThresholdFamily)
            }
            Instance::BisimMetric => {
                ObservationParams::single("expectation", ObservationDomain::UnitInterval, Modality::Expectation)
            }
            Instance::DfaLang | Instance::NfaBisim => automaton_params(system, domains::eq2()),
            Instance::DfaTopology(TopologyVariant::Sierpinski) => automaton_params(system, domains::sierpinski()),
            Instance::DfaTopology(TopologyVariant::Discrete) => automaton_params(system, domains::discrete2()),
            Instance::Hausdorff => Err(Error::Unsupported("hausdorff works on metric spaces, not systems".into())),
        }
    }
}

fn entry(label: &str, omega: ObservationDomain, modality: Modality) -> ObservationEntry {
    ObservationEntry { label: label.to_string(), omega, modality }
}

/// Accept entry `ε` followed by one entry per letter.
fn automaton_params(system: &FiniteSystem, omega: FiberElement) -> Result<ObservationParams> {
    let mut entries = vec![entry("ε", ObservationDomain::Finite(omega.clone()), Modality::Accept)];
    for (i, a) in system.alphabet().iter().enumerate() {
        entries.push(entry(a, ObservationDomain::Finite(omega.clone()), Modality::Letter(i)));
    }
    ObservationParams::new(entries)
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Instance::KripkeBisim => "kripke-bisim",
            Instance::KripkeSim(SimVariant::Lower) => "kripke-sim:lower",
            Instance::KripkeSim(SimVariant::Upper) => "kripke-sim:upper",
            Instance::KripkeSim(SimVariant::Convex) => "kripke-sim:convex",
            Instance::ProbBisim => "prob-bisim",
            Instance::ProbBisimDesharnais => "prob-bisim-desharnais",
            Instance::BisimMetric => "bisim-metric",
            Instance::DfaLang => "dfa-lang",
            Instance::NfaBisim => "nfa-bisim",
            Instance::DfaTopology(TopologyVariant::Sierpinski) => "dfa-topology:sierpinski",
            Instance::DfaTopology(TopologyVariant::Discrete) => "dfa-topology:discrete",
            Instance::Hausdorff => "hausdorff",
            Instance::TransferCheck => "transfer-check",
        })
    }
}

impl FromStr for Instance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "kripke-bisim" => Instance::KripkeBisim,
            "kripke-sim" | "kripke-sim:lower" => Instance::KripkeSim(SimVariant::Lower),
            "kripke-sim:upper" => Instance::KripkeSim(SimVariant::Upper),
            "kripke-sim:convex" => Instance::KripkeSim(SimVariant::Convex),
            "prob-bisim" => Instance::ProbBisim,
            "prob-bisim-desharnais" => Instance::ProbBisimDesharnais,
            "bisim-metric" => Instance::BisimMetric,
            "dfa-lang" => Instance::DfaLang,
            "nfa-bisim" => Instance::NfaBisim,
            "dfa-topology" | "dfa-topology:sierpinski" => Instance::DfaTopology(TopologyVariant::Sierpinski),
            "dfa-topology:discrete" => Instance::DfaTopology(TopologyVariant::Discrete),
            "hausdorff" => Instance::Hausdorff,
            "transfer-check" => Instance::TransferCheck,
            other => return Err(Error::Parse(alloc::format!("unknown instance {other:?}"))),
        })
    }
}

/// A generating set of a fiber, described symbolically where it is
/// infinite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratingSet {
    /// `E_{x,y}`: the least equivalence equating `x` and `y`.
    PairGenerators(Carrier),
    /// The least preorder containing `(x,y)`.
    PreorderPairGenerators(Carrier),
    /// `d_{x,y,r}` for `x ≠ y` and `r ∈ [0,1]`.
    MetricGenerators(Carrier),
    Explicit(Vec<FiberElement>),
}

/// Map `2 → X` sending `bot ↦ x`, `top ↦ y`.
pub fn pair_map(carrier: &Carrier, x: usize, y: usize) -> Result<CarrierMap> {
    CarrierMap::new(Carrier::two(), carrier.clone(), vec![x, y])
}

/// Pushes the generators of the fiber over the two-point set forward along
/// every map `2 → X`.
pub fn generating_set_from_separator(kind: FiberKind, carrier: &Carrier) -> Result<GeneratingSet> {
    match kind {
        FiberKind::EquivRel => Ok(GeneratingSet::PairGenerators(carrier.clone())),
        FiberKind::Preorder => Ok(GeneratingSet::PreorderPairGenerators(carrier.clone())),
        FiberKind::PseudoMetric => Ok(GeneratingSet::MetricGenerators(carrier.clone())),
        FiberKind::Topology => Err(Error::Unsupported("no generating set is known for topologies".into())),
        FiberKind::EndoRel => Err(Error::Unsupported("endorelations are not generated from the two-point set".into())),
    }
}

impl GeneratingSet {
    pub fn carrier(&self) -> Option<&Carrier> {
        match self {
            GeneratingSet::PairGenerators(c)
            | GeneratingSet::PreorderPairGenerators(c)
            | GeneratingSet::MetricGenerators(c) => Some(c),
            GeneratingSet::Explicit(items) => items.first().map(FiberElement::carrier),
        }
    }

    /// Index pairs of the pair-indexed members: unordered `x < y` for
    /// equivalences and metrics, ordered `x ≠ y` for preorders.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.carrier().map_or(0, Carrier::len);
        match self {
            GeneratingSet::PairGenerators(_) | GeneratingSet::MetricGenerators(_) => {
                (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect()
            }
            GeneratingSet::PreorderPairGenerators(_) => {
                (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y))).collect()
            }
            GeneratingSet::Explicit(_) => Vec::new(),
        }
    }

    /// The member for the pair `(x, y)`, as a pushforward.
    pub fn pair_generator(&self, x: usize, y: usize) -> Result<FiberElement> {
        let base = match self {
            GeneratingSet::PairGenerators(_) => fiber::top(FiberKind::EquivRel, &Carrier::two()),
            GeneratingSet::PreorderPairGenerators(_) => domains::two_leq(),
            GeneratingSet::MetricGenerators(_) => {
                return Err(Error::Unsupported("metric generators also need a distance".into()))
            }
            GeneratingSet::Explicit(_) => return Err(Error::Unsupported("explicit sets are not pair-indexed".into())),
        };
        let carrier = self.carrier().expect("pair sets have a carrier");
        fiber::pushforward(&pair_map(carrier, x, y)?, &base)
    }

    /// `d_{x,y,r}`.
    pub fn metric_generator(&self, x: usize, y: usize, r: Q) -> Result<FiberElement> {
        match self {
            GeneratingSet::MetricGenerators(carrier) => {
                if x == y {
                    return Err(Error::Invalid("metric generators need two distinct points".into()));
                }
                fiber::pushforward(&pair_map(carrier, x, y)?, &fiber::two_point_metric(r)?)
            }
            _ => Err(Error::Unsupported("not a metric generating set".into())),
        }
    }

    /// All members, for the finite sets.
    pub fn members(&self) -> Result<Vec<FiberElement>> {
        match self {
            GeneratingSet::Explicit(items) => Ok(items.clone()),
            GeneratingSet::MetricGenerators(_) => Err(Error::Unsupported("the metric family is infinite".into())),
            _ => self.pairs().into_iter().map(|(x, y)| self.pair_generator(x, y)).collect(),
        }
    }

    /// Join of the members contained in `p`; equals `p` for a generating set.
    pub fn reconstruct(&self, p: &FiberElement) -> Result<FiberElement> {
        let mut below = vec![fiber::bottom(p.kind(), p.carrier())];
        match self {
            GeneratingSet::MetricGenerators(_) => {
                let d = p.metric().ok_or_else(|| Error::KindMismatch {
                    expected: "PseudoMetric".into(),
                    found: p.kind().to_string(),
                })?;
                for (x, y) in self.pairs() {
                    below.push(self.metric_generator(x, y, d.get(x, y).clone())?);
                }
            }
            _ => {
                for g in self.members()? {
                    if fiber::leq(&g, p)? {
                        below.push(g);
                    }
                }
            }
        }
        fiber::join(&below)
    }
}

/// Display name of a pair, `(x,y)`.
pub(crate) fn render_pair(carrier: &Carrier, x: usize, y: usize) -> String {
    alloc::format!("({},{})", carrier.name(x), carrier.name(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn instance_strings_round_trip() {
        for i in Instance::ALL {
            assert_eq!(i.to_string().parse::<Instance>().unwrap(), i);
        }
        assert_eq!("hausdorff".parse::<Instance>().unwrap(), Instance::Hausdorff);
        assert!("kripke".parse::<Instance>().is_err());
    }

    #[test]
    fn pair_generators() {
        let c = Carrier::new(["a", "b", "c"]).unwrap();
        let g = generating_set_from_separator(FiberKind::EquivRel, &c).unwrap();
        assert_eq!(g.pairs(), vec![(0, 1), (0, 2), (1, 2)]);
        let e = g.pair_generator(0, 1).unwrap();
        assert_eq!(e.blocks().unwrap(), vec![0b011, 0b100]);
        let p = FiberElement::partition(&c, &[vec![0, 2], vec![1]]).unwrap();
        assert_eq!(g.reconstruct(&p).unwrap(), p);
        assert!(generating_set_from_separator(FiberKind::Topology, &c).is_err());
    }

    #[test]
    fn metric_generators() {
        let c = Carrier::new(["a", "b"]).unwrap();
        let g = generating_set_from_separator(FiberKind::PseudoMetric, &c).unwrap();
        let d = g.metric_generator(0, 1, q(2, 5)).unwrap();
        assert_eq!(*d.metric().unwrap().get(0, 1), q(2, 5));
        assert_eq!(g.reconstruct(&d).unwrap(), d);
    }
}
