//! Greatest fixed points by Kleene iteration from the top of a fiber.

use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{invalid, Error, Result};
use crate::fiber::{self, FiberElement, FiberKind};
use crate::lifting::{self, ObservationParams};
use crate::rational::{self, Q};
use crate::system::FiniteSystem;

/// Default stopping tolerance for the pseudometric fiber.
pub fn default_tolerance() -> Q {
    rational::q(1, 1_000_000)
}

/// Iteration cap used when the pseudometric fiber is run in exact mode.
pub const DEFAULT_METRIC_CAP: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Tolerance(Q),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixpointReport {
    pub result: FiberElement,
    /// Number of transformer applications.
    pub iterations: usize,
    pub mode: Mode,
    pub converged: bool,
    /// The Kleene chain `⊤, Φ⊤, Φ²⊤, …` up to and including `result`.
    pub history: Vec<FiberElement>,
    /// Largest entry change in the last step (zero on finite lattices).
    pub residual: Q,
}

impl FixpointReport {
    /// Least `n` such that `history[n]` does not satisfy `holds`.
    pub fn first_failure(&self, mut holds: impl FnMut(&FiberElement) -> bool) -> Option<usize> {
        self.history.iter().position(|p| !holds(p))
    }
}

/// `νΦ` for the codensity transformer of `params` on the `kind` fiber.
pub fn gfp(system: &FiniteSystem, params: &ObservationParams, kind: FiberKind, mode: Mode) -> Result<FixpointReport> {
    gfp_capped(system, params, kind, mode, DEFAULT_METRIC_CAP)
}

pub fn gfp_capped(
    system: &FiniteSystem,
    params: &ObservationParams,
    kind: FiberKind,
    mode: Mode,
    cap: usize,
) -> Result<FixpointReport> {
    params.check(system, kind)?;
    if kind.is_finite_lattice() && mode != Mode::Exact {
        return Err(invalid!("tolerance mode is only meaningful on the pseudometric fiber"));
    }
    if let Mode::Tolerance(eps) = &mode {
        if eps <= &Q::zero() {
            return Err(invalid!("tolerance must be positive"));
        }
    }
    let mut current = fiber::top(kind, system.carrier());
    let mut history = alloc::vec![current.clone()];
    let mut iterations = 0;
    loop {
        let next = lifting::transform(system, params, &current)?;
        iterations += 1;
        if !fiber::leq(&next, &current)? {
            return Err(Error::Invalid("Kleene chain is not descending".into()));
        }
        let residual = match (next.metric(), current.metric()) {
            (Some(a), Some(b)) => a.max_abs_diff(b),
            _ => Q::zero(),
        };
        let stable = next == current;
        history.push(next.clone());
        let done = match &mode {
            Mode::Exact => stable,
            Mode::Tolerance(eps) => residual <= *eps,
        };
        if done || iterations >= cap {
            return Ok(FixpointReport {
                result: next,
                iterations,
                converged: done,
                mode,
                history,
                residual,
            });
        }
        current = next;
    }
}

/// Whether `p ⊑ Φ(p)`.
pub fn is_bisimulation(system: &FiniteSystem, params: &ObservationParams, p: &FiberElement) -> Result<bool> {
    fiber::leq(p, &lifting::transform(system, params, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifting::{domains, Modality, ObservationDomain};
    use crate::rational::q;
    use crate::system::fixtures;

    fn kripke_params() -> ObservationParams {
        ObservationParams::single("diamond", ObservationDomain::Finite(domains::eq2()), Modality::Diamond).unwrap()
    }

    #[test]
    fn kripke_fixtures() {
        let one: FiniteSystem = fixtures::k_one().into();
        let r = gfp(&one, &kripke_params(), FiberKind::EquivRel, Mode::Exact).unwrap();
        assert_eq!(r.result, fiber::top(FiberKind::EquivRel, one.carrier()));
        assert!(r.converged);

        let dead: FiniteSystem = fixtures::k_dead().into();
        let r = gfp(&dead, &kripke_params(), FiberKind::EquivRel, Mode::Exact).unwrap();
        assert_eq!(r.result.blocks().unwrap(), alloc::vec![0b01, 0b10]);
        assert!(r.iterations <= dead.carrier().len());
    }

    #[test]
    fn metric_fixture() {
        let split: FiniteSystem = fixtures::m_split().into();
        let params = ObservationParams::single("e", ObservationDomain::UnitInterval, Modality::Expectation).unwrap();
        let r = gfp(&split, &params, FiberKind::PseudoMetric, Mode::Tolerance(default_tolerance())).unwrap();
        let d = r.result.metric().unwrap();
        assert_eq!(*d.get(0, 1), q(1, 2));
        assert_eq!(*d.get(0, 2), q(1, 1));
        assert_eq!(*d.get(1, 2), q(1, 2));
        assert_eq!(r.iterations, 2);
        assert!(r.converged);
    }

    #[test]
    fn tolerance_on_finite_lattice_rejected() {
        let dead: FiniteSystem = fixtures::k_dead().into();
        assert!(gfp(&dead, &kripke_params(), FiberKind::EquivRel, Mode::Tolerance(q(1, 10))).is_err());
    }

    #[test]
    fn bisimulation_checks() {
        let dead: FiniteSystem = fixtures::k_dead().into();
        let params = kripke_params();
        assert!(is_bisimulation(&dead, &params, &fiber::bottom(FiberKind::EquivRel, dead.carrier())).unwrap());
        assert!(!is_bisimulation(&dead, &params, &fiber::top(FiberKind::EquivRel, dead.carrier())).unwrap());
    }
}
