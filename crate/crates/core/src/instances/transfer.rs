//! Bisimilarity on Kripke frames computed three ways: the Egli–Milner
//! refinement, the codensity fixed point on equivalence relations and the
//! codensity fixed point on arbitrary endorelations.

use crate::error::Result;
use crate::fiber::{members, FiberKind, Relation};
use crate::fixpoint::{gfp, Mode};
use crate::lifting::{domains, Modality, ObservationDomain, ObservationParams};
use crate::system::{FiniteSystem, KripkeFrame};

use super::Instance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferReport {
    pub phi1: Relation,
    pub phi2: Relation,
    pub phi3: Relation,
    pub agree: bool,
    pub is_equivalence: bool,
}

/// Greatest relation `R` such that related states have successor sets
/// related in both directions.
pub fn egli_milner_gfp(frame: &KripkeFrame) -> Relation {
    let n = frame.carrier().len();
    let mut r = Relation::total(n);
    loop {
        let covers = |r: &Relation, a: usize, b: usize| {
            members(frame.successors(a)).all(|x| r.row(x) & frame.successors(b) != 0)
        };
        let next = Relation::from_fn(n, |x, y| {
            r.contains(x, y) && covers(&r, x, y) && covers(&r.converse(), y, x)
        });
        if next == r {
            return r;
        }
        r = next;
    }
}

pub fn transfer_check(frame: &KripkeFrame) -> Result<TransferReport> {
    let system = FiniteSystem::from(frame.clone());
    let phi1 = egli_milner_gfp(frame);
    let params = Instance::TransferCheck.params(&system)?;
    let phi2 = gfp(&system, &params, FiberKind::EquivRel, Mode::Exact)?.result;
    let endo = ObservationParams::single("diamond", ObservationDomain::Finite(domains::eq2_endo()), Modality::Diamond)?;
    let phi3 = gfp(&system, &endo, FiberKind::EndoRel, Mode::Exact)?.result;
    let phi2 = phi2.relation().expect("relation fiber").clone();
    let phi3 = phi3.relation().expect("relation fiber").clone();
    let agree = phi1 == phi2 && phi2 == phi3;
    let is_equivalence = phi1.is_equivalence();
    Ok(TransferReport { phi1, phi2, phi3, agree, is_equivalence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{fixtures, random};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixtures_agree() {
        for frame in [fixtures::k_one(), fixtures::k_dead()] {
            let report = transfer_check(&frame).unwrap();
            assert!(report.agree && report.is_equivalence, "{report:?}");
        }
        assert_eq!(transfer_check(&fixtures::k_dead()).unwrap().phi1, Relation::identity(2));
    }

    #[test]
    fn random_frames_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let frame = random::kripke(&mut rng, 4, 0.4);
            let report = transfer_check(&frame).unwrap();
            assert!(report.agree && report.is_equivalence, "{report:?}");
        }
    }
}
