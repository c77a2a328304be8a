//! Hausdorff distance between subsets of a finite pseudometric space,
//! directly and as a codensity supremum.

use alloc::vec::Vec;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::fiber::{members, Metric, Subset};
use crate::lifting::inf_gap_program;
use crate::rational::{self, Q};

fn check(d: &Metric, s: Subset, t: Subset) -> Result<()> {
    let n = d.size();
    let outside = if n >= 64 { 0 } else { !((1u64 << n) - 1) };
    if s == 0 || t == 0 {
        return Err(Error::Invalid("Hausdorff distance needs nonempty subsets".into()));
    }
    if (s | t) & outside != 0 {
        return Err(Error::CarrierMismatch("subset mentions points outside the space".into()));
    }
    Ok(())
}

/// `max(sup_{x∈S} inf_{y∈T} d(x,y), sup_{y∈T} inf_{x∈S} d(x,y))`.
pub fn hausdorff_distance(d: &Metric, s: Subset, t: Subset) -> Result<Q> {
    check(d, s, t)?;
    let directed = |a: Subset, b: Subset| {
        members(a)
            .map(|x| members(b).map(|y| d.get(x, y).clone()).min().expect("nonempty"))
            .max()
            .expect("nonempty")
    };
    Ok(directed(s, t).max(directed(t, s)))
}

/// `sup_k |inf_S k − inf_T k|` over non-expansive `k: X → [0,1]`.
///
/// The distance functions `d(x,·)` are tried first; when none of them
/// reaches 1 the supremum is computed exactly by one linear program per
/// point of each subset.
pub fn hausdorff_codensity(d: &Metric, s: Subset, t: Subset) -> Result<Q> {
    check(d, s, t)?;
    let inf = |k: &[Q], set: Subset| members(set).map(|x| k[x].clone()).min().expect("nonempty");
    let n = d.size();
    let mut best = Q::zero();
    for x in 0..n {
        let k: Vec<Q> = (0..n).map(|y| d.get(x, y).clone()).collect();
        best = best.max(rational::abs_diff(&inf(&k, s), &inf(&k, t)));
    }
    if best == Q::one() {
        return Ok(best);
    }
    let targets_s: Vec<usize> = members(s).collect();
    let targets_t: Vec<usize> = members(t).collect();
    for x in members(s) {
        best = best.max(inf_gap_program(d, x, &targets_t)?);
    }
    for y in members(t) {
        best = best.max(inf_gap_program(d, y, &targets_s)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use crate::system::fixtures;

    #[test]
    fn pair_fixture() {
        let (_, d) = fixtures::h_pair();
        assert_eq!(hausdorff_distance(&d, 0b001, 0b110).unwrap(), Q::one());
        assert_eq!(hausdorff_codensity(&d, 0b001, 0b110).unwrap(), Q::one());
        assert_eq!(hausdorff_distance(&d, 0b001, 0b010).unwrap(), q(2, 5));
        assert_eq!(hausdorff_codensity(&d, 0b001, 0b010).unwrap(), q(2, 5));
        assert_eq!(hausdorff_codensity(&d, 0b011, 0b011).unwrap(), Q::zero());
        assert!(hausdorff_distance(&d, 0, 0b1).is_err());
        assert!(hausdorff_codensity(&d, 0b1, 0).is_err());
    }
}
