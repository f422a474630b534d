//! Deterministic local strategies: every pre-agreed assignment of an
//! outcome bit to each angle breaks at least one link of the chain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{mismatch_probability, Angle, ChainSpec, Link, LinkKind};
use crate::prob::Probability;

/// Largest chain for which strategies are enumerated (2^26 strategies).
pub const MAX_ENUMERATED_LINKS: u32 = 25;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyError {
    #[error("N={0} is too large to enumerate (limit {MAX_ENUMERATED_LINKS})")]
    ChainTooLarge(u32),
    #[error("strategy covers {found} angles, chain has {expected}")]
    WrongLength { found: usize, expected: usize },
}

/// One outcome bit per angle index `0..=N`. Even indices are Bob's map,
/// odd indices Alice's.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    bits: Vec<bool>,
}

impl DeterministicStrategy {
    pub fn new(chain: &ChainSpec, bits: Vec<bool>) -> Result<Self, StrategyError> {
        let expected = chain.experiment_count();
        if bits.len() != expected {
            return Err(StrategyError::WrongLength {
                found: bits.len(),
                expected,
            });
        }
        Ok(DeterministicStrategy { bits })
    }

    /// Strategy number `k` in lexicographic order: angle index 0 is the
    /// most significant bit.
    pub fn from_index(chain: &ChainSpec, k: u64) -> Self {
        let n = chain.n_links();
        let bits = (0..=n).map(|j| (k >> (n - j)) & 1 == 1).collect();
        DeterministicStrategy { bits }
    }

    pub fn index(&self) -> u64 {
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Outcome at any angle index, regardless of wing.
    pub fn outcome(&self, angle_index: u32) -> u8 {
        u8::from(self.bits[angle_index as usize])
    }

    pub fn alice(&self, angle_index: u32) -> Option<u8> {
        (angle_index % 2 == 1).then(|| self.outcome(angle_index))
    }

    pub fn bob(&self, angle_index: u32) -> Option<u8> {
        angle_index.is_multiple_of(2).then(|| self.outcome(angle_index))
    }
}

/// All `2^(N+1)` strategies, all-zeros first.
pub fn enumerate_strategies(
    chain: &ChainSpec,
) -> Result<impl Iterator<Item = DeterministicStrategy> + '_, StrategyError> {
    let n = chain.n_links();
    if n > MAX_ENUMERATED_LINKS {
        return Err(StrategyError::ChainTooLarge(n));
    }
    Ok((0..1u64 << (n + 1)).map(move |k| DeterministicStrategy::from_index(chain, k)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrokenLinks {
    pub count: usize,
    pub links: Vec<Link>,
}

pub fn is_broken(strategy: &DeterministicStrategy, link: &Link) -> bool {
    let same = strategy.outcome(link.pair.alice) == strategy.outcome(link.pair.bob);
    match link.kind {
        LinkKind::Solid => !same,
        LinkKind::Dashed => same,
    }
}

pub fn broken_links(strategy: &DeterministicStrategy, chain: &ChainSpec) -> BrokenLinks {
    let links: Vec<Link> = chain.links().into_iter().filter(|l| is_broken(strategy, l)).collect();
    BrokenLinks {
        count: links.len(),
        links,
    }
}

/// Broken-link count of strategy `k` straight from its bit pattern.
fn broken_count(n: u32, k: u64) -> u32 {
    let solid_mask = (1u64 << n) - 1;
    let solid = ((k ^ (k >> 1)) & solid_mask).count_ones();
    let first = (k >> n) & 1;
    let last = k & 1;
    solid + u32::from(first == last)
}

/// Minimum over strategies of the number of broken links. A mixture's
/// expected count is an average of these, so the minimum over mixtures is
/// the same.
pub fn local_min_total_failure(chain: &ChainSpec) -> Result<Probability, StrategyError> {
    let n = chain.n_links();
    if n > MAX_ENUMERATED_LINKS {
        return Err(StrategyError::ChainTooLarge(n));
    }
    let min = (0..1u64 << (n + 1))
        .map(|k| broken_count(n, k))
        .min()
        .expect("at least one strategy");
    assert_eq!(min, 1, "a local strategy satisfied the whole chain");
    Ok(Probability::ratio(i64::from(min), 1))
}

/// Expected number of failed links under quantum mechanics:
/// `N·sin²(Δθ) + (1 − sin²(90°))`.
pub fn qm_expected_failures(chain: &ChainSpec) -> Probability {
    let solid = mismatch_probability(chain.delta_theta()).expect("chain step is in range");
    let dashed = mismatch_probability(Angle::from_degrees(90)).expect("90 degrees is in range");
    Probability::ratio(i64::from(chain.n_links()), 1) * solid + dashed.complement()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;

    #[test]
    fn enumeration_counts_and_order() {
        let c3 = build_chain(3).unwrap();
        let all: Vec<_> = enumerate_strategies(&c3).unwrap().collect();
        assert_eq!(all.len(), 16);
        assert!(all[0].bits().iter().all(|b| !b));
        assert!(all.iter().enumerate().all(|(k, s)| s.index() == k as u64));
        assert_eq!(all[1].bits(), &[false, false, false, true]);
        assert_eq!(enumerate_strategies(&build_chain(5).unwrap()).unwrap().count(), 64);
        assert_eq!(enumerate_strategies(&build_chain(7).unwrap()).unwrap().count(), 256);
        let big = build_chain(27).unwrap();
        assert!(matches!(
            enumerate_strategies(&big),
            Err(StrategyError::ChainTooLarge(27))
        ));
        assert!(matches!(
            local_min_total_failure(&big),
            Err(StrategyError::ChainTooLarge(27))
        ));
    }

    #[test]
    fn all_zeros_breaks_only_dashed() {
        for n in [3, 5, 45] {
            let c = build_chain(n).unwrap();
            let s = DeterministicStrategy::new(&c, vec![false; c.experiment_count()]).unwrap();
            let b = broken_links(&s, &c);
            assert_eq!(b.count, 1);
            assert_eq!(b.links[0], c.dashed_link());
        }
    }

    #[test]
    fn flipping_last_alice_angle() {
        let c = build_chain(3).unwrap();
        let s = DeterministicStrategy::new(&c, vec![false, false, false, true]).unwrap();
        assert_eq!(s.alice(3), Some(1));
        assert_eq!(s.bob(3), None);
        let b = broken_links(&s, &c);
        assert_eq!(b.count, 1);
        assert_eq!(b.links[0].kind, LinkKind::Solid);
        assert_eq!((b.links[0].pair.alice, b.links[0].pair.bob), (3, 2));
    }

    #[test]
    fn every_strategy_breaks_an_odd_number_of_links() {
        for n in [3, 5, 7, 9] {
            let c = build_chain(n).unwrap();
            for s in enumerate_strategies(&c).unwrap() {
                let b = broken_links(&s, &c);
                assert!(b.count >= 1);
                assert_eq!(b.count % 2, 1);
                assert_eq!(b.count as u32, broken_count(c.n_links(), s.index()));
            }
        }
    }

    #[test]
    fn local_floor_is_one() {
        for n in [3, 5, 7, 9, 11, 13, 15] {
            assert_eq!(
                local_min_total_failure(&build_chain(n).unwrap()).unwrap(),
                Probability::one()
            );
        }
    }

    #[test]
    fn qm_failures() {
        assert_eq!(qm_expected_failures(&build_chain(3).unwrap()), Probability::ratio(3, 4));
        let f45 = qm_expected_failures(&build_chain(45).unwrap()).to_f64();
        assert!((f45 - 0.054_808_869_153_954_43).abs() < 1e-12, "{f45}");
        assert!((f45 - std::f64::consts::PI.powi(2) / 180.0).abs() < 1e-3);
        let seq: Vec<f64> = [5, 15, 45, 135, 405]
            .iter()
            .map(|&n| qm_expected_failures(&build_chain(n).unwrap()).to_f64())
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!(seq[0] < 1.0);
    }
}
