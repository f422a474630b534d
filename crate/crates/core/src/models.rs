//! Concrete hidden-variable models used as worked examples and test
//! fixtures.

use crate::assumptions::{HiddenModel, DEFAULT_MAX_HIDDEN};
use crate::chain::{qm_surface_model, ChainSpec, LinkKind, SettingPair};
use crate::prob::{Probability, Value};
use crate::strategies::DeterministicStrategy;

fn r(n: i64, d: i64) -> Probability {
    Probability::ratio(n, d)
}

fn uniform_pair_weight(chain: &ChainSpec) -> Probability {
    r(1, chain.experiment_count() as i64)
}

/// Outcome cells with `X = x`, `Y = y` certain, scaled by `w`.
fn point(x: u8, y: u8, w: Probability) -> [Probability; 4] {
    let mut c = [r(0, 1), r(0, 1), r(0, 1), r(0, 1)];
    c[usize::from(x) * 2 + usize::from(y)] = w;
    c
}

/// Independent outcomes with `P(X=1) = px`, `P(Y=1) = py`, scaled by `w`.
fn product(px: &Probability, py: &Probability, w: &Probability) -> [Probability; 4] {
    let (qx, qy) = (px.complement(), py.complement());
    [
        qx.clone() * qy.clone() * w.clone(),
        qx * py.clone() * w.clone(),
        px.clone() * qy * w.clone(),
        px.clone() * py.clone() * w.clone(),
    ]
}

/// The single-valued hidden variable over the simplified surface model.
pub fn trivial_lift(chain: &ChainSpec) -> HiddenModel {
    HiddenModel::lift(&qm_surface_model(chain, true))
}

/// The `2(N+1)` strategies breaking exactly one link: for each link, the
/// two assignments that are constant on either side of it.
pub fn one_break_strategies(chain: &ChainSpec) -> Vec<DeterministicStrategy> {
    let n = chain.n_links();
    let mut out = Vec::new();
    for flip in [false, true] {
        // Constant bits break only the dashed link.
        out.push(DeterministicStrategy::new(chain, vec![flip; (n + 1) as usize]).expect("length N+1"));
        for j in 0..n {
            // Break solid link j, joining positions j and j+1.
            let bits = (0..=n).map(|k| if k <= j { flip } else { !flip }).collect();
            out.push(DeterministicStrategy::new(chain, bits).expect("length N+1"));
        }
    }
    out
}

/// Deterministic hidden variable: `λ` indexes a strategy, independent of
/// the (uniform) settings, and fixes both outcomes at every pair.
pub fn deterministic_model(chain: &ChainSpec, strategies: &[(DeterministicStrategy, Probability)]) -> HiddenModel {
    let pw = uniform_pair_weight(chain);
    let mut blocks = Vec::new();
    for (s, w) in strategies {
        let lambda = s.index() as Value;
        for pair in chain.settings() {
            let cells = point(s.outcome(pair.alice), s.outcome(pair.bob), w.clone() * pw.clone());
            blocks.push(((lambda, pair), cells));
        }
    }
    let bound = strategies.len().max(DEFAULT_MAX_HIDDEN);
    HiddenModel::from_blocks_with_bound(*chain, blocks, &[], bound).expect("deterministic model is valid")
}

/// Uniform mixture of the one-break strategies: the local model closest
/// to the simplified surface. Every λ breaks exactly one link.
pub fn local_floor_model(chain: &ChainSpec) -> HiddenModel {
    let strategies = one_break_strategies(chain);
    let w = r(1, strategies.len() as i64);
    let weighted: Vec<_> = strategies.into_iter().map(|s| (s, w.clone())).collect();
    deterministic_model(chain, &weighted)
}

/// Perfect λ-conditional correlations on every link, reached by letting
/// Alice's outcome at 90° depend on Bob's setting.
pub fn signaling_model(chain: &ChainSpec) -> HiddenModel {
    let pw = uniform_pair_weight(chain) * Probability::half();
    let mut blocks = Vec::new();
    for lambda in [0u8, 1] {
        for link in chain.links() {
            let (x, y) = match link.kind {
                LinkKind::Solid => (lambda, lambda),
                LinkKind::Dashed => (1 - lambda, lambda),
            };
            blocks.push(((Value::from(lambda), link.pair), point(x, y, pw.clone())));
        }
    }
    HiddenModel::from_blocks(*chain, blocks, &[]).expect("signaling model is valid")
}

/// Two hidden values with product-form conditional tables, biased towards
/// 0 and towards 1. H.A., P.I. and O.I. hold; the surface is correlated.
pub fn product_model(chain: &ChainSpec) -> HiddenModel {
    let w = uniform_pair_weight(chain) * Probability::half();
    let mut blocks = Vec::new();
    for (lambda, p) in [(0, r(1, 4)), (1, r(3, 4))] {
        for pair in chain.settings() {
            blocks.push(((lambda, pair), product(&p, &p, &w)));
        }
    }
    HiddenModel::from_blocks(*chain, blocks, &[]).expect("product model is valid")
}

/// Both hidden values see every setting, but with different setting
/// weights: Weak H.A. holds, H.A. does not.
pub fn weak_ha_not_ha(chain: &ChainSpec) -> HiddenModel {
    let settings = chain.settings();
    let k = settings.len() as i64;
    let biased_total = k * (k + 1) / 2;
    let mut blocks = Vec::new();
    for (i, pair) in settings.iter().enumerate() {
        let table = qm_cells(chain, *pair);
        let w0 = r(1, 2 * k);
        let w1 = r(i as i64 + 1, 2 * biased_total);
        blocks.push(((0, *pair), table.clone().map(|c| c * w0.clone())));
        blocks.push(((1, *pair), table.map(|c| c * w1.clone())));
    }
    HiddenModel::from_blocks(*chain, blocks, &[]).expect("weak H.A. witness is valid")
}

/// Correlated conditional outcomes whose single-wing probabilities move
/// away from the surface: Improved Predictions holds, O.I. does not.
pub fn ip_not_oi(chain: &ChainSpec) -> HiddenModel {
    let w = uniform_pair_weight(chain) * Probability::half();
    let mut blocks = Vec::new();
    for (lambda, hi) in [(0, r(1, 4)), (1, r(3, 4))] {
        for pair in chain.settings() {
            let cells = [hi.complement() * w.clone(), r(0, 1), r(0, 1), hi.clone() * w.clone()];
            blocks.push(((lambda, pair), cells));
        }
    }
    HiddenModel::from_blocks(*chain, blocks, &[]).expect("I.P. witness is valid")
}

fn qm_cells(chain: &ChainSpec, pair: SettingPair) -> [Probability; 4] {
    let surface = qm_surface_model(chain, true);
    crate::chain::xy_cells(surface.outcome_table(pair).expect("uniform settings"))
}
