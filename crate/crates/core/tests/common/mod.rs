//! Random finite hidden-variable models on a chain, for property sweeps.

#![allow(dead_code)]

use rand::Rng;
use sorites_core::assumptions::HiddenModel;
use sorites_core::chain::{ChainSpec, LinkKind};
use sorites_core::prob::Probability;

const QUARTERS: [i64; 5] = [0, 1, 2, 3, 4];

fn q(n: i64) -> Probability {
    Probability::ratio(n, 4)
}

#[derive(Clone, Copy, Debug)]
enum TableKind {
    /// Perfect (anti-)correlation on every link, with a marginal per λ or
    /// per experiment.
    Perfect {
        shared: bool,
    },
    /// Independent outcomes.
    Product,
    Random,
}

fn perfect(kind: LinkKind, m: &Probability) -> [Probability; 4] {
    let z = Probability::zero;
    match kind {
        LinkKind::Solid => [m.complement(), z(), z(), m.clone()],
        LinkKind::Dashed => [z(), m.complement(), m.clone(), z()],
    }
}

fn product(px: &Probability, py: &Probability) -> [Probability; 4] {
    [
        px.complement() * py.complement(),
        px.complement() * py.clone(),
        px.clone() * py.complement(),
        px.clone() * py.clone(),
    ]
}

fn random_table(rng: &mut impl Rng) -> [Probability; 4] {
    loop {
        let c: [i64; 4] = std::array::from_fn(|_| rng.gen_range(0..=3));
        let t: i64 = c.iter().sum();
        if t > 0 {
            return c.map(|v| Probability::ratio(v, t));
        }
    }
}

fn pick_kind(rng: &mut impl Rng) -> TableKind {
    match rng.gen_range(0..4) {
        0 => TableKind::Perfect { shared: true },
        1 => TableKind::Perfect { shared: false },
        2 => TableKind::Product,
        _ => TableKind::Random,
    }
}

/// A model with 1 to 3 hidden values. Half of the models make λ
/// independent of the settings; table shapes vary per model and per λ.
pub fn random_hidden_model(chain: &ChainSpec, rng: &mut impl Rng) -> HiddenModel {
    let links = chain.links();
    let k = rng.gen_range(1..=3i64);
    let independent = rng.gen_bool(0.5);
    let uniform_kind = rng.gen_bool(0.5).then(|| pick_kind(rng));
    let pair_weights: Vec<i64> = links.iter().map(|_| rng.gen_range(1..=3)).collect();

    let mut raw = Vec::new();
    for lambda in 0..k {
        let kind = uniform_kind.unwrap_or_else(|| pick_kind(rng));
        let lambda_weight = rng.gen_range(1..=4i64);
        let shared_m = q(QUARTERS[rng.gen_range(0..5)]);
        for (link, pw) in links.iter().zip(&pair_weights) {
            let w = if independent {
                lambda_weight * pw
            } else {
                rng.gen_range(0..=3i64)
            };
            let cells = match kind {
                TableKind::Perfect { shared } => {
                    let m = if shared {
                        shared_m.clone()
                    } else {
                        q(QUARTERS[rng.gen_range(0..5)])
                    };
                    perfect(link.kind, &m)
                }
                TableKind::Product => product(&q(rng.gen_range(0..=4)), &q(rng.gen_range(0..=4))),
                TableKind::Random => random_table(rng),
            };
            raw.push(((lambda, link.pair), w, cells));
        }
    }
    let mut total: i64 = raw.iter().map(|(_, w, _)| w).sum();
    if total == 0 {
        raw[0].1 = 1;
        total = 1;
    }
    let blocks = raw.into_iter().filter(|(_, w, _)| *w > 0).map(|(key, w, cells)| {
        let scale = Probability::ratio(w, total);
        (key, cells.map(|c| c * scale.clone()))
    });
    let lambdas: Vec<i64> = (0..k).collect();
    HiddenModel::from_blocks(*chain, blocks, &lambdas).expect("generated model is valid")
}
