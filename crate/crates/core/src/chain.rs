//! Chained two-wing experiments and their quantum predictions.
//!
//! With `N` odd and `Δθ = 90°/N`, Alice measures at the odd multiples of
//! `Δθ` and Bob at the even ones. Consecutive angles form `N` solid links
//! (outcomes should match); the two chain ends, Alice at 90° and Bob at 0°,
//! form the dashed link (outcomes should differ).

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prob::{JointDistribution, ProbError, Probability, Value, Variable, VariableSchema};

/// Variable names shared by every two-wing model.
pub mod vars {
    pub const LAMBDA: &str = "lambda";
    pub const A: &str = "A";
    pub const B: &str = "B";
    pub const X: &str = "X";
    pub const Y: &str = "Y";
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("chain length must be an odd positive integer, got {0}")]
    EvenOrNonPositiveN(i64),
    #[error("a chain of one link coincides with its closing link; use N >= 3")]
    DegenerateChain,
    #[error("angle {0} lies outside [0°, 90°]")]
    OutOfRangeAngle(String),
    #[error("setting pair {0} is not an experiment of the chain")]
    SettingOutsideChain(SettingPair),
    #[error("no outcome table for setting pair {0}")]
    MissingOutcomeTable(SettingPair),
    #[error("malformed surface model: {0}")]
    Malformed(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// An angle of `90° · steps / divisions`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle {
    steps: u32,
    divisions: u32,
}

impl Angle {
    pub fn new(steps: u32, divisions: u32) -> Self {
        assert!(divisions > 0, "angle divisions must be positive");
        let g = num_integer::gcd(steps, divisions).max(1);
        Angle {
            steps: steps / g,
            divisions: divisions / g,
        }
    }

    pub fn from_degrees(deg: u32) -> Self {
        Angle::new(deg, 90)
    }

    pub fn degrees_exact(&self) -> BigRational {
        BigRational::new(BigInt::from(90u64 * self.steps as u64), BigInt::from(self.divisions))
    }

    pub fn degrees(&self) -> f64 {
        90.0 * self.steps as f64 / self.divisions as f64
    }

    pub fn radians(&self) -> f64 {
        FRAC_PI_2 * self.steps as f64 / self.divisions as f64
    }

    fn in_range(&self) -> bool {
        self.steps <= self.divisions
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees_exact())
    }
}

/// QM probability of a mismatch, `sin²(delta)`.
///
/// Exact at 0°, 30°, 45°, 60° and 90°; floating elsewhere.
pub fn mismatch_probability(delta: Angle) -> Result<Probability, ChainError> {
    if !delta.in_range() {
        return Err(ChainError::OutOfRangeAngle(delta.to_string()));
    }
    let exact = match (delta.steps, delta.divisions) {
        (0, _) => Some(Probability::zero()),
        (1, 3) => Some(Probability::ratio(1, 4)),
        (1, 2) => Some(Probability::half()),
        (2, 3) => Some(Probability::ratio(3, 4)),
        (1, 1) => Some(Probability::one()),
        _ => None,
    };
    Ok(exact.unwrap_or_else(|| {
        let s = delta.radians().sin();
        Probability::from_f64(s * s)
    }))
}

/// The idealized curve: no mismatch below 90°, certain mismatch at 90°.
pub fn simplified_mismatch(delta: Angle) -> Result<Probability, ChainError> {
    if !delta.in_range() {
        return Err(ChainError::OutOfRangeAngle(delta.to_string()));
    }
    Ok(if delta.steps == delta.divisions {
        Probability::one()
    } else {
        Probability::zero()
    })
}

/// A setting pair, as angle indices in multiples of the chain's `Δθ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SettingPair {
    pub alice: u32,
    pub bob: u32,
}

impl SettingPair {
    pub fn new(alice: u32, bob: u32) -> Self {
        SettingPair { alice, bob }
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(A={}, B={})", self.alice, self.bob)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LinkKind {
    Solid,
    Dashed,
}

/// One experiment of the chain. `from`/`to` are the chain positions
/// (angle indices) it joins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub pair: SettingPair,
    pub kind: LinkKind,
    pub from: u32,
    pub to: u32,
}

/// The chained setting set for an odd number of solid links `N >= 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainSpec {
    n_links: u32,
}

pub fn build_chain(n_links: i64) -> Result<ChainSpec, ChainError> {
    if n_links <= 0 || n_links % 2 == 0 || n_links > u32::MAX as i64 / 2 {
        return Err(ChainError::EvenOrNonPositiveN(n_links));
    }
    if n_links == 1 {
        return Err(ChainError::DegenerateChain);
    }
    Ok(ChainSpec {
        n_links: n_links as u32,
    })
}

impl ChainSpec {
    pub fn n_links(&self) -> u32 {
        self.n_links
    }

    pub fn delta_theta(&self) -> Angle {
        Angle::new(1, self.n_links)
    }

    /// Angle of a chain position.
    pub fn angle(&self, index: u32) -> Angle {
        Angle::new(index, self.n_links)
    }

    /// Alice's angle indices: the odd multiples `1, 3, …, N`.
    pub fn alice_indices(&self) -> Vec<u32> {
        (1..=self.n_links).step_by(2).collect()
    }

    /// Bob's angle indices: the even multiples `0, 2, …, N−1`.
    pub fn bob_indices(&self) -> Vec<u32> {
        (0..self.n_links).step_by(2).collect()
    }

    pub fn experiment_count(&self) -> usize {
        self.n_links as usize + 1
    }

    /// Solid links in chain order `(p0=q1), (q1=p2), …, (p_{N−1}=q_N)`.
    pub fn solid_links(&self) -> Vec<Link> {
        (0..self.n_links)
            .map(|i| {
                let (alice, bob) = if i % 2 == 0 { (i + 1, i) } else { (i, i + 1) };
                Link {
                    pair: SettingPair::new(alice, bob),
                    kind: LinkKind::Solid,
                    from: i,
                    to: i + 1,
                }
            })
            .collect()
    }

    /// The closing experiment, Alice at 90° against Bob at 0°.
    pub fn dashed_link(&self) -> Link {
        Link {
            pair: SettingPair::new(self.n_links, 0),
            kind: LinkKind::Dashed,
            from: self.n_links,
            to: 0,
        }
    }

    /// All `N + 1` experiments: solid links in chain order, dashed last.
    pub fn links(&self) -> Vec<Link> {
        let mut v = self.solid_links();
        v.push(self.dashed_link());
        v
    }

    /// The setting set `S`.
    pub fn settings(&self) -> Vec<SettingPair> {
        self.links().into_iter().map(|l| l.pair).collect()
    }

    pub fn link_for(&self, pair: SettingPair) -> Option<Link> {
        self.links().into_iter().find(|l| l.pair == pair)
    }

    pub fn contains(&self, pair: SettingPair) -> bool {
        self.link_for(pair).is_some()
    }

    pub fn is_alice_angle(&self, index: u32) -> bool {
        index % 2 == 1 && index <= self.n_links
    }

    pub fn is_bob_angle(&self, index: u32) -> bool {
        index.is_multiple_of(2) && index < self.n_links
    }

    /// Converts a pair given in degrees to angle indices, if both are exact
    /// chain angles of the right owner.
    pub fn pair_from_degrees(&self, alice_deg: f64, bob_deg: f64) -> Option<SettingPair> {
        let to_index = |deg: f64| {
            let k = deg * self.n_links as f64 / 90.0;
            let r = k.round();
            ((k - r).abs() < 1e-9 && r >= 0.0).then_some(r as u32)
        };
        let pair = SettingPair::new(to_index(alice_deg)?, to_index(bob_deg)?);
        self.contains(pair).then_some(pair)
    }

    /// Angle between the two settings of a pair.
    pub fn separation(&self, pair: SettingPair) -> Angle {
        Angle::new(pair.alice.abs_diff(pair.bob), self.n_links)
    }
}

pub fn xy_schema() -> VariableSchema {
    VariableSchema::new(vec![Variable::new(vars::X, [0, 1]), Variable::new(vars::Y, [0, 1])]).expect("static schema")
}

/// Outcome table over `(X, Y)` from cells in the order
/// `(0,0), (0,1), (1,0), (1,1)`.
pub fn xy_table(cells: [Probability; 4]) -> Result<JointDistribution, ProbError> {
    let keys = [[0, 0], [0, 1], [1, 0], [1, 1]];
    JointDistribution::from_positional(xy_schema(), keys.into_iter().map(|k| k.to_vec()).zip(cells))
}

/// Cells of an `(X, Y)` table in the order `(0,0), (0,1), (1,0), (1,1)`.
pub fn xy_cells(table: &JointDistribution) -> [Probability; 4] {
    let xi = table.schema().index_of(vars::X).expect("X in outcome table");
    let yi = table.schema().index_of(vars::Y).expect("Y in outcome table");
    let mut out = [
        Probability::zero(),
        Probability::zero(),
        Probability::zero(),
        Probability::zero(),
    ];
    for (values, p) in table.iter() {
        let slot = (values[xi] * 2 + values[yi]) as usize;
        out[slot] = out[slot].clone() + p.clone();
    }
    out
}

fn settings_schema(chain: &ChainSpec) -> VariableSchema {
    VariableSchema::new(vec![
        Variable::new(
            vars::A,
            chain.alice_indices().into_iter().map(Value::from).collect::<Vec<_>>(),
        ),
        Variable::new(
            vars::B,
            chain.bob_indices().into_iter().map(Value::from).collect::<Vec<_>>(),
        ),
    ])
    .expect("chain angle sets are nonempty and distinct")
}

/// Surface probabilities: a distribution over the chain's setting pairs and
/// one outcome table per pair with positive weight.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceModel {
    chain: ChainSpec,
    setting_weights: JointDistribution,
    outcome_tables: BTreeMap<SettingPair, JointDistribution>,
}

impl SurfaceModel {
    /// `setting_weights` must be over `(A, B)`; each outcome table over
    /// `(X, Y)` bits. Tables for zero-weight pairs are kept if supplied.
    pub fn new(
        chain: ChainSpec,
        setting_weights: JointDistribution,
        outcome_tables: BTreeMap<SettingPair, JointDistribution>,
    ) -> Result<Self, ChainError> {
        let ai = setting_weights.schema().index_of(vars::A);
        let bi = setting_weights.schema().index_of(vars::B);
        let (ai, bi) = match (ai, bi, setting_weights.schema().len()) {
            (Some(a), Some(b), 2) => (a, b),
            _ => return Err(ChainError::Malformed("setting weights must be over (A, B)".into())),
        };
        for (values, _) in setting_weights.iter() {
            let pair = to_pair(values[ai], values[bi])?;
            if !chain.contains(pair) {
                return Err(ChainError::SettingOutsideChain(pair));
            }
            if !outcome_tables.contains_key(&pair) {
                return Err(ChainError::MissingOutcomeTable(pair));
            }
        }
        for (pair, table) in &outcome_tables {
            if !chain.contains(*pair) {
                return Err(ChainError::SettingOutsideChain(*pair));
            }
            if table.schema() != &xy_schema() {
                return Err(ChainError::Malformed(format!(
                    "outcome table for {pair} must be over bits (X, Y)"
                )));
            }
        }
        // Canonical (A, B) order.
        let setting_weights = setting_weights.marginalize(&[vars::A, vars::B])?;
        Ok(SurfaceModel {
            chain,
            setting_weights,
            outcome_tables,
        })
    }

    /// Splits a joint over `(A, B, X, Y)` into settings and conditional
    /// outcome tables.
    pub fn from_joint(chain: ChainSpec, joint: &JointDistribution) -> Result<Self, ChainError> {
        let settings = joint.marginalize(&[vars::A, vars::B])?;
        let mut tables = BTreeMap::new();
        let ai = settings.schema().index_of(vars::A).expect("A kept");
        let bi = settings.schema().index_of(vars::B).expect("B kept");
        for (values, _) in settings.iter() {
            let pair = to_pair(values[ai], values[bi])?;
            let table = joint
                .condition(&[(vars::A, values[ai]), (vars::B, values[bi])])?
                .marginalize(&[vars::X, vars::Y])?;
            tables.insert(pair, table);
        }
        SurfaceModel::new(chain, settings, tables)
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn setting_weights(&self) -> &JointDistribution {
        &self.setting_weights
    }

    pub fn outcome_tables(&self) -> &BTreeMap<SettingPair, JointDistribution> {
        &self.outcome_tables
    }

    pub fn setting_weight(&self, pair: SettingPair) -> Probability {
        self.setting_weights.weight(&[pair.alice as Value, pair.bob as Value])
    }

    /// Outcome table of a pair, if the pair has positive setting weight.
    pub fn outcome_table(&self, pair: SettingPair) -> Option<&JointDistribution> {
        if self.setting_weight(pair).is_positive() {
            self.outcome_tables.get(&pair)
        } else {
            None
        }
    }

    pub fn is_exact(&self) -> bool {
        self.setting_weights.is_exact() && self.outcome_tables.values().all(|t| t.is_exact())
    }

    /// Recombines settings and outcome tables into a joint over
    /// `(A, B, X, Y)`.
    pub fn to_joint(&self) -> Result<JointDistribution, ChainError> {
        let schema = VariableSchema::new(vec![
            self.setting_weights.schema().variables()[0].clone(),
            self.setting_weights.schema().variables()[1].clone(),
            Variable::new(vars::X, [0, 1]),
            Variable::new(vars::Y, [0, 1]),
        ])?;
        let mut entries = Vec::new();
        for (values, w) in self.setting_weights.iter() {
            let pair = to_pair(values[0], values[1])?;
            let table = &self.outcome_tables[&pair];
            for (xy, p) in table.iter() {
                entries.push((vec![values[0], values[1], xy[0], xy[1]], w.clone() * p.clone()));
            }
        }
        Ok(JointDistribution::from_positional(schema, entries)?)
    }
}

pub(crate) fn to_pair(a: Value, b: Value) -> Result<SettingPair, ChainError> {
    let conv = |v: Value| u32::try_from(v).map_err(|_| ChainError::Malformed(format!("negative angle index {v}")));
    Ok(SettingPair::new(conv(a)?, conv(b)?))
}

/// Uniform settings over `S` with perfectly balanced outcome tables whose
/// mismatch mass follows the QM (or simplified) curve.
pub fn qm_surface_model(chain: &ChainSpec, simplified: bool) -> SurfaceModel {
    let n = chain.experiment_count() as i64;
    let settings = JointDistribution::from_positional(
        settings_schema(chain),
        chain
            .settings()
            .into_iter()
            .map(|p| (vec![p.alice as Value, p.bob as Value], Probability::ratio(1, n))),
    )
    .expect("uniform weights are normalized");
    let tables = chain
        .settings()
        .into_iter()
        .map(|pair| {
            let delta = chain.separation(pair);
            let m = if simplified {
                simplified_mismatch(delta)
            } else {
                mismatch_probability(delta)
            }
            .expect("chain separations lie in [0°, 90°]");
            (pair, balanced_table(&m))
        })
        .collect();
    SurfaceModel::new(*chain, settings, tables).expect("constructed on the chain")
}

/// Outcome table with ½ marginals and mismatch mass `m` split evenly.
pub fn balanced_table(m: &Probability) -> JointDistribution {
    let half_match = m.complement() * Probability::half();
    let half_mismatch = m.clone() * Probability::half();
    xy_table([half_match.clone(), half_mismatch.clone(), half_mismatch, half_match])
        .expect("balanced table is normalized")
}

/// Probability that none of the `N` solid links shows a mismatch when each
/// is run once, independently.
pub fn prob_no_link_broken(n_links: i64) -> Result<Probability, ChainError> {
    let chain = build_chain(n_links)?;
    let keep = mismatch_probability(chain.delta_theta())?.complement();
    Ok((0..chain.n_links()).fold(Probability::one(), |acc, _| acc * keep.clone()))
}
