//! Three-party GHZ correlations. Four perfect product correlations admit
//! no deterministic assignment, yet they do not force the marginals to ½:
//! the settings form no closed chain through all three parties.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assumptions::{Assumption, AssumptionVerdict, Relation, Witness};
use crate::chain::build_chain;
use crate::prob::{JointDistribution, ProbError, Probability, Tolerance, Value, Variable, VariableSchema};
use crate::sorites::{cr_lemma_check, ChainConstraints, ChainRelation, MarginalRelation, SoritesError};

/// Setting triple `(a, b, c)`, each in `{1, 2}`.
pub type Triple = [u8; 3];

/// The four triples used by the experiment. The last one is
/// anti-correlated.
pub const GHZ_TRIPLES: [Triple; 4] = [[1, 1, 2], [1, 2, 1], [2, 1, 1], [2, 2, 2]];

fn anti(t: Triple) -> bool {
    t == [2, 2, 2]
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GhzError {
    #[error("setting triple {0:?} is not one of the four GHZ triples")]
    UnusedTriple(Triple),
    #[error("no outcome table for setting triple {0:?}")]
    MissingTriple(Triple),
    #[error("setting triple {0:?} has zero weight")]
    ZeroWeight(Triple),
    #[error("setting weights sum to {0}, not 1")]
    NotNormalized(String),
    #[error("outcome table must be over X, Y, Z with domain {{-1, +1}}")]
    Schema,
    #[error(transparent)]
    Prob(#[from] ProbError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    C,
}

impl Party {
    fn index(self) -> usize {
        self as usize
    }

    fn outcome(self) -> &'static str {
        ["X", "Y", "Z"][self.index()]
    }
}

pub fn ghz_outcome_schema() -> VariableSchema {
    VariableSchema::new(vec![
        Variable::new("X", [-1, 1]),
        Variable::new("Y", [-1, 1]),
        Variable::new("Z", [-1, 1]),
    ])
    .expect("fixed schema")
}

#[derive(Clone, Debug, PartialEq)]
pub struct GhzSurfaceModel {
    setting_weights: BTreeMap<Triple, Probability>,
    outcome_tables: BTreeMap<Triple, JointDistribution>,
}

impl GhzSurfaceModel {
    pub fn new(
        setting_weights: BTreeMap<Triple, Probability>,
        outcome_tables: BTreeMap<Triple, JointDistribution>,
    ) -> Result<Self, GhzError> {
        for t in setting_weights.keys().chain(outcome_tables.keys()) {
            if !GHZ_TRIPLES.contains(t) {
                return Err(GhzError::UnusedTriple(*t));
            }
        }
        for t in GHZ_TRIPLES {
            let w = setting_weights.get(&t).ok_or(GhzError::ZeroWeight(t))?;
            if !w.is_positive() {
                return Err(GhzError::ZeroWeight(t));
            }
            let table = outcome_tables.get(&t).ok_or(GhzError::MissingTriple(t))?;
            if table.schema() != &ghz_outcome_schema() {
                return Err(GhzError::Schema);
            }
        }
        let total: Probability = setting_weights.values().sum();
        if !total.agrees(&Probability::one(), Tolerance::EXACT) {
            return Err(GhzError::NotNormalized(total.to_string()));
        }
        Ok(GhzSurfaceModel {
            setting_weights,
            outcome_tables,
        })
    }

    /// Uniform settings; each table built from `cell(triple, x, y, z)`.
    fn from_cells(cell: impl Fn(Triple, Value, Value, Value) -> Probability) -> Self {
        let weights = GHZ_TRIPLES.iter().map(|t| (*t, Probability::ratio(1, 4))).collect();
        let tables = GHZ_TRIPLES
            .iter()
            .map(|&t| {
                let entries = ghz_outcome_schema()
                    .assignments()
                    .map(|v| {
                        let p = cell(t, v[0], v[1], v[2]);
                        (v, p)
                    })
                    .collect::<Vec<_>>();
                (
                    t,
                    JointDistribution::from_positional(ghz_outcome_schema(), entries).expect("valid table"),
                )
            })
            .collect();
        GhzSurfaceModel::new(weights, tables).expect("valid model")
    }

    pub fn setting_weights(&self) -> &BTreeMap<Triple, Probability> {
        &self.setting_weights
    }

    pub fn outcome_table(&self, t: Triple) -> &JointDistribution {
        &self.outcome_tables[&t]
    }

    /// `P(party = +1 | party's setting = s)`, averaged over the triples
    /// with that setting. `None` if no triple has it.
    pub fn marginal(&self, party: Party, setting: u8) -> Option<Probability> {
        let mut mass = Probability::zero();
        let mut plus = Probability::zero();
        for t in GHZ_TRIPLES.iter().filter(|t| t[party.index()] == setting) {
            let w = self.setting_weights[t].clone();
            let p = self.outcome_tables[t]
                .prob_of(&[(party.outcome(), 1)])
                .expect("known variable");
            plus = plus + w.clone() * p;
            mass = mass + w;
        }
        mass.is_positive().then(|| plus / mass)
    }

    /// The `(Y, Z)` table at a triple, with `X` marginalized out.
    pub fn yz_table(&self, t: Triple) -> JointDistribution {
        self.outcome_tables[&t]
            .marginalize(&["Y", "Z"])
            .expect("known variables")
    }
}

/// Uniform over the four outcome triples satisfying each triple's product
/// condition.
pub fn ghz_qm_surface_model() -> GhzSurfaceModel {
    GhzSurfaceModel::from_cells(|t, x, y, z| {
        let ok = if anti(t) { y == -x * z } else { y == x * z };
        if ok {
            Probability::ratio(1, 4)
        } else {
            Probability::zero()
        }
    })
}

/// `X = +1` always; `(Y, Z)` equal and uniform, except anti-correlated at
/// `(B, C) = (2, 2)`.
pub fn build_ghz_counterexample() -> GhzSurfaceModel {
    GhzSurfaceModel::from_cells(|t, x, y, z| {
        let ok = x == 1 && if t[1] == 2 && t[2] == 2 { y == -z } else { y == z };
        if ok {
            Probability::half()
        } else {
            Probability::zero()
        }
    })
}

/// `P(Y = X·Z) = 1` at the first three triples and `P(Y ≠ X·Z) = 1` at
/// `(2, 2, 2)`.
pub fn check_ghz_correlations(model: &GhzSurfaceModel) -> AssumptionVerdict {
    let mut witnesses = Vec::new();
    for t in GHZ_TRIPLES {
        let table = model.outcome_table(t);
        let (quantity, p) = if anti(t) {
            ("P(Y≠X·Z|A=a,B=b,C=c)", table.event_prob(|c| c["Y"] != c["X"] * c["Z"]))
        } else {
            ("P(Y=X·Z|A=a,B=b,C=c)", table.event_prob(|c| c["Y"] == c["X"] * c["Z"]))
        };
        if !p.agrees(&Probability::one(), Tolerance::EXACT) {
            witnesses.push(Witness {
                lambda: None,
                setting: Some(t.iter().map(|&s| Value::from(s)).collect()),
                quantity: quantity.into(),
                lhs: p,
                rhs: Probability::one(),
                required: Relation::Equal,
            });
        }
    }
    AssumptionVerdict {
        assumption: Assumption::GhzCorrelations,
        holds: witnesses.is_empty(),
        witnesses,
        evidence: Vec::new(),
    }
}

/// Each party's outcome probability at a triple equals its one-sided
/// value given only its own setting.
pub fn check_three_party_locality(model: &GhzSurfaceModel, tol: Tolerance) -> AssumptionVerdict {
    let mut witnesses = Vec::new();
    for party in [Party::A, Party::B, Party::C] {
        for t in GHZ_TRIPLES {
            let one_sided = model
                .marginal(party, t[party.index()])
                .expect("triple has this setting");
            let here = model
                .outcome_table(t)
                .prob_of(&[(party.outcome(), 1)])
                .expect("known variable");
            if !here.agrees(&one_sided, tol) {
                witnesses.push(Witness {
                    lambda: None,
                    setting: Some(t.iter().map(|&s| Value::from(s)).collect()),
                    quantity: format!("P({o}=+1|A=a,B=b,C=c) vs P({o}=+1|{party:?})", o = party.outcome()),
                    lhs: here,
                    rhs: one_sided,
                    required: Relation::Equal,
                });
            }
        }
    }
    AssumptionVerdict {
        assumption: Assumption::ThreePartyLocality,
        holds: witnesses.is_empty(),
        witnesses,
        evidence: Vec::new(),
    }
}

/// Outcome of each particle under each of its two settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzAssignment {
    pub x: [i8; 2],
    pub y: [i8; 2],
    pub z: [i8; 2],
}

impl GhzAssignment {
    /// All 64 assignments, bit `5 - i` of the index giving the `i`-th of
    /// `x1, x2, y1, y2, z1, z2` (set bit = −1).
    pub fn all() -> impl Iterator<Item = GhzAssignment> {
        (0u8..64).map(|k| {
            let s = |i: u8| if (k >> (5 - i)) & 1 == 1 { -1 } else { 1 };
            GhzAssignment {
                x: [s(0), s(1)],
                y: [s(2), s(3)],
                z: [s(4), s(5)],
            }
        })
    }

    /// Whether `y_b = sign · x_a · z_c` for triple `(a, b, c)`.
    pub fn satisfies(&self, t: Triple, sign: i8) -> bool {
        let (a, b, c) = (usize::from(t[0] - 1), usize::from(t[1] - 1), usize::from(t[2] - 1));
        self.y[b] == sign * self.x[a] * self.z[c]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzEnumeration {
    pub satisfying: usize,
    pub total: usize,
}

/// Counts assignments meeting every `(triple, sign)` condition.
pub fn count_assignments(conditions: &[(Triple, i8)]) -> GhzEnumeration {
    let satisfying = GhzAssignment::all()
        .filter(|g| conditions.iter().all(|(t, s)| g.satisfies(*t, *s)))
        .count();
    GhzEnumeration { satisfying, total: 64 }
}

pub fn ghz_conditions() -> Vec<(Triple, i8)> {
    GHZ_TRIPLES.iter().map(|&t| (t, if anti(t) { -1 } else { 1 })).collect()
}

/// No deterministic assignment meets all four GHZ conditions.
pub fn enumerate_ghz_assignments() -> GhzEnumeration {
    let e = count_assignments(&ghz_conditions());
    assert_eq!(e.satisfying, 0, "a deterministic assignment met all GHZ conditions");
    e
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualMarginal {
    pub label: String,
    pub value: Probability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoSoritesReport {
    pub correlations: AssumptionVerdict,
    pub locality: AssumptionVerdict,
    /// `P(X=+1 | A=1)`, `P(X=+1 | A=2)`.
    pub x_marginals: [Probability; 2],
    /// `Z2, Y1, Z1, Y2` as solved from the residual chain.
    pub residual: Vec<ResidualMarginal>,
    /// Solved residual marginals equal the model's own.
    pub residual_matches_model: bool,
    /// Pinning a marginal to 1 on the N=3 photon chain is infeasible.
    pub photon_contrast_infeasible: bool,
    pub no_sorites: bool,
}

/// The counterexample satisfies the GHZ correlations and three-party
/// locality with `P(X=+1|A=·) = 1`; only the `(Y, Z)` marginals are forced
/// to ½, by the four-link residual chain `Z2 = Y1 = Z1 = Y2 = 1 − Z2`.
pub fn check_no_sorites_ghz() -> Result<NoSoritesReport, SoritesError> {
    let model = build_ghz_counterexample();
    let correlations = check_ghz_correlations(&model);
    let locality = check_three_party_locality(&model, Tolerance::EXACT);
    let x_marginals = [
        model.marginal(Party::A, 1).expect("A=1 used"),
        model.marginal(Party::A, 2).expect("A=2 used"),
    ];

    // Positions: 0 = Z(C=2), 1 = Y(B=1), 2 = Z(C=1), 3 = Y(B=2).
    let labels = ["Z2", "Y1", "Z1", "Y2"];
    let links: [(Triple, usize, usize); 4] = [
        ([1, 1, 2], 0, 1),
        ([2, 1, 1], 1, 2),
        ([1, 2, 1], 2, 3),
        ([2, 2, 2], 3, 0),
    ];
    let mut constraints = ChainConstraints::new(labels.iter().map(|s| s.to_string()).collect());
    for (t, from, to) in links {
        let yz = model.yz_table(t);
        // With X = +1 the product condition is a relation between Y and Z.
        match cr_lemma_check(&yz)?.relation {
            MarginalRelation::Equal => constraints = constraints.relate(ChainRelation::Equal(from, to)),
            MarginalRelation::Complementary => constraints = constraints.relate(ChainRelation::Complement(from, to)),
            MarginalRelation::Neither => {}
        }
    }
    let solved = constraints.solve()?;
    let own = [
        model.marginal(Party::C, 2),
        model.marginal(Party::B, 1),
        model.marginal(Party::C, 1),
        model.marginal(Party::B, 2),
    ];
    let residual_matches_model = solved.iter().zip(&own).all(|(s, o)| o.as_ref() == Some(s));
    let residual = labels
        .iter()
        .zip(solved)
        .map(|(l, value)| ResidualMarginal {
            label: l.to_string(),
            value,
        })
        .collect();

    let photon = build_chain(3).expect("N=3 is valid");
    let photon_contrast_infeasible = matches!(
        ChainConstraints::for_chain(&photon).pin(1, Probability::one()).solve(),
        Err(SoritesError::Infeasible(_))
    );

    let no_sorites = correlations.holds && locality.holds && x_marginals.iter().any(|m| *m != Probability::half());
    Ok(NoSoritesReport {
        correlations,
        locality,
        x_marginals,
        residual,
        residual_matches_model,
        photon_contrast_infeasible,
        no_sorites,
    })
}
