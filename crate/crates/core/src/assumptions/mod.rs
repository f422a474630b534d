//! Decidable checks, with violation witnesses, for the surface and
//! hidden-variable assumptions.
//!
//! Every check is a table scan over a finite model. Universal assumptions
//! report one [`Witness`] per violated instance; the existential
//! Improved Predictions assumption reports the improving instances as
//! `evidence` and, when it fails, the equalities that defeat it.

mod model;

pub use model::{HiddenModel, ModelError, DEFAULT_MAX_HIDDEN};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{xy_cells, LinkKind, SettingPair, SurfaceModel};
use crate::prob::{JointDistribution, Probability, Tolerance, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssumptionError {
    #[error("conditional probability undefined: {0}")]
    UndefinedConditional(String),
    #[error("models are built on different chains (N={left} vs N={right})")]
    ChainMismatch { left: u32, right: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Assumption {
    WeakSurfaceAutonomy,
    SurfaceLocality,
    WeakHiddenAutonomy,
    HiddenAutonomy,
    ParameterIndependence,
    OutcomeIndependence,
    ImprovedPredictions,
    QmAgreement,
    /// Perfect (anti-)correlation of every link conditional on each
    /// supported hidden value.
    ConditionalQmAgreement,
    GhzCorrelations,
    ThreePartyLocality,
}

impl Assumption {
    pub fn short_name(self) -> &'static str {
        match self {
            Assumption::WeakSurfaceAutonomy => "Weak Surface Autonomy",
            Assumption::SurfaceLocality => "Surface Locality",
            Assumption::WeakHiddenAutonomy => "Weak H.A.",
            Assumption::HiddenAutonomy => "H.A.",
            Assumption::ParameterIndependence => "P.I.",
            Assumption::OutcomeIndependence => "O.I.",
            Assumption::ImprovedPredictions => "Improved Predictions",
            Assumption::QmAgreement => "QM agreement",
            Assumption::ConditionalQmAgreement => "λ-conditional QM agreement",
            Assumption::GhzCorrelations => "GHZ correlations",
            Assumption::ThreePartyLocality => "three-party Surface Locality",
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Relation a witness's two sides were required to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Equal,
    Greater,
    Differ,
}

/// One checked instance: where, what, and the two compared values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<Value>,
    /// Setting indices: `[a, b]` for chain models, `[a, b, c]` for GHZ.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub setting: Option<Vec<Value>>,
    pub quantity: String,
    pub lhs: Probability,
    pub rhs: Probability,
    pub required: Relation,
}

impl Witness {
    fn new(
        lambda: Option<Value>,
        pair: Option<SettingPair>,
        quantity: impl Into<String>,
        lhs: Probability,
        rhs: Probability,
        required: Relation,
    ) -> Self {
        Witness {
            lambda,
            setting: pair.map(|p| vec![p.alice as Value, p.bob as Value]),
            quantity: quantity.into(),
            lhs,
            rhs,
            required,
        }
    }

    pub fn pair(&self) -> Option<SettingPair> {
        match self.setting.as_deref() {
            Some(&[a, b]) => Some(SettingPair::new(a as u32, b as u32)),
            _ => None,
        }
    }

    /// Whether the recorded values satisfy the required relation.
    pub fn relation_holds(&self, tol: Tolerance) -> bool {
        match self.required {
            Relation::Equal => self.lhs.agrees(&self.rhs, tol),
            Relation::Greater => self.lhs > self.rhs,
            Relation::Differ => !self.lhs.agrees(&self.rhs, tol),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.required {
            Relation::Equal => "=",
            Relation::Greater => ">",
            Relation::Differ => "≠",
        };
        write!(f, "{}", self.quantity)?;
        if let Some(l) = self.lambda {
            write!(f, " [λ={l}]")?;
        }
        if let Some(s) = &self.setting {
            let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            write!(f, " at ({})", parts.join(", "))?;
        }
        write!(f, ": {} {op} {} required", self.lhs, self.rhs)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionVerdict {
    pub assumption: Assumption,
    pub holds: bool,
    /// Violations. Empty exactly when the assumption holds.
    pub witnesses: Vec<Witness>,
    /// Instances establishing an existential assumption.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub evidence: Vec<Witness>,
}

impl AssumptionVerdict {
    pub(crate) fn universal(assumption: Assumption, witnesses: Vec<Witness>) -> Self {
        AssumptionVerdict {
            assumption,
            holds: witnesses.is_empty(),
            witnesses,
            evidence: Vec::new(),
        }
    }

    pub(crate) fn existential(assumption: Assumption, evidence: Vec<Witness>, against: Vec<Witness>) -> Self {
        if evidence.is_empty() {
            AssumptionVerdict {
                assumption,
                holds: false,
                witnesses: against,
                evidence,
            }
        } else {
            AssumptionVerdict {
                assumption,
                holds: true,
                witnesses: Vec::new(),
                evidence,
            }
        }
    }
}

impl fmt::Display for AssumptionVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.assumption, if self.holds { "holds" } else { "fails" })
    }
}

/// Anything with surface probabilities on a chain.
pub trait SurfaceView {
    fn surface_model(&self) -> &SurfaceModel;
}

impl SurfaceView for SurfaceModel {
    fn surface_model(&self) -> &SurfaceModel {
        self
    }
}

impl SurfaceView for HiddenModel {
    fn surface_model(&self) -> &SurfaceModel {
        self.surface()
    }
}

fn x1(c: &[Probability; 4]) -> Probability {
    c[2].clone() + c[3].clone()
}

fn y1(c: &[Probability; 4]) -> Probability {
    c[1].clone() + c[3].clone()
}

fn normalize(c: [Probability; 4]) -> Option<[Probability; 4]> {
    let mass: Probability = c.iter().sum();
    mass.is_positive().then(|| c.map(|p| p / mass.clone()))
}

fn surface_cells(surface: &SurfaceModel, pair: SettingPair) -> Result<[Probability; 4], AssumptionError> {
    surface
        .outcome_table(pair)
        .map(xy_cells)
        .ok_or_else(|| AssumptionError::UndefinedConditional(format!("P(A=a, B=b) = 0 at {pair}")))
}

const CELL_NAMES: [&str; 4] = ["P(X=0,Y=0|·)", "P(X=0,Y=1|·)", "P(X=1,Y=0|·)", "P(X=1,Y=1|·)"];

/// `P(A=a, B=b) > 0` for every `(a, b)` in the chain's setting set.
pub fn check_weak_surface_autonomy(model: &impl SurfaceView) -> AssumptionVerdict {
    let surface = model.surface_model();
    let witnesses = surface
        .chain()
        .settings()
        .into_iter()
        .filter_map(|pair| {
            let w = surface.setting_weight(pair);
            (!w.is_positive()).then(|| {
                Witness::new(
                    None,
                    Some(pair),
                    "P(A=a,B=b)",
                    w,
                    Probability::zero(),
                    Relation::Greater,
                )
            })
        })
        .collect();
    AssumptionVerdict::universal(Assumption::WeakSurfaceAutonomy, witnesses)
}

/// No-signaling over an explicit set of outcome tables, weighted by
/// `weights` when forming the one-sided conditionals. Pairs sharing no
/// angle are never compared.
fn locality_over(
    tables: &BTreeMap<SettingPair, ([Probability; 4], Probability)>,
    lambda: Option<Value>,
    tol: Tolerance,
) -> Vec<Witness> {
    let mut witnesses = Vec::new();
    let suffix = if lambda.is_some() { ",λ" } else { "" };
    for alice_side in [true, false] {
        let mut by_angle: BTreeMap<u32, Vec<(SettingPair, Probability, Probability)>> = BTreeMap::new();
        for (pair, (cells, weight)) in tables {
            let (angle, marginal) = if alice_side {
                (pair.alice, x1(cells))
            } else {
                (pair.bob, y1(cells))
            };
            by_angle
                .entry(angle)
                .or_default()
                .push((*pair, marginal, weight.clone()));
        }
        for (angle, entries) in by_angle {
            let mass: Probability = entries.iter().map(|e| &e.2).sum();
            if !mass.is_positive() {
                continue;
            }
            let one_sided: Probability = entries
                .iter()
                .map(|(_, m, w)| m.clone() * w.clone())
                .sum::<Probability>()
                / mass;
            for (pair, marginal, _) in entries {
                if !marginal.agrees(&one_sided, tol) {
                    let quantity = if alice_side {
                        format!("P(X=1|A=a,B=b{suffix}) vs P(X=1|A={angle}{suffix})")
                    } else {
                        format!("P(Y=1|A=a,B=b{suffix}) vs P(Y=1|B={angle}{suffix})")
                    };
                    witnesses.push(Witness::new(
                        lambda,
                        Some(pair),
                        quantity,
                        marginal,
                        one_sided.clone(),
                        Relation::Equal,
                    ));
                }
            }
        }
    }
    witnesses
}

/// Surface Locality checked over an arbitrary subset of experiments.
/// Holds vacuously when no angle is shared by two experiments.
pub fn check_locality_on(
    tables: &BTreeMap<SettingPair, JointDistribution>,
    weights: &BTreeMap<SettingPair, Probability>,
    tol: Tolerance,
) -> AssumptionVerdict {
    let entries = tables
        .iter()
        .map(|(pair, t)| {
            let w = weights.get(pair).cloned().unwrap_or_else(Probability::one);
            (*pair, (xy_cells(t), w))
        })
        .collect();
    AssumptionVerdict::universal(Assumption::SurfaceLocality, locality_over(&entries, None, tol))
}

/// Each wing's surface outcome probability depends only on its own setting.
pub fn check_surface_locality(model: &impl SurfaceView, tol: Tolerance) -> Result<AssumptionVerdict, AssumptionError> {
    let surface = model.surface_model();
    let mut entries = BTreeMap::new();
    for pair in surface.chain().settings() {
        let cells = surface_cells(surface, pair)?;
        entries.insert(pair, (cells, surface.setting_weight(pair)));
    }
    Ok(AssumptionVerdict::universal(
        Assumption::SurfaceLocality,
        locality_over(&entries, None, tol),
    ))
}

/// Each hidden value is compatible with either none or all of the settings.
pub fn check_weak_hidden_autonomy(model: &HiddenModel) -> AssumptionVerdict {
    let settings = model.chain().settings();
    let mut witnesses = Vec::new();
    for &lambda in model.lambdas() {
        let support: Vec<bool> = settings
            .iter()
            .map(|p| model.pair_weight(lambda, *p).is_positive())
            .collect();
        if support.iter().any(|&s| s) && !support.iter().all(|&s| s) {
            for (pair, _) in settings.iter().zip(&support).filter(|(_, s)| !**s) {
                witnesses.push(Witness::new(
                    Some(lambda),
                    Some(*pair),
                    "P(A=a,B=b,λ)",
                    model.pair_weight(lambda, *pair),
                    Probability::zero(),
                    Relation::Greater,
                ));
            }
        }
    }
    AssumptionVerdict::universal(Assumption::WeakHiddenAutonomy, witnesses)
}

fn require_surface_autonomy(model: &HiddenModel) -> Result<(), AssumptionError> {
    let v = check_weak_surface_autonomy(model);
    match v.witnesses.first().and_then(Witness::pair) {
        Some(pair) => Err(AssumptionError::UndefinedConditional(format!(
            "P(λ|A=a,B=b) needs P(A=a,B=b) > 0 at {pair}"
        ))),
        None => Ok(()),
    }
}

/// `P(λ | a, b) = P(λ)` for every hidden value and every setting pair.
pub fn check_hidden_autonomy(model: &HiddenModel, tol: Tolerance) -> Result<AssumptionVerdict, AssumptionError> {
    require_surface_autonomy(model)?;
    let surface = model.surface();
    let mut witnesses = Vec::new();
    for &lambda in model.lambdas() {
        let prior = model.lambda_weight(lambda);
        for pair in model.chain().settings() {
            let posterior = model.pair_weight(lambda, pair) / surface.setting_weight(pair);
            if !posterior.agrees(&prior, tol) {
                witnesses.push(Witness::new(
                    Some(lambda),
                    Some(pair),
                    "P(λ|A=a,B=b) vs P(λ)",
                    posterior,
                    prior.clone(),
                    Relation::Equal,
                ));
            }
        }
    }
    Ok(AssumptionVerdict::universal(Assumption::HiddenAutonomy, witnesses))
}

/// Given λ, each wing's outcome probability ignores the remote setting.
/// Compared over the setting pairs where `P(a, b, λ) > 0`.
pub fn check_parameter_independence(model: &HiddenModel, tol: Tolerance) -> AssumptionVerdict {
    let mut witnesses = Vec::new();
    for lambda in model.supported_lambdas() {
        let entries: BTreeMap<SettingPair, ([Probability; 4], Probability)> = model
            .chain()
            .settings()
            .into_iter()
            .filter_map(|pair| {
                let block = model.block(lambda, pair);
                let w: Probability = block.iter().sum();
                normalize(block).map(|cells| (pair, (cells, w)))
            })
            .collect();
        witnesses.extend(locality_over(&entries, Some(lambda), tol));
    }
    AssumptionVerdict::universal(Assumption::ParameterIndependence, witnesses)
}

/// Given λ and both settings, the two outcomes are independent. All four
/// cells are checked.
pub fn check_outcome_independence(model: &HiddenModel, tol: Tolerance) -> AssumptionVerdict {
    let mut witnesses = Vec::new();
    for lambda in model.supported_lambdas() {
        for pair in model.chain().settings() {
            let Some(c) = model.conditional_cells(lambda, pair) else {
                continue;
            };
            let px = [x1(&c).complement(), x1(&c)];
            let py = [y1(&c).complement(), y1(&c)];
            for (i, cell) in c.iter().enumerate() {
                let product = px[i / 2].clone() * py[i % 2].clone();
                if !cell.agrees(&product, tol) {
                    let quantity = format!("P(X={x},Y={y}|A=a,B=b,λ) vs P(X={x}|·)P(Y={y}|·)", x = i / 2, y = i % 2);
                    witnesses.push(Witness::new(
                        Some(lambda),
                        Some(pair),
                        quantity,
                        cell.clone(),
                        product,
                        Relation::Equal,
                    ));
                }
            }
        }
    }
    AssumptionVerdict::universal(Assumption::OutcomeIndependence, witnesses)
}

/// Some λ-conditional probability (single outcome or joint cell) differs
/// from the model's own surface probability.
pub fn check_improved_predictions(model: &HiddenModel, tol: Tolerance) -> Result<AssumptionVerdict, AssumptionError> {
    let surface = model.surface();
    let mut evidence = Vec::new();
    let mut against = Vec::new();
    for lambda in model.supported_lambdas() {
        for pair in model.chain().settings() {
            let Some(c) = model.conditional_cells(lambda, pair) else {
                continue;
            };
            let s = surface_cells(surface, pair)?;
            let mut compared = vec![
                ("P(X=1|A=a,B=b,λ) vs surface".to_string(), x1(&c), x1(&s)),
                ("P(Y=1|A=a,B=b,λ) vs surface".to_string(), y1(&c), y1(&s)),
            ];
            for i in 0..4 {
                compared.push((
                    format!("{} vs surface", CELL_NAMES[i].replace('·', "A=a,B=b,λ")),
                    c[i].clone(),
                    s[i].clone(),
                ));
            }
            for (j, (quantity, cond, surf)) in compared.into_iter().enumerate() {
                let w = Witness::new(Some(lambda), Some(pair), quantity, cond, surf, Relation::Differ);
                if w.relation_holds(tol) {
                    evidence.push(w);
                } else if j == 0 {
                    against.push(w);
                }
            }
        }
    }
    Ok(AssumptionVerdict::existential(
        Assumption::ImprovedPredictions,
        evidence,
        against,
    ))
}

/// Every outcome-table entry (and each experiment's mismatch probability)
/// agrees with the reference within `tol`.
pub fn check_qm_agreement(
    model: &impl SurfaceView,
    reference: &SurfaceModel,
    tol: Tolerance,
) -> Result<AssumptionVerdict, AssumptionError> {
    let surface = model.surface_model();
    if surface.chain() != reference.chain() {
        return Err(AssumptionError::ChainMismatch {
            left: surface.chain().n_links(),
            right: reference.chain().n_links(),
        });
    }
    let mut witnesses = Vec::new();
    for pair in surface.chain().settings() {
        let got = surface_cells(surface, pair)?;
        let want = surface_cells(reference, pair)?;
        let mismatch = |c: &[Probability; 4]| c[1].clone() + c[2].clone();
        let mut compared: Vec<(String, Probability, Probability)> = (0..4)
            .map(|i| (CELL_NAMES[i].replace('·', "A=a,B=b"), got[i].clone(), want[i].clone()))
            .collect();
        compared.push(("P(X≠Y|A=a,B=b)".into(), mismatch(&got), mismatch(&want)));
        for (quantity, g, w) in compared {
            if !g.agrees(&w, tol) {
                witnesses.push(Witness::new(None, Some(pair), quantity, g, w, Relation::Equal));
            }
        }
    }
    Ok(AssumptionVerdict::universal(Assumption::QmAgreement, witnesses))
}

/// Perfect correlation on every solid link and perfect anti-correlation on
/// the dashed link, conditional on each supported λ.
pub fn check_conditional_qm_agreement(model: &HiddenModel, tol: Tolerance) -> AssumptionVerdict {
    let mut witnesses = Vec::new();
    for lambda in model.supported_lambdas() {
        for link in model.chain().links() {
            let Some(c) = model.conditional_cells(lambda, link.pair) else {
                continue;
            };
            let (quantity, p) = match link.kind {
                LinkKind::Solid => ("P(X=Y|A=a,B=b,λ)", c[0].clone() + c[3].clone()),
                LinkKind::Dashed => ("P(X≠Y|A=a,B=b,λ)", c[1].clone() + c[2].clone()),
            };
            if !p.agrees(&Probability::one(), tol) {
                witnesses.push(Witness::new(
                    Some(lambda),
                    Some(link.pair),
                    quantity,
                    p,
                    Probability::one(),
                    Relation::Equal,
                ));
            }
        }
    }
    AssumptionVerdict::universal(Assumption::ConditionalQmAgreement, witnesses)
}

/// Whether the surface outcomes are correlated (joint ≠ product of
/// marginals) at some experiment; returns the first such pair.
pub fn surface_correlation(surface: &SurfaceModel, tol: Tolerance) -> Option<SettingPair> {
    surface.chain().settings().into_iter().find(|&pair| {
        surface.outcome_table(pair).is_some_and(|t| {
            let c = xy_cells(t);
            !c[3].agrees(&(x1(&c) * y1(&c)), tol)
        })
    })
}

#[cfg(test)]
mod tests;
