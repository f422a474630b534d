use std::collections::BTreeMap;

use thiserror::Error;

use crate::chain::{self, vars, ChainError, ChainSpec, SettingPair, SurfaceModel};
use crate::prob::{JointDistribution, ProbError, Probability, Value, Variable, VariableSchema};

/// Default bound on the number of hidden-variable values.
pub const DEFAULT_MAX_HIDDEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("hidden model must be over (lambda, A, B, X, Y); {0}")]
    Schema(String),
    #[error("hidden variable has {found} values, more than the bound of {bound}")]
    TooManyHiddenValues { found: usize, bound: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

/// Joint distribution over `(λ, A, B, X, Y)` for a finite `Λ`, tied to a
/// chain.
#[derive(Clone, Debug)]
pub struct HiddenModel {
    chain: ChainSpec,
    joint: JointDistribution,
    lambdas: Vec<Value>,
    lambda_weights: BTreeMap<Value, Probability>,
    // Joint weights P(λ, a, b, x, y) per (λ, pair), cells in (0,0),(0,1),(1,0),(1,1) order.
    blocks: BTreeMap<(Value, SettingPair), [Probability; 4]>,
    surface: SurfaceModel,
}

impl PartialEq for HiddenModel {
    fn eq(&self, other: &Self) -> bool {
        self.chain == other.chain && self.joint == other.joint
    }
}

fn zero4() -> [Probability; 4] {
    [
        Probability::zero(),
        Probability::zero(),
        Probability::zero(),
        Probability::zero(),
    ]
}

fn hidden_schema(chain: &ChainSpec, lambdas: &[Value]) -> VariableSchema {
    VariableSchema::new(vec![
        Variable::new(vars::LAMBDA, lambdas.to_vec()),
        Variable::new(
            vars::A,
            chain.alice_indices().into_iter().map(Value::from).collect::<Vec<_>>(),
        ),
        Variable::new(
            vars::B,
            chain.bob_indices().into_iter().map(Value::from).collect::<Vec<_>>(),
        ),
        Variable::new(vars::X, [0, 1]),
        Variable::new(vars::Y, [0, 1]),
    ])
    .expect("hidden schema is well formed")
}

impl HiddenModel {
    pub fn new(chain: ChainSpec, joint: JointDistribution) -> Result<Self, ModelError> {
        Self::with_bound(chain, joint, DEFAULT_MAX_HIDDEN)
    }

    pub fn with_bound(chain: ChainSpec, joint: JointDistribution, max_hidden: usize) -> Result<Self, ModelError> {
        let schema = joint.schema();
        if schema.len() != 5 {
            return Err(ModelError::Schema(format!("found {} variables", schema.len())));
        }
        let idx = |name: &str| {
            schema
                .index_of(name)
                .ok_or_else(|| ModelError::Schema(format!("missing `{name}`")))
        };
        let (li, ai, bi, xi, yi) = (
            idx(vars::LAMBDA)?,
            idx(vars::A)?,
            idx(vars::B)?,
            idx(vars::X)?,
            idx(vars::Y)?,
        );
        for (name, i) in [(vars::X, xi), (vars::Y, yi)] {
            let mut d = schema.variables()[i].domain.clone();
            d.sort_unstable();
            if d != [0, 1] {
                return Err(ModelError::Schema(format!("`{name}` must have domain {{0, 1}}")));
            }
        }
        for &a in &schema.variables()[ai].domain {
            if !u32::try_from(a).is_ok_and(|a| chain.is_alice_angle(a)) {
                return Err(ModelError::Schema(format!("A={a} is not one of Alice's chain angles")));
            }
        }
        for &b in &schema.variables()[bi].domain {
            if !u32::try_from(b).is_ok_and(|b| chain.is_bob_angle(b)) {
                return Err(ModelError::Schema(format!("B={b} is not one of Bob's chain angles")));
            }
        }
        let lambdas = schema.variables()[li].domain.clone();
        if lambdas.len() > max_hidden {
            return Err(ModelError::TooManyHiddenValues {
                found: lambdas.len(),
                bound: max_hidden,
            });
        }

        let mut blocks: BTreeMap<(Value, SettingPair), [Probability; 4]> = BTreeMap::new();
        let mut lambda_weights: BTreeMap<Value, Probability> =
            lambdas.iter().map(|&l| (l, Probability::zero())).collect();
        for (values, p) in joint.iter() {
            let pair = chain::to_pair(values[ai], values[bi])?;
            if !chain.contains(pair) {
                return Err(ChainError::SettingOutsideChain(pair).into());
            }
            let lambda = values[li];
            let cell = (values[xi] * 2 + values[yi]) as usize;
            let block = blocks.entry((lambda, pair)).or_insert_with(zero4);
            block[cell] = block[cell].clone() + p.clone();
            let lw = lambda_weights.get_mut(&lambda).expect("lambda in domain");
            *lw = lw.clone() + p.clone();
        }

        let surface_joint = joint.marginalize(&[vars::A, vars::B, vars::X, vars::Y])?;
        let surface = SurfaceModel::from_joint(chain, &surface_joint)?;
        Ok(HiddenModel {
            chain,
            joint,
            lambdas,
            lambda_weights,
            blocks,
            surface,
        })
    }

    /// Builds a model from joint weights `P(λ, a, b, x, y)` given per
    /// `(λ, pair)` block. Hidden values are the distinct `λ` seen, plus any
    /// listed in `extra_lambdas`.
    pub fn from_blocks<I>(chain: ChainSpec, blocks: I, extra_lambdas: &[Value]) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = ((Value, SettingPair), [Probability; 4])>,
    {
        Self::from_blocks_with_bound(chain, blocks, extra_lambdas, DEFAULT_MAX_HIDDEN)
    }

    pub fn from_blocks_with_bound<I>(
        chain: ChainSpec,
        blocks: I,
        extra_lambdas: &[Value],
        max_hidden: usize,
    ) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = ((Value, SettingPair), [Probability; 4])>,
    {
        let blocks: Vec<_> = blocks.into_iter().collect();
        let mut lambdas: Vec<Value> = blocks
            .iter()
            .map(|((l, _), _)| *l)
            .chain(extra_lambdas.iter().copied())
            .collect();
        lambdas.sort_unstable();
        lambdas.dedup();
        if lambdas.is_empty() {
            return Err(ModelError::Schema("no hidden values".into()));
        }
        let schema = hidden_schema(&chain, &lambdas);
        let mut entries = Vec::new();
        for ((lambda, pair), cells) in blocks {
            for (i, p) in cells.into_iter().enumerate() {
                entries.push((
                    vec![
                        lambda,
                        pair.alice as Value,
                        pair.bob as Value,
                        (i / 2) as Value,
                        (i % 2) as Value,
                    ],
                    p,
                ));
            }
        }
        let joint = JointDistribution::from_positional(schema, entries)?;
        HiddenModel::with_bound(chain, joint, max_hidden)
    }

    /// The trivial single-valued hidden variable over a surface model.
    pub fn lift(surface: &SurfaceModel) -> Self {
        let chain = *surface.chain();
        let blocks = surface.outcome_tables().keys().filter_map(|&pair| {
            let w = surface.setting_weight(pair);
            let table = surface.outcome_table(pair)?;
            Some(((0, pair), chain::xy_cells(table).map(|c| c * w.clone())))
        });
        HiddenModel::from_blocks(chain, blocks, &[0]).expect("lift of a valid surface model")
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn joint(&self) -> &JointDistribution {
        &self.joint
    }

    pub fn surface(&self) -> &SurfaceModel {
        &self.surface
    }

    /// All hidden values in domain order, including zero-weight ones.
    pub fn lambdas(&self) -> &[Value] {
        &self.lambdas
    }

    pub fn lambda_weight(&self, lambda: Value) -> Probability {
        self.lambda_weights
            .get(&lambda)
            .cloned()
            .unwrap_or_else(Probability::zero)
    }

    /// Hidden values with positive weight.
    pub fn supported_lambdas(&self) -> impl Iterator<Item = Value> + '_ {
        self.lambdas
            .iter()
            .copied()
            .filter(|l| self.lambda_weight(*l).is_positive())
    }

    /// `P(A=a, B=b, λ)`.
    pub fn pair_weight(&self, lambda: Value, pair: SettingPair) -> Probability {
        self.blocks
            .get(&(lambda, pair))
            .map(|c| c.iter().sum())
            .unwrap_or_else(Probability::zero)
    }

    /// Joint weights `P(λ, a, b, x, y)` for the four outcome cells.
    pub fn block(&self, lambda: Value, pair: SettingPair) -> [Probability; 4] {
        self.blocks.get(&(lambda, pair)).cloned().unwrap_or_else(zero4)
    }

    /// `P(x, y | a, b, λ)` cells, or `None` if `P(a, b, λ) = 0`.
    pub fn conditional_cells(&self, lambda: Value, pair: SettingPair) -> Option<[Probability; 4]> {
        let block = self.blocks.get(&(lambda, pair))?;
        let mass: Probability = block.iter().sum();
        mass.is_positive().then(|| block.clone().map(|c| c / mass.clone()))
    }

    pub fn is_exact(&self) -> bool {
        self.joint.is_exact()
    }

    /// Same model with all weights converted to floating point.
    pub fn to_float(&self) -> Self {
        HiddenModel::with_bound(self.chain, self.joint.to_float(), usize::MAX).expect("float copy of a valid model")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_chain, qm_surface_model};

    #[test]
    fn lift_preserves_surface() {
        let c = build_chain(5).unwrap();
        let s = qm_surface_model(&c, true);
        let h = HiddenModel::lift(&s);
        assert_eq!(h.surface(), &s);
        assert_eq!(h.lambdas(), &[0]);
        assert_eq!(h.lambda_weight(0), Probability::one());
    }

    #[test]
    fn rejects_bad_schema() {
        let c = build_chain(3).unwrap();
        let s = qm_surface_model(&c, true);
        let surface_joint = s.to_joint().unwrap();
        assert!(matches!(HiddenModel::new(c, surface_joint), Err(ModelError::Schema(_))));
        let five = build_chain(5).unwrap();
        let h = HiddenModel::lift(&qm_surface_model(&five, true));
        assert!(HiddenModel::new(c, h.joint().clone()).is_err());
    }

    #[test]
    fn hidden_value_bound() {
        let c = build_chain(3).unwrap();
        let pair = c.settings()[0];
        let blocks = (0..3).map(|l| {
            let q = Probability::ratio(1, 12);
            ((l, pair), [q.clone(), q.clone(), q.clone(), q])
        });
        let h = HiddenModel::from_blocks(c, blocks, &[]).unwrap();
        assert!(matches!(
            HiddenModel::with_bound(c, h.joint().clone(), 2),
            Err(ModelError::TooManyHiddenValues { found: 3, bound: 2 })
        ));
    }

    #[test]
    fn conditional_cells_normalize() {
        let c = build_chain(3).unwrap();
        let h = HiddenModel::lift(&qm_surface_model(&c, true));
        let cells = h.conditional_cells(0, c.dashed_link().pair).unwrap();
        assert_eq!(cells[1], Probability::half());
        assert_eq!(h.pair_weight(0, c.dashed_link().pair), Probability::ratio(1, 4));
        assert!(h.conditional_cells(7, c.dashed_link().pair).is_none());
    }
}
