use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use super::{ProbError, Probability, FLOAT_TOLERANCE};

/// Value of a finite variable. Settings are angle indices, outcomes are bits
/// (or ±1 for three-party models), hidden variables are labels.
pub type Value = i64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub domain: Vec<Value>,
}

impl Variable {
    pub fn new(name: impl Into<String>, domain: impl Into<Vec<Value>>) -> Self {
        Variable {
            name: name.into(),
            domain: domain.into(),
        }
    }
}

/// Ordered list of named finite variables.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Variable>", into = "Vec<Variable>")]
pub struct VariableSchema {
    vars: Vec<Variable>,
}

impl VariableSchema {
    pub fn new(vars: Vec<Variable>) -> Result<Self, ProbError> {
        let mut names = BTreeSet::new();
        for v in &vars {
            if !names.insert(v.name.as_str()) {
                return Err(ProbError::InvalidSchema(format!("duplicate variable `{}`", v.name)));
            }
            if v.domain.is_empty() {
                return Err(ProbError::InvalidSchema(format!("empty domain for `{}`", v.name)));
            }
            let uniq: BTreeSet<_> = v.domain.iter().collect();
            if uniq.len() != v.domain.len() {
                return Err(ProbError::InvalidSchema(format!(
                    "repeated value in domain of `{}`",
                    v.name
                )));
            }
        }
        Ok(VariableSchema { vars })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.vars.iter().find(|v| v.name == name)
    }

    fn require(&self, name: &str) -> Result<usize, ProbError> {
        self.index_of(name)
            .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))
    }

    /// Every full assignment, in lexicographic domain order.
    pub fn assignments(&self) -> impl Iterator<Item = Vec<Value>> + '_ {
        let total: usize = self.vars.iter().map(|v| v.domain.len()).product();
        (0..total).map(move |mut code| {
            let mut out = vec![0; self.vars.len()];
            for (i, v) in self.vars.iter().enumerate().rev() {
                out[i] = v.domain[code % v.domain.len()];
                code /= v.domain.len();
            }
            out
        })
    }

    /// Resolves a named (possibly partial) assignment to positions, checking
    /// names and domain membership.
    fn resolve(&self, given: &[(&str, Value)]) -> Result<Vec<(usize, Value)>, ProbError> {
        let mut seen = BTreeSet::new();
        given
            .iter()
            .map(|&(name, value)| {
                let i = self.require(name)?;
                if !seen.insert(i) {
                    return Err(ProbError::DuplicateAssignment(name.to_string()));
                }
                if !self.vars[i].domain.contains(&value) {
                    return Err(ProbError::UnknownValue {
                        variable: name.to_string(),
                        value,
                    });
                }
                Ok((i, value))
            })
            .collect()
    }

    fn describe(&self, values: &[Value]) -> String {
        let parts: Vec<String> = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, x)| format!("{}={}", v.name, x))
            .collect();
        format!("({})", parts.join(", "))
    }
}

impl TryFrom<Vec<Variable>> for VariableSchema {
    type Error = ProbError;
    fn try_from(v: Vec<Variable>) -> Result<Self, Self::Error> {
        VariableSchema::new(v)
    }
}

impl From<VariableSchema> for Vec<Variable> {
    fn from(s: VariableSchema) -> Self {
        s.vars
    }
}

/// Borrowed view of one full assignment, used by event predicates.
#[derive(Clone, Copy)]
pub struct Cell<'a> {
    schema: &'a VariableSchema,
    values: &'a [Value],
}

impl Cell<'_> {
    pub fn get(&self, name: &str) -> Option<Value> {
        self.schema.index_of(name).map(|i| self.values[i])
    }

    pub fn values(&self) -> &[Value] {
        self.values
    }
}

impl Index<&str> for Cell<'_> {
    type Output = Value;
    fn index(&self, name: &str) -> &Value {
        let i = self
            .schema
            .index_of(name)
            .unwrap_or_else(|| panic!("event refers to unknown variable `{name}`"));
        &self.values[i]
    }
}

/// A normalized weight table over full assignments of a schema.
///
/// Only positive weights are stored; absent assignments have weight zero.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    schema: VariableSchema,
    weights: BTreeMap<Vec<Value>, Probability>,
}

impl JointDistribution {
    /// Builds a distribution from named assignments. Fails rather than
    /// renormalizing.
    pub fn make_joint<'a, I>(schema: VariableSchema, entries: I) -> Result<Self, ProbError>
    where
        I: IntoIterator<Item = (&'a [(&'a str, Value)], Probability)>,
    {
        let mut positional = Vec::new();
        for (assignment, p) in entries {
            let resolved = schema.resolve(assignment)?;
            if resolved.len() != schema.len() {
                let missing = schema
                    .vars
                    .iter()
                    .enumerate()
                    .find(|(i, _)| !resolved.iter().any(|(j, _)| j == i))
                    .map(|(_, v)| v.name.clone())
                    .unwrap_or_default();
                return Err(ProbError::IncompleteAssignment(missing));
            }
            let mut values = vec![0; schema.len()];
            for (i, v) in resolved {
                values[i] = v;
            }
            positional.push((values, p));
        }
        Self::from_positional(schema, positional)
    }

    /// Builds a distribution from assignments given in schema order.
    pub fn from_positional<I>(schema: VariableSchema, entries: I) -> Result<Self, ProbError>
    where
        I: IntoIterator<Item = (Vec<Value>, Probability)>,
    {
        let mut weights = BTreeMap::new();
        for (values, p) in entries {
            if values.len() != schema.len() {
                let name = schema
                    .vars
                    .get(values.len())
                    .map(|v| v.name.clone())
                    .unwrap_or_else(|| "<extra value>".to_string());
                return Err(ProbError::IncompleteAssignment(name));
            }
            for (var, x) in schema.vars.iter().zip(&values) {
                if !var.domain.contains(x) {
                    return Err(ProbError::UnknownValue {
                        variable: var.name.clone(),
                        value: *x,
                    });
                }
            }
            if p.is_negative() {
                return Err(ProbError::NegativeWeight(p.to_string()));
            }
            if weights.contains_key(&values) {
                return Err(ProbError::DuplicateAssignment(schema.describe(&values)));
            }
            weights.insert(values, p);
        }
        let sum: Probability = weights.values().sum();
        let normalized = if sum.is_exact() {
            sum.is_one()
        } else {
            (sum.to_f64() - 1.0).abs() <= FLOAT_TOLERANCE
        };
        if !normalized {
            return Err(ProbError::NotNormalized { sum: sum.to_string() });
        }
        weights.retain(|_, p| !p.is_zero());
        Ok(JointDistribution { schema, weights })
    }

    /// Builds a table from already-validated parts, dropping zeros.
    fn from_parts(schema: VariableSchema, mut weights: BTreeMap<Vec<Value>, Probability>) -> Self {
        weights.retain(|_, p| !p.is_zero());
        JointDistribution { schema, weights }
    }

    pub fn schema(&self) -> &VariableSchema {
        &self.schema
    }

    /// Positive-weight entries in assignment order.
    pub fn iter(&self) -> impl Iterator<Item = (&[Value], &Probability)> {
        self.weights.iter().map(|(k, v)| (k.as_slice(), v))
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, values: &[Value]) -> Probability {
        self.weights.get(values).cloned().unwrap_or_else(Probability::zero)
    }

    pub fn total(&self) -> Probability {
        self.weights.values().sum()
    }

    pub fn is_exact(&self) -> bool {
        self.weights.values().all(Probability::is_exact)
    }

    /// Same table with every weight converted to floating point.
    pub fn to_float(&self) -> Self {
        let weights = self
            .weights
            .iter()
            .map(|(k, v)| (k.clone(), Probability::from_f64(v.to_f64())))
            .collect();
        JointDistribution::from_parts(self.schema.clone(), weights)
    }

    /// Distribution of the `keep` variables (in schema order).
    pub fn marginalize(&self, keep: &[&str]) -> Result<Self, ProbError> {
        let mut idx = keep
            .iter()
            .map(|n| self.schema.require(n))
            .collect::<Result<Vec<_>, _>>()?;
        idx.sort_unstable();
        idx.dedup();
        let schema = VariableSchema {
            vars: idx.iter().map(|&i| self.schema.vars[i].clone()).collect(),
        };
        let mut weights: BTreeMap<Vec<Value>, Probability> = BTreeMap::new();
        for (values, p) in &self.weights {
            let key: Vec<Value> = idx.iter().map(|&i| values[i]).collect();
            let slot = weights.entry(key).or_insert_with(Probability::zero);
            *slot = slot.clone() + p.clone();
        }
        Ok(JointDistribution::from_parts(schema, weights))
    }

    /// Probability of a partial assignment.
    pub fn prob_of(&self, given: &[(&str, Value)]) -> Result<Probability, ProbError> {
        let resolved = self.schema.resolve(given)?;
        Ok(self
            .weights
            .iter()
            .filter(|(k, _)| resolved.iter().all(|&(i, v)| k[i] == v))
            .map(|(_, p)| p)
            .sum())
    }

    /// Conditional distribution of the remaining variables given a partial
    /// assignment.
    pub fn condition(&self, given: &[(&str, Value)]) -> Result<Self, ProbError> {
        let resolved = self.schema.resolve(given)?;
        let matching: Vec<(&Vec<Value>, &Probability)> = self
            .weights
            .iter()
            .filter(|(k, _)| resolved.iter().all(|&(i, v)| k[i] == v))
            .collect();
        let mass: Probability = matching.iter().map(|(_, p)| *p).sum();
        if !mass.is_positive() {
            let parts: Vec<String> = given.iter().map(|(n, v)| format!("{n}={v}")).collect();
            return Err(ProbError::ZeroProbabilityCondition(format!("({})", parts.join(", "))));
        }
        let rest: Vec<usize> = (0..self.schema.len())
            .filter(|i| !resolved.iter().any(|(j, _)| j == i))
            .collect();
        let schema = VariableSchema {
            vars: rest.iter().map(|&i| self.schema.vars[i].clone()).collect(),
        };
        let mut weights: BTreeMap<Vec<Value>, Probability> = BTreeMap::new();
        for (values, p) in matching {
            let key: Vec<Value> = rest.iter().map(|&i| values[i]).collect();
            let slot = weights.entry(key).or_insert_with(Probability::zero);
            *slot = slot.clone() + p.clone() / mass.clone();
        }
        Ok(JointDistribution::from_parts(schema, weights))
    }

    /// Exact sum of the weights of assignments satisfying `event`.
    pub fn event_prob(&self, event: impl Fn(&Cell<'_>) -> bool) -> Probability {
        self.weights
            .iter()
            .filter(|(k, _)| {
                event(&Cell {
                    schema: &self.schema,
                    values: k,
                })
            })
            .map(|(_, p)| p)
            .sum()
    }
}

impl fmt::Display for JointDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .weights
            .iter()
            .map(|(k, p)| format!("{}: {p}", self.schema.describe(k)))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}
