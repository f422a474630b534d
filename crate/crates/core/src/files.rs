//! Model files (`sorites-model/1`) and report files (`sorites-report/1`).
//!
//! A model file is JSON:
//!
//! ```json
//! {
//!   "format": "sorites-model/1",
//!   "metadata": { "chain_n": 3, "description": "trivial lift" },
//!   "schema": [ { "name": "lambda", "domain": [0] }, { "name": "A", "domain": [1, 3] }, … ],
//!   "weights": [ { "values": [0, 1, 0, 0, 0], "p": "1/8" }, … ]
//! }
//! ```
//!
//! `A`/`B` values are angle indices (angle = k·90°/N). Weights are
//! `"num/den"` or integer strings for exact models; any decimal string makes
//! the model floating-point. Errors carry the line of the offending entry.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::assumptions::{AssumptionVerdict, HiddenModel};
use crate::chain::{build_chain, vars, ChainSpec, SurfaceModel};
use crate::ghz::{GhzEnumeration, NoSoritesReport};
use crate::montecarlo::{EmpiricalSummary, FrequencyTest};
use crate::prob::{JointDistribution, Probability, Value, VariableSchema};
use crate::theorems::DerivationReport;

pub const MODEL_FORMAT: &str = "sorites-model/1";
pub const REPORT_FORMAT: &str = "sorites-report/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    /// 1-based; 0 when no position applies.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

impl std::error::Error for InputError {}

/// How weight strings are interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NumberMode {
    /// Exact if every weight is rational, floating otherwise.
    #[default]
    Auto,
    /// Decimal weights are rejected.
    Exact,
    /// Every weight is converted to floating point.
    Float,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chain_n: Option<i64>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub description: String,
}

#[derive(Deserialize)]
struct RawModelFile<'a> {
    format: String,
    #[serde(default)]
    metadata: Metadata,
    #[serde(borrow)]
    schema: &'a RawValue,
    #[serde(borrow)]
    weights: &'a RawValue,
}

#[derive(Serialize, Deserialize)]
struct WeightEntry {
    values: Vec<Value>,
    p: String,
}

/// A joint distribution read from a model file, with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub metadata: Metadata,
    pub joint: JointDistribution,
}

/// A model file interpreted on its chain.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadedModel {
    Surface(SurfaceModel),
    Hidden(HiddenModel),
}

impl LoadedModel {
    pub fn surface(&self) -> &SurfaceModel {
        match self {
            LoadedModel::Surface(s) => s,
            LoadedModel::Hidden(h) => h.surface(),
        }
    }

    pub fn chain(&self) -> &ChainSpec {
        self.surface().chain()
    }

    pub fn hidden(&self) -> Option<&HiddenModel> {
        match self {
            LoadedModel::Hidden(h) => Some(h),
            LoadedModel::Surface(_) => None,
        }
    }
}

fn line_of(source: &str, fragment: &str) -> usize {
    let offset = (fragment.as_ptr() as usize).saturating_sub(source.as_ptr() as usize);
    source[..offset.min(source.len())].matches('\n').count() + 1
}

fn compact<T: Serialize + ?Sized>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

fn at(line: usize, message: impl fmt::Display) -> InputError {
    InputError {
        line,
        message: message.to_string(),
    }
}

fn json_error(e: serde_json::Error) -> InputError {
    at(e.line(), e)
}

impl ModelFile {
    pub fn parse(source: &str, mode: NumberMode) -> Result<Self, InputError> {
        let raw: RawModelFile<'_> = serde_json::from_str(source).map_err(json_error)?;
        if raw.format != MODEL_FORMAT {
            return Err(at(
                1,
                format!("unsupported format `{}`, expected `{MODEL_FORMAT}`", raw.format),
            ));
        }
        let schema_line = line_of(source, raw.schema.get());
        let schema: VariableSchema =
            serde_json::from_str(raw.schema.get()).map_err(|e| at(schema_line + e.line() - 1, e))?;

        let weights_line = line_of(source, raw.weights.get());
        let entries: Vec<&RawValue> =
            serde_json::from_str(raw.weights.get()).map_err(|e| at(weights_line + e.line() - 1, e))?;
        let mut seen = std::collections::BTreeSet::new();
        let mut parsed = Vec::with_capacity(entries.len());
        for entry in entries {
            let line = line_of(source, entry.get());
            let w: WeightEntry = serde_json::from_str(entry.get()).map_err(|e| at(line, e))?;
            if w.values.len() != schema.len() {
                return Err(at(
                    line,
                    format!("expected {} values, found {}", schema.len(), w.values.len()),
                ));
            }
            for (var, x) in schema.variables().iter().zip(&w.values) {
                if !var.domain.contains(x) {
                    return Err(at(line, format!("value {x} is not in the domain of `{}`", var.name)));
                }
            }
            if !seen.insert(w.values.clone()) {
                return Err(at(line, format!("duplicate assignment {:?}", w.values)));
            }
            let p: Probability = w.p.parse().map_err(|e| at(line, e))?;
            let p = match mode {
                NumberMode::Exact if !p.is_exact() => {
                    return Err(at(
                        line,
                        format!("decimal weight `{}` in exact mode; write it as num/den", w.p),
                    ));
                }
                NumberMode::Float => Probability::from_f64(p.to_f64()),
                _ => p,
            };
            let p = p.checked().map_err(|e| at(line, e))?;
            parsed.push((w.values, p));
        }
        let joint = JointDistribution::from_positional(schema, parsed).map_err(|e| at(weights_line, e))?;
        Ok(ModelFile {
            metadata: raw.metadata,
            joint,
        })
    }

    /// Interprets the joint on its chain: with a `lambda` variable as a
    /// hidden-variable model, otherwise as a surface model over `A, B, X, Y`.
    pub fn into_model(self, max_hidden: usize) -> Result<LoadedModel, InputError> {
        let n = self
            .metadata
            .chain_n
            .ok_or_else(|| at(0, "metadata.chain_n is required"))?;
        let chain = build_chain(n).map_err(|e| at(0, e))?;
        if self.joint.schema().index_of(vars::LAMBDA).is_some() {
            HiddenModel::with_bound(chain, self.joint, max_hidden)
                .map(LoadedModel::Hidden)
                .map_err(|e| at(0, e))
        } else {
            SurfaceModel::from_joint(chain, &self.joint)
                .map(LoadedModel::Surface)
                .map_err(|e| at(0, e))
        }
    }

    /// One schema variable and one weight entry per line.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n");
        s += &format!("  \"format\": {},\n", compact(MODEL_FORMAT));
        s += &format!("  \"metadata\": {},\n", compact(&self.metadata));
        s += "  \"schema\": [\n";
        let vars = self.joint.schema().variables();
        for (i, v) in vars.iter().enumerate() {
            let sep = if i + 1 < vars.len() { "," } else { "" };
            s += &format!("    {}{sep}\n", compact(v));
        }
        s += "  ],\n  \"weights\": [\n";
        let n = self.joint.support_len();
        for (i, (values, p)) in self.joint.iter().enumerate() {
            let entry = WeightEntry {
                values: values.to_vec(),
                p: p.to_string(),
            };
            let sep = if i + 1 < n { "," } else { "" };
            s += &format!("    {}{sep}\n", compact(&entry));
        }
        s += "  ]\n}\n";
        s
    }

    pub fn from_hidden(model: &HiddenModel, description: impl Into<String>) -> Self {
        ModelFile {
            metadata: Metadata {
                chain_n: Some(i64::from(model.chain().n_links())),
                description: description.into(),
            },
            joint: model.joint().clone(),
        }
    }

    pub fn from_surface(model: &SurfaceModel, description: impl Into<String>) -> Self {
        ModelFile {
            metadata: Metadata {
                chain_n: Some(i64::from(model.chain().n_links())),
                description: description.into(),
            },
            joint: model.to_joint().expect("surface model has a joint"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub n_links: u32,
    pub strategies: u64,
    pub min_broken: Probability,
    pub qm_expected_failures: Probability,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub summary: EmpiricalSummary,
    /// Absent below the minimum trial count.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mismatch_test: Option<FrequencyTest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportBody {
    Verdicts(Vec<AssumptionVerdict>),
    Derivation(DerivationReport),
    Strategies(StrategyReport),
    GhzVerify(AssumptionVerdict),
    GhzEnumerate(GhzEnumeration),
    GhzCounterexample(NoSoritesReport),
    Simulation(SimulationReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub report: ReportBody,
}

impl ReportFile {
    pub fn new(body: ReportBody) -> Self {
        ReportFile {
            format: REPORT_FORMAT.to_string(),
            report: body,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn parse(source: &str) -> Result<Self, InputError> {
        let r: ReportFile = serde_json::from_str(source).map_err(json_error)?;
        if r.format != REPORT_FORMAT {
            return Err(at(
                1,
                format!("unsupported format `{}`, expected `{REPORT_FORMAT}`", r.format),
            ));
        }
        Ok(r)
    }
}
