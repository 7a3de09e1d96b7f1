//! JSON model format: nodes, edges, mechanisms, exogenous distributions,
//! and the solution semantics. Round-trips bit-exactly.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex entry: bare number, `[re, im]` pair, or a literal string such as
/// `"1/2"`, `"-1/sqrt2"`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ComplexEntry {
    Number(f64),
    Pair([f64; 2]),
    Literal(String),
}

impl ComplexEntry {
    pub fn to_complex(&self) -> Result<Complex64, String> {
        match self {
            ComplexEntry::Number(x) => Ok(Complex64::new(*x, 0.0)),
            ComplexEntry::Pair([re, im]) => Ok(Complex64::new(*re, *im)),
            ComplexEntry::Literal(s) => parse_real_literal(s).map(|x| Complex64::new(x, 0.0)),
        }
    }
}

/// Real-valued literals: rationals plus the `1/sqrt2` family.
pub fn parse_real_literal(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let (neg, t) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t),
    };
    let v = match t {
        "1/sqrt2" | "1/sqrt(2)" | "sqrt(1/2)" => std::f64::consts::FRAC_1_SQRT_2,
        _ => crate::prob::parse_rational(t)
            .map(|r| crate::prob::rational::rational_to_f64(&r))
            .map_err(|e| e.to_string())?,
    };
    Ok(if neg { -v } else { v })
}

/// A probability: string rational or number.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ProbEntry {
    Number(f64),
    Literal(String),
}

impl ProbEntry {
    pub fn to_rational(&self) -> Result<crate::prob::Rational, String> {
        match self {
            ProbEntry::Literal(s) => crate::prob::parse_rational(s).map_err(|e| e.to_string()),
            ProbEntry::Number(x) => crate::prob::snap_to_rational(*x, 1 << 20, 1e-9)
                .ok_or_else(|| format!("probability {x} is not a small rational")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeSchema {
    pub name: String,
    pub visibility: crate::graph::Visibility,
    #[serde(default = "default_sort")]
    pub sort: crate::graph::Sort,
    /// Cardinality of a classical node (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cardinality: Option<u8>,
    /// Tensor factor dimensions of a quantum node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
}

fn default_sort() -> crate::graph::Sort {
    crate::graph::Sort::Classical
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum ExprSchema {
    Var { id: String },
    Copy { id: String },
    Const { value: u8 },
    Not { arg: Box<ExprSchema> },
    Xor { args: Vec<ExprSchema> },
    And { args: Vec<ExprSchema> },
    Or { args: Vec<ExprSchema> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MechanismSchema {
    Table {
        parents: Vec<String>,
        /// Output per parent assignment, odometer order (last parent fastest).
        rows: Vec<u8>,
    },
    Expr {
        expr: ExprSchema,
    },
    Measurement {
        quantum_parent: String,
        factors: Vec<usize>,
        #[serde(default)]
        setting_parents: Vec<String>,
        /// effects[setting_index][outcome] = matrix, setting assignments in
        /// odometer order over `setting_parents`.
        effects: Vec<Vec<Vec<Vec<ComplexEntry>>>>,
        outcome_cardinality: u8,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ExogenousSchema {
    Classical(Vec<ProbEntry>),
    Quantum(QuantumStateSchema),
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct QuantumStateSchema {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure: Option<Vec<ComplexEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixed: Option<Vec<Vec<ComplexEntry>>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SemanticsSchema {
    FixedPoint,
    PostSelect,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum StarPriorSchema {
    Uniform(String),
    Explicit(BTreeMap<String, Vec<ProbEntry>>),
}

impl Default for StarPriorSchema {
    fn default() -> Self {
        StarPriorSchema::Uniform("uniform".to_string())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct PostSelectSchema {
    #[serde(default)]
    pub cut_edges: Vec<(String, String)>,
    #[serde(default)]
    pub star_prior: StarPriorSchema,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelSchema {
    pub name: String,
    pub nodes: Vec<NodeSchema>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub mechanisms: BTreeMap<String, MechanismSchema>,
    #[serde(default)]
    pub exogenous: BTreeMap<String, ExogenousSchema>,
    pub semantics: SemanticsSchema,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_select: Option<PostSelectSchema>,
}

impl ModelSchema {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model schema serializes")
    }
}
