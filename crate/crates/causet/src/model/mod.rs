//! Causal models: graph + mechanisms + exogenous distributions, with two
//! cyclic solution semantics (fixed-point enumeration and acyclification by
//! edge cutting with post-selection), plus distribution-level checks.

pub mod schema;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::graph::{fmt_set, CausalGraph, GraphError, Node, NodeSet, Sort, Visibility};
use crate::prob::quantum::{effects_complete, QuantumError};
use crate::prob::{
    all_assignments, born_probability, snap_to_rational, CMatrix, ConditionalDist, DistError,
    Effect, JointDistribution, QuantumState, Rational, StateBody, QUANTUM_TOL, SNAP_MAX_DEN,
};
use schema::{
    ExogenousSchema, ExprSchema, MechanismSchema, ModelSchema, SemanticsSchema, StarPriorSchema,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("no consistent solution at exogenous assignment {0}")]
    Inconsistent(String),
    #[error("multiple consistent solutions at exogenous assignment {0}")]
    NonUnique(String),
    #[error("post-selected mass is zero")]
    ZeroPostSelection,
    #[error("graph is not acyclic")]
    NotAcyclic,
    #[error("model is not all-classical")]
    NotClassical,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Const(u8),
    Not(Box<Expr>),
    Xor(Vec<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

impl Expr {
    fn from_schema(s: &ExprSchema) -> Expr {
        match s {
            ExprSchema::Var { id } | ExprSchema::Copy { id } => Expr::Var(id.clone()),
            ExprSchema::Const { value } => Expr::Const(*value),
            ExprSchema::Not { arg } => Expr::Not(Box::new(Expr::from_schema(arg))),
            ExprSchema::Xor { args } => Expr::Xor(args.iter().map(Expr::from_schema).collect()),
            ExprSchema::And { args } => Expr::And(args.iter().map(Expr::from_schema).collect()),
            ExprSchema::Or { args } => Expr::Or(args.iter().map(Expr::from_schema).collect()),
        }
    }

    fn variables(&self, out: &mut NodeSet) {
        match self {
            Expr::Var(id) => {
                out.insert(id.clone());
            }
            Expr::Const(_) => {}
            Expr::Not(e) => e.variables(out),
            Expr::Xor(es) | Expr::And(es) | Expr::Or(es) => {
                for e in es {
                    e.variables(out);
                }
            }
        }
    }

    fn eval(&self, env: &BTreeMap<String, u8>) -> u8 {
        match self {
            Expr::Var(id) => env[id],
            Expr::Const(v) => *v,
            Expr::Not(e) => 1 - (e.eval(env) & 1),
            Expr::Xor(es) => es.iter().fold(0, |acc, e| acc ^ e.eval(env)),
            Expr::And(es) => es.iter().fold(1, |acc, e| acc & e.eval(env)),
            Expr::Or(es) => es.iter().fold(0, |acc, e| acc | e.eval(env)),
        }
    }
}

/// The causal mechanism attached to one endogenous node.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    FunctionTable {
        parents: Vec<String>,
        rows: Vec<u8>,
    },
    Expr {
        expr: Expr,
    },
    QuantumMeasurement {
        quantum_parent: String,
        factors: Vec<usize>,
        setting_parents: Vec<String>,
        /// effects[setting_index][outcome]
        effects: Vec<Vec<Effect>>,
        outcome_cardinality: u8,
    },
    /// Intervention override do(node = value).
    Const(u8),
}

impl Mechanism {
    pub fn parent_ids(&self) -> NodeSet {
        match self {
            Mechanism::FunctionTable { parents, .. } => parents.iter().cloned().collect(),
            Mechanism::Expr { expr } => {
                let mut s = NodeSet::new();
                expr.variables(&mut s);
                s
            }
            Mechanism::QuantumMeasurement {
                quantum_parent,
                setting_parents,
                ..
            } => {
                let mut s: NodeSet = setting_parents.iter().cloned().collect();
                s.insert(quantum_parent.clone());
                s
            }
            Mechanism::Const(_) => NodeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    FixedPoint,
    PostSelect,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PostSelectConfig {
    pub cut_edges: Vec<(String, String)>,
    /// Explicit star priors keyed by cut-edge source; sources not listed get
    /// the uniform prior.
    pub star_prior: BTreeMap<String, Vec<Rational>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalModel {
    pub name: String,
    pub graph: CausalGraph,
    pub cardinalities: BTreeMap<String, u8>,
    pub mechanisms: BTreeMap<String, Mechanism>,
    pub exogenous_classical: BTreeMap<String, Vec<Rational>>,
    pub exogenous_quantum: BTreeMap<String, QuantumState>,
    pub semantics: Semantics,
    pub post_select: PostSelectConfig,
}

/// Outcome of a model-level check: every violation found, or a clean pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelReport {
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: String,
    pub sets: Vec<NodeSet>,
    pub detail: String,
}

impl ModelReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self) -> String {
        if self.passed() {
            return "passed\n".to_string();
        }
        let mut out = String::new();
        for v in &self.violations {
            let sets: Vec<String> = v.sets.iter().map(fmt_set).collect();
            out.push_str(&format!(
                "violation [{}] {}: {}\n",
                v.kind,
                sets.join(" "),
                v.detail
            ));
        }
        out
    }
}

impl CausalModel {
    pub fn from_schema(s: &ModelSchema) -> Result<Self, ModelError> {
        let nodes: Vec<Node> = s
            .nodes
            .iter()
            .map(|n| Node {
                id: n.name.clone(),
                visibility: n.visibility,
                sort: n.sort,
            })
            .collect();
        let graph = CausalGraph::new(nodes, &s.edges)?;
        let mut cardinalities = BTreeMap::new();
        for n in &s.nodes {
            if n.sort == Sort::Classical {
                cardinalities.insert(n.name.clone(), n.cardinality.unwrap_or(2));
            }
        }
        let mut mechanisms = BTreeMap::new();
        for (id, m) in &s.mechanisms {
            let mech = match m {
                MechanismSchema::Table { parents, rows } => Mechanism::FunctionTable {
                    parents: parents.clone(),
                    rows: rows.clone(),
                },
                MechanismSchema::Expr { expr } => Mechanism::Expr {
                    expr: Expr::from_schema(expr),
                },
                MechanismSchema::Measurement {
                    quantum_parent,
                    factors,
                    setting_parents,
                    effects,
                    outcome_cardinality,
                } => {
                    let mut eff = Vec::new();
                    for per_setting in effects {
                        let mut outs = Vec::new();
                        for matrix in per_setting {
                            let mut rows = Vec::new();
                            for r in matrix {
                                let mut row = Vec::new();
                                for e in r {
                                    row.push(e.to_complex().map_err(ModelError::Invalid)?);
                                }
                                rows.push(row);
                            }
                            outs.push(Effect {
                                matrix: CMatrix::from_rows(rows)?,
                            });
                        }
                        eff.push(outs);
                    }
                    Mechanism::QuantumMeasurement {
                        quantum_parent: quantum_parent.clone(),
                        factors: factors.clone(),
                        setting_parents: setting_parents.clone(),
                        effects: eff,
                        outcome_cardinality: *outcome_cardinality,
                    }
                }
            };
            mechanisms.insert(id.clone(), mech);
        }
        let mut exogenous_classical = BTreeMap::new();
        let mut exogenous_quantum = BTreeMap::new();
        for (id, e) in &s.exogenous {
            match e {
                ExogenousSchema::Classical(probs) => {
                    let dist: Result<Vec<Rational>, String> =
                        probs.iter().map(|p| p.to_rational()).collect();
                    exogenous_classical.insert(id.clone(), dist.map_err(ModelError::Invalid)?);
                }
                ExogenousSchema::Quantum(q) => {
                    let body = if let Some(pure) = &q.pure {
                        let amps: Result<Vec<_>, String> =
                            pure.iter().map(|e| e.to_complex()).collect();
                        StateBody::Pure(amps.map_err(ModelError::Invalid)?)
                    } else if let Some(mixed) = &q.mixed {
                        let mut rows = Vec::new();
                        for r in mixed {
                            let row: Result<Vec<_>, String> =
                                r.iter().map(|e| e.to_complex()).collect();
                            rows.push(row.map_err(ModelError::Invalid)?);
                        }
                        StateBody::Mixed(CMatrix::from_rows(rows)?)
                    } else {
                        return Err(ModelError::Invalid(format!(
                            "quantum node `{id}` needs a pure or mixed state"
                        )));
                    };
                    exogenous_quantum.insert(
                        id.clone(),
                        QuantumState {
                            subsystem_dims: q.dims.clone(),
                            body,
                        },
                    );
                }
            }
        }
        let (semantics, post_select) = match s.semantics {
            SemanticsSchema::FixedPoint => (Semantics::FixedPoint, PostSelectConfig::default()),
            SemanticsSchema::PostSelect => {
                let ps = s.post_select.clone().unwrap_or_default();
                let mut star_prior = BTreeMap::new();
                if let StarPriorSchema::Explicit(map) = &ps.star_prior {
                    for (id, probs) in map {
                        let dist: Result<Vec<Rational>, String> =
                            probs.iter().map(|p| p.to_rational()).collect();
                        star_prior.insert(id.clone(), dist.map_err(ModelError::Invalid)?);
                    }
                }
                (
                    Semantics::PostSelect,
                    PostSelectConfig {
                        cut_edges: ps.cut_edges,
                        star_prior,
                    },
                )
            }
        };
        let model = CausalModel {
            name: s.name.clone(),
            graph,
            cardinalities,
            mechanisms,
            exogenous_classical,
            exogenous_quantum,
            semantics,
            post_select,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        let schema =
            ModelSchema::from_json(s).map_err(|e| ModelError::Invalid(format!("json: {e}")))?;
        Self::from_schema(&schema)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for node in self.graph.nodes() {
            let id = &node.id;
            match node.sort {
                Sort::Classical => {
                    let card = *self
                        .cardinalities
                        .get(id)
                        .ok_or_else(|| ModelError::Invalid(format!("no cardinality for `{id}`")))?;
                    if card == 0 {
                        return Err(ModelError::Invalid(format!("`{id}` has cardinality 0")));
                    }
                    let parents = self.graph.parents(id)?;
                    let has_mech = self.mechanisms.contains_key(id);
                    let has_dist = self.exogenous_classical.contains_key(id);
                    if parents.is_empty() && !has_mech {
                        if !has_dist {
                            return Err(ModelError::Invalid(format!(
                                "exogenous `{id}` has no distribution"
                            )));
                        }
                        let dist = &self.exogenous_classical[id];
                        if dist.len() != card as usize {
                            return Err(ModelError::Invalid(format!(
                                "distribution arity for `{id}`"
                            )));
                        }
                        let total: Rational = dist.iter().cloned().sum();
                        if !total.is_one() || dist.iter().any(|p| p < &Rational::zero()) {
                            return Err(ModelError::Invalid(format!(
                                "distribution of `{id}` is not normalized"
                            )));
                        }
                    } else {
                        if !has_mech {
                            return Err(ModelError::Invalid(format!(
                                "endogenous `{id}` has no mechanism"
                            )));
                        }
                        if has_dist {
                            return Err(ModelError::Invalid(format!(
                                "`{id}` has both a mechanism and an exogenous distribution"
                            )));
                        }
                        let mech = &self.mechanisms[id];
                        if mech.parent_ids() != parents {
                            return Err(ModelError::Invalid(format!(
                                "mechanism parents of `{id}` differ from graph parents"
                            )));
                        }
                        self.validate_mechanism(id, mech, card)?;
                    }
                }
                Sort::Quantum => {
                    if !self.graph.parents(id)?.is_empty() {
                        return Err(ModelError::Invalid(format!(
                            "quantum node `{id}` must be parentless"
                        )));
                    }
                    let state = self.exogenous_quantum.get(id).ok_or_else(|| {
                        ModelError::Invalid(format!("quantum node `{id}` has no state"))
                    })?;
                    state.validate()?;
                    // Children must be measurement mechanisms on disjoint factors.
                    let mut used = vec![false; state.subsystem_dims.len()];
                    for child in self.graph.children(id)? {
                        match self.mechanisms.get(&child) {
                            Some(Mechanism::QuantumMeasurement {
                                quantum_parent,
                                factors,
                                ..
                            }) if quantum_parent == id => {
                                for &f in factors {
                                    if f >= used.len() || used[f] {
                                        return Err(ModelError::Invalid(format!(
                                            "measurement factors of `{child}` clash on `{id}`"
                                        )));
                                    }
                                    used[f] = true;
                                }
                            }
                            _ => {
                                return Err(ModelError::Invalid(format!(
                                "quantum `{id}` feeds `{child}` which is not a measurement of it"
                            )))
                            }
                        }
                    }
                }
            }
        }
        match self.semantics {
            Semantics::FixedPoint => {
                if !self.exogenous_quantum.is_empty() {
                    return Err(ModelError::Invalid(
                        "fixed_point semantics requires an all-classical model".to_string(),
                    ));
                }
            }
            Semantics::PostSelect => {
                for (a, b) in &self.post_select.cut_edges {
                    if !self.graph.has_edge(a, b) {
                        return Err(ModelError::Invalid(format!(
                            "cut edge {a}->{b} not in graph"
                        )));
                    }
                    for id in [a, b] {
                        if self.graph.node(id).map(|n| n.sort) != Some(Sort::Classical) {
                            return Err(ModelError::Invalid(format!(
                                "cut edge endpoint `{id}` must be classical"
                            )));
                        }
                    }
                }
                let cut = self.graph.remove_edges(&self.post_select.cut_edges)?;
                if cut.topological_order().is_none() {
                    return Err(ModelError::Invalid(
                        "removing cut_edges does not make the graph acyclic".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn validate_mechanism(&self, id: &str, mech: &Mechanism, card: u8) -> Result<(), ModelError> {
        match mech {
            Mechanism::FunctionTable { parents, rows } => {
                let mut want = 1usize;
                for p in parents {
                    let pc = self.cardinality_or_err(p)?;
                    want *= pc as usize;
                }
                if rows.len() != want {
                    return Err(ModelError::Invalid(format!(
                        "table for `{id}` has {} rows, expected {want}",
                        rows.len()
                    )));
                }
                if rows.iter().any(|&v| v >= card) {
                    return Err(ModelError::Invalid(format!(
                        "table output out of range for `{id}`"
                    )));
                }
            }
            Mechanism::Expr { .. } => {
                if card != 2 {
                    return Err(ModelError::Invalid(format!(
                        "expression mechanisms are binary, `{id}` has cardinality {card}"
                    )));
                }
            }
            Mechanism::QuantumMeasurement {
                quantum_parent,
                setting_parents,
                effects,
                outcome_cardinality,
                ..
            } => {
                if self.graph.node(quantum_parent).map(|n| n.sort) != Some(Sort::Quantum) {
                    return Err(ModelError::Invalid(format!(
                        "`{id}` measures non-quantum `{quantum_parent}`"
                    )));
                }
                if *outcome_cardinality != card {
                    return Err(ModelError::Invalid(format!(
                        "outcome cardinality of `{id}` differs from node cardinality"
                    )));
                }
                let mut settings = 1usize;
                for p in setting_parents {
                    settings *= self.cardinality_or_err(p)? as usize;
                }
                if effects.len() != settings {
                    return Err(ModelError::Invalid(format!(
                        "`{id}` has {} effect settings, expected {settings}",
                        effects.len()
                    )));
                }
                for per_setting in effects {
                    if per_setting.len() != card as usize {
                        return Err(ModelError::Invalid(format!(
                            "`{id}` effect list does not cover all outcomes"
                        )));
                    }
                    for e in per_setting {
                        e.validate()?;
                    }
                    effects_complete(per_setting)?;
                }
            }
            Mechanism::Const(v) => {
                if *v >= card {
                    return Err(ModelError::Invalid(format!(
                        "constant out of range for `{id}`"
                    )));
                }
            }
        }
        Ok(())
    }

    fn cardinality_or_err(&self, id: &str) -> Result<u8, ModelError> {
        self.cardinalities
            .get(id)
            .copied()
            .ok_or_else(|| ModelError::UnknownNode(id.to_string()))
    }

    pub fn observed_ids(&self) -> Vec<String> {
        self.graph.observed_ids()
    }

    pub fn classical_ids(&self) -> Vec<String> {
        self.graph
            .nodes()
            .iter()
            .filter(|n| n.sort == Sort::Classical)
            .map(|n| n.id.clone())
            .collect()
    }

    /// Observed exogenous nodes (no parents, observed).
    pub fn observed_exogenous(&self) -> NodeSet {
        self.graph
            .exogenous_ids()
            .into_iter()
            .filter(|id| self.graph.node(id).map(|n| n.visibility) == Some(Visibility::Observed))
            .collect()
    }

    /// Applies interventions: each targeted node's mechanism becomes a
    /// constant and its incoming edges are cut. Targets must be observed.
    pub fn with_interventions(
        &self,
        interventions: &BTreeMap<String, u8>,
    ) -> Result<CausalModel, ModelError> {
        let mut m = self.clone();
        let mut cut = NodeSet::new();
        for (id, &value) in interventions {
            let node = self
                .graph
                .node(id)
                .ok_or_else(|| ModelError::UnknownNode(id.clone()))?;
            if node.visibility != Visibility::Observed {
                return Err(ModelError::PreconditionFailed(format!(
                    "intervened node `{id}` must be observed"
                )));
            }
            let card = self.cardinality_or_err(id)?;
            if value >= card {
                return Err(ModelError::Invalid(format!(
                    "do({id}={value}) out of range"
                )));
            }
            m.mechanisms.insert(id.clone(), Mechanism::Const(value));
            m.exogenous_classical.remove(id);
            cut.insert(id.clone());
        }
        m.graph = m.graph.mutilate(&cut, &NodeSet::new())?;
        // Cut edges whose target was intervened are gone from the graph.
        m.post_select.cut_edges.retain(|(_, b)| !cut.contains(b));
        m.name = format!("{}|do", m.name);
        Ok(m)
    }

    /// Full joint distribution over all original classical nodes.
    pub fn full_distribution(&self) -> Result<JointDistribution, ModelError> {
        match self.semantics {
            Semantics::FixedPoint => self.solve_fixed_point(),
            Semantics::PostSelect => self.solve_post_select(),
        }
    }

    /// The observed distribution: full joint marginalized onto observed nodes.
    pub fn observed_distribution(&self) -> Result<JointDistribution, ModelError> {
        let full = self.full_distribution()?;
        Ok(full.marginal(&self.observed_ids().into_iter().collect())?)
    }

    fn classical_vars(&self) -> Vec<(String, u8)> {
        self.graph
            .nodes()
            .iter()
            .filter(|n| n.sort == Sort::Classical)
            .map(|n| (n.id.clone(), self.cardinalities[&n.id]))
            .collect()
    }

    fn fmt_assignment(vars: &[(String, u8)], key: &[u8]) -> String {
        let names: Vec<&str> = vars.iter().map(|(n, _)| n.as_str()).collect();
        let vals: Vec<String> = key.iter().map(|v| v.to_string()).collect();
        format!("({})=({})", names.join(","), vals.join(","))
    }

    fn eval_deterministic(&self, id: &str, env: &BTreeMap<String, u8>) -> Result<u8, ModelError> {
        match &self.mechanisms[id] {
            Mechanism::Const(v) => Ok(*v),
            Mechanism::Expr { expr } => Ok(expr.eval(env)),
            Mechanism::FunctionTable { parents, rows } => {
                let mut idx = 0usize;
                for p in parents {
                    let pc = self.cardinality_or_err(p)?;
                    idx = idx * pc as usize + env[p] as usize;
                }
                Ok(rows[idx])
            }
            Mechanism::QuantumMeasurement { .. } => Err(ModelError::NotClassical),
        }
    }

    /// Fixed-point semantics: per exogenous assignment, exactly one joint
    /// endogenous assignment must satisfy every mechanism.
    fn solve_fixed_point(&self) -> Result<JointDistribution, ModelError> {
        if !self.exogenous_quantum.is_empty() {
            return Err(ModelError::NotClassical);
        }
        let vars = self.classical_vars();
        let exo_vars: Vec<(String, u8)> = vars
            .iter()
            .filter(|(n, _)| self.exogenous_classical.contains_key(n))
            .cloned()
            .collect();
        let endo_vars: Vec<(String, u8)> = vars
            .iter()
            .filter(|(n, _)| !self.exogenous_classical.contains_key(n))
            .cloned()
            .collect();
        let mut weights: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
        for exo_key in all_assignments(&exo_vars) {
            let mut w = Rational::one();
            for ((name, _), &v) in exo_vars.iter().zip(&exo_key) {
                w *= self.exogenous_classical[name][v as usize].clone();
            }
            if w.is_zero() {
                continue;
            }
            let mut solutions = Vec::new();
            for endo_key in all_assignments(&endo_vars) {
                let mut env: BTreeMap<String, u8> = BTreeMap::new();
                for ((name, _), &v) in exo_vars.iter().zip(&exo_key) {
                    env.insert(name.clone(), v);
                }
                for ((name, _), &v) in endo_vars.iter().zip(&endo_key) {
                    env.insert(name.clone(), v);
                }
                let consistent = endo_vars.iter().zip(&endo_key).all(|((name, _), &v)| {
                    self.eval_deterministic(name, &env)
                        .map(|out| out == v)
                        .unwrap_or(false)
                });
                if consistent {
                    solutions.push(env);
                }
            }
            match solutions.len() {
                0 => {
                    return Err(ModelError::Inconsistent(Self::fmt_assignment(
                        &exo_vars, &exo_key,
                    )))
                }
                1 => {
                    let env = &solutions[0];
                    let key: Vec<u8> = vars.iter().map(|(n, _)| env[n]).collect();
                    *weights.entry(key).or_insert_with(Rational::zero) += w;
                }
                _ => {
                    return Err(ModelError::NonUnique(Self::fmt_assignment(
                        &exo_vars, &exo_key,
                    )))
                }
            }
        }
        Ok(JointDistribution::new(vars, weights)?)
    }

    /// Post-selection semantics: cut the configured edges, add one star copy
    /// per cut source, evaluate the acyclic model, condition on star =
    /// original, renormalize, and marginalize the stars away.
    fn solve_post_select(&self) -> Result<JointDistribution, ModelError> {
        let cut = &self.post_select.cut_edges;
        let acyclic_graph = self.graph.remove_edges(cut)?;
        let order = acyclic_graph
            .topological_order()
            .ok_or(ModelError::NotAcyclic)?;

        // One star per distinct cut-edge source still present in the graph.
        let mut star_of: BTreeMap<String, String> = BTreeMap::new();
        for (src, _) in cut {
            star_of
                .entry(src.clone())
                .or_insert_with(|| format!("{src}*"));
        }
        let star_vars: Vec<(String, u8)> = star_of
            .iter()
            .map(|(src, star)| (star.clone(), self.cardinalities[src]))
            .collect();
        // Mechanism view with cut parents rewired to stars; stars carry the
        // cardinality of their source.
        let mut mechs: BTreeMap<String, Mechanism> = self.mechanisms.clone();
        for (src, tgt) in cut {
            let star = star_of[src].clone();
            if let Some(m) = mechs.get_mut(tgt) {
                rewire_parent(m, src, &star);
            }
        }
        let mut cards = self.cardinalities.clone();
        for (src, star) in &star_of {
            cards.insert(star.clone(), self.cardinalities[src]);
        }
        let rewired = CausalModel {
            mechanisms: mechs,
            cardinalities: cards,
            ..self.clone()
        };

        let vars = self.classical_vars();
        // Free variables: classical exogenous, stars, and measurement outcomes.
        let exo_vars: Vec<(String, u8)> = vars
            .iter()
            .filter(|(n, _)| self.exogenous_classical.contains_key(n))
            .cloned()
            .collect();
        let outcome_vars: Vec<(String, u8)> = order
            .iter()
            .filter(|id| {
                matches!(
                    rewired.mechanisms.get(*id),
                    Some(Mechanism::QuantumMeasurement { .. })
                )
            })
            .map(|id| (id.clone(), self.cardinalities[id]))
            .collect();

        let mut weights: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
        for exo_key in all_assignments(&exo_vars) {
            let mut w_exo = Rational::one();
            for ((name, _), &v) in exo_vars.iter().zip(&exo_key) {
                w_exo *= self.exogenous_classical[name][v as usize].clone();
            }
            if w_exo.is_zero() {
                continue;
            }
            for star_key in all_assignments(&star_vars) {
                let mut w_star = w_exo.clone();
                for ((star, card), &v) in star_vars.iter().zip(&star_key) {
                    let src = star.trim_end_matches('*');
                    let prior = match self.post_select.star_prior.get(src) {
                        Some(p) => p[v as usize].clone(),
                        None => Rational::new(1.into(), (*card as i64).into()),
                    };
                    w_star *= prior;
                }
                if w_star.is_zero() {
                    continue;
                }
                for outcome_key in all_assignments(&outcome_vars) {
                    let mut env: BTreeMap<String, u8> = BTreeMap::new();
                    for ((name, _), &v) in exo_vars.iter().zip(&exo_key) {
                        env.insert(name.clone(), v);
                    }
                    for ((name, _), &v) in star_vars.iter().zip(&star_key) {
                        env.insert(name.clone(), v);
                    }
                    for ((name, _), &v) in outcome_vars.iter().zip(&outcome_key) {
                        env.insert(name.clone(), v);
                    }
                    // Propagate deterministic nodes in topological order.
                    for id in &order {
                        if env.contains_key(id)
                            || self.graph.node(id).map(|n| n.sort) != Some(Sort::Classical)
                        {
                            continue;
                        }
                        let v = rewired.eval_deterministic(id, &env)?;
                        env.insert(id.clone(), v);
                    }
                    // Post-selection: every star equals its source.
                    if star_of.iter().any(|(src, star)| env[src] != env[star]) {
                        continue;
                    }
                    let mut w = w_star.clone();
                    // Born weights, one per quantum latent, snapped to exact
                    // rationals when within tolerance.
                    for (qid, state) in &self.exogenous_quantum {
                        let mut eff: Vec<(Vec<usize>, Effect)> = Vec::new();
                        for (node, mech) in &rewired.mechanisms {
                            if let Mechanism::QuantumMeasurement {
                                quantum_parent,
                                factors,
                                setting_parents,
                                effects,
                                ..
                            } = mech
                            {
                                if quantum_parent != qid {
                                    continue;
                                }
                                let mut idx = 0usize;
                                for p in setting_parents {
                                    let pc = rewired.cardinality_or_err(p)?;
                                    idx = idx * pc as usize + env[p] as usize;
                                }
                                eff.push((
                                    factors.clone(),
                                    effects[idx][env[node] as usize].clone(),
                                ));
                            }
                        }
                        let p = born_probability(state, &eff)?;
                        w *= snap_to_rational(p, SNAP_MAX_DEN, QUANTUM_TOL)
                            .or_else(|| Rational::from_float(p))
                            .unwrap_or_else(Rational::zero);
                    }
                    if w.is_zero() {
                        continue;
                    }
                    let key: Vec<u8> = vars.iter().map(|(n, _)| env[n]).collect();
                    *weights.entry(key).or_insert_with(Rational::zero) += w;
                }
            }
        }
        JointDistribution::from_unnormalized(vars, weights).ok_or(ModelError::ZeroPostSelection)
    }

    /// Checks the d-separation property: every d-separation among disjoint
    /// observed sets must imply the corresponding conditional independence.
    pub fn check_dsep_property(&self) -> Result<ModelReport, ModelError> {
        let dist = self.observed_distribution()?;
        let observed = self.observed_ids();
        let mut violations = Vec::new();
        for (x, y, z) in disjoint_triples(&observed) {
            let dsep = self.graph.d_separated(&x, &y, &z)?;
            if !dsep {
                continue;
            }
            if !dist.cond_independent(&x, &y, &z)? {
                violations.push(Violation {
                    kind: "dsep-property".to_string(),
                    sets: vec![x.clone(), y.clone(), z.clone()],
                    detail: "d-separated but conditionally dependent".to_string(),
                });
            }
        }
        Ok(ModelReport { violations })
    }

    /// Exact Markov factorization test over the full joint, latents included.
    pub fn check_markov_factorization(&self) -> Result<bool, ModelError> {
        if !self.exogenous_quantum.is_empty() {
            return Err(ModelError::NotClassical);
        }
        if self.graph.topological_order().is_none() {
            return Err(ModelError::NotAcyclic);
        }
        let full = self.full_distribution()?;
        markov_factorizes(&self.graph, &full)
    }

    /// Observed conditional independences that hold despite d-connection.
    pub fn fine_tuned_independences(&self) -> Result<Vec<(NodeSet, NodeSet, NodeSet)>, ModelError> {
        let dist = self.observed_distribution()?;
        let observed = self.observed_ids();
        let mut out = Vec::new();
        for (x, y, z) in disjoint_triples(&observed) {
            if self.graph.d_separated(&x, &y, &z)? {
                continue;
            }
            if dist.cond_independent(&x, &y, &z)? {
                out.push((x, y, z));
            }
        }
        Ok(out)
    }
}

fn rewire_parent(m: &mut Mechanism, from: &str, to: &str) {
    match m {
        Mechanism::FunctionTable { parents, .. } => {
            for p in parents {
                if p == from {
                    *p = to.to_string();
                }
            }
        }
        Mechanism::Expr { expr } => rewire_expr(expr, from, to),
        Mechanism::QuantumMeasurement {
            setting_parents,
            quantum_parent,
            ..
        } => {
            for p in setting_parents {
                if p == from {
                    *p = to.to_string();
                }
            }
            if quantum_parent == from {
                *quantum_parent = to.to_string();
            }
        }
        Mechanism::Const(_) => {}
    }
}

fn rewire_expr(e: &mut Expr, from: &str, to: &str) {
    match e {
        Expr::Var(id) => {
            if id == from {
                *id = to.to_string();
            }
        }
        Expr::Const(_) => {}
        Expr::Not(inner) => rewire_expr(inner, from, to),
        Expr::Xor(es) | Expr::And(es) | Expr::Or(es) => {
            for inner in es {
                rewire_expr(inner, from, to);
            }
        }
    }
}

/// All (X, Y, Z) with X, Y nonempty disjoint (X lexicographically before Y to
/// halve the symmetric enumeration) and Z disjoint from both, possibly empty.
pub fn disjoint_triples(ids: &[String]) -> Vec<(NodeSet, NodeSet, NodeSet)> {
    let mut out = Vec::new();
    let subsets = nonempty_subsets(ids);
    for x in &subsets {
        for y in &subsets {
            if x.intersection(y).next().is_some() || x >= y {
                continue;
            }
            let rest: Vec<String> = ids
                .iter()
                .filter(|id| !x.contains(*id) && !y.contains(*id))
                .cloned()
                .collect();
            for z in all_subsets(&rest) {
                out.push((x.clone(), y.clone(), z));
            }
        }
    }
    out
}

/// Subsets in (size, lexicographic) order, including the empty set.
pub fn all_subsets(ids: &[String]) -> Vec<NodeSet> {
    let mut out: Vec<NodeSet> = vec![NodeSet::new()];
    out.extend(nonempty_subsets(ids));
    out
}

pub fn nonempty_subsets(ids: &[String]) -> Vec<NodeSet> {
    let n = ids.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let s: NodeSet = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| ids[i].clone())
            .collect();
        out.push(s);
    }
    out.sort_by_key(|s| (s.len(), s.iter().cloned().collect::<Vec<_>>()));
    out
}

/// Exact test of P = ∏ P(Xᵢ | par(Xᵢ)) for a full joint against a graph.
/// Every variable of the distribution must be a graph node.
pub fn markov_factorizes(g: &CausalGraph, full: &JointDistribution) -> Result<bool, ModelError> {
    let vars = full.vars().to_vec();
    for key in all_assignments(&vars) {
        let p = full.prob_of(&key);
        let mut product = Rational::one();
        let mut defined = true;
        for (i, (name, _)) in vars.iter().enumerate() {
            let parents = g.parents(name)?;
            let mut ev: BTreeMap<String, u8> = BTreeMap::new();
            for (j, (pn, _)) in vars.iter().enumerate() {
                if parents.contains(pn) {
                    ev.insert(pn.clone(), key[j]);
                }
            }
            let p_par = full.prob_of_event(&ev)?;
            if p_par.is_zero() {
                defined = false;
                break;
            }
            ev.insert(name.clone(), key[i]);
            let p_joint = full.prob_of_event(&ev)?;
            product *= p_joint / p_par;
        }
        if !defined {
            // A zero-mass parent configuration forces P(key) = 0.
            if !p.is_zero() {
                return Ok(false);
            }
            continue;
        }
        if p != product {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pads a conditional independence by a d-separated set: given
/// S1 ⫫ S2 | S3 and S d-separated from each of the three sets, any
/// compatible distribution also satisfies the three padded triples
/// (S1∪S, S2, S3), (S1, S2∪S, S3), (S1, S2, S3∪S).
pub fn padded_independences(
    g: &CausalGraph,
    base: (&NodeSet, &NodeSet, &NodeSet),
    s: &NodeSet,
) -> Result<[(NodeSet, NodeSet, NodeSet); 3], ModelError> {
    let (s1, s2, s3) = base;
    for (name, part) in [("S1", s1), ("S2", s2), ("S3", s3)] {
        if let Some(v) = part.intersection(s).next() {
            return Err(ModelError::PreconditionFailed(format!(
                "S overlaps {name} on `{v}`"
            )));
        }
        if part.is_empty() {
            continue;
        }
        if !g.d_separated(s, part, &NodeSet::new())? {
            return Err(ModelError::PreconditionFailed(format!(
                "S is not d-separated from {name}"
            )));
        }
    }
    let union = |a: &NodeSet, b: &NodeSet| -> NodeSet { a.union(b).cloned().collect() };
    Ok([
        (union(s1, s), s2.clone(), s3.clone()),
        (s1.clone(), union(s2, s), s3.clone()),
        (s1.clone(), s2.clone(), union(s3, s)),
    ])
}

/// The four relaxed tripartite no-signalling families, tested exactly.
/// Outcomes are positionally (X, Y, Z) and settings (A, B, C).
pub fn check_ns3prime(p: &ConditionalDist) -> Result<bool, ModelError> {
    if p.outcomes.len() != 3 || p.settings.len() != 3 {
        return Err(ModelError::Dist(DistError::MalformedConditional(
            "NS3' needs exactly three outcomes and three settings".to_string(),
        )));
    }
    let setting_cards: Vec<u8> = p.settings.iter().map(|&(_, c)| c).collect();
    let outcome_assignments = all_assignments(&p.outcomes);
    let all_settings = all_assignments(&p.settings);

    // marginal over outcome indices `keep` as a function of the setting key
    let marginal = |setting: &[u8], keep: &[usize], vals: &[u8]| -> Rational {
        outcome_assignments
            .iter()
            .filter(|o| keep.iter().zip(vals).all(|(&i, &v)| o[i] == v))
            .map(|o| p.prob(setting, o))
            .sum()
    };
    // family: marginal over `keep` must be independent of settings at `free`
    let family_holds = |keep: &[usize], free: &[usize]| -> bool {
        for s in &all_settings {
            for &f in free {
                for alt in 0..setting_cards[f] {
                    let mut s2 = s.clone();
                    s2[f] = alt;
                    for vals in all_assignments(
                        &keep
                            .iter()
                            .map(|&i| p.outcomes[i].clone())
                            .collect::<Vec<_>>(),
                    ) {
                        if marginal(s, keep, &vals) != marginal(&s2, keep, &vals) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    };
    // P_{XY|AB} independent of C; P_{YZ|BC} independent of A;
    // P_{X|A} independent of B, C; P_{Z|C} independent of A, B.
    Ok(family_holds(&[0, 1], &[2])
        && family_holds(&[1, 2], &[0])
        && family_holds(&[0], &[1, 2])
        && family_holds(&[2], &[0, 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;
    use crate::prob::rat;

    fn jamming_json() -> &'static str {
        r#"{
          "name": "jamming-test",
          "nodes": [
            {"name": "A", "visibility": "observed"},
            {"name": "B", "visibility": "observed"},
            {"name": "C", "visibility": "observed"},
            {"name": "L", "visibility": "latent"}
          ],
          "edges": [["B","A"],["B","C"],["L","A"],["L","C"]],
          "mechanisms": {
            "A": {"kind": "table", "parents": ["B","L"], "rows": [0,1,0,1]},
            "C": {"kind": "expr", "expr": {"op":"xor","args":[{"op":"var","id":"B"},{"op":"var","id":"L"}]}}
          },
          "exogenous": {
            "B": ["1/2","1/2"],
            "L": ["1/2","1/2"]
          },
          "semantics": "fixed_point"
        }"#
    }

    #[test]
    fn jamming_observed_distribution() {
        let m = CausalModel::from_json(jamming_json()).unwrap();
        let d = m.observed_distribution().unwrap();
        // Uniform over b = a xor c.
        for a in 0..2u8 {
            for b in 0..2u8 {
                for c in 0..2u8 {
                    let expect = if b == a ^ c { rat(1, 4) } else { rat(0, 1) };
                    assert_eq!(d.prob_of(&[a, b, c]), expect, "abc = {a}{b}{c}");
                }
            }
        }
    }

    #[test]
    fn jamming_fine_tuning() {
        let m = CausalModel::from_json(jamming_json()).unwrap();
        let ft = m.fine_tuned_independences().unwrap();
        let has = |x: &str, y: &str| {
            ft.iter().any(|(a, b, z)| {
                z.is_empty()
                    && ((a == &node_set([x]) && b == &node_set([y]))
                        || (a == &node_set([y]) && b == &node_set([x])))
            })
        };
        assert!(has("B", "A"));
        assert!(has("B", "C"));
    }

    #[test]
    fn markov_on_fork_true_and_cycle_rejected() {
        let fork = r#"{
          "name": "fork",
          "nodes": [
            {"name": "L", "visibility": "latent"},
            {"name": "A", "visibility": "observed"},
            {"name": "B", "visibility": "observed"}
          ],
          "edges": [["L","A"],["L","B"]],
          "mechanisms": {
            "A": {"kind": "expr", "expr": {"op":"copy","id":"L"}},
            "B": {"kind": "expr", "expr": {"op":"copy","id":"L"}}
          },
          "exogenous": {"L": ["1/3","2/3"]},
          "semantics": "fixed_point"
        }"#;
        let m = CausalModel::from_json(fork).unwrap();
        assert!(m.check_markov_factorization().unwrap());
        assert!(m.check_dsep_property().unwrap().passed());

        let cyc = r#"{
          "name": "cycle",
          "nodes": [
            {"name": "X", "visibility": "observed"},
            {"name": "Y", "visibility": "observed"}
          ],
          "edges": [["X","Y"],["Y","X"]],
          "mechanisms": {
            "X": {"kind": "expr", "expr": {"op":"copy","id":"Y"}},
            "Y": {"kind": "expr", "expr": {"op":"copy","id":"X"}}
          },
          "semantics": "post_select",
          "post_select": {"cut_edges": [["Y","X"]]}
        }"#;
        let m = CausalModel::from_json(cyc).unwrap();
        assert!(matches!(
            m.check_markov_factorization(),
            Err(ModelError::NotAcyclic)
        ));
    }

    #[test]
    fn post_select_two_cycle_copy() {
        // X = Y, Y = X with a cut on Y -> X: both uniform and perfectly
        // correlated after post-selection.
        let cyc = r#"{
          "name": "copy-cycle",
          "nodes": [
            {"name": "X", "visibility": "observed"},
            {"name": "Y", "visibility": "observed"}
          ],
          "edges": [["X","Y"],["Y","X"]],
          "mechanisms": {
            "X": {"kind": "expr", "expr": {"op":"copy","id":"Y"}},
            "Y": {"kind": "expr", "expr": {"op":"copy","id":"X"}}
          },
          "semantics": "post_select",
          "post_select": {"cut_edges": [["Y","X"]]}
        }"#;
        let m = CausalModel::from_json(cyc).unwrap();
        let d = m.observed_distribution().unwrap();
        assert_eq!(d.prob_of(&[0, 0]), rat(1, 2));
        assert_eq!(d.prob_of(&[1, 1]), rat(1, 2));
        assert_eq!(d.prob_of(&[0, 1]), rat(0, 1));
    }

    #[test]
    fn fixed_point_paradox_is_inconsistent() {
        // X = not Y, Y = X: the grandfather paradox.
        let cyc = r#"{
          "name": "paradox",
          "nodes": [
            {"name": "X", "visibility": "observed"},
            {"name": "Y", "visibility": "observed"}
          ],
          "edges": [["X","Y"],["Y","X"]],
          "mechanisms": {
            "X": {"kind": "expr", "expr": {"op":"not","arg":{"op":"var","id":"Y"}}},
            "Y": {"kind": "expr", "expr": {"op":"copy","id":"X"}}
          },
          "semantics": "fixed_point"
        }"#;
        let m = CausalModel::from_json(cyc).unwrap();
        assert!(matches!(
            m.observed_distribution(),
            Err(ModelError::Inconsistent(_))
        ));
    }

    #[test]
    fn interventions_cut_and_override() {
        let m = CausalModel::from_json(jamming_json()).unwrap();
        let interventions = BTreeMap::from([("A".to_string(), 1u8)]);
        let md = m.with_interventions(&interventions).unwrap();
        assert!(!md.graph.has_edge("B", "A"));
        let d = md.observed_distribution().unwrap();
        let a = d.marginal(&node_set(["A"])).unwrap();
        assert_eq!(a.prob_of(&[1]), rat(1, 1));
    }

    #[test]
    fn independence_padding_and_precondition() {
        let g = CausalGraph::observed(&["A", "B", "N"], &[("A", "B")]).unwrap();
        let base = (node_set(["A"]), node_set(["B"]), NodeSet::new());
        let out = padded_independences(&g, (&base.0, &base.1, &base.2), &node_set(["N"])).unwrap();
        assert_eq!(out[0].0, node_set(["A", "N"]));
        assert_eq!(out[1].1, node_set(["B", "N"]));
        assert_eq!(out[2].2, node_set(["N"]));
        // S not d-separated from S1 fails.
        let g2 = CausalGraph::observed(&["A", "B", "N"], &[("A", "B"), ("N", "A")]).unwrap();
        assert!(matches!(
            padded_independences(&g2, (&base.0, &base.1, &base.2), &node_set(["N"])),
            Err(ModelError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn ns3prime_families() {
        // Jamming-style conditional: X uniform, Z = X xor B, Y constant.
        let settings = vec![
            ("A".to_string(), 2u8),
            ("B".to_string(), 2u8),
            ("C".to_string(), 2u8),
        ];
        let outcomes = vec![
            ("X".to_string(), 2u8),
            ("Y".to_string(), 2u8),
            ("Z".to_string(), 2u8),
        ];
        let mut table = BTreeMap::new();
        for s in all_assignments(&settings) {
            let b = s[1];
            let mut w = BTreeMap::new();
            for x in 0..2u8 {
                w.insert(vec![x, 0, x ^ b], rat(1, 2));
            }
            table.insert(s, JointDistribution::new(outcomes.clone(), w).unwrap());
        }
        let cd = ConditionalDist::new(settings.clone(), outcomes.clone(), table).unwrap();
        assert!(check_ns3prime(&cd).unwrap());

        // One-bit signalling: X = B directly violates the third family.
        let mut table = BTreeMap::new();
        for s in all_assignments(&settings) {
            let b = s[1];
            let mut w = BTreeMap::new();
            w.insert(vec![b, 0, 0], rat(1, 1));
            table.insert(s, JointDistribution::new(outcomes.clone(), w).unwrap());
        }
        let cd = ConditionalDist::new(settings.clone(), outcomes.clone(), table).unwrap();
        assert!(!check_ns3prime(&cd).unwrap());

        // Full product distribution passes.
        let mut table = BTreeMap::new();
        for s in all_assignments(&settings) {
            table.insert(s, JointDistribution::uniform(outcomes.clone()));
        }
        let cd = ConditionalDist::new(settings, outcomes, table).unwrap();
        assert!(check_ns3prime(&cd).unwrap());
    }

    #[test]
    fn mechanism_parent_mismatch_rejected() {
        let bad = r#"{
          "name": "bad",
          "nodes": [
            {"name": "A", "visibility": "observed"},
            {"name": "B", "visibility": "observed"}
          ],
          "edges": [["A","B"]],
          "mechanisms": {
            "B": {"kind": "expr", "expr": {"op":"const","value":0}}
          },
          "exogenous": {"A": ["1/2","1/2"]},
          "semantics": "fixed_point"
        }"#;
        assert!(matches!(
            CausalModel::from_json(bad),
            Err(ModelError::Invalid(_))
        ));
    }
}
