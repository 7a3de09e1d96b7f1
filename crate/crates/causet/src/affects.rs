//! Interventions, do-conditionals, conditional higher-order affects
//! relations, reducibility, arrow classification, do-calculus rule
//! verification, and graphical non-affects certificates.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{fmt_set, CausalGraph, GraphError, NodeSet};
use crate::model::{all_subsets, nonempty_subsets, CausalModel, ModelError};
use crate::prob::{all_assignments, DistError, JointDistribution, Rational};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AffectsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("source and target must be nonempty")]
    EmptySet,
    #[error("not an affects relation (holds = false)")]
    NotAnAffectsRelation,
}

/// One decided (conditional higher-order) affects relation:
/// `source` affects `target` given {do(`do_given`), `obs_given`}.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffectsRelation {
    pub from: NodeSet,
    pub to: NodeSet,
    #[serde(default, skip_serializing_if = "NodeSet::is_empty")]
    pub r#do: NodeSet,
    #[serde(default, skip_serializing_if = "NodeSet::is_empty")]
    pub given: NodeSet,
    pub holds: bool,
    /// Decided only for holding relations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irreducible: Option<bool>,
}

impl AffectsRelation {
    pub fn validate(&self) -> Result<(), AffectsError> {
        if self.from.is_empty() || self.to.is_empty() {
            return Err(AffectsError::EmptySet);
        }
        let sets = [&self.from, &self.to, &self.r#do, &self.given];
        for (i, a) in sets.iter().enumerate() {
            for b in sets.iter().skip(i + 1) {
                if let Some(v) = a.intersection(b).next() {
                    return Err(AffectsError::OverlappingSets(v.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        let mut s = format!(
            "{} {} {}",
            fmt_set(&self.from),
            if self.holds {
                "affects"
            } else {
                "does not affect"
            },
            fmt_set(&self.to)
        );
        if !self.r#do.is_empty() || !self.given.is_empty() {
            let mut given = Vec::new();
            if !self.r#do.is_empty() {
                given.push(format!("do{}", fmt_set(&self.r#do)));
            }
            if !self.given.is_empty() {
                given.push(fmt_set(&self.given));
            }
            s.push_str(&format!(" given {}", given.join(",")));
        }
        if self.holds {
            match self.irreducible {
                Some(true) => s.push_str(" [irreducible]"),
                Some(false) => s.push_str(" [reducible]"),
                None => {}
            }
        }
        s
    }
}

/// Memoized do-distributions, keyed by the intervention assignment.
#[derive(Debug, Default)]
pub struct DoCache {
    dists: BTreeMap<Vec<(String, u8)>, Result<JointDistribution, ModelError>>,
}

impl DoCache {
    pub fn new() -> Self {
        Self::default()
    }
}

fn cache_key(interventions: &BTreeMap<String, u8>) -> Vec<(String, u8)> {
    interventions.iter().map(|(k, &v)| (k.clone(), v)).collect()
}

/// Post-intervention observed distribution: mechanism override plus
/// incoming-edge cut, solution semantics inherited from the model.
pub fn do_distribution(
    m: &CausalModel,
    interventions: &BTreeMap<String, u8>,
) -> Result<JointDistribution, ModelError> {
    if interventions.is_empty() {
        return m.observed_distribution();
    }
    m.with_interventions(interventions)?.observed_distribution()
}

fn do_distribution_cached<'c>(
    m: &CausalModel,
    interventions: &BTreeMap<String, u8>,
    cache: &'c mut DoCache,
) -> &'c Result<JointDistribution, ModelError> {
    let key = cache_key(interventions);
    cache
        .dists
        .entry(key)
        .or_insert_with(|| do_distribution(m, interventions))
}

fn check_disjoint(sets: &[&NodeSet]) -> Result<(), AffectsError> {
    for (i, a) in sets.iter().enumerate() {
        for b in sets.iter().skip(i + 1) {
            if let Some(v) = a.intersection(b).next() {
                return Err(AffectsError::OverlappingSets(v.clone()));
            }
        }
    }
    Ok(())
}

fn vars_of(m: &CausalModel, set: &NodeSet) -> Result<Vec<(String, u8)>, AffectsError> {
    set.iter()
        .map(|id| {
            m.cardinalities
                .get(id)
                .map(|&c| (id.clone(), c))
                .ok_or_else(|| AffectsError::Model(ModelError::UnknownNode(id.clone())))
        })
        .collect()
}

/// Result of the higher-order affects decision with diagnostics on how many
/// witness assignments were skipped because only one side was defined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoAffectsOutcome {
    pub holds: bool,
    pub skipped_one_sided: usize,
}

/// Decides `x` affects `y` given {do(`z`), `w`}: some (x, z, w) with both
/// conditionals defined must yield different distributions over `y`.
pub fn ho_affects_detailed(
    m: &CausalModel,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
    w: &NodeSet,
    cache: &mut DoCache,
) -> Result<HoAffectsOutcome, AffectsError> {
    if x.is_empty() || y.is_empty() {
        return Err(AffectsError::EmptySet);
    }
    check_disjoint(&[x, y, z, w])?;
    let xv = vars_of(m, x)?;
    let zv = vars_of(m, z)?;
    let wv = vars_of(m, w)?;
    let mut skipped = 0usize;
    for zkey in all_assignments(&zv) {
        let z_assign: BTreeMap<String, u8> = zv
            .iter()
            .map(|(n, _)| n.clone())
            .zip(zkey.iter().copied())
            .collect();
        // A zero post-selection mass under an intervention is an undefined
        // do-conditional: those witness assignments are skipped, like
        // zero-mass observational conditioning.
        let base = match do_distribution_cached(m, &z_assign, cache) {
            Ok(d) => d.clone(),
            Err(ModelError::ZeroPostSelection) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(AffectsError::Model(e.clone())),
        };
        for xkey in all_assignments(&xv) {
            let mut xz_assign = z_assign.clone();
            for ((n, _), &v) in xv.iter().zip(&xkey) {
                xz_assign.insert(n.clone(), v);
            }
            let dist = match do_distribution_cached(m, &xz_assign, cache) {
                Ok(d) => d.clone(),
                Err(ModelError::ZeroPostSelection) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(AffectsError::Model(e.clone())),
            };
            for wkey in all_assignments(&wv) {
                let w_assign: BTreeMap<String, u8> = wv
                    .iter()
                    .map(|(n, _)| n.clone())
                    .zip(wkey.iter().copied())
                    .collect();
                let lhs = dist.condition(&w_assign)?;
                let rhs = base.condition(&w_assign)?;
                match (lhs, rhs) {
                    (Some(l), Some(r)) => {
                        let ly = l.marginal(y)?;
                        let ry = r.marginal(y)?;
                        if ly != ry {
                            return Ok(HoAffectsOutcome {
                                holds: true,
                                skipped_one_sided: skipped,
                            });
                        }
                    }
                    (None, None) => {}
                    _ => skipped += 1,
                }
            }
        }
    }
    Ok(HoAffectsOutcome {
        holds: false,
        skipped_one_sided: skipped,
    })
}

pub fn ho_affects(
    m: &CausalModel,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
    w: &NodeSet,
    cache: &mut DoCache,
) -> Result<bool, AffectsError> {
    Ok(ho_affects_detailed(m, x, y, z, w, cache)?.holds)
}

/// Reducibility: a holding relation reduces when some nonempty proper source
/// subset stops affecting once the removed part is absorbed into do().
pub fn is_reducible(
    m: &CausalModel,
    rel: &AffectsRelation,
    cache: &mut DoCache,
) -> Result<bool, AffectsError> {
    if !rel.holds {
        return Err(AffectsError::NotAnAffectsRelation);
    }
    rel.validate()?;
    let members: Vec<String> = rel.from.iter().cloned().collect();
    for sub in nonempty_subsets(&members) {
        if sub.len() == members.len() {
            continue;
        }
        let complement: NodeSet = rel.from.difference(&sub).cloned().collect();
        let mut z_aug = rel.r#do.clone();
        z_aug.extend(complement.iter().cloned());
        if !ho_affects(m, &sub, &rel.to, &z_aug, &rel.given, cache)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Classifies every observed-observed edge: solid when the tail affects the
/// head as single variables, dashed otherwise.
pub fn classify_arrows(
    m: &CausalModel,
    cache: &mut DoCache,
) -> Result<BTreeMap<(String, String), ArrowKind>, AffectsError> {
    let observed: NodeSet = m.observed_ids().into_iter().collect();
    let mut out = BTreeMap::new();
    for (a, b) in m.graph.edge_ids() {
        if !observed.contains(&a) || !observed.contains(&b) {
            continue;
        }
        let x: NodeSet = [a.clone()].into_iter().collect();
        let y: NodeSet = [b.clone()].into_iter().collect();
        let solid = ho_affects(m, &x, &y, &NodeSet::new(), &NodeSet::new(), cache)?;
        out.insert(
            (a, b),
            if solid {
                ArrowKind::Solid
            } else {
                ArrowKind::Dashed
            },
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrowKind {
    Solid,
    Dashed,
}

/// A decided d-separation or conditional-independence entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleEntry {
    pub x: NodeSet,
    pub y: NodeSet,
    pub z: NodeSet,
    pub holds: bool,
}

/// Every decided relation for one model: a table of d-separations,
/// conditional independences and affects relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffectsTable {
    pub model: String,
    pub dseps: Vec<TripleEntry>,
    pub cis: Vec<TripleEntry>,
    pub relations: Vec<AffectsRelation>,
}

impl AffectsTable {
    pub fn find(
        &self,
        from: &NodeSet,
        to: &NodeSet,
        d: &NodeSet,
        g: &NodeSet,
    ) -> Option<&AffectsRelation> {
        self.relations
            .iter()
            .find(|r| &r.from == from && &r.to == to && &r.r#do == d && &r.given == g)
    }

    pub fn dsep(&self, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Option<bool> {
        self.dseps
            .iter()
            .find(|e| (&e.x == x && &e.y == y || &e.x == y && &e.y == x) && &e.z == z)
            .map(|e| e.holds)
    }

    pub fn ci(&self, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Option<bool> {
        self.cis
            .iter()
            .find(|e| (&e.x == x && &e.y == y || &e.x == y && &e.y == x) && &e.z == z)
            .map(|e| e.holds)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    /// Aligned text rendering: d-separations, then CIs, then affects.
    pub fn render(&self) -> String {
        let mut out = format!("model: {}\n", self.model);
        out.push_str("d-separations:\n");
        for e in &self.dseps {
            out.push_str(&format!(
                "  {} {} {} | {}\n",
                fmt_set(&e.x),
                if e.holds { "⊥d" } else { "⊥̸d" },
                fmt_set(&e.y),
                fmt_set(&e.z)
            ));
        }
        out.push_str("conditional independences:\n");
        for e in &self.cis {
            out.push_str(&format!(
                "  {} {} {} | {}\n",
                fmt_set(&e.x),
                if e.holds { "⫫" } else { "⫫̸" },
                fmt_set(&e.y),
                fmt_set(&e.z)
            ));
        }
        out.push_str("affects relations:\n");
        for r in &self.relations {
            out.push_str(&format!("  {}\n", r.describe()));
        }
        out
    }
}

/// Decides every affects relation among disjoint observed sets with
/// |X|,|Y| ≤ max_set and |Z|+|W| ≤ max_set, plus all d-separations and CIs
/// with the same size caps.
pub fn affects_table(
    m: &CausalModel,
    max_set: usize,
    cache: &mut DoCache,
) -> Result<AffectsTable, AffectsError> {
    let observed = m.observed_ids();
    let dist = m.observed_distribution().map_err(AffectsError::Model)?;
    let mut dseps = Vec::new();
    let mut cis = Vec::new();
    let subsets = nonempty_subsets(&observed);
    for x in &subsets {
        if x.len() > max_set {
            continue;
        }
        for y in &subsets {
            if y.len() > max_set || x >= y || x.intersection(y).next().is_some() {
                continue;
            }
            let rest: Vec<String> = observed
                .iter()
                .filter(|id| !x.contains(*id) && !y.contains(*id))
                .cloned()
                .collect();
            for z in all_subsets(&rest) {
                if z.len() > max_set {
                    continue;
                }
                dseps.push(TripleEntry {
                    x: x.clone(),
                    y: y.clone(),
                    z: z.clone(),
                    holds: m.graph.d_separated(x, y, &z)?,
                });
                cis.push(TripleEntry {
                    x: x.clone(),
                    y: y.clone(),
                    z: z.clone(),
                    holds: dist.cond_independent(x, y, &z)?,
                });
            }
        }
    }
    let mut relations = Vec::new();
    for x in &subsets {
        if x.len() > max_set {
            continue;
        }
        for y in &subsets {
            if y.len() > max_set || x.intersection(y).next().is_some() {
                continue;
            }
            let rest: Vec<String> = observed
                .iter()
                .filter(|id| !x.contains(*id) && !y.contains(*id))
                .cloned()
                .collect();
            for z in all_subsets(&rest) {
                let rest2: Vec<String> =
                    rest.iter().filter(|id| !z.contains(*id)).cloned().collect();
                for w in all_subsets(&rest2) {
                    if z.len() + w.len() > max_set {
                        continue;
                    }
                    let holds = ho_affects(m, x, y, &z, &w, cache)?;
                    let mut rel = AffectsRelation {
                        from: x.clone(),
                        to: y.clone(),
                        r#do: z.clone(),
                        given: w.clone(),
                        holds,
                        irreducible: None,
                    };
                    if holds {
                        rel.irreducible = Some(!is_reducible(m, &rel, cache)?);
                    }
                    relations.push(rel);
                }
            }
        }
    }
    Ok(AffectsTable {
        model: m.name.clone(),
        dseps,
        cis,
        relations,
    })
}

/// Do-calculus rule checks: graphical antecedent plus, when it holds, the
/// exact numerical identity (zero-mass conditioning assignments skipped).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equality {
    Holds,
    Fails,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleCheck {
    pub antecedent: bool,
    pub equality: Equality,
}

pub fn do_calculus_verify(
    m: &CausalModel,
    rule: u8,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
    w: &NodeSet,
    cache: &mut DoCache,
) -> Result<RuleCheck, AffectsError> {
    check_disjoint(&[x, y, z, w])?;
    if y.is_empty() || z.is_empty() {
        return Err(AffectsError::EmptySet);
    }
    let g = &m.graph;
    let xw: NodeSet = x.union(w).cloned().collect();
    let antecedent = match rule {
        1 => {
            let gx = g.mutilate(x, &NodeSet::new())?;
            gx.d_separated(y, z, &xw)?
        }
        2 => {
            let gxz = g.mutilate(x, z)?;
            gxz.d_separated(y, z, &xw)?
        }
        3 => {
            let gx = g.mutilate(x, &NodeSet::new())?;
            let zw = gx.z_not_ancestors_of_w(z, w)?;
            let cut: NodeSet = x.union(&zw).cloned().collect();
            let gxzw = g.mutilate(&cut, &NodeSet::new())?;
            gxzw.d_separated(y, z, &xw)?
        }
        _ => {
            return Err(AffectsError::Model(ModelError::PreconditionFailed(
                format!("rule {rule} is not one of 1, 2, 3"),
            )))
        }
    };
    if !antecedent {
        return Ok(RuleCheck {
            antecedent: false,
            equality: Equality::NotApplicable,
        });
    }
    let equality = verify_rule_equality(m, rule, x, y, z, w, cache)?;
    Ok(RuleCheck {
        antecedent: true,
        equality,
    })
}

fn verify_rule_equality(
    m: &CausalModel,
    rule: u8,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
    w: &NodeSet,
    cache: &mut DoCache,
) -> Result<Equality, AffectsError> {
    let xv = vars_of(m, x)?;
    let zv = vars_of(m, z)?;
    let wv = vars_of(m, w)?;
    for xkey in all_assignments(&xv) {
        let x_assign: BTreeMap<String, u8> = xv
            .iter()
            .map(|(n, _)| n.clone())
            .zip(xkey.iter().copied())
            .collect();
        let dx = match do_distribution_cached(m, &x_assign, cache) {
            Ok(d) => d.clone(),
            Err(ModelError::ZeroPostSelection) => continue,
            Err(e) => return Err(AffectsError::Model(e.clone())),
        };
        for zkey in all_assignments(&zv) {
            let z_assign: BTreeMap<String, u8> = zv
                .iter()
                .map(|(n, _)| n.clone())
                .zip(zkey.iter().copied())
                .collect();
            let mut xz_assign = x_assign.clone();
            xz_assign.extend(z_assign.clone());
            let dxz = match do_distribution_cached(m, &xz_assign, cache) {
                Ok(d) => d.clone(),
                Err(ModelError::ZeroPostSelection) => continue,
                Err(e) => return Err(AffectsError::Model(e.clone())),
            };
            for wkey in all_assignments(&wv) {
                let w_assign: BTreeMap<String, u8> = wv
                    .iter()
                    .map(|(n, _)| n.clone())
                    .zip(wkey.iter().copied())
                    .collect();
                // Rule 1: P_do(X)(Y | z, w) = P_do(X)(Y | w)
                // Rule 2: P_do(XZ)(Y | w) = P_do(X)(Y | z, w)
                // Rule 3: P_do(XZ)(Y | w) = P_do(X)(Y | w)
                let mut zw_assign = z_assign.clone();
                zw_assign.extend(w_assign.clone());
                let (lhs, rhs) = match rule {
                    1 => (dx.condition(&zw_assign)?, dx.condition(&w_assign)?),
                    2 => (dxz.condition(&w_assign)?, dx.condition(&zw_assign)?),
                    3 => (dxz.condition(&w_assign)?, dx.condition(&w_assign)?),
                    _ => unreachable!(),
                };
                if let (Some(l), Some(r)) = (lhs, rhs) {
                    if l.marginal(y)? != r.marginal(y)? {
                        return Ok(Equality::Fails);
                    }
                }
            }
        }
    }
    Ok(Equality::Holds)
}

/// Sufficient graphical certificates for "`x` does not affect `y` given
/// {do(`z`), `w`}", tried in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonAffectsTag {
    /// X d-separated from Y in the do(X) graph (zeroth-order case).
    SourceSeparated,
    /// X∪Z∪W d-separated from Y in the do(XZ) graph, with Y independent of
    /// the observational conditioning set.
    UnionSeparated,
    /// Y d-separated from X given Z∪W in the graph cutting incoming edges to
    /// Z and to the members of X that are not ancestors of W (the
    /// action-deletion form of the third do-calculus rule).
    ThirdRule,
}

pub fn graphical_nonaffects(
    g: &CausalGraph,
    x: &NodeSet,
    y: &NodeSet,
    z: &NodeSet,
    w: &NodeSet,
) -> Result<Option<NonAffectsTag>, AffectsError> {
    check_disjoint(&[x, y, z, w])?;
    if x.is_empty() || y.is_empty() {
        return Err(AffectsError::EmptySet);
    }
    if z.is_empty() && w.is_empty() {
        let gx = g.mutilate(x, &NodeSet::new())?;
        if gx.d_separated(x, y, &NodeSet::new())? {
            return Ok(Some(NonAffectsTag::SourceSeparated));
        }
    }
    let xz: NodeSet = x.union(z).cloned().collect();
    let gxz = g.mutilate(&xz, &NodeSet::new())?;
    let xzw: NodeSet = xz.union(w).cloned().collect();
    // With observational conditioning the certificate additionally needs the
    // target independent of W in the unmutilated graph: the intervention
    // side alone cannot control how P(Y | W) varies with w.
    let w_side_ok = w.is_empty() || g.d_separated(y, w, &NodeSet::new())?;
    if w_side_ok && gxz.d_separated(&xzw, y, &NodeSet::new())? {
        return Ok(Some(NonAffectsTag::UnionSeparated));
    }
    // Third-rule certificate for the source set `x`: (Y ⊥d X | ZW) in the
    // graph cutting incoming edges to Z and to the members of X that are not
    // ancestors of W in the do(Z) graph.
    let gz = g.mutilate(z, &NodeSet::new())?;
    let x_w = gz.z_not_ancestors_of_w(x, w)?;
    let cut: NodeSet = z.union(&x_w).cloned().collect();
    let gzxw = g.mutilate(&cut, &NodeSet::new())?;
    let zw: NodeSet = z.union(w).cloned().collect();
    if gzxw.d_separated(y, x, &zw)? {
        return Ok(Some(NonAffectsTag::ThirdRule));
    }
    Ok(None)
}

/// Exact equality helper for distributions over the same variables.
pub fn dists_equal(a: &JointDistribution, b: &JointDistribution) -> bool {
    if a.vars() != b.vars() {
        return false;
    }
    for key in all_assignments(a.vars()) {
        if a.prob_of(&key) != b.prob_of(&key) {
            return false;
        }
    }
    true
}

/// Probability that two distributions assign to one assignment differing —
/// convenience for tests wanting a witness.
pub fn first_difference(
    a: &JointDistribution,
    b: &JointDistribution,
) -> Option<(Vec<u8>, Rational, Rational)> {
    for key in all_assignments(a.vars()) {
        let pa = a.prob_of(&key);
        let pb = b.prob_of(&key);
        if pa != pb {
            return Some((key, pa, pb));
        }
    }
    let _ = Rational::zero();
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;
    use crate::prob::rat;

    fn eg3() -> CausalModel {
        CausalModel::from_json(
            r#"{
          "name": "eg3",
          "nodes": [
            {"name": "S", "visibility": "observed"},
            {"name": "E", "visibility": "observed"},
            {"name": "H", "visibility": "observed"}
          ],
          "edges": [["S","E"],["S","H"],["E","H"]],
          "mechanisms": {
            "E": {"kind": "expr", "expr": {"op":"copy","id":"S"}},
            "H": {"kind": "expr", "expr": {"op":"xor","args":[{"op":"var","id":"S"},{"op":"var","id":"E"}]}}
          },
          "exogenous": {"S": ["1/2","1/2"]},
          "semantics": "fixed_point"
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn eg3_do_e_makes_h_nonzero() {
        let m = eg3();
        let d = do_distribution(&m, &BTreeMap::from([("E".to_string(), 1u8)])).unwrap();
        let h = d.marginal(&node_set(["H"])).unwrap();
        assert!(h.prob_of(&[1]) > rat(0, 1));
    }

    #[test]
    fn eg3_arrows() {
        let m = eg3();
        let mut cache = DoCache::new();
        let arrows = classify_arrows(&m, &mut cache).unwrap();
        assert_eq!(
            arrows[&("E".to_string(), "H".to_string())],
            ArrowKind::Solid
        );
        assert_eq!(
            arrows[&("S".to_string(), "H".to_string())],
            ArrowKind::Dashed
        );
        assert_eq!(
            arrows[&("S".to_string(), "E".to_string())],
            ArrowKind::Solid
        );
    }

    #[test]
    fn exogenous_do_equals_conditioning() {
        let m = eg3();
        let d = do_distribution(&m, &BTreeMap::from([("S".to_string(), 1u8)])).unwrap();
        let full = m.observed_distribution().unwrap();
        let cond = full
            .condition(&BTreeMap::from([("S".to_string(), 1u8)]))
            .unwrap()
            .unwrap();
        assert!(dists_equal(&d, &cond));
    }

    fn hoaffects3() -> CausalModel {
        CausalModel::from_json(
            r#"{
          "name": "hoaffects3",
          "nodes": [
            {"name": "W", "visibility": "observed"},
            {"name": "X", "visibility": "observed"},
            {"name": "Z", "visibility": "observed"},
            {"name": "Y", "visibility": "observed"}
          ],
          "edges": [["W","X"],["X","Z"],["X","Y"],["Z","Y"],["W","Y"]],
          "mechanisms": {
            "X": {"kind": "expr", "expr": {"op":"copy","id":"W"}},
            "Z": {"kind": "expr", "expr": {"op":"copy","id":"X"}},
            "Y": {"kind": "expr", "expr": {"op":"xor","args":[{"op":"var","id":"X"},{"op":"var","id":"Z"},{"op":"var","id":"W"}]}}
          },
          "exogenous": {"W": ["1/2","1/2"]},
          "semantics": "fixed_point"
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn hoaffects3_relations() {
        let m = hoaffects3();
        let mut cache = DoCache::new();
        // X affects Y given do(Z) but XZ does not affect Y.
        assert!(ho_affects(
            &m,
            &node_set(["X"]),
            &node_set(["Y"]),
            &node_set(["Z"]),
            &NodeSet::new(),
            &mut cache
        )
        .unwrap());
        assert!(!ho_affects(
            &m,
            &node_set(["X", "Z"]),
            &node_set(["Y"]),
            &NodeSet::new(),
            &NodeSet::new(),
            &mut cache
        )
        .unwrap());
        // Z affects Y.
        assert!(ho_affects(
            &m,
            &node_set(["Z"]),
            &node_set(["Y"]),
            &NodeSet::new(),
            &NodeSet::new(),
            &mut cache
        )
        .unwrap());
    }

    #[test]
    fn reducibility_examples() {
        // hoaffects1: Z -> Y with isolated X; XZ affects Y is reducible.
        let m1 = CausalModel::from_json(
            r#"{
          "name": "hoaffects1",
          "nodes": [
            {"name": "X", "visibility": "observed"},
            {"name": "Z", "visibility": "observed"},
            {"name": "Y", "visibility": "observed"}
          ],
          "edges": [["Z","Y"]],
          "mechanisms": {
            "Y": {"kind": "expr", "expr": {"op":"copy","id":"Z"}}
          },
          "exogenous": {"X": ["1/2","1/2"], "Z": ["1/2","1/2"]},
          "semantics": "fixed_point"
        }"#,
        )
        .unwrap();
        let mut cache = DoCache::new();
        let rel = AffectsRelation {
            from: node_set(["X", "Z"]),
            to: node_set(["Y"]),
            r#do: NodeSet::new(),
            given: NodeSet::new(),
            holds: true,
            irreducible: None,
        };
        assert!(ho_affects(&m1, &rel.from, &rel.to, &rel.r#do, &rel.given, &mut cache).unwrap());
        assert!(is_reducible(&m1, &rel, &mut cache).unwrap());

        // hoaffects2: collider with biased X; XZ affects Y is irreducible.
        let m2 = CausalModel::from_json(
            r#"{
          "name": "hoaffects2",
          "nodes": [
            {"name": "X", "visibility": "observed"},
            {"name": "Z", "visibility": "observed"},
            {"name": "Y", "visibility": "observed"}
          ],
          "edges": [["X","Y"],["Z","Y"]],
          "mechanisms": {
            "Y": {"kind": "expr", "expr": {"op":"xor","args":[{"op":"var","id":"X"},{"op":"var","id":"Z"}]}}
          },
          "exogenous": {"X": ["3/4","1/4"], "Z": ["1/2","1/2"]},
          "semantics": "fixed_point"
        }"#,
        )
        .unwrap();
        let mut cache = DoCache::new();
        let rel2 = AffectsRelation {
            from: node_set(["X", "Z"]),
            ..rel.clone()
        };
        assert!(ho_affects(
            &m2,
            &rel2.from,
            &rel2.to,
            &rel2.r#do,
            &rel2.given,
            &mut cache
        )
        .unwrap());
        assert!(!is_reducible(&m2, &rel2, &mut cache).unwrap());

        // Singleton sources are never reducible.
        let rel3 = AffectsRelation {
            from: node_set(["Z"]),
            ..rel.clone()
        };
        assert!(!is_reducible(&m2, &rel3, &mut cache).unwrap());
    }

    #[test]
    fn reducible_requires_holding() {
        let m = eg3();
        let mut cache = DoCache::new();
        let rel = AffectsRelation {
            from: node_set(["S"]),
            to: node_set(["H"]),
            r#do: NodeSet::new(),
            given: NodeSet::new(),
            holds: false,
            irreducible: None,
        };
        assert!(matches!(
            is_reducible(&m, &rel, &mut cache),
            Err(AffectsError::NotAnAffectsRelation)
        ));
    }

    #[test]
    fn collider_rule1_antecedent_fails() {
        let m = CausalModel::from_json(
            r#"{
          "name": "collider",
          "nodes": [
            {"name": "A", "visibility": "observed"},
            {"name": "W", "visibility": "observed"},
            {"name": "Y", "visibility": "observed"}
          ],
          "edges": [["A","W"],["Y","W"]],
          "mechanisms": {
            "W": {"kind": "expr", "expr": {"op":"and","args":[{"op":"var","id":"A"},{"op":"var","id":"Y"}]}}
          },
          "exogenous": {"A": ["1/2","1/2"], "Y": ["1/2","1/2"]},
          "semantics": "fixed_point"
        }"#,
        )
        .unwrap();
        let mut cache = DoCache::new();
        // Rule 1 with X = {}, Y = {Y}, Z = {A}, W = {W}: conditioning on the
        // collider d-connects A and Y.
        let rc = do_calculus_verify(
            &m,
            1,
            &NodeSet::new(),
            &node_set(["Y"]),
            &node_set(["A"]),
            &node_set(["W"]),
            &mut cache,
        )
        .unwrap();
        assert!(!rc.antecedent);
        assert_eq!(rc.equality, Equality::NotApplicable);
    }

    #[test]
    fn graphical_nonaffects_tags() {
        // Chain X -> Y: no certificate.
        let chain = CausalGraph::observed(&["X", "Y"], &[("X", "Y")]).unwrap();
        assert_eq!(
            graphical_nonaffects(
                &chain,
                &node_set(["X"]),
                &node_set(["Y"]),
                &NodeSet::new(),
                &NodeSet::new()
            )
            .unwrap(),
            None
        );
        // Reverse: the do-graph separation certificate applies.
        assert_eq!(
            graphical_nonaffects(
                &chain,
                &node_set(["Y"]),
                &node_set(["X"]),
                &NodeSet::new(),
                &NodeSet::new()
            )
            .unwrap(),
            Some(NonAffectsTag::SourceSeparated)
        );
    }
}
