//! Affects causal loop detection.
//!
//! `detect_acl` implements the literal sufficient-condition classes Type 1–8;
//! `detect_acl_recursive` allows completion chains to be incomplete up to a
//! nesting bound (the Type 9/10 style recursion); `cyclicity_certificate` is
//! a sound (incomplete) oracle that derives per-element cause constraints
//! from irreducible relations and searches every orientation for acyclic
//! escape. `hidden_loop_check` verifies a supplied acyclic candidate against
//! a cyclic model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affects::{affects_table, AffectsError, AffectsRelation, DoCache};
use crate::graph::NodeSet;
use crate::model::{CausalModel, ModelError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LoopsError {
    #[error(transparent)]
    Affects(#[from] AffectsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("relation in affects set must hold with known irreducibility: {0}")]
    UndecidedRelation(String),
    #[error("model graph has no directed cycle among observed nodes")]
    NotCyclic,
    #[error("search budget exceeded ({0} choice combinations)")]
    SearchBudgetExceeded(u64),
}

/// A set of holding affects relations with known irreducibility, the input
/// to loop detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffectsSet {
    pub relations: Vec<AffectsRelation>,
}

impl AffectsSet {
    pub fn new(relations: Vec<AffectsRelation>) -> Result<Self, LoopsError> {
        for r in &relations {
            r.validate()?;
            if !r.holds || r.irreducible.is_none() {
                return Err(LoopsError::UndecidedRelation(r.describe()));
            }
        }
        Ok(AffectsSet { relations })
    }

    /// Holding relations extracted from a decided table.
    pub fn from_table(table: &crate::affects::AffectsTable) -> Self {
        AffectsSet {
            relations: table
                .relations
                .iter()
                .filter(|r| r.holds)
                .cloned()
                .collect(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self, LoopsError> {
        let relations: Vec<AffectsRelation> = serde_json::from_str(s)
            .map_err(|e| LoopsError::UndecidedRelation(format!("json: {e}")))?;
        Self::new(relations)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.relations).expect("affects set serializes")
    }

    /// Unconditional zeroth-order relations only; loop classes are phrased
    /// over these.
    fn plain(&self) -> Vec<&AffectsRelation> {
        self.relations
            .iter()
            .filter(|r| r.r#do.is_empty() && r.given.is_empty())
            .collect()
    }

    fn irreducible_plain(&self) -> Vec<&AffectsRelation> {
        self.plain()
            .into_iter()
            .filter(|r| r.irreducible == Some(true))
            .collect()
    }

    pub fn variables(&self) -> NodeSet {
        let mut out = NodeSet::new();
        for r in &self.relations {
            out.extend(r.from.iter().cloned());
            out.extend(r.to.iter().cloned());
            out.extend(r.r#do.iter().cloned());
            out.extend(r.given.iter().cloned());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopWitness {
    /// 1..=8 for the named detectors, 9 for the recursive search, 0 for the
    /// constraint oracle.
    pub type_tag: u8,
    pub chain: Vec<AffectsRelation>,
    pub notes: String,
}

impl LoopWitness {
    pub fn render(&self) -> String {
        let mut out = if self.type_tag == 0 {
            "cyclicity oracle witness\n".to_string()
        } else {
            format!("Type {} witness\n", self.type_tag)
        };
        for r in &self.chain {
            out.push_str(&format!("  {}\n", r.describe()));
        }
        if !self.notes.is_empty() {
            out.push_str(&format!("  note: {}\n", self.notes));
        }
        out
    }
}

fn is_subset(a: &NodeSet, b: &NodeSet) -> bool {
    a.is_subset(b)
}

/// Searches for a witness of the literal definition of loop type `t`.
pub fn detect_acl(a: &AffectsSet, t: u8) -> Option<LoopWitness> {
    match t {
        1 => detect_type1(a),
        2 => detect_type2(a),
        3 => detect_type3(a),
        4 => detect_type4(a),
        5 => detect_type5(a),
        6 => detect_type6(a),
        7 => detect_incomplete(a, false, 1).map(|mut w| {
            w.type_tag = 7;
            w
        }),
        8 => detect_incomplete(a, true, 1).map(|mut w| {
            w.type_tag = 8;
            w
        }),
        _ => None,
    }
}

/// Type 7/8-style search allowing completion chains to be incomplete up to
/// `max_depth` nested levels (depth 1 reproduces Types 7 and 8 exactly).
pub fn detect_acl_recursive(a: &AffectsSet, max_depth: usize) -> Option<LoopWitness> {
    if max_depth < 1 {
        return None;
    }
    detect_incomplete(a, false, max_depth).map(|mut w| {
        w.type_tag = if max_depth == 1 { 7 } else { 9 };
        w
    })
}

fn detect_type1(a: &AffectsSet) -> Option<LoopWitness> {
    let plain = a.plain();
    for r1 in &plain {
        if r1.from.len() != 1 || r1.to.len() != 1 {
            continue;
        }
        for r2 in &plain {
            if r2.from == r1.to && r2.to == r1.from {
                return Some(LoopWitness {
                    type_tag: 1,
                    chain: vec![(*r1).clone(), (*r2).clone()],
                    notes: String::new(),
                });
            }
        }
    }
    None
}

fn detect_type2(a: &AffectsSet) -> Option<LoopWitness> {
    // Cycle in the digraph of singleton affects relations.
    let plain: Vec<&AffectsRelation> = a
        .plain()
        .into_iter()
        .filter(|r| r.from.len() == 1 && r.to.len() == 1)
        .collect();
    let nodes: Vec<String> = {
        let mut s = NodeSet::new();
        for r in &plain {
            s.extend(r.from.iter().cloned());
            s.extend(r.to.iter().cloned());
        }
        s.into_iter().collect()
    };
    // DFS cycle search with lexicographically least start.
    for start in &nodes {
        let mut path: Vec<&AffectsRelation> = Vec::new();
        if let Some(chain) = dfs_singleton_cycle(start, start, &plain, &mut path, &mut vec![]) {
            return Some(LoopWitness {
                type_tag: 2,
                chain,
                notes: String::new(),
            });
        }
    }
    None
}

fn dfs_singleton_cycle<'a>(
    start: &str,
    at: &str,
    rels: &[&'a AffectsRelation],
    path: &mut Vec<&'a AffectsRelation>,
    seen: &mut Vec<String>,
) -> Option<Vec<AffectsRelation>> {
    for r in rels {
        if r.from.iter().next().map(String::as_str) != Some(at) {
            continue;
        }
        let next = r.to.iter().next().unwrap().clone();
        if next == start && !path.is_empty() {
            let mut chain: Vec<AffectsRelation> = path.iter().map(|r| (*r).clone()).collect();
            chain.push((*r).clone());
            return Some(chain);
        }
        if next == start && path.is_empty() {
            // Single-edge "cycle" needs the reverse edge; handled by Type 1.
            continue;
        }
        if seen.contains(&next) {
            continue;
        }
        seen.push(next.clone());
        path.push(*r);
        if let Some(c) = dfs_singleton_cycle(start, &next, rels, path, seen) {
            return Some(c);
        }
        path.pop();
        seen.pop();
    }
    None
}

fn detect_type3(a: &AffectsSet) -> Option<LoopWitness> {
    let irr = a.irreducible_plain();
    for r1 in &irr {
        if r1.to.len() != 1 {
            continue;
        }
        let e2 = r1.to.iter().next().unwrap();
        for r2 in &irr {
            if r2.to.len() != 1 {
                continue;
            }
            let e1 = r2.to.iter().next().unwrap();
            // r1: S1 affects e2 with e2 in S2; r2: S2 affects e1 with e1 in S1;
            // S1 and S2 disjoint.
            if r1.from.contains(e1)
                && r2.from.contains(e2)
                && r1.from.intersection(&r2.from).next().is_none()
            {
                return Some(LoopWitness {
                    type_tag: 3,
                    chain: vec![(*r1).clone(), (*r2).clone()],
                    notes: format!("e1 = {e1}, e2 = {e2}"),
                });
            }
        }
    }
    None
}

fn detect_type4(a: &AffectsSet) -> Option<LoopWitness> {
    // Cycle in the digraph whose nodes are exact sets: edge S -> T when an
    // irreducible relation S affects T exists.
    let irr = a.irreducible_plain();
    for (i, start) in irr.iter().enumerate() {
        let mut path = vec![i];
        if let Some(chain) = dfs_set_cycle(&irr, &start.from, &start.to, &mut path) {
            return Some(LoopWitness {
                type_tag: 4,
                chain,
                notes: String::new(),
            });
        }
    }
    None
}

fn dfs_set_cycle(
    rels: &[&AffectsRelation],
    origin: &NodeSet,
    at: &NodeSet,
    path: &mut Vec<usize>,
) -> Option<Vec<AffectsRelation>> {
    if at == origin {
        return Some(path.iter().map(|&i| rels[i].clone()).collect());
    }
    for (i, r) in rels.iter().enumerate() {
        if path.contains(&i) || &r.from != at {
            continue;
        }
        path.push(i);
        if let Some(c) = dfs_set_cycle(rels, origin, &r.to, path) {
            return Some(c);
        }
        path.pop();
    }
    None
}

fn detect_type5(a: &AffectsSet) -> Option<LoopWitness> {
    // Cycle in the digraph over relations: r -> r' when target(r) ⊆ source(r').
    let irr = a.irreducible_plain();
    for (i, _) in irr.iter().enumerate() {
        let mut path = vec![i];
        if let Some(chain) = dfs_chain_cycle(&irr, i, i, &mut path) {
            return Some(LoopWitness {
                type_tag: 5,
                chain,
                notes: String::new(),
            });
        }
    }
    None
}

fn dfs_chain_cycle(
    rels: &[&AffectsRelation],
    origin: usize,
    at: usize,
    path: &mut Vec<usize>,
) -> Option<Vec<AffectsRelation>> {
    for (j, r) in rels.iter().enumerate() {
        if !is_subset(&rels[at].to, &r.from) {
            continue;
        }
        if j == origin {
            return Some(path.iter().map(|&k| rels[k].clone()).collect());
        }
        if path.contains(&j) {
            continue;
        }
        path.push(j);
        if let Some(c) = dfs_chain_cycle(rels, origin, j, path) {
            return Some(c);
        }
        path.pop();
    }
    None
}

/// Chain search allowing incomplete nodes down to `depth` nested completion
/// levels. At depth 0 every node must be complete (target ⊆ next source).
/// An incomplete node (target ⊄ next source, overlapping it) must itself be
/// repaired by a chain at depth-1 from the uncovered part back into the
/// arriving set.
fn chain_search(
    rels: &[&AffectsRelation],
    from: &NodeSet,
    into: &NodeSet,
    used: &mut Vec<usize>,
    depth: usize,
) -> Option<Vec<AffectsRelation>> {
    for (i, r) in rels.iter().enumerate() {
        if used.contains(&i) {
            continue;
        }
        let start_ok = if depth == 0 {
            is_subset(from, &r.from)
        } else {
            from.intersection(&r.from).next().is_some()
        };
        if !start_ok {
            continue;
        }
        // Repair obligation for an incomplete start node.
        let mut witness = Vec::new();
        if !is_subset(from, &r.from) {
            let uncovered: NodeSet = from.difference(&r.from).cloned().collect();
            let fixed = chain_search(rels, &uncovered, from, &mut used.clone(), depth - 1)?;
            witness.extend(fixed);
        }
        witness.insert(0, (*r).clone());
        if is_subset(&r.to, into) {
            return Some(witness);
        }
        used.push(i);
        if let Some(rest) = chain_search(rels, &r.to, into, used, depth) {
            used.pop();
            witness.extend(rest);
            return Some(witness);
        }
        used.pop();
    }
    None
}

fn detect_type6(a: &AffectsSet) -> Option<LoopWitness> {
    let irr = a.irreducible_plain();
    for base in &irr {
        let mut chains: Vec<AffectsRelation> = vec![(*base).clone()];
        let mut ok = true;
        for e2 in &base.to {
            let single: NodeSet = [e2.clone()].into_iter().collect();
            // A complete chain whose first source contains e2, ending in S1.
            match complete_chain_from_element(&irr, &single, &base.from) {
                Some(c) => chains.extend(c),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(LoopWitness {
                type_tag: 6,
                chain: chains,
                notes: "one complete chain per target element".to_string(),
            });
        }
    }
    None
}

/// Complete chain starting at a relation whose source contains the element,
/// with every later node complete, ending inside `into`.
fn complete_chain_from_element(
    rels: &[&AffectsRelation],
    element: &NodeSet,
    into: &NodeSet,
) -> Option<Vec<AffectsRelation>> {
    for (i, r) in rels.iter().enumerate() {
        if !is_subset(element, &r.from) {
            continue;
        }
        if is_subset(&r.to, into) {
            return Some(vec![(*r).clone()]);
        }
        let mut used = vec![i];
        if let Some(rest) = chain_search(rels, &r.to, into, &mut used, 0) {
            let mut out = vec![(*r).clone()];
            out.extend(rest);
            return Some(out);
        }
    }
    None
}

/// Shared search for Types 7 and 8 (and their depth-bounded recursions):
/// a base irreducible relation S1 affects S2 plus an incomplete chain from a
/// subset of S2 (Type 7) or each element of S2 (Type 8) back into S1, with
/// every incomplete node repaired by a chain at one less nesting level.
fn detect_incomplete(a: &AffectsSet, per_element: bool, max_depth: usize) -> Option<LoopWitness> {
    let irr = a.irreducible_plain();
    for base in &irr {
        if per_element {
            let mut all = vec![(*base).clone()];
            let mut ok = true;
            for e2 in &base.to {
                let single: NodeSet = [e2.clone()].into_iter().collect();
                match incomplete_chain_start(&irr, &single, &base.to, &base.from, max_depth) {
                    Some(c) => all.extend(c),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Some(LoopWitness {
                    type_tag: 8,
                    chain: all,
                    notes: String::new(),
                });
            }
        } else {
            // Some nonempty overlap s2 = S2 ∩ first-source works.
            if let Some(c) = incomplete_chain_start(&irr, &base.to, &base.to, &base.from, max_depth)
            {
                let mut all = vec![(*base).clone()];
                all.extend(c);
                return Some(LoopWitness {
                    type_tag: 7,
                    chain: all,
                    notes: String::new(),
                });
            }
        }
    }
    None
}

/// First hop of an incomplete chain: a relation whose source meets `overlap`
/// (exactly the designated subset when per-element), with the arriving set
/// `arrives` repaired at depth-1 if not covered, then a chain at the same
/// depth from the hop's target into `into`.
fn incomplete_chain_start(
    rels: &[&AffectsRelation],
    overlap: &NodeSet,
    arrives: &NodeSet,
    into: &NodeSet,
    max_depth: usize,
) -> Option<Vec<AffectsRelation>> {
    for (i, r) in rels.iter().enumerate() {
        let inter: NodeSet = arrives.intersection(&r.from).cloned().collect();
        if inter.is_empty() {
            continue;
        }
        if overlap.len() == 1 && &inter != overlap {
            continue;
        }
        let mut witness = vec![(*r).clone()];
        if !is_subset(arrives, &r.from) {
            let uncovered: NodeSet = arrives.difference(&r.from).cloned().collect();
            let fixed = chain_search(rels, &uncovered, arrives, &mut vec![], max_depth - 1)?;
            witness.extend(fixed);
        }
        if is_subset(&r.to, into) {
            return Some(witness);
        }
        // Continuation nodes stay at the same nesting level; their own
        // incomplete nodes are repaired one level down inside chain_search.
        let mut used = vec![i];
        if let Some(rest) = chain_search(rels, &r.to, into, &mut used, max_depth) {
            witness.extend(rest);
            return Some(witness);
        }
    }
    None
}

/// Result of the cause-constraint cyclicity oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cyclicity {
    /// Every constraint-satisfying orientation of element-level cause
    /// relations contains a directed cycle.
    Cyclic { explanation: String },
    /// Some orientation is acyclic (held in `witness` as cause pairs), or
    /// the set imposes no constraints.
    Unknown {
        acyclic_witness: Vec<(String, String)>,
    },
}

const ORACLE_BUDGET: u64 = 5_000_000;

/// Derives disjunctive cause constraints — per source element for
/// irreducible relations, set-level otherwise — and decides whether every
/// choice of atoms forces a directed cycle.
pub fn cyclicity_certificate(a: &AffectsSet) -> Result<Cyclicity, LoopsError> {
    let mut constraints: Vec<Vec<(String, String)>> = Vec::new();
    for r in &a.relations {
        let targets: NodeSet = r.to.union(&r.given).cloned().collect();
        if r.irreducible == Some(true) {
            for ex in &r.from {
                constraints.push(targets.iter().map(|t| (ex.clone(), t.clone())).collect());
            }
        } else {
            let mut atoms = Vec::new();
            for ex in &r.from {
                for t in &targets {
                    atoms.push((ex.clone(), t.clone()));
                }
            }
            constraints.push(atoms);
        }
    }
    let mut budget: u64 = ORACLE_BUDGET;
    let mut chosen: Vec<(String, String)> = Vec::new();
    match search_acyclic(&constraints, 0, &mut chosen, &mut budget) {
        SearchOutcome::FoundAcyclic(witness) => Ok(Cyclicity::Unknown {
            acyclic_witness: witness,
        }),
        SearchOutcome::AllCyclic => Ok(Cyclicity::Cyclic {
            explanation: format!(
                "all {} disjunctive cause constraints force a directed cycle in every orientation",
                constraints.len()
            ),
        }),
        SearchOutcome::Exhausted => Err(LoopsError::SearchBudgetExceeded(ORACLE_BUDGET)),
    }
}

enum SearchOutcome {
    FoundAcyclic(Vec<(String, String)>),
    AllCyclic,
    Exhausted,
}

fn search_acyclic(
    constraints: &[Vec<(String, String)>],
    at: usize,
    chosen: &mut Vec<(String, String)>,
    budget: &mut u64,
) -> SearchOutcome {
    if *budget == 0 {
        return SearchOutcome::Exhausted;
    }
    *budget -= 1;
    if has_pair_cycle(chosen) {
        // Early prune: this branch is already cyclic.
        return SearchOutcome::AllCyclic;
    }
    if at == constraints.len() {
        return SearchOutcome::FoundAcyclic(chosen.clone());
    }
    for atom in &constraints[at] {
        chosen.push(atom.clone());
        match search_acyclic(constraints, at + 1, chosen, budget) {
            SearchOutcome::AllCyclic => {
                chosen.pop();
            }
            other => {
                chosen.pop();
                return other;
            }
        }
    }
    SearchOutcome::AllCyclic
}

fn has_pair_cycle(pairs: &[(String, String)]) -> bool {
    // Kahn's algorithm over the chosen cause pairs.
    let mut nodes = NodeSet::new();
    for (a, b) in pairs {
        nodes.insert(a.clone());
        nodes.insert(b.clone());
    }
    let mut indeg: BTreeMap<&str, usize> = nodes.iter().map(|n| (n.as_str(), 0)).collect();
    for (_, b) in pairs {
        *indeg.get_mut(b.as_str()).unwrap() += 1;
    }
    let mut ready: Vec<&str> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut removed = 0usize;
    while let Some(n) = ready.pop() {
        removed += 1;
        for (a, b) in pairs {
            if a == n {
                let d = indeg.get_mut(b.as_str()).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.push(b.as_str());
                }
            }
        }
    }
    removed != nodes.len()
}

/// Verifies a hidden-causal-loop candidate: the candidate graph must be
/// acyclic while reproducing the cyclic model's observed distribution and
/// full affects table exactly.
pub fn hidden_loop_check(m: &CausalModel, candidate: &CausalModel) -> Result<bool, LoopsError> {
    if !m.graph.has_observed_cycle() {
        return Err(LoopsError::NotCyclic);
    }
    if candidate.graph.has_directed_cycle() {
        return Ok(false);
    }
    let d1 = m.observed_distribution()?;
    let d2 = candidate.observed_distribution()?;
    if !crate::affects::dists_equal(&d1, &d2) {
        return Ok(false);
    }
    let max_set = m.observed_ids().len().saturating_sub(1).max(1);
    let mut c1 = DoCache::new();
    let mut c2 = DoCache::new();
    let t1 = affects_table(m, max_set, &mut c1)?;
    let t2 = affects_table(candidate, max_set, &mut c2)?;
    for r1 in &t1.relations {
        match t2.find(&r1.from, &r1.to, &r1.r#do, &r1.given) {
            Some(r2) if r2.holds == r1.holds => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Convenience: a singleton irreducible relation (used by tests and corpus).
pub fn plain_relation(from: &[&str], to: &[&str], irreducible: bool) -> AffectsRelation {
    AffectsRelation {
        from: from.iter().map(|s| s.to_string()).collect(),
        to: to.iter().map(|s| s.to_string()).collect(),
        r#do: NodeSet::new(),
        given: NodeSet::new(),
        holds: true,
        irreducible: Some(irreducible),
    }
}

pub fn describe_sets(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("{a}->{b}"))
        .collect::<Vec<_>>()
        .join(", ")
}
