//! Builtin models, affects sets, embeddings, conditional distributions, and
//! golden expected results, embedded from `corpus/` at the repository root.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affects::{
    affects_table, classify_arrows, ho_affects, is_reducible, AffectsRelation, ArrowKind, DoCache,
};
use crate::graph::NodeSet;
use crate::loops::{
    cyclicity_certificate, detect_acl, detect_acl_recursive, AffectsSet, Cyclicity,
};
use crate::model::{check_ns3prime, CausalModel, ModelReport, Violation};
use crate::prob::{parse_rational, ConditionalDist, JointDistribution};
use crate::spacetime::{check_compat, classify_embedding, solver, CompatMode, Embedding};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CorpusError {
    #[error("unknown corpus entry `{0}`")]
    UnknownEntry(String),
    #[error("entry `{entry}` has no {kind}")]
    MissingArtifact { entry: String, kind: &'static str },
    #[error("malformed corpus data in `{entry}`: {detail}")]
    Malformed { entry: String, detail: String },
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub model_json: Option<&'static str>,
    pub affects_set_json: Option<&'static str>,
    pub embedding_json: Option<&'static str>,
    pub conditional_json: Option<&'static str>,
    pub golden_json: Option<&'static str>,
}

macro_rules! corpus_file {
    ($name:literal) => {
        include_str!(concat!("../../../corpus/", $name))
    };
}

const fn entry(name: &'static str) -> CorpusEntry {
    CorpusEntry {
        name,
        model_json: None,
        affects_set_json: None,
        embedding_json: None,
        conditional_json: None,
        golden_json: None,
    }
}

pub const REGISTRY: &[CorpusEntry] = &[
    CorpusEntry {
        model_json: Some(corpus_file!("bell_classical.json")),
        golden_json: Some(corpus_file!("golden/bell_classical.json")),
        ..entry("bell_classical")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("bell_quantum.json")),
        golden_json: Some(corpus_file!("golden/bell_quantum.json")),
        ..entry("bell_quantum")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("thermostat.json")),
        golden_json: Some(corpus_file!("golden/thermostat.json")),
        ..entry("thermostat")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("one_time_pad.json")),
        golden_json: Some(corpus_file!("golden/one_time_pad.json")),
        ..entry("one_time_pad")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("traitor.json")),
        golden_json: Some(corpus_file!("golden/traitor.json")),
        ..entry("traitor")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("nontransitive.json")),
        golden_json: Some(corpus_file!("golden/nontransitive.json")),
        ..entry("nontransitive")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("eg3.json")),
        golden_json: Some(corpus_file!("golden/eg3.json")),
        ..entry("eg3")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("hoaffects1.json")),
        golden_json: Some(corpus_file!("golden/hoaffects1.json")),
        ..entry("hoaffects1")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("hoaffects2.json")),
        golden_json: Some(corpus_file!("golden/hoaffects2.json")),
        ..entry("hoaffects2")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("hoaffects3.json")),
        golden_json: Some(corpus_file!("golden/hoaffects3.json")),
        ..entry("hoaffects3")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("jamming.json")),
        golden_json: Some(corpus_file!("golden/jamming.json")),
        ..entry("jamming")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("eg2.json")),
        golden_json: Some(corpus_file!("golden/eg2.json")),
        ..entry("eg2")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("eg4.json")),
        golden_json: Some(corpus_file!("golden/eg4.json")),
        ..entry("eg4")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("finetuned_collider.json")),
        golden_json: Some(corpus_file!("golden/finetuned_collider.json")),
        ..entry("finetuned_collider")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("acl4_model.json")),
        golden_json: Some(corpus_file!("golden/acl4_model.json")),
        ..entry("acl4_model")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("acl1_faithful.json")),
        golden_json: Some(corpus_file!("golden/acl1_faithful.json")),
        ..entry("acl1_faithful")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("funcloop.json")),
        golden_json: Some(corpus_file!("golden/funcloop.json")),
        ..entry("funcloop")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("q_bell_loop.json")),
        golden_json: Some(corpus_file!("golden/q_bell_loop.json")),
        ..entry("q_bell_loop")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("prbox_loop.json")),
        golden_json: Some(corpus_file!("golden/prbox_loop.json")),
        ..entry("prbox_loop")
    },
    CorpusEntry {
        model_json: Some(corpus_file!("dsep_violation.json")),
        golden_json: Some(corpus_file!("golden/dsep_violation.json")),
        ..entry("dsep_violation")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("acl1_set.json")),
        golden_json: Some(corpus_file!("golden/acl1_set.json")),
        ..entry("acl1_set")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("acl2_set.json")),
        golden_json: Some(corpus_file!("golden/acl2_set.json")),
        ..entry("acl2_set")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("acl3_set.json")),
        golden_json: Some(corpus_file!("golden/acl3_set.json")),
        ..entry("acl3_set")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("acl4_set.json")),
        golden_json: Some(corpus_file!("golden/acl4_set.json")),
        ..entry("acl4_set")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("acl7_set.json")),
        golden_json: Some(corpus_file!("golden/acl7_set.json")),
        ..entry("acl7_set")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("acl9_set.json")),
        golden_json: Some(corpus_file!("golden/acl9_set.json")),
        ..entry("acl9_set")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("acl11_set.json")),
        golden_json: Some(corpus_file!("golden/acl11_set.json")),
        ..entry("acl11_set")
    },
    CorpusEntry {
        affects_set_json: Some(corpus_file!("jamming_set.json")),
        ..entry("jamming_set")
    },
    CorpusEntry {
        embedding_json: Some(corpus_file!("acl4_embedding.json")),
        golden_json: Some(corpus_file!("golden/acl4_embedding.json")),
        ..entry("acl4_embedding")
    },
    CorpusEntry {
        embedding_json: Some(corpus_file!("ejam_embedding.json")),
        ..entry("ejam_embedding")
    },
    CorpusEntry {
        conditional_json: Some(corpus_file!("ns3_jamming.json")),
        golden_json: Some(corpus_file!("golden/ns3_jamming.json")),
        ..entry("ns3_jamming")
    },
    CorpusEntry {
        conditional_json: Some(corpus_file!("ns3_signalling.json")),
        golden_json: Some(corpus_file!("golden/ns3_signalling.json")),
        ..entry("ns3_signalling")
    },
];

pub fn load_builtin(name: &str) -> Result<CorpusEntry, CorpusError> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .copied()
        .ok_or_else(|| CorpusError::UnknownEntry(name.to_string()))
}

pub fn builtin_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.name).collect()
}

impl CorpusEntry {
    pub fn model(&self) -> Result<CausalModel, CorpusError> {
        let json = self.model_json.ok_or(CorpusError::MissingArtifact {
            entry: self.name.to_string(),
            kind: "model",
        })?;
        CausalModel::from_json(json).map_err(|e| CorpusError::Malformed {
            entry: self.name.to_string(),
            detail: e.to_string(),
        })
    }

    pub fn affects_set(&self) -> Result<AffectsSet, CorpusError> {
        let json = self.affects_set_json.ok_or(CorpusError::MissingArtifact {
            entry: self.name.to_string(),
            kind: "affects set",
        })?;
        AffectsSet::from_json(json).map_err(|e| CorpusError::Malformed {
            entry: self.name.to_string(),
            detail: e.to_string(),
        })
    }

    pub fn embedding(&self) -> Result<Embedding, CorpusError> {
        let json = self.embedding_json.ok_or(CorpusError::MissingArtifact {
            entry: self.name.to_string(),
            kind: "embedding",
        })?;
        Embedding::from_json(json).map_err(|e| CorpusError::Malformed {
            entry: self.name.to_string(),
            detail: e.to_string(),
        })
    }

    pub fn conditional(&self) -> Result<ConditionalDist, CorpusError> {
        let json = self.conditional_json.ok_or(CorpusError::MissingArtifact {
            entry: self.name.to_string(),
            kind: "conditional distribution",
        })?;
        parse_conditional(json).map_err(|e| CorpusError::Malformed {
            entry: self.name.to_string(),
            detail: e,
        })
    }

    pub fn golden(&self) -> Result<Vec<GoldenCheck>, CorpusError> {
        match self.golden_json {
            None => Ok(Vec::new()),
            Some(json) => serde_json::from_str(json).map_err(|e| CorpusError::Malformed {
                entry: self.name.to_string(),
                detail: format!("golden: {e}"),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConditionalSchema {
    settings: Vec<(String, u8)>,
    outcomes: Vec<(String, u8)>,
    table: BTreeMap<String, BTreeMap<String, String>>,
}

fn parse_key(s: &str) -> Result<Vec<u8>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u8>().map_err(|e| e.to_string()))
        .collect()
}

pub fn parse_conditional(json: &str) -> Result<ConditionalDist, String> {
    let schema: ConditionalSchema = serde_json::from_str(json).map_err(|e| e.to_string())?;
    let mut table = BTreeMap::new();
    for (skey, dist) in &schema.table {
        let mut weights = BTreeMap::new();
        for (okey, w) in dist {
            weights.insert(
                parse_key(okey)?,
                parse_rational(w).map_err(|e| e.to_string())?,
            );
        }
        let d =
            JointDistribution::new(schema.outcomes.clone(), weights).map_err(|e| e.to_string())?;
        table.insert(parse_key(skey)?, d);
    }
    ConditionalDist::new(schema.settings, schema.outcomes, table).map_err(|e| e.to_string())
}

/// One golden expectation; every variant carries its provenance tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum GoldenCheck {
    ObservedDistribution {
        vars: Vec<(String, u8)>,
        weights: BTreeMap<String, String>,
        provenance: String,
    },
    ObservedError {
        contains: String,
        provenance: String,
    },
    Affects {
        from: Vec<String>,
        to: Vec<String>,
        #[serde(default)]
        r#do: Vec<String>,
        #[serde(default)]
        given: Vec<String>,
        holds: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        irreducible: Option<bool>,
        provenance: String,
    },
    Dsep {
        x: Vec<String>,
        y: Vec<String>,
        #[serde(default)]
        z: Vec<String>,
        holds: bool,
        provenance: String,
    },
    Ci {
        x: Vec<String>,
        y: Vec<String>,
        #[serde(default)]
        z: Vec<String>,
        holds: bool,
        provenance: String,
    },
    DsepProperty {
        passed: bool,
        provenance: String,
    },
    Arrow {
        from: String,
        to: String,
        solid: bool,
        provenance: String,
    },
    /// No affects relation with a nonempty do-conditioning set holds at
    /// |X|,|Y| ≤ 2, |Z|+|W| ≤ 2.
    NoHigherOrderAffects {
        provenance: String,
    },
    FineTunedContains {
        x: Vec<String>,
        y: Vec<String>,
        #[serde(default)]
        z: Vec<String>,
        provenance: String,
    },
    LoopDetect {
        r#type: u8,
        present: bool,
        provenance: String,
    },
    LoopRecursive {
        depth: usize,
        present: bool,
        provenance: String,
    },
    OracleCyclic {
        cyclic: bool,
        provenance: String,
    },
    EmbedCompat {
        set: String,
        mode: CompatMode,
        compatible: bool,
        provenance: String,
    },
    EmbedClass {
        set: String,
        trivial: bool,
        degenerate: bool,
        provenance: String,
    },
    EmbedFind {
        require: String,
        found: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        same_location: Option<(String, String)>,
        provenance: String,
    },
    Ns3Prime {
        holds: bool,
        provenance: String,
    },
}

fn to_set(ids: &[String]) -> NodeSet {
    ids.iter().cloned().collect()
}

fn fail(entry: &str, detail: String) -> Violation {
    Violation {
        kind: "golden".to_string(),
        sets: vec![],
        detail: format!("{entry}: {detail}"),
    }
}

/// Recomputes every golden result from scratch and reports all differences.
pub fn verify_all() -> ModelReport {
    let mut violations = Vec::new();
    for entry in REGISTRY {
        match verify_entry(entry) {
            Ok(mut v) => violations.append(&mut v),
            Err(e) => violations.push(fail(entry.name, e.to_string())),
        }
    }
    ModelReport { violations }
}

pub fn verify_entry(entry: &CorpusEntry) -> Result<Vec<Violation>, CorpusError> {
    let golden = entry.golden()?;
    let mut violations = Vec::new();
    let mut cache = DoCache::new();
    let model = entry.model_json.map(|_| entry.model()).transpose()?;
    let set = entry
        .affects_set_json
        .map(|_| entry.affects_set())
        .transpose()?;
    let embedding = entry
        .embedding_json
        .map(|_| entry.embedding())
        .transpose()?;
    let mut push = |detail: String| violations.push(fail(entry.name, detail));
    for check in &golden {
        match check {
            GoldenCheck::ObservedDistribution {
                vars,
                weights,
                provenance,
            } => {
                let m = model.as_ref().expect("model golden on model entry");
                let mut w = BTreeMap::new();
                for (k, p) in weights {
                    let key = parse_key(k).map_err(|e| CorpusError::Malformed {
                        entry: entry.name.to_string(),
                        detail: e,
                    })?;
                    let r = parse_rational(p).map_err(|e| CorpusError::Malformed {
                        entry: entry.name.to_string(),
                        detail: e.to_string(),
                    })?;
                    w.insert(key, r);
                }
                let expected = JointDistribution::new(vars.clone(), w).map_err(|e| {
                    CorpusError::Malformed {
                        entry: entry.name.to_string(),
                        detail: e.to_string(),
                    }
                })?;
                match m.observed_distribution() {
                    Ok(actual) => {
                        if !crate::affects::dists_equal(&actual, &expected) {
                            push(format!("observed distribution differs ({provenance})"));
                        }
                    }
                    Err(e) => push(format!("observed distribution errored: {e} ({provenance})")),
                }
            }
            GoldenCheck::ObservedError {
                contains,
                provenance,
            } => {
                let m = model.as_ref().expect("model golden on model entry");
                match m.observed_distribution() {
                    Ok(_) => push(format!("expected an evaluation error ({provenance})")),
                    Err(e) => {
                        if !e.to_string().contains(contains) {
                            push(format!(
                                "error `{e}` does not mention `{contains}` ({provenance})"
                            ));
                        }
                    }
                }
            }
            GoldenCheck::Affects {
                from,
                to,
                r#do,
                given,
                holds,
                irreducible,
                provenance,
            } => {
                let m = model.as_ref().expect("model golden on model entry");
                let (fx, fy, fz, fw) = (to_set(from), to_set(to), to_set(r#do), to_set(given));
                match ho_affects(m, &fx, &fy, &fz, &fw, &mut cache) {
                    Ok(actual) => {
                        if actual != *holds {
                            push(format!(
                                "affects {from:?}->{to:?} expected {holds} got {actual} ({provenance})"
                            ));
                        } else if let Some(irr) = irreducible {
                            let rel = AffectsRelation {
                                from: fx,
                                to: fy,
                                r#do: fz,
                                given: fw,
                                holds: true,
                                irreducible: None,
                            };
                            match is_reducible(m, &rel, &mut cache) {
                                Ok(red) => {
                                    if red == *irr {
                                        push(format!(
                                            "irreducibility of {from:?}->{to:?} expected {irr} ({provenance})"
                                        ));
                                    }
                                }
                                Err(e) => push(format!("reducibility errored: {e}")),
                            }
                        }
                    }
                    Err(e) => push(format!("affects errored: {e} ({provenance})")),
                }
            }
            GoldenCheck::Dsep {
                x,
                y,
                z,
                holds,
                provenance,
            } => {
                let m = model.as_ref().expect("model golden on model entry");
                match m.graph.d_separated(&to_set(x), &to_set(y), &to_set(z)) {
                    Ok(actual) => {
                        if actual != *holds {
                            push(format!(
                                "dsep {x:?}⊥{y:?}|{z:?} expected {holds} ({provenance})"
                            ));
                        }
                    }
                    Err(e) => push(format!("dsep errored: {e}")),
                }
            }
            GoldenCheck::Ci {
                x,
                y,
                z,
                holds,
                provenance,
            } => {
                let m = model.as_ref().expect("model golden on model entry");
                let d = match m.observed_distribution() {
                    Ok(d) => d,
                    Err(e) => {
                        push(format!("observed distribution errored: {e}"));
                        continue;
                    }
                };
                match d.cond_independent(&to_set(x), &to_set(y), &to_set(z)) {
                    Ok(actual) => {
                        if actual != *holds {
                            push(format!(
                                "ci {x:?}⫫{y:?}|{z:?} expected {holds} ({provenance})"
                            ));
                        }
                    }
                    Err(e) => push(format!("ci errored: {e}")),
                }
            }
            GoldenCheck::DsepProperty { passed, provenance } => {
                let m = model.as_ref().expect("model golden on model entry");
                match m.check_dsep_property() {
                    Ok(report) => {
                        if report.passed() != *passed {
                            push(format!(
                                "dsep property expected passed={passed} ({provenance})"
                            ));
                        }
                    }
                    Err(e) => push(format!("dsep property errored: {e}")),
                }
            }
            GoldenCheck::Arrow {
                from,
                to,
                solid,
                provenance,
            } => {
                let m = model.as_ref().expect("model golden on model entry");
                match classify_arrows(m, &mut cache) {
                    Ok(map) => match map.get(&(from.clone(), to.clone())) {
                        Some(kind) => {
                            let actual = *kind == ArrowKind::Solid;
                            if actual != *solid {
                                push(format!(
                                    "arrow {from}->{to} expected solid={solid} ({provenance})"
                                ));
                            }
                        }
                        None => push(format!("arrow {from}->{to} not in graph ({provenance})")),
                    },
                    Err(e) => push(format!("arrow classification errored: {e}")),
                }
            }
            GoldenCheck::NoHigherOrderAffects { provenance } => {
                let m = model.as_ref().expect("model golden on model entry");
                match affects_table(m, 2, &mut cache) {
                    Ok(table) => {
                        for rel in &table.relations {
                            if !rel.r#do.is_empty() && rel.holds {
                                push(format!(
                                    "unexpected higher-order relation {} ({provenance})",
                                    rel.describe()
                                ));
                            }
                        }
                    }
                    Err(e) => push(format!("affects table errored: {e}")),
                }
            }
            GoldenCheck::FineTunedContains {
                x,
                y,
                z,
                provenance,
            } => {
                let m = model.as_ref().expect("model golden on model entry");
                match m.fine_tuned_independences() {
                    Ok(list) => {
                        let (fx, fy, fz) = (to_set(x), to_set(y), to_set(z));
                        let hit = list.iter().any(|(a, b, c)| {
                            c == &fz && ((a == &fx && b == &fy) || (a == &fy && b == &fx))
                        });
                        if !hit {
                            push(format!(
                                "fine-tuned independences miss {x:?}⫫{y:?}|{z:?} ({provenance})"
                            ));
                        }
                    }
                    Err(e) => push(format!("fine-tuned independences errored: {e}")),
                }
            }
            GoldenCheck::LoopDetect {
                r#type,
                present,
                provenance,
            } => {
                let s = set.as_ref().expect("loop golden on set entry");
                let actual = detect_acl(s, *r#type).is_some();
                if actual != *present {
                    push(format!(
                        "type {} expected present={present} ({provenance})",
                        r#type
                    ));
                }
            }
            GoldenCheck::LoopRecursive {
                depth,
                present,
                provenance,
            } => {
                let s = set.as_ref().expect("loop golden on set entry");
                let actual = detect_acl_recursive(s, *depth).is_some();
                if actual != *present {
                    push(format!(
                        "depth-{depth} expected present={present} ({provenance})"
                    ));
                }
            }
            GoldenCheck::OracleCyclic { cyclic, provenance } => {
                let s = set.as_ref().expect("loop golden on set entry");
                match cyclicity_certificate(s) {
                    Ok(Cyclicity::Cyclic { .. }) => {
                        if !*cyclic {
                            push(format!("oracle unexpectedly cyclic ({provenance})"));
                        }
                    }
                    Ok(Cyclicity::Unknown { .. }) => {
                        if *cyclic {
                            push(format!("oracle unexpectedly unknown ({provenance})"));
                        }
                    }
                    Err(e) => push(format!("oracle errored: {e}")),
                }
            }
            GoldenCheck::EmbedCompat {
                set: set_name,
                mode,
                compatible,
                provenance,
            } => {
                let e = embedding.as_ref().expect("embed golden on embedding entry");
                let s = load_builtin(set_name)?.affects_set()?;
                match check_compat(&s, e, *mode) {
                    Ok(report) => {
                        if report.compatible() != *compatible {
                            push(format!(
                                "compat expected {compatible} for set `{set_name}` ({provenance})"
                            ));
                        }
                    }
                    Err(err) => push(format!("compat errored: {err}")),
                }
            }
            GoldenCheck::EmbedClass {
                set: set_name,
                trivial,
                degenerate,
                provenance,
            } => {
                let e = embedding.as_ref().expect("embed golden on embedding entry");
                let s = load_builtin(set_name)?.affects_set()?;
                match classify_embedding(&s, e) {
                    Ok(class) => {
                        if class.trivial != *trivial || class.degenerate != *degenerate {
                            push(format!(
                                "classification expected trivial={trivial} degenerate={degenerate} ({provenance})"
                            ));
                        }
                    }
                    Err(err) => push(format!("classification errored: {err}")),
                }
            }
            GoldenCheck::EmbedFind {
                require,
                found,
                same_location,
                provenance,
            } => {
                let s = set.as_ref().expect("embed-find golden on set entry");
                let req = match require.as_str() {
                    "nontrivial" => solver::Require::Nontrivial,
                    "nondegenerate" => solver::Require::Nondegenerate,
                    other => {
                        push(format!("unknown requirement `{other}`"));
                        continue;
                    }
                };
                match solver::find_embedding_1p1(s, req) {
                    Ok(solver::EmbedSearch::Found(e)) => {
                        if !*found {
                            push(format!("embedding unexpectedly found ({provenance})"));
                        } else if let Some((a, b)) = same_location {
                            if e.locations.get(a) != e.locations.get(b) {
                                push(format!(
                                    "expected {a} and {b} at one location ({provenance})"
                                ));
                            }
                        }
                    }
                    Ok(solver::EmbedSearch::Unsat { .. }) => {
                        if *found {
                            push(format!("embedding unexpectedly unsat ({provenance})"));
                        }
                    }
                    Err(err) => push(format!("embed-find errored: {err}")),
                }
            }
            GoldenCheck::Ns3Prime { holds, provenance } => {
                let cd = entry.conditional()?;
                match check_ns3prime(&cd) {
                    Ok(actual) => {
                        if actual != *holds {
                            push(format!("ns3' expected {holds} ({provenance})"));
                        }
                    }
                    Err(e) => push(format!("ns3' errored: {e}")),
                }
            }
        }
    }
    Ok(violations)
}

/// Every corpus model that evaluates to an observed distribution; prbox_loop
/// is deliberately inconsistent and excluded.
pub fn evaluable_models() -> Vec<CausalModel> {
    REGISTRY
        .iter()
        .filter(|e| e.model_json.is_some() && e.name != "prbox_loop")
        .map(|e| e.model().expect("corpus model parses"))
        .collect()
}

/// Evaluable models satisfying the d-separation property — the standing
/// hypothesis of the do-calculus rules and the lemma suite. Of the corpus
/// only dsep_violation fails it, by construction.
pub fn compatible_models() -> Vec<CausalModel> {
    evaluable_models()
        .into_iter()
        .filter(|m| m.check_dsep_property().map(|r| r.passed()).unwrap_or(false))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_contains_required_entries() {
        for name in [
            "bell_classical",
            "bell_quantum",
            "thermostat",
            "one_time_pad",
            "traitor",
            "nontransitive",
            "eg3",
            "hoaffects1",
            "hoaffects2",
            "hoaffects3",
            "jamming",
            "eg2",
            "eg4",
            "finetuned_collider",
            "acl4_model",
            "acl1_faithful",
            "funcloop",
            "q_bell_loop",
            "prbox_loop",
            "acl7_set",
            "acl9_set",
            "acl11_set",
            "acl3_set",
            "acl4_embedding",
        ] {
            assert!(load_builtin(name).is_ok(), "missing registry entry {name}");
        }
        assert!(matches!(
            load_builtin("nope"),
            Err(CorpusError::UnknownEntry(_))
        ));
    }

    #[test]
    fn all_artifacts_parse() {
        for entry in REGISTRY {
            if entry.model_json.is_some() {
                entry
                    .model()
                    .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            }
            if entry.affects_set_json.is_some() {
                entry
                    .affects_set()
                    .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            }
            if entry.embedding_json.is_some() {
                entry
                    .embedding()
                    .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            }
            if entry.conditional_json.is_some() {
                entry
                    .conditional()
                    .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
            }
            entry
                .golden()
                .unwrap_or_else(|e| panic!("{}: {e}", entry.name));
        }
    }

    #[test]
    fn acl4_model_mechanisms() {
        let m = load_builtin("acl4_model").unwrap().model().unwrap();
        assert!(m.graph.has_observed_cycle());
        assert_eq!(m.observed_ids(), vec!["A", "B", "C"]);
    }

    #[test]
    fn model_json_round_trips() {
        for entry in REGISTRY {
            let Some(json) = entry.model_json else {
                continue;
            };
            let schema = crate::model::schema::ModelSchema::from_json(json).unwrap();
            let re = crate::model::schema::ModelSchema::from_json(&schema.to_json()).unwrap();
            assert_eq!(schema, re, "round trip failed for {}", entry.name);
        }
    }
}
