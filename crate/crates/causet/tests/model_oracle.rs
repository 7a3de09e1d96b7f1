//! The observed-distribution engine against an independent brute-force
//! oracle, plus the semantics-equivalence and Markov properties.

use std::collections::BTreeMap;

use causet::corpus;
use causet::model::{CausalModel, Semantics};
use causet::prob::{all_assignments, JointDistribution, Rational};
use num_traits::{One, Zero};

/// Brute-force oracle for fixed-point models: enumerate every full joint
/// assignment over all classical nodes, keep those where every mechanism is
/// satisfied, weight by the exogenous probabilities.
fn brute_force_fixed_point(m: &CausalModel) -> JointDistribution {
    let vars: Vec<(String, u8)> = m
        .graph
        .nodes()
        .iter()
        .filter(|n| n.sort == causet::graph::Sort::Classical)
        .map(|n| (n.id.clone(), m.cardinalities[&n.id]))
        .collect();
    let mut weights: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
    for key in all_assignments(&vars) {
        let env: BTreeMap<String, u8> = vars
            .iter()
            .map(|(n, _)| n.clone())
            .zip(key.iter().copied())
            .collect();
        let mut w = Rational::one();
        let mut ok = true;
        for (name, _) in &vars {
            if let Some(dist) = m.exogenous_classical.get(name) {
                w *= dist[env[name] as usize].clone();
            } else {
                let expected = eval_mech(m, name, &env);
                if expected != env[name] {
                    ok = false;
                    break;
                }
            }
        }
        if ok && !w.is_zero() {
            *weights.entry(key).or_insert_with(Rational::zero) += w;
        }
    }
    JointDistribution::new(vars, weights).expect("oracle weights normalize")
}

fn eval_mech(m: &CausalModel, id: &str, env: &BTreeMap<String, u8>) -> u8 {
    use causet::model::Mechanism;
    match &m.mechanisms[id] {
        Mechanism::Const(v) => *v,
        Mechanism::FunctionTable { parents, rows } => {
            let mut idx = 0usize;
            for p in parents {
                idx = idx * m.cardinalities[p] as usize + env[p] as usize;
            }
            rows[idx]
        }
        Mechanism::Expr { expr } => expr_eval(expr, env),
        Mechanism::QuantumMeasurement { .. } => unreachable!("classical oracle"),
    }
}

fn expr_eval(e: &causet::model::Expr, env: &BTreeMap<String, u8>) -> u8 {
    use causet::model::Expr;
    match e {
        Expr::Var(id) => env[id],
        Expr::Const(v) => *v,
        Expr::Not(x) => 1 - (expr_eval(x, env) & 1),
        Expr::Xor(xs) => xs.iter().fold(0, |a, x| a ^ expr_eval(x, env)),
        Expr::And(xs) => xs.iter().fold(1, |a, x| a & expr_eval(x, env)),
        Expr::Or(xs) => xs.iter().fold(0, |a, x| a | expr_eval(x, env)),
    }
}

#[test]
fn fixed_point_models_match_brute_force_oracle() {
    for entry in corpus::REGISTRY {
        let Some(_) = entry.model_json else { continue };
        let model = entry.model().unwrap();
        if model.semantics != Semantics::FixedPoint || entry.name == "prbox_loop" {
            continue;
        }
        let expected = brute_force_fixed_point(&model);
        let actual = model.full_distribution().unwrap();
        assert!(
            causet::affects::dists_equal(&expected, &actual),
            "{}: engine disagrees with the brute-force oracle",
            entry.name
        );
    }
}

#[test]
fn acyclic_classical_models_are_markov_and_compatible() {
    for entry in corpus::REGISTRY {
        let Some(_) = entry.model_json else { continue };
        let model = entry.model().unwrap();
        if model.semantics != Semantics::FixedPoint {
            continue;
        }
        if model.graph.has_directed_cycle() || entry.name == "prbox_loop" {
            continue;
        }
        assert!(
            model.check_markov_factorization().unwrap(),
            "{}: Markov factorization must hold",
            entry.name
        );
        assert!(
            model.check_dsep_property().unwrap().passed(),
            "{}: d-separation property must hold for Markov models",
            entry.name
        );
    }
}

#[test]
fn post_select_with_no_cuts_equals_fixed_point() {
    for entry in corpus::REGISTRY {
        let Some(json) = entry.model_json else {
            continue;
        };
        let model = entry.model().unwrap();
        if model.semantics != Semantics::FixedPoint
            || model.graph.has_directed_cycle()
            || entry.name == "prbox_loop"
        {
            continue;
        }
        // Re-read the same model under post_select semantics with no cuts.
        let mut schema = causet::model::schema::ModelSchema::from_json(json).unwrap();
        schema.semantics = causet::model::schema::SemanticsSchema::PostSelect;
        schema.post_select = Some(Default::default());
        let ps = CausalModel::from_schema(&schema).unwrap();
        let a = model.observed_distribution().unwrap();
        let b = ps.observed_distribution().unwrap();
        assert!(
            causet::affects::dists_equal(&a, &b),
            "{}: post_select(no cuts) must equal fixed_point",
            entry.name
        );
    }
}

#[test]
fn faithful_fork_has_no_fine_tuning() {
    // Generic non-degenerate tables: no conditional independence beyond the
    // d-separations.
    let fork = CausalModel::from_json(
        r#"{
      "name": "faithful-fork",
      "nodes": [
        {"name": "L", "visibility": "latent"},
        {"name": "A", "visibility": "observed"},
        {"name": "B", "visibility": "observed"},
        {"name": "EA", "visibility": "latent"},
        {"name": "EB", "visibility": "latent"}
      ],
      "edges": [["L","A"],["L","B"],["EA","A"],["EB","B"]],
      "mechanisms": {
        "A": {"kind": "expr", "expr": {"op":"xor","args":[{"op":"var","id":"L"},{"op":"var","id":"EA"}]}},
        "B": {"kind": "expr", "expr": {"op":"xor","args":[{"op":"var","id":"L"},{"op":"var","id":"EB"}]}}
      },
      "exogenous": {"L": ["1/2","1/2"], "EA": ["3/4","1/4"], "EB": ["2/3","1/3"]},
      "semantics": "fixed_point"
    }"#,
    )
    .unwrap();
    assert!(fork.fine_tuned_independences().unwrap().is_empty());
    // The fine-tuned corpus models are not faithful.
    for name in ["jamming", "one_time_pad", "thermostat"] {
        let m = corpus::load_builtin(name).unwrap().model().unwrap();
        assert!(
            !m.fine_tuned_independences().unwrap().is_empty(),
            "{name} should expose fine-tuned independences"
        );
    }
}

#[test]
fn ns3prime_invariant_under_outcome_relabelling() {
    use causet::model::check_ns3prime;
    use causet::prob::ConditionalDist;
    let cd = corpus::load_builtin("ns3_jamming")
        .unwrap()
        .conditional()
        .unwrap();
    assert!(check_ns3prime(&cd).unwrap());
    // Flip the X outcome labels within every setting.
    let flipped: BTreeMap<Vec<u8>, JointDistribution> = cd
        .table
        .iter()
        .map(|(setting, dist)| {
            let mut weights = BTreeMap::new();
            for (key, w) in dist.support() {
                let mut k = key.clone();
                k[0] = 1 - k[0];
                weights.insert(k, w.clone());
            }
            (
                setting.clone(),
                JointDistribution::new(cd.outcomes.clone(), weights).unwrap(),
            )
        })
        .collect();
    let relabelled =
        ConditionalDist::new(cd.settings.clone(), cd.outcomes.clone(), flipped).unwrap();
    assert!(check_ns3prime(&relabelled).unwrap());
}

#[test]
fn padded_independences_hold_in_extended_model() {
    // The jamming model plus a fresh isolated node N: the padded versions of
    // ({B},{A}) independence all hold by enumeration.
    let m = CausalModel::from_json(
        r#"{
      "name": "jamming-plus-n",
      "nodes": [
        {"name": "A", "visibility": "observed"},
        {"name": "B", "visibility": "observed"},
        {"name": "C", "visibility": "observed"},
        {"name": "N", "visibility": "observed"},
        {"name": "L", "visibility": "latent"}
      ],
      "edges": [["B","A"],["B","C"],["L","A"],["L","C"]],
      "mechanisms": {
        "A": {"kind": "table", "parents": ["B","L"], "rows": [0,1,0,1]},
        "C": {"kind": "expr", "expr": {"op":"xor","args":[{"op":"var","id":"B"},{"op":"var","id":"L"}]}}
      },
      "exogenous": {"B": ["1/2","1/2"], "L": ["1/2","1/2"], "N": ["1/3","2/3"]},
      "semantics": "fixed_point"
    }"#,
    )
    .unwrap();
    let base = (
        causet::graph::node_set(["B"]),
        causet::graph::node_set(["A"]),
        causet::graph::NodeSet::new(),
    );
    let s = causet::graph::node_set(["N"]);
    let dist = m.observed_distribution().unwrap();
    assert!(dist.cond_independent(&base.0, &base.1, &base.2).unwrap());
    let padded =
        causet::model::padded_independences(&m.graph, (&base.0, &base.1, &base.2), &s).unwrap();
    for (x, y, z) in padded {
        assert!(
            dist.cond_independent(&x, &y, &z).unwrap(),
            "padded CI {x:?} ⫫ {y:?} | {z:?} fails"
        );
    }
}

#[test]
fn hand_built_table_fails_markov_on_chain() {
    // Chain A -> B -> C with C = A regardless of B: the joint does not
    // factorize as P(A) P(B|A) P(C|B).
    use causet::model::markov_factorizes;
    use causet::prob::rat;
    let g =
        causet::graph::CausalGraph::observed(&["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
    let vars = vec![
        ("A".to_string(), 2u8),
        ("B".to_string(), 2u8),
        ("C".to_string(), 2u8),
    ];
    let mut weights = BTreeMap::new();
    for a in 0..2u8 {
        for b in 0..2u8 {
            weights.insert(vec![a, b, a], rat(1, 4));
        }
    }
    let dist = JointDistribution::new(vars, weights).unwrap();
    assert!(!markov_factorizes(&g, &dist).unwrap());
    // A factorizing distribution on the same chain passes.
    let m = CausalModel::from_json(
        r#"{
      "name": "chain",
      "nodes": [
        {"name": "A", "visibility": "observed"},
        {"name": "B", "visibility": "observed"},
        {"name": "C", "visibility": "observed"}
      ],
      "edges": [["A","B"],["B","C"]],
      "mechanisms": {
        "B": {"kind": "expr", "expr": {"op":"copy","id":"A"}},
        "C": {"kind": "expr", "expr": {"op":"not","arg":{"op":"var","id":"B"}}}
      },
      "exogenous": {"A": ["1/3","2/3"]},
      "semantics": "fixed_point"
    }"#,
    )
    .unwrap();
    assert!(m.check_markov_factorization().unwrap());
}

#[test]
fn condition_then_marginal_commutes() {
    // Conditioning and marginalizing commute when the evidence variables are
    // kept by the marginal.
    let m = corpus::load_builtin("eg2").unwrap().model().unwrap();
    let d = m.observed_distribution().unwrap();
    let keep = causet::graph::node_set(["A", "B", "D"]);
    let ev = BTreeMap::from([("B".to_string(), 1u8)]);
    let a = d.condition(&ev).unwrap().unwrap().marginal(&keep).unwrap();
    let b = d.marginal(&keep).unwrap().condition(&ev).unwrap().unwrap();
    assert_eq!(a, b);
}

#[test]
fn cond_independence_is_symmetric() {
    let m = corpus::load_builtin("jamming").unwrap().model().unwrap();
    let d = m.observed_distribution().unwrap();
    let sets = ["A", "B", "C"].map(|s| causet::graph::node_set([s]));
    for x in &sets {
        for y in &sets {
            if x == y {
                continue;
            }
            let z: causet::graph::NodeSet = sets
                .iter()
                .flatten()
                .filter(|id| !x.contains(*id) && !y.contains(*id))
                .cloned()
                .collect();
            assert_eq!(
                d.cond_independent(x, y, &z).unwrap(),
                d.cond_independent(y, x, &z).unwrap()
            );
        }
    }
}

#[test]
fn ternary_cardinalities_index_correctly() {
    // Mixed cardinalities exercise the odometer indexing in tables,
    // marginals and interventions.
    let m = CausalModel::from_json(
        r#"{
      "name": "ternary",
      "nodes": [
        {"name": "T", "visibility": "observed", "cardinality": 3},
        {"name": "U", "visibility": "observed", "cardinality": 2},
        {"name": "Y", "visibility": "observed", "cardinality": 3}
      ],
      "edges": [["T","Y"],["U","Y"]],
      "mechanisms": {
        "Y": {"kind": "table", "parents": ["T","U"], "rows": [0,2,1,0,2,1]}
      },
      "exogenous": {"T": ["1/2","1/3","1/6"], "U": ["1/4","3/4"]},
      "semantics": "fixed_point"
    }"#,
    )
    .unwrap();
    let d = m.observed_distribution().unwrap();
    // Row order is odometer with the last parent fastest:
    // (T,U) = (0,0)->0, (0,1)->2, (1,0)->1, (1,1)->0, (2,0)->2, (2,1)->1.
    use causet::prob::rat;
    assert_eq!(d.prob_of(&[0, 1, 2]), rat(1, 2) * rat(3, 4));
    assert_eq!(d.prob_of(&[1, 0, 1]), rat(1, 3) * rat(1, 4));
    assert_eq!(d.prob_of(&[2, 1, 1]), rat(1, 6) * rat(3, 4));
    assert_eq!(d.prob_of(&[0, 0, 0]), rat(1, 2) * rat(1, 4));
    // Intervening on the ternary source reweights exactly.
    let doT =
        causet::affects::do_distribution(&m, &BTreeMap::from([("T".to_string(), 2u8)])).unwrap();
    assert_eq!(doT.prob_of(&[2, 0, 2]), rat(1, 4));
    assert_eq!(doT.prob_of(&[2, 1, 1]), rat(3, 4));
    // And the affects machinery sees the three-valued interventions.
    let mut cache = causet::affects::DoCache::new();
    assert!(causet::affects::ho_affects(
        &m,
        &causet::graph::node_set(["T"]),
        &causet::graph::node_set(["Y"]),
        &causet::graph::NodeSet::new(),
        &causet::graph::NodeSet::new(),
        &mut cache
    )
    .unwrap());
}
