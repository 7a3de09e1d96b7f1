//! Exact-rational finite joint distributions over discrete variables.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use super::rational::{fmt_rational, Rational};
use crate::graph::NodeSet;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DistError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("set must be nonempty")]
    EmptySet,
    #[error("weights sum to {0}, expected 1")]
    NotNormalized(String),
    #[error("assignment arity {got} does not match {want} variables")]
    BadArity { got: usize, want: usize },
    #[error("value {value} out of range for `{var}` (cardinality {card})")]
    ValueOutOfRange { var: String, value: u8, card: u8 },
    #[error("negative weight on an assignment")]
    NegativeWeight,
    #[error("malformed conditional distribution: {0}")]
    MalformedConditional(String),
}

/// A joint distribution over an ordered list of finite discrete variables,
/// with exact nonnegative rational weights summing to one. Zero-weight
/// assignments are not stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDistribution {
    vars: Vec<(String, u8)>,
    weights: BTreeMap<Vec<u8>, Rational>,
}

impl JointDistribution {
    pub fn new(
        vars: Vec<(String, u8)>,
        weights: BTreeMap<Vec<u8>, Rational>,
    ) -> Result<Self, DistError> {
        let mut total = Rational::zero();
        let mut clean = BTreeMap::new();
        for (key, w) in weights {
            if key.len() != vars.len() {
                return Err(DistError::BadArity {
                    got: key.len(),
                    want: vars.len(),
                });
            }
            for (i, &v) in key.iter().enumerate() {
                if v >= vars[i].1 {
                    return Err(DistError::ValueOutOfRange {
                        var: vars[i].0.clone(),
                        value: v,
                        card: vars[i].1,
                    });
                }
            }
            if w < Rational::zero() {
                return Err(DistError::NegativeWeight);
            }
            if w.is_zero() {
                continue;
            }
            total += &w;
            clean.insert(key, w);
        }
        if !total.is_one() {
            return Err(DistError::NotNormalized(fmt_rational(&total)));
        }
        Ok(JointDistribution {
            vars,
            weights: clean,
        })
    }

    /// Normalizes raw nonnegative weights; `None` when the total mass is zero.
    pub fn from_unnormalized(
        vars: Vec<(String, u8)>,
        weights: BTreeMap<Vec<u8>, Rational>,
    ) -> Option<Self> {
        let total: Rational = weights.values().cloned().sum();
        if total.is_zero() {
            return None;
        }
        let scaled = weights
            .into_iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(k, w)| (k, w / total.clone()))
            .collect();
        Some(JointDistribution {
            vars,
            weights: scaled,
        })
    }

    pub fn uniform(vars: Vec<(String, u8)>) -> Self {
        let total: u64 = vars.iter().map(|&(_, c)| c as u64).product();
        let mut weights = BTreeMap::new();
        let w = Rational::new(1.into(), total.into());
        for key in all_assignments(&vars) {
            weights.insert(key, w.clone());
        }
        JointDistribution { vars, weights }
    }

    pub fn point_mass(vars: Vec<(String, u8)>, key: Vec<u8>) -> Result<Self, DistError> {
        let mut weights = BTreeMap::new();
        weights.insert(key, Rational::one());
        Self::new(vars, weights)
    }

    pub fn vars(&self) -> &[(String, u8)] {
        &self.vars
    }

    pub fn var_names(&self) -> Vec<String> {
        self.vars.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn cardinality_of(&self, var: &str) -> Option<u8> {
        self.vars.iter().find(|(n, _)| n == var).map(|&(_, c)| c)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Vec<u8>, &Rational)> {
        self.weights.iter()
    }

    pub fn prob_of(&self, key: &[u8]) -> Rational {
        self.weights
            .get(key)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    fn positions(&self, keep: &NodeSet) -> Result<Vec<usize>, DistError> {
        keep.iter()
            .map(|id| {
                self.vars
                    .iter()
                    .position(|(n, _)| n == id)
                    .ok_or_else(|| DistError::UnknownVariable(id.clone()))
            })
            .collect()
    }

    /// Exact marginalization onto `keep`, preserving declaration order.
    pub fn marginal(&self, keep: &NodeSet) -> Result<JointDistribution, DistError> {
        self.positions(keep)?;
        let kept: Vec<usize> = (0..self.vars.len())
            .filter(|i| keep.contains(&self.vars[*i].0))
            .collect();
        let vars: Vec<(String, u8)> = kept.iter().map(|&i| self.vars[i].clone()).collect();
        let mut weights: BTreeMap<Vec<u8>, Rational> = BTreeMap::new();
        for (key, w) in &self.weights {
            let sub: Vec<u8> = kept.iter().map(|&i| key[i]).collect();
            *weights.entry(sub).or_insert_with(Rational::zero) += w;
        }
        Ok(JointDistribution { vars, weights })
    }

    /// Conditions on a partial assignment; `None` when the evidence has
    /// probability zero (an explicit Undefined value, not an error).
    pub fn condition(
        &self,
        evidence: &BTreeMap<String, u8>,
    ) -> Result<Option<JointDistribution>, DistError> {
        let mut positions = Vec::new();
        for (var, val) in evidence {
            let i = self
                .vars
                .iter()
                .position(|(n, _)| n == var)
                .ok_or_else(|| DistError::UnknownVariable(var.clone()))?;
            positions.push((i, *val));
        }
        let restricted: BTreeMap<Vec<u8>, Rational> = self
            .weights
            .iter()
            .filter(|(key, _)| positions.iter().all(|&(i, v)| key[i] == v))
            .map(|(k, w)| (k.clone(), w.clone()))
            .collect();
        Ok(Self::from_unnormalized(self.vars.clone(), restricted))
    }

    pub fn prob_of_event(&self, evidence: &BTreeMap<String, u8>) -> Result<Rational, DistError> {
        let mut positions = Vec::new();
        for (var, val) in evidence {
            let i = self
                .vars
                .iter()
                .position(|(n, _)| n == var)
                .ok_or_else(|| DistError::UnknownVariable(var.clone()))?;
            positions.push((i, *val));
        }
        Ok(self
            .weights
            .iter()
            .filter(|(key, _)| positions.iter().all(|&(i, v)| key[i] == v))
            .map(|(_, w)| w.clone())
            .sum())
    }

    /// Exact conditional-independence test: X ⊥ Y | Z for every z of
    /// positive mass.
    pub fn cond_independent(
        &self,
        x: &NodeSet,
        y: &NodeSet,
        z: &NodeSet,
    ) -> Result<bool, DistError> {
        if x.is_empty() || y.is_empty() {
            return Err(DistError::EmptySet);
        }
        for (a, b) in [(x, y), (x, z), (y, z)] {
            if let Some(v) = a.intersection(b).next() {
                return Err(DistError::OverlappingSets(v.clone()));
            }
        }
        self.positions(x)?;
        self.positions(y)?;
        self.positions(z)?;
        let mut keep = x.clone();
        keep.extend(y.iter().cloned());
        keep.extend(z.iter().cloned());
        let m = self.marginal(&keep)?;
        let zvars: Vec<(String, u8)> = m
            .vars
            .iter()
            .filter(|(n, _)| z.contains(n))
            .cloned()
            .collect();
        for zkey in all_assignments(&zvars) {
            let ev: BTreeMap<String, u8> = zvars
                .iter()
                .map(|(n, _)| n.clone())
                .zip(zkey.iter().copied())
                .collect();
            let cond = match m.condition(&ev)? {
                Some(c) => c,
                None => continue,
            };
            let pxy = cond.marginal(&x.union(y).cloned().collect())?;
            let px = cond.marginal(x)?;
            let py = cond.marginal(y)?;
            // P(xy|z) must factor exactly.
            for key in all_assignments(pxy.vars()) {
                let xkey: Vec<u8> = pxy
                    .vars
                    .iter()
                    .zip(&key)
                    .filter(|((n, _), _)| x.contains(n))
                    .map(|(_, &v)| v)
                    .collect();
                let ykey: Vec<u8> = pxy
                    .vars
                    .iter()
                    .zip(&key)
                    .filter(|((n, _), _)| y.contains(n))
                    .map(|(_, &v)| v)
                    .collect();
                if pxy.prob_of(&key) != px.prob_of(&xkey) * py.prob_of(&ykey) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Checks for any dependence at all between `x` and `y` (Z = ∅ case).
    pub fn correlated(&self, x: &NodeSet, y: &NodeSet) -> Result<bool, DistError> {
        Ok(!self.cond_independent(x, y, &NodeSet::new())?)
    }

    /// Renders the support for reports, in assignment order.
    pub fn render(&self) -> String {
        let header: Vec<&str> = self.vars.iter().map(|(n, _)| n.as_str()).collect();
        let mut out = format!("P({})\n", header.join(","));
        for (key, w) in &self.weights {
            let vals: Vec<String> = key.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("  ({}) = {}\n", vals.join(","), fmt_rational(w)));
        }
        out
    }
}

/// All assignments over `vars` in odometer order (last variable fastest).
pub fn all_assignments(vars: &[(String, u8)]) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for &(_, card) in vars {
        let mut next = Vec::with_capacity(out.len() * card as usize);
        for prefix in &out {
            for v in 0..card {
                let mut key = prefix.clone();
                key.push(v);
                next.push(key);
            }
        }
        out = next;
    }
    out
}

/// A conditional distribution P(outcomes | settings): one normalized joint
/// over the outcome variables per setting assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalDist {
    pub settings: Vec<(String, u8)>,
    pub outcomes: Vec<(String, u8)>,
    /// Keyed by setting assignment; each value is normalized.
    pub table: BTreeMap<Vec<u8>, JointDistribution>,
}

impl ConditionalDist {
    pub fn new(
        settings: Vec<(String, u8)>,
        outcomes: Vec<(String, u8)>,
        table: BTreeMap<Vec<u8>, JointDistribution>,
    ) -> Result<Self, DistError> {
        for key in all_assignments(&settings) {
            let d = table.get(&key).ok_or_else(|| {
                DistError::MalformedConditional(format!("missing setting assignment {key:?}"))
            })?;
            if d.vars() != outcomes.as_slice() {
                return Err(DistError::MalformedConditional(
                    "outcome variables differ across settings".to_string(),
                ));
            }
        }
        Ok(ConditionalDist {
            settings,
            outcomes,
            table,
        })
    }

    pub fn prob(&self, setting: &[u8], outcome: &[u8]) -> Rational {
        self.table
            .get(setting)
            .map(|d| d.prob_of(outcome))
            .unwrap_or_else(Rational::zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::node_set;
    use crate::prob::rational::rat;

    fn xor_dist() -> JointDistribution {
        // Uniform over (A,B,C) with B = A xor C.
        let vars = vec![
            ("A".to_string(), 2),
            ("B".to_string(), 2),
            ("C".to_string(), 2),
        ];
        let mut weights = BTreeMap::new();
        for a in 0..2u8 {
            for c in 0..2u8 {
                weights.insert(vec![a, a ^ c, c], rat(1, 4));
            }
        }
        JointDistribution::new(vars, weights).unwrap()
    }

    #[test]
    fn marginal_uniform_pair() {
        let d = xor_dist();
        let m = d.marginal(&node_set(["A", "B"])).unwrap();
        for key in all_assignments(m.vars()) {
            assert_eq!(m.prob_of(&key), rat(1, 4));
        }
        let m1 = d.marginal(&node_set(["A"])).unwrap();
        assert_eq!(m1.prob_of(&[0]), rat(1, 2));
    }

    #[test]
    fn marginal_of_point_mass() {
        let d = JointDistribution::point_mass(
            vec![("X".to_string(), 2), ("Y".to_string(), 2)],
            vec![1, 1],
        )
        .unwrap();
        let m = d.marginal(&node_set(["Y"])).unwrap();
        assert_eq!(m.prob_of(&[1]), rat(1, 1));
    }

    #[test]
    fn marginal_unknown_var() {
        let d = xor_dist();
        assert!(matches!(
            d.marginal(&node_set(["Q"])),
            Err(DistError::UnknownVariable(_))
        ));
    }

    #[test]
    fn condition_determines_xor() {
        let d = xor_dist();
        let ev = BTreeMap::from([("A".to_string(), 0u8), ("C".to_string(), 1u8)]);
        let c = d.condition(&ev).unwrap().unwrap();
        let m = c.marginal(&node_set(["B"])).unwrap();
        assert_eq!(m.prob_of(&[1]), rat(1, 1));
    }

    #[test]
    fn condition_zero_mass_is_undefined() {
        let d = JointDistribution::point_mass(vec![("A".to_string(), 2)], vec![0]).unwrap();
        let ev = BTreeMap::from([("A".to_string(), 1u8)]);
        assert!(d.condition(&ev).unwrap().is_none());
    }

    #[test]
    fn jamming_ci_structure() {
        let d = xor_dist();
        assert!(d
            .cond_independent(
                &node_set(["B"]),
                &node_set(["A"]),
                &node_set([] as [&str; 0])
            )
            .unwrap());
        assert!(!d
            .cond_independent(&node_set(["B"]), &node_set(["A", "C"]), &NodeSet::new())
            .unwrap());
    }

    #[test]
    fn product_dist_always_independent() {
        let d = JointDistribution::uniform(vec![
            ("X".to_string(), 2),
            ("Y".to_string(), 2),
            ("Z".to_string(), 2),
        ]);
        assert!(d
            .cond_independent(&node_set(["X"]), &node_set(["Y"]), &node_set(["Z"]))
            .unwrap());
    }

    #[test]
    fn overlap_rejected() {
        let d = xor_dist();
        assert!(matches!(
            d.cond_independent(&node_set(["A"]), &node_set(["A"]), &NodeSet::new()),
            Err(DistError::OverlappingSets(_))
        ));
    }

    #[test]
    fn normalization_enforced() {
        let vars = vec![("A".to_string(), 2)];
        let mut w = BTreeMap::new();
        w.insert(vec![0], rat(1, 3));
        assert!(matches!(
            JointDistribution::new(vars, w),
            Err(DistError::NotNormalized(_))
        ));
    }

    #[test]
    fn marginal_then_marginal_commutes() {
        let d = xor_dist();
        let a = d
            .marginal(&node_set(["A", "B"]))
            .unwrap()
            .marginal(&node_set(["A"]))
            .unwrap();
        let b = d.marginal(&node_set(["A"])).unwrap();
        assert_eq!(a, b);
    }
}
