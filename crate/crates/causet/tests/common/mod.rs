//! Shared helpers for the integration and acceptance suites.

use std::collections::BTreeMap;

use causet::affects::{ho_affects, DoCache};
use causet::graph::NodeSet;
use causet::model::CausalModel;

/// Every assignment of the observed nodes into the four disjoint roles
/// (X, Y, Z, W, unused) with Y and Z nonempty and total size ≤ `max_total`.
pub fn rule_tuples(
    observed: &[String],
    max_total: usize,
) -> Vec<(NodeSet, NodeSet, NodeSet, NodeSet)> {
    let mut out = Vec::new();
    let n = observed.len();
    let mut roles = vec![0u8; n];
    loop {
        let mut x = NodeSet::new();
        let mut y = NodeSet::new();
        let mut z = NodeSet::new();
        let mut w = NodeSet::new();
        let mut used = 0usize;
        #[allow(clippy::needless_range_loop)]
        for (i, &r) in roles.iter().enumerate() {
            match r {
                1 => {
                    x.insert(observed[i].clone());
                    used += 1;
                }
                2 => {
                    y.insert(observed[i].clone());
                    used += 1;
                }
                3 => {
                    z.insert(observed[i].clone());
                    used += 1;
                }
                4 => {
                    w.insert(observed[i].clone());
                    used += 1;
                }
                _ => {}
            }
        }
        if !y.is_empty() && !z.is_empty() && used <= max_total {
            out.push((x, y, z, w));
        }
        // Odometer step over the 5 roles.
        let mut i = 0;
        loop {
            if i == n {
                return out;
            }
            roles[i] += 1;
            if roles[i] < 5 {
                break;
            }
            roles[i] = 0;
            i += 1;
        }
    }
}

/// Memoized conditional higher-order affects queries over one model.
pub struct HoMemo<'m> {
    pub model: &'m CausalModel,
    pub cache: DoCache,
    memo: BTreeMap<(NodeSet, NodeSet, NodeSet, NodeSet), bool>,
}

impl<'m> HoMemo<'m> {
    pub fn new(model: &'m CausalModel) -> Self {
        HoMemo {
            model,
            cache: DoCache::new(),
            memo: BTreeMap::new(),
        }
    }

    pub fn ho(&mut self, x: &NodeSet, y: &NodeSet, z: &NodeSet, w: &NodeSet) -> bool {
        let key = (x.clone(), y.clone(), z.clone(), w.clone());
        if let Some(&v) = self.memo.get(&key) {
            return v;
        }
        let v = ho_affects(self.model, x, y, z, w, &mut self.cache)
            .unwrap_or_else(|e| panic!("ho_affects failed on {}: {e}", self.model.name));
        self.memo.insert(key, v);
        v
    }
}

pub fn union(a: &NodeSet, b: &NodeSet) -> NodeSet {
    a.union(b).cloned().collect()
}

pub fn set(ids: &[&str]) -> NodeSet {
    ids.iter().map(|s| s.to_string()).collect()
}
