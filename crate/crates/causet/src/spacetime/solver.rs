//! Exact embedding search in (1+1)-Minkowski space.
//!
//! Each irreducible holding relation contributes, per source element and per
//! light-cone coordinate, a disjunction over which target-side element
//! dominates it. Distinctness requirements become strict-inequality
//! disjunctions, handled exactly by a symbolic positive slack ε: every bound
//! lives in Q[ε] with lexicographic order, and each branch is a difference
//! constraint system solved by shortest paths.

use std::collections::BTreeMap;
use std::ops::{Add, Neg};

use num_traits::Zero;

use super::{from_lightcone, Accessible, Embedding, Location, Poset, SpacetimeError};
use crate::loops::AffectsSet;
use crate::prob::{rat, Rational};

/// a + b·ε with ε an infinitesimal positive slack; lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct EpsRational {
    a: Rational,
    b: Rational,
}

impl EpsRational {
    fn zero() -> Self {
        EpsRational {
            a: Rational::zero(),
            b: Rational::zero(),
        }
    }

    fn eps() -> Self {
        EpsRational {
            a: Rational::zero(),
            b: Rational::from_integer(1.into()),
        }
    }

    fn concrete(&self, eps: &Rational) -> Rational {
        &self.a + &self.b * eps
    }
}

impl Add for EpsRational {
    type Output = EpsRational;
    fn add(self, rhs: EpsRational) -> EpsRational {
        EpsRational {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
        }
    }
}

impl Neg for EpsRational {
    type Output = EpsRational;
    fn neg(self) -> EpsRational {
        EpsRational {
            a: -self.a,
            b: -self.b,
        }
    }
}

/// One difference constraint x_u ≥ x_v + c.
#[derive(Debug, Clone, PartialEq)]
struct DiffConstraint {
    u: usize,
    v: usize,
    c: EpsRational,
}

/// Bellman–Ford feasibility for a difference constraint system; returns a
/// satisfying assignment or `None` on a negative cycle.
fn solve_difference(n: usize, constraints: &[DiffConstraint]) -> Option<Vec<EpsRational>> {
    // x_u ≥ x_v + c  ⇔  x_v − x_u ≤ −c: edge u → v with weight −c under
    // shortest-path relaxation dist[v] ≤ dist[u] + w.
    let mut dist = vec![EpsRational::zero(); n];
    for round in 0..=n {
        let mut changed = false;
        for k in constraints {
            let cand = dist[k.u].clone() + (-k.c.clone());
            if cand < dist[k.v] {
                dist[k.v] = cand;
                changed = true;
            }
        }
        if !changed {
            return Some(dist);
        }
        if round == n {
            return None;
        }
    }
    Some(dist)
}

/// What to require of the embedding's locations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Require {
    /// Pairs linked by a holding singleton affects relation get distinct
    /// locations.
    Nontrivial,
    /// All variables get pairwise distinct locations.
    Nondegenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EmbedSearch {
    Found(Embedding),
    Unsat { reason: String },
}

/// A disjunction of difference constraints split across the two light-cone
/// coordinate systems.
#[derive(Debug, Clone)]
struct Disjunct {
    u_constraints: Vec<DiffConstraint>,
    v_constraints: Vec<DiffConstraint>,
}

const BRANCH_BUDGET: u64 = 2_000_000;

/// Solves for locations in (1+1)-Minkowski compatible with every irreducible
/// holding relation, under the requested distinctness regime. Exact; returns
/// the lexicographically first feasible branch's solution.
pub fn find_embedding_1p1(a: &AffectsSet, require: Require) -> Result<EmbedSearch, SpacetimeError> {
    let vars: Vec<String> = a.variables().into_iter().collect();
    let index: BTreeMap<&str, usize> = vars
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_str(), i))
        .collect();
    let n = vars.len();

    let mut base_u: Vec<DiffConstraint> = Vec::new();
    let mut base_v: Vec<DiffConstraint> = Vec::new();
    let mut disjunctions: Vec<Vec<Disjunct>> = Vec::new();

    for rel in &a.relations {
        if !rel.holds || rel.irreducible != Some(true) {
            continue;
        }
        let mut target_side: Vec<usize> = rel
            .to
            .iter()
            .chain(rel.r#do.iter())
            .chain(rel.given.iter())
            .map(|id| index[id.as_str()])
            .collect();
        target_side.sort_unstable();
        target_side.dedup();
        for s1 in &rel.from {
            let s = index[s1.as_str()];
            // max over the target side of u ≥ u_{s1}, likewise for v.
            if target_side.len() == 1 {
                let t = target_side[0];
                base_u.push(DiffConstraint {
                    u: t,
                    v: s,
                    c: EpsRational::zero(),
                });
                base_v.push(DiffConstraint {
                    u: t,
                    v: s,
                    c: EpsRational::zero(),
                });
            } else {
                for (push, _coord) in [(true, 'u'), (false, 'v')] {
                    let options = target_side
                        .iter()
                        .map(|&t| {
                            let k = DiffConstraint {
                                u: t,
                                v: s,
                                c: EpsRational::zero(),
                            };
                            if push {
                                Disjunct {
                                    u_constraints: vec![k],
                                    v_constraints: vec![],
                                }
                            } else {
                                Disjunct {
                                    u_constraints: vec![],
                                    v_constraints: vec![k],
                                }
                            }
                        })
                        .collect();
                    disjunctions.push(options);
                }
            }
        }
    }

    // Distinctness disjunctions.
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match require {
        Require::Nondegenerate => {
            for i in 0..n {
                for j in (i + 1)..n {
                    pairs.push((i, j));
                }
            }
        }
        Require::Nontrivial => {
            for rel in &a.relations {
                if !rel.holds
                    || rel.from.len() != 1
                    || rel.to.len() != 1
                    || !rel.r#do.is_empty()
                    || !rel.given.is_empty()
                {
                    continue;
                }
                let i = index[rel.from.iter().next().unwrap().as_str()];
                let j = index[rel.to.iter().next().unwrap().as_str()];
                let p = (i.min(j), i.max(j));
                if !pairs.contains(&p) {
                    pairs.push(p);
                }
            }
        }
    }
    for (i, j) in pairs {
        let strict = |u: usize, v: usize| DiffConstraint {
            u,
            v,
            c: EpsRational::eps(),
        };
        disjunctions.push(vec![
            Disjunct {
                u_constraints: vec![strict(i, j)],
                v_constraints: vec![],
            },
            Disjunct {
                u_constraints: vec![strict(j, i)],
                v_constraints: vec![],
            },
            Disjunct {
                u_constraints: vec![],
                v_constraints: vec![strict(i, j)],
            },
            Disjunct {
                u_constraints: vec![],
                v_constraints: vec![strict(j, i)],
            },
        ]);
    }

    let mut budget = BRANCH_BUDGET;
    let solution = branch(
        n,
        &disjunctions,
        0,
        &mut base_u.clone(),
        &mut base_v.clone(),
        &mut budget,
    );
    let Some(sol) = solution else {
        if budget == 0 {
            return Err(SpacetimeError::SearchBudgetExceeded);
        }
        return Ok(EmbedSearch::Unsat {
            reason: format!(
                "no orientation of {} disjunctive light-cone constraints is feasible under the \
                 {} requirement",
                disjunctions.len(),
                match require {
                    Require::Nontrivial => "non-triviality",
                    Require::Nondegenerate => "non-degeneracy",
                }
            ),
        });
    };

    // Concretize ε: shrink until every constraint of the successful branch
    // holds with the numeric slack substituted.
    let mut eps = rat(1, 2);
    for _ in 0..200 {
        let u_vals: Vec<Rational> = sol.du.iter().map(|x| x.concrete(&eps)).collect();
        let v_vals: Vec<Rational> = sol.dv.iter().map(|x| x.concrete(&eps)).collect();
        let holds = |ks: &[DiffConstraint], vals: &[Rational]| {
            ks.iter()
                .all(|k| &vals[k.u] - &vals[k.v] >= k.c.concrete(&eps))
        };
        if holds(&sol.u_constraints, &u_vals) && holds(&sol.v_constraints, &v_vals) {
            let mut locations = BTreeMap::new();
            for (i, name) in vars.iter().enumerate() {
                locations.insert(
                    name.clone(),
                    Location::Point(from_lightcone(&u_vals[i], &v_vals[i])),
                );
            }
            let e = Embedding {
                poset: Poset::Minkowski { dim: 2 },
                locations,
                accessible: Accessible::Future,
            };
            return Ok(EmbedSearch::Found(e));
        }
        eps /= Rational::from_integer(2.into());
    }
    Err(SpacetimeError::SearchBudgetExceeded)
}

/// The feasible branch's full constraint sets and shortest-path potentials.
#[derive(Debug, Clone)]
struct BranchSolution {
    du: Vec<EpsRational>,
    dv: Vec<EpsRational>,
    u_constraints: Vec<DiffConstraint>,
    v_constraints: Vec<DiffConstraint>,
}

/// Depth-first exploration of the disjunction choices, feasibility-checked
/// at every node; deterministic (first option first).
fn branch(
    n: usize,
    disjunctions: &[Vec<Disjunct>],
    at: usize,
    u_constraints: &mut Vec<DiffConstraint>,
    v_constraints: &mut Vec<DiffConstraint>,
    budget: &mut u64,
) -> Option<BranchSolution> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    let du = solve_difference(n, u_constraints)?;
    let dv = solve_difference(n, v_constraints)?;
    if at == disjunctions.len() {
        return Some(BranchSolution {
            du,
            dv,
            u_constraints: u_constraints.clone(),
            v_constraints: v_constraints.clone(),
        });
    }
    for option in &disjunctions[at] {
        let nu = option.u_constraints.len();
        let nv = option.v_constraints.len();
        u_constraints.extend(option.u_constraints.iter().cloned());
        v_constraints.extend(option.v_constraints.iter().cloned());
        if let Some(found) = branch(
            n,
            disjunctions,
            at + 1,
            u_constraints,
            v_constraints,
            budget,
        ) {
            return Some(found);
        }
        u_constraints.truncate(u_constraints.len() - nu);
        v_constraints.truncate(v_constraints.len() - nv);
    }
    None
}
