//! Partially ordered space-times, embeddings of affects relations, the
//! compatibility conditions, and the E^jam scenario checks.
//!
//! Finite posets and (1+1)-Minkowski are decided exactly (the latter in
//! light-cone coordinates over rationals). Future-cone containment in
//! higher-dimensional Minkowski is falsification-only by seeded sampling.

pub mod solver;
mod svg;

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affects::AffectsRelation;
use crate::graph::{fmt_set, NodeSet};
use crate::loops::AffectsSet;
use crate::prob::{fmt_rational, parse_rational, Rational};

pub use svg::render_svg;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpacetimeError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("variable `{0}` has no location")]
    MissingLocation(String),
    #[error("copy point for `{0}` lies outside its accessible region")]
    CopyOutsideAccessible(String),
    #[error("future containment is inconclusive in this geometry")]
    InconclusiveGeometry,
    #[error("search budget exceeded")]
    SearchBudgetExceeded,
    #[error("poset is malformed: {0}")]
    Malformed(String),
    #[error("operation requires a Minkowski embedding")]
    NotMinkowski,
    #[error("explicit accessible regions require a finite poset")]
    ExplicitRegionsNeedFinitePoset,
    #[error("coordinate arity {got} does not match dimension {want}")]
    BadArity { got: usize, want: usize },
}

/// A location: a named element of a finite poset, or a rational coordinate
/// tuple (t, x1..xd) in Minkowski space.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Location {
    Named(String),
    Point(Vec<Rational>),
}

impl Location {
    pub fn point(coords: &[i64]) -> Location {
        Location::Point(
            coords
                .iter()
                .map(|&c| Rational::from_integer(c.into()))
                .collect(),
        )
    }

    pub fn point_rat(coords: Vec<Rational>) -> Location {
        Location::Point(coords)
    }

    pub fn render(&self) -> String {
        match self {
            Location::Named(n) => n.clone(),
            Location::Point(cs) => {
                let parts: Vec<String> = cs.iter().map(fmt_rational).collect();
                format!("({})", parts.join(","))
            }
        }
    }
}

/// Space-time as a bare partial order.
#[derive(Debug, Clone, PartialEq)]
pub enum Poset {
    Finite {
        elements: Vec<String>,
        /// Reflexive-transitive closure of the cover relation,
        /// `closure[i][j]` = elements[i] ⪯ elements[j].
        closure: Vec<Vec<bool>>,
    },
    /// `dim` is the total dimension d+1 (so 2 for (1+1)-Minkowski).
    Minkowski { dim: usize },
}

impl Poset {
    pub fn finite(elements: &[&str], covers: &[(&str, &str)]) -> Result<Poset, SpacetimeError> {
        let els: Vec<String> = elements.iter().map(|s| s.to_string()).collect();
        let n = els.len();
        let idx = |id: &str| {
            els.iter()
                .position(|e| e == id)
                .ok_or_else(|| SpacetimeError::UnknownElement(id.to_string()))
        };
        let mut closure = vec![vec![false; n]; n];
        for (i, row) in closure.iter_mut().enumerate() {
            row[i] = true;
        }
        for (a, b) in covers {
            let (ia, ib) = (idx(a)?, idx(b)?);
            closure[ia][ib] = true;
        }
        // Warshall transitive closure.
        for k in 0..n {
            for i in 0..n {
                if closure[i][k] {
                    let row_k = closure[k].clone();
                    for (j, reach) in row_k.iter().enumerate() {
                        if *reach {
                            closure[i][j] = true;
                        }
                    }
                }
            }
        }
        // Antisymmetry.
        for i in 0..n {
            for j in 0..n {
                if i != j && closure[i][j] && closure[j][i] {
                    return Err(SpacetimeError::Malformed(format!(
                        "order cycle between `{}` and `{}`",
                        els[i], els[j]
                    )));
                }
            }
        }
        Ok(Poset::Finite {
            elements: els,
            closure,
        })
    }

    pub fn minkowski(dim: usize) -> Result<Poset, SpacetimeError> {
        if dim < 2 {
            return Err(SpacetimeError::Malformed(format!(
                "Minkowski dimension {dim} must be at least 2 (one time plus one space)"
            )));
        }
        Ok(Poset::Minkowski { dim })
    }

    fn finite_index(&self, id: &str) -> Result<usize, SpacetimeError> {
        match self {
            Poset::Finite { elements, .. } => elements
                .iter()
                .position(|e| e == id)
                .ok_or_else(|| SpacetimeError::UnknownElement(id.to_string())),
            Poset::Minkowski { .. } => Err(SpacetimeError::UnknownElement(id.to_string())),
        }
    }

    /// a ⪯ b. Exact in all supported geometries: for Minkowski,
    /// Δt ≥ 0 and Δt² ≥ Σ Δxᵢ² over rationals.
    pub fn precedes(&self, a: &Location, b: &Location) -> Result<bool, SpacetimeError> {
        match (self, a, b) {
            (Poset::Finite { closure, .. }, Location::Named(x), Location::Named(y)) => {
                let (i, j) = (self.finite_index(x)?, self.finite_index(y)?);
                Ok(closure[i][j])
            }
            (Poset::Minkowski { dim }, Location::Point(p), Location::Point(q)) => {
                if p.len() != *dim {
                    return Err(SpacetimeError::BadArity {
                        got: p.len(),
                        want: *dim,
                    });
                }
                if q.len() != *dim {
                    return Err(SpacetimeError::BadArity {
                        got: q.len(),
                        want: *dim,
                    });
                }
                let dt = &q[0] - &p[0];
                if dt.is_negative() {
                    return Ok(false);
                }
                let mut space = Rational::zero();
                for k in 1..*dim {
                    let dx = &q[k] - &p[k];
                    space += &dx * &dx;
                }
                Ok(&dt * &dt >= space)
            }
            _ => Err(SpacetimeError::Malformed(
                "location kind does not match the poset".to_string(),
            )),
        }
    }

    pub fn strictly_precedes(&self, a: &Location, b: &Location) -> Result<bool, SpacetimeError> {
        Ok(self.precedes(a, b)? && a != b)
    }

    pub fn spacelike(&self, a: &Location, b: &Location) -> Result<bool, SpacetimeError> {
        Ok(!self.precedes(a, b)? && !self.precedes(b, a)?)
    }
}

/// Light-cone coordinates u = t + x, v = t − x of a (1+1) point.
pub fn lightcone(p: &[Rational]) -> (Rational, Rational) {
    (&p[0] + &p[1], &p[0] - &p[1])
}

pub fn from_lightcone(u: &Rational, v: &Rational) -> Vec<Rational> {
    let two = Rational::from_integer(2.into());
    vec![(u + v) / &two, (u - v) / &two]
}

/// Outcome of a future-cone containment query.
#[derive(Debug, Clone, PartialEq)]
pub enum Containment {
    Holds,
    Falsified {
        witness: Location,
    },
    /// Sampling found no counterexample; the geometry admits no exact
    /// decision here.
    Inconclusive,
}

/// Decides ∩_{a∈A} F̄(a) ⊆ ∩_{b∈B} F̄(b). Empty `B` is the whole poset.
/// Exact for finite posets and (1+1)-Minkowski; a seeded sampling falsifier
/// (never `Holds`) for higher-dimensional Minkowski.
pub fn future_contained(
    poset: &Poset,
    a: &[Location],
    b: &[Location],
    samples: usize,
    seed: u64,
) -> Result<Containment, SpacetimeError> {
    if b.is_empty() {
        return Ok(Containment::Holds);
    }
    if a.is_empty() {
        return Err(SpacetimeError::Malformed(
            "empty intersection base".to_string(),
        ));
    }
    match poset {
        Poset::Finite { elements, .. } => {
            for el in elements {
                let loc = Location::Named(el.clone());
                let in_a = a
                    .iter()
                    .map(|p| poset.precedes(p, &loc))
                    .collect::<Result<Vec<_>, _>>()?
                    .into_iter()
                    .all(|x| x);
                if !in_a {
                    continue;
                }
                for q in b {
                    if !poset.precedes(q, &loc)? {
                        return Ok(Containment::Falsified { witness: loc });
                    }
                }
            }
            Ok(Containment::Holds)
        }
        Poset::Minkowski { dim: 2 } => {
            // The intersection of inclusive futures is the inclusive future
            // of the light-cone join.
            let mut umax: Option<Rational> = None;
            let mut vmax: Option<Rational> = None;
            for loc in a {
                let Location::Point(p) = loc else {
                    return Err(SpacetimeError::Malformed("named point in Minkowski".into()));
                };
                let (u, v) = lightcone(p);
                umax = Some(umax.map_or(u.clone(), |m| if u > m { u.clone() } else { m }));
                vmax = Some(vmax.map_or(v.clone(), |m| if v > m { v.clone() } else { m }));
            }
            let join = Location::Point(from_lightcone(&umax.unwrap(), &vmax.unwrap()));
            for q in b {
                if !poset.precedes(q, &join)? {
                    return Ok(Containment::Falsified { witness: join });
                }
            }
            Ok(Containment::Holds)
        }
        Poset::Minkowski { dim } => sample_falsifier(poset, *dim, a, b, samples, seed),
    }
}

/// Rejection sampling over a rational grid inside the truncated intersection
/// of future cones, reporting any sampled point escaping some F̄(b).
fn sample_falsifier(
    poset: &Poset,
    dim: usize,
    a: &[Location],
    b: &[Location],
    samples: usize,
    seed: u64,
) -> Result<Containment, SpacetimeError> {
    let pts: Vec<&Vec<Rational>> = a
        .iter()
        .map(|l| match l {
            Location::Point(p) => Ok(p),
            Location::Named(n) => Err(SpacetimeError::UnknownElement(n.clone())),
        })
        .collect::<Result<Vec<_>, _>>()?;
    // Bounding box: start at the latest source time, extend by a horizon
    // derived from the coordinate spread.
    let mut t_lo = pts[0][0].clone();
    for p in &pts {
        if p[0] > t_lo {
            t_lo = p[0].clone();
        }
    }
    let mut spread = Rational::one();
    for p in &pts {
        for c in p.iter() {
            let mag = c.abs();
            if mag > spread {
                spread = mag;
            }
        }
    }
    for l in b {
        if let Location::Point(p) = l {
            for c in p.iter() {
                let mag = c.abs();
                if mag > spread {
                    spread = mag;
                }
            }
        }
    }
    let horizon = &spread * Rational::from_integer(4.into()) + Rational::one();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: i64 = 1 << 16;
    let mut tried = 0usize;
    while tried < samples {
        // Uniform rational point in the box.
        let mut coords = Vec::with_capacity(dim);
        let frac = Rational::new(rng.gen_range(0..=grid).into(), grid.into());
        coords.push(&t_lo + &horizon * frac);
        for _ in 1..dim {
            let frac = Rational::new(rng.gen_range(-grid..=grid).into(), grid.into());
            coords.push(&horizon * frac * Rational::from_integer(2.into()));
        }
        let cand = Location::Point(coords);
        tried += 1;
        let in_all = a
            .iter()
            .map(|p| poset.precedes(p, &cand))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .all(|x| x);
        if !in_all {
            continue;
        }
        for q in b {
            if !poset.precedes(q, &cand)? {
                return Ok(Containment::Falsified { witness: cand });
            }
        }
    }
    Ok(Containment::Inconclusive)
}

/// Accessible-region assignment of an embedding.
#[derive(Debug, Clone, PartialEq)]
pub enum Accessible {
    /// compat2: the accessible region is the inclusive future.
    Future,
    /// Explicit element sets; finite posets only.
    Explicit(BTreeMap<String, Vec<String>>),
}

/// An embedding: locations (and accessible regions) for a set of variables
/// over a partial order.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub poset: Poset,
    pub locations: BTreeMap<String, Location>,
    pub accessible: Accessible,
}

impl Embedding {
    pub fn location(&self, id: &str) -> Result<&Location, SpacetimeError> {
        self.locations
            .get(id)
            .ok_or_else(|| SpacetimeError::MissingLocation(id.to_string()))
    }

    pub fn validate(&self) -> Result<(), SpacetimeError> {
        if let Accessible::Explicit(map) = &self.accessible {
            let Poset::Finite { .. } = self.poset else {
                return Err(SpacetimeError::ExplicitRegionsNeedFinitePoset);
            };
            for (id, region) in map {
                if !self.locations.contains_key(id) {
                    return Err(SpacetimeError::MissingLocation(id.clone()));
                }
                for el in region {
                    self.poset.finite_index(el)?;
                }
            }
        }
        for loc in self.locations.values() {
            match (&self.poset, loc) {
                (Poset::Minkowski { dim }, Location::Point(p)) => {
                    if p.len() != *dim {
                        return Err(SpacetimeError::BadArity {
                            got: p.len(),
                            want: *dim,
                        });
                    }
                }
                (Poset::Finite { .. }, Location::Named(n)) => {
                    self.poset.finite_index(n)?;
                }
                _ => {
                    return Err(SpacetimeError::Malformed(
                        "location kind does not match the poset".to_string(),
                    ))
                }
            }
        }
        Ok(())
    }

    /// Explicit accessible region of one variable (finite posets).
    fn explicit_region(&self, id: &str) -> Result<Vec<String>, SpacetimeError> {
        match &self.accessible {
            Accessible::Explicit(map) => map
                .get(id)
                .cloned()
                .ok_or_else(|| SpacetimeError::MissingLocation(id.to_string())),
            Accessible::Future => {
                let Poset::Finite { elements, .. } = &self.poset else {
                    return Err(SpacetimeError::NotMinkowski);
                };
                let here = self.location(id)?;
                let mut out = Vec::new();
                for el in elements {
                    if self.poset.precedes(here, &Location::Named(el.clone()))? {
                        out.push(el.clone());
                    }
                }
                Ok(out)
            }
        }
    }

    /// Whether a point lies in the accessible region of `id`.
    pub fn in_accessible(&self, id: &str, point: &Location) -> Result<bool, SpacetimeError> {
        match &self.accessible {
            Accessible::Future => self.poset.precedes(self.location(id)?, point),
            Accessible::Explicit(_) => {
                let region = self.explicit_region(id)?;
                match point {
                    Location::Named(n) => Ok(region.contains(n)),
                    Location::Point(_) => Err(SpacetimeError::Malformed(
                        "point location in a finite poset".to_string(),
                    )),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompatMode {
    /// compat1 over accessible regions, with compat2 deriving the regions
    /// from locations when `accessible` is `future`.
    Compat,
    /// Pure future-containment of locations, ignoring declared regions.
    Compat1Prime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatReport {
    pub mode: CompatMode,
    pub violated: Vec<(AffectsRelation, Location)>,
}

impl CompatReport {
    pub fn compatible(&self) -> bool {
        self.violated.is_empty()
    }

    pub fn render(&self) -> String {
        if self.compatible() {
            return "compatible\n".to_string();
        }
        let mut out = String::new();
        for (rel, witness) in &self.violated {
            out.push_str(&format!(
                "incompatible: {} (witness {})\n",
                rel.describe(),
                witness.render()
            ));
        }
        out
    }
}

const DEFAULT_SAMPLES: usize = 4096;

/// Compatibility of an affects set with an embedding. Only holding,
/// irreducible relations impose conditions: the joint accessible region of
/// target ∪ do ∪ given must lie inside the source's.
pub fn check_compat(
    a: &AffectsSet,
    e: &Embedding,
    mode: CompatMode,
) -> Result<CompatReport, SpacetimeError> {
    e.validate()?;
    for id in a.variables() {
        e.location(&id)?;
    }
    let mut violated = Vec::new();
    for rel in &a.relations {
        if !rel.holds || rel.irreducible != Some(true) {
            continue;
        }
        let mut target_side: NodeSet = rel.to.clone();
        target_side.extend(rel.r#do.iter().cloned());
        target_side.extend(rel.given.iter().cloned());
        let verdict = match (&mode, &e.accessible) {
            (CompatMode::Compat, Accessible::Explicit(_)) => {
                // Region intersections compared as element sets.
                let inter = |set: &NodeSet| -> Result<Vec<String>, SpacetimeError> {
                    let mut acc: Option<Vec<String>> = None;
                    for id in set {
                        let r = e.explicit_region(id)?;
                        acc = Some(match acc {
                            None => r,
                            Some(prev) => prev.into_iter().filter(|x| r.contains(x)).collect(),
                        });
                    }
                    Ok(acc.unwrap_or_default())
                };
                let rt = inter(&target_side)?;
                let rs = inter(&rel.from)?;
                match rt.iter().find(|x| !rs.contains(*x)) {
                    None => Containment::Holds,
                    Some(w) => Containment::Falsified {
                        witness: Location::Named(w.clone()),
                    },
                }
            }
            _ => {
                let t_locs: Vec<Location> = target_side
                    .iter()
                    .map(|id| e.location(id).cloned())
                    .collect::<Result<_, _>>()?;
                let s_locs: Vec<Location> = rel
                    .from
                    .iter()
                    .map(|id| e.location(id).cloned())
                    .collect::<Result<_, _>>()?;
                future_contained(&e.poset, &t_locs, &s_locs, DEFAULT_SAMPLES, 7)?
            }
        };
        match verdict {
            Containment::Holds => {}
            Containment::Falsified { witness } => violated.push((rel.clone(), witness)),
            Containment::Inconclusive => return Err(SpacetimeError::InconclusiveGeometry),
        }
    }
    Ok(CompatReport { mode, violated })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingClass {
    /// Some pair linked by a holding singleton affects relation shares a
    /// location.
    pub trivial: bool,
    /// Some two distinct variables share a location.
    pub degenerate: bool,
}

pub fn classify_embedding(a: &AffectsSet, e: &Embedding) -> Result<EmbeddingClass, SpacetimeError> {
    let vars: Vec<String> = a.variables().into_iter().collect();
    for id in &vars {
        e.location(id)?;
    }
    let mut trivial = false;
    for rel in &a.relations {
        if !rel.holds
            || rel.from.len() != 1
            || rel.to.len() != 1
            || !rel.r#do.is_empty()
            || !rel.given.is_empty()
        {
            continue;
        }
        let x = rel.from.iter().next().unwrap();
        let y = rel.to.iter().next().unwrap();
        if e.location(x)? == e.location(y)? {
            trivial = true;
        }
    }
    let mut degenerate = false;
    for (i, x) in vars.iter().enumerate() {
        for y in vars.iter().skip(i + 1) {
            if e.location(x)? == e.location(y)? {
                degenerate = true;
            }
        }
    }
    Ok(EmbeddingClass {
        trivial,
        degenerate,
    })
}

/// Seeded stability probe: perturbs every Minkowski coordinate independently
/// by uniform rationals in [−eps, eps] and reports the fraction of trials
/// that stay compatible.
pub fn stability_probe(
    a: &AffectsSet,
    e: &Embedding,
    eps: &Rational,
    trials: usize,
    seed: u64,
) -> Result<Rational, SpacetimeError> {
    let Poset::Minkowski { .. } = e.poset else {
        return Err(SpacetimeError::NotMinkowski);
    };
    let base = check_compat(a, e, CompatMode::Compat)?;
    if !base.compatible() {
        return Err(SpacetimeError::Malformed(
            "stability probe requires a compatible embedding".to_string(),
        ));
    }
    if trials == 0 {
        return Ok(Rational::one());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: i64 = 1 << 16;
    let mut ok = 0usize;
    for _ in 0..trials {
        let mut perturbed = e.clone();
        for loc in perturbed.locations.values_mut() {
            if let Location::Point(coords) = loc {
                for c in coords.iter_mut() {
                    let frac = Rational::new(rng.gen_range(-grid..=grid).into(), grid.into());
                    *c += eps * frac;
                }
            }
        }
        if check_compat(a, &perturbed, CompatMode::Compat)?.compatible() {
            ok += 1;
        }
    }
    Ok(Rational::new((ok as i64).into(), (trials as i64).into()))
}

/// Adds one fresh copy variable per requested point, each with the relation
/// "original affects copy" (irreducible, singleton). Copy points must lie in
/// the copied variable's accessible region.
pub fn augment_with_copies(
    a: &AffectsSet,
    e: &Embedding,
    copy_points: &BTreeMap<String, Vec<Location>>,
) -> Result<(AffectsSet, Embedding), SpacetimeError> {
    let mut relations = a.relations.clone();
    let mut out = e.clone();
    for (id, points) in copy_points {
        e.location(id)?;
        for (k, point) in points.iter().enumerate() {
            if !e.in_accessible(id, point)? {
                return Err(SpacetimeError::CopyOutsideAccessible(id.clone()));
            }
            let copy_id = format!(
                "{id}'{}",
                if k == 0 { String::new() } else { k.to_string() }
            );
            relations.push(AffectsRelation {
                from: [id.clone()].into_iter().collect(),
                to: [copy_id.clone()].into_iter().collect(),
                r#do: NodeSet::new(),
                given: NodeSet::new(),
                holds: true,
                irreducible: Some(true),
            });
            out.locations.insert(copy_id.clone(), point.clone());
            if let Accessible::Explicit(map) = &mut out.accessible {
                // Copies broadcast onward through their own future.
                let mut future = Vec::new();
                if let Poset::Finite { elements, .. } = &e.poset {
                    for el in elements {
                        if e.poset.precedes(point, &Location::Named(el.clone()))? {
                            future.push(el.clone());
                        }
                    }
                }
                map.insert(copy_id, future);
            }
        }
    }
    let set =
        AffectsSet::new(relations).map_err(|err| SpacetimeError::Malformed(err.to_string()))?;
    Ok((set, out))
}

/// Roles of the six variables of the jamming scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EjamRoles {
    pub a: String,
    pub b: String,
    pub c: String,
    pub x: String,
    pub y: String,
    pub z: String,
}

/// Tests the E^jam embedding family: the three party blocks pairwise
/// spacelike, each setting ⪯ its outcome, and the joint future of the two
/// jammed outcomes inside the jammer's future.
pub fn ejam_check(e: &Embedding, roles: &EjamRoles) -> Result<bool, SpacetimeError> {
    let ids = [&roles.a, &roles.b, &roles.c, &roles.x, &roles.y, &roles.z];
    for id in ids {
        e.location(id)?;
    }
    {
        let mut uniq = ids.to_vec();
        uniq.sort();
        uniq.dedup();
        if uniq.len() != 6 {
            return Err(SpacetimeError::Malformed(
                "roles must name six distinct variables".into(),
            ));
        }
    }
    let blocks = [
        [e.location(&roles.a)?, e.location(&roles.x)?],
        [e.location(&roles.b)?, e.location(&roles.y)?],
        [e.location(&roles.c)?, e.location(&roles.z)?],
    ];
    for (i, bi) in blocks.iter().enumerate() {
        for bj in blocks.iter().skip(i + 1) {
            for p in bi {
                for q in bj.iter() {
                    if !e.poset.spacelike(p, q)? {
                        return Ok(false);
                    }
                }
            }
        }
    }
    for (s, o) in [
        (&roles.a, &roles.x),
        (&roles.b, &roles.y),
        (&roles.c, &roles.z),
    ] {
        if !e.poset.precedes(e.location(s)?, e.location(o)?)? {
            return Ok(false);
        }
    }
    let joint = [e.location(&roles.x)?.clone(), e.location(&roles.z)?.clone()];
    match future_contained(
        &e.poset,
        &joint,
        &[e.location(&roles.b)?.clone()],
        DEFAULT_SAMPLES,
        11,
    )? {
        Containment::Holds => Ok(true),
        Containment::Falsified { .. } => Ok(false),
        Containment::Inconclusive => Err(SpacetimeError::InconclusiveGeometry),
    }
}

// ---------------------------------------------------------------------------
// JSON schema for embeddings.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PosetSchema {
    Minkowski {
        dim: usize,
    },
    Finite {
        elements: Vec<String>,
        covers: Vec<(String, String)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocationSchema {
    Named(String),
    Point(Vec<serde_json::Value>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AccessibleSchema {
    Future(String),
    Explicit(BTreeMap<String, Vec<String>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingSchema {
    pub poset: PosetSchema,
    pub locations: BTreeMap<String, LocationSchema>,
    #[serde(default = "default_accessible")]
    pub accessible: AccessibleSchema,
}

fn default_accessible() -> AccessibleSchema {
    AccessibleSchema::Future("future".to_string())
}

impl Embedding {
    pub fn from_json(s: &str) -> Result<Embedding, SpacetimeError> {
        let schema: EmbeddingSchema =
            serde_json::from_str(s).map_err(|e| SpacetimeError::Malformed(format!("json: {e}")))?;
        Embedding::from_schema(&schema)
    }

    pub fn from_schema(schema: &EmbeddingSchema) -> Result<Embedding, SpacetimeError> {
        let poset = match &schema.poset {
            PosetSchema::Minkowski { dim } => Poset::minkowski(*dim)?,
            PosetSchema::Finite { elements, covers } => {
                let els: Vec<&str> = elements.iter().map(String::as_str).collect();
                let cov: Vec<(&str, &str)> = covers
                    .iter()
                    .map(|(a, b)| (a.as_str(), b.as_str()))
                    .collect();
                Poset::finite(&els, &cov)?
            }
        };
        let mut locations = BTreeMap::new();
        for (id, loc) in &schema.locations {
            let l = match loc {
                LocationSchema::Named(n) => Location::Named(n.clone()),
                LocationSchema::Point(vals) => {
                    let mut coords = Vec::new();
                    for v in vals {
                        let r = match v {
                            serde_json::Value::Number(n) => parse_rational(&n.to_string())
                                .map_err(|e| SpacetimeError::Malformed(e.to_string()))?,
                            serde_json::Value::String(s) => parse_rational(s)
                                .map_err(|e| SpacetimeError::Malformed(e.to_string()))?,
                            _ => {
                                return Err(SpacetimeError::Malformed(
                                    "coordinates must be numbers or rational strings".into(),
                                ))
                            }
                        };
                        coords.push(r);
                    }
                    Location::Point(coords)
                }
            };
            locations.insert(id.clone(), l);
        }
        let accessible = match &schema.accessible {
            AccessibleSchema::Future(tag) if tag == "future" => Accessible::Future,
            AccessibleSchema::Future(other) => {
                return Err(SpacetimeError::Malformed(format!(
                    "unknown accessible mode `{other}`"
                )))
            }
            AccessibleSchema::Explicit(map) => Accessible::Explicit(map.clone()),
        };
        let e = Embedding {
            poset,
            locations,
            accessible,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn to_schema(&self) -> EmbeddingSchema {
        let poset = match &self.poset {
            Poset::Minkowski { dim } => PosetSchema::Minkowski { dim: *dim },
            Poset::Finite { elements, closure } => {
                let mut covers = Vec::new();
                for (i, a) in elements.iter().enumerate() {
                    for (j, b) in elements.iter().enumerate() {
                        if i != j && closure[i][j] {
                            covers.push((a.clone(), b.clone()));
                        }
                    }
                }
                PosetSchema::Finite {
                    elements: elements.clone(),
                    covers,
                }
            }
        };
        let locations = self
            .locations
            .iter()
            .map(|(id, loc)| {
                let l = match loc {
                    Location::Named(n) => LocationSchema::Named(n.clone()),
                    Location::Point(coords) => LocationSchema::Point(
                        coords
                            .iter()
                            .map(|c| serde_json::Value::String(fmt_rational(c)))
                            .collect(),
                    ),
                };
                (id.clone(), l)
            })
            .collect();
        let accessible = match &self.accessible {
            Accessible::Future => AccessibleSchema::Future("future".to_string()),
            Accessible::Explicit(map) => AccessibleSchema::Explicit(map.clone()),
        };
        EmbeddingSchema {
            poset,
            locations,
            accessible,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_schema()).expect("embedding serializes")
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (id, loc) in &self.locations {
            out.push_str(&format!("  {id} at {}\n", loc.render()));
        }
        out
    }
}

pub fn fmt_relation_sets(rel: &AffectsRelation) -> String {
    format!("{} -> {}", fmt_set(&rel.from), fmt_set(&rel.to))
}
