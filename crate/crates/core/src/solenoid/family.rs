//! Leafwise measured laminations over the finite transversal `G/G_n`: lifts
//! of closed-curve laminations, the Example 4.3 family, and equivariance and
//! transverse-continuity diagnostics.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::covers::{CoreChain, CosetSpace, TransversalPoint};
use super::group::{reduced_words, GroupWord};
use crate::error::{Error, Result};
use crate::hyperbolic::{geodesics_cross, GeodesicBox};
use crate::lamination::{box_mass, pushforward, Atom, AtomRecord, MeasuredLamination};
use crate::liouville::{frechet_estimate, DEFAULT_SEED};

/// Matching tolerance for axes computed through different products.
const AXIS_TOL: f64 = 1e-9;

/// Conjugators of the atoms of a lifted orbit, in atom order, with the
/// radius of the word ball they were drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitData {
    pub radius: usize,
    pub conjugators: Vec<GroupWord>,
}

/// A measured lamination on every leaf `D × {t}`, `t ∈ G/G_n`.
#[derive(Clone, Debug)]
pub struct LeafwiseLamination {
    cosets: Arc<CosetSpace>,
    leaves: Vec<MeasuredLamination>,
    orbit: Option<OrbitData>,
}

impl LeafwiseLamination {
    pub fn constant(cosets: Arc<CosetSpace>, lam: MeasuredLamination) -> Self {
        let leaves = vec![lam; cosets.len()];
        LeafwiseLamination { cosets, leaves, orbit: None }
    }

    pub fn from_leaves(cosets: Arc<CosetSpace>, leaves: Vec<MeasuredLamination>) -> Result<Self> {
        if leaves.len() != cosets.len() {
            return Err(Error::DepthMismatch { expected: cosets.len(), found: leaves.len() });
        }
        Ok(LeafwiseLamination { cosets, leaves, orbit: None })
    }

    pub fn depth(&self) -> usize {
        self.cosets.depth()
    }

    pub fn cosets(&self) -> &Arc<CosetSpace> {
        &self.cosets
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn leaf(&self, i: usize) -> &MeasuredLamination {
        &self.leaves[i]
    }

    pub fn leaves(&self) -> &[MeasuredLamination] {
        &self.leaves
    }

    pub fn leaf_at(&self, t: &TransversalPoint) -> Result<&MeasuredLamination> {
        Ok(&self.leaves[self.cosets.index_of(t)?])
    }

    pub fn orbit(&self) -> Option<&OrbitData> {
        self.orbit.as_ref()
    }

    pub fn set_leaf(&mut self, i: usize, lam: MeasuredLamination) {
        self.leaves[i] = lam;
    }

    /// Replaces each leaf by the leaf of the first coset in its class modulo
    /// `G_n`: the transversely constant approximation at depth `n`.
    pub fn tlc_approximation(&self, n: usize) -> LeafwiseLamination {
        let reps = self.cosets.class_representatives(n);
        let leaves = reps.iter().map(|&r| self.leaves[r].clone()).collect();
        LeafwiseLamination { cosets: self.cosets.clone(), leaves, orbit: None }
    }

    /// JSON object from coset representative words to atom lists.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<String, Vec<AtomRecord>> = (0..self.len())
            .map(|i| {
                let atoms = self.leaves[i]
                    .atoms()
                    .iter()
                    .map(|a| AtomRecord { p_angle: a.geodesic.p().angle(), q_angle: a.geodesic.q().angle(), weight: a.weight })
                    .collect();
                (self.cosets.rep(i).to_string(), atoms)
            })
            .collect();
        serde_json::to_string_pretty(&map).expect("records serialize")
    }

    /// Reads the JSON form; every coset must be named exactly once.
    pub fn from_json(cosets: Arc<CosetSpace>, text: &str) -> Result<Self> {
        let map: BTreeMap<String, Vec<AtomRecord>> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut leaves: Vec<Option<MeasuredLamination>> = vec![None; cosets.len()];
        for (word, atoms) in map {
            let i = cosets.coset_of(&word.parse()?);
            let atoms = atoms
                .iter()
                .map(|r| Atom::from_angles(r.p_angle, r.q_angle, r.weight))
                .collect::<Result<Vec<_>>>()?;
            if leaves[i].replace(MeasuredLamination::new(atoms)?).is_some() {
                return Err(Error::Parse(format!("coset of {word} assigned twice")));
            }
        }
        let leaves = leaves
            .into_iter()
            .enumerate()
            .map(|(i, l)| l.ok_or_else(|| Error::Parse(format!("coset of {} missing", cosets.rep(i)))))
            .collect::<Result<Vec<_>>>()?;
        LeafwiseLamination::from_leaves(cosets, leaves)
    }
}

/// The axes of `W·s·W⁻¹` over reduced `W` with `|W| ≤ radius`, each seed `s`
/// carrying its weight. Repeated axes are kept once, at the shortest
/// conjugator.
pub fn orbit_lamination(seeds: &[(GroupWord, f64)], radius: usize) -> Result<(MeasuredLamination, Vec<GroupWord>)> {
    let words = reduced_words(radius);
    let mut atoms: Vec<Atom> = Vec::new();
    let mut conjugators: Vec<GroupWord> = Vec::new();
    for (seed, weight) in seeds {
        let axis = seed.axis().ok_or_else(|| Error::NonHyperbolicSeed { word: seed.to_string() })?;
        for w in &words {
            let g = axis.map(&w.matrix());
            if atoms.iter().any(|a| a.geodesic.same_as(&g, AXIS_TOL)) {
                continue;
            }
            if let Some(k) = atoms.iter().position(|a| geodesics_cross(&a.geodesic, &g)) {
                return Err(Error::OrbitCrossing { first: conjugators[k].to_string(), second: w.to_string() });
            }
            atoms.push(Atom::new(g, *weight));
            conjugators.push(w.clone());
        }
    }
    Ok((MeasuredLamination::new(atoms)?, conjugators))
}

/// The transversely constant lift: every coset receives the truncated orbit
/// lamination of the seeds.
pub fn tlc_lift(seeds: &[(GroupWord, f64)], radius: usize, cosets: Arc<CosetSpace>) -> Result<LeafwiseLamination> {
    let (lam, conjugators) = orbit_lamination(seeds, radius)?;
    let mut fam = LeafwiseLamination::constant(cosets, lam);
    fam.orbit = Some(OrbitData { radius, conjugators });
    Ok(fam)
}

/// Choices made at one level of the Example 4.3 construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Example43Level {
    pub level: usize,
    pub mass: f64,
    /// Representatives of the two selected classes in `G_i / G_{i+1}`.
    pub first: String,
    pub second: String,
    /// Index in `G_i / G_{i+1}` of the subgroup generated by the smallest
    /// powers of the seeds lying in `G_i`.
    pub seed_subgroup_index: usize,
    /// Whether that index is at least 3, as the original construction asks.
    pub meets_index_three: bool,
}

#[derive(Clone, Debug)]
pub struct Example43 {
    pub family: LeafwiseLamination,
    pub levels: Vec<Example43Level>,
}

/// Elements of the cyclic subgroup generated by coset `x`.
fn cyclic(space: &CosetSpace, x: usize) -> Vec<usize> {
    let mut out = vec![0];
    let mut y = x;
    while y != 0 {
        out.push(y);
        y = space.mul(y, x);
    }
    out
}

/// Subgroup generated by the given cosets.
fn generated(space: &CosetSpace, gens: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; space.len()];
    seen[0] = true;
    let mut out = vec![0];
    let mut i = 0;
    while i < out.len() {
        for &g in gens {
            let y = space.mul(out[i], g);
            if !seen[y] {
                seen[y] = true;
                out.push(y);
            }
        }
        i += 1;
    }
    out
}

/// The Example 4.3 family at depth `depth`: for each level `i < depth`, the
/// atom `m_i·δ(axis of seed1)` on the cosets of one class `x_1 G_{i+1}` and
/// `m_i·δ(axis of seed2)` on those of another class `x_2 G_{i+1}`, both
/// inside `G_i`.
///
/// The classes are nontrivial, distinct, and `x_1 x_2⁻¹` is not congruent to
/// a power of either seed modulo `G_{i+1}`, so that no seed power carries
/// one class onto the other. When the seeds generate a subgroup of index at
/// least 3 in `G_i/G_{i+1}`, the classes are also taken in distinct
/// nontrivial cosets of that subgroup. The first admissible pair in
/// breadth-first order is used.
pub fn example43_family(
    chain: &CoreChain,
    seed1: &GroupWord,
    seed2: &GroupWord,
    masses: &[f64],
    depth: usize,
) -> Result<Example43> {
    let axis1 = seed1.axis().ok_or_else(|| Error::NonHyperbolicSeed { word: seed1.to_string() })?;
    let axis2 = seed2.axis().ok_or_else(|| Error::NonHyperbolicSeed { word: seed2.to_string() })?;
    if !geodesics_cross(&axis1, &axis2) {
        return Err(Error::CosetSelection { level: 0, reason: "seed axes do not cross".into() });
    }
    if masses.len() + 1 < depth || masses.iter().take(depth.saturating_sub(1)).any(|m| !(*m > 0.0)) {
        return Err(Error::CosetSelection { level: 0, reason: "need a positive mass for every level below the depth".into() });
    }
    let cosets = Arc::new(chain.quotient(depth)?);
    let mut leaves = vec![MeasuredLamination::empty(); cosets.len()];
    let mut levels = Vec::new();
    for i in 1..depth {
        let space = chain.quotient(i + 1)?;
        let inner: Vec<usize> = (0..space.len()).filter(|&x| space.level(x) >= i).collect();
        let smallest_power = |s: &GroupWord| {
            let x = space.coset_of(s);
            let mut y = x;
            let mut k = 1;
            while space.level(y) < i {
                y = space.mul(y, x);
                k += 1;
            }
            (k, y)
        };
        let (_, c1) = smallest_power(seed1);
        let (_, c2) = smallest_power(seed2);
        let h = generated(&space, &[c1, c2]);
        let index = inner.len() / h.len();
        let mut in_h = vec![false; space.len()];
        for &x in &h {
            in_h[x] = true;
        }
        let mut powers = vec![false; space.len()];
        for x in cyclic(&space, space.coset_of(seed1)).into_iter().chain(cyclic(&space, space.coset_of(seed2))) {
            powers[x] = true;
        }
        let admissible = |x1: usize, x2: usize| {
            let avoid = !powers[space.mul(x1, space.inverse(x2))];
            let paper = index < 3 || (!in_h[x1] && !in_h[x2] && !in_h[space.mul(space.inverse(x2), x1)]);
            x1 != 0 && x2 != 0 && x1 != x2 && avoid && paper
        };
        let pair = inner
            .iter()
            .flat_map(|&x1| inner.iter().map(move |&x2| (x1, x2)))
            .find(|&(x1, x2)| x1 < x2 && admissible(x1, x2));
        let Some((x1, x2)) = pair else {
            return Err(Error::CosetSelection {
                level: i,
                reason: format!("no two classes in G_{i}/G_{} avoid the seed powers", i + 1),
            });
        };
        let m = masses[i - 1];
        for (t, leaf) in leaves.iter_mut().enumerate() {
            let x = space.coset_of(cosets.rep(t));
            if x == x1 {
                *leaf = MeasuredLamination::new(vec![Atom::new(axis1, m)])?;
            } else if x == x2 {
                *leaf = MeasuredLamination::new(vec![Atom::new(axis2, m)])?;
            }
        }
        levels.push(Example43Level {
            level: i,
            mass: m,
            first: space.rep(x1).to_string(),
            second: space.rep(x2).to_string(),
            seed_subgroup_index: index,
            meets_index_three: index >= 3,
        });
    }
    Ok(Example43 { family: LeafwiseLamination::from_leaves(cosets, leaves)?, levels })
}

/// One `(coset, box)` pair where the two sides of the equivariance identity
/// differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceIssue {
    pub coset: usize,
    pub coset_rep: String,
    pub box_index: usize,
    pub difference: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub checked: usize,
    /// Differences not explained by the truncation of an orbit.
    pub violations: Vec<EquivarianceIssue>,
    /// Differences caused only by atoms whose conjugators leave the word ball.
    pub truncation_misses: Vec<EquivarianceIssue>,
}

impl EquivarianceReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn mass_of(atoms: &[&Atom], q: &GeodesicBox) -> Result<f64> {
    let mut total = 0.0;
    for a in atoms {
        if q.contains(&a.geodesic)? {
            total += a.weight;
        }
    }
    Ok(total)
}

/// Checks `box_mass(A_*(μ(t)), Q) = box_mass(μ(t·A⁻¹), Q)` for every coset
/// and box. For orbit lifts, atoms of either side without a geometric match
/// on the other are attributed to truncation when their conjugator falls
/// outside the word ball, and a difference made up only of such atoms is
/// reported as a truncation miss.
pub fn equivariance_check(
    fam: &LeafwiseLamination,
    a: &GroupWord,
    boxes: &[GeodesicBox],
    tol: f64,
) -> Result<EquivarianceReport> {
    let m = a.matrix();
    let shift = fam.cosets.coset_of(&a.inverse());
    let mut report = EquivarianceReport::default();
    for t in 0..fam.len() {
        let lhs = pushforward(&m, fam.leaf(t));
        let rhs = fam.leaf(fam.cosets.mul(t, shift));
        let (lhs_trunc, rhs_trunc) = match &fam.orbit {
            Some(orbit) => truncated_atoms(orbit, a, &lhs, rhs),
            None => (Vec::new(), Vec::new()),
        };
        for (k, q) in boxes.iter().enumerate() {
            let diff = box_mass(&lhs, q)? - box_mass(rhs, q)?;
            report.checked += 1;
            if diff.abs() <= tol {
                continue;
            }
            let explained = mass_of(&lhs_trunc, q)? - mass_of(&rhs_trunc, q)?;
            let issue = EquivarianceIssue { coset: t, coset_rep: fam.cosets.rep(t).to_string(), box_index: k, difference: diff };
            if (diff - explained).abs() <= tol {
                report.truncation_misses.push(issue);
            } else {
                report.violations.push(issue);
            }
        }
    }
    Ok(report)
}

/// Unmatched atoms on each side whose conjugators leave the word ball:
/// `A·W` on the pushed side, `W` with `|A⁻¹·W| > radius` on the other.
fn truncated_atoms<'a>(
    orbit: &OrbitData,
    a: &GroupWord,
    lhs: &'a MeasuredLamination,
    rhs: &'a MeasuredLamination,
) -> (Vec<&'a Atom>, Vec<&'a Atom>) {
    let matched = |x: &Atom, side: &MeasuredLamination| side.atoms().iter().any(|y| y.geodesic.same_as(&x.geodesic, AXIS_TOL));
    let outside = |w: &GroupWord| w.len() > orbit.radius;
    let lhs_out = lhs
        .atoms()
        .iter()
        .zip(&orbit.conjugators)
        .filter(|(x, w)| !matched(x, rhs) && outside(&(a * *w)))
        .map(|(x, _)| x)
        .collect();
    let rhs_out = rhs
        .atoms()
        .iter()
        .zip(&orbit.conjugators)
        .filter(|(x, w)| !matched(x, lhs) && outside(&(&a.inverse() * *w)))
        .map(|(x, _)| x)
        .collect();
    (lhs_out, rhs_out)
}

/// Equivariance on the certified sub-family of an orbit lift of radius `L`:
/// the atoms with conjugators of length at most `L − 1`, whose images under
/// a generator stay inside the radius-`L` orbit. The right-hand side is the
/// part of `μ(t·A⁻¹)` with conjugators `W` such that `A⁻¹·W` has length at
/// most `L − 1`.
pub fn certified_equivariance_check(
    fam: &LeafwiseLamination,
    a: &GroupWord,
    boxes: &[GeodesicBox],
    tol: f64,
) -> Result<EquivarianceReport> {
    let orbit = fam.orbit.as_ref().ok_or(Error::MissingOrbitData)?;
    if orbit.radius == 0 {
        return Err(Error::MissingOrbitData);
    }
    let m = a.matrix();
    let shift = fam.cosets.coset_of(&a.inverse());
    let keep = |lam: &MeasuredLamination, pred: &dyn Fn(&GroupWord) -> bool| -> Vec<Atom> {
        lam.atoms().iter().zip(&orbit.conjugators).filter(|(_, w)| pred(w)).map(|(x, _)| *x).collect()
    };
    let mut report = EquivarianceReport::default();
    for t in 0..fam.len() {
        let sub = keep(fam.leaf(t), &|w| w.len() < orbit.radius);
        let lhs: Vec<Atom> = sub.iter().map(|x| Atom::new(x.geodesic.map(&m), x.weight)).collect();
        let a_inv = a.inverse();
        let rhs = keep(fam.leaf(fam.cosets.mul(t, shift)), &|w| (&a_inv * w).len() < orbit.radius);
        for (k, q) in boxes.iter().enumerate() {
            let diff = mass_of(&lhs.iter().collect::<Vec<_>>(), q)? - mass_of(&rhs.iter().collect::<Vec<_>>(), q)?;
            report.checked += 1;
            if diff.abs() > tol {
                report.violations.push(EquivarianceIssue {
                    coset: t,
                    coset_rep: fam.cosets.rep(t).to_string(),
                    box_index: k,
                    difference: diff,
                });
            }
        }
    }
    Ok(report)
}

/// Profinite and Fréchet distance of one leaf from the reference leaf.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusEntry {
    pub coset: usize,
    pub coset_rep: String,
    pub level: usize,
    pub profinite: f64,
    pub frechet: f64,
}

/// Bit pattern of a lamination, used to share Fréchet evaluations between
/// identical leaves.
fn lam_key(lam: &MeasuredLamination) -> Vec<[u64; 3]> {
    lam.atoms()
        .iter()
        .map(|a| [a.geodesic.p().angle().to_bits(), a.geodesic.q().angle().to_bits(), a.weight.to_bits()])
        .collect()
}

type AtomKey = Vec<[u64; 3]>;

/// Fréchet distances between pairs of leaves, evaluated once per distinct
/// pair of laminations.
pub(crate) fn leaf_distances(
    pairs: &[(&MeasuredLamination, &MeasuredLamination)],
    n_max: usize,
    budget: usize,
    seed: u64,
) -> Vec<f64> {
    let mut distinct: HashMap<(AtomKey, AtomKey), usize> = HashMap::new();
    let mut work: Vec<(&MeasuredLamination, &MeasuredLamination)> = Vec::new();
    let slots: Vec<usize> = pairs
        .iter()
        .map(|(x, y)| {
            let next = work.len();
            *distinct.entry((lam_key(x), lam_key(y))).or_insert_with(|| {
                work.push((*x, *y));
                next
            })
        })
        .collect();
    let values: Vec<f64> =
        work.par_iter().map(|(x, y)| frechet_estimate(x, y, n_max, budget, seed).value).collect();
    slots.iter().map(|&s| values[s]).collect()
}

/// For each coset `t ≠ t0`: its profinite distance to `t0` and the Fréchet
/// distance between the two leaves, sorted by decreasing profinite distance.
/// Fréchet estimates use the default seed.
pub fn transverse_continuity_modulus(
    fam: &LeafwiseLamination,
    t0: &TransversalPoint,
    n_max: usize,
    budget: usize,
) -> Result<Vec<ModulusEntry>> {
    let i0 = fam.cosets.index_of(t0)?;
    let others: Vec<usize> = (0..fam.len()).filter(|&t| t != i0).collect();
    let pairs: Vec<_> = others.iter().map(|&t| (fam.leaf(t), fam.leaf(i0))).collect();
    let dists = leaf_distances(&pairs, n_max, budget, DEFAULT_SEED);
    let mut out: Vec<ModulusEntry> = others
        .iter()
        .zip(dists)
        .map(|(&t, frechet)| {
            let d = fam.cosets.dist(t, i0);
            ModulusEntry { coset: t, coset_rep: fam.cosets.rep(t).to_string(), level: d.level, profinite: d.value(), frechet }
        })
        .collect();
    out.sort_by(|x, y| x.level.cmp(&y.level).then(x.coset.cmp(&y.coset)));
    Ok(out)
}

/// `(n, max Fréchet distance over cosets within profinite distance e^{−n})`
/// for `n = 1..=depth−1`.
pub fn modulus_by_radius(entries: &[ModulusEntry], depth: usize) -> Vec<(usize, f64)> {
    (1..depth)
        .map(|n| (n, entries.iter().filter(|e| e.level >= n).map(|e| e.frechet).fold(0.0, f64::max)))
        .collect()
}
