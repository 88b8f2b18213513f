//! Finite covers as permutation pairs, the chain of core subgroups `G_n`,
//! the finite quotients `G/G_n` and the profinite metric.

use std::collections::{BTreeSet, HashMap};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use super::group::{GroupWord, Letter};
use crate::error::{Error, Result};
use crate::hyperbolic::{BoundaryPoint, DiskPoint};

/// Largest index accepted by the subgroup enumeration by default.
pub const INDEX_CAP: usize = 4;
/// Largest quotient `G/G_n` built by default.
pub const QUOTIENT_CAP: usize = 200_000;

fn inverse_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

fn is_perm(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter().all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

/// A transitive right action of the free group on `{0, …, k−1}`, given by
/// the images of the generators. It stands for the stabilizer of `0`, a
/// subgroup of index `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiniteCover {
    a: Vec<usize>,
    b: Vec<usize>,
}

/// Serialized form with symbols `1..=k` and the basepoint `1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverRecord {
    pub degree: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl FiniteCover {
    pub fn new(a: Vec<usize>, b: Vec<usize>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() || !is_perm(&a) || !is_perm(&b) {
            return Err(Error::InvalidChain("generators must be permutations of one nonempty set".into()));
        }
        let cover = FiniteCover { a, b };
        if !cover.is_transitive() {
            return Err(Error::InvalidChain("action is not transitive".into()));
        }
        Ok(cover)
    }

    pub fn degree(&self) -> usize {
        self.a.len()
    }

    fn generators(&self) -> [Vec<usize>; 4] {
        [self.a.clone(), inverse_perm(&self.a), self.b.clone(), inverse_perm(&self.b)]
    }

    fn is_transitive(&self) -> bool {
        let gens = self.generators();
        let mut seen = vec![false; self.degree()];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(x) = stack.pop() {
            for g in &gens {
                if !seen[g[x]] {
                    seen[g[x]] = true;
                    stack.push(g[x]);
                }
            }
        }
        seen.iter().all(|s| *s)
    }

    /// `x · w`, reading `w` left to right.
    pub fn act(&self, x: usize, w: &GroupWord) -> usize {
        let gens = self.generators();
        w.letters().iter().fold(x, |x, l| gens[l.index()][x])
    }

    /// Membership in the stabilizer of the basepoint.
    pub fn contains(&self, w: &GroupWord) -> bool {
        self.act(0, w) == 0
    }

    /// Relabels points in breadth-first order from the basepoint, trying
    /// generators in the order `a, A, b, B`. Two covers give the same subgroup
    /// exactly when their canonical forms agree.
    pub fn canonical(&self) -> FiniteCover {
        let gens = self.generators();
        let k = self.degree();
        let mut label = vec![usize::MAX; k];
        let mut order = vec![0];
        label[0] = 0;
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            for g in &gens {
                if label[g[x]] == usize::MAX {
                    label[g[x]] = order.len();
                    order.push(g[x]);
                }
            }
        }
        let relabel = |p: &[usize]| order.iter().map(|&x| label[p[x]]).collect();
        FiniteCover { a: relabel(&self.a), b: relabel(&self.b) }
    }

    pub fn record(&self) -> CoverRecord {
        CoverRecord {
            degree: self.degree(),
            a: self.a.iter().map(|x| x + 1).collect(),
            b: self.b.iter().map(|x| x + 1).collect(),
        }
    }

    pub fn from_record(r: &CoverRecord) -> Result<Self> {
        let shift = |v: &[usize]| -> Result<Vec<usize>> {
            v.iter()
                .map(|x| x.checked_sub(1).ok_or_else(|| Error::Parse("permutation symbols start at 1".into())))
                .collect()
        };
        let cover = FiniteCover::new(shift(&r.a)?, shift(&r.b)?)?;
        if cover.degree() != r.degree {
            return Err(Error::Parse(format!("degree {} does not match arrays of length {}", r.degree, cover.degree())));
        }
        Ok(cover)
    }
}

/// Every subgroup of index at most `n`, each once, ordered by index.
pub fn subgroups_of_index_at_most(n: usize) -> Result<Vec<FiniteCover>> {
    subgroups_of_index_at_most_capped(n, INDEX_CAP)
}

pub fn subgroups_of_index_at_most_capped(n: usize, cap: usize) -> Result<Vec<FiniteCover>> {
    if n > cap {
        return Err(Error::IndexCapExceeded { requested: n, cap });
    }
    let mut out = Vec::new();
    for k in 1..=n {
        let perms: Vec<Vec<usize>> = (0..k).permutations(k).collect();
        let mut found = BTreeSet::new();
        for a in &perms {
            for b in &perms {
                if let Ok(c) = FiniteCover::new(a.clone(), b.clone()) {
                    found.insert(c.canonical());
                }
            }
        }
        out.extend(found);
    }
    Ok(out)
}

/// The diagonal action of the generators on a disjoint union of finite sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct PermAction {
    gens: [Vec<u32>; 4],
}

impl PermAction {
    fn points(&self) -> usize {
        self.gens[0].len()
    }

    fn append(&mut self, a: &[usize], b: &[usize]) {
        let off = self.points();
        let shift = |p: &[usize]| p.iter().map(|x| (x + off) as u32).collect::<Vec<_>>();
        let (ai, bi) = (inverse_perm(a), inverse_perm(b));
        for (g, p) in self.gens.iter_mut().zip([a, &ai, b, &bi]) {
            g.extend(shift(p));
        }
    }
}

/// A decreasing chain `G_1 ⊇ G_2 ⊇ … ⊇ G_N` of normal subgroups of finite
/// index, each the kernel of a permutation action. Level `n` acts on the
/// first `level_points[n−1]` points, so the kernels are nested by
/// construction; `G_1` is the whole group.
#[derive(Clone, Debug)]
pub struct CoreChain {
    level_points: Vec<usize>,
    action: PermAction,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainRecord {
    pub level_points: Vec<usize>,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

impl CoreChain {
    /// `G_n` is the intersection of all subgroups of index at most `n`: the
    /// kernel of the action on the disjoint union of all those covers (the
    /// list is closed under conjugation).
    pub fn canonical(depth: usize) -> Result<Self> {
        Self::canonical_capped(depth, INDEX_CAP)
    }

    pub fn canonical_capped(depth: usize, cap: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidChain("depth must be at least 1".into()));
        }
        let covers = subgroups_of_index_at_most_capped(depth, cap)?;
        let mut action = PermAction::default();
        let mut level_points = Vec::new();
        for n in 1..=depth {
            for c in covers.iter().filter(|c| c.degree() == n) {
                action.append(&c.a, &c.b);
            }
            level_points.push(action.points());
        }
        Ok(CoreChain { level_points, action })
    }

    /// `G_1` is the whole group and `G_{i+1} = G_i ∩ ker ρ_i` for the given
    /// permutation actions `ρ_i`, which need not be transitive.
    pub fn from_kernels(actions: &[(Vec<usize>, Vec<usize>)]) -> Result<Self> {
        let mut action = PermAction::default();
        let mut level_points = vec![0];
        for (a, b) in actions {
            if a.len() != b.len() || !is_perm(a) || !is_perm(b) {
                return Err(Error::InvalidChain("kernel actions must be permutation pairs".into()));
            }
            action.append(a, b);
            level_points.push(action.points());
        }
        Ok(CoreChain { level_points, action })
    }

    pub fn depth(&self) -> usize {
        self.level_points.len()
    }

    fn act_all(&self, w: &GroupWord, points: usize) -> Vec<u32> {
        let mut x: Vec<u32> = (0..points as u32).collect();
        for l in w.letters() {
            let g = &self.action.gens[l.index()];
            for v in &mut x {
                *v = g[*v as usize];
            }
        }
        x
    }

    /// `w ∈ G_n`, for `1 ≤ n ≤ depth`.
    pub fn contains(&self, w: &GroupWord, n: usize) -> bool {
        assert!(n >= 1 && n <= self.depth(), "level {n} outside 1..={}", self.depth());
        let p = self.level_points[n - 1];
        self.act_all(w, p).iter().enumerate().all(|(i, x)| *x as usize == i)
    }

    /// The largest `n ≤ depth` with `w ∈ G_n`.
    pub fn level_of(&self, w: &GroupWord) -> usize {
        let x = self.act_all(w, self.action.points());
        let fixed = x.iter().enumerate().take_while(|(i, v)| **v as usize == *i).count();
        self.level_points.iter().take_while(|p| **p <= fixed).count()
    }

    /// Whether two transversal points name the same coset.
    pub fn same_point(&self, s: &TransversalPoint, t: &TransversalPoint) -> Result<bool> {
        if s.depth != t.depth {
            return Err(Error::DepthMismatch { expected: s.depth, found: t.depth });
        }
        Ok(self.contains(&(&s.rep * &t.rep.inverse()), s.depth))
    }

    /// The finite group `G/G_n` with breadth-first coset representatives.
    pub fn quotient(&self, n: usize) -> Result<CosetSpace> {
        self.quotient_capped(n, QUOTIENT_CAP)
    }

    pub fn quotient_capped(&self, n: usize, cap: usize) -> Result<CosetSpace> {
        if n == 0 || n > self.depth() {
            return Err(Error::DepthMismatch { expected: self.depth(), found: n });
        }
        let points = self.level_points[n - 1];
        let gens: Vec<Vec<u32>> = self.action.gens.iter().map(|g| g[..points].to_vec()).collect();
        let id: Vec<u32> = (0..points as u32).collect();
        let mut perms = vec![id.clone()];
        let mut lookup = HashMap::from([(id, 0usize)]);
        let mut reps = vec![GroupWord::identity()];
        let mut right: Vec<[usize; 4]> = Vec::new();
        let mut i = 0;
        while i < perms.len() {
            let mut row = [0; 4];
            for l in Letter::ALL {
                let q: Vec<u32> = perms[i].iter().map(|&x| gens[l.index()][x as usize]).collect();
                let next = perms.len();
                let j = *lookup.entry(q.clone()).or_insert(next);
                if j == next {
                    if next >= cap {
                        return Err(Error::QuotientTooLarge { depth: n, cap });
                    }
                    perms.push(q);
                    reps.push(&reps[i] * &GroupWord::letter(l));
                }
                row[l.index()] = j;
            }
            right.push(row);
            i += 1;
        }
        Ok(CosetSpace { depth: n, level_points: self.level_points[..n].to_vec(), perms, lookup, reps, right })
    }

    pub fn record(&self) -> ChainRecord {
        let one = |g: &Vec<u32>| g.iter().map(|x| *x as usize + 1).collect();
        ChainRecord { level_points: self.level_points.clone(), a: one(&self.action.gens[0]), b: one(&self.action.gens[2]) }
    }

    pub fn from_record(r: &ChainRecord) -> Result<Self> {
        let zero = |v: &[usize]| -> Result<Vec<usize>> {
            v.iter().map(|x| x.checked_sub(1).ok_or_else(|| Error::Parse("symbols start at 1".into()))).collect()
        };
        let (a, b) = (zero(&r.a)?, zero(&r.b)?);
        let total = a.len();
        let increasing = r.level_points.windows(2).all(|w| w[0] <= w[1]);
        if b.len() != total || r.level_points.last() != Some(&total) || !increasing {
            return Err(Error::InvalidChain("level sizes do not match the arrays".into()));
        }
        let mut action = PermAction::default();
        let mut start = 0;
        for &end in &r.level_points {
            let block = |p: &[usize]| -> Result<Vec<usize>> {
                p[start..end]
                    .iter()
                    .map(|x| {
                        x.checked_sub(start)
                            .filter(|y| *y < end - start)
                            .ok_or_else(|| Error::InvalidChain("a level does not act on its own block".into()))
                    })
                    .collect()
            };
            let (ba, bb) = (block(&a)?, block(&b)?);
            if !is_perm(&ba) || !is_perm(&bb) {
                return Err(Error::InvalidChain("blocks must be permutations".into()));
            }
            action.append(&ba, &bb);
            start = end;
        }
        Ok(CoreChain { level_points: r.level_points.clone(), action })
    }
}

/// The elements of `G/G_n` as permutations of the level-`n` points, with
/// shortest representatives in breadth-first order; index `0` is the
/// identity coset.
#[derive(Clone, Debug)]
pub struct CosetSpace {
    depth: usize,
    level_points: Vec<usize>,
    perms: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    reps: Vec<GroupWord>,
    right: Vec<[usize; 4]>,
}

impl CosetSpace {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn rep(&self, i: usize) -> &GroupWord {
        &self.reps[i]
    }

    pub fn coset_of(&self, w: &GroupWord) -> usize {
        w.letters().iter().fold(0, |i, l| self.right[i][l.index()])
    }

    /// Coset of `rep(i) · rep(j)`.
    pub fn mul(&self, i: usize, j: usize) -> usize {
        let q: Vec<u32> = self.perms[i].iter().map(|&x| self.perms[j][x as usize]).collect();
        self.lookup[&q]
    }

    pub fn inverse(&self, i: usize) -> usize {
        let p = &self.perms[i];
        let mut q = vec![0u32; p.len()];
        for (x, &y) in p.iter().enumerate() {
            q[y as usize] = x as u32;
        }
        self.lookup[&q]
    }

    /// The largest `k ≤ depth` with `rep(i) ∈ G_k`.
    pub fn level(&self, i: usize) -> usize {
        let fixed = self.perms[i].iter().enumerate().take_while(|(x, v)| **v as usize == *x).count();
        self.level_points.iter().take_while(|p| **p <= fixed).count()
    }

    /// Profinite distance between two cosets.
    pub fn dist(&self, i: usize, j: usize) -> ProfiniteDistance {
        let level = self.level(self.mul(i, self.inverse(j)));
        ProfiniteDistance { level, indistinguishable: level == self.depth }
    }

    /// For each coset, the smallest index in its class modulo `G_k`.
    pub fn class_representatives(&self, k: usize) -> Vec<usize> {
        let p = self.level_points[k.clamp(1, self.depth) - 1];
        let mut first: HashMap<&[u32], usize> = HashMap::new();
        (0..self.len()).map(|i| *first.entry(&self.perms[i][..p]).or_insert(i)).collect()
    }

    pub fn point(&self, i: usize) -> TransversalPoint {
        TransversalPoint { depth: self.depth, rep: self.reps[i].clone() }
    }

    pub fn index_of(&self, t: &TransversalPoint) -> Result<usize> {
        if t.depth != self.depth {
            return Err(Error::DepthMismatch { expected: self.depth, found: t.depth });
        }
        Ok(self.coset_of(&t.rep))
    }
}

/// `e^{−n}` for the largest `n` with `AB⁻¹ ∈ G_n`. When `n` is the chain
/// depth the points cannot be told apart and the value is only an upper
/// bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProfiniteDistance {
    pub level: usize,
    pub indistinguishable: bool,
}

impl ProfiniteDistance {
    pub fn value(&self) -> f64 {
        (-(self.level as f64)).exp()
    }
}

pub fn profinite_dist(a: &GroupWord, b: &GroupWord, chain: &CoreChain) -> ProfiniteDistance {
    let level = chain.level_of(&(a * &b.inverse()));
    ProfiniteDistance { level, indistinguishable: level == chain.depth() }
}

/// A point of the transversal at finite depth: a coset `t·G_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TransversalPoint {
    pub depth: usize,
    pub rep: GroupWord,
}

impl TransversalPoint {
    pub fn identity(depth: usize) -> Self {
        TransversalPoint { depth, rep: GroupWord::identity() }
    }
}

/// A point of a leaf or of its circle at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SolenoidPoint {
    Disk(DiskPoint),
    Boundary(BoundaryPoint),
}

/// `A(z, t) = (A(z), t·A⁻¹)`.
pub fn solenoid_action(a: &GroupWord, z: SolenoidPoint, t: &TransversalPoint) -> (SolenoidPoint, TransversalPoint) {
    let m = a.matrix();
    let z = match z {
        SolenoidPoint::Disk(p) => SolenoidPoint::Disk(m.apply_disk(p)),
        SolenoidPoint::Boundary(p) => SolenoidPoint::Boundary(m.apply_boundary(p)),
    };
    (z, TransversalPoint { depth: t.depth, rep: &t.rep * &a.inverse() })
}
