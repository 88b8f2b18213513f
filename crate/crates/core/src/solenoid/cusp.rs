//! The compact-support criterion at the cusp of the punctured torus: with
//! the cusp at `∞` and its stabilizer generated by `z ↦ z + 1`, a geodesic
//! whose Euclidean half-circle has radius above `1/2` crosses its own
//! translate, so it cannot lie in an invariant lamination.

use serde::Serialize;

use super::group::GroupWord;
use crate::error::{Error, Result};
use crate::hyperbolic::{MobiusMap, EXACT_TOL};
use crate::lamination::MeasuredLamination;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CuspStatus {
    Clear,
    /// Radius above `1/2`; records whether `(x+1, y+1)` interleaves with `(x, y)`.
    EntersCusp { translate_interleaves: bool },
    EndsAtCusp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspAtomReport {
    pub index: usize,
    pub x: f64,
    pub y: f64,
    pub status: CuspStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CuspReport {
    pub atoms: Vec<CuspAtomReport>,
}

impl CuspReport {
    /// Indices of atoms that are not clear of the cusp.
    pub fn flagged(&self) -> Vec<usize> {
        self.atoms.iter().filter(|a| a.status != CuspStatus::Clear).map(|a| a.index).collect()
    }
}

/// Whether the open intervals `(x, y)` and `(x + 1, y + 1)` interleave.
pub fn translate_interleaves(x: f64, y: f64) -> bool {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let (tlo, thi) = (lo + 1.0, hi + 1.0);
    (lo < tlo && tlo < hi && hi < thi) || (tlo < lo && lo < thi && thi < hi)
}

/// Classification of the half-plane geodesic with finite endpoints `x`, `y`.
pub fn check_half_plane(x: f64, y: f64) -> CuspStatus {
    if !x.is_finite() || !y.is_finite() {
        return CuspStatus::EndsAtCusp;
    }
    if (x - y).abs() / 2.0 > 0.5 {
        CuspStatus::EntersCusp { translate_interleaves: translate_interleaves(x, y) }
    } else {
        CuspStatus::Clear
    }
}

/// Classifies every atom after moving it by `conjugating`, which must send
/// the cusp to `∞` with its parabolic becoming `z ↦ z + 1`.
pub fn cusp_compactness_check(lam: &MeasuredLamination, conjugating: &MobiusMap) -> CuspReport {
    let [a, b, c, d] = conjugating.entries();
    let coord = |p: crate::hyperbolic::BoundaryPoint| {
        let [u, v] = p.projective();
        let (num, den) = (a * u + b * v, c * u + d * v);
        if den.abs() <= EXACT_TOL * num.abs().max(den.abs()) {
            f64::INFINITY
        } else {
            num / den
        }
    };
    let atoms = lam
        .atoms()
        .iter()
        .enumerate()
        .map(|(index, atom)| {
            let (x, y) = (coord(atom.geodesic.p()), coord(atom.geodesic.q()));
            CuspAtomReport { index, x, y, status: check_half_plane(x, y) }
        })
        .collect();
    CuspReport { atoms }
}

/// A map conjugating the parabolic `p` to `z ↦ z + 1`, replacing `p` by its
/// inverse when `p` translates the other way.
pub fn cusp_normalizer(p: &MobiusMap) -> Result<MobiusMap> {
    let [a, _, c, d] = p.entries();
    let s = if a + d < 0.0 { -1.0 } else { 1.0 };
    let (a, c, d) = (s * a, s * c, s * d);
    if ((a + d) - 2.0).abs() > 1e-9 {
        return Err(Error::NonHyperbolic { trace: (a + d).abs() });
    }
    // `k` sends the fixed point `f` to ∞; then `k p k⁻¹` is `z ↦ z + τ`.
    let k = if c.abs() <= EXACT_TOL {
        MobiusMap::identity()
    } else {
        let f = (a - d) / (2.0 * c);
        MobiusMap::new(0.0, -1.0, 1.0, -f)?
    };
    let tau = {
        let q = k.compose(p).compose(&k.inverse());
        let [qa, qb, _, _] = q.entries();
        qb / qa
    };
    if tau.abs() <= EXACT_TOL {
        return Err(Error::NonHyperbolic { trace: 2.0 });
    }
    // a dilation by |τ|⁻¹ rescales the translation length to 1
    Ok(MobiusMap::dilation(-tau.abs().ln()).compose(&k))
}

/// The commutator `abAB`, the parabolic of the punctured torus.
pub fn punctured_torus_cusp() -> (GroupWord, MobiusMap) {
    let c = GroupWord::commutator(&GroupWord::a(), &GroupWord::b());
    let k = cusp_normalizer(&c.matrix()).expect("the commutator is parabolic");
    (c, k)
}
