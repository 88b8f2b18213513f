//! Earthquakes along finite measured laminations.
//!
//! The stratum containing the base point is fixed. Crossing an atom `g` of
//! weight `w` into a side whose boundary is the counterclockwise arc `(s, e)`
//! applies the translation along `g` of length `w` towards `e`: seen from the
//! near side, the far side slides to the left. The right convention slides it
//! towards `s` instead.

use num_complex::Complex64;

use crate::circle_map::{arc_midpoint, PiecewiseMobiusCircleMap};
use crate::dd;
use crate::error::{Error, Result};
use crate::hyperbolic::{
    fixed_points_from, translation_along_dd, BoundaryPoint, DiskPoint, Geodesic, MobiusMap, COMPOSED_TOL,
    EXACT_TOL,
};
use crate::lamination::{Atom, MeasuredLamination};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convention {
    #[default]
    Left,
    Right,
}

/// Which side a point lying on a fault geodesic moves with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FaultSide {
    /// The fault moves with the stratum beyond it, as seen from the base.
    #[default]
    FarSide,
    NearSide,
}

#[derive(Clone, Debug)]
pub struct EarthquakeMap {
    lamination: MeasuredLamination,
    base_point: DiskPoint,
    convention: Convention,
    fault_side: FaultSide,
}

impl EarthquakeMap {
    pub fn new(lamination: MeasuredLamination, base_point: DiskPoint) -> Result<Self> {
        if base_point.norm() >= 1.0 {
            return Err(Error::OutsideDisk);
        }
        if lamination.atoms().iter().any(|a| a.geodesic.signed_distance(base_point).abs() <= EXACT_TOL) {
            return Err(Error::PointOnGeodesic);
        }
        Ok(EarthquakeMap { lamination, base_point, convention: Convention::Left, fault_side: FaultSide::FarSide })
    }

    /// Base point at the origin, nudged off any atom through it.
    pub fn with_default_base(lamination: MeasuredLamination) -> Self {
        let base = default_base(&lamination);
        EarthquakeMap { lamination, base_point: base, convention: Convention::Left, fault_side: FaultSide::FarSide }
    }

    pub fn with_convention(mut self, convention: Convention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_fault_side(mut self, fault_side: FaultSide) -> Self {
        self.fault_side = fault_side;
        self
    }

    pub fn lamination(&self) -> &MeasuredLamination {
        &self.lamination
    }

    pub fn base_point(&self) -> DiskPoint {
        self.base_point
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    /// Translation applied when crossing `atom` into its positive side
    /// (bounded by the ccw arc `(p, q)`) or its negative side.
    fn crossing(&self, atom: &Atom, into_positive: bool) -> dd::DdMatrix {
        let toward_q = into_positive == (self.convention == Convention::Left);
        let w = if toward_q { atom.weight } else { -atom.weight };
        translation_along_dd(&atom.geodesic, w)
    }

    /// Ordered product over the atoms for which `side` reports a crossing,
    /// nearest to the base first.
    fn product<F>(&self, mut side: F) -> dd::DdMatrix
    where
        F: FnMut(&Atom, f64) -> Option<bool>,
    {
        let mut crossed: Vec<(f64, &Atom, bool)> = Vec::new();
        for atom in self.lamination.atoms() {
            let base = atom.geodesic.signed_distance(self.base_point);
            if let Some(into_positive) = side(atom, base) {
                crossed.push((base.abs(), atom, into_positive));
            }
        }
        crossed.sort_by(|a, b| a.0.total_cmp(&b.0));
        // the factors have large cancelling entries when atoms sit far from the origin
        let product = crossed
            .iter()
            .fold(dd::IDENTITY, |acc, (_, atom, pos)| dd::mat_mul(&acc, &self.crossing(atom, *pos)));
        product
    }

    /// The isometry by which the earthquake moves the stratum containing `z`.
    pub fn stratum_isometry(&self, z: DiskPoint) -> Result<MobiusMap> {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisk);
        }
        let mut on_fault = false;
        let m = self.product(|atom, base| {
            let s = atom.geodesic.signed_distance(z);
            if s.abs() <= EXACT_TOL {
                on_fault = true;
            }
            ((s > 0.0) != (base > 0.0)).then_some(s > 0.0)
        });
        if on_fault {
            return Err(Error::PointOnGeodesic);
        }
        Ok(round(&m))
    }

    /// Isometry applied at `z`, including points on a fault, whose motion
    /// follows the `fault_side` setting.
    pub fn isometry_with_fault_side(&self, z: DiskPoint) -> Result<MobiusMap> {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisk);
        }
        Ok(round(&self.product(|atom, base| {
            let s = atom.geodesic.signed_distance(z);
            if s.abs() <= EXACT_TOL {
                (self.fault_side == FaultSide::FarSide).then_some(base < 0.0)
            } else {
                ((s > 0.0) != (base > 0.0)).then_some(s > 0.0)
            }
        })))
    }

    pub fn eval(&self, z: DiskPoint) -> Result<DiskPoint> {
        Ok(self.stratum_isometry(z)?.apply_disk(z))
    }

    pub fn eval_with_fault_side(&self, z: DiskPoint) -> Result<DiskPoint> {
        Ok(self.isometry_with_fault_side(z)?.apply_disk(z))
    }

    /// Limit of the stratum isometries at a boundary point that is not an
    /// atom endpoint.
    pub fn boundary_isometry(&self, x: BoundaryPoint) -> MobiusMap {
        round(&self.boundary_isometry_dd(x))
    }

    fn boundary_isometry_dd(&self, x: BoundaryPoint) -> dd::DdMatrix {
        self.product(|atom, base| {
            let side = atom.geodesic.arc_side(x)?;
            (side != (base > 0.0)).then_some(side)
        })
    }

    /// `M_q ∘ M_p⁻¹`, carrying the image of `p`'s stratum onto the image of `q`'s.
    pub fn comparison_isometry(&self, p: DiskPoint, q: DiskPoint) -> Result<MobiusMap> {
        Ok(self.stratum_isometry(q)? * self.stratum_isometry(p)?.inverse())
    }

    /// Exact boundary extension: Möbius on every arc between atom endpoints.
    pub fn boundary(&self) -> PiecewiseMobiusCircleMap {
        let bps: Vec<BoundaryPoint> =
            self.lamination.endpoint_angles().into_iter().map(BoundaryPoint::new).collect();
        if bps.is_empty() {
            return PiecewiseMobiusCircleMap::identity();
        }
        let pieces = (0..bps.len()).map(|i| self.boundary_isometry_dd(arc_midpoint(&bps, i))).collect();
        PiecewiseMobiusCircleMap::from_dd(bps, pieces)
    }
}

fn round(m: &dd::DdMatrix) -> MobiusMap {
    let [a, b, c, d] = dd::to_entries(m);
    MobiusMap::from_raw(a, b, c, d)
}

/// The origin, nudged off any atom passing through it.
pub fn default_base(lam: &MeasuredLamination) -> DiskPoint {
    let mut base = Complex64::new(0.0, 0.0);
    let mut k = 0;
    while lam.atoms().iter().any(|a| a.geodesic.signed_distance(base).abs() <= 1e-6) {
        k += 1;
        base = Complex64::from_polar(1e-3 * k as f64, 0.7 * k as f64);
    }
    base
}

/// Earthquake boundary map of `lam` with the default base point.
pub fn earthquake_boundary(lam: &MeasuredLamination) -> PiecewiseMobiusCircleMap {
    EarthquakeMap::with_default_base(lam.clone()).boundary()
}

/// Snapping radius for the far fixed point of a transition.
const SNAP_TOL: f64 = 1e-7;

/// Recovers the earthquake measure from a boundary map.
///
/// The transition across breakpoint `β_i` is `M_{i−1}⁻¹ ∘ M_i`, read in the
/// source frame so that it is unchanged by post-composition. It must be a
/// hyperbolic translation with one fixed point at `β_i`; its axis is an atom
/// and its translation length the weight. Each atom is seen at both of its
/// endpoints and the two sightings are averaged. Atoms sharing an endpoint
/// compose into a single transition that is not an atom translation and are
/// reported as an error.
pub fn recover_measure(h: &PiecewiseMobiusCircleMap) -> Result<MeasuredLamination> {
    let bps = h.breakpoints();
    let n = bps.len();
    let mut found: Vec<(Geodesic, f64, usize)> = Vec::new();
    for i in 0..n {
        let t = dd::mat_mul(&dd::inverse(&h.piece_dd((i + n - 1) % n)), &h.piece_dd(i));
        let [a, b, c, d] = dd::to_entries(&t);
        if MobiusMap::from_raw(a, b, c, d).is_identity(COMPOSED_TOL) {
            continue;
        }
        let diff = t[3].sub(t[0]);
        let disc = diff.mul(diff).add(t[1].mul(t[2]).mul(dd::Dd::from_f64(4.0))).to_f64();
        let not_hyperbolic = || {
            Error::NotEarthquakeMap(format!("transition at breakpoint {i} is not hyperbolic (trace {})", a + d))
        };
        if !(disc > 0.0) {
            return Err(not_hyperbolic());
        }
        let weight = 2.0 * (disc.sqrt() / 2.0).asinh();
        let (f1, f2) = fixed_points_from(b, c, diff.to_f64(), disc, a + d).ok_or_else(not_hyperbolic)?;
        let (near, far) = if f1.distance(bps[i]) <= f2.distance(bps[i]) { (f1, f2) } else { (f2, f1) };
        if near.distance(bps[i]) > SNAP_TOL.sqrt() {
            return Err(Error::NotEarthquakeMap(format!("transition at breakpoint {i} does not fix it")));
        }
        let far = match bps.iter().min_by(|a, b| a.distance(far).total_cmp(&b.distance(far))) {
            Some(b) if b.distance(far) <= SNAP_TOL => *b,
            _ => {
                return Err(Error::NotEarthquakeMap(format!(
                    "transition at breakpoint {i} has an axis ending off the breakpoint set"
                )))
            }
        };
        let g = Geodesic::new(bps[i], far)?;
        match found.iter_mut().find(|(h, _, _)| h.same_as(&g, EXACT_TOL)) {
            Some(entry) => {
                entry.1 += weight;
                entry.2 += 1;
            }
            None => found.push((g, weight, 1)),
        }
    }
    let atoms = found.into_iter().map(|(g, w, k)| Atom::new(g, w / k as f64)).collect();
    MeasuredLamination::new(atoms)
}

/// Normalized boundary map of the earthquake along `t·lam`.
pub fn earthquake_path(lam: &MeasuredLamination, t: f64, base: DiskPoint) -> Result<PiecewiseMobiusCircleMap> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    Ok(EarthquakeMap::new(lam.scaled(t), base)?.boundary().normalize())
}

/// Conformal barycenter of the push-forward under `h` of harmonic measure at `z`.
///
/// Newton iteration on the barycenter field, re-centred at the current
/// estimate each step; the integral is split at the preimages of the
/// breakpoints and evaluated by Gauss–Legendre panels.
pub fn barycentric_extension(h: &PiecewiseMobiusCircleMap, z: DiskPoint, tol: f64) -> Result<DiskPoint> {
    const MAX_ITER: usize = 100;
    if z.norm() >= 1.0 {
        return Err(Error::OutsideDisk);
    }
    let samples = barycenter_samples(h, z);
    let mut w = match h.as_mobius() {
        Some(m) => m.apply_disk(z),
        None => Complex64::new(0.0, 0.0),
    };
    let mut residual = f64::INFINITY;
    for _ in 0..MAX_ITER {
        let (mut m0, mut m2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for (u, weight) in &samples {
            let v = disk_shift(w, *u);
            m0 += weight * v;
            m2 += weight * v * v;
        }
        residual = m0.norm();
        if residual <= tol {
            return Ok(w);
        }
        let mut step = (m0 + m0.conj() * m2) / (1.0 - m2.norm_sqr());
        if step.norm() > 0.5 {
            step *= 0.5 / step.norm();
        }
        w = (step + w) / (1.0 + w.conj() * step);
    }
    Err(Error::NonConvergence { iterations: MAX_ITER, residual })
}

/// `u ↦ (u − w)/(1 − w̄u)`, the disk automorphism moving `w` to the origin.
fn disk_shift(w: Complex64, u: Complex64) -> Complex64 {
    (u - w) / (1.0 - w.conj() * u)
}

/// Quadrature nodes `(h(M_z(e^{iθ})), weight)` with weights summing to one.
fn barycenter_samples(h: &PiecewiseMobiusCircleMap, z: DiskPoint) -> Vec<(Complex64, f64)> {
    use std::f64::consts::{PI, TAU};
    const PANEL: f64 = PI / 32.0;
    let (nodes, weights) = crate::quadrature::gauss_legendre(24);
    let m_z = |zeta: Complex64| (zeta + z) / (1.0 + z.conj() * zeta);
    let m_z_inv = |u: Complex64| (u - z) / (1.0 - z.conj() * u);
    let mut cuts: Vec<f64> =
        h.breakpoints().iter().map(|b| m_z_inv(b.to_disk()).arg().rem_euclid(TAU)).collect();
    cuts.push(0.0);
    cuts.sort_by(f64::total_cmp);
    cuts.push(TAU);
    let mut out = Vec::new();
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b - a <= 0.0 {
            continue;
        }
        let panels = ((b - a) / PANEL).ceil() as usize;
        let width = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + k as f64 * width;
            for (x, wt) in nodes.iter().zip(&weights) {
                let theta = lo + (x + 1.0) * width / 2.0;
                let zeta = Complex64::from_polar(1.0, theta);
                let image = h.eval(BoundaryPoint::from_disk(m_z(zeta))).to_disk();
                out.push((image, wt * width / 2.0 / TAU));
            }
        }
    }
    out
}
