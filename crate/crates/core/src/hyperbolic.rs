//! Primitives of the hyperbolic plane.
//!
//! The unit disk is the canonical model: boundary points are stored as angles
//! in `[0, 2π)` and interior points as complex numbers of modulus `< 1`.
//! Möbius maps are real `SL(2,R)` matrices acting on the upper half-plane and
//! are carried to the disk through the fixed Cayley transform
//! `z ↦ i(1+z)/(1−z)`. Angle `θ` corresponds to the extended real
//! `x = −cot(θ/2)`, so the counterclockwise orientation of the circle matches
//! the increasing orientation of the real line, and angle `0` is `∞`.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::dd;
use crate::error::{Error, Result};

/// Tolerance for identities that hold by exact construction.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for identities that go through composed arithmetic.
pub const COMPOSED_TOL: f64 = 1e-10;

/// A point of the open unit disk.
pub type DiskPoint = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Counterclockwise angular distance from `from` to `to`, in `[0, 2π)`.
pub fn ccw_distance(from: f64, to: f64) -> f64 {
    normalize_angle(to - from)
}

/// Length of the shorter arc between two angles.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = ccw_distance(a, b);
    d.min(TAU - d)
}

/// Whether `x` lies strictly inside the counterclockwise arc from `start` to `end`.
pub fn in_open_arc(x: f64, start: f64, end: f64) -> bool {
    let span = ccw_distance(start, end);
    let dx = ccw_distance(start, x);
    dx > 0.0 && dx < span
}

/// Cayley transform from the disk to the upper half-plane.
pub fn cayley(z: DiskPoint) -> Complex64 {
    I * (1.0 + z) / (1.0 - z)
}

/// Inverse Cayley transform from the upper half-plane to the disk.
pub fn inverse_cayley(w: Complex64) -> DiskPoint {
    (w - I) / (w + I)
}

/// A point of the ideal boundary `S¹`.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint(f64);

impl BoundaryPoint {
    pub fn new(angle: f64) -> Self {
        BoundaryPoint(normalize_angle(angle))
    }

    pub fn angle(self) -> f64 {
        self.0
    }

    /// Boundary point with half-plane coordinate `x`; `±∞` maps to angle 0.
    pub fn from_half_plane(x: f64) -> Self {
        if x.is_infinite() {
            BoundaryPoint(0.0)
        } else {
            Self::new(2.0 * 1f64.atan2(-x))
        }
    }

    /// Half-plane coordinate, `+∞` for angle 0.
    pub fn to_half_plane(self) -> f64 {
        if self.0 == 0.0 {
            f64::INFINITY
        } else {
            let h = self.0 / 2.0;
            -h.cos() / h.sin()
        }
    }

    /// Homogeneous coordinates `(u, v)` with `x = u / v`.
    pub(crate) fn projective(self) -> [f64; 2] {
        let h = self.0 / 2.0;
        [-h.cos(), h.sin()]
    }

    pub(crate) fn from_projective(u: f64, v: f64) -> Self {
        Self::new(2.0 * v.atan2(-u))
    }

    pub fn to_disk(self) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }

    pub fn from_disk(z: Complex64) -> Self {
        Self::new(z.arg())
    }

    pub fn distance(self, other: BoundaryPoint) -> f64 {
        circular_distance(self.0, other.0)
    }
}

impl PartialEq for BoundaryPoint {
    fn eq(&self, other: &Self) -> bool {
        self.distance(*other) <= EXACT_TOL
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e}", self.0)
    }
}

/// An orientation-preserving isometry of the hyperbolic plane, stored as a
/// real matrix of determinant one acting on the upper half-plane.
#[derive(Clone, Copy, Debug)]
pub struct MobiusMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Builds a map from any real matrix with positive determinant, rescaling
    /// it to determinant one.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::InvalidMobius { det });
        }
        let s = det.sqrt().recip();
        Ok(MobiusMap { a: a * s, b: b * s, c: c * s, d: d * s })
    }

    pub(crate) fn from_raw(a: f64, b: f64, c: f64, d: f64) -> Self {
        MobiusMap { a, b, c, d }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// `x ↦ e^w x` in the half-plane: translation of length `|w|` along `(0, ∞)`.
    pub fn dilation(w: f64) -> Self {
        let e = (w / 2.0).exp();
        MobiusMap { a: e, b: 0.0, c: 0.0, d: e.recip() }
    }

    /// Rotation of the disk about the origin by `phi`.
    pub fn rotation(phi: f64) -> Self {
        let (s, c) = (phi / 2.0).sin_cos();
        MobiusMap { a: c, b: s, c: -s, d: c }
    }

    /// `x ↦ x + s` in the half-plane.
    pub fn parabolic(s: f64) -> Self {
        MobiusMap { a: 1.0, b: s, c: 0.0, d: 1.0 }
    }

    /// An isometry sending the disk origin to `z`.
    pub fn centered_at(z: DiskPoint) -> Result<Self> {
        if z.norm() >= 1.0 {
            return Err(Error::OutsideDisk);
        }
        let w = cayley(z);
        let r = w.im.sqrt();
        Ok(MobiusMap { a: r, b: w.re / r, c: 0.0, d: r.recip() })
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ other ∘ self⁻¹`.
    pub fn conjugate(&self, other: &MobiusMap) -> MobiusMap {
        self.compose(other).compose(&self.inverse())
    }

    pub fn apply_boundary(&self, p: BoundaryPoint) -> BoundaryPoint {
        let [u, v] = p.projective();
        BoundaryPoint::from_projective(self.a * u + self.b * v, self.c * u + self.d * v)
    }

    pub fn apply_half_plane(&self, w: Complex64) -> Complex64 {
        (self.a * w + self.b) / (self.c * w + self.d)
    }

    pub fn apply_disk(&self, z: DiskPoint) -> DiskPoint {
        inverse_cayley(self.apply_half_plane(cayley(z)))
    }

    /// Entrywise comparison up to the global sign ambiguity of `PSL(2,R)`.
    pub fn approx_eq(&self, other: &MobiusMap, tol: f64) -> bool {
        let x = self.entries();
        let y = other.entries();
        let plus = x.iter().zip(y.iter()).all(|(p, q)| (p - q).abs() <= tol);
        let minus = x.iter().zip(y.iter()).all(|(p, q)| (p + q).abs() <= tol);
        plus || minus
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.approx_eq(&Self::IDENTITY, tol)
    }

    /// `trace² − 4`, written in a form that stays accurate near the identity.
    pub fn discriminant(&self) -> f64 {
        let diff = self.a - self.d;
        diff * diff + 4.0 * self.b * self.c
    }

    /// `(repelling, attracting)` fixed points of a hyperbolic map.
    pub fn fixed_points(&self) -> Option<(BoundaryPoint, BoundaryPoint)> {
        fixed_points_from(self.b, self.c, self.d - self.a, self.discriminant(), self.trace())
    }

    /// The unique map sending `src[k]` to `dst[k]` for `k = 0, 1, 2`.
    pub fn from_three_points(src: [BoundaryPoint; 3], dst: [BoundaryPoint; 3]) -> Result<Self> {
        let k_src = triple_frame(src)?;
        let k_dst = triple_frame(dst)?;
        let m = k_dst.compose(&k_src.inverse_unnormalized());
        MobiusMap::new(m.a, m.b, m.c, m.d)
    }

    fn inverse_unnormalized(&self) -> MobiusMap {
        let det = self.det();
        MobiusMap { a: self.d / det, b: -self.b / det, c: -self.c / det, d: self.a / det }
    }
}

/// Fixed points from the entries `b`, `c`, the difference `d − a`, the
/// discriminant and the trace, so that callers can supply these from
/// higher-precision arithmetic.
pub(crate) fn fixed_points_from(
    b: f64,
    c: f64,
    d_minus_a: f64,
    disc: f64,
    trace: f64,
) -> Option<(BoundaryPoint, BoundaryPoint)> {
    if !(disc > 0.0) {
        return None;
    }
    let sq = disc.sqrt();
    let sign = if trace >= 0.0 { 1.0 } else { -1.0 };
    let eigvec = |s: f64| {
        // eigenvalue (tr + s·sq)/2, so λ − a = (d − a + s·sq)/2 and λ − d = (a − d + s·sq)/2
        let v1 = [b, (d_minus_a + s * sq) / 2.0];
        let v2 = [(-d_minus_a + s * sq) / 2.0, c];
        let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) { v1 } else { v2 };
        BoundaryPoint::from_projective(v[0], v[1])
    };
    Some((eigvec(-sign), eigvec(sign)))
}

/// Matrix (not normalized) sending `0, 1, ∞` to `p[0], p[1], p[2]`.
fn triple_frame(p: [BoundaryPoint; 3]) -> Result<MobiusMap> {
    let p1 = p[0].projective();
    let p2 = p[1].projective();
    let p3 = p[2].projective();
    // α·p3 + β·p1 = p2
    let det = p3[0] * p1[1] - p1[0] * p3[1];
    if det.abs() < 1e-300 {
        return Err(Error::InvalidMobius { det });
    }
    let alpha = (p2[0] * p1[1] - p1[0] * p2[1]) / det;
    let beta = (p3[0] * p2[1] - p2[0] * p3[1]) / det;
    Ok(MobiusMap::from_raw(alpha * p3[0], beta * p1[0], alpha * p3[1], beta * p1[1]))
}

impl Mul for MobiusMap {
    type Output = MobiusMap;
    fn mul(self, rhs: MobiusMap) -> MobiusMap {
        self.compose(&rhs)
    }
}

impl fmt::Display for MobiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{:.17e}, {:.17e}], [{:.17e}, {:.17e}]]", self.a, self.b, self.c, self.d)
    }
}

/// Induced action on the circle.
pub fn mobius_apply(m: &MobiusMap, p: BoundaryPoint) -> BoundaryPoint {
    m.apply_boundary(p)
}

/// A complete geodesic, given by its two ideal endpoints. The stored order
/// orients the geodesic from `p` to `q`; equality ignores the order.
#[derive(Clone, Copy, Debug)]
pub struct Geodesic {
    p: BoundaryPoint,
    q: BoundaryPoint,
}

impl Geodesic {
    pub fn new(p: BoundaryPoint, q: BoundaryPoint) -> Result<Self> {
        let separation = p.distance(q);
        if separation <= EXACT_TOL {
            return Err(Error::DegenerateGeodesic { separation });
        }
        Ok(Geodesic { p, q })
    }

    pub fn from_angles(p: f64, q: f64) -> Result<Self> {
        Self::new(BoundaryPoint::new(p), BoundaryPoint::new(q))
    }

    pub fn from_half_plane(x: f64, y: f64) -> Result<Self> {
        Self::new(BoundaryPoint::from_half_plane(x), BoundaryPoint::from_half_plane(y))
    }

    pub fn p(&self) -> BoundaryPoint {
        self.p
    }

    pub fn q(&self) -> BoundaryPoint {
        self.q
    }

    pub fn reversed(&self) -> Geodesic {
        Geodesic { p: self.q, q: self.p }
    }

    pub fn map(&self, m: &MobiusMap) -> Geodesic {
        Geodesic { p: m.apply_boundary(self.p), q: m.apply_boundary(self.q) }
    }

    /// A map sending `0 ↦ p` and `∞ ↦ q`; it carries the imaginary axis onto
    /// this geodesic.
    pub fn normal_form(&self) -> MobiusMap {
        let [up, vp] = self.p.projective();
        let [uq, vq] = self.q.projective();
        let mut m = [uq, up, vq, vp];
        let det = uq * vp - up * vq;
        if det < 0.0 {
            m[1] = -m[1];
            m[3] = -m[3];
        }
        let s = det.abs().sqrt().recip();
        MobiusMap::from_raw(m[0] * s, m[1] * s, m[2] * s, m[3] * s)
    }

    /// Signed hyperbolic distance from `z`; positive on the side bounded by
    /// the counterclockwise arc from `p` to `q`.
    pub fn signed_distance(&self, z: DiskPoint) -> f64 {
        let s = self.normal_form().inverse().apply_half_plane(cayley(z));
        (s.re / s.im).asinh()
    }

    /// `Some(true)` if `x` is strictly inside the counterclockwise arc from
    /// `p` to `q`, `Some(false)` if inside the complementary arc, `None` at an
    /// endpoint.
    pub fn arc_side(&self, x: BoundaryPoint) -> Option<bool> {
        if x == self.p || x == self.q {
            return None;
        }
        Some(in_open_arc(x.angle(), self.p.angle(), self.q.angle()))
    }

    pub fn same_as(&self, other: &Geodesic, tol: f64) -> bool {
        let direct = self.p.distance(other.p) <= tol && self.q.distance(other.q) <= tol;
        let swapped = self.p.distance(other.q) <= tol && self.q.distance(other.p) <= tol;
        direct || swapped
    }

    pub fn shares_endpoint(&self, other: &Geodesic) -> bool {
        self.p == other.p || self.p == other.q || self.q == other.p || self.q == other.q
    }

    /// Points along the geodesic at hyperbolic arclength `s` from the foot of
    /// the perpendicular dropped from the disk origin.
    pub fn point_at(&self, s: f64) -> DiskPoint {
        // In normal form the geodesic is the imaginary axis; i·e^s is at arclength s from i.
        let nf = self.normal_form();
        let foot = nf.inverse().apply_half_plane(cayley(Complex64::new(0.0, 0.0)));
        let base = foot.norm();
        inverse_cayley(nf.apply_half_plane(I * base * s.exp()))
    }
}

impl PartialEq for Geodesic {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other, EXACT_TOL)
    }
}

impl fmt::Display for Geodesic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

/// Hyperbolic translation with axis `g`, moving points towards `g.q()` by `w`
/// (towards `g.p()` when `w < 0`). Seen from the side of `g` bounded by the
/// counterclockwise arc `(q, p)`, a positive `w` moves the far side to the left.
pub fn translation_along(g: &Geodesic, w: f64) -> MobiusMap {
    if w == 0.0 {
        return MobiusMap::IDENTITY;
    }
    let nf = g.normal_form();
    nf.conjugate(&MobiusMap::dilation(w))
}

/// [`translation_along`] evaluated in double-double arithmetic.
pub(crate) fn translation_along_dd(g: &Geodesic, w: f64) -> dd::DdMatrix {
    if w == 0.0 {
        return dd::IDENTITY;
    }
    let nf = dd::from_entries(g.normal_form().entries());
    let e = (w / 2.0).exp();
    let dil = dd::from_entries([e, 0.0, 0.0, e.recip()]);
    dd::mat_mul(&dd::mat_mul(&nf, &dil), &dd::inverse(&nf))
}

/// Translation length of a hyperbolic map, zero for the identity.
pub fn translation_length(m: &MobiusMap) -> Result<f64> {
    if m.is_identity(EXACT_TOL) {
        return Ok(0.0);
    }
    let disc = m.discriminant();
    if !(disc > 0.0) {
        return Err(Error::NonHyperbolic { trace: m.trace().abs() });
    }
    Ok(2.0 * (disc.sqrt() / 2.0).asinh())
}

/// Whether the endpoint pairs strictly interleave. Asymptotic geodesics do not cross.
pub fn geodesics_cross(g1: &Geodesic, g2: &Geodesic) -> bool {
    match (g1.arc_side(g2.p), g1.arc_side(g2.q)) {
        (Some(x), Some(y)) => x != y,
        _ => false,
    }
}

/// Whether `p` and `q` lie in different components of the complement of `g`.
pub fn separates(g: &Geodesic, p: DiskPoint, q: DiskPoint) -> Result<bool> {
    let sp = g.signed_distance(p);
    let sq = g.signed_distance(q);
    if sp.abs() <= EXACT_TOL || sq.abs() <= EXACT_TOL {
        return Err(Error::PointOnGeodesic);
    }
    Ok((sp > 0.0) != (sq > 0.0))
}

/// Hyperbolic distance in the unit disk (curvature −1).
pub fn hyp_dist(p: DiskPoint, q: DiskPoint) -> f64 {
    let num = (p - q).norm();
    let den = (1.0 - p.conj() * q).norm();
    2.0 * (num / den).atanh()
}

/// A box of geodesics: all geodesics with one endpoint in the open arc
/// `(a, b)` and the other in `(c, d)`, corners in counterclockwise order.
#[derive(Clone, Copy, Debug)]
pub struct GeodesicBox {
    corners: [BoundaryPoint; 4],
}

impl GeodesicBox {
    pub fn new(a: BoundaryPoint, b: BoundaryPoint, c: BoundaryPoint, d: BoundaryPoint) -> Result<Self> {
        let corners = [a, b, c, d];
        for i in 0..4 {
            for j in (i + 1)..4 {
                if corners[i].distance(corners[j]) <= EXACT_TOL {
                    return Err(Error::InvalidBox);
                }
            }
        }
        let db = ccw_distance(a.angle(), b.angle());
        let dc = ccw_distance(a.angle(), c.angle());
        let dd = ccw_distance(a.angle(), d.angle());
        if !(db < dc && dc < dd) {
            return Err(Error::InvalidBox);
        }
        Ok(GeodesicBox { corners })
    }

    pub fn from_angles(angles: [f64; 4]) -> Result<Self> {
        let [a, b, c, d] = angles.map(BoundaryPoint::new);
        Self::new(a, b, c, d)
    }

    /// The box `(1, i) × (−1, −i)`.
    pub fn reference() -> Self {
        use std::f64::consts::{FRAC_PI_2, PI};
        GeodesicBox { corners: [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2].map(BoundaryPoint::new) }
    }

    pub fn corners(&self) -> [BoundaryPoint; 4] {
        self.corners
    }

    pub fn angles(&self) -> [f64; 4] {
        self.corners.map(|c| c.angle())
    }

    /// Image under a Möbius map; counterclockwise order is preserved.
    pub fn map(&self, m: &MobiusMap) -> GeodesicBox {
        GeodesicBox { corners: self.corners.map(|c| m.apply_boundary(c)) }
    }

    /// Index of a corner within `tol` of `x`.
    pub fn corner_near(&self, x: BoundaryPoint, tol: f64) -> Option<usize> {
        self.corners.iter().position(|c| c.distance(x) <= tol)
    }

    /// Membership of `g`; an endpoint on a corner is an error.
    pub fn contains(&self, g: &Geodesic) -> Result<bool> {
        for x in [g.p(), g.q()] {
            if let Some(corner) = self.corner_near(x, EXACT_TOL) {
                return Err(Error::BoxCornerCollision { corner });
            }
        }
        Ok(self.contains_unchecked(g))
    }

    pub(crate) fn contains_unchecked(&self, g: &Geodesic) -> bool {
        let [a, b, c, d] = self.angles();
        let x = g.p().angle();
        let y = g.q().angle();
        (in_open_arc(x, a, b) && in_open_arc(y, c, d)) || (in_open_arc(y, a, b) && in_open_arc(x, c, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_mobius(rng: &mut ChaCha8Rng) -> MobiusMap {
        loop {
            let e: [f64; 4] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            if let Ok(m) = MobiusMap::new(e[0], e[1], e[2], e[3]) {
                if m.entries().iter().all(|x| x.abs() <= 10.0) {
                    return m;
                }
            }
        }
    }

    fn random_disk_point(rng: &mut ChaCha8Rng) -> DiskPoint {
        Complex64::from_polar(rng.random_range(0.0..0.95), rng.random_range(0.0..TAU))
    }

    // SU(1,1) form of a real matrix, obtained by conjugating with the Cayley matrix.
    fn disk_matrix(m: &MobiusMap) -> [Complex64; 4] {
        let [a, b, c, d] = m.entries();
        let cay = [I, I, Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)];
        let cay_inv = [Complex64::new(1.0, 0.0), -I, Complex64::new(1.0, 0.0), I];
        let mm = [Complex64::from(a), Complex64::from(b), Complex64::from(c), Complex64::from(d)];
        let mul = |x: [Complex64; 4], y: [Complex64; 4]| {
            [
                x[0] * y[0] + x[1] * y[2],
                x[0] * y[1] + x[1] * y[3],
                x[2] * y[0] + x[3] * y[2],
                x[2] * y[1] + x[3] * y[3],
            ]
        };
        mul(mul(cay_inv, mm), cay)
    }

    #[test]
    fn identity_and_rotation() {
        let p = BoundaryPoint::new(FRAC_PI_2);
        assert!((mobius_apply(&MobiusMap::identity(), p).angle() - FRAC_PI_2).abs() < EXACT_TOL);
        let r = MobiusMap::rotation(FRAC_PI_2);
        assert!(mobius_apply(&r, BoundaryPoint::new(0.0)).distance(p) < EXACT_TOL);
        let z = r.apply_disk(Complex64::new(0.5, 0.0));
        assert!((z - Complex64::new(0.0, 0.5)).norm() < 1e-14);
    }

    #[test]
    fn cayley_conventions() {
        assert!(BoundaryPoint::new(0.0).to_half_plane().is_infinite());
        assert!((BoundaryPoint::new(PI).to_half_plane()).abs() < 1e-15);
        assert!((BoundaryPoint::new(FRAC_PI_2).to_half_plane() + 1.0).abs() < 1e-15);
        assert!(BoundaryPoint::from_half_plane(f64::INFINITY).angle() == 0.0);
        assert!((cayley(Complex64::new(0.0, 0.0)) - I).norm() < 1e-15);
        for x in [-3.0, -0.5, 0.0, 0.25, 7.0] {
            assert!((BoundaryPoint::from_half_plane(x).to_half_plane() - x).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_action_matches_half_plane_conjugate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let m = random_mobius(&mut rng);
            let p = BoundaryPoint::new(rng.random_range(0.0..TAU));
            let dm = disk_matrix(&m);
            let z = p.to_disk();
            let image = (dm[0] * z + dm[1]) / (dm[2] * z + dm[3]);
            assert!(mobius_apply(&m, p).distance(BoundaryPoint::from_disk(image)) < 1e-10);
            let zi = random_disk_point(&mut rng);
            let image = (dm[0] * zi + dm[1]) / (dm[2] * zi + dm[3]);
            assert!((m.apply_disk(zi) - image).norm() < 1e-10);
        }
    }

    #[test]
    fn composition_acts_as_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let m = random_mobius(&mut rng);
            let n = random_mobius(&mut rng);
            let p = BoundaryPoint::new(rng.random_range(0.0..TAU));
            let lhs = mobius_apply(&(m * n), p);
            let rhs = mobius_apply(&m, mobius_apply(&n, p));
            assert!(lhs.distance(rhs) < 1e-10);
            assert!((m * m.inverse()).is_identity(1e-12));
        }
    }

    #[test]
    fn translation_normal_form() {
        let g = Geodesic::from_half_plane(0.0, f64::INFINITY).unwrap();
        let t = translation_along(&g, 2f64.ln());
        let w = t.apply_half_plane(Complex64::new(1.0, 1.0));
        assert!((w - Complex64::new(2.0, 2.0)).norm() < 1e-12);
        assert!(translation_along(&g, 0.0).is_identity(0.0));
        assert!((translation_length(&t).unwrap() - 2f64.ln()).abs() < 1e-12);
        assert_eq!(translation_length(&MobiusMap::identity()).unwrap(), 0.0);
    }

    #[test]
    fn translation_conjugation_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = loop {
                if let Ok(g) = Geodesic::from_angles(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)) {
                    if g.p().distance(g.q()) > 1e-3 {
                        break g;
                    }
                }
            };
            let w = rng.random_range(-5.0..5.0);
            let m = random_mobius(&mut rng);
            let lhs = translation_along(&g.map(&m), w);
            let rhs = m.conjugate(&translation_along(&g, w));
            let scale = rhs.entries().iter().fold(1.0f64, |s, e| s.max(e.abs()));
            assert!(lhs.approx_eq(&rhs, 1e-10 * scale), "{lhs} vs {rhs}");
            let t = translation_along(&g, w);
            assert!((translation_length(&t).unwrap() - w.abs()).abs() < 1e-10);
            let (rep, att) = t.fixed_points().unwrap();
            let (from, to) = if w > 0.0 { (g.p(), g.q()) } else { (g.q(), g.p()) };
            assert!(rep.distance(from) < 1e-9 && att.distance(to) < 1e-9);
        }
    }

    #[test]
    fn non_hyperbolic_length_is_an_error() {
        assert!(matches!(translation_length(&MobiusMap::rotation(0.3)), Err(Error::NonHyperbolic { .. })));
        assert!(translation_length(&MobiusMap::parabolic(1.0)).is_err());
    }

    #[test]
    fn crossing_examples() {
        let g = |a, b| Geodesic::from_angles(a, b).unwrap();
        assert!(geodesics_cross(&g(0.0, PI), &g(FRAC_PI_2, 3.0 * FRAC_PI_2)));
        assert!(!geodesics_cross(&g(0.0, PI), &g(PI / 4.0, FRAC_PI_2)));
        assert!(!geodesics_cross(&g(0.0, PI), &g(PI, 3.0 * FRAC_PI_2)));
    }

    #[test]
    fn separation_examples() {
        let g = Geodesic::from_half_plane(-1.0, 1.0).unwrap();
        let inside = inverse_cayley(Complex64::new(0.0, 0.5));
        let outside = inverse_cayley(Complex64::new(0.0, 2.0));
        assert!(separates(&g, inside, outside).unwrap());
        assert!(!separates(&g, inside, inside).unwrap());
        let on = inverse_cayley(I);
        assert_eq!(separates(&g, on, inside), Err(Error::PointOnGeodesic));
    }

    #[test]
    fn separation_agrees_with_semicircle_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut checked = 0;
        while checked < 500 {
            let x: f64 = rng.random_range(-4.0..4.0);
            let y: f64 = rng.random_range(-4.0..4.0);
            if (x - y).abs() < 1e-3 {
                continue;
            }
            let g = Geodesic::from_half_plane(x, y).unwrap();
            let w1 = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(0.05..5.0));
            let w2 = Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(0.05..5.0));
            let (center, radius) = ((x + y) / 2.0, (x - y).abs() / 2.0);
            let s1 = (w1 - center).norm() - radius;
            let s2 = (w2 - center).norm() - radius;
            if s1.abs() < 1e-6 || s2.abs() < 1e-6 {
                continue;
            }
            let expected = (s1 > 0.0) != (s2 > 0.0);
            assert_eq!(separates(&g, inverse_cayley(w1), inverse_cayley(w2)).unwrap(), expected);
            checked += 1;
        }
    }

    #[test]
    fn distance_closed_form_and_invariance() {
        let e = std::f64::consts::E;
        let q = Complex64::new((e - 1.0) / (e + 1.0), 0.0);
        assert!((hyp_dist(Complex64::new(0.0, 0.0), q) - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let p = random_disk_point(&mut rng);
            let q = random_disk_point(&mut rng);
            let m = random_mobius(&mut rng);
            assert_eq!(hyp_dist(p, p), 0.0);
            let d0 = hyp_dist(p, q);
            let d1 = hyp_dist(m.apply_disk(p), m.apply_disk(q));
            assert!((d0 - d1).abs() < 1e-10 * d0.max(1.0), "{d0} vs {d1}");
        }
    }

    #[test]
    fn three_point_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let m = random_mobius(&mut rng);
            let src = [0.3, 2.0, 4.0].map(BoundaryPoint::new);
            let dst = src.map(|p| m.apply_boundary(p));
            let fit = MobiusMap::from_three_points(src, dst).unwrap();
            assert!(fit.approx_eq(&m, 1e-9));
        }
    }

    #[test]
    fn box_ordering_and_membership() {
        assert!(GeodesicBox::from_angles([0.0, 1.0, 2.0, 3.0]).is_ok());
        assert!(GeodesicBox::from_angles([5.0, 0.5, 2.0, 3.0]).is_ok());
        assert!(GeodesicBox::from_angles([0.0, 2.0, 1.0, 3.0]).is_err());
        let q = GeodesicBox::reference();
        assert!(q.contains(&Geodesic::from_angles(0.5, 4.0).unwrap()).unwrap());
        assert!(!q.contains(&Geodesic::from_angles(0.5, 1.0).unwrap()).unwrap());
        assert!(q.contains(&Geodesic::from_angles(0.0, 4.0).unwrap()).is_err());
    }

    #[test]
    fn point_at_lies_on_geodesic() {
        let g = Geodesic::from_angles(0.4, 2.9).unwrap();
        for s in [-2.0, 0.0, 1.5] {
            assert!(g.signed_distance(g.point_at(s)).abs() < 1e-10);
        }
        let d = hyp_dist(g.point_at(-1.0), g.point_at(1.5));
        assert!((d - 2.5).abs() < 1e-10);
    }
}
