//! Piecewise-Möbius homeomorphisms of the circle.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;

use crate::dd::{self, DdMatrix};
use crate::error::{Error, Result};
use crate::hyperbolic::{ccw_distance, BoundaryPoint, MobiusMap, COMPOSED_TOL, EXACT_TOL};

/// A circle homeomorphism that is Möbius on each arc between consecutive
/// breakpoints. Piece `i` acts on the half-open arc `[β_i, β_{i+1})`; a map
/// without breakpoints is a single Möbius map.
///
/// Each piece is kept as a double-double matrix: [`pieces`](Self::pieces)
/// returns the leading words and a second array holds the trailing words.
/// Pieces of deep earthquakes have entries far above one, and the transition
/// `M_{i−1}⁻¹ ∘ M_i` between neighbours loses about `‖M‖²` ulps of relative
/// accuracy, which a plain double cannot afford.
#[derive(Clone, Debug)]
pub struct PiecewiseMobiusCircleMap {
    breakpoints: Vec<BoundaryPoint>,
    pieces: Vec<MobiusMap>,
    lo: Vec<[f64; 4]>,
}

impl PiecewiseMobiusCircleMap {
    /// Checked constructor: breakpoints strictly increasing in `[0, 2π)`,
    /// `max(1, breakpoints)` pieces, continuity and monotonicity to `1e-10`.
    pub fn new(breakpoints: Vec<BoundaryPoint>, pieces: Vec<MobiusMap>) -> Result<Self> {
        let lo = vec![[0.0; 4]; pieces.len()];
        Self::checked(breakpoints, pieces, lo)
    }

    fn checked(breakpoints: Vec<BoundaryPoint>, pieces: Vec<MobiusMap>, lo: Vec<[f64; 4]>) -> Result<Self> {
        if pieces.len() != breakpoints.len().max(1) {
            return Err(Error::InvalidCircleMap(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len().max(1),
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[0].angle() < w[1].angle())) {
            return Err(Error::InvalidCircleMap("breakpoints not strictly increasing".into()));
        }
        let h = PiecewiseMobiusCircleMap { breakpoints, pieces, lo };
        h.check_invariants(COMPOSED_TOL)?;
        Ok(h)
    }

    pub(crate) fn from_parts(breakpoints: Vec<BoundaryPoint>, pieces: Vec<MobiusMap>) -> Self {
        debug_assert_eq!(pieces.len(), breakpoints.len().max(1));
        let lo = vec![[0.0; 4]; pieces.len()];
        PiecewiseMobiusCircleMap { breakpoints, pieces, lo }
    }

    pub(crate) fn from_dd(breakpoints: Vec<BoundaryPoint>, pieces: Vec<DdMatrix>) -> Self {
        debug_assert_eq!(pieces.len(), breakpoints.len().max(1));
        let lo = pieces.iter().map(dd::lo_entries).collect();
        let pieces = pieces
            .iter()
            .map(|m| {
                let [a, b, c, d] = dd::to_entries(m);
                MobiusMap::from_raw(a, b, c, d)
            })
            .collect();
        PiecewiseMobiusCircleMap { breakpoints, pieces, lo }
    }

    pub fn mobius(m: MobiusMap) -> Self {
        Self::from_parts(Vec::new(), vec![m])
    }

    pub fn identity() -> Self {
        Self::mobius(MobiusMap::IDENTITY)
    }

    pub fn breakpoints(&self) -> &[BoundaryPoint] {
        &self.breakpoints
    }

    /// Leading words of the pieces.
    pub fn pieces(&self) -> &[MobiusMap] {
        &self.pieces
    }

    pub(crate) fn piece_dd(&self, i: usize) -> DdMatrix {
        dd::from_hi_lo(self.pieces[i].entries(), self.lo[i])
    }

    /// Whether the map is a single Möbius map.
    pub fn as_mobius(&self) -> Option<MobiusMap> {
        if self.breakpoints.is_empty() {
            Some(self.pieces[0])
        } else {
            None
        }
    }

    /// Index of the piece acting at `p`.
    pub fn piece_index(&self, p: BoundaryPoint) -> usize {
        let n = self.breakpoints.len();
        if n == 0 {
            return 0;
        }
        let x = p.angle();
        let k = self.breakpoints.partition_point(|b| b.angle() <= x);
        if k == 0 {
            n - 1
        } else {
            k - 1
        }
    }

    pub fn piece_at(&self, p: BoundaryPoint) -> &MobiusMap {
        &self.pieces[self.piece_index(p)]
    }

    fn apply_piece(&self, i: usize, p: BoundaryPoint) -> BoundaryPoint {
        let [u, v] = dd::mat_vec(&self.piece_dd(i), p.projective());
        BoundaryPoint::from_projective(u, v)
    }

    pub fn eval(&self, p: BoundaryPoint) -> BoundaryPoint {
        self.apply_piece(self.piece_index(p), p)
    }

    /// Unnormalized homogeneous coordinates of `h(p)`; keeps relative
    /// precision when the piece has very large entries.
    pub(crate) fn eval_projective(&self, p: BoundaryPoint) -> [f64; 2] {
        dd::mat_vec(&self.piece_dd(self.piece_index(p)), p.projective())
    }

    /// Midpoint of the arc carried by piece `i`.
    pub fn arc_midpoint(&self, i: usize) -> BoundaryPoint {
        arc_midpoint(&self.breakpoints, i)
    }

    /// Index of a breakpoint within `tol` of `p`.
    pub fn breakpoint_near(&self, p: BoundaryPoint, tol: f64) -> Option<usize> {
        self.breakpoints.iter().position(|b| b.distance(p) <= tol)
    }

    pub fn inverse(&self) -> Self {
        let n = self.breakpoints.len();
        if n == 0 {
            return Self::from_dd(Vec::new(), vec![dd::inverse(&self.piece_dd(0))]);
        }
        let mut arcs: Vec<(BoundaryPoint, DdMatrix)> =
            (0..n).map(|i| (self.apply_piece(i, self.breakpoints[i]), dd::inverse(&self.piece_dd(i)))).collect();
        arcs.sort_by(|a, b| a.0.angle().total_cmp(&b.0.angle()));
        let (breakpoints, pieces) = arcs.into_iter().unzip();
        Self::from_dd(breakpoints, pieces)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &PiecewiseMobiusCircleMap) -> Self {
        if self.breakpoints.is_empty() && other.breakpoints.is_empty() {
            return Self::from_dd(Vec::new(), vec![dd::mat_mul(&self.piece_dd(0), &other.piece_dd(0))]);
        }
        let other_inv = other.inverse();
        let mut bps: Vec<BoundaryPoint> = other.breakpoints.clone();
        bps.extend(self.breakpoints.iter().map(|b| other_inv.eval(*b)));
        let bps = sorted_unique(bps);
        let pieces = (0..bps.len())
            .map(|i| {
                let m = arc_midpoint(&bps, i);
                let j = other.piece_index(m);
                let k = self.piece_index(other.apply_piece(j, m));
                dd::mat_mul(&self.piece_dd(k), &other.piece_dd(j))
            })
            .collect();
        Self::from_dd(bps, pieces)
    }

    /// `m ∘ self`.
    pub fn post_compose(&self, m: &MobiusMap) -> Self {
        let left = dd::from_entries(m.entries());
        let pieces = (0..self.pieces.len()).map(|i| dd::mat_mul(&left, &self.piece_dd(i))).collect();
        Self::from_dd(self.breakpoints.clone(), pieces)
    }

    /// `self ∘ m`.
    pub fn pre_compose(&self, m: &MobiusMap) -> Self {
        self.compose(&Self::mobius(*m))
    }

    /// Drops breakpoints across which the adjacent pieces agree within `tol`.
    pub fn simplified(&self, tol: f64) -> Self {
        let n = self.breakpoints.len();
        if n == 0 {
            return self.clone();
        }
        let keep: Vec<usize> = (0..n)
            .filter(|&i| !self.pieces[(i + n - 1) % n].approx_eq(&self.pieces[i], tol))
            .collect();
        if keep.is_empty() {
            return Self::from_dd(Vec::new(), vec![self.piece_dd(0)]);
        }
        Self::from_dd(
            keep.iter().map(|&i| self.breakpoints[i]).collect(),
            keep.iter().map(|&i| self.piece_dd(i)).collect(),
        )
    }

    /// Continuity at every breakpoint and orientation-preserving bijectivity.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let n = self.breakpoints.len();
        if n == 0 {
            return Ok(());
        }
        let mut images = Vec::with_capacity(n);
        for i in 0..n {
            let b = self.breakpoints[i];
            let left = self.apply_piece((i + n - 1) % n, b);
            let right = self.apply_piece(i, b);
            let gap = left.distance(right);
            if gap > tol {
                return Err(Error::InvalidCircleMap(format!(
                    "discontinuity {gap:e} at breakpoint {i} (angle {})",
                    b.angle()
                )));
            }
            images.push(right);
        }
        if n == 1 {
            return Ok(());
        }
        // Images closer than the angle resolution compare equal under strong
        // contraction; a reversal shows up as an extra turn in the winding.
        let winding: f64 = (0..n).map(|i| ccw_distance(images[i].angle(), images[(i + 1) % n].angle())).sum();
        if (winding - std::f64::consts::TAU).abs() > 1e-6 {
            return Err(Error::InvalidCircleMap(format!("map is not monotone (winding {winding})")));
        }
        Ok(())
    }

    /// Post-composes with the Möbius map returning the images of `0, π/2, π` to themselves.
    pub fn normalize(&self) -> Self {
        let anchors = [0.0, FRAC_PI_2, PI].map(BoundaryPoint::new);
        let images = anchors.map(|p| self.eval(p));
        let n = MobiusMap::from_three_points(images, anchors)
            .expect("a homeomorphism keeps three distinct points distinct");
        self.post_compose(&n)
    }

    /// Largest angular distance between `self` and `other` over the given points.
    pub fn sup_distance(&self, other: &PiecewiseMobiusCircleMap, points: &[BoundaryPoint]) -> f64 {
        points.iter().map(|p| self.eval(*p).distance(other.eval(*p))).fold(0.0, f64::max)
    }

    /// Text form: a `breakpoints k` header, then one row per piece holding the
    /// breakpoint angle (`*` for a map without breakpoints), the four leading
    /// words `a b c d` and the four trailing words. Numbers carry 17
    /// significant digits and round-trip bit-exactly. Rows with only the
    /// leading words are accepted on input.
    pub fn to_text(&self) -> String {
        let mut s = format!("breakpoints {}\n", self.breakpoints.len());
        for (i, m) in self.pieces.iter().enumerate() {
            match self.breakpoints.get(i) {
                Some(bp) => write!(s, "{:.16e}", bp.angle()).unwrap(),
                None => s.push('*'),
            }
            for x in m.entries().iter().chain(self.lo[i].iter()) {
                write!(s, " {x:.16e}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty circle map".into()))?;
        let k: usize = header
            .strip_prefix("breakpoints ")
            .and_then(|n| n.trim().parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad header {header:?}")))?;
        let mut breakpoints = Vec::with_capacity(k);
        let mut pieces = Vec::with_capacity(k.max(1));
        let mut lo = Vec::with_capacity(k.max(1));
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 && fields.len() != 9 {
                return Err(Error::Parse(format!("expected 5 or 9 fields in {line:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            if fields[0] != "*" {
                breakpoints.push(BoundaryPoint::new(num(fields[0])?));
            }
            let (a, b, c, d) = (num(fields[1])?, num(fields[2])?, num(fields[3])?, num(fields[4])?);
            let det = a * d - b * c;
            if (det - 1.0).abs() > 1e-9 * (a * d).abs().max(1.0) {
                return Err(Error::InvalidMobius { det });
            }
            pieces.push(MobiusMap::from_raw(a, b, c, d));
            let mut tail = [0.0; 4];
            if fields.len() == 9 {
                for (k, f) in fields[5..].iter().enumerate() {
                    tail[k] = num(f)?;
                }
            }
            lo.push(tail);
        }
        if breakpoints.len() != k {
            return Err(Error::Parse(format!(
                "header announces {k} breakpoints, found {}",
                breakpoints.len()
            )));
        }
        Self::checked(breakpoints, pieces, lo)
    }
}

pub(crate) fn arc_midpoint(bps: &[BoundaryPoint], i: usize) -> BoundaryPoint {
    match bps.len() {
        0 => BoundaryPoint::new(PI),
        1 => BoundaryPoint::new(bps[0].angle() + PI),
        n => {
            let a = bps[i].angle();
            let b = bps[(i + 1) % n].angle();
            BoundaryPoint::new(a + ccw_distance(a, b) / 2.0)
        }
    }
}

pub(crate) fn sorted_unique(mut v: Vec<BoundaryPoint>) -> Vec<BoundaryPoint> {
    v.sort_by(|a, b| a.angle().total_cmp(&b.angle()));
    v.dedup_by(|a, b| a.distance(*b) <= EXACT_TOL);
    if v.len() > 1 && v[0].distance(v[v.len() - 1]) <= EXACT_TOL {
        v.pop();
    }
    v
}
