//! Finite measured laminations: weighted, pairwise non-crossing geodesics.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{
    geodesics_cross, BoundaryPoint, DiskPoint, Geodesic, GeodesicBox, MobiusMap, EXACT_TOL,
};

/// First invariant violation found by [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Crossing { first: usize, second: usize },
    Duplicate { first: usize, second: usize },
    NonPositiveWeight { index: usize, weight: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Crossing { first, second } => write!(f, "atoms {first} and {second} cross"),
            Violation::Duplicate { first, second } => write!(f, "atoms {first} and {second} coincide"),
            Violation::NonPositiveWeight { index, weight } => {
                write!(f, "atom {index} has non-positive weight {weight}")
            }
        }
    }
}

/// A weighted geodesic `w·δ_g`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub geodesic: Geodesic,
    pub weight: f64,
}

impl Atom {
    pub fn new(geodesic: Geodesic, weight: f64) -> Self {
        Atom { geodesic, weight }
    }

    pub fn from_angles(p: f64, q: f64, weight: f64) -> Result<Self> {
        Ok(Atom { geodesic: Geodesic::from_angles(p, q)?, weight })
    }
}

/// Checks weights, duplicates and crossings, reporting the first failure.
pub fn validate(atoms: &[Atom]) -> std::result::Result<(), Violation> {
    for (index, a) in atoms.iter().enumerate() {
        if !(a.weight > 0.0) || !a.weight.is_finite() {
            return Err(Violation::NonPositiveWeight { index, weight: a.weight });
        }
    }
    for i in 0..atoms.len() {
        for j in (i + 1)..atoms.len() {
            let (g, h) = (&atoms[i].geodesic, &atoms[j].geodesic);
            if g == h {
                return Err(Violation::Duplicate { first: i, second: j });
            }
            if geodesics_cross(g, h) {
                return Err(Violation::Crossing { first: i, second: j });
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeasuredLamination {
    atoms: Vec<Atom>,
}

impl MeasuredLamination {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        validate(&atoms).map_err(Error::InvalidLamination)?;
        Ok(MeasuredLamination { atoms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).fold(0.0, f64::max)
    }

    /// All weights multiplied by `t > 0`; `t = 0` gives the empty lamination.
    pub fn scaled(&self, t: f64) -> MeasuredLamination {
        if t == 0.0 {
            return Self::empty();
        }
        MeasuredLamination {
            atoms: self.atoms.iter().map(|a| Atom::new(a.geodesic, a.weight * t)).collect(),
        }
    }

    /// Sorted atom endpoint angles, duplicates removed.
    pub fn endpoint_angles(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .atoms
            .iter()
            .flat_map(|a| [a.geodesic.p().angle(), a.geodesic.q().angle()])
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= EXACT_TOL);
        v
    }

    pub fn same_as(&self, other: &MeasuredLamination, endpoint_tol: f64, weight_tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        for a in &self.atoms {
            let hit = other.atoms.iter().enumerate().position(|(j, b)| {
                !used[j]
                    && a.geodesic.same_as(&b.geodesic, endpoint_tol)
                    && (a.weight - b.weight).abs() <= weight_tol
            });
            match hit {
                Some(j) => used[j] = true,
                None => return false,
            }
        }
        true
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<AtomRecord> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let atoms = records
            .into_iter()
            .map(|r| Atom::from_angles(r.p_angle, r.q_angle, r.weight))
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<AtomRecord> = self
            .atoms
            .iter()
            .map(|a| AtomRecord {
                p_angle: a.geodesic.p().angle(),
                q_angle: a.geodesic.q().angle(),
                weight: a.weight,
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("plain records serialize")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// On-disk record for one atom.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AtomRecord {
    pub p_angle: f64,
    pub q_angle: f64,
    pub weight: f64,
}

/// Total weight of atoms in the box. An atom endpoint on a corner is an error.
pub fn box_mass(lam: &MeasuredLamination, q: &GeodesicBox) -> Result<f64> {
    let mut total = 0.0;
    for a in lam.atoms() {
        if q.contains(&a.geodesic)? {
            total += a.weight;
        }
    }
    Ok(total)
}

/// Image of the lamination under an isometry; weights are unchanged.
pub fn pushforward(m: &MobiusMap, lam: &MeasuredLamination) -> MeasuredLamination {
    MeasuredLamination {
        atoms: lam.atoms().iter().map(|a| Atom::new(a.geodesic.map(m), a.weight)).collect(),
    }
}

/// A geodesic segment of hyperbolic length one.
#[derive(Clone, Copy, Debug)]
pub struct UnitArc {
    pub start: DiskPoint,
    pub end: DiskPoint,
}

impl UnitArc {
    /// Unit arc centred at `center` with direction angle `phi` at the centre.
    pub fn centered(center: DiskPoint, phi: f64) -> Result<Self> {
        let m = MobiusMap::centered_at(center)?;
        let r = 0.25f64.tanh();
        let e = Complex64::from_polar(r, phi);
        Ok(UnitArc { start: m.apply_disk(e), end: m.apply_disk(-e) })
    }

    pub fn crosses(&self, g: &Geodesic) -> bool {
        let a = g.signed_distance(self.start);
        let b = g.signed_distance(self.end);
        (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)
    }

    pub fn crossed_weight(&self, lam: &MeasuredLamination) -> f64 {
        lam.atoms().iter().filter(|a| self.crosses(&a.geodesic)).map(|a| a.weight).sum()
    }
}

const PERPENDICULAR_STEP: f64 = 0.05;
const THURSTON_SEED: u64 = 0x0074_7572_7374_6f6e;

/// Unit arcs along the common perpendicular of `g1` and `g2`, or `None` when
/// the two are more than one apart (or share an endpoint).
fn perpendicular_arcs(g1: &Geodesic, g2: &Geodesic) -> Option<Vec<UnitArc>> {
    if g1.shares_endpoint(g2) {
        return None;
    }
    let mut nf = g1.normal_form();
    let s_inv = nf.inverse();
    let mut x = g2.p().map_half_plane(&s_inv);
    let mut y = g2.q().map_half_plane(&s_inv);
    if x < 0.0 {
        // swap the roles of 0 and ∞ so that g2 lies over the positive axis
        let flip = MobiusMap::from_raw(0.0, -1.0, 1.0, 0.0);
        nf = nf.compose(&flip);
        x = -1.0 / x;
        y = -1.0 / y;
    }
    let (x, y) = if x < y { (x, y) } else { (y, x) };
    let r = (x * y).sqrt();
    let c = (x + y) / 2.0;
    let theta2 = (r / c).clamp(-1.0, 1.0).acos();
    let s2 = (theta2 / 2.0).tan().ln();
    if !s2.is_finite() || s2.abs() > 1.0 {
        return None;
    }
    // point at arclength s from i·r along the circle |w| = r
    let point = |s: f64| {
        let theta = 2.0 * s.exp().atan();
        crate::hyperbolic::inverse_cayley(nf.apply_half_plane(Complex64::from_polar(r, theta)))
    };
    let mut centers = vec![s2 / 2.0];
    let mut s = s2 - 0.5;
    while s <= 0.5 {
        centers.push(s);
        s += PERPENDICULAR_STEP;
    }
    Some(
        centers
            .into_iter()
            .map(|s| UnitArc { start: point(s - 0.5), end: point(s + 0.5) })
            .collect(),
    )
}

/// Lower bound for `sup` over unit arcs of the crossed weight.
///
/// Deterministic candidates (perpendiculars between nearby atom pairs and a
/// short arc through each atom) come first, then `samples` seeded random arcs,
/// so the estimate never decreases as `samples` grows.
pub fn thurston_norm(lam: &MeasuredLamination, samples: usize) -> f64 {
    let atoms = lam.atoms();
    if atoms.is_empty() {
        return 0.0;
    }
    let mut best = 0.0f64;
    for (i, a) in atoms.iter().enumerate() {
        let nf = a.geodesic.normal_form();
        let across = |s: f64| {
            crate::hyperbolic::inverse_cayley(
                nf.apply_half_plane(Complex64::from_polar(1.0, 2.0 * s.exp().atan())),
            )
        };
        let arc = UnitArc { start: across(-0.5), end: across(0.5) };
        best = best.max(arc.crossed_weight(lam));
        for b in &atoms[i + 1..] {
            if let Some(arcs) = perpendicular_arcs(&a.geodesic, &b.geodesic) {
                for arc in arcs {
                    best = best.max(arc.crossed_weight(lam));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(THURSTON_SEED);
    for _ in 0..samples {
        let a = &atoms[rng.random_range(0..atoms.len())];
        let center = a.geodesic.point_at(rng.random_range(-4.0..4.0));
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let arc = UnitArc::centered(center, phi);
        if let Ok(arc) = arc {
            best = best.max(arc.crossed_weight(lam));
        }
    }
    best
}

impl BoundaryPoint {
    pub(crate) fn map_half_plane(self, m: &MobiusMap) -> f64 {
        m.apply_boundary(self).to_half_plane()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::{hyp_dist, inverse_cayley};
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    pub(crate) fn random_lamination(rng: &mut ChaCha8Rng, n: usize) -> MeasuredLamination {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut tries = 0;
        while atoms.len() < n && tries < 10_000 {
            tries += 1;
            let p = rng.random_range(0.0..TAU);
            let q = rng.random_range(0.0..TAU);
            let Ok(a) = Atom::from_angles(p, q, rng.random_range(0.1..3.0)) else { continue };
            if a.geodesic.p().distance(a.geodesic.q()) < 1e-3 {
                continue;
            }
            let ok = atoms.iter().all(|b| {
                !geodesics_cross(&a.geodesic, &b.geodesic)
                    && [b.geodesic.p(), b.geodesic.q()].iter().all(|e| {
                        e.distance(a.geodesic.p()) > 1e-3 && e.distance(a.geodesic.q()) > 1e-3
                    })
            });
            if ok {
                atoms.push(a);
            }
        }
        MeasuredLamination::new(atoms).unwrap()
    }

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

    #[test]
    fn validate_examples() {
        assert!(validate(&[]).is_ok());
        let crossing = [Atom::from_angles(0.0, PI, 1.0).unwrap(), Atom::from_angles(FRAC_PI_2, 3.0 * FRAC_PI_2, 1.0).unwrap()];
        assert_eq!(validate(&crossing), Err(Violation::Crossing { first: 0, second: 1 }));
        let nested = [Atom::from_angles(0.0, PI, 1.0).unwrap(), Atom::from_angles(PI / 4.0, FRAC_PI_2, 2.0).unwrap()];
        assert!(validate(&nested).is_ok());
        let dup = [Atom::from_angles(0.0, PI, 1.0).unwrap(), Atom::from_angles(PI, 0.0, 1.0).unwrap()];
        assert_eq!(validate(&dup), Err(Violation::Duplicate { first: 0, second: 1 }));
        let neg = [Atom::from_angles(0.0, PI, -1.0).unwrap()];
        assert!(matches!(validate(&neg), Err(Violation::NonPositiveWeight { index: 0, .. })));
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lam = random_lamination(&mut rng, 6);
        let back = MeasuredLamination::from_json(&lam.to_json()).unwrap();
        assert_eq!(back, lam);
        let bad = r#"[{"p_angle":0.0,"q_angle":3.14159,"weight":1.0},{"p_angle":1.5707,"q_angle":4.712,"weight":1.0}]"#;
        assert!(matches!(MeasuredLamination::from_json(bad), Err(Error::InvalidLamination(_))));
        assert!(matches!(MeasuredLamination::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn thurston_norm_trivial_cases() {
        assert_eq!(thurston_norm(&MeasuredLamination::empty(), 100), 0.0);
        let single = MeasuredLamination::new(vec![Atom::from_angles(0.3, 2.0, 1.7).unwrap()]).unwrap();
        assert_eq!(thurston_norm(&single, 100), 1.7);
    }

    // k geodesics orthogonal to the imaginary axis at heights e^{s_j}, all within a unit segment.
    fn parallel_family(k: usize, spacing: f64, w: f64) -> MeasuredLamination {
        let atoms = (0..k)
            .map(|j| {
                let r = (j as f64 * spacing).exp();
                Atom::new(Geodesic::from_half_plane(-r, r).unwrap(), w)
            })
            .collect();
        MeasuredLamination::new(atoms).unwrap()
    }

    #[test]
    fn thurston_norm_parallel_family_matches_dense_sampling() {
        let (k, w) = (5, 0.8);
        let lam = parallel_family(k, 0.2, w);
        // explicit transversal: imaginary-axis segment from height e^{-0.1} to e^{0.9}
        let arc = UnitArc {
            start: inverse_cayley(Complex64::new(0.0, (-0.1f64).exp())),
            end: inverse_cayley(Complex64::new(0.0, 0.9f64.exp())),
        };
        assert!((hyp_dist(arc.start, arc.end) - 1.0).abs() < 1e-12);
        assert!((arc.crossed_weight(&lam) - k as f64 * w).abs() < 1e-12);
        // dense oracle: unit arcs along the axis at many offsets
        let mut dense: f64 = 0.0;
        for i in 0..2000 {
            let s = -1.5 + 2.5 * i as f64 / 2000.0;
            let a = UnitArc {
                start: inverse_cayley(Complex64::new(0.0, s.exp())),
                end: inverse_cayley(Complex64::new(0.0, (s + 1.0).exp())),
            };
            dense = dense.max(a.crossed_weight(&lam));
        }
        assert!((dense - k as f64 * w).abs() < 1e-12);
        assert!((thurston_norm(&lam, 0) - dense).abs() < 1e-12);
    }

    #[test]
    fn unit_arc_has_unit_length() {
        let arc = UnitArc::centered(Complex64::new(0.3, -0.5), 1.1).unwrap();
        assert!((hyp_dist(arc.start, arc.end) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thurston_norm_pushforward_within_estimator_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let lam = random_lamination(&mut rng, 8);
            let m = random_mobius(&mut rng);
            let a = thurston_norm(&lam, 500);
            let b = thurston_norm(&pushforward(&m, &lam), 500);
            assert!((a - b).abs() <= 0.05 * a.max(b), "{a} vs {b}");
        }
    }

    #[test]
    fn box_mass_examples() {
        let q = GeodesicBox::reference();
        assert_eq!(box_mass(&MeasuredLamination::empty(), &q).unwrap(), 0.0);
        let lam = MeasuredLamination::new(vec![Atom::from_angles(0.7, 3.9, 2.5).unwrap()]).unwrap();
        assert_eq!(box_mass(&lam, &q).unwrap(), 2.5);
        let corner = MeasuredLamination::new(vec![Atom::from_angles(0.0, 3.9, 2.5).unwrap()]).unwrap();
        assert!(matches!(box_mass(&corner, &q), Err(Error::BoxCornerCollision { corner: 0 })));
    }

    #[test]
    fn box_mass_partition_additivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let lam = random_lamination(&mut rng, 12);
            let mut c: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..TAU)).collect();
            c.sort_by(f64::total_cmp);
            let whole = GeodesicBox::from_angles([c[0], c[2], c[3], c[4]]).unwrap();
            let left = GeodesicBox::from_angles([c[0], c[1], c[3], c[4]]).unwrap();
            let right = GeodesicBox::from_angles([c[1], c[2], c[3], c[4]]).unwrap();
            let (Ok(t), Ok(l), Ok(r)) = (box_mass(&lam, &whole), box_mass(&lam, &left), box_mass(&lam, &right)) else {
                continue;
            };
            // no atom sits on the interior split corner with probability one
            assert!((t - (l + r)).abs() <= 1e-12 * t.max(1.0));
            assert!(l <= t + 1e-12 && r <= t + 1e-12);
        }
    }

    #[test]
    fn pushforward_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let lam = random_lamination(&mut rng, 10);
        assert!(pushforward(&MobiusMap::identity(), &lam).same_as(&lam, 1e-12, 0.0));
        for _ in 0..50 {
            let m = random_mobius(&mut rng);
            let n = random_mobius(&mut rng);
            let q = GeodesicBox::from_angles([0.1, 1.3, 2.9, 4.4]).unwrap();
            let pushed = pushforward(&m, &lam);
            if let Ok(before) = box_mass(&lam, &q) {
                assert_eq!(box_mass(&pushed, &q.map(&m)).unwrap(), before);
            }
            assert!(validate(pushed.atoms()).is_ok());
            let lhs = pushforward(&(m * n), &lam);
            let rhs = pushforward(&m, &pushforward(&n, &lam));
            assert!(lhs.same_as(&rhs, 1e-10, 0.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_pushforward_preserves_validity(seed in any::<u64>(), n in 0usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lam = random_lamination(&mut rng, n);
            let m = random_mobius(&mut rng);
            prop_assert!(validate(pushforward(&m, &lam).atoms()).is_ok());
        }

        #[test]
        fn prop_thurston_norm_bounds(seed in any::<u64>(), n in 1usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lam = random_lamination(&mut rng, n);
            let small = thurston_norm(&lam, 10);
            let large = thurston_norm(&lam, 200);
            prop_assert!(small >= lam.max_weight() - 1e-12);
            prop_assert!(large >= small);
            prop_assert!(large <= lam.total_weight() + 1e-12);
        }

        #[test]
        fn prop_crossing_symmetric_and_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Geodesic::from_angles(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
            let h = Geodesic::from_angles(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
            if let (Ok(g), Ok(h)) = (g, h) {
                let m = random_mobius(&mut rng);
                prop_assert_eq!(geodesics_cross(&g, &h), geodesics_cross(&h, &g));
                prop_assert_eq!(geodesics_cross(&g, &h), geodesics_cross(&g.map(&m), &h.map(&m)));
            }
        }
    }
}
