//! Liouville measure of boxes of geodesics, its pullback under circle maps,
//! ν-test functions, and bracketed estimates of ν-norms and the Fréchet
//! metric for differences of finite measured laminations.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circle_map::PiecewiseMobiusCircleMap;
use crate::error::{Error, Result};
use crate::hyperbolic::{circular_distance, BoundaryPoint, Geodesic, GeodesicBox, MobiusMap, EXACT_TOL};
use crate::lamination::MeasuredLamination;

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5eed_1a7e;
/// Default number of random test functions per norm estimate.
pub const DEFAULT_BUDGET: usize = 2000;
/// Default truncation of the Fréchet series.
pub const DEFAULT_N_MAX: usize = 8;

fn det(x: [f64; 2], y: [f64; 2]) -> f64 {
    x[0] * y[1] - x[1] * y[0]
}

/// `log |(a−c)(b−d) / ((a−d)(b−c))|` from homogeneous coordinates of the
/// corners. The result does not depend on the scaling of each vector.
fn log_cross_ratio([a, b, c, d]: [[f64; 2]; 4]) -> Result<f64> {
    let dets = [det(a, c), det(b, d), det(a, d), det(b, c)];
    if dets.iter().any(|x| *x == 0.0 || !x.is_finite()) {
        return Err(Error::InvalidBox);
    }
    Ok(dets[0].abs().ln() + dets[1].abs().ln() - dets[2].abs().ln() - dets[3].abs().ln())
}

fn half_sine(x: f64, y: f64) -> f64 {
    ((x - y) / 2.0).sin().abs()
}

/// Liouville measure of the box `(a, b) × (c, d)`.
pub fn liouville_box(q: &GeodesicBox) -> f64 {
    let [a, b, c, d] = q.angles();
    (half_sine(a, c) * half_sine(b, d) / (half_sine(a, d) * half_sine(b, c))).ln()
}

/// Liouville measure of the box with the given corner angles.
pub fn liouville_angles(angles: [f64; 4]) -> Result<f64> {
    Ok(liouville_box(&GeodesicBox::from_angles(angles)?))
}

/// `(h_* L)(Q) = L(h⁻¹(Q))`, inverting each corner through the piece of `h⁻¹`
/// that contains it.
pub fn pullback_liouville(h: &PiecewiseMobiusCircleMap, q: &GeodesicBox) -> Result<f64> {
    image_liouville(&h.inverse(), q)
}

/// `L(h(Q))`. A map without breakpoints is a Möbius map and leaves `L`
/// unchanged.
pub fn image_liouville(h: &PiecewiseMobiusCircleMap, q: &GeodesicBox) -> Result<f64> {
    if h.breakpoints().is_empty() {
        return Ok(liouville_box(q));
    }
    let corners = q.corners();
    for (corner, x) in corners.iter().enumerate() {
        if h.breakpoint_near(*x, EXACT_TOL).is_some() {
            return Err(Error::BoxCornerCollision { corner });
        }
    }
    log_cross_ratio(corners.map(|x| h.eval_projective(x)))
}

/// A Möbius map carrying the reference box onto `q`; requires `L(q) = log 2`
/// within `1e-9`.
pub fn box_frame(q: &GeodesicBox) -> Result<MobiusMap> {
    let l = liouville_box(q);
    if (l - LN_2).abs() > 1e-9 {
        return Err(Error::InvalidTestFunction(format!("box has Liouville mass {l}, expected log 2")));
    }
    let r = GeodesicBox::reference().corners();
    let c = q.corners();
    MobiusMap::from_three_points([r[0], r[1], r[2]], [c[0], c[1], c[2]])
}

/// The box with corners `a, b, c` whose fourth corner makes its Liouville
/// mass `log 2`.
pub fn log2_box(a: f64, b: f64, c: f64) -> Result<GeodesicBox> {
    let r = GeodesicBox::reference().corners();
    let m = MobiusMap::from_three_points([r[0], r[1], r[2]], [a, b, c].map(BoundaryPoint::new))?;
    Ok(GeodesicBox::reference().map(&m))
}

/// A ν-test function: a bump `H·(1 − ρ/r)₊` in the coordinates of the
/// reference box `(0, π/2) × (π, 3π/2)`, transported to `Θ(reference)`.
/// `ρ` is the max of the circular distances of the two endpoints, and the
/// height satisfies `H ≤ min(1, r^ν)`, which bounds the Hölder quotient by 1.
#[derive(Clone, Copy, Debug)]
pub struct TestFunction {
    theta: MobiusMap,
    theta_inv: MobiusMap,
    nu: f64,
    center: (f64, f64),
    radius: f64,
    height: f64,
}

impl TestFunction {
    pub fn new(theta: MobiusMap, nu: f64, center: (f64, f64), radius: f64) -> Result<Self> {
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(Error::InvalidTestFunction(format!("exponent {nu} outside (0, 1]")));
        }
        let (x, y) = center;
        let fits = radius > 0.0
            && x - radius >= 0.0
            && x + radius <= FRAC_PI_2
            && y - radius >= PI
            && y + radius <= PI + FRAC_PI_2;
        if !fits {
            return Err(Error::InvalidTestFunction(format!(
                "bump at ({x}, {y}) with radius {radius} leaves the reference box"
            )));
        }
        let height = radius.powf(nu).min(1.0);
        Ok(TestFunction { theta, theta_inv: theta.inverse(), nu, center, radius, height })
    }

    /// A bump supported in `q`, which must have Liouville mass `log 2`.
    pub fn on_box(q: &GeodesicBox, nu: f64, center: (f64, f64), radius: f64) -> Result<Self> {
        Self::new(box_frame(q)?, nu, center, radius)
    }

    /// Lowers the peak; heights above the admissible one are rejected.
    pub fn with_height(mut self, height: f64) -> Result<Self> {
        if !(0.0..=self.height).contains(&height) {
            return Err(Error::InvalidTestFunction(format!("height {height} exceeds {}", self.height)));
        }
        self.height = height;
        Ok(self)
    }

    pub fn support_box(&self) -> GeodesicBox {
        GeodesicBox::reference().map(&self.theta)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> (f64, f64) {
        self.center
    }

    /// `φ∘Θ` at the reference-box coordinates `(x, y)`.
    pub fn profile(&self, x: f64, y: f64) -> f64 {
        let rho = circular_distance(x, self.center.0).max(circular_distance(y, self.center.1));
        self.height * (1.0 - rho / self.radius).max(0.0)
    }

    pub fn eval(&self, g: &Geodesic) -> f64 {
        let x = self.theta_inv.apply_boundary(g.p()).angle();
        let y = self.theta_inv.apply_boundary(g.q()).angle();
        let in_first = |t: f64| t > 0.0 && t < FRAC_PI_2;
        let in_second = |t: f64| t > PI && t < PI + FRAC_PI_2;
        if in_first(x) && in_second(y) {
            self.profile(x, y)
        } else if in_first(y) && in_second(x) {
            self.profile(y, x)
        } else {
            0.0
        }
    }

    /// Pairing with a measured lamination.
    pub fn apply(&self, lam: &MeasuredLamination) -> f64 {
        lam.atoms().iter().map(|a| a.weight * self.eval(&a.geodesic)).sum()
    }
}

/// Bounds on a ν-norm value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HolderNormBracket {
    pub lower: f64,
    pub upper: f64,
}

impl HolderNormBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// A norm estimate with the parameters that produced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub nu: f64,
    pub lower: f64,
    pub upper: f64,
    pub budget: usize,
    pub seed: u64,
}

/// The signed measure `m1 − m2` as a canonically ordered atom list. Equal
/// geodesics are merged, so that swapping the arguments negates every weight
/// and nothing else.
pub fn signed_difference(m1: &MeasuredLamination, m2: &MeasuredLamination) -> Vec<(Geodesic, f64)> {
    let key = |g: &Geodesic| {
        let (x, y) = (g.p().angle(), g.q().angle());
        if x <= y {
            (x, y)
        } else {
            (y, x)
        }
    };
    let mut out: Vec<(Geodesic, f64)> = Vec::new();
    let mut used = vec![false; m2.len()];
    for a in m1.atoms() {
        let mut g = a.geodesic;
        let mut w = a.weight;
        if let Some(j) = (0..m2.len()).find(|&j| !used[j] && m2.atoms()[j].geodesic.same_as(&g, EXACT_TOL)) {
            used[j] = true;
            let h = m2.atoms()[j].geodesic;
            if key(&h).partial_cmp(&key(&g)) == Some(std::cmp::Ordering::Less) {
                g = h;
            }
            w -= m2.atoms()[j].weight;
        }
        out.push((g, w));
    }
    for (j, a) in m2.atoms().iter().enumerate() {
        if !used[j] {
            out.push((a.geodesic, -a.weight));
        }
    }
    out.retain(|(_, w)| *w != 0.0);
    for (g, _) in &mut out {
        let (x, y) = key(g);
        *g = Geodesic::new(BoundaryPoint::new(x), BoundaryPoint::new(y)).expect("endpoints were distinct");
    }
    out.sort_by(|a, b| {
        let (ka, kb) = (key(&a.0), key(&b.0));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    out
}

fn pair(tf: &TestFunction, atoms: &[(Geodesic, f64)]) -> f64 {
    atoms.iter().map(|(g, w)| w * tf.eval(g)).sum::<f64>().abs()
}

/// Largest total-variation mass of the signed atoms over boxes of Liouville
/// mass `log 2`.
///
/// Mass is monotone under inclusion and any box of mass below `log 2` grows
/// into one of mass exactly `log 2`, so it is enough to scan the smallest
/// closed boxes spanned by endpoints: corners `i ≤ j < k ≤ l` in
/// counterclockwise order, with `l` pushed as far as the mass allows.
pub fn max_box_variation(atoms: &[(Geodesic, f64)]) -> f64 {
    if atoms.is_empty() {
        return 0.0;
    }
    let mut angles: Vec<f64> = atoms.iter().flat_map(|(g, _)| [g.p().angle(), g.q().angle()]).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() <= EXACT_TOL);
    let m = angles.len();
    let index = |t: f64| {
        angles
            .iter()
            .position(|a| circular_distance(*a, t) <= EXACT_TOL)
            .expect("every endpoint was collected")
    };
    let ends: Vec<(usize, usize, f64)> =
        atoms.iter().map(|(g, w)| (index(g.p().angle()), index(g.q().angle()), w.abs())).collect();
    // corner sets touching exactly at `log 2` are not inside an open box of that mass; the
    // slack only enlarges the bound
    let limit = LN_2 + EXACT_TOL;
    let mass = |i: usize, j: usize, k: usize, l: usize| {
        let (a, b, c, d) = (angles[i], angles[j % m], angles[k % m], angles[l % m]);
        (half_sine(a, c) * half_sine(b, d) / (half_sine(a, d) * half_sine(b, c))).ln()
    };
    let mut best = ends.iter().map(|e| e.2).fold(0.0, f64::max);
    for i in 0..m {
        for len1 in 0..m {
            for ko in (len1 + 1)..m {
                let mut lo = ko;
                while lo + 1 < m && mass(i, i + len1, i + ko, i + lo + 1) < limit {
                    lo += 1;
                }
                let offset = |x: usize| (x + m - i) % m;
                let tv: f64 = ends
                    .iter()
                    .filter(|(u, v, _)| {
                        let (u, v) = (offset(*u), offset(*v));
                        (u <= len1 && (ko..=lo).contains(&v)) || (v <= len1 && (ko..=lo).contains(&u))
                    })
                    .map(|e| e.2)
                    .sum();
                best = best.max(tv);
            }
        }
    }
    best
}

/// Test functions peaked on each atom: the reference box is carried onto the
/// atom by its normal form and slid along it.
fn adapted_test_functions(atoms: &[(Geodesic, f64)], nu: f64) -> Vec<TestFunction> {
    let diameter = Geodesic::from_angles(FRAC_PI_4, PI + FRAC_PI_4).expect("distinct endpoints");
    let nf0 = diameter.normal_form().inverse();
    let center = (FRAC_PI_4, PI + FRAC_PI_4);
    let mut out = Vec::new();
    for (g, _) in atoms {
        for h in [*g, g.reversed()] {
            let nf = h.normal_form();
            for k in -24..=24 {
                let s = 0.5 * k as f64;
                let theta = nf.compose(&MobiusMap::dilation(s)).compose(&nf0);
                for radius in [FRAC_PI_4, FRAC_PI_4 / 2.0] {
                    out.push(TestFunction::new(theta, nu, center, radius).expect("bump fits the box"));
                }
            }
        }
    }
    out
}

/// The `k`-th seeded random test function; a fixed prefix of the sequence is
/// reused as the budget grows.
fn random_test_function(rng: &mut ChaCha8Rng, nu: f64) -> TestFunction {
    let rho: f64 = rng.random_range(0.0..8.0);
    let z = Complex64::from_polar((rho / 2.0).tanh(), rng.random_range(0.0..TAU));
    let theta = MobiusMap::centered_at(z)
        .expect("tanh keeps the point inside the disk")
        .compose(&MobiusMap::rotation(rng.random_range(0.0..TAU)));
    let radius: f64 = rng.random_range(0.02..=FRAC_PI_4);
    let x = rng.random_range(radius..=FRAC_PI_2 - radius);
    let y = PI + rng.random_range(radius..=FRAC_PI_2 - radius);
    TestFunction::new(theta, nu, (x, y), radius).expect("sampled inside the admissible range")
}

fn lower_bound(atoms: &[(Geodesic, f64)], nu: f64, budget: usize, seed: u64) -> f64 {
    let mut best = adapted_test_functions(atoms, nu).iter().map(|tf| pair(tf, atoms)).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget {
        best = best.max(pair(&random_test_function(&mut rng, nu), atoms));
    }
    best
}

/// Bracket on `‖m1 − m2‖_ν` with the default seed.
pub fn nu_norm_diff(m1: &MeasuredLamination, m2: &MeasuredLamination, nu: f64, budget: usize) -> HolderNormBracket {
    nu_norm_diff_seeded(m1, m2, nu, budget, DEFAULT_SEED)
}

/// Bracket on `‖m1 − m2‖_ν`. The lower end is the best pairing found among
/// test functions adapted to the atoms and `budget` random ones; the upper
/// end is the largest total-variation mass of a box of mass `log 2`.
pub fn nu_norm_diff_seeded(
    m1: &MeasuredLamination,
    m2: &MeasuredLamination,
    nu: f64,
    budget: usize,
    seed: u64,
) -> HolderNormBracket {
    let atoms = signed_difference(m1, m2);
    if atoms.is_empty() {
        return HolderNormBracket { lower: 0.0, upper: 0.0 };
    }
    let upper = max_box_variation(&atoms);
    let lower = lower_bound(&atoms, nu, budget, seed);
    HolderNormBracket { lower, upper }
}

pub fn nu_norm_report(m1: &MeasuredLamination, m2: &MeasuredLamination, nu: f64, budget: usize, seed: u64) -> NormReport {
    let b = nu_norm_diff_seeded(m1, m2, nu, budget, seed);
    NormReport { nu, lower: b.lower, upper: b.upper, budget, seed }
}

/// Truncated Fréchet series evaluated at the lower end, the midpoint and the
/// upper end of each bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrechetEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn frechet_estimate(
    m1: &MeasuredLamination,
    m2: &MeasuredLamination,
    n_max: usize,
    budget: usize,
    seed: u64,
) -> FrechetEstimate {
    let atoms = signed_difference(m1, m2);
    let mut est = FrechetEstimate { value: 0.0, lower: 0.0, upper: 0.0 };
    if atoms.is_empty() {
        return est;
    }
    let upper = max_box_variation(&atoms);
    for n in 1..=n_max {
        let c = 1.0 / (n * n) as f64;
        let lower = lower_bound(&atoms, 1.0 / n as f64, budget, seed);
        est.lower += c * lower;
        est.upper += c * upper;
        est.value += c * 0.5 * (lower + upper);
    }
    est
}

/// `Σ_{n ≤ n_max} n⁻² · midpoint(‖m1 − m2‖_{1/n})`.
pub fn frechet_dist(m1: &MeasuredLamination, m2: &MeasuredLamination, n_max: usize, budget: usize) -> f64 {
    frechet_estimate(m1, m2, n_max, budget, DEFAULT_SEED).value
}

/// A family of boxes of Liouville mass `log 2`.
#[derive(Clone, Debug, Default)]
pub struct BoxFamily {
    boxes: Vec<GeodesicBox>,
}

impl BoxFamily {
    pub fn new(boxes: Vec<GeodesicBox>) -> Result<Self> {
        for q in &boxes {
            box_frame(q)?;
        }
        Ok(BoxFamily { boxes })
    }

    /// The reference box moved by rotations through multiples of `π/4` after
    /// translations by `−2..=2` along a diameter; the lattice is turned by a
    /// small fixed angle so that corners avoid the rational multiples of `π`.
    pub fn standard() -> Self {
        const TWIST: f64 = 0.05;
        let diameter = Geodesic::from_angles(0.0, PI).expect("distinct endpoints");
        let mut boxes = Vec::new();
        for k in 0..8 {
            for s in -2..=2 {
                let m = MobiusMap::rotation(TWIST + k as f64 * FRAC_PI_4)
                    .compose(&crate::hyperbolic::translation_along(&diameter, s as f64));
                boxes.push(GeodesicBox::reference().map(&m));
            }
        }
        BoxFamily { boxes }
    }

    /// Boxes straddling each atom endpoint at several scales, where a fault
    /// concentrates the distortion of its earthquake.
    pub fn adapted(lams: &[&MeasuredLamination]) -> Self {
        let mut boxes = Vec::new();
        for lam in lams {
            for e in lam.endpoint_angles() {
                for delta in [0.5, 0.1, 0.02] {
                    for corners in [(e - delta, e + delta, e + PI), (e - PI, e - delta, e + delta)] {
                        if let Ok(q) = log2_box(corners.0, corners.1, corners.2) {
                            boxes.push(q);
                        }
                    }
                }
            }
        }
        BoxFamily { boxes }
    }

    pub fn extend(&mut self, other: BoxFamily) {
        self.boxes.extend(other.boxes);
    }

    pub fn boxes(&self) -> &[GeodesicBox] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

/// `sup |L(h(Q)) − log 2|` over the family: a cross-ratio distortion proxy
/// for closeness to a Möbius map.
pub fn qs_distortion(h: &PiecewiseMobiusCircleMap, boxes: &BoxFamily) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for q in boxes.boxes() {
        worst = worst.max((image_liouville(h, q)? - LN_2).abs());
    }
    Ok(worst)
}
