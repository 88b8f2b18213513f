//! Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when a
//! criterion fails, except for those listed in `KNOWN_UNATTAINABLE`.

mod common;

use std::f64::consts::{FRAC_PI_2, LN_2, PI, TAU};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use earthquake::earthquake::{earthquake_boundary, recover_measure};
use earthquake::experiments::{converse_counterexample, prop32_experiment, thurston_ray, tlc_density_experiment, ConverseSetup};
use earthquake::liouville::liouville_box;
use earthquake::solenoid::cusp::{check_half_plane, CuspStatus};
use earthquake::solenoid::family::certified_equivariance_check;
use earthquake::solenoid::{
    example43_family, profinite_dist, subgroups_of_index_at_most, tlc_lift, transverse_continuity_modulus, CoreChain,
    GroupWord,
};
use earthquake::solenoid::covers::TransversalPoint;
use earthquake::{Atom, BoundaryPoint, EarthquakeMap, GeodesicBox, MeasuredLamination, MobiusMap};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criterion 8 asks the Fréchet distance of a shared-endpoint sequence to
/// shrink. Every pair `(p, q), (p, q_n)` is Möbius equivalent to every other
/// and the ν-norms are Möbius invariant, so the distance is constant along
/// the sequence; the run measures that constant.
const KNOWN_UNATTAINABLE: &[usize] = &[8];

const C1_TOL: f64 = 1e-12;
const C2_INVARIANCE_TOL: f64 = 1e-9;
const C2_QUADRATURE_TOL: f64 = 1e-6;
const C3_TOL: f64 = 1e-8;
const C4_TOL: f64 = 1e-9;
const C5_TOL: f64 = 1e-9;
const C6_RAY_TOL: f64 = 0.05;
const C6_ORACLE_TOL: f64 = 1e-9;
const C7_RATIO: f64 = 0.1;
const C8_FACTOR: f64 = 10.0;
const C8_BAND: f64 = 0.2;
const C10_TOL: f64 = 1e-12;
const N_MAX: usize = 8;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn random_mobius(rng: &mut ChaCha8Rng) -> MobiusMap {
    let src = [0.0, 2.0, 4.0].map(BoundaryPoint::new);
    let mut t: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..TAU)).collect();
    t.sort_by(f64::total_cmp);
    MobiusMap::from_three_points(src, [t[0], t[1], t[2]].map(BoundaryPoint::new)).unwrap()
}

fn random_box(rng: &mut ChaCha8Rng, gap: f64) -> GeodesicBox {
    let t = common::separated_angles(rng, 4, gap);
    GeodesicBox::from_angles([t[0], t[1], t[2], t[3]]).unwrap()
}

/// `∫∫ dθ dφ / (4 sin²((θ − φ)/2))` over `(a, b) × (c, d)` by a tensor
/// Gauss–Legendre rule on a uniform panel grid.
fn liouville_by_quadrature(a: f64, b: f64, c: f64, d: f64) -> f64 {
    const NODES: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
    const WEIGHTS: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
    const PANELS: usize = 40;
    let rule = |lo: f64, hi: f64| -> Vec<(f64, f64)> {
        let h = (hi - lo) / PANELS as f64;
        (0..PANELS)
            .flat_map(|k| {
                let mid = lo + (k as f64 + 0.5) * h;
                NODES.iter().zip(WEIGHTS).map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
            })
            .collect()
    };
    let (u, v) = (rule(a, b), rule(c, d));
    let mut total = 0.0;
    for (x, wx) in &u {
        for (y, wy) in &v {
            let s = ((x - y) / 2.0).sin();
            total += wx * wy / (4.0 * s * s);
        }
    }
    total
}

fn c1() -> Outcome {
    let q = GeodesicBox::from_angles([0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]).unwrap();
    let err = (liouville_box(&q) - LN_2).abs();
    outcome(err <= C1_TOL, format!("|L(1, i, -1, -i) - log 2| = {err:.1e}"))
}

fn c2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = random_mobius(&mut rng);
        let q = random_box(&mut rng, 1e-3);
        worst = worst.max((liouville_box(&q.map(&m)) - liouville_box(&q)).abs());
    }
    let mut worst_quad: f64 = 0.0;
    for _ in 0..50 {
        // arcs at least 0.2 apart keep the integrand smooth
        let q = random_box(&mut rng, 0.2);
        let [a, b, c, d] = q.angles();
        let (c, d) = if c < a { (c + TAU, d + TAU) } else { (c, d) };
        let d = if d < c { d + TAU } else { d };
        worst_quad = worst_quad.max((liouville_by_quadrature(a, b, c, d) - liouville_box(&q)).abs());
    }
    outcome(
        worst <= C2_INVARIANCE_TOL && worst_quad <= C2_QUADRATURE_TOL,
        format!("invariance max {worst:.1e} (1000 maps), quadrature max {worst_quad:.1e} (50 boxes)"),
    )
}

fn c3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut failures = 0;
    for _ in 0..200 {
        let lam = common::random_lamination(&mut rng, 30, 1e-3, (1e-3, 5.0));
        let h = earthquake_boundary(&lam);
        let ok = h.check_invariants(1e-9).is_ok()
            && recover_measure(&h).map(|mu| mu.same_as(&lam, C3_TOL, C3_TOL)).unwrap_or(false);
        failures += usize::from(!ok);
    }
    outcome(failures == 0, format!("{failures} of 200 laminations outside {C3_TOL:.0e} or failing invariants"))
}

fn random_base(rng: &mut ChaCha8Rng, lam: &MeasuredLamination) -> Complex64 {
    loop {
        let z = Complex64::from_polar(rng.random_range(0.0..0.9), rng.random_range(0.0..TAU));
        if lam.atoms().iter().all(|a| a.geodesic.signed_distance(z).abs() > 1e-3) {
            return z;
        }
    }
}

fn c4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let lam = common::random_lamination(&mut rng, 15, 1e-3, (1e-2, 3.0));
        let (z1, z2) = (random_base(&mut rng, &lam), random_base(&mut rng, &lam));
        let h1 = EarthquakeMap::new(lam.clone(), z1).unwrap().boundary();
        let h2 = EarthquakeMap::new(lam.clone(), z2).unwrap().boundary();
        let anchors = [0.5, 2.5, 4.5].map(BoundaryPoint::new);
        let m = MobiusMap::from_three_points(anchors.map(|p| h1.eval(p)), anchors.map(|p| h2.eval(p))).unwrap();
        for b in h1.breakpoints() {
            worst = worst.max(m.apply_boundary(h1.eval(*b)).distance(h2.eval(*b)));
        }
    }
    outcome(worst <= C4_TOL, format!("max breakpoint mismatch after one fitted Möbius map {worst:.1e} (50 laminations)"))
}

fn c5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let lam = common::random_lamination(&mut rng, 10, 1e-2, (0.1, 2.0));
        let (s, t) = (rng.random_range(0.1..1.5), rng.random_range(0.1..1.5));
        let hs = earthquake_boundary(&lam.scaled(s));
        // the lamination as seen after the first stage
        let moved = MeasuredLamination::new(
            lam.atoms()
                .iter()
                .map(|a| {
                    let (p, q) = (hs.eval(a.geodesic.p()), hs.eval(a.geodesic.q()));
                    Atom::from_angles(p.angle(), q.angle(), a.weight).unwrap()
                })
                .collect(),
        )
        .unwrap();
        let two_stage = earthquake_boundary(&moved.scaled(t)).compose(&hs).normalize();
        let direct = earthquake_boundary(&lam.scaled(s + t)).normalize();
        let pts: Vec<BoundaryPoint> = (0..100).map(|k| BoundaryPoint::new(0.013 + k as f64 * TAU / 100.0)).collect();
        worst = worst.max(direct.sup_distance(&two_stage, &pts));
    }
    outcome(worst <= C5_TOL, format!("max |E_(s+t) - E_t' o E_s| = {worst:.1e} (20 cases, 100 points)"))
}

/// `L(h_t⁻¹(Q))` for the atom `(0, π)`: in half-plane coordinates the atom
/// is the imaginary axis and `h_t⁻¹` scales the positive reals by `e^{−t}`
/// up to a Möbius map.
fn single_atom_pullback(angles: [f64; 4], t: f64) -> f64 {
    let x = angles.map(|a| {
        let x = -1.0 / (a / 2.0).tan();
        if x > 0.0 {
            x * (-t).exp()
        } else {
            x
        }
    });
    ((x[0] - x[2]) * (x[1] - x[3]) / ((x[0] - x[3]) * (x[1] - x[2]))).abs().ln()
}

fn c6() -> Outcome {
    let angles = [-1.2, 1.2, PI - 1.2, PI + 1.2];
    let q = GeodesicBox::from_angles(angles).unwrap();
    let grid = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
    let lam = MeasuredLamination::new(vec![Atom::from_angles(0.0, PI, 1.0).unwrap()]).unwrap();
    let r = thurston_ray(&lam, &grid, &[q], C6_RAY_TOL).unwrap();
    let values = r.column("box0", "scaled_pullback");
    let oracle = grid.iter().zip(&values).map(|(t, v)| (v - single_atom_pullback(angles, *t) / t).abs()).fold(0.0, f64::max);
    let last = *values.last().unwrap();
    let empty = thurston_ray(&MeasuredLamination::empty(), &grid, &[q], C6_RAY_TOL).unwrap();
    let exact = grid.iter().zip(empty.column("box0", "scaled_pullback")).all(|(t, v)| v == liouville_box(&q) / t);
    outcome(
        (last - 1.0).abs() <= C6_RAY_TOL && oracle <= C6_ORACLE_TOL && exact,
        format!("value at t = 50: {last:.6}; max oracle gap {oracle:.1e}; empty trajectory exact: {exact}"),
    )
}

fn c7() -> Outcome {
    let atom = |w: f64| MeasuredLamination::new(vec![Atom::from_angles(0.3, PI + 0.7, w).unwrap()]).unwrap();
    let seq: Vec<_> = (1..=8).map(|n| earthquake_boundary(&atom(1.0 + 0.5f64.powi(n)))).collect();
    let nus = [1.0, 0.5, 0.25];
    let r = prop32_experiment(&seq, &earthquake_boundary(&atom(1.0)), &nus, 200, 7, C7_RATIO).unwrap();
    let decays = |v: Vec<f64>| *v.last().unwrap() <= C7_RATIO * v[0];
    let d = r.column("all", "distortion");
    let mut ok = decays(d.clone());
    let mut detail = format!("distortion {:.3e} -> {:.3e}", d[0], d.last().unwrap());
    for nu in nus {
        let u = r.column(&format!("nu={nu}"), "nu_upper");
        ok &= decays(u.clone());
        detail.push_str(&format!("; upper(nu={nu}) {:.3e} -> {:.3e}", u[0], u.last().unwrap()));
    }
    outcome(ok, detail)
}

fn c8() -> Outcome {
    let gaps: Vec<f64> = (1..=10).map(|k| 0.5f64.powi(k)).collect();
    let setup = ConverseSetup { frechet_factor: C8_FACTOR, distortion_band: C8_BAND, ..ConverseSetup::default() };
    let r = converse_counterexample(1.0, &gaps, &setup).unwrap();
    let upper = r.column("all", "frechet_upper");
    let mut d = r.column("all", "distortion");
    let decrease = upper[0] / upper.last().unwrap();
    d.sort_by(f64::total_cmp);
    let median = d[d.len() / 2];
    let stable = d.iter().all(|x| (x - median).abs() <= C8_BAND * median) && median > 0.0;
    outcome(
        decrease >= C8_FACTOR && stable,
        format!("Fréchet upper bracket decrease x{decrease:.3} (need x{C8_FACTOR}); distortion median {median:.6}, within band: {stable}"),
    )
}

/// Transitive pairs of permutations of `0..n`, by brute force.
fn transitive_actions(n: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let perms: Vec<Vec<usize>> = itertools::Itertools::permutations(0..n, n).collect();
    let mut out = Vec::new();
    for a in &perms {
        for b in &perms {
            let mut seen = vec![false; n];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(x) = stack.pop() {
                for y in [a[x], b[x]] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
            if seen.iter().all(|s| *s) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// Whether `w` acts trivially in every transitive action of degree `≤ n`,
/// i.e. lies in every subgroup of index `≤ n`.
fn in_all_subgroups(word: &str, n: usize) -> bool {
    (1..=n).all(|d| {
        transitive_actions(d).iter().all(|(a, b)| {
            let inv = |p: &Vec<usize>| {
                let mut q = vec![0; p.len()];
                for (i, &j) in p.iter().enumerate() {
                    q[j] = i;
                }
                q
            };
            let (ai, bi) = (inv(a), inv(b));
            (0..d).all(|start| {
                word.chars().fold(start, |x, c| match c {
                    'a' => a[x],
                    'A' => ai[x],
                    'b' => b[x],
                    'B' => bi[x],
                    _ => unreachable!(),
                }) == start
            })
        })
    })
}

fn c9() -> Outcome {
    let chain = CoreChain::canonical(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut word = || {
        let n = rng.random_range(0..10);
        GroupWord::random(&mut rng, n)
    };
    let mut ultrametric = true;
    for _ in 0..1000 {
        let (x, y, z) = (word(), word(), word());
        let d = |u: &GroupWord, v: &GroupWord| profinite_dist(u, v, &chain).value();
        ultrametric &= d(&x, &z) <= d(&x, &y).max(d(&y, &z));
    }
    let id = GroupWord::identity();
    let level = |w: &str| (1..=3).take_while(|&n| in_all_subgroups(w, n)).count();
    let (la, lc) = (level("a"), level("abAB"));
    let da = profinite_dist(&GroupWord::a(), &id, &chain).value();
    let dc = profinite_dist(&"abAB".parse().unwrap(), &id, &chain).value();
    let dists = da == (-(la as f64)).exp() && dc == (-(lc as f64)).exp() && la == 1 && lc == 2;
    let subs = subgroups_of_index_at_most(3).unwrap();
    let counts: Vec<usize> = (1..=3).map(|n| subs.iter().filter(|s| s.degree() == n).count()).collect();
    let oracle: Vec<usize> = (1..=3usize).map(|n| transitive_actions(n).len() / (1..n).product::<usize>()).collect();
    outcome(
        ultrametric && dists && counts == oracle,
        format!("ultrametric on 1000 triples: {ultrametric}; dist(a, e) = {da:.6}, dist([a,b], e) = {dc:.6} (oracle levels {la}, {lc}); counts {counts:?} vs oracle {oracle:?}"),
    )
}

fn c10() -> Outcome {
    let cosets = Arc::new(CoreChain::canonical(2).unwrap().quotient(2).unwrap());
    let fam = tlc_lift(&[(GroupWord::a(), 1.0)], 3, cosets).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let boxes: Vec<GeodesicBox> = (0..40).map(|_| random_box(&mut rng, 1e-3)).collect();
    let mut checked = 0;
    let mut violations = 0;
    for g in ["a", "A", "b", "B"] {
        match certified_equivariance_check(&fam, &g.parse().unwrap(), &boxes, C10_TOL) {
            Ok(r) => {
                checked += r.checked;
                violations += r.violations.len();
            }
            Err(_) => violations += 1,
        }
    }
    // atom-level oracle: every certified atom, moved by the generator, is an
    // atom of the leaf at the shifted coset
    let orbit = fam.orbit().unwrap();
    let cosets = fam.cosets();
    let mut misses = 0;
    for g in ["a", "A", "b", "B"] {
        let g: GroupWord = g.parse().unwrap();
        let m = g.matrix();
        let shift = cosets.coset_of(&g.inverse());
        for t in 0..fam.len() {
            let target = fam.leaf(cosets.mul(t, shift));
            for (atom, w) in fam.leaf(t).atoms().iter().zip(&orbit.conjugators) {
                if w.len() < orbit.radius {
                    let image = atom.geodesic.map(&m);
                    misses += usize::from(!target.atoms().iter().any(|b| b.geodesic.same_as(&image, 1e-9)));
                }
            }
        }
    }
    outcome(
        violations == 0 && checked > 0 && misses == 0,
        format!("{checked} (coset, box) pairs over 4 generators, {violations} violations at {C10_TOL:.0e}; {misses} atom misses"),
    )
}

fn zeta(n: usize) -> f64 {
    (1..=n).map(|k| 1.0 / (k * k) as f64).sum()
}

fn c11() -> Outcome {
    let mut ok = true;
    let mut detail = String::new();
    for depth in [2usize, 3] {
        let chain = CoreChain::canonical(depth).unwrap();
        let masses: Vec<f64> = (1..depth).map(|i| 0.5f64.powi(i as i32)).collect();
        let ex = example43_family(&chain, &GroupWord::a(), &GroupWord::b(), &masses, depth).unwrap();
        let fam = &ex.family;
        let valid = fam.leaves().iter().all(|l| earthquake::lamination::validate(l.atoms()).is_ok());
        let cosets = fam.cosets();
        let witnesses = (1..depth).all(|i| (0..fam.len()).any(|t| cosets.dist(t, 0).level == i && fam.leaf(t) != fam.leaf(0)));
        let modulus = transverse_continuity_modulus(fam, &TransversalPoint::identity(depth), N_MAX, 200).unwrap();
        let tail = |n: usize| masses.iter().enumerate().filter(|(i, _)| i + 1 >= n).fold(0.0, |a, (_, m)| a + m);
        let bounded = modulus.iter().all(|e| e.frechet <= zeta(N_MAX) * tail(e.level) + 1e-12);
        let worst = modulus.iter().map(|e| e.frechet / (zeta(N_MAX) * tail(e.level)).max(1e-300)).fold(0.0, f64::max);
        ok &= valid && witnesses && bounded;
        detail.push_str(&format!(
            "depth {depth}: {} cosets, valid {valid}, witnesses {witnesses}, modulus/bound max {worst:.3}; ",
            fam.len()
        ));
    }
    outcome(ok, detail.trim_end_matches("; ").to_string())
}

fn c12() -> Outcome {
    let chain = CoreChain::canonical(3).unwrap();
    let masses = [0.5, 0.25];
    let ex = example43_family(&chain, &GroupWord::a(), &GroupWord::b(), &masses, 3).unwrap();
    let r = tlc_density_experiment(&ex.family, &[1, 2, 3], N_MAX, 200, 12, None).unwrap();
    let v = r.column("all", "max_frechet");
    let decreasing = v.windows(2).all(|w| w[1] < w[0]);
    let bounds: Vec<f64> = (1..=3).map(|n| 2.0 * zeta(N_MAX) * masses.iter().skip(n - 1).fold(0.0, |a, m| a + m)).collect();
    let bounded = v.iter().zip(&bounds).all(|(x, b)| *x <= b + 1e-12);
    outcome(decreasing && bounded, format!("max Fréchet by depth {v:.6?}, tail bounds {bounds:.6?}"))
}

fn c13() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut disagreements = 0;
    for _ in 0..1000 {
        let (x, y) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        // exactly one endpoint of the translate inside (lo, hi)
        let inside = |z: f64| lo < z && z < hi;
        let oracle = inside(lo + 1.0) != inside(hi + 1.0);
        let flagged = matches!(check_half_plane(x, y), CuspStatus::EntersCusp { .. });
        disagreements += usize::from(flagged != oracle);
    }
    outcome(disagreements == 0, format!("{disagreements} disagreements in 1000 geodesics"))
}

fn c14() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_earthquake");
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let dir = tempfile::tempdir().unwrap();
    let mut names: Vec<_> = std::fs::read_dir(&configs)
        .unwrap()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    let mut compared = 0;
    let mut differing = Vec::new();
    for cfg in &names {
        let stem = cfg.file_stem().unwrap().to_string_lossy().to_string();
        let outputs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
            .map(|k| {
                let out = dir.path().join(format!("{stem}-{k}"));
                Command::new(bin).args(["run", "--config"]).arg(cfg).arg("--out").arg(&out).output().unwrap();
                let mut files: Vec<_> = std::fs::read_dir(&out)
                    .map(|d| d.filter_map(|e| e.ok()).map(|e| (e.file_name().to_string_lossy().to_string(), std::fs::read(e.path()).unwrap())).collect())
                    .unwrap_or_default();
                files.sort();
                files
            })
            .collect();
        if outputs[0] != outputs[1] {
            differing.push(stem);
        }
        compared += outputs[0].len();
    }
    outcome(differing.is_empty(), format!("{} configs, {compared} output files byte-identical across reruns; differing: {differing:?}", names.len()))
}

type Criterion = (usize, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 14] = [
        (1, "Liouville reference box", c1),
        (2, "Liouville Möbius invariance and quadrature", c2),
        (3, "earthquake measure round trip", c3),
        (4, "uniqueness up to isometry", c4),
        (5, "earthquake flow property", c5),
        (6, "Thurston ray asymptotics", c6),
        (7, "distortion and ν-norm decay", c7),
        (8, "converse counterexample", c8),
        (9, "profinite metric and subgroup counts", c9),
        (10, "equivariance of the orbit lift", c10),
        (11, "Example 4.3 at finite depth", c11),
        (12, "TLC density", c12),
        (13, "cusp criterion", c13),
        (14, "CLI determinism", c14),
    ];
    let mut unexpected = Vec::new();
    for (k, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let status = if o.passed { "PASS" } else { "FAIL" };
        let note = if !o.passed && KNOWN_UNATTAINABLE.contains(&k) { " [known unattainable]" } else { "" };
        println!("criterion {k:>2} {status} {name} ({secs:.2}s): {}{note}", o.detail);
        if !o.passed && !KNOWN_UNATTAINABLE.contains(&k) {
            unexpected.push(k);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
