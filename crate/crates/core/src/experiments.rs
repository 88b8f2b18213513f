//! Numerical convergence experiments: Thurston rays, weak* against pointwise
//! convergence, quasisymmetric against Fréchet convergence and its failed
//! converse, and density of transversely constant families.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::circle_map::PiecewiseMobiusCircleMap;
use crate::earthquake::{default_base, earthquake_boundary, earthquake_path, recover_measure};
use crate::error::{Error, Result};
use crate::hyperbolic::{BoundaryPoint, GeodesicBox, MobiusMap, EXACT_TOL};
use crate::lamination::{box_mass, Atom, MeasuredLamination};
use crate::liouville::{frechet_estimate, nu_norm_report, pullback_liouville, qs_distortion, BoxFamily};
use crate::solenoid::family::{leaf_distances, LeafwiseLamination};

/// Default pass ratio for convergence assertions: final ≤ ratio × initial.
pub const DEFAULT_RATIO: f64 = 0.1;
/// Values at or below this are treated as converged.
pub const FLOOR: f64 = 1e-9;

/// One cell of the flat table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub param: f64,
    pub series: String,
    pub observable: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// First and last values of one `(series, observable)` column with a
/// least-squares slope of `ln value` against `ln param`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub series: String,
    pub observable: String,
    pub first: f64,
    pub last: f64,
    pub log_log_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub parameter: String,
    pub grid: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
    pub rows: Vec<Row>,
    pub fits: Vec<DecayFit>,
    pub assertions: Vec<Assertion>,
}

/// Seventeen significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

impl ConvergenceReport {
    pub fn new(experiment: &str, parameter: &str, grid: Vec<f64>) -> Self {
        ConvergenceReport {
            experiment: experiment.into(),
            parameter: parameter.into(),
            grid,
            metadata: BTreeMap::new(),
            rows: Vec::new(),
            fits: Vec::new(),
            assertions: Vec::new(),
        }
    }

    pub fn push(&mut self, param: f64, series: impl Into<String>, observable: &str, value: f64) {
        self.rows.push(Row { param, series: series.into(), observable: observable.into(), value });
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn assert(&mut self, name: &str, passed: bool, detail: String) {
        self.assertions.push(Assertion { name: name.into(), passed, detail });
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }

    /// Values of one column in grid order.
    pub fn column(&self, series: &str, observable: &str) -> Vec<f64> {
        self.rows.iter().filter(|r| r.series == series && r.observable == observable).map(|r| r.value).collect()
    }

    pub fn finish(mut self) -> Result<Self> {
        if let Some(r) = self.rows.iter().find(|r| !r.value.is_finite()) {
            return Err(Error::NonConvergence { iterations: 0, residual: r.value });
        }
        let mut keys: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let k = (r.series.clone(), r.observable.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        self.fits = keys
            .into_iter()
            .map(|(series, observable)| {
                let pts: Vec<(f64, f64)> = self
                    .rows
                    .iter()
                    .filter(|r| r.series == series && r.observable == observable)
                    .map(|r| (r.param, r.value))
                    .collect();
                DecayFit {
                    first: pts.first().map_or(0.0, |p| p.1),
                    last: pts.last().map_or(0.0, |p| p.1),
                    log_log_slope: log_log_slope(&pts),
                    series,
                    observable,
                }
            })
            .collect();
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        // floats as 17-digit strings keep the record byte-stable
        round_trip_floats(&mut v);
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},series,observable,value\n", self.parameter);
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", fmt17(r.param), r.series, r.observable, fmt17(r.value));
        }
        out
    }
}

fn round_trip_floats(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            *v = serde_json::Value::String(fmt17(n.as_f64().unwrap_or(f64::NAN)));
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_trip_floats),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_trip_floats),
        _ => {}
    }
}

fn log_log_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 || pts.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = pts.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("grid is empty".into()));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGrid("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Converged at the floor, or last ≤ ratio × first.
pub fn has_decayed(values: &[f64], ratio: f64) -> bool {
    match (values.first(), values.last()) {
        (Some(&first), Some(&last)) => last <= FLOOR || last <= ratio * first,
        _ => true,
    }
}

fn box_label(k: usize) -> String {
    format!("box{k}")
}

/// `(1/t)·L(h_t⁻¹(Q))` along the earthquake path `h_t` of `lam`, for every
/// box, with the final value compared against `box_mass(lam, Q)` at relative
/// tolerance `tol`.
pub fn thurston_ray(lam: &MeasuredLamination, t_grid: &[f64], boxes: &[GeodesicBox], tol: f64) -> Result<ConvergenceReport> {
    check_grid(t_grid)?;
    if t_grid[0] <= 0.0 {
        return Err(Error::InvalidGrid("times must be positive".into()));
    }
    let ends: Vec<BoundaryPoint> = lam.atoms().iter().flat_map(|a| [a.geodesic.p(), a.geodesic.q()]).collect();
    for (box_index, q) in boxes.iter().enumerate() {
        for e in &ends {
            if let Some(corner) = q.corner_near(*e, EXACT_TOL) {
                return Err(Error::BoxOnEndpoint { box_index, corner });
            }
        }
    }
    let base = default_base(lam);
    let values: Vec<Vec<f64>> = t_grid
        .par_iter()
        .map(|&t| {
            let h = earthquake_path(lam, t, base)?;
            boxes.iter().map(|q| Ok(pullback_liouville(&h, q)? / t)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut report = ConvergenceReport::new("thurston-ray", "t", t_grid.to_vec());
    report.meta("atoms", lam.len());
    report.meta("tolerance", fmt17(tol));
    for (t, vals) in t_grid.iter().zip(&values) {
        for (k, v) in vals.iter().enumerate() {
            report.push(*t, box_label(k), "scaled_pullback", *v);
        }
    }
    let last = values.last().expect("grid is nonempty");
    for (k, q) in boxes.iter().enumerate() {
        let mass = box_mass(lam, q)?;
        report.push(*t_grid.last().expect("nonempty"), box_label(k), "box_mass", mass);
        let err = (last[k] - mass).abs();
        report.assert(
            &format!("{}_limit", box_label(k)),
            err <= tol * mass.max(1.0),
            format!("final {} vs mass {}", fmt17(last[k]), fmt17(mass)),
        );
    }
    report.finish()
}

/// Direction of an error sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Converged,
    Improving,
    Stalled,
}

pub fn trend(values: &[f64], ratio: f64) -> Trend {
    if values.iter().all(|v| *v <= FLOOR) {
        Trend::Converged
    } else if has_decayed(values, ratio) {
        Trend::Improving
    } else {
        Trend::Stalled
    }
}

/// Weak* errors `|μ_n(Q) − μ(Q)|` and pointwise errors of the normalized
/// boundary maps at the sample points, along a sequence `μ_n → μ`. Asserts
/// that both indicators move in the same direction.
pub fn prop31_experiment(
    seq: &[MeasuredLamination],
    limit: &MeasuredLamination,
    boxes: &[GeodesicBox],
    points: &[BoundaryPoint],
    ratio: f64,
) -> Result<ConvergenceReport> {
    if seq.is_empty() {
        return Err(Error::InvalidGrid("sequence is empty".into()));
    }
    let grid: Vec<f64> = (1..=seq.len()).map(|n| n as f64).collect();
    let h = earthquake_boundary(limit).normalize();
    let limit_masses = boxes.iter().map(|q| box_mass(limit, q)).collect::<Result<Vec<_>>>()?;
    let rows: Vec<(Vec<f64>, f64)> = seq
        .par_iter()
        .map(|lam| {
            let masses = boxes
                .iter()
                .zip(&limit_masses)
                .map(|(q, m)| Ok((box_mass(lam, q)? - m).abs()))
                .collect::<Result<Vec<_>>>()?;
            let hn = earthquake_boundary(lam).normalize();
            Ok((masses, hn.sup_distance(&h, points)))
        })
        .collect::<Result<_>>()?;
    let mut report = ConvergenceReport::new("prop31", "n", grid.clone());
    report.meta("boxes", boxes.len());
    report.meta("points", points.len());
    let mut weak = Vec::new();
    let mut pointwise = Vec::new();
    for (n, (masses, sup)) in grid.iter().zip(&rows) {
        for (k, e) in masses.iter().enumerate() {
            report.push(*n, box_label(k), "mass_error", *e);
        }
        report.push(*n, "points", "map_error", *sup);
        weak.push(masses.iter().copied().fold(0.0, f64::max));
        pointwise.push(*sup);
    }
    let (tw, tp) = (trend(&weak, ratio), trend(&pointwise, ratio));
    let agree = (tw == Trend::Stalled) == (tp == Trend::Stalled);
    report.assert("indicators_agree", agree, format!("weak* {tw:?}, pointwise {tp:?}"));
    report.finish()
}

/// Quasisymmetric distortion of `h_n ∘ h⁻¹` against ν-norm brackets of the
/// recovered measures. When the distortion decays, the upper and the lower
/// brackets must decay for every ν.
pub fn prop32_experiment(
    seq: &[PiecewiseMobiusCircleMap],
    limit: &PiecewiseMobiusCircleMap,
    nu_list: &[f64],
    budget: usize,
    seed: u64,
    ratio: f64,
) -> Result<ConvergenceReport> {
    if seq.is_empty() || nu_list.is_empty() {
        return Err(Error::InvalidGrid("sequence and ν list must be nonempty".into()));
    }
    let grid: Vec<f64> = (1..=seq.len()).map(|n| n as f64).collect();
    let mu = recover_measure(limit)?;
    let mut family = BoxFamily::standard();
    family.extend(BoxFamily::adapted(&[&mu]));
    let inv = limit.inverse();
    let rows: Vec<(f64, Vec<(f64, f64)>)> = seq
        .par_iter()
        .map(|hn| {
            let distortion = qs_distortion(&hn.compose(&inv), &family)?;
            let mun = recover_measure(hn)?;
            let brackets = nu_list
                .iter()
                .map(|&nu| {
                    let r = nu_norm_report(&mun, &mu, nu, budget, seed);
                    (r.lower, r.upper)
                })
                .collect();
            Ok((distortion, brackets))
        })
        .collect::<Result<_>>()?;
    let mut report = ConvergenceReport::new("prop32", "n", grid.clone());
    report.meta("budget", budget);
    report.meta("seed", seed);
    report.meta("boxes", family.len());
    for (n, (d, brackets)) in grid.iter().zip(&rows) {
        report.push(*n, "all", "distortion", *d);
        for (nu, (lo, up)) in nu_list.iter().zip(brackets) {
            report.push(*n, format!("nu={nu}"), "nu_lower", *lo);
            report.push(*n, format!("nu={nu}"), "nu_upper", *up);
        }
    }
    let distortion = report.column("all", "distortion");
    let decays = has_decayed(&distortion, ratio);
    report.assert("distortion_decays", decays, format!("first {} last {}", fmt17(distortion[0]), fmt17(*distortion.last().expect("nonempty"))));
    for nu in nu_list {
        let s = format!("nu={nu}");
        for obs in ["nu_upper", "nu_lower"] {
            let col = report.column(&s, obs);
            let ok = !decays || has_decayed(&col, ratio);
            report.assert(&format!("{obs}_follows_{s}"), ok, format!("first {} last {}", fmt17(col[0]), fmt17(*col.last().expect("nonempty"))));
        }
    }
    report.finish()
}

/// Parameters of the shared-endpoint sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct ConverseSetup {
    /// Fixed atom `(p, q)`; the sequence uses `(p, q − gap)`.
    pub p: f64,
    pub q: f64,
    pub n_max: usize,
    pub budget: usize,
    pub seed: u64,
    /// Required decrease of the Fréchet upper bracket, first / last.
    pub frechet_factor: f64,
    /// Allowed relative spread of the distortion around its median.
    pub distortion_band: f64,
}

impl Default for ConverseSetup {
    fn default() -> Self {
        ConverseSetup {
            p: 0.3,
            q: std::f64::consts::PI + 0.7,
            n_max: crate::liouville::DEFAULT_N_MAX,
            budget: 200,
            seed: crate::liouville::DEFAULT_SEED,
            frechet_factor: 10.0,
            distortion_band: 0.2,
        }
    }
}

/// A fixed atom of weight `w` against atoms sharing one endpoint with it,
/// the other endpoint approaching along the gaps. Records Fréchet brackets
/// and the distortion of the boundary-map difference; asserts that the
/// Fréchet upper bracket falls by the configured factor while the
/// distortion stays near its measured median.
pub fn converse_counterexample(w: f64, gaps: &[f64], setup: &ConverseSetup) -> Result<ConvergenceReport> {
    if !(w > 0.0) {
        return Err(Error::InvalidLamination(crate::lamination::Violation::NonPositiveWeight { index: 0, weight: w }));
    }
    if gaps.is_empty() || gaps.iter().any(|g| !(*g >= 0.0)) {
        return Err(Error::InvalidGrid("gaps must be nonempty and nonnegative".into()));
    }
    let grid: Vec<f64> = (1..=gaps.len()).map(|n| n as f64).collect();
    let fixed = MeasuredLamination::new(vec![Atom::from_angles(setup.p, setup.q, w)?])?;
    let h = earthquake_boundary(&fixed).normalize();
    let inv = h.inverse();
    // Boxes attached to the first configuration and carried along with it; a
    // fixed finite family cannot resolve the shrinking gap.
    let reference_gap = gaps.iter().copied().find(|g| *g > 0.0);
    let mut reference = BoxFamily::standard();
    if let Some(g0) = reference_gap {
        let first = MeasuredLamination::new(vec![Atom::from_angles(setup.p, setup.q - g0, w)?])?;
        reference.extend(BoxFamily::adapted(&[&fixed, &first]));
    }
    let rows: Vec<(f64, f64, f64, f64)> = gaps
        .par_iter()
        .map(|&gap| {
            let moving = MeasuredLamination::new(vec![Atom::from_angles(setup.p, setup.q - gap, w)?])?;
            let f = frechet_estimate(&moving, &fixed, setup.n_max, setup.budget, setup.seed);
            let hn = earthquake_boundary(&moving).normalize();
            let mut family = BoxFamily::standard();
            family.extend(BoxFamily::adapted(&[&fixed, &moving]));
            if let (Some(g0), true) = (reference_gap, gap > 0.0) {
                // `h ∘ M ∘ h⁻¹` with `M` fixing `p, q` and moving the third
                // endpoint; it is Möbius because `M` commutes with the
                // earthquake along `(p, q)` up to post-composition
                let pts = |g: f64| [setup.p, setup.q, setup.q - g].map(|x| h.eval(BoundaryPoint::new(x)));
                let m = MobiusMap::from_three_points(pts(g0), pts(gap))?;
                family.extend(BoxFamily::new(reference.boxes().iter().map(|q| q.map(&m)).collect())?);
            }
            let d = qs_distortion(&hn.compose(&inv), &family)?;
            Ok((f.lower, f.upper, f.value, d))
        })
        .collect::<Result<_>>()?;
    let mut report = ConvergenceReport::new("converse", "n", grid.clone());
    report.meta("weight", fmt17(w));
    report.meta("budget", setup.budget);
    report.meta("seed", setup.seed);
    report.meta("n_max", setup.n_max);
    for ((n, gap), (lo, up, mid, d)) in grid.iter().zip(gaps).zip(&rows) {
        report.push(*n, "all", "gap", *gap);
        report.push(*n, "all", "frechet_lower", *lo);
        report.push(*n, "all", "frechet_upper", *up);
        report.push(*n, "all", "frechet", *mid);
        report.push(*n, "all", "distortion", *d);
    }
    let upper = report.column("all", "frechet_upper");
    let (first, last) = (upper[0], *upper.last().expect("nonempty"));
    report.assert(
        "frechet_upper_decreases",
        last <= FLOOR || last * setup.frechet_factor <= first,
        format!("first {} last {}", fmt17(first), fmt17(last)),
    );
    let distortion = report.column("all", "distortion");
    let mut sorted = distortion.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let floor = sorted[0];
    report.meta("distortion_floor", fmt17(floor));
    report.meta("distortion_median", fmt17(median));
    let stable = median > FLOOR && distortion.iter().all(|d| (d - median).abs() <= setup.distortion_band * median);
    report.assert("distortion_floor_stable", stable, format!("floor {} median {}", fmt17(floor), fmt17(median)));
    report.finish()
}

/// `Σ_{k ≤ n_max} k⁻²`.
pub fn zeta2_partial(n_max: usize) -> f64 {
    (1..=n_max).map(|k| 1.0 / (k * k) as f64).sum()
}

/// Maximal Fréchet distance between `fam` and its transversely constant
/// approximation at each depth of the grid; asserts it does not increase.
/// With level masses, also records and asserts the bound
/// `2·ζ_N(2)·Σ_{n ≤ i < depth} m_i` for a family with at most one atom per
/// leaf, placed at the leaf's level.
pub fn tlc_density_experiment(
    fam: &LeafwiseLamination,
    depth_grid: &[usize],
    n_max: usize,
    budget: usize,
    seed: u64,
    masses: Option<&[f64]>,
) -> Result<ConvergenceReport> {
    let grid: Vec<f64> = depth_grid.iter().map(|&n| n as f64).collect();
    check_grid(&grid)?;
    if depth_grid[0] == 0 || *depth_grid.last().expect("nonempty") > fam.depth() {
        return Err(Error::DepthMismatch { expected: fam.depth(), found: *depth_grid.last().expect("nonempty") });
    }
    let mut report = ConvergenceReport::new("tlc-density", "depth", grid);
    report.meta("cosets", fam.len());
    report.meta("budget", budget);
    report.meta("n_max", n_max);
    report.meta("seed", seed);
    let mut maxima = Vec::new();
    for &n in depth_grid {
        let approx = fam.tlc_approximation(n);
        let pairs: Vec<_> = (0..fam.len()).map(|t| (approx.leaf(t), fam.leaf(t))).collect();
        let worst = leaf_distances(&pairs, n_max, budget, seed).into_iter().fold(0.0, f64::max);
        report.push(n as f64, "all", "max_frechet", worst);
        maxima.push(worst);
        if let Some(m) = masses {
            let tail = m.iter().enumerate().filter(|(i, _)| i + 1 >= n && i + 1 < fam.depth()).fold(0.0, |acc, (_, x)| acc + x);
            let bound = 2.0 * zeta2_partial(n_max) * tail;
            report.push(n as f64, "all", "tail_bound", bound);
            report.assert(&format!("bounded_at_depth_{n}"), worst <= bound + FLOOR, format!("{} ≤ {}", fmt17(worst), fmt17(bound)));
        }
    }
    let monotone = maxima.windows(2).all(|w| w[1] <= w[0] + FLOOR);
    report.assert("non_increasing", monotone, format!("{maxima:?}"));
    report.finish()
}
