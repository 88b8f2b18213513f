//! Command-line runner: TOML experiment configs in, a JSON report and a CSV
//! table out.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::circle_map::PiecewiseMobiusCircleMap;
use crate::earthquake::{earthquake_boundary, recover_measure, EarthquakeMap};
use crate::error::{Error, Result};
use crate::experiments::{self, fmt17, ConvergenceReport, ConverseSetup, DEFAULT_RATIO};
use crate::hyperbolic::{BoundaryPoint, Geodesic, GeodesicBox};
use crate::lamination::{box_mass, Atom, MeasuredLamination};
use crate::liouville::{liouville_box, pullback_liouville, DEFAULT_BUDGET, DEFAULT_N_MAX};
use crate::solenoid::cusp::{check_half_plane, cusp_compactness_check, punctured_torus_cusp, translate_interleaves, CuspStatus};
use crate::solenoid::family::{certified_equivariance_check, equivariance_check};
use crate::solenoid::{example43_family, profinite_dist, subgroups_of_index_at_most, tlc_lift, CoreChain, GroupWord, LeafwiseLamination};

/// Exit status for parse, validation and runtime errors.
pub const EXIT_ERROR: i32 = 2;
/// Exit status when a configured assertion fails.
pub const EXIT_ASSERTION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "earthquake", version, about = "Earthquake, Liouville and solenoid experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an earthquake at disk and boundary points.
    Eval(RunArgs),
    /// Recover the earthquake measure of a boundary map.
    Recover(RunArgs),
    /// Liouville mass, lamination mass and earthquake pullback of boxes.
    Liouville(RunArgs),
    /// Scaled Liouville pullbacks along an earthquake ray.
    ThurstonRay(RunArgs),
    /// Weak* box masses against pointwise convergence of boundary maps.
    Prop31(RunArgs),
    /// Quasisymmetric distortion against ν-norm brackets.
    Prop32(RunArgs),
    /// Shared-endpoint sequence: Fréchet brackets against distortion.
    Converse(RunArgs),
    /// Subgroup counts, profinite metric and equivariance of an orbit lift.
    SolenoidCheck(RunArgs),
    /// Fréchet distance to transversely constant approximations.
    TlcDensity(RunArgs),
    /// Compact-support criterion at the cusp.
    CuspCheck(RunArgs),
    /// Run whichever experiment the config names.
    Run(RunArgs),
    /// Print parameters and file formats of an experiment, or list them all.
    Describe { name: Option<String> },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// A lamination given inline as `[p, q, weight]` triples or as a JSON file.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum LamSpec {
    Inline(Vec<[f64; 3]>),
    File(PathBuf),
}

#[derive(Clone, Debug, Deserialize)]
pub struct SeedSpec {
    pub word: String,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub lamination: Option<LamSpec>,
    pub limit: Option<LamSpec>,
    pub sequence: Option<Vec<LamSpec>>,
    /// Circle maps in the text format, used instead of laminations.
    pub maps: Option<Vec<PathBuf>>,
    pub limit_map: Option<PathBuf>,
    pub map: Option<PathBuf>,
    pub t_grid: Option<Vec<f64>>,
    pub depth_grid: Option<Vec<usize>>,
    pub nu_list: Option<Vec<f64>>,
    pub gaps: Option<Vec<f64>>,
    /// Box corner angles, counterclockwise.
    pub boxes: Option<Vec<[f64; 4]>>,
    pub random_boxes: Option<usize>,
    /// Boundary sample angles.
    pub points: Option<Vec<f64>>,
    /// Disk sample points as `[re, im]`.
    pub disk_points: Option<Vec<[f64; 2]>>,
    pub base: Option<[f64; 2]>,
    pub budget: Option<usize>,
    pub n_max: Option<usize>,
    pub tolerance: Option<f64>,
    pub ratio: Option<f64>,
    pub weight: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub frechet_factor: Option<f64>,
    pub distortion_band: Option<f64>,
    pub depth: Option<usize>,
    pub radius: Option<usize>,
    pub seeds: Option<Vec<SeedSpec>>,
    pub generators: Option<Vec<String>>,
    pub masses: Option<Vec<f64>>,
    pub family: Option<PathBuf>,
    pub samples: Option<usize>,
    /// Half-plane geodesics `[x, y]` for the cusp check.
    pub geodesics: Option<Vec<[f64; 2]>>,
}

struct Experiment {
    name: &'static str,
    summary: &'static str,
    keys: &'static str,
}

const EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "eval",
        summary: "evaluate the earthquake of a lamination",
        keys: "lamination; disk_points [[re, im], ...]; points (boundary angles); base [re, im] (optional)",
    },
    Experiment {
        name: "recover",
        summary: "recover the earthquake measure of a boundary map",
        keys: "map (circle-map text file) or lamination (rebuilt and recovered); tolerance (default 1e-8)",
    },
    Experiment {
        name: "liouville",
        summary: "Liouville mass, lamination mass and earthquake pullback of boxes",
        keys: "boxes [[a, b, c, d], ...]; lamination (optional)",
    },
    Experiment {
        name: "thurston-ray",
        summary: "(1/t)·pullback of the Liouville measure along an earthquake path",
        keys: "lamination; t_grid (increasing, positive); boxes; tolerance (default 0.05)",
    },
    Experiment {
        name: "prop31",
        summary: "weak* box-mass errors against pointwise boundary-map errors",
        keys: "sequence [lamination, ...]; limit; boxes; points; ratio (default 0.1)",
    },
    Experiment {
        name: "prop32",
        summary: "quasisymmetric distortion against ν-norm brackets",
        keys: "sequence and limit (laminations) or maps and limit_map; nu_list; budget; ratio",
    },
    Experiment {
        name: "converse",
        summary: "shared-endpoint sequence: Fréchet brackets against distortion",
        keys: "weight; gaps; p, q (fixed atom); budget; n_max; frechet_factor (default 10); distortion_band (default 0.2)",
    },
    Experiment {
        name: "solenoid-check",
        summary: "profinite metric, subgroup counts and equivariance of an orbit lift",
        keys: "depth; radius; seeds [{word, weight}]; generators; boxes or random_boxes; samples; tolerance (default 1e-12)",
    },
    Experiment {
        name: "tlc-density",
        summary: "Fréchet distance to transversely constant approximations",
        keys: "depth; depth_grid; masses and seeds (two entries; weights ignored) for the Example 4.3 family, or family (JSON file); n_max; budget",
    },
    Experiment {
        name: "cusp-check",
        summary: "compact-support criterion at the cusp of the punctured torus",
        keys: "geodesics [[x, y], ...] (half-plane) and/or lamination; samples (random geodesics checked against the interleaving oracle)",
    },
];

const FORMATS: &str = "\
Config: TOML, keys as listed; relative paths are resolved against the config's directory.
Lamination file: JSON array of {\"p_angle\", \"q_angle\", \"weight\"}.
Circle-map file: `breakpoints k` header, then one row per piece.
Output: <out>/<experiment>.json (metadata, rows, fits, assertions) and <out>/<experiment>.csv
(<parameter>,series,observable,value; 17 significant digits).
Exit status: 0 all assertions pass, 2 parse/validation/runtime error, 3 assertion failure.";

/// Usage text for one experiment, or the list of experiments when `name`
/// is absent or empty.
pub fn describe(name: Option<&str>) -> Result<String> {
    match name.filter(|n| !n.is_empty()) {
        None => {
            let mut out = String::from("experiments:\n");
            for e in EXPERIMENTS {
                out.push_str(&format!("  {:<15} {}\n", e.name, e.summary));
            }
            Ok(out)
        }
        Some(n) => {
            let e = EXPERIMENTS.iter().find(|e| e.name == n).ok_or_else(|| Error::Parse(format!("unknown experiment `{n}`")))?;
            Ok(format!("{}: {}\nkeys: seed (required); out; {}\n\n{}\n", e.name, e.summary, e.keys, FORMATS))
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

fn missing(key: &str) -> Error {
    Error::Parse(format!("missing key `{key}`"))
}

fn positive(key: &str, v: Option<usize>, default: usize) -> Result<usize> {
    match v {
        Some(0) => Err(Error::Parse(format!("`{key}` must be positive"))),
        Some(v) => Ok(v),
        None => Ok(default),
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
}

impl Ctx<'_> {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.dir.join(p)
        }
    }

    fn lam(&self, spec: &LamSpec) -> Result<MeasuredLamination> {
        match spec {
            LamSpec::Inline(atoms) => MeasuredLamination::new(
                atoms.iter().map(|[p, q, w]| Atom::from_angles(*p, *q, *w)).collect::<Result<Vec<_>>>()?,
            ),
            LamSpec::File(p) => MeasuredLamination::load(&self.path(p)),
        }
    }

    fn lamination(&self) -> Result<MeasuredLamination> {
        self.lam(self.cfg.lamination.as_ref().ok_or_else(|| missing("lamination"))?)
    }

    fn map(&self, p: &Path) -> Result<PiecewiseMobiusCircleMap> {
        let p = self.path(p);
        let text = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        PiecewiseMobiusCircleMap::from_text(&text)
    }

    fn boxes(&self) -> Result<Vec<GeodesicBox>> {
        let listed = self.cfg.boxes.as_ref().map(|b| b.iter().map(|a| GeodesicBox::from_angles(*a)).collect::<Result<Vec<_>>>());
        let mut out = listed.transpose()?.unwrap_or_default();
        if let Some(n) = self.cfg.random_boxes {
            out.extend(random_boxes(self.cfg.seed, n));
        }
        if out.is_empty() {
            return Err(missing("boxes"));
        }
        Ok(out)
    }

    fn points(&self) -> Result<Vec<BoundaryPoint>> {
        Ok(self.cfg.points.as_ref().ok_or_else(|| missing("points"))?.iter().map(|a| BoundaryPoint::new(*a)).collect())
    }

    fn budget(&self) -> Result<usize> {
        positive("budget", self.cfg.budget, DEFAULT_BUDGET)
    }

    fn n_max(&self) -> Result<usize> {
        positive("n_max", self.cfg.n_max, DEFAULT_N_MAX)
    }

    fn ratio(&self) -> f64 {
        self.cfg.ratio.unwrap_or(DEFAULT_RATIO)
    }
}

/// Boxes with corners drawn uniformly from the circle, sorted.
pub fn random_boxes(seed: u64, n: usize) -> Vec<GeodesicBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut t: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        t.sort_by(f64::total_cmp);
        if let Ok(q) = GeodesicBox::from_angles([t[0], t[1], t[2], t[3]]) {
            out.push(q);
        }
    }
    out
}

/// Runs experiment `name` on the config; the caller writes the report.
pub fn run_config(name: &str, cfg: &ExperimentConfig, dir: &Path) -> Result<ConvergenceReport> {
    if let Some(named) = &cfg.experiment {
        if named != name {
            return Err(Error::Parse(format!("config names experiment `{named}`, not `{name}`")));
        }
    }
    let ctx = Ctx { cfg, dir: dir.to_path_buf() };
    let mut report = match name {
        "eval" => run_eval(&ctx)?,
        "recover" => run_recover(&ctx)?,
        "liouville" => run_liouville(&ctx)?,
        "thurston-ray" => {
            let grid = cfg.t_grid.as_ref().ok_or_else(|| missing("t_grid"))?;
            experiments::thurston_ray(&ctx.lamination()?, grid, &ctx.boxes()?, cfg.tolerance.unwrap_or(0.05))?
        }
        "prop31" => {
            let seq = cfg.sequence.as_ref().ok_or_else(|| missing("sequence"))?;
            let seq = seq.iter().map(|s| ctx.lam(s)).collect::<Result<Vec<_>>>()?;
            let limit = ctx.lam(cfg.limit.as_ref().ok_or_else(|| missing("limit"))?)?;
            experiments::prop31_experiment(&seq, &limit, &ctx.boxes()?, &ctx.points()?, ctx.ratio())?
        }
        "prop32" => {
            let (seq, limit) = match (&cfg.maps, &cfg.limit_map) {
                (Some(maps), Some(limit)) => {
                    (maps.iter().map(|m| ctx.map(m)).collect::<Result<Vec<_>>>()?, ctx.map(limit)?)
                }
                _ => {
                    let seq = cfg.sequence.as_ref().ok_or_else(|| missing("sequence"))?;
                    let seq = seq.iter().map(|s| Ok(earthquake_boundary(&ctx.lam(s)?))).collect::<Result<Vec<_>>>()?;
                    let limit = ctx.lam(cfg.limit.as_ref().ok_or_else(|| missing("limit"))?)?;
                    (seq, earthquake_boundary(&limit))
                }
            };
            let nu = cfg.nu_list.as_ref().ok_or_else(|| missing("nu_list"))?;
            experiments::prop32_experiment(&seq, &limit, nu, ctx.budget()?, cfg.seed, ctx.ratio())?
        }
        "converse" => {
            let d = ConverseSetup::default();
            let setup = ConverseSetup {
                p: cfg.p.unwrap_or(d.p),
                q: cfg.q.unwrap_or(d.q),
                n_max: ctx.n_max()?,
                budget: positive("budget", cfg.budget, d.budget)?,
                seed: cfg.seed,
                frechet_factor: cfg.frechet_factor.unwrap_or(d.frechet_factor),
                distortion_band: cfg.distortion_band.unwrap_or(d.distortion_band),
            };
            let gaps = cfg.gaps.as_ref().ok_or_else(|| missing("gaps"))?;
            experiments::converse_counterexample(cfg.weight.unwrap_or(1.0), gaps, &setup)?
        }
        "solenoid-check" => run_solenoid(&ctx)?,
        "tlc-density" => run_tlc(&ctx)?,
        "cusp-check" => run_cusp(&ctx)?,
        other => return Err(Error::Parse(format!("unknown experiment `{other}`"))),
    };
    report.meta("config_seed", cfg.seed);
    Ok(report)
}

fn run_eval(ctx: &Ctx) -> Result<ConvergenceReport> {
    let lam = ctx.lamination()?;
    let eq = match ctx.cfg.base {
        Some([re, im]) => EarthquakeMap::new(lam, Complex64::new(re, im))?,
        None => EarthquakeMap::with_default_base(lam),
    };
    let disk = ctx.cfg.disk_points.clone().unwrap_or_default();
    let angles = ctx.cfg.points.clone().unwrap_or_default();
    if disk.is_empty() && angles.is_empty() {
        return Err(missing("disk_points or points"));
    }
    let mut report = ConvergenceReport::new("eval", "index", (0..disk.len() + angles.len()).map(|i| i as f64).collect());
    for (i, [re, im]) in disk.iter().enumerate() {
        let w = eq.eval_with_fault_side(Complex64::new(*re, *im))?;
        report.push(i as f64, "disk", "re", w.re);
        report.push(i as f64, "disk", "im", w.im);
    }
    let h = eq.boundary();
    for (j, a) in angles.iter().enumerate() {
        report.push((disk.len() + j) as f64, "boundary", "angle", h.eval(BoundaryPoint::new(*a)).angle());
    }
    report.finish()
}

fn run_recover(ctx: &Ctx) -> Result<ConvergenceReport> {
    let (h, original) = match (&ctx.cfg.map, &ctx.cfg.lamination) {
        (Some(m), _) => (ctx.map(m)?, None),
        (None, Some(_)) => {
            let lam = ctx.lamination()?;
            (earthquake_boundary(&lam), Some(lam))
        }
        (None, None) => return Err(missing("map or lamination")),
    };
    let mu = recover_measure(&h)?;
    let mut report = ConvergenceReport::new("recover", "atom", (0..mu.len()).map(|i| i as f64).collect());
    for (i, a) in mu.atoms().iter().enumerate() {
        report.push(i as f64, "atom", "p_angle", a.geodesic.p().angle());
        report.push(i as f64, "atom", "q_angle", a.geodesic.q().angle());
        report.push(i as f64, "atom", "weight", a.weight);
    }
    if let Some(lam) = original {
        let tol = ctx.cfg.tolerance.unwrap_or(1e-8);
        report.assert("round_trip", mu.same_as(&lam, tol, tol), format!("{} atoms in, {} out", lam.len(), mu.len()));
    }
    report.finish()
}

fn run_liouville(ctx: &Ctx) -> Result<ConvergenceReport> {
    let boxes = ctx.boxes()?;
    let lam = ctx.cfg.lamination.as_ref().map(|s| ctx.lam(s)).transpose()?;
    let h = lam.as_ref().map(earthquake_boundary);
    let mut report = ConvergenceReport::new("liouville", "box", (0..boxes.len()).map(|i| i as f64).collect());
    for (k, q) in boxes.iter().enumerate() {
        report.push(k as f64, "box", "liouville", liouville_box(q));
        if let (Some(lam), Some(h)) = (&lam, &h) {
            report.push(k as f64, "box", "box_mass", box_mass(lam, q)?);
            report.push(k as f64, "box", "pullback", pullback_liouville(h, q)?);
        }
    }
    report.finish()
}

fn seeds(ctx: &Ctx) -> Result<Vec<(GroupWord, f64)>> {
    ctx.cfg
        .seeds
        .as_ref()
        .ok_or_else(|| missing("seeds"))?
        .iter()
        .map(|s| Ok((s.word.parse()?, s.weight)))
        .collect()
}

fn run_solenoid(ctx: &Ctx) -> Result<ConvergenceReport> {
    let cfg = ctx.cfg;
    let depth = positive("depth", cfg.depth, 2)?;
    let radius = cfg.radius.unwrap_or(3);
    let tol = cfg.tolerance.unwrap_or(1e-12);
    let samples = cfg.samples.unwrap_or(1000);
    let chain = CoreChain::canonical(depth)?;
    let cosets = Arc::new(chain.quotient(depth)?);
    let fam = tlc_lift(&seeds(ctx)?, radius, cosets.clone())?;
    let boxes = ctx.boxes()?;
    let gens: Vec<GroupWord> = match &cfg.generators {
        Some(g) => g.iter().map(|w| w.parse()).collect::<Result<_>>()?,
        None => ["a", "A", "b", "B"].iter().map(|w| w.parse()).collect::<Result<_>>()?,
    };
    let mut report = ConvergenceReport::new("solenoid-check", "generator", (0..gens.len()).map(|i| i as f64).collect());
    report.meta("cosets", cosets.len());
    report.meta("atoms_per_leaf", fam.leaf(0).len());
    for (i, g) in gens.iter().enumerate() {
        let cert = certified_equivariance_check(&fam, g, &boxes, tol)?;
        let plain = equivariance_check(&fam, g, &boxes, tol)?;
        let series = g.to_string();
        report.push(i as f64, series.clone(), "certified_violations", cert.violations.len() as f64);
        report.push(i as f64, series.clone(), "plain_violations", plain.violations.len() as f64);
        report.push(i as f64, series.clone(), "truncation_misses", plain.truncation_misses.len() as f64);
        report.assert(&format!("certified_equivariance_{series}"), cert.passed(), format!("{} pairs checked", cert.checked));
    }
    let id = GroupWord::identity();
    let a = GroupWord::a();
    let c = GroupWord::commutator(&a, &GroupWord::b());
    report.meta("dist_a_id", fmt17(profinite_dist(&a, &id, &chain).value()));
    report.meta("dist_commutator_id", fmt17(profinite_dist(&c, &id, &chain).value()));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let word = |rng: &mut ChaCha8Rng| {
        let n = rng.random_range(0..10);
        GroupWord::random(rng, n)
    };
    let mut ultrametric = true;
    for _ in 0..samples {
        let (x, y, z) = (word(&mut rng), word(&mut rng), word(&mut rng));
        let (dxy, dyz, dxz) = (profinite_dist(&x, &y, &chain), profinite_dist(&y, &z, &chain), profinite_dist(&x, &z, &chain));
        ultrametric &= dxz.value() <= dxy.value().max(dyz.value());
    }
    report.assert("ultrametric", ultrametric, format!("{samples} random triples"));
    let counts: Vec<usize> = (1..=depth.min(3))
        .map(|n| subgroups_of_index_at_most(n).map(|s| s.iter().filter(|c| c.degree() == n).count()))
        .collect::<Result<_>>()?;
    report.meta("subgroup_counts", format!("{counts:?}"));
    report.finish()
}

fn run_tlc(ctx: &Ctx) -> Result<ConvergenceReport> {
    let cfg = ctx.cfg;
    let depth = positive("depth", cfg.depth, 3)?;
    let grid = cfg.depth_grid.clone().unwrap_or_else(|| (1..=depth).collect());
    let chain = CoreChain::canonical(depth)?;
    let (fam, masses) = match &cfg.family {
        Some(p) => {
            let p = ctx.path(p);
            let text = std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            (LeafwiseLamination::from_json(Arc::new(chain.quotient(depth)?), &text)?, None)
        }
        None => {
            let masses = cfg.masses.clone().unwrap_or_else(|| (1..depth).map(|i| 0.5f64.powi(i as i32)).collect());
            let words = cfg.seeds.clone().unwrap_or_default();
            let (s1, s2): (GroupWord, GroupWord) = match words.as_slice() {
                [] => (GroupWord::a(), GroupWord::b()),
                [x, y] => (x.word.parse()?, y.word.parse()?),
                _ => return Err(Error::Parse("`seeds` needs two words".into())),
            };
            let ex = example43_family(&chain, &s1, &s2, &masses, depth)?;
            (ex.family, Some(masses))
        }
    };
    experiments::tlc_density_experiment(&fam, &grid, ctx.n_max()?, positive("budget", cfg.budget, 200)?, cfg.seed, masses.as_deref())
}

fn run_cusp(ctx: &Ctx) -> Result<ConvergenceReport> {
    let cfg = ctx.cfg;
    let mut report = ConvergenceReport::new("cusp-check", "index", Vec::new());
    let mut index = 0usize;
    let mut record = |report: &mut ConvergenceReport, series: &str, x: f64, y: f64, status: CuspStatus| {
        let flag = if status == CuspStatus::Clear { 0.0 } else { 1.0 };
        report.push(index as f64, series.to_string(), "x", x);
        report.push(index as f64, series.to_string(), "y", y);
        report.push(index as f64, series.to_string(), "flagged", flag);
        report.grid.push(index as f64);
        index += 1;
    };
    for [x, y] in cfg.geodesics.clone().unwrap_or_default() {
        Geodesic::from_half_plane(x, y)?;
        record(&mut report, "geodesic", x, y, check_half_plane(x, y));
    }
    if cfg.lamination.is_some() {
        let (_, k) = punctured_torus_cusp();
        for atom in cusp_compactness_check(&ctx.lamination()?, &k).atoms {
            record(&mut report, "atom", atom.x, atom.y, atom.status);
        }
    }
    if let Some(n) = cfg.samples {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut agree = 0;
        for _ in 0..n {
            let (x, y) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let flagged = matches!(check_half_plane(x, y), CuspStatus::EntersCusp { .. });
            agree += usize::from(flagged == translate_interleaves(x, y));
        }
        report.meta("samples", n);
        report.assert("flag_matches_interleaving", agree == n, format!("{agree} of {n} agree"));
    }
    report.finish()
}

/// Outcome of one CLI invocation.
pub struct Outcome {
    pub report: ConvergenceReport,
    pub json: PathBuf,
    pub csv: PathBuf,
}

/// Loads the config, applies flag overrides, runs, and writes
/// `<out>/<name>.json` and `<out>/<name>.csv`.
pub fn run(name: &str, args: &RunArgs) -> Result<Outcome> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let dir = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let name = if name == "run" {
        cfg.experiment.clone().ok_or_else(|| missing("experiment"))?
    } else {
        name.to_string()
    };
    let report = match args.jobs {
        Some(0) => return Err(Error::Parse("`--jobs` must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Io(e.to_string()))?
            .install(|| run_config(&name, &cfg, &dir))?,
        None => run_config(&name, &cfg, &dir)?,
    };
    let out = args.out.clone().or_else(|| cfg.out.as_ref().map(|o| dir.join(o))).unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
    let json = out.join(format!("{name}.json"));
    let csv = out.join(format!("{name}.csv"));
    std::fs::write(&json, report.to_json()).map_err(|e| Error::Io(format!("{}: {e}", json.display())))?;
    std::fs::write(&csv, report.to_csv()).map_err(|e| Error::Io(format!("{}: {e}", csv.display())))?;
    Ok(Outcome { report, json, csv })
}

/// Parses arguments, dispatches and returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    let (name, args) = match &cli.command {
        Command::Describe { name } => {
            return match describe(name.as_deref()) {
                Ok(text) => {
                    print!("{text}");
                    0
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_ERROR
                }
            };
        }
        Command::Eval(a) => ("eval", a),
        Command::Recover(a) => ("recover", a),
        Command::Liouville(a) => ("liouville", a),
        Command::ThurstonRay(a) => ("thurston-ray", a),
        Command::Prop31(a) => ("prop31", a),
        Command::Prop32(a) => ("prop32", a),
        Command::Converse(a) => ("converse", a),
        Command::SolenoidCheck(a) => ("solenoid-check", a),
        Command::TlcDensity(a) => ("tlc-density", a),
        Command::CuspCheck(a) => ("cusp-check", a),
        Command::Run(a) => ("run", a),
    };
    match run(name, args) {
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
        Ok(outcome) => {
            for a in &outcome.report.assertions {
                let line = format!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
                if a.passed {
                    println!("{line}");
                } else {
                    eprintln!("{line}");
                }
            }
            println!("wrote {} and {}", outcome.json.display(), outcome.csv.display());
            if outcome.report.passed() {
                0
            } else {
                EXIT_ASSERTION
            }
        }
    }
}
