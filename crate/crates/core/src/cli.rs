//! Command-line pipelines: level sweeps over the benchmark problems written
//! as CSV tables.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{classify_mesh, eoc, interp_sup_norm, midpoint_error_sq, ClassifierThresholds, CutCase, CutElement};
use crate::benchmarks::{data_g, exact_primal, BenchmarkSpec, Example};
use crate::error::{Error, Result};
use crate::fespace::{CrFunction, P0Function};
use crate::flow::{flow_run, FlowConfig, FlowTrace};
use crate::geom::Vec2;
use crate::mesh::Mesh;
use crate::quadrature::JumpLine;
use crate::rof::{dual_reconstruction, RofProblem};

pub const SOLVE_HEADER: &str = "k,N,h,err_sq,eoc,energy,steps,gap";
pub const INTERP_HEADER: &str = "k,N,h,sup_norm,excess_over_h";
pub const DUAL_HEADER: &str = "k,N,h,gap,max_pihz,conformity_defect";
pub const CLASSIFY_HEADER: &str = "k,N,h,uncut,resolved,nearly_parallel,nearly_uncut,small_jump,nearly_right_angled,uncertified";
/// First field of the row appended when a level fails.
pub const FAILED_MARKER: &str = "FAILED";
pub const MAX_LEVEL: usize = 10;

#[derive(Parser, Debug)]
#[command(name = "rof-cr", version, about = "CR/RT0 discretization of the ROF model: benchmark sweeps as CSV")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve on each level and tabulate error, energy and duality gap.
    Solve(ProblemArgs),
    /// Recompute the EOC column of a solve table.
    Rates {
        /// Solve CSV to read.
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sup-norm of the projected RT0 interpolant of the exact dual.
    InterpCheck(ProblemArgs),
    /// Duality gap and admissibility of the reconstructed discrete dual.
    DualCheck(ProblemArgs),
    /// Per-level counts of the cut-element classes.
    Classify(ProblemArgs),
    /// Closed-form cut-element interpolant against split quadrature on
    /// random configurations.
    CutCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExampleArg {
    TwoDisk,
    FourDisk,
}

impl From<ExampleArg> for Example {
    fn from(e: ExampleArg) -> Self {
        match e {
            ExampleArg::TwoDisk => Example::TwoDisk,
            ExampleArg::FourDisk => Example::FourDisk,
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "two-disk")]
    pub example: ExampleArg,
    /// Rotation angle in radians; accepts multiples of pi such as `7pi/18`.
    #[arg(long, default_value = "0", value_parser = parse_angle, allow_hyphen_values = true)]
    pub phi: f64,
    #[arg(long, default_value = "0,0", value_parser = parse_shift, allow_hyphen_values = true)]
    pub shift: Vec2,
    #[arg(long, default_value_t = 10.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.4)]
    pub r: f64,
    #[arg(long, default_value = "3..6", value_parser = parse_levels)]
    pub levels: RangeInclusive<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Stopping tolerance as a multiple of h.
    #[arg(long, default_value_t = 0.05)]
    pub stop_factor: f64,
    /// Gradient-flow step cap per level.
    #[arg(long, default_value_t = 10_000)]
    pub max_steps: usize,
    /// Classifier constant `C` in the tests `quantity <= C h`.
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Validated settings of a level sweep.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub spec: BenchmarkSpec,
    pub levels: RangeInclusive<usize>,
    pub tau: f64,
    pub stop_factor: f64,
    pub max_steps: usize,
    pub thresholds: ClassifierThresholds,
}

impl RunConfig {
    pub fn new(spec: BenchmarkSpec, levels: RangeInclusive<usize>) -> Result<Self> {
        let cfg = RunConfig { spec, levels, tau: 1.0, stop_factor: 1.0 / 20.0, max_steps: 10_000, thresholds: ClassifierThresholds::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.levels.is_empty() || *self.levels.end() > MAX_LEVEL {
            return Err(Error::InvalidParameter(format!(
                "levels {}..{} must be a non-empty range within 0..{MAX_LEVEL}",
                self.levels.start(),
                self.levels.end()
            )));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) || !(self.stop_factor > 0.0 && self.stop_factor.is_finite()) {
            return Err(Error::InvalidParameter("tau and stop factor must be positive".into()));
        }
        if !(self.thresholds.constant >= 0.0) {
            return Err(Error::InvalidParameter("classifier threshold must be non-negative".into()));
        }
        Ok(())
    }
}

impl TryFrom<&ProblemArgs> for RunConfig {
    type Error = Error;

    fn try_from(a: &ProblemArgs) -> Result<Self> {
        let spec = BenchmarkSpec::new(a.example.into(), a.r, a.alpha, a.phi, a.shift)?;
        let cfg = RunConfig {
            spec,
            levels: a.levels.clone(),
            tau: a.tau,
            stop_factor: a.stop_factor,
            max_steps: a.max_steps,
            thresholds: ClassifierThresholds { constant: a.threshold },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses radians, optionally as a multiple of pi: `0.3`, `pi`, `-pi/4`,
/// `7pi/18`, `7*pi/18`.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let bad = || format!("invalid angle `{s}`");
    let Some(i) = t.find("pi") else {
        return t.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    };
    let coef = t[..i].trim_end_matches('*');
    let coef = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = &t[i + 2..];
    let denom = match rest.strip_prefix('/') {
        None if rest.is_empty() => 1.0,
        None => return Err(bad()),
        Some(d) => d.parse::<f64>().ok().filter(|d| *d != 0.0).ok_or_else(bad)?,
    };
    Ok(coef * PI / denom)
}

/// Parses `x,y`.
pub fn parse_shift(s: &str) -> std::result::Result<Vec2, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => Ok(Vec2::new(x, y)),
            _ => Err(format!("invalid shift `{s}`")),
        },
        _ => Err(format!("shift must be `x,y`, got `{s}`")),
    }
}

/// Parses `a..b` (inclusive) or a single level.
pub fn parse_levels(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let bad = || format!("invalid level range `{s}`");
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse::<usize>().map_err(|_| bad())?, b.trim_start_matches('=').trim().parse::<usize>().map_err(|_| bad())?),
        None => {
            let k = s.trim().parse::<usize>().map_err(|_| bad())?;
            (k, k)
        }
    };
    if a > b || b > MAX_LEVEL {
        return Err(format!("level range `{s}` must satisfy a <= b <= {MAX_LEVEL}"));
    }
    Ok(a..=b)
}

/// Floats as 17 significant digits; NaN prints as `nan`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveRow {
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub err_sq: f64,
    pub eoc: Option<f64>,
    pub energy: f64,
    pub steps: usize,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpRow {
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub sup_norm: f64,
    pub excess_over_h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualRow {
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub gap: f64,
    pub max_pihz: f64,
    pub conformity_defect: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyRow {
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub counts: BTreeMap<CutCaseKey, usize>,
}

/// Column order of [`CLASSIFY_HEADER`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CutCaseKey {
    Uncut,
    Resolved,
    NearlyParallel,
    NearlyUncut,
    SmallJump,
    NearlyRightAngled,
    Uncertified,
}

impl From<CutCase> for CutCaseKey {
    fn from(c: CutCase) -> Self {
        match c {
            CutCase::Uncut => CutCaseKey::Uncut,
            CutCase::Resolved => CutCaseKey::Resolved,
            CutCase::NearlyParallel => CutCaseKey::NearlyParallel,
            CutCase::NearlyUncut => CutCaseKey::NearlyUncut,
            CutCase::SmallJump => CutCaseKey::SmallJump,
            CutCase::NearlyRightAngled => CutCaseKey::NearlyRightAngled,
            CutCase::Uncertified => CutCaseKey::Uncertified,
        }
    }
}

const ALL_KEYS: [CutCaseKey; 7] = [
    CutCaseKey::Uncut,
    CutCaseKey::Resolved,
    CutCaseKey::NearlyParallel,
    CutCaseKey::NearlyUncut,
    CutCaseKey::SmallJump,
    CutCaseKey::NearlyRightAngled,
    CutCaseKey::Uncertified,
];

/// Rows completed before a failure, and the failure.
#[derive(Debug)]
pub struct Partial<R> {
    pub rows: Vec<R>,
    pub error: Error,
    pub level: usize,
}

pub type Sweep<R> = std::result::Result<Vec<R>, Partial<R>>;

fn sweep<R>(levels: RangeInclusive<usize>, mut level: impl FnMut(usize) -> Result<R>) -> Sweep<R> {
    let mut rows = Vec::new();
    for k in levels {
        match level(k) {
            Ok(r) => rows.push(r),
            Err(error) => return Err(Partial { rows, error, level: k }),
        }
    }
    Ok(rows)
}

/// One solved level of a benchmark.
pub struct SolvedLevel {
    pub mesh: Mesh,
    pub g: P0Function,
    pub u: CrFunction,
    pub trace: FlowTrace,
}

impl SolvedLevel {
    pub fn problem(&self, spec: &BenchmarkSpec) -> Result<RofProblem<'_>> {
        RofProblem::new(&self.mesh, spec.alpha, self.g.clone(), self.mesh.h_max())
    }
}

/// Gradient flow from zero on the `k`-times refined square with `eps = h`
/// and data sampled at barycenters.
pub fn solve_level(cfg: &RunConfig, k: usize) -> Result<SolvedLevel> {
    let mesh = Mesh::square(k);
    let g = P0Function::sample_barycenters(&mesh, |x| data_g(&cfg.spec, x));
    let (u, trace) = {
        let p = RofProblem::new(&mesh, cfg.spec.alpha, g.clone(), mesh.h_max())?;
        let mut flow = FlowConfig::with_stop_factor(&mesh, cfg.stop_factor);
        flow.tau = cfg.tau;
        flow.max_steps = cfg.max_steps;
        flow_run(&p, &CrFunction::zero(&mesh), &flow)?
    };
    Ok(SolvedLevel { mesh, g, u, trace })
}

pub fn cmd_solve(cfg: &RunConfig) -> Sweep<SolveRow> {
    let mut out = sweep(cfg.levels.clone(), |k| {
        let level = solve_level(cfg, k)?;
        let p = level.problem(&cfg.spec)?;
        let gap = dual_reconstruction(&p, &level.u)?.gap(&p, &level.u);
        let m = &level.mesh;
        Ok(SolveRow {
            k,
            n: m.num_vertices(),
            h: m.h_max(),
            err_sq: midpoint_error_sq(m, |x| exact_primal(&cfg.spec, x), &level.u),
            eoc: None,
            energy: level.trace.final_energy(),
            steps: level.trace.steps.len(),
            gap,
        })
    });
    match &mut out {
        Ok(rows) => fill_eoc(rows),
        Err(partial) => fill_eoc(&mut partial.rows),
    }
    out
}

/// Sets the EOC column from consecutive rows.
pub fn fill_eoc(rows: &mut [SolveRow]) {
    let e: Vec<f64> = rows.iter().map(|r| r.err_sq).collect();
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    for (r, v) in rows.iter_mut().zip(eoc(&e, &h)) {
        r.eoc = v;
    }
}

pub fn cmd_interp_check(cfg: &RunConfig) -> Sweep<InterpRow> {
    sweep(cfg.levels.clone(), |k| {
        let m = Mesh::square(k);
        let c = interp_sup_norm(&m, &cfg.spec);
        Ok(InterpRow { k, n: m.num_vertices(), h: m.h_max(), sup_norm: c.sup_norm, excess_over_h: c.kappa() / m.h_max() })
    })
}

pub fn cmd_dual_check(cfg: &RunConfig) -> Sweep<DualRow> {
    sweep(cfg.levels.clone(), |k| {
        let level = solve_level(cfg, k)?;
        let p = level.problem(&cfg.spec)?;
        let d = dual_reconstruction(&p, &level.u)?;
        let m = &level.mesh;
        Ok(DualRow {
            k,
            n: m.num_vertices(),
            h: m.h_max(),
            gap: d.gap(&p, &level.u),
            max_pihz: d.max_local_modulus(),
            conformity_defect: d.conformity_defect,
        })
    })
}

pub fn cmd_classify(cfg: &RunConfig) -> Sweep<ClassifyRow> {
    sweep(cfg.levels.clone(), |k| {
        let m = Mesh::square(k);
        let mut counts: BTreeMap<CutCaseKey, usize> = ALL_KEYS.iter().map(|&c| (c, 0)).collect();
        for c in classify_mesh(&m, &cfg.spec, cfg.thresholds)? {
            *counts.entry(c.into()).or_default() += 1;
        }
        Ok(ClassifyRow { k, n: m.num_vertices(), h: m.h_max(), counts })
    })
}

/// Random admissible cut configuration: a triangle with area at least
/// `min_area` in `[-1, 1]^2`, a line through its interior and two values with
/// equal normal component.
pub fn random_cut<R: Rng>(rng: &mut R, min_area: f64) -> CutElement {
    loop {
        let corners = [0, 1, 2].map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        if crate::geom::signed_area(corners[0], corners[1], corners[2]) < min_area {
            continue;
        }
        let w = [0, 1, 2].map(|_| rng.gen_range(0.05..1.0));
        let s: f64 = w.iter().sum();
        let base = (corners[0] * w[0] + corners[1] * w[1] + corners[2] * w[2]) / s;
        let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let line = JumpLine::new(base, Vec2::new(a.cos(), a.sin())).expect("unit tangent");
        let z_minus = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let z_plus = z_minus + line.tangent() * rng.gen_range(-1.5..1.5);
        return CutElement { corners, line, z_plus, z_minus };
    }
}

/// Largest deviation of the closed formula (over all admissible side
/// choices) from the quadrature interpolant on `samples` random cuts.
pub fn cut_check(seed: u64, samples: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let cut = random_cut(&mut rng, 0.05);
        let oracle = cut.interpolant_by_quadrature().at_center;
        for f in cut.frames()? {
            worst = worst.max((f.interpolant() - oracle).norm());
        }
    }
    Ok(worst)
}

fn opt(v: Option<f64>) -> String {
    fmt_f64(v.unwrap_or(f64::NAN))
}

pub trait CsvRow {
    const HEADER: &'static str;
    fn record(&self) -> String;
}

impl CsvRow for SolveRow {
    const HEADER: &'static str = SOLVE_HEADER;
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.k,
            self.n,
            fmt_f64(self.h),
            fmt_f64(self.err_sq),
            opt(self.eoc),
            fmt_f64(self.energy),
            self.steps,
            fmt_f64(self.gap)
        )
    }
}

impl CsvRow for InterpRow {
    const HEADER: &'static str = INTERP_HEADER;
    fn record(&self) -> String {
        format!("{},{},{},{},{}", self.k, self.n, fmt_f64(self.h), fmt_f64(self.sup_norm), fmt_f64(self.excess_over_h))
    }
}

impl CsvRow for DualRow {
    const HEADER: &'static str = DUAL_HEADER;
    fn record(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.k,
            self.n,
            fmt_f64(self.h),
            fmt_f64(self.gap),
            fmt_f64(self.max_pihz),
            fmt_f64(self.conformity_defect)
        )
    }
}

impl CsvRow for ClassifyRow {
    const HEADER: &'static str = CLASSIFY_HEADER;
    fn record(&self) -> String {
        let mut s = format!("{},{},{}", self.k, self.n, fmt_f64(self.h));
        for key in ALL_KEYS {
            let _ = write!(s, ",{}", self.counts.get(&key).copied().unwrap_or(0));
        }
        s
    }
}

/// Writes header, rows and, for a failed sweep, a marker row
/// `FAILED,<level>,,...`.
pub fn write_table<R: CsvRow, W: Write>(mut w: W, rows: &[R], failed_level: Option<usize>) -> io::Result<()> {
    writeln!(w, "{}", R::HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.record())?;
    }
    if let Some(k) = failed_level {
        let blanks = R::HEADER.matches(',').count() - 1;
        writeln!(w, "{FAILED_MARKER},{k}{}", ",".repeat(blanks))?;
    }
    w.flush()
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, line: u64) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.trim().parse::<T>().map_err(|_| Error::Csv { line, message: format!("column `{name}`: cannot parse `{raw}`") })
}

/// Reads a solve table. Errors name the offending line (1-based, header
/// is line 1).
pub fn read_solve_csv<R: Read>(input: R) -> Result<Vec<SolveRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(|e| Error::Csv { line: 1, message: e.to_string() })?.clone();
    let got: Vec<&str> = header.iter().collect();
    let want: Vec<&str> = SOLVE_HEADER.split(',').collect();
    if got != want {
        return Err(Error::Csv { line: 1, message: format!("expected header `{SOLVE_HEADER}`, got `{}`", got.join(",")) });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.get(0) == Some(FAILED_MARKER) {
            return Err(Error::Csv { line, message: "table ends with a failed level".into() });
        }
        let eoc_raw = rec.get(4).unwrap_or("").trim();
        let eoc = if eoc_raw.eq_ignore_ascii_case("nan") || eoc_raw.is_empty() {
            None
        } else {
            Some(parse_field::<f64>(&rec, 4, "eoc", line)?)
        };
        rows.push(SolveRow {
            k: parse_field(&rec, 0, "k", line)?,
            n: parse_field(&rec, 1, "N", line)?,
            h: parse_field(&rec, 2, "h", line)?,
            err_sq: parse_field(&rec, 3, "err_sq", line)?,
            eoc,
            energy: parse_field(&rec, 5, "energy", line)?,
            steps: parse_field(&rec, 6, "steps", line)?,
            gap: parse_field(&rec, 7, "gap", line)?,
        });
    }
    Ok(rows)
}

pub fn cmd_rates(input: &Path) -> Result<Vec<SolveRow>> {
    let file = File::open(input).map_err(|e| Error::InvalidParameter(format!("cannot open {}: {e}", input.display())))?;
    let mut rows = read_solve_csv(file)?;
    fill_eoc(&mut rows);
    Ok(rows)
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<R: CsvRow>(out: &Option<PathBuf>, result: Sweep<R>) -> i32 {
    let (rows, failure) = match result {
        Ok(rows) => (rows, None),
        Err(p) => {
            eprintln!("error: level {} failed: {}", p.level, p.error);
            (p.rows, Some(p.level))
        }
    };
    let written = output(out).and_then(|w| write_table(w, &rows, failure));
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return 1;
    }
    i32::from(failure.is_some())
}

/// Runs the parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let config = |a: &ProblemArgs| RunConfig::try_from(a).map_err(|e| eprintln!("error: {e}")).ok();
    match cli.command {
        Command::Solve(a) => config(&a).map_or(2, |c| emit(&a.out, cmd_solve(&c))),
        Command::InterpCheck(a) => config(&a).map_or(2, |c| emit(&a.out, cmd_interp_check(&c))),
        Command::DualCheck(a) => config(&a).map_or(2, |c| emit(&a.out, cmd_dual_check(&c))),
        Command::Classify(a) => config(&a).map_or(2, |c| emit(&a.out, cmd_classify(&c))),
        Command::Rates { input, out } => match cmd_rates(&input) {
            Ok(rows) => emit(&out, Ok(rows)),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        Command::CutCheck { seed, samples, out } => match cut_check(seed, samples) {
            Ok(worst) => {
                let written = output(&out).and_then(|mut w| {
                    writeln!(w, "seed,samples,max_deviation")?;
                    writeln!(w, "{seed},{samples},{}", fmt_f64(worst))?;
                    w.flush()
                });
                i32::from(written.is_err())
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0").unwrap(), 0.0);
        assert_eq!(parse_angle("0.3").unwrap(), 0.3);
        assert_eq!(parse_angle("pi").unwrap(), PI);
        assert_eq!(parse_angle("-pi/4").unwrap(), -PI / 4.0);
        assert_eq!(parse_angle("7pi/18").unwrap(), 7.0 * PI / 18.0);
        assert_eq!(parse_angle("7*PI/18").unwrap(), 7.0 * PI / 18.0);
        for bad in ["", "pi/0", "x", "2pix", "inf"] {
            assert!(parse_angle(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn shifts_and_levels() {
        assert_eq!(parse_shift("0.1, 0").unwrap(), Vec2::new(0.1, 0.0));
        assert_eq!(parse_shift("-0.1,0.2").unwrap(), Vec2::new(-0.1, 0.2));
        assert!(parse_shift("1").is_err());
        assert_eq!(parse_levels("3..7").unwrap(), 3..=7);
        assert_eq!(parse_levels("2").unwrap(), 2..=2);
        assert!(parse_levels("5..3").is_err());
        assert!(parse_levels("0..11").is_err());
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        let v = 0.1 + 0.2;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn rejects_invalid_spec_before_work() {
        let spec = BenchmarkSpec::standard(Example::TwoDisk);
        assert!(RunConfig::new(spec, 3..=11).is_err());
        let args = ProblemArgs {
            example: ExampleArg::TwoDisk,
            phi: 0.0,
            shift: Vec2::ZERO,
            alpha: 4.0,
            r: 0.4,
            levels: 3..=4,
            tau: 1.0,
            stop_factor: 0.05,
            max_steps: 10,
            threshold: 2.0,
            out: None,
        };
        assert!(RunConfig::try_from(&args).is_err());
    }

    #[test]
    fn failed_marker_row() {
        let rows = vec![InterpRow { k: 1, n: 9, h: 1.0, sup_norm: 1.0, excess_over_h: 0.0 }];
        let mut buf = Vec::new();
        write_table(&mut buf, &rows, Some(2)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let last = text.lines().last().unwrap();
        assert_eq!(last, "FAILED,2,,,");
        assert_eq!(last.matches(',').count(), INTERP_HEADER.matches(',').count());
    }

    #[test]
    fn solve_table_round_trip() {
        let rows = vec![
            SolveRow { k: 3, n: 81, h: 0.35, err_sq: 0.04, eoc: None, energy: 1.5, steps: 12, gap: 0.2 },
            SolveRow { k: 4, n: 289, h: 0.175, err_sq: 0.02, eoc: Some(1.0), energy: 1.4, steps: 20, gap: 0.1 },
        ];
        let mut buf = Vec::new();
        write_table(&mut buf, &rows, None).unwrap();
        assert_eq!(read_solve_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn malformed_csv_reports_line() {
        let text = format!("{SOLVE_HEADER}\n3,81,0.3,0.1,nan,1,2,0.1\n4,289,abc,0.1,nan,1,2,0.1\n");
        match read_solve_csv(text.as_bytes()) {
            Err(Error::Csv { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains('h'));
            }
            other => panic!("{other:?}"),
        }
        let short = format!("{SOLVE_HEADER}\n3,81\n");
        assert!(matches!(read_solve_csv(short.as_bytes()), Err(Error::Csv { line: 2, .. })));
        assert!(matches!(read_solve_csv("k,N\n".as_bytes()), Err(Error::Csv { line: 1, .. })));
    }

    #[test]
    fn cut_check_is_small() {
        assert!(cut_check(3, 50).unwrap() < 1e-10);
    }
}
