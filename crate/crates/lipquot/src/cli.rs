//! Batch command-line front end.
//!
//! Every subcommand runs one experiment, writes a JSON report (stdout or
//! `--out`), and exits with: 0 when every claim passed, 1 when a claim
//! failed verification, 2 on usage errors, 3 on numerical failures
//! (sub-solver non-convergence and similar).

use crate::affine::minimax_affine_fit;
use crate::counterexamples::{
    absmap_witness, build_dyadic_tree, staircase_polyline, staircase_witness, tree_witness_check,
};
use crate::lipfn::LipschitzFunction;
use crate::martingale::{
    from_curve, frechet_obstruction, rademacher, to_curve, validate_martingale,
    PartitionMartingale,
};
use crate::report::{Report, RunConfig};
use crate::rng::stream;
use crate::solvers::{level_set, lift_curve, perturb_solve, CoLipMap, Polyline};
use crate::space::{Ball, NormedSpace};
use crate::uaap::{uaap_search_scalar, UaapParams};
use crate::zoo::{
    build_net, build_prop41_spec, cover_check, directional_derivative, jacobian_check,
    prop311_solve, CompiledMap, CoverMode, ZooMapSpec,
};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use std::collections::BTreeMap;

#[derive(Parser, Debug)]
#[command(name = "lipquot", version, about = "Certified experiments on Lipschitz maps", disable_help_subcommand = true)]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a ball on which a test function is affine to accuracy eps.
    UaapSearch(UaapArgs),
    /// Best affine fit of a sampled function, with the exact minimax error.
    AffineFit(AffineArgs),
    /// Affine-error lower-bound witnesses.
    #[command(subcommand)]
    Counterexample(CounterexampleCmd),
    /// The explicit quotient-map family.
    #[command(subcommand)]
    Zoo(ZooCmd),
    /// Lift a curve through a covering map step by step.
    Lift(LiftArgs),
    /// Solve (f + g)(x + z) = y by successive approximation.
    Perturb(PerturbArgs),
    /// Enumerate the preimages of a target inside a box.
    Levelset(LevelsetArgs),
    /// Interval-partition martingales and their curves.
    #[command(subcommand)]
    Martingale(MartingaleCmd),
}

#[derive(Args, Debug)]
struct UaapArgs {
    #[arg(long, default_value_t = 5)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test function: "norm" (distance to a seeded anchor), "abs" (first
    /// coordinate magnitude), or "coord" (a linear functional).
    #[arg(long = "fn", default_value = "norm")]
    function: String,
}

#[derive(Args, Debug)]
struct AffineArgs {
    /// Built-in scalar sample source: "abs" or "sin".
    #[arg(long = "fn", default_value = "abs")]
    function: String,
    #[arg(long, default_value_t = 201)]
    count: usize,
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    hi: f64,
    /// CSV file of samples (one row per sample: x_1,...,x_d,y) instead of a
    /// built-in function.
    #[arg(long)]
    csv: Option<String>,
}

#[derive(Subcommand, Debug)]
enum CounterexampleCmd {
    /// Dyadic-tree norm witness.
    Tree(TreeArgs),
    /// Staircase-curve witness.
    Staircase(StaircaseArgs),
    /// Coordinatewise absolute-value witness.
    Absmap(AbsmapArgs),
}

#[derive(Args, Debug)]
struct TreeArgs {
    #[arg(long, default_value_t = 6)]
    depth: u32,
    #[arg(long, default_value_t = 0.3)]
    r: f64,
    #[arg(long, default_value_t = 0.2)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random centers to check.
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args, Debug)]
struct StaircaseArgs {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
}

#[derive(Args, Debug)]
struct AbsmapArgs {
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 0.6)]
    r: f64,
    /// Comma-separated center (default: origin).
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
}

#[derive(Args, Debug)]
struct MapArgs {
    /// One of: fold, prop41, prop42, prop311.
    #[arg(long)]
    map: Option<String>,
    /// JSON file with a serialized map spec (overrides --map).
    #[arg(long)]
    map_json: Option<String>,
    /// prop311 outer slot count.
    #[arg(long, default_value_t = 8)]
    slots: usize,
    /// prop311 inner coordinate count.
    #[arg(long, default_value_t = 10)]
    inner: usize,
    /// prop311 exponent.
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// prop41 smallest dyadic level (2^kmin).
    #[arg(long, default_value_t = -8, allow_hyphen_values = true)]
    kmin: i32,
}

impl MapArgs {
    fn compile(&self) -> Result<CompiledMap> {
        let spec = if let Some(path) = &self.map_json {
            serde_json::from_str(&std::fs::read_to_string(path)?)?
        } else {
            match self.map.as_deref() {
                Some("fold") => ZooMapSpec::Fold,
                Some("prop42") => ZooMapSpec::Prop42,
                Some("prop311") => {
                    ZooMapSpec::Prop311 { n: self.slots, m: self.inner, p: self.exponent }
                }
                Some("prop41") => {
                    ZooMapSpec::Prop41(build_prop41_spec(2, 2.0, 0.5, self.kmin, -1, 3.0, 0)?)
                }
                Some(other) => {
                    return Err(Error::BadArgument(format!("unknown map kind '{other}'")))
                }
                None => return Err(Error::BadArgument("need --map or --map-json".into())),
            }
        };
        CompiledMap::new(spec)
    }

    fn describe(&self, params: &mut BTreeMap<String, String>) {
        if let Some(m) = &self.map {
            params.insert("map".into(), m.clone());
        }
        if let Some(p) = &self.map_json {
            params.insert("map_json".into(), p.clone());
        }
    }
}

#[derive(Subcommand, Debug)]
enum ZooCmd {
    /// Evaluate a map at a point.
    Eval(ZooEvalArgs),
    /// Certify that the image of a ball covers a ball around the image.
    Cover(ZooCoverArgs),
    /// Finite-difference derivative matrix and smallest singular value.
    Jacobian(ZooJacobianArgs),
    /// Build a maximal separated net.
    Net(ZooNetArgs),
    /// Constructive preimage solve for the gated coordinate map.
    Solve311(ZooSolveArgs),
}

#[derive(Args, Debug)]
struct ZooEvalArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
}

#[derive(Args, Debug)]
struct ZooCoverArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, allow_hyphen_values = true)]
    center: String,
    #[arg(long)]
    r: f64,
    /// Explicit target-ball radius.
    #[arg(long)]
    rho: Option<f64>,
    /// Proof-derived radius: "case2" (r^3/400), "case3" (r^2/400),
    /// or "case1" (r/32).
    #[arg(long)]
    rho_mode: Option<String>,
    #[arg(long, default_value_t = 16)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// "verify" or "bisect".
    #[arg(long, default_value = "verify")]
    mode: String,
}

#[derive(Args, Debug)]
struct ZooJacobianArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, allow_hyphen_values = true)]
    point: String,
    #[arg(long, default_value_t = 1e-5)]
    h: f64,
    /// Also take a directional derivative along this unit vector.
    #[arg(long, allow_hyphen_values = true)]
    dir: Option<String>,
}

#[derive(Args, Debug)]
struct ZooNetArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    sep: f64,
    #[arg(long)]
    region: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ZooSolveArgs {
    #[arg(long, default_value_t = 8)]
    slots: usize,
    #[arg(long, default_value_t = 10)]
    inner: usize,
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Start point (dimension slots * inner); default origin.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    /// Target (dimension slots); default 0.1 on the first slot.
    #[arg(long, allow_hyphen_values = true)]
    y: Option<String>,
}

#[derive(Args, Debug)]
struct LiftArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "1,0")]
    x0: String,
    #[arg(long, default_value_t = 1000)]
    m: usize,
    /// Built-in curve: "arc" (unit-speed circle arc from map(x0)) or
    /// "segment" (radial segment from map(x0)).
    #[arg(long, default_value = "arc")]
    curve: String,
    /// CSV polyline (t,x0,x1,...) to lift instead of a built-in curve.
    #[arg(long)]
    curve_csv: Option<String>,
    /// Write the lifted polyline CSV here.
    #[arg(long)]
    out_csv: Option<String>,
}

#[derive(Args, Debug)]
struct PerturbArgs {
    /// Perturbation amplitude: g(t) = a sin t.
    #[arg(long, default_value_t = 0.4)]
    a: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    y: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args, Debug)]
struct LevelsetArgs {
    #[command(flatten)]
    map: MapArgs,
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    /// "lo,hi" applied to every axis, or the full "lo1,..,lod,hi1,..,hid".
    #[arg(long = "box", allow_hyphen_values = true)]
    search_box: String,
    #[arg(long)]
    mesh: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Subcommand, Debug)]
enum MartingaleCmd {
    /// Check the averaging identity, boundedness, and separation.
    Validate(MartValidateArgs),
    /// Integrate the deepest level into a polyline.
    Tocurve(MartIoArgs),
    /// Split a curve into a separated martingale.
    Fromcurve(MartFromArgs),
    /// Lower bound on affine-model accuracy at a point.
    Obstruct(MartObstructArgs),
}

#[derive(Args, Debug)]
struct MartIoArgs {
    /// Martingale JSON file.
    #[arg(long, name = "in")]
    input: Option<String>,
    /// Use the built-in depth-1 signed example instead of a file.
    #[arg(long, default_value_t = false)]
    rademacher: bool,
    /// Write the integrated polyline CSV here.
    #[arg(long)]
    out_csv: Option<String>,
}

#[derive(Args, Debug)]
struct MartValidateArgs {
    #[arg(long, name = "in")]
    input: Option<String>,
    #[arg(long, default_value_t = false)]
    rademacher: bool,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
}

#[derive(Args, Debug)]
struct MartFromArgs {
    /// CSV polyline (t,x0,...) on [0,1] with unit Lipschitz bound.
    #[arg(long)]
    curve_csv: Option<String>,
    /// Use the built-in normalized staircase curve with this many steps.
    #[arg(long)]
    staircase: Option<usize>,
    #[arg(long, default_value_t = 0.4)]
    delta: f64,
    #[arg(long, default_value_t = 8)]
    max_depth: u32,
    #[arg(long, default_value_t = 256)]
    b_grid: usize,
    /// Exponent of the value norm.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

#[derive(Args, Debug)]
struct MartObstructArgs {
    #[arg(long, name = "in")]
    input: Option<String>,
    #[arg(long, default_value_t = false)]
    rademacher: bool,
    #[arg(long, default_value_t = 0.25)]
    x0: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

/// Entry point: parse, dispatch, emit the report, map errors to exit codes.
pub fn run(args: impl Iterator<Item = String>) -> i32 {
    let argv = std::iter::once("lipquot".to_string()).chain(args);
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(report) => {
            let json = report.to_json();
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &json) {
                    eprintln!("error: cannot write report to {path}: {e}");
                    return 3;
                }
            } else {
                print!("{json}");
            }
            if report.all_passed() {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::BadArgument(_)
                | Error::BadExponent(_)
                | Error::BadAccuracy(_)
                | Error::BadInterval { .. }
                | Error::BadPolyline
                | Error::DimMismatch { .. }
                | Error::OutsideDomain(_) => 2,
                _ => 3,
            }
        }
    }
}

fn threads() -> usize {
    std::env::var("LIPQUOT_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn config(command: &str, seed: u64, params: BTreeMap<String, String>) -> RunConfig {
    RunConfig { command: command.into(), params, seed, threads: threads() }
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::BadArgument(format!("cannot parse '{t}' as a number")))
        })
        .collect()
}

fn payload<T: serde::Serialize>(report: &mut Report, value: &T) {
    report.payload = Some(serde_json::to_value(value).expect("payload serialization"));
}

fn dispatch(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::UaapSearch(a) => cmd_uaap(a),
        Command::AffineFit(a) => cmd_affine(a),
        Command::Counterexample(c) => match c {
            CounterexampleCmd::Tree(a) => cmd_tree(a),
            CounterexampleCmd::Staircase(a) => cmd_staircase(a),
            CounterexampleCmd::Absmap(a) => cmd_absmap(a),
        },
        Command::Zoo(z) => match z {
            ZooCmd::Eval(a) => cmd_zoo_eval(a),
            ZooCmd::Cover(a) => cmd_zoo_cover(a),
            ZooCmd::Jacobian(a) => cmd_zoo_jacobian(a),
            ZooCmd::Net(a) => cmd_zoo_net(a),
            ZooCmd::Solve311(a) => cmd_zoo_solve(a),
        },
        Command::Lift(a) => cmd_lift(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Levelset(a) => cmd_levelset(a),
        Command::Martingale(m) => match m {
            MartingaleCmd::Validate(a) => cmd_mart_validate(a),
            MartingaleCmd::Tocurve(a) => cmd_mart_tocurve(a),
            MartingaleCmd::Fromcurve(a) => cmd_mart_fromcurve(a),
            MartingaleCmd::Obstruct(a) => cmd_mart_obstruct(a),
        },
    }
}

fn cmd_uaap(a: &UaapArgs) -> Result<Report> {
    let space = NormedSpace::lp(a.dim, a.p)?;
    let ball = Ball::unit(space);
    let dim = a.dim;
    let f = match a.function.as_str() {
        "norm" => {
            let mut rng = stream(a.seed, "uaap-cli-anchor");
            let anchor = Ball { space, center: vec![0.0; dim], radius: 2.0 }.sample(&mut rng);
            LipschitzFunction::scalar(ball, Some(1.0), move |x: &[f64]| {
                space.dist(x, &anchor).unwrap_or(f64::NAN)
            })
        }
        "abs" => LipschitzFunction::scalar(ball, Some(1.0), |x: &[f64]| x[0].abs()),
        "coord" => LipschitzFunction::scalar(ball, Some(1.0), |x: &[f64]| x[0]),
        other => return Err(Error::BadArgument(format!("unknown test function '{other}'"))),
    };
    let params = UaapParams::new(a.eps, a.seed);
    let cert = uaap_search_scalar(&f, &params)?;

    let mut p = BTreeMap::new();
    p.insert("dim".into(), a.dim.to_string());
    p.insert("p".into(), a.p.to_string());
    p.insert("eps".into(), a.eps.to_string());
    p.insert("fn".into(), a.function.clone());
    let mut report = Report::new(config("uaap-search", a.seed, p));
    report.claim(
        "certified radius at least the closed-form floor",
        Some(cert.radius_floor),
        cert.radius,
        cert.radius >= cert.radius_floor * f.domain.radius - 1e-300,
    );
    report.claim(
        "sampled error within the claimed bound",
        Some(cert.bound_claim * params.validation_slack),
        cert.sampled_error,
        cert.sampled_error <= cert.bound_claim * params.validation_slack,
    );
    payload(&mut report, &cert);
    Ok(report)
}

fn cmd_affine(a: &AffineArgs) -> Result<Report> {
    let samples: Vec<(Vec<f64>, Vec<f64>)> = if let Some(path) = &a.csv {
        let text = std::fs::read_to_string(path)?;
        let mut out = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let row = parse_vec(line)?;
            if row.len() < 2 {
                return Err(Error::BadArgument("csv rows need at least x,y".into()));
            }
            let (x, y) = row.split_at(row.len() - 1);
            out.push((x.to_vec(), y.to_vec()));
        }
        out
    } else {
        let f: fn(f64) -> f64 = match a.function.as_str() {
            "abs" => f64::abs,
            "sin" => f64::sin,
            other => return Err(Error::BadArgument(format!("unknown sample source '{other}'"))),
        };
        if a.count < 2 || a.hi <= a.lo {
            return Err(Error::BadArgument("need count >= 2 and hi > lo".into()));
        }
        (0..a.count)
            .map(|i| {
                let t = a.lo + (a.hi - a.lo) * i as f64 / (a.count - 1) as f64;
                (vec![t], vec![f(t)])
            })
            .collect()
    };
    let fit = minimax_affine_fit(&samples, &NormedSpace::l2(1))?;

    let mut p = BTreeMap::new();
    p.insert("fn".into(), a.function.clone());
    p.insert("count".into(), samples.len().to_string());
    if let Some(c) = &a.csv {
        p.insert("csv".into(), c.clone());
    }
    let mut report = Report::new(config("affine-fit", 0, p));
    report.claim("exact minimax solve", None, fit.error, fit.exact);
    report.claim(
        "optimal error equals its certified lower bound",
        Some(fit.lower_bound),
        fit.error,
        (fit.error - fit.lower_bound).abs() <= 1e-9 * (1.0 + fit.error),
    );
    payload(&mut report, &fit);
    Ok(report)
}

fn cmd_tree(a: &TreeArgs) -> Result<Report> {
    let tree = build_dyadic_tree(a.depth)?;
    let dim = tree.dim();
    let ball = Ball {
        space: NormedSpace::linf(dim),
        center: vec![0.0; dim],
        radius: (1.0 - a.r).max(0.0),
    };
    let mut rng = stream(a.seed, "tree-cli-centers");
    let mut checked = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut all_ok = true;
    let mut last = None;
    for _ in 0..a.trials {
        let x = ball.sample(&mut rng);
        match tree_witness_check(&tree, &x, a.r, a.eps) {
            Ok(rep) => {
                checked += 1;
                all_ok &= rep.passed;
                worst_margin = worst_margin.min(rep.lower_bound);
                last = Some(rep);
            }
            Err(Error::BadArgument(_)) => {} // leaf maximizer: skip
            Err(e) => return Err(e),
        }
    }
    let mut p = BTreeMap::new();
    p.insert("depth".into(), a.depth.to_string());
    p.insert("r".into(), a.r.to_string());
    p.insert("eps".into(), a.eps.to_string());
    p.insert("trials".into(), a.trials.to_string());
    let mut report = Report::new(config("counterexample-tree", a.seed, p));
    report.claim(
        "growth inequality holds at every sampled center",
        None,
        checked as f64,
        all_ok && checked > 0,
    );
    if let Some(rep) = last {
        payload(&mut report, &rep);
    }
    Ok(report)
}

fn cmd_staircase(a: &StaircaseArgs) -> Result<Report> {
    let rep = staircase_witness(a.n, a.k, a.l)?;
    let mut p = BTreeMap::new();
    p.insert("n".into(), a.n.to_string());
    p.insert("k".into(), a.k.to_string());
    p.insert("l".into(), a.l.to_string());
    let mut report = Report::new(config("counterexample-staircase", 0, p));
    report.claim(
        "three-point minimax error equals half the step",
        rep.theory_bound,
        rep.lower_bound,
        rep.passed,
    );
    payload(&mut report, &rep);
    Ok(report)
}

fn cmd_absmap(a: &AbsmapArgs) -> Result<Report> {
    let center = match &a.center {
        Some(s) => parse_vec(s)?,
        None => vec![0.0; a.n],
    };
    let rep = absmap_witness(a.n, a.r, &center)?;
    let mut p = BTreeMap::new();
    p.insert("n".into(), a.n.to_string());
    p.insert("r".into(), a.r.to_string());
    let mut report = Report::new(config("counterexample-absmap", 0, p));
    report.claim(
        "segment minimax error at least a quarter radius",
        rep.theory_bound,
        rep.lower_bound,
        rep.passed,
    );
    payload(&mut report, &rep);
    Ok(report)
}

fn cmd_zoo_eval(a: &ZooEvalArgs) -> Result<Report> {
    let map = a.map.compile()?;
    let point = parse_vec(&a.point)?;
    let value = map.eval(&point)?;
    let mut p = BTreeMap::new();
    a.map.describe(&mut p);
    p.insert("point".into(), a.point.clone());
    let mut report = Report::new(config("zoo-eval", 0, p));
    report.claim("evaluation finite", None, map.codomain().norm(&value)?, value.iter().all(|t| t.is_finite()));
    payload(&mut report, &value);
    Ok(report)
}

fn cmd_zoo_cover(a: &ZooCoverArgs) -> Result<Report> {
    let map = a.map.compile()?;
    let center = parse_vec(&a.center)?;
    let rho = match (&a.rho, a.rho_mode.as_deref()) {
        (Some(v), None) => *v,
        (None, Some("case1")) => a.r / 32.0,
        (None, Some("case2")) => a.r.powi(3) / 400.0,
        (None, Some("case3")) => a.r.powi(2) / 400.0,
        (None, Some(other)) => {
            return Err(Error::BadArgument(format!("unknown rho mode '{other}'")))
        }
        _ => return Err(Error::BadArgument("give exactly one of --rho / --rho-mode".into())),
    };
    let mode = match a.mode.as_str() {
        "verify" => CoverMode::Verify,
        "bisect" => CoverMode::Bisect,
        other => return Err(Error::BadArgument(format!("unknown cover mode '{other}'"))),
    };
    let rep = cover_check(&map, &center, a.r, rho, a.budget, a.seed, mode)?;
    let mut p = BTreeMap::new();
    a.map.describe(&mut p);
    p.insert("center".into(), a.center.clone());
    p.insert("r".into(), a.r.to_string());
    p.insert("rho".into(), rho.to_string());
    p.insert("budget".into(), a.budget.to_string());
    p.insert("mode".into(), a.mode.clone());
    let mut report = Report::new(config("zoo-cover", a.seed, p));
    report.claim(
        "every target on the rho-sphere has a preimage in the r-ball",
        Some(1e-6),
        rep.worst_residual,
        rep.covered,
    );
    payload(&mut report, &rep);
    Ok(report)
}

fn cmd_zoo_jacobian(a: &ZooJacobianArgs) -> Result<Report> {
    let map = a.map.compile()?;
    let point = parse_vec(&a.point)?;
    let rep = jacobian_check(&map, &point, a.h)?;
    let mut p = BTreeMap::new();
    a.map.describe(&mut p);
    p.insert("point".into(), a.point.clone());
    p.insert("h".into(), a.h.to_string());
    let mut report = Report::new(config("zoo-jacobian", 0, p));
    report.claim("smallest singular value", None, rep.min_singular_value, true);
    if let Some(dir) = &a.dir {
        let d = parse_vec(dir)?;
        let dd = directional_derivative(&map, &point, &d, 1e-6)?;
        let n = map.codomain().norm(&dd.limit)?;
        report.claim("directional derivative magnitude", None, n, true);
    }
    payload(&mut report, &rep);
    Ok(report)
}

fn cmd_zoo_net(a: &ZooNetArgs) -> Result<Report> {
    let space = NormedSpace::lp(a.dim, a.p)?;
    let net = build_net(&space, a.region, a.sep, a.seed)?;
    let mut min_gap = f64::INFINITY;
    for i in 0..net.points.len() {
        for j in i + 1..net.points.len() {
            min_gap = min_gap.min(space.dist(&net.points[i], &net.points[j])?);
        }
    }
    let mut p = BTreeMap::new();
    p.insert("dim".into(), a.dim.to_string());
    p.insert("p".into(), a.p.to_string());
    p.insert("sep".into(), a.sep.to_string());
    p.insert("region".into(), a.region.to_string());
    let mut report = Report::new(config("zoo-net", a.seed, p));
    report.claim(
        "pairwise separation at least sep",
        Some(a.sep),
        if min_gap.is_finite() { min_gap } else { a.sep },
        min_gap >= a.sep - 1e-12 || net.points.len() < 2,
    );
    payload(&mut report, &net);
    Ok(report)
}

fn cmd_zoo_solve(a: &ZooSolveArgs) -> Result<Report> {
    let dim = a.slots * a.inner;
    let x = match &a.x {
        Some(s) => parse_vec(s)?,
        None => vec![0.0; dim],
    };
    let y = match &a.y {
        Some(s) => parse_vec(s)?,
        None => {
            let mut v = vec![0.0; a.slots];
            v[0] = 0.1;
            v
        }
    };
    let sol = prop311_solve(a.slots, a.inner, a.exponent, &x, &y)?;
    let mut p = BTreeMap::new();
    p.insert("slots".into(), a.slots.to_string());
    p.insert("inner".into(), a.inner.to_string());
    p.insert("exponent".into(), a.exponent.to_string());
    let mut report = Report::new(config("zoo-solve311", 0, p));
    report.claim("solve residual", Some(1e-8), sol.residual, sol.residual <= 1e-8);
    report.claim("perturbation-to-gap ratio", Some(20.0), sol.ratio, sol.ratio <= 20.0);
    payload(&mut report, &sol);
    Ok(report)
}

fn cmd_lift(a: &LiftArgs) -> Result<Report> {
    let map = a.map.compile()?;
    let x0 = parse_vec(&a.x0)?;
    let xi = if let Some(path) = &a.curve_csv {
        read_polyline_csv(&std::fs::read_to_string(path)?)?
    } else {
        let start = map.eval(&x0)?;
        built_in_curve(&a.curve, &start)?
    };
    let phi = lift_curve(&map, &x0, &xi, a.m)?;
    let mut p = BTreeMap::new();
    a.map.describe(&mut p);
    p.insert("x0".into(), a.x0.clone());
    p.insert("m".into(), a.m.to_string());
    p.insert("curve".into(), a.curve.clone());
    let mut report = Report::new(config("lift", 0, p));
    report.claim(
        "lift speed within the covering bound",
        Some(1.0 + 1e-3),
        phi.lip_bound,
        phi.lip_bound <= 1.0 + 1e-3,
    );
    if let Some(path) = &a.out_csv {
        std::fs::write(path, phi.to_csv())?;
        report.artifacts.push(path.clone());
    }
    payload(&mut report, &phi);
    Ok(report)
}

fn built_in_curve(kind: &str, start: &[f64]) -> Result<Polyline> {
    if start.len() != 2 {
        return Err(Error::BadArgument("built-in curves are planar".into()));
    }
    let n = 256usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let r = (start[0] * start[0] + start[1] * start[1]).sqrt();
    let theta0 = start[1].atan2(start[0]);
    let points: Vec<Vec<f64>> = match kind {
        "arc" => {
            if r < 1e-9 {
                return Err(Error::BadArgument("arc curve needs a nonzero start".into()));
            }
            times
                .iter()
                .map(|&t| {
                    let th = theta0 + t / r;
                    vec![r * th.cos(), r * th.sin()]
                })
                .collect()
        }
        "segment" => times
            .iter()
            .map(|&t| vec![start[0] + t * theta0.cos(), start[1] + t * theta0.sin()])
            .collect(),
        other => return Err(Error::BadArgument(format!("unknown built-in curve '{other}'"))),
    };
    Polyline::new(times, points, 1.0)
}

fn read_polyline_csv(text: &str) -> Result<Polyline> {
    let mut times = Vec::new();
    let mut points = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if line.starts_with('t') {
            continue; // header
        }
        let row = parse_vec(line)?;
        if row.len() < 2 {
            return Err(Error::BadPolyline);
        }
        times.push(row[0]);
        points.push(row[1..].to_vec());
    }
    Polyline::new(times, points, 1.0)
}

fn cmd_perturb(a: &PerturbArgs) -> Result<Report> {
    let f = CoLipMap::Linear { matrix: vec![vec![1.0]], co_lip: 1.0 };
    let amp = a.a;
    if !(0.0..1.0).contains(&amp) {
        return Err(Error::PerturbationTooLarge(amp));
    }
    let ball = Ball { space: NormedSpace::l2(1), center: vec![0.0], radius: 100.0 };
    let g = LipschitzFunction::scalar(ball, Some(amp), move |t: &[f64]| amp * t[0].sin());
    let out = perturb_solve(&f, &g, &[a.x], &[a.y], a.tol)?;
    let mut p = BTreeMap::new();
    p.insert("a".into(), a.a.to_string());
    p.insert("x".into(), a.x.to_string());
    p.insert("y".into(), a.y.to_string());
    p.insert("tol".into(), a.tol.to_string());
    let mut report = Report::new(config("perturb", 0, p));
    report.claim("residual within tolerance", Some(a.tol), out.residual, out.residual <= a.tol);
    let z_norm = out.z[0].abs();
    report.claim(
        "correction within the contraction bound",
        Some(out.bound * (1.0 + 1e-6)),
        z_norm,
        z_norm <= out.bound * (1.0 + 1e-6),
    );
    let ratio_ok = out
        .stage_radii
        .windows(2)
        .all(|w| w[1] <= amp * w[0] + 1e-9);
    report.claim(
        "stage radii decay geometrically",
        Some(amp),
        out.stage_radii.len() as f64,
        ratio_ok,
    );
    payload(&mut report, &out);
    Ok(report)
}

fn cmd_levelset(a: &LevelsetArgs) -> Result<Report> {
    let map = a.map.compile()?;
    let target = parse_vec(&a.target)?;
    let dim = map.in_dim();
    let box_vals = parse_vec(&a.search_box)?;
    let (lo, hi) = if box_vals.len() == 2 {
        (vec![box_vals[0]; dim], vec![box_vals[1]; dim])
    } else if box_vals.len() == 2 * dim {
        (box_vals[..dim].to_vec(), box_vals[dim..].to_vec())
    } else {
        return Err(Error::BadArgument(format!(
            "--box needs 2 or {} comma-separated values",
            2 * dim
        )));
    };
    let rep = level_set(&map, &target, &lo, &hi, a.mesh, a.tol)?;
    let mut p = BTreeMap::new();
    a.map.describe(&mut p);
    p.insert("target".into(), a.target.clone());
    p.insert("box".into(), a.search_box.clone());
    p.insert("mesh".into(), a.mesh.to_string());
    p.insert("tol".into(), a.tol.to_string());
    let mut report = Report::new(config("levelset", 0, p));
    let worst = rep.residuals.iter().copied().fold(0.0f64, f64::max);
    report.claim(
        "every reported preimage meets the residual tolerance",
        Some(a.tol),
        worst,
        !rep.points.is_empty() && worst <= a.tol,
    );
    payload(&mut report, &rep);
    Ok(report)
}

fn load_martingale(input: &Option<String>, use_rademacher: bool) -> Result<PartitionMartingale> {
    match (input, use_rademacher) {
        (Some(path), false) => Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?),
        (None, true) => Ok(rademacher()),
        _ => Err(Error::BadArgument("give exactly one of --in / --rademacher".into())),
    }
}

fn cmd_mart_validate(a: &MartValidateArgs) -> Result<Report> {
    let m = load_martingale(&a.input, a.rademacher)?;
    let rep = validate_martingale(&m, a.delta)?;
    let mut p = BTreeMap::new();
    p.insert("delta".into(), a.delta.to_string());
    let mut report = Report::new(config("martingale-validate", 0, p));
    report.claim("averaging identity holds", None, rep.depth as f64, rep.is_martingale);
    report.claim("uniformly bounded", None, rep.bound, rep.is_bounded);
    report.claim(
        "delta-separated on every edge",
        Some(a.delta),
        rep.min_separation.unwrap_or(f64::INFINITY),
        rep.is_separated,
    );
    payload(&mut report, &rep);
    Ok(report)
}

fn cmd_mart_tocurve(a: &MartIoArgs) -> Result<Report> {
    let m = load_martingale(&a.input, a.rademacher)?;
    let f = to_curve(&m)?;
    let mut p = BTreeMap::new();
    p.insert("vertices".into(), f.times.len().to_string());
    let mut report = Report::new(config("martingale-tocurve", 0, p));
    report.claim(
        "curve speed bounded by the martingale bound",
        Some(f.lip_bound),
        f.lip_bound,
        f.validate(&m.space)?,
    );
    if let Some(path) = &a.out_csv {
        std::fs::write(path, f.to_csv())?;
        report.artifacts.push(path.clone());
    }
    payload(&mut report, &f);
    Ok(report)
}

fn cmd_mart_fromcurve(a: &MartFromArgs) -> Result<Report> {
    let f = match (&a.curve_csv, a.staircase) {
        (Some(path), None) => read_polyline_csv(&std::fs::read_to_string(path)?)?,
        (None, Some(n)) => staircase_polyline(n)?,
        _ => return Err(Error::BadArgument("give exactly one of --curve-csv / --staircase".into())),
    };
    let space = NormedSpace::lp(f.dim(), a.p)?;
    let out = from_curve(&f, &space, a.delta, a.max_depth, a.b_grid)?;
    let edges = crate::martingale::edge_stats(&out.martingale)?;
    let min_sep = edges.iter().map(|e| e.separation).fold(f64::INFINITY, f64::min);
    let max_ratio = edges.iter().map(|e| e.width_ratio).fold(0.0f64, f64::max);
    let mut p = BTreeMap::new();
    p.insert("delta".into(), a.delta.to_string());
    p.insert("max_depth".into(), a.max_depth.to_string());
    p.insert("b_grid".into(), a.b_grid.to_string());
    p.insert("p".into(), a.p.to_string());
    let mut report = Report::new(config("martingale-fromcurve", 0, p));
    report.claim(
        "every created edge is separated by more than delta",
        Some(a.delta),
        if min_sep.is_finite() { min_sep } else { 0.0 },
        out.no_deviation || min_sep > a.delta,
    );
    report.claim(
        "width ratios within the splitting bound",
        Some(2.0 / a.delta + 1e-9),
        max_ratio,
        max_ratio <= 2.0 / a.delta + 1e-9,
    );
    payload(&mut report, &out);
    Ok(report)
}

fn cmd_mart_obstruct(a: &MartObstructArgs) -> Result<Report> {
    let m = load_martingale(&a.input, a.rademacher)?;
    let lb = frechet_obstruction(&m, a.x0, a.eta)?;
    let mut p = BTreeMap::new();
    p.insert("x0".into(), a.x0.to_string());
    p.insert("eta".into(), a.eta.to_string());
    let mut report = Report::new(config("martingale-obstruct", 0, p));
    report.claim("affine-model accuracy lower bound", None, lb, true);
    Ok(report)
}
