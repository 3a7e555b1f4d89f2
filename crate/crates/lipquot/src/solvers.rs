//! Constructive existence routines: level-set enumeration on a grid, curve
//! lifting through a ball-covering map, and perturbation solving by
//! successive approximation.  Every returned point carries a recomputed
//! residual; nothing is trusted from the inner optimizer.

use crate::engine::{solve_preimage, SolveOptions};
use crate::lipfn::LipschitzFunction;
use crate::space::NormedSpace;
use crate::zoo::CompiledMap;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// A piecewise-linear curve `t -> points` with a declared Lipschitz bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Polyline {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub lip_bound: f64,
}

impl Polyline {
    pub fn new(times: Vec<f64>, points: Vec<Vec<f64>>, lip_bound: f64) -> Result<Self> {
        if times.len() != points.len() || times.len() < 2 {
            return Err(Error::BadPolyline);
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadPolyline);
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::BadPolyline);
        }
        Ok(Self { times, points, lip_bound })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Checks the declared bound: every segment's speed is at most
    /// `lip_bound` (with relative slack `1e-9`) in the given norm.
    pub fn validate(&self, space: &NormedSpace) -> Result<bool> {
        for i in 0..self.times.len() - 1 {
            let dt = self.times[i + 1] - self.times[i];
            let dx = space.dist(&self.points[i + 1], &self.points[i])?;
            if dx > self.lip_bound * dt * (1.0 + 1e-9) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Linear interpolation, clamped to the time range.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.points[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.points[n - 1].clone();
        }
        let i = self.times.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.points[i]
            .iter()
            .zip(&self.points[i + 1])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// One row per vertex: `t, coord_1, ..., coord_d`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.dim() {
            let _ = write!(out, ",x{i}");
        }
        out.push('\n');
        for (t, p) in self.times.iter().zip(&self.points) {
            let _ = write!(out, "{t}");
            for c in p {
                let _ = write!(out, ",{c}");
            }
            out.push('\n');
        }
        out
    }
}

/// All preimages of `target` found inside a box by grid screening plus
/// descent refinement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelSetReport {
    pub target: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub min_pair_gap: Option<f64>,
    pub grid_mesh: f64,
}

const LEVEL_SET_MAX_DIM: usize = 4;
const LEVEL_SET_CANDIDATE_CAP: usize = 5000;

/// Scans the grid of the given mesh inside `[lo, hi]` for cells whose image
/// is within `mesh * Lip + tol` of `target`, refines each candidate by the
/// shared descent engine, keeps residuals `<= tol`, and deduplicates at
/// radius `2 * mesh`.
pub fn level_set(
    map: &CompiledMap,
    target: &[f64],
    lo: &[f64],
    hi: &[f64],
    mesh: f64,
    tol: f64,
) -> Result<LevelSetReport> {
    let dim = map.in_dim();
    if lo.len() != dim || hi.len() != dim {
        return Err(Error::DimMismatch { expected: dim, got: lo.len().max(hi.len()) });
    }
    if dim > LEVEL_SET_MAX_DIM {
        return Err(Error::BadArgument(format!(
            "level-set grid scan supports dimension <= {LEVEL_SET_MAX_DIM}, got {dim}"
        )));
    }
    if mesh <= 0.0 || tol <= 0.0 || lo.iter().zip(hi).any(|(a, b)| a >= b) {
        return Err(Error::BadArgument("need mesh > 0, tol > 0, lo < hi".into()));
    }
    let codomain = map.codomain();
    let screen = mesh * map.lip_bound() + tol;

    // Grid scan with an odometer over the axes.
    let steps: Vec<usize> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| ((b - a) / mesh).round() as usize + 1)
        .collect();
    let mut idx = vec![0usize; dim];
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    'grid: loop {
        let p: Vec<f64> = idx
            .iter()
            .zip(lo)
            .map(|(&i, a)| a + i as f64 * mesh)
            .collect();
        if map.in_domain(&p) {
            if let Ok(v) = map.eval(&p) {
                let d: Vec<f64> = v.iter().zip(target).map(|(a, b)| a - b).collect();
                let res = codomain.norm(&d)?;
                if res <= screen {
                    candidates.push((res, p));
                    if candidates.len() > LEVEL_SET_CANDIDATE_CAP {
                        return Err(Error::BadArgument(format!(
                            "more than {LEVEL_SET_CANDIDATE_CAP} screening candidates; increase mesh or shrink the box"
                        )));
                    }
                }
            }
        }
        for axis in 0..dim {
            idx[axis] += 1;
            if idx[axis] < steps[axis] {
                continue 'grid;
            }
            idx[axis] = 0;
        }
        break;
    }

    // Refine best-first so dedup keeps the sharpest representative.
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let opts = SolveOptions { starts: 4, iters: 300, tol, seed: 0 };
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut residuals: Vec<f64> = Vec::new();
    for (_, cand) in candidates {
        if points.iter().any(|q| map.domain_dist(q, &cand).map(|d| d <= 2.0 * mesh).unwrap_or(false)) {
            continue;
        }
        let out = solve_preimage(
            &|p| map.eval(p),
            target,
            &codomain,
            &cand,
            2.0 * mesh,
            &|p| map.in_domain(p) && p.iter().zip(lo.iter().zip(hi)).all(|(t, (a, b))| *t >= a - mesh && *t <= b + mesh),
            &[cand.clone()],
            &opts,
        );
        if out.residual > tol {
            continue;
        }
        if points.iter().any(|q| map.domain_dist(q, &out.point).map(|d| d <= 2.0 * mesh).unwrap_or(false)) {
            continue;
        }
        points.push(out.point);
        residuals.push(out.residual);
    }

    let mut min_pair_gap = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = map.domain_dist(&points[i], &points[j])?;
            min_pair_gap = Some(min_pair_gap.map_or(d, |m: f64| m.min(d)));
        }
    }
    Ok(LevelSetReport { target: target.to_vec(), points, residuals, min_pair_gap, grid_mesh: mesh })
}

/// Lifts the curve `xi` through `map` starting at `x0`: steps the curve's
/// time range in `m` equal increments, at each step solving for a preimage
/// of the next curve point inside the closed step-sized ball around the
/// current lift point.  Residual tolerance per step is `1e-6 * h` where `h`
/// is the time step.
pub fn lift_curve(map: &CompiledMap, x0: &[f64], xi: &Polyline, m: usize) -> Result<Polyline> {
    if m == 0 {
        return Err(Error::BadArgument("need at least one lifting step".into()));
    }
    if x0.len() != map.in_dim() || xi.dim() != map.out_dim() {
        return Err(Error::DimMismatch { expected: map.in_dim(), got: x0.len() });
    }
    let codomain = map.codomain();
    let start_res = {
        let v = map.eval(x0)?;
        let d: Vec<f64> = v.iter().zip(&xi.points[0]).map(|(a, b)| a - b).collect();
        codomain.norm(&d)?
    };
    if start_res > 1e-8 {
        return Err(Error::BadArgument(format!(
            "map(x0) misses the curve start by {start_res:.3e} (> 1e-8)"
        )));
    }
    let (t0, t1) = (xi.times[0], *xi.times.last().unwrap());
    let h = (t1 - t0) / m as f64;
    let radius = h * xi.lip_bound.max(1.0);
    let tol = 1e-6 * h;
    let opts = SolveOptions { starts: 16, iters: 400, tol, seed: 1 };

    let mut times = Vec::with_capacity(m + 1);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    times.push(t0);
    points.push(x0.to_vec());
    let mut speed = 0.0f64;
    for k in 0..m {
        let t = t0 + (k + 1) as f64 * h;
        let target = xi.eval(t);
        let prev = points.last().unwrap().clone();
        let hints = map.preimage_hints(&target, &prev, radius);
        let out = solve_preimage(
            &|p| map.eval(p),
            &target,
            &codomain,
            &prev,
            radius,
            &|p| {
                map.in_domain(p)
                    && map.domain_dist(p, &prev).map(|d| d <= radius * (1.0 + 1e-9)).unwrap_or(false)
            },
            &hints,
            &opts,
        );
        if out.residual > tol {
            return Err(Error::LiftFailure { step: k + 1, residual: out.residual, tol });
        }
        speed = speed.max(map.domain_dist(&out.point, &prev)? / h);
        times.push(t);
        points.push(out.point);
    }
    Polyline::new(times, points, speed)
}

/// A map with a certified ball-covering constant: `f(B_r(x))` contains
/// `B_{r / co_lip}(f(x))`.
pub enum CoLipMap {
    Zoo { map: CompiledMap, co_lip: f64 },
    Linear { matrix: Vec<Vec<f64>>, co_lip: f64 },
}

impl CoLipMap {
    pub fn co_lip(&self) -> f64 {
        match self {
            CoLipMap::Zoo { co_lip, .. } | CoLipMap::Linear { co_lip, .. } => *co_lip,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            CoLipMap::Zoo { map, .. } => map.eval(x),
            CoLipMap::Linear { matrix, .. } => {
                Ok(matrix.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect())
            }
        }
    }

    pub fn codomain(&self) -> NormedSpace {
        match self {
            CoLipMap::Zoo { map, .. } => map.codomain(),
            CoLipMap::Linear { matrix, .. } => NormedSpace::l2(matrix.len()),
        }
    }

    /// Solves `eval(p) = target` with `p` in the closed ball
    /// `B_radius(center)`.  Square linear systems are solved exactly by
    /// elimination; everything else goes through the descent engine.
    fn solve(&self, target: &[f64], center: &[f64], radius: f64, tol: f64) -> Result<Vec<f64>> {
        if let CoLipMap::Linear { matrix, .. } = self {
            if matrix.len() == matrix[0].len() {
                if let Some(p) = gaussian_solve(matrix, target) {
                    return Ok(p);
                }
            }
        }
        let codomain = self.codomain();
        let dist = |u: &[f64], v: &[f64]| -> f64 {
            match self {
                CoLipMap::Zoo { map, .. } => map.domain_dist(u, v).unwrap_or(f64::INFINITY),
                CoLipMap::Linear { .. } => {
                    NormedSpace::l2(u.len()).dist(u, v).unwrap_or(f64::INFINITY)
                }
            }
        };
        let hints = match self {
            CoLipMap::Zoo { map, .. } => map.preimage_hints(target, center, radius),
            CoLipMap::Linear { .. } => Vec::new(),
        };
        let opts = SolveOptions { starts: 32, iters: 500, tol, seed: 2 };
        let out = solve_preimage(
            &|p| self.eval(p),
            target,
            &codomain,
            center,
            radius,
            &|p| dist(p, center) <= radius * (1.0 + 1e-9),
            &hints,
            &opts,
        );
        if out.residual > tol {
            return Err(Error::SolveFailure { residual: out.residual, tol });
        }
        Ok(out.point)
    }
}

fn gaussian_solve(matrix: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.iter().map(|r| r.clone()).collect();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Result of a successive-approximation perturbation solve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PerturbOutcome {
    /// Solution point `x + z`.
    pub point: Vec<f64>,
    /// The correction `z`.
    pub z: Vec<f64>,
    pub residual: f64,
    /// Step sizes `|w_{n+1} - w_n|` per stage; guaranteed geometric decay
    /// with ratio `co_lip * Lip(g)`.
    pub stage_radii: Vec<f64>,
    /// A priori bound `co_lip * r / (1 - co_lip * Lip(g))` on `|z|`.
    pub bound: f64,
}

const PERTURB_MAX_STAGES: usize = 200;

/// Solves `f(x + z) + g(x + z) = y` when `co_lip(f) * Lip(g) < 1`: at each
/// stage, re-solve `f(w) = y - g(w_prev)` within a ball whose radius shrinks
/// geometrically.  Returns the solution, the correction `z`, and the stage
/// trace.
pub fn perturb_solve(
    f: &CoLipMap,
    g: &LipschitzFunction,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<PerturbOutcome> {
    let lip_g = g.declared_lip.ok_or(Error::MissingLip)?;
    let delta = f.co_lip() * lip_g;
    if delta >= 1.0 {
        return Err(Error::PerturbationTooLarge(delta));
    }
    let codomain = f.codomain();
    let residual_at = |w: &[f64]| -> Result<f64> {
        let fv = f.eval(w)?;
        let gv = g.eval(w)?;
        let d: Vec<f64> = fv.iter().zip(&gv).zip(y).map(|((a, b), c)| a + b - c).collect();
        codomain.norm(&d)
    };
    let r = residual_at(x)?;
    let bound = if r == 0.0 { 0.0 } else { f.co_lip() * r / (1.0 - delta) };
    let solve_tol = (tol * 0.01).min(1e-10);

    let mut w = x.to_vec();
    let mut stage_radii = Vec::new();
    let mut stage_bound = f.co_lip() * r;
    let mut residual = r;
    for _ in 0..PERTURB_MAX_STAGES {
        if residual <= tol {
            break;
        }
        let gv = g.eval(&w)?;
        let target: Vec<f64> = y.iter().zip(&gv).map(|(a, b)| a - b).collect();
        let next = f.solve(&target, &w, stage_bound * (1.0 + 1e-6), solve_tol)?;
        let step = match f {
            CoLipMap::Zoo { map, .. } => map.domain_dist(&next, &w)?,
            CoLipMap::Linear { .. } => NormedSpace::l2(w.len()).dist(&next, &w)?,
        };
        stage_radii.push(step);
        w = next;
        residual = residual_at(&w)?;
        stage_bound *= delta;
        if stage_bound < solve_tol {
            stage_bound = solve_tol;
        }
    }
    if residual > tol {
        return Err(Error::SolveFailure { residual, tol });
    }
    let z: Vec<f64> = w.iter().zip(x).map(|(a, b)| a - b).collect();
    Ok(PerturbOutcome { point: w, z, residual, stage_radii, bound })
}
