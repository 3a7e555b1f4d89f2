//! A zoo of uniformly-open Lipschitz maps with exotic differentiability
//! behaviour, plus checkers for their coverage, Jacobians and directional
//! derivatives.
//!
//! The maps are identified by short stable tags (`fold`, `prop41`, `prop42`,
//! `prop311`) that also name them in serialized specs and on the command
//! line:
//!
//! * `fold` — the planar angle-doubling fold `r e^{i t} -> r e^{2 i t}`;
//! * `prop42` — a spiral collapse on `R^2 x R` that is the identity far out
//!   but crushes the unit disk at parameter `0`;
//! * `prop41` — a net-translation map on `X ⊕ X ⊕ R` built from maximal
//!   separated nets at dyadic scales;
//! * `prop311` — a gated positive/negative-part norm difference whose
//!   directional derivatives at the origin all vanish.

use crate::engine::{solve_preimage, SolveOptions};
use crate::rng::stream;
use crate::space::{Ball, NormedSpace};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// A maximal `sep`-separated point set inside a centered ball.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Net {
    pub sep: f64,
    pub region: f64,
    pub points: Vec<Vec<f64>>,
}

/// Greedy maximal separated net over a deterministic shuffled grid of mesh
/// `sep / 4` inside the centered ball of radius `region`.
pub fn build_net(space: &NormedSpace, region: f64, sep: f64, seed: u64) -> Result<Net> {
    if sep <= 0.0 || region <= 0.0 {
        return Err(Error::BadArgument(format!("need positive sep ({sep}) and region ({region})")));
    }
    let dim = space.dim;
    let mesh = sep / 4.0;
    let side = (2.0 * region / mesh).ceil() as usize + 1;
    let total = side.checked_pow(dim as u32).filter(|&t| t <= 30_000_000).ok_or_else(|| {
        Error::BadArgument(format!("net grid too large: side {side}, dim {dim}"))
    })?;
    let mut order: Vec<u32> = (0..total as u32).collect();
    order.shuffle(&mut stream(seed, "net-grid"));
    let coords = |idx: u32| -> Vec<f64> {
        let mut rem = idx as usize;
        (0..dim)
            .map(|_| {
                let q = rem % side;
                rem /= side;
                -region + q as f64 * mesh
            })
            .collect()
    };
    let mut hash = SpatialHash::new(sep, dim);
    let mut points: Vec<Vec<f64>> = Vec::new();
    for idx in order {
        let p = coords(idx);
        if space.norm(&p)? > region {
            continue;
        }
        if hash.nearest_within(space, &points, &p, sep).is_none() {
            hash.insert(&p, points.len() as u32);
            points.push(p);
        }
    }
    Ok(Net { sep, region, points })
}

/// Largest distance from `probes` random points of the region to the net:
/// for a maximal net this stays below `sep` (up to the probe resolution).
pub fn net_covering_radius(net: &Net, space: &NormedSpace, probes: usize, seed: u64) -> Result<f64> {
    let ball = Ball { space: *space, center: vec![0.0; space.dim], radius: net.region };
    let mut rng = stream(seed, "net-probes");
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let p = ball.sample(&mut rng);
        let mut best = f64::INFINITY;
        for q in &net.points {
            best = best.min(space.dist(&p, q)?);
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// Uniform-grid spatial hash for separation queries.
struct SpatialHash {
    cell: f64,
    dim: usize,
    buckets: HashMap<Vec<i64>, Vec<u32>>,
}

impl SpatialHash {
    fn new(cell: f64, dim: usize) -> Self {
        Self { cell, dim, buckets: HashMap::new() }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|&t| (t / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], id: u32) {
        self.buckets.entry(self.key(p)).or_default().push(id);
    }

    /// Closest stored point within `radius`, if any.
    fn nearest_within(
        &self,
        space: &NormedSpace,
        points: &[Vec<f64>],
        p: &[f64],
        radius: f64,
    ) -> Option<u32> {
        let base = self.key(p);
        let mut best: Option<(f64, u32)> = None;
        let span = (radius / self.cell).ceil() as i64;
        let mut offsets = vec![-span; self.dim];
        loop {
            let key: Vec<i64> = base.iter().zip(&offsets).map(|(a, b)| a + b).collect();
            if let Some(ids) = self.buckets.get(&key) {
                for &id in ids {
                    let d = space.dist(&points[id as usize], p).unwrap_or(f64::INFINITY);
                    if d <= radius && best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, id));
                    }
                }
            }
            // advance odometer
            let mut c = 0;
            loop {
                if c == self.dim {
                    return best.map(|(_, id)| id);
                }
                offsets[c] += 1;
                if offsets[c] <= span {
                    break;
                }
                offsets[c] = -span;
                c += 1;
            }
        }
    }
}

/// Parameters of the net-translation map on `X ⊕ X ⊕ R`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prop41Spec {
    /// Dimension of the base space `X`.
    pub base_dim: usize,
    /// Exponent of the base norm.
    pub base_p: f64,
    /// Mixing weight of the first block (the map is
    /// `a * g(x, l) + f(y, l)`).
    pub a: f64,
    /// Dyadic net levels available: `k_min <= k <= k_max`.
    pub k_min: i32,
    pub k_max: i32,
    /// Radius of the region covered by every net.
    pub net_region: f64,
    pub net_seed: u64,
    /// `nets[i]` is the maximal `4 * 2^(k_min + i)`-separated net.
    pub nets: Vec<Net>,
}

/// Build the net-translation spec, including all nets.
pub fn build_prop41_spec(
    base_dim: usize,
    base_p: f64,
    a: f64,
    k_min: i32,
    k_max: i32,
    net_region: f64,
    net_seed: u64,
) -> Result<Prop41Spec> {
    if k_min > k_max {
        return Err(Error::BadArgument(format!("k_min {k_min} > k_max {k_max}")));
    }
    if net_region <= 4.0 * exp2i(k_max) {
        return Err(Error::BallOutsideRegion(format!(
            "net_region {net_region} <= margin {}",
            4.0 * exp2i(k_max)
        )));
    }
    let space = NormedSpace::lp(base_dim, base_p)?;
    let mut nets = Vec::new();
    for k in k_min..=k_max {
        nets.push(build_net(&space, net_region, 4.0 * exp2i(k), net_seed ^ (k as u64).wrapping_mul(0x9e37))?);
    }
    Ok(Prop41Spec { base_dim, base_p, a, k_min, k_max, net_region, net_seed, nets })
}

fn exp2i(k: i32) -> f64 {
    (2.0f64).powi(k)
}

/// Serializable description of a zoo map.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZooMapSpec {
    Fold,
    Prop42,
    Prop41(Prop41Spec),
    Prop311 { n: usize, m: usize, p: f64 },
}

/// A zoo map compiled for evaluation (net lookup structures prebuilt).
pub struct CompiledMap {
    pub spec: ZooMapSpec,
    p41_index: Vec<SpatialHash>,
}

impl CompiledMap {
    pub fn new(spec: ZooMapSpec) -> Result<Self> {
        let mut p41_index = Vec::new();
        if let ZooMapSpec::Prop41(p41) = &spec {
            for (i, net) in p41.nets.iter().enumerate() {
                let k = p41.k_min + i as i32;
                let mut h = SpatialHash::new(exp2i(k + 1), p41.base_dim);
                for (id, p) in net.points.iter().enumerate() {
                    h.insert(p, id as u32);
                }
                p41_index.push(h);
            }
        }
        Ok(Self { spec, p41_index })
    }

    pub fn in_dim(&self) -> usize {
        match &self.spec {
            ZooMapSpec::Fold => 2,
            ZooMapSpec::Prop42 => 3,
            ZooMapSpec::Prop41(s) => 2 * s.base_dim + 1,
            ZooMapSpec::Prop311 { n, m, .. } => n * m,
        }
    }

    pub fn out_dim(&self) -> usize {
        match &self.spec {
            ZooMapSpec::Fold | ZooMapSpec::Prop42 => 2,
            ZooMapSpec::Prop41(s) => s.base_dim,
            ZooMapSpec::Prop311 { n, .. } => *n,
        }
    }

    pub fn codomain(&self) -> NormedSpace {
        match &self.spec {
            ZooMapSpec::Fold | ZooMapSpec::Prop42 => NormedSpace::l2(2),
            ZooMapSpec::Prop41(s) => NormedSpace::lp(s.base_dim, s.base_p).expect("valid p"),
            ZooMapSpec::Prop311 { n, p, .. } => NormedSpace::lp(*n, *p).expect("valid p"),
        }
    }

    /// A generous Lipschitz upper bound used for level-set screening.
    pub fn lip_bound(&self) -> f64 {
        match &self.spec {
            ZooMapSpec::Fold => 2.0,
            ZooMapSpec::Prop42 => 30.0,
            ZooMapSpec::Prop41(_) => 3.0,
            ZooMapSpec::Prop311 { .. } => 4.0,
        }
    }

    /// Distance in the map's domain norm (the `prop41` domain is the `l_1`
    /// sum of its three blocks).
    pub fn domain_dist(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        match &self.spec {
            ZooMapSpec::Fold => NormedSpace::l2(2).dist(u, v),
            ZooMapSpec::Prop42 => NormedSpace::l2(3).dist(u, v),
            ZooMapSpec::Prop41(s) => {
                let d = s.base_dim;
                let base = NormedSpace::lp(d, s.base_p)?;
                let dx: Vec<f64> = (0..d).map(|i| u[i] - v[i]).collect();
                let dy: Vec<f64> = (0..d).map(|i| u[d + i] - v[d + i]).collect();
                Ok(base.norm(&dx)? + base.norm(&dy)? + (u[2 * d] - v[2 * d]).abs())
            }
            ZooMapSpec::Prop311 { n, m, p } => NormedSpace::lp(n * m, *p)?.dist(u, v),
        }
    }

    /// Whether `p` is inside the region where the map is defined.
    pub fn in_domain(&self, p: &[f64]) -> bool {
        match &self.spec {
            ZooMapSpec::Fold | ZooMapSpec::Prop42 | ZooMapSpec::Prop311 { .. } => {
                p.len() == self.in_dim()
            }
            ZooMapSpec::Prop41(s) => {
                if p.len() != self.in_dim() {
                    return false;
                }
                let d = s.base_dim;
                let base = match NormedSpace::lp(d, s.base_p) {
                    Ok(b) => b,
                    Err(_) => return false,
                };
                let ny = base.norm(&p[d..2 * d]).unwrap_or(f64::INFINITY);
                let lam = p[2 * d].abs();
                ny <= s.net_region - 4.0 * exp2i(s.k_max) && lam <= exp2i(s.k_max)
            }
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.in_dim() {
            return Err(Error::DimMismatch { expected: self.in_dim(), got: p.len() });
        }
        match &self.spec {
            ZooMapSpec::Fold => Ok(fold_eval(p)),
            ZooMapSpec::Prop42 => Ok(prop42_eval(&[p[0], p[1]], p[2])),
            ZooMapSpec::Prop41(s) => self.prop41_eval(s, p),
            ZooMapSpec::Prop311 { n, m, p: exp } => prop311_eval(*n, *m, *exp, p),
        }
    }

    fn prop41_eval(&self, s: &Prop41Spec, point: &[f64]) -> Result<Vec<f64>> {
        let d = s.base_dim;
        let base = NormedSpace::lp(d, s.base_p)?;
        let x = &point[..d];
        let y = &point[d..2 * d];
        let lam = point[2 * d];
        if !self.in_domain(point) {
            return Err(Error::OutsideDomain(format!(
                "prop41 point with |lambda| = {} or |y| = {}",
                lam.abs(),
                base.norm(y).unwrap_or(f64::NAN)
            )));
        }
        // First block: a * g(x, lambda) with g(x, l) = (clamp coefficient) x.
        let nx = base.norm(x)?;
        let coeff = lam.abs().max(nx - 1.0).min(1.0);
        let mut out: Vec<f64> = x.iter().map(|&t| s.a * coeff * t).collect();
        let fy = self.prop41_translation(s, &base, y, lam.abs())?;
        for (o, t) in out.iter_mut().zip(&fy) {
            *o += t;
        }
        Ok(out)
    }

    /// The translation part `f(y, lambda)`: supported on disjoint balls
    /// around the level-`k` net, affine in `lambda` between dyadic levels,
    /// even in `lambda`, ramped linearly to zero below the lowest level.
    fn prop41_translation(&self, s: &Prop41Spec, base: &NormedSpace, y: &[f64], lam: f64) -> Result<Vec<f64>> {
        if lam == 0.0 {
            return Ok(vec![0.0; s.base_dim]);
        }
        let lo = exp2i(s.k_min);
        if lam < lo {
            let mut v = self.prop41_level(s, base, y, s.k_min)?;
            let w = lam / lo;
            v.iter_mut().for_each(|t| *t *= w);
            return Ok(v);
        }
        let k = lam.log2().floor() as i32;
        let k = k.min(s.k_max - 1).max(s.k_min);
        let lev = exp2i(k);
        let w = ((lam - lev) / lev).clamp(0.0, 1.0);
        let mut v0 = self.prop41_level(s, base, y, k)?;
        if w == 0.0 {
            return Ok(v0);
        }
        let v1 = self.prop41_level(s, base, y, k + 1)?;
        for (a, b) in v0.iter_mut().zip(&v1) {
            *a = (1.0 - w) * *a + w * b;
        }
        Ok(v0)
    }

    fn prop41_level(&self, s: &Prop41Spec, base: &NormedSpace, y: &[f64], k: i32) -> Result<Vec<f64>> {
        let idx = (k - s.k_min) as usize;
        let net = &s.nets[idx];
        let radius = exp2i(k + 1);
        let found = self.p41_index[idx].nearest_within(base, &net.points, y, radius);
        let mut out = vec![0.0; s.base_dim];
        if let Some(id) = found {
            let u = &net.points[id as usize];
            let dist = base.dist(y, u)?;
            let coef = (exp2i(k) - (dist - exp2i(k)).abs()).max(0.0);
            if coef > 0.0 && dist > 0.0 {
                for i in 0..s.base_dim {
                    out[i] = coef * (y[i] - u[i]) / dist;
                }
            }
        }
        Ok(out)
    }

    /// Kind-specific exact or near-exact preimage candidates for `target`,
    /// used to seed the preimage engine.
    pub fn preimage_hints(&self, target: &[f64], center: &[f64], radius: f64) -> Vec<Vec<f64>> {
        match &self.spec {
            ZooMapSpec::Fold => {
                let r = (target[0] * target[0] + target[1] * target[1]).sqrt();
                if r == 0.0 {
                    return vec![vec![0.0, 0.0]];
                }
                let phi = target[1].atan2(target[0]);
                let s = r.sqrt();
                let z = vec![s * (phi / 2.0).cos(), s * (phi / 2.0).sin()];
                let zn = vec![-z[0], -z[1]];
                vec![z, zn]
            }
            ZooMapSpec::Prop42 => {
                let a0 = center[2];
                let x0 = &center[..2];
                let nx = (x0[0] * x0[0] + x0[1] * x0[1]).sqrt();
                let nu = (target[0] * target[0] + target[1] * target[1]).sqrt();
                let mut hints: Vec<Vec<f64>> = Vec::new();
                if nu == 0.0 {
                    // The origin of every slice maps to zero, as does the
                    // whole unit disk of the boundary slice a = 0.
                    hints.push(vec![0.0, 0.0, a0]);
                    if nx <= 1.0 {
                        hints.push(vec![x0[0], x0[1], 0.0]);
                    }
                    return hints;
                }
                // In the identity region the preimage is the target itself.
                if nu >= 2.0 {
                    hints.push(vec![target[0], target[1], a0]);
                }
                // Exact preimages aligned with the center direction.  With
                // slice radius profile value g, a point at distance s from
                // the axis maps to norm s * g^2 rotated by 2*pi/g, so pick
                // the winding count k making the preimage direction equal to
                // the center's, then solve the profile equation for the
                // slice parameter.
                let phi = target[1].atan2(target[0]);
                let psi = if nx > 0.0 { x0[1].atan2(x0[0]) } else { phi };
                let tau = std::f64::consts::TAU;
                let base = (phi - psi).rem_euclid(tau);
                for k in 1..=200_000u64 {
                    let g = tau / (base + tau * k as f64);
                    let s = nu / (g * g);
                    if s >= 1.999 {
                        break; // s only grows as k increases
                    }
                    // Invert the radial profile at distance s.
                    let ap = if s <= 1.0 { g } else { 1.0 - (1.0 - g) / (2.0 - s) };
                    if !(ap > 0.0 && ap <= g + 1e-15) || ap >= 1.0 {
                        continue;
                    }
                    let xh = [s * psi.cos(), s * psi.sin()];
                    let dx = (xh[0] - x0[0], xh[1] - x0[1], ap - a0);
                    let dist = (dx.0 * dx.0 + dx.1 * dx.1 + dx.2 * dx.2).sqrt();
                    if dist <= radius {
                        hints.push(vec![xh[0], xh[1], ap]);
                        if hints.len() >= 64 {
                            break;
                        }
                    }
                }
                // Same-slice inverse as a fallback seed.
                if a0.abs() > 0.0 {
                    if let Some(x) = prop42_inverse(&[target[0], target[1]], a0.abs()) {
                        hints.push(vec![x[0], x[1], a0]);
                    }
                }
                hints
            }
            ZooMapSpec::Prop41(s) => {
                let d = s.base_dim;
                let base = match NormedSpace::lp(d, s.base_p) {
                    Ok(b) => b,
                    Err(_) => return Vec::new(),
                };
                let x0 = &center[..d];
                let y0 = &center[d..2 * d];
                let lam0 = center[2 * d];
                let mut hints = Vec::new();
                for k in s.k_min..=s.k_max {
                    let idx = (k - s.k_min) as usize;
                    let Some(id) =
                        self.p41_index[idx].nearest_within(&base, &s.nets[idx].points, y0, exp2i(k + 2))
                    else {
                        continue;
                    };
                    let u = &s.nets[idx].points[id as usize];
                    for lam in [exp2i(k), -exp2i(k)] {
                        if (lam - lam0).abs() > radius {
                            continue;
                        }
                        // On the support ball the level map is y - u, so the
                        // preimage of the residual target is explicit.
                        let nx = base.norm(x0).unwrap_or(0.0);
                        let coeff = lam.abs().max(nx - 1.0).min(1.0);
                        let mut y = vec![0.0; d];
                        for i in 0..d {
                            y[i] = u[i] + target[i] - s.a * coeff * x0[i];
                        }
                        let mut h = Vec::with_capacity(2 * d + 1);
                        h.extend_from_slice(x0);
                        h.extend_from_slice(&y);
                        h.push(lam);
                        hints.push(h);
                    }
                }
                hints
            }
            ZooMapSpec::Prop311 { .. } => Vec::new(),
        }
    }
}

/// Evaluate a zoo map at a point (compiles the spec first; prefer
/// [`CompiledMap`] in loops).
pub fn zoo_eval(spec: &ZooMapSpec, p: &[f64]) -> Result<Vec<f64>> {
    CompiledMap::new(spec.clone())?.eval(p)
}

fn fold_eval(p: &[f64]) -> Vec<f64> {
    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
    if r == 0.0 {
        return vec![0.0, 0.0];
    }
    vec![(p[0] * p[0] - p[1] * p[1]) / r, 2.0 * p[0] * p[1] / r]
}

/// Radial profile of the spiral collapse.
fn prop42_profile(a: f64, t: f64) -> f64 {
    let a = a.abs();
    if a >= 1.0 {
        return 1.0;
    }
    if t <= 1.0 {
        a
    } else if t < 2.0 {
        1.0 - (1.0 - a) * (2.0 - t)
    } else {
        1.0
    }
}

fn prop42_eval(x: &[f64], a: f64) -> Vec<f64> {
    let t = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let ra = prop42_profile(a, t);
    if ra == 0.0 {
        return vec![0.0, 0.0];
    }
    if ra == 1.0 {
        return x.to_vec(); // full turn, unit scale: exact identity
    }
    let theta = 2.0 * std::f64::consts::PI / ra;
    let (s, c) = theta.sin_cos();
    let scale = ra * ra;
    vec![scale * (c * x[0] - s * x[1]), scale * (s * x[0] + c * x[1])]
}

/// Exact inverse of the `x`-slice of the spiral collapse at parameter
/// `a in (0, 1]`: the radial image `s -> s * r_a(s)^2` is strictly
/// increasing, so it is inverted by bisection and the rotation undone.
fn prop42_inverse(y: &[f64], a: f64) -> Option<Vec<f64>> {
    if a <= 0.0 {
        return None;
    }
    let ny = (y[0] * y[0] + y[1] * y[1]).sqrt();
    if ny == 0.0 {
        return Some(vec![0.0, 0.0]);
    }
    let image_norm = |s: f64| s * prop42_profile(a, s).powi(2);
    let mut hi = 2.0f64.max(ny / a.min(1.0).powi(2)) + 1.0;
    if image_norm(hi) < ny {
        hi = ny.max(2.0) * 4.0;
        if image_norm(hi) < ny {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if image_norm(mid) < ny {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let ra = prop42_profile(a, s);
    if ra == 0.0 {
        return None;
    }
    let theta = -2.0 * std::f64::consts::PI / ra;
    let (sn, cs) = theta.sin_cos();
    let yx = y[0] / (ra * ra);
    let yy = y[1] / (ra * ra);
    Some(vec![cs * yx - sn * yy, sn * yx + cs * yy])
}

/// Gate function: vanishes below half the dyadic threshold, identity above
/// it, linear in between.  Defined for `t >= 0`.
fn gate(k: usize, t: f64) -> f64 {
    let th = exp2i(-(k as i32));
    if t >= th {
        t
    } else if t <= 0.5 * th {
        0.0
    } else {
        2.0 * (t - 0.5 * th)
    }
}

fn prop311_eval(n: usize, m: usize, p: f64, point: &[f64]) -> Result<Vec<f64>> {
    let space = NormedSpace::lp(m, p)?;
    let mut out = Vec::with_capacity(n);
    for slot in 0..n {
        let a = &point[slot * m..(slot + 1) * m];
        let pos: Vec<f64> = a.iter().enumerate().map(|(k, &t)| gate(k, t.max(0.0))).collect();
        let neg: Vec<f64> = a.iter().enumerate().map(|(k, &t)| gate(k, (-t).max(0.0))).collect();
        out.push(space.norm(&pos)? - space.norm(&neg)?);
    }
    Ok(out)
}

/// Result of a coverage check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverReport {
    pub r: f64,
    pub rho: f64,
    pub targets: usize,
    pub worst_residual: f64,
    pub covered: bool,
    /// Present in bisect mode: largest verified covered radius.
    pub covered_radius: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverMode {
    Verify,
    Bisect,
}

/// Worker cap for the cover-check target loop, from `LIPQUOT_THREADS`
/// (default 1, clamped to 64).
fn worker_count() -> usize {
    std::env::var("LIPQUOT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
        .min(64)
}

/// Check that the image of the closed `r`-ball around `center` covers the
/// closed `rho`-ball around the image of the center: `budget` targets on the
/// `rho`-sphere are solved for preimages; `covered` means every residual is
/// below `1e-6`.  In bisect mode, 20 bisection steps shrink `rho` to the
/// largest verified covered radius.
pub fn cover_check(
    map: &CompiledMap,
    center: &[f64],
    r: f64,
    rho: f64,
    budget: usize,
    seed: u64,
    mode: CoverMode,
) -> Result<CoverReport> {
    if !map.in_domain(center) {
        return Err(Error::OutsideDomain("cover center".into()));
    }
    let t0 = map.eval(center)?;
    let codomain = map.codomain();
    let out_dim = map.out_dim();
    // Deterministic targets: axis directions first, then seeded random ones.
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(budget);
    for i in 0..out_dim {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; out_dim];
            d[i] = sign;
            dirs.push(d);
        }
    }
    let mut rng = stream(seed, "cover-targets");
    let unit = Ball { space: codomain, center: vec![0.0; out_dim], radius: 1.0 };
    while dirs.len() < budget {
        let d = unit.sample(&mut rng);
        if codomain.norm(&d)? > 1e-6 {
            dirs.push(d);
        }
    }
    dirs.truncate(budget.max(1));
    for d in dirs.iter_mut() {
        let n = codomain.norm(d)?;
        d.iter_mut().for_each(|t| *t /= n);
    }

    let opts = SolveOptions { starts: 32, iters: 500, tol: 1e-6, seed };
    let solve_one = |d: &[f64], rho: f64| -> f64 {
        let target: Vec<f64> = t0.iter().zip(d).map(|(a, b)| a + rho * b).collect();
        let hints = map.preimage_hints(&target, center, r);
        solve_preimage(
            &|p| map.eval(p),
            &target,
            &codomain,
            center,
            r,
            &|p| {
                map.in_domain(p)
                    && map.domain_dist(p, center).map(|t| t <= r * (1.0 + 1e-12)).unwrap_or(false)
            },
            &hints,
            &opts,
        )
        .residual
    };
    let workers = worker_count().min(dirs.len().max(1));
    let attempt = |rho: f64| -> Result<f64> {
        // The result is the maximum residual over a fixed target list, so
        // chunking across threads cannot change it.
        if workers > 1 && mode == CoverMode::Verify {
            let chunk = dirs.len().div_ceil(workers);
            let worst = std::thread::scope(|s| {
                let handles: Vec<_> = dirs
                    .chunks(chunk)
                    .map(|part| {
                        s.spawn(move || {
                            part.iter().map(|d| solve_one(d, rho)).fold(0.0f64, f64::max)
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("cover worker panicked")).fold(0.0f64, f64::max)
            });
            return Ok(worst);
        }
        let mut worst = 0.0f64;
        for d in &dirs {
            worst = worst.max(solve_one(d, rho));
            if worst > opts.tol && mode == CoverMode::Bisect {
                break; // this rho already failed
            }
        }
        Ok(worst)
    };

    match mode {
        CoverMode::Verify => {
            let worst = attempt(rho)?;
            Ok(CoverReport {
                r,
                rho,
                targets: dirs.len(),
                worst_residual: worst,
                covered: worst <= opts.tol,
                covered_radius: None,
            })
        }
        CoverMode::Bisect => {
            let (mut lo, mut hi) = (0.0f64, rho);
            let mut worst_at_lo = 0.0;
            for _ in 0..20 {
                let mid = 0.5 * (lo + hi);
                let w = attempt(mid)?;
                if w <= opts.tol {
                    lo = mid;
                    worst_at_lo = w;
                } else {
                    hi = mid;
                }
            }
            Ok(CoverReport {
                r,
                rho,
                targets: dirs.len(),
                worst_residual: worst_at_lo,
                covered: lo > 0.0,
                covered_radius: Some(lo),
            })
        }
    }
}

/// Finite-difference Jacobian with its smallest singular value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JacobianReport {
    pub jacobian: Vec<Vec<f64>>,
    pub min_singular_value: f64,
    pub step: f64,
}

pub fn jacobian_check(map: &CompiledMap, point: &[f64], h: f64) -> Result<JacobianReport> {
    if h <= 0.0 {
        return Err(Error::BadArgument(format!("step h = {h} must be positive")));
    }
    let in_dim = map.in_dim();
    let out_dim = map.out_dim();
    let mut jac = vec![vec![0.0; in_dim]; out_dim];
    for j in 0..in_dim {
        let mut plus = point.to_vec();
        plus[j] += h;
        let mut minus = point.to_vec();
        minus[j] -= h;
        let fp = map.eval(&plus)?;
        let fm = map.eval(&minus)?;
        for i in 0..out_dim {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let min_sv = min_singular_value(&jac);
    Ok(JacobianReport { jacobian: jac, min_singular_value: min_sv, step: h })
}

/// Smallest singular value of a dense matrix via power iteration on the
/// smaller Gram matrix and its spectral reflection.
pub fn min_singular_value(mat: &[Vec<f64>]) -> f64 {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    // Gram on the smaller side: its eigenvalues are squared singular values.
    let side = rows.min(cols);
    let mut g = vec![vec![0.0; side]; side];
    for i in 0..side {
        for j in 0..side {
            let mut s = 0.0;
            if rows <= cols {
                for k in 0..cols {
                    s += mat[i][k] * mat[j][k];
                }
            } else {
                for k in 0..rows {
                    s += mat[k][i] * mat[k][j];
                }
            }
            g[i][j] = s;
        }
    }
    let lam_max = power_iteration(&g);
    if lam_max <= 1e-30 {
        return 0.0;
    }
    // Reflect: largest eigenvalue of (lam_max I - G) is lam_max - lam_min.
    let mut shifted = g.clone();
    for i in 0..side {
        for j in 0..side {
            shifted[i][j] = -shifted[i][j];
        }
        shifted[i][i] += lam_max;
    }
    let mu = power_iteration(&shifted);
    (lam_max - mu).max(0.0).sqrt()
}

fn power_iteration(g: &[Vec<f64>]) -> f64 {
    let n = g.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * i as f64).collect();
    let mut lam = 0.0;
    for _ in 0..20_000 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                w[i] += g[i][j] * v[j];
            }
        }
        let norm = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm <= 1e-300 {
            return 0.0;
        }
        let new_lam: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let rel = (new_lam - lam).abs() / new_lam.abs().max(1e-300);
        v = w.iter().map(|t| t / norm).collect();
        lam = new_lam;
        if rel < 1e-12 {
            break;
        }
    }
    lam.max(0.0)
}

/// Extrapolated directional derivative with its quotient trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionalDerivative {
    pub limit: Vec<f64>,
    /// `(t, quotient)` pairs, largest scale first.
    pub trace: Vec<(f64, Vec<f64>)>,
}

/// Difference quotients along `dir` at scales `t_min * 2^j`, extrapolated to
/// zero step (first-order Richardson).  Errors if the extrapolants at the
/// smallest scales still oscillate by more than `1e-4`.
pub fn directional_derivative(
    map: &CompiledMap,
    point: &[f64],
    dir: &[f64],
    t_min: f64,
) -> Result<DirectionalDerivative> {
    if t_min <= 0.0 {
        return Err(Error::BadArgument(format!("t_min = {t_min} must be positive")));
    }
    let f0 = map.eval(point)?;
    let out_dim = f0.len();
    let mut quotients: Vec<(f64, Vec<f64>)> = Vec::new();
    for j in (0..=16).rev() {
        let t = t_min * exp2i(j);
        let shifted: Vec<f64> = point.iter().zip(dir).map(|(a, b)| a + t * b).collect();
        match map.eval(&shifted) {
            Ok(ft) => {
                let q: Vec<f64> = (0..out_dim).map(|i| (ft[i] - f0[i]) / t).collect();
                quotients.push((t, q));
            }
            Err(_) => {
                quotients.clear(); // restart below the domain boundary
            }
        }
    }
    if quotients.len() < 3 {
        return Err(Error::NoDirectionalLimit(f64::INFINITY));
    }
    // Richardson pairs on the tail (smaller t at the end of the list).
    let extrap = |big: &Vec<f64>, small: &Vec<f64>| -> Vec<f64> {
        big.iter().zip(small).map(|(b, s)| 2.0 * s - b).collect()
    };
    let k = quotients.len();
    let r1 = extrap(&quotients[k - 2].1, &quotients[k - 1].1);
    let r2 = extrap(&quotients[k - 3].1, &quotients[k - 2].1);
    let osc = r1
        .iter()
        .zip(&r2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if osc > 1e-4 {
        return Err(Error::NoDirectionalLimit(osc));
    }
    Ok(DirectionalDerivative { limit: r1, trace: quotients })
}

/// Solution to the slotwise inverse problem of the gated-sum map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Prop311Solution {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub residual: f64,
    /// `|z - x| / |f(x) - y|` in the domain/codomain norms.
    pub ratio: f64,
}

/// Solve `f(z) = y` for the gated-sum map by the slotwise construction: for
/// each slot either bump one coordinate above its gate threshold (bracketing
/// a root of the slot value, which is monotone in the bump), or rescale the
/// already-active positive part.  `z` differs from `x` only on the touched
/// coordinates.
pub fn prop311_solve(n: usize, m: usize, p: f64, x: &[f64], y: &[f64]) -> Result<Prop311Solution> {
    if x.len() != n * m {
        return Err(Error::DimMismatch { expected: n * m, got: x.len() });
    }
    if y.len() != n {
        return Err(Error::DimMismatch { expected: n, got: y.len() });
    }
    let fx = prop311_eval(n, m, p, x)?;
    let mut z = x.to_vec();
    for slot in 0..n {
        let b = y[slot] - fx[slot];
        if b.abs() <= 1e-14 {
            continue;
        }
        // The map is odd slotwise; reduce to a positive increment.
        let sign = b.signum();
        let a: Vec<f64> = x[slot * m..(slot + 1) * m].iter().map(|&t| sign * t).collect();
        let bb = b.abs();
        let target = slot_value(m, p, &a)? + bb;
        let space = NormedSpace::lp(m, p)?;
        let pos: Vec<f64> = a.iter().enumerate().map(|(k, &t)| gate(k, t.max(0.0))).collect();
        let pos_norm = space.norm(&pos)?;
        let mut w_slot = vec![0.0; m];
        if pos_norm <= bb {
            // Bump one coordinate above its threshold.
            let Some(k_star) = (0..m).find(|&k| bb + a[k] > exp2i(-(k as i32))) else {
                return Err(Error::TruncationTooSmall(m));
            };
            let value_at = |alpha: f64| -> Result<f64> {
                let mut aa = a.clone();
                aa[k_star] += alpha;
                slot_value(m, p, &aa)
            };
            let mut hi = 10.0 * bb;
            let mut grow = 0;
            while value_at(hi)? < target && grow < 80 {
                hi *= 2.0;
                grow += 1;
            }
            if value_at(hi)? < target {
                return Err(Error::SolveFailure { residual: target - value_at(hi)?, tol: 1e-8 });
            }
            let mut lo = 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if value_at(mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            w_slot[k_star] = 0.5 * (lo + hi);
        } else {
            // Rescale the active positive support.
            let support: Vec<usize> =
                (0..m).filter(|&k| a[k] > 0.5 * exp2i(-(k as i32))).collect();
            let value_at = |gamma: f64| -> Result<f64> {
                let mut aa = a.clone();
                for &k in &support {
                    aa[k] = gamma * a[k];
                }
                slot_value(m, p, &aa)
            };
            let mut hi = 1.0 + 2.0 * bb / pos_norm + 1.0;
            let mut grow = 0;
            while value_at(hi)? < target && grow < 80 {
                hi *= 2.0;
                grow += 1;
            }
            let mut lo = 1.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if value_at(mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let gamma = 0.5 * (lo + hi);
            for &k in &support {
                w_slot[k] = (gamma - 1.0) * a[k];
            }
        }
        for k in 0..m {
            z[slot * m + k] = x[slot * m + k] + sign * w_slot[k];
        }
    }
    let fz = prop311_eval(n, m, p, &z)?;
    let codomain = NormedSpace::lp(n, p)?;
    let resid: Vec<f64> = fz.iter().zip(y).map(|(a, b)| a - b).collect();
    let residual = codomain.norm(&resid)?;
    if residual > 1e-8 {
        return Err(Error::SolveFailure { residual, tol: 1e-8 });
    }
    let domain = NormedSpace::lp(n * m, p)?;
    let dz = domain.dist(&z, x)?;
    let dy: Vec<f64> = fx.iter().zip(y).map(|(a, b)| a - b).collect();
    let dist_y = codomain.norm(&dy)?;
    let w: Vec<f64> = z.iter().zip(x).map(|(a, b)| a - b).collect();
    let ratio = if dist_y == 0.0 { 0.0 } else { dz / dist_y };
    Ok(Prop311Solution { z, w, residual, ratio })
}

fn slot_value(m: usize, p: f64, a: &[f64]) -> Result<f64> {
    let space = NormedSpace::lp(m, p)?;
    let pos: Vec<f64> = a.iter().enumerate().map(|(k, &t)| gate(k, t.max(0.0))).collect();
    let neg: Vec<f64> = a.iter().enumerate().map(|(k, &t)| gate(k, (-t).max(0.0))).collect();
    Ok(space.norm(&pos)? - space.norm(&neg)?)
}
