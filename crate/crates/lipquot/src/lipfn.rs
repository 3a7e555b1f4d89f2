//! Function handles and sampled Lipschitz-type constants.
//!
//! All estimates produced here are lower bounds by construction (they are
//! maxima of difference quotients over sampled pairs, sharpened by local
//! hill climbing).  Callers that need an upper bound must apply explicit
//! slack.

use crate::engine::{solve_preimage, SolveOptions};
use crate::rng::stream;
use crate::space::{Ball, NormedSpace};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A black-box function on a ball with declared metadata.
pub struct LipschitzFunction {
    pub domain: Ball,
    pub codomain: NormedSpace,
    /// Declared (not verified) Lipschitz constant, if the caller has one.
    pub declared_lip: Option<f64>,
    eval: Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl LipschitzFunction {
    pub fn new(
        domain: Ball,
        codomain: NormedSpace,
        declared_lip: Option<f64>,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        Self { domain, codomain, declared_lip, eval: Box::new(eval) }
    }

    /// Scalar-valued convenience constructor.
    pub fn scalar(
        domain: Ball,
        declared_lip: Option<f64>,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(domain, NormedSpace::l2(1), declared_lip, move |x| vec![f(x)])
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.domain.space.dim {
            return Err(Error::DimMismatch { expected: self.domain.space.dim, got: x.len() });
        }
        let y = (self.eval)(x);
        if y.len() != self.codomain.dim {
            return Err(Error::DimMismatch { expected: self.codomain.dim, got: y.len() });
        }
        Ok(y)
    }

}

/// A sampled lower bound for `Lip(f; t) = sup { |f(x)-f(y)| / |x-y| :
/// |x-y| >= t }` together with the pair that attains it.
#[derive(Clone, Debug)]
pub struct LipEstimate {
    pub t: f64,
    pub value: f64,
    pub budget: usize,
    pub pair: Option<(Vec<f64>, Vec<f64>)>,
}

const REFINE_STEPS: usize = 50;
const MIN_SEPARATION: f64 = 1e-12;

fn pair_ratio(
    domain: &Ball,
    codomain: &NormedSpace,
    eval: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    let d = domain.space.dist(x, y)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    let fx = eval(x)?;
    let fy = eval(y)?;
    let diff: Vec<f64> = fx.iter().zip(&fy).map(|(a, b)| a - b).collect();
    Ok(codomain.norm(&diff)? / d)
}

fn refine_pair(
    domain: &Ball,
    codomain: &NormedSpace,
    eval: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    t: f64,
    mut x: Vec<f64>,
    mut y: Vec<f64>,
    mut best: f64,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let dim = domain.space.dim;
    let mut h = domain.radius / 4.0;
    let floor = t.max(MIN_SEPARATION);
    for _ in 0..REFINE_STEPS {
        let mut improved = false;
        for side in 0..2 {
            for c in 0..dim {
                for sign in [1.0f64, -1.0] {
                    let mut nx = x.clone();
                    let mut ny = y.clone();
                    let point = if side == 0 { &mut nx } else { &mut ny };
                    point[c] += sign * h;
                    if !domain.contains(if side == 0 { &nx } else { &ny }) {
                        continue;
                    }
                    if domain.space.dist(&nx, &ny)? < floor {
                        continue;
                    }
                    let r = pair_ratio(domain, codomain, eval, &nx, &ny)?;
                    if r > best {
                        best = r;
                        x = nx;
                        y = ny;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    Ok((x, y, best))
}

/// Closure-based core of [`lip_at_scale`], usable with borrowing evaluators.
pub fn lip_at_scale_fn(
    domain: &Ball,
    codomain: &NormedSpace,
    eval: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    t: f64,
    budget: usize,
    seed: u64,
) -> Result<LipEstimate> {
    let diameter = 2.0 * domain.radius;
    if t < 0.0 || t >= diameter {
        return Err(Error::EmptyPairSet { t, diameter });
    }
    let mut rng = stream(seed, "lip-pairs");
    let floor = t.max(MIN_SEPARATION);
    let mut sampled_best = 0.0f64;
    let mut value = 0.0f64;
    let mut pair: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut feasible = 0usize;
    for _ in 0..budget {
        let mut x = domain.sample(&mut rng);
        let mut y = domain.sample(&mut rng);
        let d = domain.space.dist(&x, &y)?;
        if d < floor {
            // Near-diameter scales make random pairs infeasible; rebuild the
            // pair along the sampled direction on a chord through the center,
            // where any separation below the diameter fits inside the ball.
            if d <= MIN_SEPARATION {
                continue;
            }
            let w: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (b - a) / d).collect();
            let r = domain.radius;
            let s = floor + rng.gen::<f64>() * (2.0 * r - floor).max(0.0);
            let s = s.min(2.0 * r * (1.0 - 1e-12)).max(floor);
            let alpha = -r + rng.gen::<f64>() * (2.0 * r - s);
            x = domain.center.iter().zip(&w).map(|(c, wi)| c + alpha * wi).collect();
            y = domain.center.iter().zip(&w).map(|(c, wi)| c + (alpha + s) * wi).collect();
            if domain.space.dist(&x, &y)? < floor {
                continue;
            }
        }
        feasible += 1;
        let r = pair_ratio(domain, codomain, eval, &x, &y)?;
        if r > sampled_best {
            sampled_best = r;
            let (rx, ry, refined) = refine_pair(domain, codomain, eval, t, x, y, r)?;
            if refined > value {
                value = refined;
                pair = Some((rx, ry));
            }
        }
    }
    if feasible == 0 {
        return Err(Error::EmptyPairSet { t, diameter });
    }
    Ok(LipEstimate { t, value, budget, pair })
}

/// Sampled estimate of the scale-restricted Lipschitz constant `Lip(f; t)`.
///
/// Pairs are drawn from a stream that depends only on `seed`, so estimates
/// for the same seed are monotone: doubling `budget` extends the stream and
/// never lowers the value, and the feasible pair sets for different `t` are
/// nested.  Each pair that raises the running maximum is sharpened by
/// coordinate-wise hill climbing with shrinking steps.
pub fn lip_at_scale(f: &LipschitzFunction, t: f64, budget: usize, seed: u64) -> Result<LipEstimate> {
    lip_at_scale_fn(&f.domain, &f.codomain, &|x| f.eval(x), t, budget, seed)
}

/// Lower-bound estimates of `Lip(f; t)` over a grid of scales, enforced to
/// be nonincreasing in `t` (a larger scale constrains the pair set more).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleProfile {
    pub ts: Vec<f64>,
    pub estimates: Vec<f64>,
}

pub fn scale_profile(f: &LipschitzFunction, ts: &[f64], budget: usize, seed: u64) -> Result<ScaleProfile> {
    let mut indexed: Vec<(usize, f64)> = ts.iter().copied().enumerate().collect();
    indexed.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    let mut estimates = vec![0.0; ts.len()];
    let mut running = 0.0f64;
    for (i, t) in indexed {
        let est = lip_at_scale(f, t, budget, seed)?;
        running = running.max(est.value);
        estimates[i] = running;
    }
    Ok(ScaleProfile { ts: ts.to_vec(), estimates })
}

/// One-sided co-Lipschitz style constant: may be unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CoBound {
    Finite(f64),
    Unbounded,
}

/// Estimates of the two-sided large-scale quotient constants of `f`: an
/// upper constant `c_up` with `f(B_eps(x)) ⊆ B_{c_up eps}(f x)` and a lower
/// constant `c_down` with `f(B_eps(x)) ⊇ B_{eps / c_down}(f x)`, both for
/// `eps >= eps0` inside the domain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LargeScaleConstants {
    pub c_up: f64,
    pub c_down: CoBound,
}

pub fn large_distance_constants(
    f: &LipschitzFunction,
    eps0: f64,
    budget: usize,
    seed: u64,
) -> Result<LargeScaleConstants> {
    if eps0 <= 0.0 || eps0 >= f.domain.radius {
        return Err(Error::BadArgument(format!(
            "eps0 = {eps0} must lie in (0, domain radius {})",
            f.domain.radius
        )));
    }
    // The expansion constant at scales >= eps0 is exactly the
    // scale-restricted Lipschitz constant at t = eps0.
    let c_up = lip_at_scale(f, eps0, budget, seed)?.value;

    // Co-Lipschitz side: bisect the covered radius around f(x) for sampled
    // centers whose eps0-ball stays in the domain.
    let mut rng = stream(seed, "large-scale-centers");
    let inner = Ball {
        space: f.domain.space,
        center: f.domain.center.clone(),
        radius: (f.domain.radius - eps0).max(0.0),
    };
    let opts = SolveOptions { starts: 8, iters: 150, tol: 1e-6, seed };
    let mut worst_ratio = 0.0f64;
    let mut unbounded = false;
    for _ in 0..4 {
        let x = inner.sample(&mut rng);
        let fx = f.eval(&x)?;
        let covered = |rho: f64, rng_seed: u64| -> Result<bool> {
            let mut trng = stream(rng_seed, "large-scale-targets");
            let sphere = Ball { space: f.codomain, center: fx.clone(), radius: 1.0 };
            for _ in 0..6 {
                let mut dir = sphere.sample(&mut trng);
                let d: Vec<f64> = dir.iter().zip(&fx).map(|(a, b)| a - b).collect();
                let n = f.codomain.norm(&d)?;
                if n < 1e-9 {
                    continue;
                }
                for (i, t) in dir.iter_mut().enumerate() {
                    *t = fx[i] + rho * d[i] / n;
                }
                let out = solve_preimage(
                    &|p| f.eval(p),
                    &dir,
                    &f.codomain,
                    &x,
                    eps0,
                    &|p| f.domain.space.dist(p, &x).map(|d| d <= eps0 * (1.0 + 1e-12)).unwrap_or(false),
                    &[],
                    &opts,
                );
                if out.residual > opts.tol {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        let (mut lo, mut hi) = (0.0f64, c_up.max(1.0) * eps0);
        for _ in 0..12 {
            let mid = 0.5 * (lo + hi);
            if mid > 0.0 && covered(mid, seed)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Radii at the scale of the solve tolerance are trivially "covered"
        // by staying put, so they certify nothing.
        if lo <= 10.0 * opts.tol {
            unbounded = true;
        } else {
            worst_ratio = worst_ratio.max(eps0 / lo);
        }
    }
    let c_down = if unbounded { CoBound::Unbounded } else { CoBound::Finite(worst_ratio) };
    Ok(LargeScaleConstants { c_up, c_down })
}
