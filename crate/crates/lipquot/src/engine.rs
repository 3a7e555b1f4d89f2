//! Shared constrained preimage solver.
//!
//! Every "does this ball cover that target" question in the crate is
//! answered by the same audited routine: seeded multi-start damped
//! coordinate descent on the residual, restricted to a caller-supplied
//! closed ball (membership is a closure so product-norm balls work too).
//! Starts are the caller's hints, the ball center, then seeded random
//! points; a start whose descent stalls is abandoned for the next one.

use crate::rng::stream;
use crate::space::NormedSpace;
use crate::Result;
use rand::Rng;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Number of starting points (hints count toward this).
    pub starts: usize,
    /// Coordinate-descent sweeps per start.
    pub iters: usize,
    /// Residual at which the solve is accepted.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { starts: 32, iters: 500, tol: 1e-6, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub point: Vec<f64>,
    pub residual: f64,
    pub evals: usize,
}

/// Minimize `||map(p) - target||` over the closed ball described by
/// `in_ball` (centered at `center` with circumscribing radius `radius` for
/// start sampling).  Returns the best point found; the caller decides
/// whether the residual is acceptable.
pub fn solve_preimage(
    map: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    target: &[f64],
    codomain: &NormedSpace,
    center: &[f64],
    radius: f64,
    in_ball: &dyn Fn(&[f64]) -> bool,
    hints: &[Vec<f64>],
    opts: &SolveOptions,
) -> SolveOutcome {
    let dim = center.len();
    let mut evals = 0usize;
    let residual = |p: &[f64]| -> f64 {
        if !in_ball(p) {
            return f64::INFINITY;
        }
        match map(p) {
            Ok(v) => {
                let d: Vec<f64> = v.iter().zip(target).map(|(a, b)| a - b).collect();
                codomain.norm(&d).unwrap_or(f64::INFINITY)
            }
            Err(_) => f64::INFINITY,
        }
    };

    let mut rng = stream(opts.seed, "preimage-starts");
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(opts.starts);
    for h in hints {
        // Infeasible hints must not crowd out the center and random starts.
        if starts.len() < opts.starts && in_ball(h) {
            starts.push(h.clone());
        }
    }
    starts.push(center.to_vec());
    let mut attempts = 0;
    while starts.len() < opts.starts && attempts < 50 * opts.starts {
        attempts += 1;
        let p: Vec<f64> = (0..dim)
            .map(|i| center[i] + radius * rng.gen_range(-1.0..=1.0))
            .collect();
        if in_ball(&p) {
            starts.push(p);
        }
    }

    let mut best_point = center.to_vec();
    let mut best_res = f64::INFINITY;
    let polish = opts.tol * 1e-3;
    for start in starts {
        let mut p = start;
        let mut r = residual(&p);
        evals += 1;
        if !r.is_finite() {
            continue;
        }
        let mut h = radius / 4.0;
        for _ in 0..opts.iters {
            let mut improved = false;
            for c in 0..dim {
                for sign in [1.0f64, -1.0] {
                    let old = p[c];
                    p[c] = old + sign * h;
                    let rr = residual(&p);
                    evals += 1;
                    if rr < r {
                        r = rr;
                        improved = true;
                    } else {
                        p[c] = old;
                    }
                }
            }
            if !improved {
                h *= 0.5;
                if h < 1e-15 * radius.max(1.0) {
                    break;
                }
            }
            if r <= polish {
                break;
            }
        }
        if r < best_res {
            best_res = r;
            best_point = p;
        }
        if best_res <= polish {
            break;
        }
    }
    SolveOutcome { point: best_point, residual: best_res, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l2(dim: usize) -> NormedSpace {
        NormedSpace::l2(dim)
    }

    #[test]
    fn recovers_linear_preimage() {
        let map = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![2.0 * p[0] + p[1], p[1] - p[0]]) };
        let center = [0.0, 0.0];
        let target = [1.0, 0.5];
        let out = solve_preimage(
            &map,
            &target,
            &l2(2),
            &center,
            2.0,
            &|p| p.iter().map(|t| t * t).sum::<f64>().sqrt() <= 2.0,
            &[],
            &SolveOptions { seed: 1, ..Default::default() },
        );
        assert!(out.residual < 1e-8, "residual {}", out.residual);
    }

    #[test]
    fn respects_ball_constraint() {
        // Target reachable only outside the ball: residual stays large.
        let map = |p: &[f64]| -> Result<Vec<f64>> { Ok(p.to_vec()) };
        let out = solve_preimage(
            &map,
            &[5.0],
            &l2(1),
            &[0.0],
            1.0,
            &|p| p[0].abs() <= 1.0,
            &[],
            &SolveOptions { seed: 2, ..Default::default() },
        );
        assert!(out.residual >= 4.0 - 1e-9);
        assert!(out.point[0].abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn hints_are_used_first() {
        let map = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![p[0] * p[0]]) };
        let out = solve_preimage(
            &map,
            &[4.0],
            &l2(1),
            &[0.0],
            3.0,
            &|p| p[0].abs() <= 3.0,
            &[vec![2.0]],
            &SolveOptions { starts: 1, iters: 5, tol: 1e-9, seed: 3 },
        );
        assert!(out.residual < 1e-12, "residual {}", out.residual);
    }
}
