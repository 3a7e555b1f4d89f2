//! Finite-dimensional `l_p` spaces: norms, norming functionals, and a
//! sampled modulus-of-smoothness radius used by the affine-approximation
//! search.

use crate::rng::stream;
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Exponent of an `l_p` norm, `1 <= p <= inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// `R^dim` equipped with the `l_p` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormedSpace {
    pub dim: usize,
    pub p: Exponent,
}

/// A norming functional: the unit dual vector that attains the norm of the
/// vector it was derived from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    pub coords: Vec<f64>,
}

impl DualVector {
    /// Pairing `<x*, v>`.
    pub fn pair(&self, v: &[f64]) -> f64 {
        self.coords.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

impl NormedSpace {
    pub fn lp(dim: usize, p: f64) -> Result<Self> {
        if !(1.0..=f64::INFINITY).contains(&p) || p.is_nan() {
            return Err(Error::BadExponent(p));
        }
        if p.is_infinite() {
            return Ok(Self { dim, p: Exponent::Infinity });
        }
        Ok(Self { dim, p: Exponent::Finite(p) })
    }

    pub fn linf(dim: usize) -> Self {
        Self { dim, p: Exponent::Infinity }
    }

    pub fn l2(dim: usize) -> Self {
        Self { dim, p: Exponent::Finite(2.0) }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// The `l_p` norm of `v`.
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check_dim(v)?;
        Ok(lp_norm(self.p, v))
    }

    pub fn dist(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        Ok(lp_norm(self.p, &d))
    }

    /// Norming functional of `v`: the unique unit dual vector with
    /// `<x*, v> = ||v||`.  Defined only for smooth norms (`1 < p < inf`).
    pub fn duality_map(&self, v: &[f64]) -> Result<DualVector> {
        self.check_dim(v)?;
        let p = match self.p {
            Exponent::Finite(p) if p > 1.0 => p,
            other => return Err(Error::NonSmoothNorm(other.to_string())),
        };
        let n = lp_norm(self.p, v);
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        // x*_i = sign(v_i) |v_i/||v|||^{p-1}; then ||x*||_q = 1 and <x*,v> = ||v||.
        let coords = v
            .iter()
            .map(|&t| {
                let s = t / n;
                s.signum() * s.abs().powf(p - 1.0)
            })
            .collect();
        Ok(DualVector { coords })
    }
}

fn lp_norm(p: Exponent, v: &[f64]) -> f64 {
    match p {
        Exponent::Infinity => v.iter().fold(0.0, |m, &t| m.max(t.abs())),
        Exponent::Finite(p) if p == 1.0 => v.iter().map(|t| t.abs()).sum(),
        Exponent::Finite(p) if p == 2.0 => v.iter().map(|t| t * t).sum::<f64>().sqrt(),
        Exponent::Finite(p) => {
            let m = v.iter().fold(0.0f64, |m, &t| m.max(t.abs()));
            if m == 0.0 {
                return 0.0;
            }
            // Scale out the max to avoid overflow for large p.
            m * v.iter().map(|&t| (t.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// A closed ball in a normed space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ball {
    pub space: NormedSpace,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn unit(space: NormedSpace) -> Self {
        let center = vec![0.0; space.dim];
        Self { space, center, radius: 1.0 }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        self.space.dist(&self.center, v).map(|d| d <= self.radius * (1.0 + 1e-12)).unwrap_or(false)
    }

    /// Deterministic sample roughly uniform over the ball: direction from a
    /// cube sample normalized in the ball's norm, radius `u^{1/dim}`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let dim = self.space.dim;
        let mut w: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = lp_norm(self.space.p, &w);
        if n == 0.0 {
            return self.center.clone();
        }
        let r = self.radius * rng.gen_range(0.0f64..=1.0).powf(1.0 / dim as f64);
        for (i, t) in w.iter_mut().enumerate() {
            *t = self.center[i] + r * (*t / n);
        }
        w
    }
}

/// Number of Monte-Carlo perturbation samples per candidate radius when
/// estimating the smoothness radius by sampling, and the fixed internal seed
/// that makes the estimate a pure function of `(space, eps)`.
const SMOOTHNESS_SAMPLES: usize = 20_000;
const SMOOTHNESS_SEED: u64 = 0x51e5;

/// Fixed sample set used by [`smoothness_delta`]: unit base points `x` with
/// their norming functionals, plus unit perturbation directions `u` and
/// radial fractions `s in (0,1]`.  Sharing one sample set across candidate
/// radii and accuracies keeps the estimate monotone in `eps`.
struct SmoothnessSamples {
    base: Vec<(Vec<f64>, DualVector)>,
    dirs: Vec<(Vec<f64>, f64)>,
}

fn smoothness_samples(space: &NormedSpace, count: usize) -> Result<SmoothnessSamples> {
    let mut rng = stream(SMOOTHNESS_SEED, "smoothness");
    let ball = Ball::unit(*space);
    let mut base = Vec::new();
    while base.len() < 16 {
        let mut x = ball.sample(&mut rng);
        let n = space.norm(&x)?;
        if n < 1e-6 {
            continue;
        }
        x.iter_mut().for_each(|t| *t /= n);
        let xs = space.duality_map(&x)?;
        base.push((x, xs));
    }
    let mut dirs = Vec::with_capacity(count);
    while dirs.len() < count {
        let mut u = ball.sample(&mut rng);
        let n = space.norm(&u)?;
        if n < 1e-6 {
            continue;
        }
        u.iter_mut().for_each(|t| *t /= n);
        let s: f64 = rng.gen_range(1e-3..=1.0);
        dirs.push((u, s));
    }
    Ok(SmoothnessSamples { base, dirs })
}

/// `true` if every sampled perturbation `y` of norm `<= delta` satisfies
/// `| ||x+y|| - 1 - <x*, y> | <= eps ||y||` at every sampled unit `x`.
fn smoothness_holds(space: &NormedSpace, samples: &SmoothnessSamples, delta: f64, eps: f64) -> bool {
    for (x, xs) in &samples.base {
        for (u, s) in &samples.dirs {
            let t = s * delta;
            let y: Vec<f64> = x.iter().zip(u).map(|(a, b)| a + t * b).collect();
            let remainder = lp_norm(space.p, &y) - 1.0 - t * xs.pair(u);
            if remainder.abs() > eps * t {
                return false;
            }
        }
    }
    true
}

/// Largest certified radius `delta <= 0.49` such that the first-order
/// expansion of the norm around any unit vector is accurate to `eps ||y||`
/// for all perturbations `||y|| <= delta`.
///
/// For `p = 2` the closed form `min(2 eps, 0.49)` is returned.  For other
/// smooth exponents the radius is bracketed by bisection against a seeded
/// Monte-Carlo certificate and shrunk by a 0.9 safety factor.  The result is
/// nondecreasing in `eps`.
pub fn smoothness_delta(space: &NormedSpace, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::BadAccuracy(eps));
    }
    match space.p {
        Exponent::Finite(p) if p == 2.0 => Ok((2.0 * eps).min(0.49)),
        Exponent::Finite(p) if p > 1.0 => {
            let samples = smoothness_samples(space, SMOOTHNESS_SAMPLES / 16)?;
            let cap = 0.49;
            if smoothness_holds(space, &samples, cap, eps) {
                return Ok(cap);
            }
            let (mut lo, mut hi) = (0.0, cap);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if smoothness_holds(space, &samples, mid, eps) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(0.9 * lo)
        }
        other => Err(Error::NonSmoothNorm(other.to_string())),
    }
}

/// Re-certify a candidate smoothness radius with a fresh sample budget.
/// Returns the worst sampled ratio `|remainder| / ||y||`, which must be
/// `<= eps` for the radius to be certified.
pub fn certify_smoothness_delta(
    space: &NormedSpace,
    delta: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = stream(seed, "smoothness-certify");
    let ball = Ball::unit(*space);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < samples {
        let mut x = ball.sample(&mut rng);
        let n = space.norm(&x)?;
        if n < 1e-6 {
            continue;
        }
        x.iter_mut().for_each(|t| *t /= n);
        let xs = space.duality_map(&x)?;
        let mut u = ball.sample(&mut rng);
        let un = space.norm(&u)?;
        if un < 1e-6 {
            continue;
        }
        u.iter_mut().for_each(|t| *t /= un);
        let t = rng.gen_range(1e-3..=1.0) * delta;
        let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + t * b).collect();
        let remainder = lp_norm(space.p, &y) - 1.0 - t * xs.pair(&u);
        worst = worst.max(remainder.abs() / t);
        done += 1;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn norms_match_hand_values() {
        let v = [3.0, -4.0];
        assert_abs_diff_eq!(NormedSpace::l2(2).norm(&v).unwrap(), 5.0);
        assert_abs_diff_eq!(NormedSpace::lp(2, 1.0).unwrap().norm(&v).unwrap(), 7.0);
        assert_abs_diff_eq!(NormedSpace::linf(2).norm(&v).unwrap(), 4.0);
        let p3 = NormedSpace::lp(2, 3.0).unwrap();
        assert_abs_diff_eq!(p3.norm(&v).unwrap(), 91.0f64.powf(1.0 / 3.0), epsilon = 1e-12);
    }

    #[test]
    fn norm_rejects_wrong_dimension() {
        assert!(matches!(
            NormedSpace::l2(3).norm(&[1.0]),
            Err(Error::DimMismatch { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn zero_vector_norm_is_zero_all_exponents() {
        for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
            let s = NormedSpace::lp(3, p).unwrap();
            assert_eq!(s.norm(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        }
    }

    #[test]
    fn duality_map_norms_and_pairs() {
        for p in [1.5, 2.0, 3.0, 7.0] {
            let s = NormedSpace::lp(3, p).unwrap();
            let v = [1.0, -2.0, 0.5];
            let vs = s.duality_map(&v).unwrap();
            let q = p / (p - 1.0);
            let dual = NormedSpace::lp(3, q).unwrap();
            assert_abs_diff_eq!(dual.norm(&vs.coords).unwrap(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(vs.pair(&v), s.norm(&v).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn duality_map_rejects_non_smooth_and_zero() {
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        assert!(matches!(l1.duality_map(&[1.0, 0.0]), Err(Error::NonSmoothNorm(_))));
        let linf = NormedSpace::linf(2);
        assert!(matches!(linf.duality_map(&[1.0, 0.0]), Err(Error::NonSmoothNorm(_))));
        let l2 = NormedSpace::l2(2);
        assert!(matches!(l2.duality_map(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn smoothness_delta_euclidean_closed_form() {
        let s = NormedSpace::l2(3);
        assert_abs_diff_eq!(smoothness_delta(&s, 0.1).unwrap(), 0.2);
        assert_abs_diff_eq!(smoothness_delta(&s, 0.3).unwrap(), 0.49);
    }

    #[test]
    fn smoothness_delta_p4_positive_and_certified() {
        let s = NormedSpace::lp(3, 4.0).unwrap();
        let eps = 0.1;
        let delta = smoothness_delta(&s, eps).unwrap();
        assert!(delta > 0.0, "delta = {delta}");
        let worst = certify_smoothness_delta(&s, delta, 100_000, 11).unwrap();
        assert!(worst <= eps, "worst sampled ratio {worst} > {eps}");
    }

    #[test]
    fn smoothness_delta_monotone_in_eps() {
        let s = NormedSpace::lp(2, 4.0).unwrap();
        let mut last = 0.0;
        for eps in [0.05, 0.1, 0.2, 0.3] {
            let d = smoothness_delta(&s, eps).unwrap();
            assert!(d >= last - 1e-12, "delta decreased: {d} < {last}");
            last = d;
        }
    }

    #[test]
    fn smoothness_delta_rejects_bad_inputs() {
        let s = NormedSpace::l2(2);
        assert!(matches!(smoothness_delta(&s, 0.0), Err(Error::BadAccuracy(_))));
        assert!(matches!(smoothness_delta(&s, 0.5), Err(Error::BadAccuracy(_))));
        let l1 = NormedSpace::lp(2, 1.0).unwrap();
        assert!(matches!(smoothness_delta(&l1, 0.1), Err(Error::NonSmoothNorm(_))));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let ball = Ball { space: NormedSpace::lp(4, 3.0).unwrap(), center: vec![1.0, 0.0, 0.0, 0.0], radius: 0.5 };
        let mut rng = stream(3, "ball");
        for _ in 0..200 {
            let x = ball.sample(&mut rng);
            assert!(ball.contains(&x));
        }
    }
}

