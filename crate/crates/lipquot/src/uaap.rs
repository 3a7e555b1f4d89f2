//! Search for balls on which a Lipschitz function is approximated by an
//! affine map to within a guaranteed fraction of the ball radius.
//!
//! The scalar search normalizes the problem to a 1-Lipschitz function on the
//! unit ball, so certificates are exactly equivariant under rescaling by
//! powers of two.  It either returns a constant approximation (when the
//! function barely moves), or scans ball diameters downward on a geometric
//! grid for a scale `d` at which the scale-restricted Lipschitz constant is
//! nearly flat; the secant map through a near-extremal pair at that scale is
//! then an affine approximation on a ball whose radius is a definite
//! fraction `delta(eps) d / 2` of the scan scale.  Every certificate is
//! validated by independent sampling before it is returned.

use crate::affine::AffineMap;
use crate::lipfn::{lip_at_scale_fn, LipschitzFunction};
use crate::rng::stream;
use crate::space::{smoothness_delta, Ball, DualVector, NormedSpace};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct UaapParams {
    /// Target accuracy `eps in (0, 1/2)`.
    pub eps: f64,
    /// Pair budget per Lipschitz estimate.
    pub budget: usize,
    pub seed: u64,
    /// Multiplier applied to the left (upper-bound) estimate in the scale
    /// scan.  `1.0` compares raw estimates; larger values are stricter but
    /// can reject scales where the profile is exactly flat.
    pub scan_slack: f64,
    /// Multiplier allowed on the claimed bound during final validation.
    pub validation_slack: f64,
    /// Sample count for branch decisions and final validation.
    pub validation_samples: usize,
}

impl UaapParams {
    pub fn new(eps: f64, seed: u64) -> Self {
        Self { eps, budget: 600, seed, scan_slack: 1.0, validation_slack: 1.1, validation_samples: 2000 }
    }
}

/// A certificate that `|f - A| <= bound_claim` on the ball
/// `B_radius(center)`, with the normalized search data that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ApproxCertificate {
    pub center: Vec<f64>,
    pub radius: f64,
    pub map: AffineMap,
    pub eps: f64,
    /// Smoothness radius `delta(eps)` of the domain norm.
    pub delta: f64,
    /// Scale-doubling count: smallest `k` with `(1 + delta eps)^k eps > 1`.
    pub k: u32,
    /// Normalized scan scale (relative to the declared domain ball radius).
    pub d: f64,
    /// Normalized secant slope along the functional direction.
    pub slope: f64,
    /// Norming functional of the secant direction.
    pub functional: DualVector,
    /// Claimed absolute error bound on the ball.
    pub bound_claim: f64,
    /// `radius / (declared ball radius)` can never drop below this value;
    /// recomputable from `(eps, delta, k)` alone.
    pub radius_floor: f64,
    /// Worst absolute error observed during validation sampling.
    pub sampled_error: f64,
    /// Whether the trivial constant branch was taken.
    pub constant_branch: bool,
}

/// Smallest `k` with `(1 + delta eps)^k eps > 1`.
pub fn scale_counter(eps: f64, delta: f64) -> u32 {
    let step = (1.0 + delta * eps).ln();
    let k = ((1.0 / eps).ln() / step).floor() as u32;
    if (1.0 + delta * eps).powi(k as i32) * eps > 1.0 {
        k
    } else {
        k + 1
    }
}

/// Guaranteed lower bound for the certified ball radius as a fraction of the
/// searched ball radius: `(delta / 2) * (4^{-k} / 2)`.
pub fn normalized_radius_floor(delta: f64, k: u32) -> f64 {
    (delta / 2.0) * 0.5 * (4.0f64).powi(-(k.min(500) as i32))
}

const SCAN_GRID_START: f64 = 0.99;
const MAX_SCAN_STEPS: usize = 120;

/// Scalar affine-approximation search.
pub fn uaap_search_scalar(f: &LipschitzFunction, params: &UaapParams) -> Result<ApproxCertificate> {
    if !(params.eps > 0.0 && params.eps < 0.5) {
        return Err(Error::BadAccuracy(params.eps));
    }
    if f.codomain.dim != 1 {
        return Err(Error::DimMismatch { expected: 1, got: f.codomain.dim });
    }
    let lip = f.declared_lip.filter(|&l| l > 0.0).ok_or(Error::MissingLip)?;
    let eps = params.eps;
    let space = f.domain.space;
    let big_r = f.domain.radius;
    let center0 = f.domain.center.clone();

    // Normalized view: g(w) = f(center + R w) / (lip R) on the unit ball.
    let scale = lip * big_r;
    let g = |w: &[f64]| -> Result<f64> {
        let x: Vec<f64> = center0.iter().zip(w).map(|(c, t)| c + big_r * t).collect();
        Ok(f.eval(&x)?[0] / scale)
    };
    let unit = Ball::unit(space);
    let out = NormedSpace::l2(1);

    let delta = smoothness_delta(&space, eps)?;
    let k = scale_counter(eps, delta);
    let floor = normalized_radius_floor(delta, k);

    // Constant branch: does the function move more than 2 eps at all?
    let g0 = g(&vec![0.0; space.dim])?;
    let mut rng = stream(params.seed, "uaap-branch");
    let mut spread = 0.0f64;
    for _ in 0..params.validation_samples {
        let w = unit.sample(&mut rng);
        spread = spread.max((g(&w)? - g0).abs());
        if spread > 2.0 * eps {
            break;
        }
    }
    if spread <= 2.0 * eps {
        let map = AffineMap { linear: vec![vec![0.0; space.dim]], offset: vec![g0 * scale] };
        return Ok(ApproxCertificate {
            center: center0,
            radius: big_r,
            map,
            eps,
            delta,
            k,
            d: 1.0,
            slope: 0.0,
            functional: DualVector { coords: vec![0.0; space.dim] },
            bound_claim: 6.0 * eps * scale,
            radius_floor: floor,
            sampled_error: spread * scale,
            constant_branch: true,
        });
    }

    // Scale scan, large to small on a 2^{1/4} geometric grid: find d with
    // Lip(g; d/2) (upper slack) below (1 + delta eps) Lip(g; 2 d) (lower).
    let geval = |w: &[f64]| -> Result<Vec<f64>> { Ok(vec![g(w)?]) };
    let ratio = (2.0f64).powf(0.25);
    let d_min = 0.5 * (4.0f64).powi(-(k.min(25) as i32));
    let mut d = SCAN_GRID_START;
    let mut trace: Vec<(f64, f64, f64)> = Vec::new();
    let mut chosen: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    for _ in 0..MAX_SCAN_STEPS {
        if d < d_min {
            break;
        }
        let right = lip_at_scale_fn(&unit, &out, &geval, (2.0 * d).min(1.98), params.budget, params.seed)?;
        let left = lip_at_scale_fn(&unit, &out, &geval, d / 2.0, params.budget, params.seed)?;
        trace.push((d, left.value, right.value));
        if right.value > 0.0 && left.value * params.scan_slack < (1.0 + delta * eps) * right.value {
            let (u, v) = right.pair.expect("positive estimate has a pair");
            chosen = Some((d, u, v));
            break;
        }
        d /= ratio;
    }
    let Some((_d_grid, u, v)) = chosen else {
        return Err(Error::ScanFailure { trace });
    };

    // Secant affine map through the chosen pair.
    let z: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a - b)).collect();
    let d_act = space.norm(&z)?;
    let functional = space.duality_map(&z)?;
    let gu = g(&u)?;
    let gv = g(&v)?;
    let slope = (gu - gv) / (2.0 * d_act);
    let mid: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 0.5 * (a + b)).collect();
    let base = 0.5 * (gu + gv);

    // Certified ball: radius delta * d / 2, pulled inside the unit ball.
    let r1 = delta * d_act / 2.0;
    let mid_norm = space.norm(&mid)?;
    let mut cball = mid.clone();
    if mid_norm + r1 > 1.0 {
        let shrink = if mid_norm <= r1 { 0.0 } else { (mid_norm - r1) / mid_norm };
        cball.iter_mut().for_each(|t| *t *= shrink);
    }

    // Validation by sampling, in normalized coordinates.
    let claim = 6.0 * eps * r1;
    let vball = Ball { space, center: cball.clone(), radius: r1 };
    let mut vrng = stream(params.seed, "uaap-validate");
    let mut worst = 0.0f64;
    for _ in 0..params.validation_samples {
        let w = vball.sample(&mut vrng);
        let affine = base + slope * (functional.pair(&w) - functional.pair(&mid));
        worst = worst.max((g(&w)? - affine).abs());
    }
    if worst > claim * params.validation_slack {
        return Err(Error::ValidationFailure { sampled: worst * scale, claimed: claim * params.validation_slack * scale });
    }

    // Denormalize: x = center0 + R w, values scale by lip R.
    let lin_coeff = lip * slope; // (lip R) * slope / R
    let linear: Vec<f64> = functional.coords.iter().map(|&c| lin_coeff * c).collect();
    let mut offset = scale * (base - slope * functional.pair(&mid));
    offset -= linear.iter().zip(&center0).map(|(a, b)| a * b).sum::<f64>();
    offset += lin_coeff * functional.pair(&center0) - lin_coeff * functional.pair(&center0); // keep exact zero
    let center: Vec<f64> = center0.iter().zip(&cball).map(|(c, w)| c + big_r * w).collect();
    Ok(ApproxCertificate {
        center,
        radius: big_r * r1,
        map: AffineMap { linear: vec![linear], offset: vec![offset] },
        eps,
        delta,
        k,
        d: d_act,
        slope,
        functional,
        bound_claim: claim * scale,
        radius_floor: normalized_radius_floor(delta, k),
        sampled_error: worst * scale,
        constant_branch: false,
    })
}

/// Vector-valued certificate assembled coordinate by coordinate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorCertificate {
    pub center: Vec<f64>,
    pub radius: f64,
    pub map: AffineMap,
    pub coordinate_certs: Vec<ApproxCertificate>,
    /// Claimed bound `eps * L * radius` in the codomain norm.
    pub bound_claim: f64,
    pub sampled_error: f64,
}

/// Vector search: run the scalar search on coordinate 1 at accuracy
/// `eps / m`, then on coordinate 2 restricted to the returned ball, and so
/// on; the assembled affine map is validated on the final ball in the
/// codomain norm.
pub fn uaap_search_vector(f: &LipschitzFunction, params: &UaapParams) -> Result<VectorCertificate> {
    if !(params.eps > 0.0 && params.eps < 0.5) {
        return Err(Error::BadAccuracy(params.eps));
    }
    let lip = f.declared_lip.filter(|&l| l > 0.0).ok_or(Error::MissingLip)?;
    let m = f.codomain.dim;
    let mut ball = Ball {
        space: f.domain.space,
        center: f.domain.center.clone(),
        radius: f.domain.radius,
    };
    let coord_eps = params.eps / m as f64;
    let mut certs: Vec<ApproxCertificate> = Vec::with_capacity(m);
    for i in 0..m {
        // Coordinate functions of a vector map inherit its Lipschitz bound.
        let coord = CoordView { f, index: i };
        let domain = ball.clone();
        let cf = LipschitzFunction::scalar(domain, Some(lip), move |x| coord.value(x));
        let mut cp = *params;
        cp.eps = coord_eps;
        cp.seed = params.seed.wrapping_add(i as u64);
        let cert = uaap_search_scalar(&cf, &cp)?;
        ball = Ball { space: ball.space, center: cert.center.clone(), radius: cert.radius };
        certs.push(cert);
    }
    let linear: Vec<Vec<f64>> = certs.iter().map(|c| c.map.linear[0].clone()).collect();
    let offset: Vec<f64> = certs.iter().map(|c| c.map.offset[0]).collect();
    let map = AffineMap { linear, offset };
    let claim = params.eps * lip * ball.radius;
    let mut rng = stream(params.seed, "uaap-vector-validate");
    let mut worst = 0.0f64;
    for _ in 0..params.validation_samples {
        let x = ball.sample(&mut rng);
        let fx = f.eval(&x)?;
        let ax = map.eval(&x);
        let diff: Vec<f64> = fx.iter().zip(&ax).map(|(a, b)| a - b).collect();
        worst = worst.max(f.codomain.norm(&diff)?);
    }
    if worst > claim * params.validation_slack {
        return Err(Error::ValidationFailure { sampled: worst, claimed: claim * params.validation_slack });
    }
    Ok(VectorCertificate {
        center: ball.center,
        radius: ball.radius,
        map,
        coordinate_certs: certs,
        bound_claim: claim,
        sampled_error: worst,
    })
}

/// Copyable view of one output coordinate of a vector function.  Raw pointer
/// backed because the scalar search takes an owning closure; callers keep
/// the original function alive for the duration of the search.
struct CoordView {
    f: *const LipschitzFunction,
    index: usize,
}
unsafe impl Send for CoordView {}
unsafe impl Sync for CoordView {}
impl CoordView {
    fn value(&self, x: &[f64]) -> f64 {
        let f = unsafe { &*self.f };
        f.eval(x).map(|v| v[self.index]).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn euclidean_norm_fn(dim: usize, center: Vec<f64>, radius: f64) -> LipschitzFunction {
        let ball = Ball { space: NormedSpace::l2(dim), center, radius };
        LipschitzFunction::scalar(ball, Some(1.0), |x: &[f64]| {
            x.iter().map(|t| t * t).sum::<f64>().sqrt()
        })
    }

    #[test]
    fn norm_function_gets_certificate() {
        let f = euclidean_norm_fn(3, vec![0.0; 3], 1.0);
        let params = UaapParams::new(0.1, 42);
        let cert = uaap_search_scalar(&f, &params).unwrap();
        assert!(!cert.constant_branch);
        assert!(cert.radius >= cert.radius_floor * 1.0 - 1e-300);
        assert!(cert.sampled_error <= cert.bound_claim * params.validation_slack);
        // The certified ball stays away from the origin kink.
        let c = NormedSpace::l2(3).norm(&cert.center).unwrap();
        assert!(c > cert.radius, "ball contains the kink: |c| = {c}, r = {}", cert.radius);
    }

    #[test]
    fn affine_function_certifies_at_top_scale() {
        let ball = Ball::unit(NormedSpace::l2(2));
        let f = LipschitzFunction::scalar(ball, Some(1.0), |x: &[f64]| 0.6 * x[0] - 0.8 * x[1] + 0.3);
        let cert = uaap_search_scalar(&f, &UaapParams::new(0.1, 7)).unwrap();
        assert!(cert.sampled_error <= 1e-9, "sampled error {}", cert.sampled_error);
        assert!(cert.d > 0.9, "expected top-of-grid scale, got {}", cert.d);
    }

    #[test]
    fn near_constant_function_takes_constant_branch() {
        let ball = Ball::unit(NormedSpace::l2(2));
        let f = LipschitzFunction::scalar(ball, Some(1.0), |x: &[f64]| 0.01 * (x[0] + x[1]).sin());
        let cert = uaap_search_scalar(&f, &UaapParams::new(0.2, 3)).unwrap();
        assert!(cert.constant_branch);
        assert_abs_diff_eq!(cert.radius, 1.0);
    }

    #[test]
    fn rescaling_is_exactly_equivariant() {
        for s in [0.5f64, 2.0] {
            let base = euclidean_norm_fn(3, vec![0.25, 0.5, -0.25], 1.0);
            let scaled_ball = Ball {
                space: NormedSpace::l2(3),
                center: vec![0.25 * s, 0.5 * s, -0.25 * s],
                radius: s,
            };
            // s * f(x / s) has the same normalized view as f.
            let scaled = LipschitzFunction::scalar(scaled_ball, Some(1.0), move |x: &[f64]| {
                s * (x.iter().map(|t| (t / s) * (t / s)).sum::<f64>().sqrt())
            });
            let params = UaapParams::new(0.1, 99);
            let c0 = uaap_search_scalar(&base, &params).unwrap();
            let c1 = uaap_search_scalar(&scaled, &params).unwrap();
            assert_eq!(c1.radius, s * c0.radius);
            assert_eq!(c1.d, c0.d);
            assert_eq!(c1.slope, c0.slope);
            assert_eq!(c1.sampled_error, s * c0.sampled_error);
            for (a, b) in c1.center.iter().zip(&c0.center) {
                assert_eq!(*a, s * b);
            }
        }
    }

    #[test]
    fn bad_accuracy_and_missing_lip_are_rejected() {
        let f = euclidean_norm_fn(2, vec![0.0; 2], 1.0);
        assert!(matches!(uaap_search_scalar(&f, &UaapParams::new(0.6, 0)), Err(Error::BadAccuracy(_))));
        let ball = Ball::unit(NormedSpace::l2(2));
        let g = LipschitzFunction::scalar(ball, None, |x: &[f64]| x[0]);
        assert!(matches!(uaap_search_scalar(&g, &UaapParams::new(0.1, 0)), Err(Error::MissingLip)));
    }

    #[test]
    fn vector_search_on_componentwise_absolute_value() {
        let ball = Ball::unit(NormedSpace::l2(2));
        let f = LipschitzFunction::new(ball, NormedSpace::l2(2), Some(1.0), |x: &[f64]| {
            vec![x[0].abs(), x[1].abs()]
        });
        let params = UaapParams::new(0.3, 5);
        let cert = uaap_search_vector(&f, &params).unwrap();
        assert!(cert.sampled_error <= cert.bound_claim * params.validation_slack);
        assert_eq!(cert.coordinate_certs.len(), 2);
        assert!(cert.radius > 0.0);
    }

    #[test]
    fn scale_counter_matches_definition() {
        for (eps, delta) in [(0.1, 0.2), (0.3, 0.49), (0.05, 0.1)] {
            let k = scale_counter(eps, delta);
            let grow = 1.0 + delta * eps;
            assert!(grow.powi(k as i32) * eps > 1.0);
            assert!(grow.powi(k as i32 - 1) * eps <= 1.0 + 1e-12);
        }
    }
}
