//! Explicit witness constructions that certify affine-approximation error
//! lower bounds through the minimax oracle: a dyadic-tree norm on
//! `l_inf^{2^N}`, a staircase curve into `l_1^n`, and the coordinatewise
//! absolute-value map on `l_2^n`.

use crate::affine::minimax_affine_fit;
use crate::space::{DualVector, NormedSpace};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// The dyadic family of averaging functionals on `l_inf^{2^N}`.
///
/// Level `k` holds `2^k` functionals; functional `(j, k)` puts weight
/// `2^{k-N}` on the `j`-th block of `2^{N-k}` consecutive coordinates, so
/// each has `l_1` norm exactly one, each parent is exactly the average of
/// its two children, and siblings are at `l_1` distance exactly two
/// (disjoint supports).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeFunctionals {
    pub n: u32,
    /// `functionals[k][j]` for `0 <= k <= N`, `0 <= j < 2^k`.
    pub functionals: Vec<Vec<DualVector>>,
    /// Level-decay factor with `lambda^N = 1/3` exactly up to rounding.
    pub lambda: f64,
}

pub const MAX_TREE_DEPTH: u32 = 12;

pub fn build_dyadic_tree(n: u32) -> Result<TreeFunctionals> {
    if n < 1 || n > MAX_TREE_DEPTH {
        return Err(Error::BadArgument(format!(
            "tree depth {n} out of range 1..={MAX_TREE_DEPTH}"
        )));
    }
    let dim = 1usize << n;
    let mut functionals = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        let count = 1usize << k;
        let block = dim >> k;
        let weight = (2.0f64).powi(k as i32 - n as i32);
        let mut level = Vec::with_capacity(count);
        for j in 0..count {
            let mut coords = vec![0.0; dim];
            coords[j * block..(j + 1) * block].fill(weight);
            level.push(DualVector { coords });
        }
        functionals.push(level);
    }
    Ok(TreeFunctionals { n, functionals, lambda: (3.0f64).powf(-1.0 / n as f64) })
}

impl TreeFunctionals {
    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// The domain the tree norm lives on.
    pub fn domain(&self) -> NormedSpace {
        NormedSpace::linf(self.dim())
    }
}

/// `max over (j,k) of lambda^k (|x|_inf + 2 |<x*_{j,k}, x>|)`, together with
/// the maximizing `(j, k)` of minimal level.
pub fn eval_tree_norm(tree: &TreeFunctionals, x: &[f64]) -> Result<(f64, (usize, u32))> {
    if x.len() != tree.dim() {
        return Err(Error::DimMismatch { expected: tree.dim(), got: x.len() });
    }
    let sup = x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let mut best = -1.0f64;
    let mut arg = (0usize, 0u32);
    // Ascending k with a strict comparison keeps the minimal-level maximizer.
    for (k, level) in tree.functionals.iter().enumerate() {
        let factor = tree.lambda.powi(k as i32);
        for (j, f) in level.iter().enumerate() {
            let v = factor * (sup + 2.0 * f.pair(x).abs());
            if v > best {
                best = v;
                arg = (j, k as u32);
            }
        }
    }
    Ok((best.max(0.0), arg))
}

/// Outcome of a witness construction: the sampled points, their values, the
/// oracle's certified affine-error lower bound on them, and an optional
/// closed-form theory bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessReport {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
    pub lower_bound: f64,
    pub theory_bound: Option<f64>,
    pub passed: bool,
    /// Human-readable notes on which checks ran and which were out of reach.
    pub notes: Vec<String>,
}

/// Smallest tree depth at which the closed-form lower bound becomes
/// certifiable for accuracy `eps` and radius `r`, i.e. the least `N` with
/// `18 (1 - 3^{-1/N}) < eps r`.  `None` when no depth works (`eps r` too
/// large for the inequality's range).
pub fn required_tree_depth(eps: f64, r: f64) -> Option<u32> {
    let q = 1.0 - eps * r / 18.0;
    if q <= 0.0 || q >= 1.0 {
        return None;
    }
    let n = (-(3.0f64).ln() / q.ln()).ceil() as u32;
    Some(n.max(1))
}

/// Checks the two-sided growth inequality for the tree norm around `x` at
/// radius `r` and runs the oracle on the three-point witness set, reporting
/// the closed-form bound `(1 - 5 eps) r / 6` only when the depth condition
/// `eps r > 18 (1 - lambda)` makes it certifiable.
pub fn tree_witness_check(
    tree: &TreeFunctionals,
    x: &[f64],
    r: f64,
    eps: f64,
) -> Result<WitnessReport> {
    let dim = tree.dim();
    if x.len() != dim {
        return Err(Error::DimMismatch { expected: dim, got: x.len() });
    }
    let sup = x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if r <= 0.0 || sup + r > 1.0 + 1e-12 {
        return Err(Error::OutsideDomain(format!(
            "ball of radius {r} around |x|_inf = {sup} leaves the unit ball"
        )));
    }
    let (fx, (j, k)) = eval_tree_norm(tree, x)?;
    if k == tree.n {
        return Err(Error::BadArgument(
            "norm is maximized at a leaf functional; no child witness exists".into(),
        ));
    }
    let lambda = tree.lambda;

    // Witness direction: +1 on the left child's block, -1 on the right
    // child's, so the two child functionals pair to exactly +1 and -1.
    let block = dim >> (k + 1);
    let mut y = vec![0.0; dim];
    y[2 * j * block..(2 * j + 1) * block].fill(1.0);
    y[(2 * j + 1) * block..(2 * j + 2) * block].fill(-1.0);
    if tree.functionals[k as usize][j].pair(x) < 0.0 {
        y.iter_mut().for_each(|t| *t = -*t);
    }

    let add = |s: f64| -> Vec<f64> { x.iter().zip(&y).map(|(a, b)| a + s * b).collect() };
    let xp = add(r);
    let xm = add(-r);
    let (fp, _) = eval_tree_norm(tree, &xp)?;
    let (fm, _) = eval_tree_norm(tree, &xm)?;

    // Both perturbed values must clear the level-(k+1) growth floor.
    let floor = lambda * fx + lambda.powi(k as i32 + 1) * (1.0 - 4.0 * eps) * r
        - 3.0 * lambda.powi(k as i32) * (1.0 - lambda);
    let chain_ok = fp >= floor - 1e-12 && fm >= floor - 1e-12;

    let samples = vec![
        (xm.clone(), vec![fm]),
        (x.to_vec(), vec![fx]),
        (xp.clone(), vec![fp]),
    ];
    let fit = minimax_affine_fit(&samples, &NormedSpace::l2(1))?;

    let mut notes = vec![format!(
        "norm maximized by functional (j={j}, k={k}); growth floor {floor:.6}"
    )];
    let certifiable = eps * r > 18.0 * (1.0 - lambda);
    let theory_bound = if certifiable {
        Some((1.0 - 5.0 * eps) * r / 6.0)
    } else {
        match required_tree_depth(eps, r) {
            Some(need) => notes.push(format!(
                "closed-form bound needs depth N >= {need} (have {}); reporting growth check only",
                tree.n
            )),
            None => notes.push(
                "closed-form bound unreachable at any depth for these parameters".into(),
            ),
        }
        None
    };
    let passed = chain_ok && theory_bound.map_or(true, |tb| fit.lower_bound >= tb - 1e-12);
    notes.push(format!("growth inequality holds: {chain_ok}"));

    Ok(WitnessReport {
        points: vec![xm, x.to_vec(), xp],
        values: samples.into_iter().map(|(_, v)| v).collect(),
        lower_bound: fit.lower_bound,
        theory_bound,
        passed,
        notes,
    })
}

/// The staircase curve `t -> sum_{i <= floor(t)} e_i + frac(t) e_{floor(t)+1}`
/// into `l_1^n`.
pub fn staircase_point(n: usize, t: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    let whole = t.floor().max(0.0) as usize;
    for coord in v.iter_mut().take(whole.min(n)) {
        *coord = 1.0;
    }
    if whole < n {
        v[whole] = (t - whole as f64).clamp(0.0, 1.0);
    }
    v
}

/// The staircase curve rescaled to the unit interval and normalized to be
/// 1-Lipschitz in `l_1^n` (both time and values divided by `n`).
pub fn staircase_polyline(n: usize) -> Result<crate::solvers::Polyline> {
    if n == 0 {
        return Err(Error::BadArgument("staircase needs n >= 1".into()));
    }
    let steps = 8 * n;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let points: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| staircase_point(n, t * n as f64).iter().map(|v| v / n as f64).collect())
        .collect();
    crate::solvers::Polyline::new(times, points, 1.0)
}

/// Three-point witness on the staircase: the midpoint of `f(k)` and
/// `f(k+2l)` misses `f(k+l)` by exactly `l` in `l_1`, so the best affine
/// approximation on the triple errs by exactly `l/2`.
pub fn staircase_witness(n: usize, k: usize, l: usize) -> Result<WitnessReport> {
    if l == 0 || k + 2 * l > n {
        return Err(Error::BadArgument(format!(
            "staircase indices need l >= 1 and k + 2l <= n (got n={n}, k={k}, l={l})"
        )));
    }
    let codomain = NormedSpace::lp(n, 1.0)?;
    let ts = [k as f64, (k + l) as f64, (k + 2 * l) as f64];
    let pts: Vec<Vec<f64>> = ts.iter().map(|&t| staircase_point(n, t)).collect();

    // Midpoint identity: the two half-sums have disjoint supports.
    let mid: Vec<f64> = (0..n).map(|i| pts[1][i] - 0.5 * pts[0][i] - 0.5 * pts[2][i]).collect();
    let mid_norm = codomain.norm(&mid)?;
    let identity_ok = (mid_norm - l as f64).abs() <= 1e-12 * l as f64;

    let samples: Vec<(Vec<f64>, Vec<f64>)> =
        ts.iter().zip(&pts).map(|(&t, p)| (vec![t], p.clone())).collect();
    let fit = minimax_affine_fit(&samples, &codomain)?;
    let theory = l as f64 / 2.0;
    let passed = identity_ok && (fit.lower_bound - theory).abs() <= 1e-9;

    Ok(WitnessReport {
        points: samples.iter().map(|(x, _)| x.clone()).collect(),
        values: pts,
        lower_bound: fit.lower_bound,
        theory_bound: Some(theory),
        passed,
        notes: vec![format!("midpoint deviation in l_1 = {mid_norm} (want exactly {l})")],
    })
}

/// Witness for the coordinatewise absolute-value map on `l_2^n`: inside any
/// ball `B_r(center)` in the unit ball with `r > 2/sqrt(n)`, a segment along
/// a small coordinate crosses the map's kink, and the best affine fit on
/// that segment errs by at least `r/4`.
pub fn absmap_witness(n: usize, r: f64, center: &[f64]) -> Result<WitnessReport> {
    if center.len() != n {
        return Err(Error::DimMismatch { expected: n, got: center.len() });
    }
    let space = NormedSpace::l2(n);
    let cn = space.norm(center)?;
    if r <= 2.0 / (n as f64).sqrt() {
        return Err(Error::BadArgument(format!(
            "radius {r} must exceed 2/sqrt(n) = {}",
            2.0 / (n as f64).sqrt()
        )));
    }
    if cn + r > 1.0 + 1e-12 {
        return Err(Error::OutsideDomain(format!(
            "ball of radius {r} around |center| = {cn} leaves the unit ball"
        )));
    }
    let threshold = 1.0 / (n as f64).sqrt();
    let kink_axis = center
        .iter()
        .position(|c| c.abs() <= threshold)
        .ok_or_else(|| Error::BadArgument("no coordinate of magnitude <= 1/sqrt(n)".into()))?;

    // Segment of length r along the axis, shifted so the kink (the zero of
    // coordinate `kink_axis`) sits at the segment's midpoint; the shift
    // magnitude is below r/2, so the segment stays inside B_r(center).
    let shift = -center[kink_axis];
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..201)
        .map(|i| {
            let s = shift - r / 2.0 + r * i as f64 / 200.0;
            let mut p = center.to_vec();
            p[kink_axis] += s;
            let v: Vec<f64> = p.iter().map(|t| t.abs()).collect();
            (p, v)
        })
        .collect();
    let fit = minimax_affine_fit(&samples, &space)?;
    let theory = r / 4.0;
    let passed = fit.lower_bound >= theory - 1e-3;
    Ok(WitnessReport {
        points: samples.iter().map(|(x, _)| x.clone()).collect(),
        values: samples.iter().map(|(_, y)| y.clone()).collect(),
        lower_bound: fit.lower_bound,
        theory_bound: Some(theory),
        passed,
        notes: vec![format!("kink along coordinate {kink_axis}, segment midpoint on the kink")],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lipfn::{lip_at_scale, LipschitzFunction};
    use crate::rng::stream;
    use crate::space::Ball;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn depth_two_root_functional_is_the_quarter_average() {
        let tree = build_dyadic_tree(2).unwrap();
        assert_eq!(tree.functionals[0][0].coords, vec![0.25; 4]);
    }

    #[test]
    fn parents_average_children_exactly() {
        let tree = build_dyadic_tree(5).unwrap();
        for k in 0..5usize {
            for j in 0..(1usize << k) {
                let p = &tree.functionals[k][j].coords;
                let l = &tree.functionals[k + 1][2 * j].coords;
                let r = &tree.functionals[k + 1][2 * j + 1].coords;
                for i in 0..p.len() {
                    assert_eq!(p[i], 0.5 * (l[i] + r[i]));
                }
            }
        }
    }

    #[test]
    fn sibling_functionals_are_at_l1_distance_two() {
        let tree = build_dyadic_tree(4).unwrap();
        let l1 = NormedSpace::lp(16, 1.0).unwrap();
        for k in 1..=4usize {
            for j in (0..(1usize << k)).step_by(2) {
                let a = &tree.functionals[k][j].coords;
                let b = &tree.functionals[k][j + 1].coords;
                assert_eq!(l1.dist(a, b).unwrap(), 2.0);
            }
        }
    }

    #[test]
    fn basis_vector_value_at_depth_two() {
        let tree = build_dyadic_tree(2).unwrap();
        let mut e1 = vec![0.0; 4];
        e1[0] = 1.0;
        let (v, arg) = eval_tree_norm(&tree, &e1).unwrap();
        assert_abs_diff_eq!(v, 1.5);
        assert_eq!(arg, (0, 0));
        let (z, _) = eval_tree_norm(&tree, &[0.0; 4]).unwrap();
        assert_eq!(z, 0.0);
    }

    #[test]
    fn tree_norm_axioms_sampled() {
        let tree = build_dyadic_tree(4).unwrap();
        let ball = Ball::unit(NormedSpace::linf(16));
        let mut rng = stream(11, "tree-axioms");
        for _ in 0..300 {
            let x = ball.sample(&mut rng);
            let y = ball.sample(&mut rng);
            let s: f64 = rng.gen_range(-2.0..2.0);
            let (fx, _) = eval_tree_norm(&tree, &x).unwrap();
            let (fy, _) = eval_tree_norm(&tree, &y).unwrap();
            let sx: Vec<f64> = x.iter().map(|t| s * t).collect();
            let (fsx, _) = eval_tree_norm(&tree, &sx).unwrap();
            assert_abs_diff_eq!(fsx, s.abs() * fx, epsilon = 1e-9 * (1.0 + fx));
            let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let (fxy, _) = eval_tree_norm(&tree, &xy).unwrap();
            assert!(fxy <= fx + fy + 1e-9 * (1.0 + fx + fy));
        }
    }

    #[test]
    fn tree_norm_lipschitz_constant_near_three() {
        let tree = build_dyadic_tree(4).unwrap();
        let t2 = tree.clone();
        let f = LipschitzFunction::scalar(Ball::unit(NormedSpace::linf(16)), Some(3.0), move |x| {
            eval_tree_norm(&t2, x).map(|(v, _)| v).unwrap_or(f64::NAN)
        });
        let est = lip_at_scale(&f, 0.0, 400, 21).unwrap();
        assert!(est.value <= 3.0 + 1e-3, "estimate {}", est.value);
        assert!(est.value > 2.0, "estimate {}", est.value);
    }

    #[test]
    fn witness_growth_inequality_holds_at_random_centers() {
        let tree = build_dyadic_tree(6).unwrap();
        let ball = Ball { space: NormedSpace::linf(64), center: vec![0.0; 64], radius: 0.5 };
        let mut rng = stream(3, "tree-witness");
        for _ in 0..25 {
            let x = ball.sample(&mut rng);
            let r: f64 = rng.gen_range(0.05..0.4);
            match tree_witness_check(&tree, &x, r, 0.2) {
                Ok(rep) => {
                    assert!(rep.passed, "growth check failed: {:?}", rep.notes);
                    assert!(rep.theory_bound.is_none(), "depth 6 cannot certify the closed form");
                }
                Err(Error::BadArgument(_)) => {} // leaf maximizer: no witness
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn witness_at_origin_matches_direct_formula() {
        let tree = build_dyadic_tree(6).unwrap();
        let rep = tree_witness_check(&tree, &[0.0; 64], 0.5, 0.2).unwrap();
        // f(+-ry) >= lambda * 0 + lambda (1 - 4 eps) r - 3 (1 - lambda).
        let lam = tree.lambda;
        let floor = lam * (1.0 - 0.8) * 0.5 - 3.0 * (1.0 - lam);
        let (fp, _) = eval_tree_norm(&tree, &rep.points[2]).unwrap();
        assert!(fp >= floor);
        assert!(rep.passed);
    }

    #[test]
    fn required_depth_is_large_at_desk_scale() {
        let n = required_tree_depth(0.2, 1.0).unwrap();
        assert!(n > 98, "needed depth {n}");
        assert!(required_tree_depth(40.0, 1.0).is_none());
    }

    #[test]
    fn staircase_witness_is_exactly_half_the_step() {
        let rep = staircase_witness(8, 0, 2).unwrap();
        assert!(rep.passed);
        assert_abs_diff_eq!(rep.lower_bound, 1.0, epsilon = 1e-9);
        assert_eq!(rep.theory_bound, Some(1.0));
    }

    #[test]
    fn staircase_lower_bound_exact_for_all_small_shapes() {
        for n in 2..=32usize {
            for l in 1..=n / 2 {
                for k in 0..=(n - 2 * l) {
                    let rep = staircase_witness(n, k, l).unwrap();
                    assert!(
                        (rep.lower_bound - l as f64 / 2.0).abs() <= 1e-9,
                        "n={n} k={k} l={l}: {}",
                        rep.lower_bound
                    );
                }
            }
        }
    }

    #[test]
    fn staircase_curve_is_one_lipschitz() {
        let ball = Ball { space: NormedSpace::l2(1), center: vec![4.0], radius: 4.0 };
        let f = LipschitzFunction::new(ball, NormedSpace::lp(8, 1.0).unwrap(), Some(1.0), |t: &[f64]| {
            staircase_point(8, t[0])
        });
        let est = lip_at_scale(&f, 0.0, 400, 13).unwrap();
        assert!((est.value - 1.0).abs() <= 1e-3, "estimate {}", est.value);
    }

    #[test]
    fn absmap_witness_matches_the_kink_bound() {
        let rep = absmap_witness(16, 0.6, &[0.0; 16]).unwrap();
        assert!(rep.passed);
        assert!(rep.lower_bound >= 0.15 - 1e-3, "lower bound {}", rep.lower_bound);
    }

    #[test]
    fn absmap_witness_rejects_bad_inputs() {
        assert!(matches!(absmap_witness(16, 0.4, &[0.0; 16]), Err(Error::BadArgument(_))));
        // All coordinates large: incompatible with the unit-ball precondition.
        let c = vec![0.3; 16];
        assert!(matches!(absmap_witness(16, 0.6, &c), Err(Error::OutsideDomain(_))));
    }
}
