//! Acceptance suite: twelve end-to-end criteria, each printing one
//! PASS/FAIL line.  Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines; any FAIL also fails the corresponding test.

use lipquot::affine::minimax_affine_fit;
use lipquot::counterexamples::{
    build_dyadic_tree, eval_tree_norm, required_tree_depth, staircase_polyline, staircase_witness,
    tree_witness_check,
};
use lipquot::lipfn::{lip_at_scale, LipschitzFunction};
use lipquot::martingale::{
    edge_stats, from_curve, frechet_obstruction, rademacher, to_curve, validate_martingale,
};
use lipquot::rng::stream;
use lipquot::solvers::{level_set, lift_curve, perturb_solve, CoLipMap, Polyline};
use lipquot::space::{Ball, NormedSpace};
use lipquot::uaap::{uaap_search_scalar, UaapParams};
use lipquot::zoo::{
    build_prop41_spec, cover_check, directional_derivative, jacobian_check, prop311_solve,
    CompiledMap, CoverMode, ZooMapSpec,
};
use rand::Rng;
use std::time::Instant;

struct Criterion {
    id: u32,
    name: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: u32, name: &'static str) -> Self {
        Criterion { id, name, failures: Vec::new() }
    }

    fn check(&mut self, what: &str, ok: bool) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn finish(self) {
        let status = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("acceptance {:02} [{status}] {}", self.id, self.name);
        assert!(
            self.failures.is_empty(),
            "criterion {} failed: {}",
            self.id,
            self.failures.join("; ")
        );
    }
}

fn fold() -> CompiledMap {
    CompiledMap::new(ZooMapSpec::Fold).unwrap()
}

fn prop42() -> CompiledMap {
    CompiledMap::new(ZooMapSpec::Prop42).unwrap()
}

#[test]
fn criterion_01_fold_level_set() {
    let mut c = Criterion::new(1, "folding-map level set has exactly the two antipodal points");
    let start = Instant::now();
    let rep = level_set(&fold(), &[1.0, 0.0], &[-3.0, -3.0], &[3.0, 3.0], 1e-2, 1e-6).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    c.check("exactly 2 points", rep.points.len() == 2);
    for p in &rep.points {
        let near = ((p[0] - 1.0).abs() <= 1e-4 || (p[0] + 1.0).abs() <= 1e-4) && p[1].abs() <= 1e-4;
        c.check(&format!("point {p:?} within 1e-4 of (+-1, 0)"), near);
    }
    let gap = rep.min_pair_gap.unwrap_or(0.0);
    c.check(&format!("pair gap {gap} = 2 +- 1e-3"), (gap - 2.0).abs() <= 1e-3);
    c.check(&format!("runtime {elapsed:.2}s < 10s"), elapsed < 10.0);
    c.finish();
}

#[test]
fn criterion_02_spiral_vanishing_and_identity() {
    let mut c = Criterion::new(2, "spiral map vanishes on the unit disk and is the identity far out");
    let map = prop42();
    let disk = Ball { space: NormedSpace::l2(2), center: vec![0.0; 2], radius: 1.0 };
    let mut rng = stream(2, "acceptance-spiral");
    for _ in 0..1000 {
        let x = disk.sample(&mut rng);
        let v = map.eval(&[x[0], x[1], 0.0]).unwrap();
        c.check("T(x, 0) = 0 exactly on the unit disk", v == vec![0.0, 0.0]);
    }
    for _ in 0..200 {
        // |x| >= 2 at any parameter, and any x at parameter >= 1.
        let mut x = disk.sample(&mut rng);
        let n = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if n > 1e-6 {
            x.iter_mut().for_each(|t| *t *= (2.0 + rng.gen::<f64>()) / n);
        } else {
            x = vec![2.5, 0.0];
        }
        let a: f64 = rng.gen_range(0.0..0.5);
        let v = map.eval(&[x[0], x[1], a]).unwrap();
        c.check("T(x, a) = x exactly for |x| >= 2", v == x);
        let y = disk.sample(&mut rng);
        let a: f64 = 1.0 + rng.gen_range(0.0..2.0);
        let v = map.eval(&[y[0], y[1], a]).unwrap();
        c.check("T(x, a) = x exactly for a >= 1", v == y);
    }
    c.finish();
}

#[test]
fn criterion_03_spiral_cover_bounds() {
    let mut c = Criterion::new(3, "spiral map covers the proof-case radii");
    let start = Instant::now();
    let map = prop42();
    let mut rng = stream(3, "acceptance-spiral-cover");
    for case in [2u32, 3u32] {
        for i in 0..20 {
            let r: f64 = rng.gen_range(0.1..1.0);
            let a: f64 = rng.gen_range(0.0..r / 10.0);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (norm, rho) = if case == 2 {
                (rng.gen_range(0.0..1.0f64), r.powi(3) / 400.0)
            } else {
                (1.0 + rng.gen_range(0.0..1.0f64) * r / 10.0, r.powi(2) / 400.0)
            };
            let center = [norm * theta.cos(), norm * theta.sin(), a];
            let rep = cover_check(&map, &center, r, rho, 8, 100 + i, CoverMode::Verify).unwrap();
            c.check(
                &format!(
                    "case {case} config {i} (r={r:.3}, |x|={norm:.3}, a={a:.4}): residual {:.2e}",
                    rep.worst_residual
                ),
                rep.covered && rep.worst_residual <= 1e-6,
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.check(&format!("runtime {elapsed:.1}s < 300s"), elapsed < 300.0);
    c.finish();
}

#[test]
fn criterion_04_net_translation_map() {
    let mut c = Criterion::new(4, "net-translation map vanishes at zero, is 3-Lipschitz, covers r/32");
    let spec = build_prop41_spec(2, 2.0, 0.5, -8, -1, 3.0, 0).unwrap();
    let map = CompiledMap::new(ZooMapSpec::Prop41(spec.clone())).unwrap();
    let mut rng = stream(4, "acceptance-net-map");

    // Exact vanishing on the unit ball of the lambda = 0 slice.
    for _ in 0..200 {
        let dir: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let scale: f64 = rng.gen_range(0.0..1.0);
        let l1: f64 = NormedSpace::l2(2).norm(&dir[..2]).unwrap()
            + NormedSpace::l2(2).norm(&dir[2..]).unwrap();
        if l1 < 1e-9 {
            continue;
        }
        let p: Vec<f64> = dir.iter().map(|t| t * scale / l1).chain([0.0]).collect();
        let v = map.eval(&p).unwrap();
        c.check("T(x, y, 0) = 0 exactly on the unit ball", v.iter().all(|&t| t == 0.0));
    }

    // Lipschitz estimate over a domain patch.
    let ball = Ball {
        space: NormedSpace::l2(5),
        center: vec![0.0; 5],
        radius: 0.4,
    };
    let m2 = CompiledMap::new(ZooMapSpec::Prop41(spec)).unwrap();
    let f = LipschitzFunction::new(ball, map.codomain(), Some(3.0), move |p: &[f64]| {
        m2.eval(p).unwrap_or(vec![f64::NAN; 2])
    });
    let est = lip_at_scale(&f, 0.0, 400, 7).unwrap();
    c.check(&format!("Lipschitz estimate {:.4} <= 3 + 1e-2", est.value), est.value <= 3.0 + 1e-2);

    // Case 1 coverage at radius r/32.
    for i in 0..10 {
        let r: f64 = rng.gen_range(0.1..1.0);
        let lambda0: f64 = rng.gen_range(-1.0..1.0) * r / 48.0;
        let y: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.2..0.2)).collect();
        let center: Vec<f64> = x.iter().chain(&y).chain([&lambda0]).copied().collect();
        let rep = cover_check(&map, &center, r, r / 32.0, 8, 40 + i, CoverMode::Verify).unwrap();
        c.check(
            &format!("config {i} (r={r:.3}, lambda0={lambda0:.4}): residual {:.2e}", rep.worst_residual),
            rep.covered,
        );
    }
    c.finish();
}

#[test]
fn criterion_05_affine_approximation_search() {
    let mut c = Criterion::new(5, "affine-approximation search certifies 20 seeded functions");
    let space = NormedSpace::l2(5);
    let params = UaapParams::new(0.1, 0);
    for i in 0..20u64 {
        let mut rng = stream(i, "acceptance-uaap-fn");
        let anchor = Ball { space, center: vec![0.0; 5], radius: 2.0 }.sample(&mut rng);
        let shift: f64 = rng.gen_range(-0.5..0.5);
        let kind = i % 3;
        let build = |s: f64| -> LipschitzFunction {
            let anchor = anchor.clone();
            let ball = Ball { space, center: vec![0.0; 5], radius: s };
            LipschitzFunction::scalar(ball, Some(1.0), move |x: &[f64]| {
                let scaled: Vec<f64> = x.iter().map(|t| t / s).collect();
                let d = space.dist(&scaled, &anchor).unwrap();
                s * match kind {
                    0 => d,
                    1 => d.max(scaled[0] + shift),
                    _ => (d - 1.0).abs(),
                }
            })
        };
        let mut p = params;
        p.seed = i;
        let cert = uaap_search_scalar(&build(1.0), &p).unwrap();
        c.check(
            &format!("fn {i}: radius {:.3e} >= floor {:.3e}", cert.radius, cert.radius_floor),
            cert.radius >= cert.radius_floor - 1e-300,
        );
        c.check(
            &format!("fn {i}: error {:.3e} within bound {:.3e}", cert.sampled_error, cert.bound_claim * 1.1),
            cert.sampled_error <= cert.bound_claim * 1.1,
        );
        for s in [0.5f64, 2.0] {
            let scaled = uaap_search_scalar(&build(s), &p).unwrap();
            let exact = scaled.radius == s * cert.radius
                && scaled.d == cert.d
                && scaled.center.iter().zip(&cert.center).all(|(a, b)| *a == s * b);
            c.check(&format!("fn {i}: exact equivariance at scale {s}"), exact);
        }
    }
    c.finish();
}

#[test]
fn criterion_06_affine_oracle() {
    let mut c = Criterion::new(6, "minimax oracle: kink error one half, monotone under samples");
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..201)
        .map(|i| {
            let t = -1.0 + i as f64 / 100.0;
            (vec![t], vec![t.abs()])
        })
        .collect();
    let fit = minimax_affine_fit(&samples, &NormedSpace::l2(1)).unwrap();
    c.check(&format!("|t| error {} = 0.5 +- 1e-6", fit.error), (fit.error - 0.5).abs() <= 1e-6);
    c.check(&format!("equioscillation count {} = 3", fit.active_count), fit.active_count == 3);

    let mut rng = stream(6, "acceptance-oracle");
    for i in 0..100 {
        let n = rng.gen_range(4..40);
        let a: f64 = rng.gen_range(-2.0..2.0);
        let b: f64 = rng.gen_range(0.5..3.0);
        let mut s: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .map(|_| {
                let t: f64 = rng.gen_range(-1.0..1.0);
                (vec![t], vec![(a * t).sin() + b * t * t])
            })
            .collect();
        let e1 = minimax_affine_fit(&s, &NormedSpace::l2(1)).unwrap().error;
        for _ in 0..rng.gen_range(1..10) {
            let t: f64 = rng.gen_range(-1.0..1.0);
            s.push((vec![t], vec![(a * t).sin() + b * t * t]));
        }
        let e2 = minimax_affine_fit(&s, &NormedSpace::l2(1)).unwrap().error;
        c.check(&format!("instance {i}: {e2} >= {e1}"), e2 >= e1 - 1e-9);
    }
    c.finish();
}

#[test]
fn criterion_07_staircase_witness() {
    let mut c = Criterion::new(7, "staircase witness: midpoint gap two, affine error at least one");
    let rep = staircase_witness(8, 0, 2).unwrap();
    c.check("witness passes its own checks", rep.passed);
    c.check(
        &format!("lower bound {} >= 1 - 1e-9", rep.lower_bound),
        rep.lower_bound >= 1.0 - 1e-9,
    );
    // Midpoint deviation exactly 2 (disjoint supports).
    let l1 = NormedSpace::lp(8, 1.0).unwrap();
    let mid: Vec<f64> =
        (0..8).map(|i| rep.values[1][i] - 0.5 * rep.values[0][i] - 0.5 * rep.values[2][i]).collect();
    c.check("midpoint identity exactly 2", l1.norm(&mid).unwrap() == 2.0);
    c.finish();
}

#[test]
fn criterion_08_tree_counterexample() {
    let mut c = Criterion::new(8, "dyadic-tree norm: exact identities, growth chain, depth documentation");
    let tree = build_dyadic_tree(6).unwrap();
    let mut internal = 0;
    for k in 0..6usize {
        for j in 0..(1usize << k) {
            internal += 1;
            let p = &tree.functionals[k][j].coords;
            let l = &tree.functionals[k + 1][2 * j].coords;
            let r = &tree.functionals[k + 1][2 * j + 1].coords;
            let exact = (0..p.len()).all(|i| p[i] == 0.5 * (l[i] + r[i]));
            c.check(&format!("midpoint identity exact at node ({j}, {k})"), exact);
            let l1 = NormedSpace::lp(64, 1.0).unwrap();
            c.check(
                &format!("sibling separation exactly 2 under node ({j}, {k})"),
                l1.dist(l, r).unwrap() == 2.0,
            );
        }
    }
    c.check(&format!("{internal} internal nodes"), internal == 63);

    let mut rng = stream(8, "acceptance-tree");
    let mut checked = 0;
    let mut draws = 0;
    while checked < 100 && draws < 1000 {
        draws += 1;
        let r: f64 = rng.gen_range(0.05..0.45);
        let ball = Ball {
            space: NormedSpace::linf(64),
            center: vec![0.0; 64],
            radius: 1.0 - r,
        };
        let x = ball.sample(&mut rng);
        match tree_witness_check(&tree, &x, r, 0.2) {
            Ok(rep) => {
                checked += 1;
                c.check(&format!("growth chain at draw {draws}"), rep.passed);
            }
            Err(_) => {} // leaf maximizer: no two-sided witness at this center
        }
    }
    c.check(&format!("{checked} seeded centers checked"), checked == 100);

    let need = required_tree_depth(0.2, 1.0).unwrap();
    c.check(
        &format!("closed-form bound needs depth {need} > 98: growth-chain-only pass documented"),
        need > 98,
    );
    // Sanity: the norm itself evaluates as expected at a basis vector.
    let tree2 = build_dyadic_tree(2).unwrap();
    let (v, _) = eval_tree_norm(&tree2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
    c.check("basis value 1.5 at depth two", (v - 1.5).abs() < 1e-12);
    c.finish();
}

#[test]
fn criterion_09_gated_coordinate_map() {
    let mut c = Criterion::new(9, "gated coordinate map: flat at zero, solvable with bounded ratio");
    let (n, m, p) = (8usize, 10usize, 2.0f64);
    let map = CompiledMap::new(ZooMapSpec::Prop311 { n, m, p }).unwrap();
    let dim = n * m;

    let jac = jacobian_check(&map, &vec![0.0; dim], 1e-6).unwrap();
    c.check(
        "derivative matrix at zero is exactly zero",
        jac.jacobian.iter().all(|row| row.iter().all(|&t| t == 0.0)),
    );
    c.check("smallest singular value exactly zero", jac.min_singular_value == 0.0);

    let mut rng = stream(9, "acceptance-gated-dirs");
    let unit = Ball { space: NormedSpace::l2(dim), center: vec![0.0; dim], radius: 1.0 };
    for i in 0..50 {
        let mut d = unit.sample(&mut rng);
        let nd = NormedSpace::l2(dim).norm(&d).unwrap();
        if nd < 1e-9 {
            continue;
        }
        d.iter_mut().for_each(|t| *t /= nd);
        let dd = directional_derivative(&map, &vec![0.0; dim], &d, 1e-9).unwrap();
        c.check(
            &format!("directional derivative {i} exactly zero"),
            dd.limit.iter().all(|&t| t == 0.0),
        );
    }

    let domain = Ball { space: NormedSpace::lp(dim, p).unwrap(), center: vec![0.0; dim], radius: 2.0 };
    let mut rng = stream(9, "acceptance-gated-solve");
    for i in 0..100 {
        let x = domain.sample(&mut rng);
        let fx = map.eval(&x).unwrap();
        let y: Vec<f64> = fx.iter().map(|t| t + rng.gen_range(-0.5..0.5)).collect();
        match prop311_solve(n, m, p, &x, &y) {
            Ok(sol) => {
                c.check(&format!("solve {i}: residual {:.2e}", sol.residual), sol.residual <= 1e-8);
                c.check(&format!("solve {i}: ratio {:.2}", sol.ratio), sol.ratio <= 20.0);
            }
            Err(e) => c.check(&format!("solve {i} errored: {e}"), false),
        }
    }
    c.finish();
}

#[test]
fn criterion_10_perturbation_solver() {
    let mut c = Criterion::new(10, "perturbed identity solves with geometric stage decay");
    let f = CoLipMap::Linear { matrix: vec![vec![1.0]], co_lip: 1.0 };
    let ball = Ball { space: NormedSpace::l2(1), center: vec![0.0], radius: 100.0 };
    let g = LipschitzFunction::scalar(ball, Some(0.4), |t: &[f64]| 0.4 * t[0].sin());
    let mut rng = stream(10, "acceptance-perturb");
    for i in 0..50 {
        let y: f64 = rng.gen_range(-3.0..3.0);
        let out = perturb_solve(&f, &g, &[0.0], &[y], 1e-8).unwrap();
        c.check(&format!("target {i}: residual {:.2e}", out.residual), out.residual <= 1e-8);
        let r = (y - 0.0 - 0.4 * 0.0f64.sin()).abs();
        c.check(
            &format!("target {i}: |z| = {:.4} within r / 0.6", out.z[0].abs()),
            out.z[0].abs() <= r / 0.6 * (1.0 + 1e-6),
        );
        let decay = out.stage_radii.windows(2).all(|w| w[1] <= 0.4 * w[0] + 1e-9);
        c.check(&format!("target {i}: stage decay"), decay);
    }
    c.finish();
}

#[test]
fn criterion_11_curve_lifting() {
    let mut c = Criterion::new(11, "circle arc lifts through the fold at half speed");
    let m = 1000usize;
    let steps = 2000usize;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let points: Vec<Vec<f64>> = times.iter().map(|&t| vec![t.cos(), t.sin()]).collect();
    let xi = Polyline::new(times, points, 1.0).unwrap();
    let map = fold();
    let phi = lift_curve(&map, &[1.0, 0.0], &xi, m).unwrap();
    c.check(
        &format!("lift speed {:.4} <= 1 + 1e-3", phi.lip_bound),
        phi.lip_bound <= 1.0 + 1e-3,
    );
    let mut worst_res = 0.0f64;
    let mut worst_dev = 0.0f64;
    for (t, p) in phi.times.iter().zip(&phi.points) {
        let v = map.eval(p).unwrap();
        let target = xi.eval(*t);
        let res = NormedSpace::l2(2).dist(&v, &target).unwrap();
        worst_res = worst_res.max(res);
        let half = [(t / 2.0).cos(), (t / 2.0).sin()];
        worst_dev = worst_dev.max(NormedSpace::l2(2).dist(p, &half).unwrap());
    }
    c.check(&format!("mesh residual {worst_res:.2e} <= 1e-9"), worst_res <= 1e-6 * 1e-3);
    c.check(
        &format!("distance to the analytic half-speed lift {worst_dev:.2e} <= 1e-3"),
        worst_dev <= 1e-3,
    );
    c.finish();
}

#[test]
fn criterion_12_martingale_suite() {
    let mut c = Criterion::new(12, "martingale round trips, separation, and the quarter obstruction");
    // Exact round trip of the depth-1 signed example.
    let m0 = rademacher();
    let f0 = to_curve(&m0).unwrap();
    let back = from_curve(&f0, &NormedSpace::l2(1), 0.4, 6, 256).unwrap().martingale;
    c.check("round trip splits at one half", back.root.b == Some(0.5));
    c.check(
        "round trip child values exactly +-1",
        back.root.left.as_ref().unwrap().value == vec![1.0]
            && back.root.right.as_ref().unwrap().value == vec![-1.0],
    );
    c.check("round trip depth one", back.depth() == 1);

    // Staircase splitting with delta = 0.4.
    let curve = staircase_polyline(8).unwrap();
    let space = NormedSpace::lp(8, 1.0).unwrap();
    let mart = from_curve(&curve, &space, 0.4, 8, 256).unwrap().martingale;
    let rep = validate_martingale(&mart, 0.4).unwrap();
    c.check("staircase martingale is a valid separated martingale", rep.is_martingale && rep.is_separated);
    for e in edge_stats(&mart).unwrap() {
        c.check(
            &format!("edge at {:?}: separation {:.3} > 0.4", e.child_interval, e.separation),
            e.separation > 0.4,
        );
        c.check(
            &format!("edge at {:?}: width ratio {:.3} <= 5", e.child_interval, e.width_ratio),
            e.width_ratio <= 2.0 / 0.4 + 1e-9,
        );
    }

    let lb = frechet_obstruction(&m0, 0.25, 1.0).unwrap();
    c.check(&format!("obstruction {lb} = 0.25 exactly"), lb == 0.25);
    c.finish();
}
