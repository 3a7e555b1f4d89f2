//! Property-based invariants: sampled norm axioms, estimator monotonicity,
//! exact structural identities, and solver consistency under refinement.

use lipquot::affine::minimax_affine_fit;
use lipquot::counterexamples::build_dyadic_tree;
use lipquot::lipfn::{lip_at_scale, LipschitzFunction};
use lipquot::martingale::{from_curve, to_curve, validate_martingale};
use lipquot::solvers::Polyline;
use lipquot::space::{Ball, NormedSpace};
use lipquot::zoo::{cover_check, CompiledMap, CoverMode, ZooMapSpec};
use proptest::prelude::*;

fn space_strategy() -> impl Strategy<Value = (NormedSpace, usize)> {
    (1usize..6, prop_oneof![Just(1.0f64), Just(1.5), Just(2.0), Just(4.0), Just(f64::INFINITY)])
        .prop_map(|(dim, p)| {
            let s = if p.is_infinite() { NormedSpace::linf(dim) } else { NormedSpace::lp(dim, p).unwrap() };
            (s, dim)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn norm_axioms_hold_on_samples(
        (space, dim) in space_strategy(),
        seed in any::<u64>(),
        t in -3.0f64..3.0,
    ) {
        let mut runner: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
        let ball = Ball { space, center: vec![0.0; dim], radius: 10.0 };
        let x: Vec<f64> = ball.sample(&mut runner);
        let y: Vec<f64> = ball.sample(&mut runner);
        let nx = space.norm(&x).unwrap();
        let ny = space.norm(&y).unwrap();
        prop_assert!(nx >= 0.0);
        // Triangle inequality, up to accumulated rounding.
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        prop_assert!(space.norm(&sum).unwrap() <= nx + ny + 1e-9 * (1.0 + nx + ny));
        // Absolute homogeneity.
        let scaled: Vec<f64> = x.iter().map(|a| a * t).collect();
        let ns = space.norm(&scaled).unwrap();
        prop_assert!((ns - t.abs() * nx).abs() <= 1e-9 * (1.0 + ns));
        // Definiteness at zero.
        prop_assert_eq!(space.norm(&vec![0.0; dim]).unwrap(), 0.0);
    }

    #[test]
    fn polyline_interpolates_its_vertices(
        n in 2usize..12,
        seed in any::<u64>(),
    ) {
        let mut rng: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
        use rand::Rng;
        let mut times = vec![0.0f64];
        for _ in 1..n {
            let last = *times.last().unwrap();
            times.push(last + rng.gen_range(0.1..1.0));
        }
        let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(-5.0..5.0); 2]).collect();
        let pl = Polyline::new(times.clone(), points.clone(), 100.0).unwrap();
        for (t, p) in times.iter().zip(&points) {
            let v = pl.eval(*t);
            prop_assert!(v.iter().zip(p).all(|(a, b)| (a - b).abs() <= 1e-12));
        }
        // Midpoints stay inside the segment's bounding interval per coordinate.
        for w in times.windows(2) {
            let mid = pl.eval(0.5 * (w[0] + w[1]));
            let a = pl.eval(w[0]);
            let b = pl.eval(w[1]);
            for i in 0..mid.len() {
                prop_assert!(mid[i] >= a[i].min(b[i]) - 1e-12 && mid[i] <= a[i].max(b[i]) + 1e-12);
            }
        }
    }

    #[test]
    fn tree_functionals_average_exactly(depth in 1usize..7, k in 0usize..6, j in 0usize..32) {
        prop_assume!(k < depth);
        prop_assume!(j < (1usize << k));
        let tree = build_dyadic_tree(depth as u32).unwrap();
        let p = &tree.functionals[k][j].coords;
        let l = &tree.functionals[k + 1][2 * j].coords;
        let r = &tree.functionals[k + 1][2 * j + 1].coords;
        for i in 0..p.len() {
            prop_assert_eq!(p[i], 0.5 * (l[i] + r[i]));
        }
    }

    #[test]
    fn affine_fit_error_is_monotone_in_samples(
        n in 3usize..20,
        extra in 1usize..8,
        seed in any::<u64>(),
    ) {
        let mut rng: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
        use rand::Rng;
        let gen = |rng: &mut rand_chacha::ChaCha8Rng| {
            let t: f64 = rng.gen_range(-1.0..1.0);
            (vec![t], vec![t.sin() + 0.3 * t * t])
        };
        let mut s: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|_| gen(&mut rng)).collect();
        let e1 = minimax_affine_fit(&s, &NormedSpace::l2(1)).unwrap().error;
        for _ in 0..extra {
            s.push(gen(&mut rng));
        }
        let e2 = minimax_affine_fit(&s, &NormedSpace::l2(1)).unwrap().error;
        prop_assert!(e2 >= e1 - 1e-9, "error dropped from {e1} to {e2}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lip_estimate_monotone_in_budget(seed in any::<u64>()) {
        let ball = Ball { space: NormedSpace::l2(2), center: vec![0.0; 2], radius: 1.0 };
        let f = LipschitzFunction::scalar(ball, Some(1.0), |x: &[f64]| {
            (x[0] * x[0] + x[1] * x[1]).sqrt()
        });
        let small = lip_at_scale(&f, 0.5, 100, seed).unwrap();
        let large = lip_at_scale(&f, 0.5, 200, seed).unwrap();
        prop_assert!(large.value >= small.value - 1e-15);
    }

    #[test]
    fn lip_estimate_nonincreasing_as_scale_grows(seed in any::<u64>()) {
        // Sawtooth: fine wiggles dominate small scales, flatten at large ones.
        let ball = Ball { space: NormedSpace::l2(1), center: vec![0.0], radius: 1.0 };
        let f = LipschitzFunction::scalar(ball, Some(1.0), |x: &[f64]| {
            0.05 * (x[0] * 20.0).sin()
        });
        let fine = lip_at_scale(&f, 0.05, 300, seed).unwrap();
        let coarse = lip_at_scale(&f, 0.9, 300, seed).unwrap();
        prop_assert!(coarse.value <= fine.value + 0.25);
    }

    #[test]
    fn cover_shrinking_rho_stays_covered(seed in 0u64..500) {
        let map = CompiledMap::new(ZooMapSpec::Fold).unwrap();
        let rep = cover_check(&map, &[0.0, 0.0], 1.0, 0.5, 6, seed, CoverMode::Verify).unwrap();
        prop_assert!(rep.covered);
        let rep2 = cover_check(&map, &[0.0, 0.0], 1.0, 0.25, 6, seed, CoverMode::Verify).unwrap();
        prop_assert!(rep2.covered);
        prop_assert!(rep2.worst_residual <= 1e-6);
    }

    #[test]
    fn extracted_martingale_always_validates(
        steps in 2usize..8,
        seed in any::<u64>(),
        delta in 0.2f64..0.8,
    ) {
        // Random 1-Lipschitz piecewise-linear curve on [0, 1].
        let mut rng: rand_chacha::ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
        use rand::Rng;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
        let mut points = vec![vec![0.0f64]];
        for w in times.windows(2) {
            let prev = points.last().unwrap()[0];
            let slope: f64 = rng.gen_range(-1.0..1.0);
            points.push(vec![prev + slope * (w[1] - w[0])]);
        }
        let curve = Polyline::new(times, points, 1.0).unwrap();
        let res = from_curve(&curve, &NormedSpace::l2(1), delta, 6, 64).unwrap();
        let rep = validate_martingale(&res.martingale, delta).unwrap();
        prop_assert!(rep.is_martingale, "averaging identity violated");
        prop_assert!(rep.is_bounded, "value escaped the Lipschitz bound");
        prop_assert!(rep.is_separated, "edge below the separation threshold");
        // Round trip: the integrated curve agrees with the input at 0 and 1.
        let g = to_curve(&res.martingale).unwrap();
        prop_assert!((g.eval(0.0)[0] - curve.eval(0.0)[0]).abs() <= 1e-9);
    }
}
