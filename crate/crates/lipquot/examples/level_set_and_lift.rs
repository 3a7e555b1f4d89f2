//! Two views of the planar folding map (the square map in complex
//! coordinates, normalized to be 1-Lipschitz-like in the radial direction):
//! enumerate a level set on a box, then lift a circle arc through the map.

use lipquot::solvers::{level_set, lift_curve, Polyline};
use lipquot::space::NormedSpace;
use lipquot::zoo::{CompiledMap, ZooMapSpec};

fn main() {
    let map = CompiledMap::new(ZooMapSpec::Fold).unwrap();

    let rep = level_set(&map, &[1.0, 0.0], &[-3.0, -3.0], &[3.0, 3.0], 0.01, 1e-6)
        .expect("level set failed");
    println!("level set of the fold at target (1, 0) on [-3, 3]^2:");
    for (p, r) in rep.points.iter().zip(&rep.residuals) {
        println!("  point ({:+.6}, {:+.6})   residual {:.2e}", p[0], p[1], r);
    }
    println!("  minimum pair gap: {:?}", rep.min_pair_gap);

    // Lift the unit-speed arc t -> (cos t, sin t) starting at its preimage
    // (1, 0); the exact lift runs at half speed.
    let steps = 512;
    let times: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let pts: Vec<Vec<f64>> = times.iter().map(|&t| vec![t.cos(), t.sin()]).collect();
    let xi = Polyline::new(times, pts, 1.0).unwrap();
    let phi = lift_curve(&map, &[1.0, 0.0], &xi, 200).expect("lift failed");

    let end = phi.points.last().unwrap();
    let exact = [0.5f64.cos(), 0.5f64.sin()];
    let dev = NormedSpace::l2(2).dist(end, &exact).unwrap();
    println!("lift of the arc:");
    println!("  measured lift speed : {:.6} (exact lift has speed 1/2)", phi.lip_bound);
    println!("  endpoint            : ({:.6}, {:.6})", end[0], end[1]);
    println!("  distance to analytic: {dev:.2e}");
}
