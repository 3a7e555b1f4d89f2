//! Interval martingales with separated jumps: integrate one to a Lipschitz
//! curve, extract one back from a curve, and compute the quantity that
//! obstructs bi-Lipschitz embeddings (a quarter of the jump size).

use lipquot::counterexamples::staircase_polyline;
use lipquot::martingale::{
    edge_stats, frechet_obstruction, from_curve, rademacher, to_curve, validate_martingale,
};
use lipquot::space::NormedSpace;

fn main() {
    // Depth-1 signed example: value 0 on [0,1), values +1 / -1 on the halves.
    let m = rademacher();
    let rep = validate_martingale(&m, 1.0).unwrap();
    println!(
        "signed example: martingale = {}, bound = {}, min jump = {:?}",
        rep.is_martingale, rep.bound, rep.min_separation
    );

    let tent = to_curve(&m).unwrap();
    println!("integrated curve vertices:");
    for (t, p) in tent.times.iter().zip(&tent.points) {
        println!("  F({t}) = {:?}", p);
    }

    let back = from_curve(&tent, &NormedSpace::l2(1), 0.4, 6, 256).unwrap().martingale;
    println!("round trip: split at {:?}, depth {}", back.root.b, back.depth());

    let lb = frechet_obstruction(&m, 0.25, 1.0).unwrap();
    println!("embedding obstruction at x0 = 0.25, eta = 1: {lb}");

    // Extract a martingale from the normalized staircase curve.
    let curve = staircase_polyline(8).unwrap();
    let space = NormedSpace::lp(8, 1.0).unwrap();
    let mart = from_curve(&curve, &space, 0.4, 8, 256).unwrap().martingale;
    println!("staircase martingale: depth {}", mart.depth());
    for e in edge_stats(&mart).unwrap().iter().take(3) {
        println!(
            "  edge {:?} -> {:?}: jump {:.3}, width ratio {:.2}",
            e.parent_interval, e.child_interval, e.separation, e.width_ratio
        );
    }
}
