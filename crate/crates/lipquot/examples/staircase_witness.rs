//! The staircase curve in ell_1^n: three collinear parameters whose images
//! form a wide midpoint gap, so any affine approximation of the curve errs
//! by at least half the step length.

use lipquot::counterexamples::{staircase_point, staircase_witness};
use lipquot::space::NormedSpace;

fn main() {
    let (n, k, l) = (8, 0, 2);
    let rep = staircase_witness(n, k, l).expect("witness failed");

    println!("staircase in ell_1^{n}, window start {k}, half-width {l}:");
    println!("  parameters      : {:?}", rep.points.iter().map(|p| p[0]).collect::<Vec<_>>());
    let l1 = NormedSpace::lp(n, 1.0).unwrap();
    let mid: Vec<f64> = (0..n)
        .map(|i| rep.values[1][i] - 0.5 * (rep.values[0][i] + rep.values[2][i]))
        .collect();
    println!("  midpoint gap    : {} (exactly l = {l})", l1.norm(&mid).unwrap());
    println!("  minimax error   : {:.9} (exactly l/2)", rep.lower_bound);
    println!("  passed          : {}", rep.passed);

    // The curve itself is 1-Lipschitz into ell_1: consecutive unit steps
    // move exactly one coordinate by one.
    let a = staircase_point(n, 3.0);
    let b = staircase_point(n, 4.0);
    println!("  unit step length: {}", l1.dist(&a, &b).unwrap());
}
