//! Solving (f + g)(z) = y when f is co-Lipschitz (expands distances at rate
//! at least 1/c) and g is a small Lipschitz perturbation: stagewise
//! correction converges geometrically with explicit radius control.

use lipquot::lipfn::LipschitzFunction;
use lipquot::solvers::{perturb_solve, CoLipMap};
use lipquot::space::{Ball, NormedSpace};

fn main() {
    // f = identity on R (co-Lipschitz constant 1), g = 0.4 sin (Lipschitz 0.4).
    let f = CoLipMap::Linear { matrix: vec![vec![1.0]], co_lip: 1.0 };
    let ball = Ball { space: NormedSpace::l2(1), center: vec![0.0], radius: 100.0 };
    let g = LipschitzFunction::scalar(ball, Some(0.4), |t: &[f64]| 0.4 * t[0].sin());

    let y = 2.0;
    let out = perturb_solve(&f, &g, &[0.0], &[y], 1e-10).expect("solve failed");

    println!("solve z + 0.4 sin z = {y} starting from 0:");
    println!("  solution z      : {:.12}", out.point[0]);
    println!("  residual        : {:.2e}", out.residual);
    println!("  a-priori bound  : |z| <= {:.6}, actual {:.6}", out.bound, out.z[0].abs());
    println!("  stage radii     : {:?}", out.stage_radii.iter().map(|r| format!("{r:.2e}")).collect::<Vec<_>>());
    let ratios: Vec<f64> =
        out.stage_radii.windows(2).map(|w| w[1] / w[0]).collect();
    println!("  stage ratios    : {:?} (each <= 0.4)", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>());
}
