//! Fit the best affine map to sampled data in the minimax sense and show
//! the equioscillation structure on the absolute-value kink.

use lipquot::affine::minimax_affine_fit;
use lipquot::space::NormedSpace;

fn main() {
    let samples: Vec<(Vec<f64>, Vec<f64>)> = (0..201)
        .map(|i| {
            let t = -1.0 + i as f64 / 100.0;
            (vec![t], vec![t.abs()])
        })
        .collect();

    let fit = minimax_affine_fit(&samples, &NormedSpace::l2(1)).expect("fit failed");
    println!("best affine map for |t| on [-1, 1]:");
    println!("  slope  : {:.6}", fit.map.linear[0][0]);
    println!("  offset : {:.6}", fit.map.offset[0]);
    println!("  error  : {:.9} (exact value is 1/2)", fit.error);
    println!("  points attaining the error: {}", fit.active_count);

    // Adding samples can only reveal more of the function, so the minimax
    // error never decreases.
    let mut more = samples.clone();
    more.push((vec![0.003], vec![0.003f64.abs()]));
    let refit = minimax_affine_fit(&more, &NormedSpace::l2(1)).unwrap();
    println!("after adding a sample: error {:.9} >= {:.9}", refit.error, fit.error);
    assert!(refit.error >= fit.error - 1e-12);
}
