//! On a Euclidean ball where every coordinate functional is small, the map
//! x -> |x_i| still resists affine approximation: a segment through the
//! kink shows a minimax error of at least a quarter of its radius.

use lipquot::counterexamples::absmap_witness;

fn main() {
    let n = 64;
    let center = vec![0.005; n]; // ell_2 norm 0.04, well inside the unit ball
    let r = 0.5;
    let rep = absmap_witness(n, r, &center).expect("witness failed");

    println!("coordinate absolute value on ell_2^{n}, ball radius {r}:");
    println!("  affine-error lower bound: {:.6} (threshold r/4 = {})", rep.lower_bound, r / 4.0);
    println!("  passed: {}", rep.passed);
    for note in &rep.notes {
        println!("  note: {note}");
    }
}
