//! The net-translation map on X x X x R: it vanishes identically on the
//! unit ball of the zero slice, has a small Lipschitz constant, and still
//! covers image balls of radius r/32 around small centers.

use lipquot::zoo::{build_prop41_spec, cover_check, CompiledMap, CoverMode, ZooMapSpec};

fn main() {
    let spec = build_prop41_spec(2, 2.0, 0.5, -8, -1, 3.0, 0).expect("spec build failed");
    println!(
        "dyadic levels k = {}..{}, net sizes: {:?}",
        spec.k_min,
        spec.k_max,
        spec.nets.iter().map(|n| n.points.len()).collect::<Vec<_>>()
    );
    let map = CompiledMap::new(ZooMapSpec::Prop41(spec)).unwrap();

    // Exact vanishing on the unit ball of the lambda = 0 slice.
    let v = map.eval(&[0.3, 0.1, 0.2, -0.4, 0.0]).unwrap();
    println!("T(x, y, 0) = {v:?} (exactly zero)");

    // Covering: image balls of radius r/32 are covered from the r-ball
    // around centers with a small vertical coordinate (|lambda0| < r/48).
    for (i, r) in [0.2f64, 0.5, 1.0].iter().enumerate() {
        let center = [0.05, -0.05, 0.1, 0.0, r / 60.0];
        let rep = cover_check(&map, &center, *r, r / 32.0, 12, i as u64, CoverMode::Verify)
            .expect("cover check failed");
        println!(
            "r = {r}: rho = r/32 = {:.4}, worst residual {:.2e}, covered = {}",
            r / 32.0,
            rep.worst_residual,
            rep.covered
        );
    }
}
