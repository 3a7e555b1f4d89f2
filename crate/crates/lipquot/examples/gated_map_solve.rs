//! The gated coordinate-sum map: every directional derivative at the origin
//! vanishes (each summand is gated off near zero), yet the map is uniformly
//! surjective — any nearby target is hit by a point a bounded factor away.

use lipquot::space::{Ball, NormedSpace};
use lipquot::rng::stream;
use lipquot::zoo::{
    directional_derivative, jacobian_check, prop311_solve, CompiledMap, ZooMapSpec,
};

fn main() {
    let (n, m, p) = (8usize, 10usize, 2.0f64);
    let map = CompiledMap::new(ZooMapSpec::Prop311 { n, m, p }).unwrap();
    let dim = n * m;

    let jac = jacobian_check(&map, &vec![0.0; dim], 1e-6).unwrap();
    println!(
        "jacobian at 0: all {}x{} entries zero = {}, min singular value = {}",
        n,
        dim,
        jac.jacobian.iter().all(|r| r.iter().all(|&t| t == 0.0)),
        jac.min_singular_value
    );

    let dir = vec![1.0 / (dim as f64).sqrt(); dim];
    let dd = directional_derivative(&map, &vec![0.0; dim], &dir, 1e-9).unwrap();
    println!("directional derivative along the diagonal: {:?}", &dd.limit[..3.min(n)]);

    let domain = Ball { space: NormedSpace::l2(dim), center: vec![0.0; dim], radius: 1.0 };
    let mut rng = stream(11, "gated-example");
    let x: Vec<f64> = domain.sample(&mut rng);
    let fx = map.eval(&x).unwrap();
    let y: Vec<f64> = fx.iter().enumerate().map(|(i, v)| v + 0.05 * (i as f64 + 1.0)).collect();
    let sol = prop311_solve(n, m, p, &x, &y).expect("solve failed");
    println!("solve f(z) = y near x:");
    println!("  residual       : {:.2e}", sol.residual);
    println!("  |z - x| / |f(x) - y| = {:.3} (bounded by 20)", sol.ratio);
}
