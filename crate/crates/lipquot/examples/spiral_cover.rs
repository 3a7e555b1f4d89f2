//! The spiral collapse on R^2 x R kills the unit disk of the boundary slice
//! yet remains surjective near it: small image balls are covered by domain
//! balls whose radius degrades only polynomially.

use lipquot::zoo::{cover_check, zoo_eval, CompiledMap, CoverMode, ZooMapSpec};

fn main() {
    let map = CompiledMap::new(ZooMapSpec::Prop42).unwrap();

    // Exact collapse and exact identity.
    println!("T(0.3, 0.4, 0)   = {:?}", zoo_eval(&ZooMapSpec::Prop42, &[0.3, 0.4, 0.0]).unwrap());
    println!("T(2.5, 0, 0.2)   = {:?}", zoo_eval(&ZooMapSpec::Prop42, &[2.5, 0.0, 0.2]).unwrap());

    // Interior case: center inside the disk, small slice parameter; the
    // image ball of radius r^3/400 is covered by the domain r-ball.
    let r = 0.5;
    let center = [0.5, 0.0, 0.01];
    let rho = r * r * r / 400.0;
    let rep = cover_check(&map, &center, r, rho, 16, 7, CoverMode::Verify).unwrap();
    println!(
        "interior cover  : r = {r}, rho = {rho:.2e}, worst residual {:.2e}, covered = {}",
        rep.worst_residual, rep.covered
    );

    // Boundary case: center just outside the disk; radius r^2/400.
    let center = [1.02, 0.0, 0.01];
    let rho = r * r / 400.0;
    let rep = cover_check(&map, &center, r, rho, 16, 8, CoverMode::Verify).unwrap();
    println!(
        "boundary cover  : r = {r}, rho = {rho:.2e}, worst residual {:.2e}, covered = {}",
        rep.worst_residual, rep.covered
    );

    // Bisect mode searches for the largest covered radius.
    let rep = cover_check(&map, &[0.5, 0.0, 0.01], r, rho, 8, 9, CoverMode::Bisect).unwrap();
    println!("bisect          : largest covered rho ~ {:?}", rep.covered_radius);
}
