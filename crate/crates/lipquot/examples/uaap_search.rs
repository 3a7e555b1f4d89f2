//! Search for a ball on which a Lipschitz function is well approximated by
//! an affine map, and print the resulting certificate.

use lipquot::lipfn::LipschitzFunction;
use lipquot::space::{Ball, NormedSpace};
use lipquot::uaap::{uaap_search_scalar, UaapParams};

fn main() {
    let space = NormedSpace::l2(3);
    let ball = Ball { space, center: vec![0.0; 3], radius: 1.0 };
    // Distance to an off-center anchor: 1-Lipschitz, smooth away from the anchor.
    let anchor = [1.4, -0.3, 0.7];
    let f = LipschitzFunction::scalar(ball, Some(1.0), move |x: &[f64]| {
        x.iter().zip(&anchor).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    });

    let params = UaapParams::new(0.1, 42);
    let cert = uaap_search_scalar(&f, &params).expect("search failed");

    println!("accuracy eps     : {}", cert.eps);
    println!("slack delta      : {:.6}", cert.delta);
    println!("scale counter k  : {}", cert.k);
    println!("accepted scale d : {:.6}", cert.d);
    println!("ball center      : {:?}", cert.center);
    println!("ball radius      : {:.6e} (floor {:.6e})", cert.radius, cert.radius_floor);
    println!("affine row       : {:?}", cert.map.linear[0]);
    println!("affine offset    : {:?}", cert.map.offset);
    println!("claimed bound    : {:.6e}", cert.bound_claim);
    println!("sampled error    : {:.6e}", cert.sampled_error);
    assert!(cert.sampled_error <= cert.bound_claim * 1.1);
    println!("certificate validated: sampled error within the claimed bound");
}
