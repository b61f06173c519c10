//! Helmholtz–Kirchhoff identity in free space and with an ellipse, for growing
//! source-circle radius.

use tdlsm::geometry::{make_shape, Point};
use tdlsm::validation::{check_hk_free, check_hk_total};

fn main() -> tdlsm::Result<()> {
    let p = Point::new(0.5, 1.0);
    let q = Point::new(1.5, 1.0);
    println!("free space, k = 4, |p − q| = 1");
    for r in [10.0, 20.0, 40.0, 80.0, 160.0] {
        let rep = check_hk_free(4.0, &p, &q, r, 1024)?;
        println!("  R = {r:5}: relative error {:.3e}", rep.relative_error);
    }
    let ellipse = make_shape("ellipse", &[])?;
    let (p, q) = (Point::new(3.5, 1.0), Point::new(1.0, 3.5));
    println!("ellipse, k = 4, p and q on the measurement ring");
    for r in [10.0, 20.0, 40.0] {
        for rep in check_hk_total(4.0, &p, &q, std::slice::from_ref(&ellipse), r, 1024, 128)? {
            println!("  R = {r:4} {:?}: relative error {:.3e}", rep.identity, rep.relative_error);
        }
    }
    Ok(())
}
