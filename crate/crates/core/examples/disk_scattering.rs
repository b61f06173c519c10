//! Scattered field of a sound-soft disk from the Nyström solver, compared with
//! the separation-of-variables series.

use tdlsm::geometry::{BoundaryCurve, Point};
use tdlsm::helmholtz::{assemble_bie, disk_oracle};

fn main() -> tdlsm::Result<()> {
    let center = Point::new(0.0, 0.0);
    let radius = 1.0 / 3.0;
    let disk = BoundaryCurve::Disk {
        center: [0.0, 0.0],
        radius,
    };
    let y = Point::new(-2.0, 0.5);
    let x = Point::new(1.5, 1.0);
    println!("{:>4} {:>6} {:>26} {:>10}", "k", "nodes", "u_scat(x; y)", "rel err");
    for k in [2.0, 4.0, 8.0] {
        let exact = disk_oracle(&center, radius, k, &x, &y)?;
        for n in [16, 32, 64, 128] {
            let bie = assemble_bie(std::slice::from_ref(&disk), k, n)?;
            let u = bie.solve_point_source(&y)?.scattered(&x)?;
            println!(
                "{k:>4} {n:>6} {:>12.8} {:+.8}i {:>10.2e}",
                u.re,
                u.im,
                (u - exact).norm() / exact.norm()
            );
        }
    }
    Ok(())
}
