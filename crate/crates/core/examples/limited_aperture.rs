//! Kite with measurements restricted to the arc (−π/3, π/3) of the ring,
//! imaged with C, I and N.

use tdlsm::config::RunConfig;
use tdlsm::experiment::{assemble, invert, simulate};
use tdlsm::geometry::make_shape;
use tdlsm::operators::OperatorKind;

fn main() -> tdlsm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let third = std::f64::consts::FRAC_PI_3;
    let mut cfg = RunConfig::default();
    cfg.scene.obstacles = vec![make_shape("kite", &[])?];
    cfg.scene.aperture = Some([-third, third]);
    cfg.time.lag_half = 100;
    cfg.scene.sampling_spacing = 0.08;
    let data = simulate(&cfg)?;
    println!("J = {}, M = {}", data.scene.j(), data.scene.m());
    for kind in [OperatorKind::C, OperatorKind::I, OperatorKind::N] {
        let op = assemble(&cfg, &data, kind)?;
        let m = invert(&cfg, &data.scene, &op)?.metrics;
        println!(
            "I_{kind}: argmax ({:.2}, {:.2}) inside: {}, contrast {:.2}",
            m.argmax[0], m.argmax[1], m.argmax_inside, m.contrast
        );
    }
    Ok(())
}
