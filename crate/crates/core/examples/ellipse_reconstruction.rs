//! Full pipeline for the ellipse: simulate once, then image with the passive
//! operator C and the active operators I and N. Heatmaps go to
//! `out/ellipse/`.

use std::path::Path;
use tdlsm::config::RunConfig;
use tdlsm::experiment::{assemble, invert, simulate};
use tdlsm::operators::OperatorKind;
use tdlsm::render::{heatmap, write_csv, write_pgm};

fn main() -> tdlsm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut cfg = RunConfig::default();
    // Reduced grid; drop these two lines for the full-size run.
    cfg.time.lag_half = 100;
    cfg.scene.sampling_spacing = 0.08;
    let out = Path::new("out/ellipse");
    std::fs::create_dir_all(out).map_err(|e| tdlsm::Error::io(out, e))?;

    let data = simulate(&cfg)?;
    for kind in [OperatorKind::C, OperatorKind::I, OperatorKind::N] {
        let op = assemble(&cfg, &data, kind)?;
        let inv = invert(&cfg, &data.scene, &op)?;
        let m = inv.metrics;
        println!(
            "I_{kind}: {} singular values kept, argmax ({:.2}, {:.2}) inside: {}, contrast {:.2}",
            inv.svd.retained(),
            m.argmax[0],
            m.argmax[1],
            m.argmax_inside,
            m.contrast
        );
        write_pgm(&out.join(format!("{kind}.pgm")), &heatmap(&inv.map, Some(&data.scene.obstacles)))?;
        write_csv(&out.join(format!("{kind}.csv")), &inv.map)?;
    }
    Ok(())
}
