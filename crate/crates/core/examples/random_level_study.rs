//! Kite imaged with the passive operator C for several random levels β and
//! source counts L. All source sets share one frequency sweep.

use tdlsm::config::{RunConfig, SourceConfig};
use tdlsm::experiment::{assemble, invert, simulate_variants};
use tdlsm::geometry::make_shape;
use tdlsm::operators::OperatorKind;

fn main() -> tdlsm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut cfg = RunConfig::default();
    cfg.scene.obstacles = vec![make_shape("kite", &[])?];
    cfg.time.lag_half = 100;
    cfg.scene.sampling_spacing = 0.08;
    let runs = [(0.1, 80), (0.5, 80), (0.9, 80), (0.9, 140), (0.9, 200)];
    let variants: Vec<SourceConfig> = runs
        .iter()
        .map(|&(beta, count)| SourceConfig { beta, count, ..cfg.sources })
        .collect();
    let sets = simulate_variants(&cfg, &variants)?;
    println!("{:>5} {:>5} {:>9} {:>8}", "β", "L", "contrast", "inside");
    for ((beta, count), data) in runs.iter().zip(&sets) {
        let op = assemble(&cfg, data, OperatorKind::C)?;
        let m = invert(&cfg, &data.scene, &op)?.metrics;
        println!("{beta:>5} {count:>5} {:>9.3} {:>8}", m.contrast, m.argmax_inside);
    }
    Ok(())
}
