//! Passive correlation kernel against the antisymmetrized active scattered
//! field for the ellipse, on a reduced operator grid.

use tdlsm::config::RunConfig;
use tdlsm::experiment::simulate;
use tdlsm::validation::check_hk_time;

fn main() -> tdlsm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut cfg = RunConfig::default();
    cfg.time.lag_half = 100;
    let data = simulate(&cfg)?;
    let rep = check_hk_time(&cfg, &data)?;
    println!(
        "‖c − (u(t) − u(−t))‖ / ‖u(t) − u(−t)‖ = {:.4}  (‖c‖ = {:.4e}, ‖u(t) − u(−t)‖ = {:.4e})",
        rep.relative_error, rep.rhs, rep.lhs
    );
    println!("max|c| / max|Φ| = {:.4}", rep.params["kernel_to_incident"]);
    Ok(())
}
