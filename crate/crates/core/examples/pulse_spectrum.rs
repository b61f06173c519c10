//! Spectrum, effective band and autocorrelation of the probing pulse, and the
//! frequency plan derived from them.

use tdlsm::pulse::{autocorrelate, band_upper_edge, transform_at, GaussianSine, LagGrid, Waveform, BAND_EPS};
use tdlsm::synthesis::{plan_frequencies, FrequencyRule};

fn main() -> tdlsm::Result<()> {
    let pulse = GaussianSine::default();
    let (t0, t1) = pulse.support();
    println!("pulse support [{t0:.3}, {t1:.3}]");
    let peak = transform_at(&pulse, pulse.carrier)?.norm();
    for k in [0.0, 1.0, 2.0, 4.0, 6.0, 9.0, 12.0] {
        let v = transform_at(&pulse, k)?;
        println!("k = {k:5.1}  |χ̂| = {:.4e}  relative {:.3e}", v.norm(), v.norm() / peak);
    }
    let edge = band_upper_edge(&pulse, BAND_EPS, 40.0)?;
    println!("band edge at {BAND_EPS:e} of peak: k = {edge:.3}");

    for horizon in [50.0, 100.0] {
        let plan = plan_frequencies(&pulse, FrequencyRule::default(), horizon)?;
        println!("horizon {horizon}: {} frequency nodes up to k = {:.3}", plan.len(), plan.k_max);
    }

    let ac = autocorrelate(&pulse, LagGrid::for_pulse(&pulse))?;
    println!(
        "autocorrelation: χ̃(0) = {:.6} (energy {:.6}), effective half width {:.3}",
        ac.eval(0.0),
        ac.energy(),
        ac.support_half_width()
    );
    Ok(())
}
