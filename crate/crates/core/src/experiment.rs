//! End-to-end stages: simulate data, assemble an operator, invert it.

use crate::config::{RunConfig, SourceConfig};
use crate::correlation::{assemble_kernel, correlate_sources, CorrelationKernel};
use crate::error::{Error, Result};
use crate::geometry::{draw_sources, Point, RandomSourceSet, Scene};
use crate::inversion::{indicator_map, map_metrics, truncated_svd, IndicatorMap, MapMetrics, ProbeSettings, TruncatedSvd};
use crate::operators::{assemble_operator, ImagingOperator, KernelInput, OperatorKind};
use crate::pulse::{autocorrelate, Autocorrelation, LagGrid};
use crate::synthesis::{
    add_noise, plan_frequencies, sweep, synthesize_field, FieldPart, PulsedFieldSet, SweepRequest, TimeGrid,
    Weighting,
};
use ndarray::s;

/// Everything simulated for one source set.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub scene: Scene,
    pub sources: RandomSourceSet,
    pub grid: TimeGrid,
    pub frequencies: usize,
    /// `u_χ(nΔt, x_j; z_l)`, indexed `(n, j, l)`.
    pub passive_x: PulsedFieldSet,
    /// `u_χ(nΔt, y_m; z_l)`, indexed `(n, m, l)`.
    pub passive_y: PulsedFieldSet,
    /// `u^scat_χ̃(2n″Δt, x_j; y_m)`.
    pub active: PulsedFieldSet,
    /// `Φ_χ̃(2n′Δt, x_j; y_m)`.
    pub incident: PulsedFieldSet,
}

pub fn simulate(cfg: &RunConfig) -> Result<Dataset> {
    Ok(simulate_variants(cfg, &[cfg.sources])?.remove(0))
}

/// Simulate several source sets for the same scene with one frequency sweep.
pub fn simulate_variants(cfg: &RunConfig, variants: &[SourceConfig]) -> Result<Vec<Dataset>> {
    cfg.validate()?;
    let scene = build_scene_for(cfg, variants)?;
    let sets: Vec<RandomSourceSet> = variants
        .iter()
        .map(|v| draw_sources(v.count, v.radius, v.beta, v.seed))
        .collect::<Result<_>>()?;
    let far = scene
        .receivers
        .iter()
        .chain(&scene.sources)
        .map(|p| p.norm())
        .fold(0.0, f64::max);
    let radius = variants.iter().map(|v| v.radius).fold(0.0, f64::max);
    let horizon = cfg.time.record_length() + radius + 2.0 * far + 1.0;
    let plan = plan_frequencies(&cfg.pulse, cfg.solver.frequencies, horizon).map_err(|e| e.in_stage("frequency plan"))?;
    log::info!(
        "sweeping {} frequencies up to k = {:.2} for {} source set(s)",
        plan.len(),
        plan.k_max,
        sets.len()
    );
    let rings: Vec<Point> = scene.receivers.iter().chain(&scene.sources).copied().collect();
    let mut requests: Vec<SweepRequest<'_>> = sets
        .iter()
        .map(|s| SweepRequest {
            receivers: &rings,
            sources: &s.points,
            part: FieldPart::Total,
        })
        .collect();
    requests.push(SweepRequest {
        receivers: &scene.receivers,
        sources: &scene.sources,
        part: FieldPart::Scattered,
    });
    requests.push(SweepRequest {
        receivers: &scene.receivers,
        sources: &scene.sources,
        part: FieldPart::Incident,
    });
    let mut responses = sweep(&scene.obstacles, &plan, cfg.solver.nodes, &requests).map_err(|e| e.in_stage("frequency sweep"))?;
    let incident_resp = responses.pop().expect("incident request");
    let active_resp = responses.pop().expect("active request");
    let lags = cfg.time.lag_times();
    let active = synthesize_field(&active_resp, &plan, &lags, Weighting::ChiTilde)?;
    let incident = synthesize_field(&incident_resp, &plan, &lags, Weighting::ChiTilde)?;
    let times = cfg.time.record_times();
    let j = scene.j();
    sets.into_iter()
        .zip(responses)
        .map(|(set, resp)| {
            let both = synthesize_field(&resp, &plan, &times, Weighting::Chi)?;
            let split = |range: std::ops::Range<usize>| PulsedFieldSet {
                values: both.values.slice(s![.., range, ..]).to_owned(),
                ..both.clone()
            };
            Ok(Dataset {
                scene: scene.clone(),
                sources: set,
                grid: cfg.time,
                frequencies: plan.len(),
                passive_x: split(0..j),
                passive_y: split(j..rings.len()),
                active: active.clone(),
                incident: incident.clone(),
            })
        })
        .collect()
}

fn build_scene_for(cfg: &RunConfig, variants: &[SourceConfig]) -> Result<Scene> {
    let scene = cfg.scene()?;
    for v in variants {
        scene.check_source_radius(v.radius)?;
    }
    Ok(scene)
}

/// Distinct noise streams per dataset array.
fn noise_seed(seed: u64, tag: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(tag)
}

/// Passive kernel `c`, with noise on the passive records when `δ > 0`.
pub fn correlation_kernel(cfg: &RunConfig, data: &Dataset, delta: f64) -> Result<CorrelationKernel> {
    let seed = data.sources.seed;
    let (px, py) = if delta > 0.0 {
        (
            add_noise(&data.passive_x, delta, noise_seed(seed, 1))?,
            add_noise(&data.passive_y, delta, noise_seed(seed, 2))?,
        )
    } else {
        (data.passive_x.clone(), data.passive_y.clone())
    };
    let corr = correlate_sources(&px, &py, &data.grid, cfg.correlation.method)?;
    assemble_kernel(
        &corr,
        &data.incident,
        data.sources.radius,
        data.sources.len(),
        cfg.correlation.scaling,
    )
}

/// Operator of the given kind; noise `cfg.noise` goes on the data that kind uses.
pub fn assemble(cfg: &RunConfig, data: &Dataset, kind: OperatorKind) -> Result<ImagingOperator> {
    let dy = data.scene.source_spacing();
    match kind {
        OperatorKind::C => {
            let kernel = correlation_kernel(cfg, data, cfg.noise)?;
            assemble_operator(KernelInput::Passive(&kernel), kind, dy)
        }
        OperatorKind::I | OperatorKind::N => {
            let active = if cfg.noise > 0.0 {
                add_noise(&data.active, cfg.noise, noise_seed(data.sources.seed, 3))?
            } else {
                data.active.clone()
            };
            assemble_operator(KernelInput::Active(&active), kind, dy)
        }
    }
}

pub fn autocorrelation(cfg: &RunConfig) -> Result<Autocorrelation> {
    autocorrelate(&cfg.pulse, LagGrid::for_pulse(&cfg.pulse))
}

#[derive(Debug, Clone)]
pub struct Inversion {
    pub svd: TruncatedSvd,
    pub map: IndicatorMap,
    pub metrics: MapMetrics,
}

pub fn invert(cfg: &RunConfig, scene: &Scene, op: &ImagingOperator) -> Result<Inversion> {
    if op.receivers != scene.j() || op.sources != scene.m() {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}×{} blocks, scene has J = {}, M = {}",
            op.receivers,
            op.sources,
            scene.j(),
            scene.m()
        )));
    }
    let svd = truncated_svd(op, cfg.inversion.ratio).map_err(|e| e.in_stage("svd"))?;
    log::info!(
        "operator {}: {} of {} singular values retained",
        op.kind,
        svd.retained(),
        svd.spectrum.len()
    );
    let ac = autocorrelation(cfg)?;
    let settings = ProbeSettings {
        tau: cfg.inversion.tau,
        dt: op.dt,
        half: op.half,
        amplitude: cfg.inversion.amplitude,
    };
    let map = indicator_map(&svd, &scene.sampling_grid(), &ac, &scene.receivers, settings)?;
    let metrics = map_metrics(&map, scene);
    Ok(Inversion { svd, map, metrics })
}
