//! Run configuration, read from TOML. Every field has a default; the defaults
//! reproduce the single-ring ellipse experiment.

use crate::correlation::{CorrelationMethod, ScalingMode};
use crate::error::{Error, Result};
use crate::geometry::{build_scene, Scene, SceneConfig};
use crate::operators::{Amplitude, OperatorKind};
use crate::pulse::GaussianSine;
use crate::synthesis::{FrequencyRule, TimeGrid};
use crate::validation::ValidationConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Random point sources on a circle about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub count: usize,
    pub radius: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            count: 80,
            radius: 20.0,
            beta: 0.1,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Nyström nodes per obstacle.
    pub nodes: usize,
    pub frequencies: FrequencyRule,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nodes: 128,
            frequencies: FrequencyRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InversionConfig {
    pub operator: OperatorKind,
    /// Time shift of the test functions.
    pub tau: f64,
    /// Keep singular values with `σ_p / σ_1 ≥ ratio`.
    pub ratio: f64,
    pub amplitude: Amplitude,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            operator: OperatorKind::C,
            tau: 0.0,
            ratio: 0.005,
            amplitude: Amplitude::Spherical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationConfig {
    pub method: CorrelationMethod,
    pub scaling: ScalingMode,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self {
            method: CorrelationMethod::Fft,
            scaling: ScalingMode::DerivativeConsistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub pulse: GaussianSine,
    pub time: TimeGrid,
    pub sources: SourceConfig,
    /// Relative noise level δ, applied to the data the chosen operator uses.
    pub noise: f64,
    pub solver: SolverConfig,
    pub correlation: CorrelationConfig,
    pub inversion: InversionConfig,
    pub validation: ValidationConfig,
    pub output: PathBuf,
    /// Worker threads; all cores when absent.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scene: SceneConfig::default(),
            pulse: GaussianSine::default(),
            time: TimeGrid::default(),
            sources: SourceConfig::default(),
            noise: 0.05,
            solver: SolverConfig::default(),
            correlation: CorrelationConfig::default(),
            inversion: InversionConfig::default(),
            validation: ValidationConfig::default(),
            output: PathBuf::from("out"),
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        self.time.validate()?;
        if !(self.noise >= 0.0) {
            return Err(Error::Config(format!("noise level must be non-negative, got {}", self.noise)));
        }
        if self.sources.count == 0 || !(self.sources.radius > 0.0) || !(0.0..=1.0).contains(&self.sources.beta) {
            return Err(Error::Config(format!("invalid source parameters {:?}", self.sources)));
        }
        if self.solver.nodes < 8 || self.solver.nodes % 2 != 0 {
            return Err(Error::Config(format!("solver nodes must be even and ≥ 8, got {}", self.solver.nodes)));
        }
        if !(self.inversion.ratio > 0.0 && self.inversion.ratio <= 1.0) {
            return Err(Error::Config(format!("SVD ratio must lie in (0, 1], got {}", self.inversion.ratio)));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be positive".into()));
        }
        Ok(())
    }

    pub fn scene(&self) -> Result<Scene> {
        let scene = build_scene(&self.scene)?;
        scene.check_source_radius(self.sources.radius)?;
        Ok(scene)
    }

    /// Hash of everything that determines simulated data.
    pub fn data_hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            scene: &'a SceneConfig,
            pulse: &'a GaussianSine,
            time: &'a TimeGrid,
            sources: &'a SourceConfig,
            solver: &'a SolverConfig,
        }
        hash_json(&Key {
            scene: &self.scene,
            pulse: &self.pulse,
            time: &self.time,
            sources: &self.sources,
            solver: &self.solver,
        })
    }

    /// Hash of the whole configuration except output location and threads.
    pub fn full_hash(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        c.threads = None;
        hash_json(&c)
    }
}

fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("configuration serializes");
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryCurve;

    #[test]
    fn defaults_follow_the_ellipse_experiment() {
        let c = RunConfig::default();
        assert_eq!(c.sources.count, 80);
        assert_eq!(c.sources.radius, 20.0);
        assert_eq!(c.time.dt, 0.1);
        assert_eq!(c.time.record_half, 200);
        assert_eq!(c.inversion.ratio, 0.005);
        let scene = c.scene().unwrap();
        assert_eq!((scene.j(), scene.m()), (15, 15));
    }

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.scene.obstacles.push(BoundaryCurve::Disk {
            center: [1.75, 0.25],
            radius: 0.2,
        });
        c.scene.aperture = Some([-1.0, 1.0]);
        c.solver.frequencies = FrequencyRule::Uniform { pad: 80.0 };
        c.inversion.operator = OperatorKind::I;
        c.threads = Some(2);
        let text = c.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn partial_files_fill_defaults_and_unknown_keys_fail() {
        let c = RunConfig::from_toml("noise = 0.0\n[sources]\nbeta = 0.9\n").unwrap();
        assert_eq!(c.noise, 0.0);
        assert_eq!(c.sources.beta, 0.9);
        assert_eq!(c.sources.count, 80);
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
        assert!(RunConfig::from_toml("noise = -1.0\n").is_err());
    }

    #[test]
    fn hashes_ignore_output_and_track_data() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output = PathBuf::from("elsewhere");
        assert_eq!(a.full_hash(), b.full_hash());
        b.inversion.ratio = 0.01;
        assert_eq!(a.data_hash(), b.data_hash());
        assert_ne!(a.full_hash(), b.full_hash());
        b.sources.seed = 7;
        assert_ne!(a.data_hash(), b.data_hash());
    }
}
