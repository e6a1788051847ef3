//! TOML experiment configuration.
//!
//! ```toml
//! seed = 42
//! output_dir = "out"
//!
//! [group]
//! kind = "schottky"
//! midpoint = 0.6
//!
//! [metric]
//! epsilon = 0.02
//! [[metric.bumps]]
//! center = [0.3, 0.3]
//! radius = 0.5
//! amplitude = 0.25
//!
//! [rigidity]
//! epsilons = [0.0, 0.01, 0.02, 0.04]
//!
//! [riccati.profile]
//! kind = "fourier"
//! mean = -1.0
//! sin = [-0.5]
//! period = 1.0
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{EntropyConfig, RigidityConfig};
use crate::geodesic::FlowConfig;
use crate::hyperbolic::{FuchsianGroup, GeodesicClass, GroupSpec};
use crate::lyapunov::LyapunovConfig;
use crate::metric::{ConformalMetric, MetricSpec};
use crate::ode::Tolerances;
use crate::orbits::{refine_orbit, ShootingConfig};
use crate::profile::CurvatureProfile;
use crate::riccati::StepControl;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSpec {
    pub flow_rtol: f64,
    pub riccati_rtol: f64,
    /// Riccati residual ceiling.
    pub residual: f64,
    pub periodicity: f64,
    pub shooting_residual: f64,
    pub closure: f64,
    pub chain: f64,
    /// Checks on spreads and gaps.
    pub report: f64,
    /// Oracle horizon in periods.
    pub oracle_periods: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        Self {
            flow_rtol: 1e-12,
            riccati_rtol: 1e-12,
            residual: 1e-6,
            periodicity: 1e-10,
            shooting_residual: 1e-11,
            closure: 1e-8,
            chain: 1e-6,
            report: 1e-6,
            oracle_periods: 500.0,
        }
    }
}

impl ToleranceSpec {
    fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("flow_rtol", self.flow_rtol),
            ("riccati_rtol", self.riccati_rtol),
            ("residual", self.residual),
            ("periodicity", self.periodicity),
            ("shooting_residual", self.shooting_residual),
            ("closure", self.closure),
            ("chain", self.chain),
            ("report", self.report),
            ("oracle_periods", self.oracle_periods),
        ];
        for (k, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(
                    &format!("tolerances.{k}"),
                    format!("must be positive, got {v}"),
                ));
            }
        }
        Ok(())
    }

    fn ode(rtol: f64) -> Tolerances {
        Tolerances {
            h_max: 0.05,
            ..Tolerances::default().with_rtol(rtol)
        }
    }

    pub fn step_control(&self) -> StepControl {
        StepControl {
            ode: Self::ode(self.riccati_rtol),
            residual_tol: self.residual,
            ..StepControl::default()
        }
    }

    pub fn lyapunov(&self) -> LyapunovConfig {
        LyapunovConfig {
            step: self.step_control(),
            periodicity_tol: self.periodicity,
            oracle_periods: self.oracle_periods,
            oracle_tolerances: Self::ode(self.riccati_rtol),
            ..LyapunovConfig::default()
        }
    }

    pub fn shooting(&self) -> ShootingConfig {
        ShootingConfig {
            residual_tol: self.shooting_residual,
            closure_tol: self.closure,
            tolerances: Self::ode(self.flow_rtol),
            ..ShootingConfig::default()
        }
    }

    pub fn flow(&self) -> FlowConfig {
        FlowConfig {
            tolerances: Self::ode(self.flow_rtol),
            ..FlowConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CensusSpec {
    pub max_word_length: usize,
}

impl Default for CensusSpec {
    fn default() -> Self {
        Self { max_word_length: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RigiditySpec {
    /// Epsilon ladder, ascending.
    pub epsilons: Vec<f64>,
    /// Defaults to `census.max_word_length`.
    pub max_word_length: Option<usize>,
    pub grid_resolution: usize,
}

impl Default for RigiditySpec {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0],
            max_word_length: None,
            grid_resolution: 96,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySpec {
    pub mc_samples: usize,
    pub horizon: f64,
    pub settle: f64,
    pub max_word_length: usize,
}

impl Default for EntropySpec {
    fn default() -> Self {
        Self {
            mc_samples: 200,
            horizon: 50.0,
            settle: 20.0,
            max_word_length: 6,
        }
    }
}

/// Curvature profile for the standalone Riccati analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    Fourier {
        mean: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
        period: f64,
    },
    /// CSV of `t,K` rows, linearly interpolated, period = last `t`.
    Sampled {
        path: PathBuf,
    },
    /// Curvature along the refined closed geodesic of `word` for the
    /// configured group and metric.
    FromOrbit {
        word: String,
    },
    /// Constant diagonal curvature matrix (matrix mode).
    Diagonal {
        curvatures: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiccatiSpec {
    pub profile: ProfileSpec,
    /// Declared pinching bounds `[b, c]`; sampled from the profile when absent.
    #[serde(default)]
    pub bounds: Option<[f64; 2]>,
    #[serde(default)]
    pub settle_horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub group: GroupSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub census: CensusSpec,
    #[serde(default)]
    pub rigidity: RigiditySpec,
    #[serde(default)]
    pub entropy: EntropySpec,
    #[serde(default)]
    pub riccati: Option<RiccatiSpec>,
    /// Directory relative paths are resolved against; set by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tolerances.validate()?;
        let eps = &self.rigidity.epsilons;
        if eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(invalid(
                "rigidity.epsilons",
                "entries must be finite and nonnegative",
            ));
        }
        if eps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid(
                "rigidity.epsilons",
                "ladder must be strictly ascending",
            ));
        }
        if self.rigidity.grid_resolution < 4 {
            return Err(invalid("rigidity.grid_resolution", "must be at least 4"));
        }
        if !(self.entropy.horizon > 0.0) {
            return Err(invalid("entropy.horizon", "must be positive"));
        }
        if !(self.entropy.settle > 0.0) {
            return Err(invalid("entropy.settle", "must be positive"));
        }
        if !(self.metric.base_curvature < 0.0) {
            return Err(invalid("metric.base_curvature", "must be negative"));
        }
        if let Some(r) = &self.riccati {
            if let Some([b, c]) = r.bounds {
                if !(b >= 0.0 && c >= b) {
                    return Err(invalid("riccati.bounds", "need 0 <= b <= c"));
                }
            }
            if r.settle_horizon.is_some_and(|s| !(s > 0.0)) {
                return Err(invalid("riccati.settle_horizon", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn group(&self) -> Result<FuchsianGroup, ConfigError> {
        FuchsianGroup::from_spec(self.group).map_err(|e| invalid("group", e.to_string()))
    }

    pub fn metric(&self) -> Result<ConformalMetric, ConfigError> {
        ConformalMetric::new(self.group()?, self.metric.clone())
            .map_err(|e| invalid("metric", e.to_string()))
    }

    pub fn rigidity_config(&self) -> RigidityConfig {
        RigidityConfig {
            max_word_length: self
                .rigidity
                .max_word_length
                .unwrap_or(self.census.max_word_length),
            shooting: self.tolerances.shooting(),
            lyapunov: self.tolerances.lyapunov(),
            grid_resolution: self.rigidity.grid_resolution,
            tol: self.tolerances.report,
            chain_tol: self.tolerances.chain,
        }
    }

    pub fn entropy_config(&self) -> EntropyConfig {
        EntropyConfig {
            mc_samples: self.entropy.mc_samples,
            horizon: self.entropy.horizon,
            settle: self.entropy.settle,
            max_word_length: self.entropy.max_word_length,
            seed: self.seed,
            flow: self.tolerances.flow(),
            step: self.tolerances.step_control(),
            ..EntropyConfig::default()
        }
    }

    /// Build the configured Riccati profile. Refining an orbit can fail at
    /// run time, hence the boxed error.
    pub fn riccati_profile(
        &self,
    ) -> Result<CurvatureProfile, Box<dyn std::error::Error + Send + Sync>> {
        let spec = self
            .riccati
            .as_ref()
            .ok_or_else(|| invalid("riccati", "section missing"))?;
        let profile = match &spec.profile {
            ProfileSpec::Constant { value } => CurvatureProfile::constant(*value),
            ProfileSpec::Fourier {
                mean,
                cos,
                sin,
                period,
            } => CurvatureProfile::fourier(*mean, cos.clone(), sin.clone(), *period)
                .map_err(|e| invalid("riccati.profile", e.to_string()))?,
            ProfileSpec::Sampled { path } => {
                let (t, k) = read_samples(&self.base_dir.join(path))?;
                CurvatureProfile::sampled(t, k)
                    .map_err(|e| invalid("riccati.profile.path", e.to_string()))?
            }
            ProfileSpec::FromOrbit { word } => {
                let metric = self.metric()?;
                let class = GeodesicClass::from_word(&metric.group, word)
                    .map_err(|e| invalid("riccati.profile.word", e.to_string()))?;
                let orbit = refine_orbit(&metric, &class, &self.tolerances.shooting())?;
                orbit.profile.expect("refined orbits carry a profile")
            }
            ProfileSpec::Diagonal { curvatures } => {
                if curvatures.is_empty() {
                    return Err(invalid("riccati.profile.curvatures", "must not be empty").into());
                }
                CurvatureProfile::diagonal(curvatures)
            }
        };
        Ok(match spec.bounds {
            Some([b, c]) => profile
                .with_bounds(b, c)
                .map_err(|e| invalid("riccati.bounds", e.to_string()))?,
            None => profile.with_sampled_bounds(4096),
        })
    }
}

/// `t,K` rows; a non-numeric first row is taken as a header.
fn read_samples(path: &Path) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut t = Vec::new();
    let mut k = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (cols.len() == 2).then(|| (cols[0].parse::<f64>(), cols[1].parse::<f64>()));
        match parsed {
            Some((Ok(a), Ok(b))) => {
                t.push(a);
                k.push(b);
            }
            _ if i == 0 => continue,
            _ => {
                return Err(invalid(
                    "riccati.profile.path",
                    format!("{}: bad row {}", path.display(), i + 1),
                ))
            }
        }
    }
    Ok((t, k))
}
