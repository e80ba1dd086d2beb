use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::mpc::DemandSchedule;
use crate::ot::ParticleCloud;

/// How a particle cloud is given in a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CloudSpec {
    /// Points as rows; uniform weights when `weights` is omitted.
    Explicit {
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    /// `count` equal-weight points drawn uniformly from the box `[low, high]`.
    UniformBox {
        count: usize,
        low: Vec<f64>,
        high: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// `count` equal-weight points from an isotropic Gaussian.
    Gaussian {
        count: usize,
        mean: Vec<f64>,
        std: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl CloudSpec {
    /// Dimension implied by the spec, if it has any points.
    pub fn dim(&self) -> Option<usize> {
        match self {
            CloudSpec::Explicit { points, .. } => points.first().map(Vec::len),
            CloudSpec::UniformBox { low, .. } => Some(low.len()),
            CloudSpec::Gaussian { mean, .. } => Some(mean.len()),
        }
    }

    /// Builds the cloud. Samplers without their own seed use `fallback_seed`.
    pub fn materialize(&self, fallback_seed: u64) -> Result<ParticleCloud<f64>, ScenarioError> {
        let cloud = match self {
            CloudSpec::Explicit { points, weights } => {
                let weights = match weights {
                    Some(w) => w.clone(),
                    None => vec![1.0 / points.len().max(1) as f64; points.len()],
                };
                ParticleCloud::from_rows(points, weights)
            }
            CloudSpec::UniformBox { count, low, high, seed } => {
                if low.len() != high.len() {
                    return Err(ScenarioError::invalid("uniform_box: low and high differ in length"));
                }
                if low.iter().zip(high).any(|(l, h)| !(l < h)) {
                    return Err(ScenarioError::invalid("uniform_box: every low must be below high"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(fallback_seed));
                let mut points = Vec::with_capacity(count * low.len());
                for _ in 0..*count {
                    for (l, h) in low.iter().zip(high) {
                        points.push(rng.random_range(*l..*h));
                    }
                }
                ParticleCloud::uniform(low.len(), points)
            }
            CloudSpec::Gaussian { count, mean, std, seed } => {
                let normal = Normal::new(0.0, *std)
                    .map_err(|_| ScenarioError::invalid(format!("gaussian: std {std} is not valid")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(fallback_seed));
                let mut points = Vec::with_capacity(count * mean.len());
                for _ in 0..*count {
                    for m in mean {
                        points.push(m + normal.sample(&mut rng));
                    }
                }
                ParticleCloud::uniform(mean.len(), points)
            }
        };
        cloud.map_err(ScenarioError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub start: f64,
    pub cloud: CloudSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Plan,
    ClosedLoop,
    Oracle,
    Mpc,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plan => "plan",
            Mode::ClosedLoop => "closed_loop",
            Mode::Oracle => "oracle",
            Mode::Mpc => "mpc",
        }
    }
}

/// A scenario file. The demand is given either as `demand` (static) or as
/// `demand_schedule` (piecewise constant in time), never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub resource: CloudSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<CloudSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_schedule: Option<Vec<SegmentSpec>>,
    pub alpha: f64,
    pub horizon: f64,
    pub steps: usize,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    /// Window length of the receding-horizon controller; defaults to `horizon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replan_horizon: Option<f64>,
}

/// Command-line overrides of scenario fields.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
}

/// Demand resolved to clouds.
#[derive(Debug, Clone, PartialEq)]
pub enum Demand {
    Static(ParticleCloud<f64>),
    Schedule(DemandSchedule<f64>),
}

impl Demand {
    /// The demand in force at `t`.
    pub fn at(&self, t: f64) -> &ParticleCloud<f64> {
        match self {
            Demand::Static(c) => c,
            Demand::Schedule(s) => s.demand_at(t),
        }
    }

    pub fn as_static(&self) -> Option<&ParticleCloud<f64>> {
        match self {
            Demand::Static(c) => Some(c),
            Demand::Schedule(s) if s.segment_count() == 1 => Some(&s.clouds()[0]),
            Demand::Schedule(_) => None,
        }
    }
}

/// Resource and demand clouds built from a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub resource: ParticleCloud<f64>,
    pub demand: Demand,
}

// Independent sampler streams for the resource, the demand and each segment.
fn stream_seed(seed: u64, stream: u64) -> u64 {
    seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(a) = overrides.alpha {
            self.alpha = a;
        }
        if let Some(h) = overrides.horizon {
            self.horizon = h;
        }
        if let Some(s) = overrides.steps {
            self.steps = s;
        }
        if let Some(s) = overrides.seed {
            self.seed = s;
        }
    }

    pub fn replan_horizon(&self) -> f64 {
        self.replan_horizon.unwrap_or(self.horizon)
    }

    /// Checks every field and that the clouds can be built.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.dim == 0 {
            return Err(ScenarioError::invalid("dim must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ScenarioError::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(ScenarioError::invalid(format!(
                "horizon must be nonnegative, got {}",
                self.horizon
            )));
        }
        if self.horizon == 0.0 && matches!(self.mode, Mode::Oracle | Mode::Mpc) {
            return Err(ScenarioError::invalid(format!(
                "mode {} needs a positive horizon",
                self.mode.as_str()
            )));
        }
        if self.steps == 0 {
            return Err(ScenarioError::invalid("steps must be positive"));
        }
        if let Some(h) = self.replan_horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(ScenarioError::invalid(format!(
                    "replan_horizon must be positive, got {h}"
                )));
            }
        }
        match (&self.demand, &self.demand_schedule) {
            (Some(_), Some(_)) => {
                return Err(ScenarioError::invalid(
                    "give either demand or demand_schedule, not both",
                ))
            }
            (None, None) => return Err(ScenarioError::invalid("missing demand or demand_schedule")),
            (None, Some(_)) if !matches!(self.mode, Mode::Mpc) => {
                return Err(ScenarioError::invalid(format!(
                    "mode {} needs a static demand",
                    self.mode.as_str()
                )))
            }
            _ => {}
        }
        self.materialize().map(|_| ())
    }

    /// Builds the clouds; samplers are deterministic in the scenario seed.
    pub fn materialize(&self) -> Result<Materialized, ScenarioError> {
        let check_dim = |what: &str, spec: &CloudSpec| match spec.dim() {
            Some(d) if d != self.dim => Err(ScenarioError::invalid(format!(
                "{what} has dimension {d}, scenario dim is {}",
                self.dim
            ))),
            _ => Ok(()),
        };
        check_dim("resource", &self.resource)?;
        let resource = self
            .resource
            .materialize(stream_seed(self.seed, 0))
            .map_err(|e| e.context("resource"))?;
        let demand = match (&self.demand, &self.demand_schedule) {
            (Some(spec), None) => {
                check_dim("demand", spec)?;
                Demand::Static(
                    spec.materialize(stream_seed(self.seed, 1))
                        .map_err(|e| e.context("demand"))?,
                )
            }
            (None, Some(segments)) => {
                let mut starts = Vec::with_capacity(segments.len());
                let mut clouds = Vec::with_capacity(segments.len());
                for (i, seg) in segments.iter().enumerate() {
                    let what = format!("demand_schedule[{i}]");
                    check_dim(&what, &seg.cloud)?;
                    starts.push(seg.start);
                    clouds.push(
                        seg.cloud
                            .materialize(stream_seed(self.seed, 2 + i as u64))
                            .map_err(|e| e.context(&what))?,
                    );
                }
                Demand::Schedule(
                    DemandSchedule::new(starts, clouds, self.horizon)
                        .map_err(|e| ScenarioError::from(e).context("demand_schedule"))?,
                )
            }
            _ => return Err(ScenarioError::invalid("give exactly one of demand and demand_schedule")),
        };
        Ok(Materialized { resource, demand })
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    Scenario::parse(&text)
}

/// Reads a standalone cloud file (a [`CloudSpec`] as JSON).
pub fn load_cloud(path: impl AsRef<Path>, seed: u64) -> Result<ParticleCloud<f64>, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
    let spec: CloudSpec = serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec.materialize(seed)
}
