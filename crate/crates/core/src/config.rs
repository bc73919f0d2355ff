//! JSON run configuration shared by the command-line tool and the verification
//! harness.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{make_round_cap, make_warped, WarpedProductModel};
use crate::spectral::MIN_MESH_POINTS;
use crate::verify::CheckId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    RoundCap {
        n: usize,
        rho0: f64,
        cap_fraction: f64,
    },
    /// Warp values `f(r_i)` on a uniform grid `r_i = i·r_max/(len-1)`.
    Warped {
        n: usize,
        r_max: f64,
        samples: Vec<f64>,
    },
}

impl ModelConfig {
    pub fn build(&self) -> Result<WarpedProductModel> {
        match self {
            ModelConfig::RoundCap { n, rho0, cap_fraction } => make_round_cap(*n, *rho0, *cap_fraction),
            ModelConfig::Warped { n, r_max, samples } => make_warped(*n, *r_max, samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mesh_points: usize,
    pub l_max: usize,
    pub modes_per_l: usize,
    /// Re-solve on a doubled mesh and budget the difference as discretization error.
    pub refine: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mesh_points: 2000,
            l_max: 40,
            modes_per_l: 40,
            refine: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
    /// Divide `min` and `max` by the certified curvature bound.
    pub scaled: bool,
    /// Explicit times; replaces the generated grid when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            min: 0.05,
            max: 5.0,
            count: 16,
            log: true,
            scaled: true,
            values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t: TimeGrid,
    /// Interior radii, the pole included; `r_max` is appended.
    pub r_count: usize,
    pub k_max: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t: TimeGrid::default(),
            r_count: 12,
            k_max: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestFunctionConfig {
    /// Amplitudes of the built-in families `1 + ε cos²(πr/2R)` and `1 + ε cos(πr/2R)`.
    pub eps: Vec<f64>,
    /// Extra positive radial function, sampled uniformly on `[0, r_max]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl Default for TestFunctionConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.1, 0.5, 0.9],
            samples: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub path: String,
    /// Significant digits for every numeric cell.
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            format: OutputFormat::Csv,
            path: "out".into(),
            precision: 9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub relative: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { relative: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub grids: GridConfig,
    #[serde(default)]
    pub test_functions: TestFunctionConfig,
    #[serde(default = "CheckId::all")]
    pub checks: Vec<CheckId>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
}

impl RunConfig {
    pub fn with_model(model: ModelConfig) -> Self {
        Self {
            model,
            solver: SolverConfig::default(),
            grids: GridConfig::default(),
            test_functions: TestFunctionConfig::default(),
            checks: CheckId::all(),
            output: OutputConfig::default(),
            tolerance: ToleranceConfig::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        match &self.model {
            ModelConfig::RoundCap { n, rho0, cap_fraction } => {
                if *n < 2 {
                    return bad("model.n", format!("must be at least 2, got {n}"));
                }
                if !rho0.is_finite() || !cap_fraction.is_finite() {
                    return bad("model", "rho0 and cap_fraction must be finite".into());
                }
            }
            ModelConfig::Warped { n, r_max, samples } => {
                if *n < 2 {
                    return bad("model.n", format!("must be at least 2, got {n}"));
                }
                if !r_max.is_finite() {
                    return bad("model.r_max", "must be finite".into());
                }
                if samples.len() < 5 {
                    return bad(
                        "model.samples",
                        format!("need at least 5 values, got {}", samples.len()),
                    );
                }
            }
        }
        if self.solver.mesh_points < MIN_MESH_POINTS {
            return bad(
                "solver.mesh_points",
                format!("must be at least {MIN_MESH_POINTS}, got {}", self.solver.mesh_points),
            );
        }
        if self.solver.modes_per_l < 2 {
            return bad("solver.modes_per_l", "must be at least 2".into());
        }
        let t = &self.grids.t;
        match &t.values {
            Some(values) => {
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return bad("grids.t.values", "must be a nonempty list of positive times".into());
                }
            }
            None => {
                if !(t.min > 0.0) || !(t.max >= t.min) || !t.max.is_finite() {
                    return bad(
                        "grids.t",
                        format!("need 0 < min <= max, got min = {}, max = {}", t.min, t.max),
                    );
                }
                if t.count == 0 {
                    return bad("grids.t.count", "must be positive".into());
                }
            }
        }
        if self.grids.r_count < 2 {
            return bad("grids.r_count", "must be at least 2".into());
        }
        if self.test_functions.eps.iter().any(|e| !(*e >= 0.0 && *e < 1e6)) {
            return bad("test_functions.eps", "amplitudes must be nonnegative and finite".into());
        }
        if let Some(samples) = &self.test_functions.samples {
            if samples.len() < 5 || samples.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return bad(
                    "test_functions.samples",
                    "need at least 5 positive finite values".into(),
                );
            }
        }
        if !(1..=17).contains(&self.output.precision) {
            return bad(
                "output.precision",
                format!("must lie in 1..=17, got {}", self.output.precision),
            );
        }
        if !(self.tolerance.relative >= 0.0) || !self.tolerance.relative.is_finite() {
            return bad("tolerance.relative", "must be nonnegative and finite".into());
        }
        Ok(())
    }
}

/// Parses and validates a JSON configuration, filling defaults.
///
/// Errors name the offending field path together with the line and column.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|err| {
        // the inner message ends with "at line L column C"
        let path = err.path().to_string();
        let inner = err.into_inner();
        if path.is_empty() || path == "." {
            Error::Config(inner.to_string())
        } else {
            Error::Config(format!("`{path}`: {inner}"))
        }
    })?;
    config.validate()?;
    Ok(config)
}
