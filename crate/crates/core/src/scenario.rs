//! Scenario documents: everything needed to reproduce one simulation.
//!
//! Scenario files are strict JSON. Field names:
//!
//! | field          | type              | default        |
//! |----------------|-------------------|----------------|
//! | `c0`           | number (millions) | required       |
//! | `kappa`        | number            | required       |
//! | `lambda`       | number            | required       |
//! | `T`            | number (years)    | required       |
//! | `dt`           | number (years)    | required       |
//! | `sigma0`       | number (vol pts)  | required       |
//! | `realized`     | number or array   | required       |
//! | `horizon`      | integer (steps)   | required       |
//! | `m0`           | number (years)    | `T`            |
//! | `impact_model` | `"linear"`/`"sqrt"` | `"linear"`   |
//! | `guards`       | object            | see [`Guards`] |
//!
//! Unknown keys are rejected at every level.

use serde::{Deserialize, Serialize};

use crate::dynamics::DEFAULT_EPS_DEG;
use crate::error::{Error, Result};
use crate::model::{FundState, ImpactModel, ModelParams};

/// Realized marks, one per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RealizedPath {
    Constant(f64),
    Sequence(Vec<f64>),
}

impl RealizedPath {
    /// Realized mark for the step starting at `index`.
    pub fn at(&self, index: usize) -> f64 {
        match self {
            RealizedPath::Constant(r) => *r,
            RealizedPath::Sequence(values) => values[index],
        }
    }

    fn validate(&self, horizon: usize) -> Result<()> {
        match self {
            RealizedPath::Constant(r) if !r.is_finite() => {
                Err(Error::range("realized", "must be finite"))
            }
            RealizedPath::Sequence(values) if values.len() < horizon => Err(Error::range(
                "realized",
                format!("sequence has {} values, horizon needs {horizon}", values.len()),
            )),
            RealizedPath::Sequence(values) => match values.iter().position(|v| !v.is_finite()) {
                Some(i) => Err(Error::range(&format!("realized[{i}]"), "must be finite")),
                None => Ok(()),
            },
            RealizedPath::Constant(_) => Ok(()),
        }
    }
}

/// Termination thresholds and analysis settings carried with a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Guards {
    /// Tolerance on the profit equation's coefficient.
    pub eps_deg: f64,
    /// Capital magnitude (millions) treated as numerical overflow.
    pub overflow_cap: f64,
    /// Per-step relative capital move that counts as a gap.
    pub gap_threshold: f64,
    /// Minimum peak prominence as a fraction of the maximum capital.
    pub peak_prominence: f64,
    /// Capital, as a fraction of the initial capital, at or below which the
    /// fund is declared bankrupt.
    pub bankruptcy_floor: f64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards {
            eps_deg: DEFAULT_EPS_DEG,
            overflow_cap: 1e9,
            gap_threshold: 0.10,
            peak_prominence: 0.1,
            bankruptcy_floor: 0.1,
        }
    }
}

impl Guards {
    fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::range(&format!("guards.{field}"), msg))
            }
        };
        check(self.eps_deg.is_finite() && self.eps_deg >= 0.0, "eps_deg", "must be finite and >= 0")?;
        check(self.overflow_cap > 0.0, "overflow_cap", "must be > 0")?;
        check(
            self.gap_threshold.is_finite() && self.gap_threshold > 0.0,
            "gap_threshold",
            "must be finite and > 0",
        )?;
        check(
            self.peak_prominence.is_finite() && self.peak_prominence >= 0.0,
            "peak_prominence",
            "must be finite and >= 0",
        )?;
        check(
            (0.0..1.0).contains(&self.bankruptcy_floor),
            "bankruptcy_floor",
            "must be in [0, 1)",
        )
    }
}

/// A fully resolved simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub c0: f64,
    pub kappa: f64,
    pub lambda: f64,
    #[serde(rename = "T")]
    pub maturity: f64,
    pub dt: f64,
    pub sigma0: f64,
    pub m0: f64,
    pub realized: RealizedPath,
    pub horizon: usize,
    pub impact_model: ImpactModel,
    pub guards: Guards,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    c0: f64,
    kappa: f64,
    lambda: f64,
    #[serde(rename = "T")]
    maturity: f64,
    dt: f64,
    sigma0: f64,
    #[serde(default)]
    m0: Option<f64>,
    realized: RealizedPath,
    horizon: usize,
    #[serde(default)]
    impact_model: ImpactModel,
    #[serde(default)]
    guards: Guards,
}

impl From<ScenarioDoc> for Scenario {
    fn from(doc: ScenarioDoc) -> Self {
        Scenario {
            c0: doc.c0,
            kappa: doc.kappa,
            lambda: doc.lambda,
            maturity: doc.maturity,
            dt: doc.dt,
            sigma0: doc.sigma0,
            m0: doc.m0.unwrap_or(doc.maturity),
            realized: doc.realized,
            horizon: doc.horizon,
            impact_model: doc.impact_model,
            guards: doc.guards,
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut de = serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(&mut de).map_err(schema_error)?;
    de.end()
        .map_err(|e| Error::schema(".", e.to_string()))?;
    let scenario = Scenario::from(doc);
    scenario.validate()?;
    Ok(scenario)
}

/// Same as [`parse_scenario`] for an already-decoded JSON value.
pub fn parse_scenario_value(value: serde_json::Value) -> Result<Scenario> {
    let doc: ScenarioDoc = serde_path_to_error::deserialize(value).map_err(schema_error)?;
    let scenario = Scenario::from(doc);
    scenario.validate()?;
    Ok(scenario)
}

fn schema_error<E: std::fmt::Display>(err: serde_path_to_error::Error<E>) -> Error {
    Error::schema(err.path().to_string(), err.inner().to_string())
}

impl Scenario {
    /// The reference scenario: $1bn fund, 10% exposure, 0.05 vol points of
    /// impact per million vega, 5y standard maturity, flat 20 implied and
    /// realized, ten years of 0.01y steps.
    pub fn reference() -> Self {
        Scenario {
            c0: 1000.0,
            kappa: 0.1,
            lambda: 0.05,
            maturity: 5.0,
            dt: 0.01,
            sigma0: 20.0,
            m0: 5.0,
            realized: RealizedPath::Constant(20.0),
            horizon: 1000,
            impact_model: ImpactModel::Linear,
            guards: Guards::default(),
        }
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            kappa: self.kappa,
            lambda: self.lambda,
            maturity: self.maturity,
            dt: self.dt,
            impact: self.impact_model,
        }
    }

    pub fn initial_state(&self) -> FundState {
        FundState::initial(&self.params(), self.c0, self.m0, self.sigma0)
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if !(self.c0.is_finite() && self.c0 > 0.0) {
            return Err(Error::range("c0", "must be finite and > 0"));
        }
        if !self.sigma0.is_finite() {
            return Err(Error::range("sigma0", "must be finite"));
        }
        if !(self.m0.is_finite() && self.m0 > self.dt && self.m0 <= self.maturity) {
            return Err(Error::range("m0", "must satisfy dt < m0 <= T"));
        }
        if self.horizon < 1 {
            return Err(Error::range("horizon", "must be >= 1"));
        }
        self.realized.validate(self.horizon)?;
        self.guards.validate()
    }

    /// Canonical JSON form with every default spelled out.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
