//! Model constants and fund state.
//!
//! Units follow the usual desk convention for this model: capital, vega
//! notional and the impact coefficient are in millions, implied and realized
//! marks are in vol points, times are in years.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How traded notional moves the implied mark.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpactModel {
    /// `σ' = σ + λ·ΔV`
    #[default]
    Linear,
    /// `σ' = σ + λ·sign(ΔV)·sqrt(|ΔV|)`
    Sqrt,
}

impl ImpactModel {
    pub fn name(self) -> &'static str {
        match self {
            ImpactModel::Linear => "linear",
            ImpactModel::Sqrt => "sqrt",
        }
    }
}

impl std::str::FromStr for ImpactModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ImpactModel::Linear),
            "sqrt" => Ok(ImpactModel::Sqrt),
            other => Err(Error::range(
                "impact_model",
                format!("expected `linear` or `sqrt`, got `{other}`"),
            )),
        }
    }
}

/// Fixed constants of the fund and its market.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Target exposure: vega notional held per unit of capital.
    pub kappa: f64,
    /// Shift of every implied mark per million of vega notional traded.
    pub lambda: f64,
    /// Standard maturity `T` at which new contracts trade.
    pub maturity: f64,
    /// Time step.
    pub dt: f64,
    pub impact: ImpactModel,
}

impl ModelParams {
    pub fn new(kappa: f64, lambda: f64, maturity: f64, dt: f64) -> Result<Self> {
        let params = ModelParams {
            kappa,
            lambda,
            maturity,
            dt,
            impact: ImpactModel::Linear,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_impact(mut self, impact: ImpactModel) -> Self {
        self.impact = impact;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::range("kappa", "must be finite and > 0"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::range("lambda", "must be finite and >= 0"));
        }
        if !(self.maturity.is_finite() && self.maturity > 0.0) {
            return Err(Error::range("T", "must be finite and > 0"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt < self.maturity) {
            return Err(Error::range("dt", "must satisfy 0 < dt < T"));
        }
        Ok(())
    }
}

/// State of the fund at one point in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundState {
    pub t: f64,
    pub capital: f64,
    /// Vega-weighted average remaining maturity of the book.
    pub avg_maturity: f64,
    /// Implied mark the book is valued at.
    pub implied: f64,
    /// Vega notional, always `kappa * capital` while solvent.
    pub vega: f64,
}

impl FundState {
    /// Fund at `t = 0`, fully invested at its target exposure.
    pub fn initial(params: &ModelParams, capital: f64, avg_maturity: f64, implied: f64) -> Self {
        FundState {
            t: 0.0,
            capital,
            avg_maturity,
            implied,
            vega: params.kappa * capital,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.capital.is_finite()
            && self.avg_maturity.is_finite()
            && self.implied.is_finite()
            && self.vega.is_finite()
    }
}

/// Decomposition of one step's profit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBreakdown {
    /// Profit on the slice of the book that matured during the step.
    pub realized_pnl: f64,
    /// Mark-to-market profit on the aged book from the impact of trading.
    pub implied_pnl: f64,
    pub total_pnl: f64,
    /// Vega left after one step of decay.
    pub aged_vega: f64,
    /// Vega held after rebalancing to the new capital.
    pub new_vega: f64,
    /// Signed vega notional traded to rebalance.
    pub trade: f64,
    /// `1 - λκṼ`, the coefficient of the linear profit equation.
    pub denom_margin: f64,
}
