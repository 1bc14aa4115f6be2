//! Regime maps over one or two scenario parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::{classify, Regime, RegimeReport, Thresholds};
use crate::scenario::{RealizedPath, Scenario};
use crate::trajectory::{simulate, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParam {
    C0,
    Kappa,
    Lambda,
    Sigma0,
    /// Constant realized mark.
    Realized,
    Dt,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::C0 => "c0",
            SweepParam::Kappa => "kappa",
            SweepParam::Lambda => "lambda",
            SweepParam::Sigma0 => "sigma0",
            SweepParam::Realized => "realized",
            SweepParam::Dt => "dt",
        }
    }

    fn apply(self, scenario: &mut Scenario, value: f64) {
        match self {
            SweepParam::C0 => scenario.c0 = value,
            SweepParam::Kappa => scenario.kappa = value,
            SweepParam::Lambda => scenario.lambda = value,
            SweepParam::Sigma0 => scenario.sigma0 = value,
            SweepParam::Realized => scenario.realized = RealizedPath::Constant(value),
            SweepParam::Dt => scenario.dt = value,
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "c0" => SweepParam::C0,
            "kappa" => SweepParam::Kappa,
            "lambda" => SweepParam::Lambda,
            "sigma0" => SweepParam::Sigma0,
            "realized" | "r_const" | "r" => SweepParam::Realized,
            "dt" => SweepParam::Dt,
            _ => return Err(Error::InvalidAxis(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(param: SweepParam, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidAxis(format!("{}: no values", param.name())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidAxis(format!("{}: non-finite value", param.name())));
        }
        Ok(Axis { param, values })
    }

    /// `count` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(param: SweepParam, lo: f64, hi: f64, count: usize) -> Result<Self> {
        let values = match count {
            0 => Vec::new(),
            1 => vec![lo],
            n => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Axis::new(param, values)
    }

    /// Parses `name=v1,v2,...` or `name=lo:hi:count`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, rest) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidAxis(spec.to_string()))?;
        let param: SweepParam = name.trim().parse()?;
        let bad = || Error::InvalidAxis(spec.to_string());
        let parts: Vec<&str> = rest.split(':').collect();
        match parts.as_slice() {
            [lo, hi, count] => {
                let lo = lo.trim().parse().map_err(|_| bad())?;
                let hi = hi.trim().parse().map_err(|_| bad())?;
                let count = count.trim().parse().map_err(|_| bad())?;
                Axis::linspace(param, lo, hi, count)
            }
            [list] => {
                let values = list
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                Axis::new(param, values)
            }
            _ => Err(bad()),
        }
    }
}

/// Summary of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    /// Parameter values, one per axis.
    pub coords: Vec<f64>,
    pub regime: Regime,
    pub termination: Termination,
    pub final_capital: f64,
    pub peak_value: Option<f64>,
    pub peak_step: Option<usize>,
    pub gap_count: usize,
    pub bankruptcy_step: Option<usize>,
}

impl SweepCell {
    fn from_report(coords: Vec<f64>, termination: Termination, report: &RegimeReport) -> Self {
        let top = report
            .peaks
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value));
        SweepCell {
            coords,
            regime: report.regime,
            termination,
            final_capital: report.final_capital,
            peak_value: top.map(|p| p.value),
            peak_step: top.map(|p| p.step),
            gap_count: report.gaps.len(),
            bankruptcy_step: report.bankruptcy_step,
        }
    }
}

/// Cells in row-major order: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeMap {
    pub axes: Vec<Axis>,
    pub cells: Vec<SweepCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    #[default]
    Parallel,
}

pub fn cell_count(axes: &[Axis]) -> usize {
    axes.iter().map(|a| a.values.len()).product()
}

/// Scenario for grid point `index` (row-major).
fn cell_scenario(base: &Scenario, axes: &[Axis], index: usize) -> (Vec<f64>, Scenario) {
    let mut scenario = base.clone();
    let mut coords = vec![0.0; axes.len()];
    let mut rem = index;
    for (k, axis) in axes.iter().enumerate().rev() {
        let v = axis.values[rem % axis.values.len()];
        rem /= axis.values.len();
        axis.param.apply(&mut scenario, v);
        coords[k] = v;
    }
    (coords, scenario)
}

pub fn sweep(base: &Scenario, axes: &[Axis], execution: Execution) -> Result<RegimeMap> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(Error::InvalidAxis(format!("expected 1 or 2 axes, got {}", axes.len())));
    }
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.param == a.param) {
            return Err(Error::InvalidAxis(format!("{} repeated", a.param.name())));
        }
    }
    let n = cell_count(axes);
    // Validate every grid point before spending time on any of them.
    let scenarios = (0..n)
        .map(|i| {
            let (coords, s) = cell_scenario(base, axes, i);
            s.validate()?;
            Ok((coords, s))
        })
        .collect::<Result<Vec<_>>>()?;

    let eval = |(coords, s): &(Vec<f64>, Scenario)| {
        let traj = simulate(s);
        let report = classify(&traj, &Thresholds::from(&s.guards));
        SweepCell::from_report(coords.clone(), traj.termination, &report)
    };
    let cells = match execution {
        Execution::Serial => scenarios.iter().map(eval).collect(),
        Execution::Parallel => scenarios.par_iter().map(eval).collect(),
    };
    Ok(RegimeMap {
        axes: axes.to_vec(),
        cells,
    })
}

impl RegimeMap {
    /// One CSV row per cell, axis values first.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.axes.iter().map(|a| a.param.name().to_string()).collect();
        header.extend(
            [
                "regime",
                "termination",
                "final_capital",
                "peak_value",
                "peak_step",
                "gap_count",
                "bankruptcy_step",
            ]
            .map(String::from),
        );
        w.write_record(&header).expect("in-memory write");
        for c in &self.cells {
            let mut row: Vec<String> = c.coords.iter().map(|v| v.to_string()).collect();
            row.push(c.regime.name().to_string());
            row.push(c.termination.name().to_string());
            row.push(c.final_capital.to_string());
            row.push(c.peak_value.map(|v| v.to_string()).unwrap_or_default());
            row.push(c.peak_step.map(|v| v.to_string()).unwrap_or_default());
            row.push(c.gap_count.to_string());
            row.push(c.bankruptcy_step.map(|v| v.to_string()).unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}
