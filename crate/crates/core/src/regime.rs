//! Qualitative classification of capital trajectories.

use serde::{Deserialize, Serialize};

use crate::scenario::Guards;
use crate::trajectory::{Termination, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakEvent {
    pub step: usize,
    pub value: f64,
    pub prominence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEvent {
    /// Index of the step from state `step` to state `step + 1`.
    pub step: usize,
    /// `(C[step + 1] - C[step]) / C[step]`
    pub rel_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Flat,
    SmoothBubble,
    GapBubble,
    MultiBubble,
    UnboundedGrowth,
    MonotoneDecline,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Flat => "Flat",
            Regime::SmoothBubble => "SmoothBubble",
            Regime::GapBubble => "GapBubble",
            Regime::MultiBubble => "MultiBubble",
            Regime::UnboundedGrowth => "UnboundedGrowth",
            Regime::MonotoneDecline => "MonotoneDecline",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    pub peaks: Vec<PeakEvent>,
    pub gaps: Vec<GapEvent>,
    pub bankruptcy_step: Option<usize>,
    pub final_capital: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub gap_threshold: f64,
    /// Fraction of the maximum capital.
    pub peak_prominence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds::from(&Guards::default())
    }
}

impl From<&Guards> for Thresholds {
    fn from(g: &Guards) -> Self {
        Thresholds {
            gap_threshold: g.gap_threshold,
            peak_prominence: g.peak_prominence,
        }
    }
}

/// Strict interior local maxima of `series` whose topographic prominence is
/// at least `min_prominence × max(series)`.
///
/// Prominence is the height of the peak above the higher of the two lowest
/// points reached on each side before the series climbs above the peak (or
/// ends).
pub fn peaks_in(series: &[f64], min_prominence: f64) -> Vec<PeakEvent> {
    if series.len() < 3 {
        return Vec::new();
    }
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = min_prominence * max;
    let mut peaks = Vec::new();
    for i in 1..series.len() - 1 {
        let v = series[i];
        if !(v > series[i - 1] && v > series[i + 1]) {
            continue;
        }
        let left_min = series[..i]
            .iter()
            .rev()
            .take_while(|&&x| x <= v)
            .copied()
            .fold(v, f64::min);
        let right_min = series[i + 1..]
            .iter()
            .take_while(|&&x| x <= v)
            .copied()
            .fold(v, f64::min);
        let prominence = v - left_min.max(right_min);
        if prominence >= cutoff {
            peaks.push(PeakEvent {
                step: i,
                value: v,
                prominence,
            });
        }
    }
    peaks
}

/// Steps whose relative move `|ΔC|/C` reaches `threshold`.
pub fn gaps_in(series: &[f64], threshold: f64) -> Vec<GapEvent> {
    series
        .windows(2)
        .enumerate()
        .filter_map(|(step, w)| {
            let rel_change = (w[1] - w[0]) / w[0];
            (rel_change.abs() >= threshold).then_some(GapEvent { step, rel_change })
        })
        .collect()
}

pub fn find_peaks(traj: &Trajectory, min_prominence: f64) -> Vec<PeakEvent> {
    peaks_in(&traj.capital(), min_prominence)
}

pub fn detect_gaps(traj: &Trajectory, threshold: f64) -> Vec<GapEvent> {
    gaps_in(&traj.capital(), threshold)
}

/// Assigns a regime with the following precedence:
///
/// 1. overflow, or horizon reached above 5×C0 and non-decreasing over the
///    last 10% of steps: `UnboundedGrowth`
/// 2. two or more prominent peaks: `MultiBubble`
/// 3. any gap: `GapBubble`
/// 4. one prominent peak: `SmoothBubble`
/// 5. capital within 1% of C0 throughout: `Flat`
/// 6. otherwise `MonotoneDecline`
pub fn classify(traj: &Trajectory, thresholds: &Thresholds) -> RegimeReport {
    let capital = traj.capital();
    let c0 = capital[0];
    let final_capital = *capital.last().expect("non-empty");
    let peaks = peaks_in(&capital, thresholds.peak_prominence);
    let gaps = gaps_in(&capital, thresholds.gap_threshold);

    let regime = if traj.termination == Termination::NumericalOverflow
        || (traj.termination == Termination::HorizonReached
            && final_capital > 5.0 * c0
            && rising_tail(&capital))
    {
        Regime::UnboundedGrowth
    } else if peaks.len() >= 2 {
        Regime::MultiBubble
    } else if !gaps.is_empty() {
        Regime::GapBubble
    } else if peaks.len() == 1 {
        Regime::SmoothBubble
    } else if capital.iter().all(|c| (c - c0).abs() < 0.01 * c0) {
        Regime::Flat
    } else {
        Regime::MonotoneDecline
    };

    RegimeReport {
        regime,
        peaks,
        gaps,
        bankruptcy_step: (traj.termination == Termination::Bankrupt).then(|| traj.steps()),
        final_capital,
    }
}

fn rising_tail(capital: &[f64]) -> bool {
    let steps = capital.len() - 1;
    let window = (steps / 10).max(1);
    capital[capital.len() - 1 - window..]
        .windows(2)
        .all(|w| w[1] >= w[0])
}
