//! Largest Lyapunov exponent of the `(C, M, σ)` map, Benettin style.
//!
//! Distances are taken in relative coordinates: each component's difference
//! is divided by the reference trajectory's current value, so the exponent is
//! unit-free (per year). The estimator reports a number; it does not certify
//! chaos.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::FundState;
use crate::scenario::Scenario;
use crate::trajectory::{advance, Advance};

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const MIN_HORIZON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    /// Mean log stretching rate per year.
    pub exponent: f64,
    /// Steps over which stretching was accumulated.
    pub steps: usize,
}

/// Normalized separation between a perturbed state and its reference.
pub fn separation(perturbed: &FundState, reference: &FundState) -> f64 {
    let rel = |a: f64, b: f64| (a - b) / b.abs().max(f64::MIN_POSITIVE);
    let dc = rel(perturbed.capital, reference.capital);
    let dm = rel(perturbed.avg_maturity, reference.avg_maturity);
    let ds = rel(perturbed.implied, reference.implied);
    (dc * dc + dm * dm + ds * ds).sqrt()
}

/// Reference state with capital scaled by `1 + epsilon`.
pub fn perturb(reference: &FundState, kappa: f64, epsilon: f64) -> FundState {
    let capital = reference.capital * (1.0 + epsilon);
    FundState {
        capital,
        vega: kappa * capital,
        ..*reference
    }
}

/// Evolves a reference and a perturbed copy together, renormalizing the copy
/// back to the initial separation along the current difference direction
/// after every step. Accumulation stops when either trajectory terminates.
pub fn lyapunov_estimate(scenario: &Scenario, epsilon: f64) -> Result<LyapunovEstimate> {
    if scenario.horizon < MIN_HORIZON {
        return Err(Error::range(
            "horizon",
            format!("Lyapunov estimation needs at least {MIN_HORIZON} steps"),
        ));
    }
    if !(epsilon.is_finite() && epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::range("epsilon", "must be in (0, 1)"));
    }

    let mut reference = scenario.initial_state();
    let mut perturbed = perturb(&reference, scenario.kappa, epsilon);
    // The realized separation, not epsilon itself, so that an identity map
    // yields exactly zero.
    let d0 = separation(&perturbed, &reference);

    let mut log_sum = 0.0;
    let mut steps = 0;
    for index in 0..scenario.horizon {
        let (next_ref, ref_done) = match advance(scenario, &reference, index) {
            Advance::Continue(s, _) => (s, false),
            Advance::Last(s, _, _) => (s, true),
            Advance::Halt(_, err) => match (steps, err) {
                (0, Some(err)) => return Err(err),
                _ => break,
            },
        };
        let next_pert = match advance(scenario, &perturbed, index) {
            Advance::Continue(s, _) | Advance::Last(s, _, _) => s,
            Advance::Halt(_, err) => match (steps, err) {
                (0, Some(err)) => return Err(err),
                _ => break,
            },
        };
        let d = separation(&next_pert, &next_ref);
        if !(d.is_finite() && d > 0.0) {
            break;
        }
        log_sum += (d / d0).ln();
        steps += 1;
        if ref_done {
            break;
        }

        let scale = d0 / d;
        let capital = next_ref.capital + (next_pert.capital - next_ref.capital) * scale;
        perturbed = FundState {
            t: next_ref.t,
            capital,
            avg_maturity: next_ref.avg_maturity
                + (next_pert.avg_maturity - next_ref.avg_maturity) * scale,
            implied: next_ref.implied + (next_pert.implied - next_ref.implied) * scale,
            vega: scenario.kappa * capital,
        };
        reference = next_ref;
    }

    if steps == 0 {
        return Err(Error::range("horizon", "no step could be evaluated"));
    }
    Ok(LyapunovEstimate {
        exponent: log_sum / (steps as f64 * scenario.dt),
        steps,
    })
}
