use serde::{Deserialize, Serialize};

use crate::dynamics::step_guarded;
use crate::error::Error;
use crate::model::{FundState, StepBreakdown};
use crate::scenario::Scenario;

/// Why a simulation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    HorizonReached,
    /// Capital fell to the bankruptcy floor (by default 10% of the initial
    /// capital) or below zero.
    Bankrupt,
    DegenerateDenominator,
    MaturityCollapse,
    NumericalOverflow,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::HorizonReached => "HorizonReached",
            Termination::Bankrupt => "Bankrupt",
            Termination::DegenerateDenominator => "DegenerateDenominator",
            Termination::MaturityCollapse => "MaturityCollapse",
            Termination::NumericalOverflow => "NumericalOverflow",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "HorizonReached" => Termination::HorizonReached,
            "Bankrupt" => Termination::Bankrupt,
            "DegenerateDenominator" => Termination::DegenerateDenominator,
            "MaturityCollapse" => Termination::MaturityCollapse,
            "NumericalOverflow" => Termination::NumericalOverflow,
            other => return Err(format!("unknown termination `{other}`")),
        })
    }
}

/// Full record of one simulation: `states[i + 1]` follows from `states[i]`
/// through `breakdowns[i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub states: Vec<FundState>,
    pub breakdowns: Vec<StepBreakdown>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.breakdowns.len()
    }

    pub fn capital(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.capital).collect()
    }

    pub fn final_state(&self) -> &FundState {
        self.states.last().expect("trajectory has an initial state")
    }

    /// First step index whose resulting implied mark is negative. The map
    /// allows it, but it has no market meaning.
    pub fn first_negative_implied(&self) -> Option<usize> {
        self.states.iter().position(|s| s.implied < 0.0)
    }
}

/// Outcome of advancing one step under a scenario's guards.
pub(crate) enum Advance {
    Continue(FundState, StepBreakdown),
    /// Terminal step that still produced a state worth recording.
    Last(FundState, StepBreakdown, Termination),
    /// Terminal step with nothing to record.
    Halt(Termination, Option<Error>),
}

pub(crate) fn advance(scenario: &Scenario, state: &FundState, index: usize) -> Advance {
    let params = scenario.params();
    let guards = &scenario.guards;
    match step_guarded(state, &params, scenario.realized.at(index), guards.eps_deg) {
        Err(err @ Error::MaturityCollapse { .. }) => Advance::Halt(Termination::MaturityCollapse, Some(err)),
        Err(err @ Error::DegenerateDenominator { .. }) => {
            Advance::Halt(Termination::DegenerateDenominator, Some(err))
        }
        // Root-finding failures under square-root impact are a breakdown of the
        // map in the same sense as the singular coefficient.
        Err(err) => Advance::Halt(Termination::DegenerateDenominator, Some(err)),
        Ok((next, bd)) => {
            if !next.is_finite() {
                Advance::Halt(Termination::NumericalOverflow, None)
            } else if next.capital.abs() >= guards.overflow_cap {
                Advance::Last(next, bd, Termination::NumericalOverflow)
            } else if next.capital <= 0.0 || next.capital <= guards.bankruptcy_floor * scenario.c0 {
                Advance::Last(next, bd, Termination::Bankrupt)
            } else {
                Advance::Continue(next, bd)
            }
        }
    }
}

/// Runs a validated scenario to its horizon or first terminal event.
pub fn simulate(scenario: &Scenario) -> Trajectory {
    let mut states = Vec::with_capacity(scenario.horizon + 1);
    let mut breakdowns = Vec::with_capacity(scenario.horizon);
    let mut state = scenario.initial_state();
    states.push(state);
    let mut termination = Termination::HorizonReached;
    for index in 0..scenario.horizon {
        match advance(scenario, &state, index) {
            Advance::Continue(next, bd) => {
                states.push(next);
                breakdowns.push(bd);
                state = next;
            }
            Advance::Last(next, bd, why) => {
                states.push(next);
                breakdowns.push(bd);
                termination = why;
                break;
            }
            Advance::Halt(why, _) => {
                termination = why;
                break;
            }
        }
    }
    Trajectory {
        scenario: scenario.clone(),
        states,
        breakdowns,
        termination,
    }
}
