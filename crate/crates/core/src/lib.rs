//! Simulation and regime analysis for a fund that keeps a constant exposure
//! to an illiquid asset and marks its book at prices moved by its own trades.
//!
//! ```
//! use propsim::{classify, simulate, Scenario, Thresholds};
//!
//! let scenario = Scenario::reference();
//! let traj = simulate(&scenario);
//! let report = classify(&traj, &Thresholds::from(&scenario.guards));
//! println!("{} after {} steps", report.regime, traj.steps());
//! ```

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod lyapunov;
pub mod model;
pub mod regime;
pub mod scenario;
pub mod service;
pub mod sweep;
pub mod trajectory;

pub use dynamics::{critical_capital, solve_profit, step, step_closed_form, CriticalCapital};
pub use error::{Error, Result};
pub use lyapunov::{lyapunov_estimate, LyapunovEstimate};
pub use model::{FundState, ImpactModel, ModelParams, StepBreakdown};
pub use regime::{classify, detect_gaps, find_peaks, GapEvent, PeakEvent, Regime, RegimeReport, Thresholds};
pub use scenario::{parse_scenario, Guards, RealizedPath, Scenario};
pub use sweep::{sweep, Axis, Execution, RegimeMap, SweepCell, SweepParam};
pub use trajectory::{simulate, Termination, Trajectory};
