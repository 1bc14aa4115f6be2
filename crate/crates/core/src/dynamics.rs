//! One-step evolution of a constant-exposure fund under market impact.
//!
//! Each step the book ages by `dt`, the matured slice realizes against the
//! implied mark, and the fund trades back to `kappa * capital` of vega. The
//! trade moves the implied mark, which revalues the aged book. Because the
//! trade size depends on the step's profit, the profit solves a fixed-point
//! equation; under linear impact it is linear in the profit and is solved in
//! closed form, under square-root impact it is solved by bracketed bisection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FundState, ImpactModel, ModelParams, StepBreakdown};

/// Default tolerance on the profit equation's coefficient.
pub const DEFAULT_EPS_DEG: f64 = 1e-10;

/// Vega remaining after one step of decay, `V·(M - dt)/M`.
pub fn aged_vega(state: &FundState, params: &ModelParams) -> f64 {
    state.vega * (state.avg_maturity - params.dt) / state.avg_maturity
}

/// Coefficient `1 - λκṼ` of the linear profit equation.
///
/// Zero exactly at the critical capital for the state's average maturity.
pub fn degeneracy_margin(state: &FundState, params: &ModelParams) -> f64 {
    let aged = params.kappa * state.capital * (state.avg_maturity - params.dt) / state.avg_maturity;
    1.0 - params.lambda * params.kappa * aged
}

/// Profit on the slice of the book maturing during the step.
fn realized_leg(state: &FundState, params: &ModelParams, realized: f64) -> f64 {
    state.vega / state.avg_maturity * (realized - state.implied) * params.dt
}

/// Shift of the implied mark caused by trading `trade` vega.
pub fn impact_shift(params: &ModelParams, trade: f64) -> f64 {
    match params.impact {
        ImpactModel::Linear => params.lambda * trade,
        ImpactModel::Sqrt => params.lambda * signed_sqrt(trade),
    }
}

fn signed_sqrt(x: f64) -> f64 {
    if x < 0.0 {
        -(-x).sqrt()
    } else {
        x.sqrt()
    }
}

fn breakdown(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
    profit: f64,
    aged: f64,
) -> StepBreakdown {
    let new_vega = params.kappa * (state.capital + profit);
    let trade = new_vega - aged;
    StepBreakdown {
        realized_pnl: realized_leg(state, params, realized),
        implied_pnl: aged * impact_shift(params, trade),
        total_pnl: profit,
        aged_vega: aged,
        new_vega,
        trade,
        denom_margin: 1.0 - params.lambda * params.kappa * aged,
    }
}

/// Solves the linear-impact profit equation
/// `(1 - λκṼ)·Π = (V/M)(R - σ)dt + V·Ṽ·λ·dt/M`.
pub fn solve_profit_linear(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
) -> Result<StepBreakdown> {
    solve_profit_linear_guarded(state, params, realized, DEFAULT_EPS_DEG)
}

pub fn solve_profit_linear_guarded(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
    eps_deg: f64,
) -> Result<StepBreakdown> {
    if params.impact != ImpactModel::Linear {
        return Err(Error::ImpactModelMismatch { expected: "linear" });
    }
    let aged = aged_vega(state, params);
    let margin = 1.0 - params.lambda * params.kappa * aged;
    if margin.abs() <= eps_deg {
        return Err(Error::DegenerateDenominator { margin });
    }
    let rhs = realized_leg(state, params, realized)
        + state.vega * aged * params.lambda * params.dt / state.avg_maturity;
    Ok(breakdown(state, params, realized, rhs / margin, aged))
}

/// Solves `Π = (V/M)(R - σ)dt + Ṽλ·sign(ΔV)·sqrt(|ΔV|)` with
/// `ΔV = V + κΠ - Ṽ` over the bracket `[-C, 10C]`.
///
/// The residual is concave above the kink at `ΔV = 0` and convex below it,
/// so it has at most two roots on each side. The bracket is split at the
/// kink and at the residual's two turning points, each monotone piece is
/// bisected, and the root of smallest magnitude is returned.
pub fn solve_profit_sqrt(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
) -> Result<StepBreakdown> {
    if params.impact != ImpactModel::Sqrt {
        return Err(Error::ImpactModelMismatch { expected: "sqrt" });
    }
    let aged = aged_vega(state, params);
    let scale = aged * params.lambda;
    let base = state.vega - aged;
    let kappa = params.kappa;
    let residual = |profit: f64| sqrt_residual(state, params, realized, profit);

    let lo = -state.capital.abs();
    let hi = 10.0 * state.capital.abs();
    let kink = -base / kappa;
    let turn = scale * scale * kappa / 4.0;

    let mut cuts = vec![lo, hi];
    for x in [kink - turn, kink, kink + turn] {
        if x > lo && x < hi {
            cuts.push(x);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut best: Option<f64> = None;
    let mut consider = |root: f64| {
        if best.is_none_or(|b| root.abs() < b.abs()) {
            best = Some(root);
        }
    };
    for pair in cuts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (fa, fb) = (residual(a), residual(b));
        if fa == 0.0 {
            consider(a);
        }
        if fb == 0.0 {
            consider(b);
        }
        if fa * fb < 0.0 {
            consider(bisect(&residual, a, b, fa));
        }
    }
    match best {
        Some(profit) => Ok(breakdown(state, params, realized, profit, aged)),
        None => Err(Error::NoRootFound { lo, hi }),
    }
}

/// `(V/M)(R - σ)dt + Ṽλ·sign(ΔV)·sqrt(|ΔV|) - Π`, zero at the square-root
/// impact profit.
pub fn sqrt_residual(state: &FundState, params: &ModelParams, realized: f64, profit: f64) -> f64 {
    let aged = aged_vega(state, params);
    let trade = state.vega + params.kappa * profit - aged;
    realized_leg(state, params, realized) + aged * params.lambda * signed_sqrt(trade) - profit
}

/// Bisection down to adjacent floats; returns the endpoint with smaller residual.
fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    let mut fb = f(b);
    for _ in 0..2000 {
        let mid = 0.5 * (a + b);
        if mid <= a.min(b) || mid >= a.max(b) {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    if fa.abs() <= fb.abs() {
        a
    } else {
        b
    }
}

/// Dispatches to the solver for the configured impact model.
pub fn solve_profit(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
    eps_deg: f64,
) -> Result<StepBreakdown> {
    match params.impact {
        ImpactModel::Linear => solve_profit_linear_guarded(state, params, realized, eps_deg),
        ImpactModel::Sqrt => solve_profit_sqrt(state, params, realized),
    }
}

/// Advances the fund by one step.
///
/// A returned state with `capital <= 0` is bankrupt; its average maturity is
/// the aged book's `M - dt`, since there is no vega left to weight by.
pub fn step(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
) -> Result<(FundState, StepBreakdown)> {
    step_guarded(state, params, realized, DEFAULT_EPS_DEG)
}

pub fn step_guarded(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
    eps_deg: f64,
) -> Result<(FundState, StepBreakdown)> {
    let bd = solve_profit(state, params, realized, eps_deg)?;
    let capital = state.capital + bd.total_pnl;
    let implied = state.implied + impact_shift(params, bd.trade);
    let avg_maturity = if capital > 0.0 {
        let m = (bd.aged_vega * (state.avg_maturity - params.dt) + bd.trade * params.maturity)
            / bd.new_vega;
        if m <= params.dt {
            return Err(Error::MaturityCollapse {
                maturity: m,
                dt: params.dt,
            });
        }
        m
    } else {
        state.avg_maturity - params.dt
    };
    let next = FundState {
        t: state.t + params.dt,
        capital,
        avg_maturity,
        implied,
        vega: bd.new_vega,
    };
    Ok((next, bd))
}

/// Explicit recurrences for `(C, M, σ)` under linear impact.
///
/// Independent of [`step`]; the two agree to round-off away from the
/// singular coefficient. The implied-mark recurrence uses the denominator
/// `M - Cκ²λ(M - dt)`, the same one shared by the capital recurrence.
pub fn step_closed_form(
    state: &FundState,
    params: &ModelParams,
    realized: f64,
) -> Result<FundState> {
    if params.impact != ImpactModel::Linear {
        return Err(Error::ImpactModelMismatch { expected: "linear" });
    }
    let ModelParams {
        kappa,
        lambda,
        maturity: t_std,
        dt,
        ..
    } = *params;
    let (c, m, sigma, r) = (
        state.capital,
        state.avg_maturity,
        state.implied,
        realized,
    );
    let aged_m = m - dt;
    let denom = m - c * kappa * kappa * lambda * aged_m;
    if denom.abs() <= DEFAULT_EPS_DEG {
        return Err(Error::DegenerateDenominator { margin: denom / m });
    }

    let capital = c + c * kappa * dt * (r - sigma + c * kappa * lambda * aged_m / m) / denom;
    let avg_maturity = (m * t_std * dt * (kappa * (sigma - r) - 1.0) - aged_m * aged_m * denom)
        / (c * kappa * kappa * lambda * aged_m * aged_m - m * (m - kappa * dt * (sigma - r)));
    let implied =
        (sigma * m + c * kappa * lambda * (dt - kappa * sigma * m + kappa * dt * r)) / denom;

    Ok(FundState {
        t: state.t + dt,
        capital,
        avg_maturity,
        implied,
        vega: kappa * capital,
    })
}

/// Capital at which the linear profit equation becomes singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalCapital {
    /// `1/(λκ²)`
    pub approx: f64,
    /// `M/((M - dt)·λκ²)` for a given average maturity `M`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

pub fn critical_capital(params: &ModelParams, avg_maturity: Option<f64>) -> Result<CriticalCapital> {
    if !(params.kappa.is_finite() && params.kappa > 0.0) {
        return Err(Error::range("kappa", "must be finite and > 0"));
    }
    if !params.lambda.is_finite() || params.lambda < 0.0 {
        return Err(Error::range("lambda", "must be finite and >= 0"));
    }
    if params.lambda == 0.0 {
        return Err(Error::UndefinedCritical);
    }
    // divided out one factor at a time so round inputs give round answers
    let approx = 1.0 / params.lambda / params.kappa / params.kappa;
    let exact = match avg_maturity {
        None => None,
        Some(m) => {
            if !(params.dt.is_finite() && params.dt > 0.0) {
                return Err(Error::range("dt", "must be finite and > 0"));
            }
            if !(m.is_finite() && m > params.dt) {
                return Err(Error::range("maturity", "must exceed dt"));
            }
            Some(m / (m - params.dt) * approx)
        }
    };
    Ok(CriticalCapital { approx, exact })
}
