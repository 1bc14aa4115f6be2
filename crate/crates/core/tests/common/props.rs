//! Randomized single-step checks, shared by the property tests and the
//! acceptance run.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use propsim::dynamics::{degeneracy_margin, solve_profit_linear, solve_profit_sqrt, step, step_closed_form};
use propsim::{simulate, FundState, ImpactModel, ModelParams, Termination};

use super::{oracle_linear_step, oracle_sqrt_profit, rel, zero_impact};

#[derive(Debug, Clone)]
pub struct Case {
    pub params: ModelParams,
    pub state: FundState,
    pub realized: f64,
}

/// Random valid states with `|1 - λκṼ| > 0.05`.
pub fn case() -> impl Strategy<Value = Case> {
    (
        0.02f64..0.5,   // kappa
        0.0f64..0.2,    // lambda
        1.0f64..10.0,   // T
        0.001f64..0.05, // dt
        0.01f64..1.0,   // position of M in (dt, T]
        1.0f64..5000.0, // capital
        1.0f64..60.0,   // implied
        -20.0f64..20.0, // realized minus implied
    )
        .prop_map(|(kappa, lambda, t, dt, u, c, sigma, edge)| {
            let params = ModelParams::new(kappa, lambda, t, dt).unwrap();
            let m = dt + u * (t - dt);
            Case {
                state: FundState::initial(&params, c, m, sigma),
                params,
                realized: sigma + edge,
            }
        })
        .prop_filter("non-degenerate", |c| degeneracy_margin(&c.state, &c.params).abs() > 0.05)
}

pub fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        max_global_rejects: 1_000_000,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Conservation, exposure, impact and determinism on one step, against the
/// independently written step.
pub fn step_invariants(c: Case) -> Result<(), TestCaseError> {
    let Case { params, state, realized } = c;
    let bd = solve_profit_linear(&state, &params, realized).unwrap();
    let scale = state.capital.abs().max((state.capital + bd.total_pnl).abs());

    prop_assert!((bd.realized_pnl + bd.implied_pnl - bd.total_pnl).abs() <= 1e-12 * scale);
    let (c1, m1, s1, p) = oracle_linear_step(
        state.capital,
        state.avg_maturity,
        state.implied,
        realized,
        params.kappa,
        params.lambda,
        params.maturity,
        params.dt,
    );
    prop_assert!((bd.total_pnl - p).abs() <= 1e-12 * scale, "{} vs {}", bd.total_pnl, p);

    match step(&state, &params, realized) {
        Ok((next, bd2)) => {
            prop_assert_eq!(bd, bd2);
            prop_assert!((next.capital - state.capital - bd.realized_pnl - bd.implied_pnl).abs() <= 1e-12 * scale);
            prop_assert!((next.capital - c1).abs() <= 1e-12 * scale);
            let shift = next.implied - state.implied;
            prop_assert!((shift - params.lambda * bd.trade).abs() <= 1e-12 * state.implied.abs().max(next.implied.abs()));
            prop_assert!(rel(next.implied, s1) <= 1e-12);
            if next.capital > 0.0 {
                prop_assert!(rel(next.vega, params.kappa * next.capital) <= 1e-12);
                prop_assert!(rel(next.avg_maturity, m1) <= 1e-9);
            }
            let again = step(&state, &params, realized).unwrap();
            prop_assert_eq!(again.0.capital.to_bits(), next.capital.to_bits());
            prop_assert_eq!(again.0.avg_maturity.to_bits(), next.avg_maturity.to_bits());
            prop_assert_eq!(again.0.implied.to_bits(), next.implied.to_bits());
        }
        Err(propsim::Error::MaturityCollapse { maturity, .. }) => {
            prop_assert!(maturity <= params.dt);
            prop_assert!(m1 <= params.dt * (1.0 + 1e-9));
        }
        Err(e) => prop_assert!(false, "{e}"),
    }
    Ok(())
}

/// The displayed recurrences, sign-corrected, against the proof-form step.
pub fn closed_form_agrees(c: Case) -> Result<(), TestCaseError> {
    let Case { params, state, realized } = c;
    let Ok((next, _)) = step(&state, &params, realized) else {
        return Ok(());
    };
    if next.capital <= 0.0 {
        return Ok(());
    }
    let closed = step_closed_form(&state, &params, realized).unwrap();
    let scale = |a: f64, b: f64| a.abs().max(b.abs());
    prop_assert!(
        (closed.capital - next.capital).abs() <= 1e-9 * scale(state.capital, next.capital),
        "C {} vs {}",
        closed.capital,
        next.capital
    );
    prop_assert!(
        (closed.implied - next.implied).abs() <= 1e-9 * scale(state.implied, next.implied),
        "σ {} vs {}",
        closed.implied,
        next.implied
    );
    prop_assert!(
        (closed.avg_maturity - next.avg_maturity).abs() <= 1e-9 * scale(state.avg_maturity, next.avg_maturity),
        "M {} vs {}",
        closed.avg_maturity,
        next.avg_maturity
    );
    Ok(())
}

pub fn sqrt_matches_oracle(c: Case) -> Result<(), TestCaseError> {
    let Case { params, state, realized } = c;
    let params = params.with_impact(ImpactModel::Sqrt);
    let oracle = oracle_sqrt_profit(
        state.capital,
        state.avg_maturity,
        state.implied,
        realized,
        params.kappa,
        params.lambda,
        params.dt,
    );
    match (solve_profit_sqrt(&state, &params, realized), oracle) {
        (Ok(bd), Some(p)) => prop_assert!(
            (bd.total_pnl - p).abs() <= 1e-10 * p.abs().max(1.0),
            "solver {} oracle {}",
            bd.total_pnl,
            p
        ),
        (Err(propsim::Error::NoRootFound { .. }), None) => {}
        (got, want) => prop_assert!(false, "solver {got:?} oracle {want:?}"),
    }
    Ok(())
}

/// With no impact and no edge, `M` settles at `(T + dt)/2` and `σ` never moves.
pub fn zero_impact_limits(u: f64) -> Result<(), TestCaseError> {
    let mut s = zero_impact(20.0);
    s.m0 = s.dt + (1.0 - u) * (s.maturity - s.dt);
    if s.m0 <= s.dt {
        return Ok(());
    }
    s.horizon = 2000;
    let traj = simulate(&s);
    prop_assert_eq!(traj.termination, Termination::HorizonReached);
    let target = (s.maturity + s.dt) / 2.0;
    prop_assert!((traj.final_state().avg_maturity - target).abs() < 1e-2);
    prop_assert!(traj.states.iter().all(|st| st.implied == s.sigma0));
    Ok(())
}
