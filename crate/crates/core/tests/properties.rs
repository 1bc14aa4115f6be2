mod common;

use common::props::{self, case, config};
use common::{oracle_linear_step, oracle_sqrt_profit, rel};
use proptest::prelude::*;
use propsim::dynamics::{degeneracy_margin, solve_profit_linear, solve_profit_sqrt};
use propsim::{simulate, FundState, ImpactModel, ModelParams, RealizedPath, Regime, Scenario};

proptest! {
    #![proptest_config(config(10_000))]

    #[test]
    fn step_invariants(c in case()) {
        props::step_invariants(c)?;
    }

    #[test]
    fn closed_form_matches_proof_form(c in case()) {
        props::closed_form_agrees(c)?;
    }
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn sqrt_solver_matches_scan_oracle(c in case()) {
        props::sqrt_matches_oracle(c)?;
    }

    #[test]
    fn zero_impact_sqrt_equals_linear(c in case()) {
        let props::Case { params, state, realized } = c;
        let params = ModelParams { lambda: 0.0, ..params };
        let lin = solve_profit_linear(&state, &params, realized).unwrap();
        let sq = solve_profit_sqrt(&state, &params.with_impact(ImpactModel::Sqrt), realized);
        if !(-state.capital..=10.0 * state.capital).contains(&lin.total_pnl) {
            // the root lies outside the search bracket
            prop_assert!(matches!(sq, Err(propsim::Error::NoRootFound { .. })), "{sq:?}");
            return Ok(());
        }
        let sq = sq.unwrap();
        prop_assert!((lin.total_pnl - sq.total_pnl).abs() <= 1e-12 * lin.total_pnl.abs().max(1.0));
        prop_assert_eq!(sq.implied_pnl, 0.0);
    }

    #[test]
    fn zero_impact_maturity_converges(u in 0.0f64..1.0) {
        props::zero_impact_limits(u)?;
    }
}

#[test]
fn sqrt_base_root_matches_closed_solution() {
    // With R = σ the equation is Π = 4.99·sgn(ΔV)·√|ΔV|, ΔV = 0.2 + 0.1Π.
    // Writing Π = 4.99·y with y = √(0.2 + 0.499y) gives y² − 0.499y − 0.2 = 0.
    let y = (0.499 + (0.499f64.powi(2) + 0.8).sqrt()) / 2.0;
    let params = ModelParams::new(0.1, 0.05, 5.0, 0.01).unwrap().with_impact(ImpactModel::Sqrt);
    let state = FundState::initial(&params, 1000.0, 5.0, 20.0);
    let bd = solve_profit_sqrt(&state, &params, 20.0).unwrap();
    assert!(rel(bd.total_pnl, 4.99 * y) < 1e-12);
    let oracle = oracle_sqrt_profit(1000.0, 5.0, 20.0, 20.0, 0.1, 0.05, 0.01).unwrap();
    assert!(rel(oracle, 4.99 * y) < 1e-12);
}

#[test]
fn zero_impact_capital_rises_iff_edge_positive() {
    for (r, rising) in [(21.0, true), (19.0, false)] {
        let s = common::zero_impact(r);
        let traj = simulate(&s);
        let c = traj.capital();
        assert!(c.windows(2).all(|w| (w[1] > w[0]) == rising), "R = {r}");
        assert!(traj.states.iter().all(|st| st.implied == 20.0));
    }
    let flat = simulate(&common::zero_impact(20.0));
    assert!(flat.capital().iter().all(|&c| c == 1000.0));
}

#[test]
fn trajectories_are_bit_identical() {
    for s in [Scenario::reference(), common::figure(1010.0, 20.0), common::figure(1000.0, 17.0)] {
        let (a, b) = (simulate(&s), simulate(&s));
        assert_eq!(a.termination, b.termination);
        assert_eq!(a.states.len(), b.states.len());
        for (x, y) in a.states.iter().zip(&b.states) {
            assert_eq!(
                [x.capital, x.avg_maturity, x.implied, x.vega].map(f64::to_bits),
                [y.capital, y.avg_maturity, y.implied, y.vega].map(f64::to_bits)
            );
        }
    }
}

#[test]
fn trajectory_steps_satisfy_oracle() {
    let s = common::figure(1000.0, 17.0);
    let traj = simulate(&s);
    assert_eq!(traj.states.len(), traj.breakdowns.len() + 1);
    for (w, bd) in traj.states.windows(2).zip(&traj.breakdowns) {
        let (c1, m1, s1, p) = oracle_linear_step(
            w[0].capital, w[0].avg_maturity, w[0].implied, 20.0, s.kappa, s.lambda, s.maturity, s.dt,
        );
        assert!((bd.total_pnl - p).abs() <= 1e-9 * w[0].capital);
        assert!(rel(w[1].capital, c1) < 1e-9);
        assert!(rel(w[1].avg_maturity, m1) < 1e-9);
        assert!(rel(w[1].implied, s1) < 1e-9);
    }
}

#[test]
fn margin_vanishes_at_exact_critical() {
    let params = ModelParams::new(0.1, 0.05, 5.0, 0.01).unwrap();
    for m in [0.5, 1.0, 2.5, 5.0] {
        let cc = propsim::critical_capital(&params, Some(m)).unwrap();
        let state = FundState::initial(&params, cc.exact.unwrap(), m, 20.0);
        assert!(degeneracy_margin(&state, &params).abs() < 1e-12, "M = {m}");
        assert!(cc.exact.unwrap() > cc.approx);
    }
}

#[test]
fn zero_impact_with_no_edge_is_flat() {
    let s = Scenario {
        realized: RealizedPath::Constant(20.0),
        ..common::zero_impact(20.0)
    };
    let report = propsim::classify(&simulate(&s), &propsim::Thresholds::default());
    assert_eq!(report.regime, Regime::Flat);
}
