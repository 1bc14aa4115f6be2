mod common;

use common::{figure, median_abs, near_critical, raw_divergence_rate, zero_impact};
use propsim::regime::{gaps_in, peaks_in};
use propsim::{
    classify, detect_gaps, find_peaks, lyapunov_estimate, simulate, sweep, Axis, Execution, Regime, Scenario,
    SweepParam, Termination, Thresholds,
};

fn report(s: &Scenario) -> propsim::RegimeReport {
    classify(&simulate(s), &Thresholds::from(&s.guards))
}

#[test]
fn smooth_bubble() {
    let traj = simulate(&Scenario::reference());
    let r = classify(&traj, &Thresholds::default());
    assert_eq!(r.regime, Regime::SmoothBubble);
    assert_eq!(r.peaks.len(), 1);
    assert!(r.peaks[0].value > 1750.0 && r.peaks[0].value < 2000.0);
    assert!((280..=320).contains(&r.peaks[0].step));
    assert_eq!(traj.termination, Termination::Bankrupt);
    assert!((550..=650).contains(&r.bankruptcy_step.unwrap()));
    assert!(detect_gaps(&traj, 0.20).is_empty());
}

#[test]
fn gap_bubble() {
    let traj = simulate(&figure(1010.0, 20.0));
    let r = classify(&traj, &Thresholds::default());
    assert_eq!(r.regime, Regime::GapBubble);
    let top = r.peaks.iter().max_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    assert!(top.value > 2000.0 && (230..=270).contains(&top.step));
    assert!(r.gaps.iter().any(|g| g.rel_change < 0.0 && (230..=290).contains(&g.step)));
    assert!(r.bankruptcy_step.unwrap() <= 650);
}

#[test]
fn unbounded_growth() {
    let traj = simulate(&figure(1012.0, 20.0));
    assert_eq!(traj.termination, Termination::HorizonReached);
    assert!(traj.states[1000].capital > 17_500.0);
    assert_eq!(classify(&traj, &Thresholds::default()).regime, Regime::UnboundedGrowth);
}

#[test]
fn double_bubble() {
    let traj = simulate(&figure(1000.0, 17.0));
    let c = traj.capital();
    let peaks = find_peaks(&traj, 0.1);
    assert_eq!(peaks.len(), 2);
    assert!(peaks[0].value > 2200.0 && peaks[0].value < 2800.0 && (120..=180).contains(&peaks[0].step));
    assert!(peaks[1].value > 800.0 && peaks[1].value < 1200.0 && (430..=570).contains(&peaks[1].step));
    let crash = detect_gaps(&traj, 0.10)
        .into_iter()
        .find(|g| g.rel_change > -0.85 && g.rel_change < -0.65)
        .expect("a crash of about three quarters");
    let trough = c[crash.step..peaks[1].step].iter().copied().fold(f64::INFINITY, f64::min);
    assert!(trough > 400.0 && trough < 600.0, "{trough}");
    assert_eq!(classify(&traj, &Thresholds::default()).regime, Regime::MultiBubble);
}

#[test]
fn flat_and_decline() {
    assert_eq!(report(&zero_impact(20.0)).regime, Regime::Flat);
    assert_eq!(report(&zero_impact(19.0)).regime, Regime::MonotoneDecline);
}

#[test]
fn classify_is_pure() {
    let traj = simulate(&figure(1000.0, 17.0));
    let th = Thresholds::default();
    assert_eq!(classify(&traj, &th), classify(&traj, &th));
}

#[test]
fn events_are_scale_free() {
    for s in [figure(1010.0, 20.0), figure(1000.0, 17.0)] {
        let c = simulate(&s).capital();
        for k in [1e-3, 0.5, 7.0, 1e4] {
            let scaled: Vec<f64> = c.iter().map(|x| x * k).collect();
            let steps = |v: &[f64]| peaks_in(v, 0.1).iter().map(|p| p.step).collect::<Vec<_>>();
            assert_eq!(steps(&c), steps(&scaled));
            let gaps = |v: &[f64]| gaps_in(v, 0.1).iter().map(|g| g.step).collect::<Vec<_>>();
            assert_eq!(gaps(&c), gaps(&scaled));
        }
    }
}

#[test]
fn gaps_sit_near_the_singular_coefficient() {
    for s in [figure(1010.0, 20.0), figure(1012.0, 20.0), figure(1000.0, 17.0)] {
        let traj = simulate(&s);
        let median = median_abs(traj.breakdowns.iter().map(|b| b.denom_margin));
        let gaps = detect_gaps(&traj, s.guards.gap_threshold);
        assert!(!gaps.is_empty());
        for g in gaps {
            let m = traj.breakdowns[g.step].denom_margin.abs();
            assert!(m < median, "step {}: |margin| {m} vs median {median}", g.step);
        }
    }
}

#[test]
fn sweep_over_starting_capital() {
    let axis = Axis::new(SweepParam::C0, vec![1000.0, 1010.0, 1012.0]).unwrap();
    let map = sweep(&Scenario::reference(), &[axis], Execution::Parallel).unwrap();
    let regimes: Vec<_> = map.cells.iter().map(|c| c.regime).collect();
    assert_eq!(regimes, [Regime::SmoothBubble, Regime::GapBubble, Regime::UnboundedGrowth]);
}

#[test]
fn sweep_over_impact() {
    let axis = Axis::parse("lambda=0,0.05").unwrap();
    let map = sweep(&Scenario::reference(), &[axis], Execution::Serial).unwrap();
    let regimes: Vec<_> = map.cells.iter().map(|c| c.regime).collect();
    assert_eq!(regimes, [Regime::Flat, Regime::SmoothBubble]);
}

#[test]
fn single_point_sweep_is_one_run() {
    let axis = Axis::parse("c0=1010").unwrap();
    let map = sweep(&Scenario::reference(), &[axis], Execution::Parallel).unwrap();
    assert_eq!(map.cells.len(), 1);
    let r = report(&figure(1010.0, 20.0));
    let cell = &map.cells[0];
    assert_eq!(cell.regime, r.regime);
    assert_eq!(cell.final_capital, r.final_capital);
    assert_eq!(cell.gap_count, r.gaps.len());
    assert_eq!(cell.bankruptcy_step, r.bankruptcy_step);
}

#[test]
fn serial_and_parallel_sweeps_agree() {
    let axes = [
        Axis::parse("c0=990:1015:11").unwrap(),
        Axis::parse("sigma0=17,18,19,20,21").unwrap(),
    ];
    let a = sweep(&Scenario::reference(), &axes, Execution::Serial).unwrap();
    let b = sweep(&Scenario::reference(), &axes, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.cells.len(), 55);
}

#[test]
fn unknown_axis_rejected() {
    assert!(matches!(Axis::parse("mu=1,2"), Err(propsim::Error::InvalidAxis(_))));
}

#[test]
fn lyapunov_fixed_point_is_zero() {
    let est = lyapunov_estimate(&zero_impact(20.0), 1e-8).unwrap();
    assert!(est.exponent.abs() <= 1e-9);
}

#[test]
fn lyapunov_matches_unrenormalized_divergence() {
    let mut s = Scenario::reference();
    s.horizon = 100;
    let est = lyapunov_estimate(&s, 1e-8).unwrap();
    assert_eq!(est.steps, 100);
    let raw = raw_divergence_rate(&s, 1e-8, 100);
    assert!(((est.exponent - raw) / raw).abs() < 0.10, "{} vs {raw}", est.exponent);
}

#[test]
fn lyapunov_grows_near_critical_capital() {
    let baseline = lyapunov_estimate(&Scenario::reference(), 1e-8).unwrap();
    assert!(baseline.exponent.is_finite());
    let near = lyapunov_estimate(&near_critical(), 1e-8).unwrap();
    assert!(near.exponent > baseline.exponent, "{} vs {}", near.exponent, baseline.exponent);
}
