//! Scenario builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

pub mod props;

use propsim::{RealizedPath, Scenario};

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// The reference base with a different starting capital and implied mark.
pub fn figure(c0: f64, sigma0: f64) -> Scenario {
    let mut s = Scenario::reference();
    s.c0 = c0;
    s.sigma0 = sigma0;
    s
}

pub fn zero_impact(realized: f64) -> Scenario {
    let mut s = Scenario::reference();
    s.lambda = 0.0;
    s.realized = RealizedPath::Constant(realized);
    s
}

pub fn near_critical() -> Scenario {
    let exact = 5.0 / (4.99 * 0.05 * 0.1 * 0.1);
    figure(0.995 * exact, 20.0)
}

/// One step written out from the balance-sheet equations: the fund earns
/// the realized slice on what matures plus the mark-up its own purchase
/// inflicts on what it keeps, then rebalances to `κ` of the new capital.
/// Returns `(C', M', σ', Π)`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_linear_step(
    c: f64,
    m: f64,
    sigma: f64,
    r: f64,
    kappa: f64,
    lambda: f64,
    t_std: f64,
    dt: f64,
) -> (f64, f64, f64, f64) {
    let v = kappa * c;
    let kept = v * (m - dt) / m;
    let slice = v * dt / m;
    // Π = slice(R-σ) + kept·λ·(κ(C+Π) - kept), solved for Π
    let profit = (slice * (r - sigma) + kept * lambda * (v - kept)) / (1.0 - lambda * kappa * kept);
    let c_next = c + profit;
    let v_next = kappa * c_next;
    let bought = v_next - kept;
    let m_next = (kept * (m - dt) + bought * t_std) / v_next;
    (c_next, m_next, sigma + lambda * bought, profit)
}

/// Smallest-magnitude root of the square-root impact profit equation,
/// located by scanning for sign changes and bisecting each.
pub fn oracle_sqrt_profit(c: f64, m: f64, sigma: f64, r: f64, kappa: f64, lambda: f64, dt: f64) -> Option<f64> {
    let v = kappa * c;
    let kept = v * (m - dt) / m;
    let slice = v * dt / m;
    let f = |p: f64| {
        let trade = v + kappa * p - kept;
        slice * (r - sigma) + kept * lambda * trade.signum() * trade.abs().sqrt() - p
    };
    let (lo, hi) = (-c, 10.0 * c);
    let kink = (kept - v) / kappa;
    let mut grid: Vec<f64> = (0..=40_000).map(|i| lo + (hi - lo) * i as f64 / 40_000.0).collect();
    // roots can crowd the kink where the square root is steep
    for k in 0..60 {
        let d = (hi - lo) * 0.5f64.powi(k);
        grid.push(kink - d);
        grid.push(kink + d);
    }
    grid.push(kink);
    grid.retain(|p| (lo..=hi).contains(p));
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut best: Option<f64> = None;
    for w in grid.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let (fa, fb) = (f(a), f(b));
        let root = if fa == 0.0 {
            a
        } else if fb == 0.0 {
            b
        } else if fa.signum() != fb.signum() {
            let mut fa = fa;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 || mid == a || mid == b {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        } else {
            continue;
        };
        if best.is_none_or(|x| root.abs() < x.abs()) {
            best = Some(root);
        }
    }
    best
}

/// Median of `|values|`.
pub fn median_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().map(f64::abs).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Divergence of two unrenormalized trajectories over `steps`, as a rate
/// per year, in the same relative coordinates the estimator uses.
pub fn raw_divergence_rate(scenario: &Scenario, epsilon: f64, steps: usize) -> f64 {
    let mut a = scenario.clone();
    a.horizon = steps;
    let mut b = a.clone();
    b.c0 *= 1.0 + epsilon;
    let ta = propsim::simulate(&a);
    let tb = propsim::simulate(&b);
    let dist = |i: usize| {
        let (x, y) = (&ta.states[i], &tb.states[i]);
        let d = |p: f64, q: f64| (q - p) / p.abs();
        (d(x.capital, y.capital).powi(2) + d(x.avg_maturity, y.avg_maturity).powi(2) + d(x.implied, y.implied).powi(2))
            .sqrt()
    };
    (dist(steps) / dist(0)).ln() / (steps as f64 * scenario.dt)
}

/// Serves the API on an ephemeral local port from its own runtime thread,
/// as a separate instance would; returns its base URL.
pub fn spawn_service() -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = propsim::service::router(&propsim::service::ServiceConfig::default());
            axum::serve(listener, app).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

pub fn figure_body(c0: f64) -> serde_json::Value {
    serde_json::json!({
        "c0": c0, "kappa": 0.1, "lambda": 0.05, "T": 5, "dt": 0.01,
        "sigma0": 20, "realized": 20, "horizon": 1000
    })
}

/// Times `count` sequential health checks from a client of its own, so the
/// probe never waits on the caller's runtime. Returns the slowest.
pub fn probe_health(base: &str, count: usize) -> std::time::Duration {
    let url = format!("{base}/healthz");
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let client = reqwest::Client::new();
    rt.block_on(async {
        let mut worst = std::time::Duration::ZERO;
        for _ in 0..count {
            let t = std::time::Instant::now();
            let r = client.get(&url).send().await.unwrap();
            assert_eq!(r.status(), 200);
            r.bytes().await.unwrap();
            worst = worst.max(t.elapsed());
        }
        worst
    })
}
