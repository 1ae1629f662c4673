use breakeven::backtest::constant_xi;
use breakeven::dynamics::{
    check_conditional_martingale, clayton_beta, clayton_sigma, merton_beta_from_psi,
    merton_psi_from_beta, simulate_clayton, simulate_euler, simulate_exact, uniform_grid, PathSet,
};
use breakeven::model::{CopulaSpec, DynamicsSpec, MarketState, Xi};
use breakeven::normal;
use nalgebra::DMatrix;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_se(a);
    let (mb, _) = mean_se(b);
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += (x - ma) * (y - mb);
        aa += (x - ma) * (x - ma);
        bb += (y - mb) * (y - mb);
    }
    ab / (aa * bb).sqrt()
}

fn terminal(set: &PathSet, name: usize) -> Vec<f64> {
    let last = set.n_times() - 1;
    (0..set.n_paths).map(|p| set.at(p, last)[name]).collect()
}

#[test]
fn exact_scheme_is_a_martingale() {
    let market = MarketState::from_survival(vec![0.9], 0.4, 5.0).unwrap();
    let spec = DynamicsSpec::new(vec![1.0], Xi::Merton, DMatrix::identity(1, 1));
    let grid = uniform_grid(0.0, 0.25, 10);
    let set = simulate_exact(&spec, &market, &grid, 100_000, 17).unwrap();
    for m in 1..set.n_times() {
        let qs: Vec<f64> = (0..set.n_paths).map(|p| set.at(p, m)[0]).collect();
        let (mean, se) = mean_se(&qs);
        assert!((mean - 0.9).abs() < 4.0 * se, "t={} mean {mean} se {se}", grid[m]);
    }
}

#[test]
fn exact_increments_carry_the_spread_correlation() {
    let rho = 0.6;
    let market = MarketState::from_survival(vec![0.8, 0.95], 0.4, 5.0).unwrap();
    let corr = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    let spec = DynamicsSpec::new(vec![0.5, 0.5], constant_xi(), corr);
    let set = simulate_exact(&spec, &market, &[0.0, 0.01], 40_000, 3).unwrap();
    let dz = |i: usize| -> Vec<f64> {
        (0..set.n_paths)
            .map(|p| normal::inv_cdf(set.at(p, 1)[i]) - normal::inv_cdf(set.at(p, 0)[i]))
            .collect()
    };
    let r = correlation(&dz(0), &dz(1));
    let se = (1.0 - rho * rho) / (set.n_paths as f64).sqrt();
    assert!((r - rho).abs() < 4.0 * se, "{r}");
}

#[test]
fn euler_terminal_mean_matches_exact() {
    let market = MarketState::from_survival(vec![0.9], 0.4, 5.0).unwrap();
    let spec = DynamicsSpec::new(vec![1.0], Xi::Merton, DMatrix::identity(1, 1));
    let grid = uniform_grid(0.0, 5.0 / 2000.0, 200);
    let e = simulate_euler(&spec, &market, &grid, 20_000, 8).unwrap();
    let x = simulate_exact(&spec, &market, &grid, 20_000, 9).unwrap();
    let (me, se_e) = mean_se(&terminal(&e, 0));
    let (mx, se_x) = mean_se(&terminal(&x, 0));
    assert!((me - mx).abs() < 4.0 * (se_e * se_e + se_x * se_x).sqrt(), "{me} vs {mx}");
}

/// `E[Q_t²]` under the exact law `Z_t ~ N(e^{σ̄²t/2} Z_0, e^{σ̄²t} − 1)` with
/// constant `ξ`, by trapezoidal integration.
fn exact_second_moment(q0: f64, sigma: f64, t: f64) -> f64 {
    let m = (0.5 * sigma * sigma * t).exp() * normal::inv_cdf(q0);
    let sd = (sigma * sigma * t).exp_m1().sqrt();
    let k = 20_000;
    let (a, b) = (m - 12.0 * sd, m + 12.0 * sd);
    let h = (b - a) / k as f64;
    let sum: f64 = (0..=k)
        .map(|j| {
            let z = a + h * j as f64;
            let w = if j == 0 || j == k { 0.5 } else { 1.0 };
            let u = (z - m) / sd;
            w * normal::cdf(z).powi(2) * (-0.5 * u * u).exp()
        })
        .sum();
    sum * h / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

#[test]
fn euler_bias_shrinks_with_the_step() {
    let sigma = 0.8;
    let market = MarketState::from_survival(vec![0.9], 0.4, 5.0).unwrap();
    let spec = DynamicsSpec::new(vec![sigma], constant_xi(), DMatrix::identity(1, 1));
    let exact = exact_second_moment(0.9, sigma, 1.0);
    let bias: Vec<f64> = [2usize, 4, 8]
        .iter()
        .map(|&steps| {
            let grid = uniform_grid(0.0, 1.0 / steps as f64, steps);
            let set = simulate_euler(&spec, &market, &grid, 200_000, 5).unwrap();
            let sq: Vec<f64> = terminal(&set, 0).iter().map(|q| q * q).collect();
            let (m, se) = mean_se(&sq);
            assert!((m - exact).abs() > 4.0 * se, "bias lost in noise at {steps} steps");
            (m - exact).abs()
        })
        .collect();
    let first = bias[0] / bias[1];
    assert!((1.5..3.0).contains(&first), "{bias:?}");
    assert!(bias[2] < bias[1] / 1.5, "{bias:?}");
}

#[test]
fn merton_variance_diverges_at_maturity() {
    let t_mat = 5.0;
    let mut prev = 0.0;
    for k in 1..8 {
        let t = t_mat * (1.0 - 10f64.powi(-k));
        let var = Xi::Merton.integral_sq(0.0, t, t_mat).exp_m1();
        assert!(var > prev);
        prev = var;
    }
    assert!(prev > 1e6);
    assert!(Xi::Merton.is_terminating());
    assert!(!constant_xi().is_terminating());
}

#[test]
fn merton_psi_beta_round_trip() {
    let t_mat = 5.0;
    let psi = |u: f64| (-u).exp();
    let beta = |t: f64| merton_beta_from_psi(&psi, t, t_mat).unwrap();
    let times: Vec<f64> = (0..1000).map(|k| k as f64 * t_mat * 0.999 / 1000.0).collect();
    let ratios: Vec<f64> = times
        .iter()
        .map(|&t| merton_psi_from_beta(&beta, t, t_mat, 1.0).unwrap() / psi(t))
        .collect();
    // ψ is recovered up to the constant 1/√(∫_0^T ψ²)
    let c = (0.5 * (1.0 - (-2.0 * t_mat).exp())).sqrt();
    for r in ratios {
        assert!((r * c - 1.0).abs() < 1e-6, "{}", r * c);
    }
}

#[test]
fn conditional_default_probabilities_are_martingales() {
    let market = MarketState::from_survival(vec![0.9], 0.4, 5.0).unwrap();
    let grid = uniform_grid(0.0, 0.8, 5);
    for rho in [0.5, 0.0] {
        let copula = CopulaSpec::Gauss1F { loadings: vec![rho] };
        let r = check_conditional_martingale(&copula, &market, &grid, 100_000, 21).unwrap();
        assert!((r.mean[0][0] - 0.1).abs() < 4.0 * r.std_err[0][0].max(1e-3), "rho={rho}");
        assert!(r.max_mean_score() < 4.0, "rho={rho}: {}", r.max_mean_score());
        assert!(r.max_slope_score() < 2.0, "rho={rho}: {}", r.max_slope_score());
    }
}

#[test]
fn clayton_names_decouple_as_theta_vanishes() {
    let market = MarketState::from_survival(vec![0.7, 0.8], 0.4, 5.0).unwrap();
    let set = simulate_clayton(1e-4, 0.5, &market, &[0.0, 0.01], 40_000, 4).unwrap();
    let dq = |i: usize| -> Vec<f64> { (0..set.n_paths).map(|p| set.at(p, 1)[i] - set.at(p, 0)[i]).collect() };
    let r = correlation(&dq(0), &dq(1));
    assert!(r.abs() < 4.0 / (set.n_paths as f64).sqrt(), "{r}");
}

#[test]
fn clayton_covariation_matches_the_model() {
    let (theta, s0, dt) = (0.8, 0.5, 1e-3);
    let q = [0.6, 0.85];
    let market = MarketState::from_survival(q.to_vec(), 0.4, 5.0).unwrap();
    let set = simulate_clayton(theta, s0, &market, &[0.0, dt], 100_000, 6).unwrap();
    let prod: Vec<f64> = (0..set.n_paths)
        .map(|p| (set.at(p, 1)[0] - q[0]) * (set.at(p, 1)[1] - q[1]) / dt)
        .collect();
    let (m, se) = mean_se(&prod);
    let model = clayton_sigma(theta, s0, q[0])
        * clayton_sigma(theta, s0, q[1])
        * clayton_beta(theta, q[0])
        * clayton_beta(theta, q[1]);
    assert!((m - model).abs() < 4.0 * se, "{m} vs {model} (se {se})");
}

#[test]
fn clayton_ftd_hedge_has_no_drift() {
    use breakeven::backtest::run_hedge_all;
    use breakeven::model::BasketPayoff;
    let theta = 0.8;
    let market = MarketState::from_survival(vec![0.9, 0.85, 0.8], 0.4, 5.0).unwrap();
    let grid = uniform_grid(0.0, 1.0 / 365.0, 60);
    let set = simulate_clayton(theta, 0.5, &market, &grid, 200, 12).unwrap();
    let payoff = BasketPayoff::fptd(3, 1, 0.4).unwrap();
    let copula = CopulaSpec::Clayton { theta };
    let ledgers = run_hedge_all(&set, &market, &payoff, &copula, None).unwrap();
    // per-path least-squares slope of cumulative P&L on time
    let slopes: Vec<f64> = ledgers
        .iter()
        .map(|l| {
            let (mt, _) = mean_se(&l.times);
            let (mp, _) = mean_se(&l.cumulative);
            let num: f64 = l.times.iter().zip(&l.cumulative).map(|(t, v)| (t - mt) * (v - mp)).sum();
            let den: f64 = l.times.iter().map(|t| (t - mt).powi(2)).sum();
            num / den
        })
        .collect();
    let (m, se) = mean_se(&slopes);
    assert!(m.abs() < 2.0 * se, "slope {m} se {se}");
}
