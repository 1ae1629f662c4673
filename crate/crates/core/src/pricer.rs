//! Prices and deltas of European basket payoffs under a factor copula.
//!
//! Conditionally on the factor the default indicators are independent, so
//! at each quadrature node the payoff expectation is a multilinear function
//! `F(p_1, …, p_n)` of the conditional default probabilities. Tabulated
//! payoffs contract the 2ⁿ table one name at a time; payoffs that depend on
//! the number of defaults only use the distribution of that count, built by
//! convolution.

use log::warn;

use crate::copula::{default_rule, ConditionalTable};
use crate::error::{domain, Error, Result};
use crate::model::{BasketPayoff, CopulaSpec, MarketState, PayoffKind};
use crate::normal;
use crate::quadrature::QuadratureRule;

/// Central-difference step for bump deltas.
pub const BUMP_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceResult {
    pub value: f64,
    /// `∂V/∂Q_i`, when requested.
    pub deltas: Option<Vec<f64>>,
    pub nodes: usize,
    /// Difference to the same computation on the next coarser rule.
    pub error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    Analytic,
    Bump,
}

/// Node-level view of a payoff.
#[derive(Debug, Clone)]
pub(crate) enum NodePayoff {
    /// `g(k)` for `k = 0..=n` defaults.
    Count(Vec<f64>),
    /// Full table indexed by default mask.
    Table(Vec<f64>),
}

impl NodePayoff {
    pub(crate) fn new(payoff: &BasketPayoff) -> Result<Self> {
        let n = payoff.len();
        match payoff.kind() {
            PayoffKind::Generic => Ok(NodePayoff::Table(payoff.to_table()?)),
            _ => Ok(NodePayoff::Count(
                (0..=n)
                    .map(|k| payoff.eval_count(k).expect("exchangeable payoff"))
                    .collect(),
            )),
        }
    }

    /// `F(p)`.
    pub(crate) fn value(&self, p: &[f64], scratch: &mut Vec<f64>) -> f64 {
        match self {
            NodePayoff::Count(g) => {
                let dist = count_distribution(p, &[]);
                dist.iter().zip(g).map(|(a, b)| a * b).sum()
            }
            NodePayoff::Table(t) => contract(t, p, &[], scratch),
        }
    }

    /// `∂F/∂p_i = E[ψ | δ_i = 1] − E[ψ | δ_i = 0]` for every name.
    pub(crate) fn gradient(&self, p: &[f64], scratch: &mut Vec<f64>) -> Vec<f64> {
        let n = p.len();
        match self {
            NodePayoff::Count(g) => {
                let dist = count_distribution(p, &[]);
                (0..n)
                    .map(|i| {
                        let r = remove_name(&dist, p[i]);
                        r.iter()
                            .enumerate()
                            .map(|(k, rk)| rk * (g[k + 1] - g[k]))
                            .sum()
                    })
                    .collect()
            }
            NodePayoff::Table(t) => (0..n).map(|i| contract(t, p, &[i], scratch)).collect(),
        }
    }

    /// `∂²F/∂p_i∂p_j` for `i < j`, in lexicographic pair order.
    pub(crate) fn second(&self, p: &[f64], scratch: &mut Vec<f64>) -> Vec<f64> {
        let n = p.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        match self {
            NodePayoff::Count(g) => {
                let dist = count_distribution(p, &[]);
                for i in 0..n {
                    let ri = remove_name(&dist, p[i]);
                    for j in i + 1..n {
                        let rij = remove_name(&ri, p[j]);
                        out.push(
                            rij.iter()
                                .enumerate()
                                .map(|(k, r)| r * (g[k + 2] - 2.0 * g[k + 1] + g[k]))
                                .sum(),
                        );
                    }
                }
            }
            NodePayoff::Table(t) => {
                for i in 0..n {
                    for j in i + 1..n {
                        out.push(contract(t, p, &[i, j], scratch));
                    }
                }
            }
        }
        out
    }
}

/// Contracts a payoff table against independent Bernoulli(p_i) indicators.
/// Names listed in `diff` are replaced by the difference `T(δ_i=1) − T(δ_i=0)`.
pub(crate) fn contract(table: &[f64], p: &[f64], diff: &[usize], scratch: &mut Vec<f64>) -> f64 {
    let n = p.len();
    scratch.clear();
    scratch.extend_from_slice(table);
    for i in (0..n).rev() {
        let half = 1usize << i;
        let (lo, hi) = scratch.split_at_mut(half);
        if diff.contains(&i) {
            for m in 0..half {
                lo[m] = hi[m] - lo[m];
            }
        } else {
            let (pi, qi) = (p[i], 1.0 - p[i]);
            for m in 0..half {
                lo[m] = qi * lo[m] + pi * hi[m];
            }
        }
    }
    scratch[0]
}

/// Distribution of the number of defaults among names not in `skip`.
pub(crate) fn count_distribution(p: &[f64], skip: &[usize]) -> Vec<f64> {
    let mut dist = Vec::with_capacity(p.len() + 1);
    dist.push(1.0);
    for (i, &pi) in p.iter().enumerate() {
        if skip.contains(&i) {
            continue;
        }
        let qi = 1.0 - pi;
        dist.push(0.0);
        for k in (1..dist.len()).rev() {
            dist[k] = qi * dist[k] + pi * dist[k - 1];
        }
        dist[0] *= qi;
    }
    dist
}

/// Removes one Bernoulli(p) name from a count distribution. Runs the
/// recursion in the direction that divides by the larger of `p` and `1 − p`.
pub(crate) fn remove_name(dist: &[f64], p: f64) -> Vec<f64> {
    let m = dist.len() - 1;
    let q = 1.0 - p;
    let mut r = vec![0.0; m];
    if m == 0 {
        return r;
    }
    if q >= 0.5 {
        r[0] = dist[0] / q;
        for k in 1..m {
            r[k] = (dist[k] - p * r[k - 1]) / q;
        }
    } else {
        r[m - 1] = dist[m] / p;
        for k in (1..m).rev() {
            r[k - 1] = (dist[k] - q * r[k]) / p;
        }
    }
    r
}

fn check_sizes(payoff: &BasketPayoff, market: &MarketState) -> Result<()> {
    if payoff.len() != market.len() {
        return Err(Error::Shape(format!(
            "payoff on {} names, market has {}",
            payoff.len(),
            market.len()
        )));
    }
    Ok(())
}

/// Value and optional analytic deltas on a prepared conditional table.
pub(crate) fn value_on_table(
    node: &NodePayoff,
    table: &ConditionalTable,
    with_deltas: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = table.n;
    let mut scratch = Vec::new();
    let mut value = 0.0;
    let mut deltas = with_deltas.then(|| vec![0.0; n]);
    for k in 0..table.nodes() {
        let w = table.weights[k];
        let row = table.row(k);
        value += w * node.value(row, &mut scratch);
        if let Some(d) = deltas.as_mut() {
            let grad = node.gradient(row, &mut scratch);
            let dp = table.dp_row(k);
            for i in 0..n {
                d[i] += w * grad[i] * dp[i];
            }
        }
    }
    (value, deltas)
}

/// Prices any payoff with an explicit rule. Exchangeable payoff kinds use
/// the default-count recursion; generic tables are contracted.
pub fn price_with(
    payoff: &BasketPayoff,
    market: &MarketState,
    copula: &CopulaSpec,
    rule: &QuadratureRule,
    with_deltas: bool,
) -> Result<PriceResult> {
    check_sizes(payoff, market)?;
    let node = NodePayoff::new(payoff)?;
    let table = ConditionalTable::build(copula, market, rule)?;
    let (value, deltas) = value_on_table(&node, &table, with_deltas);
    let coarse_rule = rule.coarser()?;
    let coarse = ConditionalTable::build(copula, market, &coarse_rule)?;
    let (coarse_value, _) = value_on_table(&node, &coarse, false);
    Ok(PriceResult {
        value,
        deltas,
        nodes: rule.len(),
        error_estimate: (value - coarse_value).abs(),
    })
}

/// Price of a tabulated payoff by enumeration of all default vectors.
pub fn price_generic(
    payoff: &BasketPayoff,
    market: &MarketState,
    copula: &CopulaSpec,
) -> Result<PriceResult> {
    let generic = match payoff.kind() {
        PayoffKind::Generic => payoff.clone(),
        _ => payoff.to_generic()?,
    };
    price_with(&generic, market, copula, &default_rule(copula)?, true)
}

/// First-p-to-default price `E[min(N, p)] (1 − R)` with the common recovery
/// of the market.
pub fn price_fptd(order: usize, market: &MarketState, copula: &CopulaSpec) -> Result<PriceResult> {
    let payoff = fptd_payoff(order, market)?;
    price_with(&payoff, market, copula, &default_rule(copula)?, true)
}

pub(crate) fn fptd_payoff(order: usize, market: &MarketState) -> Result<BasketPayoff> {
    let r = market.common_recovery().ok_or_else(|| {
        Error::Domain("FpTD pricing needs a common recovery rate".into())
    })?;
    BasketPayoff::fptd(market.len(), order, r)
}

/// Worst-of digital put on names with digital-put prices `puts`:
/// `1 − ∫ Π (1 − Φ((Φ⁻¹(P_i) − ρ_i'x)/√(1−|ρ_i|²))) φ(x) dx`.
pub fn price_worst_of_digital(puts: &[f64], copula: &CopulaSpec) -> Result<f64> {
    let n = puts.len();
    copula.validate(n)?;
    if let Some(p) = puts.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
        return domain(format!("digital put price {p} outside (0, 1)"));
    }
    let loadings = copula
        .gaussian_loadings()
        .ok_or_else(|| Error::Unsupported("worst-of digital needs a Gaussian copula".into()))?;
    let rule = default_rule(copula)?;
    let z: Vec<f64> = puts.iter().map(|&p| normal::inv_cdf(p)).collect();
    let roots: Vec<f64> = loadings
        .iter()
        .map(|l| (1.0 - l.iter().map(|r| r * r).sum::<f64>()).sqrt())
        .collect();
    let none_in_money = rule.integrate(|x| {
        (0..n)
            .map(|i| {
                let shift: f64 = loadings[i].iter().zip(x).map(|(r, xk)| r * xk).sum();
                normal::sf((z[i] - shift) / roots[i])
            })
            .product()
    })?;
    Ok(1.0 - none_in_money)
}

/// `∂V/∂Q_i` by differentiation under the integral or by central bumps.
pub fn deltas(
    payoff: &BasketPayoff,
    market: &MarketState,
    copula: &CopulaSpec,
    mode: DeltaMode,
) -> Result<Vec<f64>> {
    deltas_with(payoff, market, copula, mode, &default_rule(copula)?)
}

pub fn deltas_with(
    payoff: &BasketPayoff,
    market: &MarketState,
    copula: &CopulaSpec,
    mode: DeltaMode,
    rule: &QuadratureRule,
) -> Result<Vec<f64>> {
    check_sizes(payoff, market)?;
    let node = NodePayoff::new(payoff)?;
    match mode {
        DeltaMode::Analytic => {
            let table = ConditionalTable::build(copula, market, rule)?;
            Ok(value_on_table(&node, &table, true).1.expect("deltas requested"))
        }
        DeltaMode::Bump => {
            let q = market.survival();
            let mut out = vec![0.0; q.len()];
            for i in 0..q.len() {
                if market.defaulted()[i] {
                    continue;
                }
                let mut h = BUMP_STEP;
                // keep the bumped Q well inside (0, 1), where the price is smooth
                let room = 1e-3 * q[i].min(1.0 - q[i]);
                if h > room {
                    warn!(
                        "bump step for {} shrunk from {h:e} to {room:e} near the edge of (0, 1)",
                        market.names()[i]
                    );
                    h = room;
                }
                let bumped = |s: f64| -> Result<f64> {
                    let mut qb = q.to_vec();
                    qb[i] += s;
                    let m = market.with_survival(qb)?;
                    let t = ConditionalTable::build(copula, &m, rule)?;
                    Ok(value_on_table(&node, &t, false).0)
                };
                out[i] = (bumped(h)? - bumped(-h)?) / (2.0 * h);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn market(q: &[f64], r: f64) -> MarketState {
        MarketState::from_survival(q.to_vec(), r, 5.0).unwrap()
    }

    #[test]
    fn single_name_digital() {
        let m = market(&[0.9], 0.0);
        let payoff = BasketPayoff::from_fn(1, |d| if d[0] { 1.0 } else { 0.0 }).unwrap();
        for copula in [
            CopulaSpec::gauss_flat(1, 0.7),
            CopulaSpec::Clayton { theta: 1.5 },
            CopulaSpec::GaussPF {
                loadings: vec![vec![0.3, 0.4]],
            },
        ] {
            let r = price_generic(&payoff, &m, &copula).unwrap();
            assert!((r.value - 0.1).abs() < 1e-10, "{copula:?}");
            assert!((r.deltas.unwrap()[0] + 1.0).abs() < 1e-8, "{copula:?}");
        }
    }

    #[test]
    fn constant_and_independent_products() {
        let m = market(&[0.9, 0.8, 0.7], 0.0);
        let copula = CopulaSpec::gauss_flat(3, 0.6);
        let c = price_generic(&BasketPayoff::constant(3, 2.5).unwrap(), &m, &copula).unwrap();
        assert!((c.value - 2.5).abs() < 1e-12);
        assert!(c.deltas.unwrap().iter().all(|d| d.abs() < 1e-12));
        let all = BasketPayoff::from_fn(3, |d| if d.iter().all(|&x| x) { 1.0 } else { 0.0 }).unwrap();
        let v = price_generic(&all, &m, &CopulaSpec::gauss_flat(3, 0.0)).unwrap();
        assert!((v.value - 0.006).abs() < 1e-15);
    }

    #[test]
    fn fptd_examples() {
        let v = price_fptd(1, &market(&[0.9], 0.4), &CopulaSpec::gauss_flat(1, 0.5)).unwrap();
        assert!((v.value - 0.06).abs() < 1e-12);
        let v = price_fptd(1, &market(&[0.95; 4], 0.0), &CopulaSpec::gauss_flat(4, 0.0)).unwrap();
        assert!((v.value - 0.185_493_75).abs() < 1e-14);
        assert!(price_fptd(0, &market(&[0.95; 4], 0.0), &CopulaSpec::gauss_flat(4, 0.0)).is_err());
        assert!(price_fptd(5, &market(&[0.95; 4], 0.0), &CopulaSpec::gauss_flat(4, 0.0)).is_err());
    }

    #[test]
    fn deconvolution_matches_direct_convolution() {
        let p = [0.01, 0.3, 0.5, 0.77, 0.999, 0.2];
        let full = count_distribution(&p, &[]);
        for i in 0..p.len() {
            let direct = count_distribution(&p, &[i]);
            let removed = remove_name(&full, p[i]);
            for (a, b) in direct.iter().zip(&removed) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn contraction_gradient_matches_count_route() {
        let p = [0.1, 0.45, 0.8, 0.3];
        let payoff = BasketPayoff::fptd(4, 2, 0.4).unwrap();
        let count = NodePayoff::new(&payoff).unwrap();
        let table = NodePayoff::new(&payoff.to_generic().unwrap()).unwrap();
        let mut s = Vec::new();
        assert!((count.value(&p, &mut s) - table.value(&p, &mut s)).abs() < 1e-15);
        for (a, b) in count.gradient(&p, &mut s).iter().zip(table.gradient(&p, &mut s)) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in count.second(&p, &mut s).iter().zip(table.second(&p, &mut s)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn defaulted_names_count_as_defaults() {
        let m = MarketState::with_defaults(
            vec!["A".into(), "B".into()],
            5.0,
            1.0,
            vec![0.0, 0.8],
            vec![0.0, 0.0],
            vec![true, false],
        )
        .unwrap();
        let ftd = price_fptd(1, &m, &CopulaSpec::gauss_flat(2, 0.5)).unwrap();
        assert!((ftd.value - 1.0).abs() < 1e-14);
        let f2 = price_fptd(2, &m, &CopulaSpec::gauss_flat(2, 0.5)).unwrap();
        assert!((f2.value - 1.2).abs() < 1e-12);
    }

    #[test]
    fn worst_of_digital_reductions() {
        let v = price_worst_of_digital(&[0.3], &CopulaSpec::gauss_flat(1, 0.4)).unwrap();
        assert!((v - 0.3).abs() < 1e-12);
        let puts = [0.1, 0.2, 0.05];
        let v = price_worst_of_digital(&puts, &CopulaSpec::gauss_flat(3, 0.0)).unwrap();
        assert!((v - (1.0 - 0.9 * 0.8 * 0.95)).abs() < 1e-14);
    }

    #[test]
    fn bump_step_shrinks_near_the_boundary() {
        let m = market(&[1e-6, 0.5], 0.0);
        let payoff = BasketPayoff::fptd(2, 1, 0.0).unwrap();
        let copula = CopulaSpec::gauss_flat(2, 0.3);
        let a = deltas(&payoff, &m, &copula, DeltaMode::Analytic).unwrap();
        let b = deltas(&payoff, &m, &copula, DeltaMode::Bump).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-4 * x.abs());
        }
    }
}
