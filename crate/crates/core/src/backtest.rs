//! Delta-hedging backtests, empirical break-even correlations and the
//! scenario studies on simulated baskets.
//!
//! A position long the basket payoff is hedged with CDS marked upfront at
//! `CDS_i = (1 − Q_i)(1 − R_i)`. Holding `−h_i` CDS with
//! `h_i = −(∂V/∂Q_i)/(1 − R_i)` removes the first-order spread risk; the
//! cash account earns no interest and every rebalancing is self-financed.

use nalgebra::DMatrix;

use crate::copula::{default_rule, ConditionalTable};
use crate::drift::{flat_copula, solve_breakeven_flat_near};
use crate::dynamics::{simulate_exact, uniform_grid, PathSet};
use crate::error::{domain, Error, Result};
use crate::model::{BasketPayoff, CopulaSpec, DynamicsSpec, MarketState, Xi};
use crate::parallel::map_indexed;
use crate::pricer::{value_on_table, NodePayoff};
use crate::quadrature::QuadratureRule;

/// Candidate flat correlations for the empirical break-even search:
/// 0 to 0.95 in steps of 0.05.
pub fn candidate_grid() -> Vec<f64> {
    (0..20).map(|k| 0.05 * k as f64).collect()
}

/// Hedging record of one path.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeLedger {
    pub times: Vec<f64>,
    /// Basket value `V_t`.
    pub values: Vec<f64>,
    /// Hedge ratios `h_i` held over the following step.
    pub hedges: Vec<Vec<f64>>,
    /// CDS marks `(1 − Q_i)(1 − R_i)`.
    pub cds: Vec<Vec<f64>>,
    /// Cash after rebalancing.
    pub cash: Vec<f64>,
    /// `ΔV − Σ h_i ΔCDS_i` per step.
    pub increments: Vec<f64>,
    /// Cumulative P&L at each grid time (starts at 0).
    pub cumulative: Vec<f64>,
    /// Largest gap between the marked-to-market wealth and the cumulative
    /// P&L.
    pub self_financing_error: f64,
}

impl HedgeLedger {
    /// Sums of `window` consecutive increments, one per window end.
    pub fn window_pnl(&self, window: usize) -> Vec<f64> {
        if window == 0 || window > self.increments.len() {
            return Vec::new();
        }
        self.increments.windows(window).map(|w| w.iter().sum()).collect()
    }

    pub fn total_pnl(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

/// Hedges `payoff` along one path of `paths`, rebalancing at every grid
/// time. `base` supplies names, maturity and recoveries.
pub fn run_hedge(
    paths: &PathSet,
    path: usize,
    base: &MarketState,
    payoff: &BasketPayoff,
    copula: &CopulaSpec,
    rule: Option<&QuadratureRule>,
) -> Result<HedgeLedger> {
    let n = base.len();
    if paths.n_names() != n || payoff.len() != n {
        return Err(Error::Shape(format!(
            "paths on {} names, payoff on {}, market has {n}",
            paths.n_names(),
            payoff.len()
        )));
    }
    if path >= paths.n_paths {
        return domain(format!("path {path} out of range ({} paths)", paths.n_paths));
    }
    let owned;
    let rule = match rule {
        Some(r) => r,
        None => {
            owned = default_rule(copula)?;
            &owned
        }
    };
    let node = NodePayoff::new(payoff)?;
    let rec = base.recovery();
    let steps = paths.n_times();
    let mut ledger = HedgeLedger {
        times: paths.times.clone(),
        values: Vec::with_capacity(steps),
        hedges: Vec::with_capacity(steps),
        cds: Vec::with_capacity(steps),
        cash: Vec::with_capacity(steps),
        increments: Vec::with_capacity(steps.saturating_sub(1)),
        cumulative: Vec::with_capacity(steps),
        self_financing_error: 0.0,
    };
    for m in 0..steps {
        let q = paths.at(path, m);
        let market = base
            .with_survival(q.to_vec())
            .and_then(|s| s.with_time(paths.times[m]))
            .map_err(|e| Error::Domain(format!("path {path}, step {m}: {e}")))?;
        let table = ConditionalTable::build(copula, &market, rule)
            .map_err(|e| Error::Domain(format!("pricing failed at path {path}, step {m}: {e}")))?;
        let (value, deltas) = value_on_table(&node, &table, true);
        let deltas = deltas.expect("deltas requested");
        if !value.is_finite() || deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite { node: m, value });
        }
        let hedge: Vec<f64> = (0..n).map(|i| -deltas[i] / (1.0 - rec[i])).collect();
        let cds: Vec<f64> = (0..n).map(|i| (1.0 - q[i]) * (1.0 - rec[i])).collect();
        let hedge_mv = |h: &[f64]| -> f64 { h.iter().zip(&cds).map(|(a, b)| a * b).sum() };
        if m == 0 {
            // buy the basket, sell h CDS, finance the rest in cash
            ledger.cash.push(-value + hedge_mv(&hedge));
            ledger.cumulative.push(0.0);
        } else {
            let (prev_v, prev_h, prev_c) = (ledger.values[m - 1], &ledger.hedges[m - 1], &ledger.cds[m - 1]);
            let d_cds: f64 = (0..n).map(|i| prev_h[i] * (cds[i] - prev_c[i])).sum();
            let inc = value - prev_v - d_cds;
            ledger.increments.push(inc);
            ledger.cumulative.push(ledger.cumulative[m - 1] + inc);
            let cash = ledger.cash[m - 1] + hedge_mv(&hedge) - hedge_mv(prev_h);
            ledger.cash.push(cash);
        }
        let wealth = value - hedge_mv(&hedge) + ledger.cash[m];
        let gap = (wealth - ledger.cumulative[m]).abs();
        ledger.self_financing_error = ledger.self_financing_error.max(gap);
        ledger.values.push(value);
        ledger.hedges.push(hedge);
        ledger.cds.push(cds);
    }
    Ok(ledger)
}

/// Hedges every path, in parallel.
pub fn run_hedge_all(
    paths: &PathSet,
    base: &MarketState,
    payoff: &BasketPayoff,
    copula: &CopulaSpec,
    rule: Option<&QuadratureRule>,
) -> Result<Vec<HedgeLedger>> {
    map_indexed(paths.n_paths, |p| run_hedge(paths, p, base, payoff, copula, rule))
        .into_iter()
        .collect()
}

/// Ledgers for one flat pricing correlation `ρ²`.
#[derive(Debug, Clone)]
pub struct CandidateLedgers {
    pub rho_sq: f64,
    pub ledgers: Vec<HedgeLedger>,
}

/// Hedges every path under each flat correlation of `rho_sq_grid`.
pub fn hedge_family(
    paths: &PathSet,
    base: &MarketState,
    payoff: &BasketPayoff,
    rho_sq_grid: &[f64],
    rule: Option<&QuadratureRule>,
) -> Result<Vec<CandidateLedgers>> {
    let n = base.len();
    let np = paths.n_paths;
    let jobs = map_indexed(rho_sq_grid.len() * np, |k| {
        let copula = flat_copula(n, rho_sq_grid[k / np]);
        run_hedge(paths, k % np, base, payoff, &copula, rule)
    });
    let mut it = jobs.into_iter();
    rho_sq_grid
        .iter()
        .map(|&rho_sq| {
            let ledgers = it.by_ref().take(np).collect::<Result<Vec<_>>>()?;
            Ok(CandidateLedgers { rho_sq, ledgers })
        })
        .collect()
}

/// Empirical break-even correlation per rolling window.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakevenSeries {
    /// Time at the end of each window.
    pub times: Vec<f64>,
    pub values: Vec<Option<f64>>,
    /// Windows without a sign change of the P&L across the grid.
    pub missing: usize,
}

/// For each window, the flat `ρ²` at which the path-averaged window P&L
/// crosses zero, by linear interpolation between grid points. The family
/// must be sorted by `ρ²`.
pub fn empirical_breakeven(family: &[CandidateLedgers], window: usize) -> Result<BreakevenSeries> {
    if family.len() < 2 {
        return domain("empirical break-even needs at least two candidate correlations");
    }
    if family.windows(2).any(|w| !(w[1].rho_sq > w[0].rho_sq)) {
        return domain("candidate correlations must increase strictly");
    }
    let first = family[0]
        .ledgers
        .first()
        .ok_or_else(|| Error::Domain("no ledgers".into()))?;
    let steps = first.increments.len();
    if window == 0 || window > steps {
        return domain(format!("window {window} outside 1..={steps}"));
    }
    let curves: Vec<Vec<f64>> = family
        .iter()
        .map(|c| {
            let mut acc = vec![0.0; steps + 1 - window];
            for l in &c.ledgers {
                for (a, v) in acc.iter_mut().zip(l.window_pnl(window)) {
                    *a += v;
                }
            }
            let k = c.ledgers.len().max(1) as f64;
            acc.iter().map(|a| a / k).collect()
        })
        .collect();
    let mut values = Vec::with_capacity(steps + 1 - window);
    for w in 0..steps + 1 - window {
        let pnl: Vec<f64> = curves.iter().map(|c| c[w]).collect();
        values.push(zero_crossing(family, &pnl));
    }
    Ok(BreakevenSeries {
        times: first.times[window..].to_vec(),
        missing: values.iter().filter(|v| v.is_none()).count(),
        values,
    })
}

fn zero_crossing(family: &[CandidateLedgers], pnl: &[f64]) -> Option<f64> {
    for k in 0..pnl.len() {
        if pnl[k] == 0.0 {
            return Some(family[k].rho_sq);
        }
        if k + 1 < pnl.len() && pnl[k].signum() != pnl[k + 1].signum() && pnl[k + 1] != 0.0 {
            let (a, b) = (family[k].rho_sq, family[k + 1].rho_sq);
            return Some(a - pnl[k] * (b - a) / (pnl[k + 1] - pnl[k]));
        }
    }
    None
}

/// Weighted average of the current and `lookback` previous values with
/// weights `exp(−λk)`, renormalized over the values present.
pub fn smooth_breakeven(series: &[Option<f64>], lambda: f64, lookback: usize) -> Vec<Option<f64>> {
    (0..series.len())
        .map(|t| {
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..=lookback.min(t) {
                if let Some(v) = series[t - k] {
                    let w = (-lambda * k as f64).exp();
                    num += w * v;
                    den += w;
                }
            }
            (den > 0.0).then(|| num / den)
        })
        .collect()
}

// --- scenario studies --------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SpreadVol,
    Intensity,
    BetaFactor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Core,
    Up,
    Down,
}

/// Per-name values of one parameter for the ten-name skew study.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTable {
    pub kind: ScenarioKind,
    pub variant: Variant,
    pub values: Vec<f64>,
}

impl ScenarioTable {
    pub fn preset(kind: ScenarioKind, variant: Variant) -> Self {
        let pairs = |v: [f64; 5]| v.iter().flat_map(|&x| [x, x]).collect::<Vec<f64>>();
        let values = match (kind, variant) {
            (ScenarioKind::SpreadVol, Variant::Core) => vec![0.5; 10],
            (ScenarioKind::SpreadVol, Variant::Up) => pairs([0.22, 0.33, 0.50, 0.75, 1.13]),
            (ScenarioKind::SpreadVol, Variant::Down) => pairs([1.13, 0.75, 0.50, 0.33, 0.22]),
            (ScenarioKind::Intensity, Variant::Core) => vec![0.05; 10],
            (ScenarioKind::Intensity, Variant::Up) => pairs([0.02, 0.03, 0.05, 0.08, 0.11]),
            (ScenarioKind::Intensity, Variant::Down) => pairs([0.11, 0.08, 0.05, 0.03, 0.02]),
            (ScenarioKind::BetaFactor, Variant::Core) => vec![0.5; 10],
            (ScenarioKind::BetaFactor, Variant::Up) => pairs([0.22, 0.33, 0.50, 0.75, 0.99]),
            (ScenarioKind::BetaFactor, Variant::Down) => pairs([0.99, 0.75, 0.50, 0.33, 0.22]),
        };
        Self { kind, variant, values }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return domain("scenario values must be positive");
        }
        if self.kind == ScenarioKind::BetaFactor && self.values.iter().any(|v| *v > 1.0) {
            return domain("beta factors must not exceed one");
        }
        if self.variant == Variant::Core && self.values.windows(2).any(|w| w[0] != w[1]) {
            return domain("core scenario must be constant across names");
        }
        Ok(())
    }
}

/// Rule used by the scenario studies; break-even correlations agree with
/// the default panel rule to about 1e−7.
pub fn study_rule() -> QuadratureRule {
    QuadratureRule::gauss_hermite(32).expect("valid node count")
}

/// Constant `ξ ≡ 1`, so `β_i = σ̄_i` at all times.
pub fn constant_xi() -> Xi {
    Xi::Table {
        knots: vec![0.0],
        values: vec![1.0],
    }
}

/// Average of the instantaneous flat break-even correlation over the grid
/// times of each path (every `stride`-th time), then over paths.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAverage {
    pub mean: Option<f64>,
    /// Instants without a root.
    pub missing: usize,
    pub solved: usize,
}

/// Instantaneous break-even of an FpTD along simulated paths.
pub fn path_average_breakeven(
    order: usize,
    paths: &PathSet,
    base: &MarketState,
    sigma_bar: &[f64],
    spread_corr: &DMatrix<f64>,
    stride: usize,
    rule: &QuadratureRule,
) -> Result<PathAverage> {
    if stride == 0 {
        return domain("stride must be positive");
    }
    let per_path = map_indexed(paths.n_paths, |p| -> Result<(f64, usize, usize)> {
        let mut guess = None;
        let (mut sum, mut solved, mut missing) = (0.0, 0, 0);
        for m in (0..paths.n_times()).step_by(stride) {
            let market = base.with_survival(paths.at(p, m).to_vec())?;
            match solve_breakeven_flat_near(order, &market, sigma_bar, spread_corr, Some(rule), guess) {
                Ok(s) => {
                    sum += s.rho_sq;
                    solved += 1;
                    guess = Some(s.rho_sq);
                }
                Err(Error::NoSolution(_)) => missing += 1,
                Err(e) => return Err(e),
            }
        }
        Ok((if solved > 0 { sum / solved as f64 } else { f64::NAN }, solved, missing))
    });
    let (mut total, mut used, mut solved, mut missing) = (0.0, 0, 0, 0);
    for r in per_path {
        let (avg, s, m) = r?;
        solved += s;
        missing += m;
        if s > 0 {
            total += avg;
            used += 1;
        }
    }
    Ok(PathAverage {
        mean: (used > 0).then(|| total / used as f64),
        missing,
        solved,
    })
}

/// Four-name study: names 1–2 and 3–4 form two blocks with their own spread
/// correlation and intensity, independent across blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FourNameStudy {
    pub sigma_bar: f64,
    pub rho_12: f64,
    pub rho_34: f64,
    pub intensities: Vec<f64>,
    pub orders: Vec<usize>,
    pub maturity: f64,
    pub recovery: f64,
    pub steps: usize,
    pub dt: f64,
    pub n_paths: usize,
    pub stride: usize,
    pub seed: u64,
}

impl Default for FourNameStudy {
    fn default() -> Self {
        Self {
            sigma_bar: 0.5,
            rho_12: 0.3,
            rho_34: 0.7,
            intensities: vec![0.001, 0.01, 0.05, 0.30],
            orders: vec![1, 2, 3],
            maturity: 5.0,
            recovery: 0.4,
            steps: 180,
            dt: 1.0 / 365.0,
            n_paths: 100,
            stride: 1,
            seed: 20_090_601,
        }
    }
}

/// Break-even correlations of one FpTD order: `cells[row][col]` with rows
/// indexed by the intensity of names 3–4 and columns by that of names 1–2.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakevenGrid {
    pub order: usize,
    pub intensities: Vec<f64>,
    pub cells: Vec<Vec<Option<f64>>>,
    pub missing: Vec<Vec<usize>>,
}

pub fn block_correlation(rho_12: f64, rho_34: f64) -> DMatrix<f64> {
    let mut m = DMatrix::identity(4, 4);
    m[(0, 1)] = rho_12;
    m[(1, 0)] = rho_12;
    m[(2, 3)] = rho_34;
    m[(3, 2)] = rho_34;
    m
}

pub fn run_four_name_study(study: &FourNameStudy, rule: Option<&QuadratureRule>) -> Result<Vec<BreakevenGrid>> {
    let rule = rule.cloned().unwrap_or_else(study_rule);
    let k = study.intensities.len();
    if k == 0 || study.orders.iter().any(|&p| p == 0 || p > 4) {
        return domain("need intensities and orders within 1..=4");
    }
    let corr = block_correlation(study.rho_12, study.rho_34);
    let sigma = vec![study.sigma_bar; 4];
    let spec = DynamicsSpec::new(sigma.clone(), constant_xi(), corr.clone());
    let grid = uniform_grid(0.0, study.dt, study.steps);
    let mut out: Vec<BreakevenGrid> = study
        .orders
        .iter()
        .map(|&order| BreakevenGrid {
            order,
            intensities: study.intensities.clone(),
            cells: vec![vec![None; k]; k],
            missing: vec![vec![0; k]; k],
        })
        .collect();
    for row in 0..k {
        for col in 0..k {
            let (l12, l34) = (study.intensities[col], study.intensities[row]);
            let base = MarketState::from_hazards(&[l12, l12, l34, l34], study.recovery, study.maturity)?;
            let seed = study.seed.wrapping_add((row * k + col) as u64);
            let paths = simulate_exact(&spec, &base, &grid, study.n_paths, seed)?;
            for g in out.iter_mut() {
                let avg = path_average_breakeven(g.order, &paths, &base, &sigma, &corr, study.stride, &rule)?;
                g.cells[row][col] = avg.mean;
                g.missing[row][col] = avg.missing;
            }
        }
    }
    Ok(out)
}

/// Ten-name study on a single trajectory: per-order break-even correlation
/// and beta factor `√ρ²_BE`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewStudy {
    pub spread_vol: ScenarioTable,
    pub intensity: ScenarioTable,
    pub beta_factor: ScenarioTable,
    pub maturity: f64,
    pub recovery: f64,
    pub steps: usize,
    pub dt: f64,
    pub stride: usize,
    pub seed: u64,
}

impl SkewStudy {
    pub fn core() -> Self {
        Self {
            spread_vol: ScenarioTable::preset(ScenarioKind::SpreadVol, Variant::Core),
            intensity: ScenarioTable::preset(ScenarioKind::Intensity, Variant::Core),
            beta_factor: ScenarioTable::preset(ScenarioKind::BetaFactor, Variant::Core),
            maturity: 5.0,
            recovery: 0.4,
            steps: 180,
            dt: 1.0 / 365.0,
            stride: 1,
            seed: 20_090_602,
        }
    }

    /// Core study with one parameter replaced.
    pub fn with(mut self, table: ScenarioTable) -> Self {
        match table.kind {
            ScenarioKind::SpreadVol => self.spread_vol = table,
            ScenarioKind::Intensity => self.intensity = table,
            ScenarioKind::BetaFactor => self.beta_factor = table,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewCurve {
    pub orders: Vec<usize>,
    pub rho_sq: Vec<Option<f64>>,
    pub beta: Vec<Option<f64>>,
    pub missing: Vec<usize>,
}

/// Spread correlation `ρ_ij = ρ_i^S ρ_j^S` from per-name beta factors.
pub fn one_factor_correlation(beta: &[f64]) -> DMatrix<f64> {
    let n = beta.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { beta[i] * beta[j] })
}

pub fn run_skew_study(study: &SkewStudy, rule: Option<&QuadratureRule>) -> Result<SkewCurve> {
    for t in [&study.spread_vol, &study.intensity, &study.beta_factor] {
        t.validate()?;
    }
    let n = study.spread_vol.values.len();
    if study.intensity.values.len() != n || study.beta_factor.values.len() != n {
        return Err(Error::Shape("scenario tables disagree on the number of names".into()));
    }
    let rule = rule.cloned().unwrap_or_else(study_rule);
    let corr = one_factor_correlation(&study.beta_factor.values);
    let sigma = study.spread_vol.values.clone();
    let spec = DynamicsSpec::new(sigma.clone(), constant_xi(), corr.clone());
    let base = MarketState::from_hazards(&study.intensity.values, study.recovery, study.maturity)?;
    let grid = uniform_grid(0.0, study.dt, study.steps);
    let paths = simulate_exact(&spec, &base, &grid, 1, study.seed)?;
    let orders: Vec<usize> = (1..n).collect();
    let results = map_indexed(orders.len(), |k| {
        // one path, so parallelize over orders instead
        let mut guess = None;
        let (mut sum, mut solved, mut missing) = (0.0, 0usize, 0usize);
        for m in (0..paths.n_times()).step_by(study.stride.max(1)) {
            let market = base.with_survival(paths.at(0, m).to_vec())?;
            match solve_breakeven_flat_near(orders[k], &market, &sigma, &corr, Some(&rule), guess) {
                Ok(s) => {
                    sum += s.rho_sq;
                    solved += 1;
                    guess = Some(s.rho_sq);
                }
                Err(Error::NoSolution(_)) => missing += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(((solved > 0).then(|| sum / solved as f64), missing))
    });
    let mut curve = SkewCurve {
        orders,
        rho_sq: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        missing: Vec::with_capacity(n),
    };
    for r in results {
        let (v, miss) = r?;
        curve.rho_sq.push(v);
        curve.beta.push(v.map(|x| x.max(0.0).sqrt()));
        curve.missing.push(miss);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate_exact;

    #[test]
    fn smoothing_examples() {
        let flat = vec![Some(0.3); 6];
        for v in smooth_breakeven(&flat, 0.3, 3) {
            assert!((v.unwrap() - 0.3).abs() < 1e-15);
        }
        let spike = vec![Some(0.0), Some(0.0), Some(0.0), Some(1.0)];
        let w: f64 = (0..4).map(|k| (-0.3 * k as f64).exp()).sum();
        assert!((smooth_breakeven(&spike, 0.3, 3)[3].unwrap() - 1.0 / w).abs() < 1e-15);
        let gaps = vec![None, None, None, None, Some(0.2)];
        let s = smooth_breakeven(&gaps, 0.3, 3);
        assert_eq!(s[3], None);
        assert_eq!(s[4], Some(0.2));
    }

    #[test]
    fn constant_paths_give_zero_pnl() {
        let base = MarketState::from_survival(vec![0.9, 0.8, 0.95], 0.4, 5.0).unwrap();
        let spec = DynamicsSpec::new(vec![0.0; 3], constant_xi(), DMatrix::identity(3, 3));
        let paths = simulate_exact(&spec, &base, &uniform_grid(0.0, 0.01, 10), 2, 3).unwrap();
        let payoff = BasketPayoff::fptd(3, 1, 0.4).unwrap();
        let l = run_hedge(&paths, 0, &base, &payoff, &CopulaSpec::gauss_flat(3, 0.4), None).unwrap();
        assert!(l.cumulative.iter().all(|&c| c == 0.0));
        assert!(l.self_financing_error < 1e-14);
    }

    #[test]
    fn crossing_and_missing_windows() {
        let family: Vec<CandidateLedgers> = [0.0, 0.5, 1.0]
            .iter()
            .zip([[1.0, 1.0], [-1.0, 2.0], [-3.0, 3.0]])
            .map(|(&rho_sq, inc)| CandidateLedgers {
                rho_sq,
                ledgers: vec![HedgeLedger {
                    times: vec![0.0, 1.0, 2.0],
                    values: vec![],
                    hedges: vec![],
                    cds: vec![],
                    cash: vec![],
                    increments: inc.to_vec(),
                    cumulative: vec![],
                    self_financing_error: 0.0,
                }],
            })
            .collect();
        let s = empirical_breakeven(&family, 1).unwrap();
        assert!((s.values[0].unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(s.values[1], None);
        assert_eq!(s.missing, 1);
    }

    #[test]
    fn presets_are_valid() {
        for kind in [ScenarioKind::SpreadVol, ScenarioKind::Intensity, ScenarioKind::BetaFactor] {
            for variant in [Variant::Core, Variant::Up, Variant::Down] {
                let t = ScenarioTable::preset(kind, variant);
                assert_eq!(t.values.len(), 10);
                t.validate().unwrap();
            }
        }
    }
}
