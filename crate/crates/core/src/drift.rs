//! Drift of a delta-hedged basket position, break-even correlations and the
//! break-even correlation matrix.
//!
//! With `D_ij(x) = ∂²F/∂p_i∂p_j` the mixed second difference of the payoff
//! at factor value `x`, the drift per unit time of a position hedged with
//! the individual survival probabilities is
//!
//! ```text
//! ½ Σ_{i<j} ∫ D_ij(x) [2σ_iσ_jρ_ij ∂_Q p_i ∂_Q p_j f_X − σ_i² ∂_x p_j χ_i − σ_j² ∂_x p_i χ_j] dx + η
//! ```
//!
//! with `η = Σ_i ½σ_i² [G_i χ_i]` at the ends of the factor support and
//! `G_i = ∂F/∂p_i`. Under a Gaussian copula the bracket collapses to
//! `[2β_iβ_jρ_ij − ρ_i'ρ_j(β_i² + β_j²)] φ(d_i)φ(d_j)φ(x)/√(1−|ρ_i|²)√(1−|ρ_j|²)`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::copula::{default_rule, numeric_chi, numeric_chi_on_nodes, ConditionalKernel, ConditionalTable};
use crate::error::{domain, Error, Result};
use crate::linalg::{sorted_eigen, validate_correlation_matrix};
use crate::model::{BasketPayoff, BreakevenSolution, CopulaSpec, DriftReport, MarketState};
use crate::normal;
use crate::pricer::{count_distribution, fptd_payoff, NodePayoff};
use crate::quadrature::QuadratureRule;
use crate::roots::{scan_and_solve, RootOptions};

/// Search interval for flat break-even correlations `ρ²`.
pub const BREAKEVEN_RHO_SQ_MIN: f64 = 1e-6;
pub const BREAKEVEN_RHO_SQ_MAX: f64 = 0.99;

/// Eigenvalues below this fraction of the largest one count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

fn check_corr(m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Shape(format!(
            "spread correlation is {}x{} for {n} names",
            m.nrows(),
            m.ncols()
        )));
    }
    let d = validate_correlation_matrix(m)?;
    if !d.accepted {
        return domain(format!(
            "spread correlation rejected (symmetric {}, unit diagonal {}, min eigenvalue {:e})",
            d.symmetric, d.unit_diagonal, d.min_eigenvalue
        ));
    }
    Ok(())
}

fn check_vols(v: &[f64], n: usize, what: &str) -> Result<()> {
    if v.len() != n {
        return Err(Error::Shape(format!("{} {what} values for {n} names", v.len())));
    }
    if let Some(x) = v.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return domain(format!("{what} {x} must be finite and non-negative"));
    }
    Ok(())
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Drift for any one-factor kernel, from survival-probability volatilities
/// `σ_i`. Kernels without a closed-form `χ` fall back to numerical
/// integration and the report is flagged.
pub fn drift_general(
    payoff: &BasketPayoff,
    market: &MarketState,
    kernel: &dyn ConditionalKernel,
    sigmas: &[f64],
    spread_corr: &DMatrix<f64>,
    rule: Option<&QuadratureRule>,
) -> Result<DriftReport> {
    let n = market.len();
    if payoff.len() != n || kernel.name_count() != n {
        return Err(Error::Shape(format!(
            "payoff on {} names, kernel on {}, market has {n}",
            payoff.len(),
            kernel.name_count()
        )));
    }
    check_vols(sigmas, n, "volatility")?;
    check_corr(spread_corr, n)?;
    let owned;
    let rule = match rule {
        Some(r) => r,
        None => {
            owned = kernel.rule()?;
            &owned
        }
    };
    if rule.dim() != 1 {
        return domain("drift_general needs a one-dimensional rule");
    }
    let q = market.survival();
    let dead = market.defaulted();
    for i in 0..n {
        if !dead[i] {
            kernel.check(q[i])?;
        }
    }
    let xs = rule.nodes();
    let m = xs.len();
    let node = NodePayoff::new(payoff)?;

    let mut p = vec![1.0; m * n];
    let mut dp = vec![0.0; m * n];
    let mut dpx = vec![0.0; m * n];
    let mut cf = vec![0.0; m * n];
    let mut numeric = false;
    for i in 0..n {
        if dead[i] {
            continue;
        }
        let closed = kernel.chi_over_density(i, q[i], xs[0]).is_some();
        let chi_numeric = (!closed).then(|| numeric_chi_on_nodes(kernel, i, q[i], xs));
        numeric |= !closed;
        for (k, &x) in xs.iter().enumerate() {
            p[k * n + i] = kernel.p(i, q[i], x);
            dp[k * n + i] = kernel.dp_dq(i, q[i], x);
            dpx[k * n + i] = kernel.dp_dx(i, q[i], x);
            cf[k * n + i] = match &chi_numeric {
                None => kernel.chi_over_density(i, q[i], x).expect("closed form"),
                Some(c) => {
                    let f = kernel.density(x);
                    if f > 0.0 {
                        c[k] / f
                    } else {
                        0.0
                    }
                }
            };
        }
    }

    let pair_list: Vec<(usize, usize)> = pairs(n).collect();
    let mut acc = vec![0.0; pair_list.len()];
    let mut scratch = Vec::new();
    for k in 0..m {
        let w = rule.weights()[k];
        let row = &p[k * n..(k + 1) * n];
        let d2 = node.second(row, &mut scratch);
        let (dq, dx, c) = (&dp[k * n..], &dpx[k * n..], &cf[k * n..]);
        for (slot, &(i, j)) in pair_list.iter().enumerate() {
            let bracket = 2.0 * sigmas[i] * sigmas[j] * spread_corr[(i, j)] * dq[i] * dq[j]
                - sigmas[i] * sigmas[i] * dx[j] * c[i]
                - sigmas[j] * sigmas[j] * dx[i] * c[j];
            acc[slot] += w * d2[slot] * bracket;
        }
        for v in acc.iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { node: k, value: *v });
            }
        }
    }
    let pair_terms: BTreeMap<(usize, usize), f64> = pair_list
        .iter()
        .zip(&acc)
        .map(|(&ij, &v)| (ij, 0.5 * v))
        .collect();

    // χ vanishes at both ends of the support for the closed-form kernels
    let eta = if numeric {
        let (_, hi) = kernel.support();
        let row: Vec<f64> = (0..n)
            .map(|i| if dead[i] { 1.0 } else { kernel.p(i, q[i], hi) })
            .collect();
        let grad = node.gradient(&row, &mut scratch);
        (0..n)
            .filter(|&i| !dead[i])
            .map(|i| 0.5 * sigmas[i] * sigmas[i] * grad[i] * numeric_chi(kernel, i, q[i], hi))
            .sum()
    } else {
        0.0
    };
    let mut report = DriftReport::from_pairs(pair_terms, eta);
    report.numeric_chi = numeric;
    Ok(report)
}

fn gaussian_setup(
    market: &MarketState,
    copula: &CopulaSpec,
    betas: &[f64],
    spread_corr: &DMatrix<f64>,
    rule: Option<&QuadratureRule>,
) -> Result<(Vec<Vec<f64>>, Vec<f64>, ConditionalTable)> {
    let n = market.len();
    copula.validate(n)?;
    let loadings = copula
        .gaussian_loadings()
        .ok_or_else(|| Error::Unsupported("Gaussian drift needs a Gaussian copula".into()))?;
    check_vols(betas, n, "beta")?;
    check_corr(spread_corr, n)?;
    let table = match rule {
        Some(r) => ConditionalTable::build(copula, market, r)?,
        None => ConditionalTable::build(copula, market, &default_rule(copula)?)?,
    };
    // φ(Φ⁻¹(Q_i)), zero for defaulted names whose derivatives vanish anyway
    let phi_s = market
        .survival()
        .iter()
        .zip(market.defaulted())
        .map(|(&q, &d)| if d { 0.0 } else { normal::pdf(normal::inv_cdf(q)) })
        .collect();
    Ok((loadings, phi_s, table))
}

fn bracket(loadings: &[Vec<f64>], betas: &[f64], corr: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let rr: f64 = loadings[i].iter().zip(&loadings[j]).map(|(a, b)| a * b).sum();
    2.0 * betas[i] * betas[j] * corr[(i, j)] - rr * (betas[i] * betas[i] + betas[j] * betas[j])
}

/// Drift under a one- or multi-factor Gaussian copula from normalized
/// volatilities `β_i = σ_i / φ(Φ⁻¹(Q_i))`.
pub fn drift_gauss(
    payoff: &BasketPayoff,
    market: &MarketState,
    copula: &CopulaSpec,
    betas: &[f64],
    spread_corr: &DMatrix<f64>,
    rule: Option<&QuadratureRule>,
) -> Result<DriftReport> {
    let n = market.len();
    if payoff.len() != n {
        return Err(Error::Shape(format!("payoff on {} names, market has {n}", payoff.len())));
    }
    let (loadings, phi_s, table) = gaussian_setup(market, copula, betas, spread_corr, rule)?;
    let node = NodePayoff::new(payoff)?;
    let pair_list: Vec<(usize, usize)> = pairs(n).collect();
    let mut acc = vec![0.0; pair_list.len()];
    let mut scratch = Vec::new();
    for k in 0..table.nodes() {
        let w = table.weights[k];
        let d2 = node.second(table.row(k), &mut scratch);
        let dq = table.dp_row(k);
        for (slot, &(i, j)) in pair_list.iter().enumerate() {
            acc[slot] += w * d2[slot] * dq[i] * dq[j];
        }
    }
    let pair_terms = pair_list
        .iter()
        .zip(&acc)
        .map(|(&(i, j), &a)| {
            let b = bracket(&loadings, betas, spread_corr, i, j);
            ((i, j), 0.5 * b * phi_s[i] * phi_s[j] * a)
        })
        .collect();
    Ok(DriftReport::from_pairs(pair_terms, 0.0))
}

/// Drift of a first-p-to-default basket through the weights
/// `A*_ij = ∫ P(exactly p−1 defaults among the other names | x)
/// φ(d_i)φ(d_j)φ(x) / (√(1−|ρ_i|²)√(1−|ρ_j|²)) dx`.
pub fn drift_fptd(
    order: usize,
    market: &MarketState,
    copula: &CopulaSpec,
    betas: &[f64],
    spread_corr: &DMatrix<f64>,
    rule: Option<&QuadratureRule>,
) -> Result<DriftReport> {
    let n = market.len();
    let payoff = fptd_payoff(order, market)?;
    let recovery = match payoff.kind() {
        crate::model::PayoffKind::FpTD { recovery, .. } => recovery,
        _ => unreachable!("fptd payoff"),
    };
    let (loadings, phi_s, table) = gaussian_setup(market, copula, betas, spread_corr, rule)?;
    let pair_list: Vec<(usize, usize)> = pairs(n).collect();
    let mut a_star = vec![0.0; pair_list.len()];
    for k in 0..table.nodes() {
        let w = table.weights[k];
        let row = table.row(k);
        let dq = table.dp_row(k);
        for (slot, &(i, j)) in pair_list.iter().enumerate() {
            let others = count_distribution(row, &[i, j]);
            let exact = others.get(order - 1).copied().unwrap_or(0.0);
            a_star[slot] += w * exact * dq[i] * dq[j];
        }
    }
    let mut terms = BTreeMap::new();
    let mut stars = BTreeMap::new();
    for (slot, &(i, j)) in pair_list.iter().enumerate() {
        let a = a_star[slot] * phi_s[i] * phi_s[j];
        let b = bracket(&loadings, betas, spread_corr, i, j);
        terms.insert((i, j), -0.5 * (1.0 - recovery) * b * a);
        stars.insert((i, j), a);
    }
    let mut report = DriftReport::from_pairs(terms, 0.0);
    report.a_star = Some(stars);
    Ok(report)
}

/// Flat one-factor copula with `ρ_i = √ρ²` for every name.
pub fn flat_copula(n: usize, rho_sq: f64) -> CopulaSpec {
    CopulaSpec::gauss_flat(n, rho_sq.max(0.0).sqrt())
}

/// Scan points used to bracket the break-even correlation.
pub fn breakeven_grid() -> Vec<f64> {
    let mut g = vec![BREAKEVEN_RHO_SQ_MIN, 0.01, 0.03];
    g.extend((1..=19).map(|k| 0.05 * k as f64));
    g.push(BREAKEVEN_RHO_SQ_MAX);
    g
}

/// Flat pricing correlation `ρ²` at which the FpTD drift vanishes.
pub fn solve_breakeven_flat(
    order: usize,
    market: &MarketState,
    betas: &[f64],
    spread_corr: &DMatrix<f64>,
    rule: Option<&QuadratureRule>,
) -> Result<BreakevenSolution> {
    solve_breakeven_flat_near(order, market, betas, spread_corr, rule, None)
}

/// As [`solve_breakeven_flat`], first trying a narrow bracket around
/// `guess` (for example the previous root along a path).
pub fn solve_breakeven_flat_near(
    order: usize,
    market: &MarketState,
    betas: &[f64],
    spread_corr: &DMatrix<f64>,
    rule: Option<&QuadratureRule>,
    guess: Option<f64>,
) -> Result<BreakevenSolution> {
    let n = market.len();
    if order >= n {
        // min(N, n) = N is linear in the default indicators: zero drift everywhere
        return Err(Error::NoSolution(format!(
            "a first-{order}-to-default on {n} names has no correlation exposure"
        )));
    }
    let owned;
    let rule = match rule {
        Some(r) => r,
        None => {
            owned = QuadratureRule::default_gaussian();
            &owned
        }
    };
    let drift = |rho_sq: f64| -> Result<f64> {
        Ok(drift_fptd(order, market, &flat_copula(n, rho_sq), betas, spread_corr, Some(rule))?.total)
    };
    let opts = RootOptions::default();
    let root = match guess {
        Some(g) if g > BREAKEVEN_RHO_SQ_MIN && g < BREAKEVEN_RHO_SQ_MAX => {
            // narrowest bracket first, then wider ones, then the full scan
            let mut found = None;
            for w in [0.005, 0.02, 0.08] {
                let grid = [(g - w).max(BREAKEVEN_RHO_SQ_MIN), (g + w).min(BREAKEVEN_RHO_SQ_MAX)];
                if let Ok(r) = scan_and_solve(drift, &grid, opts) {
                    found = Some(r);
                    break;
                }
            }
            match found {
                Some(r) => r,
                None => scan_and_solve(drift, &breakeven_grid(), opts)?,
            }
        }
        _ => scan_and_solve(drift, &breakeven_grid(), opts)?,
    };
    Ok(BreakevenSolution {
        rho_sq: root.x,
        drift_at_root: root.fx,
        iterations: root.iterations,
        evaluations: root.evaluations,
        bracket: root.bracket,
    })
}

/// `ρ²_BE = 2 Σ_{i<j} β_iβ_jρ_ij / Σ_{i<j} (β_i² + β_j²)`, the break-even
/// correlation of a basket whose names all share the same survival
/// probability.
pub fn breakeven_weighted_closed_form(betas: &[f64], spread_corr: &DMatrix<f64>) -> Result<f64> {
    let n = betas.len();
    check_vols(betas, n, "beta")?;
    check_corr(spread_corr, n)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, j) in pairs(n) {
        num += betas[i] * betas[j] * spread_corr[(i, j)];
        den += betas[i] * betas[i] + betas[j] * betas[j];
    }
    if !(den > 0.0) {
        return domain("break-even weights undefined: all betas are zero");
    }
    Ok(2.0 * num / den)
}

/// Pricing correlation matrix implied by the spread dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakevenMatrix {
    /// `[ρ_ij 2σ̄_iσ̄_j / (σ̄_i² + σ̄_j²)]`.
    pub sigma_tilde: DMatrix<f64>,
    /// Rank-p loadings (one row per name), when requested.
    pub factor_loadings: Option<DMatrix<f64>>,
    /// Numerical rank of `sigma_tilde`.
    pub rank_p: usize,
    /// Largest off-diagonal error of the loadings.
    pub residual: f64,
    /// Eigenvalues of `sigma_tilde`, descending.
    pub eigenvalues: Vec<f64>,
}

pub fn sigma_tilde(sigma_bar: &[f64], spread_corr: &DMatrix<f64>) -> DMatrix<f64> {
    let n = sigma_bar.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            let (a, b) = (sigma_bar[i], sigma_bar[j]);
            spread_corr[(i, j)] * 2.0 * a * b / (a * a + b * b)
        }
    })
}

pub fn build_breakeven_matrix(
    sigma_bar: &[f64],
    spread_corr: &DMatrix<f64>,
    target_rank: Option<usize>,
) -> Result<BreakevenMatrix> {
    let n = sigma_bar.len();
    if let Some(s) = sigma_bar.iter().find(|s| !(**s > 0.0) || !s.is_finite()) {
        return domain(format!("sigma_bar {s} must be positive"));
    }
    check_corr(spread_corr, n)?;
    let st = sigma_tilde(sigma_bar, spread_corr);
    let diag = validate_correlation_matrix(&st)?;
    if !diag.accepted {
        return Err(Error::Consistency(format!(
            "break-even matrix is not positive semi-definite (min eigenvalue {:e})",
            diag.min_eigenvalue
        )));
    }
    let (values, _) = sorted_eigen(&st);
    let top = values.first().copied().unwrap_or(0.0);
    let rank_p = values.iter().filter(|&&v| v > RANK_TOLERANCE * top).count();
    let (factor_loadings, residual) = match target_rank {
        None => (None, 0.0),
        Some(p) => {
            if p == 0 || p > n {
                return domain(format!("target rank {p} outside 1..={n}"));
            }
            let (l, res) = fit_loadings(&st, p);
            if let Some(i) = (0..n).find(|&i| l.row(i).norm() >= 1.0) {
                return domain(format!(
                    "no rank-{p} loadings with norm below one (name {i} needs {})",
                    l.row(i).norm()
                ));
            }
            (Some(l), res)
        }
    };
    Ok(BreakevenMatrix {
        sigma_tilde: st,
        factor_loadings,
        rank_p,
        residual,
        eigenvalues: values,
    })
}

/// Principal-axis factoring: loadings `L` (n × p) with `L Lᵀ` matching the
/// off-diagonal part of `m`. Returns the loadings and the largest
/// off-diagonal error.
fn fit_loadings(m: &DMatrix<f64>, p: usize) -> (DMatrix<f64>, f64) {
    let n = m.nrows();
    // start from the squared multiple correlation bound: largest |m_ij|
    let mut h: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).fold(0.0, f64::max))
        .collect();
    let mut loadings = DMatrix::zeros(n, p);
    let mut residual = f64::INFINITY;
    for _ in 0..20_000 {
        let mut reduced = m.clone();
        for i in 0..n {
            reduced[(i, i)] = h[i];
        }
        let (values, vectors) = sorted_eigen(&reduced);
        for c in 0..p {
            let s = values[c].max(0.0).sqrt();
            for i in 0..n {
                loadings[(i, c)] = vectors[(i, c)] * s;
            }
        }
        residual = off_diagonal_error(m, &loadings);
        let next: Vec<f64> = (0..n).map(|i| loadings.row(i).norm_squared()).collect();
        let change = next.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        h = next;
        if residual < 1e-13 || change < 1e-16 {
            break;
        }
    }
    // sign convention: each factor column sums to a non-negative number
    for c in 0..p {
        if loadings.column(c).sum() < 0.0 {
            loadings.column_mut(c).neg_mut();
        }
    }
    (loadings, residual)
}

fn off_diagonal_error(m: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    let fit = l * l.transpose();
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max((fit[(i, j)] - m[(i, j)]).abs());
            }
        }
    }
    worst
}

/// Grid for [`check_replication_pde`].
#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    pub q: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeReport {
    pub max_residual: f64,
    /// `(i, j, Q_i, Q_j, x)` where the maximum occurs.
    pub at: (usize, usize, f64, f64, f64),
    pub numeric_chi: bool,
    pub evaluations: usize,
}

pub type VolFn<'a> = &'a dyn Fn(usize, f64) -> f64;
pub type CorrFn<'a> = &'a dyn Fn(usize, usize, f64, f64) -> f64;

/// Largest violation of the replication condition
/// `2σ_iσ_jρ_ij ∂_Q p_i ∂_Q p_j f_X = σ_i² ∂_x p_j χ_i + σ_j² ∂_x p_i χ_j`
/// over every name pair, survival-probability pair and factor value of the
/// grid. Volatilities and spread correlations may depend on `Q`.
pub fn check_replication_pde(
    kernel: &dyn ConditionalKernel,
    vol: VolFn<'_>,
    corr: CorrFn<'_>,
    grid: &PdeGrid,
) -> Result<PdeReport> {
    let n = kernel.name_count();
    if n < 2 {
        return domain("replication check needs at least two names");
    }
    for &q in &grid.q {
        kernel.check(q)?;
    }
    let mut xs = grid.x.clone();
    xs.sort_by(f64::total_cmp);
    let (lo, _) = kernel.support();
    if xs.first().is_some_and(|&x| x < lo) {
        return domain(format!("factor grid starts below the support bound {lo}"));
    }
    let numeric = kernel.chi_over_density(0, grid.q[0], xs[0]).is_none();
    // χ_i(Q, x) for every name, Q and x
    let chi: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|i| {
            grid.q
                .iter()
                .map(|&q| {
                    if numeric {
                        numeric_chi_on_nodes(kernel, i, q, &xs)
                    } else {
                        xs.iter().map(|&x| kernel.chi(i, q, x)).collect()
                    }
                })
                .collect()
        })
        .collect();
    let mut report = PdeReport {
        max_residual: 0.0,
        at: (0, 1, grid.q[0], grid.q[0], xs[0]),
        numeric_chi: numeric,
        evaluations: 0,
    };
    for (i, j) in pairs(n) {
        for (a, &qi) in grid.q.iter().enumerate() {
            for (b, &qj) in grid.q.iter().enumerate() {
                let (si, sj) = (vol(i, qi), vol(j, qj));
                let rho = corr(i, j, qi, qj);
                for (k, &x) in xs.iter().enumerate() {
                    let lhs = 2.0 * si * sj * rho * kernel.dp_dq(i, qi, x) * kernel.dp_dq(j, qj, x)
                        * kernel.density(x);
                    let rhs = si * si * kernel.dp_dx(j, qj, x) * chi[i][a][k]
                        + sj * sj * kernel.dp_dx(i, qi, x) * chi[j][b][k];
                    let r = (lhs - rhs).abs();
                    report.evaluations += 1;
                    if !r.is_finite() {
                        return Err(Error::NonFinite { node: k, value: r });
                    }
                    if r > report.max_residual {
                        report.max_residual = r;
                        report.at = (i, j, qi, qj, x);
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::{ArchimedeanKernel, ClaytonKernel, GaussKernel};

    fn corr2(r: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0])
    }

    fn uniform(n: usize, r: f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { r })
    }

    #[test]
    fn zero_volatility_gives_zero_drift() {
        let m = MarketState::from_survival(vec![0.9, 0.8, 0.95], 0.4, 5.0).unwrap();
        let payoff = BasketPayoff::fptd(3, 1, 0.4).unwrap();
        let k = GaussKernel::new(vec![0.5; 3]).unwrap();
        let r = drift_general(&payoff, &m, &k, &[0.0; 3], &uniform(3, 0.3), None).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn ftd_sign_claims() {
        let m = MarketState::homogeneous(2, 0.9, 0.4, 5.0).unwrap();
        let payoff = BasketPayoff::fptd(2, 1, 0.4).unwrap();
        let k = GaussKernel::new(vec![0.0, 0.0]).unwrap();
        let s = crate::copula::sigma_from_beta(0.5, 0.9).unwrap();
        let r = drift_general(&payoff, &m, &k, &[s, s], &corr2(0.5), None).unwrap();
        assert!(r.total < 0.0);
        let m4 = MarketState::homogeneous(4, 0.9, 0.4, 5.0).unwrap();
        let r = drift_fptd(1, &m4, &CopulaSpec::gauss_flat(4, 0.5f64.sqrt()), &[0.5; 4], &uniform(4, 0.5), None)
            .unwrap();
        assert!(r.total > 0.0);
    }

    #[test]
    fn general_and_gaussian_drifts_agree() {
        let q = vec![0.93, 0.85, 0.97];
        let m = MarketState::from_survival(q.clone(), 0.3, 5.0).unwrap();
        let loadings = vec![0.4, 0.6, 0.2];
        let betas = [0.3, 0.5, 0.4];
        let sigmas: Vec<f64> = betas
            .iter()
            .zip(&q)
            .map(|(&b, &qi)| crate::copula::sigma_from_beta(b, qi).unwrap())
            .collect();
        let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.0, 0.5, 0.1, 0.5, 1.0]);
        let payoff = BasketPayoff::from_fn(3, |d| {
            (d[0] as u8 as f64) * 0.7 + (d[1] && d[2]) as u8 as f64
        })
        .unwrap();
        let k = GaussKernel::new(loadings.clone()).unwrap();
        let a = drift_general(&payoff, &m, &k, &sigmas, &corr, None).unwrap();
        let b = drift_gauss(&payoff, &m, &CopulaSpec::Gauss1F { loadings }, &betas, &corr, None).unwrap();
        assert!((a.total - b.total).abs() < 1e-12, "{} {}", a.total, b.total);
        assert!((a.total - a.pair_terms.values().sum::<f64>()).abs() <= 1e-12 * a.total.abs());
    }

    #[test]
    fn fptd_drift_matches_generic_payoff_route() {
        let m = MarketState::from_survival(vec![0.9, 0.8, 0.95, 0.7], 0.4, 5.0).unwrap();
        let copula = CopulaSpec::Gauss1F {
            loadings: vec![0.3, 0.5, 0.6, 0.2],
        };
        let betas = [0.4, 0.2, 0.5, 0.3];
        let corr = uniform(4, 0.35);
        let a = drift_fptd(2, &m, &copula, &betas, &corr, None).unwrap();
        let payoff = BasketPayoff::fptd(4, 2, 0.4).unwrap().to_generic().unwrap();
        let b = drift_gauss(&payoff, &m, &copula, &betas, &corr, None).unwrap();
        assert!((a.total - b.total).abs() < 1e-12);
        assert!(a.a_star.unwrap().values().all(|&v| v > 0.0));
    }

    #[test]
    fn breakeven_identities() {
        let m = MarketState::homogeneous(2, 0.9, 0.4, 5.0).unwrap();
        let s = solve_breakeven_flat(1, &m, &[0.5, 0.5], &corr2(0.3), None).unwrap();
        assert!((s.rho_sq - 0.3).abs() < 1e-8);
        assert!(s.drift_at_root.abs() < 1e-10);
        let m4 = MarketState::homogeneous(4, 0.95, 0.4, 5.0).unwrap();
        let s = solve_breakeven_flat(2, &m4, &[0.7; 4], &uniform(4, 0.4), None).unwrap();
        assert!((s.rho_sq - 0.4).abs() < 1e-8);
        let cf = breakeven_weighted_closed_form(&[1.0, 2.0], &corr2(0.5)).unwrap();
        assert!((cf - 0.4).abs() < 1e-15);
        let s = solve_breakeven_flat(1, &m, &[1.0, 2.0], &corr2(0.5), None).unwrap();
        assert!((s.rho_sq - 0.4).abs() < 1e-8);
        assert!(breakeven_weighted_closed_form(&[0.0, 0.0], &corr2(0.5)).is_err());
    }

    #[test]
    fn no_solution_is_structured() {
        // zero spread correlation: drift is negative for every positive ρ²
        let m = MarketState::homogeneous(3, 0.9, 0.4, 5.0).unwrap();
        let err = solve_breakeven_flat(1, &m, &[0.5; 3], &uniform(3, 0.0), None).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)));
    }

    #[test]
    fn breakeven_matrix_examples() {
        let corr = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.4, 0.2, 1.0, 0.6, 0.4, 0.6, 1.0]);
        let bm = build_breakeven_matrix(&[0.5; 3], &corr, None).unwrap();
        assert!((bm.sigma_tilde.clone() - corr).abs().max() < 1e-15);
        let bm = build_breakeven_matrix(&[1.0, 2.0], &corr2(1.0), None).unwrap();
        assert!((bm.sigma_tilde[(0, 1)] - 0.8).abs() < 1e-15);
        let l = [0.9, 0.7, -0.5, 0.3];
        let one_factor = DMatrix::from_fn(4, 4, |i, j| if i == j { 1.0 } else { l[i] * l[j] });
        let bm = build_breakeven_matrix(&[0.5; 4], &one_factor, Some(1)).unwrap();
        assert!(bm.residual < 1e-10, "{}", bm.residual);
        let fit = bm.factor_loadings.unwrap();
        for i in 0..4 {
            assert!((fit[(i, 0)] - l[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn pde_residuals() {
        let grid = PdeGrid {
            q: vec![0.1, 0.5, 0.9],
            x: vec![-3.0, -1.0, 0.0, 0.5, 2.0],
        };
        let loadings = vec![0.3, 0.6, 0.8];
        let k = GaussKernel::new(loadings.clone()).unwrap();
        let beta = 0.7;
        let vol = |_: usize, q: f64| crate::copula::sigma_from_beta(beta, q).unwrap();
        let corr = |i: usize, j: usize, _: f64, _: f64| loadings[i] * loadings[j];
        let r = check_replication_pde(&k, &vol, &corr, &grid).unwrap();
        assert!(r.max_residual < 1e-10);

        let theta = 0.8;
        let c = ClaytonKernel::new(theta, 2).unwrap();
        let b = |q: f64| (1.0 - (1.0 - q).powf(theta)).sqrt();
        let vol = |_: usize, q: f64| 0.3 * (1.0 - q) * b(q);
        let corr = |_: usize, _: usize, qi: f64, qj: f64| b(qi) * b(qj);
        let grid = PdeGrid {
            q: vec![0.1, 0.5, 0.9],
            x: vec![0.01, 0.3, 1.0, 2.5, 6.0],
        };
        let r = check_replication_pde(&c, &vol, &corr, &grid).unwrap();
        assert!(r.max_residual < 1e-8, "{}", r.max_residual);

        let a = ArchimedeanKernel::clayton(theta, 2).unwrap();
        let constant = |_: usize, _: usize, _: f64, _: f64| 0.4;
        let r = check_replication_pde(&a, &vol, &constant, &grid).unwrap();
        assert!(r.numeric_chi);
        assert!(r.max_residual > 1e-4, "{}", r.max_residual);
    }
}
