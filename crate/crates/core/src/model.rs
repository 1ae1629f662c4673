//! Market state, copula specifications, payoffs and dynamics parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{domain, Error, Result};
use crate::linalg::validate_correlation_matrix;

/// Largest basket for which a payoff table over all 2ⁿ default vectors is built.
pub const MAX_ENUMERATED_NAMES: usize = 20;

/// Flat hazard rate `h` with `Q = exp(-h (T - t))`.
pub fn hazard_from_survival(q: f64, t: f64, maturity: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("survival probability {q} outside (0, 1)"));
    }
    if !(t < maturity) {
        return domain(format!("valuation time {t} not before maturity {maturity}"));
    }
    Ok(-q.ln() / (maturity - t))
}

pub fn survival_from_hazard(h: f64, t: f64, maturity: f64) -> Result<f64> {
    if !(h >= 0.0) || !h.is_finite() {
        return domain(format!("hazard rate {h} must be finite and non-negative"));
    }
    if !(t < maturity) {
        return domain(format!("valuation time {t} not before maturity {maturity}"));
    }
    Ok((-h * (maturity - t)).exp())
}

/// Survival probabilities of the basket names to a single maturity `T`,
/// observed at valuation time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    names: Vec<String>,
    maturity: f64,
    time: f64,
    survival: Vec<f64>,
    recovery: Vec<f64>,
    defaulted: Vec<bool>,
}

impl MarketState {
    pub fn new(
        names: Vec<String>,
        maturity: f64,
        time: f64,
        survival: Vec<f64>,
        recovery: Vec<f64>,
    ) -> Result<Self> {
        let n = survival.len();
        Self::with_defaults(names, maturity, time, survival, recovery, vec![false; n])
    }

    pub fn with_defaults(
        names: Vec<String>,
        maturity: f64,
        time: f64,
        survival: Vec<f64>,
        recovery: Vec<f64>,
        defaulted: Vec<bool>,
    ) -> Result<Self> {
        let n = survival.len();
        if names.len() != n || recovery.len() != n || defaulted.len() != n {
            return Err(Error::Shape(format!(
                "market vectors disagree: {} names, {} survival, {} recovery, {} default flags",
                names.len(),
                n,
                recovery.len(),
                defaulted.len()
            )));
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return domain(format!("maturity {maturity} must be positive"));
        }
        if !(time >= 0.0 && time < maturity) {
            return domain(format!("valuation time {time} outside [0, {maturity})"));
        }
        for i in 0..n {
            let q = survival[i];
            if defaulted[i] {
                if q != 0.0 {
                    return domain(format!("defaulted name {} must have Q = 0", names[i]));
                }
            } else if !(q > 0.0 && q < 1.0) {
                return domain(format!(
                    "survival probability {q} of {} outside (0, 1)",
                    names[i]
                ));
            }
            let r = recovery[i];
            if !(r >= 0.0 && r < 1.0) {
                return domain(format!("recovery {r} of {} outside [0, 1)", names[i]));
            }
        }
        Ok(Self {
            names,
            maturity,
            time,
            survival,
            recovery,
            defaulted,
        })
    }

    /// Names `N1..Nn` with common recovery, valued at `t = 0`.
    pub fn from_survival(survival: Vec<f64>, recovery: f64, maturity: f64) -> Result<Self> {
        let n = survival.len();
        Self::new(default_names(n), maturity, 0.0, survival, vec![recovery; n])
    }

    /// Survival probabilities from flat hazard rates, valued at `t = 0`.
    pub fn from_hazards(hazards: &[f64], recovery: f64, maturity: f64) -> Result<Self> {
        let survival = hazards
            .iter()
            .map(|&h| survival_from_hazard(h, 0.0, maturity))
            .collect::<Result<Vec<_>>>()?;
        Self::from_survival(survival, recovery, maturity)
    }

    pub fn homogeneous(n: usize, q: f64, recovery: f64, maturity: f64) -> Result<Self> {
        Self::from_survival(vec![q; n], recovery, maturity)
    }

    pub fn len(&self) -> usize {
        self.survival.len()
    }

    pub fn is_empty(&self) -> bool {
        self.survival.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn survival(&self) -> &[f64] {
        &self.survival
    }

    pub fn recovery(&self) -> &[f64] {
        &self.recovery
    }

    pub fn defaulted(&self) -> &[bool] {
        &self.defaulted
    }

    pub fn any_defaulted(&self) -> bool {
        self.defaulted.iter().any(|&d| d)
    }

    /// Common recovery rate, if every name shares one.
    pub fn common_recovery(&self) -> Option<f64> {
        let r = *self.recovery.first()?;
        self.recovery.iter().all(|&x| x == r).then_some(r)
    }

    pub fn hazard(&self, i: usize) -> Result<f64> {
        hazard_from_survival(self.survival[i], self.time, self.maturity)
    }

    /// Same names and recoveries with new survival probabilities.
    pub fn with_survival(&self, survival: Vec<f64>) -> Result<Self> {
        Self::with_defaults(
            self.names.clone(),
            self.maturity,
            self.time,
            survival,
            self.recovery.clone(),
            self.defaulted.clone(),
        )
    }

    pub fn with_time(&self, time: f64) -> Result<Self> {
        Self::with_defaults(
            self.names.clone(),
            self.maturity,
            time,
            self.survival.clone(),
            self.recovery.clone(),
            self.defaulted.clone(),
        )
    }
}

pub(crate) fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("N{i}")).collect()
}

/// Static factor model used for pricing.
#[derive(Debug, Clone, PartialEq)]
pub enum CopulaSpec {
    /// One-factor Gaussian copula with per-name loading `ρ_i`, `|ρ_i| < 1`.
    Gauss1F { loadings: Vec<f64> },
    /// p-factor Gaussian copula with per-name loading vectors of Euclidean
    /// norm below one.
    GaussPF { loadings: Vec<Vec<f64>> },
    /// Clayton copula driven by a Gamma(1/θ, 1) factor.
    Clayton { theta: f64 },
}

impl CopulaSpec {
    pub fn gauss_flat(n: usize, rho: f64) -> Self {
        CopulaSpec::Gauss1F {
            loadings: vec![rho; n],
        }
    }

    /// Checks loadings against the basket size.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            CopulaSpec::Gauss1F { loadings } => {
                if loadings.len() != n {
                    return Err(Error::Shape(format!(
                        "{} loadings for {n} names",
                        loadings.len()
                    )));
                }
                if let Some(r) = loadings.iter().find(|r| !(r.abs() < 1.0)) {
                    return domain(format!("loading {r} must satisfy |rho| < 1"));
                }
            }
            CopulaSpec::GaussPF { loadings } => {
                if loadings.len() != n {
                    return Err(Error::Shape(format!(
                        "{} loading vectors for {n} names",
                        loadings.len()
                    )));
                }
                let p = self.factor_dim();
                if p == 0 {
                    return Err(Error::Shape("empty loading vectors".into()));
                }
                for l in loadings {
                    if l.len() != p {
                        return Err(Error::Shape(format!(
                            "loading vector of length {} in a {p}-factor model",
                            l.len()
                        )));
                    }
                    let norm2: f64 = l.iter().map(|x| x * x).sum();
                    if !(norm2 < 1.0) {
                        return domain(format!("loading vector norm {} >= 1", norm2.sqrt()));
                    }
                }
            }
            CopulaSpec::Clayton { theta } => {
                if !(*theta > 0.0) || !theta.is_finite() {
                    return domain(format!("Clayton theta {theta} must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn factor_dim(&self) -> usize {
        match self {
            CopulaSpec::Gauss1F { .. } | CopulaSpec::Clayton { .. } => 1,
            CopulaSpec::GaussPF { loadings } => loadings.first().map_or(0, Vec::len),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self, CopulaSpec::Clayton { .. })
    }

    /// Loading vectors for either Gaussian family; a one-factor model gives
    /// vectors of length one.
    pub fn gaussian_loadings(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            CopulaSpec::Gauss1F { loadings } => Some(loadings.iter().map(|&r| vec![r]).collect()),
            CopulaSpec::GaussPF { loadings } => Some(loadings.clone()),
            CopulaSpec::Clayton { .. } => None,
        }
    }
}

/// Tag describing how a basket payoff is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PayoffKind {
    /// Arbitrary tabulated payoff.
    Generic,
    /// `min(#defaults, order) (1 - R)`.
    FpTD { order: usize, recovery: f64 },
    /// `1(#defaults <= order) (1 - R)`.
    StopLoss { order: usize, recovery: f64 },
    /// Pays one if any underlying finishes in the money.
    WorstOfDigital,
}

/// Payoff `ψ(δ₁,…,δₙ)` of a European basket, defined on every default vector.
#[derive(Clone, PartialEq)]
pub struct BasketPayoff {
    n: usize,
    kind: PayoffKind,
    table: Option<Arc<[f64]>>,
}

impl fmt::Debug for BasketPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasketPayoff")
            .field("n", &self.n)
            .field("kind", &self.kind)
            .finish()
    }
}

impl BasketPayoff {
    /// Tabulates `f` over all 2ⁿ default vectors.
    pub fn from_fn(n: usize, f: impl Fn(&[bool]) -> f64) -> Result<Self> {
        check_enumerable(n)?;
        let mut buf = vec![false; n];
        let table: Vec<f64> = (0..1u64 << n)
            .map(|mask| {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = mask >> i & 1 == 1;
                }
                f(&buf)
            })
            .collect();
        Self::from_table(n, table)
    }

    /// Payoff table indexed by the default bitmask (bit `i` set when name `i`
    /// defaulted).
    pub fn from_table(n: usize, table: Vec<f64>) -> Result<Self> {
        check_enumerable(n)?;
        if table.len() != 1usize << n {
            return Err(Error::Shape(format!(
                "payoff table has {} entries, expected 2^{n}",
                table.len()
            )));
        }
        if let Some(v) = table.iter().find(|v| !v.is_finite()) {
            return domain(format!("payoff value {v} is not finite"));
        }
        Ok(Self {
            n,
            kind: PayoffKind::Generic,
            table: Some(table.into()),
        })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_table(n, vec![c; 1usize << n])
    }

    pub fn fptd(n: usize, order: usize, recovery: f64) -> Result<Self> {
        if order < 1 || order > n {
            return domain(format!("order {order} outside 1..={n}"));
        }
        check_recovery(recovery)?;
        Ok(Self {
            n,
            kind: PayoffKind::FpTD { order, recovery },
            table: None,
        })
    }

    pub fn first_to_default(n: usize, recovery: f64) -> Result<Self> {
        Self::fptd(n, 1, recovery)
    }

    pub fn stop_loss(n: usize, order: usize, recovery: f64) -> Result<Self> {
        if order > n {
            return domain(format!("order {order} outside 0..={n}"));
        }
        check_recovery(recovery)?;
        Ok(Self {
            n,
            kind: PayoffKind::StopLoss { order, recovery },
            table: None,
        })
    }

    pub fn worst_of_digital(n: usize) -> Self {
        Self {
            n,
            kind: PayoffKind::WorstOfDigital,
            table: None,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    /// Value of the payoff as a function of the number of defaults, for the
    /// exchangeable kinds.
    pub fn eval_count(&self, defaults: usize) -> Option<f64> {
        match self.kind {
            PayoffKind::FpTD { order, recovery } => {
                Some(defaults.min(order) as f64 * (1.0 - recovery))
            }
            PayoffKind::StopLoss { order, recovery } => {
                Some(if defaults <= order { 1.0 - recovery } else { 0.0 })
            }
            PayoffKind::WorstOfDigital => Some(if defaults > 0 { 1.0 } else { 0.0 }),
            PayoffKind::Generic => None,
        }
    }

    /// Payoff at the default vector encoded in `mask`.
    pub fn eval_mask(&self, mask: u64) -> f64 {
        match &self.table {
            Some(t) => t[mask as usize],
            None => self
                .eval_count(mask.count_ones() as usize)
                .expect("exchangeable payoff"),
        }
    }

    pub fn eval(&self, defaults: &[bool]) -> f64 {
        assert_eq!(defaults.len(), self.n, "indicator vector length");
        match &self.table {
            Some(_) => {
                let mask = defaults
                    .iter()
                    .enumerate()
                    .fold(0u64, |m, (i, &d)| if d { m | 1 << i } else { m });
                self.eval_mask(mask)
            }
            None => self
                .eval_count(defaults.iter().filter(|&&d| d).count())
                .expect("exchangeable payoff"),
        }
    }

    /// Materialized table over all default vectors (`n ≤ 20`).
    pub fn to_table(&self) -> Result<Vec<f64>> {
        check_enumerable(self.n)?;
        match &self.table {
            Some(t) => Ok(t.to_vec()),
            None => Ok((0..1u64 << self.n).map(|m| self.eval_mask(m)).collect()),
        }
    }

    /// The same payoff as a generic table, dropping the kind tag.
    pub fn to_generic(&self) -> Result<Self> {
        Self::from_table(self.n, self.to_table()?)
    }
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATED_NAMES {
        return Err(Error::Capacity(format!(
            "{n} names exceed the {MAX_ENUMERATED_NAMES}-name limit for tabulated payoffs; \
             use the FpTD recursion for larger baskets"
        )));
    }
    Ok(())
}

fn check_recovery(r: f64) -> Result<()> {
    if !(r >= 0.0 && r < 1.0) {
        return domain(format!("recovery {r} outside [0, 1)"));
    }
    Ok(())
}

/// Deterministic time change `ξ(t)` of the survival-probability volatility.
#[derive(Debug, Clone, PartialEq)]
pub enum Xi {
    /// `ξ(t) = 1/√(T - t)`.
    Merton,
    /// `ξ(t) = (1 - t/T)^(-α)`.
    PowerAlpha { alpha: f64 },
    /// Piecewise constant: `values[k]` on `[knots[k], knots[k+1])`, the last
    /// value extending to `T`.
    Table { knots: Vec<f64>, values: Vec<f64> },
}

impl Xi {
    pub fn validate(&self, maturity: f64) -> Result<()> {
        match self {
            Xi::Merton => Ok(()),
            Xi::PowerAlpha { alpha } if alpha.is_finite() => Ok(()),
            Xi::PowerAlpha { alpha } => domain(format!("alpha {alpha} must be finite")),
            Xi::Table { knots, values } => {
                if knots.is_empty() || knots.len() != values.len() {
                    return Err(Error::Shape("xi table needs matching knots and values".into()));
                }
                if knots[0] != 0.0 || knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return domain("xi knots must start at 0 and increase strictly");
                }
                if knots.iter().any(|&k| k >= maturity) {
                    return domain("xi knots must lie before maturity");
                }
                if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return domain("xi values must be finite and non-negative");
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, t: f64, maturity: f64) -> f64 {
        match self {
            Xi::Merton => 1.0 / (maturity - t).sqrt(),
            Xi::PowerAlpha { alpha } => (1.0 - t / maturity).powf(-alpha),
            Xi::Table { knots, values } => {
                let k = knots.partition_point(|&s| s <= t).saturating_sub(1);
                values[k]
            }
        }
    }

    /// `∫_a^b ξ(u)² du` for `0 ≤ a ≤ b < T`.
    pub fn integral_sq(&self, a: f64, b: f64, maturity: f64) -> f64 {
        match self {
            Xi::Merton => ((maturity - a) / (maturity - b)).ln(),
            Xi::PowerAlpha { alpha } => {
                let ua = 1.0 - a / maturity;
                let ub = 1.0 - b / maturity;
                let e = 1.0 - 2.0 * alpha;
                if e.abs() < 1e-12 {
                    maturity * (ua / ub).ln()
                } else {
                    maturity * (ua.powf(e) - ub.powf(e)) / e
                }
            }
            Xi::Table { knots, values } => {
                let mut acc = 0.0;
                for k in 0..knots.len() {
                    let lo = knots[k].max(a);
                    let hi = knots.get(k + 1).copied().unwrap_or(f64::INFINITY).min(b);
                    if hi > lo {
                        acc += values[k] * values[k] * (hi - lo);
                    }
                }
                acc
            }
        }
    }

    /// Whether `∫₀^t ξ² → ∞` as `t → T`, which forces `Q_T ∈ {0, 1}`.
    pub fn is_terminating(&self) -> bool {
        match self {
            Xi::Merton => true,
            Xi::PowerAlpha { alpha } => *alpha >= 0.5,
            Xi::Table { .. } => false,
        }
    }
}

/// Historical drift `μ(i, t, Q)` of a survival probability.
pub type DriftFn = Arc<dyn Fn(usize, f64, f64) -> f64 + Send + Sync>;

/// Parameters of the survival-probability dynamics
/// `dQ_i = σ̄_i ξ(t) φ(Φ⁻¹(Q_i)) dW_i + μ_i dt`.
#[derive(Clone)]
pub struct DynamicsSpec {
    pub sigma_bar: Vec<f64>,
    pub xi: Xi,
    pub spread_corr: DMatrix<f64>,
    pub drift: Option<DriftFn>,
}

impl fmt::Debug for DynamicsSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicsSpec")
            .field("sigma_bar", &self.sigma_bar)
            .field("xi", &self.xi)
            .field("spread_corr", &self.spread_corr)
            .field("drift", &self.drift.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl DynamicsSpec {
    pub fn new(sigma_bar: Vec<f64>, xi: Xi, spread_corr: DMatrix<f64>) -> Self {
        Self {
            sigma_bar,
            xi,
            spread_corr,
            drift: None,
        }
    }

    pub fn with_drift(mut self, drift: DriftFn) -> Self {
        self.drift = Some(drift);
        self
    }

    pub fn len(&self) -> usize {
        self.sigma_bar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_bar.is_empty()
    }

    pub fn validate(&self, maturity: f64) -> Result<()> {
        let n = self.sigma_bar.len();
        if self.spread_corr.nrows() != n || self.spread_corr.ncols() != n {
            return Err(Error::Shape(format!(
                "spread correlation is {}x{} for {n} names",
                self.spread_corr.nrows(),
                self.spread_corr.ncols()
            )));
        }
        if let Some(s) = self.sigma_bar.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return domain(format!("sigma_bar {s} must be finite and non-negative"));
        }
        self.xi.validate(maturity)?;
        let diag = validate_correlation_matrix(&self.spread_corr)?;
        if !diag.accepted {
            return domain(format!(
                "spread correlation rejected (symmetric {}, unit diagonal {}, min eigenvalue {:e})",
                diag.symmetric, diag.unit_diagonal, diag.min_eigenvalue
            ));
        }
        Ok(())
    }

    /// Instantaneous `β_i(t) = σ̄_i ξ(t)`.
    pub fn betas(&self, t: f64, maturity: f64) -> Vec<f64> {
        let x = self.xi.value(t, maturity);
        self.sigma_bar.iter().map(|s| s * x).collect()
    }
}

/// Outcome of a flat break-even correlation search.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakevenSolution {
    /// Break-even correlation `ρ²_BE`.
    pub rho_sq: f64,
    /// Drift at the returned root.
    pub drift_at_root: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Final bracket in `ρ²`.
    pub bracket: (f64, f64),
}

/// Drift of a delta-hedged position per unit time, split by name pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftReport {
    pub pair_terms: BTreeMap<(usize, usize), f64>,
    pub eta: f64,
    pub total: f64,
    /// `A*_ij` of the FpTD decomposition, when that route was used.
    pub a_star: Option<BTreeMap<(usize, usize), f64>>,
    pub breakeven: Option<BreakevenSolution>,
    /// Set when χ had to be integrated numerically.
    pub numeric_chi: bool,
}

impl DriftReport {
    pub(crate) fn from_pairs(pair_terms: BTreeMap<(usize, usize), f64>, eta: f64) -> Self {
        let total = pair_terms.values().sum::<f64>() + eta;
        Self {
            pair_terms,
            eta,
            total,
            ..Default::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hazard_examples() {
        let q = (-0.05f64 * 5.0).exp();
        assert!((hazard_from_survival(q, 0.0, 5.0).unwrap() - 0.05).abs() < 1e-15);
        let h = hazard_from_survival(0.95, 0.0, 1.0).unwrap();
        assert!((h - 0.051_293_294_387_550_53).abs() < 1e-15);
        assert!((survival_from_hazard(h, 0.0, 1.0).unwrap() - 0.95).abs() < 1e-14);
        assert!(hazard_from_survival(1.0, 0.0, 1.0).is_err());
        assert!(hazard_from_survival(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn market_rejects_bad_states() {
        assert!(MarketState::from_survival(vec![0.9, 1.0], 0.4, 5.0).is_err());
        assert!(MarketState::from_survival(vec![0.9], 1.0, 5.0).is_err());
        assert!(MarketState::new(default_names(1), 1.0, 1.0, vec![0.5], vec![0.0]).is_err());
        let m = MarketState::with_defaults(
            default_names(2),
            1.0,
            0.0,
            vec![0.0, 0.5],
            vec![0.4, 0.4],
            vec![true, false],
        )
        .unwrap();
        assert!(m.any_defaulted());
    }

    #[test]
    fn fptd_payoff_matches_its_tag_exhaustively() {
        for n in 1..=10 {
            for p in 1..=n {
                let payoff = BasketPayoff::fptd(n, p, 0.4).unwrap();
                for mask in 0..1u64 << n {
                    let k = mask.count_ones() as usize;
                    let expected = k.min(p) as f64 * 0.6;
                    assert_eq!(payoff.eval_mask(mask), expected);
                    // monotone in every indicator, capped at p (1 - R)
                    for i in 0..n {
                        assert!(payoff.eval_mask(mask | 1 << i) >= payoff.eval_mask(mask));
                    }
                    assert!(payoff.eval_mask(mask) <= p as f64 * 0.6);
                }
            }
        }
    }

    #[test]
    fn generic_table_round_trips_through_eval() {
        let payoff = BasketPayoff::from_fn(3, |d| if d[0] && !d[2] { 2.0 } else { 0.5 }).unwrap();
        assert_eq!(payoff.eval(&[true, true, false]), 2.0);
        assert_eq!(payoff.eval(&[true, true, true]), 0.5);
        assert_eq!(payoff.eval_mask(0b011), 2.0);
        assert!(matches!(
            BasketPayoff::constant(21, 1.0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn xi_integrals_match_quadrature() {
        let t_mat = 5.0;
        for xi in [
            Xi::Merton,
            Xi::PowerAlpha { alpha: 0.3 },
            Xi::PowerAlpha { alpha: 0.5 },
            Xi::Table {
                knots: vec![0.0, 1.0, 2.5],
                values: vec![1.0, 0.5, 2.0],
            },
        ] {
            let (a, b) = (0.7, 4.2);
            let m = 350_000;
            let h = (b - a) / m as f64;
            let mid: f64 = (0..m)
                .map(|k| xi.value(a + (k as f64 + 0.5) * h, t_mat).powi(2) * h)
                .sum();
            let exact = xi.integral_sq(a, b, t_mat);
            assert!((mid - exact).abs() < 1e-6 * exact.max(1.0), "{xi:?}");
        }
        assert!(Xi::Merton.is_terminating());
        assert!(!Xi::PowerAlpha { alpha: 0.3 }.is_terminating());
    }
}
