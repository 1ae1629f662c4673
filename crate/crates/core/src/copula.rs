//! Conditional default probabilities `p_{i|x}`, their derivatives and the
//! `χ_i` functions for the supported factor copulas.

use std::sync::Arc;

use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::model::{CopulaSpec, MarketState};
use crate::normal;
use crate::quadrature::QuadratureRule;

/// Largest survival probability accepted by the Clayton kernel.
pub const CLAYTON_Q_MAX: f64 = 1.0 - 1e-12;

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return domain(format!("survival probability {q} outside (0, 1)"));
    }
    Ok(())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.abs() < 1.0) {
        return domain(format!("loading {rho} must satisfy |rho| < 1"));
    }
    Ok(())
}

fn check_clayton(q: f64, theta: f64, x: f64) -> Result<()> {
    check_q(q)?;
    if q >= CLAYTON_Q_MAX {
        return domain(format!("Clayton kernel needs Q < 1 - 1e-12, got {q}"));
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return domain(format!("Clayton theta {theta} must be positive"));
    }
    if !(x >= 0.0) {
        return domain(format!("Gamma factor value {x} must be non-negative"));
    }
    Ok(())
}

/// Gaussian conditional default probability `Φ((Φ̄⁻¹(Q) − ρx)/√(1−ρ²))`.
pub fn cond_default_gauss1f(q: f64, rho: f64, x: f64) -> Result<f64> {
    check_q(q)?;
    check_rho(rho)?;
    Ok(Gauss::new(q, rho * rho).p(rho * x))
}

/// p-factor version with `ρ'x` and `|ρ|²`.
pub fn cond_default_gauss_pf(q: f64, rho: &[f64], x: &[f64]) -> Result<f64> {
    if rho.len() != x.len() {
        return Err(Error::Shape(format!(
            "loading has {} components, factor has {}",
            rho.len(),
            x.len()
        )));
    }
    check_q(q)?;
    let norm2: f64 = rho.iter().map(|r| r * r).sum();
    if !(norm2 < 1.0) {
        return domain(format!("loading norm {} >= 1", norm2.sqrt()));
    }
    Ok(Gauss::new(q, norm2).p(dot(rho, x)))
}

/// Clayton conditional default probability `exp(−x[(1−Q)^(−θ) − 1])`.
pub fn cond_default_clayton(q: f64, theta: f64, x: f64) -> Result<f64> {
    check_clayton(q, theta, x)?;
    Ok(Clayton::new(q, theta).p(x))
}

/// `χ(x) = ρ φ(x)/φ(Φ⁻¹(Q)) · ∂p/∂Q` for the one-factor Gaussian copula.
pub fn chi_gauss(q: f64, rho: f64, x: f64) -> Result<f64> {
    check_q(q)?;
    check_rho(rho)?;
    let g = Gauss::new(q, rho * rho);
    Ok(normal::pdf(x) * g.chi_over_density(rho, rho * x))
}

/// `χ(x) = ∂p/∂Q · xθ f_X(x)/(1−Q)` for the Clayton copula.
pub fn chi_clayton(q: f64, theta: f64, x: f64) -> Result<f64> {
    check_clayton(q, theta, x)?;
    let c = Clayton::new(q, theta);
    Ok(c.chi_over_density(x) * gamma_density(1.0 / theta, x))
}

/// `β = σ / φ(Φ⁻¹(Q))`.
pub fn vol_beta(sigma: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    if !(sigma >= 0.0) {
        return domain(format!("volatility {sigma} must be non-negative"));
    }
    Ok(sigma / normal::pdf(normal::inv_cdf(q)))
}

/// `σ = β φ(Φ⁻¹(Q))`.
pub fn sigma_from_beta(beta: f64, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(beta * normal::pdf(normal::inv_cdf(q)))
}

pub fn gamma_density(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 && shape == 1.0 { 1.0 } else { 0.0 };
    }
    ((shape - 1.0) * x.ln() - x - ln_gamma(shape)).exp()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-name Gaussian quantities that do not depend on the factor.
#[derive(Debug, Clone, Copy)]
struct Gauss {
    /// `s̄ = Φ̄⁻¹(Q)`.
    s: f64,
    /// `φ(s̄)`.
    phi_s: f64,
    /// `√(1 − |ρ|²)`.
    root: f64,
}

impl Gauss {
    fn new(q: f64, norm2: f64) -> Self {
        let s = normal::inv_sf(q);
        Self {
            s,
            phi_s: normal::pdf(s),
            root: (1.0 - norm2).sqrt(),
        }
    }

    fn d(&self, shift: f64) -> f64 {
        (self.s - shift) / self.root
    }

    fn p(&self, shift: f64) -> f64 {
        normal::cdf(self.d(shift))
    }

    fn dp_dq(&self, shift: f64) -> f64 {
        -normal::pdf(self.d(shift)) / (self.phi_s * self.root)
    }

    /// `∂²p/∂Q²` for the scalar loading `rho` (one factor).
    fn d2p_dq2(&self, rho: f64, x: f64) -> f64 {
        let d = self.d(rho * x);
        normal::pdf(d) / (self.phi_s * self.phi_s * self.root.powi(3)) * rho * (x - rho * self.s)
    }

    /// `∂p/∂x` along a loading component `rho_k`.
    fn dp_dx(&self, rho_k: f64, shift: f64) -> f64 {
        -rho_k * normal::pdf(self.d(shift)) / self.root
    }

    fn chi_over_density(&self, rho: f64, shift: f64) -> f64 {
        rho / self.phi_s * self.dp_dq(shift)
    }
}

#[derive(Debug, Clone, Copy)]
struct Clayton {
    theta: f64,
    one_minus_q: f64,
    /// `(1−Q)^(−θ) − 1`.
    s: f64,
    /// `θ (1−Q)^(−θ−1)`.
    ds: f64,
}

impl Clayton {
    fn new(q: f64, theta: f64) -> Self {
        let u = 1.0 - q;
        let pow = u.powf(-theta);
        Self {
            theta,
            one_minus_q: u,
            s: pow - 1.0,
            ds: theta * pow / u,
        }
    }

    fn p(&self, x: f64) -> f64 {
        (-x * self.s).exp()
    }

    fn dp_dq(&self, x: f64) -> f64 {
        -x * self.p(x) * self.ds
    }

    fn d2p_dq2(&self, x: f64) -> f64 {
        let u = self.one_minus_q;
        let pow = u.powf(-self.theta);
        x * self.theta * pow / (u * u) * self.p(x) * (x * self.theta * pow - (self.theta + 1.0))
    }

    fn dp_dx(&self, x: f64) -> f64 {
        -self.s * self.p(x)
    }

    fn chi_over_density(&self, x: f64) -> f64 {
        self.dp_dq(x) * x * self.theta / self.one_minus_q
    }
}

/// A one-factor conditional model: `p_{i|x}` and its derivatives for every
/// name, plus the factor density.
pub trait ConditionalKernel: Send + Sync {
    fn name_count(&self) -> usize;
    fn p(&self, i: usize, q: f64, x: f64) -> f64;
    fn dp_dq(&self, i: usize, q: f64, x: f64) -> f64;
    fn d2p_dq2(&self, i: usize, q: f64, x: f64) -> f64;
    fn dp_dx(&self, i: usize, q: f64, x: f64) -> f64;
    fn density(&self, x: f64) -> f64;
    /// Closed-form `χ_i(x) / f_X(x)`, when the model has one.
    fn chi_over_density(&self, i: usize, q: f64, x: f64) -> Option<f64>;
    /// Support of the factor, possibly truncated for numerical work.
    fn support(&self) -> (f64, f64);
    /// Default rule for integrating against `f_X`.
    fn rule(&self) -> Result<QuadratureRule>;
    /// Domain check for a survival probability.
    fn check(&self, q: f64) -> Result<()> {
        check_q(q)
    }

    /// `χ_i(x)`, numerically when no closed form exists.
    fn chi(&self, i: usize, q: f64, x: f64) -> f64 {
        match self.chi_over_density(i, q, x) {
            Some(c) => c * self.density(x),
            None => numeric_chi(self, i, q, x),
        }
    }
}

/// One-factor Gaussian kernel with per-name loadings.
#[derive(Debug, Clone)]
pub struct GaussKernel {
    pub loadings: Vec<f64>,
}

impl GaussKernel {
    pub fn new(loadings: Vec<f64>) -> Result<Self> {
        for &r in &loadings {
            check_rho(r)?;
        }
        Ok(Self { loadings })
    }

    fn g(&self, i: usize, q: f64) -> Gauss {
        let r = self.loadings[i];
        Gauss::new(q, r * r)
    }
}

impl ConditionalKernel for GaussKernel {
    fn name_count(&self) -> usize {
        self.loadings.len()
    }
    fn p(&self, i: usize, q: f64, x: f64) -> f64 {
        self.g(i, q).p(self.loadings[i] * x)
    }
    fn dp_dq(&self, i: usize, q: f64, x: f64) -> f64 {
        self.g(i, q).dp_dq(self.loadings[i] * x)
    }
    fn d2p_dq2(&self, i: usize, q: f64, x: f64) -> f64 {
        self.g(i, q).d2p_dq2(self.loadings[i], x)
    }
    fn dp_dx(&self, i: usize, q: f64, x: f64) -> f64 {
        let r = self.loadings[i];
        self.g(i, q).dp_dx(r, r * x)
    }
    fn density(&self, x: f64) -> f64 {
        normal::pdf(x)
    }
    fn chi_over_density(&self, i: usize, q: f64, x: f64) -> Option<f64> {
        let r = self.loadings[i];
        Some(self.g(i, q).chi_over_density(r, r * x))
    }
    fn support(&self) -> (f64, f64) {
        (-10.0, 10.0)
    }
    fn rule(&self) -> Result<QuadratureRule> {
        Ok(QuadratureRule::default_gaussian())
    }
}

/// Clayton kernel driven by a Gamma(1/θ, 1) factor.
#[derive(Debug, Clone)]
pub struct ClaytonKernel {
    pub theta: f64,
    pub n: usize,
}

impl ClaytonKernel {
    pub fn new(theta: f64, n: usize) -> Result<Self> {
        if !(theta > 0.0) || !theta.is_finite() {
            return domain(format!("Clayton theta {theta} must be positive"));
        }
        Ok(Self { theta, n })
    }

    fn c(&self, q: f64) -> Clayton {
        Clayton::new(q, self.theta)
    }
}

impl ConditionalKernel for ClaytonKernel {
    fn name_count(&self) -> usize {
        self.n
    }
    fn p(&self, _i: usize, q: f64, x: f64) -> f64 {
        self.c(q).p(x)
    }
    fn dp_dq(&self, _i: usize, q: f64, x: f64) -> f64 {
        self.c(q).dp_dq(x)
    }
    fn d2p_dq2(&self, _i: usize, q: f64, x: f64) -> f64 {
        self.c(q).d2p_dq2(x)
    }
    fn dp_dx(&self, _i: usize, q: f64, x: f64) -> f64 {
        self.c(q).dp_dx(x)
    }
    fn density(&self, x: f64) -> f64 {
        gamma_density(1.0 / self.theta, x)
    }
    fn chi_over_density(&self, _i: usize, q: f64, x: f64) -> Option<f64> {
        Some(self.c(q).chi_over_density(x))
    }
    fn support(&self) -> (f64, f64) {
        let a = 1.0 / self.theta;
        (0.0, a + 45.0 + 12.0 * a.sqrt())
    }
    fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::default_gamma(self.theta)
    }
    fn check(&self, q: f64) -> Result<()> {
        check_clayton(q, self.theta, 0.0)
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Archimedean model `p_{i|x} = exp(−x ξ⁻¹(1 − Q))` with a user supplied
/// Laplace transform `ξ` of a positive factor. No closed-form `χ` is
/// assumed: it is integrated numerically.
#[derive(Clone)]
pub struct ArchimedeanKernel {
    pub n: usize,
    /// `ξ'`.
    pub laplace_d1: ScalarFn,
    /// `ξ''`.
    pub laplace_d2: ScalarFn,
    /// `ξ⁻¹`.
    pub laplace_inv: ScalarFn,
    /// Density of the factor.
    pub density: ScalarFn,
    /// Upper truncation of the factor support.
    pub upper: f64,
    /// Gamma shape used to build the integration rule (a Gamma rule is used
    /// as a proposal measure, with `density` reweighted against it).
    pub rule_theta: f64,
}

impl std::fmt::Debug for ArchimedeanKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ArchimedeanKernel")
            .field("n", &self.n)
            .field("upper", &self.upper)
            .finish()
    }
}

impl ArchimedeanKernel {
    /// The Clayton generator written as a generic Archimedean model, handy
    /// for cross-checks against the closed forms.
    pub fn clayton(theta: f64, n: usize) -> Result<Self> {
        if !(theta > 0.0) {
            return domain(format!("Clayton theta {theta} must be positive"));
        }
        let a = 1.0 / theta;
        Ok(Self {
            n,
            laplace_d1: Arc::new(move |s| -a * (1.0 + s).powf(-a - 1.0)),
            laplace_d2: Arc::new(move |s| a * (a + 1.0) * (1.0 + s).powf(-a - 2.0)),
            laplace_inv: Arc::new(move |u| u.powf(-theta) - 1.0),
            density: Arc::new(move |x| gamma_density(a, x)),
            upper: a + 45.0 + 12.0 * a.sqrt(),
            rule_theta: theta,
        })
    }

    fn xi_bar(&self, q: f64) -> f64 {
        (self.laplace_inv)(1.0 - q)
    }
}

impl ConditionalKernel for ArchimedeanKernel {
    fn name_count(&self) -> usize {
        self.n
    }
    fn p(&self, _i: usize, q: f64, x: f64) -> f64 {
        (-x * self.xi_bar(q)).exp()
    }
    fn dp_dq(&self, i: usize, q: f64, x: f64) -> f64 {
        let xb = self.xi_bar(q);
        x * self.p(i, q, x) / (self.laplace_d1)(xb)
    }
    fn d2p_dq2(&self, i: usize, q: f64, x: f64) -> f64 {
        let xb = self.xi_bar(q);
        let d1 = (self.laplace_d1)(xb);
        let d2 = (self.laplace_d2)(xb);
        let p = self.p(i, q, x);
        x * (x * p / d1) / d1 + x * p * d2 / (d1 * d1 * d1)
    }
    fn dp_dx(&self, i: usize, q: f64, x: f64) -> f64 {
        -self.xi_bar(q) * self.p(i, q, x)
    }
    fn density(&self, x: f64) -> f64 {
        (self.density)(x)
    }
    fn chi_over_density(&self, _i: usize, _q: f64, _x: f64) -> Option<f64> {
        None
    }
    fn support(&self) -> (f64, f64) {
        (0.0, self.upper)
    }
    fn rule(&self) -> Result<QuadratureRule> {
        QuadratureRule::default_gamma(self.rule_theta)
    }
}

/// `∫_{lo}^{x} g(u) du` by composite 16-point Gauss–Legendre on panels of
/// width at most `max_width`.
pub(crate) fn cumulative(g: impl Fn(f64) -> f64, lo: f64, x: f64, max_width: f64) -> f64 {
    if x <= lo {
        return 0.0;
    }
    let (nodes, weights) = legendre16();
    let panels = ((x - lo) / max_width).ceil().max(1.0) as usize;
    let h = (x - lo) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * h;
        for (u, w) in nodes.iter().zip(weights.iter()) {
            acc += w * 0.5 * h * g(mid + 0.5 * h * u);
        }
    }
    acc
}

fn legendre16() -> (&'static [f64], &'static [f64]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (x, w) = RULE.get_or_init(|| {
        let r = QuadratureRule::gaussian_panels(1, 16, 1.0).expect("valid rule");
        // undo the φ weighting to recover plain Legendre weights on [-1, 1]
        let w = r
            .nodes()
            .iter()
            .zip(r.weights())
            .map(|(&x, &w)| w / normal::pdf(x))
            .collect();
        (r.nodes().to_vec(), w)
    });
    (x, w)
}

/// `χ_i(x) = ∫_{lower}^{x} ∂²p/∂Q² f_X du` by numerical integration.
pub fn numeric_chi<K: ConditionalKernel + ?Sized>(kernel: &K, i: usize, q: f64, x: f64) -> f64 {
    let (lo, _) = kernel.support();
    let width = if lo == 0.0 { 0.05 } else { 0.25 };
    if lo == 0.0 && x > 0.0 {
        // near zero the Gamma density can be singular; integrate in ln u
        let y_lo = (1e-14f64).ln().min(x.ln() - 1.0);
        let head = cumulative(
            |y| {
                let u = y.exp();
                kernel.d2p_dq2(i, q, u) * kernel.density(u) * u
            },
            y_lo,
            x.min(1.0).ln(),
            0.25,
        );
        let tail = if x > 1.0 {
            cumulative(|u| kernel.d2p_dq2(i, q, u) * kernel.density(u), 1.0, x, width)
        } else {
            0.0
        };
        return head + tail;
    }
    cumulative(|u| kernel.d2p_dq2(i, q, u) * kernel.density(u), lo, x, width)
}

/// `χ_i` at increasing abscissae `xs`, accumulating the integral from one
/// node to the next.
pub fn numeric_chi_on_nodes<K: ConditionalKernel + ?Sized>(
    kernel: &K,
    i: usize,
    q: f64,
    xs: &[f64],
) -> Vec<f64> {
    let (lo, _) = kernel.support();
    let g = |u: f64| kernel.d2p_dq2(i, q, u) * kernel.density(u);
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    for &x in xs {
        acc += match prev {
            None => numeric_chi(kernel, i, q, x),
            Some(a) if lo == 0.0 => cumulative(
                |y| {
                    let u = y.exp();
                    g(u) * u
                },
                a.ln(),
                x.ln(),
                0.25,
            ),
            Some(a) => cumulative(g, a, x, 0.25),
        };
        out.push(acc);
        prev = Some(x);
    }
    out
}

/// The kernel matching a one-factor copula specification.
pub fn kernel_for(copula: &CopulaSpec, n: usize) -> Result<Box<dyn ConditionalKernel>> {
    copula.validate(n)?;
    match copula {
        CopulaSpec::Gauss1F { loadings } => Ok(Box::new(GaussKernel::new(loadings.clone())?)),
        CopulaSpec::Clayton { theta } => Ok(Box::new(ClaytonKernel::new(*theta, n)?)),
        CopulaSpec::GaussPF { .. } => Err(Error::Unsupported(
            "one-factor kernel requested for a multi-factor copula".into(),
        )),
    }
}

/// Conditional probabilities of every name at every node of a rule.
///
/// Arrays are node-major: entry `k * n + i` belongs to node `k`, name `i`.
/// Defaulted names have `p = 1` and zero derivatives.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    pub n: usize,
    pub weights: Vec<f64>,
    pub p: Vec<f64>,
    pub dp_dq: Vec<f64>,
}

impl ConditionalTable {
    pub fn nodes(&self) -> usize {
        self.weights.len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.p[k * self.n..(k + 1) * self.n]
    }

    pub fn dp_row(&self, k: usize) -> &[f64] {
        &self.dp_dq[k * self.n..(k + 1) * self.n]
    }

    /// Builds the table for `market` under `copula` with `rule`, which must
    /// integrate against the copula's factor density.
    pub fn build(copula: &CopulaSpec, market: &MarketState, rule: &QuadratureRule) -> Result<Self> {
        let n = market.len();
        copula.validate(n)?;
        let q = market.survival();
        let dead = market.defaulted();
        let m = rule.len();
        let mut p = vec![1.0; m * n];
        let mut dp = vec![0.0; m * n];
        match copula {
            CopulaSpec::Gauss1F { .. } | CopulaSpec::GaussPF { .. } => {
                let loadings = copula.gaussian_loadings().expect("Gaussian family");
                let dim = loadings[0].len();
                if rule.dim() != dim || !matches!(rule.measure(), crate::quadrature::Measure::Gaussian { .. }) {
                    return domain(format!(
                        "copula has {dim} Gaussian factors but the rule is {:?}",
                        rule.measure()
                    ));
                }
                let per_name: Vec<Option<Gauss>> = (0..n)
                    .map(|i| {
                        (!dead[i]).then(|| {
                            Gauss::new(q[i], loadings[i].iter().map(|r| r * r).sum())
                        })
                    })
                    .collect();
                for k in 0..m {
                    let x = rule.point(k);
                    for i in 0..n {
                        if let Some(g) = per_name[i] {
                            let shift = dot(&loadings[i], x);
                            p[k * n + i] = g.p(shift);
                            dp[k * n + i] = g.dp_dq(shift);
                        }
                    }
                }
            }
            CopulaSpec::Clayton { theta } => {
                if !matches!(rule.measure(), crate::quadrature::Measure::Gamma { shape } if (shape * theta - 1.0).abs() < 1e-12)
                {
                    return domain("Clayton pricing needs a Gamma(1/theta) rule");
                }
                let mut per_name = Vec::with_capacity(n);
                for i in 0..n {
                    if dead[i] {
                        per_name.push(None);
                    } else {
                        check_clayton(q[i], *theta, 0.0)?;
                        per_name.push(Some(Clayton::new(q[i], *theta)));
                    }
                }
                for k in 0..m {
                    let x = rule.point(k)[0];
                    for i in 0..n {
                        if let Some(c) = per_name[i] {
                            p[k * n + i] = c.p(x);
                            dp[k * n + i] = c.dp_dq(x);
                        }
                    }
                }
            }
        }
        if let Some(pos) = p.iter().chain(&dp).position(|v| !v.is_finite()) {
            let pos = pos % (m * n);
            return Err(Error::NonFinite {
                node: pos / n,
                value: f64::NAN,
            });
        }
        Ok(Self {
            n,
            weights: rule.weights().to_vec(),
            p,
            dp_dq: dp,
        })
    }
}

/// Default integration rule for a copula.
pub fn default_rule(copula: &CopulaSpec) -> Result<QuadratureRule> {
    match copula {
        CopulaSpec::Gauss1F { .. } => Ok(QuadratureRule::default_gaussian()),
        CopulaSpec::GaussPF { .. } => QuadratureRule::default_gaussian_p(copula.factor_dim()),
        CopulaSpec::Clayton { theta } => QuadratureRule::default_gamma(*theta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_gamma, integrate_gaussian, integrate_gaussian_p};
    use std::f64::consts::PI;

    #[test]
    fn gauss1f_examples() {
        for x in [-3.0, 0.0, 2.5] {
            assert!((cond_default_gauss1f(0.95, 0.0, x).unwrap() - 0.05).abs() < 1e-15);
        }
        assert!((cond_default_gauss1f(0.5, 0.6, 0.0).unwrap() - 0.5).abs() < 1e-16);
        // mpmath: Φ((Φ̄⁻¹(0.9) − 0.5)/√0.75)
        let v = cond_default_gauss1f(0.9, 0.5, 1.0).unwrap();
        assert!((v - 0.019_835_488_517_765_28).abs() < 1e-15);
        assert!(cond_default_gauss1f(0.9, 1.0, 0.0).is_err());
    }

    #[test]
    fn pf_embeds_one_factor() {
        let a = cond_default_gauss_pf(0.8, &[0.6, 0.0, 0.0], &[0.7, -2.0, 3.0]).unwrap();
        let b = cond_default_gauss1f(0.8, 0.6, 0.7).unwrap();
        assert_eq!(a, b);
        assert!((cond_default_gauss_pf(0.8, &[0.0, 0.0], &[1.0, 2.0]).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            cond_default_gauss_pf(0.8, &[0.1], &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn clayton_examples() {
        assert_eq!(cond_default_clayton(0.3, 2.0, 0.0).unwrap(), 1.0);
        assert!(cond_default_clayton(0.3, 0.0, 1.0).is_err());
        assert!(cond_default_clayton(0.3, 1.0, -1.0).is_err());
        assert!(cond_default_clayton(1.0 - 1e-13, 1.0, 1.0).is_err());
        // as Q → 1 the exponent blows up and p → 0
        let near = cond_default_clayton(1.0 - 1e-9, 0.5, 1.0).unwrap();
        assert!(near < 1e-10);
        let rule = QuadratureRule::default_gamma(0.5).unwrap();
        let v = integrate_gamma(|x| cond_default_clayton(0.9, 0.5, x).unwrap(), &rule).unwrap();
        assert!((v - 0.1).abs() < 1e-8);
    }

    #[test]
    fn chi_examples() {
        for x in [-2.0, 0.0, 1.0] {
            assert_eq!(chi_gauss(0.7, 0.0, x).unwrap(), 0.0);
        }
        assert!(chi_gauss(0.7, 0.5, 40.0).unwrap().abs() < 1e-300);
        let v = chi_gauss(0.9, 0.5, 0.3).unwrap();
        assert!((v + 0.727_487_604_143_469_87).abs() < 1e-13, "{v}");
        assert_eq!(chi_clayton(0.8, 1.0, 0.0).unwrap(), 0.0);
        let c = chi_clayton(0.8, 1.0, 1.0).unwrap();
        assert!((c + 0.842_243_374_885_683_39).abs() < 1e-13, "{c}");
        assert!(chi_clayton(0.8, 1e-9, 1.0).unwrap().abs() < 1e-6);
    }

    #[test]
    fn vol_beta_examples() {
        assert_eq!(vol_beta(0.0, 0.3).unwrap(), 0.0);
        assert!((vol_beta(0.1, 0.5).unwrap() - 0.1 * (2.0 * PI).sqrt()).abs() < 1e-15);
        let b = vol_beta(0.02, 0.9).unwrap();
        assert!((b - 0.113_961_197_122_340_08).abs() < 1e-14);
        assert!((sigma_from_beta(b, 0.9).unwrap() - 0.02).abs() < 1e-15);
        assert!(vol_beta(0.02, 1.0).is_err());
    }

    #[test]
    fn gaussian_density_factorization() {
        for q in [0.05, 0.4, 0.93] {
            for rho in [-0.8, 0.3, 0.9] {
                let s = normal::inv_sf(q);
                let root = (1.0f64 - rho * rho).sqrt();
                for x in [-3.0, -0.5, 0.0, 1.7, 3.0] {
                    let d = (s - rho * x) / root;
                    let lhs = normal::pdf(d) * normal::pdf(x);
                    let rhs = normal::pdf((x - rho * s) / root) * normal::pdf(s);
                    assert!((lhs - rhs).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn total_probability_all_families() {
        let g = QuadratureRule::default_gaussian();
        let g2 = QuadratureRule::default_gaussian_p(2).unwrap();
        for q in [1e-4, 0.05, 0.5, 0.95, 1.0 - 1e-4] {
            for rho in [-0.99, -0.5, 0.0, 0.3, 0.9, 0.99] {
                let v = integrate_gaussian(|x| cond_default_gauss1f(q, rho, x).unwrap(), &g).unwrap();
                assert!((v - (1.0 - q)).abs() < 1e-8, "q {q} rho {rho}: {v}");
            }
            let v = integrate_gaussian_p(
                |x| cond_default_gauss_pf(q, &[0.6, -0.5], x).unwrap(),
                &g2,
            )
            .unwrap();
            assert!((v - (1.0 - q)).abs() < 1e-8, "q {q}: {v}");
            for theta in [0.2, 1.0, 5.0] {
                let r = QuadratureRule::default_gamma(theta).unwrap();
                let v = integrate_gamma(|x| cond_default_clayton(q, theta, x).unwrap(), &r).unwrap();
                assert!((v - (1.0 - q)).abs() < 1e-8, "q {q} theta {theta}: {v}");
            }
        }
    }

    #[test]
    fn kernel_derivatives_match_finite_differences() {
        let h = 1e-6;
        // central differences of p carry ~1e-10 of rounding noise
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-5 * b.abs() + 1e-9;
        for q in [0.05, 0.25, 0.5, 0.75, 0.95] {
            for rho in [0.0, 0.3, -0.3, 0.9, -0.9] {
                let k = GaussKernel::new(vec![rho]).unwrap();
                for x in [-3.0, -1.5, 0.0, 1.5, 3.0] {
                    let fd_q = (k.p(0, q + h, x) - k.p(0, q - h, x)) / (2.0 * h);
                    let fd_x = (k.p(0, q, x + h) - k.p(0, q, x - h)) / (2.0 * h);
                    let fd_qq = (k.dp_dq(0, q + h, x) - k.dp_dq(0, q - h, x)) / (2.0 * h);
                    assert!(close(k.dp_dq(0, q, x), fd_q), "q {q} rho {rho} x {x}");
                    assert!(close(k.dp_dx(0, q, x), fd_x), "q {q} rho {rho} x {x}");
                    assert!(close(k.d2p_dq2(0, q, x), fd_qq), "q {q} rho {rho} x {x}");
                }
            }
            let c = ClaytonKernel::new(0.7, 1).unwrap();
            for x in [0.1, 0.5, 1.0, 3.0] {
                let fd_q = (c.p(0, q + h, x) - c.p(0, q - h, x)) / (2.0 * h);
                let fd_x = (c.p(0, q, x + h) - c.p(0, q, x - h)) / (2.0 * h);
                let fd_qq = (c.dp_dq(0, q + h, x) - c.dp_dq(0, q - h, x)) / (2.0 * h);
                assert!(close(c.dp_dq(0, q, x), fd_q));
                assert!(close(c.dp_dx(0, q, x), fd_x));
                assert!(close(c.d2p_dq2(0, q, x), fd_qq));
            }
        }
    }

    #[test]
    fn archimedean_adapter_reproduces_clayton() {
        let a = ArchimedeanKernel::clayton(0.8, 1).unwrap();
        let c = ClaytonKernel::new(0.8, 1).unwrap();
        for q in [0.1, 0.6, 0.95] {
            for x in [0.05, 0.7, 2.0] {
                assert!((a.p(0, q, x) - c.p(0, q, x)).abs() < 1e-14);
                assert!((a.dp_dq(0, q, x) / c.dp_dq(0, q, x) - 1.0).abs() < 1e-12);
                assert!((a.d2p_dq2(0, q, x) / c.d2p_dq2(0, q, x) - 1.0).abs() < 1e-11);
                let numeric = a.chi(0, q, x);
                let closed = c.chi(0, q, x);
                assert!((numeric - closed).abs() < 1e-8, "{numeric} {closed}");
            }
        }
    }
}
