//! Gaussian quadrature against the factor densities.
//!
//! Nodes and weights come from the eigen decomposition of the Jacobi matrix
//! of the three-term recurrence (Golub–Welsch), after which every node is
//! polished by Newton steps on the recurrence and the weights are recomputed
//! from the Christoffel function `1 / Σ p_k(x)²`, which keeps small tail
//! weights accurate to full relative precision.
//!
//! Two composite rules sit next to the classical ones. Plain Gauss–Hermite
//! loses accuracy on the steep conditional probabilities produced by loadings
//! close to one, and Gauss–Laguerre does the same for Clayton integrands with
//! `Q` near one, so the default rules are panels of Gauss–Legendre nodes
//! placed on a truncated interval (Gaussian measure) or in `ln x` (Gamma
//! measure).

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Error, Result};
use crate::normal;

/// Largest factor dimension accepted by tensor rules.
pub const MAX_TENSOR_DIM: usize = 3;

/// Half-width of the default Gaussian panel rule.
pub const DEFAULT_HALF_WIDTH: f64 = 8.5;
pub const DEFAULT_PANELS: usize = 34;
pub const DEFAULT_PER_PANEL: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum RuleKind {
    /// Gauss–Hermite for the standard normal weight.
    GaussHermite { n_nodes: usize },
    /// Composite Gauss–Legendre on `[-half_width, half_width]` against `φ`.
    GaussianPanels {
        panels: usize,
        per_panel: usize,
        half_width: f64,
    },
    /// Tensor product of a one-dimensional Gaussian rule.
    Tensor { base: Box<RuleKind>, p: usize },
    /// Generalized Gauss–Laguerre for the Gamma(shape, 1) density.
    GaussLaguerre { n_nodes: usize, shape: f64 },
    /// Composite Gauss–Legendre in `y = ln x` against the Gamma(shape, 1)
    /// density.
    GammaLogPanels { shape: f64, per_panel: usize },
}

/// Measure a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// Product of `dim` standard normal densities.
    Gaussian { dim: usize },
    /// Gamma(shape, 1) density on `(0, ∞)`.
    Gamma { shape: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    kind: RuleKind,
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// A quadrature value with the difference to the next coarser rule of the
/// same family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

impl QuadratureRule {
    pub fn gauss_hermite(n_nodes: usize) -> Result<Self> {
        if n_nodes == 0 {
            return domain("Gauss-Hermite needs at least one node");
        }
        let (x, w) = golub_welsch(n_nodes, |_| 0.0, |k| (k as f64).sqrt());
        Ok(Self {
            kind: RuleKind::GaussHermite { n_nodes },
            dim: 1,
            points: x,
            weights: w,
        })
    }

    pub fn gaussian_panels(panels: usize, per_panel: usize, half_width: f64) -> Result<Self> {
        if panels == 0 || per_panel == 0 || !(half_width > 0.0) {
            return domain("panel rule needs positive panel count, nodes and width");
        }
        let (gx, gw) = legendre(per_panel);
        let h = 2.0 * half_width / panels as f64;
        let mut points = Vec::with_capacity(panels * per_panel);
        let mut weights = Vec::with_capacity(panels * per_panel);
        for k in 0..panels {
            let mid = -half_width + (k as f64 + 0.5) * h;
            for (&u, &wu) in gx.iter().zip(&gw) {
                let x = mid + 0.5 * h * u;
                points.push(x);
                weights.push(wu * 0.5 * h * normal::pdf(x));
            }
        }
        Ok(Self {
            kind: RuleKind::GaussianPanels {
                panels,
                per_panel,
                half_width,
            },
            dim: 1,
            points,
            weights,
        })
    }

    /// Default one-factor Gaussian rule: 272 panel nodes on `[-8.5, 8.5]`.
    pub fn default_gaussian() -> Self {
        Self::gaussian_panels(DEFAULT_PANELS, DEFAULT_PER_PANEL, DEFAULT_HALF_WIDTH)
            .expect("valid default rule")
    }

    /// Cheaper Gaussian rule (128 nodes) for inner loops of root searches.
    pub fn fast_gaussian() -> Self {
        Self::gaussian_panels(16, 8, 8.0).expect("valid rule")
    }

    pub fn tensor(base: &QuadratureRule, p: usize) -> Result<Self> {
        if p == 0 {
            return domain("tensor rule needs p >= 1");
        }
        if p > MAX_TENSOR_DIM {
            return Err(Error::Unsupported(format!(
                "tensor quadrature limited to p <= {MAX_TENSOR_DIM}, got {p}"
            )));
        }
        if base.dim != 1 || !matches!(base.measure(), Measure::Gaussian { .. }) {
            return domain("tensor rules are built from a one-dimensional Gaussian rule");
        }
        let m = base.len();
        let total = m.pow(p as u32);
        let mut points = Vec::with_capacity(total * p);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; p];
        for _ in 0..total {
            let mut w = 1.0;
            for &k in &idx {
                points.push(base.points[k]);
                w *= base.weights[k];
            }
            weights.push(w);
            // last axis varies fastest
            for axis in (0..p).rev() {
                idx[axis] += 1;
                if idx[axis] < m {
                    break;
                }
                idx[axis] = 0;
            }
        }
        Ok(Self {
            kind: RuleKind::Tensor {
                base: Box::new(base.kind.clone()),
                p,
            },
            dim: p,
            points,
            weights,
        })
    }

    pub fn tensor_hermite(n_nodes: usize, p: usize) -> Result<Self> {
        Self::tensor(&Self::gauss_hermite(n_nodes)?, p)
    }

    /// Default rule for a `p`-factor Gaussian model. One factor returns the
    /// default one-dimensional rule itself.
    pub fn default_gaussian_p(p: usize) -> Result<Self> {
        match p {
            1 => Ok(Self::default_gaussian()),
            // total probability to 1e-8 for |ρ| ≤ 0.99
            2 => Self::tensor(&Self::gaussian_panels(32, 8, 8.0)?, 2),
            // to 1e-8 only for |ρ| ≤ 0.9; the 0.99 target needs ~10⁷ nodes
            _ => Self::tensor(&Self::gaussian_panels(12, 8, 8.0)?, p),
        }
    }

    pub fn gauss_laguerre(n_nodes: usize, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        if n_nodes == 0 {
            return domain("Gauss-Laguerre needs at least one node");
        }
        let a = 1.0 / theta;
        let (x, w) = golub_welsch(
            n_nodes,
            |k| 2.0 * k as f64 + a,
            |k| (k as f64 * (k as f64 + a - 1.0)).sqrt(),
        );
        Ok(Self {
            kind: RuleKind::GaussLaguerre { n_nodes, shape: a },
            dim: 1,
            points: x,
            weights: w,
        })
    }

    /// Composite rule in `ln x` for the Gamma(1/θ, 1) density.
    pub fn gamma_panels(theta: f64, per_panel: usize) -> Result<Self> {
        check_theta(theta)?;
        if per_panel == 0 {
            return domain("panel rule needs at least one node per panel");
        }
        let a = 1.0 / theta;
        let lg = ln_gamma(a);
        // below y_lo the mass P(X < e^y) ≈ e^{a y}/Γ(a+1) is under 1e-17
        let y_lo = ((1e-17f64).ln() + ln_gamma(a + 1.0)) / a;
        let y_hi = (a + 45.0 + 12.0 * a.sqrt()).ln();
        let (gx, gw) = legendre(per_panel);
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut lo = y_lo;
        while lo < y_hi {
            // the log-density a y - e^y must change slowly across a panel
            let mut h = 1.0f64;
            for _ in 0..2 {
                let y = lo + h;
                h = 1f64
                    .min(4.0 / (a - y.exp()).abs().max(1e-300))
                    .min(2.0 / (0.5 * y).exp())
                    .max(1e-3);
            }
            let hi = (lo + h).min(y_hi);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            for (&u, &wu) in gx.iter().zip(&gw) {
                let y = mid + half * u;
                let x = y.exp();
                points.push(x);
                weights.push(wu * half * (a * y - x - lg).exp());
            }
            lo = hi;
        }
        Ok(Self {
            kind: RuleKind::GammaLogPanels {
                shape: a,
                per_panel,
            },
            dim: 1,
            points,
            weights,
        })
    }

    pub fn default_gamma(theta: f64) -> Result<Self> {
        Self::gamma_panels(theta, 8)
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Abscissae of a one-dimensional rule.
    pub fn nodes(&self) -> &[f64] {
        assert_eq!(self.dim, 1, "nodes() on a {}-dimensional rule", self.dim);
        &self.points
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dim..(k + 1) * self.dim]
    }

    pub fn measure(&self) -> Measure {
        match &self.kind {
            RuleKind::GaussLaguerre { shape, .. } | RuleKind::GammaLogPanels { shape, .. } => {
                Measure::Gamma { shape: *shape }
            }
            _ => Measure::Gaussian { dim: self.dim },
        }
    }

    /// Rule of the same family with roughly half the nodes, used to estimate
    /// the error of this one.
    pub fn coarser(&self) -> Result<Self> {
        match &self.kind {
            RuleKind::GaussHermite { n_nodes } => Self::gauss_hermite((n_nodes / 2).max(1)),
            RuleKind::GaussianPanels {
                panels,
                per_panel,
                half_width,
            } => Self::gaussian_panels(*panels, (per_panel / 2).max(1), *half_width),
            RuleKind::Tensor { p, .. } => {
                let base = self.base_rule()?;
                Self::tensor(&base.coarser()?, *p)
            }
            RuleKind::GaussLaguerre { n_nodes, shape } => {
                Self::gauss_laguerre((n_nodes / 2).max(1), 1.0 / shape)
            }
            RuleKind::GammaLogPanels { shape, per_panel } => {
                Self::gamma_panels(1.0 / shape, (per_panel / 2).max(1))
            }
        }
    }

    fn base_rule(&self) -> Result<Self> {
        match &self.kind {
            RuleKind::Tensor { base, .. } => match base.as_ref() {
                RuleKind::GaussHermite { n_nodes } => Self::gauss_hermite(*n_nodes),
                RuleKind::GaussianPanels {
                    panels,
                    per_panel,
                    half_width,
                } => Self::gaussian_panels(*panels, *per_panel, *half_width),
                other => Err(Error::Unsupported(format!("tensor base {other:?}"))),
            },
            _ => Ok(self.clone()),
        }
    }

    /// `Σ_k w_k f(x_k)` in node order.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (k, &w) in self.weights.iter().enumerate() {
            let v = f(self.point(k));
            if !v.is_finite() {
                return Err(Error::NonFinite { node: k, value: v });
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Integral together with its difference to the coarser rule.
    pub fn integrate_with_error(&self, mut f: impl FnMut(&[f64]) -> f64) -> Result<Estimate> {
        let value = self.integrate(&mut f)?;
        let coarse = self.coarser()?.integrate(&mut f)?;
        Ok(Estimate {
            value,
            error: (value - coarse).abs(),
            nodes: self.len(),
        })
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || !theta.is_finite() {
        return domain(format!("Gamma rule needs theta > 0, got {theta}"));
    }
    Ok(())
}

/// ∫ f(x) φ(x) dx with a one-dimensional Gaussian rule.
pub fn integrate_gaussian(f: impl Fn(f64) -> f64, rule: &QuadratureRule) -> Result<f64> {
    if rule.measure() != (Measure::Gaussian { dim: 1 }) {
        return domain("integrate_gaussian needs a one-dimensional Gaussian rule");
    }
    rule.integrate(|x| f(x[0]))
}

/// ∫ f(x) Π φ(x_k) dx over ℝᵖ with a tensor rule.
pub fn integrate_gaussian_p(f: impl Fn(&[f64]) -> f64, rule: &QuadratureRule) -> Result<f64> {
    match rule.measure() {
        Measure::Gaussian { dim } if dim <= MAX_TENSOR_DIM => rule.integrate(f),
        Measure::Gaussian { dim } => Err(Error::Unsupported(format!(
            "tensor quadrature limited to p <= {MAX_TENSOR_DIM}, got {dim}"
        ))),
        Measure::Gamma { .. } => domain("integrate_gaussian_p needs a Gaussian rule"),
    }
}

/// ∫₀^∞ f(x) f_X(x) dx for the Gamma(1/θ, 1) density.
pub fn integrate_gamma(f: impl Fn(f64) -> f64, rule: &QuadratureRule) -> Result<f64> {
    if !matches!(rule.measure(), Measure::Gamma { .. }) {
        return domain("integrate_gamma needs a Gamma rule");
    }
    rule.integrate(|x| f(x[0]))
}

/// Gauss–Legendre nodes on `[-1, 1]` with weights summing to 2.
fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = golub_welsch(
        n,
        |_| 0.0,
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
    );
    (x, w.into_iter().map(|v| 2.0 * v).collect())
}

/// Nodes and weights of the `n`-point Gauss rule for a probability measure
/// with orthonormal recurrence `x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}`.
fn golub_welsch(n: usize, a: impl Fn(usize) -> f64, b: impl Fn(usize) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = a(k);
        if k + 1 < n {
            let off = b(k + 1);
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mut x: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    x.sort_by(|p, q| p.total_cmp(q));

    let mut w = Vec::with_capacity(n);
    for xi in x.iter_mut() {
        for _ in 0..3 {
            let (pn, dpn, _) = recurrence(n, *xi, &a, &b);
            if dpn != 0.0 && dpn.is_finite() {
                let step = pn / dpn;
                if step.is_finite() {
                    *xi -= step;
                }
            }
        }
        let (_, _, christoffel) = recurrence(n, *xi, &a, &b);
        w.push(1.0 / christoffel);
    }
    (x, w)
}

/// Returns `(p_n(x), p_n'(x), Σ_{k<n} p_k(x)²)` for the orthonormal family.
fn recurrence(n: usize, x: f64, a: &impl Fn(usize) -> f64, b: &impl Fn(usize) -> f64) -> (f64, f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut sum_sq = 0.0;
    for k in 0..n {
        sum_sq += p * p;
        let bk = if k == 0 { 0.0 } else { b(k) };
        let bk1 = b(k + 1);
        let p_next = ((x - a(k)) * p - bk * p_prev) / bk1;
        let d_next = (p + (x - a(k)) * d - bk * d_prev) / bk1;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d, sum_sq)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_rules() -> Vec<QuadratureRule> {
        vec![
            QuadratureRule::gauss_hermite(64).unwrap(),
            QuadratureRule::gauss_hermite(7).unwrap(),
            QuadratureRule::default_gaussian(),
            QuadratureRule::fast_gaussian(),
            QuadratureRule::gauss_laguerre(64, 0.5).unwrap(),
            QuadratureRule::default_gamma(0.5).unwrap(),
            QuadratureRule::default_gamma(3.0).unwrap(),
        ]
    }

    #[test]
    fn weights_are_positive_and_nodes_increase() {
        for rule in all_rules() {
            assert!(rule.weights().iter().all(|&w| w > 0.0), "{:?}", rule.kind());
            assert!(rule.nodes().windows(2).all(|p| p[1] > p[0]), "{:?}", rule.kind());
        }
    }

    #[test]
    fn hermite_moments() {
        let rule = QuadratureRule::gauss_hermite(64).unwrap();
        assert!((integrate_gaussian(|_| 1.0, &rule).unwrap() - 1.0).abs() < 1e-13);
        assert!((integrate_gaussian(|x| x * x, &rule).unwrap() - 1.0).abs() < 1e-12);
        // exact up to degree 2n - 1 = 13 for seven nodes: E[X^12] = 11!! = 10395
        let small = QuadratureRule::gauss_hermite(7).unwrap();
        let m12 = integrate_gaussian(|x| x.powi(12), &small).unwrap();
        assert!((m12 / 10395.0 - 1.0).abs() < 1e-13);
        let m13 = integrate_gaussian(|x| x.powi(13), &small).unwrap();
        assert!(m13.abs() < 1e-10);
    }

    #[test]
    fn panel_rule_moments() {
        let rule = QuadratureRule::default_gaussian();
        assert!((integrate_gaussian(|_| 1.0, &rule).unwrap() - 1.0).abs() < 1e-13);
        assert!((integrate_gaussian(|x| x * x, &rule).unwrap() - 1.0).abs() < 1e-12);
        assert!((integrate_gaussian(|x| x.powi(4), &rule).unwrap() - 3.0).abs() < 1e-11);
    }

    #[test]
    fn total_probability_example() {
        let s = normal::inv_sf(0.9);
        let f = |x: f64| normal::cdf((s - 0.5 * x) / 0.75f64.sqrt());
        for rule in [QuadratureRule::gauss_hermite(64).unwrap(), QuadratureRule::default_gaussian()] {
            assert!((integrate_gaussian(f, &rule).unwrap() - 0.1).abs() < 1e-8);
        }
    }

    #[test]
    fn tensor_rules() {
        let rule = QuadratureRule::tensor_hermite(32, 2).unwrap();
        assert_eq!(rule.len(), 1024);
        assert!((integrate_gaussian_p(|_| 1.0, &rule).unwrap() - 1.0).abs() < 1e-12);
        assert!(integrate_gaussian_p(|x| x[0] * x[1], &rule).unwrap().abs() < 1e-12);
        let s = normal::inv_sf(0.85);
        let den = (1.0f64 - 0.16 - 0.09).sqrt();
        let p = |x: &[f64]| normal::cdf((s - 0.4 * x[0] - 0.3 * x[1]) / den);
        assert!((integrate_gaussian_p(p, &rule).unwrap() - 0.15).abs() < 1e-8);
        let default2 = QuadratureRule::default_gaussian_p(2).unwrap();
        assert!((integrate_gaussian_p(p, &default2).unwrap() - 0.15).abs() < 1e-8);
        assert!(matches!(
            QuadratureRule::tensor_hermite(4, 4),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn gamma_rules() {
        for rule in [
            QuadratureRule::gauss_laguerre(64, 0.5).unwrap(),
            QuadratureRule::default_gamma(0.5).unwrap(),
        ] {
            assert!((integrate_gamma(|_| 1.0, &rule).unwrap() - 1.0).abs() < 1e-12);
            assert!((integrate_gamma(|x| x, &rule).unwrap() - 2.0).abs() < 1e-10);
            let s = (0.1f64).powf(-0.5) - 1.0;
            let lt = integrate_gamma(|x| (-s * x).exp(), &rule).unwrap();
            // Laplace transform of Gamma(2, 1) at s: (1 + s)^-2 = 0.1
            assert!((lt - 0.1).abs() < 1e-8, "{lt}");
        }
        assert!(QuadratureRule::gauss_laguerre(64, 0.0).is_err());
        assert!(QuadratureRule::gamma_panels(-1.0, 8).is_err());
    }

    #[test]
    fn gamma_panels_handle_steep_laplace_transforms() {
        // Q = 1 - 1e-4 makes exp(-s x) extremely steep
        for theta in [0.2, 0.5, 1.0, 3.0, 10.0] {
            let rule = QuadratureRule::default_gamma(theta).unwrap();
            for q in [1e-4, 0.5, 0.9999] {
                let s = (1.0f64 - q).powf(-theta) - 1.0;
                let v = integrate_gamma(|x| (-s * x).exp(), &rule).unwrap();
                assert!((v - (1.0 - q)).abs() < 1e-9, "theta {theta} q {q}: {v}");
            }
        }
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let rule = QuadratureRule::gauss_hermite(8).unwrap();
        let err = integrate_gaussian(|x| if x > 0.0 { f64::NAN } else { 1.0 }, &rule).unwrap_err();
        assert!(matches!(err, Error::NonFinite { node: 4, .. }));
    }

    #[test]
    fn error_estimate_bounds_refinement() {
        let s = normal::inv_sf(0.7);
        let f = |x: &[f64]| normal::cdf((s - 0.8 * x[0]) / 0.6);
        let base = QuadratureRule::gauss_hermite(16).unwrap();
        let est = base.integrate_with_error(f).unwrap();
        let fine = QuadratureRule::gauss_hermite(32).unwrap().integrate(f).unwrap();
        assert!((fine - est.value).abs() <= est.error);
    }
}
