//! Simulation of survival-probability paths and the Merton bridge.
//!
//! Under `dQ_i = σ̄_i ξ(t) φ(Φ⁻¹(Q_i)) dW_i` the transform `Z_i = Φ⁻¹(Q_i)`
//! solves the linear equation `dZ_i = σ̄_i ξ dW_i + ½ σ̄_i² ξ² Z_i dt`, so
//! with `I = ∫_t^{t+Δ} ξ²`
//!
//! ```text
//! Z_{t+Δ} = e^{σ̄_i² I / 2} Z_t + ε_i,
//! Cov(ε_i, ε_j) = ρ_ij σ̄_iσ̄_j (e^{s I} − 1) / s,   s = (σ̄_i² + σ̄_j²) / 2,
//! ```
//!
//! which [`simulate_exact`] samples without discretization error.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::copula::{cond_default_gauss1f, cumulative};
use crate::error::{domain, Error, Result};
use crate::linalg::psd_factor;
use crate::model::{CopulaSpec, DynamicsSpec, MarketState};
use crate::normal;
use crate::parallel::fill_blocks;

/// Simulated survival probabilities are kept inside `[Q_FLOOR, 1 − Q_FLOOR]`.
pub const Q_FLOOR: f64 = 1e-10;

/// Clamp rate above which the Euler schemes log a warning.
pub const CLAMP_WARN_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExactZ,
    Euler,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ExactZ => "exact_z",
            Scheme::Euler => "euler",
        }
    }
}

/// Survival-probability paths on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub maturity: f64,
    pub names: Vec<String>,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Path-major values: `q[(path * times.len() + step) * n + name]`.
    pub q: Vec<f64>,
    /// Number of values pushed back into `[Q_FLOOR, 1 − Q_FLOOR]`.
    pub clamped: usize,
}

impl PathSet {
    pub fn n_names(&self) -> usize {
        self.names.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Survival probabilities of every name at one grid time.
    pub fn at(&self, path: usize, step: usize) -> &[f64] {
        let n = self.n_names();
        let k = (path * self.n_times() + step) * n;
        &self.q[k..k + n]
    }

    pub fn path(&self, path: usize) -> &[f64] {
        let w = self.n_times() * self.n_names();
        &self.q[path * w..(path + 1) * w]
    }

    pub fn clamp_rate(&self) -> f64 {
        let total = self.q.len().saturating_sub(self.n_paths * self.n_names());
        if total == 0 {
            0.0
        } else {
            self.clamped as f64 / total as f64
        }
    }

    /// Keeps every `stride`-th grid time (always including the first).
    pub fn subsample(&self, stride: usize) -> Result<PathSet> {
        if stride == 0 {
            return domain("stride must be positive");
        }
        let keep: Vec<usize> = (0..self.n_times()).step_by(stride).collect();
        let n = self.n_names();
        let mut q = Vec::with_capacity(self.n_paths * keep.len() * n);
        for p in 0..self.n_paths {
            for &m in &keep {
                q.extend_from_slice(self.at(p, m));
            }
        }
        Ok(PathSet {
            times: keep.iter().map(|&m| self.times[m]).collect(),
            q,
            ..self.clone()
        })
    }
}

/// `n_steps + 1` equally spaced times starting at `start`.
pub fn uniform_grid(start: f64, step: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps).map(|m| start + step * m as f64).collect()
}

fn check_grid(grid: &[f64], market: &MarketState) -> Result<()> {
    if grid.len() < 2 {
        return domain("time grid needs at least two points");
    }
    if (grid[0] - market.time()).abs() > 1e-12 {
        return domain(format!(
            "time grid starts at {} but the market is observed at {}",
            grid[0],
            market.time()
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("time grid must increase strictly");
    }
    let last = grid[grid.len() - 1];
    if !(last < market.maturity()) {
        return domain(format!(
            "time grid reaches {last}, not before maturity {}; survival probabilities degenerate there",
            market.maturity()
        ));
    }
    if market.any_defaulted() {
        return domain("simulation starts from a market with defaulted names");
    }
    Ok(())
}

/// Per-path generator: one ChaCha stream per path, so adding paths never
/// changes the earlier ones.
fn path_rng(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

fn normals(rng: &mut ChaCha8Rng, out: &mut DVector<f64>) {
    for e in out.iter_mut() {
        *e = StandardNormal.sample(rng);
    }
}

fn clamp(q: f64, clamped: &mut usize) -> f64 {
    if q < Q_FLOOR {
        *clamped += 1;
        Q_FLOOR
    } else if q > 1.0 - Q_FLOOR {
        *clamped += 1;
        1.0 - Q_FLOOR
    } else {
        q
    }
}

fn warn_clamps(set: &PathSet, what: &str) {
    let rate = set.clamp_rate();
    if rate > CLAMP_WARN_RATE {
        log::warn!("{what}: {:.2}% of simulated values clamped", 100.0 * rate);
    }
}

fn check_spec(spec: &DynamicsSpec, market: &MarketState) -> Result<()> {
    spec.validate(market.maturity())?;
    if spec.len() != market.len() {
        return Err(Error::Shape(format!(
            "dynamics for {} names, market has {}",
            spec.len(),
            market.len()
        )));
    }
    Ok(())
}

/// Per-step transition `Z ↦ a ∘ Z + L e`.
struct ExactStep {
    growth: Vec<f64>,
    factor: DMatrix<f64>,
}

fn exact_steps(spec: &DynamicsSpec, grid: &[f64], maturity: f64) -> Result<Vec<ExactStep>> {
    let n = spec.len();
    let s = &spec.sigma_bar;
    grid.windows(2)
        .map(|w| {
            let big_i = spec.xi.integral_sq(w[0], w[1], maturity);
            let growth = s.iter().map(|si| (0.5 * si * si * big_i).exp()).collect();
            let cov = DMatrix::from_fn(n, n, |i, j| {
                let h = 0.5 * (s[i] * s[i] + s[j] * s[j]);
                let g = if h > 0.0 { (h * big_i).exp_m1() / h } else { big_i };
                spec.spread_corr[(i, j)] * s[i] * s[j] * g
            });
            let factor = if cov.iter().all(|&c| c == 0.0) {
                cov
            } else {
                psd_factor(&cov)?
            };
            Ok(ExactStep { growth, factor })
        })
        .collect()
}

/// Exact sampling in `Z = Φ⁻¹(Q)`. A historical drift `μ`, when present, is
/// added afterwards in `Q` space with an Euler step.
pub fn simulate_exact(
    spec: &DynamicsSpec,
    market: &MarketState,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    check_spec(spec, market)?;
    check_grid(grid, market)?;
    let n = market.len();
    let steps = exact_steps(spec, grid, market.maturity())?;
    let z0: Vec<f64> = market.survival().iter().map(|&q| normal::inv_cdf(q)).collect();
    let width = grid.len() * n;
    let mut q = vec![0.0; n_paths * width];
    let clamped = fill_blocks(&mut q, width, |p, out| {
        let mut rng = path_rng(seed, p);
        let mut z = DVector::from_column_slice(&z0);
        let mut e = DVector::zeros(n);
        let mut clamped = 0;
        out[..n].copy_from_slice(market.survival());
        for (m, step) in steps.iter().enumerate() {
            normals(&mut rng, &mut e);
            let shock = &step.factor * &e;
            for i in 0..n {
                z[i] = step.growth[i] * z[i] + shock[i];
            }
            let row = &mut out[(m + 1) * n..(m + 2) * n];
            for i in 0..n {
                let mut qi = normal::cdf(z[i]);
                if let Some(mu) = &spec.drift {
                    qi += mu(i, grid[m], qi) * (grid[m + 1] - grid[m]);
                    qi = clamp(qi, &mut clamped);
                    z[i] = normal::inv_cdf(qi);
                }
                row[i] = clamp(qi, &mut clamped);
            }
        }
        clamped
    });
    let set = PathSet {
        times: grid.to_vec(),
        maturity: market.maturity(),
        names: market.names().to_vec(),
        n_paths,
        seed,
        scheme: Scheme::ExactZ,
        q,
        clamped,
    };
    warn_clamps(&set, "exact scheme");
    Ok(set)
}

/// Euler–Maruyama in `Q` space with clamping to `[Q_FLOOR, 1 − Q_FLOOR]`.
pub fn simulate_euler(
    spec: &DynamicsSpec,
    market: &MarketState,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    check_spec(spec, market)?;
    check_grid(grid, market)?;
    let n = market.len();
    let chol = psd_factor(&spec.spread_corr)?;
    let t_mat = market.maturity();
    let width = grid.len() * n;
    let mut q = vec![0.0; n_paths * width];
    let clamped = fill_blocks(&mut q, width, |p, out| {
        let mut rng = path_rng(seed, p);
        let mut e = DVector::zeros(n);
        let mut clamped = 0;
        out[..n].copy_from_slice(market.survival());
        for m in 0..grid.len() - 1 {
            let (t, dt) = (grid[m], grid[m + 1] - grid[m]);
            let vol = spec.xi.value(t, t_mat) * dt.sqrt();
            normals(&mut rng, &mut e);
            let dw = &chol * &e;
            for i in 0..n {
                let qi = out[m * n + i];
                let mut next = qi + spec.sigma_bar[i] * vol * normal::pdf(normal::inv_cdf(qi)) * dw[i];
                if let Some(mu) = &spec.drift {
                    next += mu(i, t, qi) * dt;
                }
                out[(m + 1) * n + i] = clamp(next, &mut clamped);
            }
        }
        clamped
    });
    let set = PathSet {
        times: grid.to_vec(),
        maturity: t_mat,
        names: market.names().to_vec(),
        n_paths,
        seed,
        scheme: Scheme::Euler,
        q,
        clamped,
    };
    warn_clamps(&set, "Euler scheme");
    Ok(set)
}

/// Loading of name `i` on the common driver in the Clayton dynamics,
/// `β(Q) = √(1 − (1 − Q)^θ)`.
pub fn clayton_beta(theta: f64, q: f64) -> f64 {
    (1.0 - (1.0 - q).powf(theta)).max(0.0).sqrt()
}

/// Volatility `σ₀ (1 − Q) β(Q)` under which Clayton prices are martingales.
pub fn clayton_sigma(theta: f64, sigma0: f64, q: f64) -> f64 {
    sigma0 * (1.0 - q) * clayton_beta(theta, q)
}

/// Euler simulation of `dQ_i = σ_i (β_i dZ + √(1 − β_i²) dZ_i*)` with one
/// common and `n` idiosyncratic Brownian motions.
pub fn simulate_clayton(
    theta: f64,
    sigma0: f64,
    market: &MarketState,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    if !(theta > 0.0 && theta.is_finite()) {
        return domain(format!("theta {theta} must be positive"));
    }
    if !(sigma0 > 0.0 && sigma0.is_finite()) {
        return domain(format!("sigma0 {sigma0} must be positive"));
    }
    check_grid(grid, market)?;
    let n = market.len();
    let width = grid.len() * n;
    let mut q = vec![0.0; n_paths * width];
    let clamped = fill_blocks(&mut q, width, |p, out| {
        let mut rng = path_rng(seed, p);
        let mut e = DVector::zeros(n + 1);
        let mut clamped = 0;
        out[..n].copy_from_slice(market.survival());
        for m in 0..grid.len() - 1 {
            let sq = (grid[m + 1] - grid[m]).sqrt();
            normals(&mut rng, &mut e);
            for i in 0..n {
                let qi = out[m * n + i];
                let b = clayton_beta(theta, qi);
                let dv = b * e[0] + (1.0 - b * b).max(0.0).sqrt() * e[i + 1];
                let next = qi + clayton_sigma(theta, sigma0, qi) * sq * dv;
                out[(m + 1) * n + i] = clamp(next, &mut clamped);
            }
        }
        clamped
    });
    let set = PathSet {
        times: grid.to_vec(),
        maturity: market.maturity(),
        names: market.names().to_vec(),
        n_paths,
        seed,
        scheme: Scheme::Euler,
        q,
        clamped,
    };
    warn_clamps(&set, "Clayton scheme");
    Ok(set)
}

// --- Merton bridge -----------------------------------------------------------

/// Exponent of the substitution `T − u = (T − t) v^8`, which smooths
/// integrable power singularities of `ψ²` at maturity.
const SINGULAR_POWER: i32 = 8;

/// `∫_t^T g(u) du` for `g` possibly singular like `(T − u)^a`, `a > −7/8`.
fn integral_to_maturity(g: impl Fn(f64) -> f64, t: f64, maturity: f64) -> f64 {
    let span = maturity - t;
    let k = SINGULAR_POWER as f64;
    cumulative(
        |v| {
            if v <= 0.0 {
                return 0.0;
            }
            let vk1 = v.powi(SINGULAR_POWER - 1);
            g(maturity - span * vk1 * v) * span * k * vk1
        },
        0.0,
        1.0,
        1.0 / 64.0,
    )
}

/// Scalar function of time.
pub type TimeFn<'a> = &'a dyn Fn(f64) -> f64;

/// `β_t = ψ(t) / √(∫_t^T ψ²)`.
pub fn merton_beta_from_psi(psi: TimeFn<'_>, t: f64, maturity: f64) -> Result<f64> {
    if !(t >= 0.0 && t < maturity) {
        return domain(format!("time {t} outside [0, {maturity})"));
    }
    let mass = integral_to_maturity(|u| psi(u) * psi(u), t, maturity);
    if !(mass > 0.0) || !mass.is_finite() {
        return domain(format!("∫ψ² over [{t}, {maturity}] is {mass}"));
    }
    Ok(psi(t) / mass.sqrt())
}

/// `ψ(t) = C β_t exp(−½ ∫_0^t β²)`, the inverse of
/// [`merton_beta_from_psi`] up to the constant `C`.
pub fn merton_psi_from_beta(beta: TimeFn<'_>, t: f64, maturity: f64, c: f64) -> Result<f64> {
    if !(t >= 0.0 && t < maturity) {
        return domain(format!("time {t} outside [0, {maturity})"));
    }
    // ∫_0^t β² in y = ln(T − u), where β² ~ 1/(T − u) becomes smooth
    let (ya, yb) = ((maturity - t).ln(), maturity.ln());
    let acc = cumulative(
        |y| {
            let gap = y.exp();
            let b = beta(maturity - gap);
            b * b * gap
        },
        ya,
        yb,
        0.05,
    );
    if !acc.is_finite() {
        return domain(format!("∫β² up to {t} is not finite"));
    }
    Ok(c * beta(t) * (-0.5 * acc).exp())
}

/// `ρ_ij ∫ψ_iψ_j / √(∫ψ_i² ∫ψ_j²)` over `[0, T]`.
pub fn merton_asset_correlation(
    psi_i: TimeFn<'_>,
    psi_j: TimeFn<'_>,
    rho_ij: f64,
    maturity: f64,
) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho_ij) {
        return domain(format!("correlation {rho_ij} outside [-1, 1]"));
    }
    let ii = integral_to_maturity(|u| psi_i(u) * psi_i(u), 0.0, maturity);
    let jj = integral_to_maturity(|u| psi_j(u) * psi_j(u), 0.0, maturity);
    let ij = integral_to_maturity(|u| psi_i(u) * psi_j(u), 0.0, maturity);
    if !(ii > 0.0 && jj > 0.0) {
        return domain("ψ has zero mass on [0, T]");
    }
    Ok(rho_ij * ij / (ii * jj).sqrt())
}

/// `ψ(u) = σ̄ (1 − u/T)^{(σ̄²T − 1)/2}`, whose `β` is `σ̄/√(1 − t/T)`.
pub fn merton_power_psi(sigma_bar: f64, maturity: f64) -> impl Fn(f64) -> f64 {
    let e = 0.5 * (sigma_bar * sigma_bar * maturity - 1.0);
    move |u| sigma_bar * (1.0 - u / maturity).max(0.0).powf(e)
}

/// One-period Merton model: name `i` survives when
/// `∫_0^T ψ_i dW_i ≤ b̄_i`, with `W_i = θ_i W + √(1 − θ_i²) W_i*`.
pub struct MertonSpec {
    pub psi: Vec<Box<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub thresholds: Vec<f64>,
    pub theta: Vec<f64>,
    pub maturity: f64,
}

impl std::fmt::Debug for MertonSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MertonSpec")
            .field("thresholds", &self.thresholds)
            .field("theta", &self.theta)
            .field("maturity", &self.maturity)
            .finish()
    }
}

impl MertonSpec {
    /// `ψ ≡ 1` with thresholds `√T Φ⁻¹(Q_i)` matching the market.
    pub fn standard(market: &MarketState, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != market.len() {
            return Err(Error::Shape("one loading per name".into()));
        }
        if let Some(t) = theta.iter().find(|t| !(t.abs() < 1.0)) {
            return domain(format!("loading {t} must lie in (-1, 1)"));
        }
        let horizon = market.maturity() - market.time();
        Ok(Self {
            psi: (0..market.len())
                .map(|_| Box::new(|_: f64| 1.0) as Box<dyn Fn(f64) -> f64 + Send + Sync>)
                .collect(),
            thresholds: market
                .survival()
                .iter()
                .map(|&q| horizon.sqrt() * normal::inv_cdf(q))
                .collect(),
            theta,
            maturity: market.maturity(),
        })
    }

    /// `Q_i(t) = Φ((b̄_i − ∫_0^t ψ_i dW_i) / √(∫_t^T ψ_i²))`.
    pub fn survival(&self, i: usize, t: f64, accumulated: f64) -> Result<f64> {
        let psi = &self.psi[i];
        let mass = integral_to_maturity(|u| psi(u) * psi(u), t, self.maturity);
        if !(mass > 0.0) {
            return domain(format!("∫ψ² over [{t}, {}] vanishes", self.maturity));
        }
        Ok(normal::cdf((self.thresholds[i] - accumulated) / mass.sqrt()))
    }
}

/// Outcome of [`check_conditional_martingale`], one entry per name.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    /// Unconditional default probability `1 − Q_0` per name.
    pub p0: Vec<f64>,
    /// Monte Carlo mean of `p_{t|x}` per name and grid time.
    pub mean: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
    /// Mean over paths of the least-squares slope of `p_{t|x}` on `t`.
    pub slope: Vec<f64>,
    pub slope_std_err: Vec<f64>,
}

impl MartingaleReport {
    /// Largest `|mean − p0| / s.e.` over names and times.
    pub fn max_mean_score(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, row) in self.mean.iter().enumerate() {
            for (m, &v) in row.iter().enumerate() {
                let se = self.std_err[j][m];
                if se > 0.0 {
                    worst = worst.max((v - self.p0[j]).abs() / se);
                }
            }
        }
        worst
    }

    /// Largest `|slope| / s.e.` over names.
    pub fn max_slope_score(&self) -> f64 {
        self.slope
            .iter()
            .zip(&self.slope_std_err)
            .map(|(s, e)| if *e > 0.0 { s.abs() / e } else { 0.0 })
            .fold(0.0, f64::max)
    }
}

/// Simulates the standard Merton model (`ψ ≡ 1`) behind a one-factor
/// Gaussian copula and tracks the conditional default probabilities
/// `p_{j,t|x}` with `x = −(W_T − W_t)/√(T − t)`, which should be martingales
/// in the filtration that includes the common factor.
pub fn check_conditional_martingale(
    copula: &CopulaSpec,
    market: &MarketState,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<MartingaleReport> {
    let n = market.len();
    copula.validate(n)?;
    let rho = match copula {
        CopulaSpec::Gauss1F { loadings } => loadings.clone(),
        _ => return Err(Error::Unsupported("martingale check needs a one-factor Gaussian copula".into())),
    };
    check_grid(grid, market)?;
    if n_paths < 2 {
        return domain("martingale check needs at least two paths");
    }
    let spec = MertonSpec::standard(market, rho.clone())?;
    let (t0, t_mat) = (grid[0], market.maturity());
    let m = grid.len();
    // per path: p for every (name, time), then the slope per name
    let width = n * m + n;
    let mut buf = vec![0.0; n_paths * width];
    fill_blocks(&mut buf, width, |p, out| {
        let mut rng = path_rng(seed, p);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut w_common = vec![0.0; m];
        let mut w_own = vec![vec![0.0; m]; n];
        for k in 1..m {
            let sq = (grid[k] - grid[k - 1]).sqrt();
            w_common[k] = w_common[k - 1] + sq * draw();
            for own in w_own.iter_mut() {
                own[k] = own[k - 1] + sq * draw();
            }
        }
        let w_end = w_common[m - 1] + (t_mat - grid[m - 1]).sqrt() * draw();
        for j in 0..n {
            let r = rho[j];
            let r_perp = (1.0 - r * r).sqrt();
            for k in 0..m {
                let left = t_mat - grid[k];
                let w_j = r * w_common[k] + r_perp * w_own[j][k];
                let q_t = normal::cdf((spec.thresholds[j] - w_j) / left.sqrt());
                let x = -(w_end - w_common[k]) / left.sqrt();
                let q_t = q_t.clamp(Q_FLOOR, 1.0 - Q_FLOOR);
                out[j * m + k] = cond_default_gauss1f(q_t, r, x).unwrap_or(f64::NAN);
            }
            let row = &out[j * m..(j + 1) * m];
            out[n * m + j] = ols_slope(grid, row);
        }
        0
    });
    if let Some(k) = buf.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            node: k / width,
            value: buf[k],
        });
    }
    let np = n_paths as f64;
    let stats = |idx: &dyn Fn(usize) -> usize| -> (f64, f64) {
        let (mut s, mut s2) = (0.0, 0.0);
        for p in 0..n_paths {
            let v = buf[p * width + idx(p)];
            s += v;
            s2 += v * v;
        }
        let mean = s / np;
        let var = ((s2 - np * mean * mean) / (np - 1.0)).max(0.0);
        (mean, (var / np).sqrt())
    };
    let mut report = MartingaleReport {
        times: grid.iter().map(|t| t - t0).collect(),
        p0: market.survival().iter().map(|q| 1.0 - q).collect(),
        mean: vec![Vec::with_capacity(m); n],
        std_err: vec![Vec::with_capacity(m); n],
        slope: Vec::with_capacity(n),
        slope_std_err: Vec::with_capacity(n),
    };
    for j in 0..n {
        for k in 0..m {
            let (mean, se) = stats(&|_| j * m + k);
            report.mean[j].push(mean);
            report.std_err[j].push(se);
        }
        let (slope, se) = stats(&|_| n * m + j);
        report.slope.push(slope);
        report.slope_std_err.push(se);
    }
    Ok(report)
}

fn ols_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(y) {
        sxy += (a - tm) * (b - ym);
        sxx += (a - tm) * (a - tm);
    }
    sxy / sxx
}
