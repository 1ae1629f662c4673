//! Run configuration in TOML. Every section is optional; unknown keys are
//! rejected. A minimal example:
//!
//! ```toml
//! seed = 7
//!
//! [market]
//! survival = [0.95, 0.95, 0.9, 0.9]
//! recovery = 0.4
//! maturity = 5.0
//!
//! [copula]
//! kind = "flat"
//! rho = 0.5
//!
//! [payoff]
//! kind = "fptd"
//! order = 1
//!
//! [dynamics]
//! sigma_bar = [0.5]
//! uniform_corr = 0.3
//! xi = { kind = "constant" }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::backtest::constant_xi;
use crate::copula::default_rule;
use crate::error::{domain, Error, Result};
use crate::io::{ingest_quotes, read_correlation_csv};
use crate::model::{BasketPayoff, CopulaSpec, DynamicsSpec, MarketState, Xi};
use crate::quadrature::QuadratureRule;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub market: Option<MarketConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copula: Option<CopulaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<PayoffConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backtest: Option<BacktestConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    /// Homogeneous basket: `n` names with survival probability `q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survival: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazards: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maturity: Option<f64>,
    /// Quote CSV and the date to take from it (first date when omitted).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quotes: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<String>,
}

pub const DEFAULT_RECOVERY: f64 = 0.4;
pub const DEFAULT_MATURITY: f64 = 5.0;

impl MarketConfig {
    pub fn build(&self) -> Result<MarketState> {
        let recovery = self.recovery.unwrap_or(DEFAULT_RECOVERY);
        let maturity = self.maturity.unwrap_or(DEFAULT_MATURITY);
        let sources = [
            self.quotes.is_some(),
            self.survival.is_some(),
            self.hazards.is_some(),
            self.q.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(Error::Parse(
                "market: give exactly one of quotes, survival, hazards or q".into(),
            ));
        }
        let market = if let Some(path) = &self.quotes {
            let series = ingest_quotes(fs::File::open(path).map_err(|e| {
                Error::Io(format!("{}: {e}", path.display()))
            })?)?;
            let m = match &self.date {
                Some(d) => series.get(d).cloned(),
                None => series.markets.first().cloned(),
            };
            return m.ok_or_else(|| Error::Parse("market: requested date not found in quotes".into()));
        } else if let Some(s) = &self.survival {
            MarketState::from_survival(s.clone(), recovery, maturity)?
        } else if let Some(h) = &self.hazards {
            MarketState::from_hazards(h, recovery, maturity)?
        } else {
            let n = self
                .n
                .ok_or_else(|| Error::Parse("market: q needs n".into()))?;
            MarketState::homogeneous(n, self.q.expect("checked"), recovery, maturity)?
        };
        match &self.names {
            None => Ok(market),
            Some(names) => MarketState::new(
                names.clone(),
                maturity,
                0.0,
                market.survival().to_vec(),
                market.recovery().to_vec(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CopulaConfig {
    /// Same loading `rho` for every name.
    Flat { rho: f64 },
    Gauss1f { loadings: Vec<f64> },
    GaussPf { loadings: Vec<Vec<f64>> },
    Clayton { theta: f64 },
}

impl CopulaConfig {
    pub fn build(&self, n: usize) -> Result<CopulaSpec> {
        let c = match self {
            CopulaConfig::Flat { rho } => CopulaSpec::gauss_flat(n, *rho),
            CopulaConfig::Gauss1f { loadings } => CopulaSpec::Gauss1F {
                loadings: loadings.clone(),
            },
            CopulaConfig::GaussPf { loadings } => CopulaSpec::GaussPF {
                loadings: loadings.clone(),
            },
            CopulaConfig::Clayton { theta } => CopulaSpec::Clayton { theta: *theta },
        };
        c.validate(n)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    Fptd { order: usize },
    StopLoss { order: usize },
    WorstOfDigital,
    /// Payoff for every default vector, indexed by the bit mask of defaulted
    /// names (bit `i` for name `i`).
    Table { values: Vec<f64> },
}

impl PayoffConfig {
    pub fn build(&self, market: &MarketState) -> Result<BasketPayoff> {
        let n = market.len();
        let recovery = || {
            market
                .common_recovery()
                .ok_or_else(|| Error::Domain("payoff needs a common recovery".into()))
        };
        match self {
            PayoffConfig::Fptd { order } => BasketPayoff::fptd(n, *order, recovery()?),
            PayoffConfig::StopLoss { order } => BasketPayoff::stop_loss(n, *order, recovery()?),
            PayoffConfig::WorstOfDigital => Ok(BasketPayoff::worst_of_digital(n)),
            PayoffConfig::Table { values } => BasketPayoff::from_table(n, values.clone()),
        }
    }

    pub fn fptd_order(&self) -> Option<usize> {
        match self {
            PayoffConfig::Fptd { order } => Some(*order),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XiConfig {
    Merton,
    Constant,
    Power { alpha: f64 },
    Table { knots: Vec<f64>, values: Vec<f64> },
}

impl XiConfig {
    pub fn build(&self) -> Xi {
        match self {
            XiConfig::Merton => Xi::Merton,
            XiConfig::Constant => constant_xi(),
            XiConfig::Power { alpha } => Xi::PowerAlpha { alpha: *alpha },
            XiConfig::Table { knots, values } => Xi::Table {
                knots: knots.clone(),
                values: values.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    /// One value per name, or a single value for all names.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_bar: Option<Vec<f64>>,
    /// Normalized volatilities `β_i` for the drift and break-even commands;
    /// defaults to `sigma_bar`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
    /// Survival-probability volatilities `σ_i` for non-Gaussian kernels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<XiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_corr: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_corr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spread_corr_file: Option<PathBuf>,
}

/// Expands a single value to `n` copies; otherwise requires length `n`.
pub fn broadcast(v: &[f64], n: usize, what: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(Error::Shape(format!("{k} {what} values for {n} names"))),
    }
}

impl DynamicsConfig {
    pub fn spread_corr(&self, names: &[String]) -> Result<DMatrix<f64>> {
        let n = names.len();
        let given = [
            self.spread_corr.is_some(),
            self.uniform_corr.is_some(),
            self.spread_corr_file.is_some(),
        ];
        match given.iter().filter(|&&g| g).count() {
            0 => return Err(Error::Parse("dynamics: no spread correlation given".into())),
            1 => {}
            _ => return Err(Error::Parse("dynamics: give one spread correlation source".into())),
        }
        if let Some(rows) = &self.spread_corr {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Shape(format!("spread_corr must be {n}x{n}")));
            }
            return Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
        }
        if let Some(c) = self.uniform_corr {
            return Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { c }));
        }
        let path = self.spread_corr_file.as_ref().expect("checked");
        let f = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        read_correlation_csv(f, Some(names))
    }

    pub fn sigma_bar(&self, n: usize) -> Result<Vec<f64>> {
        let s = self
            .sigma_bar
            .as_ref()
            .ok_or_else(|| Error::Parse("dynamics: sigma_bar missing".into()))?;
        broadcast(s, n, "sigma_bar")
    }

    pub fn betas(&self, n: usize) -> Result<Vec<f64>> {
        match (&self.betas, &self.sigma_bar) {
            (Some(b), _) => broadcast(b, n, "beta"),
            (None, Some(s)) => broadcast(s, n, "sigma_bar"),
            _ => Err(Error::Parse("dynamics: betas or sigma_bar missing".into())),
        }
    }

    pub fn build(&self, market: &MarketState) -> Result<DynamicsSpec> {
        let n = market.len();
        let spec = DynamicsSpec::new(
            self.sigma_bar(n)?,
            self.xi.clone().unwrap_or(XiConfig::Merton).build(),
            self.spread_corr(market.names())?,
        );
        spec.validate(market.maturity())?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeConfig {
    #[default]
    Exact,
    Euler,
    Clayton,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeConfig>,
    /// Clayton dynamics parameters (scheme = "clayton").
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuadratureConfig {
    Panels {
        panels: usize,
        per_panel: usize,
        half_width: f64,
    },
    Hermite {
        nodes: usize,
    },
    GammaPanels {
        per_panel: usize,
    },
    Laguerre {
        nodes: usize,
    },
}

impl QuadratureConfig {
    pub fn build(&self, copula: &CopulaSpec) -> Result<QuadratureRule> {
        let base = match self {
            QuadratureConfig::Panels {
                panels,
                per_panel,
                half_width,
            } => QuadratureRule::gaussian_panels(*panels, *per_panel, *half_width)?,
            QuadratureConfig::Hermite { nodes } => QuadratureRule::gauss_hermite(*nodes)?,
            QuadratureConfig::GammaPanels { per_panel } | QuadratureConfig::Laguerre { nodes: per_panel } => {
                let theta = match copula {
                    CopulaSpec::Clayton { theta } => *theta,
                    _ => return domain("Gamma rules need a Clayton copula"),
                };
                return match self {
                    QuadratureConfig::Laguerre { .. } => QuadratureRule::gauss_laguerre(*per_panel, theta),
                    _ => QuadratureRule::gamma_panels(theta, *per_panel),
                };
            }
        };
        match copula.factor_dim() {
            1 => Ok(base),
            p => QuadratureRule::tensor(&base, p),
        }
    }
}

/// Rule from an optional override, else the copula default.
pub fn rule_for(q: Option<&QuadratureConfig>, copula: &CopulaSpec) -> Result<QuadratureRule> {
    match q {
        Some(q) => q.build(copula),
        None => default_rule(copula),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestConfig {
    /// Rolling window length in steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_sq_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookback: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn emit(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn market(&self) -> Result<MarketState> {
        self.market
            .as_ref()
            .ok_or_else(|| Error::Parse("no market section".into()))?
            .build()
    }

    pub fn copula(&self, n: usize) -> Result<CopulaSpec> {
        self.copula
            .as_ref()
            .ok_or_else(|| Error::Parse("no copula section".into()))?
            .build(n)
    }

    pub fn payoff(&self, market: &MarketState) -> Result<BasketPayoff> {
        self.payoff
            .as_ref()
            .ok_or_else(|| Error::Parse("no payoff section".into()))?
            .build(market)
    }

    pub fn dynamics(&self) -> Result<&DynamicsConfig> {
        self.dynamics
            .as_ref()
            .ok_or_else(|| Error::Parse("no dynamics section".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 7

[market]
survival = [0.95, 0.95, 0.9, 0.9]
recovery = 0.4
maturity = 5.0

[copula]
kind = "flat"
rho = 0.5

[payoff]
kind = "fptd"
order = 1

[dynamics]
sigma_bar = [0.5]
uniform_corr = 0.3
xi = { kind = "constant" }

[quadrature]
kind = "panels"
panels = 16
per_panel = 8
half_width = 8.0
"#;

    #[test]
    fn round_trip() {
        let a = RunConfig::parse(EXAMPLE).unwrap();
        let b = RunConfig::parse(&a.emit().unwrap()).unwrap();
        assert_eq!(a, b);
        let m = a.market().unwrap();
        assert_eq!(m.len(), 4);
        let d = a.dynamics().unwrap().build(&m).unwrap();
        assert_eq!(d.sigma_bar, vec![0.5; 4]);
        assert!(matches!(a.payoff(&m).unwrap().kind(), crate::model::PayoffKind::FpTD { order: 1, .. }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::parse("[market]\nsurvival = [0.9]\nrecoverry = 0.4\n").unwrap_err();
        assert!(e.to_string().contains("recoverry"), "{e}");
        assert!(RunConfig::parse("[copula]\nkind = \"flat\"\nrho = 0.1\nextra = 1\n").is_err());
        assert!(RunConfig::parse("bogus = 1\n").is_err());
    }

    #[test]
    fn market_sources_are_exclusive() {
        let c = RunConfig::parse("[market]\nsurvival = [0.9]\nhazards = [0.1]\n").unwrap();
        assert!(c.market().is_err());
    }
}
