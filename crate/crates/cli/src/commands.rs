use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use breakeven::backtest::{
    candidate_grid, empirical_breakeven, hedge_family, run_four_name_study, run_hedge_all,
    run_skew_study, smooth_breakeven, FourNameStudy, ScenarioKind, ScenarioTable, SkewStudy,
    Variant,
};
use breakeven::config::{
    broadcast, rule_for, CopulaConfig, MarketConfig, PayoffConfig, QuadratureConfig, RunConfig,
    SchemeConfig, XiConfig,
};
use breakeven::copula::{kernel_for, sigma_from_beta};
use breakeven::drift::{
    build_breakeven_matrix, check_replication_pde, drift_fptd, drift_gauss, drift_general,
    solve_breakeven_flat, PdeGrid,
};
use breakeven::dynamics::{
    clayton_beta, clayton_sigma, simulate_clayton, simulate_euler, simulate_exact, uniform_grid,
    PathSet,
};
use breakeven::io::{fmt_num, read_paths_csv, write_matrix_csv, write_paths_csv};
use breakeven::model::{CopulaSpec, DriftReport, MarketState};
use breakeven::pricer::{deltas_with, price_with, DeltaMode};
use breakeven::{Error, Result};

use crate::args::{Cli, Command, Model, Scenario, SchemeArg, SkewArg};

/// Hazard rate given to every name when no market data is supplied.
const DEFAULT_HAZARD: f64 = 0.05;
const DEFAULT_STEPS: usize = 180;
const DEFAULT_DT: f64 = 1.0 / 365.0;
const DEFAULT_PATHS: usize = 100;
const DEFAULT_SEED: u64 = 1;
const DEFAULT_SIGMA0: f64 = 0.3;
/// Previous values entering the smoothed break-even.
const SMOOTH_LOOKBACK: usize = 3;

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.out.is_some() {
        cfg.output = cli.out.clone();
    }
    let mut out = open_output(cfg.output.as_deref())?;
    match &cli.command {
        Command::Price(m) => price(&apply(&cfg, m)?, m, &mut out)?,
        Command::Deltas { model, bump } => deltas(&apply(&cfg, model)?, *bump, &mut out)?,
        Command::Drift(m) => drift(&apply(&cfg, m)?, &mut out)?,
        Command::Breakeven(m) => breakeven(&apply(&cfg, m)?, &mut out)?,
        Command::Matrix {
            model,
            rank,
            loadings_out,
        } => matrix(&apply(&cfg, model)?, *rank, loadings_out.as_deref(), &mut out)?,
        Command::Simulate { model, sigma0 } => {
            let cfg = apply(&cfg, model)?;
            let set = simulate(&cfg, *sigma0)?;
            write_paths_csv(&mut out, &set)?;
        }
        Command::Hedge {
            model,
            paths_file,
            window,
            smooth,
            lookback,
        } => {
            let cfg = apply(&cfg, model)?;
            hedge(&cfg, model, paths_file.as_deref(), *window, *smooth, *lookback, &mut out)?
        }
        Command::Scenario(s) => scenario(&cfg, s, &mut out)?,
        Command::CheckPde {
            model,
            sigma0,
            grid_q,
            grid_x,
        } => check_pde(&apply(&cfg, model)?, *sigma0, grid_q.clone(), grid_x.clone(), &mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
    ))
}

// --- flags over config ----------------------------------------------------------

enum NameArg {
    Count(usize),
    List(Vec<String>),
}

fn parse_names(s: &str) -> NameArg {
    match s.trim().parse::<usize>() {
        Ok(n) => NameArg::Count(n),
        Err(_) => NameArg::List(s.split(',').map(|x| x.trim().to_string()).collect()),
    }
}

/// Name count implied by the flags, if any.
fn flag_count(m: &Model) -> Option<usize> {
    let from_names = m.names.as_deref().map(|s| match parse_names(s) {
        NameArg::Count(n) => n,
        NameArg::List(v) => v.len(),
    });
    let lens = [&m.survival, &m.hazards, &m.beta, &m.sigma_bar, &m.loadings, &m.sigmas];
    from_names
        .or(m.n)
        .or_else(|| lens.iter().filter_map(|v| v.as_ref()).map(Vec::len).find(|&k| k > 1))
}

fn expand(v: &[f64], count: Option<usize>) -> Vec<f64> {
    match (v.len(), count) {
        (1, Some(n)) => vec![v[0]; n],
        _ => v.to_vec(),
    }
}

fn parse_xi(s: &str) -> Result<XiConfig> {
    match s.trim() {
        "merton" => Ok(XiConfig::Merton),
        "constant" => Ok(XiConfig::Constant),
        other => match other.strip_prefix("power:") {
            Some(a) => a
                .parse()
                .map(|alpha| XiConfig::Power { alpha })
                .map_err(|_| Error::Parse(format!("--xi: bad exponent '{a}'"))),
            None => Err(Error::Parse(format!("--xi: unknown family '{other}'"))),
        },
    }
}

/// The run configuration with the command-line flags applied on top.
fn apply(base: &RunConfig, m: &Model) -> Result<RunConfig> {
    let mut cfg = base.clone();
    let count = flag_count(m);

    let market = cfg.market.get_or_insert_with(MarketConfig::default);
    let flag_source = m.quotes.is_some() || m.survival.is_some() || m.hazards.is_some() || m.q.is_some();
    if flag_source {
        market.quotes = None;
        market.survival = None;
        market.hazards = None;
        market.q = None;
    }
    if let Some(p) = &m.quotes {
        market.quotes = Some(p.clone());
    }
    if let Some(d) = &m.date {
        market.date = Some(d.clone());
    }
    if let Some(s) = &m.survival {
        market.survival = Some(expand(s, count));
    }
    if let Some(h) = &m.hazards {
        market.hazards = Some(expand(h, count));
    }
    if let Some(q) = m.q {
        market.q = Some(q);
    }
    match m.names.as_deref().map(parse_names) {
        Some(NameArg::List(v)) => market.names = Some(v),
        Some(NameArg::Count(_)) => market.names = None,
        None => {}
    }
    if let Some(n) = count {
        market.n = Some(n);
    }
    if m.recovery.is_some() {
        market.recovery = m.recovery;
    }
    if m.maturity.is_some() {
        market.maturity = m.maturity;
    }
    let has_source = market.quotes.is_some()
        || market.survival.is_some()
        || market.hazards.is_some()
        || market.q.is_some();
    if !has_source {
        if let Some(n) = market.n.or(market.names.as_ref().map(Vec::len)) {
            market.hazards = Some(vec![DEFAULT_HAZARD; n]);
        }
    }

    if let Some(rho) = m.rho {
        cfg.copula = Some(CopulaConfig::Flat { rho });
    }
    if let Some(l) = &m.loadings {
        cfg.copula = Some(CopulaConfig::Gauss1f {
            loadings: expand(l, count),
        });
    }
    if let Some(theta) = m.theta {
        cfg.copula = Some(CopulaConfig::Clayton { theta });
    }

    if let Some(order) = m.fptd {
        cfg.payoff = Some(PayoffConfig::Fptd { order });
    }
    if let Some(order) = m.stop_loss {
        cfg.payoff = Some(PayoffConfig::StopLoss { order });
    }
    if m.worst_of_digital {
        cfg.payoff = Some(PayoffConfig::WorstOfDigital);
    }

    let dynamics = cfg.dynamics.get_or_insert_with(Default::default);
    if let Some(s) = &m.sigma_bar {
        dynamics.sigma_bar = Some(s.clone());
    }
    if let Some(b) = &m.beta {
        dynamics.betas = Some(b.clone());
    }
    if let Some(s) = &m.sigmas {
        dynamics.sigmas = Some(s.clone());
    }
    if let Some(c) = &m.spread_corr {
        dynamics.spread_corr = None;
        dynamics.uniform_corr = None;
        dynamics.spread_corr_file = None;
        match c.trim().parse::<f64>() {
            Ok(v) => dynamics.uniform_corr = Some(v),
            Err(_) => dynamics.spread_corr_file = Some(PathBuf::from(c)),
        }
    }
    if let Some(x) = &m.xi {
        dynamics.xi = Some(parse_xi(x)?);
    }

    if let Some(nodes) = m.hermite {
        cfg.quadrature = Some(QuadratureConfig::Hermite { nodes });
    }

    let sim = cfg.simulation.get_or_insert_with(Default::default);
    if m.steps.is_some() {
        sim.steps = m.steps;
    }
    if m.dt.is_some() {
        sim.dt = m.dt;
    }
    if m.paths.is_some() {
        sim.n_paths = m.paths;
    }
    if let Some(s) = m.scheme {
        sim.scheme = Some(match s {
            SchemeArg::Exact => SchemeConfig::Exact,
            SchemeArg::Euler => SchemeConfig::Euler,
            SchemeArg::Clayton => SchemeConfig::Clayton,
        });
    }
    Ok(cfg)
}

fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or(DEFAULT_SEED)
}

// --- commands -----------------------------------------------------------------

fn price(cfg: &RunConfig, _m: &Model, out: &mut dyn Write) -> Result<()> {
    let market = cfg.market()?;
    let copula = cfg.copula(market.len())?;
    let payoff = cfg.payoff(&market)?;
    let rule = rule_for(cfg.quadrature.as_ref(), &copula)?;
    let r = price_with(&payoff, &market, &copula, &rule, false)?;
    writeln!(out, "value,error_estimate,nodes")?;
    writeln!(out, "{},{},{}", fmt_num(r.value), fmt_num(r.error_estimate), r.nodes)?;
    Ok(())
}

fn deltas(cfg: &RunConfig, bump: bool, out: &mut dyn Write) -> Result<()> {
    let market = cfg.market()?;
    let copula = cfg.copula(market.len())?;
    let payoff = cfg.payoff(&market)?;
    let rule = rule_for(cfg.quadrature.as_ref(), &copula)?;
    let mode = if bump { DeltaMode::Bump } else { DeltaMode::Analytic };
    let d = deltas_with(&payoff, &market, &copula, mode, &rule)?;
    writeln!(out, "name,delta")?;
    for (name, v) in market.names().iter().zip(&d) {
        writeln!(out, "{name},{}", fmt_num(*v))?;
    }
    Ok(())
}

fn drift_report(cfg: &RunConfig, market: &MarketState) -> Result<DriftReport> {
    let n = market.len();
    let copula = cfg.copula(n)?;
    let payoff = cfg.payoff(market)?;
    let dynamics = cfg.dynamics()?;
    let corr = dynamics.spread_corr(market.names())?;
    let rule = cfg
        .quadrature
        .as_ref()
        .map(|q| q.build(&copula))
        .transpose()?;
    if copula.is_gaussian() {
        let betas = dynamics.betas(n)?;
        return match (payoff.kind(), &copula) {
            (breakeven::model::PayoffKind::FpTD { order, .. }, CopulaSpec::Gauss1F { .. }) => {
                drift_fptd(order, market, &copula, &betas, &corr, rule.as_ref())
            }
            _ => drift_gauss(&payoff, market, &copula, &betas, &corr, rule.as_ref()),
        };
    }
    let sigmas = dynamics
        .sigmas
        .as_ref()
        .ok_or_else(|| Error::Parse("non-Gaussian drift needs --sigmas".into()))?;
    let sigmas = broadcast(sigmas, n, "sigma")?;
    let kernel = kernel_for(&copula, n)?;
    drift_general(&payoff, market, kernel.as_ref(), &sigmas, &corr, rule.as_ref())
}

fn drift(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let market = cfg.market()?;
    let r = drift_report(cfg, &market)?;
    writeln!(out, "term,i,j,value")?;
    for (&(i, j), v) in &r.pair_terms {
        writeln!(out, "pair,{i},{j},{}", fmt_num(*v))?;
    }
    if let Some(stars) = &r.a_star {
        for (&(i, j), v) in stars {
            writeln!(out, "a_star,{i},{j},{}", fmt_num(*v))?;
        }
    }
    writeln!(out, "eta,,,{}", fmt_num(r.eta))?;
    writeln!(out, "total,,,{}", fmt_num(r.total))?;
    if r.numeric_chi {
        log::info!("chi integrated numerically");
    }
    Ok(())
}

fn breakeven(cfg: &RunConfig, out: &mut dyn Write) -> Result<()> {
    let market = cfg.market()?;
    let n = market.len();
    let order = match &cfg.payoff {
        None => 1,
        Some(p) => p
            .fptd_order()
            .ok_or_else(|| Error::Unsupported("break-even search needs an FpTD payoff".into()))?,
    };
    let dynamics = cfg.dynamics()?;
    let betas = dynamics.betas(n)?;
    let corr = dynamics.spread_corr(market.names())?;
    let rule = match &cfg.quadrature {
        Some(q) => Some(q.build(&breakeven::drift::flat_copula(n, 0.0))?),
        None => None,
    };
    let s = solve_breakeven_flat(order, &market, &betas, &corr, rule.as_ref())?;
    log::info!(
        "root after {} iterations, drift {:e}, bracket [{}, {}]",
        s.iterations,
        s.drift_at_root,
        s.bracket.0,
        s.bracket.1
    );
    writeln!(out, "rho_sq")?;
    writeln!(out, "{}", fmt_num(s.rho_sq))?;
    Ok(())
}

fn matrix(cfg: &RunConfig, rank: Option<usize>, loadings_out: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let market = cfg.market()?;
    let n = market.len();
    let dynamics = cfg.dynamics()?;
    let sigma = dynamics.betas(n)?;
    let corr = dynamics.spread_corr(market.names())?;
    let m = build_breakeven_matrix(&sigma, &corr, rank)?;
    log::info!("rank {}, residual {:e}", m.rank_p, m.residual);
    write_matrix_csv(&mut *out, market.names(), &m.sigma_tilde)?;
    if let (Some(l), Some(path)) = (&m.factor_loadings, loadings_out) {
        let mut w = open_output(Some(path))?;
        let cols: Vec<String> = (1..=l.ncols()).map(|k| format!("f{k}")).collect();
        writeln!(w, "name,{}", cols.join(","))?;
        for (i, name) in market.names().iter().enumerate() {
            let row: Vec<String> = (0..l.ncols()).map(|k| fmt_num(l[(i, k)])).collect();
            writeln!(w, "{name},{}", row.join(","))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, sigma0: Option<f64>) -> Result<PathSet> {
    let market = cfg.market()?;
    let sim = cfg.simulation.clone().unwrap_or_default();
    let steps = sim.steps.unwrap_or(DEFAULT_STEPS);
    let dt = sim.dt.unwrap_or(DEFAULT_DT);
    let n_paths = sim.n_paths.unwrap_or(DEFAULT_PATHS);
    let grid = uniform_grid(market.time(), dt, steps);
    match sim.scheme.unwrap_or_default() {
        SchemeConfig::Clayton => {
            let theta = match (&cfg.copula, sim.theta) {
                (_, Some(t)) => t,
                (Some(CopulaConfig::Clayton { theta }), None) => *theta,
                _ => return Err(Error::Parse("Clayton simulation needs --theta".into())),
            };
            let s0 = sigma0.or(sim.sigma0).unwrap_or(DEFAULT_SIGMA0);
            simulate_clayton(theta, s0, &market, &grid, n_paths, seed(cfg))
        }
        scheme => {
            let spec = cfg.dynamics()?.build(&market)?;
            match scheme {
                SchemeConfig::Euler => simulate_euler(&spec, &market, &grid, n_paths, seed(cfg)),
                _ => simulate_exact(&spec, &market, &grid, n_paths, seed(cfg)),
            }
        }
    }
}

/// Market at the first grid time of the paths, with recoveries from the
/// configuration.
fn base_market(cfg: &RunConfig, paths: &PathSet) -> Result<MarketState> {
    let recovery = cfg
        .market
        .as_ref()
        .and_then(|m| m.recovery)
        .unwrap_or(breakeven::config::DEFAULT_RECOVERY);
    let n = paths.n_names();
    MarketState::new(
        paths.names.clone(),
        paths.maturity,
        paths.times[0],
        paths.at(0, 0).to_vec(),
        vec![recovery; n],
    )
}

fn hedge(
    cfg: &RunConfig,
    m: &Model,
    paths_file: Option<&Path>,
    window: Option<usize>,
    smooth: Option<f64>,
    lookback: Option<usize>,
    out: &mut dyn Write,
) -> Result<()> {
    let paths = match paths_file {
        Some(p) => read_paths_csv(open_input(p)?, m.maturity)?,
        None => simulate(cfg, None)?,
    };
    let base = base_market(cfg, &paths)?;
    let payoff = cfg.payoff(&base)?;
    let bt = cfg.backtest.clone().unwrap_or_default();
    match window.or(bt.window) {
        None => {
            let copula = cfg.copula(base.len())?;
            let rule = cfg.quadrature.as_ref().map(|q| q.build(&copula)).transpose()?;
            let ledgers = run_hedge_all(&paths, &base, &payoff, &copula, rule.as_ref())?;
            let hedge_cols: Vec<String> = base.names().iter().map(|n| format!("h_{n}")).collect();
            writeln!(out, "path,step,time,value,cash,increment,cumulative,{}", hedge_cols.join(","))?;
            for (p, l) in ledgers.iter().enumerate() {
                for k in 0..l.times.len() {
                    let inc = if k == 0 { 0.0 } else { l.increments[k - 1] };
                    let h: Vec<String> = l.hedges[k].iter().map(|v| fmt_num(*v)).collect();
                    writeln!(
                        out,
                        "{p},{k},{},{},{},{},{},{}",
                        fmt_num(l.times[k]),
                        fmt_num(l.values[k]),
                        fmt_num(l.cash[k]),
                        fmt_num(inc),
                        fmt_num(l.cumulative[k]),
                        h.join(",")
                    )?;
                }
                log::info!("path {p}: self-financing error {:e}", l.self_financing_error);
            }
        }
        Some(w) => {
            let grid = bt.rho_sq_grid.clone().unwrap_or_else(candidate_grid);
            let rule = match &cfg.quadrature {
                Some(q) => Some(q.build(&breakeven::drift::flat_copula(base.len(), 0.0))?),
                None => None,
            };
            let family = hedge_family(&paths, &base, &payoff, &grid, rule.as_ref())?;
            let series = empirical_breakeven(&family, w)?;
            if series.missing > 0 {
                log::warn!("{} windows without a break-even crossing", series.missing);
            }
            let smoothed = smooth
                .or(bt.lambda)
                .map(|lambda| smooth_breakeven(&series.values, lambda, lookback.or(bt.lookback).unwrap_or(SMOOTH_LOOKBACK)));
            let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            match &smoothed {
                Some(_) => writeln!(out, "time,rho_sq,smoothed")?,
                None => writeln!(out, "time,rho_sq")?,
            }
            for (k, (&t, &v)) in series.times.iter().zip(&series.values).enumerate() {
                match &smoothed {
                    Some(s) => writeln!(out, "{},{},{}", fmt_num(t), opt(v), opt(s[k]))?,
                    None => writeln!(out, "{},{}", fmt_num(t), opt(v))?,
                }
            }
        }
    }
    Ok(())
}

fn skew_table(arg: SkewArg) -> Option<ScenarioTable> {
    let (kind, variant) = match arg {
        SkewArg::Core => return None,
        SkewArg::SpreadVolUp => (ScenarioKind::SpreadVol, Variant::Up),
        SkewArg::SpreadVolDown => (ScenarioKind::SpreadVol, Variant::Down),
        SkewArg::IntensityUp => (ScenarioKind::Intensity, Variant::Up),
        SkewArg::IntensityDown => (ScenarioKind::Intensity, Variant::Down),
        SkewArg::BetaUp => (ScenarioKind::BetaFactor, Variant::Up),
        SkewArg::BetaDown => (ScenarioKind::BetaFactor, Variant::Down),
    };
    Some(ScenarioTable::preset(kind, variant))
}

fn scenario(cfg: &RunConfig, s: &Scenario, out: &mut dyn Write) -> Result<()> {
    let study_cfg = cfg.study.clone().unwrap_or_default();
    let rule = match s.hermite {
        Some(n) => Some(breakeven::quadrature::QuadratureRule::gauss_hermite(n)?),
        None => None,
    };
    let orders: Vec<usize> = [(s.table1, 1), (s.table2, 2), (s.table3, 3)]
        .iter()
        .filter(|(on, _)| *on)
        .map(|&(_, p)| p)
        .collect();
    if orders.is_empty() && s.skew.is_none() {
        return Err(Error::Parse("scenario: choose --table1/2/3 or --skew".into()));
    }
    if !orders.is_empty() {
        let mut study = FourNameStudy {
            orders,
            ..Default::default()
        };
        if let Some(n) = s.paths.or(study_cfg.n_paths) {
            study.n_paths = n;
        }
        if let Some(n) = s.steps.or(study_cfg.steps) {
            study.steps = n;
        }
        if let Some(k) = s.stride.or(study_cfg.stride) {
            study.stride = k;
        }
        if let Some(seed) = cfg.seed {
            study.seed = seed;
        }
        let grids = run_four_name_study(&study, rule.as_ref())?;
        for (g, grid) in grids.iter().enumerate() {
            if g > 0 {
                writeln!(out)?;
            }
            writeln!(out, "# order={}", grid.order)?;
            let head: Vec<String> = grid.intensities.iter().map(|v| fmt_num(*v)).collect();
            writeln!(out, "lambda_34,{}", head.join(","))?;
            for (row, cells) in grid.cells.iter().enumerate() {
                let vals: Vec<String> = cells.iter().map(|c| c.map(fmt_num).unwrap_or_default()).collect();
                writeln!(out, "{},{}", fmt_num(grid.intensities[row]), vals.join(","))?;
            }
        }
    }
    if let Some(arg) = s.skew {
        let mut study = SkewStudy::core();
        if let Some(t) = skew_table(arg) {
            study = study.with(t);
        }
        if let Some(n) = s.steps.or(study_cfg.steps) {
            study.steps = n;
        }
        if let Some(k) = s.stride.or(study_cfg.stride) {
            study.stride = k;
        }
        if let Some(seed) = cfg.seed {
            study.seed = seed;
        }
        let curve = run_skew_study(&study, rule.as_ref())?;
        writeln!(out, "order,rho_sq,beta")?;
        for (k, order) in curve.orders.iter().enumerate() {
            let f = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
            writeln!(out, "{order},{},{}", f(curve.rho_sq[k]), f(curve.beta[k]))?;
        }
    }
    Ok(())
}

fn check_pde(
    cfg: &RunConfig,
    sigma0: Option<f64>,
    grid_q: Option<Vec<f64>>,
    grid_x: Option<Vec<f64>>,
    out: &mut dyn Write,
) -> Result<()> {
    let copula_cfg = cfg
        .copula
        .as_ref()
        .ok_or_else(|| Error::Parse("check-pde needs --rho, --loadings or --theta".into()))?;
    let n = match copula_cfg {
        CopulaConfig::Gauss1f { loadings } => loadings.len(),
        _ => cfg.market.as_ref().and_then(|m| m.n).unwrap_or(2),
    };
    let copula = copula_cfg.build(n)?;
    let kernel = kernel_for(&copula, n)?;
    let dynamics = cfg.dynamics.clone().unwrap_or_default();
    let constant_corr = dynamics.uniform_corr;
    let report = match &copula {
        CopulaSpec::Gauss1F { loadings } => {
            let beta = dynamics.betas(n).unwrap_or_else(|_| vec![0.5; n]);
            let vol = move |i: usize, q: f64| sigma_from_beta(beta[i], q).unwrap_or(f64::NAN);
            let l = loadings.clone();
            let corr = move |i: usize, j: usize, _: f64, _: f64| constant_corr.unwrap_or(l[i] * l[j]);
            let grid = PdeGrid {
                q: grid_q.unwrap_or_else(|| vec![0.1, 0.5, 0.9]),
                x: grid_x.unwrap_or_else(|| vec![-3.0, -1.0, 0.0, 0.5, 2.0]),
            };
            check_replication_pde(kernel.as_ref(), &vol, &corr, &grid)?
        }
        CopulaSpec::Clayton { theta } => {
            let theta = *theta;
            let s0 = sigma0.unwrap_or(DEFAULT_SIGMA0);
            let vol = move |_: usize, q: f64| clayton_sigma(theta, s0, q);
            let corr = move |_: usize, _: usize, qi: f64, qj: f64| {
                constant_corr.unwrap_or(clayton_beta(theta, qi) * clayton_beta(theta, qj))
            };
            let grid = PdeGrid {
                q: grid_q.unwrap_or_else(|| vec![0.1, 0.5, 0.9]),
                x: grid_x.unwrap_or_else(|| vec![0.01, 0.3, 1.0, 2.5, 6.0]),
            };
            check_replication_pde(kernel.as_ref(), &vol, &corr, &grid)?
        }
        CopulaSpec::GaussPF { .. } => unreachable!("kernel_for rejects multi-factor copulas"),
    };
    let (i, j, qi, qj, x) = report.at;
    writeln!(out, "max_residual,i,j,q_i,q_j,x,numeric_chi")?;
    writeln!(
        out,
        "{},{i},{j},{},{},{},{}",
        fmt_num(report.max_residual),
        fmt_num(qi),
        fmt_num(qj),
        fmt_num(x),
        report.numeric_chi
    )?;
    Ok(())
}
