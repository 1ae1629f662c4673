//! File formats: quote CSV ingest, correlation matrices, path export, and
//! number formatting for outputs.
//!
//! Quotes: header `date,name,maturity_years,survival_prob,recovery` or
//! `date,name,maturity_years,hazard_rate,recovery` (both probability columns
//! may be present, but each file must use one of them throughout).
//!
//! Correlation matrices: header `name,<name_1>,...,<name_n>`, then one row
//! per name in the same order.
//!
//! Paths: optional `# key=value ...` metadata lines, then header
//! `path,step,time,<name_1>,...,<name_n>`.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::dynamics::{PathSet, Scheme};
use crate::error::{Error, Result};
use crate::model::{survival_from_hazard, MarketState};

/// Formats with 12 significant digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    let s = if (-5..12).contains(&e) {
        format!("{:.*}", (11 - e).max(0) as usize, x)
    } else {
        format!("{:.11e}", x)
    };
    trim_zeros(&s)
}

fn trim_zeros(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(k) => (&s[..k], &s[k..]),
        None => (s, ""),
    };
    let m = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{m}{exp}")
}

#[derive(Debug, Deserialize)]
struct QuoteRow {
    date: String,
    name: String,
    maturity_years: f64,
    #[serde(default)]
    survival_prob: Option<f64>,
    #[serde(default)]
    hazard_rate: Option<f64>,
    recovery: f64,
}

/// Market states keyed by date, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuoteSeries {
    pub dates: Vec<String>,
    pub markets: Vec<MarketState>,
}

impl QuoteSeries {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn get(&self, date: &str) -> Option<&MarketState> {
        self.dates.iter().position(|d| d == date).map(|k| &self.markets[k])
    }
}

fn row_err(row: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("row {row}: {msg}"))
}

#[derive(PartialEq, Clone, Copy)]
enum Convention {
    Survival,
    Hazard,
}

/// Reads quotes; rows are numbered from 1 after the header.
pub fn ingest_quotes(reader: impl Read) -> Result<QuoteSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut convention = None;
    let mut seen = HashSet::new();
    // date -> (rows in file order)
    let mut by_date: BTreeMap<usize, (String, Vec<(usize, QuoteRow)>)> = BTreeMap::new();
    let mut date_slot: BTreeMap<String, usize> = BTreeMap::new();
    for (k, rec) in rdr.deserialize::<QuoteRow>().enumerate() {
        let row = k + 1;
        let q = rec.map_err(|e| row_err(row, e))?;
        let this = match (q.survival_prob, q.hazard_rate) {
            (Some(_), None) => Convention::Survival,
            (None, Some(_)) => Convention::Hazard,
            _ => return Err(row_err(row, "exactly one of survival_prob and hazard_rate must be set")),
        };
        match convention {
            None => convention = Some(this),
            Some(c) if c != this => {
                return Err(row_err(row, "mixes survival and hazard conventions in one file"))
            }
            _ => {}
        }
        if !seen.insert((q.date.clone(), q.name.clone())) {
            return Err(row_err(row, format!("duplicate quote for {} on {}", q.name, q.date)));
        }
        if !(q.maturity_years > 0.0) {
            return Err(row_err(row, format!("maturity {} must be positive", q.maturity_years)));
        }
        if let Some(s) = q.survival_prob {
            if !(s > 0.0 && s < 1.0) {
                return Err(row_err(row, format!("survival probability {s} outside (0, 1)")));
            }
        }
        let next = date_slot.len();
        let slot = *date_slot.entry(q.date.clone()).or_insert(next);
        by_date
            .entry(slot)
            .or_insert_with(|| (q.date.clone(), Vec::new()))
            .1
            .push((row, q));
    }
    let mut out = QuoteSeries::default();
    if by_date.is_empty() {
        log::warn!("quote file has no rows");
        return Ok(out);
    }
    for (_, (date, rows)) in by_date {
        let maturity = rows[0].1.maturity_years;
        let mut names = Vec::new();
        let mut survival = Vec::new();
        let mut recovery = Vec::new();
        for (row, q) in rows {
            if (q.maturity_years - maturity).abs() > 1e-12 {
                return Err(row_err(row, format!("maturity differs from other quotes on {date}")));
            }
            let s = match (q.survival_prob, q.hazard_rate) {
                (Some(s), _) => s,
                (_, Some(h)) => survival_from_hazard(h, 0.0, maturity).map_err(|e| row_err(row, e))?,
                _ => unreachable!("checked above"),
            };
            if !(s > 0.0 && s < 1.0) {
                return Err(row_err(row, format!("survival probability {s} outside (0, 1)")));
            }
            names.push(q.name);
            survival.push(s);
            recovery.push(q.recovery);
        }
        let market = MarketState::new(names, maturity, 0.0, survival, recovery)
            .map_err(|e| Error::Parse(format!("date {date}: {e}")))?;
        out.dates.push(date);
        out.markets.push(market);
    }
    Ok(out)
}

/// Reads a square correlation matrix. When `names` is given, the header
/// must list exactly those names in that order.
pub fn read_correlation_csv(reader: impl Read, names: Option<&[String]>) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .skip(1)
        .map(str::to_string)
        .collect();
    if let Some(expected) = names {
        if header != expected {
            return Err(Error::Parse(format!(
                "correlation header {header:?} does not match names {expected:?}"
            )));
        }
    }
    let n = header.len();
    let mut m = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| row_err(i + 1, e))?;
        if i >= n {
            return Err(row_err(i + 1, "more rows than names"));
        }
        if rec.len() != n + 1 {
            return Err(row_err(i + 1, format!("expected {} fields, found {}", n + 1, rec.len())));
        }
        if rec[0] != header[i] {
            return Err(row_err(i + 1, format!("row label {} should be {}", &rec[0], header[i])));
        }
        for j in 0..n {
            m[(i, j)] = rec[j + 1]
                .parse::<f64>()
                .map_err(|e| row_err(i + 1, format!("column {}: {e}", j + 1)))?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse(format!("{rows} rows for {n} names")));
    }
    Ok(m)
}

pub fn write_matrix_csv(mut w: impl Write, names: &[String], m: &DMatrix<f64>) -> Result<()> {
    writeln!(w, "name,{}", names.join(","))?;
    for (i, name) in names.iter().enumerate() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_num(m[(i, j)])).collect();
        writeln!(w, "{name},{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_paths_csv(mut w: impl Write, set: &PathSet) -> Result<()> {
    writeln!(
        w,
        "# scheme={} seed={} maturity={} clamped={}",
        set.scheme.as_str(),
        set.seed,
        fmt_num(set.maturity),
        set.clamped
    )?;
    writeln!(w, "path,step,time,{}", set.names.join(","))?;
    for p in 0..set.n_paths {
        for m in 0..set.n_times() {
            let vals: Vec<String> = set.at(p, m).iter().map(|&v| fmt_num(v)).collect();
            writeln!(w, "{p},{m},{},{}", fmt_num(set.times[m]), vals.join(","))?;
        }
    }
    Ok(())
}

/// Reads a path file written by [`write_paths_csv`]. `maturity` is used
/// when the file carries no metadata line.
pub fn read_paths_csv(reader: impl BufRead, maturity: Option<f64>) -> Result<PathSet> {
    let mut meta = BTreeMap::new();
    let mut body = String::new();
    for line in reader.lines() {
        let line = line?;
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            for kv in rest.split_whitespace() {
                if let Some((k, v)) = kv.split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let parse_meta = |k: &str| -> Result<Option<f64>> {
        meta.get(k)
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("metadata {k}: {e}"))))
            .transpose()
    };
    let maturity = match (parse_meta("maturity")?, maturity) {
        (Some(m), _) | (None, Some(m)) => m,
        _ => return Err(Error::Parse("path file has no maturity; pass it explicitly".into())),
    };
    let scheme = match meta.get("scheme").map(String::as_str) {
        Some("euler") => Scheme::Euler,
        Some("exact_z") | None => Scheme::ExactZ,
        Some(other) => return Err(Error::Parse(format!("unknown scheme {other}"))),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.len() < 4 || &header[0] != "path" || &header[1] != "step" || &header[2] != "time" {
        return Err(Error::Parse("path header must start with path,step,time".into()));
    }
    let names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
    let n = names.len();
    let mut q = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut n_paths = 0;
    let mut next_step = 0;
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| row_err(row, e))?;
        if rec.len() != n + 3 {
            return Err(row_err(row, format!("expected {} fields", n + 3)));
        }
        let num = |j: usize| -> Result<f64> {
            rec[j].parse::<f64>().map_err(|e| row_err(row, format!("column {}: {e}", j + 1)))
        };
        let p: usize = rec[0].parse().map_err(|e| row_err(row, e))?;
        let m: usize = rec[1].parse().map_err(|e| row_err(row, e))?;
        let t = num(2)?;
        let in_order = if p == 0 {
            n_paths <= 1 && m == times.len()
        } else {
            (p + 1 == n_paths && m == next_step && m < times.len())
                || (p == n_paths && m == 0 && next_step == times.len())
        };
        if !in_order {
            return Err(row_err(row, "rows must be ordered by path, then step from 0"));
        }
        if p == 0 {
            times.push(t);
            n_paths = 1;
        } else {
            if (t - times[m]).abs() > 1e-9 * times[m].abs().max(1.0) {
                return Err(row_err(row, "time grid differs from path 0"));
            }
            n_paths = p + 1;
        }
        next_step = m + 1;
        for j in 0..n {
            let v = num(j + 3)?;
            if !(v > 0.0 && v < 1.0) {
                return Err(row_err(row, format!("survival probability {v} outside (0, 1)")));
            }
            q.push(v);
        }
    }
    if q.len() != n_paths * times.len() * n {
        return Err(Error::Parse("paths have different lengths".into()));
    }
    Ok(PathSet {
        times,
        maturity,
        names,
        n_paths,
        seed: meta.get("seed").and_then(|s| s.parse().ok()).unwrap_or(0),
        scheme,
        q,
        clamped: meta.get("clamped").and_then(|s| s.parse().ok()).unwrap_or(0),
    })
}
