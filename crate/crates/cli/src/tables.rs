//! Readers for the small side tables: winners, survey responses, panel
//! metrics and covariates. Malformed rows are collected with their line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use epec::analysis::{CovariateRow, PanelMetric, RegionMetrics, RegionalMetrics, SurveyResponse};

/// Rows of a side table that failed to parse.
#[derive(Debug)]
pub struct TableError {
    pub path: PathBuf,
    pub rows: Vec<(u64, String)>,
}

impl fmt::Display for TableError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (line, msg) = &self.rows[0];
        write!(
            f,
            "{}: {} malformed row(s); first: line {line}: {msg}",
            self.path.display(),
            self.rows.len()
        )
    }
}

impl std::error::Error for TableError {}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        let header: Vec<String> = reader
            .headers()
            .with_context(|| format!("cannot read header of {}", path.display()))?
            .iter()
            .map(|h| h.trim().trim_start_matches('\u{feff}').to_string())
            .collect();
        let mut rows = Vec::new();
        let mut bad = Vec::new();
        for rec in reader.records() {
            match rec {
                Ok(r) => {
                    let line = r.position().map(|p| p.line()).unwrap_or(0);
                    if r.len() == 1 && r[0].trim().is_empty() {
                        continue;
                    }
                    if r.len() != header.len() {
                        bad.push((line, format!("expected {} fields, found {}", header.len(), r.len())));
                    } else {
                        rows.push((line, r));
                    }
                }
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    bad.push((line, e.to_string()));
                }
            }
        }
        if !bad.is_empty() {
            return Err(TableError { path: path.into(), rows: bad }.into());
        }
        Ok(Table {
            path: path.into(),
            header,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .with_context(|| format!("{}: missing column `{name}`", self.path.display()))
    }

    /// Parses every row with `f`, gathering all failures before returning.
    fn parse<T>(&self, mut f: impl FnMut(&csv::StringRecord) -> Result<T, String>) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.rows.len());
        let mut bad = Vec::new();
        for (line, r) in &self.rows {
            match f(r) {
                Ok(v) => out.push(v),
                Err(e) => bad.push((*line, e)),
            }
        }
        if bad.is_empty() {
            Ok(out)
        } else {
            Err(TableError {
                path: self.path.clone(),
                rows: bad,
            }
            .into())
        }
    }
}

fn num(r: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, String> {
    let raw = r[idx].trim();
    match raw.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("`{raw}` in column `{name}` is not a finite number")),
    }
}

fn year(r: &csv::StringRecord, idx: usize) -> Result<i32, String> {
    let raw = r[idx].trim();
    raw.parse().map_err(|_| format!("`{raw}` in column `year` is not a year"))
}

/// `state` plus one column per election, oldest first.
pub fn read_winners(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let t = Table::read(path)?;
    let state = t.column("state")?;
    let rows = t.parse(|r| {
        let winners: Vec<String> = (0..r.len())
            .filter(|&i| i != state)
            .map(|i| r[i].trim().to_string())
            .collect();
        if winners.iter().any(String::is_empty) {
            return Err("empty winner".into());
        }
        Ok((r[state].trim().to_string(), winners))
    })?;
    Ok(rows.into_iter().collect())
}

/// `region,year,pid7,weight`; independents and "Not sure" are dropped.
pub fn read_survey(path: &Path) -> Result<(Vec<SurveyResponse>, usize)> {
    let t = Table::read(path)?;
    let (g, y, p, w) = (t.column("region")?, t.column("year")?, t.column("pid7")?, t.column("weight")?);
    let parsed = t.parse(|r| {
        let weight = num(r, w, "weight")?;
        if weight < 0.0 {
            return Err(format!("negative weight {weight}"));
        }
        SurveyResponse::from_pid7(r[g].trim(), year(r, y)?, &r[p], weight).map_err(|e| e.to_string())
    })?;
    let dropped = parsed.iter().filter(|r| r.is_none()).count();
    Ok((parsed.into_iter().flatten().collect(), dropped))
}

/// `region,year,ep,ec`.
pub fn read_panel_metrics(path: &Path) -> Result<Vec<PanelMetric>> {
    let t = Table::read(path)?;
    let (g, y, ep, ec) = (t.column("region")?, t.column("year")?, t.column("ep")?, t.column("ec")?);
    t.parse(|r| {
        Ok(PanelMetric {
            region: r[g].trim().to_string(),
            year: year(r, y)?,
            ep: num(r, ep, "ep")?,
            ec: num(r, ec, "ec")?,
        })
    })
}

/// `region,year` plus numeric covariate columns. Empty cells count as missing.
pub fn read_covariates(path: &Path) -> Result<Vec<CovariateRow>> {
    let t = Table::read(path)?;
    let (g, y) = (t.column("region")?, t.column("year")?);
    let names: Vec<(usize, String)> = t
        .header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != g && *i != y)
        .map(|(i, h)| (i, h.clone()))
        .collect();
    t.parse(|r| {
        let mut values = BTreeMap::new();
        for (i, name) in &names {
            if !r[*i].trim().is_empty() {
                values.insert(name.clone(), num(r, *i, name)?);
            }
        }
        Ok(CovariateRow {
            region: r[g].trim().to_string(),
            year: year(r, y)?,
            values,
        })
    })
}

/// `region,ep,ec` (an optional `n_units` column is read when present).
pub fn read_regional_metrics(path: &Path) -> Result<RegionalMetrics> {
    let t = Table::read(path)?;
    let (g, ep, ec) = (t.column("region")?, t.column("ep")?, t.column("ec")?);
    let units = t.column("n_units").ok();
    let rows = t.parse(|r| {
        let n_units = match units {
            Some(i) => r[i].trim().parse().map_err(|_| format!("`{}` in column `n_units` is not a count", &r[i]))?,
            None => 0,
        };
        Ok((
            r[g].trim().to_string(),
            RegionMetrics {
                ep: num(r, ep, "ep")?,
                ec: num(r, ec, "ec")?,
                n_units,
            },
        ))
    })?;
    let mut out = BTreeMap::new();
    for (region, m) in rows {
        if out.insert(region.clone(), m).is_some() {
            anyhow::bail!("{}: region `{region}` appears twice", path.display());
        }
    }
    Ok(out)
}
