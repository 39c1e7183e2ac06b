//! Text formats: dataset CSV, `key = value` configuration files and the
//! versioned fit file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AdditiveFit, CovariateChannel, DimensionGrid, Estimator, EvaluationGrid, Norming, SurvivalRecord};

/// Schema tag written on the first line of every fit file.
pub const FIT_SCHEMA: &str = "hazard-sbf-fit/v1";

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Dataset CSV

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnType {
    Const,
    Offset,
}

fn parse_f64(text: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| parse_err(line, format!("{what}: `{}` is not a number", text.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what}: `{}` is not finite", text.trim())));
    }
    Ok(v)
}

/// Parses a dataset in the `entry,exit,event,z1,...,zd` layout.
///
/// An optional second line `#types,time,time,flag,const|offset,...` marks
/// covariate columns holding the offset `a` of a `Z(t) = a + t` channel.
pub fn parse_csv(text: &str) -> Result<Vec<SurvivalRecord>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[0] != "entry" || cols[1] != "exit" || cols[2] != "event" {
        return Err(parse_err(1, "header must start with `entry,exit,event`"));
    }
    for (i, c) in cols[3..].iter().enumerate() {
        if *c != format!("z{}", i + 1) {
            return Err(parse_err(1, format!("expected column `z{}`, found `{c}`", i + 1)));
        }
    }
    let d = cols.len() - 3;
    let mut types = vec![ColumnType::Const; d];
    let mut records = Vec::new();
    let mut first = true;
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if first && fields[0].trim() == "#types" {
            first = false;
            if fields.len() != cols.len() + 1 {
                return Err(parse_err(
                    lineno,
                    format!("types row has {} fields, expected {}", fields.len(), cols.len() + 1),
                ));
            }
            let expected = ["#types", "time", "time", "flag"];
            for (f, e) in fields.iter().zip(expected) {
                if f.trim() != e {
                    return Err(parse_err(lineno, format!("types row: expected `{e}`, found `{}`", f.trim())));
                }
            }
            for (k, f) in fields[4..].iter().enumerate() {
                types[k] = match f.trim() {
                    "const" => ColumnType::Const,
                    "offset" => ColumnType::Offset,
                    other => return Err(parse_err(lineno, format!("unknown column type `{other}`"))),
                };
            }
            continue;
        }
        first = false;
        if fields.len() != cols.len() {
            return Err(parse_err(lineno, format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        let entry = parse_f64(fields[0], lineno, "entry")?;
        let exit = parse_f64(fields[1], lineno, "exit")?;
        let event = match fields[2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(lineno, format!("event must be 0 or 1, found `{other}`"))),
        };
        let covariates = fields[3..]
            .iter()
            .zip(&types)
            .enumerate()
            .map(|(k, (f, t))| {
                let v = parse_f64(f, lineno, &format!("z{}", k + 1))?;
                Ok(match t {
                    ColumnType::Const => CovariateChannel::Constant(v),
                    ColumnType::Offset => CovariateChannel::TimeOffset(v),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        records.push(SurvivalRecord::new(entry, exit, event, covariates));
    }
    Ok(records)
}

/// Reads a dataset CSV from `path`.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<SurvivalRecord>> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Formats records as CSV; numbers use the shortest exact representation.
pub fn format_csv(records: &[SurvivalRecord]) -> String {
    let d = records.first().map_or(0, |r| r.covariates.len());
    let mut out = String::from("entry,exit,event");
    for k in 1..=d {
        let _ = write!(out, ",z{k}");
    }
    out.push('\n');
    let has_offset = records
        .iter()
        .any(|r| r.covariates.iter().any(|c| matches!(c, CovariateChannel::TimeOffset(_))));
    if has_offset {
        out.push_str("#types,time,time,flag");
        for k in 0..d {
            let offset = matches!(records[0].covariates[k], CovariateChannel::TimeOffset(_));
            out.push_str(if offset { ",offset" } else { ",const" });
        }
        out.push('\n');
    }
    for r in records {
        let _ = write!(out, "{},{},{}", r.entry_time, r.exit_time, u8::from(r.event));
        for c in &r.covariates {
            let v = match c {
                CovariateChannel::Constant(v) | CovariateChannel::TimeOffset(v) => v,
            };
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Writes records to `path` as CSV.
pub fn write_csv(path: impl AsRef<Path>, records: &[SurvivalRecord]) -> Result<()> {
    fs::write(path, format_csv(records))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Configuration files

/// Flat `key = value` configuration. Keys must be consumed with
/// [`ConfigFile::take`]; [`ConfigFile::finish`] rejects any left over.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config("config", format!("line {}: expected `key = value`, found `{line}`", i + 1)))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::config("config", format!("line {}: empty key", i + 1)));
            }
            if entries.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
                return Err(Error::config(&key, "given more than once"));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Removes `key` and parses its value.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`"))),
        }
    }

    /// Removes `key` and parses its comma-separated values.
    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((_, v)) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::config(key, format!("cannot parse `{}`", s.trim())))
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| Error::config(key, "missing"))
    }

    /// Fails on the first key that was never taken.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(Error::config(&key, format!("unknown key (line {line})"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Fit files

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(",")
}

/// Serializes a fit in the `hazard-sbf-fit/v1` layout.
pub fn format_fit(fit: &AdditiveFit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema = {FIT_SCHEMA}");
    let _ = writeln!(out, "estimator = {}", fit.estimator.label());
    let _ = writeln!(out, "norming = {}", fit.norming.label());
    let _ = writeln!(out, "n_dims = {}", fit.n_dims());
    let _ = writeln!(out, "intercept = {}", fmt_num(fit.intercept));
    let _ = writeln!(out, "iterations_used = {}", fit.iterations_used);
    let _ = writeln!(out, "converged = {}", fit.converged);
    let _ = writeln!(out, "diverged = {}", fit.diverged);
    let _ = writeln!(out, "final_criterion = {}", fmt_num(fit.final_criterion));
    for (k, dim) in fit.grid.dims.iter().enumerate() {
        let _ = writeln!(out, "\n[dimension {k}]");
        let _ = writeln!(out, "lo = {}", fmt_num(dim.lo));
        let _ = writeln!(out, "hi = {}", fmt_num(dim.hi));
        let _ = writeln!(out, "n_points = {}", dim.n_points);
        let _ = writeln!(out, "bandwidth = {}", fmt_num(fit.bandwidth[k]));
        let _ = writeln!(out, "values = {}", fmt_list(&fit.components[k]));
        if let Some(der) = &fit.derivatives {
            let _ = writeln!(out, "derivatives = {}", fmt_list(&der[k]));
        }
        let _ = writeln!(out, "weights = {}", fmt_list(&fit.weights[k]));
        let flags: Vec<&str> = fit.unsupported[k].iter().map(|&u| if u { "1" } else { "0" }).collect();
        let _ = writeln!(out, "unsupported = {}", flags.join(","));
    }
    out
}

pub fn write_fit(path: impl AsRef<Path>, fit: &AdditiveFit) -> Result<()> {
    fs::write(path, format_fit(fit))?;
    Ok(())
}

struct Section {
    line: usize,
    fields: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Result<(usize, &str)> {
        self.fields
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| parse_err(self.line, format!("missing field `{key}`")))
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<T> {
        let (line, v) = self.get(key)?;
        v.parse().map_err(|_| parse_err(line, format!("`{key}`: cannot parse `{v}`")))
    }

    fn list(&self, key: &str, len: usize) -> Result<Vec<f64>> {
        let (line, v) = self.get(key)?;
        let out: Vec<f64> = v
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| parse_err(line, format!("`{key}`: bad number `{}`", s.trim()))))
            .collect::<Result<_>>()?;
        if out.len() != len {
            return Err(parse_err(line, format!("`{key}`: expected {len} values, found {}", out.len())));
        }
        Ok(out)
    }
}

/// Parses a fit file written by [`format_fit`].
pub fn parse_fit(text: &str) -> Result<AdditiveFit> {
    let mut sections = vec![Section {
        line: 1,
        fields: BTreeMap::new(),
    }];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            sections.push(Section {
                line: i + 1,
                fields: BTreeMap::new(),
            });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| parse_err(i + 1, format!("expected `key = value`, found `{line}`")))?;
        sections
            .last_mut()
            .expect("at least one section")
            .fields
            .insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
    }
    let head = &sections[0];
    let (line, schema) = head.get("schema")?;
    if schema != FIT_SCHEMA {
        return Err(parse_err(line, format!("unsupported schema `{schema}`")));
    }
    let estimator: Estimator = head.value("estimator")?;
    let norming: Norming = head.value("norming")?;
    let n_dims: usize = head.value("n_dims")?;
    if sections.len() != n_dims + 1 {
        return Err(parse_err(line, format!("expected {n_dims} dimension sections, found {}", sections.len() - 1)));
    }
    let mut dims = Vec::new();
    let mut bandwidth = Vec::new();
    let mut components = Vec::new();
    let mut derivatives = Vec::new();
    let mut weights = Vec::new();
    let mut unsupported = Vec::new();
    for sec in &sections[1..] {
        let n: usize = sec.value("n_points")?;
        dims.push(DimensionGrid::new(sec.value("lo")?, sec.value("hi")?, n)?);
        bandwidth.push(sec.value("bandwidth")?);
        components.push(sec.list("values", n)?);
        if estimator.is_local_linear() {
            derivatives.push(sec.list("derivatives", n)?);
        }
        weights.push(sec.list("weights", n)?);
        let (l, flags) = sec.get("unsupported")?;
        let flags: Vec<bool> = flags
            .split(',')
            .map(|s| match s.trim() {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(parse_err(l, format!("unsupported flag must be 0 or 1, found `{other}`"))),
            })
            .collect::<Result<_>>()?;
        if flags.len() != n {
            return Err(parse_err(l, format!("expected {n} flags, found {}", flags.len())));
        }
        unsupported.push(flags);
    }
    Ok(AdditiveFit {
        estimator,
        norming,
        grid: EvaluationGrid::new(dims)?,
        bandwidth,
        intercept: head.value("intercept")?,
        components,
        derivatives: estimator.is_local_linear().then_some(derivatives),
        weights,
        unsupported,
        iterations_used: head.value("iterations_used")?,
        converged: head.value("converged")?,
        diverged: head.value("diverged")?,
        final_criterion: head.value("final_criterion")?,
    })
}

pub fn read_fit(path: impl AsRef<Path>) -> Result<AdditiveFit> {
    parse_fit(&fs::read_to_string(path)?)
}
