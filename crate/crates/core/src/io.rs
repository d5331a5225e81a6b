//! CSV input formats, their validation, and output formatting helpers.
//!
//! Every loader shares its per-row parser with [`validate_file`], so a file
//! that validates cleanly always loads.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeRecord, FlowNetwork};
use crate::mlr::{IndicatorId, IndicatorPanel, PanelRecord};
use crate::pin::{DensitySeries, DerivativeKind, DerivativeSeries, YearMonth};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Header { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Row { path: PathBuf, line: u64, message: String },
    #[error("{path}: {message}")]
    Content { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

/// Supported input layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// `country,account,direction,year,value_usd`
    Panel,
    /// `source,target[,year],value_usd`
    Edges,
    /// `time,kind,label,value_usd`
    Series,
    /// `country,year,gdp_usd`
    Gdp,
    /// `year,deflator`
    Deflator,
    /// `member,group`
    Merge,
    /// `time,rho[,rho_bar]`
    Density,
    /// `country,year,gkp`
    Gkp,
}

impl Format {
    fn required(self) -> &'static [&'static str] {
        match self {
            Format::Panel => &["country", "account", "direction", "year", "value_usd"],
            Format::Edges => &["source", "target", "value_usd"],
            Format::Series => &["time", "kind", "label", "value_usd"],
            Format::Gdp => &["country", "year", "gdp_usd"],
            Format::Deflator => &["year", "deflator"],
            Format::Merge => &["member", "group"],
            Format::Density => &["time", "rho"],
            Format::Gkp => &["country", "year", "gkp"],
        }
    }

    fn optional(self) -> &'static [&'static str] {
        match self {
            Format::Edges => &["year"],
            Format::Density => &["rho_bar"],
            _ => &[],
        }
    }
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "panel" => Format::Panel,
            "edges" => Format::Edges,
            "series" => Format::Series,
            "gdp" => Format::Gdp,
            "deflator" => Format::Deflator,
            "merge" => Format::Merge,
            "density" => Format::Density,
            "gkp" => Format::Gkp,
            other => return Err(format!("unknown format {other:?}")),
        })
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub file: String,
    pub format: Format,
    pub rows: usize,
    pub missing_cells: usize,
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

struct Table {
    path: PathBuf,
    columns: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn get<'r>(&self, rec: &'r csv::StringRecord, col: &str) -> Option<&'r str> {
        self.columns.get(col).and_then(|&i| rec.get(i)).map(str::trim)
    }
}

fn read_table(path: &Path, format: Format) -> Result<Table, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => IoError::Read {
                path: path.to_owned(),
                source,
            },
            other => IoError::Header {
                path: path.to_owned(),
                message: format!("{other:?}"),
            },
        })?;
    let header = reader
        .headers()
        .map_err(|e| IoError::Header {
            path: path.to_owned(),
            message: e.to_string(),
        })?
        .clone();
    let mut columns = HashMap::new();
    for (i, h) in header.iter().enumerate() {
        let allowed = format.required().contains(&h) || format.optional().contains(&h);
        if !allowed {
            return Err(IoError::Header {
                path: path.to_owned(),
                message: format!("unexpected column {h:?} for {format} format"),
            });
        }
        if columns.insert(h.to_owned(), i).is_some() {
            return Err(IoError::Header {
                path: path.to_owned(),
                message: format!("duplicate column {h:?}"),
            });
        }
    }
    let missing: Vec<&str> = format
        .required()
        .iter()
        .copied()
        .filter(|c| !columns.contains_key(*c))
        .collect();
    if !missing.is_empty() {
        return Err(IoError::Header {
            path: path.to_owned(),
            message: format!("missing column(s) {} for {format} format", missing.join(", ")),
        });
    }
    let mut rows = Vec::new();
    for rec in reader.records() {
        match rec {
            Ok(r) => {
                let line = r.position().map_or(0, |p| p.line());
                rows.push((line, r));
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(IoError::Row {
                    path: path.to_owned(),
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(Table {
        path: path.to_owned(),
        columns,
        rows,
    })
}

fn field<'r>(t: &Table, rec: &'r csv::StringRecord, col: &str) -> Result<&'r str, String> {
    match t.get(rec, col) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("empty {col}")),
    }
}

fn number(t: &Table, rec: &csv::StringRecord, col: &str) -> Result<f64, String> {
    let s = field(t, rec, col)?;
    let v: f64 = s.parse().map_err(|_| format!("{col} {s:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{col} is not finite"));
    }
    Ok(v)
}

fn year(t: &Table, rec: &csv::StringRecord, col: &str) -> Result<i32, String> {
    let s = field(t, rec, col)?;
    s.parse().map_err(|_| format!("{col} {s:?} is not an integer year"))
}

fn non_negative(v: f64, col: &str) -> Result<f64, String> {
    if v < 0.0 {
        Err(format!("negative {col} {v}"))
    } else {
        Ok(v)
    }
}

/// Parsed rows with their line numbers, plus findings.
type Scanned<R> = (Vec<(u64, R)>, Vec<Finding>);

fn scan<R, K: Ord>(
    t: &Table,
    parse: impl Fn(&Table, &csv::StringRecord) -> Result<R, String>,
    key: impl Fn(&R) -> K,
) -> Scanned<R> {
    let mut ok = Vec::new();
    let mut findings = Vec::new();
    let mut seen: BTreeMap<K, u64> = BTreeMap::new();
    for (line, rec) in &t.rows {
        match parse(t, rec) {
            Ok(r) => {
                let k = key(&r);
                if let Some(first) = seen.get(&k) {
                    findings.push(Finding {
                        line: *line,
                        message: format!("duplicate row, same key as line {first}"),
                    });
                    continue;
                }
                seen.insert(k, *line);
                ok.push((*line, r));
            }
            Err(message) => findings.push(Finding { line: *line, message }),
        }
    }
    (ok, findings)
}

fn fail_fast<R>(t: &Table, scanned: Scanned<R>) -> Result<Vec<R>, IoError> {
    let (rows, findings) = scanned;
    if let Some(f) = findings.into_iter().next() {
        return Err(IoError::Row {
            path: t.path.clone(),
            line: f.line,
            message: f.message,
        });
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

fn panel_row(t: &Table, rec: &csv::StringRecord) -> Result<PanelRecord, String> {
    let country = field(t, rec, "country")?;
    let account = field(t, rec, "account")?
        .parse()
        .map_err(|e: crate::mlr::MlrError| e.to_string())?;
    let direction = field(t, rec, "direction")?
        .parse()
        .map_err(|e: crate::mlr::MlrError| e.to_string())?;
    let year = year(t, rec, "year")?;
    let value = match t.get(rec, "value_usd") {
        None | Some("") => None,
        Some(_) => Some(number(t, rec, "value_usd")?),
    };
    if country.contains(':') {
        return Err(format!("country {country:?} contains ':'"));
    }
    Ok(PanelRecord {
        indicator: IndicatorId::new(country, account, direction),
        year,
        value,
    })
}

#[derive(Debug, Clone, PartialEq)]
struct EdgeRow {
    year: Option<i32>,
    record: EdgeRecord,
}

fn edge_row(t: &Table, rec: &csv::StringRecord) -> Result<EdgeRow, String> {
    let source = field(t, rec, "source")?;
    let target = field(t, rec, "target")?;
    let year = match t.get(rec, "year") {
        None | Some("") if !t.columns.contains_key("year") => None,
        _ => Some(year(t, rec, "year")?),
    };
    let w = non_negative(number(t, rec, "value_usd")?, "value_usd")?;
    Ok(EdgeRow {
        year,
        record: EdgeRecord::new(source, target, w),
    })
}

#[derive(Debug, Clone, PartialEq)]
struct SeriesRow {
    time: YearMonth,
    kind: DerivativeKind,
    label: String,
    value: f64,
}

fn series_row(t: &Table, rec: &csv::StringRecord) -> Result<SeriesRow, String> {
    Ok(SeriesRow {
        time: field(t, rec, "time")?
            .parse()
            .map_err(|e: crate::pin::PinError| e.to_string())?,
        kind: field(t, rec, "kind")?.parse()?,
        label: field(t, rec, "label")?.to_owned(),
        value: non_negative(number(t, rec, "value_usd")?, "value_usd")?,
    })
}

fn gdp_row(t: &Table, rec: &csv::StringRecord) -> Result<(String, i32, f64), String> {
    Ok((
        field(t, rec, "country")?.to_owned(),
        year(t, rec, "year")?,
        number(t, rec, "gdp_usd")?,
    ))
}

fn deflator_row(t: &Table, rec: &csv::StringRecord) -> Result<(i32, f64), String> {
    let d = number(t, rec, "deflator")?;
    if d <= 0.0 {
        return Err(format!("deflator {d} is not positive"));
    }
    Ok((year(t, rec, "year")?, d))
}

fn merge_row(t: &Table, rec: &csv::StringRecord) -> Result<(String, String), String> {
    Ok((field(t, rec, "member")?.to_owned(), field(t, rec, "group")?.to_owned()))
}

fn density_row(t: &Table, rec: &csv::StringRecord) -> Result<(YearMonth, f64), String> {
    let time = field(t, rec, "time")?
        .parse()
        .map_err(|e: crate::pin::PinError| e.to_string())?;
    let rho = number(t, rec, "rho")?;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(format!("rho {rho} outside (0, 1]"));
    }
    Ok((time, rho))
}

fn gkp_row(t: &Table, rec: &csv::StringRecord) -> Result<(String, i32, f64), String> {
    let g = number(t, rec, "gkp")?;
    if !(0.0..=1.0).contains(&g) {
        return Err(format!("gkp {g} outside [0, 1]"));
    }
    Ok((field(t, rec, "country")?.to_owned(), year(t, rec, "year")?, g))
}

/// Schema, duplicate and value checks with every offending line listed.
pub fn validate_file(path: &Path, format: Format) -> Result<ValidationReport, IoError> {
    let t = read_table(path, format)?;
    let mut missing_cells = 0;
    let findings = match format {
        Format::Panel => {
            let (rows, mut f) = scan(&t, panel_row, |r| (r.indicator.clone(), r.year));
            missing_cells = rows.iter().filter(|r| r.1.value.is_none()).count();
            // gaps in the year range count as missing cells too
            let years: BTreeSet<i32> = rows.iter().map(|r| r.1.year).collect();
            let ids: BTreeSet<&IndicatorId> = rows.iter().map(|r| &r.1.indicator).collect();
            if let (Some(lo), Some(hi)) = (years.first(), years.last()) {
                missing_cells += ids.len() * (hi - lo + 1) as usize - rows.len();
            }
            f.sort_by_key(|x| x.line);
            f
        }
        Format::Edges => {
            let (rows, mut f) = scan(&t, edge_row, |r| {
                (r.year, r.record.source.clone(), r.record.target.clone())
            });
            for (line, r) in &rows {
                if r.record.source == r.record.target {
                    f.push(Finding {
                        line: *line,
                        message: format!("self-loop on {:?} will be dropped", r.record.source),
                    });
                }
            }
            f.sort_by_key(|x| x.line);
            f
        }
        Format::Series => scan(&t, series_row, |r| (r.kind, r.label.clone(), r.time)).1,
        Format::Gdp => scan(&t, gdp_row, |r| (r.0.clone(), r.1)).1,
        Format::Deflator => scan(&t, deflator_row, |r| r.0).1,
        Format::Merge => scan(&t, merge_row, |r| r.0.clone()).1,
        Format::Density => scan(&t, density_row, |r| r.0).1,
        Format::Gkp => scan(&t, gkp_row, |r| (r.0.clone(), r.1)).1,
    };
    Ok(ValidationReport {
        file: path.display().to_string(),
        format,
        rows: t.rows.len(),
        missing_cells,
        findings,
    })
}

pub fn load_panel(path: &Path) -> Result<IndicatorPanel, IoError> {
    let t = read_table(path, Format::Panel)?;
    let rows = fail_fast(&t, scan(&t, panel_row, |r| (r.indicator.clone(), r.year)))?;
    IndicatorPanel::from_records(rows).map_err(|e| IoError::Content {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// One network per year (or a single unstamped network without a `year`
/// column), in ascending year order.
pub fn load_networks(path: &Path) -> Result<Vec<FlowNetwork>, IoError> {
    let t = read_table(path, Format::Edges)?;
    let rows = fail_fast(
        &t,
        scan(&t, edge_row, |r| {
            (r.year, r.record.source.clone(), r.record.target.clone())
        }),
    )?;
    let mut by_year: BTreeMap<Option<i32>, Vec<EdgeRecord>> = BTreeMap::new();
    for r in rows {
        by_year.entry(r.year).or_default().push(r.record);
    }
    if by_year.is_empty() {
        return Err(IoError::Content {
            path: path.to_owned(),
            message: "no edges".into(),
        });
    }
    by_year
        .into_iter()
        .map(|(y, recs)| {
            let net = FlowNetwork::from_records(recs)
                .map_err(|e| IoError::Content {
                    path: path.to_owned(),
                    message: e.to_string(),
                })?
                .network;
            Ok(match y {
                Some(y) => net.with_year(y),
                None => net,
            })
        })
        .collect()
}

/// Series grouped by `(kind, label)`, each in time order.
pub fn load_series(path: &Path) -> Result<Vec<DerivativeSeries>, IoError> {
    let t = read_table(path, Format::Series)?;
    let rows = fail_fast(&t, scan(&t, series_row, |r| (r.kind, r.label.clone(), r.time)))?;
    let mut groups: BTreeMap<(DerivativeKind, String), Vec<(YearMonth, f64)>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.kind, r.label)).or_default().push((r.time, r.value));
    }
    groups
        .into_iter()
        .map(|((kind, label), mut pts)| {
            pts.sort_by_key(|p| p.0);
            DerivativeSeries::new(kind, label, pts).map_err(|e| IoError::Content {
                path: path.to_owned(),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn load_gdp(path: &Path) -> Result<BTreeMap<String, BTreeMap<i32, f64>>, IoError> {
    let t = read_table(path, Format::Gdp)?;
    let mut out: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    for (c, y, v) in fail_fast(&t, scan(&t, gdp_row, |r| (r.0.clone(), r.1)))? {
        out.entry(c).or_default().insert(y, v);
    }
    Ok(out)
}

pub fn load_deflator(path: &Path) -> Result<BTreeMap<i32, f64>, IoError> {
    let t = read_table(path, Format::Deflator)?;
    Ok(fail_fast(&t, scan(&t, deflator_row, |r| r.0))?.into_iter().collect())
}

pub fn load_merge(path: &Path) -> Result<BTreeMap<String, String>, IoError> {
    let t = read_table(path, Format::Merge)?;
    Ok(fail_fast(&t, scan(&t, merge_row, |r| r.0.clone()))?
        .into_iter()
        .collect())
}

/// Density series normalized at `reference` (default: first point).
pub fn load_density(path: &Path, reference: Option<YearMonth>) -> Result<DensitySeries, IoError> {
    let t = read_table(path, Format::Density)?;
    let mut rows = fail_fast(&t, scan(&t, density_row, |r| r.0))?;
    rows.sort_by_key(|r| r.0);
    DensitySeries::from_rho(rows, None, reference).map_err(|e| IoError::Content {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

pub fn load_gkp(path: &Path) -> Result<BTreeMap<String, BTreeMap<i32, f64>>, IoError> {
    let t = read_table(path, Format::Gkp)?;
    let mut out: BTreeMap<String, BTreeMap<i32, f64>> = BTreeMap::new();
    for (c, y, v) in fail_fast(&t, scan(&t, gkp_row, |r| (r.0.clone(), r.1)))? {
        out.entry(c).or_default().insert(y, v);
    }
    Ok(out)
}

/// Six significant digits, fixed notation for moderate magnitudes and
/// exponent notation otherwise.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s.to_owned()
    }
}

/// Formats an optional number; `None` becomes an empty cell.
pub fn sig6_opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// Builds CSV text in memory so that reports can be written atomically.
pub fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>())
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Writes all `(name, contents)` pairs into `dir` via temporary files and
/// renames, so that no report appears unless all were written.
pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>, IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::Write {
        path: dir.to_owned(),
        source,
    })?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, body) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        let res = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(body.as_bytes())?;
            f.sync_all()
        });
        if let Err(source) = res {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(IoError::Write { path: tmp, source });
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut done = Vec::with_capacity(staged.len());
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).map_err(|source| IoError::Write {
            path: dest.clone(),
            source,
        })?;
        done.push(dest);
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::TempDir;

    fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(2.0 / 3.0), "0.666667");
        assert_eq!(sig6(52e6), "5.2e7");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(-0.00012345678), "-0.000123457");
        assert_eq!(sig6(1.5e-7), "1.5e-7");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6_opt(None), "");
    }

    #[test]
    fn clean_panel_has_no_findings() {
        let d = TempDir::new().unwrap();
        let p = write(
            &d,
            "p.csv",
            "country,account,direction,year,value_usd\nDEU,goods,out,2000,1.5\nDEU,goods,out,2001,\nDEU,goods,out,2002,2\n",
        );
        let r = validate_file(&p, Format::Panel).unwrap();
        assert!(r.is_clean(), "{r:?}");
        assert_eq!(r.rows, 3);
        assert_eq!(r.missing_cells, 1);
    }

    #[test]
    fn duplicate_panel_row_is_reported_with_line() {
        let d = TempDir::new().unwrap();
        let p = write(
            &d,
            "p.csv",
            "country,account,direction,year,value_usd\nDEU,goods,out,2000,1\nDEU,fdi,in,2000,1\nDEU,goods,out,2000,2\n",
        );
        let r = validate_file(&p, Format::Panel).unwrap();
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].line, 4);
        let err = load_panel(&p).unwrap_err().to_string();
        assert!(err.contains(":4:"), "{err}");
    }

    #[test]
    fn negative_holding_is_a_finding_and_blocks_loading() {
        let d = TempDir::new().unwrap();
        let p = write(&d, "h.csv", "source,target,year,value_usd\nA,B,2002,5\nB,A,2002,-3\n");
        let r = validate_file(&p, Format::Edges).unwrap();
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].line, 3);
        assert!(r.findings[0].message.contains("negative"));
        assert!(load_networks(&p).is_err());
    }

    #[test]
    fn wrong_header_is_an_error() {
        let d = TempDir::new().unwrap();
        let p = write(&d, "h.csv", "from,to,value_usd\nA,B,1\n");
        assert!(matches!(validate_file(&p, Format::Edges), Err(IoError::Header { .. })));
        assert!(matches!(
            validate_file(&d.path().join("none.csv"), Format::Edges),
            Err(IoError::Read { .. })
        ));
    }

    #[test]
    fn networks_split_by_year() {
        let d = TempDir::new().unwrap();
        let p = write(
            &d,
            "t.csv",
            "source,target,year,value_usd\nA,B,2001,1\nA,B,2000,2\nB,C,2000,3\n",
        );
        let nets = load_networks(&p).unwrap();
        assert_eq!(nets.len(), 2);
        assert_eq!(nets[0].year(), Some(2000));
        assert_eq!(nets[0].edge_count(), 2);
        let q = write(&d, "u.csv", "source,target,value_usd\nA,B,1\n");
        assert_eq!(load_networks(&q).unwrap()[0].year(), None);
    }

    #[test]
    fn series_grouped_and_sorted() {
        let d = TempDir::new().unwrap();
        let p = write(
            &d,
            "s.csv",
            "time,kind,label,value_usd\n2004-12,NOA,CDS,2\n2004-06,NOA,CDS,1\n2004-06,GMV,ELD,3\n",
        );
        let s = load_series(&p).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].label, "CDS");
        assert_eq!(s[0].points[0].1, 1.0);
        let bad = write(&d, "b.csv", "time,kind,label,value_usd\n2004-6,NOA,CDS,2\n");
        assert_eq!(validate_file(&bad, Format::Series).unwrap().findings.len(), 1);
    }

    #[test]
    fn outputs_are_written_whole() {
        let d = TempDir::new().unwrap();
        let files = vec![
            ("a.json".to_string(), "{}".to_string()),
            ("b.csv".to_string(), "x\n".to_string()),
        ];
        write_outputs(d.path(), &files).unwrap();
        let mut names: Vec<String> = fs::read_dir(d.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, vec!["a.json", "b.csv"]);
    }
}
