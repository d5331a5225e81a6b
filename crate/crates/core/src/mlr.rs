//! Balance-of-payments indicator network built by stepwise multiple linear
//! regression of every indicator at `t + 1` on the other indicators at `t`.
//!
//! The fitted coefficient matrix doubles as a one-year evolution operator
//! ([`forecast`]) and as a directed network between indicators, from which
//! tracking centralities ([`tracking_centrality`]) and short tracking paths
//! ([`path_track`]) are derived.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::stats::{self, DesignDiagnostics, OlsOptions, OlsResult, Sidedness};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlrError {
    #[error("invalid indicator id {0:?}; expected country:account:direction")]
    BadIndicatorId(String),
    #[error("unknown account {0:?}; expected goods, fdi, equity or debt")]
    BadAccount(String),
    #[error("unknown direction {0:?}; expected in or out")]
    BadDirection(String),
    #[error("duplicate panel cell {0} in {1}")]
    DuplicateCell(IndicatorId, i32),
    #[error("non-finite value for {0} in {1}")]
    NonFinite(IndicatorId, i32),
    #[error("panel is empty")]
    EmptyPanel,
    #[error("deflator missing for year {0}")]
    MissingDeflator(i32),
    #[error("deflator for year {0} is not positive")]
    NonPositiveDeflator(i32),
    #[error("panel has {have} years, need at least {need}")]
    InsufficientYears { have: usize, need: usize },
    #[error("year {0} outside the panel")]
    YearOutOfRange(i32),
    #[error("unknown indicator {0}")]
    UnknownIndicator(IndicatorId),
    #[error("no size given for indicator {0}")]
    MissingSize(IndicatorId),
    #[error("invalid fit criteria: {0}")]
    InvalidCriteria(&'static str),
    #[error("coverage must lie in (0, 1], got {0}")]
    InvalidCoverage(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Account {
    Debt,
    Equity,
    Fdi,
    Goods,
}

impl Account {
    pub const ALL: [Account; 4] = [Account::Debt, Account::Equity, Account::Fdi, Account::Goods];

    pub fn as_str(self) -> &'static str {
        match self {
            Account::Debt => "debt",
            Account::Equity => "equity",
            Account::Fdi => "fdi",
            Account::Goods => "goods",
        }
    }
}

impl FromStr for Account {
    type Err = MlrError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "debt" => Ok(Account::Debt),
            "equity" => Ok(Account::Equity),
            "fdi" => Ok(Account::Fdi),
            "goods" => Ok(Account::Goods),
            other => Err(MlrError::BadAccount(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

impl Direction {
    pub const ALL: [Direction; 2] = [Direction::In, Direction::Out];

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

impl FromStr for Direction {
    type Err = MlrError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in" => Ok(Direction::In),
            "out" => Ok(Direction::Out),
            other => Err(MlrError::BadDirection(other.to_owned())),
        }
    }
}

/// `(country, account, direction)`; ordered and printed as
/// `country:account:direction`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndicatorId {
    pub country: String,
    pub account: Account,
    pub direction: Direction,
}

impl IndicatorId {
    pub fn new(country: impl Into<String>, account: Account, direction: Direction) -> Self {
        Self {
            country: country.into(),
            account,
            direction,
        }
    }
}

impl fmt::Display for IndicatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}",
            self.country,
            self.account.as_str(),
            self.direction.as_str()
        )
    }
}

impl FromStr for IndicatorId {
    type Err = MlrError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.rsplitn(3, ':');
        let (dir, acc, country) = match (parts.next(), parts.next(), parts.next()) {
            (Some(d), Some(a), Some(c)) if !c.is_empty() => (d, a, c),
            _ => return Err(MlrError::BadIndicatorId(s.to_owned())),
        };
        Ok(IndicatorId::new(country, acc.parse()?, dir.parse()?))
    }
}

impl Serialize for IndicatorId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for IndicatorId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One cell of a panel as read from disk; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRecord {
    pub indicator: IndicatorId,
    pub year: i32,
    pub value: Option<f64>,
}

/// Rectangular indicator-by-year panel over consecutive years.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorPanel {
    first_year: i32,
    n_years: usize,
    indicators: Vec<IndicatorId>,
    values: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    dropped: Vec<IndicatorId>,
}

/// Minimum number of observed years for an indicator to be kept.
pub const MIN_OBSERVED_YEARS: usize = 3;

impl IndicatorPanel {
    /// Builds a panel spanning the smallest year range covering all records.
    ///
    /// Indicators with fewer than [`MIN_OBSERVED_YEARS`] observed values are
    /// dropped and listed in [`IndicatorPanel::dropped`].
    pub fn from_records<I>(records: I) -> Result<Self, MlrError>
    where
        I: IntoIterator<Item = PanelRecord>,
    {
        let mut cells: BTreeMap<IndicatorId, BTreeMap<i32, Option<f64>>> = BTreeMap::new();
        for r in records {
            if let Some(v) = r.value {
                if !v.is_finite() {
                    return Err(MlrError::NonFinite(r.indicator, r.year));
                }
            }
            let row = cells.entry(r.indicator.clone()).or_default();
            if row.insert(r.year, r.value).is_some() {
                return Err(MlrError::DuplicateCell(r.indicator, r.year));
            }
        }
        let years: BTreeSet<i32> = cells.values().flat_map(|r| r.keys().copied()).collect();
        let (Some(&first), Some(&last)) = (years.first(), years.last()) else {
            return Err(MlrError::EmptyPanel);
        };
        let n_years = (last - first + 1) as usize;
        let mut rows = Vec::with_capacity(cells.len());
        for (id, row) in cells {
            let mut series = vec![None; n_years];
            for (y, v) in row {
                series[(y - first) as usize] = v;
            }
            rows.push((id, series));
        }
        Self::new(first, rows)
    }

    pub fn new(first_year: i32, rows: Vec<(IndicatorId, Vec<Option<f64>>)>) -> Result<Self, MlrError> {
        let n_years = rows.first().map_or(0, |r| r.1.len());
        if rows.is_empty() || n_years == 0 {
            return Err(MlrError::EmptyPanel);
        }
        let mut rows = rows;
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        let mut indicators = Vec::new();
        let mut values = Vec::new();
        let mut dropped = Vec::new();
        for (id, series) in rows {
            if series.len() != n_years {
                return Err(MlrError::InsufficientYears {
                    have: series.len(),
                    need: n_years,
                });
            }
            for (k, v) in series.iter().enumerate() {
                if v.is_some_and(|x| !x.is_finite()) {
                    return Err(MlrError::NonFinite(id, first_year + k as i32));
                }
            }
            if indicators.last() == Some(&id) {
                return Err(MlrError::DuplicateCell(id, first_year));
            }
            if series.iter().flatten().count() < MIN_OBSERVED_YEARS {
                dropped.push(id);
                continue;
            }
            indicators.push(id);
            values.push(series);
        }
        if indicators.is_empty() {
            return Err(MlrError::EmptyPanel);
        }
        Ok(Self {
            first_year,
            n_years,
            indicators,
            values,
            dropped,
        })
    }

    pub fn first_year(&self) -> i32 {
        self.first_year
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + self.n_years as i32 - 1
    }

    pub fn years(&self) -> impl Iterator<Item = i32> {
        self.first_year..=self.last_year()
    }

    pub fn n_years(&self) -> usize {
        self.n_years
    }

    pub fn indicators(&self) -> &[IndicatorId] {
        &self.indicators
    }

    /// Indicators removed at construction for lack of data.
    pub fn dropped(&self) -> &[IndicatorId] {
        &self.dropped
    }

    pub fn index_of(&self, id: &IndicatorId) -> Option<usize> {
        self.indicators.binary_search(id).ok()
    }

    pub fn series(&self, idx: usize) -> &[Option<f64>] {
        &self.values[idx]
    }

    pub fn value(&self, idx: usize, year: i32) -> Option<f64> {
        let k = year.checked_sub(self.first_year)?;
        if k < 0 || k as usize >= self.n_years {
            return None;
        }
        self.values[idx][k as usize]
    }

    pub fn is_complete(&self, idx: usize) -> bool {
        self.values[idx].iter().all(Option::is_some)
    }

    /// Mean over observed years.
    pub fn time_average(&self, idx: usize) -> f64 {
        let obs: Vec<f64> = self.values[idx].iter().flatten().copied().collect();
        obs.iter().sum::<f64>() / obs.len() as f64
    }

    /// Time-averaged value of every indicator.
    pub fn sizes(&self) -> BTreeMap<IndicatorId, f64> {
        (0..self.indicators.len())
            .map(|i| (self.indicators[i].clone(), self.time_average(i)))
            .collect()
    }

    pub fn countries(&self) -> BTreeSet<String> {
        self.indicators.iter().map(|i| i.country.clone()).collect()
    }

    /// Panel without its final year.
    pub fn without_last_year(&self) -> Result<Self, MlrError> {
        if self.n_years < 2 {
            return Err(MlrError::InsufficientYears {
                have: self.n_years,
                need: 2,
            });
        }
        let rows = self
            .indicators
            .iter()
            .cloned()
            .zip(self.values.iter().map(|v| v[..self.n_years - 1].to_vec()))
            .collect();
        Self::new(self.first_year, rows)
    }

    pub fn restrict_countries(&self, keep: &BTreeSet<String>) -> Result<Self, MlrError> {
        let rows = self
            .indicators
            .iter()
            .zip(&self.values)
            .filter(|(id, _)| keep.contains(&id.country))
            .map(|(id, v)| (id.clone(), v.clone()))
            .collect();
        Self::new(self.first_year, rows)
    }

    /// All cells in indicator-then-year order, including missing ones.
    pub fn records(&self) -> impl Iterator<Item = PanelRecord> + '_ {
        self.indicators.iter().zip(&self.values).flat_map(move |(id, row)| {
            row.iter().enumerate().map(move |(k, v)| PanelRecord {
                indicator: id.clone(),
                year: self.first_year + k as i32,
                value: *v,
            })
        })
    }

    fn map_values(&self, f: impl Fn(i32, f64) -> f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.values {
            for (k, v) in row.iter_mut().enumerate() {
                if let Some(x) = v {
                    *x = f(self.first_year + k as i32, *x);
                }
            }
        }
        out
    }
}

/// Rescales every value to constant `base_year` money:
/// `value(t) * deflator(base_year) / deflator(t)`.
pub fn deflate_panel(
    panel: &IndicatorPanel,
    deflator: &BTreeMap<i32, f64>,
    base_year: i32,
) -> Result<IndicatorPanel, MlrError> {
    for y in panel.years().chain(std::iter::once(base_year)) {
        match deflator.get(&y) {
            None => return Err(MlrError::MissingDeflator(y)),
            Some(d) if !(*d > 0.0) || !d.is_finite() => return Err(MlrError::NonPositiveDeflator(y)),
            _ => {}
        }
    }
    let base = deflator[&base_year];
    Ok(panel.map_values(|y, v| v * base / deflator[&y]))
}

/// Union over the account/direction classes of the smallest set of countries
/// (largest time-averaged value first) whose cumulative share of the class
/// total reaches `coverage`.
pub fn select_countries(panel: &IndicatorPanel, coverage: f64) -> Result<BTreeSet<String>, MlrError> {
    if !(coverage > 0.0 && coverage <= 1.0) {
        return Err(MlrError::InvalidCoverage(coverage));
    }
    let mut classes: BTreeMap<(Account, Direction), Vec<(String, f64)>> = BTreeMap::new();
    for (idx, id) in panel.indicators().iter().enumerate() {
        classes
            .entry((id.account, id.direction))
            .or_default()
            .push((id.country.clone(), panel.time_average(idx)));
    }
    let mut selected = BTreeSet::new();
    for mut members in classes.into_values() {
        let total: f64 = members.iter().map(|(_, v)| v.max(0.0)).sum();
        if !(total > 0.0) {
            continue;
        }
        members.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut acc = 0.0;
        for (country, v) in members {
            selected.insert(country);
            acc += v.max(0.0);
            // relative slack guards against summation round-off at exactly `coverage`
            if acc >= coverage * total * (1.0 - 1e-12) {
                break;
            }
        }
    }
    Ok(selected)
}

/// Statistical bounds a fitted row has to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitCriteria {
    /// Significance level for the coefficient t-tests and the model F-test.
    pub alpha: f64,
    /// Bound on the time-averaged absolute relative fit error.
    pub max_mean_error: f64,
    pub max_condition: f64,
    pub max_vif: f64,
    #[serde(default)]
    pub sided: Sidedness,
}

impl Default for FitCriteria {
    fn default() -> Self {
        Self {
            alpha: 0.025,
            max_mean_error: 0.10,
            max_condition: 10.0,
            max_vif: 5.0,
            sided: Sidedness::TwoSided,
        }
    }
}

impl FitCriteria {
    pub fn validate(&self) -> Result<(), MlrError> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(MlrError::InvalidCriteria("alpha must lie in (0, 0.5)"));
        }
        if !(self.max_mean_error > 0.0 && self.max_condition > 0.0 && self.max_vif > 0.0) {
            return Err(MlrError::InvalidCriteria("bounds must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Accepted,
    Rejected,
    Unfittable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regressor {
    pub indicator: IndicatorId,
    pub beta: f64,
    /// R² of the simple regression of the regressand on this regressor alone.
    pub r2: f64,
}

/// Simple-regression score of one candidate regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub indicator: IndicatorId,
    /// Sum of squared residuals.
    pub residuum: f64,
    pub r2: f64,
    pub t_pvalue: f64,
}

/// One row of the coefficient matrix with its fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowFit {
    pub regressand: IndicatorId,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Empty unless accepted.
    pub regressors: Vec<Regressor>,
    pub intercept: f64,
    /// Diagnostics of the final model (also for rejected rows).
    pub mean_error: Option<f64>,
    pub f_pvalue: Option<f64>,
    pub t_pvalues: Vec<f64>,
    pub max_vif: Option<f64>,
    pub condition_number: Option<f64>,
    pub seed: Option<IndicatorId>,
    pub samples: usize,
    /// Step-1 candidate ranking, smallest residuum first. Not persisted.
    #[serde(skip)]
    pub ranking: Vec<CandidateScore>,
}

impl RowFit {
    fn unfittable(regressand: IndicatorId, samples: usize, reason: &str) -> Self {
        Self {
            regressand,
            status: RowStatus::Unfittable,
            reason: Some(reason.to_owned()),
            regressors: Vec::new(),
            intercept: 0.0,
            mean_error: None,
            f_pvalue: None,
            t_pvalues: Vec::new(),
            max_vif: None,
            condition_number: None,
            seed: None,
            samples,
            ranking: Vec::new(),
        }
    }

    pub fn is_accepted(&self) -> bool {
        self.status == RowStatus::Accepted
    }
}

/// Error reductions smaller than this are treated as round-off, not progress.
const ERROR_REDUCTION_EPS: f64 = 1e-12;

/// Minimum sample count (regressand years `t + 1`) for a row to be fitted.
pub const MIN_SAMPLES: usize = 4;

struct FitData<'a> {
    panel: &'a IndicatorPanel,
    complete: Vec<bool>,
}

impl<'a> FitData<'a> {
    fn new(panel: &'a IndicatorPanel) -> Self {
        let complete = (0..panel.indicators().len()).map(|i| panel.is_complete(i)).collect();
        Self { panel, complete }
    }

    fn lagged(&self, idx: usize) -> Vec<f64> {
        let s = self.panel.series(idx);
        s[..s.len() - 1].iter().map(|v| v.expect("complete")).collect()
    }

    fn lead(&self, idx: usize) -> Vec<f64> {
        self.panel.series(idx)[1..]
            .iter()
            .map(|v| v.expect("complete"))
            .collect()
    }
}

fn design(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    stats::columns_to_matrix(&refs)
}

/// Fits one regressand with the iterative stepwise procedure:
///
/// 1. simple regression of `I_i(t+1)` on every other complete `I_j(t)`;
/// 2. seed the model with the smallest-residuum candidate;
/// 3. walk the remaining candidates once in ascending residuum order, keeping
///    an addition only if it lowers the mean relative error and every
///    coefficient t-test, VIF and condition-number bound still holds;
/// 4. accept the final model if its F-test and mean error pass.
pub fn stepwise_fit(
    panel: &IndicatorPanel,
    regressand: &IndicatorId,
    criteria: &FitCriteria,
) -> Result<RowFit, MlrError> {
    criteria.validate()?;
    let idx = panel
        .index_of(regressand)
        .ok_or_else(|| MlrError::UnknownIndicator(regressand.clone()))?;
    Ok(fit_row(&FitData::new(panel), idx, criteria))
}

fn fit_row(data: &FitData<'_>, idx: usize, criteria: &FitCriteria) -> RowFit {
    let panel = data.panel;
    let id = panel.indicators()[idx].clone();
    let samples = panel.n_years().saturating_sub(1);
    if !data.complete[idx] {
        return RowFit::unfittable(id, samples, "incomplete series");
    }
    if samples < MIN_SAMPLES {
        return RowFit::unfittable(id, samples, "fewer than 4 sample years");
    }
    let opts = OlsOptions {
        with_intercept: true,
        sided: criteria.sided,
    };
    let y = data.lead(idx);

    // Step 1
    let mut ranking: Vec<(CandidateScore, usize)> = (0..panel.indicators().len())
        .filter(|&j| j != idx && data.complete[j])
        .filter_map(|j| {
            let x = data.lagged(j);
            let fit = stats::ols_fit(&design(&[x]), &y, opts).ok()?;
            Some((
                CandidateScore {
                    indicator: panel.indicators()[j].clone(),
                    residuum: fit.sse,
                    r2: fit.r_squared,
                    t_pvalue: fit.t_pvalues[0],
                },
                j,
            ))
        })
        .collect();
    if ranking.is_empty() {
        return RowFit::unfittable(id, samples, "no usable candidate regressors");
    }
    ranking.sort_by(|a, b| {
        a.0.residuum
            .total_cmp(&b.0.residuum)
            .then_with(|| a.0.indicator.cmp(&b.0.indicator))
    });
    let r2_of: BTreeMap<usize, f64> = ranking.iter().map(|(c, j)| (*j, c.r2)).collect();

    // Step 2
    let (seed_score, seed_idx) = &ranking[0];
    let mut chosen = vec![*seed_idx];
    let mut cols = vec![data.lagged(*seed_idx)];
    let mut current: OlsResult = stats::ols_fit(&design(&cols), &y, opts).expect("seed fit succeeded in step 1");
    let mut diag = DesignDiagnostics {
        vif: Vec::new(),
        condition_number: 1.0,
    };
    let mut row = RowFit {
        regressand: id,
        status: RowStatus::Rejected,
        reason: None,
        regressors: Vec::new(),
        intercept: 0.0,
        mean_error: Some(current.mean_relative_error),
        f_pvalue: Some(current.f_pvalue),
        t_pvalues: current.t_pvalues.clone(),
        max_vif: None,
        condition_number: Some(1.0),
        seed: Some(seed_score.indicator.clone()),
        samples,
        ranking: Vec::new(),
    };
    if seed_score.t_pvalue > criteria.alpha {
        row.reason = Some("no significant seed regressor".into());
        row.t_pvalues = vec![seed_score.t_pvalue];
        row.ranking = ranking.into_iter().map(|(c, _)| c).collect();
        return row;
    }

    // Steps 3-5
    for (_, cand) in ranking.iter().skip(1) {
        if samples < chosen.len() + 1 + 2 {
            break;
        }
        let mut trial_cols = cols.clone();
        trial_cols.push(data.lagged(*cand));
        let x = design(&trial_cols);
        let Ok(fit) = stats::ols_fit(&x, &y, opts) else {
            continue;
        };
        if !(fit.mean_relative_error < current.mean_relative_error - ERROR_REDUCTION_EPS) {
            continue;
        }
        if fit.t_pvalues.iter().any(|p| !(*p <= criteria.alpha)) {
            continue;
        }
        let Ok(d) = DesignDiagnostics::compute(&x) else {
            continue;
        };
        // +inf VIF (exact collinearity) fails this comparison as well
        if !(d.max_vif() <= criteria.max_vif && d.condition_number <= criteria.max_condition) {
            continue;
        }
        chosen.push(*cand);
        cols = trial_cols;
        current = fit;
        diag = d;
    }

    // Step 6
    row.mean_error = Some(current.mean_relative_error);
    row.f_pvalue = Some(current.f_pvalue);
    row.t_pvalues = current.t_pvalues.clone();
    row.max_vif = (chosen.len() >= 2).then(|| diag.max_vif());
    row.condition_number = Some(diag.condition_number);
    let accept = current.f_pvalue <= criteria.alpha && current.mean_relative_error <= criteria.max_mean_error;
    if accept {
        row.status = RowStatus::Accepted;
        row.intercept = current.intercept;
        row.regressors = chosen
            .iter()
            .zip(&current.coefficients)
            .map(|(j, b)| Regressor {
                indicator: panel.indicators()[*j].clone(),
                beta: *b,
                r2: r2_of[j],
            })
            .collect();
    } else {
        row.reason = Some(if current.f_pvalue > criteria.alpha {
            "F-test not significant".into()
        } else {
            "mean fit error above bound".into()
        });
    }
    row.ranking = ranking.into_iter().map(|(c, _)| c).collect();
    row
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub total: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub unfittable: usize,
    pub mean_error: Option<f64>,
    pub median_error: Option<f64>,
}

/// Sparse coefficient matrix: one [`RowFit`] per indicator, in indicator order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientNetwork {
    pub fit_first_year: i32,
    pub fit_last_year: i32,
    pub criteria: FitCriteria,
    pub rows: Vec<RowFit>,
}

/// Directed GBoPN edge, regressor to regressand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEdge {
    pub regressor: IndicatorId,
    pub regressand: IndicatorId,
    pub beta: f64,
    pub r2: f64,
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

impl CoefficientNetwork {
    pub fn row(&self, id: &IndicatorId) -> Option<&RowFit> {
        self.rows
            .binary_search_by(|r| r.regressand.cmp(id))
            .ok()
            .map(|i| &self.rows[i])
    }

    pub fn indicators(&self) -> impl Iterator<Item = &IndicatorId> {
        self.rows.iter().map(|r| &r.regressand)
    }

    /// `beta_ij`: coefficient of regressor `j` in the row of regressand `i`.
    pub fn beta(&self, regressand: &IndicatorId, regressor: &IndicatorId) -> f64 {
        self.row(regressand)
            .and_then(|r| r.regressors.iter().find(|g| &g.indicator == regressor))
            .map_or(0.0, |g| g.beta)
    }

    /// Nonzero coefficients of accepted rows.
    pub fn edges(&self) -> impl Iterator<Item = CoefficientEdge> + '_ {
        self.rows.iter().filter(|r| r.is_accepted()).flat_map(|r| {
            r.regressors.iter().map(move |g| CoefficientEdge {
                regressor: g.indicator.clone(),
                regressand: r.regressand.clone(),
                beta: g.beta,
                r2: g.r2,
            })
        })
    }

    pub fn summary(&self) -> FitSummary {
        let count = |s: RowStatus| self.rows.iter().filter(|r| r.status == s).count();
        let mut errors: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.is_accepted())
            .filter_map(|r| r.mean_error)
            .collect();
        let mean_error = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
        FitSummary {
            total: self.rows.len(),
            accepted: count(RowStatus::Accepted),
            rejected: count(RowStatus::Rejected),
            unfittable: count(RowStatus::Unfittable),
            mean_error,
            median_error: median(&mut errors),
        }
    }

    /// Refits every accepted row on `panel` (restricted to the stored fit
    /// years) and lists the rows that violate a bound.
    pub fn audit(&self, panel: &IndicatorPanel) -> Vec<(IndicatorId, String)> {
        let c = &self.criteria;
        let mut out = Vec::new();
        let opts = OlsOptions {
            with_intercept: true,
            sided: c.sided,
        };
        for row in self.rows.iter().filter(|r| r.is_accepted()) {
            let fail = |m: String| (row.regressand.clone(), m);
            let series = |id: &IndicatorId| -> Option<Vec<f64>> {
                let i = panel.index_of(id)?;
                (self.fit_first_year..=self.fit_last_year)
                    .map(|y| panel.value(i, y))
                    .collect()
            };
            let Some(target) = series(&row.regressand) else {
                out.push(fail("regressand data unavailable".into()));
                continue;
            };
            let cols: Option<Vec<Vec<f64>>> = row
                .regressors
                .iter()
                .map(|g| series(&g.indicator).map(|s| s[..s.len() - 1].to_vec()))
                .collect();
            let Some(cols) = cols else {
                out.push(fail("regressor data unavailable".into()));
                continue;
            };
            let x = design(&cols);
            let fit = match stats::ols_fit(&x, &target[1..], opts) {
                Ok(f) => f,
                Err(e) => {
                    out.push(fail(format!("refit failed: {e}")));
                    continue;
                }
            };
            if fit.t_pvalues.iter().any(|p| !(*p <= c.alpha)) {
                out.push(fail("coefficient t-test above alpha".into()));
            }
            if !(fit.f_pvalue <= c.alpha) {
                out.push(fail("F-test above alpha".into()));
            }
            if !(fit.mean_relative_error <= c.max_mean_error) {
                out.push(fail("mean error above bound".into()));
            }
            match DesignDiagnostics::compute(&x) {
                Ok(d) => {
                    if !(d.max_vif() <= c.max_vif) {
                        out.push(fail("VIF above bound".into()));
                    }
                    if !(d.condition_number <= c.max_condition) {
                        out.push(fail("condition number above bound".into()));
                    }
                }
                Err(e) => out.push(fail(format!("diagnostics failed: {e}"))),
            }
            if row.regressors.len() + 2 > row.samples {
                out.push(fail("more regressors than samples - 2".into()));
            }
        }
        out
    }
}

/// Fits every indicator independently. With `holdout_last_year` the final
/// panel year is excluded from fitting (needs at least five panel years).
pub fn fit_gbopn(
    panel: &IndicatorPanel,
    criteria: &FitCriteria,
    holdout_last_year: bool,
) -> Result<CoefficientNetwork, MlrError> {
    criteria.validate()?;
    let fit_panel;
    let panel = if holdout_last_year {
        if panel.n_years() < 5 {
            return Err(MlrError::InsufficientYears {
                have: panel.n_years(),
                need: 5,
            });
        }
        fit_panel = panel.without_last_year()?;
        &fit_panel
    } else {
        panel
    };
    let data = FitData::new(panel);
    let rows: Vec<RowFit> = (0..panel.indicators().len())
        .into_par_iter()
        .map(|i| fit_row(&data, i, criteria))
        .collect();
    Ok(CoefficientNetwork {
        fit_first_year: panel.first_year(),
        fit_last_year: panel.last_year(),
        criteria: *criteria,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastEntry {
    pub indicator: IndicatorId,
    pub predicted: f64,
    pub actual: Option<f64>,
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub indicator: IndicatorId,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub from_year: i32,
    pub entries: Vec<ForecastEntry>,
    pub skipped: Vec<SkippedRow>,
}

impl Forecast {
    pub fn median_error(&self) -> Option<f64> {
        let mut e: Vec<f64> = self.entries.iter().filter_map(|e| e.relative_error).collect();
        median(&mut e)
    }
}

/// Applies the evolution operator once: `I_i(from+1) = sum_j beta_ij I_j(from) + c_i`
/// for every accepted row.
pub fn forecast(coeffs: &CoefficientNetwork, panel: &IndicatorPanel, from_year: i32) -> Result<Forecast, MlrError> {
    if from_year < panel.first_year() || from_year > panel.last_year() {
        return Err(MlrError::YearOutOfRange(from_year));
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for row in coeffs.rows.iter().filter(|r| r.is_accepted()) {
        let mut predicted = row.intercept;
        let mut missing = None;
        for g in &row.regressors {
            match panel.index_of(&g.indicator).and_then(|i| panel.value(i, from_year)) {
                Some(v) => predicted += g.beta * v,
                None => {
                    missing = Some(g.indicator.clone());
                    break;
                }
            }
        }
        if let Some(m) = missing {
            skipped.push(SkippedRow {
                indicator: row.regressand.clone(),
                reason: format!("regressor {m} missing in {from_year}"),
            });
            continue;
        }
        let actual = panel
            .index_of(&row.regressand)
            .and_then(|i| panel.value(i, from_year + 1));
        let relative_error = actual.filter(|a| *a != 0.0).map(|a| (predicted - a).abs() / a.abs());
        entries.push(ForecastEntry {
            indicator: row.regressand.clone(),
            predicted,
            actual,
            relative_error,
        });
    }
    Ok(Forecast {
        from_year,
        entries,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeTracking {
    pub indicator: IndicatorId,
    /// Time-averaged value `S`.
    pub size: f64,
    /// Tracking centrality `T`.
    pub tracking: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedEdge {
    pub regressor: IndicatorId,
    pub regressand: IndicatorId,
    pub beta: f64,
    pub r2: f64,
    /// `sqrt(r2) * S_regressand`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingScore {
    pub nodes: Vec<NodeTracking>,
    pub edges: Vec<TrackedEdge>,
}

impl TrackingScore {
    pub fn tracking_of(&self, id: &IndicatorId) -> Option<f64> {
        self.nodes.iter().find(|n| &n.indicator == id).map(|n| n.tracking)
    }
}

/// Tracking centrality: for every regressor, the sum over its regressands of
/// `sqrt(R²) * S`.
pub fn tracking_centrality(
    coeffs: &CoefficientNetwork,
    sizes: &BTreeMap<IndicatorId, f64>,
) -> Result<TrackingScore, MlrError> {
    let size_of = |id: &IndicatorId| sizes.get(id).copied().ok_or_else(|| MlrError::MissingSize(id.clone()));
    let mut totals: BTreeMap<IndicatorId, f64> = BTreeMap::new();
    for id in coeffs.indicators() {
        totals.insert(id.clone(), 0.0);
    }
    let mut edges = Vec::new();
    for e in coeffs.edges() {
        let value = e.r2.sqrt() * size_of(&e.regressand)?;
        *totals.entry(e.regressor.clone()).or_insert(0.0) += value;
        edges.push(TrackedEdge {
            regressor: e.regressor,
            regressand: e.regressand,
            beta: e.beta,
            r2: e.r2,
            value,
        });
    }
    let nodes = totals
        .into_iter()
        .map(|(id, tracking)| {
            Ok(NodeTracking {
                size: size_of(&id)?,
                indicator: id,
                tracking,
            })
        })
        .collect::<Result<_, MlrError>>()?;
    Ok(TrackingScore { nodes, edges })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum PathResult {
    Found {
        path: Vec<IndicatorId>,
        /// Sum of the regressand fit errors along the path.
        error_bound: f64,
    },
    NoPath,
}

/// Shortest regressor-to-regressand path from `source` to `target` (fewest
/// edges, then smallest summed fit error).
pub fn path_track(
    coeffs: &CoefficientNetwork,
    source: &IndicatorId,
    target: &IndicatorId,
) -> Result<PathResult, MlrError> {
    for id in [source, target] {
        if coeffs.row(id).is_none() {
            return Err(MlrError::UnknownIndicator(id.clone()));
        }
    }
    if source == target {
        return Ok(PathResult::Found {
            path: vec![source.clone()],
            error_bound: 0.0,
        });
    }
    let mut out: BTreeMap<&IndicatorId, Vec<&IndicatorId>> = BTreeMap::new();
    for row in coeffs.rows.iter().filter(|r| r.is_accepted()) {
        for g in &row.regressors {
            out.entry(&g.indicator).or_default().push(&row.regressand);
        }
    }
    let err_of = |id: &IndicatorId| coeffs.row(id).and_then(|r| r.mean_error).unwrap_or(0.0);

    // BFS layers, then best (error, path) within the shortest-hop DAG
    let mut dist: BTreeMap<&IndicatorId, usize> = BTreeMap::new();
    let mut best: BTreeMap<&IndicatorId, (f64, Vec<&IndicatorId>)> = BTreeMap::new();
    dist.insert(source, 0);
    best.insert(source, (0.0, vec![source]));
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u];
        let (eu, pu) = best[u].clone();
        for &v in out.get(u).map(Vec::as_slice).unwrap_or_default() {
            let cand_err = eu + err_of(v);
            match dist.get(v) {
                None => {
                    dist.insert(v, du + 1);
                    let mut p = pu.clone();
                    p.push(v);
                    best.insert(v, (cand_err, p));
                    queue.push_back(v);
                }
                Some(&dv) if dv == du + 1 => {
                    let mut p = pu.clone();
                    p.push(v);
                    let cur = &best[v];
                    if cand_err < cur.0 || (cand_err == cur.0 && p < cur.1) {
                        best.insert(v, (cand_err, p));
                    }
                }
                _ => {}
            }
        }
    }
    Ok(match best.remove(target) {
        Some((error_bound, path)) => PathResult::Found {
            path: path.into_iter().cloned().collect(),
            error_bound,
        },
        None => PathResult::NoPath,
    })
}
