//! Portfolio-investment network density, the non-linear short-term memory
//! model (NLSMM) linking it to derivative market values, and the derived
//! warning signal.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{FlowNetwork, GraphError};
use crate::stats;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PinError {
    #[error("invalid year-month {0:?}; expected YYYY-MM")]
    BadYearMonth(String),
    #[error("network without a year stamp")]
    MissingYear,
    #[error("two networks for year {0}")]
    DuplicateYear(i32),
    #[error("largest SCC in {year} has {nodes} node(s) above the threshold")]
    CollapsedComponent { year: i32, nodes: usize },
    #[error("reference time {0} not in the density series")]
    MissingReference(YearMonth),
    #[error("density must be positive, got {value} at {time}")]
    NonPositiveDensity { time: YearMonth, value: f64 },
    #[error("normalized density must be positive, got {0}")]
    NonPositiveRhoBar(f64),
    #[error("series needs at least {need} points, got {have}")]
    TooShort { have: usize, need: usize },
    #[error("times must be strictly increasing ({0} follows {1})")]
    Unordered(YearMonth, YearMonth),
    #[error("series value at {0} must be finite and non-negative")]
    BadValue(YearMonth),
    #[error("no lead/lag shift leaves 4 overlapping points")]
    InsufficientOverlap,
    #[error("delta_t grid must be non-empty multiples of 6 months, got {0:?}")]
    BadDeltaGrid(Vec<i32>),
    #[error("reference value must be positive")]
    BadReferenceValue,
    #[error("f_max must be positive")]
    BadFmax,
    #[error("reference-variable values must be positive")]
    BadReferenceVariable,
    #[error("model and reference-variable series do not overlap in time")]
    DisjointRanges,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Calendar month, ordered chronologically; text form `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Result<Self, PinError> {
        if !(1..=12).contains(&month) {
            return Err(PinError::BadYearMonth(format!("{year}-{month}")));
        }
        Ok(Self { year, month })
    }

    /// December of `year`, where annual stock data are stamped.
    pub fn year_end(year: i32) -> Self {
        Self { year, month: 12 }
    }

    /// Months since year 0.
    pub fn index(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_index(idx: i64) -> Self {
        Self {
            year: idx.div_euclid(12) as i32,
            month: (idx.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn add_months(self, months: i64) -> Self {
        Self::from_index(self.index() + months)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = PinError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PinError::BadYearMonth(s.to_owned());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Self::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub time: YearMonth,
    pub rho: f64,
    pub rho_bar: f64,
}

/// Edge density of the thresholded largest SCC over time, with its
/// normalization `rho_bar = rho / rho(reference)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySeries {
    pub points: Vec<DensityPoint>,
    /// Edge threshold in USD, when the series was built from networks.
    pub threshold: Option<f64>,
    pub reference: YearMonth,
}

impl DensitySeries {
    /// Validates ordering and positivity and normalizes at `reference`
    /// (default: first point).
    pub fn from_rho(
        points: Vec<(YearMonth, f64)>,
        threshold: Option<f64>,
        reference: Option<YearMonth>,
    ) -> Result<Self, PinError> {
        if points.is_empty() {
            return Err(PinError::TooShort { have: 0, need: 1 });
        }
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(PinError::Unordered(w[1].0, w[0].0));
            }
        }
        for &(time, value) in &points {
            if !(value > 0.0 && value <= 1.0) {
                return Err(PinError::NonPositiveDensity { time, value });
            }
        }
        let reference = reference.unwrap_or(points[0].0);
        let rho_r = points
            .iter()
            .find(|p| p.0 == reference)
            .ok_or(PinError::MissingReference(reference))?
            .1;
        Ok(Self {
            points: points
                .into_iter()
                .map(|(time, rho)| DensityPoint {
                    time,
                    rho,
                    rho_bar: rho / rho_r,
                })
                .collect(),
            threshold,
            reference,
        })
    }

    pub fn rho_bar_at(&self, time: YearMonth) -> Option<f64> {
        self.points
            .binary_search_by(|p| p.time.cmp(&time))
            .ok()
            .map(|i| self.points[i].rho_bar)
    }

    pub fn rho_bar(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rho_bar).collect()
    }
}

/// Density of the thresholded largest SCC of each yearly network, stamped at
/// December of its year.
pub fn build_density_series(
    networks: &[FlowNetwork],
    threshold: f64,
    reference_year: Option<i32>,
) -> Result<DensitySeries, PinError> {
    let mut per_year: Vec<(i32, &FlowNetwork)> = Vec::with_capacity(networks.len());
    for net in networks {
        per_year.push((net.year().ok_or(PinError::MissingYear)?, net));
    }
    per_year.sort_by_key(|p| p.0);
    if let Some(w) = per_year.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(PinError::DuplicateYear(w[0].0));
    }
    let points = per_year
        .into_par_iter()
        .map(|(year, net)| {
            let scc = net.threshold_filter(threshold).largest_scc();
            if scc.node_count() < 2 {
                return Err(PinError::CollapsedComponent {
                    year,
                    nodes: scc.node_count(),
                });
            }
            Ok((YearMonth::year_end(year), scc.edge_density()?))
        })
        .collect::<Result<Vec<_>, PinError>>()?;
    DensitySeries::from_rho(points, Some(threshold), reference_year.map(YearMonth::year_end))
}

/// Grid spacing of resampled density series, in months.
pub const RESAMPLE_MONTHS: i64 = 6;

/// Linear interpolation of `rho` onto a 6-month grid starting at the first
/// point; no extrapolation past the last point.
pub fn resample_density(series: &DensitySeries) -> Result<DensitySeries, PinError> {
    let pts = &series.points;
    if pts.len() < 2 {
        return Err(PinError::TooShort {
            have: pts.len(),
            need: 2,
        });
    }
    let start = pts[0].time.index();
    let end = pts[pts.len() - 1].time.index();
    let mut out = Vec::new();
    let mut seg = 0;
    let mut t = start;
    while t <= end {
        while pts[seg + 1].time.index() < t {
            seg += 1;
        }
        let (a, b) = (&pts[seg], &pts[seg + 1]);
        let (ta, tb) = (a.time.index(), b.time.index());
        let w = (t - ta) as f64 / (tb - ta) as f64;
        out.push((YearMonth::from_index(t), a.rho + w * (b.rho - a.rho)));
        t += RESAMPLE_MONTHS;
    }
    let reference = if out.iter().any(|p| p.0 == series.reference) {
        series.reference
    } else {
        return Err(PinError::MissingReference(series.reference));
    };
    DensitySeries::from_rho(out, series.threshold, Some(reference))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DerivativeKind {
    #[serde(rename = "NOA")]
    Noa,
    #[serde(rename = "GMV")]
    Gmv,
}

impl DerivativeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DerivativeKind::Noa => "NOA",
            DerivativeKind::Gmv => "GMV",
        }
    }
}

impl FromStr for DerivativeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NOA" => Ok(DerivativeKind::Noa),
            "GMV" => Ok(DerivativeKind::Gmv),
            other => Err(format!("unknown derivative kind {other:?}; expected NOA or GMV")),
        }
    }
}

/// Market-value time series of one derivative product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeSeries {
    pub kind: DerivativeKind,
    pub label: String,
    pub points: Vec<(YearMonth, f64)>,
}

impl DerivativeSeries {
    pub fn new(
        kind: DerivativeKind,
        label: impl Into<String>,
        points: Vec<(YearMonth, f64)>,
    ) -> Result<Self, PinError> {
        for w in points.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(PinError::Unordered(w[1].0, w[0].0));
            }
        }
        if let Some(p) = points.iter().find(|p| !(p.1 >= 0.0 && p.1.is_finite())) {
            return Err(PinError::BadValue(p.0));
        }
        Ok(Self {
            kind,
            label: label.into(),
            points,
        })
    }
}

/// `V_r * a_r * (rho_bar(t_n)^g1 + rho_bar(t_{n-1})^g2)` for every point from
/// the second onward, using the preceding element as `t_{n-1}`.
pub fn nlsmm_eval(rho_bar: &[f64], a_r: f64, gamma1: f64, gamma2: f64, v_ref: f64) -> Result<Vec<f64>, PinError> {
    if rho_bar.len() < 2 {
        return Err(PinError::TooShort {
            have: rho_bar.len(),
            need: 2,
        });
    }
    if let Some(&v) = rho_bar.iter().find(|v| !(**v > 0.0)) {
        return Err(PinError::NonPositiveRhoBar(v));
    }
    Ok(rho_bar
        .windows(2)
        .map(|w| nlsmm_point(w[1], w[0], a_r, gamma1, gamma2, v_ref))
        .collect())
}

fn nlsmm_point(current: f64, previous: f64, a_r: f64, g1: f64, g2: f64, v_ref: f64) -> f64 {
    v_ref * a_r * (current.powf(g1) + previous.powf(g2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Maybe,
    Reject,
}

impl Verdict {
    pub fn from_pr(p_r: f64) -> Self {
        if p_r >= 0.9 {
            Verdict::Accept
        } else if p_r >= 0.85 {
            Verdict::Maybe
        } else {
            Verdict::Reject
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlsmmOptions {
    /// Candidate shifts in months; positive means the density leads.
    pub dt_grid: Vec<i32>,
    /// Spacing between `t_n` and `t_{n-1}`; 12 for annual holdings data.
    pub memory_lag_months: i64,
    /// `V_r`; defaults to the first positive target value after burn-in.
    pub v_ref: Option<f64>,
    /// Leading target points excluded from the fit.
    pub burn_in: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_step: f64,
    pub a_min: f64,
    pub a_max: f64,
}

impl Default for NlsmmOptions {
    fn default() -> Self {
        Self {
            dt_grid: vec![-12, -6, 0, 6, 12],
            memory_lag_months: 12,
            v_ref: None,
            burn_in: 0,
            gamma_min: -15.0,
            gamma_max: 20.0,
            gamma_step: 0.1,
            a_min: 0.1,
            a_max: 3.0,
        }
    }
}

/// Minimum number of aligned (target, density) points per shift.
pub const MIN_OVERLAP: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub time: YearMonth,
    pub observed: f64,
    pub model: f64,
}

/// Best fit at one shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftFit {
    pub delta_t: i32,
    pub a_r: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub p_r: f64,
    /// Sum of squared relative errors.
    pub objective: f64,
    pub points: Vec<FitPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlsmmFit {
    pub label: String,
    pub kind: DerivativeKind,
    pub a_r: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `gamma2 / gamma1`; `None` when `gamma1 <= 0`.
    pub m: Option<f64>,
    pub delta_t: i32,
    pub p_r: f64,
    pub verdict: Verdict,
    pub v_ref: f64,
    pub objective: f64,
    pub points: Vec<FitPoint>,
    /// Best fit at every shift with enough overlap, in grid order.
    pub shifts: Vec<ShiftFit>,
}

struct Aligned {
    times: Vec<YearMonth>,
    current: Vec<f64>,
    memory: Vec<f64>,
    target: Vec<f64>,
}

fn align(density: &DensitySeries, target: &[(YearMonth, f64)], dt: i32, lag: i64) -> Aligned {
    let mut a = Aligned {
        times: Vec::new(),
        current: Vec::new(),
        memory: Vec::new(),
        target: Vec::new(),
    };
    for &(t, y) in target {
        if !(y > 0.0) {
            continue;
        }
        let tc = t.add_months(-i64::from(dt));
        if let (Some(c), Some(m)) = (density.rho_bar_at(tc), density.rho_bar_at(tc.add_months(-lag))) {
            a.times.push(t);
            a.current.push(c);
            a.memory.push(m);
            a.target.push(y);
        }
    }
    a
}

/// Objective with `a_r` profiled out: for fixed exponents the relative
/// residuals `a u_k - 1` are linear in `a`.
fn profile_a(u: &[f64], a_min: f64, a_max: f64) -> (f64, f64) {
    let su: f64 = u.iter().sum();
    let suu: f64 = u.iter().map(|x| x * x).sum();
    let a = if suu > 0.0 {
        (su / suu).clamp(a_min, a_max)
    } else {
        a_min
    };
    let obj = u.iter().map(|x| (a * x - 1.0).powi(2)).sum();
    (a, obj)
}

fn objective(al: &Aligned, v_ref: f64, a: f64, g1: f64, g2: f64) -> f64 {
    (0..al.target.len())
        .map(|k| {
            let m = nlsmm_point(al.current[k], al.memory[k], a, g1, g2, v_ref);
            ((m - al.target[k]) / al.target[k]).powi(2)
        })
        .sum()
}

fn fit_shift(al: &Aligned, v_ref: f64, dt: i32, opts: &NlsmmOptions) -> ShiftFit {
    let n_g = ((opts.gamma_max - opts.gamma_min) / opts.gamma_step + 1e-9).floor() as usize + 1;
    let gammas: Vec<f64> = (0..n_g).map(|i| opts.gamma_min + i as f64 * opts.gamma_step).collect();
    let n = al.target.len();
    let scaled =
        |base: &[f64], g: f64| -> Vec<f64> { (0..n).map(|k| v_ref * base[k].powf(g) / al.target[k]).collect() };
    let cur_tab: Vec<Vec<f64>> = gammas.iter().map(|&g| scaled(&al.current, g)).collect();
    let mem_tab: Vec<Vec<f64>> = gammas.iter().map(|&g| scaled(&al.memory, g)).collect();

    // coarse grid; ties resolve to the earliest grid point
    let mut best = (f64::INFINITY, opts.a_min, gammas[0], gammas[0]);
    let mut u = vec![0.0; n];
    for (i, c) in cur_tab.iter().enumerate() {
        for (j, m) in mem_tab.iter().enumerate() {
            for k in 0..n {
                u[k] = c[k] + m[k];
            }
            if u.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let (a, obj) = profile_a(&u, opts.a_min, opts.a_max);
            if obj < best.0 {
                best = (obj, a, gammas[i], gammas[j]);
            }
        }
    }
    let (mut obj, mut a, mut g1, mut g2) = best;
    if obj.is_finite() {
        (a, g1, g2, obj) = refine(al, v_ref, a, g1, g2, obj);
    }
    let model: Vec<f64> = (0..n)
        .map(|k| nlsmm_point(al.current[k], al.memory[k], a, g1, g2, v_ref))
        .collect();
    // an undefined correlation (flat model) counts as no agreement
    let p_r = stats::pearson(&model, &al.target).unwrap_or(0.0);
    ShiftFit {
        delta_t: dt,
        a_r: a,
        gamma1: g1,
        gamma2: g2,
        p_r,
        objective: obj,
        points: (0..n)
            .map(|k| FitPoint {
                time: al.times[k],
                observed: al.target[k],
                model: model[k],
            })
            .collect(),
    }
}

/// Levenberg-Marquardt on (a, g1, g2) with `a` kept positive.
fn refine(al: &Aligned, v_ref: f64, a0: f64, g10: f64, g20: f64, obj0: f64) -> (f64, f64, f64, f64) {
    let (mut a, mut g1, mut g2, mut obj) = (a0, g10, g20, obj0);
    let mut lambda = 1e-3;
    let n = al.target.len();
    for _ in 0..500 {
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for k in 0..n {
            let (c, m, y) = (al.current[k], al.memory[k], al.target[k]);
            let pc = v_ref * c.powf(g1) / y;
            let pm = v_ref * m.powf(g2) / y;
            let r = a * (pc + pm) - 1.0;
            let j = Vector3::new(pc + pm, a * pc * c.ln(), a * pm * m.ln());
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut damped = jtj;
            for d in 0..3 {
                damped[(d, d)] += lambda * jtj[(d, d)].max(1e-12);
            }
            let Some(step) = damped.lu().solve(&(-jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let (na, ng1, ng2) = (a + step[0], g1 + step[1], g2 + step[2]);
            let nobj = if na > 0.0 {
                objective(al, v_ref, na, ng1, ng2)
            } else {
                f64::INFINITY
            };
            if nobj.is_finite() && nobj < obj {
                let gain = obj - nobj;
                (a, g1, g2, obj) = (na, ng1, ng2, nobj);
                lambda = (lambda / 10.0).max(1e-12);
                improved = gain > 1e-15 * obj.max(1e-300);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    (a, g1, g2, obj)
}

/// Least-squares NLSMM fit of `target` against `density` (normalized), with
/// a lead/lag search over `opts.dt_grid`. The shift with the highest Pearson
/// `p_r` wins; equal `p_r` falls back to the lower objective.
pub fn nlsmm_fit(
    density: &DensitySeries,
    target: &DerivativeSeries,
    opts: &NlsmmOptions,
) -> Result<NlsmmFit, PinError> {
    if opts.dt_grid.is_empty() || opts.dt_grid.iter().any(|d| d % 6 != 0) {
        return Err(PinError::BadDeltaGrid(opts.dt_grid.clone()));
    }
    let used: Vec<(YearMonth, f64)> = target.points.iter().skip(opts.burn_in).copied().collect();
    let v_ref = match opts.v_ref {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(_) => return Err(PinError::BadReferenceValue),
        None => used
            .iter()
            .map(|p| p.1)
            .find(|v| *v > 0.0)
            .ok_or(PinError::InsufficientOverlap)?,
    };
    let shifts: Vec<ShiftFit> = opts
        .dt_grid
        .par_iter()
        .filter_map(|&dt| {
            let al = align(density, &used, dt, opts.memory_lag_months);
            (al.target.len() >= MIN_OVERLAP).then(|| fit_shift(&al, v_ref, dt, opts))
        })
        .collect();
    let best = shifts
        .iter()
        .reduce(|b, s| {
            let better = match s.p_r.partial_cmp(&b.p_r) {
                Some(Ordering::Greater) => s.p_r - b.p_r > 1e-12 || s.objective < b.objective,
                Some(Ordering::Equal) => s.objective < b.objective,
                _ => b.p_r - s.p_r <= 1e-12 && s.objective < b.objective,
            };
            if better {
                s
            } else {
                b
            }
        })
        .ok_or(PinError::InsufficientOverlap)?
        .clone();
    Ok(NlsmmFit {
        label: target.label.clone(),
        kind: target.kind,
        a_r: best.a_r,
        gamma1: best.gamma1,
        gamma2: best.gamma2,
        m: (best.gamma1 > 0.0).then(|| best.gamma2 / best.gamma1),
        delta_t: best.delta_t,
        p_r: best.p_r,
        verdict: Verdict::from_pr(best.p_r),
        v_ref,
        objective: best.objective,
        points: best.points,
        shifts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningConfig {
    /// Reference variable (e.g. world GDP), strictly positive.
    pub rv: Vec<(YearMonth, f64)>,
    pub f_max: f64,
}

/// Annual reference values stamped so that the value for year `Y` sits at
/// December of `Y - 1`; mid-year points then interpolate to the mean of the
/// current and following year.
pub fn annual_reference(values: &[(i32, f64)]) -> Vec<(YearMonth, f64)> {
    let mut v: Vec<(YearMonth, f64)> = values.iter().map(|&(y, x)| (YearMonth::year_end(y - 1), x)).collect();
    v.sort_by_key(|p| p.0);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WarningPoint {
    pub time: YearMonth,
    pub value: f64,
    /// `f_max * V_RV(t)`.
    pub threshold: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningReport {
    pub f_max: f64,
    pub points: Vec<WarningPoint>,
    pub warnings: Vec<YearMonth>,
    pub first_warning: Option<YearMonth>,
    /// Model points outside the reference-variable range.
    pub skipped: usize,
}

fn interpolate(series: &[(YearMonth, f64)], t: YearMonth) -> Option<f64> {
    let i = series.partition_point(|p| p.0 < t);
    if i < series.len() && series[i].0 == t {
        return Some(series[i].1);
    }
    if i == 0 || i == series.len() {
        return None;
    }
    let (a, b) = (series[i - 1], series[i]);
    let w = (t.index() - a.0.index()) as f64 / (b.0.index() - a.0.index()) as f64;
    Some(a.1 + w * (b.1 - a.1))
}

/// Times where `V_D(t) > f_max * V_RV(t)`, with the reference variable
/// linearly interpolated onto the model times.
pub fn warning_signal(model: &[(YearMonth, f64)], config: &WarningConfig) -> Result<WarningReport, PinError> {
    if !(config.f_max > 0.0 && config.f_max.is_finite()) {
        return Err(PinError::BadFmax);
    }
    if config.rv.iter().any(|p| !(p.1 > 0.0 && p.1.is_finite())) {
        return Err(PinError::BadReferenceVariable);
    }
    for w in config.rv.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(PinError::Unordered(w[1].0, w[0].0));
        }
    }
    let mut points = Vec::new();
    let mut skipped = 0;
    for &(time, value) in model {
        match interpolate(&config.rv, time) {
            Some(rv) => {
                let threshold = config.f_max * rv;
                points.push(WarningPoint {
                    time,
                    value,
                    threshold,
                    warning: value > threshold,
                });
            }
            None => skipped += 1,
        }
    }
    if points.is_empty() {
        return Err(PinError::DisjointRanges);
    }
    let warnings: Vec<YearMonth> = points.iter().filter(|p| p.warning).map(|p| p.time).collect();
    Ok(WarningReport {
        f_max: config.f_max,
        first_warning: warnings.first().copied(),
        warnings,
        points,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn ym(s: &str) -> YearMonth {
        s.parse().unwrap()
    }

    #[test]
    fn year_month_parsing_and_arithmetic() {
        assert_eq!(ym("2008-06").to_string(), "2008-06");
        assert_eq!(ym("2008-12").add_months(6), ym("2009-06"));
        assert_eq!(ym("2008-01").add_months(-1), ym("2007-12"));
        assert!("2008-13".parse::<YearMonth>().is_err());
        assert!("2008-6".parse::<YearMonth>().is_err());
        assert!("200806".parse::<YearMonth>().is_err());
    }

    fn complete(year: i32, n: usize, w: f64) -> FlowNetwork {
        let mut recs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    recs.push(EdgeRecord::new(format!("c{i}"), format!("c{j}"), w));
                }
            }
        }
        FlowNetwork::from_records(recs).unwrap().network.with_year(year)
    }

    /// Ring plus `extra` chords over 10 nodes.
    fn ring_with_chords(year: i32, extra: usize) -> FlowNetwork {
        let n = 10;
        let mut recs: Vec<EdgeRecord> = (0..n)
            .map(|i| EdgeRecord::new(format!("c{i}"), format!("c{}", (i + 1) % n), 100.0))
            .collect();
        let mut added = 0;
        'outer: for i in 0..n {
            for j in 0..n {
                if added == extra {
                    break 'outer;
                }
                if i != j && j != (i + 1) % n {
                    recs.push(EdgeRecord::new(format!("c{i}"), format!("c{j}"), 100.0));
                    added += 1;
                }
            }
        }
        FlowNetwork::from_records(recs).unwrap().network.with_year(year)
    }

    #[test]
    fn identical_networks_give_constant_density() {
        let nets: Vec<FlowNetwork> = (2002..2006).map(|y| complete(y, 4, 10.0)).collect();
        let s = build_density_series(&nets, 5.0, None).unwrap();
        assert!(s.points.iter().all(|p| p.rho == 1.0 && p.rho_bar == 1.0));
        assert_eq!(s.reference, ym("2002-12"));
    }

    #[test]
    fn doubling_density_normalizes_to_powers_of_two() {
        // ring of 10 nodes has 10 edges; doubling edges doubles density
        let nets = vec![
            ring_with_chords(2002, 0),
            ring_with_chords(2003, 10),
            ring_with_chords(2004, 30),
        ];
        let s = build_density_series(&nets, 50.0, Some(2002)).unwrap();
        let bars = s.rho_bar();
        assert_eq!(bars, vec![1.0, 2.0, 4.0]);
    }

    #[test]
    fn density_matches_filter_scc_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let nets: Vec<FlowNetwork> = (2002..2007)
            .map(|y| {
                let mut recs = Vec::new();
                for i in 0..25 {
                    for j in 0..25 {
                        if i != j && rng.random::<f64>() < 0.3 {
                            recs.push(EdgeRecord::new(
                                format!("c{i}"),
                                format!("c{j}"),
                                10f64.powf(rng.random_range(6.0..9.0)),
                            ));
                        }
                    }
                }
                FlowNetwork::from_records(recs).unwrap().network.with_year(y)
            })
            .collect();
        let s = build_density_series(&nets, 52e6, None).unwrap();
        for (p, net) in s.points.iter().zip(&nets) {
            let scc = net.threshold_filter(52e6).largest_scc();
            let n = scc.node_count() as f64;
            assert_eq!(p.rho, scc.edge_count() as f64 / (n * n - n));
        }
    }

    #[test]
    fn collapsed_year_is_named() {
        let nets = vec![complete(2002, 3, 10.0), complete(2003, 3, 1.0)];
        assert_eq!(
            build_density_series(&nets, 5.0, None),
            Err(PinError::CollapsedComponent { year: 2003, nodes: 1 })
        );
    }

    fn annual(values: &[f64]) -> DensitySeries {
        let pts = values
            .iter()
            .enumerate()
            .map(|(i, v)| (YearMonth::year_end(2002 + i as i32), *v))
            .collect();
        DensitySeries::from_rho(pts, None, None).unwrap()
    }

    #[test]
    fn resampling_cases() {
        let r = resample_density(&annual(&[0.1, 0.2])).unwrap();
        assert_eq!(r.points.len(), 3);
        assert!((r.points[1].rho - 0.15).abs() < 1e-15);
        assert_eq!(r.points[1].time, ym("2003-06"));

        let c = resample_density(&annual(&[0.3, 0.3, 0.3])).unwrap();
        assert!(c.points.iter().all(|p| p.rho == 0.3));

        // convex: 0.1, 0.2, 0.4 -> midpoints 0.15 and 0.3
        let v = resample_density(&annual(&[0.1, 0.2, 0.4])).unwrap();
        let rho: Vec<f64> = v.points.iter().map(|p| p.rho).collect();
        let expect = [0.1, 0.15, 0.2, 0.3, 0.4];
        for (a, b) in rho.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((v.points[4].rho_bar - 4.0).abs() < 1e-12);

        assert!(resample_density(&annual(&[0.1])).is_err());
        // already semiannual series are left unchanged
        assert_eq!(resample_density(&v).unwrap(), v);
    }

    #[test]
    fn eval_cases() {
        let v = nlsmm_eval(&[1.0, 1.0, 1.0], 0.5, 3.0, -2.0, 7.0).unwrap();
        assert_eq!(v, vec![7.0, 7.0]);
        let v = nlsmm_eval(&[1.0, 2.0], 0.5, 1.0, 1.0, 10.0).unwrap();
        assert_eq!(v, vec![10.0 * 0.5 * 3.0]);
        let v = nlsmm_eval(&[1.0, 1.1], 0.9, 11.0, 6.6, 1.0).unwrap();
        assert!((v[0] - 3.4678).abs() < 5e-5);
        assert!(nlsmm_eval(&[1.0, 0.0], 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(nlsmm_eval(&[1.0], 1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn eval_is_homogeneous_and_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let rho: Vec<f64> = (0..6).map(|_| rng.random_range(0.5..2.0)).collect();
            let (a, g1, g2) = (
                rng.random_range(0.1..3.0),
                rng.random_range(0.1..12.0),
                rng.random_range(0.1..12.0),
            );
            let v1 = nlsmm_eval(&rho, a, g1, g2, 3.0).unwrap();
            let v2 = nlsmm_eval(&rho, a, g1, g2, 6.0).unwrap();
            for (x, y) in v1.iter().zip(&v2) {
                assert!((2.0 * x - y).abs() <= 1e-12 * y.abs());
            }
            let bigger: Vec<f64> = rho.iter().map(|r| r * rng.random_range(1.0..1.5)).collect();
            let v3 = nlsmm_eval(&bigger, a, g1, g2, 3.0).unwrap();
            assert!(v1.iter().zip(&v3).all(|(x, y)| y >= x));
        }
    }

    #[test]
    fn verdict_boundaries_are_exact() {
        assert_eq!(Verdict::from_pr(0.90), Verdict::Accept);
        assert_eq!(Verdict::from_pr(0.899_999_999), Verdict::Maybe);
        assert_eq!(Verdict::from_pr(0.85), Verdict::Maybe);
        assert_eq!(Verdict::from_pr(0.849_999_999), Verdict::Reject);
    }

    /// Rise-then-fall annual densities, resampled to 6 months.
    fn planted_density() -> DensitySeries {
        let rho: Vec<f64> = (0..11)
            .map(|i| {
                let x = i as f64;
                0.05 * (1.0 + 0.06 * x - 0.004 * x * x + 0.0002 * x * x * x)
            })
            .collect();
        resample_density(&annual(&rho)).unwrap()
    }

    fn planted_target(density: &DensitySeries, a: f64, g1: f64, g2: f64, dt: i64, v_ref: f64) -> DerivativeSeries {
        let pts = density
            .points
            .iter()
            .filter_map(|p| {
                let t = p.time.add_months(dt);
                let m = density.rho_bar_at(p.time.add_months(-12))?;
                Some((t, nlsmm_point(p.rho_bar, m, a, g1, g2, v_ref)))
            })
            .collect();
        DerivativeSeries::new(DerivativeKind::Noa, "CDS-total", pts).unwrap()
    }

    #[test]
    fn round_trip_recovers_planted_parameters() {
        let d = planted_density();
        let target = planted_target(&d, 0.9, 11.0, 6.6, 6, 1e12);
        let opts = NlsmmOptions {
            v_ref: Some(1e12),
            ..NlsmmOptions::default()
        };
        let fit = nlsmm_fit(&d, &target, &opts).unwrap();
        assert_eq!(fit.delta_t, 6);
        assert!((fit.a_r - 0.9).abs() <= 0.05, "{fit:?}");
        assert!((fit.gamma1 - 11.0).abs() <= 0.3);
        assert!((fit.gamma2 - 6.6).abs() <= 0.3);
        assert!(fit.p_r > 0.999);
        assert_eq!(fit.verdict, Verdict::Accept);
        assert!((fit.m.unwrap() - 0.6).abs() < 0.05);
    }

    #[test]
    fn refitting_own_model_output_is_self_consistent() {
        let d = planted_density();
        let target = planted_target(&d, 1.3, 4.0, -2.0, 0, 50.0);
        let fit = nlsmm_fit(&d, &target, &NlsmmOptions::default()).unwrap();
        let own = DerivativeSeries::new(
            DerivativeKind::Gmv,
            "own",
            fit.points.iter().map(|p| (p.time, p.model)).collect(),
        )
        .unwrap();
        let opts = NlsmmOptions {
            v_ref: Some(fit.v_ref),
            ..NlsmmOptions::default()
        };
        let again = nlsmm_fit(&d, &own, &opts).unwrap();
        assert!((again.p_r - 1.0).abs() < 1e-9);
        assert_eq!(again.verdict, fit.verdict);
    }

    #[test]
    fn white_noise_targets_are_rejected() {
        let d = planted_density();
        let mut rejected = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = d
                .points
                .iter()
                .map(|p| (p.time, 100.0 + 10.0 * rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let t = DerivativeSeries::new(DerivativeKind::Noa, "noise", pts).unwrap();
            let opts = NlsmmOptions {
                gamma_step: 0.5,
                ..NlsmmOptions::default()
            };
            if nlsmm_fit(&d, &t, &opts).unwrap().verdict == Verdict::Reject {
                rejected += 1;
            }
        }
        assert!(rejected >= 95, "rejected {rejected}");
    }

    #[test]
    fn fit_rejects_short_overlap_and_bad_grid() {
        let d = annual(&[0.1, 0.2, 0.3]);
        let t = DerivativeSeries::new(DerivativeKind::Noa, "x", vec![(ym("2004-12"), 1.0)]).unwrap();
        assert_eq!(
            nlsmm_fit(&d, &t, &NlsmmOptions::default()),
            Err(PinError::InsufficientOverlap)
        );
        let opts = NlsmmOptions {
            dt_grid: vec![3],
            ..NlsmmOptions::default()
        };
        assert!(matches!(nlsmm_fit(&d, &t, &opts), Err(PinError::BadDeltaGrid(_))));
    }

    fn grid(n: usize) -> Vec<YearMonth> {
        (0..n).map(|i| ym("2003-06").add_months(6 * i as i64)).collect()
    }

    #[test]
    fn warning_cases() {
        let times = grid(10);
        let rv: Vec<(YearMonth, f64)> = times.iter().map(|t| (*t, 100.0)).collect();
        let cfg = WarningConfig {
            rv: rv.clone(),
            f_max: 0.5,
        };
        let zero: Vec<(YearMonth, f64)> = times.iter().map(|t| (*t, 0.0)).collect();
        assert!(warning_signal(&zero, &cfg).unwrap().warnings.is_empty());

        let planted: Vec<(YearMonth, f64)> = times
            .iter()
            .enumerate()
            .map(|(i, t)| (*t, if i >= 5 { 60.0 } else { 40.0 }))
            .collect();
        let r = warning_signal(&planted, &cfg).unwrap();
        assert_eq!(r.first_warning, Some(times[5]));
        assert_eq!(r.warnings.len(), 5);

        let far = vec![(ym("1990-06"), 1.0)];
        assert_eq!(warning_signal(&far, &cfg), Err(PinError::DisjointRanges));
        let bad = WarningConfig { rv, f_max: 0.0 };
        assert_eq!(warning_signal(&planted, &bad), Err(PinError::BadFmax));
    }

    #[test]
    fn annual_reference_interpolates_to_two_year_mean() {
        let rv = annual_reference(&[(2008, 60.0), (2009, 58.0)]);
        let cfg = WarningConfig { rv, f_max: 1.0 };
        let r = warning_signal(&[(ym("2008-06"), 0.0)], &cfg).unwrap();
        assert!((r.points[0].threshold - 59.0).abs() < 1e-12);
    }

    #[test]
    fn warnings_shrink_as_fmax_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let times = grid(30);
        let model: Vec<(YearMonth, f64)> = times.iter().map(|t| (*t, rng.random_range(0.0..100.0))).collect();
        let rv: Vec<(YearMonth, f64)> = times.iter().map(|t| (*t, rng.random_range(50.0..150.0))).collect();
        let mut prev: Option<Vec<YearMonth>> = None;
        for k in 1..=10 {
            let cfg = WarningConfig {
                rv: rv.clone(),
                f_max: 0.1 * k as f64,
            };
            let w = warning_signal(&model, &cfg).unwrap().warnings;
            if let Some(p) = &prev {
                assert!(w.iter().all(|t| p.contains(t)));
            }
            prev = Some(w);
        }
    }
}
