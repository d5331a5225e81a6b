//! Gate-keeping potential on flow networks and its correlation with GDP
//! growth.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeRecord, FlowNetwork, GraphError};
use crate::stats::{self, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GkpError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node {node:?} missing from the {year} network")]
    MissingNode { year: i32, node: String },
    #[error("network without a year stamp")]
    MissingYear,
    #[error("two networks for year {0}")]
    DuplicateYear(i32),
    #[error("series for {0} are not aligned on the same years")]
    Misaligned(String),
    #[error("{what} needs at least {need} points, got {have}")]
    TooShort { what: String, have: usize, need: usize },
    #[error("GDP of {country} in {year} must be positive for a percentage change")]
    NonPositiveGdp { country: String, year: i32 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Dense weight matrix over the sorted node list.
fn weight_matrix(net: &FlowNetwork) -> (Vec<&str>, DMatrix<f64>) {
    let nodes: Vec<&str> = net.nodes().collect();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut a = DMatrix::zeros(nodes.len(), nodes.len());
    for (s, t, w) in net.edges() {
        a[(index[s], index[t])] = w;
    }
    (nodes, a)
}

/// Bypass flow `[Abar^T A Abar^T]_ii` of every node: total weight of edges
/// `u -> w` whose endpoints are an in-neighbour and an out-neighbour of `i`.
pub fn bypass_terms(net: &FlowNetwork) -> BTreeMap<String, f64> {
    let (nodes, a) = weight_matrix(net);
    let support = a.map(|w| if w > 0.0 { 1.0 } else { 0.0 });
    // (Abar^T A)_iw, then contract with Abar^T_wi = Abar_iw
    let left = support.transpose() * &a;
    nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.to_string(), left.row(i).dot(&support.row(i))))
        .collect()
}

fn gkp_value(inflow: f64, outflow: f64, bypass: f64) -> f64 {
    if inflow <= 0.0 || outflow <= 0.0 {
        return 0.0;
    }
    let through = (inflow * outflow).sqrt();
    through / (through + bypass)
}

/// Gate-keeping potential of `node`; zero without in- or out-flow.
pub fn gkp(net: &FlowNetwork, node: &str) -> Result<f64, GkpError> {
    if !net.contains_node(node) {
        return Err(GkpError::UnknownNode(node.to_owned()));
    }
    let inflow = net.inflow(node);
    let outflow = net.outflow(node);
    if inflow <= 0.0 || outflow <= 0.0 {
        return Ok(0.0);
    }
    let mut bypass = 0.0;
    for (u, i, _) in net.edges() {
        if i != node {
            continue;
        }
        for (i2, w, _) in net.edges() {
            if i2 == node {
                if let Some(x) = net.weight(u, w) {
                    bypass += x;
                }
            }
        }
    }
    Ok(gkp_value(inflow, outflow, bypass))
}

/// Gate-keeping potential of every node.
pub fn gkp_all(net: &FlowNetwork) -> BTreeMap<String, f64> {
    bypass_terms(net)
        .into_iter()
        .map(|(n, b)| {
            let g = gkp_value(net.inflow(&n), net.outflow(&n), b);
            (n, g)
        })
        .collect()
}

/// Per-node yearly values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSeries {
    pub years: Vec<i32>,
    pub values: BTreeMap<String, Vec<f64>>,
}

fn sorted_by_year(networks: &[FlowNetwork]) -> Result<Vec<(i32, &FlowNetwork)>, GkpError> {
    let mut v = Vec::with_capacity(networks.len());
    for n in networks {
        v.push((n.year().ok_or(GkpError::MissingYear)?, n));
    }
    v.sort_by_key(|p| p.0);
    if let Some(w) = v.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(GkpError::DuplicateYear(w[0].0));
    }
    Ok(v)
}

fn node_series(
    networks: &[FlowNetwork],
    nodes: &[String],
    f: impl Fn(&FlowNetwork, &BTreeMap<String, f64>, &str) -> f64,
    need_gkp: bool,
) -> Result<NodeSeries, GkpError> {
    let per_year = sorted_by_year(networks)?;
    let mut values: BTreeMap<String, Vec<f64>> = nodes.iter().map(|n| (n.clone(), Vec::new())).collect();
    for (year, net) in &per_year {
        let all = if need_gkp { gkp_all(net) } else { BTreeMap::new() };
        for n in nodes {
            if !net.contains_node(n) {
                return Err(GkpError::MissingNode {
                    year: *year,
                    node: n.clone(),
                });
            }
            values.get_mut(n).expect("seeded").push(f(net, &all, n));
        }
    }
    Ok(NodeSeries {
        years: per_year.iter().map(|p| p.0).collect(),
        values,
    })
}

/// GKP of each node in each yearly network, ordered by year.
pub fn gkp_series(networks: &[FlowNetwork], nodes: &[String]) -> Result<NodeSeries, GkpError> {
    node_series(networks, nodes, |_, all, n| all[n], true)
}

/// Total inflow (imports) per node and year.
pub fn inflow_series(networks: &[FlowNetwork], nodes: &[String]) -> Result<NodeSeries, GkpError> {
    node_series(networks, nodes, |net, _, n| net.inflow(n), false)
}

/// Total outflow (exports) per node and year.
pub fn outflow_series(networks: &[FlowNetwork], nodes: &[String]) -> Result<NodeSeries, GkpError> {
    node_series(networks, nodes, |net, _, n| net.outflow(n), false)
}

/// Collapses member nodes into their group: edge weights between groups are
/// summed and edges inside a group are dropped.
pub fn merge_nodes(net: &FlowNetwork, groups: &BTreeMap<String, String>) -> Result<FlowNetwork, GkpError> {
    let rename = |n: &str| groups.get(n).cloned().unwrap_or_else(|| n.to_owned());
    let mut sums: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (s, t, w) in net.edges() {
        let (a, b) = (rename(s), rename(t));
        if a != b {
            *sums.entry((a, b)).or_insert(0.0) += w;
        }
    }
    let nodes: BTreeSet<String> = net.nodes().map(rename).collect();
    let mut out = FlowNetwork::from_records(sums.into_iter().map(|((s, t), w)| EdgeRecord::new(s, t, w)))?
        .network
        .with_nodes(nodes);
    if let Some(y) = net.year() {
        out = out.with_year(y);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GdpChange {
    /// `(g_t - g_{t-1}) / g_{t-1}`.
    #[default]
    Percentage,
    /// `g_t - g_{t-1}`.
    Absolute,
}

/// Year-on-year change of an annual series; years without a predecessor are
/// omitted.
pub fn gdp_change(country: &str, gdp: &BTreeMap<i32, f64>, mode: GdpChange) -> Result<BTreeMap<i32, f64>, GkpError> {
    let mut out = BTreeMap::new();
    for (&y, &g) in gdp {
        let Some(&prev) = gdp.get(&(y - 1)) else { continue };
        let v = match mode {
            GdpChange::Absolute => g - prev,
            GdpChange::Percentage => {
                if !(prev > 0.0) {
                    return Err(GkpError::NonPositiveGdp {
                        country: country.to_owned(),
                        year: y - 1,
                    });
                }
                (g - prev) / prev
            }
        };
        out.insert(y, v);
    }
    Ok(out)
}

/// Pearson correlations of GDP change with GKP, imports and exports.
/// `None` marks an undefined correlation (a constant series).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub country: String,
    pub corr_gkp: Option<f64>,
    pub corr_imports: Option<f64>,
    pub corr_exports: Option<f64>,
    pub years: Vec<i32>,
}

/// One country's yearly inputs to [`correlate_gdp`].
#[derive(Debug, Clone, PartialEq)]
pub struct CountryInputs<'a> {
    pub country: &'a str,
    pub years: &'a [i32],
    pub gkp: &'a [f64],
    pub imports: &'a [f64],
    pub exports: &'a [f64],
    /// `(year, change)` pairs.
    pub gdp_change: &'a [(i32, f64)],
}

fn corr(x: &[f64], y: &[f64]) -> Result<Option<f64>, GkpError> {
    match stats::pearson(x, y) {
        Ok(r) => Ok(Some(r)),
        Err(StatsError::UndefinedCorrelation) => Ok(None),
        Err(StatsError::LengthMismatch(..)) => Err(GkpError::Misaligned("pearson".into())),
        Err(_) => Err(GkpError::TooShort {
            what: "correlation".into(),
            have: x.len(),
            need: 3,
        }),
    }
}

pub fn correlate_gdp(inputs: &CountryInputs<'_>) -> Result<CorrelationRow, GkpError> {
    let n = inputs.years.len();
    let gdp_years: Vec<i32> = inputs.gdp_change.iter().map(|p| p.0).collect();
    if gdp_years != inputs.years || [inputs.gkp.len(), inputs.imports.len(), inputs.exports.len()] != [n; 3] {
        return Err(GkpError::Misaligned(inputs.country.to_owned()));
    }
    if n < 3 {
        return Err(GkpError::TooShort {
            what: format!("series for {}", inputs.country),
            have: n,
            need: 3,
        });
    }
    let change: Vec<f64> = inputs.gdp_change.iter().map(|p| p.1).collect();
    Ok(CorrelationRow {
        country: inputs.country.to_owned(),
        corr_gkp: corr(inputs.gkp, &change)?,
        corr_imports: corr(inputs.imports, &change)?,
        corr_exports: corr(inputs.exports, &change)?,
        years: inputs.years.to_vec(),
    })
}

/// Correlation rows for every country with GDP data present in all
/// networks, over the network years that have a GDP change.
pub fn correlation_report(
    networks: &[FlowNetwork],
    gdp: &BTreeMap<String, BTreeMap<i32, f64>>,
    mode: GdpChange,
) -> Result<Vec<CorrelationRow>, GkpError> {
    let per_year = sorted_by_year(networks)?;
    let mut rows = Vec::new();
    for (country, series) in gdp {
        if !per_year.iter().all(|(_, n)| n.contains_node(country)) {
            continue;
        }
        let change = gdp_change(country, series, mode)?;
        let used: Vec<(i32, &FlowNetwork)> = per_year
            .iter()
            .filter(|(y, _)| change.contains_key(y))
            .copied()
            .collect();
        let years: Vec<i32> = used.iter().map(|p| p.0).collect();
        let nets: Vec<FlowNetwork> = used.iter().map(|p| p.1.clone()).collect();
        let nodes = [country.clone()];
        let g = gkp_series(&nets, &nodes)?;
        let imp = inflow_series(&nets, &nodes)?;
        let exp = outflow_series(&nets, &nodes)?;
        let gdp_change: Vec<(i32, f64)> = years.iter().map(|y| (*y, change[y])).collect();
        rows.push(correlate_gdp(&CountryInputs {
            country,
            years: &years,
            gkp: &g.values[country],
            imports: &imp.values[country],
            exports: &exp.values[country],
            gdp_change: &gdp_change,
        })?);
    }
    Ok(rows)
}
