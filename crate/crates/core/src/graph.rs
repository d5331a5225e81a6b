//! Weighted directed flow networks: thresholding, largest strongly-connected
//! component, edge density and percolation sweeps.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("invalid weight {weight} on edge {from} -> {to}")]
    InvalidWeight { from: String, to: String, weight: f64 },
    #[error("edge density undefined for {0} node(s); need at least 2")]
    UndefinedDensity(usize),
    #[error("threshold grid must be non-empty and strictly increasing")]
    InvalidGrid,
    #[error("profile has no percolation point (largest component never shrinks)")]
    NoPercolationPoint,
    #[error("percolation profile needs at least 3 entries, got {0}")]
    ProfileTooShort(usize),
    #[error("unknown node {0}")]
    UnknownNode(String),
}

/// One directed flow record as read from an edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub weight: f64,
}

impl EdgeRecord {
    pub fn new(source: impl Into<String>, target: impl Into<String>, weight: f64) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            weight,
        }
    }
}

/// Immutable weighted digraph keyed by string node ids.
///
/// Every stored edge has a strictly positive weight and distinct endpoints;
/// a zero weight means the edge is absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowNetwork {
    nodes: BTreeSet<String>,
    edges: BTreeMap<(String, String), f64>,
    year: Option<i32>,
}

/// Result of [`FlowNetwork::from_records`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltNetwork {
    pub network: FlowNetwork,
    pub self_loops_dropped: usize,
}

impl FlowNetwork {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a network from edge records.
    ///
    /// Zero-weight records and self-loops contribute their endpoints to the
    /// node set but no edge. Duplicate `(source, target)` pairs and negative
    /// or non-finite weights are rejected.
    pub fn from_records<I>(records: I) -> Result<BuiltNetwork, GraphError>
    where
        I: IntoIterator<Item = EdgeRecord>,
    {
        let mut nodes = BTreeSet::new();
        let mut edges = BTreeMap::new();
        let mut seen = BTreeSet::new();
        let mut self_loops_dropped = 0;
        for rec in records {
            if !rec.weight.is_finite() || rec.weight < 0.0 {
                return Err(GraphError::InvalidWeight {
                    from: rec.source,
                    to: rec.target,
                    weight: rec.weight,
                });
            }
            let key = (rec.source.clone(), rec.target.clone());
            if !seen.insert(key.clone()) {
                return Err(GraphError::DuplicateEdge(rec.source, rec.target));
            }
            nodes.insert(rec.source.clone());
            nodes.insert(rec.target.clone());
            if rec.source == rec.target {
                self_loops_dropped += 1;
                continue;
            }
            if rec.weight > 0.0 {
                edges.insert(key, rec.weight);
            }
        }
        Ok(BuiltNetwork {
            network: FlowNetwork {
                nodes,
                edges,
                year: None,
            },
            self_loops_dropped,
        })
    }

    pub fn with_year(mut self, year: i32) -> Self {
        self.year = Some(year);
        self
    }

    /// Adds isolated nodes (nodes already present are left untouched).
    pub fn with_nodes<I, S>(mut self, nodes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.nodes.extend(nodes.into_iter().map(Into::into));
        self
    }

    pub fn year(&self) -> Option<i32> {
        self.year
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> + '_ {
        self.nodes.iter().map(String::as_str)
    }

    pub fn contains_node(&self, id: &str) -> bool {
        self.nodes.contains(id)
    }

    /// Edges in `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, f64)> + '_ {
        self.edges.iter().map(|((s, t), w)| (s.as_str(), t.as_str(), *w))
    }

    pub fn weight(&self, source: &str, target: &str) -> Option<f64> {
        self.edges.get(&(source.to_owned(), target.to_owned())).copied()
    }

    pub fn max_weight(&self) -> Option<f64> {
        self.edges.values().copied().reduce(f64::max)
    }

    /// Total weight entering `node`.
    pub fn inflow(&self, node: &str) -> f64 {
        self.edges.iter().filter(|((_, t), _)| t == node).map(|(_, w)| *w).sum()
    }

    /// Total weight leaving `node`.
    pub fn outflow(&self, node: &str) -> f64 {
        self.edges
            .range((node.to_owned(), String::new())..)
            .take_while(|((s, _), _)| s == node)
            .map(|(_, w)| *w)
            .sum()
    }

    /// Keeps every edge with weight `>= e_th`; the node set is unchanged.
    pub fn threshold_filter(&self, e_th: f64) -> FlowNetwork {
        FlowNetwork {
            nodes: self.nodes.clone(),
            edges: self
                .edges
                .iter()
                .filter(|(_, w)| **w >= e_th)
                .map(|(k, w)| (k.clone(), *w))
                .collect(),
            year: self.year,
        }
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<String>) -> FlowNetwork {
        FlowNetwork {
            nodes: self.nodes.intersection(keep).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|((s, t), _)| keep.contains(s) && keep.contains(t))
                .map(|(k, w)| (k.clone(), *w))
                .collect(),
            year: self.year,
        }
    }

    /// All strongly connected components, each sorted, in no particular order.
    pub fn strongly_connected_components(&self) -> Vec<Vec<String>> {
        let ids: Vec<&String> = self.nodes.iter().collect();
        let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(ids.len(), self.edges.len());
        for _ in &ids {
            g.add_node(());
        }
        for (s, t) in self.edges.keys() {
            g.add_edge(NodeIndex::new(index[s.as_str()]), NodeIndex::new(index[t.as_str()]), ());
        }
        tarjan_scc(&g)
            .into_iter()
            .map(|comp| {
                let mut names: Vec<String> = comp.into_iter().map(|ix| ids[ix.index()].clone()).collect();
                names.sort();
                names
            })
            .collect()
    }

    /// Induced subgraph on the largest strongly connected component.
    ///
    /// Equal-size components are ordered by their sorted node-id lists and the
    /// smallest one wins. A node without cycles is its own one-node component.
    pub fn largest_scc(&self) -> FlowNetwork {
        let best = self
            .strongly_connected_components()
            .into_iter()
            .min_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        match best {
            Some(comp) => self.induced(&comp.into_iter().collect()),
            None => FlowNetwork {
                year: self.year,
                ..FlowNetwork::default()
            },
        }
    }

    /// `M / (N^2 - N)`.
    pub fn edge_density(&self) -> Result<f64, GraphError> {
        let n = self.nodes.len();
        if n < 2 {
            return Err(GraphError::UndefinedDensity(n));
        }
        Ok(self.edges.len() as f64 / (n * n - n) as f64)
    }
}

/// Threshold grid for a percolation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "spacing", rename_all = "snake_case")]
pub enum ThresholdGrid {
    /// `per_decade` points per factor of ten, from `min` up to and including `max`.
    Log {
        min: f64,
        max: f64,
        per_decade: u32,
    },
    Explicit {
        thresholds: Vec<f64>,
    },
}

impl ThresholdGrid {
    pub fn log(min: f64, max: f64, per_decade: u32) -> Self {
        ThresholdGrid::Log { min, max, per_decade }
    }

    pub fn explicit(thresholds: Vec<f64>) -> Self {
        ThresholdGrid::Explicit { thresholds }
    }

    pub fn points(&self) -> Result<Vec<f64>, GraphError> {
        let pts = match self {
            ThresholdGrid::Log { min, max, per_decade } => {
                if !(*min > 0.0 && max > min && *per_decade > 0) || !max.is_finite() {
                    return Err(GraphError::InvalidGrid);
                }
                let step = 1.0 / f64::from(*per_decade);
                let span = (max / min).log10();
                // snap so that exact decades land exactly on the grid
                let count = (span / step + 1e-9).floor() as usize;
                (0..=count).map(|k| min * 10f64.powf(k as f64 * step)).collect()
            }
            ThresholdGrid::Explicit { thresholds } => thresholds.clone(),
        };
        if pts.is_empty() || pts.iter().any(|t| !t.is_finite()) || pts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GraphError::InvalidGrid);
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercolationEntry {
    pub threshold: f64,
    pub scc_nodes: usize,
    pub scc_edges: usize,
    /// Edge density of the largest SCC; `0` when it has fewer than two nodes.
    pub scc_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationProfile {
    pub grid: ThresholdGrid,
    pub entries: Vec<PercolationEntry>,
}

/// Largest-SCC size, edge count and density at every grid threshold.
pub fn percolation_sweep(net: &FlowNetwork, grid: &ThresholdGrid) -> Result<PercolationProfile, GraphError> {
    let points = grid.points()?;
    let entries = points
        .par_iter()
        .map(|&threshold| {
            let scc = net.threshold_filter(threshold).largest_scc();
            PercolationEntry {
                threshold,
                scc_nodes: scc.node_count(),
                scc_edges: scc.edge_count(),
                scc_density: scc.edge_density().unwrap_or(0.0),
            }
        })
        .collect();
    Ok(PercolationProfile {
        grid: grid.clone(),
        entries,
    })
}

/// Grid threshold at which the largest relative drop in SCC size is first
/// observed.
///
/// For consecutive entries `i, i+1` the drop is `(n_i - n_{i+1}) / n_i`
/// (only `n_i > 0` counts); the returned value is `threshold_{i+1}`. Ties go
/// to the smallest threshold.
pub fn detect_percolation_point(profile: &PercolationProfile) -> Result<f64, GraphError> {
    let e = &profile.entries;
    if e.len() < 3 {
        return Err(GraphError::ProfileTooShort(e.len()));
    }
    let mut best: Option<(f64, f64)> = None;
    for w in e.windows(2) {
        let (a, b) = (w[0].scc_nodes, w[1].scc_nodes);
        if a == 0 || b >= a {
            continue;
        }
        let drop = (a - b) as f64 / a as f64;
        if best.is_none_or(|(d, _)| drop > d) {
            best = Some((drop, w[1].threshold));
        }
    }
    best.map(|(_, t)| t).ok_or(GraphError::NoPercolationPoint)
}
