//! Seeded generators of synthetic inputs whose ground truth is known.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{EdgeRecord, FlowNetwork};
use crate::mlr::{Account, Direction, IndicatorId, IndicatorPanel};
use crate::pin::{self, DerivativeKind, DerivativeSeries, YearMonth};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("{0}")]
    TooSmall(String),
    #[error("noise level must be finite and non-negative")]
    BadNoise,
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Panel with planted one-regressor relations
/// `I_i(t+1) = beta * I_j(t) + c + noise`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub countries: usize,
    /// Panel length; a relation yields `years - 1` samples.
    pub years: usize,
    pub first_year: i32,
    pub planted: usize,
    /// Regressands that are pure noise with a wide spread.
    pub noise_rows: usize,
    /// Noise standard deviation as a fraction of the regressand level.
    pub noise: f64,
}

impl Default for PanelSpec {
    fn default() -> Self {
        Self {
            countries: 5,
            years: 10,
            first_year: 2000,
            planted: 30,
            noise_rows: 0,
            noise: 0.001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRelation {
    pub regressand: IndicatorId,
    pub regressor: IndicatorId,
    pub beta: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelTruth {
    pub seed: u64,
    pub spec: PanelSpec,
    pub drivers: Vec<IndicatorId>,
    pub relations: Vec<PlantedRelation>,
    pub noise_rows: Vec<IndicatorId>,
}

fn all_indicators(countries: usize) -> Vec<IndicatorId> {
    let mut v = Vec::with_capacity(countries * 8);
    for c in 0..countries {
        for a in Account::ALL {
            for d in Direction::ALL {
                v.push(IndicatorId::new(format!("C{c:02}"), a, d));
            }
        }
    }
    v
}

pub fn synth_panel(spec: &PanelSpec, seed: u64) -> Result<(IndicatorPanel, PanelTruth), SynthError> {
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(SynthError::BadNoise);
    }
    let n = spec.countries * 8;
    if spec.planted + spec.noise_rows >= n {
        return Err(SynthError::TooSmall(format!(
            "{} indicators cannot hold {} planted and {} noise rows plus a driver",
            n, spec.planted, spec.noise_rows
        )));
    }
    if spec.years < 6 {
        return Err(SynthError::TooSmall("panel needs at least 6 years".into()));
    }
    let mut rng = rng_for(seed);
    let mut ids = all_indicators(spec.countries);
    ids.shuffle(&mut rng);
    let n_drivers = n - spec.planted - spec.noise_rows;
    let drivers = ids[..n_drivers].to_vec();
    let dependents = ids[n_drivers..n_drivers + spec.planted].to_vec();
    let noise_ids = ids[n_drivers + spec.planted..].to_vec();

    let mut rows: Vec<(IndicatorId, Vec<Option<f64>>)> = Vec::with_capacity(n);
    let mut driver_values = Vec::with_capacity(n_drivers);
    for d in &drivers {
        let level = 10f64.powf(rng.random_range(2.0..4.0));
        // one extra leading value feeds the first dependent observation
        let v: Vec<f64> = (0..=spec.years)
            .map(|_| level * (1.0 + 0.1 * normal(&mut rng)).max(0.5))
            .collect();
        rows.push((d.clone(), v[1..].iter().map(|x| Some(*x)).collect()));
        driver_values.push(v);
    }
    let mut relations = Vec::with_capacity(spec.planted);
    for dep in &dependents {
        let k = rng.random_range(0..n_drivers);
        let beta = rng.random_range(0.3..1.5) * if rng.random::<f64>() < 0.2 { -1.0 } else { 1.0 };
        let x = &driver_values[k];
        let mean_x = x.iter().sum::<f64>() / x.len() as f64;
        // keep the regressand comfortably away from zero
        let intercept = if beta < 0.0 {
            -2.0 * beta * mean_x
        } else {
            0.1 * beta * mean_x
        };
        let scale = (beta * mean_x + intercept).abs();
        let v: Vec<Option<f64>> = (0..spec.years)
            .map(|t| Some(beta * x[t] + intercept + spec.noise * scale * normal(&mut rng)))
            .collect();
        rows.push((dep.clone(), v));
        relations.push(PlantedRelation {
            regressand: dep.clone(),
            regressor: drivers[k].clone(),
            beta,
            intercept,
        });
    }
    let spread = LogNormal::new(0.0, 0.4).expect("valid lognormal");
    for id in &noise_ids {
        let level = 10f64.powf(rng.random_range(2.0..4.0));
        rows.push((
            id.clone(),
            (0..spec.years).map(|_| Some(level * rng.sample(spread))).collect(),
        ));
    }
    relations.sort_by(|a, b| a.regressand.cmp(&b.regressand));
    let mut drivers = drivers;
    drivers.sort();
    let mut noise_rows = noise_ids;
    noise_rows.sort();
    let panel = IndicatorPanel::new(spec.first_year, rows).expect("generated panel is rectangular");
    Ok((
        panel,
        PanelTruth {
            seed,
            spec: spec.clone(),
            drivers,
            relations,
            noise_rows,
        },
    ))
}

/// Holdings networks with a strongly connected core of heavy edges and a
/// periphery attached by light edges, plus a derivative series driven by the
/// core density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinSpec {
    pub core: usize,
    pub periphery: usize,
    pub first_year: i32,
    pub years: usize,
    /// Money unit: core weights lie in `[100, 1e4]` units, periphery links
    /// weigh exactly `10` units and noise links `[1, 10]` units.
    pub unit: f64,
    /// Core edge probability in the first and last year.
    pub core_density: (f64, f64),
    pub a_r: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub delta_t: i32,
    pub v_ref: f64,
}

impl Default for PinSpec {
    fn default() -> Self {
        Self {
            core: 20,
            periphery: 60,
            first_year: 2002,
            years: 11,
            unit: 1e6,
            core_density: (0.2, 0.3),
            a_r: 0.9,
            gamma1: 11.0,
            gamma2: 6.6,
            delta_t: 6,
            v_ref: 6.4e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinTruth {
    pub seed: u64,
    pub spec: PinSpec,
    /// Heaviest periphery weight; percolation lies just above it.
    pub periphery_scale: f64,
    /// Lightest core weight.
    pub core_scale: f64,
    pub reference_year: i32,
}

/// Heavy weights that no sweep up to `1000 * unit` removes.
const CYCLE_UNITS: f64 = 1e4;

/// One planted two-scale network.
pub fn planted_two_scale(rng: &mut ChaCha8Rng, core: usize, periphery: usize, p_core: f64, unit: f64) -> FlowNetwork {
    let name = |i: usize| {
        if i < core {
            format!("K{i:03}")
        } else {
            format!("P{:03}", i - core)
        }
    };
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for i in 0..core {
        edges.insert((i, (i + 1) % core), CYCLE_UNITS * unit);
    }
    for i in 0..core {
        for j in 0..core {
            if i != j && !edges.contains_key(&(i, j)) && rng.random::<f64>() < p_core {
                edges.insert((i, j), 10f64.powf(rng.random_range(2.0..4.0)) * unit);
            }
        }
    }
    for p in core..core + periphery {
        let a = rng.random_range(0..core);
        let b = rng.random_range(0..core);
        edges.insert((a, p), 10.0 * unit);
        edges.insert((p, b), 10.0 * unit);
    }
    for _ in 0..periphery {
        let a = rng.random_range(core..core + periphery);
        let b = rng.random_range(core..core + periphery);
        if a != b {
            edges
                .entry((a, b))
                .or_insert(10f64.powf(rng.random_range(0.0..1.0)) * unit);
        }
    }
    FlowNetwork::from_records(
        edges
            .into_iter()
            .map(|((s, t), w)| EdgeRecord::new(name(s), name(t), w)),
    )
    .expect("planted weights are valid")
    .network
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinData {
    pub networks: Vec<FlowNetwork>,
    pub derivatives: Vec<DerivativeSeries>,
    /// World GDP per year.
    pub gdp: Vec<(i32, f64)>,
    pub truth: PinTruth,
}

pub fn synth_pin(spec: &PinSpec, seed: u64) -> Result<PinData, SynthError> {
    if spec.core < 3 || spec.years < 4 {
        return Err(SynthError::TooSmall("pin data needs a core of 3 and 4 years".into()));
    }
    let mut rng = rng_for(seed);
    let steps = (spec.years - 1).max(1) as f64;
    // rise to a peak two thirds of the way, then decline
    let networks: Vec<FlowNetwork> = (0..spec.years)
        .map(|k| {
            let x = k as f64 / steps;
            let bump = 1.0 - ((x - 2.0 / 3.0) / (2.0 / 3.0)).powi(2);
            let p = spec.core_density.0 + (spec.core_density.1 - spec.core_density.0) * bump.max(0.0);
            planted_two_scale(&mut rng, spec.core, spec.periphery, p, spec.unit).with_year(spec.first_year + k as i32)
        })
        .collect();
    let threshold = 50.0 * spec.unit;
    let density = pin::build_density_series(&networks, threshold, Some(spec.first_year))
        .and_then(|d| pin::resample_density(&d))
        .map_err(|e| SynthError::TooSmall(e.to_string()))?;
    let points: Vec<(YearMonth, f64)> = density
        .points
        .iter()
        .filter_map(|p| {
            let m = density.rho_bar_at(p.time.add_months(-12))?;
            let v = spec.v_ref * spec.a_r * (p.rho_bar.powf(spec.gamma1) + m.powf(spec.gamma2));
            Some((p.time.add_months(i64::from(spec.delta_t)), v))
        })
        .collect();
    let cds = DerivativeSeries::new(DerivativeKind::Noa, "CDS-total", points).expect("ordered positive series");
    let gdp = (spec.first_year..=spec.first_year + spec.years as i32 + 1)
        .map(|y| (y, 4.0e13 * 1.04f64.powi(y - spec.first_year)))
        .collect();
    Ok(PinData {
        networks,
        derivatives: vec![cds],
        gdp,
        truth: PinTruth {
            seed,
            spec: spec.clone(),
            periphery_scale: 10.0 * spec.unit,
            core_scale: 100.0 * spec.unit,
            reference_year: spec.first_year,
        },
    })
}

/// Trade networks in which a hub's bypass flow grows every year, with GDP
/// growth tied to the hub's gate-keeping potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeSpec {
    pub countries: usize,
    pub first_year: i32,
    pub years: usize,
    pub noise: f64,
}

impl Default for TradeSpec {
    fn default() -> Self {
        Self {
            countries: 12,
            first_year: 2000,
            years: 13,
            noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeTruth {
    pub seed: u64,
    pub spec: TradeSpec,
    pub hub: String,
    /// Exact GKP of the hub per year.
    pub hub_gkp: BTreeMap<i32, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeData {
    pub networks: Vec<FlowNetwork>,
    pub gdp: BTreeMap<String, BTreeMap<i32, f64>>,
    pub truth: TradeTruth,
}

pub fn synth_trade(spec: &TradeSpec, seed: u64) -> Result<TradeData, SynthError> {
    if spec.countries < 4 || spec.years < 4 {
        return Err(SynthError::TooSmall("trade data needs 4 countries and 4 years".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(SynthError::BadNoise);
    }
    let mut rng = rng_for(seed);
    let name = |i: usize| format!("T{i:02}");
    let hub = name(0);
    let n = spec.countries;
    let base: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i != j && rng.random::<f64>() < 0.5 {
                        10f64.powf(rng.random_range(8.0..10.0))
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let mut networks = Vec::with_capacity(spec.years);
    let mut hub_gkp = BTreeMap::new();
    for k in 0..spec.years {
        let year = spec.first_year + k as i32;
        let mut recs = Vec::new();
        // hub: suppliers 1..n/2 feed it, it serves n/2..n; direct links grow
        let growth = 1.0 + 0.3 * k as f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = if (i == 0 && j >= n / 2) || (j == 0 && (1..n / 2).contains(&i)) {
                    1e10
                } else if (1..n / 2).contains(&i) && j >= n / 2 {
                    1e8 * growth
                } else if i == 0 || j == 0 {
                    0.0
                } else {
                    base[i][j] * (1.0 + spec.noise * normal(&mut rng)).max(0.1)
                };
                if w > 0.0 {
                    recs.push(EdgeRecord::new(name(i), name(j), w));
                }
            }
        }
        let net = FlowNetwork::from_records(recs)
            .expect("valid weights")
            .network
            .with_year(year);
        hub_gkp.insert(year, crate::gkp::gkp(&net, &hub).expect("hub present"));
        networks.push(net);
    }
    let mut gdp = BTreeMap::new();
    for i in 0..n {
        let mut level = 10f64.powf(rng.random_range(11.0..13.0));
        let mut series = BTreeMap::new();
        series.insert(spec.first_year - 1, level);
        for k in 0..spec.years {
            let year = spec.first_year + k as i32;
            let growth = if i == 0 {
                0.05 * hub_gkp[&year] + 0.002 * normal(&mut rng)
            } else {
                0.02 + 0.02 * normal(&mut rng)
            };
            level *= 1.0 + growth;
            series.insert(year, level);
        }
        gdp.insert(name(i), series);
    }
    Ok(TradeData {
        networks,
        gdp,
        truth: TradeTruth {
            seed,
            spec: spec.clone(),
            hub,
            hub_gkp,
        },
    })
}
