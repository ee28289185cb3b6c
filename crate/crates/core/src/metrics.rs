//! Measures of performance of an equilibrium and their changes against a
//! baseline.

use serde::{Deserialize, Serialize};

use crate::equilibrium::EquilibriumResult;
use crate::error::MetricsError;
use crate::netmodel::Scenario;

/// Time, energy, cost and traffic aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficMetrics {
    /// Passenger hours in motion (waiting excluded).
    pub tts_pax_h: f64,
    /// Vehicle hours in motion.
    pub tts_veh_h: f64,
    /// Average in-motion time per passenger, min.
    pub avg_travel_time_min: f64,
    /// Total energy consumption, kWh/h.
    pub tec_kwh: f64,
    /// Total generalized link cost of vehicle flows, euro/h.
    pub tgc_eur: f64,
    /// Passenger-km per mode (access legs excluded).
    pub traffic_pax_km: Vec<f64>,
    /// Unweighted mean flow/capacity over capacitated links open to
    /// congested modes.
    pub avg_f_cap: f64,
    /// Passenger share of modes that do not use road capacity.
    pub alt_split: f64,
}

/// Acceptance (satisfaction) and equity aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquityMetrics {
    /// Users' acceptance, sum of per-class OD satisfactions.
    pub ua: f64,
    /// Perceived cost, `-ua`.
    pub pc: f64,
    /// `[class][od]`, satisfaction per km of mean path length.
    pub unit_satisfaction: Vec<Vec<f64>>,
    /// Mean absolute percentage deviation over classes; `None` when a unit
    /// satisfaction is zero.
    pub mapd_q: Option<f64>,
    /// Mean absolute percentage deviation over OD pairs.
    pub mapd_w: Option<f64>,
    /// Combined deviation over (class, OD) cells.
    pub mapd: Option<f64>,
}

/// Revenue block, euro/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Revenues {
    /// Collected from positively priced paths.
    pub tolls: f64,
    /// Paid out on negatively priced paths.
    pub incentives: f64,
    /// `tolls - incentives`.
    pub net: f64,
    /// Per-km fares on tolled links.
    pub highway: f64,
    /// Flat fares.
    pub fares: f64,
    /// Net pricing revenue per passenger of demand, euro/pax.
    pub net_per_pax: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub modes: Vec<String>,
    pub traffic: TrafficMetrics,
    pub equity: EquityMetrics,
    pub revenues: Revenues,
    pub converged: bool,
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Change `(x - x0) / |x0|`; `None` when undefined.
pub fn relative_delta(x: Option<f64>, x0: Option<f64>) -> Option<f64> {
    match (x, x0) {
        (Some(x), Some(x0)) if x0 != 0.0 => Some((x - x0) / x0.abs()),
        (Some(x), Some(_)) if x == 0.0 => Some(0.0),
        _ => None,
    }
}

fn is_alternative(scenario: &Scenario, mode: usize) -> bool {
    !scenario.modes()[mode].congested
}

pub fn traffic_metrics(scenario: &Scenario, result: &EquilibriumResult) -> TrafficMetrics {
    let links = scenario.links();
    let costs = &result.link_costs;
    let mut tts_pax = 0.0;
    let mut tts_veh = 0.0;
    let mut tec = 0.0;
    let mut tgc = 0.0;
    let mut traffic = vec![0.0; scenario.modes().len()];
    for (q, class) in scenario.classes().iter().enumerate() {
        for (m, mode) in scenario.modes().iter().enumerate() {
            let occ = class.occupancy[m];
            for (a, link) in links.iter().enumerate() {
                let Some(on) = link.modes[m] else { continue };
                let veh = result.class_link_flows[q][m][a];
                if veh == 0.0 {
                    continue;
                }
                let tt = costs.travel_time[m][a];
                tts_veh += veh * tt;
                tts_pax += veh * occ * tt;
                tgc += veh * costs.generalized[q][m][a];
                if !on.access {
                    traffic[m] += veh * occ * link.length;
                    let unit = costs.specific_energy[m][a] * link.length;
                    tec += if mode.energy.per_vehicle() {
                        veh * unit * mode.energy.kwh_per_unit()
                    } else {
                        veh * occ * unit
                    };
                }
            }
        }
    }
    let demand = scenario.total_demand();
    let congested_modes: Vec<usize> = (0..scenario.modes().len()).filter(|&m| !is_alternative(scenario, m)).collect();
    let ratios: Vec<f64> = links
        .iter()
        .enumerate()
        .filter(|(_, l)| l.capacity.is_some() && congested_modes.iter().any(|&m| l.allows(m)))
        .map(|(a, l)| result.link_flows[a] / l.capacity.unwrap())
        .collect();
    let avg_f_cap = if ratios.is_empty() { 0.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    let pax = result.passenger_path_flows(scenario);
    let alt_pax: f64 = scenario
        .paths()
        .iter()
        .zip(&pax)
        .filter(|(p, _)| is_alternative(scenario, p.mode))
        .fold(0.0, |acc, (_, x)| acc + x);
    TrafficMetrics {
        tts_pax_h: tts_pax,
        tts_veh_h: tts_veh,
        avg_travel_time_min: if demand > 0.0 { 60.0 * tts_pax / demand } else { 0.0 },
        tec_kwh: tec,
        tgc_eur: tgc,
        traffic_pax_km: traffic,
        avg_f_cap,
        alt_split: if demand > 0.0 { alt_pax / demand } else { 0.0 },
    }
}

/// Mean absolute percentage deviation of `values` from their mean, with
/// each element as its own denominator.
pub fn mapd(values: &[f64]) -> Option<f64> {
    if values.is_empty() || values.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return None;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Some(values.iter().map(|&v| ((v - mean) / v).abs()).sum::<f64>() / values.len() as f64)
}

/// Unit satisfactions, `[class][od]`.
pub fn unit_satisfactions(scenario: &Scenario, satisfaction: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mean_len: Vec<f64> = (0..scenario.ods().len())
        .map(|w| {
            let lens: Vec<f64> = scenario
                .paths()
                .iter()
                .zip(scenario.path_lengths())
                .filter(|(p, _)| p.od == w)
                .map(|(_, &l)| l)
                .collect();
            lens.iter().sum::<f64>() / lens.len() as f64
        })
        .collect();
    satisfaction
        .iter()
        .map(|row| row.iter().zip(&mean_len).map(|(s, l)| s / l).collect())
        .collect()
}

/// Equity measures from unit satisfactions `[class][od]`.
pub fn equity_from_unit(unit: &[Vec<f64>]) -> (Option<f64>, Option<f64>, Option<f64>) {
    let nq = unit.len();
    let nw = unit.first().map_or(0, Vec::len);
    let per_od: Vec<f64> = (0..nw).map(|w| unit.iter().map(|r| r[w]).sum::<f64>() / nq as f64).collect();
    let per_class: Vec<f64> = unit.iter().map(|r| r.iter().sum::<f64>() / nw as f64).collect();
    let combined = (0..nw)
        .map(|w| {
            let col: Vec<f64> = unit.iter().map(|r| r[w]).collect();
            mapd(&col).map(|x| x * nq as f64)
        })
        .sum::<Option<f64>>()
        .map(|total| total / (nq * nw) as f64);
    (mapd(&per_class), mapd(&per_od), combined)
}

pub fn acceptance_equity(scenario: &Scenario, result: &EquilibriumResult) -> EquityMetrics {
    let sat = &result.probabilities.satisfaction;
    let ua: f64 = sat.iter().flatten().sum();
    let unit = unit_satisfactions(scenario, sat);
    let (mapd_q, mapd_w, mapd) = equity_from_unit(&unit);
    EquityMetrics {
        ua,
        pc: -ua,
        unit_satisfaction: unit,
        mapd_q,
        mapd_w,
        mapd,
    }
}

/// Pricing operator revenue from per-passenger path prices and passenger
/// path flows.
pub fn pricing_revenue(pax: &[f64], prices: &[f64]) -> (f64, f64) {
    let mut tolls = 0.0;
    let mut incentives = 0.0;
    for (&h, &p) in pax.iter().zip(prices) {
        if p > 0.0 {
            tolls += h * p;
        } else if p < 0.0 {
            incentives += h * -p;
        }
    }
    (tolls, incentives)
}

pub fn revenues(scenario: &Scenario, result: &EquilibriumResult) -> Revenues {
    let pax = result.passenger_path_flows(scenario);
    let (tolls, incentives) = pricing_revenue(&pax, &result.prices);
    let mut highway = 0.0;
    let mut fares = 0.0;
    for (p, &h) in scenario.paths().iter().zip(&pax) {
        let mode = &scenario.modes()[p.mode];
        let tolled_km: f64 = p.links.iter().map(|&a| &scenario.links()[a]).filter(|l| l.tolled).map(|l| l.length).sum();
        highway += mode.fare_per_km_tolled * tolled_km * h;
        fares += mode.flat_fare * h;
    }
    let demand = scenario.total_demand();
    Revenues {
        tolls,
        incentives,
        net: tolls - incentives,
        highway,
        fares,
        net_per_pax: if demand > 0.0 { (tolls - incentives) / demand } else { 0.0 },
    }
}

impl MetricsReport {
    pub fn compute(scenario: &Scenario, result: &EquilibriumResult) -> Result<Self, MetricsError> {
        if result.scenario != scenario.name() {
            return Err(MetricsError::ScenarioMismatch(scenario.name().to_string(), result.scenario.clone()));
        }
        let mut warnings = Vec::new();
        if !result.converged {
            warnings.push(format!(
                "equilibrium not converged after {} iterations (residual {:.3e})",
                result.iterations, result.residual
            ));
        }
        let equity = acceptance_equity(scenario, result);
        if equity.mapd.is_none() {
            warnings.push("a unit satisfaction is zero; MAPD undefined".into());
        }
        Ok(MetricsReport {
            scenario: scenario.name().to_string(),
            modes: scenario.modes().iter().map(|m| m.id.clone()).collect(),
            traffic: traffic_metrics(scenario, result),
            equity,
            revenues: revenues(scenario, result),
            converged: result.converged,
            residual: result.residual,
            warnings,
        })
    }

    /// Alternative-mode passenger-km (modes not using road capacity).
    pub fn alt_traffic_pax_km(&self, scenario: &Scenario) -> f64 {
        self.traffic
            .traffic_pax_km
            .iter()
            .enumerate()
            .filter(|&(m, _)| is_alternative(scenario, m))
            .fold(0.0, |acc, (_, x)| acc + x)
    }

    /// Every scalar measure by name, in a fixed order.
    pub fn entries(&self) -> Vec<(String, Option<f64>)> {
        let t = &self.traffic;
        let e = &self.equity;
        let r = &self.revenues;
        let mut out: Vec<(String, Option<f64>)> = vec![
            ("tts_pax_h".into(), Some(t.tts_pax_h)),
            ("tts_veh_h".into(), Some(t.tts_veh_h)),
            ("avg_travel_time_min".into(), Some(t.avg_travel_time_min)),
            ("tec_kwh".into(), Some(t.tec_kwh)),
            ("tgc_eur".into(), Some(t.tgc_eur)),
            ("ua".into(), Some(e.ua)),
            ("pc".into(), Some(e.pc)),
            ("mapd_q".into(), e.mapd_q),
            ("mapd_w".into(), e.mapd_w),
            ("mapd".into(), e.mapd),
            ("traffic_pax_km".into(), Some(t.traffic_pax_km.iter().sum())),
        ];
        for (m, id) in self.modes.iter().enumerate() {
            out.push((format!("traffic_{id}_pax_km"), Some(t.traffic_pax_km[m])));
        }
        out.extend([
            ("avg_f_cap".to_string(), Some(t.avg_f_cap)),
            ("alt_split".into(), Some(t.alt_split)),
            ("pricing_tolls_eur".into(), Some(r.tolls)),
            ("pricing_incentives_eur".into(), Some(r.incentives)),
            ("pricing_net_eur".into(), Some(r.net)),
            ("highway_revenue_eur".into(), Some(r.highway)),
            ("fare_revenue_eur".into(), Some(r.fares)),
            ("net_revenue_per_pax_eur".into(), Some(r.net_per_pax)),
        ]);
        out
    }

    /// Relative change of every entry against `baseline`.
    pub fn deltas(&self, baseline: &MetricsReport) -> Result<Vec<(String, Option<f64>)>, MetricsError> {
        if self.scenario != baseline.scenario {
            return Err(MetricsError::ScenarioMismatch(self.scenario.clone(), baseline.scenario.clone()));
        }
        Ok(self
            .entries()
            .into_iter()
            .zip(baseline.entries())
            .map(|((name, x), (_, x0))| (name, relative_delta(x, x0)))
            .collect())
    }

    /// The five design-objective deltas against `baseline`.
    pub fn objective_deltas(&self, baseline: &MetricsReport) -> ObjectiveDeltas {
        let d = |x: f64, x0: f64| relative_delta(Some(x), Some(x0)).unwrap_or(0.0);
        let o = |x: Option<f64>, x0: Option<f64>| relative_delta(x, x0);
        ObjectiveDeltas {
            tts: d(self.traffic.tts_pax_h, baseline.traffic.tts_pax_h),
            tec: d(self.traffic.tec_kwh, baseline.traffic.tec_kwh),
            pc: d(self.equity.pc, baseline.equity.pc),
            mapd_q: o(self.equity.mapd_q, baseline.equity.mapd_q),
            mapd_w: o(self.equity.mapd_w, baseline.equity.mapd_w),
        }
    }
}

/// Relative changes entering the design objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveDeltas {
    pub tts: f64,
    pub tec: f64,
    pub pc: f64,
    pub mapd_q: Option<f64>,
    pub mapd_w: Option<f64>,
}

impl ObjectiveDeltas {
    pub fn as_array(&self) -> [Option<f64>; 5] {
        [Some(self.tts), Some(self.tec), Some(self.pc), self.mapd_q, self.mapd_w]
    }

    /// Mean of the five deltas (undefined ones count as zero).
    pub fn average(&self) -> f64 {
        self.as_array().iter().map(|x| x.unwrap_or(0.0)).sum::<f64>() / 5.0
    }
}

/// Link-wise Pareto-improvement table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoCheck {
    /// `[class][link]`: no mode's link cost rose for that class.
    pub table: Vec<Vec<bool>>,
    pub all: bool,
}

/// Whether every class's link costs (prices excluded) under `priced` are no
/// higher than under `baseline`.
pub fn pareto_check(scenario: &Scenario, priced: &EquilibriumResult, baseline: &EquilibriumResult) -> Result<ParetoCheck, MetricsError> {
    for r in [priced, baseline] {
        if r.scenario != scenario.name() {
            return Err(MetricsError::ScenarioMismatch(scenario.name().to_string(), r.scenario.clone()));
        }
    }
    let table: Vec<Vec<bool>> = (0..scenario.classes().len())
        .map(|q| {
            (0..scenario.links().len())
                .map(|a| {
                    (0..scenario.modes().len()).filter(|&m| scenario.links()[a].allows(m)).all(|m| {
                        let c = priced.link_costs.generalized[q][m][a];
                        let c0 = baseline.link_costs.generalized[q][m][a];
                        c <= c0 + 1e-12 * (1.0 + c0.abs())
                    })
                })
                .collect()
        })
        .collect();
    let all = table.iter().flatten().all(|&b| b);
    Ok(ParetoCheck { table, all })
}

/// Path-cost form of the Pareto check: `priced[k] <= baseline[k]`.
pub fn pareto_check_paths(priced: &[f64], baseline: &[f64]) -> Result<Vec<bool>, MetricsError> {
    if priced.len() != baseline.len() {
        return Err(MetricsError::Dimension(priced.len(), baseline.len()));
    }
    Ok(priced.iter().zip(baseline).map(|(c, c0)| c <= &(c0 + 1e-12 * (1.0 + c0.abs()))).collect())
}
