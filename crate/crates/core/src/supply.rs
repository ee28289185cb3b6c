//! Link performance, energy consumption and generalized costs.

use crate::error::SupplyError;
use crate::netmodel::{EnergyModel, LinkSpec, Scenario};

/// Per-link cost components for one class and mode at a given flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCostBreakdown {
    /// Travel time, h.
    pub travel_time: f64,
    /// Waiting time, h.
    pub waiting_time: f64,
    /// Specific energy consumption (model units per veh-km or kWh per pax-km).
    pub specific_energy: f64,
    /// Monetary (energy) cost, euro.
    pub monetary: f64,
    /// Generalized cost, euro.
    pub generalized: f64,
}

fn clean_flow(flow: f64) -> Result<f64, SupplyError> {
    if flow < -f64::EPSILON || flow.is_nan() {
        return Err(SupplyError::NegativeFlow(flow));
    }
    Ok(if flow < f64::EPSILON { 0.0 } else { flow })
}

/// BPR travel time `(l/v) [1 + alpha (f/cap)^beta]` for a link at `speed`.
pub fn bpr_travel_time(link: &LinkSpec, speed: f64, flow: f64) -> Result<f64, SupplyError> {
    let flow = clean_flow(flow)?;
    let free = link.length / speed;
    Ok(match link.capacity {
        Some(cap) if link.bpr_alpha > 0.0 => free * (1.0 + link.bpr_alpha * (flow / cap).powf(link.bpr_beta)),
        _ => free,
    })
}

/// Travel time of `mode` on `link` given the congested vehicle flow.
///
/// Only congested modes feel the flow; everything else travels at its
/// free speed.
pub fn travel_time(scenario: &Scenario, link: usize, mode: usize, flow: f64) -> Result<f64, SupplyError> {
    let spec = &scenario.links()[link];
    let on = spec.modes[mode].ok_or_else(|| SupplyError::ModeNotAllowed {
        link: spec.id.clone(),
        mode: scenario.modes()[mode].id.clone(),
    })?;
    if scenario.modes()[mode].congested {
        bpr_travel_time(spec, on.speed, flow)
    } else {
        clean_flow(flow)?;
        Ok(spec.length / on.speed)
    }
}

/// Specific energy consumption at average speed `speed` (km/h).
pub fn specific_energy(model: &EnergyModel, speed: f64) -> Result<f64, SupplyError> {
    match *model {
        EnergyModel::SpeedQuadratic { c0, c1, c2, .. } => {
            if !(speed > 0.0) {
                return Err(SupplyError::NonPositiveSpeed(speed));
            }
            Ok(c0 + c1 * speed + c2 * speed * speed)
        }
        EnergyModel::Constant { kwh_per_pax_km } => Ok(kwh_per_pax_km),
    }
}

/// Full cost breakdown of `mode` on `link` for `class`.
pub fn generalized_link_cost(
    scenario: &Scenario,
    link: usize,
    class: usize,
    mode: usize,
    flow: f64,
) -> Result<LinkCostBreakdown, SupplyError> {
    let spec = &scenario.links()[link];
    let m = &scenario.modes()[mode];
    let q = &scenario.classes()[class];
    let tt = travel_time(scenario, link, mode, flow)?;
    let on = spec.modes[mode].expect("checked by travel_time");
    let (sec, mc) = if on.access {
        (0.0, 0.0)
    } else {
        let sec = specific_energy(&m.energy, spec.length / tt)?;
        (sec, q.energy_price[mode] * sec * spec.length)
    };
    Ok(LinkCostBreakdown {
        travel_time: tt,
        waiting_time: on.waiting,
        specific_energy: sec,
        monetary: mc,
        generalized: m.beta_tt * (q.vot * tt + q.vowt * on.waiting) + mc,
    })
}

/// Energy cost paid by the traveller (per vehicle for vehicle-based models).
pub fn monetary_cost(scenario: &Scenario, link: usize, class: usize, mode: usize, flow: f64) -> Result<f64, SupplyError> {
    generalized_link_cost(scenario, link, class, mode, flow).map(|c| c.monetary)
}

/// Link travel times and generalized costs for every class and mode at one
/// congested flow vector. Entries for disallowed (link, mode) pairs are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCosts {
    n_links: usize,
    n_modes: usize,
    /// `[mode][link]`, h.
    pub travel_time: Vec<Vec<f64>>,
    /// `[mode][link]`, model units.
    pub specific_energy: Vec<Vec<f64>>,
    /// `[class][mode][link]`, euro.
    pub generalized: Vec<Vec<Vec<f64>>>,
}

impl LinkCosts {
    pub fn evaluate(scenario: &Scenario, flows: &[f64]) -> Result<Self, SupplyError> {
        let links = scenario.links();
        if flows.len() != links.len() {
            return Err(SupplyError::Dimension {
                expected: links.len(),
                got: flows.len(),
            });
        }
        let n_modes = scenario.modes().len();
        let mut travel_time = vec![vec![f64::NAN; links.len()]; n_modes];
        let mut specific = vec![vec![f64::NAN; links.len()]; n_modes];
        let mut generalized = vec![vec![vec![f64::NAN; links.len()]; n_modes]; scenario.classes().len()];
        for (a, spec) in links.iter().enumerate() {
            for (m, mode) in scenario.modes().iter().enumerate() {
                let Some(on) = spec.modes[m] else { continue };
                let tt = travel_time_unchecked(spec, on.speed, mode.congested, flows[a])?;
                let sec = if on.access {
                    0.0
                } else {
                    specific_energy(&mode.energy, spec.length / tt)?
                };
                travel_time[m][a] = tt;
                specific[m][a] = sec;
                for (q, class) in scenario.classes().iter().enumerate() {
                    let mc = if on.access {
                        0.0
                    } else {
                        class.energy_price[m] * sec * spec.length
                    };
                    generalized[q][m][a] = mode.beta_tt * (class.vot * tt + class.vowt * on.waiting) + mc;
                }
            }
        }
        Ok(LinkCosts {
            n_links: links.len(),
            n_modes,
            travel_time,
            specific_energy: specific,
            generalized,
        })
    }

    pub fn n_links(&self) -> usize {
        self.n_links
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
}

fn travel_time_unchecked(spec: &LinkSpec, speed: f64, congested: bool, flow: f64) -> Result<f64, SupplyError> {
    if congested {
        bpr_travel_time(spec, speed, flow)
    } else {
        Ok(spec.length / speed)
    }
}

/// Path cost decomposition for one class, `total = additive + non_additive + price`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCosts {
    pub additive: Vec<f64>,
    pub non_additive: Vec<f64>,
    pub price: Vec<f64>,
    pub total: Vec<f64>,
}

/// Non-additive path cost: per-km fares on tolled links plus flat fares.
pub fn non_additive_costs(scenario: &Scenario) -> Vec<f64> {
    scenario
        .paths()
        .iter()
        .map(|p| {
            let mode = &scenario.modes()[p.mode];
            let tolled_km: f64 = p
                .links
                .iter()
                .map(|&a| &scenario.links()[a])
                .filter(|l| l.tolled)
                .map(|l| l.length)
                .sum();
            mode.fare_per_km_tolled * tolled_km + mode.flat_fare
        })
        .collect()
}

/// Additive part of every path's cost for `class` from a cost table.
pub fn additive_path_costs(scenario: &Scenario, costs: &LinkCosts, class: usize) -> Vec<f64> {
    scenario
        .paths()
        .iter()
        .map(|p| p.links.iter().map(|&a| costs.generalized[class][p.mode][a]).sum())
        .collect()
}

/// Path costs for `class` at congested link flows `flows` and path prices.
pub fn path_costs(scenario: &Scenario, class: usize, flows: &[f64], prices: &[f64]) -> Result<PathCosts, SupplyError> {
    let n = scenario.paths().len();
    if prices.len() != n {
        return Err(SupplyError::Dimension {
            expected: n,
            got: prices.len(),
        });
    }
    let costs = LinkCosts::evaluate(scenario, flows)?;
    let additive = additive_path_costs(scenario, &costs, class);
    let non_additive = non_additive_costs(scenario);
    let total = (0..n).map(|k| additive[k] + non_additive[k] + prices[k]).collect();
    Ok(PathCosts {
        additive,
        non_additive,
        price: prices.to_vec(),
        total,
    })
}

/// (link, class) pairs whose car generalized cost decreases somewhere on a
/// flow grid up to `max_ratio` times capacity. Such regions void the usual
/// uniqueness argument for the equilibrium.
pub fn non_monotone_links(scenario: &Scenario, max_ratio: f64, steps: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, spec) in scenario.links().iter().enumerate() {
        let Some(cap) = spec.capacity else { continue };
        for (m, mode) in scenario.modes().iter().enumerate() {
            if !mode.congested || !spec.allows(m) {
                continue;
            }
            for q in 0..scenario.classes().len() {
                let cost = |f: f64| generalized_link_cost(scenario, a, q, m, f).map(|c| c.generalized).unwrap_or(f64::NAN);
                let mut prev = cost(0.0);
                let decreasing = (1..=steps).any(|i| {
                    let c = cost(max_ratio * cap * i as f64 / steps as f64);
                    let down = c < prev - 1e-12;
                    prev = c;
                    down
                });
                if decreasing && !out.contains(&(a, q)) {
                    out.push((a, q));
                }
            }
        }
    }
    out
}
