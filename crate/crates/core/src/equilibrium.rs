//! Multimodal multiclass stochastic user equilibrium by damped averaging,
//! and calibration of multimodal demand to car flow targets.

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::demand::{ChoiceModel, ChoiceProbabilities};
use crate::error::EquilibriumError;
use crate::netmodel::Scenario;
use crate::supply::{non_additive_costs, LinkCosts};

/// Step-size rule of the averaging scheme `f <- f + lambda (y - f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Damping {
    /// Method of successive averages, `lambda_n = 1/n`.
    Msa,
    /// Constant step.
    Fixed(f64),
    /// Self-regulating averaging: `lambda_n = 1/beta_n`, where `beta` grows
    /// by `increase` when the residual went up and by `decrease` otherwise.
    /// Steps still shrink like `1/n`, but only as fast as oscillation
    /// demands.
    SelfRegulating { increase: f64, decrease: f64 },
}

impl Damping {
    pub const SRA_DEFAULT: Damping = Damping::SelfRegulating {
        increase: 1.5,
        decrease: 0.05,
    };
}

impl Default for Damping {
    fn default() -> Self {
        Damping::SRA_DEFAULT
    }
}

impl fmt::Display for Damping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Damping::Msa => write!(f, "msa"),
            Damping::Fixed(l) => write!(f, "fixed:{l}"),
            Damping::SelfRegulating { .. } if *self == Damping::SRA_DEFAULT => write!(f, "sra"),
            Damping::SelfRegulating { increase, decrease } => write!(f, "sra:{increase}:{decrease}"),
        }
    }
}

impl FromStr for Damping {
    type Err = String;

    /// Parses `msa`, `fixed:<lambda>`, `sra` or `sra:<increase>:<decrease>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |x: &str| x.parse::<f64>().map_err(|_| format!("invalid number `{x}` in damping `{s}`"));
        match parts.as_slice() {
            ["msa"] => Ok(Damping::Msa),
            ["sra"] => Ok(Damping::SRA_DEFAULT),
            ["fixed", l] => {
                let l = num(l)?;
                if l > 0.0 && l <= 1.0 {
                    Ok(Damping::Fixed(l))
                } else {
                    Err(format!("fixed step must lie in (0, 1], got {l}"))
                }
            }
            ["sra", inc, dec] => {
                let (increase, decrease) = (num(inc)?, num(dec)?);
                if increase > 0.0 && decrease > 0.0 {
                    Ok(Damping::SelfRegulating { increase, decrease })
                } else {
                    Err("sra increments must be positive".into())
                }
            }
            _ => Err(format!("unknown damping `{s}` (expected msa, fixed:<lambda>, sra or sra:<inc>:<dec>)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative fixed-point gap `max |f - y| / (1 + f)` to stop at.
    pub tol: f64,
    pub max_iter: usize,
    pub damping: Damping,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-6,
            max_iter: 5000,
            damping: Damping::default(),
        }
    }
}

/// Equilibrium state. Flows, probabilities and satisfactions all come from
/// the final network loading, so they are mutually consistent; `residual`
/// measures its distance from the averaged iterate that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    /// Name of the scenario solved.
    pub scenario: String,
    /// Path prices the equilibrium was computed under, euro/pax.
    pub prices: Vec<f64>,
    /// `[class][path]`, veh/h.
    pub path_flows: Vec<Vec<f64>>,
    /// `[class][mode][link]`, veh/h.
    pub class_link_flows: Vec<Vec<Vec<f64>>>,
    /// Vehicle flow of congested modes on each link, veh/h.
    pub link_flows: Vec<f64>,
    /// Congested link flows of the averaged iterate the final loading was
    /// computed at; `probabilities` are exact functions of these.
    pub loading_flows: Vec<f64>,
    pub probabilities: ChoiceProbabilities,
    /// Link costs at `link_flows`.
    pub link_costs: LinkCosts,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Residual at every iteration.
    pub trace: Vec<f64>,
}

impl EquilibriumResult {
    /// Passenger flow of every path summed over classes, pax/h.
    pub fn passenger_path_flows(&self, scenario: &Scenario) -> Vec<f64> {
        let mut out = vec![0.0; scenario.paths().len()];
        for (q, c) in scenario.classes().iter().enumerate() {
            for (k, p) in scenario.paths().iter().enumerate() {
                out[k] += self.path_flows[q][k] * c.occupancy[p.mode];
            }
        }
        out
    }

    /// Passenger flow of `mode` on every link, pax/h.
    pub fn passenger_link_flows(&self, scenario: &Scenario, mode: usize) -> Vec<f64> {
        let mut out = vec![0.0; scenario.links().len()];
        for (q, c) in scenario.classes().iter().enumerate() {
            for (o, f) in out.iter_mut().zip(&self.class_link_flows[q][mode]) {
                *o += f * c.occupancy[mode];
            }
        }
        out
    }

    /// Passenger flow by mode on each OD, `[od][mode]`, pax/h.
    pub fn od_mode_passengers(&self, scenario: &Scenario) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; scenario.modes().len()]; scenario.ods().len()];
        for (p, pax) in scenario.paths().iter().zip(self.passenger_path_flows(scenario)) {
            out[p.od][p.mode] += pax;
        }
        out
    }
}

/// Shared machinery of one loading pass.
struct Loader<'a> {
    scenario: &'a Scenario,
    model: ChoiceModel<'a>,
    fixed: Vec<f64>,
    congested: Vec<bool>,
}

struct Loading {
    probabilities: ChoiceProbabilities,
    /// `[class][path]`, veh/h.
    path_flows: Vec<Vec<f64>>,
}

impl<'a> Loader<'a> {
    fn new(scenario: &'a Scenario, prices: &[f64]) -> Result<Self, EquilibriumError> {
        let n = scenario.paths().len();
        if prices.len() != n {
            return Err(EquilibriumError::PriceDimension {
                expected: n,
                got: prices.len(),
            });
        }
        let fixed = non_additive_costs(scenario).iter().zip(prices).map(|(a, p)| a + p).collect();
        Ok(Loader {
            scenario,
            model: ChoiceModel::new(scenario),
            fixed,
            congested: scenario.modes().iter().map(|m| m.congested).collect(),
        })
    }

    fn load(&self, costs: &LinkCosts) -> Result<Loading, EquilibriumError> {
        let probabilities = self.model.evaluate(costs, &self.fixed)?;
        let path_flows = (0..self.scenario.classes().len())
            .map(|q| probabilities.class_vehicle_flows(self.scenario, q))
            .collect();
        Ok(Loading {
            probabilities,
            path_flows,
        })
    }

    /// Vehicle flow of congested modes per link.
    fn congested_flows(&self, path_flows: &[Vec<f64>]) -> Vec<f64> {
        let s = self.scenario;
        let mut f = vec![0.0; s.links().len()];
        for h in path_flows {
            for (k, p) in s.paths().iter().enumerate() {
                if self.congested[p.mode] && h[k] != 0.0 {
                    for &a in &p.links {
                        f[a] += h[k];
                    }
                }
            }
        }
        f
    }

    /// Vehicle flow of all modes per link (the convergence measure).
    fn all_flows(&self, path_flows: &[Vec<f64>]) -> Vec<f64> {
        let inc = self.scenario.incidence();
        let mut f = vec![0.0; inc.n_links()];
        for h in path_flows {
            inc.accumulate(h, &mut f);
        }
        f
    }
}

fn gap(f: &[f64], y: &[f64]) -> f64 {
    f.iter().zip(y).map(|(a, b)| (a - b).abs() / (1.0 + a)).fold(0.0, f64::max)
}

fn check_shape(scenario: &Scenario, h: &[Vec<f64>]) -> Result<(), EquilibriumError> {
    let (nq, nk) = (scenario.classes().len(), scenario.paths().len());
    if h.len() != nq || h.iter().any(|r| r.len() != nk) {
        return Err(EquilibriumError::FlowShape(format!("expected {nq} classes x {nk} paths")));
    }
    if h.iter().flatten().any(|&x| !(x >= 0.0)) {
        return Err(EquilibriumError::FlowShape("path flows must be nonnegative".into()));
    }
    Ok(())
}

/// Solve the SUE under path `prices` starting from the free-flow loading.
pub fn solve_sue(scenario: &Scenario, prices: &[f64], config: &SolverConfig) -> Result<EquilibriumResult, EquilibriumError> {
    solve_sue_from(scenario, prices, config, None)
}

/// Solve the SUE starting from `initial` class path flows (`[class][path]`,
/// veh/h) when given, else from the free-flow loading.
pub fn solve_sue_from(
    scenario: &Scenario,
    prices: &[f64],
    config: &SolverConfig,
    initial: Option<&[Vec<f64>]>,
) -> Result<EquilibriumResult, EquilibriumError> {
    let loader = Loader::new(scenario, prices)?;
    let mut h = match initial {
        Some(h0) => {
            check_shape(scenario, h0)?;
            h0.to_vec()
        }
        None => {
            let free = LinkCosts::evaluate(scenario, &vec![0.0; scenario.links().len()])?;
            loader.load(&free)?.path_flows
        }
    };

    let mut trace = Vec::new();
    let mut beta = 1.0;
    let mut prev = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut iterations = 0;
    let (loading, residual, loading_flows) = loop {
        iterations += 1;
        let iterate = loader.congested_flows(&h);
        let costs = LinkCosts::evaluate(scenario, &iterate)?;
        let loading = loader.load(&costs)?;
        let r = gap(&loader.all_flows(&h), &loader.all_flows(&loading.path_flows));
        trace.push(r);
        if r > best * (1.0 + 1e-9) && iterations > 50 && r > 10.0 * best {
            debug!("residual {r:.3e} at iteration {iterations} well above running minimum {best:.3e}");
        }
        best = best.min(r);
        if r < config.tol || iterations >= config.max_iter {
            break (loading, r, iterate);
        }
        let lambda = match config.damping {
            Damping::Msa => 1.0 / iterations as f64,
            Damping::Fixed(l) => l,
            Damping::SelfRegulating { increase, decrease } => {
                if iterations > 1 {
                    beta += if r >= prev { increase } else { decrease };
                }
                1.0 / beta
            }
        };
        prev = r;
        for (hq, yq) in h.iter_mut().zip(&loading.path_flows) {
            for (x, y) in hq.iter_mut().zip(yq) {
                *x += lambda * (y - *x);
            }
        }
    };
    let converged = residual < config.tol;
    if !converged {
        warn!(
            "{}: no equilibrium after {iterations} iterations (residual {residual:.3e}, tol {:.1e})",
            scenario.name(),
            config.tol
        );
    }

    let path_flows = loading.path_flows;
    let link_flows = loader.congested_flows(&path_flows);
    let class_link_flows = path_flows
        .iter()
        .map(|hq| {
            let mut per_mode = vec![vec![0.0; scenario.links().len()]; scenario.modes().len()];
            for (k, p) in scenario.paths().iter().enumerate() {
                for &a in &p.links {
                    per_mode[p.mode][a] += hq[k];
                }
            }
            per_mode
        })
        .collect();
    let link_costs = LinkCosts::evaluate(scenario, &link_flows)?;
    Ok(EquilibriumResult {
        scenario: scenario.name().to_string(),
        prices: prices.to_vec(),
        path_flows,
        class_link_flows,
        link_flows,
        loading_flows,
        probabilities: loading.probabilities,
        link_costs,
        iterations,
        residual,
        converged,
        trace,
    })
}

/// Relative fixed-point gap of class path flows `flows` (`[class][path]`,
/// veh/h) after one loading pass; zero exactly at a fixed point.
pub fn residual(scenario: &Scenario, prices: &[f64], flows: &[Vec<f64>]) -> Result<f64, EquilibriumError> {
    check_shape(scenario, flows)?;
    let loader = Loader::new(scenario, prices)?;
    let costs = LinkCosts::evaluate(scenario, &loader.congested_flows(flows))?;
    let y = loader.load(&costs)?;
    Ok(gap(&loader.all_flows(flows), &loader.all_flows(&y.path_flows)))
}

/// Outcome of demand calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Calibrated demand per OD, pax/h.
    pub demand: Vec<f64>,
    /// Car passenger flow per OD at the calibrated demand, pax/h.
    pub car_flows: Vec<f64>,
    pub sweeps: usize,
    /// Largest relative deviation from the targets.
    pub worst: f64,
    /// The scenario with calibrated demand.
    pub scenario: Scenario,
    pub equilibrium: EquilibriumResult,
}

/// Relative accuracy the calibration stops at.
pub const CALIBRATION_TOL: f64 = 0.005;
const CALIBRATION_SWEEPS: usize = 50;
const BRACKET_FACTOR: f64 = 20.0;

/// Find per-OD demand such that the zero-price SUE car passenger flow of
/// every OD equals `targets` (pax/h).
pub fn calibrate_demand(scenario: &Scenario, targets: &[f64], config: &SolverConfig) -> Result<Calibration, EquilibriumError> {
    let ods = scenario.ods();
    if targets.len() != ods.len() {
        return Err(EquilibriumError::FlowShape(format!(
            "expected {} calibration targets, got {}",
            ods.len(),
            targets.len()
        )));
    }
    for (w, &t) in targets.iter().enumerate() {
        if !(t > 0.0) {
            return Err(EquilibriumError::BadTarget(ods[w].id.clone()));
        }
    }
    let car = scenario
        .mode_index("car")
        .ok_or_else(|| EquilibriumError::NoCarMode(ods[0].id.clone()))?;
    for (w, od) in ods.iter().enumerate() {
        if !scenario.od_blocks(w).any(|b| b.mode == car) {
            return Err(EquilibriumError::NoCarMode(od.id.clone()));
        }
    }
    let zero = vec![0.0; scenario.paths().len()];
    let car_flows_at = |demand: &[f64]| -> Result<(Vec<f64>, Scenario, EquilibriumResult), EquilibriumError> {
        let s = scenario.with_demand(demand)?;
        let eq = solve_sue(&s, &zero, config)?;
        let flows = eq.od_mode_passengers(&s).iter().map(|m| m[car]).collect();
        Ok((flows, s, eq))
    };

    let mut demand = targets.to_vec();
    for sweep in 1..=CALIBRATION_SWEEPS {
        for w in 0..ods.len() {
            let single_mode = scenario.od_blocks(w).all(|b| b.mode == car);
            if single_mode {
                demand[w] = targets[w];
                continue;
            }
            let eval = |d: f64, demand: &mut Vec<f64>| -> Result<f64, EquilibriumError> {
                demand[w] = d;
                Ok(car_flows_at(demand)?.0[w])
            };
            let (mut lo, mut hi) = (targets[w], BRACKET_FACTOR * targets[w]);
            let reached = eval(hi, &mut demand)?;
            if reached < targets[w] {
                return Err(EquilibriumError::BracketFailure {
                    od: ods[w].id.clone(),
                    reached,
                    target: targets[w],
                });
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let c = eval(mid, &mut demand)?;
                if ((c - targets[w]) / targets[w]).abs() < 0.1 * CALIBRATION_TOL {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if c < targets[w] {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-9 * targets[w] {
                    break;
                }
            }
            demand[w] = 0.5 * (lo + hi);
        }
        let (flows, s, eq) = car_flows_at(&demand)?;
        let worst = flows
            .iter()
            .zip(targets)
            .map(|(c, t)| ((c - t) / t).abs())
            .fold(0.0, f64::max);
        debug!("calibration sweep {sweep}: worst deviation {worst:.2e}");
        if worst < CALIBRATION_TOL {
            return Ok(Calibration {
                demand,
                car_flows: flows,
                sweeps: sweep,
                worst,
                scenario: s,
                equilibrium: eq,
            });
        }
        if sweep == CALIBRATION_SWEEPS {
            return Err(EquilibriumError::CalibrationDiverged { sweeps: sweep, worst });
        }
    }
    unreachable!("loop returns on its last sweep")
}
