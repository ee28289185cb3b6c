//! Trip and road price spaces, revenue constraints and the scalarized
//! design objective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_sue, EquilibriumResult, SolverConfig};
use crate::error::{EquilibriumError, PricingError};
use crate::metrics::{pricing_revenue, MetricsReport, ObjectiveDeltas};
use crate::netmodel::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Path-differentiated prices.
    Trip,
    /// Link prices summed along paths.
    Road,
    None,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Trip => "trip",
            SchemeKind::Road => "road",
            SchemeKind::None => "none",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trip" => Ok(SchemeKind::Trip),
            "road" => Ok(SchemeKind::Road),
            "none" => Ok(SchemeKind::None),
            _ => Err(format!("unknown scheme `{s}` (expected trip, road or none)")),
        }
    }
}

/// Which network elements carry prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Priceable {
    /// Every path or link (first best).
    All,
    /// Car paths, or links open to cars (second best).
    CarOnly,
}

impl fmt::Display for Priceable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Priceable::All => "all",
            Priceable::CarOnly => "car-only",
        })
    }
}

impl FromStr for Priceable {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" | "first-best" => Ok(Priceable::All),
            "car-only" | "second-best" => Ok(Priceable::CarOnly),
            _ => Err(format!("unknown priceable set `{s}` (expected all or car-only)")),
        }
    }
}

/// Box on unit prices, euro/km.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lb: f64,
    pub ub: f64,
}

impl Bounds {
    /// Tolls only.
    pub const PRICING: Bounds = Bounds { lb: 0.0, ub: 5.0 };
    /// Tolls and incentives.
    pub const REVENUE_NEUTRAL: Bounds = Bounds { lb: -5.0, ub: 5.0 };

    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lb && x <= self.ub
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lb, self.ub)
    }

    fn check(&self, unit: &[f64]) -> Result<(), PricingError> {
        for (index, &value) in unit.iter().enumerate() {
            if !self.contains(value) {
                return Err(PricingError::OutOfBounds {
                    index,
                    value,
                    lb: self.lb,
                    ub: self.ub,
                });
            }
        }
        Ok(())
    }
}

fn mode_priceable(scenario: &Scenario, mode: usize, mask: Priceable) -> bool {
    match mask {
        Priceable::All => true,
        Priceable::CarOnly => scenario.modes()[mode].congested,
    }
}

/// Paths carrying a trip price under `mask`.
pub fn priceable_paths(scenario: &Scenario, mask: Priceable) -> Vec<usize> {
    (0..scenario.paths().len())
        .filter(|&k| mode_priceable(scenario, scenario.paths()[k].mode, mask))
        .collect()
}

/// Links carrying a road price under `mask`.
pub fn priceable_links(scenario: &Scenario, mask: Priceable) -> Vec<usize> {
    (0..scenario.links().len())
        .filter(|&a| match mask {
            Priceable::All => true,
            Priceable::CarOnly => (0..scenario.modes().len()).any(|m| scenario.modes()[m].congested && scenario.links()[a].allows(m)),
        })
        .collect()
}

/// Path prices with the unit prices that generated them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceVector {
    pub kind: SchemeKind,
    pub priceable: Priceable,
    /// Total price per path, euro/pax.
    pub path_prices: Vec<f64>,
    /// Decision variables, euro/km: one per priceable path (trip) or link
    /// (road).
    pub unit_prices: Vec<f64>,
    /// Path or link index of each unit price.
    pub elements: Vec<usize>,
    pub bounds: Bounds,
}

impl PriceVector {
    pub fn zero(scenario: &Scenario) -> Self {
        PriceVector {
            kind: SchemeKind::None,
            priceable: Priceable::All,
            path_prices: vec![0.0; scenario.paths().len()],
            unit_prices: Vec::new(),
            elements: Vec::new(),
            bounds: Bounds::PRICING,
        }
    }

    /// Per-km price of each path (`path_price / length`).
    pub fn path_unit_prices(&self, scenario: &Scenario) -> Vec<f64> {
        self.path_prices.iter().zip(scenario.path_lengths()).map(|(p, l)| p / l).collect()
    }
}

/// Trip prices `length_k * unit_k` on the priceable paths, zero elsewhere.
pub fn make_trip_prices(scenario: &Scenario, unit: &[f64], mask: Priceable, bounds: Bounds) -> Result<PriceVector, PricingError> {
    let elements = priceable_paths(scenario, mask);
    if unit.len() != elements.len() {
        return Err(PricingError::Dimension {
            expected: elements.len(),
            got: unit.len(),
        });
    }
    bounds.check(unit)?;
    let mut path_prices = vec![0.0; scenario.paths().len()];
    for (&k, &u) in elements.iter().zip(unit) {
        path_prices[k] = scenario.path_lengths()[k] * u;
    }
    Ok(PriceVector {
        kind: SchemeKind::Trip,
        priceable: mask,
        path_prices,
        unit_prices: unit.to_vec(),
        elements,
        bounds,
    })
}

/// Road prices: each priceable path pays `sum length_a * unit_a` over its
/// priced links.
pub fn road_to_path_prices(scenario: &Scenario, unit: &[f64], mask: Priceable, bounds: Bounds) -> Result<PriceVector, PricingError> {
    let elements = priceable_links(scenario, mask);
    if unit.len() != elements.len() {
        return Err(PricingError::Dimension {
            expected: elements.len(),
            got: unit.len(),
        });
    }
    bounds.check(unit)?;
    let mut per_link = vec![0.0; scenario.links().len()];
    for (&a, &u) in elements.iter().zip(unit) {
        per_link[a] = scenario.links()[a].length * u;
    }
    let path_prices = scenario
        .paths()
        .iter()
        .map(|p| {
            if mode_priceable(scenario, p.mode, mask) {
                p.links.iter().map(|&a| per_link[a]).sum()
            } else {
                0.0
            }
        })
        .collect();
    Ok(PriceVector {
        kind: SchemeKind::Road,
        priceable: mask,
        path_prices,
        unit_prices: unit.to_vec(),
        elements,
        bounds,
    })
}

/// Express path prices as trip-scheme unit prices; fails when a priceable
/// path's per-km price leaves `bounds` or an unpriceable path is priced.
pub fn as_trip_units(scenario: &Scenario, prices: &PriceVector, mask: Priceable, bounds: Bounds) -> Result<Vec<f64>, PricingError> {
    let elements = priceable_paths(scenario, mask);
    for (k, &p) in prices.path_prices.iter().enumerate() {
        if p != 0.0 && !elements.contains(&k) {
            return Err(PricingError::InvalidProblem(format!(
                "path `{}` is priced but not priceable",
                scenario.paths()[k].id
            )));
        }
    }
    let unit: Vec<f64> = elements
        .iter()
        .map(|&k| prices.path_prices[k] / scenario.path_lengths()[k])
        .collect();
    // Length-weighted means can fall outside the box by rounding only.
    let unit: Vec<f64> = unit
        .into_iter()
        .map(|u| if (u - bounds.clamp(u)).abs() < 1e-12 { bounds.clamp(u) } else { u })
        .collect();
    bounds.check(&unit)?;
    Ok(unit)
}

/// Constraint slacks; feasible when nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueSlack {
    /// `b - (tolls - incentives)`, euro/h.
    pub net_cap: f64,
    /// `tolls - incentives`, euro/h; `None` when not enforced.
    pub toll_dominance: Option<f64>,
}

impl RevenueSlack {
    /// Total violation, euro/h.
    pub fn violation(&self) -> f64 {
        (-self.net_cap).max(0.0) + self.toll_dominance.map_or(0.0, |s| (-s).max(0.0))
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.net_cap >= -tol && self.toll_dominance.map_or(true, |s| s >= -tol)
    }
}

/// Slack of the net revenue cap `b` and, optionally, of tolls covering
/// incentives, from passenger path flows.
pub fn revenue_slack(pax_flows: &[f64], prices: &[f64], b: f64, enforce_toll_dominance: bool) -> RevenueSlack {
    let (tolls, incentives) = pricing_revenue(pax_flows, prices);
    let net = tolls - incentives;
    RevenueSlack {
        net_cap: b - net,
        toll_dominance: enforce_toll_dominance.then_some(net),
    }
}

pub fn revenue_feasibility(scenario: &Scenario, result: &EquilibriumResult, b: f64, enforce_toll_dominance: bool) -> RevenueSlack {
    revenue_slack(&result.passenger_path_flows(scenario), &result.prices, b, enforce_toll_dominance)
}

/// Objective weights; nonnegative and summing to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub eff: f64,
    pub env: f64,
    pub acc: f64,
    pub equ_q: f64,
    pub equ_w: f64,
}

pub const OBJECTIVE_NAMES: [&str; 6] = ["eff", "env", "acpt", "sequ", "wequ", "all"];

impl Weights {
    pub fn preset(name: &str) -> Result<Self, PricingError> {
        let z = Weights {
            eff: 0.0,
            env: 0.0,
            acc: 0.0,
            equ_q: 0.0,
            equ_w: 0.0,
        };
        Ok(match name {
            "eff" => Weights { eff: 1.0, ..z },
            "env" => Weights { env: 1.0, ..z },
            "acpt" => Weights { acc: 1.0, ..z },
            "sequ" => Weights { equ_q: 1.0, ..z },
            "wequ" => Weights { equ_w: 1.0, ..z },
            "all" => Weights {
                eff: 0.2,
                env: 0.2,
                acc: 0.2,
                equ_q: 0.2,
                equ_w: 0.2,
            },
            _ => {
                return Err(PricingError::InvalidProblem(format!(
                    "unknown objective `{name}` (expected one of {})",
                    OBJECTIVE_NAMES.join(", ")
                )))
            }
        })
    }

    pub fn as_array(&self) -> [f64; 5] {
        [self.eff, self.env, self.acc, self.equ_q, self.equ_w]
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        let w = self.as_array();
        if w.iter().any(|&x| !(x >= 0.0)) {
            return Err(PricingError::InvalidProblem("weights must be nonnegative".into()));
        }
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(PricingError::InvalidProblem("weights must sum to 1".into()));
        }
        Ok(())
    }
}

/// Revenue constraints of a revenue-neutral design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevenueConstraint {
    /// Cap on net revenue, euro/h.
    pub b: f64,
    /// Require tolls to cover incentives.
    pub toll_dominance: bool,
}

/// A pricing design problem with its zero-price baseline.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub scenario: Scenario,
    pub scheme: SchemeKind,
    pub priceable: Priceable,
    pub weights: Weights,
    pub bounds: Bounds,
    pub revenue: Option<RevenueConstraint>,
    pub solver: SolverConfig,
    pub baseline: MetricsReport,
}

impl DesignProblem {
    pub fn new(
        scenario: Scenario,
        scheme: SchemeKind,
        priceable: Priceable,
        weights: Weights,
        revenue: Option<RevenueConstraint>,
        solver: SolverConfig,
    ) -> Result<Self, PricingError> {
        let bounds = if revenue.is_some() { Bounds::REVENUE_NEUTRAL } else { Bounds::PRICING };
        Self::with_bounds(scenario, scheme, priceable, weights, bounds, revenue, solver)
    }

    pub fn with_bounds(
        scenario: Scenario,
        scheme: SchemeKind,
        priceable: Priceable,
        weights: Weights,
        bounds: Bounds,
        revenue: Option<RevenueConstraint>,
        solver: SolverConfig,
    ) -> Result<Self, PricingError> {
        weights.validate()?;
        if !(bounds.ub > bounds.lb) {
            return Err(PricingError::InvalidProblem(format!("empty price box [{}, {}]", bounds.lb, bounds.ub)));
        }
        if let Some(r) = revenue {
            if !(r.b >= 0.0) {
                return Err(PricingError::InvalidProblem(format!("revenue cap must be nonnegative, got {}", r.b)));
            }
        }
        if scheme == SchemeKind::None {
            return Err(PricingError::InvalidProblem("nothing to design without a pricing scheme".into()));
        }
        let zero = vec![0.0; scenario.paths().len()];
        let base = solve_sue(&scenario, &zero, &solver).map_err(|e| PricingError::InvalidProblem(format!("baseline equilibrium: {e}")))?;
        let baseline =
            MetricsReport::compute(&scenario, &base).map_err(|e| PricingError::InvalidProblem(format!("baseline metrics: {e}")))?;
        Ok(DesignProblem {
            scenario,
            scheme,
            priceable,
            weights,
            bounds,
            revenue,
            solver,
            baseline,
        })
    }

    /// Number of decision variables.
    pub fn dimension(&self) -> usize {
        match self.scheme {
            SchemeKind::Trip => priceable_paths(&self.scenario, self.priceable).len(),
            SchemeKind::Road => priceable_links(&self.scenario, self.priceable).len(),
            SchemeKind::None => 0,
        }
    }

    /// Path prices generated by the decision vector `unit`.
    pub fn prices(&self, unit: &[f64]) -> Result<PriceVector, PricingError> {
        match self.scheme {
            SchemeKind::Trip => make_trip_prices(&self.scenario, unit, self.priceable, self.bounds),
            SchemeKind::Road => road_to_path_prices(&self.scenario, unit, self.priceable, self.bounds),
            SchemeKind::None => Ok(PriceVector::zero(&self.scenario)),
        }
    }

    /// The same problem with the trip scheme.
    pub fn as_trip(&self) -> DesignProblem {
        DesignProblem {
            scheme: SchemeKind::Trip,
            ..self.clone()
        }
    }
}

/// Objective value and its parts at one price vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Weighted sum of deltas (+infinity when the equilibrium failed).
    pub value: f64,
    pub deltas: ObjectiveDeltas,
    pub slack: Option<RevenueSlack>,
    pub converged: bool,
    pub residual: f64,
}

impl Evaluation {
    pub fn feasible(&self, tol: f64) -> bool {
        self.converged && self.slack.map_or(true, |s| s.feasible(tol))
    }
}

/// Weighted sum of the five deltas; undefined equity deltas count as zero.
pub fn weighted_objective(weights: &Weights, deltas: &ObjectiveDeltas) -> f64 {
    weights
        .as_array()
        .iter()
        .zip(deltas.as_array())
        .map(|(w, d)| if *w == 0.0 { 0.0 } else { w * d.unwrap_or(0.0) })
        .sum()
}

/// Solve the equilibrium at `prices` and score it.
pub fn evaluate_prices(problem: &DesignProblem, prices: &PriceVector) -> Result<(Evaluation, EquilibriumResult, MetricsReport), EquilibriumError> {
    let eq = solve_sue(&problem.scenario, &prices.path_prices, &problem.solver)?;
    let report = MetricsReport::compute(&problem.scenario, &eq).expect("equilibrium solved on the problem scenario");
    let deltas = report.objective_deltas(&problem.baseline);
    let slack = problem
        .revenue
        .map(|r| revenue_feasibility(&problem.scenario, &eq, r.b, r.toll_dominance));
    let value = if eq.converged {
        weighted_objective(&problem.weights, &deltas)
    } else {
        f64::INFINITY
    };
    Ok((
        Evaluation {
            value,
            deltas,
            slack,
            converged: eq.converged,
            residual: eq.residual,
        },
        eq,
        report,
    ))
}

/// Objective at decision vector `unit`.
pub fn objective(problem: &DesignProblem, unit: &[f64]) -> Result<Evaluation, PricingError> {
    let prices = problem.prices(unit)?;
    match evaluate_prices(problem, &prices) {
        Ok((e, _, _)) => Ok(e),
        Err(err) => {
            log::warn!("objective evaluation failed: {err}");
            Ok(Evaluation {
                value: f64::INFINITY,
                deltas: ObjectiveDeltas {
                    tts: f64::NAN,
                    tec: f64::NAN,
                    pc: f64::NAN,
                    mapd_q: None,
                    mapd_w: None,
                },
                slack: None,
                converged: false,
                residual: f64::INFINITY,
            })
        }
    }
}
