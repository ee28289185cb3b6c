//! Deterministic user equilibrium, system optimum and marginal-social-cost
//! tolls on two-path instances.

use serde::{Deserialize, Serialize};

use crate::error::ClassicalError;

/// Increasing convex path cost `a + b h^p` (euro per traveller), `b >= 0`,
/// `p >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCost {
    pub a: f64,
    pub b: f64,
    #[serde(default = "one")]
    pub p: f64,
}

fn one() -> f64 {
    1.0
}

impl PathCost {
    pub const fn linear(a: f64, b: f64) -> Self {
        PathCost { a, b, p: 1.0 }
    }

    pub fn cost(&self, h: f64) -> f64 {
        self.a + self.b * h.powf(self.p)
    }

    pub fn derivative(&self, h: f64) -> f64 {
        if self.b == 0.0 {
            0.0
        } else {
            self.b * self.p * h.powf(self.p - 1.0)
        }
    }

    /// Marginal social cost `g + g' h`.
    pub fn marginal(&self, h: f64) -> f64 {
        self.cost(h) + self.derivative(h) * h
    }
}

/// Two parallel paths sharing demand `demand` (pax/h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPathInstance {
    pub paths: [PathCost; 2],
    pub demand: f64,
}

impl TwoPathInstance {
    pub fn new(paths: [PathCost; 2], demand: f64) -> Result<Self, ClassicalError> {
        let inst = TwoPathInstance { paths, demand };
        inst.validate()?;
        Ok(inst)
    }

    /// The linear desk instance `c1 = 10 + 0.01 h`, `c2 = 15 + 0.005 h`, `d = 1000`.
    pub fn desk() -> Self {
        TwoPathInstance {
            paths: [PathCost::linear(10.0, 0.01), PathCost::linear(15.0, 0.005)],
            demand: 1000.0,
        }
    }

    pub fn validate(&self) -> Result<(), ClassicalError> {
        if !(self.demand > 0.0) || !self.demand.is_finite() {
            return Err(ClassicalError::BadDemand(self.demand));
        }
        Ok(())
    }

    /// Path costs at flows `h`, plus `tolls`.
    pub fn costs(&self, h: [f64; 2], tolls: [f64; 2]) -> [f64; 2] {
        [self.paths[0].cost(h[0]) + tolls[0], self.paths[1].cost(h[1]) + tolls[1]]
    }

    /// Total cost `sum h_i g_i(h_i)` excluding tolls.
    pub fn total_cost(&self, h: [f64; 2]) -> f64 {
        h[0] * self.paths[0].cost(h[0]) + h[1] * self.paths[1].cost(h[1])
    }
}

/// Root of an increasing function on `[0, d]`, or the corner it points to.
/// Bisects until the bracket cannot shrink further in floating point.
fn split(d: f64, excess: impl Fn(f64) -> f64) -> [f64; 2] {
    if excess(0.0) >= 0.0 {
        return [0.0, d];
    }
    if excess(d) <= 0.0 {
        return [d, 0.0];
    }
    let (mut lo, mut hi) = (0.0, d);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h1 = 0.5 * (lo + hi);
    [h1, d - h1]
}

/// Deterministic user equilibrium under path `tolls`.
pub fn solve_due_tolled(inst: &TwoPathInstance, tolls: [f64; 2]) -> Result<[f64; 2], ClassicalError> {
    inst.validate()?;
    let d = inst.demand;
    let [g1, g2] = inst.paths;
    Ok(split(d, |h| (g1.cost(h) + tolls[0]) - (g2.cost(d - h) + tolls[1])))
}

/// Deterministic user equilibrium: equal costs on used paths.
pub fn solve_due(inst: &TwoPathInstance) -> Result<[f64; 2], ClassicalError> {
    solve_due_tolled(inst, [0.0, 0.0])
}

/// System optimum: equal marginal social costs on used paths.
pub fn solve_so(inst: &TwoPathInstance) -> Result<[f64; 2], ClassicalError> {
    inst.validate()?;
    let d = inst.demand;
    let [g1, g2] = inst.paths;
    Ok(split(d, |h| g1.marginal(h) - g2.marginal(d - h)))
}

/// Marginal-social-cost tolls `g_i'(h_i^SO) h_i^SO`.
pub fn msc_tolls(inst: &TwoPathInstance) -> Result<[f64; 2], ClassicalError> {
    let h = solve_so(inst)?;
    Ok([inst.paths[0].derivative(h[0]) * h[0], inst.paths[1].derivative(h[1]) * h[1]])
}

/// A toll pair on the valid-toll line and what it achieves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidTolls {
    pub tolls: [f64; 2],
    /// System optimum flows the tolls reproduce.
    pub so_flows: [f64; 2],
    /// User equilibrium under the tolls.
    pub tolled_flows: [f64; 2],
    /// `h_SO . tolls`, euro/h.
    pub revenue: f64,
    /// Both tolled path costs at most the untolled equilibrium cost.
    pub pareto_improving: bool,
}

/// The toll pair on the line `g1 + t1 = g2 + t2` (at the system optimum)
/// that collects `revenue_target` euro/h.
pub fn alternative_valid_tolls(inst: &TwoPathInstance, revenue_target: f64) -> Result<ValidTolls, ClassicalError> {
    let so = solve_so(inst)?;
    if so[0] <= 0.0 || so[1] <= 0.0 {
        return Err(ClassicalError::NotInterior(so));
    }
    let d = inst.demand;
    let delta = inst.paths[1].cost(so[1]) - inst.paths[0].cost(so[0]);
    let t1 = (revenue_target + so[1] * delta) / d;
    let tolls = [t1, t1 - delta];
    let tolled_flows = solve_due_tolled(inst, tolls)?;
    let ue = solve_due(inst)?;
    let ue_cost = inst.costs(ue, [0.0, 0.0]);
    let ue_level = if ue[0] > 0.0 { ue_cost[0] } else { ue_cost[1] };
    let tolled = inst.costs(so, tolls);
    Ok(ValidTolls {
        tolls,
        so_flows: so,
        tolled_flows,
        revenue: so[0] * tolls[0] + so[1] * tolls[1],
        pareto_improving: tolled.iter().all(|&c| c <= ue_level + 1e-12),
    })
}

/// Logit counterpart of the MSC argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StochasticGap {
    /// Logit SUE under the deterministic MSC tolls.
    pub sue_with_msc: [f64; 2],
    /// Stochastic system optimum (logit over marginal social costs).
    pub stochastic_so: [f64; 2],
    /// `|h1_SUE - h1_SSO| / d`.
    pub gap: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Flows when deterministic MSC tolls are applied to travellers choosing
/// by logit with dispersion `theta`, compared with the flows that minimise
/// cost under that choice model.
pub fn stochastic_gap(inst: &TwoPathInstance, theta: f64) -> Result<StochasticGap, ClassicalError> {
    let tolls = msc_tolls(inst)?;
    let d = inst.demand;
    let [g1, g2] = inst.paths;
    let sue = split(d, |h| h - d * logistic((g2.cost(d - h) + tolls[1] - g1.cost(h) - tolls[0]) / theta));
    let sso = split(d, |h| h - d * logistic((g2.marginal(d - h) - g1.marginal(h)) / theta));
    Ok(StochasticGap {
        sue_with_msc: sue,
        stochastic_so: sso,
        gap: (sue[0] - sso[0]).abs() / d,
    })
}
