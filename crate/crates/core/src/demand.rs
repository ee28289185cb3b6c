//! Hierarchical logit demand: c-logit path choice nested in mode choice.

use crate::error::DemandError;
use crate::netmodel::{LogsumForm, Scenario};
use crate::supply::LinkCosts;

/// Probabilities below this are flushed to zero.
const FLUSH: f64 = 1e-300;

/// Commonality factor `SF_k = sum_j (g_kj / sqrt(g_k g_j))^alpha` of path
/// `k`, where `shared[j]` is the cost of the links `k` shares with `j`
/// (`shared[k] == costs[k]`).
pub fn commonality_factor(k: usize, costs: &[f64], shared: &[f64], alpha: f64) -> Result<f64, DemandError> {
    if let Some(&bad) = costs.iter().find(|&&g| !(g > 0.0)) {
        return Err(DemandError::NonPositiveCost(bad));
    }
    Ok(costs
        .iter()
        .zip(shared)
        .map(|(&gj, &gkj)| if gkj > 0.0 { (gkj / (costs[k] * gj).sqrt()).powf(alpha) } else { 0.0 })
        .sum())
}

/// Systematic utilities `V = -g - beta_sf ln SF`.
pub fn path_utilities(costs: &[f64], sf: &[f64], beta_sf: f64) -> Vec<f64> {
    costs.iter().zip(sf).map(|(&g, &s)| -g - beta_sf * s.ln()).collect()
}

/// Max-shifted logit probabilities with scale `theta`.
pub fn logit(utilities: &[f64], theta: f64) -> Result<Vec<f64>, DemandError> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if utilities.is_empty() || max == f64::NEG_INFINITY {
        return Err(DemandError::EmptyChoiceSet);
    }
    let w: Vec<f64> = utilities.iter().map(|&v| ((v - max) / theta).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter()
        .map(|x| {
            let p = x / total;
            if p < FLUSH {
                0.0
            } else {
                p
            }
        })
        .collect())
}

/// `ln sum exp(V / theta)`, max-shifted.
fn log_sum_exp(utilities: &[f64], theta: f64) -> Result<f64, DemandError> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if utilities.is_empty() || max == f64::NEG_INFINITY {
        return Err(DemandError::EmptyChoiceSet);
    }
    let s: f64 = utilities.iter().map(|&v| ((v - max) / theta).exp()).sum();
    Ok(max / theta + s.ln())
}

/// Utility of a mode aggregated over its paths.
pub fn mode_logsum(utilities: &[f64], theta_path: f64, form: LogsumForm) -> Result<f64, DemandError> {
    let lse = log_sum_exp(utilities, theta_path).map_err(|_| DemandError::ModeUnavailable)?;
    Ok(match form {
        LogsumForm::Scaled => theta_path * lse,
        LogsumForm::AsPrinted => lse / theta_path,
    })
}

/// Mode shares over `logsums`; `None` marks a mode without paths, which
/// gets probability zero.
pub fn mode_probs(logsums: &[Option<f64>], theta_mode: f64) -> Result<Vec<f64>, DemandError> {
    let avail: Vec<f64> = logsums.iter().flatten().copied().collect();
    let p = logit(&avail, theta_mode)?;
    let mut it = p.into_iter();
    Ok(logsums.iter().map(|l| if l.is_some() { it.next().unwrap() } else { 0.0 }).collect())
}

/// Expected maximum perceived utility over the available modes.
pub fn satisfaction(logsums: &[Option<f64>], theta_mode: f64) -> Result<f64, DemandError> {
    let avail: Vec<f64> = logsums.iter().flatten().copied().collect();
    Ok(theta_mode * log_sum_exp(&avail, theta_mode)?)
}

/// Vehicle flow `p_path p_mode (share / occupancy) d`.
pub fn class_path_flow(p_path: f64, p_mode: f64, share: f64, occupancy: f64, demand: f64) -> f64 {
    p_path * p_mode * share / occupancy * demand
}

/// Choice model outcome for every class at one cost state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProbabilities {
    /// `[class][od][mode]`
    pub mode: Vec<Vec<Vec<f64>>>,
    /// `[class][od][mode]`, `None` where the mode has no path.
    pub logsum: Vec<Vec<Vec<Option<f64>>>>,
    /// `[class][path]`, within the path's (OD, mode) block.
    pub conditional: Vec<Vec<f64>>,
    /// `[class][path]`, conditional times mode probability.
    pub joint: Vec<Vec<f64>>,
    /// `[class][path]`, systematic utility.
    pub utility: Vec<Vec<f64>>,
    /// `[class][path]`, commonality factor.
    pub commonality: Vec<Vec<f64>>,
    /// `[class][path]`, generalized cost including fares and prices, euro.
    pub path_cost: Vec<Vec<f64>>,
    /// `[class][od]`, euro-utility.
    pub satisfaction: Vec<Vec<f64>>,
}

impl ChoiceProbabilities {
    /// Passenger flow of every path summed over classes, pax/h.
    pub fn passenger_path_flows(&self, scenario: &Scenario) -> Vec<f64> {
        let mut out = vec![0.0; scenario.paths().len()];
        for (q, class) in scenario.classes().iter().enumerate() {
            for (k, p) in scenario.paths().iter().enumerate() {
                out[k] += self.joint[q][k] * class.share * scenario.ods()[p.od].demand;
            }
        }
        out
    }

    /// Vehicle flow of `class` on every path, veh/h.
    pub fn class_vehicle_flows(&self, scenario: &Scenario, class: usize) -> Vec<f64> {
        let c = &scenario.classes()[class];
        scenario
            .paths()
            .iter()
            .enumerate()
            .map(|(k, p)| {
                class_path_flow(
                    self.conditional[class][k],
                    self.mode[class][p.od][p.mode],
                    c.share,
                    c.occupancy[p.mode],
                    scenario.ods()[p.od].demand,
                )
            })
            .collect()
    }

    /// Vehicle flow of every path summed over classes, veh/h.
    pub fn vehicle_path_flows(&self, scenario: &Scenario) -> Vec<f64> {
        let mut out = vec![0.0; scenario.paths().len()];
        for q in 0..scenario.classes().len() {
            for (o, h) in out.iter_mut().zip(self.class_vehicle_flows(scenario, q)) {
                *o += h;
            }
        }
        out
    }

    /// Demand-weighted satisfaction per OD averaged over classes.
    pub fn od_satisfaction(&self, scenario: &Scenario) -> Vec<f64> {
        (0..scenario.ods().len())
            .map(|w| {
                scenario
                    .classes()
                    .iter()
                    .enumerate()
                    .map(|(q, c)| c.share * self.satisfaction[q][w])
                    .sum()
            })
            .collect()
    }
}

/// Pairwise link overlaps of one (OD, mode) block, precomputed once.
#[derive(Debug, Clone)]
struct BlockOverlap {
    /// `shared[i][j]`: links common to the block's i-th and j-th paths.
    shared: Vec<Vec<Vec<usize>>>,
}

/// Scenario-bound evaluator of the choice model.
#[derive(Debug, Clone)]
pub struct ChoiceModel<'a> {
    scenario: &'a Scenario,
    overlaps: Vec<Option<BlockOverlap>>,
}

impl<'a> ChoiceModel<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        let overlaps = scenario
            .blocks()
            .iter()
            .map(|b| {
                if !scenario.modes()[b.mode].overlap_correction {
                    return None;
                }
                let shared = b
                    .paths
                    .iter()
                    .map(|&k| {
                        let ck = &scenario.paths()[k].links;
                        b.paths
                            .iter()
                            .map(|&j| ck.iter().copied().filter(|a| scenario.paths()[j].links.contains(a)).collect())
                            .collect()
                    })
                    .collect();
                Some(BlockOverlap { shared })
            })
            .collect();
        ChoiceModel { scenario, overlaps }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    /// Evaluate all choice probabilities. `fixed[k]` is the part of path
    /// `k`'s cost not built from link costs (fares plus price).
    pub fn evaluate(&self, costs: &LinkCosts, fixed: &[f64]) -> Result<ChoiceProbabilities, DemandError> {
        let s = self.scenario;
        let params = s.params();
        let n_paths = s.paths().len();
        let n_classes = s.classes().len();
        let n_modes = s.modes().len();
        let n_ods = s.ods().len();
        let mut out = ChoiceProbabilities {
            mode: vec![vec![vec![0.0; n_modes]; n_ods]; n_classes],
            logsum: vec![vec![vec![None; n_modes]; n_ods]; n_classes],
            conditional: vec![vec![0.0; n_paths]; n_classes],
            joint: vec![vec![0.0; n_paths]; n_classes],
            utility: vec![vec![0.0; n_paths]; n_classes],
            commonality: vec![vec![1.0; n_paths]; n_classes],
            path_cost: vec![vec![0.0; n_paths]; n_classes],
            satisfaction: vec![vec![0.0; n_ods]; n_classes],
        };
        for q in 0..n_classes {
            let link_cost = &costs.generalized[q];
            for (b, block) in s.blocks().iter().enumerate() {
                let lc = &link_cost[block.mode];
                let additive: Vec<f64> = block
                    .paths
                    .iter()
                    .map(|&k| s.paths()[k].links.iter().map(|&a| lc[a]).sum())
                    .collect();
                let sf: Vec<f64> = match &self.overlaps[b] {
                    None => vec![1.0; block.paths.len()],
                    Some(ov) => (0..block.paths.len())
                        .map(|i| {
                            let shared: Vec<f64> =
                                ov.shared[i].iter().map(|links| links.iter().map(|&a| lc[a]).sum()).collect();
                            commonality_factor(i, &additive, &shared, params.alpha_sf)
                        })
                        .collect::<Result<_, _>>()?,
                };
                let total: Vec<f64> = block.paths.iter().zip(&additive).map(|(&k, g)| g + fixed[k]).collect();
                let v = path_utilities(&total, &sf, params.beta_sf);
                let p = logit(&v, params.theta_path)?;
                out.logsum[q][block.od][block.mode] = Some(mode_logsum(&v, params.theta_path, params.logsum)?);
                for (i, &k) in block.paths.iter().enumerate() {
                    out.conditional[q][k] = p[i];
                    out.utility[q][k] = v[i];
                    out.commonality[q][k] = sf[i];
                    out.path_cost[q][k] = total[i];
                }
            }
            for w in 0..n_ods {
                out.mode[q][w] = mode_probs(&out.logsum[q][w], params.theta_mode)?;
                out.satisfaction[q][w] = satisfaction(&out.logsum[q][w], params.theta_mode)?;
            }
            for (k, p) in s.paths().iter().enumerate() {
                out.joint[q][k] = out.conditional[q][k] * out.mode[q][p.od][p.mode];
            }
        }
        Ok(out)
    }
}
