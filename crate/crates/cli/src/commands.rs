use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use log::info;
use serde_json::json;
use tripprice::classical::{alternative_valid_tolls, msc_tolls, solve_due, solve_due_tolled, solve_so, stochastic_gap, TwoPathInstance};
use tripprice::equilibrium::{calibrate_demand, solve_sue, SolverConfig};
use tripprice::metrics::MetricsReport;
use tripprice::netmodel::{builtin, Scenario};
use tripprice::optimizer::{design, OptimizerConfig};
use tripprice::pricing::{as_trip_units, Bounds, DesignProblem, PriceVector, Priceable, RevenueConstraint, SchemeKind, Weights};
use tripprice::record::{path_table, RunRecord};

use crate::output::{self, fixed};
use crate::{Classify, Cli, Command, DesignArgs, Failure, Global, Outcome, ScenarioRef};

pub fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    if !(g.tol > 0.0) {
        return Err(anyhow!("--tol must be positive")).input();
    }
    output::ensure_dir(&g.out).input()?;
    match &cli.command {
        Command::Assign { scenario, prices } => assign(g, scenario, prices.as_deref()),
        Command::Design(args) => run_design(g, args),
        Command::Evaluate {
            record,
            builtin,
            scenario,
            prices,
        } => evaluate(g, record.as_deref(), builtin.clone(), scenario.clone(), prices.as_deref()),
        Command::Compare { records, reference } => compare(g, records, *reference),
        Command::Calibrate { scenario, targets } => calibrate(g, scenario, targets),
        Command::Classical { instance, revenue, theta } => classical(g, instance.as_deref(), *revenue, *theta),
    }
}

fn load(r: &ScenarioRef) -> Result<Scenario, Failure> {
    match (&r.builtin, &r.scenario) {
        (Some(name), _) => builtin(name).input(),
        (None, Some(path)) => Scenario::from_file(path).with_context(|| format!("loading {}", path.display())).input(),
        (None, None) => Err(anyhow!("a scenario is required (--builtin or --scenario)")).input(),
    }
}

fn read_record(path: &Path) -> Result<RunRecord, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).input()?;
    serde_json::from_str(&text).with_context(|| format!("parsing run record {}", path.display())).input()
}

/// Prices from a run record (`.json`) or a `path,price` CSV; unlisted paths
/// are free.
fn read_prices(path: &Path, scenario: &Scenario) -> Result<PriceVector, Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        let rec = read_record(path)?;
        if rec.prices.path_prices.len() != scenario.paths().len() {
            return Err(anyhow!(
                "record {} prices {} paths, scenario has {}",
                path.display(),
                rec.prices.path_prices.len(),
                scenario.paths().len()
            ))
            .input();
        }
        return Ok(rec.prices);
    }
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display())).input()?;
    let mut prices = vec![0.0; scenario.paths().len()];
    for row in reader.records() {
        let row = row.input()?;
        let (id, value) = match (row.get(0), row.get(1)) {
            (Some(id), Some(v)) => (id.trim(), v.trim()),
            _ => return Err(anyhow!("price rows need `path,price`")).input(),
        };
        let k = scenario.path_index(id).ok_or_else(|| anyhow!("unknown path `{id}` in {}", path.display())).input()?;
        prices[k] = value.parse::<f64>().with_context(|| format!("price of path `{id}`")).input()?;
    }
    let lengths = scenario.path_lengths();
    let unit: Vec<f64> = prices.iter().zip(lengths).map(|(p, l)| p / l).collect();
    let lb = unit.iter().fold(0.0f64, |a, &b| a.min(b));
    let ub = unit.iter().fold(0.0f64, |a, &b| a.max(b));
    Ok(PriceVector {
        kind: SchemeKind::Trip,
        priceable: Priceable::All,
        path_prices: prices,
        elements: (0..unit.len()).collect(),
        unit_prices: unit,
        bounds: Bounds { lb, ub },
    })
}

fn baseline(scenario: &Scenario, solver: &SolverConfig) -> Result<MetricsReport, Failure> {
    let zero = vec![0.0; scenario.paths().len()];
    let eq = solve_sue(scenario, &zero, solver).numerical()?;
    MetricsReport::compute(scenario, &eq).numerical()
}

fn not_converged(record: &RunRecord) -> Outcome {
    if record.equilibrium.converged {
        Ok(())
    } else {
        Err(anyhow!(
            "equilibrium did not converge (residual {:.3e} after {} iterations); record written with converged = false",
            record.equilibrium.residual,
            record.equilibrium.iterations
        ))
        .numerical()
    }
}

fn assign(g: &Global, scenario: &ScenarioRef, prices: Option<&Path>) -> Outcome {
    let started = output::timestamp();
    let s = load(scenario)?;
    let prices = match prices {
        Some(p) => read_prices(p, &s)?,
        None => PriceVector::zero(&s),
    };
    let solver = g.solver();
    let eq = solve_sue(&s, &prices.path_prices, &solver).numerical()?;
    let report = MetricsReport::compute(&s, &eq).numerical()?;
    let mut rec = RunRecord::assignment("assign", &s, prices, solver, &eq, report);
    rec.started = started;
    rec.finished = output::timestamp();
    output::write_json(&g.out.join("assign.json"), &rec).input()?;
    output::write_path_table(&g.out.join("paths.csv"), &path_table(&s, &eq)).input()?;
    output::write_metrics(&g.out.join("metrics.csv"), &rec.report, None).input()?;
    let t = &rec.report.traffic;
    println!(
        "{}: {} iterations, residual {:.2e}; TTS {} pax-h, avg travel time {} min, avg f/cap {}",
        s.name(),
        eq.iterations,
        eq.residual,
        fixed(t.tts_pax_h, 1),
        fixed(t.avg_travel_time_min, 2),
        fixed(t.avg_f_cap, 3)
    );
    not_converged(&rec)
}

fn run_design(g: &Global, a: &DesignArgs) -> Outcome {
    let started = output::timestamp();
    let s = load(&a.scenario)?;
    let weights = Weights::preset(&a.objective).input()?;
    let revenue = a.revenue_neutral.then_some(RevenueConstraint {
        b: a.b,
        toll_dominance: true,
    });
    let solver = g.solver();
    let problem = DesignProblem::new(s.clone(), a.scheme, a.priceable, weights, revenue, solver).input()?;
    let config = OptimizerConfig {
        population: a.pop,
        generations: a.gens,
        restarts: a.restarts,
        polish_evals: a.polish,
        seed: g.seed,
        max_evals: a.max_evals,
        ..OptimizerConfig::default()
    };
    config.validate().input()?;
    let warm = match &a.warm {
        None => Vec::new(),
        Some(path) => vec![warm_start(&problem, &read_record(path)?).input()?],
    };
    info!("designing {} pricing on {} ({} variables)", a.scheme, s.name(), problem.dimension());
    let d = design(&problem, &config, &warm).numerical()?;

    let mut rec = RunRecord::assignment("design", &s, d.prices.clone(), solver, &d.equilibrium, d.report.clone());
    rec.objective = Some(a.objective.clone());
    rec.weights = Some(weights);
    rec.revenue = revenue;
    rec.optimizer = Some(config);
    rec.seed = Some(g.seed);
    rec.baseline = Some(problem.baseline.clone());
    rec.objective_value = Some(d.evaluation.value);
    rec.feasible = Some(d.search.feasible);
    rec.trace = d.search.trace.clone();
    rec.started = started;
    rec.finished = output::timestamp();

    output::write_json(&g.out.join("design.json"), &rec).input()?;
    output::write_path_table(&g.out.join("paths.csv"), &path_table(&s, &d.equilibrium)).input()?;
    output::write_prices(&g.out.join("prices.csv"), &s, &d.prices).input()?;
    output::write_trace(&g.out.join("trace.csv"), &d.search.trace).input()?;
    output::write_metrics(&g.out.join("metrics.csv"), &d.report, Some(&problem.baseline)).input()?;

    let e = &d.evaluation.deltas;
    let pct = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{}%", fixed(100.0 * v, 1)));
    println!(
        "{} {} pricing, objective {}: value {:.4}; dTTS {} dTEC {} dPC {} dMAPD_Q {} dMAPD_W {}; net revenue {} EUR/h; {} evaluations",
        s.name(),
        a.scheme,
        a.objective,
        d.evaluation.value,
        pct(Some(e.tts)),
        pct(Some(e.tec)),
        pct(Some(e.pc)),
        pct(e.mapd_q),
        pct(e.mapd_w),
        fixed(d.report.revenues.net, 0),
        d.search.evaluations
    );
    if !d.search.feasible {
        return Err(anyhow!(
            "no feasible price vector found within the budget (violation {:.3} EUR/h); best-effort record written",
            d.search.score.violation
        ))
        .numerical();
    }
    not_converged(&rec)
}

/// Decision vector of `problem` reproducing the prices of `record`.
fn warm_start(problem: &DesignProblem, record: &RunRecord) -> anyhow::Result<Vec<f64>> {
    if record.scenario_id != problem.scenario.name() {
        bail!("warm-start record is for `{}`, not `{}`", record.scenario_id, problem.scenario.name());
    }
    match problem.scheme {
        SchemeKind::Trip => Ok(as_trip_units(&problem.scenario, &record.prices, problem.priceable, problem.bounds)?),
        SchemeKind::Road if record.prices.kind == SchemeKind::Road && record.priceable == problem.priceable => {
            Ok(record.prices.unit_prices.clone())
        }
        _ => bail!("a road design can only be warm-started from a road record with the same priceable set"),
    }
}

fn evaluate(g: &Global, record: Option<&Path>, name: Option<String>, file: Option<PathBuf>, prices: Option<&Path>) -> Outcome {
    let started = output::timestamp();
    let (s, mut rec) = match record {
        Some(path) => {
            let stored = read_record(path)?;
            let s = stored.scenario().input()?;
            (s, Some(stored))
        }
        None => {
            let s = load(&ScenarioRef {
                builtin: name,
                scenario: file,
            })?;
            (s, None)
        }
    };
    let (price_vector, solver) = match (&rec, prices) {
        (Some(r), None) => (r.prices.clone(), r.solver),
        (Some(_), Some(_)) => return Err(anyhow!("--prices cannot be combined with --record")).input(),
        (None, Some(p)) => (read_prices(p, &s)?, g.solver()),
        (None, None) => (PriceVector::zero(&s), g.solver()),
    };
    let eq = solve_sue(&s, &price_vector.path_prices, &solver).numerical()?;
    let report = MetricsReport::compute(&s, &eq).numerical()?;
    let base = baseline(&s, &solver)?;
    if let Some(stored) = &rec {
        let worst = report
            .entries()
            .iter()
            .zip(stored.report.entries())
            .filter_map(|((_, a), (_, b))| match (a, b) {
                (Some(a), Some(b)) => Some((a - b).abs() / (1.0 + b.abs())),
                _ => None,
            })
            .fold(0.0, f64::max);
        println!("reproduced stored report: largest relative difference {worst:.2e}");
    }
    let mut out = match rec.take() {
        Some(mut r) => {
            r.command = "evaluate".into();
            r.equilibrium = tripprice::record::EquilibriumSummary::of(&s, &eq);
            r.report = report;
            r
        }
        None => RunRecord::assignment("evaluate", &s, price_vector, solver, &eq, report),
    };
    out.baseline = Some(base);
    out.started = started;
    out.finished = output::timestamp();
    output::write_json(&g.out.join("evaluate.json"), &out).input()?;
    output::write_path_table(&g.out.join("paths.csv"), &path_table(&s, &eq)).input()?;
    output::write_metrics(&g.out.join("metrics.csv"), &out.report, out.baseline.as_ref()).input()?;
    let d = out.report.objective_deltas(out.baseline.as_ref().expect("baseline set"));
    println!(
        "{}: dTTS {}%, dTEC {}%, dPC {}%, average of five deltas {}%",
        s.name(),
        fixed(100.0 * d.tts, 1),
        fixed(100.0 * d.tec, 1),
        fixed(100.0 * d.pc, 1),
        fixed(100.0 * d.average(), 1)
    );
    not_converged(&out)
}

fn compare(g: &Global, paths: &[PathBuf], reference: usize) -> Outcome {
    if reference >= paths.len() {
        return Err(anyhow!("--reference {reference} out of range for {} records", paths.len())).input();
    }
    let records: Vec<RunRecord> = paths.iter().map(|p| read_record(p)).collect::<Result<_, _>>()?;
    let family = &records[reference].scenario_id;
    if let Some((p, r)) = paths.iter().zip(&records).find(|(_, r)| &r.scenario_id != family) {
        return Err(anyhow!(
            "{} is for scenario `{}`, the reference is for `{family}`",
            p.display(),
            r.scenario_id
        ))
        .input();
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    let labels: Vec<String> = paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().map_or_else(|| "run".to_string(), |s| s.to_string_lossy().into_owned());
            let stem = if stem == "design" || stem == "assign" || stem == "evaluate" {
                p.parent()
                    .and_then(|d| d.file_name())
                    .map_or(stem.clone(), |d| format!("{}/{stem}", d.to_string_lossy()))
            } else {
                stem
            };
            let n = seen.entry(stem.clone()).or_insert(0);
            *n += 1;
            if *n > 1 {
                format!("{stem}#{n}")
            } else {
                stem
            }
        })
        .collect();
    let reports: Vec<&MetricsReport> = records.iter().map(|r| &r.report).collect();
    let rows = output::comparison_matrix(&labels, &reports, reference).input()?;
    output::write_rows(&g.out.join("compare.csv"), &rows).input()?;
    for r in &rows {
        println!("{}", r.join(","));
    }
    Ok(())
}

fn calibrate(g: &Global, scenario: &ScenarioRef, targets: &[f64]) -> Outcome {
    let s = load(scenario)?;
    let n = s.ods().len();
    let targets: Vec<f64> = match targets.len() {
        1 => vec![targets[0]; n],
        k if k == n => targets.to_vec(),
        k => return Err(anyhow!("{k} targets given for {n} OD pairs")).input(),
    };
    let cal = match calibrate_demand(&s, &targets, &g.solver()) {
        Ok(c) => c,
        Err(e @ tripprice::EquilibriumError::BadTarget(_)) | Err(e @ tripprice::EquilibriumError::NoCarMode(_)) => {
            return Err(e).input()
        }
        Err(e) => return Err(e).numerical(),
    };
    let report = MetricsReport::compute(&cal.scenario, &cal.equilibrium).numerical()?;
    let toml = cal.scenario.to_toml_string().numerical()?;
    fs::write(g.out.join("calibrated.toml"), toml)
        .context("writing calibrated.toml")
        .input()?;
    let ods: Vec<&str> = cal.scenario.ods().iter().map(|o| o.id.as_str()).collect();
    output::write_json(
        &g.out.join("calibrate.json"),
        &json!({
            "scenario": cal.scenario.name(),
            "ods": ods,
            "targets": targets,
            "demand": cal.demand,
            "car_flows": cal.car_flows,
            "sweeps": cal.sweeps,
            "worst_relative_error": cal.worst,
            "alt_split": report.traffic.alt_split,
            "converged": cal.equilibrium.converged,
        }),
    )
    .input()?;
    for (i, od) in ods.iter().enumerate() {
        println!("{od}: demand {} pax/h, car {} pax/h", fixed(cal.demand[i], 0), fixed(cal.car_flows[i], 0));
    }
    println!(
        "{} sweeps, worst deviation {:.3}%, alternative-mode split {}%",
        cal.sweeps,
        100.0 * cal.worst,
        fixed(100.0 * report.traffic.alt_split, 1)
    );
    Ok(())
}

fn classical(g: &Global, instance: Option<&Path>, revenue: f64, theta: Option<f64>) -> Outcome {
    let inst = match instance {
        None => TwoPathInstance::desk(),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display())).input()?;
            let inst: TwoPathInstance = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display())).input()?;
            inst.validate().input()?;
            inst
        }
    };
    if let Some(t) = theta {
        if !(t > 0.0) {
            return Err(anyhow!("--theta must be positive")).input();
        }
    }
    let ue = solve_due(&inst).numerical()?;
    let so = solve_so(&inst).numerical()?;
    let msc = msc_tolls(&inst).numerical()?;
    let msc_flows = solve_due_tolled(&inst, msc).numerical()?;
    let valid = alternative_valid_tolls(&inst, revenue).ok();
    let gap = theta.map(|t| stochastic_gap(&inst, t)).transpose().numerical()?;

    let mut rows = vec![vec!["quantity".to_string(), "path_1".into(), "path_2".into()]];
    let mut push = |name: &str, v: [f64; 2]| rows.push(vec![name.to_string(), fixed(v[0], 4), fixed(v[1], 4)]);
    push("ue_flow", ue);
    push("ue_cost", inst.costs(ue, [0.0; 2]));
    push("so_flow", so);
    push("msc_toll", msc);
    push("msc_tolled_flow", msc_flows);
    if let Some(v) = &valid {
        push("valid_toll", v.tolls);
        push("valid_tolled_flow", v.tolled_flows);
        push("valid_tolled_cost", inst.costs(v.so_flows, v.tolls));
    }
    if let Some(gp) = &gap {
        push("sue_with_msc_flow", gp.sue_with_msc);
        push("stochastic_so_flow", gp.stochastic_so);
    }
    output::write_rows(&g.out.join("classical.csv"), &rows).input()?;
    output::write_json(
        &g.out.join("classical.json"),
        &json!({
            "instance": inst,
            "ue_flows": ue,
            "so_flows": so,
            "msc_tolls": msc,
            "msc_tolled_flows": msc_flows,
            "valid_tolls": valid,
            "stochastic_gap": gap,
        }),
    )
    .input()?;
    for r in &rows {
        println!("{}", r.join(","));
    }
    if valid.is_none() {
        println!("no interior system optimum: the valid-toll line is undefined");
    }
    Ok(())
}
