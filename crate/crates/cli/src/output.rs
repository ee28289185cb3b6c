//! CSV tables and JSON sidecars. Full precision lives in the JSON; the CSV
//! tables round for presentation (flows to whole pax/h, unit prices to
//! 0.1 euro/km).

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use tripprice::metrics::MetricsReport;
use tripprice::netmodel::Scenario;
use tripprice::optimizer::TraceRow;
use tripprice::pricing::{PriceVector, SchemeKind};
use tripprice::record::PathRow;

/// Round to `digits` decimals, printing negative zero as zero.
pub fn fixed(x: f64, digits: usize) -> String {
    let scale = 10f64.powi(digits as i32);
    let r = (x * scale).round() / scale + 0.0;
    format!("{r:.digits$}")
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(String::new, |v| fixed(v, digits))
}

/// Unix seconds, or `SOURCE_DATE_EPOCH` when set so reruns are byte-identical.
pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))
}

pub fn write_path_table(path: &Path, rows: &[PathRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["path", "od", "mode", "flow_pax_h", "travel_time_min", "price_eur"])?;
    for r in rows {
        w.write_record([
            r.path.clone(),
            r.od.clone(),
            r.mode.clone(),
            fixed(r.flow, 0),
            fixed(r.travel_time_min, 1),
            fixed(r.price, 2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_prices(path: &Path, scenario: &Scenario, prices: &PriceVector) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["element", "unit_price_eur_km"])?;
    for (&e, &u) in prices.elements.iter().zip(&prices.unit_prices) {
        let id = match prices.kind {
            SchemeKind::Road => scenario.links()[e].id.clone(),
            _ => scenario.paths()[e].id.clone(),
        };
        w.write_record([id, fixed(u, 1)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_metrics(path: &Path, report: &MetricsReport, baseline: Option<&MetricsReport>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["measure", "value", "baseline", "delta"])?;
    let base = baseline.map(|b| b.entries());
    let deltas = match baseline {
        Some(b) => Some(report.deltas(b)?),
        None => None,
    };
    for (i, (name, v)) in report.entries().into_iter().enumerate() {
        let b = base.as_ref().and_then(|b| b[i].1);
        let d = deltas.as_ref().and_then(|d| d[i].1);
        w.write_record([name, opt(v, 4), opt(b, 4), opt(d, 4)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["restart", "generation", "best", "mean", "feasible_fraction", "evaluations"])?;
    for t in trace {
        w.write_record([
            t.restart.to_string(),
            t.generation.to_string(),
            format!("{:.6e}", t.best),
            t.mean.map_or_else(String::new, |m| format!("{m:.6e}")),
            opt(t.feasible_fraction, 4),
            t.evaluations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Whether a decrease of the measure is an improvement; `None` for
/// measures without a preferred direction.
pub fn lower_is_better(measure: &str) -> Option<bool> {
    match measure {
        "tts_pax_h" | "tts_veh_h" | "avg_travel_time_min" | "tec_kwh" | "tgc_eur" | "pc" | "mapd_q" | "mapd_w" | "mapd"
        | "avg_f_cap" => Some(true),
        "ua" | "alt_split" => Some(false),
        _ => None,
    }
}

/// Comparison matrix: the reference column holds values, the others hold
/// relative changes with `(+)` for improvements and `(-)` for
/// deteriorations.
pub fn comparison_matrix(labels: &[String], reports: &[&MetricsReport], reference: usize) -> Result<Vec<Vec<String>>> {
    let base = reports[reference];
    let mut header = vec!["measure".to_string()];
    header.extend(labels.iter().cloned());
    let columns: Vec<Vec<(String, Option<f64>)>> = reports
        .iter()
        .enumerate()
        .map(|(i, r)| if i == reference { Ok(r.entries()) } else { r.deltas(base) })
        .collect::<Result<_, _>>()?;
    let mut rows = vec![header];
    for (j, (name, _)) in base.entries().into_iter().enumerate() {
        let mut row = vec![name.clone()];
        for (i, col) in columns.iter().enumerate() {
            let cell = match col[j].1 {
                None => String::new(),
                Some(v) if i == reference => fixed(v, 4),
                Some(d) => {
                    let pct = fixed(100.0 * d, 1);
                    let mark = match lower_is_better(&name) {
                        Some(lower) if d.abs() > 5e-4 => {
                            if (d < 0.0) == lower {
                                " (+)"
                            } else {
                                " (-)"
                            }
                        }
                        _ => "",
                    };
                    format!("{pct}%{mark}")
                }
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_rows(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}
