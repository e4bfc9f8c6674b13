//! The four subcommands as pure functions from a scenario file to a table.

use anyhow::{bail, Result};
use tandem_bounds::optimize::DEFAULT_W_CAP;
use tandem_bounds::par::map_ordered;
use tandem_bounds::sim::SimPoint;
use tandem_bounds::{
    bound, bound_backlog, delay_for_epsilon, estimate_backlog_violation, estimate_violation, snr_for_epsilon,
    BoundFamily, Parallelism, SnrSearch,
};

use crate::config::{ScenarioFile, Sweep};
use crate::report::{fmt_db, fmt_prob, Table};

const TOOL: &str = concat!("tbound ", env!("CARGO_PKG_VERSION"));

/// Families evaluated when none are requested.
pub fn default_families(file: &ScenarioFile) -> Vec<BoundFamily> {
    if file.uses_delay() {
        vec![BoundFamily::WtbDelayed]
    } else {
        vec![BoundFamily::Stationary, BoundFamily::Sotat, BoundFamily::Wtb]
    }
}

/// Parses `all` or a comma-separated list of family names.
pub fn parse_families(spec: &str) -> Result<Option<Vec<BoundFamily>>> {
    if spec == "all" {
        return Ok(None);
    }
    let mut out = Vec::new();
    for name in spec.split(',') {
        out.push(name.trim().parse::<BoundFamily>()?);
    }
    Ok(Some(out))
}

fn header_table(file: &ScenarioFile, command: &str, header: Vec<String>) -> Table {
    Table::new(header)
        .meta("scenario_hash", file.hash())
        .meta("tool", TOOL)
        .meta("command", command)
}

/// Bound values per sweep point and column; failures become NaN.
pub struct BoundGrid {
    pub columns: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

pub fn bound_grid(file: &ScenarioFile, families: &[BoundFamily], par: Parallelism) -> Result<BoundGrid> {
    let sweep = file.sweep();
    let labels = sweep.labels();
    let points: Vec<usize> = (0..sweep.len()).collect();
    let (columns, results): (Vec<String>, Vec<Vec<Result<f64, String>>>) = match &sweep {
        Sweep::X(xs) => {
            let base = file.base_scenario()?;
            let rows = map_ordered(par, &points, |&i| {
                vec![bound_backlog(&base, xs[i])
                    .map(|r| r.probability)
                    .map_err(|e| e.to_string())]
            });
            (vec!["backlog".to_string()], rows)
        }
        _ => {
            let rows = map_ordered(par, &points, |&i| match file.scenario_at(i) {
                Ok(sc) => families
                    .iter()
                    .map(|&f| bound(&sc, f).map(|r| r.probability).map_err(|e| e.to_string()))
                    .collect(),
                Err(e) => vec![Err(format!("{e:#}")); families.len()],
            });
            (families.iter().map(|f| f.name().to_string()).collect(), rows)
        }
    };
    let mut warnings = Vec::new();
    let values = results
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .zip(&columns)
                .map(|(r, col)| {
                    r.unwrap_or_else(|e| {
                        warnings.push(format!("{}={}: {col}: {e}", sweep.column(), labels[i]));
                        f64::NAN
                    })
                })
                .collect()
        })
        .collect();
    Ok(BoundGrid {
        columns,
        values,
        warnings,
    })
}

/// Simulated violation probabilities per sweep point.
pub fn sim_points(file: &ScenarioFile, par: Parallelism) -> Result<Vec<SimPoint>> {
    let cfg = file.sim_config(par);
    let sweep = file.sweep();
    let base = file.base_scenario()?;
    Ok(match &sweep {
        Sweep::W(ws) => estimate_violation(&base, &cfg, ws)?.points,
        Sweep::X(xs) => estimate_backlog_violation(&base, &cfg, xs)?.points,
        _ => {
            let w = base.target_delay();
            let mut out = Vec::with_capacity(sweep.len());
            for i in 0..sweep.len() {
                let sc = file.scenario_at(i)?;
                out.push(estimate_violation(&sc, &cfg, &[w])?.points[0]);
            }
            out
        }
    })
}

pub fn cmd_bound(file: &ScenarioFile, families: &[BoundFamily], par: Parallelism) -> Result<(Table, Vec<String>)> {
    let sweep = file.sweep();
    let grid = bound_grid(file, families, par)?;
    if grid.values.iter().flatten().all(|v| v.is_nan()) {
        bail!("every bound evaluation failed:\n  {}", grid.warnings.join("\n  "));
    }
    let mut header = vec![sweep.column().to_string()];
    header.extend(grid.columns.iter().cloned());
    let mut table = header_table(file, "bound", header);
    for (label, vals) in sweep.labels().into_iter().zip(&grid.values) {
        let mut row = vec![label];
        row.extend(vals.iter().map(|v| fmt_prob(*v)));
        table.push(row);
    }
    Ok((table, grid.warnings))
}

pub fn cmd_simulate(file: &ScenarioFile, par: Parallelism) -> Result<Table> {
    let sweep = file.sweep();
    let points = sim_points(file, par)?;
    let header = [sweep.column(), "p_hat", "ci_lo", "ci_hi", "trials"]
        .map(String::from)
        .to_vec();
    let mut table = header_table(file, "simulate", header).meta("seed", file.sim.seed.to_string());
    for (label, p) in sweep.labels().into_iter().zip(&points) {
        table.push(vec![
            label,
            fmt_prob(p.p_hat),
            fmt_prob(p.ci_lo),
            fmt_prob(p.ci_hi),
            file.sim.trials.to_string(),
        ]);
    }
    Ok(table)
}

/// `pass` if every bound is at least `p_hat - 3 se`; `inconclusive` when
/// fewer than ten violations were seen.
pub fn verdict(bounds: &[f64], p: &SimPoint, trials: u64) -> &'static str {
    if bounds.iter().any(|b| b.is_nan()) {
        return "error";
    }
    if p.p_hat < 10.0 / trials as f64 {
        return "inconclusive";
    }
    if bounds.iter().all(|&b| b >= p.p_hat - 3.0 * p.se) {
        "pass"
    } else {
        "fail"
    }
}

/// Bound columns next to the simulation, with a verdict per row.
/// The flag is true if any row failed.
pub fn cmd_compare(file: &ScenarioFile, families: &[BoundFamily], par: Parallelism) -> Result<(Table, bool)> {
    let sweep = file.sweep();
    let grid = bound_grid(file, families, par)?;
    let points = sim_points(file, par)?;
    let mut header = vec![sweep.column().to_string()];
    header.extend(grid.columns.iter().cloned());
    header.extend(["p_hat", "se", "ci_lo", "ci_hi", "trials", "verdict"].map(String::from));
    let mut table = header_table(file, "compare", header).meta("seed", file.sim.seed.to_string());
    let mut failed = false;
    for ((label, vals), p) in sweep.labels().into_iter().zip(&grid.values).zip(&points) {
        let v = verdict(vals, p, file.sim.trials);
        failed |= v == "fail" || v == "error";
        let mut row = vec![label];
        row.extend(vals.iter().map(|v| fmt_prob(*v)));
        row.extend([
            fmt_prob(p.p_hat),
            fmt_prob(p.se),
            fmt_prob(p.ci_lo),
            fmt_prob(p.ci_hi),
            file.sim.trials.to_string(),
            v.to_string(),
        ]);
        table.push(row);
    }
    Ok((table, failed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InverseMode {
    Delay,
    Snr,
}

/// Smallest delay target (one row) or smallest SNR per delay target.
pub fn cmd_inverse(
    file: &ScenarioFile,
    mode: InverseMode,
    eps: f64,
    families: &[BoundFamily],
    par: Parallelism,
) -> Result<Table> {
    match mode {
        InverseMode::Delay => {
            let sc = file.base_scenario()?;
            let mut header = vec!["eps".to_string()];
            header.extend(families.iter().map(|f| format!("w_{f}")));
            let mut table = header_table(file, "inverse-delay", header);
            let mut row = vec![fmt_prob(eps)];
            for &f in families {
                row.push(delay_for_epsilon(&sc, f, eps, DEFAULT_W_CAP)?.to_string());
            }
            table.push(row);
            Ok(table)
        }
        InverseMode::Snr => {
            let ws = match file.sweep() {
                Sweep::W(ws) => ws,
                other => bail!("SNR inversion sweeps w; the file sweeps {}", other.column()),
            };
            let base = file.base_scenario()?;
            let search = SnrSearch::default();
            let rows = map_ordered(par, &ws, |&w| {
                let sc = base.clone().with_target_delay(w);
                families
                    .iter()
                    .map(|&f| snr_for_epsilon(&sc, f, eps, &search).map(|g| 10.0 * g.log10()))
                    .collect::<Result<Vec<f64>, _>>()
            });
            let mut header = vec!["w".to_string()];
            header.extend(families.iter().map(|f| format!("snr_db_{f}")));
            let mut table = header_table(file, "inverse-snr", header).meta("eps", fmt_prob(eps));
            for (w, r) in ws.iter().zip(rows) {
                let mut row = vec![w.to_string()];
                row.extend(r?.into_iter().map(fmt_db));
                table.push(row);
            }
            Ok(table)
        }
    }
}
