//! Aggregation of traces into budgeted summaries.
//!
//! For each (method, problem) group the per-epoch median loss across seeds
//! is formed, the minimum of that median curve within each budget is
//! selected, and the median MSE at the same epoch is reported alongside.

use crate::driver::EpochRecord;
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub method: String,
    pub budget: f64,
    pub best_median_loss: f64,
    pub median_mse: f64,
}

/// Median with the usual midpoint convention for even counts. NaNs (MSE of
/// problems without an exact solution) stay NaN.
fn median(values: &mut [f64]) -> f64 {
    if values.iter().any(|v| v.is_nan()) {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaNs here"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Traces of one (method, problem) group, epoch-aligned.
pub struct TraceGroup {
    pub method: String,
    pub problem: String,
    pub runs: Vec<Vec<EpochRecord>>,
}

impl TraceGroup {
    /// Per-epoch medians of loss and MSE, with the cost axis shared by all
    /// runs (deterministic schedules make it identical across seeds).
    pub fn median_curves(&self) -> Result<Vec<(f64, f64, f64)>> {
        let reference = &self.runs[0];
        for run in &self.runs[1..] {
            if run.len() != reference.len()
                || run
                    .iter()
                    .zip(reference)
                    .any(|(a, b)| a.epoch != b.epoch || a.cost_units != b.cost_units)
            {
                return Err(Error::Config(format!(
                    "traces of {}/{} have mismatched epoch grids; cannot take medians",
                    self.method, self.problem
                )));
            }
        }
        let mut curves = Vec::with_capacity(reference.len());
        for j in 0..reference.len() {
            let mut losses: Vec<f64> = self.runs.iter().map(|r| r[j].loss).collect();
            let mut mses: Vec<f64> = self.runs.iter().map(|r| r[j].mse).collect();
            curves.push((reference[j].cost_units, median(&mut losses), median(&mut mses)));
        }
        Ok(curves)
    }

    /// Best median loss within each budget plus the median MSE at the
    /// epoch attaining it.
    pub fn summarize(&self, budgets: &[f64]) -> Result<Vec<SummaryRow>> {
        let curves = self.median_curves()?;
        let mut rows = Vec::new();
        for &budget in budgets {
            let mut best: Option<(f64, f64)> = None;
            for &(cost, loss, mse) in &curves {
                if cost > budget {
                    break;
                }
                if best.map_or(true, |(b, _)| loss < b) {
                    best = Some((loss, mse));
                }
            }
            if let Some((loss, mse)) = best {
                rows.push(SummaryRow {
                    problem: self.problem.clone(),
                    method: self.method.clone(),
                    budget,
                    best_median_loss: loss,
                    median_mse: mse,
                });
            }
        }
        Ok(rows)
    }
}

/// Parses `<method>__<problem>__seed<k>.csv`.
fn parse_trace_name(name: &str) -> Option<(String, String, u64)> {
    let stem = name.strip_suffix(".csv")?;
    let mut parts = stem.split("__");
    let method = parts.next()?;
    let problem = parts.next()?;
    let seed = parts.next()?.strip_prefix("seed")?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((method.to_string(), problem.to_string(), seed))
}

/// Loads every trace in a directory, grouped by (method, problem).
pub fn load_trace_groups(dir: &Path) -> Result<Vec<TraceGroup>> {
    let mut groups: BTreeMap<(String, String), Vec<(u64, Vec<EpochRecord>)>> = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some((method, problem, seed)) = parse_trace_name(name) else { continue };
        let file = std::fs::File::open(entry.path())?;
        let records = crate::trace::read_trace(std::io::BufReader::new(file))?;
        groups.entry((method, problem)).or_default().push((seed, records));
    }
    if groups.is_empty() {
        return Err(Error::Config(format!("no trace files found in {}", dir.display())));
    }
    Ok(groups
        .into_iter()
        .map(|((method, problem), mut runs)| {
            runs.sort_by_key(|(seed, _)| *seed);
            TraceGroup { method, problem, runs: runs.into_iter().map(|(_, r)| r).collect() }
        })
        .collect())
}

/// Summarizes a trace directory. Rows are ordered by problem, then budget,
/// then ascending best median loss, so the dominating method reads first.
pub fn cmd_report(dir: &Path, budgets: &[f64]) -> Result<Vec<SummaryRow>> {
    let groups = load_trace_groups(dir)?;
    let mut rows = Vec::new();
    for group in &groups {
        rows.extend(group.summarize(budgets)?);
    }
    rows.sort_by(|a, b| {
        (a.problem.as_str(), a.budget, a.best_median_loss)
            .partial_cmp(&(b.problem.as_str(), b.budget, b.best_median_loss))
            .expect("finite ordering keys")
    });
    Ok(rows)
}

pub fn rows_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("problem,method,budget,best_median_loss,median_mse\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e}\n",
            r.problem, r.method, r.budget, r.best_median_loss, r.median_mse
        ));
    }
    out
}

pub fn rows_to_table(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:<24} {:>10} {:>14} {:>14}\n",
        "problem", "method", "budget", "median loss", "median MSE"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:<24} {:>10} {:>14.6e} {:>14.6e}\n",
            r.problem, r.method, r.budget, r.best_median_loss, r.median_mse
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{EpochRecord, RunTrace};
    use crate::trace::write_trace;

    fn fake_records(losses: &[f64], mses: &[f64]) -> Vec<EpochRecord> {
        losses
            .iter()
            .zip(mses)
            .enumerate()
            .map(|(k, (&loss, &mse))| EpochRecord {
                epoch: (k + 1) as u64,
                cost_units: (k + 1) as f64,
                flops: 0,
                loss,
                loss_interior: loss,
                loss_gamma_e: 0.0,
                loss_gamma_i: 0.0,
                mse,
                active_block: -1,
                lr: 1e-4,
            })
            .collect()
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&mut [1.0, 3.0, 2.0]), 2.0);
        assert_eq!(median(&mut [1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(median(&mut [5.0]), 5.0);
        assert!(median(&mut [1.0, f64::NAN]).is_nan());
    }

    #[test]
    fn single_seed_median_is_the_run() {
        let group = TraceGroup {
            method: "m".into(),
            problem: "p".into(),
            runs: vec![fake_records(&[3.0, 2.0, 2.5], &[0.3, 0.2, 0.25])],
        };
        let rows = group.summarize(&[2.0, 3.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].best_median_loss, 2.0);
        assert_eq!(rows[0].median_mse, 0.2);
        assert_eq!(rows[1].best_median_loss, 2.0);
    }

    #[test]
    fn constant_losses_one_two_three_have_median_two() {
        let group = TraceGroup {
            method: "m".into(),
            problem: "p".into(),
            runs: vec![
                fake_records(&[1.0, 1.0], &[0.1, 0.1]),
                fake_records(&[2.0, 2.0], &[0.2, 0.2]),
                fake_records(&[3.0, 3.0], &[0.3, 0.3]),
            ],
        };
        let rows = group.summarize(&[2.0]).unwrap();
        assert_eq!(rows[0].best_median_loss, 2.0);
        assert_eq!(rows[0].median_mse, 0.2);
    }

    #[test]
    fn dominating_method_sorts_first() {
        let dir = tempfile::tempdir().unwrap();
        let write = |name: &str, losses: &[f64]| {
            let mut trace = RunTrace::new();
            for r in fake_records(losses, &vec![0.5; losses.len()]) {
                trace.push(r);
            }
            let f = std::fs::File::create(dir.path().join(name)).unwrap();
            write_trace(&trace, std::io::BufWriter::new(f)).unwrap();
        };
        write("better__p__seed1.csv", &[0.5, 0.4]);
        write("better__p__seed2.csv", &[0.6, 0.5]);
        write("worse__p__seed1.csv", &[1.5, 1.4]);
        write("worse__p__seed2.csv", &[1.6, 1.5]);
        let rows = cmd_report(dir.path(), &[2.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].method, "better");
        assert_eq!(rows[1].method, "worse");
        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("problem,method,budget"));
        let table = rows_to_table(&rows);
        assert!(table.contains("better"));
    }

    #[test]
    fn mismatched_grids_rejected() {
        let group = TraceGroup {
            method: "m".into(),
            problem: "p".into(),
            runs: vec![
                fake_records(&[1.0, 1.0], &[0.1, 0.1]),
                fake_records(&[2.0], &[0.2]),
            ],
        };
        assert!(group.summarize(&[2.0]).is_err());
    }

    #[test]
    fn budget_smaller_than_first_epoch_yields_no_row() {
        let group = TraceGroup {
            method: "m".into(),
            problem: "p".into(),
            runs: vec![fake_records(&[1.0], &[0.1])],
        };
        let rows = group.summarize(&[0.5]).unwrap();
        assert!(rows.is_empty());
    }
}
