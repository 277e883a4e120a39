use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{BenchError, Result};
use crate::experiment::{read_records_from, ExperimentKind, ExperimentRecord};

/// Mean and spread of one `(experiment, algo, subject, n, h_max)` group.
/// `std` uses the `n - 1` convention and is 0 with `std_defined = false`
/// for single-row groups.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: ExperimentKind,
    pub algo: String,
    pub subject: String,
    pub n: u64,
    pub h_max: String,
    pub count: usize,
    pub value_mean: f64,
    pub value_std: f64,
    pub node_count_mean: f64,
    pub node_count_std: f64,
    pub wall_time_mean_s: f64,
    pub wall_time_std_s: f64,
    pub std_defined: bool,
}

/// `(mean, sample std, std defined)`.
pub fn mean_std(values: &[f64]) -> (f64, f64, bool) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0, false);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, false);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt(), true)
}

type GroupKey = (ExperimentKind, String, String, u64, String);

pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<GroupKey, Vec<&ExperimentRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.experiment, r.algo.clone(), r.subject.clone(), r.n, r.h_max.clone())).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((experiment, algo, subject, n, h_max), rows)| {
            let column = |f: fn(&ExperimentRecord) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (value_mean, value_std, std_defined) = mean_std(&column(|r| r.value));
            let (node_count_mean, node_count_std, _) = mean_std(&column(|r| r.node_count));
            let (wall_time_mean_s, wall_time_std_s, _) = mean_std(&column(|r| r.wall_time_ns as f64 * 1e-9));
            SummaryRow {
                experiment,
                algo,
                subject,
                n,
                h_max,
                count: rows.len(),
                value_mean,
                value_std,
                node_count_mean,
                node_count_std,
                wall_time_mean_s,
                wall_time_std_s,
                std_defined,
            }
        })
        .collect()
}

/// Reads and concatenates every results CSV, then summarizes.
pub fn summarize_files<P: AsRef<Path>>(paths: &[P]) -> Result<Vec<SummaryRow>> {
    let mut records = Vec::new();
    for path in paths {
        records.extend(read_records_from(path.as_ref())?);
    }
    Ok(summarize(&records))
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_json<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    serde_json::to_writer_pretty(out, rows)?;
    Ok(())
}

#[derive(Serialize)]
struct LongRow<'a> {
    experiment: ExperimentKind,
    algo: &'a str,
    subject: &'a str,
    n: u64,
    h_max: &'a str,
    metric: &'static str,
    mean: f64,
    std: f64,
    count: usize,
}

/// One row per `(group, metric)`, convenient for plotting tools.
pub fn write_long_csv<W: Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        let metrics = [
            ("value", row.value_mean, row.value_std),
            ("node_count", row.node_count_mean, row.node_count_std),
            ("wall_time_s", row.wall_time_mean_s, row.wall_time_std_s),
        ];
        for (metric, mean, std) in metrics {
            w.serialize(LongRow {
                experiment: row.experiment,
                algo: &row.algo,
                subject: &row.subject,
                n: row.n,
                h_max: &row.h_max,
                metric,
                mean,
                std,
                count: row.count,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_files(
    csv_path: &Path,
    json_path: Option<&Path>,
    long_path: Option<&Path>,
    rows: &[SummaryRow],
) -> Result<()> {
    let file = std::fs::File::create(csv_path).map_err(|e| BenchError::io(csv_path, e))?;
    write_summary_csv(file, rows).map_err(|e| BenchError::csv(csv_path, e))?;
    if let Some(path) = json_path {
        let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
        write_summary_json(file, rows)?;
    }
    if let Some(path) = long_path {
        let file = std::fs::File::create(path).map_err(|e| BenchError::io(path, e))?;
        write_long_csv(file, rows).map_err(|e| BenchError::csv(path, e))?;
    }
    Ok(())
}
