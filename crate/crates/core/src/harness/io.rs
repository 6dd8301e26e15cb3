use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use super::{Method, ResultRow, SweepVariable};
use crate::error::Result;
use crate::numerics::watts_to_dbm;

pub const CSV_HEADER: &str = "method,sweep_variable,sweep_value,trial,power_w,power_dbm,iterations,status,seed,wall_time_s";

pub fn write_csv<W: Write>(out: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    /// Mean over feasible rows, NaN when there are none.
    pub mean_w: f64,
    /// Sample standard deviation over `√n`; zero for a single row.
    pub stderr_w: f64,
    pub feasible: usize,
    pub infeasible: usize,
}

impl SummaryRow {
    pub fn mean_dbm(&self) -> f64 {
        watts_to_dbm(self.mean_w)
    }
}

/// Per `(method, variable, value)` mean and standard error over feasible rows.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Method, SweepVariable, u64), (f64, Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        // Order-preserving key for finite and infinite floats alike.
        let bits = r.sweep_value.to_bits();
        let key = if r.sweep_value.is_sign_negative() { !bits } else { bits | (1 << 63) };
        let g = groups.entry((r.method, r.sweep_variable, key)).or_insert((r.sweep_value, Vec::new(), 0));
        if r.is_feasible() {
            g.1.push(r.power_w);
        } else {
            g.2 += 1;
        }
    }
    groups
        .into_iter()
        .map(|((method, sweep_variable, _), (sweep_value, vals, infeasible))| {
            let n = vals.len();
            let mean = if n == 0 { f64::NAN } else { vals.iter().sum::<f64>() / n as f64 };
            let stderr = if n < 2 {
                0.0
            } else {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            };
            SummaryRow {
                method,
                sweep_variable,
                sweep_value,
                mean_w: mean,
                stderr_w: stderr,
                feasible: n,
                infeasible,
            }
        })
        .collect()
}

/// Plain-text table of the summary in dBm.
pub fn format_summary(summary: &[SummaryRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>9} {:>10} {:>12} {:>12} {:>6} {:>6}",
        "method", "variable", "value", "mean_dBm", "stderr_W", "ok", "infeas"
    );
    for r in summary {
        let _ = writeln!(
            s,
            "{:<12} {:>9} {:>10} {:>12.3} {:>12.4e} {:>6} {:>6}",
            r.method.as_str(),
            r.sweep_variable.as_str(),
            r.sweep_value,
            r.mean_dbm(),
            r.stderr_w,
            r.feasible,
            r.infeasible
        );
    }
    s
}
