//! Trace CSV serialization.
//!
//! Schema (one header line, LF endings, floats as decimal text with 17
//! significant digits):
//!
//! ```text
//! epoch,cost_units,flops,loss,loss_interior,loss_gamma_e,loss_gamma_i,mse,active_block,lr
//! ```
//!
//! `active_block` is -1 for full-network epochs; `mse` is NaN for runs
//! without an exact solution. Replaying a seeded run reproduces the file
//! byte for byte.

use crate::driver::{EpochRecord, RunTrace};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

pub const TRACE_HEADER: &str =
    "epoch,cost_units,flops,loss,loss_interior,loss_gamma_e,loss_gamma_i,mse,active_block,lr";

pub fn write_trace<W: Write>(trace: &RunTrace, mut out: W) -> Result<()> {
    out.write_all(TRACE_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for r in trace.records() {
        writeln!(
            out,
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e}",
            r.epoch,
            r.cost_units,
            r.flops,
            r.loss,
            r.loss_interior,
            r.loss_gamma_e,
            r.loss_gamma_i,
            r.mse,
            r.active_block,
            r.lr
        )?;
    }
    Ok(())
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<EpochRecord>> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(header))) if header.trim_end() == TRACE_HEADER => {}
        Some((_, Ok(header))) => {
            return Err(Error::Parse { line: 1, message: format!("bad trace header {header:?}") })
        }
        Some((_, Err(e))) => return Err(Error::Parse { line: 1, message: e.to_string() }),
        None => return Err(Error::Parse { line: 1, message: "empty trace".into() }),
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 10 columns, got {}", fields.len()),
            });
        }
        let parse_f = |idx: usize| -> Result<f64> {
            fields[idx].parse::<f64>().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("bad float in column {}", idx + 1),
            })
        };
        let record = EpochRecord {
            epoch: fields[0].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: "bad epoch".into(),
            })?,
            cost_units: parse_f(1)?,
            flops: fields[2].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: "bad flops".into(),
            })?,
            loss: parse_f(3)?,
            loss_interior: parse_f(4)?,
            loss_gamma_e: parse_f(5)?,
            loss_gamma_i: parse_f(6)?,
            mse: parse_f(7)?,
            active_block: fields[8].parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: "bad active_block".into(),
            })?,
            lr: parse_f(9)?,
        };
        if let Some(prev) = records.last() {
            let prev: &EpochRecord = prev;
            if record.epoch <= prev.epoch || record.cost_units < prev.cost_units {
                return Err(Error::Parse {
                    line: i + 1,
                    message: "epochs must increase and cost units must not decrease".into(),
                });
            }
        }
        records.push(record);
    }
    Ok(records)
}
