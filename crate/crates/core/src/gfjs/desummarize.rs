use std::io::Write;

use super::Gfjs;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::query::VarId;

/// Receives desummarized rows. `repeat` consecutive copies of `row` are
/// delivered in one call.
pub trait RowSink {
    fn push(&mut self, row: &[u32], repeat: u64) -> Result<()>;
}

/// Collects expanded rows in memory.
#[derive(Debug, Default)]
pub struct VecSink {
    pub rows: Vec<Vec<u32>>,
}

impl RowSink for VecSink {
    fn push(&mut self, row: &[u32], repeat: u64) -> Result<()> {
        for _ in 0..repeat {
            self.rows.push(row.to_vec());
        }
        Ok(())
    }
}

/// Only counts rows.
#[derive(Debug, Default)]
pub struct CountSink {
    pub rows: u64,
}

impl RowSink for CountSink {
    fn push(&mut self, _row: &[u32], repeat: u64) -> Result<()> {
        self.rows += repeat;
        Ok(())
    }
}

/// Writes decoded rows as CSV, optionally reordering columns.
pub struct CsvSink<'a, W: Write> {
    out: W,
    domain: &'a Domain,
    /// Output column `j` is input column `permutation[j]`.
    permutation: Vec<usize>,
    vars: Vec<VarId>,
    line: Vec<u8>,
    bytes: u64,
}

impl<'a, W: Write> CsvSink<'a, W> {
    /// `columns` are the variables of the rows the sink will receive;
    /// `order` names the output columns and must be a permutation of them.
    pub fn new(
        out: W,
        domain: &'a Domain,
        columns: &[VarId],
        order: &[VarId],
        header: bool,
    ) -> Result<Self> {
        let permutation = order
            .iter()
            .map(|v| {
                columns.iter().position(|c| c == v).ok_or_else(|| {
                    Error::InvalidPlan(format!(
                        "output column `{}` not in summary",
                        domain.name(*v)
                    ))
                })
            })
            .collect::<Result<Vec<usize>>>()?;
        if permutation.len() != columns.len() {
            return Err(Error::InvalidPlan(
                "output order must list every summary column".into(),
            ));
        }
        let mut sink = CsvSink {
            out,
            domain,
            permutation,
            vars: columns.to_vec(),
            line: Vec::new(),
            bytes: 0,
        };
        if header {
            let names: Vec<&str> = order.iter().map(|&v| domain.name(v)).collect();
            sink.encode(&names)?;
            let line = std::mem::take(&mut sink.line);
            sink.write(&line, 1)?;
        }
        Ok(sink)
    }

    pub fn bytes_written(&self) -> u64 {
        self.bytes
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    fn encode(&mut self, fields: &[&str]) -> Result<()> {
        self.line.clear();
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(&mut self.line);
        w.write_record(fields)
            .map_err(|e| Error::Format(e.to_string()))?;
        w.flush().map_err(|e| Error::io("<csv buffer>", e))?;
        Ok(())
    }

    fn write(&mut self, line: &[u8], repeat: u64) -> Result<()> {
        for _ in 0..repeat {
            self.out
                .write_all(line)
                .map_err(|e| Error::io("<result>", e))?;
        }
        self.bytes += line.len() as u64 * repeat;
        Ok(())
    }
}

impl<W: Write> RowSink for CsvSink<'_, W> {
    fn push(&mut self, row: &[u32], repeat: u64) -> Result<()> {
        let domain = self.domain;
        let fields: Vec<&str> = self
            .permutation
            .iter()
            .map(|&i| domain.decode(self.vars[i], row[i]))
            .collect();
        self.encode(&fields)?;
        let line = std::mem::take(&mut self.line);
        let result = self.write(&line, repeat);
        self.line = line;
        result
    }
}

/// Expands every group in lockstep and streams the rows to `sink`.
/// Returns the number of rows emitted.
pub fn desummarize(gfjs: &Gfjs, sink: &mut dyn RowSink) -> Result<u64> {
    let groups = gfjs.groups();
    if groups.is_empty() {
        return Ok(0);
    }
    let mut run = vec![0usize; groups.len()];
    let mut left: Vec<u64> = groups
        .iter()
        .map(|g| g.freqs().first().copied().unwrap_or(0))
        .collect();
    let mut row: Vec<u32> = Vec::with_capacity(gfjs.columns().len());
    let mut emitted = 0u64;

    loop {
        let exhausted = run
            .iter()
            .zip(groups)
            .filter(|(&r, g)| r >= g.len())
            .count();
        if exhausted == groups.len() {
            break;
        }
        if exhausted > 0 {
            return Err(Error::InconsistentSummary(format!(
                "groups end at different rows (after {emitted})"
            )));
        }
        row.clear();
        for (g, &r) in groups.iter().zip(&run) {
            row.extend_from_slice(g.run(r).0);
        }
        let step = *left.iter().min().expect("at least one group");
        sink.push(&row, step)?;
        emitted += step;
        for (i, g) in groups.iter().enumerate() {
            left[i] -= step;
            if left[i] == 0 {
                run[i] += 1;
                left[i] = g.freqs().get(run[i]).copied().unwrap_or(0);
            }
        }
    }
    Ok(emitted)
}
