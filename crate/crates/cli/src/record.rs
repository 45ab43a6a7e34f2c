//! One output row per (scenario, scheduler, seed) and its CSV / JSON-lines
//! encodings.

use std::io::{BufRead, Write};

use bandsplit_core::sim::MetricsReport;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Columns before the per-band fractions, in output order.
pub const FIXED_COLUMNS: [&str; 10] = [
    "scenario",
    "scheduler",
    "seed",
    "delivered",
    "goodput_pps",
    "mean_latency_s",
    "p95_latency_s",
    "mean_reseq_delay_s",
    "max_reseq_delay_s",
    "out_of_order_frac",
];

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("malformed records: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub scheduler: String,
    pub seed: u64,
    pub delivered: u64,
    pub goodput_pps: f64,
    pub mean_latency_s: f64,
    pub p95_latency_s: f64,
    pub mean_reseq_delay_s: f64,
    pub max_reseq_delay_s: f64,
    pub out_of_order_frac: f64,
    pub band_frac: Vec<f64>,
}

impl RunRecord {
    pub fn new(scenario: &str, scheduler: &str, seed: u64, r: &MetricsReport) -> Self {
        Self {
            scenario: scenario.to_string(),
            scheduler: scheduler.to_string(),
            seed,
            delivered: r.delivered,
            goodput_pps: r.goodput_pps,
            mean_latency_s: r.mean_latency_s,
            p95_latency_s: r.p95_latency_s,
            mean_reseq_delay_s: r.mean_reseq_delay_s,
            max_reseq_delay_s: r.max_reseq_delay_s,
            out_of_order_frac: r.out_of_order_frac,
            band_frac: r.per_band_frac.clone(),
        }
    }

    /// Named numeric metrics, in column order.
    pub fn metrics(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("delivered", self.delivered as f64),
            ("goodput_pps", self.goodput_pps),
            ("mean_latency_s", self.mean_latency_s),
            ("p95_latency_s", self.p95_latency_s),
            ("mean_reseq_delay_s", self.mean_reseq_delay_s),
            ("max_reseq_delay_s", self.max_reseq_delay_s),
            ("out_of_order_frac", self.out_of_order_frac),
        ]
    }

    fn csv_row(&self) -> Vec<String> {
        let mut row = vec![
            self.scenario.clone(),
            self.scheduler.clone(),
            self.seed.to_string(),
            self.delivered.to_string(),
        ];
        row.extend(self.metrics().into_iter().skip(1).map(|(_, v)| v.to_string()));
        row.extend(self.band_frac.iter().map(f64::to_string));
        row
    }
}

pub fn write_records<W: Write>(records: &[RunRecord], format: Format, out: W) -> Result<(), RecordError> {
    match format {
        Format::Csv => write_csv(records, out),
        Format::Json => write_jsonl(records, out),
    }
}

fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), RecordError> {
    let bands = records.iter().map(|r| r.band_frac.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|c| c.to_string()).collect();
    header.extend((0..bands).map(|j| format!("band_frac_{j}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = r.csv_row();
        row.resize(header.len(), String::new());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_jsonl<W: Write>(records: &[RunRecord], mut out: W) -> Result<(), RecordError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|source| RecordError::Json { line: 0, source })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>, RecordError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < FIXED_COLUMNS.len() || names[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(RecordError::Malformed(format!("unexpected header {names:?}")));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |what: &str| RecordError::Malformed(format!("row {}: bad {what}", i + 1));
        let num = |k: usize| row[k].parse::<f64>().map_err(|_| bad(FIXED_COLUMNS[k]));
        out.push(RunRecord {
            scenario: row[0].to_string(),
            scheduler: row[1].to_string(),
            seed: row[2].parse().map_err(|_| bad("seed"))?,
            delivered: row[3].parse().map_err(|_| bad("delivered"))?,
            goodput_pps: num(4)?,
            mean_latency_s: num(5)?,
            p95_latency_s: num(6)?,
            mean_reseq_delay_s: num(7)?,
            max_reseq_delay_s: num(8)?,
            out_of_order_frac: num(9)?,
            band_frac: row
                .iter()
                .skip(FIXED_COLUMNS.len())
                .filter(|c| !c.is_empty())
                .map(|c| c.parse::<f64>().map_err(|_| bad("band_frac")))
                .collect::<Result<_, _>>()?,
        });
    }
    Ok(out)
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<RunRecord>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| RecordError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

/// Reads either encoding, deciding by the first non-blank character.
pub fn read_records(text: &str) -> Result<Vec<RunRecord>, RecordError> {
    if text.trim_start().starts_with('{') {
        read_jsonl(text.as_bytes())
    } else {
        read_csv(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<RunRecord> {
        vec![
            RunRecord {
                scenario: "s".into(),
                scheduler: "leaky_bucket".into(),
                seed: 3,
                delivered: 100,
                goodput_pps: 1234.5678901234,
                mean_latency_s: 0.1 + 0.2,
                p95_latency_s: 1e-7,
                mean_reseq_delay_s: 0.0,
                max_reseq_delay_s: 2.5,
                out_of_order_frac: 1.0 / 3.0,
                band_frac: vec![0.7, 0.30000000000000004],
            },
            RunRecord {
                scenario: "s, quoted".into(),
                scheduler: "single_band:1".into(),
                seed: u64::MAX,
                delivered: 0,
                goodput_pps: 0.0,
                mean_latency_s: 0.0,
                p95_latency_s: 0.0,
                mean_reseq_delay_s: 0.0,
                max_reseq_delay_s: 0.0,
                out_of_order_frac: 0.0,
                band_frac: vec![0.0, 1.0],
            },
        ]
    }

    #[test]
    fn csv_and_json_carry_identical_values() {
        let records = sample();
        let mut csv_buf = Vec::new();
        write_records(&records, Format::Csv, &mut csv_buf).unwrap();
        let mut json_buf = Vec::new();
        write_records(&records, Format::Json, &mut json_buf).unwrap();
        let from_csv = read_records(std::str::from_utf8(&csv_buf).unwrap()).unwrap();
        let from_json = read_records(std::str::from_utf8(&json_buf).unwrap()).unwrap();
        assert_eq!(from_csv, records);
        assert_eq!(from_json, records);
    }

    #[test]
    fn csv_header_order() {
        let mut buf = Vec::new();
        write_records(&sample(), Format::Csv, &mut buf).unwrap();
        let first = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert_eq!(
            first,
            "scenario,scheduler,seed,delivered,goodput_pps,mean_latency_s,p95_latency_s,\
             mean_reseq_delay_s,max_reseq_delay_s,out_of_order_frac,band_frac_0,band_frac_1"
        );
    }
}
