use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::protocol::QosClass;

use super::{MetricsRow, MetricsTable, SeedComparison};

pub const CSV_HEADER: [&str; 7] = [
    "qos",
    "n",
    "failure_fraction",
    "seed",
    "avg_dissipated_energy_j",
    "avg_latency_s",
    "delivery_probability",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: malformed row {row}: {msg}")]
    Malformed { path: PathBuf, row: usize, msg: String },
    #[error("nothing to write")]
    Empty,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> OutputError + '_ {
    move |source| OutputError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> OutputError + '_ {
    move |source| OutputError::Csv { path: path.to_path_buf(), source }
}

fn num(v: f64) -> String {
    format!("{v:.9}")
}

fn record(row: &MetricsRow) -> [String; 7] {
    [
        row.qos.name().to_string(),
        row.n.to_string(),
        num(row.failure_fraction),
        row.seed.map_or_else(|| "mean".to_string(), |s| s.to_string()),
        num(row.avg_dissipated_energy),
        num(row.avg_latency),
        num(row.delivery_probability),
    ]
}

/// Writes the header and `rows` in the given order.
pub fn write_rows<'a, W: Write>(rows: impl IntoIterator<Item = &'a MetricsRow>, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the table as CSV to any writer: each group's seed rows followed
/// by its mean row.
pub fn write_csv<W: Write>(table: &MetricsTable, out: W) -> csv::Result<()> {
    let ordered = table.means.iter().flat_map(|mean| {
        let key = (mean.qos, mean.n, mean.failure_fraction);
        table.rows.iter().filter(move |r| (r.qos, r.n, r.failure_fraction) == key).chain(std::iter::once(mean))
    });
    write_rows(ordered, out)
}

pub fn emit_csv(table: &MetricsTable, path: &Path) -> Result<(), OutputError> {
    if table.rows.is_empty() {
        return Err(OutputError::Empty);
    }
    let file = File::create(path).map_err(io_err(path))?;
    write_csv(table, BufWriter::new(file)).map_err(csv_err(path))
}

/// Reads a file written by [`emit_csv`] back into rows (mean rows have
/// `seed == None`).
pub fn read_csv(path: &Path) -> Result<Vec<MetricsRow>, OutputError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let bad = |msg: &str| OutputError::Malformed { path: path.to_path_buf(), row: i + 1, msg: msg.to_string() };
        let f = |j: usize| rec.get(j).and_then(|s| s.parse::<f64>().ok()).ok_or_else(|| bad(CSV_HEADER[j]));
        rows.push(MetricsRow {
            qos: rec.get(0).and_then(QosClass::parse).ok_or_else(|| bad("qos"))?,
            n: rec.get(1).and_then(|s| s.parse().ok()).ok_or_else(|| bad("n"))?,
            failure_fraction: f(2)?,
            seed: match rec.get(3) {
                Some("mean") => None,
                Some(s) => Some(s.parse().map_err(|_| bad("seed"))?),
                None => return Err(bad("seed")),
            },
            avg_dissipated_energy: f(4)?,
            avg_latency: f(5)?,
            delivery_probability: f(6)?,
        });
    }
    Ok(rows)
}

/// Plot series that can be cut from a sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Energy per received packet against network size, no failures.
    Fig4,
    /// Latency against network size, no failures.
    Fig5,
    /// Delivery probability against size at 10% failures.
    Fig6,
    /// Delivery probability against size at 20% failures.
    Fig7,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
        }
    }

    pub fn failure_fraction(self) -> f64 {
        match self {
            Figure::Fig4 | Figure::Fig5 => 0.0,
            Figure::Fig6 => 0.1,
            Figure::Fig7 => 0.2,
        }
    }

    fn max_size(self) -> usize {
        match self {
            Figure::Fig4 | Figure::Fig5 => usize::MAX,
            Figure::Fig6 | Figure::Fig7 => 125,
        }
    }

    fn value(self, row: &MetricsRow) -> f64 {
        match self {
            Figure::Fig4 => row.avg_dissipated_energy,
            Figure::Fig5 => row.avg_latency,
            Figure::Fig6 | Figure::Fig7 => row.delivery_probability,
        }
    }
}

/// Tab-separated series: `n` then one column per class present in the
/// table, from the mean rows at the figure's failure fraction. Returns
/// `Ok(false)` without writing when the table has no such rows.
pub fn emit_series(table: &MetricsTable, figure: Figure, path: &Path) -> Result<bool, OutputError> {
    let f = figure.failure_fraction();
    let selected: Vec<&MetricsRow> =
        table.means.iter().filter(|m| (m.failure_fraction - f).abs() < 1e-12 && m.n <= figure.max_size()).collect();
    if selected.is_empty() {
        return Ok(false);
    }
    let mut classes: Vec<QosClass> = selected.iter().map(|m| m.qos).collect();
    classes.sort();
    classes.dedup();
    let mut sizes: Vec<usize> = selected.iter().map(|m| m.n).collect();
    sizes.sort();
    sizes.dedup();

    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        write!(w, "n")?;
        for q in &classes {
            write!(w, "\t{}", q.name())?;
        }
        writeln!(w)?;
        for n in &sizes {
            write!(w, "{n}")?;
            for q in &classes {
                let v = selected.iter().find(|m| m.qos == *q && m.n == *n).map_or(f64::NAN, |m| figure.value(m));
                write!(w, "\t{}", num(v))?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(path))?;
    Ok(true)
}

/// One line per (seed, fraction) of a lifetime comparison.
pub fn emit_comparison_csv(results: &[SeedComparison], path: &Path) -> Result<(), OutputError> {
    if results.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let header = ["failure_fraction", "seed", "lifetime_case4", "lifetime_pegasis", "packets_case4", "packets_pegasis"];
    w.write_record(header).map_err(csv_err(path))?;
    for s in results {
        for r in &s.rows {
            let rec = [
                num(r.failure_fraction),
                s.seed.to_string(),
                r.case4.rounds.to_string(),
                r.pegasis.rounds.to_string(),
                r.case4.packets_at_sink.to_string(),
                r.pegasis.packets_at_sink.to_string(),
            ];
            w.write_record(rec).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

/// Lifetime against failure percentage, averaged over seeds.
pub fn emit_lifetime_series(results: &[SeedComparison], path: &Path) -> Result<(), OutputError> {
    let Some(first) = results.first() else {
        return Err(OutputError::Empty);
    };
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let k = results.len() as f64;
    let write = |w: &mut BufWriter<File>| -> io::Result<()> {
        writeln!(w, "failure_pct\tcase4\tpegasis")?;
        for (i, row) in first.rows.iter().enumerate() {
            let c4 = results.iter().map(|s| s.rows[i].case4.rounds as f64).sum::<f64>() / k;
            let pg = results.iter().map(|s| s.rows[i].pegasis.rounds as f64).sum::<f64>() / k;
            writeln!(w, "{}\t{}\t{}", num(row.failure_fraction * 100.0), num(c4), num(pg))?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(path))
}
