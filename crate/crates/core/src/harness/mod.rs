//! Experiment sweeps over node counts, classes, failure fractions and
//! seeds, with CSV and plot-series output.

mod output;
mod scenario;

pub use self::output::{
    emit_comparison_csv, emit_csv, emit_lifetime_series, emit_series, read_csv, write_csv, write_rows, Figure, OutputError,
    CSV_HEADER,
};
pub use self::scenario::{apply_seed_override, derive_side, parse_scenario, parse_seeds, ScenarioConfig, ScenarioError, SEED_ENV};

use rayon::prelude::*;

use crate::netsim::{simulate_query_round, SimError};
use crate::pegasis::{compare_case4, lifetime_scenario, ComparisonRow};
use crate::protocol::QosClass;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub qos: QosClass,
    pub n: usize,
    pub failure_fraction: f64,
    /// `None` on a mean row.
    pub seed: Option<u64>,
    /// Joules per packet received at the sink.
    pub avg_dissipated_energy: f64,
    pub avg_latency: f64,
    pub delivery_probability: f64,
}

/// A cell that produced no row because no connected placement was found.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedCell {
    pub qos: QosClass,
    pub n: usize,
    pub failure_fraction: f64,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    /// Ordered by (qos, n, fraction, seed).
    pub rows: Vec<MetricsRow>,
    /// One per (qos, n, fraction) that has at least one row.
    pub means: Vec<MetricsRow>,
    pub skipped: Vec<SkippedCell>,
}

impl MetricsTable {
    pub fn mean(&self, qos: QosClass, n: usize, failure_fraction: f64) -> Option<&MetricsRow> {
        self.means.iter().find(|m| m.qos == qos && m.n == n && m.failure_fraction == failure_fraction)
    }
}

/// Mean of the finite values; NaN when there are none. A run whose sink
/// received nothing has no energy-per-packet or latency value.
fn finite_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn means_of(rows: &[MetricsRow]) -> Vec<MetricsRow> {
    rows.chunk_by(|a, b| (a.qos, a.n, a.failure_fraction) == (b.qos, b.n, b.failure_fraction))
        .map(|group| MetricsRow {
            qos: group[0].qos,
            n: group[0].n,
            failure_fraction: group[0].failure_fraction,
            seed: None,
            avg_dissipated_energy: finite_mean(group.iter().map(|r| r.avg_dissipated_energy)),
            avg_latency: finite_mean(group.iter().map(|r| r.avg_latency)),
            delivery_probability: group.iter().map(|r| r.delivery_probability).sum::<f64>() / group.len() as f64,
        })
        .collect()
}

/// Runs one query round per (qos, n, fraction, seed). Cells run in
/// parallel; the table order does not depend on scheduling.
pub fn run_sweep(config: &ScenarioConfig) -> MetricsTable {
    let mut cells = Vec::new();
    for &qos in &config.qos {
        for &n in &config.sizes {
            for &f in &config.failure_fractions {
                for &seed in &config.seeds {
                    cells.push((qos, n, f, seed));
                }
            }
        }
    }
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(qos, n, f, seed)| (qos, n, f, seed, simulate_query_round(&config.cell(n, f, seed), qos)))
        .collect();

    let mut table = MetricsTable::default();
    for (qos, n, failure_fraction, seed, result) in results {
        match result {
            Ok(m) => table.rows.push(MetricsRow {
                qos,
                n,
                failure_fraction,
                seed: Some(seed),
                avg_dissipated_energy: m.avg_dissipated_energy(),
                avg_latency: m.avg_latency(),
                delivery_probability: m.delivery_probability(),
            }),
            Err(e @ SimError::TopologyUnconnectable { .. }) => {
                log::warn!("skipping {qos} n={n} f={failure_fraction} seed={seed}: {e}");
                table.skipped.push(SkippedCell { qos, n, failure_fraction, seed, reason: e.to_string() });
            }
            Err(e) => {
                table.skipped.push(SkippedCell { qos, n, failure_fraction, seed, reason: e.to_string() });
            }
        }
    }
    table.means = means_of(&table.rows);
    table
}

/// Lifetime comparison rows for one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedComparison {
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
}

/// Runs the lifetime comparison for every seed of the scenario over its
/// lifetime failure fractions.
pub fn run_comparison(config: &ScenarioConfig) -> Result<Vec<SeedComparison>, SimError> {
    config
        .seeds
        .par_iter()
        .map(|&seed| {
            let cfg = crate::netsim::SimConfig { seed, ..scenario_lifetime_base(config, seed) };
            compare_case4(&cfg, &config.lifetime_failures).map(|rows| SeedComparison { seed, rows })
        })
        .collect()
}

fn scenario_lifetime_base(config: &ScenarioConfig, seed: u64) -> crate::netsim::SimConfig {
    let fixed = lifetime_scenario(seed);
    crate::netsim::SimConfig {
        e_init: config.base.e_init,
        e_elec: config.base.e_elec,
        eps_amp: config.base.eps_amp,
        packet_bits: config.base.packet_bits,
        ack_bits: config.base.ack_bits,
        service_time: config.base.service_time,
        ack_timeout: config.base.ack_timeout,
        delay_bound: config.base.delay_bound,
        copies_per_query: config.base.copies_per_query,
        sources: config.base.sources,
        ..fixed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ScenarioConfig {
        ScenarioConfig { sizes: vec![50], qos: vec![QosClass::Normal], seeds: (1..=10).collect(), ..Default::default() }
    }

    #[test]
    fn ten_rows_one_mean() {
        let t = run_sweep(&small());
        assert_eq!(t.rows.len(), 10);
        assert_eq!(t.means.len(), 1);
        assert!(t.skipped.is_empty());
    }

    #[test]
    fn means_recomputed_from_rows() {
        let cfg = ScenarioConfig { qos: vec![QosClass::Normal, QosClass::Delay], sizes: vec![50, 75], seeds: vec![1, 2, 3], ..Default::default() };
        let t = run_sweep(&cfg);
        assert_eq!(t.rows.len(), 12);
        for m in &t.means {
            let rows: Vec<_> = t.rows.iter().filter(|r| (r.qos, r.n) == (m.qos, m.n)).collect();
            assert_eq!(rows.len(), 3);
            let p = rows.iter().map(|r| r.delivery_probability).sum::<f64>() / 3.0;
            assert!((p - m.delivery_probability).abs() < 1e-12);
            let e = rows.iter().map(|r| r.avg_dissipated_energy).sum::<f64>() / 3.0;
            assert!((e - m.avg_dissipated_energy).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_deterministic() {
        let cfg = ScenarioConfig { seeds: vec![5, 6], sizes: vec![50], ..Default::default() };
        assert_eq!(run_sweep(&cfg), run_sweep(&cfg));
    }

    #[test]
    fn unconnectable_cells_skipped() {
        let mut cfg = small();
        cfg.base.short_range = 1.0;
        cfg.base.long_range = 2.0;
        cfg.seeds = vec![1];
        let t = run_sweep(&cfg);
        assert!(t.rows.is_empty());
        assert_eq!(t.skipped.len(), 1);
    }
}
