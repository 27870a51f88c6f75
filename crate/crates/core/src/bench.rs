//! Timing and detection benchmark over the canonical two-cluster cases.
//!
//! For every dimension, case and measure: median wall time of single measure
//! calls (three warm-up calls per draw are discarded), the median value over
//! the seeded draws, and the merge verdict against the expected one.

use serde::{Deserialize, Serialize};

use crate::cluster::GaussianCluster;
use crate::error::{Error, Result};
use crate::measures::{
    calibrate_threshold, measure, median, merge_verdict, MeasureKind, Thresholds, WARMUP_RUNS,
};
use crate::scenarios::{generate_with, ScenarioConfig, ScenarioKind, ScenarioSpec};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    /// Timed calls per draw (at least 10).
    pub repeats: usize,
    /// Scenario draws per (dimension, case).
    pub seeds: usize,
    /// Seed of the first draw; draw `s` uses `base_seed + s`.
    pub base_seed: u64,
    /// Fixed thresholds. Measures without one are calibrated per dimension
    /// on the overlap and separate draws.
    pub thresholds: Thresholds,
    pub scenarios: ScenarioConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 100],
            repeats: 25,
            seeds: 5,
            base_seed: 0,
            thresholds: Thresholds::default(),
            scenarios: ScenarioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dim: usize,
    pub scenario: ScenarioKind,
    pub measure: MeasureKind,
    /// Median value over draws (non-finite if the measure failed or overflowed).
    pub value: f64,
    pub median_us: f64,
    /// `median_us` over the fastest measure's `median_us` for this dimension and case.
    pub speedup_vs_best: f64,
    /// Majority merge verdict over draws.
    pub detected: bool,
    pub expected: bool,
    /// Fraction of draws with a merge verdict.
    pub detection_rate: f64,
    pub threshold: f64,
}

impl BenchRow {
    pub fn correct(&self) -> bool {
        self.detected == self.expected
    }
}

struct Cell {
    values: Vec<f64>,
    times: Vec<f64>,
}

fn time_measure(kind: MeasureKind, p: &GaussianCluster, q: &GaussianCluster, repeats: usize, cell: &mut Cell) {
    let value = measure(kind, p, q).unwrap_or(f64::NAN);
    for _ in 1..WARMUP_RUNS {
        let _ = std::hint::black_box(measure(kind, p, q));
    }
    for _ in 0..repeats {
        let start = std::time::Instant::now();
        let r = measure(kind, std::hint::black_box(p), std::hint::black_box(q));
        let elapsed = start.elapsed();
        let _ = std::hint::black_box(r);
        cell.times.push(elapsed.as_secs_f64() * 1e6);
    }
    cell.values.push(value);
}

pub fn run_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.repeats < 10 {
        return Err(Error::InvalidScenario(format!(
            "repeats must be at least 10, got {}",
            config.repeats
        )));
    }
    if config.seeds == 0 {
        return Err(Error::InvalidScenario("seeds must be at least 1".into()));
    }
    let mut rows = Vec::new();
    for &dim in &config.dims {
        // cells[scenario][measure]
        let mut cells: Vec<Vec<Cell>> = Vec::new();
        for scenario in ScenarioKind::PAIRS {
            let mut per_measure: Vec<Cell> = MeasureKind::ALL
                .iter()
                .map(|_| Cell {
                    values: Vec::with_capacity(config.seeds),
                    times: Vec::with_capacity(config.seeds * config.repeats),
                })
                .collect();
            for s in 0..config.seeds {
                let spec = ScenarioSpec::new(scenario, dim, config.base_seed.wrapping_add(s as u64));
                let pair = generate_with(&spec, &config.scenarios)?;
                for (k, &kind) in MeasureKind::ALL.iter().enumerate() {
                    time_measure(kind, &pair[0], &pair[1], config.repeats, &mut per_measure[k]);
                }
            }
            cells.push(per_measure);
        }

        let thresholds: Vec<f64> = MeasureKind::ALL
            .iter()
            .enumerate()
            .map(|(k, &kind)| {
                config.thresholds.get(kind).unwrap_or_else(|| {
                    calibrate_threshold(&cells[0][k].values, &cells[1][k].values).unwrap_or(f64::NAN)
                })
            })
            .collect();

        for (si, scenario) in ScenarioKind::PAIRS.into_iter().enumerate() {
            let expected = scenario.should_merge().unwrap_or(false);
            let mut block: Vec<BenchRow> = MeasureKind::ALL
                .iter()
                .enumerate()
                .map(|(k, &kind)| {
                    let cell = &mut cells[si][k];
                    let merges = cell
                        .values
                        .iter()
                        .filter(|&&v| merge_verdict(v, thresholds[k]))
                        .count();
                    let rate = merges as f64 / cell.values.len() as f64;
                    BenchRow {
                        dim,
                        scenario,
                        measure: kind,
                        value: median(&mut cell.values.clone()),
                        median_us: median(&mut cell.times),
                        speedup_vs_best: f64::NAN,
                        detected: rate > 0.5,
                        expected,
                        detection_rate: rate,
                        threshold: thresholds[k],
                    }
                })
                .collect();
            let best = block.iter().map(|r| r.median_us).fold(f64::INFINITY, f64::min);
            for r in &mut block {
                r.speedup_vs_best = r.median_us / best;
            }
            rows.extend(block);
        }
    }
    Ok(rows)
}

const CSV_HEADER: &str =
    "dim,scenario,measure,value,median_us,speedup_vs_best,detected,expected,detection_rate,threshold";

/// One line per row, `.` as decimal separator.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{:.2},{},{},{},{}\n",
            r.dim,
            r.scenario,
            r.measure,
            r.value,
            r.median_us,
            r.speedup_vs_best,
            r.detected,
            r.expected,
            r.detection_rate,
            r.threshold
        ));
    }
    out
}

/// Wide table: one line per (dimension, case), one value/time column pair per
/// measure. The fastest measure's time is shown without a multiplier; a `*`
/// marks a correct verdict.
pub fn to_table(rows: &[BenchRow]) -> String {
    let mut out = String::from("d    case        ");
    for k in MeasureKind::ALL {
        out.push_str(&format!("| {:<24}", k.name()));
    }
    out.push('\n');
    for chunk in rows.chunks(MeasureKind::ALL.len()) {
        let head = &chunk[0];
        out.push_str(&format!("{:<4} {:<11} ", head.dim, head.scenario));
        for r in chunk {
            let mark = if r.correct() { '*' } else { ' ' };
            let time = if r.speedup_vs_best == 1.0 {
                format!("{:.1}us", r.median_us)
            } else {
                format!("{:.1}us({:.1}x)", r.median_us, r.speedup_vs_best)
            };
            out.push_str(&format!("| {:>8.2}{} {:<14}", r.value, mark, time));
        }
        out.push('\n');
    }
    out
}
