//! Simulation runs over sweep points and replicas, with CSV output.

use std::path::{Path, PathBuf};

use macgame::simulator::{run_dynamic, SimResult};
use macgame::TrafficRatio;
use rayon::prelude::*;

use crate::scenario_file::ScenarioFile;
use crate::table::{num, opt, Table};

/// One finished run.
#[derive(Debug, Clone)]
pub struct Run {
    pub point: usize,
    pub sweep_value: Option<f64>,
    pub replica: u32,
    pub seed: u64,
    pub k: TrafficRatio,
    pub result: SimResult,
}

/// Seed of a run: `base + point`, with replicas offset in the upper half.
pub fn run_seed(base: u64, point: usize, replica: u32) -> u64 {
    base.wrapping_add(point as u64).wrapping_add((replica as u64) << 32)
}

/// Runs every sweep point and replica; results come back in point order,
/// then replica order, independent of scheduling.
pub fn run_all(file: &ScenarioFile, seed: u64, replicas: u32) -> macgame::Result<Vec<Run>> {
    let jobs: Vec<(usize, u32)> =
        (0..file.points()).flat_map(|p| (0..replicas).map(move |r| (p, r))).collect();
    jobs.into_par_iter()
        .map(|(point, replica)| {
            let scenario = file.scenario_at(point)?;
            let seed = run_seed(seed, point, replica);
            let result = run_dynamic(&scenario, &file.events, seed)?;
            Ok(Run { point, sweep_value: file.point_value(point), replica, seed, k: scenario.k(), result })
        })
        .collect()
}

pub const WINDOW_COLUMNS: &[&str] = &[
    "window_index",
    "sim_time_s",
    "node_id",
    "role",
    "tau_applied",
    "uplink_bps",
    "downlink_bps",
    "n_hat",
    "tau_ap_hat",
    "active_stations",
    "flagged",
];

pub fn windows_table(r: &SimResult) -> Table {
    let mut t = Table::new(WINDOW_COLUMNS);
    for w in &r.windows {
        t.push(vec![
            w.window_index.to_string(),
            num(w.sim_time_s),
            w.node.map_or("ap".to_string(), |id| id.to_string()),
            w.role.to_string(),
            num(w.tau_applied),
            num(w.uplink_bps),
            num(w.downlink_bps),
            opt(w.n_hat),
            opt(w.tau_ap_hat),
            w.active_stations.to_string(),
            w.flagged.to_string(),
        ]);
    }
    t
}

pub const SUMMARY_COLUMNS: &[&str] = &[
    "point",
    "sweep_value",
    "replica",
    "seed",
    "stations",
    "total_slots",
    "elapsed_s",
    "collisions",
    "idles",
    "aggregate_uplink_bps",
    "mean_uplink_bps",
    "ap_bps",
    "k_n_sd_bps",
    "total_bps",
    "dropped_acks",
];

fn summary_row(run: &Run) -> Vec<String> {
    let r = &run.result;
    let n = r.nodes.len();
    let up = r.aggregate_uplink_bps();
    // k·n·S_d with S_d the per-station downlink share.
    let k_n_sd = match run.k {
        TrafficRatio::Finite(k) => Some(k * r.ap_bps()),
        TrafficRatio::Infinite => None,
    };
    vec![
        run.point.to_string(),
        opt(run.sweep_value),
        run.replica.to_string(),
        run.seed.to_string(),
        n.to_string(),
        r.total_slots.to_string(),
        num(r.elapsed_us / 1e6),
        r.collisions.to_string(),
        r.idles.to_string(),
        num(up),
        if n == 0 { String::new() } else { num(up / n as f64) },
        num(r.ap_bps()),
        opt(k_n_sd),
        num(r.total_bps()),
        r.nodes.iter().map(|s| s.dropped_acks).sum::<u64>().to_string(),
    ]
}

pub fn summary_table(runs: &[Run]) -> Table {
    let mut t = Table::new(SUMMARY_COLUMNS);
    for run in runs {
        t.push(summary_row(run));
    }
    t
}

pub const STATION_COLUMNS: &[&str] = &[
    "point",
    "replica",
    "node_id",
    "kind",
    "successes",
    "dropped_acks",
    "transmissions",
    "uplink_bps",
    "downlink_bps",
];

pub fn stations_table(runs: &[Run]) -> Table {
    let mut t = Table::new(STATION_COLUMNS);
    for run in runs {
        for s in &run.result.nodes {
            t.push(vec![
                run.point.to_string(),
                run.replica.to_string(),
                s.id.to_string(),
                s.kind.to_string(),
                s.successes.to_string(),
                s.dropped_acks.to_string(),
                s.transmissions.to_string(),
                num(run.result.uplink_bps(s.id)),
                num(run.result.downlink_bps(s.id)),
            ]);
        }
    }
    t
}

pub fn windows_file_name(point: usize, replica: u32) -> String {
    format!("windows_p{point:03}_r{replica:02}.csv")
}

/// Writes per-run window traces (in parallel), then the merged summary and
/// station tables. Returns the files written.
pub fn write_runs(dir: &Path, runs: &[Run]) -> std::io::Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = runs
        .par_iter()
        .map(|run| {
            let path = dir.join(windows_file_name(run.point, run.replica));
            windows_table(&run.result).write_atomic(&path).map(|_| path)
        })
        .collect::<std::io::Result<_>>()?;
    let summary = dir.join("summary.csv");
    summary_table(runs).write_atomic(&summary)?;
    let stations = dir.join("stations.csv");
    stations_table(runs).write_atomic(&stations)?;
    files.push(summary);
    files.push(stations);
    Ok(files)
}
