//! Artifact writers. Every CSV starts with a versioned comment line and a
//! column header; float columns use the shortest round-trip formatting, so
//! identical runs produce byte-identical bodies. Timestamps appear only in
//! the JSON summary.

use anyhow::{Context, Result};
use cfsim_core::math::lin_to_db;
use cfsim_core::netgen::NetworkRealization;
use cfsim_core::pilots::PilotAssignment;
use cfsim_core::simloop::CampaignMetrics;
use cfsim_core::solver::SolverState;
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::config::ExperimentConfig;

pub const CSV_VERSION: &str = "v1";

fn create(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("cannot create output directory {}", parent.display()))?;
    }
    let file =
        fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(std::io::BufWriter::new(file))
}

/// Per-slot per-user rates, schedule flags and fairness weights.
pub fn write_slots_csv(path: &Path, metrics: &CampaignMetrics) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# cfsim-csv {CSV_VERSION} slots")?;
    writeln!(out, "realization,slot,user,rate,scheduled,weight")?;
    for real in &metrics.realizations {
        for slot in &real.slots {
            for u in 0..slot.rates.len() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    real.realization,
                    slot.t,
                    u,
                    slot.rates[u],
                    slot.scheduled_users[u] as u8,
                    slot.weights[u]
                )?;
            }
        }
    }
    Ok(())
}

/// Per-iteration objective and per-RRH power and multipliers of one solve.
pub fn write_trace_csv(path: &Path, state: &SolverState) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# cfsim-csv {CSV_VERSION} trace")?;
    writeln!(out, "iter,f4,rrh,power_w,mu,lambda")?;
    for (iter, (f4, diag)) in state
        .objective_trace
        .iter()
        .zip(state.rrh_trace.iter())
        .enumerate()
    {
        for (r, d) in diag.iter().enumerate() {
            writeln!(out, "{iter},{f4},{r},{},{},{}", d.power_w, d.mu, d.lambda)?;
        }
    }
    Ok(())
}

/// Per-slot solver objective traces of a campaign, one row per recorded
/// iteration. Present only when trace recording is enabled.
pub fn write_objective_traces_csv(path: &Path, metrics: &CampaignMetrics) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# cfsim-csv {CSV_VERSION} objective-traces")?;
    writeln!(out, "realization,slot,iter,f4")?;
    for real in &metrics.realizations {
        for (slot, trace) in real.objective_traces.iter().enumerate() {
            for (iter, f4) in trace.iter().enumerate() {
                writeln!(out, "{},{},{},{}", real.realization, slot, iter, f4)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
pub struct SweepRow {
    pub label: String,
    pub tau_p: Option<usize>,
    pub pilot_reuse: Option<f64>,
    pub median_user_se: f64,
    pub mean_sum_se: f64,
}

pub fn write_sweep_csv(path: &Path, kind: &str, rows: &[SweepRow]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# cfsim-csv {CSV_VERSION} sweep-{kind}")?;
    if kind == "taup" {
        writeln!(out, "tau_p,xi_p,median_user_se,mean_sum_se")?;
        for row in rows {
            writeln!(
                out,
                "{},{},{},{}",
                row.tau_p.unwrap_or(0),
                row.pilot_reuse.unwrap_or(f64::NAN),
                row.median_user_se,
                row.mean_sum_se
            )?;
        }
    } else {
        writeln!(out, "scheme,median_user_se,mean_sum_se")?;
        for row in rows {
            writeln!(out, "{},{},{}", row.label, row.median_user_se, row.mean_sum_se)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    timestamp_unix_s: u64,
    config: &'a ExperimentConfig,
    metrics: SummaryMetrics,
}

#[derive(Serialize)]
struct SummaryMetrics {
    pilot_reuse: f64,
    median_longterm_user_se: f64,
    mean_sum_se_last_window: f64,
    realizations: Vec<RealizationSummary>,
}

#[derive(Serialize)]
struct RealizationSummary {
    realization: usize,
    num_rrhs: usize,
    num_users: usize,
    mean_sum_se_last_window: f64,
}

pub fn write_summary_json(
    path: &Path,
    cfg: &ExperimentConfig,
    metrics: &CampaignMetrics,
) -> Result<()> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let window = cfg.window;
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        timestamp_unix_s: timestamp,
        config: cfg,
        metrics: SummaryMetrics {
            pilot_reuse: metrics.pilot_reuse,
            median_longterm_user_se: metrics.median_longterm_user_se,
            mean_sum_se_last_window: metrics.mean_sum_se_last_window,
            realizations: metrics
                .realizations
                .iter()
                .map(|r| RealizationSummary {
                    realization: r.realization,
                    num_rrhs: r.num_rrhs,
                    num_users: r.num_users,
                    mean_sum_se_last_window: r.sum_se_per_slot
                        [r.sum_se_per_slot.len() - window..]
                        .iter()
                        .sum::<f64>()
                        / window as f64,
                })
                .collect(),
        },
    };
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct NetworkDump {
    rrh_positions_m: Vec<[f64; 2]>,
    user_positions_m: Vec<[f64; 2]>,
    /// Large-scale gains in dB, indexed `[rrh][user]`.
    gains_db: Vec<Vec<f64>>,
    clusters: Vec<Vec<usize>>,
}

/// Geometry and large-scale state of one realization (positions in m,
/// gains in dB), for inspection.
pub fn write_network_json(path: &Path, net: &NetworkRealization) -> Result<()> {
    let gains_db = (0..net.num_rrhs())
        .map(|r| {
            (0..net.num_users())
                .map(|u| lin_to_db(net.large_scale_gain[(r, u)]))
                .collect()
        })
        .collect();
    let dump = NetworkDump {
        rrh_positions_m: net.rrh_positions.clone(),
        user_positions_m: net.user_positions.clone(),
        gains_db,
        clusters: net.clusters.clone(),
    };
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &dump)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct PilotDump {
    tau_p: usize,
    /// Pilot index per user.
    pilot_index: Vec<usize>,
}

pub fn write_pilots_json(path: &Path, pilots: &PilotAssignment) -> Result<()> {
    let dump = PilotDump {
        tau_p: pilots.tau_p,
        pilot_index: pilots.pilot_index.clone(),
    };
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, &dump)?;
    writeln!(out)?;
    Ok(())
}
