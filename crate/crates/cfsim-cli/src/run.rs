//! Subcommand drivers: campaigns (parallel over realizations), single
//! solver traces and the two sweeps.

use anyhow::{anyhow, Result};
use cfsim_core::baselines::SchemeKind;
use cfsim_core::simloop::{
    aggregate, realization_setup, run_realization, slot_channels, CampaignMetrics, SimConfig,
};
use cfsim_core::solver::solve;
use rayon::prelude::*;
use std::path::Path;

use crate::config::{parse_scheme, scheme_name, ExperimentConfig};
use crate::output;

/// Run the realizations of a campaign on the global worker pool and reduce
/// them in index order, which reproduces the sequential result exactly.
pub fn run_campaign_parallel(cfg: &SimConfig) -> Result<CampaignMetrics> {
    cfg.validate().map_err(|e| anyhow!("{e}"))?;
    let results: Result<Vec<_>, _> = (0..cfg.num_realizations)
        .into_par_iter()
        .map(|idx| run_realization(cfg, idx))
        .collect();
    Ok(aggregate(cfg, results.map_err(|e| anyhow!("{e}"))?))
}

pub fn campaign(cfg: &ExperimentConfig, out_dir: &Path, dump_network: bool) -> Result<String> {
    let sim = cfg.to_sim_config()?;
    let metrics = run_campaign_parallel(&sim)?;
    output::write_slots_csv(&out_dir.join("slots.csv"), &metrics)?;
    output::write_summary_json(&out_dir.join("summary.json"), cfg, &metrics)?;
    if cfg.record_trace {
        output::write_objective_traces_csv(&out_dir.join("objective_traces.csv"), &metrics)?;
    }
    if dump_network {
        let (net, _, pilots) = realization_setup(&sim, 0).map_err(|e| anyhow!("{e}"))?;
        output::write_network_json(&out_dir.join("network.json"), &net)?;
        if let Some(pilots) = &pilots {
            output::write_pilots_json(&out_dir.join("pilots.json"), pilots)?;
        }
    }
    Ok(format!(
        "campaign {} {}: median user SE {:.4} bits/s/Hz, mean sum SE {:.2} bits/s/Hz, reuse {:.4}",
        cfg.scheme, cfg.mode, metrics.median_longterm_user_se, metrics.mean_sum_se_last_window,
        metrics.pilot_reuse
    ))
}

/// One solver instance on realization 0, slot 0, with uniform weights and
/// trace recording on.
pub fn trace(cfg: &ExperimentConfig, out_dir: &Path) -> Result<String> {
    let mut sim = cfg.to_sim_config()?;
    sim.solver.record_trace = true;
    sim.validate().map_err(|e| anyhow!("{e}"))?;
    let (net, links, pilots) = realization_setup(&sim, 0).map_err(|e| anyhow!("{e}"))?;
    let channels = slot_channels(&sim, &net, pilots.as_ref(), 0, 0);
    let weights = vec![1.0; net.num_users()];
    let state = solve(&channels, &links, &weights, &sim.solver).map_err(|e| anyhow!("{e}"))?;
    output::write_trace_csv(&out_dir.join("trace.csv"), &state)?;
    Ok(format!(
        "trace {}: {} iterations, converged = {}, objective {:.4}",
        cfg.mode,
        state.iterations,
        state.converged,
        state.objective_trace.last().copied().unwrap_or(f64::NAN)
    ))
}

/// Sweep the pilot length over its standard values in estimated-CSI mode.
pub fn sweep_taup(cfg: &ExperimentConfig, out_dir: &Path) -> Result<String> {
    let mut rows = Vec::new();
    let mut digest = String::from("sweep tau_p (PEAR):");
    for tau_p in [16usize, 32, 64] {
        let mut run_cfg = cfg.clone();
        run_cfg.tau_p = tau_p;
        run_cfg.mode = "PEAR".to_string();
        let sim = run_cfg.to_sim_config()?;
        let metrics = run_campaign_parallel(&sim)?;
        digest.push_str(&format!(
            " [tau_p={tau_p}: xi_p={:.2}, sum SE {:.2}]",
            metrics.pilot_reuse, metrics.mean_sum_se_last_window
        ));
        rows.push(output::SweepRow {
            label: format!("taup-{tau_p}"),
            tau_p: Some(tau_p),
            pilot_reuse: Some(metrics.pilot_reuse),
            median_user_se: metrics.median_longterm_user_se,
            mean_sum_se: metrics.mean_sum_se_last_window,
        });
    }
    output::write_sweep_csv(&out_dir.join("sweep_taup.csv"), "taup", &rows)?;
    Ok(digest)
}

/// Run every scheme on paired seeds and tabulate the long-term metrics.
pub fn sweep_scheme(cfg: &ExperimentConfig, out_dir: &Path) -> Result<String> {
    let schemes = [
        SchemeKind::Proposed,
        SchemeKind::ZfOptSched,
        SchemeKind::ZfRoundRobin,
        SchemeKind::ConjRoundRobin,
    ];
    let mut rows = Vec::new();
    let mut digest = String::from("sweep scheme:");
    for scheme in schemes {
        let mut run_cfg = cfg.clone();
        run_cfg.scheme = scheme_name(scheme).to_string();
        parse_scheme(&run_cfg.scheme)?;
        let sim = run_cfg.to_sim_config()?;
        let metrics = run_campaign_parallel(&sim)?;
        digest.push_str(&format!(
            " [{}: median {:.4}, sum SE {:.2}]",
            scheme_name(scheme),
            metrics.median_longterm_user_se,
            metrics.mean_sum_se_last_window
        ));
        rows.push(output::SweepRow {
            label: scheme_name(scheme).to_string(),
            tau_p: None,
            pilot_reuse: None,
            median_user_se: metrics.median_longterm_user_se,
            mean_sum_se: metrics.mean_sum_se_last_window,
        });
    }
    output::write_sweep_csv(&out_dir.join("sweep_scheme.csv"), "scheme", &rows)?;
    Ok(digest)
}
