//! Experiment configuration: TOML schema, defaults and conversion into the
//! core simulation config.
//!
//! Every field is optional in the file; omitted values fall back to the
//! full-scale defaults (7 cells, 10 RRHs of 8 antennas each, 200 users/km²,
//! 30 dBm budget, 100 slots). The `desk` preset swaps in the reduced
//! configuration used by the fast regression runs. Powers are written in
//! dBm and converted to watts once, at load time.

use anyhow::{bail, Context, Result};
use cfsim_core::baselines::SchemeKind;
use cfsim_core::channel::noise_power;
use cfsim_core::math::{db_to_lin, dbm_to_watt};
use cfsim_core::netgen::{path_loss_db, LayoutConfig};
use cfsim_core::simloop::{CsiMode, SimConfig};
use cfsim_core::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// "paper" (default) or "desk".
    pub preset: Option<String>,
    pub out_dir: Option<String>,
    #[serde(default)]
    pub layout: LayoutSection,
    #[serde(default)]
    pub radio: RadioSection,
    #[serde(default)]
    pub fairness: FairnessSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub campaign: CampaignSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSection {
    pub num_cells: Option<usize>,
    pub rrh_per_cell: Option<usize>,
    pub antennas_per_rrh: Option<usize>,
    pub cell_inner_radius_m: Option<f64>,
    pub user_density_per_km2: Option<f64>,
    pub exclusion_radius_m: Option<f64>,
    pub shadowing_sigma_db: Option<f64>,
    /// Serving threshold as the path-loss distance in km (`rho = L(d)`).
    pub cluster_threshold_km: Option<f64>,
    /// Fix the user count instead of drawing it from the density.
    pub fixed_user_count: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioSection {
    pub power_budget_dbm: Option<f64>,
    pub pilot_power_dbm: Option<f64>,
    pub noise_spectral_density_dbm_hz: Option<f64>,
    pub noise_figure_db: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub tau_d: Option<usize>,
    pub tau_p: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FairnessSection {
    pub eta: Option<f64>,
    pub rbar_floor: Option<f64>,
    pub pf_weighting: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Explicit reweighting constant; omitted means the `0.9 p / M` rule.
    pub epsilon: Option<f64>,
    pub tol_converge: Option<f64>,
    pub k_stable: Option<usize>,
    pub iter_max: Option<usize>,
    pub schedule_threshold_frac: Option<f64>,
    pub record_trace: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub mode: Option<String>,
    pub scheme: Option<String>,
    pub t_slots: Option<usize>,
    pub window: Option<usize>,
    pub realizations: Option<usize>,
    pub master_seed: Option<u64>,
}

/// Fully resolved parameters. Serialized verbatim into the run summary so
/// an output directory always records what produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub num_cells: usize,
    pub rrh_per_cell: usize,
    pub antennas_per_rrh: usize,
    pub cell_inner_radius_m: f64,
    pub user_density_per_km2: f64,
    pub exclusion_radius_m: f64,
    pub shadowing_sigma_db: f64,
    pub cluster_threshold: f64,
    pub fixed_user_count: Option<usize>,
    pub power_budget_w: f64,
    pub pilot_power_w: f64,
    pub noise_power_w: f64,
    pub tau_d: usize,
    pub tau_p: usize,
    pub mode: String,
    pub scheme: String,
    pub eta: f64,
    pub rbar_floor: f64,
    pub pf_weighting: bool,
    pub epsilon: f64,
    pub tol_converge: f64,
    pub k_stable: usize,
    pub iter_max: usize,
    pub schedule_threshold_frac: f64,
    pub record_trace: bool,
    pub t_slots: usize,
    pub window: usize,
    pub realizations: usize,
    pub master_seed: u64,
    pub out_dir: String,
}

pub fn parse_scheme(name: &str) -> Result<SchemeKind> {
    Ok(match name {
        "proposed" => SchemeKind::Proposed,
        "zf-rr" => SchemeKind::ZfRoundRobin,
        "conj-rr" => SchemeKind::ConjRoundRobin,
        "zf-opt" => SchemeKind::ZfOptSched,
        other => bail!("unknown scheme '{other}' (expected proposed | zf-rr | conj-rr | zf-opt)"),
    })
}

pub fn scheme_name(scheme: SchemeKind) -> &'static str {
    match scheme {
        SchemeKind::Proposed => "proposed",
        SchemeKind::ZfRoundRobin => "zf-rr",
        SchemeKind::ConjRoundRobin => "conj-rr",
        SchemeKind::ZfOptSched => "zf-opt",
    }
}

pub fn parse_mode(name: &str) -> Result<CsiMode> {
    Ok(match name {
        "PI" => CsiMode::Perfect,
        "PEAR" => CsiMode::Estimated,
        other => bail!("unknown mode '{other}' (expected PI | PEAR)"),
    })
}

struct Preset {
    rrh_per_cell: usize,
    antennas_per_rrh: usize,
    user_density_per_km2: f64,
    t_slots: usize,
    window: usize,
    realizations: usize,
    iter_max: usize,
}

const PAPER_PRESET: Preset = Preset {
    rrh_per_cell: 10,
    antennas_per_rrh: 8,
    user_density_per_km2: 200.0,
    t_slots: 100,
    window: 50,
    realizations: 5,
    iter_max: 200,
};

// Reduced scale for fast regression runs: fewer RRHs, antennas and users,
// shorter horizon, and a solver budget that stays close to converged.
const DESK_PRESET: Preset = Preset {
    rrh_per_cell: 3,
    antennas_per_rrh: 4,
    user_density_per_km2: 50.0,
    t_slots: 40,
    window: 20,
    realizations: 5,
    iter_max: 200,
};

impl FileConfig {
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let preset = match self.preset.as_deref() {
            None | Some("paper") => &PAPER_PRESET,
            Some("desk") => &DESK_PRESET,
            Some(other) => bail!("unknown preset '{other}' (expected paper | desk)"),
        };

        let power_budget_dbm = self.radio.power_budget_dbm.unwrap_or(30.0);
        let pilot_power_dbm = self.radio.pilot_power_dbm.unwrap_or(20.0);
        let s_z = self.radio.noise_spectral_density_dbm_hz.unwrap_or(-174.0);
        let f_z = self.radio.noise_figure_db.unwrap_or(8.0);
        let bandwidth = self.radio.bandwidth_hz.unwrap_or(180_000.0);
        if bandwidth <= 0.0 {
            bail!("radio.bandwidth_hz must be positive, got {bandwidth}");
        }
        let power_budget_w = dbm_to_watt(power_budget_dbm);
        let antennas = self
            .layout
            .antennas_per_rrh
            .unwrap_or(preset.antennas_per_rrh);
        let epsilon = self
            .solver
            .epsilon
            .unwrap_or(0.9 * power_budget_w / antennas as f64);
        if epsilon <= 0.0 {
            bail!("solver.epsilon must be positive, got {epsilon}");
        }

        let threshold_km = self.layout.cluster_threshold_km.unwrap_or(0.4);
        let cluster_threshold = db_to_lin(
            path_loss_db(threshold_km)
                .map_err(|e| anyhow::anyhow!("layout.cluster_threshold_km: {e}"))?,
        );

        let tau_d = self.radio.tau_d.unwrap_or(200);
        let tau_p = self.radio.tau_p.unwrap_or(32);
        let mode = self.campaign.mode.clone().unwrap_or_else(|| "PI".to_string());
        parse_mode(&mode)?;
        if mode == "PEAR" && tau_p >= tau_d {
            bail!("radio.tau_p ({tau_p}) must be smaller than radio.tau_d ({tau_d})");
        }
        let scheme = self
            .campaign
            .scheme
            .clone()
            .unwrap_or_else(|| "proposed".to_string());
        parse_scheme(&scheme)?;

        let t_slots = self.campaign.t_slots.unwrap_or(preset.t_slots);
        let window = self.campaign.window.unwrap_or(preset.window.min(t_slots));
        if window == 0 || window > t_slots {
            bail!("campaign.window ({window}) must be in 1..=t_slots ({t_slots})");
        }
        let eta = self.fairness.eta.unwrap_or(0.2);
        if !(0.0..=1.0).contains(&eta) {
            bail!("fairness.eta must be in [0, 1], got {eta}");
        }

        let cfg = ExperimentConfig {
            num_cells: self.layout.num_cells.unwrap_or(7),
            rrh_per_cell: self.layout.rrh_per_cell.unwrap_or(preset.rrh_per_cell),
            antennas_per_rrh: antennas,
            cell_inner_radius_m: self.layout.cell_inner_radius_m.unwrap_or(500.0),
            user_density_per_km2: self
                .layout
                .user_density_per_km2
                .unwrap_or(preset.user_density_per_km2),
            exclusion_radius_m: self.layout.exclusion_radius_m.unwrap_or(20.0),
            shadowing_sigma_db: self.layout.shadowing_sigma_db.unwrap_or(4.0),
            cluster_threshold,
            fixed_user_count: self.layout.fixed_user_count,
            power_budget_w,
            pilot_power_w: dbm_to_watt(pilot_power_dbm),
            noise_power_w: noise_power(s_z, f_z, bandwidth),
            tau_d,
            tau_p,
            mode,
            scheme,
            eta,
            rbar_floor: self.fairness.rbar_floor.unwrap_or(1e-3),
            pf_weighting: self.fairness.pf_weighting.unwrap_or(true),
            epsilon,
            tol_converge: self.solver.tol_converge.unwrap_or(1e-5),
            k_stable: self.solver.k_stable.unwrap_or(3),
            iter_max: self.solver.iter_max.unwrap_or(preset.iter_max),
            schedule_threshold_frac: self.solver.schedule_threshold_frac.unwrap_or(1e-4),
            record_trace: self.solver.record_trace.unwrap_or(false),
            t_slots,
            window,
            realizations: self.campaign.realizations.unwrap_or(preset.realizations),
            master_seed: self.campaign.master_seed.unwrap_or(1),
            out_dir: self.out_dir.clone().unwrap_or_else(|| "out".to_string()),
        };
        cfg.to_sim_config()?.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn to_sim_config(&self) -> Result<SimConfig> {
        Ok(SimConfig {
            layout: LayoutConfig {
                num_cells: self.num_cells,
                rrh_per_cell: self.rrh_per_cell,
                antennas_per_rrh: self.antennas_per_rrh,
                cell_inner_radius_m: self.cell_inner_radius_m,
                user_density_per_km2: self.user_density_per_km2,
                exclusion_radius_m: self.exclusion_radius_m,
                shadowing_sigma_db: self.shadowing_sigma_db,
                cluster_threshold: self.cluster_threshold,
                fixed_user_count: self.fixed_user_count,
                rng_seed: self.master_seed,
            },
            mode: parse_mode(&self.mode)?,
            scheme: parse_scheme(&self.scheme)?,
            tau_d: self.tau_d,
            tau_p: self.tau_p,
            pilot_power_w: self.pilot_power_w,
            noise_power_w: self.noise_power_w,
            eta: self.eta,
            pf_weighting: self.pf_weighting,
            rbar_floor: self.rbar_floor,
            t_slots: self.t_slots,
            window: self.window,
            num_realizations: self.realizations,
            master_seed: self.master_seed,
            solver: SolverConfig {
                power_budget_w: self.power_budget_w,
                epsilon: self.epsilon,
                tol_converge: self.tol_converge,
                k_stable: self.k_stable,
                iter_max: self.iter_max,
                schedule_threshold_frac: self.schedule_threshold_frac,
                power_tol_rel: 1e-6,
                lambda_doubling_cap: 10,
                record_trace: self.record_trace,
            },
        })
    }
}

/// Load and resolve a config file. A missing `--config` loads pure defaults.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    let file: FileConfig = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => FileConfig::default(),
    };
    file.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_full_scale_defaults() {
        let cfg: FileConfig = toml::from_str("").unwrap();
        let cfg = cfg.resolve().unwrap();
        assert_eq!(cfg.num_cells, 7);
        assert_eq!(cfg.rrh_per_cell, 10);
        assert_eq!(cfg.antennas_per_rrh, 8);
        assert_eq!(cfg.user_density_per_km2, 200.0);
        assert!((cfg.power_budget_w - 1.0).abs() < 1e-12);
        assert_eq!(cfg.tau_d, 200);
        assert_eq!(cfg.eta, 0.2);
        assert_eq!(cfg.t_slots, 100);
        assert_eq!(cfg.window, 50);
        // epsilon rule 0.9 p / M at p = 1 W, M = 8
        assert!((cfg.epsilon - 0.1125).abs() < 1e-12);
        // rho = L(0.4 km)
        assert!((cfg.cluster_threshold - 1.859781969596445e-10).abs() < 1e-22);
        // pilot power 20 dBm = 0.1 W
        assert!((cfg.pilot_power_w - 0.1).abs() < 1e-12);
    }

    #[test]
    fn desk_preset_swaps_scale_parameters() {
        let cfg: FileConfig = toml::from_str("preset = \"desk\"").unwrap();
        let cfg = cfg.resolve().unwrap();
        assert_eq!(cfg.rrh_per_cell, 3);
        assert_eq!(cfg.antennas_per_rrh, 4);
        assert_eq!(cfg.user_density_per_km2, 50.0);
        assert_eq!(cfg.t_slots, 40);
        assert_eq!(cfg.window, 20);
        assert_eq!(cfg.realizations, 5);
        // epsilon rule follows the desk antenna count
        assert!((cfg.epsilon - 0.9 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn explicit_keys_override_presets() {
        let text = "preset = \"desk\"\n[layout]\nantennas_per_rrh = 2\n[campaign]\nt_slots = 7\nwindow = 3";
        let cfg: FileConfig = toml::from_str(text).unwrap();
        let cfg = cfg.resolve().unwrap();
        assert_eq!(cfg.antennas_per_rrh, 2);
        assert_eq!(cfg.t_slots, 7);
        assert_eq!(cfg.window, 3);
    }

    #[test]
    fn oversized_pilot_length_is_rejected() {
        let text = "[radio]\ntau_p = 300\ntau_d = 200\n[campaign]\nmode = \"PEAR\"";
        let cfg: FileConfig = toml::from_str(text).unwrap();
        let err = cfg.resolve().unwrap_err().to_string();
        assert!(err.contains("tau_p"), "{err}");
    }

    #[test]
    fn unknown_keys_are_reported_with_their_path() {
        let err = toml::from_str::<FileConfig>("[radio]\nbogus_key = 1")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus_key"), "{err}");
    }

    #[test]
    fn explicit_epsilon_wins_over_the_rule() {
        let cfg: FileConfig = toml::from_str("[solver]\nepsilon = 0.5").unwrap();
        assert_eq!(cfg.resolve().unwrap().epsilon, 0.5);
    }

    #[test]
    fn bad_scheme_and_mode_are_rejected() {
        let cfg: FileConfig = toml::from_str("[campaign]\nscheme = \"dirty-beam\"").unwrap();
        assert!(cfg.resolve().is_err());
        let cfg: FileConfig = toml::from_str("[campaign]\nmode = \"psychic\"").unwrap();
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn config_echo_round_trips_through_json() {
        let cfg: FileConfig = toml::from_str("preset = \"desk\"").unwrap();
        let cfg = cfg.resolve().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }
}
