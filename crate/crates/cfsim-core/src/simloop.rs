//! Multi-slot proportional-fairness simulation.
//!
//! Each realization fixes the geometry and large-scale fading, then steps
//! through time slots: draw fresh small-scale fading, form the channel
//! state (perfect or estimated), run the selected scheme, score every user
//! with the actual achievable rate on the true channels, and update the
//! exponentially averaged rates that drive the proportional-fairness
//! weights of the next slot.
//!
//! All randomness is derived from the campaign master seed with
//! per-purpose tags, so paired runs (different schemes or CSI modes on the
//! same seed) see identical networks and channels.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DVector;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::baselines::{conjugate_beamformers, round_robin, zf_beamformers, SchemeKind};
use crate::channel::{draw_true_channels, ChannelSet};
use crate::links::LinkSet;
use crate::math::{derive_seed, median};
use crate::netgen::{generate_network, LayoutConfig, NetgenError, NetworkRealization};
use crate::pilots::{assign_for_network, PilotAssignment, PilotError};
use crate::solver::{
    apply_schedule, extract_schedule, solve, Schedule, SolverConfig, SolverError,
};

const TAG_GEOMETRY: u64 = 1;
const TAG_PILOT_ASSIGN: u64 = 2;
const TAG_FADING: u64 = 3;
const TAG_PILOT_NOISE: u64 = 4;

/// Channel knowledge available to the optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsiMode {
    /// Ideal channels, no pilot training overhead.
    Perfect,
    /// LMMSE estimates from a simulated pilot phase, robust beamforming,
    /// and the `(tau_d - tau_p) / tau_d` pre-log penalty.
    Estimated,
}

/// Full configuration of a simulation campaign.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub layout: LayoutConfig,
    pub mode: CsiMode,
    pub scheme: SchemeKind,
    /// Coherence block length in symbols.
    pub tau_d: usize,
    /// Pilot sequence length in symbols.
    pub tau_p: usize,
    /// Uplink pilot power in watts.
    pub pilot_power_w: f64,
    /// Receiver noise power in watts.
    pub noise_power_w: f64,
    /// Forgetting factor of the exponential rate average.
    pub eta: f64,
    /// Feed proportional-fairness weights to the solver. When off, the
    /// solver runs with uniform weights; the rate averages are tracked
    /// either way.
    pub pf_weighting: bool,
    /// Lower clamp of the averaged rate, keeps weights finite.
    pub rbar_floor: f64,
    pub t_slots: usize,
    /// Long-term metrics average over the last `window` slots.
    pub window: usize,
    pub num_realizations: usize,
    pub master_seed: u64,
    pub solver: SolverConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.layout.validate().map_err(SimError::Netgen)?;
        if self.mode == CsiMode::Estimated && self.tau_p >= self.tau_d {
            return Err(SimError::BadConfig(format!(
                "tau_p ({}) must be smaller than tau_d ({})",
                self.tau_p, self.tau_d
            )));
        }
        if self.tau_p == 0 {
            return Err(SimError::BadConfig("tau_p must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(SimError::BadConfig(format!("eta must be in [0, 1], got {}", self.eta)));
        }
        if self.window == 0 || self.window > self.t_slots {
            return Err(SimError::BadConfig(format!(
                "window ({}) must be in 1..={}",
                self.window, self.t_slots
            )));
        }
        if self.noise_power_w <= 0.0 || self.noise_power_w.is_nan() {
            return Err(SimError::BadConfig("noise power must be positive".into()));
        }
        if self.rbar_floor <= 0.0 || self.rbar_floor.is_nan() {
            return Err(SimError::BadConfig("rbar_floor must be positive".into()));
        }
        Ok(())
    }

    /// Fraction of the coherence block left for data.
    pub fn pre_log(&self) -> f64 {
        match self.mode {
            CsiMode::Perfect => 1.0,
            CsiMode::Estimated => (self.tau_d - self.tau_p) as f64 / self.tau_d as f64,
        }
    }
}

/// Per-slot bookkeeping of rates, averages and weights.
#[derive(Clone, Debug)]
pub struct SlotLedger {
    pub t: usize,
    /// Actual achievable rate per user, bits/s/Hz (zero when unscheduled).
    pub rates: Vec<f64>,
    /// Exponentially averaged rate per user after this slot.
    pub avg_rates: Vec<f64>,
    /// Proportional-fairness weights after this slot (`1 / avg_rate`).
    pub weights: Vec<f64>,
    pub schedule: Schedule,
    /// Whether each user is scheduled by at least one RRH this slot.
    pub scheduled_users: Vec<bool>,
    pub pre_log: f64,
}

/// Results of one realization.
#[derive(Clone, Debug)]
pub struct RealizationMetrics {
    pub realization: usize,
    pub num_rrhs: usize,
    pub num_users: usize,
    /// Mean rate per user over the last `window` slots.
    pub per_user_longterm_se: Vec<f64>,
    /// Network sum rate per slot.
    pub sum_se_per_slot: Vec<f64>,
    pub slots: Vec<SlotLedger>,
    /// Solver objective trace per slot, kept when trace recording is on.
    pub objective_traces: Vec<Vec<f64>>,
}

/// Aggregated campaign results.
#[derive(Clone, Debug)]
pub struct CampaignMetrics {
    /// Area-based pilot reuse factor `tau_p / user density`.
    pub pilot_reuse: f64,
    pub realizations: Vec<RealizationMetrics>,
    /// Median over all users (all realizations) of the long-term rate.
    pub median_longterm_user_se: f64,
    /// Mean over realizations of the windowed mean network sum rate.
    pub mean_sum_se_last_window: f64,
}

/// Actual achievable rate per user, evaluated on the true channels with
/// perfect interference cancellation across a user's own serving links.
pub fn actual_rate(
    links: &LinkSet,
    schedule: &Schedule,
    w: &[DVector<Complex64>],
    true_ch: &[Vec<DVector<Complex64>>],
    noise_power_w: f64,
    pre_log: f64,
) -> Vec<f64> {
    let num_users = links.num_users();
    let mut signal = vec![0.0; num_users];
    let mut interference = vec![0.0; num_users];
    for (id, link) in links.iter() {
        if !schedule.active[id] {
            continue;
        }
        let beam = &w[id];
        if beam.norm_squared() == 0.0 {
            continue;
        }
        for u in 0..num_users {
            let power = true_ch[link.rrh][u].dotc(beam).norm_sqr();
            if u == link.user {
                signal[u] += power;
            } else {
                interference[u] += power;
            }
        }
    }
    (0..num_users)
        .map(|u| pre_log * (1.0 + signal[u] / (interference[u] + noise_power_w)).ln() / core::f64::consts::LN_2)
        .collect()
}

/// Effective rate per user under the optimizer's information set: channel
/// estimates plus the error-covariance robustness terms. Diagnostic only.
pub fn effective_rate(
    links: &LinkSet,
    schedule: &Schedule,
    w: &[DVector<Complex64>],
    channels: &ChannelSet,
    pre_log: f64,
) -> Vec<f64> {
    let num_users = links.num_users();
    let mut signal = vec![0.0; num_users];
    let mut denom = vec![channels.noise_power_w; num_users];
    for (id, link) in links.iter() {
        if !schedule.active[id] {
            continue;
        }
        let beam = &w[id];
        let beam_power = beam.norm_squared();
        if beam_power == 0.0 {
            continue;
        }
        for u in 0..num_users {
            let power = channels.est_ch[link.rrh][u].dotc(beam).norm_sqr();
            if u == link.user {
                signal[u] += power;
            } else {
                denom[u] += power;
            }
            denom[u] += channels.theta[(link.rrh, u)] * beam_power;
        }
    }
    (0..num_users)
        .map(|u| pre_log * (1.0 + signal[u] / denom[u]).ln() / core::f64::consts::LN_2)
        .collect()
}

/// One step of the exponential rate average and its fairness weight.
pub fn update_pf(avg_prev: f64, rate: f64, eta: f64, floor: f64) -> (f64, f64) {
    let avg = (eta * rate + (1.0 - eta) * avg_prev).max(floor);
    (avg, 1.0 / avg)
}

/// Area-based pilot reuse factor `tau_p / lambda_users`.
pub fn pilot_reuse_factor(tau_p: usize, user_density_per_km2: f64) -> f64 {
    tau_p as f64 / user_density_per_km2
}

/// Generate the fixed per-realization state: geometry, links and (in
/// estimated-CSI mode) the pilot assignment.
pub fn realization_setup(
    cfg: &SimConfig,
    realization: usize,
) -> Result<(NetworkRealization, LinkSet, Option<PilotAssignment>), SimError> {
    let mut layout = cfg.layout.clone();
    layout.rng_seed = derive_seed(cfg.master_seed, &[realization as u64, TAG_GEOMETRY]);
    let net = generate_network(&layout).map_err(SimError::Netgen)?;
    let links = LinkSet::from_network(&net);
    let pilots = match cfg.mode {
        CsiMode::Perfect => None,
        CsiMode::Estimated => {
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(
                cfg.master_seed,
                &[realization as u64, TAG_PILOT_ASSIGN],
            ));
            Some(assign_for_network(&net, cfg.tau_p, &mut rng).map_err(SimError::Pilot)?)
        }
    };
    Ok((net, links, pilots))
}

/// Channel state of one slot: fresh fading, and in estimated-CSI mode a
/// fresh pilot phase with LMMSE estimation.
pub fn slot_channels(
    cfg: &SimConfig,
    net: &NetworkRealization,
    pilots: Option<&PilotAssignment>,
    realization: usize,
    t: usize,
) -> ChannelSet {
    let mut fading_rng = ChaCha12Rng::seed_from_u64(derive_seed(
        cfg.master_seed,
        &[realization as u64, TAG_FADING, t as u64],
    ));
    let true_ch = draw_true_channels(net, &mut fading_rng);
    match (cfg.mode, pilots) {
        (CsiMode::Perfect, _) => ChannelSet::perfect(net, true_ch, cfg.noise_power_w),
        (CsiMode::Estimated, Some(pa)) => {
            let mut noise_rng = ChaCha12Rng::seed_from_u64(derive_seed(
                cfg.master_seed,
                &[realization as u64, TAG_PILOT_NOISE, t as u64],
            ));
            ChannelSet::estimated(
                net,
                pa,
                true_ch,
                cfg.pilot_power_w,
                cfg.noise_power_w,
                &mut noise_rng,
            )
        }
        (CsiMode::Estimated, None) => unreachable!("pilots exist in estimated mode"),
    }
}

/// Run one realization of the campaign.
pub fn run_realization(cfg: &SimConfig, realization: usize) -> Result<RealizationMetrics, SimError> {
    cfg.validate()?;
    let (net, links, pilots) = realization_setup(cfg, realization)?;
    let num_users = net.num_users();
    let pre_log = cfg.pre_log();
    let max_per_rrh = net.layout.antennas_per_rrh;
    let mut avg_rates = vec![cfg.rbar_floor; num_users];
    let mut weights: Vec<f64> = avg_rates.iter().map(|&r| 1.0 / r).collect();

    let mut slots = Vec::with_capacity(cfg.t_slots);
    let mut sum_se_per_slot = Vec::with_capacity(cfg.t_slots);
    let mut objective_traces = Vec::new();

    for t in 0..cfg.t_slots {
        let channels = slot_channels(cfg, &net, pilots.as_ref(), realization, t);

        let solver_weights: Vec<f64> = if cfg.pf_weighting {
            weights.clone()
        } else {
            vec![1.0; num_users]
        };
        let (schedule, beams) = match cfg.scheme {
            SchemeKind::Proposed => {
                let state = solve(&channels, &links, &solver_weights, &cfg.solver)
                    .map_err(|source| SimError::Solver { realization, slot: t, source })?;
                let schedule = extract_schedule(
                    &state.w,
                    &links,
                    cfg.solver.power_budget_w,
                    max_per_rrh,
                    cfg.solver.schedule_threshold_frac,
                );
                let beams = apply_schedule(&state.w, &schedule);
                if cfg.solver.record_trace {
                    objective_traces.push(state.objective_trace.clone());
                }
                (schedule, beams)
            }
            SchemeKind::ZfOptSched => {
                let state = solve(&channels, &links, &solver_weights, &cfg.solver)
                    .map_err(|source| SimError::Solver { realization, slot: t, source })?;
                let schedule = extract_schedule(
                    &state.w,
                    &links,
                    cfg.solver.power_budget_w,
                    max_per_rrh,
                    cfg.solver.schedule_threshold_frac,
                );
                if cfg.solver.record_trace {
                    objective_traces.push(state.objective_trace.clone());
                }
                let beams =
                    zf_beamformers(&links, &schedule, &channels, cfg.solver.power_budget_w);
                (schedule, beams)
            }
            SchemeKind::ZfRoundRobin => {
                let schedule = round_robin(&links, max_per_rrh, t);
                let beams =
                    zf_beamformers(&links, &schedule, &channels, cfg.solver.power_budget_w);
                (schedule, beams)
            }
            SchemeKind::ConjRoundRobin => {
                let schedule = round_robin(&links, max_per_rrh, t);
                let beams =
                    conjugate_beamformers(&links, &schedule, &channels, cfg.solver.power_budget_w);
                (schedule, beams)
            }
        };

        let rates = actual_rate(
            &links,
            &schedule,
            &beams,
            &channels.true_ch,
            cfg.noise_power_w,
            pre_log,
        );
        for u in 0..num_users {
            let (avg, weight) = update_pf(avg_rates[u], rates[u], cfg.eta, cfg.rbar_floor);
            avg_rates[u] = avg;
            weights[u] = weight;
        }
        sum_se_per_slot.push(rates.iter().sum());
        let scheduled_users = schedule.scheduled_users(&links);
        slots.push(SlotLedger {
            t,
            rates,
            avg_rates: avg_rates.clone(),
            weights: weights.clone(),
            schedule,
            scheduled_users,
            pre_log,
        });
    }

    let window_start = cfg.t_slots - cfg.window;
    let per_user_longterm_se = (0..num_users)
        .map(|u| {
            slots[window_start..]
                .iter()
                .map(|s| s.rates[u])
                .sum::<f64>()
                / cfg.window as f64
        })
        .collect();

    Ok(RealizationMetrics {
        realization,
        num_rrhs: net.num_rrhs(),
        num_users,
        per_user_longterm_se,
        sum_se_per_slot,
        slots,
        objective_traces,
    })
}

/// Aggregate per-realization results into campaign metrics. The reduction
/// is associative with a fixed order, so parallel drivers that collect
/// realizations by index reproduce the sequential result exactly.
pub fn aggregate(cfg: &SimConfig, realizations: Vec<RealizationMetrics>) -> CampaignMetrics {
    let mut all_user_se = Vec::new();
    let mut window_means = Vec::new();
    for real in &realizations {
        all_user_se.extend_from_slice(&real.per_user_longterm_se);
        let start = cfg.t_slots - cfg.window;
        let mean =
            real.sum_se_per_slot[start..].iter().sum::<f64>() / cfg.window as f64;
        window_means.push(mean);
    }
    CampaignMetrics {
        pilot_reuse: pilot_reuse_factor(cfg.tau_p, cfg.layout.user_density_per_km2),
        median_longterm_user_se: median(&all_user_se),
        mean_sum_se_last_window: window_means.iter().sum::<f64>()
            / window_means.len().max(1) as f64,
        realizations,
    }
}

/// Run the full campaign sequentially.
pub fn run_campaign(cfg: &SimConfig) -> Result<CampaignMetrics, SimError> {
    cfg.validate()?;
    let mut realizations = Vec::with_capacity(cfg.num_realizations);
    for idx in 0..cfg.num_realizations {
        realizations.push(run_realization(cfg, idx)?);
    }
    Ok(aggregate(cfg, realizations))
}

#[derive(Clone, Debug)]
pub enum SimError {
    BadConfig(String),
    Netgen(NetgenError),
    Pilot(PilotError),
    Solver {
        realization: usize,
        slot: usize,
        source: SolverError,
    },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::BadConfig(msg) => write!(f, "invalid simulation config: {msg}"),
            SimError::Netgen(e) => write!(f, "network generation failed: {e}"),
            SimError::Pilot(e) => write!(f, "pilot assignment failed: {e}"),
            SimError::Solver { realization, slot, source } => write!(
                f,
                "solver failed in realization {realization}, slot {slot}: {source}"
            ),
        }
    }
}

impl core::error::Error for SimError {}
