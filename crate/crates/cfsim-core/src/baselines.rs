//! Reference schemes: round-robin scheduling and fixed beamforming rules.
//!
//! Round-robin walks a circular pointer over each RRH's candidate set, so
//! every candidate is served at the same long-term frequency. Zero-forcing
//! nulls intra-RRH interference among the scheduled users; conjugate
//! beamforming matches each scheduled channel. Both split the power budget
//! equally across the RRH's scheduled links. Cross-RRH interference is not
//! coordinated by any baseline.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::channel::ChannelSet;
use crate::links::LinkSet;
use crate::solver::Schedule;

/// Scheme selector shared with the simulation loop and the CLI.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    /// The iterative joint scheduling and beamforming solver.
    Proposed,
    /// Zero-forcing beamforming on a round-robin schedule.
    ZfRoundRobin,
    /// Conjugate beamforming on a round-robin schedule.
    ConjRoundRobin,
    /// Zero-forcing beamforming on the solver's optimized schedule.
    ZfOptSched,
}

/// Round-robin schedule for one slot: each RRH serves the next
/// `min(M, |E_r|)` users from a circular pointer over its candidate set
/// (ascending user order at slot 0), advancing by the number served.
pub fn round_robin(links: &LinkSet, max_per_rrh: usize, slot: usize) -> Schedule {
    let mut schedule = Schedule::all_off(links);
    for r in 0..links.num_rrhs() {
        let ids = links.of_rrh(r);
        let n = ids.len();
        if n == 0 {
            continue;
        }
        let served = max_per_rrh.min(n);
        let start = (slot * served) % n;
        for i in 0..served {
            schedule.active[ids[(start + i) % n]] = true;
        }
    }
    schedule
}

/// Zero-forcing beamformers over each RRH's scheduled set, built from the
/// channel estimates and normalized to an equal split of the power budget.
///
/// If the stacked estimate matrix is rank deficient the weakest scheduled
/// user (smallest estimate norm) is dropped and the construction retried;
/// dropped links keep a zero beamformer.
pub fn zf_beamformers(
    links: &LinkSet,
    schedule: &Schedule,
    channels: &ChannelSet,
    power_budget_w: f64,
) -> Vec<DVector<Complex64>> {
    let m = channels.num_antennas;
    let mut w = alloc::vec![DVector::zeros(m); links.len()];
    for r in 0..links.num_rrhs() {
        let mut active: Vec<usize> = links
            .of_rrh(r)
            .iter()
            .copied()
            .filter(|&id| schedule.active[id] && channels.est_ch[r][links.link(id).user].norm() > 0.0)
            .collect();
        while !active.is_empty() {
            let k = active.len();
            let mut stacked = DMatrix::<Complex64>::zeros(m, k);
            for (col, &id) in active.iter().enumerate() {
                stacked.set_column(col, &channels.est_ch[r][links.link(id).user]);
            }
            let normal = stacked.adjoint() * &stacked;
            match nalgebra::Cholesky::new(normal) {
                Some(chol) => {
                    // directions H (H^H H)^{-1}: exact nulls within the set
                    let directions = &stacked * chol.inverse();
                    let share = (power_budget_w / k as f64).sqrt();
                    for (col, &id) in active.iter().enumerate() {
                        let dir = directions.column(col);
                        let norm = dir.norm();
                        w[id] = dir.map(|c| c * (share / norm));
                    }
                    break;
                }
                None => {
                    let weakest = active
                        .iter()
                        .enumerate()
                        .min_by(|(_, &a), (_, &b)| {
                            let na = channels.est_ch[r][links.link(a).user].norm_squared();
                            let nb = channels.est_ch[r][links.link(b).user].norm_squared();
                            na.partial_cmp(&nb).expect("finite norms")
                        })
                        .map(|(pos, _)| pos)
                        .expect("non-empty set");
                    active.remove(weakest);
                }
            }
        }
    }
    w
}

/// Conjugate (matched-filter) beamformers over each RRH's scheduled set at
/// an equal power split. Links with a zero estimate are skipped.
pub fn conjugate_beamformers(
    links: &LinkSet,
    schedule: &Schedule,
    channels: &ChannelSet,
    power_budget_w: f64,
) -> Vec<DVector<Complex64>> {
    let m = channels.num_antennas;
    let mut w = alloc::vec![DVector::zeros(m); links.len()];
    for r in 0..links.num_rrhs() {
        let active: Vec<usize> = links
            .of_rrh(r)
            .iter()
            .copied()
            .filter(|&id| schedule.active[id])
            .collect();
        if active.is_empty() {
            continue;
        }
        let share = (power_budget_w / active.len() as f64).sqrt();
        for &id in &active {
            let est = &channels.est_ch[r][links.link(id).user];
            let norm = est.norm();
            if norm > 0.0 {
                w[id] = est.map(|c| c * (share / norm));
            }
        }
    }
    w
}

/// Zero-forcing beamformers on a schedule produced by the solver.
pub fn zf_with_optimized_schedule(
    links: &LinkSet,
    proposed_schedule: &Schedule,
    channels: &ChannelSet,
    power_budget_w: f64,
) -> Vec<DVector<Complex64>> {
    zf_beamformers(links, proposed_schedule, channels, power_budget_w)
}
