//! Helpers shared by the integration suites.

#![allow(dead_code)]

use cfsim_core::channel::{complex_normal_vector, ChannelSet};
use cfsim_core::links::LinkSet;
use cfsim_core::math::db_to_lin;
use cfsim_core::netgen::{path_loss_db, LayoutConfig};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

/// Desk-scale layout used by the slower property runs.
pub fn desk_layout(seed: u64) -> LayoutConfig {
    LayoutConfig {
        num_cells: 7,
        rrh_per_cell: 3,
        antennas_per_rrh: 4,
        cell_inner_radius_m: 500.0,
        user_density_per_km2: 50.0,
        exclusion_radius_m: 20.0,
        shadowing_sigma_db: 4.0,
        cluster_threshold: db_to_lin(path_loss_db(0.4).unwrap()),
        fixed_user_count: None,
        rng_seed: seed,
    }
}

/// Channel set over explicit estimates and error-covariance coefficients.
pub fn synthetic_channels(
    est: Vec<Vec<DVector<Complex64>>>,
    theta: DMatrix<f64>,
    noise_power_w: f64,
) -> ChannelSet {
    let num_rrhs = est.len();
    let num_users = theta.ncols();
    let m = est[0][0].len();
    let mut large = DMatrix::zeros(num_rrhs, num_users);
    for r in 0..num_rrhs {
        for u in 0..num_users {
            large[(r, u)] = est[r][u].norm_squared().max(1e-12) + theta[(r, u)];
        }
    }
    let psi = &large - &theta;
    ChannelSet {
        num_antennas: m,
        noise_power_w,
        true_ch: est.clone(),
        est_ch: est,
        large_scale: large,
        psi,
        theta,
    }
}

/// Random micro instance: 2 RRHs, 2 users, 2 antennas, all links present.
pub fn random_micro(rng: &mut impl Rng) -> (LinkSet, ChannelSet, Vec<f64>) {
    let links = LinkSet::from_served(&[vec![0, 1], vec![0, 1]], 2);
    let est = (0..2)
        .map(|_| (0..2).map(|_| complex_normal_vector(rng, 2, 1.0)).collect())
        .collect();
    let theta = DMatrix::from_fn(2, 2, |_, _| rng.random_range(0.0..0.3));
    let channels = synthetic_channels(est, theta, rng.random_range(0.05..0.5));
    let delta = vec![rng.random_range(0.2..2.0), rng.random_range(0.2..2.0)];
    (links, channels, delta)
}

/// Random beamformers for every link of a micro instance.
pub fn random_beams(
    links: &LinkSet,
    m: usize,
    scale: f64,
    rng: &mut impl Rng,
) -> Vec<DVector<Complex64>> {
    links
        .iter()
        .map(|_| complex_normal_vector(rng, m, scale))
        .collect()
}
