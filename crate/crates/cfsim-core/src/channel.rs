//! Channel draws, the uplink pilot phase and LMMSE estimation.
//!
//! The small-scale model is i.i.d. Rayleigh: `h_ru = sqrt(psi_ru L(d_ru)) g_ru`
//! with `g_ru ~ CN(0, I_M)`. Under this model every per-link covariance
//! (`D_ru`, the estimate covariance `Psi_ru` and the error covariance
//! `Theta_ru`) is an exact scalar multiple of `I_M`, so they are stored as
//! their diagonal coefficients; `*_matrix` accessors materialize the full
//! matrices.
//!
//! Estimates are computed for every (RRH, user) pair: the interference
//! seen by a user involves the estimated channels from all RRHs, not just
//! its serving cluster.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::netgen::NetworkRealization;
use crate::pilots::PilotAssignment;

/// Thermal noise power in watts from a spectral density in dBm/Hz, a noise
/// figure in dB and a bandwidth in Hz.
pub fn noise_power(s_z_dbm_per_hz: f64, f_z_db: f64, bandwidth_hz: f64) -> f64 {
    assert!(bandwidth_hz > 0.0, "bandwidth must be positive");
    let dbm = s_z_dbm_per_hz + 10.0 * bandwidth_hz.log10() + f_z_db;
    crate::math::dbm_to_watt(dbm)
}

/// Sample a circularly-symmetric complex normal vector `CN(0, variance * I_m)`.
pub fn complex_normal_vector(rng: &mut impl Rng, m: usize, variance: f64) -> DVector<Complex64> {
    let scale = (variance / 2.0).sqrt();
    DVector::from_fn(m, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    })
}

/// Draw the true channels `h_ru` for every (RRH, user) pair.
pub fn draw_true_channels(
    net: &NetworkRealization,
    rng: &mut impl Rng,
) -> Vec<Vec<DVector<Complex64>>> {
    let m = net.layout.antennas_per_rrh;
    (0..net.num_rrhs())
        .map(|r| {
            (0..net.num_users())
                .map(|u| {
                    let root_gain = net.large_scale_gain[(r, u)].sqrt();
                    complex_normal_vector(rng, m, 1.0).map(|g| g * root_gain)
                })
                .collect()
        })
        .collect()
}

/// Simulate the uplink pilot phase: every user transmits its pilot
/// sequence at `pilot_power_w` simultaneously, and RRH `r` receives the
/// `M x tau_p` matrix `Y_r` in AWGN of power `noise_power_w` per entry.
pub fn pilot_phase(
    net: &NetworkRealization,
    pilots: &PilotAssignment,
    true_ch: &[Vec<DVector<Complex64>>],
    pilot_power_w: f64,
    noise_power_w: f64,
    rng: &mut impl Rng,
) -> Vec<DMatrix<Complex64>> {
    let m = net.layout.antennas_per_rrh;
    let tau_p = pilots.tau_p;
    let root_power = pilot_power_w.sqrt();
    (0..net.num_rrhs())
        .map(|r| {
            let mut y = DMatrix::<Complex64>::zeros(m, tau_p);
            for (u, channel) in true_ch[r].iter().enumerate() {
                let seq = pilots.pilot_matrix.row(pilots.pilot_index[u]);
                for t in 0..tau_p {
                    let s = seq[t] * root_power;
                    for a in 0..m {
                        y[(a, t)] += channel[a] * s;
                    }
                }
            }
            for t in 0..tau_p {
                let z = complex_normal_vector(rng, m, noise_power_w);
                for a in 0..m {
                    y[(a, t)] += z[a];
                }
            }
            y
        })
        .collect()
}

/// LMMSE channel estimates for every (RRH, user) pair.
///
/// The full `M tau_p` system decouples over the orthonormal pilot
/// directions, which collapses the estimator to a scalar gain applied to
/// the de-spread observation `Y_r Phi_u^H`:
///
/// `h_hat_ru = sqrt(p) d_ru / (p * sum_{u' copilot} d_ru' + sigma_z^2) * Y_r Phi_u^H`.
///
/// This equals the direct dense solve to numerical precision.
pub fn lmmse_estimate(
    received: &[DMatrix<Complex64>],
    net: &NetworkRealization,
    pilots: &PilotAssignment,
    pilot_power_w: f64,
    noise_power_w: f64,
) -> Vec<Vec<DVector<Complex64>>> {
    let root_power = pilot_power_w.sqrt();
    (0..net.num_rrhs())
        .map(|r| {
            (0..net.num_users())
                .map(|u| {
                    let despread = &received[r] * pilots.sequence(u).adjoint();
                    let copilot_gain: f64 = pilots.copilot_sets[u]
                        .iter()
                        .map(|&v| net.large_scale_gain[(r, v)])
                        .sum();
                    let gain = root_power * net.large_scale_gain[(r, u)]
                        / (pilot_power_w * copilot_gain + noise_power_w);
                    despread.map(|y| y * gain)
                })
                .collect()
        })
        .collect()
}

/// Coefficients of the estimate covariance `Psi_ru` and error covariance
/// `Theta_ru = D_ru - Psi_ru` (both scalar multiples of the identity).
pub fn error_covariances(
    net: &NetworkRealization,
    pilots: &PilotAssignment,
    pilot_power_w: f64,
    noise_power_w: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let num_rrhs = net.num_rrhs();
    let num_users = net.num_users();
    let mut psi = DMatrix::zeros(num_rrhs, num_users);
    let mut theta = DMatrix::zeros(num_rrhs, num_users);
    for r in 0..num_rrhs {
        for u in 0..num_users {
            let d = net.large_scale_gain[(r, u)];
            let copilot_gain: f64 = pilots.copilot_sets[u]
                .iter()
                .map(|&v| net.large_scale_gain[(r, v)])
                .sum();
            let p = d * d / (copilot_gain + noise_power_w / pilot_power_w);
            psi[(r, u)] = p;
            theta[(r, u)] = d - p;
        }
    }
    (psi, theta)
}

/// Channels, estimates and covariance coefficients for one slot.
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct ChannelSet {
    pub num_antennas: usize,
    pub noise_power_w: f64,
    /// True channels `h_ru`, indexed `[rrh][user]`.
    pub true_ch: Vec<Vec<DVector<Complex64>>>,
    /// LMMSE estimates (or the truth in perfect-CSI mode), `[rrh][user]`.
    pub est_ch: Vec<Vec<DVector<Complex64>>>,
    /// Diagonal coefficient of `D_ru` (the large-scale gain).
    pub large_scale: DMatrix<f64>,
    /// Diagonal coefficient of the estimate covariance `Psi_ru`.
    pub psi: DMatrix<f64>,
    /// Diagonal coefficient of the error covariance `Theta_ru`.
    pub theta: DMatrix<f64>,
}

impl ChannelSet {
    /// Perfect-CSI mode: the estimates are the true channels and the
    /// estimation error vanishes.
    pub fn perfect(
        net: &NetworkRealization,
        true_ch: Vec<Vec<DVector<Complex64>>>,
        noise_power_w: f64,
    ) -> Self {
        let est_ch = true_ch.clone();
        ChannelSet {
            num_antennas: net.layout.antennas_per_rrh,
            noise_power_w,
            true_ch,
            est_ch,
            large_scale: net.large_scale_gain.clone(),
            psi: net.large_scale_gain.clone(),
            theta: DMatrix::zeros(net.num_rrhs(), net.num_users()),
        }
    }

    /// Estimated-CSI mode: run the pilot phase and LMMSE estimation.
    pub fn estimated(
        net: &NetworkRealization,
        pilots: &PilotAssignment,
        true_ch: Vec<Vec<DVector<Complex64>>>,
        pilot_power_w: f64,
        noise_power_w: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let received = pilot_phase(net, pilots, &true_ch, pilot_power_w, noise_power_w, rng);
        let est_ch = lmmse_estimate(&received, net, pilots, pilot_power_w, noise_power_w);
        let (psi, theta) = error_covariances(net, pilots, pilot_power_w, noise_power_w);
        ChannelSet {
            num_antennas: net.layout.antennas_per_rrh,
            noise_power_w,
            true_ch,
            est_ch,
            large_scale: net.large_scale_gain.clone(),
            psi,
            theta,
        }
    }

    pub fn num_rrhs(&self) -> usize {
        self.true_ch.len()
    }

    pub fn num_users(&self) -> usize {
        self.large_scale.ncols()
    }

    /// Materialize `D_ru` as an `M x M` matrix.
    pub fn d_matrix(&self, r: usize, u: usize) -> DMatrix<Complex64> {
        scaled_identity(self.num_antennas, self.large_scale[(r, u)])
    }

    /// Materialize `Psi_ru` as an `M x M` matrix.
    pub fn psi_matrix(&self, r: usize, u: usize) -> DMatrix<Complex64> {
        scaled_identity(self.num_antennas, self.psi[(r, u)])
    }

    /// Materialize `Theta_ru` as an `M x M` matrix.
    pub fn theta_matrix(&self, r: usize, u: usize) -> DMatrix<Complex64> {
        scaled_identity(self.num_antennas, self.theta[(r, u)])
    }
}

fn scaled_identity(m: usize, coeff: f64) -> DMatrix<Complex64> {
    DMatrix::from_diagonal_element(m, m, Complex64::new(coeff, 0.0))
}
