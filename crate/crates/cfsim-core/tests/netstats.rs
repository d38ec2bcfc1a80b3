//! Statistical regression checks of the network generator and the pilot
//! assignment policy. All tolerances are standard-error bands under fixed
//! seeds.

mod common;

use cfsim_core::channel::draw_true_channels;
use cfsim_core::math::lin_to_db;
use cfsim_core::netgen::{generate_network, wrap_distance};
use cfsim_core::pilots::assign_for_network;
use common::desk_layout;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[test]
fn user_count_matches_density_times_area() {
    let layout = desk_layout(0);
    let area = layout.total_area_km2();
    let mean = layout.user_density_per_km2 * area;
    let seeds = 150usize;
    let mut total = 0usize;
    for seed in 0..seeds {
        let mut cfg = desk_layout(seed as u64);
        cfg.rrh_per_cell = 1; // geometry only, keep it cheap
        total += generate_network(&cfg).unwrap().num_users();
    }
    let empirical = total as f64 / seeds as f64;
    // Poisson variance = mean; standard error of the empirical mean
    let se = (mean / seeds as f64).sqrt();
    assert!(
        (empirical - mean).abs() <= 3.0 * se,
        "count {empirical:.1} vs mean {mean:.1} (3se = {:.1})",
        3.0 * se
    );
}

#[test]
fn shadowing_moments_match_config() {
    let mut cfg = desk_layout(7);
    cfg.rrh_per_cell = 2;
    cfg.fixed_user_count = Some(800); // 14 RRHs x 800 users > 10^4 links
    let net = generate_network(&cfg).unwrap();
    let samples: Vec<f64> = net.shadowing.iter().map(|&psi| lin_to_db(psi)).collect();
    let n = samples.len() as f64;
    assert!(n >= 1e4);
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let sigma = cfg.shadowing_sigma_db;
    // mean: se = sigma / sqrt(n); std: se ~ sigma / sqrt(2n)
    assert!(mean.abs() <= 3.0 * sigma / n.sqrt(), "mean {mean}");
    let se_std = sigma / (2.0 * n).sqrt();
    assert!(
        (var.sqrt() - sigma).abs() <= 3.0 * se_std,
        "std {:.4} vs {sigma}",
        var.sqrt()
    );
}

#[test]
fn channel_sample_covariance_matches_large_scale() {
    let mut cfg = desk_layout(3);
    cfg.rrh_per_cell = 1;
    cfg.antennas_per_rrh = 2;
    cfg.fixed_user_count = Some(2);
    let net = generate_network(&cfg).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    let redraws = 10_000usize;
    let m = cfg.antennas_per_rrh;
    let mut acc = vec![0.0f64; m * m * 2]; // packed re/im for the (0,0) pair
    for _ in 0..redraws {
        let h = draw_true_channels(&net, &mut rng);
        for a in 0..m {
            for b in 0..m {
                let prod = h[0][0][a] * h[0][0][b].conj();
                acc[2 * (a * m + b)] += prod.re;
                acc[2 * (a * m + b) + 1] += prod.im;
            }
        }
    }
    let d = net.large_scale_gain[(0, 0)];
    for a in 0..m {
        for b in 0..m {
            let re = acc[2 * (a * m + b)] / redraws as f64;
            let im = acc[2 * (a * m + b) + 1] / redraws as f64;
            if a == b {
                assert!((re - d).abs() <= 0.05 * d, "diag {re:e} vs {d:e}");
                assert!(im.abs() <= 0.05 * d);
            } else {
                assert!(re.abs() <= 0.05 * d && im.abs() <= 0.05 * d);
            }
        }
    }
}

#[test]
fn copilot_pairs_sit_farther_apart_than_random_pairs() {
    // soft regression of the location-aware design goal: across many
    // realizations, users sharing a pilot are farther apart on average
    // than arbitrary user pairs
    let mut mean_copilot = 0.0;
    let mut mean_all = 0.0;
    let mut realizations = 0usize;
    for seed in 0..120u64 {
        let mut cfg = desk_layout(seed);
        cfg.rrh_per_cell = 1;
        cfg.fixed_user_count = Some(24);
        let net = generate_network(&cfg).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xABCD);
        let pilots = assign_for_network(&net, 8, &mut rng).unwrap();

        let n = net.num_users();
        let mut copilot_sum = 0.0;
        let mut copilot_cnt = 0usize;
        let mut all_sum = 0.0;
        let mut all_cnt = 0usize;
        for u in 0..n {
            for v in (u + 1)..n {
                let d = wrap_distance(net.user_positions[u], net.user_positions[v], &cfg);
                all_sum += d;
                all_cnt += 1;
                if pilots.pilot_index[u] == pilots.pilot_index[v] {
                    copilot_sum += d;
                    copilot_cnt += 1;
                }
            }
        }
        if copilot_cnt > 0 {
            mean_copilot += copilot_sum / copilot_cnt as f64;
            mean_all += all_sum / all_cnt as f64;
            realizations += 1;
        }
    }
    assert!(realizations >= 100, "not enough contaminated realizations");
    mean_copilot /= realizations as f64;
    mean_all /= realizations as f64;
    assert!(
        mean_copilot >= mean_all,
        "copilot mean {mean_copilot:.1} m < overall mean {mean_all:.1} m"
    );
}
