//! Wrap-around network generation: RRH and user placement over a cluster of
//! hexagonal virtual cells, COST231-style path loss, log-normal shadowing
//! and user-centric serving clusters.
//!
//! The layout is a flower of `Q = 7` flat-top hexagons (one center cell plus
//! six neighbors). Distances are measured under the minimum-image rule of
//! the 7-cell cluster translation group, which removes network borders.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::math::db_to_lin;

/// 2-D position in meters.
pub type Point = [f64; 2];

/// COST231 Walfish-Ikegami path loss at 1800 MHz, distance in km.
///
/// Returns the gain in dB (negative). Linear gain is `10^(dB/10)`.
pub fn path_loss_db(d_km: f64) -> Result<f64, NetgenError> {
    if d_km <= 0.0 || !d_km.is_finite() {
        return Err(NetgenError::BadDistance(d_km));
    }
    Ok(-112.4271 - 38.0 * d_km.log10())
}

/// Layout and large-scale-fading parameters for one network realization.
#[derive(Clone, Debug, PartialEq)]
pub struct LayoutConfig {
    /// Number of hexagonal virtual cells. The wrap translation group is
    /// defined for the 7-cell cluster.
    pub num_cells: usize,
    /// RRHs dropped uniformly in each virtual cell.
    pub rrh_per_cell: usize,
    /// Antennas per RRH.
    pub antennas_per_rrh: usize,
    /// Hexagon inner radius (apothem) in meters.
    pub cell_inner_radius_m: f64,
    /// Mean user density in users per km².
    pub user_density_per_km2: f64,
    /// No user may fall within this distance of any RRH, in meters.
    pub exclusion_radius_m: f64,
    /// Log-normal shadowing standard deviation in dB.
    pub shadowing_sigma_db: f64,
    /// Serving-cluster threshold on the linear large-scale gain.
    pub cluster_threshold: f64,
    /// Draw a fixed user count instead of a Poisson count.
    pub fixed_user_count: Option<usize>,
    /// Seed for this realization.
    pub rng_seed: u64,
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<(), NetgenError> {
        if self.num_cells != 7 {
            return Err(NetgenError::BadConfig(format!(
                "num_cells must be 7 (wrap vectors are defined for the 7-cell cluster), got {}",
                self.num_cells
            )));
        }
        if self.rrh_per_cell == 0 {
            return Err(NetgenError::BadConfig("rrh_per_cell must be >= 1".into()));
        }
        if self.antennas_per_rrh == 0 {
            return Err(NetgenError::BadConfig("antennas_per_rrh must be >= 1".into()));
        }
        if self.cell_inner_radius_m <= 0.0 || !self.cell_inner_radius_m.is_finite() {
            return Err(NetgenError::BadConfig("cell_inner_radius_m must be > 0".into()));
        }
        let density_ok = self.user_density_per_km2 > 0.0 && self.user_density_per_km2.is_finite();
        if !density_ok && self.fixed_user_count.is_none() {
            return Err(NetgenError::BadConfig("user_density_per_km2 must be > 0".into()));
        }
        if self.exclusion_radius_m < 0.0 {
            return Err(NetgenError::BadConfig("exclusion_radius_m must be >= 0".into()));
        }
        if self.shadowing_sigma_db < 0.0 {
            return Err(NetgenError::BadConfig("shadowing_sigma_db must be >= 0".into()));
        }
        if self.cluster_threshold <= 0.0 || self.cluster_threshold.is_nan() {
            return Err(NetgenError::BadConfig("cluster_threshold must be > 0".into()));
        }
        Ok(())
    }

    /// Hexagon circumradius `2a/sqrt(3)` in meters.
    pub fn circumradius_m(&self) -> f64 {
        2.0 * self.cell_inner_radius_m / 3f64.sqrt()
    }

    /// Area of one hexagonal cell in km².
    pub fn cell_area_km2(&self) -> f64 {
        let a_km = self.cell_inner_radius_m / 1000.0;
        2.0 * 3f64.sqrt() * a_km * a_km
    }

    /// Total simulation area in km².
    pub fn total_area_km2(&self) -> f64 {
        self.num_cells as f64 * self.cell_area_km2()
    }

    /// Centers of the virtual cells. Cell 0 sits at the origin, the six
    /// neighbors at distance `2a` across each flat edge.
    pub fn cell_centers(&self) -> Vec<Point> {
        let a = self.cell_inner_radius_m;
        let mut centers = vec![[0.0, 0.0]];
        for k in 0..6 {
            let phi = core::f64::consts::FRAC_PI_6 + k as f64 * core::f64::consts::FRAC_PI_3;
            centers.push([2.0 * a * phi.cos(), 2.0 * a * phi.sin()]);
        }
        centers
    }

    /// The six translation vectors of the 7-cell cluster wrap group:
    /// `2u + v` rotated by multiples of 60°, where `u`, `v` are the hex
    /// lattice basis. Magnitude `sqrt(21) * circumradius`.
    pub fn wrap_translations(&self) -> [Point; 6] {
        let a = self.cell_inner_radius_m;
        let base = [2.0 * 3f64.sqrt() * a, 4.0 * a];
        let mut out = [[0.0; 2]; 6];
        for (k, slot) in out.iter_mut().enumerate() {
            let phi = k as f64 * core::f64::consts::FRAC_PI_3;
            let (s, c) = phi.sin_cos();
            *slot = [c * base[0] - s * base[1], s * base[0] + c * base[1]];
        }
        out
    }
}

/// Minimum-image distance in meters between `a` and `b` under the 7-cell
/// wrap group: the minimum over the identity and the six cluster
/// translations applied to `b`.
pub fn wrap_distance(a: Point, b: Point, layout: &LayoutConfig) -> f64 {
    let mut best = euclid(a, b);
    for t in layout.wrap_translations() {
        let shifted = [b[0] + t[0], b[1] + t[1]];
        let d = euclid(a, shifted);
        if d < best {
            best = d;
        }
    }
    best
}

fn euclid(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Point-in-hexagon test for a flat-top hexagon centered at the origin
/// with apothem `a` (vertices on the x-axis at the circumradius).
fn in_hexagon(p: Point, a: f64) -> bool {
    let s3 = 3f64.sqrt();
    p[1].abs() <= a && (s3 * p[0] + p[1]).abs() <= 2.0 * a && (s3 * p[0] - p[1]).abs() <= 2.0 * a
}

fn sample_in_hexagon(rng: &mut impl Rng, a: f64) -> Point {
    let rc = 2.0 * a / 3f64.sqrt();
    loop {
        let p = [rng.random_range(-rc..rc), rng.random_range(-a..a)];
        if in_hexagon(p, a) {
            return p;
        }
    }
}

/// One generated network: geometry, large-scale gains and serving sets.
/// Immutable after construction.
#[derive(Clone, Debug)]
pub struct NetworkRealization {
    pub layout: LayoutConfig,
    /// RRH positions in meters, `rrh_per_cell` per virtual cell.
    pub rrh_positions: Vec<Point>,
    /// User positions in meters, uniform over the 7-hex region.
    pub user_positions: Vec<Point>,
    /// Linear large-scale gain `psi_ru * L(d_ru)`, indexed `(rrh, user)`.
    pub large_scale_gain: DMatrix<f64>,
    /// Linear shadowing factors `psi_ru`, indexed `(rrh, user)`.
    pub shadowing: DMatrix<f64>,
    /// Wrap distances in km, indexed `(rrh, user)`.
    pub distances_km: DMatrix<f64>,
    /// Serving cluster `C_u` per user: RRHs whose gain clears the threshold.
    pub clusters: Vec<Vec<usize>>,
    /// Candidate set `E_r` per RRH: users that may be served by it.
    pub served: Vec<Vec<usize>>,
}

impl NetworkRealization {
    pub fn num_rrhs(&self) -> usize {
        self.rrh_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }
}

/// Build serving clusters from a linear gain matrix: `C_u` holds every RRH
/// with gain at least `rho`; a user left empty gets the single strongest
/// RRH instead. `E_r` is the inversion of the `C_u` sets.
pub fn form_clusters(gains: &DMatrix<f64>, rho: f64) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let (num_rrhs, num_users) = gains.shape();
    let mut clusters: Vec<Vec<usize>> = Vec::with_capacity(num_users);
    for u in 0..num_users {
        let mut c: Vec<usize> = (0..num_rrhs).filter(|&r| gains[(r, u)] >= rho).collect();
        if c.is_empty() {
            let best = (0..num_rrhs)
                .max_by(|&a, &b| {
                    gains[(a, u)]
                        .partial_cmp(&gains[(b, u)])
                        .expect("gain comparison")
                })
                .expect("at least one RRH");
            c.push(best);
        }
        clusters.push(c);
    }
    let mut served: Vec<Vec<usize>> = vec![Vec::new(); num_rrhs];
    for (u, c) in clusters.iter().enumerate() {
        for &r in c {
            served[r].push(u);
        }
    }
    (clusters, served)
}

/// Generate one network realization. Deterministic given `cfg.rng_seed`.
///
/// RRHs are dropped uniformly per virtual cell; the user count is Poisson
/// with mean density times area (or fixed when configured); user positions
/// are uniform over the 7-hex region, resampled until they clear the
/// exclusion disk of every RRH under the wrap metric.
pub fn generate_network(cfg: &LayoutConfig) -> Result<NetworkRealization, NetgenError> {
    cfg.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.rng_seed);
    let a = cfg.cell_inner_radius_m;
    let centers = cfg.cell_centers();

    let mut rrh_positions = Vec::with_capacity(cfg.num_cells * cfg.rrh_per_cell);
    for center in &centers {
        for _ in 0..cfg.rrh_per_cell {
            let p = sample_in_hexagon(&mut rng, a);
            rrh_positions.push([center[0] + p[0], center[1] + p[1]]);
        }
    }

    let num_users = match cfg.fixed_user_count {
        Some(n) => n,
        None => {
            let mean = cfg.user_density_per_km2 * cfg.total_area_km2();
            Poisson::new(mean)
                .map_err(|e| NetgenError::BadConfig(format!("Poisson mean invalid: {e}")))?
                .sample(&mut rng) as usize
        }
    };

    let mut user_positions = Vec::with_capacity(num_users);
    for _ in 0..num_users {
        let mut attempts = 0;
        let p = loop {
            let cell = rng.random_range(0..cfg.num_cells);
            let local = sample_in_hexagon(&mut rng, a);
            let p = [centers[cell][0] + local[0], centers[cell][1] + local[1]];
            let clear = rrh_positions
                .iter()
                .all(|&r| wrap_distance(p, r, cfg) >= cfg.exclusion_radius_m);
            if clear {
                break p;
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(NetgenError::BadConfig(
                    "exclusion disks cover the layout; cannot place users".into(),
                ));
            }
        };
        user_positions.push(p);
    }

    let num_rrhs = rrh_positions.len();
    let shadow_dist = Normal::new(0.0, cfg.shadowing_sigma_db)
        .map_err(|e| NetgenError::BadConfig(format!("shadowing sigma invalid: {e}")))?;
    let mut shadowing = DMatrix::zeros(num_rrhs, num_users);
    let mut distances_km = DMatrix::zeros(num_rrhs, num_users);
    let mut large_scale_gain = DMatrix::zeros(num_rrhs, num_users);
    for r in 0..num_rrhs {
        for u in 0..num_users {
            let psi = db_to_lin(shadow_dist.sample(&mut rng));
            let d_km = wrap_distance(rrh_positions[r], user_positions[u], cfg) / 1000.0;
            shadowing[(r, u)] = psi;
            distances_km[(r, u)] = d_km;
            large_scale_gain[(r, u)] = psi * db_to_lin(path_loss_db(d_km)?);
        }
    }

    let (clusters, served) = form_clusters(&large_scale_gain, cfg.cluster_threshold);

    Ok(NetworkRealization {
        layout: cfg.clone(),
        rrh_positions,
        user_positions,
        large_scale_gain,
        shadowing,
        distances_km,
        clusters,
        served,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum NetgenError {
    /// Path loss evaluated at a non-positive distance.
    BadDistance(f64),
    BadConfig(String),
}

impl fmt::Display for NetgenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetgenError::BadDistance(d) => write!(f, "path loss needs d > 0, got {d}"),
            NetgenError::BadConfig(msg) => write!(f, "invalid layout config: {msg}"),
        }
    }
}

impl core::error::Error for NetgenError {}
