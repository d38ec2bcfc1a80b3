//! Small numeric helpers shared across the crate: dB conversions, seed
//! derivation and solves of complex Hermitian positive definite systems.

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Convert a power ratio in dB to linear scale.
#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to dB.
#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Convert dBm to watts.
#[inline]
pub fn dbm_to_watt(dbm: f64) -> f64 {
    db_to_lin(dbm - 30.0)
}

/// Convert watts to dBm.
#[inline]
pub fn watt_to_dbm(watt: f64) -> f64 {
    lin_to_db(watt) + 30.0
}

/// Derive a child seed from a master seed and a tag path.
///
/// Separate tag paths give statistically independent streams, so e.g. the
/// fading draw for slot 7 of realization 3 is the same no matter which
/// scheme consumes it. Uses SplitMix64 steps, one per tag.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = master;
    for &tag in tags {
        state = splitmix64(state ^ tag.wrapping_mul(0x9e3779b97f4a7c15));
    }
    splitmix64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Hermitian inner product `sum conj(a_i) b_i`.
#[inline]
pub fn herm_dot(a: &DVector<Complex64>, b: &DVector<Complex64>) -> Complex64 {
    a.dotc(b)
}

/// Cholesky factor of a complex Hermitian positive definite matrix,
/// escalating a diagonal jitter if the factorization fails. Returns the
/// factorization and the jitter that was required (0.0 in the PD case).
pub fn cholesky_with_jitter(
    a: &DMatrix<Complex64>,
) -> (Cholesky<Complex64, Dyn>, f64) {
    if let Some(chol) = Cholesky::new(a.clone()) {
        return (chol, 0.0);
    }
    let n = a.nrows();
    let scale = a.diagonal().iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut jitter = 1e-12 * scale.max(1.0);
    loop {
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += Complex64::new(jitter, 0.0);
        }
        if let Some(chol) = Cholesky::new(shifted) {
            log::warn!("singular Hermitian system, added jitter {jitter:e}");
            return (chol, jitter);
        }
        jitter *= 10.0;
    }
}

/// Sample median. Returns NaN on an empty slice.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in median input"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_round_trip() {
        for &db in &[-113.447, -30.0, 0.0, 17.2] {
            assert!((lin_to_db(db_to_lin(db)) - db).abs() < 1e-12);
        }
        assert!((dbm_to_watt(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watt(20.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn derived_seeds_differ_by_tag() {
        let a = derive_seed(42, &[0, 1]);
        let b = derive_seed(42, &[0, 2]);
        let c = derive_seed(42, &[1, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(42, &[0, 1]));
    }

    #[test]
    fn jitter_recovers_singular_system() {
        let a = DMatrix::<Complex64>::zeros(3, 3);
        let (chol, jitter) = cholesky_with_jitter(&a);
        assert!(jitter > 0.0);
        let x = chol.solve(&DVector::from_element(3, Complex64::new(1.0, 0.0)));
        assert!(x.iter().all(|c| c.re.is_finite()));
    }

    #[test]
    fn median_handles_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
