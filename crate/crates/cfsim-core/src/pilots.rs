//! Location-based pilot assignment.
//!
//! Users are clustered bottom-up with Ward's minimum-variance linkage over
//! wrapped distances until a full merge tree exists; backtracking from the
//! root emits a group as soon as a subtree holds at most `tau_p` users.
//! Each group then receives the orthogonal pilot sequences in uniformly
//! random order, so pilot reuse happens only across groups, i.e. between
//! users that the tree placed far apart.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::netgen::{wrap_distance, LayoutConfig, NetworkRealization, Point};

/// Pilot sequences and co-pilot bookkeeping for one realization.
#[derive(Clone, Debug)]
pub struct PilotAssignment {
    /// Pilot sequence length in symbols.
    pub tau_p: usize,
    /// Pilot index per user, in `0..tau_p`.
    pub pilot_index: Vec<usize>,
    /// Per user, the users sharing its pilot (including the user itself).
    pub copilot_sets: Vec<Vec<usize>>,
    /// `tau_p x tau_p` unitary DFT matrix; row `k` is pilot sequence `k`.
    pub pilot_matrix: DMatrix<Complex64>,
}

impl PilotAssignment {
    /// Pilot sequence of user `u` as a row slice of the DFT matrix.
    pub fn sequence(&self, u: usize) -> nalgebra::RowDVector<Complex64> {
        self.pilot_matrix.row(self.pilot_index[u]).into_owned()
    }
}

/// Rows of the unitary DFT matrix of size `tau_p`; exactly orthonormal.
pub fn dft_pilot_matrix(tau_p: usize) -> DMatrix<Complex64> {
    let norm = 1.0 / (tau_p as f64).sqrt();
    DMatrix::from_fn(tau_p, tau_p, |k, t| {
        let phase = -2.0 * core::f64::consts::PI * (k * t % tau_p) as f64 / tau_p as f64;
        Complex64::new(phase.cos() * norm, phase.sin() * norm)
    })
}

struct MergeNode {
    left: usize,
    right: usize,
    size: usize,
}

/// Group users with Ward-linkage agglomerative clustering so that every
/// group holds at most `tau_p` users. Groups partition the user set; the
/// merge order uses wrapped distances and breaks ties on the lowest pair
/// of cluster indices.
pub fn hac_group(positions: &[Point], tau_p: usize, layout: &LayoutConfig) -> Vec<Vec<usize>> {
    assert!(tau_p >= 1, "tau_p must be at least 1");
    let n = positions.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![vec![0]];
    }

    // Squared dissimilarities over active cluster slots; slot j folds into
    // slot i (i < j) on merge, per the Lance-Williams recurrence for Ward.
    let mut dist2 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = wrap_distance(positions[i], positions[j], layout);
            dist2[(i, j)] = d * d;
            dist2[(j, i)] = d * d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut sizes: Vec<f64> = vec![1.0; n];
    let mut node_of_slot: Vec<usize> = (0..n).collect();
    let mut nodes: Vec<MergeNode> = Vec::with_capacity(n - 1);

    for _ in 0..(n - 1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist2[(i, j)];
                match best {
                    Some((bd, _, _)) if bd <= d => {}
                    _ => best = Some((d, i, j)),
                }
            }
        }
        let (d_ab, i, j) = best.expect("two active clusters remain");
        let (na, nb) = (sizes[i], sizes[j]);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nc = sizes[k];
            let updated = ((na + nc) * dist2[(i, k)] + (nb + nc) * dist2[(j, k)] - nc * d_ab)
                / (na + nb + nc);
            dist2[(i, k)] = updated;
            dist2[(k, i)] = updated;
        }
        let id = n + nodes.len();
        nodes.push(MergeNode {
            left: node_of_slot[i],
            right: node_of_slot[j],
            size: (na + nb) as usize,
        });
        node_of_slot[i] = id;
        sizes[i] = na + nb;
        active[j] = false;
    }

    // Backtrack from the root, emitting the first node on each branch that
    // satisfies the size bound (leaves always do).
    let node_size = |id: usize| if id < n { 1 } else { nodes[id - n].size };
    let mut groups = Vec::new();
    let mut stack = vec![n + nodes.len() - 1];
    while let Some(id) = stack.pop() {
        if node_size(id) <= tau_p {
            let mut members = Vec::with_capacity(node_size(id));
            let mut leaves = vec![id];
            while let Some(v) = leaves.pop() {
                if v < n {
                    members.push(v);
                } else {
                    leaves.push(nodes[v - n].left);
                    leaves.push(nodes[v - n].right);
                }
            }
            members.sort_unstable();
            groups.push(members);
        } else {
            stack.push(nodes[id - n].right);
            stack.push(nodes[id - n].left);
        }
    }
    groups
}

/// Assign the `tau_p` orthogonal pilots within each group in uniformly
/// random order and derive the co-pilot sets across groups.
pub fn assign_pilots(
    groups: &[Vec<usize>],
    tau_p: usize,
    rng: &mut impl Rng,
) -> Result<PilotAssignment, PilotError> {
    let num_users: usize = groups.iter().map(|g| g.len()).sum();
    let mut pilot_index = vec![usize::MAX; num_users];
    for group in groups {
        if group.len() > tau_p {
            return Err(PilotError::GroupTooLarge {
                group_size: group.len(),
                tau_p,
            });
        }
        let mut indices: Vec<usize> = (0..tau_p).collect();
        indices.shuffle(rng);
        for (&u, &pilot) in group.iter().zip(indices.iter()) {
            if u >= num_users || pilot_index[u] != usize::MAX {
                return Err(PilotError::BadPartition(format!(
                    "user {u} repeated or out of range in groups"
                )));
            }
            pilot_index[u] = pilot;
        }
    }
    if pilot_index.contains(&usize::MAX) {
        return Err(PilotError::BadPartition("groups do not cover all users".into()));
    }

    let mut by_pilot: Vec<Vec<usize>> = vec![Vec::new(); tau_p];
    for (u, &p) in pilot_index.iter().enumerate() {
        by_pilot[p].push(u);
    }
    let copilot_sets = pilot_index.iter().map(|&p| by_pilot[p].clone()).collect();

    Ok(PilotAssignment {
        tau_p,
        pilot_index,
        copilot_sets,
        pilot_matrix: dft_pilot_matrix(tau_p),
    })
}

/// Cluster the users of a realization and assign pilots in one step.
pub fn assign_for_network(
    net: &NetworkRealization,
    tau_p: usize,
    rng: &mut impl Rng,
) -> Result<PilotAssignment, PilotError> {
    let groups = hac_group(&net.user_positions, tau_p, &net.layout);
    assign_pilots(&groups, tau_p, rng)
}

#[derive(Clone, Debug, PartialEq)]
pub enum PilotError {
    GroupTooLarge { group_size: usize, tau_p: usize },
    BadPartition(String),
}

impl fmt::Display for PilotError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PilotError::GroupTooLarge { group_size, tau_p } => {
                write!(f, "group of {group_size} users exceeds tau_p = {tau_p}")
            }
            PilotError::BadPartition(msg) => write!(f, "invalid user grouping: {msg}"),
        }
    }
}

impl core::error::Error for PilotError {}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn layout() -> LayoutConfig {
        LayoutConfig {
            num_cells: 7,
            rrh_per_cell: 1,
            antennas_per_rrh: 1,
            cell_inner_radius_m: 500.0,
            user_density_per_km2: 50.0,
            exclusion_radius_m: 20.0,
            shadowing_sigma_db: 4.0,
            cluster_threshold: 1e-10,
            fixed_user_count: None,
            rng_seed: 0,
        }
    }

    #[test]
    fn few_users_form_a_single_group() {
        let positions = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
        let groups = hac_group(&positions, 8, &layout());
        assert_eq!(groups, vec![vec![0, 1, 2]]);
    }

    // Ward cost of a partition: total within-group squared deviation from
    // the group centroid (plain Euclidean; the points sit far from any
    // wrap image so the metrics agree).
    fn ward_cost(partition: &[Vec<usize>], positions: &[Point]) -> f64 {
        partition
            .iter()
            .map(|group| {
                let n = group.len() as f64;
                let cx = group.iter().map(|&u| positions[u][0]).sum::<f64>() / n;
                let cy = group.iter().map(|&u| positions[u][1]).sum::<f64>() / n;
                group
                    .iter()
                    .map(|&u| {
                        let dx = positions[u][0] - cx;
                        let dy = positions[u][1] - cy;
                        dx * dx + dy * dy
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    // All partitions of {0..n} into blocks of size <= cap.
    fn partitions(n: usize, cap: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        let mut current: Vec<Vec<usize>> = Vec::new();
        fn recurse(
            u: usize,
            n: usize,
            cap: usize,
            current: &mut Vec<Vec<usize>>,
            out: &mut Vec<Vec<Vec<usize>>>,
        ) {
            if u == n {
                out.push(current.clone());
                return;
            }
            for b in 0..current.len() {
                if current[b].len() < cap {
                    current[b].push(u);
                    recurse(u + 1, n, cap, current, out);
                    current[b].pop();
                }
            }
            current.push(vec![u]);
            recurse(u + 1, n, cap, current, out);
            current.pop();
        }
        recurse(0, n, cap, &mut current, &mut out);
        out
    }

    #[test]
    fn well_separated_pairs_match_min_ward_partition() {
        let positions = [[0.0, 0.0], [5.0, 0.0], [400.0, 0.0], [405.0, 0.0]];
        let groups = hac_group(&positions, 2, &layout());
        // brute force over partitions with the minimum number of blocks
        // (singletons trivially minimize the variance otherwise)
        let best = partitions(4, 2)
            .into_iter()
            .filter(|p| p.len() == 2)
            .min_by(|a, b| {
                ward_cost(a, &positions)
                    .partial_cmp(&ward_cost(b, &positions))
                    .unwrap()
            })
            .unwrap();
        let mut got = groups.clone();
        got.sort();
        let mut want: Vec<Vec<usize>> = best;
        want.sort();
        assert_eq!(got, want);
        assert_eq!(got, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn groups_partition_users_within_bound() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        for tau_p in [1usize, 3, 7] {
            let positions: Vec<Point> = (0..23)
                .map(|_| [rng.random_range(-800.0..800.0), rng.random_range(-800.0..800.0)])
                .collect();
            let groups = hac_group(&positions, tau_p, &layout());
            let mut seen = vec![false; positions.len()];
            for g in &groups {
                assert!(g.len() <= tau_p && !g.is_empty());
                for &u in g {
                    assert!(!seen[u], "user {u} in two groups");
                    seen[u] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn dft_rows_are_orthonormal() {
        for tau_p in [1usize, 2, 8, 16] {
            let phi = dft_pilot_matrix(tau_p);
            let gram = &phi * phi.adjoint();
            for k in 0..tau_p {
                for l in 0..tau_p {
                    let want = if k == l { 1.0 } else { 0.0 };
                    assert!(
                        (gram[(k, l)] - Complex64::new(want, 0.0)).norm() <= 1e-12,
                        "gram[{k},{l}] = {}",
                        gram[(k, l)]
                    );
                }
            }
        }
    }

    #[test]
    fn single_user_is_its_own_copilot_set() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let pa = assign_pilots(&[vec![0]], 4, &mut rng).unwrap();
        assert_eq!(pa.copilot_sets[0], vec![0]);
    }

    #[test]
    fn full_groups_reuse_every_pilot_exactly_twice() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let tau_p = 4;
        let groups = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        let pa = assign_pilots(&groups, tau_p, &mut rng).unwrap();
        for u in 0..8 {
            assert_eq!(pa.copilot_sets[u].len(), 2, "user {u}");
            assert!(pa.copilot_sets[u].contains(&u));
        }
        let mut counts = vec![0usize; tau_p];
        for &p in &pa.pilot_index {
            counts[p] += 1;
        }
        assert!(counts.iter().all(|&c| c == 2));
    }

    #[test]
    fn copilot_sets_match_brute_force_inversion() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let groups = vec![vec![0, 1, 2], vec![3, 4], vec![5, 6, 7, 8]];
        let pa = assign_pilots(&groups, 5, &mut rng).unwrap();
        for u in 0..9 {
            let expect: Vec<usize> = (0..9)
                .filter(|&v| pa.pilot_index[v] == pa.pilot_index[u])
                .collect();
            assert_eq!(pa.copilot_sets[u], expect);
        }
        // pilots within a group never collide
        for g in &groups {
            for (a, &u) in g.iter().enumerate() {
                for &v in &g[a + 1..] {
                    assert_ne!(pa.pilot_index[u], pa.pilot_index[v]);
                }
            }
        }
    }

    #[test]
    fn oversized_group_is_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let err = assign_pilots(&[vec![0, 1, 2]], 2, &mut rng).unwrap_err();
        assert!(matches!(err, PilotError::GroupTooLarge { .. }));
    }
}
