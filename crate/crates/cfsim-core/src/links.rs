//! Flat indexing of candidate (RRH, user) links.
//!
//! A link exists for every pair with `u` in `E_r` (equivalently `r` in
//! `C_u`). The solver, the baselines and the rate evaluators all address
//! per-link state (beamformers, schedule flags, auxiliaries) through the
//! dense link ids defined here.

use alloc::vec;
use alloc::vec::Vec;

use crate::netgen::NetworkRealization;

/// One candidate link: RRH `rrh` may serve user `user`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub rrh: usize,
    pub user: usize,
}

/// Dense enumeration of the candidate links of a realization.
#[derive(Clone, Debug)]
pub struct LinkSet {
    links: Vec<Link>,
    by_rrh: Vec<Vec<usize>>,
    by_user: Vec<Vec<usize>>,
    num_rrhs: usize,
    num_users: usize,
}

impl LinkSet {
    /// Enumerate links from per-RRH candidate sets `E_r`, in (RRH, user)
    /// lexicographic order.
    pub fn from_served(served: &[Vec<usize>], num_users: usize) -> Self {
        let mut links = Vec::new();
        let mut by_rrh = Vec::with_capacity(served.len());
        let mut by_user = vec![Vec::new(); num_users];
        for (r, users) in served.iter().enumerate() {
            let mut ids = Vec::with_capacity(users.len());
            for &u in users {
                let id = links.len();
                links.push(Link { rrh: r, user: u });
                ids.push(id);
                by_user[u].push(id);
            }
            by_rrh.push(ids);
        }
        LinkSet {
            links,
            by_rrh,
            by_user,
            num_rrhs: served.len(),
            num_users,
        }
    }

    pub fn from_network(net: &NetworkRealization) -> Self {
        Self::from_served(&net.served, net.num_users())
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn num_rrhs(&self) -> usize {
        self.num_rrhs
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    #[inline]
    pub fn link(&self, id: usize) -> Link {
        self.links[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Link)> + '_ {
        self.links.iter().copied().enumerate()
    }

    /// Link ids of RRH `r` (its candidate set `E_r`).
    #[inline]
    pub fn of_rrh(&self, r: usize) -> &[usize] {
        &self.by_rrh[r]
    }

    /// Link ids of user `u` (its serving cluster `C_u`).
    #[inline]
    pub fn of_user(&self, u: usize) -> &[usize] {
        &self.by_user[u]
    }
}
