//! Network geometries: the `nu`-dimensional torus `{-N..N-1}^nu` and the
//! fully connected network of `2p` blocks.
//!
//! Torus sites are stored as flat indices. Site `i` has canonical coordinates
//! `c_0, .., c_{nu-1}` in `0..2N` with `i = sum_k c_k (2N)^k`; the centred
//! coordinate is `c` for `c < N` and `c - 2N` otherwise, so index 0 is the
//! origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SiteSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    inhibitory: Vec<Vec<usize>>,
    excitatory: Vec<Vec<usize>>,
    geometry: Geometry,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Torus(TorusGeometry),
    Blocks(BlockStructure),
}

impl Topology {
    pub fn n_sites(&self) -> usize {
        self.inhibitory.len()
    }

    pub fn sites(&self) -> std::ops::Range<usize> {
        0..self.n_sites()
    }

    pub fn all_sites(&self) -> SiteSet {
        self.sites().collect()
    }

    /// `D_I(i)`, ascending.
    pub fn inhibitory_neighbors(&self, i: usize) -> &[usize] {
        &self.inhibitory[i]
    }

    /// `D_E(i)`, ascending.
    pub fn excitatory_neighbors(&self, i: usize) -> &[usize] {
        &self.excitatory[i]
    }

    /// `D(i) = D_I(i) ∪ D_E(i)`, ascending.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut all: Vec<usize> = self.inhibitory[i]
            .iter()
            .chain(&self.excitatory[i])
            .copied()
            .collect();
        all.sort_unstable();
        all
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn torus(&self) -> Option<&TorusGeometry> {
        match &self.geometry {
            Geometry::Torus(t) => Some(t),
            Geometry::Blocks(_) => None,
        }
    }

    pub fn blocks(&self) -> Option<&BlockStructure> {
        match &self.geometry {
            Geometry::Blocks(b) => Some(b),
            Geometry::Torus(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry {
    nu: usize,
    half_width: usize,
    k_e: usize,
    offsets: Vec<Vec<i64>>,
}

impl TorusGeometry {
    pub fn nu(&self) -> usize {
        self.nu
    }

    /// `N`; the side length of the torus is `2N`.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn side(&self) -> usize {
        2 * self.half_width
    }

    pub fn k_e(&self) -> usize {
        self.k_e
    }

    /// Generating vectors of the excitatory neighbourhood, `D_E(i) = {i ± l}`.
    pub fn offsets(&self) -> &[Vec<i64>] {
        &self.offsets
    }

    pub fn n_sites(&self) -> usize {
        self.side().pow(self.nu as u32)
    }

    /// Canonical coordinates in `0..2N`.
    pub fn coords(&self, i: usize) -> Vec<usize> {
        let side = self.side();
        let mut rest = i;
        (0..self.nu)
            .map(|_| {
                let c = rest % side;
                rest /= side;
                c
            })
            .collect()
    }

    /// Coordinates in `-N..N`.
    pub fn centered_coords(&self, i: usize) -> Vec<i64> {
        let n = self.half_width as i64;
        self.coords(i)
            .into_iter()
            .map(|c| {
                let c = c as i64;
                if c < n {
                    c
                } else {
                    c - 2 * n
                }
            })
            .collect()
    }

    /// Flat index of an arbitrary lattice point, wrapped onto the torus.
    pub fn index(&self, point: &[i64]) -> usize {
        let side = self.side() as i64;
        point
            .iter()
            .rev()
            .fold(0usize, |acc, &c| acc * side as usize + c.rem_euclid(side) as usize)
    }

    pub fn translate(&self, i: usize, offset: &[i64], sign: i64) -> usize {
        let point: Vec<i64> = self
            .coords(i)
            .iter()
            .zip(offset)
            .map(|(&c, &o)| c as i64 + sign * o)
            .collect();
        self.index(&point)
    }

    /// `||i - j||`: sum of wrapped coordinate differences.
    pub fn distance(&self, i: usize, j: usize) -> usize {
        let side = self.side();
        self.coords(i)
            .iter()
            .zip(self.coords(j))
            .map(|(&a, b)| {
                let d = a.abs_diff(b);
                d.min(side - d)
            })
            .sum()
    }

    /// Parity of the coordinate sum; well defined because the side is even.
    pub fn is_even(&self, i: usize) -> bool {
        self.coords(i).iter().sum::<usize>() % 2 == 0
    }

    /// The checkerboard `Λ0`: even-parity sites, containing the origin.
    pub fn sublattice_lambda0(&self) -> SiteSet {
        (0..self.n_sites()).filter(|&i| self.is_even(i)).collect()
    }
}

fn excitatory_set(geom: &TorusGeometry, i: usize, offsets: &[Vec<i64>]) -> Vec<usize> {
    let mut set: Vec<usize> = offsets
        .iter()
        .flat_map(|o| [geom.translate(i, o, 1), geom.translate(i, o, -1)])
        .filter(|&j| j != i)
        .collect();
    set.sort_unstable();
    set.dedup();
    set
}

/// Symmetric excitatory offsets along the axes: `±2e_1, .., ±2e_nu`, then
/// `±4e_1, ..`, taking generators while they fit into `k_e` distinct sites.
pub fn default_offsets(nu: usize, half_width: usize, k_e: usize) -> Result<Vec<Vec<i64>>> {
    let probe = TorusGeometry {
        nu,
        half_width,
        k_e,
        offsets: Vec::new(),
    };
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut count = 0;
    let mut step = 2;
    while step <= half_width && count < k_e {
        for axis in 0..nu {
            let mut g = vec![0i64; nu];
            g[axis] = step as i64;
            let mut trial = chosen.clone();
            trial.push(g);
            let n = excitatory_set(&probe, 0, &trial).len();
            if n > count && n <= k_e {
                chosen = trial;
                count = n;
            }
            if count == k_e {
                break;
            }
        }
        step += 2;
    }
    if count != k_e {
        return Err(Error::InvalidTopology(format!(
            "no symmetric axis offsets give K_E = {k_e} excitatory neighbours on this torus"
        )));
    }
    Ok(chosen)
}

/// Builds the torus `{-N..N-1}^nu` with nearest-neighbour inhibitory links
/// and excitatory links `i ± l` for the given even-parity offsets.
pub fn build_torus(
    nu: usize,
    half_width: usize,
    k_e: usize,
    offsets: Option<Vec<Vec<i64>>>,
) -> Result<Topology> {
    if !(1..=3).contains(&nu) {
        return Err(Error::InvalidTopology(format!("nu must be 1, 2 or 3, got {nu}")));
    }
    if half_width < 2 {
        return Err(Error::InvalidTopology(format!("N must exceed 1, got {half_width}")));
    }
    if k_e == 0 || k_e >= half_width {
        return Err(Error::InvalidTopology(format!(
            "K_E must satisfy 0 < K_E < N = {half_width}, got {k_e}"
        )));
    }
    let offsets = match offsets {
        Some(o) => o,
        None => default_offsets(nu, half_width, k_e)?,
    };
    let geom = TorusGeometry {
        nu,
        half_width,
        k_e,
        offsets,
    };
    for o in &geom.offsets {
        if o.len() != nu {
            return Err(Error::InvalidTopology(format!(
                "offset {o:?} does not have {nu} coordinates"
            )));
        }
        if geom.index(o) == 0 {
            return Err(Error::InvalidTopology(format!("offset {o:?} is zero on the torus")));
        }
        if o.iter().sum::<i64>().rem_euclid(2) != 0 {
            return Err(Error::InvalidTopology(format!(
                "offset {o:?} has odd coordinate sum and would link the two sublattices"
            )));
        }
    }
    let n = geom.n_sites();
    let mut inhibitory = Vec::with_capacity(n);
    let mut excitatory = Vec::with_capacity(n);
    for i in 0..n {
        let mut nearest: Vec<usize> = (0..nu)
            .flat_map(|axis| {
                let mut e = vec![0i64; nu];
                e[axis] = 1;
                [geom.translate(i, &e, 1), geom.translate(i, &e, -1)]
            })
            .collect();
        nearest.sort_unstable();
        nearest.dedup();
        let exc = excitatory_set(&geom, i, &geom.offsets);
        if exc.len() != k_e {
            return Err(Error::InvalidTopology(format!(
                "offsets give {} excitatory neighbours, expected K_E = {k_e}",
                exc.len()
            )));
        }
        inhibitory.push(nearest);
        excitatory.push(exc);
    }
    Ok(Topology {
        inhibitory,
        excitatory,
        geometry: Geometry::Torus(geom),
    })
}

/// Partition of the sites into `2p` blocks of size `k`, grouped into `p`
/// disjoint pairs. Block indices are 0-based here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    p: usize,
    k: usize,
    blocks: Vec<Vec<usize>>,
    pairing: Vec<(usize, usize)>,
}

impl BlockStructure {
    /// Contiguous blocks `W_n = {n k, .., n k + k - 1}`.
    pub fn new(p: usize, k: usize, pairing: Vec<(usize, usize)>, allow_trivial: bool) -> Result<Self> {
        let blocks = (0..2 * p).map(|n| (n * k..(n + 1) * k).collect()).collect();
        Self::with_members(p, k, pairing, blocks, allow_trivial)
    }

    /// Blocks given explicitly as a partition of `0..2pk`.
    pub fn with_members(
        p: usize,
        k: usize,
        pairing: Vec<(usize, usize)>,
        mut blocks: Vec<Vec<usize>>,
        allow_trivial: bool,
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidTopology("p must be at least 1".into()));
        }
        if k == 0 || (k == 1 && !allow_trivial) {
            return Err(Error::InvalidTopology(format!(
                "block size k must exceed 1 (k = 1 needs the override), got {k}"
            )));
        }
        if pairing.len() != p {
            return Err(Error::InvalidTopology(format!(
                "expected {p} pairs, got {}",
                pairing.len()
            )));
        }
        let mut seen = vec![false; 2 * p];
        for &(u, v) in &pairing {
            for b in [u, v] {
                if b >= 2 * p {
                    return Err(Error::InvalidTopology(format!(
                        "block index {b} out of range 0..{}",
                        2 * p
                    )));
                }
                if seen[b] {
                    return Err(Error::InvalidTopology(format!(
                        "pairs overlap at block {b}"
                    )));
                }
                seen[b] = true;
            }
        }
        let n = 2 * p * k;
        if blocks.len() != 2 * p {
            return Err(Error::InvalidTopology(format!(
                "expected {} blocks, got {}",
                2 * p,
                blocks.len()
            )));
        }
        let mut owner = vec![usize::MAX; n];
        for (b, members) in blocks.iter_mut().enumerate() {
            members.sort_unstable();
            if members.len() != k {
                return Err(Error::InvalidTopology(format!(
                    "block {b} has {} sites, expected {k}",
                    members.len()
                )));
            }
            for &x in members.iter() {
                if x >= n || owner[x] != usize::MAX {
                    return Err(Error::InvalidTopology(format!(
                        "site {x} is out of range or in two blocks"
                    )));
                }
                owner[x] = b;
            }
        }
        Ok(Self {
            p,
            k,
            blocks,
            pairing,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_sites(&self) -> usize {
        2 * self.p * self.k
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, n: usize) -> &[usize] {
        &self.blocks[n]
    }

    pub fn pairing(&self) -> &[(usize, usize)] {
        &self.pairing
    }

    pub fn block_of(&self, site: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.binary_search(&site).is_ok())
            .expect("site inside the network")
    }

    /// Block paired with block `n`.
    pub fn partner(&self, n: usize) -> usize {
        self.pairing
            .iter()
            .find_map(|&(u, v)| {
                if u == n {
                    Some(v)
                } else if v == n {
                    Some(u)
                } else {
                    None
                }
            })
            .expect("pairing covers every block")
    }

    /// Whether sites `x` and `y` lie in paired blocks.
    pub fn are_partners(&self, x: usize, y: usize) -> bool {
        self.partner(self.block_of(x)) == self.block_of(y)
    }

    pub fn union_of(&self, block_ids: &[usize]) -> SiteSet {
        block_ids
            .iter()
            .flat_map(|&b| self.blocks[b].iter().copied())
            .collect()
    }
}

/// Fully connected network over the given block structure; every link is
/// inhibitory.
pub fn build_block_network(blocks: BlockStructure) -> Topology {
    let n = blocks.n_sites();
    let inhibitory = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).collect())
        .collect();
    Topology {
        inhibitory,
        excitatory: vec![Vec::new(); n],
        geometry: Geometry::Blocks(blocks),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_symmetric(t: &Topology) {
        for i in t.sites() {
            let d = t.neighbors(i);
            assert!(!d.contains(&i));
            for j in d {
                assert!(t.neighbors(j).contains(&i), "{j} in D({i}) but not conversely");
            }
        }
    }

    #[test]
    fn ring_of_four() {
        let t = build_torus(1, 2, 1, None).unwrap();
        assert_eq!(t.n_sites(), 4);
        for i in t.sites() {
            assert_eq!(t.inhibitory_neighbors(i).len(), 2);
        }
        assert_eq!(t.inhibitory_neighbors(0), &[1, 3]);
    }

    #[test]
    fn square_torus_has_2nu_nearest() {
        let t = build_torus(2, 2, 1, None).unwrap();
        assert_eq!(t.n_sites(), 16);
        assert!(t.sites().all(|i| t.inhibitory_neighbors(i).len() == 4));
        assert_symmetric(&t);
    }

    #[test]
    fn rejects_large_k_e_and_odd_offsets() {
        assert!(build_torus(1, 2, 2, None).is_err());
        assert!(build_torus(1, 5, 2, Some(vec![vec![1]])).is_err());
        assert!(build_torus(1, 5, 2, Some(vec![vec![10]])).is_err());
        assert!(build_torus(4, 5, 2, None).is_err());
        assert!(build_torus(1, 1, 1, None).is_err());
    }

    #[test]
    fn lambda0_checkerboard() {
        let t = build_torus(1, 2, 1, None).unwrap();
        let g = t.torus().unwrap();
        assert_eq!(g.sublattice_lambda0(), SiteSet::from([0, 2]));

        let t = build_torus(2, 2, 1, None).unwrap();
        let g = t.torus().unwrap();
        let l0 = g.sublattice_lambda0();
        assert_eq!(l0.len(), 8);
        assert!(l0.contains(&0));
        for &x in &l0 {
            for &y in &l0 {
                assert_ne!(g.distance(x, y), 1);
            }
        }
    }

    #[test]
    fn distances() {
        let t = build_torus(1, 2, 1, None).unwrap();
        let g = t.torus().unwrap();
        assert_eq!(g.distance(0, 3), 1);
        assert_eq!(g.distance(2, 2), 0);
        let t = build_torus(2, 2, 1, None).unwrap();
        let g = t.torus().unwrap();
        assert_eq!(g.distance(g.index(&[0, 0]), g.index(&[1, 2])), 3);
        assert_eq!(g.centered_coords(g.index(&[-1, -2])), vec![-1, -2]);
    }

    #[test]
    fn default_offsets_ring() {
        assert_eq!(default_offsets(1, 5, 2).unwrap(), vec![vec![2]]);
        assert_eq!(default_offsets(1, 5, 4).unwrap(), vec![vec![2], vec![4]]);
        assert_eq!(default_offsets(2, 3, 2).unwrap(), vec![vec![2, 0]]);
        assert_eq!(default_offsets(2, 3, 4).unwrap(), vec![vec![2, 0], vec![0, 2]]);
        assert!(default_offsets(1, 5, 3).is_err());
    }

    #[test]
    fn block_network_fully_connected() {
        let b = BlockStructure::new(2, 2, vec![(0, 1), (2, 3)], false).unwrap();
        let t = build_block_network(b);
        assert_eq!(t.n_sites(), 8);
        assert!(t.sites().all(|i| t.neighbors(i).len() == 7));
        let b = t.blocks().unwrap();
        assert!(b.are_partners(0, 3));
        assert!(!b.are_partners(0, 4));
        assert!(!b.are_partners(0, 1));
    }

    #[test]
    fn block_structure_errors() {
        assert!(BlockStructure::new(2, 2, vec![(0, 1), (1, 2)], false).is_err());
        assert!(BlockStructure::new(2, 2, vec![(0, 1)], false).is_err());
        assert!(BlockStructure::new(1, 1, vec![(0, 1)], false).is_err());
        assert!(BlockStructure::new(1, 1, vec![(0, 1)], true).is_ok());
        let b = BlockStructure::new(1, 3, vec![(0, 1)], false).unwrap();
        assert_eq!(b.n_sites(), 6);
        assert_eq!(b.blocks().len(), 2);
    }

    proptest! {
        #[test]
        fn torus_invariants(nu in 1usize..=3, n in 2usize..=5, k_pick in 0usize..4) {
            let candidates: Vec<usize> = (1..n).collect();
            let k_e = candidates[k_pick % candidates.len()];
            prop_assume!(nu < 3 || n <= 3);
            let Ok(t) = build_torus(nu, n, k_e, None) else { return Ok(()); };
            let g = t.torus().unwrap();
            let l0 = g.sublattice_lambda0();
            assert_symmetric(&t);
            for i in t.sites() {
                prop_assert_eq!(t.inhibitory_neighbors(i).len(), 2 * nu);
                prop_assert_eq!(t.excitatory_neighbors(i).len(), k_e);
                for &j in t.inhibitory_neighbors(i) {
                    prop_assert_eq!(g.distance(i, j), 1);
                }
                for &j in t.excitatory_neighbors(i) {
                    prop_assert_eq!(l0.contains(&i), l0.contains(&j));
                }
            }
        }

        #[test]
        fn block_invariants(p in 1usize..4, k in 2usize..4, shuffle in any::<u64>()) {
            let mut ids: Vec<usize> = (0..2 * p).collect();
            let mut s = shuffle;
            for i in (1..ids.len()).rev() {
                let j = (s % (i as u64 + 1)) as usize;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                ids.swap(i, j);
            }
            let pairing = ids.chunks(2).map(|c| (c[0], c[1])).collect();
            let b = BlockStructure::new(p, k, pairing, false).unwrap();
            let t = build_block_network(b.clone());
            assert_symmetric(&t);
            prop_assert_eq!(t.n_sites(), 2 * p * k);
            for n in 0..2 * p {
                prop_assert_eq!(b.partner(b.partner(n)), n);
                prop_assert_ne!(b.partner(n), n);
            }
        }
    }
}
