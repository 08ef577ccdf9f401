//! Inductive ergodic/transient classification over the subset lattice.
//!
//! Subsets of a world `S` are classified by increasing cardinality:
//!
//! - singletons are ergodic;
//! - `W` is transient if some ergodic proper `U ⊂ W` has positive drift on
//!   every site of `W ∖ U` (then `M = W ∖ U` is a trap of the restriction to `W`);
//! - `W` is ergodic if no proper subset is unknown and every ergodic proper
//!   `U ⊂ W` has negative drift on every site of `W ∖ U`;
//! - otherwise `W` is unknown.
//!
//! Drifts whose magnitude does not exceed the tolerance count as neither sign.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frequencies::solve_balance;
use super::stats::{mean_half_width, FiringStats};
use crate::dynamics::{SimState, Simulator};
use crate::error::{Error, Result};
use crate::network::{Network, Sign};
use crate::stochastic::{DistributionSpec, RngHandle};
use crate::SiteSet;

/// Drift tolerance of the analytic method.
pub const ANALYTIC_TOLERANCE: f64 = 1e-9;

/// Largest world classified exhaustively by default.
pub const DEFAULT_MAX_SITES: usize = 16;

const HARD_MAX_SITES: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub horizon: f64,
    pub burn_in_fraction: f64,
    pub batches: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for McOptions {
    fn default() -> Self {
        Self {
            horizon: 5_000.0,
            burn_in_fraction: 0.2,
            batches: 20,
            confidence: 0.95,
            seed: 0,
        }
    }
}

/// How the stationary rates of ergodic subsets are obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Drift balance; all-inhibitory worlds only.
    Analytic,
    /// Simulation with batch-means confidence intervals.
    MonteCarlo(McOptions),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_sites: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_sites: DEFAULT_MAX_SITES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ergodic,
    Transient,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Trap `M ⊂ W` for a transient verdict.
    pub witness: Option<SiteSet>,
}

/// Drift of each target site and the tolerance it must beat.
struct FieldEstimate {
    drift: Vec<f64>,
    tolerance: Vec<f64>,
}

impl FieldEstimate {
    fn positive(&self, k: usize) -> bool {
        self.drift[k] > self.tolerance[k]
    }

    fn negative(&self, k: usize) -> bool {
        self.drift[k] < -self.tolerance[k]
    }
}

fn drift_from(network: &Network, sites: &[usize], total: &[f64], spont: &[f64], j: usize) -> f64 {
    let mut v = -1.0;
    for (k, &i) in sites.iter().enumerate() {
        if let Some(link) = network.link(i, j) {
            let r = match link.sign {
                Sign::Inhibitory => total[k],
                Sign::Excitatory => spont[k],
            };
            v -= link.mean_theta() * r;
        }
    }
    v
}

/// Field of the restriction to `sites` at `targets`; `None` when its rates
/// cannot be established (no positive balance solution, or a silent site).
fn estimate_field(
    network: &Network,
    sites: &[usize],
    targets: &[usize],
    method: &Method,
    stream: u64,
) -> Result<Option<FieldEstimate>> {
    match method {
        Method::Analytic => {
            let Some(rates) = solve_balance(network, sites) else {
                return Ok(None);
            };
            let drift = targets
                .iter()
                .map(|&j| drift_from(network, sites, &rates, &rates, j))
                .collect();
            Ok(Some(FieldEstimate {
                drift,
                tolerance: vec![ANALYTIC_TOLERANCE; targets.len()],
            }))
        }
        Method::MonteCarlo(opt) => {
            let stats = simulate_restriction(network, sites, opt, stream)?;
            if sites.iter().any(|&i| stats.total(i) == 0) {
                return Ok(None);
            }
            let len = stats.window_length();
            let total: Vec<f64> = sites.iter().map(|&i| stats.total(i) as f64 / len).collect();
            let spont: Vec<f64> = sites.iter().map(|&i| stats.spontaneous(i) as f64 / len).collect();
            let bl = stats.batch_length();
            let per_batch: Vec<(Vec<f64>, Vec<f64>)> = (0..stats.batches())
                .map(|b| {
                    (
                        sites.iter().map(|&i| stats.batch_total(b)[i] as f64 / bl).collect(),
                        sites.iter().map(|&i| stats.batch_spontaneous(b)[i] as f64 / bl).collect(),
                    )
                })
                .collect();
            let mut drift = Vec::with_capacity(targets.len());
            let mut tolerance = Vec::with_capacity(targets.len());
            for &j in targets {
                drift.push(drift_from(network, sites, &total, &spont, j));
                let samples: Vec<f64> = per_batch
                    .iter()
                    .map(|(t, s)| drift_from(network, sites, t, s, j))
                    .collect();
                tolerance.push(mean_half_width(&samples, opt.confidence).1);
            }
            Ok(Some(FieldEstimate { drift, tolerance }))
        }
    }
}

fn simulate_restriction(network: &Network, sites: &[usize], opt: &McOptions, stream: u64) -> Result<FiringStats> {
    if !(opt.horizon > 0.0) || opt.batches < 2 {
        return Err(Error::SimulationBudget(
            "Monte-Carlo classification needs a positive horizon and at least two batches".into(),
        ));
    }
    let w: SiteSet = sites.iter().copied().collect();
    let restriction = network.restrict(&w)?;
    let init = DistributionSpec::unit_exponential();
    let state = SimState::init_with_rng(network, &restriction, &init, RngHandle::with_stream(opt.seed, stream));
    let mut sim = Simulator::new(network, state)?;
    let mut stats = FiringStats::for_run(network.n_sites(), 0.0, opt.horizon, opt.burn_in_fraction, opt.batches)
        .with_reservoir(0, opt.seed);
    sim.run(opt.horizon, &mut stats);
    Ok(stats)
}

/// Memoized classification of every non-empty subset of a world.
#[derive(Debug, Clone)]
pub struct SubsetLattice {
    world: Vec<usize>,
    verdict: Vec<Verdict>,
    /// Bits of `world ∖ U` with strictly positive drift, for ergodic `U`.
    pos: Vec<u32>,
    /// Bits of `world ∖ U` with strictly negative drift, for ergodic `U`.
    neg: Vec<u32>,
    /// For transient `W`, the trap bits `M`.
    witness: Vec<u32>,
}

impl SubsetLattice {
    pub fn build(network: &Network, world: &SiteSet, method: &Method, budget: Budget) -> Result<Self> {
        let m = world.len();
        if m == 0 {
            return Err(Error::InvalidSiteSet("classification needs a non-empty set".into()));
        }
        if let Some(&bad) = world.iter().find(|&&i| i >= network.n_sites()) {
            return Err(Error::InvalidSiteSet(format!("site {bad} outside the network")));
        }
        let max = budget.max_sites.min(HARD_MAX_SITES);
        if m > max {
            return Err(Error::BudgetExceeded { sites: m, max });
        }
        if *method == Method::Analytic && !network.all_inhibitory_within(world) {
            return Err(Error::InvalidConnections(
                "analytic classification needs inhibitory links only".into(),
            ));
        }
        let world: Vec<usize> = world.iter().copied().collect();
        let size = 1usize << m;
        let mut lattice = Self {
            world,
            verdict: vec![Verdict::Unknown; size],
            pos: vec![0; size],
            neg: vec![0; size],
            witness: vec![0; size],
        };
        let mut levels: Vec<Vec<u32>> = vec![Vec::new(); m + 1];
        for mask in 1..size as u32 {
            levels[mask.count_ones() as usize].push(mask);
        }
        let full = (size - 1) as u32;
        for level in &levels[1..] {
            let done = &lattice;
            let results: Vec<Result<(u32, Verdict, u32, u32, u32)>> = level
                .par_iter()
                .map(|&mask| {
                    let (verdict, witness) = done.decide(mask);
                    let (verdict, pos, neg) = if verdict == Verdict::Ergodic && mask != full {
                        match done.field_signs(network, mask, method)? {
                            Some((p, n)) => (verdict, p, n),
                            None => (Verdict::Unknown, 0, 0),
                        }
                    } else if verdict == Verdict::Ergodic && done.rates_fail(network, mask, method)? {
                        (Verdict::Unknown, 0, 0)
                    } else {
                        (verdict, 0, 0)
                    };
                    Ok((mask, verdict, pos, neg, witness))
                })
                .collect();
            for r in results {
                let (mask, v, p, n, w) = r?;
                let k = mask as usize;
                lattice.verdict[k] = v;
                lattice.pos[k] = p;
                lattice.neg[k] = n;
                lattice.witness[k] = w;
            }
        }
        Ok(lattice)
    }

    fn decide(&self, mask: u32) -> (Verdict, u32) {
        if mask.count_ones() == 1 {
            return (Verdict::Ergodic, 0);
        }
        let mut unknown = false;
        let mut all_negative = true;
        let mut u = (mask - 1) & mask;
        while u != 0 {
            match self.verdict[u as usize] {
                Verdict::Ergodic => {
                    let rest = mask & !u;
                    if rest & !self.pos[u as usize] == 0 {
                        return (Verdict::Transient, rest);
                    }
                    if rest & !self.neg[u as usize] != 0 {
                        all_negative = false;
                    }
                }
                Verdict::Unknown => unknown = true,
                Verdict::Transient => {}
            }
            u = (u - 1) & mask;
        }
        if all_negative && !unknown {
            (Verdict::Ergodic, 0)
        } else {
            (Verdict::Unknown, 0)
        }
    }

    fn field_signs(&self, network: &Network, mask: u32, method: &Method) -> Result<Option<(u32, u32)>> {
        let sites = self.sites_of(mask);
        let target_bits: Vec<usize> = (0..self.world.len()).filter(|b| mask & (1 << b) == 0).collect();
        let targets: Vec<usize> = target_bits.iter().map(|&b| self.world[b]).collect();
        let Some(f) = estimate_field(network, &sites, &targets, method, mask as u64)? else {
            return Ok(None);
        };
        let (mut pos, mut neg) = (0u32, 0u32);
        for (k, &b) in target_bits.iter().enumerate() {
            if f.positive(k) {
                pos |= 1 << b;
            }
            if f.negative(k) {
                neg |= 1 << b;
            }
        }
        Ok(Some((pos, neg)))
    }

    fn rates_fail(&self, network: &Network, mask: u32, method: &Method) -> Result<bool> {
        let sites = self.sites_of(mask);
        Ok(estimate_field(network, &sites, &[], method, mask as u64)?.is_none())
    }

    fn sites_of(&self, mask: u32) -> Vec<usize> {
        (0..self.world.len())
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| self.world[b])
            .collect()
    }

    fn mask_of(&self, set: &SiteSet) -> Result<u32> {
        let mut mask = 0u32;
        for i in set {
            let b = self
                .world
                .binary_search(i)
                .map_err(|_| Error::InvalidSiteSet(format!("site {i} outside the classified world")))?;
            mask |= 1 << b;
        }
        Ok(mask)
    }

    pub fn world(&self) -> SiteSet {
        self.world.iter().copied().collect()
    }

    pub fn classification(&self, w: &SiteSet) -> Result<Classification> {
        let mask = self.mask_of(w)?;
        if mask == 0 {
            return Err(Error::InvalidSiteSet("cannot classify the empty set".into()));
        }
        let verdict = self.verdict[mask as usize];
        let witness = (verdict == Verdict::Transient).then(|| self.sites_of(self.witness[mask as usize]).into_iter().collect());
        Ok(Classification { verdict, witness })
    }

    /// Whether `m ⊂ world` is a trap of the whole world: its complement is
    /// ergodic and drives every site of `m` upward.
    pub fn is_trap(&self, m: &SiteSet) -> Result<bool> {
        let mm = self.mask_of(m)?;
        let full = ((1u64 << self.world.len()) - 1) as u32;
        if mm == 0 || mm == full {
            return Err(Error::InvalidSiteSet(
                "a trap must be non-empty with a non-empty complement".into(),
            ));
        }
        let u = (full & !mm) as usize;
        Ok(self.verdict[u] == Verdict::Ergodic && mm & !self.pos[u] == 0)
    }

    /// Every trap of the world, by increasing mask.
    pub fn traps(&self) -> Vec<SiteSet> {
        let full = ((1u64 << self.world.len()) - 1) as u32;
        (1..full)
            .filter(|&mm| {
                let u = (full & !mm) as usize;
                self.verdict[u] == Verdict::Ergodic && mm & !self.pos[u] == 0
            })
            .map(|mm| self.sites_of(mm).into_iter().collect())
            .collect()
    }

    /// Number of non-empty subsets with each verdict: `(ergodic, transient, unknown)`.
    pub fn counts(&self) -> (usize, usize, usize) {
        self.verdict[1..].iter().fold((0, 0, 0), |(e, t, u), v| match v {
            Verdict::Ergodic => (e + 1, t, u),
            Verdict::Transient => (e, t + 1, u),
            Verdict::Unknown => (e, t, u + 1),
        })
    }

    /// Every non-empty subset with its verdict, by increasing mask.
    pub fn verdicts(&self) -> impl Iterator<Item = (SiteSet, Verdict)> + '_ {
        (1..self.verdict.len()).map(|mask| {
            (
                self.sites_of(mask as u32).into_iter().collect(),
                self.verdict[mask],
            )
        })
    }
}

/// Classification of `s` with the default budget.
pub fn classify_inductive(network: &Network, s: &SiteSet, method: &Method) -> Result<Classification> {
    SubsetLattice::build(network, s, method, Budget::default())?.classification(s)
}

/// Whether `m` is a trap of the whole network.
pub fn is_trap(network: &Network, m: &SiteSet, method: &Method) -> Result<bool> {
    let all = network.topology().all_sites();
    if m.is_empty() || !m.is_subset(&all) || m.len() == all.len() {
        return Err(Error::InvalidSiteSet(
            "a trap must be a non-empty proper subset of the sites".into(),
        ));
    }
    let rest: SiteSet = all.difference(m).copied().collect();
    if classify_inductive(network, &rest, method)?.verdict != Verdict::Ergodic {
        return Ok(false);
    }
    let sites: Vec<usize> = rest.iter().copied().collect();
    let targets: Vec<usize> = m.iter().copied().collect();
    let stream = 1u64 << 40;
    Ok(estimate_field(network, &sites, &targets, method, stream)?
        .is_some_and(|f| (0..targets.len()).all(|k| f.positive(k))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{BlockConstants, TorusConnections};
    use crate::topology::{build_block_network, build_torus, BlockStructure};
    use proptest::prelude::*;

    fn block_net(p: usize, k: usize, c: BlockConstants) -> Network {
        let pairing = (0..p).map(|n| (2 * n, 2 * n + 1)).collect();
        let bs = BlockStructure::new(p, k, pairing, true).unwrap();
        Network::blocks(
            build_block_network(bs),
            c,
            DistributionSpec::unit_exponential(),
            DistributionSpec::unit_exponential(),
        )
        .unwrap()
    }

    fn set(xs: &[usize]) -> SiteSet {
        xs.iter().copied().collect()
    }

    #[test]
    fn uniform_weak_inhibition_is_ergodic() {
        // p = 1, k = 3 with c = b: fully connected six sites.
        let net = block_net(1, 3, BlockConstants::new(1.0, 0.4, 0.4));
        let all = net.topology().all_sites();
        let lat = SubsetLattice::build(&net, &all, &Method::Analytic, Budget::default()).unwrap();
        assert_eq!(lat.counts(), (63, 0, 0));
        assert!(lat.traps().is_empty());
        for m in [set(&[0]), set(&[0, 1, 2]), set(&[1, 4])] {
            assert!(!is_trap(&net, &m, &Method::Analytic).unwrap());
        }
    }

    #[test]
    fn block_net_is_transient_with_one_block_per_pair() {
        let net = block_net(2, 2, BlockConstants::new(1.0, 0.5, 2.0));
        let all = net.topology().all_sites();
        let c = classify_inductive(&net, &all, &Method::Analytic).unwrap();
        assert_eq!(c.verdict, Verdict::Transient);
        let m = c.witness.unwrap();
        assert!(is_trap(&net, &m, &Method::Analytic).unwrap());
        let blocks: SiteSet = m.iter().map(|&s| s / 2).collect();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks.iter().filter(|&&b| b < 2).count(), 1);
        assert!(is_trap(&net, &set(&[0, 1, 4, 5]), &Method::Analytic).unwrap());
        assert!(!is_trap(&net, &set(&[0, 1, 2, 3]), &Method::Analytic).unwrap());
        assert!(!is_trap(&net, &set(&[0, 4, 5]), &Method::Analytic).unwrap());
    }

    #[test]
    fn torus_below_threshold_is_ergodic() {
        let t = build_torus(1, 4, 2, None).unwrap();
        let net = Network::torus(t, TorusConnections::new(0.45, 0.0)).unwrap();
        let all = net.topology().all_sites();
        let c = classify_inductive(&net, &all, &Method::Analytic).unwrap();
        assert_eq!(c, Classification { verdict: Verdict::Ergodic, witness: None });
    }

    #[test]
    fn torus_above_threshold_traps_a_checkerboard() {
        let t = build_torus(1, 4, 2, None).unwrap();
        let net = Network::torus(t, TorusConnections::new(0.7, 0.0)).unwrap();
        let all = net.topology().all_sites();
        let lat = SubsetLattice::build(&net, &all, &Method::Analytic, Budget::default()).unwrap();
        assert_eq!(lat.classification(&all).unwrap().verdict, Verdict::Transient);
        assert!(lat.is_trap(&set(&[1, 3, 5, 7])).unwrap());
        assert!(lat.is_trap(&set(&[0, 2, 4, 6])).unwrap());
    }

    #[test]
    fn errors() {
        let net = block_net(2, 2, BlockConstants::new(1.0, 0.5, 2.0));
        let all = net.topology().all_sites();
        assert!(matches!(
            SubsetLattice::build(&net, &all, &Method::Analytic, Budget { max_sites: 4 }),
            Err(Error::BudgetExceeded { sites: 8, max: 4 })
        ));
        assert!(is_trap(&net, &SiteSet::new(), &Method::Analytic).is_err());
        assert!(is_trap(&net, &all, &Method::Analytic).is_err());
        let t = build_torus(1, 3, 2, None).unwrap();
        let exc = Network::torus(t, TorusConnections::new(0.3, 0.1)).unwrap();
        let all = exc.topology().all_sites();
        assert!(classify_inductive(&exc, &all, &Method::Analytic).is_err());
    }

    #[test]
    fn monte_carlo_agrees_on_block_net() {
        let net = block_net(1, 2, BlockConstants::new(1.0, 0.3, 2.5));
        let all = net.topology().all_sites();
        let mc = Method::MonteCarlo(McOptions { horizon: 4_000.0, seed: 9, ..McOptions::default() });
        let a = SubsetLattice::build(&net, &all, &Method::Analytic, Budget::default()).unwrap();
        let m = SubsetLattice::build(&net, &all, &mc, Budget::default()).unwrap();
        assert_eq!(a.traps(), vec![set(&[0, 1]), set(&[2, 3])]);
        assert_eq!(m.traps(), a.traps());
    }

    proptest! {
        #[test]
        fn block_model_has_no_unknown(
            a in 0.5f64..2.0,
            b_frac in 0.05f64..0.9,
            c_mult in 1.1f64..3.0,
            pk in prop::sample::select(vec![(1usize, 2usize), (2, 2), (1, 3)]),
        ) {
            let (p, k) = pk;
            let net = block_net(p, k, BlockConstants::new(a, b_frac * a, c_mult * a));
            let all = net.topology().all_sites();
            let lat = SubsetLattice::build(&net, &all, &Method::Analytic, Budget::default()).unwrap();
            prop_assert_eq!(lat.counts().2, 0);
            prop_assert_eq!(lat.traps().len(), 1 << p);
        }

        #[test]
        fn transient_witness_is_a_trap(w_i in 0.55f64..0.95, n in 3usize..5) {
            let t = build_torus(1, n, 2, None).unwrap();
            let net = Network::torus(t, TorusConnections::new(w_i, 0.0)).unwrap();
            let all = net.topology().all_sites();
            let lat = SubsetLattice::build(&net, &all, &Method::Analytic, Budget::default()).unwrap();
            for (w, v) in lat.verdicts() {
                if v == Verdict::Transient {
                    let c = lat.classification(&w).unwrap();
                    let m = c.witness.unwrap();
                    let sub = SubsetLattice::build(&net, &w, &Method::Analytic, Budget::default()).unwrap();
                    prop_assert!(sub.is_trap(&m).unwrap());
                }
            }
        }
    }
}
