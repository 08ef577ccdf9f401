//! Traps of the block network and their storage by a Hebbian rule.
//!
//! With `0 < b < a < c` the traps are exactly the unions that take one block
//! from every pair. A trap `A` is encoded as the pattern `ξ` with `ξ_x = +1`
//! on `A` and `-1` elsewhere.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::classify::{Budget, Method, SubsetLattice};
use crate::analysis::stats::FiringStats;
use crate::dynamics::{SimState, Simulator};
use crate::error::{Error, Result};
use crate::network::{BlockConstants, Network, Restriction};
use crate::stochastic::DistributionSpec;
use crate::topology::{build_block_network, BlockStructure, Topology};
use crate::SiteSet;

/// All one-block-per-pair unions, ordered lexicographically by the choice
/// vector with the first pair most significant (0 picks the pair's first block).
pub fn enumerate_traps(blocks: &BlockStructure, consts: BlockConstants) -> Result<Vec<SiteSet>> {
    consts.check_ordering()?;
    let p = blocks.p();
    if p >= usize::BITS as usize - 1 {
        return Err(Error::BudgetExceeded { sites: blocks.n_sites(), max: 2 * (usize::BITS as usize - 2) });
    }
    Ok((0..1usize << p)
        .map(|choice| {
            let picked: Vec<usize> = blocks
                .pairing()
                .iter()
                .enumerate()
                .map(|(n, &(u, v))| if (choice >> (p - 1 - n)) & 1 == 0 { u } else { v })
                .collect();
            blocks.union_of(&picked)
        })
        .collect())
}

/// Every non-empty proper subset that passes the analytic trap test, by
/// increasing bit mask. Independent of the block structure.
pub fn brute_force_traps(network: &Network, budget: Budget) -> Result<Vec<SiteSet>> {
    let all = network.topology().all_sites();
    Ok(SubsetLattice::build(network, &all, &Method::Analytic, budget)?.traps())
}

/// A `±1` configuration of the sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Pattern {
    xi: Vec<i8>,
}

impl TryFrom<Vec<i8>> for Pattern {
    type Error = Error;

    fn try_from(xi: Vec<i8>) -> Result<Self> {
        Pattern::new(xi)
    }
}

impl From<Pattern> for Vec<i8> {
    fn from(p: Pattern) -> Self {
        p.xi
    }
}

impl Pattern {
    pub fn new(xi: Vec<i8>) -> Result<Self> {
        if let Some((i, v)) = xi.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::InvalidPattern(format!("entry {i} is {v}, expected +1 or -1")));
        }
        Ok(Self { xi })
    }

    pub fn values(&self) -> &[i8] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn get(&self, i: usize) -> i8 {
        self.xi[i]
    }

    pub fn sum(&self) -> i64 {
        self.xi.iter().map(|&v| v as i64).sum()
    }

    /// One character per site: `#` for `+1`, `.` for `-1`.
    pub fn to_ascii(&self) -> String {
        self.xi.iter().map(|&v| if v > 0 { '#' } else { '.' }).collect()
    }

    /// [`Pattern::to_ascii`] broken into rows of `width` sites.
    pub fn to_ascii_rows(&self, width: usize) -> String {
        let line = self.to_ascii();
        let chars: Vec<char> = line.chars().collect();
        chars
            .chunks(width.max(1))
            .map(|c| c.iter().collect::<String>())
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn from_ascii(s: &str) -> Result<Self> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '#' => Ok(1),
                '.' => Ok(-1),
                other => Err(Error::InvalidPattern(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<i8>>>()
            .and_then(Self::new)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_ascii())
    }
}

pub fn pattern_from_trap(a: &SiteSet, topology: &Topology) -> Pattern {
    Pattern {
        xi: topology.sites().map(|i| if a.contains(&i) { 1 } else { -1 }).collect(),
    }
}

pub fn trap_from_pattern(pattern: &Pattern) -> SiteSet {
    (0..pattern.len()).filter(|&i| pattern.xi[i] > 0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternFamily {
    pub patterns: Vec<Pattern>,
    pub blocks: BlockStructure,
}

impl PatternFamily {
    /// The `2^p` patterns of the one-per-pair unions, in canonical trap order.
    pub fn from_blocks(blocks: BlockStructure) -> Result<Self> {
        let topo = build_block_network(blocks.clone());
        // Any admissible constants give the same unions.
        let traps = enumerate_traps(&blocks, BlockConstants::new(1.0, 0.5, 2.0))?;
        Ok(Self {
            patterns: traps.iter().map(|a| pattern_from_trap(a, &topo)).collect(),
            blocks,
        })
    }

    /// Infers blocks as classes of sites with identical values in every
    /// pattern, paired by exact anti-correlation.
    pub fn infer(patterns: Vec<Pattern>, allow_trivial: bool) -> Result<Self> {
        let n = patterns.first().map(Pattern::len).unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidPattern("need at least one non-empty pattern".into()));
        }
        if let Some(bad) = patterns.iter().position(|p| p.len() != n) {
            return Err(Error::InvalidPattern(format!(
                "pattern {bad} has {} sites, expected {n}",
                patterns[bad].len()
            )));
        }
        let column = |x: usize| -> Vec<i8> { patterns.iter().map(|p| p.xi[x]).collect() };
        let mut classes: BTreeMap<Vec<i8>, Vec<usize>> = BTreeMap::new();
        for x in 0..n {
            classes.entry(column(x)).or_default().push(x);
        }
        let mut blocks: Vec<Vec<usize>> = classes.values().cloned().collect();
        blocks.sort_by_key(|b| b[0]);
        let cols: Vec<Vec<i8>> = blocks.iter().map(|b| column(b[0])).collect();
        let mut pairing = Vec::new();
        let mut used = vec![false; blocks.len()];
        for u in 0..blocks.len() {
            if used[u] {
                continue;
            }
            let anti: Vec<i8> = cols[u].iter().map(|v| -v).collect();
            let v = (0..blocks.len())
                .find(|&v| v != u && cols[v] == anti)
                .ok_or_else(|| Error::InvalidPattern(format!("block starting at site {} has no anti-correlated partner", blocks[u][0])))?;
            used[u] = true;
            used[v] = true;
            pairing.push((u, v));
        }
        let k = blocks[0].len();
        let p = pairing.len();
        let bs = BlockStructure::with_members(p, k, pairing, blocks, allow_trivial)
            .map_err(|e| Error::InvalidPattern(format!("inferred blocks are not admissible: {e}")))?;
        Ok(Self { patterns, blocks: bs })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A pattern has the wrong number of sites.
    Length { pattern: usize, found: usize, expected: usize },
    /// Condition 1: a pattern is not constant on a block.
    NotConstantOnBlock { pattern: usize, block: usize },
    /// Condition 2: a pattern is unbalanced.
    Unbalanced { pattern: usize, sum: i64 },
    /// Condition 3: a block lacks a unique anti-correlated partner.
    PartnerNotUnique { block: usize, candidates: Vec<usize> },
    /// The unique partner differs from the declared pairing.
    PairingMismatch { block: usize, declared: usize, found: usize },
    /// The family does not hold exactly `2^p` distinct patterns.
    Count { found: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    /// Unique anti-correlated partner of each block, when it exists.
    pub partner: Vec<Option<usize>>,
}

/// Checks block constancy, balance, unique partners and the family size.
pub fn validate_pattern_family(family: &PatternFamily) -> FamilyReport {
    let bs = &family.blocks;
    let n = bs.n_sites();
    let mut violations = Vec::new();
    for (mu, p) in family.patterns.iter().enumerate() {
        if p.len() != n {
            violations.push(Violation::Length { pattern: mu, found: p.len(), expected: n });
        }
    }
    if !violations.is_empty() {
        return FamilyReport { valid: false, violations, partner: vec![None; bs.blocks().len()] };
    }
    for (mu, p) in family.patterns.iter().enumerate() {
        for (b, members) in bs.blocks().iter().enumerate() {
            if members.iter().any(|&x| p.xi[x] != p.xi[members[0]]) {
                violations.push(Violation::NotConstantOnBlock { pattern: mu, block: b });
            }
        }
        if p.sum() != 0 {
            violations.push(Violation::Unbalanced { pattern: mu, sum: p.sum() });
        }
    }
    let nb = bs.blocks().len();
    let anti = |u: usize, v: usize| {
        family.patterns.iter().all(|p| {
            bs.block(u)
                .iter()
                .all(|&x| bs.block(v).iter().all(|&y| p.xi[x] * p.xi[y] == -1))
        })
    };
    let mut partner = vec![None; nb];
    for u in 0..nb {
        let candidates: Vec<usize> = (0..nb).filter(|&v| v != u && anti(u, v)).collect();
        if candidates.len() == 1 {
            partner[u] = Some(candidates[0]);
            let declared = bs.partner(u);
            if declared != candidates[0] {
                violations.push(Violation::PairingMismatch { block: u, declared, found: candidates[0] });
            }
        } else {
            violations.push(Violation::PartnerNotUnique { block: u, candidates });
        }
    }
    let distinct: std::collections::HashSet<&Pattern> = family.patterns.iter().collect();
    let expected = 1usize << bs.p();
    if family.patterns.len() != expected || distinct.len() != expected {
        violations.push(Violation::Count { found: distinct.len(), expected });
    }
    FamilyReport { valid: violations.is_empty(), violations, partner }
}

/// How learned expectations are realized as random magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Realization {
    #[default]
    Deterministic,
    Exponential,
}

impl Realization {
    pub fn unit(self) -> DistributionSpec {
        match self {
            Realization::Deterministic => DistributionSpec::deterministic(1.0).expect("unit mean is valid"),
            Realization::Exponential => DistributionSpec::unit_exponential(),
        }
    }
}

/// Outcome of the Hebbian rule: expected magnitudes `-Eθ_xy` per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedConnections {
    pub a: f64,
    pub coef_a: f64,
    pub coef_b: f64,
    pub blocks: BlockStructure,
    /// `magnitude[x][y] = -Eθ_xy`; the diagonal is zero.
    pub magnitude: Vec<Vec<f64>>,
}

impl LearnedConnections {
    /// `(a, (B-A)a, (A+B)a)` as block constants.
    pub fn constants(&self) -> BlockConstants {
        BlockConstants::new(
            self.a,
            self.a * self.coef_b - self.a * self.coef_a,
            self.a * self.coef_a + self.a * self.coef_b,
        )
    }

    /// Distinct off-diagonal magnitudes, ascending.
    pub fn distinct_magnitudes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .magnitude
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().enumerate().filter(move |(y, _)| *y != x).map(|(_, &m)| m))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn network(&self, realization: Realization) -> Result<Network> {
        let unit = realization.unit();
        Network::blocks(build_block_network(self.blocks.clone()), self.constants(), unit, unit)
    }
}

/// `0 < B - A < 1` and `1 < B + A`.
pub fn check_learning_constants(coef_a: f64, coef_b: f64) -> Result<()> {
    let diff = coef_b - coef_a;
    let sum = coef_b + coef_a;
    if 0.0 < diff && diff < 1.0 && 1.0 < sum {
        Ok(())
    } else {
        Err(Error::InvalidConstants(format!(
            "learning constants need 0 < B - A < 1 and 1 < B + A, got A = {coef_a}, B = {coef_b} (B - A = {diff}, B + A = {sum})"
        )))
    }
}

/// `b(x, y) = A a (1/M) Σ_μ ξ_x ξ_y - B a`, clamped to its global minimum
/// where it attains it and to its global maximum elsewhere.
pub fn hebb_connections(family: &PatternFamily, a: f64, coef_a: f64, coef_b: f64) -> Result<LearnedConnections> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidConstants(format!("a must be positive, got {a}")));
    }
    check_learning_constants(coef_a, coef_b)?;
    let report = validate_pattern_family(family);
    if !report.valid {
        return Err(Error::InvalidPattern(format!(
            "pattern family violates its conditions: {:?}",
            report.violations
        )));
    }
    let n = family.blocks.n_sites();
    let m = family.patterns.len() as f64;
    let mut raw = vec![vec![0.0; n]; n];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let corr = family
                .patterns
                .iter()
                .map(|p| (p.xi[x] * p.xi[y]) as i64)
                .sum::<i64>() as f64
                / m;
            let b = coef_a * a * corr - coef_b * a;
            raw[x][y] = b;
            lo = lo.min(b);
            hi = hi.max(b);
        }
    }
    let magnitude = raw
        .iter()
        .enumerate()
        .map(|(x, row)| {
            row.iter()
                .enumerate()
                .map(|(y, &b)| if x == y { 0.0 } else if b == lo { -lo } else { -hi })
                .collect()
        })
        .collect();
    Ok(LearnedConnections {
        a,
        coef_a,
        coef_b,
        blocks: family.blocks.clone(),
        magnitude,
    })
}

/// Whether the learned network's traps are exactly the stored patterns,
/// checked against the block formula and, for small networks, exhaustively.
pub fn verify_storage(learned: &LearnedConnections, family: &PatternFamily) -> bool {
    let stored: std::collections::BTreeSet<SiteSet> = family.patterns.iter().map(trap_from_pattern).collect();
    let consts = learned.constants();
    // Learned magnitudes must coincide with the block constants.
    for x in 0..learned.blocks.n_sites() {
        for y in 0..learned.blocks.n_sites() {
            if x == y {
                continue;
            }
            let expect = if learned.blocks.are_partners(x, y) { consts.c } else { consts.b };
            if learned.magnitude[x][y] != expect {
                return false;
            }
        }
    }
    let Ok(enumerated) = enumerate_traps(&learned.blocks, consts) else {
        return false;
    };
    if enumerated.into_iter().collect::<std::collections::BTreeSet<_>>() != stored {
        return false;
    }
    if learned.blocks.n_sites() <= crate::analysis::classify::DEFAULT_MAX_SITES {
        let Ok(net) = learned.network(Realization::Deterministic) else {
            return false;
        };
        match brute_force_traps(&net, Budget::default()) {
            Ok(found) => found.into_iter().collect::<std::collections::BTreeSet<_>>() == stored,
            Err(_) => false,
        }
    } else {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Firings of trap sites over the whole run.
    pub trap_firings: u64,
    /// Empirical rate of each active site after burn-in.
    pub active_rates: BTreeMap<usize, f64>,
}

impl StabilityReport {
    /// Trap silent and every active rate within `rel_tol` of `expected`.
    pub fn holds(&self, expected: f64, rel_tol: f64) -> bool {
        self.trap_firings == 0
            && self
                .active_rates
                .values()
                .all(|r| (r - expected).abs() <= rel_tol * expected)
    }
}

/// Starts trap sites at `horizon + 1`, the rest from seeded `Y` draws, and
/// runs the full network for `horizon`.
pub fn trap_stability(
    network: &Network,
    trap: &SiteSet,
    horizon: f64,
    burn_in_fraction: f64,
    seed: u64,
) -> Result<StabilityReport> {
    let n = network.n_sites();
    if trap.is_empty() || trap.len() >= n || trap.iter().any(|&i| i >= n) {
        return Err(Error::InvalidSiteSet("trap must be a non-empty proper subset".into()));
    }
    let full = Restriction::full(n);
    let drawn = SimState::init(network, &full, network.self_characteristic(0), seed);
    let values: Vec<f64> = (0..n)
        .map(|i| if trap.contains(&i) { horizon + 1.0 } else { drawn.x(i).expect("active") })
        .collect();
    let state = SimState::from_values(&full, &values, seed.wrapping_add(1))?;
    let mut sim = Simulator::new(network, state)?;
    let mut whole = FiringStats::new(n, 0.0, horizon, 1).with_reservoir(0, seed);
    let mut tail = FiringStats::for_run(n, 0.0, horizon, burn_in_fraction, 1).with_reservoir(0, seed);
    sim.run(horizon, (&mut whole, &mut tail));
    let len = tail.window_length();
    Ok(StabilityReport {
        trap_firings: trap.iter().map(|&i| whole.total(i)).sum(),
        active_rates: (0..n)
            .filter(|i| !trap.contains(i))
            .map(|i| (i, tail.total(i) as f64 / len))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(p: usize, k: usize) -> BlockStructure {
        BlockStructure::new(p, k, (0..p).map(|n| (2 * n, 2 * n + 1)).collect(), false).unwrap()
    }

    fn set(xs: &[usize]) -> SiteSet {
        xs.iter().copied().collect()
    }

    fn consts() -> BlockConstants {
        BlockConstants::new(1.0, 0.5, 2.0)
    }

    #[test]
    fn canonical_trap_order() {
        let t = enumerate_traps(&bs(2, 2), consts()).unwrap();
        assert_eq!(
            t,
            vec![set(&[0, 1, 4, 5]), set(&[0, 1, 6, 7]), set(&[2, 3, 4, 5]), set(&[2, 3, 6, 7])]
        );
        assert_eq!(enumerate_traps(&bs(1, 2), consts()).unwrap(), vec![set(&[0, 1]), set(&[2, 3])]);
        assert_eq!(enumerate_traps(&bs(3, 2), consts()).unwrap().len(), 8);
        assert!(enumerate_traps(&bs(2, 2), BlockConstants::new(1.0, 1.5, 2.0)).is_err());
    }

    #[test]
    fn brute_force_matches_on_small_block_net() {
        let net = Network::blocks(
            build_block_network(bs(2, 2)),
            consts(),
            DistributionSpec::unit_exponential(),
            DistributionSpec::unit_exponential(),
        )
        .unwrap();
        let bf = brute_force_traps(&net, Budget::default()).unwrap();
        let mut en = enumerate_traps(&bs(2, 2), consts()).unwrap();
        en.sort_by_key(|s| s.iter().map(|&i| 1u32 << i).sum::<u32>());
        assert_eq!(bf, en);
        assert!(!bf.contains(&set(&[0, 4, 5])));
    }

    #[test]
    fn uniform_network_has_no_traps() {
        let b = BlockStructure::new(1, 3, vec![(0, 1)], false).unwrap();
        let net = Network::blocks(
            build_block_network(b),
            BlockConstants::new(1.0, 0.3, 0.3),
            DistributionSpec::unit_exponential(),
            DistributionSpec::unit_exponential(),
        )
        .unwrap();
        assert!(brute_force_traps(&net, Budget::default()).unwrap().is_empty());
    }

    #[test]
    fn pattern_encoding() {
        let topo = build_block_network(bs(2, 2));
        let p = pattern_from_trap(&set(&[0, 1, 4, 5]), &topo);
        assert_eq!(p.values(), &[1, 1, -1, -1, 1, 1, -1, -1]);
        assert_eq!(p.to_ascii(), "##..##..");
        assert_eq!(Pattern::from_ascii("##..\n##..").unwrap(), p);
        assert_eq!(p.to_ascii_rows(4), "##..\n##..");
        assert_eq!(pattern_from_trap(&SiteSet::new(), &topo).values(), &[-1; 8]);
        assert!(Pattern::new(vec![1, 0]).is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[1,1,-1,-1,1,1,-1,-1]");
        assert!(serde_json::from_str::<Pattern>("[1,2]").is_err());
    }

    #[test]
    fn family_validation() {
        let fam = PatternFamily::from_blocks(bs(2, 2)).unwrap();
        let r = validate_pattern_family(&fam);
        assert!(r.valid, "{r:?}");
        assert_eq!(r.partner, vec![Some(1), Some(0), Some(3), Some(2)]);

        let mut bad = fam.clone();
        bad.patterns[0] = Pattern::new(vec![1, 1, 1, -1, 1, 1, -1, -1]).unwrap();
        let r = validate_pattern_family(&bad);
        assert!(r.violations.contains(&Violation::Unbalanced { pattern: 0, sum: 2 }));
        assert!(r.violations.contains(&Violation::NotConstantOnBlock { pattern: 0, block: 1 }));

        // Only the two patterns where blocks 1 and 2 are both anti-correlated with block 0.
        let p = |v: Vec<i8>| Pattern::new(v).unwrap();
        let two = PatternFamily {
            patterns: vec![p(vec![1, 1, -1, -1, -1, -1, 1, 1]), p(vec![-1, -1, 1, 1, 1, 1, -1, -1])],
            blocks: bs(2, 2),
        };
        let r = validate_pattern_family(&two);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::PartnerNotUnique { block: 0, candidates } if candidates == &vec![1, 2])));
    }

    #[test]
    fn inferred_blocks() {
        let fam = PatternFamily::from_blocks(bs(2, 3)).unwrap();
        let inf = PatternFamily::infer(fam.patterns.clone(), false).unwrap();
        assert_eq!(inf.blocks, fam.blocks);
        assert!(validate_pattern_family(&inf).valid);
    }

    #[test]
    fn hebbian_magnitudes() {
        let fam = PatternFamily::from_blocks(bs(2, 2)).unwrap();
        let l = hebb_connections(&fam, 1.0, 0.6, 0.7).unwrap();
        assert_eq!(l.distinct_magnitudes(), vec![0.7 - 0.6, 0.6 + 0.7]);
        assert_eq!(l.magnitude[0][2], 0.6 + 0.7);
        assert_eq!(l.magnitude[0][1], 0.7 - 0.6);
        assert_eq!(l.magnitude[0][4], 0.7 - 0.6);
        assert!(verify_storage(&l, &fam));
        assert!(hebb_connections(&fam, 1.0, 0.2, 0.3).is_err());
        assert!(hebb_connections(&fam, 1.0, 0.6, 1.7).is_err());
        assert!(hebb_connections(&fam, 0.0, 0.6, 0.7).is_err());
    }

    #[test]
    fn perturbed_family_rejected() {
        let mut fam = PatternFamily::from_blocks(bs(2, 2)).unwrap();
        let mut v = fam.patterns[1].values().to_vec();
        v[0] = -v[0];
        fam.patterns[1] = Pattern::new(v).unwrap();
        assert!(hebb_connections(&fam, 1.0, 0.6, 0.7).is_err());
    }

    #[test]
    fn trap_stays_silent() {
        let net = Network::blocks(
            build_block_network(bs(2, 2)),
            consts(),
            Realization::Deterministic.unit(),
            Realization::Deterministic.unit(),
        )
        .unwrap();
        let r = trap_stability(&net, &set(&[0, 1, 4, 5]), 2_000.0, 0.2, 3).unwrap();
        assert_eq!(r.trap_firings, 0);
        assert!(r.holds(0.4, 0.03), "{r:?}");
    }

    proptest! {
        #[test]
        fn trap_count_is_two_to_p(p in 1usize..6, k in 2usize..4) {
            let t = enumerate_traps(&bs(p, k), consts()).unwrap();
            prop_assert_eq!(t.len(), 1 << p);
            for a in &t {
                prop_assert_eq!(a.len(), p * k);
            }
        }

        #[test]
        fn pattern_round_trip(bits in prop::collection::vec(any::<bool>(), 1..20)) {
            let a: SiteSet = bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
            let topo = build_block_network(BlockStructure::new(1, bits.len(), vec![(0, 1)], true).unwrap());
            let p = pattern_from_trap(&a, &topo);
            prop_assert_eq!(trap_from_pattern(&p), a);
        }

        #[test]
        fn learning_closure(
            pk in prop::sample::select(vec![(1usize, 2usize), (1, 3), (2, 2)]),
            a in 0.5f64..2.0,
            coef_a in 0.05f64..0.9,
            diff in 0.01f64..0.99,
        ) {
            let (p, k) = pk;
            let coef_b = coef_a + diff;
            prop_assume!(coef_a + coef_b > 1.0);
            let fam = PatternFamily::from_blocks(bs(p, k)).unwrap();
            let l = hebb_connections(&fam, a, coef_a, coef_b).unwrap();
            let c = l.constants();
            prop_assert!(c.b < c.a && c.a < c.c);
            prop_assert!(verify_storage(&l, &fam));
        }

        #[test]
        fn oracle_equivalence(
            pk in prop::sample::select(vec![(1usize, 2usize), (1, 3), (2, 2), (3, 2), (2, 3)]),
            a in 0.5f64..2.0,
            b_frac in 0.05f64..0.95,
            c_mult in 1.05f64..3.0,
        ) {
            let (p, k) = pk;
            let c = BlockConstants::new(a, b_frac * a, c_mult * a);
            let net = Network::blocks(build_block_network(bs(p, k)), c, Realization::Exponential.unit(), Realization::Exponential.unit()).unwrap();
            let bf: std::collections::BTreeSet<SiteSet> = brute_force_traps(&net, Budget::default()).unwrap().into_iter().collect();
            let en: std::collections::BTreeSet<SiteSet> = enumerate_traps(&bs(p, k), c).unwrap().into_iter().collect();
            prop_assert_eq!(bf, en);
        }
    }
}
