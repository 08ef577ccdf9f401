use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::stats::FiringStats;
use crate::error::{Error, Result};
use crate::network::{Network, Sign};
use crate::SiteSet;

/// Empirical firing frequencies over a stats window.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequencies {
    pub window: f64,
    /// Spontaneous rate `π^{W,0}_i`.
    pub pi0: Vec<f64>,
    /// Induced rate `π^{W,e}_{ij}` keyed by `(receiver, sender)`.
    pub pie: BTreeMap<(usize, usize), f64>,
    /// Total rate `π^W_i`.
    pub pi_total: Vec<f64>,
}

impl Frequencies {
    /// `Σ_j π^{W,e}_{ij}`; `+0.0` when `i` has no induced firings.
    pub fn pie_total(&self, i: usize) -> f64 {
        self.pie
            .range((i, 0)..=(i, usize::MAX))
            .map(|(_, &r)| r)
            .sum::<f64>()
            + 0.0
    }
}

/// Counts divided by the window length.
pub fn estimate_frequencies(stats: &FiringStats) -> Result<Frequencies> {
    let window = stats.window_length();
    if !(window > 0.0) {
        return Err(Error::EmptyWindow);
    }
    let n = stats.n_sites();
    Ok(Frequencies {
        window,
        pi0: (0..n).map(|i| stats.spontaneous(i) as f64 / window).collect(),
        pie: stats
            .excitation_counts()
            .iter()
            .map(|(&k, &c)| (k, c as f64 / window))
            .collect(),
        pi_total: (0..n).map(|i| stats.total(i) as f64 / window).collect(),
    })
}

/// Total and spontaneous firing rates of the sites of a restriction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SiteRates {
    pub total: BTreeMap<usize, f64>,
    pub spontaneous: BTreeMap<usize, f64>,
}

impl SiteRates {
    /// Rates of a network without excitation, where every firing is spontaneous.
    pub fn inhibitory(total: BTreeMap<usize, f64>) -> Self {
        Self {
            spontaneous: total.clone(),
            total,
        }
    }

    pub fn from_frequencies(f: &Frequencies, w: &SiteSet) -> Self {
        Self {
            total: w.iter().map(|&i| (i, f.pi_total[i])).collect(),
            spontaneous: w.iter().map(|&i| (i, f.pi0[i])).collect(),
        }
    }
}

/// Stationary rates of the all-inhibitory restriction to `w`.
///
/// Along an ergodic trajectory every countdown has zero mean drift, so
/// `π_i E Y_i + Σ_{j ∈ W∖{i}} π_j E|θ_ji| = 1` for each `i ∈ W`. When the
/// rates are homogeneous (fully connected blocks, single sites, decoupled
/// sites) this reduces to `π_i = (E Y_i + Σ_j E|θ_ji|)^{-1}`.
pub fn analytic_pi_inhibitory(network: &Network, w: &SiteSet) -> Result<SiteRates> {
    check_inhibitory(network, w)?;
    let sites: Vec<usize> = w.iter().copied().collect();
    let rates = solve_balance(network, &sites).ok_or_else(|| {
        Error::InvalidConnections(
            "rate balance has no positive solution; the restriction cannot be ergodic".into(),
        )
    })?;
    Ok(SiteRates::inhibitory(sites.into_iter().zip(rates).collect()))
}

pub(crate) fn check_inhibitory(network: &Network, w: &SiteSet) -> Result<()> {
    if w.is_empty() {
        return Err(Error::InvalidSiteSet("rate computation needs a non-empty set".into()));
    }
    if !network.all_inhibitory_within(w) {
        return Err(Error::InvalidConnections(
            "excitatory link inside the restriction; analytic rates need inhibition only".into(),
        ));
    }
    Ok(())
}

/// Solves the drift balance for the sites listed in `sites`; `None` if the
/// system is singular or has a non-positive entry.
pub(crate) fn solve_balance(network: &Network, sites: &[usize]) -> Option<Vec<f64>> {
    let m = sites.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (r, &i) in sites.iter().enumerate() {
        a[(r, r)] = network.self_characteristic(i).mean_of();
        for (c, &j) in sites.iter().enumerate() {
            if c == r {
                continue;
            }
            if let Some(link) = network.link(j, i) {
                if link.sign == Sign::Inhibitory {
                    a[(r, c)] = link.magnitude.mean();
                }
            }
        }
    }
    let rates = a.lu().solve(&DVector::from_element(m, 1.0))?;
    rates
        .iter()
        .all(|&p| p.is_finite() && p > 0.0)
        .then(|| rates.iter().copied().collect())
}
