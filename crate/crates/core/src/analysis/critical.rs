//! Critical inhibition of the torus: the checkerboard `Λ0` runs its own
//! excitatory subsystem, and the odd sites stay silent exactly when
//! `2ν w_I π^+(w_E) > 1`.

use serde::{Deserialize, Serialize};

use super::stats::{mean_half_width, FiringStats, DEFAULT_RESERVOIR};
use crate::dynamics::{SimState, Simulator};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::stochastic::DistributionSpec;

/// Minimum number of `Z_ij` samples per ordered pair for [`check_balance`].
pub const MIN_Z_SAMPLES: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimBudget {
    pub horizon: f64,
    pub burn_in_fraction: f64,
    pub batches: usize,
    pub seed: u64,
    /// Largest acceptable confidence half-width of the returned `w_I`.
    pub max_half_width: Option<f64>,
    pub confidence: f64,
}

impl Default for SimBudget {
    fn default() -> Self {
        Self {
            horizon: 20_000.0,
            burn_in_fraction: 0.2,
            batches: 20,
            seed: 0,
            max_half_width: None,
            confidence: 0.95,
        }
    }
}

/// Runs the torus restricted to `Λ0` for `budget.horizon`, starting from
/// independent `Y` draws.
pub fn simulate_lambda0(network: &Network, budget: &SimBudget) -> Result<FiringStats> {
    let torus = network
        .topology()
        .torus()
        .ok_or_else(|| Error::InvalidTopology("the checkerboard needs a torus".into()))?;
    if !(budget.horizon > 0.0 && budget.horizon.is_finite()) {
        return Err(Error::SimulationBudget("horizon must be positive".into()));
    }
    let lambda0 = torus.sublattice_lambda0();
    let restriction = network.restrict(&lambda0)?;
    let y = *network.self_characteristic(0);
    let state = SimState::init(network, &restriction, &y, budget.seed);
    let mut sim = Simulator::new(network, state)?;
    let mut stats = FiringStats::for_run(
        network.n_sites(),
        0.0,
        budget.horizon,
        budget.burn_in_fraction,
        budget.batches,
    )
    .with_reservoir(DEFAULT_RESERVOIR, budget.seed);
    sim.run(budget.horizon, &mut stats);
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub w_i: f64,
    pub ci: (f64, f64),
    /// Mean total firing rate per `Λ0` site.
    pub pi_plus: f64,
    pub pi_plus_half_width: f64,
    pub events: u64,
}

/// Mean per-site total rate over `Λ0`, with its batch-means half-width.
pub fn pi_plus(network: &Network, stats: &FiringStats, confidence: f64) -> Result<(f64, f64)> {
    let lambda0 = network
        .topology()
        .torus()
        .ok_or_else(|| Error::InvalidTopology("the checkerboard needs a torus".into()))?
        .sublattice_lambda0();
    let len = stats.window_length();
    if !(len > 0.0) {
        return Err(Error::EmptyWindow);
    }
    let n0 = lambda0.len() as f64;
    let mean = lambda0.iter().map(|&i| stats.total(i) as f64).sum::<f64>() / (n0 * len);
    let bl = stats.batch_length();
    let batches: Vec<f64> = (0..stats.batches())
        .map(|b| lambda0.iter().map(|&i| stats.batch_total(b)[i] as f64).sum::<f64>() / (n0 * bl))
        .collect();
    Ok((mean, mean_half_width(&batches, confidence).1))
}

/// `w_I^cr(w_E) = 1 / (2ν π^+(w_E))`, estimated on `network`'s torus (its
/// `w_I` is irrelevant since odd sites are frozen).
pub fn critical_w_i(network: &Network, budget: &SimBudget) -> Result<CriticalEstimate> {
    if budget.batches < 2 {
        return Err(Error::SimulationBudget("need at least two batches".into()));
    }
    let nu = network
        .topology()
        .torus()
        .ok_or_else(|| Error::InvalidTopology("the critical curve needs a torus".into()))?
        .nu() as f64;
    let stats = simulate_lambda0(network, budget)?;
    let (pi, h) = pi_plus(network, &stats, budget.confidence)?;
    if !(pi > 0.0) || !(h < pi) {
        return Err(Error::SimulationBudget(format!(
            "rate estimate {pi} with half-width {h} is not resolved; increase the horizon"
        )));
    }
    let w = 1.0 / (2.0 * nu * pi);
    let ci = (1.0 / (2.0 * nu * (pi + h)), 1.0 / (2.0 * nu * (pi - h)));
    if let Some(max) = budget.max_half_width {
        let half = (ci.1 - ci.0) / 2.0;
        if half > max {
            return Err(Error::SimulationBudget(format!(
                "half-width {half:.4} exceeds requested {max}; increase the horizon"
            )));
        }
    }
    Ok(CriticalEstimate {
        w_i: w,
        ci,
        pi_plus: pi,
        pi_plus_half_width: h,
        events: stats.events(),
    })
}

/// `1/(2ν) - (K_E/(2ν)) w_E`, the first-order critical line.
pub fn linear_approx_w_i(w_e: f64, nu: usize, k_e: usize) -> f64 {
    let two_nu = 2.0 * nu as f64;
    1.0 / two_nu - k_e as f64 / two_nu * w_e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// Mean over sites of `LHS_i - 1`.
    pub residual: f64,
    /// `(site, LHS_i - 1)` for each site with excitatory senders.
    pub per_site: Vec<(usize, f64)>,
    /// Mean spontaneous rate `π^{+,0}`.
    pub pi0: f64,
    /// Mean total rate `π^+`.
    pub pi_total: f64,
}

/// Evaluates, per receiving site `i`,
/// `π^0_i (1 - K_E w_E Eη_2 + Σ_j P{Z_ij <= θ_ij} + Σ_j E(θ_ij - Z_ij)^+)`
/// from the recorded `(Z_ij, θ_ij)` pairs and reports its distance from 1.
pub fn check_balance(stats: &FiringStats, w_e: f64, k_e: usize, eta2: &DistributionSpec) -> Result<BalanceReport> {
    let len = stats.window_length();
    if !(len > 0.0) {
        return Err(Error::EmptyWindow);
    }
    let mut bracket: std::collections::BTreeMap<usize, f64> = Default::default();
    for (&(receiver, sender), res) in stats.z_samples() {
        let found = res.samples().len();
        if found < MIN_Z_SAMPLES {
            return Err(Error::InsufficientSamples {
                receiver,
                sender,
                found,
                required: MIN_Z_SAMPLES,
            });
        }
        let n = found as f64;
        let hit = res.samples().iter().filter(|s| s.x <= s.theta).count() as f64 / n;
        let overshoot = res.samples().iter().map(|s| (s.theta - s.x).max(0.0)).sum::<f64>() / n;
        *bracket
            .entry(receiver)
            .or_insert(1.0 - k_e as f64 * w_e * eta2.mean_of()) += hit + overshoot;
    }
    if bracket.is_empty() {
        return Err(Error::InsufficientSamples {
            receiver: 0,
            sender: 0,
            found: 0,
            required: MIN_Z_SAMPLES,
        });
    }
    let per_site: Vec<(usize, f64)> = bracket
        .iter()
        .map(|(&i, &b)| (i, stats.spontaneous(i) as f64 / len * b - 1.0))
        .collect();
    let m = per_site.len() as f64;
    let residual = per_site.iter().map(|(_, r)| r).sum::<f64>() / m;
    let pi0 = bracket.keys().map(|&i| stats.spontaneous(i) as f64).sum::<f64>() / (m * len);
    let pi_total = bracket.keys().map(|&i| stats.total(i) as f64).sum::<f64>() / (m * len);
    Ok(BalanceReport {
        residual,
        per_site,
        pi0,
        pi_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::TorusConnections;
    use crate::topology::build_torus;

    fn torus(nu: usize, n: usize, k_e: usize, w_e: f64) -> Network {
        let t = build_torus(nu, n, k_e, None).unwrap();
        Network::torus(t, TorusConnections::new(0.5, w_e)).unwrap()
    }

    #[test]
    fn linear_line_values() {
        assert_eq!(linear_approx_w_i(0.0, 1, 7), 0.5);
        assert!((linear_approx_w_i(0.1, 1, 2) - 0.4).abs() < 1e-15);
        assert_eq!(linear_approx_w_i(0.0, 2, 3), 0.25);
    }

    #[test]
    fn no_excitation_gives_renewal_rate() {
        let net = torus(2, 4, 2, 0.0);
        let b = SimBudget { horizon: 5_000.0, seed: 2, ..SimBudget::default() };
        let e = critical_w_i(&net, &b).unwrap();
        assert!((e.w_i - 0.25).abs() < 0.01, "{e:?}");
        assert!(e.ci.0 < 0.25 && 0.25 < e.ci.1, "{e:?}");
    }

    #[test]
    fn balance_without_excitation() {
        let net = torus(1, 5, 2, 0.0);
        let stats = simulate_lambda0(&net, &SimBudget { horizon: 20_000.0, seed: 4, ..SimBudget::default() }).unwrap();
        let r = check_balance(&stats, 0.0, 2, &DistributionSpec::unit_exponential()).unwrap();
        assert!(r.residual.abs() < 0.03, "{r:?}");
        assert_eq!(r.pi0, r.pi_total);
    }

    #[test]
    fn balance_needs_samples() {
        let net = torus(1, 5, 2, 0.1);
        let stats = simulate_lambda0(&net, &SimBudget { horizon: 100.0, ..SimBudget::default() }).unwrap();
        assert!(matches!(
            check_balance(&stats, 0.1, 2, &DistributionSpec::unit_exponential()),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn budget_errors() {
        let net = torus(1, 5, 2, 0.1);
        let tiny = SimBudget { horizon: 50.0, max_half_width: Some(1e-4), ..SimBudget::default() };
        assert!(matches!(critical_w_i(&net, &tiny), Err(Error::SimulationBudget(_))));
        let one_batch = SimBudget { batches: 1, ..SimBudget::default() };
        assert!(critical_w_i(&net, &one_batch).is_err());
    }
}
