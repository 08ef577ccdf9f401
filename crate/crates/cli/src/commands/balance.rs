use std::path::{Path, PathBuf};

use hourglass_core::analysis::{check_balance, pi_plus, simulate_lambda0, BalanceReport, SimBudget};
use serde::Serialize;

use crate::config::{ConnectionsConfig, ExperimentConfig, TopologyConfig};
use crate::error::{CliError, CliResult};
use crate::output::write_json;

#[derive(Debug, Clone, Serialize)]
pub struct BalanceOutputReport {
    pub config_hash: String,
    pub seed: u64,
    pub w_e: f64,
    pub k_e: usize,
    pub events: u64,
    pub balance: BalanceReport,
    /// Mean total rate per checkerboard site, with its 95% half-width.
    pub pi_plus: (f64, f64),
    /// First-order prediction `1 + K_E w_E` of the total rate.
    pub pi_plus_linear: f64,
}

pub struct BalanceOutput {
    pub report: BalanceOutputReport,
    pub files: Vec<PathBuf>,
}

/// Runs the checkerboard subsystem at excitation `w_e` and evaluates the
/// balance identity on the recorded countdowns.
pub fn cmd_balance(cfg: &ExperimentConfig, w_e: Option<f64>, out: Option<&Path>) -> CliResult<BalanceOutput> {
    let mut cfg = cfg.clone();
    let ConnectionsConfig::Torus { w_e: cfg_we, .. } = &mut cfg.connections else {
        return Err(CliError::config("connections", "balance needs a torus config"));
    };
    if let Some(w) = w_e {
        *cfg_we = w;
    }
    let w_e = *cfg_we;
    let TopologyConfig::Torus { k_e, .. } = cfg.topology else {
        return Err(CliError::config("topology", "balance needs a torus config"));
    };
    cfg.validate()?;
    let net = cfg.build_network()?;
    let budget = SimBudget {
        horizon: cfg.run.horizon,
        burn_in_fraction: cfg.run.burn_in_fraction,
        batches: cfg.run.batches,
        seed: cfg.run.seed,
        ..SimBudget::default()
    };
    let stats = simulate_lambda0(&net, &budget).map_err(|e| CliError::from_core("run", e))?;
    let balance = check_balance(&stats, w_e, k_e, &cfg.distributions.eta2).map_err(|e| CliError::from_core("run", e))?;
    let pi = pi_plus(&net, &stats, 0.95).map_err(|e| CliError::from_core("run", e))?;
    let report = BalanceOutputReport {
        config_hash: cfg.hash(),
        seed: cfg.run.seed,
        w_e,
        k_e,
        events: stats.events(),
        balance,
        pi_plus: pi,
        pi_plus_linear: 1.0 + k_e as f64 * w_e,
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let files = vec![write_json(&dir, "balance.json", &report)?];
    Ok(BalanceOutput { report, files })
}
