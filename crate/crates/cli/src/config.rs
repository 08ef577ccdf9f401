//! Experiment configuration: one JSON document per experiment.
//!
//! Block labels in the file are 1-based; site indices are 0-based flat
//! indices (site 0 is the torus origin).

use std::path::{Path, PathBuf};

use hourglass_core::analysis::{Budget, HeuristicThresholds, McOptions, Method};
use hourglass_core::dynamics::SimState;
use hourglass_core::network::{BlockConstants, Network, Restriction, TorusConnections};
use hourglass_core::patterns::enumerate_traps;
use hourglass_core::stochastic::DistributionSpec;
use hourglass_core::topology::{build_block_network, build_torus, BlockStructure};
use hourglass_core::SiteSet;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologyConfig,
    pub connections: ConnectionsConfig,
    #[serde(default)]
    pub distributions: DistributionsConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologyConfig {
    Torus {
        nu: usize,
        half_width: usize,
        k_e: usize,
        #[serde(default)]
        offsets: Option<Vec<Vec<i64>>>,
    },
    Blocks {
        p: usize,
        k: usize,
        /// Pairs of 1-based block labels.
        pairing: Vec<[usize; 2]>,
        /// Sites of each block in label order; contiguous blocks if absent.
        #[serde(default)]
        members: Option<Vec<Vec<usize>>>,
        #[serde(default)]
        allow_trivial: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionsConfig {
    Torus { w_i: f64, w_e: f64 },
    Blocks { a: f64, b: f64, c: f64 },
}

/// Laws of the random variables. On the torus `y`, `eta1` and `eta2` need
/// unit mean; in the block network `y` is rescaled to mean `a` and `theta`
/// (unit mean) is scaled by `b` or `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionsConfig {
    #[serde(default = "unit_exp")]
    pub y: DistributionSpec,
    #[serde(default = "unit_exp")]
    pub eta1: DistributionSpec,
    #[serde(default = "unit_exp")]
    pub eta2: DistributionSpec,
    #[serde(default = "unit_exp")]
    pub theta: DistributionSpec,
}

fn unit_exp() -> DistributionSpec {
    DistributionSpec::unit_exponential()
}

impl Default for DistributionsConfig {
    fn default() -> Self {
        Self {
            y: unit_exp(),
            eta1: unit_exp(),
            eta2: unit_exp(),
            theta: unit_exp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in_fraction: f64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub init: InitConfig,
}

fn default_horizon() -> f64 {
    10_000.0
}

fn default_burn_in() -> f64 {
    0.2
}

fn default_batches() -> usize {
    20
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            horizon: default_horizon(),
            burn_in_fraction: default_burn_in(),
            batches: default_batches(),
            init: InitConfig::default(),
        }
    }
}

/// Initial countdowns. Every variant first draws `x_i(0)` from `Y`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitConfig {
    #[default]
    Random,
    /// Adds `amount` to the selected sites.
    Raised { sites: SiteSelection, amount: f64 },
    /// Sets the selected sites to `horizon + 1`.
    Silenced { sites: SiteSelection },
    /// Explicit values for every site.
    Values { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteSelection {
    /// `"even"` is the checkerboard containing the origin, `"odd"` its complement.
    Named(NamedSites),
    /// Union of 1-based block labels.
    Blocks { blocks: Vec<usize> },
    /// The 1-based trap in canonical order.
    Trap { trap: usize },
    Sites(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedSites {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    #[default]
    Analytic,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub method: MethodKind,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
    #[serde(default)]
    pub thresholds: HeuristicThresholds,
    #[serde(default)]
    pub monte_carlo: McOptions,
}

fn default_max_sites() -> usize {
    Budget::default().max_sites
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            method: MethodKind::default(),
            max_sites: default_max_sites(),
            thresholds: HeuristicThresholds::default(),
            monte_carlo: McOptions::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn method(&self) -> Method {
        match self.method {
            MethodKind::Analytic => Method::Analytic,
            MethodKind::MonteCarlo => Method::MonteCarlo(self.monte_carlo),
        }
    }

    pub fn budget(&self) -> Budget {
        Budget {
            max_sites: self.max_sites,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

/// Hex SHA-256 of the compact JSON rendering of `value`.
pub fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serialises");
    hex::encode(Sha256::digest(&bytes))
}

impl ExperimentConfig {
    /// Parses and validates a JSON document.
    pub fn parse(json: &str) -> CliResult<Self> {
        let cfg: Self = serde_json::from_str(json).map_err(|e| {
            CliError::config(format!("line {} column {}", e.line(), e.column()), e)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// The config as embedded in outputs: the output section is dropped so
    /// that results do not depend on where they are written.
    pub fn embedded(&self) -> Self {
        Self {
            output: OutputConfig::default(),
            ..self.clone()
        }
    }

    pub fn hash(&self) -> String {
        hash_json(&self.embedded())
    }

    pub fn validate(&self) -> CliResult<()> {
        let r = &self.run;
        if !(r.horizon.is_finite() && r.horizon > 0.0) {
            return Err(CliError::config("run.horizon", format!("must be positive, got {}", r.horizon)));
        }
        if !(0.0..1.0).contains(&r.burn_in_fraction) {
            return Err(CliError::config(
                "run.burn_in_fraction",
                format!("must lie in [0, 1), got {}", r.burn_in_fraction),
            ));
        }
        if r.batches < 2 {
            return Err(CliError::config("run.batches", "need at least two batches"));
        }
        let t = &self.analysis.thresholds;
        if !(t.ergodic_growth > 0.0 && t.transient_growth > 0.0) {
            return Err(CliError::config("analysis.thresholds", "thresholds must be positive"));
        }
        if self.analysis.max_sites == 0 {
            return Err(CliError::config("analysis.max_sites", "must be at least 1"));
        }
        let net = self.build_network()?;
        if let InitConfig::Values { values } = &r.init {
            if values.len() != net.n_sites() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(CliError::config(
                    "run.init.values",
                    format!("need {} positive finite values", net.n_sites()),
                ));
            }
        }
        if let InitConfig::Raised { amount, .. } = &r.init {
            if !(amount.is_finite() && *amount >= 0.0) {
                return Err(CliError::config("run.init.amount", "must be finite and non-negative"));
            }
        }
        if let InitConfig::Raised { sites, .. } | InitConfig::Silenced { sites } = &r.init {
            self.resolve_sites(sites, &net)?;
        }
        Ok(())
    }

    pub fn block_structure(&self) -> CliResult<Option<BlockStructure>> {
        let TopologyConfig::Blocks { p, k, pairing, members, allow_trivial } = &self.topology else {
            return Ok(None);
        };
        let mut pairs = Vec::with_capacity(pairing.len());
        for (n, &[u, v]) in pairing.iter().enumerate() {
            if u == 0 || v == 0 {
                return Err(CliError::config(
                    format!("topology.pairing[{n}]"),
                    "block labels are 1-based",
                ));
            }
            pairs.push((u - 1, v - 1));
        }
        let bs = match members {
            Some(m) => BlockStructure::with_members(*p, *k, pairs, m.clone(), *allow_trivial),
            None => BlockStructure::new(*p, *k, pairs, *allow_trivial),
        };
        bs.map(Some).map_err(|e| CliError::config("topology", e))
    }

    pub fn block_constants(&self) -> Option<BlockConstants> {
        match self.connections {
            ConnectionsConfig::Blocks { a, b, c } => Some(BlockConstants::new(a, b, c)),
            ConnectionsConfig::Torus { .. } => None,
        }
    }

    pub fn build_network(&self) -> CliResult<Network> {
        let d = &self.distributions;
        match (&self.topology, &self.connections) {
            (TopologyConfig::Torus { nu, half_width, k_e, offsets }, ConnectionsConfig::Torus { w_i, w_e }) => {
                let topo = build_torus(*nu, *half_width, *k_e, offsets.clone())
                    .map_err(|e| CliError::config("topology", e))?;
                let conn = TorusConnections {
                    w_i: *w_i,
                    w_e: *w_e,
                    eta1: d.eta1,
                    eta2: d.eta2,
                    y: d.y,
                };
                Network::torus(topo, conn).map_err(|e| CliError::config("connections", e))
            }
            (TopologyConfig::Blocks { .. }, ConnectionsConfig::Blocks { a, b, c }) => {
                if !(*a > 0.0 && a.is_finite()) {
                    return Err(CliError::config("connections.a", format!("must be positive, got {a}")));
                }
                let bs = self.block_structure()?.expect("block topology");
                Network::blocks(build_block_network(bs), BlockConstants::new(*a, *b, *c), d.theta, d.y)
                    .map_err(|e| CliError::config("connections", e))
            }
            _ => Err(CliError::config(
                "connections.kind",
                "connection kind must match the topology kind",
            )),
        }
    }

    pub fn resolve_sites(&self, sel: &SiteSelection, net: &Network) -> CliResult<SiteSet> {
        let n = net.n_sites();
        match sel {
            SiteSelection::Named(which) => {
                let torus = net
                    .topology()
                    .torus()
                    .ok_or_else(|| CliError::config("run.init.sites", "even/odd need a torus"))?;
                let even = torus.sublattice_lambda0();
                Ok(match which {
                    NamedSites::Even => even,
                    NamedSites::Odd => (0..n).filter(|i| !even.contains(i)).collect(),
                })
            }
            SiteSelection::Blocks { blocks } => {
                let bs = self
                    .block_structure()?
                    .ok_or_else(|| CliError::config("run.init.sites", "block labels need a block topology"))?;
                let mut ids = Vec::new();
                for &b in blocks {
                    if b == 0 || b > bs.blocks().len() {
                        return Err(CliError::config("run.init.sites.blocks", format!("no block labelled {b}")));
                    }
                    ids.push(b - 1);
                }
                Ok(bs.union_of(&ids))
            }
            SiteSelection::Trap { trap } => {
                let bs = self
                    .block_structure()?
                    .ok_or_else(|| CliError::config("run.init.sites", "traps need a block topology"))?;
                let consts = self.block_constants().expect("block connections");
                let traps = enumerate_traps(&bs, consts).map_err(|e| CliError::config("connections", e))?;
                if *trap == 0 || *trap > traps.len() {
                    return Err(CliError::config(
                        "run.init.sites.trap",
                        format!("trap index must lie in 1..={}", traps.len()),
                    ));
                }
                Ok(traps[trap - 1].clone())
            }
            SiteSelection::Sites(list) => {
                if let Some(bad) = list.iter().find(|&&i| i >= n) {
                    return Err(CliError::config("run.init.sites", format!("site {bad} outside 0..{n}")));
                }
                Ok(list.iter().copied().collect())
            }
        }
    }

    /// Initial state for the whole network.
    pub fn initial_state(&self, net: &Network) -> CliResult<SimState> {
        let full = Restriction::full(net.n_sites());
        let seed = self.run.seed;
        let drawn = SimState::init(net, &full, net.self_characteristic(0), seed);
        let mut values: Vec<f64> = (0..net.n_sites()).map(|i| drawn.x(i).expect("all active")).collect();
        match &self.run.init {
            InitConfig::Random => return Ok(drawn),
            InitConfig::Raised { sites, amount } => {
                for i in self.resolve_sites(sites, net)? {
                    values[i] += amount;
                }
            }
            InitConfig::Silenced { sites } => {
                for i in self.resolve_sites(sites, net)? {
                    values[i] = self.run.horizon + 1.0;
                }
            }
            InitConfig::Values { values: v } => values.clone_from(v),
        }
        // The dynamics continue on an independent stream.
        SimState::from_values(&full, &values, seed.wrapping_add(1)).map_err(|e| CliError::config("run.init", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BLOCK: &str = r#"{
        "topology": {"kind": "blocks", "p": 2, "k": 2, "pairing": [[1, 2], [3, 4]]},
        "connections": {"kind": "blocks", "a": 1.0, "b": 0.5, "c": 2.0},
        "run": {"seed": 3, "init": {"kind": "silenced", "sites": {"trap": 2}}}
    }"#;

    #[test]
    fn defaults_and_round_trip() {
        let cfg = ExperimentConfig::parse(BLOCK).unwrap();
        assert_eq!(cfg.run.horizon, 10_000.0);
        assert_eq!(cfg.analysis.max_sites, 16);
        let again = ExperimentConfig::parse(&cfg.render()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut cfg = ExperimentConfig::parse(BLOCK).unwrap();
        let h = cfg.hash();
        cfg.output.dir = "elsewhere".into();
        assert_eq!(cfg.hash(), h);
        cfg.run.seed = 4;
        assert_ne!(cfg.hash(), h);
    }

    #[test]
    fn site_selections() {
        let cfg = ExperimentConfig::parse(BLOCK).unwrap();
        let net = cfg.build_network().unwrap();
        let trap = cfg.resolve_sites(&SiteSelection::Trap { trap: 2 }, &net).unwrap();
        assert_eq!(trap, SiteSet::from([0, 1, 6, 7]));
        let blocks = cfg.resolve_sites(&SiteSelection::Blocks { blocks: vec![2] }, &net).unwrap();
        assert_eq!(blocks, SiteSet::from([2, 3]));
        let st = cfg.initial_state(&net).unwrap();
        assert_eq!(st.x(0), Some(10_001.0));
        assert!(st.x(2).unwrap() < 100.0);
    }

    #[test]
    fn located_errors() {
        let bad = BLOCK.replace("\"b\": 0.5", "\"b\": -0.5");
        let e = ExperimentConfig::parse(&bad).unwrap_err();
        assert!(e.to_string().contains("connections"), "{e}");
        let bad = BLOCK.replace("[[1, 2], [3, 4]]", "[[0, 2], [3, 4]]");
        assert!(ExperimentConfig::parse(&bad).unwrap_err().to_string().contains("pairing[0]"));
        let bad = BLOCK.replace("\"trap\": 2", "\"trap\": 9");
        assert!(ExperimentConfig::parse(&bad).unwrap_err().to_string().contains("trap"));
        let bad = BLOCK.replace("\"seed\": 3", "\"seed\": 3, \"horizon\": 0");
        assert!(ExperimentConfig::parse(&bad).unwrap_err().to_string().contains("run.horizon"));
        let bad = BLOCK.replace("\"topology\"", "\"topologyy\"");
        assert_eq!(ExperimentConfig::parse(&bad).unwrap_err().exit_code(), 2);
        let mixed = r#"{"topology": {"kind": "torus", "nu": 1, "half_width": 5, "k_e": 2},
                        "connections": {"kind": "blocks", "a": 1, "b": 0.5, "c": 2}}"#;
        assert!(ExperimentConfig::parse(mixed).unwrap_err().to_string().contains("connections.kind"));
    }

    #[test]
    fn torus_named_sites() {
        let cfg = ExperimentConfig::parse(
            r#"{"topology": {"kind": "torus", "nu": 1, "half_width": 3, "k_e": 2},
                "connections": {"kind": "torus", "w_i": 0.7, "w_e": 0.0},
                "run": {"init": {"kind": "raised", "sites": "odd", "amount": 20.0}}}"#,
        )
        .unwrap();
        let net = cfg.build_network().unwrap();
        let odd = cfg.resolve_sites(&SiteSelection::Named(NamedSites::Odd), &net).unwrap();
        assert_eq!(odd, SiteSet::from([1, 3, 5]));
        let st = cfg.initial_state(&net).unwrap();
        assert!(st.x(1).unwrap() > 20.0 && st.x(0).unwrap() < 20.0);
    }
}
