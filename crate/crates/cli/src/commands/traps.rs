use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use hourglass_core::patterns::{
    brute_force_traps, enumerate_traps, hebb_connections, pattern_from_trap, validate_pattern_family, verify_storage,
    FamilyReport, Pattern, PatternFamily, Realization,
};
use hourglass_core::topology::BlockStructure;
use hourglass_core::SiteSet;
use serde::Serialize;

use crate::config::{
    AnalysisConfig, ConnectionsConfig, DistributionsConfig, ExperimentConfig, OutputConfig, RunConfig, TopologyConfig,
};
use crate::error::{CliError, CliResult};
use crate::output::{write_file, write_json};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapEntry {
    /// 1-based position in the listed order.
    pub index: usize,
    /// 1-based block labels, for block networks.
    pub blocks: Option<Vec<usize>>,
    pub sites: SiteSet,
    pub pattern: Pattern,
    pub ascii: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceCheck {
    pub checked: bool,
    pub agrees: Option<bool>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapsReport {
    pub config_hash: String,
    pub label: &'static str,
    pub count: usize,
    pub traps: Vec<TrapEntry>,
    pub brute_force: BruteForceCheck,
}

pub struct TrapsOutput {
    pub report: TrapsReport,
    pub files: Vec<PathBuf>,
}

fn block_labels(bs: &BlockStructure, sites: &SiteSet) -> Vec<usize> {
    (0..bs.blocks().len())
        .filter(|&b| bs.block(b).iter().all(|x| sites.contains(x)))
        .map(|b| b + 1)
        .collect()
}

/// Lists the traps: the one-block-per-pair formula for block networks,
/// exhaustive analytic search otherwise. Small block networks are also
/// searched exhaustively as a cross-check.
pub fn cmd_traps(cfg: &ExperimentConfig, out: Option<&Path>) -> CliResult<TrapsOutput> {
    cfg.validate()?;
    let net = cfg.build_network()?;
    let budget = cfg.analysis.budget();
    let (traps, bs, brute_force) = match (cfg.block_structure()?, cfg.block_constants()) {
        (Some(bs), Some(c)) => {
            let traps = enumerate_traps(&bs, c).map_err(|e| CliError::config("connections", e))?;
            let check = match brute_force_traps(&net, budget) {
                Ok(found) => BruteForceCheck {
                    checked: true,
                    agrees: Some(
                        found.into_iter().collect::<BTreeSet<_>>() == traps.iter().cloned().collect::<BTreeSet<_>>(),
                    ),
                    reason: None,
                },
                Err(e) => BruteForceCheck {
                    checked: false,
                    agrees: None,
                    reason: Some(e.to_string()),
                },
            };
            (traps, Some(bs), check)
        }
        _ => {
            let traps = brute_force_traps(&net, budget).map_err(|e| CliError::from_core("topology", e))?;
            (
                traps,
                None,
                BruteForceCheck {
                    checked: true,
                    agrees: Some(true),
                    reason: None,
                },
            )
        }
    };
    let entries: Vec<TrapEntry> = traps
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let pattern = pattern_from_trap(t, net.topology());
            TrapEntry {
                index: k + 1,
                blocks: bs.as_ref().map(|b| block_labels(b, t)),
                sites: t.clone(),
                ascii: pattern.to_ascii(),
                pattern,
            }
        })
        .collect();
    let report = TrapsReport {
        config_hash: cfg.hash(),
        label: "inductive",
        count: entries.len(),
        traps: entries,
        brute_force,
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone());
    let patterns: Vec<&Pattern> = report.traps.iter().map(|t| &t.pattern).collect();
    let files = vec![
        write_json(&dir, "traps.json", &report)?,
        write_file(&dir, "patterns.json", &(serde_json::to_string(&patterns).expect("patterns serialise") + "\n"))?,
    ];
    Ok(TrapsOutput { report, files })
}

/// Reads a pattern file: a JSON array of `±1` arrays.
pub fn load_patterns(path: &Path) -> CliResult<Vec<Pattern>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: line {}", path.display(), e.line()), e))
}

#[derive(Debug, Clone, Serialize)]
pub struct LearnReport {
    pub family: FamilyReport,
    pub a: f64,
    #[serde(rename = "A")]
    pub coef_a: f64,
    #[serde(rename = "B")]
    pub coef_b: f64,
    /// Distinct learned magnitudes `-Eθ`, ascending.
    pub magnitudes: Vec<f64>,
    pub realization: Realization,
    pub verify_storage: bool,
    pub config_hash: String,
}

pub struct LearnOutput {
    pub config: ExperimentConfig,
    pub report: LearnReport,
    pub files: Vec<PathBuf>,
}

/// Learns connections from `patterns` and writes a runnable config with a
/// verification report.
pub fn cmd_learn(
    patterns: Vec<Pattern>,
    a: f64,
    coef_a: f64,
    coef_b: f64,
    realization: Realization,
    out: &Path,
) -> CliResult<LearnOutput> {
    hourglass_core::patterns::check_learning_constants(coef_a, coef_b).map_err(|e| CliError::config("A, B", e))?;
    let family = PatternFamily::infer(patterns, false).map_err(|e| CliError::config("patterns", e))?;
    let family_report = validate_pattern_family(&family);
    let learned = hebb_connections(&family, a, coef_a, coef_b).map_err(|e| CliError::config("patterns", e))?;
    let consts = learned.constants();
    let bs = &learned.blocks;
    let unit = realization.unit();
    let y = unit
        .rescaled(a)
        .map_err(|e| CliError::config("a", e))?;
    let config = ExperimentConfig {
        topology: TopologyConfig::Blocks {
            p: bs.p(),
            k: bs.k(),
            pairing: bs.pairing().iter().map(|&(u, v)| [u + 1, v + 1]).collect(),
            members: Some(bs.blocks().to_vec()),
            allow_trivial: false,
        },
        connections: ConnectionsConfig::Blocks {
            a: consts.a,
            b: consts.b,
            c: consts.c,
        },
        distributions: DistributionsConfig {
            y,
            theta: unit,
            ..DistributionsConfig::default()
        },
        run: RunConfig::default(),
        analysis: AnalysisConfig::default(),
        output: OutputConfig::default(),
    };
    config.validate()?;
    let report = LearnReport {
        family: family_report,
        a,
        coef_a,
        coef_b,
        magnitudes: learned.distinct_magnitudes(),
        realization,
        verify_storage: verify_storage(&learned, &family),
        config_hash: config.hash(),
    };
    let files = vec![
        write_file(out, "learned_config.json", &(config.render() + "\n"))?,
        write_json(out, "learn_report.json", &report)?,
    ];
    Ok(LearnOutput { config, report, files })
}
