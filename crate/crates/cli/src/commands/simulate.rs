use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hourglass_core::analysis::{
    estimate_frequencies, observe, second_vector_field, EmpiricalVerdict, FiringStats, Frequencies,
    Observation, SiteRates, SubsetLattice, Verdict,
};
use hourglass_core::dynamics::Simulator;
use hourglass_core::network::Network;
use hourglass_core::patterns::{enumerate_traps, pattern_from_trap, Pattern};
use hourglass_core::topology::Geometry;
use hourglass_core::SiteSet;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{write_file, write_json, Csv};

/// Command-line overrides of the run section.
#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub out: Option<PathBuf>,
}

/// One simulation of a config: the heuristic observation over the trailing
/// half and frequencies over the post-burn-in window.
pub struct RunOutcome {
    pub network: Network,
    pub observation: Observation,
    pub stats: FiringStats,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<RunOutcome> {
    let network = cfg.build_network()?;
    let state = cfg.initial_state(&network)?;
    let mut sim = Simulator::new(&network, state).map_err(|e| CliError::from_core("run", e))?;
    let r = &cfg.run;
    let mut stats = FiringStats::for_run(network.n_sites(), 0.0, r.horizon, r.burn_in_fraction, r.batches)
        .with_reservoir(0, r.seed);
    let observation = observe(&mut sim, r.horizon, cfg.analysis.thresholds, r.batches, &mut stats)
        .map_err(|e| CliError::from_core("run", e))?;
    drop(sim);
    Ok(RunOutcome {
        network,
        observation,
        stats,
    })
}

#[derive(Debug, Serialize)]
pub struct HeuristicReport {
    pub label: &'static str,
    pub verdict: EmpiricalVerdict,
    pub silent: SiteSet,
    pub active: SiteSet,
    pub trailing_window: (f64, f64),
    pub trailing_firings: Vec<u64>,
    pub growth: Vec<Option<f64>>,
}

#[derive(Debug, Serialize)]
pub struct InductiveReport {
    pub label: &'static str,
    pub verdict: Option<Verdict>,
    pub witness: Option<SiteSet>,
    /// Whether the observed silent set is a trap of the network.
    pub silent_set_is_trap: Option<bool>,
    pub unavailable: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SiteFrequency {
    pub site: usize,
    pub pi0: f64,
    pub pie_total: f64,
    pub pi_total: f64,
}

#[derive(Debug, Serialize)]
pub struct FieldReport {
    /// Sites whose empirical rates define the field.
    pub active: SiteSet,
    pub drift: BTreeMap<usize, f64>,
}

#[derive(Debug, Serialize)]
pub struct MatchedTrap {
    /// 1-based position in canonical trap order.
    pub index: usize,
    pub sites: SiteSet,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub window: (f64, f64),
    pub events: u64,
    pub heuristic: HeuristicReport,
    pub inductive: InductiveReport,
    pub frequencies: Vec<SiteFrequency>,
    pub field: Option<FieldReport>,
    pub matched_trap: Option<MatchedTrap>,
}

pub struct SimulateOutput {
    pub report: SimulateReport,
    pub pattern: Pattern,
    pub files: Vec<PathBuf>,
}

fn inductive(cfg: &ExperimentConfig, net: &Network, silent: &SiteSet) -> InductiveReport {
    let unavailable = |why: String| InductiveReport {
        label: "inductive",
        verdict: None,
        witness: None,
        silent_set_is_trap: None,
        unavailable: Some(why),
    };
    let all = net.topology().all_sites();
    let lattice = match SubsetLattice::build(net, &all, &cfg.analysis.method(), cfg.analysis.budget()) {
        Ok(l) => l,
        Err(e) => return unavailable(e.to_string()),
    };
    let c = lattice.classification(&all).expect("world is classified");
    let silent_set_is_trap = (!silent.is_empty() && silent.len() < all.len())
        .then(|| lattice.is_trap(silent).expect("silent set lies in the world"));
    InductiveReport {
        label: "inductive",
        verdict: Some(c.verdict),
        witness: c.witness,
        silent_set_is_trap,
        unavailable: None,
    }
}

fn site_frequencies(f: &Frequencies) -> Vec<SiteFrequency> {
    (0..f.pi0.len())
        .map(|i| SiteFrequency {
            site: i,
            pi0: f.pi0[i],
            pie_total: f.pie_total(i),
            pi_total: f.pi_total[i],
        })
        .collect()
}

/// Row width of the ASCII pattern: one torus row, or one block.
fn ascii_width(net: &Network) -> usize {
    match net.topology().geometry() {
        Geometry::Torus(t) if t.nu() >= 2 => t.side(),
        Geometry::Torus(t) => t.n_sites(),
        Geometry::Blocks(b) => b.k(),
    }
}

pub fn cmd_simulate(cfg: &ExperimentConfig, opts: &SimulateOptions) -> CliResult<SimulateOutput> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.run.seed = s;
    }
    if let Some(h) = opts.horizon {
        cfg.run.horizon = h;
    }
    if let Some(o) = &opts.out {
        cfg.output.dir = o.clone();
    }
    cfg.validate()?;
    let RunOutcome {
        network,
        observation: obs,
        stats,
    } = run_experiment(&cfg)?;
    let freq = estimate_frequencies(&stats).map_err(|e| CliError::from_core("run", e))?;
    let hash = cfg.hash();
    let seed = cfg.run.seed;

    let active = obs.active();
    let field = (!active.is_empty() && active.len() < network.n_sites())
        .then(|| {
            let rates = SiteRates::from_frequencies(&freq, &active);
            second_vector_field(&network, &active, &rates).map(|f| FieldReport {
                active: active.clone(),
                drift: f.drift,
            })
        })
        .transpose()
        .map_err(|e| CliError::from_core("run", e))?;

    let matched_trap = match (cfg.block_structure()?, cfg.block_constants()) {
        (Some(bs), Some(c)) => enumerate_traps(&bs, c).ok().and_then(|traps| {
            traps
                .iter()
                .position(|t| *t == obs.silent)
                .map(|k| MatchedTrap {
                    index: k + 1,
                    sites: traps[k].clone(),
                })
        }),
        _ => None,
    };

    let (t0, t1) = obs.trailing.window();
    let report = SimulateReport {
        config_hash: hash.clone(),
        seed,
        config: cfg.embedded(),
        window: stats.window(),
        events: stats.events(),
        heuristic: HeuristicReport {
            label: "heuristic",
            verdict: obs.verdict,
            silent: obs.silent.clone(),
            active,
            trailing_window: (t0, t1),
            trailing_firings: obs.firings.clone(),
            growth: obs.growth.clone(),
        },
        inductive: inductive(&cfg, &network, &obs.silent),
        frequencies: site_frequencies(&freq),
        field,
        matched_trap,
    };

    let pattern = pattern_from_trap(&obs.silent, network.topology());
    let dir = cfg.output.dir.clone();
    let files = write_outputs(&dir, &report, &pattern, ascii_width(&network))?;
    Ok(SimulateOutput {
        report,
        pattern,
        files,
    })
}

#[derive(Serialize)]
struct PatternFile<'a> {
    config_hash: &'a str,
    seed: u64,
    label: &'static str,
    legend: &'static str,
    pattern: &'a Pattern,
}

fn write_outputs(dir: &Path, report: &SimulateReport, pattern: &Pattern, width: usize) -> CliResult<Vec<PathBuf>> {
    let meta = [
        ("config_hash", report.config_hash.clone()),
        ("seed", report.seed.to_string()),
    ];
    let mut csv = Csv::new(&meta, &["site", "pi0", "pie_total", "pi_total"]);
    for f in &report.frequencies {
        csv.row(&[
            f.site.to_string(),
            f.pi0.to_string(),
            f.pie_total.to_string(),
            f.pi_total.to_string(),
        ]);
    }
    let mut ascii = format!(
        "# config_hash={}\n# seed={}\n# heuristic: '#' = silent in the trailing half-window, '.' = active\n",
        report.config_hash, report.seed
    );
    ascii.push_str(&pattern.to_ascii_rows(width));
    ascii.push('\n');
    Ok(vec![
        write_file(dir, "frequencies.csv", &csv.finish())?,
        write_json(dir, "report.json", report)?,
        write_json(
            dir,
            "pattern.json",
            &PatternFile {
                config_hash: &report.config_hash,
                seed: report.seed,
                label: "heuristic",
                legend: "+1 = silent (trap member), -1 = active",
                pattern,
            },
        )?,
        write_file(dir, "pattern.txt", &ascii)?,
    ])
}
