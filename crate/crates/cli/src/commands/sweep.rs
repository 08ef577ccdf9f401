use std::path::{Path, PathBuf};

use hourglass_core::analysis::stats::mean_half_width;
use hourglass_core::analysis::EmpiricalVerdict;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simulate::run_experiment;
use crate::config::{hash_json, ConnectionsConfig, ExperimentConfig, OutputConfig};
use crate::error::{CliError, CliResult};
use crate::output::{write_file, write_json, Csv};

/// Grid over `(w_I, w_E)` on a torus base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
    pub w_i: Vec<f64>,
    pub w_e: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

impl SweepSpec {
    pub fn parse(json: &str) -> CliResult<Self> {
        let s: Self = serde_json::from_str(json)
            .map_err(|e| CliError::config(format!("line {} column {}", e.line(), e.column()), e))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !matches!(self.base.connections, ConnectionsConfig::Torus { .. }) {
            return Err(CliError::config("base.connections", "sweeps need a torus config"));
        }
        self.base.validate()?;
        for (k, &w) in self.w_i.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(CliError::config(format!("w_i[{k}]"), "must be finite and non-negative"));
            }
        }
        for (k, &w) in self.w_e.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(CliError::config(format!("w_e[{k}]"), "must be finite and non-negative"));
            }
        }
        if self.replications == 0 {
            return Err(CliError::config("replications", "must be at least 1"));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let mut s = self.clone();
        s.output = OutputConfig::default();
        s.base = s.base.embedded();
        hash_json(&s)
    }

    /// Cells ordered by `w_E`, then `w_I`.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        self.w_e
            .iter()
            .flat_map(|&we| self.w_i.iter().map(move |&wi| (wi, we)))
            .collect()
    }

    /// Seed of replication `r` in cell `cell`; every run has its own.
    pub fn seed(&self, cell: usize, r: usize) -> u64 {
        self.seed_base
            .wrapping_add((cell * self.replications + r) as u64)
    }

    /// The base config specialised to one run.
    pub fn run_config(&self, cell: usize, r: usize) -> ExperimentConfig {
        let (wi, we) = self.cells()[cell];
        let mut cfg = self.base.clone();
        cfg.connections = ConnectionsConfig::Torus { w_i: wi, w_e: we };
        cfg.run.seed = self.seed(cell, r);
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRow {
    pub w_i: f64,
    pub w_e: f64,
    pub replication: usize,
    pub transient: bool,
    pub mean_pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRow {
    pub w_i: f64,
    pub w_e: f64,
    pub runs: usize,
    pub transient_fraction: f64,
    pub mean_pi: f64,
    pub pi_ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub config_hash: String,
    pub seed_base: u64,
    pub label: &'static str,
    pub cells: Vec<CellRow>,
    /// Per `w_E`: interpolated `w_I` where the transient fraction first reaches 1/2.
    pub crossings: Vec<(f64, Option<f64>)>,
    /// Least-squares slope of the crossings against `w_E`.
    pub slope: Option<f64>,
}

pub struct SweepOutput {
    pub runs: Vec<RunRow>,
    pub summary: SweepSummary,
    pub files: Vec<PathBuf>,
}

fn one_run(spec: &SweepSpec, cell: usize, r: usize) -> CliResult<RunRow> {
    let cfg = spec.run_config(cell, r);
    let out = run_experiment(&cfg)?;
    let len = out.stats.window_length();
    let n = out.network.n_sites();
    let total: u64 = (0..n).map(|i| out.stats.total(i)).sum();
    let (w_i, w_e) = spec.cells()[cell];
    Ok(RunRow {
        w_i,
        w_e,
        replication: r,
        transient: out.observation.verdict == EmpiricalVerdict::Transient,
        mean_pi: total as f64 / (n as f64 * len),
    })
}

fn crossing(cells: &[&CellRow]) -> Option<f64> {
    let mut sorted: Vec<&&CellRow> = cells.iter().collect();
    sorted.sort_by(|a, b| a.w_i.total_cmp(&b.w_i));
    sorted.windows(2).find_map(|w| {
        let (lo, hi) = (w[0], w[1]);
        (lo.transient_fraction < 0.5 && hi.transient_fraction >= 0.5).then(|| {
            let t = (0.5 - lo.transient_fraction) / (hi.transient_fraction - lo.transient_fraction);
            lo.w_i + t * (hi.w_i - lo.w_i)
        })
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn cmd_sweep(spec: &SweepSpec, out: Option<&Path>) -> CliResult<SweepOutput> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.replications).map(move |r| (c, r)))
        .collect();
    let runs: Vec<RunRow> = jobs
        .par_iter()
        .map(|&(c, r)| one_run(spec, c, r))
        .collect::<CliResult<_>>()?;

    let cell_rows: Vec<CellRow> = runs
        .chunks(spec.replications)
        .map(|chunk| {
            let pis: Vec<f64> = chunk.iter().map(|r| r.mean_pi).collect();
            let (mean_pi, hw) = mean_half_width(&pis, 0.95);
            CellRow {
                w_i: chunk[0].w_i,
                w_e: chunk[0].w_e,
                runs: chunk.len(),
                transient_fraction: chunk.iter().filter(|r| r.transient).count() as f64 / chunk.len() as f64,
                mean_pi,
                pi_ci_half_width: hw,
            }
        })
        .collect();
    let crossings: Vec<(f64, Option<f64>)> = spec
        .w_e
        .iter()
        .map(|&we| {
            let group: Vec<&CellRow> = cell_rows.iter().filter(|c| c.w_e == we).collect();
            (we, crossing(&group))
        })
        .collect();
    let pts: Vec<(f64, f64)> = crossings.iter().filter_map(|&(we, c)| c.map(|w| (we, w))).collect();
    let summary = SweepSummary {
        config_hash: spec.hash(),
        seed_base: spec.seed_base,
        label: "heuristic",
        cells: cell_rows,
        crossings,
        slope: least_squares_slope(&pts),
    };

    let meta = [
        ("config_hash", summary.config_hash.clone()),
        ("seed_base", spec.seed_base.to_string()),
    ];
    let mut runs_csv = Csv::new(&meta, &["w_I", "w_E", "replication", "transient"]);
    for r in &runs {
        runs_csv.row(&[
            r.w_i.to_string(),
            r.w_e.to_string(),
            r.replication.to_string(),
            u8::from(r.transient).to_string(),
        ]);
    }
    let mut cells_csv = Csv::new(
        &meta,
        &["w_I", "w_E", "runs", "transient_fraction", "mean_pi", "pi_ci_half_width"],
    );
    for c in &summary.cells {
        cells_csv.row(&[
            c.w_i.to_string(),
            c.w_e.to_string(),
            c.runs.to_string(),
            c.transient_fraction.to_string(),
            c.mean_pi.to_string(),
            c.pi_ci_half_width.to_string(),
        ]);
    }
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| spec.output.dir.clone());
    let files = vec![
        write_file(&dir, "sweep_runs.csv", &runs_csv.finish())?,
        write_file(&dir, "sweep_cells.csv", &cells_csv.finish())?,
        write_json(&dir, "sweep_summary.json", &summary)?,
    ];
    Ok(SweepOutput { runs, summary, files })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_and_crossing() {
        assert!((least_squares_slope(&[(0.0, 0.5), (0.1, 0.4)]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(least_squares_slope(&[(0.0, 0.5)]), None);
        let row = |w_i, f| CellRow { w_i, w_e: 0.0, runs: 1, transient_fraction: f, mean_pi: 1.0, pi_ci_half_width: 0.0 };
        let (a, b, c) = (row(0.3, 0.0), row(0.5, 0.25), row(0.7, 0.75));
        assert!((crossing(&[&c, &a, &b]).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(crossing(&[&a, &b]), None);
    }
}
