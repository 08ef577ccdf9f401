use serde::{Deserialize, Serialize};

use super::stats::FiringStats;
use crate::dynamics::{Recorder, Simulator};
use crate::error::{Error, Result};
use crate::SiteSet;

/// Growth thresholds of the finite-time ergodicity proxy, as fractions of
/// the trailing half-window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicThresholds {
    /// Every site fires and no countdown grows by more than this.
    pub ergodic_growth: f64,
    /// Some silent site grew by at least this.
    pub transient_growth: f64,
}

impl Default for HeuristicThresholds {
    fn default() -> Self {
        Self {
            ergodic_growth: 0.25,
            transient_growth: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmpiricalVerdict {
    Ergodic,
    Transient,
    Unknown,
}

/// Result of one heuristic observation. Firings and growth refer to the
/// trailing half `[t0 + H/2, t0 + H)` of the run.
#[derive(Debug, Clone)]
pub struct Observation {
    pub verdict: EmpiricalVerdict,
    pub half_window: f64,
    /// Firings per site in the trailing half; zero for frozen sites.
    pub firings: Vec<u64>,
    /// `x_i(end) - x_i(mid)` for active sites.
    pub growth: Vec<Option<f64>>,
    /// Active sites that never fired in the trailing half.
    pub silent: SiteSet,
    /// Full statistics of the trailing half.
    pub trailing: FiringStats,
}

impl Observation {
    pub fn active(&self) -> SiteSet {
        self.growth
            .iter()
            .enumerate()
            .filter(|(i, g)| g.is_some() && !self.silent.contains(i))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Runs `sim` for `horizon` and applies the heuristic to the trailing half.
/// `extra` sees every event of the whole run.
pub fn observe<R: Recorder>(
    sim: &mut Simulator<'_>,
    horizon: f64,
    thresholds: HeuristicThresholds,
    batches: usize,
    mut extra: R,
) -> Result<Observation> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::EmptyWindow);
    }
    let half = horizon / 2.0;
    let n = sim.state().n_sites();
    let mid_time = sim.state().clock() + half;
    sim.run(half, &mut extra);
    let mid = sim.state().values();
    let mut trailing = FiringStats::new(n, mid_time, mid_time + half, batches);
    sim.run(half, (&mut trailing, &mut extra));
    let growth: Vec<Option<f64>> = mid
        .iter()
        .zip(sim.state().values())
        .map(|(m, e)| Some(e? - (*m)?))
        .collect();
    let firings: Vec<u64> = (0..n).map(|i| trailing.total(i)).collect();
    let silent: SiteSet = (0..n)
        .filter(|&i| growth[i].is_some() && firings[i] == 0)
        .collect();
    let max_growth = growth.iter().flatten().fold(f64::NEG_INFINITY, |a, &g| a.max(g));
    let verdict = if silent.is_empty() && max_growth <= thresholds.ergodic_growth * half {
        EmpiricalVerdict::Ergodic
    } else if silent
        .iter()
        .any(|&i| growth[i].is_some_and(|g| g >= thresholds.transient_growth * half))
    {
        EmpiricalVerdict::Transient
    } else {
        EmpiricalVerdict::Unknown
    };
    Ok(Observation {
        verdict,
        half_window: half,
        firings,
        growth,
        silent,
        trailing,
    })
}
