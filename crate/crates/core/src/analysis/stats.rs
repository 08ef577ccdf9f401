use std::collections::BTreeMap;

use crate::dynamics::{FiringEvent, Recorder, SimState};
use crate::stochastic::RngHandle;

/// Default reservoir size for the `Z_ij` samples of one ordered pair.
pub const DEFAULT_RESERVOIR: usize = 10_000;

/// One observation of a receiver's countdown at a spontaneous firing of an
/// excitatory neighbour, with the impulse it was sent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZSample {
    pub x: f64,
    pub theta: f64,
}

/// Uniform reservoir (algorithm R) over a stream of samples.
#[derive(Debug, Clone, Default)]
pub struct Reservoir {
    seen: u64,
    samples: Vec<ZSample>,
}

impl Reservoir {
    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn samples(&self) -> &[ZSample] {
        &self.samples
    }

    fn offer(&mut self, s: ZSample, capacity: usize, rng: &mut RngHandle) {
        self.seen += 1;
        if self.samples.len() < capacity {
            self.samples.push(s);
        } else {
            let k = (rng.next_u64() % self.seen) as usize;
            if k < capacity {
                self.samples[k] = s;
            }
        }
    }
}

/// Firing counts over an observation window `[start, end)`.
///
/// Every firing of site `i` is either spontaneous (its countdown hit zero) or
/// induced by the excitatory impulse of a spontaneously firing neighbour `j`;
/// `total(i) = spontaneous(i) + Σ_j excitation(i, j)` holds by construction.
#[derive(Debug, Clone)]
pub struct FiringStats {
    start: f64,
    end: f64,
    planned_end: f64,
    spontaneous: Vec<u64>,
    excitation: BTreeMap<(usize, usize), u64>,
    z_samples: BTreeMap<(usize, usize), Reservoir>,
    reservoir_capacity: usize,
    reservoir_rng: RngHandle,
    batch_spontaneous: Vec<Vec<u64>>,
    batch_total: Vec<Vec<u64>>,
    events: u64,
}

impl FiringStats {
    /// Counts events with `start <= time < end`, split into `batches` equal
    /// sub-windows for batch-means error bars.
    pub fn new(n_sites: usize, start: f64, end: f64, batches: usize) -> Self {
        let batches = batches.max(1);
        Self {
            start,
            end: start,
            planned_end: end,
            spontaneous: vec![0; n_sites],
            excitation: BTreeMap::new(),
            z_samples: BTreeMap::new(),
            reservoir_capacity: DEFAULT_RESERVOIR,
            reservoir_rng: RngHandle::with_stream(0, 1),
            batch_spontaneous: vec![vec![0; n_sites]; batches],
            batch_total: vec![vec![0; n_sites]; batches],
            events: 0,
        }
    }

    /// Window for a run of `horizon` starting at `clock`, discarding the
    /// first `burn_in_fraction` of it.
    pub fn for_run(n_sites: usize, clock: f64, horizon: f64, burn_in_fraction: f64, batches: usize) -> Self {
        let start = clock + burn_in_fraction.clamp(0.0, 1.0) * horizon;
        Self::new(n_sites, start, clock + horizon, batches)
    }

    /// Reservoir size and the seed of its (separate) random stream.
    pub fn with_reservoir(mut self, capacity: usize, seed: u64) -> Self {
        self.reservoir_capacity = capacity;
        self.reservoir_rng = RngHandle::with_stream(seed, 1);
        self
    }

    pub fn n_sites(&self) -> usize {
        self.spontaneous.len()
    }

    pub fn window(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn window_length(&self) -> f64 {
        self.end - self.start
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn spontaneous(&self, i: usize) -> u64 {
        self.spontaneous[i]
    }

    /// Firings of `receiver` caused by an impulse of `sender`.
    pub fn excitation(&self, receiver: usize, sender: usize) -> u64 {
        self.excitation.get(&(receiver, sender)).copied().unwrap_or(0)
    }

    pub fn excitation_counts(&self) -> &BTreeMap<(usize, usize), u64> {
        &self.excitation
    }

    pub fn induced(&self, i: usize) -> u64 {
        self.excitation
            .range((i, 0)..=(i, usize::MAX))
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn total(&self, i: usize) -> u64 {
        self.spontaneous[i] + self.induced(i)
    }

    /// `Z_ij` reservoirs keyed by `(receiver, sender)`.
    pub fn z_samples(&self) -> &BTreeMap<(usize, usize), Reservoir> {
        &self.z_samples
    }

    pub fn batches(&self) -> usize {
        self.batch_total.len()
    }

    pub fn batch_length(&self) -> f64 {
        (self.planned_end - self.start) / self.batches() as f64
    }

    pub fn batch_spontaneous(&self, b: usize) -> &[u64] {
        &self.batch_spontaneous[b]
    }

    pub fn batch_total(&self, b: usize) -> &[u64] {
        &self.batch_total[b]
    }

    fn batch_of(&self, t: f64) -> usize {
        let len = self.batch_length();
        if len <= 0.0 {
            return 0;
        }
        (((t - self.start) / len) as usize).min(self.batches() - 1)
    }
}

impl Recorder for FiringStats {
    fn record(&mut self, ev: &FiringEvent, _: &SimState) {
        if ev.time < self.start || ev.time >= self.planned_end {
            return;
        }
        self.events += 1;
        let b = self.batch_of(ev.time);
        self.spontaneous[ev.primary] += 1;
        self.batch_spontaneous[b][ev.primary] += 1;
        self.batch_total[b][ev.primary] += 1;
        for &c in &ev.cascade {
            *self.excitation.entry((c, ev.primary)).or_insert(0) += 1;
            self.batch_total[b][c] += 1;
        }
        for p in &ev.probes {
            let cap = self.reservoir_capacity;
            self.z_samples
                .entry((p.receiver, ev.primary))
                .or_default()
                .offer(
                    ZSample {
                        x: p.x_before,
                        theta: p.theta,
                    },
                    cap,
                    &mut self.reservoir_rng,
                );
        }
    }

    fn finish(&mut self, state: &SimState) {
        self.end = state.clock().clamp(self.start, self.planned_end);
    }
}

/// Sample mean and two-sided Student-t confidence half-width of `xs`.
/// The half-width is infinite with fewer than two samples.
pub fn mean_half_width(xs: &[f64], confidence: f64) -> (f64, f64) {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::INFINITY);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + confidence / 2.0);
    (mean, t * (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{SimState, Simulator};
    use crate::network::{BlockConstants, Network, Restriction};
    use crate::stochastic::DistributionSpec;
    use crate::topology::{build_block_network, BlockStructure};
    use proptest::prelude::*;

    fn pair() -> Network {
        let b = BlockStructure::new(1, 1, vec![(0, 1)], true).unwrap();
        Network::blocks(
            build_block_network(b),
            BlockConstants::new(1.0, 0.5, 0.5),
            DistributionSpec::unit_exponential(),
            DistributionSpec::unit_exponential(),
        )
        .unwrap()
    }

    #[test]
    fn t_half_width_known_value() {
        // n = 2, sd = sqrt(2): t_{0.975, 1} = 12.7062.
        let (m, h) = mean_half_width(&[0.0, 2.0], 0.95);
        assert_eq!(m, 1.0);
        assert!((h - 12.7062).abs() < 1e-3);
        assert!(mean_half_width(&[1.0], 0.95).1.is_infinite());
    }

    #[test]
    fn window_respects_burn_in() {
        let s = FiringStats::for_run(2, 10.0, 100.0, 0.2, 4);
        assert_eq!(s.window(), (30.0, 30.0));
        assert_eq!(s.batch_length(), 20.0);
    }

    #[test]
    fn batches_sum_to_totals() {
        let net = pair();
        let st = SimState::init(&net, &Restriction::full(2), &DistributionSpec::unit_exponential(), 5);
        let mut sim = Simulator::new(&net, st).unwrap();
        let mut stats = FiringStats::for_run(2, 0.0, 500.0, 0.2, 7);
        sim.run(500.0, &mut stats);
        assert_eq!(stats.window(), (100.0, 500.0));
        for i in 0..2 {
            let b: u64 = (0..7).map(|k| stats.batch_total(k)[i]).sum();
            assert_eq!(b, stats.total(i));
            let s: u64 = (0..7).map(|k| stats.batch_spontaneous(k)[i]).sum();
            assert_eq!(s, stats.spontaneous(i));
        }
    }

    proptest! {
        #[test]
        fn reservoir_keeps_at_most_capacity(n in 0usize..200, cap in 1usize..50, seed in any::<u64>()) {
            let mut r = Reservoir::default();
            let mut rng = RngHandle::new(seed);
            for k in 0..n {
                r.offer(ZSample { x: k as f64, theta: 0.0 }, cap, &mut rng);
            }
            prop_assert_eq!(r.seen(), n as u64);
            prop_assert_eq!(r.samples().len(), n.min(cap));
            let mut xs: Vec<u64> = r.samples().iter().map(|s| s.x as u64).collect();
            xs.sort();
            xs.dedup();
            prop_assert_eq!(xs.len(), n.min(cap));
        }
    }
}
