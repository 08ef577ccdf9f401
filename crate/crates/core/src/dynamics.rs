//! Exact event-driven simulation of the hourglass process.
//!
//! Every unfrozen site stores an absolute deadline `d_i`; its countdown is
//! `x_i = d_i - t`. Between events all countdowns fall at slope one, and the
//! next event is the smallest deadline, so the firing site reaches zero
//! exactly. At a firing of `z`:
//!
//! 1. `z` is refilled with a fresh `Y_z`;
//! 2. each neighbour `j` receives `θ_zj`: an inhibitory impulse adds `|θ_zj|`,
//!    an excitatory one subtracts `θ_zj` unless `x_j <= θ_zj`, in which case `j`
//!    joins the cascade `F1` and is refilled with a fresh `Y_j`;
//! 3. each member of `F1` sends only its inhibitory impulses, to neighbours
//!    outside `F1 ∪ {z}`. Members of `F1` trigger nothing further.
//!
//! Random draws happen in a fixed order: `Y_z`, then the neighbours of `z`
//! ascending (`θ`, then `Y` for cascade members), then the cascade members
//! ascending with their inhibitory neighbours ascending.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::io::Write;

use crate::error::{Error, Result};
use crate::network::{Network, Restriction, Sign};
use crate::stochastic::{DistributionSpec, RngHandle};

/// Clock, countdowns and random stream of a run.
#[derive(Debug, Clone)]
pub struct SimState {
    clock: f64,
    deadline: Vec<f64>,
    frozen: Vec<bool>,
    rng: RngHandle,
}

impl SimState {
    /// Draws every active `x_i(0)` independently from `init`, ascending by site.
    pub fn init(network: &Network, restriction: &Restriction, init: &DistributionSpec, seed: u64) -> Self {
        Self::init_with_rng(network, restriction, init, RngHandle::new(seed))
    }

    /// As [`SimState::init`], drawing from an explicit stream.
    pub fn init_with_rng(
        network: &Network,
        restriction: &Restriction,
        init: &DistributionSpec,
        mut rng: RngHandle,
    ) -> Self {
        let n = network.n_sites();
        let mut deadline = vec![0.0; n];
        let mut frozen = vec![true; n];
        for i in 0..n {
            if restriction.is_active(i) {
                frozen[i] = false;
                deadline[i] = init.sample(&mut rng);
            }
        }
        Self {
            clock: 0.0,
            deadline,
            frozen,
            rng,
        }
    }

    /// Explicit initial countdowns; entries for frozen sites are ignored.
    pub fn from_values(restriction: &Restriction, values: &[f64], seed: u64) -> Result<Self> {
        let n = restriction.n_sites();
        if values.len() != n {
            return Err(Error::InvalidSiteSet(format!(
                "expected {n} initial values, got {}",
                values.len()
            )));
        }
        let mut deadline = vec![0.0; n];
        let mut frozen = vec![true; n];
        for i in 0..n {
            if restriction.is_active(i) {
                let v = values[i];
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidSiteSet(format!(
                        "initial value of site {i} must be positive, got {v}"
                    )));
                }
                frozen[i] = false;
                deadline[i] = v;
            }
        }
        Ok(Self {
            clock: 0.0,
            deadline,
            frozen,
            rng: RngHandle::new(seed),
        })
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn n_sites(&self) -> usize {
        self.deadline.len()
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    /// Remaining time to unassisted firing; `None` for frozen sites.
    pub fn x(&self, i: usize) -> Option<f64> {
        (!self.frozen[i]).then(|| self.deadline[i] - self.clock)
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        (0..self.n_sites()).map(|i| self.x(i)).collect()
    }

    pub fn rng(&self) -> &RngHandle {
        &self.rng
    }

    /// Smallest countdown among active sites and its site, lowest id on ties.
    pub fn next_event(&self) -> Result<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.n_sites() {
            if self.frozen[i] {
                continue;
            }
            match best {
                Some((d, _)) if self.deadline[i] >= d => {}
                _ => best = Some((self.deadline[i], i)),
            }
        }
        best.map(|(d, i)| (d - self.clock, i)).ok_or(Error::AllFrozen)
    }
}

/// Impulse delivered to a site that did not fire, with the countdown it saw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitatoryProbe {
    pub receiver: usize,
    /// `x_receiver` just before the impulse (the sample of `Z`).
    pub x_before: f64,
    pub theta: f64,
}

/// Everything that happened at one firing moment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FiringEvent {
    pub time: f64,
    pub primary: usize,
    /// `F1`, ascending.
    pub cascade: Vec<usize>,
    /// New countdowns of `primary` and the cascade members.
    pub resets: Vec<(usize, f64)>,
    /// Signed increments of `x` at receivers that did not fire.
    pub impulses: Vec<(usize, f64)>,
    /// Excitatory impulses from the primary, one per active excitatory
    /// neighbour, whether or not it joined the cascade.
    pub probes: Vec<ExcitatoryProbe>,
}

impl FiringEvent {
    fn clear(&mut self) {
        self.cascade.clear();
        self.resets.clear();
        self.impulses.clear();
        self.probes.clear();
    }
}

/// Observer of a run.
pub trait Recorder {
    fn record(&mut self, event: &FiringEvent, state: &SimState);

    /// Called once when the run reaches its horizon.
    fn finish(&mut self, _state: &SimState) {}
}

impl Recorder for () {
    fn record(&mut self, _: &FiringEvent, _: &SimState) {}
}

impl<R: Recorder + ?Sized> Recorder for &mut R {
    fn record(&mut self, event: &FiringEvent, state: &SimState) {
        (**self).record(event, state);
    }

    fn finish(&mut self, state: &SimState) {
        (**self).finish(state);
    }
}

impl<A: Recorder, B: Recorder> Recorder for (A, B) {
    fn record(&mut self, event: &FiringEvent, state: &SimState) {
        self.0.record(event, state);
        self.1.record(event, state);
    }

    fn finish(&mut self, state: &SimState) {
        self.0.finish(state);
        self.1.finish(state);
    }
}

/// Keeps every event in memory.
#[derive(Debug, Default)]
pub struct EventLog(pub Vec<FiringEvent>);

impl Recorder for EventLog {
    fn record(&mut self, event: &FiringEvent, _: &SimState) {
        self.0.push(event.clone());
    }
}

/// CSV trace with columns `time,primary_site,cascade_sites`.
pub struct TraceRecorder<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> TraceRecorder<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "time,primary_site,cascade_sites")?;
        Ok(Self { out, error: None })
    }

    /// Flushes and returns the writer, or the first write error.
    pub fn into_inner(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> Recorder for TraceRecorder<W> {
    fn record(&mut self, event: &FiringEvent, _: &SimState) {
        if self.error.is_some() {
            return;
        }
        let cascade: Vec<String> = event.cascade.iter().map(|c| c.to_string()).collect();
        if let Err(e) = writeln!(self.out, "{},{},{}", event.time, event.primary, cascade.join(";")) {
            self.error = Some(e);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Deadline(f64);

impl Eq for Deadline {}

impl PartialOrd for Deadline {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Deadline {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Drives a [`SimState`] through the dynamics of a [`Network`].
pub struct Simulator<'a> {
    network: &'a Network,
    state: SimState,
    queue: BTreeSet<(Deadline, usize)>,
    event: FiringEvent,
    in_cascade: Vec<bool>,
}

impl<'a> Simulator<'a> {
    pub fn new(network: &'a Network, state: SimState) -> Result<Self> {
        if state.n_sites() != network.n_sites() {
            return Err(Error::InvalidSiteSet(format!(
                "state has {} sites, network has {}",
                state.n_sites(),
                network.n_sites()
            )));
        }
        let queue = (0..state.n_sites())
            .filter(|&i| !state.frozen[i])
            .map(|i| (Deadline(state.deadline[i]), i))
            .collect();
        let n = state.n_sites();
        Ok(Self {
            network,
            state,
            queue,
            event: FiringEvent::default(),
            in_cascade: vec![false; n],
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn into_state(self) -> SimState {
        self.state
    }

    pub fn network(&self) -> &Network {
        self.network
    }

    /// `(delta, z)`: time to the next zero hit and the site hitting it.
    pub fn next_event(&self) -> Result<(f64, usize)> {
        self.queue
            .first()
            .map(|&(Deadline(d), i)| (d - self.state.clock, i))
            .ok_or(Error::AllFrozen)
    }

    fn set_deadline(&mut self, i: usize, d: f64) {
        self.queue.remove(&(Deadline(self.state.deadline[i]), i));
        self.state.deadline[i] = d;
        self.queue.insert((Deadline(d), i));
    }

    /// Fires site `z`, whose countdown must be exactly zero.
    pub fn fire(&mut self, z: usize) -> FiringEvent {
        self.fire_in_place(z);
        self.event.clone()
    }

    fn fire_in_place(&mut self, z: usize) {
        assert!(
            !self.state.frozen[z] && self.state.deadline[z] == self.state.clock,
            "site {z} fired with non-zero countdown"
        );
        let net = self.network;
        let now = self.state.clock;
        self.event.clear();
        self.event.time = now;
        self.event.primary = z;

        let y = net.self_characteristic(z).sample(&mut self.state.rng);
        self.set_deadline(z, now + y);
        self.event.resets.push((z, y));

        for link in net.links(z) {
            let j = link.target;
            if self.state.frozen[j] {
                continue;
            }
            let theta = link.magnitude.sample(&mut self.state.rng);
            let x = self.state.deadline[j] - now;
            match link.sign {
                Sign::Inhibitory => {
                    self.set_deadline(j, self.state.deadline[j] + theta);
                    self.event.impulses.push((j, theta));
                }
                Sign::Excitatory => {
                    self.event.probes.push(ExcitatoryProbe {
                        receiver: j,
                        x_before: x,
                        theta,
                    });
                    if x > theta {
                        self.set_deadline(j, self.state.deadline[j] - theta);
                        self.event.impulses.push((j, -theta));
                    } else {
                        let y = net.self_characteristic(j).sample(&mut self.state.rng);
                        self.set_deadline(j, now + y);
                        self.event.cascade.push(j);
                        self.event.resets.push((j, y));
                        self.in_cascade[j] = true;
                    }
                }
            }
        }

        for idx in 0..self.event.cascade.len() {
            let i = self.event.cascade[idx];
            for link in net.links(i) {
                let j = link.target;
                if link.sign != Sign::Inhibitory
                    || j == z
                    || self.in_cascade[j]
                    || self.state.frozen[j]
                {
                    continue;
                }
                let theta = link.magnitude.sample(&mut self.state.rng);
                self.set_deadline(j, self.state.deadline[j] + theta);
                self.event.impulses.push((j, theta));
            }
        }
        for idx in 0..self.event.cascade.len() {
            let i = self.event.cascade[idx];
            self.in_cascade[i] = false;
        }
    }

    /// Advances to the next zero hit (if it comes before `end`) and fires it.
    fn step_before(&mut self, end: f64) -> Option<&FiringEvent> {
        let &(Deadline(d), z) = self.queue.first()?;
        if d >= end {
            return None;
        }
        self.state.clock = d;
        self.fire_in_place(z);
        Some(&self.event)
    }

    /// Runs for `horizon` time units, reporting each event to `recorder`.
    /// Returns the number of firing moments.
    pub fn run<R: Recorder>(&mut self, horizon: f64, mut recorder: R) -> u64 {
        let end = self.state.clock + horizon.max(0.0);
        let mut events = 0;
        while self.step_before(end).is_some() {
            recorder.record(&self.event, &self.state);
            events += 1;
        }
        self.state.clock = end;
        recorder.finish(&self.state);
        events
    }
}
