//! Connection laws `θ_ij` on top of a [`Topology`], plus the self
//! characteristics `Y_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stochastic::{DistributionSpec, RngHandle};
use crate::topology::Topology;
use crate::SiteSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Inhibitory,
    Excitatory,
}

/// `|θ| = scale · base`. A zero scale gives the null connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Magnitude {
    scale: f64,
    base: DistributionSpec,
}

impl Magnitude {
    pub fn new(scale: f64, base: DistributionSpec) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::InvalidConnections(format!(
                "connection scale must be finite and non-negative, got {scale}"
            )));
        }
        Ok(Self { scale, base })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn base(&self) -> DistributionSpec {
        self.base
    }

    pub fn mean(&self) -> f64 {
        self.scale * self.base.mean_of()
    }

    pub fn sample(&self, rng: &mut RngHandle) -> f64 {
        self.scale * self.base.sample(rng)
    }
}

/// One directed connection `i -> target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub target: usize,
    pub sign: Sign,
    pub magnitude: Magnitude,
}

impl Link {
    /// `E θ`, negative for inhibitory links.
    pub fn mean_theta(&self) -> f64 {
        match self.sign {
            Sign::Inhibitory => -self.magnitude.mean(),
            Sign::Excitatory => self.magnitude.mean(),
        }
    }
}

/// Torus connection parameters: `θ = -w_I η_1` on `D_I`, `θ = w_E η_2` on `D_E`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusConnections {
    pub w_i: f64,
    pub w_e: f64,
    pub eta1: DistributionSpec,
    pub eta2: DistributionSpec,
    pub y: DistributionSpec,
}

impl TorusConnections {
    pub fn new(w_i: f64, w_e: f64) -> Self {
        Self {
            w_i,
            w_e,
            eta1: DistributionSpec::unit_exponential(),
            eta2: DistributionSpec::unit_exponential(),
            y: DistributionSpec::unit_exponential(),
        }
    }
}

/// Constants of the block network: `E Y = a`, `E|θ| = c` between paired
/// blocks and `b` everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BlockConstants {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// `0 < b < a < c`, the ordering under which traps are one block per pair.
    pub fn check_ordering(&self) -> Result<()> {
        if 0.0 < self.b && self.b < self.a && self.a < self.c {
            Ok(())
        } else {
            Err(Error::InvalidConstants(format!(
                "need 0 < b < a < c, got a = {}, b = {}, c = {}",
                self.a, self.b, self.c
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    topology: Topology,
    links: Vec<Vec<Link>>,
    self_char: Vec<DistributionSpec>,
}

fn require_unit_mean(name: &str, d: &DistributionSpec) -> Result<()> {
    if (d.mean_of() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConnections(format!(
            "{name} must have mean 1, got {}",
            d.mean_of()
        )));
    }
    Ok(())
}

impl Network {
    /// Torus network; `η_1`, `η_2` and `Y` must have unit mean.
    pub fn torus(topology: Topology, conn: TorusConnections) -> Result<Self> {
        if topology.torus().is_none() {
            return Err(Error::InvalidConnections("torus connections need a torus topology".into()));
        }
        require_unit_mean("eta_1", &conn.eta1)?;
        require_unit_mean("eta_2", &conn.eta2)?;
        require_unit_mean("Y", &conn.y)?;
        let inh = Magnitude::new(conn.w_i, conn.eta1)?;
        let exc = Magnitude::new(conn.w_e, conn.eta2)?;
        let links = topology
            .sites()
            .map(|i| {
                let mut out: Vec<Link> = topology
                    .inhibitory_neighbors(i)
                    .iter()
                    .map(|&j| Link {
                        target: j,
                        sign: Sign::Inhibitory,
                        magnitude: inh,
                    })
                    .chain(topology.excitatory_neighbors(i).iter().map(|&j| Link {
                        target: j,
                        sign: Sign::Excitatory,
                        magnitude: exc,
                    }))
                    .collect();
                out.sort_by_key(|l| l.target);
                out
            })
            .collect();
        let n = topology.n_sites();
        Ok(Self {
            topology,
            links,
            self_char: vec![conn.y; n],
        })
    }

    /// Block network. Magnitudes are `c_ij · theta_base` (so `theta_base`
    /// must have unit mean) and `Y` is `y_base` rescaled to mean `a`.
    pub fn blocks(
        topology: Topology,
        consts: BlockConstants,
        theta_base: DistributionSpec,
        y_base: DistributionSpec,
    ) -> Result<Self> {
        let Some(blocks) = topology.blocks() else {
            return Err(Error::InvalidConnections("block constants need a block topology".into()));
        };
        require_unit_mean("theta base", &theta_base)?;
        if !(consts.b > 0.0 && consts.c > 0.0) {
            return Err(Error::InvalidConstants(format!(
                "b and c must be positive, got b = {}, c = {}",
                consts.b, consts.c
            )));
        }
        let y = y_base.rescaled(consts.a / y_base.mean_of())?;
        let weak = Magnitude::new(consts.b, theta_base)?;
        let strong = Magnitude::new(consts.c, theta_base)?;
        let links = topology
            .sites()
            .map(|x| {
                topology
                    .inhibitory_neighbors(x)
                    .iter()
                    .map(|&y| Link {
                        target: y,
                        sign: Sign::Inhibitory,
                        magnitude: if blocks.are_partners(x, y) { strong } else { weak },
                    })
                    .collect()
            })
            .collect();
        let n = topology.n_sites();
        Ok(Self {
            topology,
            links,
            self_char: vec![y; n],
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn n_sites(&self) -> usize {
        self.topology.n_sites()
    }

    /// Outgoing links of `i`, ascending by target.
    pub fn links(&self, i: usize) -> &[Link] {
        &self.links[i]
    }

    pub fn link(&self, from: usize, to: usize) -> Option<&Link> {
        self.links[from]
            .binary_search_by_key(&to, |l| l.target)
            .ok()
            .map(|k| &self.links[from][k])
    }

    pub fn self_characteristic(&self, i: usize) -> &DistributionSpec {
        &self.self_char[i]
    }

    /// Whether every link with both ends in `w` is inhibitory, ignoring null
    /// (zero-scale) excitatory links.
    pub fn all_inhibitory_within(&self, w: &SiteSet) -> bool {
        w.iter().all(|&i| {
            self.links[i].iter().all(|l| {
                !w.contains(&l.target)
                    || l.sign == Sign::Inhibitory
                    || l.magnitude.scale() == 0.0
            })
        })
    }

    /// Freezes every site outside `w` at `+∞`.
    pub fn restrict(&self, w: &SiteSet) -> Result<Restriction> {
        Restriction::new(self.n_sites(), w)
    }
}

/// Active-site mask for a restriction `X^W`; sites outside `W` are deleted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Restriction {
    active: Vec<bool>,
}

impl Restriction {
    pub fn new(n_sites: usize, w: &SiteSet) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidSiteSet("restriction set must be non-empty".into()));
        }
        if let Some(&bad) = w.iter().find(|&&i| i >= n_sites) {
            return Err(Error::InvalidSiteSet(format!(
                "site {bad} outside 0..{n_sites}"
            )));
        }
        let mut active = vec![false; n_sites];
        for &i in w {
            active[i] = true;
        }
        Ok(Self { active })
    }

    pub fn full(n_sites: usize) -> Self {
        Self {
            active: vec![true; n_sites],
        }
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_sites(&self) -> SiteSet {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }

    pub fn n_sites(&self) -> usize {
        self.active.len()
    }
}
