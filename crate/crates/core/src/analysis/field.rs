use std::collections::BTreeMap;

use super::frequencies::SiteRates;
use crate::error::{Error, Result};
use crate::network::{Network, Sign};
use crate::SiteSet;

/// Mean drift `v_j^W` of every frozen site `j ∉ W` while `W` runs in its
/// stationary regime. Positive drift means `x_j` grows without bound.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub w: SiteSet,
    pub drift: BTreeMap<usize, f64>,
}

impl VectorField {
    pub fn get(&self, j: usize) -> Option<f64> {
        self.drift.get(&j).copied()
    }
}

/// `v_j = -1 - Σ_{i∈W, inhibitory} Eθ_ij π_i - Σ_{i∈W, excitatory} Eθ_ij π^0_i`.
///
/// Inhibitory senders act at their total rate, excitatory senders only at
/// their spontaneous rate since cascade firings emit no excitation.
pub fn drift_at(network: &Network, w: &SiteSet, rates: &SiteRates, j: usize) -> Result<f64> {
    let mut v = -1.0;
    for &i in w {
        let Some(link) = network.link(i, j) else {
            continue;
        };
        let r = match link.sign {
            Sign::Inhibitory => rates.total.get(&i),
            Sign::Excitatory => rates.spontaneous.get(&i),
        }
        .ok_or(Error::MissingRate(i))?;
        v -= link.mean_theta() * r;
    }
    Ok(v)
}

/// The second vector field of the restriction to `w`, over all `j ∉ w`.
pub fn second_vector_field(network: &Network, w: &SiteSet, rates: &SiteRates) -> Result<VectorField> {
    if let Some(&i) = w
        .iter()
        .find(|i| !rates.total.contains_key(i) || !rates.spontaneous.contains_key(i))
    {
        return Err(Error::MissingRate(i));
    }
    let drift = network
        .topology()
        .sites()
        .filter(|j| !w.contains(j))
        .map(|j| drift_at(network, w, rates, j).map(|v| (j, v)))
        .collect::<Result<_>>()?;
    Ok(VectorField { w: w.clone(), drift })
}
