//! Seeded sampling and the distribution specifications used for the
//! self-characteristics `Y`, the connection magnitudes and the initial state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Family of a positive random variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistributionKind {
    Exponential,
    Gamma,
    Deterministic,
}

/// A validated, mean-parameterised positive distribution.
///
/// Serialised as `{"kind": "...", "mean": x, "shape": y}` where `shape`
/// is present only for `Gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct DistributionSpec {
    kind: DistributionKind,
    mean: f64,
    shape: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawDistribution {
    kind: DistributionKind,
    mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shape: Option<f64>,
}

impl TryFrom<RawDistribution> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match (raw.kind, raw.shape) {
            (DistributionKind::Exponential, None) => Self::exponential(raw.mean),
            (DistributionKind::Deterministic, None) => Self::deterministic(raw.mean),
            (DistributionKind::Gamma, Some(shape)) => Self::gamma(raw.mean, shape),
            (DistributionKind::Gamma, None) => {
                Err(Error::InvalidDistribution("Gamma requires a shape".into()))
            }
            (kind, Some(_)) => Err(Error::InvalidDistribution(format!(
                "{kind:?} does not take a shape"
            ))),
        }
    }
}

impl From<DistributionSpec> for RawDistribution {
    fn from(d: DistributionSpec) -> Self {
        RawDistribution {
            kind: d.kind,
            mean: d.mean,
            shape: (d.kind == DistributionKind::Gamma).then_some(d.shape),
        }
    }
}

/// Constants `(a, alpha)` with `density(u) <= a * exp(-alpha * u)` for all `u > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBound {
    pub a: f64,
    pub alpha: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidDistribution(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl DistributionSpec {
    pub fn exponential(mean: f64) -> Result<Self> {
        check_positive("mean", mean)?;
        Ok(Self {
            kind: DistributionKind::Exponential,
            mean,
            shape: 1.0,
        })
    }

    pub fn gamma(mean: f64, shape: f64) -> Result<Self> {
        check_positive("mean", mean)?;
        check_positive("shape", shape)?;
        Ok(Self {
            kind: DistributionKind::Gamma,
            mean,
            shape,
        })
    }

    pub fn deterministic(mean: f64) -> Result<Self> {
        check_positive("mean", mean)?;
        Ok(Self {
            kind: DistributionKind::Deterministic,
            mean,
            shape: f64::INFINITY,
        })
    }

    /// Exponential with unit mean, the default for `Y`, `eta_1`, `eta_2` and `X(0)`.
    pub fn unit_exponential() -> Self {
        Self {
            kind: DistributionKind::Exponential,
            mean: 1.0,
            shape: 1.0,
        }
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    /// Gamma shape parameter; `None` for the other families.
    pub fn shape(&self) -> Option<f64> {
        (self.kind == DistributionKind::Gamma).then_some(self.shape)
    }

    /// Exact analytic mean.
    pub fn mean_of(&self) -> f64 {
        self.mean
    }

    /// Same family with the mean multiplied by `factor > 0`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        check_positive("scale factor", factor)?;
        Ok(Self {
            mean: self.mean * factor,
            ..*self
        })
    }

    /// Draws one strictly positive value.
    pub fn sample(&self, rng: &mut RngHandle) -> f64 {
        match self.kind {
            DistributionKind::Deterministic => self.mean,
            DistributionKind::Exponential => {
                let exp = Exp::new(1.0 / self.mean).expect("validated rate");
                loop {
                    let v = exp.sample(&mut rng.inner);
                    if v > 0.0 {
                        return v;
                    }
                }
            }
            DistributionKind::Gamma => {
                let gamma =
                    Gamma::new(self.shape, self.mean / self.shape).expect("validated gamma");
                loop {
                    let v = gamma.sample(&mut rng.inner);
                    if v > 0.0 {
                        return v;
                    }
                }
            }
        }
    }

    /// Exponential envelope of the density, when one exists.
    ///
    /// Deterministic laws have no density and Gamma laws with shape below one
    /// have a density unbounded at the origin; both return `None`.
    pub fn tail_bound(&self) -> Option<TailBound> {
        match self.kind {
            DistributionKind::Deterministic => None,
            DistributionKind::Exponential => Some(TailBound {
                a: 1.0 / self.mean,
                alpha: 1.0 / self.mean,
            }),
            DistributionKind::Gamma => {
                let k = self.shape;
                let scale = self.mean / k;
                if k < 1.0 {
                    None
                } else if k == 1.0 {
                    Some(TailBound {
                        a: 1.0 / scale,
                        alpha: 1.0 / scale,
                    })
                } else {
                    // u^(k-1) e^(-u/(2s)) peaks at u = 2s(k-1); the remaining
                    // factor e^(-u/(2s)) is the envelope.
                    let log_peak = (k - 1.0) * (2.0 * scale * (k - 1.0)).ln() - (k - 1.0);
                    let log_norm = statrs::function::gamma::ln_gamma(k) + k * scale.ln();
                    Some(TailBound {
                        a: (log_peak - log_norm).exp(),
                        alpha: 1.0 / (2.0 * scale),
                    })
                }
            }
        }
    }
}

/// Seeded, single-owner random stream.
///
/// Equal `(seed, stream)` pairs and an equal sequence of calls give
/// bit-identical draws. Parallel work derives independent handles with
/// [`RngHandle::with_stream`] instead of sharing one.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_returns_mean() {
        let d = DistributionSpec::deterministic(0.5).unwrap();
        let mut rng = RngHandle::new(3);
        for _ in 0..10 {
            assert_eq!(d.sample(&mut rng), 0.5);
        }
    }

    #[test]
    fn exponential_monte_carlo_mean() {
        let d = DistributionSpec::exponential(1.0).unwrap();
        let mut rng = RngHandle::new(11);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn gamma_monte_carlo_mean_and_positivity() {
        let d = DistributionSpec::gamma(2.0, 3.0).unwrap();
        let mut rng = RngHandle::new(5);
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
        assert!(draws.iter().all(|&v| v > 0.0));
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn analytic_means() {
        assert_eq!(DistributionSpec::exponential(1.0).unwrap().mean_of(), 1.0);
        assert_eq!(DistributionSpec::gamma(2.0, 3.0).unwrap().mean_of(), 2.0);
        assert_eq!(DistributionSpec::deterministic(0.7).unwrap().mean_of(), 0.7);
    }

    #[test]
    fn exponential_tail_bound() {
        let m = 2.5;
        let b = DistributionSpec::exponential(m).unwrap().tail_bound().unwrap();
        assert_eq!((b.a, b.alpha), (1.0 / m, 1.0 / m));
    }

    #[test]
    fn gamma_tail_bound_dominates_density() {
        let (mean, shape) = (1.0, 3.0);
        let d = DistributionSpec::gamma(mean, shape).unwrap();
        let b = d.tail_bound().unwrap();
        let scale = mean / shape;
        let norm = statrs::function::gamma::gamma(shape) * scale.powf(shape);
        for i in 1..2000 {
            let u = i as f64 * 0.01;
            let density = u.powf(shape - 1.0) * (-u / scale).exp() / norm;
            assert!(density <= b.a * (-b.alpha * u).exp() * (1.0 + 1e-12));
        }
        assert!(DistributionSpec::gamma(1.0, 0.5).unwrap().tail_bound().is_none());
        assert!(DistributionSpec::deterministic(1.0).unwrap().tail_bound().is_none());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(DistributionSpec::exponential(0.0).is_err());
        assert!(DistributionSpec::exponential(-1.0).is_err());
        assert!(DistributionSpec::gamma(1.0, 0.0).is_err());
        assert!(DistributionSpec::deterministic(f64::NAN).is_err());
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let d = DistributionSpec::unit_exponential();
        let mut a = RngHandle::new(42);
        let mut b = RngHandle::new(42);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut a).to_bits(), d.sample(&mut b).to_bits());
        }
        assert_eq!(a.position(), b.position());
        let mut c = RngHandle::with_stream(42, 1);
        let mut a = RngHandle::new(42);
        assert_ne!(a.next_u64(), c.next_u64());
    }

    #[test]
    fn json_shape() {
        let d: DistributionSpec =
            serde_json::from_str(r#"{"kind":"Gamma","mean":2.0,"shape":3.0}"#).unwrap();
        assert_eq!(d, DistributionSpec::gamma(2.0, 3.0).unwrap());
        let s = serde_json::to_string(&DistributionSpec::exponential(1.0).unwrap()).unwrap();
        assert_eq!(s, r#"{"kind":"Exponential","mean":1.0}"#);
        assert!(serde_json::from_str::<DistributionSpec>(r#"{"kind":"Gamma","mean":2.0}"#)
            .is_err());
        assert!(
            serde_json::from_str::<DistributionSpec>(r#"{"kind":"Exponential","mean":-2.0}"#)
                .is_err()
        );
    }
}
