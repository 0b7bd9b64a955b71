//! Biased Pauli error channels: parameterization, i.i.d. sampling, Shannon
//! entropy and hashing-bound solvers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{PauliOperator, SinglePauli};

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("error probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("bias must be positive or infinite, got {0}")]
    InvalidBias(f64),
    #[error("rate {0} outside [0, 1)")]
    InvalidRate(f64),
    #[error("cannot parse bias from {0:?}")]
    BiasParse(String),
}

/// Noise bias `eta = p_z / (p_x + p_y)`, a positive real or infinity.
///
/// Serialized as a decimal string, or the literal `"inf"` for pure
/// dephasing.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bias(f64);

impl Bias {
    pub const INF: Bias = Bias(f64::INFINITY);

    pub fn new(eta: f64) -> Result<Self, NoiseError> {
        if eta > 0.0 && !eta.is_nan() {
            Ok(Bias(eta))
        } else {
            Err(NoiseError::InvalidBias(eta))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Bias {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Bias::INF),
            t => t
                .parse::<f64>()
                .map_err(|_| NoiseError::BiasParse(s.to_string()))
                .and_then(Bias::new),
        }
    }
}

impl Serialize for Bias {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bias {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A single-qubit Pauli error distribution `(1-p, p_x, p_y, p_z)`.
///
/// This is the general form consumed by samplers and decoders; biased
/// channels with `p_x = p_y` are built through [`BiasedChannel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel {
    pub p_i: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl PauliChannel {
    pub fn new(p_x: f64, p_y: f64, p_z: f64) -> Result<Self, NoiseError> {
        let p = p_x + p_y + p_z;
        for q in [p_x, p_y, p_z, p] {
            if !(0.0..=1.0).contains(&q) {
                return Err(NoiseError::ProbabilityOutOfRange(q));
            }
        }
        Ok(PauliChannel {
            p_i: 1.0 - p,
            p_x,
            p_y,
            p_z,
        })
    }

    /// Total single-qubit error probability.
    pub fn p(&self) -> f64 {
        self.p_x + self.p_y + self.p_z
    }

    /// Probability of the single-qubit Pauli with symplectic bits `(x, z)`.
    #[inline]
    pub fn prob_bits(&self, x: bool, z: bool) -> f64 {
        match (x, z) {
            (false, false) => self.p_i,
            (true, false) => self.p_x,
            (true, true) => self.p_y,
            (false, true) => self.p_z,
        }
    }

    pub fn prob(&self, p: SinglePauli) -> f64 {
        let (x, z) = p.bits();
        self.prob_bits(x, z)
    }

    /// The channel with the roles of Y and Z errors exchanged.
    pub fn swap_yz(&self) -> PauliChannel {
        PauliChannel {
            p_i: self.p_i,
            p_x: self.p_x,
            p_y: self.p_z,
            p_z: self.p_y,
        }
    }

    /// Draws an n-qubit error with each qubit independently I with
    /// probability 1-p, else X/Y/Z with the channel probabilities.
    pub fn sample_error<R: Rng>(&self, n: usize, rng: &mut R) -> PauliOperator {
        let mut e = PauliOperator::identity(n);
        let p = self.p();
        for q in 0..n {
            let u: f64 = rng.gen();
            if u < self.p_i {
                continue;
            }
            let v = u - self.p_i;
            let pauli = if v < self.p_x {
                SinglePauli::X
            } else if v < self.p_x + self.p_y {
                SinglePauli::Y
            } else if p > 0.0 {
                SinglePauli::Z
            } else {
                // Guard against u == p_i == 1 rounding.
                continue;
            };
            e.set(q, pauli);
        }
        e
    }

    /// Shannon entropy of `(1-p, p_x, p_y, p_z)` in bits, with 0 log 0 = 0.
    pub fn entropy(&self) -> f64 {
        [self.p_i, self.p_x, self.p_y, self.p_z]
            .into_iter()
            .filter(|&q| q > 0.0)
            .map(|q| -q * q.log2())
            .sum()
    }
}

/// A biased Pauli channel: total error rate `p` split as
/// `p_x = p_y = p / (2 (eta + 1))`, `p_z = p eta / (eta + 1)`, with
/// `eta = inf` giving pure Z noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedChannel {
    p: f64,
    eta: Bias,
    channel: PauliChannel,
}

impl BiasedChannel {
    pub fn new(p: f64, eta: Bias) -> Result<Self, NoiseError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(NoiseError::ProbabilityOutOfRange(p));
        }
        let channel = if eta.is_infinite() {
            PauliChannel {
                p_i: 1.0 - p,
                p_x: 0.0,
                p_y: 0.0,
                p_z: p,
            }
        } else {
            let e = eta.value();
            let p_xy = p / (2.0 * (e + 1.0));
            PauliChannel {
                p_i: 1.0 - p,
                p_x: p_xy,
                p_y: p_xy,
                p_z: p * e / (e + 1.0),
            }
        };
        Ok(BiasedChannel { p, eta, channel })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eta(&self) -> Bias {
        self.eta
    }

    pub fn channel(&self) -> &PauliChannel {
        &self.channel
    }

    pub fn entropy(&self) -> f64 {
        self.channel.entropy()
    }

    pub fn sample_error<R: Rng>(&self, n: usize, rng: &mut R) -> PauliOperator {
        self.channel.sample_error(n, rng)
    }
}

/// Builds the biased channel for total error rate `p` and bias `eta`.
pub fn channel_from_bias(p: f64, eta: Bias) -> Result<BiasedChannel, NoiseError> {
    BiasedChannel::new(p, eta)
}

/// Error rate that maximizes the channel entropy at fixed bias; the hashing
/// bisection stays on [0, p_peak] where 1 - H is monotone decreasing.
fn entropy_peak(eta: Bias) -> f64 {
    // dH/dp = 0 at 1 - p = alpha^(2 alpha) beta^beta p, with alpha and beta
    // the X and Z fractions of p; 0^0 = 1 covers infinite bias.
    let (alpha, beta) = if eta.is_infinite() {
        (0.0, 1.0)
    } else {
        let e = eta.value();
        (1.0 / (2.0 * (e + 1.0)), e / (e + 1.0))
    };
    let apow = if alpha == 0.0 {
        1.0
    } else {
        alpha.powf(2.0 * alpha)
    };
    let bpow = if beta == 0.0 { 1.0 } else { beta.powf(beta) };
    1.0 / (1.0 + apow * bpow)
}

/// Solves `1 - H(p) = rate` for the error rate on the increasing branch of
/// the entropy, by bisection to absolute tolerance 1e-8.
pub fn hashing_rate_curve(eta: Bias, rate: f64) -> Result<f64, NoiseError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NoiseError::InvalidRate(rate));
    }
    let f = |p: f64| 1.0 - BiasedChannel::new(p, eta).unwrap().entropy() - rate;
    let mut lo = 1e-12;
    let mut hi = entropy_peak(eta);
    // At infinite bias the peak entropy is exactly 1 bit, so the zero-rate
    // root is the bracket endpoint itself.
    if f(hi) == 0.0 {
        return Ok(hi);
    }
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Zero-rate hashing bound: the error rate where `1 - H(p) = 0`.
pub fn hashing_threshold(eta: Bias) -> f64 {
    hashing_rate_curve(eta, 0.0).expect("rate 0 is always valid")
}
