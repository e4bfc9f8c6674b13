//! Per-slot service of one wireless link.
//!
//! The bound kernels see a channel only through `ln V(s) = ln E[e^{-s c}]`,
//! where `c` is the per-slot capacity in bits (the SNR-domain exponent
//! convention of [`crate::arrivals`]). For Shannon capacity over Rayleigh
//! block fading, `c = m log2(1 + g Y)` with `Y ~ Exp(1)`, and
//!
//! ```text
//! V(s) = int_0^inf (1 + g y)^{-a} e^{-y} dy,   a = s m / ln 2
//!      = e^{1/g} g^{-a} Gamma(1 - a, 1/g)      (upper incomplete gamma)
//! ```
//!
//! The integral is the ground truth; the incomplete-gamma form is kept as an
//! independent cross-check.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::RwLock;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_kronrod, laguerre_doubling};
use crate::special::ln_upper_gamma;

const QUAD_REL_TOL: f64 = 1e-12;
// Below this decay rate the Laguerre substitution resolves the capacity
// density poorly; adaptive Gauss-Kronrod takes over.
const LAGUERRE_MIN_RATE: f64 = 0.25;
const KRONROD_MAX_INTERVALS: usize = 4000;

/// Converts dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Rayleigh block-fading link with Shannon-capacity service.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayleighChannel {
    avg_snr: f64,
    symbols_per_slot: f64,
}

impl RayleighChannel {
    /// `symbols_per_slot` is bandwidth times slot length (20 kHz x 1 ms = 20).
    pub fn new(avg_snr: f64, symbols_per_slot: f64) -> Result<Self> {
        if !(avg_snr > 0.0) || !avg_snr.is_finite() {
            return Err(invalid(format!("average SNR must be positive, got {avg_snr}")));
        }
        if !(symbols_per_slot > 0.0) || !symbols_per_slot.is_finite() {
            return Err(invalid(format!(
                "symbols per slot must be positive, got {symbols_per_slot}"
            )));
        }
        Ok(Self {
            avg_snr,
            symbols_per_slot,
        })
    }

    pub fn from_db(snr_db: f64, symbols_per_slot: f64) -> Result<Self> {
        Self::new(db_to_linear(snr_db), symbols_per_slot)
    }

    pub fn avg_snr(&self) -> f64 {
        self.avg_snr
    }

    pub fn avg_snr_db(&self) -> f64 {
        linear_to_db(self.avg_snr)
    }

    pub fn symbols_per_slot(&self) -> f64 {
        self.symbols_per_slot
    }

    /// Exponent `a = s m / ln 2` of `(1 + g y)^{-a}`.
    pub fn mellin_exponent(&self, s: f64) -> f64 {
        s * self.symbols_per_slot / LN_2
    }

    /// Capacity in bits for a given fading gain `y`.
    pub fn capacity_for_gain(&self, gain: f64) -> f64 {
        self.symbols_per_slot * (self.avg_snr * gain).ln_1p() / LN_2
    }

    /// `ln V(s)` by quadrature.
    pub fn ln_v(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let a = self.mellin_exponent(s);
        let g = self.avg_snr;
        let inv_g = 1.0 / g;

        // With x = ln(1 + g y) the integrand is exp(-(a-1)x - expm1(x)/g) / g.
        // Scaling z = beta x with beta = a - 1 + 1/g leaves the Laguerre weight
        // times exp(-(expm1(x) - x)/g), which is smooth and bounded by 1.
        let beta = a - 1.0 + inv_g;
        let mut previous = f64::NAN;
        let mut last = f64::NAN;
        if beta >= LAGUERRE_MIN_RATE {
            let h = |z: f64| {
                let x = z / beta;
                if x > 700.0 {
                    0.0
                } else {
                    (-(x.exp_m1() - x) * inv_g).exp()
                }
            };
            match laguerre_doubling(h, QUAD_REL_TOL) {
                Ok(v) if v > 0.0 => return Ok(v.ln() - (g * beta).ln()),
                Ok(v) => {
                    previous = v;
                    last = v;
                }
                Err((p, l)) => {
                    previous = p;
                    last = l;
                }
            }
        }

        let upper = (800.0 * g).ln_1p();
        let integrand = |x: f64| (-(a - 1.0) * x - x.exp_m1() * inv_g).exp() * inv_g;
        match gauss_kronrod(integrand, 0.0, upper, QUAD_REL_TOL, KRONROD_MAX_INTERVALS) {
            Ok(v) if v > 0.0 => Ok(v.ln()),
            Ok(v) | Err(v) => Err(Error::Quadrature {
                s,
                previous: if previous.is_nan() { v } else { previous },
                last: if last.is_nan() { v } else { last },
            }),
        }
    }

    /// `ln V(s)` through `e^{1/g} g^{-a} Gamma(1 - a, 1/g)`.
    pub fn ln_v_closed_form(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        let a = self.mellin_exponent(s);
        let z = 1.0 / self.avg_snr;
        let ln_gamma = ln_upper_gamma(1.0 - a, z).ok_or_else(|| Error::Quadrature {
            s,
            previous: f64::NAN,
            last: f64::NAN,
        })?;
        Ok(z - a * self.avg_snr.ln() + ln_gamma)
    }

    /// `E[c] = (m / ln 2) e^{1/g} E_1(1/g)`, the slope of `-ln V` at 0.
    pub fn mean_capacity(&self) -> f64 {
        let z = 1.0 / self.avg_snr;
        let e1 = ln_upper_gamma(0.0, z).expect("E1 defined for z > 0").exp();
        self.symbols_per_slot / LN_2 * z.exp() * e1
    }

    pub fn sample_capacity<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let y: f64 = rng.sample(Exp1);
        self.capacity_for_gain(y)
    }
}

/// Deterministic link of `rate` bits per slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantChannel {
    rate: f64,
}

impl ConstantChannel {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid(format!("constant rate must be >= 0, got {rate}")));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Service law shared by all hops of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Rayleigh(RayleighChannel),
    Constant(ConstantChannel),
}

impl From<RayleighChannel> for ChannelModel {
    fn from(c: RayleighChannel) -> Self {
        Self::Rayleigh(c)
    }
}

impl From<ConstantChannel> for ChannelModel {
    fn from(c: ConstantChannel) -> Self {
        Self::Constant(c)
    }
}

impl ChannelModel {
    pub fn rayleigh_db(snr_db: f64, symbols_per_slot: f64) -> Result<Self> {
        RayleighChannel::from_db(snr_db, symbols_per_slot).map(Self::Rayleigh)
    }

    pub fn constant(rate: f64) -> Result<Self> {
        ConstantChannel::new(rate).map(Self::Constant)
    }

    /// `ln E[e^{-s c}]` for `s > 0`.
    pub fn ln_v(&self, s: f64) -> Result<f64> {
        match self {
            Self::Rayleigh(r) => r.ln_v(s),
            Self::Constant(c) => {
                check_s(s)?;
                Ok(-s * c.rate)
            }
        }
    }

    pub fn mean_capacity(&self) -> f64 {
        match self {
            Self::Rayleigh(r) => r.mean_capacity(),
            Self::Constant(c) => c.rate,
        }
    }

    pub fn sample_capacity<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Rayleigh(r) => r.sample_capacity(rng),
            Self::Constant(c) => c.rate,
        }
    }

    /// Same channel at a different average SNR (Rayleigh only).
    pub fn with_avg_snr(&self, avg_snr: f64) -> Result<Self> {
        match self {
            Self::Rayleigh(r) => RayleighChannel::new(avg_snr, r.symbols_per_slot).map(Self::Rayleigh),
            Self::Constant(_) => Err(invalid("a constant channel has no SNR to vary")),
        }
    }

    pub fn avg_snr(&self) -> Option<f64> {
        match self {
            Self::Rayleigh(r) => Some(r.avg_snr),
            Self::Constant(_) => None,
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "the Mellin parameter s must be positive and finite, got {s}"
        )))
    }
}

/// Memoised `ln V(s)` for one channel; shareable across sweep workers.
#[derive(Debug)]
pub struct LnVCache {
    channel: ChannelModel,
    table: RwLock<HashMap<u64, f64>>,
}

impl LnVCache {
    pub fn new(channel: ChannelModel) -> Self {
        Self {
            channel,
            table: RwLock::new(HashMap::new()),
        }
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn ln_v(&self, s: f64) -> Result<f64> {
        let key = s.to_bits();
        if let Some(v) = self.table.read().expect("cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = self.channel.ln_v(s)?;
        self.table.write().expect("cache poisoned").insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.table.read().expect("cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
