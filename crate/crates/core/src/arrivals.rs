//! Finite-horizon deterministic arrivals.
//!
//! Amounts are in bits. SNR-domain quantities use the same scale as the
//! exponent: a cumulative arrival of `b` bits is `e^b` in the SNR domain, so
//! `(A(t)/A(u))^s = exp(s * log_snr_ratio(u, t))`. The service transform in
//! [`crate::channel`] follows the same convention.

use crate::error::{invalid, Error, Result};

/// `(sigma, rho)` traffic envelope: `A(t) - A(u) <= rho (t - u) + sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub sigma: f64,
    pub rho: f64,
}

impl Envelope {
    pub fn new(sigma: f64, rho: f64) -> Result<Self> {
        if !(sigma >= 0.0 && rho >= 0.0) || !sigma.is_finite() || !rho.is_finite() {
            return Err(invalid(format!(
                "envelope needs finite sigma, rho >= 0 (got {sigma}, {rho})"
            )));
        }
        Ok(Self { sigma, rho })
    }

    /// Envelope value for an interval of `len` slots.
    pub fn limit(&self, len: usize) -> f64 {
        self.sigma + self.rho * len as f64
    }
}

/// Per-slot arrivals `a_0 .. a_{T-1}`; slots outside `[0, T)` carry nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalProcess {
    increments: Vec<f64>,
    // prefix[i] = a_0 + ... + a_{i-1}
    prefix: Vec<f64>,
    envelope: Option<Envelope>,
}

impl Default for ArrivalProcess {
    fn default() -> Self {
        Self::empty()
    }
}

impl ArrivalProcess {
    pub fn new(increments: Vec<f64>) -> Result<Self> {
        if let Some(bad) = increments.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
            return Err(invalid(format!(
                "arrival increments must be finite and >= 0, got {bad}"
            )));
        }
        let mut prefix = Vec::with_capacity(increments.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &a in &increments {
            acc += a;
            prefix.push(acc);
        }
        Ok(Self {
            increments,
            prefix,
            envelope: None,
        })
    }

    /// No arrivals at all.
    pub fn empty() -> Self {
        Self::new(Vec::new()).expect("empty process is valid")
    }

    /// A single burst of `bits` in slot 0, declared with envelope `(bits, 0)`.
    pub fn burst(bits: f64) -> Result<Self> {
        Self::new(vec![bits])?.with_envelope(Envelope::new(bits, 0.0)?)
    }

    /// `slots` consecutive slots of `rate` bits, declared with envelope `(0, rate)`.
    pub fn train(rate: f64, slots: usize) -> Result<Self> {
        Self::new(vec![rate; slots])?.with_envelope(Envelope::new(0.0, rate)?)
    }

    /// Attaches an envelope after checking it on every interval of the horizon.
    pub fn with_envelope(mut self, envelope: Envelope) -> Result<Self> {
        let horizon = self.horizon();
        let scale = self.prefix[horizon].max(1.0);
        // beyond the horizon A is flat while the envelope keeps growing
        for u in 0..=horizon {
            for t in u..=horizon {
                let amount = self.prefix[t] - self.prefix[u];
                let limit = envelope.limit(t - u);
                if amount > limit + 1e-12 * scale {
                    return Err(Error::EnvelopeViolated { u, t, amount, limit });
                }
            }
        }
        self.envelope = Some(envelope);
        Ok(self)
    }

    /// Message length `T` in slots.
    pub fn horizon(&self) -> usize {
        self.increments.len()
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.envelope
    }

    /// `A(0, t)`, defined for every `t >= 0`.
    pub fn total_until(&self, t: usize) -> f64 {
        self.prefix[t.min(self.horizon())]
    }

    /// `A(u, t) = a_u + ... + a_{t-1}`.
    pub fn cumulative(&self, u: usize, t: usize) -> Result<f64> {
        if u > t {
            return Err(invalid(format!("cumulative needs u <= t (got u = {u}, t = {t})")));
        }
        Ok(self.total_until(t) - self.total_until(u))
    }

    /// `ln(A(t) / A(u))` in the SNR domain; equal to `cumulative(u, t)` under
    /// the bits-as-exponent convention.
    pub fn log_snr_ratio(&self, u: usize, t: usize) -> Result<f64> {
        self.cumulative(u, t)
    }

    /// Largest single-slot increment.
    pub fn peak(&self) -> f64 {
        self.increments.iter().copied().fold(0.0, f64::max)
    }
}

/// Arrivals seen by a system that started `d` slots before the message:
/// overhead traffic on `[-d, 0)` followed by the message on `[0, T)`,
/// frozen after the message ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeArrival {
    overhead: ArrivalProcess,
    message: ArrivalProcess,
    delay: usize,
    // overhead (padded to d slots) followed by the message, indexed from -d
    shifted: ArrivalProcess,
}

impl CompositeArrival {
    /// `overhead` covers slots `-d .. 0` in order; shorter sequences are
    /// zero-padded, longer ones rejected.
    pub fn new(overhead: ArrivalProcess, message: ArrivalProcess, delay: usize) -> Result<Self> {
        if overhead.horizon() > delay {
            return Err(invalid(format!(
                "overhead spans {} slots but the information delay is only {delay}",
                overhead.horizon()
            )));
        }
        let mut joined = overhead.increments().to_vec();
        joined.resize(delay, 0.0);
        joined.extend_from_slice(message.increments());
        let shifted = ArrivalProcess::new(joined)?;
        Ok(Self {
            overhead,
            message,
            delay,
            shifted,
        })
    }

    /// Constant-rate overhead of `rate` bits per slot.
    pub fn with_constant_overhead(message: ArrivalProcess, delay: usize, rate: f64) -> Result<Self> {
        Self::new(ArrivalProcess::new(vec![rate; delay])?, message, delay)
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn message(&self) -> &ArrivalProcess {
        &self.message
    }

    pub fn overhead(&self) -> &ArrivalProcess {
        &self.overhead
    }

    /// The whole sequence re-indexed so that slot `-d` becomes slot 0.
    pub fn shifted(&self) -> &ArrivalProcess {
        &self.shifted
    }

    /// `A'(u, t)` for `-d <= u <= t`, slots in the original (message) indexing.
    pub fn composite_cumulative(&self, u: i64, t: i64) -> Result<f64> {
        let d = self.delay as i64;
        if u < -d {
            return Err(invalid(format!("composite arrivals start at slot {}, got u = {u}", -d)));
        }
        if u > t {
            return Err(invalid(format!("cumulative needs u <= t (got u = {u}, t = {t})")));
        }
        self.shifted.cumulative((u + d) as usize, (t + d) as usize)
    }
}
