//! Violation-probability bounds for the virtual delay `W(t)` and the
//! backlog `B(t)` of an N-hop tandem.
//!
//! Every `kernel_*` returns the natural log of a bound expression at a fixed
//! `s`; the `bound*` functions minimise it over `s`. All sums are taken in the
//! log domain so that `tau` in the hundreds and backlogs of thousands of bits
//! stay finite.

use std::fmt;
use std::str::FromStr;

use crate::arrivals::{ArrivalProcess, CompositeArrival, Envelope};
use crate::channel::{ChannelModel, LnVCache};
use crate::error::{invalid, Error, Result};
use crate::numeric::{ln_binomial, ln_geometric_sum, log_add_exp, LogSumExp};
use crate::optimize::{minimize_convex, Boundary, OptimizerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundFamily {
    Stationary,
    Sotat,
    Wtb,
    WtbDelayed,
}

impl BoundFamily {
    pub const ALL: [BoundFamily; 4] = [Self::Stationary, Self::Sotat, Self::Wtb, Self::WtbDelayed];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Stationary => "stationary",
            Self::Sotat => "sotat",
            Self::Wtb => "wtb",
            Self::WtbDelayed => "wtb_delayed",
        }
    }
}

impl fmt::Display for BoundFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| {
            invalid(format!(
                "unknown bound family `{s}` (expected stationary, sotat, wtb or wtb_delayed)"
            ))
        })
    }
}

/// One evaluation point: network, channel, traffic and the `(t, w)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    hops: usize,
    channel: ChannelModel,
    backlog: Vec<f64>,
    // backlog_prefix[k] = x_1 + ... + x_k
    backlog_prefix: Vec<f64>,
    arrivals: ArrivalProcess,
    overhead: ArrivalProcess,
    info_delay: usize,
    eval_time: usize,
    target_delay: usize,
    stationary_envelope: Option<Envelope>,
}

impl Scenario {
    /// Empty backlog, `t = T`, `w = 0`.
    pub fn new(hops: usize, channel: ChannelModel, arrivals: ArrivalProcess) -> Result<Self> {
        if hops == 0 {
            return Err(invalid("a tandem needs at least one hop"));
        }
        let eval_time = arrivals.horizon();
        Ok(Self {
            hops,
            channel,
            backlog: vec![0.0; hops],
            backlog_prefix: vec![0.0; hops + 1],
            arrivals,
            overhead: ArrivalProcess::empty(),
            info_delay: 0,
            eval_time,
            target_delay: 0,
            stationary_envelope: None,
        })
    }

    /// Per-node initial backlog `x_1 .. x_N` in bits.
    pub fn with_backlog(mut self, backlog: Vec<f64>) -> Result<Self> {
        if backlog.len() != self.hops {
            return Err(invalid(format!(
                "backlog has {} entries for {} hops",
                backlog.len(),
                self.hops
            )));
        }
        if let Some(bad) = backlog.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
            return Err(invalid(format!("backlog must be finite and >= 0, got {bad}")));
        }
        let mut prefix = vec![0.0];
        let mut acc = 0.0;
        for &x in &backlog {
            acc += x;
            prefix.push(acc);
        }
        self.backlog = backlog;
        self.backlog_prefix = prefix;
        Ok(self)
    }

    pub fn with_uniform_backlog(self, bits: f64) -> Result<Self> {
        let hops = self.hops;
        self.with_backlog(vec![bits; hops])
    }

    pub fn with_eval_time(mut self, t: usize) -> Self {
        self.eval_time = t;
        self
    }

    pub fn with_target_delay(mut self, w: usize) -> Self {
        self.target_delay = w;
        self
    }

    pub fn with_channel(mut self, channel: ChannelModel) -> Self {
        self.channel = channel;
        self
    }

    pub fn with_arrivals(mut self, arrivals: ArrivalProcess) -> Self {
        self.arrivals = arrivals;
        self
    }

    /// Backlog known only as of `d` slots before the message, with `overhead`
    /// arriving in between.
    pub fn with_delayed_backlog(mut self, overhead: ArrivalProcess, d: usize) -> Result<Self> {
        if overhead.horizon() > d {
            return Err(invalid(format!(
                "overhead spans {} slots but the information delay is only {d}",
                overhead.horizon()
            )));
        }
        self.overhead = overhead;
        self.info_delay = d;
        Ok(self)
    }

    pub fn with_constant_overhead(self, rate: f64, d: usize) -> Result<Self> {
        self.with_delayed_backlog(ArrivalProcess::new(vec![rate; d])?, d)
    }

    /// Envelope used by the stationary reference instead of the arrivals' own.
    pub fn with_stationary_envelope(mut self, envelope: Envelope) -> Self {
        self.stationary_envelope = Some(envelope);
        self
    }

    pub fn hops(&self) -> usize {
        self.hops
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn backlog(&self) -> &[f64] {
        &self.backlog
    }

    pub fn total_backlog(&self) -> f64 {
        self.backlog_prefix[self.hops]
    }

    pub fn x_max(&self) -> f64 {
        self.backlog.iter().copied().fold(0.0, f64::max)
    }

    pub fn arrivals(&self) -> &ArrivalProcess {
        &self.arrivals
    }

    pub fn overhead(&self) -> &ArrivalProcess {
        &self.overhead
    }

    pub fn info_delay(&self) -> usize {
        self.info_delay
    }

    pub fn eval_time(&self) -> usize {
        self.eval_time
    }

    pub fn target_delay(&self) -> usize {
        self.target_delay
    }

    /// `tau = t + w`.
    pub fn tau(&self) -> usize {
        self.eval_time + self.target_delay
    }

    pub fn stationary_envelope(&self) -> Option<Envelope> {
        self.stationary_envelope.or(self.arrivals.envelope())
    }

    pub fn composite(&self) -> Result<CompositeArrival> {
        CompositeArrival::new(self.overhead.clone(), self.arrivals.clone(), self.info_delay)
    }

    /// Arrivals as seen by a system whose clock starts `d` slots before the
    /// message, together with the evaluation slot in that clock.
    pub fn system_view(&self) -> Result<(ArrivalProcess, usize)> {
        Ok((self.composite()?.shifted().clone(), self.eval_time + self.info_delay))
    }

    fn require_current(&self) -> Result<()> {
        if self.info_delay == 0 {
            Ok(())
        } else {
            Err(invalid(format!(
                "this bound needs a current backlog; use the delayed bound for d = {}",
                self.info_delay
            )))
        }
    }

    fn require_single_hop(&self) -> Result<()> {
        if self.hops == 1 {
            Ok(())
        } else {
            Err(invalid(format!("single-link expression used with {} hops", self.hops)))
        }
    }

    fn arrival_envelope(&self) -> Result<Envelope> {
        self.arrivals
            .envelope()
            .ok_or_else(|| invalid("arrivals carry no (sigma, rho) envelope"))
    }

    fn reference_envelope(&self) -> Result<Envelope> {
        self.stationary_envelope()
            .ok_or_else(|| invalid("the stationary bound needs a (sigma, rho) envelope"))
    }
}

/// Outcome of minimising one bound over `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    /// `min(1, exp(raw_log_value))`.
    pub probability: f64,
    pub s_opt: f64,
    pub raw_log_value: f64,
    pub evaluations: usize,
    pub boundary: Option<Boundary>,
    pub diagnostic: Option<String>,
}

impl BoundResult {
    fn from_log(s_opt: f64, raw_log_value: f64, evaluations: usize, boundary: Option<Boundary>) -> Self {
        Self {
            probability: raw_log_value.exp().min(1.0),
            s_opt,
            raw_log_value,
            evaluations,
            boundary,
            diagnostic: boundary.map(|b| format!("minimum pinned at the {b:?} end of the s range").to_lowercase()),
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("s must be positive and finite, got {s}")))
    }
}

fn check_sotat_s(s: f64) -> Result<()> {
    check_s(s)?;
    if s < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "the multi-hop service transform bound needs s < 1, got {s}"
        )))
    }
}

// ln Phi(s) for arrivals `arr` observed at slot `t` with `tau = t + w`.
fn wtb_log(hops: usize, arr: &ArrivalProcess, backlog_prefix: &[f64], t: usize, tau: usize, s: f64, lnv: f64) -> f64 {
    if tau == 0 {
        return 0.0;
    }
    let at = arr.total_until(t);
    let mut acc = LogSumExp::new();
    let c_u = ln_binomial((hops + tau - 2) as u64, (tau - 1) as u64);
    for u in 1..t {
        acc.push(c_u + s * (at - arr.total_until(u)) + (tau - u) as f64 * lnv);
    }
    for i in 0..hops {
        acc.push(
            ln_binomial((i + tau - 1) as u64, (tau - 1) as u64)
                + s * (at + backlog_prefix[hops - i])
                + tau as f64 * lnv,
        );
    }
    acc.value()
}

fn sotat_log(sc: &Scenario, s: f64, lnv: f64) -> f64 {
    let n = sc.hops;
    let (t, tau) = (sc.eval_time, sc.tau());
    let at = sc.arrivals.total_until(t);
    let mut acc = LogSumExp::new();
    for u in 0..=t {
        let k = tau - u;
        acc.push(s * (at - sc.arrivals.total_until(u)) + ln_binomial((n - 1 + k) as u64, k as u64) + k as f64 * lnv);
    }
    s * n as f64 * sc.x_max() + acc.value()
}

fn stationary_log(sc: &Scenario, env: Envelope, s: f64, lnv: f64) -> f64 {
    let n = sc.hops as f64;
    let w = sc.target_delay as f64;
    let l0 = s * env.rho + lnv;
    if l0 >= 0.0 {
        return f64::INFINITY;
    }
    s * (-env.rho * w + env.sigma + n * sc.x_max()) - n * (-l0.exp_m1()).ln()
        + (w * l0 + (n - 1.0) * (w + 1.0).ln()).min(0.0)
}

fn delayed_log(sc: &Scenario, composite: &CompositeArrival, s: f64, lnv: f64) -> f64 {
    let d = sc.info_delay;
    wtb_log(
        sc.hops,
        composite.shifted(),
        &sc.backlog_prefix,
        sc.eval_time + d,
        sc.tau() + d,
        s,
        lnv,
    )
}

/// `ln Phi(s)`: the multi-hop transient bound with exact arrivals and
/// per-node initial backlog.
pub fn kernel_wtb(sc: &Scenario, s: f64) -> Result<f64> {
    sc.require_current()?;
    check_s(s)?;
    let lnv = sc.channel.ln_v(s)?;
    Ok(wtb_log(
        sc.hops,
        &sc.arrivals,
        &sc.backlog_prefix,
        sc.eval_time,
        sc.tau(),
        s,
        lnv,
    ))
}

/// Single-link form `A^s(t) e^{s x_1} V^tau + sum_{u=1}^{t-1} (A(t)/A(u))^s V^{tau-u}`.
pub fn kernel_wtb_single(sc: &Scenario, s: f64) -> Result<f64> {
    sc.require_single_hop()?;
    sc.require_current()?;
    check_s(s)?;
    let lnv = sc.channel.ln_v(s)?;
    let (t, tau) = (sc.eval_time, sc.tau());
    if tau == 0 {
        return Ok(0.0);
    }
    let at = sc.arrivals.total_until(t);
    let mut acc = LogSumExp::new();
    acc.push(s * (at + sc.backlog[0]) + tau as f64 * lnv);
    for u in 1..t {
        acc.push(s * (at - sc.arrivals.total_until(u)) + (tau - u) as f64 * lnv);
    }
    Ok(acc.value())
}

/// Multi-hop transient bound with every arrival ratio replaced by the
/// `(sigma, rho)` envelope. Dominates [`kernel_wtb`] pointwise.
pub fn kernel_wtb_sigma_rho(sc: &Scenario, s: f64) -> Result<f64> {
    sc.require_current()?;
    check_s(s)?;
    let env = sc.arrival_envelope()?;
    let lnv = sc.channel.ln_v(s)?;
    let (n, t, tau) = (sc.hops, sc.eval_time, sc.tau());
    if tau == 0 {
        return Ok(0.0);
    }
    let l0 = s * env.rho + lnv;
    let peak = s * (env.sigma + env.rho * t as f64);
    let mut acc = LogSumExp::new();
    for i in 0..n {
        acc.push(ln_binomial((i + tau - 1) as u64, (tau - 1) as u64) + peak + s * sc.backlog_prefix[n - i]);
    }
    if t >= 2 {
        // sum_{u=1}^{t-1} V0^{-u}
        let geom = -l0 + ln_geometric_sum(-l0, t - 1);
        acc.push(ln_binomial((n + tau - 2) as u64, (tau - 1) as u64) + peak + geom);
    }
    Ok(tau as f64 * lnv + acc.value())
}

/// Transient bound obtained from the stationary multi-hop service
/// transform: `e^{s N x_max} sum_{u=0}^{t} (A(t)/A(u))^s C(N-1+tau-u, tau-u) V^{tau-u}`.
/// Valid for `s < 1`.
pub fn kernel_sotat(sc: &Scenario, s: f64) -> Result<f64> {
    sc.require_current()?;
    check_sotat_s(s)?;
    let lnv = sc.channel.ln_v(s)?;
    Ok(sotat_log(sc, s, lnv))
}

/// Single-link closed form of [`kernel_sotat`] under the `(sigma, rho)` envelope.
pub fn kernel_sotat_sigma_rho(sc: &Scenario, s: f64) -> Result<f64> {
    sc.require_single_hop()?;
    sc.require_current()?;
    check_sotat_s(s)?;
    let env = sc.arrival_envelope()?;
    let lnv = sc.channel.ln_v(s)?;
    let (t, w) = (sc.eval_time, sc.target_delay as f64);
    let l0 = s * env.rho + lnv;
    // e^{s sigma} sum_{j=1}^{t} V0^j + 1
    let bracket = log_add_exp(s * env.sigma + l0 + ln_geometric_sum(l0, t), 0.0);
    Ok(s * (sc.backlog[0] - env.rho * w) + w * l0 + bracket)
}

/// Stationary reference bound; `+inf` where `V0(s) = e^{s rho} V(s) >= 1`.
pub fn kernel_stationary(sc: &Scenario, s: f64) -> Result<f64> {
    sc.require_current()?;
    check_s(s)?;
    let env = sc.reference_envelope()?;
    let lnv = sc.channel.ln_v(s)?;
    Ok(stationary_log(sc, env, s, lnv))
}

/// `ln Phi_d(s)`: the transient bound with backlog observed `d` slots early,
/// evaluated on the composite arrivals with the clock started at `-d`.
pub fn kernel_wtb_delayed(sc: &Scenario, s: f64) -> Result<f64> {
    check_s(s)?;
    let composite = sc.composite()?;
    let lnv = sc.channel.ln_v(s)?;
    Ok(delayed_log(sc, &composite, s, lnv))
}

/// `ln(e^{-s x} Phi(s))` with `Phi` taken at `tau = t` (no extra delay).
pub fn kernel_backlog(sc: &Scenario, s: f64, threshold: f64) -> Result<f64> {
    sc.require_current()?;
    check_s(s)?;
    if sc.eval_time == 0 {
        return Err(invalid("the backlog bound needs t >= 1"));
    }
    let lnv = sc.channel.ln_v(s)?;
    let t = sc.eval_time;
    Ok(wtb_log(sc.hops, &sc.arrivals, &sc.backlog_prefix, t, t, s, lnv) - s * threshold)
}

/// Minimised bound of the chosen family.
pub fn bound(sc: &Scenario, family: BoundFamily) -> Result<BoundResult> {
    bound_with_cache(sc, family, &LnVCache::new(sc.channel))
}

/// [`bound`] reusing `ln V(s)` values across calls (same channel only).
pub fn bound_with_cache(sc: &Scenario, family: BoundFamily, cache: &LnVCache) -> Result<BoundResult> {
    if cache.channel() != sc.channel() {
        return Err(invalid("ln V cache belongs to a different channel"));
    }
    match family {
        BoundFamily::Wtb => {
            sc.require_current()?;
            let cfg = OptimizerConfig::for_family(family);
            let m = minimize_convex(
                |s| {
                    let lnv = cache.ln_v(s)?;
                    Ok(wtb_log(
                        sc.hops,
                        &sc.arrivals,
                        &sc.backlog_prefix,
                        sc.eval_time,
                        sc.tau(),
                        s,
                        lnv,
                    ))
                },
                &cfg,
            )?;
            Ok(BoundResult::from_log(m.s, m.log_value, m.evaluations, m.boundary))
        }
        BoundFamily::WtbDelayed => {
            let composite = sc.composite()?;
            let cfg = OptimizerConfig::for_family(family);
            let m = minimize_convex(|s| Ok(delayed_log(sc, &composite, s, cache.ln_v(s)?)), &cfg)?;
            Ok(BoundResult::from_log(m.s, m.log_value, m.evaluations, m.boundary))
        }
        BoundFamily::Sotat => {
            sc.require_current()?;
            let cfg = OptimizerConfig::for_family(family);
            let m = minimize_convex(|s| Ok(sotat_log(sc, s, cache.ln_v(s)?)), &cfg)?;
            Ok(BoundResult::from_log(m.s, m.log_value, m.evaluations, m.boundary))
        }
        BoundFamily::Stationary => bound_stationary(sc, cache),
    }
}

fn bound_stationary(sc: &Scenario, cache: &LnVCache) -> Result<BoundResult> {
    sc.require_current()?;
    let env = sc.reference_envelope()?;
    let mean = sc.channel.mean_capacity();
    if env.rho >= mean {
        return Ok(BoundResult {
            probability: 1.0,
            s_opt: 0.0,
            raw_log_value: f64::INFINITY,
            evaluations: 0,
            boundary: None,
            diagnostic: Some(format!(
                "no stable s: arrival rate {} >= mean service {mean:.4} bits per slot",
                env.rho
            )),
        });
    }
    let s_root = stability_edge(env.rho, cache)?;
    let s_hi = s_root * (1.0 - 1e-9);
    let default = OptimizerConfig::default();
    let cfg = OptimizerConfig {
        s_lo: default.s_lo.min(s_hi * 1e-4),
        ..default.with_upper(s_hi)
    };
    let m = minimize_convex(|s| Ok(stationary_log(sc, env, s, cache.ln_v(s)?)), &cfg)?;
    Ok(BoundResult::from_log(m.s, m.log_value, m.evaluations, m.boundary))
}

const STABILITY_SEARCH_CAP: f64 = 1e3;

// Positive root of s rho + ln V(s), or the search cap if there is none.
fn stability_edge(rho: f64, cache: &LnVCache) -> Result<f64> {
    let g = |s: f64| -> Result<f64> { Ok(s * rho + cache.ln_v(s)?) };
    let mut lo = 0.0;
    let mut hi = 1e-3;
    while g(hi)? < 0.0 {
        if hi >= STABILITY_SEARCH_CAP {
            return Ok(STABILITY_SEARCH_CAP);
        }
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.max(f64::MIN_POSITIVE))
}

/// Bound on `P(B(t) > threshold)`.
pub fn bound_backlog(sc: &Scenario, threshold: f64) -> Result<BoundResult> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(invalid(format!(
            "backlog threshold must be finite and >= 0, got {threshold}"
        )));
    }
    sc.require_current()?;
    if sc.eval_time == 0 {
        return Err(invalid("the backlog bound needs t >= 1"));
    }
    let cache = LnVCache::new(sc.channel);
    let t = sc.eval_time;
    let m = minimize_convex(
        |s| {
            let lnv = cache.ln_v(s)?;
            Ok(wtb_log(sc.hops, &sc.arrivals, &sc.backlog_prefix, t, t, s, lnv) - s * threshold)
        },
        &OptimizerConfig::default(),
    )?;
    Ok(BoundResult::from_log(m.s, m.log_value, m.evaluations, m.boundary))
}
