//! Slotted Monte Carlo simulation of the fluid FCFS tandem.
//!
//! Each node starts with its initial backlog `x_n` at the head of its queue.
//! In every slot each node draws an independent capacity, serves its own
//! backlog first and then whatever has reached it, and hands the result to
//! the next node. Everything leaving the last node counts as a departure.
//! `D(t)` is the amount that left in slots `0 .. t-1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::Scenario;
use crate::channel::ChannelModel;
use crate::error::{invalid, Result};
use crate::par::{fold_range, Parallelism};

/// When bits sent by node `n` become available to node `n + 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Forwarding {
    /// In the next slot.
    #[default]
    StoreAndForward,
    /// In the same slot.
    CutThrough,
}

/// Which statistic a trial contributes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Measure {
    /// Value at the evaluation slot.
    #[default]
    AtEval,
    /// Largest value over the message slots up to the evaluation slot.
    MaxUpTo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    /// Slots simulated at most; `None` picks `64 (w_max + t)`.
    pub max_horizon: Option<usize>,
    /// Evaluation slot in message time; `None` uses the scenario's.
    pub t_eval: Option<usize>,
    pub forwarding: Forwarding,
    pub measure: Measure,
    pub parallelism: Parallelism,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            max_horizon: None,
            t_eval: None,
            forwarding: Forwarding::default(),
            measure: Measure::default(),
            parallelism: Parallelism::default(),
        }
    }

    pub fn with_t_eval(mut self, t: usize) -> Self {
        self.t_eval = Some(t);
        self
    }

    pub fn with_horizon(mut self, slots: usize) -> Self {
        self.max_horizon = Some(slots);
        self
    }

    pub fn with_forwarding(mut self, forwarding: Forwarding) -> Self {
        self.forwarding = forwarding;
        self
    }

    pub fn with_measure(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    pub fn with_parallelism(mut self, parallelism: Parallelism) -> Self {
        self.parallelism = parallelism;
        self
    }
}

/// RNG stream of one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// What one node did in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSlot {
    pub capacity: f64,
    pub backlog_sent: f64,
    pub traffic_sent: f64,
    /// Initial backlog still queued after the slot.
    pub backlog_left: f64,
    /// Everything still at or heading to this node after the slot.
    pub queued: f64,
}

/// Full per-slot history of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    /// `A(t)` for `t = 0 ..= slots`.
    pub arrivals: Vec<f64>,
    /// `D(t)` for `t = 0 ..= slots`.
    pub departures: Vec<f64>,
    /// `nodes[i][n]` for slot `i`, node `n`.
    pub nodes: Vec<Vec<NodeSlot>>,
    pub total_backlog: f64,
}

impl TrialRecord {
    pub fn slots(&self) -> usize {
        self.departures.len() - 1
    }

    /// `W(t)`, or `None` if the data is still in the network at the horizon.
    pub fn virtual_delay(&self, t: usize) -> Option<usize> {
        virtual_delay_from(
            &self.departures,
            self.arrivals[t.min(self.slots())] + self.total_backlog,
            t,
        )
    }

    /// `B(t) = A(t) + sum x - D(t)`.
    pub fn backlog(&self, t: usize) -> f64 {
        let t = t.min(self.slots());
        self.arrivals[t] + self.total_backlog - self.departures[t]
    }
}

/// `W(t)` of a recorded trial (see [`TrialRecord::virtual_delay`]).
pub fn virtual_delay(record: &TrialRecord, t: usize) -> Option<usize> {
    record.virtual_delay(t)
}

fn tolerance(target: f64) -> f64 {
    1e-9 * target.max(1.0)
}

fn virtual_delay_from(departures: &[f64], target: f64, t: usize) -> Option<usize> {
    let tol = tolerance(target);
    departures
        .iter()
        .enumerate()
        .skip(t)
        .find(|(_, d)| **d >= target - tol)
        .map(|(i, _)| i - t)
}

struct Tandem<'a> {
    channel: &'a ChannelModel,
    forwarding: Forwarding,
    backlog: Vec<f64>,
    traffic: Vec<f64>,
    in_flight: Vec<f64>,
}

impl<'a> Tandem<'a> {
    fn new(sc: &'a Scenario, forwarding: Forwarding) -> Self {
        let n = sc.hops();
        Self {
            channel: sc.channel(),
            forwarding,
            backlog: sc.backlog().to_vec(),
            traffic: vec![0.0; n],
            in_flight: vec![0.0; n],
        }
    }

    // One slot; returns what left the last node.
    fn step<R: Rng + ?Sized>(&mut self, arrival: f64, rng: &mut R, mut observe: impl FnMut(usize, NodeSlot)) -> f64 {
        let n = self.backlog.len();
        for k in 0..n {
            self.traffic[k] += self.in_flight[k];
            self.in_flight[k] = 0.0;
        }
        self.traffic[0] += arrival;
        let mut exit = 0.0;
        for k in 0..n {
            let capacity = self.channel.sample_capacity(rng);
            let backlog_sent = self.backlog[k].min(capacity);
            self.backlog[k] -= backlog_sent;
            let traffic_sent = self.traffic[k].min(capacity - backlog_sent);
            self.traffic[k] -= traffic_sent;
            let sent = backlog_sent + traffic_sent;
            if k + 1 == n {
                exit = sent;
            } else {
                match self.forwarding {
                    Forwarding::StoreAndForward => self.in_flight[k + 1] += sent,
                    Forwarding::CutThrough => self.traffic[k + 1] += sent,
                }
            }
            observe(
                k,
                NodeSlot {
                    capacity,
                    backlog_sent,
                    traffic_sent,
                    backlog_left: self.backlog[k],
                    queued: self.backlog[k] + self.traffic[k],
                },
            );
        }
        exit
    }
}

fn default_horizon(t_sys: usize, w_max: usize) -> usize {
    64 * (w_max + t_sys.max(1))
}

fn system_eval(sc: &Scenario, cfg: &SimConfig) -> Result<(crate::arrivals::ArrivalProcess, usize)> {
    let (arr, _) = sc.system_view()?;
    let t = cfg.t_eval.unwrap_or(sc.eval_time());
    Ok((arr, t + sc.info_delay()))
}

/// Simulates every slot up to the horizon and records everything.
pub fn run_trial<R: Rng + ?Sized>(sc: &Scenario, cfg: &SimConfig, rng: &mut R) -> Result<TrialRecord> {
    let (arr, t_sys) = system_eval(sc, cfg)?;
    let slots = cfg.max_horizon.unwrap_or_else(|| default_horizon(t_sys, 0));
    let mut tandem = Tandem::new(sc, cfg.forwarding);
    let mut departures = Vec::with_capacity(slots + 1);
    let mut arrivals = Vec::with_capacity(slots + 1);
    let mut nodes = Vec::with_capacity(slots);
    departures.push(0.0);
    arrivals.push(0.0);
    for i in 0..slots {
        let a = arr.increments().get(i).copied().unwrap_or(0.0);
        let mut row = Vec::with_capacity(sc.hops());
        let exit = tandem.step(a, rng, |_, slot| row.push(slot));
        // store-and-forward bits in transit count toward the receiver
        for (k, slot) in row.iter_mut().enumerate() {
            slot.queued += tandem.in_flight[k];
        }
        nodes.push(row);
        departures.push(departures[i] + exit);
        arrivals.push(arr.total_until(i + 1));
    }
    Ok(TrialRecord {
        arrivals,
        departures,
        nodes,
        total_backlog: sc.total_backlog(),
    })
}

/// One point of an empirical CCDF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimPoint {
    /// Delay target `w` or backlog threshold `x`.
    pub at: f64,
    pub violations: u64,
    pub p_hat: f64,
    /// `sqrt(p (1 - p) / n)`.
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl SimPoint {
    fn new(at: f64, violations: u64, trials: u64) -> Self {
        let p_hat = violations as f64 / trials as f64;
        let (ci_lo, ci_hi) = wilson_interval(violations, trials);
        Self {
            at,
            violations,
            p_hat,
            se: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
            ci_lo,
            ci_hi,
        }
    }

    pub fn ci_halfwidth(&self) -> f64 {
        0.5 * (self.ci_hi - self.ci_lo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub trials: u64,
    pub points: Vec<SimPoint>,
}

const Z95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn check_trials(cfg: &SimConfig) -> Result<()> {
    if cfg.trials == 0 {
        Err(invalid("a simulation needs at least one trial"))
    } else {
        Ok(())
    }
}

// Departures of one trial, stopping once slot `t_last` is reached and
// `target` has left the network, or at `horizon`.
fn departures_until<R: Rng + ?Sized>(
    sc: &Scenario,
    arr: &crate::arrivals::ArrivalProcess,
    forwarding: Forwarding,
    rng: &mut R,
    t_last: usize,
    target: f64,
    horizon: usize,
    buf: &mut Vec<f64>,
) {
    let tol = tolerance(target);
    let mut tandem = Tandem::new(sc, forwarding);
    buf.clear();
    buf.push(0.0);
    let mut d = 0.0;
    for i in 0..horizon {
        if i >= t_last && d >= target - tol {
            break;
        }
        let a = arr.increments().get(i).copied().unwrap_or(0.0);
        d += tandem.step(a, rng, |_, _| {});
        buf.push(d);
    }
}

/// Empirical `P(W(t) > w)` for every `w` in `w_grid`.
///
/// Trials whose data is still in the network at the horizon count as
/// violations at every `w`.
pub fn estimate_violation(sc: &Scenario, cfg: &SimConfig, w_grid: &[usize]) -> Result<SimEstimate> {
    check_trials(cfg)?;
    let (arr, t_sys) = system_eval(sc, cfg)?;
    let w_max = w_grid.iter().copied().max().unwrap_or(0);
    let horizon = cfg.max_horizon.unwrap_or_else(|| default_horizon(t_sys, w_max));
    if horizon < t_sys {
        return Err(invalid(format!(
            "horizon {horizon} ends before the evaluation slot {t_sys}"
        )));
    }
    let first = match cfg.measure {
        Measure::AtEval => t_sys,
        Measure::MaxUpTo => (sc.info_delay() + 1).min(t_sys),
    };
    let total_backlog = sc.total_backlog();
    let target_last = arr.total_until(t_sys) + total_backlog;
    // nothing beyond t + w_max + 1 can change a count on the grid
    let stop = horizon.min(t_sys + w_max + 1);
    let bins = w_max + 2;

    let hist = fold_range(
        cfg.parallelism,
        cfg.trials,
        || (vec![0u64; bins], Vec::new()),
        |(mut hist, mut buf), trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            departures_until(sc, &arr, cfg.forwarding, &mut rng, t_sys, target_last, stop, &mut buf);
            let mut worst = Some(0usize);
            for t in first..=t_sys {
                let w = virtual_delay_from(&buf, arr.total_until(t) + total_backlog, t);
                worst = match (worst, w) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
            }
            let bin = worst.map_or(bins - 1, |w| w.min(bins - 1));
            hist[bin] += 1;
            (hist, buf)
        },
        |(mut a, buf), (b, _)| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            (a, buf)
        },
    )
    .0;

    let points = w_grid
        .iter()
        .map(|&w| {
            let violations = hist[w + 1..].iter().sum();
            SimPoint::new(w as f64, violations, cfg.trials)
        })
        .collect();
    Ok(SimEstimate {
        trials: cfg.trials,
        points,
    })
}

/// Empirical `P(B(t) > x)` for every `x` in `x_grid`.
pub fn estimate_backlog_violation(sc: &Scenario, cfg: &SimConfig, x_grid: &[f64]) -> Result<SimEstimate> {
    check_trials(cfg)?;
    if let Some(bad) = x_grid.iter().find(|x| !x.is_finite()) {
        return Err(invalid(format!("backlog thresholds must be finite, got {bad}")));
    }
    let (arr, t_sys) = system_eval(sc, cfg)?;
    let first = match cfg.measure {
        Measure::AtEval => t_sys,
        Measure::MaxUpTo => 0,
    };
    let total_backlog = sc.total_backlog();
    let tol = tolerance(arr.total_until(t_sys) + total_backlog);

    let counts = fold_range(
        cfg.parallelism,
        cfg.trials,
        || (vec![0u64; x_grid.len()], Vec::new()),
        |(mut counts, mut buf), trial| {
            let mut rng = trial_rng(cfg.seed, trial);
            // run exactly t_sys slots
            departures_until(
                sc,
                &arr,
                cfg.forwarding,
                &mut rng,
                t_sys,
                f64::INFINITY,
                t_sys,
                &mut buf,
            );
            let b = (first..=t_sys)
                .map(|t| arr.total_until(t) + total_backlog - buf[t])
                .fold(f64::NEG_INFINITY, f64::max);
            for (c, &x) in counts.iter_mut().zip(x_grid) {
                if b > x + tol {
                    *c += 1;
                }
            }
            (counts, buf)
        },
        |(mut a, buf), (b, _)| {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            (a, buf)
        },
    )
    .0;

    let points = x_grid
        .iter()
        .zip(counts)
        .map(|(&x, k)| SimPoint::new(x, k, cfg.trials))
        .collect();
    Ok(SimEstimate {
        trials: cfg.trials,
        points,
    })
}

/// Sample mean of the per-slot capacity over `draws` draws.
pub fn mean_capacity_estimate(channel: &ChannelModel, draws: u64, seed: u64, par: Parallelism) -> f64 {
    const CHUNK: u64 = 4096;
    let chunks = draws.div_ceil(CHUNK);
    // chunk sums are merged in index order whatever the schedule
    let sums = crate::par::map_ordered(par, &(0..chunks).collect::<Vec<_>>(), |&c| {
        let mut rng = trial_rng(seed, c);
        let n = CHUNK.min(draws - c * CHUNK);
        (0..n).map(|_| channel.sample_capacity(&mut rng)).sum::<f64>()
    });
    sums.iter().sum::<f64>() / draws as f64
}
