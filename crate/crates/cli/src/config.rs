//! Scenario files: TOML documents describing one sweep.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tandem_bounds::{ArrivalProcess, ChannelModel, Envelope, Forwarding, Measure, Parallelism, Scenario, SimConfig};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub channel: ChannelSection,
    pub network: NetworkSection,
    pub arrivals: ArrivalsSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub sim: SimSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Rayleigh,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub model: ChannelKind,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_khz: f64,
    #[serde(default = "default_slot")]
    pub slot_ms: f64,
    /// Bits per slot of a constant channel.
    #[serde(default)]
    pub rate: Option<f64>,
}

fn default_bandwidth() -> f64 {
    20.0
}

fn default_slot() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub hops: usize,
    /// One entry per hop, or a single value for every hop.
    #[serde(default)]
    pub backlog_bits: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalKind {
    Burst,
    Train,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsSection {
    pub kind: ArrivalKind,
    #[serde(rename = "T", default)]
    pub slots: Option<usize>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub increments: Vec<f64>,
    /// Envelope for the stationary reference when it differs from the arrivals'.
    #[serde(default)]
    pub stationary_sigma: Option<f64>,
    #[serde(default)]
    pub stationary_rho: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub w: Option<usize>,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub overhead_rate: Option<f64>,
    #[serde(default)]
    pub w_grid: Option<Vec<usize>>,
    #[serde(default)]
    pub snr_db_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub d_grid: Option<Vec<usize>>,
    /// Backlog thresholds for `P(B(t) > x)`.
    #[serde(default)]
    pub x_grid: Option<Vec<f64>>,
    /// Total initial backlog, split evenly over the hops.
    #[serde(default)]
    pub backlog_total_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardingKind {
    #[default]
    StoreAndForward,
    CutThrough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    #[default]
    AtEval,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub forwarding: ForwardingKind,
    #[serde(default)]
    pub measure: MeasureKind,
}

fn default_trials() -> u64 {
    100_000
}

fn default_seed() -> u64 {
    1
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: default_seed(),
            horizon: None,
            forwarding: ForwardingKind::default(),
            measure: MeasureKind::default(),
        }
    }
}

/// The single swept variable of a file.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    W(Vec<usize>),
    SnrDb(Vec<f64>),
    D(Vec<usize>),
    X(Vec<f64>),
    BacklogTotal(Vec<f64>),
}

impl Sweep {
    pub fn column(&self) -> &'static str {
        match self {
            Self::W(_) => "w",
            Self::SnrDb(_) => "snr_db",
            Self::D(_) => "d",
            Self::X(_) => "x",
            Self::BacklogTotal(_) => "backlog_total",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::W(v) | Self::D(v) => v.len(),
            Self::SnrDb(v) | Self::X(v) | Self::BacklogTotal(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            Self::W(v) | Self::D(v) => v.iter().map(|x| x.to_string()).collect(),
            Self::SnrDb(v) | Self::X(v) | Self::BacklogTotal(v) => v.iter().map(|x| format_number(*x)).collect(),
        }
    }
}

/// Shortest round-tripping decimal form.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

/// Reads a file, applies `key=value` overrides and validates the result.
pub fn load(path: &Path, overrides: &[String]) -> Result<ScenarioFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&text, overrides).with_context(|| format!("in {}", path.display()))
}

pub fn parse(text: &str, overrides: &[String]) -> Result<ScenarioFile> {
    // parse once as typed data so that mistakes carry line and column
    let file: ScenarioFile = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
    if overrides.is_empty() {
        file.validate()?;
        return Ok(file);
    }
    let mut table: Table = toml::from_str(text).map_err(|e| anyhow!("{e}"))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let file: ScenarioFile = Value::Table(table)
        .try_into()
        .map_err(|e| anyhow!("after overrides: {e}"))?;
    file.validate()?;
    Ok(file)
}

const SECTIONS: [&str; 5] = ["channel", "network", "arrivals", "eval", "sim"];

// Keys that may be given without their section.
const SHORT_KEYS: [(&str, &str); 28] = [
    ("model", "channel"),
    ("snr_db", "channel"),
    ("bandwidth_khz", "channel"),
    ("slot_ms", "channel"),
    ("rate", "channel"),
    ("hops", "network"),
    ("backlog_bits", "network"),
    ("kind", "arrivals"),
    ("T", "arrivals"),
    ("sigma", "arrivals"),
    ("rho", "arrivals"),
    ("increments", "arrivals"),
    ("stationary_sigma", "arrivals"),
    ("stationary_rho", "arrivals"),
    ("t", "eval"),
    ("w", "eval"),
    ("d", "eval"),
    ("overhead_rate", "eval"),
    ("w_grid", "eval"),
    ("snr_db_grid", "eval"),
    ("d_grid", "eval"),
    ("x_grid", "eval"),
    ("backlog_total_grid", "eval"),
    ("trials", "sim"),
    ("seed", "sim"),
    ("horizon", "sim"),
    ("forwarding", "sim"),
    ("measure", "sim"),
];

/// Applies `key=value` where `key` is `section.field` or a bare field name.
/// Setting one sweep grid removes the others.
pub fn apply_override(table: &mut Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{spec}` is not of the form key=value"))?;
    let key = key.trim();
    let (section, field) = match key.split_once('.') {
        Some((s, f)) => (s, f),
        None => SHORT_KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(k, s)| (*s, *k))
            .ok_or_else(|| anyhow!("unknown override key `{key}`"))?,
    };
    if !SECTIONS.contains(&section) {
        bail!("unknown section `{section}` in override `{spec}`");
    }
    let value = parse_value(raw.trim());
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| Value::Table(Table::new()));
    let sec = entry
        .as_table_mut()
        .ok_or_else(|| anyhow!("`{section}` is not a table"))?;
    if section == "eval" && field.ends_with("_grid") {
        for g in ["w_grid", "snr_db_grid", "d_grid", "x_grid", "backlog_total_grid"] {
            sec.remove(g);
        }
    }
    sec.insert(field.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

impl ScenarioFile {
    fn validate(&self) -> Result<()> {
        self.channel_model(None)?;
        self.base_scenario()?;
        let grids = [
            self.eval.w_grid.is_some(),
            self.eval.snr_db_grid.is_some(),
            self.eval.d_grid.is_some(),
            self.eval.x_grid.is_some(),
            self.eval.backlog_total_grid.is_some(),
        ];
        if grids.iter().filter(|g| **g).count() > 1 {
            bail!("[eval] may declare at most one of w_grid, snr_db_grid, d_grid, x_grid, backlog_total_grid");
        }
        if self.sweep().is_empty() {
            bail!("[eval] sweep grid is empty");
        }
        if self.sim.trials == 0 {
            bail!("[sim] trials must be at least 1");
        }
        Ok(())
    }

    /// Symbols per slot: bandwidth times slot length.
    pub fn symbols_per_slot(&self) -> f64 {
        self.channel.bandwidth_khz * self.channel.slot_ms
    }

    /// Channel, optionally at another SNR.
    pub fn channel_model(&self, snr_db: Option<f64>) -> Result<ChannelModel> {
        let c = &self.channel;
        match c.model {
            ChannelKind::Rayleigh => {
                let db = snr_db
                    .or(c.snr_db)
                    .ok_or_else(|| anyhow!("[channel] a rayleigh channel needs snr_db"))?;
                Ok(ChannelModel::rayleigh_db(db, self.symbols_per_slot())?)
            }
            ChannelKind::Constant => {
                let rate = c
                    .rate
                    .ok_or_else(|| anyhow!("[channel] a constant channel needs rate"))?;
                Ok(ChannelModel::constant(rate)?)
            }
        }
    }

    pub fn arrival_process(&self) -> Result<ArrivalProcess> {
        let a = &self.arrivals;
        let process = match a.kind {
            ArrivalKind::Burst => {
                let sigma = a
                    .sigma
                    .ok_or_else(|| anyhow!("[arrivals] a burst needs sigma (its size in bits)"))?;
                if a.slots.is_some_and(|t| t != 1) {
                    bail!("[arrivals] a burst occupies T = 1 slot");
                }
                ArrivalProcess::burst(sigma)?
            }
            ArrivalKind::Train => {
                let rho = a
                    .rho
                    .ok_or_else(|| anyhow!("[arrivals] a train needs rho (bits per slot)"))?;
                let slots = a.slots.ok_or_else(|| anyhow!("[arrivals] a train needs T"))?;
                ArrivalProcess::train(rho, slots)?
            }
            ArrivalKind::Custom => {
                if a.increments.is_empty() {
                    bail!("[arrivals] custom arrivals need increments");
                }
                if a.slots.is_some_and(|t| t != a.increments.len()) {
                    bail!("[arrivals] T disagrees with the number of increments");
                }
                let p = ArrivalProcess::new(a.increments.clone())?;
                match (a.sigma, a.rho) {
                    (Some(s), Some(r)) => p.with_envelope(Envelope::new(s, r)?)?,
                    (None, None) => p,
                    _ => bail!("[arrivals] give both sigma and rho or neither"),
                }
            }
        };
        Ok(process)
    }

    fn backlog_vector(&self, hops: usize) -> Result<Vec<f64>> {
        match self.network.backlog_bits.len() {
            0 => Ok(vec![0.0; hops]),
            1 => Ok(vec![self.network.backlog_bits[0]; hops]),
            n if n == hops => Ok(self.network.backlog_bits.clone()),
            n => bail!("[network] backlog_bits has {n} entries for {hops} hops"),
        }
    }

    /// Scenario at the file's fixed point, before any sweep is applied.
    pub fn base_scenario(&self) -> Result<Scenario> {
        let hops = self.network.hops;
        let mut sc = Scenario::new(hops, self.channel_model(None)?, self.arrival_process()?)?
            .with_backlog(self.backlog_vector(hops)?)?;
        if let Some(t) = self.eval.t {
            sc = sc.with_eval_time(t);
        }
        sc = sc.with_target_delay(self.eval.w.unwrap_or(0));
        if let Some(env) = self.stationary_override()? {
            sc = sc.with_stationary_envelope(env);
        }
        let d = self.eval.d.unwrap_or(0);
        if d > 0 {
            sc = sc.with_constant_overhead(self.overhead_rate(), d)?;
        }
        Ok(sc)
    }

    fn stationary_override(&self) -> Result<Option<Envelope>> {
        let a = &self.arrivals;
        match (a.stationary_sigma, a.stationary_rho) {
            (None, None) => Ok(None),
            (s, r) => Ok(Some(Envelope::new(s.unwrap_or(0.0), r.unwrap_or(0.0))?)),
        }
    }

    /// Overhead per slot during the information delay; defaults to the
    /// arrival rate.
    pub fn overhead_rate(&self) -> f64 {
        self.eval.overhead_rate.or(self.arrivals.rho).unwrap_or(0.0)
    }

    pub fn uses_delay(&self) -> bool {
        self.eval.d.unwrap_or(0) > 0 || self.eval.d_grid.is_some()
    }

    pub fn sweep(&self) -> Sweep {
        let e = &self.eval;
        if let Some(g) = &e.w_grid {
            Sweep::W(g.clone())
        } else if let Some(g) = &e.snr_db_grid {
            Sweep::SnrDb(g.clone())
        } else if let Some(g) = &e.d_grid {
            Sweep::D(g.clone())
        } else if let Some(g) = &e.x_grid {
            Sweep::X(g.clone())
        } else if let Some(g) = &e.backlog_total_grid {
            Sweep::BacklogTotal(g.clone())
        } else {
            Sweep::W(vec![e.w.unwrap_or(0)])
        }
    }

    /// Scenario at sweep point `i`.
    pub fn scenario_at(&self, i: usize) -> Result<Scenario> {
        let base = self.base_scenario()?;
        Ok(match self.sweep() {
            Sweep::W(g) => base.with_target_delay(g[i]),
            Sweep::SnrDb(g) => base.with_channel(self.channel_model(Some(g[i]))?),
            Sweep::D(g) => {
                if g[i] > 0 {
                    base.with_constant_overhead(self.overhead_rate(), g[i])?
                } else {
                    base.with_delayed_backlog(ArrivalProcess::empty(), 0)?
                }
            }
            Sweep::X(_) => base,
            Sweep::BacklogTotal(g) => {
                let hops = self.network.hops;
                base.with_uniform_backlog(g[i] / hops as f64)?
            }
        })
    }

    pub fn sim_config(&self, parallelism: Parallelism) -> SimConfig {
        let mut cfg = SimConfig::new(self.sim.trials, self.sim.seed)
            .with_parallelism(parallelism)
            .with_forwarding(match self.sim.forwarding {
                ForwardingKind::StoreAndForward => Forwarding::StoreAndForward,
                ForwardingKind::CutThrough => Forwarding::CutThrough,
            })
            .with_measure(match self.sim.measure {
                MeasureKind::AtEval => Measure::AtEval,
                MeasureKind::Max => Measure::MaxUpTo,
            });
        if let Some(h) = self.sim.horizon {
            cfg = cfg.with_horizon(h);
        }
        cfg
    }

    /// SHA-256 of the effective (post-override) document.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("scenario files serialise");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
