//! Transient delay and backlog violation bounds for multi-hop tandems of
//! i.i.d. Rayleigh block-fading links, with a Monte Carlo simulator to
//! check them against.
//!
//! ```
//! use tandem_bounds::{bound, ArrivalProcess, BoundFamily, ChannelModel, Scenario};
//!
//! let channel = ChannelModel::rayleigh_db(10.0, 20.0).unwrap();
//! let sc = Scenario::new(2, channel, ArrivalProcess::train(25.0, 5).unwrap())
//!     .unwrap()
//!     .with_uniform_backlog(50.0)
//!     .unwrap()
//!     .with_target_delay(10);
//! let wtb = bound(&sc, BoundFamily::Wtb).unwrap();
//! let sotat = bound(&sc, BoundFamily::Sotat).unwrap();
//! assert!(wtb.probability <= sotat.probability);
//! ```

pub mod arrivals;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod numeric;
pub mod optimize;
pub mod par;
pub mod quadrature;
pub mod sim;
pub mod special;

pub use arrivals::{ArrivalProcess, CompositeArrival, Envelope};
pub use bounds::{bound, bound_backlog, bound_with_cache, BoundFamily, BoundResult, Scenario};
pub use channel::{ChannelModel, ConstantChannel, LnVCache, RayleighChannel};
pub use error::{Error, Result};
pub use optimize::{delay_for_epsilon, snr_for_epsilon, OptimizerConfig, SnrSearch};
pub use par::Parallelism;
pub use sim::{estimate_backlog_violation, estimate_violation, Forwarding, Measure, SimConfig, SimEstimate};
