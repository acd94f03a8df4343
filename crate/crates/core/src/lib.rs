//! Scheduling and simulation of peer-to-peer file dissemination under the
//! uplink-sharing model.
//!
//! A server (node `0`) holds a 1 MB file split into `M` equal parts; `N` peers
//! want all of it. Only upload capacities limit transfers. The crate offers:
//!
//! * [`verify`]: an independent checker for explicit schedules;
//! * [`equal`]: the optimal round schedule when all capacities are equal;
//! * [`exact`]: exact/approximate minimal makespan for arbitrary capacities;
//! * [`fluid`]: closed-form fluid-limit makespans and two-hop transfer plans;
//! * [`sim`] and [`markov`]: the randomized decentralized strategy, simulated
//!   and solved exactly;
//! * [`analysis`]: log-linear growth fits over simulation sweeps.

pub mod analysis;
pub mod equal;
pub mod error;
pub mod exact;
pub mod exec;
pub mod fluid;
pub mod markov;
pub mod model;
pub mod rational;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use model::{ContinuousSchedule, Instance, NodeId, RoundSchedule, Transfer, Upload, SERVER};
pub use rational::Rational;
pub use verify::{verify_schedule, VerificationReport};
pub use sim::Scenario;
