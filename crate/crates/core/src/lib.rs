//! Bandwidth allocation on networks billed by the 95th percentile.
//!
//! Data moves in discrete slots of a billing cycle. In every slot each source
//! pushes its content to a set of destinations over directed edges, and every
//! node pays its unit price times the larger of its egress and ingress
//! percentile, where the percentile ignores the top `floor((1 - q) p)`
//! samples of the cycle. This crate provides:
//!
//! * [`model`], [`io`]: instances, plans and their JSON formats;
//! * [`cost`]: the percentile operator and the total-cost objective;
//! * [`feasibility`]: constraint checking, pruning and tree validation;
//! * [`milp`]: a linearized model with LP/MPS export and a small
//!   branch-and-bound solver;
//! * [`solvers`]: exact search for desk-sized instances, a greedy heuristic
//!   and local search;
//! * [`scenarios`]: CDN, live video, real-time communication and cloud WAN
//!   variants;
//! * [`gen`]: seeded instance generators.
//!
//! All quantities are exact [`Rational`]s.

pub mod cost;
pub mod error;
pub mod feasibility;
pub mod gen;
pub mod io;
pub mod milp;
pub mod model;
pub mod par;
pub mod rational;
pub mod scenarios;
pub mod solvers;

pub use cost::{bandwidth_series, q_percentile, total_cost, BandwidthSeries, LoadLedger};
pub use error::{Error, Result};
pub use feasibility::{check_feasible, is_directed_tree, prune_plan, Violation, ViolationKind};
pub use model::{AllocationPlan, BillingConfig, Edge, Instance, Network, NodeId, SlotDemand};
pub use rational::Rational;
