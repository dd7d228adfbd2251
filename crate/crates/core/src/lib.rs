//! Offloading decisions for resource-poor mobile devices.
//!
//! Given descriptors for the mobile device, candidate surrogates, the
//! network link and the application, [`solver::decide`] estimates the time
//! and energy of running the task at each location, filters out locations
//! without enough memory or battery, and picks the cheapest of the rest.
//! [`runtime`] then executes the task locally or on a surrogate daemon, and
//! [`harness`] sweeps inputs across the local, offload and solver strategies.
//!
//! Module map:
//!
//! * [`context`]: descriptor types and their XML parsers
//! * [`order`]: the complexity-expression language of the `Order` tag
//! * [`estimator`]: per-location time, energy and transfer estimates
//! * [`solver`]: feasibility filter, weighted cost, selection
//! * [`workloads`]: the nth-prime and matrix-determinant tasks
//! * [`runtime`]: wire protocol, daemon, client, virtual clock
//! * [`harness`]: scenario runner and CSV output

pub mod context;
pub mod estimator;
pub mod harness;
pub mod order;
pub mod runtime;
pub mod solver;
pub mod workloads;

pub use context::{ApplicationContext, ContextError, MobileContext, NetworkLink, SurrogateContext};
pub use estimator::{CandidateEstimate, Location};
pub use order::OrderExpr;
pub use solver::{decide, CostMode, Decision, Outcome, Problem, SolverWeights};
