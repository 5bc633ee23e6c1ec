//! Controlled stochastic Cucker–Smale flocking on networks.
//!
//! Agents align velocities over one graph, are steered toward a target
//! configuration over a second, and share a single multiplicative noise
//! source over a third. The crate builds the graphs and weights, integrates
//! the SDE, and evaluates every hypothesis and Lyapunov diagnostic of the
//! flocking and pattern-formation estimates.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod graph;
pub mod integrator;
pub mod kernels;
pub mod model;
pub mod quadrature;
pub mod rng;

pub use ensemble::{EnsembleConfig, EnsembleSeries, RunAnalysis, Stat};
pub use error::{Error, Result};
pub use graph::{ComplementConvention, Family, Graph, GraphMetrics};
pub use integrator::{Scheme, StepperConfig};
pub use kernels::CommunicationKernel;
pub use model::{AnalysisConstants, ModelParams, SwarmState};
