//! Distributed adaptive consensus control with prescribed performance for
//! networks of high-order agents with unknown nonlinear dynamics.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: communication topology, Laplacian and pinning quantities.
//! - [`ppf`]: performance funnels and the constrained/unconstrained error map.
//! - [`controller`]: metric error, distributed control law, adaptive laws and
//!   the stability diagnostics (gain check, Lyapunov monitor).
//! - [`dynamics`]: agent and leader models, including the two built-in
//!   benchmark suites, and the neighbourhood synchronization error.
//! - [`sim`]: closed-loop assembly, fixed-step integration and traces.
//! - [`config`] / [`cli`]: scenario documents and the command-line front end.

pub mod cli;
pub mod config;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod graph;
pub mod linalg;
pub mod ppf;
pub mod sim;

pub use error::{Error, Result};
