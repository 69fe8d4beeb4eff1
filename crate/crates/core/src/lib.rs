//! Multilevel block-coordinate descent for quadratic Galerkin hierarchies
//! and physics-informed neural networks built as sums of subnetworks.

pub mod architectures;
pub mod composite;
pub mod config;
pub mod cost;
pub mod driver;
pub mod error;
pub mod galerkin;
pub mod gradcheck;
pub mod network;
pub mod numerics;
pub mod optimizer;
pub mod pinn;
pub mod report;
pub mod runner;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
