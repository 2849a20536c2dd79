//! Positioning and downlink power allocation for a single flying base station
//! (FlyBS) serving mobile IoT nodes.
//!
//! At every timestep the FlyBS maximizes the sum capacity of its nodes while
//! guaranteeing each node a minimum capacity and respecting altitude, speed,
//! propulsion-power and transmission-power limits. The solver alternates an
//! optimal water-filling power split ([`power_alloc`]) with a geometric
//! repositioning step ([`positioning`]) inside a feasibility region built from
//! balls ([`feasibility`]).
//!
//! [`sim`] wraps this in a seeded mission simulator with node mobility,
//! comparison schemes and CSV/JSON export.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod error;
pub mod feasibility;
pub mod geometry;
pub mod mobility;
pub mod optimizer;
pub mod positioning;
pub mod power_alloc;
pub mod propulsion;
pub mod sim;

pub use error::{Error, Result};

/// A point or displacement in meters, `z` is altitude.
pub type Point3 = nalgebra::Vector3<f64>;
