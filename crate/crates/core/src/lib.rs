//! Fair division of indivisible goods under orientation constraints.
//!
//! Every agent has a set of relevant items and only ever receives items from
//! it. The crate provides:
//!
//! * an exact-rational instance model with JSON I/O ([`instance`]),
//! * definitional EF/EF1/EFX/EFXr checkers ([`verify`]),
//! * envy-cycle elimination for EF1 orientations ([`ef1`]),
//! * exhaustive EFX search on graphs ([`efx_exact`]) and a dynamic program
//!   over tree layouts of bounded edge-cut width ([`fpt`]),
//! * EFXr constructions for decomposable, multigraph and planar-face
//!   instances ([`efxr`]),
//! * instance generators ([`generators`]).

pub mod ef1;
pub mod efx_exact;
pub mod efxr;
pub mod error;
pub mod fpt;
pub mod generators;
pub mod instance;
pub mod rational;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
pub use instance::{
    AgentId, Allocation, GraphInstance, Instance, InstanceKind, ItemId, ItemSet, PlanarInstance,
};
pub use rational::Rational;
