//! Special-relativistic motion in a central potential.
//!
//! The crate integrates the relativistic equations of motion for a particle
//! in a planar central field, measures period functions of the Clairaut
//! reduction, builds candidate isochronous ("Bertrand") families and checks
//! the obstruction that rules them out, classifies Coulomb energy-momentum
//! pairs, tracks the relativistic Runge-Lenz vector and fits collision
//! asymptotics on a regularized flow.

pub mod bertrand;
pub mod circular;
pub mod clairaut;
pub mod collision;
pub mod coulomb;
pub mod dynamics;
pub mod error;
pub mod ode;
pub mod physics;
pub mod roots;

pub use error::{Error, Result};
pub use physics::{PhaseState, PhysicalParams, Potential, PotentialKind, Vec2};
