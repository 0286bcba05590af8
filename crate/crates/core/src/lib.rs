//! Coordinated arm + positioner kinematic control for wire arc additive
//! manufacturing.
//!
//! The torch tracks a deposition path planned in the workpiece frame while
//! its axis stays aligned with a direction fixed in the cell. Both
//! requirements are stacked into one augmented Jacobian which is inverted
//! with a filtered damped least-squares scheme.

pub mod augmentation;
pub mod chain;
pub mod chain_file;
pub mod controller;
pub mod error;
mod fixed;
pub mod harness;
pub mod numfmt;
pub mod quat;
pub mod sim;
pub mod singularity;
pub mod trajectory;

pub use chain::{default_chain, ChainDescription, JacobianFrame, JacobianMatrix, JointConfig, JointEntry, JointKind, Pose};
pub use error::{Error, Result};
pub use quat::{representation_jacobian, Representation, UnitQuat};
