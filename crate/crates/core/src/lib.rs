//! Numerics for two spheres rolling on each other without slipping or
//! twisting.
//!
//! The crate integrates horizontal paths of the rolling system, bends them at
//! five points, differentiates the resulting endpoint map, and checks or
//! generates paths whose contact points satisfy a single linear relation
//! (a 5-plane in contact-point space).

pub mod bending;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod jacobian;
pub mod plane;
pub mod sampling;
pub mod shortcut;
pub mod state;
pub mod trajectory;
pub mod verify;

pub use dynamics::{
    arc_length, frame, great_circle_roll, roll, roll_with, ControlSchedule, FieldConvention,
    HorizontalPath, RadiusRatio, Sample, Steering,
};
pub use error::{Error, Result};
pub use geometry::{rotate, rotation_generator, AxisAngle, RotationChain, UnitVec3, Vec3};
pub use state::{
    act, canonical_gauge, chart_coords, equivalent, gauge_shift, make_state, ChartCoords, RawState,
};
