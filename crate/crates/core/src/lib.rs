//! Rotation regression on SO(3) and S² with regularized projective manifold
//! gradients.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar for the common cases.

pub mod error;
pub mod lin;
pub mod repr;
pub mod riemannian;
pub mod rpmg;
pub mod scalar;
pub mod so3;
pub mod sphere;

pub use error::{Error, Result};
pub use repr::{
    baseline_backward, baseline_rotation, manifold_map, representation_map, rotation_map, ManifoldPoint, RawOutput,
    RepKind,
};
pub use riemannian::{
    euclid_grad, goal_rotation, riemannian_grad, tau_converge_for, tau_gt, LossKind, TauSchedule,
};
pub use rpmg::{
    gradient_to_goal, inverse_project, map_quat_to_10d, rpmg_gradient, AmbientGradient, Method, Projection,
    RpmgParams,
};
pub use scalar::Real;
pub use so3::{Rotation, TangentSO3, UnitQuaternion};
pub use sphere::{UnitVector3, S2Gradient};

pub type Rotation64 = so3::Rotation<f64>;
pub type Rotation32 = so3::Rotation<f32>;
pub type UnitQuaternion64 = so3::UnitQuaternion<f64>;
pub type UnitQuaternion32 = so3::UnitQuaternion<f32>;
pub type RawOutput64 = repr::RawOutput<f64>;
pub type RawOutput32 = repr::RawOutput<f32>;
pub type ManifoldPoint64 = repr::ManifoldPoint<f64>;
pub type ManifoldPoint32 = repr::ManifoldPoint<f32>;
pub type LossKind64 = riemannian::LossKind<f64>;
pub type LossKind32 = riemannian::LossKind<f32>;
pub type RpmgParams64 = rpmg::RpmgParams<f64>;
pub type RpmgParams32 = rpmg::RpmgParams<f32>;
pub type UnitVector64 = sphere::UnitVector3<f64>;
pub type UnitVector32 = sphere::UnitVector3<f32>;
pub type Vec3f64 = lin::Vec3<f64>;
pub type Mat3f64 = lin::Mat3<f64>;
