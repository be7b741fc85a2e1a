//! Collective alignment of rigid bodies on SO(3).
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm:
//!
//! * [`so3`]: rotations, the half-trace metric, tangent projection, Haar
//!   sampling and the special singular value decomposition.
//! * [`quaternion`]: the double cover of SO(3) by unit quaternions and the
//!   linear isomorphism onto 4×4 Q-tensors.
//! * [`von_mises`]: partition function, flux and second moments of the
//!   generalized von Mises laws `M_J ∝ exp(J·A)`, plus exact sampling.
//! * [`equilibrium`]: the scalar compatibility branches, the thresholds
//!   `ρ*` and `ρ_c`, the potential `V`, its Hessian signatures and the
//!   free-energy surrogate `W`.
//! * [`particles`]: the N-body Lie-group Euler–Maruyama simulator.
//! * [`bgk`]: the diagonal flux ODE `dJ/dt = ρ𝒥[M_J] − J` and limit
//!   classification.
//!
//! IO, the command line and parallel sweeps live in the companion `rba` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod linalg;
mod math;
pub mod numerics;
pub mod rng;
pub mod stats;

pub mod bgk;
pub mod equilibrium;
pub mod particles;
pub mod quaternion;
pub mod so3;
pub mod von_mises;

pub use error::{Error, Result};
pub use linalg::{Mat3, Vec3};
pub use quaternion::{QTensor, UnitQuaternion};
pub use so3::{AxisAngle, Rotation, Ssvd};
