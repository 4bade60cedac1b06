//! Curvature of self-dual metrics built from the hyperbolic ansatz
//! `g = e^{2f}(Vh + V⁻¹θ²)` on hyperbolic 3-space.
//!
//! * [`hyperbolic3`]: upper half-space geometry and Green's functions.
//! * [`ansatz`]: the potential `V`, the conformal gauge `f`, configurations.
//! * [`curvature`]: closed-form Ricci, scalar and Schouten curvature plus
//!   positivity classification.
//! * [`closedform_n2`], [`asymptotics_n3`]: the two-center closed form and
//!   the three-center cluster bounds.
//! * [`oracle`]: independent finite-difference curvature of explicit charts.
//! * [`certify`]: grid sweeps that certify positivity over a region.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod certify;
pub mod asymptotics_n3;
pub mod closedform_n2;
pub mod curvature;
pub mod error;
pub mod hyperbolic3;
pub mod oracle;

pub use error::{Error, Result};
