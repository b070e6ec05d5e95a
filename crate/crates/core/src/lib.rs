//! Thermal Casimir-Polder potential of a polarizable particle outside a sphere.
//!
//! The crate evaluates the potential of a single dipole transition (and sums
//! over several) in two ways:
//!
//! * numerically exact: Mie reflection coefficients summed into the trace of
//!   the scattering Green tensor, then a Matsubara sum plus the resonant
//!   photon-occupation term ([`potential::u_exact`]);
//! * closed form: the temperature-invariant perfect-conductor term plus the
//!   leading retardation and reflectivity corrections
//!   ([`potential::u_approx_metal`], [`potential::u_approx_dielectric`]).
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! aliases at the crate root fix it to `f64`, which is what the accuracy
//! targets are stated for.

// `!(a < b)` is used on purpose: it also rejects NaN. Reference values keep
// every digit they were computed with.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod constants;
pub mod error;
pub mod greens;
pub mod materials;
pub mod mie;
pub mod potential;
pub mod quadrature;
pub mod scaled;
pub mod specfun;

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, NumAssign, NumCast};

pub use error::{Error, Result};

/// Floating-point scalar the library is generic over.
pub trait Real:
    Float + FloatConst + NumAssign + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("literal representable in scalar type")
    }

    /// Converts an unsigned integer (order, index) into `Self`.
    #[inline]
    fn of(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over the library scalar.
pub type Complex<T> = num_complex::Complex<T>;

pub type Complex64 = num_complex::Complex<f64>;
pub type Frequency = materials::Frequency<f64>;
pub type Permittivity = materials::Permittivity<f64>;
pub type PermittivityModel = materials::PermittivityModel<f64>;
pub type Polarization = mie::Polarization;
pub type SphereSystem = greens::SphereSystem<f64>;
pub type GammaValue = greens::GammaValue<f64>;
pub type TransitionSpec = potential::TransitionSpec<f64>;
pub type ThermalState = potential::ThermalState<f64>;
pub type PotentialBreakdown = potential::PotentialBreakdown<f64>;
pub type Method = potential::Method;
