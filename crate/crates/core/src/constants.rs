//! Physical constants (SI, CODATA 2018) and unit conversions.

use crate::Real;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge; also joules per electronvolt.
pub const ELECTRON_VOLT: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Angular frequency (rad/s) of a photon with the given energy in eV.
pub fn ev_to_rad_per_s<T: Real>(energy_ev: T) -> T {
    energy_ev * T::lit(ELECTRON_VOLT / HBAR)
}

pub fn rad_per_s_to_ev<T: Real>(omega: T) -> T {
    omega * T::lit(HBAR / ELECTRON_VOLT)
}

pub(crate) fn hbar<T: Real>() -> T {
    T::lit(HBAR)
}

pub(crate) fn kb<T: Real>() -> T {
    T::lit(BOLTZMANN)
}

pub(crate) fn c<T: Real>() -> T {
    T::lit(SPEED_OF_LIGHT)
}

pub(crate) fn eps0<T: Real>() -> T {
    T::lit(VACUUM_PERMITTIVITY)
}
