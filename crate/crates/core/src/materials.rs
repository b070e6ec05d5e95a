//! Permittivity models on the real and imaginary frequency axes.

use crate::error::{Error, Result};
use crate::{Complex, Real};

/// Angular frequency on one of the two axes the potential needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frequency<T> {
    /// Real angular frequency `omega` (rad/s), either sign.
    Real(T),
    /// Point `i xi` on the positive imaginary axis, `xi >= 0` (rad/s).
    Imaginary(T),
}

impl<T: Real> Frequency<T> {
    pub fn as_complex(self) -> Complex<T> {
        match self {
            Frequency::Real(w) => Complex::new(w, T::zero()),
            Frequency::Imaginary(xi) => Complex::new(T::zero(), xi),
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Frequency::Real(w) => w == T::zero(),
            Frequency::Imaginary(xi) => xi == T::zero(),
        }
    }

    pub fn magnitude(self) -> T {
        match self {
            Frequency::Real(w) => w.abs(),
            Frequency::Imaginary(xi) => xi.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PermittivityModel<T> {
    /// `|eps| -> infinity`; callers use the limiting coefficient formulas.
    PerfectConductor,
    /// `eps(w) = 1 - wp^2 / [w (w + i gamma)]`, both in rad/s.
    Drude { plasma: T, damping: T },
    /// Frequency-independent `eps >= 1`.
    ConstantDielectric { eps: T },
}

impl<T: Real> PermittivityModel<T> {
    pub fn drude(plasma: T, damping: T) -> Result<Self> {
        if !(plasma > T::zero() && plasma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Drude plasma frequency must be positive, got {plasma}"
            )));
        }
        if !(damping >= T::zero() && damping.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Drude damping must be non-negative, got {damping}"
            )));
        }
        Ok(PermittivityModel::Drude { plasma, damping })
    }

    pub fn dielectric(eps: T) -> Result<Self> {
        if !(eps >= T::one() && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dielectric constant must be >= 1, got {eps}"
            )));
        }
        Ok(PermittivityModel::ConstantDielectric { eps })
    }

    /// Gold as a Drude metal: `wp = 9 eV`, `gamma = 35 meV`.
    pub fn gold() -> Self {
        PermittivityModel::Drude {
            plasma: crate::constants::ev_to_rad_per_s(T::lit(9.0)),
            damping: crate::constants::ev_to_rad_per_s(T::lit(0.035)),
        }
    }

    /// `eps = 1` scatters nothing.
    pub fn is_vacuum(&self) -> bool {
        matches!(self, PermittivityModel::ConstantDielectric { eps } if *eps == T::one())
    }

    /// Static permittivity seen by the zero-frequency Matsubara term. Drude
    /// diverges there, which is the perfect-conductor limit.
    pub fn static_limit(&self) -> Permittivity<T> {
        match *self {
            PermittivityModel::ConstantDielectric { eps } => {
                Permittivity::Finite(Complex::new(eps, T::zero()))
            }
            _ => Permittivity::PerfectConductor,
        }
    }
}

/// Evaluated permittivity: a finite complex number or the perfect-conductor
/// classification (never represented as a large finite number).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Permittivity<T> {
    PerfectConductor,
    Finite(Complex<T>),
}

impl<T: Real> Permittivity<T> {
    pub fn finite(self) -> Option<Complex<T>> {
        match self {
            Permittivity::Finite(e) => Some(e),
            Permittivity::PerfectConductor => None,
        }
    }

    pub fn is_vacuum(self) -> bool {
        matches!(self, Permittivity::Finite(e) if e.re == T::one() && e.im == T::zero())
    }

    /// Principal square root; the perfect conductor maps to itself.
    pub fn sqrt(self) -> Self {
        match self {
            Permittivity::Finite(e) => Permittivity::Finite(e.sqrt()),
            pc => pc,
        }
    }

    pub fn conj(self) -> Self {
        match self {
            Permittivity::Finite(e) => Permittivity::Finite(e.conj()),
            pc => pc,
        }
    }
}

/// Relative permittivity at a real or positive-imaginary frequency.
pub fn permittivity<T: Real>(model: &PermittivityModel<T>, freq: Frequency<T>) -> Result<Permittivity<T>> {
    match *model {
        PermittivityModel::PerfectConductor => Ok(Permittivity::PerfectConductor),
        PermittivityModel::ConstantDielectric { eps } => {
            Ok(Permittivity::Finite(Complex::new(eps, T::zero())))
        }
        PermittivityModel::Drude { plasma, damping } => {
            if freq.is_zero() {
                return Err(Error::Pole(
                    "Drude permittivity diverges at zero frequency; use the static limit".into(),
                ));
            }
            let wp2 = plasma * plasma;
            Ok(Permittivity::Finite(match freq {
                Frequency::Real(w) => {
                    Complex::new(T::one(), T::zero())
                        - Complex::new(wp2, T::zero()) / (Complex::new(w, T::zero()) * Complex::new(w, damping))
                }
                Frequency::Imaginary(xi) => {
                    Complex::new(T::one() + wp2 / (xi * (xi + damping)), T::zero())
                }
            }))
        }
    }
}

/// Principal square root of the permittivity. `Im sqrt(eps) >= 0` whenever
/// `Im eps >= 0`.
pub fn sqrt_eps<T: Real>(model: &PermittivityModel<T>, freq: Frequency<T>) -> Result<Permittivity<T>> {
    Ok(permittivity(model, freq)?.sqrt())
}

/// `Re[i / sqrt(eps(omega))]`, evaluated at `|omega|` so that it is even in
/// the transition frequency. Zero for a perfect conductor.
pub fn re_i_over_sqrt_eps<T: Real>(model: &PermittivityModel<T>, omega: T) -> Result<T> {
    if let PermittivityModel::PerfectConductor = model {
        return Ok(T::zero());
    }
    if omega == T::zero() {
        return Err(Error::Pole(
            "Re(i/sqrt(eps)) needs a non-zero frequency".into(),
        ));
    }
    let s = sqrt_eps(model, Frequency::Real(omega.abs()))?
        .finite()
        .expect("finite model");
    Ok((Complex::<T>::i() / s).re)
}
