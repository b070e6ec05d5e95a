//! Sphere reflection (Mie scattering) coefficients for TE and TM waves.
//!
//! Exact coefficients are evaluated in factored form,
//!
//! ```text
//! r_TE = r_TE^PC * H (A - 1/J) / (A H - 1)
//! r_TM = r_TM^PC * (eps/J - A) J / (eps - A H)
//! ```
//!
//! with `A = [s j_l(s)]'/j_l(s)` at `s = sqrt(eps) z`, `J = j_l(z)/[z j_l(z)]'`
//! and `H = h_l(z)/[z h_l(z)]'`. `A` comes from a continued fraction, so
//! `j_l(sqrt(eps) z)` itself is never formed; for gold at micron scales it
//! would overflow.

use crate::error::{Error, Result};
use crate::materials::Permittivity;
use crate::scaled::Scaled;
use crate::specfun::{bessel_j_ratio_seq, bessel_j_scaled_seq, hankel1_scaled_seq};
use crate::{Complex, Real};

/// Largest multipole order accepted by the single-coefficient functions.
pub const MAX_ORDER: usize = 200;
/// `|z|` below which the non-retarded forms are accepted.
pub const NONRETARDED_MAX_Z: f64 = 0.3;
/// `Im(sqrt eps) |z|` above which a body counts as metallic.
pub const METALLIC_MIN: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    TE,
    TM,
}

/// Arguments of a single reflection coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MieArgs<T> {
    pub l: usize,
    pub z: Complex<T>,
    pub eps: Permittivity<T>,
}

impl<T: Real> MieArgs<T> {
    pub fn new(l: usize, z: Complex<T>, eps: Permittivity<T>) -> Result<Self> {
        check_order(l)?;
        Ok(MieArgs { l, z, eps })
    }
}

fn check_order(l: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::InvalidParameter(
            "multipole order must be at least 1".into(),
        ));
    }
    if l > MAX_ORDER {
        return Err(Error::UnsupportedOrder { l, max: MAX_ORDER });
    }
    Ok(())
}

fn check_nonzero<T: Real>(z: Complex<T>) -> Result<()> {
    if z.norm() == T::zero() {
        return Err(Error::Domain("size parameter must be non-zero".into()));
    }
    Ok(())
}

fn finite<T: Real>(v: Complex<T>) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

/// Both reflection coefficients for `l = 1 ..= lmax` at one argument, as
/// scaled values (entry 0 is unused). `r^PC ~ z^(2l+1)` underflows long
/// before the Mie sums stop needing it.
pub fn reflection_table<T: Real>(
    z: Complex<T>,
    eps: Permittivity<T>,
    lmax: usize,
) -> Result<Vec<[Scaled<T>; 2]>> {
    check_nonzero(z)?;
    let mut out = vec![[Scaled::zero(); 2]; lmax + 1];
    if eps.is_vacuum() {
        return Ok(out);
    }
    let jz = bessel_j_scaled_seq(lmax + 1, z)?;
    let hz = hankel1_scaled_seq(lmax + 1, z)?;
    let inner = match eps {
        Permittivity::Finite(e) => {
            let s = e.sqrt() * z;
            Some((e, s, bessel_j_ratio_seq(lmax + 1, s)?))
        }
        Permittivity::PerfectConductor => None,
    };

    for l in 1..=lmax {
        let lp1 = Complex::new(T::of(l + 1), T::zero());
        let pole = |what: &str| {
            Error::Pole(format!(
                "{what} at l = {l}, z = {}{:+}i",
                z.re, z.im
            ))
        };
        let jh = jz[l] / hz[l];
        let j_ratio = (jz[l + 1] / jz[l]).to_complex().ok_or_else(|| pole("j_l vanishes"))?;
        let h_ratio = (hz[l + 1] / hz[l]).to_complex().ok_or_else(|| pole("h_l overflow"))?;
        let j_inv = lp1 - z * j_ratio;
        let h = (lp1 - z * h_ratio).inv();

        let (fte, ftm) = match &inner {
            None => (Complex::new(-T::one(), T::zero()), -(h * j_inv)),
            Some((e, s, rho)) => {
                let a = lp1 - *s * rho[l + 1];
                let te = -(h * (a - j_inv)) / (a * h - T::one());
                let tm = -(h * (*e * j_inv - a)) / (*e - a * h);
                (te, tm)
            }
        };
        if !finite(fte) || !finite(ftm) {
            return Err(pole("reflection coefficient denominator vanishes"));
        }
        out[l] = [jh.scale(fte), jh.scale(ftm)];
    }
    Ok(out)
}

fn pick<T: Real>(pair: [Scaled<T>; 2], pol: Polarization) -> Scaled<T> {
    match pol {
        Polarization::TE => pair[0],
        Polarization::TM => pair[1],
    }
}

fn single<T: Real>(l: usize, z: Complex<T>, eps: Permittivity<T>, pol: Polarization) -> Result<Complex<T>> {
    let table = reflection_table(z, eps, l)?;
    pick(table[l], pol).to_complex().ok_or(Error::Overflow {
        l,
        re: z.re.as_f64(),
        im: z.im.as_f64(),
    })
}

/// Exact reflection coefficient of a sphere with finite permittivity.
pub fn refl_exact<T: Real>(args: &MieArgs<T>, pol: Polarization) -> Result<Complex<T>> {
    check_order(args.l)?;
    if let Permittivity::PerfectConductor = args.eps {
        return Err(Error::InvalidParameter(
            "perfect conductor: use refl_pc".into(),
        ));
    }
    single(args.l, args.z, args.eps, pol)
}

/// Perfect-conductor coefficients `-j_l/h_l` (TE) and `-[z j_l]'/[z h_l]'` (TM).
pub fn refl_pc<T: Real>(l: usize, z: Complex<T>, pol: Polarization) -> Result<Complex<T>> {
    check_order(l)?;
    single(l, z, Permittivity::PerfectConductor, pol)
}

/// `z^(2l+1) / [(2l+1)!! (2l-1)!!]` without forming either factor.
fn power_over_factorials<T: Real>(l: usize, z: Complex<T>) -> Complex<T> {
    let z2 = z * z;
    (1..=l).fold(z, |acc, k| acc * z2 / (T::of(2 * k + 1) * T::of(2 * k - 1)))
}

fn check_nonretarded<T: Real>(z: Complex<T>) -> Result<()> {
    check_nonzero(z)?;
    if z.norm() >= T::lit(NONRETARDED_MAX_Z) {
        return Err(Error::Regime(format!(
            "non-retarded coefficient needs |z| < {NONRETARDED_MAX_Z}, got {}",
            z.norm()
        )));
    }
    Ok(())
}

/// Perfect-conductor coefficients in the non-retarded limit.
pub fn refl_pc_nonret<T: Real>(l: usize, z: Complex<T>, pol: Polarization) -> Result<Complex<T>> {
    check_order(l)?;
    check_nonretarded(z)?;
    let p = Complex::<T>::i() * power_over_factorials(l, z);
    Ok(match pol {
        Polarization::TE => -p,
        Polarization::TM => p * (T::of(l + 1) / T::of(l)),
    })
}

/// Leading non-retarded coefficient of a sphere with finite permittivity.
pub fn refl_nonret<T: Real>(l: usize, z: Complex<T>, eps: Complex<T>, pol: Polarization) -> Result<Complex<T>> {
    check_order(l)?;
    check_nonretarded(z)?;
    let em1 = eps - T::one();
    let i = Complex::<T>::i();
    Ok(match pol {
        Polarization::TE => em1 * i * power_over_factorials(l + 1, z),
        Polarization::TM => {
            let lf = T::of(l);
            em1 * i * power_over_factorials(l, z) * T::of(l + 1) / (eps * lf + lf + T::one())
        }
    })
}

/// Bracket of the `z^2` correction to the non-retarded TM coefficient of a
/// perfect conductor.
pub fn tm_retardation_bracket<T: Real>(l: usize, z: T) -> T {
    let lf = T::of(l);
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let c = (lf + three) / ((two * lf + three) * (lf + one)) + (lf - two) / (lf * (two * lf - one));
    one - z * z / two * c
}

/// Perfect-conductor TM coefficient including its `z^2` retardation
/// correction, for real `0 < z < 0.3`.
pub fn refl_tm_pc_retarded<T: Real>(l: usize, z: T) -> Result<Complex<T>> {
    if !(z > T::zero()) {
        return Err(Error::Domain(format!("expected 0 < z, got {z}")));
    }
    let lead = refl_pc_nonret(l, Complex::new(z, T::zero()), Polarization::TM)?;
    Ok(lead * tm_retardation_bracket(l, z))
}

/// First-order expansion in `1/sqrt(eps)` about the non-retarded
/// perfect-conductor coefficients (metallic regime only).
pub fn refl_perturbative<T: Real>(
    l: usize,
    z: Complex<T>,
    eps: Permittivity<T>,
    pol: Polarization,
) -> Result<Complex<T>> {
    let lead = refl_pc_nonret(l, z, pol)?;
    let root = match eps {
        Permittivity::PerfectConductor => return Ok(lead),
        Permittivity::Finite(e) => e.sqrt(),
    };
    let metallic = root.im.abs() * z.norm();
    if !(metallic > T::lit(METALLIC_MIN)) {
        return Err(Error::Regime(format!(
            "Im(sqrt eps)|z| = {metallic} is not > {METALLIC_MIN}; use the dielectric path"
        )));
    }
    let i = Complex::<T>::i();
    let two_l1 = T::of(2 * l + 1);
    Ok(match pol {
        Polarization::TE => lead * (Complex::new(T::one(), T::zero()) - i * two_l1 / (root * z)),
        Polarization::TM => {
            lead * (Complex::new(T::one(), T::zero()) + i * z * two_l1 / (root * T::of(l * (l + 1))))
        }
    })
}
