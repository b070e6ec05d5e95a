//! Spherical Bessel and Hankel functions of complex argument.
//!
//! * `j_l` comes from a normalized downward (Miller) recurrence, started far
//!   enough above both `l` and `|z|` that the minimal solution dominates.
//!   Normalization uses the closed forms of `j_0` or `j_1`, whichever is
//!   larger in modulus.
//! * `h_l` (first kind) comes from upward recurrence seeded with the closed
//!   forms of `h_0` and `h_1`; it is the dominant solution in that direction
//!   for every `z` in the closed upper half-plane.
//! * Riccati-type derivatives `[z f_l(z)]'` use `(l+1) f_l - z f_{l+1}`.
//!
//! Sequences are returned as [`Scaled`] values so that high orders at small
//! argument (and large imaginary arguments) neither overflow nor underflow.

use crate::error::{Error, Result};
use crate::scaled::Scaled;
use crate::{Complex, Real};

fn overflow<T: Real>(l: usize, z: Complex<T>) -> Error {
    Error::Overflow {
        l,
        re: z.re.as_f64(),
        im: z.im.as_f64(),
    }
}

fn check_arg<T: Real>(z: Complex<T>) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite argument {}{:+}i",
            z.re, z.im
        )));
    }
    Ok(())
}

/// Working magnitude above which recurrences are rescaled.
fn rescale_threshold<T: Real>() -> T {
    T::max_value().powf(T::lit(0.25))
}

/// Start index of the downward recurrences.
fn miller_start<T: Real>(lmax: usize, z: Complex<T>) -> usize {
    let a = z.norm().as_f64();
    let base = (lmax as f64).max(a.ceil());
    (base + 20.0 + 4.0 * a.cbrt()).ceil() as usize
}

/// `(sin z, cos z) * exp(-|Im z|)` together with the scale `|Im z|`.
fn sin_cos_scaled<T: Real>(z: Complex<T>) -> (Complex<T>, Complex<T>, T) {
    let s = z.im.abs();
    if s < T::one() {
        return (z.sin(), z.cos(), T::zero());
    }
    let i = Complex::<T>::i();
    let e1 = (i * z - s).exp();
    let e2 = (-i * z - s).exp();
    let two = T::lit(2.0);
    ((e1 - e2) / (i * two), (e1 + e2) / two, s)
}

/// Power series of `j_l(z)`, accurate for `|z|` below about one.
pub(crate) fn bessel_j_series<T: Real>(l: usize, z: Complex<T>) -> Scaled<T> {
    // z^l / (2l+1)!! as a running scaled product
    let mut lead = Scaled::from_complex(Complex::new(T::one(), T::zero()));
    for k in 1..=l {
        lead = lead * Scaled::from_complex(z / T::of(2 * k + 1));
    }
    let w = -(z * z) / T::lit(2.0);
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    for k in 1..60 {
        term = term * w / (T::of(k) * T::of(2 * l + 2 * k + 1));
        sum += term;
        if term.norm() <= T::epsilon() * sum.norm() * T::lit(0.01) {
            break;
        }
    }
    lead.scale(sum)
}

fn j0_scaled<T: Real>(z: Complex<T>) -> Scaled<T> {
    let (s, _, log) = sin_cos_scaled(z);
    Scaled::new(s / z, log)
}

fn j1_scaled<T: Real>(z: Complex<T>) -> Scaled<T> {
    if z.norm() < T::lit(0.5) {
        return bessel_j_series(1, z);
    }
    let (s, c, log) = sin_cos_scaled(z);
    Scaled::new((s / z - c) / z, log)
}

/// `j_0(z) .. j_lmax(z)` as scaled values.
pub fn bessel_j_scaled_seq<T: Real>(lmax: usize, z: Complex<T>) -> Result<Vec<Scaled<T>>> {
    check_arg(z)?;
    if z.norm() == T::zero() {
        let mut v = vec![Scaled::zero(); lmax + 1];
        v[0] = Scaled::from_complex(Complex::new(T::one(), T::zero()));
        return Ok(v);
    }
    let big = rescale_threshold::<T>();
    let ln_big = big.ln();
    let start = miller_start(lmax, z);
    let zinv = z.inv();

    // Unnormalized minimal solution, stored as (value, log offset).
    let mut out = vec![Scaled::zero(); lmax + 1];
    let mut upper = Complex::new(T::zero(), T::zero());
    let mut cur = Complex::new(T::min_positive_value().sqrt(), T::zero());
    let mut offset = T::zero();
    for l in (1..=start).rev() {
        if l <= lmax {
            out[l] = Scaled::new(cur, offset);
        }
        let lower = zinv * T::of(2 * l + 1) * cur - upper;
        upper = cur;
        cur = lower;
        if cur.norm() > big {
            cur /= big;
            upper /= big;
            offset += ln_big;
        }
        if !(cur.re.is_finite() && cur.im.is_finite()) {
            return Err(overflow(l, z));
        }
    }
    out[0] = Scaled::new(cur, offset);
    let f1 = if lmax >= 1 {
        out[1]
    } else {
        Scaled::new(upper, offset)
    };

    let j0 = j0_scaled(z);
    let j1 = j1_scaled(z);
    let norm = if j0.ln_abs() >= j1.ln_abs() {
        j0 / out[0]
    } else {
        j1 / f1
    };
    for v in out.iter_mut() {
        *v = *v * norm;
    }
    Ok(out)
}

/// `h_0(z) .. h_lmax(z)` (first kind) as scaled values.
pub fn hankel1_scaled_seq<T: Real>(lmax: usize, z: Complex<T>) -> Result<Vec<Scaled<T>>> {
    check_arg(z)?;
    if z.norm() == T::zero() {
        return Err(Error::Domain(
            "spherical Hankel function has a pole at z = 0".into(),
        ));
    }
    let i = Complex::<T>::i();
    // e^{iz} = e^{i Re z} e^{-Im z}; the modulus goes into the log scale.
    let phase = (i * z.re).exp();
    let log = -z.im;
    let h0 = -i * phase / z;
    let h1 = -phase * (z + i) / (z * z);

    let big = rescale_threshold::<T>();
    let ln_big = big.ln();
    let zinv = z.inv();
    let mut out = Vec::with_capacity(lmax + 1);
    out.push(Scaled::new(h0, log));
    if lmax == 0 {
        return Ok(out);
    }
    out.push(Scaled::new(h1, log));
    let (mut prev, mut cur, mut offset) = (h0, h1, log);
    for l in 1..lmax {
        let next = zinv * T::of(2 * l + 1) * cur - prev;
        prev = cur;
        cur = next;
        if cur.norm() > big {
            cur /= big;
            prev /= big;
            offset += ln_big;
        }
        if !(cur.re.is_finite() && cur.im.is_finite()) {
            return Err(overflow(l + 1, z));
        }
        out.push(Scaled::new(cur, offset));
    }
    Ok(out)
}

/// Ratios `j_l(z) / j_{l-1}(z)` for `l = 1 ..= lmax` (index 0 is unused and
/// set to zero), from the backward continued fraction
/// `rho_l = z / (2l + 1 - z rho_{l+1})`.
pub fn bessel_j_ratio_seq<T: Real>(lmax: usize, z: Complex<T>) -> Result<Vec<Complex<T>>> {
    check_arg(z)?;
    let start = miller_start(lmax, z);
    let mut out = vec![Complex::new(T::zero(), T::zero()); lmax + 1];
    let mut rho = Complex::new(T::zero(), T::zero());
    for k in (1..=start).rev() {
        rho = z / (Complex::new(T::of(2 * k + 1), T::zero()) - z * rho);
        if k <= lmax {
            out[k] = rho;
        }
    }
    Ok(out)
}

fn to_value<T: Real>(v: Scaled<T>, l: usize, z: Complex<T>) -> Result<Complex<T>> {
    v.to_complex().ok_or_else(|| overflow(l, z))
}

/// Spherical Bessel function of the first kind `j_l(z)`.
///
/// Values whose modulus is below the smallest normal number flush to zero;
/// values above the largest finite number are reported as overflow.
pub fn sph_bessel_j<T: Real>(l: usize, z: Complex<T>) -> Result<Complex<T>> {
    let seq = bessel_j_scaled_seq(l, z)?;
    to_value(seq[l], l, z)
}

/// Spherical Hankel function of the first kind `h_l(z) = j_l(z) + i y_l(z)`.
pub fn sph_hankel1<T: Real>(l: usize, z: Complex<T>) -> Result<Complex<T>> {
    let seq = hankel1_scaled_seq(l, z)?;
    to_value(seq[l], l, z)
}

/// `y_l(z)` for real-axis checks; not part of the public surface.
#[cfg(test)]
pub(crate) fn sph_bessel_y<T: Real>(l: usize, z: Complex<T>) -> Result<Complex<T>> {
    let h = sph_hankel1(l, z)?;
    let j = sph_bessel_j(l, z)?;
    Ok((h - j) * (-Complex::i()))
}

/// `(l+1) f_l - z f_{l+1}` from a scaled sequence, formed relative to `f_l`.
pub(crate) fn riccati_derivative<T: Real>(seq: &[Scaled<T>], l: usize, z: Complex<T>) -> Scaled<T> {
    let (fl, fl1) = (seq[l], seq[l + 1]);
    if fl.is_zero() {
        return fl1.scale(-z);
    }
    let ratio = (fl1 / fl).to_complex().unwrap_or_else(|| {
        Complex::new(T::infinity(), T::zero())
    });
    if !(ratio.re.is_finite() && ratio.im.is_finite()) {
        return fl1.scale(-z);
    }
    fl.scale(Complex::new(T::of(l + 1), T::zero()) - z * ratio)
}

/// `[z j_l(z)]'`.
pub fn tilde_j<T: Real>(l: usize, z: Complex<T>) -> Result<Complex<T>> {
    let seq = bessel_j_scaled_seq(l + 1, z)?;
    to_value(riccati_derivative(&seq, l, z), l, z)
}

/// `[z h_l(z)]'`.
pub fn tilde_h<T: Real>(l: usize, z: Complex<T>) -> Result<Complex<T>> {
    let seq = hankel1_scaled_seq(l + 1, z)?;
    to_value(riccati_derivative(&seq, l, z), l, z)
}

/// `[z j_l(z)]' / j_l(z)`, finite even where `j_l(z)` itself overflows.
pub fn log_ratio_a<T: Real>(l: usize, z: Complex<T>) -> Result<Complex<T>> {
    if z.norm() == T::zero() {
        return Err(Error::Domain("log_ratio_a requires z != 0".into()));
    }
    let rho = bessel_j_ratio_seq(l + 1, z)?;
    let a = Complex::new(T::of(l + 1), T::zero()) - z * rho[l + 1];
    if !(a.re.is_finite() && a.im.is_finite()) {
        return Err(Error::Pole(format!(
            "j_{l} vanishes at z = {}{:+}i",
            z.re, z.im
        )));
    }
    Ok(a)
}

/// `n!! = n (n-2) (n-4) ...`, with `0!! = (-1)!! = 1`.
pub fn double_factorial<T: Real>(n: i64) -> T {
    if n > 150 {
        return ln_double_factorial::<T>(n).exp();
    }
    let mut acc = T::one();
    let mut k = n;
    while k > 1 {
        acc *= T::of(k as usize);
        k -= 2;
    }
    acc
}

pub fn ln_double_factorial<T: Real>(n: i64) -> T {
    let mut acc = T::zero();
    let mut k = n;
    while k > 1 {
        acc += T::of(k as usize).ln();
        k -= 2;
    }
    acc
}
