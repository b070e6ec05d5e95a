//! Trace of the scattering Green tensor at the particle position.
//!
//! ```text
//! gamma(w) = i x / (4 pi r^3) * sum_l (2l+1) { x^2 r_TE h_l(x)^2
//!            + r_TM [ l(l+1) h_l(x)^2 + ([x h_l(x)]')^2 ] }
//! ```
//!
//! with `x = r w / c` and the reflection coefficients taken at `phi x`.
//! Imaginary frequencies go through the same complex-argument path
//! (`x = i xi r / c`); the result is checked to be real and returned as such.

use std::f64::consts::PI;

use crate::constants::c;
use crate::error::{Error, Result};
use crate::materials::{permittivity, Frequency, Permittivity, PermittivityModel};
use crate::mie::reflection_table;
use crate::potential::{scaling_f, scaling_g_ret, scaling_g_refl};
use crate::scaled::Scaled;
use crate::specfun::hankel1_scaled_seq;
use crate::{Complex, Real};

/// Largest `R/r` accepted by the multipole sums.
pub const MAX_PHI: f64 = 0.995;
/// Accepted range of the relative tolerance of [`gamma_trace`].
pub const TOL_RANGE: (f64, f64) = (1e-12, 1e-3);
/// Consecutive small terms required before a multipole sum is accepted.
const CONVERGED_RUN: usize = 3;

/// Sphere of radius `radius` centred a distance `distance` from the particle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereSystem<T> {
    pub radius: T,
    pub distance: T,
}

impl<T: Real> SphereSystem<T> {
    pub fn new(radius: T, distance: T) -> Result<Self> {
        if !(radius > T::zero() && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        if !(distance > radius && distance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "particle must sit outside the sphere: need R < r, got R = {radius}, r = {distance}"
            )));
        }
        Ok(SphereSystem { radius, distance })
    }

    /// `R / r`.
    pub fn phi(&self) -> T {
        self.radius / self.distance
    }

    /// `r w / c` for an angular frequency `w`.
    pub fn retardation(&self, omega: T) -> T {
        self.distance * omega / c::<T>()
    }

    /// Angular frequency with `r w / c = x`.
    pub fn omega_for(&self, x: T) -> T {
        x * c::<T>() / self.distance
    }

    fn four_pi_r3(&self) -> T {
        T::lit(4.0 * PI) * self.distance.powi(3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaValue<T> {
    /// `gamma` in m^-3.
    pub value: Complex<T>,
    pub l_terms_used: usize,
    /// Largest of the final terms relative to the sum.
    pub truncation_estimate: T,
}

fn check_phi<T: Real>(phi: T) -> Result<()> {
    if phi > T::lit(MAX_PHI) {
        return Err(Error::NearContact {
            phi: phi.as_f64(),
            max: MAX_PHI,
        });
    }
    Ok(())
}

/// Multipole cap for a sum at retardation `|x|`: terms fall off as
/// `phi^(2l)` times a power of `l` once `l` exceeds `|x|`.
pub fn l_cap<T: Real>(phi: T, x_abs: T, tol: T) -> usize {
    let geometric = (T::lit(12.0) / (T::one() - phi)).ceil().as_f64() as usize;
    // phi^(2l) l^3 < tol
    let tail = ((T::lit(30.0) - tol.ln()) / (-T::lit(2.0) * phi.ln())).ceil().as_f64() as usize;
    geometric.max(tail).max(40) + (T::lit(2.0) * x_abs).ceil().as_f64() as usize
}

struct Partial<T> {
    sum: Complex<T>,
    magnitude: T,
    terms: usize,
    estimate: T,
    converged: bool,
}

fn multipole_sum<T: Real>(x: Complex<T>, phi: T, eps: Permittivity<T>, lmax: usize, tol: T) -> Result<Partial<T>> {
    let table = reflection_table(x * phi, eps, lmax)?;
    let hx = hankel1_scaled_seq(lmax + 1, x)?;
    let x2 = x * x;
    let overflow = |l: usize| Error::Overflow {
        l,
        re: x.re.as_f64(),
        im: x.im.as_f64(),
    };

    let mut sum = Complex::new(T::zero(), T::zero());
    let mut magnitude = T::zero();
    let mut recent = [T::zero(); CONVERGED_RUN];
    let mut small_run = 0;
    for l in 1..=lmax {
        let h2: Scaled<T> = hx[l] * hx[l];
        let te = (table[l][0] * h2).to_complex().ok_or_else(|| overflow(l))?;
        let tm = (table[l][1] * h2).to_complex().ok_or_else(|| overflow(l))?;
        let h_ratio = (hx[l + 1] / hx[l]).to_complex().ok_or_else(|| overflow(l))?;
        let th_over_h = Complex::new(T::of(l + 1), T::zero()) - x * h_ratio;
        let weight = Complex::new(T::of(l * (l + 1)), T::zero()) + th_over_h * th_over_h;
        let term = (x2 * te + tm * weight) * T::of(2 * l + 1);
        sum += term;
        magnitude += term.norm();

        let size = sum.norm();
        let rel = if size > T::zero() { term.norm() / size } else { T::zero() };
        recent[l % CONVERGED_RUN] = rel;
        if rel < tol || size == T::zero() {
            small_run += 1;
        } else {
            small_run = 0;
        }
        if small_run >= CONVERGED_RUN {
            let estimate = recent.iter().fold(T::zero(), |a, &b| a.max(b));
            return Ok(Partial { sum, magnitude, terms: l, estimate, converged: true });
        }
    }
    let estimate = recent.iter().fold(T::zero(), |a, &b| a.max(b));
    Ok(Partial { sum, magnitude, terms: lmax, estimate, converged: false })
}

/// `gamma_w(r)` at a non-zero real or positive-imaginary frequency.
///
/// Negative real frequencies use `gamma(-w) = conj gamma(w)`.
pub fn gamma_trace<T: Real>(
    sys: &SphereSystem<T>,
    freq: Frequency<T>,
    model: &PermittivityModel<T>,
    tol: T,
) -> Result<GammaValue<T>> {
    if !(tol >= T::lit(TOL_RANGE.0) && tol <= T::lit(TOL_RANGE.1)) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    if freq.is_zero() {
        return Err(Error::Domain(
            "gamma_trace needs a non-zero frequency; use gamma_static".into(),
        ));
    }
    let phi = sys.phi();
    check_phi(phi)?;
    if model.is_vacuum() {
        return Ok(GammaValue {
            value: Complex::new(T::zero(), T::zero()),
            l_terms_used: 0,
            truncation_estimate: T::zero(),
        });
    }
    let (freq, flip) = match freq {
        Frequency::Real(w) if w < T::zero() => (Frequency::Real(-w), true),
        Frequency::Imaginary(xi) if xi < T::zero() => {
            return Err(Error::Domain(format!(
                "imaginary frequency must lie on the positive axis, got {xi}"
            )));
        }
        f => (f, false),
    };
    let eps = permittivity(model, freq)?;
    let x = freq.as_complex() * (sys.distance / c::<T>());
    let cap = l_cap(phi, x.norm(), tol);

    let mut lmax = cap.min(32 + (T::lit(2.0) * x.norm()).ceil().as_f64() as usize);
    let partial = loop {
        let p = multipole_sum(x, phi, eps, lmax, tol)?;
        if p.converged || lmax == cap {
            break p;
        }
        lmax = (2 * lmax).min(cap);
    };
    let prefactor = Complex::<T>::i() * x / sys.four_pi_r3();
    if !partial.converged {
        let v = prefactor * partial.sum;
        return Err(Error::Convergence {
            terms: partial.terms,
            partial_re: v.re.as_f64(),
            partial_im: v.im.as_f64(),
            estimate: partial.estimate.as_f64(),
        });
    }
    let mut value = prefactor * partial.sum;
    if let Frequency::Imaginary(_) = freq {
        let roundoff = T::lit(1e3) * T::epsilon() * prefactor.norm() * partial.magnitude;
        if value.im.abs() > tol * value.norm() + roundoff {
            return Err(Error::Consistency(format!(
                "gamma at imaginary frequency has imaginary part {:e} against real part {:e}",
                value.im, value.re
            )));
        }
        value.im = T::zero();
    }
    if flip {
        value = value.conj();
    }
    Ok(GammaValue {
        value,
        l_terms_used: partial.terms,
        truncation_estimate: partial.estimate,
    })
}

/// Cap on the static series; it is plain arithmetic, so the cap only guards
/// against runaway loops.
const STATIC_MAX_TERMS: usize = 200_000;

/// Zero-frequency limit of `gamma` for a static permittivity (real, `>= 1`)
/// or a perfect conductor.
pub fn gamma_static<T: Real>(sys: &SphereSystem<T>, eps_static: Permittivity<T>) -> Result<T> {
    let phi = sys.phi();
    let scale = sys.four_pi_r3();
    let eps = match eps_static {
        Permittivity::PerfectConductor => return Ok(scaling_f(phi) / scale),
        Permittivity::Finite(e) => e,
    };
    if eps.im != T::zero() || !(eps.re >= T::one()) {
        return Err(Error::InvalidParameter(format!(
            "static permittivity must be real and >= 1, got {}{:+}i",
            eps.re, eps.im
        )));
    }
    let e = eps.re;
    if e == T::one() {
        return Ok(T::zero());
    }
    let phi2 = phi * phi;
    let mut power = phi;
    let mut sum = T::zero();
    for l in 1..=STATIC_MAX_TERMS {
        power *= phi2;
        let lf = T::of(l);
        let term = lf * (lf + T::one()) * T::of(2 * l + 1) * (e - T::one()) * power
            / (lf * e + lf + T::one());
        sum += term;
        if term <= T::epsilon() * T::lit(0.01) * sum {
            return Ok(sum / scale);
        }
    }
    Err(Error::Convergence {
        terms: STATIC_MAX_TERMS,
        partial_re: (sum / scale).as_f64(),
        partial_im: 0.0,
        estimate: 1.0,
    })
}

/// Leading retardation correction `x^2 g_ret(phi) / (8 pi r^3)` of the
/// perfect-conductor trace, for `0 < x < 0.3`.
pub fn delta_gamma_ret<T: Real>(sys: &SphereSystem<T>, x: T) -> Result<T> {
    if !(x > T::zero() && x < T::lit(crate::mie::NONRETARDED_MAX_Z)) {
        return Err(Error::Regime(format!(
            "retardation correction needs 0 < x < {}, got {x}",
            crate::mie::NONRETARDED_MAX_Z
        )));
    }
    Ok(x * x * scaling_g_ret(sys.phi()) / (T::lit(2.0) * sys.four_pi_r3()))
}

/// Leading finite-reflectivity correction
/// `i x g_refl(phi) / (8 pi r^3 sqrt(eps))` at real frequency `omega`.
///
/// Zero for a perfect conductor. Requires the metallic regime
/// `Im(sqrt eps) phi x > 5`.
pub fn delta_gamma_refl<T: Real>(
    sys: &SphereSystem<T>,
    omega: T,
    model: &PermittivityModel<T>,
) -> Result<Complex<T>> {
    if let PermittivityModel::PerfectConductor = model {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    if omega == T::zero() {
        return Err(Error::Domain("reflectivity correction needs omega != 0".into()));
    }
    let w = omega.abs();
    let root = permittivity(model, Frequency::Real(w))?
        .sqrt()
        .finite()
        .expect("finite model");
    let x = sys.retardation(w);
    let phi = sys.phi();
    let metallic = root.im * phi * x;
    if !(metallic > T::lit(crate::mie::METALLIC_MIN)) {
        return Err(Error::Regime(format!(
            "Im(sqrt eps) phi x = {metallic} is not > {}",
            crate::mie::METALLIC_MIN
        )));
    }
    let v = Complex::<T>::i() * x * scaling_g_refl(phi) / (root * T::lit(2.0) * sys.four_pi_r3());
    Ok(if omega < T::zero() { v.conj() } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const R: f64 = 20e-6;

    fn sys(phi: f64) -> SphereSystem<f64> {
        SphereSystem::new(phi * R, R).unwrap()
    }

    fn scale() -> f64 {
        4.0 * PI * R.powi(3)
    }

    fn pc() -> PermittivityModel<f64> {
        PermittivityModel::PerfectConductor
    }

    fn at_x(s: &SphereSystem<f64>, x: f64) -> Frequency<f64> {
        Frequency::Real(s.omega_for(x))
    }

    fn reduced(s: &SphereSystem<f64>, f: Frequency<f64>, m: &PermittivityModel<f64>) -> Complex<f64> {
        gamma_trace(s, f, m, 1e-12).unwrap().value * scale()
    }

    fn rel(a: Complex<f64>, b: Complex<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn geometry_validation() {
        assert!(SphereSystem::new(30e-6, 20e-6).is_err());
        assert!(SphereSystem::new(0.0, 20e-6).is_err());
        assert_eq!(sys(0.5).phi(), 0.5);
        let s = sys(0.999);
        assert!(matches!(
            gamma_trace(&s, at_x(&s, 0.1), &pc(), 1e-8),
            Err(Error::NearContact { .. })
        ));
    }

    #[test]
    fn argument_validation() {
        let s = sys(0.5);
        assert!(gamma_trace(&s, Frequency::Real(0.0), &pc(), 1e-8).is_err());
        assert!(gamma_trace(&s, at_x(&s, 0.1), &pc(), 1e-14).is_err());
        assert!(gamma_trace(&s, at_x(&s, 0.1), &pc(), 1e-2).is_err());
    }

    #[test]
    fn matches_brute_force_reference() {
        let s = sys(0.5);
        let six = PermittivityModel::dielectric(6.0).unwrap();
        let cases = [
            (reduced(&s, at_x(&s, 0.3), &pc()), Complex::new(1.598_093_401_264_421_2, 0.002_423_137_167_447_103_7)),
            (reduced(&s, at_x(&s, 2.0), &pc()), Complex::new(1.975_634_303_159_512_6, -1.360_301_442_019_326_1)),
            (reduced(&s, at_x(&s, 0.01), &six), Complex::new(1.024_917_087_214_101_1, 2.443_817_986_630_577_6e-8)),
            (
                reduced(&s, Frequency::Imaginary(s.omega_for(2.0)), &six),
                Complex::new(0.554_625_448_107_623_5, 0.0),
            ),
        ];
        for (got, want) in cases {
            assert!(rel(got, want) < 1e-10, "{got} vs {want}");
        }
        let s8 = sys(0.8);
        let glass = PermittivityModel::dielectric(2.25).unwrap();
        let got = reduced(&s8, at_x(&s8, 1.5), &glass);
        let want = Complex::new(20.203_090_933_263_164, 1.403_754_616_516_459_4);
        assert!(rel(got, want) < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn complex_permittivity_reference() {
        // no model produces a fixed complex eps, so drive the sum directly
        let eps = Permittivity::Finite(Complex::new(-1000.0, 5000.0));
        let x = Complex::new(0.2, 0.0);
        let p = multipole_sum(x, 0.5, eps, 60, 1e-13).unwrap();
        assert!(p.converged);
        let got = Complex::<f64>::i() * x * p.sum;
        let want = Complex::new(1.588_839_787_813_024_4, 0.003_768_723_128_387_029_2);
        assert!(rel(got, want) < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn nonretarded_pc_limit_is_scaling_function() {
        let s = sys(0.5);
        let g = reduced(&s, at_x(&s, 1e-4), &pc());
        assert_relative_eq!(g.re, 1.574_074_074_074_074_1, max_relative = 1e-6);
    }

    #[test]
    fn vacuum_sphere_gives_zero() {
        let s = sys(0.5);
        let vac = PermittivityModel::dielectric(1.0).unwrap();
        assert_eq!(gamma_trace(&s, at_x(&s, 0.3), &vac, 1e-8).unwrap().value, Complex::new(0.0, 0.0));
    }

    #[test]
    fn matsubara_tail_is_exponentially_small() {
        let gold = PermittivityModel::gold();
        // (phi, x = 1e-4 i, x = 50 i) from the high-precision brute-force sum
        let table = [
            (0.1, 0.006_152_845_640_875_594_9, 1.871_760_363_938_581_4e-37),
            (0.5, 1.574_074_067_756_223_5, 4.393_204_170_625_582_9e-19),
            (0.9, 449.165_606_701_771_6, 1.104_821_035_457_393_7),
        ];
        for (phi, near_ref, far_ref) in table {
            let s = sys(phi);
            let near = reduced(&s, Frequency::Imaginary(s.omega_for(1e-4)), &gold);
            let far = reduced(&s, Frequency::Imaginary(s.omega_for(50.0)), &gold);
            assert_eq!(far.im, 0.0);
            assert_relative_eq!(near.re, near_ref, max_relative = 1e-10);
            assert_relative_eq!(far.re, far_ref, max_relative = 1e-9);
            // decay follows exp(-2 (1 - phi) xi r / c) up to a power of xi
            let bound = 1e6 * (-2.0 * (1.0 - phi) * 50.0_f64).exp();
            assert!(far.re / near.re < bound.max(1e-300) || phi > 0.8);
        }
    }

    #[test]
    fn negative_frequency_is_conjugate() {
        let s = sys(0.5);
        let gold = PermittivityModel::gold();
        let w = s.omega_for(0.1);
        let a = gamma_trace(&s, Frequency::Real(w), &gold, 1e-12).unwrap().value;
        let b = gamma_trace(&s, Frequency::Real(-w), &gold, 1e-12).unwrap().value;
        assert_eq!(a.conj(), b);
    }

    #[test]
    fn static_series() {
        let s = sys(0.5);
        assert_relative_eq!(
            gamma_static(&s, Permittivity::PerfectConductor).unwrap() * scale(),
            1.574_074_074_074_074_1,
            max_relative = 1e-14
        );
        let big = gamma_static(&s, Permittivity::Finite(Complex::new(1e8, 0.0))).unwrap();
        let pcv = gamma_static(&s, Permittivity::PerfectConductor).unwrap();
        assert_relative_eq!(big, pcv, max_relative = 1e-6);
        let six = gamma_static(&s, Permittivity::Finite(Complex::new(6.0, 0.0))).unwrap() * scale();
        let first = 1.0 * 2.0 * 3.0 * 5.0 * 0.125 / 8.0;
        assert_relative_eq!(first, 0.468_75);
        assert!(six > first && six < 1.574);
        assert!(gamma_static(&s, Permittivity::Finite(Complex::new(0.5, 0.0))).is_err());
        assert_eq!(gamma_static(&s, Permittivity::Finite(Complex::new(1.0, 0.0))).unwrap(), 0.0);
    }

    #[test]
    fn static_dielectric_is_low_frequency_limit() {
        let s = sys(0.5);
        let six = PermittivityModel::dielectric(6.0).unwrap();
        let g0 = gamma_static(&s, Permittivity::Finite(Complex::new(6.0, 0.0))).unwrap();
        let g = gamma_trace(&s, Frequency::Imaginary(s.omega_for(1e-5)), &six, 1e-12).unwrap().value.re;
        assert_relative_eq!(g, g0, max_relative = 1e-8);
    }

    #[test]
    fn retardation_correction_closed_form() {
        let s = sys(0.5);
        assert_relative_eq!(
            delta_gamma_ret(&s, 0.1).unwrap() * scale(),
            0.01 * 0.509_982_621_077_125_16 / 2.0,
            max_relative = 1e-13
        );
        assert!(delta_gamma_ret(&s, 0.3).is_err());
        let s = sys(1e-3);
        let v = delta_gamma_ret(&s, 0.1).unwrap() * 8.0 * PI * R.powi(3) / 0.01;
        assert_relative_eq!(v, 2e-9, max_relative = 1e-2);
    }

    #[test]
    fn retardation_is_quadratic() {
        let s = sys(0.5);
        let g0 = gamma_static(&s, Permittivity::PerfectConductor).unwrap();
        let mut dev = vec![];
        for x in [0.05, 0.02, 0.01] {
            let g = gamma_trace(&s, at_x(&s, x), &pc(), 1e-12).unwrap().value.re;
            dev.push((g - g0) / delta_gamma_ret(&s, x).unwrap() - 1.0);
        }
        assert!(dev[0].abs() < 1e-2);
        assert!(dev[2].abs() < dev[1].abs() && dev[1].abs() < dev[0].abs());
        // deviation shrinks as x^2
        assert_relative_eq!(dev[0] / dev[2], 25.0, max_relative = 0.05);
    }

    #[test]
    fn reflectivity_correction() {
        let s = sys(0.5);
        let gold = PermittivityModel::gold();
        let w = s.omega_for(0.05);
        let d = delta_gamma_refl(&s, w, &gold).unwrap();
        let exact = gamma_trace(&s, Frequency::Real(w), &gold, 1e-12).unwrap().value;
        let perfect = gamma_trace(&s, Frequency::Real(w), &pc(), 1e-12).unwrap().value;
        let ratio = (exact - perfect).re / d.re;
        assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
        assert_eq!(delta_gamma_refl(&s, w, &pc()).unwrap(), Complex::new(0.0, 0.0));
        let six = PermittivityModel::dielectric(6.0).unwrap();
        assert!(matches!(delta_gamma_refl(&s, w, &six), Err(Error::Regime(_))));
        let bracket = 4.5 / 0.5625 - 0.75_f64.ln();
        assert_relative_eq!(bracket, 8.287_682_072_451_781, max_relative = 1e-12);
        assert_relative_eq!(scaling_g_refl(0.5), 2.0 * 0.25 * bracket, max_relative = 1e-14);
    }

    #[test]
    fn static_grows_with_phi() {
        let mut prev = 0.0;
        for k in 1..99 {
            let s = sys(k as f64 / 100.0);
            let g = gamma_static(&s, Permittivity::Finite(Complex::new(6.0, 0.0))).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }
}
