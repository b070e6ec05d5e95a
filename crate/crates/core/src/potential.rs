//! Casimir-Polder potential of one dipole transition outside a sphere.
//!
//! The exact thermal potential splits into a Matsubara sum over imaginary
//! frequencies and a resonant term weighted by the photon occupation,
//!
//! ```text
//! U_nr = -(2 kT |d|^2 w / 3 hbar eps0) sum'_j gamma(i xi_j) / (w^2 + xi_j^2)
//! U_r  = (|d|^2 / 3 eps0) n(w) Re gamma(w)
//! ```
//!
//! Closed forms cover the non-retarded perfect-conductor limit and its
//! leading retardation and reflectivity corrections in the high-temperature
//! regime.

use std::f64::consts::PI;

use crate::constants::{c, eps0, hbar, kb};
use crate::error::{Error, Result};
use crate::greens::{gamma_static, gamma_trace, SphereSystem, TOL_RANGE};
use crate::materials::{re_i_over_sqrt_eps, sqrt_eps, Frequency, PermittivityModel};
use crate::quadrature::integrate;
use crate::{Complex, Real};

/// One dipole transition `|n> -> |k>`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionSpec<T> {
    /// `|d_kn|^2` in C^2 m^2.
    pub d2: T,
    /// Signed `w_kn` in rad/s; negative for downward transitions.
    pub omega: T,
}

impl<T: Real> TransitionSpec<T> {
    pub fn new(d2: T, omega: T) -> Result<Self> {
        if !(d2 >= T::zero() && d2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "squared dipole moment must be non-negative, got {d2}"
            )));
        }
        if !(omega != T::zero() && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "transition frequency must be finite and non-zero, got {omega}"
            )));
        }
        Ok(TransitionSpec { d2, omega })
    }

    /// Same transition with `|d|^2 = 1`; reduced outputs do not depend on it.
    pub fn unit(omega: T) -> Result<Self> {
        Self::new(T::one(), omega)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalState<T> {
    /// Kelvin.
    pub temperature: T,
}

impl<T: Real> ThermalState<T> {
    pub fn new(temperature: T) -> Result<Self> {
        if !(temperature >= T::zero() && temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be non-negative, got {temperature}"
            )));
        }
        Ok(ThermalState { temperature })
    }

    /// `k_B T / (hbar w)`; zero at `T = 0`.
    pub fn occupation_ratio(&self, omega: T) -> T {
        kb::<T>() * self.temperature / (hbar::<T>() * omega)
    }
}

/// Potential and its parts, in joules.
///
/// Exact paths fill `nonresonant + resonant = total` and report the
/// temperature-invariant value in `u0` for reference. Closed-form paths fill
/// `u0 + du_ret + du_refl = total`; the spectroscopic path puts its whole
/// correction (retardation and reflectivity together) in `du_ret`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PotentialBreakdown<T> {
    pub total: T,
    pub nonresonant: T,
    pub resonant: T,
    pub u0: T,
    pub du_ret: T,
    pub du_refl: T,
    pub matsubara_terms: usize,
    /// `total * 24 pi eps0 r^3 / |d|^2`.
    pub reduced: T,
}

impl<T: Real> PotentialBreakdown<T> {
    /// Scales a breakdown computed for `|d|^2 = 1` to the given dipole.
    fn from_unit(unit: Self, d2: T, sys: &SphereSystem<T>) -> Self {
        PotentialBreakdown {
            total: unit.total * d2,
            nonresonant: unit.nonresonant * d2,
            resonant: unit.resonant * d2,
            u0: unit.u0 * d2,
            du_ret: unit.du_ret * d2,
            du_refl: unit.du_refl * d2,
            matsubara_terms: unit.matsubara_terms,
            reduced: unit.total * reduction(sys),
        }
    }
}

/// `24 pi eps0 r^3`.
pub fn reduction<T: Real>(sys: &SphereSystem<T>) -> T {
    T::lit(24.0 * PI) * eps0::<T>() * sys.distance.powi(3)
}

/// Evaluation path for a potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Matsubara sum plus resonant term (zero-temperature integral at `T = 0`).
    Exact,
    /// Zero-temperature integral regardless of the thermal state.
    ZeroTemperature,
    /// Non-retarded perfect-conductor value `U0`.
    Invariant,
    /// `U0` plus retardation and reflectivity corrections.
    ClosedForm,
    /// High-temperature form with the exact trace.
    Spectroscopic,
    /// Dielectric multipole series with its `x^2` correction.
    Dielectric,
    /// Dielectric multipole series without the correction.
    DielectricStatic,
}

/// `xi_j = 2 pi j k_B T / hbar`.
pub fn matsubara_xi<T: Real>(j: usize, state: &ThermalState<T>) -> T {
    T::lit(2.0 * PI) * T::of(j) * kb::<T>() * state.temperature / hbar::<T>()
}

/// Bose-Einstein occupation `1 / (exp(hbar w / k_B T) - 1)`; at `T = 0` it is
/// `0` for `w > 0` and `-1` for `w < 0`.
pub fn bose_einstein<T: Real>(omega: T, state: &ThermalState<T>) -> T {
    if state.temperature == T::zero() {
        return if omega > T::zero() { T::zero() } else { -T::one() };
    }
    let a = hbar::<T>() * omega / (kb::<T>() * state.temperature);
    T::one() / a.exp_m1()
}

fn check_tol<T: Real>(tol: T) -> Result<()> {
    if !(tol >= T::lit(TOL_RANGE.0) && tol <= T::lit(TOL_RANGE.1)) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} outside [{:e}, {:e}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    Ok(())
}

/// Attenuation exponent `2 (1 - phi) xi r / c` of `gamma(i xi)`.
fn decay_exponent<T: Real>(sys: &SphereSystem<T>, xi: T) -> T {
    T::lit(2.0) * (T::one() - sys.phi()) * xi * sys.distance / c::<T>()
}

/// Matsubara terms are dropped once the attenuation exponent exceeds this.
pub const MATSUBARA_CUTOFF: f64 = 40.0;
/// Guard on the number of Matsubara terms.
pub const MATSUBARA_MAX_TERMS: usize = 2_000_000;

/// Non-resonant part and the number of Matsubara terms used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonResonant<T> {
    pub energy: T,
    pub terms: usize,
}

/// Matsubara sum for `T > 0`. The `j = 0` term has weight 1/2 and uses the
/// static trace (the perfect-conductor value for a Drude metal).
pub fn u_nonresonant<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
    tol: T,
) -> Result<NonResonant<T>> {
    check_tol(tol)?;
    if !(state.temperature > T::zero()) {
        return Err(Error::InvalidParameter(
            "Matsubara sum needs T > 0; use u_zero_temperature".into(),
        ));
    }
    let w = tr.omega;
    let w2 = w * w;
    let wrap = |j: usize| move |e: Error| Error::Matsubara { j, source: Box::new(e) };

    let g0 = gamma_static(sys, model.static_limit()).map_err(wrap(0))?;
    let mut sum = g0 / (T::lit(2.0) * w2);
    let mut terms = 1;
    loop {
        if terms > MATSUBARA_MAX_TERMS {
            return Err(Error::Convergence {
                terms,
                partial_re: sum.as_f64(),
                partial_im: 0.0,
                estimate: 1.0,
            });
        }
        let xi = matsubara_xi(terms, state);
        if decay_exponent(sys, xi) > T::lit(MATSUBARA_CUTOFF) {
            break;
        }
        let g = gamma_trace(sys, Frequency::Imaginary(xi), model, tol)
            .map_err(wrap(terms))?
            .value
            .re;
        let term = g / (w2 + xi * xi);
        sum += term;
        terms += 1;
        if term.abs() < tol * sum.abs() {
            break;
        }
    }
    let pre = -T::lit(2.0) * kb::<T>() * state.temperature * w / (T::lit(3.0) * hbar::<T>() * eps0::<T>());
    Ok(NonResonant {
        energy: pre * sum * tr.d2,
        terms,
    })
}

/// `Re gamma` at `|w|`, which is all the resonant terms need.
fn re_gamma<T: Real>(sys: &SphereSystem<T>, omega: T, model: &PermittivityModel<T>, tol: T) -> Result<T> {
    Ok(gamma_trace(sys, Frequency::Real(omega.abs()), model, tol)?.value.re)
}

/// `(|d|^2 / 3 eps0) n(w) Re gamma(w)`.
pub fn u_resonant<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
    tol: T,
) -> Result<T> {
    check_tol(tol)?;
    let n = bose_einstein(tr.omega, state);
    if n == T::zero() {
        return Ok(T::zero());
    }
    Ok(tr.d2 * n * re_gamma(sys, tr.omega, model, tol)? / (T::lit(3.0) * eps0::<T>()))
}

/// Exact thermal potential. At `T = 0` this is [`u_zero_temperature`].
pub fn u_exact<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
    tol: T,
) -> Result<PotentialBreakdown<T>> {
    if state.temperature == T::zero() {
        return u_zero_temperature(tr, sys, model, tol);
    }
    let unit = TransitionSpec { d2: T::one(), ..*tr };
    let nr = u_nonresonant(&unit, sys, model, state, tol)?;
    let r = u_resonant(&unit, sys, model, state, tol)?;
    let b = PotentialBreakdown {
        total: nr.energy + r,
        nonresonant: nr.energy,
        resonant: r,
        u0: invariant_unit(sys),
        matsubara_terms: nr.terms,
        ..Default::default()
    };
    Ok(PotentialBreakdown::from_unit(b, tr.d2, sys))
}

/// Beyond this attenuation exponent the zero-temperature integrand is
/// treated as zero.
const INTEGRAND_CUTOFF: f64 = 80.0;
const QUADRATURE_MAX_INTERVALS: usize = 4000;

/// Zero-temperature potential: the Matsubara sum becomes an integral along
/// the imaginary axis, plus the resonant term for downward transitions.
///
/// The integral uses `xi = |w| u / (1 - u)` on `u in (0, 1)`.
pub fn u_zero_temperature<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    tol: T,
) -> Result<PotentialBreakdown<T>> {
    check_tol(tol)?;
    let w = tr.omega.abs();
    let peak = gamma_static(sys, model.static_limit())?.abs();
    let integrand = |u: T| -> Result<T> {
        let one_minus = T::one() - u;
        let xi = w * u / one_minus;
        if !(xi > T::zero()) || decay_exponent(sys, xi) > T::lit(INTEGRAND_CUTOFF) {
            return Ok(T::zero());
        }
        let g = gamma_trace(sys, Frequency::Imaginary(xi), model, tol)?.value.re;
        Ok(g / (one_minus * one_minus + u * u))
    };
    let integral = integrate(
        integrand,
        T::zero(),
        T::one(),
        tol,
        T::lit(1e-16) * peak,
        QUADRATURE_MAX_INTERVALS,
    )?;
    let three_eps0 = T::lit(3.0) * eps0::<T>();
    let sign = tr.omega.signum();
    let nonresonant = -sign * integral.value / (T::lit(PI) * three_eps0);
    let resonant = if tr.omega < T::zero() {
        -re_gamma(sys, w, model, tol)? / three_eps0
    } else {
        T::zero()
    };
    let b = PotentialBreakdown {
        total: nonresonant + resonant,
        nonresonant,
        resonant,
        u0: invariant_unit(sys),
        ..Default::default()
    };
    Ok(PotentialBreakdown::from_unit(b, tr.d2, sys))
}

/// `f(phi) = phi^3 (6 - 3 phi^2 + phi^4) / (1 - phi^2)^3`.
pub fn scaling_f<T: Real>(phi: T) -> T {
    let p2 = phi * phi;
    let one = T::one();
    phi * p2 * (T::lit(6.0) - T::lit(3.0) * p2 + p2 * p2) / (one - p2).powi(3)
}

/// Below this `phi` the retardation scaling function is summed as a series;
/// the closed form cancels to `2 phi^3` from terms of order `phi`.
const G_RET_SERIES_BELOW: f64 = 0.05;

/// `g_ret(phi) = 3 (1 + 3 phi^4) artanh(phi) - phi (3 - phi^2) + 2 phi^3 ln(1 - phi^2)`.
pub fn scaling_g_ret<T: Real>(phi: T) -> T {
    if phi < T::lit(G_RET_SERIES_BELOW) {
        return T::lit(2.0) * retardation_series(phi);
    }
    let p2 = phi * phi;
    let artanh = T::lit(0.5) * (phi.ln_1p() - (-phi).ln_1p());
    T::lit(3.0) * (T::one() + T::lit(3.0) * p2 * p2) * artanh - phi * (T::lit(3.0) - p2)
        + T::lit(2.0) * phi * p2 * (-p2).ln_1p()
}

/// `sum_l { l phi^(2l+1) - (2l+1)[(l+3)/(2l+3) + (l+1)(l-2)/((2l-1) l)] phi^(2l+3)/2 }`,
/// which equals `g_ret / 2`.
pub fn retardation_series<T: Real>(phi: T) -> T {
    let p2 = phi * phi;
    let mut power = phi * p2;
    let mut sum = T::zero();
    for l in 1..100_000usize {
        let lf = T::of(l);
        let bracket = (lf + T::lit(3.0)) / (T::lit(2.0) * lf + T::lit(3.0))
            + (lf + T::one()) * (lf - T::lit(2.0)) / ((T::lit(2.0) * lf - T::one()) * lf);
        let term = lf * power - T::of(2 * l + 1) * bracket * power * p2 / T::lit(2.0);
        sum += term;
        if term.abs() <= T::epsilon() * T::lit(0.01) * sum.abs() {
            break;
        }
        power *= p2;
    }
    sum
}

/// `g_refl(phi) = 2 phi^2 [(3 + 7 phi^2 - 4 phi^4)/(1 - phi^2)^2 - ln(1 - phi^2)]`.
pub fn scaling_g_refl<T: Real>(phi: T) -> T {
    let p2 = phi * phi;
    let one = T::one();
    let bracket = (T::lit(3.0) + T::lit(7.0) * p2 - T::lit(4.0) * p2 * p2) / ((one - p2) * (one - p2))
        - (-p2).ln_1p();
    T::lit(2.0) * p2 * bracket
}

fn invariant_unit<T: Real>(sys: &SphereSystem<T>) -> T {
    -scaling_f(sys.phi()) / reduction(sys)
}

/// Temperature-invariant non-retarded perfect-conductor potential
/// `U0 = -|d|^2 f(phi) / (24 pi eps0 r^3)`.
pub fn u_invariant<T: Real>(tr: &TransitionSpec<T>, sys: &SphereSystem<T>) -> PotentialBreakdown<T> {
    let u0 = invariant_unit(sys);
    let b = PotentialBreakdown {
        total: u0,
        u0,
        ..Default::default()
    };
    PotentialBreakdown::from_unit(b, tr.d2, sys)
}

/// Largest `r |w| / c` accepted by the closed forms.
pub const CLOSED_FORM_MAX_X: f64 = 0.3;

/// `U0 + dU_ret + dU_refl` for a perfect or Drude conductor.
///
/// `x` is taken from `|w|`; the sign of the transition enters only through
/// `k_B T / (hbar w) - 1/2`.
pub fn u_approx_metal<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
) -> Result<PotentialBreakdown<T>> {
    let w = tr.omega.abs();
    let x = sys.retardation(w);
    if !(x < T::lit(CLOSED_FORM_MAX_X)) {
        return Err(Error::Regime(format!(
            "closed form needs x < {CLOSED_FORM_MAX_X}, got {x}"
        )));
    }
    let phi = sys.phi();
    let refl_factor = match model {
        PermittivityModel::PerfectConductor => T::zero(),
        PermittivityModel::Drude { .. } => {
            let root = sqrt_eps(model, Frequency::Real(w))?.finite().expect("finite model");
            let metallic = root.im * phi * x;
            if !(metallic > T::lit(crate::mie::METALLIC_MIN)) {
                return Err(Error::Regime(format!(
                    "Im(sqrt eps) phi x = {metallic} is not > {}; the reflectivity expansion does not apply",
                    crate::mie::METALLIC_MIN
                )));
            }
            re_i_over_sqrt_eps(model, w)?
        }
        PermittivityModel::ConstantDielectric { .. } => {
            return Err(Error::Regime(
                "metal closed form does not apply to a dielectric sphere".into(),
            ));
        }
    };
    let thermal = state.occupation_ratio(tr.omega) - T::lit(0.5);
    let red = reduction(sys);
    let b = PotentialBreakdown {
        u0: invariant_unit(sys),
        du_ret: x * x * thermal * scaling_g_ret(phi) / red,
        du_refl: x * refl_factor * thermal * scaling_g_refl(phi) / red,
        ..Default::default()
    };
    let b = PotentialBreakdown {
        total: b.u0 + b.du_ret + b.du_refl,
        ..b
    };
    Ok(PotentialBreakdown::from_unit(b, tr.d2, sys))
}

/// Largest `|sqrt eps| x` accepted by the dielectric series.
pub const DIELECTRIC_MAX_X: f64 = 0.3;
const DIELECTRIC_MAX_TERMS: usize = 200_000;

/// Multipole series for a dielectric sphere with frequency-independent
/// `eps`, optionally including its leading `x^2` correction:
///
/// ```text
/// U = -|d|^2 (eps-1)/(24 pi eps0 r^3) sum_l l(l+1)(2l+1) phi^(2l+1)/(eps l + l + 1)
///     * {1 - 2 x^2 (kT/hbar w - 1/2) [1/(2l+1)
///        - phi^2 (2l+1)(eps(l-2) + l + 1)/((2l-1)(2l+3)(eps l + l + 1))]}
/// ```
pub fn u_approx_dielectric<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    eps: T,
    state: &ThermalState<T>,
    with_correction: bool,
) -> Result<T> {
    if !(eps >= T::one() && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dielectric constant must be >= 1, got {eps}"
        )));
    }
    let x = sys.retardation(tr.omega.abs());
    if !(eps.sqrt() * x < T::lit(DIELECTRIC_MAX_X)) {
        return Err(Error::Regime(format!(
            "dielectric series needs |sqrt eps| x < {DIELECTRIC_MAX_X}, got {}",
            eps.sqrt() * x
        )));
    }
    let phi = sys.phi();
    let p2 = phi * phi;
    let one = T::one();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let amp = if with_correction {
        -two * x * x * (state.occupation_ratio(tr.omega) - T::lit(0.5))
    } else {
        T::zero()
    };
    let mut power = phi;
    let mut sum = T::zero();
    let mut converged = false;
    for l in 1..=DIELECTRIC_MAX_TERMS {
        power *= p2;
        let lf = T::of(l);
        let denom = eps * lf + lf + one;
        let two_l1 = two * lf + one;
        let bracket = one / two_l1
            - p2 * two_l1 * (eps * (lf - two) + lf + one) / ((two * lf - one) * (two * lf + three) * denom);
        let term = lf * (lf + one) * two_l1 * power / denom * (one + amp * bracket);
        sum += term;
        if term.abs() <= T::epsilon() * T::lit(0.01) * sum.abs() {
            converged = true;
            break;
        }
    }
    let value = -tr.d2 * (eps - one) * sum / reduction(sys);
    if !converged {
        return Err(Error::Convergence {
            terms: DIELECTRIC_MAX_TERMS,
            partial_re: value.as_f64(),
            partial_im: 0.0,
            estimate: 1.0,
        });
    }
    Ok(value)
}

/// Ratio `k_B T / (hbar |w|)` at or below which the spectroscopic form is
/// flagged.
pub const SPECTROSCOPIC_MIN_RATIO: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectroscopic<T> {
    pub breakdown: PotentialBreakdown<T>,
    /// Set when `k_B T / (hbar |w|)` is not above the regime threshold.
    pub warning: Option<String>,
}

/// High-temperature form with the exact trace:
/// `-|d|^2 gamma_0 / 6 eps0 + (|d|^2 / 3 eps0)(kT/hbar w - 1/2) Re[gamma(w) - gamma_0]`.
pub fn u_spectroscopic<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
    tol: T,
) -> Result<Spectroscopic<T>> {
    check_tol(tol)?;
    let ratio = state.occupation_ratio(tr.omega.abs());
    let warning = (!(ratio > T::lit(SPECTROSCOPIC_MIN_RATIO))).then(|| {
        format!(
            "k_B T / (hbar |w|) = {ratio} is not > {SPECTROSCOPIC_MIN_RATIO}; \
             the high-temperature form is unreliable"
        )
    });
    let g0 = gamma_static(sys, model.static_limit())?;
    let g = re_gamma(sys, tr.omega, model, tol)?;
    let three_eps0 = T::lit(3.0) * eps0::<T>();
    let thermal = state.occupation_ratio(tr.omega) - T::lit(0.5);
    let u0 = -g0 / (T::lit(2.0) * three_eps0);
    let du = thermal * (g - g0) / three_eps0;
    let b = PotentialBreakdown {
        total: u0 + du,
        u0,
        du_ret: du,
        ..Default::default()
    };
    Ok(Spectroscopic {
        breakdown: PotentialBreakdown::from_unit(b, tr.d2, sys),
        warning,
    })
}

/// Potential of one transition by the chosen method.
pub fn evaluate<T: Real>(
    method: Method,
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
    tol: T,
) -> Result<PotentialBreakdown<T>> {
    let dielectric = |with: bool| -> Result<PotentialBreakdown<T>> {
        let PermittivityModel::ConstantDielectric { eps } = *model else {
            return Err(Error::InvalidParameter(
                "dielectric series needs a constant-permittivity model".into(),
            ));
        };
        let total = u_approx_dielectric(tr, sys, eps, state, with)?;
        let unit = if tr.d2 == T::zero() {
            u_approx_dielectric(&TransitionSpec { d2: T::one(), ..*tr }, sys, eps, state, with)?
        } else {
            total / tr.d2
        };
        Ok(PotentialBreakdown {
            total,
            u0: total,
            reduced: unit * reduction(sys),
            ..Default::default()
        })
    };
    match method {
        Method::Exact => u_exact(tr, sys, model, state, tol),
        Method::ZeroTemperature => u_zero_temperature(tr, sys, model, tol),
        Method::Invariant => Ok(u_invariant(tr, sys)),
        Method::ClosedForm => u_approx_metal(tr, sys, model, state),
        Method::Spectroscopic => Ok(u_spectroscopic(tr, sys, model, state, tol)?.breakdown),
        Method::Dielectric => dielectric(true),
        Method::DielectricStatic => dielectric(false),
    }
}

/// `sum_k U_nk` over the transitions out of one state.
pub fn aggregate_transitions<T: Real>(
    transitions: &[TransitionSpec<T>],
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
    method: Method,
    tol: T,
) -> Result<T> {
    if transitions.is_empty() {
        return Err(Error::InvalidParameter("no transitions given".into()));
    }
    transitions.iter().enumerate().try_fold(T::zero(), |acc, (index, tr)| {
        let u = evaluate(method, tr, sys, model, state, tol).map_err(|e| Error::Transition {
            index,
            source: Box::new(e),
        })?;
        Ok(acc + u.total)
    })
}

/// `sum_n p_n U_n` for a particle in an incoherent mixture of states, each
/// described by its own transition list.
pub fn superposition<T: Real>(
    states: &[(T, Vec<TransitionSpec<T>>)],
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    state: &ThermalState<T>,
    method: Method,
    tol: T,
) -> Result<T> {
    if states.is_empty() {
        return Err(Error::InvalidParameter("no states given".into()));
    }
    let mut total_weight = T::zero();
    for (p, _) in states {
        if !(*p >= T::zero() && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight {p} is negative")));
        }
        total_weight += *p;
    }
    if (total_weight - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::of(8 * states.len())) {
        return Err(Error::InvalidParameter(format!(
            "weights must sum to 1, got {total_weight}"
        )));
    }
    states.iter().try_fold(T::zero(), |acc, (p, trs)| {
        Ok(acc + *p * aggregate_transitions(trs, sys, model, state, method, tol)?)
    })
}

/// Complex trace at the transition frequency, for callers that want both
/// parts (`gamma(-w) = conj gamma(w)`).
pub fn gamma_at_transition<T: Real>(
    tr: &TransitionSpec<T>,
    sys: &SphereSystem<T>,
    model: &PermittivityModel<T>,
    tol: T,
) -> Result<Complex<T>> {
    Ok(gamma_trace(sys, Frequency::Real(tr.omega), model, tol)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sys(phi: f64) -> SphereSystem<f64> {
        SphereSystem::new(phi * 20e-6, 20e-6).unwrap()
    }

    fn at_x(s: &SphereSystem<f64>, x: f64) -> TransitionSpec<f64> {
        TransitionSpec::unit(s.omega_for(x)).unwrap()
    }

    fn temp(t: f64) -> ThermalState<f64> {
        ThermalState::new(t).unwrap()
    }

    #[test]
    fn matsubara_frequencies() {
        assert_eq!(matsubara_xi(0, &temp(300.0)), 0.0);
        assert_relative_eq!(matsubara_xi(1, &temp(300.0)), 246_779_025_515_306.05, max_relative = 1e-13);
        assert_relative_eq!(matsubara_xi(10, &temp(300.0)), 10.0 * matsubara_xi(1, &temp(300.0)), max_relative = 1e-15);
    }

    #[test]
    fn occupation_numbers() {
        let t = temp(300.0);
        let w = 2f64.ln() * kb::<f64>() * 300.0 / hbar::<f64>();
        assert_relative_eq!(bose_einstein(w, &t), 1.0, max_relative = 1e-13);
        assert_eq!(bose_einstein(1e12, &temp(0.0)), 0.0);
        assert_eq!(bose_einstein(-1e12, &temp(0.0)), -1.0);
        let w = 0.01 * kb::<f64>() * 300.0 / hbar::<f64>();
        assert_relative_eq!(bose_einstein(w, &t), 100.0 - 0.5, max_relative = 1e-4);
    }

    #[test]
    fn scaling_functions_reference() {
        let table = [
            (0.01, 6.001_500_280_045_006_6e-6, 2.000_760_024_287_181_1e-6, 0.000_600_280_039_005_067_29),
            (0.1, 0.006_152_845_669_221_549_2, 0.002_076_244_334_477_707, 0.062_839_512_991_939_94),
            (0.5, 1.574_074_074_074_074_1, 0.509_982_621_077_125_16, 4.143_841_036_225_890_5),
            (0.9, 449.165_607_231_374_84, 8.717_621_233_243_650_8, 273.988_777_906_851_63),
            (0.99, 494_999.072_812_484_18, 21.220_138_612_709_638, 29_797.589_904_581_453),
        ];
        for (phi, f, gr, gf) in table {
            assert_relative_eq!(scaling_f(phi), f, max_relative = 1e-12);
            assert_relative_eq!(scaling_g_ret(phi), gr, max_relative = 1e-11);
            assert_relative_eq!(scaling_g_refl(phi), gf, max_relative = 1e-12);
        }
    }

    #[test]
    fn scaling_asymptotes() {
        assert_relative_eq!(scaling_f(1e-3) / 6e-9, 1.0, max_relative = 1e-5);
        let p: f64 = 0.9999;
        assert_relative_eq!(scaling_f(p) * 2.0 * (1.0 - p).powi(3), 1.0, max_relative = 1e-3);
        assert_relative_eq!(scaling_g_ret(1e-3) / 2e-9, 1.0, max_relative = 1e-5);
        assert_relative_eq!(scaling_g_refl(1e-3) / 6e-6, 1.0, max_relative = 1e-5);
        assert_relative_eq!(scaling_g_refl(p) * (1.0 - p).powi(2), 3.0, max_relative = 1e-3);
        // series and closed form agree on either side of the switch
        let phi = G_RET_SERIES_BELOW;
        let closed = {
            let p2 = phi * phi;
            3.0 * (1.0 + 3.0 * p2 * p2) * phi.atanh() - phi * (3.0 - p2) + 2.0 * phi * p2 * (-p2).ln_1p()
        };
        assert_relative_eq!(2.0 * retardation_series(phi), closed, max_relative = 1e-9);
    }

    #[test]
    fn invariant_potential() {
        let s = sys(0.5);
        assert_relative_eq!(u_invariant(&at_x(&s, 0.1), &s).reduced, -1.574_074_074_074_074_1, max_relative = 1e-14);
        let s = SphereSystem::new(1e-6, 1.0001e-6).unwrap();
        let u = u_invariant(&at_x(&s, 0.1), &s).total;
        let half_space = -1.0 / (48.0 * PI * eps0::<f64>() * (1e-10f64).powi(3));
        assert_relative_eq!(u, half_space, max_relative = 1e-3);
        let s = SphereSystem::new(1e-9, 1e-5).unwrap();
        let u = u_invariant(&at_x(&s, 0.1), &s).total;
        assert_relative_eq!(u, -(1e-9f64).powi(3) / (4.0 * PI * eps0::<f64>() * (1e-5f64).powi(6)), max_relative = 1e-6);
    }

    #[test]
    fn closed_form_metal() {
        let s = sys(0.5);
        let tr = at_x(&s, 0.1);
        let pc = u_approx_metal(&tr, &s, &PermittivityModel::PerfectConductor, &temp(300.0)).unwrap();
        assert_eq!(pc.du_refl, 0.0);
        assert!(pc.du_ret > 0.0);
        // T where kT/hbar w = 1/2
        let t_half = 0.5 * hbar::<f64>() * tr.omega / kb::<f64>();
        let b = u_approx_metal(&tr, &s, &PermittivityModel::gold(), &temp(t_half)).unwrap();
        assert_relative_eq!(b.total, b.u0, max_relative = 1e-13);
        let gold = PermittivityModel::gold();
        let up = u_approx_metal(&tr, &s, &gold, &temp(300.0)).unwrap();
        let down = u_approx_metal(&TransitionSpec::unit(-tr.omega).unwrap(), &s, &gold, &temp(300.0)).unwrap();
        assert!(up.du_ret * down.du_ret < 0.0 && up.du_refl * down.du_refl < 0.0);
        assert!(u_approx_metal(&at_x(&s, 0.3), &s, &gold, &temp(300.0)).is_err());
        let six = PermittivityModel::dielectric(6.0).unwrap();
        assert!(matches!(u_approx_metal(&tr, &s, &six, &temp(300.0)), Err(Error::Regime(_))));
    }

    #[test]
    fn dielectric_static_limit_is_static_trace() {
        let s = sys(0.5);
        let tr = TransitionSpec::new(2.0, s.omega_for(1e-9)).unwrap();
        let u = u_approx_dielectric(&tr, &s, 6.0, &temp(0.0), true).unwrap();
        let g0 = gamma_static(&s, crate::materials::Permittivity::Finite(Complex::new(6.0, 0.0))).unwrap();
        assert_relative_eq!(u, -2.0 * g0 / (6.0 * eps0::<f64>()), max_relative = 1e-9);
        let plain = u_approx_dielectric(&tr, &s, 6.0, &temp(300.0), false).unwrap();
        assert_relative_eq!(plain, -2.0 * g0 / (6.0 * eps0::<f64>()), max_relative = 1e-13);
        assert!(u_approx_dielectric(&at_x(&s, 0.2), &s, 6.0, &temp(300.0), true).is_err());
    }

    #[test]
    fn dielectric_correction_follows_metal_thermal_factor() {
        let s = sys(0.5);
        let tr = at_x(&s, 0.01);
        let without = u_approx_dielectric(&tr, &s, 6.0, &temp(0.0), false).unwrap();
        let with = u_approx_dielectric(&tr, &s, 6.0, &temp(0.0), true).unwrap();
        let down = TransitionSpec::unit(-tr.omega).unwrap();
        let with_down = u_approx_dielectric(&down, &s, 6.0, &temp(0.0), true).unwrap();
        // at T = 0 both directions carry the factor -1/2, which deepens the well
        assert!(with.abs() > without.abs());
        assert_eq!(with, with_down);
        // upward at kT = hbar w/2: 1/2 - 1/2 = 0
        let t_half = temp(0.5 * hbar::<f64>() * tr.omega / kb::<f64>());
        let cancel = u_approx_dielectric(&tr, &s, 6.0, &t_half, true).unwrap();
        assert_relative_eq!(cancel, without, max_relative = 1e-15);
    }

    #[test]
    fn exact_nonretarded_pc_is_invariant() {
        let s = sys(0.5);
        let tr = at_x(&s, 1e-4);
        for t in [0.0, 4.0, 300.0] {
            let u = u_exact(&tr, &s, &PermittivityModel::PerfectConductor, &temp(t), 1e-12).unwrap();
            assert_relative_eq!(u.reduced, -1.574_074_074_074_074_1, max_relative = 1e-3);
            assert_relative_eq!(u.total, u.nonresonant + u.resonant, max_relative = 1e-12);
        }
    }

    #[test]
    fn vacuum_gives_zero() {
        let s = sys(0.5);
        let vac = PermittivityModel::dielectric(1.0).unwrap();
        let u = u_exact(&at_x(&s, 0.1), &s, &vac, &temp(300.0), 1e-10).unwrap();
        assert_eq!(u.total, 0.0);
    }

    #[test]
    fn high_temperature_limit_of_matsubara_sum() {
        // only j = 0 survives the cutoff when xi_1 r/c > 40
        let s = SphereSystem::new(1e-3, 2e-3).unwrap();
        let tr = at_x(&s, 0.1);
        let t = temp(300.0);
        let nr = u_nonresonant(&tr, &s, &PermittivityModel::PerfectConductor, &t, 1e-12).unwrap();
        assert_eq!(nr.terms, 1);
        let g0 = gamma_static(&s, crate::materials::Permittivity::PerfectConductor).unwrap();
        let expect = -t.occupation_ratio(tr.omega) * g0 / (3.0 * eps0::<f64>());
        assert_relative_eq!(nr.energy, expect, max_relative = 1e-14);
    }

    #[test]
    fn resonant_term_at_zero_temperature() {
        let s = sys(0.5);
        let gold = PermittivityModel::gold();
        let up = at_x(&s, 0.1);
        assert_eq!(u_resonant(&up, &s, &gold, &temp(0.0), 1e-12).unwrap(), 0.0);
        let down = TransitionSpec::unit(-up.omega).unwrap();
        let r = u_resonant(&down, &s, &gold, &temp(0.0), 1e-12).unwrap();
        let g = gamma_trace(&s, Frequency::Real(up.omega), &gold, 1e-12).unwrap().value.re;
        assert_relative_eq!(r, -g / (3.0 * eps0::<f64>()), max_relative = 1e-14);
    }

    #[test]
    fn zero_temperature_downward_transition() {
        let s = sys(0.5);
        let gold = PermittivityModel::gold();
        let up = u_zero_temperature(&at_x(&s, 0.1), &s, &gold, 1e-10).unwrap();
        let down = u_zero_temperature(&TransitionSpec::unit(-s.omega_for(0.1)).unwrap(), &s, &gold, 1e-10).unwrap();
        assert_relative_eq!(down.nonresonant, -up.nonresonant, max_relative = 1e-14);
        assert!(down.resonant < 0.0 && up.resonant == 0.0);
    }

    #[test]
    fn transition_sums() {
        let s = sys(0.5);
        let gold = PermittivityModel::gold();
        let t = temp(300.0);
        let tr = at_x(&s, 0.05);
        let one = aggregate_transitions(&[tr], &s, &gold, &t, Method::ClosedForm, 1e-10).unwrap();
        let direct = u_approx_metal(&tr, &s, &gold, &t).unwrap().total;
        assert_eq!(one, direct);
        let mix = superposition(&[(0.5, vec![tr]), (0.5, vec![tr])], &s, &gold, &t, Method::ClosedForm, 1e-10).unwrap();
        assert_relative_eq!(mix, direct, max_relative = 1e-15);
        let down = TransitionSpec::unit(-tr.omega).unwrap();
        let pair = aggregate_transitions(&[tr, down], &s, &gold, &t, Method::ClosedForm, 1e-10).unwrap();
        let u0 = u_invariant(&tr, &s).total;
        // corrections cancel apart from the -1/2 parts
        let half = u_approx_metal(&tr, &s, &gold, &temp(0.0)).unwrap();
        assert_relative_eq!(pair, 2.0 * half.total, max_relative = 1e-12);
        assert!((pair - 2.0 * u0).abs() < 1e-2 * u0.abs());
        let bad = aggregate_transitions(&[tr, at_x(&s, 0.5)], &s, &gold, &t, Method::ClosedForm, 1e-10);
        assert!(matches!(bad, Err(Error::Transition { index: 1, .. })));
        assert!(superposition(&[(0.6, vec![tr]), (0.6, vec![tr])], &s, &gold, &t, Method::ClosedForm, 1e-10).is_err());
    }

    #[test]
    fn spectroscopic_warning() {
        let s = sys(0.5);
        let gold = PermittivityModel::gold();
        let tr = at_x(&s, 0.1);
        assert!(u_spectroscopic(&tr, &s, &gold, &temp(300.0), 1e-12).unwrap().warning.is_none());
        assert!(u_spectroscopic(&tr, &s, &gold, &temp(1.0), 1e-12).unwrap().warning.is_some());
    }

    proptest! {
        #[test]
        fn occupation_identity(w in 1e10f64..1e15, t in 0.1f64..2000.0) {
            let st = temp(t);
            let s = bose_einstein(w, &st) + bose_einstein(-w, &st);
            prop_assert!((s + 1.0).abs() < 1e-9 * (1.0 + bose_einstein(w, &st).abs()));
        }

        #[test]
        fn closed_form_ratio_identities(phi in 0.05f64..0.95, x in 0.001f64..0.25, t in 1.0f64..1000.0) {
            let s = sys(phi);
            let tr = at_x(&s, x);
            let st = temp(t);
            let b = u_approx_metal(&tr, &s, &PermittivityModel::PerfectConductor, &st).unwrap();
            let thermal = st.occupation_ratio(tr.omega) - 0.5;
            let want = -thermal * x * x * scaling_g_ret(phi) / scaling_f(phi);
            prop_assert!((b.du_ret / b.u0 - want).abs() <= 1e-12 * want.abs().max(1e-300));
            prop_assert!((b.total - (b.u0 + b.du_ret + b.du_refl)).abs() <= 1e-12 * b.total.abs());
        }

        #[test]
        fn reduced_closed_form_is_distance_independent(phi in 0.05f64..0.95, x in 0.001f64..0.25, ratio in 0.1f64..100.0, r in 1e-7f64..1e-3) {
            let s1 = sys(phi);
            let s2 = SphereSystem::new(phi * r, r).unwrap();
            let w1 = s1.omega_for(x);
            let w2 = s2.omega_for(x);
            let t1 = temp(ratio * hbar::<f64>() * w1 / kb::<f64>());
            let t2 = temp(ratio * hbar::<f64>() * w2 / kb::<f64>());
            let pc = PermittivityModel::PerfectConductor;
            let a = u_approx_metal(&TransitionSpec::unit(w1).unwrap(), &s1, &pc, &t1).unwrap().reduced;
            let b = u_approx_metal(&TransitionSpec::unit(w2).unwrap(), &s2, &pc, &t2).unwrap().reduced;
            prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        }
    }
}
