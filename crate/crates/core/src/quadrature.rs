//! Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

use crate::error::{Error, Result};
use crate::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

fn kronrod<T: Real, F>(f: &mut F, a: T, b: T) -> Result<(T, T)>
where
    F: FnMut(T) -> Result<T>,
{
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let fc = f(mid)?;
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for (j, &node) in XGK[..7].iter().enumerate() {
        let dx = half * T::lit(node);
        let s = f(mid - dx)? + f(mid + dx)?;
        k += s * T::lit(WGK[j]);
        // odd Kronrod nodes coincide with the Gauss nodes
        if j % 2 == 1 {
            g += s * T::lit(WG[j / 2]);
        }
    }
    Ok((k * half, ((k - g) * half).abs()))
}

/// Integrates `f` over `[a, b]` until the summed error estimate is below
/// `max(rel_tol |I|, abs_tol)`, bisecting the worst interval each step.
pub fn integrate<T: Real, F>(mut f: F, a: T, b: T, rel_tol: T, abs_tol: T, max_intervals: usize) -> Result<Integral<T>>
where
    F: FnMut(T) -> Result<T>,
{
    let mut parts = vec![(a, b, kronrod(&mut f, a, b)?)];
    let mut evaluations = 15;
    loop {
        let (value, error) = parts
            .iter()
            .fold((T::zero(), T::zero()), |(v, e), p| (v + p.2 .0, e + p.2 .1));
        if error <= (rel_tol * value.abs()).max(abs_tol) {
            return Ok(Integral { value, error, evaluations });
        }
        if parts.len() >= max_intervals {
            let scale = value.abs().max(abs_tol);
            return Err(Error::Quadrature {
                estimate: (error / scale).as_f64(),
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _) = parts.swap_remove(worst);
        let m = (lo + hi) / T::lit(2.0);
        parts.push((lo, m, kronrod(&mut f, lo, m)?));
        parts.push((m, hi, kronrod(&mut f, m, hi)?));
        evaluations += 30;
    }
}
