//! Complex log-gamma via the Lanczos approximation (g = 7, 9 terms).

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn is_nonpositive_integer<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round()
}

/// Principal branch of `ln Γ(z)`.
///
/// Uses Lanczos for `Re z >= 1/2` and the reflection formula otherwise, with
/// the `2πi` correction that keeps the imaginary part on the principal branch.
pub fn log_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("log_gamma of non-finite {z:?}")));
    }
    if is_nonpositive_integer(z) {
        return Err(Error::Pole(z.re.as_f64()));
    }
    let half = T::lit(0.5);
    if z.re < half {
        let pi = T::PI();
        let one = Complex::new(T::one(), T::zero());
        let shift = (half * z.re + T::lit(0.25)).floor() * (T::lit(2.0) * pi);
        let shift = if z.im < T::zero() { -shift } else { shift };
        let reflected = log_gamma_lanczos(one - z);
        return Ok(Complex::new(pi.ln(), shift) - ln_sin_pi(z) - reflected);
    }
    Ok(log_gamma_lanczos(z))
}

/// `Γ(z)` as `exp(ln Γ(z))`.
pub fn gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    log_gamma(z).map(|l| l.exp())
}

/// `|Γ(z)|`, computed in log space so it never overflows before the caller
/// combines it with other factors.
pub fn ln_abs_gamma<T: Real>(z: Complex<T>) -> Result<T> {
    log_gamma(z).map(|l| l.re)
}

fn log_gamma_lanczos<T: Real>(z: Complex<T>) -> Complex<T> {
    let one = T::one();
    let z = z - one;
    let mut x = Complex::new(T::lit(LANCZOS_COEFFS[0]), T::zero());
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        x = x + Complex::new(T::lit(c), T::zero()) / (z + T::from_count(i));
    }
    let t = z + T::lit(LANCZOS_G + 0.5);
    let half_ln_two_pi = T::lit(0.918_938_533_204_672_7);
    (z + T::lit(0.5)) * t.ln() - t + x.ln() + half_ln_two_pi
}

/// Principal logarithm of `sin(πz)`, stable for large `|Im z|`.
fn ln_sin_pi<T: Real>(z: Complex<T>) -> Complex<T> {
    let pi = T::PI();
    let two = T::lit(2.0);
    // reduce the real part to [-1, 1) so sin/cos keep full precision
    let x = z.re - two * ((z.re + T::one()) / two).floor();
    let (s, c) = (pi * x).sin_cos();
    let u = pi * z.im;
    let ln_cosh = u.abs() + (-(two * u.abs())).exp().ln_1p() - two.ln();
    let th = u.tanh();
    let modulus = ln_cosh + T::lit(0.5) * (s * s + c * c * th * th).ln();
    let arg = (c * th).atan2(s);
    Complex::new(modulus, arg)
}
