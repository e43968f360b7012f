//! Kummer's confluent hypergeometric functions `M(a, b, z)` and `U(a, b, z)`.

use num_complex::Complex;

use super::gamma::log_gamma;
use super::quadrature::{Bound, Quadrature};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hard cap on power-series terms.
pub const MAX_SERIES_TERMS: usize = 10_000;

fn series_tolerance<T: Real>() -> T {
    T::lit(1e-16).max(T::epsilon())
}

fn is_nonpositive_integer<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round()
}

fn is_integer<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re == z.re.round()
}

/// Confluent hypergeometric function of the first kind, `M(a, b, z)`.
///
/// Summed as a power series; the sum stops once three consecutive terms fall
/// below `1e-16` of the running sum. For `Re z < 0` Kummer's transformation
/// `M(a, b, z) = e^z M(b - a, b, -z)` is applied first.
pub fn kummer_m<T: Real>(a: Complex<T>, b: Complex<T>, z: Complex<T>) -> Result<Complex<T>> {
    if is_nonpositive_integer(b) {
        return Err(Error::DegenerateParameter(format!(
            "M(a, b, z) undefined for b = {b}"
        )));
    }
    if z.re < T::zero() {
        return Ok(z.exp() * kummer_series(b - a, b, -z)?);
    }
    kummer_series(a, b, z)
}

fn kummer_series<T: Real>(a: Complex<T>, b: Complex<T>, z: Complex<T>) -> Result<Complex<T>> {
    let tol = series_tolerance::<T>();
    let one = Complex::new(T::one(), T::zero());
    let mut term = one;
    let mut sum = one;
    let mut small_run = 0;
    for n in 0..MAX_SERIES_TERMS {
        let nf = T::from_count(n);
        term = term * (a + nf) / (b + nf) * z / (nf + T::one());
        sum = sum + term;
        if term.norm() <= tol * sum.norm() {
            small_run += 1;
            if small_run == 3 {
                return Ok(sum);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::Convergence {
        terms: MAX_SERIES_TERMS,
    })
}

/// `Γ(x) / Γ(y)`, zero when `y` sits on a pole of Γ.
fn gamma_ratio<T: Real>(x: Complex<T>, y: Complex<T>) -> Result<Complex<T>> {
    if is_nonpositive_integer(y) {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    Ok((log_gamma(x)? - log_gamma(y)?).exp())
}

/// Largest `z` at which the connection formula is trusted: the two Kummer
/// series grow like `e^z` while `U` does not, so about `z / ln 10` digits
/// cancel.
const CONNECTION_Z_MAX: f64 = 12.0;

/// Confluent hypergeometric function of the second kind, `U(a, b, z)`, for
/// real `z > 0`.
///
/// Routing, first match wins:
/// - the asymptotic series, when its smallest term is below `1e-14` of the sum;
/// - the connection formula
///   `U = Γ(1-b)/Γ(a-b+1) M(a, b, z) + Γ(b-1)/Γ(a) z^(1-b) M(a-b+1, 2-b, z)`
///   for `z <= 12` and non-integer `b - 1`;
/// - the Laplace integral representation for `Re a > 0`;
/// - for `-1 < Re a <= 0`, the contiguous relation
///   `U(a) = (z + 2a + 2 - b) U(a+1) - (a+1)(a-b+2) U(a+2)` seeded by the
///   integral representation;
/// - the connection formula at any `z` for non-integer `b - 1`.
pub fn tricomi_u<T: Real>(a: Complex<T>, b: Complex<T>, z: T) -> Result<Complex<T>> {
    tricomi_u_scaled(a, b, z).map(|(v, _)| v)
}

/// `U(a, b, z)` together with the sum of magnitudes of the pieces combined to
/// form it; roundoff in the value is a small multiple of `eps` times this
/// scale.
pub(crate) fn tricomi_u_scaled<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    z: T,
) -> Result<(Complex<T>, T)> {
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::Domain(format!("U(a, b, z) requires real z > 0, got {z}")));
    }
    let (asymptotic, omitted) = tricomi_asymptotic(a, b, z);
    if omitted <= T::lit(1e-14).max(T::lit(4.0) * T::epsilon()) {
        return Ok((asymptotic, asymptotic.norm()));
    }
    let one = Complex::new(T::one(), T::zero());
    let integer_b = is_integer(b - one);
    if !integer_b && z <= T::lit(CONNECTION_Z_MAX) {
        return tricomi_connection(a, b, z);
    }
    if a.re > T::zero() {
        let v = tricomi_integral(a, b, z)?;
        return Ok((v, v.norm()));
    }
    if a.re > -T::one() {
        let u1 = tricomi_integral(a + one, b, z)?;
        let u2 = tricomi_integral(a + one + one, b, z)?;
        let first = (Complex::new(z, T::zero()) + a * T::lit(2.0) + T::lit(2.0) - b) * u1;
        let second = (a + one) * (a - b + T::lit(2.0)) * u2;
        return Ok((first - second, first.norm() + second.norm()));
    }
    if !integer_b {
        return tricomi_connection(a, b, z);
    }
    Err(Error::DegenerateParameter(format!(
        "U({a}, {b}, {z}) needs non-integer b - 1 or Re a > -1"
    )))
}

fn tricomi_connection<T: Real>(a: Complex<T>, b: Complex<T>, z: T) -> Result<(Complex<T>, T)> {
    let one = Complex::new(T::one(), T::zero());
    let zc = Complex::new(z, T::zero());
    let first = gamma_ratio(one - b, a - b + one)? * kummer_m(a, b, zc)?;
    let second = gamma_ratio(b - one, a)?
        * ((one - b) * zc.ln()).exp()
        * kummer_m(a - b + one, one + one - b, zc)?;
    let finite = |v: Complex<T>| v.re.is_finite() && v.im.is_finite();
    if !finite(first) || !finite(second) {
        return Err(Error::DegenerateParameter(format!(
            "non-finite connection-formula term for U({a}, {b}, {z})"
        )));
    }
    Ok((first + second, first.norm() + second.norm()))
}

/// Asymptotic series truncated at its smallest term; returns the sum and the
/// size of the first omitted term relative to the sum.
fn tricomi_asymptotic<T: Real>(a: Complex<T>, b: Complex<T>, z: T) -> (Complex<T>, T) {
    let tol = series_tolerance::<T>();
    let one = Complex::new(T::one(), T::zero());
    let c = a - b + one;
    let mut term = one;
    let mut sum = one;
    let mut last = T::infinity();
    for n in 0..400 {
        let nf = T::from_count(n);
        let next = -term * (a + nf) * (c + nf) / ((nf + T::one()) * z);
        let size = next.norm();
        if size > last || size <= tol * sum.norm() {
            break;
        }
        term = next;
        last = size;
        sum = sum + term;
    }
    let za = (-a * Complex::new(z.ln(), T::zero())).exp();
    (za * sum, last / sum.norm())
}

fn tricomi_integral<T: Real>(a: Complex<T>, b: Complex<T>, z: T) -> Result<Complex<T>> {
    // t = e^v: U = 1/Γ(a) ∫ exp(-z e^v + a v) (1 + e^v)^(b-a-1) dv
    let one = Complex::new(T::one(), T::zero());
    let p = b - a - one;
    let lower = -(T::lit(40.0) / a.re);
    let upper = (T::lit(60.0) / z).ln().max(T::one());
    let integrand = |v: T| {
        let ev = v.exp();
        let log_val = a * v - Complex::new(z * ev, T::zero()) + p * ev.ln_1p();
        log_val.exp()
    };
    // the oscillating factor v^{-i Im a} can cancel most of the magnitude, so
    // the absolute target is tied to ∫|f| rather than to the result
    let magnitude = Quadrature::new()
        .rel_tol(T::lit(1e-3))
        .abs_tol(T::zero())
        .integrate(|v: T| integrand(v).norm(), lower, Bound::Finite(upper))?;
    let q = Quadrature::new()
        .rel_tol(T::lit(1e-13))
        .abs_tol(T::lit(1e-15).max(T::epsilon()) * magnitude.value)
        .max_subdivisions(5000);
    let integral = q.integrate(integrand, lower, Bound::Finite(upper))?;
    Ok(integral.value / gamma(a)?)
}

fn gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    log_gamma(z).map(|l| l.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn m_with_zero_a_is_one() {
        // exact through the series; the Kummer transform branch rounds
        for (b, z) in [(c(1.5, 0.3), c(4.0, 0.0)), (c(-0.5, 2.0), c(-3.0, 1.0))] {
            assert!((kummer_m(c(0.0, 0.0), b, z).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn m_with_equal_parameters_is_exponential() {
        let v = kummer_m(c(0.7, -0.2), c(0.7, -0.2), c(1.0, 0.0)).unwrap();
        assert!((v - c(std::f64::consts::E, 0.0)).norm() < 1e-14);
        let w = kummer_m(c(2.0, 0.0), c(2.0, 0.0), c(-5.0, 0.0)).unwrap();
        assert!((w.re - (-5.0f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn m_rejects_pole_parameter() {
        assert!(matches!(
            kummer_m(c(1.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn m_matches_high_precision_reference() {
        // 40-digit reference value
        let v = kummer_m(c(-0.5, 0.7), c(1.0, -1.4), c(2.0, 0.0)).unwrap();
        let reference = c(0.133_007_945_118_358_1, -0.426_260_696_923_618_97);
        assert!((v - reference).norm() < 1e-14, "{v}");
    }

    #[test]
    fn u_matches_high_precision_references() {
        let cases = [
            ((-0.5, -0.5), (1.0, -1.0), 1.0, (0.578_055_187_475_302_6, 0.0)),
            ((-0.5, -3.0), (1.0, -6.0), 8.0, (0.841_817_793_860_485_6, -0.037_789_874_337_583_61)),
            ((-0.5, -3.0), (1.0, -6.0), 35.0, (-1.468_868_837_804_315_3, -4.294_939_061_227_866_6)),
        ];
        for ((ar, ai), (br, bi), z, (er, ei)) in cases {
            let v = tricomi_u(c(ar, ai), c(br, bi), z).unwrap();
            let e = c(er, ei);
            assert!((v - e).norm() < 1e-10 * e.norm(), "z = {z}: {v} vs {e}");
        }
    }

    #[test]
    fn u_one_one_is_exponential_integral() {
        // e^z E1(z) with E1 from its convergent series
        let z = 2.0_f64;
        let euler = 0.577_215_664_901_532_9;
        let mut series = 0.0;
        let mut term = 1.0;
        for k in 1..80 {
            term *= -z / k as f64;
            series += term / k as f64;
        }
        let e1 = -euler - z.ln() - series;
        let expected = z.exp() * e1;
        let v = tricomi_u(c(1.0, 0.0), c(1.0, 0.0), z).unwrap();
        assert!((v.re - expected).abs() < 1e-11, "{v} vs {expected}");
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn u_integer_b_with_very_negative_a_is_degenerate() {
        assert!(matches!(
            tricomi_u(c(-1.5, 0.0), c(2.0, 0.0), 1.0),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn u_rejects_nonpositive_z() {
        assert!(matches!(tricomi_u(c(1.0, 0.0), c(0.5, 0.0), 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn u_asymptotic_and_connection_agree_in_overlap() {
        // near z = 18 the truncated asymptotic series and the connection
        // formula both hold about eight digits
        let (a, b) = (c(-0.5, -1.0), c(1.0, -2.0));
        let z = 18.0;
        let (asym, omitted) = tricomi_asymptotic(a, b, z);
        assert!(omitted < 1e-6);
        let one = c(1.0, 0.0);
        let zc = c(z, 0.0);
        let conn = gamma_ratio(one - b, a - b + one).unwrap() * kummer_m(a, b, zc).unwrap()
            + gamma_ratio(b - one, a).unwrap()
                * ((one - b) * zc.ln()).exp()
                * kummer_m(a - b + one, 2.0 * one - b, zc).unwrap();
        assert!((asym - conn).norm() < 1e-6 * asym.norm(), "{asym} vs {conn}");
    }

    #[test]
    fn u_recurrence_route_matches_connection_formula() {
        let (a, b) = (c(-0.5, -2.0), c(1.0, -4.0));
        for z in [0.5, 3.0, 9.0] {
            let (conn, _) = tricomi_connection(a, b, z).unwrap();
            let one = c(1.0, 0.0);
            let u1 = tricomi_integral(a + one, b, z).unwrap();
            let u2 = tricomi_integral(a + 2.0 * one, b, z).unwrap();
            let rec = (c(z, 0.0) + 2.0 * a + 2.0 - b) * u1 - (a + one) * (a - b + 2.0) * u2;
            assert!((rec - conn).norm() < 1e-10 * conn.norm(), "z = {z}: {rec} vs {conn}");
        }
    }

    #[test]
    fn u_is_accurate_between_series_regimes() {
        // high-precision reference for the band where neither the connection
        // formula nor the asymptotic series is usable
        let v = tricomi_u(c(-0.5, -3.0), c(1.0, -6.0), 25.0).unwrap();
        let reference = c(-3.355_375_717_980_828_6, -0.792_187_831_880_751_25);
        assert!((v - reference).norm() < 1e-10 * reference.norm(), "{v}");
    }

    #[test]
    fn u_continuum_parameters_give_real_morse_combination() {
        // z^{-iκ} U(-N-iκ, 1-2iκ, z) is real for real z
        let (n, kappa, z) = (0.5, 0.5, 1.0_f64);
        let u = tricomi_u(c(-n, -kappa), c(1.0, -2.0 * kappa), z).unwrap();
        let v = c(0.0, -kappa * z.ln()).exp() * u;
        assert!(v.im.abs() < 1e-12 * v.norm(), "{v}");
    }

    #[test]
    fn m_derivative_identity_holds() {
        let (a, b) = (c(-0.5, 0.7), c(1.0, -1.4));
        let z = 1.3;
        let h = 1e-5;
        let fd = (kummer_m(a, b, c(z + h, 0.0)).unwrap() - kummer_m(a, b, c(z - h, 0.0)).unwrap())
            / (2.0 * h);
        let exact = a / b * kummer_m(a + 1.0, b + 1.0, c(z, 0.0)).unwrap();
        assert!((fd - exact).norm() < 1e-6 * exact.norm().max(1.0));
    }
}
