//! Adaptive Gauss–Kronrod quadrature and fixed Gauss–Legendre rules.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

// 15-point Kronrod abscissae and weights; every other abscissa (odd index)
// is a 7-point Gauss node.
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

/// Values that can be integrated: real or complex.
pub trait QuadValue<T: Real>:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(&self) -> T;
    fn is_finite_value(&self) -> bool;
}

impl<T: Real> QuadValue<T> for T {
    fn zero() -> Self {
        T::zero()
    }
    fn magnitude(&self) -> T {
        self.abs()
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn magnitude(&self) -> T {
        self.norm()
    }
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Upper integration limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound<T> {
    Finite(T),
    Infinite,
}

/// Integral estimate with its error bound.
#[derive(Debug, Clone, Copy)]
pub struct Integral<V, T> {
    pub value: V,
    pub error: T,
    pub evaluations: usize,
}

/// Adaptive 15-point Gauss–Kronrod integrator.
///
/// Intervals are bisected in order of largest local error until the summed
/// error estimate meets `max(abs_tol, rel_tol * |I|)`. Semi-infinite ranges are
/// mapped onto `[0, π/2)` with `x = a + tan θ`.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    abs_tol: T,
    rel_tol: T,
    max_subdivisions: usize,
}

impl<T: Real> Default for Quadrature<T> {
    fn default() -> Self {
        Self::new()
    }
}

struct Segment<V, T> {
    lo: T,
    hi: T,
    value: V,
    error: T,
}

impl<T: Real> Quadrature<T> {
    pub fn new() -> Self {
        Self {
            abs_tol: T::lit(1e-12),
            rel_tol: T::lit(1e-10),
            max_subdivisions: 2000,
        }
    }

    pub fn abs_tol(mut self, tol: T) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn rel_tol(mut self, tol: T) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn max_subdivisions(mut self, n: usize) -> Self {
        self.max_subdivisions = n.max(1);
        self
    }

    pub fn integrate<V, F>(&self, mut f: F, a: T, b: Bound<T>) -> Result<Integral<V, T>>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        match b {
            Bound::Finite(b) => {
                if b < a {
                    let r = self.integrate_finite(&mut f, b, a)?;
                    return Ok(Integral {
                        value: r.value * (-T::one()),
                        ..r
                    });
                }
                self.integrate_finite(&mut f, a, b)
            }
            Bound::Infinite => {
                let mut mapped = |theta: T| {
                    let (s, c) = theta.sin_cos();
                    let jac = T::one() / (c * c);
                    if !jac.is_finite() {
                        return V::zero();
                    }
                    f(a + s / c) * jac
                };
                self.integrate_finite(&mut mapped, T::zero(), T::FRAC_PI_2())
            }
        }
    }

    fn integrate_finite<V, F>(&self, f: &mut F, a: T, b: T) -> Result<Integral<V, T>>
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        if a == b {
            return Ok(Integral {
                value: V::zero(),
                error: T::zero(),
                evaluations: 0,
            });
        }
        let mut evaluations = 15;
        let (value, error) = kronrod_segment(f, a, b)?;
        let mut segments = vec![Segment {
            lo: a,
            hi: b,
            value,
            error,
        }];
        loop {
            let total = segments.iter().fold(V::zero(), |acc, s| acc + s.value);
            let err: T = segments.iter().map(|s| s.error).sum();
            let target = self.abs_tol.max(self.rel_tol * total.magnitude());
            if err <= target || err == T::zero() {
                return Ok(Integral {
                    value: total,
                    error: err,
                    evaluations,
                });
            }
            if segments.len() >= self.max_subdivisions {
                return Err(Error::Tolerance {
                    estimate: err.as_f64(),
                    requested: target.as_f64(),
                });
            }
            let worst = segments
                .iter()
                .enumerate()
                .fold(0, |best, (i, s)| if s.error > segments[best].error { i } else { best });
            let seg = segments.swap_remove(worst);
            let mid = (seg.lo + seg.hi) * T::lit(0.5);
            if !(mid > seg.lo && mid < seg.hi) {
                return Err(Error::Tolerance {
                    estimate: err.as_f64(),
                    requested: target.as_f64(),
                });
            }
            let (lv, le) = kronrod_segment(f, seg.lo, mid)?;
            let (rv, re) = kronrod_segment(f, mid, seg.hi)?;
            evaluations += 30;
            segments.push(Segment {
                lo: seg.lo,
                hi: mid,
                value: lv,
                error: le,
            });
            segments.push(Segment {
                lo: mid,
                hi: seg.hi,
                value: rv,
                error: re,
            });
        }
    }
}

fn kronrod_segment<T, V, F>(f: &mut F, a: T, b: T) -> Result<(V, T)>
where
    T: Real,
    V: QuadValue<T>,
    F: FnMut(T) -> V,
{
    let center = (a + b) * T::lit(0.5);
    let half = (b - a) * T::lit(0.5);
    let mut kronrod = V::zero();
    let mut gauss = V::zero();
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let x = T::lit(x);
        let w = T::lit(w);
        let pair = if i == 7 {
            f(center)
        } else {
            f(center - half * x) + f(center + half * x)
        };
        if !pair.is_finite_value() {
            return Err(Error::Domain(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        kronrod = kronrod + pair * w;
        if i % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[i / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).magnitude();
    Ok((value, error))
}

/// Integrates `f` over `[a, b]` (or `[a, ∞)`) to absolute tolerance `tol`.
pub fn integrate_adaptive<T, F>(f: F, a: T, b: Bound<T>, tol: T) -> Result<Integral<T, T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    Quadrature::new()
        .abs_tol(tol)
        .rel_tol(T::zero())
        .integrate(f, a, b)
}

/// Fixed n-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Builds the rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let c = (a + b) * T::lit(0.5);
        let h = (b - a) * T::lit(0.5);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (c + h * x, w * h))
    }

    pub fn integrate<V, F>(&self, mut f: F, a: T, b: T) -> V
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        self.mapped(a, b)
            .fold(V::zero(), |acc, (x, w)| acc + f(x) * w)
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_composite<V, F>(&self, mut f: F, a: T, b: T, panels: usize) -> V
    where
        V: QuadValue<T>,
        F: FnMut(T) -> V,
    {
        let panels = panels.max(1);
        let h = (b - a) / T::from_count(panels);
        (0..panels).fold(V::zero(), |acc, i| {
            let lo = a + h * T::from_count(i);
            let hi = if i + 1 == panels { b } else { lo + h };
            acc + self.integrate(&mut f, lo, hi)
        })
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_integrand_on_unit_interval() {
        let r = integrate_adaptive(|_| 1.0_f64, 0.0, Bound::Finite(1.0), 1e-12).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert!(r.error <= 1e-12);
    }

    #[test]
    fn decaying_exponential_on_half_line() {
        let r = integrate_adaptive(|x: f64| (-x).exp(), 0.0, Bound::Infinite, 1e-11).unwrap();
        assert!((r.value - 1.0).abs() < 1e-11);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let q = Quadrature::new();
        let r: Integral<f64, f64> = q.integrate(|x: f64| x * x, 1.0, Bound::Finite(0.0)).unwrap();
        assert!((r.value + 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        let q = Quadrature::new().rel_tol(1e-12).abs_tol(0.0);
        let r: Integral<f64, f64> = q
            .integrate(|x: f64| (40.0 * x).cos(), 0.0, Bound::Finite(3.0))
            .unwrap();
        assert!((r.value - (120.0f64).sin() / 40.0).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let q = Quadrature::new().abs_tol(1e-15).rel_tol(0.0).max_subdivisions(3);
        let r: Result<Integral<f64, f64>> =
            q.integrate(|x: f64| (1.0 / x.max(1e-300)).sin(), 0.0, Bound::Finite(1.0));
        assert!(matches!(r, Err(Error::Tolerance { .. })));
    }

    #[test]
    fn complex_integrand() {
        let q = Quadrature::new();
        let r: Integral<Complex<f64>, f64> = q
            .integrate(|x: f64| Complex::new(0.0, x).exp(), 0.0, Bound::Finite(1.0))
            .unwrap();
        let exact = Complex::new(1.0f64.sin(), 1.0 - 1.0f64.cos());
        assert!((r.value - exact).norm() < 1e-13);
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::<f64>::new(6);
        // degree 11 integrates exactly
        let v: f64 = rule.integrate(|x: f64| x.powi(10) + x.powi(11), -1.0, 1.0);
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
        let w: f64 = rule.integrate_composite(|x: f64| x.exp(), 0.0, 2.0, 4);
        assert!((w - (2.0f64.exp() - 1.0)).abs() < 1e-13);
        let total: f64 = rule.mapped(-1.0, 1.0).map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_order_rule_has_center_node() {
        let rule = GaussLegendre::<f64>::new(5);
        let v: f64 = rule.integrate(|x: f64| x.powi(8), -1.0, 1.0);
        assert!((v - 2.0 / 9.0).abs() < 1e-14);
    }
}
