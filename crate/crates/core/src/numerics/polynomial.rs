//! Dense univariate polynomials, coefficients in ascending degree.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial<C> {
    coeffs: Vec<C>,
}

impl<C: Num + Copy> Polynomial<C> {
    /// Builds a polynomial, trimming zero leading coefficients.
    ///
    /// The zero polynomial is rejected: its degree is undefined.
    pub fn new(coeffs: Vec<C>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("zero polynomial".into()));
        }
        Ok(Self { coeffs })
    }

    /// The zero polynomial, the one exception to the nonzero-leading rule.
    pub fn zero() -> Self {
        Self {
            coeffs: vec![C::zero()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Like [`Polynomial::new`] but maps an all-zero input to [`Polynomial::zero`].
    pub fn new_or_zero(coeffs: Vec<C>) -> Self {
        Self::new(coeffs).unwrap_or_else(|_| Self::zero())
    }

    pub fn constant(c: C) -> Result<Self> {
        Self::new(vec![c])
    }

    /// `c0 + c1 s + ... + cn s^n`.
    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> C {
        self.coeffs[self.coeffs.len() - 1]
    }

    /// Horner evaluation.
    pub fn eval(&self, x: C) -> C {
        self.coeffs
            .iter()
            .rev()
            .fold(C::zero(), |acc, &c| acc * x + c)
    }

    /// Formal derivative; the derivative of a constant is the constant zero,
    /// returned as `None`.
    pub fn derivative(&self) -> Option<Self> {
        if self.coeffs.len() < 2 {
            return None;
        }
        let mut k = C::zero();
        let coeffs = self.coeffs[1..]
            .iter()
            .map(|&c| {
                k = k + C::one();
                c * k
            })
            .collect();
        Self::new(coeffs).ok()
    }

    pub fn scale(&self, factor: C) -> Result<Self> {
        Self::new(self.coeffs.iter().map(|&c| c * factor).collect())
    }

    /// Multiplies by `s^k`.
    pub fn shift(&self, k: usize) -> Self {
        let mut coeffs = vec![C::zero(); k];
        coeffs.extend_from_slice(&self.coeffs);
        Self { coeffs }
    }

    fn combine(&self, other: &Self, op: impl Fn(C, C) -> C) -> Result<Self> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &[C], i: usize| v.get(i).copied().unwrap_or_else(C::zero);
        Self::new(
            (0..n)
                .map(|i| op(get(&self.coeffs, i), get(&other.coeffs, i)))
                .collect(),
        )
    }

    /// Sum; fails only if the result is the zero polynomial.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b)
    }

    /// Difference; fails only if the result is the zero polynomial.
    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b)
    }
}

impl<C: Num + Copy> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;

    fn mul(self, rhs: Self) -> Polynomial<C> {
        let mut coeffs = vec![C::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j] + a * b;
            }
        }
        Polynomial::new_or_zero(coeffs)
    }
}

impl<C: Num + Copy> Add for &Polynomial<C> {
    type Output = Result<Polynomial<C>>;

    fn add(self, rhs: Self) -> Result<Polynomial<C>> {
        self.try_add(rhs)
    }
}

impl<C: Num + Copy> Sub for &Polynomial<C> {
    type Output = Result<Polynomial<C>>;

    fn sub(self, rhs: Self) -> Result<Polynomial<C>> {
        self.try_sub(rhs)
    }
}

impl<C: Num + Copy + Neg<Output = C>> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;

    fn neg(self) -> Polynomial<C> {
        Polynomial {
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }
}

impl<T: Real> Polynomial<T> {
    pub fn to_complex(&self) -> Polynomial<Complex<T>> {
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .map(|&c| Complex::new(c, T::zero()))
                .collect(),
        }
    }

    /// Evaluates a real polynomial at a complex point.
    pub fn eval_complex(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }
}
