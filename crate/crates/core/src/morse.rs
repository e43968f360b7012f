//! Morse trap `V(q) = D (e^{-2aq} - 2 e^{-aq})` restricted to the regime with a
//! single bound state: eigenvalues, eigenfunctions and bound–continuum moments.
//!
//! Positions are measured from the trap centre. Reduced units, `ħ = 1`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::gamma::{ln_abs_gamma, log_gamma};
use crate::numerics::hypergeometric::tricomi_u_scaled;
use crate::numerics::quadrature::{Bound, Quadrature};
use crate::scalar::Real;

/// Imaginary residue allowed in a continuum eigenfunction, relative to the
/// cancellation scale of the `U` evaluation.
pub const REALIFICATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorseModel<T> {
    depth: T,
    width: T,
    mass: T,
    n_param: T,
    m_star: T,
    omega0: T,
    norm0: T,
}

/// Bound–continuum transition data at one continuum momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatrixElement<T> {
    pub kappa: T,
    /// `μ̃₀κ`, matrix element of the trap force.
    pub mu_tilde: Complex<T>,
    /// `ω_κ0 = ω_κ - ω₀`.
    pub omega_k0: T,
    /// `|μ̃₀κ|² / ω_κ0²`.
    pub a_kappa: T,
}

impl<T: Real> MatrixElement<T> {
    /// `μ₀κ = μ̃₀κ / ω_κ0`, the coupling that multiplies the trap velocity.
    pub fn mu(&self) -> Complex<T> {
        self.mu_tilde / self.omega_k0
    }
}

impl<T: Real> MorseModel<T> {
    /// Builds the trap and checks that it holds exactly one bound state.
    pub fn new(depth: T, width: T, mass: T) -> Result<Self> {
        for (name, v) in [("depth D", depth), ("width a", width), ("mass m", mass)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let two = T::lit(2.0);
        let n_param = (two * mass * depth).sqrt() / width - T::lit(0.5);
        if n_param >= T::one() {
            return Err(Error::MultiBoundState { n: n_param.as_f64() });
        }
        if n_param <= T::zero() {
            return Err(Error::NoBoundState { n: n_param.as_f64() });
        }
        let m_star = mass / (width * width);
        let omega0 = -(width * width / (two * mass)) * n_param * n_param;
        let mut model = Self {
            depth,
            width,
            mass,
            n_param,
            m_star,
            omega0,
            norm0: T::one(),
        };
        model.norm0 = model.bound_norm_numerical()?;
        Ok(model)
    }

    /// The shipped configuration `D = 0.5, a = 1, m = 1`, for which `N = 1/2`.
    pub fn standard() -> Self {
        Self::new(T::lit(0.5), T::one(), T::one()).expect("standard trap is valid")
    }

    pub fn depth(&self) -> T {
        self.depth
    }

    pub fn width(&self) -> T {
        self.width
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    /// `N` from `(N + 1/2)² = 2mD/a²`.
    pub fn n_param(&self) -> T {
        self.n_param
    }

    /// `m* = m / a²`.
    pub fn m_star(&self) -> T {
        self.m_star
    }

    /// Bound-state frequency `ω₀ = -(a²/2m) N²`.
    pub fn omega0(&self) -> T {
        self.omega0
    }

    /// Width of the spectral gap, `|ω₀|`.
    pub fn gap(&self) -> T {
        self.omega0.abs()
    }

    /// `-[D - sqrt(D/2m*) + 1/(8m*)]`, the same bound frequency written in
    /// terms of the depth and effective mass.
    pub fn omega0_from_depth(&self) -> T {
        let two = T::lit(2.0);
        -(self.depth - (self.depth / (two * self.m_star)).sqrt() + T::one() / (T::lit(8.0) * self.m_star))
    }

    /// Bound-state normalisation `𝒩₀`, fixed by quadrature of `φ₀²`.
    pub fn norm0(&self) -> T {
        self.norm0
    }

    /// `z = (2N + 1) e^{-a x}`.
    pub fn z_of(&self, x: T) -> T {
        (T::lit(2.0) * self.n_param + T::one()) * (-self.width * x).exp()
    }

    /// Continuum frequency `ω_κ = a²κ²/(2m)`.
    pub fn continuum_frequency(&self, kappa: T) -> Result<T> {
        if !(kappa >= T::zero()) {
            return Err(Error::Domain(format!("continuum momentum must be >= 0, got {kappa}")));
        }
        Ok(self.width * self.width * kappa * kappa / (T::lit(2.0) * self.mass))
    }

    /// Gap frequency `ω_κ0 = ω_κ - ω₀ = κ²/(2m*) + |ω₀|`.
    pub fn gap_frequency(&self, kappa: T) -> Result<T> {
        Ok(self.continuum_frequency(kappa)? - self.omega0)
    }

    /// `φ₀(x) = 𝒩₀ z^N e^{-z/2}`.
    pub fn bound_eigenfunction(&self, x: T) -> T {
        let z = self.z_of(x);
        if z == T::zero() || !z.is_finite() {
            return T::zero();
        }
        self.norm0 * (self.n_param * z.ln() - z / T::lit(2.0)).exp()
    }

    fn bound_norm_numerical(&self) -> Result<T> {
        // φ₀ with unit prefactor; the two half-lines are mapped separately
        let unnormalised = |x: T| {
            let z = self.z_of(x);
            if z == T::zero() || !z.is_finite() {
                T::zero()
            } else {
                (T::lit(2.0) * self.n_param * z.ln() - z).exp()
            }
        };
        let q = Quadrature::new().rel_tol(T::lit(1e-13)).abs_tol(T::zero());
        let right = q.integrate(unnormalised, T::zero(), Bound::Infinite)?;
        let left = q.integrate(|y: T| unnormalised(-y), T::zero(), Bound::Infinite)?;
        Ok(T::one() / (right.value + left.value).sqrt())
    }

    /// Continuum normalisation for `δ(κ - κ')` in `x`:
    /// `𝒩(κ) = sqrt(a) |Γ(-N - iκ)| sqrt(κ sinh 2πκ) / π`, evaluated in logs.
    pub fn continuum_norm(&self, kappa: T) -> Result<T> {
        self.ln_continuum_norm(kappa).map(|l| l.exp())
    }

    fn ln_continuum_norm(&self, kappa: T) -> Result<T> {
        if !(kappa > T::zero()) {
            return Err(Error::Domain(format!("continuum momentum must be > 0, got {kappa}")));
        }
        let two_pi_k = T::lit(2.0) * T::PI() * kappa;
        // ln sinh x = x + ln(1 - e^{-2x}) - ln 2
        let ln_sinh = two_pi_k + (-(-two_pi_k * T::lit(2.0)).exp_m1()).ln() - T::LN_2();
        let ln_gamma = ln_abs_gamma(Complex::new(-self.n_param, -kappa))?;
        Ok(T::lit(0.5) * self.width.ln() + ln_gamma - T::PI().ln()
            + T::lit(0.5) * (kappa.ln() + ln_sinh))
    }

    /// `φ(κ, x) = 𝒩(κ) z^{-iκ} e^{-z/2} U(-N - iκ, 1 - 2iκ, z)`, which is real.
    ///
    /// Fails with [`Error::Realification`] when the computed imaginary part
    /// exceeds `1e-8` of the cancellation scale of the `U` evaluation.
    pub fn continuum_eigenfunction(&self, kappa: T, x: T) -> Result<T> {
        let ln_norm = self.ln_continuum_norm(kappa)?;
        let z = self.z_of(x);
        if z == T::zero() {
            return Err(Error::Domain(format!("x = {x} underflows z")));
        }
        if !z.is_finite() || z > T::lit(1e4) {
            return Ok(T::zero());
        }
        let a = Complex::new(-self.n_param, -kappa);
        let b = Complex::new(T::one(), -T::lit(2.0) * kappa);
        let (u, scale) = tricomi_u_scaled(a, b, z)?;
        let phase = Complex::new(-z / T::lit(2.0), -kappa * z.ln()).exp();
        let w = phase * u;
        let scale = scale * (-z / T::lit(2.0)).exp();
        let allowed = T::lit(REALIFICATION_TOL) * scale;
        if w.im.abs() > allowed {
            return Err(Error::Realification {
                residue: w.im.abs().as_f64(),
                allowed: allowed.as_f64(),
            });
        }
        Ok(ln_norm.exp() * w.re)
    }

    /// Closed form `μ̃₀κ = 2D 𝒩₀ 𝒩(κ) / (2N+1)² ·
    /// [Γ(N+2+iκ)Γ(N+2-iκ) - (2N+1) Γ(N+1+iκ)Γ(N+1-iκ)]`.
    pub fn dipole_moment_closed(&self, kappa: T) -> Result<Complex<T>> {
        let ln_norm = self.ln_continuum_norm(kappa)?;
        let n = self.n_param;
        let two_n1 = T::lit(2.0) * n + T::one();
        let pair = |shift: T| -> Result<Complex<T>> {
            let up = log_gamma(Complex::new(n + shift, kappa))?;
            let down = log_gamma(Complex::new(n + shift, -kappa))?;
            Ok((up + down + ln_norm).exp())
        };
        let bracket = pair(T::lit(2.0))? - pair(T::one())? * two_n1;
        Ok(bracket * (T::lit(2.0) * self.depth * self.norm0 / (two_n1 * two_n1)))
    }

    /// `μ̃₀κ = ∫ φ₀(q) 2aD (e^{-2aq} - e^{-aq}) φ(κ, q) dq` by quadrature.
    pub fn dipole_moment_quadrature(&self, kappa: T) -> Result<Complex<T>> {
        let two_n1 = T::lit(2.0) * self.n_param + T::one();
        // integrand ~ z^{2N+2} e^{-z} for large z and ~ z^{N+1} for small z
        let z_max = T::lit(60.0);
        let z_min = T::lit(1e-17).powf(T::one() / (self.n_param + T::one()));
        let q_lo = -(z_max / two_n1).ln() / self.width;
        let q_hi = (two_n1 / z_min).ln() / self.width;
        let scale = T::lit(2.0) * self.width * self.depth;
        let mut failure = None;
        let integrand = |q: T| {
            let e1 = (-self.width * q).exp();
            let force = scale * (e1 * e1 - e1);
            match self.continuum_eigenfunction(kappa, q) {
                Ok(phi) => self.bound_eigenfunction(q) * force * phi,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            }
        };
        let quad = Quadrature::new()
            .rel_tol(T::lit(1e-10))
            .abs_tol(T::lit(1e-14))
            .max_subdivisions(4000);
        let result = quad.integrate(integrand, q_lo, Bound::Finite(q_hi));
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(Complex::new(result?.value, T::zero()))
    }

    /// Transition data at `κ` from the closed-form moment.
    pub fn matrix_element(&self, kappa: T) -> Result<MatrixElement<T>> {
        let mu_tilde = self.dipole_moment_closed(kappa)?;
        let omega_k0 = self.gap_frequency(kappa)?;
        Ok(MatrixElement {
            kappa,
            mu_tilde,
            omega_k0,
            a_kappa: mu_tilde.norm_sqr() / (omega_k0 * omega_k0),
        })
    }

    /// `a_κ = |μ̃₀κ|² / ω_κ0²`, zero at `κ = 0`.
    pub fn a_coefficient(&self, kappa: T) -> Result<T> {
        if kappa == T::zero() {
            return Ok(T::zero());
        }
        Ok(self.matrix_element(kappa)?.a_kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::gamma::gamma;

    fn standard() -> MorseModel<f64> {
        MorseModel::standard()
    }

    #[test]
    fn standard_trap_parameters() {
        let m = standard();
        assert_eq!(m.n_param(), 0.5);
        assert!((m.omega0() + 0.125).abs() < 1e-15);
        assert!((m.omega0_from_depth() - m.omega0()).abs() < 1e-15);
        assert_eq!(m.m_star(), 1.0);
    }

    #[test]
    fn rejects_deep_and_shallow_traps() {
        assert!(matches!(MorseModel::new(10.0, 1.0, 1.0), Err(Error::MultiBoundState { .. })));
        assert!(matches!(MorseModel::new(0.1, 1.0, 1.0), Err(Error::NoBoundState { .. })));
        assert!(matches!(MorseModel::new(-1.0, 1.0, 1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn frequencies() {
        let m = standard();
        assert_eq!(m.continuum_frequency(0.0).unwrap(), 0.0);
        assert!((m.continuum_frequency(1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((m.gap_frequency(0.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(m.continuum_frequency(-1.0).is_err());
    }

    #[test]
    fn numerical_bound_norm_matches_gamma_form() {
        // ∫ z^{2N} e^{-z} dx = Γ(2N)/a
        for (d, a, mass) in [(0.5_f64, 1.0_f64, 1.0), (0.3, 0.8, 1.7), (1.2, 1.5, 0.9)] {
            let m = MorseModel::new(d, a, mass).unwrap();
            let g = gamma(Complex::new(2.0 * m.n_param(), 0.0)).unwrap().re;
            assert!((m.norm0() - (a / g).sqrt()).abs() < 1e-10, "{d} {a} {mass}");
        }
    }

    #[test]
    fn bound_state_vanishes_far_away() {
        let m = standard();
        assert!(m.bound_eigenfunction(60.0) < 1e-12);
        assert_eq!(m.bound_eigenfunction(-10.0), 0.0);
    }

    #[test]
    fn continuum_state_is_real_and_finite() {
        let m = standard();
        for kappa in [0.05, 0.5, 1.0, 3.0, 6.0] {
            for x in [-3.0, -1.5, 0.0, 2.0, 10.0] {
                let v = m.continuum_eigenfunction(kappa, x).unwrap();
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn continuum_far_field_amplitude_is_delta_normalised() {
        // far from the wall φ ≈ sqrt(2a/π) cos(κ a x + δ), the standing wave
        // normalised to δ(κ - κ') in x
        for (d, a, kappa) in [(0.5, 1.0, 0.7), (0.845, 1.3, 1.6)] {
            let m = MorseModel::new(d, a, 1.0).unwrap();
            let x0 = 60.0 / a;
            let period = 2.0 * std::f64::consts::PI / (kappa * a);
            let peak = (0..400)
                .map(|i| m.continuum_eigenfunction(kappa, x0 + period * i as f64 / 400.0).unwrap().abs())
                .fold(0.0, f64::max);
            let expected = (2.0 * a / std::f64::consts::PI).sqrt();
            assert!((peak - expected).abs() < 1e-3 * expected, "{peak} vs {expected}");
        }
    }

    #[test]
    fn continuum_norm_small_kappa_limit() {
        let m = standard();
        let k = 1e-4;
        let g = gamma(Complex::new(-0.5_f64, 0.0)).unwrap().re.abs();
        let limit = (2.0 * std::f64::consts::PI).sqrt() * k * g / std::f64::consts::PI;
        assert!((m.continuum_norm(k).unwrap() - limit).abs() < 1e-6 * limit);
    }

    #[test]
    fn bound_and_continuum_are_orthogonal() {
        let m = standard();
        let kappa = 0.8;
        let q = Quadrature::new().rel_tol(1e-9).abs_tol(1e-11).max_subdivisions(4000);
        let overlap = q
            .integrate(
                |x: f64| m.bound_eigenfunction(x) * m.continuum_eigenfunction(kappa, x).unwrap(),
                -3.5,
                Bound::Finite(80.0),
            )
            .unwrap();
        assert!(overlap.value.abs() < 1e-7, "{}", overlap.value);
    }

    #[test]
    fn closed_moment_matches_quadrature() {
        let m = standard();
        for kappa in [0.1, 1.0, 3.0] {
            let closed = m.dipole_moment_closed(kappa).unwrap();
            let quad = m.dipole_moment_quadrature(kappa).unwrap();
            assert!(closed.im.abs() < 1e-14 * closed.re.abs());
            assert!((closed.re - quad.re).abs() < 1e-6 * closed.re.abs(), "κ = {kappa}: {closed} vs {quad}");
        }
    }

    #[test]
    fn a_coefficient_reference_values() {
        // for N = 1/2 the moment collapses to
        // a_κ = (π/2) κ (1/4 + κ²) sinh(πκ) / cosh²(πκ)
        let m = standard();
        for kappa in [0.1, 0.5, 0.81, 2.0, 4.0] {
            let pk = std::f64::consts::PI * kappa;
            let reference = std::f64::consts::FRAC_PI_2 * kappa * (0.25 + kappa * kappa) * pk.sinh()
                / pk.cosh().powi(2);
            let v = m.a_coefficient(kappa).unwrap();
            assert!((v - reference).abs() < 1e-12 * reference, "κ = {kappa}");
        }
        assert_eq!(m.a_coefficient(0.0).unwrap(), 0.0);
        assert!(m.a_coefficient(10.0).unwrap() < 1e-8);
    }
}
