//! Optimal trap velocity from the Euler–Lagrange equation
//! `λ p̈(t) = ∫₀ᵗ p(τ) K(t - τ) dτ` with `p(0) = 0`, `ṗ(0) = ṗ₀`.
//!
//! In the Laplace domain `P(s) = ṗ₀ den(s) / Q(s)` with
//! `Q(s) = s² den(s) - num(s)/λ` for a rational kernel transform
//! `G = num/den`; `p(t)` is recovered from the simple poles of `Q`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{laplace_of_fit, DampedOscFit, Phase, RationalLaplace};
use crate::numerics::polynomial::Polynomial;
use crate::numerics::quadrature::{Bound, Quadrature};
use crate::numerics::roots::find_real_roots;
use crate::scalar::{exp_integral, Real};

/// Poles closer than this fraction of the largest pole modulus are treated as
/// one repeated pole.
pub const POLE_SEPARATION: f64 = 1e-8;

/// Imaginary residue tolerated when collapsing a conjugate-symmetric sum to a
/// real value, relative to its largest term.
pub const REALNESS_TOL: f64 = 1e-9;

/// Fluence quoted for `λ = -0.01`, `ṗ₀ = 1`.
pub const REFERENCE_FLUENCE: f64 = 7.03219;

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

/// Sum `Σ terms` that must be real; checks the imaginary residue.
fn realify<T: Real>(terms: impl Iterator<Item = Complex<T>>) -> Result<T> {
    let mut sum = czero::<T>();
    let mut largest = T::zero();
    for z in terms {
        sum = sum + z;
        largest = largest.max(z.norm());
    }
    let allowed = T::lit(REALNESS_TOL) * largest;
    if sum.im.abs() > allowed {
        return Err(Error::Realification {
            residue: sum.im.abs().as_f64(),
            allowed: allowed.as_f64(),
        });
    }
    Ok(sum.re)
}

/// `p(t) = Σ r_i e^{s_i t}`, a real signal written over conjugate-closed
/// poles and residues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleExpansion<T> {
    pub poles: Vec<Complex<T>>,
    pub residues: Vec<Complex<T>>,
}

impl<T: Real> PoleExpansion<T> {
    pub fn new(poles: Vec<Complex<T>>, residues: Vec<Complex<T>>) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::InvalidInput(format!(
                "{} poles but {} residues",
                poles.len(),
                residues.len()
            )));
        }
        Ok(Self { poles, residues })
    }

    /// The trap at rest.
    pub fn zero() -> Self {
        Self {
            poles: Vec::new(),
            residues: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.residues.iter().all(|r| r.norm() == T::zero())
    }

    /// `ε · p(t)`.
    pub fn scaled(&self, eps: T) -> Self {
        Self {
            poles: self.poles.clone(),
            residues: self.residues.iter().map(|&r| r * eps).collect(),
        }
    }

    /// `Σ r_i s_i^k e^{s_i t}`, the k-th derivative of `p`.
    fn derivative(&self, k: i32, t: T) -> Result<T> {
        realify(
            self.poles
                .iter()
                .zip(&self.residues)
                .map(|(&s, &r)| r * s.powi(k) * (s * t).exp()),
        )
    }

    /// Trap velocity `p(t)`.
    pub fn velocity(&self, t: T) -> Result<T> {
        self.derivative(0, t)
    }

    /// Trap acceleration `ṗ(t)`.
    pub fn acceleration(&self, t: T) -> Result<T> {
        self.derivative(1, t)
    }

    /// `p̈(t)`.
    pub fn jerk(&self, t: T) -> Result<T> {
        self.derivative(2, t)
    }

    /// Displacement `x(t) = ∫₀ᵗ p = Σ r_i (e^{s_i t} - 1)/s_i`.
    pub fn position(&self, t: T) -> Result<T> {
        realify(
            self.poles
                .iter()
                .zip(&self.residues)
                .map(|(&s, &r)| r * exp_integral(s, t)),
        )
    }

    /// Finite-time transform `p(t, ω) = ∫₀ᵗ e^{-iωt₁} p(t₁) dt₁`.
    pub fn velocity_spectrum(&self, t: T, omega: T) -> Complex<T> {
        let iw = Complex::new(T::zero(), omega);
        self.poles
            .iter()
            .zip(&self.residues)
            .fold(czero(), |acc, (&s, &r)| acc + r * exp_integral(s - iw, t))
    }

    /// Fluence `E(T) = ∫₀ᵀ ṗ² dτ` in closed form; pairs with `s_i + s_j = 0`
    /// contribute their linear-in-`T` limit.
    pub fn fluence(&self, horizon: T) -> Result<T> {
        let c: Vec<Complex<T>> = self
            .poles
            .iter()
            .zip(&self.residues)
            .map(|(&s, &r)| r * s)
            .collect();
        let poles = &self.poles;
        realify((0..c.len()).flat_map(|i| {
            let c = &c;
            (0..c.len()).map(move |j| c[i] * c[j] * exp_integral(poles[i] + poles[j], horizon))
        }))
    }

    /// Horizon at which the fluence reaches `target`, searched up to `t_cap`.
    pub fn fluence_horizon(&self, target: T, t_cap: T) -> Result<T> {
        if !(target > T::zero()) {
            return Err(Error::InvalidInput(format!("fluence target must be positive, got {target}")));
        }
        if self.is_zero() {
            return Err(Error::DegenerateInput("zero trajectory has no fluence".into()));
        }
        let mut hi = T::lit(0.01).min(t_cap);
        while self.fluence(hi)? < target {
            if hi >= t_cap {
                return Err(Error::DegenerateInput(format!(
                    "fluence stays below {target} up to T = {t_cap}"
                )));
            }
            hi = (hi * T::lit(1.5)).min(t_cap);
        }
        let mut lo = T::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / T::lit(2.0);
            if self.fluence(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= T::lit(4.0) * T::epsilon() * hi {
                break;
            }
        }
        Ok((lo + hi) / T::lit(2.0))
    }
}

/// Optimal trajectory with its Lagrange multiplier and horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub expansion: PoleExpansion<T>,
    pub lambda: T,
    pub p_dot0: T,
    pub horizon: T,
}

impl<T: Real> Trajectory<T> {
    pub fn poles(&self) -> &[Complex<T>] {
        &self.expansion.poles
    }

    pub fn residues(&self) -> &[Complex<T>] {
        &self.expansion.residues
    }

    fn check_time(&self, t: T) -> Result<()> {
        if !(t >= T::zero() && t <= self.horizon * (T::one() + T::lit(1e-12))) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    pub fn velocity(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        self.expansion.velocity(t)
    }

    pub fn acceleration(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        self.expansion.acceleration(t)
    }

    pub fn position(&self, t: T) -> Result<T> {
        self.check_time(t)?;
        self.expansion.position(t)
    }

    /// Fluence over the trajectory's horizon.
    pub fn fluence(&self) -> Result<T> {
        self.expansion.fluence(self.horizon)
    }

    /// Same trajectory over a different horizon.
    pub fn with_horizon(&self, horizon: T) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }
}

/// `Q(s) = s² den(s) - num(s)/λ`.
pub fn characteristic_polynomial<T: Real>(g: &RationalLaplace<T>, lambda: T) -> Result<Polynomial<T>> {
    if lambda == T::zero() {
        return Err(Error::ZeroLambda);
    }
    let lead = g.denominator.shift(2);
    if g.numerator.is_zero() {
        return Ok(lead);
    }
    let coupling = g.numerator.scale(-T::one() / lambda)?;
    lead.try_add(&coupling)
}

/// Solves for the optimal trajectory of a single-term kernel fit.
pub fn solve_trajectory<T: Real>(
    fit: &DampedOscFit<T>,
    lambda: T,
    p_dot0: T,
    horizon: T,
) -> Result<Trajectory<T>> {
    solve_trajectory_laplace(&laplace_of_fit(fit), lambda, p_dot0, horizon)
}

/// Solves for the optimal trajectory of any proper rational kernel transform.
pub fn solve_trajectory_laplace<T: Real>(
    g: &RationalLaplace<T>,
    lambda: T,
    p_dot0: T,
    horizon: T,
) -> Result<Trajectory<T>> {
    if p_dot0 == T::zero() {
        return Err(Error::ZeroAcceleration);
    }
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    let q = characteristic_polynomial(g, lambda)?;
    let dq = q.derivative().expect("Q has degree >= 2");
    let poles = find_real_roots(&q)?.roots;

    let scale = poles.iter().fold(T::zero(), |m, s| m.max(s.norm()));
    let sep = T::lit(POLE_SEPARATION) * scale;
    for i in 0..poles.len() {
        for j in i + 1..poles.len() {
            if (poles[i] - poles[j]).norm() <= sep {
                return Err(Error::MultiplePole(format!("{} and {}", poles[i], poles[j])));
            }
        }
    }

    let mut residues: Vec<Complex<T>> = poles
        .iter()
        .map(|&s| g.denominator.eval_complex(s) * p_dot0 / dq.eval_complex(s))
        .collect();
    // make residues of conjugate poles exact conjugates
    for i in 0..poles.len() {
        if poles[i].im == T::zero() {
            residues[i].im = T::zero();
        } else if poles[i].im > T::zero() {
            if let Some(j) = (0..poles.len()).find(|&j| poles[j] == poles[i].conj()) {
                let avg = (residues[i] + residues[j].conj()) * T::lit(0.5);
                residues[i] = avg;
                residues[j] = avg.conj();
            }
        }
    }
    Ok(Trajectory {
        expansion: PoleExpansion { poles, residues },
        lambda,
        p_dot0,
        horizon,
    })
}

/// Counts of pole types and the resulting growth verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoleClassification {
    pub real_positive: usize,
    pub real_negative: usize,
    pub real_zero: usize,
    pub complex_rhp_pairs: usize,
    pub complex_lhp_pairs: usize,
    pub complex_imaginary_axis_pairs: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every pole in the open left half-plane.
    Stable,
    /// A real pole with positive real part.
    DivergentExponential,
    /// Right half-plane poles, all in complex pairs.
    GrowingOscillatory,
    /// Poles on the imaginary axis, none to its right.
    Marginal,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Stable => "stable",
            Verdict::DivergentExponential => "divergent-exponential",
            Verdict::GrowingOscillatory => "growing-oscillatory",
            Verdict::Marginal => "marginal",
        };
        f.write_str(s)
    }
}

pub fn classify_poles<T: Real>(poles: &[Complex<T>]) -> PoleClassification {
    let mut c = PoleClassification {
        real_positive: 0,
        real_negative: 0,
        real_zero: 0,
        complex_rhp_pairs: 0,
        complex_lhp_pairs: 0,
        complex_imaginary_axis_pairs: 0,
        verdict: Verdict::Stable,
    };
    for s in poles {
        if s.im == T::zero() {
            match s.re.partial_cmp(&T::zero()) {
                Some(std::cmp::Ordering::Greater) => c.real_positive += 1,
                Some(std::cmp::Ordering::Less) => c.real_negative += 1,
                _ => c.real_zero += 1,
            }
        } else if s.im > T::zero() {
            if s.re > T::zero() {
                c.complex_rhp_pairs += 1;
            } else if s.re < T::zero() {
                c.complex_lhp_pairs += 1;
            } else {
                c.complex_imaginary_axis_pairs += 1;
            }
        }
    }
    c.verdict = if c.real_positive > 0 {
        Verdict::DivergentExponential
    } else if c.complex_rhp_pairs > 0 {
        Verdict::GrowingOscillatory
    } else if c.real_zero > 0 || c.complex_imaginary_axis_pairs > 0 {
        Verdict::Marginal
    } else {
        Verdict::Stable
    };
    c
}

/// A kernel available in closed form or as a callable.
pub enum KernelSource<'a, T> {
    /// The damped-oscillator fit; convolutions are done analytically.
    Fitted(&'a DampedOscFit<T>),
    /// Any callable `K(t)`, integrated numerically.
    Function(&'a dyn Fn(T) -> Result<T>),
}

/// `g(t) = Σ c_k e^{q_k t}` over complex exponentials.
fn fit_exponentials<T: Real>(fit: &DampedOscFit<T>) -> Vec<(Complex<T>, Complex<T>)> {
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(4);
    for term in fit.series().terms {
        let (d, w, a) = (term.decay, term.frequency, term.amplitude);
        let up = Complex::new(-d, w);
        let down = Complex::new(-d, -w);
        match term.phase {
            Phase::Cos => {
                out.push((Complex::new(a * half, T::zero()), up));
                out.push((Complex::new(a * half, T::zero()), down));
            }
            Phase::Sin => {
                // sin x = (e^{ix} - e^{-ix}) / 2i
                out.push((Complex::new(T::zero(), -a * half), up));
                out.push((Complex::new(T::zero(), a * half), down));
            }
        }
    }
    out
}

fn quad<T: Real>() -> Quadrature<T> {
    Quadrature::new()
        .rel_tol(T::lit(1e-11).max(T::lit(64.0) * T::epsilon()))
        .abs_tol(T::zero())
        .max_subdivisions(4000)
}

/// `∫₀ᵗ p(τ) K(t - τ) dτ`.
pub fn kernel_convolution<T: Real>(
    p: &PoleExpansion<T>,
    kernel: &KernelSource<'_, T>,
    t: T,
) -> Result<T> {
    match kernel {
        KernelSource::Fitted(fit) => {
            // ∫₀ᵗ e^{sτ} e^{q(t-τ)} dτ = e^{qt} (e^{(s-q)t} - 1)/(s - q)
            let exps = fit_exponentials(fit);
            realify(p.poles.iter().zip(&p.residues).flat_map(|(&s, &r)| {
                exps.iter()
                    .map(move |&(c, q)| r * c * (q * t).exp() * exp_integral(s - q, t))
            }))
        }
        KernelSource::Function(k) => {
            if t == T::zero() {
                return Ok(T::zero());
            }
            let mut failure = None;
            let integrand = |tau: T| {
                let pv = p.velocity(tau);
                let kv = k(t - tau);
                match (pv, kv) {
                    (Ok(a), Ok(b)) => a * b,
                    (Err(e), _) | (_, Err(e)) => {
                        failure.get_or_insert(e);
                        T::zero()
                    }
                }
            };
            let scale = p.poles.iter().zip(&p.residues)
                .fold(T::zero(), |m, (s, r)| m + r.norm() * (s.re * t).exp().max(T::one()));
            let v = quad().abs_tol(T::lit(1e-15) * scale).integrate(integrand, T::zero(), Bound::Finite(t));
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(v?.value)
        }
    }
}

/// `max_t |λ p̈(t) - ∫₀ᵗ p(τ) K(t - τ) dτ| / max_t |λ p̈(t)|` over `t_grid`.
pub fn el_residual<T: Real>(traj: &Trajectory<T>, kernel: &KernelSource<'_, T>, t_grid: &[T]) -> Result<T> {
    let p = &traj.expansion;
    if p.is_zero() {
        return Ok(T::zero());
    }
    let mut worst = T::zero();
    let mut scale = T::zero();
    for &t in t_grid {
        let lhs = traj.lambda * p.jerk(t)?;
        let rhs = kernel_convolution(p, kernel, t)?;
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(lhs.abs());
    }
    if scale == T::zero() {
        return Ok(T::zero());
    }
    Ok(worst / scale)
}

/// Recovers `|λ|` from the fluence constraint,
/// `|λ| = sqrt( ∫₀ᵀ [∫₀^τ₁ ∫₀^τ₂ p(τ₃) K(τ₂ - τ₃) dτ₃ dτ₂]² dτ₁ / E )`,
/// and returns it divided by the trajectory's `|λ|`.
///
/// The inner double integral equals `λ (ṗ(τ₁) - ṗ₀)`, so the ratio approaches
/// one only once `ṗ` dominates its initial value.
pub fn lagrange_selfcheck<T: Real>(traj: &Trajectory<T>, kernel: &KernelSource<'_, T>) -> Result<T> {
    let p = &traj.expansion;
    let energy = traj.fluence()?;
    if p.is_zero() || !(energy > T::zero()) {
        return Err(Error::DegenerateInput("zero trajectory has no Lagrange multiplier".into()));
    }
    let mut failure = None;
    let inner = |tau1: T| -> Result<T> {
        let mut fail = None;
        let integrand = |tau2: T| match kernel_convolution(p, kernel, tau2) {
            Ok(v) => v,
            Err(e) => {
                fail.get_or_insert(e);
                T::zero()
            }
        };
        let v = quad().integrate(integrand, T::zero(), Bound::Finite(tau1));
        if let Some(e) = fail {
            return Err(e);
        }
        Ok(v?.value)
    };
    let outer = |tau1: T| match inner(tau1) {
        Ok(v) => v * v,
        Err(e) => {
            failure.get_or_insert(e);
            T::zero()
        }
    };
    let total = quad().rel_tol(T::lit(1e-9)).integrate(outer, T::zero(), Bound::Finite(traj.horizon));
    if let Some(e) = failure {
        return Err(e);
    }
    let recovered = (total?.value / energy).sqrt();
    Ok(recovered / traj.lambda.abs())
}

/// One row of a `λ` sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry<T> {
    pub lambda: T,
    pub classification: PoleClassification,
    /// Largest real part among the poles.
    pub growth_rate: T,
    /// Horizon at which the fluence target is met, if within the cap.
    pub fluence_horizon: Option<T>,
}

/// Log-spaced `λ` from `lo` to `hi` (same sign, both nonzero).
pub fn lambda_grid<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    if lo == T::zero() || hi == T::zero() || (lo > T::zero()) != (hi > T::zero()) {
        return Err(Error::InvalidInput("lambda sweep ends must be nonzero with equal sign".into()));
    }
    let sign = lo.signum();
    Ok(crate::scalar::linspace(lo.abs().ln(), hi.abs().ln(), n)
        .into_iter()
        .map(|l| sign * l.exp())
        .collect())
}

pub fn lambda_sweep<T: Real>(
    fit: &DampedOscFit<T>,
    lambdas: &[T],
    p_dot0: T,
    fluence_target: T,
    t_cap: T,
) -> Result<Vec<SweepEntry<T>>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let traj = solve_trajectory(fit, lambda, p_dot0, t_cap)?;
            let growth_rate = traj.poles().iter().fold(T::neg_infinity(), |m, s| m.max(s.re));
            Ok(SweepEntry {
                lambda,
                classification: classify_poles(traj.poles()),
                growth_rate,
                fluence_horizon: traj.expansion.fluence_horizon(fluence_target, t_cap).ok(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_fit() -> DampedOscFit<f64> {
        DampedOscFit::reference()
    }

    #[test]
    fn characteristic_polynomial_of_simple_pole() {
        // G = 1/(s+1), λ = 1 → s³ + s² - 1
        let g = RationalLaplace {
            numerator: Polynomial::new(vec![1.0]).unwrap(),
            denominator: Polynomial::new(vec![1.0, 1.0]).unwrap(),
        };
        let q = characteristic_polynomial(&g, 1.0).unwrap();
        assert_eq!(q.coeffs(), &[-1.0, 0.0, 1.0, 1.0]);
        let flipped = characteristic_polynomial(&g, -1.0).unwrap();
        assert_eq!(flipped.coeffs(), &[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(characteristic_polynomial(&g, 0.0), Err(Error::ZeroLambda));
    }

    #[test]
    fn zero_acceleration_is_rejected() {
        assert_eq!(
            solve_trajectory(&reference_fit(), -0.01, 0.0, 1.0),
            Err(Error::ZeroAcceleration)
        );
    }

    #[test]
    fn initial_conditions_hold() {
        for lambda in [-0.01, -0.3, 0.5] {
            let traj = solve_trajectory(&reference_fit(), lambda, 1.0, 2.0).unwrap();
            assert_eq!(traj.poles().len(), 6);
            assert!(traj.velocity(0.0).unwrap().abs() < 1e-13);
            assert!((traj.acceleration(0.0).unwrap() - 1.0).abs() < 1e-12);
            let h = 1e-6;
            let fd = (traj.velocity(h).unwrap() - traj.velocity(0.0).unwrap()) / h;
            assert!((fd - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn position_derivative_is_velocity() {
        let traj = solve_trajectory(&reference_fit(), -0.01, 1.0, 2.0).unwrap();
        for t in [0.3, 1.0, 1.7] {
            let h = 1e-5;
            let fd = (traj.position(t + h).unwrap() - traj.position(t - h).unwrap()) / (2.0 * h);
            assert!((fd - traj.velocity(t).unwrap()).abs() < 1e-6);
        }
        assert_eq!(traj.position(0.0).unwrap(), 0.0);
    }

    #[test]
    fn fluence_matches_quadrature() {
        let traj = solve_trajectory(&reference_fit(), -0.01, 1.0, 1.5).unwrap();
        let q = Quadrature::new().rel_tol(1e-12);
        let numeric = q
            .integrate(|t: f64| traj.acceleration(t).unwrap().powi(2), 0.0, Bound::Finite(1.5))
            .unwrap()
            .value;
        let closed = traj.fluence().unwrap();
        assert!((closed - numeric).abs() < 1e-8 * numeric);
        assert_eq!(PoleExpansion::<f64>::zero().fluence(3.0).unwrap(), 0.0);
    }

    #[test]
    fn fluence_with_opposite_poles_uses_linear_limit() {
        // p = sin t = (e^{it} - e^{-it}) / 2i, ṗ² = cos² t
        let p = PoleExpansion::new(
            vec![Complex::new(0.0, 1.0), Complex::new(0.0, -1.0)],
            vec![Complex::new(0.0, -0.5), Complex::new(0.0, 0.5)],
        )
        .unwrap();
        let t: f64 = 2.0;
        let expected = t / 2.0 + (2.0 * t).sin() / 4.0;
        assert!((p.fluence(t).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn fluence_horizon_hits_target() {
        let traj = solve_trajectory(&reference_fit(), -0.01, 1.0, 1.0).unwrap();
        let horizon = traj.expansion.fluence_horizon(REFERENCE_FLUENCE, 60.0).unwrap();
        let e = traj.expansion.fluence(horizon).unwrap();
        assert!((e - REFERENCE_FLUENCE).abs() < 1e-9);
    }

    #[test]
    fn velocity_spectrum_at_zero_frequency_is_position() {
        let traj = solve_trajectory(&reference_fit(), -0.01, 1.0, 1.3).unwrap();
        let v = traj.expansion.velocity_spectrum(1.3, 0.0);
        assert!((v.re - traj.position(1.3).unwrap()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn positive_lambda_gives_real_positive_pole() {
        let traj = solve_trajectory(&reference_fit(), 1.0, 1.0, 1.0).unwrap();
        let c = classify_poles(traj.poles());
        assert!(c.real_positive >= 1);
        assert_eq!(c.verdict, Verdict::DivergentExponential);
    }

    #[test]
    fn stable_synthetic_poles() {
        let poles = [Complex::new(-1.0, 0.0), Complex::new(-0.5, 2.0), Complex::new(-0.5, -2.0)];
        let c = classify_poles(&poles);
        assert_eq!(c.verdict, Verdict::Stable);
        assert_eq!((c.real_negative, c.complex_lhp_pairs), (1, 1));
    }

    #[test]
    fn residue_inversion_solves_the_euler_lagrange_equation() {
        let fit = reference_fit();
        for lambda in [-0.01, -0.1, 1.0] {
            let traj = solve_trajectory(&fit, lambda, 1.0, 2.0).unwrap();
            let grid = crate::scalar::linspace(0.0, 2.0, 41);
            let closed = el_residual(&traj, &KernelSource::Fitted(&fit), &grid).unwrap();
            assert!(closed < 1e-9, "λ = {lambda}: {closed}");
            let g = |t: f64| Ok(fit.eval(t));
            let numeric = el_residual(&traj, &KernelSource::Function(&g), &grid).unwrap();
            assert!(numeric < 1e-8, "λ = {lambda}: {numeric}");
        }
    }

    #[test]
    fn lagrange_ratio_tracks_initial_acceleration_share() {
        let fit = reference_fit();
        let traj = solve_trajectory(&fit, -0.01, 1.0, 5.0).unwrap();
        let ratio = lagrange_selfcheck(&traj, &KernelSource::Fitted(&fit)).unwrap();
        // the inner integral is λ(ṗ - ṗ₀); compare with that closed form
        let q = Quadrature::new().rel_tol(1e-12);
        let num = q
            .integrate(|t: f64| (traj.acceleration(t).unwrap() - 1.0).powi(2), 0.0, Bound::Finite(5.0))
            .unwrap()
            .value;
        let expected = (num / traj.fluence().unwrap()).sqrt();
        assert!((ratio - expected).abs() < 1e-6 * expected, "{ratio} vs {expected}");
        assert!((ratio - 1.0).abs() < 0.1);
    }

    #[test]
    fn lambda_grid_is_log_spaced() {
        let g = lambda_grid(-1.0f64, -1e-4, 5).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-12 && (g[4] + 1e-4).abs() < 1e-16);
        assert!((g[1] / g[0] - 0.1).abs() < 1e-12);
        assert!(lambda_grid(-1.0, 1.0, 3).is_err());
    }
}
