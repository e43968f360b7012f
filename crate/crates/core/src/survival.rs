//! Survival probability of the bound state: free (time-domain and spectral),
//! with a phonon bath (cross term, one-phonon and superposition initial
//! states), the adiabaticity map, and a discretized-continuum dynamics
//! oracle.
//!
//! Conventions: `γ_κ(t) = p(t) μ_κ e^{-iω_κ0 t}` and
//! `d_κ(t) = d_κ e^{-i(ω_κ0 - Ω_k) t}`, with the continuum sum `Σ_κ`
//! replaced by `Σ_j Δκ` on a midpoint grid.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kappa_cutoff, panel_breaks, KernelEvaluator, LeakageSpectrum};
use crate::morse::MorseModel;
use crate::numerics::quadrature::{Bound, GaussLegendre, Quadrature};
use crate::optimizer::{PoleExpansion, Trajectory};
use crate::scalar::{exp_integral, Real};

/// Allowed excursion of a second-order probability outside `[0, 1]`.
pub const PROBABILITY_SLACK: f64 = 1e-6;
/// Beyond `[-BREAKDOWN, 1 + BREAKDOWN]` the expansion is declared broken.
pub const BREAKDOWN: f64 = 0.05;
/// Default upper end of the continuum grid.
pub const DEFAULT_KAPPA_MAX: f64 = 6.0;
/// Default `lhs / rhs` ratio counted as violating adiabaticity.
pub const DEFAULT_ADIABATIC_MARGIN: f64 = 0.1;
pub const MAX_MODES: usize = 100;

/// Width of the memoised kernel panels in the time-domain survival.
const MEMO_PANEL: f64 = 0.05;
const MEMO_NODES: usize = 16;
const Q_NODES: usize = 16;

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn check_probability<T: Real>(t: T, p: T) -> Result<T> {
    let b = T::lit(BREAKDOWN);
    if !(p >= -b && p <= T::one() + b) {
        return Err(Error::RegimeBreakdown {
            t: t.as_f64(),
            value: p.as_f64(),
        });
    }
    Ok(p)
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// A real trap velocity `p(t)` on `t >= 0`.
pub trait Velocity<T: Real> {
    fn velocity(&self, t: T) -> Result<T>;

    /// `R(Δ, t) = ∫_Δ^t p(u) p(u - Δ) du`.
    fn lagged_overlap(&self, delta: T, t: T) -> Result<T> {
        if delta >= t {
            return Ok(T::zero());
        }
        let mut failure = None;
        let integrand = |u: T| match (self.velocity(u), self.velocity(u - delta)) {
            (Ok(a), Ok(b)) => a * b,
            (Err(e), _) | (_, Err(e)) => {
                failure.get_or_insert(e);
                T::zero()
            }
        };
        let v = Quadrature::new()
            .rel_tol(T::lit(1e-11))
            .abs_tol(T::lit(1e-15))
            .max_subdivisions(4000)
            .integrate(integrand, delta, Bound::Finite(t));
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(v?.value)
    }
}

impl<T: Real> Velocity<T> for PoleExpansion<T> {
    fn velocity(&self, t: T) -> Result<T> {
        PoleExpansion::velocity(self, t)
    }

    fn lagged_overlap(&self, delta: T, t: T) -> Result<T> {
        if delta >= t {
            return Ok(T::zero());
        }
        // Σ r_i r_j e^{s_i Δ} ∫₀^{t-Δ} e^{(s_i+s_j) v} dv
        let span = t - delta;
        let mut sum = czero::<T>();
        let mut largest = T::zero();
        for (&si, &ri) in self.poles.iter().zip(&self.residues) {
            let lead = ri * (si * delta).exp();
            for (&sj, &rj) in self.poles.iter().zip(&self.residues) {
                let term = lead * rj * exp_integral(si + sj, span);
                sum = sum + term;
                largest = largest.max(term.norm());
            }
        }
        let allowed = T::lit(1e-9) * largest;
        if sum.im.abs() > allowed {
            return Err(Error::Realification {
                residue: sum.im.abs().as_f64(),
                allowed: allowed.as_f64(),
            });
        }
        Ok(sum.re)
    }
}

impl<T: Real> Velocity<T> for Trajectory<T> {
    fn velocity(&self, t: T) -> Result<T> {
        self.expansion.velocity(t)
    }

    fn lagged_overlap(&self, delta: T, t: T) -> Result<T> {
        self.expansion.lagged_overlap(delta, t)
    }
}

/// Adapter for a velocity given as a closure.
pub struct FnVelocity<F>(pub F);

impl<T: Real, F: Fn(T) -> Result<T>> Velocity<T> for FnVelocity<F> {
    fn velocity(&self, t: T) -> Result<T> {
        (self.0)(t)
    }
}

/// Midpoint grid `κ_j = (j + 1/2) Δκ` on `(0, κ_max]` with the transition
/// data shared by every discretized calculation.
#[derive(Debug, Clone)]
pub struct ContinuumGrid<T> {
    pub dk: T,
    pub kappa: Vec<T>,
    /// `ω_κ0`.
    pub omega: Vec<T>,
    /// `μ_0κ = μ̃_0κ / ω_κ0` (real for real eigenfunctions).
    pub mu: Vec<T>,
}

impl<T: Real> ContinuumGrid<T> {
    pub fn new(model: &MorseModel<T>, dk: T, kappa_max: T) -> Result<Self> {
        if !(dk > T::zero()) || !(kappa_max >= dk) || !kappa_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "continuum grid needs 0 < dk <= kappa_max, got dk = {dk}, kappa_max = {kappa_max}"
            )));
        }
        let n = (kappa_max / dk).round().to_usize().unwrap_or(0).max(1);
        let mut kappa = Vec::with_capacity(n);
        let mut omega = Vec::with_capacity(n);
        let mut mu = Vec::with_capacity(n);
        for j in 0..n {
            let k = (T::from_count(j) + T::lit(0.5)) * dk;
            let me = model.matrix_element(k)?;
            kappa.push(k);
            omega.push(me.omega_k0);
            mu.push(me.mu().re);
        }
        Ok(Self { dk, kappa, omega, mu })
    }

    /// Grid on `[Δκ/2, 6]`.
    pub fn standard(model: &MorseModel<T>, dk: T) -> Result<Self> {
        Self::new(model, dk, T::lit(DEFAULT_KAPPA_MAX))
    }

    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// `γ_j(t)` for velocity `p`, without the `√Δκ` measure.
    pub fn coupling(&self, j: usize, p: T, t: T) -> Complex<T> {
        Complex::from_polar(p * self.mu[j], -self.omega[j] * t)
    }
}

/// One Bogoliubov mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononMode<T> {
    pub k: T,
    pub v: Complex<T>,
    pub omega: T,
}

impl<T: Real> PhononMode<T> {
    pub fn new(k: T, v: Complex<T>, omega: T) -> Result<Self> {
        if k == T::zero() || !k.is_finite() {
            return Err(Error::InvalidInput(format!("phonon momentum must be finite and non-zero, got {k}")));
        }
        if !(omega > T::zero()) || !omega.is_finite() {
            return Err(Error::InvalidInput(format!("phonon frequency must be positive, got {omega}")));
        }
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::InvalidInput("phonon coupling must be finite".into()));
        }
        Ok(Self { k, v, omega })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhononModeTable<T> {
    pub modes: Vec<PhononMode<T>>,
}

impl<T: Real> PhononModeTable<T> {
    pub fn new(modes: Vec<PhononMode<T>>) -> Result<Self> {
        if modes.len() > MAX_MODES {
            return Err(Error::InvalidInput(format!(
                "{} modes exceed the limit of {MAX_MODES}",
                modes.len()
            )));
        }
        Ok(Self { modes })
    }

    /// Whitespace-separated records `k ReV ImV Omega`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut modes = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::InvalidInput(format!(
                    "mode table line {}: expected 4 columns (k ReV ImV Omega), found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut vals = [T::zero(); 4];
            for (slot, f) in vals.iter_mut().zip(&fields) {
                let x: f64 = f.parse().map_err(|_| {
                    Error::InvalidInput(format!("mode table line {}: bad number {f:?}", lineno + 1))
                })?;
                *slot = T::lit(x);
            }
            let mode = PhononMode::new(vals[0], Complex::new(vals[1], vals[2]), vals[3])
                .map_err(|e| Error::InvalidInput(format!("mode table line {}: {e}", lineno + 1)))?;
            modes.push(mode);
        }
        Self::new(modes)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Co-moving coordinate range outside which `φ₀` is negligible.
fn bound_support<T: Real>(model: &MorseModel<T>) -> (T, T) {
    let two_n1 = T::lit(2.0) * model.n_param() + T::one();
    let z_max = T::lit(80.0);
    let z_min = T::lit(1e-14).powf(T::one() / model.n_param());
    (
        -(z_max / two_n1).ln() / model.width(),
        (two_n1 / z_min).ln() / model.width(),
    )
}

/// `d_κ = ∫ φ₀(q) V_k e^{ikq} φ(κ, q) dq` by adaptive quadrature.
pub fn phonon_coupling<T: Real>(model: &MorseModel<T>, mode: &PhononMode<T>, kappa: T) -> Result<Complex<T>> {
    if !(kappa > T::zero()) {
        return Err(Error::Domain(format!("continuum momentum must be > 0, got {kappa}")));
    }
    if mode.v == czero() {
        return Ok(czero());
    }
    let (lo, hi) = bound_support(model);
    let mut failure = None;
    let integrand = |q: T| match model.continuum_eigenfunction(kappa, q) {
        Ok(phi) => Complex::from_polar(model.bound_eigenfunction(q) * phi, mode.k * q),
        Err(e) => {
            failure.get_or_insert(e);
            czero()
        }
    };
    let v = Quadrature::new()
        .rel_tol(T::lit(1e-10))
        .abs_tol(T::lit(1e-13))
        .max_subdivisions(4000)
        .integrate(integrand, lo, Bound::Finite(hi));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(v?.value * mode.v)
}

/// `d_κ` for every mode on every grid point, from one tabulation of the
/// eigenfunctions on shared Gauss–Legendre nodes.
#[derive(Debug, Clone)]
pub struct PhononCouplings<T> {
    /// `d[mode][j]`.
    pub d: Vec<Vec<Complex<T>>>,
}

impl<T: Real> PhononCouplings<T> {
    pub fn new(model: &MorseModel<T>, grid: &ContinuumGrid<T>, table: &PhononModeTable<T>) -> Result<Self> {
        if table.is_empty() {
            return Ok(Self { d: Vec::new() });
        }
        let (lo, hi) = bound_support(model);
        let k_max = table.modes.iter().fold(T::zero(), |m, md| m.max(md.k.abs()));
        let kappa_max = grid.kappa.last().copied().unwrap_or(T::zero());
        let width = (T::lit(0.5) / model.width()).min(T::lit(6.0) / (kappa_max + k_max));
        let panels = ((hi - lo) / width).ceil().to_usize().unwrap_or(1).max(1);
        let rule = GaussLegendre::<T>::new(Q_NODES);
        let h = (hi - lo) / T::from_count(panels);
        let mut nodes = Vec::with_capacity(panels * Q_NODES);
        for i in 0..panels {
            let a = lo + h * T::from_count(i);
            let b = if i + 1 == panels { hi } else { a + h };
            for (q, w) in rule.mapped(a, b) {
                nodes.push((q, w * model.bound_eigenfunction(q)));
            }
        }
        let mut d = vec![Vec::with_capacity(grid.len()); table.len()];
        for &kappa in &grid.kappa {
            let phi: Vec<T> = nodes
                .iter()
                .map(|&(q, _)| model.continuum_eigenfunction(kappa, q))
                .collect::<Result<_>>()?;
            for (row, mode) in d.iter_mut().zip(&table.modes) {
                let overlap = nodes.iter().zip(&phi).fold(czero::<T>(), |acc, (&(q, w), &f)| {
                    acc + Complex::from_polar(w * f, mode.k * q)
                });
                row.push(overlap * mode.v);
            }
        }
        Ok(Self { d })
    }
}

/// `∫₀ᵗ dt₁ e^{y t₁} ∫₀^{t₁} e^{(x-y) t₂} dt₂ = (E(x) - E(y)) / (x - y)` with
/// `E(z) = (e^{zt} - 1)/z`.
fn divided_exp_integral<T: Real>(x: Complex<T>, y: Complex<T>, t: T) -> Complex<T> {
    let delta = x - y;
    if delta.norm() * t.max(T::one()) > T::lit(0.1) {
        return (exp_integral(x, t) - exp_integral(y, t)) / delta;
    }
    let rule = GaussLegendre::<T>::new(16);
    let phase = y.norm().max(x.norm()) * t;
    let panels = (phase / T::lit(2.0)).ceil().to_usize().unwrap_or(1).max(1);
    rule.integrate_composite(
        |t1: T| (y * t1).exp() * exp_integral(delta, t1),
        T::zero(),
        t,
        panels,
    )
}

/// Time-domain free survival
/// `1 - ∫₀ᵗ dt₁ ∫₀^{t₁} dt₂ p(t₁) p(t₂) K(t₁ - t₂)`, evaluated as
/// `1 - ∫₀ᵗ K(Δ) R(Δ, t) dΔ` with `K` memoised on Gauss–Legendre nodes of
/// fixed `Δ` panels.
#[derive(Debug, Clone)]
pub struct TimeDomainSurvival<T> {
    evaluator: KernelEvaluator<T>,
    panel: T,
    /// `(Δ, w, K(Δ))` per panel.
    memo: Vec<Vec<(T, T, T)>>,
}

impl<T: Real> TimeDomainSurvival<T> {
    pub fn new(model: &MorseModel<T>, t_max: T) -> Result<Self> {
        check_time(t_max)?;
        let evaluator = KernelEvaluator::new(model, t_max)?;
        let panel = T::lit(MEMO_PANEL);
        let rule = GaussLegendre::<T>::new(MEMO_NODES);
        let full = (t_max / panel).floor().to_usize().unwrap_or(0);
        let mut memo = Vec::with_capacity(full);
        for i in 0..full {
            let a = panel * T::from_count(i);
            let row = rule
                .mapped(a, a + panel)
                .map(|(x, w)| Ok((x, w, evaluator.eval(x)?)))
                .collect::<Result<Vec<_>>>()?;
            memo.push(row);
        }
        Ok(Self { evaluator, panel, memo })
    }

    pub fn t_max(&self) -> T {
        self.evaluator.t_max()
    }

    /// `K(Δ)` from the underlying evaluator.
    pub fn kernel(&self, delta: T) -> Result<T> {
        self.evaluator.eval(delta)
    }

    /// Second-order loss `1 - P_free(t)`.
    pub fn loss<V: Velocity<T> + ?Sized>(&self, p: &V, t: T) -> Result<T> {
        check_time(t)?;
        if t > self.t_max() * (T::one() + T::lit(1e-12)) {
            return Err(Error::Domain(format!("t = {t} beyond memo range {}", self.t_max())));
        }
        let full = ((t / self.panel).floor().to_usize().unwrap_or(0)).min(self.memo.len());
        let mut total = T::zero();
        for row in &self.memo[..full] {
            for &(x, w, k) in row {
                total += w * k * p.lagged_overlap(x, t)?;
            }
        }
        let start = self.panel * T::from_count(full);
        if t > start {
            let rule = GaussLegendre::<T>::new(MEMO_NODES);
            for (x, w) in rule.mapped(start, t) {
                total += w * self.evaluator.eval(x)? * p.lagged_overlap(x, t)?;
            }
        }
        Ok(total)
    }

    pub fn survival<V: Velocity<T> + ?Sized>(&self, p: &V, t: T) -> Result<T> {
        check_probability(t, T::one() - self.loss(p, t)?)
    }
}

/// Time-domain free survival for a single time.
pub fn survival_free_time<T: Real, V: Velocity<T> + ?Sized>(p: &V, model: &MorseModel<T>, t: T) -> Result<T> {
    TimeDomainSurvival::new(model, t)?.survival(p, t)
}

/// Spectral loss `(1/4π) ∫ 𝒢(ω) |p(t, ω)|² dω` over both support lobes,
/// integrated in the resonant momentum `κ(ω)`.
pub fn free_loss_spectral<T: Real>(p: &PoleExpansion<T>, spec: &LeakageSpectrum<T>, t: T) -> Result<T> {
    check_time(t)?;
    if p.is_zero() || t == T::zero() {
        return Ok(T::zero());
    }
    let model = spec.model();
    let m_star = model.m_star();
    let cutoff = kappa_cutoff(model)?;
    let breaks = panel_breaks(model, t, cutoff, T::lit(0.25));
    let quad = Quadrature::new()
        .abs_tol(T::lit(1e-13) / T::from_count(breaks.len()))
        .rel_tol(T::lit(1e-11))
        .max_subdivisions(200);
    let failure = std::cell::RefCell::new(None);
    let integrand = |kappa: T| {
        if kappa == T::zero() {
            return T::zero();
        }
        let omega = spec.gap() + kappa * kappa / (T::lit(2.0) * m_star);
        match spec.value(omega) {
            Ok(g) => {
                let lobes = p.velocity_spectrum(t, omega).norm_sqr() + p.velocity_spectrum(t, -omega).norm_sqr();
                g * lobes * kappa / m_star
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                T::zero()
            }
        }
    };
    let mut total = T::zero();
    for w in breaks.windows(2) {
        total += quad.integrate(integrand, w[0], Bound::Finite(w[1]))?.value;
        if let Some(e) = failure.borrow_mut().take() {
            return Err(e);
        }
    }
    Ok(total / (T::lit(4.0) * T::PI()))
}

pub fn survival_free_spectral<T: Real>(p: &PoleExpansion<T>, spec: &LeakageSpectrum<T>, t: T) -> Result<T> {
    check_probability(t, T::one() - free_loss_spectral(p, spec, t)?)
}

/// `Y = Σ_j Δκ d_j μ_j ∫₀ᵗ dt₁ e^{-i(ω_j - Ω)t₁} ∫₀^{t₁} p(t₂) e^{iω_j t₂} dt₂`,
/// the amplitude transferred into the one-phonon bound state.
pub fn cross_amplitude<T: Real>(
    p: &PoleExpansion<T>,
    grid: &ContinuumGrid<T>,
    d: &[Complex<T>],
    phonon_omega: T,
    t: T,
) -> Result<Complex<T>> {
    check_time(t)?;
    if d.len() != grid.len() {
        return Err(Error::InvalidInput("coupling row does not match the continuum grid".into()));
    }
    let i_omega = Complex::new(T::zero(), phonon_omega);
    let mut total = czero::<T>();
    for j in 0..grid.len() {
        if d[j] == czero() {
            continue;
        }
        let y = Complex::new(T::zero(), phonon_omega - grid.omega[j]);
        let inner = p
            .poles
            .iter()
            .zip(&p.residues)
            .fold(czero::<T>(), |acc, (&s, &r)| acc + r * divided_exp_integral(s + i_omega, y, t));
        total = total + d[j] * (grid.mu[j] * grid.dk) * inner;
    }
    Ok(total)
}

/// `|−i ∫₀ᵗ∫₀^{t₁} C^k|²`, never negative.
pub fn cross_term<T: Real>(
    p: &PoleExpansion<T>,
    grid: &ContinuumGrid<T>,
    d: &[Complex<T>],
    phonon_omega: T,
    t: T,
) -> Result<T> {
    Ok(cross_amplitude(p, grid, d, phonon_omega, t)?.norm_sqr())
}

/// Pure phonon leakage `Σ_j Δκ |d_j|² · 4 sin²(ν_j t/2) / ν_j²`,
/// `ν_j = ω_j - Ω`; independent of the trajectory.
pub fn phonon_loss<T: Real>(grid: &ContinuumGrid<T>, d: &[Complex<T>], phonon_omega: T, t: T) -> Result<T> {
    check_time(t)?;
    let mut total = T::zero();
    for j in 0..grid.len() {
        let nu = grid.omega[j] - phonon_omega;
        // |∫₀ᵗ e^{-iνs} ds|²
        let window = exp_integral(Complex::new(T::zero(), -nu), t).norm_sqr();
        total += grid.dk * d[j].norm_sqr() * window;
    }
    Ok(total)
}

/// Per-channel contributions at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalTerms<T> {
    /// `1 - P_free` from the time-domain formula.
    pub non_adiabatic: T,
    /// Pure phonon loss of mode `k₀` (zero without a selected mode).
    pub phonon: T,
    /// `Σ_k |Y_k|²`, the vacuum-state enhancement.
    pub cross: T,
    /// `2 Im Y_{k₀}`, the interference term of the superposition state.
    pub interference: T,
}

/// Survival probabilities on a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct SurvivalSeries<T> {
    pub times: Vec<T>,
    pub p_free: Vec<T>,
    pub p_free_spectral: Vec<T>,
    /// Vacuum initial state with the bath: `P_free + Σ_k |Y_k|²`.
    pub p_total: Option<Vec<T>>,
    pub p_one_phonon: Option<Vec<T>>,
    pub p_superposition: Option<Vec<T>>,
    pub terms: Vec<SurvivalTerms<T>>,
}

/// Everything needed to evaluate survival for a given trap and bath.
#[derive(Debug, Clone)]
pub struct SurvivalModel<T> {
    pub model: MorseModel<T>,
    pub spectrum: LeakageSpectrum<T>,
    pub time_domain: TimeDomainSurvival<T>,
    pub grid: ContinuumGrid<T>,
    pub modes: PhononModeTable<T>,
    pub couplings: PhononCouplings<T>,
}

impl<T: Real> SurvivalModel<T> {
    pub fn new(model: &MorseModel<T>, t_max: T, dk: T, modes: PhononModeTable<T>) -> Result<Self> {
        let grid = ContinuumGrid::standard(model, dk)?;
        let couplings = PhononCouplings::new(model, &grid, &modes)?;
        Ok(Self {
            model: *model,
            spectrum: LeakageSpectrum::new(model),
            time_domain: TimeDomainSurvival::new(model, t_max)?,
            grid,
            modes,
            couplings,
        })
    }

    fn mode(&self, k0: usize) -> Result<(&PhononMode<T>, &[Complex<T>])> {
        match (self.modes.modes.get(k0), self.couplings.d.get(k0)) {
            (Some(m), Some(d)) => Ok((m, d)),
            _ => Err(Error::InvalidInput(format!(
                "mode index {k0} out of range for {} modes",
                self.modes.len()
            ))),
        }
    }

    pub fn free_time(&self, p: &PoleExpansion<T>, t: T) -> Result<T> {
        self.time_domain.survival(p, t)
    }

    pub fn free_spectral(&self, p: &PoleExpansion<T>, t: T) -> Result<T> {
        survival_free_spectral(p, &self.spectrum, t)
    }

    pub fn cross_term(&self, p: &PoleExpansion<T>, k: usize, t: T) -> Result<T> {
        let (mode, d) = self.mode(k)?;
        cross_term(p, &self.grid, d, mode.omega, t)
    }

    /// `P_n = P_free + Σ_k cross_term_k` for the vacuum initial state.
    pub fn total(&self, p: &PoleExpansion<T>, t: T) -> Result<T> {
        let mut enhancement = T::zero();
        for k in 0..self.modes.len() {
            enhancement += self.cross_term(p, k, t)?;
        }
        check_probability(t, T::one() - self.time_domain.loss(p, t)? + enhancement)
    }

    pub fn phonon_loss(&self, k0: usize, t: T) -> Result<T> {
        let (mode, d) = self.mode(k0)?;
        phonon_loss(&self.grid, d, mode.omega, t)
    }

    /// Initial state `|n; 1_{k₀}⟩`: `1 - L_na - L_ph`.
    pub fn one_phonon(&self, p: &PoleExpansion<T>, k0: usize, t: T) -> Result<T> {
        let ph = self.phonon_loss(k0, t)?;
        check_probability(t, T::one() - self.time_domain.loss(p, t)? - ph)
    }

    /// Initial state `(|n; 0⟩ + |n; 1_{k₀}⟩)/√2`:
    /// `1 - L_na - L_ph/2 + 2 Im Y_{k₀}`.
    pub fn superposition(&self, p: &PoleExpansion<T>, k0: usize, t: T) -> Result<T> {
        let (mode, d) = self.mode(k0)?;
        let y = cross_amplitude(p, &self.grid, d, mode.omega, t)?;
        let ph = phonon_loss(&self.grid, d, mode.omega, t)?;
        let value = T::one() - self.time_domain.loss(p, t)? - ph / T::lit(2.0) + T::lit(2.0) * y.im;
        check_probability(t, value)
    }

    /// Survival on `times`; phonon channels are included when modes are
    /// present, and the `k₀`-resolved states when `k0` is given.
    pub fn series(&self, p: &PoleExpansion<T>, times: &[T], k0: Option<usize>) -> Result<SurvivalSeries<T>> {
        if let Some(k) = k0 {
            self.mode(k)?;
        }
        let with_modes = !self.modes.is_empty();
        let mut out = SurvivalSeries {
            times: times.to_vec(),
            p_free: Vec::with_capacity(times.len()),
            p_free_spectral: Vec::with_capacity(times.len()),
            p_total: with_modes.then(Vec::new),
            p_one_phonon: k0.map(|_| Vec::new()),
            p_superposition: k0.map(|_| Vec::new()),
            terms: Vec::with_capacity(times.len()),
        };
        for &t in times {
            let na = self.time_domain.loss(p, t)?;
            out.p_free.push(check_probability(t, T::one() - na)?);
            out.p_free_spectral.push(self.free_spectral(p, t)?);
            let mut terms = SurvivalTerms {
                non_adiabatic: na,
                phonon: T::zero(),
                cross: T::zero(),
                interference: T::zero(),
            };
            for k in 0..self.modes.len() {
                terms.cross += self.cross_term(p, k, t)?;
            }
            if let Some(v) = out.p_total.as_mut() {
                v.push(check_probability(t, T::one() - na + terms.cross)?);
            }
            if let Some(k) = k0 {
                let (mode, d) = self.mode(k)?;
                terms.phonon = phonon_loss(&self.grid, d, mode.omega, t)?;
                terms.interference = T::lit(2.0) * cross_amplitude(p, &self.grid, d, mode.omega, t)?.im;
                let one = T::one() - na - terms.phonon;
                let sup = T::one() - na - terms.phonon / T::lit(2.0) + terms.interference;
                if let Some(v) = out.p_one_phonon.as_mut() {
                    v.push(check_probability(t, one)?);
                }
                if let Some(v) = out.p_superposition.as_mut() {
                    v.push(check_probability(t, sup)?);
                }
            }
            out.terms.push(terms);
        }
        Ok(out)
    }
}

/// One cell of the adiabaticity map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticityCell<T> {
    pub tau: T,
    pub kappa: T,
    /// `|p(τ) μ_0κ|`.
    pub lhs: T,
    /// `|ω_κ0|`.
    pub rhs: T,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdiabaticityReport<T> {
    pub margin: T,
    pub cells: Vec<AdiabaticityCell<T>>,
    /// Smallest and largest `κ` with a violation anywhere in time.
    pub violated_band: Option<(T, T)>,
}

impl<T: Real> AdiabaticityReport<T> {
    pub fn violation_count(&self) -> usize {
        self.cells.iter().filter(|c| c.violated).count()
    }
}

/// Flags `(τ, κ)` where `|p(τ) μ_0κ| >= margin · |ω_κ0|`.
pub fn adiabaticity_report<T: Real, V: Velocity<T> + ?Sized>(
    p: &V,
    model: &MorseModel<T>,
    kappa_grid: &[T],
    t_grid: &[T],
    margin: T,
) -> Result<AdiabaticityReport<T>> {
    let elements = kappa_grid
        .iter()
        .map(|&k| model.matrix_element(k))
        .collect::<Result<Vec<_>>>()?;
    let velocities = t_grid.iter().map(|&t| p.velocity(t)).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(kappa_grid.len() * t_grid.len());
    let mut band: Option<(T, T)> = None;
    for (&tau, &v) in t_grid.iter().zip(&velocities) {
        for me in &elements {
            let lhs = (v * me.mu().norm()).abs();
            let rhs = me.omega_k0.abs();
            let violated = lhs >= margin * rhs;
            if violated {
                band = Some(match band {
                    None => (me.kappa, me.kappa),
                    Some((lo, hi)) => (lo.min(me.kappa), hi.max(me.kappa)),
                });
            }
            cells.push(AdiabaticityCell {
                tau,
                kappa: me.kappa,
                lhs,
                rhs,
                violated,
            });
        }
    }
    Ok(AdiabaticityReport {
        margin,
        cells,
        violated_band: band,
    })
}

/// Result of a discretized-continuum run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizedRun<T> {
    /// `|α₀(t)|²`.
    pub survival: T,
    /// `|α₀|² + Σ |β_j|²`.
    pub norm: T,
    pub steps: usize,
}

/// Integrates `α̇ = -Σ_j γ_j β_j`, `β̇_j = γ_j* α` with
/// `γ_j = p(t) μ_j e^{-iω_j t} √Δκ` from `α = 1`, `β = 0` using an adaptive
/// Dormand–Prince 5(4) scheme.
pub fn simulate_discretized_free<T: Real, V: Velocity<T> + ?Sized>(
    grid: &ContinuumGrid<T>,
    p: &V,
    t: T,
    rel_tol: T,
) -> Result<DiscretizedRun<T>> {
    check_time(t)?;
    let n = grid.len() + 1;
    let sqrt_dk = grid.dk.sqrt();
    let rhs = |time: T, y: &[Complex<T>], out: &mut [Complex<T>]| -> Result<()> {
        let v = p.velocity(time)?;
        let mut da = czero::<T>();
        for j in 0..grid.len() {
            let g = grid.coupling(j, v, time) * sqrt_dk;
            da = da - g * y[j + 1];
            out[j + 1] = g.conj() * y[0];
        }
        out[0] = da;
        Ok(())
    };
    let mut y = vec![czero::<T>(); n];
    y[0] = Complex::new(T::one(), T::zero());
    let steps = dormand_prince(rhs, &mut y, t, rel_tol)?;
    let survival = y[0].norm_sqr();
    let norm = y.iter().map(|z| z.norm_sqr()).sum();
    Ok(DiscretizedRun { survival, norm, steps })
}

/// In-place adaptive integration of `y' = f(t, y)` over `[0, t_end]`.
fn dormand_prince<T: Real, F>(f: F, y: &mut [Complex<T>], t_end: T, rel_tol: T) -> Result<usize>
where
    F: Fn(T, &[Complex<T>], &mut [Complex<T>]) -> Result<()>,
{
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    // fifth-order weights minus embedded fourth-order weights
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    if t_end == T::zero() {
        return Ok(0);
    }
    let n = y.len();
    let abs_tol = rel_tol * T::lit(1e-2);
    let mut k = vec![vec![czero::<T>(); n]; 7];
    let mut stage = vec![czero::<T>(); n];
    let mut t = T::zero();
    let mut h = t_end.min(T::lit(0.01));
    let h_min = T::lit(1e-12) * t_end.max(T::one());
    let mut steps = 0usize;
    f(t, y, &mut k[0])?;
    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (m, km) in k.iter().enumerate().take(s) {
                    let a = A[s][m];
                    if a != 0.0 {
                        acc = acc + km[i] * (h * T::lit(a));
                    }
                }
                stage[i] = acc;
            }
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            f(t + h * T::lit(C[s]), &stage, &mut tail[0])?;
        }
        // stage now holds the fifth-order solution (FSAL row)
        let mut err = T::zero();
        for i in 0..n {
            let mut e = czero::<T>();
            for (m, km) in k.iter().enumerate() {
                if E[m] != 0.0 {
                    e = e + km[i] * T::lit(E[m]);
                }
            }
            let scale = abs_tol + rel_tol * y[i].norm().max(stage[i].norm());
            err = err.max((e * h).norm() / scale);
        }
        if err <= T::one() {
            t += h;
            y.copy_from_slice(&stage);
            k.swap(0, 6);
            steps += 1;
        }
        let factor = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
        };
        h = h * factor;
        if h < h_min && t < t_end {
            return Err(Error::StepSize { t: t.as_f64() });
        }
        if steps > 10_000_000 {
            return Err(Error::StepSize { t: t.as_f64() });
        }
    }
    Ok(steps)
}
