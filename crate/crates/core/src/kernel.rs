//! Memory kernel `K(t) = 2 Re Φ(t) = ∫₀^∞ 2 a_κ cos(ω_κ0 t) dκ` and its
//! Fourier transform, the leakage spectrum `𝒢(ω)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morse::MorseModel;
use crate::numerics::quadrature::{Bound, GaussLegendre, Quadrature};
use crate::scalar::Real;

/// Smallest number of samples accepted by [`sample_kernel`].
pub const MIN_SAMPLES: usize = 16;

/// Absolute accuracy target for kernel values.
pub const KERNEL_TOL: f64 = 1e-11;

/// Momentum beyond which `a_κ` is below `1e-16` of its peak.
///
/// `a_κ` decays like `e^{-πκ}` times a power, so a coarse outward scan is
/// enough.
pub fn kappa_cutoff<T: Real>(model: &MorseModel<T>) -> Result<T> {
    let mut peak = T::zero();
    let mut kappa = T::lit(0.25);
    let step = T::lit(0.25);
    while kappa < T::lit(60.0) {
        let a = model.a_coefficient(kappa)?;
        peak = peak.max(a);
        if kappa >= T::lit(4.0) && a <= T::lit(1e-16) * peak {
            return Ok(kappa);
        }
        kappa += step;
    }
    Ok(kappa)
}

/// `K(t)` by adaptive quadrature over `κ`, split into panels at the
/// half-periods of `cos(κ² t / 2m*)`.
pub fn memory_kernel<T: Real>(model: &MorseModel<T>, t: T) -> Result<T> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("kernel time must be finite, got {t}")));
    }
    let t = t.abs();
    let cutoff = kappa_cutoff(model)?;
    let breaks = panel_breaks(model, t, cutoff, T::one());
    let tol = T::lit(KERNEL_TOL) / T::from_count(breaks.len());
    let quad = Quadrature::new().abs_tol(tol).rel_tol(T::zero());
    let mut failure = None;
    let mut total = T::zero();
    for w in breaks.windows(2) {
        let integrand = |kappa: T| match model.matrix_element(kappa) {
            Ok(me) => T::lit(2.0) * me.a_kappa * (me.omega_k0 * t).cos(),
            Err(e) => {
                failure.get_or_insert(e);
                T::zero()
            }
        };
        let piece = quad.integrate(integrand, w[0], Bound::Finite(w[1]));
        if let Some(e) = failure.take() {
            return Err(e);
        }
        total += piece?.value;
    }
    Ok(total)
}

/// Panel edges on `[0, cutoff]`: half-periods of the `κ`-dependent phase at
/// time `t`, never wider than `max_width`.
pub(crate) fn panel_breaks<T: Real>(model: &MorseModel<T>, t: T, cutoff: T, max_width: T) -> Vec<T> {
    let two_m = T::lit(2.0) * model.m_star();
    let mut breaks = vec![T::zero()];
    let mut k = T::zero();
    while k < cutoff {
        let mut next = k + max_width;
        if t > T::zero() {
            // phase κ² t / 2m* crosses jπ at κ_j = sqrt(2m* jπ / t)
            let mut j = (k * k * t / (two_m * T::PI())).floor() + T::one();
            let mut half_period = (two_m * j * T::PI() / t).sqrt();
            // k itself may sit on a crossing up to rounding
            if half_period <= k * (T::one() + T::lit(64.0) * T::epsilon()) {
                j += T::one();
                half_period = (two_m * j * T::PI() / t).sqrt();
            }
            next = next.min(half_period);
        }
        k = next.min(cutoff);
        breaks.push(k);
    }
    breaks
}

/// Fast evaluator of `K(t)` for `|t| <= t_max`.
///
/// `a_κ` is tabulated once on Gauss–Legendre nodes laid out over the
/// half-periods of the phase at `t_max`; each evaluation is then a weighted
/// cosine sum.
#[derive(Debug, Clone)]
pub struct KernelEvaluator<T> {
    t_max: T,
    /// (weight · 2 a_κ, ω_κ0)
    nodes: Vec<(T, T)>,
}

impl<T: Real> KernelEvaluator<T> {
    pub fn new(model: &MorseModel<T>, t_max: T) -> Result<Self> {
        if !(t_max >= T::zero()) || !t_max.is_finite() {
            return Err(Error::InvalidInput(format!("t_max must be finite and >= 0, got {t_max}")));
        }
        let cutoff = kappa_cutoff(model)?;
        let breaks = panel_breaks(model, t_max, cutoff, T::lit(0.25));
        let rule = GaussLegendre::<T>::new(10);
        let mut nodes = Vec::with_capacity(breaks.len() * rule.len());
        for w in breaks.windows(2) {
            for (kappa, weight) in rule.mapped(w[0], w[1]) {
                let me = model.matrix_element(kappa)?;
                nodes.push((weight * T::lit(2.0) * me.a_kappa, me.omega_k0));
            }
        }
        Ok(Self { t_max, nodes })
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    /// `K(t)`; fails outside `[-t_max, t_max]`, where the node layout no longer
    /// resolves the oscillation.
    pub fn eval(&self, t: T) -> Result<T> {
        if !(t.abs() <= self.t_max * (T::one() + T::lit(1e-12))) {
            return Err(Error::Domain(format!(
                "kernel evaluator built for |t| <= {}, asked for {t}",
                self.t_max
            )));
        }
        Ok(self.nodes.iter().map(|&(w, om)| w * (om * t).cos()).sum())
    }
}

/// Uniformly sampled kernel on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSamples<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub quadrature_tol: T,
}

impl<T: Real> KernelSamples<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn spacing(&self) -> T {
        self.times[1] - self.times[0]
    }

    /// Restricts to samples with `t_min <= t <= t_max`.
    pub fn window(&self, t_min: T, t_max: T) -> KernelSamples<T> {
        let (times, values) = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(&t, _)| t >= t_min && t <= t_max)
            .map(|(&t, &v)| (t, v))
            .unzip();
        KernelSamples {
            times,
            values,
            quadrature_tol: self.quadrature_tol,
        }
    }
}

/// Samples `K` at `n` evenly spaced times from `0` to `t_max` inclusive.
pub fn sample_kernel<T: Real>(model: &MorseModel<T>, t_max: T, n: usize) -> Result<KernelSamples<T>> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "kernel sampling needs at least {MIN_SAMPLES} points, got {n}"
        )));
    }
    if !(t_max > T::zero()) || !t_max.is_finite() {
        return Err(Error::InvalidInput(format!("t_max must be positive, got {t_max}")));
    }
    let evaluator = KernelEvaluator::new(model, t_max)?;
    let times = crate::scalar::linspace(T::zero(), t_max, n);
    let values = times
        .iter()
        .map(|&t| evaluator.eval(t))
        .collect::<Result<Vec<T>>>()?;
    Ok(KernelSamples {
        times,
        values,
        quadrature_tol: T::lit(KERNEL_TOL),
    })
}

/// Leakage spectrum of the non-adiabatic coupling.
///
/// `value` is the Fourier transform `𝒢(ω) = ∫ e^{iωt} K(t) dt
/// = 2π sqrt(m*/2) a(κ) / sqrt(|ω| - |ω₀|)` with `κ = sqrt(2m*(|ω| - |ω₀|))`,
/// and zero inside the gap. `density` is `𝒢 / 2π`, the same curve without
/// the transform's `2π`.
#[derive(Debug, Clone, Copy)]
pub struct LeakageSpectrum<T> {
    model: MorseModel<T>,
    gap: T,
}

impl<T: Real> LeakageSpectrum<T> {
    pub fn new(model: &MorseModel<T>) -> Self {
        Self {
            model: *model,
            gap: model.gap(),
        }
    }

    pub fn gap(&self) -> T {
        self.gap
    }

    pub fn model(&self) -> &MorseModel<T> {
        &self.model
    }

    /// `sqrt(m*/2)`, the Jacobian prefactor of `dκ/dω`.
    pub fn prefactor(&self) -> T {
        (self.model.m_star() / T::lit(2.0)).sqrt()
    }

    /// Continuum momentum resonant with `|ω|`, if outside the gap.
    pub fn resonant_kappa(&self, omega: T) -> Option<T> {
        let excess = omega.abs() - self.gap;
        (excess > T::zero()).then(|| (T::lit(2.0) * self.model.m_star() * excess).sqrt())
    }

    /// `𝒢(ω) / 2π`.
    pub fn density(&self, omega: T) -> Result<T> {
        let Some(kappa) = self.resonant_kappa(omega) else {
            return Ok(T::zero());
        };
        let excess = omega.abs() - self.gap;
        Ok(self.prefactor() * self.model.a_coefficient(kappa)? / excess.sqrt())
    }

    /// `𝒢(ω)`.
    pub fn value(&self, omega: T) -> Result<T> {
        Ok(T::lit(2.0) * T::PI() * self.density(omega)?)
    }
}

/// Tapered Fourier transform `∫ e^{iωt} K(t) w(t) dt` of a kernel sampled on
/// `[0, T]`, using evenness of `K` and a Hann taper `w` that falls to zero at
/// `|t| = T`.
pub fn windowed_transform<T: Real>(samples: &KernelSamples<T>, omega: T) -> T {
    let n = samples.len();
    let h = samples.spacing();
    let span = samples.times[n - 1];
    let mut acc = T::zero();
    for (i, (&t, &k)) in samples.times.iter().zip(&samples.values).enumerate() {
        let taper = T::lit(0.5) * (T::one() + (T::PI() * t / span).cos());
        // trapezoid over [0, T], doubled for the mirrored half
        let weight = if i == 0 || i + 1 == n { T::lit(0.5) } else { T::one() };
        acc += weight * k * taper * (omega * t).cos();
    }
    T::lit(2.0) * h * acc
}
