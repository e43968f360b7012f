//! Damped-oscillator model of the memory kernel,
//! `g(t) = [a1 e^{-b1 t} cos(w1 t) + c1 e^{-d1 t} sin(w2 t)] u(t)`,
//! and its exact Laplace transform.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelSamples;
use crate::numerics::least_squares::LevenbergMarquardt;
use crate::numerics::polynomial::Polynomial;
use crate::scalar::Real;

/// Minimum number of samples in the fit window.
pub const MIN_FIT_SAMPLES: usize = 50;

/// Fit parameters quoted for the standard trap.
pub const REFERENCE_PARAMS: [f64; 6] = [0.5383, 0.5831, -0.1054, 0.0576, -0.3782, 0.14];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Cos,
    Sin,
}

/// One term `amplitude · e^{-decay t} · {cos, sin}(frequency t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscTerm<T> {
    pub amplitude: T,
    pub decay: T,
    pub frequency: T,
    pub phase: Phase,
}

impl<T: Real> OscTerm<T> {
    pub fn eval(&self, t: T) -> T {
        if t < T::zero() {
            return T::zero();
        }
        let osc = match self.phase {
            Phase::Cos => (self.frequency * t).cos(),
            Phase::Sin => (self.frequency * t).sin(),
        };
        self.amplitude * (-self.decay * t).exp() * osc
    }

    /// `(numerator, denominator)` of the term's Laplace transform.
    fn laplace_parts(&self) -> (Vec<T>, Vec<T>) {
        let (d, w) = (self.decay, self.frequency);
        // (s + d)² + w²
        let den = vec![d * d + w * w, T::lit(2.0) * d, T::one()];
        let num = match self.phase {
            Phase::Cos => vec![self.amplitude * d, self.amplitude],
            Phase::Sin => vec![self.amplitude * w],
        };
        (num, den)
    }
}

/// Sum of damped-oscillator terms, the general form of the kernel model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampedOscSeries<T> {
    pub terms: Vec<OscTerm<T>>,
}

impl<T: Real> DampedOscSeries<T> {
    pub fn eval(&self, t: T) -> T {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Flattens to `[amplitude, decay, frequency]` per term.
    pub fn params(&self) -> Vec<T> {
        self.terms
            .iter()
            .flat_map(|t| [t.amplitude, t.decay, t.frequency])
            .collect()
    }

    pub fn with_params(&self, p: &[T]) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .zip(p.chunks(3))
                .map(|(t, c)| OscTerm {
                    amplitude: c[0],
                    decay: c[1],
                    frequency: c[2],
                    phase: t.phase,
                })
                .collect(),
        }
    }

    /// Exact Laplace transform over the common denominator.
    pub fn laplace(&self) -> Result<RationalLaplace<T>> {
        if self.terms.is_empty() {
            return Err(Error::InvalidInput("empty oscillator series".into()));
        }
        let parts: Vec<(Polynomial<T>, Polynomial<T>)> = self
            .terms
            .iter()
            .map(|t| {
                let (n, d) = t.laplace_parts();
                Ok((Polynomial::new_or_zero(n), Polynomial::new(d)?))
            })
            .collect::<Result<_>>()?;
        let mut denominator = Polynomial::constant(T::one())?;
        for (_, d) in &parts {
            denominator = &denominator * d;
        }
        let mut acc = vec![T::zero(); denominator.degree()];
        for (i, (n, _)) in parts.iter().enumerate() {
            let mut prod = n.clone();
            for (j, (_, d)) in parts.iter().enumerate() {
                if i != j {
                    prod = &prod * d;
                }
            }
            for (k, &c) in prod.coeffs().iter().enumerate() {
                acc[k] += c;
            }
        }
        Ok(RationalLaplace {
            numerator: Polynomial::new_or_zero(acc),
            denominator,
        })
    }
}

/// Single-term fit in the six named parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampedOscFit<T> {
    pub a1: T,
    pub b1: T,
    pub c1: T,
    pub d1: T,
    pub w1: T,
    pub w2: T,
    pub residual_norm: T,
    pub fit_window: (T, T),
}

impl<T: Real> DampedOscFit<T> {
    /// Builds a fit record from parameters, with no residual information.
    pub fn from_params(p: [T; 6]) -> Self {
        Self {
            a1: p[0],
            b1: p[1],
            c1: p[2],
            d1: p[3],
            w1: p[4],
            w2: p[5],
            residual_norm: T::zero(),
            fit_window: (T::zero(), T::zero()),
        }
    }

    /// The quoted parameters for the standard trap.
    pub fn reference() -> Self {
        Self::from_params(REFERENCE_PARAMS.map(T::lit))
    }

    pub fn params(&self) -> [T; 6] {
        [self.a1, self.b1, self.c1, self.d1, self.w1, self.w2]
    }

    pub fn series(&self) -> DampedOscSeries<T> {
        DampedOscSeries {
            terms: vec![
                OscTerm {
                    amplitude: self.a1,
                    decay: self.b1,
                    frequency: self.w1,
                    phase: Phase::Cos,
                },
                OscTerm {
                    amplitude: self.c1,
                    decay: self.d1,
                    frequency: self.w2,
                    phase: Phase::Sin,
                },
            ],
        }
    }

    /// `g(t)`, zero for `t < 0`.
    pub fn eval(&self, t: T) -> T {
        eval_six(&self.params(), t)
    }

    /// Residual norm `sqrt(Σ (g(t_i) - K_i)²)` on the samples inside `window`.
    pub fn residual_on(&self, samples: &KernelSamples<T>, window: (T, T)) -> T {
        let w = samples.window(window.0, window.1);
        w.times
            .iter()
            .zip(&w.values)
            .map(|(&t, &v)| {
                let r = self.eval(t) - v;
                r * r
            })
            .sum::<T>()
            .sqrt()
    }
}

fn eval_six<T: Real>(p: &[T], t: T) -> T {
    if t < T::zero() {
        return T::zero();
    }
    p[0] * (-p[1] * t).exp() * (p[4] * t).cos() + p[2] * (-p[3] * t).exp() * (p[5] * t).sin()
}

/// `G(s) = numerator(s) / denominator(s)` with real coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalLaplace<T> {
    pub numerator: Polynomial<T>,
    pub denominator: Polynomial<T>,
}

impl<T: Real> RationalLaplace<T> {
    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        self.numerator.eval_complex(s) / self.denominator.eval_complex(s)
    }

    /// `lim s G(s)` as `s → ∞`, equal to `g(0⁺)`.
    pub fn initial_value(&self) -> T {
        if self.numerator.is_zero() || self.numerator.degree() + 1 != self.denominator.degree() {
            return T::zero();
        }
        self.numerator.leading() / self.denominator.leading()
    }
}

/// `G(s)` for a single-term fit.
pub fn laplace_of_fit<T: Real>(fit: &DampedOscFit<T>) -> RationalLaplace<T> {
    fit.series()
        .laplace()
        .expect("two-term series has a nonzero denominator")
}

/// Starting point from the sampled kernel shape.
///
/// `a1` is the kernel at the first sample, `b1` the inverse of the time at
/// which the envelope of local maxima of `|K|` falls to `1/e` of that, `w1`
/// is `π` over the spacing of the first two zero crossings, `c1 = 0`,
/// `d1 = b1 / 10` and `w2 = w1 / 2`.
pub fn heuristic_init<T: Real>(samples: &KernelSamples<T>) -> [T; 6] {
    let (times, values) = (&samples.times, &samples.values);
    let a1 = values[0];
    let span = times[times.len() - 1] - times[0];

    let target = a1.abs() / T::lit(std::f64::consts::E);
    let mut peaks = vec![(times[0], values[0].abs())];
    for i in 1..values.len().saturating_sub(1) {
        let (l, c, r) = (values[i - 1].abs(), values[i].abs(), values[i + 1].abs());
        if c >= l && c > r {
            peaks.push((times[i], c));
        }
    }
    let mut decay_time = span;
    for w in peaks.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        if v1 <= target && v0 > target && v1 > T::zero() {
            // log-linear interpolation between envelope points
            let frac = (v0 / target).ln() / (v0 / v1).ln();
            decay_time = t0 + frac * (t1 - t0);
            break;
        }
    }
    let b1 = T::one() / decay_time.max(T::epsilon());

    let mut crossings = Vec::new();
    for i in 1..values.len() {
        let (v0, v1) = (values[i - 1], values[i]);
        if v0 != T::zero() && (v0 > T::zero()) != (v1 > T::zero()) {
            let frac = v0 / (v0 - v1);
            crossings.push(times[i - 1] + frac * (times[i] - times[i - 1]));
        }
    }
    let w1 = match crossings.as_slice() {
        [first, second, ..] => T::PI() / (*second - *first),
        [first] => T::PI() / (T::lit(2.0) * *first),
        [] => T::PI() / span,
    };
    [a1, b1, T::zero(), b1 / T::lit(10.0), w1, w1 / T::lit(2.0)]
}

/// Least-squares fit of `g(t)` to the kernel samples inside `window`.
///
/// With `init = None` the starting point comes from [`heuristic_init`]. The
/// sign of each frequency is a gauge (`w1` enters through a cosine, `w2`
/// together with `c1`), so the result is normalised to `w1, w2 >= 0`.
pub fn fit_kernel<T: Real>(
    samples: &KernelSamples<T>,
    window: (T, T),
    init: Option<[T; 6]>,
) -> Result<DampedOscFit<T>> {
    let data = samples.window(window.0, window.1);
    if data.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "fit needs at least {MIN_FIT_SAMPLES} samples in the window, got {}",
            data.len()
        )));
    }
    if data.values.iter().all(|v| *v == T::zero()) {
        // nothing to fit: zero amplitudes, decay rates are placeholders
        return Ok(DampedOscFit {
            a1: T::zero(),
            b1: T::one(),
            c1: T::zero(),
            d1: T::one(),
            w1: T::zero(),
            w2: T::zero(),
            residual_norm: T::zero(),
            fit_window: window,
        });
    }
    let start = init.unwrap_or_else(|| heuristic_init(&data));
    let points: Vec<(T, T)> = data.times.iter().copied().zip(data.values.iter().copied()).collect();
    let report = LevenbergMarquardt::default()
        .fit(|p: &[T], t: T| eval_six(p, t), &points, &start)
        .map_err(|e| Error::FitDivergence(e.to_string()))?;
    let p = &report.params;
    if p.iter().any(|v| !v.is_finite()) || !report.residual_norm.is_finite() {
        return Err(Error::FitDivergence("non-finite parameters".into()));
    }
    if !report.converged {
        return Err(Error::FitDivergence(format!(
            "no convergence after {} iterations",
            report.iterations
        )));
    }
    let (b1, d1) = (p[1], p[3]);
    if !(b1 > T::zero()) || !(d1 > T::zero()) {
        return Err(Error::AcausalFit {
            b1: b1.as_f64(),
            d1: d1.as_f64(),
        });
    }
    let span = data.times[data.len() - 1] - data.times[0];
    let fastest = p[4].abs().max(p[5].abs());
    if fastest * span < T::lit(4.0) * T::PI() {
        return Err(Error::InvalidInput(format!(
            "fit window of length {span} spans fewer than two periods of the fitted oscillation"
        )));
    }
    let (c1, w2) = if p[5] < T::zero() { (-p[2], -p[5]) } else { (p[2], p[5]) };
    Ok(DampedOscFit {
        a1: p[0],
        b1,
        c1,
        d1,
        w1: p[4].abs(),
        w2,
        residual_norm: report.residual_norm,
        fit_window: window,
    })
}
