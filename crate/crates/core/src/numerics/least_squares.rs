//! Levenberg–Marquardt nonlinear least squares with a finite-difference
//! Jacobian.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Outcome of a least-squares run.
#[derive(Debug, Clone)]
pub struct FitReport<T> {
    pub params: Vec<T>,
    /// `sqrt(Σ r_i²)` at `params`.
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after every accepted step, starting with the initial one.
    pub history: Vec<T>,
}

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct LevenbergMarquardt<T> {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub cost_tol: T,
    /// Stop when the step is this small relative to the parameters.
    pub step_tol: T,
    pub initial_damping: T,
}

impl<T: Real> Default for LevenbergMarquardt<T> {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            cost_tol: T::lit(1e-15).max(T::epsilon()),
            step_tol: T::lit(1e-13).max(T::epsilon()),
            initial_damping: T::lit(1e-3),
        }
    }
}

fn relative_step<T: Real>() -> T {
    // central differences: 1e-6 in double precision, coarser when eps is large
    T::lit(1e-6).max(T::epsilon().cbrt())
}

impl<T: Real> LevenbergMarquardt<T> {
    /// Minimises `Σ (model(params, t_i) - y_i)²` starting from `init`.
    pub fn fit<F>(&self, model: F, data: &[(T, T)], init: &[T]) -> Result<FitReport<T>>
    where
        F: Fn(&[T], T) -> T,
    {
        if data.is_empty() {
            return Err(Error::InvalidInput("least squares needs data".into()));
        }
        if init.is_empty() {
            return Err(Error::InvalidInput("least squares needs parameters".into()));
        }
        let residuals = |p: &[T]| -> Vec<T> {
            data.iter().map(|&(t, y)| model(p, t) - y).collect()
        };
        let cost_of = |r: &[T]| r.iter().map(|&x| x * x).sum::<T>();

        let mut params = init.to_vec();
        let mut r = residuals(&params);
        let mut cost = cost_of(&r);
        if !cost.is_finite() {
            return Err(Error::Divergence("non-finite residual at initial parameters".into()));
        }
        let mut history = vec![cost.sqrt()];
        let mut damping = self.initial_damping;
        let n = params.len();

        for iter in 1..=self.max_iterations {
            if cost == T::zero() {
                return Ok(self.report(params, cost, iter - 1, true, history));
            }
            let jac = jacobian(&model, data, &params);
            let mut jtj = vec![T::zero(); n * n];
            let mut jtr = vec![T::zero(); n];
            for (row, &ri) in jac.chunks(n).zip(&r) {
                for a in 0..n {
                    jtr[a] += row[a] * ri;
                    for b in 0..=a {
                        jtj[a * n + b] += row[a] * row[b];
                    }
                }
            }
            for a in 0..n {
                for b in 0..a {
                    jtj[b * n + a] = jtj[a * n + b];
                }
            }
            let max_diag = (0..n).fold(T::zero(), |m, a| m.max(jtj[a * n + a]));
            if max_diag == T::zero() {
                return Err(Error::SingularJacobian);
            }

            let mut accepted = false;
            while !accepted {
                let mut system = jtj.clone();
                for a in 0..n {
                    let d = jtj[a * n + a].max(T::epsilon() * max_diag);
                    system[a * n + a] += damping * d;
                }
                let rhs: Vec<T> = jtr.iter().map(|&g| -g).collect();
                let step = match cholesky_solve(&system, &rhs, n) {
                    Some(s) => s,
                    None => {
                        damping *= T::lit(10.0);
                        if damping > T::lit(1e20) {
                            return Err(Error::SingularJacobian);
                        }
                        continue;
                    }
                };
                let trial: Vec<T> = params.iter().zip(&step).map(|(&p, &s)| p + s).collect();
                if trial.iter().any(|p| !p.is_finite()) {
                    return Err(Error::Divergence("parameters became non-finite".into()));
                }
                let r_trial = residuals(&trial);
                let cost_trial = cost_of(&r_trial);
                if cost_trial.is_finite() && cost_trial < cost {
                    let reduction = (cost - cost_trial) / cost;
                    let step_size = step.iter().map(|&s| s * s).sum::<T>().sqrt();
                    let param_size = trial.iter().map(|&p| p * p).sum::<T>().sqrt();
                    params = trial;
                    r = r_trial;
                    cost = cost_trial;
                    history.push(cost.sqrt());
                    damping = (damping / T::lit(3.0)).max(T::lit(1e-12));
                    accepted = true;
                    if reduction < self.cost_tol
                        || step_size <= self.step_tol * (param_size + self.step_tol)
                    {
                        return Ok(self.report(params, cost, iter, true, history));
                    }
                } else {
                    damping *= T::lit(4.0);
                    if damping > T::lit(1e16) {
                        // no descent direction left at working precision
                        return Ok(self.report(params, cost, iter, true, history));
                    }
                }
            }
        }
        Ok(self.report(params, cost, self.max_iterations, false, history))
    }

    fn report(
        &self,
        params: Vec<T>,
        cost: T,
        iterations: usize,
        converged: bool,
        history: Vec<T>,
    ) -> FitReport<T> {
        FitReport {
            params,
            residual_norm: cost.sqrt(),
            iterations,
            converged,
            history,
        }
    }
}

/// Convenience wrapper with default settings.
pub fn fit_least_squares<T: Real, F>(model: F, data: &[(T, T)], init: &[T]) -> Result<FitReport<T>>
where
    F: Fn(&[T], T) -> T,
{
    LevenbergMarquardt::default().fit(model, data, init)
}

/// Row-major `data.len() × params.len()` Jacobian by central differences.
fn jacobian<T: Real, F>(model: &F, data: &[(T, T)], params: &[T]) -> Vec<T>
where
    F: Fn(&[T], T) -> T,
{
    let n = params.len();
    let mut jac = vec![T::zero(); data.len() * n];
    let mut shifted = params.to_vec();
    for j in 0..n {
        let h = relative_step::<T>() * params[j].abs().max(T::one());
        for (i, &(t, _)) in data.iter().enumerate() {
            shifted[j] = params[j] + h;
            let plus = model(&shifted, t);
            shifted[j] = params[j] - h;
            let minus = model(&shifted, t);
            jac[i * n + j] = (plus - minus) / (h + h);
        }
        shifted[j] = params[j];
    }
    jac
}

fn cholesky_solve<T: Real>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(p: &[f64], t: f64) -> f64 {
        p[0] * (-p[1] * t).exp()
    }

    #[test]
    fn exact_data_returns_init() {
        let init = [2.0, 0.3];
        let data: Vec<(f64, f64)> = (0..20).map(|i| {
            let t = i as f64 * 0.1;
            (t, decay(&init, t))
        }).collect();
        let rep = fit_least_squares(decay, &data, &init).unwrap();
        assert_eq!(rep.params, init.to_vec());
        assert_eq!(rep.residual_norm, 0.0);
        assert!(rep.converged);
    }

    #[test]
    fn exponential_matches_log_linear_regression() {
        let truth = [1.7, 0.45];
        let data: Vec<(f64, f64)> = (0..50)
            .map(|i| {
                let t = i as f64 * 0.2;
                (t, decay(&truth, t))
            })
            .collect();
        // closed-form least squares on ln y = ln a - b t
        let n = data.len() as f64;
        let (sx, sy) = data.iter().fold((0.0, 0.0), |(sx, sy), &(t, y)| (sx + t, sy + y.ln()));
        let (sxx, sxy) = data
            .iter()
            .fold((0.0, 0.0), |(sxx, sxy), &(t, y)| (sxx + t * t, sxy + t * y.ln()));
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let oracle = [intercept.exp(), -slope];

        let rep = fit_least_squares(decay, &data, &[1.0, 1.0]).unwrap();
        assert!((rep.params[0] - oracle[0]).abs() < 1e-8);
        assert!((rep.params[1] - oracle[1]).abs() < 1e-8);
    }

    #[test]
    fn residual_never_increases() {
        let data: Vec<(f64, f64)> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.25;
                (t, (1.3 * t).cos() * (-0.2 * t).exp() + 0.01 * (i % 3) as f64)
            })
            .collect();
        let model = |p: &[f64], t: f64| p[0] * (-p[1] * t).exp() * (p[2] * t).cos();
        let rep = fit_least_squares(model, &data, &[0.8, 0.1, 1.2]).unwrap();
        for w in rep.history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn flat_model_is_singular() {
        let data = [(0.0, 1.0), (1.0, 2.0)];
        let err = fit_least_squares(|_: &[f64], _| 0.0, &data, &[1.0]).unwrap_err();
        assert_eq!(err, Error::SingularJacobian);
    }
}
