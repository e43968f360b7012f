//! All roots of a polynomial by Aberth–Ehrlich simultaneous iteration.

use num_complex::Complex;

use super::polynomial::Polynomial;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_ITERATIONS: usize = 500;

/// Roots with multiplicity flags.
///
/// `multiplicity[i]` is the size of the cluster root `i` belongs to; roots in
/// a cluster are numerically indistinguishable and treated as one multiple
/// root.
#[derive(Debug, Clone)]
pub struct RootSet<T> {
    pub roots: Vec<Complex<T>>,
    pub multiplicity: Vec<usize>,
    pub iterations: usize,
    /// Largest backward error `|p(s)| / Σ|c_k||s|^k` over the roots.
    pub backward_error: T,
}

impl<T: Real> RootSet<T> {
    pub fn has_multiple(&self) -> bool {
        self.multiplicity.iter().any(|&m| m > 1)
    }
}

/// Finds every complex root of `p`, polished by Newton steps on `p`.
pub fn find_roots<T: Real>(p: &Polynomial<Complex<T>>) -> Result<RootSet<T>> {
    if p.degree() == 0 {
        return Err(Error::InvalidInput(
            "root finding needs degree >= 1".into(),
        ));
    }
    let coeffs = p.coeffs();
    let zero = Complex::new(T::zero(), T::zero());
    // exact roots at the origin
    let zeros_at_origin = coeffs.iter().take_while(|c| **c == zero).count();
    let reduced: Vec<Complex<T>> = coeffs[zeros_at_origin..].to_vec();
    let mut roots = vec![zero; zeros_at_origin];
    let mut iterations = 0;
    if reduced.len() > 1 {
        let (found, iters) = aberth(&reduced)?;
        iterations = iters;
        let reduced_poly = Polynomial::new(reduced.clone())?;
        roots.extend(found.into_iter().map(|z| polish(&reduced_poly, z)));
    }

    let scale_of = |z: Complex<T>| -> T {
        coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * z.norm() + c.norm())
    };
    let mut backward_error = T::zero();
    for &z in &roots {
        let scale = scale_of(z);
        if scale > T::zero() {
            backward_error = backward_error.max(p.eval(z).norm() / scale);
        }
    }
    if backward_error > T::lit(1e3) * T::epsilon() {
        return Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS,
        });
    }

    let multiplicity = cluster_sizes(&roots);
    Ok(RootSet {
        roots,
        multiplicity,
        iterations,
        backward_error,
    })
}

/// Roots of a real polynomial, with conjugate pairs made exactly conjugate and
/// numerically real roots made exactly real.
pub fn find_real_roots<T: Real>(p: &Polynomial<T>) -> Result<RootSet<T>> {
    let mut set = find_roots(&p.to_complex())?;
    set.roots = conjugate_symmetrize(&set.roots);
    Ok(set)
}

fn cluster_sizes<T: Real>(roots: &[Complex<T>]) -> Vec<usize> {
    // Aberth resolves a root of multiplicity m only to ~eps^(1/m)
    let tol = T::lit(10.0) * T::epsilon().cbrt();
    roots
        .iter()
        .map(|&a| {
            roots
                .iter()
                .filter(|&&b| (a - b).norm() <= tol * T::one().max(a.norm()))
                .count()
        })
        .collect()
}

fn aberth<T: Real>(coeffs: &[Complex<T>]) -> Result<(Vec<Complex<T>>, usize)> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<Complex<T>> = coeffs.iter().map(|&c| c / lead).collect();
    let deriv: Vec<Complex<T>> = monic
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * T::from_count(k))
        .collect();
    let horner = |cs: &[Complex<T>], z: Complex<T>| {
        cs.iter()
            .rev()
            .fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    };

    // Fujiwara bound on root moduli, halved for a tighter starting circle
    let radius = (0..n)
        .map(|k| {
            let ratio = monic[k].norm();
            let ratio = if k == 0 { ratio / T::lit(2.0) } else { ratio };
            ratio.powf(T::one() / T::from_count(n - k))
        })
        .fold(T::zero(), T::max)
        * T::lit(2.0);
    let radius = if radius > T::zero() { radius } else { T::one() };
    let two_pi = T::lit(2.0) * T::PI();
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let theta = two_pi * T::from_count(k) / T::from_count(n) + T::lit(0.4);
            Complex::from_polar(radius * T::lit(0.5), theta)
        })
        .collect();

    let tol = T::lit(4.0) * T::epsilon();
    for iter in 1..=MAX_ITERATIONS {
        let mut converged = true;
        for i in 0..n {
            let zi = z[i];
            let pv = horner(&monic, zi);
            if pv.norm() == T::zero() {
                continue;
            }
            let dv = horner(&deriv, zi);
            let ratio = pv / dv;
            let mut repulsion = Complex::new(T::zero(), T::zero());
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let d = zi - zj;
                    if d.norm() > T::zero() {
                        repulsion = repulsion + Complex::new(T::one(), T::zero()) / d;
                    }
                }
            }
            let denom = Complex::new(T::one(), T::zero()) - ratio * repulsion;
            let step = if denom.norm() > T::zero() && dv.norm() > T::zero() {
                ratio / denom
            } else {
                // stalled on a derivative zero: nudge off it
                Complex::new(tol * T::one().max(zi.norm()), tol)
            };
            if !(step.re.is_finite() && step.im.is_finite()) {
                return Err(Error::NonConvergence { iterations: iter });
            }
            z[i] = zi - step;
            if step.norm() > tol * T::one().max(z[i].norm()) {
                converged = false;
            }
        }
        if converged {
            return Ok((z, iter));
        }
    }
    // multiple roots converge only linearly; accept if the backward error
    // check in the caller passes
    Ok((z, MAX_ITERATIONS))
}

fn polish<T: Real>(p: &Polynomial<Complex<T>>, mut z: Complex<T>) -> Complex<T> {
    let Some(dp) = p.derivative() else {
        return z;
    };
    let mut best = p.eval(z).norm();
    for _ in 0..5 {
        let d = dp.eval(z);
        if d.norm() == T::zero() {
            break;
        }
        let candidate = z - p.eval(z) / d;
        let r = p.eval(candidate).norm();
        if r < best {
            best = r;
            z = candidate;
        } else {
            break;
        }
    }
    z
}

/// Pairs roots of a real polynomial into exact conjugates.
pub fn conjugate_symmetrize<T: Real>(roots: &[Complex<T>]) -> Vec<Complex<T>> {
    let scale = roots.iter().fold(T::one(), |m, z| m.max(z.norm()));
    let real_tol = T::lit(1e3) * T::epsilon().sqrt() * T::epsilon().sqrt().sqrt() * scale;
    let mut used = vec![false; roots.len()];
    let mut out = roots.to_vec();
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let zi = roots[i];
        if zi.im.abs() <= real_tol {
            out[i] = Complex::new(zi.re, T::zero());
            continue;
        }
        // closest unused partner to the conjugate
        let target = zi.conj();
        let partner = (0..roots.len())
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let da = (roots[a] - target).norm();
                let db = (roots[b] - target).norm();
                da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
            });
        if let Some(j) = partner {
            used[j] = true;
            let avg = (zi + roots[j].conj()) * T::lit(0.5);
            out[i] = avg;
            out[j] = avg.conj();
        }
    }
    out
}
