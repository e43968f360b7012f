//! Default run parameters shared by the library tests and the CLI.

/// Kernel sampling span and point count.
pub const KERNEL_T_MAX: f64 = 80.0;
pub const KERNEL_SAMPLES: usize = 1600;
/// Window of the kernel fit. The shorter `[0, 40]` window leaves the fitted
/// transform with a negative value at `s = 0`, which puts a real positive pole
/// into the `λ < 0` characteristic polynomial.
pub const FIT_WINDOW: (f64, f64) = (0.0, 80.0);

pub const LAMBDA: f64 = -0.01;
pub const P_DOT0: f64 = 1.0;
/// Fluence reported for `λ = -0.01`, `ṗ₀ = 1`; the default horizon is the
/// time at which the trajectory reaches it.
pub const FLUENCE_TARGET: f64 = 7.03219;
/// Longest horizon searched when matching the fluence.
pub const HORIZON_CAP: f64 = 60.0;
pub const LAMBDA_SWEEP: (f64, f64) = (-1.0, -1e-4);
pub const LAMBDA_SWEEP_POINTS: usize = 13;

/// Continuum grid spacing for the phonon channels and the dynamics oracle.
pub const DKAPPA: f64 = 0.025;
pub const SURVIVAL_POINTS: usize = 101;
pub const ADIABATIC_MARGIN: f64 = 0.1;
