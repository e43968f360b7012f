//! Optimal velocity profiles for moving a particle bound in a shallow Morse
//! trap, by shaping the velocity spectrum away from the non-adiabatic leakage
//! spectrum of the trap, together with survival-probability evaluation in a
//! bosonic bath.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`.

pub mod defaults;
pub mod error;
pub mod fit;
pub mod kernel;
pub mod morse;
pub mod numerics;
pub mod optimizer;
pub mod scalar;
pub mod survival;

pub use error::{Error, Result};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Complex64 = num_complex::Complex<f64>;
pub type Morse = morse::MorseModel<f64>;
pub type KernelSamples = kernel::KernelSamples<f64>;
pub type LeakageSpectrum = kernel::LeakageSpectrum<f64>;
pub type KernelFit = fit::DampedOscFit<f64>;
pub type Trajectory = optimizer::Trajectory<f64>;
pub type PoleExpansion = optimizer::PoleExpansion<f64>;
pub type PhononMode = survival::PhononMode<f64>;
pub type PhononModeTable = survival::PhononModeTable<f64>;
pub type SurvivalModel = survival::SurvivalModel<f64>;
pub type SurvivalSeries = survival::SurvivalSeries<f64>;
