//! Gaussian random matrix model with an external source having three distinct
//! eigenvalues `-a, 0, a` in the three-cut regime `a^2 > 3`.

pub mod asymptotics;
pub mod density;
pub mod ensemble_mc;
pub mod error;
pub mod lambda_functions;
pub mod model_rhp;
pub mod mop;
pub mod profile;
pub mod quadrature;
pub mod spectral_curve;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use profile::{Precision, Tolerances};
pub use spectral_curve::{Edge, ModelParams, Side, SpectralCurve, SupportData};
