//! Analysis and simulation toolkit for non-cooperative KPP reaction–diffusion
//! systems
//!
//! ```text
//! ∂_t u - D ∂_xx u = L u - c(u) ∘ u,   u : R × R → R^N
//! ```
//!
//! with `D = diag(d)` positive, `L` essentially nonnegative and irreducible, and
//! a nonnegative competition field `c` vanishing at the origin.
//!
//! * [`spectral`]: Perron–Frobenius pairs and principal eigenvalues.
//! * [`model`]: system instances, hypothesis checks, saturation constants.
//! * [`dispersion`]: `κ_μ`, the minimal wave speed `c*` and its bounds.
//! * [`simulate`]: IMEX integration with front tracking and diagnostics.
//! * [`waves`]: traveling-wave envelopes and profiles.
//! * [`steady`]: constant positive steady states.
//! * [`zoo`]: builders for structured-population discretizations.

pub mod banded;
pub mod dispersion;
pub mod error;
pub mod matrix;
pub mod model;
pub mod optimize;
pub mod simulate;
pub mod spectral;
pub mod sphere;
pub mod steady;
pub mod waves;
pub mod zoo;

pub use dispersion::{kappa, minimal_speed, mu_roots, speed_bounds_check, SpeedReport};
pub use error::{KppError, Result};
pub use matrix::SquareMatrix;
pub use model::{CompetitionField, Model, SaturationData};
pub use spectral::{perron_frobenius, SpectralPair};
