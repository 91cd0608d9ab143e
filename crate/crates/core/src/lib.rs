//! Chromatic-dispersion measurement from the visibility of free-running
//! two-photon fringes.
//!
//! The crate covers the interference model ([`interferogram`],
//! [`gaussian`]), synthetic traces ([`drift`]), visibility estimators
//! ([`estimate`]), the two measurement methods ([`pipeline`]) and the
//! campaign runner with its file formats ([`campaign`], [`io`]).

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod drift;
pub mod error;
pub mod estimate;
pub mod fit;
pub mod gaussian;
pub mod interferogram;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod quadrature;

pub use campaign::{run, RunOutcome};
pub use drift::{simulate_trace, CoincidenceTrace, DetectorModel, DriftProcess};
pub use error::{Error, Result};
pub use estimate::{estimate, EstimatorConfig, VisibilityEstimate};
pub use io::config::CampaignConfig;
pub use model::{DispersionProfile, InterferometerConfig, SpectralDensity, WidthConvention};
pub use pipeline::{method_inflexion, method_multipoint, CdResult};
