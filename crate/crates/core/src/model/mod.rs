//! Spectra, dispersion profiles and unit conversions shared by every other
//! module. All values are SI.

mod dispersion;
mod spectrum;
pub mod units;

pub use dispersion::{
    DispersionProfile, InterferometerConfig, DEFAULT_DEGENERACY_WAVELENGTH, DEFAULT_PUMP_WAVELENGTH,
};
pub use spectrum::{SpectralDensity, SpectralShape, GAUSSIAN_TRUNCATION_SIGMAS};
pub use units::WidthConvention;
