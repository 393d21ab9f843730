//! Spin-Hamiltonian engine for the NV⁻ center coupled to nearby ¹³C nuclei.
//!
//! Energies in MHz, fields in Gauss, slopes in kHz/G.

pub mod algebra;
pub mod assignment;
pub mod error;
pub mod fieldcal;
pub mod golden;
pub mod model;
pub mod spectra;
pub mod sweep;
pub mod transitions;
pub mod zefoz;

pub use error::{Error, Result};
pub use model::{build_hamiltonian, parse_system, LevelSet, SpinSystem, SpinSystemSpec};
pub use spectra::{
    assign_peaks, synthesize_spectrum, FrequencyAxis, MeasuredPeak, PeakAssignment, SpectrumTrace,
};
pub use sweep::{find_lacs, sweep_eigen, FieldGrid, LacRecord, LacSet, Manifold, TrackedSpectrum};
pub use transitions::{IntensityModel, PointAnalysis, TmeConvention, TransitionRecord};
pub use zefoz::{predict_linewidth, scan_dpt, DptOptions, DptRecord, LinewidthModel};
