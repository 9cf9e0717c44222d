//! Frequency-domain models for both band-pass topologies.

pub mod rc;
pub mod resonator;
pub mod response;

pub use rc::{
    rc_center_frequency, rc_curve, rc_response, serpentine_resistance, synthesize_resistance, RcFilter,
    SerpentineLayout,
};
pub use resonator::{
    motional_current, resonator_bandpass_curve, resonator_response, OutputCapacitance, ResonatorDrive,
    ResonatorPoint,
};
pub use response::{half_power_analysis, FrequencyGrid, HalfPower, ResponseCurve, ResponsePoint};
