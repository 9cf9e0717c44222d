//! Small-signal electromechanical response of a dc-biased cantilever.
//!
//! The drive electrode sees (V_p - v_i)^2; only the cross term 2 V_p v_i
//! oscillates at the drive frequency, so the force amplitude is
//! eps A V_p v_i / y0^2. The V_p^2 term only shifts the static operating point
//! and is dropped. The beam is a single-mode oscillator with the lumped
//! parameters of mode 1, and the output electrode turns tip motion into
//! C_o(t) = C_fix + C_var sin(wt), giving i_o = V_p C_var w cos(wt).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::response::{FrequencyGrid, ResponseCurve, ResponsePoint};
use crate::beam::{CantileverBeam, LumpedBeam};
use crate::error::{require_positive, Error, Result};
use crate::materials::EPSILON_0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorDrive {
    /// dc bias on the beam.
    pub bias_voltage: f64,
    /// ac amplitude on the input electrode.
    pub drive_amplitude: f64,
    /// Beam/electrode overlap area.
    pub electrode_area: f64,
    /// Output termination; recorded, not used in the response.
    pub termination: f64,
}

impl ResonatorDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.bias_voltage >= 0.0) {
            return Err(Error::invalid("V_p", "bias must be non-negative"));
        }
        if !(self.drive_amplitude >= 0.0) {
            return Err(Error::invalid("v_i", "drive amplitude must be non-negative"));
        }
        require_positive("electrode_area", self.electrode_area)?;
        require_positive("R_o", self.termination)
    }

    pub fn warnings(&self) -> Vec<String> {
        if self.drive_amplitude > 0.1 * self.bias_voltage {
            vec![format!(
                "drive amplitude {} V exceeds 10% of the {} V bias; small-signal response is approximate",
                self.drive_amplitude, self.bias_voltage
            )]
        } else {
            Vec::new()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputCapacitance {
    pub c_fix: f64,
    pub c_var: f64,
    pub omega: f64,
}

impl OutputCapacitance {
    pub fn at(&self, t: f64) -> f64 {
        self.c_fix + self.c_var * (self.omega * t).sin()
    }
}

/// Motional current amplitude V_p C_var w.
pub fn motional_current(bias_voltage: f64, c_var: f64, omega: f64) -> f64 {
    bias_voltage * c_var * omega
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorPoint {
    pub tip_displacement: f64,
    pub c_var: f64,
    pub current: f64,
    /// Phase of the current relative to the drive voltage.
    pub phase: f64,
}

pub fn drive_force(beam: &CantileverBeam, drive: &ResonatorDrive) -> f64 {
    EPSILON_0 * drive.electrode_area * drive.bias_voltage * drive.drive_amplitude / (beam.gap * beam.gap)
}

pub fn output_capacitance(beam: &CantileverBeam, drive: &ResonatorDrive, point: &ResonatorPoint, freq: f64) -> OutputCapacitance {
    OutputCapacitance {
        c_fix: EPSILON_0 * drive.electrode_area / beam.gap,
        c_var: point.c_var,
        omega: 2.0 * PI * freq,
    }
}

pub fn resonator_response(
    beam: &CantileverBeam,
    lumped: &LumpedBeam,
    q: f64,
    drive: &ResonatorDrive,
    freq: f64,
) -> Result<ResonatorPoint> {
    require_positive("frequency", freq)?;
    require_positive("Q", q)?;
    drive.validate()?;
    beam.validate()?;
    let w = 2.0 * PI * freq;
    let w1 = lumped.omega();
    let force = drive_force(beam, drive);
    let detune = w1 * w1 - w * w;
    let loss = w1 * w / q;
    let tip_displacement = (force / lumped.m_eff) / detune.hypot(loss);
    let c_var = EPSILON_0 * drive.electrode_area * tip_displacement / (beam.gap * beam.gap);
    let current = motional_current(drive.bias_voltage, c_var, w);
    let phase = FRAC_PI_2 - loss.atan2(detune);
    Ok(ResonatorPoint { tip_displacement, c_var, current, phase })
}

/// |i_out| over `grid`; the grid must straddle the mode-1 resonance.
pub fn resonator_bandpass_curve(
    beam: &CantileverBeam,
    lumped: &LumpedBeam,
    q: f64,
    drive: &ResonatorDrive,
    grid: &FrequencyGrid,
    normalize: bool,
) -> Result<ResponseCurve> {
    let f1 = lumped.frequency();
    let (start, stop) = grid.bounds();
    if !(start < f1 && f1 < stop) {
        return Err(Error::GridMissesPeak { start, stop, resonance: f1 });
    }
    let points = grid
        .frequencies()?
        .into_iter()
        .map(|frequency| {
            let p = resonator_response(beam, lumped, q, drive, frequency)?;
            Ok(ResponsePoint { frequency, magnitude: p.current, phase: p.phase })
        })
        .collect::<Result<Vec<_>>>()?;
    let curve = ResponseCurve::new(
        points,
        format!("resonator L={:e} b={:e} Q={q:e} V_p={:e}", beam.length, beam.width, drive.bias_voltage),
    )?;
    Ok(if normalize { curve.normalized() } else { curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::lumped_params;
    use crate::filters::response::half_power_analysis;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn drive() -> ResonatorDrive {
        let beam = CantileverBeam::reference();
        ResonatorDrive {
            bias_voltage: 10.0,
            drive_amplitude: 0.1,
            electrode_area: 0.5 * beam.length * beam.width,
            termination: 1e6,
        }
    }

    #[test]
    fn motional_current_spot_value() {
        let i = motional_current(10.0, 1e-15, 2.0 * PI * 455e3);
        assert!(rel(i, 28.6e-9) < 5e-3, "{i}");
    }

    #[test]
    fn resonant_gain_is_q() {
        let beam = CantileverBeam::reference();
        let lumped = lumped_params(&beam).unwrap();
        for q in [10.0, 50.0, 200.0] {
            let p = resonator_response(&beam, &lumped, q, &drive(), lumped.frequency()).unwrap();
            let static_defl = drive_force(&beam, &drive()) / lumped.k_eff;
            assert!(rel(p.tip_displacement, q * static_defl) < 0.01);
            assert!(p.phase.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_drive_is_silent() {
        let beam = CantileverBeam::reference();
        let lumped = lumped_params(&beam).unwrap();
        let mut d = drive();
        d.drive_amplitude = 0.0;
        let p = resonator_response(&beam, &lumped, 50.0, &d, 455e3).unwrap();
        assert_eq!((p.tip_displacement, p.c_var, p.current), (0.0, 0.0, 0.0));
    }

    #[test]
    fn linear_in_drive_amplitude() {
        let beam = CantileverBeam::reference();
        let lumped = lumped_params(&beam).unwrap();
        let p1 = resonator_response(&beam, &lumped, 50.0, &drive(), 450e3).unwrap();
        let mut d = drive();
        d.drive_amplitude *= 3.0;
        let p3 = resonator_response(&beam, &lumped, 50.0, &d, 450e3).unwrap();
        assert!(rel(p3.current, 3.0 * p1.current) < 1e-14);
    }

    #[test]
    fn bandpass_curve_q_and_peak() {
        let beam = CantileverBeam::reference();
        let lumped = lumped_params(&beam).unwrap();
        let f1 = lumped.frequency();
        let grid = FrequencyGrid::around_resonance(f1, 50.0);
        let curve = resonator_bandpass_curve(&beam, &lumped, 50.0, &drive(), &grid, true).unwrap();
        let hp = half_power_analysis(&curve).unwrap();
        assert!(rel(hp.q, 50.0) < 0.02, "{}", hp.q);
        assert!(rel(hp.f_center, f1) < 1e-3);
        let peak = resonator_response(&beam, &lumped, 50.0, &drive(), f1).unwrap().current;
        let off = resonator_response(&beam, &lumped, 50.0, &drive(), 2.0 * f1).unwrap().current;
        assert!(off / peak < 0.05);
    }

    #[test]
    fn grid_must_cover_resonance() {
        let beam = CantileverBeam::reference();
        let lumped = lumped_params(&beam).unwrap();
        let grid = FrequencyGrid::log(1e3, 100e3);
        assert!(matches!(
            resonator_bandpass_curve(&beam, &lumped, 50.0, &drive(), &grid, false),
            Err(Error::GridMissesPeak { .. })
        ));
    }

    #[test]
    fn output_capacitance_waveform() {
        let beam = CantileverBeam::reference();
        let lumped = lumped_params(&beam).unwrap();
        let p = resonator_response(&beam, &lumped, 50.0, &drive(), 455e3).unwrap();
        let co = output_capacitance(&beam, &drive(), &p, 455e3);
        assert!(co.c_fix > 0.0);
        assert_eq!(co.at(0.0), co.c_fix);
        let quarter = PI / (2.0 * co.omega);
        assert!(rel(co.at(quarter), co.c_fix + co.c_var) < 1e-12);
    }

    #[test]
    fn large_drive_warns() {
        let mut d = drive();
        assert!(d.warnings().is_empty());
        d.drive_amplitude = 2.0;
        assert_eq!(d.warnings().len(), 1);
    }
}
