//! Passive RC band-pass: H(s) = sRC / (s^2 R^2 C^2 + 3 sRC + 1), plus sizing of
//! a serpentine thin-film resistor.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::response::{FrequencyGrid, ResponseCurve, ResponsePoint};
use crate::error::{require_positive, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RcFilter {
    pub resistance: f64,
    pub capacitance: f64,
}

impl RcFilter {
    pub fn new(resistance: f64, capacitance: f64) -> Result<Self> {
        require_positive("R", resistance)?;
        require_positive("C", capacitance)?;
        Ok(Self { resistance, capacitance })
    }

    pub fn time_constant(&self) -> f64 {
        self.resistance * self.capacitance
    }
}

/// (|H|, arg H) at `freq` Hz.
pub fn rc_response(filter: &RcFilter, freq: f64) -> Result<(f64, f64)> {
    require_positive("frequency", freq)?;
    let x = 2.0 * PI * freq * filter.time_constant();
    let real = 1.0 - x * x;
    let imag = 3.0 * x;
    let magnitude = x / real.hypot(imag);
    let phase = FRAC_PI_2 - imag.atan2(real);
    Ok((magnitude, phase))
}

pub fn rc_center_frequency(filter: &RcFilter) -> f64 {
    1.0 / (2.0 * PI * filter.time_constant())
}

pub fn synthesize_resistance(f0: f64, capacitance: f64) -> Result<f64> {
    require_positive("f0", f0)?;
    require_positive("C", capacitance)?;
    Ok(1.0 / (2.0 * PI * f0 * capacitance))
}

pub fn rc_curve(filter: &RcFilter, grid: &FrequencyGrid) -> Result<ResponseCurve> {
    let points = grid
        .frequencies()?
        .into_iter()
        .map(|frequency| {
            let (magnitude, phase) = rc_response(filter, frequency)?;
            Ok(ResponsePoint { frequency, magnitude, phase })
        })
        .collect::<Result<Vec<_>>>()?;
    ResponseCurve::new(points, format!("rc R={:e} C={:e}", filter.resistance, filter.capacitance))
}

/// Effective squares contributed by one right-angle bend.
pub const CORNER_SQUARES: f64 = 0.56;

pub fn serpentine_resistance(
    segment_length: f64,
    width: f64,
    n_segments: u32,
    n_corners: u32,
    sheet_resistance: f64,
) -> Result<f64> {
    require_positive("segment_length", segment_length)?;
    require_positive("width", width)?;
    require_positive("sheet_resistance", sheet_resistance)?;
    if n_segments == 0 {
        return Err(Error::invalid("n_segments", "need at least one segment"));
    }
    let squares = f64::from(n_segments) * segment_length / width + CORNER_SQUARES * f64::from(n_corners);
    Ok(sheet_resistance * squares)
}

/// A meander of parallel runs joined by single-bend turns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerpentineLayout {
    pub segment_length: f64,
    pub width: f64,
    pub spacing: f64,
    pub n_segments: u32,
    pub sheet_resistance: f64,
}

impl SerpentineLayout {
    pub fn n_corners(&self) -> u32 {
        self.n_segments.saturating_sub(1)
    }

    pub fn resistance(&self) -> Result<f64> {
        serpentine_resistance(self.segment_length, self.width, self.n_segments, self.n_corners(), self.sheet_resistance)
    }

    /// Bounding box: run length by the stacked run widths and gaps.
    pub fn footprint(&self) -> f64 {
        let n = f64::from(self.n_segments);
        self.segment_length * (n * self.width + (n - 1.0) * self.spacing)
    }

    /// Fewest segments reaching at least `target` ohms.
    pub fn for_resistance(
        target: f64,
        segment_length: f64,
        width: f64,
        spacing: f64,
        sheet_resistance: f64,
    ) -> Result<Self> {
        require_positive("R", target)?;
        require_positive("spacing", spacing)?;
        let per_segment = segment_length / width;
        let squares = target / sheet_resistance;
        // n * per_segment + 0.56 (n - 1) >= squares
        let n = ((squares + CORNER_SQUARES) / (per_segment + CORNER_SQUARES)).ceil().max(1.0);
        if n > f64::from(u32::MAX) {
            return Err(Error::invalid("R", "needs more segments than can be laid out"));
        }
        let layout = Self { segment_length, width, spacing, n_segments: n as u32, sheet_resistance };
        layout.resistance()?;
        Ok(layout)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::response::half_power_analysis;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn peak_is_one_third_with_zero_phase() {
        for (r, c) in [(890e3, 387.3e-15), (1.0, 1.0), (47e3, 1e-9)] {
            let f = RcFilter::new(r, c).unwrap();
            let (m, p) = rc_response(&f, rc_center_frequency(&f)).unwrap();
            assert!((m - 1.0 / 3.0).abs() < 1e-15, "{m}");
            assert!(p.abs() < 1e-15);
        }
    }

    #[test]
    fn band_limits_vanish() {
        let f = RcFilter::new(890e3, 387.3e-15).unwrap();
        assert!(rc_response(&f, 1.0).unwrap().0 < 1e-5);
        assert!(rc_response(&f, 1e12).unwrap().0 < 1e-5);
        assert!(rc_response(&f, 0.0).is_err());
    }

    #[test]
    fn centre_frequency_values() {
        let f = RcFilter::new(903e3, 387.3e-15).unwrap();
        assert!(rel(rc_center_frequency(&f), 455e3) < 3e-3);
        let f = RcFilter::new(890e3, 387.3e-15).unwrap();
        assert!((rc_center_frequency(&f) - 461.7e3).abs() < 0.05e3);
        let doubled = RcFilter::new(1780e3, 387.3e-15).unwrap();
        assert!(rel(rc_center_frequency(&doubled), rc_center_frequency(&f) / 2.0) < 1e-15);
    }

    #[test]
    fn resistance_synthesis() {
        let r = synthesize_resistance(455e3, 387.3e-15).unwrap();
        assert!(rel(r, 903e3) < 5e-3, "{r}");
        assert!(rel(synthesize_resistance(455e3, 2.0 * 387.3e-15).unwrap(), r / 2.0) < 1e-15);
        let f = RcFilter::new(r, 387.3e-15).unwrap();
        assert!(rel(rc_center_frequency(&f), 455e3) < 1e-12);
    }

    #[test]
    fn analytic_cutoffs() {
        let f = RcFilter::new(890e3, 387.3e-15).unwrap();
        let f0 = rc_center_frequency(&f);
        let curve = rc_curve(&f, &FrequencyGrid::log(1e3, 1e8)).unwrap();
        let hp = half_power_analysis(&curve).unwrap();
        let x_lo = (13f64.sqrt() - 3.0) / 2.0;
        let x_hi = (13f64.sqrt() + 3.0) / 2.0;
        assert!(rel(hp.f_low, x_lo * f0) < 1e-3);
        assert!(rel(hp.f_high, x_hi * f0) < 1e-3);
        assert!(rel(hp.q, 1.0 / 3.0) < 5e-3);
        assert!((hp.f_low - 139.8e3).abs() < 0.2e3);
        assert!((hp.f_high - 1.525e6).abs() < 2e3);
    }

    #[test]
    fn serpentine_squares() {
        assert_eq!(serpentine_resistance(2e-6, 2e-6, 1, 0, 30.0).unwrap(), 30.0);
        let r = serpentine_resistance(300e-6, 1e-6, 100, 99, 30.0).unwrap();
        assert!(rel(r, 30.0 * (30000.0 + 55.44)) < 1e-12);
        let wide = serpentine_resistance(300e-6, 2e-6, 100, 0, 30.0).unwrap();
        let narrow = serpentine_resistance(300e-6, 1e-6, 100, 0, 30.0).unwrap();
        assert!(rel(wide, narrow / 2.0) < 1e-15);
    }

    #[test]
    fn serpentine_layout_reaches_target() {
        let layout = SerpentineLayout::for_resistance(903e3, 300e-6, 2e-6, 2e-6, 30.0).unwrap();
        assert!(layout.resistance().unwrap() >= 903e3);
        let mut fewer = layout;
        fewer.n_segments -= 1;
        assert!(fewer.resistance().unwrap() < 903e3);
        assert!(layout.footprint() > 0.0);
    }
}
