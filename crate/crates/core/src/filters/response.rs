use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponsePoint {
    #[serde(rename = "frequency_Hz")]
    pub frequency: f64,
    pub magnitude: f64,
    #[serde(rename = "phase_rad")]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCurve {
    pub points: Vec<ResponsePoint>,
    /// What produced the curve, e.g. `rc R=... C=...`.
    pub source: String,
}

impl ResponseCurve {
    pub fn new(points: Vec<ResponsePoint>, source: impl Into<String>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::TooFewPoints { got: points.len(), min: 3 });
        }
        if points.windows(2).any(|w| !(w[1].frequency > w[0].frequency)) {
            return Err(Error::invalid("frequency", "frequencies must be strictly increasing"));
        }
        if points.iter().any(|p| !(p.frequency > 0.0) || !(p.magnitude >= 0.0)) {
            return Err(Error::invalid("points", "frequencies must be positive and magnitudes non-negative"));
        }
        Ok(Self { points, source: source.into() })
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.frequency).collect()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.magnitude).collect()
    }

    pub fn to_csv(&self) -> String {
        io::csv(
            &["frequency_Hz", "magnitude", "phase_rad"],
            self.points.iter().map(|p| vec![p.frequency, p.magnitude, p.phase]),
        )
    }

    /// Scale magnitudes so the peak is 1.
    pub fn normalized(mut self) -> Self {
        let peak = self.points.iter().map(|p| p.magnitude).fold(0.0, f64::max);
        if peak > 0.0 {
            for p in &mut self.points {
                p.magnitude /= peak;
            }
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FrequencyGrid {
    Log { start: f64, stop: f64, points_per_decade: f64 },
    Linear { start: f64, stop: f64, points: usize },
}

impl FrequencyGrid {
    pub const DEFAULT_POINTS_PER_DECADE: f64 = 200.0;

    pub fn log(start: f64, stop: f64) -> Self {
        FrequencyGrid::Log { start, stop, points_per_decade: Self::DEFAULT_POINTS_PER_DECADE }
    }

    /// Dense linear grid spanning five half-bandwidths either side of `f0`.
    pub fn around_resonance(f0: f64, q: f64) -> Self {
        let half_span = 5.0 / q;
        FrequencyGrid::Linear {
            start: f0 * (1.0 - half_span).max(0.05),
            stop: f0 * (1.0 + half_span),
            points: 4001,
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            FrequencyGrid::Log { start, stop, .. } | FrequencyGrid::Linear { start, stop, .. } => (start, stop),
        }
    }

    pub fn frequencies(&self) -> Result<Vec<f64>> {
        let (start, stop) = self.bounds();
        if !(start > 0.0 && stop > start && stop.is_finite()) {
            return Err(Error::invalid("grid", format!("need 0 < start < stop, got [{start}, {stop}]")));
        }
        match *self {
            FrequencyGrid::Log { points_per_decade, .. } => {
                if !(points_per_decade >= 1.0) {
                    return Err(Error::invalid("points_per_decade", "must be at least 1"));
                }
                let decades = (stop / start).log10();
                let n = ((decades * points_per_decade).round() as usize).max(2) + 1;
                let ratio = stop / start;
                Ok((0..n)
                    .map(|i| if i + 1 == n { stop } else { start * ratio.powf(i as f64 / (n - 1) as f64) })
                    .collect())
            }
            FrequencyGrid::Linear { points, .. } => {
                if points < 3 {
                    return Err(Error::invalid("points", "need at least 3 grid points"));
                }
                Ok(crate::electrostatics::linspace(start, stop, points))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// Linear in (log f, log |H|).
    LogLog,
    /// Linear in (f, |H|).
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPower {
    pub f_low: f64,
    pub f_high: f64,
    pub f_center: f64,
    pub q: f64,
}

fn crossing(f0: f64, m0: f64, f1: f64, m1: f64, level: f64, mode: Interpolation) -> f64 {
    if mode == Interpolation::LogLog && m0 > 0.0 && m1 > 0.0 {
        let t = (level.ln() - m0.ln()) / (m1.ln() - m0.ln());
        (f0.ln() + t * (f1.ln() - f0.ln())).exp()
    } else {
        let t = (level - m0) / (m1 - m0);
        f0 + t * (f1 - f0)
    }
}

/// Index of the largest sample, provided it is not at either end.
pub fn interior_peak(magnitudes: &[f64]) -> Result<usize> {
    let (idx, _) = magnitudes
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &m)| if m > best.1 { (i, m) } else { best });
    if idx == 0 || idx + 1 >= magnitudes.len() {
        return Err(Error::NoPeak);
    }
    Ok(idx)
}

/// -3 dB crossings on either side of `peak`.
pub fn half_power_crossings(
    frequencies: &[f64],
    magnitudes: &[f64],
    peak: usize,
    mode: Interpolation,
) -> Result<(f64, f64)> {
    level_crossings(frequencies, magnitudes, peak, magnitudes[peak] / 2f64.sqrt(), mode)
}

/// First crossings of `level` walking outward from `peak`.
pub fn level_crossings(
    frequencies: &[f64],
    magnitudes: &[f64],
    peak: usize,
    level: f64,
    mode: Interpolation,
) -> Result<(f64, f64)> {
    let low = (0..peak)
        .rev()
        .find(|&i| magnitudes[i] < level)
        .map(|i| crossing(frequencies[i], magnitudes[i], frequencies[i + 1], magnitudes[i + 1], level, mode))
        .ok_or(Error::CutoffOutsideRange { side: "lower" })?;
    let high = (peak + 1..magnitudes.len())
        .find(|&i| magnitudes[i] < level)
        .map(|i| crossing(frequencies[i - 1], magnitudes[i - 1], frequencies[i], magnitudes[i], level, mode))
        .ok_or(Error::CutoffOutsideRange { side: "upper" })?;
    Ok((low, high))
}

/// Peak refined by a parabola through the three samples around `peak` in
/// (log f, log |H|); falls back to the sample itself if the fit is not concave.
fn refined_peak(f: &[f64], m: &[f64], peak: usize) -> (f64, f64) {
    let x = [f[peak - 1].ln(), f[peak].ln(), f[peak + 1].ln()];
    let y = [m[peak - 1], m[peak], m[peak + 1]];
    if y.iter().any(|&v| !(v > 0.0)) {
        return (f[peak], m[peak]);
    }
    let y = y.map(f64::ln);
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if !(a < 0.0) {
        return (f[peak], m[peak]);
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = (-b / (2.0 * a)).clamp(x[0], x[2]);
    let yv = y[0] + d1 * (xv - x[0]) + a * (xv - x[0]) * (xv - x[1]);
    (xv.exp(), yv.exp().max(m[peak]))
}

/// Half-power band edges, peak frequency and Q = f_center / bandwidth.
pub fn half_power_analysis(curve: &ResponseCurve) -> Result<HalfPower> {
    let f = curve.frequencies();
    let m = curve.magnitudes();
    let peak = interior_peak(&m)?;
    let (f_center, m_peak) = refined_peak(&f, &m, peak);
    let (f_low, f_high) = level_crossings(&f, &m, peak, m_peak / 2f64.sqrt(), Interpolation::LogLog)?;
    Ok(HalfPower { f_low, f_high, f_center, q: f_center / (f_high - f_low) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(f: &[f64], m: &[f64]) -> ResponseCurve {
        ResponseCurve::new(
            f.iter().zip(m).map(|(&frequency, &magnitude)| ResponsePoint { frequency, magnitude, phase: 0.0 }).collect(),
            "test",
        )
        .unwrap()
    }

    #[test]
    fn monotone_curve_has_no_peak() {
        let c = curve(&[1.0, 2.0, 3.0, 4.0], &[0.1, 0.2, 0.3, 0.4]);
        assert!(matches!(half_power_analysis(&c), Err(Error::NoPeak)));
    }

    #[test]
    fn shallow_peak_cutoff_outside() {
        let c = curve(&[1.0, 2.0, 3.0, 4.0], &[0.9, 1.0, 0.95, 0.5]);
        assert!(matches!(half_power_analysis(&c), Err(Error::CutoffOutsideRange { side: "lower" })));
    }

    #[test]
    fn triangle_crossings() {
        // Magnitude 1 at f = 2, 0 at f = 1 and 3: linear crossings at 2 -/+ (1 - 1/sqrt2).
        let c = [1.0, 2.0, 3.0];
        let m = [0.0, 1.0, 0.0];
        let (lo, hi) = half_power_crossings(&c, &m, 1, Interpolation::Linear).unwrap();
        let d = 1.0 - 1.0 / 2f64.sqrt();
        assert!((lo - (2.0 - d)).abs() < 1e-12 && (hi - (2.0 + d)).abs() < 1e-12);
    }

    #[test]
    fn new_rejects_bad_curves() {
        let pts = |f: &[f64]| f.iter().map(|&frequency| ResponsePoint { frequency, magnitude: 1.0, phase: 0.0 }).collect();
        assert!(ResponseCurve::new(pts(&[1.0, 1.0, 2.0]), "").is_err());
        assert!(ResponseCurve::new(pts(&[1.0, 2.0]), "").is_err());
        assert!(ResponseCurve::new(pts(&[-1.0, 1.0, 2.0]), "").is_err());
    }

    #[test]
    fn log_grid_density() {
        let f = FrequencyGrid::log(1e3, 1e7).frequencies().unwrap();
        assert_eq!(f.len(), 801);
        assert_eq!(f[0], 1e3);
        assert_eq!(*f.last().unwrap(), 1e7);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!(FrequencyGrid::log(1e3, 1e2).frequencies().is_err());
    }
}
