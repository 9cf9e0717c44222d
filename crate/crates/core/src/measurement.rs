//! Measured datasets: C-V sweeps and vibration spectra read from CSV, with
//! parasitic-capacitance and resonance-peak extraction.
//!
//! File layout: UTF-8, `#` comment lines anywhere, a header row naming the
//! columns with their SI units, then one `x,y` pair per line. Comments of the
//! form `# key: value` are kept as metadata (`label`, `amplitude_unit`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::electrostatics::CvCurve;
use crate::error::{Error, Result};
use crate::filters::response::{interior_peak, level_crossings, Interpolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Cv,
    Spectrum,
}

impl CurveKind {
    pub fn header(self) -> [&'static str; 2] {
        match self {
            CurveKind::Cv => ["voltage_V", "capacitance_F"],
            CurveKind::Spectrum => ["frequency_Hz", "amplitude"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredCurve {
    pub kind: CurveKind,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub label: String,
    pub metadata: BTreeMap<String, String>,
}

impl MeasuredCurve {
    pub fn new(kind: CurveKind, x: Vec<f64>, y: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::invalid("points", "x and y lengths differ"));
        }
        if x.len() < 3 {
            return Err(Error::TooFewPoints { got: x.len(), min: 3 });
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::NonMonotonic { path: "<memory>".into(), line: i + 2 });
        }
        Ok(Self { kind, x, y, label: label.into(), metadata: BTreeMap::new() })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Every `step`-th point, starting with the first.
    pub fn subsampled(&self, step: usize) -> Result<Self> {
        let pick = |v: &[f64]| v.iter().step_by(step.max(1)).copied().collect::<Vec<_>>();
        let mut out = Self::new(self.kind, pick(&self.x), pick(&self.y), self.label.clone())?;
        out.metadata = self.metadata.clone();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub curve: MeasuredCurve,
    pub warnings: Vec<String>,
}

pub fn load_curve(path: &Path, kind: CurveKind) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_curve(&text, &path.display().to_string(), kind)
}

pub fn parse_curve(text: &str, origin: &str, kind: CurveKind) -> Result<Loaded> {
    let expected = kind.header();
    let mut header_seen = false;
    let mut metadata = BTreeMap::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut prev_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once(':') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if !header_seen {
            if cells != expected {
                return Err(Error::UnitMismatch {
                    path: origin.to_string(),
                    expected: expected.join(","),
                    found: cells.join(","),
                });
            }
            header_seen = true;
            continue;
        }
        let parse_err = |reason: String| Error::Parse { path: origin.to_string(), line: line_no, reason };
        if cells.len() != 2 {
            return Err(parse_err(format!("expected 2 columns, found {}", cells.len())));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("`{s}` is not a finite number")))
        };
        let (xv, yv) = (parse(cells[0])?, parse(cells[1])?);
        if let Some(&last) = x.last() {
            if !(xv > last) {
                return Err(Error::NonMonotonic { path: origin.to_string(), line: line_no });
            }
        }
        x.push(xv);
        y.push(yv);
        prev_line = line_no;
    }
    if !header_seen {
        return Err(Error::Parse { path: origin.to_string(), line: prev_line.max(1), reason: "missing header row".into() });
    }
    let label = metadata.get("label").cloned().unwrap_or_else(|| origin.to_string());
    let mut curve = MeasuredCurve::new(kind, x, y, label)?;
    curve.metadata = metadata;

    let mut warnings = Vec::new();
    match kind {
        CurveKind::Cv => {
            if curve.x.first().is_some_and(|&v| v < 0.0) {
                warnings.push("negative bias voltages present".to_string());
            }
            if curve.y.iter().any(|&c| c <= 0.0) {
                warnings.push("non-positive capacitance values present".to_string());
            }
        }
        CurveKind::Spectrum => {
            if curve.x.first().is_some_and(|&f| f <= 0.0) {
                warnings.push("non-positive frequencies present".to_string());
            }
            if !curve.metadata.contains_key("amplitude_unit") {
                warnings.push("no `# amplitude_unit:` metadata; amplitude treated as arbitrary units".to_string());
            }
        }
    }
    Ok(Loaded { curve, warnings })
}

/// Least-squares constant parallel capacitance between a measured C-V curve
/// and a model curve, over the voltages both cover. The model is linearly
/// interpolated at the measured biases.
pub fn extract_parasitic(measured: &MeasuredCurve, model: &CvCurve) -> Result<f64> {
    if measured.kind != CurveKind::Cv {
        return Err(Error::invalid("measured", "parasitic extraction needs a C-V curve"));
    }
    let residuals: Vec<f64> = measured
        .x
        .iter()
        .zip(&measured.y)
        .filter_map(|(&v, &c)| model.interpolate(v).map(|m| c - m))
        .collect();
    if residuals.is_empty() {
        return Err(Error::NoOverlap);
    }
    Ok(residuals.iter().sum::<f64>() / residuals.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonancePeak {
    pub f_peak: f64,
    pub amplitude: f64,
    pub q_est: Option<f64>,
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if !(a < 0.0) {
        return None;
    }
    let b = d1 - a * (x[0] + x[1]);
    let xv = -b / (2.0 * a);
    let yv = y[0] + d1 * (xv - x[0]) + a * (xv - x[0]) * (xv - x[1]);
    Some((xv, yv))
}

pub fn find_resonance_peak(spectrum: &MeasuredCurve) -> Result<ResonancePeak> {
    let i = interior_peak(&spectrum.y)?;
    let xs = [spectrum.x[i - 1], spectrum.x[i], spectrum.x[i + 1]];
    let ys = [spectrum.y[i - 1], spectrum.y[i], spectrum.y[i + 1]];
    let (f_peak, amplitude) = parabola_vertex(xs, ys)
        .filter(|(xv, _)| *xv >= xs[0] && *xv <= xs[2])
        .unwrap_or((xs[1], ys[1]));
    let q_est = level_crossings(&spectrum.x, &spectrum.y, i, amplitude / 2f64.sqrt(), Interpolation::Linear)
        .ok()
        .map(|(lo, hi)| f_peak / (hi - lo));
    Ok(ResonancePeak { f_peak, amplitude, q_est })
}

pub mod datasets {
    //! Bundled curves reconstructed from the fabricated devices' reported
    //! characterization; see `data/README.md`.

    use super::*;

    pub const MEASURED_CV_FILE: &str = "measured_cv.csv";
    pub const LDV_SPECTRUM_FILE: &str = "ldv_spectrum_80um.csv";

    pub const MEASURED_CV: &str = include_str!("../data/measured_cv.csv");
    pub const LDV_SPECTRUM: &str = include_str!("../data/ldv_spectrum_80um.csv");

    pub fn path(file: &str) -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(file)
    }

    pub fn measured_cv() -> Result<Loaded> {
        parse_curve(MEASURED_CV, MEASURED_CV_FILE, CurveKind::Cv)
    }

    pub fn ldv_spectrum() -> Result<Loaded> {
        parse_curve(LDV_SPECTRUM, LDV_SPECTRUM_FILE, CurveKind::Spectrum)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electrostatics::{cv_curve, suspension_stiffness, CvPoint, PlateActuator, SpringModel};
    use crate::materials::Material;

    fn lorentzian(f0: f64, q: f64, step: f64, lo: f64, hi: f64) -> MeasuredCurve {
        let n = ((hi - lo) / step).round() as usize + 1;
        let x: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
        let y = x.iter().map(|&f| 1.0 / (1.0 + (2.0 * q * (f - f0) / f0).powi(2)).sqrt()).collect();
        MeasuredCurve::new(CurveKind::Spectrum, x, y, "synthetic").unwrap()
    }

    #[test]
    fn parses_with_comments_and_metadata() {
        let text = "# label: bench\n# amplitude_unit: pm\nfrequency_Hz,amplitude\n1e3,1\n\n# mid comment\n2e3,3\n3e3,2\n";
        let loaded = parse_curve(text, "t.csv", CurveKind::Spectrum).unwrap();
        assert_eq!(loaded.curve.len(), 3);
        assert_eq!(loaded.curve.label, "bench");
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn duplicate_x_is_non_monotonic() {
        let text = "voltage_V,capacitance_F\n0,1e-12\n1,1.1e-12\n1,1.2e-12\n";
        let err = parse_curve(text, "t.csv", CurveKind::Cv).unwrap_err();
        assert!(matches!(err, Error::NonMonotonic { line: 4, .. }), "{err}");
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "voltage_V,capacitance_F\n0,1e-12\n1,abc\n";
        assert!(matches!(parse_curve(text, "t", CurveKind::Cv), Err(Error::Parse { line: 3, .. })));
        let text = "voltage_V,capacitance_F\n0,1e-12,7\n";
        assert!(matches!(parse_curve(text, "t", CurveKind::Cv), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn wrong_units_rejected() {
        let text = "voltage_V,capacitance_pF\n0,1.9\n1,2.0\n2,2.1\n";
        assert!(matches!(parse_curve(text, "t", CurveKind::Cv), Err(Error::UnitMismatch { .. })));
        let text = "voltage_V,capacitance_F\n0,1e-12\n1,1e-12\n2,1e-12\n";
        assert!(matches!(parse_curve(text, "t", CurveKind::Spectrum), Err(Error::UnitMismatch { .. })));
    }

    #[test]
    fn too_short_rejected() {
        let text = "voltage_V,capacitance_F\n0,1e-12\n1,1e-12\n";
        assert!(matches!(parse_curve(text, "t", CurveKind::Cv), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn constant_offset_recovered_exactly() {
        let a = PlateActuator::table1();
        let k = suspension_stiffness(&a, SpringModel::FixedGuided, &Material::polysilicon());
        let model = cv_curve(&a, k, 0.0, 8.0, 33).unwrap();
        let x = model.points.iter().map(|p| p.voltage).collect();
        let y = model.points.iter().map(|p| p.capacitance + 1e-12).collect();
        let measured = MeasuredCurve::new(CurveKind::Cv, x, y, "offset").unwrap();
        let par = extract_parasitic(&measured, &model).unwrap();
        assert!((par - 1e-12).abs() < 1e-15, "{par}");
    }

    #[test]
    fn disjoint_ranges_fail() {
        let model = CvCurve {
            points: vec![CvPoint { voltage: 0.0, capacitance: 1e-13 }, CvPoint { voltage: 1.0, capacitance: 1e-13 }],
            pull_in_voltage: None,
            pull_in_capacitance: None,
        };
        let measured = MeasuredCurve::new(CurveKind::Cv, vec![2.0, 3.0, 4.0], vec![1e-12; 3], "m").unwrap();
        assert!(matches!(extract_parasitic(&measured, &model), Err(Error::NoOverlap)));
    }

    #[test]
    fn lorentzian_peak_recovered() {
        let s = lorentzian(441.2e3, 50.0, 1e3, 300e3, 600e3);
        let peak = find_resonance_peak(&s).unwrap();
        assert!((peak.f_peak - 441.2e3).abs() < 0.2e3, "{}", peak.f_peak);
        let q = peak.q_est.unwrap();
        assert!(((q - 50.0) / 50.0).abs() < 0.05, "{q}");
    }

    #[test]
    fn truncated_spectrum_has_no_q() {
        let s = lorentzian(441.2e3, 10.0, 1e3, 430e3, 460e3);
        let peak = find_resonance_peak(&s).unwrap();
        assert!(peak.q_est.is_none());
        assert!((peak.f_peak - 441.2e3).abs() < 0.5e3);
    }

    #[test]
    fn monotone_spectrum_has_no_peak() {
        let s = MeasuredCurve::new(CurveKind::Spectrum, vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0], "m").unwrap();
        assert!(matches!(find_resonance_peak(&s), Err(Error::NoPeak)));
    }

    #[test]
    fn bundled_datasets_load_cleanly() {
        let cv = datasets::measured_cv().unwrap();
        assert!(cv.warnings.is_empty(), "{:?}", cv.warnings);
        assert_eq!(cv.curve.x[0], 0.0);
        assert_eq!(*cv.curve.x.last().unwrap(), 8.0);
        assert!((cv.curve.y[0] - 1.92e-12).abs() < 1e-15);
        assert!((cv.curve.y.last().unwrap() - 2.29e-12).abs() < 1e-15);
        let spec = datasets::ldv_spectrum().unwrap();
        assert!(spec.warnings.is_empty(), "{:?}", spec.warnings);
        assert!(datasets::path(datasets::LDV_SPECTRUM_FILE).exists());
    }
}
