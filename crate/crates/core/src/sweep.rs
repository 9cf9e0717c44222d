//! Cross-product parameter sweeps over one to three axes.
//!
//! Rows come out in lexicographic axis order: the first axis varies slowest.
//! Every operation has a fixed parameter set with defaults; `fixed` overrides
//! and axes may only name parameters from that set.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::beam::{natural_frequency, CantileverBeam};
use crate::damping::squeeze_film_q;
use crate::electrostatics::{
    equilibrium_gap, overlap_capacitance, pull_in_analytic, pull_in_continuation, suspension_stiffness, Equilibrium,
    PlateActuator, SpringModel,
};
use crate::error::{Error, Result};
use crate::filters::rc::{rc_center_frequency, RcFilter};
use crate::io;
use crate::materials::{Ambient, Material, AIR_VISCOSITY, POLYSILICON_DENSITY, POLYSILICON_YOUNGS_MODULUS};

pub const MAX_POINTS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOp {
    /// Mode-1 (or mode-n) frequency of a cantilever.
    BeamFrequency,
    /// Squeeze-film Q, at the beam's own f1 unless `frequency` is set.
    DampingQ,
    RcCenterFrequency,
    /// Equilibrium gap and capacitance versus bias; truncates at pull-in.
    VaractorCv,
    PullIn,
}

impl SweepOp {
    pub const ALL: [SweepOp; 5] =
        [SweepOp::BeamFrequency, SweepOp::DampingQ, SweepOp::RcCenterFrequency, SweepOp::VaractorCv, SweepOp::PullIn];

    pub fn name(self) -> &'static str {
        match self {
            SweepOp::BeamFrequency => "beam-frequency",
            SweepOp::DampingQ => "damping-q",
            SweepOp::RcCenterFrequency => "rc-center-frequency",
            SweepOp::VaractorCv => "varactor-cv",
            SweepOp::PullIn => "pull-in",
        }
    }

    /// Parameter names with defaults. NaN marks "derive it".
    pub fn parameters(self) -> Vec<(&'static str, f64)> {
        let beam = CantileverBeam::reference();
        let a = PlateActuator::table1();
        let beam_params = vec![
            ("length", beam.length),
            ("width", beam.width),
            ("thickness", beam.thickness),
            ("gap", beam.gap),
            ("youngs_modulus", POLYSILICON_YOUNGS_MODULUS),
            ("density", POLYSILICON_DENSITY),
        ];
        let plate_params = vec![
            ("gap0", a.gap0),
            ("beam_length", a.beam_length),
            ("beam_width", a.beam_width),
            ("beam_thickness", a.beam_thickness),
            ("beam_count", f64::from(a.beam_count)),
            ("fringing_factor", a.fringing_factor),
            ("youngs_modulus", POLYSILICON_YOUNGS_MODULUS),
        ];
        match self {
            SweepOp::BeamFrequency => {
                let mut p = beam_params;
                p.push(("mode", 1.0));
                p
            }
            SweepOp::DampingQ => {
                let mut p = beam_params;
                p.push(("viscosity", AIR_VISCOSITY));
                p.push(("frequency", f64::NAN));
                p
            }
            SweepOp::RcCenterFrequency => vec![("resistance", 903e3), ("capacitance", 387.3e-15)],
            SweepOp::VaractorCv => {
                let mut p = plate_params;
                p.push(("voltage", 0.0));
                p
            }
            SweepOp::PullIn => plate_params,
        }
    }

    pub fn output_columns(self) -> &'static [&'static str] {
        match self {
            SweepOp::BeamFrequency => &["frequency_Hz"],
            SweepOp::DampingQ => &["q"],
            SweepOp::RcCenterFrequency => &["center_frequency_Hz"],
            SweepOp::VaractorCv => &["gap_m", "capacitance_F", "pulled_in"],
            SweepOp::PullIn => &["pull_in_analytic_V", "pull_in_continuation_V"],
        }
    }
}

impl std::str::FromStr for SweepOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepOp::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| Error::InvalidSweep(format!("unknown operation `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            return Err(Error::InvalidSweep(format!("axis `{}` is empty", self.param)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidSweep(format!("axis `{}` has non-finite bounds", self.param)));
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        match self.scale {
            Scale::Linear => Ok(crate::electrostatics::linspace(self.start, self.stop, self.steps)),
            Scale::Log => {
                if !(self.start > 0.0 && self.stop > 0.0) {
                    return Err(Error::InvalidSweep(format!("log axis `{}` needs positive bounds", self.param)));
                }
                let n = self.steps - 1;
                let ratio = self.stop / self.start;
                Ok((0..=n)
                    .map(|i| if i == n { self.stop } else { self.start * ratio.powf(i as f64 / n as f64) })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub op: SweepOp,
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub spring: SpringModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        io::csv(&header, self.rows.iter().cloned())
    }

    pub fn to_json(&self) -> Result<String> {
        // NaN is not representable in JSON; emit null.
        let rows: Vec<Vec<Option<f64>>> =
            self.rows.iter().map(|r| r.iter().map(|v| (!v.is_nan()).then_some(*v)).collect()).collect();
        Ok(serde_json::to_string_pretty(&serde_json::json!({ "columns": self.columns, "rows": rows }))?)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

struct Params<'a>(&'a BTreeMap<&'static str, f64>);

impl Params<'_> {
    fn get(&self, name: &str) -> f64 {
        self.0[name]
    }
}

fn plate(p: &Params) -> Result<(PlateActuator, Material)> {
    let mut a = PlateActuator::table1();
    a.gap0 = p.get("gap0");
    a.beam_length = p.get("beam_length");
    a.beam_width = p.get("beam_width");
    a.beam_thickness = p.get("beam_thickness");
    let count = p.get("beam_count");
    if !(count >= 1.0 && count.fract() == 0.0 && count <= f64::from(u32::MAX)) {
        return Err(Error::invalid("beam_count", format!("must be a positive integer, got {count}")));
    }
    a.beam_count = count as u32;
    a.fringing_factor = p.get("fringing_factor");
    a.validate()?;
    let material = Material::new("polysilicon", p.get("youngs_modulus"), POLYSILICON_DENSITY)?;
    Ok((a, material))
}

fn beam(p: &Params) -> Result<CantileverBeam> {
    CantileverBeam::new(
        p.get("length"),
        p.get("width"),
        p.get("thickness"),
        p.get("gap"),
        Material::new("polysilicon", p.get("youngs_modulus"), p.get("density"))?,
    )
}

fn evaluate(op: SweepOp, p: &Params, spring: SpringModel) -> Result<Vec<f64>> {
    match op {
        SweepOp::BeamFrequency => {
            let mode = p.get("mode");
            if !(mode >= 1.0 && mode.fract() == 0.0) {
                return Err(Error::invalid("mode", format!("must be a positive integer, got {mode}")));
            }
            Ok(vec![natural_frequency(&beam(p)?, mode as usize)?])
        }
        SweepOp::DampingQ => {
            let b = beam(p)?;
            let f = p.get("frequency");
            let f = if f.is_nan() { natural_frequency(&b, 1)? } else { f };
            let ambient = Ambient::new(p.get("viscosity"), Ambient::air().permittivity)?;
            Ok(vec![squeeze_film_q(&b, f, &ambient)?])
        }
        SweepOp::RcCenterFrequency => {
            Ok(vec![rc_center_frequency(&RcFilter::new(p.get("resistance"), p.get("capacitance"))?)])
        }
        SweepOp::VaractorCv => {
            let (a, m) = plate(p)?;
            let v = p.get("voltage");
            if !(v >= 0.0) {
                return Err(Error::invalid("voltage", "must be non-negative"));
            }
            let k = suspension_stiffness(&a, spring, &m);
            Ok(match equilibrium_gap(&a, k, v) {
                Equilibrium::Stable { gap, .. } => vec![gap, overlap_capacitance(&a, gap)?, 0.0],
                Equilibrium::PulledIn => vec![f64::NAN, f64::NAN, 1.0],
            })
        }
        SweepOp::PullIn => {
            let (a, m) = plate(p)?;
            let k = suspension_stiffness(&a, spring, &m);
            Ok(vec![pull_in_analytic(&a, k), pull_in_continuation(&a, k)?.voltage])
        }
    }
}

pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    if spec.axes.is_empty() || spec.axes.len() > 3 {
        return Err(Error::InvalidSweep(format!("need 1 to 3 axes, got {}", spec.axes.len())));
    }
    let defaults = spec.op.parameters();
    let known = |name: &str| defaults.iter().any(|(n, _)| *n == name);
    let mut base: BTreeMap<&'static str, f64> = defaults.iter().copied().collect();
    for (name, value) in &spec.fixed {
        let key = defaults
            .iter()
            .find(|(n, _)| n == name)
            .map(|(n, _)| *n)
            .ok_or_else(|| Error::InvalidSweep(format!("`{name}` is not a parameter of {}", spec.op.name())))?;
        base.insert(key, *value);
    }
    let mut axis_keys = Vec::new();
    for axis in &spec.axes {
        if !known(&axis.param) {
            return Err(Error::InvalidSweep(format!("`{}` is not a parameter of {}", axis.param, spec.op.name())));
        }
        if axis_keys.iter().any(|k: &&str| *k == axis.param) {
            return Err(Error::InvalidSweep(format!("axis `{}` appears twice", axis.param)));
        }
        axis_keys.push(defaults.iter().find(|(n, _)| *n == axis.param).unwrap().0);
    }
    let values: Vec<Vec<f64>> = spec.axes.iter().map(Axis::values).collect::<Result<_>>()?;
    let total = values.iter().map(|v| v.len() as u64).try_fold(1u64, |acc, n| acc.checked_mul(n));
    match total {
        Some(t) if t <= MAX_POINTS => {}
        Some(t) => return Err(Error::TooManyPoints(t)),
        None => return Err(Error::TooManyPoints(u64::MAX)),
    }

    let truncating = spec.op == SweepOp::VaractorCv;
    let voltage_axis = axis_keys.iter().position(|k| *k == "voltage");
    let mut pulled_in: HashSet<Vec<u64>> = HashSet::new();

    let mut columns: Vec<String> = axis_keys.iter().map(|k| k.to_string()).collect();
    columns.extend(spec.op.output_columns().iter().map(|c| c.to_string()));
    let mut rows = Vec::new();
    let mut index = vec![0usize; values.len()];
    'outer: loop {
        let point: Vec<f64> = index.iter().zip(&values).map(|(&i, v)| v[i]).collect();
        // Once a bias pulls in, larger biases with the same other coordinates are skipped.
        let other_key: Vec<u64> = point
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != voltage_axis)
            .map(|(_, v)| v.to_bits())
            .collect();
        if !(truncating && voltage_axis.is_some() && pulled_in.contains(&other_key)) {
            let mut params = base.clone();
            for (k, v) in axis_keys.iter().zip(&point) {
                params.insert(k, *v);
            }
            let outputs = evaluate(spec.op, &Params(&params), spec.spring)?;
            if truncating && outputs[2] == 1.0 {
                pulled_in.insert(other_key);
            }
            let mut row = point.clone();
            row.extend(outputs);
            rows.push(row);
        }
        for d in (0..index.len()).rev() {
            index[d] += 1;
            if index[d] < values[d].len() {
                continue 'outer;
            }
            index[d] = 0;
        }
        break;
    }
    Ok(SweepTable { columns, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::electrostatics::cv_curve;

    fn axis(param: &str, start: f64, stop: f64, steps: usize) -> Axis {
        Axis { param: param.into(), start, stop, steps, scale: Scale::Linear }
    }

    #[test]
    fn beam_length_sweep_is_monotone() {
        let spec = SweepSpec {
            op: SweepOp::BeamFrequency,
            axes: vec![axis("length", 50e-6, 100e-6, 6)],
            fixed: BTreeMap::new(),
            spring: SpringModel::default(),
        };
        let t = sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 6);
        let f = t.column("frequency_Hz").unwrap();
        assert!(f.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(t.columns, vec!["length", "frequency_Hz"]);
    }

    #[test]
    fn voltage_sweep_matches_cv_curve() {
        let spec = SweepSpec {
            op: SweepOp::VaractorCv,
            axes: vec![axis("voltage", 0.0, 30.0, 31)],
            fixed: BTreeMap::new(),
            spring: SpringModel::FixedGuided,
        };
        let t = sweep(&spec).unwrap();
        let a = PlateActuator::table1();
        let k = suspension_stiffness(&a, SpringModel::FixedGuided, &Material::polysilicon());
        let cv = cv_curve(&a, k, 0.0, 30.0, 31).unwrap();
        let stable: Vec<&Vec<f64>> = t.rows.iter().filter(|r| r[3] == 0.0).collect();
        assert_eq!(stable.len(), cv.points.len());
        for (row, p) in stable.iter().zip(&cv.points) {
            assert_eq!(row[0], p.voltage);
            assert_eq!(row[2], p.capacitance);
        }
        // Exactly one flagged row, then truncation.
        assert_eq!(t.rows.len(), cv.points.len() + 1);
        assert_eq!(t.rows.last().unwrap()[3], 1.0);
    }

    #[test]
    fn row_order_is_lexicographic() {
        let spec = SweepSpec {
            op: SweepOp::RcCenterFrequency,
            axes: vec![axis("resistance", 1e5, 2e5, 2), axis("capacitance", 1e-13, 3e-13, 3)],
            fixed: BTreeMap::new(),
            spring: SpringModel::default(),
        };
        let t = sweep(&spec).unwrap();
        let rc: Vec<(f64, f64)> = t.rows.iter().map(|r| (r[0], r[1])).collect();
        assert_eq!(
            rc,
            vec![(1e5, 1e-13), (1e5, 2e-13), (1e5, 3e-13), (2e5, 1e-13), (2e5, 2e-13), (2e5, 3e-13)]
        );
    }

    #[test]
    fn fixed_overrides_apply() {
        let spec = SweepSpec {
            op: SweepOp::DampingQ,
            axes: vec![axis("width", 10e-6, 20e-6, 2)],
            fixed: BTreeMap::from([("frequency".to_string(), 455e3)]),
            spring: SpringModel::default(),
        };
        let q = sweep(&spec).unwrap().column("q").unwrap();
        assert!((q[0] / q[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn usage_errors() {
        let mut spec = SweepSpec {
            op: SweepOp::BeamFrequency,
            axes: vec![axis("length", 50e-6, 100e-6, 0)],
            fixed: BTreeMap::new(),
            spring: SpringModel::default(),
        };
        assert!(matches!(sweep(&spec), Err(Error::InvalidSweep(_))));
        spec.axes = vec![axis("colour", 0.0, 1.0, 2)];
        assert!(matches!(sweep(&spec), Err(Error::InvalidSweep(_))));
        spec.axes = vec![];
        assert!(matches!(sweep(&spec), Err(Error::InvalidSweep(_))));
        spec.axes = vec![axis("length", 50e-6, 100e-6, 1001), axis("width", 1e-6, 2e-6, 1001)];
        assert!(matches!(sweep(&spec), Err(Error::TooManyPoints(1_002_001))));
        spec.axes = vec![axis("length", 1e-6, 2e-6, 2), axis("length", 1e-6, 2e-6, 2)];
        assert!(matches!(sweep(&spec), Err(Error::InvalidSweep(_))));
    }

    #[test]
    fn json_has_nulls_for_pulled_in_rows() {
        let spec = SweepSpec {
            op: SweepOp::VaractorCv,
            axes: vec![axis("voltage", 0.0, 30.0, 4)],
            fixed: BTreeMap::new(),
            spring: SpringModel::FixedGuided,
        };
        let json: serde_json::Value = serde_json::from_str(&sweep(&spec).unwrap().to_json().unwrap()).unwrap();
        let last = json["rows"].as_array().unwrap().last().unwrap().clone();
        assert!(last[1].is_null());
    }
}
