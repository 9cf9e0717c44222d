//! Parallel-plate varactor: capacitance, suspension stiffness, static
//! equilibrium under bias, C-V sweeps and pull-in.
//!
//! The movable plate is a perforated proof-mass on a set of identical
//! suspension beams. Electrostatic pressure is taken from the ideal
//! parallel-plate energy, scaled by `fringing_factor` so the capacitance
//! can be calibrated against field-solver or measured data. Perforations
//! reduce the electrode area and nothing else.

use serde::{Deserialize, Serialize};

use crate::error::{cube, require_positive, Error, Result};
use crate::io;
use crate::materials::{Material, EPSILON_0};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateActuator {
    pub electrode_length: f64,
    pub electrode_width: f64,
    pub proof_mass_length: f64,
    pub proof_mass_width: f64,
    pub proof_mass_thickness: f64,
    /// Zero-bias air gap between proof-mass and electrode.
    pub gap0: f64,
    pub beam_length: f64,
    pub beam_width: f64,
    /// Out-of-plane thickness of the suspension beams.
    pub beam_thickness: f64,
    pub beam_count: u32,
    pub hole_side: f64,
    pub hole_count: u32,
    pub fringing_factor: f64,
}

impl PlateActuator {
    /// The fabricated quad-beam varactor: 320x220 um Poly0 electrode under a
    /// 340x240x2 um Poly1 proof-mass with 100 holes of 4x4 um, four
    /// 100x20x2 um beams, 2 um gap.
    pub fn table1() -> Self {
        Self {
            electrode_length: 320e-6,
            electrode_width: 220e-6,
            proof_mass_length: 340e-6,
            proof_mass_width: 240e-6,
            proof_mass_thickness: 2e-6,
            gap0: 2e-6,
            beam_length: 100e-6,
            beam_width: 20e-6,
            beam_thickness: 2e-6,
            beam_count: 4,
            hole_side: 4e-6,
            hole_count: 100,
            fringing_factor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("electrode_length", self.electrode_length)?;
        require_positive("electrode_width", self.electrode_width)?;
        require_positive("proof_mass_length", self.proof_mass_length)?;
        require_positive("proof_mass_width", self.proof_mass_width)?;
        require_positive("proof_mass_thickness", self.proof_mass_thickness)?;
        require_positive("gap0", self.gap0)?;
        require_positive("beam_length", self.beam_length)?;
        require_positive("beam_width", self.beam_width)?;
        require_positive("beam_thickness", self.beam_thickness)?;
        require_positive("hole_side", self.hole_side)?;
        if self.beam_count == 0 {
            return Err(Error::invalid("beam_count", "at least one suspension beam is required"));
        }
        if !(self.fringing_factor.is_finite() && self.fringing_factor >= 1.0) {
            return Err(Error::invalid("fringing_factor", format!("must be >= 1, got {}", self.fringing_factor)));
        }
        if self.hole_area() >= self.overlap_area() {
            return Err(Error::invalid("hole_count", "total hole area must be smaller than the overlap area"));
        }
        Ok(())
    }

    pub fn overlap_area(&self) -> f64 {
        let electrode = self.electrode_length * self.electrode_width;
        let proof_mass = self.proof_mass_length * self.proof_mass_width;
        electrode.min(proof_mass)
    }

    pub fn hole_area(&self) -> f64 {
        f64::from(self.hole_count) * self.hole_side * self.hole_side
    }

    /// Electrode area net of perforations, before fringing.
    pub fn net_area(&self) -> f64 {
        self.overlap_area() - self.hole_area()
    }

    /// fringing_factor x net area; the area that enters both C and force.
    pub fn effective_area(&self) -> f64 {
        self.fringing_factor * self.net_area()
    }

    /// Set the fringing factor so the zero-bias capacitance equals `c0`.
    pub fn calibrated_to(mut self, c0: f64) -> Result<Self> {
        require_positive("c0", c0)?;
        self.fringing_factor = c0 * self.gap0 / (EPSILON_0 * self.net_area());
        self.validate()?;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpringModel {
    /// Each beam clamped at the anchor and guided at the proof-mass: 12EI/L^3.
    #[default]
    FixedGuided,
    /// Each beam free to rotate at the proof-mass: 3EI/L^3.
    Cantilever,
}

impl SpringModel {
    pub fn name(self) -> &'static str {
        match self {
            SpringModel::FixedGuided => "fixed-guided",
            SpringModel::Cantilever => "cantilever",
        }
    }

    fn coefficient(self) -> f64 {
        match self {
            SpringModel::FixedGuided => 12.0,
            SpringModel::Cantilever => 3.0,
        }
    }
}

impl std::str::FromStr for SpringModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-guided" => Ok(SpringModel::FixedGuided),
            "cantilever" => Ok(SpringModel::Cantilever),
            other => Err(Error::invalid("spring", format!("unknown spring model `{other}`"))),
        }
    }
}

pub fn overlap_capacitance(a: &PlateActuator, gap: f64) -> Result<f64> {
    if !(gap > 0.0) {
        return Err(Error::NonPositiveGap(gap));
    }
    Ok(EPSILON_0 * a.effective_area() / gap)
}

/// Total out-of-plane stiffness of the suspension, N/m.
pub fn suspension_stiffness(a: &PlateActuator, model: SpringModel, material: &Material) -> f64 {
    let inertia = a.beam_width * cube(a.beam_thickness) / 12.0;
    let per_beam = model.coefficient() * material.youngs_modulus * inertia / cube(a.beam_length);
    f64::from(a.beam_count) * per_beam
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equilibrium {
    Stable { gap: f64, displacement: f64 },
    PulledIn,
}

impl Equilibrium {
    pub fn gap(self) -> Option<f64> {
        match self {
            Equilibrium::Stable { gap, .. } => Some(gap),
            Equilibrium::PulledIn => None,
        }
    }
}

/// Force-balance residual k x - eps A V^2 / (2 (g - x)^2).
pub fn force_residual(a: &PlateActuator, k: f64, voltage: f64, displacement: f64) -> f64 {
    let remaining = a.gap0 - displacement;
    k * displacement - EPSILON_0 * a.effective_area() * voltage * voltage / (2.0 * remaining * remaining)
}

/// Stable static equilibrium at bias `voltage`.
///
/// The residual is concave in x and negative at x = 0, so a stable root in
/// [0, g/3] exists iff the residual at g/3 is non-negative. Bisection runs to
/// the resolution of f64.
pub fn equilibrium_gap(a: &PlateActuator, k: f64, voltage: f64) -> Equilibrium {
    let g = a.gap0;
    if voltage == 0.0 {
        return Equilibrium::Stable { gap: g, displacement: 0.0 };
    }
    let limit = g / 3.0;
    if force_residual(a, k, voltage, limit) < 0.0 {
        return Equilibrium::PulledIn;
    }
    let (mut lo, mut hi) = (0.0_f64, limit);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if force_residual(a, k, voltage, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = if force_residual(a, k, voltage, lo).abs() <= force_residual(a, k, voltage, hi).abs() {
        lo
    } else {
        hi
    };
    Equilibrium::Stable { gap: g - x, displacement: x }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PullInMethod {
    #[default]
    Analytic,
    Continuation,
}

impl std::str::FromStr for PullInMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(PullInMethod::Analytic),
            "continuation" => Ok(PullInMethod::Continuation),
            other => Err(Error::invalid("method", format!("unknown pull-in method `{other}`"))),
        }
    }
}

/// Continuation result: the bracket around the instability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullInEdge {
    /// Smallest bias found to pull in.
    pub voltage: f64,
    /// Largest bias found to hold a stable equilibrium.
    pub last_stable_voltage: f64,
    /// Equilibrium at `last_stable_voltage`.
    pub last_stable_gap: f64,
}

/// Bracket resolution for the continuation search. It must be much finer
/// than 1 mV for the edge displacement to sit within 0.5% of g/3, because
/// the displacement approaches g/3 like the square root of the voltage
/// distance to pull-in.
const CONTINUATION_REL_TOL: f64 = 1e-12;
const CONTINUATION_ABS_TOL: f64 = 1e-3;

pub fn pull_in_continuation(a: &PlateActuator, k: f64) -> Result<PullInEdge> {
    require_positive("k", k)?;
    a.validate()?;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut guard = 0;
    while equilibrium_gap(a, k, hi) != Equilibrium::PulledIn {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(Error::NoPullIn);
        }
    }
    while hi - lo > (CONTINUATION_REL_TOL * hi).min(CONTINUATION_ABS_TOL) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if equilibrium_gap(a, k, mid) == Equilibrium::PulledIn {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let last_stable_gap = equilibrium_gap(a, k, lo).gap().ok_or(Error::NoPullIn)?;
    Ok(PullInEdge { voltage: hi, last_stable_voltage: lo, last_stable_gap })
}

pub fn pull_in_analytic(a: &PlateActuator, k: f64) -> f64 {
    (8.0 * k * cube(a.gap0) / (27.0 * EPSILON_0 * a.effective_area())).sqrt()
}

pub fn pull_in_voltage(a: &PlateActuator, k: f64, method: PullInMethod) -> Result<f64> {
    require_positive("k", k)?;
    a.validate()?;
    match method {
        PullInMethod::Analytic => Ok(pull_in_analytic(a, k)),
        PullInMethod::Continuation => Ok(pull_in_continuation(a, k)?.voltage),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    #[serde(rename = "voltage_V")]
    pub voltage: f64,
    #[serde(rename = "capacitance_F")]
    pub capacitance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvCurve {
    pub points: Vec<CvPoint>,
    /// Present when the sweep reached pull-in.
    pub pull_in_voltage: Option<f64>,
    /// Capacitance at the last stable bias below pull-in.
    pub pull_in_capacitance: Option<f64>,
}

impl CvCurve {
    pub fn to_csv(&self) -> String {
        io::csv(
            &["voltage_V", "capacitance_F"],
            self.points.iter().map(|p| vec![p.voltage, p.capacitance]),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn capacitance_at_zero(&self) -> Option<f64> {
        self.points.first().filter(|p| p.voltage == 0.0).map(|p| p.capacitance)
    }

    /// Linear interpolation inside the sampled range.
    pub fn interpolate(&self, voltage: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        let last = pts.last()?;
        if voltage < first.voltage || voltage > last.voltage {
            return None;
        }
        let idx = pts.partition_point(|p| p.voltage < voltage);
        if idx == 0 {
            return Some(first.capacitance);
        }
        let (p0, p1) = (pts[idx - 1], pts[idx]);
        let t = (voltage - p0.voltage) / (p1.voltage - p0.voltage);
        Some(p0.capacitance + t * (p1.capacitance - p0.capacitance))
    }
}

pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    let n = steps - 1;
    (0..steps)
        .map(|i| if i == n { stop } else { start + (stop - start) * i as f64 / n as f64 })
        .collect()
}

/// Capacitance at each stable equilibrium from `v_start` to `v_stop`,
/// truncated at the first pulled-in bias.
pub fn cv_curve(a: &PlateActuator, k: f64, v_start: f64, v_stop: f64, steps: usize) -> Result<CvCurve> {
    a.validate()?;
    require_positive("k", k)?;
    if !(v_start >= 0.0 && v_start < v_stop) {
        return Err(Error::invalid("voltage range", format!("need 0 <= start < stop, got [{v_start}, {v_stop}]")));
    }
    if steps < 2 {
        return Err(Error::invalid("steps", "need at least 2 steps"));
    }
    let mut points = Vec::with_capacity(steps);
    let mut pulled_in = false;
    for v in linspace(v_start, v_stop, steps) {
        match equilibrium_gap(a, k, v) {
            Equilibrium::Stable { gap, .. } => points.push(CvPoint { voltage: v, capacitance: overlap_capacitance(a, gap)? }),
            Equilibrium::PulledIn => {
                pulled_in = true;
                break;
            }
        }
    }
    let (pull_in_voltage, pull_in_capacitance) = if pulled_in {
        let edge = pull_in_continuation(a, k)?;
        (Some(edge.voltage), Some(overlap_capacitance(a, edge.last_stable_gap)?))
    } else {
        (None, None)
    };
    Ok(CvCurve { points, pull_in_voltage, pull_in_capacitance })
}
