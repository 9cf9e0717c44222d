//! End-to-end synthesis of both filter topologies from a centre-frequency
//! target, and the side-by-side comparison of Q, tunability and footprint.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::beam::{lumped_params, natural_frequency, synthesize_length, CantileverBeam, LumpedBeam};
use crate::damping::{squeeze_film_q, synthesize_width, WidthlessBeam};
use crate::electrostatics::{
    cv_curve, overlap_capacitance, pull_in_analytic, suspension_stiffness, CvCurve, PlateActuator, SpringModel,
};
use crate::error::{require_positive, Error, Result};
use crate::filters::rc::{rc_center_frequency, rc_curve, synthesize_resistance, RcFilter, SerpentineLayout};
use crate::filters::resonator::ResonatorDrive;
use crate::filters::response::{half_power_analysis, FrequencyGrid};
use crate::materials::{Ambient, Material};
use crate::units::{sig, sig6};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Rc,
    Resonator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub f0_target: f64,
    /// Only used by the resonator path.
    pub q_target: f64,
    pub topology: Topology,
}

impl DesignSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("f0_target", self.f0_target)?;
        if self.topology == Topology::Resonator {
            require_positive("q_target", self.q_target)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SerpentineSpec {
    pub segment_length: f64,
    pub width: f64,
    pub spacing: f64,
    /// Ohm per square of the resistor film.
    pub sheet_resistance: f64,
}

impl Default for SerpentineSpec {
    fn default() -> Self {
        Self { segment_length: 300e-6, width: 2e-6, spacing: 2e-6, sheet_resistance: 30.0 }
    }
}

/// Everything a design takes as given rather than solving for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignInputs {
    pub material: Material,
    pub ambient: Ambient,
    pub varactor: PlateActuator,
    pub spring: SpringModel,
    /// Replaces the varactor's zero-bias model capacitance in the RC path.
    pub capacitance: Option<f64>,
    pub serpentine: SerpentineSpec,
    pub beam_thickness: f64,
    pub beam_gap: f64,
    /// Electrode overhang beyond each beam edge.
    pub electrode_overhang: f64,
    pub bias_voltage: f64,
    pub drive_amplitude: f64,
    pub termination: f64,
}

impl Default for DesignInputs {
    fn default() -> Self {
        Self {
            material: Material::polysilicon(),
            ambient: Ambient::air(),
            varactor: PlateActuator::table1(),
            spring: SpringModel::FixedGuided,
            capacitance: None,
            serpentine: SerpentineSpec::default(),
            beam_thickness: 2e-6,
            beam_gap: 2e-6,
            electrode_overhang: 2e-6,
            bias_voltage: 10.0,
            drive_amplitude: 0.1,
            termination: 1e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcDesign {
    pub varactor: PlateActuator,
    pub spring: SpringModel,
    pub stiffness: f64,
    pub filter: RcFilter,
    pub serpentine: SerpentineLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorDesign {
    pub beam: CantileverBeam,
    pub lumped: LumpedBeam,
    pub q_target: f64,
    pub drive: ResonatorDrive,
    pub electrode_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "lowercase")]
pub enum Design {
    Rc(RcDesign),
    Resonator(ResonatorDesign),
}

pub fn synthesize_rc(f0: f64, inputs: &DesignInputs) -> Result<RcDesign> {
    require_positive("f0_target", f0)?;
    let varactor = inputs.varactor.clone();
    varactor.validate()?;
    let capacitance = match inputs.capacitance {
        Some(c) => c,
        None => overlap_capacitance(&varactor, varactor.gap0)?,
    };
    let resistance = synthesize_resistance(f0, capacitance)?;
    let s = inputs.serpentine;
    let serpentine = SerpentineLayout::for_resistance(resistance, s.segment_length, s.width, s.spacing, s.sheet_resistance)?;
    Ok(RcDesign {
        stiffness: suspension_stiffness(&varactor, inputs.spring, &inputs.material),
        varactor,
        spring: inputs.spring,
        filter: RcFilter::new(resistance, capacitance)?,
        serpentine,
    })
}

pub fn synthesize_resonator(f0: f64, q: f64, inputs: &DesignInputs) -> Result<ResonatorDesign> {
    require_positive("f0_target", f0)?;
    require_positive("q_target", q)?;
    let length = synthesize_length(f0, inputs.beam_thickness, &inputs.material)?;
    let widthless = WidthlessBeam {
        length,
        thickness: inputs.beam_thickness,
        gap: inputs.beam_gap,
        material: inputs.material.clone(),
    };
    let width = synthesize_width(q, &widthless, f0, &inputs.ambient)?;
    let beam = widthless.with_width(width);
    let lumped = lumped_params(&beam)?;
    // Input electrode under the outer half of the beam.
    let drive = ResonatorDrive {
        bias_voltage: inputs.bias_voltage,
        drive_amplitude: inputs.drive_amplitude,
        electrode_area: 0.5 * length * width,
        termination: inputs.termination,
    };
    drive.validate()?;
    Ok(ResonatorDesign {
        beam,
        lumped,
        q_target: q,
        drive,
        electrode_width: width + 2.0 * inputs.electrode_overhang,
    })
}

pub fn synthesize_design(spec: &DesignSpec, inputs: &DesignInputs) -> Result<Design> {
    spec.validate()?;
    match spec.topology {
        Topology::Rc => synthesize_rc(spec.f0_target, inputs).map(Design::Rc),
        Topology::Resonator => synthesize_resonator(spec.f0_target, spec.q_target, inputs).map(Design::Resonator),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub f0: f64,
    pub q: f64,
}

/// Forward analysis of a synthesized design. The RC Q comes from the sampled
/// response, the resonator Q from squeeze-film loss at its own mode-1 frequency.
pub fn analyze(design: &Design, ambient: &Ambient) -> Result<Analysis> {
    match design {
        Design::Rc(rc) => {
            let f0 = rc_center_frequency(&rc.filter);
            let curve = rc_curve(&rc.filter, &FrequencyGrid::log(f0 / 1e3, f0 * 1e3))?;
            Ok(Analysis { f0, q: half_power_analysis(&curve)?.q })
        }
        Design::Resonator(r) => {
            let f0 = natural_frequency(&r.beam, 1)?;
            Ok(Analysis { f0, q: squeeze_film_q(&r.beam, f0, ambient)? })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tunability {
    /// C(V_pi-) / C(0) - 1.
    pub dc_over_c: f64,
    /// Relative centre-frequency shift over the same bias range.
    pub df0_over_f0: f64,
    pub f0_unbiased: f64,
    pub f0_at_pull_in: f64,
}

pub fn tunability(cv: &CvCurve, filter: &RcFilter) -> Result<Tunability> {
    if cv.pull_in_voltage.is_none() {
        return Err(Error::NoPullIn);
    }
    let c0 = cv.points.first().ok_or(Error::NoPullIn)?.capacitance;
    let c_edge = cv
        .pull_in_capacitance
        .or_else(|| cv.points.last().map(|p| p.capacitance))
        .ok_or(Error::NoPullIn)?;
    let dc_over_c = c_edge / c0 - 1.0;
    let df0_over_f0 = 1.0 / (1.0 + dc_over_c) - 1.0;
    let f0_unbiased = rc_center_frequency(filter);
    Ok(Tunability { dc_over_c, df0_over_f0, f0_unbiased, f0_at_pull_in: f0_unbiased * (1.0 + df0_over_f0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub area: f64,
    pub method: String,
}

pub fn footprint_area(design: &Design) -> Footprint {
    match design {
        Design::Rc(rc) => {
            let v = &rc.varactor;
            let proof_mass = v.proof_mass_length * v.proof_mass_width;
            Footprint {
                area: proof_mass + rc.serpentine.footprint(),
                method: "bounding box of varactor proof-mass plus bounding box of serpentine resistor".into(),
            }
        }
        Design::Resonator(r) => Footprint {
            area: r.beam.length * r.beam.width.max(r.electrode_width),
            method: "bounding box of beam and the electrodes beneath it".into(),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySummary {
    pub topology: Topology,
    pub f0: f64,
    pub q: f64,
    pub footprint_area: f64,
    pub footprint_method: String,
    /// |df0/f0| available from the tuning mechanism; absent when there is none.
    pub tunability: Option<f64>,
    pub tunability_note: String,
    pub key_dimensions: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rc: TopologySummary,
    pub resonator: TopologySummary,
    pub varactor_spring_model: SpringModel,
    pub varactor_pull_in_voltage: f64,
    pub dc_over_c: f64,
    pub df0_over_f0: f64,
    pub q_ratio: f64,
    pub resonator_has_higher_q: bool,
    pub rc_has_higher_tunability: bool,
    pub rc_has_larger_area: bool,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let row = |out: &mut String, name: &str, rc: String, res: String| {
            let _ = writeln!(out, "{name:<22} {rc:>16} {res:>16}");
        };
        row(&mut out, "", "rc".into(), "resonator".into());
        row(&mut out, "f0 [kHz]", sig6(self.rc.f0 / 1e3), sig6(self.resonator.f0 / 1e3));
        row(&mut out, "Q", sig(self.rc.q, 4), sig(self.resonator.q, 4));
        row(
            &mut out,
            "footprint [um^2]",
            sig6(self.rc.footprint_area * 1e12),
            sig6(self.resonator.footprint_area * 1e12),
        );
        let tune = |t: Option<f64>| t.map_or_else(|| "n/a".to_string(), |v| format!("{}%", sig(100.0 * v, 4)));
        row(&mut out, "|df0/f0| tuning", tune(self.rc.tunability), tune(self.resonator.tunability));
        let _ = writeln!(out, "Q ratio (resonator/rc): {}", sig(self.q_ratio, 4));
        let _ = writeln!(
            out,
            "varactor: {} spring, pull-in {} V, dC/C = {}%, df0/f0 = {}%",
            self.varactor_spring_model.name(),
            sig(self.varactor_pull_in_voltage, 4),
            sig(100.0 * self.dc_over_c, 4),
            sig(100.0 * self.df0_over_f0, 4)
        );
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

pub fn compare(rc: &RcDesign, resonator: &ResonatorDesign, ambient: &Ambient) -> Result<ComparisonReport> {
    let rc_design = Design::Rc(rc.clone());
    let res_design = Design::Resonator(resonator.clone());
    let rc_analysis = analyze(&rc_design, ambient)?;
    let res_analysis = analyze(&res_design, ambient)?;

    // Only C(V)/C(0) matters here, so the uncalibrated model curve suffices.
    let v_pi = pull_in_analytic(&rc.varactor, rc.stiffness);
    let cv = cv_curve(&rc.varactor, rc.stiffness, 0.0, 1.5 * v_pi, 301)?;
    let tune = tunability(&cv, &rc.filter)?;

    let rc_fp = footprint_area(&rc_design);
    let res_fp = footprint_area(&res_design);

    let rc_summary = TopologySummary {
        topology: Topology::Rc,
        f0: rc_analysis.f0,
        q: rc_analysis.q,
        footprint_area: rc_fp.area,
        footprint_method: rc_fp.method,
        tunability: Some(tune.df0_over_f0.abs()),
        tunability_note: "varactor bias from 0 V to just below pull-in".into(),
        key_dimensions: BTreeMap::from([
            ("resistance_ohm".to_string(), rc.filter.resistance),
            ("capacitance_F".to_string(), rc.filter.capacitance),
            ("proof_mass_length_m".to_string(), rc.varactor.proof_mass_length),
            ("proof_mass_width_m".to_string(), rc.varactor.proof_mass_width),
            ("gap_m".to_string(), rc.varactor.gap0),
            ("serpentine_segments".to_string(), f64::from(rc.serpentine.n_segments)),
            ("serpentine_segment_length_m".to_string(), rc.serpentine.segment_length),
        ]),
    };
    let res_summary = TopologySummary {
        topology: Topology::Resonator,
        f0: res_analysis.f0,
        q: res_analysis.q,
        footprint_area: res_fp.area,
        footprint_method: res_fp.method,
        tunability: None,
        tunability_note: "fixed geometry; no tuning mechanism is modeled".into(),
        key_dimensions: BTreeMap::from([
            ("length_m".to_string(), resonator.beam.length),
            ("width_m".to_string(), resonator.beam.width),
            ("thickness_m".to_string(), resonator.beam.thickness),
            ("gap_m".to_string(), resonator.beam.gap),
        ]),
    };

    let notes = vec![
        format!(
            "varactor pull-in uses the lumped {} spring model; a field solve of the fabricated device gave 8.81 V",
            rc.spring.name()
        ),
        format!(
            "capacitance tunes by {}% before pull-in, which moves f0 = 1/(2 pi R C) by {}%, not by the same percentage",
            sig(100.0 * tune.dc_over_c, 3),
            sig(100.0 * tune.df0_over_f0, 3)
        ),
        "areas are bounding boxes; routing, pads and anchors are excluded".into(),
    ];

    Ok(ComparisonReport {
        q_ratio: res_summary.q / rc_summary.q,
        resonator_has_higher_q: res_summary.q > rc_summary.q,
        rc_has_higher_tunability: rc_summary.tunability.unwrap_or(0.0) > res_summary.tunability.unwrap_or(0.0),
        rc_has_larger_area: rc_summary.footprint_area > res_summary.footprint_area,
        varactor_spring_model: rc.spring,
        varactor_pull_in_voltage: v_pi,
        dc_over_c: tune.dc_over_c,
        df0_over_f0: tune.df0_over_f0,
        rc: rc_summary,
        resonator: res_summary,
        notes,
    })
}
