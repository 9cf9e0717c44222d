//! TOML run configuration. The whole file is parsed and checked before any
//! computation starts; unknown keys are rejected.
//!
//! ```toml
//! registry = "materials.txt"   # optional `name.field = value` registry file
//! material = "polysilicon"
//! ambient = "air"
//!
//! [materials.polysilicon]      # inline registry overrides
//! youngs_modulus = 169e9
//!
//! [beam]
//! length = 80e-6
//!
//! [varactor]
//! gap0 = 2e-6
//! spring = "cantilever"
//!
//! [sweep]
//! op = "beam-frequency"
//! axes = [{ param = "length", start = 50e-6, stop = 100e-6, steps = 6 }]
//!
//! [output]
//! path = "out.csv"
//! format = "csv"
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mems_bpf::beam::CantileverBeam;
use mems_bpf::electrostatics::{PlateActuator, SpringModel};
use mems_bpf::materials::Registry;
use mems_bpf::sweep::SweepSpec;
use mems_bpf::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub registry: Option<PathBuf>,
    pub material: Option<String>,
    pub ambient: Option<String>,
    #[serde(default)]
    pub materials: BTreeMap<String, BTreeMap<String, f64>>,
    #[serde(default)]
    pub beam: BeamConfig,
    #[serde(default)]
    pub varactor: VaractorConfig,
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub length: Option<f64>,
    pub width: Option<f64>,
    pub thickness: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaractorConfig {
    pub electrode_length: Option<f64>,
    pub electrode_width: Option<f64>,
    pub proof_mass_length: Option<f64>,
    pub proof_mass_width: Option<f64>,
    pub proof_mass_thickness: Option<f64>,
    pub gap0: Option<f64>,
    pub beam_length: Option<f64>,
    pub beam_width: Option<f64>,
    pub beam_thickness: Option<f64>,
    pub beam_count: Option<u32>,
    pub hole_side: Option<f64>,
    pub hole_count: Option<u32>,
    pub fringing_factor: Option<f64>,
    pub spring: Option<SpringModel>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        // Relative registry paths are relative to the config file.
        if let (Some(reg), Some(dir)) = (cfg.registry.as_mut(), path.parent()) {
            if reg.is_relative() {
                *reg = dir.join(&*reg);
            }
        }
        // Resolve everything that can fail now rather than mid-run.
        cfg.registry()?;
        Ok(cfg)
    }

    pub fn registry(&self) -> Result<Registry> {
        let mut reg = match &self.registry {
            Some(path) => Registry::load(path)?,
            None => Registry::default(),
        };
        if !self.materials.is_empty() {
            let mut text = String::new();
            for (name, fields) in &self.materials {
                for (field, value) in fields {
                    let _ = writeln!(text, "{name}.{field} = {value:e}");
                }
            }
            reg.apply(&text, "[materials]").map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(m) = &self.material {
            reg.material(m)?;
        }
        if let Some(a) = &self.ambient {
            reg.ambient(a)?;
        }
        Ok(reg)
    }

    pub fn beam_over(&self, mut beam: CantileverBeam) -> CantileverBeam {
        let b = &self.beam;
        beam.length = b.length.unwrap_or(beam.length);
        beam.width = b.width.unwrap_or(beam.width);
        beam.thickness = b.thickness.unwrap_or(beam.thickness);
        beam.gap = b.gap.unwrap_or(beam.gap);
        beam
    }

    pub fn varactor_over(&self, mut a: PlateActuator) -> PlateActuator {
        let v = &self.varactor;
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(x) = v.$f { a.$f = x; } )* };
        }
        set!(
            electrode_length,
            electrode_width,
            proof_mass_length,
            proof_mass_width,
            proof_mass_thickness,
            gap0,
            beam_length,
            beam_width,
            beam_thickness,
            beam_count,
            hole_side,
            hole_count,
            fringing_factor
        );
        a
    }
}
