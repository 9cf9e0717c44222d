//! Material and ambient constants, plus a small name-keyed registry.
//!
//! The polysilicon defaults (E = 160 GPa, rho = 2330 kg/m^3) are chosen so that
//! the clamped-free mode-1 formula places a 2 um thick, 76.7 um long beam at
//! 455 kHz. They are not measured film properties; override them through a
//! registry file when better numbers are available.
//!
//! Registry files are plain text, one `name.field = value` per line, `#`
//! starting a comment:
//!
//! ```text
//! # stiffer film
//! polysilicon.youngs_modulus = 169e9
//! nitrogen.dynamic_viscosity = 1.76e-5
//! nitrogen.permittivity = 8.854187817e-12
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Vacuum permittivity, F/m. Air is taken to have relative permittivity 1.
pub const EPSILON_0: f64 = 8.854187817e-12;

pub const AIR_VISCOSITY: f64 = 1.81e-5;
pub const POLYSILICON_YOUNGS_MODULUS: f64 = 160e9;
pub const POLYSILICON_DENSITY: f64 = 2330.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub name: String,
    /// Pa
    pub youngs_modulus: f64,
    /// kg/m^3
    pub density: f64,
}

impl Material {
    pub fn new(name: impl Into<String>, youngs_modulus: f64, density: f64) -> Result<Self> {
        require_positive("youngs_modulus", youngs_modulus)?;
        require_positive("density", density)?;
        Ok(Self { name: name.into(), youngs_modulus, density })
    }

    pub fn polysilicon() -> Self {
        Self {
            name: "polysilicon".into(),
            youngs_modulus: POLYSILICON_YOUNGS_MODULUS,
            density: POLYSILICON_DENSITY,
        }
    }

    /// Longitudinal acoustic velocity sqrt(E/rho), m/s.
    pub fn sound_speed(&self) -> f64 {
        (self.youngs_modulus / self.density).sqrt()
    }
}

/// The medium filling the gaps: sets squeeze-film loss and electrostatic force.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ambient {
    /// Pa s
    pub dynamic_viscosity: f64,
    /// F/m
    pub permittivity: f64,
}

impl Ambient {
    pub fn new(dynamic_viscosity: f64, permittivity: f64) -> Result<Self> {
        require_positive("dynamic_viscosity", dynamic_viscosity)?;
        require_positive("permittivity", permittivity)?;
        Ok(Self { dynamic_viscosity, permittivity })
    }

    pub fn air() -> Self {
        Self { dynamic_viscosity: AIR_VISCOSITY, permittivity: EPSILON_0 }
    }
}

impl Default for Ambient {
    fn default() -> Self {
        Self::air()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entry {
    Material(Material),
    Ambient(Ambient),
    /// A bare physical constant with its SI unit.
    Constant { value: f64, unit: &'static str },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    entries: BTreeMap<String, Entry>,
}

impl Default for Registry {
    fn default() -> Self {
        let mut entries = BTreeMap::new();
        entries.insert("polysilicon".to_string(), Entry::Material(Material::polysilicon()));
        entries.insert("air".to_string(), Entry::Ambient(Ambient::air()));
        entries.insert(
            "vacuum-permittivity".to_string(),
            Entry::Constant { value: EPSILON_0, unit: "F/m" },
        );
        Self { entries }
    }
}

impl Registry {
    pub fn get(&self, name: &str) -> Result<&Entry> {
        self.entries.get(name).ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn material(&self, name: &str) -> Result<Material> {
        match self.get(name)? {
            Entry::Material(m) => Ok(m.clone()),
            _ => Err(Error::invalid("material", format!("`{name}` is not a solid material"))),
        }
    }

    pub fn ambient(&self, name: &str) -> Result<Ambient> {
        match self.get(name)? {
            Entry::Ambient(a) => Ok(*a),
            _ => Err(Error::invalid("ambient", format!("`{name}` is not an ambient medium"))),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut reg = Self::default();
        reg.apply(&text, &path.display().to_string())?;
        Ok(reg)
    }

    /// Merge `name.field = value` lines into the registry. A name seen for the
    /// first time becomes a new entry once all of its fields are present.
    pub fn apply(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut pending: BTreeMap<String, BTreeMap<String, (f64, usize)>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                path: origin.to_string(),
                line: line_no,
                reason,
            };
            let (key, value) =
                line.split_once('=').ok_or_else(|| parse_err("expected `name.field = value`".into()))?;
            let (name, field) = key
                .trim()
                .rsplit_once('.')
                .ok_or_else(|| parse_err(format!("key `{}` has no `.field` part", key.trim())))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("`{}` is not a number", value.trim())))?;
            if !(value.is_finite() && value > 0.0) {
                return Err(parse_err(format!("`{}` must be positive", key.trim())));
            }
            pending
                .entry(name.trim().to_string())
                .or_default()
                .insert(field.trim().to_string(), (value, line_no));
        }

        for (name, fields) in pending {
            let entry = self.merge(&name, &fields).map_err(|reason| Error::Parse {
                path: origin.to_string(),
                line: fields.values().map(|(_, l)| *l).min().unwrap_or(0),
                reason,
            })?;
            self.entries.insert(name, entry);
        }
        Ok(())
    }

    fn merge(
        &self,
        name: &str,
        fields: &BTreeMap<String, (f64, usize)>,
    ) -> std::result::Result<Entry, String> {
        let get = |f: &str| fields.get(f).map(|(v, _)| *v);
        let has_solid = get("youngs_modulus").is_some() || get("density").is_some();
        let has_fluid = get("dynamic_viscosity").is_some() || get("permittivity").is_some();
        for f in fields.keys() {
            if !matches!(
                f.as_str(),
                "youngs_modulus" | "density" | "dynamic_viscosity" | "permittivity" | "value"
            ) {
                return Err(format!("unknown field `{name}.{f}`"));
            }
        }
        if has_solid && has_fluid {
            return Err(format!("`{name}` mixes solid and ambient fields"));
        }
        let existing = self.entries.get(name);
        match existing {
            Some(Entry::Material(m)) if !has_fluid && get("value").is_none() => Ok(Entry::Material(Material {
                name: name.to_string(),
                youngs_modulus: get("youngs_modulus").unwrap_or(m.youngs_modulus),
                density: get("density").unwrap_or(m.density),
            })),
            Some(Entry::Ambient(a)) if !has_solid && get("value").is_none() => Ok(Entry::Ambient(Ambient {
                dynamic_viscosity: get("dynamic_viscosity").unwrap_or(a.dynamic_viscosity),
                permittivity: get("permittivity").unwrap_or(a.permittivity),
            })),
            Some(Entry::Constant { unit, .. }) if fields.len() == 1 && get("value").is_some() => {
                Ok(Entry::Constant { value: get("value").unwrap(), unit })
            }
            Some(_) => Err(format!("fields do not match the kind of existing entry `{name}`")),
            None if has_solid => match (get("youngs_modulus"), get("density")) {
                (Some(e), Some(rho)) => Ok(Entry::Material(Material {
                    name: name.to_string(),
                    youngs_modulus: e,
                    density: rho,
                })),
                _ => Err(format!("new material `{name}` needs youngs_modulus and density")),
            },
            None if has_fluid => match (get("dynamic_viscosity"), get("permittivity")) {
                (Some(mu), Some(eps)) => Ok(Entry::Ambient(Ambient {
                    dynamic_viscosity: mu,
                    permittivity: eps,
                })),
                _ => Err(format!("new ambient `{name}` needs dynamic_viscosity and permittivity")),
            },
            None => Err(format!("new constants cannot be declared (`{name}`)")),
        }
    }
}

/// Look up a built-in entry by name.
pub fn default_material(name: &str) -> Result<Entry> {
    Registry::default().get(name).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_air() {
        let Entry::Ambient(air) = default_material("air").unwrap() else { panic!() };
        assert_eq!(air.dynamic_viscosity, 1.81e-5);
        assert_eq!(air.permittivity, EPSILON_0);
    }

    #[test]
    fn builtin_vacuum_permittivity() {
        let Entry::Constant { value, unit } = default_material("vacuum-permittivity").unwrap() else {
            panic!()
        };
        assert!((value - 8.854e-12).abs() < 1e-15);
        assert_eq!(unit, "F/m");
    }

    #[test]
    fn builtin_polysilicon() {
        let m = Registry::default().material("polysilicon").unwrap();
        assert_eq!(m.youngs_modulus, 160e9);
        assert_eq!(m.density, 2330.0);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = default_material("unobtainium").unwrap_err();
        assert!(err.to_string().contains("unobtainium"));
        assert_eq!(err.code(), "unknown_material");
    }

    #[test]
    fn registry_file_overrides_and_extends() {
        let mut reg = Registry::default();
        reg.apply(
            "# comment\npolysilicon.youngs_modulus = 169e9\n\nnitrogen.dynamic_viscosity = 1.76e-5 # trailing\nnitrogen.permittivity = 8.85e-12\nsic.youngs_modulus=400e9\nsic.density=3210\n",
            "test",
        )
        .unwrap();
        let poly = reg.material("polysilicon").unwrap();
        assert_eq!(poly.youngs_modulus, 169e9);
        assert_eq!(poly.density, 2330.0);
        assert_eq!(reg.ambient("nitrogen").unwrap().dynamic_viscosity, 1.76e-5);
        assert_eq!(reg.material("sic").unwrap().density, 3210.0);
    }

    #[test]
    fn registry_file_errors_carry_line() {
        let mut reg = Registry::default();
        let err = reg.apply("air.dynamic_viscosity = 1e-5\nbogus line\n", "cfg").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = reg.apply("air.density = 1.2\n", "cfg").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = reg.apply("half.density = 1.2\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("needs youngs_modulus"), "{err}");
        let err = reg.apply("air.colour = 3\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn material_invariants() {
        assert!(Material::new("x", 0.0, 1.0).is_err());
        assert!(Material::new("x", 1.0, -1.0).is_err());
        assert!(Ambient::new(1e-5, 0.0).is_err());
    }
}
