//! Squeeze-film quality factor of a beam over its electrode, using the rigid
//! plate estimate Q = 2 pi rho h y0^3 f / (mu b^2), and its inverse for width.

use std::f64::consts::PI;

use crate::beam::{natural_frequency, CantileverBeam};
use crate::error::{cube, require_positive, Result};
use crate::materials::{Ambient, Material};

pub fn squeeze_film_q(beam: &CantileverBeam, frequency: f64, ambient: &Ambient) -> Result<f64> {
    require_positive("frequency", frequency)?;
    beam.validate()?;
    Ok(2.0 * PI * beam.material.density * beam.thickness * cube(beam.gap) * frequency
        / (ambient.dynamic_viscosity * beam.width * beam.width))
}

/// Q at the beam's own mode-1 frequency.
pub fn squeeze_film_q_at_resonance(beam: &CantileverBeam, ambient: &Ambient) -> Result<f64> {
    squeeze_film_q(beam, natural_frequency(beam, 1)?, ambient)
}

/// Beam without a width yet; everything Q depends on except b.
#[derive(Debug, Clone, PartialEq)]
pub struct WidthlessBeam {
    pub length: f64,
    pub thickness: f64,
    pub gap: f64,
    pub material: Material,
}

impl WidthlessBeam {
    pub fn with_width(&self, width: f64) -> CantileverBeam {
        CantileverBeam {
            length: self.length,
            width,
            thickness: self.thickness,
            gap: self.gap,
            material: self.material.clone(),
        }
    }
}

pub fn synthesize_width(q_target: f64, beam: &WidthlessBeam, frequency: f64, ambient: &Ambient) -> Result<f64> {
    require_positive("q_target", q_target)?;
    require_positive("frequency", frequency)?;
    require_positive("thickness", beam.thickness)?;
    require_positive("gap", beam.gap)?;
    Ok((2.0 * PI * beam.material.density * beam.thickness * cube(beam.gap) * frequency
        / (ambient.dynamic_viscosity * q_target))
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn beam(width: f64) -> CantileverBeam {
        let mut b = CantileverBeam::reference();
        b.width = width;
        b
    }

    fn widthless() -> WidthlessBeam {
        let b = CantileverBeam::reference();
        WidthlessBeam { length: b.length, thickness: b.thickness, gap: b.gap, material: b.material }
    }

    #[test]
    fn q_of_design_width() {
        let q = squeeze_film_q(&beam(10.85e-6), 455e3, &Ambient::air()).unwrap();
        assert!(rel(q, 50.0) < 0.01, "{q}");
        let q = squeeze_film_q(&beam(10.67e-6), 455e3, &Ambient::air()).unwrap();
        assert!((q - 51.7).abs() < 0.05, "{q}");
    }

    #[test]
    fn q_scaling_laws() {
        let air = Ambient::air();
        let q = squeeze_film_q(&beam(10e-6), 455e3, &air).unwrap();
        let q2 = squeeze_film_q(&beam(20e-6), 455e3, &air).unwrap();
        assert!(rel(q2, q / 4.0) < 1e-14);
        let mut b = beam(10e-6);
        b.gap *= 3.0;
        assert!(rel(squeeze_film_q(&b, 455e3, &air).unwrap(), 27.0 * q) < 1e-13);
        assert!(squeeze_film_q(&b, 0.0, &air).is_err());
    }

    #[test]
    fn width_for_q50() {
        let b = synthesize_width(50.0, &widthless(), 455e3, &Ambient::air()).unwrap();
        assert!((b - 10.85e-6).abs() < 0.01e-6, "{b}");
        assert!(rel(b, 10.67e-6) < 0.03);
        let b4 = synthesize_width(200.0, &widthless(), 455e3, &Ambient::air()).unwrap();
        assert!(rel(b4, b / 2.0) < 1e-14);
    }

    proptest! {
        #[test]
        fn width_synthesis_inverts_q(q in 1.0f64..1000.0, f in 1e4f64..1e8, h in 0.5e-6f64..5e-6, gap in 0.5e-6f64..5e-6) {
            let mut wb = widthless();
            wb.thickness = h;
            wb.gap = gap;
            let air = Ambient::air();
            let b = synthesize_width(q, &wb, f, &air).unwrap();
            let back = squeeze_film_q(&wb.with_width(b), f, &air).unwrap();
            prop_assert!(rel(back, q) < 1e-9);
        }
    }
}
