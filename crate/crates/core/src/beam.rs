//! Clamped-free cantilever dynamics: Euler-Bernoulli modal frequencies and
//! shapes, a finite-difference eigen-oracle, lumped parameters and inverse
//! length synthesis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{cube, quartic, require_positive, Error, Result};
use crate::io;
use crate::materials::Material;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantileverBeam {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    /// Beam-to-electrode air gap.
    pub gap: f64,
    pub material: Material,
}

impl CantileverBeam {
    pub fn new(length: f64, width: f64, thickness: f64, gap: f64, material: Material) -> Result<Self> {
        let beam = Self { length, width, thickness, gap, material };
        beam.validate()?;
        Ok(beam)
    }

    /// 76.7 x 10 x 2 um polysilicon beam over a 2 um gap.
    pub fn reference() -> Self {
        Self {
            length: 76.7e-6,
            width: 10e-6,
            thickness: 2e-6,
            gap: 2e-6,
            material: Material::polysilicon(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("length", self.length)?;
        require_positive("width", self.width)?;
        require_positive("thickness", self.thickness)?;
        require_positive("gap", self.gap)?;
        require_positive("youngs_modulus", self.material.youngs_modulus)?;
        require_positive("density", self.material.density)
    }

    /// Slenderness warnings; thin-beam theory degrades below L/h = 10.
    pub fn warnings(&self) -> Vec<String> {
        let ratio = self.length / self.thickness;
        if ratio < 10.0 {
            vec![format!("beam is stubby (L/h = {ratio:.3} < 10); Euler-Bernoulli frequencies are optimistic")]
        } else {
            Vec::new()
        }
    }

    pub fn area_moment(&self) -> f64 {
        self.width * cube(self.thickness) / 12.0
    }

    pub fn cross_section(&self) -> f64 {
        self.width * self.thickness
    }
}

/// g(x) = cos x + sech x has the same roots as cos x cosh x = -1 and stays O(1).
fn frequency_equation(x: f64) -> f64 {
    x.cos() + 1.0 / x.cosh()
}

fn frequency_equation_slope(x: f64) -> f64 {
    -x.sin() - x.tanh() / x.cosh()
}

/// First `n_max` roots of cos(x) cosh(x) = -1, one per interval [(n-1)pi, n pi].
pub fn mode_constants(n_max: usize) -> Vec<f64> {
    (1..=n_max)
        .map(|n| {
            let (mut lo, mut hi) = ((n - 1) as f64 * PI, n as f64 * PI);
            let f_lo = frequency_equation(lo);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if (frequency_equation(mid) > 0.0) == (f_lo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut x = 0.5 * (lo + hi);
            for _ in 0..20 {
                let step = frequency_equation(x) / frequency_equation_slope(x);
                x -= step;
                if step.abs() < 1e-15 * x {
                    break;
                }
            }
            x
        })
        .collect()
}

pub fn mode_constant(n: usize) -> f64 {
    mode_constants(n)[n - 1]
}

/// omega_n = sqrt(k_n^4 / 12) (h / L^2) sqrt(E / rho), returned in Hz.
fn frequency_from_constant(knl: f64, thickness: f64, length: f64, material: &Material) -> f64 {
    (quartic(knl) / 12.0).sqrt() * thickness / (length * length) * material.sound_speed() / (2.0 * PI)
}

pub fn natural_frequency(beam: &CantileverBeam, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "mode index starts at 1"));
    }
    beam.validate()?;
    Ok(frequency_from_constant(mode_constant(n), beam.thickness, beam.length, &beam.material))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSample {
    pub x_m: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalResult {
    pub mode_index: usize,
    pub frequency: f64,
    pub mode_constant: f64,
    /// Normalized to unit tip deflection.
    pub shape: Vec<ShapeSample>,
}

impl ModalResult {
    pub fn to_csv(&self) -> String {
        io::csv(&["x_m", "phi"], self.shape.iter().map(|s| vec![s.x_m, s.phi]))
    }

    /// Zero crossings strictly inside (0, L).
    pub fn interior_nodes(&self) -> usize {
        let interior = &self.shape[1..];
        interior
            .windows(2)
            .filter(|w| w[0].phi != 0.0 && (w[0].phi > 0.0) != (w[1].phi > 0.0))
            .count()
    }
}

/// Clamped-free shape cosh(bx) - cos(bx) - s (sinh(bx) - sin(bx)) before
/// normalization. The hyperbolic part is evaluated as a sum of exponentials
/// with 1 - s formed analytically, so high modes do not cancel catastrophically.
fn raw_shape(beta_l: f64, xi: f64) -> f64 {
    let u = beta_l * xi;
    let denom = beta_l.sinh() + beta_l.sin();
    let sigma = (beta_l.cosh() + beta_l.cos()) / denom;
    let one_minus_sigma = (beta_l.sin() - beta_l.cos() - (-beta_l).exp()) / denom;
    let hyperbolic = 0.5 * one_minus_sigma * u.exp() + 0.5 * (1.0 + sigma) * (-u).exp();
    hyperbolic - u.cos() + sigma * u.sin()
}

pub fn mode_shape(beam: &CantileverBeam, n: usize, samples: usize) -> Result<ModalResult> {
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2 samples"));
    }
    let frequency = natural_frequency(beam, n)?;
    let knl = mode_constant(n);
    let tip = raw_shape(knl, 1.0);
    let shape = (0..samples)
        .map(|i| {
            let xi = i as f64 / (samples - 1) as f64;
            ShapeSample { x_m: xi * beam.length, phi: raw_shape(knl, xi) / tip }
        })
        .collect();
    Ok(ModalResult { mode_index: n, frequency, mode_constant: knl, shape })
}

pub const FD_MIN_NODES: usize = 50;

/// Lowest three bending frequencies of a clamped-free beam from a uniform
/// finite-difference grid of `nodes` free unknowns.
///
/// Central second-order stencils for w''''. Ghost nodes impose w = w' = 0 at
/// the root and w'' = w''' = 0 at the tip. Halving the tip row makes the
/// stiffness matrix symmetric with a half-weight tip mass, and the diagonal
/// mass is folded in symmetrically before the dense eigensolve.
pub fn fd_modal_oracle(beam: &CantileverBeam, nodes: usize) -> Result<Vec<f64>> {
    if nodes < FD_MIN_NODES {
        return Err(Error::InsufficientNodes { got: nodes, min: FD_MIN_NODES });
    }
    beam.validate()?;
    let n = nodes;
    let mut k = DMatrix::<f64>::zeros(n, n);
    // Row i holds the stencil centred on grid node i + 1.
    for i in 0..n {
        let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
        for (offset, &c) in stencil.iter().enumerate() {
            let j = i as isize + offset as isize - 2;
            if j >= 0 && (j as usize) < n {
                k[(i, j as usize)] += c;
            }
        }
    }
    // Root: ghost w_-1 = w_1 adds to the first row's own diagonal.
    k[(0, 0)] += 1.0;
    // Tip: w_{N+1} = 2 w_N - w_{N-1}, w_{N+2} = 4 w_N - 4 w_{N-1} + w_{N-2}.
    let last = n - 1;
    k[(last - 1, last)] += 2.0;
    k[(last - 1, last - 1)] -= 1.0;
    k[(last, last)] = 2.0;
    k[(last, last - 1)] = -4.0;
    k[(last, last - 2)] = 2.0;
    for j in 0..n {
        k[(last, j)] *= 0.5;
    }
    // Mass is identity except 1/2 on the tip row; scale to M^-1/2 K M^-1/2.
    let tip_scale = 2.0_f64.sqrt();
    for j in 0..n {
        k[(last, j)] *= tip_scale;
        k[(j, last)] *= tip_scale;
    }

    let mut eig: Vec<f64> = k.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    if eig.len() < 3 {
        return Err(Error::EigenSolve(3));
    }
    let dx = beam.length / n as f64;
    let scale = beam.material.youngs_modulus * beam.area_moment()
        / (beam.material.density * beam.cross_section() * quartic(dx));
    Ok(eig[..3].iter().map(|&lambda| (lambda * scale).sqrt() / (2.0 * PI)).collect())
}

/// Mode-1 length for a target frequency; inverts `natural_frequency`.
pub fn synthesize_length(f_target: f64, thickness: f64, material: &Material) -> Result<f64> {
    require_positive("f_target", f_target)?;
    require_positive("thickness", thickness)?;
    let knl = mode_constant(1);
    let l2 = (quartic(knl) / 12.0).sqrt() * thickness * material.sound_speed() / (2.0 * PI * f_target);
    Ok(l2.sqrt())
}

/// Tip-referred effective mass coefficient for mode 1.
pub const EFFECTIVE_MASS_COEFFICIENT: f64 = 0.2427;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LumpedBeam {
    pub k_eff: f64,
    pub m_eff: f64,
}

impl LumpedBeam {
    pub fn omega(&self) -> f64 {
        (self.k_eff / self.m_eff).sqrt()
    }

    pub fn frequency(&self) -> f64 {
        self.omega() / (2.0 * PI)
    }
}

pub fn lumped_params(beam: &CantileverBeam) -> Result<LumpedBeam> {
    beam.validate()?;
    let k_eff = 3.0 * beam.material.youngs_modulus * beam.area_moment() / cube(beam.length);
    let m_eff = EFFECTIVE_MASS_COEFFICIENT * beam.material.density * beam.cross_section() * beam.length;
    Ok(LumpedBeam { k_eff, m_eff })
}
