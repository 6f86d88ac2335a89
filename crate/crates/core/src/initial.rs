//! Initial velocity fields.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::VectorField3;
use crate::grid::Grid;
use crate::spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    /// `(cos x sin y sin z, -sin x cos y sin z, 0)`.
    TaylorGreen,
    /// Steady planar flow `(d_2 psi, -d_1 psi, 0)` with `psi = sin x sin y`.
    Eigen2d,
    /// `(sin x_2, 0, 0)`.
    Shear,
    /// Seeded smooth divergence-free field with modes `|k| <= 4`.
    Random,
    Zero,
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "taylor_green" => Self::TaylorGreen,
            "eigen2d" => Self::Eigen2d,
            "shear" => Self::Shear,
            "random" => Self::Random,
            "zero" => Self::Zero,
            other => return Err(Error::config("ic", format!("unknown initial condition `{other}`"))),
        })
    }
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TaylorGreen => "taylor_green",
            Self::Eigen2d => "eigen2d",
            Self::Shear => "shear",
            Self::Random => "random",
            Self::Zero => "zero",
        }
    }

    /// Sample the field; coordinates are scaled by `2 pi / L`.
    pub fn build(&self, sp: &Spectral, amplitude: f64, seed: u64) -> Result<VectorField3> {
        let g = sp.grid();
        let k = g.k0();
        let a = amplitude;
        Ok(match self {
            Self::TaylorGreen => VectorField3::from_fn(g, |x| {
                let (x1, x2, x3) = (k * x[0], k * x[1], k * x[2]);
                [
                    a * x1.cos() * x2.sin() * x3.sin(),
                    -a * x1.sin() * x2.cos() * x3.sin(),
                    0.0,
                ]
            }),
            Self::Eigen2d => VectorField3::from_fn(g, |x| {
                let (x1, x2) = (k * x[0], k * x[1]);
                [a * x1.sin() * x2.cos(), -a * x1.cos() * x2.sin(), 0.0]
            }),
            Self::Shear => VectorField3::from_fn(g, |x| [a * (k * x[1]).sin(), 0.0, 0.0]),
            Self::Random => random_field(sp, g, a, seed)?,
            Self::Zero => VectorField3::zeros(g),
        })
    }
}

fn random_field(sp: &Spectral, g: Grid, amplitude: f64, seed: u64) -> Result<VectorField3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 3], [f64; 3], f64)> = (0..16)
        .map(|_| {
            let mut m = [0.0; 3];
            while m.iter().all(|v| *v == 0.0) {
                m = std::array::from_fn(|_| rng.gen_range(-3i32..=3) as f64);
            }
            let c: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            (m, c, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .filter(|(m, _, _)| m.iter().map(|v| v * v).sum::<f64>() <= 16.0)
        .collect();
    let k0 = g.k0();
    let raw = VectorField3::from_fn(g, |x| {
        let mut u = [0.0; 3];
        for (m, c, ph) in &modes {
            let s = (k0 * (m[0] * x[0] + m[1] * x[1] + m[2] * x[2]) + ph).sin();
            for i in 0..3 {
                u[i] += c[i] * s;
            }
        }
        u
    });
    let p = sp.leray_project(&raw)?;
    let peak = p.max_norm();
    let s = if peak > 0.0 { amplitude / peak } else { 0.0 };
    let comps = p.to_physical_arrays()?.map(|c| c.into_iter().map(|v| v * s).collect());
    Ok(VectorField3::from_physical(g, comps))
}
