//! Spectral operators on the periodic grid: transforms, derivatives, curl,
//! Leray projection and 2/3-rule dealiasing.
//!
//! Odd derivatives use wavenumbers with the Nyquist mode zeroed so that the
//! discrete operators keep real fields real and satisfy `div(curl) = 0`,
//! `curl(grad) = 0` and `div(P f) = 0` exactly up to round-off.

use std::borrow::Cow;
use std::sync::Arc;

use realfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{Fft3, SpectralIndex};
use crate::field::{ScalarField, Values, VectorField3};
use crate::grid::Grid;
use crate::par::map_sum;
use crate::par::prelude::*;

pub type Spec = Vec<Complex64>;
pub type Spec3 = [Spec; 3];

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug)]
struct Inner {
    grid: Grid,
    fft: Fft3,
    index: SpectralIndex,
    /// Derivative wavenumbers per axis, Nyquist zeroed. Axis 0 has n/2+1 bins.
    kd: [Vec<f64>; 3],
    /// Full wavenumbers per axis (Nyquist kept), for the Laplacian.
    kf: [Vec<f64>; 3],
    /// 2/3-rule keep flags per axis.
    keep: [Vec<bool>; 3],
}

/// Spectral engine bound to one grid. Cheap to clone.
#[derive(Debug, Clone)]
pub struct Spectral {
    inner: Arc<Inner>,
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n();
        let h = n / 2 + 1;
        let k0 = grid.k0();
        let axis = |len: usize, nyq_zero: bool| -> Vec<f64> {
            (0..len)
                .map(|m| {
                    let s = grid.mode(m);
                    if nyq_zero && 2 * m == n {
                        0.0
                    } else {
                        k0 * s as f64
                    }
                })
                .collect()
        };
        let keep_axis = |len: usize| -> Vec<bool> {
            (0..len)
                .map(|m| 3 * grid.mode(m).unsigned_abs() as usize <= n)
                .collect()
        };
        Self {
            inner: Arc::new(Inner {
                grid,
                fft: Fft3::new(n),
                index: SpectralIndex::new(n),
                kd: [axis(h, true), axis(n, true), axis(n, true)],
                kf: [axis(h, false), axis(n, false), axis(n, false)],
                keep: [keep_axis(h), keep_axis(n), keep_axis(n)],
            }),
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.inner.grid
    }

    #[inline]
    pub fn index(&self) -> SpectralIndex {
        self.inner.index
    }

    // ----- raw coefficient-array kernels -----

    pub fn fwd(&self, phys: &[f64]) -> Spec {
        self.inner.fft.forward(phys)
    }

    pub fn inv(&self, spec: &[Complex64]) -> Vec<f64> {
        self.inner.fft.inverse(spec)
    }

    pub fn fwd3(&self, phys: [&[f64]; 3]) -> Spec3 {
        [self.fwd(phys[0]), self.fwd(phys[1]), self.fwd(phys[2])]
    }

    pub fn inv3(&self, spec: &Spec3) -> [Vec<f64>; 3] {
        [self.inv(&spec[0]), self.inv(&spec[1]), self.inv(&spec[2])]
    }

    /// Derivative wavenumber vector of a storage offset.
    #[inline]
    pub fn kd(&self, offset: usize) -> [f64; 3] {
        let (ix, jy, kz) = self.inner.index.bins(offset);
        [self.inner.kd[0][ix], self.inner.kd[1][jy], self.inner.kd[2][kz]]
    }

    /// Full `|k|^2` of a storage offset.
    #[inline]
    pub fn k2(&self, offset: usize) -> f64 {
        let (ix, jy, kz) = self.inner.index.bins(offset);
        let kf = &self.inner.kf;
        kf[0][ix] * kf[0][ix] + kf[1][jy] * kf[1][jy] + kf[2][kz] * kf[2][kz]
    }

    #[inline]
    pub fn kept(&self, offset: usize) -> bool {
        let (ix, jy, kz) = self.inner.index.bins(offset);
        let keep = &self.inner.keep;
        keep[0][ix] && keep[1][jy] && keep[2][kz]
    }

    pub fn deriv_hat(&self, f: &[Complex64], axis: usize) -> Spec {
        let mut out = f.to_vec();
        par_iter_mut!(out)
            .enumerate()
            .for_each(|(o, c)| *c *= I * self.kd(o)[axis]);
        out
    }

    /// Mixed second derivative `d_a d_b`, built from the odd-derivative
    /// wavenumbers so that it equals `deriv(deriv(f))`.
    pub fn deriv2_hat(&self, f: &[Complex64], a: usize, b: usize) -> Spec {
        let mut out = f.to_vec();
        par_iter_mut!(out).enumerate().for_each(|(o, c)| {
            let k = self.kd(o);
            *c *= -k[a] * k[b];
        });
        out
    }

    pub fn laplacian_hat(&self, f: &[Complex64]) -> Spec {
        let mut out = f.to_vec();
        par_iter_mut!(out)
            .enumerate()
            .for_each(|(o, c)| *c *= -self.k2(o));
        out
    }

    /// Leray projection in place; the mean mode is left untouched.
    pub fn project_hat(&self, f: &mut Spec3) {
        let [a, b, c] = f;
        par_iter_mut!(a)
            .zip(par_iter_mut!(b))
            .zip(par_iter_mut!(c))
            .enumerate()
            .for_each(|(o, ((x, y), z))| {
                let k = self.kd(o);
                let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if kk > 0.0 {
                    let dot = (k[0] * *x + k[1] * *y + k[2] * *z) / kk;
                    *x -= k[0] * dot;
                    *y -= k[1] * dot;
                    *z -= k[2] * dot;
                }
            });
    }

    pub fn dealias_hat(&self, f: &mut [Complex64]) {
        par_iter_mut!(f).enumerate().for_each(|(o, c)| {
            if !self.kept(o) {
                *c = Complex64::new(0.0, 0.0);
            }
        });
    }

    pub fn divergence_hat(&self, f: &Spec3) -> Spec {
        let mut out = vec![Complex64::new(0.0, 0.0); f[0].len()];
        par_iter_mut!(out).enumerate().for_each(|(o, d)| {
            let k = self.kd(o);
            *d = I * (k[0] * f[0][o] + k[1] * f[1][o] + k[2] * f[2][o]);
        });
        out
    }

    pub fn curl_hat(&self, f: &Spec3) -> Spec3 {
        let len = f[0].len();
        let mut out = [
            vec![Complex64::new(0.0, 0.0); len],
            vec![Complex64::new(0.0, 0.0); len],
            vec![Complex64::new(0.0, 0.0); len],
        ];
        for (c, dst) in out.iter_mut().enumerate() {
            let (p, q) = ((c + 1) % 3, (c + 2) % 3);
            par_iter_mut!(dst).enumerate().for_each(|(o, d)| {
                let k = self.kd(o);
                *d = I * (k[p] * f[q][o] - k[q] * f[p][o]);
            });
        }
        out
    }

    /// Physical first derivatives of each component: `out[alpha][j] = d_j f_alpha`.
    pub fn gradient_phys(&self, f: &Spec3) -> [[Vec<f64>; 3]; 3] {
        let g = |a: usize, j: usize| self.inv(&self.deriv_hat(&f[a], j));
        [
            [g(0, 0), g(0, 1), g(0, 2)],
            [g(1, 0), g(1, 1), g(1, 2)],
            [g(2, 0), g(2, 1), g(2, 2)],
        ]
    }

    /// Mean of `f^2` over the box from spectral coefficients (Parseval).
    pub fn mean_square_hat(&self, f: &[Complex64]) -> f64 {
        let idx = self.inner.index;
        let n3 = self.grid().len() as f64;
        map_sum(f.len(), |o| idx.weight(o) * f[o].norm_sqr()) / (n3 * n3)
    }

    /// Coefficient of mode `m` in the full (two-sided) spectrum.
    pub fn coefficient(&self, f: &[Complex64], m: [i64; 3]) -> Complex64 {
        let n = self.grid().n() as i64;
        let bin = |v: i64| v.rem_euclid(n) as usize;
        if m[0] >= 0 && m[0] <= n / 2 {
            f[self.inner.index.offset(m[0] as usize, bin(m[1]), bin(m[2]))]
        } else {
            f[self.inner.index.offset(bin(-m[0]), bin(-m[1]), bin(-m[2]))].conj()
        }
    }

    // ----- field-level operations -----

    pub fn to_spectral(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_grid(f.grid())?;
        let data = f.as_physical()?;
        if let Some(e) = f.find_non_finite() {
            return Err(e);
        }
        Ok(ScalarField::spectral(f.grid(), self.fwd(data)))
    }

    pub fn to_physical(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_grid(f.grid())?;
        let data = f.as_spectral()?;
        Ok(ScalarField::physical(f.grid(), self.inv(data)))
    }

    pub fn vector_to_spectral(&self, f: &VectorField3) -> Result<VectorField3> {
        let [a, b, c] = f.components();
        VectorField3::new([self.to_spectral(a)?, self.to_spectral(b)?, self.to_spectral(c)?])
    }

    pub fn vector_to_physical(&self, f: &VectorField3) -> Result<VectorField3> {
        let [a, b, c] = f.components();
        VectorField3::new([self.to_physical(a)?, self.to_physical(b)?, self.to_physical(c)?])
    }

    /// Spectral coefficients of a field in either representation.
    pub fn coeffs<'a>(&self, f: &'a ScalarField) -> Result<Cow<'a, [Complex64]>> {
        self.check_grid(f.grid())?;
        Ok(match f.values() {
            Values::Spectral(v) => Cow::Borrowed(v.as_slice()),
            Values::Physical(v) => Cow::Owned(self.fwd(v)),
        })
    }

    pub fn coeffs3(&self, f: &VectorField3) -> Result<Spec3> {
        let [a, b, c] = f.components();
        Ok([
            self.coeffs(a)?.into_owned(),
            self.coeffs(b)?.into_owned(),
            self.coeffs(c)?.into_owned(),
        ])
    }

    fn wrap_like(&self, like: &ScalarField, spec: Spec) -> ScalarField {
        if like.is_spectral() {
            ScalarField::spectral(like.grid(), spec)
        } else {
            ScalarField::physical(like.grid(), self.inv(&spec))
        }
    }

    fn wrap3_like(&self, like: &ScalarField, spec: Spec3) -> VectorField3 {
        let grid = like.grid();
        if like.is_spectral() {
            VectorField3::from_spectral(grid, spec)
        } else {
            VectorField3::from_physical(grid, self.inv3(&spec))
        }
    }

    /// `d f / d x_axis`, returned in the representation of the input.
    pub fn partial(&self, f: &ScalarField, axis: usize) -> Result<ScalarField> {
        let c = self.coeffs(f)?;
        Ok(self.wrap_like(f, self.deriv_hat(&c, axis)))
    }

    pub fn gradient(&self, f: &ScalarField) -> Result<VectorField3> {
        let c = self.coeffs(f)?;
        let spec = [self.deriv_hat(&c, 0), self.deriv_hat(&c, 1), self.deriv_hat(&c, 2)];
        Ok(self.wrap3_like(f, spec))
    }

    pub fn laplacian(&self, f: &ScalarField) -> Result<ScalarField> {
        let c = self.coeffs(f)?;
        Ok(self.wrap_like(f, self.laplacian_hat(&c)))
    }

    pub fn curl(&self, f: &VectorField3) -> Result<VectorField3> {
        let c = self.coeffs3(f)?;
        Ok(self.wrap3_like(f.component(0), self.curl_hat(&c)))
    }

    pub fn divergence(&self, f: &VectorField3) -> Result<ScalarField> {
        let c = self.coeffs3(f)?;
        Ok(self.wrap_like(f.component(0), self.divergence_hat(&c)))
    }

    pub fn leray_project(&self, f: &VectorField3) -> Result<VectorField3> {
        let mut c = self.coeffs3(f)?;
        self.project_hat(&mut c);
        Ok(self.wrap3_like(f.component(0), c))
    }

    /// Zero every mode with some `|k_i| > n/3`. Requires a spectral field.
    pub fn dealias(&self, f: &ScalarField) -> Result<ScalarField> {
        self.check_grid(f.grid())?;
        let mut c = f.as_spectral()?.to_vec();
        self.dealias_hat(&mut c);
        Ok(ScalarField::spectral(f.grid(), c))
    }

    /// Mean of `f^2` (Parseval for spectral input, direct for physical).
    pub fn mean_square(&self, f: &ScalarField) -> Result<f64> {
        self.check_grid(f.grid())?;
        Ok(match f.values() {
            Values::Spectral(v) => self.mean_square_hat(v),
            Values::Physical(v) => map_sum(v.len(), |i| v[i] * v[i]) / v.len() as f64,
        })
    }

    fn check_grid(&self, g: Grid) -> Result<()> {
        if g == self.grid() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
