//! Real-to-complex 3-D FFT on an `n^3` periodic grid.
//!
//! Physical arrays are x-fastest (`i + n*(j + n*k)`). Spectral arrays hold the
//! `n/2 + 1` non-negative x-modes and use a z-fastest layout,
//! `kz + n*(jy + n*ix)`, so the last transform pass runs on contiguous lines.
//! Only pointwise spectral operations touch spectral arrays, so the layout
//! is private to this module and [`SpectralIndex`].

use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::par::prelude::*;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Mapping between spectral storage offsets and mode numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralIndex {
    n: usize,
    h: usize,
}

impl SpectralIndex {
    pub fn new(n: usize) -> Self {
        Self { n, h: n / 2 + 1 }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.h * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of stored x-modes, `n/2 + 1`.
    #[inline]
    pub fn half(&self) -> usize {
        self.h
    }

    #[inline]
    pub fn offset(&self, ix: usize, jy: usize, kz: usize) -> usize {
        kz + self.n * (jy + self.n * ix)
    }

    /// FFT bins `(ix, jy, kz)` of a storage offset.
    #[inline]
    pub fn bins(&self, offset: usize) -> (usize, usize, usize) {
        let n = self.n;
        (offset / (n * n), (offset / n) % n, offset % n)
    }

    /// Signed mode numbers of a storage offset (Nyquist reported as `+n/2`).
    #[inline]
    pub fn modes(&self, offset: usize) -> [i64; 3] {
        let (ix, jy, kz) = self.bins(offset);
        [ix as i64, self.signed(jy), self.signed(kz)]
    }

    #[inline]
    fn signed(&self, m: usize) -> i64 {
        if m <= self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Multiplicity of a stored coefficient in the full Hermitian spectrum:
    /// 1 for the `kx = 0` and Nyquist planes, 2 otherwise.
    #[inline]
    pub fn weight(&self, offset: usize) -> f64 {
        let ix = offset / (self.n * self.n);
        if ix == 0 || 2 * ix == self.n {
            1.0
        } else {
            2.0
        }
    }
}

/// Cached plans for forward and inverse transforms of one grid size.
#[derive(Clone)]
pub struct Fft3 {
    n: usize,
    index: SpectralIndex,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft3").field("n", &self.n).finish()
    }
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            n,
            index: SpectralIndex::new(n),
            r2c: real.plan_fft_forward(n),
            c2r: real.plan_fft_inverse(n),
            fwd: cplx.plan_fft_forward(n),
            inv: cplx.plan_fft_inverse(n),
        }
    }

    pub fn index(&self) -> SpectralIndex {
        self.index
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, phys: &[f64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.index.len()];
        self.forward_into(phys, &mut out);
        out
    }

    /// Inverse transform including the `1/n^3` normalization.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n * self.n * self.n];
        self.inverse_into(spec, &mut out);
        out
    }

    pub fn forward_into(&self, phys: &[f64], out: &mut [Complex64]) {
        let n = self.n;
        let h = self.index.h;
        assert_eq!(phys.len(), n * n * n);
        assert_eq!(out.len(), h * n * n);

        // Pass 1, per z-plane: real transform along x, then complex along y.
        // Result layout [k][ix][jy].
        let mut planes = vec![ZERO; h * n * n];
        par_chunks_mut!(planes, h * n)
            .enumerate()
            .for_each(|(k, plane)| {
                let mut line = vec![0.0; n];
                let mut spec_line = vec![ZERO; h];
                let mut scratch = vec![ZERO; self.scratch_len()];
                for j in 0..n {
                    let start = n * (j + n * k);
                    line.copy_from_slice(&phys[start..start + n]);
                    self.r2c
                        .process_with_scratch(&mut line, &mut spec_line, &mut scratch)
                        .expect("r2c buffer sizes");
                    for (ix, c) in spec_line.iter().enumerate() {
                        plane[ix * n + j] = *c;
                    }
                }
                self.fwd.process_with_scratch(plane, &mut scratch);
            });

        // Pass 2, per x-mode block: gather along z and transform.
        par_chunks_mut!(out, n * n)
            .enumerate()
            .for_each(|(ix, block)| {
                for kz in 0..n {
                    let src = &planes[(ix + h * kz) * n..(ix + h * kz) * n + n];
                    for (jy, c) in src.iter().enumerate() {
                        block[jy * n + kz] = *c;
                    }
                }
                let mut scratch = vec![ZERO; self.scratch_len()];
                self.fwd.process_with_scratch(block, &mut scratch);
            });
    }

    pub fn inverse_into(&self, spec: &[Complex64], out: &mut [f64]) {
        let n = self.n;
        let h = self.index.h;
        assert_eq!(spec.len(), h * n * n);
        assert_eq!(out.len(), n * n * n);

        // Pass 1, per x-mode block: inverse along z.
        let mut blocks = spec.to_vec();
        par_chunks_mut!(blocks, n * n).for_each(|block| {
            let mut scratch = vec![ZERO; self.scratch_len()];
            self.inv.process_with_scratch(block, &mut scratch);
        });

        // Pass 2, per z-plane: gather [ix][jy], inverse along y, then c2r along x.
        let norm = 1.0 / (n * n * n) as f64;
        par_chunks_mut!(out, n * n)
            .enumerate()
            .for_each(|(k, plane_out)| {
                let mut plane = vec![ZERO; h * n];
                for ix in 0..h {
                    for jy in 0..n {
                        plane[ix * n + jy] = blocks[k + n * (jy + n * ix)];
                    }
                }
                let mut scratch = vec![ZERO; self.scratch_len()];
                self.inv.process_with_scratch(&mut plane, &mut scratch);
                let mut spec_line = vec![ZERO; h];
                for j in 0..n {
                    for ix in 0..h {
                        spec_line[ix] = plane[ix * n + j];
                    }
                    // The kx = 0 and Nyquist bins of a real signal are real.
                    spec_line[0].im = 0.0;
                    spec_line[h - 1].im = 0.0;
                    let line = &mut plane_out[j * n..j * n + n];
                    self.c2r
                        .process_with_scratch(&mut spec_line, line, &mut scratch)
                        .expect("c2r buffer sizes");
                    line.iter_mut().for_each(|v| *v *= norm);
                }
            });
    }

    fn scratch_len(&self) -> usize {
        self.r2c
            .get_scratch_len()
            .max(self.c2r.get_scratch_len())
            .max(self.fwd.get_inplace_scratch_len())
            .max(self.inv.get_inplace_scratch_len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Direct O(N^2) DFT of one coefficient, used as an independent oracle.
    fn dft_coefficient(phys: &[f64], n: usize, m: [i64; 3]) -> Complex64 {
        let mut acc = ZERO;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let phase = -2.0 * PI
                        * (m[0] as f64 * i as f64 + m[1] as f64 * j as f64 + m[2] as f64 * k as f64)
                        / n as f64;
                    acc += phys[i + n * (j + n * k)] * Complex64::from_polar(1.0, phase);
                }
            }
        }
        acc
    }

    #[test]
    fn matches_direct_dft() {
        let n = 8;
        let phys: Vec<f64> = (0..n * n * n)
            .map(|i| ((i * 37 % 101) as f64 / 101.0 - 0.5) * (1.0 + (i % 7) as f64))
            .collect();
        let fft = Fft3::new(n);
        let spec = fft.forward(&phys);
        let idx = fft.index();
        for off in [0, 1, 5, 17, 63, 100, idx.len() - 1] {
            let m = idx.modes(off);
            let want = dft_coefficient(&phys, n, m);
            assert!((spec[off] - want).norm() < 1e-10, "offset {off}: {:?} vs {want:?}", spec[off]);
        }
    }

    #[test]
    fn round_trip() {
        let n = 16;
        let phys: Vec<f64> = (0..n * n * n).map(|i| ((i as f64) * 0.731).sin()).collect();
        let fft = Fft3::new(n);
        let back = fft.inverse(&fft.forward(&phys));
        let err = phys
            .iter()
            .zip(&back)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-13, "round trip error {err}");
    }
}
