use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on the cube `[0, L)^3` with `n` points per axis.
///
/// Physical samples sit at `x = (L/n) * j`, stored x-fastest:
/// `index = i + n * (j + n * k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!("n must be even and >= 8, got {n}")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Grid(format!(
                "box length must be positive and finite, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    /// `n^3` grid on the default `2*pi` box.
    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Number of physical samples, `n^3`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Scale from integer mode number to wavenumber, `2*pi/L`.
    #[inline]
    pub fn k0(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Number of spectral coefficients kept by the real transform,
    /// `(n/2 + 1) * n * n`.
    #[inline]
    pub fn spectral_len(&self) -> usize {
        (self.n / 2 + 1) * self.n * self.n
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn ijk(&self, index: usize) -> (usize, usize, usize) {
        let n = self.n;
        (index % n, (index / n) % n, index / (n * n))
    }

    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        self.dx() * j as f64
    }

    /// Physical position of a sample.
    #[inline]
    pub fn position(&self, index: usize) -> [f64; 3] {
        let (i, j, k) = self.ijk(index);
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Signed integer mode number for FFT bin `m` (Nyquist maps to `+n/2`).
    #[inline]
    pub fn mode(&self, m: usize) -> i64 {
        if m <= self.n / 2 {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Wrap a coordinate into `[0, L)`.
    #[inline]
    pub fn wrap(&self, x: f64) -> f64 {
        let w = x.rem_euclid(self.box_length);
        if w >= self.box_length {
            0.0
        } else {
            w
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_small() {
        assert!(Grid::cube(13).is_err());
        assert!(Grid::cube(6).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        assert!(Grid::cube(10).is_ok());
    }

    #[test]
    fn index_round_trip_and_modes() {
        let g = Grid::cube(8).unwrap();
        for idx in 0..g.len() {
            let (i, j, k) = g.ijk(idx);
            assert_eq!(g.index(i, j, k), idx);
        }
        assert_eq!(g.mode(4), 4);
        assert_eq!(g.mode(5), -3);
        assert_eq!(g.mode(7), -1);
    }

    #[test]
    fn wrap_is_idempotent() {
        let g = Grid::cube(8).unwrap();
        for x in [-1e-18, -3.0, 0.0, 7.0, 100.0, -2.0 * PI] {
            let w = g.wrap(x);
            assert!((0.0..g.box_length()).contains(&w));
            assert_eq!(g.wrap(w), w);
        }
    }
}
