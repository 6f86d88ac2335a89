use realfft::num_complex::Complex64;

use crate::algebra::Mat3;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::par::prelude::*;
use crate::par::map_max;

/// Storage of a scalar field: real samples or half-spectrum coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum Values {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

/// Real scalar field on a periodic grid, in either representation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Values,
}

impl ScalarField {
    pub fn physical(grid: Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.len(), "physical sample count");
        Self {
            grid,
            values: Values::Physical(data),
        }
    }

    pub fn spectral(grid: Grid, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), grid.spectral_len(), "spectral coefficient count");
        Self {
            grid,
            values: Values::Spectral(data),
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::physical(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::physical(grid, vec![c; grid.len()])
    }

    /// Sample `f` at every grid point.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        let mut data = vec![0.0; grid.len()];
        par_iter_mut!(data)
            .enumerate()
            .for_each(|(i, v)| *v = f(grid.position(i)));
        Self::physical(grid, data)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn is_physical(&self) -> bool {
        matches!(self.values, Values::Physical(_))
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.values, Values::Spectral(_))
    }

    pub fn as_physical(&self) -> Result<&[f64]> {
        match &self.values {
            Values::Physical(v) => Ok(v),
            Values::Spectral(_) => Err(Error::Representation {
                expected: "physical",
            }),
        }
    }

    pub fn as_physical_mut(&mut self) -> Result<&mut [f64]> {
        match &mut self.values {
            Values::Physical(v) => Ok(v),
            Values::Spectral(_) => Err(Error::Representation {
                expected: "physical",
            }),
        }
    }

    pub fn as_spectral(&self) -> Result<&[Complex64]> {
        match &self.values {
            Values::Spectral(v) => Ok(v),
            Values::Physical(_) => Err(Error::Representation {
                expected: "spectral",
            }),
        }
    }

    pub fn into_values(self) -> Values {
        self.values
    }

    /// Physical samples; panics on a spectral field. Internal call sites
    /// only use it on fields the engine has just produced physically.
    #[inline]
    pub(crate) fn p(&self) -> &[f64] {
        match &self.values {
            Values::Physical(v) => v,
            Values::Spectral(_) => panic!("expected a physical field"),
        }
    }

    /// First non-finite physical sample, if any.
    pub fn find_non_finite(&self) -> Option<Error> {
        let data = self.as_physical().ok()?;
        data.iter().position(|v| !v.is_finite()).map(|index| {
            let (i, j, k) = self.grid.ijk(index);
            Error::NonFinite {
                value: data[index],
                index,
                i,
                j,
                k,
            }
        })
    }

    /// Max-norm of a physical field.
    pub fn max_abs(&self) -> f64 {
        let d = self.p();
        map_max(d.len(), |i| d[i].abs())
    }
}

/// Three-component field; component `c` is the `e_{c+1}` direction and
/// `e_3` is the rotation axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3 {
    comps: [ScalarField; 3],
}

impl VectorField3 {
    pub fn new(comps: [ScalarField; 3]) -> Result<Self> {
        let g = comps[0].grid();
        if comps.iter().any(|c| c.grid() != g) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { comps })
    }

    pub fn from_physical(grid: Grid, data: [Vec<f64>; 3]) -> Self {
        let [a, b, c] = data;
        Self {
            comps: [
                ScalarField::physical(grid, a),
                ScalarField::physical(grid, b),
                ScalarField::physical(grid, c),
            ],
        }
    }

    pub fn from_spectral(grid: Grid, data: [Vec<Complex64>; 3]) -> Self {
        let [a, b, c] = data;
        Self {
            comps: [
                ScalarField::spectral(grid, a),
                ScalarField::spectral(grid, b),
                ScalarField::spectral(grid, c),
            ],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::from_physical(grid, [vec![0.0; grid.len()], vec![0.0; grid.len()], vec![0.0; grid.len()]])
    }

    pub fn constant(grid: Grid, c: [f64; 3]) -> Self {
        Self::from_physical(
            grid,
            [vec![c[0]; grid.len()], vec![c[1]; grid.len()], vec![c[2]; grid.len()]],
        )
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync + Send,
    {
        let n = grid.len();
        let mut data = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let values: Vec<[f64; 3]> = par_range!(0..n).map(|i| f(grid.position(i))).collect();
        for (i, v) in values.iter().enumerate() {
            for c in 0..3 {
                data[c][i] = v[c];
            }
        }
        Self::from_physical(grid, data)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.comps[0].grid()
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn component(&self, c: usize) -> &ScalarField {
        &self.comps[c]
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn is_physical(&self) -> bool {
        self.comps.iter().all(|c| c.is_physical())
    }

    #[inline]
    pub(crate) fn p(&self, c: usize) -> &[f64] {
        self.comps[c].p()
    }

    /// Physical component arrays, cloned out.
    pub fn to_physical_arrays(&self) -> Result<[Vec<f64>; 3]> {
        Ok([
            self.comps[0].as_physical()?.to_vec(),
            self.comps[1].as_physical()?.to_vec(),
            self.comps[2].as_physical()?.to_vec(),
        ])
    }

    #[inline]
    pub fn at(&self, index: usize) -> [f64; 3] {
        [self.p(0)[index], self.p(1)[index], self.p(2)[index]]
    }

    /// Max over the grid of the pointwise Euclidean norm (physical fields).
    pub fn max_norm(&self) -> f64 {
        let (a, b, c) = (self.p(0), self.p(1), self.p(2));
        map_max(a.len(), |i| (a[i] * a[i] + b[i] * b[i] + c[i] * c[i]).sqrt())
    }

    /// Max-norm of the pointwise difference with another physical field.
    pub fn max_diff(&self, other: &VectorField3) -> f64 {
        let (a, b, c) = (self.p(0), self.p(1), self.p(2));
        let (x, y, z) = (other.p(0), other.p(1), other.p(2));
        map_max(a.len(), |i| {
            let d = [a[i] - x[i], b[i] - y[i], c[i] - z[i]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
        })
    }

    pub fn find_non_finite(&self) -> Option<Error> {
        self.comps.iter().find_map(|c| c.find_non_finite())
    }
}

/// Nine-component physical field, `data[alpha][j]` holding `d_j f_alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField3 {
    grid: Grid,
    data: [[Vec<f64>; 3]; 3],
}

impl TensorField3 {
    pub fn new(grid: Grid, data: [[Vec<f64>; 3]; 3]) -> Self {
        for row in &data {
            for c in row {
                assert_eq!(c.len(), grid.len(), "tensor component length");
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn component(&self, alpha: usize, j: usize) -> &[f64] {
        &self.data[alpha][j]
    }

    pub fn data(&self) -> &[[Vec<f64>; 3]; 3] {
        &self.data
    }

    #[inline]
    pub fn at(&self, index: usize) -> Mat3 {
        let d = &self.data;
        Mat3([
            [d[0][0][index], d[0][1][index], d[0][2][index]],
            [d[1][0][index], d[1][1][index], d[1][2][index]],
            [d[2][0][index], d[2][1][index], d[2][2][index]],
        ])
    }

    /// Pointwise map to a vector field.
    pub fn map_vector<F>(&self, f: F) -> VectorField3
    where
        F: Fn(&Mat3) -> [f64; 3] + Sync + Send,
    {
        let n = self.grid.len();
        let vals: Vec<[f64; 3]> = par_range!(0..n).map(|i| f(&self.at(i))).collect();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (i, v) in vals.iter().enumerate() {
            for c in 0..3 {
                out[c][i] = v[c];
            }
        }
        VectorField3::from_physical(self.grid, out)
    }

    /// Pointwise map to a scalar field.
    pub fn map_scalar<F>(&self, f: F) -> ScalarField
    where
        F: Fn(&Mat3) -> f64 + Sync + Send,
    {
        let data: Vec<f64> = par_range!(0..self.grid.len()).map(|i| f(&self.at(i))).collect();
        ScalarField::physical(self.grid, data)
    }

    /// Max over the grid of `f` at each point.
    pub fn max_of<F>(&self, f: F) -> f64
    where
        F: Fn(&Mat3) -> f64 + Sync + Send,
    {
        map_max(self.grid.len(), |i| f(&self.at(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_mixed_grids() {
        let a = ScalarField::zeros(Grid::cube(8).unwrap());
        let b = ScalarField::zeros(Grid::cube(10).unwrap());
        assert!(matches!(
            VectorField3::new([a.clone(), a, b]),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn non_finite_reports_location() {
        let g = Grid::cube(8).unwrap();
        let mut f = ScalarField::zeros(g);
        f.as_physical_mut().unwrap()[g.index(1, 2, 3)] = f64::NAN;
        match f.find_non_finite() {
            Some(Error::NonFinite { i, j, k, .. }) => assert_eq!((i, j, k), (1, 2, 3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn max_norm_is_euclidean() {
        let g = Grid::cube(8).unwrap();
        let v = VectorField3::constant(g, [3.0, 0.0, 4.0]);
        assert_eq!(v.max_norm(), 5.0);
    }
}
