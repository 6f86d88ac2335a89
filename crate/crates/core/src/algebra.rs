//! Pointwise 3x3 algebra used by the Eulerian-Lagrangian identities.
//!
//! Gradient matrices are stored row-major with `m[alpha][j] = d_j f_alpha`,
//! so column `j` of `grad A` is the vector `d_j A`.

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// `(a; b; c)`: determinant of the matrix with columns `a`, `b`, `c`.
#[inline]
pub fn triple(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    dot(a, cross(b, c))
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    #[inline]
    pub fn col(&self, j: usize) -> Vec3 {
        [self.0[0][j], self.0[1][j], self.0[2][j]]
    }

    #[inline]
    pub fn row(&self, a: usize) -> Vec3 {
        self.0[a]
    }

    #[inline]
    pub fn det(&self) -> f64 {
        triple(self.col(0), self.col(1), self.col(2))
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// `1 + self`.
    #[inline]
    pub fn plus_identity(&self) -> Mat3 {
        let mut m = *self;
        for i in 0..3 {
            m.0[i][i] += 1.0;
        }
        m
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        [dot(self.0[0], v), dot(self.0[1], v), dot(self.0[2], v)]
    }

    #[inline]
    pub fn transpose_mul_vec(&self, v: Vec3) -> Vec3 {
        [dot(self.col(0), v), dot(self.col(1), v), dot(self.col(2), v)]
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(m)
    }

    /// Closed-form inverse; `None` when `|det| <= det_min`.
    pub fn inverse(&self, det_min: f64) -> Option<Mat3> {
        let d = self.det();
        if !(d.abs() > det_min) {
            return None;
        }
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let inv = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = inv[i][j] / d;
            }
        }
        Some(Mat3(out))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `C(M; w)_i = 1/2 eps_ijk (M_.j; M_.k; w)`.
#[inline]
pub fn cauchy_map(m: &Mat3, w: Vec3) -> Vec3 {
    let c = [m.col(0), m.col(1), m.col(2)];
    [
        triple(c[1], c[2], w),
        triple(c[2], c[0], w),
        triple(c[0], c[1], w),
    ]
}

/// Rotation term `R(l) = -d_z l + (div l) e_3 + grad l_1 x grad l_2`,
/// written out componentwise. `g[alpha][j] = d_j l_alpha`.
#[inline]
pub fn rotation_term(g: &Mat3) -> Vec3 {
    let d = &g.0;
    [
        -d[0][2] + d[0][1] * d[1][2] - d[0][2] * d[1][1],
        -d[1][2] + d[0][2] * d[1][0] - d[0][0] * d[1][2],
        -d[2][2] + g.trace() + d[0][0] * d[1][1] - d[0][1] * d[1][0],
    ]
}

/// Factor matrix with `R(l) = -M d_z l` up to the cubic volume term.
#[inline]
pub fn factor_m(g: &Mat3) -> Mat3 {
    let d = &g.0;
    Mat3([
        [1.0 + d[1][1], -d[0][1], 0.0],
        [-d[1][0], 1.0 + d[0][0], 0.0],
        [-d[2][0], -d[2][1], 1.0 + d[0][0] + d[1][1]],
    ])
}

#[inline]
pub fn factor_n(g: &Mat3) -> Mat3 {
    let d = &g.0;
    Mat3([
        [1.0 + d[0][0], d[0][1], 0.0],
        [d[1][0], 1.0 + d[1][1], 0.0],
        [0.0, 0.0, 1.0],
    ])
}

/// `t_2 = d_1 l_1 + d_2 l_2`.
#[inline]
pub fn t2(g: &Mat3) -> f64 {
    g.0[0][0] + g.0[1][1]
}

/// `d_2 = d_1 l_1 d_2 l_2 - d_1 l_2 d_2 l_1`.
#[inline]
pub fn d2(g: &Mat3) -> f64 {
    g.0[0][0] * g.0[1][1] - g.0[1][0] * g.0[0][1]
}

/// Determinant of the horizontal (1,2) block of `1 + g`.
#[inline]
pub fn big_d2(g: &Mat3) -> f64 {
    (1.0 + g.0[0][0]) * (1.0 + g.0[1][1]) - g.0[1][0] * g.0[0][1]
}

/// `d_z l`, the third column of `g`.
#[inline]
pub fn dz(g: &Mat3) -> Vec3 {
    g.col(2)
}

/// Residual of the exact factorization
/// `R(l) + M d_z l - (0, 0, det(1+g) - 1 - det g)`, which vanishes for any `g`.
#[inline]
pub fn factorization_defect(g: &Mat3) -> Vec3 {
    let r = rotation_term(g);
    let md = factor_m(g).mul_vec(dz(g));
    let cubic = g.plus_identity().det() - 1.0 - g.det();
    [r[0] + md[0], r[1] + md[1], r[2] + md[2] - cubic]
}

/// `d X / d a_3` at label `A(x)`: `grad A_1 x grad A_2`, expanded in `l`.
#[inline]
pub fn d3x_expanded(g: &Mat3) -> Vec3 {
    let d = &g.0;
    [
        d[0][1] * d[1][2] - (1.0 + d[1][1]) * d[0][2],
        d[1][0] * d[0][2] - (1.0 + d[0][0]) * d[1][2],
        1.0 + t2(g) + d2(g),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_map_of_identity() {
        let w = [0.3, -1.2, 4.5];
        assert_eq!(cauchy_map(&Mat3::IDENTITY, w), w);
    }

    #[test]
    fn inverse_guard() {
        let m = Mat3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]]);
        assert!(m.inverse(0.5).is_none());
        let a = Mat3([[2.0, 1.0, 0.0], [0.0, 1.0, 0.5], [0.3, 0.0, 1.0]]);
        let p = a.mul(&a.inverse(0.5).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_gradient_cases() {
        let z = Mat3([[0.0; 3]; 3]);
        assert_eq!(rotation_term(&z), [0.0; 3]);
        assert_eq!(factor_m(&z), Mat3::IDENTITY);
        assert_eq!(factor_n(&z), Mat3::IDENTITY);
        assert_eq!(d3x_expanded(&z), [0.0, 0.0, 1.0]);
        assert_eq!(big_d2(&z), 1.0);
    }

    #[test]
    fn vertical_shear_example() {
        // l = (eps sin x3, 0, 0): only d_3 l_1 = eps cos x3 is nonzero.
        let e = 0.37;
        let mut g = Mat3([[0.0; 3]; 3]);
        g.0[0][2] = e;
        assert_eq!(rotation_term(&g), [-e, 0.0, 0.0]);
        assert_eq!(factor_m(&g), Mat3::IDENTITY);
        let md = factor_m(&g).mul_vec(dz(&g));
        assert_eq!(rotation_term(&g), scale(-1.0, md));
        assert_eq!(d3x_expanded(&g), [-e, 0.0, 1.0]);
        assert_eq!(g.plus_identity().det(), 1.0);
    }
}
