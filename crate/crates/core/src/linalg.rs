//! Tiny fixed-size complex linear algebra used by the propagator and the
//! trajectory stepper. Everything is stack-allocated.

use num_complex::Complex64 as C64;

pub type Vec4 = [C64; 4];
pub type Mat4 = [[C64; 4]; 4];
pub type Mat2 = [[C64; 2]; 2];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn zero_vec4() -> Vec4 {
    [ZERO; 4]
}

pub fn zero_mat4() -> Mat4 {
    [[ZERO; 4]; 4]
}

pub fn mat4_vec(m: &Mat4, v: &Vec4) -> Vec4 {
    let mut out = zero_vec4();
    for (row, o) in m.iter().zip(out.iter_mut()) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
    }
    out
}

/// Row-vector times matrix: `(r^T M)_j = sum_i r_i M_ij`.
pub fn row_mat4(r: &Vec4, m: &Mat4) -> Vec4 {
    let mut out = zero_vec4();
    for (j, o) in out.iter_mut().enumerate() {
        *o = r[0] * m[0][j] + r[1] * m[1][j] + r[2] * m[2][j] + r[3] * m[3][j];
    }
    out
}

pub fn dot(a: &Vec4, b: &Vec4) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

pub fn norm_sq(v: &Vec4) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Kronecker product of two 2x2 matrices; index convention
/// `idx = 2 * level(qubit 1) + level(qubit 2)`.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = zero_mat4();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn mat2_id() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

/// `sinh(z) / z`, stable near the origin.
pub fn sinch(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        ONE + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_ordering_matches_index_convention() {
        // sigma_minus on qubit 1 only: |g e> -> ... acts on the first index.
        let sm = [[ZERO, ZERO], [ONE, ZERO]]; // basis order (e, g)
        let m = kron2(&sm, &mat2_id());
        // |e e> = idx 0 maps to |g e> = idx 2.
        let mut v = zero_vec4();
        v[0] = ONE;
        let w = mat4_vec(&m, &v);
        assert_eq!(w[2], ONE);
        assert_eq!(w[0], ZERO);
    }

    #[test]
    fn sinch_series_matches_direct() {
        let z = C64::new(2e-4, 1e-4);
        let direct = z.sinh() / z;
        assert!((sinch(z) - direct).norm() < 1e-14);
    }
}
