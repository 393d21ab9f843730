use serde::{Deserialize, Serialize};

/// Real 3×3 Cartesian tensor (MHz for hyperfine couplings).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor3(pub [[f64; 3]; 3]);

impl Tensor3 {
    pub const ZERO: Tensor3 = Tensor3([[0.0; 3]; 3]);

    pub fn from_row_major(e: [f64; 9]) -> Self {
        Tensor3([[e[0], e[1], e[2]], [e[3], e[4], e[5]], [e[6], e[7], e[8]]])
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let a = &self.0;
        [
            a[0][0], a[0][1], a[0][2], a[1][0], a[1][1], a[1][2], a[2][0], a[2][1], a[2][2],
        ]
    }

    pub fn isotropic(a: f64) -> Self {
        Tensor3([[a, 0.0, 0.0], [0.0, a, 0.0], [0.0, 0.0, a]])
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.0[r][c]
    }

    pub fn transpose(&self) -> Self {
        let mut t = [[0.0; 3]; 3];
        for (r, row) in t.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = self.0[c][r];
            }
        }
        Tensor3(t)
    }

    pub fn matmul(&self, other: &Tensor3) -> Self {
        let mut t = [[0.0; 3]; 3];
        for (r, row) in t.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = (0..3).map(|k| self.0[r][k] * other.0[k][c]).sum();
            }
        }
        Tensor3(t)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Largest `|A_ab - A_ba|`.
    pub fn asymmetry(&self) -> f64 {
        let a = &self.0;
        (a[0][1] - a[1][0])
            .abs()
            .max((a[0][2] - a[2][0]).abs())
            .max((a[1][2] - a[2][1]).abs())
    }

    /// Rotation about the z axis by `phi` radians.
    pub fn rotation_z(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Tensor3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }
}

/// `R(φ)·A·R(φ)ᵀ` with `R` the z-axis rotation.
pub fn rotate_tensor(a: &Tensor3, phi: f64) -> Tensor3 {
    let r = Tensor3::rotation_z(phi);
    r.matmul(a).matmul(&r.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn first_shell() -> Tensor3 {
        Tensor3::from_row_major([166.9, 0.0, -90.0, 0.0, 122.9, 0.0, -90.0, 0.0, 90.0])
    }

    fn max_diff(a: &Tensor3, b: &Tensor3) -> f64 {
        a.0.iter()
            .flatten()
            .zip(b.0.iter().flatten())
            .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
    }

    #[test]
    fn zero_rotation_is_identity() {
        let a = first_shell();
        assert_eq!(rotate_tensor(&a, 0.0), a);
    }

    #[test]
    fn three_thirds_make_a_full_turn() {
        let a = first_shell();
        let mut r = a;
        for _ in 0..3 {
            r = rotate_tensor(&r, 2.0 * PI / 3.0);
        }
        assert!(max_diff(&r, &a) < 1e-12);
    }

    #[test]
    fn zz_fixed_by_z_rotation() {
        let r = rotate_tensor(&first_shell(), 2.0 * PI / 3.0);
        assert!((r.get(2, 2) - 90.0).abs() < 1e-12);
        assert!(r.asymmetry() < 1e-12);
    }

    #[test]
    fn quarter_turn_maps_x_to_y() {
        let a = Tensor3([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        let r = rotate_tensor(&a, PI / 2.0);
        assert!((r.get(1, 1) - 1.0).abs() < 1e-15);
        assert!(r.get(0, 0).abs() < 1e-15);
    }

    #[test]
    fn row_major_round_trip() {
        let a = first_shell();
        assert_eq!(Tensor3::from_row_major(a.to_row_major()), a);
    }
}
