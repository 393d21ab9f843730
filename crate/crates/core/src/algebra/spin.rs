//! Angular-momentum matrices and Kronecker embedding into product spaces.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// A spin quantum number `s`, stored as the integer `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInteger(u32);

impl HalfInteger {
    pub const HALF: HalfInteger = HalfInteger(1);
    pub const ONE: HalfInteger = HalfInteger(2);

    pub fn from_twice(twice: u32) -> Self {
        HalfInteger(twice)
    }

    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if !s.is_finite() || s < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(s));
        }
        Ok(HalfInteger(twice.round() as u32))
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn twice(self) -> u32 {
        self.0
    }

    /// Multiplicity `2s + 1`.
    pub fn dim(self) -> usize {
        self.0 as usize + 1
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_multiple_of(2) {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl Serialize for HalfInteger {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInteger {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = f64::deserialize(deserializer)?;
        HalfInteger::new(s).map_err(serde::de::Error::custom)
    }
}

/// Cartesian spin matrices in the `|s, m⟩` basis ordered `m = s, s-1, …, -s`.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    pub s: HalfInteger,
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
    pub s2: ComplexMatrix,
}

impl SpinOperators {
    pub fn components(&self) -> [&ComplexMatrix; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    /// Projector onto the basis state with projection `m`.
    pub fn projector(&self, m: f64) -> Option<ComplexMatrix> {
        let s = self.s.value();
        let k = s - m;
        if k < -1e-9 || k > 2.0 * s + 1e-9 || (k - k.round()).abs() > 1e-9 {
            return None;
        }
        let mut p = ComplexMatrix::zeros(self.s.dim());
        let k = k.round() as usize;
        p[(k, k)] = Complex64::new(1.0, 0.0);
        Some(p)
    }
}

pub fn spin_matrices(s: f64) -> Result<SpinOperators> {
    Ok(spin_operators(HalfInteger::new(s)?))
}

pub fn spin_operators(s: HalfInteger) -> SpinOperators {
    let n = s.dim();
    let sv = s.value();
    let m = |k: usize| sv - k as f64;

    // S+ |m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩; row k-1 holds m+1 when column k holds m.
    let mut raise = ComplexMatrix::zeros(n);
    for k in 1..n {
        let mk = m(k);
        raise[(k - 1, k)] = Complex64::new((sv * (sv + 1.0) - mk * (mk + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();

    let sx = (&raise + &lower).scale_real(0.5);
    let sy = (&raise - &lower).scale(Complex64::new(0.0, -0.5));
    let diag: Vec<f64> = (0..n).map(m).collect();
    let sz = ComplexMatrix::from_real_diagonal(&diag);
    let s2 = ComplexMatrix::identity(n).scale_real(sv * (sv + 1.0));

    SpinOperators { s, sx, sy, sz, s2 }
}

/// Places `op` at `slot` of the tensor product with identities on every other factor.
pub fn embed(op: &ComplexMatrix, slot: usize, dims: &[usize]) -> Result<ComplexMatrix> {
    let Some(&d) = dims.get(slot) else {
        return Err(Error::DimensionMismatch(format!(
            "slot {slot} out of range for {} subspaces",
            dims.len()
        )));
    };
    if op.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "operator of dimension {} does not fit slot {slot} of dimension {d}",
            op.dim()
        )));
    }
    let before: usize = dims[..slot].iter().product();
    let after: usize = dims[slot + 1..].iter().product();
    Ok(ComplexMatrix::identity(before)
        .kron(op)
        .kron(&ComplexMatrix::identity(after)))
}
