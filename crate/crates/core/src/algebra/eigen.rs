//! Cyclic Jacobi eigensolver for dense complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real Givens rotation, so the combined
//! transformation is `U = diag(1, e^{-iθ}) · G(c, s)` acting on rows and
//! columns `p`, `q`. Sweeps stop once the off-diagonal Frobenius norm drops
//! below `CONVERGENCE_RATIO` times the norm of the diagonal.

use std::ops::Range;

use num_complex::Complex64;

use super::matrix::{inner, ComplexMatrix};
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted on input.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const CONVERGENCE_RATIO: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 64;
/// Eigenvalues closer than this (MHz) are treated as one degenerate level.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    pub fn vectors_iter(&self) -> impl Iterator<Item = Vec<Complex64>> + '_ {
        (0..self.len()).map(move |k| self.vector(k))
    }

    /// `V·diag(λ)·V†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, |r, c| {
            (0..n)
                .map(|k| v[(r, k)] * self.values[k] * v[(c, k)].conj())
                .sum()
        })
    }

    /// `max |V†V - 1|`
    pub fn orthonormality_residual(&self) -> f64 {
        let gram = self.vectors.adjoint().matmul(&self.vectors);
        (&gram - &ComplexMatrix::identity(self.len())).max_abs()
    }

    /// Runs of consecutive eigenvalues whose neighbours differ by less than `tol`.
    pub fn degenerate_blocks(&self, tol: f64) -> Vec<Range<usize>> {
        let mut blocks = Vec::new();
        let mut start = 0;
        for k in 1..=self.len() {
            if k == self.len() || self.values[k] - self.values[k - 1] >= tol {
                blocks.push(start..k);
                start = k;
            }
        }
        blocks
    }

    /// Fixes the basis inside every degenerate block by diagonalizing the
    /// given observables in turn (descending expectation value), so output is
    /// reproducible where the eigensolver's choice would be arbitrary.
    pub fn canonicalize_degenerate(
        &mut self,
        observables: &[&ComplexMatrix],
        tol: f64,
    ) -> Result<()> {
        for block in self.degenerate_blocks(tol) {
            if block.len() < 2 {
                continue;
            }
            let cols: Vec<Vec<Complex64>> = block.clone().map(|k| self.vector(k)).collect();
            let mut refined = refine_block(cols, observables)?;
            gram_schmidt(&mut refined);
            for (offset, mut v) in refined.into_iter().enumerate() {
                fix_phase(&mut v);
                self.vectors.set_column(block.start + offset, &v);
            }
        }
        Ok(())
    }
}

fn refine_block(
    cols: Vec<Vec<Complex64>>,
    observables: &[&ComplexMatrix],
) -> Result<Vec<Vec<Complex64>>> {
    let Some((op, rest)) = observables.split_first() else {
        return Ok(cols);
    };
    if cols.len() < 2 {
        return Ok(cols);
    }
    let k = cols.len();
    let images: Vec<Vec<Complex64>> = cols.iter().map(|c| op.mul_vec(c)).collect();
    let projected = ComplexMatrix::from_fn(k, |i, j| inner(&cols[i], &images[j]));
    let sub = hermitian_eig(&projected)?;

    // Descending expectation value.
    let order: Vec<usize> = (0..k).rev().collect();
    let n = cols[0].len();
    let rotated: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&j| {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for (i, col) in cols.iter().enumerate() {
                let w = sub.vectors[(i, j)];
                for (x, &y) in v.iter_mut().zip(col) {
                    *x += y * w;
                }
            }
            v
        })
        .collect();
    let values: Vec<f64> = order.iter().map(|&j| sub.values[j]).collect();

    let mut out = Vec::with_capacity(k);
    let mut start = 0;
    for end in 1..=k {
        if end == k || values[end - 1] - values[end] >= DEGENERACY_TOLERANCE {
            out.extend(refine_block(rotated[start..end].to_vec(), rest)?);
            start = end;
        }
    }
    Ok(out)
}

fn gram_schmidt(vs: &mut [Vec<Complex64>]) {
    for i in 0..vs.len() {
        for j in 0..i {
            let proj = inner(&vs[j], &vs[i]);
            let (head, tail) = vs.split_at_mut(i);
            for (x, &y) in tail[0].iter_mut().zip(&head[j]) {
                *x -= proj * y;
            }
        }
        let norm = inner(&vs[i], &vs[i]).re.sqrt();
        for x in vs[i].iter_mut() {
            *x /= norm;
        }
    }
}

/// Rotates the global phase so the largest-magnitude component (first one on
/// ties) is real and positive.
pub fn fix_phase(v: &mut [Complex64]) {
    let max = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.norm() >= max * (1.0 - 1e-10))
        .expect("max exists");
    let phase = v[pivot].conj() / v[pivot].norm();
    for x in v.iter_mut() {
        *x *= phase;
    }
    v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenSolution> {
    let n = m.dim();
    let scale = m.max_abs();
    let defect = m.hermiticity_defect();
    let tolerance = HERMITIAN_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    if defect > tolerance {
        return Err(Error::NotHermitian { defect, tolerance });
    }

    // Work on the exactly Hermitian part.
    let mut a = ComplexMatrix::from_fn(n, |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()));
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);

    let converged = |a: &ComplexMatrix| {
        let off = off_diagonal_norm(a);
        let diag = (0..n).map(|i| a[(i, i)].re.powi(2)).sum::<f64>().sqrt();
        (off <= CONVERGENCE_RATIO * diag || off == 0.0, off)
    };
    let mut sweeps = 0;
    loop {
        let (done, off) = converged(&a);
        if done {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_phase(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(EigenSolution { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    // Below rounding of the diagonal the rotation is a no-op.
    if b < f64::EPSILON * 1e-3 * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex64::new(0.0, 0.0);
        a[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / b; // e^{iθ}
    let tau = (aqq - app) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let pc = phase.conj(); // e^{-iθ}
    let n = a.dim();

    // A ← A U
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * pc * s;
        a[(k, q)] = akp * s + akq * pc * c;
    }
    // A ← U† A
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    // V ← V U
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * pc * s;
        v[(k, q)] = vkp * s + vkq * pc * c;
    }
}
