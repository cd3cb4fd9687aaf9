//! Sparse complex operators over a [`HybridBasis`].

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::Result;
use crate::fock::{same_basis, HybridBasis, StateVector};

/// Hermiticity metadata carried by an [`OperatorMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    AntiHermitian,
    General,
}

impl Symmetry {
    fn combine(self, other: Symmetry) -> Symmetry {
        if self == other {
            self
        } else {
            Symmetry::General
        }
    }
}

/// Compressed-sparse-row complex matrix tied to a basis.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    basis: Arc<HybridBasis>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
    symmetry: Symmetry,
}

impl PartialEq for OperatorMatrix {
    /// Structural, bit-for-bit equality.
    fn eq(&self, other: &Self) -> bool {
        same_basis(&self.basis, &other.basis).is_ok()
            && self.row_ptr == other.row_ptr
            && self.cols == other.cols
            && self.values == other.values
    }
}

impl OperatorMatrix {
    /// Builds from (row, col, value) entries; duplicates are summed and exact
    /// zeros dropped.
    pub fn from_triplets(
        basis: &Arc<HybridBasis>,
        mut triplets: Vec<(usize, usize, C64)>,
        symmetry: Symmetry,
    ) -> Self {
        let dim = basis.dimension();
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            debug_assert!(r < dim && c < dim);
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != C64::new(0.0, 0.0));

        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols = merged.iter().map(|t| t.1).collect();
        let values = merged.iter().map(|t| t.2).collect();
        Self { basis: Arc::clone(basis), row_ptr, cols, values, symmetry }
    }

    pub fn zeros(basis: &Arc<HybridBasis>) -> Self {
        Self::from_triplets(basis, Vec::new(), Symmetry::Hermitian)
    }

    pub fn identity(basis: &Arc<HybridBasis>) -> Self {
        let triplets = (0..basis.dimension()).map(|k| (k, k, C64::new(1.0, 0.0))).collect();
        Self::from_triplets(basis, triplets, Symmetry::Hermitian)
    }

    /// Dense complex matrix over the basis.
    pub fn from_dense(basis: &Arc<HybridBasis>, m: &DMatrix<C64>, symmetry: Symmetry) -> Self {
        let mut triplets = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                triplets.push((r, c, m[(r, c)]));
            }
        }
        Self::from_triplets(basis, triplets, symmetry)
    }

    pub fn basis(&self) -> &Arc<HybridBasis> {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn is_hermitian(&self) -> bool {
        self.symmetry == Symmetry::Hermitian
    }

    /// Overrides the symmetry flag without checking it.
    pub fn with_symmetry(mut self, symmetry: Symmetry) -> Self {
        self.symmetry = symmetry;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterates stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dimension()).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        let triplets = self.entries().map(|(r, c, v)| (c, r, v.conj())).collect();
        Self::from_triplets(&self.basis, triplets, self.symmetry)
    }

    /// y = M x on raw amplitude slices.
    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        same_basis(&self.basis, psi.basis())?;
        let mut out = vec![C64::new(0.0, 0.0); self.dimension()];
        self.apply_into(psi.amplitudes(), &mut out);
        StateVector::from_amplitudes(&self.basis, out)
    }

    /// Matrix product `self · other`.
    ///
    /// Panics if the operands live on different bases.
    pub fn matmul(&self, other: &OperatorMatrix) -> Self {
        same_basis(&self.basis, &other.basis).expect("matmul across bases");
        let mut triplets = Vec::new();
        for r in 0..self.dimension() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                let a = self.values[k];
                for j in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    triplets.push((r, other.cols[j], a * other.values[j]));
                }
            }
        }
        Self::from_triplets(&self.basis, triplets, Symmetry::General)
    }

    /// [self, other]
    pub fn commutator(&self, other: &OperatorMatrix) -> Self {
        self.matmul(other) - other.matmul(self)
    }

    pub fn scale(&self, factor: C64) -> Self {
        let symmetry = match self.symmetry {
            _ if factor.im == 0.0 => self.symmetry,
            Symmetry::Hermitian if factor.re == 0.0 => Symmetry::AntiHermitian,
            Symmetry::AntiHermitian if factor.re == 0.0 => Symmetry::Hermitian,
            _ => Symmetry::General,
        };
        let triplets = self.entries().map(|(r, c, v)| (r, c, v * factor)).collect();
        Self::from_triplets(&self.basis, triplets, symmetry)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dimension();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entrywise |self − other|.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        (self.clone() - other.clone()).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise |M − M†|.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Largest entrywise |M + M†|.
    pub fn anti_hermiticity_error(&self) -> f64 {
        (self.clone() + self.adjoint()).max_abs()
    }

    /// Largest deviation from the symmetry the flag claims.
    pub fn symmetry_error(&self) -> f64 {
        match self.symmetry {
            Symmetry::Hermitian => self.hermiticity_error(),
            Symmetry::AntiHermitian => self.anti_hermiticity_error(),
            Symmetry::General => 0.0,
        }
    }

    fn combine(&self, other: &OperatorMatrix, sign: f64) -> Self {
        same_basis(&self.basis, &other.basis).expect("sum across bases");
        let triplets = self
            .entries()
            .chain(other.entries().map(|(r, c, v)| (r, c, v * sign)))
            .collect();
        let symmetry = if other.is_zero() {
            self.symmetry
        } else if self.is_zero() {
            other.symmetry
        } else {
            self.symmetry.combine(other.symmetry)
        };
        Self::from_triplets(&self.basis, triplets, symmetry)
    }
}

impl Add for OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: OperatorMatrix) -> OperatorMatrix {
        self.combine(&rhs, 1.0)
    }
}

impl Sub for OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: OperatorMatrix) -> OperatorMatrix {
        self.combine(&rhs, -1.0)
    }
}

impl Neg for OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<OperatorMatrix> for f64 {
    type Output = OperatorMatrix;
    fn mul(self, rhs: OperatorMatrix) -> OperatorMatrix {
        rhs.scale(C64::new(self, 0.0))
    }
}

impl Mul<&OperatorMatrix> for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        self.matmul(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{annihilation_op, enumerate_basis, ModeSet};

    #[test]
    fn triplets_merge_and_drop_zeros() {
        let b = enumerate_basis(ModeSet::new(1, 2).unwrap(), &[]).unwrap();
        let m = OperatorMatrix::from_triplets(
            &b,
            vec![
                (0, 1, C64::new(1.0, 0.0)),
                (0, 1, C64::new(2.0, 0.0)),
                (2, 2, C64::new(1.0, 0.0)),
                (2, 2, C64::new(-1.0, 0.0)),
            ],
            Symmetry::General,
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), C64::new(3.0, 0.0));
        assert_eq!(m.get(1, 0), C64::new(0.0, 0.0));
    }

    #[test]
    fn scale_tracks_symmetry() {
        let b = enumerate_basis(ModeSet::new(1, 2).unwrap(), &[]).unwrap();
        let a = annihilation_op(&b, 0).unwrap();
        let x = a.clone() + a.adjoint();
        let x = x.with_symmetry(Symmetry::Hermitian);
        assert_eq!(x.scale(C64::new(0.0, 1.0)).symmetry(), Symmetry::AntiHermitian);
        assert!(x.scale(C64::new(0.0, 1.0)).anti_hermiticity_error() < 1e-15);
        assert_eq!((2.0 * x.clone()).symmetry(), Symmetry::Hermitian);
    }

    #[test]
    fn dense_round_trip() {
        let b = enumerate_basis(ModeSet::new(2, 2).unwrap(), &[]).unwrap();
        let a = annihilation_op(&b, 1).unwrap();
        let back = OperatorMatrix::from_dense(&b, &a.to_dense(), Symmetry::General);
        assert_eq!(back, a);
    }
}
