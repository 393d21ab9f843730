//! Spin operators, tensors and the dense Hermitian eigensolver.

pub mod eigen;
pub mod matrix;
pub mod spin;
pub mod tensor;

pub use eigen::{hermitian_eig, EigenSolution, DEGENERACY_TOLERANCE};
pub use matrix::{inner, ComplexMatrix};
pub use spin::{embed, spin_matrices, spin_operators, HalfInteger, SpinOperators};
pub use tensor::{rotate_tensor, Tensor3};
