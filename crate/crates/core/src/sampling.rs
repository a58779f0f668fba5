//! Random draws of states, operators and qubit fields for property checks.

use nalgebra::Vector3;
use rand::Rng;

use crate::hilbert::{HermitianOperator, Matrix, StateVector, Vector, C64};

fn symmetric(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

/// A random state with amplitudes drawn uniformly from the unit square.
pub fn random_state(rng: &mut impl Rng, n: usize) -> StateVector {
    loop {
        let v = Vector::from_fn(n, |_, _| C64::new(symmetric(rng), symmetric(rng)));
        if let Ok(s) = StateVector::new(v) {
            return s;
        }
    }
}

/// A random Hermitian matrix `(A + A^†)/2` with entries of order `scale`.
pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> HermitianOperator {
    let a = Matrix::from_fn(n, n, |_, _| C64::new(symmetric(rng), symmetric(rng)) * scale);
    let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    HermitianOperator::from_matrix_unchecked(h)
}

/// A random real 3-vector with components in `[-scale, scale)`.
pub fn random_vector3(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
    Vector3::new(symmetric(rng), symmetric(rng), symmetric(rng)) * scale
}

/// A random unit 3-vector.
pub fn random_unit3(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = random_vector3(rng, 1.0);
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}
