//! Small dense complex linear algebra and the statistics of observables.
//!
//! States are normalized amplitude vectors, operators are dense row-major
//! matrices. Everything here is a pure function of its inputs; `N` is expected
//! to be small (2 to 8), so no attempt is made at sparse storage.
//!
//! The statistical layer follows the usual conventions for a random variable
//! whose distribution is the Born distribution of an observable `A` in a state
//! `ψ`: the central moments are `m_k = <(ΔA)^k>` with `ΔA = A - <A>`, the
//! skewness is `m_3 / m_2^{3/2}` and the kurtosis is `m_4 / m_2^2`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Tolerance on `|<ψ|ψ> - 1|` accepted by operations that consume a state.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Hermiticity residue above which an operator is rejected.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Relative threshold for a vanishing dispersion: `m_2 <= DISPERSION_EPS * ||A||_F^2`.
pub const DISPERSION_EPS: f64 = 1e-14;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// A normalized pure state `|ψ>` of dimension `N >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(Vector);

impl StateVector {
    /// Normalizes `amplitudes` into a state. Fails on a zero or non-finite norm.
    pub fn new(amplitudes: Vector) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall(amplitudes.len()));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self(amplitudes.unscale(norm)))
    }

    pub fn from_slice(amplitudes: &[C64]) -> Result<Self> {
        Self::new(Vector::from_column_slice(amplitudes))
    }

    /// Computational basis state `|k>` in dimension `n`.
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::InvalidArgument(format!(
                "basis index {k} out of range for dimension {n}"
            )));
        }
        let mut v = Vector::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &Vector {
        &self.0
    }

    pub fn into_inner(self) -> Vector {
        self.0
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `e^{i phase} |self>`.
    pub fn with_phase(&self, phase: f64) -> StateVector {
        StateVector(&self.0 * C64::from_polar(1.0, phase))
    }

    /// `|<self|other>|`, insensitive to global phase.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// A Hermitian `N x N` operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator(Matrix);

impl HermitianOperator {
    /// Accepts `m` if its Hermiticity residue `max|m - m^†|` is below
    /// [`HERMITIAN_TOLERANCE`] relative to its scale.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let residue = hermiticity_residue(&m);
        if residue > HERMITIAN_TOLERANCE * (1.0 + max_abs(&m)) {
            return Err(Error::NotHermitian(residue));
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be Hermitian by construction.
    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(Matrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(Matrix::identity(n, n))
    }

    /// Real diagonal operator.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = Vector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Self(Matrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * C64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_square_dims(&self.0, &other.0)?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_square_dims(&self.0, &other.0)?;
        Ok(Self(&self.0 - &other.0))
    }

    /// `self |ψ>` as a raw vector.
    pub fn apply(&self, state: &StateVector) -> Result<Vector> {
        check_state_dim(&self.0, state)?;
        Ok(&self.0 * state.amplitudes())
    }
}

pub fn pauli_x() -> HermitianOperator {
    HermitianOperator(Matrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    ))
}

pub fn pauli_y() -> HermitianOperator {
    HermitianOperator(Matrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    ))
}

pub fn pauli_z() -> HermitianOperator {
    HermitianOperator::diagonal(&[1.0, -1.0])
}

/// `max |m_ij - conj(m_ji)|`.
pub fn hermiticity_residue(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn check_state_dim(m: &Matrix, state: &StateVector) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.nrows() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: state.dim(),
        });
    }
    Ok(())
}

fn check_square_dims(a: &Matrix, b: &Matrix) -> Result<()> {
    if !a.is_square() || !b.is_square() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(())
}

/// `<ψ|A|ψ>` for a Hermitian `A`; the imaginary residue is discarded.
pub fn expectation(op: &HermitianOperator, state: &StateVector) -> Result<f64> {
    let z = expectation_complex(&op.0, state)?;
    debug_assert!(
        z.im.abs() <= 1e-12 * (1.0 + op.frobenius_norm()),
        "imaginary residue {} in Hermitian expectation",
        z.im
    );
    Ok(z.re)
}

/// `<ψ|A|ψ>` for an arbitrary square matrix.
pub fn expectation_complex(op: &Matrix, state: &StateVector) -> Result<C64> {
    check_state_dim(op, state)?;
    let v = state.amplitudes();
    Ok(v.dotc(&(op * v)))
}

/// `AB - BA`.
pub fn commutator(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_square_dims(a, b)?;
    Ok(a * b - b * a)
}

/// `AB + BA`.
pub fn anticommutator(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    check_square_dims(a, b)?;
    Ok(a * b + b * a)
}

/// `ΔA = A - <A> I` with respect to `state`.
pub fn delta_operator(op: &HermitianOperator, state: &StateVector) -> Result<HermitianOperator> {
    let mean = expectation(op, state)?;
    let n = op.dim();
    Ok(HermitianOperator(&op.0 - Matrix::identity(n, n) * C64::new(mean, 0.0)))
}

/// `<ψ|A^k|ψ>` for Hermitian `A`, evaluated as `<A^{⌊k/2⌋}ψ | A^{⌈k/2⌉}ψ>` so that
/// even powers are computed as squared norms.
pub(crate) fn hermitian_power_expectation(op: &Matrix, state: &StateVector, k: usize) -> f64 {
    let lo = k / 2;
    let hi = k - lo;
    let mut left = state.amplitudes().clone();
    for _ in 0..lo {
        left = op * left;
    }
    let mut right = left.clone();
    for _ in lo..hi {
        right = op * right;
    }
    left.dotc(&right).re
}

/// Mean and central moments of an observable in a state.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    /// `central[k] = <(ΔA)^k>` for `k = 0..=up_to`.
    pub central: Vec<f64>,
}

impl MomentSet {
    pub fn moment(&self, k: usize) -> Option<f64> {
        self.central.get(k).copied()
    }

    pub fn variance(&self) -> f64 {
        self.central[2]
    }

    /// `α_3 = m_3 / m_2^{3/2}`.
    pub fn skewness(&self) -> Option<f64> {
        self.moment(3).map(|m3| m3 / self.variance().powf(1.5))
    }

    /// `α_4 = m_4 / m_2^2`.
    pub fn kurtosis(&self) -> Option<f64> {
        self.moment(4).map(|m4| m4 / (self.variance() * self.variance()))
    }
}

/// Central moments `m_0..=m_up_to` of `op` in `state`.
///
/// Fails with [`Error::DegenerateDispersion`] when the state is (numerically)
/// an eigenstate of `op`, since the standardized moments are then undefined.
pub fn central_moments(op: &HermitianOperator, state: &StateVector, up_to: usize) -> Result<MomentSet> {
    if up_to < 2 {
        return Err(Error::InvalidArgument(format!(
            "central moments need up_to >= 2, got {up_to}"
        )));
    }
    let mean = expectation(op, state)?;
    let delta = delta_operator(op, state)?;
    let central: Vec<f64> = (0..=up_to)
        .map(|k| match k {
            0 => 1.0,
            1 => 0.0,
            _ => hermitian_power_expectation(&delta.0, state, k),
        })
        .collect();
    let threshold = DISPERSION_EPS * op.frobenius_norm().powi(2);
    if central[2] <= threshold {
        return Err(Error::DegenerateDispersion {
            m2: central[2],
            threshold,
        });
    }
    Ok(MomentSet { mean, central })
}

/// `cov(A, B) = <AB> - <A><B>`.
pub fn covariance(a: &Matrix, b: &Matrix, state: &StateVector) -> Result<C64> {
    check_square_dims(a, b)?;
    let ab = expectation_complex(&(a * b), state)?;
    let ea = expectation_complex(a, state)?;
    let eb = expectation_complex(b, state)?;
    Ok(ab - ea * eb)
}

/// Covariance matrix of the pair `(H, Ḣ)` in a pure state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceMatrix2 {
    pub hh: f64,
    pub h_hdot: C64,
    pub hdot_h: C64,
    pub hdot_hdot: f64,
    /// `hh * hdot_hdot - h_hdot * hdot_h`, non-negative.
    pub determinant: f64,
}

/// Fills the `2 x 2` covariance matrix of `(H, Ḣ)` and its determinant (the
/// generalized variance).
pub fn generalized_variance(
    h: &HermitianOperator,
    hdot: &HermitianOperator,
    state: &StateVector,
) -> Result<CovarianceMatrix2> {
    check_square_dims(&h.0, &hdot.0)?;
    let dh = delta_operator(h, state)?.apply(state)?;
    let dhdot = delta_operator(hdot, state)?.apply(state)?;
    let hh = dh.norm_squared();
    let hdot_hdot = dhdot.norm_squared();
    // <ΔH ΔḢ> = <ΔHψ|ΔḢψ>
    let h_hdot = dh.dotc(&dhdot);
    let hdot_h = h_hdot.conj();
    // Gram determinant via the Lagrange identity, sum_{i<j} |x_i y_j - x_j y_i|^2,
    // which has no cancellation when ΔHψ and ΔḢψ are nearly parallel
    let mut determinant = 0.0;
    for i in 0..dh.len() {
        for j in i + 1..dh.len() {
            determinant += (dh[i] * dhdot[j] - dh[j] * dhdot[i]).norm_sqr();
        }
    }
    Ok(CovarianceMatrix2 {
        hh,
        h_hdot,
        hdot_h,
        hdot_hdot,
        determinant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ket0() -> StateVector {
        StateVector::basis(2, 0).unwrap()
    }

    fn plus() -> StateVector {
        StateVector::from_slice(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn pauli_expectations() {
        assert_abs_diff_eq!(expectation(&pauli_z(), &ket0()).unwrap(), 1.0);
        assert_abs_diff_eq!(expectation(&pauli_x(), &ket0()).unwrap(), 0.0);
    }

    #[test]
    fn expectation_complex_identity_and_product() {
        let id = Matrix::identity(2, 2);
        let e = expectation_complex(&id, &plus()).unwrap();
        assert_abs_diff_eq!(e.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.im, 0.0);

        // σx σy = iσz
        let xy = pauli_x().matrix() * pauli_y().matrix();
        let e = expectation_complex(&xy, &ket0()).unwrap();
        assert_abs_diff_eq!(e.re, 0.0);
        assert_abs_diff_eq!(e.im, 1.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s3 = StateVector::basis(3, 0).unwrap();
        assert!(matches!(
            expectation(&pauli_z(), &s3),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
        assert!(commutator(pauli_x().matrix(), &Matrix::identity(3, 3)).is_err());
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = Matrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(HermitianOperator::new(m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn pauli_commutators() {
        let comm = commutator(pauli_x().matrix(), pauli_y().matrix()).unwrap();
        let expected = pauli_z().matrix() * c(0.0, 2.0);
        assert!((comm - expected).norm() < 1e-15);

        let a = pauli_x().matrix().clone();
        assert_eq!(commutator(&a, &a).unwrap(), Matrix::zeros(2, 2));

        let anti = anticommutator(pauli_x().matrix(), pauli_y().matrix()).unwrap();
        assert!(anti.norm() < 1e-15);
    }

    #[test]
    fn delta_operator_examples() {
        let id = HermitianOperator::identity(2);
        assert!(delta_operator(&id, &plus()).unwrap().frobenius_norm() < 1e-15);

        let d = delta_operator(&pauli_z(), &plus()).unwrap();
        assert!((d.matrix() - pauli_z().matrix()).norm() < 1e-15);

        let d = delta_operator(&pauli_z(), &ket0()).unwrap();
        let expected = pauli_z().matrix() - Matrix::identity(2, 2);
        assert!((d.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn moments_of_symmetric_two_point_distribution() {
        let m = central_moments(&pauli_z(), &plus(), 4).unwrap();
        assert_abs_diff_eq!(m.variance(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.moment(3).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.moment(4).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.skewness().unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.kurtosis().unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn moments_match_two_point_oracle() {
        let theta = PI / 3.0;
        let state = StateVector::from_slice(&[c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)]).unwrap();
        let m = central_moments(&pauli_z(), &state, 4).unwrap();

        // eigenvalues ±1 with Born weights
        let (p_up, p_down) = ((theta / 2.0).cos().powi(2), (theta / 2.0).sin().powi(2));
        let mean = p_up - p_down;
        let oracle = |k: i32| p_up * (1.0 - mean).powi(k) + p_down * (-1.0 - mean).powi(k);
        assert_abs_diff_eq!(m.mean, mean, epsilon = 1e-14);
        assert_abs_diff_eq!(m.variance(), 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(m.variance(), oracle(2), epsilon = 1e-14);
        assert_abs_diff_eq!(m.moment(3).unwrap(), oracle(3), epsilon = 1e-14);
        assert_abs_diff_eq!(m.moment(4).unwrap(), oracle(4), epsilon = 1e-14);
    }

    #[test]
    fn eigenstate_has_degenerate_dispersion() {
        assert!(matches!(
            central_moments(&pauli_z(), &ket0(), 4),
            Err(Error::DegenerateDispersion { .. })
        ));
    }

    #[test]
    fn covariance_examples() {
        let z = pauli_z().matrix().clone();
        let cov = covariance(&z, &z, &plus()).unwrap();
        assert_abs_diff_eq!(cov.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cov.im, 0.0, epsilon = 1e-15);

        let id = Matrix::identity(2, 2);
        let cov = covariance(&id, pauli_x().matrix(), &plus()).unwrap();
        assert!(cov.norm() < 1e-15);
    }

    #[test]
    fn generalized_variance_zero_for_vanishing_derivative() {
        let h = pauli_x();
        let hdot = HermitianOperator::zeros(2);
        let g = generalized_variance(&h, &hdot, &plus()).unwrap();
        assert_eq!(g.determinant, 0.0);
    }
}
