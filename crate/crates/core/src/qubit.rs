//! Two-level closed forms in terms of the Bloch vector `a` and the field `m`
//! of `H = m·σ`: precession `ȧ = 2 m × a`, speed and acceleration, and the
//! curvature and torsion coefficients as functions of `(a, m, ṁ)`.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::evolution::{TimeGrid, SPEED_EPS};
use crate::hilbert::{expectation, pauli_x, pauli_y, pauli_z, HermitianOperator, StateVector, C64};

/// Unit Bloch vector of a pure qubit state, `ρ = (I + a·σ)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector(Vector3<f64>);

impl BlochVector {
    /// Accepts `a` with `| ||a|| - 1 | <= 1e-10` and renormalizes it.
    pub fn new(a: Vector3<f64>) -> Result<Self> {
        let n = a.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(Error::NonUnitVector(n));
        }
        Ok(Self(a / n))
    }

    /// Spherical angles: `(sin θ cos φ, sin θ sin φ, cos θ)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self(Vector3::new(
            theta.sin() * phi.cos(),
            theta.sin() * phi.sin(),
            theta.cos(),
        ))
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }
}

/// The field `m` of `H = m·σ` and its time derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldVector {
    pub m: Vector3<f64>,
    pub mdot: Vector3<f64>,
}

impl FieldVector {
    pub fn new(m: Vector3<f64>, mdot: Vector3<f64>) -> Result<Self> {
        if m.iter().chain(mdot.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("field components must be finite".into()));
        }
        Ok(Self { m, mdot })
    }

    pub fn hamiltonian(&self) -> HermitianOperator {
        field_operator(&self.m)
    }

    pub fn hamiltonian_derivative(&self) -> HermitianOperator {
        field_operator(&self.mdot)
    }
}

/// `m·σ`.
pub fn field_operator(m: &Vector3<f64>) -> HermitianOperator {
    let (x, y, z) = (m.x, m.y, m.z);
    let mat = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[C64::new(z, 0.0), C64::new(x, -y), C64::new(x, y), C64::new(-z, 0.0)],
    );
    HermitianOperator::new(mat).expect("m·σ is Hermitian")
}

/// `a_i = <σ_i>`.
pub fn bloch_from_state(state: &StateVector) -> Result<BlochVector> {
    if state.dim() != 2 {
        return Err(Error::DimensionUnsupported {
            supported: 2,
            found: state.dim(),
        });
    }
    let a = Vector3::new(
        expectation(&pauli_x(), state)?,
        expectation(&pauli_y(), state)?,
        expectation(&pauli_z(), state)?,
    );
    BlochVector::new(a)
}

/// A state with Bloch vector `a`, with the first nonzero amplitude real and
/// positive.
pub fn state_from_bloch(a: &BlochVector) -> StateVector {
    let (x, y, z) = (a.x(), a.y(), a.z());
    // pick the well-conditioned branch for the magnitude split
    let (c0, c1) = if z >= 0.0 {
        let r0 = (0.5 * (1.0 + z)).sqrt();
        (C64::new(r0, 0.0), C64::new(x, y) / (2.0 * r0))
    } else {
        let r1 = (0.5 * (1.0 - z)).sqrt();
        (C64::new(x, -y) / (2.0 * r1), C64::new(r1, 0.0))
    };
    let (c0, c1) = if c0.norm() > 0.0 {
        let phase = c0.conj() / c0.norm();
        (C64::new(c0.norm(), 0.0), c1 * phase)
    } else {
        (c0, c1)
    };
    StateVector::from_slice(&[c0, c1]).expect("unit Bloch vector gives a nonzero state")
}

/// `ȧ = 2 m × a`.
pub fn bloch_rhs(m: &Vector3<f64>, a: &Vector3<f64>) -> Vector3<f64> {
    2.0 * m.cross(a)
}

/// RK4 on `ȧ = 2 m(t) × a` with `||a||` restored after every step.
pub fn propagate_bloch<F>(field: F, a0: &BlochVector, grid: TimeGrid) -> Result<Vec<BlochVector>>
where
    F: Fn(f64) -> Vector3<f64>,
{
    let grid = TimeGrid::new(grid.t_max, grid.steps)?;
    let dt = grid.dt();
    let mut a = *a0.vector();
    let mut out = Vec::with_capacity(grid.steps + 1);
    out.push(*a0);
    for i in 0..grid.steps {
        let t = i as f64 * dt;
        let m0 = field(t);
        let m_mid = field(t + 0.5 * dt);
        let m1 = field(t + dt);
        let k1 = bloch_rhs(&m0, &a);
        let k2 = bloch_rhs(&m_mid, &(a + 0.5 * dt * k1));
        let k3 = bloch_rhs(&m_mid, &(a + 0.5 * dt * k2));
        let k4 = bloch_rhs(&m1, &(a + dt * k3));
        a += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let n = a.norm();
        if !n.is_finite() || n == 0.0 {
            return Err(Error::NonFiniteState { t: t + dt });
        }
        a /= n;
        out.push(BlochVector(a));
    }
    Ok(out)
}

/// Speed and its time derivative along a qubit orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedAccel {
    pub v: f64,
    pub v_dot: f64,
}

fn checked_speed_sq(a: &BlochVector, field: &FieldVector) -> Result<f64> {
    // |a × m|^2 equals m^2 - (a·m)^2 for unit a without the cancellation near a ∥ m
    let v2 = a.vector().cross(&field.m).norm_squared();
    let threshold = SPEED_EPS * field.m.norm();
    if v2 <= threshold * threshold {
        return Err(Error::DegenerateSpeed {
            v: v2.sqrt(),
            threshold,
        });
    }
    Ok(v2)
}

/// `v^2 = m^2 - (a·m)^2`, `v̇ = [m·ṁ - (a·m)(a·ṁ)] / v`.
pub fn speed_accel_bloch(a: &BlochVector, field: &FieldVector) -> Result<SpeedAccel> {
    let v2 = checked_speed_sq(a, field)?;
    let v = v2.sqrt();
    let a = a.vector();
    let v_dot = (field.m.dot(&field.mdot) - a.dot(&field.m) * a.dot(&field.mdot)) / v;
    Ok(SpeedAccel { v, v_dot })
}

/// Curvature coefficient as a function of `(a, m, ṁ)`:
///
/// `κ^2 = 4(a·m)^2 / v^2 + {[m^2 ṁ^2 - (m·ṁ)^2] - [(a·ṁ)m - (a·m)ṁ]^2} / v^6 + 4(a·m)[a·(m×ṁ)] / v^4`
///
/// with `v^2 = m^2 - (a·m)^2`. Because the torsion identity turns the middle
/// numerator into `[a·(m×ṁ)]^2`, the sum is the square
/// `[2(a·m) v^2 + a·(m×ṁ)]^2 / v^6`, which is how it is evaluated: the three
/// terms separately grow like `v^-6` and cancel.
pub fn curvature_bloch(a: &BlochVector, field: &FieldVector) -> Result<f64> {
    let v2 = checked_speed_sq(a, field)?;
    let (a, m, mdot) = (a.vector(), &field.m, &field.mdot);
    let root = 2.0 * a.dot(m) * v2 + a.cross(m).dot(mdot);
    Ok(root * root / (v2 * v2 * v2))
}

/// Torsion coefficient evaluated before the cancellation that makes it vanish.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorsionBloch {
    /// `{[m^2 ṁ^2 - (m·ṁ)^2] - [(a·ṁ)m - (a·m)ṁ]^2} / v^6 - [a·(m×ṁ)]^2 / v^6`
    pub value: f64,
    /// `|value|`; zero in exact arithmetic.
    pub residual: f64,
    /// `[m^2 ṁ^2 - (m·ṁ)^2] / v^6`, the size of the terms that cancel, which
    /// sets the roundoff level of `residual`.
    pub scale: f64,
}

/// Torsion coefficient as the difference of two quotients. The identity
/// `[m^2 ṁ^2 - (m·ṁ)^2] - [a·(m×ṁ)]^2 = [(a·ṁ)m - (a·m)ṁ]^2` for unit `a`
/// makes the difference vanish; `residual` reports what is left numerically.
pub fn torsion_bloch(a: &BlochVector, field: &FieldVector) -> Result<TorsionBloch> {
    let v2 = checked_speed_sq(a, field)?;
    let (a, m, mdot) = (a.vector(), &field.m, &field.mdot);
    let v6 = v2 * v2 * v2;
    let lagrange = m.norm_squared() * mdot.norm_squared() - m.dot(mdot).powi(2);
    let mixed = (a.dot(mdot) * m - a.dot(m) * mdot).norm_squared();
    let triple = a.dot(&m.cross(mdot));
    let value = (lagrange - mixed) / v6 - triple * triple / v6;
    Ok(TorsionBloch {
        value,
        residual: value.abs(),
        scale: lagrange / v6,
    })
}
