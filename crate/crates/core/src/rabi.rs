//! The sinusoidally driven two-level atom: field, rotating-frame reduction,
//! exact propagator, SU(2) axis-angle bookkeeping and the exact Bloch orbit.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::evolution::HamiltonianSchedule;
use crate::hilbert::{HermitianOperator, Matrix, C64, I};
use crate::qubit::{field_operator, BlochVector, FieldVector};

/// Drive parameters of `H(t) = Ω₀ cos ωt σx + Ω₀ sin ωt σy + (ω₀/2) σz`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiParams {
    /// Atomic resonance `ω₀`.
    pub omega0: f64,
    /// Rabi frequency `Ω₀`.
    pub rabi: f64,
    /// Drive frequency `ω`.
    pub omega: f64,
}

impl RabiParams {
    pub fn new(omega0: f64, rabi: f64, omega: f64) -> Result<Self> {
        for (name, x) in [("omega0", omega0), ("Omega0", rabi), ("omega", omega)] {
            if !x.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        Ok(Self { omega0, rabi, omega })
    }

    /// `Δ = ω₀ - ω`.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega
    }

    /// `Ω = sqrt(Ω₀² + (Δ/2)²)`.
    pub fn generalized_rabi(&self) -> f64 {
        self.rabi.hypot(0.5 * self.detuning())
    }

    /// `Ω_H = ||m|| = sqrt(Ω₀² + (ω₀/2)²)`.
    pub fn field_magnitude(&self) -> f64 {
        self.rabi.hypot(0.5 * self.omega0)
    }

    /// `δ = ω / (2Ω)`; infinite when `Ω = 0`.
    pub fn delta_ratio(&self) -> f64 {
        self.omega / (2.0 * self.generalized_rabi())
    }

    /// Unit axis `(Ω₀, 0, Δ/2) / Ω` of the rotating-frame Hamiltonian, or
    /// `None` when `Ω = 0`.
    pub fn rotating_axis(&self) -> Option<Vector3<f64>> {
        let big = self.generalized_rabi();
        (big > 0.0).then(|| Vector3::new(self.rabi, 0.0, 0.5 * self.detuning()) / big)
    }
}

/// A rotation by `angle` about the unit `axis`. Values produced by
/// [`compose_rotations`] have `angle` in `[0, 2π]` and are faithful to the
/// SU(2) matrix, with `2π` reached only for `-I`. The zero rotation carries
/// the axis `ẑ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    pub angle: f64,
    pub axis: Vector3<f64>,
}

impl AxisAngle {
    pub fn new(angle: f64, axis: Vector3<f64>) -> Result<Self> {
        let n = axis.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitVector(n));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidArgument("rotation angle must be finite".into()));
        }
        Ok(Self { angle, axis })
    }

    pub fn identity() -> Self {
        Self {
            angle: 0.0,
            axis: Vector3::z(),
        }
    }

    /// The same Bloch-sphere rotation written with `axis.z >= 0`, using
    /// `(α, n̂) ~ (2π - α, -n̂)`. The SU(2) matrix changes sign.
    pub fn upper_hemisphere(&self) -> Self {
        let n = self.axis;
        let flip = n.z < 0.0 || (n.z == 0.0 && (n.y < 0.0 || (n.y == 0.0 && n.x < 0.0)));
        if flip {
            Self {
                angle: (TAU - self.angle).rem_euclid(TAU),
                axis: -n,
            }
        } else {
            *self
        }
    }
}

/// Coarse drive regimes. More than one may apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Regime {
    OnResonance,
    NearResonance,
    OffResonance,
    StrongDriving,
    WeakDriving,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::OnResonance => "on_resonance",
            Regime::NearResonance => "near_resonance",
            Regime::OffResonance => "off_resonance",
            Regime::StrongDriving => "strong_driving",
            Regime::WeakDriving => "weak_driving",
        })
    }
}

/// `m(t) = (Ω₀ cos ωt, Ω₀ sin ωt, ω₀/2)` and `ṁ = Ω₀ ω (-sin ωt, cos ωt, 0)`.
pub fn rabi_field(params: &RabiParams, t: f64) -> FieldVector {
    let (s, c) = (params.omega * t).sin_cos();
    FieldVector {
        m: Vector3::new(params.rabi * c, params.rabi * s, 0.5 * params.omega0),
        mdot: Vector3::new(-s, c, 0.0) * (params.rabi * params.omega),
    }
}

/// `H(t) = m(t)·σ`.
pub fn rabi_hamiltonian(params: &RabiParams, t: f64) -> HermitianOperator {
    field_operator(&rabi_field(params, t).m)
}

/// The lab-frame schedule with its analytic derivative. `time_scale` is the
/// span over which the derivative is spot-checked.
pub fn rabi_schedule(params: &RabiParams, time_scale: f64) -> Result<HamiltonianSchedule> {
    let p = *params;
    HamiltonianSchedule::new(2, "rabi", move |t| rabi_hamiltonian(&p, t))
        .with_time_scale(time_scale)
        .with_derivative(move |t| field_operator(&rabi_field(&p, t).mdot))
}

/// `H_Rabi = Ω₀ σx + (Δ/2) σz`.
pub fn rabi_hamiltonian_rotating(params: &RabiParams) -> HermitianOperator {
    field_operator(&Vector3::new(params.rabi, 0.0, 0.5 * params.detuning()))
}

/// `U_RF(t) = exp(-i (ω/2) t σz)`.
pub fn rotating_frame_unitary(params: &RabiParams, t: f64) -> Matrix {
    su2_matrix(&AxisAngle {
        angle: params.omega * t,
        axis: Vector3::z(),
    })
}

/// `U(t) = U_RF(t) [cos Ωt I - i sin Ωt n̂·σ]`, reducing to `U_RF(t)` when `Ω = 0`.
pub fn rabi_propagator(params: &RabiParams, t: f64) -> Matrix {
    let frame = rotating_frame_unitary(params, t);
    match params.rotating_axis() {
        Some(axis) => {
            let inner = su2_matrix(&AxisAngle {
                angle: 2.0 * params.generalized_rabi() * t,
                axis,
            });
            frame * inner
        }
        None => frame,
    }
}

/// `U(α, n̂) = cos(α/2) I - i sin(α/2) n̂·σ`.
pub fn su2_matrix(r: &AxisAngle) -> Matrix {
    let (s, c) = (0.5 * r.angle).sin_cos();
    let n = r.axis;
    let identity = Matrix::identity(2, 2) * C64::new(c, 0.0);
    identity - field_operator(&n).into_matrix() * (I * s)
}

/// The single rotation equal to applying `r2` first and then `r1`, so that
/// `U(r) = U(r1) U(r2)`.
pub fn compose_rotations(r1: &AxisAngle, r2: &AxisAngle) -> Result<AxisAngle> {
    AxisAngle::new(r1.angle, r1.axis)?;
    AxisAngle::new(r2.angle, r2.axis)?;
    let (s1, c1) = (0.5 * r1.angle).sin_cos();
    let (s2, c2) = (0.5 * r2.angle).sin_cos();
    let (n1, n2) = (r1.axis, r2.axis);
    let c = c1 * c2 - s1 * s2 * n1.dot(&n2);
    let v = s1 * c2 * n1 + c1 * s2 * n2 - s1 * s2 * n2.cross(&n1);
    Ok(from_half_angle(c, v))
}

fn from_half_angle(c: f64, v: Vector3<f64>) -> AxisAngle {
    let vn = v.norm();
    if vn < 1e-14 {
        // ±I: the angle is 0 or 2π and the axis is conventional
        return AxisAngle {
            angle: 2.0 * 0f64.atan2(c),
            axis: Vector3::z(),
        };
    }
    AxisAngle {
        angle: 2.0 * vn.atan2(c),
        axis: v / vn,
    }
}

/// The axis-angle form of `U(t)`: `(ωt, ẑ) ∘ (2Ωt, n̂)`.
pub fn rabi_axis_angle(params: &RabiParams, t: f64) -> AxisAngle {
    let frame = AxisAngle {
        angle: params.omega * t,
        axis: Vector3::z(),
    };
    match params.rotating_axis() {
        Some(axis) => {
            let inner = AxisAngle {
                angle: 2.0 * params.generalized_rabi() * t,
                axis,
            };
            compose_rotations(&frame, &inner).expect("axes are unit by construction")
        }
        None => {
            let (s, c) = (0.5 * frame.angle).sin_cos();
            from_half_angle(c, s * frame.axis)
        }
    }
}

/// Closed-form `tan²(α/2)` of the Rabi rotation, or `None` where `cos(α/2) = 0`
/// to within `1e-12`.
pub fn half_angle_tan_sq(params: &RabiParams, t: f64) -> Option<f64> {
    let big = params.generalized_rabi();
    let (s1, c1) = (0.5 * params.omega * t).sin_cos();
    let (s2, c2) = (big * t).sin_cos();
    let (ratio, skew) = if big > 0.0 {
        (params.rabi / big, 0.5 * params.detuning() / big)
    } else {
        (0.0, 0.0)
    };
    let num = (ratio * c1 * s2).powi(2) + (ratio * s1 * s2).powi(2) + (s1 * c2 + skew * c1 * s2).powi(2);
    let den = (c1 * c2 - skew * s1 * s2).powi(2);
    (den > 1e-24).then(|| num / den)
}

/// Rotates `a0` by `r.angle` about `r.axis`:
/// `(n̂·a0) n̂ + sin α (n̂ × a0) + cos α (n̂ × a0) × n̂`.
pub fn rotate(r: &AxisAngle, a0: &Vector3<f64>) -> Vector3<f64> {
    let n = r.axis;
    let (s, c) = r.angle.sin_cos();
    let perp = n.cross(a0);
    n.dot(a0) * n + s * perp + c * perp.cross(&n)
}

/// Exact Bloch vector at time `t` starting from `a0`.
pub fn bloch_exact(params: &RabiParams, a0: &BlochVector, t: f64) -> BlochVector {
    let a = rotate(&rabi_axis_angle(params, t), a0.vector());
    BlochVector::new(a / a.norm()).expect("rotation preserves the norm")
}

/// Labels the drive regime. The resonance label is exactly one of
/// on (`|Δ| < Ω₀/10`), off (`|Δ| > 10 Ω₀`) or near; strong (`Ω₀ ≥ 10 ω₀`) and
/// weak (`Ω₀ ≤ ω₀/10`) are added when they apply.
///
/// Comparisons carry a relative slack of `1e-9` so that parameters entered
/// as decimal literals land on the intended side of a threshold: a boundary
/// value does not count as on or off resonance but does count as strong or
/// weak driving.
pub fn classify_regime(params: &RabiParams) -> BTreeSet<Regime> {
    const SLACK: f64 = 1e-9;
    let delta = params.detuning().abs();
    let drive = params.rabi.abs();
    let atom = params.omega0.abs();
    let mut out = BTreeSet::new();
    if delta < 0.1 * drive * (1.0 - SLACK) {
        out.insert(Regime::OnResonance);
    } else if delta > 10.0 * drive * (1.0 + SLACK) {
        out.insert(Regime::OffResonance);
    } else {
        out.insert(Regime::NearResonance);
    }
    if drive >= 10.0 * atom * (1.0 - SLACK) {
        out.insert(Regime::StrongDriving);
    }
    if drive <= 0.1 * atom * (1.0 + SLACK) {
        out.insert(Regime::WeakDriving);
    }
    out
}
