//! Curvature and torsion coefficients of a quantum curve.
//!
//! Two independent routes are provided:
//!
//! * the **expectation route** evaluates closed expressions in the moments of
//!   `Δh = ΔH / v` and `Δh' = ∂_s Δh = ΔḢ / v^2 - ΔH v̇ / v^3` in a single state;
//! * the **projector route** differentiates the unit tangent `|T>` along a
//!   sampled trajectory and projects: `|Ñ*> = P_Ψ |T'>`, `κ^2 = <Ñ*|Ñ*>`,
//!   `|Ñ> = P_T P_Ψ |T'>`, `τ^2 = <Ñ|Ñ>`.
//!
//! Arc-length derivatives are always taken through `∂_s = v^{-1} ∂_t` on the
//! time grid; `t(s)` is never inverted.
//!
//! [`curvature_statistical`] re-expresses the same coefficients as kurtosis,
//! skewness, acceleration and covariance terms of `H` and `Ḣ`.

use crate::error::{Error, Result};
use crate::evolution::{speed_threshold, HamiltonianSchedule, Trajectory};
use crate::hilbert::{
    central_moments, commutator, covariance, delta_operator, expectation_complex, generalized_variance,
    HermitianOperator, Matrix, StateVector, Vector, C64,
};

/// `<Ñ|Ñ>` at or below this value leaves the normal direction undefined.
pub const NORMAL_EPS: f64 = 1e-12;

/// Real value of `i <X>` for an anti-Hermitian `X`, i.e. `-Im <X>`.
///
/// `scale` bounds `|<X>|`; the discarded real part is checked against it.
fn i_times_anti_hermitian(z: C64, scale: f64) -> f64 {
    debug_assert!(
        z.re.abs() <= 1e-12 * (1.0 + scale),
        "anti-Hermitian expectation has real part {} (scale {scale})",
        z.re
    );
    -z.im
}

/// The arc-length operators `Δh`, `Δh'` at one state.
struct ArcOperators {
    dh: Matrix,
    dh_prime: Matrix,
}

impl ArcOperators {
    fn new(h: &HermitianOperator, hdot: &HermitianOperator, state: &StateVector) -> Result<Self> {
        if h.dim() != hdot.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: hdot.dim(),
            });
        }
        let delta_h = delta_operator(h, state)?;
        let delta_hdot = delta_operator(hdot, state)?;
        let dh_psi = delta_h.apply(state)?;
        let v = dh_psi.norm();
        let threshold = speed_threshold(h);
        if v <= threshold {
            return Err(Error::DegenerateSpeed { v, threshold });
        }
        let v_dot = delta_hdot.apply(state)?.dotc(&dh_psi).re / v;
        let dh = delta_h.matrix() / C64::new(v, 0.0);
        let dh_prime =
            delta_hdot.matrix() / C64::new(v * v, 0.0) - delta_h.matrix() * C64::new(v_dot / (v * v * v), 0.0);
        Ok(Self { dh, dh_prime })
    }
}

/// The two expectation-route coefficients, evaluated as squared norms.
///
/// With `w = P_ψ⊥ ((Δh)^2 + i Δh') |ψ>` and the unit vector `u = Δh|ψ>`
/// (orthogonal to `ψ`), the closed forms below are exactly
/// `κ^2 = <w|w>` and `τ^2 = <w|w> - |<u|w>|^2`. Summing the individual
/// expectations instead loses everything to cancellation when `v` is small,
/// since each of them grows like `v^-6` while `τ^2` stays bounded (it is zero
/// for a qubit), so the norms are taken after projecting.
fn expectation_coefficients(
    h: &HermitianOperator,
    hdot: &HermitianOperator,
    state: &StateVector,
) -> Result<(f64, f64)> {
    let ops = ArcOperators::new(h, hdot, state)?;
    let psi = state.amplitudes();
    let dh_psi = &ops.dh * psi;
    let z = &ops.dh * &dh_psi + (&ops.dh_prime * psi) * C64::new(0.0, 1.0);
    let w = project_out(&z, psi);
    let u = project_out(&dh_psi, psi);
    let u = &u / C64::new(u.norm(), 0.0);
    // second pass against ψ removes what the u projection reintroduces
    let normal = project_out(&project_out(&w, &u), psi);
    Ok((w.norm_squared(), normal.norm_squared()))
}

/// `κ^2 = <(Δh)^4> - <(Δh)^2>^2 + [<(Δh')^2> - <Δh'>^2] + i <[(Δh)^2, Δh']>`.
pub fn curvature_expectation(h: &HermitianOperator, hdot: &HermitianOperator, state: &StateVector) -> Result<f64> {
    Ok(expectation_coefficients(h, hdot, state)?.0)
}

/// Torsion coefficient by the expectation route:
///
/// `τ^2 = <(Δh)^4> - <(Δh)^2>^2 - <(Δh)^3>^2`
/// `    + [<(Δh')^2> - <Δh'>^2 - <Δh' Δh><Δh Δh'>]`
/// `    + i {<[(Δh)^2, Δh']> - <(Δh)^3> <[Δh, Δh']>}`.
pub fn torsion_expectation(h: &HermitianOperator, hdot: &HermitianOperator, state: &StateVector) -> Result<f64> {
    Ok(expectation_coefficients(h, hdot, state)?.1)
}

/// Both coefficients by the expectation route in one pass.
pub fn coefficients_expectation(
    h: &HermitianOperator,
    hdot: &HermitianOperator,
    state: &StateVector,
) -> Result<(f64, f64)> {
    expectation_coefficients(h, hdot, state)
}

/// Projector-route quantities at one interior grid point.
#[derive(Clone, Debug)]
pub struct ProjectorSample {
    pub kappa2: f64,
    pub tau2: f64,
    /// `|T>` at the sample.
    pub tangent: Vector,
    /// `|Ñ*> = P_Ψ |T'>`.
    pub curvature_vector: Vector,
    /// `|Ñ> = P_T P_Ψ |T'>`.
    pub torsion_vector: Vector,
}

const STENCIL_HALF_WIDTH: usize = 2;

/// Projector route along a trajectory.
///
/// Entry `i` is `None` at the two samples nearest each end (no one-sided
/// stencils) and wherever any point of the 5-point stencil has degenerate
/// speed.
pub fn projector_route(
    trajectory: &Trajectory,
    schedule: &HamiltonianSchedule,
) -> Result<Vec<Option<ProjectorSample>>> {
    let n = trajectory.len();
    if n < 2 * STENCIL_HALF_WIDTH + 1 {
        return Err(Error::InsufficientSamples {
            needed: 2 * STENCIL_HALF_WIDTH + 1,
            found: n,
        });
    }
    // the stencil acts on the velocity V = -iΔH|Ψ> = v|T>, which stays smooth
    // where v dips and |T> turns quickly; T' then follows from the quotient rule
    let velocities: Vec<Option<(Vector, f64)>> = trajectory
        .times
        .iter()
        .zip(&trajectory.transported_states)
        .map(|(&t, psi)| {
            let h = schedule.evaluate(t);
            let velocity = delta_operator(&h, psi)?.apply(psi)? * (-C64::i());
            let v = velocity.norm();
            Ok((v > speed_threshold(&h)).then_some((velocity, v)))
        })
        .collect::<Result<_>>()?;

    let dt = trajectory.dt();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i < STENCIL_HALF_WIDTH || i + STENCIL_HALF_WIDTH >= n {
            out.push(None);
            continue;
        }
        let stencil: Option<Vec<&Vector>> = (i - 2..=i + 2)
            .map(|k| velocities[k].as_ref().map(|(x, _)| x))
            .collect();
        let Some(vk) = stencil else {
            out.push(None);
            continue;
        };
        let dt_velocity =
            (vk[0] - vk[1] * C64::new(8.0, 0.0) + vk[3] * C64::new(8.0, 0.0) - vk[4]) / C64::new(12.0 * dt, 0.0);
        let v = velocities[i].as_ref().map(|(_, v)| *v).expect("stencil centre present");
        let tangent = vk[2] / C64::new(v, 0.0);
        // ∂_s T = (V̇ - T Re<T|V̇>) / v^2
        let along = C64::new(tangent.dotc(&dt_velocity).re, 0.0);
        let ds_tangent = (&dt_velocity - &tangent * along) / C64::new(v * v, 0.0);

        let psi = trajectory.transported_states[i].amplitudes();
        let curvature_vector = project_out(&ds_tangent, psi);
        let torsion_vector = project_out(&curvature_vector, &tangent);
        out.push(Some(ProjectorSample {
            kappa2: curvature_vector.norm_squared(),
            tau2: torsion_vector.norm_squared(),
            tangent,
            curvature_vector,
            torsion_vector,
        }));
    }
    Ok(out)
}

/// `(I - |u><u|) |x>` for unit `u`.
fn project_out(x: &Vector, u: &Vector) -> Vector {
    x - u * u.dotc(x)
}

fn interior_or_degenerate<F>(
    trajectory: &Trajectory,
    schedule: &HamiltonianSchedule,
    pick: F,
) -> Result<Vec<Option<f64>>>
where
    F: Fn(&ProjectorSample) -> f64,
{
    let samples = projector_route(trajectory, schedule)?;
    let n = samples.len();
    let mut out = Vec::with_capacity(n);
    for (i, s) in samples.iter().enumerate() {
        let interior = i >= STENCIL_HALF_WIDTH && i + STENCIL_HALF_WIDTH < n;
        match s {
            Some(s) => out.push(Some(pick(s))),
            None if interior => {
                let (v, threshold) = (
                    trajectory.speed[i],
                    speed_threshold(&schedule.evaluate(trajectory.times[i])),
                );
                return Err(Error::DegenerateSpeed { v, threshold });
            }
            None => out.push(None),
        }
    }
    Ok(out)
}

/// `κ^2` by the projector route; endpoints are `None`.
pub fn curvature_projector(trajectory: &Trajectory, schedule: &HamiltonianSchedule) -> Result<Vec<Option<f64>>> {
    interior_or_degenerate(trajectory, schedule, |s| s.kappa2)
}

/// `τ^2` by the projector route; endpoints are `None`.
pub fn torsion_projector(trajectory: &Trajectory, schedule: &HamiltonianSchedule) -> Result<Vec<Option<f64>>> {
    interior_or_degenerate(trajectory, schedule, |s| s.tau2)
}

/// Orthonormal triple `{Ψ, T, N}`.
#[derive(Clone, Debug)]
pub struct FrenetFrame {
    pub state: Vector,
    pub tangent: Vector,
    pub normal: Vector,
}

impl FrenetFrame {
    /// `3 x 3` Gram matrix of `(Ψ, T, N)`.
    pub fn gram(&self) -> [[C64; 3]; 3] {
        let v = [&self.state, &self.tangent, &self.normal];
        let mut g = [[C64::new(0.0, 0.0); 3]; 3];
        for (i, a) in v.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                g[i][j] = a.dotc(b);
            }
        }
        g
    }
}

/// Normalizes `|Ñ>` into `|N>` and assembles the frame.
pub fn frenet_frame(state: &Vector, tangent: &Vector, torsion_vector: &Vector) -> Result<FrenetFrame> {
    let norm_sq = torsion_vector.norm_squared();
    if norm_sq <= NORMAL_EPS {
        return Err(Error::DegenerateNormal {
            norm_sq,
            threshold: NORMAL_EPS,
        });
    }
    Ok(FrenetFrame {
        state: state.clone(),
        tangent: tangent.clone(),
        normal: torsion_vector / C64::new(norm_sq.sqrt(), 0.0),
    })
}

/// The statistical reading of the curvature and torsion coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureDecomposition {
    /// `α_4 - 1`
    pub kurtosis_term: f64,
    /// `[(σ_Ḣ)^2 - (σ̇_H)^2] / v^4`
    pub acceleration_term: f64,
    /// `i [cov(H, [H,Ḣ]) + cov([H,Ḣ], H)] / v^4`
    pub covariance_term: f64,
    /// `-α_3^2`
    pub skew_term: f64,
    /// `(1/4) <[H,Ḣ]>^2 / v^6`, non-positive since `<[H,Ḣ]>` is imaginary.
    pub comm_sq_term: f64,
    /// `-i α_3 <[H,Ḣ]> / v^3`
    pub skew_comm_term: f64,
    pub speed: f64,
    pub v_dot: f64,
    /// `(σ_Ḣ)^2`
    pub hdot_variance: f64,
}

impl CurvatureDecomposition {
    pub fn kappa2(&self) -> f64 {
        self.kurtosis_term + self.acceleration_term + self.covariance_term
    }

    pub fn tau2(&self) -> f64 {
        self.kurtosis_term
            + self.skew_term
            + self.acceleration_term
            + self.comm_sq_term
            + self.covariance_term
            + self.skew_comm_term
    }

    /// Sum of the absolute values of the six terms.
    pub fn magnitude(&self) -> f64 {
        [
            self.kurtosis_term,
            self.acceleration_term,
            self.covariance_term,
            self.skew_term,
            self.comm_sq_term,
            self.skew_comm_term,
        ]
        .iter()
        .map(|x| x.abs())
        .sum()
    }

    /// `(σ̇_H)^2 <= (σ_Ḣ)^2`, with a roundoff allowance.
    pub fn acceleration_bounded(&self) -> bool {
        self.v_dot * self.v_dot <= self.hdot_variance * (1.0 + 1e-10) + 1e-14
    }
}

/// Moments, covariances and commutator expectations of `H` and `Ḣ`.
pub fn curvature_statistical(
    h: &HermitianOperator,
    hdot: &HermitianOperator,
    state: &StateVector,
) -> Result<CurvatureDecomposition> {
    if h.dim() != hdot.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: hdot.dim(),
        });
    }
    let moments = central_moments(h, state, 4)?;
    let v = moments.variance().sqrt();
    let threshold = speed_threshold(h);
    if v <= threshold {
        return Err(Error::DegenerateSpeed { v, threshold });
    }
    let alpha3 = moments.skewness().expect("third moment computed");
    let alpha4 = moments.kurtosis().expect("fourth moment computed");

    let cov = generalized_variance(h, hdot, state)?;
    let hdot_variance = cov.hdot_hdot;
    // 2 v v̇ = <ΔḢΔH + ΔHΔḢ> = 2 Re σ_HḢ
    let v_dot = cov.h_hdot.re / v;

    let comm = commutator(h.matrix(), hdot.matrix())?;
    let comm_scale = comm.norm();
    let comm_mean = expectation_complex(&comm, state)?;
    let cov_sum = covariance(h.matrix(), &comm, state)? + covariance(&comm, h.matrix(), state)?;
    let cov_scale = 2.0 * h.frobenius_norm() * comm_scale;

    let v2 = v * v;
    let v3 = v2 * v;
    let v4 = v2 * v2;
    // <[H,Ḣ]> = i c with c real, so <[H,Ḣ]>^2 = -c^2
    let comm_imag = comm_mean.im;
    debug_assert!(comm_mean.re.abs() <= 1e-12 * (1.0 + comm_scale));
    Ok(CurvatureDecomposition {
        kurtosis_term: alpha4 - 1.0,
        acceleration_term: (hdot_variance - v_dot * v_dot) / v4,
        covariance_term: i_times_anti_hermitian(cov_sum, cov_scale) / v4,
        skew_term: -alpha3 * alpha3,
        comm_sq_term: -0.25 * comm_imag * comm_imag / (v4 * v2),
        skew_comm_term: -alpha3 * i_times_anti_hermitian(comm_mean, comm_scale) / v3,
        speed: v,
        v_dot,
        hdot_variance,
    })
}

/// `τ^2 = det Σ(H, Ḣ) / v^6`, valid for two-level systems only.
pub fn torsion_generalized_variance(
    h: &HermitianOperator,
    hdot: &HermitianOperator,
    state: &StateVector,
) -> Result<f64> {
    if h.dim() != 2 {
        return Err(Error::DimensionUnsupported {
            supported: 2,
            found: h.dim(),
        });
    }
    let cov = generalized_variance(h, hdot, state)?;
    let v = cov.hh.sqrt();
    let threshold = speed_threshold(h);
    if v <= threshold {
        return Err(Error::DegenerateSpeed { v, threshold });
    }
    Ok(cov.determinant / cov.hh.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{pauli_x, pauli_y, pauli_z};
    use approx::assert_abs_diff_eq;

    fn qubit_h(m: [f64; 3]) -> HermitianOperator {
        pauli_x()
            .scale(m[0])
            .add(&pauli_y().scale(m[1]))
            .unwrap()
            .add(&pauli_z().scale(m[2]))
            .unwrap()
    }

    fn state(a: &[(f64, f64)]) -> StateVector {
        StateVector::from_slice(&a.iter().map(|&(r, i)| C64::new(r, i)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn stationary_geodesic_has_zero_curvature() {
        let h = pauli_z().scale(0.5);
        let psi = state(&[(1.0, 0.0), (1.0, 0.0)]);
        let zero = HermitianOperator::zeros(2);
        assert_abs_diff_eq!(curvature_expectation(&h, &zero, &psi).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(torsion_expectation(&h, &zero, &psi).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn stationary_limit_is_kurtosis_and_skewness() {
        let h = HermitianOperator::diagonal(&[1.0, 0.2, -0.7]);
        let psi = state(&[(0.5, 0.1), (0.3, -0.4), (0.6, 0.2)]);
        let zero = HermitianOperator::zeros(3);
        let m = central_moments(&h, &psi, 4).unwrap();
        let (a3, a4) = (m.skewness().unwrap(), m.kurtosis().unwrap());
        assert_abs_diff_eq!(
            curvature_expectation(&h, &zero, &psi).unwrap(),
            a4 - 1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            torsion_expectation(&h, &zero, &psi).unwrap(),
            a4 - 1.0 - a3 * a3,
            epsilon = 1e-12
        );
        let d = curvature_statistical(&h, &zero, &psi).unwrap();
        assert_eq!(d.acceleration_term, 0.0);
        assert_eq!(d.covariance_term, 0.0);
        assert_eq!(d.comm_sq_term, 0.0);
    }

    #[test]
    fn qubit_torsion_vanishes_three_ways() {
        let h = qubit_h([0.3, -0.2, 0.5]);
        let hdot = qubit_h([0.1, 0.4, -0.2]);
        let psi = state(&[(0.8, 0.1), (0.2, -0.5)]);
        assert!(torsion_expectation(&h, &hdot, &psi).unwrap().abs() < 1e-10);
        assert!(torsion_generalized_variance(&h, &hdot, &psi).unwrap().abs() < 1e-10);
        let d = curvature_statistical(&h, &hdot, &psi).unwrap();
        assert!(d.tau2().abs() < 1e-9);
        assert!(d.comm_sq_term <= 0.0);
    }

    #[test]
    fn generalized_variance_torsion_rejects_qutrits() {
        let h = HermitianOperator::diagonal(&[1.0, 0.0, -1.0]);
        let psi = state(&[(1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(
            torsion_generalized_variance(&h, &h, &psi),
            Err(Error::DimensionUnsupported { supported: 2, found: 3 })
        ));
    }

    #[test]
    fn eigenstate_is_degenerate_speed() {
        let psi = StateVector::basis(2, 0).unwrap();
        let h = pauli_z();
        let hdot = pauli_x();
        assert!(matches!(
            curvature_expectation(&h, &hdot, &psi),
            Err(Error::DegenerateSpeed { .. })
        ));
        assert!(matches!(
            torsion_expectation(&h, &hdot, &psi),
            Err(Error::DegenerateSpeed { .. })
        ));
    }

    #[test]
    fn degenerate_normal_at_geodesic() {
        let psi = Vector::from_column_slice(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let tangent = Vector::from_column_slice(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        let tiny = Vector::from_column_slice(&[C64::new(1e-8, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(
            frenet_frame(&psi, &tangent, &tiny),
            Err(Error::DegenerateNormal { .. })
        ));
    }
}
