//! Time evolution of pure states and the kinematics of the traced curve:
//! parallel transport, speed, arc length and acceleration.

use std::fmt;
use std::sync::Arc;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hilbert::{delta_operator, expectation, HermitianOperator, Matrix, StateVector, Vector, C64, I};

/// Relative threshold below which the speed is treated as zero: `ε_v = SPEED_EPS * ||H||_F`.
pub const SPEED_EPS: f64 = 1e-9;

type OperatorFn = dyn Fn(f64) -> HermitianOperator + Send + Sync;

/// A Hermitian operator valued function of time, with an optional analytic
/// derivative. Without one, `Ḣ` falls back to a 5-point central difference.
#[derive(Clone)]
pub struct HamiltonianSchedule {
    dim: usize,
    label: String,
    hamiltonian: Arc<OperatorFn>,
    derivative: Option<Arc<OperatorFn>>,
    time_scale: f64,
}

impl fmt::Debug for HamiltonianSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSchedule")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("time_scale", &self.time_scale)
            .finish()
    }
}

impl HamiltonianSchedule {
    pub fn new<F>(dim: usize, label: impl Into<String>, hamiltonian: F) -> Self
    where
        F: Fn(f64) -> HermitianOperator + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            hamiltonian: Arc::new(hamiltonian),
            derivative: None,
            time_scale: 1.0,
        }
    }

    /// A time-independent schedule with an exactly vanishing derivative.
    pub fn constant(label: impl Into<String>, op: HermitianOperator) -> Self {
        let dim = op.dim();
        let zero = HermitianOperator::zeros(dim);
        let h = op.clone();
        Self {
            dim,
            label: label.into(),
            hamiltonian: Arc::new(move |_| h.clone()),
            derivative: Some(Arc::new(move |_| zero.clone())),
            time_scale: 1.0,
        }
    }

    /// Sets the characteristic time span (usually `t_max`), which fixes the
    /// finite-difference step `max(1e-6, 1e-6 * time_scale)` and the window of
    /// the derivative self-check.
    pub fn with_time_scale(mut self, time_scale: f64) -> Self {
        self.time_scale = time_scale.abs().max(f64::MIN_POSITIVE);
        self
    }

    /// Attaches an analytic derivative after checking it against the 5-point
    /// central difference at 10 pseudo-random times in `[0, time_scale]`.
    pub fn with_derivative<F>(mut self, derivative: F) -> Result<Self>
    where
        F: Fn(f64) -> HermitianOperator + Send + Sync + 'static,
    {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f00d);
        for _ in 0..10 {
            let t = rng.gen_range(0.0..self.time_scale);
            let h = (self.hamiltonian)(t);
            let analytic = derivative(t);
            if h.dim() != self.dim || analytic.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: if h.dim() != self.dim { h.dim() } else { analytic.dim() },
                });
            }
            let fd = self.finite_difference(t);
            let deviation = (analytic.matrix() - fd.matrix()).norm();
            // roundoff floor keeps constant-in-time schedules from failing on noise
            let tolerance = 1e-6 * analytic.frobenius_norm().max(1e-3 * h.frobenius_norm());
            if deviation > tolerance {
                return Err(Error::DerivativeMismatch {
                    t,
                    deviation,
                    tolerance,
                });
            }
        }
        self.derivative = Some(Arc::new(derivative));
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn fd_step(&self) -> f64 {
        (1e-6 * self.time_scale).max(1e-6)
    }

    pub fn evaluate(&self, t: f64) -> HermitianOperator {
        (self.hamiltonian)(t)
    }

    /// `Ḣ(t)`, analytic when available.
    pub fn derivative(&self, t: f64) -> HermitianOperator {
        match &self.derivative {
            Some(d) => d(t),
            None => self.finite_difference(t),
        }
    }

    /// 5-point central difference of `H` at `t`.
    pub fn finite_difference(&self, t: f64) -> HermitianOperator {
        let h = self.fd_step();
        let f = |s: f64| (self.hamiltonian)(s).into_matrix();
        let m = (f(t - 2.0 * h) - f(t - h) * C64::new(8.0, 0.0) + f(t + h) * C64::new(8.0, 0.0) - f(t + 2.0 * h))
            / C64::new(12.0 * h, 0.0);
        // the stencil is a real combination of Hermitian matrices
        HermitianOperator::from_matrix_unchecked(m)
    }
}

/// Uniform grid `t_i = i * t_max / steps`, `i = 0..=steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    pub t_max: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::InvalidGrid(format!("t_max must be finite and > 0, got {t_max}")));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("steps must be >= 2, got {steps}")));
        }
        Ok(Self { t_max, steps })
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps).map(|i| i as f64 * dt).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Classical Runge-Kutta, renormalized every step.
    Rk4,
    /// `exp(-i H(t + dt/2) dt)` per step; unitary by construction.
    MidpointExponential,
}

/// A sampled quantum curve.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `|ψ(t_i)>` as produced by the propagator.
    pub raw_states: Vec<StateVector>,
    /// `|Ψ(t_i)> = e^{iβ(t_i)} |ψ(t_i)>`.
    pub transported_states: Vec<StateVector>,
    pub beta: Vec<f64>,
    pub speed: Vec<f64>,
    pub arc_length: Vec<f64>,
    /// `None` where the speed is degenerate.
    pub v_dot: Vec<Option<f64>>,
    /// Largest `| ||ψ|| - 1 |` removed by renormalization during propagation.
    pub norm_drift: f64,
}

impl Trajectory {
    /// Builds the curve quantities from states sampled on a uniform grid.
    pub fn from_states(
        schedule: &HamiltonianSchedule,
        times: Vec<f64>,
        raw_states: Vec<StateVector>,
        norm_drift: f64,
    ) -> Result<Self> {
        if times.len() != raw_states.len() {
            return Err(Error::InvalidGrid(format!(
                "{} times for {} states",
                times.len(),
                raw_states.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InsufficientSamples {
                needed: 2,
                found: times.len(),
            });
        }
        if let Some(s) = raw_states.iter().find(|s| s.dim() != schedule.dim()) {
            return Err(Error::DimensionMismatch {
                expected: schedule.dim(),
                found: s.dim(),
            });
        }
        let beta = geometric_phase(&raw_states, &times, schedule)?;
        let transported_states = raw_states
            .iter()
            .zip(&beta)
            .map(|(psi, &b)| psi.with_phase(b))
            .collect();
        let mut speeds = Vec::with_capacity(times.len());
        let mut v_dot = Vec::with_capacity(times.len());
        for (psi, &t) in raw_states.iter().zip(&times) {
            let h = schedule.evaluate(t);
            speeds.push(speed_of(&h, psi)?);
            v_dot.push(match v_dot_of(&h, &schedule.derivative(t), psi) {
                Ok(x) => Some(x),
                Err(Error::DegenerateSpeed { .. }) => None,
                Err(e) => return Err(e),
            });
        }
        let arc_length = arc_length(&times, &speeds);
        Ok(Self {
            times,
            raw_states,
            transported_states,
            beta,
            speed: speeds,
            arc_length,
            v_dot,
            norm_drift,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    /// Largest `|<Ψ|Ψ̇>| / v` over interior samples, with `Ψ̇` from a 5-point
    /// central difference. Samples with degenerate speed are skipped.
    pub fn parallel_transport_residual(&self, schedule: &HamiltonianSchedule) -> f64 {
        let n = self.len();
        if n < 5 {
            return 0.0;
        }
        let dt = self.dt();
        let mut worst = 0.0f64;
        for i in 2..n - 2 {
            let eps = SPEED_EPS * schedule.evaluate(self.times[i]).frobenius_norm();
            if self.speed[i] <= eps {
                continue;
            }
            let psi = |k: usize| self.transported_states[k].amplitudes();
            let deriv = (psi(i - 2) - psi(i - 1) * C64::new(8.0, 0.0) + psi(i + 1) * C64::new(8.0, 0.0) - psi(i + 2))
                / C64::new(12.0 * dt, 0.0);
            let overlap = psi(i).dotc(&deriv).norm();
            worst = worst.max(overlap / self.speed[i]);
        }
        worst
    }
}

/// Integrates `i ∂_t |ψ> = H(t) |ψ>` on a uniform grid.
pub fn propagate(
    schedule: &HamiltonianSchedule,
    psi0: &StateVector,
    grid: TimeGrid,
    method: Method,
) -> Result<Trajectory> {
    let grid = TimeGrid::new(grid.t_max, grid.steps)?;
    if psi0.dim() != schedule.dim() {
        return Err(Error::DimensionMismatch {
            expected: schedule.dim(),
            found: psi0.dim(),
        });
    }
    let times = grid.times();
    let dt = grid.dt();
    let mut psi = psi0.amplitudes().clone();
    let mut states = Vec::with_capacity(times.len());
    states.push(psi0.clone());
    let mut drift = 0.0f64;

    for &t in &times[..times.len() - 1] {
        psi = match method {
            Method::Rk4 => rk4_step(schedule, t, dt, &psi),
            Method::MidpointExponential => midpoint_exponential_step(schedule, t, dt, &psi),
        };
        let norm = psi.norm();
        if !norm.is_finite() || psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteState { t: t + dt });
        }
        drift = drift.max((norm - 1.0).abs());
        if method == Method::Rk4 {
            psi.unscale_mut(norm);
        }
        states.push(StateVector::new(psi.clone())?);
    }
    Trajectory::from_states(schedule, times, states, drift)
}

fn rk4_step(schedule: &HamiltonianSchedule, t: f64, dt: f64, psi: &Vector) -> Vector {
    let minus_i = -I;
    let h0 = schedule.evaluate(t).into_matrix() * minus_i;
    let h_mid = schedule.evaluate(t + 0.5 * dt).into_matrix() * minus_i;
    let h1 = schedule.evaluate(t + dt).into_matrix() * minus_i;
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let k1 = &h0 * psi;
    let k2 = &h_mid * (psi + &k1 * half);
    let k3 = &h_mid * (psi + &k2 * half);
    let k4 = &h1 * (psi + &k3 * full);
    psi + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
}

/// `exp(-i H dt)` from the spectral decomposition of the Hermitian `H`.
pub fn unitary_step(h: &HermitianOperator, dt: f64) -> Matrix {
    let eig = SymmetricEigen::new(h.matrix().clone());
    let phases = Vector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&lambda| C64::from_polar(1.0, -lambda * dt)),
    );
    &eig.eigenvectors * Matrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

fn midpoint_exponential_step(schedule: &HamiltonianSchedule, t: f64, dt: f64, psi: &Vector) -> Vector {
    unitary_step(&schedule.evaluate(t + 0.5 * dt), dt) * psi
}

/// `β(t) = ∫_0^t <ψ|H|ψ> dt'` on the sampled grid.
///
/// Even nodes use composite Simpson; odd nodes close the last interval with a
/// fourth-order cubic rule so the result is smooth from node to node.
pub fn geometric_phase(raw_states: &[StateVector], times: &[f64], schedule: &HamiltonianSchedule) -> Result<Vec<f64>> {
    if raw_states.len() != times.len() {
        return Err(Error::InvalidGrid(format!(
            "{} times for {} states",
            times.len(),
            raw_states.len()
        )));
    }
    let energies = raw_states
        .iter()
        .zip(times)
        .map(|(psi, &t)| expectation(&schedule.evaluate(t), psi))
        .collect::<Result<Vec<_>>>()?;
    Ok(cumulative_integral(&energies, times))
}

pub(crate) fn cumulative_integral(f: &[f64], times: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let h = times[1] - times[0];
    if n == 2 {
        out[1] = 0.5 * h * (f[0] + f[1]);
        return out;
    }
    for i in 1..n {
        out[i] = if i % 2 == 0 {
            out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i])
        } else if i >= 2 && i + 1 < n {
            out[i - 1] + h / 24.0 * (-f[i - 2] + 13.0 * f[i - 1] + 13.0 * f[i] - f[i + 1])
        } else if i == 1 && n >= 4 {
            out[0] + h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i >= 3 {
            out[i - 1] + h / 24.0 * (f[i - 3] - 5.0 * f[i - 2] + 19.0 * f[i - 1] + 9.0 * f[i])
        } else {
            // n == 3, i == 1
            out[0] + h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2])
        };
    }
    out
}

/// `v = sqrt(<(ΔH)^2>)` at a given state and Hamiltonian.
pub fn speed_of(h: &HermitianOperator, state: &StateVector) -> Result<f64> {
    Ok(delta_operator(h, state)?.apply(state)?.norm())
}

/// `v(t)` for the schedule at `t`.
pub fn speed(schedule: &HamiltonianSchedule, state: &StateVector, t: f64) -> Result<f64> {
    speed_of(&schedule.evaluate(t), state)
}

/// `s(t_i)` by the composite trapezoid rule, `s(t_0) = 0`.
pub fn arc_length(times: &[f64], speed: &[f64]) -> Vec<f64> {
    let mut s = Vec::with_capacity(speed.len());
    let mut acc = 0.0;
    for i in 0..speed.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (speed[i] + speed[i - 1]);
        }
        s.push(acc);
    }
    s
}

pub(crate) fn speed_threshold(h: &HermitianOperator) -> f64 {
    SPEED_EPS * h.frobenius_norm()
}

/// `v̇ = <ΔḢ ΔH + ΔH ΔḢ> / (2v)`.
pub fn v_dot_of(h: &HermitianOperator, hdot: &HermitianOperator, state: &StateVector) -> Result<f64> {
    let dh = delta_operator(h, state)?.apply(state)?;
    let v = dh.norm();
    let threshold = speed_threshold(h);
    if v <= threshold {
        return Err(Error::DegenerateSpeed { v, threshold });
    }
    let dhdot = delta_operator(hdot, state)?.apply(state)?;
    Ok(dhdot.dotc(&dh).re / v)
}

pub fn v_dot(schedule: &HamiltonianSchedule, state: &StateVector, t: f64) -> Result<f64> {
    v_dot_of(&schedule.evaluate(t), &schedule.derivative(t), state)
}

/// Unit tangent `|T> = -i Δh |Ψ>` with `Δh = ΔH / v`.
pub fn tangent_of(h: &HermitianOperator, state: &StateVector) -> Result<Vector> {
    let dh = delta_operator(h, state)?.apply(state)?;
    let v = dh.norm();
    let threshold = speed_threshold(h);
    if v <= threshold {
        return Err(Error::DegenerateSpeed { v, threshold });
    }
    Ok(dh * (-I / C64::new(v, 0.0)))
}

pub fn tangent_vector(schedule: &HamiltonianSchedule, state: &StateVector, t: f64) -> Result<Vector> {
    tangent_of(&schedule.evaluate(t), state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{pauli_x, pauli_z};
    use approx::assert_abs_diff_eq;

    fn precession(omega0: f64) -> HamiltonianSchedule {
        HamiltonianSchedule::constant("precession", pauli_z().scale(0.5 * omega0))
    }

    #[test]
    fn eigenstate_picks_up_dynamical_phase_only() {
        let omega0 = 1.3;
        let sched = precession(omega0);
        let psi0 = StateVector::basis(2, 0).unwrap();
        for method in [Method::Rk4, Method::MidpointExponential] {
            let traj = propagate(&sched, &psi0, TimeGrid::new(5.0, 1000).unwrap(), method).unwrap();
            for (psi, &t) in traj.raw_states.iter().zip(&traj.times) {
                let exact = psi0.with_phase(-0.5 * omega0 * t);
                assert!(exact.fidelity(psi) > 1.0 - 1e-10);
                assert!((exact.inner(psi) - C64::new(1.0, 0.0)).norm() < 1e-8);
            }
            // E = ω0/2 in |0>
            for (&b, &t) in traj.beta.iter().zip(&traj.times) {
                assert_abs_diff_eq!(b, 0.5 * omega0 * t, epsilon = 1e-10);
            }
            assert!(traj.speed.iter().all(|&v| v < 1e-12));
            assert!(traj.arc_length.iter().all(|&s| s < 1e-10));
            assert!(traj.v_dot.iter().all(Option::is_none));
        }
    }

    #[test]
    fn zero_hamiltonian_leaves_state_untouched() {
        let sched = HamiltonianSchedule::constant("zero", HermitianOperator::zeros(3));
        let psi0 = StateVector::from_slice(&[C64::new(0.3, 0.1), C64::new(-0.2, 0.5), C64::new(0.7, 0.0)]).unwrap();
        let traj = propagate(
            &sched,
            &psi0,
            TimeGrid::new(2.0, 10).unwrap(),
            Method::MidpointExponential,
        )
        .unwrap();
        for psi in &traj.raw_states {
            assert_eq!(psi, &psi0);
        }
    }

    #[test]
    fn constant_speed_gives_linear_arc_length() {
        // a ⟂ m: v = ||m|| and <H> = 0, so β ≡ 0
        let sched = precession(2.0);
        let psi0 = StateVector::from_slice(&[C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let traj = propagate(
            &sched,
            &psi0,
            TimeGrid::new(3.0, 300).unwrap(),
            Method::MidpointExponential,
        )
        .unwrap();
        for (&s, &t) in traj.arc_length.iter().zip(&traj.times) {
            assert_abs_diff_eq!(s, 1.0 * t, epsilon = 1e-10);
        }
        assert!(traj.beta.iter().all(|b| b.abs() < 1e-12));
        assert!(traj.v_dot.iter().all(|x| x.unwrap().abs() < 1e-12));
    }

    #[test]
    fn cumulative_integral_is_fourth_order_on_polynomials() {
        let times: Vec<f64> = (0..=11).map(|i| i as f64 * 0.1).collect();
        let f: Vec<f64> = times.iter().map(|t| t * t * t - 2.0 * t).collect();
        let integral = cumulative_integral(&f, &times);
        for (&t, &q) in times.iter().zip(&integral) {
            assert_abs_diff_eq!(q, t.powi(4) / 4.0 - t * t, epsilon = 1e-13);
        }
    }

    #[test]
    fn tangent_is_unit_and_orthogonal() {
        let h = pauli_x().add(&pauli_z().scale(0.3)).unwrap();
        let psi = StateVector::from_slice(&[C64::new(0.6, 0.2), C64::new(0.1, -0.7)]).unwrap();
        let t = tangent_of(&h, &psi).unwrap();
        assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-12);
        assert!(psi.amplitudes().dotc(&t).norm() < 1e-12);
    }

    #[test]
    fn eigenstate_tangent_is_degenerate() {
        let psi = StateVector::basis(2, 1).unwrap();
        assert!(matches!(
            tangent_of(&pauli_z(), &psi),
            Err(Error::DegenerateSpeed { .. })
        ));
    }

    #[test]
    fn bad_grid_rejected() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
    }

    #[test]
    fn derivative_self_check_rejects_wrong_derivative() {
        let sched = HamiltonianSchedule::new(2, "drive", |t: f64| pauli_x().scale(t.sin()));
        assert!(sched.clone().with_derivative(|t: f64| pauli_x().scale(t.cos())).is_ok());
        assert!(matches!(
            sched.with_derivative(|t: f64| pauli_x().scale(2.0 * t.cos())),
            Err(Error::DerivativeMismatch { .. })
        ));
    }

    #[test]
    fn huge_steps_surface_non_finite_state() {
        let sched = HamiltonianSchedule::constant("big", pauli_x().scale(1e200));
        let psi0 = StateVector::basis(2, 0).unwrap();
        let r = propagate(&sched, &psi0, TimeGrid::new(1e200, 4).unwrap(), Method::Rk4);
        assert!(matches!(r, Err(Error::NonFiniteState { .. })));
    }
}
