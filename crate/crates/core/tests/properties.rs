use proptest::prelude::*;
use quantum_frenet::evolution::{propagate, HamiltonianSchedule, Method, TimeGrid};
use quantum_frenet::frenet::{
    coefficients_expectation, curvature_statistical, projector_route, torsion_generalized_variance,
};
use quantum_frenet::hilbert::{
    anticommutator, central_moments, commutator, delta_operator, expectation, expectation_complex,
    generalized_variance, HermitianOperator, Matrix, C64,
};
use quantum_frenet::qubit::{
    bloch_rhs, curvature_bloch, propagate_bloch, speed_accel_bloch, state_from_bloch, torsion_bloch, BlochVector,
    FieldVector,
};
use quantum_frenet::rabi::{
    bloch_exact, compose_rotations, rabi_axis_angle, rabi_hamiltonian, rabi_hamiltonian_rotating, rabi_propagator,
    rotating_frame_unitary, su2_matrix, AxisAngle, RabiParams,
};
use quantum_frenet::sampling::{random_hermitian, random_state, random_unit3, random_vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn qubit_draw(r: &mut ChaCha8Rng) -> (BlochVector, FieldVector) {
    let a = BlochVector::new(random_unit3(r)).unwrap();
    let field = FieldVector::new(random_vector3(r, 1.0), random_vector3(r, 1.0)).unwrap();
    (a, field)
}

fn speed_sq(a: &BlochVector, f: &FieldVector) -> f64 {
    f.m.norm_squared() - a.vector().dot(&f.m).powi(2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn expectations_of_hermitian_products(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let a = random_hermitian(&mut r, n, 1.0);
        let b = random_hermitian(&mut r, n, 1.0);
        let psi = random_state(&mut r, n);
        let z = expectation_complex(a.matrix(), &psi).unwrap();
        prop_assert!(z.im.abs() < 1e-12);
        let c = expectation_complex(&commutator(a.matrix(), b.matrix()).unwrap(), &psi).unwrap();
        let ac = expectation_complex(&anticommutator(a.matrix(), b.matrix()).unwrap(), &psi).unwrap();
        prop_assert!(c.re.abs() < 1e-12);
        prop_assert!(ac.im.abs() < 1e-12);
        let d = delta_operator(&a, &psi).unwrap();
        prop_assert!(expectation(&d, &psi).unwrap().abs() < 1e-12);
    }

    #[test]
    fn moment_inequality_and_psd_covariance(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, n, 1.0);
        let hdot = random_hermitian(&mut r, n, 1.0);
        let psi = random_state(&mut r, n);
        let m = central_moments(&h, &psi, 4).unwrap();
        if m.variance() > 1e-8 {
            let (a3, a4) = (m.skewness().unwrap(), m.kurtosis().unwrap());
            prop_assert!(a4 >= 1.0 + a3 * a3 - 1e-10 * a4.max(1.0));
        }
        prop_assert!(generalized_variance(&h, &hdot, &psi).unwrap().determinant >= -1e-10);
    }

    #[test]
    fn normalized_derivative_dispersion_has_zero_mean(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, n, 1.0);
        let hdot = random_hermitian(&mut r, n, 1.0);
        let psi = random_state(&mut r, n);
        let dh = delta_operator(&h, &psi).unwrap();
        let dhdot = delta_operator(&hdot, &psi).unwrap();
        let v = expectation(&HermitianOperator::new(dh.matrix() * dh.matrix()).unwrap(), &psi).unwrap().sqrt();
        prop_assume!(v > 1e-3);
        let v_dot = curvature_statistical(&h, &hdot, &psi).unwrap().v_dot;
        let dh_prime = dhdot.scale(1.0 / (v * v)).sub(&dh.scale(v_dot / (v * v * v))).unwrap();
        prop_assert!(expectation(&dh_prime, &psi).unwrap().abs() < 1e-8);
    }

    #[test]
    fn coefficients_positive_and_ordered(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, n, 1.0);
        let hdot = random_hermitian(&mut r, n, 1.0);
        let psi = random_state(&mut r, n);
        let (k, t) = coefficients_expectation(&h, &hdot, &psi).unwrap();
        let scale = k.abs().max(1.0);
        prop_assert!(k >= -1e-10 * scale);
        prop_assert!(t >= -1e-10 * scale);
        prop_assert!(t <= k + 1e-8 * scale);
    }

    #[test]
    fn qubit_torsion_vanishes_three_ways(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, field) = qubit_draw(&mut r);
        prop_assume!(speed_sq(&a, &field) > 1e-6);
        let psi = state_from_bloch(&a);
        let (h, hdot) = (field.hamiltonian(), field.hamiltonian_derivative());
        let (k, t) = coefficients_expectation(&h, &hdot, &psi).unwrap();
        let tb = torsion_bloch(&a, &field).unwrap();
        // roundoff grows with the cancelling terms, not with the result
        let bound = 1e-12 * k.abs().max(1.0).max(tb.scale);
        prop_assert!(t.abs() < bound);
        prop_assert!(torsion_generalized_variance(&h, &hdot, &psi).unwrap().abs() < bound);
        prop_assert!(tb.residual < bound);
    }

    #[test]
    fn bloch_route_matches_matrix_route(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, field) = qubit_draw(&mut r);
        prop_assume!(speed_sq(&a, &field) > 1e-6);
        let psi = state_from_bloch(&a);
        let (k, _) = coefficients_expectation(&field.hamiltonian(), &field.hamiltonian_derivative(), &psi).unwrap();
        let kb = curvature_bloch(&a, &field).unwrap();
        prop_assert!((k - kb).abs() < 1e-10 * k.abs().max(1.0), "expectation {k} vs bloch {kb}");
    }

    #[test]
    fn qubit_kinematics(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, field) = qubit_draw(&mut r);
        let adot = bloch_rhs(&field.m, a.vector());
        prop_assert!(adot.dot(&field.m).abs() < 1e-14);
        prop_assert!(adot.dot(a.vector()).abs() < 1e-14);

        prop_assume!(speed_sq(&a, &field) > 1e-6);
        let sa = speed_accel_bloch(&a, &field).unwrap();
        let sigma_mdot_sq = field.mdot.norm_squared() - a.vector().dot(&field.mdot).powi(2);
        prop_assert!(sa.v_dot * sa.v_dot <= sigma_mdot_sq * (1.0 + 1e-10) + 1e-14);
        prop_assert!((sa.v - adot.norm() / 2.0).abs() < 1e-12);

        // Lagrange: |m|^2|ṁ|^2 - (m·ṁ)^2 = |m × ṁ|^2
        let (m, md) = (field.m, field.mdot);
        let lhs = m.norm_squared() * md.norm_squared() - m.dot(&md).powi(2);
        prop_assert!((lhs - m.cross(&md).norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn rotation_composition_matches_su2_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let r1 = AxisAngle::new(rand::Rng::gen_range(&mut r, 0.0..std::f64::consts::TAU), random_unit3(&mut r)).unwrap();
        let r2 = AxisAngle::new(rand::Rng::gen_range(&mut r, 0.0..std::f64::consts::TAU), random_unit3(&mut r)).unwrap();
        let c = compose_rotations(&r1, &r2).unwrap();
        prop_assert!((c.axis.norm() - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=std::f64::consts::TAU).contains(&c.angle));
        prop_assert!(max_abs(&(su2_matrix(&c) - su2_matrix(&r1) * su2_matrix(&r2))) < 1e-12);
    }

    #[test]
    fn rabi_propagator_identities(
        omega0 in 0.1f64..2.0,
        rabi in 0.0f64..2.0,
        omega in 0.0f64..2.0,
        t in 0.0f64..50.0,
    ) {
        let p = RabiParams::new(omega0, rabi, omega).unwrap();
        let u = rabi_propagator(&p, t);
        prop_assert!(max_abs(&(u.adjoint() * &u - Matrix::identity(2, 2))) < 1e-12);
        prop_assert!(max_abs(&(su2_matrix(&rabi_axis_angle(&p, t)) - &u)) < 1e-12);

        let sz = quantum_frenet::hilbert::pauli_z().into_matrix();
        let frame = rotating_frame_unitary(&p, t);
        let win = frame.adjoint() * rabi_hamiltonian(&p, t).matrix() * &frame - sz * C64::new(0.5 * omega, 0.0);
        prop_assert!(max_abs(&(win - rabi_hamiltonian_rotating(&p).matrix())) < 1e-12);

        let dt = 1e-4;
        let du = (rabi_propagator(&p, t + dt) - rabi_propagator(&p, t - dt)) * C64::new(0.0, 0.5 / dt);
        prop_assert!(max_abs(&(du - rabi_hamiltonian(&p, t).matrix() * &u)) < 1e-6);
    }

    #[test]
    fn exact_orbit_rotates_about_axis(
        omega0 in 0.1f64..2.0,
        rabi in 0.0f64..2.0,
        omega in 0.0f64..2.0,
        t in 0.0f64..50.0,
        seed in any::<u64>(),
    ) {
        let p = RabiParams::new(omega0, rabi, omega).unwrap();
        let a0 = BlochVector::new(random_unit3(&mut rng(seed))).unwrap();
        let a = bloch_exact(&p, &a0, t);
        let n = rabi_axis_angle(&p, t).axis;
        prop_assert!((a.vector().norm() - 1.0).abs() < 1e-12);
        prop_assert!((a.vector().dot(&n) - a0.vector().dot(&n)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn trajectories_keep_norm_and_parallel_transport(seed in any::<u64>(), n in 2usize..=3) {
        let mut r = rng(seed);
        let h0 = random_hermitian(&mut r, n, 1.0);
        let h1 = random_hermitian(&mut r, n, 1.0);
        let (a0, a1) = (h0.clone(), h1.clone());
        let schedule = HamiltonianSchedule::new(n, "random", move |t| a0.add(&a1.scale(t.sin())).unwrap())
            .with_time_scale(5.0)
            .with_derivative(move |t| h1.scale(t.cos()))
            .unwrap();
        let psi0 = random_state(&mut r, n);
        let grid = TimeGrid::new(5.0, 1000).unwrap();
        let unitary = propagate(&schedule, &psi0, grid, Method::MidpointExponential).unwrap();
        for psi in &unitary.raw_states {
            prop_assert!((psi.amplitudes().norm() - 1.0).abs() < 1e-10);
        }
        prop_assert!(unitary.norm_drift < 1e-10);

        let traj = propagate(&schedule, &psi0, grid, Method::Rk4).unwrap();
        let dt = traj.dt();
        for i in 2..traj.len() - 2 {
            let p = |k: usize| traj.transported_states[k].amplitudes();
            let deriv = (p(i - 2) - p(i - 1) * C64::new(8.0, 0.0) + p(i + 1) * C64::new(8.0, 0.0) - p(i + 2))
                / C64::new(12.0 * dt, 0.0);
            prop_assert!(p(i).dotc(&deriv).norm() < 1e-6 * traj.speed[i].max(1e-3));
        }
        for s in projector_route(&traj, &schedule).unwrap().into_iter().flatten() {
            prop_assert!(s.kappa2 >= 0.0 && s.tau2 >= 0.0);
            prop_assert!(s.tau2 <= s.kappa2 + 1e-8);
        }
    }

    #[test]
    fn bloch_orbit_stays_on_sphere(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m0, m1) = (random_vector3(&mut r, 1.0), random_vector3(&mut r, 1.0));
        let a0 = BlochVector::new(random_unit3(&mut r)).unwrap();
        let orbit = propagate_bloch(|t| m0 + m1 * (2.0 * t).cos(), &a0, TimeGrid::new(10.0, 2000).unwrap()).unwrap();
        for a in &orbit {
            prop_assert!((a.vector().norm() - 1.0).abs() < 1e-8);
        }
    }
}
