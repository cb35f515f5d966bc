use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spherization_core::dynamics::{hamiltonian_vector_field, integrate, IntegratorConfig};
use spherization_core::geometry::SolQuotient;
use spherization_core::sol_model::{
    entropy_closed_form, euler_field, lyapunov_plus, momentum_inverse, momentum_map, p_plus, SolHamiltonian,
    SolLevel, DEFAULT_BURN_IN,
};

fn level(k: f64) -> SolLevel {
    SolLevel::new(k, SolQuotient::default_lattice()).unwrap()
}

#[test]
fn first_integrals_hold_on_random_orbits() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for k in [0.3, 1.0] {
        let lvl = level(k);
        for _ in 0..5 {
            let x0 = lvl.sample_point(&mut rng);
            let traj = integrate(&SolHamiltonian, &x0, 100.0, &IntegratorConfig::default()).unwrap();
            assert!(traj.energy_drift <= 1e-8, "energy drift {}", traj.energy_drift);
            let c0 = momentum_map(&x0).casimir_product();
            for x in &traj.states {
                let m = momentum_map(x);
                assert!((m.casimir_product() - c0).abs() <= 1e-8);
                assert!((m.energy() - k).abs() <= 1e-8);
                if k < 0.5 {
                    assert!(m.mx < 0.0);
                }
            }
        }
    }
}

#[test]
fn orbit_through_p_plus_has_the_closed_form_exponent() {
    for k in [0.75, 1.0, 1.5] {
        let m = p_plus(k).unwrap();
        let x0 = momentum_inverse(&[0.3, -0.2, 0.4], &m);
        let traj = integrate(&SolHamiltonian, &x0, 100.0, &IntegratorConfig::default()).unwrap();
        let chi = lyapunov_plus(&traj, DEFAULT_BURN_IN).unwrap().value;
        // Oracle: M_z stays at √(2k−1).
        assert!((chi - (2.0 * k - 1.0).sqrt()).abs() <= 1e-3, "k = {k}: {chi}");
        assert!((chi - entropy_closed_form(k)).abs() <= 1e-3);
        // M_z > 0 drives z up at unit rate per unit M_z.
        assert!((traj.end().q[2] - 0.4 - 100.0 * chi).abs() < 1e-6);
    }
}

#[test]
fn euler_equations_follow_from_the_full_field() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lvl = level(0.9);
    for _ in 0..50 {
        let x = lvl.sample_point(&mut rng);
        let v = hamiltonian_vector_field(&SolHamiltonian, &x);
        let m = momentum_map(&x);
        let z = x.q[2];
        // Chain rule through M = (e^z p_x, e^{−z} p_y, p_z).
        let dm = [
            m.mx * v.dq[2] + z.exp() * v.dp[0],
            -m.my * v.dq[2] + (-z).exp() * v.dp[1],
            v.dp[2],
        ];
        let e = euler_field(&m);
        for i in 0..3 {
            assert!((dm[i] - e[i]).abs() <= 1e-10, "{dm:?} vs {e:?}");
        }
    }
}
