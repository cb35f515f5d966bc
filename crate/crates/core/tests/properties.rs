use proptest::prelude::*;
use spherization_core::geometry::{CoverGeometry, SolQuotient, Torus2};
use spherization_core::sol_model::{momentum_inverse, momentum_map, SolHamiltonian};
use spherization_core::dynamics::Hamiltonian;
use spherization_core::entropy::fit_exponential_rate;
use spherization_core::starshape::{
    CalibrationSampling, CutoffF, RadialProfile, SandwichedHamiltonians, StarshapedSurface,
};
use spherization_core::CotangentPoint;

fn sandwiches() -> Vec<SandwichedHamiltonians<Torus2, 2>> {
    [RadialProfile::Round, RadialProfile::Ellipse { axes: vec![1.0, 2.0] }]
        .into_iter()
        .map(|p| {
            let surface = StarshapedSurface::new(Torus2::standard(), p).unwrap();
            SandwichedHamiltonians::new(surface, 0.2, 1.1, CalibrationSampling::default()).unwrap()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sandwich_is_ordered(q in prop::array::uniform2(-3.0..3.0f64), p in prop::array::uniform2(-8.0..8.0f64)) {
        for s in sandwiches() {
            let (gm, k, gp) = s.sandwich_eval(&CotangentPoint::new(q, p));
            let slack = 1e-12 * gp.abs().max(1.0);
            prop_assert!(gm <= k + slack && k <= gp + slack, "{gm} {k} {gp}");
        }
    }

    #[test]
    fn profile_function_is_two_homogeneous(
        q in prop::array::uniform2(-3.0..3.0f64),
        p in prop::array::uniform2(-4.0..4.0f64),
        lambda in 0.1..5.0f64,
    ) {
        for s in sandwiches() {
            let f = s.surface.f_value(&CotangentPoint::new(q, p));
            let g = s.surface.f_value(&CotangentPoint::new(q, p.map(|c| c * lambda)));
            prop_assert!((g - lambda * lambda * f).abs() <= 1e-12 * g.max(1.0));
        }
    }

    #[test]
    fn cutoff_is_monotone_and_exact_outside_the_band(eps in 0.01..0.24f64, r in 0.0..3.0f64) {
        let cutoff = CutoffF::new(eps).unwrap();
        let (v, d) = cutoff.eval(r);
        prop_assert!(d >= 0.0);
        prop_assert!(v >= 0.0 && v <= r + 1e-15);
        if r >= eps {
            prop_assert_eq!(v, r);
        }
        if r <= eps * eps {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn sol_momentum_map_round_trips(q in prop::array::uniform3(-2.0..2.0f64), p in prop::array::uniform3(-3.0..3.0f64)) {
        let x = CotangentPoint::new(q, p);
        let back = momentum_inverse(&q, &momentum_map(&x));
        for (b, p) in back.p.iter().zip(p) {
            prop_assert!((b - p).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn sol_hamiltonian_is_deck_invariant(
        q in prop::array::uniform3(-1.0..1.0f64),
        p in prop::array::uniform3(-2.0..2.0f64),
        pick in 0usize..27,
    ) {
        let sol = SolQuotient::default_lattice();
        let g = sol.deck_box(1)[pick % sol.deck_box_size(1) as usize];
        let x = CotangentPoint::new(q, p);
        let y = CotangentPoint::new(sol.apply_deck(&g, &q), sol.lift_covector(&g, &q, &p));
        let (a, b) = (SolHamiltonian.value(&x), SolHamiltonian.value(&y));
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn reduction_lands_in_the_orbit(q in prop::array::uniform3(-4.0..4.0f64)) {
        let sol = SolQuotient::default_lattice();
        let (r, g) = sol.reduce(&q);
        let back = sol.apply_deck(&g, &r);
        for i in 0..3 {
            prop_assert!((back[i] - q[i]).abs() <= 1e-9 * q[i].abs().max(1.0));
        }
    }

    #[test]
    fn fitted_rate_ignores_constant_factors(rate in 0.0..1.5f64, scale in 0.5..50.0f64) {
        let series: Vec<f64> = (1..=12).map(|n| (rate * n as f64).exp()).collect();
        let scaled: Vec<f64> = series.iter().map(|v| v * scale).collect();
        let a = fit_exponential_rate(&series, 6).unwrap();
        let b = fit_exponential_rate(&scaled, 6).unwrap();
        prop_assert!((a.rate - rate).abs() <= 1e-9);
        prop_assert!((a.rate - b.rate).abs() <= 1e-9);
    }
}
