use spherization_core::dynamics::IntegratorConfig;
use spherization_core::entropy::{chord_census, fit_growth, CensusConfig, ProfileFiber, Verdict};
use spherization_core::geometry::Torus2;
use spherization_core::starshape::{HomogeneousHamiltonian, RadialProfile, StarshapedSurface};

/// Translates `q1 − q0 + v`, `v ∈ ℤ²`, of length at most `t`.
fn lattice_points(q0: &[f64; 2], q1: &[f64; 2], t: f64) -> usize {
    let r = t.ceil() as i64 + 2;
    (-r..=r)
        .flat_map(|i| (-r..=r).map(move |j| (i, j)))
        .filter(|&(i, j)| (q1[0] - q0[0] + i as f64).hypot(q1[1] - q0[1] + j as f64) <= t)
        .count()
}

#[test]
fn round_torus_counts_match_lattice_points() {
    let surface = StarshapedSurface::new(Torus2::standard(), RadialProfile::Round).unwrap();
    let q0 = [0.1, 0.7];
    let fiber = ProfileFiber { surface: surface.clone(), q0 };
    let h = HomogeneousHamiltonian { surface, scale: 0.5 };
    let cfg = CensusConfig {
        horizon: 12.0,
        seed: 9,
        ..Default::default()
    };
    let census = chord_census(&Torus2::standard(), &h, &fiber, &[0.45, 0.2], &cfg, &IntegratorConfig::default()).unwrap();
    for &(t, nu) in &census.nu_series {
        assert_eq!(nu, lattice_points(&q0, &census.q1, t), "t = {t}");
    }
    let tail: Vec<(f64, f64)> = census.nu_series.iter().skip(4).map(|&(t, n)| (t, n as f64)).collect();
    let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
    let fit = fit_growth(&x, &y, x.len()).unwrap();
    assert_eq!(fit.verdict, Verdict::Polynomial);
    assert!((fit.loglog_slope - 2.0).abs() < 0.3, "{fit:?}");
}
