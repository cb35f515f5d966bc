use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use spherization_core::dynamics::{
    action_homogeneous, action_of_trajectory, classify_chord_action, find_fiber_chords, integrate,
    time_change_residual, verify_scaling_law, ActionClass,
};
use spherization_core::geometry::CoverGeometry;
use spherization_core::starshape::{
    HomogeneousHamiltonian, SandwichComponent, SandwichedHamiltonians, StarshapedSurface, CUTOFF_GRID,
};
use spherization_core::Result;

use super::{table, DeckLabel, Outcome};
use crate::config::ExperimentConfig;
use crate::manifest::Check;

const SCALING_TOL: f64 = 1e-6;
const HOMOGENEOUS_TOL: f64 = 1e-6;
const TIME_CHANGE_TOL: f64 = 1e-9;
/// Rounding allowance when comparing sandwich components.
const ORDER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
struct ChordRow {
    n: u32,
    deck: String,
    action: f64,
    f_min: f64,
    f_max: f64,
    class: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct ScalingRow {
    chord: usize,
    deck: String,
    c: f64,
    residual: f64,
    relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
struct HomogeneousRow {
    sample: usize,
    f: f64,
    quadrature: f64,
    formula: f64,
    error: f64,
}

fn class_name(c: ActionClass) -> &'static str {
    match c {
        ActionClass::Inside => "inside",
        ActionClass::Outside => "outside",
        ActionClass::BoundaryAmbiguous => "boundary-ambiguous",
    }
}

fn unit(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

pub(super) fn action_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let torus = cfg.manifold().torus()?;
    let section = &cfg.action;
    let surface = StarshapedSurface::new(torus.clone(), cfg.profile.clone())?;
    let sandwich = SandwichedHamiltonians::new(
        surface.clone(),
        cfg.sandwich.eps,
        cfg.sandwich.safety,
        cfg.sandwich.sampling(),
    )?;
    let fine = cfg.integrator.with_max_step(section.max_step);
    let mut checks = Vec::new();

    // Scaling law on chords of the homogeneous Hamiltonian F.
    let h = HomogeneousHamiltonian { surface: surface.clone(), scale: 1.0 };
    let base_chords = find_fiber_chords(&torus, &h, &section.q0, &section.q1, 1.0, &cfg.chords, &fine, &cfg.newton)?;
    let used: Vec<_> = base_chords.iter().take(section.scaling_chords).collect();
    let scaling_rows: Vec<ScalingRow> = used
        .par_iter()
        .enumerate()
        .map(|(i, (deck, chord))| {
            let traj = integrate(&h, &chord.start, chord.duration, &fine)?;
            section
                .scaling_factors
                .iter()
                .map(|&c| {
                    let r = verify_scaling_law(&h, &traj, c, &fine)?;
                    Ok(ScalingRow {
                        chord: i,
                        deck: deck.label(),
                        c,
                        residual: r.residual,
                        relative_error: r.relative_error,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    checks.push(Check::new(
        "chords available for the scaling law",
        used.len().to_string(),
        format!(">= {}", section.scaling_chords),
        used.len() >= section.scaling_chords,
    ));
    let worst_scaling = scaling_rows.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    checks.push(Check::at_most("scaling law relative error", worst_scaling, SCALING_TOL));

    // Action classification of chords of nK.
    let mut chord_rows = Vec::new();
    for &n in &section.levels {
        let nk = sandwich.hamiltonian(SandwichComponent::K, n as f64);
        let found = find_fiber_chords(&torus, &nk, &section.q0, &section.q1, 1.0, &cfg.chords, &fine, &cfg.newton)?;
        let classified = found
            .par_iter()
            .map(|(deck, chord)| {
                let traj = integrate(&nk, &chord.start, chord.duration, &fine)?;
                let c = classify_chord_action(&traj, &sandwich, n)?;
                Ok(ChordRow {
                    n,
                    deck: deck.label(),
                    action: c.action,
                    f_min: c.f_min,
                    f_max: c.f_max,
                    class: class_name(c.class),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        chord_rows.extend(classified);
    }
    let decided = chord_rows.iter().filter(|r| r.class != "boundary-ambiguous").count();
    checks.push(Check::new(
        "classified chords of nK",
        format!("{decided} decided, {} ambiguous, 0 violations", chord_rows.len() - decided),
        "> 0 decided, no violations",
        decided > 0,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Homogeneous action formula on orbits of f∘F.
    let cutoff_h = sandwich.hamiltonian(SandwichComponent::CutoffF, 1.0);
    let homogeneous_inputs: Vec<(f64, _)> = (0..section.homogeneous_samples)
        .map(|_| {
            let q = torus.random_point(&mut rng);
            let u = unit(rng.gen_range(0.0..2.0 * PI));
            let f: f64 = rng.gen_range(0.0..2.0);
            (f, surface.point_on_sigma(&q, &u).scale_fiber(f.sqrt()))
        })
        .collect();
    let homogeneous_rows: Vec<HomogeneousRow> = homogeneous_inputs
        .par_iter()
        .enumerate()
        .map(|(sample, (f, x0))| {
            let traj = integrate(&cutoff_h, x0, 1.0, &fine)?;
            let quadrature = action_of_trajectory(&traj, &cutoff_h)?;
            let big_f = surface.f_value(x0);
            let (fv, fp) = sandwich.cutoff.eval(big_f);
            let formula = action_homogeneous(fp, fv, big_f);
            Ok(HomogeneousRow {
                sample,
                f: *f,
                quadrature,
                formula,
                error: (quadrature - formula).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_homogeneous = homogeneous_rows.iter().map(|r| r.error).fold(0.0, f64::max);
    checks.push(Check::at_most("homogeneous action formula error", worst_homogeneous, HOMOGENEOUS_TOL));

    // Time-change identity, including the exact cases s = 1 and s ≤ ε.
    let eps = sandwich.cutoff.eps();
    let mut worst_time_change = 0.0_f64;
    for i in 0..section.time_change_samples {
        let q = torus.random_point(&mut rng);
        let u = unit(rng.gen_range(0.0..2.0 * PI));
        let draw: f64 = rng.gen_range(0.0..1.5);
        let s = match i {
            0 => 1.0,
            1 => eps,
            2 => 0.5 * eps,
            _ => draw,
        };
        let x = surface.point_on_sigma(&q, &u);
        worst_time_change = worst_time_change.max(time_change_residual(&sandwich, &x, s));
    }
    checks.push(Check::at_most("time-change residual", worst_time_change, TIME_CHANGE_TOL));

    // Sandwich ordering and cutoff admissibility.
    let mut violations = 0usize;
    for _ in 0..section.sandwich_samples {
        let q = torus.random_point(&mut rng);
        let u = unit(rng.gen_range(0.0..2.0 * PI));
        let s: f64 = rng.gen_range(0.0..8.0);
        let x = surface.point_on_sigma(&q, &u).scale_fiber(s);
        let (gm, k, gp) = sandwich.sandwich_eval(&x);
        let slack = ORDER_SLACK * gp.abs().max(1.0);
        if gm > k + slack || k > gp + slack {
            violations += 1;
        }
    }
    checks.push(Check::new("G₋ ≤ K ≤ G₊ violations", violations.to_string(), "0", violations == 0));
    let (d_lo, d_hi, _) = sandwich.cutoff.derivative_bounds(CUTOFF_GRID);
    checks.push(Check::new(
        "f′ range on the verification grid",
        format!("[{d_lo:.6}, {d_hi:.6}]"),
        "within [0, 2]",
        d_lo >= 0.0 && d_hi <= 2.0,
    ));
    let sigma = sandwich.sigma();
    checks.push(Check::new(
        "ε² < 1/(2σ)",
        format!("{:.6e} vs {:.6e}", eps * eps, 1.0 / (2.0 * sigma)),
        "strict",
        eps * eps < 1.0 / (2.0 * sigma),
    ));

    let results = json!({
        "c": sandwich.calibration.c,
        "sigma": sigma,
        "eps": eps,
        "eps_halvings": sandwich.eps_halvings,
        "scaling_chords": used.len(),
        "max_scaling_relative_error": worst_scaling,
        "chords_of_nk": chord_rows.len(),
        "decided_chords": decided,
        "max_homogeneous_error": worst_homogeneous,
        "max_time_change_residual": worst_time_change,
        "sandwich_samples": section.sandwich_samples,
        "sandwich_violations": violations,
        "cutoff_derivative_range": [d_lo, d_hi],
    });
    Ok(Outcome {
        tables: vec![
            table("chords.csv", &chord_rows)?,
            table("scaling.csv", &scaling_rows)?,
            table("homogeneous.csv", &homogeneous_rows)?,
        ],
        results,
        checks,
    })
}

