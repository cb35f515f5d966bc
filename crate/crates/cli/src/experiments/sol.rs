use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use spherization_core::dynamics::{integrate, IntegratorConfig};
use spherization_core::geometry::{CoverGeometry, SolQuotient};
use spherization_core::sol_model::{
    entropy_closed_form, lyapunov_plus, momentum_inverse, momentum_map, p_plus, SolHamiltonian, SolLevel,
};
use spherization_core::{CotangentPoint, Result};

use super::{summary, table, Outcome};
use crate::config::{ExperimentConfig, SolSection};
use crate::manifest::Check;

const FIXED_POINT_TOL: f64 = 1e-3;
const SUBCRITICAL_CHI_MAX: f64 = 0.02;
/// Conservation tolerance per 100 time units.
const CONSERVATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
struct TrajectoryRow {
    k: f64,
    index: usize,
    kind: &'static str,
    q_x: f64,
    q_y: f64,
    q_z: f64,
    m_x: f64,
    m_y: f64,
    m_z: f64,
    chi: f64,
    energy_drift: f64,
    casimir_drift: f64,
    max_m_x: f64,
}

fn run_level(
    manifold: &SolQuotient,
    k: f64,
    section: &SolSection,
    seed: u64,
    integ: &IntegratorConfig,
) -> Result<Vec<TrajectoryRow>> {
    let level = SolLevel::new(k, manifold.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<(&'static str, CotangentPoint<3>)> = Vec::new();
    if section.fixed_point && entropy_closed_form(k) > 0.0 {
        if let Some(m) = p_plus(k) {
            let q = manifold.random_point(&mut rng);
            starts.push(("fixed-point", momentum_inverse(&q, &m)));
        }
    }
    for _ in 0..section.samples {
        starts.push(("random", level.sample_point(&mut rng)));
    }
    starts
        .par_iter()
        .enumerate()
        .map(|(index, (kind, x0))| {
            let traj = integrate(&SolHamiltonian, x0, section.horizon, integ)?;
            let chi = lyapunov_plus(&traj, section.burn_in)?.value;
            let m0 = momentum_map(x0);
            let c0 = m0.casimir_product();
            let (casimir_drift, max_m_x) = traj.states.iter().fold((0.0_f64, f64::NEG_INFINITY), |(d, mx), x| {
                let m = momentum_map(x);
                (d.max((m.casimir_product() - c0).abs()), mx.max(m.mx))
            });
            Ok(TrajectoryRow {
                k,
                index,
                kind,
                q_x: x0.q[0],
                q_y: x0.q[1],
                q_z: x0.q[2],
                m_x: m0.mx,
                m_y: m0.my,
                m_z: m0.mz,
                chi,
                energy_drift: traj.energy_drift,
                casimir_drift,
                max_m_x,
            })
        })
        .collect()
}

fn conservation_checks(rows: &[TrajectoryRow], horizon: f64) -> Vec<Check> {
    let per = (horizon / 100.0).max(1.0);
    let energy = rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max);
    let casimir = rows.iter().map(|r| r.casimir_drift).fold(0.0, f64::max);
    vec![
        Check::at_most("energy drift per 100 time units", energy / per, CONSERVATION_TOL),
        Check::at_most("|Δ(M_x M_y)| per 100 time units", casimir / per, CONSERVATION_TOL),
    ]
}

struct LevelSummary {
    fixed_point: Option<f64>,
    random_mean: Option<f64>,
    random_max: Option<f64>,
    max_m_x: f64,
}

fn summarize(rows: &[TrajectoryRow]) -> LevelSummary {
    let fixed_point = rows.iter().find(|r| r.kind == "fixed-point").map(|r| r.chi);
    let random: Vec<f64> = rows.iter().filter(|r| r.kind == "random").map(|r| r.chi).collect();
    let (random_mean, random_max) = if random.is_empty() {
        (None, None)
    } else {
        (
            Some(random.iter().sum::<f64>() / random.len() as f64),
            Some(random.iter().cloned().fold(0.0, f64::max)),
        )
    };
    let max_m_x = rows
        .iter()
        .filter(|r| r.kind == "random")
        .map(|r| r.max_m_x)
        .fold(f64::NEG_INFINITY, f64::max);
    LevelSummary {
        fixed_point,
        random_mean,
        random_max,
        max_m_x,
    }
}

fn level_checks(k: f64, s: &LevelSummary) -> Vec<Check> {
    let closed = entropy_closed_form(k);
    let mut checks = Vec::new();
    if let Some(chi) = s.fixed_point {
        checks.push(Check::at_most(
            format!("k = {k}: |fixed-point χ₊ − √(2k−1)|"),
            (chi - closed).abs(),
            FIXED_POINT_TOL,
        ));
    }
    if closed == 0.0 {
        if let Some(max) = s.random_max {
            checks.push(Check::at_most(format!("k = {k}: max χ₊ over random orbits"), max, SUBCRITICAL_CHI_MAX));
        }
        if k < 0.5 && s.max_m_x.is_finite() {
            checks.push(Check::new(
                format!("k = {k}: M_x < 0 along sampled orbits"),
                format!("{:.6e}", s.max_m_x),
                "< 0",
                s.max_m_x < 0.0,
            ));
        }
    }
    checks
}

pub(super) fn sol_entropy(cfg: &ExperimentConfig) -> Result<Outcome> {
    let manifold = cfg.manifold().sol()?;
    let k = cfg.sol.k;
    let rows = run_level(&manifold, k, &cfg.sol, cfg.seed, &cfg.integrator)?;
    let s = summarize(&rows);
    let mut checks = level_checks(k, &s);
    checks.extend(conservation_checks(&rows, cfg.sol.horizon));
    let results = json!({
        "k": k,
        "closed_form": entropy_closed_form(k),
        "fixed_point_chi": s.fixed_point,
        "random_mean_chi": s.random_mean,
        "random_max_chi": s.random_max,
        "max_energy_drift": rows.iter().map(|r| r.energy_drift).fold(0.0, f64::max),
        "max_casimir_drift": rows.iter().map(|r| r.casimir_drift).fold(0.0, f64::max),
        "trajectories": rows.len(),
    });
    Ok(Outcome {
        tables: vec![table("trajectories.csv", &rows)?],
        results,
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    k: f64,
    chi_fixed_point: Option<f64>,
    chi_mean: Option<f64>,
    chi_max: Option<f64>,
    closed_form: f64,
    /// Fixed-point estimate over the closed form, where the latter is positive.
    ratio: Option<f64>,
}

pub(super) fn sol_sweep(cfg: &ExperimentConfig) -> Result<Outcome> {
    let manifold = cfg.manifold().sol()?;
    let mut all_rows = Vec::new();
    let mut sweep = Vec::new();
    let mut checks = Vec::new();
    for (i, &k) in cfg.sol.k_values.iter().enumerate() {
        let rows = run_level(&manifold, k, &cfg.sol, cfg.seed.wrapping_add(i as u64), &cfg.integrator)?;
        let s = summarize(&rows);
        let closed = entropy_closed_form(k);
        checks.extend(level_checks(k, &s));
        sweep.push(SweepRow {
            k,
            chi_fixed_point: s.fixed_point,
            chi_mean: s.random_mean,
            chi_max: s.random_max,
            closed_form: closed,
            ratio: s.fixed_point.filter(|_| closed > 0.0).map(|chi| chi / closed),
        });
        all_rows.extend(rows);
    }
    checks.extend(conservation_checks(&all_rows, cfg.sol.horizon));
    let results = json!({
        "levels": summary(&sweep),
        "trajectories": all_rows.len(),
    });
    Ok(Outcome {
        tables: vec![table("sweep.csv", &sweep)?, table("trajectories.csv", &all_rows)?],
        results,
        checks,
    })
}
