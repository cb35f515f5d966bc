use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use spherization_core::dynamics::Hamiltonian;
use spherization_core::entropy::{
    self, fit_growth, mpp_estimate, GrowthFit, ProfileFiber, SolLevelFiber, StartFiber, Verdict,
};
use spherization_core::geometry::{BasePoint, CoverGeometry};
use spherization_core::sol_model::{SolHamiltonian, SolLevel};
use spherization_core::starshape::{HomogeneousHamiltonian, StarshapedSurface};
use spherization_core::Result;

use super::{summary, table, to_array, DeckLabel, Outcome};
use crate::config::{ExperimentConfig, ManifoldConfig};
use crate::manifest::Check;

/// Torus counts grow like the area of a disc.
const TORUS_SLOPE: f64 = 2.0;
const TORUS_SLOPE_TOL: f64 = 0.3;

#[derive(Debug, Clone, Serialize)]
struct ChordRow {
    pair: usize,
    index: usize,
    arrival_time: f64,
    deck: String,
    residual: f64,
    u_0: f64,
    u_1: f64,
    u_2: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct CountRow {
    pair: usize,
    t: f64,
    nu: usize,
    log_nu_over_t: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct PairSummary {
    pair: usize,
    q0: Vec<f64>,
    q1: Vec<f64>,
    chords: usize,
    diagnostics: entropy::CensusDiagnostics,
    fit: Option<GrowthFit>,
}

fn pick<const D: usize, G: CoverGeometry<D>>(
    geometry: &G,
    given: Option<&Vec<f64>>,
    rng: &mut ChaCha8Rng,
) -> BasePoint<D> {
    // Draw unconditionally so later pairs do not depend on the explicit one.
    let drawn = geometry.random_point(rng);
    given.map(|v| to_array::<D>(v)).unwrap_or(drawn)
}

fn run_pairs<Geo, H, F, MakeFiber, const D: usize>(
    cfg: &ExperimentConfig,
    geometry: &Geo,
    h: &H,
    make_fiber: MakeFiber,
) -> Result<(Vec<ChordRow>, Vec<CountRow>, Vec<PairSummary>)>
where
    Geo: CoverGeometry<D>,
    Geo::Deck: DeckLabel,
    H: Hamiltonian<D>,
    F: StartFiber<D>,
    MakeFiber: Fn(BasePoint<D>) -> F,
{
    let section = &cfg.census;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x243f_6a88_85a3_08d3);
    let mut chord_rows = Vec::new();
    let mut count_rows = Vec::new();
    let mut pairs = Vec::new();
    for pair in 0..section.pairs {
        let explicit = pair == 0;
        let q0 = pick(geometry, section.q0.as_ref().filter(|_| explicit), &mut rng);
        let q1 = pick(geometry, section.q1.as_ref().filter(|_| explicit), &mut rng);
        let census = entropy::chord_census(
            geometry,
            h,
            &make_fiber(q0),
            &q1,
            &section.core(cfg.seed.wrapping_add(pair as u64)),
            &cfg.integrator,
        )?;
        for (index, r) in census.records.iter().enumerate() {
            chord_rows.push(ChordRow {
                pair,
                index,
                arrival_time: r.arrival_time,
                deck: r.deck.label(),
                residual: r.residual,
                u_0: r.direction[0],
                u_1: r.direction[1],
                u_2: r.direction.get(2).copied(),
            });
        }
        for &(t, nu) in &census.nu_series {
            count_rows.push(CountRow {
                pair,
                t,
                nu,
                log_nu_over_t: (nu > 0).then(|| (nu as f64).ln() / t),
            });
        }
        let (x, y): (Vec<f64>, Vec<f64>) = census
            .nu_series
            .iter()
            .filter(|(t, nu)| *t >= section.fit_start && *nu > 0)
            .map(|(t, nu)| (*t, *nu as f64))
            .unzip();
        let fit = if x.len() >= 3 { Some(fit_growth(&x, &y, x.len())?) } else { None };
        pairs.push(PairSummary {
            pair,
            q0: census.q0.to_vec(),
            q1: census.q1.to_vec(),
            chords: census.records.len(),
            diagnostics: census.diagnostics,
            fit,
        });
    }
    Ok((chord_rows, count_rows, pairs))
}

/// Torus: polynomial verdict with log-log slope near two. Sol: `(1/T) log ν_T`
/// positive and non-decreasing from `fit_start` on.
fn threshold_checks(torus: bool, counts: &[CountRow], pairs: &[PairSummary], fit_start: f64) -> Vec<Check> {
    let mut checks = Vec::new();
    for p in pairs {
        if torus {
            match &p.fit {
                Some(fit) => {
                    checks.push(Check::new(
                        format!("pair {}: verdict", p.pair),
                        fit.verdict.as_str(),
                        Verdict::Polynomial.as_str(),
                        fit.verdict == Verdict::Polynomial,
                    ));
                    checks.push(Check::new(
                        format!("pair {}: log-log slope", p.pair),
                        format!("{:.4}", fit.loglog_slope),
                        format!("{TORUS_SLOPE} ± {TORUS_SLOPE_TOL}"),
                        (fit.loglog_slope - TORUS_SLOPE).abs() <= TORUS_SLOPE_TOL,
                    ));
                }
                None => checks.push(Check::new(format!("pair {}: fit", p.pair), "too few counts", ">= 3 points", false)),
            }
        } else {
            let rates: Vec<f64> = counts
                .iter()
                .filter(|c| c.pair == p.pair && c.t >= fit_start)
                .map(|c| c.log_nu_over_t.unwrap_or(0.0))
                .collect();
            let positive = !rates.is_empty() && rates.iter().all(|r| *r > 0.0);
            let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
            let shown: Vec<String> = rates.iter().map(|r| format!("{r:.4}")).collect();
            checks.push(Check::new(
                format!("pair {}: (1/T) log ν_T", p.pair),
                format!("[{}]", shown.join(", ")),
                "positive and non-decreasing",
                positive && monotone,
            ));
        }
    }
    checks
}

pub(super) fn chord_census(cfg: &ExperimentConfig) -> Result<Outcome> {
    let manifold = cfg.manifold();
    let (chords, counts, pairs) = match &manifold {
        ManifoldConfig::Torus { .. } => {
            let torus = manifold.torus()?;
            let surface = StarshapedSurface::new(torus.clone(), cfg.profile.clone())?;
            let h = HomogeneousHamiltonian { surface: surface.clone(), scale: 0.5 };
            run_pairs(cfg, &torus, &h, |q0| ProfileFiber { surface: surface.clone(), q0 })?
        }
        ManifoldConfig::Sol { .. } => {
            let sol = manifold.sol()?;
            let level = SolLevel::new(cfg.sol.k, sol.clone())?;
            run_pairs(cfg, &sol, &SolHamiltonian, |q0| SolLevelFiber { level: level.clone(), q0 })?
        }
    };
    let torus = manifold.dimension() == 2;
    let checks = threshold_checks(torus, &counts, &pairs, cfg.census.fit_start);
    Ok(Outcome {
        tables: vec![table("chords.csv", &chords)?, table("counts.csv", &counts)?],
        results: json!({ "pairs": summary(&pairs) }),
        checks,
    })
}

#[derive(Debug, Clone, Serialize)]
struct MppRow {
    t: f64,
    mean_nu: f64,
}

pub(super) fn mpp(cfg: &ExperimentConfig) -> Result<Outcome> {
    let manifold = cfg.manifold();
    let census_cfg = cfg.census.core(cfg.seed);
    let estimate = match &manifold {
        ManifoldConfig::Torus { .. } => {
            let torus = manifold.torus()?;
            let surface = StarshapedSurface::new(torus.clone(), cfg.profile.clone())?;
            let h = HomogeneousHamiltonian { surface: surface.clone(), scale: 0.5 };
            mpp_estimate(
                &torus,
                &h,
                |q0| ProfileFiber { surface: surface.clone(), q0 },
                cfg.mpp.grid,
                &census_cfg,
                &cfg.integrator,
                cfg.mpp.fit_window,
            )?
        }
        ManifoldConfig::Sol { .. } => {
            let sol = manifold.sol()?;
            let level = SolLevel::new(cfg.sol.k, sol.clone())?;
            mpp_estimate(
                &sol,
                &SolHamiltonian,
                |q0| SolLevelFiber { level: level.clone(), q0 },
                cfg.mpp.grid,
                &census_cfg,
                &cfg.integrator,
                cfg.mpp.fit_window,
            )?
        }
    };
    let rows: Vec<MppRow> = estimate.series.iter().map(|&(t, mean_nu)| MppRow { t, mean_nu }).collect();
    let expected = if manifold.dimension() == 2 { Verdict::Polynomial } else { Verdict::Exponential };
    let observed = estimate.fit.as_ref().map(|f| f.verdict.as_str()).unwrap_or("no fit");
    let checks = vec![Check::new(
        "mean count growth verdict",
        observed,
        expected.as_str(),
        estimate.fit.as_ref().is_some_and(|f| f.verdict == expected),
    )];
    Ok(Outcome {
        tables: vec![table("mpp.csv", &rows)?],
        results: summary(&estimate),
        checks,
    })
}
