//! Counting chords from a fiber sphere `Σ_{q0}` to the lifts of a second
//! fiber, and the averaged count over pairs of base points.
//!
//! The sphere is meshed and every vertex orbit is sampled up to the horizon.
//! Each simplex swept over one sample interval is a prism in the universal
//! cover; a lift of the target point inside one of its (linearly
//! interpolated) sub-simplices yields a candidate `(u, t)`, which damped
//! Newton then refines to an exact arrival.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_growth, GrowthFit};
use super::mesh::{FiberMesh, StartFiber};
use crate::dynamics::linalg::solve;
use crate::dynamics::{flow, integrate, Hamiltonian, IntegratorConfig};
use crate::error::{LabError, Result};
use crate::geometry::{BasePoint, CoverGeometry};
use crate::phase::norm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub horizon: f64,
    /// Minimum number of vertices of the initial sphere mesh.
    pub resolution: usize,
    /// Spacing of the stored orbit samples.
    pub sample_dt: f64,
    /// Largest metric distance between neighbouring vertex images at any
    /// sample time.
    pub refine_threshold: f64,
    pub vertex_budget: usize,
    /// Barycentric slack when testing whether a target lies in a cell.
    pub cell_slack: f64,
    /// Metric residual at which refinement stops.
    pub newton_tol: f64,
    pub newton_max_iter: u32,
    /// Chords closer than this in `(u, t/T)` with equal deck are merged.
    pub dedup_radius: f64,
    /// Magnitude of the seeded perturbation of the target point.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self {
            horizon: 10.0,
            resolution: 64,
            sample_dt: 0.05,
            refine_threshold: 0.2,
            vertex_budget: 50_000,
            cell_slack: 0.05,
            newton_tol: 1e-10,
            newton_max_iter: 40,
            dedup_radius: 1e-4,
            jitter: 1e-3,
            seed: 0,
        }
    }
}

impl CensusConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(LabError::InvalidInput(format!("census horizon must be positive, got {}", self.horizon)));
        }
        if self.resolution < 64 {
            return Err(LabError::InvalidInput("census resolution must be at least 64".into()));
        }
        let positive = [self.sample_dt, self.refine_threshold, self.newton_tol, self.dedup_radius];
        if positive.iter().any(|v| !(*v > 0.0)) || !(self.cell_slack >= 0.0) || !(self.jitter >= 0.0) {
            return Err(LabError::InvalidInput("census tolerances must be positive".into()));
        }
        if self.vertex_budget <= self.resolution {
            return Err(LabError::InvalidInput("vertex budget must exceed the resolution".into()));
        }
        Ok(())
    }
}

/// One chord: start direction on the sphere, arrival time and the deck
/// element `g` such that the orbit ends over `g·q1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordRecord<const D: usize, K> {
    pub direction: [f64; D],
    pub arrival_time: f64,
    pub deck: K,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CensusDiagnostics {
    pub vertices: usize,
    pub simplices: usize,
    pub candidates: usize,
    pub newton_failures: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChordCensus<const D: usize, K> {
    pub q0: BasePoint<D>,
    /// The target as requested and after jitter.
    pub q1_requested: BasePoint<D>,
    pub q1: BasePoint<D>,
    pub horizon: f64,
    /// Sorted by arrival time.
    pub records: Vec<ChordRecord<D, K>>,
    /// `(t, ν_t)` at `t = 1, 2, …, ⌊T⌋`.
    pub nu_series: Vec<(f64, usize)>,
    pub diagnostics: CensusDiagnostics,
}

impl<const D: usize, K> ChordCensus<D, K> {
    /// Chords arriving no later than `t`.
    pub fn count_until(&self, t: f64) -> usize {
        self.records.partition_point(|r| r.arrival_time <= t)
    }
}

/// The target after a seeded perturbation of size `jitter`.
pub fn jitter_target<const D: usize>(q1: &BasePoint<D>, jitter: f64, seed: u64) -> BasePoint<D> {
    if jitter == 0.0 {
        return *q1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a09_e667_f3bc_c908);
    let dir = loop {
        let v: [f64; D] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            break v.map(|c| c / n);
        }
    };
    std::array::from_fn(|i| q1[i] + jitter * dir[i])
}

fn base_distance<G: CoverGeometry<D>, const D: usize>(geometry: &G, a: &[f64; D], b: &[f64; D]) -> f64 {
    let mid: [f64; D] = std::array::from_fn(|i| 0.5 * (a[i] + b[i]));
    let s = geometry.coframe(&mid);
    (0..D).map(|i| ((b[i] - a[i]) / s[i]).powi(2)).sum::<f64>().sqrt()
}

/// Orthonormal basis of the tangent space of the sphere at `u`.
fn tangent_basis<const D: usize>(u: &[f64; D]) -> Vec<[f64; D]> {
    let mut basis: Vec<[f64; D]> = vec![*u];
    for i in 0..D {
        let mut v = [0.0; D];
        v[i] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for k in 0..D {
                v[k] -= d * b[k];
            }
        }
        let n = norm(&v);
        if n > 1e-6 && basis.len() < D {
            basis.push(v.map(|x| x / n));
        }
    }
    basis.remove(0);
    basis
}

struct Candidate<const D: usize, K> {
    u: [f64; D],
    t: f64,
    deck: K,
    target: [f64; D],
}

/// Damped Newton on `(tangent offset of u, t)` for `π(φ^t(start(u))) = target`.
#[allow(clippy::too_many_arguments)]
fn refine_candidate<Geo, H, F, const D: usize>(
    geometry: &Geo,
    h: &H,
    fiber: &F,
    u0: &[f64; D],
    t0: f64,
    target: &[f64; D],
    cfg: &CensusConfig,
    integ: &IntegratorConfig,
) -> Option<([f64; D], f64, f64)>
where
    Geo: CoverGeometry<D>,
    H: Hamiltonian<D>,
    F: StartFiber<D>,
{
    let basis = tangent_basis(u0);
    let scale = geometry.coframe(target);
    let point = |a: &[f64; D]| -> [f64; D] {
        let mut u = *u0;
        for (j, e) in basis.iter().enumerate() {
            for k in 0..D {
                u[k] += a[j] * e[k];
            }
        }
        let n = norm(&u);
        u.map(|x| x / n)
    };
    let residual = |a: &[f64; D], t: f64| -> Option<([f64; D], [f64; D])> {
        let x0 = fiber.start(&point(a));
        let end = if t > 0.0 { flow(h, &x0, t, integ).ok()? } else { x0 };
        let r = std::array::from_fn(|i| (end.q[i] - target[i]) / scale[i]);
        let qdot = crate::dynamics::hamiltonian_vector_field(h, &end).dq;
        Some((r, std::array::from_fn(|i| qdot[i] / scale[i])))
    };
    let sup = |r: &[f64; D]| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut a = [0.0; D];
    let mut t = t0.max(1e-6);
    let (mut r, mut rdot) = residual(&a, t)?;
    let mut res = sup(&r);
    let fd = 1e-6;
    for _ in 0..cfg.newton_max_iter {
        if res <= cfg.newton_tol {
            break;
        }
        let mut jac = [[0.0; D]; D];
        for j in 0..D - 1 {
            let (mut ap, mut am) = (a, a);
            ap[j] += fd;
            am[j] -= fd;
            let (rp, _) = residual(&ap, t)?;
            let (rm, _) = residual(&am, t)?;
            for i in 0..D {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * fd);
            }
        }
        for i in 0..D {
            jac[i][D - 1] = rdot[i];
        }
        let step = solve(jac, r.map(|v| -v))?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut a_try = a;
            for j in 0..D - 1 {
                a_try[j] += lambda * step[j];
            }
            let t_try = t + lambda * step[D - 1];
            if t_try > 0.0 {
                if let Some((r_try, rdot_try)) = residual(&a_try, t_try) {
                    let res_try = sup(&r_try);
                    if res_try < res {
                        a = a_try;
                        t = t_try;
                        r = r_try;
                        rdot = rdot_try;
                        res = res_try;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (res <= cfg.newton_tol).then(|| (point(&a), t, res))
}

/// Enumerates chords from `Σ_{q0}` (the fiber's base point) to the lifts of
/// the jittered `q1` with arrival time in `(0, T]`.
pub fn chord_census<Geo, H, F, const D: usize>(
    geometry: &Geo,
    h: &H,
    fiber: &F,
    q1: &BasePoint<D>,
    cfg: &CensusConfig,
    integ: &IntegratorConfig,
) -> Result<ChordCensus<D, Geo::Deck>>
where
    Geo: CoverGeometry<D>,
    H: Hamiltonian<D>,
    F: StartFiber<D>,
{
    cfg.validate()?;
    let horizon = cfg.horizon;
    let q0 = fiber.base_point();
    let q1_used = jitter_target(q1, cfg.jitter, cfg.seed);
    let (q1_red, g1) = geometry.reduce(&q1_used);
    let g1_inv = geometry.inverse_deck(&g1);
    let neighbors: Vec<(Geo::Deck, [f64; D])> = geometry
        .neighbor_decks()
        .into_iter()
        .map(|h| {
            let p = geometry.apply_deck(&h, &q1_red);
            (h, p)
        })
        .collect();
    let sample_cfg = integ.with_max_step(cfg.sample_dt.min(integ.max_step));

    let mut mesh = FiberMesh::<D>::sphere(cfg.resolution)?;
    let orbit = |u: &[f64; D]| -> Result<Vec<[f64; D]>> {
        let traj = integrate(h, &fiber.start(u), horizon, &sample_cfg)?;
        Ok(traj.states.iter().map(|x| x.q).collect())
    };
    let mut samples: Vec<Vec<[f64; D]>> = mesh.params.par_iter().map(orbit).collect::<Result<_>>()?;
    let steps = samples[0].len() - 1;
    let dt = horizon / steps as f64;

    loop {
        let long: HashSet<(usize, usize)> = mesh
            .edges()
            .par_iter()
            .filter(|(a, b)| {
                samples[*a]
                    .iter()
                    .zip(&samples[*b])
                    .any(|(qa, qb)| base_distance(geometry, qa, qb) > cfg.refine_threshold)
            })
            .copied()
            .collect();
        if long.is_empty() {
            break;
        }
        if mesh.params.len() + long.len() > cfg.vertex_budget {
            return Err(LabError::BudgetExceeded(format!(
                "chord census needs more than {} vertices at horizon {horizon}",
                cfg.vertex_budget
            )));
        }
        let new = mesh.refine_marked(&long);
        let fresh: Vec<Vec<[f64; D]>> = new.par_iter().map(|i| orbit(&mesh.params[*i])).collect::<Result<_>>()?;
        samples.extend(fresh);
    }

    // Sub-simplices of a prism, as (vertex slot, layer) pairs.
    let pieces: Vec<Vec<(usize, usize)>> = match D {
        2 => vec![vec![(0, 0), (1, 0), (1, 1)], vec![(0, 0), (1, 1), (0, 1)]],
        _ => vec![
            vec![(0, 0), (1, 0), (2, 0), (0, 1)],
            vec![(1, 0), (2, 0), (0, 1), (1, 1)],
            vec![(2, 0), (0, 1), (1, 1), (2, 1)],
        ],
    };
    let candidates: Vec<Candidate<D, Geo::Deck>> = mesh
        .simplices
        .par_iter()
        .flat_map_iter(|s| {
            let mut found = Vec::new();
            for k in 0..steps {
                let (_, g) = geometry.reduce(&samples[s[0]][k]);
                let g_inv = geometry.inverse_deck(&g);
                let corner = |slot: usize, layer: usize| geometry.apply_deck(&g_inv, &samples[s[slot]][k + layer]);
                let mut lo = [f64::INFINITY; D];
                let mut hi = [f64::NEG_INFINITY; D];
                let mut local = Vec::with_capacity(2 * D);
                for slot in 0..D {
                    for layer in 0..2 {
                        let c = corner(slot, layer);
                        for i in 0..D {
                            lo[i] = lo[i].min(c[i]);
                            hi[i] = hi[i].max(c[i]);
                        }
                        local.push(((slot, layer), c));
                    }
                }
                let lookup = |key: (usize, usize)| local.iter().find(|(k2, _)| *k2 == key).map(|(_, c)| *c).unwrap();
                for (hdeck, lift) in &neighbors {
                    let inside = (0..D).all(|i| {
                        let pad = cfg.cell_slack * (hi[i] - lo[i]) + 1e-12;
                        lift[i] >= lo[i] - pad && lift[i] <= hi[i] + pad
                    });
                    if !inside {
                        continue;
                    }
                    for piece in &pieces {
                        let c0 = lookup(piece[0]);
                        let mut m = [[0.0; D]; D];
                        for j in 0..D {
                            let cj = lookup(piece[j + 1]);
                            for i in 0..D {
                                m[i][j] = cj[i] - c0[i];
                            }
                        }
                        let rhs = std::array::from_fn(|i| lift[i] - c0[i]);
                        let Some(lam) = solve(m, rhs) else { continue };
                        let lam0 = 1.0 - lam.iter().sum::<f64>();
                        if lam0 < -cfg.cell_slack || lam.iter().any(|l| *l < -cfg.cell_slack) {
                            continue;
                        }
                        let weights: Vec<f64> = std::iter::once(lam0).chain(lam.iter().copied()).collect();
                        let mut u = [0.0; D];
                        let mut t = 0.0;
                        for (w, (slot, layer)) in weights.iter().zip(piece) {
                            let p = mesh.params[s[*slot]];
                            for i in 0..D {
                                u[i] += w * p[i];
                            }
                            t += w * (k + layer) as f64 * dt;
                        }
                        let n = norm(&u);
                        if n < 1e-9 {
                            continue;
                        }
                        let deck = geometry.compose(&g, hdeck);
                        found.push(Candidate {
                            u: u.map(|x| x / n),
                            t: t.clamp(0.0, horizon),
                            deck,
                            target: geometry.apply_deck(&deck, &q1_red),
                        });
                        break;
                    }
                }
            }
            found
        })
        .collect();

    let refined: Vec<Option<ChordRecord<D, Geo::Deck>>> = candidates
        .par_iter()
        .map(|c| {
            refine_candidate(geometry, h, fiber, &c.u, c.t, &c.target, cfg, integ).and_then(|(u, t, res)| {
                (t > 0.0 && t <= horizon * (1.0 + 1e-12)).then(|| ChordRecord {
                    direction: u,
                    arrival_time: t,
                    deck: geometry.compose(&c.deck, &g1_inv),
                    residual: res,
                })
            })
        })
        .collect();
    let newton_failures = refined.iter().filter(|r| r.is_none()).count();
    let mut found: Vec<ChordRecord<D, Geo::Deck>> = refined.into_iter().flatten().collect();
    found.sort_by(|a, b| a.deck.cmp(&b.deck).then(a.arrival_time.total_cmp(&b.arrival_time)));
    let mut records: Vec<ChordRecord<D, Geo::Deck>> = Vec::with_capacity(found.len());
    let mut group_start = 0;
    for r in found {
        if records.last().is_none_or(|last| last.deck != r.deck) {
            group_start = records.len();
        }
        let duplicate = records[group_start..].iter().rev().any(|kept| {
            (r.arrival_time - kept.arrival_time).abs() <= cfg.dedup_radius * horizon
                && (0..D).all(|i| (r.direction[i] - kept.direction[i]).abs() <= cfg.dedup_radius)
        });
        if !duplicate {
            records.push(r);
        }
    }
    records.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time).then(a.deck.cmp(&b.deck)));
    let duplicates = candidates.len() - newton_failures - records.len();
    let mut census = ChordCensus {
        q0,
        q1_requested: *q1,
        q1: q1_used,
        horizon,
        records,
        nu_series: Vec::new(),
        diagnostics: CensusDiagnostics {
            vertices: mesh.params.len(),
            simplices: mesh.simplices.len(),
            candidates: candidates.len(),
            newton_failures,
            duplicates,
        },
    };
    census.nu_series = (1..=horizon.floor() as usize)
        .map(|t| (t as f64, census.count_until(t as f64)))
        .collect();
    Ok(census)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MppEstimate {
    /// `(t, mean ν_t)` over all sampled pairs.
    pub series: Vec<(f64, f64)>,
    pub pairs: usize,
    pub fit: Option<GrowthFit>,
}

/// Averages `ν_t(q, q′)` over `grid × grid` pairs of uniformly sampled base
/// points. Both model manifolds have constant Riemannian density in the
/// fundamental-domain coordinates, so the pairs carry equal weight.
pub fn mpp_estimate<Geo, H, F, MakeFiber, const D: usize>(
    geometry: &Geo,
    h: &H,
    make_fiber: MakeFiber,
    grid: usize,
    cfg: &CensusConfig,
    integ: &IntegratorConfig,
    fit_window: usize,
) -> Result<MppEstimate>
where
    Geo: CoverGeometry<D>,
    H: Hamiltonian<D>,
    F: StartFiber<D>,
    MakeFiber: Fn(BasePoint<D>) -> F,
{
    if grid == 0 {
        return Err(LabError::InvalidInput("grid must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sources: Vec<BasePoint<D>> = (0..grid).map(|_| geometry.random_point(&mut rng)).collect();
    let targets: Vec<BasePoint<D>> = (0..grid).map(|_| geometry.random_point(&mut rng)).collect();
    let mut totals: Vec<f64> = Vec::new();
    let mut pairs = 0;
    for (i, q) in sources.iter().enumerate() {
        let fiber = make_fiber(*q);
        for (j, q1) in targets.iter().enumerate() {
            let pair_cfg = CensusConfig {
                seed: cfg.seed.wrapping_add((i * grid + j) as u64),
                ..*cfg
            };
            let census = chord_census(geometry, h, &fiber, q1, &pair_cfg, integ)?;
            if totals.is_empty() {
                totals = vec![0.0; census.nu_series.len()];
            }
            for (acc, (_, nu)) in totals.iter_mut().zip(&census.nu_series) {
                *acc += *nu as f64;
            }
            pairs += 1;
        }
    }
    let series: Vec<(f64, f64)> = totals
        .iter()
        .enumerate()
        .map(|(k, s)| ((k + 1) as f64, s / pairs as f64))
        .collect();
    let positive: Vec<(f64, f64)> = series.iter().copied().filter(|(_, v)| *v > 0.0).collect();
    let window = fit_window.min(positive.len());
    let fit = if window >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        Some(fit_growth(&x, &y, window)?)
    } else {
        None
    };
    Ok(MppEstimate { series, pairs, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::mesh::ProfileFiber;
    use crate::geometry::{fiber_distance, Torus2, DEFAULT_DECK_BUDGET};
    use crate::starshape::{HomogeneousHamiltonian, RadialProfile, StarshapedSurface};

    fn round() -> StarshapedSurface<Torus2, 2> {
        StarshapedSurface::new(Torus2::standard(), RadialProfile::Round).unwrap()
    }

    /// Lattice translates `v` with `|q1 − q0 + v| ≤ t`.
    fn lattice_count(q0: &[f64; 2], q1: &[f64; 2], t: f64) -> usize {
        let r = t.ceil() as i64 + 2;
        let mut n = 0;
        for i in -r..=r {
            for j in -r..=r {
                if (q1[0] - q0[0] + i as f64).hypot(q1[1] - q0[1] + j as f64) <= t {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn torus_census_matches_lattice_count() {
        let q0 = [0.0, 0.0];
        let fiber = ProfileFiber { surface: round(), q0 };
        let h = HomogeneousHamiltonian { surface: round(), scale: 0.5 };
        let cfg = CensusConfig { horizon: 2.5, ..Default::default() };
        let census = chord_census(&Torus2::standard(), &h, &fiber, &[0.5, 0.5], &cfg, &IntegratorConfig::default()).unwrap();
        assert_eq!(census.records.len(), lattice_count(&q0, &census.q1, 2.5));
        assert!((census.q1[0] - 0.5).hypot(census.q1[1] - 0.5) <= 1e-3 + 1e-15);
        for r in &census.records {
            assert!(r.residual <= 1e-8);
            let d = [census.q1[0] + r.deck[0] as f64, census.q1[1] + r.deck[1] as f64];
            assert!((r.arrival_time - d[0].hypot(d[1])).abs() < 1e-7);
        }
        let counts: Vec<usize> = census.nu_series.iter().map(|(_, n)| *n).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn no_chords_before_fiber_distance() {
        let q0 = [0.0, 0.0];
        let fiber = ProfileFiber { surface: round(), q0 };
        let h = HomogeneousHamiltonian { surface: round(), scale: 0.5 };
        let q1 = [0.45, 0.4];
        let d = fiber_distance(&Torus2::standard(), &q0, &q1, 2, DEFAULT_DECK_BUDGET).unwrap();
        let cfg = CensusConfig { horizon: d - 0.01, ..Default::default() };
        let census = chord_census(&Torus2::standard(), &h, &fiber, &q1, &cfg, &IntegratorConfig::default()).unwrap();
        assert!(census.records.is_empty());
    }

    #[test]
    fn single_pair_mpp_equals_census_fit() {
        let h = HomogeneousHamiltonian { surface: round(), scale: 0.5 };
        let cfg = CensusConfig { horizon: 8.0, seed: 5, ..Default::default() };
        let integ = IntegratorConfig::default();
        let mpp = mpp_estimate(
            &Torus2::standard(),
            &h,
            |q| ProfileFiber { surface: round(), q0: q },
            1,
            &cfg,
            &integ,
            6,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = Torus2::standard().random_point(&mut rng);
        let q1 = Torus2::standard().random_point(&mut rng);
        let census = chord_census(
            &Torus2::standard(),
            &h,
            &ProfileFiber { surface: round(), q0: q },
            &q1,
            &cfg,
            &integ,
        )
        .unwrap();
        let direct: Vec<(f64, f64)> = census.nu_series.iter().map(|(t, n)| (*t, *n as f64)).collect();
        assert_eq!(mpp.series, direct);
    }

    #[test]
    fn jitter_is_seeded_and_bounded() {
        let a = jitter_target(&[0.5, 0.5], 1e-3, 7);
        assert_eq!(a, jitter_target(&[0.5, 0.5], 1e-3, 7));
        assert_ne!(a, jitter_target(&[0.5, 0.5], 1e-3, 8));
        assert!(((a[0] - 0.5).hypot(a[1] - 0.5) - 1e-3).abs() < 1e-15);
        assert_eq!(jitter_target(&[0.5, 0.5], 0.0, 7), [0.5, 0.5]);
    }
}
