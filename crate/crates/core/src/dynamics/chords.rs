//! Chord shooting: orbits that leave one fiber and arrive at a lift of
//! another after a fixed time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrator::{flow, IntegratorConfig};
use super::linalg::solve;
use super::Hamiltonian;
use crate::error::{LabError, Result};
use crate::geometry::{BasePoint, CoverGeometry};
use crate::phase::{norm, CotangentPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonConfig {
    /// Sup-norm tolerance on the endpoint mismatch.
    pub tol: f64,
    pub max_iter: u32,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 40,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord<const D: usize> {
    pub start: CotangentPoint<D>,
    pub end: CotangentPoint<D>,
    pub duration: f64,
    pub residual: f64,
    pub iterations: u32,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn mismatch<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    q0: &BasePoint<D>,
    p: &[f64; D],
    target: &BasePoint<D>,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<(CotangentPoint<D>, [f64; D])> {
    let end = flow(h, &CotangentPoint::new(*q0, *p), duration, cfg)?;
    let mut r = [0.0; D];
    for i in 0..D {
        r[i] = end.q[i] - target[i];
    }
    Ok((end, r))
}

/// Damped Newton on the initial covector so that the time-`duration` orbit
/// from `(q0, p)` ends over `target`.
pub fn shoot_chord<const D: usize, H: Hamiltonian<D> + ?Sized>(
    h: &H,
    q0: &BasePoint<D>,
    target: &BasePoint<D>,
    p_guess: &[f64; D],
    duration: f64,
    integ: &IntegratorConfig,
    newton: &NewtonConfig,
) -> Result<Chord<D>> {
    let mut p = *p_guess;
    let (mut end, mut r) = mismatch(h, q0, &p, target, duration, integ)?;
    let mut res = sup(&r);
    for iter in 0..=newton.max_iter {
        if res <= newton.tol {
            return Ok(Chord {
                start: CotangentPoint::new(*q0, p),
                end,
                duration,
                residual: res,
                iterations: iter,
            });
        }
        if iter == newton.max_iter {
            break;
        }
        let delta = newton.fd_step * norm(&p).max(1.0);
        let mut jac = [[0.0; D]; D];
        for j in 0..D {
            let (mut pp, mut pm) = (p, p);
            pp[j] += delta;
            pm[j] -= delta;
            let (_, rp) = mismatch(h, q0, &pp, target, duration, integ)?;
            let (_, rm) = mismatch(h, q0, &pm, target, duration, integ)?;
            for i in 0..D {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * delta);
            }
        }
        let mut rhs = r;
        rhs.iter_mut().for_each(|v| *v = -*v);
        let Some(step) = solve(jac, rhs) else {
            return Err(LabError::ChordResidual(res));
        };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let mut trial = p;
            for i in 0..D {
                trial[i] += lambda * step[i];
            }
            if let Ok((e, rt)) = mismatch(h, q0, &trial, target, duration, integ) {
                let rt_sup = sup(&rt);
                if rt_sup < res {
                    p = trial;
                    end = e;
                    r = rt;
                    res = rt_sup;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    Err(LabError::ChordResidual(res))
}

/// Seeding and deduplication for [`find_fiber_chords`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChordSearch {
    /// Deck elements within this box radius are tried as targets.
    pub deck_radius: i64,
    /// Seed covector lengths (orthonormal frame) along each direction.
    pub radii: Vec<f64>,
    /// Tilt angles (radians) away from the straight-line direction.
    pub tilts: Vec<f64>,
    /// Chords with equal deck and starting covectors within this sup
    /// distance are merged.
    pub dedup_tol: f64,
}

impl Default for ChordSearch {
    fn default() -> Self {
        Self {
            deck_radius: 1,
            radii: vec![0.25, 0.5, 1.0, 1.5, 2.0, 3.0],
            tilts: vec![0.0],
            dedup_tol: 1e-6,
        }
    }
}

/// An orthonormal basis with `w` first.
fn frame_from<const D: usize>(w: &[f64; D]) -> Vec<[f64; D]> {
    let mut basis: Vec<[f64; D]> = Vec::with_capacity(D);
    let mut candidates = vec![*w];
    for i in 0..D {
        let mut e = [0.0; D];
        e[i] = 1.0;
        candidates.push(e);
    }
    for mut v in candidates {
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for i in 0..D {
                v[i] -= d * b[i];
            }
        }
        let n = norm(&v);
        if n > 1e-8 && basis.len() < D {
            basis.push(v.map(|x| x / n));
        }
    }
    basis
}

/// Chords of `h` over time `duration` from the fiber over `q0` to the fibers
/// over the deck translates `g·q1` in a box, tagged by deck element.
#[allow(clippy::too_many_arguments)]
pub fn find_fiber_chords<Geo, H, const D: usize>(
    geometry: &Geo,
    h: &H,
    q0: &BasePoint<D>,
    q1: &BasePoint<D>,
    duration: f64,
    search: &ChordSearch,
    integ: &IntegratorConfig,
    newton: &NewtonConfig,
) -> Result<Vec<(Geo::Deck, Chord<D>)>>
where
    Geo: CoverGeometry<D>,
    Geo::Deck: PartialEq + Send + Sync,
    H: Hamiltonian<D> + ?Sized,
{
    if search.radii.is_empty() || search.tilts.is_empty() {
        return Err(LabError::InvalidInput("chord search needs radii and tilts".into()));
    }
    let s = geometry.coframe(q0);
    let mut seeds = Vec::new();
    for g in geometry.deck_box(search.deck_radius) {
        let target = geometry.apply_deck(&g, q1);
        // Straight-line direction expressed in the orthonormal coframe.
        let mut w = [0.0; D];
        for i in 0..D {
            w[i] = (target[i] - q0[i]) / s[i];
        }
        if norm(&w) < 1e-12 {
            continue;
        }
        let frame = frame_from(&w);
        for &rho in &search.radii {
            for &tilt in &search.tilts {
                let mut p = [0.0; D];
                for i in 0..D {
                    let mut u = tilt.cos() * frame[0][i];
                    if D > 1 {
                        u += tilt.sin() * frame[1][i];
                    }
                    p[i] = rho * u / s[i];
                }
                seeds.push((g, target, p));
            }
        }
    }
    let shot: Vec<_> = seeds
        .par_iter()
        .map(|(g, target, p)| {
            shoot_chord(h, q0, target, p, duration, integ, newton)
                .ok()
                .map(|c| (*g, c))
        })
        .collect();
    let mut found: Vec<(Geo::Deck, Chord<D>)> = Vec::new();
    for (g, c) in shot.into_iter().flatten() {
        let duplicate = found.iter().any(|(g2, c2)| {
            *g2 == g && sup(&std::array::from_fn::<f64, D, _>(|i| c.start.p[i] - c2.start.p[i])) <= search.dedup_tol
        });
        if !duplicate {
            found.push((g, c));
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Torus2;
    use crate::starshape::{HomogeneousHamiltonian, RadialProfile, StarshapedSurface};

    fn geodesic() -> HomogeneousHamiltonian<Torus2, 2> {
        HomogeneousHamiltonian {
            surface: StarshapedSurface::new(Torus2::standard(), RadialProfile::Round).unwrap(),
            scale: 0.5,
        }
    }

    #[test]
    fn shooting_recovers_straight_chord() {
        let chord = shoot_chord(
            &geodesic(),
            &[0.0, 0.0],
            &[1.3, -0.4],
            &[1.0, 0.0],
            1.0,
            &IntegratorConfig::default(),
            &NewtonConfig::default(),
        )
        .unwrap();
        assert!(chord.residual <= 1e-10);
        assert!((chord.start.p[0] - 1.3).abs() < 1e-8 && (chord.start.p[1] + 0.4).abs() < 1e-8);
    }

    #[test]
    fn every_deck_target_gets_one_geodesic_chord() {
        let chords = find_fiber_chords(
            &Torus2::standard(),
            &geodesic(),
            &[0.0, 0.0],
            &[0.3, 0.6],
            1.0,
            &ChordSearch::default(),
            &IntegratorConfig::default(),
            &NewtonConfig::default(),
        )
        .unwrap();
        assert_eq!(chords.len(), 9);
        for (g, c) in &chords {
            let d = [0.3 + g[0] as f64, 0.6 + g[1] as f64];
            assert!((c.start.p[0] - d[0]).abs() < 1e-8 && (c.start.p[1] - d[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn frame_is_orthonormal() {
        let f = frame_from(&[1.0, 2.0, -0.5]);
        assert_eq!(f.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = f[i].iter().zip(&f[j]).map(|(a, b)| a * b).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}
