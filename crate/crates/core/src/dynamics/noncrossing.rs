//! Numerical form of the non-crossing property for the homotopy `G_s` on the
//! flat torus: the rescaled window `a(s)` never meets the action spectrum of
//! `nG_s`.
//!
//! `G_s` depends on `p` only through `r = |p|` in the rescaled metric, so every
//! chord of `nG_s` over unit time has constant `p` and displacement
//! `n ψ(r) p/|p|` with `ψ = dG_s/dr · √c`. Chords are therefore found by
//! solving `n |ψ(r)| = L` for each lattice displacement length `L`, piece by
//! piece on the monotone parts of `ψ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::action::action_of_trajectory;
use super::integrator::{integrate, IntegratorConfig};
use crate::error::{LabError, Result};
use crate::geometry::{CoverGeometry, Torus2};
use crate::phase::CotangentPoint;
use crate::starshape::{SandwichComponent, SandwichedHamiltonians};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonCrossingConfig {
    pub levels: Vec<u32>,
    pub s_points: usize,
    /// Scan cap on the rescaled `|p|`; beyond 4 the homotopy equals `σG`.
    pub r_cap: f64,
    pub scan_points: usize,
    /// Required separation between `a(s)` and every chord action.
    pub band: f64,
    pub q0: [f64; 2],
    pub q1: [f64; 2],
    /// Chords per `(n, s)` re-checked by integration and quadrature.
    pub verify_per_row: usize,
}

impl Default for NonCrossingConfig {
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 3],
            s_points: 32,
            r_cap: 4.5,
            scan_points: 20_000,
            band: 1e-4,
            q0: [0.0, 0.0],
            q1: [0.311, 0.173],
            verify_per_row: 2,
        }
    }
}

/// One `(n, s)` row of the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonCrossingLevel {
    pub n: u32,
    pub s: f64,
    pub a: f64,
    pub a_s: f64,
    pub chords: usize,
    /// `min |A − a(s)|` over the chords found (infinite if none).
    pub min_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonCrossingReport {
    pub rows: Vec<NonCrossingLevel>,
    /// `(n, a, half-width of the gap of S(nG) around a)`.
    pub windows: Vec<(u32, f64, f64)>,
    pub min_distance: f64,
    pub band: f64,
    pub passed: bool,
    pub verified_chords: usize,
    pub max_endpoint_error: f64,
    pub max_action_error: f64,
}

/// A chord of `nG_s`: initial covector and its exact action.
#[derive(Debug, Clone, Copy)]
struct RadialChord {
    p: [f64; 2],
    displacement: [f64; 2],
    action: f64,
}

/// Lengths `|q1 − q0 + v|` over lattice vectors `v`, up to `max_len`.
fn lattice_displacements(torus: &Torus2, q0: &[f64; 2], q1: &[f64; 2], max_len: f64) -> Vec<[f64; 2]> {
    let b = torus.basis();
    // Smallest singular value of the basis bounds |B m| from below.
    let (a11, a12, a21, a22) = (b[0][0], b[0][1], b[1][0], b[1][1]);
    let fro = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
    let det = (a11 * a22 - a12 * a21).abs();
    let smin = ((fro - (fro * fro - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
    let w = [q1[0] - q0[0], q1[1] - q0[1]];
    let radius = ((max_len + w[0].hypot(w[1])) / smin).ceil() as i64 + 1;
    torus
        .deck_box(radius)
        .iter()
        .map(|m| {
            let t = torus.apply_deck(m, q1);
            [t[0] - q0[0], t[1] - q0[1]]
        })
        .filter(|d| {
            let l = d[0].hypot(d[1]);
            l > 1e-12 && l <= max_len
        })
        .collect()
}

/// Values `a ∈ (n, n+1)` at the midpoint of the widest gap of
/// `S(nG) = {c L²/(2n)}`, with the gap half-width.
fn choose_window(c: f64, n: u32, lengths: &[f64]) -> (f64, f64) {
    let nf = n as f64;
    let mut points: Vec<f64> = lengths
        .iter()
        .map(|l| c * l * l / (2.0 * nf))
        .filter(|a| *a > nf && *a < nf + 1.0)
        .collect();
    points.push(nf);
    points.push(nf + 1.0);
    points.sort_by(f64::total_cmp);
    let (lo, hi) = points
        .windows(2)
        .map(|w| (w[0], w[1]))
        .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
        .expect("at least two points");
    (0.5 * (lo + hi), 0.5 * (hi - lo))
}

struct RadialScan<'a> {
    sandwich: &'a SandwichedHamiltonians<Torus2, 2>,
    which: SandwichComponent,
    n: f64,
    q0: [f64; 2],
    sqrt_c: f64,
}

impl RadialScan<'_> {
    /// `(n G_s, n ψ)` at rescaled radius `r`, with `ψ = ∂G_s/∂|p|`.
    fn eval(&self, r: f64) -> (f64, f64) {
        let x = CotangentPoint::new(self.q0, [r * self.sqrt_c, 0.0]);
        let (v, g) = self.sandwich.component(self.which, &x);
        (self.n * v, self.n * g.dp[0])
    }

    /// Root of `nψ(r) = y` in `[lo, hi]` given a sign change there.
    fn bisect(&self, y: f64, mut lo: f64, mut hi: f64) -> f64 {
        let f_lo = self.eval(lo).1 - y;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let f_mid = self.eval(mid).1 - y;
            if (f_mid < 0.0) == (f_lo < 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Maximal index ranges on which the sampled `ψ` is monotone.
fn monotone_pieces(psi: &[f64]) -> Vec<(usize, usize)> {
    let mut pieces = Vec::new();
    let mut start = 0;
    let mut dir = 0.0_f64;
    for k in 1..psi.len() {
        let d = (psi[k] - psi[k - 1]).signum() * ((psi[k] != psi[k - 1]) as i32 as f64);
        if d != 0.0 && dir != 0.0 && d != dir {
            pieces.push((start, k - 1));
            start = k - 1;
            dir = d;
        } else if d != 0.0 {
            dir = d;
        }
    }
    pieces.push((start, psi.len() - 1));
    pieces
}

fn radial_chords(scan: &RadialScan<'_>, cfg: &NonCrossingConfig, displacements: &[[f64; 2]]) -> Vec<RadialChord> {
    let m = cfg.scan_points;
    let rs: Vec<f64> = (0..=m).map(|k| cfg.r_cap * k as f64 / m as f64).collect();
    let psi: Vec<f64> = rs.iter().map(|r| scan.eval(*r).1).collect();
    // Signed targets ±L, sorted, each remembering its displacement.
    let mut targets: Vec<(f64, usize)> = displacements
        .iter()
        .enumerate()
        .flat_map(|(i, d)| {
            let len = d[0].hypot(d[1]);
            [(len, i), (-len, i)]
        })
        .collect();
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut roots: Vec<(usize, f64, f64)> = Vec::new();
    for (a, b) in monotone_pieces(&psi) {
        let (lo, hi) = if psi[a] <= psi[b] { (psi[a], psi[b]) } else { (psi[b], psi[a]) };
        let increasing = psi[a] <= psi[b];
        let first = targets.partition_point(|t| t.0 < lo);
        for &(y, i) in targets[first..].iter().take_while(|t| t.0 <= hi) {
            // Cell [k, k+1] of the piece with ψ crossing y.
            let k = if increasing {
                a + psi[a..=b].partition_point(|v| *v < y)
            } else {
                a + psi[a..=b].partition_point(|v| *v > y)
            };
            let r = if k <= a {
                rs[a]
            } else if psi[k.min(b)] == y {
                rs[k.min(b)]
            } else {
                scan.bisect(y, rs[k - 1], rs[k.min(b)])
            };
            let duplicate = roots
                .iter()
                .any(|(j, y2, r2)| *j == i && *y2 == y && (r - r2).abs() <= 1e-9);
            if !duplicate {
                roots.push((i, y, r));
            }
        }
    }
    roots
        .into_iter()
        .map(|(i, y, r)| {
            let d = displacements[i];
            let len = d[0].hypot(d[1]);
            let (value, slope) = scan.eval(r);
            let rho = r * scan.sqrt_c;
            // The covector points along the displacement when ψ > 0.
            let sign = y.signum();
            RadialChord {
                p: [sign * rho * d[0] / len, sign * rho * d[1] / len],
                displacement: d,
                action: rho * slope - value,
            }
        })
        .collect()
}

/// Runs the check over all levels and the `s`-grid.
pub fn noncrossing_check(
    sandwich: &SandwichedHamiltonians<Torus2, 2>,
    cfg: &NonCrossingConfig,
    integ: &IntegratorConfig,
) -> Result<NonCrossingReport> {
    if cfg.levels.is_empty() || cfg.levels.contains(&0) {
        return Err(LabError::InvalidInput("levels must be positive integers".into()));
    }
    if cfg.s_points < 2 || cfg.scan_points < 100 || !(cfg.band > 0.0) {
        return Err(LabError::InvalidInput("s_points ≥ 2, scan_points ≥ 100 and band > 0 required".into()));
    }
    if !(cfg.r_cap > 4.0) {
        return Err(LabError::InvalidInput("r_cap must exceed 4 to reach the σG region".into()));
    }
    let c = sandwich.calibration.c;
    let sigma = sandwich.sigma();
    let torus = &sandwich.surface.geometry;
    let mut rows = Vec::new();
    let mut windows = Vec::new();
    let mut verified = 0;
    let mut max_endpoint_error: f64 = 0.0;
    let mut max_action_error: f64 = 0.0;
    for &n in &cfg.levels {
        let nf = n as f64;
        // Chords beyond r_cap have action nσr²/2, far above n + 1.
        if nf * sigma * cfg.r_cap * cfg.r_cap / 2.0 <= nf + 1.0 + cfg.band {
            return Err(LabError::InvalidInput("r_cap too small for this σ".into()));
        }
        let g_lengths: Vec<f64> = lattice_displacements(torus, &cfg.q0, &cfg.q1, (2.0 * nf * (nf + 1.0) / c).sqrt())
            .iter()
            .map(|d| d[0].hypot(d[1]))
            .collect();
        let (a, half_gap) = choose_window(c, n, &g_lengths);
        if half_gap <= cfg.band {
            return Err(LabError::Calibration(format!(
                "no gap wider than the band in S({n}G) ∩ ({n}, {})",
                n + 1
            )));
        }
        windows.push((n, a, half_gap));
        // Largest |nψ| over the scan bounds the displacement lengths needed.
        let max_len = nf * sigma * cfg.r_cap * c.sqrt() * 2.0 + 1.0;
        let displacements = lattice_displacements(torus, &cfg.q0, &cfg.q1, max_len);
        let s_grid: Vec<f64> = (0..cfg.s_points).map(|i| i as f64 / (cfg.s_points - 1) as f64).collect();
        let level_rows: Vec<Result<(NonCrossingLevel, usize, f64, f64)>> = s_grid
            .par_iter()
            .map(|&s| {
                let which = SandwichComponent::Homotopy(s);
                let scan = RadialScan {
                    sandwich,
                    which,
                    n: nf,
                    q0: cfg.q0,
                    sqrt_c: c.sqrt(),
                };
                let a_s = sandwich.action_window(s, a);
                let chords = radial_chords(&scan, cfg, &displacements);
                let min_distance = chords
                    .iter()
                    .map(|ch| (ch.action - a_s).abs())
                    .fold(f64::INFINITY, f64::min);
                let h = sandwich.hamiltonian(which, nf);
                let mut endpoint: f64 = 0.0;
                let mut action: f64 = 0.0;
                let mut checked = 0;
                for ch in chords.iter().take(cfg.verify_per_row) {
                    let traj = integrate(&h, &CotangentPoint::new(cfg.q0, ch.p), 1.0, integ)?;
                    let end = traj.end();
                    for i in 0..2 {
                        endpoint = endpoint.max((end.q[i] - cfg.q0[i] - ch.displacement[i]).abs());
                    }
                    let quad = action_of_trajectory(&traj, &h)?;
                    action = action.max((quad - ch.action).abs() / ch.action.abs().max(1.0));
                    checked += 1;
                }
                Ok((
                    NonCrossingLevel {
                        n,
                        s,
                        a,
                        a_s,
                        chords: chords.len(),
                        min_distance,
                    },
                    checked,
                    endpoint,
                    action,
                ))
            })
            .collect();
        for row in level_rows {
            let (row, checked, endpoint, action) = row?;
            verified += checked;
            max_endpoint_error = max_endpoint_error.max(endpoint);
            max_action_error = max_action_error.max(action);
            rows.push(row);
        }
    }
    let min_distance = rows.iter().map(|r| r.min_distance).fold(f64::INFINITY, f64::min);
    Ok(NonCrossingReport {
        passed: min_distance > cfg.band,
        rows,
        windows,
        min_distance,
        band: cfg.band,
        verified_chords: verified,
        max_endpoint_error,
        max_action_error,
    })
}
