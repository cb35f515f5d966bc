//! Volume growth of an evolved fiber sphere.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_exponential_rate, GrowthFit, Verdict};
use super::mesh::{sasaki_length, simplex_volume, FiberMesh, StartFiber};
use crate::dynamics::{flow, Hamiltonian, IntegratorConfig};
use crate::error::{LabError, Result};
use crate::geometry::CoverGeometry;
use crate::phase::CotangentPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowthConfig {
    pub n_max: usize,
    /// Largest allowed Sasaki edge length after each refinement pass.
    pub refine_threshold: f64,
    pub vertex_budget: usize,
    /// Trailing window of the rate fit.
    pub fit_window: usize,
}

impl Default for VolumeGrowthConfig {
    fn default() -> Self {
        Self {
            n_max: 12,
            refine_threshold: 0.25,
            vertex_budget: 200_000,
            fit_window: 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeGrowth {
    /// Volume of the evolved sphere at `n = 0, 1, …`.
    pub volumes: Vec<f64>,
    pub vertices: Vec<usize>,
    /// The vertex budget ran out before `n_max`; the fit is then
    /// inconclusive by construction.
    pub budget_exhausted: bool,
    pub fit: Option<GrowthFit>,
}

fn mesh_volume<G: CoverGeometry<D>, const D: usize>(
    geometry: &G,
    mesh: &FiberMesh<D>,
    states: &[CotangentPoint<D>],
) -> f64 {
    mesh.simplices
        .par_iter()
        .map(|s| simplex_volume(geometry, &s.map(|i| states[i])))
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Evolves the fiber sphere by time-one maps, refining long edges (new
/// vertices are re-evolved from time 0) and recording its volume at each `n`.
pub fn volume_growth<Geo, H, F, const D: usize>(
    geometry: &Geo,
    h: &H,
    fiber: &F,
    initial: FiberMesh<D>,
    cfg: &VolumeGrowthConfig,
    integ: &IntegratorConfig,
) -> Result<VolumeGrowth>
where
    Geo: CoverGeometry<D>,
    H: Hamiltonian<D>,
    F: StartFiber<D>,
{
    if !initial.is_valid() || initial.simplices.is_empty() {
        return Err(LabError::InvalidInput("initial mesh is empty or invalid".into()));
    }
    if cfg.vertex_budget <= initial.params.len() {
        return Err(LabError::InvalidInput("vertex budget must exceed the initial vertex count".into()));
    }
    if !(cfg.refine_threshold > 0.0) || cfg.n_max == 0 {
        return Err(LabError::InvalidInput("refine_threshold and n_max must be positive".into()));
    }
    let mut mesh = initial;
    let mut states: Vec<CotangentPoint<D>> = mesh.params.iter().map(|u| fiber.start(u)).collect();
    let mut volumes = Vec::new();
    let mut vertices = Vec::new();
    let mut exhausted = false;
    for n in 0..=cfg.n_max {
        if n > 0 {
            states = states
                .par_iter()
                .map(|x| flow(h, x, 1.0, integ))
                .collect::<Result<Vec<_>>>()?;
        }
        // Refine until every edge is short or the budget runs out.
        loop {
            let long: HashSet<(usize, usize)> = mesh
                .edges()
                .into_iter()
                .filter(|(a, b)| sasaki_length(geometry, &states[*a], &states[*b]) > cfg.refine_threshold)
                .collect();
            if long.is_empty() {
                break;
            }
            if mesh.params.len() + long.len() > cfg.vertex_budget {
                exhausted = true;
                break;
            }
            let new = mesh.refine_marked(&long);
            let fresh = new
                .par_iter()
                .map(|i| {
                    let x0 = fiber.start(&mesh.params[*i]);
                    if n == 0 {
                        Ok(x0)
                    } else {
                        flow(h, &x0, n as f64, integ)
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            states.extend(fresh);
        }
        if exhausted {
            break;
        }
        volumes.push(mesh_volume(geometry, &mesh, &states));
        vertices.push(mesh.params.len());
    }
    // Fit over n = 1, 2, … (index n has abscissa n + 1 in the fitter).
    let tail = &volumes[1.min(volumes.len())..];
    let fit = if tail.len() >= cfg.fit_window.max(3) {
        let mut f = fit_exponential_rate(tail, cfg.fit_window.max(3))?;
        if exhausted {
            f.verdict = Verdict::Inconclusive;
        }
        Some(f)
    } else {
        None
    };
    Ok(VolumeGrowth {
        volumes,
        vertices,
        budget_exhausted: exhausted,
        fit,
    })
}
