use serde::Serialize;
use spherization_core::entropy::{self, FiberMesh, ProfileFiber, SolLevelFiber, Verdict, VolumeGrowth};
use spherization_core::sol_model::{entropy_closed_form, SolHamiltonian, SolLevel};
use spherization_core::starshape::{HomogeneousHamiltonian, StarshapedSurface};
use spherization_core::Result;

use super::{summary, table, to_array, Outcome};
use crate::config::{ExperimentConfig, ManifoldConfig};
use crate::manifest::Check;

const MIN_EXPONENTIAL_RATE: f64 = 0.2;

#[derive(Debug, Clone, Serialize)]
struct VolumeRow {
    n: usize,
    volume: f64,
    vertices: usize,
    log_volume: f64,
}

pub(super) fn volume_growth(cfg: &ExperimentConfig) -> Result<Outcome> {
    let manifold = cfg.manifold();
    let section = &cfg.volume;
    let (growth, expect_exponential): (VolumeGrowth, bool) = match &manifold {
        ManifoldConfig::Torus { .. } => {
            let torus = manifold.torus()?;
            let surface = StarshapedSurface::new(torus.clone(), cfg.profile.clone())?;
            let h = HomogeneousHamiltonian { surface: surface.clone(), scale: 0.5 };
            let q0 = section.q0.as_ref().map(|v| to_array::<2>(v)).unwrap_or([0.0, 0.0]);
            let fiber = ProfileFiber { surface, q0 };
            let mesh = FiberMesh::sphere(section.resolution)?;
            (entropy::volume_growth(&torus, &h, &fiber, mesh, &section.core(), &cfg.integrator)?, false)
        }
        ManifoldConfig::Sol { .. } => {
            let sol = manifold.sol()?;
            let level = SolLevel::new(cfg.sol.k, sol.clone())?;
            let q0 = section.q0.as_ref().map(|v| to_array::<3>(v)).unwrap_or([0.0, 0.0, 0.0]);
            let fiber = SolLevelFiber { level, q0 };
            let mesh = FiberMesh::sphere(section.resolution)?;
            let out = entropy::volume_growth(&sol, &SolHamiltonian, &fiber, mesh, &section.core(), &cfg.integrator)?;
            (out, entropy_closed_form(cfg.sol.k) > 0.0)
        }
    };
    let rows: Vec<VolumeRow> = growth
        .volumes
        .iter()
        .zip(&growth.vertices)
        .enumerate()
        .map(|(n, (&volume, &vertices))| VolumeRow {
            n,
            volume,
            vertices,
            log_volume: volume.ln(),
        })
        .collect();
    let mut checks = vec![Check::new(
        "completed within the vertex budget",
        format!("{} steps, {} vertices", growth.volumes.len() - 1, growth.vertices.last().copied().unwrap_or(0)),
        format!("n_max = {}, budget {}", section.n_max, section.vertex_budget),
        !growth.budget_exhausted,
    )];
    let verdict = growth.fit.as_ref().map(|f| f.verdict);
    let observed = verdict.map(|v| v.as_str()).unwrap_or("no fit");
    if expect_exponential {
        checks.push(Check::new("verdict", observed, Verdict::Exponential.as_str(), verdict == Some(Verdict::Exponential)));
        let rate = growth.fit.as_ref().map(|f| f.rate).unwrap_or(f64::NAN);
        checks.push(Check::at_least("fitted rate", rate, MIN_EXPONENTIAL_RATE));
    } else {
        checks.push(Check::new(
            "verdict",
            observed,
            "not exponential",
            verdict.is_some() && verdict != Some(Verdict::Exponential),
        ));
    }
    Ok(Outcome {
        tables: vec![table("volumes.csv", &rows)?],
        results: summary(&growth),
        checks,
    })
}
