use serde_json::json;
use spherization_core::dynamics;
use spherization_core::starshape::{SandwichedHamiltonians, StarshapedSurface};
use spherization_core::Result;

use super::{summary, table, Outcome};
use crate::config::ExperimentConfig;
use crate::manifest::Check;

pub(super) fn noncrossing_check(cfg: &ExperimentConfig) -> Result<Outcome> {
    let torus = cfg.manifold().torus()?;
    let surface = StarshapedSurface::new(torus, cfg.profile.clone())?;
    let sandwich = SandwichedHamiltonians::new(surface, cfg.sandwich.eps, cfg.sandwich.safety, cfg.sandwich.sampling())?;
    let report = dynamics::noncrossing_check(&sandwich, &cfg.noncrossing, &cfg.integrator)?;
    let checks = vec![
        Check::new(
            "min |A − a(s)| over chords of nG_s",
            format!("{:.6e}", report.min_distance),
            format!("> {:e}", report.band),
            report.passed,
        ),
        Check::at_most("verified chord endpoint error", report.max_endpoint_error, 1e-8),
        Check::at_most("verified chord action error", report.max_action_error, 1e-6),
    ];
    let results = json!({
        "c": sandwich.calibration.c,
        "sigma": sandwich.sigma(),
        "eps": sandwich.cutoff.eps(),
        "windows": summary(&report.windows),
        "min_distance": report.min_distance,
        "band": report.band,
        "verified_chords": report.verified_chords,
        "max_endpoint_error": report.max_endpoint_error,
        "max_action_error": report.max_action_error,
    });
    Ok(Outcome {
        tables: vec![table("rows.csv", &report.rows)?],
        results,
        checks,
    })
}
