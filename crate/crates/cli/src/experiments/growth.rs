use serde::Serialize;
use serde_json::json;
use spherization_core::entropy::{fit_exponential_rate, GrowthFit, Verdict};
use spherization_core::growth::{abelian_ball_counts, ball_counts};
use spherization_core::Result;

use super::{summary, table, Outcome};
use crate::config::{ExperimentConfig, ManifoldConfig};
use crate::manifest::Check;

const MIN_SEMIDIRECT_RATE: f64 = 0.3;
const MAX_CONTROL_RATE: f64 = 0.1;

#[derive(Debug, Clone, Serialize)]
struct BallRow {
    group: &'static str,
    n: usize,
    b_n: u64,
    /// `(1/n) log b_n`.
    rate: Option<f64>,
}

fn rows(group: &'static str, counts: &[u64]) -> Vec<BallRow> {
    counts
        .iter()
        .enumerate()
        .map(|(n, &b_n)| BallRow {
            group,
            n,
            b_n,
            rate: (n > 0).then(|| (b_n as f64).ln() / n as f64),
        })
        .collect()
}

fn fit(counts: &[u64], window: usize) -> Result<GrowthFit> {
    let series: Vec<f64> = counts.iter().skip(1).map(|b| *b as f64).collect();
    fit_exponential_rate(&series, window)
}

pub(super) fn group_growth(cfg: &ExperimentConfig) -> Result<Outcome> {
    let a = match cfg.manifold() {
        ManifoldConfig::Sol { monodromy } => monodromy,
        ManifoldConfig::Torus { .. } => unreachable!("validated: group-growth needs a sol manifold"),
    };
    let g = &cfg.growth;
    let semidirect = ball_counts(&a, g.n_max, g.element_budget)?;
    let control = abelian_ball_counts(g.control_n_max, g.element_budget)?;
    let semidirect_fit = fit(&semidirect, g.fit_window)?;
    let control_fit = fit(&control, g.fit_window)?;
    let increasing = |b: &[u64]| b.windows(2).all(|w| w[1] > w[0]);
    let checks = vec![
        Check::new(
            "semidirect verdict",
            semidirect_fit.verdict.as_str(),
            Verdict::Exponential.as_str(),
            semidirect_fit.verdict == Verdict::Exponential,
        ),
        Check::at_least("semidirect fitted rate", semidirect_fit.rate, MIN_SEMIDIRECT_RATE),
        Check::new(
            "control verdict",
            control_fit.verdict.as_str(),
            Verdict::Polynomial.as_str(),
            control_fit.verdict == Verdict::Polynomial,
        ),
        Check::at_most("control fitted rate", control_fit.rate, MAX_CONTROL_RATE),
        Check::new(
            "ball counts strictly increasing",
            (increasing(&semidirect) && increasing(&control)).to_string(),
            "true",
            increasing(&semidirect) && increasing(&control),
        ),
    ];
    let mut table_rows = rows("semidirect", &semidirect);
    table_rows.extend(rows("control", &control));
    let results = json!({
        "monodromy": a,
        "semidirect_counts": semidirect,
        "control_counts": control,
        "semidirect_fit": summary(&semidirect_fit),
        "control_fit": summary(&control_fit),
    });
    Ok(Outcome {
        tables: vec![table("balls.csv", &table_rows)?],
        results,
        checks,
    })
}
