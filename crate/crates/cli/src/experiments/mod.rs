//! The named experiments. Each returns its CSV tables, a JSON summary and the
//! acceptance checks it embeds.

mod action;
mod census;
mod growth;
mod noncrossing;
mod sol;
mod volume;

use serde::Serialize;
use serde_json::Value;
use spherization_core::growth::GroupElement;
use spherization_core::{LabError, Result};

use crate::config::{Experiment, ExperimentConfig};
use crate::manifest::{Check, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub results: Value,
    pub checks: Vec<Check>,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::SolEntropy => sol::sol_entropy(cfg),
        Experiment::SolSweep => sol::sol_sweep(cfg),
        Experiment::ChordCensus => census::chord_census(cfg),
        Experiment::Mpp => census::mpp(cfg),
        Experiment::VolumeGrowth => volume::volume_growth(cfg),
        Experiment::ActionCheck => action::action_check(cfg),
        Experiment::NoncrossingCheck => noncrossing::noncrossing_check(cfg),
        Experiment::GroupGrowth => growth::group_growth(cfg),
    }
}

fn table<T: Serialize>(name: &str, records: &[T]) -> Result<Table> {
    Table::from_records(name, records).map_err(|e| LabError::InvalidInput(format!("csv encoding failed: {e}")))
}

fn summary<T: Serialize>(value: &T) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}

/// Compact text form of a deck element for CSV cells.
pub(crate) trait DeckLabel {
    fn label(&self) -> String;
}

impl DeckLabel for [i64; 2] {
    fn label(&self) -> String {
        format!("{}:{}", self[0], self[1])
    }
}

impl DeckLabel for GroupElement {
    fn label(&self) -> String {
        format!("{}:{}:{}", self.v[0], self.v[1], self.l)
    }
}

fn to_array<const D: usize>(v: &[f64]) -> [f64; D] {
    let mut out = [0.0; D];
    out.copy_from_slice(&v[..D]);
    out
}
