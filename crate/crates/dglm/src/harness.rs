//! Repetition-parallel aggregation.

use dglm_core::sim::{run_repetition, MetricSeries, SimConfig};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Runs every repetition of `config` in parallel and averages the series.
///
/// Repetition `r` draws from its own generator stream, and averaging happens
/// in repetition order, so the result does not depend on the thread count.
pub fn aggregate_runs(config: &SimConfig) -> Result<MetricSeries> {
    config.validate()?;
    let runs = (0..config.repetitions as u64)
        .into_par_iter()
        .map(|repetition| {
            run_repetition(config, repetition)
                .map(|run| run.series)
                .map_err(|source| Error::Repetition { repetition, source })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricSeries::mean(&runs)?)
}
