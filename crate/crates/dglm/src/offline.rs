//! Offline filtering of an observation stream stored as CSV.
//!
//! The data file has one observation per row. Response columns are `y` for a
//! scalar response or `y1..yd`. Predictor columns are `x1..xk` when the
//! signal is scalar, or `x{i}_{j}` (row `i` of `k`, column `j` of `c`)
//! otherwise.

use std::path::Path;

use dglm_core::filter::update;
use dglm_core::{predict, Belief, DynamicsSpec, Matrix, Model, Observation, ObservationModel, Vector};

use crate::error::{Error, Result};
use crate::tables::write_rows;

/// Parses a model description.
///
/// `gaussian[:variance]`, `poisson`, `exponential`, `bernoulli_logit` (alias
/// `logistic`), or several of these joined by `+` for an independent
/// product.
pub fn parse_model(spec: &str) -> Result<Model> {
    let parts: Vec<&str> = spec.split('+').map(str::trim).collect();
    if parts.len() > 1 {
        let models = parts.iter().map(|p| parse_single(p)).collect::<Result<Vec<_>>>()?;
        return Ok(Model::product(models)?);
    }
    parse_single(parts[0])
}

fn parse_single(spec: &str) -> Result<Model> {
    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (spec.trim(), None),
    };
    let no_arg = |m: Model| match arg {
        None => Ok(m),
        Some(a) => Err(Error::parse("model", format!("{name} takes no parameter, got {a:?}"))),
    };
    match name {
        "gaussian" => {
            let variance = match arg {
                None => 1.0,
                Some(a) => a
                    .parse()
                    .map_err(|_| Error::parse("model", format!("bad gaussian variance {a:?}")))?,
            };
            Ok(Model::gaussian(variance)?)
        }
        "poisson" => no_arg(Model::poisson()),
        "exponential" => no_arg(Model::exponential()),
        "bernoulli_logit" | "logistic" => no_arg(Model::bernoulli_logit()),
        other => Err(Error::parse("model", format!("unknown model {other:?}"))),
    }
}

/// Parses `static` or `random_walk:q` (process noise `q·I`).
pub fn parse_dynamics(spec: &str, dim: usize) -> Result<DynamicsSpec> {
    let spec = spec.trim();
    if spec == "static" {
        return Ok(DynamicsSpec::static_params(dim));
    }
    if let Some(q) = spec.strip_prefix("random_walk:") {
        let q: f64 = q
            .trim()
            .parse()
            .map_err(|_| Error::parse("dynamics", format!("bad process variance {q:?}")))?;
        return Ok(DynamicsSpec::random_walk(Matrix::identity(dim, dim) * q)?);
    }
    Err(Error::parse(
        "dynamics",
        format!("expected static or random_walk:<variance>, got {spec:?}"),
    ))
}

/// Observations read from a data file, with the layout inferred from its
/// header.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStream {
    pub param_dim: usize,
    pub observations: Vec<Observation>,
}

enum Column {
    Response(usize),
    Predictor(usize, usize),
}

fn classify(name: &str) -> Option<Column> {
    if name == "y" {
        return Some(Column::Response(0));
    }
    if let Some(d) = name.strip_prefix('y') {
        return d.parse::<usize>().ok().filter(|&d| d >= 1).map(|d| Column::Response(d - 1));
    }
    let rest = name.strip_prefix('x')?;
    match rest.split_once('_') {
        Some((i, j)) => {
            let (i, j) = (i.parse::<usize>().ok()?, j.parse::<usize>().ok()?);
            (i >= 1 && j >= 1).then(|| Column::Predictor(i - 1, j - 1))
        }
        None => rest.parse::<usize>().ok().filter(|&i| i >= 1).map(|i| Column::Predictor(i - 1, 0)),
    }
}

pub fn read_observations(path: &Path, model: &Model) -> Result<ObservationStream> {
    let ctx = || path.display().to_string();
    let mut reader = csv::Reader::from_path(path).map_err(Error::csv(path))?;
    let header = reader.headers().map_err(Error::csv(path))?.clone();
    let mut columns = Vec::with_capacity(header.len());
    for name in header.iter() {
        columns.push(
            classify(name.trim())
                .ok_or_else(|| Error::parse(ctx(), format!("unrecognised column {name:?}")))?,
        );
    }
    let d = model.response_dim();
    let c = model.signal_dim();
    let k = columns
        .iter()
        .filter_map(|col| match col {
            Column::Predictor(i, _) => Some(i + 1),
            Column::Response(_) => None,
        })
        .max()
        .unwrap_or(0);
    let mut seen_y = vec![false; d];
    let mut seen_x = vec![false; k * c];
    for col in &columns {
        match *col {
            Column::Response(i) if i < d && !seen_y[i] => seen_y[i] = true,
            Column::Predictor(i, j) if j < c && !seen_x[i * c + j] => seen_x[i * c + j] = true,
            _ => {
                return Err(Error::parse(
                    ctx(),
                    format!("columns do not match a model with {d} response(s) and {c} signal column(s)"),
                ))
            }
        }
    }
    if k == 0 || seen_y.contains(&false) || seen_x.contains(&false) {
        return Err(Error::parse(ctx(), "missing response or predictor columns"));
    }

    let mut observations = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(Error::csv(path))?;
        let mut y = Vector::zeros(d);
        let mut x = Matrix::zeros(k, c);
        for (col, raw) in columns.iter().zip(rec.iter()) {
            let v: f64 = raw.trim().parse().map_err(|_| {
                Error::parse(format!("{} row {}", ctx(), row + 1), format!("cannot parse {raw:?}"))
            })?;
            match *col {
                Column::Response(i) => y[i] = v,
                Column::Predictor(i, j) => x[(i, j)] = v,
            }
        }
        observations.push(Observation::new(x, y));
    }
    Ok(ObservationStream {
        param_dim: k,
        observations,
    })
}

/// One filtered step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    pub belief: Belief,
    pub stabilized: bool,
    pub clamped: bool,
}

/// Runs predict → update over the stream. Errors carry the 1-based row.
pub fn run_filter(
    start: Belief,
    dynamics: &DynamicsSpec,
    model: &Model,
    stream: &ObservationStream,
) -> Result<Vec<FilterStep>> {
    let mut belief = start;
    let mut steps = Vec::with_capacity(stream.observations.len());
    for (row, obs) in stream.observations.iter().enumerate() {
        let at_row = |e| dglm_core::Error::Round {
            round: row + 1,
            source: Box::new(e),
        };
        let prior = predict(&belief, dynamics).map_err(at_row)?;
        let (post, diag) = update(&prior, obs, model).map_err(at_row)?;
        steps.push(FilterStep {
            belief: post.clone(),
            stabilized: diag.stabilized,
            clamped: diag.clamped,
        });
        belief = post;
    }
    Ok(steps)
}

/// Writes `step, mean_1..mean_k, var_1..var_k, stabilized, clamped`.
pub fn write_filter_output(steps: &[FilterStep], dim: usize, path: &Path) -> Result<()> {
    let mut header = vec!["step".to_string()];
    header.extend((1..=dim).map(|i| format!("mean_{i}")));
    header.extend((1..=dim).map(|i| format!("var_{i}")));
    header.push("stabilized".into());
    header.push("clamped".into());
    let rows: Vec<Vec<String>> = steps
        .iter()
        .map(|s| {
            let mut row = vec![s.belief.step().to_string()];
            row.extend(s.belief.mean().iter().map(f64::to_string));
            row.extend((0..dim).map(|i| s.belief.cov()[(i, i)].to_string()));
            row.push(s.stabilized.to_string());
            row.push(s.clamped.to_string());
            row
        })
        .collect();
    write_rows(path, &header, &rows)
}
