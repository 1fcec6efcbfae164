//! Hyper-parameter sweep over batch size, stepsize and clipping level.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{GridSpec, MethodConfig, RunConfig};
use crate::error::BenchError;
use crate::experiment::execute;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub method: String,
    pub batch: Option<usize>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub runs: usize,
    pub diverged: usize,
    /// Mean final gap over non-diverged runs.
    pub final_mean_gap: Option<f64>,
}

fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

fn cells(method: &MethodConfig, grid: &GridSpec) -> Vec<(Option<usize>, Option<f64>, Option<f64>)> {
    let lambdas = match method {
        MethodConfig::ZoClippedSstm { .. } => axis(&grid.lambda),
        _ => vec![None],
    };
    let mut out = Vec::new();
    for b in axis(&grid.batch) {
        for g in axis(&grid.gamma) {
            for l in &lambdas {
                out.push((b, g, *l));
            }
        }
    }
    out
}

/// Best-first: fewest divergences, then smallest mean final gap.
fn rank(cells: &mut [GridCell]) {
    cells.sort_by(|a, b| {
        let key = |c: &GridCell| c.final_mean_gap.unwrap_or(f64::INFINITY);
        (a.method.as_str(), a.diverged)
            .cmp(&(b.method.as_str(), b.diverged))
            .then(key(a).total_cmp(&key(b)))
    });
}

/// Runs every method at every grid cell and returns the cells ranked per
/// method.
pub fn grid_search(cfg: &RunConfig) -> Result<Vec<GridCell>, BenchError> {
    let grid = cfg.grid.clone().unwrap_or_default();
    let mut out = Vec::new();
    for method in &cfg.methods {
        for (batch, gamma, lambda) in cells(method, &grid) {
            let cell_cfg = RunConfig { methods: vec![method.with_grid_cell(batch, gamma, lambda)], grid: None, ..cfg.clone() };
            let result = execute(&cell_cfg)?;
            let s = &result.summaries[0];
            log::info!("{} B={batch:?} gamma={gamma:?} lambda={lambda:?}: {:?}", s.method, s.final_mean_gap);
            out.push(GridCell {
                method: s.method.clone(),
                batch,
                gamma,
                lambda,
                runs: s.runs,
                diverged: s.diverged,
                final_mean_gap: s.final_mean_gap,
            });
        }
    }
    rank(&mut out);
    Ok(out)
}

pub fn write_grid_csv(cells: &[GridCell], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for c in cells {
        w.serialize(c)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes `grid.csv` into the output directory. Fails with
/// [`BenchError::AllDiverged`] when every run of every cell diverged.
pub fn run_grid(cfg: &RunConfig) -> Result<Vec<GridCell>, BenchError> {
    let cells = grid_search(cfg)?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_grid_csv(&cells, &cfg.output_dir.join("grid.csv"))?;
    if cells.iter().all(|c| c.diverged == c.runs) {
        let table = cells
            .iter()
            .map(|c| format!("{} B={:?} gamma={:?} lambda={:?}: {}/{} diverged", c.method, c.batch, c.gamma, c.lambda, c.diverged, c.runs))
            .collect::<Vec<_>>()
            .join("\n");
        return Err(BenchError::AllDiverged { table });
    }
    Ok(cells)
}
