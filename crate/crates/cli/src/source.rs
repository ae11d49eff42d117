//! Graph arguments: a file in the text format, or a generator name with an
//! optional size (`grid2d`, `grid2d:16x16`, `ring`, `ring:32`, `sensor`,
//! `sensor:100`, `er:500`). Existing files win over generator names.

use std::path::Path;

use anyhow::{bail, Context, Result};
use graphpool::graph::{build_erdos_renyi, build_grid2d, build_ring, build_sensor, load_graph, Graph};

/// Benchmark size of the generated graphs.
const DEFAULT_N: usize = 64;
const DEFAULT_SIDE: usize = 8;
pub const DEFAULT_ER_P: f64 = 0.1;

/// Loads or generates `spec`; generators with randomness use `seed`.
pub fn resolve_graph(spec: &str, seed: u64) -> Result<Graph> {
    if Path::new(spec).is_file() {
        return load_graph(spec).with_context(|| format!("cannot read graph file {spec}"));
    }
    let (name, size) = match spec.split_once(':') {
        Some((n, s)) => (n, Some(s)),
        None => (spec, None),
    };
    let count = |s: Option<&str>| -> Result<usize> {
        s.map_or(Ok(DEFAULT_N), |s| s.parse().with_context(|| format!("invalid size '{s}' in graph '{spec}'")))
    };
    let g = match name {
        "grid2d" => {
            let (rows, cols) = match size {
                None => (DEFAULT_SIDE, DEFAULT_SIDE),
                Some(s) => {
                    let (r, c) = s.split_once('x').with_context(|| format!("grid size must be RxC, got '{s}'"))?;
                    (r.parse()?, c.parse()?)
                }
            };
            build_grid2d(rows, cols)?
        }
        "ring" => build_ring(count(size)?)?,
        "sensor" => build_sensor(count(size)?, seed)?,
        "er" => build_erdos_renyi(count(size)?, DEFAULT_ER_P, seed)?,
        _ => bail!("'{spec}' is neither a graph file nor a generator (grid2d, ring, sensor, er)"),
    };
    Ok(g)
}

/// Short label for reports: the file stem for files, the spec otherwise.
pub fn graph_label(spec: &str) -> String {
    let p = Path::new(spec);
    if p.is_file() {
        p.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().into_owned())
    } else {
        spec.to_string()
    }
}
