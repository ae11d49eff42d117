//! Plain-text graph format.
//!
//! ```text
//! N F d
//! <N rows of F features>      (a single `-` line when F = 0)
//! <N rows of d coordinates>   (a single `-` line when d = 0)
//! i j w                       (one undirected edge per line, 0-based, i < j)
//! ```
//!
//! Lines starting with `#` are comments and may appear anywhere.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so a save/load round trip is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Graph, GraphError};

pub fn write_graph<W: Write>(g: &Graph, mut out: W) -> Result<(), GraphError> {
    let d = g.coords().map_or(0, |c| c.ncols());
    writeln!(out, "{} {} {}", g.n(), g.num_features(), d)?;
    write_block(&mut out, g.features())?;
    match g.coords() {
        Some(c) if d > 0 => write_block(&mut out, c)?,
        _ => writeln!(out, "-")?,
    }
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.i, e.j, e.w)?;
    }
    Ok(())
}

fn write_block<W: Write>(out: &mut W, m: &DMatrix<f64>) -> Result<(), GraphError> {
    if m.ncols() == 0 {
        writeln!(out, "-")?;
        return Ok(());
    }
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn save_graph(g: &Graph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_graph(g, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<Graph, GraphError> {
    read_graph(BufReader::new(File::open(path)?))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next line that is not a `#` comment.
    fn next_line(&mut self) -> Result<Option<String>, GraphError> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            if !l.trim_start().starts_with('#') {
                return Ok(Some(l));
            }
        }
        Ok(None)
    }

    fn expect_line(&mut self, what: &str) -> Result<String, GraphError> {
        self.next_line()?.ok_or_else(|| GraphError::Parse {
            line: self.line + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn err(&self, msg: impl Into<String>) -> GraphError {
        GraphError::Parse { line: self.line, msg: msg.into() }
    }

    fn read_block(&mut self, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>, GraphError> {
        if cols == 0 {
            let l = self.expect_line(what)?;
            if l.trim() != "-" {
                return Err(self.err(format!("expected '-' for empty {what} block")));
            }
            return Ok(DMatrix::zeros(rows, 0));
        }
        let mut m = DMatrix::zeros(rows, cols);
        for r in 0..rows {
            let l = self.expect_line(what)?;
            let vals: Vec<&str> = l.split_whitespace().collect();
            if vals.len() != cols {
                return Err(self.err(format!("{what} row has {} values, expected {cols}", vals.len())));
            }
            for (c, v) in vals.iter().enumerate() {
                m[(r, c)] = v.parse().map_err(|_| self.err(format!("invalid number '{v}'")))?;
            }
        }
        Ok(m)
    }
}

pub fn read_graph<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut lines = Lines { inner: reader.lines(), line: 0 };
    let header = lines.expect_line("header 'N F d'")?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| lines.err("header must be three non-negative integers 'N F d'"))?;
    let [n, f, d] = dims[..] else {
        return Err(lines.err("header must be three non-negative integers 'N F d'"));
    };
    let features = lines.read_block(n, f, "feature")?;
    let coords = lines.read_block(n, d, "coordinate")?;
    let coords = (d > 0).then_some(coords);
    let mut edges = Vec::new();
    while let Some(l) = lines.next_line()? {
        let t = l.trim();
        if t.is_empty() {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(lines.err("edge line must be 'i j w'"));
        }
        let i: usize = parts[0].parse().map_err(|_| lines.err(format!("invalid node index '{}'", parts[0])))?;
        let j: usize = parts[1].parse().map_err(|_| lines.err(format!("invalid node index '{}'", parts[1])))?;
        let w: f64 = parts[2].parse().map_err(|_| lines.err(format!("invalid weight '{}'", parts[2])))?;
        if i >= n || j >= n {
            return Err(lines.err(format!("edge ({i}, {j}) out of range for {n} nodes")));
        }
        if i >= j {
            return Err(lines.err(format!("edge ({i}, {j}) must satisfy i < j")));
        }
        edges.push((i, j, w));
    }
    Graph::new(features, edges, coords)
}
