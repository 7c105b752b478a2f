//! Text formats.
//!
//! Graph: a header line `n m`, then `m` lines `u v w` (0-based vertices). Trace: one
//! update per line, `D u v` for a deletion or `I u v w` for an increase to weight `w`.
//! Blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use dsssp_core::{DecrementalGraph, UpdateEvent, UpdateKind, Vertex, Weight};

use crate::error::{CliError, CliResult};

pub fn graph_to_text(n: usize, edges: &[(Vertex, Vertex, Weight)]) -> String {
    let mut out = format!("{} {}\n", n, edges.len());
    for (u, v, w) in edges {
        writeln!(out, "{u} {v} {w}").unwrap();
    }
    out
}

pub fn trace_to_text(trace: &[UpdateEvent]) -> String {
    let mut out = String::new();
    for ev in trace {
        match ev.kind {
            UpdateKind::Delete => writeln!(out, "D {} {}", ev.tail, ev.head).unwrap(),
            UpdateKind::Increase(w) => writeln!(out, "I {} {} {w}", ev.tail, ev.head).unwrap(),
        }
    }
    out
}

fn numbers<T: std::str::FromStr>(file: &str, line: usize, fields: &[&str]) -> CliResult<Vec<T>> {
    fields
        .iter()
        .map(|f| {
            f.parse().map_err(|_| CliError::Parse { file: file.into(), line, message: format!("not a number: {f:?}") })
        })
        .collect()
}

/// Parses a graph file into `(n, edges)`.
pub fn parse_graph(file: &str, text: &str) -> CliResult<(usize, Vec<(Vertex, Vertex, Weight)>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, message: String| CliError::Parse { file: file.into(), line, message };
    let (i, header) = lines.next().ok_or_else(|| parse_err(1, "missing header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(i + 1, "header must be `n m`".into()));
    }
    let hm: Vec<usize> = numbers(file, i + 1, &fields)?;
    let (n, m) = (hm[0], hm[1]);
    let mut edges = Vec::with_capacity(m);
    for (i, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(i + 1, "edge lines are `u v w`".into()));
        }
        let uv: Vec<Vertex> = numbers(file, i + 1, &fields[..2])?;
        let w: Vec<Weight> = numbers(file, i + 1, &fields[2..])?;
        edges.push((uv[0], uv[1], w[0]));
    }
    if edges.len() != m {
        return Err(parse_err(0, format!("header announces {m} edges, found {}", edges.len())));
    }
    Ok((n, edges))
}

pub fn parse_trace(file: &str, text: &str) -> CliResult<Vec<UpdateEvent>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            [] => {}
            ["D", rest @ ..] if rest.len() == 2 => {
                let uv: Vec<Vertex> = numbers(file, i + 1, rest)?;
                out.push(UpdateEvent::delete(uv[0], uv[1]));
            }
            ["I", rest @ ..] if rest.len() == 3 => {
                let uv: Vec<Vertex> = numbers(file, i + 1, &rest[..2])?;
                let w: Vec<Weight> = numbers(file, i + 1, &rest[2..])?;
                out.push(UpdateEvent::increase(uv[0], uv[1], w[0]));
            }
            _ => {
                return Err(CliError::Parse { file: file.into(), line: i + 1, message: "expected `D u v` or `I u v w`".into() })
            }
        }
    }
    Ok(out)
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_graph(path: &Path) -> CliResult<DecrementalGraph> {
    let (n, edges) = parse_graph(&path.display().to_string(), &read(path)?)?;
    Ok(DecrementalGraph::new(n, &edges)?)
}

pub fn read_trace(path: &Path) -> CliResult<Vec<UpdateEvent>> {
    parse_trace(&path.display().to_string(), &read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let edges = vec![(0, 1, 3), (1, 2, 1)];
        let (n, back) = parse_graph("g", &graph_to_text(3, &edges)).unwrap();
        assert_eq!((n, back), (3, edges));
        let trace = vec![UpdateEvent::delete(0, 1), UpdateEvent::increase(1, 2, 9)];
        assert_eq!(parse_trace("t", &trace_to_text(&trace)).unwrap(), trace);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_graph("g", "2 1\n0 1\n").is_err());
        assert!(parse_graph("g", "2 2\n0 1 1\n").is_err());
        assert!(parse_trace("t", "X 0 1\n").is_err());
        assert!(matches!(parse_trace("t", "D 0 a\n"), Err(CliError::Parse { line: 1, .. })));
    }
}
