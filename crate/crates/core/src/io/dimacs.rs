//! DIMACS minimum-cost-flow text format.
//!
//! Node supplies are the negated load: a node with supply `f` has
//! `b = -f`. Capacities and lower bounds are accepted only when they
//! cannot change the uncapacitated problem.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::problem::Problem;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

/// Parses DIMACS text. Arcs keep their file order.
pub fn parse_dimacs(text: &str) -> Result<Problem> {
    let mut header: Option<(usize, usize)> = None;
    let mut supply: Vec<f64> = Vec::new();
    let mut seen_supply: Vec<bool> = Vec::new();
    let mut arcs = Vec::new();
    let mut costs = Vec::new();
    let mut caps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut toks = raw.split_whitespace();
        let Some(tag) = toks.next() else { continue };
        match tag {
            "c" => continue,
            "p" => {
                if header.is_some() {
                    return Err(parse_err(line, "duplicate problem line"));
                }
                let kind: String = field(toks.next(), line, "problem type")?;
                if kind != "min" {
                    return Err(parse_err(line, format!("expected 'p min', got 'p {kind}'")));
                }
                let nodes: usize = field(toks.next(), line, "node count")?;
                let arc_count: usize = field(toks.next(), line, "arc count")?;
                if nodes == 0 {
                    return Err(parse_err(line, "node count must be positive"));
                }
                header = Some((nodes, arc_count));
                supply = vec![0.0; nodes];
                seen_supply = vec![false; nodes];
            }
            "n" | "a" => {
                let (nodes, _) =
                    header.ok_or_else(|| parse_err(line, "data before problem line"))?;
                let node = |tok: Option<&str>, what: &str| -> Result<usize> {
                    let id: usize = field(tok, line, what)?;
                    if id == 0 || id > nodes {
                        return Err(parse_err(line, format!("{what} {id} outside 1..={nodes}")));
                    }
                    Ok(id - 1)
                };
                if tag == "n" {
                    let v = node(toks.next(), "node id")?;
                    let f: f64 = field(toks.next(), line, "supply")?;
                    if seen_supply[v] {
                        return Err(parse_err(
                            line,
                            format!("duplicate supply for node {}", v + 1),
                        ));
                    }
                    seen_supply[v] = true;
                    supply[v] = f;
                } else {
                    let t = node(toks.next(), "source node")?;
                    let h = node(toks.next(), "target node")?;
                    let low: f64 = field(toks.next(), line, "lower bound")?;
                    let cap: f64 = field(toks.next(), line, "capacity")?;
                    let cost: f64 = field(toks.next(), line, "cost")?;
                    if low != 0.0 {
                        return Err(parse_err(line, "nonzero lower bounds are not supported"));
                    }
                    arcs.push((t, h));
                    costs.push(cost);
                    caps.push(cap);
                }
            }
            other => return Err(parse_err(line, format!("unknown line tag '{other}'"))),
        }
        if toks.next().is_some() {
            return Err(parse_err(line, "trailing fields"));
        }
    }
    let (nodes, arc_count) = header.ok_or_else(|| Error::Format("missing 'p min' line".into()))?;
    if arcs.len() != arc_count {
        return Err(Error::Validation(format!(
            "problem line declares {arc_count} arcs, file has {}",
            arcs.len()
        )));
    }
    let total_supply: f64 = supply.iter().filter(|v| **v > 0.0).sum();
    let binding = caps.iter().filter(|c| **c < total_supply).count();
    if binding > 0 {
        log::warn!("ignoring capacities: {binding} arcs have capacity below the total supply");
    }
    let graph = Graph::new(nodes, &arcs, costs)?;
    let load: Vec<f64> = supply
        .iter()
        .map(|f| if *f == 0.0 { 0.0 } else { -f })
        .collect();
    Problem::new(graph, load).map_err(|e| match e {
        Error::Infeasible(msg) => Error::Validation(msg),
        other => other,
    })
}

pub fn read_dimacs_mcf(path: impl AsRef<Path>) -> Result<Problem> {
    parse_dimacs(&fs::read_to_string(path)?)
}

/// Integral values print without a decimal point; anything else uses the
/// shortest representation that parses back to the same `f64`.
fn number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// DIMACS text with LF line endings. Capacities are set to the total
/// supply so they never bind.
pub fn to_dimacs(prob: &Problem) -> String {
    let g = prob.graph();
    let cap = prob.mass().ceil().max(1.0);
    let mut out = String::new();
    let _ = writeln!(out, "p min {} {}", g.node_count(), g.edge_count());
    for (v, b) in prob.load().iter().enumerate() {
        if *b != 0.0 {
            let _ = writeln!(out, "n {} {}", v + 1, number(-b));
        }
    }
    for (e, (t, h)) in g.edges().enumerate() {
        let _ = writeln!(
            out,
            "a {} {} 0 {} {}",
            t + 1,
            h + 1,
            number(cap),
            number(g.costs()[e])
        );
    }
    out
}

pub fn write_dimacs_mcf(prob: &Problem, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_dimacs(prob))?;
    Ok(())
}
