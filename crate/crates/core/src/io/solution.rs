//! Plain-text solution files.
//!
//! ```text
//! c optional comments
//! s <objective>
//! f <edge> <flow>        (1-based edge index, one line per edge)
//! d <node> <potential>   (1-based node index, one line per node)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub objective: f64,
    pub flow: Vec<f64>,
    pub potential: Vec<f64>,
}

impl SolutionFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "s {}", self.objective);
        for (e, x) in self.flow.iter().enumerate() {
            let _ = writeln!(out, "f {} {x}", e + 1);
        }
        for (v, y) in self.potential.iter().enumerate() {
            let _ = writeln!(out, "d {} {y}", v + 1);
        }
        out
    }

    /// Every edge and node must appear exactly once.
    pub fn parse(text: &str, edges: usize, nodes: usize) -> Result<Self> {
        let mut objective = None;
        let mut flow = vec![None; edges];
        let mut potential = vec![None; nodes];
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |msg: String| Error::Parse { line, msg };
            let toks: Vec<&str> = raw.split_whitespace().collect();
            let Some(&tag) = toks.first() else { continue };
            let num = |i: usize| -> Result<f64> {
                let t = toks.get(i).ok_or_else(|| err("missing field".into()))?;
                t.parse().map_err(|_| err(format!("invalid number '{t}'")))
            };
            let slot = |i: usize, len: usize| -> Result<usize> {
                let t = toks.get(i).ok_or_else(|| err("missing index".into()))?;
                match t.parse::<usize>() {
                    Ok(k) if k >= 1 && k <= len => Ok(k - 1),
                    _ => Err(err(format!("index '{t}' outside 1..={len}"))),
                }
            };
            let expect = match tag {
                "c" => continue,
                "s" => {
                    if objective.replace(num(1)?).is_some() {
                        return Err(err("duplicate objective line".into()));
                    }
                    2
                }
                "f" | "d" => {
                    let (vec, len) = if tag == "f" {
                        (&mut flow, edges)
                    } else {
                        (&mut potential, nodes)
                    };
                    let k = slot(1, len)?;
                    if vec[k].replace(num(2)?).is_some() {
                        return Err(err(format!("duplicate entry for index {}", k + 1)));
                    }
                    3
                }
                other => return Err(err(format!("unknown line tag '{other}'"))),
            };
            if toks.len() != expect {
                return Err(err("wrong number of fields".into()));
            }
        }
        let collect = |v: Vec<Option<f64>>, what: &str| -> Result<Vec<f64>> {
            v.into_iter()
                .enumerate()
                .map(|(i, x)| x.ok_or_else(|| Error::Format(format!("missing {what} {}", i + 1))))
                .collect()
        };
        Ok(SolutionFile {
            objective: objective.ok_or_else(|| Error::Format("missing objective line".into()))?,
            flow: collect(flow, "flow for edge")?,
            potential: collect(potential, "potential for node")?,
        })
    }
}

pub fn write_solution(sol: &SolutionFile, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, sol.to_text())?;
    Ok(())
}

pub fn read_solution(path: impl AsRef<Path>, edges: usize, nodes: usize) -> Result<SolutionFile> {
    SolutionFile::parse(&fs::read_to_string(path)?, edges, nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = SolutionFile {
            objective: 2.0000000001,
            flow: vec![1.0, 0.1 + 0.2],
            potential: vec![0.0, -1.5, 1e-300],
        };
        assert_eq!(SolutionFile::parse(&s.to_text(), 2, 3).unwrap(), s);
    }

    #[test]
    fn rejects_incomplete_or_bad() {
        assert!(SolutionFile::parse("s 1\nf 1 1\n", 1, 1).is_err());
        assert!(SolutionFile::parse("s 1\nf 2 1\nd 1 0\n", 1, 1).is_err());
        assert!(SolutionFile::parse("s 1\nf 1 1\nf 1 1\nd 1 0\n", 1, 1).is_err());
        assert!(SolutionFile::parse("s x\n", 0, 0).is_err());
    }
}
