//! Matrix Market coordinate files read as undirected graphs.
//!
//! Each off-diagonal entry `(i, j)` becomes an undirected edge, emitted as
//! two opposite arcs.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MtxOptions {
    /// Keep only the largest connected component instead of failing.
    pub largest_component: bool,
    /// Use `|a_ij|` as the arc cost instead of 1 (ignored for pattern files).
    pub weighted: bool,
}

#[derive(Debug, Clone)]
pub struct MtxGraph {
    pub graph: Graph,
    pub self_loops_dropped: usize,
    pub duplicates_merged: usize,
    /// Nodes removed by the largest-component extraction.
    pub nodes_dropped: usize,
    /// Original 0-based index of every kept node.
    pub original_index: Vec<usize>,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_matrix_market(text: &str, opts: MtxOptions) -> Result<MtxGraph> {
    let mut lines = text.lines().enumerate();
    let (_, banner) = lines
        .next()
        .ok_or_else(|| Error::Format("empty Matrix Market file".into()))?;
    let words: Vec<String> = banner
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(Error::Format(format!("bad banner '{banner}'")));
    }
    if words[2] != "coordinate" {
        return Err(Error::Format(format!("unsupported storage '{}'", words[2])));
    }
    let field = words[3].as_str();
    if !matches!(field, "pattern" | "real" | "integer") {
        return Err(Error::Format(format!("unsupported field '{field}'")));
    }
    if words[4] != "symmetric" {
        return Err(Error::Format(format!(
            "expected a symmetric matrix, got '{}'",
            words[4]
        )));
    }
    let weighted = opts.weighted && field != "pattern";

    let mut size: Option<(usize, usize)> = None;
    let mut read = 0usize;
    let mut self_loops = 0usize;
    let mut duplicates = 0usize;
    let mut seen = HashSet::new();
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let Some((dim, entries)) = size else {
            if toks.len() != 3 {
                return Err(parse_err(line, "expected 'rows cols entries'"));
            }
            let nums: Vec<usize> = toks
                .iter()
                .map(|t| {
                    t.parse()
                        .map_err(|_| parse_err(line, format!("invalid size '{t}'")))
                })
                .collect::<Result<_>>()?;
            if nums[0] != nums[1] || nums[0] == 0 {
                return Err(Error::Format(format!(
                    "expected a nonempty square matrix, got {} x {}",
                    nums[0], nums[1]
                )));
            }
            size = Some((nums[0], nums[2]));
            continue;
        };
        let want = if field == "pattern" { 2 } else { 3 };
        if toks.len() != want {
            return Err(parse_err(line, format!("expected {want} fields")));
        }
        read += 1;
        if read > entries {
            return Err(parse_err(line, "more entries than declared"));
        }
        let idx = |t: &str| -> Result<usize> {
            let v: usize = t
                .parse()
                .map_err(|_| parse_err(line, format!("invalid index '{t}'")))?;
            if v == 0 || v > dim {
                return Err(parse_err(line, format!("index {v} outside 1..={dim}")));
            }
            Ok(v - 1)
        };
        let (i, j) = (idx(toks[0])?, idx(toks[1])?);
        let val = if want == 3 {
            let v: f64 = toks[2]
                .parse()
                .map_err(|_| parse_err(line, format!("invalid value '{}'", toks[2])))?;
            if !v.is_finite() {
                return Err(parse_err(line, "non-finite value"));
            }
            v
        } else {
            1.0
        };
        if i == j {
            self_loops += 1;
            continue;
        }
        if !seen.insert((i.min(j), i.max(j))) {
            duplicates += 1;
            continue;
        }
        pairs.push((i, j, val.abs()));
    }
    let (dim, entries) = size.ok_or_else(|| Error::Format("missing size line".into()))?;
    if read != entries {
        return Err(Error::Format(format!(
            "declared {entries} entries, found {read}"
        )));
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} diagonal entries");
    }

    let mut arcs = Vec::with_capacity(2 * pairs.len());
    let mut cost = Vec::with_capacity(2 * pairs.len());
    for &(i, j, v) in &pairs {
        let c = if weighted { v } else { 1.0 };
        arcs.extend([(j, i), (i, j)]);
        cost.extend([c, c]);
    }
    let full = Graph::new_unchecked_connectivity(dim, &arcs, cost)?;
    let (count, label) = full.components();
    if count == 1 {
        return Ok(MtxGraph {
            graph: full,
            self_loops_dropped: self_loops,
            duplicates_merged: duplicates,
            nodes_dropped: 0,
            original_index: (0..dim).collect(),
        });
    }
    if !opts.largest_component {
        return Err(Error::Disconnected { components: count });
    }
    let mut sizes = vec![0usize; count];
    for &l in &label {
        sizes[l] += 1;
    }
    // ties go to the component containing the smallest node index
    let keep = (0..count)
        .max_by_key(|&l| (sizes[l], std::cmp::Reverse(l)))
        .unwrap_or(0);
    let mut new_index = vec![usize::MAX; dim];
    let mut original_index = Vec::new();
    for v in 0..dim {
        if label[v] == keep {
            new_index[v] = original_index.len();
            original_index.push(v);
        }
    }
    let mut kept_arcs = Vec::new();
    let mut kept_cost = Vec::new();
    for (e, (t, h)) in full.edges().enumerate() {
        if label[t] == keep {
            kept_arcs.push((new_index[t], new_index[h]));
            kept_cost.push(full.costs()[e]);
        }
    }
    let graph = Graph::new(original_index.len(), &kept_arcs, kept_cost)?;
    Ok(MtxGraph {
        graph,
        self_loops_dropped: self_loops,
        duplicates_merged: duplicates,
        nodes_dropped: dim - original_index.len(),
        original_index,
    })
}

pub fn read_matrix_market_edges(path: impl AsRef<Path>, opts: MtxOptions) -> Result<MtxGraph> {
    parse_matrix_market(&fs::read_to_string(path)?, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_pattern() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% path\n3 3 2\n2 1\n3 2\n";
        let m = parse_matrix_market(text, MtxOptions::default()).unwrap();
        assert_eq!(m.graph.node_count(), 3);
        assert_eq!(m.graph.edge_count(), 4);
        assert_eq!(m.graph.degrees(), vec![2, 4, 2]);
    }

    #[test]
    fn self_loops_and_duplicates() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n3 3 5\n1 1 4.0\n2 1 -1\n1 2 -1\n3 2 -2\n3 3 1\n";
        let m = parse_matrix_market(
            text,
            MtxOptions {
                weighted: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.self_loops_dropped, 2);
        assert_eq!(m.duplicates_merged, 1);
        assert_eq!(m.graph.costs(), &[1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn rejects_general() {
        let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 1\n2 1\n";
        assert!(matches!(
            parse_matrix_market(text, MtxOptions::default()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn largest_component() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n5 5 3\n2 1\n3 2\n5 4\n";
        assert!(matches!(
            parse_matrix_market(text, MtxOptions::default()),
            Err(Error::Disconnected { components: 2 })
        ));
        let m = parse_matrix_market(
            text,
            MtxOptions {
                largest_component: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.graph.node_count(), 3);
        assert_eq!(m.nodes_dropped, 2);
        assert_eq!(m.original_index, vec![0, 1, 2]);
    }
}
