//! Random connected test graphs and balanced integer loads.
//!
//! Every random draw goes through `u64` ranges of a seeded ChaCha stream,
//! so outputs are identical across platforms for a given seed.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::problem::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Random spanning tree plus uniform extra edges under degree caps.
    Uniform,
    /// Preferential attachment (Barabasi-Albert). Experimental.
    Pref,
    /// Grid with inverse-square long-range links. Experimental.
    Kleinberg,
    /// Rewired ring lattice (Watts-Strogatz). Experimental.
    SmallWorld,
    /// Uniform random edge set G(m, M). Experimental.
    ErdosRenyi,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Pref => "pref",
            Family::Kleinberg => "kleinberg",
            Family::SmallWorld => "smallw",
            Family::ErdosRenyi => "erdrey",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Family::Uniform),
            "pref" => Ok(Family::Pref),
            "kleinberg" => Ok(Family::Kleinberg),
            "smallw" => Ok(Family::SmallWorld),
            "erdrey" => Ok(Family::ErdosRenyi),
            other => Err(Error::Param(format!("unknown graph family '{other}'"))),
        }
    }
}

/// Degrees refer to the underlying undirected simple graph; every
/// undirected edge becomes two opposite arcs with unit cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub node_count: usize,
    pub degree_min: usize,
    pub degree_max: usize,
    pub degree_avg: f64,
    pub seed: u64,
    pub family: Family,
}

impl GeneratorSpec {
    pub fn new(node_count: usize, seed: u64) -> Self {
        GeneratorSpec {
            node_count,
            degree_min: 1,
            degree_max: 10,
            degree_avg: 5.0,
            seed,
            family: Family::Uniform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::Param(format!(
                "need at least 2 nodes, got {}",
                self.node_count
            )));
        }
        let avg = self.degree_avg;
        if !(self.degree_min >= 1
            && self.degree_min as f64 <= avg
            && avg <= self.degree_max as f64
            && avg.is_finite())
        {
            return Err(Error::Param(format!(
                "degree bounds must satisfy 1 <= min <= avg <= max, got {} <= {} <= {}",
                self.degree_min, avg, self.degree_max
            )));
        }
        if self.family == Family::Uniform && self.degree_max < 2 && self.node_count > 2 {
            return Err(Error::Param(
                "a connected graph on more than 2 nodes needs degree_max >= 2".into(),
            ));
        }
        Ok(())
    }
}

fn below(rng: &mut ChaCha8Rng, n: usize) -> usize {
    rng.gen_range(0..n as u64) as usize
}

fn shuffle(rng: &mut ChaCha8Rng, v: &mut [usize]) {
    for i in (1..v.len()).rev() {
        let j = below(rng, i + 1);
        v.swap(i, j);
    }
}

struct EdgeSet {
    degree: Vec<usize>,
    seen: HashSet<(usize, usize)>,
    edges: Vec<(usize, usize)>,
}

impl EdgeSet {
    fn new(m: usize) -> Self {
        EdgeSet {
            degree: vec![0; m],
            seen: HashSet::new(),
            edges: Vec::new(),
        }
    }

    fn insert(&mut self, a: usize, b: usize) -> bool {
        if a == b || !self.seen.insert((a.min(b), a.max(b))) {
            return false;
        }
        self.degree[a] += 1;
        self.degree[b] += 1;
        self.edges.push((a, b));
        true
    }

    fn contains(&self, a: usize, b: usize) -> bool {
        self.seen.contains(&(a.min(b), a.max(b)))
    }

    /// Joins connected components by chaining one node of each.
    fn link_components(&mut self, m: usize) {
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut v: usize) -> usize {
            while p[v] != v {
                p[v] = p[p[v]];
                v = p[v];
            }
            v
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let mut reps = Vec::new();
        let mut seen_root = vec![false; m];
        for v in 0..m {
            let r = find(&mut parent, v);
            if !seen_root[r] {
                seen_root[r] = true;
                reps.push(v);
            }
        }
        for w in reps.windows(2) {
            self.insert(w[0], w[1]);
        }
    }

    fn into_graph(self, m: usize) -> Result<Graph> {
        let mut arcs = Vec::with_capacity(2 * self.edges.len());
        for (a, b) in self.edges {
            arcs.push((a, b));
            arcs.push((b, a));
        }
        Graph::with_unit_costs(m, &arcs)
    }
}

fn target_edges(m: usize, avg: f64) -> usize {
    let max_simple = m * (m - 1) / 2;
    ((avg * m as f64 / 2.0).round() as usize).clamp(m - 1, max_simple)
}

fn uniform(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<EdgeSet> {
    let m = spec.node_count;
    let cap = spec.degree_max;
    let target = target_edges(m, spec.degree_avg).min(cap * m / 2);
    let mut set = EdgeSet::new(m);
    let mut order: Vec<usize> = (0..m).collect();
    shuffle(rng, &mut order);
    for i in 1..m {
        let v = order[i];
        let mut parent = None;
        for _ in 0..32 {
            let u = order[below(rng, i)];
            if set.degree[u] < cap {
                parent = Some(u);
                break;
            }
        }
        let u = match parent {
            Some(u) => u,
            None => order[..i]
                .iter()
                .copied()
                .find(|&u| set.degree[u] < cap)
                .ok_or_else(|| Error::Param("degree cap too small for a spanning tree".into()))?,
        };
        set.insert(u, v);
    }
    let mut attempts = 0usize;
    let limit = 100 * target + 1000;
    while set.edges.len() < target && attempts < limit {
        attempts += 1;
        let a = below(rng, m);
        let b = below(rng, m);
        if a != b && set.degree[a] < cap && set.degree[b] < cap && !set.contains(a, b) {
            set.insert(a, b);
        }
    }
    if set.edges.len() < target {
        // Few free slots remain: enumerate them deterministically.
        let open: Vec<usize> = (0..m).filter(|&v| set.degree[v] < cap).collect();
        'outer: for (i, &a) in open.iter().enumerate() {
            for &b in &open[i + 1..] {
                if set.edges.len() >= target {
                    break 'outer;
                }
                if set.degree[a] < cap && set.degree[b] < cap {
                    set.insert(a, b);
                }
            }
        }
    }
    Ok(set)
}

fn preferential(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> EdgeSet {
    let m = spec.node_count;
    let r = ((spec.degree_avg / 2.0).round() as usize).max(1);
    let seed_size = (r + 1).min(m);
    let mut set = EdgeSet::new(m);
    let mut ends: Vec<usize> = Vec::new();
    for a in 0..seed_size {
        for b in a + 1..seed_size {
            set.insert(a, b);
            ends.extend([a, b]);
        }
    }
    for v in seed_size..m {
        let mut chosen = Vec::with_capacity(r);
        let mut tries = 0;
        while chosen.len() < r.min(v) && tries < 100 * r {
            tries += 1;
            let u = ends[below(rng, ends.len())];
            if !chosen.contains(&u) {
                chosen.push(u);
            }
        }
        for u in chosen {
            set.insert(u, v);
            ends.extend([u, v]);
        }
    }
    set
}

fn kleinberg(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> EdgeSet {
    let m = spec.node_count;
    let side = (m as f64).sqrt().ceil() as usize;
    let mut set = EdgeSet::new(m);
    for v in 0..m {
        let (r, c) = (v / side, v % side);
        if c + 1 < side && v + 1 < m {
            set.insert(v, v + 1);
        }
        if v + side < m {
            set.insert(v, v + side);
        }
        let _ = r;
    }
    let links = ((spec.degree_avg - 4.0) / 2.0).round().max(1.0) as usize;
    let max_dist = 2 * side;
    // P(distance d) is proportional to d * d^-2 = 1/d.
    let harmonic: Vec<f64> = (1..=max_dist).map(|d| 1.0 / d as f64).collect();
    let total: f64 = harmonic.iter().sum();
    for v in 0..m {
        let (r, c) = ((v / side) as i64, (v % side) as i64);
        for _ in 0..links {
            for _ in 0..20 {
                let mut u01 = rng.gen_range(0..1u64 << 53) as f64 / (1u64 << 53) as f64 * total;
                let mut d = 1;
                for (i, h) in harmonic.iter().enumerate() {
                    if u01 < *h {
                        d = i + 1;
                        break;
                    }
                    u01 -= h;
                }
                let dr = rng.gen_range(0..=d as u64) as i64;
                let dc = d as i64 - dr;
                let sr = if rng.gen_range(0..2u64) == 0 { 1 } else { -1 };
                let sc = if rng.gen_range(0..2u64) == 0 { 1 } else { -1 };
                let (tr, tc) = (r + sr * dr, c + sc * dc);
                if tr < 0 || tc < 0 || tc >= side as i64 {
                    continue;
                }
                let u = tr as usize * side + tc as usize;
                if u < m && set.insert(v, u) {
                    break;
                }
            }
        }
    }
    set
}

fn small_world(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> EdgeSet {
    let m = spec.node_count;
    let half = ((spec.degree_avg / 2.0).round() as usize)
        .clamp(1, (m - 1) / 2)
        .max(1);
    let mut set = EdgeSet::new(m);
    for v in 0..m {
        for j in 1..=half {
            let u = (v + j) % m;
            let target = if rng.gen_range(0..10u64) == 0 {
                // rewire with probability 0.1
                let mut w = below(rng, m);
                let mut tries = 0;
                while (w == v || set.contains(v, w)) && tries < 20 {
                    w = below(rng, m);
                    tries += 1;
                }
                w
            } else {
                u
            };
            set.insert(v, target);
        }
    }
    set
}

fn erdos_renyi(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> EdgeSet {
    let m = spec.node_count;
    let target = target_edges(m, spec.degree_avg);
    let mut set = EdgeSet::new(m);
    let mut attempts = 0;
    while set.edges.len() < target && attempts < 100 * target + 1000 {
        attempts += 1;
        set.insert(below(rng, m), below(rng, m));
    }
    set
}

/// Connected random graph. The uniform family honours the degree bounds;
/// the experimental families use `degree_avg` as their density and ignore
/// the caps.
pub fn generate_graph(spec: &GeneratorSpec) -> Result<Graph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = spec.node_count;
    let mut set = match spec.family {
        Family::Uniform => uniform(spec, &mut rng)?,
        Family::Pref => preferential(spec, &mut rng),
        Family::Kleinberg => kleinberg(spec, &mut rng),
        Family::SmallWorld => small_world(spec, &mut rng),
        Family::ErdosRenyi => erdos_renyi(spec, &mut rng),
    };
    if spec.family != Family::Uniform {
        set.link_components(m);
    }
    set.into_graph(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadSpec {
    pub nonzero_fraction: f64,
    pub seed: u64,
}

impl LoadSpec {
    pub fn new(seed: u64) -> Self {
        LoadSpec {
            nonzero_fraction: 0.1,
            seed,
        }
    }
}

/// Largest magnitude drawn for a source node.
pub const MAX_SUPPLY: u64 = 10;

/// Balanced integer load with `max(2, ceil(fraction m))` nonzeros. Sources
/// draw magnitudes in `1..=10`; their total is split into random positive
/// integer parts among the sinks, so the entries sum to exactly zero.
pub fn generate_load(m: usize, spec: &LoadSpec) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::Param(format!("need at least 2 nodes, got {m}")));
    }
    let f = spec.nonzero_fraction;
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::Param(format!(
            "nonzero fraction must lie in (0, 1], got {f}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = ((f * m as f64).ceil() as usize).clamp(2, m);
    let mut nodes: Vec<usize> = (0..m).collect();
    // partial Fisher-Yates: the first k entries are a uniform sample
    for i in 0..k {
        let j = i + below(&mut rng, m - i);
        nodes.swap(i, j);
    }
    let sinks = k / 2;
    let sources = k - sinks;
    let mut load = vec![0i64; m];
    let mut total = 0u64;
    for &v in &nodes[sinks..k] {
        let a = rng.gen_range(1..=MAX_SUPPLY);
        load[v] = -(a as i64);
        total += a;
    }
    debug_assert!(total >= sources as u64);
    // sinks - 1 distinct cut points in 1..total split total into positive parts
    let mut cuts: Vec<u64> = Vec::with_capacity(sinks);
    while cuts.len() + 1 < sinks {
        let c = rng.gen_range(1..total);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut prev = 0;
    for (i, &v) in nodes[..sinks].iter().enumerate() {
        let next = if i < cuts.len() { cuts[i] } else { total };
        load[v] = (next - prev) as i64;
        prev = next;
    }
    debug_assert_eq!(load.iter().sum::<i64>(), 0);
    Ok(load.into_iter().map(|v| v as f64).collect())
}

/// Graph and load drawn from independent streams derived from the same seed.
pub fn generate_problem(graph_spec: &GeneratorSpec, load_fraction: f64) -> Result<Problem> {
    let g = generate_graph(graph_spec)?;
    let load_spec = LoadSpec {
        nonzero_fraction: load_fraction,
        seed: graph_spec.seed ^ 0x9e37_79b9_7f4a_7c15,
    };
    let b = generate_load(g.node_count(), &load_spec)?;
    Problem::new(g, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn undirected_degrees(g: &Graph) -> Vec<usize> {
        g.degrees().into_iter().map(|d| d / 2).collect()
    }

    #[test]
    fn two_nodes() {
        let g = generate_graph(&GeneratorSpec::new(2, 1)).unwrap();
        assert_eq!(undirected_degrees(&g), vec![1, 1]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn deterministic_and_bounded() {
        let spec = GeneratorSpec::new(1000, 7);
        let a = generate_graph(&spec).unwrap();
        let b = generate_graph(&spec).unwrap();
        assert_eq!(a, b);
        let deg = undirected_degrees(&a);
        assert!(deg.iter().all(|&d| (1..=10).contains(&d)));
        let mean = deg.iter().sum::<usize>() as f64 / 1000.0;
        assert!((4.5..=5.5).contains(&mean), "{mean}");
        assert_eq!(a.component_count(), 1);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_graph(&GeneratorSpec::new(1, 0)).is_err());
        let mut s = GeneratorSpec::new(10, 0);
        s.degree_avg = 11.0;
        assert!(generate_graph(&s).is_err());
    }

    #[test]
    fn families_are_connected() {
        for fam in [
            Family::Pref,
            Family::Kleinberg,
            Family::SmallWorld,
            Family::ErdosRenyi,
        ] {
            let mut s = GeneratorSpec::new(300, 3);
            s.family = fam;
            let g = generate_graph(&s).unwrap();
            assert_eq!(g.component_count(), 1, "{fam}");
            let mean = g.edge_count() as f64 / 300.0;
            assert!(mean > 2.0 && mean < 10.0, "{fam}: {mean}");
        }
    }

    #[test]
    fn load_small_case() {
        let b = generate_load(10, &LoadSpec::new(5)).unwrap();
        let nz: Vec<f64> = b.iter().copied().filter(|v| *v != 0.0).collect();
        assert_eq!(nz.len(), 2);
        assert_eq!(nz[0], -nz[1]);
    }

    #[test]
    fn load_balance_and_support() {
        for seed in 0..20 {
            let b = generate_load(1000, &LoadSpec::new(seed)).unwrap();
            assert_eq!(b.iter().sum::<f64>(), 0.0);
            assert_eq!(b.iter().filter(|v| **v != 0.0).count(), 100);
            assert!(b.iter().all(|v| v.fract() == 0.0));
        }
        assert_eq!(
            generate_load(1000, &LoadSpec::new(3)).unwrap(),
            generate_load(1000, &LoadSpec::new(3)).unwrap()
        );
    }
}
