use crate::error::{check_len, Error, Result};
use crate::graph::Graph;

/// Transport instance: minimize `c^T x` subject to `A x = b`, `x >= 0`.
/// `b` is the signed load (positive where mass arrives).
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    graph: Graph,
    load: Vec<f64>,
}

impl Problem {
    /// Rejects loads that do not sum to zero (up to `1e-12` of their
    /// 1-norm) with [`Error::Infeasible`].
    pub fn new(graph: Graph, load: Vec<f64>) -> Result<Self> {
        check_len(graph.node_count(), load.len())?;
        if load.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "load vector has non-finite entries".into(),
            ));
        }
        let total: f64 = load.iter().sum();
        let l1: f64 = load.iter().map(|v| v.abs()).sum();
        if total.abs() > 1e-12 * l1 {
            return Err(Error::Infeasible(format!(
                "load vector sums to {total:e}, not zero"
            )));
        }
        Ok(Problem { graph, load })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn costs(&self) -> &[f64] {
        self.graph.costs()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn load_l1(&self) -> f64 {
        self.load.iter().map(|v| v.abs()).sum()
    }

    /// Total mass moved: half the 1-norm of the load.
    pub fn mass(&self) -> f64 {
        0.5 * self.load_l1()
    }

    pub fn objective(&self, flow: &[f64]) -> f64 {
        self.costs().iter().zip(flow).map(|(c, x)| c * x).sum()
    }

    /// Copy with the load scaled to unit mass. A zero load is returned as is.
    pub fn normalized(&self) -> Problem {
        let mass = self.mass();
        if mass == 0.0 {
            return self.clone();
        }
        Problem {
            graph: self.graph.clone(),
            load: self.load.iter().map(|v| v / mass).collect(),
        }
    }

    /// Scaling constant `max(||A||_inf, ||b||_1, ||c||_1)` of the stopping test.
    pub fn scale(&self) -> f64 {
        let c1: f64 = self.costs().iter().map(|v| v.abs()).sum();
        self.graph.incidence_inf_norm().max(self.load_l1()).max(c1)
    }
}
