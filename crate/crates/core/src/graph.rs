//! Bipartite factor graph between coefficient and measurement nodes.

use crate::matrix::SparseSignMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub var: usize,
    pub con: usize,
    pub sign: i8,
}

/// Flat edge list in row-major order with per-node index ranges.
///
/// Constraint `c` owns edges `con_ptr[c]..con_ptr[c + 1]`; the edges touching
/// variable `v` are `var_edges[var_ptr[v]..var_ptr[v + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorGraph {
    n_var: usize,
    n_con: usize,
    edges: Vec<Edge>,
    con_ptr: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
}

impl FactorGraph {
    pub fn n_var(&self) -> usize {
        self.n_var
    }

    pub fn n_con(&self) -> usize {
        self.n_con
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn con_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.con_ptr[c]..self.con_ptr[c + 1]
    }

    pub fn var_edges(&self, v: usize) -> &[usize] {
        &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
    }

    /// Rebuilds the matrix the graph was derived from.
    pub fn to_matrix(&self, seed: u64) -> crate::Result<SparseSignMatrix> {
        let rows = (0..self.n_con)
            .map(|c| {
                self.edges[self.con_edges(c)]
                    .iter()
                    .map(|e| (e.var, e.sign))
                    .collect()
            })
            .collect();
        SparseSignMatrix::from_rows(self.n_var, rows, seed)
    }
}

pub fn build_graph(phi: &SparseSignMatrix) -> FactorGraph {
    let (m, n) = (phi.m(), phi.n());
    let mut edges = Vec::with_capacity(phi.nnz());
    let mut con_ptr = Vec::with_capacity(m + 1);
    con_ptr.push(0);
    for j in 0..m {
        edges.extend(phi.row(j).iter().map(|&(c, s)| Edge {
            var: c,
            con: j,
            sign: s,
        }));
        con_ptr.push(edges.len());
    }
    let mut var_ptr = vec![0usize; n + 1];
    for e in &edges {
        var_ptr[e.var + 1] += 1;
    }
    for v in 0..n {
        var_ptr[v + 1] += var_ptr[v];
    }
    let mut fill = var_ptr.clone();
    let mut var_edges = vec![0usize; edges.len()];
    for (k, e) in edges.iter().enumerate() {
        var_edges[fill[e.var]] = k;
        fill[e.var] += 1;
    }
    FactorGraph {
        n_var: n,
        n_con: m,
        edges,
        con_ptr,
        var_ptr,
        var_edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{generate_matrix, MatrixParams};

    #[test]
    fn small_graph() {
        let phi = SparseSignMatrix::from_rows(3, vec![vec![(0, 1), (2, -1)], vec![(1, 1), (2, 1)]], 0)
            .unwrap();
        let g = build_graph(&phi);
        assert_eq!(g.edges().len(), 4);
        assert_eq!(g.var_edges(2).len(), 2);
        assert_eq!(g.edges()[1], Edge { var: 2, con: 0, sign: -1 });
    }

    #[test]
    fn consistent_with_matrix() {
        let phi = generate_matrix(&MatrixParams {
            n: 90,
            m: 36,
            l: 5,
            regular_columns: true,
            seed: 12,
        })
        .unwrap();
        let g = build_graph(&phi);
        assert_eq!(g.edges().len(), 5 * 36);
        for v in 0..90 {
            let from_graph: Vec<(usize, i8)> = g
                .var_edges(v)
                .iter()
                .map(|&k| (g.edges()[k].con, g.edges()[k].sign))
                .collect();
            assert_eq!(from_graph, phi.col(v));
        }
        for c in 0..36 {
            assert_eq!(g.con_edges(c).len(), 5);
        }
        assert_eq!(g.to_matrix(phi.seed()).unwrap(), phi);
    }
}
