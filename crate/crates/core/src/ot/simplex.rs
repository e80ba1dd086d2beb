//! Transportation simplex (network simplex on the complete bipartite graph).
//!
//! The basis is a spanning tree of the bipartite row/column graph with exactly
//! `n + m − 1` cells, degenerate zero-flow cells included. Pricing is Dantzig's
//! most-negative reduced cost; after a run of degenerate pivots the solver
//! switches to Bland's rule until the next non-degenerate pivot.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const DEGENERATE_RUN_BEFORE_BLAND: usize = 64;
const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SimplexSolution<T> {
    /// `(row, column, flow)` for every basic cell, zero flows included.
    pub basis: Vec<(usize, usize, T)>,
    pub pivots: usize,
}

struct Tree<T> {
    rows: usize,
    cols: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<T>,
    // basic slot of each cell, NONE when non-basic
    slot: Vec<usize>,
}

impl<T: Scalar> Tree<T> {
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.rows + self.cols];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push(k);
            adj[self.rows + j].push(k);
        }
        adj
    }

    fn other_end(&self, slot: usize, node: usize) -> usize {
        let (i, j) = self.cells[slot];
        if node == i {
            self.rows + j
        } else {
            i
        }
    }

    fn potentials(&self, cost: &[T], adj: &[Vec<usize>]) -> (Vec<T>, Vec<T>) {
        let (n, m) = (self.rows, self.cols);
        let mut u = vec![T::nan(); n];
        let mut v = vec![T::nan(); m];
        let mut seen = vec![false; n + m];
        let mut queue = VecDeque::from([0usize]);
        u[0] = T::zero();
        seen[0] = true;
        while let Some(node) = queue.pop_front() {
            for &k in &adj[node] {
                let next = self.other_end(k, node);
                if seen[next] {
                    continue;
                }
                let (i, j) = self.cells[k];
                let c = cost[i * m + j];
                if next < n {
                    u[next] = c - v[j];
                } else {
                    v[next - n] = c - u[i];
                }
                seen[next] = true;
                queue.push_back(next);
            }
        }
        (u, v)
    }

    /// Basic slots on the tree path from row `i` to column `j`, starting at row `i`.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let root = self.rows + j;
        let mut parent_slot = vec![NONE; self.rows + self.cols];
        let mut seen = vec![false; self.rows + self.cols];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(node) = queue.pop_front() {
            if node == i {
                break;
            }
            for &k in &adj[node] {
                let next = self.other_end(k, node);
                if !seen[next] {
                    seen[next] = true;
                    parent_slot[next] = k;
                    queue.push_back(next);
                }
            }
        }
        let mut out = Vec::new();
        let mut node = i;
        while node != root {
            let k = parent_slot[node];
            debug_assert_ne!(k, NONE, "basis tree is not spanning");
            out.push(k);
            node = self.other_end(k, node);
        }
        out
    }
}

/// Northwest-corner basic feasible solution in the given index order.
fn northwest_corner<T: Scalar>(supply: &[T], demand: &[T]) -> Tree<T> {
    let (n, m) = (supply.len(), demand.len());
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let mut cells = Vec::with_capacity(n + m - 1);
    let mut flow = Vec::with_capacity(n + m - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = ra[i].min(rb[j]).max(T::zero());
        cells.push((i, j));
        flow.push(x);
        ra[i] = ra[i] - x;
        rb[j] = rb[j] - x;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if i == n - 1 {
            j += 1;
        } else if j == m - 1 || ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    let mut slot = vec![NONE; n * m];
    for (k, &(i, j)) in cells.iter().enumerate() {
        slot[i * m + j] = k;
    }
    Tree {
        rows: n,
        cols: m,
        cells,
        flow,
        slot,
    }
}

/// Solves `min Σ c_ij x_ij` subject to row sums `supply`, column sums `demand`,
/// `x ≥ 0`. `cost` is row-major `n × m`.
pub fn solve_transport<T: Scalar>(supply: &[T], demand: &[T], cost: &[T]) -> Result<SimplexSolution<T>> {
    let (n, m) = (supply.len(), demand.len());
    if n == 0 || m == 0 {
        return Err(Error::EmptyCloud);
    }
    assert_eq!(cost.len(), n * m, "cost matrix must be n × m");

    let mut tree = northwest_corner(supply, demand);
    let cmax = cost.iter().fold(T::zero(), |a, &c| a.max(c.abs()));
    let tol = T::epsilon() * T::lit(64.0) * (cmax + T::one());
    let max_pivots = 50 * n * m + 1000;
    let mut degenerate_run = 0usize;

    for pivots in 0..max_pivots {
        let adj = tree.adjacency();
        let (u, v) = tree.potentials(cost, &adj);
        let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;

        let mut entering = None;
        let mut best = -tol;
        'price: for i in 0..n {
            for j in 0..m {
                if tree.slot[i * m + j] != NONE {
                    continue;
                }
                let r = cost[i * m + j] - u[i] - v[j];
                if r < best {
                    entering = Some((i, j));
                    if bland {
                        break 'price;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let basis = tree
                .cells
                .iter()
                .zip(&tree.flow)
                .map(|(&(i, j), &f)| (i, j, f))
                .collect();
            return Ok(SimplexSolution { basis, pivots });
        };

        let path = tree.path(&adj, ei, ej);
        // Signs alternate along the path, starting with "−" at row ei.
        let mut theta = T::infinity();
        let mut leaving = NONE;
        for &k in path.iter().step_by(2) {
            let f = tree.flow[k];
            let better = f < theta || (f == theta && leaving != NONE && tree.cells[k] < tree.cells[leaving]);
            if better {
                theta = f;
                leaving = k;
            }
        }
        theta = theta.max(T::zero());
        for (pos, &k) in path.iter().enumerate() {
            tree.flow[k] = if pos % 2 == 0 {
                (tree.flow[k] - theta).max(T::zero())
            } else {
                tree.flow[k] + theta
            };
        }
        let (li, lj) = tree.cells[leaving];
        tree.slot[li * m + lj] = NONE;
        tree.cells[leaving] = (ei, ej);
        tree.flow[leaving] = theta;
        tree.slot[ei * m + ej] = leaving;

        if theta > T::zero() {
            degenerate_run = 0;
        } else {
            degenerate_run += 1;
        }
    }
    Err(Error::SolverStalled { iterations: max_pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn objective(sol: &SimplexSolution<f64>, cost: &[f64], m: usize) -> f64 {
        sol.basis.iter().map(|&(i, j, f)| f * cost[i * m + j]).sum()
    }

    #[test]
    fn textbook_instance() {
        // Classic 3×4 balanced instance with known optimum 435.
        let supply = [15.0, 25.0, 10.0];
        let demand = [5.0, 15.0, 15.0, 15.0];
        let cost = [
            10.0, 2.0, 20.0, 11.0, //
            12.0, 7.0, 9.0, 20.0, //
            4.0, 14.0, 16.0, 18.0,
        ];
        let sol = solve_transport(&supply, &demand, &cost).unwrap();
        assert_eq!(sol.basis.len(), 6);
        assert!((objective(&sol, &cost, 4) - 435.0).abs() < 1e-9);
    }

    #[test]
    fn single_row() {
        let sol = solve_transport(&[1.0], &[0.25, 0.75], &[1.0, 2.0]).unwrap();
        assert!((objective(&sol, &[1.0, 2.0], 2) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn marginals_hold_on_degenerate_instance() {
        // Equal unit masses produce many degenerate pivots.
        let n = 6;
        let supply = vec![1.0 / n as f64; n];
        let cost: Vec<f64> = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                ((i as f64) - (n - 1 - j) as f64).powi(2)
            })
            .collect();
        let sol = solve_transport(&supply, &supply, &cost).unwrap();
        assert!(objective(&sol, &cost, n).abs() < 1e-14);
        let mut rows = vec![0.0; n];
        let mut cols = vec![0.0; n];
        for &(i, j, f) in &sol.basis {
            rows[i] += f;
            cols[j] += f;
        }
        for k in 0..n {
            assert!((rows[k] - supply[k]).abs() < 1e-14);
            assert!((cols[k] - supply[k]).abs() < 1e-14);
        }
    }
}
