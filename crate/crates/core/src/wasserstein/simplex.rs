//! Primal network simplex for the uniform transportation problem.
//!
//! The bipartite graph is complete, so arcs are never materialized: arc
//! `i → j` has cost `‖a_i − b_j‖²`, computed on demand from the point
//! coordinates. Supplies and demands are the integer unit masses
//! `L/N_a` and `L/N_b` (`L = lcm`), so feasibility is exact and every basic
//! solution has integer flows.
//!
//! The starting basis is a monotone (northwest-corner) matching taken in
//! Hilbert-curve order. Pivoting is block search over reduced costs in a
//! deterministic arc order; for 2-D instances the scan runs as a two-pass
//! unrolled minimum over `sink_term[j] − 2(x_i·bx[j] + y_i·by[j])`, with the
//! sink terms maintained incrementally as potentials change. A full sweep
//! without a candidate proves optimality, and a pivot cap guards against
//! cycling — hitting it is reported as non-convergence, never as an
//! approximate value.

use nalgebra::DMatrix;

use super::unit_masses;
use crate::error::{Error, Result};

/// Basic cell of the transportation tableau.
#[derive(Debug, Clone, Copy)]
struct Cell {
    source: usize,
    sink: usize,
    flow: i64,
}

struct Tree {
    root: usize,
    /// Parent node; the root is its own parent.
    parent: Vec<u32>,
    /// Flow (units) on the edge to the parent.
    pred_flow: Vec<i64>,
    depth: Vec<u32>,
    potential: Vec<f64>,
    children: Vec<Vec<u32>>,
}

pub(super) struct Solver<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DMatrix<f64>,
    na: usize,
    nb: usize,
    total_units: i64,
    tree: Tree,
    eps: f64,
    /// 2-D fast-path data; empty in the generic path.
    ax: Vec<f64>,
    ay: Vec<f64>,
    bx: Vec<f64>,
    by: Vec<f64>,
    /// `bx² + by²` per sink (constant).
    b_norm: Vec<f64>,
    /// `b_norm[j] − π_{sink j}`, kept in sync with potential updates.
    sink_term: Vec<f64>,
}

#[inline]
fn cost_between(a: &DMatrix<f64>, i: usize, b: &DMatrix<f64>, j: usize) -> f64 {
    let dim = a.ncols();
    if dim == 2 {
        let dx = a[(i, 0)] - b[(j, 0)];
        let dy = a[(i, 1)] - b[(j, 1)];
        return dx * dx + dy * dy;
    }
    let mut acc = 0.0;
    for d in 0..dim {
        let diff = a[(i, d)] - b[(j, d)];
        acc += diff * diff;
    }
    acc
}

/// Cost of the arc underlying tree edge `(node, parent)`; sources sit below
/// `na`, sinks at `na + j`.
#[inline]
fn edge_cost(a: &DMatrix<f64>, b: &DMatrix<f64>, na: usize, node: usize, parent: usize) -> f64 {
    if node < na {
        cost_between(a, node, b, parent - na)
    } else {
        cost_between(a, parent, b, node - na)
    }
}

/// Squared diameter of the joint bounding box: upper bound on any arc cost.
fn cost_scale(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let dim = a.ncols();
    let mut acc = 0.0;
    for d in 0..dim {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..a.nrows() {
            lo = lo.min(a[(i, d)]);
            hi = hi.max(a[(i, d)]);
        }
        for j in 0..b.nrows() {
            lo = lo.min(b[(j, d)]);
            hi = hi.max(b[(j, d)]);
        }
        let span = hi - lo;
        acc += span * span;
    }
    acc
}

/// Hilbert index of a quantized point (standard rotate-and-accumulate form).
fn hilbert_index(mut x: u32, mut y: u32) -> u64 {
    const SIDE: u32 = 1 << 16;
    let mut d: u64 = 0;
    let mut s = SIDE / 2;
    while s > 0 {
        let rx = u32::from(x & s > 0);
        let ry = u32::from(y & s > 0);
        d += (s as u64) * (s as u64) * ((3 * rx) ^ ry) as u64;
        if ry == 0 {
            if rx == 1 {
                x = SIDE - 1 - x;
                y = SIDE - 1 - y;
            }
            std::mem::swap(&mut x, &mut y);
        }
        s /= 2;
    }
    d
}

/// Spatially-local traversal order: Hilbert curve for 2-D points, sort by
/// the first coordinate otherwise.
fn spatial_order(a: &DMatrix<f64>, b: &DMatrix<f64>, points: &DMatrix<f64>) -> Vec<usize> {
    let n = points.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    if points.ncols() == 2 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for m in [a, b] {
            for i in 0..m.nrows() {
                for d in 0..2 {
                    lo[d] = lo[d].min(m[(i, d)]);
                    hi[d] = hi[d].max(m[(i, d)]);
                }
            }
        }
        let span = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let quantize = |v: f64, d: usize| -> u32 {
            let t = ((v - lo[d]) / span[d]).clamp(0.0, 1.0);
            (t * 65535.0) as u32
        };
        let keys: Vec<u64> = (0..n)
            .map(|i| hilbert_index(quantize(points[(i, 0)], 0), quantize(points[(i, 1)], 1)))
            .collect();
        idx.sort_by_key(|&i| (keys[i], i));
    } else {
        idx.sort_by(|&p, &q| points[(p, 0)].total_cmp(&points[(q, 0)]).then(p.cmp(&q)));
    }
    idx
}

/// Monotone matching along the given traversal orders: the northwest-corner
/// staircase on relabeled indices. Always `na + nb − 1` cells forming a
/// spanning tree (degenerate zero-flow cells included on ties).
fn monotone_basis(order_a: &[usize], order_b: &[usize], unit_a: i64, unit_b: i64) -> Vec<Cell> {
    let (na, nb) = (order_a.len(), order_b.len());
    let mut cells = Vec::with_capacity(na + nb - 1);
    let (mut i, mut j) = (0usize, 0usize);
    let mut rem_a = unit_a;
    let mut rem_b = unit_b;
    loop {
        let flow = rem_a.min(rem_b);
        cells.push(Cell {
            source: order_a[i],
            sink: order_b[j],
            flow,
        });
        rem_a -= flow;
        rem_b -= flow;
        if i == na - 1 && j == nb - 1 {
            break;
        }
        if rem_a == 0 && i < na - 1 {
            i += 1;
            rem_a = unit_a;
        } else {
            j += 1;
            rem_b = unit_b;
        }
    }
    debug_assert_eq!(cells.len(), na + nb - 1);
    cells
}

/// Minimum of `term[j] − 2(xi·bx[j] + yi·by[j])` over a contiguous run,
/// unrolled into four independent lanes so it compiles to packed mins.
#[inline]
fn run_min(term: &[f64], bx: &[f64], by: &[f64], xi2: f64, yi2: f64) -> f64 {
    let mut m0 = f64::INFINITY;
    let mut m1 = f64::INFINITY;
    let mut m2 = f64::INFINITY;
    let mut m3 = f64::INFINITY;
    let chunks = term.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        m0 = m0.min(term[k] - (xi2 * bx[k] + yi2 * by[k]));
        m1 = m1.min(term[k + 1] - (xi2 * bx[k + 1] + yi2 * by[k + 1]));
        m2 = m2.min(term[k + 2] - (xi2 * bx[k + 2] + yi2 * by[k + 2]));
        m3 = m3.min(term[k + 3] - (xi2 * bx[k + 3] + yi2 * by[k + 3]));
    }
    let mut m = m0.min(m1).min(m2.min(m3));
    for k in 4 * chunks..term.len() {
        m = m.min(term[k] - (xi2 * bx[k] + yi2 * by[k]));
    }
    m
}

impl<'a> Solver<'a> {
    fn node_count(&self) -> usize {
        self.na + self.nb
    }

    /// Builds the rooted tree from the staircase cells. Rooting at the first
    /// source of the staircase makes every zero-flow cell's arc point toward
    /// the root (its child end is a source), i.e. the basis starts strongly
    /// feasible.
    fn build_initial_tree(&mut self, root: usize, cells: &[Cell]) {
        let v = self.node_count();
        let (a, b, na) = (self.a, self.b, self.na);
        let mut adjacency: Vec<Vec<(u32, i64)>> = vec![Vec::new(); v];
        for cell in cells {
            let s = cell.source;
            let t = na + cell.sink;
            adjacency[s].push((t as u32, cell.flow));
            adjacency[t].push((s as u32, cell.flow));
        }
        let tree = &mut self.tree;
        tree.root = root;
        tree.parent[root] = root as u32;
        tree.depth[root] = 0;
        tree.potential[root] = 0.0;
        let mut stack = vec![root];
        let mut seen = vec![false; v];
        seen[root] = true;
        while let Some(node) = stack.pop() {
            for &(next, flow) in &adjacency[node] {
                let next = next as usize;
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                tree.parent[next] = node as u32;
                tree.pred_flow[next] = flow;
                tree.depth[next] = tree.depth[node] + 1;
                let c = edge_cost(a, b, na, next, node);
                // rc(s→t) = c + π_s − π_t vanishes on tree arcs.
                tree.potential[next] = if next < na {
                    tree.potential[node] - c
                } else {
                    tree.potential[node] + c
                };
                tree.children[node].push(next as u32);
                stack.push(next);
            }
        }
        debug_assert!(seen.iter().all(|&s| s));
        if !self.sink_term.is_empty() {
            for j in 0..self.nb {
                self.sink_term[j] = self.b_norm[j] - self.tree.potential[na + j];
            }
        }
    }

    /// One primal pivot on entering arc `source → sink_node`.
    fn pivot(&mut self, source: usize, sink_node: usize) {
        let (a, b, na) = (self.a, self.b, self.na);
        let tree = &mut self.tree;

        // Locate the apex (lowest common ancestor).
        let apex = {
            let (mut u, mut v) = (source, sink_node);
            while tree.depth[u] > tree.depth[v] {
                u = tree.parent[u] as usize;
            }
            while tree.depth[v] > tree.depth[u] {
                v = tree.parent[v] as usize;
            }
            while u != v {
                u = tree.parent[u] as usize;
                v = tree.parent[v] as usize;
            }
            u
        };

        // Max push: flow decreases on sink-side edges held by sink nodes and
        // on source-side edges held by source nodes.
        let mut theta = i64::MAX;
        let mut node = sink_node;
        while node != apex {
            if node >= na {
                theta = theta.min(tree.pred_flow[node]);
            }
            node = tree.parent[node] as usize;
        }
        let mut node = source;
        while node != apex {
            if node < na {
                theta = theta.min(tree.pred_flow[node]);
            }
            node = tree.parent[node] as usize;
        }
        debug_assert!(theta != i64::MAX, "cycle must contain a decreasing edge");

        // Leaving arc: the last blocking arc when the cycle is traversed from
        // the apex in the entering direction (apex → source, arc, sink →
        // apex). Keeps the basis strongly feasible, so degenerate pivots
        // cannot cycle. Sink-side blockers override source-side ones; on the
        // sink side the last hit is the one nearest the apex, on the source
        // side the one nearest the entering source.
        let mut leaving = usize::MAX; // node whose pred edge leaves the basis
        let mut leaving_on_sink_side = false;
        let mut node = source;
        while node != apex {
            if node < na && tree.pred_flow[node] == theta && leaving == usize::MAX {
                leaving = node;
                leaving_on_sink_side = false;
            }
            node = tree.parent[node] as usize;
        }
        let mut node = sink_node;
        while node != apex {
            if node >= na && tree.pred_flow[node] == theta {
                leaving = node;
                leaving_on_sink_side = true;
            }
            node = tree.parent[node] as usize;
        }
        debug_assert!(leaving != usize::MAX);

        // Apply the flow change around the cycle.
        let mut node = sink_node;
        while node != apex {
            if node < na {
                tree.pred_flow[node] += theta;
            } else {
                tree.pred_flow[node] -= theta;
            }
            node = tree.parent[node] as usize;
        }
        let mut node = source;
        while node != apex {
            if node < na {
                tree.pred_flow[node] -= theta;
            } else {
                tree.pred_flow[node] += theta;
            }
            node = tree.parent[node] as usize;
        }

        // Re-hang the subtree cut off by the leaving edge: reverse the parent
        // chain from the entering endpoint inside that subtree up to the
        // leaving node, then recompute potentials and depths below it.
        let (enter_inside, enter_outside) = if leaving_on_sink_side {
            (sink_node, source)
        } else {
            (source, sink_node)
        };

        let mut chain = Vec::new();
        let mut node = enter_inside;
        loop {
            chain.push(node);
            if node == leaving {
                break;
            }
            node = tree.parent[node] as usize;
        }
        let leaving_parent = tree.parent[leaving] as usize;
        tree.children[leaving_parent].retain(|&c| c as usize != leaving);
        for w in (1..chain.len()).rev() {
            let child = chain[w];
            let new_parent = chain[w - 1];
            tree.children[child].retain(|&c| c as usize != new_parent);
            tree.children[new_parent].push(child as u32);
            tree.parent[child] = new_parent as u32;
        }
        // Edge flows shift one step along the reversed chain.
        for w in (1..chain.len()).rev() {
            tree.pred_flow[chain[w]] = tree.pred_flow[chain[w - 1]];
        }
        tree.parent[enter_inside] = enter_outside as u32;
        tree.pred_flow[enter_inside] = theta;
        tree.children[enter_outside].push(enter_inside as u32);

        // Recompute potentials and depths in the re-hung subtree. The DFS
        // re-derives each potential from its parent, so no drift accumulates
        // in place.
        let track_sinks = !self.sink_term.is_empty();
        let mut stack = vec![enter_inside];
        while let Some(n) = stack.pop() {
            let parent = tree.parent[n] as usize;
            let c = edge_cost(a, b, na, n, parent);
            if n < na {
                tree.potential[n] = tree.potential[parent] - c;
            } else {
                tree.potential[n] = tree.potential[parent] + c;
                if track_sinks {
                    self.sink_term[n - na] = self.b_norm[n - na] - tree.potential[n];
                }
            }
            tree.depth[n] = tree.depth[parent] + 1;
            for &child in &tree.children[n] {
                stack.push(child as usize);
            }
        }
    }

    fn run(&mut self) -> Result<()> {
        let arc_count = self.na * self.nb;
        let block = ((arc_count as f64).sqrt() as usize).max(64).min(arc_count);
        let max_pivots: u64 = 10_000 + 300 * self.node_count() as u64;
        let mut pivots: u64 = 0;
        let mut cursor = 0usize;
        let two_d = !self.sink_term.is_empty();
        loop {
            let mut best_rc = -self.eps;
            let mut best_arc = usize::MAX;
            let mut scanned = 0usize;
            // Sweep blocks until a candidate shows up or the sweep wraps.
            while scanned < arc_count {
                let chunk = block.min(arc_count - scanned);
                if two_d {
                    self.scan_chunk_2d(&mut cursor, chunk, &mut best_rc, &mut best_arc);
                } else {
                    self.scan_chunk_generic(&mut cursor, chunk, &mut best_rc, &mut best_arc);
                }
                scanned += chunk;
                if best_arc != usize::MAX {
                    break;
                }
            }
            if best_arc == usize::MAX {
                return Ok(()); // full sweep, no candidate: optimal
            }
            let source = best_arc / self.nb;
            let sink_node = self.na + best_arc % self.nb;
            // A tree arc can only show up through round-off; skip it.
            if self.tree.parent[sink_node] as usize == source
                || self.tree.parent[source] as usize == sink_node
            {
                continue;
            }
            self.pivot(source, sink_node);
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::NonConvergence(format!(
                    "network simplex exceeded {max_pivots} pivots on a {}x{} instance",
                    self.na, self.nb
                )));
            }
        }
    }

    /// 2-D chunk scan: per-row two-pass minimum over the dot-product form
    /// `rc = (x_i² + y_i² + π_i) + sink_term[j] − 2(x_i bx[j] + y_i by[j])`.
    fn scan_chunk_2d(&self, cursor: &mut usize, chunk: usize, best_rc: &mut f64, best_arc: &mut usize) {
        let nb = self.nb;
        let mut i = *cursor / nb;
        let mut j = *cursor % nb;
        let mut remaining = chunk;
        while remaining > 0 {
            let run = remaining.min(nb - j);
            let (xi, yi) = (self.ax[i], self.ay[i]);
            let base = xi * xi + yi * yi + self.tree.potential[i];
            let term = &self.sink_term[j..j + run];
            let bx = &self.bx[j..j + run];
            let by = &self.by[j..j + run];
            let m = run_min(term, bx, by, 2.0 * xi, 2.0 * yi);
            if base + m < *best_rc {
                // Second pass pins down the first index attaining the min.
                for (off, ((&t, &px), &py)) in term.iter().zip(bx).zip(by).enumerate() {
                    let rc = t - (2.0 * xi * px + 2.0 * yi * py);
                    if rc <= m {
                        *best_rc = base + rc;
                        *best_arc = i * nb + j + off;
                        break;
                    }
                }
            }
            remaining -= run;
            j += run;
            if j == nb {
                j = 0;
                i += 1;
                if i == self.na {
                    i = 0;
                }
            }
        }
        *cursor = i * nb + j;
    }

    fn scan_chunk_generic(&self, cursor: &mut usize, chunk: usize, best_rc: &mut f64, best_arc: &mut usize) {
        let nb = self.nb;
        let mut i = *cursor / nb;
        let mut j = *cursor % nb;
        let pot = &self.tree.potential;
        let mut pot_i = pot[i];
        for _ in 0..chunk {
            let rc = cost_between(self.a, i, self.b, j) + pot_i - pot[self.na + j];
            if rc < *best_rc {
                *best_rc = rc;
                *best_arc = i * nb + j;
            }
            j += 1;
            if j == nb {
                j = 0;
                i += 1;
                if i == self.na {
                    i = 0;
                }
                pot_i = pot[i];
            }
        }
        *cursor = i * nb + j;
    }

    fn objective(&self) -> f64 {
        let mut units = 0.0;
        for node in 0..self.node_count() {
            if node == self.tree.root {
                continue;
            }
            let flow = self.tree.pred_flow[node];
            if flow != 0 {
                units += flow as f64
                    * edge_cost(self.a, self.b, self.na, node, self.tree.parent[node] as usize);
            }
        }
        units / self.total_units as f64
    }

    fn plan(&self) -> Vec<(usize, usize, f64)> {
        let mut triples = Vec::new();
        for node in 0..self.node_count() {
            if node == self.tree.root {
                continue;
            }
            let flow = self.tree.pred_flow[node];
            if flow == 0 {
                continue;
            }
            let parent = self.tree.parent[node] as usize;
            let (i, j) = if node < self.na {
                (node, parent - self.na)
            } else {
                (parent, node - self.na)
            };
            triples.push((i, j, flow as f64 / self.total_units as f64));
        }
        triples.sort_unstable_by_key(|t| (t.0, t.1));
        triples
    }
}

/// Optimal squared cost (mass-normalized) plus the optional coupling.
pub(super) type Solution = (f64, Option<Vec<(usize, usize, f64)>>);

/// Solves the uniform transportation problem exactly.
pub(super) fn solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    want_plan: bool,
) -> Result<Solution> {
    let (na, nb) = (a.nrows(), b.nrows());
    let (unit_a, unit_b, total_units) = unit_masses(na, nb);
    let v = na + nb;
    let two_d = a.ncols() == 2;
    let mut solver = Solver {
        a,
        b,
        na,
        nb,
        total_units,
        tree: Tree {
            root: 0,
            parent: vec![0; v],
            pred_flow: vec![0; v],
            depth: vec![0; v],
            potential: vec![0.0; v],
            children: vec![Vec::new(); v],
        },
        eps: 1e-11 * (1.0 + cost_scale(a, b)),
        ax: if two_d { a.column(0).iter().copied().collect() } else { Vec::new() },
        ay: if two_d { a.column(1).iter().copied().collect() } else { Vec::new() },
        bx: if two_d { b.column(0).iter().copied().collect() } else { Vec::new() },
        by: if two_d { b.column(1).iter().copied().collect() } else { Vec::new() },
        b_norm: Vec::new(),
        sink_term: Vec::new(),
    };
    if two_d {
        solver.b_norm = (0..nb)
            .map(|j| solver.bx[j] * solver.bx[j] + solver.by[j] * solver.by[j])
            .collect();
        solver.sink_term = vec![0.0; nb];
    }
    let order_a = spatial_order(a, b, a);
    let order_b = spatial_order(a, b, b);
    let cells = monotone_basis(&order_a, &order_b, unit_a, unit_b);
    solver.build_initial_tree(order_a[0], &cells);
    solver.run()?;
    let plan = want_plan.then(|| solver.plan());
    Ok((solver.objective(), plan))
}
