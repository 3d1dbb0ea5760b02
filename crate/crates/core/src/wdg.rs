//! Weighted dependency graphs and the cycle-product sufficient condition.
//!
//! The graph of `ẋ = f(x)` has one node per state variable and an edge
//! `j → i` weighted by `∂f_i/∂x_j` whenever that partial is nonzero. The
//! condition holds when the product of weights along every simple directed
//! cycle (self-loops included) is a constant polynomial; closed walks
//! decompose into simple cycles, so this covers every cycle of the graph.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_traits::Zero;

use crate::automorphism::ElementaryGen;
use crate::error::{check_dim, Error, Result};
use crate::linalg::Matrix;
use crate::poly::{Polynomial, VectorField};

pub const DEFAULT_CYCLE_CAP: usize = 1_000_000;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: Polynomial,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DepGraph {
    n: usize,
    /// Sorted by `(from, to)`.
    edges: Vec<Edge>,
}

impl DepGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, from: usize, to: usize) -> Option<&Polynomial> {
        self.edges
            .binary_search_by(|e| (e.from, e.to).cmp(&(from, to)))
            .ok()
            .map(|i| &self.edges[i].weight)
    }

    fn successors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.from].push(e.to);
        }
        adj
    }

    /// Graphviz rendering; `cycles`, when given, are listed as comments
    /// annotated with whether their product is constant.
    pub fn to_dot<S: AsRef<str>>(&self, names: &[S], cycles: Option<&[Cycle]>) -> String {
        let mut out = String::from("digraph wdg {\n");
        for name in names.iter().take(self.n) {
            let _ = writeln!(out, "  \"{}\";", name.as_ref());
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                names[e.from].as_ref(),
                names[e.to].as_ref(),
                e.weight.render(names)
            );
        }
        for c in cycles.unwrap_or(&[]) {
            let path: Vec<&str> = c.nodes.iter().map(|&v| names[v].as_ref()).collect();
            let _ = writeln!(
                out,
                "  // cycle {} product={} constant={}",
                path.join(" -> "),
                c.product.render(names),
                c.is_constant()
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Edge `j → i` for every nonzero `∂f_i/∂x_j`.
pub fn build_graph(f: &VectorField) -> DepGraph {
    let n = f.dim();
    let jac = f.jacobian();
    let mut edges = Vec::new();
    for from in 0..n {
        for (to, row) in jac.iter().enumerate() {
            if !row[from].is_zero() {
                edges.push(Edge {
                    from,
                    to,
                    weight: row[from].clone(),
                });
            }
        }
    }
    DepGraph { n, edges }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cycle {
    /// Distinct nodes, smallest first; the closing edge returns to `nodes[0]`.
    pub nodes: Vec<usize>,
    pub product: Polynomial,
}

impl Cycle {
    pub fn is_constant(&self) -> bool {
        self.product.is_constant()
    }
}

/// All simple directed cycles, each once, in a deterministic order.
pub fn enumerate_simple_cycles(g: &DepGraph) -> Vec<Cycle> {
    enumerate_simple_cycles_capped(g, usize::MAX).expect("no cap")
}

pub fn enumerate_simple_cycles_capped(g: &DepGraph, cap: usize) -> Result<Vec<Cycle>> {
    let adj = g.successors();
    let raw = johnson_circuits(g.n, &adj, cap)?;
    Ok(raw
        .into_iter()
        .map(|nodes| {
            let mut product = Polynomial::one(g.n);
            for (k, &from) in nodes.iter().enumerate() {
                let to = nodes[(k + 1) % nodes.len()];
                let w = g.weight(from, to).expect("cycle follows graph edges");
                product = &product * w;
            }
            Cycle { nodes, product }
        })
        .collect())
}

/// Johnson's elementary-circuit enumeration. For each start vertex `s` the
/// search runs inside the strongly connected component of `s` in the
/// subgraph induced by vertices `>= s`, so every circuit is reported once,
/// rooted at its smallest vertex.
fn johnson_circuits(n: usize, adj: &[Vec<usize>], cap: usize) -> Result<Vec<Vec<usize>>> {
    struct Search<'a> {
        adj: &'a [Vec<usize>],
        in_comp: Vec<bool>,
        blocked: Vec<bool>,
        block_map: Vec<BTreeSet<usize>>,
        stack: Vec<usize>,
        start: usize,
        out: Vec<Vec<usize>>,
        cap: usize,
    }

    impl Search<'_> {
        fn unblock(&mut self, u: usize) {
            self.blocked[u] = false;
            let waiting = std::mem::take(&mut self.block_map[u]);
            for w in waiting {
                if self.blocked[w] {
                    self.unblock(w);
                }
            }
        }

        fn circuit(&mut self, v: usize) -> Result<bool> {
            let mut found = false;
            self.stack.push(v);
            self.blocked[v] = true;
            for &w in &self.adj[v] {
                if !self.in_comp[w] {
                    continue;
                }
                if w == self.start {
                    if self.out.len() >= self.cap {
                        return Err(Error::CycleCap(self.cap));
                    }
                    self.out.push(self.stack.clone());
                    found = true;
                } else if !self.blocked[w] && self.circuit(w)? {
                    found = true;
                }
            }
            if found {
                self.unblock(v);
            } else {
                for &w in &self.adj[v] {
                    if self.in_comp[w] {
                        self.block_map[w].insert(v);
                    }
                }
            }
            self.stack.pop();
            Ok(found)
        }
    }

    let mut search = Search {
        adj,
        in_comp: vec![false; n],
        blocked: vec![false; n],
        block_map: vec![BTreeSet::new(); n],
        stack: Vec::new(),
        start: 0,
        out: Vec::new(),
        cap,
    };
    for s in 0..n {
        let comp = component_of(s, adj, |v| v >= s);
        if comp.len() == 1 && !adj[s].contains(&s) {
            continue;
        }
        search.in_comp.iter_mut().for_each(|b| *b = false);
        for &v in &comp {
            search.in_comp[v] = true;
            search.blocked[v] = false;
            search.block_map[v].clear();
        }
        search.start = s;
        search.circuit(s)?;
    }
    Ok(search.out)
}

/// Strongly connected component containing `root` among vertices accepted by `keep`.
fn component_of(root: usize, adj: &[Vec<usize>], keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let n = adj.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut todo = vec![root];
        seen[root] = true;
        while let Some(v) = todo.pop() {
            for u in 0..n {
                let linked = if forward {
                    adj[v].contains(&u)
                } else {
                    adj[u].contains(&v)
                };
                if linked && keep(u) && !seen[u] {
                    seen[u] = true;
                    todo.push(u);
                }
            }
        }
        seen
    };
    let fwd = reach(true);
    let bwd = reach(false);
    (0..n).filter(|&v| fwd[v] && bwd[v]).collect()
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WdgReport {
    pub graph: DepGraph,
    pub cycles: Vec<Cycle>,
    pub satisfied: bool,
    /// Index into `cycles` of the first cycle with a non-constant product.
    pub offending: Option<usize>,
}

impl WdgReport {
    pub fn offending_cycle(&self) -> Option<&Cycle> {
        self.offending.map(|i| &self.cycles[i])
    }
}

pub fn check_wdg(f: &VectorField) -> Result<WdgReport> {
    check_wdg_capped(f, DEFAULT_CYCLE_CAP)
}

pub fn check_wdg_capped(f: &VectorField, cap: usize) -> Result<WdgReport> {
    let graph = build_graph(f);
    let cycles = enumerate_simple_cycles_capped(&graph, cap)?;
    let offending = cycles.iter().position(|c| !c.is_constant());
    Ok(WdgReport {
        graph,
        satisfied: offending.is_none(),
        cycles,
        offending,
    })
}

/// Output of [`wdg_stabilize`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Stabilization {
    /// `p(y) = y_n - g(y_1, …, y_{n-1})`.
    pub observable: Polynomial,
    /// Dynamics of `z = (y_1, …, y_{n-1}, w, y_n)` with `w = p(y)`.
    pub lifted: VectorField,
    pub report: WdgReport,
}

/// Stabilizing observable for the image of `ẋ = A x` under an elementary
/// map targeting the last coordinate. The lifted state is
/// `z = (y_1, …, y_{n-1}, w, y_n)` with `ż_{1..n} = A z_{1..n}` and
/// `ż_{n+1} = [A z_{1..n}]_n + Σ_{i<n} Σ_j ∂g/∂z_i A_ij z_j`.
pub fn wdg_stabilize(a: &Matrix, phi: &ElementaryGen) -> Result<Stabilization> {
    let n = phi.dim();
    check_dim("stabilize matrix rows", n, a.rows())?;
    check_dim("stabilize matrix cols", n, a.cols())?;
    if phi.target() + 1 != n {
        return Err(Error::Argument(format!(
            "elementary map must target the last coordinate (x{n}); retarget with a permutation first"
        )));
    }
    let g = phi.perturbation();
    let observable = &Polynomial::var(n, n - 1) - g;

    let big = n + 1;
    let z: Vec<Polynomial> = (0..n).map(|j| Polynomial::var(big, j)).collect();
    let az = a.mul_polys(&z)?;
    let g_big = g.extend_vars(big);
    let mut last = az[n - 1].clone();
    for (i, az_i) in az.iter().enumerate().take(n - 1) {
        let dg = g_big.partial_derivative(i)?;
        if !dg.is_zero() && !az_i.is_zero() {
            last = &last + &(&dg * az_i);
        }
    }
    let mut components = az;
    components.push(last);
    let lifted = VectorField::from_components(big, components)?;
    let report = check_wdg(&lifted)?;
    Ok(Stabilization {
        observable,
        lifted,
        report,
    })
}

/// Whether `a_{in} = 0` for every `i ≠ n` (the last column vanishes off the
/// diagonal). Under this hypothesis the image of `ẋ = A x` through any
/// elementary map targeting `x_n` satisfies the cycle condition.
pub fn linear_part_admissible(a: &Matrix) -> bool {
    last_column_vanishes(a, false)
}

/// Last-column test; with `include_diagonal` the entry `a_{nn}` must vanish too.
pub fn last_column_vanishes(a: &Matrix, include_diagonal: bool) -> bool {
    let n = a.rows();
    if n == 0 || !a.is_square() {
        return false;
    }
    (0..n)
        .filter(|&i| include_diagonal || i != n - 1)
        .all(|i| a.get(i, n - 1).is_zero())
}
