//! The walk kernels: simple random walk on a network, the non-backtracking
//! walk and its partial-reversal perturbation on directed edges, and the
//! window-constrained walks on path states, together with their state-space
//! enumeration, stuck-state analysis, reversal accessibility, and the line
//! graphs supporting their transitions.

use crate::error::{Error, Result};
use crate::graph::{Graph, Network, Vertex};
use crate::kernel::Kernel;
use crate::ratio::{rone, Rat};
use crate::space::{dart_space, Dart, PathState, ReversalClasses, Reversible, StateSpace};
use num_traits::Zero;
use std::collections::{HashMap, VecDeque};
use std::rc::Rc;

/// Weighted simple random walk: from `u`, move along an incident edge with
/// probability proportional to its conductance. Reversible w.r.t. the vertex
/// weights (verified on construction).
pub fn srw_kernel(net: &Network) -> Result<Kernel<Vertex>> {
    let g = net.graph();
    if !g.is_connected() {
        return Err(Error::InvalidParameter("network must be connected".into()));
    }
    if let Some(v) = (0..g.n()).find(|&v| g.degree(v) == 0) {
        return Err(Error::InvalidParameter(format!("isolated vertex {v}")));
    }
    let space = Rc::new(StateSpace::new((0..g.n()).collect())?);
    let mut rows = Vec::with_capacity(g.n());
    for u in 0..g.n() {
        let cu = net.vertex_weight(u);
        let row = g
            .incident(u)
            .iter()
            .map(|&(w, e)| (w, net.conductance(e) / &cu))
            .collect();
        rows.push(row);
    }
    let kernel = Kernel::new(space, rows)?;
    let pi: Vec<Rat> = (0..g.n()).map(|v| net.vertex_weight(v)).collect();
    kernel.check_reversible(&pi)?;
    Ok(kernel)
}

/// Non-backtracking walk on directed edges: from `(x, y)`, move uniformly to
/// `(y, w)` with `w != x`; a degree-1 head forces the backtrack `(y, x)`.
pub fn nbrw_kernel(g: &Graph) -> Result<Kernel<Dart>> {
    if g.edge_count() == 0 {
        return Err(Error::EmptyEdgeList);
    }
    if !g.is_connected() {
        return Err(Error::InvalidParameter("graph must be connected".into()));
    }
    let space = Rc::new(dart_space(g));
    let mut rows = Vec::with_capacity(space.len());
    for (_, d) in space.iter() {
        let (x, y) = (d.tail, d.head);
        let deg = g.degree(y);
        if deg == 1 {
            rows.push(vec![(space.require(&Dart::new(y, x))?, rone())]);
        } else {
            let w = Rat::new(1.into(), (deg as i64 - 1).into());
            let row = g
                .neighbors(y)
                .filter(|&z| z != x)
                .map(|z| Ok((space.require(&Dart::new(y, z))?, w.clone())))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
    }
    Kernel::new(space, rows)
}

/// The reversal permutation as a kernel on an existing dart space.
pub fn reversal_kernel<S: Reversible>(space: Rc<StateSpace<S>>) -> Result<Kernel<S>> {
    let rev = space.reversal_permutation()?;
    let rows = rev.into_iter().map(|j| vec![(j, rone())]).collect();
    Kernel::new(space, rows)
}

/// Partial-reversal walk: with probability `p` reverse the current edge,
/// otherwise take a non-backtracking step.
pub fn pbrw_kernel(g: &Graph, p: &Rat) -> Result<Kernel<Dart>> {
    if *p <= Rat::zero() || *p >= rone() {
        return Err(Error::InvalidParameter(format!(
            "reversal probability must lie strictly between 0 and 1, got {}",
            crate::ratio::format_rat(p)
        )));
    }
    let b = nbrw_kernel(g)?;
    let r = reversal_kernel(b.space().clone())?;
    Kernel::mixture(&[(rone() - p, &b), (p.clone(), &r)])
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum WalkMode {
    Edge,
    Vertex,
}

impl WalkMode {
    pub fn label(self) -> &'static str {
        match self {
            WalkMode::Edge => "edge",
            WalkMode::Vertex => "vertex",
        }
    }
}

/// Whether appending `v` to the window `gamma` uses an edge (resp. vertex)
/// absent from the window.
fn is_fresh(g: &Graph, mode: WalkMode, gamma: &PathState, v: Vertex) -> bool {
    match mode {
        WalkMode::Vertex => !gamma.0.contains(&v),
        WalkMode::Edge => {
            let new_edge = g.edge_id(gamma.last(), v);
            !gamma
                .0
                .windows(2)
                .any(|w| g.edge_id(w[0], w[1]) == new_edge)
        }
    }
}

/// All one-step extensions `A(gamma)`, in neighbor order.
fn extensions(g: &Graph, gamma: &PathState) -> Vec<PathState> {
    g.neighbors(gamma.last()).map(|v| gamma.advanced(v)).collect()
}

/// The fresh extensions `N(gamma)`; the walk is stuck when this is empty.
fn fresh_extensions(g: &Graph, mode: WalkMode, gamma: &PathState) -> Vec<PathState> {
    g.neighbors(gamma.last())
        .filter(|&v| is_fresh(g, mode, gamma, v))
        .map(|v| gamma.advanced(v))
        .collect()
}

/// Whether all `k` traversed edges (resp. all `k + 1` vertices) are distinct.
pub(crate) fn is_distinct(g: &Graph, mode: WalkMode, gamma: &PathState) -> bool {
    match mode {
        WalkMode::Vertex => {
            let mut vs = gamma.0.clone();
            vs.sort_unstable();
            vs.windows(2).all(|w| w[0] != w[1])
        }
        WalkMode::Edge => {
            let mut es: Vec<Option<usize>> = gamma
                .0
                .windows(2)
                .map(|w| g.edge_id(w[0], w[1]))
                .collect();
            es.sort_unstable();
            es.windows(2).all(|w| w[0] != w[1])
        }
    }
}

/// The path-state spaces for window length `k`: all length-`k` walks, the
/// edge-distinct and vertex-distinct ones, and the forward closures of the
/// distinct sets under the two walk dynamics.
#[derive(Clone, Debug)]
pub struct PathSpaceReport {
    pub k: usize,
    pub all: Vec<PathState>,
    pub edge_distinct: Vec<PathState>,
    pub vertex_distinct: Vec<PathState>,
    pub reachable_edge: Vec<PathState>,
    pub reachable_vertex: Vec<PathState>,
}

impl PathSpaceReport {
    pub fn distinct(&self, mode: WalkMode) -> &[PathState] {
        match mode {
            WalkMode::Edge => &self.edge_distinct,
            WalkMode::Vertex => &self.vertex_distinct,
        }
    }

    pub fn reachable(&self, mode: WalkMode) -> &[PathState] {
        match mode {
            WalkMode::Edge => &self.reachable_edge,
            WalkMode::Vertex => &self.reachable_vertex,
        }
    }

    /// State space over the forward closure, distinct states first.
    pub fn state_space(&self, mode: WalkMode) -> Result<Rc<StateSpace<PathState>>> {
        Ok(Rc::new(StateSpace::new(self.reachable(mode).to_vec())?))
    }
}

fn enumerate_all_paths(g: &Graph, k: usize, cap: usize) -> Result<Vec<PathState>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vertex> = Vec::with_capacity(k + 1);
    fn rec(
        g: &Graph,
        k: usize,
        cap: usize,
        stack: &mut Vec<Vertex>,
        out: &mut Vec<PathState>,
    ) -> Result<()> {
        if stack.len() == k + 1 {
            if out.len() >= cap {
                return Err(Error::StateSpaceCap {
                    estimate: out.len() + 1,
                    cap,
                });
            }
            out.push(PathState(stack.clone()));
            return Ok(());
        }
        let last = *stack.last().unwrap();
        for v in g.neighbors(last) {
            stack.push(v);
            rec(g, k, cap, stack, out)?;
            stack.pop();
        }
        Ok(())
    }
    for v in 0..g.n() {
        stack.push(v);
        rec(g, k, cap, &mut stack, &mut out)?;
        stack.pop();
    }
    Ok(out)
}

fn forward_closure(
    g: &Graph,
    mode: WalkMode,
    seeds: &[PathState],
    cap: usize,
) -> Result<Vec<PathState>> {
    let mut seen: HashMap<PathState, usize> = HashMap::new();
    let mut order: Vec<PathState> = Vec::new();
    let mut queue: VecDeque<PathState> = VecDeque::new();
    for s in seeds {
        if !seen.contains_key(s) {
            seen.insert(s.clone(), order.len());
            order.push(s.clone());
            queue.push_back(s.clone());
        }
    }
    while let Some(gamma) = queue.pop_front() {
        let fresh = fresh_extensions(g, mode, &gamma);
        let nexts = if fresh.is_empty() {
            extensions(g, &gamma)
        } else {
            fresh
        };
        for nx in nexts {
            if !seen.contains_key(&nx) {
                if order.len() >= cap {
                    return Err(Error::StateSpaceCap {
                        estimate: order.len() + 1,
                        cap,
                    });
                }
                seen.insert(nx.clone(), order.len());
                order.push(nx.clone());
                queue.push_back(nx.clone());
            }
        }
    }
    Ok(order)
}

/// Enumerates every path-state set for window length `k`. The cap guards the
/// enumeration; the rejection carries the size estimate
/// `n * d * (d - 1)^(k - 1)` with `d` the maximum degree.
pub fn enumerate_path_space(g: &Graph, k: usize, cap: usize) -> Result<PathSpaceReport> {
    if k == 0 {
        return Err(Error::InvalidParameter("window length must be >= 1".into()));
    }
    let d = g.max_degree();
    let mut estimate: usize = g.n().saturating_mul(d);
    for _ in 1..k {
        estimate = estimate.saturating_mul(d.saturating_sub(1).max(1));
    }
    if estimate > cap {
        return Err(Error::StateSpaceCap { estimate, cap });
    }
    let all = enumerate_all_paths(g, k, cap)?;
    let edge_distinct: Vec<PathState> = all
        .iter()
        .filter(|p| is_distinct(g, WalkMode::Edge, p))
        .cloned()
        .collect();
    let vertex_distinct: Vec<PathState> = all
        .iter()
        .filter(|p| is_distinct(g, WalkMode::Vertex, p))
        .cloned()
        .collect();
    let reachable_edge = forward_closure(g, WalkMode::Edge, &edge_distinct, cap)?;
    let reachable_vertex = forward_closure(g, WalkMode::Vertex, &vertex_distinct, cap)?;
    Ok(PathSpaceReport {
        k,
        all,
        edge_distinct,
        vertex_distinct,
        reachable_edge,
        reachable_vertex,
    })
}

/// The window-constrained walk: uniform over the fresh extensions when some
/// exist, otherwise uniform over all extensions.
pub fn knbrw_kernel(
    g: &Graph,
    report: &PathSpaceReport,
    mode: WalkMode,
) -> Result<Kernel<PathState>> {
    let space = report.state_space(mode)?;
    let mut rows = Vec::with_capacity(space.len());
    for (_, gamma) in space.iter() {
        let fresh = fresh_extensions(g, mode, gamma);
        let moves = if fresh.is_empty() {
            extensions(g, gamma)
        } else {
            fresh
        };
        let w = Rat::new(1.into(), (moves.len() as i64).into());
        let row = moves
            .iter()
            .map(|nx| Ok((space.require(nx)?, w.clone())))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Kernel::new(space, rows)
}

/// Convenience wrapper: enumerate and build the walk in one call.
pub fn knbrw(
    g: &Graph,
    k: usize,
    mode: WalkMode,
    cap: usize,
) -> Result<(Kernel<PathState>, PathSpaceReport)> {
    let report = enumerate_path_space(g, k, cap)?;
    let kernel = knbrw_kernel(g, &report, mode)?;
    Ok((kernel, report))
}

/// Stuck-state analysis of the window walk, together with the degree-based
/// sufficient criteria.
#[derive(Clone, Debug)]
pub struct StuckReport {
    /// No state of the forward closure has an empty fresh-extension set.
    pub never_stuck: bool,
    /// Stuck states in the forward closure.
    pub stuck_states: Vec<PathState>,
    /// Minimum degree at least `k + 1` (vertex mode) resp.
    /// `ceil(2k/3) + 1` (edge mode); implies `never_stuck`.
    pub min_degree_criterion: bool,
    /// Edge mode only: every degree even or at least `ceil(2k/3) + 1`. This
    /// does not empty the stuck set, but guarantees the walk started at any
    /// non-stuck distinct state never meets a stuck state.
    pub even_or_large_criterion: Option<bool>,
    /// No stuck state is reachable from a non-stuck distinct state.
    pub stuck_free_from_valid_starts: bool,
}

pub fn stuck_check(g: &Graph, k: usize, mode: WalkMode, cap: usize) -> Result<StuckReport> {
    let report = enumerate_path_space(g, k, cap)?;
    let space = report.state_space(mode)?;
    let stuck: Vec<bool> = space
        .states()
        .iter()
        .map(|gamma| fresh_extensions(g, mode, gamma).is_empty())
        .collect();
    let stuck_states: Vec<PathState> = space
        .states()
        .iter()
        .zip(&stuck)
        .filter(|(_, s)| **s)
        .map(|(p, _)| p.clone())
        .collect();
    let threshold = match mode {
        WalkMode::Vertex => k + 1,
        WalkMode::Edge => (2 * k).div_ceil(3) + 1,
    };
    let min_degree_criterion = g.min_degree() >= threshold;
    let even_or_large_criterion = match mode {
        WalkMode::Edge => Some(
            (0..g.n()).all(|v| g.degree(v) % 2 == 0 || g.degree(v) >= threshold),
        ),
        WalkMode::Vertex => None,
    };
    // Forward reachability from the non-stuck distinct states.
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut seen = vec![false; space.len()];
    for p in report.distinct(mode) {
        let i = space.require(p)?;
        if !stuck[i] && !seen[i] {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    let mut reachable_stuck = false;
    while let Some(i) = queue.pop_front() {
        let gamma = space.state(i);
        let fresh = fresh_extensions(g, mode, gamma);
        let nexts = if fresh.is_empty() {
            extensions(g, gamma)
        } else {
            fresh
        };
        for nx in nexts {
            let j = space.require(&nx)?;
            if stuck[j] {
                reachable_stuck = true;
            }
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    Ok(StuckReport {
        never_stuck: stuck_states.is_empty(),
        stuck_states,
        min_degree_criterion,
        even_or_large_criterion,
        stuck_free_from_valid_starts: !reachable_stuck,
    })
}

/// Per-state minimum number of steps until the reversed state becomes
/// reachable through the kernel's support digraph, cut off at `max_steps`.
#[derive(Clone, Debug)]
pub struct ReversalAccessReport {
    pub per_state: Vec<Option<usize>>,
    /// Largest finite access time.
    pub max_finite: Option<usize>,
    /// Every state reaches its reversal within the cutoff.
    pub all_reach: bool,
}

pub fn reversal_access<S: Reversible>(
    kernel: &Kernel<S>,
    max_steps: usize,
) -> Result<ReversalAccessReport> {
    let rev = kernel.space().reversal_permutation()?;
    let support = kernel.support();
    let n = kernel.n();
    let mut per_state = vec![None; n];
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([s]);
        dist[s] = 0;
        // Access in 0 steps only counts for self-reversed states.
        while let Some(v) = queue.pop_front() {
            if dist[v] >= max_steps {
                continue;
            }
            for &w in &support[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        if dist[rev[s]] != usize::MAX {
            per_state[s] = Some(dist[rev[s]]);
        }
    }
    let all_reach = per_state.iter().all(|d| d.is_some());
    let max_finite = per_state.iter().flatten().copied().max();
    Ok(ReversalAccessReport {
        per_state,
        max_finite,
        all_reach,
    })
}

/// The access radius over pairs of distinct states sharing a vertex: the
/// smallest `R` such that each such ordered pair is joined by a kernel path
/// of at most `R` steps, or `None` when some pair needs more than
/// `max_steps`.
pub fn shared_vertex_access_radius(
    kernel: &Kernel<PathState>,
    distinct: &[PathState],
    max_steps: usize,
) -> Result<Option<usize>> {
    let space = kernel.space();
    let support = kernel.support();
    let n = kernel.n();
    let ids: Vec<usize> = distinct
        .iter()
        .map(|p| space.require(p))
        .collect::<Result<Vec<_>>>()?;
    let vert_sets: Vec<Vec<Vertex>> = distinct
        .iter()
        .map(|p| {
            let mut v = p.0.clone();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let shares = |a: &[Vertex], b: &[Vertex]| {
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
            }
        }
        false
    };
    let mut radius = 0usize;
    for (si, &s) in ids.iter().enumerate() {
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([s]);
        dist[s] = 0;
        while let Some(v) = queue.pop_front() {
            if dist[v] >= max_steps {
                continue;
            }
            for &w in &support[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        for (ti, &t) in ids.iter().enumerate() {
            if !shares(&vert_sets[si], &vert_sets[ti]) {
                continue;
            }
            if dist[t] == usize::MAX {
                return Ok(None);
            }
            radius = radius.max(dist[t]);
        }
    }
    Ok(Some(radius))
}

/// The line graph: one vertex per edge of `g`, adjacency by shared endpoint.
pub fn line_graph(g: &Graph) -> Graph {
    let m = g.edge_count();
    let mut out = Graph::new(m).with_name(format!("line({})", g.name()));
    for e in 0..m {
        for f in (e + 1)..m {
            let (a, b) = g.endpoints(e);
            let (c, d) = g.endpoints(f);
            if a == c || a == d || b == c || b == d {
                out.add_edge(e, f).unwrap();
            }
        }
    }
    out
}

/// The symmetric oriented line graph: one vertex per dart, with `e ~ f` when
/// the walk can step from `e` to `f` or from `f` to `e` (head-to-tail
/// without doubling back, except through a degree-1 vertex).
pub fn symmetric_oriented_line_graph(g: &Graph) -> (Graph, Rc<StateSpace<Dart>>) {
    let space = Rc::new(dart_space(g));
    let n = space.len();
    let follows = |e: &Dart, f: &Dart| e.head == f.tail && (g.degree(e.head) == 1 || e.tail != f.head);
    let mut out = Graph::new(n).with_name(format!("oriented_line({})", g.name()));
    for i in 0..n {
        for j in (i + 1)..n {
            let (e, f) = (space.state(i), space.state(j));
            if follows(e, f) || follows(f, e) {
                out.add_edge(i, j).unwrap();
            }
        }
    }
    (out, space)
}

/// The support graph of `P + P^T` on the kernel's states, and its quotient
/// by the pairing of each state with its reversal. Both are loop-free simple
/// graphs.
#[derive(Clone, Debug)]
pub struct TransitionQuotient {
    pub transition_graph: Graph,
    pub quotient: Graph,
    pub class_of: Vec<usize>,
}

pub fn transition_graph_and_quotient<S: Reversible>(
    kernel: &Kernel<S>,
) -> Result<TransitionQuotient> {
    let classes = ReversalClasses::group(kernel.space())?;
    let n = kernel.n();
    let mut tg = Graph::new(n).with_name("transition_graph");
    for i in 0..n {
        for (j, _) in kernel.row(i) {
            if *j > i || (*j < i && kernel.entry(*j, i).is_zero()) {
                if *j != i {
                    tg.add_edge(i, *j).unwrap();
                }
            }
        }
    }
    let mut q = Graph::new(classes.len()).with_name("reversal_quotient");
    for &(u, v) in tg.edges() {
        let (cu, cv) = (classes.class_of[u], classes.class_of[v]);
        if cu != cv && !q.has_edge(cu, cv) {
            q.add_edge(cu, cv).unwrap();
        }
    }
    Ok(TransitionQuotient {
        transition_graph: tg,
        quotient: q,
        class_of: classes.class_of,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_network;
    use crate::ratio::rat;
    use num_traits::Zero;

    #[test]
    fn srw_on_weighted_path() {
        let net = parse_network("0 1 1\n1 2 2\n").unwrap();
        let k = srw_kernel(&net).unwrap();
        assert_eq!(k.entry(1, 0), rat(1, 3));
        assert_eq!(k.entry(1, 2), rat(2, 3));
        assert_eq!(k.entry(0, 1), rone());
    }

    #[test]
    fn nbrw_on_triangle_rotates() {
        let g = Graph::cycle(3);
        let k = nbrw_kernel(&g).unwrap();
        let sp = k.space().clone();
        let i01 = sp.require(&Dart::new(0, 1)).unwrap();
        let i12 = sp.require(&Dart::new(1, 2)).unwrap();
        let i10 = sp.require(&Dart::new(1, 0)).unwrap();
        assert_eq!(k.entry(i01, i12), rone());
        assert!(k.entry(i01, i10).is_zero());
    }

    #[test]
    fn nbrw_forces_backtrack_at_leaf() {
        let g = parse_network("0 1\n1 2\n").unwrap().graph().clone();
        let k = nbrw_kernel(&g).unwrap();
        let sp = k.space().clone();
        let i12 = sp.require(&Dart::new(1, 2)).unwrap();
        let i21 = sp.require(&Dart::new(2, 1)).unwrap();
        assert_eq!(k.entry(i12, i21), rone());
    }

    #[test]
    fn pbrw_mixes_reversal() {
        let g = Graph::cycle(3);
        let k = pbrw_kernel(&g, &rat(1, 2)).unwrap();
        let sp = k.space().clone();
        let i01 = sp.require(&Dart::new(0, 1)).unwrap();
        let i10 = sp.require(&Dart::new(1, 0)).unwrap();
        let i12 = sp.require(&Dart::new(1, 2)).unwrap();
        assert_eq!(k.entry(i01, i10), rat(1, 2));
        assert_eq!(k.entry(i01, i12), rat(1, 2));
    }

    #[test]
    fn path_space_counts_on_k4() {
        let r = enumerate_path_space(&Graph::complete(4), 2, 100_000).unwrap();
        assert_eq!(r.all.len(), 36);
        assert_eq!(r.edge_distinct.len(), 24);
        assert_eq!(r.vertex_distinct.len(), 24);
    }

    #[test]
    fn vertex_walk_on_path_gets_stuck_and_recovers() {
        let g = parse_network("0 1\n1 2\n").unwrap().graph().clone();
        let r = enumerate_path_space(&g, 2, 100_000).unwrap();
        assert_eq!(r.vertex_distinct.len(), 2);
        assert_eq!(r.reachable_vertex.len(), 4);
        let s = stuck_check(&g, 2, WalkMode::Vertex, 100_000).unwrap();
        assert!(!s.never_stuck);
        assert!(s
            .stuck_states
            .contains(&PathState(vec![0, 1, 2])));
    }

    #[test]
    fn triangle_edge_walk_is_deterministic_rotation() {
        let g = Graph::cycle(3);
        let (k, r) = knbrw(&g, 2, WalkMode::Edge, 100_000).unwrap();
        assert_eq!(r.edge_distinct.len(), 6);
        assert_eq!(r.reachable_edge.len(), 6);
        let sp = k.space().clone();
        let from = sp.require(&PathState(vec![0, 1, 2])).unwrap();
        let to = sp.require(&PathState(vec![1, 2, 0])).unwrap();
        assert_eq!(k.entry(from, to), rone());
    }

    #[test]
    fn reversal_access_on_k4_darts_is_four() {
        let g = Graph::complete(4);
        let k = nbrw_kernel(&g).unwrap();
        let r = reversal_access(&k, 50).unwrap();
        assert!(r.all_reach);
        assert_eq!(r.max_finite, Some(4));
        assert!(r.per_state.iter().all(|d| *d == Some(4)));
    }

    #[test]
    fn reversal_access_on_triangle_is_unreachable() {
        let g = Graph::cycle(3);
        let k = nbrw_kernel(&g).unwrap();
        let r = reversal_access(&k, 50).unwrap();
        assert!(!r.all_reach);
        assert!(r.per_state.iter().all(|d| d.is_none()));
    }

    #[test]
    fn line_graph_of_cycle_is_cycle() {
        let lg = line_graph(&Graph::cycle(5));
        assert_eq!(lg.n(), 5);
        assert_eq!(lg.edge_count(), 5);
        assert_eq!(lg.regular_degree(), Some(2));
        assert_eq!(lg.girth(), Some(5));
    }

    #[test]
    fn oriented_line_graph_of_triangle_is_two_triangles() {
        let (og, _) = symmetric_oriented_line_graph(&Graph::cycle(3));
        assert_eq!(og.n(), 6);
        assert_eq!(og.edge_count(), 6);
        let comps = og.components();
        assert_eq!(comps.len(), 2);
        assert!(comps.iter().all(|c| c.len() == 3));
    }

    #[test]
    fn quotient_of_triangle_walk_is_triangle() {
        let g = Graph::cycle(3);
        let k = nbrw_kernel(&g).unwrap();
        let tq = transition_graph_and_quotient(&k).unwrap();
        assert_eq!(tq.transition_graph.n(), 6);
        assert_eq!(tq.quotient.n(), 3);
        assert_eq!(tq.quotient.edge_count(), 3);
    }
}
