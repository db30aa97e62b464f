//! Undirected graphs and conductance networks: construction, generators,
//! text-format parsing, metric helpers, structural condition checks, and the
//! shell subdivision used by the transience examples.

use crate::error::{Error, Result};
use crate::ratio::{format_rat, parse_rat, rone, Rat};
use num_traits::Zero;
use rand::Rng;
use std::collections::HashMap;
use std::collections::VecDeque;

pub type Vertex = usize;

/// Simple undirected graph. Loops are allowed and stored once: a loop at `v`
/// shows up as a single `v` entry in `v`'s neighbor list and contributes 1 to
/// the degree. Parallel edges are rejected.
///
/// A subset of vertices may be marked as the truncation boundary of a larger
/// (possibly infinite) graph; ball-based condition checks skip balls that
/// touch it.
#[derive(Clone, Debug)]
pub struct Graph {
    name: String,
    /// Per vertex: `(neighbor, edge id)`, sorted by neighbor.
    inc: Vec<Vec<(Vertex, usize)>>,
    /// Canonical endpoints `u <= v` per edge id.
    edges: Vec<(Vertex, Vertex)>,
    edge_index: HashMap<(Vertex, Vertex), usize>,
    boundary: Vec<bool>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            name: format!("graph({n})"),
            inc: vec![Vec::new(); n],
            edges: Vec::new(),
            edge_index: HashMap::new(),
            boundary: vec![false; n],
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Adds the undirected edge `{u, v}` (a loop if `u == v`) and returns its
    /// id. Duplicate edges are rejected; `line` contextualizes parse errors
    /// and is 0 for programmatic construction.
    fn add_edge_at_line(&mut self, u: Vertex, v: Vertex, line: usize) -> Result<usize> {
        let key = (u.min(v), u.max(v));
        if key.1 >= self.inc.len() {
            let n = key.1 + 1;
            self.inc.resize(n, Vec::new());
            self.boundary.resize(n, false);
        }
        if self.edge_index.contains_key(&key) {
            return Err(Error::DuplicateEdge {
                u: key.0,
                v: key.1,
                line,
            });
        }
        let id = self.edges.len();
        self.edges.push(key);
        self.edge_index.insert(key, id);
        self.inc[u].push((v, id));
        if u != v {
            self.inc[v].push((u, id));
        }
        self.inc[u].sort_unstable();
        if u != v {
            self.inc[v].sort_unstable();
        }
        Ok(id)
    }

    pub fn add_edge(&mut self, u: Vertex, v: Vertex) -> Result<usize> {
        self.add_edge_at_line(u, v, 0)
    }

    pub fn from_edges(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.inc.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn endpoints(&self, e: usize) -> (Vertex, Vertex) {
        self.edges[e]
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<usize> {
        self.edge_index.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn is_loop_edge(&self, e: usize) -> bool {
        let (u, v) = self.edges[e];
        u == v
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|&(u, v)| u == v)
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.inc[v].len()
    }

    /// `(neighbor, edge id)` pairs sorted by neighbor; a loop appears once.
    pub fn incident(&self, v: Vertex) -> &[(Vertex, usize)] {
        &self.inc[v]
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.inc[v].iter().map(|&(w, _)| w)
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.edge_id(u, v).is_some()
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// `Some(d)` when every vertex has degree `d`.
    pub fn regular_degree(&self) -> Option<usize> {
        let d = self.degree(0);
        (0..self.n()).all(|v| self.degree(v) == d).then_some(d)
    }

    pub fn set_boundary(&mut self, vs: &[Vertex]) {
        self.boundary = vec![false; self.n()];
        for &v in vs {
            self.boundary[v] = true;
        }
    }

    pub fn is_boundary(&self, v: Vertex) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> Vec<Vertex> {
        (0..self.n()).filter(|&v| self.boundary[v]).collect()
    }

    /// BFS distances from `from`; `None` for unreachable vertices.
    pub fn distances(&self, from: Vertex) -> Vec<Option<usize>> {
        self.distances_multi(std::slice::from_ref(&from))
    }

    /// BFS distances from a set of sources.
    pub fn distances_multi(&self, from: &[Vertex]) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n()];
        let mut queue = VecDeque::new();
        for &s in from {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v].unwrap();
            for w in self.neighbors(v) {
                if dist[w].is_none() {
                    dist[w] = Some(d + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Sorted vertex set of the closed ball `B(v, r)`.
    pub fn ball(&self, v: Vertex, r: usize) -> Vec<Vertex> {
        let dist = self.distances(v);
        (0..self.n())
            .filter(|&w| matches!(dist[w], Some(d) if d <= r))
            .collect()
    }

    pub fn components(&self) -> Vec<Vec<Vertex>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([s]);
            seen[s] = true;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for w in self.neighbors(v) {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.n() == 0 || self.components().len() == 1
    }

    /// Length of a shortest cycle; `None` for forests. A loop is a cycle of
    /// length 1.
    pub fn girth(&self) -> Option<usize> {
        if self.has_loops() {
            return Some(1);
        }
        let mut best: Option<usize> = None;
        for root in 0..self.n() {
            let mut dist = vec![usize::MAX; self.n()];
            let mut parent_edge = vec![usize::MAX; self.n()];
            dist[root] = 0;
            let mut queue = VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                if let Some(b) = best {
                    if dist[v] * 2 >= b {
                        break;
                    }
                }
                for &(w, e) in self.incident(v) {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[v] + 1;
                        parent_edge[w] = e;
                        queue.push_back(w);
                    } else if e != parent_edge[v] {
                        let cand = dist[v] + dist[w] + 1;
                        if best.map_or(true, |b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
            }
        }
        best
    }

    /// Induced subgraph on `verts` (which must be sorted); vertex `i` of the
    /// result is `verts[i]`.
    pub fn induced(&self, verts: &[Vertex]) -> Graph {
        let mut index = HashMap::new();
        for (i, &v) in verts.iter().enumerate() {
            index.insert(v, i);
        }
        let mut g = Graph::new(verts.len());
        for &(u, v) in &self.edges {
            if let (Some(&iu), Some(&iv)) = (index.get(&u), index.get(&v)) {
                g.add_edge(iu, iv).expect("induced subgraph cannot duplicate");
            }
        }
        g
    }
}

/// A maximal path whose interior vertices all have degree exactly 2 (and no
/// loop); the vertex sequence repeats its first vertex at the end when the
/// path closes into a full degree-2 cycle.
#[derive(Clone, Debug)]
pub struct TwoPath {
    pub vertices: Vec<Vertex>,
    pub closed: bool,
}

impl TwoPath {
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Graph {
    fn two_path_interior(&self, v: Vertex) -> bool {
        self.degree(v) == 2 && !self.has_edge(v, v)
    }

    /// Partition of the non-loop edges into maximal 2-paths.
    pub fn two_path_decomposition(&self) -> Vec<TwoPath> {
        let mut used = vec![false; self.edge_count()];
        let mut out = Vec::new();
        for e in 0..self.edge_count() {
            if used[e] || self.is_loop_edge(e) {
                continue;
            }
            let (u, v) = self.endpoints(e);
            used[e] = true;
            let mut path = VecDeque::from([u, v]);
            let mut closed = false;
            // Walk forward from v, then backward from u, through interior
            // vertices, consuming one unused edge per step.
            'dir: for dir in 0..2 {
                loop {
                    let frontier = if dir == 0 {
                        *path.back().unwrap()
                    } else {
                        path[0]
                    };
                    if !self.two_path_interior(frontier) {
                        break;
                    }
                    let Some(&(next, ne)) = self
                        .incident(frontier)
                        .iter()
                        .find(|&&(_, ne)| !used[ne])
                    else {
                        break;
                    };
                    used[ne] = true;
                    if dir == 0 {
                        path.push_back(next);
                    } else {
                        path.push_front(next);
                    }
                    if next == if dir == 0 { path[0] } else { *path.back().unwrap() } {
                        closed = true;
                        break 'dir;
                    }
                }
            }
            out.push(TwoPath {
                vertices: path.into_iter().collect(),
                closed,
            });
        }
        out
    }
}

/// The structural conditions checked on finite graphs (or finite truncations
/// with a marked boundary).
#[derive(Clone, Copy, Debug)]
pub enum StructuralCondition {
    /// Every maximal 2-path has length at most `l`.
    TwoPathsBounded { l: usize },
    /// Every ball of radius `r` contains a cycle.
    BallsContainCycle { r: usize },
    /// Every ball of radius `r` contains an edge-simple cycle of length at
    /// least `k` (edges distinct, vertices may repeat).
    BallsContainEdgeCycle { r: usize, k: usize },
    /// Every ball of radius `r` contains a vertex-simple cycle of length at
    /// least `k + 1`.
    BallsContainVertexCycle { r: usize, k: usize },
}

#[derive(Clone, Debug)]
pub enum ConditionWitness {
    LongTwoPath(TwoPath),
    BallWithoutCycle { center: Vertex },
    BallWithoutLongCycle { center: Vertex, needed: usize },
}

#[derive(Clone, Debug)]
pub enum ConditionVerdict {
    Holds { checked: usize, skipped: usize },
    Fails { witness: ConditionWitness },
    /// Every ball touched the marked boundary, so nothing was checked.
    Indeterminate { skipped: usize },
}

impl ConditionVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ConditionVerdict::Holds { .. })
    }
}

fn induced_has_cycle(g: &Graph, verts: &[Vertex]) -> bool {
    let sub = g.induced(verts);
    if sub.has_loops() {
        return true;
    }
    // A forest has strictly fewer edges than vertices in every component.
    let mut parent: Vec<usize> = (0..sub.n()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(u, v) in sub.edges() {
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return true;
        }
        parent[ru] = rv;
    }
    false
}

/// Longest edge-simple closed walk found by exhaustive search; `None` when the
/// graph is a forest. Intended for small ball subgraphs.
fn max_edge_cycle_at_least(g: &Graph, target: usize) -> bool {
    fn dfs(
        g: &Graph,
        start: Vertex,
        cur: Vertex,
        used: &mut Vec<bool>,
        len: usize,
        target: usize,
    ) -> bool {
        for &(w, e) in g.incident(cur) {
            if used[e] {
                continue;
            }
            if w == start && len + 1 >= target {
                return true;
            }
            used[e] = true;
            let hit = dfs(g, start, w, used, len + 1, target);
            used[e] = false;
            if hit {
                return true;
            }
        }
        false
    }
    let mut used = vec![false; g.edge_count()];
    (0..g.n()).any(|s| dfs(g, s, s, &mut used, 0, target))
}

/// Whether a vertex-simple cycle of length at least `target` exists.
fn max_vertex_cycle_at_least(g: &Graph, target: usize) -> bool {
    if target <= 1 && g.has_loops() {
        return true;
    }
    fn dfs(
        g: &Graph,
        start: Vertex,
        cur: Vertex,
        visited: &mut Vec<bool>,
        len: usize,
        target: usize,
    ) -> bool {
        for w in g.neighbors(cur) {
            if w == start && len + 1 >= 3.max(target) {
                return true;
            }
            if w > start && !visited[w] {
                visited[w] = true;
                let hit = dfs(g, start, w, visited, len + 1, target);
                visited[w] = false;
                if hit {
                    return true;
                }
            }
        }
        false
    }
    let mut visited = vec![false; g.n()];
    (0..g.n()).any(|s| {
        visited[s] = true;
        let hit = dfs(g, s, s, &mut visited, 0, target);
        visited[s] = false;
        hit
    })
}

impl Graph {
    /// Checks one structural condition. Ball-based conditions skip balls that
    /// contain a marked boundary vertex; if every ball is skipped the verdict
    /// is indeterminate rather than a vacuous pass.
    pub fn check_structural_condition(&self, cond: StructuralCondition) -> ConditionVerdict {
        match cond {
            StructuralCondition::TwoPathsBounded { l } => {
                for p in self.two_path_decomposition() {
                    if p.len() > l {
                        return ConditionVerdict::Fails {
                            witness: ConditionWitness::LongTwoPath(p),
                        };
                    }
                }
                ConditionVerdict::Holds {
                    checked: self.edge_count(),
                    skipped: 0,
                }
            }
            StructuralCondition::BallsContainCycle { r }
            | StructuralCondition::BallsContainEdgeCycle { r, .. }
            | StructuralCondition::BallsContainVertexCycle { r, .. } => {
                let mut checked = 0;
                let mut skipped = 0;
                for v in 0..self.n() {
                    let ball = self.ball(v, r);
                    if ball.iter().any(|&w| self.is_boundary(w)) {
                        skipped += 1;
                        continue;
                    }
                    checked += 1;
                    let sub = self.induced(&ball);
                    let ok = match cond {
                        StructuralCondition::BallsContainCycle { .. } => {
                            induced_has_cycle(self, &ball)
                        }
                        StructuralCondition::BallsContainEdgeCycle { k, .. } => {
                            max_edge_cycle_at_least(&sub, k)
                        }
                        StructuralCondition::BallsContainVertexCycle { k, .. } => {
                            max_vertex_cycle_at_least(&sub, k + 1)
                        }
                        StructuralCondition::TwoPathsBounded { .. } => unreachable!(),
                    };
                    if !ok {
                        let witness = match cond {
                            StructuralCondition::BallsContainCycle { .. } => {
                                ConditionWitness::BallWithoutCycle { center: v }
                            }
                            StructuralCondition::BallsContainEdgeCycle { k, .. } => {
                                ConditionWitness::BallWithoutLongCycle { center: v, needed: k }
                            }
                            StructuralCondition::BallsContainVertexCycle { k, .. } => {
                                ConditionWitness::BallWithoutLongCycle {
                                    center: v,
                                    needed: k + 1,
                                }
                            }
                            StructuralCondition::TwoPathsBounded { .. } => unreachable!(),
                        };
                        return ConditionVerdict::Fails { witness };
                    }
                }
                if checked == 0 {
                    ConditionVerdict::Indeterminate { skipped }
                } else {
                    ConditionVerdict::Holds { checked, skipped }
                }
            }
        }
    }

    /// Smallest radius `r <= max_r` at which every ball contains a cycle.
    pub fn min_cycle_radius(&self, max_r: usize) -> Option<usize> {
        (1..=max_r).find(|&r| {
            self.check_structural_condition(StructuralCondition::BallsContainCycle { r })
                .holds()
        })
    }
}

/// Result of the shell subdivision: edges crossing from distance `n - 1` to
/// distance `n` (shell `Pi_n`, size `shell_sizes[n - 1]`) are each replaced by
/// a path of length `|Pi_n|`; same-level edges are kept as they are. Original
/// vertices keep their ids.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub graph: Graph,
    pub shell_sizes: Vec<usize>,
}

impl Graph {
    pub fn subdivide_by_shells(&self, o: Vertex) -> Result<Subdivision> {
        if o >= self.n() {
            return Err(Error::InvalidParameter(format!(
                "root {o} out of range for {} vertices",
                self.n()
            )));
        }
        let dist = self.distances(o);
        let mut shells: Vec<Vec<usize>> = Vec::new();
        let mut same_level: Vec<usize> = Vec::new();
        for e in 0..self.edge_count() {
            let (u, v) = self.endpoints(e);
            match (dist[u], dist[v]) {
                (Some(du), Some(dv)) if du != dv => {
                    let n = du.max(dv);
                    if shells.len() < n {
                        shells.resize(n, Vec::new());
                    }
                    shells[n - 1].push(e);
                }
                _ => same_level.push(e),
            }
        }
        let mut g = Graph::new(self.n()).with_name(format!("subdivided({})", self.name));
        for &e in &same_level {
            let (u, v) = self.endpoints(e);
            g.add_edge(u, v)?;
        }
        let mut next = self.n();
        for shell in &shells {
            let t = shell.len();
            for &e in shell {
                let (u, v) = self.endpoints(e);
                let (lo, hi) = if dist[u] < dist[v] { (u, v) } else { (v, u) };
                let mut prev = lo;
                for _ in 1..t {
                    g.add_edge(prev, next)?;
                    prev = next;
                    next += 1;
                }
                g.add_edge(prev, hi)?;
            }
        }
        Ok(Subdivision {
            graph: g,
            shell_sizes: shells.iter().map(|s| s.len()).collect(),
        })
    }
}

// Generators.
impl Graph {
    pub fn complete(n: usize) -> Graph {
        let mut g = Graph::new(n).with_name(format!("K{n}"));
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v).unwrap();
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let mut g = Graph::new(n).with_name(format!("C{n}"));
        for v in 0..n {
            g.add_edge(v, (v + 1) % n).unwrap();
        }
        g
    }

    /// Two triangles sharing the center vertex 2; degrees (2, 2, 4, 2, 2).
    pub fn bowtie() -> Graph {
        Graph::from_edges(5, &[(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)])
            .unwrap()
            .with_name("bowtie")
    }

    fn lattice(dims: &[usize], wrap: bool) -> Graph {
        assert!(!dims.is_empty());
        let n: usize = dims.iter().product();
        let mut strides = vec![1usize; dims.len()];
        for i in 1..dims.len() {
            strides[i] = strides[i - 1] * dims[i - 1];
        }
        let coord = |idx: usize, i: usize| (idx / strides[i]) % dims[i];
        let kind = if wrap { "torus" } else { "grid" };
        let dims_str = dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x");
        let mut g = Graph::new(n).with_name(format!("{kind}({dims_str})"));
        for idx in 0..n {
            for i in 0..dims.len() {
                let c = coord(idx, i);
                if c + 1 < dims[i] {
                    g.add_edge(idx, idx + strides[i]).unwrap();
                } else if wrap {
                    g.add_edge(idx, idx - c * strides[i]).unwrap();
                }
            }
        }
        if !wrap {
            let boundary: Vec<Vertex> = (0..n)
                .filter(|&idx| {
                    (0..dims.len()).any(|i| {
                        let c = coord(idx, i);
                        c == 0 || c + 1 == dims[i]
                    })
                })
                .collect();
            g.set_boundary(&boundary);
        }
        g
    }

    /// Box `{0..dims[0]-1} x ... ` with nearest-neighbor edges. Vertex index
    /// is little-endian in the coordinates (`c_0` varies fastest); the outer
    /// shell is marked as truncation boundary.
    pub fn grid(dims: &[usize]) -> Graph {
        Graph::lattice(dims, false)
    }

    /// Product of cycles with the same indexing as `grid`; every side must be
    /// at least 3 so no parallel edges arise.
    pub fn torus(dims: &[usize]) -> Graph {
        assert!(
            dims.iter().all(|&d| d >= 3),
            "torus needs every side >= 3"
        );
        Graph::lattice(dims, true)
    }

    /// Tree in which the root has `d` children and every other internal
    /// vertex has `d - 1`, materialized to depth `h`; vertices are in BFS
    /// order and the depth-`h` leaves are marked as truncation boundary.
    pub fn regular_tree(d: usize, h: usize) -> Graph {
        assert!(d >= 2, "regular tree needs degree >= 2");
        let mut g = Graph::new(1).with_name(format!("tree(d={d},h={h})"));
        let mut frontier = vec![0usize];
        let mut next_id = 1usize;
        for depth in 0..h {
            let mut new_frontier = Vec::new();
            for &v in &frontier {
                let children = if depth == 0 { d } else { d - 1 };
                for _ in 0..children {
                    g.add_edge(v, next_id).unwrap();
                    new_frontier.push(next_id);
                    next_id += 1;
                }
            }
            frontier = new_frontier;
        }
        g.set_boundary(&frontier);
        g
    }
}

/// Erdos-Renyi sample on `n` vertices.
pub fn gnp<R: Rng>(n: usize, p: f64, rng: &mut R) -> Graph {
    let mut g = Graph::new(n).with_name(format!("gnp({n})"));
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

/// Connected graph in which every degree is even, built by sampling and then
/// toggling single edges between randomly paired odd-degree vertices.
pub fn random_even_connected<R: Rng>(n: usize, p: f64, rng: &mut R, tries: usize) -> Result<Graph> {
    for _ in 0..tries {
        let mut g = gnp(n, p, rng);
        let mut odd: Vec<Vertex> = (0..n).filter(|&v| g.degree(v) % 2 == 1).collect();
        // The number of odd-degree vertices is even; pair them up at random
        // and toggle each pair's direct edge, which flips exactly those two
        // parities.
        for i in (1..odd.len()).rev() {
            let j = rng.gen_range(0..=i);
            odd.swap(i, j);
        }
        let mut ok = true;
        for pair in odd.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if let Some(e) = g.edge_id(u, v) {
                let mut edges: Vec<(Vertex, Vertex)> = g.edges().to_vec();
                edges.swap_remove(e);
                match Graph::from_edges(n, &edges) {
                    Ok(ng) => g = ng,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            } else {
                g.add_edge(u, v).unwrap();
            }
        }
        if !ok {
            continue;
        }
        let all_even = (0..n).all(|v| g.degree(v) % 2 == 0);
        if all_even && g.min_degree() >= 2 && g.is_connected() {
            return Ok(g.with_name(format!("even_gnp({n})")));
        }
    }
    Err(Error::Unsupported(format!(
        "could not sample a connected even-degree graph on {n} vertices"
    )))
}

/// Connected graph with minimum degree 2: a sparse sample repaired by adding
/// edges at low-degree vertices and between components.
pub fn random_min_degree_2<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    let mut g = gnp(n, p, rng);
    for v in 0..n {
        let mut guard = 0;
        while g.degree(v) < 2 {
            let w = rng.gen_range(0..n);
            if w != v && !g.has_edge(v, w) {
                g.add_edge(v, w).unwrap();
            }
            guard += 1;
            if guard > 100 * n {
                return Err(Error::Unsupported("degree repair stalled".into()));
            }
        }
    }
    loop {
        let comps = g.components();
        if comps.len() <= 1 {
            break;
        }
        let a = comps[0][rng.gen_range(0..comps[0].len())];
        let b = comps[1][rng.gen_range(0..comps[1].len())];
        g.add_edge(a, b).unwrap();
    }
    Ok(g.with_name(format!("mindeg2({n})")))
}

/// Conductance network: a graph with a positive rational conductance per
/// edge. The vertex weight counts a loop's conductance once.
#[derive(Clone, Debug)]
pub struct Network {
    graph: Graph,
    cond: Vec<Rat>,
}

impl Network {
    pub fn unit(graph: Graph) -> Self {
        let cond = vec![rone(); graph.edge_count()];
        Network { graph, cond }
    }

    pub fn with_conductances(graph: Graph, cond: Vec<Rat>) -> Result<Self> {
        if cond.len() != graph.edge_count() {
            return Err(Error::InvalidParameter(
                "conductance list length must match edge count".into(),
            ));
        }
        if cond.iter().any(|c| *c <= Rat::zero()) {
            return Err(Error::InvalidParameter(
                "conductances must be positive".into(),
            ));
        }
        Ok(Network { graph, cond })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn conductance(&self, e: usize) -> &Rat {
        &self.cond[e]
    }

    pub fn conductances(&self) -> &[Rat] {
        &self.cond
    }

    pub fn vertex_weight(&self, v: Vertex) -> Rat {
        let mut acc = Rat::zero();
        for &(_, e) in self.graph.incident(v) {
            acc += &self.cond[e];
        }
        acc
    }

    /// Sums conductances over blocks of a vertex partition (blocks must be
    /// numbered `0..num_blocks`); intra-block edges become loops at the block
    /// vertex with their conductances summed once each.
    pub fn lump(&self, block_of: &[usize]) -> Result<Network> {
        if block_of.len() != self.graph.n() {
            return Err(Error::InvalidParameter(
                "partition must assign every vertex a block".into(),
            ));
        }
        let nb = block_of.iter().copied().max().map_or(0, |m| m + 1);
        if !(0..nb).all(|b| block_of.contains(&b)) {
            return Err(Error::InvalidParameter(
                "block ids must be contiguous from 0".into(),
            ));
        }
        let mut acc: HashMap<(usize, usize), Rat> = HashMap::new();
        for e in 0..self.graph.edge_count() {
            let (u, v) = self.graph.endpoints(e);
            let (bu, bv) = (block_of[u], block_of[v]);
            let key = (bu.min(bv), bu.max(bv));
            *acc.entry(key).or_insert_with(Rat::zero) += &self.cond[e];
        }
        let mut pairs: Vec<((usize, usize), Rat)> = acc.into_iter().collect();
        pairs.sort_by_key(|(k, _)| *k);
        let mut g = Graph::new(nb).with_name(format!("lump({})", self.graph.name()));
        let mut cond = Vec::new();
        for ((bu, bv), c) in pairs {
            g.add_edge(bu, bv)?;
            cond.push(c);
        }
        Network::with_conductances(g, cond)
    }

    pub fn to_float(&self) -> (Graph, Vec<f64>) {
        (
            self.graph.clone(),
            self.cond.iter().map(crate::ratio::to_f64).collect(),
        )
    }
}

/// Parses the edge-list text format: one `u v [conductance]` triple per line,
/// `#` starts a comment, conductances are rationals (`3/4`, `2`, `0.5`) and
/// default to 1. Vertex ids are dense from 0; duplicate undirected edges are
/// parse errors carrying the line number.
pub fn parse_network(text: &str) -> Result<Network> {
    let mut graph = Graph::new(0).with_name("file");
    let mut cond = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected `u v [conductance]`, got {line:?}"),
            });
        }
        let u: usize = fields[0].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad vertex id {:?}", fields[0]),
        })?;
        let v: usize = fields[1].parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad vertex id {:?}", fields[1]),
        })?;
        let c = if fields.len() == 3 {
            let c = parse_rat(fields[2]).map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
            if c <= Rat::zero() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("conductance must be positive, got {}", format_rat(&c)),
                });
            }
            c
        } else {
            rone()
        };
        graph.add_edge_at_line(u, v, line_no)?;
        cond.push(c);
    }
    if graph.edge_count() == 0 {
        return Err(Error::EmptyEdgeList);
    }
    Network::with_conductances(graph, cond)
}

pub fn parse_graph(text: &str) -> Result<Graph> {
    Ok(parse_network(text)?.graph)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_counts_once_in_degree() {
        let g = Graph::from_edges(2, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(g.degree(0), 2);
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.neighbors(0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn duplicate_edge_is_rejected_with_line() {
        let err = parse_network("0 1\n1 2\n1 0\n").unwrap_err();
        match err {
            Error::DuplicateEdge { u: 0, v: 1, line: 3 } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn ball_on_cycle() {
        let g = Graph::cycle(6);
        assert_eq!(g.ball(0, 1), vec![0, 1, 5]);
    }

    #[test]
    fn girth_values() {
        assert_eq!(Graph::complete(4).girth(), Some(3));
        assert_eq!(Graph::cycle(7).girth(), Some(7));
        assert_eq!(Graph::regular_tree(3, 3).girth(), None);
        let loopy = Graph::from_edges(2, &[(0, 0), (0, 1)]).unwrap();
        assert_eq!(loopy.girth(), Some(1));
    }

    #[test]
    fn grid_indexing_and_boundary() {
        let g = Graph::grid(&[3, 3]);
        assert_eq!(g.n(), 9);
        assert_eq!(g.edge_count(), 12);
        // Center of the 3x3 grid is index 4 = 1 + 3*1.
        assert!(!g.is_boundary(4));
        assert_eq!(g.boundary_vertices().len(), 8);
    }

    #[test]
    fn torus_is_regular() {
        let g = Graph::torus(&[5, 5]);
        assert_eq!(g.regular_degree(), Some(4));
        assert_eq!(g.edge_count(), 50);
    }
}
