//! Edge orientations without sinks or sources, and coarse distance
//! comparisons between graphs.
//!
//! An orientation keeps one dart per edge. When every vertex retains at
//! least one outgoing and one incoming dart, the head map from oriented
//! edges back to vertices distorts graph distance by at most a constant,
//! which is what the rough-map checks in the second half of this module
//! quantify: `d(u, v) <= k (d(f(u), f(v)) + 1)` together with
//! `d(f(u), f(v)) <= k (d(u, v) + 1)` for every pair, plus a coverage
//! requirement in isometry mode.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::space::Dart;
use crate::walks::{knbrw, transition_graph_and_quotient, WalkMode};

/// One dart per edge, indexed by edge id. A loop can only orient as itself.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orientation {
    dir: Vec<Dart>,
}

impl Orientation {
    pub fn from_darts(dir: Vec<Dart>) -> Self {
        Orientation { dir }
    }

    pub fn dart(&self, e: usize) -> Dart {
        self.dir[e]
    }

    pub fn darts(&self) -> &[Dart] {
        &self.dir
    }

    /// One `tail head` line per edge, in edge id order.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for d in &self.dir {
            out.push_str(&format!("{} {}\n", d.tail, d.head));
        }
        out
    }
}

/// Whether `o` assigns every edge one of its own two darts and every vertex
/// both emits and receives at least one of them.
pub fn verify_orientation(g: &Graph, o: &Orientation) -> bool {
    if o.dir.len() != g.edge_count() {
        return false;
    }
    let n = g.n();
    let mut emits = vec![false; n];
    let mut receives = vec![false; n];
    for (e, d) in o.dir.iter().enumerate() {
        let (u, v) = g.endpoints(e);
        if !((d.tail == u && d.head == v) || (d.tail == v && d.head == u)) {
            return false;
        }
        emits[d.tail] = true;
        receives[d.head] = true;
    }
    (0..n).all(|v| emits[v] && receives[v])
}

/// Rejects any vertex of degree below two. A finite tree component always
/// contains such a vertex, so this certificate also covers components
/// without a cycle.
fn degree_floor(g: &Graph) -> Result<()> {
    match (0..g.n()).find(|&v| g.degree(v) < 2) {
        Some(v) => Err(Error::OrientationInfeasible {
            vertex: v,
            degree: g.degree(v),
        }),
        None => Ok(()),
    }
}

/// Dinic max-flow over an arc list where arc `2i + 1` is the residual twin
/// of arc `2i`.
struct Dinic {
    to: Vec<usize>,
    cap: Vec<i64>,
    adj: Vec<Vec<usize>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
            level: Vec::new(),
            iter: Vec::new(),
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.to.push(to);
        self.cap.push(cap);
        self.adj[from].push(id);
        self.to.push(from);
        self.cap.push(0);
        self.adj[to].push(id + 1);
        id
    }

    fn flow_on(&self, arc: usize) -> i64 {
        self.cap[arc ^ 1]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level = vec![-1; self.adj.len()];
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for i in 0..self.adj[v].len() {
                let a = self.adj[v][i];
                let w = self.to[a];
                if self.cap[a] > 0 && self.level[w] < 0 {
                    self.level[w] = self.level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        self.level[t] >= 0
    }

    fn augment(&mut self, v: usize, t: usize, limit: i64) -> i64 {
        if v == t {
            return limit;
        }
        while self.iter[v] < self.adj[v].len() {
            let a = self.adj[v][self.iter[v]];
            let w = self.to[a];
            if self.cap[a] > 0 && self.level[w] == self.level[v] + 1 {
                let pushed = self.augment(w, t, limit.min(self.cap[a]));
                if pushed > 0 {
                    self.cap[a] -= pushed;
                    self.cap[a ^ 1] += pushed;
                    return pushed;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.iter = vec![0; self.adj.len()];
            loop {
                let pushed = self.augment(s, t, i64::MAX / 2);
                if pushed == 0 {
                    break;
                }
                total += pushed;
            }
        }
        total
    }
}

/// Directs every edge so that each vertex keeps at least one incoming and
/// one outgoing dart.
///
/// Reduces to a circulation with lower bounds: each non-loop edge sends one
/// unit to the endpoint it points at, and vertex `v` must collect between 1
/// and `deg(v) - 1` units (a loop at `v` lifts both limits, since it serves
/// `v` in both roles by itself). Feasibility needs exactly the degree floor
/// checked up front, so a full run never fails; the flow is still verified
/// and an `OrientationInfeasible` for the lowest-degree vertex is returned
/// if it somehow falls short.
pub fn sink_free_source_free_orientation(g: &Graph) -> Result<Orientation> {
    degree_floor(g)?;
    let n = g.n();
    let m = g.edge_count();
    let plain: Vec<usize> = (0..m).filter(|&e| !g.is_loop_edge(e)).collect();
    let mut has_loop = vec![false; n];
    for e in 0..m {
        if g.is_loop_edge(e) {
            has_loop[g.endpoints(e).0] = true;
        }
    }
    let mp = plain.len();
    let (s, t) = (0, 1);
    let enode = |i: usize| 2 + i;
    let vnode = |v: usize| 2 + mp + v;
    let (ss, tt) = (2 + mp + n, 2 + mp + n + 1);
    let mut net = Dinic::new(tt + 1);
    let mut choice = Vec::with_capacity(mp);
    for (i, &e) in plain.iter().enumerate() {
        let (u, v) = g.endpoints(e);
        let to_u = net.add(enode(i), vnode(u), 1);
        let to_v = net.add(enode(i), vnode(v), 1);
        choice.push((e, u, v, to_u, to_v));
    }
    let mut lows = 0;
    for v in 0..n {
        let nd = g.incident(v).iter().filter(|&&(w, _)| w != v).count() as i64;
        let (low, upper) = if has_loop[v] { (0, nd) } else { (1, nd - 1) };
        if upper > low {
            net.add(vnode(v), t, upper - low);
        }
        if low > 0 {
            net.add(vnode(v), tt, low);
            lows += low;
        }
    }
    net.add(t, s, i64::MAX / 4);
    for i in 0..mp {
        net.add(ss, enode(i), 1);
    }
    if lows > 0 {
        net.add(ss, t, lows);
    }
    if mp > 0 {
        net.add(s, tt, mp as i64);
    }
    if net.max_flow(ss, tt) < mp as i64 + lows {
        let v = (0..n).min_by_key(|&v| g.degree(v)).unwrap_or(0);
        return Err(Error::OrientationInfeasible {
            vertex: v,
            degree: g.degree(v),
        });
    }
    let mut dir = vec![Dart::new(0, 0); m];
    for e in 0..m {
        if g.is_loop_edge(e) {
            let (v, _) = g.endpoints(e);
            dir[e] = Dart::new(v, v);
        }
    }
    for &(e, u, v, to_u, to_v) in &choice {
        debug_assert_eq!(net.flow_on(to_u) + net.flow_on(to_v), 1);
        dir[e] = if net.flow_on(to_u) == 1 {
            Dart::new(v, u)
        } else {
            Dart::new(u, v)
        };
    }
    Ok(Orientation { dir })
}

fn unused_edge(g: &Graph, dir: &[Option<Dart>], v: Vertex) -> (Vertex, usize) {
    g.incident(v)
        .iter()
        .find(|&&(_, e)| dir[e].is_none())
        .map(|&(w, e)| (w, e))
        .expect("an unsaturated trail endpoint keeps an unoriented edge")
}

/// Same guarantee as [`sink_free_source_free_orientation`], built greedily.
///
/// Repeatedly grows a trail out of a vertex still missing an in- or
/// out-dart: walk forward along unoriented edges, directing them with the
/// walk, until the trail reaches an already-covered vertex or bites its own
/// tail; then, if the starting vertex still lacks an incoming dart, extend
/// the trail backwards the same way. Every vertex touched by a finished
/// trail ends up covered in both roles, and a vertex not yet covered has
/// all its edges still unoriented, so the walk never runs out of moves.
pub fn orientation_by_absorption(g: &Graph) -> Result<Orientation> {
    degree_floor(g)?;
    let n = g.n();
    let m = g.edge_count();
    let mut dir: Vec<Option<Dart>> = vec![None; m];
    let mut has_in = vec![false; n];
    let mut has_out = vec![false; n];
    for e in 0..m {
        let (u, v) = g.endpoints(e);
        if u == v {
            dir[e] = Some(Dart::new(u, u));
            has_in[u] = true;
            has_out[u] = true;
        }
    }
    let mut on_trail = vec![false; n];
    let mut marks: Vec<Vertex> = Vec::new();
    for start in 0..n {
        if has_in[start] && has_out[start] {
            continue;
        }
        for &v in &marks {
            on_trail[v] = false;
        }
        marks.clear();
        on_trail[start] = true;
        marks.push(start);
        let mut cur = start;
        loop {
            let (next, e) = unused_edge(g, &dir, cur);
            dir[e] = Some(Dart::new(cur, next));
            has_out[cur] = true;
            has_in[next] = true;
            if on_trail[next] || (has_in[next] && has_out[next]) {
                break;
            }
            on_trail[next] = true;
            marks.push(next);
            cur = next;
        }
        let mut cur = start;
        while !has_in[cur] {
            let (prev, e) = unused_edge(g, &dir, cur);
            dir[e] = Some(Dart::new(prev, cur));
            has_in[cur] = true;
            has_out[prev] = true;
            if on_trail[prev] || (has_in[prev] && has_out[prev]) {
                break;
            }
            on_trail[prev] = true;
            marks.push(prev);
            cur = prev;
        }
    }
    let dir = dir
        .into_iter()
        .enumerate()
        .map(|(e, d)| {
            d.unwrap_or_else(|| {
                let (u, v) = g.endpoints(e);
                Dart::new(u, v)
            })
        })
        .collect();
    Ok(Orientation { dir })
}

/// A vertex map between two fixed graphs, stored as an image table.
#[derive(Clone, Debug)]
pub struct VertexMap {
    from: Graph,
    to: Graph,
    map: Vec<Vertex>,
}

impl VertexMap {
    pub fn new(from: Graph, to: Graph, map: Vec<Vertex>) -> Result<Self> {
        if map.len() != from.n() {
            return Err(Error::InvalidParameter(format!(
                "image table has {} entries for {} vertices",
                map.len(),
                from.n()
            )));
        }
        if let Some(&w) = map.iter().find(|&&w| w >= to.n()) {
            return Err(Error::InvalidParameter(format!(
                "image vertex {w} outside a codomain of size {}",
                to.n()
            )));
        }
        Ok(VertexMap { from, to, map })
    }

    pub fn domain(&self) -> &Graph {
        &self.from
    }

    pub fn codomain(&self) -> &Graph {
        &self.to
    }

    pub fn apply(&self, v: Vertex) -> Vertex {
        self.map[v]
    }

    pub fn images(&self) -> &[Vertex] {
        &self.map
    }

    /// The composite `next` after `self`, defined when the middle vertex
    /// counts line up.
    pub fn then(&self, next: &VertexMap) -> Result<VertexMap> {
        if next.from.n() != self.to.n() {
            return Err(Error::InvalidParameter(format!(
                "cannot compose into a domain of size {} from a codomain of size {}",
                next.from.n(),
                self.to.n()
            )));
        }
        let map = self.map.iter().map(|&v| next.map[v]).collect();
        VertexMap::new(self.from.clone(), next.to.clone(), map)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RoughMode {
    /// Two-sided distance bounds only.
    Embedding,
    /// Distance bounds plus every codomain vertex within `k` of the image.
    Isometry,
}

/// A vertex pair whose distances break one of the two-sided bounds.
#[derive(Clone, Debug)]
pub struct RoughViolation {
    pub u: Vertex,
    pub v: Vertex,
    pub d_domain: Option<usize>,
    pub d_image: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct RoughMapReport {
    pub k: usize,
    pub mode: RoughMode,
    pub pairs_checked: usize,
    pub violation_count: usize,
    /// The first few failing pairs, capped so reports stay readable.
    pub violations: Vec<RoughViolation>,
    pub uncovered_count: usize,
    pub uncovered: Vec<Vertex>,
}

impl RoughMapReport {
    pub fn ok(&self) -> bool {
        self.violation_count == 0 && self.uncovered_count == 0
    }
}

const WITNESS_CAP: usize = 8;

fn pair_ok(k: usize, a: Option<usize>, b: Option<usize>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => a <= k * (b + 1) && b <= k * (a + 1),
        (None, None) => true,
        _ => false,
    }
}

fn all_pairs(g: &Graph) -> Vec<Vec<Option<usize>>> {
    (0..g.n()).map(|v| g.distances(v)).collect()
}

fn report_at(
    f: &VertexMap,
    k: usize,
    mode: RoughMode,
    d1: &[Vec<Option<usize>>],
    d2: &[Vec<Option<usize>>],
) -> RoughMapReport {
    let n1 = f.domain().n();
    let n2 = f.codomain().n();
    let mut report = RoughMapReport {
        k,
        mode,
        pairs_checked: 0,
        violation_count: 0,
        violations: Vec::new(),
        uncovered_count: 0,
        uncovered: Vec::new(),
    };
    for u in 0..n1 {
        for v in (u + 1)..n1 {
            report.pairs_checked += 1;
            let a = d1[u][v];
            let b = d2[f.apply(u)][f.apply(v)];
            if !pair_ok(k, a, b) {
                report.violation_count += 1;
                if report.violations.len() < WITNESS_CAP {
                    report.violations.push(RoughViolation {
                        u,
                        v,
                        d_domain: a,
                        d_image: b,
                    });
                }
            }
        }
    }
    if mode == RoughMode::Isometry {
        for w in 0..n2 {
            let near = (0..n1).filter_map(|v| d2[f.apply(v)][w]).min();
            if near.map_or(true, |d| d > k) {
                report.uncovered_count += 1;
                if report.uncovered.len() < WITNESS_CAP {
                    report.uncovered.push(w);
                }
            }
        }
    }
    report
}

/// Tests the two-sided additive distance bounds at a fixed constant `k`.
///
/// A pair disconnected in both graphs passes; a pair disconnected on one
/// side only fails for every `k`, since no finite constant repairs an
/// infinite gap.
pub fn rough_map_check(f: &VertexMap, k: usize, mode: RoughMode) -> Result<RoughMapReport> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "roughness constant must be positive".into(),
        ));
    }
    let d1 = all_pairs(f.domain());
    let d2 = all_pairs(f.codomain());
    Ok(report_at(f, k, mode, &d1, &d2))
}

/// The smallest `k <= k_cap` at which [`rough_map_check`] passes, found by
/// binary search; validity is monotone in `k`, and `None` means even
/// `k_cap` fails.
pub fn minimal_rough_k(f: &VertexMap, mode: RoughMode, k_cap: usize) -> Result<Option<usize>> {
    if k_cap == 0 {
        return Err(Error::InvalidParameter(
            "roughness cap must be positive".into(),
        ));
    }
    let d1 = all_pairs(f.domain());
    let d2 = all_pairs(f.codomain());
    let good = |k: usize| report_at(f, k, mode, &d1, &d2).ok();
    if !good(k_cap) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (1, k_cap);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if good(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(Some(lo))
}

/// Quasi-inverse by proximity: each codomain vertex maps back to the domain
/// vertex whose image lies nearest, ties resolved to the smallest index.
/// Fails when some codomain vertex cannot reach the image at all.
pub fn nearest_preimage_map(f: &VertexMap) -> Result<VertexMap> {
    let d2 = all_pairs(f.codomain());
    let n1 = f.domain().n();
    let mut back = Vec::with_capacity(f.codomain().n());
    for w in 0..f.codomain().n() {
        let best = (0..n1)
            .filter_map(|v| d2[f.apply(v)][w].map(|d| (d, v)))
            .min();
        match best {
            Some((_, v)) => back.push(v),
            None => {
                return Err(Error::TargetNotReached(format!(
                    "vertex {w} cannot reach the image"
                )))
            }
        }
    }
    VertexMap::new(f.codomain().clone(), f.domain().clone(), back)
}

/// The largest distance from a state to its reversal in the transition
/// graph of the `k`-step kernel on `g`, or `None` when some state cannot
/// reach its reversal there at all.
pub fn reversal_distance_bound(
    g: &Graph,
    k: usize,
    mode: WalkMode,
    cap: usize,
) -> Result<Option<usize>> {
    let (kernel, _) = knbrw(g, k, mode, cap)?;
    let tq = transition_graph_and_quotient(&kernel)?;
    let rev = kernel.space().reversal_permutation()?;
    let mut worst = 0;
    for a in 0..kernel.n() {
        match tq.transition_graph.distances(a)[rev[a]] {
            Some(d) => worst = worst.max(d),
            None => return Ok(None),
        }
    }
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walks::line_graph;

    fn dumbbell(neck: usize) -> Graph {
        let far = 2 + neck;
        let mut g = Graph::new(far + 3).with_name(format!("dumbbell({neck})"));
        for (u, v) in [(0, 1), (1, 2), (0, 2)] {
            g.add_edge(u, v).unwrap();
        }
        for i in 0..neck {
            g.add_edge(2 + i, 3 + i).unwrap();
        }
        for (u, v) in [(far, far + 1), (far + 1, far + 2), (far, far + 2)] {
            g.add_edge(u, v).unwrap();
        }
        g
    }

    #[test]
    fn triangle_has_exactly_two_valid_orientations() {
        let g = Graph::cycle(3);
        let mut valid = Vec::new();
        for mask in 0..8u32 {
            let darts = (0..3)
                .map(|e| {
                    let (u, v) = g.endpoints(e);
                    if mask >> e & 1 == 0 {
                        Dart::new(u, v)
                    } else {
                        Dart::new(v, u)
                    }
                })
                .collect();
            if verify_orientation(&g, &Orientation::from_darts(darts)) {
                valid.push(mask);
            }
        }
        assert_eq!(valid, vec![3, 4]);
    }

    #[test]
    fn both_solvers_orient_standard_graphs() {
        for g in [
            Graph::complete(4),
            Graph::bowtie(),
            Graph::cycle(5),
            Graph::grid(&[3, 4]),
            Graph::torus(&[3, 3]),
            dumbbell(3),
        ] {
            let flow = sink_free_source_free_orientation(&g).unwrap();
            assert!(verify_orientation(&g, &flow), "flow solver on {}", g.name());
            let greedy = orientation_by_absorption(&g).unwrap();
            assert!(
                verify_orientation(&g, &greedy),
                "absorption on {}",
                g.name()
            );
        }
    }

    #[test]
    fn degree_floor_is_certified() {
        let path = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        for result in [
            sink_free_source_free_orientation(&path),
            orientation_by_absorption(&path),
        ] {
            match result {
                Err(Error::OrientationInfeasible { vertex: 0, degree: 1 }) => {}
                other => panic!("expected an infeasibility certificate, got {other:?}"),
            }
        }
    }

    #[test]
    fn outward_star_fails_verification() {
        let star = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let outward = Orientation::from_darts(vec![
            Dart::new(0, 1),
            Dart::new(0, 2),
            Dart::new(0, 3),
        ]);
        assert!(!verify_orientation(&star, &outward));
        let foreign = Orientation::from_darts(vec![
            Dart::new(1, 2),
            Dart::new(0, 2),
            Dart::new(0, 3),
        ]);
        assert!(!verify_orientation(&star, &foreign));
        let short = Orientation::from_darts(vec![Dart::new(0, 1)]);
        assert!(!verify_orientation(&star, &short));
    }

    #[test]
    fn loops_cover_their_vertex_in_both_roles() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2), (0, 0)]).unwrap();
        for o in [
            sink_free_source_free_orientation(&g).unwrap(),
            orientation_by_absorption(&g).unwrap(),
        ] {
            assert!(verify_orientation(&g, &o));
            assert_eq!(o.dart(3), Dart::new(0, 0));
        }
    }

    #[test]
    fn scaling_maps_have_growing_minimal_k() {
        for (l, expect) in [(2, 2), (4, 3), (8, 6)] {
            let f = VertexMap::new(
                Graph::cycle(4),
                Graph::cycle(4 * l),
                (0..4).map(|v| v * l).collect(),
            )
            .unwrap();
            assert_eq!(
                minimal_rough_k(&f, RoughMode::Isometry, 64).unwrap(),
                Some(expect),
                "stretch factor {l}"
            );
        }
    }

    #[test]
    fn component_inclusion_separates_the_modes() {
        let pair = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let f = VertexMap::new(Graph::cycle(3), pair, vec![0, 1, 2]).unwrap();
        assert_eq!(
            minimal_rough_k(&f, RoughMode::Embedding, 16).unwrap(),
            Some(1)
        );
        assert_eq!(minimal_rough_k(&f, RoughMode::Isometry, 16).unwrap(), None);
        let report = rough_map_check(&f, 16, RoughMode::Isometry).unwrap();
        assert_eq!(report.uncovered_count, 3);
        assert_eq!(report.uncovered, vec![3, 4, 5]);
    }

    #[test]
    fn one_sided_disconnection_fails_every_k() {
        let pair = Graph::from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let f = VertexMap::new(pair, Graph::cycle(3), vec![0, 1, 2, 0, 1, 2]).unwrap();
        assert_eq!(minimal_rough_k(&f, RoughMode::Embedding, 32).unwrap(), None);
        let report = rough_map_check(&f, 32, RoughMode::Embedding).unwrap();
        assert_eq!(report.violation_count, 9);
    }

    #[test]
    fn head_map_from_oriented_edges_is_a_two_rough_isometry() {
        for g in [Graph::complete(4), Graph::bowtie(), Graph::cycle(4)] {
            let o = sink_free_source_free_orientation(&g).unwrap();
            let images = (0..g.edge_count()).map(|e| o.dart(e).head).collect();
            let f = VertexMap::new(line_graph(&g), g.clone(), images).unwrap();
            assert!(
                rough_map_check(&f, 2, RoughMode::Isometry).unwrap().ok(),
                "head map on {}",
                g.name()
            );
        }
    }

    #[test]
    fn composition_obeys_the_distortion_bound() {
        let f = VertexMap::new(
            Graph::cycle(4),
            Graph::cycle(8),
            (0..4).map(|v| 2 * v).collect(),
        )
        .unwrap();
        let g = VertexMap::new(
            Graph::cycle(8),
            Graph::cycle(16),
            (0..8).map(|v| 2 * v).collect(),
        )
        .unwrap();
        let k1 = minimal_rough_k(&f, RoughMode::Isometry, 32).unwrap().unwrap();
        let k2 = minimal_rough_k(&g, RoughMode::Isometry, 32).unwrap().unwrap();
        assert_eq!((k1, k2), (2, 2));
        let composed = f.then(&g).unwrap();
        let bound = k1 * k2 + k1 + k2;
        assert!(rough_map_check(&composed, bound, RoughMode::Isometry)
            .unwrap()
            .ok());
        let kc = minimal_rough_k(&composed, RoughMode::Isometry, 32)
            .unwrap()
            .unwrap();
        assert_eq!(kc, 3);
        assert!(kc <= bound);
    }

    #[test]
    fn nearest_preimage_is_a_rough_inverse() {
        let f = VertexMap::new(
            Graph::cycle(4),
            Graph::cycle(8),
            (0..4).map(|v| 2 * v).collect(),
        )
        .unwrap();
        let q = nearest_preimage_map(&f).unwrap();
        assert_eq!(q.images(), &[0, 0, 1, 1, 2, 2, 3, 0]);
        assert!(rough_map_check(&q, 2, RoughMode::Isometry).unwrap().ok());
        let round = f.then(&q).unwrap();
        assert_eq!(
            minimal_rough_k(&round, RoughMode::Isometry, 8).unwrap(),
            Some(1)
        );
    }

    #[test]
    fn reversal_distances_match_hand_counts() {
        let bound = |g: &Graph| reversal_distance_bound(g, 1, WalkMode::Edge, 10_000).unwrap();
        assert_eq!(bound(&Graph::complete(4)), Some(3));
        assert_eq!(bound(&Graph::cycle(3)), None);
        assert_eq!(bound(&Graph::cycle(5)), None);
    }

    #[test]
    fn reversal_distance_grows_along_the_neck() {
        let ks: Vec<usize> = [2, 4, 8]
            .iter()
            .map(|&neck| {
                reversal_distance_bound(&dumbbell(neck), 1, WalkMode::Edge, 100_000)
                    .unwrap()
                    .unwrap()
            })
            .collect();
        assert!(ks[0] < ks[1] && ks[1] < ks[2], "distances {ks:?}");
        assert!(ks[0] >= 2);
    }

    #[test]
    fn orientation_serializes_one_line_per_edge() {
        let g = Graph::complete(4);
        let o = sink_free_source_free_orientation(&g).unwrap();
        let text = o.to_lines();
        assert_eq!(text.lines().count(), g.edge_count());
        for (e, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let tail: usize = parts.next().unwrap().parse().unwrap();
            let head: usize = parts.next().unwrap().parse().unwrap();
            assert_eq!(Dart::new(tail, head), o.dart(e));
        }
    }
}
