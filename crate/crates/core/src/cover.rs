//! The universal cover of a regular graph and the walk coupling it carries.
//!
//! The cover of a connected d-regular graph at a root vertex is the tree
//! whose depth-l nodes are the non-backtracking paths of length l leaving
//! the root, with one edge between each path and its one-step extensions.
//! Reading off the last vertex of each path projects the tree onto the
//! graph, and the projection sends a simple random walk on the tree to a
//! simple random walk on the graph. The walk on the tree escapes to
//! infinity along a single ray, and the projection of that ray is a
//! non-backtracking walk. This module materialises the tree lazily, runs
//! the tree walk while extracting the ray and its regeneration times, and
//! fits the tail of the time increments between successive level exits.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};

/// Lazily grown universal cover of a connected regular graph.
///
/// Nodes are numbered in order of materialisation, with the root at index
/// zero. A node's children exist only after the first call that needs
/// them, so long simulations allocate in proportion to the territory the
/// walk actually visits rather than to the full ball of its depth.
#[derive(Clone, Debug)]
pub struct CoverTree {
    graph: Graph,
    degree: usize,
    root: Vertex,
    psi: Vec<Vertex>,
    parent: Vec<Option<usize>>,
    level: Vec<usize>,
    kids: Vec<Option<Vec<usize>>>,
}

/// Builds the cover of `graph` at `root`, materialised to the given depth.
///
/// Every node of level below `depth` has its children created eagerly, so
/// the returned tree holds `1 + d * sum_{i < depth} (d-1)^i` nodes for a
/// d-regular base. Deeper nodes appear on demand once a walk reaches them.
pub fn build_cover(graph: &Graph, root: Vertex, depth: usize) -> Result<CoverTree> {
    if graph.n() == 0 {
        return Err(Error::InvalidParameter("empty graph".into()));
    }
    if root >= graph.n() {
        return Err(Error::InvalidParameter(format!(
            "root {root} out of range for {} vertices",
            graph.n()
        )));
    }
    let degree = graph.regular_degree().ok_or_else(|| {
        Error::Unsupported(format!(
            "cover coupling needs a regular graph; degrees range over {}..={}",
            graph.min_degree(),
            graph.max_degree()
        ))
    })?;
    if degree < 3 {
        return Err(Error::Unsupported(format!(
            "cover coupling needs degree at least 3, got {degree}"
        )));
    }
    if !graph.is_connected() {
        return Err(Error::Unsupported(
            "cover coupling needs a connected graph".into(),
        ));
    }
    let mut tree = CoverTree {
        graph: graph.clone(),
        degree,
        root,
        psi: vec![root],
        parent: vec![None],
        level: vec![0],
        kids: vec![None],
    };
    let mut frontier = vec![0usize];
    for _ in 0..depth {
        let mut next = Vec::new();
        for node in frontier {
            tree.expand(node);
            next.extend_from_slice(tree.kids[node].as_ref().unwrap());
        }
        frontier = next;
    }
    Ok(tree)
}

impl CoverTree {
    /// The base graph the tree covers.
    pub fn base(&self) -> &Graph {
        &self.graph
    }

    /// Common degree of the base graph.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Root vertex of the base graph; the tree's root projects onto it.
    pub fn root_vertex(&self) -> Vertex {
        self.root
    }

    /// Number of nodes materialised so far.
    pub fn node_count(&self) -> usize {
        self.psi.len()
    }

    /// Projection of a node, the last vertex of the path labelling it.
    pub fn psi(&self, node: usize) -> Vertex {
        self.psi[node]
    }

    /// Depth of a node, the length of its path label.
    pub fn level(&self, node: usize) -> usize {
        self.level[node]
    }

    /// Parent of a node, absent only at the root.
    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Children of a node, materialising them on first access. The root
    /// has `d` children and every other node `d - 1`, one per
    /// non-backtracking extension of its label.
    pub fn children(&mut self, node: usize) -> &[usize] {
        if self.kids[node].is_none() {
            self.expand(node);
        }
        self.kids[node].as_ref().unwrap()
    }

    /// The path label of a node as a vertex sequence starting at the root.
    pub fn path_label(&self, node: usize) -> Vec<Vertex> {
        let mut rev = vec![self.psi[node]];
        let mut cur = node;
        while let Some(p) = self.parent[cur] {
            rev.push(self.psi[p]);
            cur = p;
        }
        rev.reverse();
        rev
    }

    fn expand(&mut self, node: usize) {
        if self.kids[node].is_some() {
            return;
        }
        let head = self.psi[node];
        let blocked = self.parent[node].map(|p| self.psi[p]);
        let mut ids = Vec::new();
        for w in self.graph.neighbors(head) {
            if Some(w) == blocked {
                continue;
            }
            let id = self.psi.len();
            self.psi.push(w);
            self.parent.push(Some(node));
            self.level.push(self.level[node] + 1);
            self.kids.push(None);
            ids.push(id);
        }
        self.kids[node] = Some(ids);
    }
}

/// One level of the extracted ray: the last node of that level the walk
/// visited, the time of that visit, and whether the walk ended far enough
/// above the level for the record to be final.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RayNode {
    pub node: usize,
    pub last_exit: usize,
    pub certified: bool,
}

/// One step of the regeneration bookkeeping. `sigma` is the first time
/// after the previous record's `tau` at which the walk projects onto the
/// root vertex, `rho` is the level of that node, and `tau` is the last
/// time the walk sits anywhere in level `rho`. The attempt succeeds when
/// the two times coincide; `on_ray` records the weaker event that the
/// node reached at `sigma` is the one the ray keeps at level `rho`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Regeneration {
    pub tau: usize,
    pub sigma: usize,
    pub rho: usize,
    pub success: bool,
    pub on_ray: bool,
    pub certified: bool,
}

/// Transcript of one simple random walk on the cover together with the
/// objects read off from it: the per-step projection, the per-level ray
/// records, and the regeneration sequence.
#[derive(Clone, Debug)]
pub struct CoupledWalk {
    nodes: Vec<usize>,
    projection: Vec<Vertex>,
    ray: Vec<RayNode>,
    regenerations: Vec<Regeneration>,
    expanded_nodes: usize,
    margin: usize,
    final_level: usize,
}

/// Runs a seeded simple random walk of `steps` steps on the cover from
/// its root and extracts the ray and regeneration structure.
///
/// A level record is only provisional while the walk could still return
/// to that level; since a return from `g` levels above has probability
/// `(d-1)^{-g}`, a record is certified once the walk ends at least
/// `margin` levels higher. Uncertified entries are kept but flagged. The
/// tree grows as the walk explores; the number of nodes added is
/// reported on the transcript.
pub fn coupled_walks(cover: &mut CoverTree, steps: usize, seed: u64, margin: usize) -> CoupledWalk {
    let before = cover.node_count();
    let d = cover.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(steps + 1);
    let mut projection = Vec::with_capacity(steps + 1);
    let mut last_visit: Vec<(usize, usize)> = Vec::new();
    let mut cur = 0usize;
    nodes.push(cur);
    projection.push(cover.psi(cur));
    last_visit.push((0, 0));
    for t in 1..=steps {
        let choice = rng.gen_range(0..d);
        cur = match cover.parent(cur) {
            None => cover.children(cur)[choice],
            Some(p) => {
                if choice == 0 {
                    p
                } else {
                    cover.children(cur)[choice - 1]
                }
            }
        };
        nodes.push(cur);
        projection.push(cover.psi(cur));
        let level = cover.level(cur);
        if level == last_visit.len() {
            last_visit.push((cur, t));
        } else {
            last_visit[level] = (cur, t);
        }
    }
    let final_level = cover.level(cur);
    let ray = last_visit
        .iter()
        .enumerate()
        .map(|(l, &(node, time))| RayNode {
            node,
            last_exit: time,
            certified: final_level >= l + margin,
        })
        .collect();

    // First projected hit of the root vertex at or after each time.
    let sentinel = steps + 1;
    let mut next_root_hit = vec![sentinel; steps + 2];
    for t in (0..=steps).rev() {
        next_root_hit[t] = if projection[t] == cover.root_vertex() {
            t
        } else {
            next_root_hit[t + 1]
        };
    }
    let mut regenerations = Vec::new();
    let mut tau = last_visit[0].1;
    while tau + 1 <= steps {
        let sigma = next_root_hit[tau + 1];
        if sigma > steps {
            break;
        }
        let rho = cover.level(nodes[sigma]);
        let (ray_node, exit_time) = last_visit[rho];
        regenerations.push(Regeneration {
            tau: exit_time,
            sigma,
            rho,
            success: exit_time == sigma,
            on_ray: ray_node == nodes[sigma],
            certified: final_level >= rho + margin,
        });
        tau = exit_time;
    }
    CoupledWalk {
        nodes,
        projection,
        ray,
        regenerations,
        expanded_nodes: cover.node_count() - before,
        margin,
        final_level,
    }
}

impl CoupledWalk {
    /// Visited tree nodes, one per time step including the start.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Projection of the walk onto the base graph, step by step.
    pub fn projection(&self) -> &[Vertex] {
        &self.projection
    }

    /// Last-exit record for every level the walk visited.
    pub fn ray(&self) -> &[RayNode] {
        &self.ray
    }

    /// The certified prefix of the ray. Certification only depends on the
    /// gap to the final level, so it holds on an initial segment.
    pub fn certified_ray(&self) -> &[RayNode] {
        let end = self
            .ray
            .iter()
            .position(|r| !r.certified)
            .unwrap_or(self.ray.len());
        &self.ray[..end]
    }

    /// Projection of the certified ray prefix onto the base graph.
    pub fn ray_projection(&self) -> Vec<Vertex> {
        self.certified_ray().iter().map(|r| self.projection[r.last_exit]).collect()
    }

    /// Time gaps between last exits of consecutive certified levels.
    pub fn level_increments(&self) -> Vec<usize> {
        let ray = self.certified_ray();
        ray.windows(2).map(|w| w[1].last_exit - w[0].last_exit).collect()
    }

    /// Regeneration records in order.
    pub fn regenerations(&self) -> &[Regeneration] {
        &self.regenerations
    }

    /// The certified prefix of the regeneration sequence.
    pub fn certified_regenerations(&self) -> &[Regeneration] {
        let end = self
            .regenerations
            .iter()
            .position(|r| !r.certified)
            .unwrap_or(self.regenerations.len());
        &self.regenerations[..end]
    }

    /// Gaps between the `tau` times of consecutive certified regenerations.
    pub fn regeneration_increments(&self) -> Vec<usize> {
        let regs = self.certified_regenerations();
        regs.windows(2).map(|w| w[1].tau - w[0].tau).collect()
    }

    /// Certified successes and certified attempts.
    pub fn success_counts(&self) -> (usize, usize) {
        let regs = self.certified_regenerations();
        (regs.iter().filter(|r| r.success).count(), regs.len())
    }

    /// Certified ray hits and certified attempts, for the weaker event
    /// that the node reached at `sigma` survives as the ray's choice.
    pub fn ray_membership_counts(&self) -> (usize, usize) {
        let regs = self.certified_regenerations();
        (regs.iter().filter(|r| r.on_ray).count(), regs.len())
    }

    /// Nodes materialised by this walk.
    pub fn expanded_nodes(&self) -> usize {
        self.expanded_nodes
    }

    /// Certification margin the records were flagged with.
    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Level of the walk's final position.
    pub fn final_level(&self) -> usize {
        self.final_level
    }

    /// Regeneration records as CSV.
    pub fn regeneration_csv(&self) -> String {
        let mut out = String::from("index,tau,sigma,rho,success,on_ray,certified\n");
        for (i, r) in self.regenerations.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{},{},{}\n",
                r.tau, r.sigma, r.rho, r.success, r.on_ray, r.certified
            ));
        }
        out
    }
}

/// Tail statistics of a sample of time increments.
#[derive(Clone, Debug)]
pub struct TailReport {
    pub samples: usize,
    pub mean: f64,
    /// Least-squares slope of `ln P(increment > s)` over the fit window.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Sample autocorrelation of the increments at lag one.
    pub lag1: f64,
    /// Null-hypothesis standard error of `lag1` for independent samples.
    pub lag1_sigma: f64,
    /// Survival fractions `P(increment > s)` for `s` in the fit window.
    pub survival: Vec<(usize, f64)>,
}

/// Fits the empirical log-survival of increment samples on the window
/// `fit_lo..=fit_hi` and reports the slope, the fit quality, and a lag-one
/// autocorrelation as an independence proxy. An exponential tail shows up
/// as a negative slope with a near-linear fit. Requires at least ten
/// thousand samples so the survival fractions in the window are stable.
pub fn tau_tail(increments: &[usize], fit_lo: usize, fit_hi: usize) -> Result<TailReport> {
    let n = increments.len();
    if n < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 10000 increments, got {n}"
        )));
    }
    if fit_lo == 0 || fit_lo > fit_hi {
        return Err(Error::InvalidParameter(format!(
            "bad fit window [{fit_lo}, {fit_hi}]"
        )));
    }
    let mut sorted = increments.to_vec();
    sorted.sort_unstable();
    let mut survival = Vec::new();
    for s in fit_lo..=fit_hi {
        let above = n - sorted.partition_point(|&x| x <= s);
        survival.push((s, above as f64 / n as f64));
    }
    let pts: Vec<(f64, f64)> = survival
        .iter()
        .filter(|&&(_, f)| f > 0.0)
        .map(|&(s, f)| (s as f64, f.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(
            "fit window has fewer than 3 nonzero survival points".into(),
        ));
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let intercept = (sy - slope * sx) / m;
    let ybar = sy / m;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - ybar).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };

    let mean = increments.iter().sum::<usize>() as f64 / n as f64;
    let var: f64 = increments.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
    let cov: f64 = increments
        .windows(2)
        .map(|w| (w[0] as f64 - mean) * (w[1] as f64 - mean))
        .sum();
    let lag1 = if var == 0.0 { 0.0 } else { cov / var };
    Ok(TailReport {
        samples: n,
        mean,
        slope,
        intercept,
        r_squared,
        lag1,
        lag1_sigma: 1.0 / ((n - 1) as f64).sqrt(),
        survival,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Network;
    use crate::ratio::{rat, rone, rzero, Rat};
    use crate::space::Dart;
    use crate::walks::{nbrw_kernel, srw_kernel};
    use num_traits::Zero;

    fn k4() -> Graph {
        Graph::complete(4)
    }

    #[test]
    fn truncated_cover_counts_match_the_closed_form() {
        let tree = build_cover(&k4(), 0, 2).unwrap();
        assert_eq!(tree.node_count(), 10);
        assert_eq!(tree.psi(0), 0);
        assert_eq!(tree.level(0), 0);
        let mut tree = tree;
        let level1: Vec<usize> = tree.children(0).to_vec();
        assert_eq!(level1.len(), 3);
        let mut tops: Vec<Vertex> = level1.iter().map(|&c| tree.psi(c)).collect();
        tops.sort_unstable();
        assert_eq!(tops, vec![1, 2, 3]);
        for &c in &level1 {
            assert_eq!(tree.children(c).len(), 2);
        }

        let deep = build_cover(&k4(), 0, 5).unwrap();
        assert_eq!(deep.node_count(), 1 + 3 * (2usize.pow(5) - 1));
        let k8 = build_cover(&Graph::complete(8), 0, 3).unwrap();
        assert_eq!(k8.degree(), 7);
        assert_eq!(k8.node_count(), 1 + 7 * (1 + 6 + 36));

        // Distinct depth-2 nodes may project to the same vertex.
        let mut seen = std::collections::HashMap::new();
        for node in 0..deep.node_count() {
            if deep.level(node) == 2 {
                *seen.entry(deep.psi(node)).or_insert(0usize) += 1;
            }
        }
        assert!(seen.values().any(|&c| c > 1));

        // A node's parent projects onto a neighbour of the node's image.
        for node in 1..deep.node_count() {
            let p = deep.parent(node).unwrap();
            assert!(deep.base().has_edge(deep.psi(p), deep.psi(node)));
            assert_eq!(deep.level(node), deep.level(p) + 1);
        }
    }

    #[test]
    fn irregular_thin_or_split_graphs_are_rejected() {
        let err = build_cover(&Graph::bowtie(), 0, 2).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)), "{err}");
        let err = build_cover(&Graph::cycle(5), 0, 2).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)), "{err}");
        let mut edges = Vec::new();
        for block in 0..2 {
            let off = 4 * block;
            for u in 0..4 {
                for v in (u + 1)..4 {
                    edges.push((off + u, off + v));
                }
            }
        }
        let split = Graph::from_edges(8, &edges).unwrap();
        let err = build_cover(&split, 0, 2).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)), "{err}");
        assert!(build_cover(&k4(), 7, 2).is_err());
    }

    #[test]
    fn children_enumerate_non_backtracking_extensions() {
        let mut tree = build_cover(&k4(), 0, 1).unwrap();
        assert_eq!(tree.node_count(), 4);
        let c0 = tree.children(0)[0];
        let before = tree.node_count();
        let grand: Vec<usize> = tree.children(c0).to_vec();
        assert_eq!(tree.node_count(), before + 2);
        let head = tree.psi(c0);
        let mut expect: Vec<Vertex> = tree.base().neighbors(head).filter(|&w| w != 0).collect();
        let mut got: Vec<Vertex> = grand.iter().map(|&x| tree.psi(x)).collect();
        expect.sort_unstable();
        got.sort_unstable();
        assert_eq!(got, expect);
        for &x in &grand {
            let label = tree.path_label(x);
            assert_eq!(label.len(), 3);
            assert_eq!(label[0], 0);
            for w in label.windows(2) {
                assert!(tree.base().has_edge(w[0], w[1]));
            }
            assert_ne!(label[2], label[0]);
        }
        // Repeated access does not materialise twice.
        let again = tree.children(c0).to_vec();
        assert_eq!(again, grand);
        assert_eq!(tree.node_count(), before + 2);
    }

    /// Tree neighbours of every node, children included only where they
    /// are already materialised deep enough for the planned horizon.
    fn tree_adjacency(tree: &mut CoverTree, steps: usize) -> Vec<Vec<usize>> {
        let n = tree.node_count();
        let mut adjacency = Vec::with_capacity(n);
        for x in 0..n {
            let mut v = Vec::new();
            if let Some(p) = tree.parent(x) {
                v.push(p);
            }
            if tree.level(x) < steps {
                v.extend_from_slice(tree.children(x));
            }
            adjacency.push(v);
        }
        assert_eq!(tree.node_count(), n, "adjacency scan must not grow the tree");
        adjacency
    }

    /// Exact distribution of the tree walk after each step, by dynamic
    /// programming over the materialised nodes.
    fn tree_walk_distribution(tree: &mut CoverTree, steps: usize) -> Vec<Vec<Rat>> {
        let share = rone() / rat(tree.degree() as i64, 1);
        let adjacency = tree_adjacency(tree, steps);
        let mut dist = vec![rzero(); adjacency.len()];
        dist[0] = rone();
        let mut out = vec![dist.clone()];
        for _ in 0..steps {
            let mut next = vec![rzero(); adjacency.len()];
            for node in 0..dist.len() {
                if dist[node].is_zero() {
                    continue;
                }
                let mass = dist[node].clone() * &share;
                for &m in &adjacency[node] {
                    next[m] += &mass;
                }
            }
            dist = next;
            out.push(dist.clone());
        }
        out
    }

    #[test]
    fn projected_walk_laws_match_simple_walk_powers() {
        for g in [k4(), Graph::complete(8), Graph::torus(&[3, 3])] {
            let mut tree = build_cover(&g, 0, 5).unwrap();
            let dists = tree_walk_distribution(&mut tree, 4);
            let srw = srw_kernel(&Network::unit(g.clone())).unwrap();
            let root_ix = srw.space().index_of(&0).unwrap();
            for n in 0..=4 {
                let power = srw.power(n);
                let mut push = vec![rzero(); g.n()];
                for (node, mass) in dists[n].iter().enumerate() {
                    if !mass.is_zero() {
                        push[tree.psi(node)] += mass;
                    }
                }
                for v in 0..g.n() {
                    let expect = power.entry(root_ix, srw.space().index_of(&v).unwrap());
                    assert_eq!(push[v], expect, "graph {} n {n} vertex {v}", g.name());
                }
            }
        }
    }

    /// Exhaustive trajectory count over the depth-capped cover, keeping
    /// track of the last visited node at one fixed level. Returns the
    /// per-anchor counts among trajectories whose final level certifies
    /// the record at the given margin, together with the certified total.
    fn certified_anchor_counts(
        tree: &mut CoverTree,
        steps: usize,
        anchor_level: usize,
        margin: usize,
    ) -> (std::collections::BTreeMap<usize, u64>, u64) {
        let anchors: Vec<usize> = (0..tree.node_count())
            .filter(|&x| tree.level(x) == anchor_level)
            .collect();
        let code_of: std::collections::HashMap<usize, usize> =
            anchors.iter().enumerate().map(|(i, &x)| (x, i + 1)).collect();
        let codes = anchors.len() + 1;
        let adjacency = tree_adjacency(tree, steps);
        let n_nodes = adjacency.len();
        let mut counts = vec![0u64; n_nodes * codes];
        counts[0] = 1;
        for _ in 0..steps {
            let mut next = vec![0u64; n_nodes * codes];
            for node in 0..n_nodes {
                for code in 0..codes {
                    let c = counts[node * codes + code];
                    if c == 0 {
                        continue;
                    }
                    for &m in &adjacency[node] {
                        let new_code = *code_of.get(&m).unwrap_or(&code);
                        next[m * codes + new_code] += c;
                    }
                }
            }
            counts = next;
        }
        let mut tally = std::collections::BTreeMap::new();
        let mut total = 0u64;
        for node in 0..n_nodes {
            if tree.level(node) < anchor_level + margin {
                continue;
            }
            for code in 0..codes {
                let c = counts[node * codes + code];
                if c == 0 {
                    continue;
                }
                assert_ne!(code, 0, "deep trajectory with no anchor visit");
                *tally.entry(anchors[code - 1]).or_insert(0) += c;
                total += c;
            }
        }
        (tally, total)
    }

    #[test]
    fn certified_enumeration_recovers_the_non_backtracking_path_law() {
        let steps = 12;
        let margin = 5;
        let nb = nbrw_kernel(&k4()).unwrap();
        for anchor_level in 1..=3 {
            let mut tree = build_cover(&k4(), 0, steps + 1).unwrap();
            let (tally, total) = certified_anchor_counts(&mut tree, steps, anchor_level, margin);
            let class_size = 3 * 2usize.pow(anchor_level as u32 - 1);
            assert_eq!(tally.len(), class_size);
            assert!(total > 0);
            let common = *tally.values().next().unwrap();
            for (&anchor, &count) in &tally {
                assert_eq!(count, common, "anchor {anchor}");
            }
            assert_eq!(common * class_size as u64, total);

            // The conditional mass of each anchor equals the direct
            // non-backtracking path probability of its label.
            let mut labels = std::collections::BTreeSet::new();
            for &anchor in tally.keys() {
                let label = tree.path_label(anchor);
                let mut prob = rat(1, 3);
                for pair in label.windows(3) {
                    let a = Dart { tail: pair[0], head: pair[1] };
                    let b = Dart { tail: pair[1], head: pair[2] };
                    let i = nb.space().index_of(&a).unwrap();
                    let j = nb.space().index_of(&b).unwrap();
                    prob *= nb.entry(i, j);
                }
                assert_eq!(prob, rat(1, class_size as i64));
                labels.insert(label);
            }
            assert_eq!(labels.len(), class_size);
        }
    }

    #[test]
    fn literal_enumeration_certifies_the_ancestor_chain() {
        let steps = 8usize;
        let margin = 3;
        let mut tree = build_cover(&k4(), 0, steps + 1).unwrap();
        let adjacency = tree_adjacency(&mut tree, steps);
        let mut tally = std::collections::BTreeMap::new();
        let mut certified = 0u64;
        let mut trajectories = 0u64;
        let mut walk = vec![0usize];
        let mut branches: Vec<usize> = Vec::new();
        loop {
            if walk.len() < steps + 1 {
                let x = *walk.last().unwrap();
                branches.push(0);
                walk.push(adjacency[x][0]);
                continue;
            }
            trajectories += 1;
            let final_level = tree.level(*walk.last().unwrap());
            if final_level >= 3 + margin {
                let mut last = [None; 4];
                for &x in &walk {
                    let l = tree.level(x);
                    if l <= 3 {
                        last[l] = Some(x);
                    }
                }
                let (w1, w2, w3) = (last[1].unwrap(), last[2].unwrap(), last[3].unwrap());
                assert_eq!(tree.parent(w3), Some(w2));
                assert_eq!(tree.parent(w2), Some(w1));
                assert_eq!(tree.parent(w1), Some(0));
                *tally.entry(w3).or_insert(0u64) += 1;
                certified += 1;
            }
            // Advance the mixed-radix trajectory counter.
            let mut done = true;
            while let Some(branch) = branches.pop() {
                walk.pop();
                let x = *walk.last().unwrap();
                if branch + 1 < adjacency[x].len() {
                    branches.push(branch + 1);
                    walk.push(adjacency[x][branch + 1]);
                    done = false;
                    break;
                }
            }
            if done {
                break;
            }
        }
        assert_eq!(trajectories, 3u64.pow(steps as u32));
        assert!(certified > 0);
        assert_eq!(tally.len(), 12);
        let common = *tally.values().next().unwrap();
        for &c in tally.values() {
            assert_eq!(c, common);
        }
        assert_eq!(common * 12, certified);
    }

    #[test]
    fn coupled_walk_projects_and_certifies_faithfully() {
        let g = k4();
        let mut tree = build_cover(&g, 0, 2).unwrap();
        assert_eq!(tree.node_count(), 10);
        let walk = coupled_walks(&mut tree, 4000, 5, 20);
        assert_eq!(walk.nodes().len(), 4001);
        assert_eq!(walk.projection()[0], 0);
        for t in 0..4000 {
            let (a, b) = (walk.projection()[t], walk.projection()[t + 1]);
            assert!(g.has_edge(a, b), "step {t}: {a} -> {b}");
        }
        assert!(walk.expanded_nodes() > 0);
        assert_eq!(tree.node_count(), 10 + walk.expanded_nodes());

        let certified = walk.certified_ray();
        assert!(certified.len() >= 2);
        assert_eq!(certified.len(), walk.final_level().saturating_sub(20) + 1);
        for pair in certified.windows(2) {
            assert_eq!(tree.parent(pair[1].node), Some(pair[0].node));
            assert!(pair[1].last_exit > pair[0].last_exit);
        }
        let ray_path = walk.ray_projection();
        assert_eq!(ray_path[0], 0);
        for w in ray_path.windows(2) {
            assert!(g.has_edge(w[0], w[1]));
        }
        for w in ray_path.windows(3) {
            assert_ne!(w[2], w[0], "ray projection backtracked");
        }
        for r in walk.regenerations() {
            assert_eq!(walk.projection()[r.sigma], 0);
            assert!(r.tau >= r.sigma);
            assert_eq!(r.success, r.tau == r.sigma);
            if r.success {
                assert!(r.on_ray);
            }
        }

        let csv = walk.regeneration_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "index,tau,sigma,rho,success,on_ray,certified"
        );
        assert_eq!(lines.count(), walk.regenerations().len());

        let mut tree2 = build_cover(&g, 0, 2).unwrap();
        let rerun = coupled_walks(&mut tree2, 4000, 5, 20);
        assert_eq!(rerun.nodes(), walk.nodes());
        assert_eq!(rerun.regeneration_csv(), csv);
        let mut tree3 = build_cover(&g, 0, 2).unwrap();
        let other = coupled_walks(&mut tree3, 4000, 6, 20);
        assert_ne!(other.nodes(), walk.nodes());
    }

    #[test]
    fn regeneration_success_statistics_match_the_gap_mixture() {
        let mut tree = build_cover(&k4(), 0, 8).unwrap();
        let walk = coupled_walks(&mut tree, 1_200_000, 42, 40);
        let (succ, total) = walk.success_counts();
        assert!(total >= 100_000, "only {total} certified regenerations");
        let freq = succ as f64 / total as f64;
        let sigma = (freq * (1.0 - freq) / total as f64).sqrt();

        // Per-visit success has probability (d-2)/d scaled up by the
        // conditioning that the walk stays above the previous record, so
        // every mixture of level gaps stays in [(d-2)/d, (d-1)/d].
        assert!(freq >= 1.0 / 3.0 - 3.0 * sigma, "frequency {freq}");
        assert!(freq <= 2.0 / 3.0 + 3.0 * sigma, "frequency {freq}");
        assert!((0.390..0.414).contains(&freq), "frequency {freq}");

        let regs = walk.certified_regenerations();
        let mut by_gap: std::collections::BTreeMap<usize, (usize, usize)> =
            std::collections::BTreeMap::new();
        let mut prev_rho = 0usize;
        for r in regs {
            let gap = r.rho - prev_rho;
            let e = by_gap.entry(gap).or_insert((0, 0));
            e.1 += 1;
            if r.success {
                e.0 += 1;
            }
            prev_rho = r.rho;
        }
        for (&gap, &(s, n)) in &by_gap {
            if n < 3000 {
                continue;
            }
            let rate = s as f64 / n as f64;
            let predicted = (1.0 / 3.0) / (1.0 - 0.5f64.powi(gap as i32));
            let sd = (predicted * (1.0 - predicted) / n as f64).sqrt();
            assert!(
                (rate - predicted).abs() <= 4.0 * sd,
                "gap {gap}: rate {rate}, predicted {predicted}, n {n}"
            );
        }
        // A success leaves the walk on a node projecting to the root, and
        // no non-backtracking extension returns there in under the girth.
        for pair in regs.windows(2) {
            if pair[0].success {
                assert!(pair[1].rho - pair[0].rho >= 3);
            }
        }

        let (hits, attempts) = walk.ray_membership_counts();
        let ray_freq = hits as f64 / attempts as f64;
        let ray_sigma = (ray_freq * (1.0 - ray_freq) / attempts as f64).sqrt();
        assert!(ray_freq >= 0.5 - 3.0 * ray_sigma, "ray frequency {ray_freq}");
        assert!((0.750..0.775).contains(&ray_freq), "ray frequency {ray_freq}");

        // Higher degree pushes the whole mixture toward its per-visit
        // floor (d-2)/d; on the 7-regular K8 every gap value sits in
        // [5/7, 6/7].
        let mut tree8 = build_cover(&Graph::complete(8), 0, 8).unwrap();
        let walk8 = coupled_walks(&mut tree8, 300_000, 43, 40);
        let (s8, t8) = walk8.success_counts();
        assert!(t8 >= 10_000);
        let f8 = s8 as f64 / t8 as f64;
        let sd8 = (f8 * (1.0 - f8) / t8 as f64).sqrt();
        assert!(f8 >= 5.0 / 7.0 - 3.0 * sd8, "K8 frequency {f8}");
        assert!(f8 <= 6.0 / 7.0 + 3.0 * sd8, "K8 frequency {f8}");
    }

    #[test]
    fn level_exit_increments_have_an_exponential_tail() {
        let mut tree = build_cover(&k4(), 0, 8).unwrap();
        let walk = coupled_walks(&mut tree, 1_200_000, 7, 40);

        let incs = walk.level_increments();
        assert!(incs.len() >= 100_000);
        // Consecutive levels differ by one, so exit times differ by an
        // odd step count; the survival staircase pairs up accordingly.
        assert!(incs.iter().all(|&x| x % 2 == 1));
        let report = tau_tail(&incs, 1, 15).unwrap();
        assert!((2.95..3.05).contains(&report.mean), "mean {}", report.mean);
        assert!(report.slope < 0.0);
        for k in 0..7 {
            assert_eq!(report.survival[2 * k].1, report.survival[2 * k + 1].1);
        }
        assert!(
            (0.960..0.978).contains(&report.r_squared),
            "r^2 {}",
            report.r_squared
        );
        assert!(
            report.lag1.abs() <= 3.0 * report.lag1_sigma,
            "lag1 {} sigma {}",
            report.lag1,
            report.lag1_sigma
        );

        // Watching only the regeneration subsequence smooths the
        // staircase out but couples neighbouring gaps.
        let regs = walk.regeneration_increments();
        assert!(regs.len() >= 100_000);
        let reg_report = tau_tail(&regs, 1, 15).unwrap();
        assert!((9.5..10.3).contains(&reg_report.mean), "mean {}", reg_report.mean);
        assert!(reg_report.slope < 0.0);
        assert!(reg_report.r_squared > 0.98, "r^2 {}", reg_report.r_squared);
        assert!(
            reg_report.lag1 < -3.0 * reg_report.lag1_sigma,
            "lag1 {}",
            reg_report.lag1
        );

        let mut tree8 = build_cover(&Graph::complete(8), 0, 8).unwrap();
        let walk8 = coupled_walks(&mut tree8, 300_000, 9, 40);
        let incs8 = walk8.level_increments();
        let report8 = tau_tail(&incs8, 1, 15).unwrap();
        assert!(
            report8.mean + 0.5 < report.mean,
            "K8 mean {} vs K4 mean {}",
            report8.mean,
            report.mean
        );
    }

    #[test]
    fn tail_reports_reject_thin_or_degenerate_input() {
        let thin = vec![1usize; 9_999];
        assert!(matches!(
            tau_tail(&thin, 1, 15),
            Err(Error::InvalidParameter(_))
        ));
        let enough = vec![5usize; 10_000];
        assert!(matches!(
            tau_tail(&enough, 0, 15),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            tau_tail(&enough, 9, 3),
            Err(Error::InvalidParameter(_))
        ));
        // All mass above the window: survival is identically one and the
        // flat fit is reported rather than rejected.
        let report = tau_tail(&enough, 1, 4).unwrap();
        assert_eq!(report.slope, 0.0);
        assert_eq!(report.r_squared, 1.0);
        // No mass above the window start: too few usable points.
        let low = vec![1usize; 10_000];
        assert!(matches!(
            tau_tail(&low, 1, 15),
            Err(Error::InvalidParameter(_))
        ));
    }
}
