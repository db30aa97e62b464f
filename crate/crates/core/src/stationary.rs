//! Window multiplicities, the product-form stationary measure of the edge
//! window walk, and exact verification of its reversal symmetries: the
//! multiset identity behind the measure, the trajectory-level and
//! kernel-level symmetry equations, and the counterexample search showing
//! the vertex walk has no such symmetry.

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::kernel::Kernel;
use crate::ratio::{rone, Rat};
use crate::space::{PathState, Reversible};
use crate::walks::{self, knbrw, nbrw_kernel, stuck_check, WalkMode};
use std::collections::BTreeMap;

/// Window-multiplicity data of a path: for each position `i`, how many of
/// the last `k` positions (the position itself included) hold the same
/// vertex, and the per-vertex multiset of these counts over the interior
/// positions only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityProfile {
    pub path: PathState,
    pub k: usize,
    /// `m[i] = |{j : i - k < j <= i, gamma_j = gamma_i}|` for every position.
    pub m: Vec<usize>,
    /// For each vertex `v`, the sorted multiset of `m[i]` over interior
    /// positions `i` in `1..s` with `gamma_i = v`. Endpoints are excluded.
    pub per_vertex: BTreeMap<Vertex, Vec<usize>>,
}

pub fn multiplicity_profile(gamma: &PathState, k: usize) -> Result<MultiplicityProfile> {
    let s = gamma.steps();
    if k == 0 || s < k {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= path steps, got k = {k} on {s} steps"
        )));
    }
    let m: Vec<usize> = (0..=s)
        .map(|i| {
            let lo = i.saturating_sub(k - 1);
            (lo..=i).filter(|&j| gamma.0[j] == gamma.0[i]).count()
        })
        .collect();
    let mut per_vertex: BTreeMap<Vertex, Vec<usize>> = BTreeMap::new();
    for i in 1..s {
        per_vertex.entry(gamma.0[i]).or_default().push(m[i]);
    }
    for counts in per_vertex.values_mut() {
        counts.sort_unstable();
    }
    Ok(MultiplicityProfile {
        path: gamma.clone(),
        k,
        m,
        per_vertex,
    })
}

/// The product-form weight of an edge-distinct window state: over the
/// interior positions, one factor `1 / (deg(gamma_i) - m_i)`. The empty
/// product at window length 1 makes this the counting measure on directed
/// edges.
pub fn pi_ke(g: &Graph, gamma: &PathState) -> Result<Rat> {
    if !gamma.is_walk_in(g) {
        return Err(Error::NotAPath(format!("{gamma}")));
    }
    let k = gamma.steps();
    if !walks::is_distinct(g, WalkMode::Edge, gamma) {
        return Err(Error::NotAPath(format!("{gamma} repeats an edge")));
    }
    let prof = multiplicity_profile(gamma, k)?;
    let mut value = rone();
    for i in 1..k {
        let v = gamma.0[i];
        let denom = g.degree(v) as i64 - prof.m[i] as i64;
        if denom <= 0 {
            return Err(Error::DegenerateMultiplicity {
                v,
                index: i,
                value: denom,
            });
        }
        value /= Rat::new(denom.into(), 1.into());
    }
    Ok(value)
}

/// The weight vector over a state space of edge-distinct window states.
pub fn pi_ke_measure(
    g: &Graph,
    space: &crate::space::StateSpace<PathState>,
) -> Result<Vec<Rat>> {
    space.states().iter().map(|p| pi_ke(g, p)).collect()
}

/// All length-`s` walks whose every `k`-step window is edge-distinct.
pub fn enumerate_window_distinct_paths(
    g: &Graph,
    k: usize,
    s: usize,
    cap: usize,
) -> Result<Vec<PathState>> {
    if s < k || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= s, got k = {k}, s = {s}"
        )));
    }
    let mut out = Vec::new();
    let mut verts: Vec<Vertex> = Vec::with_capacity(s + 1);
    let mut edges: Vec<usize> = Vec::with_capacity(s);
    fn rec(
        g: &Graph,
        k: usize,
        s: usize,
        cap: usize,
        verts: &mut Vec<Vertex>,
        edges: &mut Vec<usize>,
        out: &mut Vec<PathState>,
    ) -> Result<()> {
        if verts.len() == s + 1 {
            if out.len() >= cap {
                return Err(Error::TrajectoryCap { cap });
            }
            out.push(PathState(verts.clone()));
            return Ok(());
        }
        let last = *verts.last().unwrap();
        for &(v, e) in g.incident(last) {
            // Every window stays edge-distinct iff each new edge differs
            // from the previous k - 1 edges.
            let lo = edges.len().saturating_sub(k - 1);
            if edges[lo..].contains(&e) {
                continue;
            }
            verts.push(v);
            edges.push(e);
            rec(g, k, s, cap, verts, edges, out)?;
            verts.pop();
            edges.pop();
        }
        Ok(())
    }
    for v in 0..g.n() {
        verts.push(v);
        rec(g, k, s, cap, &mut verts, &mut edges, &mut out)?;
        verts.pop();
    }
    Ok(out)
}

/// Exhaustive check that per-vertex multiplicity multisets are invariant
/// under path reversal, together with the two structural identities behind
/// the inductive argument: dropping the last coordinate removes exactly one
/// multiset entry, and dropping the first shifts each count by an explicit
/// indicator.
#[derive(Clone, Debug)]
pub struct MultisetReversalReport {
    pub k: usize,
    pub s: usize,
    pub checked: usize,
    /// Paths whose reversal fails to stay in the enumerated set.
    pub closure_failures: Vec<PathState>,
    /// `(path, vertex)` pairs with differing multisets under reversal.
    pub counterexamples: Vec<(PathState, Vertex)>,
    /// Failures of the drop-last identity.
    pub drop_last_failures: Vec<PathState>,
    /// Failures of the shifted drop-first identity.
    pub drop_first_failures: Vec<PathState>,
}

impl MultisetReversalReport {
    pub fn ok(&self) -> bool {
        self.closure_failures.is_empty()
            && self.counterexamples.is_empty()
            && self.drop_last_failures.is_empty()
            && self.drop_first_failures.is_empty()
    }
}

pub fn verify_multiset_reversal(
    g: &Graph,
    k: usize,
    s: usize,
    cap: usize,
) -> Result<MultisetReversalReport> {
    let paths = enumerate_window_distinct_paths(g, k, s, cap)?;
    let index: std::collections::HashSet<&PathState> = paths.iter().collect();
    let mut report = MultisetReversalReport {
        k,
        s,
        checked: paths.len(),
        closure_failures: Vec::new(),
        counterexamples: Vec::new(),
        drop_last_failures: Vec::new(),
        drop_first_failures: Vec::new(),
    };
    for gamma in &paths {
        let rev = gamma.reversed();
        if !index.contains(&rev) {
            report.closure_failures.push(gamma.clone());
            continue;
        }
        let a = multiplicity_profile(gamma, k)?;
        let b = multiplicity_profile(&rev, k)?;
        let verts: std::collections::BTreeSet<Vertex> = a
            .per_vertex
            .keys()
            .chain(b.per_vertex.keys())
            .copied()
            .collect();
        for v in verts {
            let empty = Vec::new();
            let av = a.per_vertex.get(&v).unwrap_or(&empty);
            let bv = b.per_vertex.get(&v).unwrap_or(&empty);
            if av != bv {
                report.counterexamples.push((gamma.clone(), v));
            }
        }
        if s > k {
            // Dropping the last coordinate removes exactly the interior
            // entry at position s - 1; all other counts are untouched.
            let alpha = PathState(gamma.0[..s].to_vec());
            let pa = multiplicity_profile(&alpha, k)?;
            let mut expected = pa.per_vertex.clone();
            expected
                .entry(gamma.0[s - 1])
                .or_default()
                .push(a.m[s - 1]);
            for counts in expected.values_mut() {
                counts.sort_unstable();
            }
            if expected != a.per_vertex {
                report.drop_last_failures.push(gamma.clone());
            }
            // Dropping the first coordinate: counts at positions still
            // inside the first window lose the contribution of the removed
            // coordinate.
            let delta = PathState(gamma.0[1..].to_vec());
            let pd = multiplicity_profile(&delta, k)?;
            for t in 1..s {
                let correction = usize::from(t < k && gamma.0[t] == gamma.0[0]);
                if a.m[t] != pd.m[t - 1] + correction {
                    report.drop_first_failures.push(gamma.clone());
                    break;
                }
            }
        }
    }
    Ok(report)
}

/// Which walk a symmetry check runs on: the plain non-backtracking walk on
/// directed edges with the counting measure, or the edge window walk with
/// its product-form measure.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SymmetryWalk {
    Nbrw,
    EdgeWindow,
}

#[derive(Clone, Debug)]
pub struct TrajectorySymmetryReport {
    pub n: usize,
    pub trajectories_checked: usize,
    /// Offending trajectories as state-index sequences.
    pub counterexamples: Vec<Vec<usize>>,
}

impl TrajectorySymmetryReport {
    pub fn ok(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn trajectory_symmetry_core<S: Reversible>(
    kernel: &Kernel<S>,
    pi: &[Rat],
    n: usize,
    cap: usize,
) -> Result<TrajectorySymmetryReport> {
    let rev = kernel.space().reversal_permutation()?;
    let mut report = TrajectorySymmetryReport {
        n,
        trajectories_checked: 0,
        counterexamples: Vec::new(),
    };
    let mut stack: Vec<usize> = Vec::with_capacity(n + 1);
    fn rec<S: Reversible>(
        kernel: &Kernel<S>,
        pi: &[Rat],
        rev: &[usize],
        n: usize,
        cap: usize,
        stack: &mut Vec<usize>,
        report: &mut TrajectorySymmetryReport,
    ) -> Result<()> {
        if stack.len() == n + 1 {
            if report.trajectories_checked >= cap {
                return Err(Error::TrajectoryCap { cap });
            }
            report.trajectories_checked += 1;
            let mut lhs = pi[stack[0]].clone();
            for w in stack.windows(2) {
                lhs *= kernel.entry(w[0], w[1]);
            }
            let mut rhs = pi[stack[n]].clone();
            for i in 0..n {
                rhs *= kernel.entry(rev[stack[n - i]], rev[stack[n - i - 1]]);
            }
            if lhs != rhs {
                report.counterexamples.push(stack.clone());
            }
            return Ok(());
        }
        let cur = *stack.last().unwrap();
        for (j, _) in kernel.row(cur) {
            stack.push(*j);
            rec(kernel, pi, rev, n, cap, stack, report)?;
            stack.pop();
        }
        Ok(())
    }
    for start in 0..kernel.n() {
        stack.push(start);
        rec(kernel, pi, &rev, n, cap, &mut stack, &mut report)?;
        stack.pop();
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct KernelSymmetryReport {
    pub n: usize,
    pub pairs_checked: usize,
    pub counterexamples: Vec<(usize, usize)>,
    /// Same identity for the lazy kernel `(I + P) / 2`.
    pub lazy_counterexamples: Vec<(usize, usize)>,
}

impl KernelSymmetryReport {
    pub fn ok(&self) -> bool {
        self.counterexamples.is_empty() && self.lazy_counterexamples.is_empty()
    }
}

fn kernel_symmetry_core<S: Reversible>(
    kernel: &Kernel<S>,
    pi: &[Rat],
    n: usize,
) -> Result<KernelSymmetryReport> {
    let rev = kernel.space().reversal_permutation()?;
    let m = kernel.n();
    let pow: Vec<Vec<Rat>> = (0..m).map(|i| kernel.distribution_after(i, n)).collect();
    let lazy = kernel.lazy();
    let lazy_pow: Vec<Vec<Rat>> = (0..m).map(|i| lazy.distribution_after(i, n)).collect();
    let mut report = KernelSymmetryReport {
        n,
        pairs_checked: m * m,
        counterexamples: Vec::new(),
        lazy_counterexamples: Vec::new(),
    };
    for a in 0..m {
        for b in 0..m {
            if &pi[a] * &pow[a][b] != &pi[b] * &pow[rev[b]][rev[a]] {
                report.counterexamples.push((a, b));
            }
            if &pi[a] * &lazy_pow[a][b] != &pi[b] * &lazy_pow[rev[b]][rev[a]] {
                report.lazy_counterexamples.push((a, b));
            }
        }
    }
    Ok(report)
}

/// The kernel and measure a symmetry check runs on. For the window walk the
/// chain must be stuck-free, so that every reachable state carries a weight.
fn symmetry_instance(
    g: &Graph,
    k: usize,
    walk: SymmetryWalk,
    cap: usize,
) -> Result<(Kernel<PathState>, Vec<Rat>)> {
    match walk {
        SymmetryWalk::Nbrw => {
            let b = nbrw_kernel(g)?;
            let n = b.n();
            // Re-expressed over 2-vertex path states so both walks share a
            // state type; the counting measure is the all-ones vector.
            let space = std::rc::Rc::new(crate::space::StateSpace::new(
                b.space()
                    .states()
                    .iter()
                    .map(|d| PathState(vec![d.tail, d.head]))
                    .collect(),
            )?);
            let rows = (0..n).map(|i| kernelrow_clone(&b, i)).collect();
            Ok((Kernel::new(space, rows)?, vec![rone(); n]))
        }
        SymmetryWalk::EdgeWindow => {
            let stuck = stuck_check(g, k, WalkMode::Edge, cap)?;
            if !stuck.never_stuck {
                return Err(Error::StuckStates(stuck.stuck_states.len()));
            }
            let (kernel, _) = knbrw(g, k, WalkMode::Edge, cap)?;
            let pi = pi_ke_measure(g, kernel.space())?;
            Ok((kernel, pi))
        }
    }
}

fn kernelrow_clone(k: &Kernel<crate::space::Dart>, i: usize) -> Vec<(usize, Rat)> {
    k.row(i).to_vec()
}

/// Exhaustively checks the trajectory-level reversal symmetry
/// `pi(a_0) prod P(a_i, a_{i+1}) = pi(a_n) prod P(a_{n-i}^r, a_{n-i-1}^r)`.
pub fn verify_trajectory_symmetry(
    g: &Graph,
    k: usize,
    n: usize,
    walk: SymmetryWalk,
    cap: usize,
) -> Result<TrajectorySymmetryReport> {
    let (kernel, pi) = symmetry_instance(g, k, walk, cap)?;
    trajectory_symmetry_core(&kernel, &pi, n, cap)
}

/// Checks the summed form `pi(a) P^n(a, b) = pi(b) P^n(b^r, a^r)` for all
/// state pairs, for both the kernel and its lazy version.
pub fn verify_kernel_symmetry(
    g: &Graph,
    k: usize,
    n: usize,
    walk: SymmetryWalk,
    cap: usize,
) -> Result<KernelSymmetryReport> {
    let (kernel, pi) = symmetry_instance(g, k, walk, cap)?;
    kernel_symmetry_core(&kernel, &pi, n)
}

/// A failing instance of the reversal symmetry for the vertex window walk.
#[derive(Clone, Debug)]
pub struct VertexSymmetryWitness {
    pub alpha: PathState,
    pub beta: PathState,
    pub n: usize,
    pub lhs: Rat,
    pub rhs: Rat,
}

/// Searches for a pair of vertex-distinct states violating
/// `pi(a) P^n(a, b) = pi(b) P^n(b^r, a^r)` for the vertex window walk, with
/// the product-form weight reused as the candidate measure. Returns the
/// first witness in state order, or `None` if the identity happens to hold.
pub fn vertex_symmetry_counterexample(
    g: &Graph,
    k: usize,
    n: usize,
    cap: usize,
) -> Result<Option<VertexSymmetryWitness>> {
    let (kernel, report) = knbrw(g, k, WalkMode::Vertex, cap)?;
    let space = kernel.space();
    let mut ids = Vec::new();
    for p in &report.vertex_distinct {
        ids.push(space.require(p)?);
    }
    let mut weight = vec![None; space.len()];
    for &i in &ids {
        let gamma = space.state(i);
        let prof = multiplicity_profile(gamma, k)?;
        let mut value = rone();
        let mut ok = true;
        for t in 1..k {
            let denom = g.degree(gamma.0[t]) as i64 - prof.m[t] as i64;
            if denom <= 0 {
                ok = false;
                break;
            }
            value /= Rat::new(denom.into(), 1.into());
        }
        if ok {
            weight[i] = Some(value);
        }
    }
    let rev = space.reversal_permutation()?;
    let pow: Vec<Vec<Rat>> = (0..space.len())
        .map(|i| kernel.distribution_after(i, n))
        .collect();
    for &a in &ids {
        for &b in &ids {
            let (Some(wa), Some(wb)) = (&weight[a], &weight[b]) else {
                continue;
            };
            let lhs = wa * &pow[a][b];
            let rhs = wb * &pow[rev[b]][rev[a]];
            if lhs != rhs {
                return Ok(Some(VertexSymmetryWitness {
                    alpha: space.state(a).clone(),
                    beta: space.state(b).clone(),
                    n,
                    lhs,
                    rhs,
                }));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    #[test]
    fn multiplicity_counts_repeats_in_window() {
        // Walk a-b-a-b on a single edge (a = 0, b = 1), window 3.
        let gamma = PathState(vec![0, 1, 0, 1]);
        let prof = multiplicity_profile(&gamma, 3).unwrap();
        assert_eq!(prof.m, vec![1, 1, 2, 2]);
        assert_eq!(prof.per_vertex[&0], vec![2]);
        assert_eq!(prof.per_vertex[&1], vec![1]);
    }

    #[test]
    fn weight_is_half_on_k4_and_degree_sensitive_on_bowtie() {
        let k4 = Graph::complete(4);
        assert_eq!(pi_ke(&k4, &PathState(vec![0, 1, 2])).unwrap(), rat(1, 2));
        let bt = Graph::bowtie();
        assert_eq!(pi_ke(&bt, &PathState(vec![0, 2, 3])).unwrap(), rat(1, 3));
        assert_eq!(pi_ke(&bt, &PathState(vec![2, 0, 1])).unwrap(), rone());
        assert_eq!(pi_ke(&bt, &PathState(vec![0, 1])).unwrap(), rone());
    }

    #[test]
    fn window_distinct_paths_on_triangle() {
        // On C3 with k = 2, any number of steps works: the walk just keeps
        // rotating, and consecutive edges always differ.
        let g = Graph::cycle(3);
        let p = enumerate_window_distinct_paths(&g, 2, 4, 100_000).unwrap();
        assert_eq!(p.len(), 6);
        assert!(p.contains(&PathState(vec![0, 1, 2, 0, 1])));
    }

    #[test]
    fn multiset_reversal_on_bowtie() {
        let g = Graph::bowtie();
        for s in 2..=4 {
            let r = verify_multiset_reversal(&g, 2, s, 1_000_000).unwrap();
            assert!(r.checked > 0);
            assert!(r.ok(), "failure at s = {s}: {r:?}");
        }
    }

    #[test]
    fn trajectory_symmetry_nbrw_on_k4() {
        let g = Graph::complete(4);
        let r = verify_trajectory_symmetry(&g, 1, 3, SymmetryWalk::Nbrw, 1_000_000).unwrap();
        assert_eq!(r.trajectories_checked, 96);
        assert!(r.ok());
    }

    #[test]
    fn kernel_symmetry_edge_window_on_bowtie() {
        let g = Graph::bowtie();
        let r = verify_kernel_symmetry(&g, 2, 3, SymmetryWalk::EdgeWindow, 1_000_000).unwrap();
        assert!(r.ok());
    }

    #[test]
    fn vertex_walk_has_a_witness_on_bowtie() {
        let g = Graph::bowtie();
        let w = vertex_symmetry_counterexample(&g, 2, 1, 1_000_000)
            .unwrap()
            .expect("the vertex walk should break the symmetry");
        assert_ne!(w.lhs, w.rhs);
    }
}
