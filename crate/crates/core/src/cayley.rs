//! Cayley graphs of finite abelian groups and the straight-segment family
//! that rides on them.
//!
//! A product of cyclic groups with a symmetric generating set gives a
//! vertex-transitive graph with two special symmetries: translation by any
//! group element, and coordinatewise negation. The family of segment states
//! `alpha_h = (h, h+s, ..., h+ks)` along a fixed generator `s` is closed
//! under both maps and under path reversal, which forces the chain induced
//! on the family by a window walk to be doubly stochastic, symmetric under
//! `(a, b) -> (b^r, a^r)`, and to put one common value on every reversal
//! entry. This module builds the graphs and families, computes the induced
//! chains exactly, and verifies each of those consequences entrywise.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_integer::Integer;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernel::Kernel;
use crate::ratio::{rzero, to_f64, Rat};
use crate::space::{PathState, Reversible, StateSpace};
use crate::walks::{knbrw, WalkMode};

/// A finite abelian group `Z_{n_1} x ... x Z_{n_r}` with a symmetric
/// generating set, the data behind a Cayley graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CayleySpec {
    factors: Vec<usize>,
    strides: Vec<usize>,
    generators: Vec<Vec<usize>>,
}

impl CayleySpec {
    /// Validates the moduli and the generator list: every generator is
    /// reduced coordinatewise, must be nonzero and distinct, the set must
    /// contain each inverse, and the generators must reach the whole group.
    pub fn new(factors: Vec<usize>, generators: &[Vec<i64>]) -> Result<CayleySpec> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("no cyclic factors given".into()));
        }
        if let Some(&bad) = factors.iter().find(|&&n| n < 2) {
            return Err(Error::InvalidParameter(format!(
                "cyclic factor {bad} is trivial, need modulus >= 2"
            )));
        }
        let mut strides = vec![1usize; factors.len()];
        for i in 1..factors.len() {
            strides[i] = strides[i - 1] * factors[i - 1];
        }
        let mut spec = CayleySpec {
            factors,
            strides,
            generators: Vec::new(),
        };
        if generators.is_empty() {
            return Err(Error::InvalidParameter("no generators given".into()));
        }
        let mut seen = BTreeSet::new();
        for g in generators {
            let red = spec.reduce(g)?;
            if red.iter().all(|&c| c == 0) {
                return Err(Error::InvalidParameter(
                    "the zero element cannot be a generator".into(),
                ));
            }
            if !seen.insert(red.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "generator {} listed twice",
                    spec.format_element(&red)
                )));
            }
            spec.generators.push(red);
        }
        for g in &spec.generators {
            if !seen.contains(&spec.neg(g)) {
                return Err(Error::InvalidParameter(format!(
                    "generator set is not symmetric: missing -{}",
                    spec.format_element(g)
                )));
            }
        }
        let mut visited = vec![false; spec.order()];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        let mut count = 1usize;
        while let Some(i) = queue.pop_front() {
            let e = spec.element(i);
            for g in &spec.generators {
                let j = spec.index_of(&spec.add(&e, g));
                if !visited[j] {
                    visited[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        if count != spec.order() {
            return Err(Error::InvalidParameter(format!(
                "generators reach only {count} of {} elements",
                spec.order()
            )));
        }
        Ok(spec)
    }

    pub fn order(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    /// Coordinatewise reduction of possibly negative coordinates.
    pub fn reduce(&self, coords: &[i64]) -> Result<Vec<usize>> {
        if coords.len() != self.rank() {
            return Err(Error::InvalidParameter(format!(
                "element has {} coordinates, group has rank {}",
                coords.len(),
                self.rank()
            )));
        }
        Ok(coords
            .iter()
            .zip(&self.factors)
            .map(|(&c, &n)| c.rem_euclid(n as i64) as usize)
            .collect())
    }

    /// Fixed group-to-vertex numbering: the first coordinate varies fastest.
    pub fn index_of(&self, elem: &[usize]) -> usize {
        elem.iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c * s)
            .sum()
    }

    pub fn element(&self, index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.factors)
            .map(|(&s, &n)| (index / s) % n)
            .collect()
    }

    pub fn add(&self, a: &[usize], b: &[usize]) -> Vec<usize> {
        a.iter()
            .zip(b)
            .zip(&self.factors)
            .map(|((&x, &y), &n)| (x + y) % n)
            .collect()
    }

    pub fn neg(&self, a: &[usize]) -> Vec<usize> {
        a.iter()
            .zip(&self.factors)
            .map(|(&x, &n)| (n - x) % n)
            .collect()
    }

    /// `t`-fold sum of `a` with itself.
    pub fn scale(&self, t: usize, a: &[usize]) -> Vec<usize> {
        a.iter()
            .zip(&self.factors)
            .map(|(&x, &n)| (x * (t % n)) % n)
            .collect()
    }

    pub fn element_order(&self, a: &[usize]) -> usize {
        a.iter()
            .zip(&self.factors)
            .map(|(&x, &n)| n / n.gcd(&x))
            .fold(1usize, |acc, o| acc.lcm(&o))
    }

    pub fn format_element(&self, e: &[usize]) -> String {
        let parts: Vec<String> = e.iter().map(|c| c.to_string()).collect();
        format!("({})", parts.join(","))
    }

    /// Coordinatewise negation applied to a path of vertex indices.
    pub fn negate_path(&self, p: &PathState) -> PathState {
        PathState(
            p.0.iter()
                .map(|&v| self.index_of(&self.neg(&self.element(v))))
                .collect(),
        )
    }

    /// Translation by `c` applied to a path of vertex indices.
    pub fn translate_path(&self, p: &PathState, c: &[usize]) -> PathState {
        PathState(
            p.0.iter()
                .map(|&v| self.index_of(&self.add(&self.element(v), c)))
                .collect(),
        )
    }
}

/// The Cayley graph: vertex `i` is the group element with index `i`, and
/// each generator contributes the edge from `h` to `h + s`. A generator and
/// its inverse give the same undirected edge, so involutions add one edge
/// each and the graph stays simple.
pub fn cayley_graph(spec: &CayleySpec) -> Result<Graph> {
    let mut edges = BTreeSet::new();
    for i in 0..spec.order() {
        let e = spec.element(i);
        for g in spec.generators() {
            let j = spec.index_of(&spec.add(&e, g));
            edges.insert((i.min(j), i.max(j)));
        }
    }
    let list: Vec<(usize, usize)> = edges.into_iter().collect();
    let name = format!(
        "cayley({}; {})",
        spec.factors
            .iter()
            .map(|n| format!("Z{n}"))
            .collect::<Vec<_>>()
            .join("x"),
        spec.generators
            .iter()
            .map(|g| spec.format_element(g))
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(Graph::from_edges(spec.order(), &list)?.with_name(name))
}

/// Which role a path state plays in a segment family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlphaLabel {
    /// Start element of the segment (of its forward reading).
    pub h: usize,
    /// Whether the state was matched as a reversed segment. When a reversed
    /// segment coincides with a forward one, the forward reading wins.
    pub reversed: bool,
}

/// The segment states `alpha_h = (h, h+s, ..., h+ks)` over every start `h`,
/// together with their reversals, deduplicated.
#[derive(Clone, Debug)]
pub struct AlphaFamily {
    spec: CayleySpec,
    s: Vec<usize>,
    k: usize,
    alphas: Vec<PathState>,
    reversed: Vec<PathState>,
    members: Vec<PathState>,
    labels: HashMap<PathState, AlphaLabel>,
}

/// Builds the family and proves its closure properties on the spot: the
/// negation of `alpha_h` is exactly the reversal of `alpha_{-h-ks}`, and
/// the negation of that reversal is `alpha_{-h-ks}` itself. Requires the
/// order of `s` to exceed `k` so every segment has `k + 1` distinct
/// vertices.
pub fn alpha_family(spec: &CayleySpec, s: &[i64], k: usize) -> Result<AlphaFamily> {
    let s = spec.reduce(s)?;
    if !spec.generators().contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "segment direction {} is not a generator",
            spec.format_element(&s)
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("segment length must be >= 1".into()));
    }
    let ord = spec.element_order(&s);
    if ord <= k {
        return Err(Error::InvalidParameter(format!(
            "generator {} has order {ord}, need order > {k} for distinct segment vertices",
            spec.format_element(&s)
        )));
    }
    let n = spec.order();
    let mut alphas = Vec::with_capacity(n);
    let mut reversed = Vec::with_capacity(n);
    for h in 0..n {
        let mut verts = Vec::with_capacity(k + 1);
        let mut e = spec.element(h);
        verts.push(h);
        for _ in 0..k {
            e = spec.add(&e, &s);
            verts.push(spec.index_of(&e));
        }
        let alpha = PathState(verts);
        reversed.push(alpha.reversed());
        alphas.push(alpha);
    }
    let ks = spec.scale(k, &s);
    for h in 0..n {
        let mirror = spec.index_of(&spec.neg(&spec.add(&spec.element(h), &ks)));
        if spec.negate_path(&alphas[h]) != reversed[mirror]
            || spec.negate_path(&reversed[h]) != alphas[mirror]
        {
            return Err(Error::Unsupported(format!(
                "segment family negation closure fails at start {}",
                spec.format_element(&spec.element(h))
            )));
        }
    }
    let mut labels = HashMap::new();
    let mut members = Vec::new();
    for (h, a) in alphas.iter().enumerate() {
        labels.insert(a.clone(), AlphaLabel { h, reversed: false });
        members.push(a.clone());
    }
    for (h, r) in reversed.iter().enumerate() {
        if !labels.contains_key(r) {
            labels.insert(r.clone(), AlphaLabel { h, reversed: true });
            members.push(r.clone());
        }
    }
    Ok(AlphaFamily {
        spec: spec.clone(),
        s,
        k,
        alphas,
        reversed,
        members,
        labels,
    })
}

impl AlphaFamily {
    pub fn spec(&self) -> &CayleySpec {
        &self.spec
    }

    pub fn s(&self) -> &[usize] {
        &self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self, h: usize) -> &PathState {
        &self.alphas[h]
    }

    pub fn alpha_reversed(&self, h: usize) -> &PathState {
        &self.reversed[h]
    }

    /// The distinct family states: all forward segments in start order,
    /// then the reversals that are not themselves forward segments.
    pub fn members(&self) -> &[PathState] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn label_of(&self, state: &PathState) -> Option<AlphaLabel> {
        self.labels.get(state).copied()
    }
}

/// The chain the window walk induces on the segment family: run the walk
/// and record it exactly at its visits to the family. Solved in closed form
/// through the absorption system on the complement. Requires every walk
/// state to reach the family, so the watched chain is defined from
/// everywhere.
pub fn induced_alpha_kernel(
    g: &Graph,
    family: &AlphaFamily,
    mode: WalkMode,
    cap: usize,
) -> Result<Kernel<PathState>> {
    let (kernel, _) = knbrw(g, family.k(), mode, cap)?;
    let space = kernel.space().clone();
    let keep: Vec<usize> = family
        .members()
        .iter()
        .map(|m| space.require(m))
        .collect::<Result<_>>()?;
    let mut reaches = vec![false; kernel.n()];
    let mut queue = VecDeque::new();
    for &i in &keep {
        reaches[i] = true;
        queue.push_back(i);
    }
    let mut reverse = vec![Vec::new(); kernel.n()];
    for (i, row) in kernel.support().into_iter().enumerate() {
        for j in row {
            reverse[j].push(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &p in &reverse[i] {
            if !reaches[p] {
                reaches[p] = true;
                queue.push_back(p);
            }
        }
    }
    if let Some(i) = reaches.iter().position(|r| !r) {
        return Err(Error::TargetNotReached(format!(
            "walk state {} never reaches the segment family",
            space.state(i)
        )));
    }
    kernel.induced_on(&keep)
}

/// Entrywise verification of the structural consequences the group
/// symmetries force on an induced segment chain.
#[derive(Clone, Debug)]
pub struct AlphaSymmetryReport {
    /// Column sums all equal one, so the counting measure is stationary.
    pub doubly_stochastic: bool,
    /// `P(a, b) = P(b^r, a^r)` for every pair.
    pub reversal_symmetric: bool,
    /// The common value of `P(a, a^r)`, present when it is constant.
    pub reversal_entry: Option<Rat>,
    /// `P` is unchanged by translating both arguments, for every translation.
    pub translation_invariant: bool,
    /// `P` is unchanged by negating both arguments.
    pub negation_invariant: bool,
    pub failures: Vec<String>,
}

impl AlphaSymmetryReport {
    pub fn ok(&self) -> bool {
        self.doubly_stochastic
            && self.reversal_symmetric
            && self.reversal_entry.is_some()
            && self.translation_invariant
            && self.negation_invariant
    }
}

const FAILURE_CAP: usize = 8;

fn note(failures: &mut Vec<String>, msg: String) {
    if failures.len() < FAILURE_CAP {
        failures.push(msg);
    }
}

pub fn alpha_symmetry_suite(
    induced: &Kernel<PathState>,
    family: &AlphaFamily,
) -> Result<AlphaSymmetryReport> {
    let space = induced.space();
    let m = induced.n();
    let spec = family.spec();
    let n = spec.order();
    let mut dense = vec![vec![rzero(); m]; m];
    for i in 0..m {
        for (j, w) in induced.row(i) {
            dense[i][*j] = w.clone();
        }
    }
    let rev = space.reversal_permutation()?;
    let mut failures = Vec::new();

    let doubly_stochastic = induced.is_doubly_stochastic();
    if !doubly_stochastic {
        note(&mut failures, "some column sum differs from one".into());
    }

    let mut reversal_symmetric = true;
    for a in 0..m {
        for b in 0..m {
            if dense[a][b] != dense[rev[b]][rev[a]] {
                reversal_symmetric = false;
                note(
                    &mut failures,
                    format!("entry ({a}, {b}) differs from its reversal mirror"),
                );
            }
        }
    }

    let mut reversal_entry = Some(dense[0][rev[0]].clone());
    for a in 1..m {
        if dense[a][rev[a]] != *reversal_entry.as_ref().unwrap() {
            reversal_entry = None;
            note(
                &mut failures,
                format!("reversal entry at state {a} breaks the common value"),
            );
            break;
        }
    }

    let amap: Vec<usize> = (0..n)
        .map(|h| space.require(family.alpha(h)))
        .collect::<Result<_>>()?;
    let rmap: Vec<usize> = (0..n)
        .map(|h| space.require(family.alpha_reversed(h)))
        .collect::<Result<_>>()?;
    let mut translation_invariant = true;
    'trans: for c in 1..n {
        let ce = spec.element(c);
        let shift: Vec<usize> = (0..n)
            .map(|h| spec.index_of(&spec.add(&spec.element(h), &ce)))
            .collect();
        for a in 0..n {
            for b in 0..n {
                let (sa, sb) = (shift[a], shift[b]);
                let same = dense[amap[a]][amap[b]] == dense[amap[sa]][amap[sb]]
                    && dense[rmap[a]][rmap[b]] == dense[rmap[sa]][rmap[sb]]
                    && dense[amap[a]][rmap[b]] == dense[amap[sa]][rmap[sb]]
                    && dense[rmap[a]][amap[b]] == dense[rmap[sa]][amap[sb]];
                if !same {
                    translation_invariant = false;
                    note(
                        &mut failures,
                        format!(
                            "translation by {} moves the entry at starts ({a}, {b})",
                            spec.format_element(&ce)
                        ),
                    );
                    break 'trans;
                }
            }
        }
    }

    let mut negation_invariant = true;
    for a in 0..m {
        let na = space.require(&spec.negate_path(space.state(a)))?;
        for b in 0..m {
            let nb = space.require(&spec.negate_path(space.state(b)))?;
            if dense[a][b] != dense[na][nb] {
                negation_invariant = false;
                note(
                    &mut failures,
                    format!("negation moves the entry at ({a}, {b})"),
                );
            }
        }
    }

    Ok(AlphaSymmetryReport {
        doubly_stochastic,
        reversal_symmetric,
        reversal_entry,
        translation_invariant,
        negation_invariant,
        failures,
    })
}

/// Counts the entries of a window-walk kernel changed by negating both
/// arguments. Zero means the negation map is a probability-preserving
/// bijection of the whole walk space.
pub fn walk_negation_violations(
    kernel: &Kernel<PathState>,
    spec: &CayleySpec,
) -> Result<usize> {
    walk_map_violations(kernel, |p| spec.negate_path(p))
}

/// Counts the entries changed by translating both arguments by `c`.
pub fn walk_translation_violations(
    kernel: &Kernel<PathState>,
    spec: &CayleySpec,
    c: &[usize],
) -> Result<usize> {
    walk_map_violations(kernel, |p| spec.translate_path(p, c))
}

fn walk_map_violations(
    kernel: &Kernel<PathState>,
    map: impl Fn(&PathState) -> PathState,
) -> Result<usize> {
    let space = kernel.space();
    let mut bad = 0usize;
    for i in 0..kernel.n() {
        let mi = space.require(&map(space.state(i)))?;
        if kernel.row(i).len() != kernel.row(mi).len() {
            bad += 1;
            continue;
        }
        for (j, w) in kernel.row(i) {
            let mj = space.require(&map(space.state(*j)))?;
            if kernel.entry(mi, mj) != *w {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

/// Monte Carlo estimate of one induced-chain row: run the window walk from
/// `start` until it meets the family again and tally where it lands.
/// Frequencies are aligned with `family.members()`.
pub fn empirical_induced_row(
    kernel: &Kernel<PathState>,
    family: &AlphaFamily,
    start: &PathState,
    samples: usize,
    seed: u64,
    step_cap: usize,
) -> Result<Vec<f64>> {
    let space = kernel.space();
    let start_idx = space.require(start)?;
    let mut member_of: HashMap<usize, usize> = HashMap::new();
    for (pos, m) in family.members().iter().enumerate() {
        member_of.insert(space.require(m)?, pos);
    }
    let cdf: Vec<Vec<(usize, f64)>> = (0..kernel.n())
        .map(|i| {
            let mut acc = 0.0;
            kernel
                .row(i)
                .iter()
                .map(|(j, w)| {
                    acc += to_f64(w);
                    (*j, acc)
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; family.len()];
    for _ in 0..samples {
        let mut x = start_idx;
        let mut landed = None;
        for _ in 0..step_cap {
            let u: f64 = rng.gen();
            let row = &cdf[x];
            x = row
                .iter()
                .find(|(_, acc)| u < *acc)
                .map(|(j, _)| *j)
                .unwrap_or_else(|| row.last().map(|(j, _)| *j).unwrap_or(x));
            if let Some(&pos) = member_of.get(&x) {
                landed = Some(pos);
                break;
            }
        }
        match landed {
            Some(pos) => counts[pos] += 1,
            None => return Err(Error::TrajectoryCap { cap: step_cap }),
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / samples as f64)
        .collect())
}

/// Maps each reversal class of an induced segment chain to the start of the
/// forward segment it contains, the one-to-one relabeling of classes by
/// group elements.
pub fn class_group_labels(
    space: &StateSpace<PathState>,
    classes: &crate::space::ReversalClasses,
    family: &AlphaFamily,
) -> Result<Vec<usize>> {
    classes
        .members
        .iter()
        .map(|members| {
            members
                .iter()
                .filter_map(|&i| family.label_of(space.state(i)))
                .map(|label| label.h)
                .min()
                .ok_or_else(|| Error::StateNotFound("class without a segment label".into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::uniform_measure;
    use crate::ratio::{rat, rzero};
    use crate::regeneration::{backtrack_floor, PairChain};
    use crate::space::ReversalClasses;
    use crate::walks::stuck_check;

    fn torus_spec() -> CayleySpec {
        CayleySpec::new(
            vec![5, 5],
            &[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
        )
        .unwrap()
    }

    fn z4xz6_spec() -> CayleySpec {
        CayleySpec::new(
            vec![4, 6],
            &[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
        )
        .unwrap()
    }

    #[test]
    fn cayley_graphs_match_known_generators() {
        let t = cayley_graph(&torus_spec()).unwrap();
        let reference = Graph::torus(&[5, 5]);
        assert_eq!(t.n(), 25);
        assert_eq!(t.regular_degree(), Some(4));
        for u in 0..25 {
            for v in 0..25 {
                assert_eq!(t.has_edge(u, v), reference.has_edge(u, v));
            }
        }
        let c = cayley_graph(&CayleySpec::new(vec![6], &[vec![1], vec![-1]]).unwrap()).unwrap();
        let cycle = Graph::cycle(6);
        assert_eq!(c.n(), 6);
        for u in 0..6 {
            for v in 0..6 {
                assert_eq!(c.has_edge(u, v), cycle.has_edge(u, v));
            }
        }
        let with_involution =
            cayley_graph(&CayleySpec::new(vec![4], &[vec![1], vec![-1], vec![2]]).unwrap())
                .unwrap();
        assert_eq!(with_involution.n(), 4);
        assert_eq!(with_involution.edge_count(), 6);
        assert_eq!(with_involution.regular_degree(), Some(3));
    }

    #[test]
    fn bad_generator_sets_are_rejected() {
        assert!(matches!(
            CayleySpec::new(vec![6], &[vec![1]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            CayleySpec::new(vec![6], &[vec![2], vec![-2]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            CayleySpec::new(vec![6], &[vec![0]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            CayleySpec::new(vec![6], &[vec![1], vec![-1], vec![7]]),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            CayleySpec::new(vec![1], &[vec![0]]),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn element_arithmetic_round_trips() {
        let spec = z4xz6_spec();
        assert_eq!(spec.order(), 24);
        for i in 0..24 {
            assert_eq!(spec.index_of(&spec.element(i)), i);
        }
        assert_eq!(spec.reduce(&[-1, 7]).unwrap(), vec![3, 1]);
        assert_eq!(spec.element_order(&[1, 0]), 4);
        assert_eq!(spec.element_order(&[0, 1]), 6);
        assert_eq!(spec.element_order(&[2, 3]), 2);
        assert_eq!(spec.element_order(&[1, 1]), 12);
        assert_eq!(spec.format_element(&[3, 5]), "(3,5)");
    }

    #[test]
    fn segment_family_counts_and_negation_mirror() {
        let spec = torus_spec();
        let family = alpha_family(&spec, &[1, 0], 2).unwrap();
        assert_eq!(family.len(), 50);
        let mirror = spec.index_of(&spec.reduce(&[-2, 0]).unwrap());
        assert_eq!(
            spec.negate_path(family.alpha(0)),
            *family.alpha_reversed(mirror)
        );
        assert_eq!(
            family.label_of(family.alpha(7)),
            Some(AlphaLabel {
                h: 7,
                reversed: false
            })
        );
        let z6 = CayleySpec::new(vec![6], &[vec![1], vec![-1]]).unwrap();
        assert!(alpha_family(&z6, &[1], 5).is_ok());
        assert!(matches!(
            alpha_family(&z6, &[1], 6),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            alpha_family(&spec, &[2, 0], 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn involution_segments_collapse_onto_their_reversals() {
        let spec = CayleySpec::new(vec![6], &[vec![1], vec![-1], vec![3]]).unwrap();
        let family = alpha_family(&spec, &[3], 1).unwrap();
        assert_eq!(family.len(), 6);
        assert_eq!(
            family.label_of(family.alpha_reversed(0)),
            Some(AlphaLabel {
                h: 3,
                reversed: false
            })
        );
    }

    #[test]
    fn torus_induced_chain_passes_the_symmetry_suite_in_both_modes() {
        let spec = torus_spec();
        let g = cayley_graph(&spec).unwrap();
        let family = alpha_family(&spec, &[1, 0], 1).unwrap();
        for mode in [WalkMode::Edge, WalkMode::Vertex] {
            let induced = induced_alpha_kernel(&g, &family, mode, 100_000).unwrap();
            assert_eq!(induced.n(), 50);
            let report = alpha_symmetry_suite(&induced, &family).unwrap();
            assert!(report.ok(), "{:?}", report.failures);
            let p = report.reversal_entry.unwrap();
            assert!(p > rzero());
            assert_eq!(backtrack_floor(&induced).unwrap(), p);
        }
    }

    #[test]
    fn monte_carlo_matches_the_exact_induced_row() {
        let spec = torus_spec();
        let g = cayley_graph(&spec).unwrap();
        let family = alpha_family(&spec, &[1, 0], 1).unwrap();
        let (walk, _) = knbrw(&g, 1, WalkMode::Vertex, 100_000).unwrap();
        let induced = induced_alpha_kernel(&g, &family, WalkMode::Vertex, 100_000).unwrap();
        let start_col = induced.space().require(family.alpha(0)).unwrap();
        let target_col = induced
            .space()
            .require(family.alpha_reversed(0))
            .unwrap();
        let exact = induced.entry(start_col, target_col);
        assert!(exact > rzero());
        let samples = 1_000_000usize;
        let freq =
            empirical_induced_row(&walk, &family, family.alpha(0), samples, 11, 10_000).unwrap();
        let p = to_f64(&exact);
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        let members = family.members();
        let hit = members
            .iter()
            .position(|m| m == family.alpha_reversed(0))
            .unwrap();
        assert!(
            (freq[hit] - p).abs() < 3.0 * sigma,
            "estimate {} vs exact {p}",
            freq[hit]
        );
        let tv: f64 = members
            .iter()
            .enumerate()
            .map(|(pos, m)| {
                let col = induced.space().require(m).unwrap();
                (freq[pos] - to_f64(&induced.entry(start_col, col))).abs()
            })
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.005, "total variation {tv}");
    }

    #[test]
    fn rectangular_torus_window_chain_is_exactly_symmetric() {
        let spec = z4xz6_spec();
        let g = cayley_graph(&spec).unwrap();
        let family = alpha_family(&spec, &[1, 0], 2).unwrap();
        assert_eq!(family.len(), 48);
        let stuck = stuck_check(&g, 2, WalkMode::Vertex, 100_000).unwrap();
        assert!(stuck.never_stuck);
        let induced = induced_alpha_kernel(&g, &family, WalkMode::Vertex, 100_000).unwrap();
        let report = alpha_symmetry_suite(&induced, &family).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
    }

    #[test]
    fn stuck_fallback_keeps_every_symmetry_exact() {
        let spec = CayleySpec::new(vec![5], &[vec![1], vec![-1]]).unwrap();
        let g = cayley_graph(&spec).unwrap();
        let family = alpha_family(&spec, &[1], 4).unwrap();
        let stuck = stuck_check(&g, 4, WalkMode::Vertex, 100_000).unwrap();
        assert!(!stuck.never_stuck);
        assert!(!stuck.stuck_states.is_empty());
        let induced = induced_alpha_kernel(&g, &family, WalkMode::Vertex, 100_000).unwrap();
        assert_eq!(induced.n(), 10);
        let report = alpha_symmetry_suite(&induced, &family).unwrap();
        assert!(report.ok(), "{:?}", report.failures);
    }

    #[test]
    fn full_walk_kernel_is_negation_and_translation_invariant() {
        let spec = z4xz6_spec();
        let g = cayley_graph(&spec).unwrap();
        let (walk, _) = knbrw(&g, 2, WalkMode::Vertex, 100_000).unwrap();
        assert_eq!(walk_negation_violations(&walk, &spec).unwrap(), 0);
        for c in 1..spec.order() {
            let ce = spec.element(c);
            assert_eq!(walk_translation_violations(&walk, &spec, &ce).unwrap(), 0);
        }
    }

    #[test]
    fn lazy_induced_chain_feeds_a_symmetric_pair_chain() {
        let spec = torus_spec();
        let g = cayley_graph(&spec).unwrap();
        let family = alpha_family(&spec, &[1, 0], 1).unwrap();
        let induced = induced_alpha_kernel(&g, &family, WalkMode::Vertex, 100_000).unwrap();
        let p = backtrack_floor(&induced).unwrap();
        assert!(p > rzero());
        let measure = uniform_measure(induced.n());
        let chain = PairChain::build(induced, &p, &measure).unwrap();
        assert_eq!(chain.class_count(), 25);
        for a in 0..25 {
            for b in 0..25 {
                assert_eq!(
                    chain.pair_kernel().entry(a, b),
                    chain.pair_kernel().entry(b, a)
                );
            }
        }
        let classes = ReversalClasses::group(chain.base().space()).unwrap();
        let labels =
            class_group_labels(chain.base().space(), &classes, &family).unwrap();
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..25).collect::<Vec<_>>());
    }

    #[test]
    fn family_from_another_group_is_rejected() {
        let spec = torus_spec();
        let family = alpha_family(&spec, &[1, 0], 1).unwrap();
        let other = Graph::cycle(6);
        match induced_alpha_kernel(&other, &family, WalkMode::Vertex, 100_000) {
            Err(Error::StateNotFound(_)) => {}
            other => panic!("expected a missing-state refusal, got {other:?}"),
        }
    }

    #[test]
    fn taboo_accumulation_brackets_the_solved_reversal_entry() {
        let spec = torus_spec();
        let g = cayley_graph(&spec).unwrap();
        let family = alpha_family(&spec, &[1, 0], 1).unwrap();
        let (walk, _) = knbrw(&g, 1, WalkMode::Vertex, 100_000).unwrap();
        let induced = induced_alpha_kernel(&g, &family, WalkMode::Vertex, 100_000).unwrap();
        let start = induced.space().require(family.alpha(0)).unwrap();
        let target = induced.space().require(family.alpha_reversed(0)).unwrap();
        let solved = induced.entry(start, target);

        let space = walk.space();
        let in_family: Vec<bool> = (0..walk.n())
            .map(|i| family.label_of(space.state(i)).is_some())
            .collect();
        let target_full = space.require(family.alpha_reversed(0)).unwrap();
        let mut mu = vec![rzero(); walk.n()];
        mu[space.require(family.alpha(0)).unwrap()] = crate::ratio::rone();
        let mut accumulated = rzero();
        for _ in 0..200 {
            mu = walk.measure_step(&mu);
            accumulated += mu[target_full].clone();
            for (i, mass) in mu.iter_mut().enumerate() {
                if in_family[i] {
                    *mass = rzero();
                }
            }
        }
        let remaining: Rat = mu.iter().sum();
        assert!(remaining < rat(1, 1_000_000));
        assert!(accumulated <= solved);
        assert!(solved <= &accumulated + &remaining);
    }
}
