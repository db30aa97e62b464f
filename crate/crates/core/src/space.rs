//! State spaces shared by the walk kernels: vertices, directed edges, and
//! fixed-length paths, together with the reversal involution and the pairing
//! of states with their reversals.

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

/// A state type carrying an involution `a -> a^r` (reversal). Vertices are
/// their own reversal; a directed edge flips; a path reverses its vertex
/// sequence.
pub trait Reversible: Clone + Eq + Ord + Hash + fmt::Debug {
    fn reversed(&self) -> Self;
}

impl Reversible for usize {
    fn reversed(&self) -> usize {
        *self
    }
}

/// Directed edge (half-edge) of an undirected graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Dart {
    pub tail: Vertex,
    pub head: Vertex,
}

impl Dart {
    pub fn new(tail: Vertex, head: Vertex) -> Self {
        Dart { tail, head }
    }
}

impl Reversible for Dart {
    fn reversed(&self) -> Dart {
        Dart {
            tail: self.head,
            head: self.tail,
        }
    }
}

impl fmt::Display for Dart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tail, self.head)
    }
}

/// Walk of `k + 1` vertices along `k` edges, oldest first. The memory window
/// of a walk with `k` steps of history.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PathState(pub Vec<Vertex>);

impl PathState {
    pub fn steps(&self) -> usize {
        self.0.len() - 1
    }

    pub fn first(&self) -> Vertex {
        self.0[0]
    }

    pub fn last(&self) -> Vertex {
        *self.0.last().unwrap()
    }

    /// The state after stepping to `next`: drop the oldest vertex, append the
    /// new one.
    pub fn advanced(&self, next: Vertex) -> PathState {
        let mut v = self.0[1..].to_vec();
        v.push(next);
        PathState(v)
    }

    /// Whether consecutive vertices are adjacent in `g` (so the sequence is a
    /// genuine walk along edges).
    pub fn is_walk_in(&self, g: &Graph) -> bool {
        self.0.len() >= 2
            && self.0.windows(2).all(|w| g.has_edge(w[0], w[1]))
            && self.0.iter().all(|&v| v < g.n())
    }

    /// Edge ids traversed, in order.
    pub fn edge_ids(&self, g: &Graph) -> Option<Vec<usize>> {
        self.0.windows(2).map(|w| g.edge_id(w[0], w[1])).collect()
    }
}

impl Reversible for PathState {
    fn reversed(&self) -> PathState {
        let mut v = self.0.clone();
        v.reverse();
        PathState(v)
    }
}

impl fmt::Display for PathState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Finite indexed state space with O(1) state-to-index lookup. Construction
/// order is the index order and is preserved verbatim, so enumeration order
/// determines all downstream output.
#[derive(Clone, Debug)]
pub struct StateSpace<S: Eq + Hash + Clone> {
    states: Vec<S>,
    index: HashMap<S, usize>,
}

impl<S: Eq + Hash + Clone> StateSpace<S> {
    pub fn new(states: Vec<S>) -> Result<Self> {
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidParameter(
                    "state space contains a duplicate state".into(),
                ));
            }
        }
        Ok(StateSpace { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &S {
        &self.states[i]
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn require(&self, s: &S) -> Result<usize>
    where
        S: fmt::Debug,
    {
        self.index_of(s)
            .ok_or_else(|| Error::StateNotFound(format!("{s:?}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &S)> {
        self.states.iter().enumerate()
    }
}

impl<S: Reversible> StateSpace<S> {
    /// Index permutation `i -> index(state_i^r)`; fails when some reversal is
    /// missing from the space.
    pub fn reversal_permutation(&self) -> Result<Vec<usize>> {
        self.states
            .iter()
            .map(|s| {
                self.index_of(&s.reversed())
                    .ok_or_else(|| Error::NotReversalClosed(format!("{s:?}")))
            })
            .collect()
    }
}

/// Grouping of states into unordered classes `{a, a^r}`. Self-reversed states
/// form singleton classes; class ids follow the first occurrence in index
/// order, and each member list is sorted.
#[derive(Clone, Debug)]
pub struct ReversalClasses {
    pub class_of: Vec<usize>,
    pub members: Vec<Vec<usize>>,
}

impl ReversalClasses {
    pub fn group<S: Reversible>(space: &StateSpace<S>) -> Result<Self> {
        let rev = space.reversal_permutation()?;
        let mut class_of = vec![usize::MAX; space.len()];
        let mut members = Vec::new();
        for i in 0..space.len() {
            if class_of[i] != usize::MAX {
                continue;
            }
            let id = members.len();
            class_of[i] = id;
            let mut group = vec![i];
            if rev[i] != i {
                class_of[rev[i]] = id;
                group.push(rev[i]);
            }
            group.sort_unstable();
            members.push(group);
        }
        Ok(ReversalClasses { class_of, members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// All darts of `g`, two per non-loop edge and one per loop, in edge id
/// order: for edge `{u, v}` with `u <= v`, first `u->v`, then `v->u`.
pub fn dart_space(g: &Graph) -> StateSpace<Dart> {
    let mut darts = Vec::new();
    for &(u, v) in g.edges() {
        darts.push(Dart::new(u, v));
        if u != v {
            darts.push(Dart::new(v, u));
        }
    }
    StateSpace::new(darts).expect("darts are distinct")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dart_space_of_triangle() {
        let g = Graph::cycle(3);
        let sp = dart_space(&g);
        assert_eq!(sp.len(), 6);
        let rev = sp.reversal_permutation().unwrap();
        for (i, d) in sp.iter() {
            assert_eq!(sp.state(rev[i]), &d.reversed());
            assert_eq!(rev[rev[i]], i);
        }
    }

    #[test]
    fn path_state_advance_and_reverse() {
        let p = PathState(vec![0, 1, 2]);
        assert_eq!(p.advanced(3), PathState(vec![1, 2, 3]));
        assert_eq!(p.reversed(), PathState(vec![2, 1, 0]));
        assert_eq!(p.steps(), 2);
    }

    #[test]
    fn classes_pair_reversals() {
        let g = Graph::cycle(3);
        let sp = dart_space(&g);
        let cls = ReversalClasses::group(&sp).unwrap();
        assert_eq!(cls.len(), 3);
        for m in &cls.members {
            assert_eq!(m.len(), 2);
        }
    }
}
