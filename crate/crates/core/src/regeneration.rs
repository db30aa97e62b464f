//! The reversible pair chain extracted from a walk with a uniform reversal
//! floor.
//!
//! When every state moves to its exact reversal with probability at least
//! `p`, that slice of each step can be split off as an independent
//! Bernoulli flag. A flagged step lands uniformly on an orientation pair
//! `{a, a^r}` once the walk is made lazy, so watching the lazy walk only at
//! flagged times gives a chain on unordered pairs that is reversible for
//! the pushforward of the stationary measure. This module builds that
//! chain exactly through one linear solve and empirically through a
//! coupled simulation recording both chains at once.

use std::collections::VecDeque;
use std::hash::Hash;
use std::rc::Rc;

use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, StructuralCondition};
use crate::kernel::Kernel;
use crate::linalg::solve_exact;
use crate::ratio::{format_rat, rint, rone, rpow, rzero, to_f64, Rat};
use crate::space::{ReversalClasses, Reversible, StateSpace};

/// The smallest one-step mass any state sends to its exact reversal.
pub fn backtrack_floor<S: Reversible>(kernel: &Kernel<S>) -> Result<Rat> {
    Ok(floor_with_argmin(kernel)?.0)
}

fn floor_with_argmin<S: Reversible>(kernel: &Kernel<S>) -> Result<(Rat, usize)> {
    let rev = kernel.space().reversal_permutation()?;
    let mut best: Option<(Rat, usize)> = None;
    for a in 0..kernel.n() {
        let val = kernel.entry(a, rev[a]);
        if best.as_ref().map_or(true, |(f, _)| val < *f) {
            best = Some((val, a));
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("empty state space".into()))
}

/// Explicit fallback constants for graphs whose `radius`-balls all contain
/// a cycle.
#[derive(Clone, Debug)]
pub struct FloorConstants {
    /// Smallest radius at which every ball contains a cycle.
    pub radius: usize,
    /// Power-averaging horizon `4 radius + 1`.
    pub horizon: usize,
    /// Guaranteed reversal mass `(d - 1)^{-horizon} / (2 (horizon + 1))`
    /// of the horizon-averaged walk, with `d` the maximum degree.
    pub floor: Rat,
}

/// Searches radii `0..=max_radius` for the cycle-in-every-ball property and
/// evaluates the conservative floor formula there. The resulting `floor` is
/// a lower bound for [`backtrack_floor`] of the non-backtracking walk
/// averaged over `0..=horizon` steps.
pub fn cycle_radius_floor(g: &Graph, max_radius: usize) -> Result<FloorConstants> {
    let d = g.max_degree();
    if d < 3 {
        return Err(Error::Unsupported(format!(
            "floor formula needs maximum degree at least 3, found {d}"
        )));
    }
    let radius = (0..=max_radius)
        .find(|&r| {
            g.check_structural_condition(StructuralCondition::BallsContainCycle { r })
                .holds()
        })
        .ok_or_else(|| {
            Error::Unsupported(format!(
                "some ball of radius {max_radius} still contains no cycle"
            ))
        })?;
    let horizon = 4 * radius + 1;
    let floor = rone() / (rpow(&rint((d - 1) as i64), horizon) * rint(2 * (horizon as i64 + 1)));
    Ok(FloorConstants {
        radius,
        horizon,
        floor,
    })
}

/// Splits the reversal floor out of `base`: the residual kernel `K` with
/// `K(a, a^r) = (P(a, a^r) - p) / (1 - p)` and `K(a, b) = P(a, b) / (1 - p)`
/// elsewhere, together with its lazy version `(I + K) / 2`.
pub fn residual_kernel<S: Reversible>(base: &Kernel<S>, p: &Rat) -> Result<(Kernel<S>, Kernel<S>)> {
    if p <= &rzero() || p >= &rone() {
        return Err(Error::InvalidParameter(format!(
            "floor p = {} must lie strictly between 0 and 1",
            format_rat(p)
        )));
    }
    let (floor, _) = floor_with_argmin(base)?;
    if *p > floor {
        return Err(Error::FloorTooLarge {
            p: format_rat(p),
            floor: format_rat(&floor),
        });
    }
    let rev = base.space().reversal_permutation()?;
    let q = rone() - p;
    let mut rows = Vec::with_capacity(base.n());
    for a in 0..base.n() {
        let mut row = Vec::new();
        let mut saw_reversal = false;
        for (j, w) in base.row(a) {
            let val = if *j == rev[a] {
                saw_reversal = true;
                (w - p) / &q
            } else {
                w / &q
            };
            if !val.is_zero() {
                row.push((*j, val));
            }
        }
        if !saw_reversal && !p.is_zero() {
            return Err(Error::FloorTooLarge {
                p: format_rat(p),
                floor: "0".into(),
            });
        }
        rows.push(row);
    }
    let residual = Kernel::new(base.space().clone(), rows)?;
    let lazy = residual.lazy();
    Ok((residual, lazy))
}

/// The reversible chain on orientation pairs `{a, a^r}`, together with the
/// exact ingredients it was assembled from.
#[derive(Clone, Debug)]
pub struct PairChain<S: Reversible> {
    base: Kernel<S>,
    regen_prob: Rat,
    residual: Kernel<S>,
    residual_lazy: Kernel<S>,
    classes: ReversalClasses,
    pair_kernel: Kernel<usize>,
    pair_measure: Vec<Rat>,
}

impl<S: Reversible> PairChain<S> {
    /// Builds the pair chain for a base kernel with reversal floor at least
    /// `p`, exactly.
    ///
    /// `pi` must satisfy `pi(a) P(a, b) = pi(b) P(b^r, a^r)` entrywise (the
    /// reversal symmetry all walks in this crate inherit from their
    /// stationary measures); the residual kernel then satisfies it too, and
    /// the pair chain is reversible for the class pushforward of `pi`. Both
    /// facts are verified exactly during construction. The pair kernel
    /// itself evaluates `p (I - (1-p) K_L)^{-1}` in closed form and sums the
    /// result over classes with uniform weight on each start class.
    pub fn build(base: Kernel<S>, p: &Rat, pi: &[Rat]) -> Result<Self> {
        let n = base.n();
        if pi.len() != n {
            return Err(Error::InvalidParameter(format!(
                "measure has {} entries for {} states",
                pi.len(),
                n
            )));
        }
        let (floor, argmin) = floor_with_argmin(&base)?;
        if floor.is_zero() {
            return Err(Error::BacktrackFloorZero {
                state: format!("index {argmin}"),
                hint: "reversal access diagnostics locate the unreachable reversals".into(),
            });
        }
        let rev = base.space().reversal_permutation()?;
        check_reversal_symmetry(&base, pi, &rev)?;
        let (residual, residual_lazy) = residual_kernel(&base, p)?;
        let q = rone() - p;
        let mut a_mat = vec![vec![rzero(); n]; n];
        let mut b_mat = vec![vec![rzero(); n]; n];
        for i in 0..n {
            a_mat[i][i] = rone();
            b_mat[i][i] = p.clone();
            for (j, w) in residual_lazy.row(i) {
                a_mat[i][*j] -= &q * w;
            }
        }
        let green = solve_exact(&a_mat, &b_mat)?;
        let classes = ReversalClasses::group(base.space())?;
        let m = classes.len();
        let mut dense = vec![vec![rzero(); m]; m];
        for (a, members) in classes.members.iter().enumerate() {
            let weight = rone() / rint(members.len() as i64);
            for &w in members {
                for (wp, val) in green[w].iter().enumerate() {
                    if !val.is_zero() {
                        dense[a][classes.class_of[wp]] += &weight * val;
                    }
                }
            }
        }
        let pair_space = Rc::new(StateSpace::new((0..m).collect())?);
        let rows = dense
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .enumerate()
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        let pair_kernel = Kernel::new(pair_space, rows)?;
        let mut pair_measure: Vec<Rat> = classes
            .members
            .iter()
            .map(|members| members.iter().map(|&w| pi[w].clone()).sum())
            .collect();
        let total: Rat = pair_measure.iter().sum();
        if total.is_zero() {
            return Err(Error::InvalidParameter("measure sums to zero".into()));
        }
        for v in &mut pair_measure {
            *v /= &total;
        }
        pair_kernel.check_reversible(&pair_measure)?;
        Ok(PairChain {
            base,
            regen_prob: p.clone(),
            residual,
            residual_lazy,
            classes,
            pair_kernel,
            pair_measure,
        })
    }

    pub fn base(&self) -> &Kernel<S> {
        &self.base
    }

    pub fn regen_prob(&self) -> &Rat {
        &self.regen_prob
    }

    pub fn residual(&self) -> &Kernel<S> {
        &self.residual
    }

    pub fn residual_lazy(&self) -> &Kernel<S> {
        &self.residual_lazy
    }

    pub fn classes(&self) -> &ReversalClasses {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn pair_kernel(&self) -> &Kernel<usize> {
        &self.pair_kernel
    }

    pub fn pair_measure(&self) -> &[Rat] {
        &self.pair_measure
    }

    /// Pair transition mass restricted to at most `n` lazy residual steps
    /// between flags. Every entry sits below the exact pair kernel, and each
    /// row's total deficit is exactly `(1 - p)^{n + 1}`.
    pub fn truncated_series(&self, n: usize) -> Vec<Vec<Rat>> {
        let states = self.base.n();
        let m = self.classes.len();
        let q = rone() - &self.regen_prob;
        let mut out = vec![vec![rzero(); m]; m];
        for (a, members) in self.classes.members.iter().enumerate() {
            let weight = rone() / rint(members.len() as i64);
            let mut mu = vec![rzero(); states];
            for &w in members {
                mu[w] = weight.clone();
            }
            let mut step_weight = self.regen_prob.clone();
            for i in 0..=n {
                for (w, mass) in mu.iter().enumerate() {
                    if !mass.is_zero() {
                        out[a][self.classes.class_of[w]] += &step_weight * mass;
                    }
                }
                if i < n {
                    mu = self.residual_lazy.measure_step(&mu);
                    step_weight *= &q;
                }
            }
        }
        out
    }

    /// Runs the coupled construction: per step one uniform variate decides
    /// the flag and the proposal (exact reversal when flagged, a residual
    /// draw otherwise), then a fair coin accepts the proposal or keeps the
    /// current state. The pair chain is read off at the flagged times.
    pub fn sample_coupled(
        &self,
        start_class: usize,
        steps: usize,
        seed: u64,
    ) -> Result<CoupledSample> {
        if start_class >= self.classes.len() {
            return Err(Error::InvalidParameter(format!(
                "start class {start_class} out of range ({} classes)",
                self.classes.len()
            )));
        }
        let rev = self.base.space().reversal_permutation()?;
        let p = to_f64(&self.regen_prob);
        let cdf: Vec<Vec<(usize, f64)>> = (0..self.residual.n())
            .map(|i| {
                let mut acc = 0.0;
                self.residual
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
        let members = &self.classes.members[start_class];
        let mut x = members[rng.gen_range(0..members.len())];
        let mut sample = CoupledSample {
            regen_prob: p,
            states: Vec::with_capacity(steps + 1),
            proposals: Vec::with_capacity(steps),
            flags: Vec::with_capacity(steps),
            coins: Vec::with_capacity(steps),
            regen_times: Vec::new(),
            regen_classes: Vec::new(),
        };
        sample.states.push(x);
        for t in 1..=steps {
            let u: f64 = rng.gen();
            let (flag, z) = if u < p {
                (true, rev[x])
            } else {
                let v = (u - p) / (1.0 - p);
                let row = &cdf[x];
                let pick = row
                    .iter()
                    .find(|(_, acc)| v < *acc)
                    .map(|(j, _)| *j)
                    .unwrap_or_else(|| row.last().map(|(j, _)| *j).unwrap_or(x));
                (false, pick)
            };
            let accept = rng.gen_bool(0.5);
            if accept {
                x = z;
            }
            sample.proposals.push(z);
            sample.flags.push(flag);
            sample.coins.push(accept);
            sample.states.push(x);
            if flag {
                sample.regen_times.push(t);
                sample.regen_classes.push(self.classes.class_of[x]);
            }
        }
        Ok(sample)
    }

    /// Estimates the pair kernel from a coupled sample's flagged times and
    /// tallies how often each chain revisits where it started.
    pub fn empirical(
        &self,
        sample: &CoupledSample,
        min_regenerations: usize,
    ) -> Result<EmpiricalPairReport> {
        let regens = sample.regen_classes.len();
        if regens < min_regenerations {
            return Err(Error::InvalidParameter(format!(
                "need at least {min_regenerations} regenerations, sample has {regens}"
            )));
        }
        let m = self.classes.len();
        let mut counts = vec![vec![0usize; m]; m];
        for pair in sample.regen_classes.windows(2) {
            counts[pair[0]][pair[1]] += 1;
        }
        let rows = counts
            .iter()
            .map(|row| {
                let total: usize = row.iter().sum();
                row.iter().map(|&c| wilson(c, total)).collect()
            })
            .collect();
        let start_class = self.classes.class_of[sample.states[0]];
        let chain_class_visits = sample.states[1..]
            .iter()
            .filter(|&&s| self.classes.class_of[s] == start_class)
            .count();
        let first = sample.regen_classes[0];
        let pair_visits = sample
            .regen_classes
            .iter()
            .filter(|&&c| c == first)
            .count();
        let visit_ratio = pair_visits as f64 / chain_class_visits.max(1) as f64;
        Ok(EmpiricalPairReport {
            regenerations: regens,
            counts,
            rows,
            chain_class_visits,
            pair_visits,
            visit_ratio,
        })
    }
}

/// Checks `pi(a) P(a, b) = pi(b) P(b^r, a^r)` entrywise.
fn check_reversal_symmetry<S: Reversible>(
    kernel: &Kernel<S>,
    pi: &[Rat],
    rev: &[usize],
) -> Result<()> {
    for a in 0..kernel.n() {
        for (b, w) in kernel.row(a) {
            let lhs = &pi[a] * w;
            let rhs = &pi[*b] * &kernel.entry(rev[*b], rev[a]);
            if lhs != rhs {
                return Err(Error::Unsupported(format!(
                    "reversal symmetry fails at states ({a}, {b})"
                )));
            }
        }
    }
    Ok(())
}

/// One trajectory of the coupled construction.
#[derive(Clone, Debug)]
pub struct CoupledSample {
    pub regen_prob: f64,
    /// `X_0, ..., X_steps` as state indices.
    pub states: Vec<usize>,
    /// Proposal preceding each state, flagged or not.
    pub proposals: Vec<usize>,
    /// Bernoulli flag per step; a flag forces the proposal to the reversal.
    pub flags: Vec<bool>,
    /// Fair acceptance coin per step.
    pub coins: Vec<bool>,
    /// Times `t` whose step carried a flag.
    pub regen_times: Vec<usize>,
    /// Class of the state at each flagged time.
    pub regen_classes: Vec<usize>,
}

impl CoupledSample {
    /// One row per step: `step,state,candidate,xi,accepted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,state,candidate,xi,accepted\n");
        for t in 0..self.proposals.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t + 1,
                self.states[t + 1],
                self.proposals[t],
                u8::from(self.flags[t]),
                u8::from(self.coins[t]),
            ));
        }
        out
    }
}

/// A point estimate with its 95% Wilson score interval.
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

fn wilson(successes: usize, trials: usize) -> Interval {
    if trials == 0 {
        return Interval {
            estimate: f64::NAN,
            lo: 0.0,
            hi: 1.0,
        };
    }
    let z = 1.96_f64;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        estimate: phat,
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
    }
}

/// Transition tallies at flagged times, with per-row interval estimates and
/// the revisit comparison between the two coupled chains.
#[derive(Clone, Debug)]
pub struct EmpiricalPairReport {
    pub regenerations: usize,
    pub counts: Vec<Vec<usize>>,
    pub rows: Vec<Vec<Interval>>,
    /// Steps at which the base chain sat in its starting class.
    pub chain_class_visits: usize,
    /// Flagged times at which the pair chain sat in its first class.
    pub pair_visits: usize,
    pub visit_ratio: f64,
}

/// Support reachability of a kernel as a digraph: `reach[i][j]` says a path
/// of positive-probability steps runs from `i` to `j`.
pub fn support_reachability<S: Eq + Hash + Clone>(kernel: &Kernel<S>) -> Vec<Vec<bool>> {
    let n = kernel.n();
    let support = kernel.support();
    let mut reach = vec![vec![false; n]; n];
    for (s, row) in reach.iter_mut().enumerate() {
        let mut queue = VecDeque::from([s]);
        row[s] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &support[v] {
                if !row[w] {
                    row[w] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::uniform_measure;
    use crate::ratio::rat;
    use crate::stationary::pi_ke_measure;
    use crate::walks::{
        knbrw, nbrw_kernel, pbrw_kernel, reversal_access, transition_graph_and_quotient, WalkMode,
    };

    fn dart_measure(kernel_n: usize) -> Vec<Rat> {
        uniform_measure(kernel_n)
    }

    #[test]
    fn backtracking_walks_meet_their_floor_exactly() {
        let g = Graph::complete(4);
        let p = rat(1, 4);
        let bp = pbrw_kernel(&g, &p).unwrap();
        assert_eq!(backtrack_floor(&bp).unwrap(), p);
        let plain = nbrw_kernel(&Graph::cycle(3)).unwrap();
        assert_eq!(backtrack_floor(&plain).unwrap(), rzero());
    }

    #[test]
    fn conservative_constants_on_the_complete_graph() {
        let g = Graph::complete(4);
        let consts = cycle_radius_floor(&g, 5).unwrap();
        assert_eq!(consts.radius, 1);
        assert_eq!(consts.horizon, 5);
        assert_eq!(consts.floor, rat(1, 384));
        let b = nbrw_kernel(&g).unwrap();
        let rev = b.space().reversal_permutation().unwrap();
        let back: Rat = (1..=consts.horizon)
            .map(|i| b.entry_power(0, rev[0], i))
            .sum();
        assert_eq!(back, rat(3, 16));
        assert!(back >= rat(2, 1) * &consts.floor * rint(consts.horizon as i64 + 1));
        let averaged = b.average_of_powers(consts.horizon);
        let floor = backtrack_floor(&averaged).unwrap();
        assert_eq!(floor, rat(1, 32));
        assert!(consts.floor <= floor);
    }

    #[test]
    fn rotation_residual_is_the_plain_walk() {
        let g = Graph::cycle(3);
        let p = rat(1, 2);
        let bp = pbrw_kernel(&g, &p).unwrap();
        let (residual, _) = residual_kernel(&bp, &p).unwrap();
        let plain = nbrw_kernel(&g).unwrap();
        for i in 0..plain.n() {
            for j in 0..plain.n() {
                assert_eq!(residual.entry(i, j), plain.entry(i, j));
            }
        }
    }

    #[test]
    fn floor_violations_are_rejected() {
        let g = Graph::cycle(3);
        let bp = pbrw_kernel(&g, &rat(1, 4)).unwrap();
        match residual_kernel(&bp, &rat(1, 2)) {
            Err(Error::FloorTooLarge { .. }) => {}
            other => panic!("expected a floor rejection, got {other:?}"),
        }
        let plain = nbrw_kernel(&g).unwrap();
        let n = plain.n();
        match PairChain::build(plain, &rat(1, 8), &dart_measure(n)) {
            Err(Error::BacktrackFloorZero { .. }) => {}
            other => panic!("expected a zero-floor refusal, got {other:?}"),
        }
    }

    #[test]
    fn single_edge_pair_chain_is_trivial() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let b = nbrw_kernel(&g).unwrap();
        assert_eq!(backtrack_floor(&b).unwrap(), rone());
        let n = b.n();
        let chain = PairChain::build(b, &rat(1, 3), &dart_measure(n)).unwrap();
        assert_eq!(chain.class_count(), 1);
        assert_eq!(chain.pair_kernel().entry(0, 0), rone());
        assert_eq!(chain.pair_measure(), &[rone()]);
    }

    #[test]
    fn rotation_pair_chain_is_symmetric_and_matches_its_series() {
        let g = Graph::cycle(3);
        let p = rat(1, 2);
        let bp = pbrw_kernel(&g, &p).unwrap();
        let n = bp.n();
        let chain = PairChain::build(bp, &p, &dart_measure(n)).unwrap();
        let m = chain.class_count();
        assert_eq!(m, 3);
        for a in 0..m {
            for b in 0..m {
                let w = chain.pair_kernel().entry(a, b);
                assert!(w > rzero());
                assert_eq!(w, chain.pair_kernel().entry(b, a));
            }
        }
        let horizon = 40;
        let truncated = chain.truncated_series(horizon);
        let tail = rpow(&(rone() - chain.regen_prob()), horizon + 1);
        for a in 0..m {
            let mut deficit = rzero();
            for b in 0..m {
                let diff = chain.pair_kernel().entry(a, b) - &truncated[a][b];
                assert!(diff >= rzero());
                deficit += diff;
            }
            assert_eq!(deficit, tail);
        }
    }

    #[test]
    fn window_walk_pair_chain_is_reversible_for_the_path_measure() {
        let g = Graph::bowtie();
        let (kernel, report) = knbrw(&g, 2, WalkMode::Edge, 100_000).unwrap();
        let space = report.state_space(WalkMode::Edge).unwrap();
        let mut pi = pi_ke_measure(&g, &space).unwrap();
        let total: Rat = pi.iter().sum();
        for v in &mut pi {
            *v /= &total;
        }
        let access = reversal_access(&kernel, 50).unwrap();
        assert!(access.all_reach);
        let horizon = access.max_finite.unwrap();
        let averaged = kernel.average_of_powers(horizon);
        let floor = backtrack_floor(&averaged).unwrap();
        assert!(floor > rzero());
        let chain = PairChain::build(averaged, &floor, &pi).unwrap();
        chain
            .pair_kernel()
            .check_reversible(chain.pair_measure())
            .unwrap();
        let sum: Rat = chain.pair_measure().iter().sum();
        assert_eq!(sum, rone());
    }

    #[test]
    fn pair_support_tracks_residual_reachability() {
        let linked = {
            let g = Graph::cycle(3);
            let p = rat(1, 2);
            let bp = pbrw_kernel(&g, &p).unwrap();
            let n = bp.n();
            PairChain::build(bp, &p, &dart_measure(n)).unwrap()
        };
        let reach = support_reachability(linked.residual_lazy());
        for a in 0..linked.class_count() {
            for b in 0..linked.class_count() {
                let expect = linked.classes().members[a].iter().any(|&w| {
                    linked.classes().members[b]
                        .iter()
                        .any(|&wp| reach[w][wp])
                });
                assert_eq!(linked.pair_kernel().entry(a, b) > rzero(), expect);
            }
        }
        let darts = vec![
            crate::space::Dart::new(0, 1),
            crate::space::Dart::new(1, 0),
            crate::space::Dart::new(2, 3),
            crate::space::Dart::new(3, 2),
        ];
        let space = Rc::new(StateSpace::new(darts).unwrap());
        let rows = vec![
            vec![(1, rone())],
            vec![(0, rone())],
            vec![(3, rone())],
            vec![(2, rone())],
        ];
        let b = Kernel::new(space, rows).unwrap();
        let n = b.n();
        let split = PairChain::build(b, &rat(1, 3), &dart_measure(n)).unwrap();
        assert_eq!(split.class_count(), 2);
        assert_eq!(split.pair_kernel().entry(0, 1), rzero());
        assert_eq!(split.pair_kernel().entry(0, 0), rone());
        let tq = transition_graph_and_quotient(split.residual_lazy()).unwrap();
        assert_eq!(tq.quotient.distances(0)[1], None);
    }

    #[test]
    fn coupled_rotation_only_proposes_legal_moves() {
        let g = Graph::cycle(3);
        let p = rat(1, 2);
        let bp = pbrw_kernel(&g, &p).unwrap();
        let n = bp.n();
        let chain = PairChain::build(bp, &p, &dart_measure(n)).unwrap();
        let rev = chain.base().space().reversal_permutation().unwrap();
        let successor: Vec<usize> = (0..n)
            .map(|i| {
                let row = chain.residual().row(i);
                assert_eq!(row.len(), 1);
                row[0].0
            })
            .collect();
        let sample = chain.sample_coupled(0, 2000, 7).unwrap();
        for t in 0..2000 {
            let x = sample.states[t];
            let z = sample.proposals[t];
            if sample.flags[t] {
                assert_eq!(z, rev[x]);
            } else {
                assert_eq!(z, successor[x]);
            }
            let next = sample.states[t + 1];
            if sample.coins[t] {
                assert_eq!(next, z);
            } else {
                assert_eq!(next, x);
            }
        }
        assert!(!sample.regen_times.is_empty());
    }

    #[test]
    fn flags_randomize_the_orientation_uniformly() {
        let g = Graph::cycle(3);
        let p = rat(1, 2);
        let bp = pbrw_kernel(&g, &p).unwrap();
        let n = bp.n();
        let chain = PairChain::build(bp, &p, &dart_measure(n)).unwrap();
        let sample = chain.sample_coupled(0, 400_000, 0).unwrap();
        let mut flips = 0usize;
        let mut total = 0usize;
        for &t in &sample.regen_times {
            total += 1;
            if sample.states[t] != sample.states[t - 1] {
                flips += 1;
            }
        }
        assert!(total > 100_000);
        let half = total as f64 / 2.0;
        let chi2 = (flips as f64 - half).powi(2) * 4.0 / total as f64;
        assert!(chi2 < 6.635, "chi2 = {chi2} over {total} flags");
    }

    #[test]
    fn flag_frequency_matches_the_floor() {
        let g = Graph::cycle(3);
        let p = rat(1, 2);
        let bp = pbrw_kernel(&g, &p).unwrap();
        let n = bp.n();
        let chain = PairChain::build(bp, &p, &dart_measure(n)).unwrap();
        let steps = 1_000_000;
        let sample = chain.sample_coupled(0, steps, 0).unwrap();
        let mean = sample.flags.iter().filter(|&&f| f).count() as f64 / steps as f64;
        let se = (0.5 * 0.5 / steps as f64).sqrt();
        assert!((mean - 0.5).abs() < 3.0 * se, "flag mean {mean}");
    }

    #[test]
    fn empirical_pair_kernel_approaches_the_exact_one() {
        let g = Graph::cycle(3);
        let p = rat(1, 2);
        let bp = pbrw_kernel(&g, &p).unwrap();
        let n = bp.n();
        let chain = PairChain::build(bp, &p, &dart_measure(n)).unwrap();
        let sample = chain.sample_coupled(0, 2_100_000, 0).unwrap();
        let report = chain.empirical(&sample, 1_000_000).unwrap();
        for a in 0..chain.class_count() {
            let mut tv = 0.0;
            for b in 0..chain.class_count() {
                let exact = to_f64(&chain.pair_kernel().entry(a, b));
                tv += (report.rows[a][b].estimate - exact).abs();
            }
            assert!(tv / 2.0 < 0.02, "row {a} tv {tv}");
            for b in 0..chain.class_count() {
                let exact = to_f64(&chain.pair_kernel().entry(a, b));
                assert!(report.rows[a][b].lo <= exact && exact <= report.rows[a][b].hi);
            }
        }
        assert!(report.chain_class_visits > 0 && report.pair_visits > 0);
        assert!(report.visit_ratio > 0.1 && report.visit_ratio < 10.0);
    }

    #[test]
    fn csv_dump_has_one_row_per_step() {
        let g = Graph::cycle(3);
        let p = rat(1, 2);
        let bp = pbrw_kernel(&g, &p).unwrap();
        let n = bp.n();
        let chain = PairChain::build(bp, &p, &dart_measure(n)).unwrap();
        let sample = chain.sample_coupled(0, 50, 3).unwrap();
        let csv = sample.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 51);
        assert_eq!(lines[0], "step,state,candidate,xi,accepted");
        assert_eq!(lines[1].split(',').count(), 5);
    }
}
