//! Electrical comparison machinery: Dirichlet forms, two-set capacities on
//! exact and floating backends, weighted path flows with congestion
//! accounting, and cutset lower bounds on effective resistance.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::{Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Network, Vertex};
use crate::kernel::Kernel;
use crate::linalg::{cg_solve, solve_exact_vec, SparseMat};
use crate::ratio::{rat, rint, rone, rpow, rzero, to_f64, Rat};
use crate::space::{Dart, Reversible, StateSpace};
use crate::walks::{line_graph, nbrw_kernel};

/// Energy of `f` on a network: the sum of `c_e (f(u) - f(v))^2` over edges.
/// Loops carry no energy.
pub fn network_energy(net: &Network, f: &[Rat]) -> Rat {
    let g = net.graph();
    let mut acc = rzero();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if u == v {
            continue;
        }
        let d = f[u].clone() - &f[v];
        acc += net.conductance(e).clone() * &d * &d;
    }
    acc
}

/// Dirichlet energy `½ Σ_{x,y} π(x)P(x,y)(f(x) - f(y))²` of `f` under the
/// chain `(P, π)`. Stationarity of `pi` makes this agree with the energy of
/// the additive symmetrization, so reversibility is not required.
pub fn dirichlet_form<S: Reversible>(kernel: &Kernel<S>, pi: &[Rat], f: &[Rat]) -> Result<Rat> {
    if pi.len() != kernel.n() || f.len() != kernel.n() {
        return Err(Error::InvalidParameter(format!(
            "measure and function must have length {}",
            kernel.n()
        )));
    }
    kernel.check_stationary(pi)?;
    let mut acc = rzero();
    for x in 0..kernel.n() {
        for (y, w) in kernel.row(x) {
            let d = f[x].clone() - &f[*y];
            acc += pi[x].clone() * w * &d * &d;
        }
    }
    Ok(acc / rint(2))
}

/// The same quadratic form computed three ways: through `I - P`, through the
/// time reversal, and through the symmetrized edge sum. All three agree for
/// a stationary measure; `consistent` reports whether they did.
#[derive(Clone, Debug)]
pub struct DirichletIdentities {
    pub operator_form: Rat,
    pub reversal_form: Rat,
    pub symmetric_form: Rat,
}

impl DirichletIdentities {
    pub fn consistent(&self) -> bool {
        self.operator_form == self.reversal_form && self.reversal_form == self.symmetric_form
    }
}

pub fn dirichlet_identities<S: Reversible>(
    kernel: &Kernel<S>,
    pi: &[Rat],
    f: &[Rat],
) -> Result<DirichletIdentities> {
    let symmetric_form = dirichlet_form(kernel, pi, f)?;
    let inner = |k: &Kernel<S>| {
        let kf = k.function_step(f);
        let mut acc = rzero();
        for x in 0..k.n() {
            acc += pi[x].clone() * (f[x].clone() - &kf[x]) * &f[x];
        }
        acc
    };
    let operator_form = inner(kernel);
    let reversal_form = inner(&kernel.time_reversal(pi)?);
    Ok(DirichletIdentities {
        operator_form,
        reversal_form,
        symmetric_form,
    })
}

/// The electrical network of a reversible chain: conductance
/// `c_{x,y} = π(x)P(x,y)` on each transition pair, loops included.
pub fn chain_network<S: Reversible>(kernel: &Kernel<S>, pi: &[Rat]) -> Result<Network> {
    kernel.check_reversible(pi)?;
    network_from_weights(kernel, pi, false)
}

/// The network of the additive symmetrization of any stationary chain:
/// conductance `½(π(x)P(x,y) + π(y)P(y,x))` on each unordered pair.
pub fn symmetrized_network<S: Reversible>(kernel: &Kernel<S>, pi: &[Rat]) -> Result<Network> {
    kernel.check_stationary(pi)?;
    network_from_weights(kernel, pi, true)
}

fn network_from_weights<S: Reversible>(
    kernel: &Kernel<S>,
    pi: &[Rat],
    symmetrize: bool,
) -> Result<Network> {
    let n = kernel.n();
    let mut weights: BTreeMap<(Vertex, Vertex), Rat> = BTreeMap::new();
    for x in 0..n {
        for (y, w) in kernel.row(x) {
            let key = (x.min(*y), x.max(*y));
            let c = pi[x].clone() * w;
            let entry = weights.entry(key).or_insert_with(rzero);
            if symmetrize {
                *entry += c / rint(2);
                if x == *y {
                    // The diagonal appears once per unordered pair, not twice.
                    *entry += pi[x].clone() * w / rint(2);
                }
            } else if entry.is_zero() {
                *entry = c;
            } else if *entry != c {
                return Err(Error::NotReversible {
                    a: format!("{:?}", kernel.space().state(x)),
                    b: format!("{:?}", kernel.space().state(*y)),
                });
            }
        }
    }
    let mut g = Graph::new(n);
    let mut cond = Vec::with_capacity(weights.len());
    for ((u, v), c) in weights {
        if c.is_zero() {
            continue;
        }
        g.add_edge(u, v)?;
        cond.push(c);
    }
    Network::with_conductances(g, cond)
}

/// A two-set escape problem: a chain with stationary measure, a source set,
/// and a disjoint grounded set every state can reach.
#[derive(Clone, Debug)]
pub struct CapacityProblem<S: Reversible> {
    kernel: Kernel<S>,
    pi: Vec<Rat>,
    sources: Vec<usize>,
    sinks: Vec<usize>,
}

impl<S: Reversible> CapacityProblem<S> {
    pub fn new(
        kernel: Kernel<S>,
        pi: Vec<Rat>,
        sources: Vec<usize>,
        sinks: Vec<usize>,
    ) -> Result<Self> {
        if pi.len() != kernel.n() {
            return Err(Error::InvalidParameter(format!(
                "measure length {} does not match {} states",
                pi.len(),
                kernel.n()
            )));
        }
        let sources = normalize_terminals(&sources, kernel.n(), "source")?;
        let sinks = normalize_terminals(&sinks, kernel.n(), "sink")?;
        if let Some(s) = sources.iter().find(|s| sinks.binary_search(s).is_ok()) {
            return Err(Error::InvalidParameter(format!(
                "state {s} lies in both the source and the sink set"
            )));
        }
        // Every state must be able to reach a terminal; walk the support
        // backwards from the terminals and see who gets marked.
        let support = kernel.support();
        let mut reaches_back = vec![Vec::new(); kernel.n()];
        for (i, row) in support.iter().enumerate() {
            for &j in row {
                reaches_back[j].push(i);
            }
        }
        let mut marked = vec![false; kernel.n()];
        let mut queue: VecDeque<usize> = sources.iter().chain(sinks.iter()).copied().collect();
        for &t in &queue {
            marked[t] = true;
        }
        while let Some(x) = queue.pop_front() {
            for &y in &reaches_back[x] {
                if !marked[y] {
                    marked[y] = true;
                    queue.push_back(y);
                }
            }
        }
        if let Some(stranded) = marked.iter().position(|m| !m) {
            return Err(Error::TargetNotReached(format!(
                "state {:?} cannot reach the source or sink set",
                kernel.space().state(stranded)
            )));
        }
        Ok(CapacityProblem {
            kernel,
            pi,
            sources,
            sinks,
        })
    }

    pub fn kernel(&self) -> &Kernel<S> {
        &self.kernel
    }

    pub fn pi(&self) -> &[Rat] {
        &self.pi
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn sinks(&self) -> &[usize] {
        &self.sinks
    }
}

fn normalize_terminals(set: &[usize], n: usize, what: &str) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} set is empty")));
    }
    let mut out: Vec<usize> = set.to_vec();
    out.sort_unstable();
    out.dedup();
    if let Some(&bad) = out.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidParameter(format!(
            "{what} state {bad} is out of range (have {n} states)"
        )));
    }
    Ok(out)
}

/// `Σ_{a ∈ A} π(a) P_a[hit Z before returning to A]`, by an exact solve of
/// the hitting system. Works for any chain with a stationary measure.
pub fn capacity_nonreversible<S: Reversible>(prob: &CapacityProblem<S>) -> Result<Rat> {
    prob.kernel.check_stationary(&prob.pi)?;
    let n = prob.kernel.n();
    let mut role = vec![TerminalRole::Interior; n];
    for &s in &prob.sources {
        role[s] = TerminalRole::Source;
    }
    for &z in &prob.sinks {
        role[z] = TerminalRole::Sink;
    }
    let interior: Vec<usize> = (0..n)
        .filter(|&x| role[x] == TerminalRole::Interior)
        .collect();
    let mut slot = vec![usize::MAX; n];
    for (i, &x) in interior.iter().enumerate() {
        slot[x] = i;
    }

    // h(x) = probability of hitting the sink set before the source set.
    let m = interior.len();
    let mut a = vec![vec![rzero(); m]; m];
    let mut b = vec![rzero(); m];
    for (i, &x) in interior.iter().enumerate() {
        a[i][i] = rone();
        for (y, w) in prob.kernel.row(x) {
            match role[*y] {
                TerminalRole::Sink => b[i] += w,
                TerminalRole::Source => {}
                TerminalRole::Interior => a[i][slot[*y]] -= w,
            }
        }
    }
    let h = solve_exact_vec(&a, &b)?;

    let mut cap = rzero();
    for &s in &prob.sources {
        let mut escape = rzero();
        for (y, w) in prob.kernel.row(s) {
            match role[*y] {
                TerminalRole::Sink => escape += w,
                TerminalRole::Source => {}
                TerminalRole::Interior => escape += w * &h[slot[*y]],
            }
        }
        cap += prob.pi[s].clone() * escape;
    }
    Ok(cap)
}

/// Effective conductance between the source and sink sets of a reversible
/// chain, via the harmonic extension on its electrical network.
pub fn capacity_reversible<S: Reversible>(prob: &CapacityProblem<S>) -> Result<Rat> {
    let net = chain_network(&prob.kernel, &prob.pi)?;
    network_capacity(&net, &prob.sources, &prob.sinks)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TerminalRole {
    Source,
    Sink,
    Interior,
}

fn network_roles(
    g: &Graph,
    sources: &[Vertex],
    sinks: &[Vertex],
) -> Result<(Vec<TerminalRole>, Vec<Vertex>)> {
    let sources = normalize_terminals(sources, g.n(), "source")?;
    let sinks = normalize_terminals(sinks, g.n(), "sink")?;
    if let Some(s) = sources.iter().find(|s| sinks.binary_search(s).is_ok()) {
        return Err(Error::InvalidParameter(format!(
            "vertex {s} lies in both the source and the sink set"
        )));
    }
    let mut role = vec![TerminalRole::Interior; g.n()];
    for &s in &sources {
        role[s] = TerminalRole::Source;
    }
    for &z in &sinks {
        role[z] = TerminalRole::Sink;
    }
    let reached = g.distances_multi(&sources.iter().chain(sinks.iter()).copied().collect::<Vec<_>>());
    if let Some(stranded) = reached.iter().position(|d| d.is_none()) {
        return Err(Error::TargetNotReached(format!(
            "vertex {stranded} is disconnected from the source and sink sets"
        )));
    }
    Ok((role, sources))
}

/// Voltages with the source set held at 1 and the sink set grounded,
/// harmonic everywhere else. Exact.
pub fn harmonic_voltage(net: &Network, sources: &[Vertex], sinks: &[Vertex]) -> Result<Vec<Rat>> {
    let g = net.graph();
    let (role, _) = network_roles(g, sources, sinks)?;
    let interior: Vec<Vertex> = (0..g.n())
        .filter(|&v| role[v] == TerminalRole::Interior)
        .collect();
    let mut slot = vec![usize::MAX; g.n()];
    for (i, &v) in interior.iter().enumerate() {
        slot[v] = i;
    }
    let m = interior.len();
    let mut a = vec![vec![rzero(); m]; m];
    let mut b = vec![rzero(); m];
    for (i, &x) in interior.iter().enumerate() {
        for &(y, e) in g.incident(x) {
            if y == x {
                // A loop enters both sides of the balance and cancels.
                continue;
            }
            let c = net.conductance(e);
            a[i][i] += c;
            match role[y] {
                TerminalRole::Source => b[i] += c,
                TerminalRole::Sink => {}
                TerminalRole::Interior => a[i][slot[y]] -= c,
            }
        }
    }
    let sol = if m == 0 {
        Vec::new()
    } else {
        solve_exact_vec(&a, &b)?
    };
    let mut f = vec![rzero(); g.n()];
    for v in 0..g.n() {
        f[v] = match role[v] {
            TerminalRole::Source => rone(),
            TerminalRole::Sink => rzero(),
            TerminalRole::Interior => sol[slot[v]].clone(),
        };
    }
    Ok(f)
}

/// Effective conductance between `sources` and `sinks`: the current leaving
/// the source set when it is held at potential 1 and the sinks are grounded.
pub fn network_capacity(net: &Network, sources: &[Vertex], sinks: &[Vertex]) -> Result<Rat> {
    let f = harmonic_voltage(net, sources, sinks)?;
    let g = net.graph();
    let sources = normalize_terminals(sources, g.n(), "source")?;
    let mut cap = rzero();
    for &s in &sources {
        for &(y, e) in g.incident(s) {
            if y == s {
                continue;
            }
            cap += net.conductance(e).clone() * (rone() - &f[y]);
        }
    }
    Ok(cap)
}

/// Floating-point capacity via conjugate gradients on the grounded
/// Laplacian. Returns the capacity and the solver residual.
pub fn network_capacity_f64(
    net: &Network,
    sources: &[Vertex],
    sinks: &[Vertex],
    tol: f64,
) -> Result<(f64, f64)> {
    let g = net.graph();
    let (role, _) = network_roles(g, sources, sinks)?;
    let interior: Vec<Vertex> = (0..g.n())
        .filter(|&v| role[v] == TerminalRole::Interior)
        .collect();
    let mut slot = vec![usize::MAX; g.n()];
    for (i, &v) in interior.iter().enumerate() {
        slot[v] = i;
    }
    let cond: Vec<f64> = net.conductances().iter().map(to_f64).collect();
    let m = interior.len();
    let mut lap = SparseMat::zeros(m);
    let mut b = vec![0.0; m];
    for (i, &x) in interior.iter().enumerate() {
        let mut diag = 0.0;
        for &(y, e) in g.incident(x) {
            if y == x {
                continue;
            }
            diag += cond[e];
            match role[y] {
                TerminalRole::Source => b[i] += cond[e],
                TerminalRole::Sink => {}
                TerminalRole::Interior => lap.push(i, slot[y], -cond[e]),
            }
        }
        lap.push(i, i, diag);
    }
    let (sol, residual) = if m == 0 {
        (Vec::new(), 0.0)
    } else {
        cg_solve(&mut |x, out| lap.matvec(x, out), &b, tol, 40 * m + 100)?
    };
    let value = |v: Vertex| match role[v] {
        TerminalRole::Source => 1.0,
        TerminalRole::Sink => 0.0,
        TerminalRole::Interior => sol[slot[v]],
    };
    let sources = normalize_terminals(sources, g.n(), "source")?;
    let mut cap = 0.0;
    for &s in &sources {
        for &(y, e) in g.incident(s) {
            if y != s {
                cap += cond[e] * (1.0 - value(y));
            }
        }
    }
    Ok((cap, residual))
}

/// Checks that the harmonic voltage really minimizes the energy: every
/// random feasible perturbation must cost at least as much.
#[derive(Clone, Debug)]
pub struct DirichletPrincipleReport {
    pub capacity: Rat,
    pub minimizer_energy: Rat,
    pub trials: usize,
    pub min_gap: Option<Rat>,
}

impl DirichletPrincipleReport {
    pub fn ok(&self) -> bool {
        self.capacity == self.minimizer_energy
            && self.min_gap.as_ref().map_or(true, |g| !g.is_negative())
    }
}

pub fn verify_dirichlet_principle(
    net: &Network,
    sources: &[Vertex],
    sinks: &[Vertex],
    trials: usize,
    seed: u64,
) -> Result<DirichletPrincipleReport> {
    let f = harmonic_voltage(net, sources, sinks)?;
    let minimizer_energy = network_energy(net, &f);
    let capacity = network_capacity(net, sources, sinks)?;
    let g = net.graph();
    let (role, _) = network_roles(g, sources, sinks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap: Option<Rat> = None;
    for _ in 0..trials {
        let mut perturbed = f.clone();
        for v in 0..g.n() {
            if role[v] == TerminalRole::Interior {
                let delta = rat(rng.gen_range(-4..=4), 16);
                let moved = (perturbed[v].clone() + delta).max(rzero()).min(rone());
                perturbed[v] = moved;
            }
        }
        let gap = network_energy(net, &perturbed) - &minimizer_energy;
        if min_gap.as_ref().map_or(true, |g| gap < *g) {
            min_gap = Some(gap);
        }
    }
    Ok(DirichletPrincipleReport {
        capacity,
        minimizer_energy,
        trials,
        min_gap,
    })
}

/// A weighted routing of one network's edges through paths of another.
///
/// For each directed target edge `(x, y)` the flow carries a finite family
/// of source paths from `x` to `y`. The weights are nonnegative, total
/// exactly the target conductance, and the family for `(y, x)` consists of
/// the reversed paths with the same weights. Construction validates all of
/// this, so a `Flow` value is always well formed.
#[derive(Clone, Debug)]
pub struct Flow {
    source: Network,
    target: Network,
    routes: BTreeMap<(Vertex, Vertex), Vec<(Vec<Vertex>, Rat)>>,
}

impl Flow {
    pub fn new(
        source: Network,
        target: Network,
        routes: BTreeMap<(Vertex, Vertex), Vec<(Vec<Vertex>, Rat)>>,
    ) -> Result<Flow> {
        let flow = Flow {
            source,
            target,
            routes,
        };
        flow.validate()?;
        Ok(flow)
    }

    pub fn source(&self) -> &Network {
        &self.source
    }

    pub fn target(&self) -> &Network {
        &self.target
    }

    pub fn routes(&self) -> &BTreeMap<(Vertex, Vertex), Vec<(Vec<Vertex>, Rat)>> {
        &self.routes
    }

    fn validate(&self) -> Result<()> {
        let sg = self.source.graph();
        let tg = self.target.graph();
        let mut expected: BTreeMap<(Vertex, Vertex), Rat> = BTreeMap::new();
        for (e, &(u, v)) in tg.edges().iter().enumerate() {
            expected.insert((u, v), self.target.conductance(e).clone());
            if u != v {
                expected.insert((v, u), self.target.conductance(e).clone());
            }
        }
        for key in self.routes.keys() {
            if !expected.contains_key(key) {
                return Err(Error::InvalidParameter(format!(
                    "routed pair {}-{} is not a target edge",
                    key.0, key.1
                )));
            }
        }
        for ((x, y), budget) in &expected {
            let list = self.routes.get(&(*x, *y)).ok_or_else(|| {
                Error::InvalidParameter(format!("target edge {x}-{y} carries no routed paths"))
            })?;
            let mut mass = rzero();
            for (path, w) in list {
                if path.first() != Some(x) || path.last() != Some(y) {
                    return Err(Error::NotAPath(format!(
                        "route {path:?} does not run from {x} to {y}"
                    )));
                }
                for step in path.windows(2) {
                    if sg.edge_id(step[0], step[1]).is_none() {
                        return Err(Error::NotAPath(format!(
                            "route {path:?} uses {}-{}, absent from the source network",
                            step[0], step[1]
                        )));
                    }
                }
                if w.is_negative() || w > budget {
                    return Err(Error::InvalidParameter(format!(
                        "route weight on target edge {x}-{y} falls outside [0, c']"
                    )));
                }
                mass += w;
            }
            if mass != *budget {
                return Err(Error::InvalidParameter(format!(
                    "routed mass on target edge {x}-{y} does not match its conductance"
                )));
            }
            // Reversal pairing: the (y, x) family must be the mirror image.
            let mirror = self.routes.get(&(*y, *x)).ok_or_else(|| {
                Error::InvalidParameter(format!("target edge {y}-{x} carries no routed paths"))
            })?;
            let mut fwd: BTreeMap<Vec<Vertex>, Rat> = BTreeMap::new();
            for (path, w) in list {
                let mut r = path.clone();
                r.reverse();
                *fwd.entry(r).or_insert_with(rzero) += w;
            }
            let mut bwd: BTreeMap<Vec<Vertex>, Rat> = BTreeMap::new();
            for (path, w) in mirror {
                *bwd.entry(path.clone()).or_insert_with(rzero) += w;
            }
            if fwd != bwd {
                return Err(Error::InvalidParameter(format!(
                    "reversed routes of target edge {x}-{y} do not mirror those of {y}-{x}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-edge congestion: length-weighted traffic across each directed source
/// edge, relative to its conductance. `max` is the congestion of the flow.
#[derive(Clone, Debug)]
pub struct Congestion {
    pub per_edge: BTreeMap<(Vertex, Vertex), Rat>,
    pub max: Rat,
}

pub fn flow_congestion(flow: &Flow) -> Congestion {
    let mut per_edge: BTreeMap<(Vertex, Vertex), Rat> = BTreeMap::new();
    for list in flow.routes.values() {
        for (path, w) in list {
            let hops = path.len() - 1;
            if hops == 0 {
                continue;
            }
            let contribution = rint(hops as i64) * w;
            for step in path.windows(2) {
                *per_edge
                    .entry((step[0], step[1]))
                    .or_insert_with(rzero) += &contribution;
            }
        }
    }
    let sg = flow.source.graph();
    let mut max = rzero();
    for ((u, v), acc) in per_edge.iter_mut() {
        let e = sg.edge_id(*u, *v).expect("validated route edge");
        *acc /= flow.source.conductance(e).clone();
        if *acc > max {
            max = acc.clone();
        }
    }
    Congestion { per_edge, max }
}

/// Routes every target edge along itself. Requires each target edge to be
/// present in the source network.
pub fn identity_flow(source: &Network, target: &Network) -> Result<Flow> {
    if source.graph().n() != target.graph().n() {
        return Err(Error::InvalidParameter(
            "identity flow needs networks on the same vertex set".into(),
        ));
    }
    let mut routes: BTreeMap<(Vertex, Vertex), Vec<(Vec<Vertex>, Rat)>> = BTreeMap::new();
    for (e, &(u, v)) in target.graph().edges().iter().enumerate() {
        if source.graph().edge_id(u, v).is_none() {
            return Err(Error::InvalidParameter(format!(
                "target edge {u}-{v} is missing from the source network"
            )));
        }
        let c = target.conductance(e).clone();
        routes.insert((u, v), vec![(vec![u, v], c.clone())]);
        if u != v {
            routes.insert((v, u), vec![(vec![v, u], c)]);
        }
    }
    Flow::new(source.clone(), target.clone(), routes)
}

/// Random-function sweep of the comparison inequality: target energies must
/// stay within the congestion factor of source energies, and likewise for
/// capacities between random terminal pairs.
#[derive(Clone, Debug)]
pub struct FlowComparisonReport {
    pub congestion: Rat,
    pub energy_trials: usize,
    pub energy_violations: usize,
    pub max_energy_ratio: Option<Rat>,
    pub capacity_trials: usize,
    pub capacity_violations: usize,
}

impl FlowComparisonReport {
    pub fn ok(&self) -> bool {
        self.energy_violations == 0 && self.capacity_violations == 0
    }
}

pub fn verify_flow_comparison(flow: &Flow, trials: usize, seed: u64) -> Result<FlowComparisonReport> {
    let n = flow.source.graph().n();
    if flow.target.graph().n() != n {
        return Err(Error::InvalidParameter(
            "energy comparison needs networks on the same vertex set".into(),
        ));
    }
    let congestion = flow_congestion(flow).max;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut energy_violations = 0;
    let mut max_energy_ratio: Option<Rat> = None;
    for _ in 0..trials {
        let center = rng.gen_range(0..n);
        let radius = rng.gen_range(0..=2usize);
        let mut f = vec![rzero(); n];
        for v in flow.source.graph().ball(center, radius) {
            f[v] = rat(rng.gen_range(-8..=8), 8);
        }
        let es = network_energy(&flow.source, &f);
        let et = network_energy(&flow.target, &f);
        if et > congestion.clone() * &es {
            energy_violations += 1;
        }
        if !es.is_zero() {
            let ratio = et / es;
            if max_energy_ratio.as_ref().map_or(true, |m| ratio > *m) {
                max_energy_ratio = Some(ratio);
            }
        }
    }
    let mut capacity_trials = 0;
    let mut capacity_violations = 0;
    for _ in 0..trials {
        if n < 2 {
            break;
        }
        let a = rng.gen_range(0..n);
        let mut z = rng.gen_range(0..n);
        while z == a {
            z = rng.gen_range(0..n);
        }
        let cap_s = network_capacity(&flow.source, &[a], &[z]);
        let cap_t = network_capacity(&flow.target, &[a], &[z]);
        if let (Ok(cs), Ok(ct)) = (cap_s, cap_t) {
            capacity_trials += 1;
            if ct > congestion.clone() * cs {
                capacity_violations += 1;
            }
        }
    }
    Ok(FlowComparisonReport {
        congestion,
        energy_trials: trials,
        energy_violations,
        max_energy_ratio,
        capacity_trials,
        capacity_violations,
    })
}

/// Truncated flow from the loop-augmented line graph to the observed chain
/// of the reversal-at-rate-`p` walk.
///
/// Each route is a path the lazy non-backtracking dart walk can shadow
/// between two regeneration times, weighted by the probability of doing so;
/// `horizon` truncates the path length. The target conductances are the
/// truncated route masses themselves, so the flow validates exactly, and
/// `mass_tail_bound` bounds the mass each pair is still missing.
#[derive(Clone, Debug)]
pub struct RegenerationFlowReport {
    pub flow: Flow,
    pub p: Rat,
    pub horizon: usize,
    pub pair_mass: BTreeMap<(usize, usize), Rat>,
    pub mass_tail_bound: Rat,
    pub split_checks: usize,
    pub split_failures: usize,
    pub congestion: Congestion,
    pub congestion_bound: Rat,
}

pub fn regeneration_path_flow(g: &Graph, p: &Rat, horizon: usize) -> Result<RegenerationFlowReport> {
    if g.has_loops() {
        return Err(Error::Unsupported(
            "regeneration flow is defined for loop-free base graphs".into(),
        ));
    }
    if !g.is_connected() || g.edge_count() == 0 {
        return Err(Error::InvalidParameter(
            "regeneration flow needs a connected base graph with edges".into(),
        ));
    }
    if g.min_degree() < 2 {
        return Err(Error::InvalidParameter(
            "regeneration flow needs minimum degree 2, or dart lifts stop being unique".into(),
        ));
    }
    if p <= &rzero() || p >= &rone() {
        return Err(Error::InvalidParameter(
            "reversal rate must lie strictly between 0 and 1".into(),
        ));
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "path horizon must be at least 1".into(),
        ));
    }

    let b = nbrw_kernel(g)?;
    let bl = b.lazy();
    let darts = bl.space().clone();
    let m = g.edge_count();
    let mut tilde = line_graph(g);
    for e in 0..m {
        tilde.add_edge(e, e)?;
    }
    let source = Network::unit(tilde);

    let q = rone() - p;
    let enumerator = RouteEnumerator {
        g,
        tilde: source.graph(),
        bl: &bl,
        darts: &darts,
        p,
        q: &q,
        horizon,
    };
    let mut routes: BTreeMap<(usize, usize), Vec<(Vec<usize>, Rat)>> = BTreeMap::new();
    for start in 0..m {
        let mut path = vec![start];
        enumerator.grow(&mut path, None, rone(), &mut routes);
    }

    let mut pair_mass: BTreeMap<(usize, usize), Rat> = BTreeMap::new();
    for (&pair, list) in &routes {
        let mass = list.iter().fold(rzero(), |acc, (_, w)| acc + w);
        pair_mass.insert(pair, mass);
    }
    let mut target_graph = Graph::new(m);
    let mut cond = Vec::new();
    for (&(x, y), mass) in &pair_mass {
        if x < y {
            target_graph.add_edge(x, y)?;
            cond.push(mass.clone());
        }
    }
    let target = Network::with_conductances(target_graph, cond)?;

    let mut split_checks = 0;
    let mut split_failures = 0;
    for list in routes.values() {
        for (path, rho) in list {
            let hops = path.len() - 1;
            for i in 1..hops {
                let mut prefix: Vec<usize> = path[..=i].to_vec();
                prefix.reverse();
                let suffix: Vec<usize> = path[i..].to_vec();
                let rhs = rint(2) / p
                    * enumerator.path_rho(&prefix)
                    * enumerator.path_rho(&suffix);
                split_checks += 1;
                if *rho != rhs {
                    split_failures += 1;
                }
            }
        }
    }

    let flow = Flow::new(source, target, routes)?;
    let congestion = flow_congestion(&flow);
    let congestion_bound = rint(8) / p * geometric_fourth_moment(p);
    Ok(RegenerationFlowReport {
        flow,
        p: p.clone(),
        horizon,
        pair_mass,
        mass_tail_bound: rpow(&q, horizon + 1),
        split_checks,
        split_failures,
        congestion,
        congestion_bound,
    })
}

/// Shared context for enumerating and weighing lifted edge sequences.
struct RouteEnumerator<'a> {
    g: &'a Graph,
    tilde: &'a Graph,
    bl: &'a Kernel<Dart>,
    darts: &'a StateSpace<Dart>,
    p: &'a Rat,
    q: &'a Rat,
    horizon: usize,
}

impl RouteEnumerator<'_> {
    /// One step of the dart lift. `None` when the lazy dart walk cannot
    /// shadow the step; otherwise the new lift state (still undetermined
    /// while the path has only held in place) and the step weight.
    fn lift_step(&self, lift: Option<Dart>, cur: usize, next: usize) -> Option<(Option<Dart>, Rat)> {
        if next == cur {
            return match lift {
                Some(d) => {
                    let i = self.darts.index_of(&d)?;
                    let w = self.bl.entry(i, i);
                    (!w.is_zero()).then(|| (Some(d), w))
                }
                // Holding costs the same in either orientation.
                None => Some((None, rat(1, 2))),
            };
        }
        let cur_ends = self.g.endpoints(cur);
        let next_ends = self.g.endpoints(next);
        let via = shared_vertex(cur_ends, next_ends)?;
        let d_cur = match lift {
            Some(d) => {
                if d.head != via {
                    return None;
                }
                d
            }
            None => Dart::new(other_end(cur_ends, via), via),
        };
        let d_next = Dart::new(via, other_end(next_ends, via));
        let w = self
            .bl
            .entry(self.darts.index_of(&d_cur)?, self.darts.index_of(&d_next)?);
        (!w.is_zero()).then(|| (Some(d_next), w))
    }

    fn grow(
        &self,
        path: &mut Vec<usize>,
        lift: Option<Dart>,
        prod: Rat,
        routes: &mut BTreeMap<(usize, usize), Vec<(Vec<usize>, Rat)>>,
    ) {
        let hops = path.len() - 1;
        let cur = *path.last().unwrap();
        if hops >= 1 && cur != path[0] {
            let rho = rpow(self.q, hops) * self.p / rint(2) * &prod;
            routes
                .entry((path[0], cur))
                .or_default()
                .push((path.clone(), rho));
        }
        if hops == self.horizon {
            return;
        }
        for &(next, _) in self.tilde.incident(cur) {
            if let Some((new_lift, w)) = self.lift_step(lift, cur, next) {
                path.push(next);
                self.grow(path, new_lift, prod.clone() * w, routes);
                path.pop();
            }
        }
    }

    /// Weight of an arbitrary edge sequence under the regeneration law:
    /// zero when no dart lift shadows it, and the half-per-hold convention
    /// when the sequence never leaves its starting edge.
    fn path_rho(&self, path: &[usize]) -> Rat {
        let hops = path.len() - 1;
        let mut lift = None;
        let mut prod = rone();
        for step in path.windows(2) {
            match self.lift_step(lift, step[0], step[1]) {
                Some((new_lift, w)) => {
                    lift = new_lift;
                    prod *= w;
                }
                None => return rzero(),
            }
        }
        rpow(self.q, hops) * self.p / rint(2) * prod
    }
}

fn shared_vertex(a: (Vertex, Vertex), b: (Vertex, Vertex)) -> Option<Vertex> {
    if a.0 == b.0 || a.0 == b.1 {
        Some(a.0)
    } else if a.1 == b.0 || a.1 == b.1 {
        Some(a.1)
    } else {
        None
    }
}

fn other_end(ends: (Vertex, Vertex), v: Vertex) -> Vertex {
    if ends.0 == v {
        ends.1
    } else {
        ends.0
    }
}

/// Fourth moment of the first success time of independent rate-`p` trials.
pub fn geometric_fourth_moment(p: &Rat) -> Rat {
    let p2 = p * p;
    let p3 = &p2 * p;
    (rint(24) - rint(36) * p + rint(14) * &p2 - &p3) / rpow(p, 4)
}

/// Monte Carlo estimate of the same moment, for report cross-checks.
pub fn empirical_tau_fourth_moment(p: &Rat, samples: usize, seed: u64) -> Result<f64> {
    let pf = to_f64(p);
    if !(0.0..=1.0).contains(&pf) || pf == 0.0 {
        return Err(Error::InvalidParameter(
            "success rate must lie in (0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..samples.max(1) {
        let mut t = 1u64;
        while !rng.gen_bool(pf) {
            t += 1;
        }
        acc += (t as f64).powi(4);
    }
    Ok(acc / samples.max(1) as f64)
}

/// Cutset lower bound on the effective resistance between `sources` and the
/// marked boundary: `Σ_n 1 / (Σ_{e ∈ Π_n} c_e)` over pairwise disjoint
/// separating edge sets.
pub fn nash_williams_bound(
    net: &Network,
    sources: &[Vertex],
    cutsets: &[Vec<usize>],
) -> Result<Rat> {
    let g = net.graph();
    let sources = normalize_terminals(sources, g.n(), "source")?;
    let boundary = g.boundary_vertices();
    if boundary.is_empty() {
        return Err(Error::InvalidParameter(
            "network has no boundary vertices to separate from".into(),
        ));
    }
    if let Some(&s) = sources.iter().find(|s| g.is_boundary(**s)) {
        return Err(Error::InvalidParameter(format!(
            "source vertex {s} lies on the boundary"
        )));
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, cutset) in cutsets.iter().enumerate() {
        if cutset.is_empty() {
            return Err(Error::InvalidParameter(format!("cutset {i} is empty")));
        }
        for &e in cutset {
            if e >= g.edge_count() {
                return Err(Error::InvalidParameter(format!(
                    "cutset {i} names edge {e}, but the network has {} edges",
                    g.edge_count()
                )));
            }
            if let Some(&prev) = owner.get(&e) {
                return Err(Error::CutsetsNotDisjoint {
                    a: prev,
                    b: i,
                    edge: e,
                });
            }
            owner.insert(e, i);
        }
    }
    let mut bound = rzero();
    for (i, cutset) in cutsets.iter().enumerate() {
        if let Some(witness) = crossing_path(g, &sources, cutset) {
            return Err(Error::CutsetDoesNotSeparate { index: i, witness });
        }
        let total: Rat = cutset
            .iter()
            .fold(rzero(), |acc, &e| acc + net.conductance(e));
        bound += rone() / total;
    }
    Ok(bound)
}

/// BFS from the sources avoiding `blocked` edges; a returned path to the
/// boundary witnesses that the cutset fails to separate.
fn crossing_path(g: &Graph, sources: &[Vertex], blocked: &[usize]) -> Option<Vec<Vertex>> {
    let blocked: BTreeSet<usize> = blocked.iter().copied().collect();
    let mut parent: Vec<Option<Vertex>> = vec![None; g.n()];
    let mut seen = vec![false; g.n()];
    let mut queue = VecDeque::new();
    for &s in sources {
        seen[s] = true;
        queue.push_back(s);
    }
    while let Some(x) = queue.pop_front() {
        if g.is_boundary(x) {
            let mut path = vec![x];
            let mut at = x;
            while let Some(prev) = parent[at] {
                path.push(prev);
                at = prev;
            }
            path.reverse();
            return Some(path);
        }
        for &(y, e) in g.incident(x) {
            if !blocked.contains(&e) && !seen[y] {
                seen[y] = true;
                parent[y] = Some(x);
                queue.push_back(y);
            }
        }
    }
    None
}
