//! Box experiments: exhaustion capacity sweeps and return-counting walks.
//!
//! The recurrence-type probes all share one shape: grow a box around a
//! center vertex and watch a number that distinguishes escape from return.
//! For capacities that number is the effective conductance from the center
//! to the outer shell, computed by conjugate gradients on the network of
//! the chain in question; it drifts to zero when the limit graph is
//! recurrent and stabilizes when it is transient. For sampled walks it is
//! the count of returns to the center before the first shell hit.
//!
//! Three chains are swept side by side on the same box: the simple walk on
//! the vertices, the additive symmetrization of the non-backtracking dart
//! walk, and the reversal-pair chain built from the walk that backtracks
//! with probability `p`. A cutset bound joins them as a sanity rail: the
//! shell-by-shell series lower-bounds the resistance, so its reciprocal
//! caps the simple-walk capacity from above.

use nbwalk::graph::{Graph, Network};
use nbwalk::linalg::cg_solve;
use nbwalk::potential::{nash_williams_bound, network_capacity_f64, symmetrized_network};
use nbwalk::ratio::{format_rat, rat, rone, to_f64, Rat};
use nbwalk::walks::nbrw_kernel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{center_index, CliError, CliResult};
use crate::report::{csv_float, csv_line};
use crate::sub_seed;

/// Relative tolerance for the conjugate-gradient capacity solves.
pub const CG_TOL: f64 = 1e-10;

/// One point of a capacity sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    /// Which graph family the box belongs to (`box`, `base`, `subdivided`).
    pub family: String,
    /// Which chain was solved (`srw`, `nbrw`, `w`, `nw-bound`).
    pub chain: String,
    /// Side length of the box.
    pub side: usize,
    /// Vertices of the solved network.
    pub states: usize,
    /// Effective conductance from the center to the outer shell.
    pub capacity: f64,
    /// Residual reported by the linear solver (zero for closed forms).
    pub solver_residual: f64,
}

/// Builds the cube `[0,l)^dim` and returns it with its center.
fn cube(dim: usize, l: usize) -> (Graph, usize) {
    let dims = vec![l; dim];
    (Graph::grid(&dims), center_index(&dims))
}

/// Capacity of one chain on one box.
///
/// The dart chains place the source on every dart leaving the center and
/// absorb on every dart touching the outer shell; the pair chain does the
/// same with reversal classes, which are in bijection with the edges.
pub fn box_capacity_point(dim: usize, l: usize, chain: &str, p: &Rat) -> CliResult<SweepPoint> {
    let (g, center) = cube(dim, l);
    let boundary = g.boundary_vertices();
    let (states, capacity, residual) = match chain {
        "srw" => {
            let net = Network::unit(g);
            let n = net.graph().n();
            let (cap, res) = network_capacity_f64(&net, &[center], &boundary, CG_TOL)?;
            (n, cap, res)
        }
        "nbrw" => {
            let kernel = nbrw_kernel(&g)?;
            let pi = vec![rone(); kernel.n()];
            let net = symmetrized_network(&kernel, &pi)?;
            let mut sources = Vec::new();
            let mut sinks = Vec::new();
            for (i, dart) in kernel.space().iter() {
                if g.is_boundary(dart.tail) || g.is_boundary(dart.head) {
                    sinks.push(i);
                } else if dart.tail == center {
                    sources.push(i);
                }
            }
            let n = kernel.n();
            let (cap, res) = network_capacity_f64(&net, &sources, &sinks, CG_TOL)?;
            (n, cap, res)
        }
        "w" => pair_capacity_f64(&g, center, p)?,
        "nw-bound" => {
            let bound = shell_capacity_bound(&g, center)?;
            (g.n(), to_f64(&bound), 0.0)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown chain `{other}`; expected srw, nbrw, w, or nw-bound"
            )))
        }
    };
    Ok(SweepPoint {
        family: "box".into(),
        chain: chain.into(),
        side: l,
        states,
        capacity,
        solver_residual: residual,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum ClassRole {
    Source,
    Sink,
    Interior,
}

/// Capacity of the reversal-pair chain, computed without materializing it.
///
/// The pair kernel is the reversal-class average of `p (I - (1-p) L)^{-1}`,
/// where `L` is the lazy non-backtracking dart step. Building that inverse
/// in rationals is cubic in the dart count and explodes on real boxes, but
/// the conjugate-gradient solve only ever applies the conductance Laplacian
/// to a vector, and one application unrolls into a geometric series against
/// the sparse `L`. The whole point therefore runs in floats with the pair
/// matrix left implicit.
///
/// The dart step sends uniform mass to uniform mass, so the counting
/// measure on darts is stationary and its class pushforward gives the row
/// weights of the conductance matrix. Counting scale rather than
/// probability scale is what makes the sweep read like the simple walk's
/// unit network: plateaus stay plateaus as the box absorbs more states.
/// Both series directions are averaged, which keeps the truncated operator
/// exactly symmetric and the solve honest about its own approximation.
fn pair_capacity_f64(g: &Graph, center: usize, p: &Rat) -> CliResult<(usize, f64, f64)> {
    let kernel = nbrw_kernel(g)?;
    let n = kernel.n();
    let rev = kernel.space().reversal_permutation()?;
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|a| kernel.row(a).iter().map(|(j, w)| (*j, to_f64(w))).collect())
        .collect();
    let mut class_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for a in 0..n {
        if class_of[a] != usize::MAX {
            continue;
        }
        let c = members.len();
        class_of[a] = c;
        if rev[a] == a {
            members.push(vec![a]);
        } else {
            class_of[rev[a]] = c;
            members.push(vec![a, rev[a]]);
        }
    }
    let m = members.len();
    let mut role = vec![ClassRole::Interior; m];
    for (c, mem) in members.iter().enumerate() {
        let dart = kernel.space().state(mem[0]);
        if g.is_boundary(dart.tail) || g.is_boundary(dart.head) {
            role[c] = ClassRole::Sink;
        } else if dart.tail == center || dart.head == center {
            role[c] = ClassRole::Source;
        }
    }
    if !role.contains(&ClassRole::Source) {
        return Err(CliError::Config(
            "no pair class touches the center off the shell".into(),
        ));
    }
    let pf = to_f64(p);
    let q = 1.0 - pf;
    if !(pf > 0.0 && q > 0.0) {
        return Err(CliError::Config(format!(
            "pair chain needs 0 < p < 1, got {}",
            format_rat(p)
        )));
    }
    let terms = (-14.0 / q.log10()).ceil() as usize + 1;
    let mut dart = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut step = vec![0.0; n];
    let mut fwd = vec![0.0; n];
    let mut bwd = vec![0.0; n];
    let mut x_full = vec![0.0; m];
    let mut cx = vec![0.0; m];
    let mut chat = |x: &[f64], out: &mut [f64]| {
        for a in 0..n {
            dart[a] = x[class_of[a]];
        }
        for (transpose, acc) in [(false, &mut fwd), (true, &mut bwd)] {
            v.copy_from_slice(&dart);
            acc.copy_from_slice(&dart);
            for _ in 0..terms {
                if transpose {
                    step.fill(0.0);
                    for (a, row) in rows.iter().enumerate() {
                        for &(j, w) in row {
                            step[j] += w * v[a];
                        }
                    }
                } else {
                    for (a, row) in rows.iter().enumerate() {
                        step[a] = row.iter().map(|&(j, w)| w * v[j]).sum();
                    }
                }
                for i in 0..n {
                    v[i] = 0.5 * q * (v[i] + step[i]);
                    acc[i] += v[i];
                }
            }
        }
        for (c, mem) in members.iter().enumerate() {
            out[c] = 0.5 * pf * mem.iter().map(|&a| fwd[a] + bwd[a]).sum::<f64>();
        }
    };
    let weight = |c: usize| members[c].len() as f64;
    let interior: Vec<usize> = (0..m).filter(|&c| role[c] == ClassRole::Interior).collect();
    let mut slot = vec![usize::MAX; m];
    for (i, &c) in interior.iter().enumerate() {
        slot[c] = i;
    }
    for c in 0..m {
        x_full[c] = if role[c] == ClassRole::Source { 1.0 } else { 0.0 };
    }
    chat(&x_full, &mut cx);
    let b: Vec<f64> = interior.iter().map(|&c| cx[c]).collect();
    let (sol, residual) = if interior.is_empty() {
        (Vec::new(), 0.0)
    } else {
        cg_solve(
            &mut |x, out| {
                for c in 0..m {
                    x_full[c] = if slot[c] == usize::MAX { 0.0 } else { x[slot[c]] };
                }
                chat(&x_full, &mut cx);
                for (i, &c) in interior.iter().enumerate() {
                    out[i] = weight(c) * x[i] - cx[c];
                }
            },
            &b,
            CG_TOL,
            40 * interior.len() + 100,
        )?
    };
    for c in 0..m {
        x_full[c] = match role[c] {
            ClassRole::Source => 1.0,
            ClassRole::Sink => 0.0,
            ClassRole::Interior => sol[slot[c]],
        };
    }
    chat(&x_full, &mut cx);
    let cap = (0..m)
        .filter(|&c| role[c] == ClassRole::Source)
        .map(|c| weight(c) - cx[c])
        .sum();
    Ok((m, cap, residual))
}

/// Upper bound on the simple-walk capacity from the cutset series.
///
/// The edges between distance shells `n-1` and `n` around the center form
/// disjoint cutsets; summing their reciprocal sizes lower-bounds the
/// resistance to the shell, and the reciprocal of that sum caps the
/// capacity.
pub fn shell_capacity_bound(g: &Graph, center: usize) -> CliResult<Rat> {
    let dist = g.distances(center);
    let reach = g
        .boundary_vertices()
        .iter()
        .filter_map(|&b| dist[b])
        .min()
        .ok_or_else(|| CliError::Config("graph has no reachable boundary".into()))?;
    let mut cutsets = vec![Vec::new(); reach];
    for e in 0..g.edge_count() {
        let (u, v) = g.endpoints(e);
        if let (Some(du), Some(dv)) = (dist[u], dist[v]) {
            let n = du.max(dv);
            if du != dv && n <= reach {
                cutsets[n - 1].push(e);
            }
        }
    }
    let net = Network::unit(g.clone());
    let resistance = nash_williams_bound(&net, &[center], &cutsets)?;
    Ok(resistance.recip())
}

/// Sweeps the requested chains across box sizes.
pub fn capacity_sweep(
    dim: usize,
    sizes: &[usize],
    chains: &[String],
    p: &Rat,
) -> CliResult<Vec<SweepPoint>> {
    let mut rows = Vec::new();
    for &l in sizes {
        if l < 5 {
            return Err(CliError::Config(format!(
                "box side {l} is too small for a separated center and shell"
            )));
        }
        for chain in chains {
            rows.push(box_capacity_point(dim, l, chain, p)?);
        }
    }
    Ok(rows)
}

/// The recurrent-by-subdivision pairing: the same cubes, simple walk only,
/// solved once as built and once with every shell edge stretched into a
/// path as long as its shell is wide. The stretched family loses a constant
/// chunk of conductance per shell, so its capacity drains; the base family
/// keeps the transient plateau.
pub fn subdivision_sweep(sizes: &[usize]) -> CliResult<Vec<SweepPoint>> {
    let mut rows = Vec::new();
    for &l in sizes {
        if l < 5 || l % 2 == 0 {
            return Err(CliError::Config(format!(
                "subdivision sweep wants odd sides >= 5 so the center is unique, got {l}"
            )));
        }
        let (g, center) = cube(3, l);
        let boundary = g.boundary_vertices();
        let (cap, res) = network_capacity_f64(&Network::unit(g.clone()), &[center], &boundary, CG_TOL)?;
        rows.push(SweepPoint {
            family: "base".into(),
            chain: "srw".into(),
            side: l,
            states: g.n(),
            capacity: cap,
            solver_residual: res,
        });
        let mut sub = g.subdivide_by_shells(center)?.graph;
        sub.set_boundary(&boundary);
        let n = sub.n();
        let (cap, res) = network_capacity_f64(&Network::unit(sub), &[center], &boundary, CG_TOL)?;
        rows.push(SweepPoint {
            family: "subdivided".into(),
            chain: "srw".into(),
            side: l,
            states: n,
            capacity: cap,
            solver_residual: res,
        });
    }
    Ok(rows)
}

/// Renders sweep rows as plot-ready CSV.
pub fn sweep_csv(rows: &[SweepPoint]) -> String {
    let mut out = String::from("family,chain,side,states,capacity,solver_residual\n");
    for r in rows {
        out.push_str(&csv_line(&[
            r.family.clone(),
            r.chain.clone(),
            r.side.to_string(),
            r.states.to_string(),
            csv_float(r.capacity),
            csv_float(r.solver_residual),
        ]));
    }
    out
}

/// Outcome of one sampled trial.
#[derive(Clone, Copy, Debug)]
struct Trial {
    returns: usize,
    exited: bool,
    steps: usize,
}

/// Aggregated return-counting statistics for one graph.
#[derive(Clone, Debug, Serialize)]
pub struct WalkTrend {
    pub kind: String,
    pub trials: usize,
    /// Mean number of visits to the center strictly between start and exit.
    pub mean_returns: f64,
    /// Fraction of trials that reached the shell within the horizon.
    pub escape_frequency: f64,
    /// Mean steps to the shell, among exiting trials.
    pub mean_exit_steps: f64,
    /// Trials stopped by the horizon instead of the shell.
    pub capped: usize,
}

fn one_trial<R: Rng>(
    g: &Graph,
    center: usize,
    non_backtracking: bool,
    horizon: usize,
    rng: &mut R,
) -> Trial {
    let mut here = center;
    let mut prev = usize::MAX;
    let mut returns = 0;
    for step in 1..=horizon {
        let inc = g.incident(here);
        let next = if non_backtracking && prev != usize::MAX {
            let fresh: Vec<usize> = inc
                .iter()
                .map(|&(y, _)| y)
                .filter(|&y| y != prev)
                .collect();
            if fresh.is_empty() {
                inc[rng.gen_range(0..inc.len())].0
            } else {
                fresh[rng.gen_range(0..fresh.len())]
            }
        } else {
            inc[rng.gen_range(0..inc.len())].0
        };
        prev = here;
        here = next;
        if g.is_boundary(here) {
            return Trial {
                returns,
                exited: true,
                steps: step,
            };
        }
        if here == center {
            returns += 1;
        }
    }
    Trial {
        returns,
        exited: false,
        steps: horizon,
    }
}

/// Samples return counts from `center` until the marked shell or the
/// horizon.
///
/// Each trial draws its generator independently from the root seed, the
/// label, and the trial index, so splitting the batch does not move the
/// numbers. The CSV has one `trial,exited,steps,returns` row per trial.
pub fn walk_trials(
    g: &Graph,
    center: usize,
    kind: &str,
    trials: usize,
    horizon: usize,
    root_seed: u64,
    label: &str,
) -> CliResult<(WalkTrend, String)> {
    let non_backtracking = match kind {
        "srw" => false,
        "nbrw" => true,
        other => {
            return Err(CliError::Config(format!(
                "unknown walk kind `{other}` for a return trend; expected srw or nbrw"
            )))
        }
    };
    if trials == 0 {
        return Err(CliError::Config("field `trials`: must be positive".into()));
    }
    let mut csv = String::from("trial,exited,steps,returns\n");
    let mut returns_sum = 0usize;
    let mut exit_steps_sum = 0usize;
    let mut exited = 0usize;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(root_seed, label, t as u64));
        let trial = one_trial(g, center, non_backtracking, horizon, &mut rng);
        returns_sum += trial.returns;
        if trial.exited {
            exited += 1;
            exit_steps_sum += trial.steps;
        }
        csv.push_str(&csv_line(&[
            t.to_string(),
            (trial.exited as u8).to_string(),
            trial.steps.to_string(),
            trial.returns.to_string(),
        ]));
    }
    let trend = WalkTrend {
        kind: kind.into(),
        trials,
        mean_returns: returns_sum as f64 / trials as f64,
        escape_frequency: exited as f64 / trials as f64,
        mean_exit_steps: if exited == 0 {
            f64::NAN
        } else {
            exit_steps_sum as f64 / exited as f64
        },
        capped: trials - exited,
    };
    Ok((trend, csv))
}

/// Return-counting trials on the cube `[0,l)^dim` from its center.
pub fn box_walk(
    dim: usize,
    l: usize,
    kind: &str,
    trials: usize,
    horizon: usize,
    root_seed: u64,
    label: &str,
) -> CliResult<(WalkTrend, String)> {
    let (g, center) = cube(dim, l);
    walk_trials(&g, center, kind, trials, horizon, root_seed, label)
}

/// Default backtrack probability for the pair chain in sweeps.
pub fn default_p() -> Rat {
    rat(1, 4)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_points_agree_with_the_exact_small_solve() {
        let point = box_capacity_point(2, 5, "srw", &default_p()).unwrap();
        let (g, center) = cube(2, 5);
        let exact = nbwalk::potential::network_capacity(
            &Network::unit(g.clone()),
            &[center],
            &g.boundary_vertices(),
        )
        .unwrap();
        assert!((point.capacity - to_f64(&exact)).abs() < 1e-8);
        assert_eq!(point.states, 25);

        let bound = box_capacity_point(2, 5, "nw-bound", &default_p()).unwrap();
        assert!(bound.capacity >= point.capacity - 1e-9);
    }

    #[test]
    fn the_shell_bound_is_the_reciprocal_harmonic_sum() {
        let (g, center) = cube(2, 5);
        let bound = shell_capacity_bound(&g, center).unwrap();
        let dist = g.distances(center);
        let mut shells = vec![0usize; 2];
        for e in 0..g.edge_count() {
            let (u, v) = g.endpoints(e);
            let (du, dv) = (dist[u].unwrap(), dist[v].unwrap());
            if du != dv && du.max(dv) <= 2 {
                shells[du.max(dv) - 1] += 1;
            }
        }
        let expect = (rat(1, shells[0] as i64) + rat(1, shells[1] as i64)).recip();
        assert_eq!(bound, expect);
    }

    #[test]
    fn dart_chain_sweeps_solve_and_stay_positive() {
        for chain in ["nbrw", "w"] {
            let point = box_capacity_point(2, 6, chain, &default_p()).unwrap();
            assert!(point.capacity > 0.0, "{chain}: {point:?}");
            assert!(point.solver_residual < 1e-8);
        }
    }

    #[test]
    fn implicit_pair_capacity_matches_the_exact_build() {
        use nbwalk::kernel::uniform_measure;
        use nbwalk::potential::chain_network;
        use nbwalk::regeneration::PairChain;
        use nbwalk::walks::pbrw_kernel;

        let p = default_p();
        let (g, center) = cube(2, 5);
        let kernel = pbrw_kernel(&g, &p).unwrap();
        let pi = uniform_measure(kernel.n());
        let space = kernel.space().clone();
        let pair = PairChain::build(kernel, &p, &pi).unwrap();
        let net = chain_network(pair.pair_kernel(), pair.pair_measure()).unwrap();
        let mut sources = Vec::new();
        let mut sinks = Vec::new();
        for (c, mem) in pair.classes().members.iter().enumerate() {
            let dart = space.state(mem[0]);
            if g.is_boundary(dart.tail) || g.is_boundary(dart.head) {
                sinks.push(c);
            } else if dart.tail == center || dart.head == center {
                sources.push(c);
            }
        }
        let (exact, _) = network_capacity_f64(&net, &sources, &sinks, CG_TOL).unwrap();
        let (m, cap, _) = pair_capacity_f64(&g, center, &p).unwrap();
        assert_eq!(m, pair.class_count());
        let counting = exact * space.len() as f64;
        assert!(
            (cap - counting).abs() < 1e-8 * counting.max(1.0),
            "implicit {cap} vs exact {counting}"
        );
    }

    #[test]
    fn subdivision_pairs_share_sides_and_marked_shells() {
        let rows = subdivision_sweep(&[5]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].family, "base");
        assert_eq!(rows[1].family, "subdivided");
        assert!(rows[1].states > rows[0].states);
        assert!(rows[1].capacity < rows[0].capacity);
        assert!(subdivision_sweep(&[6]).is_err());
    }

    #[test]
    fn box_walks_are_deterministic_and_respect_the_horizon() {
        let (a, csv_a) = box_walk(2, 9, "srw", 64, 4000, 11, "walk/test").unwrap();
        let (b, csv_b) = box_walk(2, 9, "srw", 64, 4000, 11, "walk/test").unwrap();
        assert_eq!(csv_a, csv_b);
        assert_eq!(a.escape_frequency, b.escape_frequency);
        assert_eq!(a.trials, 64);
        assert!(a.escape_frequency > 0.9);
        assert_eq!(csv_a.lines().count(), 65);

        let (c, _) = box_walk(2, 9, "srw", 64, 3, 11, "walk/test").unwrap();
        assert_eq!(c.capped, 64);
        assert!(c.mean_exit_steps.is_nan());

        let (d, csv_d) = box_walk(2, 9, "nbrw", 64, 4000, 11, "walk/test").unwrap();
        assert_ne!(csv_a, csv_d);
        assert!(d.mean_exit_steps < a.mean_exit_steps);
    }
}
