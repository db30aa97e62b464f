//! Subcommand implementations.
//!
//! Every subcommand is a function from a validated [`ExperimentConfig`] to
//! an [`Outcome`]: a JSON report, an optional CSV artifact, and the verdict
//! that decides the exit code. The binary only parses flags and writes
//! files, so tests exercise these functions directly.
//!
//! Per-subcommand knobs travel in `config.params` under the keys named in
//! each function's documentation; the corresponding command-line flags fill
//! the same keys.

use std::path::Path;

use nbwalk::cayley::{alpha_family, alpha_symmetry_suite, cayley_graph, induced_alpha_kernel, CayleySpec};
use nbwalk::cover::{build_cover, coupled_walks, tau_tail};
use nbwalk::graph::StructuralCondition;
use nbwalk::kernel::uniform_measure;
use nbwalk::orientation::{
    orientation_by_absorption, rough_map_check, sink_free_source_free_orientation,
    verify_orientation, RoughMode, VertexMap,
};
use nbwalk::ratio::{format_rat, parse_rat, rone, rpow, rzero, to_f64};
use nbwalk::regeneration::{backtrack_floor, PairChain};
use nbwalk::stationary::{
    pi_ke_measure, verify_kernel_symmetry, verify_multiset_reversal, verify_trajectory_symmetry,
    vertex_symmetry_counterexample, SymmetryWalk,
};
use nbwalk::walks::{
    knbrw, line_graph, nbrw_kernel, pbrw_kernel, reversal_access, stuck_check, WalkMode,
};
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::config::{build_graph, CliError, CliResult, ExperimentConfig};
use crate::experiments::{
    capacity_sweep, default_p, subdivision_sweep, sweep_csv, walk_trials,
};
use crate::report::{merge_reports, report_skeleton, stamp_input};
use crate::sub_seed;

/// What a subcommand hands back to the binary.
pub struct Outcome {
    /// Ordered JSON document, ready to serialize.
    pub report: Map<String, Value>,
    /// CSV artifact, when the subcommand produces one.
    pub csv: Option<String>,
    /// Drives the exit code: `true` exits 0, `false` exits 1.
    pub all_pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.all_pass {
            0
        } else {
            1
        }
    }
}

/// One entry of an identity battery.
fn entry(name: &str, pass: bool, detail: Value) -> Value {
    json!({ "identity": name, "pass": pass, "detail": detail })
}

fn loaded(cfg: &ExperimentConfig) -> CliResult<(nbwalk::graph::Graph, Option<usize>, Option<u64>)> {
    let l = build_graph(&cfg.graph)?;
    Ok((l.graph, l.start, l.file_hash))
}

fn finish(
    mut report: Map<String, Value>,
    cfg: &ExperimentConfig,
    file_hash: Option<u64>,
    results: Value,
    csv: Option<String>,
    all_pass: bool,
) -> Outcome {
    if let (Some(h), Some(f)) = (file_hash, cfg.graph.file.as_ref()) {
        stamp_input(&mut report, &f.display().to_string(), h);
    }
    report.insert("results".into(), results);
    report.insert("all_pass".into(), json!(all_pass));
    Outcome {
        report,
        csv,
        all_pass,
    }
}

/// Exact identity battery on the configured walk.
///
/// Suites (select with `suites`, default depends on the window mode):
/// `stationarity` checks that the product measure is preserved,
/// `trajectory` and `kernel` check the reversal symmetries of trajectory
/// laws and of kernel powers with their lazy versions, `multiset` checks
/// the visit-multiset reversal invariance, and `vertex-symmetry` hunts for
/// the counterexample that the vertex window walk admits on non-transitive
/// graphs. Params: `n` (power for the kernel checks), `s` (path length for
/// the multiset check).
pub fn cmd_identities(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let (g, _, file_hash) = loaded(cfg)?;
    let k = cfg.walk.k;
    let mode = cfg.walk.mode_enum()?;
    let report = report_skeleton("identities", cfg);
    let suites: Vec<String> = if cfg.suites.is_empty() {
        let battery: &[&str] = match mode {
            WalkMode::Edge => &["stationarity", "trajectory", "kernel", "multiset"],
            WalkMode::Vertex => &["vertex-symmetry", "multiset"],
        };
        battery.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.suites.clone()
    };
    let walk_kind = if k == 1 {
        SymmetryWalk::Nbrw
    } else {
        SymmetryWalk::EdgeWindow
    };
    let mut entries = Vec::new();
    let mut all = true;
    for suite in &suites {
        let e = match suite.as_str() {
            "stationarity" => {
                let stuck = stuck_check(&g, k, WalkMode::Edge, cfg.caps.states)?;
                let (kernel, _) = knbrw(&g, k, WalkMode::Edge, cfg.caps.states)?;
                let pi = pi_ke_measure(&g, kernel.space())?;
                let verdict = kernel.check_stationary(&pi);
                entry(
                    "stationarity",
                    verdict.is_ok(),
                    json!({
                        "states": kernel.n(),
                        "stuck_states": stuck.stuck_states.len(),
                        "stuck_free_from_valid_starts": stuck.stuck_free_from_valid_starts,
                        "violation": verdict.err().map(|e| e.to_string()),
                    }),
                )
            }
            "trajectory" => {
                let n = cfg.param_usize("n", 4)?;
                let r = verify_trajectory_symmetry(&g, k, n, walk_kind, cfg.caps.trajectory)?;
                entry(
                    "trajectory",
                    r.ok(),
                    json!({
                        "n": r.n,
                        "trajectories_checked": r.trajectories_checked,
                        "counterexamples": r.counterexamples.len(),
                    }),
                )
            }
            "kernel" => {
                let n = cfg.param_usize("n", 3)?;
                let r = verify_kernel_symmetry(&g, k, n, walk_kind, cfg.caps.trajectory)?;
                entry(
                    "kernel",
                    r.ok(),
                    json!({
                        "n": r.n,
                        "pairs_checked": r.pairs_checked,
                        "counterexamples": r.counterexamples.len(),
                        "lazy_counterexamples": r.lazy_counterexamples.len(),
                    }),
                )
            }
            "multiset" => {
                let s = cfg.param_usize("s", k + 3)?;
                let r = verify_multiset_reversal(&g, k, s, cfg.caps.trajectory)?;
                entry(
                    "multiset",
                    r.ok(),
                    json!({
                        "s": r.s,
                        "paths_checked": r.checked,
                        "closure_failures": r.closure_failures.len(),
                        "counterexamples": r.counterexamples.len(),
                    }),
                )
            }
            "vertex-symmetry" => {
                let mut found = None;
                for n in 1..=cfg.param_usize("n", 3)? {
                    if let Some(w) =
                        vertex_symmetry_counterexample(&g, k, n, cfg.caps.trajectory)?
                    {
                        found = Some(w);
                        break;
                    }
                }
                match found {
                    None => entry(
                        "vertex-symmetry",
                        true,
                        json!({ "witness": Value::Null }),
                    ),
                    Some(w) => entry(
                        "vertex-symmetry",
                        false,
                        json!({
                            "witness": {
                                "alpha": w.alpha.to_string(),
                                "beta": w.beta.to_string(),
                                "n": w.n,
                                "lhs": format_rat(&w.lhs),
                                "rhs": format_rat(&w.rhs),
                            }
                        }),
                    ),
                }
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown suite `{other}`; expected stationarity, trajectory, kernel, \
                     multiset, or vertex-symmetry"
                )))
            }
        };
        all &= e["pass"].as_bool().unwrap_or(false);
        entries.push(e);
    }
    Ok(finish(
        report,
        cfg,
        file_hash,
        json!({ "graph": g.name(), "k": k, "mode": cfg.walk.mode, "identities": entries }),
        None,
        all,
    ))
}

/// Return-counting walk on a boxed graph.
///
/// Needs a graph with a marked outer shell and a start vertex; the `box`
/// generator provides both. Params: `trials`, `steps` (per-trial horizon,
/// bounded by `caps.horizon`), `start` (override the center).
pub fn cmd_walk(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let (g, start, file_hash) = loaded(cfg)?;
    let report = report_skeleton("walk", cfg);
    let start = match cfg.params.get("start") {
        Some(v) => v
            .parse()
            .map_err(|_| CliError::Config(format!("field `params.start`: `{v}` is not a vertex")))?,
        None => start.ok_or_else(|| {
            CliError::Config(
                "walk needs a start vertex: use the `box` generator or set `params.start`".into(),
            )
        })?,
    };
    if g.boundary_vertices().is_empty() {
        return Err(CliError::Config(
            "walk needs a marked outer shell; the `box` and `grid` generators provide one".into(),
        ));
    }
    let trials = cfg.param_usize("trials", 2000)?;
    let steps = cfg.param_usize("steps", 100_000)?;
    if steps > cfg.caps.horizon {
        return Err(CliError::Resource(format!(
            "steps {steps} exceeds caps.horizon {}",
            cfg.caps.horizon
        )));
    }
    let (trend, csv) = walk_trials(
        &g,
        start,
        &cfg.walk.kind,
        trials,
        steps,
        cfg.seed,
        "walk/trial",
    )?;
    Ok(finish(
        report,
        cfg,
        file_hash,
        json!({
            "graph": g.name(),
            "start": start,
            "trend": serde_json::to_value(&trend).expect("trend serializes"),
        }),
        Some(csv),
        true,
    ))
}

/// Capacity exhaustion sweeps.
///
/// Params: `sweep` (`box` or `subdivision`), `dim` (2 or 3 for `box`),
/// `sizes` (comma list of sides), `chains` (comma list of `srw`, `nbrw`,
/// `w`, `nw-bound`). The pair chain's backtrack probability is `walk.p`,
/// one quarter by default.
pub fn cmd_capacity(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let report = report_skeleton("capacity", cfg);
    let sweep = cfg
        .params
        .get("sweep")
        .map(String::as_str)
        .unwrap_or("box");
    let p = match &cfg.walk.p {
        Some(s) => parse_rat(s)?,
        None => default_p(),
    };
    let rows = match sweep {
        "box" => {
            let dim = cfg.param_usize("dim", 2)?;
            if !(2..=3).contains(&dim) {
                return Err(CliError::Config(format!(
                    "field `params.dim`: sweeps cover dimensions 2 and 3, got {dim}"
                )));
            }
            let default_sizes: &[usize] = if dim == 2 { &[8, 16, 32] } else { &[12, 16] };
            let sizes = cfg.param_sizes("sizes", default_sizes)?;
            for &l in &sizes {
                let darts = 2 * dim * l.pow(dim as u32);
                if darts > cfg.caps.states {
                    return Err(CliError::Resource(format!(
                        "side {l} needs about {darts} dart states, over caps.states {}",
                        cfg.caps.states
                    )));
                }
            }
            let chains: Vec<String> = match cfg.params.get("chains") {
                None => ["srw", "nbrw", "w", "nw-bound"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
                Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
            };
            capacity_sweep(dim, &sizes, &chains, &p)?
        }
        "subdivision" => {
            let sizes = cfg.param_sizes("sizes", &[5, 7, 9])?;
            subdivision_sweep(&sizes)?
        }
        other => {
            return Err(CliError::Config(format!(
                "field `params.sweep`: expected `box` or `subdivision`, got `{other}`"
            )))
        }
    };
    let csv = sweep_csv(&rows);
    Ok(finish(
        report,
        cfg,
        None,
        json!({ "sweep": sweep, "points": rows }),
        Some(csv),
        true,
    ))
}

/// Reversal-pair auxiliary chain: floor, exact build, series check,
/// optional Monte Carlo comparison.
///
/// The walk must see its reversals: the dart walk (`nbrw` with `k` 1), the
/// backtracking dart walk (`pbrw` with `walk.p`), or the edge window walk
/// (`nbrw` with larger `k`). A zero backtrack floor is reported as a
/// structured failure with the reversal-access diagnostic rather than an
/// error, since it is a property of the configured walk. Params: `series`
/// (truncation length), `trials` (regenerations to sample; 0 skips
/// sampling), `access` (search radius for the diagnostic).
pub fn cmd_aux(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let (g, _, file_hash) = loaded(cfg)?;
    let report = report_skeleton("aux", cfg);
    let mode = cfg.walk.mode_enum()?;
    if mode == WalkMode::Vertex {
        return Err(CliError::Config(
            "the auxiliary chain pairs states with their reversals, which needs the edge \
             window or the dart walk; set walk.mode to `edge`"
                .into(),
        ));
    }
    match (cfg.walk.kind.as_str(), cfg.walk.k) {
        ("nbrw", 1) => {
            let kernel = nbrw_kernel(&g)?;
            let pi = uniform_measure(kernel.n());
            aux_analysis(cfg, &g, kernel, pi, file_hash, report)
        }
        ("pbrw", 1) => {
            let p = match &cfg.walk.p {
                Some(s) => parse_rat(s)?,
                None => default_p(),
            };
            let kernel = pbrw_kernel(&g, &p)?;
            let pi = uniform_measure(kernel.n());
            aux_analysis(cfg, &g, kernel, pi, file_hash, report)
        }
        ("nbrw", k) => {
            let (kernel, _) = knbrw(&g, k, WalkMode::Edge, cfg.caps.states)?;
            let pi = pi_ke_measure(&g, kernel.space())?;
            aux_analysis(cfg, &g, kernel, pi, file_hash, report)
        }
        ("pbrw", _) => Err(CliError::Config(
            "the backtracking walk lives on darts; use walk.k 1 with it".into(),
        )),
        (kind, _) => Err(CliError::Config(format!(
            "walk.kind `{kind}` has no reversal structure; use nbrw or pbrw"
        ))),
    }
}

fn aux_analysis<S: nbwalk::space::Reversible>(
    cfg: &ExperimentConfig,
    g: &nbwalk::graph::Graph,
    kernel: nbwalk::kernel::Kernel<S>,
    pi: Vec<nbwalk::ratio::Rat>,
    file_hash: Option<u64>,
    report: Map<String, Value>,
) -> CliResult<Outcome> {
    let floor = backtrack_floor(&kernel)?;
    if floor.is_zero() {
        let radius = cfg.param_usize("access", 16)?;
        let access = reversal_access(&kernel, radius)?;
        let unreachable = access.per_state.iter().filter(|d| d.is_none()).count();
        let results = json!({
            "graph": g.name(),
            "backtrack_floor": "0",
            "diagnostic": "backtrack floor is 0: some state never steps straight to its \
                           reversal, so no regeneration probability exists",
            "reversal_access": {
                "search_radius": radius,
                "states_without_access": unreachable,
                "max_finite_access": access.max_finite,
            },
        });
        return Ok(finish(report, cfg, file_hash, results, None, false));
    }
    let p = match &cfg.walk.p {
        Some(s) => parse_rat(s)?,
        None => floor.clone(),
    };
    let chain = PairChain::build(kernel, &p, &pi)?;
    let series_n = cfg.param_usize("series", 20)?;
    let series = chain.truncated_series(series_n);
    let expected_tail = rpow(&(rone() - &p), series_n + 1);
    let mut max_deficit = rzero();
    let mut series_ok = true;
    for (a, row) in series.iter().enumerate() {
        let mut mass = rzero();
        for (b, s) in row.iter().enumerate() {
            if s > &chain.pair_kernel().entry(a, b) {
                series_ok = false;
            }
            mass += s;
        }
        let deficit = rone() - mass;
        if deficit > max_deficit {
            max_deficit = deficit;
        }
    }
    series_ok &= max_deficit == expected_tail;
    let mut results = Map::new();
    results.insert("graph".into(), json!(g.name()));
    results.insert("backtrack_floor".into(), json!(format_rat(&floor)));
    results.insert("p".into(), json!(format_rat(&p)));
    results.insert("classes".into(), json!(chain.class_count()));
    results.insert("reversible".into(), json!(true));
    results.insert(
        "series".into(),
        json!({
            "terms": series_n,
            "max_row_deficit": format_rat(&max_deficit),
            "expected_tail": format_rat(&expected_tail),
            "exact": series_ok,
        }),
    );
    let trials = cfg.param_usize("trials", 0)?;
    let mut csv = None;
    let mut sampling_ok = true;
    if trials > 0 {
        let spacing = to_f64(&p).recip();
        let steps = ((trials as f64) * spacing * 1.5) as usize + 1000;
        if steps > cfg.caps.horizon {
            return Err(CliError::Resource(format!(
                "{trials} regenerations need about {steps} steps, over caps.horizon {}",
                cfg.caps.horizon
            )));
        }
        let sample = chain.sample_coupled(0, steps, sub_seed(cfg.seed, "aux/sample", 0))?;
        let empirical = chain.empirical(&sample, trials)?;
        let mut max_tv = 0.0_f64;
        for (a, counts) in empirical.counts.iter().enumerate() {
            let total: usize = counts.iter().sum();
            if total == 0 {
                continue;
            }
            let mut tv = 0.0;
            for (b, &c) in counts.iter().enumerate() {
                let exact = to_f64(&chain.pair_kernel().entry(a, b));
                tv += (c as f64 / total as f64 - exact).abs();
            }
            max_tv = max_tv.max(tv / 2.0);
        }
        sampling_ok = max_tv < 0.02;
        results.insert(
            "sampling".into(),
            json!({
                "regenerations": empirical.regenerations,
                "steps": steps,
                "max_row_total_variation": max_tv,
                "within_tolerance": sampling_ok,
            }),
        );
        csv = Some(sample.to_csv());
    }
    let all = series_ok && sampling_ok;
    Ok(finish(report, cfg, file_hash, Value::Object(results), csv, all))
}

/// Symmetry suite for the segment family on an abelian Cayley graph.
///
/// Params: `factors` (cyclic factor sizes, e.g. `4,6`), `s` (the segment
/// generator, comma-separated integers), `gens` (optional semicolon list of
/// edge generators, the signed standard basis by default). Window length
/// and mode come from `walk`.
pub fn cmd_abelian(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let report = report_skeleton("abelian", cfg);
    let parse_vec = |key: &str, text: &str| -> CliResult<Vec<i64>> {
        text.split(',')
            .map(|t| {
                t.trim().parse::<i64>().map_err(|_| {
                    CliError::Config(format!("field `params.{key}`: `{t}` is not an integer"))
                })
            })
            .collect()
    };
    let factors: Vec<usize> = cfg
        .params
        .get("factors")
        .ok_or_else(|| CliError::Config("field `params.factors` is required".into()))
        .and_then(|t| parse_vec("factors", t))?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    let s = cfg
        .params
        .get("s")
        .ok_or_else(|| CliError::Config("field `params.s` is required".into()))
        .and_then(|t| parse_vec("s", t))?;
    let gens: Vec<Vec<i64>> = match cfg.params.get("gens") {
        Some(text) => text
            .split(';')
            .map(|part| parse_vec("gens", part))
            .collect::<CliResult<_>>()?,
        None => (0..factors.len())
            .flat_map(|i| {
                [1i64, -1].map(|sign| {
                    (0..factors.len())
                        .map(|j| if i == j { sign } else { 0 })
                        .collect()
                })
            })
            .collect(),
    };
    let spec = CayleySpec::new(factors, &gens)?;
    let g = cayley_graph(&spec)?;
    let family = alpha_family(&spec, &s, cfg.walk.k)?;
    let mode = cfg.walk.mode_enum()?;
    let induced = induced_alpha_kernel(&g, &family, mode, cfg.caps.states)?;
    let suite = alpha_symmetry_suite(&induced, &family)?;
    let pass = suite.ok();
    let results = json!({
        "graph": g.name(),
        "group_order": spec.order(),
        "segments": family.len(),
        "mode": cfg.walk.mode,
        "k": cfg.walk.k,
        "doubly_stochastic": suite.doubly_stochastic,
        "reversal_symmetric": suite.reversal_symmetric,
        "reversal_entry": suite.reversal_entry.as_ref().map(format_rat),
        "translation_invariant": suite.translation_invariant,
        "negation_invariant": suite.negation_invariant,
        "failures": suite.failures,
    });
    Ok(finish(report, cfg, None, results, None, pass))
}

/// Tree cover of a regular graph with the coupled projected walk.
///
/// Params: `depth` (pre-expanded tree depth), `steps` (walk length, bounded
/// by `caps.horizon`), `margin` (certification margin in levels), `root`
/// (base vertex), `fit-lo`/`fit-hi` (window of the tail fit). The CSV lists
/// one regeneration record per row.
pub fn cmd_cover(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let (g, _, file_hash) = loaded(cfg)?;
    let report = report_skeleton("cover", cfg);
    let depth = cfg.param_usize("depth", 2)?;
    let steps = cfg.param_usize("steps", 500_000)?;
    let margin = cfg.param_usize("margin", 20)?;
    let root = cfg.param_usize("root", 0)?;
    if steps > cfg.caps.horizon {
        return Err(CliError::Resource(format!(
            "steps {steps} exceeds caps.horizon {}",
            cfg.caps.horizon
        )));
    }
    let mut cover = build_cover(&g, root, depth)?;
    let walk = coupled_walks(&mut cover, steps, sub_seed(cfg.seed, "cover/walk", 0), margin);
    let (succ, total) = walk.success_counts();
    let (on_ray, _) = walk.ray_membership_counts();
    let level_incs = walk.level_increments();
    let mean_level = if level_incs.is_empty() {
        f64::NAN
    } else {
        level_incs.iter().sum::<usize>() as f64 / level_incs.len() as f64
    };
    let regen_incs = walk.regeneration_increments();
    let fit_lo = cfg.param_usize("fit-lo", 1)?;
    let fit_hi = cfg.param_usize("fit-hi", 15)?;
    let tail = match tau_tail(&regen_incs, fit_lo, fit_hi) {
        Ok(t) => json!({
            "samples": t.samples,
            "mean": t.mean,
            "slope": t.slope,
            "r_squared": t.r_squared,
            "lag1_autocorrelation": t.lag1,
            "lag1_sigma": t.lag1_sigma,
        }),
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    let results = json!({
        "graph": g.name(),
        "degree": cover.degree(),
        "tree": {
            "depth": depth,
            "prebuilt_nodes": cover.node_count(),
            "expanded_nodes": walk.expanded_nodes(),
        },
        "walk": {
            "steps": steps,
            "margin": margin,
            "final_level": walk.final_level(),
            "regenerations": walk.regenerations().len(),
            "certified_regenerations": walk.certified_regenerations().len(),
        },
        "success": { "count": succ, "of": total,
                     "frequency": succ as f64 / total.max(1) as f64 },
        "ray_membership": { "count": on_ray, "of": total,
                            "frequency": on_ray as f64 / total.max(1) as f64 },
        "level_increments": { "count": level_incs.len(), "mean": mean_level },
        "tau_tail": tail,
    });
    Ok(finish(
        report,
        cfg,
        file_hash,
        results,
        Some(walk.regeneration_csv()),
        true,
    ))
}

/// Sink-free source-free orientation with the line-graph distance check.
///
/// Params: `algorithm` (`flow` or `absorption`). Infeasible inputs produce
/// a failing report carrying the degree certificate instead of an error.
/// The CSV artifact lists one `edge tail head` orientation line per edge.
pub fn cmd_orient(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let (g, _, file_hash) = loaded(cfg)?;
    let report = report_skeleton("orient", cfg);
    let algorithm = cfg
        .params
        .get("algorithm")
        .map(String::as_str)
        .unwrap_or("flow");
    let solved = match algorithm {
        "flow" => sink_free_source_free_orientation(&g),
        "absorption" => orientation_by_absorption(&g),
        other => {
            return Err(CliError::Config(format!(
                "field `params.algorithm`: expected `flow` or `absorption`, got `{other}`"
            )))
        }
    };
    let orientation = match solved {
        Ok(o) => o,
        Err(nbwalk::Error::OrientationInfeasible { vertex, degree }) => {
            let results = json!({
                "graph": g.name(),
                "algorithm": algorithm,
                "feasible": false,
                "certificate": {
                    "vertex": vertex,
                    "degree": degree,
                    "reason": "a vertex of degree below two cannot head one edge and tail \
                               another",
                },
            });
            return Ok(finish(report, cfg, file_hash, results, None, false));
        }
        Err(e) => return Err(e.into()),
    };
    let verified = verify_orientation(&g, &orientation);
    let line = line_graph(&g);
    let images: Vec<usize> = (0..g.edge_count())
        .map(|e| orientation.dart(e).head)
        .collect();
    let map = VertexMap::new(line, g.clone(), images)?;
    let rough = rough_map_check(&map, 2, RoughMode::Isometry)?;
    let pass = verified && rough.ok();
    let results = json!({
        "graph": g.name(),
        "algorithm": algorithm,
        "feasible": true,
        "verified": verified,
        "line_graph_head_map": {
            "k": 2,
            "ok": rough.ok(),
            "violations": rough.violations.len(),
        },
    });
    Ok(finish(
        report,
        cfg,
        file_hash,
        results,
        Some(orientation.to_lines()),
        pass,
    ))
}

/// Structural condition survey: shortest radii at which balls carry cycles,
/// the two-path bound, and the cycle-length refinements for the configured
/// window length.
///
/// Params: `max-radius` (search cap). The survey is informational, so it
/// always exits zero on valid input.
pub fn cmd_conditions(cfg: &ExperimentConfig) -> CliResult<Outcome> {
    let (g, _, file_hash) = loaded(cfg)?;
    let report = report_skeleton("conditions", cfg);
    let k = cfg.walk.k;
    let max_r = cfg.param_usize("max-radius", 6)?;
    let two_paths = g.two_path_decomposition();
    let max_two_path = two_paths.iter().map(|p| p.len()).max().unwrap_or(0);
    let mut conditions = Vec::new();
    let mut survey = |name: &str, build: &dyn Fn(usize) -> StructuralCondition| {
        let mut minimal = None;
        let mut skipped_everywhere = false;
        for r in 1..=max_r {
            match g.check_structural_condition(build(r)) {
                v if v.holds() => {
                    minimal = Some(r);
                    break;
                }
                nbwalk::graph::ConditionVerdict::Indeterminate { .. } => {
                    skipped_everywhere = true;
                }
                _ => {}
            }
        }
        conditions.push(json!({
            "condition": name,
            "minimal_radius": minimal,
            "indeterminate": minimal.is_none() && skipped_everywhere,
        }));
    };
    survey("balls-contain-cycle", &|r| StructuralCondition::BallsContainCycle { r });
    survey("balls-contain-edge-cycle", &|r| {
        StructuralCondition::BallsContainEdgeCycle { r, k }
    });
    survey("balls-contain-vertex-cycle", &|r| {
        StructuralCondition::BallsContainVertexCycle { r, k }
    });
    let results = json!({
        "graph": g.name(),
        "k": k,
        "max_two_path_length": max_two_path,
        "min_cycle_radius": g.min_cycle_radius(max_r),
        "girth": g.girth(),
        "conditions": conditions,
    });
    Ok(finish(report, cfg, file_hash, results, None, true))
}

/// Merges finished reports; see [`crate::report::merge_reports`].
pub fn cmd_report(inputs: &[&Path]) -> CliResult<Outcome> {
    let (report, plot) = merge_reports(inputs)?;
    Ok(Outcome {
        report,
        csv: Some(plot),
        all_pass: true,
    })
}
