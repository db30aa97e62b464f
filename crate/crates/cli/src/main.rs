//! Command-line front-end. Flag parsing and file writing only; behavior
//! lives in the `nbwalk_cli` library so tests can call it in process.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nbwalk_cli::config::{CliError, CliResult, ExperimentConfig};
use nbwalk_cli::run::{
    cmd_abelian, cmd_aux, cmd_capacity, cmd_conditions, cmd_cover, cmd_identities, cmd_orient,
    cmd_report, cmd_walk, Outcome,
};

/// Exhaustive verification suites and box experiments for non-backtracking
/// and window-constrained random walks.
#[derive(Parser)]
#[command(name = "nbwalk", version, max_term_width = 100)]
struct Cli {
    /// JSON configuration file (schema `nbwalk-config/1`); flags override
    /// its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed; every random component derives its own stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Write the CSV artifact here, for subcommands that emit one.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    /// Which artifact goes to stdout when it has no file destination.
    #[arg(long, global = true, value_parser = ["json", "csv"], default_value = "json")]
    format: String,

    /// Attach wall-clock timings to the report. Timed reports are not
    /// byte-reproducible.
    #[arg(long, global = true)]
    timing: bool,

    /// Cap on exactly enumerated state spaces.
    #[arg(long, global = true)]
    cap_states: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct GraphArgs {
    /// Read the graph from an edge-list file.
    #[arg(long)]
    graph: Option<PathBuf>,

    /// Generate the graph: complete:N, cycle:N, bowtie, chorded:N,
    /// grid:AxB, box:AxB[xC], torus:AxB[xC], tree:D:H.
    #[arg(long)]
    generator: Option<String>,
}

#[derive(Args)]
struct WalkArgs {
    /// Window length of the path-constrained walk.
    #[arg(long)]
    k: Option<usize>,

    /// Window discipline: edge or vertex.
    #[arg(long, value_parser = ["edge", "vertex"])]
    mode: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact identity battery: stationarity, reversal symmetries, visit
    /// multisets, vertex-window counterexample search.
    Identities {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        walk: WalkArgs,
        /// Power to which kernels are raised in the symmetry checks.
        #[arg(long)]
        n: Option<usize>,
        /// Path length for the visit-multiset check.
        #[arg(long)]
        s: Option<usize>,
        /// Suites to run (repeatable); the default battery depends on the
        /// mode.
        #[arg(long = "suite")]
        suites: Vec<String>,
    },
    /// Return-counting walk trials from the center of a boxed graph.
    Walk {
        #[command(flatten)]
        graph: GraphArgs,
        /// srw or nbrw.
        #[arg(long)]
        kind: Option<String>,
        /// Per-trial step horizon.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        /// Start vertex when the generator does not designate one.
        #[arg(long)]
        start: Option<usize>,
    },
    /// Capacity exhaustion sweeps over nested boxes.
    Capacity {
        /// box or subdivision.
        #[arg(long)]
        sweep: Option<String>,
        /// Box dimension, 2 or 3.
        #[arg(long)]
        dim: Option<usize>,
        /// Comma-separated side lengths.
        #[arg(long)]
        sizes: Option<String>,
        /// Comma-separated chains: srw, nbrw, w, nw-bound.
        #[arg(long)]
        chains: Option<String>,
        /// Backtrack probability of the pair chain, as a rational.
        #[arg(long)]
        p: Option<String>,
    },
    /// Reversal-pair auxiliary chain: exact build, truncated series,
    /// optional Monte Carlo comparison.
    Aux {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        walk: WalkArgs,
        /// nbrw or pbrw.
        #[arg(long)]
        kind: Option<String>,
        /// Backtrack probability (pbrw input, also the chain's regeneration
        /// rate).
        #[arg(long)]
        p: Option<String>,
        /// Regenerations to sample; 0 skips sampling.
        #[arg(long)]
        trials: Option<usize>,
        /// Terms of the truncated series check.
        #[arg(long)]
        series: Option<usize>,
    },
    /// Segment-family symmetry suite on an abelian Cayley graph.
    Abelian {
        /// Cyclic factor sizes, e.g. 4,6.
        #[arg(long)]
        factors: String,
        /// Segment generator, e.g. 1,0.
        #[arg(long)]
        s: String,
        /// Edge generators, semicolon-separated (standard basis if absent).
        #[arg(long)]
        gens: Option<String>,
        #[command(flatten)]
        walk: WalkArgs,
    },
    /// Tree cover of a regular graph with the coupled projected walk.
    Cover {
        #[command(flatten)]
        graph: GraphArgs,
        /// Steps of the tree walk.
        #[arg(long)]
        steps: Option<usize>,
        /// Certification margin in levels.
        #[arg(long)]
        margin: Option<usize>,
        /// Pre-expanded tree depth.
        #[arg(long)]
        depth: Option<usize>,
        /// Base vertex of the cover.
        #[arg(long)]
        root: Option<usize>,
    },
    /// Sink-free source-free orientation with the line-graph distance
    /// check.
    Orient {
        #[command(flatten)]
        graph: GraphArgs,
        /// flow or absorption.
        #[arg(long)]
        algorithm: Option<String>,
    },
    /// Structural condition survey: cycle radii, two-path bounds.
    Conditions {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        walk: WalkArgs,
        /// Largest ball radius to search.
        #[arg(long)]
        max_radius: Option<usize>,
    },
    /// Merge finished JSON reports into one document plus plot-data CSV.
    Report {
        /// Reports to merge.
        inputs: Vec<PathBuf>,
    },
}

fn apply_graph(cfg: &mut ExperimentConfig, args: &GraphArgs) {
    if args.graph.is_some() {
        cfg.graph.file = args.graph.clone();
        cfg.graph.generator = None;
    }
    if args.generator.is_some() {
        cfg.graph.generator = args.generator.clone();
        if args.graph.is_none() {
            cfg.graph.file = None;
        }
    }
}

fn apply_walk(cfg: &mut ExperimentConfig, args: &WalkArgs) {
    if let Some(k) = args.k {
        cfg.walk.k = k;
    }
    if let Some(mode) = &args.mode {
        cfg.walk.mode = mode.clone();
    }
}

fn set_param(cfg: &mut ExperimentConfig, key: &str, value: Option<impl ToString>) {
    if let Some(v) = value {
        cfg.params.insert(key.into(), v.to_string());
    }
}

fn drive(cli: &Cli) -> CliResult<(Outcome, ExperimentConfig)> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(cap) = cli.cap_states {
        cfg.caps.states = cap;
    }
    let outcome = match &cli.cmd {
        Cmd::Identities {
            graph,
            walk,
            n,
            s,
            suites,
        } => {
            apply_graph(&mut cfg, graph);
            apply_walk(&mut cfg, walk);
            set_param(&mut cfg, "n", *n);
            set_param(&mut cfg, "s", *s);
            if !suites.is_empty() {
                cfg.suites = suites.clone();
            }
            cfg.validate()?;
            cmd_identities(&cfg)?
        }
        Cmd::Walk {
            graph,
            kind,
            steps,
            trials,
            start,
        } => {
            apply_graph(&mut cfg, graph);
            if let Some(kind) = kind {
                cfg.walk.kind = kind.clone();
            }
            set_param(&mut cfg, "steps", *steps);
            set_param(&mut cfg, "trials", *trials);
            set_param(&mut cfg, "start", *start);
            cfg.validate()?;
            cmd_walk(&cfg)?
        }
        Cmd::Capacity {
            sweep,
            dim,
            sizes,
            chains,
            p,
        } => {
            set_param(&mut cfg, "sweep", sweep.clone());
            set_param(&mut cfg, "dim", *dim);
            set_param(&mut cfg, "sizes", sizes.clone());
            set_param(&mut cfg, "chains", chains.clone());
            if let Some(p) = p {
                cfg.walk.p = Some(p.clone());
            }
            cfg.validate()?;
            cmd_capacity(&cfg)?
        }
        Cmd::Aux {
            graph,
            walk,
            kind,
            p,
            trials,
            series,
        } => {
            apply_graph(&mut cfg, graph);
            apply_walk(&mut cfg, walk);
            if let Some(kind) = kind {
                cfg.walk.kind = kind.clone();
            }
            if let Some(p) = p {
                cfg.walk.p = Some(p.clone());
            }
            set_param(&mut cfg, "trials", *trials);
            set_param(&mut cfg, "series", *series);
            cfg.validate()?;
            cmd_aux(&cfg)?
        }
        Cmd::Abelian {
            factors,
            s,
            gens,
            walk,
        } => {
            apply_walk(&mut cfg, walk);
            set_param(&mut cfg, "factors", Some(factors.clone()));
            set_param(&mut cfg, "s", Some(s.clone()));
            set_param(&mut cfg, "gens", gens.clone());
            cfg.validate()?;
            cmd_abelian(&cfg)?
        }
        Cmd::Cover {
            graph,
            steps,
            margin,
            depth,
            root,
        } => {
            apply_graph(&mut cfg, graph);
            set_param(&mut cfg, "steps", *steps);
            set_param(&mut cfg, "margin", *margin);
            set_param(&mut cfg, "depth", *depth);
            set_param(&mut cfg, "root", *root);
            cfg.validate()?;
            cmd_cover(&cfg)?
        }
        Cmd::Orient { graph, algorithm } => {
            apply_graph(&mut cfg, graph);
            set_param(&mut cfg, "algorithm", algorithm.clone());
            cfg.validate()?;
            cmd_orient(&cfg)?
        }
        Cmd::Conditions {
            graph,
            walk,
            max_radius,
        } => {
            apply_graph(&mut cfg, graph);
            apply_walk(&mut cfg, walk);
            set_param(&mut cfg, "max-radius", *max_radius);
            cfg.validate()?;
            cmd_conditions(&cfg)?
        }
        Cmd::Report { inputs } => {
            let paths: Vec<&std::path::Path> = inputs.iter().map(PathBuf::as_path).collect();
            cmd_report(&paths)?
        }
    };
    Ok((outcome, cfg))
}

fn emit(cli: &Cli, cfg: &ExperimentConfig, outcome: &Outcome, wall_ms: u64) -> CliResult<()> {
    let mut report = outcome.report.clone();
    if cli.timing {
        report.insert("timing".into(), json!({ "wall_ms": wall_ms }));
    }
    let json_text = serde_json::to_string_pretty(&Value::Object(report))
        .expect("report serializes")
        + "\n";
    let json_path = cli.out.clone().or_else(|| cfg.out.json.clone());
    let csv_path = cli.csv.clone().or_else(|| cfg.out.csv.clone());
    let write = |path: &PathBuf, text: &str| -> CliResult<()> {
        fs::write(path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
    };
    if let Some(path) = &json_path {
        write(path, &json_text)?;
    }
    if let (Some(path), Some(csv)) = (&csv_path, &outcome.csv) {
        write(path, csv)?;
    }
    match cli.format.as_str() {
        "csv" => {
            let csv = outcome.csv.as_deref().ok_or_else(|| {
                CliError::Config("this subcommand produces no CSV artifact".into())
            })?;
            if csv_path.is_none() {
                print!("{csv}");
            }
        }
        _ => {
            if json_path.is_none() {
                print!("{json_text}");
            }
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let started = Instant::now();
    let code = match drive(&cli) {
        Ok((outcome, cfg)) => {
            let wall_ms = started.elapsed().as_millis() as u64;
            match emit(&cli, &cfg, &outcome, wall_ms) {
                Ok(()) => outcome.exit_code(),
                Err(e) => {
                    eprintln!("{e}");
                    2
                }
            }
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Config(_) => 2,
                CliError::Resource(_) => 3,
            }
        }
    };
    std::process::exit(code);
}
