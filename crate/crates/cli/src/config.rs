//! Run configuration: the versioned JSON schema, the command-line overlay,
//! and the graph ingestion shared by every subcommand.
//!
//! A run is described by an [`ExperimentConfig`]. It can arrive as a JSON
//! file (schema `nbwalk-config/1`), as command-line flags, or both; flags
//! win over file fields so a stored configuration can be re-run with one
//! knob turned. Parse and validation failures carry the offending field or
//! the line and column reported by the JSON parser.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use nbwalk::graph::{parse_graph, Graph};
use nbwalk::walks::WalkMode;
use serde::{Deserialize, Serialize};

/// Schema tag every configuration file must carry.
pub const CONFIG_SCHEMA: &str = "nbwalk-config/1";

/// Failures the front-end distinguishes in its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration, malformed inputs.
    Config(String),
    /// A state-space, trajectory, or horizon cap was exceeded.
    Resource(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Resource(m) => write!(f, "resource cap exceeded: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Maps library failures onto the two error exit classes. Cap overruns keep
/// their own exit code so sweep drivers can tell "too big" from "wrong".
impl From<nbwalk::Error> for CliError {
    fn from(e: nbwalk::Error) -> Self {
        match e {
            nbwalk::Error::TrajectoryCap { .. } => CliError::Resource(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Where the graph comes from: an edge-list file or a named generator.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GraphSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
}

/// Which walk a suite runs, in the vocabulary of the library kernels.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct WalkSpec {
    /// `srw`, `nbrw`, or `pbrw`.
    pub kind: String,
    /// Window length for path-space walks.
    pub k: usize,
    /// `edge` or `vertex` window discipline.
    pub mode: String,
    /// Backtrack probability for `pbrw`, as an exact rational literal.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<String>,
}

impl Default for WalkSpec {
    fn default() -> Self {
        WalkSpec {
            kind: "nbrw".into(),
            k: 1,
            mode: "edge".into(),
            p: None,
        }
    }
}

impl WalkSpec {
    pub fn mode_enum(&self) -> CliResult<WalkMode> {
        match self.mode.as_str() {
            "edge" => Ok(WalkMode::Edge),
            "vertex" => Ok(WalkMode::Vertex),
            other => Err(CliError::Config(format!(
                "walk.mode must be `edge` or `vertex`, got `{other}`"
            ))),
        }
    }
}

/// Hard limits protecting exact enumeration and sampling loops.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Largest state space any exact construction may enumerate.
    pub states: usize,
    /// Largest number of trajectories a brute-force oracle may walk.
    pub trajectory: usize,
    /// Longest single sampled trajectory.
    pub horizon: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            states: 2_000_000,
            trajectory: 5_000_000,
            horizon: 1_000_000,
        }
    }
}

/// Output destinations. Empty means stdout for the primary artifact.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// One run of one subcommand, fully determined.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    #[serde(default)]
    pub graph: GraphSource,
    #[serde(default)]
    pub walk: WalkSpec,
    /// Suite names for `identities`; empty selects the full battery.
    #[serde(default)]
    pub suites: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub out: OutPaths,
    /// Free-form per-subcommand knobs (sizes, margins, chain lists).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema: CONFIG_SCHEMA.into(),
            graph: GraphSource::default(),
            walk: WalkSpec::default(),
            suites: Vec::new(),
            seed: 0,
            caps: Caps::default(),
            out: OutPaths::default(),
            params: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a configuration file.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Field-level checks that the type system cannot express.
    pub fn validate(&self) -> CliResult<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(CliError::Config(format!(
                "field `schema`: expected `{CONFIG_SCHEMA}`, got `{}`",
                self.schema
            )));
        }
        if let Some(f) = &self.graph.file {
            if !f.exists() {
                return Err(CliError::Config(format!(
                    "field `graph.file`: {} does not exist",
                    f.display()
                )));
            }
        }
        if self.graph.file.is_some() && self.graph.generator.is_some() {
            return Err(CliError::Config(
                "field `graph`: give either `file` or `generator`, not both".into(),
            ));
        }
        for (name, value) in [
            ("caps.states", self.caps.states),
            ("caps.trajectory", self.caps.trajectory),
            ("caps.horizon", self.caps.horizon),
        ] {
            if value == 0 {
                return Err(CliError::Config(format!(
                    "field `{name}`: must be positive"
                )));
            }
        }
        match self.walk.kind.as_str() {
            "srw" | "nbrw" | "pbrw" => {}
            other => {
                return Err(CliError::Config(format!(
                    "field `walk.kind`: expected srw, nbrw, or pbrw, got `{other}`"
                )))
            }
        }
        self.walk.mode_enum()?;
        Ok(())
    }

    /// Integer knob from `params` with a default.
    pub fn param_usize(&self, key: &str, default: usize) -> CliResult<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::Config(format!("field `params.{key}`: `{v}` is not an integer"))
            }),
        }
    }

    /// Comma-separated integer list from `params` with a default.
    pub fn param_sizes(&self, key: &str, default: &[usize]) -> CliResult<Vec<usize>> {
        match self.params.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|t| {
                    t.trim().parse().map_err(|_| {
                        CliError::Config(format!(
                            "field `params.{key}`: `{t}` is not an integer"
                        ))
                    })
                })
                .collect(),
        }
    }
}

/// The graph a configuration names, together with the start vertex boxed
/// generators designate.
pub struct LoadedGraph {
    pub graph: Graph,
    pub start: Option<usize>,
    /// FNV-1a fingerprint of the source file, when one was read.
    pub file_hash: Option<u64>,
}

/// Builds the configured graph.
///
/// Generator strings are `name` or `name:args`. Sides of product graphs are
/// separated by `x`. The vocabulary:
///
/// | spec                | graph                                              |
/// |---------------------|----------------------------------------------------|
/// | `complete:N`        | complete graph on N vertices                       |
/// | `cycle:N`           | N-cycle                                            |
/// | `bowtie`            | two triangles sharing a vertex                     |
/// | `chorded:N`         | even cycle plus all main diagonals (3-regular)     |
/// | `grid:AxB[xC]`      | box with the outer shell marked as boundary        |
/// | `box:AxB[xC]`       | same graph, start at the center vertex             |
/// | `torus:AxB[xC]`     | product of cycles, every side at least 3           |
/// | `tree:D:H`          | D-regular tree truncated at depth H                |
pub fn build_graph(source: &GraphSource) -> CliResult<LoadedGraph> {
    if let Some(path) = &source.file {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let graph = parse_graph(&text)?;
        return Ok(LoadedGraph {
            graph,
            start: None,
            file_hash: Some(crate::fnv1a64(text.as_bytes())),
        });
    }
    let spec = source
        .generator
        .as_deref()
        .ok_or_else(|| CliError::Config("no graph: give `--graph` or `--generator`".into()))?;
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n, a),
        None => (spec, ""),
    };
    let dims = || -> CliResult<Vec<usize>> {
        args.split(['x', ':'])
            .map(|t| {
                t.parse::<usize>().map_err(|_| {
                    CliError::Config(format!("generator `{spec}`: `{t}` is not a size"))
                })
            })
            .collect()
    };
    let one = |what: &str| -> CliResult<usize> {
        args.parse::<usize>()
            .map_err(|_| CliError::Config(format!("generator `{spec}`: needs {what}")))
    };
    let (graph, start) = match name {
        "complete" => (Graph::complete(one("a vertex count")?), None),
        "cycle" => (Graph::cycle(one("a length")?), None),
        "bowtie" => (Graph::bowtie(), None),
        "chorded" => {
            let n = one("an even length")?;
            if n < 4 || n % 2 != 0 {
                return Err(CliError::Config(format!(
                    "generator `{spec}`: the chorded cycle needs an even length >= 4"
                )));
            }
            let mut g = Graph::cycle(n).with_name(format!("chorded({n})"));
            for i in 0..n / 2 {
                g.add_edge(i, i + n / 2)?;
            }
            (g, None)
        }
        "grid" => (Graph::grid(&dims()?), None),
        "box" => {
            let d = dims()?;
            let g = Graph::grid(&d);
            (g, Some(center_index(&d)))
        }
        "torus" => {
            let d = dims()?;
            if d.iter().any(|&s| s < 3) {
                return Err(CliError::Config(format!(
                    "generator `{spec}`: every torus side must be at least 3"
                )));
            }
            (Graph::torus(&d), None)
        }
        "tree" => {
            let d = dims()?;
            if d.len() != 2 || d[0] < 2 {
                return Err(CliError::Config(format!(
                    "generator `{spec}`: expected tree:D:H with D >= 2"
                )));
            }
            (Graph::regular_tree(d[0], d[1]), None)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown generator `{other}`; see `nbwalk --help` for the vocabulary"
            )))
        }
    };
    Ok(LoadedGraph {
        graph,
        start,
        file_hash: None,
    })
}

/// Index of the middle vertex of a box, little-endian in the coordinates.
pub fn center_index(dims: &[usize]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for &d in dims {
        idx += (d / 2) * stride;
        stride *= d;
    }
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_of_a_box_has_middle_coordinates() {
        assert_eq!(center_index(&[5]), 2);
        assert_eq!(center_index(&[4, 4]), 2 + 2 * 4);
        assert_eq!(center_index(&[3, 3, 3]), 1 + 3 + 9);
        let g = Graph::grid(&[5, 5]);
        assert!(!g.is_boundary(center_index(&[5, 5])));
        assert_eq!(g.degree(center_index(&[5, 5])), 4);
    }

    #[test]
    fn generator_vocabulary_builds_the_advertised_graphs() {
        let k4 = build_graph(&GraphSource {
            generator: Some("complete:4".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(k4.graph.n(), 4);
        assert_eq!(k4.graph.regular_degree(), Some(3));

        let chorded = build_graph(&GraphSource {
            generator: Some("chorded:6".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(chorded.graph.n(), 6);
        assert_eq!(chorded.graph.regular_degree(), Some(3));
        assert!(chorded.graph.has_edge(0, 3));
        assert!(chorded.graph.has_edge(2, 5));

        let boxed = build_graph(&GraphSource {
            generator: Some("box:8x8".into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(boxed.graph.n(), 64);
        assert_eq!(boxed.start, Some(center_index(&[8, 8])));

        for bad in ["nosuch", "complete:x", "torus:2x5", "chorded:5", "tree:1:3"] {
            assert!(build_graph(&GraphSource {
                generator: Some(bad.into()),
                ..Default::default()
            })
            .is_err());
        }
    }

    #[test]
    fn config_validation_names_the_offending_field() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();

        cfg.schema = "nbwalk-config/2".into();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("schema"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.caps.states = 0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("caps.states"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.walk.kind = "levy".into();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("walk.kind"), "{err}");

        let mut cfg = ExperimentConfig::default();
        cfg.graph.file = Some(PathBuf::from("/definitely/not/here.graph"));
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("graph.file"), "{err}");
    }

    #[test]
    fn file_parse_errors_carry_position_and_field_diagnostics() {
        let dir = std::env::temp_dir().join("nbwalk-config-tests");
        fs::create_dir_all(&dir).unwrap();

        let broken = dir.join("broken.json");
        fs::write(&broken, "{\n  \"schema\": \"nbwalk-config/1\",\n  ]\n").unwrap();
        let err = ExperimentConfig::from_file(&broken).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");

        let unknown = dir.join("unknown.json");
        fs::write(
            &unknown,
            "{\"schema\": \"nbwalk-config/1\", \"sede\": 3}",
        )
        .unwrap();
        let err = ExperimentConfig::from_file(&unknown)
            .unwrap_err()
            .to_string();
        assert!(err.contains("sede"), "{err}");

        let good = dir.join("good.json");
        fs::write(
            &good,
            "{\"schema\": \"nbwalk-config/1\", \"seed\": 9, \
             \"graph\": {\"generator\": \"cycle:5\"}}",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_file(&good).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.graph.generator.as_deref(), Some("cycle:5"));
    }
}
