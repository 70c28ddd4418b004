//! Run configuration: a sectioned TOML file whose values command-line flags override.
//!
//! ```toml
//! [space]
//! preset = "sphere:2"        # or: file = "space.toml"
//!
//! [process]
//! name = "bm"
//!
//! [grid]
//! dt = 0.001
//! T = 1.0
//!
//! [ensemble]
//! paths = 1000
//! seed = 7
//! threads = 4
//! input = "paths.csv"        # criterion only: read paths instead of generating
//!
//! [criterion]
//! checkpoints = [0.25, 0.5, 0.75, 1.0]
//! reading = "covariation"    # or "literal"
//! z_max = 4.0
//! abs_tol = 1e-8
//! min_paths = 100
//!
//! [output]
//! dir = "out"
//! ```

use std::path::{Path, PathBuf};

use homogmart::config::{parse_space, ConfigError, SpaceConfig};
use homogmart::homog::QuadraticReading;
use homogmart::stoch::{DriftPolicy, TimeGrid};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default)]
    pub space: SpaceSection,
    #[serde(default)]
    pub process: ProcessSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub criterion: CriterionSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    pub preset: Option<String>,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSection {
    pub name: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dt: Option<f64>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub input: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSection {
    pub checkpoints: Option<Vec<f64>>,
    pub reading: Option<QuadraticReading>,
    pub z_max: Option<f64>,
    pub abs_tol: Option<f64>,
    pub min_paths: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path)?;
        let mut file: RunFile = toml::from_str(&text).map_err(|e| CliError::Config {
            file: path.display().to_string(),
            error: ConfigError::from_toml(&text, &e),
        })?;
        // relative paths in a config file are relative to that file
        let dir = path.parent().unwrap_or(Path::new(""));
        for p in [&mut file.space.file, &mut file.ensemble.input, &mut file.output.dir] {
            if let Some(rel) = p.as_mut().filter(|r| r.is_relative()) {
                *rel = dir.join(&*rel);
            }
        }
        Ok(file)
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Where the space comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSource {
    Preset(String),
    File(PathBuf),
}

impl SpaceSource {
    pub fn resolve(&self) -> Result<SpaceConfig, CliError> {
        match self {
            SpaceSource::Preset(p) => {
                let text = format!("preset = {}", toml::Value::String(p.clone()));
                parse_space(&text).map_err(|e| CliError::Usage(e.message))
            }
            SpaceSource::File(path) => {
                let text = read_text(path)?;
                parse_space(&text).map_err(|error| CliError::Config {
                    file: path.display().to_string(),
                    error,
                })
            }
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub space: SpaceSource,
    pub process: Option<String>,
    pub grid: TimeGrid,
    pub paths: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub input: Option<PathBuf>,
    /// `None` means the default quarter points of whichever grid is used.
    pub checkpoints: Option<Vec<f64>>,
    pub reading: QuadraticReading,
    pub policy: DriftPolicy,
    pub out: Option<PathBuf>,
}

/// Values given on the command line; each one overrides the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub space: Option<String>,
    pub spec: Option<PathBuf>,
    pub process: Option<String>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub input: Option<PathBuf>,
    pub checkpoints: Option<Vec<f64>>,
    pub reading: Option<QuadraticReading>,
    pub z_max: Option<f64>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_PATHS: usize = 1000;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 1.0;

impl RunConfig {
    pub fn build(file: Option<RunFile>, o: Overrides) -> Result<Self, CliError> {
        let f = file.unwrap_or_default();
        let space = match (o.space, o.spec) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give --space or --spec, not both".into())),
            (Some(p), None) => SpaceSource::Preset(p),
            (None, Some(path)) => SpaceSource::File(path),
            (None, None) => match (f.space.preset, f.space.file) {
                (Some(_), Some(_)) => {
                    return Err(CliError::Usage("[space] takes `preset` or `file`, not both".into()))
                }
                (Some(p), None) => SpaceSource::Preset(p),
                (None, Some(path)) => SpaceSource::File(path),
                (None, None) => return Err(CliError::Usage("no space given (use --space sphere:n or --spec FILE)".into())),
            },
        };
        let paths = o.paths.or(f.ensemble.paths).unwrap_or(DEFAULT_PATHS);
        if paths == 0 {
            return Err(CliError::Usage("--paths must be at least 1".into()));
        }
        let dt = o.dt.or(f.grid.dt).unwrap_or(DEFAULT_DT);
        let horizon = o.horizon.or(f.grid.horizon).unwrap_or(DEFAULT_HORIZON);
        let grid = TimeGrid::with_horizon(dt, horizon).map_err(|e| CliError::Usage(e.to_string()))?;
        let checkpoints = o.checkpoints.or(f.criterion.checkpoints);
        let defaults = DriftPolicy::default();
        let policy = DriftPolicy {
            z_max: o.z_max.or(f.criterion.z_max).unwrap_or(defaults.z_max),
            abs_tol: f.criterion.abs_tol.unwrap_or(defaults.abs_tol),
            min_paths: f.criterion.min_paths.unwrap_or(defaults.min_paths),
        };
        if !(policy.z_max > 0.0) || !(policy.abs_tol > 0.0) {
            return Err(CliError::Usage("z_max and abs_tol must be positive".into()));
        }
        let threads = o.threads.or(f.ensemble.threads);
        if threads == Some(0) {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        Ok(Self {
            space,
            process: o.process.or(f.process.name),
            grid,
            paths,
            seed: o.seed.or(f.ensemble.seed).unwrap_or(0),
            threads,
            input: o.input.or(f.ensemble.input),
            checkpoints,
            reading: o.reading.or(f.criterion.reading).unwrap_or_default(),
            policy,
            out: o.out.or(f.output.dir),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunFile {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn flags_override_file() {
        let f = parse("[space]\npreset = \"sphere:3\"\n[ensemble]\npaths = 50\nseed = 3\n[grid]\ndt = 0.01\n");
        let o = Overrides {
            paths: Some(7),
            ..Default::default()
        };
        let c = RunConfig::build(Some(f), o).unwrap();
        assert_eq!(c.paths, 7);
        assert_eq!(c.seed, 3);
        assert_eq!(c.grid.steps, 100);
        assert_eq!(c.space, SpaceSource::Preset("sphere:3".into()));
        assert!(c.checkpoints.is_none());
    }

    #[test]
    fn zero_paths_is_a_usage_error() {
        let o = Overrides {
            space: Some("sphere:2".into()),
            paths: Some(0),
            ..Default::default()
        };
        assert!(matches!(RunConfig::build(None, o), Err(CliError::Usage(_))));
    }

    #[test]
    fn horizon_must_be_whole_steps() {
        let o = Overrides {
            space: Some("sphere:2".into()),
            dt: Some(0.3),
            horizon: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(RunConfig::build(None, o), Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunFile>("[grid]\nsteps = 3\n").is_err());
    }
}
