//! Run configuration files and target-pattern ingestion.
//!
//! Configs are TOML with five tables: `model`, `stepper`, `ensemble`,
//! `analysis`, `output`. Relative paths resolve against the config file's
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{strided_times, BoxSampler, EnsembleConfig, InitialData, SnapshotPolicy};
use crate::error::{Error, Result};
use crate::graph::{ComplementConvention, Family, Graph};
use crate::integrator::{Scheme, StepperConfig, DEFAULT_DT};
use crate::kernels::CommunicationKernel;
use crate::model::{ModelParams, DEFAULT_BETA_MARGIN};

const PI30: &str = include_str!("../patterns/pi30.csv");

/// Builtin target patterns by name.
pub fn builtin_pattern(name: &str) -> Option<(usize, usize, Vec<f64>)> {
    match name {
        "pi30" => parse_targets(PI30).ok(),
        _ => None,
    }
}

/// Parses an `N x d` numeric CSV without header. `#` starts a comment.
pub fn parse_targets(text: &str) -> Result<(usize, usize, Vec<f64>)> {
    let mut dim = None;
    let mut rows = 0;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        match dim {
            None => dim = Some(cells.len()),
            Some(d) if d != cells.len() => {
                return Err(Error::Dimension(format!(
                    "targets line {}: {} columns, expected {d}",
                    lineno + 1,
                    cells.len()
                )))
            }
            Some(_) => {}
        }
        for cell in cells {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Parse(format!("targets line {}: non-numeric cell `{cell}`", lineno + 1)))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("targets line {}: non-finite cell `{cell}`", lineno + 1)));
            }
            values.push(v);
        }
        rows += 1;
    }
    let dim = dim.ok_or_else(|| Error::Parse("targets file is empty".into()))?;
    Ok((rows, dim, values))
}

/// Loads targets from a builtin name or a CSV path and checks the shape.
pub fn load_targets(spec: &str, base: &Path, n_agents: usize, dim: usize) -> Result<Vec<f64>> {
    let (rows, cols, values) = match builtin_pattern(spec) {
        Some(t) => t,
        None => parse_targets(&fs::read_to_string(resolve(base, spec))?)?,
    };
    if rows != n_agents || cols != dim {
        return Err(Error::Dimension(format!("targets `{spec}` are {rows} x {cols}, model is {n_agents} x {dim}")));
    }
    Ok(values)
}

/// A graph family name (`G0`..`G4`) or an edge-list path.
pub fn load_graph(spec: &str, base: &Path, n_agents: usize) -> Result<Graph> {
    match spec.parse::<Family>() {
        Ok(family) => Graph::family(family, n_agents),
        Err(_) => {
            let path = resolve(base, spec);
            let file = fs::File::open(&path)
                .map_err(|e| Error::Parse(format!("cannot open edge list {}: {e}", path.display())))?;
            Graph::read_edge_list(std::io::BufReader::new(file))
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub stepper: StepperSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n_agents: usize,
    pub dim: usize,
    pub coupling: f64,
    pub control: f64,
    pub sigma: f64,
    pub psi: CommunicationKernel,
    pub phi: CommunicationKernel,
    pub graph_psi: String,
    pub graph_phi: String,
    pub graph_b: String,
    pub targets: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepperSection {
    pub dt: f64,
    pub t_end: f64,
    pub sample_stride: Option<f64>,
    pub sample_times: Option<Vec<f64>>,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for StepperSection {
    fn default() -> Self {
        StepperSection {
            dt: DEFAULT_DT,
            t_end: 35.0,
            sample_stride: None,
            sample_times: None,
            seed: 0,
            scheme: Scheme::ImprovedEm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub realizations: usize,
    pub position_half_width: f64,
    pub velocity_half_width: f64,
    pub center_positions: bool,
    pub center_velocities: bool,
    pub same_initial: bool,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            realizations: 100,
            position_half_width: 212.125,
            velocity_half_width: 25.0,
            center_positions: true,
            center_velocities: true,
            same_initial: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub convention: ComplementConvention,
    pub beta: Option<f64>,
    pub beta_margin: f64,
    /// Flocking tolerance on the final `max E|v^i - v^j|^2`, relative to its initial value.
    pub flocking_tolerance: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            convention: ComplementConvention::WithDiagonal,
            beta: None,
            beta_margin: DEFAULT_BETA_MARGIN,
            flocking_tolerance: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub snapshot_times: Vec<f64>,
    pub all_snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), snapshot_times: Vec::new(), all_snapshots: false }
    }
}

/// A config with every file loaded and every structure built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: RunConfig,
    pub params: ModelParams,
    pub stepper: StepperConfig,
    pub ensemble: EnsembleConfig,
    pub convention: ComplementConvention,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
        let cfg = RunConfig::parse(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn resolve(&self, base: &Path) -> Result<Experiment> {
        let m = &self.model;
        let params = ModelParams {
            n_agents: m.n_agents,
            dim: m.dim,
            coupling: m.coupling,
            control: m.control,
            sigma: m.sigma,
            g_psi: load_graph(&m.graph_psi, base, m.n_agents)?,
            g_phi: load_graph(&m.graph_phi, base, m.n_agents)?,
            g_b: load_graph(&m.graph_b, base, m.n_agents)?,
            psi: m.psi.clone(),
            phi: m.phi.clone(),
            targets: load_targets(&m.targets, base, m.n_agents, m.dim)?,
        };
        params.validate_relaxed()?;
        let s = &self.stepper;
        let stepper = StepperConfig { dt: s.dt, seed: s.seed, scheme: s.scheme };
        stepper.validate()?;
        if !(s.t_end >= 0.0) {
            return Err(Error::InvalidParams("t_end must be nonnegative".into()));
        }
        let sample_times = match (&s.sample_times, s.sample_stride) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParams("set either sample_times or sample_stride, not both".into()))
            }
            (Some(times), None) => times.clone(),
            (None, Some(stride)) if stride > 0.0 => strided_times(0.0, s.t_end, stride),
            (None, Some(stride)) => {
                return Err(Error::InvalidParams(format!("sample_stride must be positive, got {stride}")))
            }
            (None, None) => strided_times(0.0, s.t_end, s.dt.max(s.t_end / 200.0)),
        };
        let e = &self.ensemble;
        let ensemble = EnsembleConfig {
            n_realizations: e.realizations,
            initial: InitialData::Boxes {
                sampler: BoxSampler {
                    position_half_width: e.position_half_width,
                    velocity_half_width: e.velocity_half_width,
                    center_positions: e.center_positions,
                    center_velocities: e.center_velocities,
                },
                same_initial: e.same_initial,
            },
            seed: s.seed,
            t_end: s.t_end,
            sample_times,
            snapshot_times: self.output.snapshot_times.clone(),
            snapshots: if self.output.all_snapshots { SnapshotPolicy::All } else { SnapshotPolicy::FirstRealization },
        };
        Ok(Experiment {
            config: self.clone(),
            params,
            stepper,
            ensemble,
            convention: self.analysis.convention,
            output_dir: resolve(base, &self.output.dir),
        })
    }
}

/// The desk-scale pi-pattern configuration used throughout the docs.
pub fn pi_config() -> RunConfig {
    RunConfig {
        model: ModelSection {
            n_agents: 30,
            dim: 2,
            coupling: 5.0,
            control: 7.0,
            sigma: 1e-3,
            psi: CommunicationKernel::power_shift(1.0, 0.25, 0.3).expect("valid kernel"),
            phi: CommunicationKernel::power_shift(1.0, 0.25, 0.1).expect("valid kernel"),
            graph_psi: "G3".into(),
            graph_phi: "G1".into(),
            graph_b: "G0".into(),
            targets: "pi30".into(),
        },
        stepper: StepperSection { sample_stride: Some(0.25), seed: 20_200_101, ..Default::default() },
        ensemble: EnsembleSection::default(),
        analysis: AnalysisSection::default(),
        output: OutputSection { snapshot_times: vec![0.0, 2.15, 5.175, 15.525, 24.45, 34.975], ..Default::default() },
    }
}
