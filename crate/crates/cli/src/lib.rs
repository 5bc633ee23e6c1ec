//! Subcommand implementations behind the `flocknet` binary.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use flocknet_core::config::{load_graph, Experiment, RunConfig};
use flocknet_core::ensemble::{
    self, budget_check, decay_check, flocking_verdict, initial_ensemble, lyapunov_check, sandwich_check, EnsembleError,
    EnsembleOutput, FlockingVerdict, RealizationFailure,
};
use flocknet_core::model::{check_hypotheses, HypothesisReport};
use flocknet_core::{ComplementConvention, EnsembleSeries, GraphMetrics, RunAnalysis, SwarmState};

pub const ENERGIES_HEADER: &str =
    "t,kinetic,kinetic_se,H,H_se,J,J_se,c0H,c1H,maxpair_v,maxpair_x,budget_lhs,budget_rhs";

/// Overrides given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub convention: Option<ComplementConvention>,
    pub out: Option<PathBuf>,
}

/// Loads a config file, or the built-in pi configuration when `path` is `None`,
/// and resolves it after applying `overrides`.
pub fn load_experiment(path: Option<&Path>, overrides: &Overrides) -> Result<Experiment> {
    let (mut config, base) = match path {
        Some(p) => RunConfig::load(p)?,
        None => (flocknet_core::config::pi_config(), PathBuf::from(".")),
    };
    if let Some(seed) = overrides.seed {
        config.stepper.seed = seed;
    }
    if let Some(conv) = overrides.convention {
        config.analysis.convention = conv;
    }
    let mut exp = config.resolve(&base)?;
    if let Some(out) = &overrides.out {
        exp.output_dir = out.clone();
        exp.config.output.dir = out.display().to_string();
    }
    Ok(exp)
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphInfo {
    pub graph: String,
    #[serde(flatten)]
    pub metrics: GraphMetrics,
    /// `1 / L_G`, when the graph is connected.
    pub connectivity_denominator: Option<u64>,
}

/// Structural report for a family name (`G0`..`G4`, needs `n`) or an
/// edge-list file.
pub fn graph_info(spec: &str, n: Option<usize>, convention: ComplementConvention) -> Result<GraphInfo> {
    let is_family = spec.parse::<flocknet_core::Family>().is_ok();
    let n = match (is_family, n) {
        (true, Some(n)) => n,
        (true, None) => anyhow::bail!("graph family {spec} needs a vertex count (-n)"),
        (false, n) => n.unwrap_or(0),
    };
    let graph = load_graph(spec, Path::new("."), n).with_context(|| format!("loading graph {spec}"))?;
    let metrics = graph.metrics(convention);
    Ok(GraphInfo {
        graph: spec.to_string(),
        connectivity_denominator: metrics.connectivity_constant.map(|c| c.denominator),
        metrics,
    })
}

impl std::fmt::Display for GraphInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let m = &self.metrics;
        writeln!(f, "graph            {}", self.graph)?;
        writeln!(f, "vertices         {}", m.n_vertices)?;
        writeln!(f, "arcs |E|         {}", m.n_arcs)?;
        match m.diameter {
            Some(d) => writeln!(f, "diameter         {d}")?,
            None => writeln!(f, "diameter         undefined (disconnected)")?,
        }
        writeln!(f, "complement |E^c| {} ({})", m.complement_size, m.convention)?;
        match m.connectivity_constant {
            Some(l) => writeln!(f, "L_G              {l}")?,
            None => writeln!(f, "L_G              undefined (disconnected)")?,
        }
        writeln!(f, "max degree       {}", m.max_degree)?;
        writeln!(f, "symmetric        {}", m.symmetric)?;
        write!(f, "connected        {}", m.connected)
    }
}

/// Evaluates every hypothesis of the flocking and pattern-formation estimates
/// on the configured initial ensemble.
pub fn check(exp: &Experiment) -> Result<HypothesisReport> {
    let initial = initial_ensemble(&exp.params, &exp.ensemble)?;
    let a = &exp.config.analysis;
    Ok(check_hypotheses(&exp.params, exp.convention, &initial, a.beta, a.beta_margin))
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckTally {
    pub passed: usize,
    pub total: usize,
}

impl CheckTally {
    fn of(flags: &[bool]) -> Self {
        CheckTally { passed: flags.iter().filter(|&&b| b).count(), total: flags.len() }
    }

    pub fn all(&self) -> bool {
        self.passed == self.total
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdicts {
    pub flocking: FlockingVerdict,
    pub lyapunov_nonincreasing: CheckTally,
    pub sandwich: CheckTally,
    pub decay: CheckTally,
    pub budget: CheckTally,
    /// Final over initial `E|x - v0_ave t - z|^2`.
    pub pattern_error_ratio: f64,
    /// Final over initial `E|v|^2`.
    pub kinetic_ratio: f64,
}

impl Verdicts {
    pub fn of(series: &EnsembleSeries, flocking_tolerance: f64) -> Self {
        let ratio = |f: fn(&ensemble::SeriesPoint) -> f64| match (series.points.first(), series.points.last()) {
            (Some(a), Some(b)) => f(b) / f(a),
            _ => f64::NAN,
        };
        Verdicts {
            flocking: flocking_verdict(series, flocking_tolerance),
            lyapunov_nonincreasing: CheckTally::of(&lyapunov_check(series)),
            sandwich: CheckTally::of(&sandwich_check(series)),
            decay: CheckTally::of(&decay_check(series)),
            budget: CheckTally::of(&budget_check(series)),
            pattern_error_ratio: ratio(|p| p.pattern_error.mean),
            kinetic_ratio: ratio(|p| p.kinetic.mean),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Versions {
    pub flocknet: &'static str,
    pub output_format: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub status: &'static str,
    pub seed: u64,
    pub convention: ComplementConvention,
    pub realizations: usize,
    pub mean_shift: &'static str,
    pub target_mean: Vec<f64>,
    pub lambda: f64,
    pub position_bound: Option<f64>,
    pub hypotheses: HypothesisReport,
    pub verdicts: Verdicts,
    pub failures: Vec<RealizationFailure>,
    pub files: Vec<String>,
    pub versions: Versions,
    pub config: RunConfig,
}

/// What [`simulate`] produced.
#[derive(Debug)]
pub struct SimulationResult {
    pub summary: Summary,
    pub output: EnsembleOutput,
    pub dir: PathBuf,
}

impl SimulationResult {
    pub fn complete(&self) -> bool {
        self.output.failures.is_empty()
    }
}

/// Runs the ensemble and writes `energies.csv`, the snapshot files and
/// `summary.json` into the output directory. Blown-up realizations are
/// listed in `failures.json` and the statistics cover the survivors.
pub fn simulate(exp: &Experiment) -> Result<SimulationResult> {
    let a = &exp.config.analysis;
    let analysis = RunAnalysis::new(&exp.params, exp.convention, a.beta, a.beta_margin);
    let output = match ensemble::run(&exp.params, &exp.ensemble, &exp.stepper, &analysis) {
        Ok(out) => out,
        Err(EnsembleError::Partial(out)) => *out,
        Err(EnsembleError::Setup(flocknet_core::Error::BlowUp { time })) => {
            fs::create_dir_all(&exp.output_dir).with_context(|| format!("creating {}", exp.output_dir.display()))?;
            write_file(&exp.output_dir.join("failures.json"), |w| {
                let manifest = serde_json::json!({ "all_realizations_failed": true, "first_failure_time": time });
                serde_json::to_writer_pretty(&mut *w, &manifest)?;
                writeln!(w)?;
                Ok(())
            })?;
            anyhow::bail!("every realization blew up (first at t = {time}); see failures.json");
        }
        Err(EnsembleError::Setup(e)) => return Err(e.into()),
    };
    let hypotheses = check_hypotheses(&exp.params, exp.convention, &output.initial_states, a.beta, a.beta_margin);

    let dir = exp.output_dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();

    write_file(&dir.join("energies.csv"), |w| write_energies(&output.series, w))?;
    files.push("energies.csv".to_string());

    for (realization, states) in &output.snapshots {
        for (k, state) in states.iter().enumerate() {
            let name = snapshot_name(*realization, k, state.t);
            write_file(&dir.join(&name), |w| write_snapshot(state, w))?;
            files.push(name);
        }
    }

    if !output.failures.is_empty() {
        write_file(&dir.join("failures.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &output.failures)?;
            writeln!(w)?;
            Ok(())
        })?;
        files.push("failures.json".to_string());
    }

    let summary = Summary {
        status: if output.failures.is_empty() { "complete" } else { "partial" },
        seed: exp.stepper.seed,
        convention: exp.convention,
        realizations: exp.ensemble.n_realizations,
        mean_shift: "exact per realization: x_ave = z_ave, v_ave = 0",
        target_mean: flocknet_core::model::row_mean(&exp.params.targets, exp.params.dim),
        lambda: output.series.lambda,
        position_bound: output.series.position_bound,
        hypotheses,
        verdicts: Verdicts::of(&output.series, a.flocking_tolerance),
        failures: output.failures.clone(),
        files: files.clone(),
        versions: Versions { flocknet: env!("CARGO_PKG_VERSION"), output_format: 1 },
        config: exp.config.clone(),
    };
    write_file(&dir.join("summary.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &summary)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(SimulationResult { summary, output, dir })
}

pub fn snapshot_name(realization: usize, index: usize, t: f64) -> String {
    format!("snapshot_r{realization}_{index:03}_t{t:.4}.csv")
}

fn write_file(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// Energy time series, one row per sample time.
pub fn write_energies(series: &EnsembleSeries, w: &mut dyn Write) -> Result<()> {
    writeln!(w, "{ENERGIES_HEADER}")?;
    let (c0, c1) = series.analysis.as_ref().map_or((f64::NAN, f64::NAN), |a| (a.c0, a.c1));
    for p in &series.points {
        let (j, j_se) = p.j.map_or((f64::NAN, f64::NAN), |j| (j.mean, j.se));
        let row = [
            p.t,
            p.kinetic.mean,
            p.kinetic.se,
            p.h.mean,
            p.h.se,
            j,
            j_se,
            c0 * p.h.mean,
            c1 * p.h.mean,
            p.max_pair_v,
            p.max_pair_x,
            p.budget_lhs.mean,
            p.budget_rhs.mean,
        ];
        let cells: Vec<String> = row.iter().map(|&x| sci(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// One agent per row: `i, x_1..x_d, v_1..v_d` with 1-based `i`.
pub fn write_snapshot(state: &SwarmState, w: &mut dyn Write) -> Result<()> {
    let d = state.dim;
    let mut header = vec!["i".to_string()];
    header.extend((1..=d).map(|k| format!("x_{k}")));
    header.extend((1..=d).map(|k| format!("v_{k}")));
    writeln!(w, "{}", header.join(","))?;
    for i in 0..state.n_agents {
        let mut cells = vec![(i + 1).to_string()];
        cells.extend(state.position(i).iter().map(|&x| sci(x)));
        cells.extend(state.velocity(i).iter().map(|&v| sci(v)));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
