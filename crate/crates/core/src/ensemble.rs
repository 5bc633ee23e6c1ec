//! Monte Carlo ensembles and the expectation-level diagnostics built on them.
//!
//! Realizations run in parallel over fixed blocks; every reduction happens
//! in realization order so the output is bit-stable across thread counts.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ComplementConvention;
use crate::integrator::{grid_indices, StepperConfig, SwarmIntegrator};
use crate::model::{
    analysis_constants, lambda_constant, mean_and_se, phi_potential, row_mean, AnalysisConstants, ModelParams,
    SwarmState,
};
use crate::rng::{stream_rng, INITIAL_DATA_STREAM};

/// Uniform boxes centred at the origin, followed by exact mean shifts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoxSampler {
    pub position_half_width: f64,
    pub velocity_half_width: f64,
    /// Shift positions so their mean equals the target mean.
    pub center_positions: bool,
    /// Shift velocities to zero mean.
    pub center_velocities: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Boxes {
        sampler: BoxSampler,
        same_initial: bool,
    },
    /// One state shared by every realization, or one state per realization.
    Explicit(Vec<SwarmState>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotPolicy {
    #[default]
    FirstRealization,
    All,
}

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub initial: InitialData,
    pub seed: u64,
    pub t_end: f64,
    /// Times at which diagnostics are recorded; must start at the initial time
    /// for the budget and decay checks to be meaningful.
    pub sample_times: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub snapshots: SnapshotPolicy,
}

/// Evenly spaced sample times `t0, t0 + stride, ...` up to `t_end`.
pub fn strided_times(t0: f64, t_end: f64, stride: f64) -> Vec<f64> {
    let count = ((t_end - t0) / stride + 1e-9).floor() as usize;
    (0..=count).map(|k| t0 + k as f64 * stride).collect()
}

pub fn sample_initial<R: Rng + ?Sized>(sampler: &BoxSampler, params: &ModelParams, rng: &mut R) -> Result<SwarmState> {
    let (pw, vw) = (sampler.position_half_width, sampler.velocity_half_width);
    if !(pw >= 0.0 && vw >= 0.0 && pw.is_finite() && vw.is_finite()) {
        return Err(Error::InvalidParams("box half-widths must be finite and nonnegative".into()));
    }
    let len = params.n_agents * params.dim;
    let draw = |w: f64, rng: &mut R| -> Vec<f64> {
        (0..len).map(|_| if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 }).collect()
    };
    let mut x = draw(pw, rng);
    let mut v = draw(vw, rng);
    let d = params.dim;
    if sampler.center_positions {
        let target_mean = row_mean(&params.targets, d);
        let mean = row_mean(&x, d);
        for row in x.chunks_exact_mut(d) {
            for k in 0..d {
                row[k] += target_mean[k] - mean[k];
            }
        }
    }
    if sampler.center_velocities {
        let mean = row_mean(&v, d);
        for row in v.chunks_exact_mut(d) {
            for k in 0..d {
                row[k] -= mean[k];
            }
        }
    }
    SwarmState::new(params.n_agents, d, x, v, 0.0)
}

/// Mean and standard error of an ensemble estimator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let (mean, se) = mean_and_se(values);
        Stat { mean, se }
    }
}

/// Per-realization scalars at one sample time.
#[derive(Clone, Copy, Debug, Default)]
struct PathSample {
    kinetic: f64,
    kinetic_centered: f64,
    position_spread: f64,
    cross: f64,
    phi_potential: f64,
    pattern_error: f64,
}

impl PathSample {
    fn h(&self) -> f64 {
        self.position_spread + self.kinetic_centered
    }

    fn j(&self, a: &AnalysisConstants) -> f64 {
        a.alpha * self.phi_potential + self.cross + a.beta * self.kinetic_centered
    }

    fn is_finite(&self) -> bool {
        [self.kinetic, self.position_spread, self.cross, self.phi_potential, self.pattern_error]
            .iter()
            .all(|x| x.is_finite())
    }

    fn budget_energy(&self, control: f64) -> f64 {
        self.kinetic_centered + 0.5 * control * self.phi_potential
    }
}

fn evaluate(params: &ModelParams, state: &SwarmState, v0_mean: &[f64], t0: f64) -> Result<PathSample> {
    let d = params.dim;
    let z = &params.targets;
    let v_mean = state.mean_velocity();
    let xbar: Vec<f64> = state.x.iter().zip(z).map(|(x, z)| x - z).collect();
    let xbar_mean = row_mean(&xbar, d);
    let mut s = PathSample::default();
    let elapsed = state.t - t0;
    for i in 0..params.n_agents {
        for k in 0..d {
            let idx = i * d + k;
            let v = state.v[idx];
            let dx = xbar[idx] - xbar_mean[k];
            let dv = v - v_mean[k];
            s.kinetic += v * v;
            s.kinetic_centered += dv * dv;
            s.position_spread += dx * dx;
            s.cross += dx * v;
            let e = state.x[idx] - v0_mean[k] * elapsed - z[idx];
            s.pattern_error += e * e;
        }
    }
    s.phi_potential = phi_potential(params, &state.x)?;
    Ok(s)
}

/// Ensemble statistics at one sample time.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    /// `E|v|^2`.
    pub kinetic: Stat,
    /// `E|v - v_ave|^2`.
    pub kinetic_centered: Stat,
    /// `E|xb - xb_ave|^2 + E|v - v_ave|^2`.
    pub h: Stat,
    pub j: Option<Stat>,
    /// `sum_{E_phi} E Phi(|xb^ij|^2)`.
    pub phi_potential: Stat,
    /// `E|x - v0_ave t - z|^2`.
    pub pattern_error: Stat,
    pub max_pair_v: f64,
    pub max_pair_x: f64,
    pub budget_lhs: Stat,
    pub budget_rhs: Stat,
    /// Pathwise `lhs - rhs` of the energy budget.
    pub budget_gap: Stat,
    /// Pathwise `J(t_k) - J(t_{k-1})`; `None` at the first sample.
    pub j_increment: Option<Stat>,
    /// Pathwise `J - c0 H`.
    pub sandwich_lower_gap: Option<Stat>,
    /// Pathwise `c1 H - J`.
    pub sandwich_upper_gap: Option<Stat>,
    /// Pathwise `p H(0) exp(-q t) - H(t)`.
    pub decay_gap: Option<Stat>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSeries {
    pub n_realizations: usize,
    pub lambda: f64,
    pub analysis: Option<AnalysisConstants>,
    /// Explicit bound on `sum_{i,j} E|x^i - x^j|^2` when one is computable.
    pub position_bound: Option<f64>,
    pub points: Vec<SeriesPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizationFailure {
    pub realization: usize,
    pub time: f64,
}

#[derive(Clone, Debug)]
pub struct EnsembleOutput {
    pub series: EnsembleSeries,
    /// `(realization, states at snapshot_times)`.
    pub snapshots: Vec<(usize, Vec<SwarmState>)>,
    pub initial_states: Vec<SwarmState>,
    pub failures: Vec<RealizationFailure>,
}

const BLOCK: usize = 4;

struct PathRecord {
    samples: Vec<PathSample>,
    snapshots: Vec<SwarmState>,
}

struct BlockResult {
    paths: Vec<(usize, std::result::Result<PathRecord, RealizationFailure>)>,
    pair_v: Vec<Vec<f64>>,
    pair_x: Vec<Vec<f64>>,
}

/// Builds the initial ensemble (one state per realization).
pub fn initial_ensemble(params: &ModelParams, cfg: &EnsembleConfig) -> Result<Vec<SwarmState>> {
    match &cfg.initial {
        InitialData::Boxes { sampler, same_initial: true } => {
            let shared = sample_initial(sampler, params, &mut stream_rng(cfg.seed, INITIAL_DATA_STREAM))?;
            Ok(vec![shared; cfg.n_realizations])
        }
        InitialData::Boxes { sampler, same_initial: false } => (0..cfg.n_realizations)
            .map(|r| sample_initial(sampler, params, &mut stream_rng(cfg.seed, r as u64)))
            .collect(),
        InitialData::Explicit(states) if states.len() == 1 => Ok(vec![states[0].clone(); cfg.n_realizations]),
        InitialData::Explicit(states) if states.len() == cfg.n_realizations => Ok(states.clone()),
        InitialData::Explicit(states) => Err(Error::InvalidParams(format!(
            "{} explicit initial states for {} realizations",
            states.len(),
            cfg.n_realizations
        ))),
    }
}

/// Analytic inputs to the diagnostics of one run.
#[derive(Clone, Debug)]
pub struct RunAnalysis {
    pub convention: ComplementConvention,
    pub lambda: f64,
    /// `None` when the decay-estimate hypotheses fail; `J` is then not reported.
    pub constants: Option<AnalysisConstants>,
}

impl RunAnalysis {
    pub fn new(params: &ModelParams, convention: ComplementConvention, beta: Option<f64>, margin: f64) -> Self {
        RunAnalysis {
            convention,
            lambda: lambda_constant(params, convention).unwrap_or(f64::NAN),
            constants: analysis_constants(params, convention, beta, margin).ok(),
        }
    }
}

/// Runs the ensemble. When every realization survives the result is `Ok`;
/// otherwise the statistics over the survivors come back inside
/// [`EnsembleError`].
pub fn run(
    params: &ModelParams,
    cfg: &EnsembleConfig,
    stepper: &StepperConfig,
    analysis: &RunAnalysis,
) -> std::result::Result<EnsembleOutput, EnsembleError> {
    run_inner(params, cfg, stepper, analysis).map_err(EnsembleError::Setup).and_then(|out| {
        if out.failures.is_empty() {
            Ok(out)
        } else {
            Err(EnsembleError::Partial(Box::new(out)))
        }
    })
}

#[derive(Debug, thiserror::Error)]
pub enum EnsembleError {
    #[error(transparent)]
    Setup(#[from] Error),
    #[error("{} realization(s) blew up", .0.failures.len())]
    Partial(Box<EnsembleOutput>),
}

fn run_inner(
    params: &ModelParams,
    cfg: &EnsembleConfig,
    stepper: &StepperConfig,
    run_analysis: &RunAnalysis,
) -> Result<EnsembleOutput> {
    let analysis = run_analysis.constants.as_ref();
    let lambda = run_analysis.lambda;
    params.validate_relaxed()?;
    stepper.validate()?;
    if cfg.n_realizations == 0 {
        return Err(Error::InvalidParams("n_realizations must be at least 1".into()));
    }
    if cfg.sample_times.is_empty() {
        return Err(Error::InvalidParams("at least one sample time is required".into()));
    }
    if cfg.sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("sample times must be strictly increasing".into()));
    }
    let initial = initial_ensemble(params, cfg)?;
    let t0 = initial[0].t;
    let sample_idx = grid_indices(t0, stepper.dt, &cfg.sample_times)?;
    let snap_idx = grid_indices(t0, stepper.dt, &cfg.snapshot_times)?;
    let last = grid_indices(t0, stepper.dt, &[cfg.t_end])?[0];
    if sample_idx.iter().chain(&snap_idx).any(|&k| k > last) {
        return Err(Error::InvalidParams("sample or snapshot time beyond t_end".into()));
    }
    let n = params.n_agents;
    let n_pairs = n * (n - 1) / 2;
    let n_samples = sample_idx.len();

    let blocks: Vec<usize> = (0..cfg.n_realizations).step_by(BLOCK).collect();
    let results: Vec<Result<BlockResult>> = blocks
        .par_iter()
        .map(|&start| {
            let end = (start + BLOCK).min(cfg.n_realizations);
            let mut block = BlockResult {
                paths: Vec::with_capacity(end - start),
                pair_v: vec![vec![0.0; n_pairs]; n_samples],
                pair_x: vec![vec![0.0; n_pairs]; n_samples],
            };
            for r in start..end {
                let keep = match cfg.snapshots {
                    SnapshotPolicy::All => true,
                    SnapshotPolicy::FirstRealization => r == 0,
                };
                let mut pv = vec![vec![0.0; n_pairs]; n_samples];
                let mut px = vec![vec![0.0; n_pairs]; n_samples];
                let outcome = run_path(
                    params,
                    &initial[r],
                    stepper,
                    cfg.seed,
                    r,
                    &sample_idx,
                    &snap_idx,
                    last,
                    keep,
                    &mut pv,
                    &mut px,
                )?;
                if outcome.is_ok() {
                    for (acc, add) in block.pair_v.iter_mut().zip(&pv).chain(block.pair_x.iter_mut().zip(&px)) {
                        acc.iter_mut().zip(add).for_each(|(a, b)| *a += b);
                    }
                }
                block.paths.push((r, outcome));
            }
            Ok(block)
        })
        .collect();

    let mut pair_v = vec![vec![0.0; n_pairs]; n_samples];
    let mut pair_x = vec![vec![0.0; n_pairs]; n_samples];
    let mut paths = Vec::new();
    let mut failures = Vec::new();
    let mut snapshots = Vec::new();
    for block in results {
        let block = block?;
        for (acc, add) in pair_v.iter_mut().zip(&block.pair_v).chain(pair_x.iter_mut().zip(&block.pair_x)) {
            acc.iter_mut().zip(add).for_each(|(a, b)| *a += b);
        }
        for (r, outcome) in block.paths {
            match outcome {
                Ok(rec) => {
                    if !rec.snapshots.is_empty() {
                        snapshots.push((r, rec.snapshots));
                    }
                    paths.push(rec.samples);
                }
                Err(f) => failures.push(f),
            }
        }
    }
    if paths.is_empty() {
        return Err(Error::BlowUp { time: failures.first().map_or(t0, |f| f.time) });
    }

    let survivors = paths.len() as f64;
    let times: Vec<f64> = sample_idx.iter().map(|&k| t0 + k as f64 * stepper.dt).collect();
    let position_bound = position_bound(params, &initial, run_analysis.convention)?;
    let points = assemble(params, analysis, lambda, &times, &paths, &pair_v, &pair_x, survivors);
    Ok(EnsembleOutput {
        series: EnsembleSeries {
            n_realizations: paths.len(),
            lambda,
            analysis: analysis.cloned(),
            position_bound,
            points,
        },
        snapshots,
        initial_states: initial,
        failures,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_path(
    params: &ModelParams,
    initial: &SwarmState,
    stepper: &StepperConfig,
    seed: u64,
    r: usize,
    sample_idx: &[u64],
    snap_idx: &[u64],
    last: u64,
    keep_snapshots: bool,
    pair_v: &mut [Vec<f64>],
    pair_x: &mut [Vec<f64>],
) -> Result<std::result::Result<PathRecord, RealizationFailure>> {
    let mut rng = stream_rng(seed, r as u64);
    let mut integrator = SwarmIntegrator::new(params, initial, stepper)?;
    let v0_mean = initial.mean_velocity();
    let n = params.n_agents;
    let mut samples = Vec::with_capacity(sample_idx.len());
    let mut snapshots = Vec::new();
    let (mut si, mut pi) = (0, 0);
    loop {
        let k = integrator.steps_taken();
        while si < snap_idx.len() && snap_idx[si] == k {
            if keep_snapshots {
                snapshots.push(integrator.state());
            }
            si += 1;
        }
        while pi < sample_idx.len() && sample_idx[pi] == k {
            let state = integrator.state();
            let sample = evaluate(params, &state, &v0_mean, initial.t)?;
            if !sample.is_finite() {
                return Ok(Err(RealizationFailure { realization: r, time: state.t }));
            }
            samples.push(sample);
            let mut idx = 0;
            for i in 0..n {
                for j in i + 1..n {
                    pair_v[pi][idx] = sq_dist(state.velocity(i), state.velocity(j));
                    pair_x[pi][idx] = sq_dist(state.position(i), state.position(j));
                    idx += 1;
                }
            }
            pi += 1;
        }
        if k >= last {
            break;
        }
        if let Err(Error::BlowUp { time }) = integrator.advance(&mut rng) {
            return Ok(Err(RealizationFailure { realization: r, time }));
        }
    }
    Ok(Ok(PathRecord { samples, snapshots }))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

/// `2 |E_phi| eta / L_phi + 2 sum_{i,j} |z^i - z^j|^2`, with `Phi(eta)`
/// equal to the initial-energy level. `None` when no such `eta` exists.
fn position_bound(
    params: &ModelParams,
    initial: &[SwarmState],
    convention: ComplementConvention,
) -> Result<Option<f64>> {
    if params.control <= 0.0 {
        return Ok(None);
    }
    let Ok(l_phi) = params.g_phi.connectivity_constant(convention) else {
        return Ok(None);
    };
    let l_phi = l_phi.value();
    let levels = initial
        .iter()
        .map(|s| {
            let kinetic: f64 = s.v.iter().map(|c| c * c).sum();
            Ok(2.0 / params.control * kinetic + phi_potential(params, &s.x)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let level = Stat::of(&levels).mean;
    let Some(eta) = params.phi.antiderivative_inverse(level)? else {
        return Ok(None);
    };
    let d = params.dim;
    let z = &params.targets;
    let mut spread = 0.0;
    for i in 0..params.n_agents {
        for j in 0..params.n_agents {
            spread += sq_dist(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]);
        }
    }
    Ok(Some(2.0 * params.g_phi.n_arcs() as f64 * eta / l_phi + 2.0 * spread))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    params: &ModelParams,
    analysis: Option<&AnalysisConstants>,
    lambda: f64,
    times: &[f64],
    paths: &[Vec<PathSample>],
    pair_v: &[Vec<f64>],
    pair_x: &[Vec<f64>],
    survivors: f64,
) -> Vec<SeriesPoint> {
    let n = params.n_agents as f64;
    let m = params.control;
    let column = |k: usize, f: &dyn Fn(&[PathSample], usize) -> f64| -> Stat {
        Stat::of(&paths.iter().map(|p| f(p, k)).collect::<Vec<_>>())
    };
    // Pathwise trapezoid integral of the centered kinetic energy.
    let integrals: Vec<Vec<f64>> = paths
        .iter()
        .map(|p| {
            let mut acc = 0.0;
            let mut out = vec![0.0; p.len()];
            for k in 1..p.len() {
                acc += 0.5 * (times[k] - times[k - 1]) * (p[k].kinetic_centered + p[k - 1].kinetic_centered);
                out[k] = acc;
            }
            out
        })
        .collect();
    let lhs = |p: &[PathSample], k: usize, r: usize| p[k].budget_energy(m) + 2.0 * n * lambda * integrals[r][k];
    let max_mean = |sums: &[f64]| sums.iter().map(|s| s / survivors).fold(0.0, f64::max);

    (0..times.len())
        .map(|k| {
            let budget_lhs = Stat::of(&paths.iter().enumerate().map(|(r, p)| lhs(p, k, r)).collect::<Vec<_>>());
            let budget_gap = Stat::of(
                &paths.iter().enumerate().map(|(r, p)| lhs(p, k, r) - p[0].budget_energy(m)).collect::<Vec<_>>(),
            );
            let with_analysis = |f: &dyn Fn(&[PathSample], &AnalysisConstants) -> f64| {
                analysis.map(|a| Stat::of(&paths.iter().map(|p| f(p, a)).collect::<Vec<_>>()))
            };
            let t_rel = times[k] - times[0];
            SeriesPoint {
                t: times[k],
                kinetic: column(k, &|p, k| p[k].kinetic),
                kinetic_centered: column(k, &|p, k| p[k].kinetic_centered),
                h: column(k, &|p, k| p[k].h()),
                j: with_analysis(&|p, a| p[k].j(a)),
                phi_potential: column(k, &|p, k| p[k].phi_potential),
                pattern_error: column(k, &|p, k| p[k].pattern_error),
                max_pair_v: max_mean(&pair_v[k]),
                max_pair_x: max_mean(&pair_x[k]),
                budget_lhs,
                budget_rhs: column(0, &|p, _| p[0].budget_energy(m)),
                budget_gap,
                j_increment: if k == 0 { None } else { with_analysis(&|p, a| p[k].j(a) - p[k - 1].j(a)) },
                sandwich_lower_gap: with_analysis(&|p, a| p[k].j(a) - a.c0 * p[k].h()),
                sandwich_upper_gap: with_analysis(&|p, a| a.c1 * p[k].h() - p[k].j(a)),
                decay_gap: with_analysis(&|p, a| a.p * p[0].h() * (-a.q * t_rel).exp() - p[k].h()),
            }
        })
        .collect()
}

/// Slack multiplier on standard errors for every stochastic inequality.
pub const SE_SLACK: f64 = 3.0;

/// `value >= -3 SE`, i.e. a nonnegative gap up to sampling error.
fn nonnegative(gap: &Stat) -> bool {
    gap.mean >= -SE_SLACK * gap.se
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FlockingVerdict {
    pub flocking: bool,
    pub bounded: bool,
}

/// Velocity alignment at the last sample (`max E|v^i - v^j|^2` at most
/// `tol_v` times its initial value) and boundedness of relative positions
/// over the whole series.
pub fn flocking_verdict(series: &EnsembleSeries, tol_v: f64) -> FlockingVerdict {
    let Some(last) = series.points.last() else {
        return FlockingVerdict { flocking: false, bounded: false };
    };
    let flocking = last.max_pair_v <= tol_v * series.points[0].max_pair_v;
    let bounded = match series.position_bound {
        Some(bound) => series.points.iter().all(|p| p.max_pair_x <= bound),
        None => trend_bounded(&series.points.iter().map(|p| p.max_pair_x).collect::<Vec<_>>()),
    };
    FlockingVerdict { flocking, bounded }
}

/// No growth trend: the last value is at most twice the median of the series.
pub fn trend_bounded(values: &[f64]) -> bool {
    let Some(&last) = values.last() else { return true };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 { sorted[mid] } else { 0.5 * (sorted[mid - 1] + sorted[mid]) };
    last <= 2.0 * median
}

/// `c0 H <= J <= c1 H` at each sample, within sampling error.
pub fn sandwich_check(series: &EnsembleSeries) -> Vec<bool> {
    series
        .points
        .iter()
        .map(|p| match (&p.sandwich_lower_gap, &p.sandwich_upper_gap) {
            (Some(lo), Some(hi)) => nonnegative(lo) && nonnegative(hi),
            _ => false,
        })
        .collect()
}

/// Energy budget `lhs <= rhs` at each sample, within sampling error.
pub fn budget_check(series: &EnsembleSeries) -> Vec<bool> {
    series
        .points
        .iter()
        .map(|p| {
            let neg = Stat { mean: -p.budget_gap.mean, se: p.budget_gap.se };
            nonnegative(&neg) || p.budget_gap.mean <= 1e-12 * p.budget_rhs.mean.abs()
        })
        .collect()
}

/// `J` does not increase between consecutive samples, within sampling error.
pub fn lyapunov_check(series: &EnsembleSeries) -> Vec<bool> {
    series
        .points
        .iter()
        .skip(1)
        .map(|p| match &p.j_increment {
            Some(inc) => {
                let scale = p.j.map_or(0.0, |j| j.mean.abs());
                inc.mean <= SE_SLACK * inc.se || inc.mean <= 1e-12 * scale
            }
            None => false,
        })
        .collect()
}

/// `H(t) <= p H(0) exp(-q t)` at each sample, within sampling error.
pub fn decay_check(series: &EnsembleSeries) -> Vec<bool> {
    series.points.iter().map(|p| p.decay_gap.as_ref().is_some_and(nonnegative)).collect()
}
