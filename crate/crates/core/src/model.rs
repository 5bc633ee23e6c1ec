//! The controlled stochastic flocking system: drift, control signal, common
//! noise coefficient, and the analytic constants behind the decay estimates.
//!
//! With positions `x^i`, velocities `v^i`, targets `z^i` and shifted
//! positions `xb^i = x^i - z^i`:
//!
//! ```text
//! dx^i = v^i dt
//! dv^i = K sum_{j in N_psi(i)} psi(|x^j - x^i|) (v^j - v^i) dt
//!      + M u^i dt
//!      + sigma sum_{j in N_B(i)} (v^j - v^i) dB_t
//! u^i  = sum_{j in N_phi(i)} phi(|xb^j - xb^i|^2) (xb^j - xb^i)
//! ```
//!
//! `B_t` is one scalar Brownian motion shared by every agent and component.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{ComplementConvention, Graph};
use crate::kernels::CommunicationKernel;

/// Everything that defines one instance of the system.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub n_agents: usize,
    pub dim: usize,
    /// Alignment coupling `K`.
    pub coupling: f64,
    /// Control strength `M`.
    pub control: f64,
    /// Noise strength `sigma`.
    pub sigma: f64,
    pub g_psi: Graph,
    pub g_phi: Graph,
    pub g_b: Graph,
    pub psi: CommunicationKernel,
    pub phi: CommunicationKernel,
    /// Desired configuration, row-major `n_agents x dim`.
    pub targets: Vec<f64>,
}

impl ModelParams {
    /// Checks dimensions, signs, and that every graph is symmetric and
    /// connected on `n_agents` vertices. The force routines rely on symmetry.
    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 || self.dim == 0 {
            return Err(Error::InvalidParams("n_agents and dim must be positive".into()));
        }
        if self.targets.len() != self.n_agents * self.dim {
            return Err(Error::Dimension(format!(
                "targets have {} entries, expected {} x {}",
                self.targets.len(),
                self.n_agents,
                self.dim
            )));
        }
        if !(self.coupling > 0.0 && self.coupling.is_finite()) {
            return Err(Error::InvalidParams(format!("coupling K must be positive, got {}", self.coupling)));
        }
        if !(self.control > 0.0 && self.control.is_finite()) {
            return Err(Error::InvalidParams(format!("control M must be positive, got {}", self.control)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParams(format!("sigma must be nonnegative, got {}", self.sigma)));
        }
        if self.targets.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidParams("targets must be finite".into()));
        }
        for (name, g) in [("psi", &self.g_psi), ("phi", &self.g_phi), ("B", &self.g_b)] {
            self.check_graph(name, g)?;
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but allows zero `K` and `M`, for
    /// free-flight and frozen-dynamics studies.
    pub fn validate_relaxed(&self) -> Result<()> {
        let mut probe = self.clone();
        probe.coupling = if self.coupling == 0.0 { 1.0 } else { self.coupling };
        probe.control = if self.control == 0.0 { 1.0 } else { self.control };
        probe.validate()
    }

    fn check_graph(&self, name: &str, g: &Graph) -> Result<()> {
        if g.n_vertices() != self.n_agents {
            return Err(Error::Dimension(format!(
                "graph {name} has {} vertices, expected {}",
                g.n_vertices(),
                self.n_agents
            )));
        }
        let v = g.validate();
        if !v.symmetric {
            return Err(Error::InvalidParams(format!("graph {name} is not symmetric")));
        }
        if !v.connected {
            return Err(Error::InvalidParams(format!("graph {name} is not connected")));
        }
        Ok(())
    }

    /// `c_B`, the largest neighbourhood in the noise graph.
    pub fn c_b(&self) -> usize {
        self.g_b.max_degree()
    }

    pub fn new_state(&self) -> SwarmState {
        SwarmState::zeros(self.n_agents, self.dim)
    }

    fn check_state(&self, state: &SwarmState) -> Result<()> {
        if state.n_agents != self.n_agents || state.dim != self.dim {
            return Err(Error::Dimension(format!(
                "state is {} x {}, model is {} x {}",
                state.n_agents, state.dim, self.n_agents, self.dim
            )));
        }
        Ok(())
    }
}

/// Positions and velocities of one realization, row-major `n_agents x dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwarmState {
    pub n_agents: usize,
    pub dim: usize,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl SwarmState {
    pub fn zeros(n_agents: usize, dim: usize) -> Self {
        SwarmState { n_agents, dim, x: vec![0.0; n_agents * dim], v: vec![0.0; n_agents * dim], t: 0.0 }
    }

    pub fn new(n_agents: usize, dim: usize, x: Vec<f64>, v: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() != n_agents * dim || v.len() != n_agents * dim {
            return Err(Error::Dimension(format!(
                "state buffers have lengths {} and {}, expected {}",
                x.len(),
                v.len(),
                n_agents * dim
            )));
        }
        Ok(SwarmState { n_agents, dim, x, v, t })
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.v[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }

    pub fn mean_position(&self) -> Vec<f64> {
        row_mean(&self.x, self.dim)
    }

    pub fn mean_velocity(&self) -> Vec<f64> {
        row_mean(&self.v, self.dim)
    }
}

/// Column means of a row-major matrix with `dim` columns.
pub fn row_mean(m: &[f64], dim: usize) -> Vec<f64> {
    let n = m.len() / dim;
    let mut mean = vec![0.0; dim];
    for row in m.chunks_exact(dim) {
        for (acc, c) in mean.iter_mut().zip(row) {
            *acc += c;
        }
    }
    mean.iter_mut().for_each(|c| *c /= n as f64);
    mean
}

/// Unordered edges `(i, j)`, `i < j`, of a symmetric graph.
fn edges(g: &Graph) -> impl Iterator<Item = (usize, usize)> + '_ {
    g.arcs().iter().copied().filter(|&(i, j)| i < j)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum()
}

/// Control signal `u`, written into `out`. Uses shifted positions `x - z`.
pub fn control_signal_into(params: &ModelParams, x: &[f64], out: &mut [f64]) {
    let d = params.dim;
    out.iter_mut().for_each(|c| *c = 0.0);
    let z = &params.targets;
    let mut diff = [0.0f64; 8];
    let mut diff_vec;
    let diff: &mut [f64] = if d <= diff.len() {
        &mut diff[..d]
    } else {
        diff_vec = vec![0.0; d];
        &mut diff_vec
    };
    for (i, j) in edges(&params.g_phi) {
        let mut r2 = 0.0;
        for k in 0..d {
            let dk = (x[j * d + k] - z[j * d + k]) - (x[i * d + k] - z[i * d + k]);
            diff[k] = dk;
            r2 += dk * dk;
        }
        let w = params.phi.value(r2);
        for k in 0..d {
            out[i * d + k] += w * diff[k];
            out[j * d + k] -= w * diff[k];
        }
    }
}

pub fn control_signal(params: &ModelParams, state: &SwarmState) -> Result<Vec<f64>> {
    params.check_state(state)?;
    let mut u = vec![0.0; state.x.len()];
    control_signal_into(params, &state.x, &mut u);
    Ok(u)
}

/// Velocity drift (alignment plus control) written into `dv`. The position
/// drift is `v` itself.
pub fn velocity_drift_into(params: &ModelParams, x: &[f64], v: &[f64], dv: &mut [f64]) {
    let d = params.dim;
    control_signal_into(params, x, dv);
    let m = params.control;
    dv.iter_mut().for_each(|c| *c *= m);
    let k_coupling = params.coupling;
    for (i, j) in edges(&params.g_psi) {
        let r = sq_dist(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]).sqrt();
        let w = k_coupling * params.psi.value(r);
        for k in 0..d {
            let f = w * (v[j * d + k] - v[i * d + k]);
            dv[i * d + k] += f;
            dv[j * d + k] -= f;
        }
    }
}

/// `(dx, dv)` drift pair.
pub fn drift(params: &ModelParams, state: &SwarmState) -> Result<(Vec<f64>, Vec<f64>)> {
    params.check_state(state)?;
    let mut dv = vec![0.0; state.v.len()];
    velocity_drift_into(params, &state.x, &state.v, &mut dv);
    Ok((state.v.clone(), dv))
}

/// Noise coefficient for the velocities, written into `out`. Every row is
/// multiplied by the same scalar Brownian increment.
pub fn diffusion_into(params: &ModelParams, v: &[f64], out: &mut [f64]) {
    let d = params.dim;
    out.iter_mut().for_each(|c| *c = 0.0);
    if params.sigma == 0.0 {
        return;
    }
    for (i, j) in edges(&params.g_b) {
        for k in 0..d {
            let f = v[j * d + k] - v[i * d + k];
            out[i * d + k] += f;
            out[j * d + k] -= f;
        }
    }
    let s = params.sigma;
    out.iter_mut().for_each(|c| *c *= s);
}

pub fn diffusion(params: &ModelParams, state: &SwarmState) -> Result<Vec<f64>> {
    params.check_state(state)?;
    let mut g = vec![0.0; state.v.len()];
    diffusion_into(params, &state.v, &mut g);
    Ok(g)
}

/// `lambda = psi_min L_psi K - sigma^2 c_B`. May be nonpositive.
pub fn lambda_constant(params: &ModelParams, convention: ComplementConvention) -> Result<f64> {
    let l_psi = params.g_psi.connectivity_constant(convention)?.value();
    Ok(params.psi.inf() * l_psi * params.coupling - params.sigma * params.sigma * params.c_b() as f64)
}

/// Lower bounds on `K` for the flocking estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingThreshold {
    /// `(sigma^2 c_B / psi_min) (1 + d(G_psi) |E_psi^c|)`.
    pub general: f64,
    /// `sigma^2 c_B / psi_min`, valid when the alignment and noise graphs coincide.
    pub same_graph: f64,
    /// Whether `G_psi == G_B`, so `same_graph` applies.
    pub graphs_coincide: bool,
}

impl CouplingThreshold {
    /// The sharpest threshold that applies.
    pub fn applicable(&self) -> f64 {
        if self.graphs_coincide {
            self.same_graph
        } else {
            self.general
        }
    }
}

pub fn coupling_threshold(params: &ModelParams, convention: ComplementConvention) -> Result<CouplingThreshold> {
    let psi_min = params.psi.inf();
    if psi_min <= 0.0 {
        return Err(Error::Hypothesis("psi_min = 0: alignment weight must be bounded below".into()));
    }
    let same_graph = params.sigma * params.sigma * params.c_b() as f64 / psi_min;
    let l_inv = params.g_psi.connectivity_constant(convention)?.denominator as f64;
    Ok(CouplingThreshold { general: same_graph * l_inv, same_graph, graphs_coincide: params.g_psi == params.g_b })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialVerdict {
    Satisfied,
    Violated,
    TriviallySatisfied,
}

/// Comparison of `int_0^inf phi` against the initial-energy bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitialConditionReport {
    pub verdict: InitialVerdict,
    /// `None` when the integral diverges.
    pub lhs: Option<f64>,
    /// `(2/M) E|v0|^2 + sum_{E_phi} E Phi(|xb0^ij|^2)`, ensemble mean.
    pub rhs: f64,
    pub rhs_se: f64,
}

/// Per-state value of `(2/M)|v|^2 + sum_{(i,j) in E_phi} Phi(|xb^ij|^2)`.
fn initial_energy(params: &ModelParams, state: &SwarmState) -> Result<f64> {
    let kinetic: f64 = state.v.iter().map(|c| c * c).sum();
    Ok(2.0 / params.control * kinetic + phi_potential(params, &state.x)?)
}

/// `sum_{(i,j) in E_phi} Phi(|xb^j - xb^i|^2)` over ordered arcs.
pub fn phi_potential(params: &ModelParams, x: &[f64]) -> Result<f64> {
    let d = params.dim;
    let z = &params.targets;
    let mut total = 0.0;
    for (i, j) in edges(&params.g_phi) {
        let r2: f64 = (0..d)
            .map(|k| {
                let dk = (x[j * d + k] - z[j * d + k]) - (x[i * d + k] - z[i * d + k]);
                dk * dk
            })
            .sum();
        total += 2.0 * params.phi.antiderivative(r2)?;
    }
    Ok(total)
}

pub fn initial_condition_check(params: &ModelParams, ensemble: &[SwarmState]) -> Result<InitialConditionReport> {
    if ensemble.is_empty() {
        return Err(Error::InvalidParams("initial ensemble is empty".into()));
    }
    let values = ensemble
        .iter()
        .map(|s| {
            params.check_state(s)?;
            initial_energy(params, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let (rhs, rhs_se) = mean_and_se(&values);
    let lhs = params.phi.total_integral();
    let verdict = match lhs {
        None => InitialVerdict::TriviallySatisfied,
        Some(l) if l > rhs => InitialVerdict::Satisfied,
        Some(_) => InitialVerdict::Violated,
    };
    Ok(InitialConditionReport { verdict, lhs, rhs, rhs_se })
}

/// Sample mean and standard error `std / sqrt(n)` (zero for a single sample).
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Constants of the exponential decay estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisConstants {
    pub convention: ComplementConvention,
    pub l_psi: f64,
    pub l_phi: f64,
    pub c_b: usize,
    pub lambda: f64,
    pub k_threshold: f64,
    pub gamma: f64,
    pub beta_min: f64,
    pub beta: f64,
    pub alpha: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub p: f64,
    pub q: f64,
}

pub const DEFAULT_BETA_MARGIN: f64 = 1e-6;

/// Derives `gamma, beta, alpha, c0, c1, c2, p, q`.
///
/// `beta` is `beta_min (1 + margin)` unless overridden; an override must
/// still leave `c0` and `c2` positive.
pub fn analysis_constants(
    params: &ModelParams,
    convention: ComplementConvention,
    beta_override: Option<f64>,
    margin: f64,
) -> Result<AnalysisConstants> {
    let n = params.n_agents as f64;
    let (k, m) = (params.coupling, params.control);
    let (psi_max, phi_min, phi_max) = (params.psi.sup(), params.phi.inf(), params.phi.sup());
    if phi_min <= 0.0 {
        return Err(Error::Hypothesis(
            "phi_min = 0: control weight must be bounded below for pattern formation".into(),
        ));
    }
    let lambda = lambda_constant(params, convention)?;
    if lambda <= 0.0 {
        return Err(Error::Hypothesis(format!("lambda = psi_min L_psi K - sigma^2 c_B = {lambda:e} is not positive")));
    }
    let k_threshold = coupling_threshold(params, convention)?.general;
    let l_psi = params.g_psi.connectivity_constant(convention)?.value();
    let l_phi = params.g_phi.connectivity_constant(convention)?.value();

    let control_rate = l_phi * m * phi_min;
    let alignment = n * (k * psi_max).powi(2);
    let gamma = control_rate / (k * psi_max);
    let beta_min = f64::max(
        (2.0 * control_rate + alignment) / (4.0 * n * control_rate * lambda),
        1.0 / (2.0 * n * control_rate).sqrt(),
    );
    let beta = beta_override.unwrap_or(beta_min * (1.0 + margin));
    let alpha = beta * m / 2.0;
    let c0 = f64::min(4.0 * alpha * beta * n * phi_min * l_phi - 1.0, beta * beta) / (2.0 * beta);
    let c1 = f64::max(2.0 * n * phi_max * alpha + 0.5, beta + 0.5);
    let dissipation = 2.0 * beta * n * lambda - (1.0 + alignment / (2.0 * control_rate));
    let c2 = f64::min(dissipation, n * control_rate / 2.0);
    if !(c0 > 0.0 && dissipation > 0.0) {
        return Err(Error::Hypothesis(format!(
            "beta = {beta:e} is too small (beta_min = {beta_min:e}): c0 = {c0:e}, c2 = {c2:e}"
        )));
    }
    assert!(c2 > 0.0);
    Ok(AnalysisConstants {
        convention,
        l_psi,
        l_phi,
        c_b: params.c_b(),
        lambda,
        k_threshold,
        gamma,
        beta_min,
        beta,
        alpha,
        c0,
        c1,
        c2,
        p: c1 / c0,
        q: c2 / c1,
    })
}

/// Every hypothesis of the flocking and pattern-formation estimates,
/// evaluated for one parameter set and initial ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub convention: ComplementConvention,
    pub coupling: f64,
    pub coupling_threshold: Option<CouplingThreshold>,
    pub coupling_ok: bool,
    pub lambda: Option<f64>,
    pub lambda_ok: bool,
    pub phi_min: f64,
    pub phi_min_ok: bool,
    pub initial_condition: Option<InitialConditionReport>,
    pub initial_condition_ok: bool,
    pub analysis: Option<AnalysisConstants>,
    pub failures: Vec<String>,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn check_hypotheses(
    params: &ModelParams,
    convention: ComplementConvention,
    initial_ensemble: &[SwarmState],
    beta_override: Option<f64>,
    beta_margin: f64,
) -> HypothesisReport {
    let mut failures = Vec::new();
    let threshold = coupling_threshold(params, convention);
    let coupling_ok = match &threshold {
        Ok(th) if params.coupling > th.applicable() => true,
        Ok(th) => {
            failures.push(format!("coupling K = {} does not exceed threshold {:e}", params.coupling, th.applicable()));
            false
        }
        Err(e) => {
            failures.push(e.to_string());
            false
        }
    };
    let lambda = lambda_constant(params, convention).ok();
    let lambda_ok = lambda.is_some_and(|l| l > 0.0);
    if !lambda_ok {
        failures.push(match lambda {
            Some(l) => format!("lambda = {l:e} is not positive"),
            None => "lambda undefined: alignment graph disconnected".to_string(),
        });
    }
    let phi_min = params.phi.inf();
    let phi_min_ok = phi_min > 0.0;
    if !phi_min_ok {
        failures.push("phi_min = 0: pattern-formation estimate does not apply".into());
    }
    let initial_condition = match initial_condition_check(params, initial_ensemble) {
        Ok(r) => Some(r),
        Err(e) => {
            failures.push(format!("initial condition not evaluated: {e}"));
            None
        }
    };
    let initial_condition_ok = initial_condition.as_ref().is_some_and(|r| r.verdict != InitialVerdict::Violated);
    if initial_condition.as_ref().is_some_and(|r| r.verdict == InitialVerdict::Violated) {
        failures.push("initial data violate the smallness condition on int phi".into());
    }
    let analysis = match analysis_constants(params, convention, beta_override, beta_margin) {
        Ok(a) => Some(a),
        Err(e) => {
            if lambda_ok && phi_min_ok {
                failures.push(e.to_string());
            }
            None
        }
    };
    HypothesisReport {
        convention,
        coupling: params.coupling,
        coupling_threshold: threshold.ok(),
        coupling_ok,
        lambda,
        lambda_ok,
        phi_min,
        phi_min_ok,
        initial_condition,
        initial_condition_ok,
        analysis,
        failures,
    }
}
