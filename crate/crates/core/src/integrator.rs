//! Time stepping for SDEs driven by a single scalar Brownian motion.
//!
//! The default scheme is the improved Euler–Maruyama predictor–corrector:
//!
//! ```text
//! dW ~ N(0, h),  S = +-1 with equal probability
//! K1 = f(X) h + g(X) (dW - S sqrt(h))
//! K2 = f(X + K1) h + g(X + K1) (dW + S sqrt(h))
//! X' = X + (K1 + K2) / 2
//! ```
//!
//! One `(dW, S)` pair is drawn per step and shared by every component.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{diffusion_into, velocity_drift_into, ModelParams, SwarmState};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    ImprovedEm,
    EulerMaruyama,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ImprovedEm => "improved_em",
            Scheme::EulerMaruyama => "euler_maruyama",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "improved_em" => Ok(Scheme::ImprovedEm),
            "euler_maruyama" => Ok(Scheme::EulerMaruyama),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

pub const DEFAULT_DT: f64 = 0.0125;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig { dt: DEFAULT_DT, seed: 0, scheme: Scheme::ImprovedEm }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dt > 0.0 && self.dt.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("dt must be positive, got {}", self.dt)))
        }
    }
}

/// An SDE `dY = f(Y) dt + g(Y) dB` with one scalar Brownian motion.
pub trait ScalarNoiseSde {
    fn dimension(&self) -> usize;
    fn drift(&self, y: &[f64], out: &mut [f64]);
    fn diffusion(&self, y: &[f64], out: &mut [f64]);
}

/// The flocking system on the stacked state `[x; v]`.
pub struct SwarmSde<'a> {
    pub params: &'a ModelParams,
}

impl ScalarNoiseSde for SwarmSde<'_> {
    fn dimension(&self) -> usize {
        2 * self.params.n_agents * self.params.dim
    }

    fn drift(&self, y: &[f64], out: &mut [f64]) {
        let half = y.len() / 2;
        let (x, v) = y.split_at(half);
        let (dx, dv) = out.split_at_mut(half);
        dx.copy_from_slice(v);
        velocity_drift_into(self.params, x, v, dv);
    }

    fn diffusion(&self, y: &[f64], out: &mut [f64]) {
        let half = y.len() / 2;
        let (gx, gv) = out.split_at_mut(half);
        gx.iter_mut().for_each(|c| *c = 0.0);
        diffusion_into(self.params, &y[half..], gv);
    }
}

/// Reusable stepping buffers for one realization.
pub struct Stepper {
    scheme: Scheme,
    dt: f64,
    f: Vec<f64>,
    g: Vec<f64>,
    k1: Vec<f64>,
    stage: Vec<f64>,
}

impl Stepper {
    pub fn new(dimension: usize, scheme: Scheme, dt: f64) -> Self {
        Stepper {
            scheme,
            dt,
            f: vec![0.0; dimension],
            g: vec![0.0; dimension],
            k1: vec![0.0; dimension],
            stage: vec![0.0; dimension],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Draws the step's noise and advances `y` in place.
    pub fn step<S: ScalarNoiseSde, R: Rng + ?Sized>(&mut self, sde: &S, y: &mut [f64], rng: &mut R) {
        let dw = self.dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
        match self.scheme {
            Scheme::ImprovedEm => {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                self.step_improved(sde, y, dw, s);
            }
            Scheme::EulerMaruyama => self.step_euler(sde, y, dw),
        }
    }

    /// Improved Euler–Maruyama with the given increment and sign.
    pub fn step_improved<S: ScalarNoiseSde>(&mut self, sde: &S, y: &mut [f64], dw: f64, s: f64) {
        let h = self.dt;
        let sqrt_h = h.sqrt();
        sde.drift(y, &mut self.f);
        sde.diffusion(y, &mut self.g);
        let w1 = dw - s * sqrt_h;
        for i in 0..y.len() {
            self.k1[i] = self.f[i] * h + self.g[i] * w1;
            self.stage[i] = y[i] + self.k1[i];
        }
        sde.drift(&self.stage, &mut self.f);
        sde.diffusion(&self.stage, &mut self.g);
        let w2 = dw + s * sqrt_h;
        for i in 0..y.len() {
            let k2 = self.f[i] * h + self.g[i] * w2;
            y[i] += 0.5 * (self.k1[i] + k2);
        }
    }

    pub fn step_euler<S: ScalarNoiseSde>(&mut self, sde: &S, y: &mut [f64], dw: f64) {
        sde.drift(y, &mut self.f);
        sde.diffusion(y, &mut self.g);
        for i in 0..y.len() {
            y[i] += self.f[i] * self.dt + self.g[i] * dw;
        }
    }
}

/// Steps one realization of the flocking system on the grid `t0 + k dt`.
pub struct SwarmIntegrator<'a> {
    sde: SwarmSde<'a>,
    stepper: Stepper,
    y: Vec<f64>,
    t0: f64,
    steps: u64,
}

impl<'a> SwarmIntegrator<'a> {
    pub fn new(params: &'a ModelParams, initial: &SwarmState, cfg: &StepperConfig) -> Result<Self> {
        cfg.validate()?;
        if initial.n_agents != params.n_agents || initial.dim != params.dim {
            return Err(Error::Dimension("initial state does not match model".into()));
        }
        if !initial.is_finite() {
            return Err(Error::BlowUp { time: initial.t });
        }
        let sde = SwarmSde { params };
        let mut y = Vec::with_capacity(sde.dimension());
        y.extend_from_slice(&initial.x);
        y.extend_from_slice(&initial.v);
        let stepper = Stepper::new(y.len(), cfg.scheme, cfg.dt);
        Ok(SwarmIntegrator { sde, stepper, y, t0: initial.t, steps: 0 })
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.stepper.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn positions(&self) -> &[f64] {
        &self.y[..self.y.len() / 2]
    }

    pub fn velocities(&self) -> &[f64] {
        &self.y[self.y.len() / 2..]
    }

    pub fn state(&self) -> SwarmState {
        let half = self.y.len() / 2;
        SwarmState {
            n_agents: self.sde.params.n_agents,
            dim: self.sde.params.dim,
            x: self.y[..half].to_vec(),
            v: self.y[half..].to_vec(),
            t: self.time(),
        }
    }

    /// One step; a non-finite coordinate aborts with the time it appeared.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.stepper.step(&self.sde, &mut self.y, rng);
        self.steps += 1;
        if self.y.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::BlowUp { time: self.time() })
        }
    }
}

/// Maps requested times to step indices on the `dt` grid, snapping
/// off-grid times to the nearest node with a warning.
pub fn grid_indices(t0: f64, dt: f64, times: &[f64]) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= t0) {
            return Err(Error::InvalidParams(format!("sample time {t} precedes start time {t0}")));
        }
        let k = ((t - t0) / dt).round();
        let snapped = t0 + k * dt;
        if (snapped - t).abs() > 1e-9 * t.abs().max(1.0) {
            log::warn!("sample time {t} is not a multiple of dt = {dt}; snapped to {snapped}");
        }
        let k = k as u64;
        if out.last().is_some_and(|&prev| k < prev) {
            return Err(Error::InvalidParams("sample times must be sorted".into()));
        }
        out.push(k);
    }
    Ok(out)
}

/// Integrates one realization to `t_end`, returning the states at
/// `sample_times` (snapped to the grid). The noise comes from `rng` only.
pub fn integrate<R: Rng + ?Sized>(
    params: &ModelParams,
    initial: &SwarmState,
    cfg: &StepperConfig,
    t_end: f64,
    sample_times: &[f64],
    rng: &mut R,
) -> Result<Vec<SwarmState>> {
    cfg.validate()?;
    let indices = grid_indices(initial.t, cfg.dt, sample_times)?;
    let last = grid_indices(initial.t, cfg.dt, &[t_end])?[0];
    if indices.last().is_some_and(|&k| k > last) {
        return Err(Error::InvalidParams("sample time beyond t_end".into()));
    }
    let mut integrator = SwarmIntegrator::new(params, initial, cfg)?;
    let mut samples = Vec::with_capacity(indices.len());
    let mut next = indices.iter().peekable();
    loop {
        while next.next_if(|&&k| k == integrator.steps_taken()).is_some() {
            samples.push(integrator.state());
        }
        if integrator.steps_taken() >= last {
            break;
        }
        integrator.advance(rng)?;
    }
    Ok(samples)
}
