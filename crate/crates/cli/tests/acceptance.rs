//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use flocknet_cli::{load_experiment, simulate, Overrides, SimulationResult};
use flocknet_core::config::{pi_config, RunConfig};
use flocknet_core::ensemble::{
    budget_check, decay_check, initial_ensemble, lyapunov_check, sandwich_check, trend_bounded,
};
use flocknet_core::integrator::{ScalarNoiseSde, Stepper, SwarmIntegrator};
use flocknet_core::model::{self, analysis_constants, DEFAULT_BETA_MARGIN};
use flocknet_core::rng::stream_rng;
use flocknet_core::{ComplementConvention, Family, Graph, Scheme, StepperConfig};

struct Gate {
    failed: usize,
}

impl Gate {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn random_connected(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (2..=n).map(|k| (rng.random_range(1..k), k)).collect();
    let density: f64 = rng.random_range(0.0..0.5);
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.random_bool(density) {
                pairs.push((i, j));
            }
        }
    }
    let perm = {
        let mut p: Vec<usize> = (1..=n).collect();
        for i in (1..n).rev() {
            p.swap(i, rng.random_range(0..=i));
        }
        p
    };
    pairs.into_iter().map(|(i, j)| (perm[i - 1], perm[j - 1])).collect()
}

fn floyd_warshall(n: usize, arcs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(i, j) in arcs {
        d[i][j] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    d
}

fn tabulated(family: Family, n: usize) -> (usize, usize) {
    let h = n.div_ceil(10);
    match family {
        Family::G0 => (n * (n - 1), 1),
        Family::G1 => (8 * n - 22, 2),
        Family::G2 => (2 * (n - 1), n - 1),
        Family::G3 => (2 * n, n / 2),
        Family::G4 => (2 * n * h + 2 * n - h * h - 5 * h + if n % 10 == 1 { 2 } else { 0 }, 2),
    }
}

fn criterion_1(gate: &mut Gate) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=50);
        let g = Graph::from_undirected(n, random_connected(&mut rng, n)).unwrap();
        let dist = floyd_warshall(n, g.arcs());
        let diameter = dist.iter().flatten().copied().max().unwrap();
        let connected = dist.iter().flatten().all(|&d| d < usize::MAX / 4);
        let mut degree = vec![0; n];
        g.arcs().iter().for_each(|&(i, _)| degree[i] += 1);
        let max_degree = degree.into_iter().max().unwrap();
        if g.diameter().ok() != Some(diameter) || g.is_connected() != connected || g.max_degree() != max_degree {
            mismatches += 1;
        }
    }
    let mut table_misses = Vec::new();
    for n in [10, 30, 40, 50, 150] {
        for family in [Family::G0, Family::G1, Family::G2, Family::G3, Family::G4] {
            let g = Graph::family(family, n).unwrap();
            if (g.n_arcs(), g.diameter().unwrap()) != tabulated(family, n) {
                table_misses.push(format!("{family:?}({n})"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    gate.record(
        1,
        "graph oracle",
        mismatches == 0 && table_misses.is_empty() && secs < 10.0,
        format!("{mismatches}/200 oracle mismatches, table misses {table_misses:?}, {secs:.2} s"),
    );
}

fn criterion_2(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=3);
        let g = Graph::from_undirected(n, random_connected(&mut rng, n)).unwrap();
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-100.0..100.0)).collect();
        let sq = |i: usize, j: usize| (0..d).map(|k| (x[i * d + k] - x[j * d + k]).powi(2)).sum::<f64>();
        let full: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| sq(i, j)).sum();
        let edges: f64 = g.arcs().iter().map(|&(i, j)| sq(i, j)).sum();
        for conv in [ComplementConvention::WithDiagonal, ComplementConvention::OffDiagonal] {
            let l = g.connectivity_constant(conv).unwrap().value();
            if l * full > edges * (1.0 + 1e-12) {
                violations += 1;
            }
            tightest = tightest.min(edges / (l * full));
        }
    }
    gate.record(
        2,
        "edge-sum inequality",
        violations == 0,
        format!("{violations} violations in 1000 checks, min edge/(L full) ratio {tightest:.3}"),
    );
}

fn criterion_3(gate: &mut Gate) {
    let start = Instant::now();
    let base = pi_config().resolve(Path::new(".")).unwrap().params;
    let n = base.n_agents;
    let cases = [
        (Family::G0, Family::G0, 9.50655e3),
        (Family::G0, Family::G1, 4.18548e5),
        (Family::G2, Family::G0, 7.72684e6),
        (Family::G2, Family::G1, 3.40218e8),
    ];
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    let mut negative_control = f64::NAN;
    for (psi_b, phi, tabulated) in cases {
        let mut params = base.clone();
        params.g_psi = Graph::family(psi_b, n).unwrap();
        params.g_b = params.g_psi.clone();
        params.g_phi = Graph::family(phi, n).unwrap();
        let with = analysis_constants(&params, ComplementConvention::WithDiagonal, None, DEFAULT_BETA_MARGIN).unwrap();
        let rel = (with.beta_min - tabulated).abs() / tabulated;
        worst = worst.max(rel);
        details.push(format!(
            "{psi_b:?}/{phi:?} {:.5e} ({:+.2}%)",
            with.beta_min,
            100.0 * (with.beta_min / tabulated - 1.0)
        ));
        if (psi_b, phi) == (Family::G0, Family::G0) {
            negative_control =
                analysis_constants(&params, ComplementConvention::OffDiagonal, None, DEFAULT_BETA_MARGIN)
                    .map_or(f64::INFINITY, |a| tabulated / a.beta_min);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    gate.record(
        3,
        "beta calibration",
        worst <= 0.05 && negative_control >= 100.0 && secs < 1.0,
        format!("{}; off_diagonal G0/G0 off by factor {negative_control:.0}; {secs:.3} s", details.join(", ")),
    );
}

fn criterion_4(gate: &mut Gate) {
    let exp = pi_config().resolve(Path::new(".")).unwrap();
    let initial = initial_ensemble(&exp.params, &exp.ensemble).unwrap().swap_remove(0);
    let cfg = StepperConfig::default();
    let mut integrator = SwarmIntegrator::new(&exp.params, &initial, &cfg).unwrap();
    let mut rng = stream_rng(cfg.seed, 0);
    let d = exp.params.dim;
    let sums = |v: &[f64]| (0..d).map(|k| v.iter().skip(k).step_by(d).sum::<f64>()).collect::<Vec<_>>();
    let abs_sum = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let x0 = initial.mean_position();
    let v0 = initial.mean_velocity();
    let steps = (35.0 / cfg.dt).round() as usize;
    let (mut worst_momentum, mut worst_center) = (0.0f64, 0.0f64);
    let mut before = sums(integrator.velocities());
    for _ in 0..steps {
        let prev: Vec<f64> = integrator.velocities().to_vec();
        integrator.advance(&mut rng).unwrap();
        let v = integrator.velocities();
        let update: f64 = v.iter().zip(&prev).map(|(a, b)| (a - b).abs()).sum();
        let scale = abs_sum(&prev).max(abs_sum(v)) + update;
        let after = sums(v);
        for k in 0..d {
            worst_momentum = worst_momentum.max((after[k] - before[k]).abs() / scale);
        }
        before = after;
        let t = integrator.time();
        let x = model::row_mean(integrator.positions(), d);
        for k in 0..d {
            worst_center = worst_center.max((x[k] - x0[k] - v0[k] * t).abs());
        }
    }
    gate.record(
        4,
        "conservation",
        worst_momentum <= 1e-12 && worst_center <= 1e-8,
        format!("max per-step relative momentum drift {worst_momentum:.2e}, max center drift {worst_center:.2e} over {steps} steps"),
    );
}

struct Gbm;

impl ScalarNoiseSde for Gbm {
    fn dimension(&self) -> usize {
        1
    }
    fn drift(&self, y: &[f64], out: &mut [f64]) {
        out[0] = 1.5 * y[0];
    }
    fn diffusion(&self, y: &[f64], out: &mut [f64]) {
        out[0] = y[0];
    }
}

/// `dY = f(Y) dt` with a nonlinear drift.
struct Logistic;

impl ScalarNoiseSde for Logistic {
    fn dimension(&self) -> usize {
        2
    }
    fn drift(&self, y: &[f64], out: &mut [f64]) {
        out[0] = y[0] * (1.0 - y[0]) - y[1];
        out[1] = y[0].sin() * y[1];
    }
    fn diffusion(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

fn criterion_5(gate: &mut Gate) {
    let start = Instant::now();
    let levels = [6u32, 7, 8, 9, 10];
    let n_fine = 1usize << 10;
    let h_fine = 1.0 / n_fine as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut errors = vec![0.0; levels.len()];
    for _ in 0..200 {
        let dws: Vec<f64> = (0..n_fine).map(|_| h_fine.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
        let exact = (1.0 + dws.iter().sum::<f64>()).exp();
        for (e, &level) in errors.iter_mut().zip(&levels) {
            let n = 1usize << level;
            let chunk = n_fine / n;
            let mut stepper = Stepper::new(1, Scheme::ImprovedEm, 1.0 / n as f64);
            let mut y = [1.0];
            for k in 0..n {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                stepper.step_improved(&Gbm, &mut y, dws[k * chunk..(k + 1) * chunk].iter().sum(), s);
            }
            *e += (y[0] - exact).abs() / 200.0;
        }
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let xs: Vec<f64> = levels.iter().map(|&k| -(k as f64) * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 5.0, ys.iter().sum::<f64>() / 5.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();

    let h = 0.01;
    let mut stepper = Stepper::new(2, Scheme::ImprovedEm, h);
    let mut y = [0.2, 0.5];
    let mut heun_gap = 0.0f64;
    for _ in 0..1000 {
        let f = |y: [f64; 2]| [y[0] * (1.0 - y[0]) - y[1], y[0].sin() * y[1]];
        let k1 = f(y);
        let mid = [y[0] + h * k1[0], y[1] + h * k1[1]];
        let k2 = f(mid);
        let want = [y[0] + 0.5 * h * (k1[0] + k2[0]), y[1] + 0.5 * h * (k1[1] + k2[1])];
        let dw = h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        stepper.step_improved(&Logistic, &mut y, dw, 1.0);
        for k in 0..2 {
            heun_gap = heun_gap.max((y[k] - want[k]).abs() / want[k].abs().max(1.0));
        }
        y = want;
    }
    let secs = start.elapsed().as_secs_f64();
    gate.record(
        5,
        "integrator order",
        monotone && slope >= 0.4 && heun_gap <= 1e-14 && secs < 30.0,
        format!(
            "strong errors [{}], slope {slope:.3}, noiseless gap to Heun {heun_gap:.1e}, {secs:.2} s",
            errors.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")
        ),
    );
}

fn run_config(config: RunConfig, dir: &Path) -> SimulationResult {
    let mut exp = config.resolve(Path::new(".")).unwrap();
    exp.output_dir = dir.to_path_buf();
    simulate(&exp).unwrap()
}

fn sparse_config() -> RunConfig {
    let mut config = pi_config();
    config.model.graph_psi = "G2".into();
    config.model.graph_b = "G2".into();
    config.model.graph_phi = "G0".into();
    config
}

fn criteria_6_to_8(gate: &mut Gate, scratch: &Path) {
    let start = Instant::now();
    let pi = run_config(pi_config(), &scratch.join("pi"));
    let secs = start.elapsed().as_secs_f64();
    let series = &pi.output.series;
    let (first, last) = (&series.points[0], series.points.last().unwrap());
    let kinetic_ratio = last.kinetic.mean / first.kinetic.mean;
    let spread: Vec<f64> = series.points.iter().map(|p| p.max_pair_x).collect();
    let bounded = trend_bounded(&spread);
    gate.record(
        6,
        "flocking",
        kinetic_ratio <= 1e-2 && bounded && pi.complete() && secs < 120.0,
        format!(
            "E|v|^2 ratio {kinetic_ratio:.3e} at t={}, max pair spread final {:.4e} vs initial {:.4e}, bounded {bounded}, R={}, {secs:.1} s",
            last.t, last.max_pair_x, first.max_pair_x, series.n_realizations
        ),
    );

    let sparse = run_config(sparse_config(), &scratch.join("sparse"));
    let mut pass = pi.complete() && sparse.complete();
    let mut parts = Vec::new();
    for (label, run) in [("pi", &pi), ("sparse", &sparse)] {
        let s = &run.output.series;
        let checks = [
            ("J", lyapunov_check(s)),
            ("sandwich", sandwich_check(s)),
            ("decay", decay_check(s)),
            ("budget", budget_check(s)),
        ];
        let tallies: Vec<String> = checks
            .iter()
            .map(|(name, flags)| {
                let ok = flags.iter().filter(|&&b| b).count();
                pass &= ok == flags.len() && !flags.is_empty();
                format!("{name} {ok}/{}", flags.len())
            })
            .collect();
        parts.push(format!("{label}: {}", tallies.join(" ")));
    }
    gate.record(7, "Lyapunov structure", pass, parts.join("; "));

    let pattern_ratio = last.pattern_error.mean / first.pattern_error.mean;
    gate.record(
        8,
        "pattern formation",
        pattern_ratio <= 1e-2,
        format!("E|x - v0_ave t - z|^2 ratio {pattern_ratio:.3e} at t={}", last.t),
    );
}

fn criterion_9(gate: &mut Gate, scratch: &Path) {
    let bin = env!("CARGO_BIN_EXE_flocknet");
    let config_path = scratch.join("pi.toml");
    std::fs::write(&config_path, pi_config().to_toml().unwrap()).unwrap();
    let mut files = Vec::new();
    for k in 0..2 {
        let out = scratch.join(format!("replay{k}"));
        let status = Command::new(bin)
            .args(["simulate", "--config"])
            .arg(&config_path)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "777"])
            .output()
            .expect("run flocknet");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        files.push(std::fs::read(out.join("energies.csv")).unwrap());
    }
    let in_process = {
        let exp = load_experiment(
            Some(&config_path),
            &Overrides { seed: Some(777), out: Some(scratch.join("replay-lib")), ..Overrides::default() },
        )
        .unwrap();
        simulate(&exp).unwrap();
        std::fs::read(scratch.join("replay-lib").join("energies.csv")).unwrap()
    };
    let identical = files[0] == files[1] && files[0] == in_process;
    gate.record(
        9,
        "determinism",
        identical && !files[0].is_empty(),
        format!("two CLI runs and one library run, energies.csv {} bytes, identical {identical}", files[0].len()),
    );
}

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let mut gate = Gate { failed: 0 };
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_3(&mut gate);
    criterion_4(&mut gate);
    criterion_5(&mut gate);
    criteria_6_to_8(&mut gate, scratch.path());
    criterion_9(&mut gate, scratch.path());
    println!("acceptance: {} of 9 criteria failed", gate.failed);
    if gate.failed > 0 {
        std::process::exit(1);
    }
}
