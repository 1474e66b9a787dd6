//! Multi-start local optimization of the staircase ansatz.
//!
//! The objective 1 − |⟨ψ(θ)|S̃_k⟩|² is evaluated in the `𝒩(N, k)`-dimensional
//! constrained sector, where every gate is a set of real 2×2 rotations on
//! pairs of basis strings. Gradients come from a reverse (adjoint) sweep.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::ansatz::{build_ansatz, AnsatzSpec};
use crate::error::{invalid, Result};
use crate::refstates::scar_support;

/// Rotation pairs `(a, b)` of one gate: `a` has the middle pair at 01, `b` at 10.
type PairList = Vec<(u32, u32)>;

/// Ansatz restricted to the constrained weight-k sector.
#[derive(Clone, Debug)]
pub struct SectorAnsatz {
    pub spec: AnsatzSpec,
    basis: Vec<usize>,
    gates: Vec<PairList>,
    initial: usize,
}

impl SectorAnsatz {
    pub fn new(spec: AnsatzSpec) -> Result<Self> {
        let n = spec.n;
        let basis = scar_support(n, spec.k);
        let index = |x: usize| basis.binary_search(&x).ok();
        let bitmask = |q: usize| 1usize << (n - 1 - q);
        let gates = spec
            .gate_sequence()
            .iter()
            .map(|&j| {
                let (a, p, q, b) = (bitmask(j - 1), bitmask(j), bitmask(j + 1), bitmask(j + 2));
                basis
                    .iter()
                    .filter(|&&x| x & (a | b | p) == 0 && x & q != 0)
                    .map(|&x| {
                        let y = (x & !q) | p;
                        (index(x).unwrap() as u32, index(y).expect("rotation leaves the sector") as u32)
                    })
                    .collect()
            })
            .collect();
        let init_bits = spec.initial_ones().iter().fold(0usize, |acc, &q| acc | bitmask(q));
        let initial = index(init_bits).expect("initial state lies in the sector");
        Ok(Self { spec, basis, gates, initial })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Sector basis strings (ascending basis indices of the full register).
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// ψ(θ) in sector coordinates.
    pub fn forward(&self, theta: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[self.initial] = 1.0;
        for (pairs, &t) in self.gates.iter().zip(theta) {
            rotate(&mut v, pairs, t);
        }
        v
    }

    /// Infidelity against the uniform positive superposition.
    pub fn infidelity(&self, theta: &[f64]) -> f64 {
        let v = self.forward(theta);
        let o: f64 = v.iter().sum::<f64>() / (self.dim() as f64).sqrt();
        (1.0 - o * o).max(0.0)
    }

    /// Infidelity and its gradient by one forward and one reverse sweep.
    pub fn infidelity_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let d = self.dim();
        let norm = (d as f64).sqrt();
        let mut psi = self.forward(theta);
        let o: f64 = psi.iter().sum::<f64>() / norm;
        let mut lambda = vec![1.0 / norm; d];
        let mut grad = vec![0.0; theta.len()];
        for (g, (pairs, &t)) in self.gates.iter().zip(theta).enumerate().rev() {
            rotate(&mut psi, pairs, -t);
            let (s, c) = t.sin_cos();
            // derivative of [[c, −s], [s, c]] is [[−s, −c], [c, −s]]
            let mut d_o = 0.0;
            for &(a, b) in pairs {
                let (va, vb) = (psi[a as usize], psi[b as usize]);
                d_o += lambda[a as usize] * (-s * va - c * vb) + lambda[b as usize] * (c * va - s * vb);
            }
            grad[g] = -2.0 * o * d_o;
            rotate(&mut lambda, pairs, -t);
        }
        ((1.0 - o * o).max(0.0), grad)
    }

    /// Central finite-difference gradient, kept as an independent check.
    pub fn finite_difference_gradient(&self, theta: &[f64], h: f64) -> Vec<f64> {
        let mut t = theta.to_vec();
        (0..theta.len())
            .map(|i| {
                t[i] = theta[i] + h;
                let up = self.infidelity(&t);
                t[i] = theta[i] - h;
                let down = self.infidelity(&t);
                t[i] = theta[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }
}

fn rotate(v: &mut [f64], pairs: &[(u32, u32)], t: f64) {
    let (s, c) = t.sin_cos();
    for &(a, b) in pairs {
        let (va, vb) = (v[a as usize], v[b as usize]);
        v[a as usize] = c * va - s * vb;
        v[b as usize] = s * va + c * vb;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    Adjoint,
    FiniteDifference,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Stop launching restarts once the best infidelity drops below this.
    pub stop_below: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Restarts evaluated together between early-exit checks. Fixed so the
    /// set of restarts run does not depend on the thread count.
    pub batch: usize,
    pub gradient: GradientMethod,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            restarts: 2000,
            seed: 0,
            stop_below: 1e-12,
            max_iters: 2000,
            grad_tol: 1e-12,
            batch: 32,
            gradient: GradientMethod::Adjoint,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartResult {
    pub index: usize,
    pub infidelity: f64,
    pub iterations: usize,
    #[serde(skip)]
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizeReport {
    pub n: usize,
    pub k: usize,
    pub n_params: usize,
    pub sector_dim: usize,
    pub seed: u64,
    pub restarts_run: usize,
    pub best_restart: usize,
    pub best_infidelity: f64,
    pub best_theta: Vec<f64>,
    /// Final infidelity of every restart, by restart index.
    pub infidelities: Vec<f64>,
}

impl OptimizeReport {
    /// CSV histogram over log₁₀(infidelity), one row per decade.
    pub fn histogram_csv(&self) -> String {
        let mut bins = std::collections::BTreeMap::new();
        for &f in &self.infidelities {
            let decade = if f <= 0.0 { -17 } else { f.log10().floor().max(-17.0) as i32 };
            *bins.entry(decade).or_insert(0usize) += 1;
        }
        let mut out = String::from("log10_infidelity_lower,log10_infidelity_upper,count\n");
        for (d, c) in bins {
            out.push_str(&format!("{},{},{}\n", d, d + 1, c));
        }
        out
    }
}

/// Uniform starting angles for restart `index`; independent of scheduling.
pub fn restart_angles(seed: u64, index: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..n).map(|_| rng.random_range(0.0..TAU)).collect()
}

fn wrap(theta: &mut [f64]) {
    for t in theta {
        *t = t.rem_euclid(TAU);
    }
}

/// One BFGS descent with Armijo backtracking from `theta0`.
pub fn local_minimize(ansatz: &SectorAnsatz, theta0: Vec<f64>, cfg: &OptimizeConfig) -> (Vec<f64>, f64, usize) {
    let n = theta0.len();
    let eval = |t: &[f64]| -> (f64, Vec<f64>) {
        match cfg.gradient {
            GradientMethod::Adjoint => ansatz.infidelity_and_gradient(t),
            GradientMethod::FiniteDifference => (ansatz.infidelity(t), ansatz.finite_difference_gradient(t, 1e-6)),
        }
    };
    let mut theta = theta0;
    let (mut f, mut g) = eval(&theta);
    let mut h_inv = identity(n);
    let floor = cfg.stop_below * 1e-3;
    let mut iters = 0;
    while iters < cfg.max_iters {
        if f <= floor || norm(&g) < cfg.grad_tol {
            break;
        }
        iters += 1;
        let mut dir: Vec<f64> = mat_vec(&h_inv, &g).iter().map(|x| -x).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            h_inv = identity(n);
            dir = g.iter().map(|x| -x).collect();
            slope = -dot(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let (ft, gt) = eval(&trial);
            if ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((mut trial, ft, gt)) = accepted else {
            if h_inv == identity(n) {
                break;
            }
            h_inv = identity(n);
            continue;
        };
        let s: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-16 {
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        wrap(&mut trial);
        let progress = f - ft;
        theta = trial;
        f = ft;
        g = gt;
        if progress.abs() < 1e-18 && f > floor {
            break;
        }
    }
    (theta, f, iters)
}

/// Runs up to `cfg.restarts` restarts in fixed-size parallel batches and keeps
/// the best by (infidelity, restart index).
pub fn optimize_ansatz(n: usize, k: usize, cfg: &OptimizeConfig) -> Result<OptimizeReport> {
    if cfg.restarts == 0 || cfg.batch == 0 {
        return invalid("need at least one restart and a positive batch size");
    }
    let spec = build_ansatz(n, k)?;
    let ansatz = SectorAnsatz::new(spec)?;
    let n_params = ansatz.spec.n_params();
    let mut results: Vec<RestartResult> = Vec::new();
    let mut next = 0;
    while next < cfg.restarts {
        let end = (next + cfg.batch).min(cfg.restarts);
        let batch: Vec<RestartResult> = (next..end)
            .into_par_iter()
            .map(|index| {
                let start = restart_angles(cfg.seed, index, n_params);
                let (theta, infidelity, iterations) = local_minimize(&ansatz, start, cfg);
                RestartResult { index, infidelity, iterations, theta }
            })
            .collect();
        results.extend(batch);
        next = end;
        if results.iter().any(|r| r.infidelity < cfg.stop_below) {
            break;
        }
    }
    let best = results
        .iter()
        .min_by(|a, b| a.infidelity.total_cmp(&b.infidelity).then(a.index.cmp(&b.index)))
        .expect("at least one restart ran");
    Ok(OptimizeReport {
        n,
        k,
        n_params,
        sector_dim: ansatz.dim(),
        seed: cfg.seed,
        restarts_run: results.len(),
        best_restart: best.index,
        best_infidelity: best.infidelity,
        best_theta: best.theta.clone(),
        infidelities: results.iter().map(|r| r.infidelity).collect(),
    })
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|r| dot(&m[r * n..(r + 1) * n], v)).collect()
}

/// H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    for r in 0..n {
        for c in 0..n {
            h[r * n + c] += -rho * (hy[r] * s[c] + s[r] * hy[c]) + (rho * rho * yhy + rho) * s[r] * s[c];
        }
    }
}
