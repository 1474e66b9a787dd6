//! Adiabatic preparation of |ξ=1⟩, spectral gap analysis of the sweep
//! Hamiltonian, exact scar revivals, and magnetization projection.
//!
//! H_X, H_P and every H(s) commute with Z on both boundary sites, and the
//! sweep starts with both boundaries in |0⟩, so evolution and spectra are
//! computed in that `2^{N−2}`-dimensional sector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::hamiltonians::{build_hp, build_hx, scar_energy, SparseOperator};
use crate::linalg::{expm_krylov, lanczos_lowest, norm};
use crate::qsim::Statevector;
use crate::refstates::{count_constrained, normalization_z, xi_state};

/// Full-register dimension up to which the dense eigen-step is used.
pub const DENSE_MAX_DIM: usize = 1024;
/// Largest chain handled by the Krylov path.
pub const MAX_SWEEP_SITES: usize = 16;
/// Per-step Krylov error target.
pub const KRYLOV_TOL: f64 = 1e-8;
/// Largest Krylov subspace before a step is split.
pub const KRYLOV_MAX_DIM: usize = 30;
/// Tolerance of the gap eigensolver.
pub const LANCZOS_TOL: f64 = 1e-9;
/// Thermodynamic-limit gap of H_P.
pub fn reference_gap() -> f64 {
    1.0 - 1.0 / 2f64.sqrt()
}

/// Basis indices with both boundary qubits clear.
pub fn boundary_sector(n: usize) -> Vec<usize> {
    let edges = 1usize | 1usize << (n - 1);
    (0..1usize << n).filter(|x| x & edges == 0).collect()
}

fn check_sweep_size(n: usize) -> Result<()> {
    if !(4..=MAX_SWEEP_SITES).contains(&n) {
        return invalid(format!("sweep needs 4 <= N <= {MAX_SWEEP_SITES}, got {n}"));
    }
    Ok(())
}

/// H_X and H_P restricted to the boundary sector.
struct SweepOperators {
    basis: Vec<usize>,
    hx: SparseOperator,
    hp: SparseOperator,
}

impl SweepOperators {
    fn new(n: usize) -> Result<Self> {
        let basis = boundary_sector(n);
        let hx = build_hx(n)?.restrict(&basis)?;
        let hp = build_hp(n)?.restrict(&basis)?;
        Ok(Self { basis, hx, hp })
    }

    fn dense(&self, a: f64, b: f64) -> DMatrix<f64> {
        let d = self.basis.len();
        let mut m = DMatrix::zeros(d, d);
        for (r, c, v) in self.hx.entries() {
            m[(r, c)] += a * v.re;
        }
        for (r, c, v) in self.hp.entries() {
            m[(r, c)] += b * v.re;
        }
        m
    }

    fn matvec(&self, a: f64, b: f64, x: &[C64]) -> Vec<C64> {
        let y1 = self.hx.apply(x);
        let y2 = self.hp.apply(x);
        y1.iter().zip(&y2).map(|(p, q)| p * a + q * b).collect()
    }

    fn embed(&self, n: usize, v: &[C64]) -> Result<Statevector> {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        for (&x, a) in self.basis.iter().zip(v) {
            amps[x] = *a;
        }
        Statevector::from_amplitudes(amps)
    }

    fn restrict(&self, s: &Statevector) -> Vec<C64> {
        self.basis.iter().map(|&x| s.amplitude(x)).collect()
    }
}

/// |0⟩ ⊗ |+−+−…⟩ ⊗ |0⟩, the zero-energy ground state of H_X.
pub fn paramagnet_ground_state(n: usize) -> Result<Statevector> {
    if n < 3 {
        return invalid("paramagnet needs N >= 3");
    }
    let h = 1.0 / 2f64.sqrt();
    let mut state = Statevector::zero_state(1)?;
    for i in 2..n {
        // X_i = (−1)^i: |+⟩ on even sites, |−⟩ on odd sites
        let sign = if i % 2 == 0 { h } else { -h };
        state = state.kron(&Statevector::from_real(&[h, sign])?)?;
    }
    state.kron(&Statevector::zero_state(1)?)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepConfig {
    pub n: usize,
    pub total_time: f64,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Dense,
    Krylov,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub n: usize,
    pub total_time: f64,
    pub steps: usize,
    pub backend: Backend,
    /// |⟨ψ(T)|ξ=1⟩|, not squared.
    pub fidelity: f64,
    /// Largest per-step deviation of the norm from one.
    pub max_step_norm_drift: f64,
    pub final_norm_drift: f64,
    #[serde(skip)]
    pub state: Statevector,
}

/// Piecewise-constant evolution with U(s, s+δs) = exp(−i δs H(s)) at
/// s = n δs, starting from the H_X ground state.
pub fn adiabatic_evolve(cfg: &SweepConfig) -> Result<SweepResult> {
    let n = cfg.n;
    check_sweep_size(n)?;
    if cfg.steps == 0 || !(cfg.total_time >= 0.0 && cfg.total_time.is_finite()) {
        return invalid("sweep needs steps >= 1 and a finite T >= 0");
    }
    let ops = SweepOperators::new(n)?;
    let target = xi_state(n, C64::new(1.0, 0.0))?;
    let backend = if 1usize << n <= DENSE_MAX_DIM { Backend::Dense } else { Backend::Krylov };
    let mut v = ops.restrict(&paramagnet_ground_state(n)?);
    let mut max_drift: f64 = 0.0;
    if cfg.total_time > 0.0 {
        let ds = cfg.total_time / cfg.steps as f64;
        for step in 0..cfg.steps {
            let w = step as f64 * ds / cfg.total_time;
            let (a, b) = (1.0 - w, w);
            let before = norm(&v);
            v = match backend {
                Backend::Dense => dense_step(&ops.dense(a, b), &v, ds),
                Backend::Krylov => krylov_step(&|x: &[C64]| ops.matvec(a, b, x), &v, ds, step)?,
            };
            max_drift = max_drift.max((norm(&v) - before).abs());
        }
    }
    let state = ops.embed(n, &v)?;
    let fidelity = state.inner_product(&target)?.norm();
    let final_norm_drift = (state.norm_sqr().sqrt() - 1.0).abs();
    Ok(SweepResult {
        n,
        total_time: cfg.total_time,
        steps: cfg.steps,
        backend,
        fidelity,
        max_step_norm_drift: max_drift,
        final_norm_drift,
        state,
    })
}

fn dense_step(h: &DMatrix<f64>, v: &[C64], dt: f64) -> Vec<C64> {
    let eig = SymmetricEigen::new(h.clone());
    let u = &eig.eigenvectors;
    let d = v.len();
    // c = Uᵀ v, scaled by phases, then back
    let mut c = vec![C64::new(0.0, 0.0); d];
    for (i, ci) in c.iter_mut().enumerate() {
        let proj: C64 = (0..d).map(|r| v[r] * u[(r, i)]).sum();
        *ci = proj * C64::from_polar(1.0, -dt * eig.eigenvalues[i]);
    }
    (0..d).map(|r| (0..d).map(|i| c[i] * u[(r, i)]).sum()).collect()
}

fn krylov_step<F: Fn(&[C64]) -> Vec<C64>>(matvec: &F, v: &[C64], dt: f64, step: usize) -> Result<Vec<C64>> {
    let mut pieces = 1usize;
    while pieces <= 64 {
        let sub = dt / pieces as f64;
        let tol = KRYLOV_TOL / pieces as f64;
        let mut w = v.to_vec();
        let mut ok = true;
        for _ in 0..pieces {
            match expm_krylov(matvec, &w, sub, tol, KRYLOV_MAX_DIM) {
                Some(next) => w = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(w);
        }
        pieces *= 2;
    }
    Err(Error::Convergence { step, message: "Krylov propagator did not reach its tolerance".into() })
}

/// Smallest grid time `T` with fidelity ≥ `target`, refined by bisection to
/// within 0.5. Grid spacing 5 up to `t_max`.
pub fn find_tstar(n: usize, target: f64, steps: usize, t_max: f64) -> Result<f64> {
    if target <= 0.0 {
        return Ok(0.0);
    }
    let fid = |t: f64| -> Result<f64> {
        Ok(adiabatic_evolve(&SweepConfig { n, total_time: t, steps })?.fidelity)
    };
    if fid(0.0)? >= target {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = None;
    let mut t = 5.0;
    while t <= t_max + 1e-9 {
        if fid(t)? >= target {
            hi = Some(t);
            break;
        }
        lo = t;
        t += 5.0;
    }
    let Some(mut hi) = hi else {
        return Err(Error::NoBracket(format!("fidelity {target} not reached for T <= {t_max}")));
    };
    while hi - lo > 1.0 {
        let mid = 0.5 * (lo + hi);
        if fid(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapSample {
    pub s_over_t: f64,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    /// Number of eigenvalues within 1e−8 of the ground energy (dense path
    /// only; the Lanczos path reports 1).
    pub ground_multiplicity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapCurve {
    pub n: usize,
    pub samples: Vec<GapSample>,
    pub min_index: usize,
    pub min_s_over_t: f64,
    pub min_gap: f64,
}

impl GapCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s_over_t,gap,e0,e1\n");
        for s in &self.samples {
            out.push_str(&format!("{:?},{:?},{:?},{:?}\n", s.s_over_t, s.gap, s.e0, s.e1));
        }
        out
    }
}

fn lanczos_start(d: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca7);
    (0..d).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect()
}

/// Two lowest eigenvalues of H(s) = (1−w)H_X + w H_P in the boundary sector.
fn lowest_pair(ops: &SweepOperators, w: f64) -> Result<(f64, f64, usize)> {
    let (a, b) = (1.0 - w, w);
    let d = ops.basis.len();
    if d <= DENSE_MAX_DIM / 4 {
        let mut vals = SymmetricEigen::new(ops.dense(a, b)).eigenvalues.as_slice().to_vec();
        vals.sort_by(f64::total_cmp);
        let mult = vals.iter().filter(|&&e| e - vals[0] < 1e-8).count();
        return Ok((vals[0], vals[1], mult));
    }
    let vals = lanczos_lowest(|x| ops.matvec(a, b, x), &lanczos_start(d), 2, LANCZOS_TOL, d.min(400))?;
    Ok((vals[0], vals[1], 1))
}

/// Gap samples at `points` evenly spaced values of s/T in [0, 1].
pub fn gap_scan(n: usize, points: usize) -> Result<GapCurve> {
    check_sweep_size(n)?;
    if points < 2 {
        return invalid("gap scan needs at least two points");
    }
    let ops = SweepOperators::new(n)?;
    let samples: Vec<GapSample> = (0..points)
        .into_par_iter()
        .map(|i| {
            let w = i as f64 / (points - 1) as f64;
            let (e0, e1, mult) = lowest_pair(&ops, w)?;
            Ok(GapSample { s_over_t: w, e0, e1, gap: e1 - e0, ground_multiplicity: mult })
        })
        .collect::<Result<_>>()?;
    let (min_index, min) = samples
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.gap.total_cmp(&b.1.gap))
        .map(|(i, s)| (i, *s))
        .expect("at least two samples");
    Ok(GapCurve { n, samples, min_index, min_s_over_t: min.s_over_t, min_gap: min.gap })
}

/// Gap of H_P (s = T) in the boundary sector.
pub fn final_gap(n: usize) -> Result<f64> {
    check_sweep_size(n)?;
    let (e0, e1, _) = lowest_pair(&SweepOperators::new(n)?, 1.0)?;
    Ok(e1 - e0)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapFit {
    pub ns: Vec<usize>,
    pub gaps: Vec<f64>,
    /// c₀ + c₁/N + c₂/N².
    pub coefficients: [f64; 3],
    pub intercept: f64,
}

/// Least-squares quadratic fit of the s = T gap in 1/N.
pub fn gap_extrapolate(ns: &[usize]) -> Result<GapFit> {
    if ns.len() < 3 {
        return invalid("quadratic fit needs at least three sizes");
    }
    let gaps: Vec<f64> = ns.par_iter().map(|&n| final_gap(n)).collect::<Result<_>>()?;
    let a = DMatrix::from_fn(ns.len(), 3, |r, c| (1.0 / ns[r] as f64).powi(c as i32));
    let y = DVector::from_column_slice(&gaps);
    let coef = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Convergence { step: 0, message: e.to_string() })?;
    Ok(GapFit { ns: ns.to_vec(), gaps, coefficients: [coef[0], coef[1], coef[2]], intercept: coef[0] })
}

/// π / (Δ + 2J).
pub fn revival_period(delta: f64, j: f64) -> f64 {
    std::f64::consts::PI / (delta + 2.0 * j)
}

/// |⟨ξ|e^{−iH₀t}|ξ⟩| from the tower weights |c_k|² = |ξ|^{2k} 𝒩(N,k) / Z.
pub fn revival_fidelity(n: usize, xi: C64, delta: f64, j: f64, t: f64) -> Result<f64> {
    if n < 4 {
        return invalid("revivals need N >= 4");
    }
    let z = normalization_z(n, xi.norm_sqr());
    let mut amp = C64::new(0.0, 0.0);
    for k in 0..n {
        let count = count_constrained(n, k);
        if count == 0 {
            break;
        }
        let weight = xi.norm_sqr().powi(k as i32) * count as f64 / z;
        amp += C64::from_polar(weight, -scar_energy(n, k, delta, j) * t);
    }
    Ok(amp.norm())
}

/// Keeps the M_z = N − 2k component and renormalizes. Returns the state and
/// the Born probability of that outcome.
pub fn project_magnetization(state: &Statevector, k: usize) -> Result<(Statevector, f64)> {
    let n = state.n_qubits();
    if k > n {
        return invalid(format!("k={k} exceeds {n} qubits"));
    }
    let amps: Vec<C64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(x, &a)| if x.count_ones() as usize == k { a } else { C64::new(0.0, 0.0) })
        .collect();
    let out = Statevector::from_amplitudes(amps)?;
    let p = out.norm_sqr();
    if p < crate::qsim::ZERO_PROBABILITY {
        return Err(Error::EmptySupport(format!("magnetization sector k={k} has zero probability")));
    }
    Ok((out.normalized()?, p))
}
