//! Linear-depth preparation of |ξ; m⟩ and the ancilla-stitching protocol that
//! joins independently prepared blocks.
//!
//! Block circuits act on qubits `0..m`. A stitched register holds the `k·m`
//! primary qubits first, followed by the `k − 1` junction ancillas.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::json;

use crate::circuits::{Circuit, Gate};
use crate::error::{invalid, Result};
use crate::qsim::{Statevector, ZERO_PROBABILITY};
use crate::refstates::{apply_fib_projector, fib_big, xi_inner_state};

/// Rotation angles and the auxiliary φ recursion for one block.
#[derive(Clone, Debug, Serialize)]
pub struct AngleSchedule {
    pub m: usize,
    pub xi: f64,
    pub tilde: bool,
    /// θ₁..θ_m in radians.
    pub theta: Vec<f64>,
    /// φ₁..φ_{m+1}.
    pub phi: Vec<f64>,
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi >= 0.0 && xi.is_finite()) {
        return invalid(format!("xi must be finite and >= 0, got {xi}"));
    }
    Ok(())
}

/// φ_{m+1} = 1, φ_j = √(1 + (x_j/φ_{j+1})²), θ_j = 2 arg(1 + i x_j/φ_{j+1}).
pub fn angle_schedule(m: usize, xi: f64, tilde: bool) -> Result<AngleSchedule> {
    if m == 0 {
        return invalid("block length m must be >= 1");
    }
    check_xi(xi)?;
    let mut phi = vec![1.0; m + 1];
    let mut theta = vec![0.0; m];
    for j in (1..=m).rev() {
        let x = if tilde || j % 2 == 1 { xi } else { -xi };
        let t = x / phi[j];
        phi[j - 1] = (1.0 + t * t).sqrt();
        theta[j - 1] = 2.0 * t.atan();
    }
    Ok(AngleSchedule { m, xi, tilde, theta, phi })
}

/// RY(θ₁) on qubit 0 followed by the CRY0 cascade q_{j−1} → q_j.
pub fn build_linear_circuit(m: usize, xi: f64, tilde: bool) -> Result<Circuit> {
    let sched = angle_schedule(m, xi, tilde)?;
    let mut c = Circuit::new(m)
        .with_metadata("name", "xi_linear")
        .with_metadata("m", m)
        .with_metadata("xi", xi)
        .with_metadata("tilde", tilde);
    c.push(Gate::ry(0, sched.theta[0]))?;
    for j in 1..m {
        c.push(Gate::cry0(j - 1, j, sched.theta[j]))?;
    }
    Ok(c)
}

/// Fibonacci closed form of the ξ = 1 all-positive angles:
/// θ_{m−i+1} = 2 arctan √(F_i / F_{i+1}).
pub fn closed_form_angles_xi1(m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return invalid("block length m must be >= 1");
    }
    let mut theta = vec![0.0; m];
    // r = F_i / F_{i+1}, advanced by r ← 1/(1 + r)
    let mut r: f64 = 1.0;
    for i in 1..=m {
        theta[m - i] = 2.0 * r.sqrt().atan();
        r = 1.0 / (1.0 + r);
    }
    Ok(theta)
}

/// One junction between consecutive blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Junction {
    /// Last qubit of the left block.
    pub left: usize,
    /// First qubit of the right block.
    pub right: usize,
    pub ancilla: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StitchPlan {
    pub k_blocks: usize,
    pub m: usize,
    pub xi: f64,
}

impl StitchPlan {
    pub fn new(k_blocks: usize, m: usize, xi: f64) -> Result<Self> {
        if k_blocks == 0 || m == 0 {
            return invalid(format!("stitching needs k >= 1 and m >= 1, got k={k_blocks}, m={m}"));
        }
        check_xi(xi)?;
        Ok(Self { k_blocks, m, xi })
    }

    pub fn primary_qubits(&self) -> usize {
        self.k_blocks * self.m
    }

    pub fn ancilla_count(&self) -> usize {
        self.k_blocks - 1
    }

    pub fn total_qubits(&self) -> usize {
        self.primary_qubits() + self.ancilla_count()
    }

    pub fn junctions(&self) -> Vec<Junction> {
        (0..self.ancilla_count())
            .map(|j| Junction {
                left: (j + 1) * self.m - 1,
                right: (j + 1) * self.m,
                ancilla: self.primary_qubits() + j,
            })
            .collect()
    }

    /// True when no junction of the primary bitstring `x` reads "11".
    pub fn junctions_clear(&self, x: usize) -> bool {
        let n = self.primary_qubits();
        self.junctions().iter().all(|j| {
            let b = |q: usize| (x >> (n - 1 - q)) & 1;
            b(j.left) & b(j.right) == 0
        })
    }
}

/// Block circuits, then one Toffoli per junction onto its ancilla. With
/// `tilde = false` a final Z layer restores the alternating signs.
pub fn build_stitch_circuit(plan: &StitchPlan, tilde: bool) -> Result<Circuit> {
    let block = build_linear_circuit(plan.m, plan.xi, true)?;
    let junctions = plan.junctions();
    let mut c = Circuit::new(plan.total_qubits())
        .with_metadata("name", "xi_stitch")
        .with_metadata("m", plan.m)
        .with_metadata("k_blocks", plan.k_blocks)
        .with_metadata("xi", plan.xi)
        .with_metadata("tilde", tilde)
        .with_metadata("primary_qubits", plan.primary_qubits())
        .with_metadata("junctions", json!(junctions));
    for b in 0..plan.k_blocks {
        c.append(&block, b * plan.m)?;
    }
    for j in &junctions {
        c.push(Gate::ccnot(j.left, j.right, j.ancilla))?;
    }
    if !tilde {
        for q in (1..plan.primary_qubits()).step_by(2) {
            c.push(Gate::z(q))?;
        }
    }
    Ok(c)
}

/// Keeps the branch with every ancilla in |0⟩. Returns the renormalized
/// primary-register state and the branch probability.
pub fn postselect_ancillas(state: &Statevector, plan: &StitchPlan) -> Result<(Statevector, f64)> {
    let a = plan.ancilla_count();
    if state.n_qubits() != plan.total_qubits() {
        return invalid(format!(
            "state has {} qubits, plan needs {}",
            state.n_qubits(),
            plan.total_qubits()
        ));
    }
    if a == 0 {
        return Ok((state.clone(), state.norm_sqr()));
    }
    let kept: Vec<C64> = state.amplitudes().iter().step_by(1 << a).copied().collect();
    let out = Statevector::from_amplitudes(kept)?;
    let p = out.norm_sqr();
    if p < ZERO_PROBABILITY {
        return Ok((out, p));
    }
    Ok((out.normalized()?, p))
}

/// Runs the stitch circuit and postselects: `(state, success probability)`.
pub fn run_stitch(plan: &StitchPlan, tilde: bool) -> Result<(Statevector, f64)> {
    let out = build_stitch_circuit(plan, tilde)?.run()?;
    postselect_ancillas(&out, plan)
}

/// p = F_{km+2} / F_{m+2}^k, exact.
pub fn success_probability_closed(m: usize, k: usize) -> Result<BigRational> {
    if m == 0 || k == 0 {
        return invalid(format!("need m >= 1 and k >= 1, got m={m}, k={k}"));
    }
    let num = BigInt::from(fib_big(k * m + 2));
    let den = BigInt::from(fib_big(m + 2)).pow(k as u32);
    Ok(BigRational::new(num, den))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Squared norm of 𝒫_fib applied to |ξ̃; m⟩^{⊗k}, by dense simulation.
pub fn success_probability_exact(m: usize, k: usize, xi: f64) -> Result<f64> {
    if m == 0 || k == 0 {
        return invalid(format!("need m >= 1 and k >= 1, got m={m}, k={k}"));
    }
    check_xi(xi)?;
    let block = xi_inner_state(m, C64::new(xi, 0.0), true)?;
    let mut state = block.clone();
    for _ in 1..k {
        state = state.kron(&block)?;
    }
    let (_, w) = apply_fib_projector(&state, 0, k * m - 1)?;
    Ok(w)
}

/// Classical alternative to the ancillas: drop sampled primary bitstrings
/// that violate the constraint at a junction.
pub fn classical_postselection(counts: &BTreeMap<usize, u64>, plan: &StitchPlan) -> BTreeMap<usize, u64> {
    counts.iter().filter(|(&x, _)| plan.junctions_clear(x)).map(|(&x, &c)| (x, c)).collect()
}

/// Product of `k` independent blocks without any junction gates.
pub fn unstitched_blocks(plan: &StitchPlan) -> Result<Circuit> {
    let block = build_linear_circuit(plan.m, plan.xi, true)?;
    let mut c = Circuit::new(plan.primary_qubits()).with_metadata("name", "xi_blocks");
    for b in 0..plan.k_blocks {
        c.append(&block, b * plan.m)?;
    }
    Ok(c)
}
