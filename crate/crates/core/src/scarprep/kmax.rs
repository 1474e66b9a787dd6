//! Exact circuit for the top of the tower, k_max = N/2 − 1, and its
//! compressed k_max-qubit encoding.
//!
//! Compressed qubit `i` stands for the chain-site pair `(2i+2, 2i+3)`:
//! |1⟩ ↔ (1, 0) and |0⟩ ↔ (0, 1).

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::circuits::{Circuit, Gate};
use crate::error::{invalid, Result};
use crate::hamiltonians::k_max;
use crate::qsim::{bit, Statevector};

#[derive(Clone, Debug, Serialize)]
pub struct KmaxPlan {
    pub n: usize,
    pub k_max: usize,
    /// θ_i = 2 arctan √(N/2 − i), i = 1..k_max.
    pub theta: Vec<f64>,
}

pub fn kmax_plan(n: usize) -> Result<KmaxPlan> {
    let kmax = k_max(n)?;
    let theta = (1..=kmax).map(|i| 2.0 * ((n / 2 - i) as f64).sqrt().atan()).collect();
    Ok(KmaxPlan { n, k_max: kmax, theta })
}

/// Chain site (1-based) → qubit.
fn site(i: usize) -> usize {
    i - 1
}

/// RY on site 2, a 1-controlled RY cascade along even sites, then C₀NOT
/// from each even site to its right neighbour. Produces |S̃_{k_max}⟩.
pub fn kmax_circuit(n: usize) -> Result<Circuit> {
    let plan = kmax_plan(n)?;
    let mut c = Circuit::new(n)
        .with_metadata("name", "sk_kmax")
        .with_metadata("n", n)
        .with_metadata("k", plan.k_max);
    c.push(Gate::ry(site(2), plan.theta[0]))?;
    for i in 2..=plan.k_max {
        c.push(Gate::cry1(site(2 * i - 2), site(2 * i), plan.theta[i - 1]))?;
    }
    for i in (2..=n - 2).step_by(2) {
        c.push(Gate::c0not(site(i), site(i + 1)))?;
    }
    Ok(c)
}

/// The RY cascade alone on k_max qubits.
pub fn kmax_compressed_circuit(n: usize) -> Result<Circuit> {
    let plan = kmax_plan(n)?;
    let mut c = Circuit::new(plan.k_max)
        .with_metadata("name", "sk_kmax_compressed")
        .with_metadata("n", n)
        .with_metadata("k", plan.k_max);
    c.push(Gate::ry(0, plan.theta[0]))?;
    for i in 1..plan.k_max {
        c.push(Gate::cry1(i - 1, i, plan.theta[i]))?;
    }
    Ok(c)
}

/// Full N-site basis index encoded by a compressed k_max-bit index.
pub fn decode_index(n: usize, compressed: usize) -> usize {
    let kmax = n / 2 - 1;
    let mut x = 0usize;
    for i in 0..kmax {
        let b = bit(compressed, i, kmax);
        let (even, odd) = (site(2 * i + 2), site(2 * i + 3));
        let on = if b == 1 { even } else { odd };
        x |= 1 << (n - 1 - on);
    }
    x
}

/// Maps a compressed state to the N-qubit register.
pub fn decode_state(n: usize, compressed: &Statevector) -> Result<Statevector> {
    let kmax = k_max(n)?;
    if compressed.n_qubits() != kmax {
        return invalid(format!("compressed state has {} qubits, expected {kmax}", compressed.n_qubits()));
    }
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
    for (x, a) in compressed.amplitudes().iter().enumerate() {
        amps[decode_index(n, x)] = *a;
    }
    Statevector::from_amplitudes(amps)
}

/// True iff the compressed string has no "01" pair, which is exactly when
/// the decoded string has no "0110".
pub fn compressed_fib_projection(bits: &str) -> bool {
    !bits.contains("01")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

/// `coeff · P` on the compressed qubit, or the zero operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompressedTerm {
    pub coeff: f64,
    pub op: Pauli,
}

impl CompressedTerm {
    const fn new(coeff: f64, op: Pauli) -> Self {
        Self { coeff, op }
    }
}

/// Image of `P_even ⊗ P_odd` on a site pair `(2i, 2i+1)` under the
/// compressed encoding. Returns `None` for operators that leave the code space.
pub fn encode_pauli_pair(even: Pauli, odd: Pauli) -> Option<CompressedTerm> {
    use Pauli::*;
    match (even, odd) {
        (I, I) => Some(CompressedTerm::new(1.0, I)),
        (Z, I) => Some(CompressedTerm::new(1.0, Z)),
        (I, Z) => Some(CompressedTerm::new(-1.0, Z)),
        (Z, Z) => Some(CompressedTerm::new(-1.0, I)),
        (X, X) => Some(CompressedTerm::new(1.0, X)),
        (X, Y) => Some(CompressedTerm::new(-1.0, Y)),
        (Y, X) => Some(CompressedTerm::new(1.0, Y)),
        (Y, Y) => Some(CompressedTerm::new(1.0, X)),
        _ => None,
    }
}
