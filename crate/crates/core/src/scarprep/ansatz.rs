//! Staircase ansatz of weight- and constraint-preserving four-qubit rotations.
//!
//! Gate `U_j` (1-based `j`) acts on chain sites `j..=j+3`, i.e. qubits
//! `j−1..=j+2`, and rotates the middle pair between |01⟩ and |10⟩ when both
//! outer sites are empty.

use serde::Serialize;
use serde_json::json;

use crate::circuits::{Circuit, Gate};
use crate::error::{invalid, Error, Result};
use crate::qsim::Statevector;

/// Layer structure of the ansatz for one `(N, k)` sector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnsatzSpec {
    pub n: usize,
    pub k: usize,
    /// Gate start indices per staircase, in application order.
    pub layers: Vec<Vec<usize>>,
}

/// n_a = N²/4 − k(k−1) − 2 (N even) or (N²−1)/4 − k(k−1) − 2 (N odd).
pub fn expected_parameter_count(n: usize, k: usize) -> usize {
    let base = if n.is_multiple_of(2) { n * n / 4 } else { (n * n - 1) / 4 };
    base - k * (k - 1) - 2
}

/// Every-other-site staircases whose top index grows by one per layer from
/// 2k−1 up to N−3, followed by one full staircase `1..=N−3`. Each staircase
/// applies its gates from the highest index down.
pub fn build_ansatz(n: usize, k: usize) -> Result<AnsatzSpec> {
    if k == 0 || n < 2 * k + 2 {
        return invalid(format!("ansatz needs k >= 1 and N >= 2k+2, got N={n}, k={k}"));
    }
    let mut layers = Vec::new();
    for top in (2 * k - 1)..=(n - 3) {
        let start = if top % 2 == 1 { 1 } else { 2 };
        layers.push((start..top + 1).step_by(2).rev().collect());
    }
    layers.push((1..=n - 3).rev().collect());
    let spec = AnsatzSpec { n, k, layers };
    let expected = expected_parameter_count(n, k);
    if spec.n_params() != expected {
        return Err(Error::Validation(format!(
            "ansatz for N={n}, k={k} has {} angles, expected {expected}",
            spec.n_params()
        )));
    }
    Ok(spec)
}

impl AnsatzSpec {
    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Gate start indices in application order; angle `i` belongs to entry `i`.
    pub fn gate_sequence(&self) -> Vec<usize> {
        self.layers.iter().flatten().copied().collect()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.layers.iter().map(Vec::len).collect()
    }

    /// Qubits set to 1 in |01⟩^k |0⟩^{N−2k}.
    pub fn initial_ones(&self) -> Vec<usize> {
        (0..self.k).map(|i| 2 * i + 1).collect()
    }

    pub fn initial_state(&self) -> Result<Statevector> {
        let index = self.initial_ones().iter().fold(0usize, |acc, &q| acc | 1 << (self.n - 1 - q));
        Statevector::basis_state(self.n, index)
    }

    fn check_angles(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params() {
            return Err(Error::DimensionMismatch { expected: self.n_params(), found: theta.len() });
        }
        Ok(())
    }

    fn metadata(&self, c: Circuit) -> Circuit {
        c.with_metadata("name", "sk_variational")
            .with_metadata("n", self.n)
            .with_metadata("k", self.k)
            .with_metadata("layers", json!(self.layers))
            .with_metadata("gate_order", "decreasing index within each staircase")
    }

    /// Full N-qubit circuit from |0…0⟩: X gates for the initial state, the
    /// dcxy staircases, and optionally the Z layer on odd chain sites.
    pub fn circuit(&self, theta: &[f64], with_signs: bool) -> Result<Circuit> {
        self.check_angles(theta)?;
        let mut c = self.metadata(Circuit::new(self.n));
        for q in self.initial_ones() {
            c.push(Gate::x(q))?;
        }
        for (&j, &t) in self.gate_sequence().iter().zip(theta) {
            c.push(Gate::dcxy(j - 1, t))?;
        }
        if with_signs {
            for q in (0..self.n).step_by(2) {
                c.push(Gate::z(q))?;
            }
        }
        Ok(c)
    }

    /// Same circuit on the N−2 interior qubits (chain site `i` on qubit
    /// `i − 2`). Gates touching a boundary site lose that control and become
    /// three-qubit cxy gates. Needs N ≥ 5.
    pub fn stripped_circuit(&self, theta: &[f64], with_signs: bool) -> Result<Circuit> {
        self.check_angles(theta)?;
        let n = self.n;
        if n < 5 {
            return invalid("stripped ansatz needs N >= 5");
        }
        let m = n - 2;
        let mut c = self.metadata(Circuit::new(m)).with_metadata("stripped", true);
        for q in self.initial_ones() {
            c.push(Gate::x(q - 1))?;
        }
        for (&j, &t) in self.gate_sequence().iter().zip(theta) {
            let g = if j == 1 {
                Gate::cxy(2, 0, 1, t)
            } else if j == n - 3 {
                Gate::cxy(n - 5, n - 4, n - 3, t)
            } else {
                Gate::dcxy(j - 2, t)
            };
            c.push(g)?;
        }
        if with_signs {
            // odd chain sites 3, 5, … sit on interior qubits 1, 3, …
            for q in (1..m).step_by(2) {
                c.push(Gate::z(q))?;
            }
        }
        Ok(c)
    }
}

/// Variational output ψ(θ) before the sign-fixing Z layer, by plain
/// simulation of the full N-qubit circuit.
pub fn apply_ansatz(spec: &AnsatzSpec, theta: &[f64]) -> Result<Statevector> {
    spec.circuit(theta, false)?.run()
}
