//! Dense statevector engine.
//!
//! Basis indices put qubit 0 in the most significant bit, so the bitstring of
//! an index printed left to right lists qubits `0..n`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{distr::weighted::WeightedIndex, prelude::*};
use rand_chacha::ChaCha8Rng;

use crate::circuits::Gate;
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 24;

/// Tolerance on Σ|a|² used to set the normalized flag.
pub const NORM_TOL: f64 = 1e-10;

/// Born probabilities below this are treated as impossible outcomes.
pub const ZERO_PROBABILITY: f64 = 1e-14;

/// Value of qubit `q` in basis index `x` of an `n`-qubit register.
#[inline]
pub fn bit(x: usize, q: usize, n: usize) -> usize {
    (x >> (n - 1 - q)) & 1
}

/// Left-to-right bitstring of `x` (qubit 0 first).
pub fn bitstring(x: usize, n: usize) -> String {
    (0..n).map(|q| if bit(x, q, n) == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str) -> Result<usize> {
    s.chars().try_fold(0usize, |acc, c| match c {
        '0' => Ok(acc << 1),
        '1' => Ok((acc << 1) | 1),
        other => Err(Error::InvalidArgument(format!("bad bit {other:?} in {s:?}"))),
    })
}

/// True if the bitstring of `x` has two adjacent ones.
#[inline]
pub fn has_adjacent_ones(x: usize) -> bool {
    x & (x >> 1) != 0
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<C64>,
    normalized: bool,
}

/// Outcome of projecting one qubit onto a computational-basis value.
#[derive(Clone, Debug)]
pub struct Projection {
    /// Renormalized post-measurement state. When `valid` is false this is the
    /// raw (zero-norm) projected vector and must not be used as a state.
    pub state: Statevector,
    pub probability: f64,
    pub valid: bool,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "{n} qubits requested, supported range is 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

impl Statevector {
    pub fn zero_state(n: usize) -> Result<Self> {
        Self::basis_state(n, 0)
    }

    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        check_size(n)?;
        if index >= 1 << n {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for {n} qubits"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits: n, amps, normalized: true })
    }

    /// Wraps an amplitude vector; the length must be a power of two.
    /// The vector is not rescaled.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_size(n)?;
        let mut s = Self { n_qubits: n, amps, normalized: false };
        s.normalized = (s.norm_sqr() - 1.0).abs() < NORM_TOL;
        Ok(s)
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm < ZERO_PROBABILITY {
            return Err(Error::EmptySupport("cannot normalize the zero vector".into()));
        }
        self.amps.iter_mut().for_each(|a| *a /= norm);
        self.normalized = true;
        Ok(self)
    }

    /// Returns `a·self + b·other`.
    pub fn linear_combination(&self, a: C64, other: &Self, b: C64) -> Result<Self> {
        self.check_same_dim(other)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(x, y)| a * x + b * y).collect();
        Self::from_amplitudes(amps)
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// ⟨self|other⟩, conjugating `self`.
    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        self.check_same_dim(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// |self⟩ ⊗ |other⟩ with `self` on the leading qubits.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        check_size(self.n_qubits + other.n_qubits)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Self::from_amplitudes(amps)
    }

    /// Removes qubits that are exactly in |0⟩. Fails if any listed qubit
    /// carries weight on |1⟩ above `1e-12`.
    pub fn discard_zero_qubits(&self, qubits: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        for &q in qubits {
            if q >= n {
                return Err(Error::Gate(format!("qubit {q} out of range for {n} qubits")));
            }
        }
        let keep: Vec<usize> = (0..n).filter(|q| !qubits.contains(q)).collect();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << keep.len()];
        let mut leaked = 0.0;
        for (x, a) in self.amps.iter().enumerate() {
            if qubits.iter().any(|&q| bit(x, q, n) == 1) {
                leaked += a.norm_sqr();
                continue;
            }
            let y = keep.iter().fold(0usize, |acc, &q| (acc << 1) | bit(x, q, n));
            amps[y] = *a;
        }
        if leaked > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "discarded qubits are not in |0>: leaked weight {leaked:e}"
            )));
        }
        Self::from_amplitudes(amps)
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<Self> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    pub fn apply_gate_mut(&mut self, gate: &Gate) -> Result<()> {
        gate.check_qubits(self.n_qubits)?;
        let local = gate.matrix();
        apply_local(&mut self.amps, self.n_qubits, gate.qubits(), &local);
        Ok(())
    }

    /// Applies a dense `2^k x 2^k` row-major matrix on the listed qubits.
    /// The first listed qubit is the most significant local bit.
    pub fn apply_matrix_mut(&mut self, qubits: &[usize], matrix: &[C64]) -> Result<()> {
        let k = qubits.len();
        if k == 0 || matrix.len() != 1 << (2 * k) {
            return Err(Error::Gate(format!(
                "matrix of {} entries does not match {k} qubits",
                matrix.len()
            )));
        }
        check_distinct(qubits, self.n_qubits)?;
        apply_local(&mut self.amps, self.n_qubits, qubits, matrix);
        Ok(())
    }

    /// Measures `qubit` and keeps the branch with result `value`.
    pub fn project_qubit(&self, qubit: usize, value: u8) -> Result<Projection> {
        let n = self.n_qubits;
        if qubit >= n {
            return Err(Error::Gate(format!("qubit {qubit} out of range for {n} qubits")));
        }
        if value > 1 {
            return Err(Error::InvalidArgument(format!("measurement value {value} is not a bit")));
        }
        let value = value as usize;
        let amps: Vec<C64> = self
            .amps
            .iter()
            .enumerate()
            .map(|(x, a)| if bit(x, qubit, n) == value { *a } else { C64::new(0.0, 0.0) })
            .collect();
        let total = self.norm_sqr();
        let kept: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let probability = if total > 0.0 { kept / total } else { 0.0 };
        let raw = Self { n_qubits: n, amps, normalized: false };
        if probability < ZERO_PROBABILITY {
            return Ok(Projection { state: raw, probability, valid: false });
        }
        Ok(Projection { state: raw.normalized()?, probability, valid: true })
    }

    /// Born probabilities keyed by basis index; entries below `1e-15` are dropped.
    pub fn probabilities(&self) -> BTreeMap<usize, f64> {
        self.amps
            .iter()
            .enumerate()
            .map(|(x, a)| (x, a.norm_sqr()))
            .filter(|&(_, p)| p >= 1e-15)
            .collect()
    }

    /// Draws `shots` computational-basis samples. Deterministic for a fixed seed.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<BTreeMap<usize, u64>> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be >= 1".into()));
        }
        let probs: Vec<(usize, f64)> = self.probabilities().into_iter().collect();
        let dist = WeightedIndex::new(probs.iter().map(|&(_, p)| p))
            .map_err(|e| Error::InvalidArgument(format!("cannot sample: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            *counts.entry(probs[dist.sample(&mut rng)].0).or_insert(0) += 1;
        }
        Ok(counts)
    }

    /// Von Neumann entropy (nats) of qubits `0..cut`.
    pub fn entanglement_entropy(&self, cut: usize) -> Result<f64> {
        let n = self.n_qubits;
        if cut == 0 || cut >= n {
            return Err(Error::InvalidArgument(format!(
                "cut {cut} must lie in 1..={}",
                n.saturating_sub(1)
            )));
        }
        let rows = 1 << cut;
        let cols = 1 << (n - cut);
        let m = DMatrix::from_fn(rows, cols, |r, c| self.amps[r * cols + c]);
        let norm = self.norm_sqr();
        let entropy = m
            .singular_values()
            .iter()
            .map(|s| s * s / norm)
            .filter(|&p| p > ZERO_PROBABILITY)
            .map(|p| -p * p.ln())
            .sum();
        Ok(entropy)
    }

    /// Applies Z on each listed qubit.
    pub fn apply_z_layer(&self, qubits: &[usize]) -> Self {
        let n = self.n_qubits;
        let mut out = self.clone();
        for (x, a) in out.amps.iter_mut().enumerate() {
            let ones = qubits.iter().filter(|&&q| bit(x, q, n) == 1).count();
            if ones % 2 == 1 {
                *a = -*a;
            }
        }
        out
    }
}

pub(crate) fn check_distinct(qubits: &[usize], n: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n {
            return Err(Error::Gate(format!("qubit {q} out of range for {n} qubits")));
        }
        if qubits[..i].contains(&q) {
            return Err(Error::Gate(format!("qubit {q} listed twice")));
        }
    }
    Ok(())
}

/// Core kernel: applies a row-major local matrix on `qubits`.
fn apply_local(amps: &mut [C64], n: usize, qubits: &[usize], matrix: &[C64]) {
    let k = qubits.len();
    let ld = 1usize << k;
    let offsets: Vec<usize> = (0..ld)
        .map(|l| {
            (0..k)
                .filter(|&t| (l >> (k - 1 - t)) & 1 == 1)
                .fold(0, |acc, t| acc | (1 << (n - 1 - qubits[t])))
        })
        .collect();
    let mask = offsets[ld - 1];
    // Sparse rows: controlled gates are mostly identity/zero entries.
    let rows: Vec<Vec<(usize, C64)>> = (0..ld)
        .map(|r| {
            (0..ld)
                .filter_map(|c| {
                    let v = matrix[r * ld + c];
                    (v.norm_sqr() > 0.0).then_some((c, v))
                })
                .collect()
        })
        .collect();
    let mut buf = vec![C64::new(0.0, 0.0); ld];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for (row, off) in rows.iter().zip(&offsets) {
            amps[base | off] = row.iter().map(|&(c, v)| v * buf[c]).sum();
        }
    }
}
