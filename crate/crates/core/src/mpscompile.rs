//! Matrix-product representation of projected Dicke states and a generic
//! sequential-QR compiler from open-boundary MPS to a staircase of dense
//! unitary blocks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde_json::json;

use crate::circuits::{Circuit, Gate, MAX_UBLOCK_QUBITS};
use crate::error::{invalid, Error, Result};
use crate::linalg::{complete_unitary, gram_schmidt_columns};
use crate::qsim::{bit, Statevector};

/// Largest bond dimension accepted by [`compile_mps`].
pub const MAX_COMPILE_CHI: usize = 32;

/// Largest site count accepted by [`mps_to_state`].
pub const MAX_DENSE_SITES: usize = 20;

/// Open-boundary MPS with real χ×χ site matrices and boundary vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    /// `tensors[i] = [M⁰, M¹]` for site `i`.
    pub tensors: Vec<[DMatrix<f64>; 2]>,
    pub left: DVector<f64>,
    pub right: DVector<f64>,
}

impl Mps {
    pub fn new(tensors: Vec<[DMatrix<f64>; 2]>, left: DVector<f64>, right: DVector<f64>) -> Result<Self> {
        if tensors.is_empty() {
            return invalid("MPS needs at least one site");
        }
        let chi = left.len();
        if right.len() != chi {
            return Err(Error::DimensionMismatch { expected: chi, found: right.len() });
        }
        for pair in &tensors {
            for t in pair {
                if t.shape() != (chi, chi) {
                    return Err(Error::DimensionMismatch { expected: chi, found: t.nrows().max(t.ncols()) });
                }
            }
        }
        Ok(Self { tensors, left, right })
    }

    pub fn sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn chi(&self) -> usize {
        self.left.len()
    }

    /// L · M^{x₁} ⋯ M^{x_m} · R for bits given as 0/1 values.
    pub fn amplitude_bits(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.sites() {
            return Err(Error::DimensionMismatch { expected: self.sites(), found: bits.len() });
        }
        let mut row = self.left.transpose();
        for (pair, &b) in self.tensors.iter().zip(bits) {
            if b > 1 {
                return invalid(format!("bit value {b} is not 0 or 1"));
            }
            row *= &pair[b as usize];
        }
        Ok((row * &self.right)[(0, 0)])
    }

    /// Amplitude of a left-to-right bitstring such as `"0101"`.
    pub fn amplitude(&self, bitstring: &str) -> Result<f64> {
        let bits: Vec<u8> = bitstring
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => invalid(format!("bad bit {other:?}")),
            })
            .collect::<Result<_>>()?;
        self.amplitude_bits(&bits)
    }
}

/// DFA over states (S₀, A₁, B₁, …, A_{k−1}, B_{k−1}, F_k) accepting
/// weight-k strings without adjacent 1s. Entry `(a, b)` of `M^s` is 1 when
/// reading `s` moves state `a` to `b`.
pub fn dfa_transition_matrices(k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if k == 0 {
        return invalid("DFA needs k >= 1");
    }
    let d = 2 * k;
    let (s0, f) = (0, d - 1);
    let a = |j: usize| 2 * j - 1;
    let b = |j: usize| 2 * j;
    let mut m0 = DMatrix::zeros(d, d);
    let mut m1 = DMatrix::zeros(d, d);
    m0[(s0, s0)] = 1.0;
    m0[(f, f)] = 1.0;
    m1[(s0, if k == 1 { f } else { a(1) })] = 1.0;
    for j in 1..k {
        m0[(a(j), b(j))] = 1.0;
        m0[(b(j), b(j))] = 1.0;
        m1[(b(j), if j + 1 == k { f } else { a(j + 1) })] = 1.0;
    }
    Ok((m0, m1))
}

/// MPS whose amplitudes are the 0/1 indicator of |D^m_k⟩'s support.
pub fn projected_dicke_mps(m: usize, k: usize) -> Result<Mps> {
    if m == 0 || m + 1 < 2 * k {
        return Err(Error::EmptySupport(format!("no constrained strings with m={m}, k={k}")));
    }
    if k == 0 {
        let one = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::zeros(1, 1);
        let v = DVector::from_element(1, 1.0);
        return Mps::new(vec![[one, zero]; m], v.clone(), v);
    }
    let (m0, m1) = dfa_transition_matrices(k)?;
    let d = 2 * k;
    let mut left = DVector::zeros(d);
    left[0] = 1.0;
    let mut right = DVector::zeros(d);
    right[d - 1] = 1.0;
    Mps::new(vec![[m0, m1]; m], left, right)
}

/// Dense normalized state of the MPS (site `i` on qubit `i`).
pub fn mps_to_state(mps: &Mps) -> Result<Statevector> {
    let m = mps.sites();
    if m > MAX_DENSE_SITES {
        return Err(Error::Capacity(format!("{m} sites exceeds dense limit {MAX_DENSE_SITES}")));
    }
    let mut amps = Vec::with_capacity(1 << m);
    let mut bits = vec![0u8; m];
    for x in 0..1usize << m {
        for (q, b) in bits.iter_mut().enumerate() {
            *b = bit(x, q, m) as u8;
        }
        amps.push(C64::new(mps.amplitude_bits(&bits)?, 0.0));
    }
    Statevector::from_amplitudes(amps)?.normalized()
}

/// One dense unitary acting on a contiguous window of qubits.
#[derive(Clone, Debug)]
pub struct StaircaseBlock {
    /// Site whose physical qubit is the last qubit of the window.
    pub site: usize,
    /// Ascending qubit window; the first qubit is the most significant.
    pub qubits: Vec<usize>,
    pub unitary: DMatrix<C64>,
}

/// Blocks in application order (last site first).
#[derive(Clone, Debug)]
pub struct IsometryStaircase {
    pub n_qubits: usize,
    pub blocks: Vec<StaircaseBlock>,
    /// Bond ranks r₀..r_{m−1} after rank-revealing QR.
    pub bond_ranks: Vec<usize>,
}

fn bits_for(rank: usize) -> usize {
    rank.next_power_of_two().trailing_zeros() as usize
}

impl IsometryStaircase {
    pub fn to_circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new(self.n_qubits)
            .with_metadata("name", "mps_staircase")
            .with_metadata("bond_ranks", json!(self.bond_ranks));
        for b in &self.blocks {
            let d = b.unitary.nrows();
            let flat: Vec<C64> = (0..d * d).map(|i| b.unitary[(i / d, i % d)]).collect();
            c.push(Gate::ublock(b.qubits.clone(), flat)?)?;
        }
        Ok(c)
    }

    pub fn max_width(&self) -> usize {
        self.blocks.iter().map(|b| b.qubits.len()).max().unwrap_or(0)
    }
}

/// Left-to-right sweep of rank-revealing QR factorizations. Site `i`'s
/// isometry maps bond `l_i` to `(l_{i−1}, s_i)` and becomes the leading
/// columns of a unitary on qubits `[i − b_{i−1}, i]`, where `b` counts the
/// qubits needed to hold a bond index. The bond enters in the low bits of
/// the window and leaves as `l_{i−1}·2 + s_i`.
pub fn compile_mps(mps: &Mps) -> Result<IsometryStaircase> {
    let m = mps.sites();
    let chi = mps.chi();
    if chi > MAX_COMPILE_CHI {
        return Err(Error::Capacity(format!("bond dimension {chi} exceeds {MAX_COMPILE_CHI}")));
    }
    let to_c = |x: &DMatrix<f64>| x.map(|v| C64::new(v, 0.0));

    // carry: r_{i−1} × χ matrix multiplying site i from the left
    let mut carry: DMatrix<C64> = to_c(&DMatrix::from_row_slice(1, chi, mps.left.as_slice()));
    let mut isometries = Vec::with_capacity(m);
    let mut ranks = Vec::with_capacity(m);
    for (i, pair) in mps.tensors.iter().enumerate() {
        let mut t0 = &carry * to_c(&pair[0]);
        let mut t1 = &carry * to_c(&pair[1]);
        if i + 1 == m {
            let r = to_c(&DMatrix::from_column_slice(chi, 1, mps.right.as_slice()));
            t0 *= &r;
            t1 *= r;
        }
        let rows = carry.nrows();
        let cols = t0.ncols();
        // row l·2 + s
        let g = DMatrix::from_fn(2 * rows, cols, |r, c| if r % 2 == 0 { t0[(r / 2, c)] } else { t1[(r / 2, c)] });
        let scale = g.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::EmptySupport(format!("MPS vanishes at site {i}")));
        }
        let q = gram_schmidt_columns(&g, 1e-10 * scale);
        if q.ncols() == 0 {
            return Err(Error::EmptySupport(format!("MPS vanishes at site {i}")));
        }
        carry = q.adjoint() * &g;
        ranks.push(q.ncols());
        isometries.push(q);
    }
    if ranks[m - 1] != 1 {
        return Err(Error::Validation("final bond rank is not one".into()));
    }

    let mut blocks = Vec::with_capacity(m);
    for i in (0..m).rev() {
        let b_prev = if i == 0 { 0 } else { bits_for(ranks[i - 1]) };
        let width = b_prev + 1;
        if width > MAX_UBLOCK_QUBITS {
            return Err(Error::Capacity(format!("site {i} needs a {width}-qubit block")));
        }
        let q = &isometries[i];
        let dim = 1usize << width;
        let mut padded = DMatrix::zeros(dim, q.ncols());
        padded.rows_mut(0, q.nrows()).copy_from(q);
        let unitary = complete_unitary(&padded);
        blocks.push(StaircaseBlock { site: i, qubits: (i - b_prev..=i).collect(), unitary });
    }
    Ok(IsometryStaircase { n_qubits: m, blocks, bond_ranks: ranks })
}

/// Reporting-only depth figure m·k·⌈log₂ k⌉² (with k, log floored at 2, 1).
pub fn depth_estimate(m: usize, k: usize) -> usize {
    let kk = k.max(1);
    let log = (usize::BITS - (k.max(2) - 1).leading_zeros()) as usize;
    m * kk * log.max(1).pow(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refstates::projected_dicke;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fidelity(a: &Statevector, b: &Statevector) -> f64 {
        a.inner_product(b).unwrap().norm_sqr()
    }

    #[test]
    fn dfa_k1() {
        let (m0, m1) = dfa_transition_matrices(1).unwrap();
        assert_eq!(m0, DMatrix::identity(2, 2));
        assert_eq!(m1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn dfa_k2_rows() {
        let (m0, m1) = dfa_transition_matrices(2).unwrap();
        // rows S0, A1, B1, F2
        assert_eq!(m0, DMatrix::from_row_slice(4, 4, &[
            1., 0., 0., 0.,
            0., 0., 1., 0.,
            0., 0., 1., 0.,
            0., 0., 0., 1.,
        ]));
        assert_eq!(m1, DMatrix::from_row_slice(4, 4, &[
            0., 1., 0., 0.,
            0., 0., 0., 0.,
            0., 0., 0., 1.,
            0., 0., 0., 0.,
        ]));
    }

    #[test]
    fn dfa_well_formed() {
        for k in 1..=6 {
            let (m0, m1) = dfa_transition_matrices(k).unwrap();
            let t = &m0 + &m1;
            for r in 0..2 * k {
                assert!(t.row(r).sum() <= 2.0);
            }
            assert!(t.column(2 * k - 1).sum() >= 1.0);
        }
    }

    #[test]
    fn dicke_mps_examples() {
        let mps = projected_dicke_mps(4, 2).unwrap();
        let ones: Vec<usize> = (0..16usize)
            .filter(|&x| mps.amplitude(&crate::qsim::bitstring(x, 4)).unwrap() == 1.0)
            .collect();
        assert_eq!(ones, vec![0b0101, 0b1001, 0b1010]);
        assert_eq!(mps.amplitude("0110").unwrap(), 0.0);
        assert!(mps.amplitude("011").is_err());

        let mps = projected_dicke_mps(6, 2).unwrap();
        let count = (0..64usize).filter(|&x| mps.amplitude(&crate::qsim::bitstring(x, 6)).unwrap() == 1.0).count();
        assert_eq!(count, 10);

        let mps = projected_dicke_mps(3, 2).unwrap();
        assert_eq!(mps.amplitude("101").unwrap(), 1.0);
        assert!(projected_dicke_mps(3, 3).is_err());
    }

    #[test]
    fn dicke_mps_matches_oracle() {
        for m in 1..=12 {
            for k in 0..=(m + 1) / 2 {
                let s = mps_to_state(&projected_dicke_mps(m, k).unwrap()).unwrap();
                let o = projected_dicke(m, k).unwrap();
                let diff: f64 = s.amplitudes().iter().zip(o.amplitudes()).map(|(a, b)| (a - b).norm()).sum();
                assert!(diff < 1e-12, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn compile_dicke_grid() {
        for m in 1..=12 {
            for k in 1..=(m + 1) / 2 {
                let mps = projected_dicke_mps(m, k).unwrap();
                let stair = compile_mps(&mps).unwrap();
                for b in &stair.blocks {
                    let d = b.unitary.nrows();
                    let defect = (b.unitary.adjoint() * &b.unitary - DMatrix::identity(d, d)).norm();
                    assert!(defect < 1e-10);
                }
                let out = stair.to_circuit().unwrap().run().unwrap();
                let f = fidelity(&out, &projected_dicke(m, k).unwrap());
                assert!(f >= 1.0 - 1e-8, "m={m} k={k} f={f}");
            }
        }
    }

    #[test]
    fn product_state_compiles_to_single_qubit_blocks() {
        let a = DMatrix::from_element(1, 1, 0.6);
        let b = DMatrix::from_element(1, 1, 0.8);
        let one = DVector::from_element(1, 1.0);
        let mps = Mps::new(vec![[a, b]; 5], one.clone(), one).unwrap();
        let stair = compile_mps(&mps).unwrap();
        assert_eq!(stair.blocks.len(), 5);
        assert!(stair.blocks.iter().all(|b| b.qubits.len() == 1));
        let out = stair.to_circuit().unwrap().run().unwrap();
        assert!(fidelity(&out, &mps_to_state(&mps).unwrap()) > 1.0 - 1e-12);
    }

    #[test]
    fn random_bond_two() {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut mat = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
            let m = 7;
            let tensors = (0..m).map(|_| [mat(2, 2), mat(2, 2)]).collect();
            let left = DVector::from_column_slice(mat(2, 1).as_slice());
            let right = DVector::from_column_slice(mat(2, 1).as_slice());
            let mps = Mps::new(tensors, left, right).unwrap();
            let out = compile_mps(&mps).unwrap().to_circuit().unwrap().run().unwrap();
            assert!(fidelity(&out, &mps_to_state(&mps).unwrap()) >= 1.0 - 1e-8, "seed {seed}");
        }
    }

    /// Conditional one-site distributions of |D⁶₂⟩ reproduce the magnitudes
    /// of the five single-qubit unitaries used in the hand-built circuit.
    #[test]
    fn d62_conditionals_match_reference_unitaries() {
        let reference: [[f64; 4]; 5] = [
            [-(0.4f64).sqrt(), -(0.6f64).sqrt(), -(0.6f64).sqrt(), (0.4f64).sqrt()],
            [(0.5f64).sqrt(), (0.5f64).sqrt(), (0.5f64).sqrt(), -(0.5f64).sqrt()],
            [-(0.25f64).sqrt(), (0.75f64).sqrt(), (0.75f64).sqrt(), (0.25f64).sqrt()],
            [(2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt(), -(2.0f64 / 3.0).sqrt()],
            [-(1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()],
        ];
        let out = compile_mps(&projected_dicke_mps(6, 2).unwrap()).unwrap().to_circuit().unwrap().run().unwrap();
        let probs = out.probabilities();
        // P(next = 1 | prefix) for every prefix of nonzero weight
        let mut conditionals = Vec::new();
        for len in 0..6 {
            for prefix in 0..1usize << len {
                let weight = |next: usize| -> f64 {
                    probs.iter().filter(|(&x, _)| x >> (5 - len) == (prefix << 1 | next)).map(|(_, p)| p).sum()
                };
                let (w0, w1) = (weight(0), weight(1));
                if w0 > 1e-12 && w1 > 1e-12 {
                    conditionals.push(w1 / (w0 + w1));
                }
            }
        }
        for u in reference {
            let m = DMatrix::from_row_slice(2, 2, &u);
            assert!((m.transpose() * &m - DMatrix::identity(2, 2)).norm() < 1e-12);
            let p = u[0] * u[0];
            assert!(
                conditionals.iter().any(|&c| (c - p).abs() < 1e-10 || (c - (1.0 - p)).abs() < 1e-10),
                "no prefix with branching {p}"
            );
        }
        assert!(conditionals.iter().any(|&c| (c - 0.4).abs() < 1e-10));
    }

    #[test]
    fn depth_examples() {
        assert_eq!(depth_estimate(7, 1), 7);
        assert_eq!(depth_estimate(6, 2), 12);
        for m in 1..10 {
            for k in 1..10 {
                assert!(depth_estimate(m + 1, k) >= depth_estimate(m, k));
                assert!(depth_estimate(m, k + 1) >= depth_estimate(m, k));
            }
        }
    }
}
