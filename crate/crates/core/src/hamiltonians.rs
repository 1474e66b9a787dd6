//! Sparse operators and builders for every Hamiltonian of the model.
//!
//! All operators are assembled through one kernel: a [`LocalTerm`] is a
//! coefficient times a product of single-site operators, evaluated on each
//! computational basis state. Builder arguments use 1-based chain sites
//! (site `i` lives on qubit `i - 1`), matching the printed sums.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::qsim::{bit, Statevector, MAX_QUBITS};

/// Entries with magnitude below this are dropped on assembly.
const DROP_TOL: f64 = 1e-15;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SiteOp {
    X,
    Y,
    Z,
    /// |0⟩⟨0|
    P0,
    /// |1⟩⟨1|
    P1,
    /// σ⁺ = |1⟩⟨0|
    Raise,
    /// σ⁻ = |0⟩⟨1|
    Lower,
}

impl SiteOp {
    /// Image of basis value `b`: `(new bit, factor)` or `None` if annihilated.
    fn act(self, b: usize) -> Option<(usize, C64)> {
        let one = C64::new(1.0, 0.0);
        match (self, b) {
            (SiteOp::X, _) => Some((1 - b, one)),
            (SiteOp::Y, 0) => Some((1, C64::new(0.0, 1.0))),
            (SiteOp::Y, _) => Some((0, C64::new(0.0, -1.0))),
            (SiteOp::Z, 0) => Some((0, one)),
            (SiteOp::Z, _) => Some((1, -one)),
            (SiteOp::P0, 0) | (SiteOp::P1, 1) => Some((b, one)),
            (SiteOp::P0, _) | (SiteOp::P1, _) => None,
            (SiteOp::Raise, 0) => Some((1, one)),
            (SiteOp::Lower, 1) => Some((0, one)),
            (SiteOp::Raise, _) | (SiteOp::Lower, _) => None,
        }
    }
}

/// `coeff · ∏ ops`, with the rightmost factor acting first.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub coeff: C64,
    /// `(qubit, op)` pairs.
    pub ops: Vec<(usize, SiteOp)>,
}

impl LocalTerm {
    pub fn new(coeff: f64, ops: &[(usize, SiteOp)]) -> Self {
        Self { coeff: C64::new(coeff, 0.0), ops: ops.to_vec() }
    }

    pub fn identity(coeff: f64) -> Self {
        Self::new(coeff, &[])
    }

    fn apply(&self, x: usize, n: usize) -> Option<(usize, C64)> {
        let mut y = x;
        let mut amp = self.coeff;
        for &(q, op) in self.ops.iter().rev() {
            let (nb, f) = op.act(bit(y, q, n))?;
            let shift = n - 1 - q;
            y = (y & !(1 << shift)) | (nb << shift);
            amp *= f;
        }
        Some((y, amp))
    }
}

/// Row-compressed sparse matrix over complex entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    /// Assembles from unsorted `(row, col, value)` triplets; duplicates add.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(usize, usize, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v.norm() > DROP_TOL);
        let mut row_ptr = vec![0usize; dim + 1];
        for &(r, _, _) in &merged {
            row_ptr[r + 1] += 1;
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let cols = merged.iter().map(|t| t.1).collect();
        let vals = merged.iter().map(|t| t.2).collect();
        Self { dim, row_ptr, cols, vals }
    }

    /// Sum of local terms on an `n`-qubit register.
    pub fn from_terms(n: usize, terms: &[LocalTerm]) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Capacity(format!("{n} qubits outside 1..={MAX_QUBITS}")));
        }
        for t in terms {
            if let Some(&(q, _)) = t.ops.iter().find(|(q, _)| *q >= n) {
                return invalid(format!("term acts on qubit {q} of a {n}-qubit register"));
            }
        }
        let dim = 1usize << n;
        let triplets: Vec<(usize, usize, C64)> = (0..dim)
            .into_par_iter()
            .flat_map_iter(|x| {
                terms.iter().filter_map(move |t| t.apply(x, n).map(|(y, a)| (y, x, a)))
            })
            .collect();
        Ok(Self::from_triplets(dim, triplets))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.entries().all(|(r, c, v)| (self.get(c, r).conj() - v).norm() <= tol)
    }

    /// Raw `y = A x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.dim, "operator/vector dimension mismatch");
        let row = |r: usize| -> C64 {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k] * x[self.cols[k]]).sum()
        };
        if self.dim >= 1 << 12 {
            (0..self.dim).into_par_iter().map(row).collect()
        } else {
            (0..self.dim).map(row).collect()
        }
    }

    pub fn matvec(&self, state: &Statevector) -> Result<Statevector> {
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: state.dim() });
        }
        Statevector::from_amplitudes(self.apply(state.amplitudes()))
    }

    /// ⟨ψ|A|ψ⟩ without taking the real part.
    pub fn expectation_complex(&self, state: &Statevector) -> Result<C64> {
        let y = self.matvec(state)?;
        state.inner_product(&y)
    }

    /// Real part of ⟨ψ|A|ψ⟩; fails if the imaginary residue exceeds `1e-10`.
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        let v = self.expectation_complex(state)?;
        if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
            return invalid(format!("expectation has imaginary part {:e}", v.im));
        }
        Ok(v.re)
    }

    /// `Σ c_i A_i`; all operators must share one dimension.
    pub fn linear_combination(parts: &[(f64, &SparseOperator)]) -> Result<Self> {
        let dim = parts.first().map(|p| p.1.dim).unwrap_or(0);
        let mut triplets = Vec::new();
        for &(c, op) in parts {
            if op.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: op.dim });
            }
            triplets.extend(op.entries().map(|(r, k, v)| (r, k, v * c)));
        }
        Ok(Self::from_triplets(dim, triplets))
    }

    pub fn mul(&self, other: &SparseOperator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            let mut acc: BTreeMap<usize, C64> = BTreeMap::new();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (mid, a) = (self.cols[k], self.vals[k]);
                for j in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    *acc.entry(other.cols[j]).or_default() += a * other.vals[j];
                }
            }
            triplets.extend(acc.into_iter().map(|(c, v)| (r, c, v)));
        }
        Ok(Self::from_triplets(self.dim, triplets))
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<Self> {
        let ab = self.mul(other)?;
        let ba = other.mul(self)?;
        Self::linear_combination(&[(1.0, &ab), (-1.0, &ba)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Matrix elements between the listed basis states, as a new operator of
    /// dimension `basis.len()`. The basis must be sorted and duplicate-free.
    pub fn restrict(&self, basis: &[usize]) -> Result<Self> {
        if basis.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("restriction basis must be strictly increasing");
        }
        if basis.last().is_some_and(|&b| b >= self.dim) {
            return invalid("restriction basis index out of range");
        }
        let mut triplets = Vec::new();
        for (i, &r) in basis.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if let Ok(j) = basis.binary_search(&self.cols[k]) {
                    triplets.push((i, j, self.vals[k]));
                }
            }
        }
        Ok(Self::from_triplets(basis.len(), triplets))
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }
}

/// Qubit holding 1-based chain site `i`.
#[inline]
fn q(i: usize) -> usize {
    i - 1
}

/// `(-1)^i` for a 1-based site.
#[inline]
fn parity_sign(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn check_chain(n: usize, min: usize) -> Result<()> {
    if n < min {
        return invalid(format!("chain of {n} sites is shorter than {min}"));
    }
    Ok(())
}

/// λ Σ(X_i − Z_{i−1}X_iZ_{i+1}) + Δ Σ Z_i + J Σ Z_iZ_{i+1}, open boundaries.
pub fn build_h0(n: usize, lambda: f64, delta: f64, j: f64) -> Result<SparseOperator> {
    check_chain(n, 3)?;
    use SiteOp::*;
    let mut terms = Vec::new();
    for i in 2..n {
        terms.push(LocalTerm::new(lambda, &[(q(i), X)]));
        terms.push(LocalTerm::new(-lambda, &[(q(i - 1), Z), (q(i), X), (q(i + 1), Z)]));
    }
    for i in 1..=n {
        terms.push(LocalTerm::new(delta, &[(q(i), Z)]));
    }
    for i in 1..n {
        terms.push(LocalTerm::new(j, &[(q(i), Z), (q(i + 1), Z)]));
    }
    SparseOperator::from_terms(n, &terms)
}

/// Raising operator Q† = Σ (−1)^i P_{i−1} σ⁺_i P_{i+1} of the scar tower.
pub fn raising_operator(n: usize) -> Result<SparseOperator> {
    check_chain(n, 3)?;
    use SiteOp::*;
    let terms: Vec<LocalTerm> = (2..n)
        .map(|i| LocalTerm::new(parity_sign(i), &[(q(i - 1), P0), (q(i), Raise), (q(i + 1), P0)]))
        .collect();
    SparseOperator::from_terms(n, &terms)
}

/// Parent Hamiltonian Σ P_{i−1}[ξ⁻¹P′_i + ξP_i − (−1)^i X_i]P_{i+1}.
pub fn build_hxi(n: usize, xi: f64) -> Result<SparseOperator> {
    check_chain(n, 3)?;
    if !(xi > 0.0) {
        return invalid(format!("parent Hamiltonian needs xi > 0, got {xi}"));
    }
    use SiteOp::*;
    let mut terms = Vec::new();
    for i in 2..n {
        let (l, c, r) = (q(i - 1), q(i), q(i + 1));
        terms.push(LocalTerm::new(1.0 / xi, &[(l, P0), (c, P1), (r, P0)]));
        terms.push(LocalTerm::new(xi, &[(l, P0), (c, P0), (r, P0)]));
        terms.push(LocalTerm::new(-parity_sign(i), &[(l, P0), (c, X), (r, P0)]));
    }
    SparseOperator::from_terms(n, &terms)
}

/// Paramagnet Σ (I − (−1)^i X_i)/2 over interior sites.
pub fn build_hx(n: usize) -> Result<SparseOperator> {
    check_chain(n, 3)?;
    let mut terms = Vec::new();
    for i in 2..n {
        terms.push(LocalTerm::identity(0.5));
        terms.push(LocalTerm::new(-0.5 * parity_sign(i), &[(q(i), SiteOp::X)]));
    }
    SparseOperator::from_terms(n, &terms)
}

/// Target Hamiltonian of the adiabatic sweep, ground state |ξ=1⟩.
pub fn build_hp(n: usize) -> Result<SparseOperator> {
    check_chain(n, 3)?;
    use SiteOp::*;
    let mut terms = Vec::new();
    for i in 2..n {
        let (l, c, r) = (q(i - 1), q(i), q(i + 1));
        terms.push(LocalTerm::new(1.0, &[(l, P1), (c, P1)]));
        terms.push(LocalTerm::new(1.0, &[(c, P1), (r, P1)]));
        terms.push(LocalTerm::new(0.5, &[(l, P0), (r, P0)]));
        terms.push(LocalTerm::new(-0.5 * parity_sign(i), &[(l, P0), (c, X), (r, P0)]));
    }
    SparseOperator::from_terms(n, &terms)
}

/// Interpolation weights `(1 − s/T, s/T)`.
pub fn sweep_weights(s: f64, total: f64) -> Result<(f64, f64)> {
    if !(total > 0.0) || !(0.0..=total).contains(&s) {
        return invalid(format!("need 0 <= s <= T with T > 0, got s={s}, T={total}"));
    }
    let w = s / total;
    Ok((1.0 - w, w))
}

/// H(s) = (1 − s/T) H_X + (s/T) H_P.
pub fn build_hs(n: usize, s: f64, total: f64) -> Result<SparseOperator> {
    let (a, b) = sweep_weights(s, total)?;
    let hx = build_hx(n)?;
    let hp = build_hp(n)?;
    SparseOperator::linear_combination(&[(a, &hx), (b, &hp)])
}

/// Σ_i Z_i.
pub fn magnetization(n: usize) -> Result<SparseOperator> {
    let terms: Vec<LocalTerm> = (0..n).map(|k| LocalTerm::new(1.0, &[(k, SiteOp::Z)])).collect();
    SparseOperator::from_terms(n, &terms)
}

/// n_DW = Σ (1 − Z_iZ_{i+1})/2.
pub fn domain_wall_number(n: usize) -> Result<SparseOperator> {
    let mut terms = Vec::new();
    for k in 0..n.saturating_sub(1) {
        terms.push(LocalTerm::identity(0.5));
        terms.push(LocalTerm::new(-0.5, &[(k, SiteOp::Z), (k + 1, SiteOp::Z)]));
    }
    SparseOperator::from_terms(n, &terms)
}

/// Z on a single 1-based site.
pub fn pauli_z(n: usize, site: usize) -> Result<SparseOperator> {
    if site == 0 || site > n {
        return invalid(format!("site {site} outside 1..={n}"));
    }
    SparseOperator::from_terms(n, &[LocalTerm::new(1.0, &[(q(site), SiteOp::Z)])])
}

/// Top of the tower: N/2 − 1.
pub fn k_max(n: usize) -> Result<usize> {
    if n < 6 || n % 2 == 1 {
        return invalid(format!("compressed encoding needs even N >= 6, got {n}"));
    }
    Ok(n / 2 - 1)
}

/// Constant value of the λ part of H₀ in the compressed encoding.
pub const COMPRESSED_H_LAMBDA: f64 = 0.0;
/// Constant value of the Δ part of H₀ in the compressed encoding.
pub const COMPRESSED_H_DELTA: f64 = 2.0;

/// H_J on the k_max compressed qubits; even site `2i` maps to qubit `i − 1`.
pub fn build_hj_compressed(n: usize) -> Result<SparseOperator> {
    let kmax = k_max(n)?;
    let cq = |site: usize| site / 2 - 1;
    let mut terms = vec![
        LocalTerm::new(1.0, &[(cq(2), SiteOp::Z)]),
        LocalTerm::new(-1.0, &[(cq(n - 2), SiteOp::Z)]),
        LocalTerm::identity(1.0 - n as f64 / 2.0),
    ];
    for i in 1..=(n / 2 - 2) {
        terms.push(LocalTerm::new(-1.0, &[(cq(2 * i), SiteOp::Z), (cq(2 * i + 2), SiteOp::Z)]));
    }
    SparseOperator::from_terms(kmax, &terms)
}

/// E_k = ΔN + J(N−1) − (2Δ + 4J)k.
pub fn scar_energy(n: usize, k: usize, delta: f64, j: f64) -> f64 {
    let (n, k) = (n as f64, k as f64);
    delta * n + j * (n - 1.0) - (2.0 * delta + 4.0 * j) * k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::parse_bitstring;

    #[test]
    fn site_ops_match_matrices() {
        // Y|0> = i|1>, Y|1> = -i|0>
        assert_eq!(SiteOp::Y.act(0), Some((1, C64::new(0.0, 1.0))));
        assert_eq!(SiteOp::Y.act(1), Some((0, C64::new(0.0, -1.0))));
        assert_eq!(SiteOp::Raise.act(1), None);
        assert_eq!(SiteOp::Lower.act(1), Some((0, C64::new(1.0, 0.0))));
    }

    #[test]
    fn z_expectation_on_zero() {
        let z = pauli_z(1, 1).unwrap();
        let s = Statevector::zero_state(1).unwrap();
        assert!((z.expectation(&s).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matvec_is_linear() {
        let h = build_h0(5, 0.7, -0.3, 1.1).unwrap();
        let a = Statevector::basis_state(5, 3).unwrap();
        let b = Statevector::basis_state(5, 10).unwrap();
        let (ca, cb) = (C64::new(0.3, 0.2), C64::new(-1.1, 0.5));
        let lhs = h.matvec(&a.linear_combination(ca, &b, cb).unwrap()).unwrap();
        let rhs = h.matvec(&a).unwrap().linear_combination(ca, &h.matvec(&b).unwrap(), cb).unwrap();
        let diff: f64 = lhs.amplitudes().iter().zip(rhs.amplitudes()).map(|(x, y)| (x - y).norm()).sum();
        assert!(diff < 1e-12);
    }

    #[test]
    fn h0_is_hermitian_and_conserves_edges() {
        let n = 6;
        let h = build_h0(n, 1.0, 0.7, 0.3).unwrap();
        assert!(h.is_hermitian(1e-12));
        for site in [1, n] {
            let c = h.commutator(&pauli_z(n, site).unwrap()).unwrap();
            assert!(c.frobenius_norm() < 1e-12);
        }
        let c = h.commutator(&domain_wall_number(n).unwrap()).unwrap();
        assert!(c.frobenius_norm() < 1e-12);
    }

    #[test]
    fn hxi_on_vacuum() {
        for (n, xi) in [(6, 0.5), (8, 2.0)] {
            let h = build_hxi(n, xi).unwrap();
            let omega = Statevector::zero_state(n).unwrap();
            assert!((h.expectation(&omega).unwrap() - (n as f64 - 2.0) * xi).abs() < 1e-12);
        }
        assert!(build_hxi(6, 0.0).is_err());
    }

    #[test]
    fn interpolation_is_entrywise_linear() {
        let n = 5;
        let mid = build_hs(n, 1.5, 3.0).unwrap();
        let hx = build_hx(n).unwrap();
        let hp = build_hp(n).unwrap();
        let avg = SparseOperator::linear_combination(&[(0.5, &hx), (0.5, &hp)]).unwrap();
        let diff = SparseOperator::linear_combination(&[(1.0, &mid), (-1.0, &avg)]).unwrap();
        assert!(diff.frobenius_norm() < 1e-14);
        assert_eq!(build_hs(n, 0.0, 3.0).unwrap(), hx);
        assert!(build_hs(n, 3.5, 3.0).is_err());
    }

    #[test]
    fn compressed_hj_on_kmax_strings() {
        let h = build_hj_compressed(6).unwrap();
        for b in ["00", "10", "11"] {
            let s = Statevector::basis_state(2, parse_bitstring(b).unwrap()).unwrap();
            assert!((h.expectation(&s).unwrap() + 3.0).abs() < 1e-12, "{b}");
        }
        assert!(build_hj_compressed(7).is_err());
        assert_eq!(COMPRESSED_H_DELTA, 2.0);
    }

    #[test]
    fn restriction_keeps_block() {
        let h = build_hx(4).unwrap();
        let basis: Vec<usize> = (0..16).filter(|x| x & 0b1001 == 0).collect();
        let r = h.restrict(&basis).unwrap();
        assert_eq!(r.dim(), 4);
        assert!(r.is_hermitian(1e-14));
        assert!(h.restrict(&[3, 1]).is_err());
    }

    #[test]
    fn scar_energy_at_k0() {
        assert_eq!(scar_energy(10, 0, 0.7, 0.3), 0.7 * 10.0 + 0.3 * 9.0);
    }
}
