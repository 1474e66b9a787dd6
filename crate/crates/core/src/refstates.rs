//! Reference states built by enumeration or sparse operator action, plus the
//! Fibonacci/binomial combinatorics of the constrained subspace.
//!
//! These constructors are deliberately naive: they serve as oracles for the
//! circuit, MPS and variational modules.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::hamiltonians::raising_operator;
use crate::qsim::{bit, has_adjacent_ones, Statevector};

/// Largest index whose Fibonacci number fits in `u64`.
pub const MAX_FIB_INDEX: usize = 93;

fn fib_table() -> &'static [u64] {
    static TABLE: OnceLock<Vec<u64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0u64, 1];
        for i in 2..=MAX_FIB_INDEX {
            t.push(t[i - 1] + t[i - 2]);
        }
        t
    })
}

/// Fibonacci number with F₀ = 0, F₁ = F₂ = 1. Panics past [`MAX_FIB_INDEX`].
pub fn fib(n: usize) -> u64 {
    assert!(n <= MAX_FIB_INDEX, "F_{n} overflows u64");
    fib_table()[n]
}

/// Arbitrary-precision Fibonacci number.
pub fn fib_big(n: usize) -> BigUint {
    let (mut a, mut b) = (BigUint::from(0u32), BigUint::from(1u32));
    for _ in 0..n {
        let next = &a + &b;
        a = std::mem::replace(&mut b, next);
    }
    a
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    // Each partial product is itself a binomial coefficient, so the division is exact.
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// 𝒩(N, k) = C(N−k−1, k): weight-k constrained strings with both edges 0.
pub fn count_constrained(n: usize, k: usize) -> u64 {
    if n < k + 1 {
        return 0;
    }
    binomial(n - k - 1, k)
}

/// Number of length-`m` strings without adjacent 1s: F_{m+2}.
pub fn fib_dim(m: usize) -> u64 {
    fib(m + 2)
}

/// Normalization Z(|ξ|²) = Σ_k |ξ|^{2k} 𝒩(N, k).
pub fn normalization_z(n: usize, xi_abs_sq: f64) -> f64 {
    (0..n)
        .map(|k| (k, count_constrained(n, k)))
        .take_while(|&(_, c)| c > 0)
        .map(|(k, c)| xi_abs_sq.powi(k as i32) * c as f64)
        .sum()
}

/// Basis indices of `n`-qubit strings without adjacent 1s, ascending.
pub fn constrained_strings(n: usize) -> impl Iterator<Item = usize> {
    (0..1usize << n).filter(|&x| !has_adjacent_ones(x))
}

/// Constrained strings of weight `k` on `n` qubits with qubits 0 and n−1 clear.
pub fn scar_support(n: usize, k: usize) -> Vec<usize> {
    let edges = 1usize | (1usize << (n - 1));
    constrained_strings(n).filter(|&x| x & edges == 0 && x.count_ones() as usize == k).collect()
}

fn state_from_fn(n: usize, amp: impl Fn(usize) -> C64) -> Result<Statevector> {
    let amps: Vec<C64> = (0..1usize << n).map(amp).collect();
    Statevector::from_amplitudes(amps)?.normalized()
}

/// `(−1)^{Σ sites}` over occupied 1-based sites of `x` on `n` qubits.
fn site_sign(x: usize, n: usize) -> f64 {
    let odd_occupied = (0..n).filter(|&q| bit(x, q, n) == 1 && q % 2 == 0).count();
    if odd_occupied % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// |ξ⟩ on N sites: Σ over constrained strings with both edges empty of
/// (∏(−1)^i) ξ^{|S|} |S⟩, normalized by √Z.
pub fn xi_state(n: usize, xi: C64) -> Result<Statevector> {
    if n < 4 {
        return invalid(format!("|xi> needs N >= 4, got {n}"));
    }
    let edges = 1usize | (1usize << (n - 1));
    let z = normalization_z(n, xi.norm_sqr());
    let amps: Vec<C64> = (0..1usize << n)
        .map(|x| {
            if x & edges != 0 || has_adjacent_ones(x) {
                return C64::new(0.0, 0.0);
            }
            xi.powu(x.count_ones()) * site_sign(x, n) / z.sqrt()
        })
        .collect();
    Statevector::from_amplitudes(amps)
}

/// |ξ; m⟩ (signed) or |ξ̃; m⟩ (`tilde`, all signs positive) on `m` qubits.
pub fn xi_inner_state(m: usize, xi: C64, tilde: bool) -> Result<Statevector> {
    if m == 0 {
        return invalid("inner block needs m >= 1");
    }
    state_from_fn(m, |x| {
        if has_adjacent_ones(x) {
            return C64::new(0.0, 0.0);
        }
        let mut a = xi.powu(x.count_ones());
        if !tilde {
            // inner qubit j (1-based) carries (−1)^{j+1}: negative on even j
            let negatives = (0..m).filter(|&q| bit(x, q, m) == 1 && q % 2 == 1).count();
            if negatives % 2 == 1 {
                a = -a;
            }
        }
        a
    })
}

/// |S_k⟩ = (Q†)^k |Ω⟩ / (k! √𝒩(N, k)).
pub fn scar_state(n: usize, k: usize) -> Result<Statevector> {
    if n < 3 {
        return invalid(format!("scar tower needs N >= 3, got {n}"));
    }
    let count = count_constrained(n, k);
    if count == 0 {
        return invalid(format!("k={k} outside the tower for N={n}"));
    }
    let q_dag = raising_operator(n)?;
    let mut v = Statevector::zero_state(n)?.into_amplitudes();
    for _ in 0..k {
        v = q_dag.apply(&v);
    }
    let factorial: f64 = (1..=k).map(|i| i as f64).product();
    let scale = 1.0 / (factorial * (count as f64).sqrt());
    Statevector::from_amplitudes(v.into_iter().map(|a| a * scale).collect())
}

/// |S̃_k⟩: the all-positive version of [`scar_state`].
pub fn scar_state_tilde(n: usize, k: usize) -> Result<Statevector> {
    Ok(tilde_transform(&scar_state(n, k)?))
}

fn equal_superposition(m: usize, support: Vec<usize>, what: &str) -> Result<Statevector> {
    if m == 0 {
        return invalid("register needs at least one qubit");
    }
    if support.is_empty() {
        return Err(Error::EmptySupport(what.to_string()));
    }
    let a = C64::new(1.0 / (support.len() as f64).sqrt(), 0.0);
    let mut amps = vec![C64::new(0.0, 0.0); 1 << m];
    for x in support {
        amps[x] = a;
    }
    Statevector::from_amplitudes(amps)
}

/// |D^m_k⟩: equal superposition of weight-k strings without adjacent 1s.
pub fn projected_dicke(m: usize, k: usize) -> Result<Statevector> {
    let support = constrained_strings(m).filter(|x| x.count_ones() as usize == k).collect();
    equal_superposition(m, support, &format!("no constrained strings with m={m}, k={k}"))
}

/// |d^m_k⟩: equal superposition of all weight-k strings.
pub fn dicke(m: usize, k: usize) -> Result<Statevector> {
    let support = (0..1usize << m).filter(|x| x.count_ones() as usize == k).collect();
    equal_superposition(m, support, &format!("no weight-{k} strings on {m} qubits"))
}

/// Zeroes amplitudes with a "11" pair inside qubits `first..=last`. Returns
/// the unnormalized result and its squared norm.
pub fn apply_fib_projector(
    state: &Statevector,
    first: usize,
    last: usize,
) -> Result<(Statevector, f64)> {
    let n = state.n_qubits();
    if first > last || last >= n {
        return invalid(format!("projector range {first}..={last} invalid for {n} qubits"));
    }
    let width = last - first + 1;
    let shift = n - 1 - last;
    let mask = (1usize << width) - 1;
    let amps: Vec<C64> = state
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(x, &a)| if has_adjacent_ones((x >> shift) & mask) { C64::new(0.0, 0.0) } else { a })
        .collect();
    let out = Statevector::from_amplitudes(amps)?;
    let weight = out.norm_sqr();
    Ok((out, weight))
}

/// ∏ Z over odd chain sites, i.e. qubits 0, 2, 4, …
pub fn tilde_transform(state: &Statevector) -> Statevector {
    let qubits: Vec<usize> = (0..state.n_qubits()).step_by(2).collect();
    state.apply_z_layer(&qubits)
}

/// |0⟩ ⊗ inner ⊗ |0⟩.
pub fn embed_with_boundaries(inner: &Statevector) -> Result<Statevector> {
    let zero = Statevector::zero_state(1)?;
    zero.kron(inner)?.kron(&zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::parse_bitstring;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn max_diff(a: &Statevector, b: &Statevector) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn amp(s: &Statevector, bits: &str) -> C64 {
        s.amplitude(parse_bitstring(bits).unwrap())
    }

    #[test]
    fn fibonacci_prefix() {
        let got: Vec<u64> = (1..=6).map(fib).collect();
        assert_eq!(got, [1, 1, 2, 3, 5, 8]);
        assert_eq!(fib_big(14), BigUint::from(377u32));
        assert_eq!(fib_big(93), BigUint::from(fib(93)));
    }

    #[test]
    fn fib_dim_counts_strings() {
        for m in 1..=20 {
            assert_eq!(constrained_strings(m).count() as u64, fib_dim(m), "m={m}");
        }
    }

    #[test]
    fn count_constrained_matches_enumeration() {
        for n in 3..=14 {
            for k in 0..n {
                assert_eq!(count_constrained(n, k), scar_support(n, k).len() as u64, "N={n} k={k}");
            }
        }
        assert_eq!(count_constrained(14, 5), 56);
    }

    #[test]
    fn z_at_one_is_fib_dim() {
        for n in 4..=20 {
            assert_eq!(normalization_z(n, 1.0), fib_dim(n - 2) as f64);
        }
    }

    #[test]
    fn xi_state_n4() {
        let s = xi_state(4, c(1.0)).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((amp(&s, "0000") - c(r)).norm() < 1e-14);
        // site 2 carries (−1)² = +1, site 3 carries (−1)³ = −1
        assert!((amp(&s, "0100") - c(r)).norm() < 1e-14);
        assert!((amp(&s, "0010") - c(-r)).norm() < 1e-14);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn xi_zero_is_vacuum() {
        let s = xi_state(8, c(0.0)).unwrap();
        assert_eq!(s, Statevector::zero_state(8).unwrap());
        assert!(xi_state(3, c(1.0)).is_err());
    }

    #[test]
    fn xi_state_n14_support() {
        let s = xi_state(14, c(1.0)).unwrap();
        let support = s.amplitudes().iter().filter(|a| a.norm() > 0.0).count();
        assert_eq!(support, 377);
        assert_eq!(normalization_z(14, 1.0), 377.0);
    }

    #[test]
    fn inner_state_examples() {
        let s = xi_inner_state(2, c(1.0), true).unwrap();
        let r = 1.0 / 3f64.sqrt();
        for b in ["00", "10", "01"] {
            assert!((amp(&s, b) - c(r)).norm() < 1e-14);
        }
        let s = xi_inner_state(4, c(1.0), true).unwrap();
        assert_eq!(s.amplitudes().iter().filter(|a| (a.re - 8f64.sqrt().recip()).abs() < 1e-14).count(), 8);
        let s = xi_inner_state(3, c(2.0), true).unwrap();
        let r = 29f64.sqrt();
        for (b, w) in [("000", 1.0), ("100", 2.0), ("010", 2.0), ("001", 2.0), ("101", 4.0)] {
            assert!((amp(&s, b) - c(w / r)).norm() < 1e-14, "{b}");
        }
    }

    #[test]
    fn embedding_identity() {
        for n in 4..=12 {
            for xi in [c(0.5), c(1.0), C64::new(0.3, -1.2)] {
                let full = xi_state(n, xi).unwrap();
                let emb = embed_with_boundaries(&xi_inner_state(n - 2, xi, false).unwrap()).unwrap();
                assert!(max_diff(&full, &emb) < 1e-12, "N={n} xi={xi}");
            }
        }
    }

    #[test]
    fn scar_state_examples() {
        assert_eq!(scar_state(8, 0).unwrap(), Statevector::zero_state(8).unwrap());
        let s = scar_state(14, 5).unwrap();
        assert_eq!(s.amplitudes().iter().filter(|a| a.norm() > 1e-14).count(), 56);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        let s = scar_state(6, 2).unwrap();
        let support: Vec<usize> = (0..64).filter(|&x| s.amplitude(x).norm() > 1e-14).collect();
        assert_eq!(support, scar_support(6, 2));
        assert_eq!(support.len(), 3);
        assert!(scar_state(6, 3).is_err());
    }

    #[test]
    fn scar_amplitudes_have_site_signs() {
        for (n, k) in [(8, 2), (9, 3), (10, 4)] {
            let s = scar_state(n, k).unwrap();
            let a = 1.0 / (count_constrained(n, k) as f64).sqrt();
            for x in scar_support(n, k) {
                assert!((s.amplitude(x) - c(a * site_sign(x, n))).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn xi_decomposes_onto_tower() {
        for n in 4..=12 {
            for xi in [0.5, 1.0, 2.0] {
                let z = normalization_z(n, xi * xi);
                let mut acc = Statevector::from_amplitudes(vec![c(0.0); 1 << n]).unwrap();
                for k in 0..n {
                    let cnt = count_constrained(n, k);
                    if cnt == 0 {
                        break;
                    }
                    let w = xi.powi(k as i32) * (cnt as f64 / z).sqrt();
                    acc = acc.linear_combination(c(1.0), &scar_state(n, k).unwrap(), c(w)).unwrap();
                }
                assert!(max_diff(&acc, &xi_state(n, c(xi)).unwrap()) < 1e-10);
            }
        }
    }

    #[test]
    fn dicke_examples() {
        let d = projected_dicke(4, 2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        for b in ["0101", "1001", "1010"] {
            assert!((amp(&d, b) - c(r)).norm() < 1e-14);
        }
        let d = projected_dicke(6, 2).unwrap();
        assert_eq!(d.amplitudes().iter().filter(|a| a.norm() > 0.0).count(), 10);
        assert_eq!(projected_dicke(5, 0).unwrap(), Statevector::zero_state(5).unwrap());
        assert!(matches!(projected_dicke(4, 3), Err(Error::EmptySupport(_))));
    }

    #[test]
    fn tilde_scar_is_padded_dicke() {
        for (n, k) in [(6, 2), (8, 2), (10, 3)] {
            let lhs = scar_state_tilde(n, k).unwrap();
            let rhs = embed_with_boundaries(&projected_dicke(n - 2, k).unwrap()).unwrap();
            assert!(max_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn dicke_recursion() {
        for big_n in 3..=14usize {
            for n in 1..=(big_n + 1) / 2 {
                let lhs = projected_dicke(big_n, n).unwrap();
                let a = (n as f64 / (big_n - n + 1) as f64).sqrt();
                let b = ((big_n + 1 - 2 * n) as f64 / (big_n - n + 1) as f64).sqrt();
                let mut rhs = vec![c(0.0); 1 << big_n];
                if let Ok(t) = projected_dicke(big_n - 2, n - 1) {
                    let tail = Statevector::basis_state(2, 0b01).unwrap();
                    for (x, v) in t.kron(&tail).unwrap().amplitudes().iter().enumerate() {
                        rhs[x] += v * a;
                    }
                }
                if let Ok(t) = projected_dicke(big_n - 1, n) {
                    let tail = Statevector::zero_state(1).unwrap();
                    for (x, v) in t.kron(&tail).unwrap().amplitudes().iter().enumerate() {
                        rhs[x] += v * b;
                    }
                }
                let rhs = Statevector::from_amplitudes(rhs).unwrap();
                assert!(max_diff(&lhs, &rhs) < 1e-12, "N={big_n} n={n}");
            }
        }
    }

    #[test]
    fn fib_projector_examples() {
        let s = Statevector::basis_state(2, 0b11).unwrap();
        assert_eq!(apply_fib_projector(&s, 0, 1).unwrap().1, 0.0);

        let b = xi_inner_state(2, c(1.0), true).unwrap();
        let (_, w) = apply_fib_projector(&b.kron(&b).unwrap(), 0, 3).unwrap();
        assert!((w - 8.0 / 9.0).abs() < 1e-14);

        let (p, w) = apply_fib_projector(&dicke(4, 2).unwrap(), 0, 3).unwrap();
        assert!((w - 0.5).abs() < 1e-14);
        assert!(max_diff(&p.normalized().unwrap(), &projected_dicke(4, 2).unwrap()) < 1e-14);
        assert!(apply_fib_projector(&s, 1, 2).is_err());
    }

    #[test]
    fn tilde_examples() {
        let s = scar_state(8, 2).unwrap();
        let t = scar_state_tilde(8, 2).unwrap();
        assert!(max_diff(&tilde_transform(&t), &s) < 1e-12);
        assert!(t.amplitudes().iter().all(|a| a.re >= -1e-15));
        let omega = Statevector::zero_state(6).unwrap();
        assert_eq!(tilde_transform(&omega), omega);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tilde_is_involution(re in proptest::collection::vec(-1.0f64..1.0, 16), im in proptest::collection::vec(-1.0f64..1.0, 16)) {
                let v = Statevector::from_amplitudes(re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect()).unwrap();
                prop_assert_eq!(tilde_transform(&tilde_transform(&v)), v);
            }

            #[test]
            fn xi_state_is_normalized(n in 4usize..12, re in -3.0f64..3.0, im in -3.0f64..3.0) {
                let s = xi_state(n, C64::new(re, im)).unwrap();
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }
    }
}
