//! Circuit IR: typed gate descriptors, sequential simulation, CNOT-equivalent
//! bookkeeping, and the `.qc.json` document format.
//!
//! Gate list order is application order: `gates[0]` acts first.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::qsim::{check_distinct, Statevector};

/// Unitarity tolerance applied to `ublock` matrices on construction and parse.
pub const UNITARY_TOL: f64 = 1e-10;

/// Largest register a dense `ublock` may span.
pub const MAX_UBLOCK_QUBITS: usize = 6;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// Y rotation `cos(θ/2) I - i sin(θ/2) σʸ`.
    Ry,
    /// Y rotation on `qubits[1]` when `qubits[0]` is |0⟩.
    Cry0,
    /// Y rotation on `qubits[1]` when `qubits[0]` is |1⟩.
    Cry1,
    X,
    Z,
    Cnot,
    /// NOT on `qubits[1]` when `qubits[0]` is |0⟩.
    C0not,
    Ccnot,
    /// `[ctrl, p, q]`: XY rotation of the pair `(p, q)` when `ctrl` is |0⟩.
    Cxy,
    /// `[a, p, q, b]` on consecutive qubits: XY rotation of `(p, q)` when both
    /// `a` and `b` are |0⟩.
    Dcxy,
    /// Dense unitary on 1..=6 qubits.
    Ublock,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Ry => "ry",
            GateKind::Cry0 => "cry0",
            GateKind::Cry1 => "cry1",
            GateKind::X => "x",
            GateKind::Z => "z",
            GateKind::Cnot => "cnot",
            GateKind::C0not => "c0not",
            GateKind::Ccnot => "ccnot",
            GateKind::Cxy => "cxy",
            GateKind::Dcxy => "dcxy",
            GateKind::Ublock => "ublock",
        }
    }

    fn arity(self) -> Option<usize> {
        match self {
            GateKind::Ry | GateKind::X | GateKind::Z => Some(1),
            GateKind::Cry0 | GateKind::Cry1 | GateKind::Cnot | GateKind::C0not => Some(2),
            GateKind::Ccnot | GateKind::Cxy => Some(3),
            GateKind::Dcxy => Some(4),
            GateKind::Ublock => None,
        }
    }

    fn is_rotation(self) -> bool {
        matches!(
            self,
            GateKind::Ry | GateKind::Cry0 | GateKind::Cry1 | GateKind::Cxy | GateKind::Dcxy
        )
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
    angle: Option<f64>,
    /// Row-major, `ublock` only.
    matrix: Option<Vec<C64>>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn ry_matrix(theta: f64) -> [C64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    [C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]
}

/// Identity on `2^k` except that the block addressed by `active` local
/// indices is replaced by `block` (row-major over `active`).
fn embed_block(k: usize, active: &[usize], block: &[C64]) -> Vec<C64> {
    let d = 1 << k;
    let mut m = vec![zero(); d * d];
    for i in 0..d {
        m[i * d + i] = one();
    }
    let a = active.len();
    for (r, &ir) in active.iter().enumerate() {
        for (c, &ic) in active.iter().enumerate() {
            m[ir * d + ic] = block[r * a + c];
        }
    }
    m
}

/// The 2x2 XY rotation on `{|01⟩, |10⟩}` of the middle pair.
fn xy_block(theta: f64) -> [C64; 4] {
    let (s, c) = theta.sin_cos();
    // columns: |01> -> c|01> + s|10>, |10> -> -s|01> + c|10>
    [C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]
}

impl Gate {
    fn rotation(kind: GateKind, qubits: Vec<usize>, theta: f64) -> Self {
        Self { kind, qubits, angle: Some(theta), matrix: None }
    }

    fn fixed(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self { kind, qubits, angle: None, matrix: None }
    }

    pub fn ry(target: usize, theta: f64) -> Self {
        Self::rotation(GateKind::Ry, vec![target], theta)
    }

    pub fn cry0(control: usize, target: usize, theta: f64) -> Self {
        Self::rotation(GateKind::Cry0, vec![control, target], theta)
    }

    pub fn cry1(control: usize, target: usize, theta: f64) -> Self {
        Self::rotation(GateKind::Cry1, vec![control, target], theta)
    }

    pub fn x(target: usize) -> Self {
        Self::fixed(GateKind::X, vec![target])
    }

    pub fn z(target: usize) -> Self {
        Self::fixed(GateKind::Z, vec![target])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::fixed(GateKind::Cnot, vec![control, target])
    }

    pub fn c0not(control: usize, target: usize) -> Self {
        Self::fixed(GateKind::C0not, vec![control, target])
    }

    pub fn ccnot(c1: usize, c2: usize, target: usize) -> Self {
        Self::fixed(GateKind::Ccnot, vec![c1, c2, target])
    }

    pub fn cxy(control: usize, p: usize, q: usize, theta: f64) -> Self {
        Self::rotation(GateKind::Cxy, vec![control, p, q], theta)
    }

    /// Four-qubit block starting at `first`; the middle pair rotates by `theta`.
    pub fn dcxy(first: usize, theta: f64) -> Self {
        Self::rotation(GateKind::Dcxy, vec![first, first + 1, first + 2, first + 3], theta)
    }

    /// Dense block; fails unless `matrix` is unitary within [`UNITARY_TOL`].
    pub fn ublock(qubits: Vec<usize>, matrix: Vec<C64>) -> Result<Self> {
        let g = Self { kind: GateKind::Ublock, qubits, angle: None, matrix: Some(matrix) };
        g.validate_shape()?;
        Ok(g)
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }

    /// Copy with every qubit index moved up by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        let mut g = self.clone();
        g.qubits.iter_mut().for_each(|q| *q += offset);
        g
    }

    /// Checks arity, angle/matrix presence and unitarity; independent of register size.
    fn validate_shape(&self) -> Result<()> {
        let k = self.qubits.len();
        match self.kind.arity() {
            Some(a) if a != k => {
                return Err(Error::Gate(format!("{} expects {a} qubits, got {k}", self.kind)))
            }
            None if !(1..=MAX_UBLOCK_QUBITS).contains(&k) => {
                return Err(Error::Gate(format!(
                    "ublock spans {k} qubits, allowed 1..={MAX_UBLOCK_QUBITS}"
                )))
            }
            _ => {}
        }
        if self.kind.is_rotation() {
            match self.angle {
                Some(a) if a.is_finite() => {}
                _ => return Err(Error::Gate(format!("{} needs a finite angle", self.kind))),
            }
        } else if self.angle.is_some() {
            return Err(Error::Gate(format!("{} takes no angle", self.kind)));
        }
        if self.kind == GateKind::Dcxy && self.qubits.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::Gate("dcxy must act on four consecutive qubits".into()));
        }
        match (&self.matrix, self.kind) {
            (Some(m), GateKind::Ublock) => {
                let d = 1 << k;
                if m.len() != d * d {
                    return Err(Error::Gate(format!(
                        "ublock on {k} qubits needs {} entries, got {}",
                        d * d,
                        m.len()
                    )));
                }
                let dev = unitarity_defect(m, d);
                if dev > UNITARY_TOL {
                    return Err(Error::Validation(format!(
                        "ublock matrix is not unitary (max |U†U - I| = {dev:e})"
                    )));
                }
            }
            (None, GateKind::Ublock) => return Err(Error::Gate("ublock needs a matrix".into())),
            (Some(_), kind) => return Err(Error::Gate(format!("{kind} takes no matrix"))),
            (None, _) => {}
        }
        Ok(())
    }

    /// Full validation against an `n`-qubit register.
    pub fn check_qubits(&self, n: usize) -> Result<()> {
        self.validate_shape()?;
        check_distinct(&self.qubits, n)
    }

    /// Explicit row-major matrix on the gate's own `2^arity` space, with
    /// `qubits[0]` as the most significant local bit.
    pub fn matrix(&self) -> Vec<C64> {
        let theta = self.angle.unwrap_or(0.0);
        match self.kind {
            GateKind::Ry => ry_matrix(theta).to_vec(),
            GateKind::Cry0 => embed_block(2, &[0, 1], &ry_matrix(theta)),
            GateKind::Cry1 => embed_block(2, &[2, 3], &ry_matrix(theta)),
            GateKind::X => vec![zero(), one(), one(), zero()],
            GateKind::Z => vec![one(), zero(), zero(), -one()],
            GateKind::Cnot => embed_block(2, &[2, 3], &[zero(), one(), one(), zero()]),
            GateKind::C0not => embed_block(2, &[0, 1], &[zero(), one(), one(), zero()]),
            GateKind::Ccnot => embed_block(3, &[6, 7], &[zero(), one(), one(), zero()]),
            // local |ctrl p q>: ctrl=0, pq=01 -> 1, pq=10 -> 2
            GateKind::Cxy => embed_block(3, &[0b001, 0b010], &xy_block(theta)),
            // local |a p q b>: a=b=0, pq=01 -> 0b0010, pq=10 -> 0b0100
            GateKind::Dcxy => embed_block(4, &[0b0010, 0b0100], &xy_block(theta)),
            GateKind::Ublock => self.matrix.clone().unwrap_or_default(),
        }
    }

    /// CNOT-equivalent cost used for gate-count reports.
    pub fn cnot_equivalent(&self) -> u64 {
        match self.kind {
            GateKind::Ry | GateKind::X | GateKind::Z => 0,
            GateKind::Cnot | GateKind::C0not => 1,
            GateKind::Cry0 | GateKind::Cry1 => 2,
            GateKind::Cxy => 6,
            GateKind::Ccnot => 10,
            GateKind::Dcxy => 12,
            // bookkeeping upper bound, not a synthesis result
            GateKind::Ublock => 4u64.pow(self.qubits.len() as u32),
        }
    }
}

/// max |(U†U - I)_ij| for a row-major `d x d` matrix.
pub fn unitarity_defect(m: &[C64], d: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let s: C64 = (0..d).map(|r| m[r * d + i].conj() * m[r * d + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    pub metadata: BTreeMap<String, Value>,
}

/// Per-kind tallies and the CNOT-equivalent estimate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub by_kind: BTreeMap<String, usize>,
    pub total: usize,
    pub single_qubit: usize,
    pub two_qubit: usize,
    pub multi_qubit: usize,
    pub cnot_equivalent: u64,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), metadata: BTreeMap::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.check_qubits(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends every gate of `other`, shifted by `offset` qubits.
    pub fn append(&mut self, other: &Circuit, offset: usize) -> Result<()> {
        for g in &other.gates {
            self.push(g.shifted(offset))?;
        }
        Ok(())
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn simulate(&self, initial: &Statevector) -> Result<Statevector> {
        if initial.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: initial.n_qubits(),
            });
        }
        let mut state = initial.clone();
        for g in &self.gates {
            state.apply_gate_mut(g)?;
        }
        Ok(state)
    }

    /// Runs on |0…0⟩.
    pub fn run(&self) -> Result<Statevector> {
        self.simulate(&Statevector::zero_state(self.n_qubits)?)
    }

    pub fn gate_counts(&self) -> GateCounts {
        let mut c = GateCounts::default();
        for g in &self.gates {
            *c.by_kind.entry(g.kind.name().to_string()).or_default() += 1;
            c.total += 1;
            match g.qubits.len() {
                1 => c.single_qubit += 1,
                2 => c.two_qubit += 1,
                _ => c.multi_qubit += 1,
            }
            c.cnot_equivalent += g.cnot_equivalent();
        }
        c
    }

    pub fn to_json(&self) -> String {
        let doc = CircuitDoc {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().map(GateDoc::from).map(|d| serde_json::to_value(d).expect("gate encodes")).collect(),
            metadata: self.metadata.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("circuit encodes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: CircuitDoc = serde_json::from_str(text)
            .map_err(|e| Error::Parse { index: None, message: e.to_string() })?;
        let mut circuit = Circuit::new(doc.n_qubits);
        circuit.metadata = doc.metadata;
        for (index, value) in doc.gates.into_iter().enumerate() {
            let gd: GateDoc = serde_json::from_value(value)
                .map_err(|e| Error::Parse { index: Some(index), message: e.to_string() })?;
            let gate = gd.into_gate();
            match gate.check_qubits(circuit.n_qubits) {
                Ok(()) => circuit.gates.push(gate),
                Err(Error::Validation(message)) => {
                    return Err(Error::Validation(format!("gate {index}: {message}")))
                }
                Err(e) => return Err(Error::Parse { index: Some(index), message: e.to_string() }),
            }
        }
        Ok(circuit)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDoc {
    n_qubits: usize,
    gates: Vec<Value>,
    #[serde(default)]
    metadata: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateDoc {
    kind: GateKind,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl From<&Gate> for GateDoc {
    fn from(g: &Gate) -> Self {
        let matrix = g.matrix.as_ref().map(|m| {
            let d = 1 << g.qubits.len();
            m.chunks(d).map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
        });
        GateDoc { kind: g.kind, qubits: g.qubits.clone(), angle: g.angle, matrix }
    }
}

impl GateDoc {
    fn into_gate(self) -> Gate {
        let matrix = self
            .matrix
            .map(|rows| rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect());
        Gate { kind: self.kind, qubits: self.qubits, angle: self.angle, matrix }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::{parse_bitstring, Statevector};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn all_kinds(theta: f64) -> Vec<Gate> {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        vec![
            Gate::ry(0, theta),
            Gate::cry0(0, 1, theta),
            Gate::cry1(0, 1, theta),
            Gate::x(0),
            Gate::z(0),
            Gate::cnot(0, 1),
            Gate::c0not(0, 1),
            Gate::ccnot(0, 1, 2),
            Gate::cxy(0, 1, 2, theta),
            Gate::dcxy(0, theta),
            Gate::ublock(vec![0], vec![h, h, h, -h]).unwrap(),
        ]
    }

    #[test]
    fn every_kind_is_unitary() {
        for theta in [0.0, 0.3, -1.7, PI] {
            for g in all_kinds(theta) {
                let d = 1 << g.qubits().len();
                assert!(unitarity_defect(&g.matrix(), d) < 1e-12, "{}", g.kind());
            }
        }
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(3);
        let s = Statevector::basis_state(3, 5).unwrap();
        assert_eq!(c.simulate(&s).unwrap(), s);
    }

    #[test]
    fn ry_half_pi_makes_plus() {
        let mut c = Circuit::new(1);
        c.push(Gate::ry(0, PI / 2.0)).unwrap();
        let out = c.run().unwrap();
        assert!((out.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((out.amplitude(1).re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn dcxy_middle_pair_rule() {
        let theta: f64 = 0.37;
        let (s, c) = theta.sin_cos();
        let g = Gate::dcxy(0, theta);
        let at = |st: &Statevector, b: &str| st.amplitude(parse_bitstring(b).unwrap()).re;

        let out = Statevector::basis_state(4, parse_bitstring("0010").unwrap())
            .unwrap()
            .apply_gate(&g)
            .unwrap();
        assert!((at(&out, "0010") - c).abs() < 1e-15);
        assert!((at(&out, "0100") - s).abs() < 1e-15);

        let out = Statevector::basis_state(4, parse_bitstring("0100").unwrap())
            .unwrap()
            .apply_gate(&g)
            .unwrap();
        assert!((at(&out, "0100") - c).abs() < 1e-15);
        assert!((at(&out, "0010") + s).abs() < 1e-15);

        for b in ["1010", "0011", "1100", "0000", "0110", "1111", "1001"] {
            let x = parse_bitstring(b).unwrap();
            let out = Statevector::basis_state(4, x).unwrap().apply_gate(&g).unwrap();
            assert_eq!(out.amplitude(x), C64::new(1.0, 0.0), "{b}");
        }
    }

    #[test]
    fn cxy_needs_only_its_control() {
        let theta = 0.9;
        // [ctrl=2, p=0, q=1]: pair 01 -> rotates into 10 when ctrl is 0
        let g = Gate::cxy(2, 0, 1, theta);
        let out = Statevector::basis_state(3, parse_bitstring("010").unwrap())
            .unwrap()
            .apply_gate(&g)
            .unwrap();
        assert!((out.amplitude(parse_bitstring("100").unwrap()).re - theta.sin()).abs() < 1e-15);
        let x = parse_bitstring("011").unwrap();
        let out = Statevector::basis_state(3, x).unwrap().apply_gate(&g).unwrap();
        assert_eq!(out.amplitude(x), C64::new(1.0, 0.0));
    }

    #[test]
    fn arity_and_shape_checks() {
        let mut c = Circuit::new(3);
        assert!(c.push(Gate::ry(3, 0.1)).is_err());
        assert!(c.push(Gate::ccnot(0, 0, 1)).is_err());
        assert!(c.push(Gate::dcxy(0, 0.1)).is_err());
        let bad = Gate::ublock(vec![0], vec![C64::new(1.0, 0.0); 4]);
        assert!(matches!(bad, Err(Error::Validation(_))));
        assert!(Gate::ublock(vec![0, 1], vec![C64::new(1.0, 0.0); 4]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut c = Circuit::new(4).with_metadata("name", "all kinds");
        for g in all_kinds(0.123_456_789_012_345_67) {
            c.push(g).unwrap();
        }
        c.push(Gate::ry(3, 1.0 / 3.0)).unwrap();
        let back = Circuit::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn json_errors_name_the_gate() {
        let text = r#"{"n_qubits": 2, "gates": [
            {"kind": "ry", "qubits": [0], "angle": 0.5},
            {"kind": "spin", "qubits": [1]}
        ], "metadata": {}}"#;
        match Circuit::from_json(text) {
            Err(Error::Parse { index: Some(1), .. }) => {}
            other => panic!("expected parse error at gate 1, got {other:?}"),
        }
        let text = r#"{"n_qubits": 1, "gates": [
            {"kind": "ublock", "qubits": [0], "matrix": [[[1,0],[1,0]],[[0,0],[1,0]]]}
        ]}"#;
        assert!(matches!(Circuit::from_json(text), Err(Error::Validation(_))));
        let text = r#"{"n_qubits": 1, "gates": [{"kind": "ry", "qubits": [2], "angle": 1}]}"#;
        assert!(matches!(Circuit::from_json(text), Err(Error::Parse { index: Some(0), .. })));
    }

    #[test]
    fn counts_use_cnot_weights() {
        let mut c = Circuit::new(4);
        c.push(Gate::ry(0, 0.1)).unwrap();
        c.push(Gate::cry0(0, 1, 0.2)).unwrap();
        c.push(Gate::ccnot(0, 1, 2)).unwrap();
        c.push(Gate::dcxy(0, 0.2)).unwrap();
        c.push(Gate::cxy(0, 1, 2, 0.2)).unwrap();
        c.push(Gate::c0not(2, 3)).unwrap();
        let k = c.gate_counts();
        assert_eq!(k.total, 6);
        assert_eq!(k.two_qubit, 2);
        assert_eq!(k.cnot_equivalent, 2 + 10 + 12 + 6 + 1);
        assert_eq!(k.by_kind["ry"], 1);
    }
}
