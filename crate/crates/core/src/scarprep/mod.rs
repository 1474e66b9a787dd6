//! Circuits for individual scar eigenstates: a variational staircase ansatz
//! for general `k` and an exact construction for `k = k_max`.

pub mod ansatz;
pub mod kmax;
pub mod optimize;

pub use ansatz::{apply_ansatz, build_ansatz, expected_parameter_count, AnsatzSpec};
pub use kmax::{
    compressed_fib_projection, decode_index, decode_state, encode_pauli_pair, kmax_circuit, kmax_compressed_circuit,
    kmax_plan, CompressedTerm, KmaxPlan, Pauli,
};
pub use optimize::{optimize_ansatz, GradientMethod, OptimizeConfig, OptimizeReport, SectorAnsatz};
