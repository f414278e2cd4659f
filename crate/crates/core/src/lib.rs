//! Enumeration of bi-local Clifford entanglement-distillation protocols
//! in the binary-symplectic picture, their concatenation with
//! repetition-code advantage distillation, and the resulting BB84 key
//! rates and QKD security bounds.
//!
//! The building blocks:
//!
//! - [`f2`]: bit-packed GF(2) linear algebra, the symplectic form, and
//!   the binary encoding of Pauli strings and Bell-state labels.
//! - [`protocol`]: one symplectic representative per distillation-
//!   equivalence class, indexed by isotropic subspaces, with a checksummed
//!   binary cache format.
//! - [`state`]: Bell-diagonal states, noise models, and component
//!   permutations.
//! - [`distill`]: pushforward statistics, the closed-form 2-to-1 and
//!   repetition-code maps, ED+AD concatenation, and exhaustive search.
//! - [`keyrate`]: BB84 rates, the secret-key condition, critical-QBER
//!   solvers, and finite-round mutual-information envelopes.
//! - [`verify`]: the self-contained oracle suite behind `distill verify`.
//!
//! All values are immutable after construction and every operation is a
//! pure function; with the default `parallel` feature the exhaustive
//! searches fan out over rayon with an order-independent reduction, and
//! without it they fall back to sequential loops.

pub mod distill;
pub mod error;
pub mod f2;
pub mod keyrate;
pub mod protocol;
pub mod state;
pub mod verify;

pub use distill::{
    concatenate_ed_ad, dejmps, dejmps_protocol, dejmps_recursive, pushforward_statistics,
    pushforward_statistics_multi, repetition_ad, repetition_protocol, BestProtocol,
    DistillationOutcome, EdAdOutcome, Objective, ProtocolEvaluator, PushforwardTable,
};
pub use error::{Error, Result};
pub use f2::{generate_symplectic_group, BellLabel, F2Matrix, PauliVector};
pub use keyrate::{
    bb84_rate, binary_entropy, ck_condition, critical_qber, critical_qber_with_bracket,
    finite_envelope, mutual_info_difference, CriticalQber, EdConfig, EnvelopeProtocol,
    KeyRateInputs, SecurityFamily,
};
pub use protocol::{
    build_transversal, complete_to_protocol, counting_formulas, decode_transversal,
    encode_transversal, enumerate_isotropic_subspaces, read_transversal, write_transversal,
    SymplecticProtocol, Transversal, MAX_PAIRS,
};
pub use state::{BellDiagonalState, ComponentPermutation, PermSet};
