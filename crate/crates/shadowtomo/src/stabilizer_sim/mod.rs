//! Stabilizer-state simulation of the randomized-measurement protocol and conversion
//! of stabilizer states to Pauli-basis MPS.

mod clifford;
mod gf2;
mod pauli;
mod protocol;
mod snapfile;
mod tableau;
mod to_mps;

pub use clifford::{
    sample_clifford_1q, sample_clifford_2q, Clifford1Q, CliffordGate2Q, CLIFFORD_1Q_ORDER,
    CLIFFORD_2Q_ORDER,
};
pub(crate) use gf2::BitMatrix;
pub use pauli::PauliString;
pub use protocol::{
    draw_circuit, layer_pairs, run_protocol, sample_rng, sample_snapshot, CircuitSpec, Gate,
    SnapshotRecord, SnapshotStore,
};
pub use snapfile::{read_snapshots, write_snapshots};
pub use tableau::StabilizerState;
pub use to_mps::{extent, group_to_pauli_mps, reduce_extents, stabilizer_to_pauli_mps, Extent};
pub(crate) use to_mps::{group_character_mps, reduce_extents_tagged};
