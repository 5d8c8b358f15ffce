use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::clifford::{sample_clifford_1q, sample_clifford_2q, Clifford1Q, CliffordGate2Q};
use super::tableau::StabilizerState;
use crate::error::{Error, Result};

/// Brick-wall circuit geometry on a ring.
///
/// Layer 1 couples `(0,1), (2,3), …`; layer 2 couples `(1,2), (3,4), …, (n−1,0)`;
/// layers alternate. For odd `n` one site idles in every layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitSpec {
    pub n: usize,
    pub depth: usize,
    pub seed: u64,
}

impl CircuitSpec {
    pub fn new(n: usize, depth: usize, seed: u64) -> Self {
        Self { n, depth, seed }
    }

    /// Gate positions of layer `layer` (1-based), left to right.
    pub fn layer_pairs(&self, layer: usize) -> Vec<(usize, usize)> {
        layer_pairs(self.n, layer)
    }
}

pub fn layer_pairs(n: usize, layer: usize) -> Vec<(usize, usize)> {
    if n < 2 || layer == 0 {
        return Vec::new();
    }
    let offset = if layer % 2 == 1 { 0 } else { 1 };
    let count = n / 2;
    let mut pairs = Vec::with_capacity(count);
    for k in 0..count {
        let a = offset + 2 * k;
        if a + 1 < n || (n.is_multiple_of(2) && a + 1 == n) {
            pairs.push((a % n, (a + 1) % n));
        }
    }
    pairs
}

/// One measured snapshot `σ̂ = U†|b⟩⟨b|U`.
#[derive(Clone, Debug)]
pub struct SnapshotRecord {
    pub index: u64,
    pub stream: u64,
    pub state: StabilizerState,
}

/// Ordered collection of snapshots with the circuit metadata that produced them.
#[derive(Clone, Debug)]
pub struct SnapshotStore {
    pub n: usize,
    pub depth: usize,
    pub seed: u64,
    pub label: String,
    pub records: Vec<SnapshotRecord>,
}

impl SnapshotStore {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &StabilizerState> {
        self.records.iter().map(|r| &r.state)
    }
}

/// Independent RNG stream for sample `index` under `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A gate in a drawn circuit instance.
// Gates are stored inline so a drawn circuit is one contiguous allocation.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug)]
pub enum Gate {
    One(Clifford1Q),
    Two(CliffordGate2Q),
}

impl Gate {
    pub fn inverse(&self) -> Gate {
        match self {
            Gate::One(g) => Gate::One(g.inverse()),
            Gate::Two(g) => Gate::Two(g.inverse()),
        }
    }
}

fn idle_sites(n: usize, layer: usize) -> Vec<usize> {
    let mut busy = vec![false; n];
    for (a, b) in layer_pairs(n, layer) {
        busy[a] = true;
        busy[b] = true;
    }
    (0..n).filter(|&i| !busy[i]).collect()
}

/// Draw the gates of one circuit instance in time order.
///
/// Depth 0 is a layer of random single-qubit Cliffords (random Pauli-basis
/// measurement). For odd `n`, the site left idle by the first and by the last
/// brick-wall layer also receives a random single-qubit Clifford so that every
/// qubit is locally scrambled at both ends of the circuit.
pub fn draw_circuit(spec: &CircuitSpec, rng: &mut ChaCha8Rng) -> Vec<Gate> {
    let n = spec.n;
    let mut gates = Vec::new();
    if spec.depth == 0 {
        gates.extend((0..n).map(|i| Gate::One(sample_clifford_1q(rng, i))));
        return gates;
    }
    gates.extend(
        idle_sites(n, 1)
            .into_iter()
            .map(|i| Gate::One(sample_clifford_1q(rng, i))),
    );
    for layer in 1..=spec.depth {
        for s in spec.layer_pairs(layer) {
            gates.push(Gate::Two(sample_clifford_2q(rng, s)));
        }
    }
    if spec.depth > 1 {
        gates.extend(
            idle_sites(n, spec.depth)
                .into_iter()
                .map(|i| Gate::One(sample_clifford_1q(rng, i))),
        );
    }
    gates
}

/// One round of the protocol: evolve `state` by a fresh random circuit, measure all
/// qubits in Z (left to right), and return the snapshot and the measured bits.
pub fn sample_snapshot(
    state: &StabilizerState,
    spec: &CircuitSpec,
    rng: &mut ChaCha8Rng,
) -> (StabilizerState, Vec<bool>) {
    let gates = draw_circuit(spec, rng);
    let mut evolved = state.clone();
    for g in &gates {
        evolved.apply(g);
    }
    let bits: Vec<bool> = (0..spec.n).map(|q| evolved.measure_z(q, rng)).collect();
    let mut snap = StabilizerState::basis_state(&bits);
    for g in gates.iter().rev() {
        snap.apply(&g.inverse());
    }
    (snap, bits)
}

/// Run the randomized-measurement protocol for `samples` shots.
pub fn run_protocol(
    state: &StabilizerState,
    spec: &CircuitSpec,
    samples: usize,
    label: &str,
) -> Result<SnapshotStore> {
    if state.n() != spec.n {
        return Err(Error::Mismatch(format!(
            "state has {} qubits, circuit {}",
            state.n(),
            spec.n
        )));
    }
    let records = (0..samples as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = sample_rng(spec.seed, index);
            let (snap, _) = sample_snapshot(state, spec, &mut rng);
            SnapshotRecord {
                index,
                stream: index,
                state: snap,
            }
        })
        .collect();
    Ok(SnapshotStore {
        n: spec.n,
        depth: spec.depth,
        seed: spec.seed,
        label: label.to_string(),
        records,
    })
}
