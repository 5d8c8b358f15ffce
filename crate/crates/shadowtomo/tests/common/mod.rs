//! Dense-matrix oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use shadowtomo::stabilizer_sim::{
    draw_circuit, sample_rng, CircuitSpec, PauliString, StabilizerState,
};

pub type CMat = DMatrix<Complex<f64>>;

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// Dense matrix of a signed Pauli string; qubit `i` is bit `i` of the basis index.
pub fn dense_pauli(p: &PauliString) -> CMat {
    let n = p.len();
    let dim = 1usize << n;
    let mut m = CMat::zeros(dim, dim);
    for col in 0..dim {
        let mut row = col;
        let mut amp = c(p.sign() as f64, 0.0);
        for i in 0..n {
            let bit = (col >> i) & 1;
            match p.get(i) {
                1 => row ^= 1 << i,
                2 => {
                    row ^= 1 << i;
                    amp *= if bit == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) };
                }
                3 if bit == 1 => {
                    amp = -amp;
                }
                _ => {}
            }
        }
        m[(row, col)] = amp;
    }
    m
}

/// `ρ = Π_j (1 + g_j) / 2ⁿ`.
pub fn dense_state(s: &StabilizerState) -> CMat {
    let dim = 1usize << s.n();
    let id = CMat::identity(dim, dim);
    s.generators()
        .iter()
        .fold(id.clone() / c(dim as f64, 0.0), |acc, g| {
            acc * (&id + dense_pauli(g))
        })
}

pub fn trace_product(a: &CMat, b: &CMat) -> f64 {
    (a * b).trace().re
}

/// Random stabilizer state from a deep random circuit on `|0…0⟩`.
pub fn random_stabilizer(n: usize, seed: u64) -> StabilizerState {
    let mut s = StabilizerState::zero_state(n);
    for g in draw_circuit(
        &CircuitSpec::new(n, 2 * n, seed),
        &mut sample_rng(seed, u64::MAX),
    ) {
        s.apply(&g);
    }
    s
}

/// All Pauli strings on `n` qubits, identity first.
pub fn all_paulis(n: usize) -> Vec<PauliString> {
    (0..1usize << (2 * n))
        .map(|code| {
            let labels: Vec<u8> = (0..n).map(|i| ((code >> (2 * i)) & 3) as u8).collect();
            PauliString::from_labels(&labels, false).unwrap()
        })
        .collect()
}
