use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::clifford::{Clifford1Q, CliffordGate2Q};
use super::gf2::BitMatrix;
use super::pauli::PauliString;
use super::protocol::Gate;
use crate::error::{Error, Result};

/// Pure stabilizer state on `n` qubits: `n` commuting independent generators plus
/// a matching set of destabilizers used for measurement and group decomposition.
#[derive(Clone, Debug)]
pub struct StabilizerState {
    n: usize,
    stab: Vec<PauliString>,
    destab: Vec<PauliString>,
}

fn symplectic(a: &PauliString, b: &PauliString) -> bool {
    !a.commutes(b)
}

impl StabilizerState {
    /// Validate generators and derive destabilizers.
    pub fn new(generators: Vec<PauliString>) -> Result<Self> {
        let n = generators.len();
        if n == 0 {
            return Err(Error::Invalid(
                "stabilizer state needs at least one qubit".into(),
            ));
        }
        if let Some(g) = generators.iter().find(|g| g.len() != n) {
            return Err(Error::Invalid(format!(
                "generator {g} has length {} but there are {n} generators",
                g.len()
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                if !generators[i].commutes(&generators[j]) {
                    return Err(Error::Invalid(format!(
                        "generators {} and {} anticommute",
                        generators[i], generators[j]
                    )));
                }
            }
        }
        let destab = destabilizers_for(&generators)
            .ok_or_else(|| Error::Invalid("generators are not independent".into()))?;
        Ok(Self {
            n,
            stab: generators,
            destab,
        })
    }

    /// `|b⟩` for a bit string: generators `(−1)^{b_i} Z_i`.
    pub fn basis_state(bits: &[bool]) -> Self {
        let n = bits.len();
        let stab = (0..n)
            .map(|i| {
                let mut p = PauliString::single(n, i, 3);
                p.set_negative(bits[i]);
                p
            })
            .collect();
        let destab = (0..n).map(|i| PauliString::single(n, i, 1)).collect();
        Self { n, stab, destab }
    }

    pub fn zero_state(n: usize) -> Self {
        Self::basis_state(&vec![false; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.stab
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.destab
    }

    /// `Tr(P ρ)` ∈ {−1, 0, +1}.
    pub fn pauli_expectation(&self, p: &PauliString) -> i8 {
        assert_eq!(p.len(), self.n, "Pauli length mismatch");
        if self.stab.iter().any(|g| !g.commutes(p)) {
            return 0;
        }
        // P commutes with every generator, so ±P is in the group; the coefficient of
        // generator j is read off from the destabilizer j.
        let mut acc = PauliString::identity(self.n);
        for (g, d) in self.stab.iter().zip(&self.destab) {
            if symplectic(p, d) {
                acc.left_mul_assign(g);
            }
        }
        let unsigned_eq = acc.x_words() == p.x_words() && acc.z_words() == p.z_words();
        debug_assert!(unsigned_eq, "decomposition failed for {p}");
        if acc.is_negative() == p.is_negative() {
            1
        } else {
            -1
        }
    }

    /// Conjugate every row by the gate: `ρ ↦ C ρ C†`.
    pub fn apply_gate(&mut self, gate: &CliffordGate2Q) {
        for row in self.stab.iter_mut().chain(self.destab.iter_mut()) {
            gate.conjugate_in_place(row);
        }
    }

    pub fn apply_1q(&mut self, gate: &Clifford1Q) {
        for row in self.stab.iter_mut().chain(self.destab.iter_mut()) {
            gate.conjugate_in_place(row);
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        match gate {
            Gate::One(g) => self.apply_1q(g),
            Gate::Two(g) => self.apply_gate(g),
        }
    }

    /// Projective Z measurement of `qubit`; outcome `true` means bit 1.
    pub fn measure_z<R: Rng + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> bool {
        let n = self.n;
        let p = (0..n).find(|&k| self.stab[k].x_bit(qubit));
        match p {
            Some(p) => {
                let pivot = self.stab[p].clone();
                for k in 0..n {
                    if k != p && self.stab[k].x_bit(qubit) {
                        self.stab[k].left_mul_assign(&pivot);
                    }
                    if self.destab[k].x_bit(qubit) && k != p {
                        self.destab[k].left_mul_assign(&pivot);
                    }
                }
                let outcome: bool = rng.random();
                self.destab[p] = pivot;
                let mut z = PauliString::single(n, qubit, 3);
                z.set_negative(outcome);
                self.stab[p] = z;
                outcome
            }
            None => {
                let mut acc = PauliString::identity(n);
                for k in 0..n {
                    if self.destab[k].x_bit(qubit) {
                        acc.left_mul_assign(&self.stab[k]);
                    }
                }
                acc.is_negative()
            }
        }
    }

    /// Number of ebits across the cut `A | Ā`: `rank(G restricted to A) − |A|`.
    pub fn entanglement_bits(&self, subset: &[bool]) -> usize {
        assert_eq!(subset.len(), self.n, "subset length mismatch");
        let sites: Vec<usize> = (0..self.n).filter(|&i| subset[i]).collect();
        let mut m = BitMatrix::new(2 * sites.len().max(1));
        for g in &self.stab {
            m.push_row(
                sites
                    .iter()
                    .map(|&i| g.x_bit(i))
                    .chain(sites.iter().map(|&i| g.z_bit(i))),
            );
        }
        m.rank() - sites.len()
    }

    /// Purity `Tr ρ_A²` of the reduced state on `subset`.
    pub fn subsystem_purity(&self, subset: &[bool]) -> f64 {
        0.5f64.powi(self.entanglement_bits(subset) as i32)
    }

    /// Semicolon-separated signed generators, e.g. `+ZZI;+IZZ;+XXX`.
    pub fn generators_string(&self) -> String {
        self.stab
            .iter()
            .map(|g| g.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Same stabilizer group (signs included)?
    pub fn same_group(&self, other: &StabilizerState) -> bool {
        self.n == other.n && other.stab.iter().all(|g| self.pauli_expectation(g) == 1)
    }
}

impl fmt::Display for StabilizerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.generators_string())
    }
}

impl FromStr for StabilizerState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let gens = s
            .split(';')
            .map(|g| {
                let g = g.trim();
                if !g.starts_with(['+', '-']) {
                    return Err(Error::Invalid(format!("generator {g:?} lacks a sign")));
                }
                g.parse::<PauliString>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(gens)
    }
}

/// Destabilizers `d_i` with `ω(d_i, g_j) = δ_ij` and mutually commuting.
fn destabilizers_for(gens: &[PauliString]) -> Option<Vec<PauliString>> {
    let n = gens.len();
    let nq = gens[0].len();
    // Row j maps a candidate (x, z) to ω(g_j, ·) = g_z·x + g_x·z.
    let mut m = BitMatrix::new(2 * nq);
    for g in gens {
        m.push_row(
            (0..nq)
                .map(|i| g.z_bit(i))
                .chain((0..nq).map(|i| g.x_bit(i))),
        );
    }
    let sols = m.right_inverse()?;
    let mut destab: Vec<PauliString> = sols
        .iter()
        .map(|d| {
            let mut p = PauliString::identity(nq);
            for i in 0..nq {
                let label = match (d[i], d[nq + i]) {
                    (false, false) => 0,
                    (true, false) => 1,
                    (true, true) => 2,
                    (false, true) => 3,
                };
                p.set(i, label);
            }
            p
        })
        .collect();
    for i in 0..n {
        for k in i + 1..n {
            if !destab[i].commutes(&destab[k]) {
                let (mut dk, _) = destab[k].mul_phase(&gens[i]);
                dk.set_negative(false);
                destab[k] = dk;
            }
        }
    }
    Some(destab)
}
