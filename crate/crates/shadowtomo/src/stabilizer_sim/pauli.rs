use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

/// Hermitian Pauli string on `n` qubits: `±` times a tensor product of I, X, Y, Z.
///
/// Encoded as x and z bit vectors with `Y = i·X·Z`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    neg: bool,
}

/// Exponent of `i` picked up when multiplying the single-qubit Paulis encoded in the
/// word pairs `(x1, z1)` and `(x2, z2)`, summed over all bits (mod 4).
pub(crate) fn product_phase_words(x1: u64, z1: u64, x2: u64, z2: u64) -> u32 {
    let plus = (x1 & !z1 & x2 & z2) | (x1 & z1 & !x2 & z2) | (!x1 & z1 & x2 & !z2);
    let minus = (x1 & z1 & x2 & !z2) | (!x1 & z1 & x2 & z2) | (x1 & !z1 & !x2 & z2);
    (plus.count_ones() + 3 * minus.count_ones()) % 4
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        Self {
            n,
            x: vec![0; w],
            z: vec![0; w],
            neg: false,
        }
    }

    /// Build from labels `0..4 = I,X,Y,Z`.
    pub fn from_labels(labels: &[u8], negative: bool) -> Result<Self> {
        let mut p = Self::identity(labels.len());
        for (i, &l) in labels.iter().enumerate() {
            if l > 3 {
                return Err(Error::Invalid(format!("Pauli label {l} out of range")));
            }
            p.set(i, l);
        }
        p.neg = negative;
        Ok(p)
    }

    /// Single-site Pauli `label` at `site`.
    pub fn single(n: usize, site: usize, label: u8) -> Self {
        let mut p = Self::identity(n);
        p.set(site, label);
        p
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_negative(&self) -> bool {
        self.neg
    }

    pub fn sign(&self) -> i8 {
        if self.neg {
            -1
        } else {
            1
        }
    }

    pub fn set_negative(&mut self, negative: bool) {
        self.neg = negative;
    }

    pub fn negated(&self) -> Self {
        let mut p = self.clone();
        p.neg = !p.neg;
        p
    }

    pub(crate) fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub(crate) fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn x_bit(&self, i: usize) -> bool {
        (self.x[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn z_bit(&self, i: usize) -> bool {
        (self.z[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Label at site `i` in `0..4 = I,X,Y,Z`.
    pub fn get(&self, i: usize) -> u8 {
        match (self.x_bit(i), self.z_bit(i)) {
            (false, false) => 0,
            (true, false) => 1,
            (true, true) => 2,
            (false, true) => 3,
        }
    }

    pub fn set(&mut self, i: usize, label: u8) {
        let (xb, zb) = match label {
            0 => (false, false),
            1 => (true, false),
            2 => (true, true),
            3 => (false, true),
            _ => panic!("Pauli label {label} out of range"),
        };
        let (w, b) = (i / 64, 1u64 << (i % 64));
        if xb {
            self.x[w] |= b;
        } else {
            self.x[w] &= !b;
        }
        if zb {
            self.z[w] |= b;
        } else {
            self.z[w] &= !b;
        }
    }

    pub fn labels(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.get(i)).collect()
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| self.x_bit(i) || self.z_bit(i))
            .collect()
    }

    pub fn support_mask(&self) -> Vec<bool> {
        (0..self.n)
            .map(|i| self.x_bit(i) || self.z_bit(i))
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// True when only I and Z appear.
    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        assert_eq!(self.n, other.n, "Pauli length mismatch");
        let mut parity = 0u32;
        for k in 0..self.x.len() {
            parity ^= ((self.x[k] & other.z[k]) ^ (self.z[k] & other.x[k])).count_ones() & 1;
        }
        parity == 0
    }

    /// Unsigned product label of `self · other` and the total exponent of `i`
    /// (including both signs), so that `self · other = i^e · label`.
    pub fn mul_phase(&self, other: &PauliString) -> (PauliString, u32) {
        assert_eq!(self.n, other.n, "Pauli length mismatch");
        let mut e = 2 * (self.neg as u32 + other.neg as u32);
        let mut x = Vec::with_capacity(self.x.len());
        let mut z = Vec::with_capacity(self.z.len());
        for k in 0..self.x.len() {
            e += product_phase_words(self.x[k], self.z[k], other.x[k], other.z[k]);
            x.push(self.x[k] ^ other.x[k]);
            z.push(self.z[k] ^ other.z[k]);
        }
        (
            PauliString {
                n: self.n,
                x,
                z,
                neg: false,
            },
            e % 4,
        )
    }

    /// Product of two commuting strings, which is again Hermitian.
    pub fn mul_commuting(&self, other: &PauliString) -> PauliString {
        let (mut p, e) = self.mul_phase(other);
        debug_assert!(
            e % 2 == 0,
            "product of anticommuting Paulis is not Hermitian"
        );
        p.neg = e == 2;
        p
    }

    /// In-place `self ← other · self`, returning the exponent of `i` in the product.
    /// The sign of `self` is set from the real part of the phase.
    pub(crate) fn left_mul_assign(&mut self, other: &PauliString) -> u32 {
        let mut e = 2 * (self.neg as u32 + other.neg as u32);
        for k in 0..self.x.len() {
            e += product_phase_words(other.x[k], other.z[k], self.x[k], self.z[k]);
            self.x[k] ^= other.x[k];
            self.z[k] ^= other.z[k];
        }
        let e = e % 4;
        self.neg = e >= 2;
        e
    }

    /// Restriction of the letters to `sites` (signs dropped).
    pub fn restrict(&self, sites: &[usize]) -> PauliString {
        let labels: Vec<u8> = sites.iter().map(|&i| self.get(i)).collect();
        PauliString::from_labels(&labels, false).expect("labels in range")
    }

    pub fn letters(&self) -> String {
        (0..self.n)
            .map(|i| ['I', 'X', 'Y', 'Z'][self.get(i) as usize])
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.neg { '-' } else { '+' }, self.letters())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Parses `+XZI`, `-YY` or an unsigned `XZI`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (neg, body) = match s.chars().next() {
            Some('+') => (false, &s[1..]),
            Some('-') => (true, &s[1..]),
            Some(_) => (false, s),
            None => return Err(Error::Invalid("empty Pauli string".into())),
        };
        let labels = body
            .chars()
            .map(|c| match c {
                'I' => Ok(0),
                'X' => Ok(1),
                'Y' => Ok(2),
                'Z' => Ok(3),
                other => Err(Error::Invalid(format!("bad Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if labels.is_empty() {
            return Err(Error::Invalid("Pauli string has no letters".into()));
        }
        PauliString::from_labels(&labels, neg)
    }
}
