use std::sync::OnceLock;

use rand::Rng;

use super::pauli::{product_phase_words, PauliString};
use crate::error::{Error, Result};

/// Number of elements of the two-qubit Clifford group modulo global phase.
pub const CLIFFORD_2Q_ORDER: usize = 11520;

/// Local two-qubit Pauli index: bit 0 = x₁, bit 1 = z₁, bit 2 = x₂, bit 3 = z₂.
type LocalIndex = u8;

fn local_omega(a: LocalIndex, b: LocalIndex) -> u8 {
    let bit = |v: u8, k: u8| (v >> k) & 1;
    (bit(a, 0) & bit(b, 1))
        ^ (bit(a, 1) & bit(b, 0))
        ^ (bit(a, 2) & bit(b, 3))
        ^ (bit(a, 3) & bit(b, 2))
}

fn local_to_pauli(idx: LocalIndex, negative: bool) -> PauliString {
    let label = |x: u8, z: u8| match (x, z) {
        (0, 0) => 0,
        (1, 0) => 1,
        (1, 1) => 2,
        _ => 3,
    };
    let l1 = label(idx & 1, (idx >> 1) & 1);
    let l2 = label((idx >> 2) & 1, (idx >> 3) & 1);
    PauliString::from_labels(&[l1, l2], negative).expect("labels in range")
}

fn pauli_to_local(p: &PauliString) -> LocalIndex {
    (p.x_bit(0) as u8) | (p.z_bit(0) as u8) << 1 | (p.x_bit(1) as u8) << 2 | (p.z_bit(1) as u8) << 3
}

/// All 720 symplectic images `(X₁, Z₁, X₂, Z₂) ↦ (a, b, c, d)` as local indices.
fn symplectic_images() -> &'static [[LocalIndex; 4]] {
    static TABLE: OnceLock<Vec<[LocalIndex; 4]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(720);
        for a in 1..16u8 {
            for b in 1..16u8 {
                if local_omega(a, b) != 1 {
                    continue;
                }
                for c in 1..16u8 {
                    if local_omega(a, c) != 0 || local_omega(b, c) != 0 {
                        continue;
                    }
                    for d in 1..16u8 {
                        if local_omega(a, d) == 0
                            && local_omega(b, d) == 0
                            && local_omega(c, d) == 1
                        {
                            out.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), 720);
        out
    })
}

/// Two-qubit Clifford gate acting on an ordered pair of sites.
///
/// Stored as the images of X₁, Z₁, X₂, Z₂ and a 16-entry conjugation table
/// `P ↦ ±P′` for all local Paulis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliffordGate2Q {
    images: [PauliString; 4],
    sites: (usize, usize),
    table: [(LocalIndex, bool); 16],
}

impl CliffordGate2Q {
    /// Build from the (signed, two-qubit) images of X₁, Z₁, X₂, Z₂.
    pub fn from_images(images: [PauliString; 4], sites: (usize, usize)) -> Result<Self> {
        if images.iter().any(|p| p.len() != 2) {
            return Err(Error::Invalid(
                "gate images must be two-qubit strings".into(),
            ));
        }
        if sites.0 == sites.1 {
            return Err(Error::Invalid("gate sites must differ".into()));
        }
        let idx: Vec<LocalIndex> = images.iter().map(pauli_to_local).collect();
        for (i, j, want) in [
            (0, 1, 1),
            (2, 3, 1),
            (0, 2, 0),
            (0, 3, 0),
            (1, 2, 0),
            (1, 3, 0),
        ] {
            if local_omega(idx[i], idx[j]) != want {
                return Err(Error::Invalid(
                    "images violate the symplectic condition".into(),
                ));
            }
        }
        let mut table = [(0u8, false); 16];
        for (p, slot) in table.iter_mut().enumerate() {
            let p = p as u8;
            // p = i^{x₁z₁ + x₂z₂} X₁^{x₁} Z₁^{z₁} X₂^{x₂} Z₂^{z₂}
            let mut e =
                ((p & 1) & ((p >> 1) & 1)) as u32 + (((p >> 2) & 1) & ((p >> 3) & 1)) as u32;
            let mut acc = PauliString::identity(2);
            for k in 0..4 {
                if (p >> k) & 1 == 1 {
                    let (prod, pe) = acc.mul_phase(&images[k]);
                    acc = prod;
                    e += pe;
                }
            }
            let e = e % 4;
            debug_assert!(
                e.is_multiple_of(2),
                "Hermitian Pauli mapped to anti-Hermitian"
            );
            *slot = (pauli_to_local(&acc), e == 2);
        }
        Ok(Self {
            images,
            sites,
            table,
        })
    }

    /// Gate number `index` in `0..11520` of a fixed enumeration of the group.
    pub fn from_index(index: usize, sites: (usize, usize)) -> Result<Self> {
        if index >= CLIFFORD_2Q_ORDER {
            return Err(Error::Invalid(format!(
                "Clifford index {index} out of range"
            )));
        }
        let sym = symplectic_images()[index / 16];
        let signs = index % 16;
        let images = std::array::from_fn(|k| local_to_pauli(sym[k], (signs >> k) & 1 == 1));
        Self::from_images(images, sites)
    }

    pub fn identity(sites: (usize, usize)) -> Self {
        Self::from_images([1u8, 2, 4, 8].map(|i| local_to_pauli(i, false)), sites)
            .expect("identity is symplectic")
    }

    pub fn images(&self) -> &[PauliString; 4] {
        &self.images
    }

    pub fn sites(&self) -> (usize, usize) {
        self.sites
    }

    /// Conjugate the local Pauli on `(site₀, site₁)`: returns the new local index and
    /// whether the sign flips.
    #[inline]
    pub(crate) fn map_local(&self, idx: u8) -> (u8, bool) {
        self.table[idx as usize]
    }

    /// The inverse gate `C†` on the same sites.
    pub fn inverse(&self) -> Self {
        let mut table = [(0u8, false); 16];
        for (p, &(q, s)) in self.table.iter().enumerate() {
            table[q as usize] = (p as u8, s);
        }
        let images = [1u8, 2, 4, 8].map(|k| {
            let (q, s) = table[k as usize];
            local_to_pauli(q, s)
        });
        Self {
            images,
            sites: self.sites,
            table,
        }
    }

    /// `C P C†` for a full-length Pauli string.
    pub fn conjugate(&self, p: &PauliString) -> PauliString {
        let mut out = p.clone();
        self.conjugate_in_place(&mut out);
        out
    }

    pub(crate) fn conjugate_in_place(&self, p: &mut PauliString) {
        let (a, b) = self.sites;
        let idx = (p.x_bit(a) as u8)
            | (p.z_bit(a) as u8) << 1
            | (p.x_bit(b) as u8) << 2
            | (p.z_bit(b) as u8) << 3;
        if idx == 0 {
            return;
        }
        let (q, flip) = self.map_local(idx);
        let label = |x: u8, z: u8| match (x, z) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => 3,
        };
        p.set(a, label(q & 1, (q >> 1) & 1));
        p.set(b, label((q >> 2) & 1, (q >> 3) & 1));
        if flip {
            p.set_negative(!p.is_negative());
        }
    }

    /// Check that all six pairwise (anti)commutation relations of the images hold.
    pub fn is_symplectic(&self) -> bool {
        let im = &self.images;
        !im[0].commutes(&im[1])
            && !im[2].commutes(&im[3])
            && im[0].commutes(&im[2])
            && im[0].commutes(&im[3])
            && im[1].commutes(&im[2])
            && im[1].commutes(&im[3])
    }
}

/// Number of elements of the single-qubit Clifford group modulo global phase.
pub const CLIFFORD_1Q_ORDER: usize = 24;

/// Single-qubit Clifford gate stored as a conjugation table over `I, X, Y, Z`
/// (index = x + 2z).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clifford1Q {
    site: usize,
    table: [(u8, bool); 4],
}

impl Clifford1Q {
    /// Gate number `index` in `0..24`: images of (X, Z) from the six symplectic pairs,
    /// with two sign bits.
    pub fn from_index(index: usize, site: usize) -> Result<Self> {
        const PAIRS: [(u8, u8); 6] = [(1, 2), (1, 3), (2, 1), (2, 3), (3, 1), (3, 2)];
        if index >= CLIFFORD_1Q_ORDER {
            return Err(Error::Invalid(format!(
                "Clifford index {index} out of range"
            )));
        }
        let (ix, iz) = PAIRS[index / 4];
        let (sx, sz) = (index & 1 == 1, index & 2 == 2);
        // Y = iXZ maps to i·(±X')(±Z'), whose sign follows from X'Z' = ±i Y'.
        let xz = ix ^ iz;
        let xz_phase = product_phase_words(
            (ix & 1) as u64,
            (ix >> 1) as u64,
            (iz & 1) as u64,
            (iz >> 1) as u64,
        );
        // i · i^{xz_phase} must be ±1.
        let sy = ((1 + xz_phase) % 4 == 2) ^ sx ^ sz;
        let mut table = [(0u8, false); 4];
        table[1] = (ix, sx);
        table[2] = (iz, sz);
        table[3] = (xz, sy);
        Ok(Self { site, table })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn inverse(&self) -> Self {
        let mut table = [(0u8, false); 4];
        for (p, &(q, s)) in self.table.iter().enumerate() {
            table[q as usize] = (p as u8, s);
        }
        Self {
            site: self.site,
            table,
        }
    }

    pub(crate) fn conjugate_in_place(&self, p: &mut PauliString) {
        let a = self.site;
        let idx = (p.x_bit(a) as u8) | (p.z_bit(a) as u8) << 1;
        if idx == 0 {
            return;
        }
        let (q, flip) = self.table[idx as usize];
        let label = [0u8, 1, 3, 2][q as usize];
        p.set(a, label);
        if flip {
            p.set_negative(!p.is_negative());
        }
    }

    pub fn conjugate(&self, p: &PauliString) -> PauliString {
        let mut out = p.clone();
        self.conjugate_in_place(&mut out);
        out
    }
}

/// Draw a gate uniformly from the single-qubit Clifford group.
pub fn sample_clifford_1q<R: Rng + ?Sized>(rng: &mut R, site: usize) -> Clifford1Q {
    let k = rng.random_range(0..CLIFFORD_1Q_ORDER);
    Clifford1Q::from_index(k, site).expect("index in range")
}

/// Draw a gate uniformly from the two-qubit Clifford group.
pub fn sample_clifford_2q<R: Rng + ?Sized>(rng: &mut R, sites: (usize, usize)) -> CliffordGate2Q {
    let k = rng.random_range(0..CLIFFORD_2Q_ORDER);
    CliffordGate2Q::from_index(k, sites).expect("index in range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_order() {
        assert_eq!(symplectic_images().len(), 720);
        assert_eq!(720 * 16, CLIFFORD_2Q_ORDER);
    }

    #[test]
    fn inverse_undoes_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let g = sample_clifford_2q(&mut rng, (0, 1));
            let inv = g.inverse();
            for idx in 0..16u8 {
                let p = local_to_pauli(idx, idx % 3 == 0);
                assert_eq!(inv.conjugate(&g.conjugate(&p)), p);
            }
            assert!(g.is_symplectic());
            assert!(inv.is_symplectic());
        }
    }

    #[test]
    fn cnot_images() {
        // CNOT: X₁→X₁X₂, Z₁→Z₁, X₂→X₂, Z₂→Z₁Z₂; then Y₁ → Y₁X₂.
        let imgs = ["+XX", "+ZI", "+IX", "+ZZ"].map(|s| s.parse::<PauliString>().unwrap());
        let g = CliffordGate2Q::from_images(imgs, (0, 1)).unwrap();
        let y1: PauliString = "+YI".parse().unwrap();
        assert_eq!(g.conjugate(&y1).to_string(), "+YX");
        let yy: PauliString = "+YY".parse().unwrap();
        assert_eq!(g.conjugate(&yy).to_string(), "-XZ");
    }

    #[test]
    fn single_qubit_gates_are_automorphisms() {
        for k in 0..CLIFFORD_1Q_ORDER {
            let g = Clifford1Q::from_index(k, 0).unwrap();
            let x = g.conjugate(&"+X".parse().unwrap());
            let z = g.conjugate(&"+Z".parse().unwrap());
            let y = g.conjugate(&"+Y".parse().unwrap());
            assert!(!x.commutes(&z));
            // Y = i X Z must be preserved: i · x · z = y.
            let (prod, e) = x.mul_phase(&z);
            assert_eq!(prod.letters(), y.letters());
            assert_eq!((1 + e) % 4 == 2, y.is_negative(), "gate {k}");
            let inv = g.inverse();
            assert_eq!(inv.conjugate(&y).to_string(), "+Y");
        }
    }

    #[test]
    fn rejects_non_symplectic() {
        let imgs = ["+XI", "+XI", "+IX", "+IZ"].map(|s| s.parse::<PauliString>().unwrap());
        assert!(CliffordGate2Q::from_images(imgs, (0, 1)).is_err());
    }
}
