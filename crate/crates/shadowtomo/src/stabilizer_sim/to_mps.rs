use std::collections::HashMap;

use super::pauli::{product_phase_words, PauliString};
use super::tableau::StabilizerState;
use crate::error::{Error, Result};
use crate::tensor_core::{Mat, PauliBasisMps};

/// Contiguous arc `start, start+1, …, start+len−1 (mod n)` covering a support.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Extent {
    pub start: usize,
    pub len: usize,
}

impl Extent {
    pub fn contains(&self, site: usize, n: usize) -> bool {
        (site + n - self.start) % n < self.len
    }

    /// Does the arc contain both `bond` and `bond+1`, i.e. cross the bond after `bond`?
    pub fn crosses(&self, bond: usize, n: usize) -> bool {
        let off = (bond + n - self.start) % n;
        off + 1 < self.len
    }
}

/// Shortest arc containing the support of `p` on a ring; ties go to the smaller start.
pub fn extent(p: &PauliString) -> Extent {
    let n = p.len();
    let supp = p.support();
    if supp.is_empty() {
        return Extent { start: 0, len: 0 };
    }
    let k = supp.len();
    let mut best: Option<Extent> = None;
    for j in 0..k {
        let end = supp[j];
        let start = supp[(j + 1) % k];
        let len = (end + n - start) % n + 1;
        let cand = Extent { start, len };
        best = match best {
            None => Some(cand),
            Some(b) if len < b.len || (len == b.len && start < b.start) => Some(cand),
            keep => keep,
        };
    }
    best.expect("nonempty support")
}

/// Greedily shorten generator extents by multiplying pairs; the group is unchanged.
pub fn reduce_extents(gens: &[PauliString]) -> Vec<PauliString> {
    reduce_extents_tagged(gens, &vec![false; gens.len()]).0
}

/// [`reduce_extents`] carrying one bit per generator that is XOR-ed along with every
/// multiplication, so a character of the group can follow the new generators.
pub(crate) fn reduce_extents_tagged(
    gens: &[PauliString],
    tags: &[bool],
) -> (Vec<PauliString>, Vec<bool>) {
    let mut gens = gens.to_vec();
    let mut tags = tags.to_vec();
    let mut lens: Vec<usize> = gens.iter().map(|g| extent(g).len).collect();
    let mut improved = true;
    let mut rounds = 0;
    while improved && rounds < 4 * gens.len().max(1) {
        improved = false;
        rounds += 1;
        for k in 0..gens.len() {
            for j in 0..gens.len() {
                if j == k {
                    continue;
                }
                let cand = gens[j].mul_commuting(&gens[k]);
                let len = extent(&cand).len;
                if len < lens[k] {
                    gens[k] = cand;
                    lens[k] = len;
                    tags[k] ^= tags[j];
                    improved = true;
                }
            }
        }
    }
    (gens, tags)
}

/// Pauli-basis MPS of a pure stabilizer state: components `c_P = Tr(P ρ)` so that
/// `ρ = 2⁻ⁿ Σ_P c_P P`.
///
/// `extent_cap` bounds the arc length of any generator; `None` disables the check.
/// Generator extents are reduced first.
pub fn stabilizer_to_pauli_mps(
    state: &StabilizerState,
    extent_cap: Option<usize>,
) -> Result<PauliBasisMps> {
    group_to_pauli_mps(state.n(), &reduce_extents(state.generators()), extent_cap)
}

/// Pauli-basis MPS of `Π_j (1 + g_j)` for commuting independent signed generators
/// (any number, not necessarily `n`): the component of `P` is ±1 when `±P` is in the
/// generated group and 0 otherwise.
pub fn group_to_pauli_mps(
    n: usize,
    gens: &[PauliString],
    extent_cap: Option<usize>,
) -> Result<PauliBasisMps> {
    group_mps(n, gens, extent_cap, true)
}

/// Like [`group_to_pauli_mps`] but ignoring the phases of generator products: the
/// component of `Π_j g_j^{b_j}` is `Π_j s_j^{b_j}` with `s_j` the sign of `g_j`.
/// This encodes a character of the (unsigned) group.
pub(crate) fn group_character_mps(
    n: usize,
    gens: &[PauliString],
    extent_cap: Option<usize>,
) -> Result<PauliBasisMps> {
    group_mps(n, gens, extent_cap, false)
}

fn group_mps(
    n: usize,
    gens: &[PauliString],
    extent_cap: Option<usize>,
    track_phase: bool,
) -> Result<PauliBasisMps> {
    if let Some(g) = gens.iter().find(|g| g.len() != n) {
        return Err(Error::Length {
            expected: n,
            got: g.len(),
        });
    }
    let extents: Vec<Extent> = gens.iter().map(extent).collect();
    if let Some(cap) = extent_cap {
        if let Some(e) = extents.iter().find(|e| e.len > cap) {
            return Err(Error::ExtentCap { extent: e.len, cap });
        }
    }
    // crossing[b]: generators crossing the bond between site b and b+1 (mod n).
    let crossing: Vec<Vec<usize>> = (0..n)
        .map(|b| {
            (0..gens.len())
                .filter(|&j| n > 1 && extents[j].crosses(b, n))
                .collect()
        })
        .collect();

    let mut sites = Vec::with_capacity(n);
    for i in 0..n {
        let left = &crossing[(i + n - 1) % n];
        let right = &crossing[i];
        let active: Vec<usize> = (0..gens.len())
            .filter(|&j| extents[j].contains(i, n))
            .collect();
        let born: Vec<usize> = active
            .iter()
            .copied()
            .filter(|j| !left.contains(j))
            .collect();
        let dl = 2usize << left.len();
        let dr = 2usize << right.len();
        let mut t: [Mat; 4] = std::array::from_fn(|_| Mat::zeros(dl, dr));
        let pos_right: HashMap<usize, usize> =
            right.iter().enumerate().map(|(k, &j)| (j, k)).collect();
        let mut chosen = vec![false; gens.len()];
        for row in 0..dl {
            let p = row & 1;
            for (k, &j) in left.iter().enumerate() {
                chosen[j] = (row >> (k + 1)) & 1 == 1;
            }
            for born_bits in 0..1usize << born.len() {
                let mut amp = 1.0;
                for (k, &j) in born.iter().enumerate() {
                    chosen[j] = (born_bits >> k) & 1 == 1;
                    if chosen[j] && gens[j].is_negative() {
                        amp = -amp;
                    }
                }
                // Ordered local product of the selected generators at site i.
                let (mut x, mut z, mut e) = (0u64, 0u64, 0u32);
                for &j in &active {
                    if chosen[j] {
                        let (gx, gz) = (gens[j].x_bit(i) as u64, gens[j].z_bit(i) as u64);
                        e += product_phase_words(x, z, gx, gz);
                        x ^= gx;
                        z ^= gz;
                    }
                }
                let tot = if track_phase { p as u32 + e % 4 } else { 0 };
                if (tot / 2) % 2 == 1 {
                    amp = -amp;
                }
                let mut col = (tot % 2) as usize;
                for &j in &active {
                    if chosen[j] {
                        if let Some(&k) = pos_right.get(&j) {
                            col |= 1 << (k + 1);
                        }
                    }
                }
                let label = match (x, z) {
                    (0, 0) => 0,
                    (1, 0) => 1,
                    (1, 1) => 2,
                    _ => 3,
                };
                t[label][(row, col)] += amp;
            }
            for &j in &born {
                chosen[j] = false;
            }
        }
        sites.push(t);
    }
    let d0 = 2usize << crossing[n - 1].len();
    let boundary = Mat::from_fn(d0, d0, |r, c| if r == c && r & 1 == 0 { 1.0 } else { 0.0 });
    PauliBasisMps::new(sites, boundary)
}
