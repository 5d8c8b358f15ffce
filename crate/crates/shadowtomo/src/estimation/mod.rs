//! Expectation values from snapshot stores and reconstruction coefficients.
//!
//! Every estimator is calibrated so the identity observable returns exactly 1: the
//! eigen coefficient of a support is divided by the coefficient of the empty support.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::reconstruction::{pauli_eigen_coefficient, ReconstructionMps};
use crate::stabilizer_sim::{
    group_character_mps, reduce_extents_tagged, stabilizer_to_pauli_mps, BitMatrix, PauliString,
    SnapshotStore, StabilizerState,
};
use crate::tensor_core::{mps_overlap, PauliBasisMps, SubsetMps};

/// Longest generator arc accepted when converting snapshots to Pauli-basis MPS.
pub const DEFAULT_EXTENT_CAP: usize = 12;

/// Median-of-means group count used for fidelity estimates.
pub const DEFAULT_FIDELITY_GROUPS: usize = 12;

/// How per-snapshot values are combined into one estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    /// Median of the means of `groups` contiguous blocks in sample order.
    MedianOfMeans {
        groups: usize,
    },
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregation::Mean => write!(f, "mean"),
            Aggregation::MedianOfMeans { groups } => write!(f, "median-of-means:{groups}"),
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mean" {
            return Ok(Aggregation::Mean);
        }
        s.strip_prefix("median-of-means:")
            .and_then(|g| g.parse().ok())
            .filter(|&g: &usize| g > 0)
            .map(|groups| Aggregation::MedianOfMeans { groups })
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown aggregation {s:?} (mean | median-of-means:<groups>)"
                ))
            })
    }
}

/// Observable to estimate.
#[derive(Clone, Debug)]
pub enum ObservableSpec {
    /// `O = Σ a_P P` over Pauli strings.
    PauliSum(Vec<(f64, PauliString)>),
    /// Reference operator `ρ′ = 2⁻ⁿ Σ_P c′_P P` as a Pauli-basis MPS.
    Mps(PauliBasisMps),
    /// Stabilizer reference `ρ′ = 2⁻ⁿ Π_j (1 + g_j)` for commuting independent signed
    /// generators; fewer than `n` generators give a mixed state. Estimated through the
    /// intersection of stabilizer groups instead of a full three-layer contraction.
    Stabilizer {
        n: usize,
        generators: Vec<PauliString>,
    },
}

impl ObservableSpec {
    pub fn stabilizer(state: &StabilizerState) -> Self {
        ObservableSpec::Stabilizer {
            n: state.n(),
            generators: state.generators().to_vec(),
        }
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            ObservableSpec::PauliSum(t) => t.first().map(|t| t.1.len()),
            ObservableSpec::Mps(m) => Some(m.n_sites()),
            ObservableSpec::Stabilizer { n, .. } => Some(*n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateResult {
    pub estimate: f64,
    /// Unbiased sample variance of the single-snapshot values.
    pub variance: f64,
    pub samples: usize,
    pub aggregation: Aggregation,
    /// `sqrt(variance / samples)`.
    pub stderr: f64,
    /// Size of the final median-of-means group when it is shorter than the others.
    pub short_group: Option<usize>,
}

impl EstimateResult {
    /// Aggregate per-snapshot values (summed in index order, so results are reproducible).
    pub fn from_values(values: &[f64], aggregation: Aggregation) -> Result<Self> {
        let m = values.len();
        if m == 0 {
            return Err(Error::EmptyStore);
        }
        let mean = values.iter().sum::<f64>() / m as f64;
        let variance = if m > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64
        } else {
            0.0
        };
        let (estimate, short_group) = match aggregation {
            Aggregation::Mean => (mean, None),
            Aggregation::MedianOfMeans { groups } => {
                let size = group_size(m, groups)?;
                let last = m % size;
                (
                    median_of_means(values, groups)?,
                    (last != 0).then_some(last),
                )
            }
        };
        Ok(Self {
            estimate,
            variance,
            samples: m,
            aggregation,
            stderr: (variance / m as f64).sqrt(),
            short_group,
        })
    }

    /// CSV header matching [`EstimateResult::write_csv_row`].
    pub const CSV_HEADER: &'static str = "observable,n,L,M,estimate,variance,stderr,aggregation";

    pub fn write_csv_row<W: Write>(
        &self,
        mut out: W,
        id: &str,
        n: usize,
        depth: usize,
    ) -> Result<()> {
        writeln!(
            out,
            "{id},{n},{depth},{},{},{},{},{}",
            self.samples, self.estimate, self.variance, self.stderr, self.aggregation
        )?;
        Ok(())
    }
}

fn group_size(m: usize, groups: usize) -> Result<usize> {
    if groups == 0 || groups > m {
        return Err(Error::Invalid(format!(
            "cannot split {m} samples into {groups} groups"
        )));
    }
    Ok(m.div_ceil(groups))
}

/// Median of the means of contiguous blocks of `ceil(M/groups)` values in sample order
/// (the last block may be shorter); an even number of blocks takes the lower median.
pub fn median_of_means(values: &[f64], groups: usize) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyStore);
    }
    let size = group_size(values.len(), groups)?;
    let mut means: Vec<f64> = values
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    Ok(means[(means.len() - 1) / 2])
}

fn check_inputs(store: &SnapshotStore, r: &ReconstructionMps, n_obs: usize) -> Result<()> {
    if store.is_empty() {
        return Err(Error::EmptyStore);
    }
    if store.n != r.n() {
        return Err(Error::Mismatch(format!(
            "store has n={}, r has n={}",
            store.n,
            r.n()
        )));
    }
    if n_obs != store.n {
        return Err(Error::Mismatch(format!(
            "store has n={}, observable has n={n_obs}",
            store.n
        )));
    }
    Ok(())
}

/// Calibrated eigenvalue of the inverse channel on Paulis with this support.
fn calibrated_eigen(r: &ReconstructionMps, support: &[bool], identity: f64) -> Result<f64> {
    Ok(pauli_eigen_coefficient(r, support)? / identity)
}

fn identity_eigen(r: &ReconstructionMps) -> Result<f64> {
    let v = pauli_eigen_coefficient(r, &vec![false; r.n()])?;
    if v == 0.0 {
        return Err(Error::Invalid(
            "reconstruction coefficients vanish on the identity".into(),
        ));
    }
    Ok(v)
}

/// Per-snapshot values `Σ_P a_P λ_P ⟨P⟩_σ̂`.
fn pauli_sum_values(
    store: &SnapshotStore,
    r: &ReconstructionMps,
    terms: &[(f64, PauliString)],
) -> Result<Vec<f64>> {
    let id = identity_eigen(r)?;
    let weights: Vec<f64> = terms
        .iter()
        .map(|(a, p)| Ok(a * calibrated_eigen(r, &p.support_mask(), id)?))
        .collect::<Result<_>>()?;
    Ok(store
        .records
        .par_iter()
        .map(|rec| {
            terms.iter().zip(&weights).fold(0.0, |acc, ((_, p), w)| {
                acc + w * rec.state.pauli_expectation(p) as f64
            })
        })
        .collect())
}

pub fn estimate_pauli(
    store: &SnapshotStore,
    r: &ReconstructionMps,
    p: &PauliString,
    aggregation: Aggregation,
) -> Result<EstimateResult> {
    check_inputs(store, r, p.len())?;
    let values = pauli_sum_values(store, r, &[(1.0, p.clone())])?;
    EstimateResult::from_values(&values, aggregation)
}

/// `r` with site matrices `H⁰ = R⁰ + R¹`, `H¹ = R¹`, so `Σ_A g(A) H(A)` sums the
/// eigen coefficients of all Paulis counted by a support function `g`.
fn eigen_mps(r: &ReconstructionMps) -> Result<SubsetMps> {
    let m = r.mps();
    let cell = m
        .cell()
        .iter()
        .map(|t| [&t[0] + &t[1], t[1].clone()])
        .collect();
    SubsetMps::new(m.n_sites(), cell, m.boundary().clone())
}

/// `Σ_P c^s_P c′_P λ_P` through the three-layer ring with vertex tensor
/// `u_{P,P′,j} = δ_{P=P′}(δ_{P≠I} δ_{j=1} + δ_{P=I})`.
fn three_layer(snapshot: &PauliBasisMps, reference: &PauliBasisMps, h: &SubsetMps) -> Result<f64> {
    let n = snapshot.n_sites();
    let mut acc = snapshot
        .boundary()
        .kronecker(reference.boundary())
        .kronecker(h.boundary());
    for i in 0..n {
        let (s, c, t) = (snapshot.site(i), reference.site(i), h.site(i));
        let mut e = s[0].kronecker(&c[0]).kronecker(&t[0]);
        for p in 1..4 {
            e += s[p].kronecker(&c[p]).kronecker(&t[1]);
        }
        // The factor 2 per site matches the scaling inside the eigen coefficient.
        acc = acc * e * 2.0;
    }
    let v = acc.trace();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("three-layer contraction"))
    }
}

/// Generators of the Paulis shared (up to sign) by two stabilizer groups, each carrying
/// the character `χ(P) = c(P) c′(P)` in its sign bit.
fn shared_group(
    snapshot: &[PauliString],
    reference: &[PauliString],
    n: usize,
) -> (Vec<PauliString>, Vec<bool>) {
    let mut m = BitMatrix::new(2 * n);
    for g in snapshot.iter().chain(reference) {
        m.push_row((0..n).map(|i| g.x_bit(i)).chain((0..n).map(|i| g.z_bit(i))));
    }
    let ns = snapshot.len();
    let mut gens = Vec::new();
    let mut chars = Vec::new();
    for v in m.left_kernel() {
        let product = |rows: &[PauliString], bits: &[bool]| {
            rows.iter()
                .zip(bits)
                .filter(|(_, &b)| b)
                .fold(PauliString::identity(n), |acc, (g, _)| acc.mul_commuting(g))
        };
        let a = product(snapshot, &v[..ns]);
        let b = product(reference, &v[ns..]);
        chars.push(a.is_negative() != b.is_negative());
        let mut q = a;
        q.set_negative(false);
        gens.push(q);
    }
    (gens, chars)
}

/// Fast path for stabilizer references: only Paulis in both groups contribute, and
/// their signs multiply to a character of the shared group.
fn stabilizer_value(
    snapshot: &StabilizerState,
    reference: &[PauliString],
    h: &SubsetMps,
    id: f64,
    cap: usize,
) -> Result<f64> {
    let n = snapshot.n();
    let (gens, chars) = shared_group(snapshot.generators(), reference, n);
    if gens.is_empty() {
        return Ok(1.0);
    }
    let (gens, chars) = reduce_extents_tagged(&gens, &chars);
    let signed: Vec<PauliString> = gens
        .into_iter()
        .zip(chars)
        .map(|(mut g, c)| {
            g.set_negative(c);
            g
        })
        .collect();
    let g = group_character_mps(n, &signed, Some(cap))?.support_projection();
    Ok(mps_overlap(h, &g, &vec![[2.0, 2.0]; n])? / id)
}

fn validate_reference(gens: &[PauliString], n: usize) -> Result<()> {
    if gens.len() > n {
        return Err(Error::Invalid(format!(
            "{} stabilizer generators on {n} qubits",
            gens.len()
        )));
    }
    for (a, g) in gens.iter().enumerate() {
        if g.len() != n {
            return Err(Error::Length {
                expected: n,
                got: g.len(),
            });
        }
        if gens[..a].iter().any(|h| !h.commutes(g)) {
            return Err(Error::Invalid("stabilizer generators must commute".into()));
        }
    }
    let mut m = BitMatrix::new(2 * n);
    for g in gens {
        m.push_row((0..n).map(|i| g.x_bit(i)).chain((0..n).map(|i| g.z_bit(i))));
    }
    if m.rank() != gens.len() {
        return Err(Error::Invalid(
            "stabilizer generators must be independent".into(),
        ));
    }
    Ok(())
}

/// Per-snapshot values of `Tr(O M⁻¹(σ̂))`.
pub fn observable_values(
    store: &SnapshotStore,
    r: &ReconstructionMps,
    obs: &ObservableSpec,
    extent_cap: usize,
) -> Result<Vec<f64>> {
    let n = obs
        .n()
        .ok_or_else(|| Error::Invalid("empty observable".into()))?;
    check_inputs(store, r, n)?;
    let scale = 0.5f64.powi(n as i32);
    let advice = |e: Error| {
        match e {
        Error::ExtentCap { extent, cap } => Error::Invalid(format!(
            "snapshot generator spans {extent} sites, above the cap of {cap}; reduce the circuit depth or pass the observable as a Pauli list"
        )),
        e => e,
    }
    };
    match obs {
        ObservableSpec::PauliSum(terms) => {
            if let Some((_, p)) = terms.iter().find(|t| t.1.len() != n) {
                return Err(Error::Length {
                    expected: n,
                    got: p.len(),
                });
            }
            pauli_sum_values(store, r, terms)
        }
        ObservableSpec::Mps(reference) => {
            if reference.n_sites() != n {
                return Err(Error::Length {
                    expected: n,
                    got: reference.n_sites(),
                });
            }
            let h = eigen_mps(r)?;
            let identity = PauliBasisMps::maximally_mixed(n);
            store
                .records
                .par_iter()
                .map(|rec| {
                    let s =
                        stabilizer_to_pauli_mps(&rec.state, Some(extent_cap)).map_err(advice)?;
                    // Calibrate against the same contraction with the identity reference.
                    Ok(scale * three_layer(&s, reference, &h)? / three_layer(&s, &identity, &h)?)
                })
                .collect()
        }
        ObservableSpec::Stabilizer {
            generators: gens, ..
        } => {
            validate_reference(gens, n)?;
            let h = eigen_mps(r)?;
            let id = identity_eigen(r)?;
            store
                .records
                .par_iter()
                .map(|rec| {
                    Ok(scale
                        * stabilizer_value(&rec.state, gens, &h, id, extent_cap).map_err(advice)?)
                })
                .collect()
        }
    }
}

pub fn estimate_observable(
    store: &SnapshotStore,
    r: &ReconstructionMps,
    obs: &ObservableSpec,
    aggregation: Aggregation,
    extent_cap: usize,
) -> Result<EstimateResult> {
    let values = observable_values(store, r, obs, extent_cap)?;
    EstimateResult::from_values(&values, aggregation)
}

/// Fidelity with a pure reference, `Tr(ρ′ ρ)`, aggregated by median of means.
pub fn estimate_fidelity(
    store: &SnapshotStore,
    r: &ReconstructionMps,
    reference: &ObservableSpec,
    groups: usize,
    extent_cap: usize,
) -> Result<EstimateResult> {
    if matches!(reference, ObservableSpec::PauliSum(_)) {
        return Err(Error::Invalid(
            "fidelity needs a reference state, not a Pauli list".into(),
        ));
    }
    estimate_observable(
        store,
        r,
        reference,
        Aggregation::MedianOfMeans { groups },
        extent_cap,
    )
}

/// Single-Pauli reference operator `O = P` in the `2⁻ⁿ Σ c_P P` convention (`c_P = ±2ⁿ`).
pub fn pauli_operator_mps(p: &PauliString) -> Result<PauliBasisMps> {
    let n = p.len();
    let comps: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let mut c = [0.0; 4];
            c[p.get(i) as usize] = 2.0;
            c
        })
        .collect();
    Ok(PauliBasisMps::product(&comps)?.scaled(p.sign() as f64))
}
