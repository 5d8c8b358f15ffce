//! Entanglement features (average subset purities) of the snapshot ensemble.

mod tebd;

use std::io::Write;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::stabilizer_sim::{layer_pairs, CircuitSpec};
use crate::tensor_core::{Mat, SubsetMps};
use tebd::Cell;

/// Default bond dimension for EF evolution.
pub const DEFAULT_EF_BOND: usize = 16;

/// Largest `n` for dense subset tables and CSV dumps.
pub const DENSE_EF_MAX_N: usize = 16;

/// Average purity `W(A)` over the snapshot ensemble, stored as a subset MPS.
#[derive(Clone, Debug)]
pub struct EfState {
    mps: SubsetMps,
    max_bond: Option<usize>,
    discarded: f64,
}

impl EfState {
    pub fn from_mps(mps: SubsetMps) -> Self {
        Self {
            mps,
            max_bond: None,
            discarded: 0.0,
        }
    }

    pub fn mps(&self) -> &SubsetMps {
        &self.mps
    }

    pub fn n(&self) -> usize {
        self.mps.n_sites()
    }

    /// Bond cap used during evolution; `None` means exact.
    pub fn max_bond(&self) -> Option<usize> {
        self.max_bond
    }

    /// Sum of discarded squared singular-value fractions over all truncations.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    pub fn component(&self, subset: &[bool]) -> Result<f64> {
        self.mps.evaluate(subset)
    }

    pub fn component_mask(&self, mask: u64) -> Result<f64> {
        self.mps.evaluate_mask(mask)
    }

    /// All `2ⁿ` components indexed by bitmask (site `i` ↔ bit `i`).
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.n() > DENSE_EF_MAX_N {
            return Err(Error::Invalid(format!(
                "dense EF limited to n ≤ {DENSE_EF_MAX_N}"
            )));
        }
        self.mps.to_dense()
    }

    /// CSV rows `subset,w` for every subset.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let table = self.to_dense()?;
        writeln!(out, "subset,w")?;
        for (mask, w) in table.iter().enumerate() {
            writeln!(out, "{mask},{w}")?;
        }
        Ok(())
    }
}

/// Action of one scrambling two-qubit gate on the subset basis `(∅, {left}, {right}, {both})`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateEfTransfer(pub Matrix4<f64>);

impl GateEfTransfer {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn apply(&self, v: [f64; 4]) -> [f64; 4] {
        let out = self.0 * nalgebra::Vector4::from(v);
        [out[0], out[1], out[2], out[3]]
    }
}

/// Transfer matrix of a two-design gate: a single site after the gate has average
/// purity `2/5 (W_∅ + W_both)` of the input.
pub fn haar_gate_ef_transfer() -> GateEfTransfer {
    let p = 0.4;
    GateEfTransfer(Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        p, 0.0, 0.0, p, //
        p, 0.0, 0.0, p, //
        0.0, 0.0, 0.0, 1.0,
    ))
}

/// Product-state EF: every subset purity is 1.
pub fn ef_product_state(n: usize) -> EfState {
    EfState::from_mps(SubsetMps::product(n, 1.0, 1.0))
}

pub fn ef_component(ef: &EfState, subset: &[bool]) -> Result<f64> {
    ef.component(subset)
}

/// EF of the snapshot ensemble `{U†|b⟩}` for the brick-wall circuit of `spec`.
///
/// Gates act on the product EF from the last layer back to the first, each followed
/// by truncation to `max_bond` (`None` keeps every nonzero singular value). Even
/// rings with `n ≥ 4` use a two-site translation-invariant representation whose
/// truncation is weighted by the rest of the ring; other sizes truncate locally.
pub fn evolve_snapshot_ef(spec: &CircuitSpec, max_bond: Option<usize>) -> Result<EfState> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::Invalid("EF needs at least one site".into()));
    }
    if max_bond == Some(0) {
        return Err(Error::Invalid("EF bond dimension must be positive".into()));
    }
    let cap = max_bond.unwrap_or(usize::MAX);
    let op = *haar_gate_ef_transfer().matrix();
    let mut discarded = 0.0;
    let mps = if spec.depth == 0 || n == 1 {
        SubsetMps::product(n, 1.0, 1.0)
    } else if n.is_multiple_of(2) && n >= 4 {
        let mut cell = Cell::product(n / 2);
        for layer in (1..=spec.depth).rev() {
            discarded += if layer % 2 == 1 {
                cell.apply_inner(&op, cap)?
            } else {
                cell.apply_outer(&op, cap)?
            };
            let w0 = cell.empty_value();
            if !(w0 > 0.0 && w0.is_finite()) {
                return Err(Error::NonFinite("EF normalization"));
            }
            cell.scale(w0.powf(-1.0 / n as f64));
        }
        let d = cell.even[0].nrows();
        SubsetMps::new(n, vec![cell.even, cell.odd], Mat::identity(d, d))?
    } else {
        let mut mps = SubsetMps::product(n, 1.0, 1.0).expanded();
        for layer in (1..=spec.depth).rev() {
            for (a, _) in layer_pairs(n, layer) {
                let (next, d) = mps.apply_two_site(&op, a, cap)?;
                mps = next;
                discarded += d;
            }
            let w0 = mps.evaluate_mask(0)?;
            if !(w0 > 0.0 && w0.is_finite()) {
                return Err(Error::NonFinite("EF normalization"));
            }
            mps = mps.scaled(1.0 / w0);
        }
        mps
    };
    Ok(EfState {
        mps,
        max_bond,
        discarded,
    })
}

/// Dense subset-vector propagation of the same schedule; `2ⁿ` components by bitmask.
pub fn dense_snapshot_ef(n: usize, depth: usize) -> Result<Vec<f64>> {
    if n == 0 || n > DENSE_EF_MAX_N {
        return Err(Error::Invalid(format!(
            "dense EF needs 1 ≤ n ≤ {DENSE_EF_MAX_N}"
        )));
    }
    let op = *haar_gate_ef_transfer().matrix();
    let mut w = vec![1.0; 1 << n];
    for layer in (1..=depth).rev() {
        for (a, b) in layer_pairs(n, layer) {
            let mut next = vec![0.0; w.len()];
            for (mask, out) in next.iter_mut().enumerate() {
                let base = mask & !(1 << a) & !(1 << b);
                let o = ((mask >> a) & 1) | (((mask >> b) & 1) << 1);
                for i in 0..4 {
                    let c = op[(o, i)];
                    if c != 0.0 {
                        *out += c * w[base | ((i & 1) << a) | ((i >> 1) << b)];
                    }
                }
            }
            w = next;
        }
    }
    Ok(w)
}
