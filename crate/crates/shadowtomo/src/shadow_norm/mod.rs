//! Locally scrambled shadow norms, optimal-depth scans and their empirical fit.

use std::io::Write;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::ef_dynamics::{evolve_snapshot_ef, EfState};
use crate::error::{Error, Result};
use crate::reconstruction::ReconstructionMps;
use crate::stabilizer_sim::{CircuitSpec, PauliString};
use crate::tensor_core::{mps_overlap, Mat, SubsetMps};

/// Operator entanglement feature `W_O`, a subset function with
/// `(W_P)_A = δ_{supp P ⊆ A} 2^{2n−|A|}` for a Pauli string `P`.
#[derive(Clone, Debug)]
pub struct OperatorEf {
    mps: SubsetMps,
}

impl OperatorEf {
    pub fn from_mps(mps: SubsetMps) -> Self {
        Self { mps }
    }

    /// Bond-1 form with `W⁰ = 4·δ_{i∉S}`, `W¹ = 2`.
    pub fn pauli(support: &[bool]) -> Result<Self> {
        let values: Vec<[f64; 2]> = support
            .iter()
            .map(|&s| [if s { 0.0 } else { 4.0 }, 2.0])
            .collect();
        Ok(Self {
            mps: SubsetMps::product_sites(&values)?,
        })
    }

    /// `O = Σ_P a_P P` over distinct Pauli strings: cross terms vanish, so
    /// `W_O = Σ_P a_P² W_P`, stored as a direct sum of bond-1 terms.
    pub fn pauli_sum(terms: &[(f64, PauliString)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|t| t.1.len())
            .ok_or_else(|| Error::Invalid("empty Pauli sum".into()))?;
        let d = terms.len();
        let mut sites: Vec<[Mat; 2]> = (0..n)
            .map(|_| [Mat::zeros(d, d), Mat::zeros(d, d)])
            .collect();
        for (t, (_, p)) in terms.iter().enumerate() {
            if p.len() != n {
                return Err(Error::Length {
                    expected: n,
                    got: p.len(),
                });
            }
            for (i, site) in sites.iter_mut().enumerate() {
                site[0][(t, t)] = if p.get(i) == 0 { 4.0 } else { 0.0 };
                site[1][(t, t)] = 2.0;
            }
        }
        let boundary = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            terms.iter().map(|(a, _)| a * a),
        ));
        Ok(Self {
            mps: SubsetMps::new(n, sites, boundary)?,
        })
    }

    pub fn mps(&self) -> &SubsetMps {
        &self.mps
    }

    pub fn n(&self) -> usize {
        self.mps.n_sites()
    }
}

/// `‖O‖² = Σ_A 2^{|A|−n} r_A (W_O)_A`, one ring contraction.
pub fn shadow_norm_general(r: &ReconstructionMps, w_o: &OperatorEf) -> Result<f64> {
    if r.n() != w_o.n() {
        return Err(Error::Mismatch(format!(
            "r has n={}, operator EF has n={}",
            r.n(),
            w_o.n()
        )));
    }
    mps_overlap(r.mps(), w_o.mps(), &vec![[0.5, 1.0]; r.n()])
}

/// Probability that a Pauli with this support is measured in the computational basis
/// after the circuit: `Σ_{B⊆S} (−2)^{|B|} W_B / (−3)^k`.
pub fn pauli_measurement_probability(ef: &EfState, support: &[bool]) -> Result<f64> {
    let n = ef.n();
    if support.len() != n {
        return Err(Error::Length {
            expected: n,
            got: support.len(),
        });
    }
    let weights: Vec<[f64; 2]> = support
        .iter()
        .map(|&s| {
            if s {
                [1.0 / -3.0, 2.0 / 3.0]
            } else {
                [1.0, 0.0]
            }
        })
        .collect();
    mps_overlap(ef.mps(), &SubsetMps::product(n, 1.0, 1.0), &weights)
}

/// `‖P‖² = (−3)^k / Σ_{B⊆supp P} (−2)^{|B|} W_B` directly from the EF.
pub fn pauli_shadow_norm_from_ef(ef: &EfState, support: &[bool]) -> Result<f64> {
    let p = pauli_measurement_probability(ef, support)?;
    if !(p > 0.0) {
        let mask = support
            .iter()
            .enumerate()
            .filter(|(i, &s)| s && *i < 64)
            .fold(0u64, |m, (i, _)| m | 1 << i);
        return Err(Error::IncompleteEnsemble {
            subset: mask,
            value: p,
        });
    }
    Ok(1.0 / p)
}

/// Contiguous support `[start, start+k)` on a ring of `n`.
pub fn contiguous_support(n: usize, start: usize, k: usize) -> Vec<bool> {
    let mut s = vec![false; n];
    for j in 0..k.min(n) {
        s[(start + j) % n] = true;
    }
    s
}

/// Norms of `Z^{⊗k}` (support starting at site 0) across depths for one weight `k`.
#[derive(Clone, Debug)]
pub struct DepthScanPoint {
    pub k: usize,
    /// `(L, ‖Z^{⊗k}‖²_L)` for every scanned depth.
    pub norms: Vec<(usize, f64)>,
    /// Depth with the smallest norm; ties go to the smaller depth.
    pub l_star: usize,
}

#[derive(Clone, Debug)]
pub struct DepthScan {
    pub n: usize,
    pub points: Vec<DepthScanPoint>,
    /// Least-squares fit `L* ≈ a (ln k)² + b ln k`.
    pub a: f64,
    pub b: f64,
}

impl DepthScan {
    pub fn predicted(&self, k: usize) -> f64 {
        let x = (k as f64).ln();
        self.a * x * x + self.b * x
    }

    /// CSV rows `k,L,norm,l_star,a,b`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "k,L,norm,l_star,a,b")?;
        for p in &self.points {
            for &(l, norm) in &p.norms {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    p.k, l, norm, p.l_star, self.a, self.b
                )?;
            }
        }
        Ok(())
    }
}

/// Fit `y ≈ a x² + b x` with `x = ln k` by least squares.
pub fn fit_optimal_depth(points: &[(usize, usize)]) -> Result<(f64, f64)> {
    let distinct = {
        let mut ks: Vec<usize> = points.iter().map(|p| p.0).filter(|&k| k > 1).collect();
        ks.sort_unstable();
        ks.dedup();
        ks.len()
    };
    if distinct < 2 {
        return Err(Error::InsufficientPoints {
            need: 2,
            got: distinct,
        });
    }
    let mut ata = Matrix2::zeros();
    let mut aty = Vector2::zeros();
    for &(k, l) in points {
        let x = (k as f64).ln();
        let row = Vector2::new(x * x, x);
        ata += row * row.transpose();
        aty += row * l as f64;
    }
    let sol = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::Invalid("singular optimal-depth fit".into()))?;
    Ok((sol[0], sol[1]))
}

/// Scan depths for each weight using the EF-only Pauli norm.
pub fn depth_scan(
    ks: &[usize],
    depths: &[usize],
    n: usize,
    ef_bond: Option<usize>,
) -> Result<DepthScan> {
    if ks.is_empty() || depths.is_empty() {
        return Err(Error::Invalid("depth scan needs weights and depths".into()));
    }
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::Invalid(format!("weight {k} outside 1..={n}")));
    }
    let efs: Vec<(usize, EfState)> = depths
        .par_iter()
        .map(|&l| evolve_snapshot_ef(&CircuitSpec::new(n, l, 0), ef_bond).map(|ef| (l, ef)))
        .collect::<Result<_>>()?;
    let points: Vec<DepthScanPoint> = ks
        .par_iter()
        .map(|&k| {
            let support = contiguous_support(n, 0, k);
            let mut norms = Vec::with_capacity(efs.len());
            for (l, ef) in &efs {
                match pauli_shadow_norm_from_ef(ef, &support) {
                    Ok(v) => norms.push((*l, v)),
                    Err(e) => log::warn!("skipping k={k}, L={l}: {e}"),
                }
            }
            let l_star = norms
                .iter()
                .fold(None::<(usize, f64)>, |best, &(l, v)| match best {
                    Some((bl, bv)) if bv < v || (bv == v && bl < l) => Some((bl, bv)),
                    _ => Some((l, v)),
                })
                .map(|b| b.0)
                .ok_or_else(|| Error::Invalid(format!("no depth produced a norm for k={k}")))?;
            Ok(DepthScanPoint { k, norms, l_star })
        })
        .collect::<Result<_>>()?;
    let (a, b) = fit_optimal_depth(&points.iter().map(|p| (p.k, p.l_star)).collect::<Vec<_>>())?;
    Ok(DepthScan { n, points, a, b })
}
