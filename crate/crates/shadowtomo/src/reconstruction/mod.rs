//! Reconstruction coefficients `r_A` defining the inverse measurement channel
//! `M⁻¹(σ) = 2ⁿ Σ_A r_A 2^{|A|−n} Tr_Ā(σ) ⊗ 𝟙_Ā`.

mod loss;
mod oracle;
mod rfile;
mod solve;

use std::fmt;

use crate::ef_dynamics::EfState;
use crate::error::{Error, Result};
use crate::tensor_core::{Mat, SubsetMps};

pub use loss::FusionTensor;
pub use oracle::{apply_inverse_channel_dense, brute_force_r, clamp_ef_table, CMat};
pub use rfile::{read_r, write_r};
pub use solve::{solve_r, solve_r_ladder, Method, SolveOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    /// Closed-form solution.
    Exact,
    /// Optimized to within the requested tolerance.
    Solved,
    /// Best iterate after the iteration budget ran out.
    Unconverged,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Exact => "exact",
            SolveStatus::Solved => "solved",
            SolveStatus::Unconverged => "unconverged",
        })
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolveStatus::Exact),
            "solved" => Ok(SolveStatus::Solved),
            "unconverged" => Ok(SolveStatus::Unconverged),
            _ => Err(Error::Invalid(format!("unknown solve status {s:?}"))),
        }
    }
}

/// Reconstruction coefficients as a subset MPS `r_A = Tr(B Π_i R_i^{[i∈A]})`.
#[derive(Clone, Debug)]
pub struct ReconstructionMps {
    mps: SubsetMps,
    /// Circuit depth; `None` for the infinitely deep (global Clifford) limit.
    depth: Option<usize>,
    loss: Option<f64>,
    status: SolveStatus,
}

impl ReconstructionMps {
    pub fn from_parts(
        mps: SubsetMps,
        depth: Option<usize>,
        loss: Option<f64>,
        status: SolveStatus,
    ) -> Result<Self> {
        let r = Self {
            mps,
            depth,
            loss,
            status,
        };
        let full = if r.n() >= 64 {
            u64::MAX
        } else {
            (1u64 << r.n()) - 1
        };
        let ends = [r.coefficient_mask(0)?, r.coefficient_mask(full)?];
        if ends.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reconstruction coefficients"));
        }
        Ok(r)
    }

    pub fn mps(&self) -> &SubsetMps {
        &self.mps
    }

    pub fn n(&self) -> usize {
        self.mps.n_sites()
    }

    pub fn depth(&self) -> Option<usize> {
        self.depth
    }

    pub fn bond(&self) -> usize {
        self.mps.max_bond()
    }

    pub fn loss(&self) -> Option<f64> {
        self.loss
    }

    pub fn status(&self) -> SolveStatus {
        self.status
    }

    pub fn coefficient(&self, subset: &[bool]) -> Result<f64> {
        self.mps.evaluate(subset)
    }

    /// `r_A` for a subset given as a bitmask; sites ≥ 64 are outside the subset.
    pub fn coefficient_mask(&self, mask: u64) -> Result<f64> {
        self.mps.evaluate_mask(mask)
    }

    pub fn to_dense(&self) -> Result<Vec<f64>> {
        self.mps.to_dense()
    }

    /// Same coefficients on a ring of `n` sites (unit-cell tensors reused).
    pub fn resized(&self, n: usize) -> Result<Self> {
        Ok(Self {
            mps: self.mps.with_sites(n)?,
            ..self.clone()
        })
    }
}

/// Random single-qubit Clifford measurements: `R⁰ = −1`, `R¹ = 3/2`.
pub fn closed_form_r_pauli(n: usize) -> ReconstructionMps {
    ReconstructionMps {
        mps: SubsetMps::product(n, -1.0, 1.5),
        depth: Some(0),
        loss: None,
        status: SolveStatus::Exact,
    }
}

/// Global Clifford measurements: `r_∅ = −1`, `r_Ω = 1 + 2⁻ⁿ`, all other coefficients 0.
pub fn closed_form_r_clifford(n: usize) -> ReconstructionMps {
    let top = (1.0 + 0.5f64.powi(n as i32)).powf(1.0 / n as f64);
    let r0 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 0.0]));
    let r1 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, top]));
    let b = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0]));
    let mps = SubsetMps::new(n, vec![[r0, r1]], b).expect("well-formed closed form");
    ReconstructionMps {
        mps,
        depth: None,
        loss: None,
        status: SolveStatus::Exact,
    }
}

/// One brick-wall layer on an even ring: independent two-qubit Clifford twirls on
/// the pairs `(2k, 2k+1)`, so `r` factorizes over pairs with per-pair values
/// `r_∅ = −1`, `r_both = 5/4` and zero on single sites.
pub fn closed_form_r_depth_one(n: usize) -> Result<ReconstructionMps> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Invalid(format!(
            "depth-one closed form needs an even ring, got n={n}"
        )));
    }
    let unit = |i: usize, j: usize| {
        let mut m = Mat::zeros(2, 2);
        m[(i, j)] = 1.0;
        m
    };
    let even = [unit(0, 0), unit(0, 1)];
    let odd = [unit(0, 0) * -1.0, unit(1, 0) * 1.25];
    let mps = SubsetMps::new(n, vec![even, odd], Mat::identity(2, 2))?;
    Ok(ReconstructionMps {
        mps,
        depth: Some(1),
        loss: None,
        status: SolveStatus::Exact,
    })
}

/// Exact coefficients for a small ring from the untruncated EF, stored as an open-chain MPS.
pub fn brute_force_r_mps(n: usize, depth: usize) -> Result<ReconstructionMps> {
    let table = brute_force_r(&crate::ef_dynamics::dense_snapshot_ef(n, depth)?, n)?;
    let mps = SubsetMps::from_dense(n, &table)?;
    ReconstructionMps::from_parts(mps, Some(depth), None, SolveStatus::Exact)
}

/// Consistency loss `Σ_B (Σ_{A,C} r_A f_{A,B,C} W_C − δ_{B,Ω})²`.
pub fn consistency_loss(r: &ReconstructionMps, ef: &EfState) -> Result<f64> {
    if r.n() != ef.n() {
        return Err(Error::Mismatch(format!(
            "r has n={}, EF has n={}",
            r.n(),
            ef.n()
        )));
    }
    let params = loss::Params::from_mps(r.mps());
    Ok(loss::loss_and_grad(&params, ef.mps(), false)?.0)
}

/// Consistency loss with its gradient: one matrix per unit-cell tensor (`T⁰`, `T¹`
/// of each cell site in order) followed by the boundary matrix.
pub fn consistency_loss_gradient(r: &ReconstructionMps, ef: &EfState) -> Result<(f64, Vec<Mat>)> {
    if r.n() != ef.n() {
        return Err(Error::Mismatch(format!(
            "r has n={}, EF has n={}",
            r.n(),
            ef.n()
        )));
    }
    let params = loss::Params::from_mps(r.mps());
    let (value, grad) = loss::loss_and_grad(&params, ef.mps(), true)?;
    let grad = grad.ok_or(Error::NonFinite("missing gradient"))?;
    Ok((value, grad.iter().cloned().collect()))
}

/// Eigenvalue of the inverse channel on a Pauli operator with the given support:
/// `M⁻¹(P) = λ P` with `λ = 2ⁿ Σ_{A ⊇ supp P} r_A = 2ⁿ Tr(B Π_i (δ_{i∉S} R⁰ + R¹))`.
pub fn pauli_eigen_coefficient(r: &ReconstructionMps, support: &[bool]) -> Result<f64> {
    let n = r.n();
    if support.len() != n {
        return Err(Error::Length {
            expected: n,
            got: support.len(),
        });
    }
    let m = r.mps();
    let mut acc = m.boundary().clone();
    for (i, &inside) in support.iter().enumerate() {
        let t = m.site(i);
        acc = if inside {
            acc * &t[1]
        } else {
            acc * (&t[0] + &t[1])
        };
        // Keep the running product near unit scale; the 2ⁿ factor is folded in here.
        acc *= 2.0;
    }
    let v = acc.trace();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("pauli_eigen_coefficient"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ef_dynamics::{dense_snapshot_ef, ef_product_state, evolve_snapshot_ef, EfState};
    use crate::stabilizer_sim::CircuitSpec;
    use crate::tensor_core::subset_from_sites;

    fn page_ef(n: usize) -> EfState {
        // Deep-circuit values (2^{|A|} + 2^{n−|A|}) / (2ⁿ + 1): a sum of two product functions.
        let d = (1u64 << n) as f64 + 1.0;
        let t0 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0]));
        let t1 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 1.0]));
        let b = Mat::identity(2, 2) / d;
        EfState::from_mps(SubsetMps::new(n, vec![[t0, t1]], b).unwrap())
    }

    #[test]
    fn pauli_closed_form_values() {
        let r = closed_form_r_pauli(3);
        assert_eq!(r.coefficient_mask(0).unwrap(), -1.0);
        assert_eq!(r.coefficient_mask(7).unwrap(), 3.375);
        assert_eq!(r.coefficient(&subset_from_sites(3, &[2])).unwrap(), 1.5);
    }

    #[test]
    fn clifford_closed_form_values() {
        let r = closed_form_r_clifford(4);
        assert!((r.coefficient_mask(0).unwrap() + 1.0).abs() < 1e-15);
        assert!((r.coefficient_mask(15).unwrap() - (1.0 + 1.0 / 16.0)).abs() < 1e-14);
        assert_eq!(r.coefficient_mask(0b1010).unwrap(), 0.0);
    }

    #[test]
    fn closed_forms_have_zero_loss() {
        for n in [1usize, 2, 5, 8] {
            let l = consistency_loss(&closed_form_r_pauli(n), &ef_product_state(n)).unwrap();
            assert!(l.abs() < 1e-12, "n={n}: {l}");
        }
        let l = consistency_loss(&closed_form_r_clifford(4), &page_ef(4)).unwrap();
        assert!(l.abs() <= 1e-10, "{l}");
    }

    #[test]
    fn eigen_coefficients_of_closed_forms() {
        let r = closed_form_r_pauli(5);
        for k in 0..=5 {
            let s: Vec<bool> = (0..5).map(|i| i < k).collect();
            let v = pauli_eigen_coefficient(&r, &s).unwrap();
            assert!((v - 3f64.powi(k)).abs() < 1e-12);
        }
        let r = closed_form_r_clifford(4);
        assert!((pauli_eigen_coefficient(&r, &[false; 4]).unwrap() - 1.0).abs() < 1e-12);
        let v = pauli_eigen_coefficient(&r, &[true, false, true, false]).unwrap();
        assert!((v - 17.0).abs() < 1e-12);
    }

    #[test]
    fn depth_one_closed_form_matches_oracle() {
        for n in [2usize, 4, 6] {
            let want = brute_force_r(&dense_snapshot_ef(n, 1).unwrap(), n).unwrap();
            let got = closed_form_r_depth_one(n).unwrap().to_dense().unwrap();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
            let ef = evolve_snapshot_ef(&CircuitSpec::new(n, 1, 0), None).unwrap();
            assert!(consistency_loss(&closed_form_r_depth_one(n).unwrap(), &ef).unwrap() < 1e-12);
        }
        assert!(closed_form_r_depth_one(5).is_err());
    }

    #[test]
    fn solver_recovers_pauli_form() {
        let n = 6;
        let ef = ef_product_state(n);
        let init = closed_form_r_pauli(n);
        // Start from a perturbed point and require the solver to return to the exact solution.
        let opts = SolveOptions {
            bond: 1,
            tol: 1e-12,
            jitter: 0.2,
            method: Method::Adam,
            ..Default::default()
        };
        let r = solve_r(&ef, &init, Some(0), &opts).unwrap();
        let want = init.to_dense().unwrap();
        for (a, b) in r.to_dense().unwrap().iter().zip(&want) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn solver_matches_oracle_small_ring() {
        let n = 6;
        let table = dense_snapshot_ef(n, 1).unwrap();
        let want = brute_force_r(&table, n).unwrap();
        let ef = evolve_snapshot_ef(&CircuitSpec::new(n, 1, 0), None).unwrap();
        let opts = SolveOptions {
            bond: 4,
            tol: 1e-7,
            ..Default::default()
        };
        let r = solve_r(&ef, &closed_form_r_pauli(n), Some(1), &opts).unwrap();
        let got = r.to_dense().unwrap();
        let err = got
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "max error {err}, loss {:?}", r.loss());
    }
}
