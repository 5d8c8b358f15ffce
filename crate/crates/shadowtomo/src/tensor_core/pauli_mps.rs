use super::subset_mps::{Mat, SubsetMps};
use crate::error::{Error, Result};

/// Pauli label order used for the four site matrices.
pub const PAULI_LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

/// Operator in the Pauli basis, `P ↦ Tr(B · Π_i O_i^{P_i})`, with labels `0..4 = I,X,Y,Z`.
///
/// For density operators the convention is `ρ = 2⁻ⁿ Σ_P c_P P`, so the all-identity
/// component is 1 and stabilizer states have components in {−1, 0, 1}.
#[derive(Clone, Debug)]
pub struct PauliBasisMps {
    n: usize,
    sites: Vec<[Mat; 4]>,
    boundary: Mat,
}

impl PauliBasisMps {
    pub fn new(sites: Vec<[Mat; 4]>, boundary: Mat) -> Result<Self> {
        let n = sites.len();
        if n == 0 {
            return Err(Error::Invalid("Pauli MPS needs at least one site".into()));
        }
        for (i, s) in sites.iter().enumerate() {
            let shape = s[0].shape();
            if s.iter().any(|m| m.shape() != shape) {
                return Err(Error::Dimension(format!(
                    "site {i}: label matrices differ in shape"
                )));
            }
            let next = sites[(i + 1) % n][0].nrows();
            if shape.1 != next {
                return Err(Error::Dimension(format!(
                    "bond after site {i}: {} vs {next}",
                    shape.1
                )));
            }
            if s.iter().any(|m| m.iter().any(|x| !x.is_finite())) {
                return Err(Error::NonFinite("PauliBasisMps site tensor"));
            }
        }
        let d0 = sites[0][0].nrows();
        if boundary.shape() != (d0, d0) {
            return Err(Error::Dimension(format!(
                "boundary {:?} vs bond {d0}",
                boundary.shape()
            )));
        }
        Ok(Self { n, sites, boundary })
    }

    /// Bond-1 product operator with per-site component vectors.
    pub fn product(components: &[[f64; 4]]) -> Result<Self> {
        let sites = components
            .iter()
            .map(|c| std::array::from_fn(|p| Mat::from_element(1, 1, c[p])))
            .collect();
        Self::new(sites, Mat::identity(1, 1))
    }

    /// The maximally mixed state: only the identity component, equal to 1.
    pub fn maximally_mixed(n: usize) -> Self {
        Self::product(&vec![[1.0, 0.0, 0.0, 0.0]; n]).expect("valid product")
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn site(&self, i: usize) -> &[Mat; 4] {
        &self.sites[i]
    }

    pub fn boundary(&self) -> &Mat {
        &self.boundary
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(|s| s[0].nrows()).max().unwrap_or(1)
    }

    /// Component for a Pauli string given as labels in `0..4`.
    pub fn evaluate(&self, labels: &[u8]) -> Result<f64> {
        if labels.len() != self.n {
            return Err(Error::Length {
                expected: self.n,
                got: labels.len(),
            });
        }
        let mut acc = self.boundary.clone();
        for (i, &p) in labels.iter().enumerate() {
            if p > 3 {
                return Err(Error::Invalid(format!("Pauli label {p} out of range")));
            }
            acc = &acc * &self.sites[i][p as usize];
        }
        Ok(acc.trace())
    }

    /// Sum of components over Paulis with a given support:
    /// `T⁰ = O^I`, `T¹ = O^X + O^Y + O^Z`.
    pub fn support_projection(&self) -> SubsetMps {
        let cell = self
            .sites
            .iter()
            .map(|s| [s[0].clone(), &s[1] + &s[2] + &s[3]])
            .collect();
        SubsetMps::new(self.n, cell, self.boundary.clone()).expect("shapes already validated")
    }

    /// Multiply every component by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.boundary *= alpha;
        out
    }
}
