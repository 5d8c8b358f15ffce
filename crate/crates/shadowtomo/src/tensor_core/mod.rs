//! Dense tensors and ring MPS over binary (subset) and four-valued (Pauli) labels.

mod dense;
mod pauli_mps;
mod subset_mps;

pub use dense::DenseTensor;
pub use pauli_mps::{PauliBasisMps, PAULI_LETTERS};
pub use subset_mps::{
    checked_svd, mps_overlap, split_truncate, subset_from_mask, subset_from_sites, uniform_weights,
    Mat, SiteTensor, SubsetMps,
};
