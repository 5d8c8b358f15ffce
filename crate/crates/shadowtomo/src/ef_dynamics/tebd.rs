//! Two-site translation-invariant TEBD on a ring with environment-weighted truncation.

use nalgebra::{Matrix4, SymmetricEigen};

use crate::error::Result;
use crate::tensor_core::{split_truncate, Mat, SiteTensor};

/// Unit cell `[even, odd]` of a ring of `2m` sites with identity boundary.
#[derive(Clone, Debug)]
pub(crate) struct Cell {
    pub even: SiteTensor,
    pub odd: SiteTensor,
    pub m: usize,
}

fn two_site_block(x: &SiteTensor, y: &SiteTensor, op: &Matrix4<f64>) -> [Mat; 4] {
    let theta: [Mat; 4] = std::array::from_fn(|k| &x[k & 1] * &y[k >> 1]);
    std::array::from_fn(|out| {
        let mut acc = Mat::zeros(theta[0].nrows(), theta[0].ncols());
        for (inp, t) in theta.iter().enumerate() {
            let c = op[(out, inp)];
            if c != 0.0 {
                acc += t * c;
            }
        }
        acc
    })
}

fn block_matrix(blocks: &[Mat; 4]) -> Mat {
    let (dl, dr) = blocks[0].shape();
    let mut big = Mat::zeros(2 * dl, 2 * dr);
    for la in 0..2 {
        for lb in 0..2 {
            big.view_mut((la * dl, lb * dr), (dl, dr))
                .copy_from(&blocks[la + 2 * lb]);
        }
    }
    big
}

fn normalized(m: Mat) -> Mat {
    let s = m.amax();
    if s > 0.0 {
        m / s
    } else {
        m
    }
}

fn matrix_power_normalized(e: &Mat, k: usize) -> Mat {
    let mut result = Mat::identity(e.nrows(), e.ncols());
    let mut base = normalized(e.clone());
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            result = normalized(&result * &base);
        }
        k >>= 1;
        if k > 0 {
            base = normalized(&base * &base);
        }
    }
    result
}

/// Square root and pseudo-inverse square root of a symmetric PSD matrix.
fn sqrt_and_pinv(m: &Mat) -> (Mat, Mat) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let q = &eig.eigenvectors;
    let d = m.nrows();
    let mut s = Mat::zeros(d, d);
    let mut sinv = Mat::zeros(d, d);
    for k in 0..d {
        let l = eig.eigenvalues[k];
        if l > 1e-13 * lmax {
            let col = q.column(k);
            s += col * col.transpose() * l.sqrt();
            sinv += col * col.transpose() / l.sqrt();
        }
    }
    (s, sinv)
}

/// Apply `op` to the bond joining `x` (left) and `y` (right), where the pair `x y`
/// repeats `m` times around the ring. Returns new `(x, y)` and the discarded weight.
fn update_pair(
    x: &SiteTensor,
    y: &SiteTensor,
    op: &Matrix4<f64>,
    m: usize,
    max_bond: usize,
) -> Result<(SiteTensor, SiteTensor, f64)> {
    let blocks = two_site_block(x, y, op);
    let dl = blocks[0].nrows();
    let big = block_matrix(&blocks);
    let (left, right, discarded) = if m < 2 || 2 * dl <= max_bond {
        split_truncate(&big, max_bond)?
    } else {
        let rank_probe = split_truncate(&big, usize::MAX)?;
        if rank_probe.0.ncols() <= max_bond {
            rank_probe
        } else {
            weighted_split(&blocks, m, max_bond)?
        }
    };
    let k = left.ncols();
    let new_x = [
        left.rows(0, dl).into_owned(),
        left.rows(dl, dl).into_owned(),
    ];
    let new_y = [
        right.columns(0, dl).into_owned(),
        right.columns(dl, dl).into_owned(),
    ];
    debug_assert_eq!(new_x[0].ncols(), k);
    Ok((new_x, new_y, discarded))
}

fn weighted_split(blocks: &[Mat; 4], m: usize, max_bond: usize) -> Result<(Mat, Mat, f64)> {
    let dl = blocks[0].nrows();
    // Doubled transfer of one updated pair and its (m−1)-fold power for the rest of the ring.
    let mut e = Mat::zeros(dl * dl, dl * dl);
    for b in blocks {
        e += b.kronecker(b);
    }
    let c = matrix_power_normalized(&e, m - 1);
    let svd = crate::tensor_core::checked_svd(&c)?;
    let u = svd.u.as_ref().unwrap().column(0).into_owned();
    let v = svd.v_t.as_ref().unwrap().row(0).transpose();
    // C ≈ σ u vᵀ with u on the right bond of the pair and v on its left bond.
    let mut rho_r = Mat::from_column_slice(dl, dl, u.as_slice());
    let mut rho_l = Mat::from_column_slice(dl, dl, v.as_slice());
    if rho_r.trace() < 0.0 {
        rho_r = -rho_r;
    }
    if rho_l.trace() < 0.0 {
        rho_l = -rho_l;
    }
    let (sl, sl_inv) = sqrt_and_pinv(&rho_l);
    let (sr, sr_inv) = sqrt_and_pinv(&rho_r);
    let mut weighted = Mat::zeros(2 * dl, 2 * dl);
    for la in 0..2 {
        for lb in 0..2 {
            let w = &sl * &blocks[la + 2 * lb] * &sr;
            weighted
                .view_mut((la * dl, lb * dl), (dl, dl))
                .copy_from(&w);
        }
    }
    let (wl, wr, discarded) = split_truncate(&weighted, max_bond)?;
    let k = wl.ncols();
    let mut left = Mat::zeros(2 * dl, k);
    let mut right = Mat::zeros(k, 2 * dl);
    for la in 0..2 {
        let blk = &sl_inv * wl.rows(la * dl, dl);
        left.view_mut((la * dl, 0), (dl, k)).copy_from(&blk);
        let blk = wr.columns(la * dl, dl) * &sr_inv;
        right.view_mut((0, la * dl), (k, dl)).copy_from(&blk);
    }
    Ok((left, right, discarded))
}

impl Cell {
    pub fn product(m: usize) -> Self {
        let one = || [Mat::from_element(1, 1, 1.0), Mat::from_element(1, 1, 1.0)];
        Self {
            even: one(),
            odd: one(),
            m,
        }
    }

    /// Gate on every (even, odd) pair: bonds inside the unit cell.
    pub fn apply_inner(&mut self, op: &Matrix4<f64>, max_bond: usize) -> Result<f64> {
        let (x, y, d) = update_pair(&self.even, &self.odd, op, self.m, max_bond)?;
        self.even = x;
        self.odd = y;
        Ok(d)
    }

    /// Gate on every (odd, next even) pair: bonds between unit cells.
    pub fn apply_outer(&mut self, op: &Matrix4<f64>, max_bond: usize) -> Result<f64> {
        let (y, x, d) = update_pair(&self.odd, &self.even, op, self.m, max_bond)?;
        self.odd = y;
        self.even = x;
        Ok(d)
    }

    /// Value on the empty subset, `Tr((T⁰_even T⁰_odd)^m)`.
    pub fn empty_value(&self) -> f64 {
        let pair = &self.even[0] * &self.odd[0];
        let mut acc = Mat::identity(pair.nrows(), pair.ncols());
        for _ in 0..self.m {
            acc = &acc * &pair;
        }
        acc.trace()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.even.iter_mut().chain(self.odd.iter_mut()) {
            *t *= factor;
        }
    }
}
