use nalgebra::{DMatrix, Matrix4, SVD};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

/// Site tensor of a subset MPS: `[T⁰, T¹]`, selected by whether the site is in the subset.
pub type SiteTensor = [Mat; 2];

/// Function on subsets of a ring of `n` sites, `A ↦ Tr(B · Π_i T_i^{[i∈A]})`.
///
/// Site tensors are stored per unit cell: site `i` uses `cell[i % cell.len()]`.
/// A cell of length `n` is the fully site-dependent case.
#[derive(Clone, Debug)]
pub struct SubsetMps {
    n: usize,
    cell: Vec<SiteTensor>,
    boundary: Mat,
}

/// Membership vector of length `n` from a bitmask (bit `i` = site `i`).
pub fn subset_from_mask(n: usize, mask: u64) -> Vec<bool> {
    (0..n).map(|i| i < 64 && (mask >> i) & 1 == 1).collect()
}

pub fn subset_from_sites(n: usize, sites: &[usize]) -> Vec<bool> {
    let mut a = vec![false; n];
    for &s in sites {
        a[s % n] = true;
    }
    a
}

fn check_finite(m: &Mat, what: &'static str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

impl SubsetMps {
    pub fn new(n: usize, cell: Vec<SiteTensor>, boundary: Mat) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("subset MPS needs at least one site".into()));
        }
        if cell.is_empty() || !n.is_multiple_of(cell.len()) {
            return Err(Error::Dimension(format!(
                "unit cell of {} tensors does not tile {n} sites",
                cell.len()
            )));
        }
        for (k, t) in cell.iter().enumerate() {
            if t[0].shape() != t[1].shape() {
                return Err(Error::Dimension(format!(
                    "site {k}: T0 and T1 shapes differ"
                )));
            }
            let next = &cell[(k + 1) % cell.len()];
            if t[0].ncols() != next[0].nrows() {
                return Err(Error::Dimension(format!(
                    "bond after site {k}: {} vs {}",
                    t[0].ncols(),
                    next[0].nrows()
                )));
            }
            check_finite(&t[0], "SubsetMps site tensor")?;
            check_finite(&t[1], "SubsetMps site tensor")?;
        }
        let d0 = cell[0][0].nrows();
        if boundary.shape() != (d0, d0) {
            return Err(Error::Dimension(format!(
                "boundary is {:?}, ring bond is {d0}",
                boundary.shape()
            )));
        }
        check_finite(&boundary, "SubsetMps boundary")?;
        Ok(Self { n, cell, boundary })
    }

    /// Bond-1 product function `Π_i (t0 or t1)`.
    pub fn product(n: usize, t0: f64, t1: f64) -> Self {
        let s = [Mat::from_element(1, 1, t0), Mat::from_element(1, 1, t1)];
        Self {
            n,
            cell: vec![s],
            boundary: Mat::identity(1, 1),
        }
    }

    /// Bond-1 product with site-dependent scalars.
    pub fn product_sites(values: &[[f64; 2]]) -> Result<Self> {
        let cell = values
            .iter()
            .map(|v| [Mat::from_element(1, 1, v[0]), Mat::from_element(1, 1, v[1])])
            .collect();
        Self::new(values.len(), cell, Mat::identity(1, 1))
    }

    /// Open-chain MPS of a full table indexed by bitmask (bit `i` ↔ site `i`), built by
    /// successive SVDs; the ring closes with a bond of 1.
    pub fn from_dense(n: usize, table: &[f64]) -> Result<Self> {
        if n == 0 || n >= usize::BITS as usize {
            return Err(Error::Invalid(format!("cannot tabulate {n} sites")));
        }
        if table.len() != 1 << n {
            return Err(Error::Length {
                expected: 1 << n,
                got: table.len(),
            });
        }
        let mut cur = Mat::from_row_slice(1, table.len(), table);
        let mut sites = Vec::with_capacity(n);
        for i in 0..n {
            let (dl, rest) = cur.shape();
            let half = rest / 2;
            // Row `l·2 + a` holds the entries whose site-i bit is `a`.
            let m = Mat::from_fn(dl * 2, half, |r, c| cur[(r / 2, 2 * c + r % 2)]);
            let (left, right) = if i + 1 == n {
                (m, Mat::identity(1, 1))
            } else {
                let (l, r, _) = split_truncate(&m, usize::MAX)?;
                (l, r)
            };
            let k = left.ncols();
            let t: SiteTensor =
                std::array::from_fn(|a| Mat::from_fn(dl, k, |l, c| left[(l * 2 + a, c)]));
            sites.push(t);
            cur = right;
        }
        Self::new(n, sites, Mat::identity(1, 1))
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn unit_cell(&self) -> usize {
        self.cell.len()
    }

    pub fn cell(&self) -> &[SiteTensor] {
        &self.cell
    }

    pub fn site(&self, i: usize) -> &SiteTensor {
        &self.cell[i % self.cell.len()]
    }

    pub fn boundary(&self) -> &Mat {
        &self.boundary
    }

    /// Left bond dimension of every site.
    pub fn bond_dims(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.site(i)[0].nrows()).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.cell
            .iter()
            .map(|t| t[0].nrows().max(t[0].ncols()))
            .max()
            .unwrap_or(1)
    }

    pub fn evaluate(&self, subset: &[bool]) -> Result<f64> {
        if subset.len() != self.n {
            return Err(Error::Length {
                expected: self.n,
                got: subset.len(),
            });
        }
        let mut acc = self.boundary.clone();
        for (i, &inside) in subset.iter().enumerate() {
            acc = &acc * &self.site(i)[inside as usize];
        }
        Ok(acc.trace())
    }

    pub fn evaluate_mask(&self, mask: u64) -> Result<f64> {
        self.evaluate(&subset_from_mask(self.n, mask))
    }

    /// All `2ⁿ` values indexed by bitmask. Intended for `n ≤ 20`.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.n > 24 {
            return Err(Error::Invalid(format!(
                "dense table for n = {} is too large",
                self.n
            )));
        }
        (0..1u64 << self.n).map(|m| self.evaluate_mask(m)).collect()
    }

    /// Multiply the whole function by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.boundary *= alpha;
        out
    }

    /// Same function with one tensor per site (unit cell = n).
    pub fn expanded(&self) -> Self {
        let cell = (0..self.n).map(|i| self.site(i).clone()).collect();
        Self {
            n: self.n,
            cell,
            boundary: self.boundary.clone(),
        }
    }

    /// Same function on `n_sites` sites by repeating the unit cell.
    pub fn with_sites(&self, n_sites: usize) -> Result<Self> {
        if self.cell.len() == self.n && self.n != n_sites && self.cell.len() > 2 {
            return Err(Error::Invalid(
                "site-dependent MPS cannot be resized".into(),
            ));
        }
        Self::new(n_sites, self.cell.clone(), self.boundary.clone())
    }

    /// Collapse to site-dependent form with the boundary absorbed into site 0.
    fn open_form(&self) -> Vec<SiteTensor> {
        let mut sites: Vec<SiteTensor> = (0..self.n).map(|i| self.site(i).clone()).collect();
        sites[0] = [&self.boundary * &sites[0][0], &self.boundary * &sites[0][1]];
        sites
    }

    /// Multiply the function by a 4×4 operator on the labels of sites `(site, site+1 mod n)`
    /// and recompress the shared bond to at most `max_bond` by local SVD truncation.
    ///
    /// The operator basis is ordered `(∅, {left}, {right}, {both})`. Returns the
    /// new MPS (site-dependent form) and the discarded fraction of squared singular weight.
    pub fn apply_two_site(
        &self,
        op: &Matrix4<f64>,
        site: usize,
        max_bond: usize,
    ) -> Result<(SubsetMps, f64)> {
        if self.n < 2 {
            return Err(Error::Invalid(
                "two-site operator on a single-site ring".into(),
            ));
        }
        if max_bond == 0 {
            return Err(Error::Invalid("max_bond must be positive".into()));
        }
        let i = site % self.n;
        let j = (i + 1) % self.n;
        // Rotate so that the pair never straddles the boundary matrix.
        let mut sites = self.open_form();
        let rot = if j == 0 { i } else { 0 };
        sites.rotate_left(rot);
        let (a, b) = ((i + self.n - rot) % self.n, (j + self.n - rot) % self.n);
        debug_assert_eq!(b, a + 1);

        let dl = sites[a][0].nrows();
        let dr = sites[b][0].ncols();
        let theta: [Mat; 4] = std::array::from_fn(|k| &sites[a][k & 1] * &sites[b][k >> 1]);
        let mut updated: [Mat; 4] = std::array::from_fn(|_| Mat::zeros(dl, dr));
        for out in 0..4 {
            for inp in 0..4 {
                let c = op[(out, inp)];
                if c != 0.0 {
                    updated[out] += &theta[inp] * c;
                }
            }
        }
        // Rows (la, left bond), columns (lb, right bond).
        let mut big = Mat::zeros(2 * dl, 2 * dr);
        for la in 0..2 {
            for lb in 0..2 {
                big.view_mut((la * dl, lb * dr), (dl, dr))
                    .copy_from(&updated[la + 2 * lb]);
            }
        }
        let (left, right, discarded) = split_truncate(&big, max_bond)?;
        let k = left.ncols();
        sites[a] = [
            left.rows(0, dl).into_owned(),
            left.rows(dl, dl).into_owned(),
        ];
        sites[b] = [
            right.columns(0, dr).into_owned(),
            right.columns(dr, dr).into_owned(),
        ];
        debug_assert_eq!(sites[a][0].ncols(), k);
        sites.rotate_right(rot);
        let d0 = sites[0][0].nrows();
        let out = SubsetMps::new(self.n, sites, Mat::identity(d0, d0))?;
        Ok((out, discarded))
    }
}

/// Convergence thresholds tried by [`checked_svd`]. nalgebra's iteration can
/// misconverge on exactly rank-deficient inputs, more often at tight thresholds.
const SVD_THRESHOLDS: [f64; 5] = [5.0 * f64::EPSILON, 1e-14, 1e-13, 1e-12, 1e-11];

/// Relative recomposition error accepted without trying further thresholds.
const SVD_GOOD: f64 = 1e-12;

/// Relative recomposition error beyond which the SVD is reported as failed.
const SVD_WORST: f64 = 1e-8;

type Svd = SVD<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// Thin SVD whose recomposition is verified against `m`. Looser convergence
/// thresholds and the transposed problem are tried until one reproduces `m`; the
/// most accurate attempt is kept.
pub fn checked_svd(m: &Mat) -> Result<Svd> {
    let norm = m.norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite("SVD input"));
    }
    let scale = if norm > 0.0 { norm } else { 1.0 };
    let unit = m / scale;
    let mut best: Option<(f64, Svd)> = None;
    for transpose in [false, true] {
        for eps in SVD_THRESHOLDS {
            let input = if transpose {
                unit.transpose()
            } else {
                unit.clone()
            };
            let Some(svd) = SVD::try_new(input, true, true, eps, 0) else {
                continue;
            };
            let svd = if transpose {
                Svd {
                    u: svd.v_t.map(|v| v.transpose()),
                    v_t: svd.u.map(|u| u.transpose()),
                    singular_values: svd.singular_values,
                }
            } else {
                svd
            };
            let back = svd.u.as_ref().unwrap()
                * Mat::from_diagonal(&svd.singular_values)
                * svd.v_t.as_ref().unwrap();
            let err = (back - &unit).norm();
            if best.as_ref().is_none_or(|(e, _)| err < *e) {
                best = Some((err, svd));
            }
            if err <= SVD_GOOD {
                break;
            }
        }
        if best.as_ref().is_some_and(|(e, _)| *e <= SVD_GOOD) {
            break;
        }
    }
    match best {
        Some((err, mut svd)) if err <= SVD_WORST => {
            svd.singular_values *= scale;
            Ok(svd)
        }
        _ => Err(Error::NonFinite("SVD did not converge")),
    }
}

/// SVD split `m ≈ L · R` keeping at most `max_bond` singular values (and dropping
/// numerically zero ones). Singular values are shared as `√s` on both factors.
pub fn split_truncate(m: &Mat, max_bond: usize) -> Result<(Mat, Mat, f64)> {
    let svd = checked_svd(m)?;
    let s = &svd.singular_values;
    let total: f64 = s.iter().map(|x| x * x).sum();
    let smax = s.iter().copied().fold(0.0, f64::max);
    let mut keep = s
        .iter()
        .take_while(|&&x| x > 1e-14 * smax)
        .count()
        .min(max_bond)
        .max(1);
    keep = keep.min(s.len());
    let kept: f64 = s.iter().take(keep).map(|x| x * x).sum();
    let discarded = if total > 0.0 {
        ((total - kept) / total).max(0.0)
    } else {
        0.0
    };
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut left = u.columns(0, keep).into_owned();
    let mut right = vt.rows(0, keep).into_owned();
    for k in 0..keep {
        let r = s[k].sqrt();
        left.column_mut(k).scale_mut(r);
        right.row_mut(k).scale_mut(r);
    }
    Ok((left, right, discarded))
}

/// Weighted overlap `Σ_A w(A)·a(A)·b(A)` with `w(A) = Π_i weights[i][A_i]`,
/// contracted as one ring of transfer matrices.
pub fn mps_overlap(a: &SubsetMps, b: &SubsetMps, weights: &[[f64; 2]]) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::Length {
            expected: a.n,
            got: b.n,
        });
    }
    if weights.len() != a.n {
        return Err(Error::Length {
            expected: a.n,
            got: weights.len(),
        });
    }
    let mut acc = a.boundary.kronecker(&b.boundary);
    for (i, w) in weights.iter().enumerate() {
        let (ta, tb) = (a.site(i), b.site(i));
        let e = ta[0].kronecker(&tb[0]) * w[0] + ta[1].kronecker(&tb[1]) * w[1];
        acc *= e;
    }
    let v = acc.trace();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite("mps_overlap"))
    }
}

/// Same weight on every site.
pub fn uniform_weights(n: usize, w: [f64; 2]) -> Vec<[f64; 2]> {
    vec![w; n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_mps(n: usize, d: usize, seed: u64) -> SubsetMps {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cell = (0..n)
            .map(|_| {
                [
                    Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)),
                    Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0)),
                ]
            })
            .collect();
        let b = Mat::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        SubsetMps::new(n, cell, b).unwrap()
    }

    #[test]
    fn dense_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=6 {
            let table: Vec<f64> = (0..1 << n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = SubsetMps::from_dense(n, &table).unwrap();
            for (a, b) in m.to_dense().unwrap().iter().zip(&table) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_tables() {
        let table = [-1.0, 1.5, 1.5, -2.25, 1.5, -2.25, -2.25, 3.375];
        let m = SubsetMps::from_dense(3, &table).unwrap();
        for (a, b) in m.to_dense().unwrap().iter().zip(&table) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let w = Mat::from_row_slice(2, 4, &[-1.0, 1.5, -2.25, 1.5, 1.5, -2.25, 3.375, -2.25]);
        let (l, r, _) = split_truncate(&w, usize::MAX).unwrap();
        assert!((l * r - w).norm() < 1e-12);
    }

    #[test]
    fn all_ones_product() {
        let m = SubsetMps::product(5, 1.0, 1.0);
        assert_eq!(m.evaluate(&subset_from_sites(5, &[1, 3])).unwrap(), 1.0);
    }

    #[test]
    fn evaluation_matches_explicit_loop() {
        let m = random_mps(7, 3, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mask: u64 = rng.random_range(0..128);
            let mut acc = m.boundary().clone();
            for i in 0..7 {
                let t = &m.site(i)[((mask >> i) & 1) as usize];
                let mut next = Mat::zeros(acc.nrows(), t.ncols());
                for r in 0..acc.nrows() {
                    for c in 0..t.ncols() {
                        for k in 0..t.nrows() {
                            next[(r, c)] += acc[(r, k)] * t[(k, c)];
                        }
                    }
                }
                acc = next;
            }
            let want: f64 = (0..acc.nrows()).map(|r| acc[(r, r)]).sum();
            assert!((m.evaluate_mask(mask).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_trivial_cases() {
        let ones = SubsetMps::product(3, 1.0, 1.0);
        let v = mps_overlap(&ones, &ones, &uniform_weights(3, [1.0, 1.0])).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
        let ones4 = SubsetMps::product(4, 1.0, 1.0);
        let v = mps_overlap(&ones4, &ones4, &uniform_weights(4, [1.0, 0.5])).unwrap();
        assert!((v - 1.5f64.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn overlap_matches_enumeration() {
        let a = random_mps(6, 2, 1);
        let b = random_mps(6, 3, 2);
        let w: Vec<[f64; 2]> = (0..6).map(|i| [1.0 + i as f64 * 0.1, 0.5]).collect();
        let mut want = 0.0;
        for mask in 0..64u64 {
            let wa: f64 = (0..6).map(|i| w[i][((mask >> i) & 1) as usize]).product();
            want += wa * a.evaluate_mask(mask).unwrap() * b.evaluate_mask(mask).unwrap();
        }
        let got = mps_overlap(&a, &b, &w).unwrap();
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0));
    }

    #[test]
    fn identity_operator_leaves_function_unchanged() {
        let m = random_mps(5, 2, 3);
        let before = m.to_dense().unwrap();
        for site in 0..5 {
            let (out, disc) = m.apply_two_site(&Matrix4::identity(), site, 64).unwrap();
            assert!(disc < 1e-12);
            let after = out.to_dense().unwrap();
            for (x, y) in before.iter().zip(&after) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_inconsistent_bonds() {
        let cell = vec![
            [Mat::zeros(2, 3), Mat::zeros(2, 3)],
            [Mat::zeros(2, 2), Mat::zeros(2, 2)],
        ];
        assert!(SubsetMps::new(2, cell, Mat::identity(2, 2)).is_err());
    }
}
