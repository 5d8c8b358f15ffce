//! Consistency loss of reconstruction coefficients against an EF, with its analytic gradient.

use crate::error::{Error, Result};
use crate::tensor_core::{Mat, SiteTensor, SubsetMps};

/// Per-site fusion tensor `f[a][b][c]` coupling the reconstruction label `a`, the
/// target label `b` and the EF label `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FusionTensor(pub [[[f64; 2]; 2]; 2]);

impl FusionTensor {
    pub fn qubit() -> Self {
        let mut f = [[[0.0; 2]; 2]; 2];
        f[0][0][0] = 2.0;
        f[1][0][0] = 8.0 / 3.0;
        f[1][0][1] = -4.0 / 3.0;
        f[1][1][0] = -2.0 / 3.0;
        f[1][1][1] = 4.0 / 3.0;
        Self(f)
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.0[a][b][c]
    }
}

/// Free parameters of a reconstruction MPS: unit-cell tensors and twisted boundary.
#[derive(Clone, Debug)]
pub(crate) struct Params {
    pub cell: Vec<SiteTensor>,
    pub boundary: Mat,
}

impl Params {
    pub fn from_mps(m: &SubsetMps) -> Self {
        Self {
            cell: m.cell().to_vec(),
            boundary: m.boundary().clone(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Mat| Mat::zeros(m.nrows(), m.ncols());
        Self {
            cell: self.cell.iter().map(|t| [z(&t[0]), z(&t[1])]).collect(),
            boundary: z(&self.boundary),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Mat> {
        self.cell
            .iter()
            .flat_map(|t| t.iter())
            .chain(std::iter::once(&self.boundary))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Mat> {
        self.cell
            .iter_mut()
            .flat_map(|t| t.iter_mut())
            .chain(std::iter::once(&mut self.boundary))
    }

    pub fn to_mps(&self, n: usize) -> Result<SubsetMps> {
        SubsetMps::new(n, self.cell.clone(), self.boundary.clone())
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `Tr(K · A^reps)` with derivatives with respect to `K` and `A`.
fn ring_power(k: &Mat, a: &Mat, reps: usize, grad: bool) -> (f64, Option<(Mat, Mat)>) {
    let d = a.nrows();
    let mut powers = Vec::with_capacity(reps + 1);
    powers.push(Mat::identity(d, d));
    for t in 0..reps {
        powers.push(&powers[t] * a);
    }
    let value = (k * &powers[reps]).trace();
    if !grad {
        return (value, None);
    }
    // Σ_{j=0}^{reps−1} A^j K A^{reps−1−j}, built by Q_t = K A^t + A Q_{t−1}.
    let mut q = k.clone();
    for t in 1..reps {
        q = k * &powers[t] + a * &q;
    }
    (value, Some((powers[reps].transpose(), q.transpose())))
}

/// Gradients of `Π_j blocks[j]` with respect to every factor, given `d(product)`.
fn product_grads(blocks: &[Mat], d_prod: &Mat) -> Vec<Mat> {
    let p = blocks.len();
    if p == 1 {
        return vec![d_prod.clone()];
    }
    let mut prefix = Vec::with_capacity(p);
    prefix.push(Mat::identity(blocks[0].nrows(), blocks[0].nrows()));
    for j in 1..p {
        prefix.push(&prefix[j - 1] * &blocks[j - 1]);
    }
    let mut out = vec![Mat::zeros(0, 0); p];
    let mut suffix = Mat::identity(blocks[p - 1].ncols(), blocks[p - 1].ncols());
    for j in (0..p).rev() {
        out[j] = prefix[j].transpose() * d_prod * suffix.transpose();
        suffix = &blocks[j] * &suffix;
    }
    out
}

/// Gradient of `kron(M, M)` with respect to `M`.
fn kron_square_grad(g: &Mat, m: &Mat) -> Mat {
    let (r, c) = m.shape();
    Mat::from_fn(r, c, |i, j| {
        let mut s = 0.0;
        for ip in 0..r {
            for jp in 0..c {
                let w = m[(ip, jp)];
                if w != 0.0 {
                    s += (g[(i * r + ip, j * c + jp)] + g[(ip * r + i, jp * c + j)]) * w;
                }
            }
        }
        s
    })
}

/// Gradient of `kron(R, W)` with respect to `R` (W fixed).
fn kron_left_grad(g: &Mat, r_shape: (usize, usize), w: &Mat) -> Mat {
    let (wr, wc) = w.shape();
    Mat::from_fn(r_shape.0, r_shape.1, |i, j| {
        let mut s = 0.0;
        for k in 0..wr {
            for l in 0..wc {
                s += g[(i * wr + k, j * wc + l)] * w[(k, l)];
            }
        }
        s
    })
}

/// Loss `Σ_B (X_B − δ_{B,Ω})²` with `X_B = Σ_{A,C} r_A f_{A,B,C} W_C`, expanded as
/// `Σ_B X_B² − 2 X_Ω + 1` and contracted as rings of fused site tensors.
pub(crate) fn loss_and_grad(
    params: &Params,
    ef: &SubsetMps,
    grad: bool,
) -> Result<(f64, Option<Params>)> {
    let n = ef.n_sites();
    let f = FusionTensor::qubit();
    let rc = params.cell.len();
    if !n.is_multiple_of(rc) {
        return Err(Error::Dimension(format!(
            "reconstruction cell {rc} does not tile {n} sites"
        )));
    }
    let ec = ef.unit_cell();
    let lcm = rc / gcd(rc, ec) * ec;
    let period = if n.is_multiple_of(lcm) { lcm } else { n };
    let reps = n / period;

    // Fused tensors M_j^b = Σ_{a,c} f[a,b,c] R^a ⊗ W^c and doubled transfers E_j.
    let mut fused: Vec<[Mat; 2]> = Vec::with_capacity(period);
    for j in 0..period {
        let r = &params.cell[j % rc];
        let w = ef.site(j);
        let m: [Mat; 2] = std::array::from_fn(|b| {
            let mut acc = Mat::zeros(r[0].nrows() * w[0].nrows(), r[0].ncols() * w[0].ncols());
            for a in 0..2 {
                for c in 0..2 {
                    let coef = f.get(a, b, c);
                    if coef != 0.0 {
                        acc += r[a].kronecker(&w[c]) * coef;
                    }
                }
            }
            acc
        });
        fused.push(m);
    }
    let doubled: Vec<Mat> = fused
        .iter()
        .map(|m| m[0].kronecker(&m[0]) + m[1].kronecker(&m[1]))
        .collect();
    let bm = params.boundary.kronecker(ef.boundary());
    let k = bm.kronecker(&bm);

    let chain = |blocks: &[Mat]| blocks[1..].iter().fold(blocks[0].clone(), |acc, b| acc * b);
    let lam2 = chain(&doubled);
    let ones: Vec<Mat> = fused.iter().map(|m| m[1].clone()).collect();
    let lam1 = chain(&ones);
    let (s2, g2) = ring_power(&k, &lam2, reps, grad);
    let (x, g1) = ring_power(&bm, &lam1, reps, grad);
    let loss = s2 - 2.0 * x + 1.0;
    if !loss.is_finite() {
        return Err(Error::NonFinite("consistency loss"));
    }
    if !grad {
        return Ok((loss, None));
    }
    let (dk, dlam2) = g2.expect("gradient requested");
    let (dbm_x, dlam1) = g1.expect("gradient requested");

    let d_doubled = product_grads(&doubled, &dlam2);
    let d_ones = product_grads(&ones, &dlam1);
    let mut out = params.zeros_like();
    for j in 0..period {
        let r = &params.cell[j % rc];
        let w = ef.site(j);
        let mut dm: [Mat; 2] =
            std::array::from_fn(|b| kron_square_grad(&d_doubled[j], &fused[j][b]));
        dm[1] -= &d_ones[j] * 2.0;
        let slot = &mut out.cell[j % rc];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let coef = f.get(a, b, c);
                    if coef != 0.0 {
                        slot[a] += kron_left_grad(&dm[b], r[a].shape(), &w[c]) * coef;
                    }
                }
            }
        }
    }
    let dbm = kron_square_grad(&dk, &bm) - dbm_x * 2.0;
    out.boundary = kron_left_grad(&dbm, params.boundary.shape(), ef.boundary());
    Ok((loss, Some(out)))
}
