//! Adaptive-moment minimization of the consistency loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{loss_and_grad, Params};
use super::{closed_form_r_depth_one, closed_form_r_pauli, ReconstructionMps, SolveStatus};
use crate::ef_dynamics::evolve_snapshot_ef;
use crate::ef_dynamics::EfState;
use crate::error::{Error, Result};
use crate::stabilizer_sim::CircuitSpec;
use crate::tensor_core::Mat;

/// Settings for [`solve_r`].
#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Bond dimension of the reconstruction MPS.
    pub bond: usize,
    /// Target loss; the result is `Solved` iff the best loss is at most this.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial step size, halved whenever progress stalls.
    pub learning_rate: f64,
    /// Iterations without a 0.1% improvement before halving the step.
    pub patience: usize,
    /// Amplitude of the random perturbation added to the initial tensors.
    pub jitter: f64,
    pub seed: u64,
    pub method: Method,
}

/// Optimizer used by [`solve_r`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Adaptive-moment gradient descent with step halving on plateaus.
    Adam,
    /// Limited-memory quasi-Newton with backtracking line search.
    Lbfgs,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            bond: 6,
            tol: 1e-3,
            max_iters: 20_000,
            learning_rate: 1e-2,
            patience: 300,
            jitter: 1e-2,
            seed: 0,
            method: Method::Lbfgs,
        }
    }
}

/// Embed `init` (any bond ≤ `bond`, unit cell 1 or 2) into a two-site cell of bond `bond`.
fn embed(
    init: &ReconstructionMps,
    bond: usize,
    jitter: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Params> {
    let src = init.mps();
    let d = src.max_bond();
    if d > bond {
        return Err(Error::Invalid(format!(
            "warm start has bond {d} > requested {bond}"
        )));
    }
    let mut pad = |m: &Mat| {
        let mut out = Mat::from_fn(bond, bond, |_, _| jitter * rng.random_range(-1.0..1.0));
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] += m[(i, j)];
            }
        }
        out
    };
    let cell = (0..2)
        .map(|j| [pad(&src.site(j)[0]), pad(&src.site(j)[1])])
        .collect();
    // Identity on the padded block keeps the embedded function unchanged up to jitter.
    let mut b = Mat::zeros(bond, bond);
    b.view_mut((0, 0), (d, d)).copy_from(src.boundary());
    let boundary = pad(&Mat::zeros(0, 0)) + b;
    Ok(Params { cell, boundary })
}

/// Minimize the consistency loss over a two-site reconstruction MPS of bond
/// `opts.bond`, starting from `init` (typically the previous depth's solution).
pub fn solve_r(
    ef: &EfState,
    init: &ReconstructionMps,
    depth: Option<usize>,
    opts: &SolveOptions,
) -> Result<ReconstructionMps> {
    let n = ef.n();
    if opts.bond == 0 {
        return Err(Error::Invalid(
            "reconstruction bond must be positive".into(),
        ));
    }
    if init.n() != n {
        return Err(Error::Mismatch(format!(
            "warm start has n={}, EF has n={n}",
            init.n()
        )));
    }
    if !n.is_multiple_of(2) && init.mps().unit_cell() == 2 {
        return Err(Error::Invalid(
            "two-site cell cannot tile an odd ring".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut params = embed(init, opts.bond, opts.jitter, &mut rng)?;
    if !n.is_multiple_of(2) {
        params.cell.truncate(1);
    }
    let (loss, params) = match opts.method {
        Method::Adam => adam(params, ef, opts)?,
        Method::Lbfgs => lbfgs(params, ef, opts)?,
    };
    let status = if loss <= opts.tol {
        SolveStatus::Solved
    } else {
        SolveStatus::Unconverged
    };
    ReconstructionMps::from_parts(params.to_mps(n)?, depth, Some(loss), status)
}

/// Coefficients for depths `0..=depth`, each solve warm-started from the previous depth.
/// Depth 0 and (on even rings) depth 1 use the exact closed forms.
pub fn solve_r_ladder(
    n: usize,
    depth: usize,
    ef_bond: Option<usize>,
    opts: &SolveOptions,
) -> Result<Vec<ReconstructionMps>> {
    let mut out = vec![closed_form_r_pauli(n)];
    for l in 1..=depth {
        let r = if l == 1 && n.is_multiple_of(2) {
            closed_form_r_depth_one(n)?
        } else {
            let ef = evolve_snapshot_ef(&CircuitSpec::new(n, l, 0), ef_bond)?;
            let r = solve_r(&ef, out.last().expect("depth 0 present"), Some(l), opts)?;
            if r.status() == SolveStatus::Unconverged {
                log::warn!(
                    "depth {l}: loss {:?} above tolerance {}",
                    r.loss(),
                    opts.tol
                );
            } else {
                log::info!("depth {l}: loss {:?}", r.loss());
            }
            r
        };
        out.push(r);
    }
    Ok(out)
}

fn adam(mut params: Params, ef: &EfState, opts: &SolveOptions) -> Result<(f64, Params)> {
    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-12);
    let mut m1 = params.zeros_like();
    let mut m2 = params.zeros_like();
    let mut lr = opts.learning_rate;
    let mut best = (f64::INFINITY, params.clone());
    let mut since_improved = 0usize;
    let mut stall_ref = f64::INFINITY;
    for t in 1..=opts.max_iters.max(1) {
        let (loss, grad) = loss_and_grad(&params, ef.mps(), true)?;
        if loss < best.0 {
            best = (loss, params.clone());
        }
        if best.0 <= opts.tol {
            break;
        }
        if best.0 < stall_ref * 0.999 {
            stall_ref = best.0;
            since_improved = 0;
        } else {
            since_improved += 1;
            if since_improved >= opts.patience {
                lr *= 0.5;
                since_improved = 0;
                stall_ref = best.0;
                if loss > 2.0 * best.0 {
                    params = best.1.clone();
                    m1 = params.zeros_like();
                    m2 = params.zeros_like();
                }
            }
        }
        let grad = grad.expect("gradient requested");
        let c1 = 1.0 - b1.powi(t as i32);
        let c2 = 1.0 - b2.powi(t as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad.iter())
            .zip(m1.iter_mut().zip(m2.iter_mut()))
        {
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
        }
    }
    Ok(best)
}

fn flatten(p: &Params) -> Vec<f64> {
    p.iter().flat_map(|m| m.iter().copied()).collect()
}

fn unflatten(template: &Params, x: &[f64]) -> Params {
    let mut out = template.clone();
    let mut k = 0;
    for m in out.iter_mut() {
        let len = m.len();
        m.as_mut_slice().copy_from_slice(&x[k..k + len]);
        k += len;
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn lbfgs(params: Params, ef: &EfState, opts: &SolveOptions) -> Result<(f64, Params)> {
    const HISTORY: usize = 20;
    let eval = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
        let (l, g) = loss_and_grad(&unflatten(&params, x), ef.mps(), true)?;
        Ok((l, flatten(&g.expect("gradient requested"))))
    };
    let mut x = flatten(&params);
    let (mut fx, mut gx) = eval(&x)?;
    let mut hist: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    let mut evals = 1usize;
    let mut failures = 0;
    while evals < opts.max_iters && fx > opts.tol {
        // Two-loop recursion for the search direction.
        let mut q = gx.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = match hist.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => opts.learning_rate / dot(&gx, &gx).sqrt().max(1e-300),
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&gx, &dir);
        if !(slope < 0.0) {
            hist.clear();
            dir = gx.iter().map(|g| -g * gamma.abs()).collect();
            slope = dot(&gx, &dir);
        }
        // Backtracking line search with the Armijo condition.
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            evals += 1;
            match eval(&xn) {
                Ok((fnew, gnew)) if fnew <= fx + 1e-4 * step * slope => {
                    accepted = Some((xn, fnew, gnew));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        match accepted {
            Some((xn, fnew, gnew)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gnew.iter().zip(&gx).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-300 {
                    if hist.len() == HISTORY {
                        hist.pop_front();
                    }
                    hist.push_back((s, y, 1.0 / sy));
                }
                let progress = fx - fnew;
                x = xn;
                fx = fnew;
                gx = gnew;
                failures = if progress <= 1e-15 * fx.abs() {
                    failures + 1
                } else {
                    0
                };
            }
            None => {
                failures += 1;
                hist.clear();
            }
        }
        if failures >= 5 {
            break;
        }
    }
    Ok((fx, unflatten(&params, &x)))
}
