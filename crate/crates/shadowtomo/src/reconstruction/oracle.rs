//! Exponential-cost references: exact `r` from a full EF table and the dense inverse channel.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex<f64>>;

/// Largest ring handled by [`brute_force_r`].
pub const BRUTE_FORCE_MAX_N: usize = 14;

/// Replace non-positive EF components (truncation artifacts) by `1e-12`; returns how
/// many were clamped.
pub fn clamp_ef_table(table: &mut [f64]) -> usize {
    let mut count = 0;
    for w in table.iter_mut() {
        if *w <= 0.0 {
            *w = 1e-12;
            count += 1;
        }
    }
    if count > 0 {
        log::warn!("clamped {count} non-positive EF components to 1e-12");
    }
    count
}

/// Exact reconstruction coefficients from all `2ⁿ` EF components:
/// `r_A = 2⁻ⁿ (−1)^{|A|} Σ_{C⊇A} 3^{|C|} / D_C` with `D_C = Σ_{B⊆C} (−2)^{|B|} W_B`.
///
/// `D_C / (−3)^{|C|}` is the probability that a Pauli supported on `C` is measured;
/// a non-positive value means the ensemble cannot reconstruct that operator.
pub fn brute_force_r(ef_table: &[f64], n: usize) -> Result<Vec<f64>> {
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::Invalid(format!(
            "brute-force reconstruction limited to n ≤ {BRUTE_FORCE_MAX_N}"
        )));
    }
    let size = 1usize << n;
    if ef_table.len() != size {
        return Err(Error::Length {
            expected: size,
            got: ef_table.len(),
        });
    }
    let mut table = ef_table.to_vec();
    clamp_ef_table(&mut table);
    let sign = |mask: usize| {
        if mask.count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    };
    // Subset sums of (−2)^{|B|} W_B.
    let mut d: Vec<f64> = (0..size)
        .map(|b| table[b] * (-2f64).powi(b.count_ones() as i32))
        .collect();
    for i in 0..n {
        for mask in 0..size {
            if mask >> i & 1 == 1 {
                d[mask] += d[mask ^ (1 << i)];
            }
        }
    }
    let mut g = vec![0.0; size];
    for c in 0..size {
        let k = c.count_ones() as i32;
        let prob = d[c] / (-3f64).powi(k);
        if !(prob > 0.0) {
            return Err(Error::IncompleteEnsemble {
                subset: c as u64,
                value: prob,
            });
        }
        g[c] = 3f64.powi(k) / d[c];
    }
    // Superset sums.
    for i in 0..n {
        for mask in 0..size {
            if mask >> i & 1 == 0 {
                g[mask] += g[mask | (1 << i)];
            }
        }
    }
    let scale = 0.5f64.powi(n as i32);
    Ok((0..size).map(|a| scale * sign(a) * g[a]).collect())
}

/// `Tr_q(σ) ⊗ 𝟙_q` on qubit `q` (bit `q` of the basis index).
fn trace_and_replace(sigma: &CMat, q: usize) -> CMat {
    let dim = sigma.nrows();
    let bit = 1usize << q;
    let mut out = CMat::zeros(dim, dim);
    for x in 0..dim {
        if x & bit != 0 {
            continue;
        }
        for y in 0..dim {
            if y & bit != 0 {
                continue;
            }
            let v = sigma[(x, y)] + sigma[(x | bit, y | bit)];
            out[(x, y)] = v;
            out[(x | bit, y | bit)] = v;
        }
    }
    out
}

/// Dense `M⁻¹(σ) = 2ⁿ Σ_A r_A 2^{|A|−n} Tr_Ā(σ) ⊗ 𝟙_Ā` for `n ≤ 8`, with `r` given
/// as a full table indexed by bitmask (qubit `i` ↔ bit `i` of both the subset
/// mask and the computational-basis index).
pub fn apply_inverse_channel_dense(r_table: &[f64], sigma: &CMat) -> Result<CMat> {
    let dim = sigma.nrows();
    if sigma.ncols() != dim || !dim.is_power_of_two() {
        return Err(Error::Dimension(format!(
            "σ is {}×{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > 8 {
        return Err(Error::Invalid(
            "dense inverse channel limited to n ≤ 8".into(),
        ));
    }
    if r_table.len() != dim {
        return Err(Error::Length {
            expected: dim,
            got: r_table.len(),
        });
    }
    let mut out = CMat::zeros(dim, dim);
    // Depth-first over qubits: each branch either keeps qubit q in A or traces it out.
    fn walk(q: usize, n: usize, mask: usize, cur: &CMat, r: &[f64], out: &mut CMat) {
        if q == n {
            let coef = r[mask] * 2f64.powi(mask.count_ones() as i32);
            if coef != 0.0 {
                *out += cur * Complex::new(coef, 0.0);
            }
            return;
        }
        walk(q + 1, n, mask | (1 << q), cur, r, out);
        let traced = trace_and_replace(cur, q);
        walk(q + 1, n, mask, &traced, r, out);
    }
    walk(0, n, 0, sigma, r_table, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ef_dynamics::dense_snapshot_ef;

    #[test]
    fn product_ef_gives_pauli_form() {
        let r = brute_force_r(&[1.0; 4], 2).unwrap();
        assert_eq!(r.len(), 4);
        let want = [1.0, -1.5, -1.5, 2.25];
        for (a, b) in r.iter().zip(want) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn page_ef_gives_global_form() {
        let n = 4;
        let w: Vec<f64> = (0..16u32)
            .map(|a| {
                let k = a.count_ones() as i32;
                (2f64.powi(k) + 2f64.powi(n - k)) / (2f64.powi(n) + 1.0)
            })
            .collect();
        let r = brute_force_r(&w, n as usize).unwrap();
        assert!((r[0] + 1.0).abs() < 1e-12);
        assert!((r[15] - (1.0 + 1.0 / 16.0)).abs() < 1e-12);
        for a in 1..15 {
            assert!(r[a].abs() < 1e-12, "r[{a}] = {}", r[a]);
        }
    }

    #[test]
    fn incomplete_ensemble_is_reported() {
        // Single-site purity below 1/2 makes a single-site Pauli unmeasurable.
        let w = vec![1.0, 0.4, 0.4, 1.0];
        assert!(matches!(
            brute_force_r(&w, 2),
            Err(Error::IncompleteEnsemble { .. })
        ));
    }

    #[test]
    fn identity_is_fixed() {
        let n = 3;
        let r = brute_force_r(&dense_snapshot_ef(n, 2).unwrap(), n).unwrap();
        let id = CMat::identity(8, 8) / Complex::new(8.0, 0.0);
        let out = apply_inverse_channel_dense(&r, &id).unwrap();
        assert!((out - id).norm() < 1e-12);
    }
}
