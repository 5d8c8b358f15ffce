mod common;

use common::{dense_pauli, CMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shadowtomo::ef_dynamics::{dense_snapshot_ef, evolve_snapshot_ef};
use shadowtomo::reconstruction::{
    brute_force_r_mps, closed_form_r_clifford, closed_form_r_depth_one, closed_form_r_pauli,
};
use shadowtomo::shadow_norm::{
    contiguous_support, pauli_measurement_probability, pauli_shadow_norm_from_ef,
    shadow_norm_general, OperatorEf,
};
use shadowtomo::stabilizer_sim::{
    draw_circuit, layer_pairs, sample_clifford_2q, sample_rng, CircuitSpec, Gate, PauliString,
    StabilizerState,
};

/// Exact support distribution of a Pauli pushed through the brick wall: a random
/// two-qubit Clifford maps any non-identity pair to each of the 15 non-identity
/// pairs with equal probability. Returns the probability of ending diagonal.
fn markov_probability(n: usize, depth: usize, support: usize) -> f64 {
    let mut dist = vec![0.0; 1 << n];
    dist[support] = 1.0;
    for layer in 1..=depth {
        for (a, b) in layer_pairs(n, layer) {
            let mut next = vec![0.0; dist.len()];
            for (mask, &p) in dist.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let pair = (1 << a) | (1 << b);
                if mask & pair == 0 {
                    next[mask] += p;
                } else {
                    let rest = mask & !pair;
                    next[rest | pair] += p * 9.0 / 15.0;
                    next[rest | (1 << a)] += p * 3.0 / 15.0;
                    next[rest | (1 << b)] += p * 3.0 / 15.0;
                }
            }
            dist = next;
        }
    }
    dist.iter()
        .enumerate()
        .map(|(m, p)| p * 3f64.powi(-(m.count_ones() as i32)))
        .sum()
}

fn mask_to_support(n: usize, mask: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

#[test]
fn measurement_probability_matches_markov_chain() {
    for n in [4, 5, 6, 7] {
        for depth in 0..=4 {
            let ef = evolve_snapshot_ef(&CircuitSpec::new(n, depth, 0), None).unwrap();
            for mask in 1..1usize << n {
                let got = pauli_measurement_probability(&ef, &mask_to_support(n, mask)).unwrap();
                let want = markov_probability(n, depth, mask);
                assert!(
                    (got - want).abs() < 1e-10,
                    "n={n} L={depth} mask={mask:b}: {got} vs {want}"
                );
            }
        }
    }
}

fn conjugate(g: &Gate, p: &PauliString) -> PauliString {
    match g {
        Gate::One(c) => c.conjugate(p),
        Gate::Two(c) => c.conjugate(p),
    }
}

#[test]
fn measurement_probability_matches_sampled_circuits() {
    let (n, depth, shots) = (6, 2, 20_000);
    let spec = CircuitSpec::new(n, depth, 13);
    let p: PauliString = "ZXYIII".parse().unwrap();
    let hits = (0..shots)
        .filter(|&i| {
            let gates = draw_circuit(&spec, &mut sample_rng(13, i));
            gates
                .iter()
                .fold(p.clone(), |q, g| conjugate(g, &q))
                .is_diagonal()
        })
        .count();
    let freq = hits as f64 / shots as f64;
    let ef = evolve_snapshot_ef(&spec, None).unwrap();
    let want = pauli_measurement_probability(&ef, &p.support_mask()).unwrap();
    let se = (want * (1.0 - want) / shots as f64).sqrt();
    assert!((freq - want).abs() < 4.0 * se, "{freq} vs {want}");
}

#[test]
fn two_qubit_clifford_purity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shots = 100_000;
    let mean = (0..shots)
        .map(|_| {
            let mut s = StabilizerState::zero_state(2);
            s.apply_gate(&sample_clifford_2q(&mut rng, (0, 1)));
            s.subsystem_purity(&[true, false])
        })
        .sum::<f64>()
        / shots as f64;
    assert!((mean - 0.8).abs() < 0.003, "{mean}");
}

#[test]
fn closed_form_norms() {
    let n = 24;
    let ef0 = evolve_snapshot_ef(&CircuitSpec::new(n, 0, 0), None).unwrap();
    let ef1 = evolve_snapshot_ef(&CircuitSpec::new(n, 1, 0), None).unwrap();
    let (r0, r1) = (closed_form_r_pauli(n), closed_form_r_depth_one(n).unwrap());
    for k in 1..=10 {
        let s = contiguous_support(n, 0, k);
        let want0 = 3f64.powi(k as i32);
        let want1 = 5f64.powi(k.div_ceil(2) as i32);
        let w = OperatorEf::pauli(&s).unwrap();
        for (got, want) in [
            (pauli_shadow_norm_from_ef(&ef0, &s).unwrap(), want0),
            (shadow_norm_general(&r0, &w).unwrap(), want0),
            (pauli_shadow_norm_from_ef(&ef1, &s).unwrap(), want1),
            (shadow_norm_general(&r1, &w).unwrap(), want1),
        ] {
            assert!((got / want - 1.0).abs() <= 1e-10, "k={k}: {got} vs {want}");
        }
    }
}

fn random_traceless_sum(n: usize, terms: usize, rng: &mut ChaCha8Rng) -> Vec<(f64, PauliString)> {
    let mut out: Vec<(f64, PauliString)> = Vec::new();
    while out.len() < terms {
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let p = PauliString::from_labels(&labels, false).unwrap();
        if !p.is_identity() && out.iter().all(|(_, q)| *q != p) {
            out.push((rng.random_range(-1.0..1.0), p));
        }
    }
    out
}

#[test]
fn global_clifford_norm_matches_dense_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 1..=8 {
        let terms = random_traceless_sum(n, 1 + n, &mut rng);
        let dim = 1usize << n;
        let o = terms.iter().fold(CMat::zeros(dim, dim), |acc, (a, p)| {
            acc + dense_pauli(p) * nalgebra::Complex::new(*a, 0.0)
        });
        let trace_sq = (&o * &o).trace().re;
        let want = (1.0 + 0.5f64.powi(n as i32)) * trace_sq;
        let got = shadow_norm_general(
            &closed_form_r_clifford(n),
            &OperatorEf::pauli_sum(&terms).unwrap(),
        )
        .unwrap();
        assert!(
            (got - want).abs() <= 1e-8 * want.max(1.0),
            "n={n}: {got} vs {want}"
        );
    }
}

#[test]
fn ef_path_matches_reconstruction_path() {
    let (n, depth) = (12, 3);
    let ef = evolve_snapshot_ef(&CircuitSpec::new(n, depth, 0), None).unwrap();
    let r = brute_force_r_mps(n, depth).unwrap();
    for (start, k) in [(0, 1), (0, 2), (1, 3), (3, 5), (0, 8), (5, 12)] {
        let s = contiguous_support(n, start, k);
        let a = pauli_shadow_norm_from_ef(&ef, &s).unwrap();
        let b = shadow_norm_general(&r, &OperatorEf::pauli(&s).unwrap()).unwrap();
        assert!((a / b - 1.0).abs() <= 1e-6, "k={k}: {a} vs {b}");
    }
}

#[test]
fn norms_are_size_independent() {
    let (a, b) = (
        evolve_snapshot_ef(&CircuitSpec::new(100, 3, 0), Some(16)).unwrap(),
        evolve_snapshot_ef(&CircuitSpec::new(200, 3, 0), Some(16)).unwrap(),
    );
    for k in [1, 4, 9] {
        let na = pauli_shadow_norm_from_ef(&a, &contiguous_support(100, 10, k)).unwrap();
        let nb = pauli_shadow_norm_from_ef(&b, &contiguous_support(200, 10, k)).unwrap();
        assert!((na / nb - 1.0).abs() <= 1e-8, "k={k}: {na} vs {nb}");
    }
}

#[test]
fn staggered_supports_differ_at_depth_one() {
    let n = 12;
    let ef = evolve_snapshot_ef(&CircuitSpec::new(n, 1, 0), None).unwrap();
    let aligned = pauli_shadow_norm_from_ef(&ef, &contiguous_support(n, 0, 2)).unwrap();
    let staggered = pauli_shadow_norm_from_ef(&ef, &contiguous_support(n, 1, 2)).unwrap();
    assert!((aligned - 5.0).abs() < 1e-10);
    assert!((staggered - 25.0).abs() < 1e-10);
}

#[test]
fn ef_complement_symmetry() {
    for n in [4, 6, 8, 10] {
        for depth in 1..=4 {
            let table = dense_snapshot_ef(n, depth).unwrap();
            let exact = evolve_snapshot_ef(&CircuitSpec::new(n, depth, 0), None).unwrap();
            let cut = evolve_snapshot_ef(&CircuitSpec::new(n, depth, 0), Some(2)).unwrap();
            let full = (1usize << n) - 1;
            for mask in 0..=full {
                let w = exact.component_mask(mask as u64).unwrap();
                assert!((w - table[mask]).abs() <= 1e-10);
                assert!((w - exact.component_mask((full ^ mask) as u64).unwrap()).abs() <= 1e-10);
                let c = cut.component_mask(mask as u64).unwrap()
                    - cut.component_mask((full ^ mask) as u64).unwrap();
                assert!(c.abs() <= 1e-3, "n={n} L={depth} mask={mask:b}: {c}");
            }
        }
    }
}
