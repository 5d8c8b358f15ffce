mod common;

use common::{all_paulis, dense_pauli, dense_state, random_stabilizer, trace_product};
use shadowtomo::estimation::{
    estimate_observable, estimate_pauli, median_of_means, Aggregation, ObservableSpec,
};
use shadowtomo::reconstruction::brute_force_r_mps;
use shadowtomo::stabilizer_sim::{run_protocol, CircuitSpec};

#[test]
fn pauli_estimates_are_unbiased() {
    let n = 4;
    let state = random_stabilizer(n, 21);
    let rho = dense_state(&state);
    for depth in 0..=2 {
        let store = run_protocol(
            &state,
            &CircuitSpec::new(n, depth, 100 + depth as u64),
            200_000,
            "rand",
        )
        .unwrap();
        let r = brute_force_r_mps(n, depth).unwrap();
        for p in all_paulis(n).iter().skip(1) {
            let truth = trace_product(&dense_pauli(p), &rho);
            let e = estimate_pauli(&store, &r, p, Aggregation::Mean).unwrap();
            assert!(
                (e.estimate - truth).abs() <= 4.0 * e.stderr,
                "L={depth} {p}: {} vs {truth} (se {})",
                e.estimate,
                e.stderr
            );
        }
    }
}

#[test]
fn overlap_with_other_stabilizer_state() {
    let n = 4;
    let state = random_stabilizer(n, 31);
    let rho = dense_state(&state);
    let store = run_protocol(&state, &CircuitSpec::new(n, 2, 5), 50_000, "rand").unwrap();
    let r = brute_force_r_mps(n, 2).unwrap();
    for seed in [32, 33, 34] {
        let other = random_stabilizer(n, seed);
        let truth = trace_product(&rho, &dense_state(&other));
        let refs = [
            ObservableSpec::stabilizer(&other),
            ObservableSpec::Mps(
                shadowtomo::stabilizer_sim::stabilizer_to_pauli_mps(&other, None).unwrap(),
            ),
        ];
        for obs in refs {
            let e = estimate_observable(&store, &r, &obs, Aggregation::Mean, 12).unwrap();
            assert!(
                (e.estimate - truth).abs() <= 3.0 * e.stderr,
                "{} vs {truth} (se {})",
                e.estimate,
                e.stderr
            );
        }
    }
}

#[test]
fn self_fidelity_is_one_on_average() {
    let n = 6;
    let state = random_stabilizer(n, 41);
    let store = run_protocol(&state, &CircuitSpec::new(n, 1, 2), 40_000, "rand").unwrap();
    let r = brute_force_r_mps(n, 1).unwrap();
    let e = estimate_observable(
        &store,
        &r,
        &ObservableSpec::stabilizer(&state),
        Aggregation::Mean,
        12,
    )
    .unwrap();
    assert!((e.estimate - 1.0).abs() <= 3.0 * e.stderr, "{e:?}");
}

#[test]
fn median_of_means_resists_adversarial_shots() {
    let n = 6;
    let state = random_stabilizer(n, 51);
    let store = run_protocol(&state, &CircuitSpec::new(n, 1, 3), 24_000, "rand").unwrap();
    let r = brute_force_r_mps(n, 1).unwrap();
    let values = shadowtomo::estimation::observable_values(
        &store,
        &r,
        &ObservableSpec::stabilizer(&state),
        12,
    )
    .unwrap();
    let clean = median_of_means(&values, 12).unwrap();
    let size = values.len().div_ceil(12);
    let means: Vec<f64> = values
        .chunks(size)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let spread = means.iter().cloned().fold(f64::MIN, f64::max)
        - means.iter().cloned().fold(f64::MAX, f64::min);
    // 5% corrupted shots, concentrated in the first groups.
    let mut dirty = values.clone();
    for v in dirty.iter_mut().take(values.len() / 20) {
        *v = 1e4;
    }
    let robust = median_of_means(&dirty, 12).unwrap();
    assert!(
        (robust - clean).abs() < spread,
        "moved {} vs spread {spread}",
        (robust - clean).abs()
    );
    let mean: f64 = dirty.iter().sum::<f64>() / dirty.len() as f64;
    assert!((mean - clean).abs() > 100.0);
}

#[test]
fn oracle_matches_tableau() {
    let state = random_stabilizer(4, 21);
    let rho = dense_state(&state);
    for p in all_paulis(4) {
        let t = trace_product(&dense_pauli(&p), &rho);
        assert!(
            (t - state.pauli_expectation(&p) as f64).abs() < 1e-9,
            "{p} {t} {}",
            state.pauli_expectation(&p)
        );
    }
}
