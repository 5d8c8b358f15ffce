//! Experiment driver: state library, subcommand implementations and the
//! variance-scaling fit.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Vector2};

pub use config::{
    ExperimentConfig, ObservableChoice, RMethod, StateSpec, CONFIG_VERSION, SOLVE_EF_BOND,
};

use crate::ef_dynamics::evolve_snapshot_ef;
use crate::error::{Error, Result};
use crate::estimation::{estimate_observable, EstimateResult, ObservableSpec};
use crate::reconstruction::{
    brute_force_r_mps, read_r, solve_r_ladder, write_r, Method, ReconstructionMps, SolveOptions,
};
use crate::shadow_norm::{depth_scan, pauli_shadow_norm_from_ef, shadow_norm_general, OperatorEf};
use crate::stabilizer_sim::{
    read_snapshots, run_protocol, write_snapshots, CircuitSpec, PauliString, SnapshotStore,
    StabilizerState,
};

/// Exponent of `L + 1` in the fidelity-variance scaling form.
pub const SCALING_ALPHA: f64 = 0.72;

/// GHZ stabilizers `Z_i Z_{i+1}` for `i < n−1` and `X^{⊗n}`.
pub fn ghz_state(n: usize) -> Result<StabilizerState> {
    let mut gens = Vec::with_capacity(n);
    for i in 0..n.saturating_sub(1) {
        let mut p = PauliString::identity(n);
        p.set(i, 3);
        p.set(i + 1, 3);
        gens.push(p);
    }
    gens.push(PauliString::from_labels(&vec![1; n], false)?);
    StabilizerState::new(gens)
}

/// Cluster-state stabilizers `Z_{i−1} X_i Z_{i+1}` on a ring (`n ≥ 3`).
pub fn cluster_state(n: usize) -> Result<StabilizerState> {
    if n < 3 {
        return Err(Error::Invalid(format!("cluster ring needs n ≥ 3, got {n}")));
    }
    let gens = (0..n)
        .map(|i| {
            let mut p = PauliString::identity(n);
            p.set((i + n - 1) % n, 3);
            p.set(i, 1);
            p.set((i + 1) % n, 3);
            p
        })
        .collect();
    StabilizerState::new(gens)
}

/// Generators from text: signed Pauli strings separated by newlines or `;`, `#` comments.
pub fn parse_state_text(text: &str) -> Result<StabilizerState> {
    let joined: Vec<&str> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .collect();
    joined.join(";").parse()
}

pub fn build_state(spec: &StateSpec, n: usize) -> Result<StabilizerState> {
    let state = match spec {
        StateSpec::Ghz => ghz_state(n)?,
        StateSpec::Cluster => cluster_state(n)?,
        StateSpec::File(p) => parse_state_text(&std::fs::read_to_string(p)?)?,
    };
    if state.n() != n {
        return Err(Error::Mismatch(format!(
            "state file has {} qubits, config n={n}",
            state.n()
        )));
    }
    Ok(state)
}

fn state_label(spec: &StateSpec) -> String {
    match spec {
        StateSpec::Ghz => "ghz".into(),
        StateSpec::Cluster => "cluster".into(),
        StateSpec::File(p) => p
            .file_stem()
            .map(|s| s.to_string_lossy().replace(char::is_whitespace, "_"))
            .unwrap_or_else(|| "custom".into()),
    }
}

fn csv_writer(cfg: &ExperimentConfig, path: &Path, header: &str) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", cfg.provenance())?;
    writeln!(w, "{header}")?;
    Ok(w)
}

fn solve_options(cfg: &ExperimentConfig) -> SolveOptions {
    SolveOptions {
        bond: cfg.r_bond,
        tol: cfg.tol,
        max_iters: cfg.max_iters,
        seed: cfg.seed,
        method: Method::Lbfgs,
        ..Default::default()
    }
}

/// Reconstruction coefficients for every depth `0..=depth`.
pub fn reconstruction_ladder(
    cfg: &ExperimentConfig,
    n: usize,
    depth: usize,
) -> Result<Vec<ReconstructionMps>> {
    match cfg.r_method {
        RMethod::Solve => solve_r_ladder(n, depth, cfg.solve_ef_bond, &solve_options(cfg)),
        RMethod::Exact => (0..=depth).map(|l| brute_force_r_mps(n, l)).collect(),
    }
}

fn reconstruction(cfg: &ExperimentConfig, n: usize, depth: usize) -> Result<ReconstructionMps> {
    match cfg.r_method {
        RMethod::Exact => brute_force_r_mps(n, depth),
        RMethod::Solve => Ok(reconstruction_ladder(cfg, n, depth)?
            .pop()
            .expect("depth 0 present")),
    }
}

fn snapshots_path(cfg: &ExperimentConfig, out: &Path) -> PathBuf {
    cfg.snapshots
        .clone()
        .unwrap_or_else(|| out.join("snapshots.snap"))
}

fn r_path(cfg: &ExperimentConfig, out: &Path) -> PathBuf {
    cfg.r_file.clone().unwrap_or_else(|| out.join("r.txt"))
}

/// Run the measurement protocol and write `snapshots.snap`.
pub fn cmd_sample(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let state = build_state(&cfg.state, cfg.n)?;
    let store = run_protocol(
        &state,
        &CircuitSpec::new(cfg.n, cfg.depth, cfg.seed),
        cfg.samples,
        &state_label(&cfg.state),
    )?;
    let path = out.join("snapshots.snap");
    let mut w = BufWriter::new(File::create(&path)?);
    write_snapshots(&store, &mut w)?;
    w.flush()?;
    Ok(vec![path])
}

/// Solve the reconstruction coefficients for the configured depth; writes `r.txt`
/// and `solve.csv` with the loss of every depth on the way.
pub fn cmd_solve_r(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let ladder = reconstruction_ladder(cfg, cfg.n, cfg.depth)?;
    let csv = out.join("solve.csv");
    let mut w = csv_writer(cfg, &csv, "n,L,bond,loss,status")?;
    for r in &ladder {
        let loss = r
            .loss()
            .map_or_else(|| "none".to_string(), |l| l.to_string());
        writeln!(
            w,
            "{},{},{},{},{}",
            r.n(),
            r.depth().map_or(-1, |d| d as i64),
            r.bond(),
            loss,
            r.status()
        )?;
    }
    w.flush()?;
    let rpath = out.join("r.txt");
    let mut rw = BufWriter::new(File::create(&rpath)?);
    write_r(ladder.last().expect("depth 0 present"), &mut rw)?;
    rw.flush()?;
    Ok(vec![rpath, csv])
}

fn load_inputs(cfg: &ExperimentConfig, out: &Path) -> Result<(SnapshotStore, ReconstructionMps)> {
    let store = read_snapshots(BufReader::new(File::open(snapshots_path(cfg, out))?))?;
    let r = read_r(BufReader::new(File::open(r_path(cfg, out))?))?;
    if store.n != r.n() || r.depth() != Some(store.depth) {
        return Err(Error::Mismatch(format!(
            "snapshots are n={} L={}, r-file is n={} L={}",
            store.n,
            store.depth,
            r.n(),
            r.depth().map_or("inf".to_string(), |d| d.to_string())
        )));
    }
    if store.n != cfg.n || store.depth != cfg.depth {
        return Err(Error::Mismatch(format!(
            "config is n={} L={}, snapshots are n={} L={}",
            cfg.n, cfg.depth, store.n, store.depth
        )));
    }
    Ok((store, r))
}

fn z_string(n: usize, k: usize) -> Result<PauliString> {
    if k == 0 || k > n {
        return Err(Error::Invalid(format!(
            "Z-string weight {k} outside 1..={n}"
        )));
    }
    let mut p = PauliString::identity(n);
    for i in 0..k {
        p.set(i, 3);
    }
    Ok(p)
}

/// Observables named by the configuration, with their CSV identifiers.
fn observables(cfg: &ExperimentConfig, n: usize) -> Result<Vec<(String, ObservableSpec)>> {
    Ok(match &cfg.observable {
        ObservableChoice::ZStrings(ks) => ks
            .iter()
            .map(|&k| {
                Ok((
                    format!("Z^{k}"),
                    ObservableSpec::PauliSum(vec![(1.0, z_string(n, k)?)]),
                ))
            })
            .collect::<Result<_>>()?,
        ObservableChoice::Paulis(ps) => ps
            .iter()
            .map(|p| {
                (
                    p.to_string(),
                    ObservableSpec::PauliSum(vec![(1.0, p.clone())]),
                )
            })
            .collect(),
        ObservableChoice::Sum(t) => vec![("sum".into(), ObservableSpec::PauliSum(t.clone()))],
        ObservableChoice::Fidelity => {
            vec![(
                "fidelity".into(),
                ObservableSpec::stabilizer(&build_state(&cfg.state, n)?),
            )]
        }
    })
}

/// Estimate the configured observables from stored snapshots and an r-file.
pub fn cmd_estimate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let (store, r) = load_inputs(cfg, out)?;
    let path = out.join("estimates.csv");
    let mut w = csv_writer(cfg, &path, EstimateResult::CSV_HEADER)?;
    for (id, obs) in observables(cfg, store.n)? {
        let res = estimate_observable(&store, &r, &obs, cfg.aggregation, cfg.extent_cap)?;
        res.write_csv_row(&mut w, &id, store.n, store.depth)?;
    }
    w.flush()?;
    Ok(vec![path])
}

/// Shadow norms of the configured Pauli observables at every configured depth, from
/// the EF alone and, when an r-file is configured, from the reconstruction too.
pub fn cmd_norm(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let paulis: Vec<(String, Vec<(f64, PauliString)>)> = match &cfg.observable {
        ObservableChoice::ZStrings(ks) => ks
            .iter()
            .map(|&k| Ok((format!("Z^{k}"), vec![(1.0, z_string(cfg.n, k)?)])))
            .collect::<Result<_>>()?,
        ObservableChoice::Paulis(ps) => ps
            .iter()
            .map(|p| (p.to_string(), vec![(1.0, p.clone())]))
            .collect(),
        ObservableChoice::Sum(t) => vec![("sum".into(), t.clone())],
        ObservableChoice::Fidelity => {
            return Err(Error::Invalid(
                "norm needs a Pauli observable (z:, pauli: or sum:)".into(),
            ))
        }
    };
    let r = cfg
        .r_file
        .as_ref()
        .map(|p| read_r(BufReader::new(File::open(p)?)))
        .transpose()?;
    if let Some(r) = &r {
        if r.n() != cfg.n {
            return Err(Error::Mismatch(format!(
                "r-file has n={}, config n={}",
                r.n(),
                cfg.n
            )));
        }
    }
    let path = out.join("norms.csv");
    let mut w = csv_writer(cfg, &path, "observable,n,L,norm_ef,norm_r")?;
    for &l in &cfg.depths {
        let ef = evolve_snapshot_ef(&CircuitSpec::new(cfg.n, l, cfg.seed), cfg.ef_bond)?;
        for (id, terms) in &paulis {
            let from_ef = match terms.as_slice() {
                [(a, p)] => {
                    (a * a * pauli_shadow_norm_from_ef(&ef, &p.support_mask())?).to_string()
                }
                _ => "none".to_string(),
            };
            let from_r = match &r {
                Some(r) if r.depth() == Some(l) => {
                    shadow_norm_general(r, &OperatorEf::pauli_sum(terms)?)?.to_string()
                }
                _ => "none".to_string(),
            };
            writeln!(w, "{id},{},{l},{from_ef},{from_r}", cfg.n)?;
        }
    }
    w.flush()?;
    Ok(vec![path])
}

/// Optimal-depth scan of `Z^{⊗k}` norms over `ks × depths`.
pub fn cmd_scan(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    if cfg.ks.is_empty() {
        return Err(Error::Invalid("scan needs ks".into()));
    }
    let scan = depth_scan(&cfg.ks, &cfg.depths, cfg.n, cfg.ef_bond)?;
    let path = out.join("scan.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "{}", cfg.provenance())?;
    scan.write_csv(&mut w)?;
    w.flush()?;
    Ok(vec![path])
}

/// One point of the fidelity-variance table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariancePoint {
    pub n: usize,
    pub depth: usize,
    pub variance: f64,
}

/// Fit of `ln var = const + c·n/(L+1)^α` with `α` fixed.
#[derive(Clone, Debug)]
pub struct ScalingFit {
    pub c: f64,
    pub constant: f64,
    pub alpha: f64,
    /// `ln var − fitted` per input point.
    pub residuals: Vec<f64>,
}

pub fn fit_variance_scaling(points: &[VariancePoint]) -> Result<ScalingFit> {
    let x = |p: &VariancePoint| p.n as f64 / (p.depth as f64 + 1.0).powf(SCALING_ALPHA);
    let mut xs: Vec<f64> = points.iter().map(x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 2 {
        return Err(Error::InsufficientPoints {
            need: 2,
            got: xs.len(),
        });
    }
    if let Some(p) = points.iter().find(|p| !(p.variance > 0.0)) {
        return Err(Error::Invalid(format!(
            "non-positive variance {} at n={} L={}",
            p.variance, p.n, p.depth
        )));
    }
    let mut ata = Matrix2::zeros();
    let mut aty = Vector2::zeros();
    for p in points {
        let row = Vector2::new(1.0, x(p));
        ata += row * row.transpose();
        aty += row * p.variance.ln();
    }
    let sol = ata
        .lu()
        .solve(&aty)
        .ok_or_else(|| Error::Invalid("singular scaling fit".into()))?;
    let residuals = points
        .iter()
        .map(|p| p.variance.ln() - sol[0] - sol[1] * x(p))
        .collect();
    Ok(ScalingFit {
        c: sol[1],
        constant: sol[0],
        alpha: SCALING_ALPHA,
        residuals,
    })
}

/// Single-shot variance of the fidelity estimator for one `(n, L)` run.
pub fn fidelity_variance(cfg: &ExperimentConfig, n: usize, depth: usize) -> Result<f64> {
    let state = build_state(&cfg.state, n)?;
    let store = run_protocol(
        &state,
        &CircuitSpec::new(n, depth, cfg.seed),
        cfg.samples,
        &state_label(&cfg.state),
    )?;
    let r = reconstruction(cfg, n, depth)?;
    let res = estimate_observable(
        &store,
        &r,
        &ObservableSpec::stabilizer(&state),
        cfg.aggregation,
        cfg.extent_cap,
    )?;
    Ok(res.variance)
}

fn read_variance_table(path: &Path) -> Result<Vec<VariancePoint>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    let mut header_seen = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if line.starts_with('n') {
                continue;
            }
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let err = || Error::Parse {
            line: i + 1,
            msg: format!("expected n,L,variance: {line:?}"),
        };
        if f.len() < 3 {
            return Err(err());
        }
        out.push(VariancePoint {
            n: f[0].parse().map_err(|_| err())?,
            depth: f[1].parse().map_err(|_| err())?,
            variance: f[2].parse().map_err(|_| err())?,
        });
    }
    Ok(out)
}

/// Fit the fidelity-variance scaling, from a table file or by running every
/// `(n, L)` in `scaling_ns × depths`.
pub fn cmd_fit_scaling(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let points = match &cfg.scaling_table {
        Some(p) => read_variance_table(p)?,
        None => {
            let ns = if cfg.scaling_ns.is_empty() {
                vec![cfg.n]
            } else {
                cfg.scaling_ns.clone()
            };
            let mut pts = Vec::new();
            for &n in &ns {
                for &l in &cfg.depths {
                    pts.push(VariancePoint {
                        n,
                        depth: l,
                        variance: fidelity_variance(cfg, n, l)?,
                    });
                }
            }
            pts
        }
    };
    let fit = fit_variance_scaling(&points)?;
    let path = out.join("scaling.csv");
    let mut w = csv_writer(cfg, &path, "n,L,variance,residual,c,alpha,constant")?;
    for (p, res) in points.iter().zip(&fit.residuals) {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            p.n, p.depth, p.variance, res, fit.c, fit.alpha, fit.constant
        )?;
    }
    w.flush()?;
    Ok(vec![path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_states() {
        assert_eq!(ghz_state(3).unwrap().generators_string(), "+ZZI;+IZZ;+XXX");
        assert_eq!(
            cluster_state(3).unwrap().generators_string(),
            "+XZZ;+ZXZ;+ZZX"
        );
        assert!(cluster_state(2).is_err());
        let c = cluster_state(5).unwrap();
        assert_eq!(
            parse_state_text(&format!(
                "# ring\n{}\n",
                c.generators_string().replace(';', "\n")
            ))
            .unwrap()
            .generators_string(),
            c.generators_string()
        );
    }

    #[test]
    fn scaling_fit_recovers_synthetic_c() {
        let pts: Vec<VariancePoint> = [(6, 1), (8, 2), (10, 3), (12, 3), (12, 0)]
            .iter()
            .map(|&(n, l)| VariancePoint {
                n,
                depth: l,
                variance: (0.3 + 0.4 * n as f64 / (l as f64 + 1.0).powf(0.72)).exp(),
            })
            .collect();
        let fit = fit_variance_scaling(&pts).unwrap();
        assert!((fit.c - 0.4).abs() < 1e-6 && (fit.constant - 0.3).abs() < 1e-6);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
        let one = [VariancePoint {
            n: 6,
            depth: 3,
            variance: 2.0,
        }];
        assert!(matches!(
            fit_variance_scaling(&one),
            Err(Error::InsufficientPoints { .. })
        ));
    }
}
