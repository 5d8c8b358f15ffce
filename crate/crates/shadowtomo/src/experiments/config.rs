//! Flat `key = value` experiment configuration with a version key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimation::{Aggregation, DEFAULT_EXTENT_CAP, DEFAULT_FIDELITY_GROUPS};
use crate::stabilizer_sim::PauliString;

pub const CONFIG_VERSION: u32 = 1;

/// EF bond used by the reconstruction solve unless configured otherwise.
pub const SOLVE_EF_BOND: usize = 2;

/// Which initial state to measure.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    Ghz,
    Cluster,
    /// Generators read from a file, one signed Pauli string per line (or `;`-separated).
    File(PathBuf),
}

/// How the reconstruction coefficients are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RMethod {
    /// Variational solve of the consistency equation, warm-started depth by depth.
    Solve,
    /// Brute force from the full EF table (small rings only).
    Exact,
}

/// Observables for `estimate` and `norm`.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableChoice {
    /// `Z^{⊗k}` on sites `0..k` for every `k` in the list.
    ZStrings(Vec<usize>),
    /// Each Pauli string estimated separately.
    Paulis(Vec<PauliString>),
    /// One weighted sum `Σ a_P P`.
    Sum(Vec<(f64, PauliString)>),
    /// Fidelity with the configured state.
    Fidelity,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub state: StateSpec,
    pub n: usize,
    pub depth: usize,
    pub samples: usize,
    pub seed: u64,
    /// EF truncation bond for norms and scans; `None` keeps the EF exact.
    pub ef_bond: Option<usize>,
    /// EF truncation bond used inside the reconstruction solve.
    pub solve_ef_bond: Option<usize>,
    pub r_bond: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub r_method: RMethod,
    pub observable: ObservableChoice,
    pub aggregation: Aggregation,
    pub extent_cap: usize,
    pub snapshots: Option<PathBuf>,
    pub r_file: Option<PathBuf>,
    pub ks: Vec<usize>,
    pub depths: Vec<usize>,
    pub scaling_ns: Vec<usize>,
    pub scaling_table: Option<PathBuf>,
    /// SHA-256 of the configuration text, recorded in every CSV.
    pub hash: String,
}

const KEYS: &[&str] = &[
    "version",
    "state",
    "state_file",
    "n",
    "depth",
    "samples",
    "seed",
    "ef_bond",
    "solve_ef_bond",
    "r_bond",
    "tol",
    "max_iters",
    "r_method",
    "observable",
    "aggregation",
    "extent_cap",
    "snapshots",
    "r_file",
    "ks",
    "depths",
    "scaling_ns",
    "scaling_table",
];

fn parse_list(key: &str, v: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (num(key, a)?, num(key, b)?);
                if a > b {
                    return Err(Error::Invalid(format!("{key}: empty range {item}")));
                }
                out.extend(a..=b);
            }
            None => out.push(num(key, item)?),
        }
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("{key}: cannot parse {v:?}")))
}

fn parse_observable(v: &str) -> Result<ObservableChoice> {
    let v = v.trim();
    if v == "fidelity" {
        return Ok(ObservableChoice::Fidelity);
    }
    let (kind, body) = v
        .split_once(':')
        .ok_or_else(|| Error::Invalid(format!("observable: unknown form {v:?}")))?;
    match kind.trim() {
        "z" => Ok(ObservableChoice::ZStrings(parse_list("observable", body)?)),
        "pauli" => Ok(ObservableChoice::Paulis(
            body.split(',')
                .map(|p| p.trim().parse())
                .collect::<Result<_>>()?,
        )),
        "sum" => Ok(ObservableChoice::Sum(
            body.split('+')
                .map(|t| {
                    let (a, p) = t
                        .split_once('*')
                        .ok_or_else(|| Error::Invalid(format!("sum term {t:?} is not a*P")))?;
                    Ok((num("observable", a)?, p.trim().parse()?))
                })
                .collect::<Result<_>>()?,
        )),
        _ => Err(Error::Invalid(format!("observable: unknown form {v:?}"))),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parse configuration text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "expected key = value".into(),
            })?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("unknown key {k:?}"),
                });
            }
            if map.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate key {k:?}"),
                });
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let version: u32 = num(
            "version",
            get("version").ok_or_else(|| Error::Invalid("missing version".into()))?,
        )?;
        if version != CONFIG_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported config version {version}"
            )));
        }
        let path = |k: &str| get(k).map(|p| base.join(p));
        let state = match get("state").unwrap_or("ghz") {
            "ghz" => StateSpec::Ghz,
            "cluster" => StateSpec::Cluster,
            "file" => StateSpec::File(
                path("state_file")
                    .ok_or_else(|| Error::Invalid("state = file needs state_file".into()))?,
            ),
            s => {
                return Err(Error::Invalid(format!(
                    "unknown state {s:?} (ghz | cluster | file)"
                )))
            }
        };
        let positive = |k: &str, default: usize| -> Result<usize> {
            let v = get(k).map(|v| num(k, v)).transpose()?.unwrap_or(default);
            if v == 0 {
                return Err(Error::Invalid(format!("{k} must be positive")));
            }
            Ok(v)
        };
        let bond = |k: &str, default: usize| -> Result<Option<usize>> {
            match get(k) {
                None => Ok(Some(default)),
                Some("exact") => Ok(None),
                Some(v) => match num::<usize>(k, v)? {
                    0 => Err(Error::Invalid(format!("{k} must be positive or exact"))),
                    d => Ok(Some(d)),
                },
            }
        };
        let ef_bond = bond("ef_bond", crate::ef_dynamics::DEFAULT_EF_BOND)?;
        let solve_ef_bond = bond("solve_ef_bond", SOLVE_EF_BOND)?;
        let observable = get("observable")
            .map(parse_observable)
            .transpose()?
            .unwrap_or(ObservableChoice::Fidelity);
        let default_agg = match observable {
            ObservableChoice::Fidelity => Aggregation::MedianOfMeans {
                groups: DEFAULT_FIDELITY_GROUPS,
            },
            _ => Aggregation::Mean,
        };
        let tol: f64 = get("tol")
            .map(|v| num("tol", v))
            .transpose()?
            .unwrap_or(1e-3);
        if !(tol > 0.0) {
            return Err(Error::Invalid("tol must be positive".into()));
        }
        let n = positive("n", 0)?;
        let depth = get("depth")
            .map(|v| num("depth", v))
            .transpose()?
            .unwrap_or(0);
        let cfg = Self {
            state,
            n,
            depth,
            samples: positive("samples", 1000)?,
            seed: get("seed")
                .map(|v| num("seed", v))
                .transpose()?
                .unwrap_or(0),
            ef_bond,
            solve_ef_bond,
            r_bond: positive("r_bond", 6)?,
            tol,
            max_iters: positive("max_iters", 20_000)?,
            r_method: match get("r_method").unwrap_or("solve") {
                "solve" => RMethod::Solve,
                "exact" => RMethod::Exact,
                m => {
                    return Err(Error::Invalid(format!(
                        "unknown r_method {m:?} (solve | exact)"
                    )))
                }
            },
            observable,
            aggregation: get("aggregation")
                .map(str::parse)
                .transpose()?
                .unwrap_or(default_agg),
            extent_cap: positive("extent_cap", DEFAULT_EXTENT_CAP)?,
            snapshots: path("snapshots"),
            r_file: path("r_file"),
            ks: get("ks")
                .map(|v| parse_list("ks", v))
                .transpose()?
                .unwrap_or_default(),
            depths: get("depths")
                .map(|v| parse_list("depths", v))
                .transpose()?
                .unwrap_or_else(|| vec![depth]),
            scaling_ns: get("scaling_ns")
                .map(|v| parse_list("scaling_ns", v))
                .transpose()?
                .unwrap_or_default(),
            scaling_table: path("scaling_table"),
            hash: Sha256::digest(text.as_bytes())
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect(),
        };
        Ok(cfg)
    }

    /// Comment line placed first in every CSV output.
    pub fn provenance(&self) -> String {
        format!(
            "# shadowtomo config-sha256={} seed={}",
            self.hash, self.seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text =
            "version = 1\nstate = cluster # comment\nn = 10\ndepth = 3\nsamples = 500\nseed = 4\n\
                    ef_bond = exact\nobservable = z:1-3,6\nks = 1,2,4-5\ndepths = 0-2\n";
        let c = ExperimentConfig::parse(text, Path::new("/tmp")).unwrap();
        assert_eq!(c.state, StateSpec::Cluster);
        assert_eq!((c.n, c.depth, c.samples, c.seed), (10, 3, 500, 4));
        assert_eq!(c.ef_bond, None);
        assert_eq!(c.observable, ObservableChoice::ZStrings(vec![1, 2, 3, 6]));
        assert_eq!(c.ks, vec![1, 2, 4, 5]);
        assert_eq!(c.depths, vec![0, 1, 2]);
        assert_eq!(c.aggregation, Aggregation::Mean);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn defaults_and_errors() {
        let c = ExperimentConfig::parse("version=1\nn=4\n", Path::new(".")).unwrap();
        assert_eq!(c.observable, ObservableChoice::Fidelity);
        assert_eq!(c.aggregation, Aggregation::MedianOfMeans { groups: 12 });
        for bad in [
            "n=4\n",
            "version=2\nn=4\n",
            "version=1\nn=0\n",
            "version=1\nn=4\nbogus=1\n",
            "version=1\nn=4\nn=5\n",
        ] {
            assert!(
                ExperimentConfig::parse(bad, Path::new(".")).is_err(),
                "{bad}"
            );
        }
        let s = ExperimentConfig::parse(
            "version=1\nn=4\nobservable=sum: 0.5*ZZII + -1*XXII\n",
            Path::new("."),
        )
        .unwrap();
        assert!(
            matches!(s.observable, ObservableChoice::Sum(ref t) if t.len() == 2 && t[1].0 == -1.0)
        );
    }
}
