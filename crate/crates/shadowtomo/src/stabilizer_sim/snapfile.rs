use std::io::{BufRead, Write};

use super::pauli::PauliString;
use super::protocol::{SnapshotRecord, SnapshotStore};
use super::tableau::StabilizerState;
use crate::error::{Error, Result};

const MAGIC: &str = "SHADOWSNAP v1";

pub fn write_snapshots<W: Write>(store: &SnapshotStore, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{MAGIC} | n={} L={} seed={} state={} samples={}",
        store.n,
        store.depth,
        store.seed,
        store.label,
        store.records.len()
    )?;
    for r in &store.records {
        writeln!(out, "{}: {}", r.index, r.state.generators_string())?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_field<'a>(fields: &'a [(&'a str, &'a str)], key: &str, line: usize) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| parse_err(line, format!("header lacks {key}=")))
}

pub fn read_snapshots<R: BufRead>(input: R) -> Result<SnapshotStore> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty snapshot file"))??;
    let rest = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.trim_start().strip_prefix('|'))
        .ok_or_else(|| parse_err(1, "missing SHADOWSNAP v1 header"))?;
    let fields: Vec<(&str, &str)> = rest
        .split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| parse_err(1, format!("bad header field {kv:?}")))
        })
        .collect::<Result<_>>()?;
    let num = |key: &str| -> Result<u64> {
        header_field(&fields, key, 1)?
            .parse::<u64>()
            .map_err(|_| parse_err(1, format!("{key} is not an integer")))
    };
    let n = num("n")? as usize;
    let depth = num("L")? as usize;
    let seed = num("seed")?;
    let samples = num("samples")? as usize;
    let label = header_field(&fields, "state", 1)?.to_string();

    let mut records = Vec::with_capacity(samples);
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (idx, body) = line
            .split_once(':')
            .ok_or_else(|| parse_err(lineno, "expected `<index>: <generators>`"))?;
        let index: u64 = idx
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, "bad sample index"))?;
        let gens = body
            .split(';')
            .map(|g| {
                let g = g.trim();
                if !g.starts_with(['+', '-']) {
                    return Err(parse_err(lineno, format!("generator {g:?} has no sign")));
                }
                g.parse::<PauliString>()
                    .map_err(|e| parse_err(lineno, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        if gens.len() != n {
            return Err(parse_err(
                lineno,
                format!("{} generators, expected {n}", gens.len()),
            ));
        }
        if gens.iter().any(|g| g.len() != n) {
            return Err(parse_err(
                lineno,
                format!("generator length differs from n={n}"),
            ));
        }
        let state = StabilizerState::new(gens).map_err(|e| parse_err(lineno, e.to_string()))?;
        records.push(SnapshotRecord {
            index,
            stream: index,
            state,
        });
    }
    if records.len() != samples {
        return Err(parse_err(
            records.len() + 1,
            format!(
                "header announces {samples} samples, found {}",
                records.len()
            ),
        ));
    }
    Ok(SnapshotStore {
        n,
        depth,
        seed,
        label,
        records,
    })
}
