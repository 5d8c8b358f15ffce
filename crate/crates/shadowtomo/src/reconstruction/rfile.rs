//! Plain-text storage of reconstruction coefficients; numbers carry 17 significant digits.

use std::io::{BufRead, Write};

use super::{ReconstructionMps, SolveStatus};
use crate::error::{Error, Result};
use crate::tensor_core::{Mat, SubsetMps};

const MAGIC: &str = "SHADOWR v1";

fn write_matrix<W: Write>(out: &mut W, name: &str, m: &Mat) -> Result<()> {
    write!(out, "{name} {} {}:", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            write!(out, " {:.16e}", m[(i, j)])?;
        }
    }
    writeln!(out)?;
    Ok(())
}

pub fn write_r<W: Write>(r: &ReconstructionMps, mut out: W) -> Result<()> {
    let m = r.mps();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "n={}", r.n())?;
    match r.depth() {
        Some(d) => writeln!(out, "depth={d}")?,
        None => writeln!(out, "depth=inf")?,
    }
    writeln!(out, "bond={}", r.bond())?;
    match r.loss() {
        Some(l) => writeln!(out, "loss={l:.16e}")?,
        None => writeln!(out, "loss=none")?,
    }
    writeln!(out, "status={}", r.status())?;
    writeln!(out, "cell={}", m.unit_cell())?;
    write_matrix(&mut out, "boundary", m.boundary())?;
    for (j, t) in m.cell().iter().enumerate() {
        write_matrix(&mut out, &format!("site{j}.0"), &t[0])?;
        write_matrix(&mut out, &format!("site{j}.1"), &t[1])?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            let l = self.inner.next().ok_or_else(|| Error::Parse {
                line: self.line,
                msg: "unexpected end of r-file".into(),
            })??;
            if !l.trim().is_empty() {
                return Ok(l);
            }
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let l = self.next_line()?;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| self.err(format!("expected {key}=")))
    }

    fn number<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse()
            .map_err(|_| self.err(format!("{key} is not a number: {v:?}")))
    }

    fn matrix(&mut self, name: &str) -> Result<Mat> {
        let l = self.next_line()?;
        let (head, body) = l
            .split_once(':')
            .ok_or_else(|| self.err("expected `<name> <rows> <cols>: …`"))?;
        let head: Vec<&str> = head.split_whitespace().collect();
        if head.len() != 3 || head[0] != name {
            return Err(self.err(format!("expected matrix {name}")));
        }
        let rows: usize = head[1].parse().map_err(|_| self.err("bad row count"))?;
        let cols: usize = head[2].parse().map_err(|_| self.err("bad column count"))?;
        let vals: Vec<f64> = body
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| self.err(format!("bad number {t:?}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != rows * cols {
            return Err(self.err(format!("{name}: {} values for {rows}×{cols}", vals.len())));
        }
        Ok(Mat::from_row_slice(rows, cols, &vals))
    }
}

pub fn read_r<R: BufRead>(input: R) -> Result<ReconstructionMps> {
    let mut lines = Lines {
        inner: input.lines(),
        line: 0,
    };
    if lines.next_line()?.trim() != MAGIC {
        return Err(lines.err("missing SHADOWR v1 header"));
    }
    let n: usize = lines.number("n")?;
    let depth = match lines.field("depth")?.as_str() {
        "inf" => None,
        d => Some(d.parse::<usize>().map_err(|_| lines.err("bad depth"))?),
    };
    let bond: usize = lines.number("bond")?;
    let loss = match lines.field("loss")?.as_str() {
        "none" => None,
        l => Some(l.parse::<f64>().map_err(|_| lines.err("bad loss"))?),
    };
    let status: SolveStatus = lines.field("status")?.parse()?;
    let cell_len: usize = lines.number("cell")?;
    let boundary = lines.matrix("boundary")?;
    let mut cell = Vec::with_capacity(cell_len);
    for j in 0..cell_len {
        let t0 = lines.matrix(&format!("site{j}.0"))?;
        let t1 = lines.matrix(&format!("site{j}.1"))?;
        cell.push([t0, t1]);
    }
    let mps = SubsetMps::new(n, cell, boundary)?;
    if mps.max_bond() != bond {
        return Err(Error::Mismatch(format!(
            "r-file declares bond {bond}, tensors have {}",
            mps.max_bond()
        )));
    }
    ReconstructionMps::from_parts(mps, depth, loss, status)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::{closed_form_r_clifford, closed_form_r_pauli};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut g = || Mat::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0) / 3.0);
        let mps = SubsetMps::new(6, vec![[g(), g()], [g(), g()]], g()).unwrap();
        let r =
            ReconstructionMps::from_parts(mps, Some(2), Some(1.0 / 7.0), SolveStatus::Unconverged)
                .unwrap();
        for r in [r, closed_form_r_pauli(4), closed_form_r_clifford(5)] {
            let mut buf = Vec::new();
            write_r(&r, &mut buf).unwrap();
            let back = read_r(&buf[..]).unwrap();
            assert_eq!(back.depth(), r.depth());
            assert_eq!(back.loss(), r.loss());
            assert_eq!(back.status(), r.status());
            assert_eq!(back.mps().boundary(), r.mps().boundary());
            for (a, b) in back.mps().cell().iter().zip(r.mps().cell()) {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn rejects_truncated_file() {
        let mut buf = Vec::new();
        write_r(&closed_form_r_clifford(3), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(read_r(cut.as_bytes()).is_err());
        assert!(read_r("SHADOWR v2\n".as_bytes()).is_err());
    }
}
