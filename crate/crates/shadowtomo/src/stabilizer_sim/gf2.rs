//! Dense linear algebra over GF(2) with rows packed in `u64` words.

#[derive(Clone, Debug)]
pub(crate) struct BitMatrix {
    cols: usize,
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        Self {
            cols,
            rows: Vec::new(),
        }
    }

    pub fn words(&self) -> usize {
        self.cols.div_ceil(64).max(1)
    }

    pub fn push_row(&mut self, bits: impl IntoIterator<Item = bool>) {
        let mut row = vec![0u64; self.words()];
        for (c, b) in bits.into_iter().enumerate() {
            assert!(c < self.cols, "row longer than column count");
            if b {
                row[c / 64] |= 1 << (c % 64);
            }
        }
        self.rows.push(row);
    }

    fn bit(row: &[u64], c: usize) -> bool {
        (row[c / 64] >> (c % 64)) & 1 == 1
    }

    /// Reduced row echelon form in place; returns the pivot column of each leading row.
    /// `tag` rows are transformed alongside (they record the row operations).
    fn reduce(&mut self, mut tag: Option<&mut Vec<Vec<u64>>>) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows.len() {
                break;
            }
            let Some(p) = (r..self.rows.len()).find(|&i| Self::bit(&self.rows[i], c)) else {
                continue;
            };
            self.rows.swap(r, p);
            if let Some(t) = tag.as_deref_mut() {
                t.swap(r, p);
            }
            for i in 0..self.rows.len() {
                if i != r && Self::bit(&self.rows[i], c) {
                    let (src, dst) = if i < r {
                        let (a, b) = self.rows.split_at_mut(r);
                        (&b[0], &mut a[i])
                    } else {
                        let (a, b) = self.rows.split_at_mut(i);
                        (&a[r], &mut b[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d ^= s;
                    }
                    if let Some(t) = tag.as_deref_mut() {
                        let srow = t[r].clone();
                        for (d, s) in t[i].iter_mut().zip(&srow) {
                            *d ^= s;
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce(None).len()
    }

    /// For a full-row-rank matrix `M` (m × cols), returns `m` vectors `d_i` with `M d_i = e_i`.
    pub fn right_inverse(&self) -> Option<Vec<Vec<bool>>> {
        let m = self.rows.len();
        let tw = m.div_ceil(64).max(1);
        let mut tag: Vec<Vec<u64>> = (0..m)
            .map(|i| {
                let mut t = vec![0u64; tw];
                t[i / 64] |= 1 << (i % 64);
                t
            })
            .collect();
        let mut work = self.clone();
        let pivots = work.reduce(Some(&mut tag));
        if pivots.len() != m {
            return None;
        }
        Some(
            (0..m)
                .map(|i| {
                    let mut d = vec![false; self.cols];
                    for (r, &c) in pivots.iter().enumerate() {
                        d[c] = Self::bit(&tag[r], i);
                    }
                    d
                })
                .collect(),
        )
    }

    /// Basis of row combinations summing to zero, each as a coefficient per row.
    pub fn left_kernel(&self) -> Vec<Vec<bool>> {
        let m = self.rows.len();
        let tw = m.div_ceil(64).max(1);
        let mut tag: Vec<Vec<u64>> = (0..m)
            .map(|i| {
                let mut t = vec![0u64; tw];
                t[i / 64] |= 1 << (i % 64);
                t
            })
            .collect();
        let mut work = self.clone();
        let rank = work.reduce(Some(&mut tag)).len();
        tag[rank..]
            .iter()
            .map(|t| (0..m).map(|i| Self::bit(t, i)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_inverse() {
        let mut m = BitMatrix::new(4);
        m.push_row([true, true, false, false]);
        m.push_row([false, true, true, false]);
        m.push_row([true, false, true, false]);
        assert_eq!(m.rank(), 2);
        let mut full = BitMatrix::new(4);
        full.push_row([true, true, false, false]);
        full.push_row([false, true, true, true]);
        let inv = full.right_inverse().unwrap();
        for (i, d) in inv.iter().enumerate() {
            for (r, row) in [[true, true, false, false], [false, true, true, true]]
                .iter()
                .enumerate()
            {
                let dot = row.iter().zip(d).filter(|(a, b)| **a && **b).count() % 2 == 1;
                assert_eq!(dot, r == i);
            }
        }
    }

    #[test]
    fn kernel() {
        let mut m = BitMatrix::new(3);
        m.push_row([true, true, false]);
        m.push_row([false, true, true]);
        m.push_row([true, false, true]);
        assert_eq!(m.left_kernel(), vec![vec![true, true, true]]);
    }
}
