//! Compressed sparse row matrices and the triplet text format.
//!
//! Triplet format: a header line `N V NNZ`, then one `row col value` line per
//! stored entry, 0-based indices, values in shortest round-trip notation.

use std::io::{self, BufRead, Write};

use ndarray::Array2;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists. Columns within a row must be ascending.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in &rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for &(c, v) in row {
                debug_assert!(c < cols);
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows: rows.len(),
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Builds from unordered triplets; duplicate coordinates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            let row = &mut per_row[r];
            match row.last_mut() {
                Some((lc, lv)) if *lc == c => *lv += v,
                _ => row.push((c, v)),
            }
        }
        CsrMatrix::from_rows(cols, per_row)
    }

    pub fn from_dense(dense: &Array2<f64>) -> Self {
        let rows = dense
            .outer_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c, v))
                    .collect()
            })
            .collect();
        CsrMatrix::from_rows(dense.ncols(), rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        idx.binary_search(&c).map(|k| val[k]).unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                out[[r, c]] = v;
            }
        }
        out
    }

    /// `self * rhs` where `rhs` is `cols x k`.
    pub fn mul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.cols);
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.rows, k));
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            let mut row = out.row_mut(r);
            for (&c, &v) in idx.iter().zip(val) {
                row.scaled_add(v, &rhs.row(c));
            }
        }
        out
    }

    /// `self^T * rhs` where `rhs` is `rows x k`.
    pub fn t_mul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(rhs.nrows(), self.rows);
        let k = rhs.ncols();
        let mut out = Array2::zeros((self.cols, k));
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            let src = rhs.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                out.row_mut(c).scaled_add(v, &src);
            }
        }
        out
    }

    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for r in 0..self.rows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                writeln!(out, "{r} {c} {v:?}")?;
            }
        }
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(input: R) -> io::Result<Self> {
        let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| bad("missing header line".into()))??;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad(format!("bad header {header:?}"))))
            .collect::<Result<_, _>>()?;
        let [rows, cols, nnz] = dims[..] else {
            return Err(bad(format!("header must be `N V NNZ`, got {header:?}")));
        };
        let mut triplets = Vec::with_capacity(nnz);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut next = || it.next().ok_or_else(|| bad(format!("short line {line:?}")));
            let r: usize = next()?.parse().map_err(|_| bad(format!("bad row in {line:?}")))?;
            let c: usize = next()?.parse().map_err(|_| bad(format!("bad col in {line:?}")))?;
            let v: f64 = next()?.parse().map_err(|_| bad(format!("bad value in {line:?}")))?;
            if r >= rows || c >= cols {
                return Err(bad(format!("entry ({r}, {c}) outside {rows}x{cols}")));
            }
            triplets.push((r, c, v));
        }
        if triplets.len() != nnz {
            return Err(bad(format!("header says {nnz} entries, found {}", triplets.len())));
        }
        Ok(CsrMatrix::from_triplets(rows, cols, triplets))
    }
}

/// Writes a dense matrix in the triplet format (zeros omitted).
pub fn write_dense_triplets<W: Write>(m: &Array2<f64>, out: W) -> io::Result<()> {
    CsrMatrix::from_dense(m).write_triplets(out)
}

pub fn read_dense_triplets<R: BufRead>(input: R) -> io::Result<Array2<f64>> {
    Ok(CsrMatrix::read_triplets(input)?.to_dense())
}
