//! Column-block-partitioned sparse matrix.
//!
//! `A = [A_1 ... A_n]` with `A_i` of shape `d x q_i`. Each block is stored in
//! compressed sparse column form, or densely when more than half its entries
//! are non-zero. Per-block spectral norms `R_i = ||A_i||_2` are cached: exact
//! column norms are computed at construction for single-column blocks, wider
//! blocks are computed on first use by power iteration.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const POWER_MAX_ITERS: usize = 10_000;
const POWER_REL_TOL: f64 = 1e-12;
const DENSE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
enum Storage {
    Sparse {
        col_ptr: Vec<usize>,
        rows: Vec<usize>,
        vals: Vec<f64>,
    },
    /// Column-major, `d * width` values.
    Dense { vals: Vec<f64> },
}

#[derive(Debug, Clone)]
struct Block {
    width: usize,
    storage: Storage,
}

impl Block {
    fn from_columns(d: usize, columns: &[Vec<(usize, f64)>]) -> Self {
        let width = columns.len();
        let nnz: usize = columns.iter().map(Vec::len).sum();
        let dense = d * width > 0 && (nnz as f64) > DENSE_THRESHOLD * (d * width) as f64;
        let storage = if dense {
            let mut vals = vec![0.0; d * width];
            for (k, col) in columns.iter().enumerate() {
                for &(r, v) in col {
                    vals[k * d + r] = v;
                }
            }
            Storage::Dense { vals }
        } else {
            let mut col_ptr = Vec::with_capacity(width + 1);
            let mut rows = Vec::with_capacity(nnz);
            let mut vals = Vec::with_capacity(nnz);
            col_ptr.push(0);
            for col in columns {
                for &(r, v) in col {
                    rows.push(r);
                    vals.push(v);
                }
                col_ptr.push(rows.len());
            }
            Storage::Sparse {
                col_ptr,
                rows,
                vals,
            }
        };
        Block { width, storage }
    }

    /// Calls `f(row, value)` for every stored entry of column `k`.
    #[inline]
    fn for_each_in_column(&self, d: usize, k: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Sparse {
                col_ptr,
                rows,
                vals,
            } => {
                for p in col_ptr[k]..col_ptr[k + 1] {
                    f(rows[p], vals[p]);
                }
            }
            Storage::Dense { vals } => {
                for (r, &v) in vals[k * d..(k + 1) * d].iter().enumerate() {
                    f(r, v);
                }
            }
        }
    }

    #[inline]
    fn column_dot(&self, d: usize, k: usize, x: &[f64]) -> f64 {
        match &self.storage {
            Storage::Sparse {
                col_ptr,
                rows,
                vals,
            } => {
                let mut acc = 0.0;
                for p in col_ptr[k]..col_ptr[k + 1] {
                    acc += vals[p] * x[rows[p]];
                }
                acc
            }
            Storage::Dense { vals } => vals[k * d..(k + 1) * d]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum(),
        }
    }

    fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Sparse { vals, .. } => vals.len(),
            Storage::Dense { vals } => vals.iter().filter(|v| **v != 0.0).count(),
        }
    }

    fn is_dense(&self) -> bool {
        matches!(self.storage, Storage::Dense { .. })
    }
}

#[derive(Debug)]
pub struct BlockMatrix {
    rows: usize,
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    norms: Vec<OnceLock<f64>>,
}

impl Clone for BlockMatrix {
    fn clone(&self) -> Self {
        let norms = self
            .norms
            .iter()
            .map(|n| {
                let cell = OnceLock::new();
                if let Some(v) = n.get() {
                    let _ = cell.set(*v);
                }
                cell
            })
            .collect();
        BlockMatrix {
            rows: self.rows,
            blocks: self.blocks.clone(),
            offsets: self.offsets.clone(),
            norms,
        }
    }
}

impl BlockMatrix {
    /// Builds a matrix from sparse columns `(row, value)` grouped into
    /// consecutive blocks of the given widths. Rows within a column must be
    /// strictly increasing; explicit zeros are dropped.
    pub fn from_columns(
        rows: usize,
        columns: Vec<Vec<(usize, f64)>>,
        widths: &[usize],
    ) -> Result<Self> {
        let total: usize = widths.iter().sum();
        Error::check_len("block widths sum", columns.len(), total)?;
        if widths.contains(&0) {
            return Err(Error::invalid("block widths must be positive"));
        }
        for (c, col) in columns.iter().enumerate() {
            let mut last: Option<usize> = None;
            for &(r, v) in col {
                if r >= rows {
                    return Err(Error::invalid(format!(
                        "column {c}: row index {r} out of range for {rows} rows"
                    )));
                }
                if last.is_some_and(|l| r <= l) {
                    return Err(Error::invalid(format!(
                        "column {c}: row indices must be strictly increasing"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::invalid(format!("column {c}: non-finite entry")));
                }
                last = Some(r);
            }
        }

        let mut blocks = Vec::with_capacity(widths.len());
        let mut offsets = Vec::with_capacity(widths.len() + 1);
        let mut start = 0;
        offsets.push(0);
        for &w in widths {
            let cols: Vec<Vec<(usize, f64)>> = columns[start..start + w]
                .iter()
                .map(|c| c.iter().copied().filter(|(_, v)| *v != 0.0).collect())
                .collect();
            blocks.push(Block::from_columns(rows, &cols));
            start += w;
            offsets.push(start);
        }

        let matrix = BlockMatrix {
            rows,
            norms: (0..blocks.len()).map(|_| OnceLock::new()).collect(),
            blocks,
            offsets,
        };
        for i in 0..matrix.blocks.len() {
            if matrix.blocks[i].width == 1 {
                let _ = matrix.norms[i].set(matrix.column_norm(i, 0));
            }
        }
        Ok(matrix)
    }

    /// One block per column, the layout used for empirical risk minimization.
    pub fn from_sample_columns(rows: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let widths = vec![1; columns.len()];
        Self::from_columns(rows, columns, &widths)
    }

    /// Builds from a dense column-major `rows x sum(widths)` array.
    pub fn from_dense(rows: usize, data: &[f64], widths: &[usize]) -> Result<Self> {
        let cols: usize = widths.iter().sum();
        Error::check_len("dense data length", rows * cols, data.len())?;
        let columns = (0..cols)
            .map(|c| {
                data[c * rows..(c + 1) * rows]
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(r, v)| (r, *v))
                    .collect()
            })
            .collect();
        Self::from_columns(rows, columns, widths)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn total_cols(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn block_width(&self, i: usize) -> usize {
        self.blocks[i].width
    }

    /// Offset of block `i` within the stacked dual vector.
    pub fn block_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(Block::nnz).sum()
    }

    pub fn is_block_dense(&self, i: usize) -> bool {
        self.blocks[i].is_dense()
    }

    fn check_block(&self, i: usize) -> Result<()> {
        if i < self.blocks.len() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "block index {i} out of range for {} blocks",
                self.blocks.len()
            )))
        }
    }

    fn column_norm(&self, i: usize, k: usize) -> f64 {
        let mut acc = 0.0;
        self.blocks[i].for_each_in_column(self.rows, k, |_, v| acc += v * v);
        acc.sqrt()
    }

    /// Largest singular value of block `i`.
    pub fn spectral_norm(&self, i: usize) -> Result<f64> {
        self.check_block(i)?;
        Ok(*self.norms[i].get_or_init(|| self.compute_block_norm(i)))
    }

    /// All block norms, in block order.
    pub fn spectral_norms(&self) -> Vec<f64> {
        (0..self.num_blocks())
            .map(|i| *self.norms[i].get_or_init(|| self.compute_block_norm(i)))
            .collect()
    }

    pub fn frobenius_norm(&self, i: usize) -> Result<f64> {
        self.check_block(i)?;
        let mut acc = 0.0;
        for k in 0..self.blocks[i].width {
            let c = self.column_norm(i, k);
            acc += c * c;
        }
        Ok(acc.sqrt())
    }

    fn compute_block_norm(&self, i: usize) -> f64 {
        let width = self.blocks[i].width;
        if width == 1 {
            return self.column_norm(i, 0);
        }
        let col_norms: Vec<f64> = (0..width).map(|k| self.column_norm(i, k)).collect();
        let (best_col, max_col) = col_norms
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        if max_col == 0.0 {
            return 0.0;
        }
        let apply = |v: &[f64], out: &mut [f64]| {
            let mut av = vec![0.0; self.rows];
            self.add_block_matvec_unchecked(i, v, 1.0, &mut av);
            self.block_column_dot_unchecked(i, &av, out);
        };
        let start = vec![1.0; width];
        let mut rq = power_iteration(width, &start, apply);
        // The top eigenvalue of A^T A is at least its largest diagonal entry;
        // falling short means the start vector missed the top eigenvector.
        if rq < max_col * max_col * (1.0 - 1e-10) {
            let mut e = vec![0.0; width];
            e[best_col] = 1.0;
            rq = rq.max(power_iteration(width, &e, apply));
        }
        rq.max(0.0).sqrt()
    }

    /// `||A||_2` over all blocks.
    pub fn operator_norm(&self) -> f64 {
        let q = self.total_cols();
        if q == 0 || self.nnz() == 0 {
            return 0.0;
        }
        let apply = |v: &[f64], out: &mut [f64]| {
            let av = self.matvec_unchecked(v);
            self.rmatvec_into(&av, out);
        };
        let mut rq = power_iteration(q, &vec![1.0; q], apply);
        let max_norm = self.spectral_norms().into_iter().fold(0.0, f64::max);
        if rq < max_norm * max_norm * (1.0 - 1e-10) {
            // restart from the strongest block's columns
            let best = (0..self.num_blocks())
                .max_by(|&a, &b| self.norm_cached(a).total_cmp(&self.norm_cached(b)))
                .unwrap_or(0);
            let mut e = vec![0.0; q];
            for k in self.block_range(best) {
                e[k] = 1.0;
            }
            rq = rq.max(power_iteration(q, &e, apply));
        }
        rq.max(0.0).sqrt()
    }

    #[inline]
    pub(crate) fn norm_cached(&self, i: usize) -> f64 {
        *self.norms[i].get_or_init(|| self.compute_block_norm(i))
    }

    /// `A_i v`.
    pub fn block_matvec(&self, i: usize, v: &[f64]) -> Result<Vec<f64>> {
        self.check_block(i)?;
        Error::check_len("block_matvec input", self.blocks[i].width, v.len())?;
        let mut out = vec![0.0; self.rows];
        self.add_block_matvec_unchecked(i, v, 1.0, &mut out);
        Ok(out)
    }

    /// `out += alpha * A_i v`.
    pub fn add_block_matvec(&self, i: usize, v: &[f64], alpha: f64, out: &mut [f64]) -> Result<()> {
        self.check_block(i)?;
        Error::check_len("block_matvec input", self.blocks[i].width, v.len())?;
        Error::check_len("block_matvec output", self.rows, out.len())?;
        self.add_block_matvec_unchecked(i, v, alpha, out);
        Ok(())
    }

    #[inline]
    pub(crate) fn add_block_matvec_unchecked(&self, i: usize, v: &[f64], alpha: f64, out: &mut [f64]) {
        let block = &self.blocks[i];
        for (k, &vk) in v.iter().enumerate() {
            if vk == 0.0 {
                continue;
            }
            let s = alpha * vk;
            block.for_each_in_column(self.rows, k, |r, a| out[r] += s * a);
        }
    }

    /// `A_i^T x`.
    pub fn block_column_dot(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_block(i)?;
        Error::check_len("block_column_dot input", self.rows, x.len())?;
        let mut out = vec![0.0; self.blocks[i].width];
        self.block_column_dot_unchecked(i, x, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn block_column_dot_unchecked(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let block = &self.blocks[i];
        for (k, o) in out.iter_mut().enumerate() {
            *o = block.column_dot(self.rows, k, x);
        }
    }

    /// `A y` with `y` the stacked dual vector.
    pub fn matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("matvec input", self.total_cols(), y.len())?;
        Ok(self.matvec_unchecked(y))
    }

    fn matvec_unchecked(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for i in 0..self.num_blocks() {
            self.add_block_matvec_unchecked(i, &y[self.block_range(i)], 1.0, &mut out);
        }
        out
    }

    /// `A^T x`.
    pub fn rmatvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_len("rmatvec input", self.rows, x.len())?;
        let mut out = vec![0.0; self.total_cols()];
        self.rmatvec_into(x, &mut out);
        Ok(out)
    }

    fn rmatvec_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.num_blocks() {
            let range = self.block_range(i);
            self.block_column_dot_unchecked(i, x, &mut out[range]);
        }
    }

    /// Stored entries of global column `c` as `(row, value)` pairs.
    pub fn column_entries(&self, c: usize) -> Vec<(usize, f64)> {
        let i = match self.offsets.binary_search(&c) {
            Ok(pos) => pos,
            Err(pos) => pos - 1,
        };
        let k = c - self.offsets[i];
        let mut out = Vec::new();
        self.blocks[i].for_each_in_column(self.rows, k, |r, v| {
            if v != 0.0 {
                out.push((r, v))
            }
        });
        out
    }

    /// Dense column-major copy of block `i`.
    pub fn block_to_dense(&self, i: usize) -> Result<Vec<f64>> {
        self.check_block(i)?;
        let d = self.rows;
        let mut out = vec![0.0; d * self.blocks[i].width];
        for k in 0..self.blocks[i].width {
            self.blocks[i].for_each_in_column(d, k, |r, v| out[k * d + r] = v);
        }
        Ok(out)
    }

    /// Dense column-major copy of the whole matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let d = self.rows;
        let mut out = vec![0.0; d * self.total_cols()];
        for c in 0..self.total_cols() {
            for (r, v) in self.column_entries(c) {
                out[c * d + r] = v;
            }
        }
        out
    }

    pub fn widths(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.width).collect()
    }

    /// The sub-matrix made of the listed blocks, in the given order.
    pub fn select_blocks(&self, blocks: &[usize]) -> Result<Self> {
        let mut columns = Vec::new();
        let mut widths = Vec::with_capacity(blocks.len());
        for &i in blocks {
            self.check_block(i)?;
            widths.push(self.blocks[i].width);
            columns.extend(self.block_range(i).map(|c| self.column_entries(c)));
        }
        Self::from_columns(self.rows, columns, &widths)
    }

    /// Returns a copy with one extra trailing row set to `value` in every
    /// column. Norms are recomputed for the new matrix.
    pub fn with_constant_row(&self, value: f64) -> Result<Self> {
        let columns = (0..self.total_cols())
            .map(|c| {
                let mut col = self.column_entries(c);
                col.push((self.rows, value));
                col
            })
            .collect();
        Self::from_columns(self.rows + 1, columns, &self.widths())
    }
}

/// Power iteration for the top eigenvalue of a PSD operator. Returns the
/// final Rayleigh quotient.
fn power_iteration(dim: usize, start: &[f64], apply: impl Fn(&[f64], &mut [f64])) -> f64 {
    let mut v = start.to_vec();
    let norm = l2(&v);
    if norm == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    let mut w = vec![0.0; dim];
    let mut rq_prev = f64::NAN;
    let mut rq = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        apply(&v, &mut w);
        rq = dot(&v, &w);
        let wn = l2(&w);
        if wn == 0.0 {
            return 0.0;
        }
        if (rq - rq_prev).abs() <= POWER_REL_TOL * rq.abs() {
            break;
        }
        rq_prev = rq;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }
    rq
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
