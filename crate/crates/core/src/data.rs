//! Datasets: the synthetic Gaussian ridge generator, LIBSVM text files and
//! bias augmentation.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::blockmat::BlockMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub name: String,
    pub n: usize,
    pub d: usize,
    /// Fraction of non-zero feature entries.
    pub sparsity: f64,
}

/// Samples stored as the columns of a block matrix, one block per sample,
/// with one label per column.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub matrix: BlockMatrix,
    pub labels: Vec<f64>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(name: impl Into<String>, matrix: BlockMatrix, labels: Vec<f64>) -> Result<Self> {
        Error::check_len("dataset labels", matrix.total_cols(), labels.len())?;
        let n = matrix.num_blocks();
        let d = matrix.rows();
        let cells = (matrix.total_cols() * d).max(1) as f64;
        let meta = DatasetMeta {
            name: name.into(),
            n,
            d,
            sparsity: matrix.nnz() as f64 / cells,
        };
        Ok(Dataset {
            matrix,
            labels,
            meta,
        })
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn d(&self) -> usize {
        self.meta.d
    }

    pub fn is_binary(&self) -> bool {
        self.labels.iter().all(|&b| b == 1.0 || b == -1.0)
    }
}

/// Gaussian regression data: `a ~ N(0, diag(j^-2))`, `b = a^T 1 + eps`,
/// `eps ~ N(0, 1)`.
pub fn generate_synthetic(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("synthetic data needs n, d >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale: Vec<f64> = (1..=d).map(|j| 1.0 / j as f64).collect();
    let mut columns = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut col = Vec::with_capacity(d);
        let mut b = 0.0;
        for (j, s) in scale.iter().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let v = z * s;
            b += v;
            col.push((j, v));
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        labels.push(b + eps);
        columns.push(col);
    }
    let matrix = BlockMatrix::from_sample_columns(d, columns)?;
    Dataset::new(format!("synthetic-n{n}-d{d}-s{seed}"), matrix, labels)
}

/// Parses LIBSVM text: `<label> <index>:<value> ...` with 1-based, strictly
/// increasing indices. Blank lines and `#` comments are skipped.
///
/// Labels drawn only from `{0, 1}` are mapped to `{-1, +1}`; other label
/// sets are kept as given. `dim` pins the feature count, which must cover
/// every index in the file.
pub fn parse_libsvm<R: BufRead>(source: R, dim: Option<usize>) -> Result<Dataset> {
    let mut columns: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in source.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("non-empty line has a token");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| perr(format!("bad label '{label_tok}'")))?;
        if !label.is_finite() {
            return Err(perr(format!("non-finite label '{label_tok}'")));
        }
        let mut col = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected index:value, found '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| perr(format!("bad feature index '{idx}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| perr(format!("bad feature value '{val}'")))?;
            if idx == 0 {
                return Err(perr("feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(perr(format!(
                    "feature indices must be strictly increasing ({idx} after {last})"
                )));
            }
            if !val.is_finite() {
                return Err(perr(format!("non-finite value for feature {idx}")));
            }
            last = idx;
            if val != 0.0 {
                col.push((idx - 1, val));
            }
        }
        max_index = max_index.max(last);
        labels.push(label);
        columns.push(col);
    }
    if labels.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no samples found".into(),
        });
    }
    let d = match dim {
        Some(d) if d < max_index => {
            return Err(Error::invalid(format!(
                "dimension {d} is smaller than the largest feature index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index,
    };
    if d == 0 {
        return Err(Error::invalid("dataset has no features; pin a dimension"));
    }
    if labels.iter().all(|&b| b == 0.0 || b == 1.0) && labels.contains(&0.0) {
        for b in &mut labels {
            *b = 2.0 * *b - 1.0;
        }
    }
    let matrix = BlockMatrix::from_sample_columns(d, columns)?;
    Dataset::new("libsvm", matrix, labels)
}

/// Loads a LIBSVM file; `.gz` files are decompressed.
pub fn load_libsvm(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let mut ds = parse_libsvm(BufReader::new(reader), dim)?;
    ds.meta.name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "libsvm".into());
    Ok(ds)
}

/// Writes one LIBSVM line per column. Values use the shortest round-trip
/// representation.
pub fn write_libsvm<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    for (c, label) in dataset.labels.iter().enumerate() {
        write!(out, "{label}")?;
        for (r, v) in dataset.matrix.column_entries(c) {
            write!(out, " {}:{v}", r + 1)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Appends a constant-1 feature to every sample (`d -> d + 1`). Applying it
/// twice appends two such features.
pub fn add_bias(dataset: &Dataset) -> Result<Dataset> {
    let matrix = dataset.matrix.with_constant_row(1.0)?;
    let mut ds = Dataset::new(dataset.meta.name.clone(), matrix, dataset.labels.clone())?;
    ds.meta.name = format!("{}+bias", dataset.meta.name);
    Ok(ds)
}
