//! Benchmark datasets: samplers, noise injection, the built-in registry and CSV I/O.

mod registry;

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{Error, Result};
use crate::ops::EvalPolicy;

pub use registry::{get_benchmark, glob_match, registry, registry_names, select, BenchmarkEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplingKind {
    /// `U(a, b, c)`: `c` i.i.d. uniform draws per variable.
    #[serde(rename = "U")]
    Uniform,
    /// `E(a, b, c)`: `c` evenly spaced points, endpoints included.
    #[serde(rename = "E")]
    Even,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSpec {
    pub kind: SamplingKind,
    pub low: f64,
    pub high: f64,
    pub count: usize,
    pub seed: u64,
}

impl SamplingSpec {
    pub const fn uniform(low: f64, high: f64, count: usize) -> Self {
        SamplingSpec {
            kind: SamplingKind::Uniform,
            low,
            high,
            count,
            seed: 0,
        }
    }

    pub const fn even(low: f64, high: f64, count: usize) -> Self {
        SamplingSpec {
            kind: SamplingKind::Even,
            low,
            high,
            count,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        SamplingSpec { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low < self.high) || self.count < 1 {
            return Err(Error::Config(format!(
                "invalid sampling spec ({}, {}, {})",
                self.low, self.high, self.count
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for SamplingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.kind {
            SamplingKind::Uniform => "U",
            SamplingKind::Even => "E",
        };
        write!(f, "{tag}({}, {}, {})", self.low, self.high, self.count)
    }
}

/// Draws an `count x k` input matrix. Even grids are shared by all variables
/// (rows zipped, not a product grid).
pub fn sample(spec: &SamplingSpec, k: usize) -> Matrix {
    let c = spec.count;
    let mut m = Matrix::zeros(c, k);
    match spec.kind {
        SamplingKind::Uniform => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let dist = Uniform::new_inclusive(spec.low, spec.high).expect("low < high");
            for r in 0..c {
                for j in 0..k {
                    m.set(r, j, dist.sample(&mut rng));
                }
            }
        }
        SamplingKind::Even => {
            for r in 0..c {
                let v = if c == 1 {
                    spec.low
                } else if r == c - 1 {
                    spec.high
                } else {
                    spec.low + (spec.high - spec.low) * r as f64 / (c - 1) as f64
                };
                for j in 0..k {
                    m.set(r, j, v);
                }
            }
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub name: String,
    pub sampling: Option<SamplingSpec>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if x.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if y.len() != x.rows() {
            return Err(Error::Dimension {
                expected: x.rows(),
                actual: y.len(),
            });
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Config("dataset contains non-finite values".into()));
        }
        Ok(Dataset {
            x,
            y,
            name: name.into(),
            sampling: None,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.x.cols()
    }

    pub fn with_targets(&self, y: Vec<f64>) -> Dataset {
        Dataset { y, ..self.clone() }
    }
}

/// Samples inputs per the entry's spec (with `seed`) and evaluates the ground truth.
pub fn realize(entry: &BenchmarkEntry, seed: u64) -> Dataset {
    let spec = entry.spec.with_seed(seed);
    let x = sample(&spec, entry.k);
    let y = entry
        .expression
        .eval_batch(&x, &EvalPolicy::default())
        .expect("registry expressions match their k");
    Dataset {
        x,
        y,
        name: entry.name.to_string(),
        sampling: Some(spec),
    }
}

/// Adds i.i.d. `U(-level * span, level * span)` noise, `span = |max(y) - min(y)|`.
pub fn add_noise(y: &[f64], level: f64, seed: u64) -> Vec<f64> {
    let (lo, hi) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = (hi - lo).abs();
    let amp = level * span;
    if y.is_empty() || !(amp > 0.0) || !amp.is_finite() {
        return y.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-amp, amp).expect("amp > 0");
    y.iter().map(|&v| v + dist.sample(&mut rng)).collect()
}

fn expected_header(k: usize) -> Vec<String> {
    (1..=k)
        .map(|i| format!("x{i}"))
        .chain(["y".to_string()])
        .collect()
}

pub fn read_csv<R: Read>(reader: R, name: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() < 2 || header != expected_header(header.len() - 1) {
        return Err(Error::MalformedHeader(format!(
            "expected `x1,...,xk,y`, found `{}`",
            header.join(",")
        )));
    }
    let k = header.len() - 1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        if rec.len() != k + 1 {
            return Err(Error::BadCell {
                row,
                column: rec.len().min(k + 1),
                reason: format!("expected {} cells, found {}", k + 1, rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::BadCell {
                row,
                column: j + 1,
                reason: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row,
                    column: j + 1,
                    reason: format!("`{cell}` is not finite"),
                });
            }
            if j < k {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
    }
    let x = Matrix::new(ys.len(), k, xs)?;
    Dataset::new(x, ys, name)
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_csv(file, &name)
}

pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(expected_header(ds.num_vars()))?;
    for (row, y) in ds.x.iter_rows().zip(&ds.y) {
        let cells: Vec<String> = row
            .iter()
            .chain(std::iter::once(y))
            .map(|v| format!("{v:?}"))
            .collect();
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    write_csv(ds, BufWriter::new(File::create(path)?))
}
