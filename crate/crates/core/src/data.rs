//! Observational triples (z, x, y): CSV ingestion, whitening, and empirical
//! CDF / inverse-CDF queries used throughout the pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine transform recorded at load time so results can be mapped back to
/// original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Whitening {
    pub mean: f64,
    pub std: f64,
}

impl Whitening {
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    pub fn invert(&self, w: f64) -> f64 {
        self.std * w + self.mean
    }
}

/// Whitening statistics for all three variables.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct WhiteningStats {
    pub z: Whitening,
    pub x: Whitening,
    pub y: Whitening,
}

/// Whitened observations with the statistics needed to round-trip back to
/// original units. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dataset {
    z: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    whitening: WhiteningStats,
}

impl Dataset {
    /// Builds a dataset from original-unit columns, whitening each one.
    pub fn from_columns(z: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = z.len();
        if x.len() != n || y.len() != n {
            return Err(Error::InvalidParam(format!(
                "column lengths differ: z={}, x={}, y={}",
                n,
                x.len(),
                y.len()
            )));
        }
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        let (z, wz) = whiten_named(&z, "z")?;
        let (x, wx) = whiten_named(&x, "x")?;
        let (y, wy) = whiten_named(&y, "y")?;
        Ok(Self {
            z,
            x,
            y,
            whitening: WhiteningStats {
                z: wz,
                x: wx,
                y: wy,
            },
        })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Whitened instrument values.
    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Whitened treatment values.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Whitened outcome values.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn whitening(&self) -> &WhiteningStats {
        &self.whitening
    }
}

/// Column names used when reading a CSV file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub z: String,
    pub x: String,
    pub y: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            z: "z".into(),
            x: "x".into(),
            y: "y".into(),
        }
    }
}

/// Reads (z, x, y) from a CSV file with a header row and returns the
/// whitened dataset. Row order is preserved.
pub fn load_csv(path: impl AsRef<Path>, columns: &ColumnSpec) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
            },
            _ => Error::Csv(e),
        })?;

    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    let col_index = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
                header: header.clone(),
            })
    };
    let iz = col_index(&columns.z)?;
    let ix = col_index(&columns.x)?;
    let iy = col_index(&columns.y)?;

    let mut z = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based data rows, header excluded
        let row = row_idx + 1;
        let mut parse = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::NonNumeric {
                row,
                column: name.to_string(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row,
                    column: name.to_string(),
                });
            }
            Ok(v)
        };
        z.push(parse(iz, &columns.z)?);
        x.push(parse(ix, &columns.x)?);
        y.push(parse(iy, &columns.y)?);
    }
    Dataset::from_columns(z, x, y)
}

/// Whitens a vector: subtracts the mean and divides by the population
/// standard deviation, so the output has mean 0 and std 1.
pub fn whiten(values: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(Error::ZeroVariance {
            column: String::new(),
        });
    }
    let out = values.iter().map(|v| (v - mean) / std).collect();
    Ok((out, mean, std))
}

fn whiten_named(values: &[f64], name: &str) -> Result<(Vec<f64>, Whitening)> {
    match whiten(values) {
        Ok((out, mean, std)) => Ok((out, Whitening { mean, std })),
        Err(Error::ZeroVariance { .. }) => Err(Error::ZeroVariance {
            column: name.to_string(),
        }),
        Err(e) => Err(e),
    }
}

/// Piecewise-linear empirical CDF on sorted support points at plotting
/// positions (i-1)/(n-1), clamped to the data range at the endpoints.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    /// A single support point yields the degenerate constant distribution;
    /// empty input is an error.
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in CDF input"));
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }

    /// F(v), linearly interpolated between order statistics. For a value
    /// inside a tied block the highest plotting position of the block is
    /// returned, which keeps `inverse_cdf(cdf(v)) = v` on support points.
    pub fn cdf(&self, v: f64) -> f64 {
        let n = self.sorted.len();
        if n == 1 {
            return if v < self.sorted[0] { 0.0 } else { 1.0 };
        }
        if v <= self.sorted[0] {
            return 0.0;
        }
        if v >= self.sorted[n - 1] {
            return 1.0;
        }
        // rightmost i with sorted[i] <= v
        let i = match self
            .sorted
            .binary_search_by(|probe| probe.partial_cmp(&v).unwrap())
        {
            Ok(mut idx) => {
                while idx + 1 < n && self.sorted[idx + 1] == v {
                    idx += 1;
                }
                idx
            }
            Err(ins) => ins - 1,
        };
        let p_i = i as f64 / (n - 1) as f64;
        if self.sorted[i] == v {
            return p_i;
        }
        let step = 1.0 / (n - 1) as f64;
        p_i + step * (v - self.sorted[i]) / (self.sorted[i + 1] - self.sorted[i])
    }

    /// F^{-1}(q) for q in [0, 1]; values outside the interval are rejected.
    pub fn inverse_cdf(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::QuantileOutOfRange(q));
        }
        let n = self.sorted.len();
        if n == 1 {
            return Ok(self.sorted[0]);
        }
        let t = q * (n - 1) as f64;
        let i = (t.floor() as usize).min(n - 2);
        let frac = t - i as f64;
        Ok(self.sorted[i] + frac * (self.sorted[i + 1] - self.sorted[i]))
    }
}
