//! Dense connectivity matrices: generation, validation and the CSV file format.
//!
//! File format: `n` lines, each with `n` comma-separated weights, row-major.
//! Row `i` lists the incoming connections of neuron `i`; a zero weight means
//! no connection.
//!
//! Seeded generation uses SplitMix64 seeded directly with the user seed
//! (state = seed, reference `splitmix64.c` output). Entries are visited
//! row-major; entry `(i, j)` is connected iff `(next_u64() >> 11) * 2^-53 < p`.
//! Any language with a SplitMix64 reproduces the same matrix.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default gap-junction weight used when none is given.
pub const DEFAULT_WEIGHT: f64 = 0.04;

#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityMatrix {
    n: usize,
    weights: Vec<f64>,
}

impl ConnectivityMatrix {
    pub fn from_rows(n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::InputShape {
                what: "connectivity weights",
                expected: n * n,
                got: weights.len(),
            });
        }
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::Config(format!(
                "connectivity weight at ({}, {}) must be finite and >= 0, got {w}",
                k / n,
                k % n
            )));
        }
        Ok(ConnectivityMatrix { n, weights })
    }

    pub fn zeros(n: usize) -> Self {
        ConnectivityMatrix {
            n,
            weights: vec![0.0; n * n],
        }
    }

    pub fn all_to_all(n: usize, weight: f64) -> Result<Self> {
        Self::from_rows(n, vec![weight; n * n])
    }

    /// Each entry independently connected with probability `p`.
    pub fn fixed_density(n: usize, p: f64, seed: u64, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!("connection probability {p} outside [0, 1]")));
        }
        let mut rng = SplitMix64::seed_from_u64(seed);
        let weights = (0..n * n)
            .map(|_| {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                if u < p {
                    weight
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_rows(n, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Incoming weights of neuron `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn nonzero_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w != 0.0).count()
    }

    /// Fraction of nonzero entries, diagonal included.
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.nonzero_count() as f64 / (self.n * self.n) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n * self.n * 4);
        for i in 0..self.n {
            for (j, w) in self.row(i).iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{w}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let n = rows.len();
        let mut weights = Vec::with_capacity(n * n);
        for (r, line) in rows.iter().enumerate() {
            let mut cols = 0;
            for (c, field) in line.split(',').enumerate() {
                let w: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(path, r + 1, c + 1, format!("invalid weight {:?}", field.trim())))?;
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::parse(path, r + 1, c + 1, format!("weight {w} must be finite and >= 0")));
                }
                weights.push(w);
                cols += 1;
            }
            if cols != n {
                return Err(Error::parse(
                    path,
                    r + 1,
                    cols.min(n) + 1,
                    format!("expected {n} columns, found {cols}"),
                ));
            }
        }
        Self::from_rows(n, weights)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_csv().as_bytes())
    }
}

/// How a connectivity matrix is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConnectivitySpec {
    AllToAll {
        #[serde(default = "default_weight")]
        weight: f64,
    },
    FixedDensity {
        p: f64,
        seed: u64,
        #[serde(default = "default_weight")]
        weight: f64,
    },
    FromFile {
        path: PathBuf,
    },
}

fn default_weight() -> f64 {
    DEFAULT_WEIGHT
}

impl ConnectivitySpec {
    /// Chooses all-to-all for density 1 and seeded random otherwise.
    pub fn for_density(density: f64, seed: u64, weight: f64) -> Self {
        if density >= 1.0 {
            ConnectivitySpec::AllToAll { weight }
        } else {
            ConnectivitySpec::FixedDensity { p: density, seed, weight }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ConnectivitySpec::AllToAll { weight } | ConnectivitySpec::FixedDensity { weight, .. }
                if !weight.is_finite() || weight < 0.0 =>
            {
                Err(Error::Config(format!("weight {weight} must be finite and >= 0")))
            }
            ConnectivitySpec::FixedDensity { p, .. } if !(0.0..=1.0).contains(&p) => {
                Err(Error::Config(format!("connection probability {p} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// Builds the matrix for a network of `n` cells.
pub fn generate_connectivity(spec: &ConnectivitySpec, n: usize) -> Result<ConnectivityMatrix> {
    spec.validate()?;
    match spec {
        ConnectivitySpec::AllToAll { weight } => ConnectivityMatrix::all_to_all(n, *weight),
        ConnectivitySpec::FixedDensity { p, seed, weight } => ConnectivityMatrix::fixed_density(n, *p, *seed, *weight),
        ConnectivitySpec::FromFile { path } => {
            let m = ConnectivityMatrix::load(path)?;
            if m.n() != n {
                return Err(Error::Config(format!(
                    "{} holds a {}x{} matrix but the network has {n} cells",
                    path.display(),
                    m.n(),
                    m.n()
                )));
            }
            Ok(m)
        }
    }
}
