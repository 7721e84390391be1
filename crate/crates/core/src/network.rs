//! Communication matrices: construction, validation and the spectral
//! quantity `sigma2(W)`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const STRUCTURE_TOL: f64 = 1e-12;
/// `sigma2` at or above `1 - CONNECTIVITY_TOL` counts as disconnected.
const CONNECTIVITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingWeights {
    /// `1 / (k + 1)` on the closed neighborhood.
    Uniform,
    /// `1 / (1 + max(deg_i, deg_j))` on edges, remainder on the diagonal.
    Metropolis,
}

/// Square weight matrix with neighbor lists and a cached `sigma2` once
/// validated.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    w: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    sigma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub symmetric: bool,
    pub doubly_stochastic: bool,
    pub nonnegative: bool,
    pub connected: bool,
    pub sigma2: f64,
    pub max_asymmetry: f64,
    pub max_sum_defect: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.structure_ok() && self.connected
    }

    pub fn structure_ok(&self) -> bool {
        self.symmetric && self.doubly_stochastic && self.nonnegative
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.symmetric {
            out.push("symmetry");
        }
        if !self.doubly_stochastic {
            out.push("double stochasticity");
        }
        if !self.nonnegative {
            out.push("nonnegativity");
        }
        if !self.connected {
            out.push("connectivity (sigma2 < 1)");
        }
        out
    }
}

impl WeightMatrix {
    /// Unvalidated matrix from row-major entries.
    pub fn from_row_major(n: usize, w: Vec<f64>) -> Result<Self> {
        if n == 0 || w.len() != n * n {
            return Err(Error::InvalidTopology(format!(
                "expected {n}x{n} entries, got {}",
                w.len()
            )));
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| j != i && w[i * n + j] != 0.0).collect())
            .collect();
        Ok(WeightMatrix {
            n,
            w,
            neighbors,
            sigma2: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidTopology("matrix is not square".into()));
        }
        Self::from_row_major(n, rows.concat())
    }

    /// Ring over `n` agents, each linked to `k / 2` neighbors on either side.
    pub fn ring(n: usize, k: usize, weights: RingWeights) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidTopology(format!("ring needs n >= 3, got {n}")));
        }
        if k % 2 != 0 || k >= n {
            return Err(Error::InvalidTopology(format!(
                "ring degree must be even and below n; got k = {k}, n = {n}"
            )));
        }
        let half = k / 2;
        let mut w = vec![0.0; n * n];
        let edge = match weights {
            RingWeights::Uniform => 1.0 / (k as f64 + 1.0),
            // regular graph: max(deg_i, deg_j) = k
            RingWeights::Metropolis => 1.0 / (1.0 + k as f64),
        };
        for i in 0..n {
            for m in 1..=half {
                w[i * n + (i + m) % n] = edge;
                w[i * n + (i + n - m) % n] = edge;
            }
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[i * n + j]).sum();
            w[i * n + i] = match weights {
                RingWeights::Uniform => edge,
                RingWeights::Metropolis => 1.0 - off,
            };
        }
        Self::from_row_major(n, w)?.validated()
    }

    pub fn build_ring(n: usize, k: usize) -> Result<Self> {
        Self::ring(n, k, RingWeights::Uniform)
    }

    /// All entries `1 / n`.
    pub fn build_complete(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidTopology("complete graph needs n >= 1".into()));
        }
        Self::from_row_major(n, vec![1.0 / n as f64; n * n])?.validated()
    }

    /// Checks the structural properties and caches `sigma2`. Fails when the
    /// matrix is not symmetric, doubly stochastic and nonnegative; a
    /// disconnected matrix is accepted here and flagged by [`validate`].
    pub fn validated(mut self) -> Result<Self> {
        let report = validate(&self);
        if !report.structure_ok() {
            return Err(Error::InvalidTopology(format!(
                "failed checks: {}",
                report.failures().join(", ")
            )));
        }
        self.sigma2 = Some(report.sigma2);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.w[i * self.n..(i + 1) * self.n]
    }

    /// Indices `j != i` with `w_ij != 0`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Second-largest singular value (cached at validation).
    pub fn sigma2(&self) -> Result<f64> {
        self.sigma2
            .ok_or_else(|| Error::NotValidated("call `validated()` first".into()))
    }

    pub fn is_connected(&self) -> bool {
        self.sigma2.is_some_and(|s| s < 1.0 - CONNECTIVITY_TOL)
    }

    fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.w)
    }

    /// `sigma2` from the full singular value decomposition of `W`.
    pub fn sigma2_svd(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let mut sv: Vec<f64> = self.to_dmatrix().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv[1]
    }

    /// `sigma2` as the spectral radius of `W - (1/n) 1 1^T` via the
    /// symmetric eigensolver (valid for symmetric doubly stochastic `W`).
    pub fn sigma2_deflated(&self) -> f64 {
        let n = self.n as f64;
        let deflated = self.to_dmatrix().map(|x| x - 1.0 / n);
        let sym = (&deflated + deflated.transpose()) * 0.5;
        SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Parses `n` on the first line followed by `n` rows of `n`
    /// whitespace-separated reals. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("matrix header: {e}")))?;
        let mut data = Vec::with_capacity(n * n);
        for (row, line) in lines.by_ref().take(n).enumerate() {
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("matrix row {row}: {e}")))?;
            if values.len() != n {
                return Err(Error::Parse(format!(
                    "matrix row {row} has {} entries, expected {n}",
                    values.len()
                )));
            }
            data.extend(values);
        }
        if data.len() != n * n {
            return Err(Error::Parse(format!("expected {n} matrix rows")));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after matrix rows".into()));
        }
        Self::from_row_major(n, data)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Per-property check of a candidate communication matrix.
pub fn validate(w: &WeightMatrix) -> ValidationReport {
    let n = w.n;
    let mut max_asym: f64 = 0.0;
    let mut max_sum: f64 = 0.0;
    let mut nonneg = true;
    for i in 0..n {
        let mut row = 0.0;
        let mut col = 0.0;
        for j in 0..n {
            let wij = w.weight(i, j);
            max_asym = max_asym.max((wij - w.weight(j, i)).abs());
            nonneg &= wij >= 0.0;
            row += wij;
            col += w.weight(j, i);
        }
        max_sum = max_sum.max((row - 1.0).abs()).max((col - 1.0).abs());
    }
    let sigma2 = w.sigma2_svd();
    ValidationReport {
        symmetric: max_asym < STRUCTURE_TOL,
        doubly_stochastic: max_sum < STRUCTURE_TOL,
        nonnegative: nonneg,
        connected: sigma2 < 1.0 - CONNECTIVITY_TOL,
        sigma2,
        max_asymmetry: max_asym,
        max_sum_defect: max_sum,
    }
}
