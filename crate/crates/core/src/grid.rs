//! Polar annular grids over the hyperbolic plane and sections stored on them.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModelParams;

/// Uniform grid on `{rho_min ≤ ρ ≤ rho_max}` with periodic angle.
///
/// Nodes are stored ρ-major: node `(i, j)` has index `i * n_theta + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnularGrid {
    pub rho_min: f64,
    pub rho_max: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl AnnularGrid {
    pub fn new(rho_min: f64, rho_max: f64, n_rho: usize, n_theta: usize) -> Result<Self> {
        if !(rho_min > 0.0 && rho_max > rho_min && rho_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "annulus needs 0 < rho_min < rho_max, got [{rho_min}, {rho_max}]"
            )));
        }
        if n_rho < 3 || n_theta < 8 {
            return Err(Error::InvalidInput(format!(
                "grid needs n_rho >= 3 and n_theta >= 8, got {n_rho} x {n_theta}"
            )));
        }
        Ok(Self {
            rho_min,
            rho_max,
            n_rho,
            n_theta,
        })
    }

    /// Same annulus with both spacings halved.
    pub fn refined(&self) -> Self {
        Self {
            n_rho: 2 * self.n_rho - 1,
            n_theta: 2 * self.n_theta,
            ..*self
        }
    }

    pub fn len(&self) -> usize {
        self.n_rho * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn d_rho(&self) -> f64 {
        (self.rho_max - self.rho_min) / (self.n_rho - 1) as f64
    }

    pub fn d_theta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn rho(&self, i: usize) -> f64 {
        if i + 1 == self.n_rho {
            self.rho_max
        } else {
            self.rho_min + i as f64 * self.d_rho()
        }
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.d_theta()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// `(i, j)` of a node index.
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.n_theta, k % self.n_theta)
    }

    pub fn jp(&self, j: usize) -> usize {
        if j + 1 == self.n_theta {
            0
        } else {
            j + 1
        }
    }

    pub fn jm(&self, j: usize) -> usize {
        if j == 0 {
            self.n_theta - 1
        } else {
            j - 1
        }
    }

    pub fn is_boundary_row(&self, i: usize) -> bool {
        i == 0 || i + 1 == self.n_rho
    }

    /// Area weight `sinh ρ Δρ Δθ` attached to each node row.
    pub fn node_area(&self, i: usize) -> f64 {
        self.rho(i).sinh() * self.d_rho() * self.d_theta()
    }

    /// Number of interior (non-Dirichlet) nodes.
    pub fn n_interior(&self) -> usize {
        (self.n_rho - 2) * self.n_theta
    }

    /// Position of node `(i, j)` in the interior numbering, `i` in `1..n_rho-1`.
    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        if self.is_boundary_row(i) {
            None
        } else {
            Some((i - 1) * self.n_theta + j)
        }
    }

    /// Index of the row whose radius equals `rho` to within a tenth of a cell.
    pub fn row_of(&self, rho: f64) -> Option<usize> {
        let x = (rho - self.rho_min) / self.d_rho();
        let i = x.round();
        if i < 0.0 || i as usize >= self.n_rho || (x - i).abs() > 0.1 {
            None
        } else {
            Some(i as usize)
        }
    }
}

/// A height function on an annular grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSection {
    pub grid: AnnularGrid,
    pub params: ModelParams,
    pub values: Vec<f64>,
}

impl GridSection {
    pub fn new(grid: AnnularGrid, params: ModelParams, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "section has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite height at node {k}")));
        }
        Ok(Self { grid, params, values })
    }

    pub fn from_fn(grid: AnnularGrid, params: ModelParams, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_rho {
            let rho = grid.rho(i);
            for j in 0..grid.n_theta {
                values.push(f(rho, grid.theta(j)));
            }
        }
        Self::new(grid, params, values)
    }

    pub fn constant(grid: AnnularGrid, params: ModelParams, c: f64) -> Result<Self> {
        Self::new(grid, params, vec![c; grid.len()])
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n_theta;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, self.params, values)
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }

    /// Restriction to the rows `lo..=hi`, as a section on the sub-annulus.
    pub fn restrict_rows(&self, lo: usize, hi: usize) -> Result<Self> {
        let g = &self.grid;
        let sub = AnnularGrid::new(g.rho(lo), g.rho(hi), hi - lo + 1, g.n_theta)?;
        let values = self.values[g.idx(lo, 0)..g.idx(hi, 0) + g.n_theta].to_vec();
        Self::new(sub, self.params, values)
    }
}

/// One row of the grid dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub rho: f64,
    pub theta: f64,
    pub sigma: f64,
    #[serde(rename = "G_rho")]
    pub g_rho: f64,
    #[serde(rename = "G_theta")]
    pub g_theta: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub nu: f64,
    #[serde(rename = "H")]
    pub h: f64,
}

pub fn write_records<W: Write>(records: &[GridRecord], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Parses a grid dump and reconstructs the grid and heights.
///
/// The grid is inferred from the records: the angular count is the length of
/// the first run of equal radii, and both spacings must be uniform.
pub fn read_section_csv<R: Read>(input: R, params: ModelParams) -> Result<GridSection> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut records = Vec::new();
    for rec in rdr.deserialize::<GridRecord>() {
        records.push(rec?);
    }
    let first = records.first().ok_or_else(|| Error::Parse("empty grid dump".into()))?;
    let n_theta = records.iter().take_while(|r| r.rho == first.rho).count();
    if n_theta == 0 || records.len() % n_theta != 0 {
        return Err(Error::Parse("grid dump is not a full tensor grid".into()));
    }
    let n_rho = records.len() / n_theta;
    let rho_max = records[records.len() - 1].rho;
    let grid = AnnularGrid::new(first.rho, rho_max, n_rho, n_theta).map_err(|e| Error::Parse(e.to_string()))?;
    let tol = 1e-9 * (1.0 + rho_max);
    for (k, r) in records.iter().enumerate() {
        let (i, j) = grid.ij(k);
        if (r.rho - grid.rho(i)).abs() > tol || (r.theta - grid.theta(j)).abs() > 1e-9 {
            return Err(Error::Parse(format!("record {k} is off the uniform grid")));
        }
    }
    GridSection::new(grid, params, records.iter().map(|r| r.sigma).collect()).map_err(|e| Error::Parse(e.to_string()))
}
