use serde::{Deserialize, Serialize};

use crate::{Error, Result, StateId};

const ALIGN_TOL: f64 = 1e-9;

/// Tuning parameters of the uniform-grid abstraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub state_lo: Vec<f64>,
    pub state_hi: Vec<f64>,
    /// Cell widths.
    pub eta: Vec<f64>,
    /// Wrap-around per dimension (e.g. heading angles).
    pub periodic: Vec<bool>,
    /// The finite action set; action `i` applies `input_values[i]`.
    pub input_values: Vec<Vec<f64>>,
}

impl GridParams {
    pub fn dim(&self) -> usize {
        self.state_lo.len()
    }

    pub fn validate(&self) -> Result<Vec<usize>> {
        let n = self.state_lo.len();
        if n == 0 {
            return Err(Error::InvalidGrid("state dimension must be positive".into()));
        }
        if self.state_hi.len() != n || self.eta.len() != n || self.periodic.len() != n {
            return Err(Error::InvalidGrid(
                "state_lo, state_hi, eta and periodic must share one dimension".into(),
            ));
        }
        let mut counts = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi, eta) = (self.state_lo[i], self.state_hi[i], self.eta[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!("dimension {i}: need lo < hi")));
            }
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidGrid(format!("dimension {i}: eta must be positive")));
            }
            let ratio = (hi - lo) / eta;
            let cells = ratio.round();
            if (ratio - cells).abs() > ALIGN_TOL * cells.max(1.0) || cells < 1.0 {
                return Err(Error::InvalidGrid(format!(
                    "dimension {i}: extent {} is not a multiple of eta {eta}",
                    hi - lo
                )));
            }
            counts.push(cells as usize);
        }
        if self.input_values.is_empty() {
            return Err(Error::InvalidGrid("input list must not be empty".into()));
        }
        let m = self.input_values[0].len();
        if m == 0
            || self
                .input_values
                .iter()
                .any(|u| u.len() != m || u.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidGrid(
                "inputs must be finite vectors of one common dimension".into(),
            ));
        }
        Ok(counts)
    }
}

/// Relative distance (in cell widths) below which a box bound counts as
/// lying on a cell face.
pub const FACE_TOLERANCE: f64 = 1e-9;

/// The feedback refinement relation of a uniform grid: every point is
/// related to exactly one cell, or to the out-of-domain sink.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantizer {
    grid: GridParams,
    counts: Vec<usize>,
    strides: Vec<usize>,
    num_cells: usize,
}

impl Quantizer {
    pub fn new(grid: GridParams) -> Result<Self> {
        let counts = grid.validate()?;
        let mut strides = Vec::with_capacity(counts.len());
        let mut acc = 1usize;
        for &c in &counts {
            strides.push(acc);
            acc = acc
                .checked_mul(c)
                .ok_or_else(|| Error::InvalidGrid("too many cells".into()))?;
        }
        Ok(Self {
            grid,
            counts,
            strides,
            num_cells: acc,
        })
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    /// Cells plus the out-of-domain sink.
    pub fn num_states(&self) -> usize {
        self.num_cells + 1
    }

    pub fn out_of_domain(&self) -> StateId {
        self.num_cells
    }

    fn axis_index(&self, i: usize, v: f64) -> Option<usize> {
        let lo = self.grid.state_lo[i];
        let eta = self.grid.eta[i];
        let n = self.counts[i];
        if self.grid.periodic[i] {
            let period = self.grid.state_hi[i] - lo;
            let t = (v - lo).rem_euclid(period);
            Some(((t / eta).floor() as usize).min(n - 1))
        } else {
            if !(v >= lo && v < self.grid.state_hi[i]) {
                return None;
            }
            Some(((v - lo) / eta).floor().min((n - 1) as f64) as usize)
        }
    }

    /// The cell related to `x`; non-finite or out-of-range points map to the
    /// out-of-domain sink.
    pub fn quantize(&self, x: &[f64]) -> StateId {
        debug_assert_eq!(x.len(), self.dim());
        let mut id = 0;
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() {
                return self.out_of_domain();
            }
            match self.axis_index(i, v) {
                Some(k) => id += k * self.strides[i],
                None => return self.out_of_domain(),
            }
        }
        id
    }

    /// Per-dimension cell indices of `cell` (dimension 0 varies fastest).
    pub fn multi_index(&self, cell: StateId) -> Vec<usize> {
        assert!(cell < self.num_cells, "cell {cell} out of range");
        self.counts
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| (cell / s) % c)
            .collect()
    }

    pub fn cell_of(&self, index: &[usize]) -> Option<StateId> {
        if index.len() != self.dim() || index.iter().zip(&self.counts).any(|(i, c)| i >= c) {
            return None;
        }
        Some(index.iter().zip(&self.strides).map(|(i, s)| i * s).sum())
    }

    pub fn cell_center(&self, cell: StateId) -> Vec<f64> {
        self.multi_index(cell)
            .iter()
            .enumerate()
            .map(|(i, &k)| self.grid.state_lo[i] + (k as f64 + 0.5) * self.grid.eta[i])
            .collect()
    }

    pub fn cell_bounds(&self, cell: StateId) -> (Vec<f64>, Vec<f64>) {
        let idx = self.multi_index(cell);
        let lo: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| self.grid.state_lo[i] + k as f64 * self.grid.eta[i])
            .collect();
        let hi = lo.iter().zip(&self.grid.eta).map(|(l, e)| l + e).collect();
        (lo, hi)
    }

    /// Cells meeting the box `[lo, hi)` (cells are half-open), and whether the
    /// box leaves the domain on a non-periodic dimension.
    ///
    /// Bounds within [`FACE_TOLERANCE`] cell widths of a cell face are snapped
    /// onto it, so round-off in boxes that exactly fill cells does not add a
    /// neighboring cell.
    pub fn cells_meeting(&self, lo: &[f64], hi: &[f64]) -> (Vec<StateId>, bool) {
        let mut exits = false;
        let mut ranges: Vec<Vec<usize>> = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let s = self.grid.state_lo[i];
            let eta = self.grid.eta[i];
            let n = self.counts[i] as i64;
            let a = ((lo[i] - s) / eta + FACE_TOLERANCE).floor() as i64;
            let b = (((hi[i] - s) / eta - FACE_TOLERANCE).ceil() as i64 - 1).max(a);
            if self.grid.periodic[i] {
                if b - a + 1 >= n {
                    ranges.push((0..n as usize).collect());
                } else {
                    let mut r: Vec<usize> = (a..=b).map(|k| k.rem_euclid(n) as usize).collect();
                    r.sort_unstable();
                    r.dedup();
                    ranges.push(r);
                }
            } else {
                if a < 0 || b >= n {
                    exits = true;
                }
                let (a, b) = (a.max(0), b.min(n - 1));
                if a > b {
                    // entirely outside along this axis
                    return (Vec::new(), true);
                }
                ranges.push((a as usize..=b as usize).collect());
            }
        }
        let mut cells = vec![0usize];
        for (i, r) in ranges.iter().enumerate() {
            let mut next = Vec::with_capacity(cells.len() * r.len());
            for &base in &cells {
                for &k in r {
                    next.push(base + k * self.strides[i]);
                }
            }
            cells = next;
        }
        cells.sort_unstable();
        (cells, exits)
    }
}
