//! Time grids, coupled Brownian paths on the finest dyadic grid, Rademacher
//! sequences and scheme trajectories.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::num;
use crate::rng;
use crate::{Error, Result};

/// Regular subdivision of [0, T] into N steps; node k sits at k·T/N
/// (computed directly, never accumulated).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || steps == 0 {
            return Err(Error::Config(format!(
                "grid needs T > 0 and N >= 1, got T={horizon}, N={steps}"
            )));
        }
        Ok(TimeGrid { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        k as f64 * self.horizon / self.steps as f64
    }
}

/// Increments of a d-dimensional Brownian motion on a fine dyadic grid.
///
/// The path stores the Brownian values W at the fine nodes (a prefix sum of
/// the generated increments). Coarse increments for any divisor grid are
/// differences of those stored values, so coarsening is associative
/// bit-for-bit: coarsening to N and then to N/2 equals coarsening straight
/// to N/2.
#[derive(Clone, Debug)]
pub struct BrownianPath {
    brownian_dim: usize,
    grid: TimeGrid,
    /// d × (N_fine + 1), row j holds W^j at the fine nodes.
    values: Vec<f64>,
    seed: u64,
    path_index: u64,
}

impl BrownianPath {
    /// Generate the path for `(seed, path_index)`. Increment (j, k) is a pure
    /// function of (seed, path_index, stream j, counter k); N(0, h) via the
    /// inverse CDF.
    pub fn sample(seed: u64, path_index: u64, brownian_dim: usize, grid: TimeGrid) -> Self {
        let n = grid.steps();
        let sd = num::sqrt(grid.step_size());
        let mut values = vec![0.0; brownian_dim * (n + 1)];
        for j in 0..brownian_dim {
            let row = j * (n + 1);
            let mut acc = 0.0;
            for k in 0..n {
                let z = rng::standard_normal(
                    seed,
                    path_index,
                    rng::STREAM_BROWNIAN_BASE + j as u64,
                    k as u64,
                );
                acc += sd * z;
                values[row + k + 1] = acc;
            }
        }
        BrownianPath {
            brownian_dim,
            grid,
            values,
            seed,
            path_index,
        }
    }

    pub fn brownian_dim(&self) -> usize {
        self.brownian_dim
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// W^j at fine node k.
    pub fn value(&self, j: usize, k: usize) -> f64 {
        self.values[j * (self.grid.steps() + 1) + k]
    }

    /// Increments aggregated onto a coarse grid of `n` steps; `n` must divide
    /// the fine step count. Row-major d × n.
    pub fn increments(&self, n: usize) -> Result<Vec<f64>> {
        let fine = self.grid.steps();
        if n == 0 || fine % n != 0 {
            return Err(Error::Config(format!(
                "coarse step count {n} does not divide fine count {fine}"
            )));
        }
        let ratio = fine / n;
        let mut out = vec![0.0; self.brownian_dim * n];
        for j in 0..self.brownian_dim {
            for k in 0..n {
                out[j * n + k] = self.value(j, (k + 1) * ratio) - self.value(j, k * ratio);
            }
        }
        Ok(out)
    }

    /// A standalone path on the coarse grid carrying the aggregated values.
    pub fn coarsen(&self, n: usize) -> Result<BrownianPath> {
        let fine = self.grid.steps();
        if n == 0 || fine % n != 0 {
            return Err(Error::Config(format!(
                "coarse step count {n} does not divide fine count {fine}"
            )));
        }
        let ratio = fine / n;
        let mut values = vec![0.0; self.brownian_dim * (n + 1)];
        for j in 0..self.brownian_dim {
            for k in 0..=n {
                values[j * (n + 1) + k] = self.value(j, k * ratio);
            }
        }
        Ok(BrownianPath {
            brownian_dim: self.brownian_dim,
            grid: TimeGrid::new(self.grid.horizon(), n)?,
            values,
            seed: self.seed,
            path_index: self.path_index,
        })
    }
}

/// I.i.d. ±1 coins for the flow-ordering randomization, on a stream disjoint
/// from the Brownian one.
#[derive(Clone, Debug)]
pub struct RademacherSeq {
    values: Vec<i8>,
    seed: u64,
    path_index: u64,
}

impl RademacherSeq {
    pub fn sample(seed: u64, path_index: u64, n: usize) -> Self {
        let values = (0..n)
            .map(|k| rng::rademacher(seed, path_index, k as u64))
            .collect();
        RademacherSeq {
            values,
            seed,
            path_index,
        }
    }

    /// Constant sequence (used by the commuting variant and for tests).
    pub fn constant(value: i8, n: usize) -> Self {
        RademacherSeq {
            values: vec![value; n],
            seed: 0,
            path_index: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// η_{k+1} for step k (0-based).
    pub fn coin(&self, k: usize) -> i8 {
        self.values[k]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }
}

/// Scheme output at grid nodes; row k is the state at t_k.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn from_initial(grid: TimeGrid, x0: &[f64]) -> Self {
        let dim = x0.len();
        let mut states = vec![0.0; (grid.steps() + 1) * dim];
        states[..dim].copy_from_slice(x0);
        Trajectory { grid, dim, states }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn set_state(&mut self, k: usize, x: &[f64]) {
        self.states[k * self.dim..(k + 1) * self.dim].copy_from_slice(x);
    }

    pub fn terminal(&self) -> &[f64] {
        self.state(self.grid.steps())
    }

    /// Restrict to a divisor grid, keeping every ratio-th node.
    pub fn subsample(&self, n: usize) -> Result<Trajectory> {
        let fine = self.grid.steps();
        if n == 0 || fine % n != 0 {
            return Err(Error::Config(format!(
                "subsample count {n} does not divide step count {fine}"
            )));
        }
        let ratio = fine / n;
        let grid = TimeGrid::new(self.grid.horizon(), n)?;
        let mut out = Trajectory::from_initial(grid, self.state(0));
        for k in 1..=n {
            out.set_state(k, self.state(k * ratio));
        }
        Ok(out)
    }
}
