//! Periodic collocation grids and their frequency lattices.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One lattice frequency. `k` holds integer wavenumbers (unused axes are 0);
/// bit `a` of `nyquist` is set when axis `a` sits on the Nyquist index,
/// whose wavenumber is ambiguous between `+N/2` and `-N/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mode {
    pub k: [i64; 3],
    pub nyquist: u8,
}

impl Mode {
    pub fn is_nyquist(&self) -> bool {
        self.nyquist != 0
    }

    pub fn is_zero(&self) -> bool {
        self.k == [0, 0, 0] && self.nyquist == 0
    }
}

struct Tables {
    modes: Vec<Mode>,
    neg: Vec<usize>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
}

/// A uniform periodic grid on the torus `[0, period)^n`.
#[derive(Clone)]
pub struct Grid {
    n_dims: usize,
    resolution: usize,
    period: f64,
    tables: Arc<Tables>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n_dims: usize,
    pub resolution: usize,
    #[serde(default = "default_period")]
    pub period: f64,
}

fn default_period() -> f64 {
    2.0 * PI
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n_dims", &self.n_dims)
            .field("resolution", &self.resolution)
            .field("period", &self.period)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_dims == other.n_dims
            && self.resolution == other.resolution
            && self.period.to_bits() == other.period.to_bits()
    }
}

impl Grid {
    pub fn new(n_dims: usize, resolution: usize) -> Result<Self> {
        Self::with_period(n_dims, resolution, 2.0 * PI)
    }

    pub fn with_period(n_dims: usize, resolution: usize, period: f64) -> Result<Self> {
        if !(2..=3).contains(&n_dims) {
            return Err(Error::param("n_dims", format!("{n_dims} is not 2 or 3")));
        }
        if resolution < 8 || !resolution.is_power_of_two() {
            return Err(Error::param(
                "resolution",
                format!("{resolution} must be a power of two and at least 8"),
            ));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::param("period", format!("{period} must be positive")));
        }
        let len = resolution.pow(n_dims as u32);
        let half = resolution / 2;
        let wave = |i: usize| -> (i64, bool) {
            if i < half {
                (i as i64, false)
            } else if i == half {
                (half as i64, true)
            } else {
                (i as i64 - resolution as i64, false)
            }
        };
        let mut modes = Vec::with_capacity(len);
        let mut neg = Vec::with_capacity(len);
        for idx in 0..len {
            let mut rem = idx;
            let mut k = [0i64; 3];
            let mut nyq = 0u8;
            let mut neg_idx = 0usize;
            for axis in (0..n_dims).rev() {
                let i = rem % resolution;
                rem /= resolution;
                let (w, is_nyq) = wave(i);
                k[axis] = w;
                if is_nyq {
                    nyq |= 1 << axis;
                }
                let ni = (resolution - i) % resolution;
                neg_idx += ni * resolution.pow((n_dims - 1 - axis) as u32);
            }
            modes.push(Mode { k, nyquist: nyq });
            neg.push(neg_idx);
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(resolution);
        let fft_inv = planner.plan_fft_inverse(resolution);
        Ok(Grid {
            n_dims,
            resolution,
            period,
            tables: Arc::new(Tables {
                modes,
                neg,
                fft_fwd,
                fft_inv,
            }),
        })
    }

    pub fn from_params(p: &GridParams) -> Result<Self> {
        Self::with_period(p.n_dims, p.resolution, p.period)
    }

    pub fn params(&self) -> GridParams {
        GridParams {
            n_dims: self.n_dims,
            resolution: self.resolution,
            period: self.period,
        }
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of collocation points (equivalently lattice modes).
    pub fn len(&self) -> usize {
        self.tables.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Wavenumber scale `2π / period`.
    pub fn scale(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.n_dims as i32)
    }

    pub fn cell_volume(&self) -> f64 {
        (self.period / self.resolution as f64).powi(self.n_dims as i32)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.tables.modes
    }

    pub fn mode(&self, idx: usize) -> Mode {
        self.tables.modes[idx]
    }

    /// Index of `-ξ`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.tables.neg[idx]
    }

    /// Largest integer wavenumber kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.resolution / 3) as i64
    }

    /// Whether a mode survives 2/3-rule dealiasing.
    pub fn dealias_keep(&self, idx: usize) -> bool {
        let m = self.tables.modes[idx];
        if m.is_nyquist() {
            return false;
        }
        let c = self.dealias_cutoff();
        m.k[..self.n_dims].iter().all(|k| k.abs() <= c)
    }

    /// Collocation index for the integer wavevector `k`, if it lies on the
    /// lattice. `±N/2` both map to the Nyquist index.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.n_dims {
            return None;
        }
        let n = self.resolution as i64;
        let mut idx = 0usize;
        for &ki in k {
            if ki.abs() > n / 2 {
                return None;
            }
            let i = ki.rem_euclid(n) as usize;
            idx = idx * self.resolution + i;
        }
        Some(idx)
    }

    /// Physical coordinate of collocation point `idx`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.period / self.resolution as f64;
        let mut rem = idx;
        let mut x = [0.0; 3];
        for axis in (0..self.n_dims).rev() {
            x[axis] = (rem % self.resolution) as f64 * h;
            rem /= self.resolution;
        }
        x
    }

    /// Calls `f` with every real wavevector representing mode `idx`: one for
    /// ordinary modes, `2^m` for modes on `m` Nyquist planes (`±N/2` per axis).
    pub fn for_each_representative(&self, idx: usize, mut f: impl FnMut(&[f64])) {
        let m = self.tables.modes[idx];
        let s = self.scale();
        let mut xi = [0.0; 3];
        for a in 0..self.n_dims {
            xi[a] = m.k[a] as f64 * s;
        }
        if m.nyquist == 0 {
            f(&xi[..self.n_dims]);
            return;
        }
        let axes: Vec<usize> = (0..self.n_dims).filter(|a| m.nyquist & (1 << a) != 0).collect();
        for mask in 0..(1u32 << axes.len()) {
            for (bit, &a) in axes.iter().enumerate() {
                let sign = if mask & (1 << bit) != 0 { -1.0 } else { 1.0 };
                xi[a] = sign * m.k[a] as f64 * s;
            }
            f(&xi[..self.n_dims]);
        }
    }

    /// Evaluates a complex symbol at mode `idx`, averaging over Nyquist
    /// representatives so that symbols with `m(-ξ) = conj m(ξ)` keep real
    /// fields real.
    pub fn eval_symbol<F: Fn(&[f64]) -> Complex64>(&self, idx: usize, m: &F) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        self.for_each_representative(idx, |xi| {
            acc += m(xi);
            count += 1;
        });
        acc / count as f64
    }

    /// Real symbol table over the whole lattice (Nyquist-averaged).
    pub fn symbol_table<F: Fn(&[f64]) -> f64>(&self, m: F) -> Vec<f64> {
        (0..self.len())
            .map(|idx| {
                let mut acc = 0.0;
                let mut count = 0usize;
                self.for_each_representative(idx, |xi| {
                    acc += m(xi);
                    count += 1;
                });
                acc / count as f64
            })
            .collect()
    }

    /// Unnormalised n-dimensional forward DFT (`e^{-i}` kernel), in place.
    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.fft_nd(buf, &self.tables.fft_fwd);
    }

    /// Unnormalised n-dimensional inverse DFT (`e^{+i}` kernel), in place.
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.fft_nd(buf, &self.tables.fft_inv);
    }

    fn fft_nd(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.resolution;
        debug_assert_eq!(buf.len(), self.len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // last axis is contiguous: rustfft batches consecutive chunks
        plan.process_with_scratch(buf, &mut scratch);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for axis in 0..self.n_dims - 1 {
            let stride = n.pow((self.n_dims - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..buf.len()).step_by(block) {
                for off in 0..stride {
                    let start = base + off;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = buf[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        buf[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}
