//! Uniform energy grids and sampled functions on them.
//!
//! The EELS forward model and the inversion pipeline all operate on the same
//! detector-style grid: uniform spacing, grid points at integer multiples of
//! the step so that a grid-aligned delta convolves into an exact shift.

use rustfft::{num_complex::Complex64, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid must have at least 2 points, got {0}")]
    TooShort(usize),
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grid start {start} is not an integer multiple of step {step}")]
    Misaligned { start: f64, step: f64 },
    #[error("grids do not match: {0}")]
    Mismatch(String),
    #[error("value length {got} does not match grid length {want}")]
    LengthMismatch { got: usize, want: usize },
}

/// Uniform grid start + i*step for i in 0..len.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self, GridError> {
        if len < 2 {
            return Err(GridError::TooShort(len));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(GridError::BadStep(step));
        }
        Ok(Self { start, step, len })
    }

    /// Closed range [lo, hi] with the given step; hi is included when it lands
    /// on the grid.
    pub fn from_range(lo: f64, hi: f64, step: f64) -> Result<Self, GridError> {
        let len = ((hi - lo) / step).round() as usize + 1;
        Self::new(lo, step, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.value(i)).collect()
    }

    /// Index of the grid point nearest to x (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = ((x - self.start) / self.step).round();
        i.clamp(0.0, (self.len - 1) as f64) as usize
    }

    /// Signed integer offset of u = 0 from the grid start, in steps.
    /// Convolution needs grid points at integer multiples of the step.
    fn zero_offset(&self) -> Result<i64, GridError> {
        let offset = self.start / self.step;
        if (offset - offset.round()).abs() > 1e-6 {
            return Err(GridError::Misaligned {
                start: self.start,
                step: self.step,
            });
        }
        Ok(offset.round() as i64)
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.len == other.len
            && (self.start - other.start).abs() <= 1e-9 * self.step
            && (self.step - other.step).abs() <= 1e-12 * self.step
    }
}

/// A real-valued function sampled on a [`UniformGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: UniformGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::LengthMismatch {
                got: values.len(),
                want: grid.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: UniformGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Unit-area delta at the grid point nearest to x.
    pub fn delta_at(grid: UniformGrid, x: f64) -> Self {
        let mut v = vec![0.0; grid.len()];
        v[grid.nearest_index(x)] = 1.0 / grid.step();
        Self { grid, values: v }
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Trapezoid-free Riemann area: sum(values) * step.
    pub fn area(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.step()
    }

    pub fn mean_abscissa(&self) -> f64 {
        let a = self.area();
        if a == 0.0 {
            return 0.0;
        }
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.value(i) * v)
            .sum::<f64>()
            * self.grid.step()
            / a
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Rescale in place so the area is exactly 1. Returns the old area.
    pub fn normalize_to_unit_area(&mut self) -> f64 {
        let a = self.area();
        if a != 0.0 {
            for v in &mut self.values {
                *v /= a;
            }
        }
        a
    }

    /// Linear interpolation; zero outside the grid span.
    pub fn interp(&self, x: f64) -> f64 {
        let t = (x - self.grid.start()) / self.grid.step();
        if t < 0.0 || t > (self.grid.len() - 1) as f64 {
            return 0.0;
        }
        let i = t.floor() as usize;
        if i + 1 >= self.grid.len() {
            return self.values[self.grid.len() - 1];
        }
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    /// Resample onto another grid by linear interpolation, zero outside.
    pub fn resampled(&self, grid: UniformGrid) -> Self {
        let values = (0..grid.len())
            .map(|i| self.interp(grid.value(i)))
            .collect();
        Self { grid, values }
    }

    /// Index and refined abscissa/value of the global maximum, using 3-point
    /// parabolic interpolation around the grid maximum.
    pub fn refined_peak(&self) -> (usize, f64, f64) {
        let mut j = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[j] {
                j = i;
            }
        }
        let (x, y) = refine_parabolic(&self.values, j, self.grid.start(), self.grid.step());
        (j, x, y)
    }

    /// Full width at half maximum via linear interpolation of the half-max
    /// crossings on both sides of the global maximum. None if a side never
    /// drops below half maximum inside the grid.
    pub fn fwhm(&self) -> Option<f64> {
        let j = self.refined_peak().0;
        let half = self.values[j] / 2.0;
        let mut lo = None;
        for i in (1..=j).rev() {
            if self.values[i - 1] < half && half <= self.values[i] {
                let f = (half - self.values[i - 1]) / (self.values[i] - self.values[i - 1]);
                lo = Some(self.grid.value(i - 1) + f * self.grid.step());
                break;
            }
        }
        let mut hi = None;
        for i in j..self.grid.len() - 1 {
            if self.values[i + 1] < half && half <= self.values[i] {
                let f = (self.values[i] - half) / (self.values[i] - self.values[i + 1]);
                hi = Some(self.grid.value(i) + f * self.grid.step());
                break;
            }
        }
        match (lo, hi) {
            (Some(a), Some(b)) => Some(b - a),
            _ => None,
        }
    }

    /// Discrete linear convolution scaled by the grid step, cropped back to
    /// the common grid. Mass convolved past the grid ends is dropped.
    ///
    /// Computed in the transform domain with zero padding to at least twice
    /// the grid length, so wrap-around can never occur.
    pub fn convolve(&self, other: &Self) -> Result<Self, GridError> {
        if !self.grid.same_as(&other.grid) {
            return Err(GridError::Mismatch(format!(
                "lhs start={} step={} len={}, rhs start={} step={} len={}",
                self.grid.start(),
                self.grid.step(),
                self.grid.len(),
                other.grid.start(),
                other.grid.step(),
                other.grid.len()
            )));
        }
        let i0 = self.grid.zero_offset()?;
        let n = self.grid.len();
        let m = (2 * n).next_power_of_two();
        let mut fa: Vec<Complex64> = self
            .values
            .iter()
            .map(|v| Complex64::new(*v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(m)
            .collect();
        let mut fb: Vec<Complex64> = other
            .values
            .iter()
            .map(|v| Complex64::new(*v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(m)
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut fa);
        fft.process(&mut fb);
        let scale = self.grid.step() / m as f64;
        for (a, b) in fa.iter_mut().zip(fb.iter()) {
            *a *= *b * scale;
        }
        let ifft = planner.plan_fft_inverse(m);
        ifft.process(&mut fa);
        // Full linear convolution lives on a grid starting at 2*start; crop
        // back to the original grid using the zero offset.
        let mut out = vec![0.0; n];
        for (k, o) in out.iter_mut().enumerate() {
            let j = k as i64 - i0;
            if j >= 0 && (j as usize) < 2 * n - 1 {
                *o = fa[j as usize].re;
            }
        }
        Self::new(self.grid, out)
    }
}

/// 3-point parabolic refinement of a sampled maximum at index j.
/// Returns (abscissa, value); falls back to the grid point at the ends or on
/// a degenerate (flat) triple.
pub fn refine_parabolic(values: &[f64], j: usize, start: f64, step: f64) -> (f64, f64) {
    let x_j = start + step * j as f64;
    if j == 0 || j + 1 >= values.len() {
        return (x_j, values[j]);
    }
    let (y0, y1, y2) = (values[j - 1], values[j], values[j + 1]);
    let den = y0 - 2.0 * y1 + y2;
    if den == 0.0 {
        return (x_j, y1);
    }
    let d = 0.5 * (y0 - y2) / den;
    let d = d.clamp(-0.5, 0.5);
    (x_j + d * step, y1 - 0.25 * (y0 - y2) * d)
}
