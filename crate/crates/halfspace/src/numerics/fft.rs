//! Multi-dimensional complex FFT on row-major arrays.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct FftNd {
    shape: Vec<usize>,
    fwd: Vec<Arc<dyn Fft<f64>>>,
    inv: Vec<Arc<dyn Fft<f64>>>,
}

impl FftNd {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = shape.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inv = shape.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            shape: shape.to_vec(),
            fwd,
            inv,
        }
    }

    /// Cubic shape with `d` axes of length `n`.
    pub fn cube(d: usize, n: usize) -> Self {
        Self::new(&vec![n; d])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.fwd);
    }

    /// Inverse transform including the 1/N normalization.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inv);
        let s = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len());
        let d = self.shape.len();
        let mut line = Vec::new();
        for axis in 0..d {
            let n = self.shape[axis];
            let stride: usize = self.shape[axis + 1..].iter().product();
            let plan = &plans[axis];
            if stride == 1 {
                plan.process(data);
                continue;
            }
            let outer = self.len() / (n * stride);
            line.resize(n * stride, Complex64::new(0.0, 0.0));
            for o in 0..outer {
                let base = o * n * stride;
                // gather `stride` lines of length n, transposed so each is contiguous
                for k in 0..n {
                    for s in 0..stride {
                        line[s * n + k] = data[base + k * stride + s];
                    }
                }
                plan.process(&mut line);
                for k in 0..n {
                    for s in 0..stride {
                        data[base + k * stride + s] = line[s * n + k];
                    }
                }
            }
        }
    }
}

/// Signed integer frequency index of bin `k` on an axis of length `n`.
#[inline]
pub fn freq_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
