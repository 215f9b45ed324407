//! Linear (non-periodic) horizontal convolution on a lattice by FFT on a doubled lattice.

use num_complex::Complex64;

use crate::grid::Lattice;
use crate::numerics::fft::FftNd;

pub struct PaddedConv {
    fft: FftNd,
    side: usize,
    pad: usize,
    hdim: usize,
    step: f64,
}

impl PaddedConv {
    pub fn new(lat: &Lattice) -> Self {
        Self::with_factor(lat, 2)
    }

    /// Padded side `factor`·side; `factor` >= 2 keeps lattice convolutions alias-free.
    pub fn with_factor(lat: &Lattice, factor: usize) -> Self {
        let pad = factor.max(2) * lat.side;
        Self {
            fft: FftNd::cube(lat.hdim, pad),
            side: lat.side,
            pad,
            hdim: lat.hdim,
            step: lat.step,
        }
    }

    pub fn len(&self) -> usize {
        self.fft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn padded_index(&self, idx: usize) -> usize {
        let mut rem = idx;
        let mut flat = 0;
        let mut mult = 1;
        for _ in 0..self.hdim {
            flat += (rem % self.side) * mult;
            rem /= self.side;
            mult *= self.pad;
        }
        flat
    }

    /// Transform of a lattice plane placed in the corner of the padded array.
    pub fn forward_plane(&self, plane: &[f64]) -> Vec<Complex64> {
        let mut a = vec![Complex64::new(0.0, 0.0); self.len()];
        for (i, &v) in plane.iter().enumerate() {
            a[self.padded_index(i)].re = v;
        }
        self.fft.forward(&mut a);
        a
    }

    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Signed offsets (in lattice units) of a padded bin; also its signed frequency index.
    pub fn offsets(&self, bin: usize, out: &mut [i64]) {
        let mut rem = bin;
        for a in (0..self.hdim).rev() {
            let k = rem % self.pad;
            rem /= self.pad;
            out[a] = crate::numerics::fft::freq_index(k, self.pad);
        }
    }

    /// Sample several kernels at the offsets x' = o·h and transform them; `f` writes `count` values.
    pub fn forward_kernels<F: Fn(&[f64], &mut [f64])>(&self, count: usize, f: F) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::new(0.0, 0.0); self.len()]; count];
        let mut off = vec![0i64; self.hdim];
        let mut x = vec![0.0; self.hdim];
        let mut vals = vec![0.0; count];
        for bin in 0..self.len() {
            self.offsets(bin, &mut off);
            for a in 0..self.hdim {
                x[a] = off[a] as f64 * self.step;
            }
            f(&x, &mut vals);
            for (o, v) in out.iter_mut().zip(&vals) {
                o[bin].re = *v;
            }
        }
        for o in out.iter_mut() {
            self.fft.forward(o);
        }
        out
    }

    /// Inverse transform and read back the lattice window.
    pub fn extract(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.fft.inverse(&mut spec);
        let n = self.side.pow(self.hdim as u32);
        (0..n).map(|i| spec[self.padded_index(i)].re).collect()
    }
}
