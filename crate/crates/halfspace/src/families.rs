//! Generated test families: smooth compact bumps, their dilates, and seeded band-limited
//! random fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{BoundaryField, HalfSpaceGrid, Lattice, SampledField};

/// exp(−1/(1 − |x − c|²/r²)) inside the ball, 0 outside.
pub fn bump(x: &[f64], c: &[f64], r: f64) -> f64 {
    let s = x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (r * r);
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

/// One vector bump: amplitude · bump(x; center, radius) · direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    pub direction: Vec<f64>,
}

impl BumpSpec {
    pub fn value(&self, x: &[f64], out: &mut [f64]) {
        let b = self.amplitude * bump(x, &self.center, self.radius);
        for (o, d) in out.iter_mut().zip(&self.direction) {
            *o = b * d;
        }
    }

    /// x ↦ scale · self(x / λ): the same profile on radius λ·r about λ·center.
    pub fn dilated(&self, lambda: f64, scale: f64) -> Self {
        Self {
            center: self.center.iter().map(|c| c * lambda).collect(),
            radius: self.radius * lambda,
            amplitude: self.amplitude * scale,
            direction: self.direction.clone(),
        }
    }

    pub fn boundary(&self, dim: usize, lat: &Lattice) -> Result<BoundaryField> {
        let rank = usize::from(self.direction.len() > 1);
        BoundaryField::sample(dim, lat, rank, |x, o| self.value(x, o))
    }

    pub fn interior(&self, grid: &HalfSpaceGrid) -> Result<SampledField> {
        let rank = usize::from(self.direction.len() > 1);
        crate::grid::sample(grid, rank, |x, o| self.value(x, o))
    }
}

/// λ_k = ratio^{k − (count−1)/2}, k < count: a geometric family centered on 1.
pub fn dilation_factors(count: usize, ratio: f64) -> Vec<f64> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count).map(|k| ratio.powf(k as f64 - mid)).collect()
}

/// Seeded sum of `modes` random plane waves with |ξ| ≤ kmax under a Gaussian envelope of
/// width `width`; the envelope keeps the fields effectively compactly supported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLimitedSpec {
    pub modes: usize,
    pub kmax: f64,
    pub width: f64,
    pub seed: u64,
}

struct Wave {
    xi: Vec<f64>,
    phase: f64,
    amp: f64,
}

fn waves(rng: &mut ChaCha8Rng, d: usize, modes: usize, kmax: f64) -> Vec<Wave> {
    (0..modes)
        .map(|_| {
            let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-kmax..kmax)).collect();
            Wave {
                xi,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                amp: rng.random_range(0.5..1.5),
            }
        })
        .collect()
}

fn wave_sum(w: &[Wave], x: &[f64]) -> f64 {
    w.iter()
        .map(|w| w.amp * (w.xi.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + w.phase).cos())
        .sum()
}

/// `count` scalar interior fields: horizontal waves times a vertical profile y e^{−y}, all
/// under the envelope exp(−|x − c|²/width²) with c at height `width`.
pub fn band_limited_interior(grid: &HalfSpaceGrid, spec: &BandLimitedSpec, count: usize) -> Result<Vec<SampledField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = grid.dim;
    (0..count)
        .map(|_| {
            let w = waves(&mut rng, n, spec.modes, spec.kmax);
            let shift: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-0.25..0.25) * spec.width).collect();
            crate::grid::sample_scalar(grid, |x| {
                let mut r2 = 0.0;
                for a in 0..n - 1 {
                    r2 += (x[a] - shift[a]).powi(2);
                }
                r2 += (x[n - 1] - spec.width).powi(2);
                let env = (-r2 / (spec.width * spec.width)).exp();
                env * (1.5 + wave_sum(&w, x) / spec.modes as f64)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{LevelSpec, make_grid};

    #[test]
    fn bump_is_compact_and_positive_inside() {
        assert_eq!(bump(&[2.0, 0.0], &[0.0, 0.0], 1.0), 0.0);
        assert!((bump(&[0.0, 0.0], &[0.0, 0.0], 1.0) - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn dilation_family_is_geometric() {
        let f = dilation_factors(5, 2.0);
        assert!((f[2] - 1.0).abs() < 1e-15 && (f[4] - 4.0).abs() < 1e-12 && (f[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dilated_spec_is_the_dilated_function() {
        let b = BumpSpec { center: vec![0.1, 0.2], radius: 0.5, amplitude: 2.0, direction: vec![1.0, -1.0, 0.5] };
        let d = b.dilated(2.0, 3.0);
        let (mut u, mut v) = ([0.0; 3], [0.0; 3]);
        b.value(&[0.15, 0.1], &mut u);
        d.value(&[0.3, 0.2], &mut v);
        for k in 0..3 {
            assert!((3.0 * u[k] - v[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn seeded_families_repeat() {
        let g = make_grid(3, 1.0, 0.125, &LevelSpec::new(0.125, 2.0, 4)).unwrap();
        let spec = BandLimitedSpec { modes: 4, kmax: 3.0, width: 0.5, seed: 9 };
        let a = band_limited_interior(&g, &spec, 3).unwrap();
        let b = band_limited_interior(&g, &spec, 3).unwrap();
        assert_eq!(a[2].values, b[2].values);
        assert_ne!(a[0].values, a[1].values);
        assert!(a.iter().all(|f| f.values.iter().all(|v| *v > 0.0)));
    }
}
