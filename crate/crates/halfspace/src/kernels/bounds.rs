//! Sampled-ratio checks of the pointwise bounds on the wall Green tensor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::wall::{green_pressure, green_tensor};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundSampleSpec {
    pub size: usize,
    pub seed: u64,
    /// Central-difference step.
    pub step: f64,
}

impl Default for BoundSampleSpec {
    fn default() -> Self {
        Self {
            size: 10_000,
            seed: 2024,
            step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundEntry {
    pub bound_id: String,
    pub sample_size: usize,
    pub max_ratio: f64,
    /// Relative change of the max ratio when the sample is doubled.
    pub doubling_drift: f64,
    /// Largest relative change of the ratio under (x, y) ↦ (2x, 2y).
    pub scale_drift: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub spec: BoundSampleSpec,
    pub entries: Vec<BoundEntry>,
}

impl BoundReport {
    pub fn entry(&self, id: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.bound_id == id)
    }
}

fn dist(x: &[f64; 3], y: &[f64; 3]) -> f64 {
    (0..3).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>().sqrt()
}

/// The four ratios at one pair: [|G|, |∇_x G|, |∇_y G| (vs x_n), |g|].
fn ratios(x: [f64; 3], y: [f64; 3], h: f64) -> [f64; 4] {
    let d = dist(&x, &y);
    let mut g_max: f64 = 0.0;
    let mut gx_max: f64 = 0.0;
    let mut gy_max: f64 = 0.0;
    let mut p_max: f64 = 0.0;
    for j in 0..3 {
        for i in 0..3 {
            g_max = g_max.max(green_tensor(x, y, i, j).abs());
            for a in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[a] += h;
                xm[a] -= h;
                let dx = (green_tensor(xp, y, i, j) - green_tensor(xm, y, i, j)) / (2.0 * h);
                gx_max = gx_max.max(dx.abs());
                let (mut yp, mut ym) = (y, y);
                yp[a] += h;
                ym[a] -= h;
                let dy = (green_tensor(x, yp, i, j) - green_tensor(x, ym, i, j)) / (2.0 * h);
                gy_max = gy_max.max(dy.abs());
            }
        }
        p_max = p_max.max(green_pressure(x, y, j).abs());
    }
    [
        g_max * d.powi(3) / (x[2] * y[2]),
        gx_max * d * d,
        gy_max * d.powi(3) / x[2],
        p_max * d * d,
    ]
}

const IDS: [&str; 4] = ["G_vs_xn_yn", "gradG", "grad_y_G_vs_xn", "g"];

/// Max ratio of each bound over `size` random pairs in the unit box, then over a doubled
/// sample; pairs closer than 10 steps (or within 10 steps of the wall) are rejected.
pub fn green_bound_suite(spec: &BoundSampleSpec) -> Result<BoundReport> {
    if spec.size == 0 || !(spec.step > 0.0) || spec.step > 1e-2 {
        return Err(Error::OutOfRange(
            "need a positive sample size and a finite-difference step <= 1e-2".into(),
        ));
    }
    let min_sep = 10.0 * spec.step;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = || loop {
        let x = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        let y = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
        if dist(&x, &y) >= min_sep && x[2] >= min_sep && y[2] >= min_sep {
            return (x, y);
        }
    };
    let mut first = [0.0f64; 4];
    let mut both = [0.0f64; 4];
    let mut scale = [0.0f64; 4];
    for k in 0..2 * spec.size {
        let (x, y) = draw();
        let r = ratios(x, y, spec.step);
        let r2 = ratios(x.map(|v| 2.0 * v), y.map(|v| 2.0 * v), 2.0 * spec.step);
        for b in 0..4 {
            if !r[b].is_finite() {
                return Err(Error::Quadrature(format!("non-finite ratio for {}", IDS[b])));
            }
            if k < spec.size {
                first[b] = first[b].max(r[b]);
            }
            both[b] = both[b].max(r[b]);
            // |G| ratio is exactly scale invariant; derivative ratios up to the FD error
            let rel = (r2[b] - r[b]).abs() / r[b].max(1e-300);
            scale[b] = scale[b].max(rel);
        }
    }
    let entries = (0..4)
        .map(|b| BoundEntry {
            bound_id: IDS[b].to_string(),
            sample_size: spec.size,
            max_ratio: first[b],
            doubling_drift: (both[b] - first[b]) / first[b],
            scale_drift: scale[b],
        })
        .collect();
    Ok(BoundReport {
        spec: *spec,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_finite_and_scale_invariant() {
        let spec = BoundSampleSpec {
            size: 2000,
            seed: 1,
            step: 1e-4,
        };
        let rep = green_bound_suite(&spec).unwrap();
        for e in &rep.entries {
            assert!(e.max_ratio.is_finite() && e.max_ratio > 0.0, "{e:?}");
        }
        assert!(rep.entry("G_vs_xn_yn").unwrap().scale_drift < 1e-10);
        assert!(rep.entry("g").unwrap().scale_drift < 1e-10);
    }

    #[test]
    fn rejects_large_step() {
        let spec = BoundSampleSpec {
            size: 10,
            seed: 1,
            step: 0.5,
        };
        assert!(green_bound_suite(&spec).is_err());
    }
}
