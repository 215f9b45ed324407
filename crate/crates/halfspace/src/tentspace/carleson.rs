//! Carleson functional C_q over a dyadic family of balls: radii h·2^m, centers on the lattice,
//! boxes T(B) = B_R × (0, 2R).
//!
//! The horizontal average over B_R is the mean of the node values strictly inside the ball
//! (nodes off the lattice count as zeros); the vertical integral over (0, 2R) is exact for the
//! piecewise-linear interpolant in y_n, constant below the first level and zero above the last.

use crate::error::Result;
use crate::grid::{BoundaryField, HalfSpaceGrid, SampledField};

use super::conical::{check_q, magnitudes};
use super::stencil::{ball_max, convolve, point_ball_stencil};

/// Weights ω_k with Σ ω_k g_k = ∫_0^top of the interpolant of g.
pub fn truncated_vertical_weights(levels: &[f64], top: f64) -> Vec<f64> {
    let m = levels.len();
    let mut w = vec![0.0; m];
    if top <= 0.0 || m == 0 {
        return w;
    }
    w[0] += top.min(levels[0]);
    for k in 0..m.saturating_sub(1) {
        let (a, b) = (levels[k], levels[k + 1]);
        if top <= a {
            break;
        }
        let d = b - a;
        if top >= b {
            w[k] += 0.5 * d;
            w[k + 1] += 0.5 * d;
        } else {
            let t = top - a;
            w[k] += t - t * t / (2.0 * d);
            w[k + 1] += t * t / (2.0 * d);
        }
    }
    w
}

/// Radii h·2^m up to twice the horizontal extent.
pub fn dyadic_radii(grid: &HalfSpaceGrid) -> Vec<f64> {
    let h = grid.step();
    let mut out = Vec::new();
    let mut r = h;
    while r <= 2.0 * grid.extent() * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// (C_q)^q at every lattice node from magnitudes laid out [level][node].
pub(crate) fn carleson_power(grid: &HalfSpaceGrid, mag: &[f64], q: f64) -> Vec<f64> {
    let nh = grid.nh();
    let side = grid.lattice.side;
    let h = grid.step();
    let hd = grid.hdim();
    let g: Vec<f64> = mag.iter().map(|v| v.powf(q)).collect();
    let live: Vec<usize> = (0..grid.nlevels())
        .filter(|&k| g[k * nh..(k + 1) * nh].iter().any(|&v| v != 0.0))
        .collect();
    let mut best = vec![0.0f64; nh];
    if live.is_empty() {
        return best;
    }
    for r in dyadic_radii(grid) {
        let w = truncated_vertical_weights(&grid.levels, 2.0 * r);
        let mut col = vec![0.0; nh];
        for &k in &live {
            if w[k] == 0.0 {
                continue;
            }
            for (c, v) in col.iter_mut().zip(&g[k * nh..(k + 1) * nh]) {
                *c += w[k] * v;
            }
        }
        let rc = r / h;
        let avg = convolve(&col, side, &point_ball_stencil(hd, rc));
        let m = ball_max(&avg, side, hd, rc);
        for (b, v) in best.iter_mut().zip(m) {
            *b = b.max(v);
        }
    }
    best
}

/// x' ↦ C_q F(x').
pub fn carleson_functional(field: &SampledField, q: f64) -> Result<BoundaryField> {
    check_q(q)?;
    let grid = &field.grid;
    let mag = magnitudes(field);
    let values = carleson_power(grid, &mag, q)
        .into_iter()
        .map(|v| v.max(0.0).powf(1.0 / q))
        .collect();
    Ok(BoundaryField {
        dim: grid.dim,
        lattice: grid.lattice.clone(),
        rank: 0,
        values,
    })
}
