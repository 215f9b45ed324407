//! Conical functional A_q over the cones Γ_α(x') = {|x' − y'| < α y_n}.
//!
//! Per level y_k the horizontal integral over the ball B_{αy_k}(x') is the exact overlap of the
//! ball with the lattice cells (field piecewise constant on cells); y_k^{-(n-1)} times that
//! integral is then integrated in y_n by the trapezoid rule with constant extension to the wall.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, HalfSpaceGrid, SampledField};

use super::stencil::{ball_box_volume, ball_max, convolve, overlap_stencil};

pub(crate) fn check_q(q: f64) -> Result<()> {
    if !(q >= 1.0) {
        return Err(Error::OutOfRange(format!("tent exponent q must be >= 1, got {q}")));
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::OutOfRange(format!("aperture must be positive, got {alpha}")));
    }
    Ok(())
}

/// (A_q)^q at every lattice node, from the pointwise magnitudes `mag` laid out [level][node].
pub(crate) fn cone_power_sum(grid: &HalfSpaceGrid, mag: &[f64], q: f64, alpha: f64) -> Vec<f64> {
    let nh = grid.nh();
    let hd = grid.hdim();
    let side = grid.lattice.side;
    let h = grid.step();
    let w = grid.vertical_weights();
    let cell = grid.lattice.cell_volume();
    let parts: Vec<Option<Vec<f64>>> = (0..grid.nlevels())
        .into_par_iter()
        .map(|k| {
            let plane = &mag[k * nh..(k + 1) * nh];
            if plane.iter().all(|&v| v == 0.0) {
                return None;
            }
            let y = grid.levels[k];
            let g: Vec<f64> = plane.iter().map(|v| v.powf(q)).collect();
            let st = overlap_stencil(hd, alpha * y / h);
            let mut s = convolve(&g, side, &st);
            let c = w[k] * y.powi(-(hd as i32)) * cell;
            s.iter_mut().for_each(|v| *v = (*v * c).max(0.0));
            Some(s)
        })
        .collect();
    let mut acc = vec![0.0; nh];
    for p in parts.into_iter().flatten() {
        for (a, v) in acc.iter_mut().zip(p) {
            *a += v;
        }
    }
    acc
}

/// sup over the cone of the magnitudes (nodes strictly inside the cone).
pub(crate) fn cone_sup(grid: &HalfSpaceGrid, mag: &[f64], alpha: f64) -> Vec<f64> {
    let nh = grid.nh();
    let side = grid.lattice.side;
    let h = grid.step();
    let parts: Vec<Option<Vec<f64>>> = (0..grid.nlevels())
        .into_par_iter()
        .map(|k| {
            let plane = &mag[k * nh..(k + 1) * nh];
            if plane.iter().all(|&v| v == 0.0) {
                return None;
            }
            Some(ball_max(plane, side, grid.hdim(), alpha * grid.levels[k] / h))
        })
        .collect();
    let mut acc = vec![0.0f64; nh];
    for p in parts.into_iter().flatten() {
        for (a, v) in acc.iter_mut().zip(p) {
            *a = a.max(v);
        }
    }
    acc
}

pub(crate) fn magnitudes(field: &SampledField) -> Vec<f64> {
    if field.rank == 0 {
        field.values.iter().map(|v| v.abs()).collect()
    } else {
        field.magnitude().values
    }
}

/// x' ↦ A_q F(x') with aperture α on the lattice; q = ∞ gives the sup over the cone.
pub fn conical_functional(field: &SampledField, q: f64, alpha: f64) -> Result<BoundaryField> {
    check_q(q)?;
    check_alpha(alpha)?;
    let grid = &field.grid;
    let mag = magnitudes(field);
    let values = if q.is_infinite() {
        cone_sup(grid, &mag, alpha)
    } else {
        cone_power_sum(grid, &mag, q, alpha)
            .into_iter()
            .map(|v| v.powf(1.0 / q))
            .collect()
    };
    Ok(BoundaryField {
        dim: grid.dim,
        lattice: grid.lattice.clone(),
        rank: 0,
        values,
    })
}

/// A_q F at an arbitrary boundary point, by direct summation over the cells the cone meets.
pub fn conical_at(field: &SampledField, q: f64, alpha: f64, x: &[f64]) -> Result<f64> {
    check_q(q)?;
    check_alpha(alpha)?;
    let grid = &field.grid;
    let hd = grid.hdim();
    if x.len() != hd {
        return Err(Error::Shape(format!("boundary point needs {hd} coordinates")));
    }
    let lat = &grid.lattice;
    let h = lat.step;
    let nh = grid.nh();
    let mag = magnitudes(field);
    let w = grid.vertical_weights();
    let mut total = 0.0;
    let mut sup = 0.0f64;
    let mut touched = false;
    let mut ks = vec![0usize; hd];
    let mut lo = vec![0.0; hd];
    let mut hi = vec![0.0; hd];
    for k in 0..grid.nlevels() {
        let y = grid.levels[k];
        let r = alpha * y;
        // index window of cells that can meet the ball
        let mut range = Vec::with_capacity(hd);
        let mut empty = false;
        for &xa in x {
            let a = (((xa - r - lat.origin) / h) - 0.5).floor().max(0.0) as i64;
            let b = ((((xa + r - lat.origin) / h) + 0.5).ceil() as i64).min(lat.side as i64 - 1);
            if b < a {
                empty = true;
            }
            range.push((a as usize, b.max(a) as usize));
        }
        if empty {
            continue;
        }
        let count: usize = range.iter().map(|(a, b)| b - a + 1).product();
        let mut s = 0.0;
        for flat in 0..count {
            let mut rem = flat;
            for a in (0..hd).rev() {
                let len = range[a].1 - range[a].0 + 1;
                ks[a] = range[a].0 + rem % len;
                rem /= len;
            }
            for a in 0..hd {
                let c = lat.coord(ks[a]) - x[a];
                lo[a] = c - 0.5 * h;
                hi[a] = c + 0.5 * h;
            }
            let ov = ball_box_volume(r, &lo, &hi);
            if ov <= 0.0 {
                continue;
            }
            touched = true;
            let v = mag[k * nh + lat.ravel(&ks)];
            if q.is_infinite() {
                let inside = (0..hd)
                    .map(|a| (lat.coord(ks[a]) - x[a]).powi(2))
                    .sum::<f64>()
                    < r * r;
                if inside {
                    sup = sup.max(v);
                }
            } else if v != 0.0 {
                s += ov * v.powf(q);
            }
        }
        total += w[k] * y.powi(-(hd as i32)) * s;
    }
    if !touched {
        return Err(Error::OutOfRange("cone does not meet the grid".into()));
    }
    Ok(if q.is_infinite() { sup } else { total.powf(1.0 / q) })
}
