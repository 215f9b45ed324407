//! Discrete derivatives of sampled fields and PDE residuals.
//!
//! Horizontal derivatives use 8th-order central differences on the lattice; vertical ones use
//! Fornberg weights on the five nearest graded levels. Values whose stencil leaves the grid are
//! NaN and the residual masks skip them.

use crate::error::{Error, Result};
use crate::grid::{HalfSpaceGrid, SampledField};
use crate::numerics::fd::{central, fornberg};

const HALF: usize = 4;

/// ∂^order/∂x_axis^order for a horizontal axis.
pub fn horizontal_derivative(field: &SampledField, axis: usize, order: usize) -> SampledField {
    let g = &field.grid;
    let d = g.hdim();
    assert!(axis < d);
    let w: Vec<f64> = central(order, HALF).iter().map(|c| c / g.step().powi(order as i32)).collect();
    let nc = field.ncomp();
    let side = g.lattice.side;
    let stride = side.pow((d - 1 - axis) as u32);
    let mut out = SampledField::zeros(g, field.rank);
    let mut ks = vec![0usize; d];
    for level in 0..g.nlevels() {
        for h in 0..g.nh() {
            g.lattice.unravel(h, &mut ks);
            let kk = ks[axis];
            let fits = kk >= HALF && kk + HALF < side;
            for c in 0..nc {
                let o = out.index(level, h, c);
                if !fits {
                    out.values[o] = f64::NAN;
                    continue;
                }
                let mut acc = 0.0;
                for (j, wj) in w.iter().enumerate() {
                    let hj = h + j * stride - HALF * stride;
                    acc += wj * field.at(level, hj, c);
                }
                out.values[o] = acc;
            }
        }
    }
    out
}

/// Vertical stencil (first index, weights) at level k.
fn vertical_stencil(levels: &[f64], k: usize, order: usize) -> (usize, Vec<f64>) {
    let m = levels.len();
    let width = 5.min(m);
    let first = k.saturating_sub(2).min(m - width);
    (first, fornberg(levels[k], &levels[first..first + width], order))
}

pub fn vertical_derivative(field: &SampledField, order: usize) -> SampledField {
    let g = &field.grid;
    let nc = field.ncomp();
    let mut out = SampledField::zeros(g, field.rank);
    for k in 0..g.nlevels() {
        let (first, w) = vertical_stencil(&g.levels, k, order);
        for h in 0..g.nh() {
            for c in 0..nc {
                let acc: f64 = w.iter().enumerate().map(|(j, wj)| wj * field.at(first + j, h, c)).sum();
                let o = out.index(k, h, c);
                out.values[o] = acc;
            }
        }
    }
    out
}

/// ∂_a of every component, stored at component c·n + a.
pub fn gradient(field: &SampledField) -> SampledField {
    let g = &field.grid;
    let n = g.dim;
    let nc = field.ncomp();
    let parts: Vec<SampledField> = (0..n)
        .map(|a| if a + 1 < n { horizontal_derivative(field, a, 1) } else { vertical_derivative(field, 1) })
        .collect();
    let mut out = SampledField::zeros(g, field.rank + 1);
    for level in 0..g.nlevels() {
        for h in 0..g.nh() {
            for c in 0..nc {
                for (a, p) in parts.iter().enumerate() {
                    let o = out.index(level, h, c * n + a);
                    out.values[o] = p.at(level, h, c);
                }
            }
        }
    }
    out
}

pub fn laplacian(field: &SampledField) -> SampledField {
    let g = &field.grid;
    let mut out = vertical_derivative(field, 2);
    for a in 0..g.hdim() {
        let p = horizontal_derivative(field, a, 2);
        for (o, v) in out.values.iter_mut().zip(&p.values) {
            *o += v;
        }
    }
    out
}

/// Nodes at least `margin` inside the lateral window, with x_n >= margin and a centered
/// vertical stencil.
pub fn residual_mask(grid: &HalfSpaceGrid, margin: f64) -> Result<Vec<bool>> {
    let m = grid.nlevels();
    let lim = grid.extent() - margin.max(HALF as f64 * grid.step());
    let mut x = vec![0.0; grid.dim];
    let mut mask = vec![false; grid.npoints()];
    for k in 2..m.saturating_sub(2) {
        if grid.levels[k] < margin {
            continue;
        }
        for h in 0..grid.nh() {
            grid.point(k, h, &mut x);
            if x[..grid.hdim()].iter().all(|c| c.abs() <= lim + 1e-12) {
                mask[k * grid.nh() + h] = true;
            }
        }
    }
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptyRestriction(margin));
    }
    Ok(mask)
}

/// Sup norms over the residual mask.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualReport {
    pub momentum: f64,
    pub divergence: f64,
    pub laplacian: f64,
    pub forcing: f64,
    pub gradient: f64,
    pub nodes: usize,
}

impl ResidualReport {
    /// Momentum residual relative to the forcing, or to Δv when there is none.
    pub fn momentum_rel(&self) -> f64 {
        let r = if self.forcing > 0.0 { self.forcing } else { self.laplacian };
        self.momentum / r
    }

    pub fn divergence_rel(&self) -> f64 {
        self.divergence / self.gradient
    }
}

/// Residual of −Δv + ∇w (+ v·∇v) − F and of div v. `grad_v` (component i·n + a) replaces
/// the difference gradient of v when given.
pub fn stokes_residual(
    v: &SampledField,
    w: &SampledField,
    grad_v: Option<&SampledField>,
    forcing: Option<&SampledField>,
    convective: bool,
    margin: f64,
) -> Result<ResidualReport> {
    let g = &v.grid;
    if v.rank != 1 || w.rank != 0 || &w.grid != g {
        return Err(Error::Shape("residual needs a vector v and scalar w on one grid".into()));
    }
    let n = g.dim;
    let mask = residual_mask(g, margin)?;
    let lap = laplacian(v);
    let gw = gradient(w);
    let fd_grad;
    let gv = match grad_v {
        Some(x) => x,
        None => {
            fd_grad = gradient(v);
            &fd_grad
        }
    };
    let mut rep = ResidualReport {
        momentum: 0.0,
        divergence: 0.0,
        laplacian: 0.0,
        forcing: 0.0,
        gradient: 0.0,
        nodes: 0,
    };
    for k in 0..g.nlevels() {
        for h in 0..g.nh() {
            if !mask[k * g.nh() + h] {
                continue;
            }
            rep.nodes += 1;
            let mut div = 0.0;
            for i in 0..n {
                let mut r = -lap.at(k, h, i) + gw.at(k, h, i);
                if convective {
                    r += (0..n).map(|a| v.at(k, h, a) * gv.at(k, h, i * n + a)).sum::<f64>();
                }
                if let Some(f) = forcing {
                    let fi = f.at(k, h, i);
                    r -= fi;
                    rep.forcing = rep.forcing.max(fi.abs());
                }
                rep.momentum = rep.momentum.max(r.abs());
                rep.laplacian = rep.laplacian.max(lap.at(k, h, i).abs());
                div += gv.at(k, h, i * n + i);
                for a in 0..n {
                    rep.gradient = rep.gradient.max(gv.at(k, h, i * n + a).abs());
                }
            }
            rep.divergence = rep.divergence.max(div.abs());
        }
    }
    if [rep.momentum, rep.divergence].iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample, LevelSpec};

    #[test]
    fn derivatives_of_smooth_field() {
        let g = make_grid(3, 2.0, 1.0 / 16.0, &LevelSpec::new(0.25, 2f64.powf(0.25), 12)).unwrap();
        let f = sample(&g, 0, |x, o| o[0] = (x[0] + 0.5 * x[1]).sin() * (-x[2]).exp()).unwrap();
        let gr = gradient(&f);
        let lap = laplacian(&f);
        let mask = residual_mask(&g, 0.5).unwrap();
        let mut x = [0.0; 3];
        for k in 0..g.nlevels() {
            for h in 0..g.nh() {
                if !mask[k * g.nh() + h] {
                    continue;
                }
                g.point(k, h, &mut x);
                let (s, c, e) = ((x[0] + 0.5 * x[1]).sin(), (x[0] + 0.5 * x[1]).cos(), (-x[2]).exp());
                assert!((gr.at(k, h, 0) - c * e).abs() < 1e-8);
                assert!((gr.at(k, h, 1) - 0.5 * c * e).abs() < 1e-8);
                assert!((gr.at(k, h, 2) + s * e).abs() < 1e-4);
                assert!((lap.at(k, h, 0) - (-1.25 + 1.0) * s * e).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn exact_stokes_pair_has_small_residual() {
        // v = curl-type field (∂_2 φ, −∂_1 φ, 0) with φ = sin x1 sin x2 e^{−x3}, w chosen to balance
        let g = make_grid(3, 2.0, 1.0 / 16.0, &LevelSpec::new(0.25, 2f64.powf(0.25), 12)).unwrap();
        let v = sample(&g, 1, |x, o| {
            let e = (-x[2]).exp();
            o[0] = x[0].sin() * x[1].cos() * e;
            o[1] = -x[0].cos() * x[1].sin() * e;
            o[2] = 0.0;
        })
        .unwrap();
        // −Δv = (2 − 1) v = v; choose F = v, w = 0
        let w = SampledField::zeros(&g, 0);
        let rep = stokes_residual(&v, &w, None, Some(&v), false, 0.5).unwrap();
        assert!(rep.momentum_rel() < 1e-3, "{rep:?}");
        assert!(rep.divergence_rel() < 1e-6, "{rep:?}");
    }
}
