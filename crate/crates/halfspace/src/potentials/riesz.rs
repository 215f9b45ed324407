//! Riesz potential I_α on the boundary lattice and the half-space fractional integral G_β.
//!
//! Both are cell-centered lattice sums. Cells close to the target are integrated exactly in
//! the sense of the divergence theorem: for f = |u|^e homogeneous of degree e,
//! ∫_box f = (d + e)^{-1} ∫_{∂box} f (u·ν) dS, and the face integrals are smooth.

use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, SampledField};
use crate::numerics::gauss_legendre_on;

use super::conv::PaddedConv;

const GL: usize = 8;
/// Cells whose center lies within this many cell diameters of the target are integrated.
const NEAR: f64 = 3.0;

/// Panels of [a, b] graded geometrically away from the point of [a, b] nearest to 0.
fn graded_nodes(a: f64, b: f64, scale: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if b <= a {
        return out;
    }
    let c = 0.0f64.clamp(a, b);
    let s0 = scale.max((b - a) * 1e-6);
    for (lo, hi, dir) in [(c, b, 1.0), (a, c, -1.0)] {
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let start = if dir > 0.0 { lo } else { hi };
        let mut x = 0.0;
        let mut w = s0;
        while x < len {
            let y = (x + w).min(len);
            let (p, q) = if dir > 0.0 { (start + x, start + y) } else { (start - y, start - x) };
            out.extend(gauss_legendre_on(GL, p, q));
            x = y;
            w *= 2.0;
        }
    }
    out
}

/// ∫ over the box ∏[lo_a, hi_a] of |u|^e, e > −d.
pub fn box_power_integral(lo: &[f64], hi: &[f64], e: f64) -> f64 {
    let d = lo.len();
    assert!(e + d as f64 > 0.0);
    if d == 1 {
        let f = |x: f64| x.abs().powf(e + 1.0) / (e + 1.0) * x.signum();
        return f(hi[0]) - f(lo[0]);
    }
    let mut total = 0.0;
    for a in 0..d {
        for (plane, normal_dot) in [(hi[a], hi[a]), (lo[a], -lo[a])] {
            if normal_dot == 0.0 {
                continue;
            }
            let others: Vec<usize> = (0..d).filter(|&b| b != a).collect();
            let axes: Vec<Vec<(f64, f64)>> =
                others.iter().map(|&b| graded_nodes(lo[b], hi[b], plane.abs() * 0.5)).collect();
            let mut idx = vec![0usize; others.len()];
            let mut acc = 0.0;
            'outer: loop {
                let mut r2 = plane * plane;
                let mut w = 1.0;
                for (k, ax) in axes.iter().enumerate() {
                    let (x, wx) = ax[idx[k]];
                    r2 += x * x;
                    w *= wx;
                }
                acc += w * r2.powf(0.5 * e);
                for k in 0..idx.len() {
                    idx[k] += 1;
                    if idx[k] < axes[k].len() {
                        continue 'outer;
                    }
                    idx[k] = 0;
                }
                break;
            }
            total += acc * normal_dot;
        }
    }
    total / (e + d as f64)
}

fn check_alpha(alpha: f64, d: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < d as f64) {
        return Err(Error::OutOfRange(format!("Riesz order must lie in (0, {d}), got {alpha}")));
    }
    Ok(())
}

fn check_beta(beta: f64, n: usize) -> Result<()> {
    if !(beta > 0.0 && beta < n as f64) {
        return Err(Error::OutOfRange(format!("G_β needs 0 < β < {n}, got {beta}")));
    }
    Ok(())
}

/// ∫_{cell} |x − y|^{α−d} dy for the lattice cell centered at c (offset c − x).
fn riesz_cell(off: &[f64], h: f64, alpha: f64) -> f64 {
    let d = off.len();
    let dist = off.iter().map(|v| v * v).sum::<f64>().sqrt();
    if dist > NEAR * h * (d as f64).sqrt() {
        return h.powi(d as i32) * dist.powf(alpha - d as f64);
    }
    let lo: Vec<f64> = off.iter().map(|o| o - 0.5 * h).collect();
    let hi: Vec<f64> = off.iter().map(|o| o + 0.5 * h).collect();
    box_power_integral(&lo, &hi, alpha - d as f64)
}

/// I_α g on the lattice: Σ_cells g(y_c) ∫_cell |x − y|^{α−(n−1)} dy.
pub fn riesz_potential(g: &BoundaryField, alpha: f64) -> Result<BoundaryField> {
    let d = g.dim - 1;
    check_alpha(alpha, d)?;
    if g.rank != 0 {
        return Err(Error::Shape("Riesz potential takes a scalar field".into()));
    }
    let mut out = BoundaryField::zeros(g.dim, &g.lattice, 0);
    if g.is_zero() {
        return Ok(out);
    }
    let pc = PaddedConv::new(&g.lattice);
    let h = g.lattice.step;
    let kern = pc.forward_kernels(1, |x, o| o[0] = riesz_cell(x, h, alpha));
    let spec = pc.forward_plane(&g.values);
    let prod: Vec<C> = spec.iter().zip(&kern[0]).map(|(a, b)| a * b).collect();
    out.values = pc.extract(prod);
    Ok(out)
}

/// I_α g at an arbitrary boundary point.
pub fn riesz_at(g: &BoundaryField, alpha: f64, x: &[f64]) -> Result<f64> {
    let d = g.dim - 1;
    check_alpha(alpha, d)?;
    if g.rank != 0 || x.len() != d {
        return Err(Error::Shape("Riesz potential takes a scalar field and a boundary point".into()));
    }
    let h = g.lattice.step;
    let mut y = vec![0.0; d];
    let mut off = vec![0.0; d];
    let mut acc = 0.0;
    for (i, &v) in g.values.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        g.lattice.point(i, &mut y);
        for a in 0..d {
            off[a] = y[a] - x[a];
        }
        acc += v * riesz_cell(&off, h, alpha);
    }
    Ok(acc)
}

/// Vertical cell of level k relative to the level: [e_k − y_k, e_{k+1} − y_k].
fn vertical_cells(levels: &[f64]) -> Vec<(f64, f64)> {
    let m = levels.len();
    let mut e = Vec::with_capacity(m + 1);
    e.push(0.0);
    for k in 1..m {
        e.push(0.5 * (levels[k - 1] + levels[k]));
    }
    e.push(levels[m - 1]);
    (0..m).map(|k| (e[k] - levels[k], e[k + 1] - levels[k])).collect()
}

/// ∫ over the source cell (horizontal offset `off`, vertical cell `vc` around height s) of
/// |x − z|^{β−n}, target at height t.
fn gbeta_cell(off: &[f64], t: f64, s: f64, vc: (f64, f64), h: f64, beta: f64) -> f64 {
    let d = off.len();
    let n = d + 1;
    let dz = s - t;
    let dist = (off.iter().map(|v| v * v).sum::<f64>() + dz * dz).sqrt();
    let diam = (d as f64 * h * h + (vc.1 - vc.0).powi(2)).sqrt();
    let e = beta - n as f64;
    if dist > NEAR * diam {
        return h.powi(d as i32) * (vc.1 - vc.0) * dist.powf(e);
    }
    let mut lo: Vec<f64> = off.iter().map(|o| o - 0.5 * h).collect();
    let mut hi: Vec<f64> = off.iter().map(|o| o + 0.5 * h).collect();
    lo.push(dz + vc.0);
    hi.push(dz + vc.1);
    box_power_integral(&lo, &hi, e)
}

/// G_β F on the grid: cell-centered half-space sum with exact near-cell integrals.
pub fn g_beta(f: &SampledField, beta: f64) -> Result<SampledField> {
    let g = &f.grid;
    check_beta(beta, g.dim)?;
    if f.rank != 0 {
        return Err(Error::Shape("G_β takes a scalar field".into()));
    }
    let mut out = SampledField::zeros(g, 0);
    if f.is_zero() {
        return Ok(out);
    }
    let m = g.nlevels();
    let h = g.step();
    let pc = PaddedConv::new(&g.lattice);
    let vcs = vertical_cells(&g.levels);
    let live: Vec<usize> = (0..m).filter(|&k| f.component_plane(k, 0).iter().any(|&v| v != 0.0)).collect();
    let specs: Vec<(usize, Vec<C>)> = live.iter().map(|&k| (k, pc.forward_plane(&f.component_plane(k, 0)))).collect();
    for (tj, &t) in g.levels.iter().enumerate() {
        let mut acc = vec![C::new(0.0, 0.0); pc.len()];
        for (sk, spec) in &specs {
            let s = g.levels[*sk];
            let vc = vcs[*sk];
            let kern = pc.forward_kernels(1, |x, o| o[0] = gbeta_cell(x, t, s, vc, h, beta));
            for ((a, b), c) in acc.iter_mut().zip(spec).zip(&kern[0]) {
                *a += b * c;
            }
        }
        out.set_component_plane(tj, 0, &pc.extract(acc));
    }
    Ok(out)
}

/// G_β F at an arbitrary point of the half-space.
pub fn g_beta_at(f: &SampledField, beta: f64, y: &[f64]) -> Result<f64> {
    let g = &f.grid;
    check_beta(beta, g.dim)?;
    if f.rank != 0 || y.len() != g.dim {
        return Err(Error::Shape("G_β takes a scalar field and a point of the half-space".into()));
    }
    let d = g.hdim();
    let h = g.step();
    let vcs = vertical_cells(&g.levels);
    let mut x = vec![0.0; d];
    let mut off = vec![0.0; d];
    let mut acc = 0.0;
    for (k, &s) in g.levels.iter().enumerate() {
        for i in 0..g.nh() {
            let v = f.at(k, i, 0);
            if v == 0.0 {
                continue;
            }
            g.lattice.point(i, &mut x);
            for a in 0..d {
                off[a] = x[a] - y[a];
            }
            acc += v * gbeta_cell(&off, y[d], s, vcs[k], h, beta);
        }
    }
    Ok(acc)
}
