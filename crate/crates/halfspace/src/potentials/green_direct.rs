//! Green potential in R^3_+ by direct quadrature against the wall Green tensor.
//!
//! Vertically the source is the same cubic-spline interpolant the spectral path uses (tangent
//! extension below the first level, zero above the last); the s-integral runs Gauss-Legendre
//! on sub-intervals graded toward the target height. Horizontally each (t, s) pair is a linear
//! convolution with the sampled kernel; when |t − s| < 4h the free-space part on the 5×5
//! nearest cells is replaced by its exact cell average from rectangle antiderivatives.

use num_complex::Complex64 as C;
use num_dual::{Dual64, DualNum};

use crate::error::{Error, Result};
use crate::grid::SampledField;
use crate::kernels::wall::{green_pressure, green_tensor};
use crate::numerics::gauss_legendre_on;
use crate::numerics::spline::{eval_cubic, SplineBasis};

use super::conv::PaddedConv;
use super::green_spectral::check_sources;
use super::GreenFields;

const ZERO: C = C { re: 0.0, im: 0.0 };
const NEAR_CELLS: i64 = 4;
const NEAR_HEIGHT: f64 = 4.0;
const GL_ORDER: usize = 6;

/// ln(a + ρ) without cancellation when a < 0 (b2 = ρ² − a²).
fn ln_plus<T: DualNum<Primitive = f64> + Copy>(a: T, rho: T, b2: T) -> T {
    if a.re() >= 0.0 {
        (a + rho).ln()
    } else {
        (b2 / (rho - a)).ln()
    }
}

fn atan_term<T: DualNum<Primitive = f64> + Copy>(x: T, y: T, z: T, rho: T) -> T {
    if z.re() == 0.0 {
        T::from(0.0)
    } else {
        (x * y / (z * rho)).atan()
    }
}

/// Antiderivatives Φ with ∂_x∂_y Φ = kernel, for the kernels indexed as
/// 0: 1/ρ, 1..=6: r_i r_j/ρ³ for (i,j) in (00,11,22,01,02,12), 7..=9: r_j/ρ³.
fn antiderivative<T: DualNum<Primitive = f64> + Copy>(which: usize, x: T, y: T, z: T) -> T {
    let rho = (x * x + y * y + z * z).sqrt();
    let lx = ln_plus(x, rho, y * y + z * z);
    let ly = ln_plus(y, rho, x * x + z * z);
    let at = atan_term(x, y, z, rho);
    match which {
        0 => x * ly + y * lx - z * at,
        1 => y * lx - z * at,
        2 => x * ly - z * at,
        3 => z * at,
        4 => -rho,
        5 => -z * ly,
        6 => -z * lx,
        7 => -ly,
        8 => -lx,
        9 => at,
        _ => unreachable!(),
    }
}

fn pair_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 1,
        (1, 1) => 2,
        (2, 2) => 3,
        (0, 1) => 4,
        (0, 2) => 5,
        (1, 2) => 6,
        _ => unreachable!(),
    }
}

/// ∫∫ over the cell [cx ± h/2] × [cy ± h/2] of kernel `which` (or its r_axis derivative).
fn cell_integral(which: usize, cx: f64, cy: f64, z: f64, h: f64, deriv: Option<usize>) -> f64 {
    let corner = |x: f64, y: f64| -> f64 {
        match deriv {
            None => antiderivative(which, x, y, z),
            Some(a) => {
                let mut v = [Dual64::from_re(x), Dual64::from_re(y), Dual64::from_re(z)];
                v[a].eps = 1.0;
                antiderivative(which, v[0], v[1], v[2]).eps
            }
        }
    };
    let (x0, x1, y0, y1) = (cx - 0.5 * h, cx + 0.5 * h, cy - 0.5 * h, cy + 0.5 * h);
    corner(x1, y1) - corner(x0, y1) - corner(x1, y0) + corner(x0, y0)
}

/// Free Stokeslet part δ_ij/ρ + r_i r_j/ρ³ (point value or cell average, optionally ∂_{r_a}).
fn free_velocity(i: usize, j: usize, r: [f64; 3], cell: Option<f64>, deriv: Option<usize>) -> f64 {
    match cell {
        Some(h) => {
            let area = h * h;
            let mut v = cell_integral(pair_index(i, j), r[0], r[1], r[2], h, deriv);
            if i == j {
                v += cell_integral(0, r[0], r[1], r[2], h, deriv);
            }
            v / area
        }
        None => {
            let f = |p: [Dual64; 3]| {
                let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                let d = if i == j { rho.recip() } else { Dual64::from_re(0.0) };
                d + p[i] * p[j] / (rho * rho * rho)
            };
            point_value(f, r, deriv)
        }
    }
}

/// Free pressure part r_j/ρ³.
fn free_pressure(j: usize, r: [f64; 3], cell: Option<f64>, deriv: Option<usize>) -> f64 {
    match cell {
        Some(h) => cell_integral(7 + j, r[0], r[1], r[2], h, deriv) / (h * h),
        None => {
            let f = |p: [Dual64; 3]| {
                let rho = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                p[j] / (rho * rho * rho)
            };
            point_value(f, r, deriv)
        }
    }
}

fn point_value<F: Fn([Dual64; 3]) -> Dual64>(f: F, r: [f64; 3], deriv: Option<usize>) -> f64 {
    let mut p = r.map(Dual64::from_re);
    match deriv {
        None => f(p).re,
        Some(a) => {
            p[a].eps = 1.0;
            f(p).eps
        }
    }
}

/// Cardinal functions of the vertical spline: value at s of the interpolant of e_ℓ.
struct Cardinal {
    levels: Vec<f64>,
    coefs: Vec<Vec<[f64; 4]>>,
}

impl Cardinal {
    fn new(levels: &[f64]) -> Self {
        let basis = SplineBasis::new(levels);
        let m = levels.len();
        let coefs = (0..m)
            .map(|l| {
                let mut e = vec![0.0; m];
                e[l] = 1.0;
                let mm = basis.second_derivatives(&e);
                basis.interval_coefficients(&e, &mm)
            })
            .collect();
        Self {
            levels: levels.to_vec(),
            coefs,
        }
    }

    fn weights(&self, s: f64) -> Vec<f64> {
        let y = &self.levels;
        let m = y.len();
        if s > y[m - 1] {
            return vec![0.0; m];
        }
        if s <= y[0] {
            return self.coefs.iter().map(|c| c[0][0] + c[0][1] * (s - y[0])).collect();
        }
        let i = y.partition_point(|&v| v < s).clamp(1, m - 1) - 1;
        self.coefs.iter().map(|c| eval_cubic(&c[i], s - y[i])).collect()
    }
}

/// Gauss-Legendre nodes on [0, top], graded so each sub-interval is no longer than
/// max(h, its distance to t), and split at every level.
fn s_nodes(levels: &[f64], t: f64, h: f64) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    edges.extend_from_slice(levels);
    let mut out = Vec::new();
    let mut stack: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).rev().collect();
    while let Some((a, b)) = stack.pop() {
        let dist = if t < a {
            a - t
        } else if t > b {
            t - b
        } else {
            0.0
        };
        if b - a > h.max(dist) * (1.0 + 1e-12) {
            let mid = if t > a && t < b { t } else { 0.5 * (a + b) };
            stack.push((mid, b));
            stack.push((a, mid));
        } else {
            out.extend(gauss_legendre_on(GL_ORDER, a, b));
        }
    }
    out
}

/// Direct evaluation of (𝒢(F,H), Ψ(F,H)) in n = 3.
pub fn green_direct(f: &SampledField, hf: &SampledField) -> Result<GreenFields> {
    check_sources(f, hf)?;
    let grid = &f.grid;
    if grid.dim != 3 {
        return Err(Error::Config("the direct-kernel path is implemented for n = 3".into()));
    }
    let step = grid.step();
    if grid.levels[0] < 2.0 * step * (1.0 - 1e-12) {
        return Err(Error::Resolution(format!(
            "direct path needs the lowest level >= 2h, got {} with h = {step}",
            grid.levels[0]
        )));
    }
    if f.is_zero() && hf.is_zero() {
        return Ok(GreenFields::zeros(grid, false));
    }
    let m = grid.nlevels();
    let pc = PaddedConv::new(&grid.lattice);
    let nb = pc.len();
    let cell_area = grid.lattice.cell_volume();

    let spec = |field: &SampledField, c: usize| -> Option<Vec<Vec<C>>> {
        let planes: Vec<Vec<f64>> = (0..m).map(|l| field.component_plane(l, c)).collect();
        if planes.iter().all(|p| p.iter().all(|&v| v == 0.0)) {
            return None;
        }
        Some(planes.iter().map(|p| pc.forward_plane(p)).collect())
    };
    let fs: Vec<Option<Vec<Vec<C>>>> = (0..3).map(|j| spec(f, j)).collect();
    let hs: Vec<Option<Vec<Vec<C>>>> = (0..9).map(|c| spec(hf, c)).collect();
    let card = Cardinal::new(&grid.levels);

    let mut res = GreenFields::zeros(grid, false);
    for (tj, &t) in grid.levels.iter().enumerate() {
        let mut acc_v = vec![vec![ZERO; nb]; 3];
        let mut acc_w = vec![ZERO; nb];
        for (s, wq) in s_nodes(&grid.levels, t, step) {
            let beta = card.weights(s);
            let interp = |src: &Option<Vec<Vec<C>>>| -> Option<Vec<C>> {
                src.as_ref().map(|lv| {
                    let mut out = vec![ZERO; nb];
                    for (l, b) in beta.iter().enumerate() {
                        if *b != 0.0 {
                            for (o, v) in out.iter_mut().zip(&lv[l]) {
                                *o += *v * *b;
                            }
                        }
                    }
                    out
                })
            };
            let f_s: Vec<Option<Vec<C>>> = fs.iter().map(interp).collect();
            let h_s: Vec<Option<Vec<C>>> = hs.iter().map(interp).collect();
            let near = (t - s).abs() < NEAR_HEIGHT * step;
            let scale = wq * cell_area;
            let wq_c = C::new(scale, 0.0);

            // F term: G_ij and g_j
            let f_live: Vec<usize> = (0..3).filter(|&j| f_s[j].is_some()).collect();
            if !f_live.is_empty() {
                let kern = pc.forward_kernels(12, |xp, o| {
                    let r = [xp[0], xp[1], t - s];
                    let cell = near_cell(xp, step, near);
                    let x = [xp[0], xp[1], t];
                    let y = [0.0, 0.0, s];
                    for i in 0..3 {
                        for j in 0..3 {
                            let mut g = green_tensor(x, y, i, j);
                            if let Some(hc) = cell {
                                g += (free_velocity(i, j, r, Some(hc), None) - free_velocity(i, j, r, None, None))
                                    / (8.0 * std::f64::consts::PI);
                            }
                            o[i * 3 + j] = g;
                        }
                    }
                    for j in 0..3 {
                        let mut g = green_pressure(x, y, j);
                        if let Some(hc) = cell {
                            g += (free_pressure(j, r, Some(hc), None) - free_pressure(j, r, None, None))
                                / (4.0 * std::f64::consts::PI);
                        }
                        o[9 + j] = g;
                    }
                });
                for &j in &f_live {
                    let src = f_s[j].as_ref().unwrap();
                    for i in 0..3 {
                        let kh = &kern[i * 3 + j];
                        for b in 0..nb {
                            acc_v[i][b] += kh[b] * src[b] * wq_c;
                        }
                    }
                    let kh = &kern[9 + j];
                    for b in 0..nb {
                        acc_w[b] += kh[b] * src[b] * wq_c;
                    }
                }
            }

            // H term: −∂_{y_k} G_ij H_jk and −∂_{y_k} g_j H_jk
            let h_live: Vec<usize> = (0..9).filter(|&c| h_s[c].is_some()).collect();
            if !h_live.is_empty() {
                let kern = pc.forward_kernels(36, |xp, o| {
                    let r = [xp[0], xp[1], t - s];
                    let cell = near_cell(xp, step, near);
                    let x = [Dual64::from_re(xp[0]), Dual64::from_re(xp[1]), Dual64::from_re(t)];
                    for k in 0..3 {
                        let mut y = [Dual64::from_re(0.0), Dual64::from_re(0.0), Dual64::from_re(s)];
                        y[k].eps = 1.0;
                        for i in 0..3 {
                            for j in 0..3 {
                                let mut g = green_tensor(x, y, i, j).eps;
                                if let Some(hc) = cell {
                                    // ∂_{y_k} = −∂_{r_k}
                                    g -= (free_velocity(i, j, r, Some(hc), Some(k))
                                        - free_velocity(i, j, r, None, Some(k)))
                                        / (8.0 * std::f64::consts::PI);
                                }
                                o[(i * 3 + j) * 3 + k] = g;
                            }
                        }
                    }
                    for k in 0..3 {
                        let mut y = [Dual64::from_re(0.0), Dual64::from_re(0.0), Dual64::from_re(s)];
                        y[k].eps = 1.0;
                        for j in 0..3 {
                            let mut g = green_pressure(x, y, j).eps;
                            if let Some(hc) = cell {
                                g -= (free_pressure(j, r, Some(hc), Some(k)) - free_pressure(j, r, None, Some(k)))
                                    / (4.0 * std::f64::consts::PI);
                            }
                            o[27 + j * 3 + k] = g;
                        }
                    }
                });
                for &c in &h_live {
                    let (j, k) = (c / 3, c % 3);
                    let src = h_s[c].as_ref().unwrap();
                    for i in 0..3 {
                        let kh = &kern[(i * 3 + j) * 3 + k];
                        for b in 0..nb {
                            acc_v[i][b] -= kh[b] * src[b] * wq_c;
                        }
                    }
                    let kh = &kern[27 + j * 3 + k];
                    for b in 0..nb {
                        acc_w[b] -= kh[b] * src[b] * wq_c;
                    }
                }
            }
        }
        for (i, spec) in acc_v.into_iter().enumerate() {
            res.v.set_component_plane(tj, i, &pc.extract(spec));
        }
        let mut w = pc.extract(acc_w);
        // the cell-integrated r_3/ρ³ jumps by −1 as s crosses t: local term H_33(t)
        let h33 = hf.component_plane(tj, 8);
        for (a, b) in w.iter_mut().zip(&h33) {
            *a += b;
        }
        res.w.set_component_plane(tj, 0, &w);
    }
    res.normalize_pressure();
    Ok(res)
}

fn near_cell(xp: &[f64], step: f64, near: bool) -> Option<f64> {
    if !near {
        return None;
    }
    let lim = NEAR_CELLS as f64 * step * (1.0 + 1e-9);
    (xp[0].abs() <= lim && xp[1].abs() <= lim).then_some(step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    #[test]
    fn antiderivatives_differentiate_back() {
        // ∂_x∂_y Φ = kernel, checked with nested duals at a generic point
        use num_dual::HyperDual64;
        let kernels = |which: usize, r: [f64; 3]| -> f64 {
            let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            let r3 = rho.powi(3);
            match which {
                0 => 1.0 / rho,
                1 => r[0] * r[0] / r3,
                2 => r[1] * r[1] / r3,
                3 => r[2] * r[2] / r3,
                4 => r[0] * r[1] / r3,
                5 => r[0] * r[2] / r3,
                6 => r[1] * r[2] / r3,
                7 => r[0] / r3,
                8 => r[1] / r3,
                _ => r[2] / r3,
            }
        };
        for &r in &[[0.3, -0.7, 0.2], [-1.1, -0.4, -0.6], [0.05, 0.9, 0.01]] {
            for which in 0..10 {
                let x = HyperDual64::new(r[0], 1.0, 0.0, 0.0);
                let y = HyperDual64::new(r[1], 0.0, 1.0, 0.0);
                let z = HyperDual64::from_re(r[2]);
                let mixed = antiderivative(which, x, y, z).eps1eps2;
                assert!((mixed - kernels(which, r)).abs() < 1e-10, "{which} {r:?}");
            }
        }
    }

    #[test]
    fn cell_average_matches_quadrature() {
        let h = 0.25;
        let z = 0.07;
        for &(cx, cy) in &[(0.0, 0.0), (0.25, -0.5)] {
            let exact = cell_integral(0, cx, cy, z, h, None);
            let quad = integrate(
                |x| integrate(|y| 1.0 / (x * x + y * y + z * z).sqrt(), cy - h / 2.0, cy + h / 2.0, 1e-12),
                cx - h / 2.0,
                cx + h / 2.0,
                1e-12,
            );
            assert!((exact - quad).abs() < 1e-8 * quad.abs(), "{exact} {quad}");
        }
        // the r_3/ρ³ cell integral tends to ±2π at the center cell
        let up = cell_integral(9, 0.0, 0.0, 1e-9, h, None);
        let dn = cell_integral(9, 0.0, 0.0, -1e-9, h, None);
        assert!((up - 2.0 * std::f64::consts::PI).abs() < 1e-6 && (dn + up).abs() < 1e-12);
    }

    #[test]
    fn graded_nodes_integrate_polynomials() {
        let levels = [0.25, 0.4, 0.8, 1.6];
        for &t in &levels {
            let nodes = s_nodes(&levels, t, 0.125);
            let s: f64 = nodes.iter().map(|(x, w)| w * x * x).sum();
            assert!((s - 1.6f64.powi(3) / 3.0).abs() < 1e-12);
            assert!(nodes.iter().all(|(x, _)| (x - t).abs() > 1e-6));
        }
    }
}
