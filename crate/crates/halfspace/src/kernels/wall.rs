//! Green tensor of the Stokes system in R^3_+ with no-slip wall at x_3 = 0 (image system:
//! Stokeslet, image Stokeslet, Stokes doublet and source doublet at y* = (y', -y_3)).
//!
//! Generic over dual numbers so derivatives in x or y come from the same code.

use std::f64::consts::PI;

use num_dual::DualNum;

use crate::error::{Error, Result};

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn norm<T: DualNum<Primitive = f64> + Copy>(v: &[T; 3]) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// G_ij(x, y): velocity component i at x due to a unit point force e_j at y.
pub fn green_tensor<T: DualNum<Primitive = f64> + Copy>(x: [T; 3], y: [T; 3], i: usize, j: usize) -> T {
    let h = y[2];
    let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let q = [x[0] - y[0], x[1] - y[1], x[2] + h];
    let rn = norm(&r);
    let qn = norm(&q);
    let r3 = rn * rn * rn;
    let q3 = qn * qn * qn;
    let q5 = q3 * qn * qn;
    let dij = delta(i, j);
    let free = rn.recip() * dij + r[i] * r[j] / r3;
    let image = qn.recip() * dij + q[i] * q[j] / q3;
    // ∂_{R_j} of Φ_i(R) = h R_i/R³ − δ_i3/R − R_i R_3/R³
    let dphi = h * (q3.recip() * dij - q[i] * q[j] * 3.0 / q5) + q[j] * delta(i, 2) / q3
        - (q[2] * dij + q[i] * delta(2, j)) / q3
        + q[i] * q[2] * q[j] * 3.0 / q5;
    let m = if j == 2 { -1.0 } else { 1.0 };
    (free - image + h * dphi * (2.0 * m)) * (1.0 / (8.0 * PI))
}

/// g_j(x, y): pressure at x due to a unit point force e_j at y.
pub fn green_pressure<T: DualNum<Primitive = f64> + Copy>(x: [T; 3], y: [T; 3], j: usize) -> T {
    let h = y[2];
    let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let q = [x[0] - y[0], x[1] - y[1], x[2] + h];
    let rn = norm(&r);
    let qn = norm(&q);
    let r3 = rn * rn * rn;
    let q3 = qn * qn * qn;
    let q5 = q3 * qn * qn;
    let m = if j == 2 { -1.0 } else { 1.0 };
    let d = q3.recip() * delta(2, j) - q[2] * q[j] * 3.0 / q5;
    (r[j] / r3 - q[j] / q3 - h * d * (2.0 * m)) * (1.0 / (4.0 * PI))
}

fn check(x: &[f64; 3], y: &[f64; 3]) -> Result<()> {
    if !(x[2] >= 0.0) || !(y[2] > 0.0) {
        return Err(Error::OutOfRange("wall Green tensor needs x_3 >= 0, y_3 > 0".into()));
    }
    if x == y {
        return Err(Error::OutOfRange("coincident points".into()));
    }
    Ok(())
}

/// Checked f64 evaluation of G_ij(x, y).
pub fn wall_green_g(x: [f64; 3], y: [f64; 3], i: usize, j: usize) -> Result<f64> {
    check(&x, &y)?;
    if i > 2 || j > 2 {
        return Err(Error::OutOfRange("index".into()));
    }
    Ok(green_tensor(x, y, i, j))
}

/// Checked f64 evaluation of g_j(x, y).
pub fn wall_green_pressure(x: [f64; 3], y: [f64; 3], j: usize) -> Result<f64> {
    check(&x, &y)?;
    if j > 2 {
        return Err(Error::OutOfRange("index".into()));
    }
    Ok(green_pressure(x, y, j))
}

/// ∇_y G_ij(x, y) (three components) via forward-mode duals.
pub fn green_tensor_grad_y(x: [f64; 3], y: [f64; 3], i: usize, j: usize) -> [f64; 3] {
    use num_dual::Dual64;
    let xd = x.map(Dual64::from_re);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut yd = y.map(Dual64::from_re);
        yd[k].eps = 1.0;
        *o = green_tensor(xd, yd, i, j).eps;
    }
    out
}

/// ∇_y g_j(x, y).
pub fn green_pressure_grad_y(x: [f64; 3], y: [f64; 3], j: usize) -> [f64; 3] {
    use num_dual::Dual64;
    let xd = x.map(Dual64::from_re);
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut yd = y.map(Dual64::from_re);
        yd[k].eps = 1.0;
        *o = green_pressure(xd, yd, j).eps;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_dual::{Dual2_64, Dual64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng) -> ([f64; 3], [f64; 3]) {
        loop {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.05..1.5)];
            let y = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.05..1.5)];
            let d: f64 = (0..3).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>().sqrt();
            if d > 0.2 {
                return (x, y);
            }
        }
    }

    #[test]
    fn vanishes_on_the_wall() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (mut x, y) = random_pair(&mut rng);
            x[2] = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    assert!(wall_green_g(x, y, i, j).unwrap().abs() <= 1e-10);
                }
            }
            // linear vanishing just above the wall: G(ε)/G(2ε) ≈ 1/2 for tangential components
            let e = 1e-6;
            let g1 = green_tensor([x[0], x[1], e], y, 0, 0);
            let g2 = green_tensor([x[0], x[1], 2.0 * e], y, 0, 0);
            if g2.abs() > 1e-9 {
                assert!((g1 / g2 - 0.5).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn symmetric_under_swap() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let (x, y) = random_pair(&mut rng);
            for i in 0..3 {
                for j in 0..3 {
                    let a = green_tensor(x, y, i, j);
                    let b = green_tensor(y, x, j, i);
                    assert!((a - b).abs() < 1e-12, "{i}{j}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn solves_stokes_away_from_the_pole() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let (x, y) = random_pair(&mut rng);
            let yd2 = y.map(Dual2_64::from_re);
            let yd1 = y.map(Dual64::from_re);
            for j in 0..3 {
                let mut div = 0.0;
                let mut grad_p = [0.0; 3];
                for (a, gp) in grad_p.iter_mut().enumerate() {
                    let mut xd = x.map(Dual64::from_re);
                    xd[a].eps = 1.0;
                    *gp = green_pressure(xd, yd1, j).eps;
                }
                for i in 0..3 {
                    let mut lap = 0.0;
                    for a in 0..3 {
                        let mut xd = x.map(Dual2_64::from_re);
                        xd[a] = Dual2_64::new(x[a], 1.0, 0.0);
                        let v = green_tensor(xd, yd2, i, j);
                        lap += v.v2;
                        if a == i {
                            div += v.v1;
                        }
                    }
                    assert!((-lap + grad_p[i]).abs() < 1e-11, "momentum i={i} j={j}");
                }
                assert!(div.abs() < 1e-12, "div j={j}: {div}");
            }
        }
    }

    #[test]
    fn reduces_to_stokeslet_far_from_wall() {
        let x = [0.1, 0.2, 1000.3];
        let y = [0.0, -0.1, 1000.0];
        let r = [0.1, 0.3, 0.3];
        let rn = (0.19f64).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                let s = (d / rn + r[i] * r[j] / rn.powi(3)) / (8.0 * PI);
                assert!((green_tensor(x, y, i, j) - s).abs() < 1e-3 * s.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn finite_difference_divergence_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let h = 1e-3;
        for _ in 0..50 {
            let (x, y) = random_pair(&mut rng);
            let d: f64 = (0..3).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>().sqrt();
            if d < 0.5 {
                continue;
            }
            for j in 0..3 {
                let mut div = 0.0;
                for a in 0..3 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[a] += h;
                    xm[a] -= h;
                    div += (green_tensor(xp, y, a, j) - green_tensor(xm, y, a, j)) / (2.0 * h);
                }
                assert!(div.abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn rejects_invalid_points() {
        assert!(wall_green_g([0.0, 0.0, 1.0], [0.0, 0.0, 1.0], 0, 0).is_err());
        assert!(wall_green_g([0.0, 0.0, 1.0], [0.0, 0.0, 0.0], 0, 0).is_err());
        assert!(wall_green_pressure([0.0, 0.0, -1.0], [0.0, 0.0, 1.0], 0).is_err());
    }

    #[test]
    fn y_gradients_match_finite_differences() {
        let x = [0.2, -0.3, 0.6];
        let y = [-0.1, 0.25, 0.9];
        let h = 1e-5;
        for i in 0..3 {
            for j in 0..3 {
                let g = green_tensor_grad_y(x, y, i, j);
                for k in 0..3 {
                    let mut yp = y;
                    let mut ym = y;
                    yp[k] += h;
                    ym[k] -= h;
                    let fd = (green_tensor(x, yp, i, j) - green_tensor(x, ym, i, j)) / (2.0 * h);
                    assert!((fd - g[k]).abs() < 1e-8);
                }
            }
        }
    }
}
