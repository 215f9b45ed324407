//! Horizontal masses ∫_{R^{n-1}} K(x', x_n) dx' by spherical quadrature.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, integrate_to_infinity};

use super::{odqvist_big_k, poisson_p};

/// Directions and weights integrating exactly over the unit sphere of R^d (d ≤ 3) for
/// integrands that are low-degree polynomials in the direction.
pub fn sphere_rule(d: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    match d {
        1 => Ok(vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]),
        2 => {
            let m = 16;
            Ok((0..m)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / m as f64;
                    (vec![t.cos(), t.sin()], 2.0 * PI / m as f64)
                })
                .collect())
        }
        3 => {
            let m = 16;
            let mut out = Vec::new();
            for (c, w) in gauss_legendre(10) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..m {
                    let t = 2.0 * PI * k as f64 / m as f64;
                    out.push((vec![s * t.cos(), s * t.sin(), c], w * 2.0 * PI / m as f64));
                }
            }
            Ok(out)
        }
        _ => Err(Error::OutOfRange(format!(
            "spherical rule for horizontal dimension {d}"
        ))),
    }
}

/// ∫_{R^d} f(x') dx' for a kernel decaying at infinity, at height scale `xn`.
pub fn horizontal_mass<F: Fn(&[f64]) -> f64>(f: F, d: usize, xn: f64) -> Result<f64> {
    let rule = sphere_rule(d)?;
    let radial = |r: f64| {
        let mut acc = 0.0;
        let mut p = vec![0.0; d];
        for (dir, w) in &rule {
            for a in 0..d {
                p[a] = r * dir[a];
            }
            acc += w * f(&p);
        }
        acc * r.powi(d as i32 - 1)
    };
    let v = integrate_to_infinity(radial, 0.0, 20.0 * xn, 1e-15);
    if !v.is_finite() {
        return Err(Error::Quadrature("non-finite kernel mass".into()));
    }
    Ok(v)
}

/// ∫ K_ij(x', x_n) dx' (zero-based indices).
pub fn kernel_mass(i: usize, j: usize, xn: f64, n: usize) -> Result<f64> {
    if !(xn > 0.0) {
        return Err(Error::OutOfRange(format!("x_n must be positive, got {xn}")));
    }
    if i >= n || j >= n {
        return Err(Error::OutOfRange("component index".into()));
    }
    horizontal_mass(|p| odqvist_big_k(p, xn, i, j).unwrap(), n - 1, xn)
}

/// ∫ P_{x_n}(x') dx'.
pub fn poisson_mass(xn: f64, n: usize) -> Result<f64> {
    if !(xn > 0.0) {
        return Err(Error::OutOfRange(format!("x_n must be positive, got {xn}")));
    }
    horizontal_mass(|p| poisson_p(p, xn).unwrap(), n - 1, xn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odqvist_rows_have_unit_mass() {
        for n in [3usize, 4] {
            for xn in [0.25, 1.0, 4.0] {
                for i in 0..n {
                    for j in 0..n {
                        let m = kernel_mass(i, j, xn, n).unwrap();
                        if i == j {
                            assert!((m - 1.0).abs() < 1e-6, "n={n} xn={xn} i={i}: {m}");
                        } else {
                            assert!(m.abs() < 1e-8, "n={n} i={i} j={j}: {m}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn radial_closed_form_for_vertical_entry() {
        // (6/4π)·2π x_n³ ∫ r (r²+x_n²)^{-5/2} dr = 1
        let m = kernel_mass(2, 2, 1.0, 3).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_unit_mass() {
        for n in [2usize, 3, 4] {
            for xn in [0.25, 1.0, 4.0] {
                assert!((poisson_mass(xn, n).unwrap() - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rejects_bad_height() {
        assert!(kernel_mass(0, 0, 0.0, 3).is_err());
        assert!(poisson_mass(-1.0, 3).is_err());
    }
}
