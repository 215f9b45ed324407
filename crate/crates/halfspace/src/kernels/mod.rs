//! Closed-form kernels: the free-space fundamental solution (E, b), the Odqvist boundary
//! kernels (K, k), the Poisson kernel and the n = 3 wall Green tensor.
//!
//! Component indices are zero-based: index `n - 1` is the vertical direction.

pub mod bounds;
pub mod mass;
pub mod wall;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{ball_volume, sphere_area};

/// Largest spatial dimension supported by the fixed-size jet helpers.
pub const MAXD: usize = 8;

/// Surface area of S^{n-1} ⊂ R^n (so omega(3) = 4π), the normalization of the Stokeslet.
pub fn omega(n: usize) -> f64 {
    sphere_area(n)
}

/// c_n = Γ(n/2)/π^{n/2}, the unit-mass constant of the Poisson kernel.
pub fn poisson_constant(n: usize) -> f64 {
    2.0 / omega(n)
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(Error::OutOfRange(format!("component {i} in dimension {n}")));
    }
    Ok(())
}

/// Velocity part E_ij of the fundamental solution at x ∈ R^n \ {0}.
pub fn fundamental_e(x: &[f64], i: usize, j: usize) -> Result<f64> {
    let n = x.len();
    check_index(i, n)?;
    check_index(j, n)?;
    let r2 = norm2(x);
    if r2 == 0.0 {
        return Err(Error::OutOfRange("E is singular at x = 0".into()));
    }
    let d = if i == j { 1.0 } else { 0.0 };
    if n == 2 {
        return Ok((x[i] * x[j] / r2 - d * 0.5 * r2.ln()) / (4.0 * PI));
    }
    let r = r2.sqrt();
    let w = omega(n);
    Ok((d / ((n as f64 - 2.0) * r.powi(n as i32 - 2)) + x[i] * x[j] / r.powi(n as i32))
        / (2.0 * w))
}

/// Pressure part b_j of the fundamental solution.
pub fn fundamental_b(x: &[f64], j: usize) -> Result<f64> {
    let n = x.len();
    check_index(j, n)?;
    let r2 = norm2(x);
    if r2 == 0.0 {
        return Err(Error::OutOfRange("b is singular at x = 0".into()));
    }
    Ok(x[j] / (omega(n) * r2.sqrt().powi(n as i32)))
}

fn full_point(xp: &[f64], xn: f64) -> Result<Vec<f64>> {
    if !(xn > 0.0) {
        return Err(Error::OutOfRange(format!("x_n must be positive, got {xn}")));
    }
    let mut x = xp.to_vec();
    x.push(xn);
    Ok(x)
}

/// Odqvist velocity kernel K_ij(x', x_n) = (2n/ω) x_n x_i x_j / |x|^{n+2}.
pub fn odqvist_big_k(xp: &[f64], xn: f64, i: usize, j: usize) -> Result<f64> {
    let x = full_point(xp, xn)?;
    let n = x.len();
    check_index(i, n)?;
    check_index(j, n)?;
    let r = norm2(&x).sqrt();
    Ok(2.0 * n as f64 / omega(n) * xn * x[i] * x[j] / r.powi(n as i32 + 2))
}

/// The k_j kernel exactly as written for the pressure representation:
/// (4/ω) x_n x_j/|x|^{n+2} for j < n and (4/ω)(n x_n² − |x|²)/(n|x|^{n+2}) for j = n.
pub fn odqvist_small_k(xp: &[f64], xn: f64, j: usize) -> Result<f64> {
    let x = full_point(xp, xn)?;
    let n = x.len();
    check_index(j, n)?;
    let r2 = norm2(&x);
    let rp = r2.sqrt().powi(n as i32 + 2);
    let w = omega(n);
    if j + 1 < n {
        Ok(4.0 / w * xn * x[j] / rp)
    } else {
        Ok(4.0 / w * (n as f64 * xn * xn - r2) / (n as f64 * rp))
    }
}

/// Kernel whose convolution with f gives the pressure paired with 𝓗f: n·k_j.
/// (Equals −2 ∂_{x_n} P for j = n and −2 ∂_{x_j} P for j < n.)
pub fn odqvist_pressure(xp: &[f64], xn: f64, j: usize) -> Result<f64> {
    Ok((xp.len() + 1) as f64 * odqvist_small_k(xp, xn, j)?)
}

/// Poisson kernel P_{x_n}(x') = c_n x_n (|x'|² + x_n²)^{-n/2}.
pub fn poisson_p(xp: &[f64], xn: f64) -> Result<f64> {
    if !(xn > 0.0) {
        return Err(Error::OutOfRange(format!("x_n must be positive, got {xn}")));
    }
    let n = xp.len() + 1;
    let r2 = norm2(xp) + xn * xn;
    Ok(poisson_constant(n) * xn / r2.sqrt().powi(n as i32))
}

/// Constant c with |K_ij| ≤ c P_{x_n} pointwise.
pub fn odqvist_domination_constant(n: usize) -> f64 {
    (2.0 * n as f64 / omega(n)) / poisson_constant(n)
}

/// Constant C with |k_j| ≤ C x_n^{-1} P_{x_n} pointwise.
pub fn pressure_domination_constant(n: usize) -> f64 {
    (4.0 / omega(n)) / poisson_constant(n)
}

/// Unit-ball volume of R^{n-1}, the constant of the averaging identity.
pub fn averaging_constant(n: usize) -> f64 {
    ball_volume(n - 1)
}

/// coef · x^alpha · |x|^{-p}: the building block of the Odqvist kernels.
#[derive(Debug, Clone, Copy)]
pub struct PowerTerm {
    pub coef: f64,
    pub alpha: [u8; MAXD],
    pub p: f64,
}

/// Value, gradient and Laplacian at a point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; MAXD],
    pub lap: f64,
}

impl PowerTerm {
    fn monomial(&self, x: &[f64], drop: Option<(usize, u8)>) -> f64 {
        let mut m = 1.0;
        for (a, &xa) in x.iter().enumerate() {
            let mut e = self.alpha[a];
            if let Some((b, k)) = drop {
                if a == b {
                    e -= k;
                }
            }
            for _ in 0..e {
                m *= xa;
            }
        }
        m
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        let n = x.len();
        let r2 = norm2(x);
        let rp = r2.powf(-0.5 * self.p);
        let rp2 = rp / r2;
        let mono = self.monomial(x, None);
        let deg: u32 = self.alpha[..n].iter().map(|&a| a as u32).sum();
        let mut j = Jet {
            value: self.coef * mono * rp,
            ..Jet::default()
        };
        let mut lap_mono = 0.0;
        for a in 0..n {
            let e = self.alpha[a];
            let dm = if e >= 1 {
                e as f64 * self.monomial(x, Some((a, 1)))
            } else {
                0.0
            };
            j.grad[a] = self.coef * (dm * rp - self.p * x[a] * mono * rp2);
            if e >= 2 {
                lap_mono += (e as f64) * (e as f64 - 1.0) * self.monomial(x, Some((a, 2)));
            }
        }
        let p = self.p;
        j.lap = self.coef
            * (lap_mono * rp + (p * (p + 2.0 - n as f64) - 2.0 * p * deg as f64) * mono * rp2);
        j
    }
}

pub fn eval_terms(terms: &[PowerTerm], x: &[f64]) -> Jet {
    let n = x.len();
    let mut out = Jet::default();
    for t in terms {
        let j = t.jet(x);
        out.value += j.value;
        out.lap += j.lap;
        for a in 0..n {
            out.grad[a] += j.grad[a];
        }
    }
    out
}

fn alpha(idx: &[usize]) -> [u8; MAXD] {
    let mut a = [0u8; MAXD];
    for &i in idx {
        a[i] += 1;
    }
    a
}

/// K_ij as power terms.
pub fn odqvist_velocity_terms(n: usize, i: usize, j: usize) -> Vec<PowerTerm> {
    assert!(n <= MAXD);
    vec![PowerTerm {
        coef: 2.0 * n as f64 / omega(n),
        alpha: alpha(&[n - 1, i, j]),
        p: n as f64 + 2.0,
    }]
}

/// n·k_j (the pressure kernel of 𝓗) as power terms.
pub fn odqvist_pressure_terms(n: usize, j: usize) -> Vec<PowerTerm> {
    assert!(n <= MAXD);
    let w = omega(n);
    let nf = n as f64;
    if j + 1 < n {
        vec![PowerTerm {
            coef: 4.0 * nf / w,
            alpha: alpha(&[n - 1, j]),
            p: nf + 2.0,
        }]
    } else {
        vec![
            PowerTerm {
                coef: 4.0 * nf / w,
                alpha: alpha(&[n - 1, n - 1]),
                p: nf + 2.0,
            },
            PowerTerm {
                coef: -4.0 / w,
                alpha: [0; MAXD],
                p: nf,
            },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn golden_values() {
        assert!((fundamental_e(&[1.0, 0.0, 0.0], 0, 0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert_eq!(fundamental_e(&[0.0, 0.0, 1.0], 0, 1).unwrap(), 0.0);
        assert!((fundamental_b(&[1.0, 0.0, 0.0], 0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((odqvist_big_k(&[0.0, 0.0], 1.0, 2, 2).unwrap() - 3.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((odqvist_small_k(&[0.0, 0.0], 1.0, 2).unwrap() - 2.0 / (3.0 * PI)).abs() < 1e-15);
        assert_eq!(odqvist_small_k(&[0.0, 0.0], 1.0, 0).unwrap(), 0.0);
        assert!((poisson_p(&[0.0, 0.0], 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((omega(3) - 4.0 * PI).abs() < 1e-14);
        assert!((omega(2) - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn matches_standard_stokeslet() {
        let x = [0.3, -0.7, 1.1];
        let r = norm2(&x).sqrt();
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                let s = (d / r + x[i] * x[j] / r.powi(3)) / (8.0 * PI);
                assert!((fundamental_e(&x, i, j).unwrap() - s).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn invalid_points_rejected() {
        assert!(fundamental_e(&[0.0, 0.0, 0.0], 0, 0).is_err());
        assert!(odqvist_big_k(&[1.0, 0.0], 0.0, 0, 0).is_err());
        assert!(poisson_p(&[1.0, 0.0], -1.0).is_err());
        assert!(fundamental_b(&[1.0, 0.0, 0.0], 3).is_err());
    }

    #[test]
    fn symmetry_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 3..=5 {
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                let r = norm2(&x).sqrt();
                let mut tr = 0.0;
                for i in 0..n {
                    tr += fundamental_e(&x, i, i).unwrap();
                    for j in 0..n {
                        let a = fundamental_e(&x, i, j).unwrap();
                        let b = fundamental_e(&x, j, i).unwrap();
                        assert_eq!(a, b);
                    }
                }
                let nf = n as f64;
                let expect = (nf / (nf - 2.0) + 1.0) / (2.0 * omega(n) * r.powi(n as i32 - 2));
                assert!((tr - expect).abs() < 1e-12 * expect.abs());
            }
        }
    }

    #[test]
    fn degree_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..=4 {
            for _ in 0..50 {
                let xp: Vec<f64> = (0..n - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
                let xn = rng.random_range(0.1..2.0);
                let lam: f64 = rng.random_range(0.3..3.0);
                let xl: Vec<f64> = xp.iter().map(|v| v * lam).collect();
                for i in 0..n {
                    for j in 0..n {
                        let a = odqvist_big_k(&xl, lam * xn, i, j).unwrap();
                        let b = lam.powi(-(n as i32 - 1)) * odqvist_big_k(&xp, xn, i, j).unwrap();
                        assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300));
                    }
                    let a = odqvist_small_k(&xl, lam * xn, i).unwrap();
                    let b = lam.powi(-(n as i32)) * odqvist_small_k(&xp, xn, i).unwrap();
                    assert!((a - b).abs() <= 1e-13 * b.abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn pointwise_domination_by_poisson() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 3;
        let c = odqvist_domination_constant(n);
        let ck = pressure_domination_constant(n);
        for _ in 0..1000 {
            let xp = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let xn = rng.random_range(0.01..5.0);
            let p = poisson_p(&xp, xn).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert!(odqvist_big_k(&xp, xn, i, j).unwrap().abs() <= c * p * (1.0 + 1e-12));
                }
                assert!(odqvist_small_k(&xp, xn, i).unwrap().abs() <= ck * p / xn * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn pressure_kernel_is_minus_two_poisson_derivative() {
        let xp = [0.4, -0.2];
        let xn = 0.7;
        let h = 1e-5;
        let dn = (poisson_p(&xp, xn + h).unwrap() - poisson_p(&xp, xn - h).unwrap()) / (2.0 * h);
        assert!((odqvist_pressure(&xp, xn, 2).unwrap() + 2.0 * dn).abs() < 1e-8);
        let d0 = (poisson_p(&[xp[0] + h, xp[1]], xn).unwrap()
            - poisson_p(&[xp[0] - h, xp[1]], xn).unwrap())
            / (2.0 * h);
        assert!((odqvist_pressure(&xp, xn, 0).unwrap() + 2.0 * d0).abs() < 1e-8);
    }

    #[test]
    fn power_term_jets_match_finite_differences() {
        let x = [0.3, -0.45, 0.8];
        let n = 3;
        let h = 1e-4;
        let mut sets: Vec<Vec<PowerTerm>> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                sets.push(odqvist_velocity_terms(n, i, j));
            }
            sets.push(odqvist_pressure_terms(n, i));
        }
        for terms in &sets {
            let f = |y: &[f64]| eval_terms(terms, y).value;
            let jet = eval_terms(terms, &x);
            let mut lap = 0.0;
            for a in 0..n {
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let g = (f(&xp) - f(&xm)) / (2.0 * h);
                assert!((g - jet.grad[a]).abs() < 1e-6, "grad {a}: {g} vs {}", jet.grad[a]);
                lap += (f(&xp) - 2.0 * f(&x) + f(&xm)) / (h * h);
            }
            assert!((lap - jet.lap).abs() < 1e-4 * (1.0 + lap.abs()), "{lap} vs {}", jet.lap);
        }
        // values agree with the direct formulas
        let v = eval_terms(&odqvist_velocity_terms(n, 0, 2), &x).value;
        assert!((v - odqvist_big_k(&x[..2], x[2], 0, 2).unwrap()).abs() < 1e-15);
        let v = eval_terms(&odqvist_pressure_terms(n, 2), &x).value;
        assert!((v - odqvist_pressure(&x[..2], x[2], 2).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn odqvist_pair_solves_homogeneous_stokes_pointwise() {
        // −ΔK_{·j} + ∇(n k_j) = 0 and ∂_i K_ij = 0 away from the origin.
        let x = [0.3, -0.45, 0.8];
        let n = 3;
        for j in 0..n {
            let pj = eval_terms(&odqvist_pressure_terms(n, j), &x);
            let mut div = 0.0;
            for i in 0..n {
                let kij = eval_terms(&odqvist_velocity_terms(n, i, j), &x);
                assert!((-kij.lap + pj.grad[i]).abs() < 1e-12, "momentum {i}{j}");
                div += kij.grad[i];
            }
            assert!(div.abs() < 1e-12, "div column {j}: {div}");
        }
    }
}
