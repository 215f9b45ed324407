//! Small numerical building blocks shared by the operators.

pub mod fd;
pub mod fft;
pub mod spline;

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = Neumaier::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Γ(k/2) for a positive integer k, by the exact half-integer recurrence.
pub fn gamma_half(k: usize) -> f64 {
    assert!(k > 0);
    let (mut g, mut x) = if k % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in R^d.
pub fn ball_volume(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}

/// Surface area of the unit sphere S^{n-1} in R^n.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Gauss-Legendre nodes and weights on [-1, 1], ordered by node.
pub fn gauss_legendre(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(order).expect("order > 0"));
    let mut v: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    v
}

/// Gauss-Legendre rule mapped onto [a, b].
pub fn gauss_legendre_on(order: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(order)
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

/// Adaptive integral over [a, b] (tanh-sinh).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

/// Integral over [a, inf) by splitting at `cut` and folding the tail onto (0, 1] via r = cut / v.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, cut: f64, tol: f64) -> f64 {
    let near = integrate(&f, a, cut, tol);
    let far = integrate(
        |v: f64| {
            if v <= 0.0 {
                0.0
            } else {
                f(cut / v) * cut / (v * v)
            }
        },
        0.0,
        1.0,
        tol,
    );
    near + far
}

pub fn is_power_of_two(n: usize) -> bool {
    n > 0 && n & (n - 1) == 0
}

/// ∫_0^1 x^r e^{mu x} dx for r = 0..=rmax, stable for mu <= 0.
pub fn exp_moments(mu: f64, rmax: usize, out: &mut [f64]) {
    if mu.abs() < 2.0 {
        for (r, o) in out.iter_mut().enumerate().take(rmax + 1) {
            let mut term = 1.0;
            let mut acc = 1.0 / (r as f64 + 1.0);
            let mut j = 1usize;
            loop {
                term *= mu / j as f64;
                let add = term / (r + j + 1) as f64;
                acc += add;
                if add.abs() < 1e-17 * acc.abs() || j > 60 {
                    break;
                }
                j += 1;
            }
            *o = acc;
        }
    } else {
        let e = mu.exp();
        out[0] = (e - 1.0) / mu;
        for r in 1..=rmax {
            out[r] = (e - r as f64 * out[r - 1]) / mu;
        }
    }
}
