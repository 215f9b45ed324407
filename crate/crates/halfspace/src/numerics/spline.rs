//! Not-a-knot cubic splines on a fixed node set, reusable for many data vectors.

use std::ops::{Add, Mul, Sub};

/// Values a spline can carry (real or complex).
pub trait Linear: Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl<T> Linear for T where T: Copy + Default + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T> {}

#[derive(Debug, Clone)]
pub struct SplineBasis {
    nodes: Vec<f64>,
    h: Vec<f64>,
    sub: Vec<f64>,
    cprime: Vec<f64>,
    denom: Vec<f64>,
}

impl SplineBasis {
    pub fn new(nodes: &[f64]) -> Self {
        assert!(!nodes.is_empty());
        assert!(nodes.windows(2).all(|w| w[1] > w[0]), "nodes must increase");
        let h: Vec<f64> = nodes.windows(2).map(|w| w[1] - w[0]).collect();
        let m = nodes.len();
        let mut sub = Vec::new();
        let mut cprime = Vec::new();
        let mut denom = Vec::new();
        if m >= 4 {
            let r = m - 2;
            let mut diag = vec![0.0; r];
            let mut sup = vec![0.0; r];
            sub = vec![0.0; r];
            for k in 0..r {
                let i = k + 1;
                let (a, b) = (h[i - 1], h[i]);
                diag[k] = 2.0 * (a + b);
                sub[k] = a;
                sup[k] = b;
            }
            let (h0, h1) = (h[0], h[1]);
            diag[0] = 3.0 * h0 + 2.0 * h1 + h0 * h0 / h1;
            sup[0] = h1 - h0 * h0 / h1;
            sub[0] = 0.0;
            let (a, b) = (h[m - 3], h[m - 2]);
            diag[r - 1] = 2.0 * a + 3.0 * b + b * b / a;
            sub[r - 1] = a - b * b / a;
            sup[r - 1] = 0.0;
            cprime = vec![0.0; r];
            denom = vec![0.0; r];
            for k in 0..r {
                let d = if k == 0 { diag[0] } else { diag[k] - sub[k] * cprime[k - 1] };
                denom[k] = d;
                cprime[k] = sup[k] / d;
            }
        }
        Self {
            nodes: nodes.to_vec(),
            h,
            sub,
            cprime,
            denom,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Second derivatives at the nodes for the given nodal values.
    pub fn second_derivatives<T: Linear>(&self, y: &[T]) -> Vec<T> {
        let m = self.nodes.len();
        assert_eq!(y.len(), m);
        let h = &self.h;
        match m {
            1 | 2 => vec![T::default(); m],
            3 => {
                let d0 = (y[1] - y[0]) * (1.0 / h[0]);
                let d1 = (y[2] - y[1]) * (1.0 / h[1]);
                let c = (d1 - d0) * (2.0 / (h[0] + h[1]));
                vec![c; 3]
            }
            _ => {
                let r = m - 2;
                let slope = |i: usize| (y[i + 1] - y[i]) * (1.0 / h[i]);
                let mut dp = vec![T::default(); r];
                for k in 0..r {
                    let i = k + 1;
                    let rhs = (slope(i) - slope(i - 1)) * 6.0;
                    dp[k] = if k == 0 {
                        rhs * (1.0 / self.denom[0])
                    } else {
                        (rhs - dp[k - 1] * self.sub[k]) * (1.0 / self.denom[k])
                    };
                }
                let mut inner = vec![T::default(); r];
                inner[r - 1] = dp[r - 1];
                for k in (0..r - 1).rev() {
                    inner[k] = dp[k] - inner[k + 1] * self.cprime[k];
                }
                let mut mm = Vec::with_capacity(m);
                let (h0, h1) = (h[0], h[1]);
                mm.push(inner[0] + (inner[0] - inner[1]) * (h0 / h1));
                mm.extend_from_slice(&inner);
                let (a, b) = (h[m - 3], h[m - 2]);
                mm.push(inner[r - 1] + (inner[r - 1] - inner[r - 2]) * (b / a));
                mm
            }
        }
    }

    /// Local monomial coefficients [c0, c1, c2, c3] in x = s - t_i for each interval.
    pub fn interval_coefficients<T: Linear>(&self, y: &[T], mm: &[T]) -> Vec<[T; 4]> {
        let m = self.nodes.len();
        (0..m.saturating_sub(1))
            .map(|i| {
                let hi = self.h[i];
                let b = (y[i + 1] - y[i]) * (1.0 / hi) - (mm[i] * 2.0 + mm[i + 1]) * (hi / 6.0);
                [y[i], b, mm[i] * 0.5, (mm[i + 1] - mm[i]) * (1.0 / (6.0 * hi))]
            })
            .collect()
    }

    /// Slope at the first node.
    pub fn first_slope<T: Linear>(&self, y: &[T], mm: &[T]) -> T {
        if self.nodes.len() < 2 {
            return T::default();
        }
        let h0 = self.h[0];
        (y[1] - y[0]) * (1.0 / h0) - (mm[0] * 2.0 + mm[1]) * (h0 / 6.0)
    }
}

/// Evaluate a local cubic.
#[inline]
pub fn eval_cubic<T: Linear>(c: &[T; 4], x: f64) -> T {
    c[0] + (c[1] + (c[2] + c[3] * x) * x) * x
}

#[inline]
pub fn eval_cubic_derivative<T: Linear>(c: &[T; 4], x: f64) -> T {
    c[1] + (c[2] * 2.0 + c[3] * (3.0 * x)) * x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_exact_cubic(nodes: &[f64]) {
        let f = |s: f64| 1.0 - 2.0 * s + 0.5 * s * s + 0.25 * s * s * s;
        let df = |s: f64| -2.0 + s + 0.75 * s * s;
        let basis = SplineBasis::new(nodes);
        let y: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
        let mm = basis.second_derivatives(&y);
        let co = basis.interval_coefficients(&y, &mm);
        for (i, c) in co.iter().enumerate() {
            let (a, b) = (nodes[i], nodes[i + 1]);
            for k in 0..5 {
                let s = a + (b - a) * k as f64 / 4.0;
                assert!((eval_cubic(c, s - a) - f(s)).abs() < 1e-11);
                assert!((eval_cubic_derivative(c, s - a) - df(s)).abs() < 1e-10);
            }
        }
        assert!((basis.first_slope(&y, &mm) - df(nodes[0])).abs() < 1e-10);
    }

    #[test]
    fn reproduces_cubics_on_graded_nodes() {
        let nodes: Vec<f64> = (0..9).map(|k| 0.1 * 1.3f64.powi(k)).collect();
        check_exact_cubic(&nodes);
        check_exact_cubic(&nodes[..4]);
        check_exact_cubic(&nodes[..5]);
    }

    #[test]
    fn converges_fourth_order() {
        let f = |s: f64| (2.0 * s).sin();
        let err = |m: usize| {
            let nodes: Vec<f64> = (0..m).map(|k| k as f64 / (m - 1) as f64).collect();
            let basis = SplineBasis::new(&nodes);
            let y: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
            let mm = basis.second_derivatives(&y);
            let co = basis.interval_coefficients(&y, &mm);
            let mut e: f64 = 0.0;
            for (i, c) in co.iter().enumerate() {
                let mid = 0.5 * (nodes[i] + nodes[i + 1]);
                e = e.max((eval_cubic(c, mid - nodes[i]) - f(mid)).abs());
            }
            e
        };
        let ratio = err(11) / err(21);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
