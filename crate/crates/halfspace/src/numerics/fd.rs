//! Finite-difference weights on arbitrary node sets.

/// Weights w such that f^{(order)}(x0) ≈ Σ w_k f(xs[k]) (Fornberg's recursion).
pub fn fornberg(x0: f64, xs: &[f64], order: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(n > order, "need more nodes than derivative order");
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Centered weights on a unit-spaced stencil of half-width `half`, offsets -half..=half.
pub fn central(order: usize, half: usize) -> Vec<f64> {
    let xs: Vec<f64> = (-(half as i64)..=half as i64).map(|k| k as f64).collect();
    fornberg(0.0, &xs, order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classical_central_weights() {
        let w = central(1, 4);
        let expect = [1.0 / 280.0, -4.0 / 105.0, 0.2, -0.8, 0.0, 0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let w2 = central(2, 1);
        assert!((w2[0] - 1.0).abs() < 1e-14 && (w2[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn nonuniform_exact_on_polynomials() {
        let xs = [0.1, 0.13, 0.2, 0.31, 0.5, 0.77];
        let w = fornberg(0.2, &xs, 2);
        let f = |x: f64| 3.0 * x.powi(5) - x * x;
        let d2 = 60.0 * 0.2f64.powi(3) - 2.0;
        let approx: f64 = w.iter().zip(xs).map(|(w, x)| w * f(x)).sum();
        assert!((approx - d2).abs() < 1e-9);
    }
}
