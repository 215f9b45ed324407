//! Mixed Lebesgue norms L^p_{x'} L^q_{x_n} (optionally weighted by x_n^{b}) and the sampled
//! boundedness check for G_β between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SampledField;
use crate::numerics::Neumaier;

use super::riesz::g_beta;

const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormParams {
    pub p: f64,
    pub q: f64,
    /// Vertical weight power b: the inner norm is taken against x_n^{b q} dx_n.
    pub weight: Option<f64>,
}

impl MixedNormParams {
    pub fn new(p: f64, q: f64, weight: Option<f64>) -> Result<Self> {
        let s = Self { p, q, weight };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(Error::OutOfRange(format!("need p, q in [1, ∞], got p = {}, q = {}", self.p, self.q)));
        }
        if let Some(b) = self.weight {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::OutOfRange(format!("weight power must be finite and >= 0, got {b}")));
            }
        }
        Ok(())
    }
}

/// ‖ ‖F(x', ·)‖_{L^q(x_n^{bq} dx_n)} ‖_{L^p(dx')} with the grid's vertical weights.
pub fn mixed_norm(f: &SampledField, params: &MixedNormParams) -> Result<f64> {
    params.validate()?;
    let g = &f.grid;
    let nh = g.nh();
    let mag = f.magnitude();
    let w = g.vertical_weights();
    let b = params.weight.unwrap_or(0.0);
    let scale: Vec<f64> = g.levels.iter().map(|y| if b == 0.0 { 1.0 } else { y.powf(b) }).collect();
    let inner: Vec<f64> = (0..nh)
        .map(|i| {
            if params.q.is_infinite() {
                (0..g.nlevels()).fold(0.0f64, |m, k| m.max(scale[k] * mag.values[k * nh + i]))
            } else {
                let mut acc = Neumaier::new();
                for k in 0..g.nlevels() {
                    let v = scale[k] * mag.values[k * nh + i];
                    if v != 0.0 {
                        acc.add(w[k] * v.powf(params.q));
                    }
                }
                acc.value().powf(1.0 / params.q)
            }
        })
        .collect();
    if params.p.is_infinite() {
        return Ok(inner.iter().fold(0.0, |m: f64, v| m.max(*v)));
    }
    let mut acc = Neumaier::new();
    for v in &inner {
        if *v != 0.0 {
            acc.add(v.powf(params.p));
        }
    }
    Ok((acc.value() * g.lattice.cell_volume()).powf(1.0 / params.p))
}

/// Exponents of a G_β estimate. Unweighted: L^τ L^η → L^p L^q. Weighted (`weight` = Some(b)):
/// x_n^b F in L^τ L^η → x_n G_β F in L^p L^q (τ plays the role of r).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbetaExponents {
    pub beta: f64,
    pub tau: f64,
    pub eta: f64,
    pub p: f64,
    pub q: f64,
    pub weight: Option<f64>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(1.0)
}

impl GbetaExponents {
    /// Refuses exponent sets off the scaling line or outside the admissible ranges.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        let Self { beta, tau, eta, p, q, weight } = *self;
        let bad = |msg: String| Err(Error::ExponentRelation(msg));
        if !(beta > 0.0 && beta < n) {
            return bad(format!("need 0 < β < n, got β = {beta}"));
        }
        match weight {
            None => {
                if !(tau > 1.0 && tau.is_finite()) {
                    return bad(format!("need 1 < τ < ∞, got {tau}"));
                }
                if !(1.0 <= eta && eta <= q && q <= p && p.is_finite()) {
                    return bad(format!("need 1 <= η <= q <= p < ∞, got η = {eta}, q = {q}, p = {p}"));
                }
                if !(1.0 / eta < beta + 1.0 / q) {
                    return bad("need 1/η < β + 1/q".into());
                }
                let lhs = (n - 1.0) / p;
                let rhs = (n - 1.0) / tau + 1.0 / eta - 1.0 / q - beta;
                if !close(lhs, rhs) {
                    return bad(format!("(n-1)/p = {lhs} but (n-1)/τ + 1/η - 1/q - β = {rhs}"));
                }
            }
            Some(b) => {
                let r = tau;
                if !(1.0 < r && r < p && p.is_finite()) {
                    return bad(format!("need 1 < r < p < ∞, got r = {r}, p = {p}"));
                }
                if !(b >= 1.0) {
                    return bad(format!("need b >= 1, got {b}"));
                }
                if !(eta >= 1.0 && q >= 1.0 && q.is_finite()) {
                    return bad("need η, q in [1, ∞)".into());
                }
                let lhs = 2.0 + 1.0 / q;
                let rhs = (n - 1.0) * (1.0 / r - 1.0 / p) + 1.0 / eta + b - (beta - 1.0);
                if !close(lhs, rhs) {
                    return bad(format!("2 + 1/q = {lhs} but the weighted relation gives {rhs}"));
                }
                if !(n > beta + 2.0 + 1.0 / q - 1.0 / eta - b) {
                    return bad("need n > β + 2 + 1/q − 1/η − b".into());
                }
            }
        }
        Ok(())
    }

    fn input(&self) -> MixedNormParams {
        MixedNormParams { p: self.tau, q: self.eta, weight: self.weight }
    }

    fn output(&self) -> MixedNormParams {
        MixedNormParams { p: self.p, q: self.q, weight: self.weight.map(|_| 1.0) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbetaReport {
    pub exponents: GbetaExponents,
    pub family: String,
    pub ratios: Vec<f64>,
    pub max: f64,
    pub min: f64,
    pub spread: f64,
    pub grid: serde_json::Value,
}

/// r = ‖G_β F‖ / ‖F‖ over the family (zero members skipped); refuses exponents off the
/// scaling line.
pub fn gbeta_boundedness_check(family: &[SampledField], family_name: &str, exps: &GbetaExponents) -> Result<GbetaReport> {
    let first = family.first().ok_or_else(|| Error::Config("empty family".into()))?;
    exps.validate(first.grid.dim)?;
    let mut ratios = Vec::new();
    for f in family {
        if f.is_zero() {
            continue;
        }
        let den = mixed_norm(f, &exps.input())?;
        let num = mixed_norm(&g_beta(f, exps.beta)?, &exps.output())?;
        ratios.push(num / den);
    }
    if ratios.is_empty() {
        return Err(Error::ZeroDenominator("every family member is zero".into()));
    }
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    Ok(GbetaReport {
        exponents: *exps,
        family: family_name.to_string(),
        ratios,
        max,
        min,
        spread: max / min,
        grid: first.grid.descriptor(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_scalar, HalfSpaceGrid};
    use std::f64::consts::PI;

    fn uniform_grid(extent: f64, h: f64, top: f64, dz: f64) -> HalfSpaceGrid {
        let m = (top / dz).round() as usize;
        HalfSpaceGrid::with_levels(3, extent, h, (1..=m).map(|k| k as f64 * dz).collect()).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = uniform_grid(1.0, 0.25, 2.0, 0.25);
        let f = SampledField::zeros(&g, 0);
        assert_eq!(mixed_norm(&f, &MixedNormParams::new(2.0, 3.0, None).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn separable_fields_factor() {
        let g = uniform_grid(2.0, 1.0 / 16.0, 3.0, 0.125);
        let a = |x: &[f64]| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp();
        let c = |y: f64| y * (-y).exp();
        let f = sample_scalar(&g, |x| a(x) * c(x[2])).unwrap();
        for (p, q, b) in [(2.0, 2.0, None), (3.0, 1.5, Some(1.0)), (f64::INFINITY, 4.0, Some(0.5))] {
            let params = MixedNormParams::new(p, q, b).unwrap();
            let whole = mixed_norm(&f, &params).unwrap();
            // factors with the same quadrature rules
            let ha = sample_scalar(&g, |x| if x[2] == g.levels[0] { a(x) } else { 0.0 }).unwrap();
            let hnorm = {
                let only = MixedNormParams::new(p, f64::INFINITY, None).unwrap();
                mixed_norm(&ha, &only).unwrap()
            };
            let w = g.vertical_weights();
            let bb = b.unwrap_or(0.0);
            let vnorm = g
                .levels
                .iter()
                .zip(&w)
                .map(|(y, wk)| wk * (y.powf(bb) * c(*y)).powf(q))
                .sum::<f64>()
                .powf(1.0 / q);
            assert!((whole - hnorm * vnorm).abs() < 1e-8 * whole, "{p} {q}");
        }
    }

    #[test]
    fn cylinder_indicator() {
        let g = uniform_grid(2.0, 1.0 / 128.0, 3.0, 0.25);
        let f = sample_scalar(&g, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            let v = if (x[2] - 1.0).abs() < 1e-9 || (x[2] - 2.0).abs() < 1e-9 {
                0.5f64
            } else if x[2] > 1.0 && x[2] < 2.0 {
                1.0
            } else {
                0.0
            };
            if r2 < 1.0 {
                v.sqrt()
            } else {
                0.0
            }
        })
        .unwrap();
        let v = mixed_norm(&f, &MixedNormParams::new(2.0, 2.0, None).unwrap()).unwrap();
        assert!((v - PI.sqrt()).abs() < 1e-3 * PI.sqrt(), "{v}");
    }

    #[test]
    fn exponent_relations() {
        let ok = GbetaExponents { beta: 1.0, tau: 2.0, eta: 2.0, p: 8.0, q: 4.0, weight: None };
        assert!(ok.validate(3).is_ok());
        let second = GbetaExponents { beta: 2.0, tau: 2.0 / (2.5 - 1.0 / 1.1), eta: 1.1, p: 12.0, q: 3.0, weight: None };
        assert!(second.validate(3).is_ok());
        // (τ, η) = (2, 2) with β = 2 would need (n-1)/p < 0
        for p in [2.0, 4.0, 8.0, 16.0] {
            let off = GbetaExponents { beta: 2.0, tau: 2.0, eta: 2.0, p, q: 2.0, weight: None };
            assert!(matches!(off.validate(3), Err(Error::ExponentRelation(_))));
        }
        let weighted = GbetaExponents { beta: 1.0, tau: 2.0, eta: 2.0, p: 8.0, q: 4.0, weight: Some(1.0) };
        assert!(weighted.validate(3).is_ok());
        let nudged = GbetaExponents { p: 8.5, ..weighted };
        assert!(nudged.validate(3).is_err());
    }

    #[test]
    fn singleton_family_has_unit_spread() {
        let g = uniform_grid(1.0, 0.125, 2.0, 0.25);
        let f = sample_scalar(&g, |x| (-(x[0] * x[0] + x[1] * x[1] + (x[2] - 1.0).powi(2)) * 8.0).exp()).unwrap();
        let z = SampledField::zeros(&g, 0);
        let e = GbetaExponents { beta: 1.0, tau: 2.0, eta: 2.0, p: 8.0, q: 4.0, weight: None };
        let r = gbeta_boundedness_check(&[z, f], "single", &e).unwrap();
        assert_eq!(r.ratios.len(), 1);
        assert_eq!(r.spread, 1.0);
        let off = GbetaExponents { beta: 2.0, ..e };
        assert!(gbeta_boundedness_check(&[r_field(&g)], "x", &off).is_err());
    }

    fn r_field(g: &HalfSpaceGrid) -> SampledField {
        sample_scalar(g, |x| x[2]).unwrap()
    }
}
