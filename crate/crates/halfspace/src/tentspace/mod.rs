//! Tent spaces: conical and Carleson functionals, weighted tent norms and the composite
//! X^q, Z^q and Y^{τ,η} norms, plus the identity/inequality checks built on them.

pub mod carleson;
pub mod conical;
pub mod stencil;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{SampledField, BoundaryField};
use crate::kernels::averaging_constant;
use crate::numerics::{ball_volume, Neumaier};

pub use carleson::{carleson_functional, dyadic_radii, truncated_vertical_weights};
pub use conical::{conical_at, conical_functional};

use carleson::carleson_power;
use conical::{check_alpha, check_q, cone_power_sum, magnitudes};

/// Exponents of T^{p,q}_s with aperture α; p = ∞ selects the Carleson functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TentParams {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub alpha: f64,
}

impl TentParams {
    pub fn new(p: f64, q: f64, s: f64, alpha: f64) -> Result<Self> {
        let t = Self { p, q, s, alpha };
        t.validate()?;
        Ok(t)
    }

    /// Unweighted, aperture 1.
    pub fn plain(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::OutOfRange(format!("p must be >= 1, got {}", self.p)));
        }
        if !self.q.is_finite() {
            return Err(Error::OutOfRange("q must be finite".into()));
        }
        check_q(self.q)?;
        check_alpha(self.alpha)?;
        if !self.s.is_finite() {
            return Err(Error::OutOfRange("weight index must be finite".into()));
        }
        if self.p.is_infinite() && self.s != 0.0 {
            return Err(Error::OutOfRange(
                "T^{∞,q}_s with s ≠ 0 is not defined".into(),
            ));
        }
        Ok(())
    }
}

/// K = B_θ(center) × [a, b].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactBox {
    pub center: Vec<f64>,
    pub radius: f64,
    pub a: f64,
    pub b: f64,
}

impl CompactBox {
    pub fn new(center: Vec<f64>, radius: f64, a: f64, b: f64) -> Result<Self> {
        if !(radius > 0.0) || !(a > 0.0) || !(b >= a) {
            return Err(Error::OutOfRange(format!(
                "compact box needs θ > 0 and 0 < a <= b (θ = {radius}, a = {a}, b = {b})"
            )));
        }
        Ok(Self { center, radius, a, b })
    }

    pub fn contains(&self, xp: &[f64], y: f64) -> bool {
        let eps = 1e-9;
        let d2: f64 = xp.iter().zip(&self.center).map(|(x, c)| (x - c).powi(2)).sum();
        d2.sqrt() <= self.radius + eps && y >= self.a - eps && y <= self.b + eps
    }
}

/// One norm evaluation, as emitted in reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormRecord {
    pub functional: String,
    pub params: serde_json::Value,
    pub value: f64,
    pub grid: serde_json::Value,
}

fn lp_of(values: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let mut acc = Neumaier::new();
    for v in values {
        acc.add(v.abs().powf(p));
    }
    (acc.value() * cell).powf(1.0 / p)
}

/// |F| multiplied by y_n^{-(n-1)s}.
fn weighted_magnitudes(field: &SampledField, s: f64) -> Vec<f64> {
    let mut mag = magnitudes(field);
    if s != 0.0 {
        let g = &field.grid;
        let nh = g.nh();
        let e = -(g.hdim() as f64) * s;
        for (k, y) in g.levels.iter().enumerate() {
            let w = y.powf(e);
            mag[k * nh..(k + 1) * nh].iter_mut().for_each(|v| *v *= w);
        }
    }
    mag
}

fn tent_norm_of_magnitudes(field: &SampledField, mag: &[f64], params: &TentParams) -> f64 {
    let g = &field.grid;
    if params.p.is_infinite() {
        let c = carleson_power(g, mag, params.q);
        c.iter().fold(0.0f64, |m, v| m.max(*v)).powf(1.0 / params.q)
    } else {
        let a = cone_power_sum(g, mag, params.q, params.alpha);
        // ‖A‖_p with A = (A^q)^{1/q}
        let r = params.p / params.q;
        let mut acc = Neumaier::new();
        for v in &a {
            acc.add(v.powf(r));
        }
        (acc.value() * g.lattice.cell_volume()).powf(1.0 / params.p)
    }
}

/// ‖y_n^{-(n-1)s} F‖_{T^{p,q}} on the truncated grid.
pub fn weighted_tent_norm(field: &SampledField, params: &TentParams) -> Result<f64> {
    params.validate()?;
    let mag = weighted_magnitudes(field, params.s);
    Ok(tent_norm_of_magnitudes(field, &mag, params))
}

/// L^p norm of a scalar boundary field over the lattice.
pub fn boundary_lp(f: &BoundaryField, p: f64) -> f64 {
    lp_of(&f.values, p, f.lattice.cell_volume())
}

/// sup over levels of y^power · max_x' |F(x', y)|.
pub fn weighted_sup(field: &SampledField, power: f64) -> f64 {
    let g = &field.grid;
    let nh = g.nh();
    let mag = magnitudes(field);
    g.levels
        .iter()
        .enumerate()
        .map(|(k, y)| {
            let m = mag[k * nh..(k + 1) * nh].iter().fold(0.0f64, |a, v| a.max(*v));
            y.powf(power) * m
        })
        .fold(0.0, f64::max)
}

/// p = (n-1) q (q-1).
pub fn solution_p(dim: usize, q: f64) -> f64 {
    (dim - 1) as f64 * q * (q - 1.0)
}

fn check_solution_q(dim: usize, q: f64) -> Result<()> {
    let lower = dim as f64 / (dim - 1) as f64;
    if !(q > lower) || !q.is_finite() {
        return Err(Error::OutOfRange(format!(
            "q must lie in (n/(n-1), ∞) = ({lower}, ∞), got {q}"
        )));
    }
    Ok(())
}

/// Sup-term and tent term of the X^q norm, separately.
pub fn space_norm_x_parts(u: &SampledField, q: f64) -> Result<(f64, f64)> {
    let n = u.grid.dim;
    check_solution_q(n, q)?;
    let sup = weighted_sup(u, 1.0 / (q - 1.0));
    let tent = weighted_tent_norm(u, &TentParams::plain(solution_p(n, q), q)?)?;
    Ok((sup, tent))
}

/// ‖u‖_{X^q} = sup x_n^{1/(q-1)} ‖u(·, x_n)‖_∞ + ‖u‖_{T^{p,q}}, p = (n-1)q(q-1).
pub fn space_norm_x(u: &SampledField, q: f64) -> Result<f64> {
    let (a, b) = space_norm_x_parts(u, q)?;
    Ok(a + b)
}

/// ‖π‖_{Z^q} = ‖π‖_{T^{p,q}_{s0}} with s0 = -1/(n-1) (no sup term).
pub fn space_norm_z(pi: &SampledField, q: f64) -> Result<f64> {
    let n = pi.grid.dim;
    check_solution_q(n, q)?;
    let s0 = -1.0 / (n - 1) as f64;
    weighted_tent_norm(pi, &TentParams::new(solution_p(n, q), q, s0, 1.0)?)
}

/// ‖F‖_{Y^{τ,η}} = sup x_n^{1/η + (n-1)/τ} ‖F(·, x_n)‖_∞ + ‖F‖_{T^{τ,η}}.
pub fn space_norm_y(f: &SampledField, tau: f64, eta: f64) -> Result<f64> {
    let (a, b) = space_norm_y_parts(f, tau, eta)?;
    Ok(a + b)
}

pub fn space_norm_y_parts(f: &SampledField, tau: f64, eta: f64) -> Result<(f64, f64)> {
    if !(eta >= 1.0) || !(tau > eta) || !tau.is_finite() {
        return Err(Error::OutOfRange(format!(
            "Y norm needs 1 <= η < τ < ∞, got τ = {tau}, η = {eta}"
        )));
    }
    let n = f.grid.dim;
    let sup = weighted_sup(f, 1.0 / eta + (n - 1) as f64 / tau);
    let tent = weighted_tent_norm(f, &TentParams::plain(tau, eta)?)?;
    Ok((sup, tent))
}

/// |E(K)| for K = B_θ × [a, b]: the shadow is the ball B_{θ+b}.
pub fn shadow_measure(k: &CompactBox, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::OutOfRange("dim must be >= 2".into()));
    }
    let d = dim - 1;
    Ok(ball_volume(d) * (k.radius + k.b).powi(d as i32))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AveragingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub mu: f64,
}

/// Error unless every cone of aperture `alpha` through the support stays inside the lattice
/// and the top level carries no mass.
fn check_support_inside(field: &SampledField, alpha: f64) -> Result<()> {
    let g = &field.grid;
    let lat = &g.lattice;
    let nh = g.nh();
    let hd = g.hdim();
    let mag = magnitudes(field);
    let mut ks = vec![0usize; hd];
    for (k, y) in g.levels.iter().enumerate() {
        let r = (alpha * y / lat.step).ceil() as i64 + 1;
        for (idx, &v) in mag[k * nh..(k + 1) * nh].iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            if k + 1 == g.nlevels() {
                return Err(Error::SupportTouchesBoundary);
            }
            lat.unravel(idx, &mut ks);
            if ks.iter().any(|&c| (c as i64) - r < 0 || c as i64 + r >= lat.side as i64) {
                return Err(Error::SupportTouchesBoundary);
            }
        }
    }
    Ok(())
}

/// ∫ A_q(F)^q dx' against μ ∫ |F|^q dy (μ = |B_1| in R^{n-1}).
pub fn averaging_identity_check(field: &SampledField, q: f64) -> Result<AveragingCheck> {
    check_q(q)?;
    if !q.is_finite() {
        return Err(Error::OutOfRange("q must be finite".into()));
    }
    check_support_inside(field, 1.0)?;
    let g = &field.grid;
    let mu = averaging_constant(g.dim);
    let mag = magnitudes(field);
    let a = cone_power_sum(g, &mag, q, 1.0);
    let cell = g.lattice.cell_volume();
    let mut lhs = Neumaier::new();
    a.iter().for_each(|v| lhs.add(*v));
    let w = g.vertical_weights();
    let nh = g.nh();
    let mut rhs = Neumaier::new();
    for (k, wk) in w.iter().enumerate() {
        for v in &mag[k * nh..(k + 1) * nh] {
            if *v != 0.0 {
                rhs.add(wk * v.powf(q));
            }
        }
    }
    Ok(AveragingCheck {
        lhs: lhs.value() * cell,
        rhs: mu * rhs.value() * cell,
        mu,
    })
}

/// ∫_K |F|^q with the grid's quadrature weights, to the power 1/q.
pub fn local_lq(field: &SampledField, k: &CompactBox, q: f64) -> f64 {
    let g = &field.grid;
    let nh = g.nh();
    let mag = magnitudes(field);
    let w = g.vertical_weights();
    let mut xp = vec![0.0; g.hdim()];
    let mut acc = Neumaier::new();
    for (lev, y) in g.levels.iter().enumerate() {
        for idx in 0..nh {
            let v = mag[lev * nh + idx];
            if v == 0.0 {
                continue;
            }
            g.lattice.point(idx, &mut xp);
            if k.contains(&xp, *y) {
                acc.add(w[lev] * v.powf(q));
            }
        }
    }
    (acc.value() * g.lattice.cell_volume()).powf(1.0 / q)
}

/// 1_K F.
pub fn restrict_to_box(field: &SampledField, k: &CompactBox) -> SampledField {
    let g = &field.grid;
    let nh = g.nh();
    let nc = field.ncomp();
    let mut out = field.clone();
    let mut xp = vec![0.0; g.hdim()];
    for (lev, y) in g.levels.iter().enumerate() {
        for idx in 0..nh {
            g.lattice.point(idx, &mut xp);
            if !k.contains(&xp, *y) {
                let b = (lev * nh + idx) * nc;
                out.values[b..b + nc].iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
    out
}

/// (‖1_K F‖_{T^{p,q}} / ‖F‖_{L^q(K)}, ‖F‖_{L^q(K)} / ‖F‖_{T^{p,q}}).
pub fn local_lq_equivalence_check(
    field: &SampledField,
    k: &CompactBox,
    p: f64,
    q: f64,
) -> Result<(f64, f64)> {
    let params = TentParams::plain(p, q)?;
    let g = &field.grid;
    let lat = &g.lattice;
    let top = *g.levels.last().unwrap();
    let lo = lat.origin;
    let hi = lat.coord(lat.side - 1);
    if k.b >= top
        || k.center.len() != g.hdim()
        || k.center.iter().any(|c| c - k.radius - k.b < lo || c + k.radius + k.b > hi)
    {
        return Err(Error::OutOfRange("compact box not inside the grid interior".into()));
    }
    let lq = local_lq(field, k, q);
    let local = weighted_tent_norm(&restrict_to_box(field, k), &params)?;
    let full = weighted_tent_norm(field, &params)?;
    if lq == 0.0 || full == 0.0 {
        return Err(Error::ZeroDenominator("zero field on K".into()));
    }
    Ok((local / lq, lq / full))
}

/// (‖fg‖_{T^{p0,q0}_{s0}}, ‖f‖_{T^{p1,q1}_{s1}} ‖g‖_{T^{p2,q2}_{s2}}).
pub fn tent_holder_check(
    f: &SampledField,
    g: &SampledField,
    params: [TentParams; 3],
) -> Result<(f64, f64)> {
    let [p0, p1, p2] = params;
    for p in &params {
        p.validate()?;
    }
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let tol = 1e-12;
    if (inv(p1.p) + inv(p2.p) - inv(p0.p)).abs() > tol
        || (inv(p1.q) + inv(p2.q) - inv(p0.q)).abs() > tol
        || (p1.s + p2.s - p0.s).abs() > tol
        || p0.alpha != p1.alpha
        || p0.alpha != p2.alpha
    {
        return Err(Error::ExponentRelation(
            "need 1/p1 + 1/p2 = 1/p0, 1/q1 + 1/q2 = 1/q0, s1 + s2 = s0 and a common aperture".into(),
        ));
    }
    if f.grid != g.grid {
        return Err(Error::Shape("fields on different grids".into()));
    }
    let mf = magnitudes(f);
    let mg = magnitudes(g);
    let prod: Vec<f64> = mf.iter().zip(&mg).map(|(a, b)| a * b).collect();
    let prod_field = SampledField {
        grid: f.grid.clone(),
        rank: 0,
        values: prod,
    };
    let lhs = weighted_tent_norm(&prod_field, &p0)?;
    let rhs = weighted_tent_norm(f, &p1)? * weighted_tent_norm(g, &p2)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
pub(crate) mod testing {
    /// Indicator of B_1(0) × (0, 2) in R^3_+ with half values on the jump nodes.
    pub fn tent_indicator(x: &[f64]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let horiz = if (r - 1.0).abs() < 1e-9 {
            0.5
        } else if r < 1.0 {
            1.0
        } else {
            0.0
        };
        let vert = if (x[2] - 2.0).abs() < 1e-9 {
            0.5
        } else if x[2] < 2.0 {
            1.0
        } else {
            0.0
        };
        horiz * vert
    }
}
