//! Small-data Picard iteration for −Δu + ∇π + u·∇u = F, div u = 0, u = f on the wall.
//!
//! The map is 𝓛(u, π) = (𝓗f + 𝒢(F, −u⊗u), 𝓔f + Ψ(F, −u⊗u)); with the potentials solving
//! −Δv + ∇w = F + div H, the H slot carries −u⊗u so that div H = −u·∇u for solenoidal u.

use serde::{Deserialize, Serialize};

use crate::diffops::{stokes_residual, ResidualReport};
use crate::error::{Error, Result};
use crate::freqspace::sobolev_neg_half_norm;
use crate::grid::{BoundaryField, HalfSpaceGrid, SampledField};
use crate::potentials::{green_fields, stokes_extend_full, PotentialConfig};
use crate::tentspace::{solution_p, space_norm_x, space_norm_y, space_norm_z};

const REL_EPS: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_EPS * a.abs().max(b.abs()).max(1.0)
}

/// Higher-q exponents for the bootstrap: 1/σ̃ = 1/2 + 1/q̃, 1/Λ̃ = 1/(2(n−1)) + 1/p̃ and
/// 1/η₁ + (n−1)/τ₁ = 2 + 1/(q̃−1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapExponents {
    pub q: f64,
    pub tau1: f64,
    pub eta1: f64,
}

impl BootstrapExponents {
    /// q̃ with η₁ given; τ₁ solves the scaling relation.
    pub fn new(dim: usize, q: f64, eta1: f64) -> Result<Self> {
        let rhs = 2.0 + 1.0 / (q - 1.0);
        let tau1 = (dim - 1) as f64 / (rhs - 1.0 / eta1);
        let b = Self { q, tau1, eta1 };
        b.validate(dim)?;
        Ok(b)
    }

    pub fn p(&self, dim: usize) -> f64 {
        solution_p(dim, self.q)
    }

    pub fn sigma(&self) -> f64 {
        1.0 / (0.5 + 1.0 / self.q)
    }

    pub fn lambda(&self, dim: usize) -> f64 {
        1.0 / (1.0 / (2.0 * (dim - 1) as f64) + 1.0 / self.p(dim))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let nm1 = (dim - 1) as f64;
        if !(self.q >= 2.0) || !self.q.is_finite() {
            return Err(Error::OutOfRange(format!("bootstrap q must be >= 2, got {}", self.q)));
        }
        if !(1.0 < self.eta1 && self.eta1 < self.tau1 && self.tau1.is_finite()) {
            return Err(Error::ExponentRelation(format!(
                "need 1 < η₁ < τ₁ < ∞, got η₁ = {}, τ₁ = {}",
                self.eta1, self.tau1
            )));
        }
        let rhs = 2.0 + 1.0 / (self.q - 1.0);
        if !close(1.0 / self.eta1 + nm1 / self.tau1, rhs) {
            return Err(Error::ExponentRelation(format!("1/η₁ + (n−1)/τ₁ must equal {rhs}")));
        }
        let lhs = 1.0 + 1.0 / self.sigma() + nm1 / self.lambda(dim);
        if !close(lhs, rhs) {
            return Err(Error::ExponentRelation(format!("1 + 1/σ̃ + (n−1)/Λ̃ = {lhs} ≠ {rhs}")));
        }
        Ok(())
    }
}

/// What to do when the data norm exceeds ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmallnessPolicy {
    Warn,
    Refuse,
}

/// Starting point of the iteration.
#[derive(Debug, Clone)]
pub enum Init {
    /// (u₁, π₁) = (𝓗f, 𝓔f).
    Standard,
    /// (u₀, π₀) = (0, 0), then 𝓛 once.
    Zero,
    /// (u₀, π₀) = (a·𝓗f, a·𝓔f), then 𝓛 once.
    ScaledLinear(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub dim: usize,
    pub q: f64,
    /// (τ, η) with 1/η + (n−1)/τ = 3 and 1 < η < τ; None when no pair exists (n = 3), in
    /// which case the forcing must vanish.
    pub forcing: Option<(f64, f64)>,
    /// (Λ, σ) = (n−1, 1).
    pub nonlinear: (f64, f64),
    pub bootstrap: Option<BootstrapExponents>,
    pub epsilon: f64,
    pub smallness: SmallnessPolicy,
    pub max_iter: usize,
    /// Relative increment ‖(w_j, q_j)‖ / ‖(u_{j+1}, π_{j+1})‖ at which to stop.
    pub tol: f64,
    pub potentials: PotentialConfig,
    /// Horizontal and vertical margin of the residual band.
    pub margin: f64,
    pub keep_iterates: bool,
}

/// A forcing pair on the q = 2 scaling line with η = 1.2, if one exists in this dimension.
pub fn default_forcing_exponents(dim: usize) -> Option<(f64, f64)> {
    let eta = 1.2;
    let tau = (dim - 1) as f64 / (3.0 - 1.0 / eta);
    (tau > eta).then_some((tau, eta))
}

impl SolveConfig {
    pub fn new(dim: usize) -> Self {
        let nm1 = (dim - 1) as f64;
        Self {
            dim,
            q: 2.0,
            forcing: default_forcing_exponents(dim),
            nonlinear: (nm1, 1.0),
            bootstrap: None,
            epsilon: 1.0,
            smallness: SmallnessPolicy::Warn,
            max_iter: 40,
            tol: 1e-11,
            potentials: PotentialConfig::new(dim),
            margin: 0.0,
            keep_iterates: false,
        }
    }

    pub fn p(&self) -> f64 {
        solution_p(self.dim, self.q)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        let nm1 = (n - 1) as f64;
        if n < 3 {
            return Err(Error::Config("the solver needs n >= 3".into()));
        }
        if self.q != 2.0 {
            return Err(Error::ExponentRelation(format!("base exponent must be q = 2, got {}", self.q)));
        }
        if let Some((tau, eta)) = self.forcing {
            if !(1.0 < eta && eta < tau && tau.is_finite()) {
                return Err(Error::ExponentRelation(format!("need 1 < η < τ < ∞, got ({tau}, {eta})")));
            }
            if !close(1.0 / eta + nm1 / tau, 3.0) {
                return Err(Error::ExponentRelation(format!("1/η + (n−1)/τ must equal 3, got ({tau}, {eta})")));
            }
        }
        let (l, s) = self.nonlinear;
        if !close(l, nm1) || !close(s, 1.0) {
            return Err(Error::ExponentRelation(format!("(Λ, σ) must be (n−1, 1), got ({l}, {s})")));
        }
        if let Some(b) = &self.bootstrap {
            b.validate(n)?;
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("ε must be positive".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tolerance and iteration cap must be positive".into()));
        }
        self.potentials.validate()?;
        if self.potentials.dim != n {
            return Err(Error::Config("potential config dimension differs".into()));
        }
        Ok(())
    }
}

/// One Picard step's record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub norm_u: f64,
    pub norm_pi: f64,
    /// ‖(u_{j} − u_{j−1}, π_{j} − π_{j−1})‖, absent at the first iterate.
    pub increment: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub q: f64,
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub sup: f64,
    /// No growth across the top two octaves.
    pub bounded: bool,
    /// Value at the top level below the value one octave lower.
    pub top_octave_decrease: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub data_norm: f64,
    pub within_smallness: bool,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub max_rho: f64,
    pub residual: Option<ResidualReport>,
    pub decay: DecayProfile,
    /// Largest ‖(u_j, π_j)‖ along the iteration.
    pub kappa: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u: SampledField,
    pub pi: SampledField,
    /// ∂_a u_i at component i·n + a, from the kernel jets and the potential derivatives.
    pub grad_u: SampledField,
    pub diagnostics: SolveDiagnostics,
    /// (u_j, π_j) in order, when requested.
    pub iterates: Vec<(SampledField, SampledField)>,
}

/// ‖f‖_{Ḣ^{−1/2,2(n−1)}} + ‖F‖_{Y^{τ,η}}.
pub fn data_norm(f: &BoundaryField, forcing: Option<&SampledField>, cfg: &SolveConfig) -> Result<f64> {
    let mut norm = sobolev_neg_half_norm(f)?;
    if let Some(ff) = forcing.filter(|x| !x.is_zero()) {
        let (tau, eta) = cfg.forcing.ok_or_else(|| {
            Error::ExponentRelation(format!(
                "no (τ, η) with 1 < η < τ satisfies 1/η + (n−1)/τ = 3 in dimension {}; the forcing must vanish",
                cfg.dim
            ))
        })?;
        norm += space_norm_y(ff, tau, eta)?;
    }
    Ok(norm)
}

fn pair_norm(u: &SampledField, pi: &SampledField, q: f64) -> Result<(f64, f64)> {
    Ok((space_norm_x(u, q)?, space_norm_z(pi, q)?))
}

struct Linear {
    u: SampledField,
    pi: SampledField,
    grad: SampledField,
}

struct Iterate {
    u: SampledField,
    pi: SampledField,
    grad: SampledField,
}

fn linear_part(f: &BoundaryField, grid: &HalfSpaceGrid) -> Result<Linear> {
    let s = stokes_extend_full(f, grid, true)?;
    Ok(Linear {
        u: s.u,
        pi: s.pi,
        grad: s.grad_u.expect("derivatives requested"),
    })
}

/// 𝓛(u) given the linear part.
fn apply_map(lin: &Linear, forcing: &SampledField, u: &SampledField, cfg: &SolveConfig) -> Result<Iterate> {
    let h = u.outer_self().scaled(-1.0);
    let g = green_fields(forcing, &h, &cfg.potentials, true)?;
    let gv = g.grad_v.expect("derivatives requested");
    Ok(Iterate {
        u: lin.u.axpy(1.0, &g.v),
        pi: lin.pi.axpy(1.0, &g.w),
        grad: lin.grad.axpy(1.0, &gv),
    })
}

/// ‖(u_a − u_b, π_a − π_b)‖_{X×Z} / ‖(u_b, π_b)‖_{X×Z}.
pub fn pair_distance(a: &Solution, b: &Solution, q: f64) -> Result<f64> {
    let (du, dp) = pair_norm(&a.u.axpy(-1.0, &b.u), &a.pi.axpy(-1.0, &b.pi), q)?;
    let (nu, np) = pair_norm(&b.u, &b.pi, q)?;
    Ok(if nu + np > 0.0 { (du + dp) / (nu + np) } else { du + dp })
}

/// Relative X×Z change of the converged pair under one more application of 𝓛.
pub fn fixed_point_defect(
    sol: &Solution,
    f: &BoundaryField,
    forcing: &SampledField,
    grid: &HalfSpaceGrid,
    cfg: &SolveConfig,
) -> Result<f64> {
    let lin = linear_part(f, grid)?;
    let next = apply_map(&lin, forcing, &sol.u, cfg)?;
    let (du, dp) = pair_norm(&next.u.axpy(-1.0, &sol.u), &next.pi.axpy(-1.0, &sol.pi), cfg.q)?;
    let (nu, np) = pair_norm(&sol.u, &sol.pi, cfg.q)?;
    Ok(if nu + np > 0.0 { (du + dp) / (nu + np) } else { du + dp })
}

fn finite(x: &SampledField) -> bool {
    x.values.iter().all(|v| v.is_finite())
}

/// Picard iteration from the standard start.
pub fn picard_solve(f: &BoundaryField, forcing: &SampledField, grid: &HalfSpaceGrid, cfg: &SolveConfig) -> Result<Solution> {
    picard_solve_from(f, forcing, grid, cfg, &Init::Standard)
}

pub fn picard_solve_from(
    f: &BoundaryField,
    forcing: &SampledField,
    grid: &HalfSpaceGrid,
    cfg: &SolveConfig,
    init: &Init,
) -> Result<Solution> {
    cfg.validate()?;
    if grid.dim != cfg.dim || forcing.grid != *grid || forcing.rank != 1 {
        return Err(Error::Shape("forcing must be an n-vector field on the solver grid".into()));
    }
    let dn = data_norm(f, Some(forcing), cfg)?;
    let within = dn <= cfg.epsilon;
    if !within && cfg.smallness == SmallnessPolicy::Refuse {
        return Err(Error::Smallness { norm: dn, budget: cfg.epsilon });
    }
    let lin = linear_part(f, grid)?;
    let mut cur = match init {
        Init::Standard => Iterate {
            u: lin.u.clone(),
            pi: lin.pi.clone(),
            grad: lin.grad.clone(),
        },
        Init::Zero => apply_map(&lin, forcing, &SampledField::zeros(grid, 1), cfg)?,
        Init::ScaledLinear(a) => apply_map(&lin, forcing, &lin.u.scaled(*a), cfg)?,
    };
    let (nu, npi) = pair_norm(&cur.u, &cur.pi, cfg.q)?;
    let mut records = vec![IterationRecord { iteration: 1, norm_u: nu, norm_pi: npi, increment: None, rho: None }];
    let mut iterates = Vec::new();
    if cfg.keep_iterates {
        iterates.push((cur.u.clone(), cur.pi.clone()));
    }
    let mut kappa = nu + npi;
    let mut converged = nu + npi == 0.0;
    let mut prev_inc: Option<f64> = None;
    let mut rhos = Vec::new();
    let mut streak = 0;
    while !converged && records.len() < cfg.max_iter {
        let next = apply_map(&lin, forcing, &cur.u, cfg)?;
        let j = records.len() + 1;
        if !finite(&next.u) || !finite(&next.pi) {
            rhos.push(f64::INFINITY);
            return Err(Error::Divergence { rho_history: rhos });
        }
        let (nu, npi) = pair_norm(&next.u, &next.pi, cfg.q)?;
        let (du, dp) = pair_norm(&next.u.axpy(-1.0, &cur.u), &next.pi.axpy(-1.0, &cur.pi), cfg.q)?;
        let inc = du + dp;
        let rho = prev_inc.map(|p| if p > 0.0 { inc / p } else { 0.0 });
        if let Some(r) = rho {
            rhos.push(r);
            streak = if r >= 1.0 { streak + 1 } else { 0 };
        }
        records.push(IterationRecord { iteration: j, norm_u: nu, norm_pi: npi, increment: Some(inc), rho });
        kappa = kappa.max(nu + npi);
        if cfg.keep_iterates {
            iterates.push((next.u.clone(), next.pi.clone()));
        }
        if streak >= 3 || !(nu + npi).is_finite() {
            return Err(Error::Divergence { rho_history: rhos });
        }
        converged = inc <= cfg.tol * (nu + npi);
        prev_inc = Some(inc);
        cur = next;
    }
    let residual = if cur.u.is_zero() {
        None
    } else {
        Some(ns_residual(&cur.u, &cur.pi, forcing, Some(&cur.grad), cfg.margin)?)
    };
    let decay = verify_decay(&cur.u, cfg.q);
    let max_rho = rhos.iter().copied().fold(0.0, f64::max);
    Ok(Solution {
        u: cur.u,
        pi: cur.pi,
        grad_u: cur.grad,
        diagnostics: SolveDiagnostics {
            data_norm: dn,
            within_smallness: within,
            iterations: records,
            converged,
            max_rho,
            residual,
            decay,
            kappa,
        },
        iterates,
    })
}

/// Residuals of −Δu + ∇π + u·∇u − F and div u on the interior band; Δu and ∇π by
/// differences, ∇u from `grad_u` when given.
pub fn ns_residual(
    u: &SampledField,
    pi: &SampledField,
    forcing: &SampledField,
    grad_u: Option<&SampledField>,
    margin: f64,
) -> Result<ResidualReport> {
    let g = &u.grid;
    let band = g.levels.iter().filter(|&&y| y >= margin).count();
    if band < 3 + 4 {
        return Err(Error::Resolution(format!("only {band} levels above the margin {margin}")));
    }
    let f = (!forcing.is_zero()).then_some(forcing);
    stokes_residual(u, pi, grad_u, f, true, margin)
}

/// x_n^{1/(q−1)} ‖u(·, x_n)‖_∞ level by level.
pub fn verify_decay(u: &SampledField, q: f64) -> DecayProfile {
    let g = &u.grid;
    let nh = g.nh();
    let mag = u.magnitude();
    let w = 1.0 / (q - 1.0);
    let values: Vec<f64> = g
        .levels
        .iter()
        .enumerate()
        .map(|(k, y)| y.powf(w) * mag.values[k * nh..(k + 1) * nh].iter().fold(0.0f64, |a, v| a.max(*v)))
        .collect();
    let top = g.levels[g.nlevels() - 1];
    let at = |y: f64| {
        let k = g
            .levels
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - y).abs().total_cmp(&(b.1 - y).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        values[k]
    };
    let (v0, v1, v2) = (at(top / 4.0), at(top / 2.0), at(top));
    let growing = v2 > v1 && v1 > v0;
    DecayProfile {
        q,
        levels: g.levels.clone(),
        sup: values.iter().copied().fold(0.0, f64::max),
        values,
        bounded: !growing,
        top_octave_decrease: v2 < v1,
    }
}

/// Constants of 𝓛 measured on the data shape f. `k_linear` and `k_quadratic` are the norm
/// ratios ‖(𝓗f, 𝓔f)‖/‖f‖ and ‖𝓛(𝓗f) − 𝓛(0)‖/‖𝓗f‖_X²; `k_contraction` is the observed
/// ρ per unit data norm from a short probe run, and `budget` the data norm at which the
/// observed contraction ratio reaches 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    pub k_linear: f64,
    pub k_quadratic: f64,
    pub k_contraction: f64,
    pub budget: f64,
}

pub fn fit_constants(f: &BoundaryField, grid: &HalfSpaceGrid, cfg: &SolveConfig) -> Result<FittedConstants> {
    cfg.validate()?;
    let dn = sobolev_neg_half_norm(f)?;
    if dn == 0.0 {
        return Err(Error::ZeroDenominator("data shape has zero norm".into()));
    }
    let lin = linear_part(f, grid)?;
    let (a, b) = pair_norm(&lin.u, &lin.pi, cfg.q)?;
    let zero = SampledField::zeros(grid, 1);
    let quad = apply_map(
        &Linear { u: zero.clone(), pi: SampledField::zeros(grid, 0), grad: SampledField::zeros(grid, 2) },
        &zero,
        &lin.u,
        cfg,
    )?;
    let (c, d) = pair_norm(&quad.u, &quad.pi, cfg.q)?;
    let k_linear = (a + b) / dn;
    let k_quadratic = (c + d) / (a * a);
    // probe well inside the norm-based ball, where ρ is linear in the data size
    let probe = 0.05 / (8.0 * k_linear * k_quadratic);
    let mut pc = cfg.clone();
    pc.max_iter = 4;
    pc.tol = 0.0f64.max(f64::MIN_POSITIVE);
    pc.smallness = SmallnessPolicy::Warn;
    pc.keep_iterates = false;
    let run = picard_solve(&f.scaled(probe / dn), &zero, grid, &pc)?;
    let rho = run.diagnostics.max_rho;
    if !(rho > 0.0) {
        return Err(Error::ZeroDenominator("probe run shows no contraction ratio".into()));
    }
    let k_contraction = rho / probe;
    Ok(FittedConstants { k_linear, k_quadratic, k_contraction, budget: 0.5 / k_contraction })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub u_rel: f64,
    pub pi_rel: f64,
    pub points: usize,
}

/// Solves with data (f, F) and with (λf(λ·), λ³F(λ·)) on the same lattice and the ladder
/// {y_k/λ}, then compares λu(λx) with u_λ(x) and λ²π(λx) with π_λ(x) at every point whose
/// image λx is a grid node. Pressures are compared modulo a constant.
pub fn scaling_invariance_check<Fb, Ff>(
    f: Fb,
    forcing: Ff,
    grid: &HalfSpaceGrid,
    cfg: &SolveConfig,
    lambda: f64,
) -> Result<ScalingReport>
where
    Fb: Fn(&[f64], &mut [f64]),
    Ff: Fn(&[f64], &mut [f64]),
{
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange(format!("λ must be positive, got {lambda}")));
    }
    let n = grid.dim;
    let base = BoundaryField::sample(n, &grid.lattice, 1, &f)?;
    let base_f = crate::grid::sample(grid, 1, &forcing)?;
    let sol = picard_solve(&base, &base_f, grid, cfg)?;

    let sgrid = HalfSpaceGrid::with_levels(n, grid.extent(), grid.step(), grid.levels.iter().map(|y| y / lambda).collect())?;
    let fl = BoundaryField::sample(n, &sgrid.lattice, 1, |x, o| {
        let xs: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        f(&xs, o);
        o.iter_mut().for_each(|v| *v *= lambda);
    })?;
    let ffl = crate::grid::sample(&sgrid, 1, |x, o| {
        let xs: Vec<f64> = x.iter().map(|v| lambda * v).collect();
        forcing(&xs, o);
        o.iter_mut().for_each(|v| *v *= lambda.powi(3));
    })?;
    let sol_l = picard_solve(&fl, &ffl, &sgrid, cfg)?;

    let lat = &grid.lattice;
    let d = n - 1;
    let mut ks = vec![0usize; d];
    let mut img = vec![0usize; d];
    let (mut du, mut nu, mut points) = (0.0f64, 0.0f64, 0usize);
    let mut pd = Vec::new();
    let mut pn = 0.0f64;
    for k in 0..grid.nlevels() {
        'h: for h in 0..grid.nh() {
            lat.unravel(h, &mut ks);
            for a in 0..d {
                match lat.nearest(lambda * lat.coord(ks[a])) {
                    Some(i) if (lat.coord(i) - lambda * lat.coord(ks[a])).abs() < 1e-9 * lat.step => img[a] = i,
                    _ => continue 'h,
                }
            }
            let hi = lat.ravel(&img);
            points += 1;
            for i in 0..n {
                let a = lambda * sol.u.at(k, hi, i);
                let b = sol_l.u.at(k, h, i);
                du = du.max((a - b).abs());
                nu = nu.max(a.abs());
            }
            let a = lambda * lambda * sol.pi.at(k, hi, 0);
            pd.push(a - sol_l.pi.at(k, h, 0));
            pn = pn.max(a.abs());
        }
    }
    if points == 0 {
        return Err(Error::EmptyRestriction(0.0));
    }
    let mean = pd.iter().sum::<f64>() / pd.len() as f64;
    let dp = pd.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    let rel = |a: f64, b: f64| if b > 0.0 { a / b } else { a };
    Ok(ScalingReport { lambda, u_rel: rel(du, nu), pi_rel: rel(dp, pn), points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub q: f64,
    pub norms_u: Vec<f64>,
    pub norms_pi: Vec<f64>,
    /// max / min of ‖u_j‖_{X^q̃} + ‖π_j‖_{Z^q̃} over the last (up to) five iterates.
    pub tail_ratio: f64,
    pub bounded: bool,
}

/// X^q̃ / Z^q̃ norms along the stored iterates.
pub fn bootstrap_higher_q(solution: &Solution, cfg: &SolveConfig) -> Result<BootstrapReport> {
    let b = cfg
        .bootstrap
        .ok_or_else(|| Error::Config("no bootstrap exponents configured".into()))?;
    b.validate(cfg.dim)?;
    if solution.iterates.is_empty() {
        return Err(Error::MissingIterates);
    }
    let mut norms_u = Vec::new();
    let mut norms_pi = Vec::new();
    for (u, pi) in &solution.iterates {
        let (a, c) = pair_norm(u, pi, b.q)?;
        norms_u.push(a);
        norms_pi.push(c);
    }
    let m = norms_u.len();
    let tail: Vec<f64> = (m.saturating_sub(5)..m).map(|j| norms_u[j] + norms_pi[j]).collect();
    let hi = tail.iter().copied().fold(0.0, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let tail_ratio = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(BootstrapReport {
        q: b.q,
        norms_u,
        norms_pi,
        tail_ratio,
        bounded: tail_ratio <= 2.0 && tail_ratio.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::BumpSpec;
    use crate::grid::LevelSpec;

    fn small_grid() -> HalfSpaceGrid {
        HalfSpaceGrid::with_levels(3, 2.0, 0.125, LevelSpec::spanning(0.5, 4.0, 2f64.powf(0.25)).levels()).unwrap()
    }

    fn shape() -> BumpSpec {
        BumpSpec { center: vec![0.0, 0.0], radius: 0.8, amplitude: 1.0, direction: vec![1.0, 0.5, 0.0] }
    }

    #[test]
    fn exponent_relations() {
        assert!(SolveConfig::new(3).validate().is_ok());
        assert!(SolveConfig::new(3).forcing.is_none());
        let c4 = SolveConfig::new(4);
        let (tau, eta) = c4.forcing.unwrap();
        assert!((1.0 / eta + 3.0 / tau - 3.0).abs() < 1e-12);
        let mut c = SolveConfig::new(3);
        c.forcing = Some((2.0, 2.0));
        assert!(matches!(c.validate(), Err(Error::ExponentRelation(_))));
        c.forcing = None;
        c.q = 3.0;
        assert!(c.validate().is_err());
        let b = BootstrapExponents::new(3, 4.0, 1.1).unwrap();
        assert!((1.0 / b.eta1 + 2.0 / b.tau1 - (2.0 + 1.0 / 3.0)).abs() < 1e-12);
        assert!(BootstrapExponents::new(3, 4.0, 2.0).is_err());
    }

    #[test]
    fn zero_data_converges_at_once() {
        let g = small_grid();
        let f = BoundaryField::zeros(3, &g.lattice, 1);
        let s = picard_solve(&f, &SampledField::zeros(&g, 1), &g, &SolveConfig::new(3)).unwrap();
        assert!(s.diagnostics.converged);
        assert_eq!(s.diagnostics.iterations.len(), 1);
        assert!(s.u.is_zero() && s.pi.is_zero());
        assert!(s.diagnostics.decay.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nonzero_forcing_without_exponents_is_refused() {
        let g = small_grid();
        let f = BoundaryField::zeros(3, &g.lattice, 1);
        let ff = shape().dilated(1.0, 1.0);
        let ff = BumpSpec { center: vec![0.0, 0.0, 1.5], ..ff }.interior(&g).unwrap();
        let r = picard_solve(&f, &ff, &g, &SolveConfig::new(3));
        assert!(matches!(r, Err(Error::ExponentRelation(_))));
    }

    #[test]
    fn refuses_large_data_when_asked() {
        let g = small_grid();
        let f = shape().boundary(3, &g.lattice).unwrap();
        let mut cfg = SolveConfig::new(3);
        cfg.epsilon = 1e-6;
        cfg.smallness = SmallnessPolicy::Refuse;
        let r = picard_solve(&f, &SampledField::zeros(&g, 1), &g, &cfg);
        assert!(matches!(r, Err(Error::Smallness { .. })));
    }

    #[test]
    fn small_data_contracts_and_large_data_diverges() {
        let g = small_grid();
        let cfg = SolveConfig::new(3);
        let unit = shape().boundary(3, &g.lattice).unwrap();
        let fit = fit_constants(&unit, &g, &cfg).unwrap();
        assert!(fit.k_linear > 0.0 && fit.k_quadratic > 0.0);
        let delta = 1e-2 * fit.budget / sobolev_neg_half_norm(&unit).unwrap();
        let zero = SampledField::zeros(&g, 1);
        let s = picard_solve(&unit.scaled(delta), &zero, &g, &cfg).unwrap();
        assert!(s.diagnostics.converged);
        assert!(s.diagnostics.max_rho <= 0.5, "{:?}", s.diagnostics.iterations);
        let r = picard_solve(&unit.scaled(1e3 * delta), &zero, &g, &cfg);
        assert!(matches!(r, Err(Error::Divergence { .. })), "{r:?}");
    }

    fn manufactured<D: num_dual::DualNum<Primitive = f64> + Copy>(x: [D; 3]) -> ([D; 3], D) {
        let e = (-(x[0] * x[0] + x[1] * x[1])).exp() * x[2] * x[2] * (-x[2]).exp();
        let two = D::one() + D::one();
        let u = [-(two * x[1] * e), two * x[0] * e, D::zero()];
        let xm = x[2] - D::one();
        let p = (-(x[0] * x[0] + x[1] * x[1] + xm * xm)).exp();
        (u, p)
    }

    fn manufactured_residual(h: f64, ratio: f64) -> f64 {
        use num_dual::{Dual64, HyperDual64};
        let g = HalfSpaceGrid::with_levels(3, 2.0, h, LevelSpec::spanning(0.25, 4.0, ratio).levels()).unwrap();
        let u = crate::grid::sample(&g, 1, |x, o| o.copy_from_slice(&manufactured([x[0], x[1], x[2]]).0)).unwrap();
        let pi = crate::grid::sample_scalar(&g, |x| manufactured([x[0], x[1], x[2]]).1).unwrap();
        let forcing = crate::grid::sample(&g, 1, |x, o| {
            let mut grad = [[0.0; 3]; 3];
            let mut lap = [0.0; 3];
            let mut gp = [0.0; 3];
            for a in 0..3 {
                let d: [Dual64; 3] = std::array::from_fn(|k| Dual64::new(x[k], if k == a { 1.0 } else { 0.0 }));
                let (du, dp) = manufactured(d);
                gp[a] = dp.eps;
                let hd: [HyperDual64; 3] = std::array::from_fn(|k| {
                    let e = if k == a { 1.0 } else { 0.0 };
                    HyperDual64::new(x[k], e, e, 0.0)
                });
                let (hu, _) = manufactured(hd);
                for i in 0..3 {
                    grad[i][a] = du[i].eps;
                    lap[i] += hu[i].eps1eps2;
                }
            }
            let (uu, _) = manufactured([x[0], x[1], x[2]]);
            for i in 0..3 {
                o[i] = -lap[i] + gp[i] + (0..3).map(|a| uu[a] * grad[i][a]).sum::<f64>();
            }
        })
        .unwrap();
        ns_residual(&u, &pi, &forcing, None, 0.5).unwrap().momentum_rel()
    }

    #[test]
    fn manufactured_solution_residual_shrinks_under_refinement() {
        let coarse = manufactured_residual(0.125, 2f64.powf(0.25));
        let fine = manufactured_residual(0.0625, 2f64.powf(0.125));
        assert!(fine < 1e-3, "{coarse} {fine}");
        assert!(fine < coarse / 4.0, "{coarse} {fine}");
    }

    #[test]
    fn starts_reach_the_same_fixed_point() {
        let g = small_grid();
        let cfg = SolveConfig::new(3);
        let unit = shape().boundary(3, &g.lattice).unwrap();
        let fit = fit_constants(&unit, &g, &cfg).unwrap();
        let f = unit.scaled(0.1 * fit.budget / sobolev_neg_half_norm(&unit).unwrap());
        let zero = SampledField::zeros(&g, 1);
        let a = picard_solve(&f, &zero, &g, &cfg).unwrap();
        let b = picard_solve_from(&f, &zero, &g, &cfg, &Init::ScaledLinear(2.0)).unwrap();
        let (du, dp) = pair_norm(&a.u.axpy(-1.0, &b.u), &a.pi.axpy(-1.0, &b.pi), 2.0).unwrap();
        let (nu, np) = pair_norm(&a.u, &a.pi, 2.0).unwrap();
        assert!((du + dp) / (nu + np) < 1e-9, "{}", (du + dp) / (nu + np));
    }
}
