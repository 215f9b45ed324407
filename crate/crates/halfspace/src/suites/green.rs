use serde_json::json;

use crate::diffops::stokes_residual;
use crate::error::Result;
use crate::families::bump;
use crate::grid::{capped_levels, make_grid, sample, BoundaryField, HalfSpaceGrid, LevelSpec, SampledField};
use crate::kernels::bounds::{green_bound_suite, BoundSampleSpec};
use crate::potentials::{green_direct, green_spectral, stokes_extend, stokes_extend_full};

use super::{Check, RunConfig, SuiteReport};

const EXT: &str = "Stokes extension";
const GREEN: &str = "Green potential";
const BOUNDS: &str = "Green tensor pointwise bounds";

fn rel_sup(a: &SampledField, b: &SampledField) -> f64 {
    let d = a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    d / b.max_abs()
}

fn boundary_bump(x: &[f64], o: &mut [f64]) {
    let b = bump(x, &[0.1, -0.05], 0.8);
    o[0] = b;
    o[1] = 0.5 * b;
    o[2] = -b;
}

fn interior_force(x: &[f64], o: &mut [f64]) {
    let b = bump(x, &[0.2, -0.1, 1.5], 1.2);
    o[0] = b;
    o[1] = -0.5 * b;
    o[2] = 0.8 * b;
}

/// Stokes extension residual, wall recovery and scaling; Green potential cross-check, residual
/// and wall value; sampled ratios of the Green tensor bounds.
pub fn green_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("green-suite", cfg.seed);

    let g = make_grid(3, 2.0, 1.0 / 16.0, &LevelSpec::new(0.25, 2f64.powf(0.125), 24))?;
    rep.grid("extension", &g);
    rep.try_push(10, EXT, "extension_residual", || {
        let f = BoundaryField::sample(3, &g.lattice, 1, boundary_bump)?;
        let s = stokes_extend_full(&f, &g, true)?;
        // differences on the grid; the closed-form gradient only enters the divergence
        let fd = stokes_residual(&s.u, &s.pi, None, None, false, 0.5)?;
        let exact = stokes_residual(&s.u, &s.pi, s.grad_u.as_ref(), None, false, 0.5)?;
        Ok(vec![
            Check::at_most(10, EXT, "extension_momentum_residual", fd.momentum_rel(), 1e-3),
            Check::at_most(10, EXT, "extension_divergence", exact.divergence_rel(), 1e-6),
        ])
    });

    let h = 1.0 / 128.0;
    rep.try_push(10, EXT, "extension_recovery", || {
        let gr = HalfSpaceGrid::with_levels(3, 4.0, h, vec![4.0 * h])?;
        // wide against 4h: the defect is about x_n‖|D|f‖_∞
        let f = BoundaryField::sample(3, &gr.lattice, 1, |x, o| {
            let b = bump(x, &[0.0, 0.0], 14f64.sqrt());
            o[0] = b;
            o[1] = 0.5 * b;
            o[2] = -b;
        })?;
        let (u, _) = stokes_extend(&f, &gr)?;
        let err = u.values.iter().zip(&f.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(vec![Check::at_most(10, EXT, "extension_recovery_at_4h", err / f.max_abs(), 0.05)])
    });

    rep.exponent("scaling_lambda", json!(2.0));
    rep.try_push(10, EXT, "extension_scaling", || {
        let gs = make_grid(3, 2.0, 1.0 / 16.0, &LevelSpec::new(0.25, 2.0, 3))?;
        let f = BoundaryField::sample(3, &gs.lattice, 1, boundary_bump)?;
        let lam = 2.0;
        let gl = gs.shrunk(lam);
        // f_λ(x') = λ f(λx') on the shrunk lattice has node values λ·f
        let fl = BoundaryField { lattice: gl.lattice.clone(), ..f.scaled(lam) };
        let (u, p) = stokes_extend(&f, &gs)?;
        let (ul, pl) = stokes_extend(&fl, &gl)?;
        Ok(vec![
            Check::at_most(10, EXT, "velocity_scaling", rel_sup(&ul, &u.scaled(lam)), 1e-6),
            Check::at_most(10, EXT, "pressure_scaling", rel_sup(&pl, &p.scaled(lam * lam)), 1e-6),
        ])
    });

    if cfg.green_cross_check {
        let gc = HalfSpaceGrid::with_levels(3, 2.0, 1.0 / 8.0, LevelSpec::spanning(0.25, 4.0, 2f64.sqrt()).levels())?;
        rep.grid("cross_check", &gc);
        rep.try_push(11, GREEN, "cross_check", || {
            let f = sample(&gc, 1, interior_force)?;
            let zero_h = SampledField::zeros(&gc, 2);
            // the spectral path is periodic, so its period must dwarf the top level
            let (d, s) = rayon::join(|| green_direct(&f, &zero_h), || green_spectral(&f, &zero_h, 16, false));
            let (d, s) = (d?, s?);
            Ok(vec![
                Check::at_most(11, GREEN, "cross_check_velocity", rel_sup(&s.v, &d.v), 1e-2),
                Check::at_most(11, GREEN, "cross_check_pressure", rel_sup(&s.w, &d.w), 1e-2),
            ])
        });
    } else {
        rep.warn("green_cross_check disabled: the direct-kernel comparison was skipped");
    }

    let gp = HalfSpaceGrid::with_levels(3, 4.0, 1.0 / 8.0, capped_levels(1.0 / 256.0, 4.0, 2f64.sqrt(), 0.1))?;
    rep.grid("potential", &gp);
    rep.try_push(11, GREEN, "potential_residual", || {
        let f = sample(&gp, 1, interior_force)?;
        let r = green_spectral(&f, &SampledField::zeros(&gp, 2), 2, true)?;
        let res = stokes_residual(&r.v, &r.w, r.grad_v.as_ref(), Some(&f), false, 0.5)?;
        let wall = (0..gp.nh()).flat_map(|p| (0..3).map(move |i| (p, i))).fold(0.0f64, |m, (p, i)| m.max(r.v.at(0, p, i).abs()));
        Ok(vec![
            Check::at_most(11, GREEN, "potential_momentum_residual", res.momentum_rel(), 1e-2),
            Check::at_most(11, GREEN, "potential_divergence", res.divergence_rel(), 1e-6),
            Check::at_most(11, GREEN, "potential_wall_value", wall / r.v.max_abs(), 1e-2),
        ])
    });

    let spec = BoundSampleSpec { size: cfg.bound_sample_size, seed: cfg.seed, step: cfg.bound_fd_step };
    match green_bound_suite(&spec) {
        Ok(b) => {
            for e in &b.entries {
                let ok = e.max_ratio.is_finite() && e.max_ratio > 0.0;
                rep.push(Check::holds(11, BOUNDS, &format!("bound_{}_finite", e.bound_id), ok));
                rep.push(Check::at_most(11, BOUNDS, &format!("bound_{}_doubling_drift", e.bound_id), e.doubling_drift, 0.1));
            }
            rep.datum("bounds", &b);
        }
        Err(e) => {
            rep.data.insert("error:bounds".into(), json!(e.to_string()));
            rep.push(Check::failed(11, BOUNDS, "bounds"));
        }
    }
    Ok(rep)
}
