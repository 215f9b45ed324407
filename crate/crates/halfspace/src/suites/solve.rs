use serde_json::json;

use crate::error::{Error, Result};
use crate::families::BumpSpec;
use crate::freqspace::sobolev_neg_half_norm;
use crate::grid::{BoundaryField, HalfSpaceGrid, SampledField};
use crate::solver::{
    bootstrap_higher_q, fit_constants, fixed_point_defect, pair_distance, picard_solve, picard_solve_from,
    scaling_invariance_check, BootstrapExponents, FittedConstants, Init, SolveConfig,
};

use super::{Check, RunConfig, SuiteReport};

const SMALL: &str = "Small-data existence and contraction";
const UNIQUE: &str = "Uniqueness surrogate";
const BOOT: &str = "Higher-q bootstrap";
const SCALING: &str = "Scaling invariance";

/// Levels y_min·2^{k/m}, k = 0..=m·log₂(y_max/y_min), over the configured lattice.
pub fn solver_grid(cfg: &RunConfig) -> Result<HalfSpaceGrid> {
    let (lo, hi, m) = (cfg.solver_vertical_min, cfg.solver_vertical_max, cfg.solver_levels_per_octave);
    if !(lo > 0.0 && hi > lo) || m == 0 {
        return Err(Error::Config(format!("bad vertical range [{lo}, {hi}] with {m} levels per octave")));
    }
    let steps = ((hi / lo).log2() * m as f64).round() as usize;
    let levels = (0..=steps).map(|k| lo * 2f64.powf(k as f64 / m as f64)).collect();
    HalfSpaceGrid::with_levels(3, cfg.solver_horizontal_extent, cfg.solver_horizontal_step, levels)
}

fn profile(amplitude: f64) -> BumpSpec {
    BumpSpec { center: vec![0.0, 0.0], radius: 1.0, amplitude, direction: vec![1.0, 0.5, -0.3] }
}

fn solve_config(cfg: &RunConfig) -> SolveConfig {
    let mut sc = SolveConfig::new(3);
    sc.max_iter = cfg.solver_max_iterations;
    sc.tol = cfg.solver_tolerance;
    sc.margin = 0.5;
    sc
}

/// Fitted constants for the unit profile and the amplitude that puts the data at the
/// configured fraction of the fitted budget.
fn small_amplitude(cfg: &RunConfig, g: &HalfSpaceGrid, sc: &SolveConfig) -> Result<(FittedConstants, f64)> {
    let unit = profile(1.0).boundary(3, &g.lattice)?;
    let fit = fit_constants(&unit, g, sc)?;
    Ok((fit, cfg.solver_smallness_fraction * fit.budget / sobolev_neg_half_norm(&unit)?))
}

fn describe(rep: &mut SuiteReport, cfg: &RunConfig, sc: &SolveConfig, g: &HalfSpaceGrid) {
    rep.grid("solver", g);
    rep.exponent("q", json!(sc.q));
    rep.exponent("p", json!(sc.p()));
    rep.exponent("nonlinear", json!(sc.nonlinear));
    rep.exponent("forcing", json!(sc.forcing));
    rep.exponent("bootstrap", json!({"q": cfg.bootstrap_q, "eta1": cfg.bootstrap_eta1}));
}

/// Picard iteration on small boundary data: convergence, contraction, residual, decay, the
/// fixed-point defect, agreement of two starts, the higher-q bootstrap, and divergence once the
/// data is scaled far past the budget. With `solver_zero_data` only the trivial run is made.
pub fn solve_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    Ok(solve_suite_fields(cfg)?.0)
}

/// As `solve_suite`, also returning the converged (u, π) of the small-data run.
pub fn solve_suite_fields(cfg: &RunConfig) -> Result<(SuiteReport, Option<(SampledField, SampledField)>)> {
    let mut rep = SuiteReport::new("solve", cfg.seed);
    let g = solver_grid(cfg)?;
    let mut sc = solve_config(cfg);
    describe(&mut rep, cfg, &sc, &g);
    let zero = SampledField::zeros(&g, 1);

    if cfg.solver_zero_data {
        rep.try_push_with(14, SMALL, "zero_data", "diagnostics", || {
            let f = BoundaryField::zeros(3, &g.lattice, 1);
            let s = picard_solve(&f, &zero, &g, &sc)?;
            let d = s.diagnostics;
            Ok((
                vec![
                    Check::holds(14, SMALL, "zero_data_converged", d.converged),
                    Check::at_most(14, SMALL, "zero_data_iterations", d.iterations.len() as f64, 1.0),
                ],
                d,
            ))
        });
        rep.warn("zero data: only the trivial run was made");
        return Ok((rep, None));
    }

    let (fit, amp) = match small_amplitude(cfg, &g, &sc) {
        Ok(v) => v,
        Err(e) => {
            rep.data.insert("error:fit".into(), json!(e.to_string()));
            rep.push(Check::failed(14, SMALL, "fitted_constants"));
            return Ok((rep, None));
        }
    };
    rep.datum("fitted_constants", &fit);
    rep.datum("profile", &profile(amp));
    let f = profile(amp).boundary(3, &g.lattice)?;
    sc.epsilon = fit.budget;
    sc.keep_iterates = true;
    sc.bootstrap = Some(BootstrapExponents::new(3, cfg.bootstrap_q, cfg.bootstrap_eta1)?);

    let small = match picard_solve(&f, &zero, &g, &sc) {
        Ok(s) => s,
        Err(e) => {
            rep.data.insert("error:small".into(), json!(e.to_string()));
            rep.push(Check::failed(14, SMALL, "small_data_run"));
            return Ok((rep, None));
        }
    };
    let d = &small.diagnostics;
    rep.push(Check::holds(14, SMALL, "within_budget", d.within_smallness));
    rep.push(Check::holds(14, SMALL, "converged", d.converged));
    rep.push(Check::at_most(14, SMALL, "max_contraction_ratio", d.max_rho, 0.5));
    match &d.residual {
        Some(r) => {
            rep.push(Check::at_most(14, SMALL, "momentum_residual", r.momentum_rel(), 1e-2));
            rep.push(Check::at_most(14, SMALL, "divergence_residual", r.divergence_rel(), 1e-6));
        }
        None => rep.push(Check::failed(14, SMALL, "momentum_residual")),
    }
    rep.push(Check::holds(14, SMALL, "decay_bounded", d.decay.bounded));
    rep.push(Check::holds(14, SMALL, "decay_top_octave_decrease", d.decay.top_octave_decrease));
    rep.try_push_with(14, SMALL, "fixed_point_defect", "fixed_point_defect", || {
        let v = fixed_point_defect(&small, &f, &zero, &g, &sc)?;
        Ok((vec![Check::at_most(14, SMALL, "fixed_point_defect", v, cfg.solver_tolerance)], v))
    });
    rep.datum("diagnostics", d);

    // the zero start matches the standard one when F = 0, so the second start is 2·(𝓗f, 𝓔f)
    rep.try_push_with(14, UNIQUE, "uniqueness", "uniqueness_distance", || {
        let mut uc = sc.clone();
        uc.keep_iterates = false;
        let other = picard_solve_from(&f, &zero, &g, &uc, &Init::ScaledLinear(2.0))?;
        let dist = pair_distance(&other, &small, sc.q)?;
        Ok((
            vec![
                Check::holds(14, UNIQUE, "second_start_converged", other.diagnostics.converged),
                Check::at_most(14, UNIQUE, "start_independence", dist, 10.0 * cfg.solver_tolerance),
            ],
            dist,
        ))
    });

    rep.try_push_with(14, BOOT, "bootstrap", "bootstrap", || {
        let b = bootstrap_higher_q(&small, &sc)?;
        let finite = b.norms_u.iter().chain(&b.norms_pi).all(|v| v.is_finite());
        Ok((
            vec![
                Check::holds(14, BOOT, "bootstrap_norms_finite", finite),
                Check::at_most(14, BOOT, "bootstrap_tail_ratio", b.tail_ratio, 2.0),
            ],
            b,
        ))
    });
    let fields = (small.u, small.pi);

    let mut lc = sc.clone();
    lc.keep_iterates = false;
    lc.bootstrap = None;
    let large = picard_solve(&f.scaled(cfg.solver_large_data_factor), &zero, &g, &lc);
    let diverged = match large {
        Err(Error::Divergence { rho_history }) => {
            rep.datum("large_data_rho_history", &rho_history);
            true
        }
        Err(e) => {
            rep.data.insert("error:large_data".into(), json!(e.to_string()));
            false
        }
        Ok(s) => {
            rep.datum("large_data_diagnostics", &s.diagnostics);
            false
        }
    };
    rep.datum("large_data_factor", &cfg.solver_large_data_factor);
    rep.push(Check::holds(14, SMALL, "large_data_diverges", diverged));
    Ok((rep, Some(fields)))
}

/// Solves at a small amplitude and with the λ-rescaled data, then compares the rescaled pair.
pub fn scaling_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("scaling-check", cfg.seed);
    let g = solver_grid(cfg)?;
    let sc = solve_config(cfg);
    describe(&mut rep, cfg, &sc, &g);
    rep.exponent("lambda", json!(cfg.scaling_lambda));
    if cfg.solver_zero_data {
        rep.warn("zero data: the comparison is trivial");
    }
    rep.try_push_with(14, SCALING, "scaling", "scaling", || {
        let amp = if cfg.solver_zero_data { 0.0 } else { small_amplitude(cfg, &g, &sc)?.1 };
        let b = profile(amp);
        let r = scaling_invariance_check(|x, o| b.value(x, o), |_, o| o.fill(0.0), &g, &sc, cfg.scaling_lambda)?;
        Ok((
            vec![
                Check::at_most(14, SCALING, "velocity_scaling", r.u_rel, 1e-2),
                Check::at_most(14, SCALING, "pressure_scaling", r.pi_rel, 1e-2),
            ],
            (amp, r),
        ))
    });
    Ok(rep)
}
