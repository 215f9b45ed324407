use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::error::Result;
use crate::families::{band_limited_interior, bump, BandLimitedSpec};
use crate::grid::{make_grid, sample, sample_scalar, HalfSpaceGrid, LevelSpec};
use crate::kernels::averaging_constant;
use crate::tentspace::{
    averaging_identity_check, carleson_functional, conical_at, conical_functional, local_lq_equivalence_check,
    tent_holder_check, weighted_tent_norm, CompactBox, TentParams,
};

use super::{spread, Check, RunConfig, SuiteReport};

/// Indicator of B_1(0) × (0, 2) with half values on the jump nodes.
fn tent_indicator(x: &[f64]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let half = |d: f64| if d.abs() < 1e-9 { 0.5 } else if d < 0.0 { 1.0 } else { 0.0 };
    half(r - 1.0) * half(x[2] - 2.0)
}

fn family_grid() -> Result<HalfSpaceGrid> {
    make_grid(3, 4.0, 1.0 / 16.0, &LevelSpec::spanning(1.0 / 32.0, 4.0, 2f64.powf(0.25)))
}

/// Averaging identity, analytic tent values, Hölder, aperture and local L^q comparability.
pub fn tent_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("tent-suite", cfg.seed);

    // averaging identity for three smooth compactly supported fields
    let h = cfg.tent_horizontal_step;
    let ga = make_grid(3, 2.0, h, &LevelSpec::spanning(h, 1.5, 2f64.powf(1.0 / 8.0)))?;
    rep.grid("averaging", &ga);
    rep.exponent("averaging_q", json!(2.0));
    rep.try_push(3, "Averaging identity", "averaging_relative_error", || {
        let fields = [
            sample_scalar(&ga, |x| bump(x, &[0.0, 0.0, 0.6], 0.5))?,
            sample_scalar(&ga, |x| bump(x, &[0.2, -0.1, 0.7], 0.4) * (1.0 + x[0]))?,
            sample(&ga, 1, |x, o| {
                let b = bump(x, &[-0.1, 0.1, 0.55], 0.45);
                o[0] = b;
                o[1] = -0.3 * b * x[2];
                o[2] = 0.5 * b;
            })?,
        ];
        let mut worst = 0.0f64;
        for f in &fields {
            let a = averaging_identity_check(f, 2.0)?;
            worst = worst.max((a.lhs / a.rhs - 1.0).abs());
        }
        let mu = averaging_constant(3);
        Ok(vec![
            Check::at_most(3, "Averaging identity", "averaging_relative_error", worst, 0.02),
            Check::at_most(3, "Averaging identity", "mu_equals_pi", (mu - std::f64::consts::PI).abs(), 1e-12),
        ])
    });

    // closed-form tent values of the T(B_1) indicator
    let gi = make_grid(3, 2.0, 1.0 / 64.0, &LevelSpec::spanning(1.0 / 64.0, 4.0, 2f64.powf(1.0 / 32.0)))?;
    rep.grid("indicator", &gi);
    rep.try_push(4, "Tent analytic values", "conical_indicator", || {
        let f = sample_scalar(&gi, tent_indicator)?;
        let a2 = conical_at(&f, 2.0, 1.0, &[0.0, 0.0])?;
        let want = (1.5 * std::f64::consts::PI).sqrt();
        let origin = gi.lattice.ravel(&[gi.lattice.nearest(0.0).unwrap(); 2]);
        let c2 = carleson_functional(&f, 2.0)?.values[origin];
        Ok(vec![
            Check::at_most(4, "Tent analytic values", "conical_indicator", (a2 / want - 1.0).abs(), 0.01),
            Check::at_most(4, "Tent analytic values", "carleson_indicator", (c2 / 2f64.sqrt() - 1.0).abs(), 0.01),
        ])
    });

    let g = family_grid()?;
    rep.grid("family", &g);
    let spec = BandLimitedSpec { modes: 6, kmax: 4.0, width: 0.5, seed: cfg.seed };
    rep.datum("family", &spec);

    // Hölder on random pairs with random exponents on the relations
    rep.try_push(5, "Tent-space Hölder inequality", "holder_pairs", || {
        let fields = band_limited_interior(&g, &BandLimitedSpec { seed: cfg.seed ^ 0x5eed, ..spec }, 2 * cfg.holder_pairs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut worst = 0.0f64;
        for pair in fields.chunks(2) {
            let p0 = rng.random_range(1.5..4.0);
            let q0 = rng.random_range(1.0..3.0);
            let s0 = rng.random_range(-0.2..0.2);
            let t = rng.random_range(0.2..0.8);
            let u = rng.random_range(0.2..0.8);
            let s1 = rng.random_range(-0.3..0.3);
            let params = [
                TentParams::new(p0, q0, s0, 1.0)?,
                TentParams::new(p0 / t, q0 / u, s1, 1.0)?,
                TentParams::new(p0 / (1.0 - t), q0 / (1.0 - u), s0 - s1, 1.0)?,
            ];
            let (l, r) = tent_holder_check(&pair[0], &pair[1], params)?;
            worst = worst.max(l / r);
        }
        Ok(vec![Check::at_most(5, "Tent-space Hölder inequality", "holder_lhs_over_rhs", worst, 1.0 + 1e-6)])
    });

    // aperture comparability and local L^q equivalence over the band-limited family
    let fields = band_limited_interior(&g, &spec, cfg.tent_family_size)?;
    rep.exponent("aperture_pq", json!([4.0, 2.0]));
    rep.try_push(6, "Aperture comparability", "aperture", || {
        let p1 = TentParams::new(4.0, 2.0, 0.0, 1.0)?;
        let p2 = TentParams::new(4.0, 2.0, 0.0, 2.0)?;
        let mut ratios = Vec::new();
        let mut monotone = true;
        for f in &fields {
            let a1 = conical_functional(f, 2.0, 1.0)?;
            let a2 = conical_functional(f, 2.0, 2.0)?;
            // compared as A^q, where the FFT roundoff floor is additive rather than under a root
            let scale = a2.max_abs().powi(2);
            monotone &= a1.values.iter().zip(&a2.values).all(|(x, y)| y * y >= x * x - 1e-12 * scale);
            ratios.push(weighted_tent_norm(f, &p2)? / weighted_tent_norm(f, &p1)?);
        }
        Ok(vec![
            Check::holds(6, "Aperture comparability", "aperture_monotone", monotone),
            Check::at_most(6, "Aperture comparability", "aperture_ratio_spread", spread(&ratios), 1.5),
        ])
    });
    rep.try_push(7, "Local L^q equivalence", "local_lq", || {
        let k = CompactBox::new(vec![0.0, 0.0], 0.5, 0.25, 1.0)?;
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for f in &fields {
            let (x, y) = local_lq_equivalence_check(f, &k, 4.0, 2.0)?;
            a.push(x);
            b.push(y);
        }
        let finite = a.iter().chain(&b).all(|v| v.is_finite() && *v > 0.0);
        Ok(vec![
            Check::holds(7, "Local L^q equivalence", "local_ratios_finite", finite),
            Check::at_most(7, "Local L^q equivalence", "local_tent_over_lq_spread", spread(&a), 3.0),
            Check::at_most(7, "Local L^q equivalence", "local_lq_over_tent_spread", spread(&b), 3.0),
        ])
    });
    Ok(rep)
}
