use serde_json::json;

use crate::error::{Error, Result};
use crate::families::{bump, dilation_factors};
use crate::grid::{make_grid, sample_scalar, LevelSpec, SampledField};
use crate::potentials::{gbeta_boundedness_check, GbetaExponents};

use super::{Check, RunConfig, SuiteReport};

const EST: &str = "Mixed-norm G_beta bound";

/// ‖G_β F‖ / ‖F‖ over dilates of one bump, unweighted and weighted, on exact scaling lines;
/// exponent sets off the lines must be refused.
pub fn gbeta_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("gbeta-suite", cfg.seed);
    let g = make_grid(3, 4.0, 1.0 / 16.0, &LevelSpec::spanning(1.0 / 32.0, 8.0, 2f64.powf(0.25)))?;
    rep.grid("family", &g);
    let lambdas = dilation_factors(cfg.gbeta_family_size, 2f64.powf(0.25));
    rep.datum("dilations", &lambdas);
    rep.datum("profile", &json!({"center": [0.0, 0.0, 0.8], "radius": 0.5}));
    let family = lambdas
        .iter()
        .map(|&l| sample_scalar(&g, |x| bump(x, &[0.0, 0.0, 0.8 * l], 0.5 * l)))
        .collect::<Result<Vec<SampledField>>>()?;

    let unweighted = GbetaExponents { beta: 1.0, tau: 2.0, eta: 2.0, p: 8.0, q: 4.0, weight: None };
    let weighted = GbetaExponents { weight: Some(1.0), ..unweighted };
    for (name, e) in [("unweighted", unweighted), ("weighted", weighted)] {
        rep.exponent(name, serde_json::to_value(e).expect("serializable"));
        match gbeta_boundedness_check(&family, &format!("bump dilates ({name})"), &e) {
            Ok(r) => {
                let finite = r.ratios.iter().all(|v| v.is_finite() && *v > 0.0);
                rep.push(Check::holds(12, EST, &format!("{name}_ratios_finite"), finite));
                rep.push(Check::at_most(12, EST, &format!("{name}_ratio_spread"), r.spread, 2.0));
                rep.datum(name, &r.ratios);
            }
            Err(err) => {
                rep.data.insert(format!("error:{name}"), json!(err.to_string()));
                rep.push(Check::failed(12, EST, &format!("{name}_ratio_spread")));
            }
        }
    }

    // (τ, η) = (2, 2) with β = 2 has no admissible p, and a nudged p leaves the line
    let off = [
        GbetaExponents { beta: 2.0, tau: 2.0, eta: 2.0, p: 2.0, q: 2.0, weight: None },
        GbetaExponents { p: 8.5, ..unweighted },
        GbetaExponents { p: 8.5, ..weighted },
    ];
    let probe = &family[family.len() / 2..family.len() / 2 + 1];
    let refused = off
        .iter()
        .all(|e| matches!(gbeta_boundedness_check(probe, "off-line probe", e), Err(Error::ExponentRelation(_))));
    rep.push(Check::holds(12, EST, "off_line_runs_refused", refused));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_config_passes() {
        let t = std::time::Instant::now();
        let r = gbeta_suite(&RunConfig::default()).unwrap();
        eprintln!("{:.1}s", t.elapsed().as_secs_f64());
        for c in &r.checks {
            eprintln!("{} {} {:.4e} {}", c.criterion, c.id, c.measured, c.passed);
        }
        eprintln!("{:?}", r.data);
        assert!(r.passed(), "{:?}", r.failures());
    }
}
