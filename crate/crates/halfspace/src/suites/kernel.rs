use std::f64::consts::PI;

use serde_json::json;

use crate::error::Result;
use crate::kernels::mass::{kernel_mass, poisson_mass};
use crate::kernels::{fundamental_e, odqvist_big_k, odqvist_small_k, poisson_p};

use super::{Check, RunConfig, SuiteReport};

const HEIGHTS: [f64; 3] = [0.25, 1.0, 4.0];
const EST: &str = "Kernel normalization and closed forms";

/// Unit mass of the Stokes and Poisson kernels, and the closed-form golden values.
pub fn kernel_check(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("kernel-check", cfg.seed);
    rep.exponent("dims", json!([3, 4]));
    rep.exponent("heights", json!(HEIGHTS));
    let mut diag = 0.0f64;
    let mut off = 0.0f64;
    let mut pois = 0.0f64;
    let mut table = Vec::new();
    for n in [3usize, 4] {
        for &t in &HEIGHTS {
            for i in 0..n {
                for j in 0..n {
                    let m = kernel_mass(i, j, t, n)?;
                    table.push(json!({"n": n, "x_n": t, "i": i, "j": j, "mass": m}));
                    if i == j {
                        diag = diag.max((m - 1.0).abs());
                    } else {
                        off = off.max(m.abs());
                    }
                }
            }
            pois = pois.max((poisson_mass(t, n)? - 1.0).abs());
        }
    }
    rep.datum("masses", &table);
    rep.push(Check::at_most(1, EST, "diagonal_mass_error", diag, 1e-6));
    rep.push(Check::at_most(1, EST, "off_diagonal_mass", off, 1e-8));
    rep.push(Check::at_most(1, EST, "poisson_mass_error", pois, 1e-8));

    let golden = [
        ("E11(1,0,0)", fundamental_e(&[1.0, 0.0, 0.0], 0, 0)?, 1.0 / (4.0 * PI)),
        ("K33(0,0,1)", odqvist_big_k(&[0.0, 0.0], 1.0, 2, 2)?, 3.0 / (2.0 * PI)),
        ("k3(0,0,1)", odqvist_small_k(&[0.0, 0.0], 1.0, 2)?, 2.0 / (3.0 * PI)),
        ("P1(0)", poisson_p(&[0.0, 0.0], 1.0)?, 1.0 / (2.0 * PI)),
    ];
    for (id, got, want) in golden {
        rep.push(Check::at_most(2, EST, &format!("golden_{id}"), (got - want).abs(), 1e-12));
    }
    Ok(rep)
}
