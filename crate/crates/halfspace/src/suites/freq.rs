use serde_json::json;

use crate::error::Result;
use crate::families::dilation_factors;
use crate::freqspace::{
    lp_block, poisson_extend, poisson_tent_equivalence_check, remove_mean, sobolev_neg_half_norm, tl_norm, LPFilterBank,
    TLParams,
};
use crate::grid::{make_grid, BoundaryField, HalfSpaceGrid, Lattice, LevelSpec};

use super::{spread, Check, RunConfig, SuiteReport};

const LP: &str = "Littlewood-Paley calculus";
const PT: &str = "Poisson-tent equivalence";

/// Mean-free Mexican-hat profile of width w.
fn wavelet(lat: &Lattice, w: f64) -> Result<BoundaryField> {
    let f = BoundaryField::sample_scalar(3, lat, |x| {
        let r2 = (x[0] * x[0] + x[1] * x[1]) / (w * w);
        (1.0 - r2) * (-r2).exp()
    })?;
    Ok(remove_mean(&f))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Partition of unity, block orthogonality, the dyadic dilation law and the Poisson
/// semigroup; then the Poisson-tent ratio over a dilate family.
pub fn freq_suite(cfg: &RunConfig) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("freq-suite", cfg.seed);
    let lat = Lattice::full(2, 4.0, 1.0 / 16.0)?;
    rep.datum("lattice", &json!({"extent": 4.0, "step": 1.0 / 16.0, "side": lat.side}));

    rep.try_push(8, LP, "partition", || {
        let bank = LPFilterBank::new(&lat);
        let f = wavelet(&lat, 0.4)?;
        let scale = f.max_abs();
        let blocks = bank.indices().map(|j| lp_block(&f, j)).collect::<Result<Vec<_>>>()?;
        let mut sum = vec![0.0; f.values.len()];
        for b in &blocks {
            sum.iter_mut().zip(&b.values).for_each(|(s, v)| *s += v);
        }
        // Δ_k Δ_j vanishes once the annuli are disjoint
        let mut orth = 0.0f64;
        let js: Vec<i32> = bank.indices().collect();
        for a in 0..js.len() {
            for &k in js.iter().skip(a + 2) {
                orth = orth.max(lp_block(&blocks[a], k)?.max_abs() / scale);
            }
        }
        Ok(vec![
            Check::at_most(8, LP, "partition_of_unity", bank.partition_error(), 1e-12),
            Check::at_most(8, LP, "block_reconstruction", max_diff(&sum, &f.values) / scale, 1e-12),
            Check::at_most(8, LP, "block_orthogonality", orth, 1e-12),
        ])
    });

    rep.exponent("dilation_tl", json!({"s": -0.5, "p": 4.0, "q": 2.0}));
    rep.try_push(8, LP, "dilation_law", || {
        let f = wavelet(&lat, 0.5)?;
        // f(2·) on the lattice shrunk by 2 carries the same node values
        let f2 = BoundaryField { lattice: lat.shrunk(2.0), ..f.clone() };
        let params = TLParams::new(-0.5, 4.0, 2.0)?;
        // ‖f(2·)‖ = 2^{s − (n−1)/p} ‖f‖ = 2^{-1}‖f‖; the Sobolev norm sits at the same (s, p)
        let want = 2f64.powf(-0.5 - 2.0 / 4.0);
        let tl = tl_norm(&f2, &params)? / tl_norm(&f, &params)?;
        let sob = sobolev_neg_half_norm(&f2)? / sobolev_neg_half_norm(&f)?;
        Ok(vec![
            Check::at_most(8, LP, "tl_dilation_law", (tl / want - 1.0).abs(), 1e-6),
            Check::at_most(8, LP, "sobolev_dilation_law", (sob / want - 1.0).abs(), 1e-6),
        ])
    });

    rep.try_push(8, LP, "poisson_semigroup", || {
        let f = wavelet(&lat, 0.3)?;
        let g1 = HalfSpaceGrid::with_levels(3, 4.0, 1.0 / 16.0, vec![0.25])?;
        let g2 = HalfSpaceGrid::with_levels(3, 4.0, 1.0 / 16.0, vec![0.5])?;
        let once = poisson_extend(&f, &g1)?;
        let b = BoundaryField { values: once.values.clone(), ..f.clone() };
        let twice = poisson_extend(&b, &g1)?;
        let direct = poisson_extend(&f, &g2)?;
        Ok(vec![Check::at_most(8, LP, "poisson_semigroup", max_diff(&twice.values, &direct.values) / f.max_abs(), 1e-8)])
    });

    let grid = make_grid(3, 4.0, 1.0 / 16.0, &LevelSpec::spanning(1.0 / 128.0, 8.0, 2f64.powf(0.125)))?;
    rep.grid("poisson", &grid);
    rep.exponent("poisson_tent", json!({"q": 2.0, "p": 4.0, "s": -0.5}));
    let widths: Vec<f64> = dilation_factors(cfg.poisson_family_size, 2f64.powf(0.25)).iter().map(|l| 0.35 * l).collect();
    rep.datum("poisson_widths", &widths);
    let mut ratios = Vec::new();
    rep.try_push(9, PT, "poisson_tent", || {
        for &w in &widths {
            let f = wavelet(&grid.lattice, w)?;
            let (tl, tent) = poisson_tent_equivalence_check(&f, 2.0, &grid)?;
            ratios.push(tent / tl);
        }
        let finite = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
        Ok(vec![
            Check::holds(9, PT, "poisson_tent_ratios_finite", finite),
            Check::at_most(9, PT, "poisson_tent_ratio_spread", spread(&ratios), 1.5),
        ])
    });
    rep.datum("poisson_tent_ratios", &ratios);
    Ok(rep)
}
