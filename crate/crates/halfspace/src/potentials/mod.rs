//! Boundary and volume potentials on sampled grids.

pub mod conv;
pub mod green_direct;
pub mod green_spectral;
pub mod mixed;
pub mod riesz;
pub mod stokes_ext;

pub use green_direct::green_direct;
pub use green_spectral::green_spectral;
pub use stokes_ext::{stokes_extend, stokes_extend_full, StokesFields};

pub use mixed::{gbeta_boundedness_check, mixed_norm, GbetaExponents, MixedNormParams};
pub use riesz::{g_beta, g_beta_at, riesz_at, riesz_potential};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{HalfSpaceGrid, SampledField};

/// Relative sup-norm agreement demanded of the two Green paths.
pub const CROSS_CHECK_TOL: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalPath {
    /// Quadrature against the wall Green tensor (n = 3).
    Direct,
    /// Per-frequency boundary-value problems in x_n (any n).
    Spectral,
    /// Both, compared; the spectral result is returned.
    CrossCheck,
}

/// How the horizontal transforms treat the region outside the lattice window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailPolicy {
    /// Zero data outside the window, transforms periodic over `factor` window widths.
    ZeroPad(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialConfig {
    pub dim: usize,
    /// Tolerance of adaptive quadratures (self-cell corrections, far tails).
    pub tol: f64,
    pub path: EvalPath,
    pub tail: TailPolicy,
}

impl PotentialConfig {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            tol: 1e-10,
            path: EvalPath::Spectral,
            tail: TailPolicy::ZeroPad(2),
        }
    }

    pub fn with_path(mut self, path: EvalPath) -> Self {
        self.path = path;
        self
    }

    pub fn with_tail(mut self, tail: TailPolicy) -> Self {
        self.tail = tail;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("quadrature tolerance must be positive, got {}", self.tol)));
        }
        if self.dim < 3 {
            return Err(Error::Config(format!("dimension must be >= 3, got {}", self.dim)));
        }
        if self.path != EvalPath::Spectral && self.dim != 3 {
            return Err(Error::Config("the direct-kernel path exists only for n = 3".into()));
        }
        let TailPolicy::ZeroPad(f) = self.tail;
        if f < 2 {
            return Err(Error::Config("zero padding factor must be >= 2".into()));
        }
        Ok(())
    }

    fn pad(&self) -> usize {
        let TailPolicy::ZeroPad(f) = self.tail;
        f
    }
}

fn rel_sup_diff(a: &SampledField, b: &SampledField) -> f64 {
    let d = a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let s = b.max_abs();
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

/// (𝒢(F,H), Ψ(F,H)) by the configured path; ∂v is filled by the spectral path when asked.
pub fn green_fields(f: &SampledField, h: &SampledField, cfg: &PotentialConfig, derivatives: bool) -> Result<GreenFields> {
    cfg.validate()?;
    if f.grid.dim != cfg.dim {
        return Err(Error::Shape(format!("grid dimension {} but config says {}", f.grid.dim, cfg.dim)));
    }
    match cfg.path {
        EvalPath::Spectral => green_spectral(f, h, cfg.pad(), derivatives),
        EvalPath::Direct => green_direct(f, h),
        EvalPath::CrossCheck => {
            let (d, s) = rayon::join(|| green_direct(f, h), || green_spectral(f, h, cfg.pad(), derivatives));
            let (d, s) = (d?, s?);
            let diff = rel_sup_diff(&d.v, &s.v);
            if diff > CROSS_CHECK_TOL {
                return Err(Error::CrossCheck(diff));
            }
            Ok(s)
        }
    }
}

pub fn green_potential(f: &SampledField, h: &SampledField, cfg: &PotentialConfig) -> Result<SampledField> {
    Ok(green_fields(f, h, cfg, false)?.v)
}

pub fn pressure_potential(f: &SampledField, h: &SampledField, cfg: &PotentialConfig) -> Result<SampledField> {
    Ok(green_fields(f, h, cfg, false)?.w)
}

/// Velocity 𝒢(F,H), pressure Ψ(F,H) and optionally ∂_a v_i at component i·n + a.
#[derive(Debug, Clone)]
pub struct GreenFields {
    pub v: SampledField,
    pub w: SampledField,
    pub grad_v: Option<SampledField>,
}

impl GreenFields {
    pub fn zeros(grid: &HalfSpaceGrid, derivatives: bool) -> Self {
        Self {
            v: SampledField::zeros(grid, 1),
            w: SampledField::zeros(grid, 0),
            grad_v: derivatives.then(|| SampledField::zeros(grid, 2)),
        }
    }

    /// Shift Ψ to horizontal mean zero on the top level.
    pub fn normalize_pressure(&mut self) {
        let top = self.w.grid.nlevels() - 1;
        let plane = self.w.component_plane(top, 0);
        let mean = plane.iter().sum::<f64>() / plane.len() as f64;
        self.w.values.iter_mut().for_each(|v| *v -= mean);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample, LevelSpec};

    fn grid() -> HalfSpaceGrid {
        HalfSpaceGrid::with_levels(3, 2.0, 0.125, LevelSpec::spanning(0.25, 4.0, 2f64.sqrt()).levels()).unwrap()
    }

    fn bump(x: &[f64], c: [f64; 3]) -> f64 {
        let s = (0..3).map(|k| (x[k] - c[k]).powi(2)).sum::<f64>();
        if s < 1.0 {
            (-1.0 / (1.0 - s)).exp()
        } else {
            0.0
        }
    }

    #[test]
    fn config_validation() {
        assert!(PotentialConfig::new(3).validate().is_ok());
        assert!(PotentialConfig::new(4).with_path(EvalPath::Direct).validate().is_err());
        assert!(PotentialConfig::new(3).with_tail(TailPolicy::ZeroPad(1)).validate().is_err());
        let mut c = PotentialConfig::new(3);
        c.tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_sources_give_zero_fields() {
        let g = grid();
        for path in [EvalPath::Direct, EvalPath::Spectral] {
            let cfg = PotentialConfig::new(3).with_path(path);
            let f = SampledField::zeros(&g, 1);
            let h = SampledField::zeros(&g, 2);
            assert!(green_potential(&f, &h, &cfg).unwrap().is_zero());
            assert!(pressure_potential(&f, &h, &cfg).unwrap().is_zero());
        }
    }

    #[test]
    fn linear_in_the_force() {
        let g = grid();
        let f1 = sample(&g, 1, |x, o| o[0] = bump(x, [0.2, 0.0, 1.5])).unwrap();
        let f2 = sample(&g, 1, |x, o| o[2] = bump(x, [-0.3, 0.1, 1.8])).unwrap();
        let h = SampledField::zeros(&g, 2);
        for path in [EvalPath::Direct, EvalPath::Spectral] {
            let cfg = PotentialConfig::new(3).with_path(path);
            let (a, b) = (2.0, -0.7);
            let lhs = green_potential(&f1.scaled(a).axpy(b, &f2), &h, &cfg).unwrap();
            let rhs = green_potential(&f1, &h, &cfg).unwrap().scaled(a).axpy(b, &green_potential(&f2, &h, &cfg).unwrap());
            assert!(rel_sup_diff(&lhs, &rhs) < 1e-12, "{path:?}");
        }
    }
}
