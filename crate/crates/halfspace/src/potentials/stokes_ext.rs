//! Stokes extension of Dirichlet data: u = K_{x_n} ∗ f, π = (n k)_{x_n} ∗ f.
//!
//! Each slice is the exact linear convolution of the lattice-supported datum with the sampled
//! kernel (lattice sum times h^{n-1}); derivative fields use the closed-form kernel jets, so
//! −Δu + ∇π = 0 and div u = 0 hold to rounding.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, HalfSpaceGrid, SampledField};
use crate::kernels::{eval_terms, odqvist_pressure_terms, odqvist_velocity_terms, PowerTerm, MAXD};

use super::conv::PaddedConv;

/// Velocity, pressure and (optionally) the derivatives needed for residuals.
#[derive(Debug, Clone)]
pub struct StokesFields {
    pub u: SampledField,
    pub pi: SampledField,
    /// ∂_a u_i stored at component i·n + a.
    pub grad_u: Option<SampledField>,
    pub lap_u: Option<SampledField>,
    pub grad_pi: Option<SampledField>,
}

fn check_inputs(f: &BoundaryField, grid: &HalfSpaceGrid) -> Result<()> {
    if f.rank != 1 || f.dim != grid.dim {
        return Err(Error::Shape("boundary datum must be an n-vector field".into()));
    }
    if f.lattice != grid.lattice {
        return Err(Error::Shape("boundary datum and grid lattices differ".into()));
    }
    if grid.levels.is_empty() {
        return Err(Error::InvalidGrid("no vertical levels".into()));
    }
    if grid.step() > grid.levels[0] / 4.0 * (1.0 + 1e-12) {
        return Err(Error::Resolution(format!(
            "kernel under-resolved: h = {} > x_n/4 at the lowest level {}",
            grid.step(),
            grid.levels[0]
        )));
    }
    Ok(())
}

/// (𝓗f, 𝓔f).
pub fn stokes_extend(f: &BoundaryField, grid: &HalfSpaceGrid) -> Result<(SampledField, SampledField)> {
    let s = stokes_extend_full(f, grid, false)?;
    Ok((s.u, s.pi))
}

pub fn stokes_extend_full(f: &BoundaryField, grid: &HalfSpaceGrid, derivatives: bool) -> Result<StokesFields> {
    check_inputs(f, grid)?;
    let n = grid.dim;
    let d = n - 1;
    let pc = PaddedConv::new(&grid.lattice);
    let cell = grid.lattice.cell_volume();
    let fh: Vec<Vec<Complex64>> = (0..n).map(|j| pc.forward_plane(&f.component(j))).collect();
    let live: Vec<bool> = (0..n).map(|j| f.component(j).iter().any(|&v| v != 0.0)).collect();

    let mut u = SampledField::zeros(grid, 1);
    let mut pi = SampledField::zeros(grid, 0);
    let mut grad_u = derivatives.then(|| SampledField::zeros(grid, 2));
    let mut lap_u = derivatives.then(|| SampledField::zeros(grid, 1));
    let mut grad_pi = derivatives.then(|| SampledField::zeros(grid, 1));
    if f.is_zero() {
        return Ok(StokesFields { u, pi, grad_u, lap_u, grad_pi });
    }

    let vel_terms: Vec<Vec<Vec<PowerTerm>>> = (0..n)
        .map(|i| (0..n).map(|j| odqvist_velocity_terms(n, i, j)).collect())
        .collect();
    let pre_terms: Vec<Vec<PowerTerm>> = (0..n).map(|j| odqvist_pressure_terms(n, j)).collect();
    // jets per kernel: value, n gradient components, Laplacian
    let per = if derivatives { n + 2 } else { 1 };
    let zero = Complex64::new(0.0, 0.0);

    for (k, &t) in grid.levels.iter().enumerate() {
        let mut acc_u = vec![vec![zero; pc.len()]; n];
        let mut acc_gu = vec![vec![zero; pc.len()]; if derivatives { n * n } else { 0 }];
        let mut acc_lu = vec![vec![zero; pc.len()]; if derivatives { n } else { 0 }];
        let mut acc_p = vec![zero; pc.len()];
        let mut acc_gp = vec![vec![zero; pc.len()]; if derivatives { n } else { 0 }];
        let sample = |terms: &[PowerTerm]| {
            pc.forward_kernels(per, |xp, out| {
                let mut x = [0.0; MAXD];
                x[..d].copy_from_slice(xp);
                x[d] = t;
                let jet = eval_terms(terms, &x[..n]);
                out[0] = jet.value * cell;
                if derivatives {
                    for a in 0..n {
                        out[1 + a] = jet.grad[a] * cell;
                    }
                    out[n + 1] = jet.lap * cell;
                }
            })
        };
        for i in 0..n {
            for j in i..n {
                if !live[j] && !live[i] {
                    continue;
                }
                let kh = sample(&vel_terms[i][j]);
                // K is symmetric in (i, j): one kernel feeds both rows
                let mut targets = vec![(i, j)];
                if i != j {
                    targets.push((j, i));
                }
                for (row, col) in targets {
                    if !live[col] {
                        continue;
                    }
                    let fc = &fh[col];
                    for b in 0..pc.len() {
                        acc_u[row][b] += kh[0][b] * fc[b];
                    }
                    if derivatives {
                        for a in 0..n {
                            let g = &mut acc_gu[row * n + a];
                            for b in 0..pc.len() {
                                g[b] += kh[1 + a][b] * fc[b];
                            }
                        }
                        for b in 0..pc.len() {
                            acc_lu[row][b] += kh[n + 1][b] * fc[b];
                        }
                    }
                }
            }
        }
        for j in 0..n {
            if !live[j] {
                continue;
            }
            let kh = sample(&pre_terms[j]);
            for b in 0..pc.len() {
                acc_p[b] += kh[0][b] * fh[j][b];
            }
            if derivatives {
                for a in 0..n {
                    for b in 0..pc.len() {
                        acc_gp[a][b] += kh[1 + a][b] * fh[j][b];
                    }
                }
            }
        }
        for (i, spec) in acc_u.into_iter().enumerate() {
            u.set_component_plane(k, i, &pc.extract(spec));
        }
        pi.set_component_plane(k, 0, &pc.extract(acc_p));
        if let Some(g) = grad_u.as_mut() {
            for (c, spec) in acc_gu.into_iter().enumerate() {
                g.set_component_plane(k, c, &pc.extract(spec));
            }
        }
        if let Some(l) = lap_u.as_mut() {
            for (c, spec) in acc_lu.into_iter().enumerate() {
                l.set_component_plane(k, c, &pc.extract(spec));
            }
        }
        if let Some(g) = grad_pi.as_mut() {
            for (c, spec) in acc_gp.into_iter().enumerate() {
                g.set_component_plane(k, c, &pc.extract(spec));
            }
        }
    }
    Ok(StokesFields { u, pi, grad_u, lap_u, grad_pi })
}
