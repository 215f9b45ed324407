//! Dyadic Littlewood-Paley analysis on the periodic lattice [-L, L)^{n-1}: blocks, Triebel-Lizorkin
//! norms, the Ḣ^{-1/2, 2(n-1)} norm and the Poisson extension.
//!
//! Frequencies are angular, ξ = π k / L. The cutoff is φ = 1 on |ξ| <= 1, 0 on |ξ| >= 2 and
//! 1 − S(log2 |ξ|) in between, S the quintic smoothstep.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, HalfSpaceGrid, Lattice, SampledField};
use crate::numerics::fft::{freq_index, FftNd};
use crate::numerics::Neumaier;
use crate::tentspace::{weighted_tent_norm, TentParams};

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

/// Radial cutoff φ(|ξ|).
pub fn phi(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        1.0 - smoothstep(r.log2())
    }
}

/// ψ(ξ) = φ(ξ) − φ(2ξ).
pub fn psi(r: f64) -> f64 {
    phi(r) - phi(2.0 * r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LPFilterBank {
    pub lattice: Lattice,
    pub j_min: i32,
    pub j_max: i32,
}

impl LPFilterBank {
    /// Blocks covering every nonzero frequency of the lattice.
    pub fn new(lattice: &Lattice) -> Self {
        let d = lattice.hdim as f64;
        let side_len = lattice.side as f64 * lattice.step;
        let xi_min = 2.0 * std::f64::consts::PI / side_len;
        let xi_max = d.sqrt() * std::f64::consts::PI / lattice.step;
        Self {
            lattice: lattice.clone(),
            j_min: xi_min.log2().floor() as i32,
            j_max: xi_max.log2().ceil() as i32,
        }
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i32> {
        self.j_min..=self.j_max
    }

    pub fn weight(&self, j: i32, r: f64) -> f64 {
        psi(r * 2f64.powi(-j))
    }

    /// |ξ| at every bin of the transform, row-major.
    pub fn radii(&self) -> Vec<f64> {
        frequency_radii(&self.lattice)
    }

    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "j_min": self.j_min,
            "j_max": self.j_max,
            "cutoff": "phi = 1 - smoothstep5(log2|xi|) on [1,2]",
            "frequency_unit": "angular, pi/L",
        })
    }

    /// max over nonzero bins of |Σ_j ψ_j(ξ) − 1|.
    pub fn partition_error(&self) -> f64 {
        self.radii()
            .iter()
            .filter(|&&r| r > 0.0)
            .map(|&r| {
                let s: f64 = self.indices().map(|j| self.weight(j, r)).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn frequency_radii(lat: &Lattice) -> Vec<f64> {
    let d = lat.hdim;
    let n = lat.side;
    let unit = 2.0 * std::f64::consts::PI / (n as f64 * lat.step);
    let mut ks = vec![0usize; d];
    (0..lat.len())
        .map(|idx| {
            lat.unravel(idx, &mut ks);
            ks.iter()
                .map(|&k| (freq_index(k, n) as f64 * unit).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Angular frequency vector of one bin.
pub fn frequency_vector(lat: &Lattice, idx: usize, out: &mut [f64]) {
    let n = lat.side;
    let unit = 2.0 * std::f64::consts::PI / (n as f64 * lat.step);
    let mut rem = idx;
    for a in (0..lat.hdim).rev() {
        out[a] = freq_index(rem % n, n) as f64 * unit;
        rem /= n;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TLParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

impl TLParams {
    pub fn new(s: f64, p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) || !(q >= 1.0) || !p.is_finite() || !q.is_finite() || !s.is_finite() {
            return Err(Error::OutOfRange(format!(
                "Triebel-Lizorkin parameters need finite p, q >= 1 (s = {s}, p = {p}, q = {q})"
            )));
        }
        Ok(Self { s, p, q })
    }
}

/// Forward transforms of every component.
fn spectra(f: &BoundaryField) -> (FftNd, Vec<Vec<Complex64>>) {
    let fft = FftNd::new(&f.lattice.shape());
    let nc = f.ncomp();
    let specs = (0..nc)
        .map(|c| {
            let mut a: Vec<Complex64> = f.component(c).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            fft.forward(&mut a);
            a
        })
        .collect();
    (fft, specs)
}

fn apply_multiplier(fft: &FftNd, spec: &[Complex64], m: &[f64]) -> Vec<f64> {
    let mut a: Vec<Complex64> = spec.iter().zip(m).map(|(z, w)| z * w).collect();
    fft.inverse(&mut a);
    a.into_iter().map(|z| z.re).collect()
}

fn interleave(dim: usize, lat: &Lattice, rank: usize, comps: Vec<Vec<f64>>) -> BoundaryField {
    let nc = comps.len();
    let mut values = vec![0.0; lat.len() * nc];
    for (c, comp) in comps.into_iter().enumerate() {
        for (i, v) in comp.into_iter().enumerate() {
            values[i * nc + c] = v;
        }
    }
    BoundaryField {
        dim,
        lattice: lat.clone(),
        rank,
        values,
    }
}

/// Δ̇_j f = F^{-1}(ψ_j F f), componentwise.
pub fn lp_block(f: &BoundaryField, j: i32) -> Result<BoundaryField> {
    let bank = LPFilterBank::new(&f.lattice);
    if !bank.indices().contains(&j) {
        return Err(Error::OutOfRange(format!(
            "block {j} outside the active range {}..={}",
            bank.j_min, bank.j_max
        )));
    }
    let (fft, specs) = spectra(f);
    let m: Vec<f64> = bank.radii().iter().map(|&r| bank.weight(j, r)).collect();
    let comps = specs.iter().map(|s| apply_multiplier(&fft, s, &m)).collect();
    Ok(interleave(f.dim, &f.lattice, f.rank, comps))
}

/// ‖(Σ_j (2^{js} |Δ̇_j f|)^q)^{1/q}‖_{L^p}.
pub fn tl_norm(f: &BoundaryField, params: &TLParams) -> Result<f64> {
    TLParams::new(params.s, params.p, params.q)?;
    let bank = LPFilterBank::new(&f.lattice);
    let (fft, specs) = spectra(f);
    let radii = bank.radii();
    let n = f.lattice.len();
    let mut inner = vec![0.0; n];
    for j in bank.indices() {
        let m: Vec<f64> = radii.iter().map(|&r| bank.weight(j, r)).collect();
        if m.iter().all(|&w| w == 0.0) {
            continue;
        }
        let mut mag2 = vec![0.0; n];
        for s in &specs {
            let b = apply_multiplier(&fft, s, &m);
            for (a, v) in mag2.iter_mut().zip(b) {
                *a += v * v;
            }
        }
        let scale = 2f64.powf(j as f64 * params.s);
        for (acc, m2) in inner.iter_mut().zip(mag2) {
            *acc += (scale * m2.sqrt()).powf(params.q);
        }
    }
    let mut acc = Neumaier::new();
    for v in inner {
        acc.add(v.powf(params.p / params.q));
    }
    Ok((acc.value() * f.lattice.cell_volume()).powf(1.0 / params.p))
}

/// Ḣ^{-1/2, 2(n-1)} norm realized as Ḟ^{-1/2}_{2(n-1), 2}.
pub fn sobolev_neg_half_norm(f: &BoundaryField) -> Result<f64> {
    let p = 2.0 * (f.dim - 1) as f64;
    tl_norm(f, &TLParams::new(-0.5, p, 2.0)?)
}

/// ‖F^{-1}(|ξ|^s F f)‖_{L^p}, the multiplier-side comparison for q = 2 (zero mode dropped).
pub fn riesz_multiplier_norm(f: &BoundaryField, s: f64, p: f64) -> Result<f64> {
    let (fft, specs) = spectra(f);
    let m: Vec<f64> = frequency_radii(&f.lattice)
        .iter()
        .map(|&r| if r > 0.0 { r.powf(s) } else { 0.0 })
        .collect();
    let n = f.lattice.len();
    let mut mag2 = vec![0.0; n];
    for sp in &specs {
        for (a, v) in mag2.iter_mut().zip(apply_multiplier(&fft, sp, &m)) {
            *a += v * v;
        }
    }
    let mut acc = Neumaier::new();
    for v in mag2 {
        acc.add(v.sqrt().powf(p));
    }
    Ok((acc.value() * f.lattice.cell_volume()).powf(1.0 / p))
}

/// Harmonic extension: slice t is F^{-1}(e^{-|ξ| t} F f) (periodic convolution with P_t).
pub fn poisson_extend(f: &BoundaryField, grid: &HalfSpaceGrid) -> Result<SampledField> {
    if grid.levels.is_empty() {
        return Err(Error::InvalidGrid("no vertical levels".into()));
    }
    if grid.lattice != f.lattice || grid.dim != f.dim {
        return Err(Error::Shape("boundary field and grid lattices differ".into()));
    }
    let (fft, specs) = spectra(f);
    let radii = frequency_radii(&f.lattice);
    let mut out = SampledField::zeros(grid, f.rank);
    for (k, &t) in grid.levels.iter().enumerate() {
        let m: Vec<f64> = radii.iter().map(|r| (-r * t).exp()).collect();
        for (c, s) in specs.iter().enumerate() {
            out.set_component_plane(k, c, &apply_multiplier(&fft, s, &m));
        }
    }
    Ok(out)
}

/// (‖f‖_{Ḟ^{-1/q}_{p,q}}, ‖A_q[P_{x_n} ∗ f]‖_{L^p}) with p = q(q−1)(n−1).
pub fn poisson_tent_equivalence_check(
    f: &BoundaryField,
    q: f64,
    grid: &HalfSpaceGrid,
) -> Result<(f64, f64)> {
    if !(q > 1.0) || !q.is_finite() {
        return Err(Error::ExponentRelation(format!("need 1 < q < ∞, got {q}")));
    }
    let p = q * (q - 1.0) * (f.dim - 1) as f64;
    if p < 1.0 {
        return Err(Error::ExponentRelation(format!("p = q(q-1)(n-1) = {p} < 1")));
    }
    let tl = tl_norm(f, &TLParams::new(-1.0 / q, p, q)?)?;
    let ext = poisson_extend(f, grid)?;
    let tent = weighted_tent_norm(&ext, &TentParams::plain(p, q)?)?;
    Ok((tl, tent))
}

/// Subtract the lattice mean of every component.
pub fn remove_mean(f: &BoundaryField) -> BoundaryField {
    let nc = f.ncomp();
    let n = f.lattice.len() as f64;
    let mut out = f.clone();
    for c in 0..nc {
        let m: f64 = f.values.iter().skip(c).step_by(nc).sum::<f64>() / n;
        out.values.iter_mut().skip(c).step_by(nc).for_each(|v| *v -= m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, LevelSpec};
    use crate::kernels::poisson_p;
    use std::f64::consts::PI;

    fn lattice() -> Lattice {
        Lattice::full(2, 4.0, 1.0 / 16.0).unwrap()
    }

    fn wavelet(lat: &Lattice, w: f64) -> BoundaryField {
        let f = BoundaryField::sample_scalar(3, lat, |x| {
            let r2 = (x[0] * x[0] + x[1] * x[1]) / (w * w);
            (1.0 - r2) * (-r2).exp()
        })
        .unwrap();
        remove_mean(&f)
    }

    #[test]
    fn partition_of_unity() {
        for lat in [lattice(), Lattice::full(1, 2.0, 1.0 / 32.0).unwrap(), Lattice::full(3, 2.0, 1.0 / 4.0).unwrap()] {
            assert!(LPFilterBank::new(&lat).partition_error() <= 1e-12);
        }
    }

    #[test]
    fn blocks_sum_back_and_are_orthogonal() {
        let lat = lattice();
        let f = wavelet(&lat, 0.4);
        let bank = LPFilterBank::new(&lat);
        let mut sum = vec![0.0; lat.len()];
        for j in bank.indices() {
            let b = lp_block(&f, j).unwrap();
            sum.iter_mut().zip(&b.values).for_each(|(s, v)| *s += v);
        }
        let err = sum.iter().zip(&f.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10 * f.max_abs().max(1.0), "{err}");
        let b = lp_block(&lp_block(&f, 2).unwrap(), 4).unwrap();
        assert!(b.max_abs() < 1e-12);
        assert!(lp_block(&f, bank.j_max + 1).is_err());
    }

    #[test]
    fn single_frequency_lives_in_its_blocks() {
        let lat = lattice();
        // bin ξ = π/2 ≈ 1.57, inside the transition band of ψ_0 and ψ_1
        let xi = PI / 2.0;
        let f = BoundaryField::sample_scalar(3, &lat, |x| (xi * x[0]).cos()).unwrap();
        let b0 = lp_block(&f, 0).unwrap();
        let expect = psi(xi);
        for (v, o) in b0.values.iter().zip(&f.values) {
            assert!((v - expect * o).abs() < 1e-12);
        }
        for j in [-1, 2, 3, 4] {
            assert!(lp_block(&f, j).unwrap().max_abs() < 1e-12, "block {j}");
        }
    }

    #[test]
    fn dyadic_dilation_law() {
        let lat = lattice();
        let f = wavelet(&lat, 0.5);
        // f(2·) sampled on the lattice shrunk by 2 has the same node values
        let f2 = BoundaryField {
            lattice: lat.shrunk(2.0),
            ..f.clone()
        };
        let params = TLParams::new(-0.5, 4.0, 2.0).unwrap();
        let a = tl_norm(&f, &params).unwrap();
        let b = tl_norm(&f2, &params).unwrap();
        assert!((b / a - 0.5).abs() < 1e-6, "{}", b / a);
        let sa = sobolev_neg_half_norm(&f).unwrap();
        let sb = sobolev_neg_half_norm(&f2).unwrap();
        assert!((sb / sa - 0.5).abs() < 1e-6);
    }

    #[test]
    fn single_block_norm_is_lp_norm() {
        let lat = lattice();
        // all four bins share |ξ| = √2·5π/4, so |Δ_j f| = ψ_j(|ξ|)·|f| pointwise
        let xi = PI * 5.0 / 4.0;
        let f = BoundaryField::sample_scalar(3, &lat, |x| (xi * x[0]).cos() * (xi * x[1]).cos()).unwrap();
        let r = (2.0f64).sqrt() * xi;
        let bank = LPFilterBank::new(&lat);
        let ws: Vec<f64> = bank.indices().map(|j| bank.weight(j, r)).collect();
        let params = TLParams::new(0.0, 3.0, 2.0).unwrap();
        let norm = tl_norm(&f, &params).unwrap();
        let lp = crate::tentspace::boundary_lp(&f, 3.0);
        let l2w: f64 = ws.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!((norm / (lp * l2w) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn poisson_extension_basics() {
        let g = make_grid(3, 4.0, 1.0 / 16.0, &LevelSpec::new(1.0 / 16.0, 2.0, 8)).unwrap();
        let one = BoundaryField::sample_scalar(3, &g.lattice, |_| 1.0).unwrap();
        let u = poisson_extend(&one, &g).unwrap();
        assert!(u.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((poisson_p(&[0.0, 0.0], 1.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let zero = BoundaryField::zeros(3, &g.lattice, 1);
        assert!(poisson_extend(&zero, &g).unwrap().is_zero());
    }

    #[test]
    fn poisson_semigroup() {
        let lat = lattice();
        let f = wavelet(&lat, 0.3);
        let g1 = HalfSpaceGrid::with_levels(3, 4.0, 1.0 / 16.0, vec![0.25]).unwrap();
        let g2 = HalfSpaceGrid::with_levels(3, 4.0, 1.0 / 16.0, vec![0.5]).unwrap();
        let once = poisson_extend(&f, &g1).unwrap();
        let b = BoundaryField {
            values: once.values.clone(),
            ..f.clone()
        };
        let twice = poisson_extend(&b, &g1).unwrap();
        let direct = poisson_extend(&f, &g2).unwrap();
        let err = twice.values.iter().zip(&direct.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8 * f.max_abs());
    }

    #[test]
    fn extension_matches_kernel_convolution() {
        // periodic extension vs direct sum with P_t for a localized datum, away from wrap effects
        let lat = Lattice::full(2, 8.0, 1.0 / 8.0).unwrap();
        let f = BoundaryField::sample_scalar(3, &lat, |x| (-(x[0] * x[0] + x[1] * x[1]) * 4.0).exp()).unwrap();
        let g = HalfSpaceGrid::with_levels(3, 8.0, 1.0 / 8.0, vec![0.5]).unwrap();
        let u = poisson_extend(&f, &g).unwrap();
        let centre = lat.ravel(&[64, 64]);
        let mut direct = 0.0;
        let mut y = [0.0; 2];
        for idx in 0..lat.len() {
            lat.point(idx, &mut y);
            direct += poisson_p(&[-y[0], -y[1]], 0.5).unwrap() * f.values[idx] * lat.cell_volume();
        }
        assert!((u.values[centre] / direct - 1.0).abs() < 2e-3, "{} vs {direct}", u.values[centre]);
    }

    #[test]
    fn equivalence_pair_positive() {
        let g = make_grid(3, 4.0, 1.0 / 16.0, &LevelSpec::new(1.0 / 64.0, 2.0, 10)).unwrap();
        let f = wavelet(&g.lattice, 0.4);
        let (a, b) = poisson_tent_equivalence_check(&f, 2.0, &g).unwrap();
        assert!(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite());
        let z = BoundaryField::zeros(3, &g.lattice, 0);
        assert_eq!(poisson_tent_equivalence_check(&z, 2.0, &g).unwrap(), (0.0, 0.0));
        assert!(poisson_tent_equivalence_check(&f, 1.0, &g).is_err());
    }
}
